//! Acceptance suite: one PASS/FAIL line per criterion, at full scale.
//!
//! Criteria listed in `UNATTAINED` are reported but do not fail the run; every
//! other failure exits non-zero.

use std::collections::HashSet;
use std::path::Path;
use std::time::{Duration, Instant};

use qpdyn_core::arithmetic::{diophantine_check, discrepancy, shift_orbit, DiophantineParams};
use qpdyn_core::dynamics::{
    amplitude_table_parseval, averaged_moment_direct, averaged_moment_parseval, fit_log_exponent,
    moment_series, ParsevalOptions, Propagator,
};
use qpdyn_core::greens::{
    bad_set, combes_thomas_probe, fit_sublinear_exponent, greens_on_points,
    verify_resolvent_identity, ClassificationParams, ComplexEnergy,
};
use qpdyn_core::lattice::{
    box_points, enumerate_shapes, shape_count, width, GeneralizedRegion, LatticePoint, Region,
};
use qpdyn_core::operator::{
    DecayBound, Kernel, OperatorSpec, PotentialSpec, ShiftDynamics, ShiftMode, StateVector,
    ToeplitzKernel, TrigPolynomial, TrigTerm,
};
use qpdyn_core::{Complex64, GOLDEN_MEAN};
use qpdyn_harness::{run, ExperimentConfig, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNATTAINED: &[&str] = &["localized-regime", "sublinear-bad-set"];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn amo() -> OperatorSpec {
    OperatorSpec::almost_mathieu(3.0, GOLDEN_MEAN, 0.3)
}

fn origin() -> StateVector {
    StateVector::delta(LatticePoint::new(vec![0]))
}

fn route_equivalence() -> Verdict {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (name, spec) in [("free", OperatorSpec::free_laplacian(1)), ("amo", amo())] {
        let prop = Propagator::new(&spec, 128).unwrap();
        for t in [5.0, 20.0, 50.0] {
            let d = averaged_moment_direct(&prop, &origin(), 2.0, t).unwrap();
            let p = averaged_moment_parseval(&prop, &origin(), 2.0, t, ParsevalOptions::default())
                .unwrap();
            let rel = (d.value - p.value).abs() / d.value;
            worst = worst.max(rel);
            notes.push(format!("{name} T={t}: {rel:.1e}"));
        }
    }
    verdict(
        worst <= 1e-6,
        format!("max relative deviation {worst:.2e} ({})", notes.join(", ")),
    )
}

fn normalization() -> Verdict {
    let mut worst = 0.0f64;
    for spec in [OperatorSpec::free_laplacian(1), amo()] {
        let prop = Propagator::new(&spec, 128).unwrap();
        let table = amplitude_table_parseval(
            &prop,
            &LatticePoint::new(vec![0]),
            20.0,
            ParsevalOptions::default(),
        )
        .unwrap();
        worst = worst.max((table.total() - 1.0).abs());
    }
    verdict(worst <= 1e-6, format!("max |Σa - 1| = {worst:.2e}"))
}

fn ballistic() -> Verdict {
    let prop = Propagator::new(&OperatorSpec::free_laplacian(1), 256).unwrap();
    let early: Vec<f64> = (0..=38).map(|k| 1.0 + 0.5 * k as f64).collect();
    let series = moment_series(&prop, &origin(), 2.0, &early).unwrap();
    let worst = series
        .samples
        .iter()
        .map(|s| (s.value / (2.0 * s.t * s.t) - 1.0).abs())
        .fold(0.0, f64::max);
    // The fit needs two decades of t; the box holds the front up to t ≈ 110.
    let grid: Vec<f64> = (0..40)
        .map(|k| 1.1 * 100f64.powf(k as f64 / 39.0))
        .collect();
    let long = moment_series(&prop, &origin(), 2.0, &grid).unwrap();
    let samples: Vec<(f64, f64)> = long.samples.iter().map(|s| (s.t, s.value)).collect();
    let fit = fit_log_exponent(&samples).unwrap();
    verdict(
        worst <= 0.01 && fit.non_logarithmic,
        format!(
            "max |<X²>/2t² - 1| = {worst:.1e} on [1, 20]; power exponent {:.4}, non_logarithmic = {}, leakage {:.1e}",
            fit.power_exponent,
            fit.non_logarithmic,
            long.max_leakage()
        ),
    )
}

fn localized_regime() -> Verdict {
    let prop = Propagator::new(&amo(), 2048).unwrap();
    let times: Vec<f64> = (0..41)
        .map(|k| 100.0 * 100f64.powf(k as f64 / 40.0))
        .collect();
    let series = moment_series(&prop, &origin(), 2.0, &times).unwrap();
    let m0 = series.samples[0].value;
    let c = m0 / 100f64.ln().powi(3);
    let mut breaches = 0;
    let mut first = None;
    let mut ratio = 0.0f64;
    for s in &series.samples {
        let bound = c * s.t.ln().powi(3);
        if s.value > bound * (1.0 + 1e-12) {
            breaches += 1;
            first.get_or_insert((s.t, s.value, bound));
        }
        ratio = ratio.max(s.value / m0);
    }
    let envelope = match first {
        Some((t, v, b)) => {
            format!("{breaches}/41 samples exceed C(ln t)³, first at t={t:.1} (m={v:.3} > {b:.3})")
        }
        None => "stays below C(ln t)³".into(),
    };
    verdict(
        breaches == 0 && ratio <= 10.0,
        format!(
            "m(100) = {m0:.4}, C = {c:.3e}; {envelope}; max m(t)/m(100) = {ratio:.2}; leakage {:.1e}",
            series.max_leakage()
        ),
    )
}

fn sublinear_bad_set() -> Verdict {
    let spec = amo();
    let z = ComplexEnergy::from_time(0.0, 1e3).unwrap();
    let params = ClassificationParams::for_spec(&spec);
    let mut counts = Vec::new();
    for n in [50u64, 100, 200] {
        let n1 = (n as f64).powf(0.3).ceil() as u64;
        counts.push((n, bad_set(&spec, n, n1, z, &params).unwrap().count()));
    }
    let fractions: Vec<f64> = counts.iter().map(|&(n, c)| c as f64 / n as f64).collect();
    let nonincreasing = fractions.windows(2).all(|w| w[1] <= w[0]);
    let fit = fit_sublinear_exponent(&counts).unwrap();
    verdict(
        nonincreasing && fit.delta > 0.0,
        format!(
            "E=0, c2={}: bad counts {:?}, fractions {:.3?}, delta = {:.3} (band {:.3}..{:.3}), residual {:.3}",
            params.c2, counts, fractions, fit.delta, fit.band.0, fit.band.1, fit.rms_residual
        ),
    )
}

/// The model families exercised by the randomized checks.
fn random_model(rng: &mut ChaCha8Rng, kind: usize) -> OperatorSpec {
    let x = rng.random::<f64>();
    let lambda = rng.random_range(0.3..4.0);
    match kind % 6 {
        0 => OperatorSpec::almost_mathieu(lambda, GOLDEN_MEAN, x),
        1 => OperatorSpec::new(
            1,
            Kernel::Zero,
            PotentialSpec {
                v: TrigPolynomial::cosine(2.0),
                coupling: 1.0,
            },
            ShiftDynamics {
                mode: ShiftMode::LinearForm,
                alpha: vec![GOLDEN_MEAN],
                phase: vec![x],
            },
        )
        .unwrap(),
        2 => OperatorSpec::new(
            2,
            Kernel::Laplacian,
            PotentialSpec {
                v: TrigPolynomial::cosine(2.0),
                coupling: lambda,
            },
            ShiftDynamics {
                mode: ShiftMode::RankOne,
                alpha: vec![GOLDEN_MEAN, 2f64.sqrt() - 1.0],
                phase: vec![x],
            },
        )
        .unwrap(),
        3 => {
            let v = TrigPolynomial::new(
                2,
                vec![
                    TrigTerm {
                        freq: vec![1, 0],
                        cos: 1.0,
                        sin: 0.0,
                    },
                    TrigTerm {
                        freq: vec![0, 1],
                        cos: 0.0,
                        sin: 0.7,
                    },
                ],
            )
            .unwrap();
            OperatorSpec::new(
                2,
                Kernel::Laplacian,
                PotentialSpec {
                    v,
                    coupling: lambda,
                },
                ShiftDynamics {
                    mode: ShiftMode::Product,
                    alpha: vec![GOLDEN_MEAN, 3f64.sqrt() - 1.0],
                    phase: vec![x, rng.random::<f64>()],
                },
            )
            .unwrap()
        }
        k => {
            let d = if k == 4 { 1 } else { 2 };
            let mut terms = vec![(
                LatticePoint::origin(d),
                Complex64::new(rng.random_range(-1.0..1.0), 0.0),
            )];
            for off in box_points(&vec![-3; d], &vec![3; d]) {
                let first = off.coords().iter().find(|&&c| c != 0).copied();
                if first.is_some_and(|c| c > 0) {
                    let s =
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                            * (-(off.norm() as f64)).exp()
                            * 0.7;
                    terms.push((off.neg(), s.conj()));
                    terms.push((off, s));
                }
            }
            let kernel = Kernel::Toeplitz(
                ToeplitzKernel::new(
                    terms,
                    DecayBound {
                        amplitude: 1.0,
                        rate: 1.0,
                    },
                )
                .unwrap(),
            );
            let mode = if d == 1 {
                ShiftMode::LinearForm
            } else {
                ShiftMode::RankOne
            };
            let alpha = if d == 1 {
                vec![GOLDEN_MEAN]
            } else {
                vec![GOLDEN_MEAN, 0.5 * GOLDEN_MEAN]
            };
            OperatorSpec::new(
                d,
                kernel,
                PotentialSpec {
                    v: TrigPolynomial::cosine(1.5),
                    coupling: lambda,
                },
                ShiftDynamics {
                    mode,
                    alpha,
                    phase: vec![x],
                },
            )
            .unwrap()
        }
    }
}

/// A random volume of at most 400 sites.
fn random_volume(rng: &mut ChaCha8Rng, d: usize) -> Vec<LatticePoint> {
    let keep = rng.random_range(0.5..1.0);
    let pts = if d == 1 {
        let r = rng.random_range(5..200);
        box_points(&[-r], &[r])
    } else {
        let (a, b) = (rng.random_range(2..10), rng.random_range(2..10));
        box_points(&[-a, -b], &[a, b])
    };
    let mut out: Vec<LatticePoint> = pts.into_iter().filter(|_| rng.random_bool(keep)).collect();
    if out.len() < 2 {
        out = box_points(&vec![0; d], &vec![1; d]);
    }
    out
}

fn resolvent_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut largest = 0;
    for trial in 0..50 {
        let spec = random_model(&mut rng, trial);
        let pts = random_volume(&mut rng, spec.dim());
        largest = largest.max(pts.len());
        let (mut p1, mut p2): (Vec<_>, Vec<_>) =
            pts.into_iter().partition(|_| rng.random_bool(0.5));
        if p1.is_empty() {
            p1.push(p2.pop().unwrap());
        }
        if p2.is_empty() {
            p2.push(p1.pop().unwrap());
        }
        let k = spec.spectral_bound();
        let z = ComplexEnergy::new(rng.random_range(-k..k), rng.random_range(0.1..1.0)).unwrap();
        worst = worst.max(
            verify_resolvent_identity(&spec, &p1, &p2, z)
                .unwrap()
                .deviation,
        );
    }
    verdict(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over 50 splits (largest volume {largest} sites)"),
    )
}

fn combes_thomas() -> Verdict {
    let oracle = (2.0f64 + 3f64.sqrt()).ln();
    let free = combes_thomas_probe(&OperatorSpec::free_laplacian(1), 64, 4.0, 0.0).unwrap();
    let spec = amo();
    let at_k = combes_thomas_probe(&spec, 64, spec.spectral_bound(), 0.0).unwrap();
    let rel = (free.rate - oracle).abs() / oracle;
    verdict(
        rel <= 0.05 && at_k.rate > 0.0,
        format!(
            "free rate {:.5} vs arccosh(2) = {oracle:.5} ({rel:.1e}); AMO at E=K rate {:.4}",
            free.rate, at_k.rate
        ),
    )
}

fn norm_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let spec = random_model(&mut rng, trial);
        let pts = random_volume(&mut rng, spec.dim());
        let k = spec.spectral_bound();
        let eps = 10f64.powf(rng.random_range(-3.0..0.5));
        let z = ComplexEnergy::new(rng.random_range(-k - 1.0..k + 1.0), eps).unwrap();
        let norm = greens_on_points(&spec, &pts, z).unwrap().norm().unwrap();
        worst = worst.max(norm * eps);
        if norm > (1.0 + 1e-10) / eps {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations; max ε‖G‖ = {worst:.12}"),
    )
}

fn discrepancy_bound() -> Verdict {
    let mut scaled = Vec::new();
    for n in [100usize, 1000, 10000] {
        let d = discrepancy(&shift_orbit(&[GOLDEN_MEAN], &[0.0], n).unwrap())
            .unwrap()
            .value;
        scaled.push(n as f64 * d / (n as f64).ln().powi(2));
    }
    let n = 64;
    let grid: Vec<Vec<f64>> = (0..n).map(|k| vec![k as f64 / n as f64]).collect();
    let equal = discrepancy(&grid).unwrap().value;
    verdict(
        scaled.iter().all(|&s| s <= 3.0) && equal == 1.0 / n as f64,
        format!(
            "N·D_N/(log N)² = {scaled:.4?}; equally spaced N={n}: D_N = {equal} (1/N = {})",
            1.0 / n as f64
        ),
    )
}

fn diophantine() -> Verdict {
    let params = DiophantineParams {
        kappa: 1.01,
        tau: 0.3,
        kmax: 1_000_000,
    };
    let golden = diophantine_check(&[GOLDEN_MEAN], params).unwrap();
    let half = diophantine_check(&[0.5], params).unwrap();
    verdict(
        golden.pass && !half.pass && half.worst_k == [2],
        format!(
            "golden pass={} (margin {:.4}, worst k {:?}); 1/2 pass={} at k {:?}",
            golden.pass, golden.margin, golden.worst_k, half.pass, half.worst_k
        ),
    )
}

/// Width straight from its definition: every member `n` sits in an
/// elementary region `M'` of size `m` inside the set, and every other member
/// within distance `< m/2` of `n` lies in `M'`.
fn naive_width(pts: &HashSet<LatticePoint>, d: usize, max_m: u64) -> u64 {
    let mut best = 0;
    for m in 1..=max_m {
        let shapes = enumerate_shapes(d, m).unwrap();
        let ball = box_points(&vec![-(m as i64); d], &vec![m as i64; d]);
        let ok = pts.iter().all(|n| {
            let near: Vec<LatticePoint> = ball
                .iter()
                .filter(|o| 2 * o.norm() < m)
                .map(|o| n.add(o))
                .filter(|p| pts.contains(p))
                .collect();
            shapes.iter().any(|shape| {
                let offsets = shape.points();
                offsets.iter().any(|q| {
                    let cand: HashSet<LatticePoint> =
                        offsets.iter().map(|o| o.add(n).sub(q)).collect();
                    cand.iter().all(|c| pts.contains(c)) && near.iter().all(|p| cand.contains(p))
                })
            })
        });
        if ok {
            best = m;
        }
    }
    best
}

fn geometry() -> Verdict {
    let counts = (
        shape_count(2),
        shape_count(3),
        enumerate_shapes(2, 3).unwrap().len(),
        enumerate_shapes(3, 2).unwrap().len(),
    );
    let mut regions = 0;
    let mut mismatches = Vec::new();
    let mut check = |r: GeneralizedRegion| {
        let pts: HashSet<LatticePoint> = r.points().into_iter().collect();
        if pts.is_empty() || pts.len() > 200 {
            return;
        }
        regions += 1;
        let diam = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| a.dist(b)))
            .max()
            .unwrap();
        let d = r.dim();
        let naive = naive_width(&pts, d, diam / 2 + 1);
        let (got_w, got_d) = (width(&r).unwrap(), r.diameter().unwrap());
        if got_w != naive || got_d != diam {
            mismatches.push(format!(
                "{r:?}: width {got_w} vs {naive}, diameter {got_d} vs {diam}"
            ));
        }
    };
    for h in 0..=24u64 {
        check(GeneralizedRegion::rectangle(LatticePoint::new(vec![0]), vec![h]).unwrap());
        let h = h as i64;
        for y in 1..=2 * h + 1 {
            check(
                GeneralizedRegion::new(
                    LatticePoint::new(vec![0]),
                    vec![h as u64],
                    Some(LatticePoint::new(vec![y])),
                )
                .unwrap(),
            );
        }
    }
    for a in 0..=4u64 {
        for b in a..=4u64 {
            check(GeneralizedRegion::rectangle(LatticePoint::new(vec![0, 0]), vec![a, b]).unwrap());
            let (ya, yb) = (2 * a as i64 + 1, 2 * b as i64 + 1);
            for y1 in 0..=ya {
                for y2 in -yb..=yb {
                    if y1 == 0 && y2 <= 0 {
                        continue;
                    }
                    let cut = LatticePoint::new(vec![y1, y2]);
                    check(
                        GeneralizedRegion::new(
                            LatticePoint::new(vec![0, 0]),
                            vec![a, b],
                            Some(cut),
                        )
                        .unwrap(),
                    );
                }
            }
        }
    }
    let pass = counts == (5, 21, 5, 21) && mismatches.is_empty();
    let mut detail = format!(
        "shape counts d=2: {}, d=3: {}; {regions} regions vs exhaustive oracles, {} mismatches",
        counts.0,
        counts.1,
        mismatches.len()
    );
    if let Some(m) = mismatches.first() {
        detail.push_str(&format!("; first: {m}"));
    }
    verdict(pass, detail)
}

const SWEEP: &str = r#"
experiment = "determinism"
recipe = "bad-set-scan"

[model]
potential = [{ freq = [1], cos = 6.0 }]
alpha = [0.6180339887498949]
phase = [0.3]

[scan]
sizes = [12, 24, 48]
averaging_times = [100.0]

[[sweep]]
key = "scan.energies"
values = [-3.0, -1.5, 0.0, 1.5, 3.0]

[[sweep]]
key = "model.phase"
values = [0.1, 0.3, 0.7]
"#;

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv") && p.file_name().unwrap() != "timings.csv"
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Verdict {
    let cfg = ExperimentConfig::from_toml_str(SWEEP).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for w in [1usize, 4, 8] {
        let dir = tmp.path().join(format!("w{w}"));
        let opts = RunOptions {
            out_dir: Some(dir.clone()),
            workers: Some(w),
            ..Default::default()
        };
        run(&cfg, &opts).unwrap();
        bodies.push(csv_bodies(&dir));
    }
    let rows: usize = bodies[0]
        .iter()
        .map(|(_, b)| b.iter().filter(|&&c| c == b'\n').count())
        .sum();
    let same = bodies.windows(2).all(|w| w[0] == w[1]) && !bodies[0].is_empty();
    verdict(
        same,
        format!(
            "{} CSV files, {rows} lines, identical for workers 1, 4, 8: {same}",
            bodies[0].len()
        ),
    )
}

fn main() {
    type Check = (&'static str, u64, fn() -> Verdict);
    let checks: &[Check] = &[
        ("route-equivalence", 120, route_equivalence),
        ("normalization", 60, normalization),
        ("ballistic-control", 60, ballistic),
        ("localized-regime", 600, localized_regime),
        ("sublinear-bad-set", 600, sublinear_bad_set),
        ("resolvent-identity", 60, resolvent_identity),
        ("combes-thomas", 60, combes_thomas),
        ("norm-bound", 60, norm_bound),
        ("discrepancy-bound", 60, discrepancy_bound),
        ("diophantine", 60, diophantine),
        ("geometry", 60, geometry),
        ("determinism", 120, determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut unexpected = Vec::new();
    let mut tolerated = 0;
    for &(id, budget, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let v = f();
        let elapsed = clock.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = v.pass && in_time;
        let timing = format!("{:.2}s of {budget}s", elapsed.as_secs_f64());
        println!(
            "{} {id}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !pass {
            if UNATTAINED.contains(&id) {
                tolerated += 1;
            } else {
                unexpected.push(id);
            }
        }
    }
    if tolerated > 0 {
        println!("{tolerated} known-unattained criteria reported above");
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
