use std::collections::BTreeSet;

use proptest::prelude::*;
use qpdyn_core::arithmetic::{
    continued_fraction, diophantine_check, discrepancy, dist_to_int, shift_orbit, DiophantineParams,
};
use qpdyn_core::dynamics::{
    amplitude_table_parseval, averaged_moment_direct, averaged_moment_parseval, evolve_with,
    ParsevalOptions, Propagator,
};
use qpdyn_core::greens::{
    bad_set, fit_sublinear_exponent, greens, is_good, is_strongly_good, ClassificationParams,
    ComplexEnergy,
};
use qpdyn_core::lattice::{
    box_points, enumerate_shapes, tile_disjoint, width, ElementaryRegion, GeneralizedRegion,
    LatticePoint, Region, SectorMark,
};
use qpdyn_core::linalg::hermitian_eigenvalues;
use qpdyn_core::operator::{
    assemble, frac, DecayBound, Kernel, OperatorSpec, PotentialSpec, ShiftDynamics, ShiftMode,
    StateVector, ToeplitzKernel, TrigPolynomial, TrigTerm,
};
use qpdyn_core::Complex64;

fn dyadic() -> impl Strategy<Value = f64> {
    (0u32..1024).prop_map(|k| k as f64 / 1024.0)
}

fn toeplitz(d: usize) -> impl Strategy<Value = Kernel> {
    let offsets: Vec<LatticePoint> = box_points(&vec![-2; d], &vec![2; d])
        .into_iter()
        .filter(|k| k.coords().iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
        .collect();
    let n = offsets.len();
    (
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
        -1.0f64..1.0,
    )
        .prop_map(move |(vals, s0)| {
            let mut terms = vec![(LatticePoint::origin(d), Complex64::new(s0, 0.0))];
            for (k, (re, im)) in offsets.iter().zip(vals) {
                let s = Complex64::new(re, im) * (-(k.norm() as f64)).exp();
                terms.push((k.clone(), s));
                terms.push((k.neg(), s.conj()));
            }
            Kernel::Toeplitz(
                ToeplitzKernel::new(
                    terms,
                    DecayBound {
                        amplitude: 1.5,
                        rate: 1.0,
                    },
                )
                .unwrap(),
            )
        })
}

fn model(d: usize) -> impl Strategy<Value = OperatorSpec> {
    let kernel = prop_oneof![Just(Kernel::Zero), Just(Kernel::Laplacian), toeplitz(d)];
    (
        kernel,
        0.3f64..4.0,
        -3.0f64..3.0,
        -2.0f64..2.0,
        prop::collection::vec(0.0f64..1.0, d),
        0.0f64..1.0,
    )
        .prop_map(move |(kernel, coupling, a1, b1, alpha, x)| {
            let v = TrigPolynomial::new(
                1,
                vec![
                    TrigTerm {
                        freq: vec![1],
                        cos: a1,
                        sin: b1,
                    },
                    TrigTerm {
                        freq: vec![2],
                        cos: 0.5,
                        sin: 0.0,
                    },
                ],
            )
            .unwrap();
            let mode = if d == 1 {
                ShiftMode::LinearForm
            } else {
                ShiftMode::RankOne
            };
            OperatorSpec::new(
                d,
                kernel,
                PotentialSpec { v, coupling },
                ShiftDynamics {
                    mode,
                    alpha,
                    phase: vec![x],
                },
            )
            .unwrap()
        })
}

fn small_box(d: usize) -> Vec<LatticePoint> {
    let r = if d == 1 { 12 } else { 3 };
    box_points(&vec![-r; d], &vec![r; d])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembled_volumes_are_exactly_hermitian(spec in (1usize..=2).prop_flat_map(model)) {
        let vol = assemble(&spec, &small_box(spec.dim())).unwrap();
        prop_assert!(vol.matrix.is_hermitian_exact());
    }

    #[test]
    fn spectrum_within_bound(spec in (1usize..=2).prop_flat_map(model)) {
        let vol = assemble(&spec, &small_box(spec.dim())).unwrap();
        let k = spec.spectral_bound();
        for l in hermitian_eigenvalues(&vol.matrix).unwrap() {
            prop_assert!(l.abs() <= k - 1.0 + 1e-12);
        }
    }

    #[test]
    fn covariance_under_translation(
        a in prop::collection::vec(dyadic(), 2),
        x in dyadic(),
        k in prop::collection::vec(-20i64..20, 2),
    ) {
        // Dyadic inputs make the torus arithmetic exact.
        let dynamics = ShiftDynamics { mode: ShiftMode::RankOne, alpha: a, phase: vec![x] };
        let spec = OperatorSpec::new(
            2,
            Kernel::Laplacian,
            PotentialSpec { v: TrigPolynomial::cosine(2.5), coupling: 1.3 },
            dynamics.clone(),
        )
        .unwrap();
        let shift = LatticePoint::new(k);
        let moved = spec.with_phase(dynamics.orbit(&shift)).unwrap();
        let pts = small_box(2);
        let translated: Vec<LatticePoint> = pts.iter().map(|p| p.add(&shift)).collect();
        let lhs = assemble(&moved, &pts).unwrap().matrix;
        let rhs = assemble(&spec, &translated).unwrap().matrix;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn shift_composition_is_exact_on_dyadics(
        a in prop::collection::vec(dyadic(), 2),
        x in prop::collection::vec(dyadic(), 2),
        m in -1000i64..1000,
        n in -1000i64..1000,
        mode in prop_oneof![Just(ShiftMode::LinearForm), Just(ShiftMode::Product)],
    ) {
        let (pm, pn, pmn) = match mode {
            ShiftMode::LinearForm => (LatticePoint::new(vec![m]), LatticePoint::new(vec![n]), LatticePoint::new(vec![m + n])),
            _ => (LatticePoint::new(vec![m, 0]), LatticePoint::new(vec![n, 1]), LatticePoint::new(vec![m + n, 1])),
        };
        let f = ShiftDynamics { mode, alpha: a, phase: x.clone() };
        let inner = f.orbit_from(&x, &pn);
        prop_assert_eq!(f.orbit_from(&inner, &pm), f.orbit_from(&x, &pmn));
    }

    #[test]
    fn resolvent_norm_at_most_inverse_eps(
        spec in (1usize..=2).prop_flat_map(model),
        e in -6.0f64..6.0,
        eps in 0.01f64..2.0,
    ) {
        let region = ElementaryRegion::cube(LatticePoint::origin(spec.dim()), if spec.dim() == 1 { 10 } else { 3 });
        let g = greens(&spec, &region, ComplexEnergy::new(e, eps).unwrap()).unwrap();
        prop_assert!(g.norm().unwrap() <= (1.0 / eps) * (1.0 + 1e-10));
        prop_assert!(g.residual <= 1e-10 * (1.0 / eps).max(1.0));
    }

    #[test]
    fn strongly_good_implies_good(
        spec in model(1),
        e in -4.0f64..4.0,
        size in 1u64..15,
        c2 in 0.05f64..1.0,
    ) {
        let region = ElementaryRegion::cube(LatticePoint::new(vec![3]), size);
        let z = ComplexEnergy::new(e, 0.05).unwrap();
        let sg = is_strongly_good(&spec, &region, z, c2, 0.5).unwrap();
        let g = is_good(&spec, &region, z, c2).unwrap();
        prop_assert_eq!(sg.good, g.good);
        prop_assert!(!sg.strongly_good || g.good);
    }

    #[test]
    fn bad_count_monotone_in_c2(spec in model(1), e in -3.0f64..3.0, lo in 0.05f64..0.5, gap in 0.0f64..0.5) {
        let z = ComplexEnergy::new(e, 0.01).unwrap();
        let mut p = ClassificationParams::for_spec(&spec);
        p.c2 = lo;
        let loose = bad_set(&spec, 12, 3, z, &p).unwrap().count();
        p.c2 = lo + gap;
        let strict = bad_set(&spec, 12, 3, z, &p).unwrap().count();
        prop_assert!(loose <= strict);
    }

    #[test]
    fn planted_sublinear_exponent_is_recovered(s in 0.2f64..0.8) {
        let counts: Vec<(u64, usize)> =
            [1_000u64, 10_000, 100_000, 1_000_000].iter().map(|&n| (n, (n as f64).powf(s).ceil() as usize)).collect();
        let f = fit_sublinear_exponent(&counts).unwrap();
        prop_assert!((f.delta - (1.0 - s)).abs() < 0.05, "{} vs {}", f.delta, 1.0 - s);
    }
}

/// Every elementary region of size `m` containing `n`, as point sets.
fn elementary_sets_around(n: &LatticePoint, m: u64) -> Vec<BTreeSet<LatticePoint>> {
    let d = n.dim();
    let mut out = Vec::new();
    for shape in enumerate_shapes(d, m).unwrap() {
        let pts = shape.points();
        for q in &pts {
            let set: BTreeSet<LatticePoint> = pts.iter().map(|o| o.add(n).sub(q)).collect();
            out.push(set);
        }
    }
    out
}

/// Width straight from its definition.
fn naive_width(region: &GeneralizedRegion) -> u64 {
    let pts: BTreeSet<LatticePoint> = region.points().into_iter().collect();
    let mut best = 0;
    for m in 1..=8u64 {
        let ok = pts.iter().all(|n| {
            elementary_sets_around(n, m).iter().any(|cand| {
                cand.is_subset(&pts)
                    && pts
                        .iter()
                        .filter(|p| !cand.contains(p))
                        .all(|p| 2 * p.dist(n) >= m)
            })
        });
        if ok {
            best = m;
        }
    }
    best
}

fn naive_diameter(region: &impl Region) -> u64 {
    let pts = region.points();
    pts.iter()
        .flat_map(|a| pts.iter().map(move |b| a.dist(b)))
        .max()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn width_and_diameter_match_oracles(
        d in 1usize..=2,
        hw in prop::collection::vec(0u64..=6, 2),
        cut in prop::option::of(prop::collection::vec(-8i64..=8, 2)),
    ) {
        let hw: Vec<u64> = hw[..d].to_vec();
        let cut = cut.map(|c| LatticePoint::new(c[..d].to_vec()));
        let region = GeneralizedRegion::new(LatticePoint::origin(d), hw, cut).unwrap();
        let pts = region.points();
        prop_assume!(!pts.is_empty() && pts.len() <= 200);
        prop_assert_eq!(region.diameter().unwrap(), naive_diameter(&region));
        prop_assert_eq!(width(&region).unwrap(), naive_width(&region));
    }

    #[test]
    fn shapes_match_defining_inequalities(d in 1usize..=3, n in 1u64..=3) {
        for shape in enumerate_shapes(d, n).unwrap() {
            let marks = shape.sector().to_vec();
            let all = box_points(&vec![-(n as i64); d], &vec![n as i64; d]);
            for p in all {
                let in_sector = marks.iter().any(|m| *m != SectorMark::None)
                    && marks.iter().zip(p.coords()).all(|(m, &c)| match m {
                        SectorMark::None => true,
                        SectorMark::Less => c < 0,
                        SectorMark::Greater => c > 0,
                    });
                prop_assert_eq!(shape.contains(&p), !in_sector);
            }
        }
    }

    #[test]
    fn tilings_are_disjoint_and_contained(d in 1usize..=2, size in 1u64..=9, m in 1u64..=9, sector in 0usize..5) {
        prop_assume!(m <= size);
        let host = enumerate_shapes(d, size).unwrap()[sector.min(if d == 1 { 0 } else { 4 })].clone();
        let fam = tile_disjoint(&host, m).unwrap();
        prop_assert!(fam.verify());
    }

    #[test]
    fn discrepancy_in_unit_range_and_rotation_stable(alpha in 0.01f64..0.99, x in 0.0f64..1.0, rot in 0.0f64..1.0, n in 1usize..300) {
        let orbit = shift_orbit(&[alpha], &[x], n).unwrap();
        let d = discrepancy(&orbit).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&d));
        let rotated: Vec<Vec<f64>> = orbit.iter().map(|p| vec![frac(p[0] + rot)]).collect();
        let dr = discrepancy(&rotated).unwrap().value;
        // A rotation turns intervals into at most two intervals.
        prop_assert!(dr <= 2.0 * d + 1e-12 && d <= 2.0 * dr + 1e-12);
    }

    #[test]
    fn diophantine_symmetric_under_reflection(alpha in 0.001f64..0.999, kappa in 1.0f64..2.0) {
        let p = DiophantineParams { kappa, tau: 0.1, kmax: 2000 };
        let a = diophantine_check(&[alpha], p).unwrap();
        let b = diophantine_check(&[1.0 - alpha], p).unwrap();
        prop_assert!((a.margin - b.margin).abs() <= 1e-9 * (1.0 + a.margin));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn convergents_approximate_well(alpha in 0.0001f64..0.9999) {
        let cf = continued_fraction(alpha, 12).unwrap();
        for &(_, q) in cf.convergents.iter().skip(1).take_while(|c| c.1 < 1_000_000) {
            prop_assert!(dist_to_int(q as f64 * alpha) < 1.0 / q as f64);
        }
    }

    #[test]
    fn routes_agree_and_tables_normalise(lambda in 0.2f64..3.0, x in 0.0f64..1.0, big_t in 0.5f64..30.0) {
        let spec = OperatorSpec::almost_mathieu(lambda, qpdyn_core::GOLDEN_MEAN, x);
        let prop = Propagator::new(&spec, 24).unwrap();
        let phi = StateVector::delta(LatticePoint::new(vec![0]));
        let table = amplitude_table_parseval(&prop, &LatticePoint::new(vec![0]), big_t, ParsevalOptions::default()).unwrap();
        prop_assert!((table.total() - 1.0).abs() < 1e-8);
        let direct = averaged_moment_direct(&prop, &phi, 2.0, big_t).unwrap().value;
        let parseval = averaged_moment_parseval(&prop, &phi, 2.0, big_t, ParsevalOptions::default()).unwrap().value;
        prop_assert!((direct - parseval).abs() <= 1e-6 * direct, "{} vs {}", direct, parseval);
    }

    #[test]
    fn evolution_is_unitary(spec in (1usize..=2).prop_flat_map(model), t in 0.1f64..50.0) {
        let r = if spec.dim() == 1 { 30 } else { 6 };
        let prop = Propagator::new(&spec, r).unwrap();
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.0, 0.8);
        let d = spec.dim();
        let mut e1 = vec![0i64; d];
        e1[0] = 1;
        let phi = StateVector::new(vec![(LatticePoint::origin(d), a), (LatticePoint::new(e1), b)]).unwrap();
        let res = evolve_with(&prop, &phi, &[t], 1.0).unwrap();
        prop_assert!(res.norm_defect < 1e-8);
    }
}

#[test]
fn pointwise_amplitude_bounded_by_resolvent_integral() {
    // |ψ_n(t)|² <= e^{-c|n|} + (1/t) ∫ |G(E + i/t)(n, 0)|² dE with c = 1,
    // well below the 2 ln 3 decay of |ψ_n|² here.
    let spec = OperatorSpec::almost_mathieu(3.0, qpdyn_core::GOLDEN_MEAN, 0.3);
    let prop = Propagator::new(&spec, 40).unwrap();
    let k = spec.spectral_bound();
    let phi = StateVector::delta(LatticePoint::new(vec![0]));
    for t in [2.0, 10.0, 40.0] {
        let opts = ParsevalOptions {
            k_prime: Some(k),
            ..Default::default()
        };
        let band = amplitude_table_parseval(&prop, &LatticePoint::new(vec![0]), t, opts).unwrap();
        let psi = evolve_with(&prop, &phi, &[t], 1.0).unwrap();
        for (n, &a) in band.points.iter().zip(&band.values) {
            let lhs = psi.states[0].amplitude(n).norm_sqr();
            // a = (1/(tπ)) ∫ |G|², so (1/t) ∫ |G|² = π a; tails beyond ±K' are included.
            let rhs = (-(n.norm() as f64)).exp() + std::f64::consts::PI * a;
            assert!(lhs <= rhs, "t={t} n={n}: {lhs} > {rhs}");
        }
    }
}
