//! Experiment recipes. Each one fills a fixed set of tables for a single
//! resolved config.

use qpdyn_core::arithmetic::{diophantine_check, discrepancy, shift_orbit, DiophantineParams};
use qpdyn_core::dynamics::{
    amplitude_table_parseval, averaged_moment_direct, averaged_moment_parseval,
    averaged_profile_direct, evolve_with, fit_log_exponent, lyapunov_estimate, moment_series,
    Propagator,
};
use qpdyn_core::greens::{
    classify_center, fit_sublinear_exponent, BadSetReport, BoxClassification, ComplexEnergy,
};
use qpdyn_core::lattice::cube_points;
use qpdyn_core::operator::OperatorSpec;
use qpdyn_core::{Complex64, Error};
use rayon::prelude::*;

use crate::config::{box_sites, ExperimentConfig, MomentModeConfig, Recipe};
use crate::HarnessError;

/// A CSV table: name (file stem), header and preformatted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: Vec<String>) -> Self {
        Self {
            name,
            header,
            rows: Vec::new(),
        }
    }
}

/// Tables plus numerical-safety flags raised along the way.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn cols(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}_{i}")).collect()
}

fn header(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn s(names: &[&str]) -> Vec<String> {
    names.iter().map(|n| n.to_string()).collect()
}

/// Empty tables with the columns `cfg` produces.
pub fn layout(cfg: &ExperimentConfig) -> Vec<Table> {
    let d = cfg.model.dim;
    let b = cfg.model.phase.len();
    match cfg.recipe {
        Recipe::Evolve => vec![
            Table::new(
                "evolution",
                header(&[&s(&["t"]), &cols("n", d), &s(&["probability"])]),
            ),
            Table::new(
                "evolution_summary",
                s(&[
                    "truncation_radius",
                    "leakage",
                    "norm_defect",
                    "truncation_unsafe",
                    "model",
                ]),
            ),
        ],
        Recipe::MomentGrowth => vec![
            Table::new(
                "moments",
                s(&[
                    "mode",
                    "p",
                    "t_or_T",
                    "value",
                    "truncation_radius",
                    "leakage",
                    "model",
                ]),
            ),
            Table::new(
                "moment_fit",
                s(&[
                    "mode",
                    "p",
                    "samples",
                    "gamma",
                    "intercept",
                    "residual",
                    "power_exponent",
                    "power_residual",
                    "non_logarithmic",
                ]),
            ),
        ],
        Recipe::GreensScan => vec![Table::new(
            "greens_scan",
            header(&[
                &s(&["N", "N1", "E", "eps"]),
                &cols("center", d),
                &s(&[
                    "shape_id",
                    "norm",
                    "worst_pair_decay_margin",
                    "good",
                    "strongly_good",
                ]),
            ]),
        )],
        Recipe::BadSetScan => vec![
            Table::new(
                "bad_set_counts",
                s(&["N", "N1", "E", "eps", "centers", "bad", "bad_fraction"]),
            ),
            Table::new(
                "sublinear_fit",
                s(&[
                    "E",
                    "eps",
                    "scales",
                    "delta",
                    "band_lo",
                    "band_hi",
                    "slope",
                    "residual",
                    "no_bad_boxes",
                    "capped",
                    "fraction_nonincreasing",
                ]),
            ),
        ],
        Recipe::ParsevalCrosscheck => vec![
            Table::new(
                "parseval_sites",
                header(&[
                    &s(&["T"]),
                    &cols("n", d),
                    &s(&["direct", "parseval", "abs_deviation"]),
                ]),
            ),
            Table::new(
                "parseval_summary",
                s(&[
                    "T",
                    "truncation_radius",
                    "p",
                    "direct_moment",
                    "parseval_moment",
                    "relative_deviation",
                    "max_site_deviation",
                    "parseval_total",
                    "quadrature_error",
                    "panels",
                    "leakage",
                    "model",
                ]),
            ),
        ],
        Recipe::DiscrepancySweep => vec![Table::new(
            "discrepancy",
            header(&[
                &s(&["b", "N"]),
                &cols("alpha", b),
                &cols("x", b),
                &s(&["D_N", "method", "sup_not_attained"]),
            ]),
        )],
        Recipe::Diophantine => vec![Table::new(
            "diophantine",
            header(&[
                &cols("alpha", cfg.model.alpha.len()),
                &s(&["kappa", "tau", "kmax", "pass", "worst_k", "margin"]),
            ]),
        )],
        Recipe::LyapunovMap => {
            vec![Table::new(
                "lyapunov",
                s(&["E", "eps", "length", "samples", "value", "stderr"]),
            )]
        }
    }
}

/// Runs the configured recipe.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let spec = cfg
        .build_spec()
        .map_err(|e| HarnessError::Config(vec![format!("model: {e}")]))?;
    let mut out = Outcome {
        tables: layout(cfg),
        ..Default::default()
    };
    match cfg.recipe {
        Recipe::Evolve => evolve(cfg, &spec, &mut out)?,
        Recipe::MomentGrowth => moments(cfg, &spec, &mut out)?,
        Recipe::GreensScan | Recipe::BadSetScan => scan(cfg, &spec, &mut out)?,
        Recipe::ParsevalCrosscheck => crosscheck(cfg, &spec, &mut out)?,
        Recipe::DiscrepancySweep => discrepancy_sweep(cfg, &mut out)?,
        Recipe::Diophantine => diophantine(cfg, &mut out)?,
        Recipe::LyapunovMap => lyapunov(cfg, &spec, &mut out)?,
    }
    Ok(out)
}

/// Runs `f` on growing boxes until leakage drops to the tolerance or the
/// truncation limits are hit, in which case a flag is raised.
fn with_growth<T>(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
    mut f: impl FnMut(&Propagator) -> Result<(T, f64), Error>,
) -> Result<(T, u64, f64), HarnessError> {
    let t = &cfg.truncation;
    let mut r = t.radius;
    loop {
        let prop = Propagator::new(spec, r)?;
        let (value, leak) = f(&prop)?;
        if leak <= t.leak_tol {
            return Ok((value, r, leak));
        }
        let next = 2 * r;
        let room =
            next <= t.max_radius && box_sites(spec.dim(), next).is_some_and(|n| n <= t.max_sites);
        if !t.grow || !room {
            out.flags.push(format!(
                "leakage {} exceeds {} at truncation radius {r}",
                num(leak),
                num(t.leak_tol)
            ));
            return Ok((value, r, leak));
        }
        out.notes.push(format!(
            "leakage {} at radius {r}; retrying at {next}",
            num(leak)
        ));
        r = next;
    }
}

fn evolve(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
) -> Result<(), HarnessError> {
    let times = cfg.times();
    if times.is_empty() {
        return Ok(());
    }
    let phi = cfg.initial_state();
    let (res, r, leak) = with_growth(cfg, spec, out, |prop| {
        let res = evolve_with(prop, &phi, &times, cfg.truncation.leak_tol)?;
        let leak = res.leakage;
        Ok((res, leak))
    })?;
    let rows = &mut out.tables[0].rows;
    for (t, state) in res.times.iter().zip(&res.states) {
        for (n, a) in state.entries() {
            let mut row = vec![num(*t)];
            row.extend(n.coords().iter().map(|c| c.to_string()));
            row.push(num(a.norm_sqr()));
            rows.push(row);
        }
    }
    out.tables[1].rows.push(vec![
        r.to_string(),
        num(leak),
        num(res.norm_defect),
        (leak > cfg.truncation.leak_tol).to_string(),
        cfg.model_fingerprint(),
    ]);
    Ok(())
}

fn moments(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
) -> Result<(), HarnessError> {
    let phi = cfg.initial_state();
    let p = cfg.moments.p;
    let mode = cfg.moments.mode;
    let grid = match mode {
        MomentModeConfig::Instantaneous => cfg.times(),
        _ => cfg.scan.averaging_times.clone(),
    };
    if grid.is_empty() {
        return Ok(());
    }
    let opts = cfg.parseval_options();
    let ((values, leaks), r, _) = with_growth(cfg, spec, out, |prop| {
        let (values, leaks): (Vec<f64>, Vec<f64>) = match mode {
            MomentModeConfig::Instantaneous => {
                let series = moment_series(prop, &phi, p, &grid)?;
                series.samples.iter().map(|s| (s.value, s.leakage)).unzip()
            }
            MomentModeConfig::AveragedDirect => grid
                .par_iter()
                .map(|&t| averaged_moment_direct(prop, &phi, p, t).map(|m| (m.value, m.leakage)))
                .collect::<Result<Vec<_>, Error>>()?
                .into_iter()
                .unzip(),
            MomentModeConfig::AveragedParseval => grid
                .par_iter()
                .map(|&t| {
                    averaged_moment_parseval(prop, &phi, p, t, opts).map(|m| (m.value, m.leakage))
                })
                .collect::<Result<Vec<_>, Error>>()?
                .into_iter()
                .unzip(),
        };
        let worst = leaks.iter().copied().fold(0.0, f64::max);
        Ok(((values, leaks), worst))
    })?;
    let mode_name = match mode {
        MomentModeConfig::Instantaneous => "instantaneous",
        MomentModeConfig::AveragedDirect => "averaged-direct",
        MomentModeConfig::AveragedParseval => "averaged-parseval",
    };
    let fp = cfg.model_fingerprint();
    for ((t, v), l) in grid.iter().zip(&values).zip(&leaks) {
        out.tables[0].rows.push(vec![
            mode_name.into(),
            num(p),
            num(*t),
            num(*v),
            r.to_string(),
            num(*l),
            fp.clone(),
        ]);
    }
    let samples: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
    match fit_log_exponent(&samples) {
        Ok(fit) => out.tables[1].rows.push(vec![
            mode_name.into(),
            num(p),
            samples.len().to_string(),
            num(fit.gamma),
            num(fit.intercept),
            num(fit.residual),
            num(fit.power_exponent),
            num(fit.power_residual),
            fit.non_logarithmic.to_string(),
        ]),
        Err(Error::InsufficientData(why)) => out.notes.push(format!("no growth fit: {why}")),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn scan(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
) -> Result<(), HarnessError> {
    let params = cfg.classification_params(spec);
    let eps = cfg.eps_grid();
    // (E, eps, [(N, bad count)])
    type Counts = Vec<(f64, f64, Vec<(u64, usize)>)>;
    let mut counts: Counts = Vec::new();
    for &e in &cfg.scan.energies {
        for &ep in &eps {
            let z = ComplexEnergy::new(e, ep)?;
            let mut per_size = Vec::new();
            for &n in &cfg.scan.sizes {
                let n1 = cfg.sub_box_size(n);
                let per_center = cube_points(spec.dim(), n as i64)
                    .par_iter()
                    .map(|c| classify_center(spec, c, n1, z, &params))
                    .collect::<Result<Vec<Vec<BoxClassification>>, Error>>()?;
                if cfg.recipe == Recipe::GreensScan {
                    for b in per_center.iter().flatten() {
                        let mut row = vec![n.to_string(), n1.to_string(), num(e), num(ep)];
                        row.extend(b.center.coords().iter().map(|c| c.to_string()));
                        row.extend([
                            b.shape_id.to_string(),
                            num(b.norm),
                            num(b.worst_margin),
                            b.good.to_string(),
                            b.strongly_good.to_string(),
                        ]);
                        out.tables[0].rows.push(row);
                    }
                } else {
                    let report = BadSetReport::from_classifications(n, n1, z, &per_center);
                    out.tables[0].rows.push(vec![
                        n.to_string(),
                        n1.to_string(),
                        num(e),
                        num(ep),
                        report.centers_scanned.to_string(),
                        report.count().to_string(),
                        num(report.count() as f64 / n as f64),
                    ]);
                    per_size.push((n, report.count()));
                }
            }
            counts.push((e, ep, per_size));
        }
    }
    if cfg.recipe == Recipe::BadSetScan {
        for (e, ep, mut per_size) in counts {
            per_size.sort_unstable();
            per_size.dedup_by_key(|c| c.0);
            if per_size.len() < 3 {
                out.notes.push(format!(
                    "E={} eps={}: fewer than 3 sizes, no sublinear fit",
                    num(e),
                    num(ep)
                ));
                continue;
            }
            let fit = fit_sublinear_exponent(&per_size)?;
            let fractions: Vec<f64> = per_size.iter().map(|&(n, c)| c as f64 / n as f64).collect();
            let nonincreasing = fractions.windows(2).all(|w| w[1] <= w[0]);
            out.tables[1].rows.push(vec![
                num(e),
                num(ep),
                per_size.len().to_string(),
                num(fit.delta),
                num(fit.band.0),
                num(fit.band.1),
                num(fit.slope),
                num(fit.rms_residual),
                fit.no_bad_boxes.to_string(),
                fit.capped.to_string(),
                nonincreasing.to_string(),
            ]);
        }
    }
    Ok(())
}

fn crosscheck(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
) -> Result<(), HarnessError> {
    let grid = &cfg.scan.averaging_times;
    if grid.is_empty() {
        return Ok(());
    }
    let phi = cfg.initial_state();
    let site = phi.entries()[0].0.clone();
    let r = cfg.truncation.radius;
    let prop = Propagator::new(spec, r)?;
    let opts = cfg.parseval_options();
    let p = cfg.moments.p;
    let results = grid
        .par_iter()
        .map(|&t| {
            let direct = averaged_profile_direct(&prop, &phi, t)?;
            let parseval = amplitude_table_parseval(&prop, &site, t, opts)?;
            Ok((direct, parseval))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let fp = cfg.model_fingerprint();
    for (t, (direct, parseval)) in grid.iter().zip(&results) {
        let mut worst = 0.0f64;
        for ((n, a), b) in direct
            .points
            .iter()
            .zip(&direct.values)
            .zip(&parseval.values)
        {
            let dev = (a - b).abs();
            worst = worst.max(dev);
            let mut row = vec![num(*t)];
            row.extend(n.coords().iter().map(|c| c.to_string()));
            row.extend([num(*a), num(*b), num(dev)]);
            out.tables[0].rows.push(row);
        }
        let (dm, pm) = (direct.moment(p), parseval.moment(p));
        out.tables[1].rows.push(vec![
            num(*t),
            r.to_string(),
            num(p),
            num(dm),
            num(pm),
            num((dm - pm).abs() / dm.abs().max(f64::MIN_POSITIVE)),
            num(worst),
            num(parseval.total()),
            num(parseval.quadrature_error),
            parseval.panels.to_string(),
            num(direct.leakage),
            fp.clone(),
        ]);
    }
    Ok(())
}

fn discrepancy_sweep(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<(), HarnessError> {
    let alpha = &cfg.model.alpha;
    let phases = cfg.phases();
    let jobs: Vec<(u64, &Vec<f64>)> = cfg
        .scan
        .sizes
        .iter()
        .flat_map(|&n| phases.iter().map(move |x| (n, x)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(n, x)| discrepancy(&shift_orbit(alpha, x, n as usize)?))
        .collect::<Result<Vec<_>, Error>>()?;
    for ((n, x), rep) in jobs.iter().zip(&reports) {
        let mut row = vec![rep.b.to_string(), n.to_string()];
        row.extend(alpha.iter().map(|a| num(*a)));
        row.extend(x.iter().map(|v| num(*v)));
        row.extend([
            num(rep.value),
            rep.method.as_str().into(),
            rep.sup_not_attained.to_string(),
        ]);
        out.tables[0].rows.push(row);
    }
    Ok(())
}

fn diophantine(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<(), HarnessError> {
    let d = &cfg.diophantine;
    let rep = diophantine_check(
        &cfg.model.alpha,
        DiophantineParams {
            kappa: d.kappa,
            tau: d.tau,
            kmax: d.kmax,
        },
    )?;
    let mut row: Vec<String> = cfg.model.alpha.iter().map(|a| num(*a)).collect();
    row.extend([
        num(d.kappa),
        num(d.tau),
        d.kmax.to_string(),
        rep.pass.to_string(),
        rep.worst_k
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        num(rep.margin),
    ]);
    out.tables[0].rows.push(row);
    Ok(())
}

fn lyapunov(
    cfg: &ExperimentConfig,
    spec: &OperatorSpec,
    out: &mut Outcome,
) -> Result<(), HarnessError> {
    let phases = cfg.phases();
    let eps = if cfg.scan.eps.is_empty() && cfg.scan.averaging_times.is_empty() {
        vec![0.0]
    } else {
        cfg.eps_grid()
    };
    let jobs: Vec<(f64, f64)> = cfg
        .scan
        .energies
        .iter()
        .flat_map(|&e| eps.iter().map(move |&x| (e, x)))
        .collect();
    let estimates = jobs
        .par_iter()
        .map(|&(e, x)| {
            lyapunov_estimate(
                spec,
                Complex64::new(e, x),
                cfg.scan.lyapunov_length,
                &phases,
            )
        })
        .collect::<Result<Vec<_>, Error>>()?;
    for ((e, x), est) in jobs.iter().zip(&estimates) {
        out.tables[0].rows.push(vec![
            num(*e),
            num(*x),
            est.length.to_string(),
            est.samples.to_string(),
            num(est.value),
            num(est.stderr),
        ]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [
            0.0,
            1.0,
            -2.5,
            1e-12,
            3.0e20,
            0.1,
            123456.789,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1e-6), "1e-6");
        assert_eq!(num(0.5), "0.5");
    }
}
