//! Time evolution on a truncation box, position moments, the energy-integral
//! form of the time-averaged site probabilities, growth fits and Lyapunov
//! exponents of Schrödinger cocycles.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::lattice::{cube_points, LatticePoint};
use crate::linalg::{hermitian_eigen, DMat, KahanSum};
use crate::operator::{assemble, OperatorSpec, StateVector};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

enum Basis {
    Real(DMat<f64>),
    Complex(DMat<Complex64>),
}

/// `e^{-itH}` on the box `[-R, R]^d` through one eigendecomposition.
pub struct Propagator {
    radius: u64,
    points: Vec<LatticePoint>,
    norms: Vec<u64>,
    index: BTreeMap<LatticePoint, usize>,
    values: Vec<f64>,
    basis: Basis,
    spectral_bound: f64,
}

impl Propagator {
    pub fn new(spec: &OperatorSpec, radius: u64) -> Result<Self> {
        let points = cube_points(spec.dim(), radius as i64);
        let volume = assemble(spec, &points)?;
        let (values, basis) = match volume.matrix.to_real() {
            Some(real) => {
                let e = hermitian_eigen(&real)?;
                (e.values, Basis::Real(e.vectors))
            }
            None => {
                let e = hermitian_eigen(&volume.matrix)?;
                (e.values, Basis::Complex(e.vectors))
            }
        };
        Ok(Self {
            radius,
            norms: points.iter().map(LatticePoint::norm).collect(),
            points,
            index: volume.index,
            values,
            basis,
            spectral_bound: spec.spectral_bound(),
        })
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn vector_of(&self, phi: &StateVector) -> Result<Vec<Complex64>> {
        let mut v = vec![ZERO; self.len()];
        for (n, a) in phi.entries() {
            if *a == ZERO {
                continue;
            }
            let i = self
                .index
                .get(n)
                .ok_or_else(|| invalid(format!("site {n} lies outside the truncation box")))?;
            v[*i] = *a;
        }
        Ok(v)
    }

    /// Eigenbasis coefficients `V^* φ`.
    pub fn expand(&self, phi: &StateVector) -> Result<Vec<Complex64>> {
        let v = self.vector_of(phi)?;
        Ok(match &self.basis {
            Basis::Real(m) => (0..self.len())
                .map(|k| {
                    let mut acc = ZERO;
                    for (&a, &b) in m.col(k).iter().zip(&v) {
                        acc += b * a;
                    }
                    acc
                })
                .collect(),
            Basis::Complex(m) => m.adjoint_matvec(&v),
        })
    }

    /// `V w` for eigenbasis weights `w`.
    fn synthesize(&self, w: &[Complex64]) -> Vec<Complex64> {
        match &self.basis {
            Basis::Real(m) => {
                let n = self.len();
                let mut re = vec![0.0; n];
                let mut im = vec![0.0; n];
                for (k, wk) in w.iter().enumerate() {
                    if *wk == ZERO {
                        continue;
                    }
                    for ((r, i), &a) in re.iter_mut().zip(im.iter_mut()).zip(m.col(k)) {
                        *r += a * wk.re;
                        *i += a * wk.im;
                    }
                }
                re.into_iter()
                    .zip(im)
                    .map(|(r, i)| Complex64::new(r, i))
                    .collect()
            }
            Basis::Complex(m) => m.matvec(w),
        }
    }

    /// `e^{-itH} φ` from coefficients `c = V^* φ`.
    pub fn evolve_coefficients(&self, c: &[Complex64], t: f64) -> Vec<Complex64> {
        let w: Vec<Complex64> = c
            .iter()
            .zip(&self.values)
            .map(|(ck, &l)| {
                let (s, co) = libm::sincos(-t * l);
                ck * Complex64::new(co, s)
            })
            .collect();
        self.synthesize(&w)
    }

    /// Column `G(·, j)` of the resolvent at `z`.
    pub fn resolvent_column(&self, j: usize, z: Complex64) -> Vec<Complex64> {
        let w: Vec<Complex64> = match &self.basis {
            Basis::Real(m) => (0..self.len())
                .map(|k| Complex64::new(m[(j, k)], 0.0) / (self.values[k] - z))
                .collect(),
            Basis::Complex(m) => (0..self.len())
                .map(|k| m[(j, k)].conj() / (self.values[k] - z))
                .collect(),
        };
        self.synthesize(&w)
    }

    /// Mass in the outer shell `|n| > ⌊9R/10⌋`.
    pub fn shell_mass(&self, psi: &[Complex64]) -> f64 {
        let inner = self.radius * 9 / 10;
        psi.iter()
            .zip(&self.norms)
            .filter(|(_, &r)| r > inner)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    /// `Σ |n|^p |ψ_n|²` for a vector on the box.
    pub fn moment_of(&self, psi: &[Complex64], p: f64) -> f64 {
        psi.iter()
            .zip(&self.norms)
            .filter(|(_, &r)| r > 0)
            .map(|(a, &r)| Float::powf(r as f64, p) * a.norm_sqr())
            .collect::<KahanSum>()
            .value()
    }

    fn state_of(&self, psi: Vec<Complex64>) -> StateVector {
        StateVector::new(self.points.iter().cloned().zip(psi).collect())
            .expect("box sites are distinct")
    }

    fn site_index(&self, n: &LatticePoint) -> Result<usize> {
        self.index
            .get(n)
            .copied()
            .ok_or_else(|| invalid(format!("site {n} lies outside the truncation box")))
    }
}

/// States `ψ(t) = e^{-itH_R} φ` on the truncation box.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub radius: u64,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest outer-shell mass over the sampled times.
    pub leakage: f64,
    /// Largest `|‖ψ(t)‖² - ‖φ‖²| / ‖φ‖²`.
    pub norm_defect: f64,
    pub truncation_unsafe: bool,
}

fn check_initial(phi: &StateVector, radius: u64) -> Result<()> {
    if phi.norm_sqr() == 0.0 {
        return Err(invalid("initial state is zero"));
    }
    if 2 * phi.support_radius() > radius {
        return Err(invalid(format!(
            "initial support radius {} exceeds half the truncation radius {radius}",
            phi.support_radius()
        )));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times must be sorted ascending"));
    }
    Ok(())
}

/// Evolves `φ` on `[-R, R]^d`; the result is flagged when the outer-shell
/// mass exceeds `leak_tol` at any sampled time.
pub fn evolve(
    spec: &OperatorSpec,
    phi: &StateVector,
    times: &[f64],
    radius: u64,
    leak_tol: f64,
) -> Result<EvolutionResult> {
    check_initial(phi, radius)?;
    check_times(times)?;
    let prop = Propagator::new(spec, radius)?;
    evolve_with(&prop, phi, times, leak_tol)
}

pub fn evolve_with(
    prop: &Propagator,
    phi: &StateVector,
    times: &[f64],
    leak_tol: f64,
) -> Result<EvolutionResult> {
    check_initial(phi, prop.radius)?;
    check_times(times)?;
    let c = prop.expand(phi)?;
    let norm0 = phi.norm_sqr();
    let mut leakage = 0.0f64;
    let mut norm_defect = 0.0f64;
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            let psi = prop.vector_of(phi)?;
            leakage = leakage.max(prop.shell_mass(&psi));
            states.push(phi.clone());
            continue;
        }
        let psi = prop.evolve_coefficients(&c, t);
        let n2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        norm_defect = norm_defect.max(Float::abs(n2 - norm0) / norm0);
        leakage = leakage.max(prop.shell_mass(&psi));
        states.push(prop.state_of(psi));
    }
    Ok(EvolutionResult {
        radius: prop.radius,
        times: times.to_vec(),
        states,
        leakage,
        norm_defect,
        truncation_unsafe: leakage > leak_tol,
    })
}

/// `Σ_n |n|^p |ψ_n|²` with the sup-norm.
pub fn moment(psi: &StateVector, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {p}")));
    }
    Ok(psi
        .entries()
        .iter()
        .filter(|(n, _)| n.norm() > 0)
        .map(|(n, a)| Float::powf(n.norm() as f64, p) * a.norm_sqr())
        .collect::<KahanSum>()
        .value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    Instantaneous,
    TimeAveragedDirect,
    TimeAveragedParseval,
}

impl MomentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMode::Instantaneous => "instantaneous",
            MomentMode::TimeAveragedDirect => "time-averaged-direct",
            MomentMode::TimeAveragedParseval => "time-averaged-parseval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    /// `t` for instantaneous moments, `T` for averages.
    pub t: f64,
    pub value: f64,
    pub leakage: f64,
}

/// Sampled moments of one order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub p: f64,
    pub mode: MomentMode,
    pub radius: u64,
    pub samples: Vec<MomentSample>,
}

impl MomentSeries {
    pub fn max_leakage(&self) -> f64 {
        self.samples.iter().map(|s| s.leakage).fold(0.0, f64::max)
    }

    pub fn fit_log_exponent(&self) -> Result<LogGrowthFit> {
        let pts: Vec<(f64, f64)> = self.samples.iter().map(|s| (s.t, s.value)).collect();
        fit_log_exponent(&pts)
    }
}

/// Instantaneous moments `Σ |n|^p |ψ_n(t)|²` at the given times.
pub fn moment_series(
    prop: &Propagator,
    phi: &StateVector,
    p: f64,
    times: &[f64],
) -> Result<MomentSeries> {
    if !(p > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {p}")));
    }
    check_initial(phi, prop.radius)?;
    check_times(times)?;
    let c = prop.expand(phi)?;
    let samples = times
        .iter()
        .map(|&t| {
            let psi = if t == 0.0 {
                prop.vector_of(phi)?
            } else {
                prop.evolve_coefficients(&c, t)
            };
            Ok(MomentSample {
                t,
                value: prop.moment_of(&psi, p),
                leakage: prop.shell_mass(&psi),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSeries {
        p,
        mode: MomentMode::Instantaneous,
        radius: prop.radius,
        samples,
    })
}

/// A time-averaged moment with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMoment {
    pub value: f64,
    /// Bound on the neglected part of the time integral (direct route) or
    /// the summed quadrature error estimate weighted by `|n|^p` (energy route).
    pub error_bound: f64,
    pub leakage: f64,
    /// Set when the value is an upper bound rather than the moment itself.
    pub is_bound: bool,
}

/// Time-averaged site probabilities from the direct route.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedProfile {
    pub t: f64,
    pub points: Vec<LatticePoint>,
    pub values: Vec<f64>,
    /// Bound on the mass dropped by cutting the time integral.
    pub error_bound: f64,
    pub leakage: f64,
}

impl AveragedProfile {
    pub fn total(&self) -> f64 {
        self.values.iter().copied().collect::<KahanSum>().value()
    }

    pub fn get(&self, n: &LatticePoint) -> Option<f64> {
        self.points
            .iter()
            .position(|p| p == n)
            .map(|i| self.values[i])
    }

    pub fn moment(&self, p: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.norm() > 0)
            .map(|(n, a)| Float::powf(n.norm() as f64, p) * a)
            .collect::<KahanSum>()
            .value()
    }
}

/// `(2/T) ∫_0^∞ e^{-2t/T} |ψ_n(t)|² dt` for every box site, cut at
/// `t = 20T` and integrated with 20-point Gauss–Legendre panels.
pub fn averaged_profile_direct(
    prop: &Propagator,
    phi: &StateVector,
    big_t: f64,
) -> Result<AveragedProfile> {
    if !(big_t > 0.0 && big_t.is_finite()) {
        return Err(invalid(format!("T must be positive, got {big_t}")));
    }
    check_initial(phi, prop.radius)?;
    let c = prop.expand(phi)?;
    let width = match (prop.values.first(), prop.values.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let t_end = 20.0 * big_t;
    let mut h = big_t / 4.0;
    if width > 0.0 {
        h = h.min(8.0 / width);
    }
    let panels = Float::ceil(t_end / h) as usize;
    let h = t_end / panels as f64;
    let gl = GaussLegendre::new(20);
    let mut acc: Vec<KahanSum> = (0..prop.len()).map(|_| KahanSum::new()).collect();
    let mut leakage = 0.0f64;
    for k in 0..panels {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        for (t, w) in gl.on(a, b) {
            let psi = prop.evolve_coefficients(&c, t);
            leakage = leakage.max(prop.shell_mass(&psi));
            let weight = w * (2.0 / big_t) * Float::exp(-2.0 * t / big_t);
            for (s, a) in acc.iter_mut().zip(&psi) {
                s.add(weight * a.norm_sqr());
            }
        }
    }
    Ok(AveragedProfile {
        t: big_t,
        points: prop.points.clone(),
        values: acc.iter().map(KahanSum::value).collect(),
        error_bound: Float::exp(-40.0) * phi.norm_sqr(),
        leakage,
    })
}

/// `(2/T) ∫_0^∞ e^{-2t/T} Σ|n|^p |ψ_n(t)|² dt` through
/// [`averaged_profile_direct`].
pub fn averaged_moment_direct(
    prop: &Propagator,
    phi: &StateVector,
    p: f64,
    big_t: f64,
) -> Result<AveragedMoment> {
    if !(p > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {p}")));
    }
    let profile = averaged_profile_direct(prop, phi, big_t)?;
    let max_moment = Float::powf(prop.radius as f64, p);
    Ok(AveragedMoment {
        value: profile.moment(p),
        error_bound: profile.error_bound * max_moment,
        leakage: profile.leakage,
        is_bound: false,
    })
}

/// Options for the energy integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalOptions {
    /// Band edge `K'` separating the band from the tails; `K + 2` when unset.
    pub k_prime: Option<f64>,
    /// Tolerance on the summed error estimate of `Σ_n a(j, n, T)`.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for ParsevalOptions {
    fn default() -> Self {
        Self {
            k_prime: None,
            abs_tol: 1e-10,
            max_panels: 400_000,
        }
    }
}

/// `a(j, n, T)` for every site of the truncation box.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    pub j: LatticePoint,
    pub t: f64,
    pub points: Vec<LatticePoint>,
    pub values: Vec<f64>,
    pub k_prime: f64,
    pub quadrature_error: f64,
    pub panels: usize,
}

impl AmplitudeTable {
    pub fn total(&self) -> f64 {
        self.values.iter().copied().collect::<KahanSum>().value()
    }

    pub fn get(&self, n: &LatticePoint) -> Option<f64> {
        self.points
            .iter()
            .position(|p| p == n)
            .map(|i| self.values[i])
    }

    pub fn moment(&self, p: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.norm() > 0)
            .map(|(n, a)| Float::powf(n.norm() as f64, p) * a)
            .collect::<KahanSum>()
            .value()
    }
}

/// `a(j, n, T) = (1/(Tπ)) ∫ |G(E + i/T)(n, j)|² dE` over the whole real line:
/// adaptive Gauss–Kronrod on `[-K', K']` with breakpoints at the eigenvalues,
/// and the two tails mapped to `(0, 1]` by `E = ±K'/u`.
pub fn amplitude_table_parseval(
    prop: &Propagator,
    j: &LatticePoint,
    big_t: f64,
    opts: ParsevalOptions,
) -> Result<AmplitudeTable> {
    if !(big_t > 0.0 && big_t.is_finite()) {
        return Err(invalid(format!("T must be positive, got {big_t}")));
    }
    let col = prop.site_index(j)?;
    let n = prop.len();
    let eps = 1.0 / big_t;
    let scale = 1.0 / (big_t * PI);
    let k_prime = opts.k_prime.unwrap_or(prop.spectral_bound + 2.0);
    let top = prop
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(Float::abs(*v)));
    if !(k_prime > top) {
        return Err(invalid(format!(
            "K' = {k_prime} does not enclose the spectrum (max |λ| = {top})"
        )));
    }
    let mut breaks = vec![-k_prime];
    for &l in &prop.values {
        if l - breaks[breaks.len() - 1] > 1e-9 {
            breaks.push(l);
        }
    }
    if k_prime - breaks[breaks.len() - 1] <= 1e-9 {
        breaks.pop();
    }
    breaks.push(k_prime);

    let fill = |e: f64, jac: f64, out: &mut [f64]| {
        let g = prop.resolvent_column(col, Complex64::new(e, eps));
        for (o, a) in out.iter_mut().zip(&g) {
            *o = scale * jac * a.norm_sqr();
        }
    };
    let band_opts = AdaptiveOptions {
        abs_tol: 0.8 * opts.abs_tol,
        max_panels: opts.max_panels,
    };
    let tail_opts = AdaptiveOptions {
        abs_tol: 0.1 * opts.abs_tol,
        max_panels: opts.max_panels,
    };
    let band = integrate_adaptive(|e, out| fill(e, 1.0, out), n, &breaks, band_opts)?;
    let right = integrate_adaptive(
        |u, out| fill(k_prime / u, k_prime / (u * u), out),
        n,
        &[0.0, 1.0],
        tail_opts,
    )?;
    let left = integrate_adaptive(
        |u, out| fill(-k_prime / u, k_prime / (u * u), out),
        n,
        &[0.0, 1.0],
        tail_opts,
    )?;
    let values = (0..n)
        .map(|i| {
            [band.values[i], right.values[i], left.values[i]]
                .into_iter()
                .collect::<KahanSum>()
                .value()
        })
        .collect();
    Ok(AmplitudeTable {
        j: j.clone(),
        t: big_t,
        points: prop.points.clone(),
        values,
        k_prime,
        quadrature_error: band.error + right.error + left.error,
        panels: band.panels + right.panels + left.panels,
    })
}

/// `Σ_n |n|^p a(j, n, T)` for `φ = δ_j` (times `|φ_j|²`). For several sites
/// this returns the upper bound `(Σ|φ_j|) Σ_j |φ_j| Σ_n |n|^p a(j, n, T)`,
/// flagged with `is_bound`.
pub fn averaged_moment_parseval(
    prop: &Propagator,
    phi: &StateVector,
    p: f64,
    big_t: f64,
    opts: ParsevalOptions,
) -> Result<AveragedMoment> {
    if !(p > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {p}")));
    }
    check_initial(phi, prop.radius)?;
    let sites: Vec<(&LatticePoint, f64)> = phi
        .entries()
        .iter()
        .filter(|(_, a)| *a != ZERO)
        .map(|(n, a)| (n, a.norm()))
        .collect();
    let l1: f64 = sites.iter().map(|s| s.1).sum();
    let mut value = KahanSum::new();
    let mut err = 0.0;
    for (j, w) in &sites {
        let table = amplitude_table_parseval(prop, j, big_t, opts)?;
        let weight = if sites.len() == 1 { w * w } else { l1 * w };
        value.add(weight * table.moment(p));
        err += weight * Float::powf(prop.radius as f64, p) * table.quadrature_error;
    }
    Ok(AveragedMoment {
        value: value.value(),
        error_bound: err,
        leakage: 0.0,
        is_bound: sites.len() > 1,
    })
}

/// Fit of a growth law to positive samples `(t, value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrowthFit {
    /// Slope of `ln value` against `ln ln t`.
    pub gamma: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Slope of `ln value` against `ln t`.
    pub power_exponent: f64,
    pub power_residual: f64,
    /// A power law fits better than a power of `ln t` and grows appreciably.
    pub non_logarithmic: bool,
}

/// Least squares of `ln value` on `ln ln t`. Needs at least 10 samples with
/// `t > 1` spanning two decades and positive values.
pub fn fit_log_exponent(samples: &[(f64, f64)]) -> Result<LogGrowthFit> {
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} samples, need 10",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.1 > 0.0) || !s.1.is_finite()) {
        return Err(invalid("moment values must be positive"));
    }
    if samples.iter().any(|s| !(s.0 > 1.0) || !s.0.is_finite()) {
        return Err(invalid("times must exceed 1"));
    }
    let tmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let tmax = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if tmax < 100.0 * tmin {
        return Err(Error::InsufficientData(format!(
            "times span {tmin}..{tmax}, need two decades"
        )));
    }
    let ys: Vec<f64> = samples.iter().map(|s| Float::ln(s.1)).collect();
    let lnt: Vec<f64> = samples.iter().map(|s| Float::ln(s.0)).collect();
    let lnlnt: Vec<f64> = lnt.iter().map(|x| Float::ln(*x)).collect();
    let log = fit_line(&lnlnt, &ys)?;
    let pow = fit_line(&lnt, &ys)?;
    Ok(LogGrowthFit {
        gamma: log.slope,
        intercept: log.intercept,
        residual: log.rms_residual,
        power_exponent: pow.slope,
        power_residual: pow.rms_residual,
        non_logarithmic: pow.rms_residual < log.rms_residual && pow.slope > 0.1,
    })
}

/// Mean of `(1/N) ln‖A_N ⋯ A_1‖` over phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub energy: Complex64,
    pub length: usize,
    pub samples: usize,
    pub value: f64,
    /// Standard error of the mean over phases (zero for one phase).
    pub stderr: f64,
}

/// Transfer matrices `A_n = [[v(f^n x) - E, -1], [1, 0]]`, `n = 0..N-1`,
/// multiplied with a rescaling every step.
pub fn lyapunov_estimate(
    spec: &OperatorSpec,
    energy: Complex64,
    length: usize,
    phases: &[Vec<f64>],
) -> Result<LyapunovEstimate> {
    if !spec.is_schrodinger_1d() {
        return Err(Error::NotSchrodinger);
    }
    if length == 0 || phases.is_empty() {
        return Err(invalid("need a positive length and at least one phase"));
    }
    let b = spec.dynamics().torus_dim();
    let mut vals = Vec::with_capacity(phases.len());
    for x in phases {
        if x.len() != b {
            return Err(Error::DimensionMismatch {
                expected: b,
                got: x.len(),
            });
        }
        let mut m = [
            [Complex64::new(1.0, 0.0), ZERO],
            [ZERO, Complex64::new(1.0, 0.0)],
        ];
        let mut log_scale = 0.0;
        for k in 0..length {
            let v = spec.potential().v.eval(
                &spec
                    .dynamics()
                    .orbit_from(x, &LatticePoint::new(vec![k as i64])),
            );
            let a = Complex64::new(v, 0.0) - energy;
            m = [[a * m[0][0] - m[1][0], a * m[0][1] - m[1][1]], m[0]];
            let s = m.iter().flatten().map(|z| z.norm()).fold(0.0f64, f64::max);
            if s > 0.0 {
                log_scale += Float::ln(s);
                for z in m.iter_mut().flatten() {
                    *z /= s;
                }
            }
        }
        vals.push((log_scale + Float::ln(norm2x2(&m))) / length as f64);
    }
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let stderr = if vals.len() > 1 {
        Float::sqrt(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0) / k)
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        energy,
        length,
        samples: vals.len(),
        value: mean,
        stderr,
    })
}

/// Spectral norm of a complex 2×2 matrix.
fn norm2x2(m: &[[Complex64; 2]; 2]) -> f64 {
    let fro: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = Float::sqrt((fro * fro - 4.0 * det * det).max(0.0));
    Float::sqrt(0.5 * (fro + disc))
}
