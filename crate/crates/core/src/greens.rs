//! Finite-volume Green's functions `G_Λ(z) = (R_Λ (H - z) R_Λ)⁻¹` and the
//! box classifications built on them.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::lattice::{
    cube_points, enumerate_shapes, tile_disjoint, ElementaryRegion, LatticePoint, Region,
};
use crate::linalg::{hermitian_eigenvalues, spectral_norm, DMat, Lu};
use crate::operator::{assemble, FiniteVolume, OperatorSpec};

/// `z = E + iε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEnergy {
    pub e: f64,
    pub eps: f64,
}

impl ComplexEnergy {
    /// `ε = 0` is accepted; the caller is then responsible for keeping `E`
    /// off the spectrum.
    pub fn new(e: f64, eps: f64) -> Result<Self> {
        if !e.is_finite() || !eps.is_finite() || eps < 0.0 {
            return Err(invalid(format!("bad complex energy {e} + {eps}i")));
        }
        Ok(Self { e, eps })
    }

    /// `E + i/T`.
    pub fn from_time(e: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(invalid(format!("time scale must be positive, got {t}")));
        }
        Self::new(e, 1.0 / t)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eps)
    }
}

/// Resolvent of a finite volume together with its residual.
#[derive(Debug, Clone)]
pub struct GreensMatrix {
    pub points: Vec<LatticePoint>,
    pub z: ComplexEnergy,
    pub matrix: DMat<Complex64>,
    /// `‖(H_Λ - z) G - I‖` (operator norm).
    pub residual: f64,
    volume: FiniteVolume,
}

impl GreensMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn volume(&self) -> &FiniteVolume {
        &self.volume
    }

    /// `G(n, n')`, or `None` if either site is outside the volume.
    pub fn get(&self, n: &LatticePoint, m: &LatticePoint) -> Option<Complex64> {
        Some(self.matrix[(self.volume.position(n)?, self.volume.position(m)?)])
    }

    /// `‖G‖ = sqrt(λ_max(G^* G))`.
    pub fn norm(&self) -> Result<f64> {
        spectral_norm(&self.matrix)
    }

    /// Largest `ln|G(n,n')| + c₂|n - n'|` over pairs with `|n - n'| >= min_dist`,
    /// with the pair attaining it. `-∞` and `None` when no pair qualifies or
    /// every qualifying entry vanishes.
    pub fn decay_margin(
        &self,
        min_dist: u64,
        c2: f64,
    ) -> (f64, Option<(LatticePoint, LatticePoint)>) {
        let mut best = f64::NEG_INFINITY;
        let mut pair = None;
        for (j, pj) in self.points.iter().enumerate() {
            let col = self.matrix.col(j);
            for (i, pi) in self.points.iter().enumerate() {
                let dist = pi.dist(pj);
                if dist < min_dist {
                    continue;
                }
                let a = col[i].norm();
                if a == 0.0 {
                    continue;
                }
                let m = Float::ln(a) + c2 * dist as f64;
                if m > best {
                    best = m;
                    pair = Some((pi.clone(), pj.clone()));
                }
            }
        }
        (best, pair)
    }
}

fn resolvent_of(volume: FiniteVolume, z: ComplexEnergy) -> Result<GreensMatrix> {
    let n = volume.len();
    let zc = z.z();
    let mut a = volume.matrix.clone();
    for i in 0..n {
        a[(i, i)] -= zc;
    }
    let g = Lu::new(&a)?.inverse();
    let mut r = a.matmul(&g);
    for i in 0..n {
        r[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    let residual = spectral_norm(&r)?;
    Ok(GreensMatrix {
        points: volume.points.clone(),
        z,
        matrix: g,
        residual,
        volume,
    })
}

/// Green's function of `spec` on the region.
pub fn greens(spec: &OperatorSpec, region: &impl Region, z: ComplexEnergy) -> Result<GreensMatrix> {
    greens_on_points(spec, &region.points(), z)
}

/// Green's function on an explicit site list (rows and columns in that order).
pub fn greens_on_points(
    spec: &OperatorSpec,
    points: &[LatticePoint],
    z: ComplexEnergy,
) -> Result<GreensMatrix> {
    resolvent_of(assemble(spec, points)?, z)
}

/// Thresholds of the good / strongly good classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationParams {
    pub c2: f64,
    pub sigma: f64,
    pub xi: f64,
    pub varsigma: f64,
    /// Largest `ε` a scan may probe.
    pub eps0: f64,
    /// Smallest scale considered.
    pub n0: u64,
}

impl ClassificationParams {
    /// Defaults with `c₂ = 4c₁/5` for the operator's kernel.
    pub fn for_spec(spec: &OperatorSpec) -> Self {
        Self {
            c2: 0.8 * spec.kernel_decay().rate,
            sigma: 0.5,
            xi: 0.5,
            varsigma: 0.95,
            eps0: 1.0,
            n0: 1,
        }
    }

    pub fn validate(&self, c1: f64) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.c2 > 0.0 && self.c2 <= c1) {
            bad.push(format!("c2 = {} must lie in (0, {c1}]", self.c2));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("xi", self.xi),
            ("varsigma", self.varsigma),
        ] {
            if !(v > 0.0 && v < 1.0) {
                bad.push(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if !(self.eps0 > 0.0) {
            bad.push(format!("eps0 = {} must be positive", self.eps0));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(invalid(bad.join("; ")))
        }
    }
}

/// Pair-distance threshold `⌈N/10⌉` of the good class.
pub fn pair_threshold(n: u64) -> u64 {
    n.div_ceil(10)
}

/// Verdict for one box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxClassification {
    pub center: LatticePoint,
    pub size: u64,
    pub shape_id: u64,
    /// `‖G‖`; `NaN` when only the good class was evaluated.
    pub norm: f64,
    /// `max ln|G(n,n')| + c₂|n-n'|` over qualifying pairs; good iff `<= 0`.
    pub worst_margin: f64,
    pub worst_pair: Option<(LatticePoint, LatticePoint)>,
    pub good: bool,
    pub strongly_good: bool,
}

fn classify(
    spec: &OperatorSpec,
    region: &ElementaryRegion,
    z: ComplexEnergy,
    c2: f64,
    sigma: Option<f64>,
) -> Result<BoxClassification> {
    if region.size() == 0 {
        return Err(invalid("box size must be at least 1"));
    }
    let g = greens(spec, region, z)?;
    let (worst_margin, worst_pair) = g.decay_margin(pair_threshold(region.size()), c2);
    let good = worst_margin <= 0.0;
    let (norm, strongly_good) = match sigma {
        Some(s) => {
            let norm = g.norm()?;
            let bound = Float::exp(Float::powf(region.size() as f64, s));
            (norm, good && norm <= bound)
        }
        None => (f64::NAN, false),
    };
    Ok(BoxClassification {
        center: region.center().clone(),
        size: region.size(),
        shape_id: region.shape_id(),
        norm,
        worst_margin,
        worst_pair,
        good,
        strongly_good,
    })
}

/// Class G: `|G(n,n')| <= exp(-c₂|n-n'|)` for `|n-n'| >= ⌈N/10⌉`.
pub fn is_good(
    spec: &OperatorSpec,
    region: &ElementaryRegion,
    z: ComplexEnergy,
    c2: f64,
) -> Result<BoxClassification> {
    classify(spec, region, z, c2, None)
}

/// Class SG: good and `‖G‖ <= exp(N^σ)`.
pub fn is_strongly_good(
    spec: &OperatorSpec,
    region: &ElementaryRegion,
    z: ComplexEnergy,
    c2: f64,
    sigma: f64,
) -> Result<BoxClassification> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    classify(spec, region, z, c2, Some(sigma))
}

/// Every shape of size `n1` translated to `center`, classified; shape order
/// follows [`enumerate_shapes`].
pub fn classify_center(
    spec: &OperatorSpec,
    center: &LatticePoint,
    n1: u64,
    z: ComplexEnergy,
    params: &ClassificationParams,
) -> Result<Vec<BoxClassification>> {
    enumerate_shapes(spec.dim(), n1)?
        .iter()
        .map(|shape| is_strongly_good(spec, &shape.translate(center), z, params.c2, params.sigma))
        .collect()
}

/// Bad centres `n ∈ [-N, N]^d`: some `n + Q_{N₁}` is not strongly good.
#[derive(Debug, Clone, PartialEq)]
pub struct BadSetReport {
    pub n: u64,
    pub n1: u64,
    pub z: ComplexEnergy,
    pub bad_centers: Vec<LatticePoint>,
    pub centers_scanned: usize,
}

impl BadSetReport {
    pub fn count(&self) -> usize {
        self.bad_centers.len()
    }

    /// Builds the report from per-centre verdicts (lexicographic centre order).
    pub fn from_classifications(
        n: u64,
        n1: u64,
        z: ComplexEnergy,
        per_center: &[Vec<BoxClassification>],
    ) -> Self {
        let bad_centers = per_center
            .iter()
            .filter(|boxes| boxes.iter().any(|b| !b.strongly_good))
            .filter_map(|boxes| boxes.first().map(|b| b.center.clone()))
            .collect();
        Self {
            n,
            n1,
            z,
            bad_centers,
            centers_scanned: per_center.len(),
        }
    }
}

pub fn bad_set(
    spec: &OperatorSpec,
    n: u64,
    n1: u64,
    z: ComplexEnergy,
    params: &ClassificationParams,
) -> Result<BadSetReport> {
    if n1 == 0 || n1 >= n {
        return Err(invalid(format!("need 1 <= N1 < N, got N1={n1}, N={n}")));
    }
    let per_center = cube_points(spec.dim(), n as i64)
        .iter()
        .map(|c| classify_center(spec, c, n1, z, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(BadSetReport::from_classifications(n, n1, z, &per_center))
}

/// Fitted `δ` in `#bad <= N^{1-δ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublinearFit {
    pub delta: f64,
    /// Two-standard-error band on `δ`.
    pub band: (f64, f64),
    pub slope: f64,
    pub rms_residual: f64,
    /// Every count was zero.
    pub no_bad_boxes: bool,
    /// The raw estimate exceeded one and was capped.
    pub capped: bool,
}

/// Least squares of `ln(count + 1)` against `ln N`; `δ = 1 - slope`, capped at one.
pub fn fit_sublinear_exponent(counts: &[(u64, usize)]) -> Result<SublinearFit> {
    let scales: BTreeSet<u64> = counts.iter().map(|c| c.0).collect();
    if scales.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct scale(s), need 3",
            scales.len()
        )));
    }
    if counts.iter().any(|c| c.0 == 0) {
        return Err(invalid("scales must be positive"));
    }
    let xs: Vec<f64> = counts.iter().map(|c| Float::ln(c.0 as f64)).collect();
    let ys: Vec<f64> = counts.iter().map(|c| Float::ln(c.1 as f64 + 1.0)).collect();
    let f = fit_line(&xs, &ys)?;
    let raw = 1.0 - f.slope;
    let no_bad_boxes = counts.iter().all(|c| c.1 == 0);
    let capped = raw > 1.0;
    let delta = raw.min(1.0);
    Ok(SublinearFit {
        delta,
        band: (
            delta - 2.0 * f.slope_stderr,
            (delta + 2.0 * f.slope_stderr).min(1.0),
        ),
        slope: f.slope,
        rms_residual: f.rms_residual,
        no_bad_boxes,
        capped,
    })
}

/// Deviation in the two-block resolvent identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventCheck {
    /// `‖G_Λ - [G₁⊕G₂ - (G₁⊕G₂) Γ G_Λ]‖`.
    pub deviation: f64,
    /// `deviation / ‖G_Λ‖`.
    pub relative: f64,
}

/// Checks `G_Λ = G_{12} - G_{12} Γ G_Λ` for `Λ = Λ₁ ⊔ Λ₂`, where
/// `G_{12} = G_{Λ₁} ⊕ G_{Λ₂}` and `Γ = H_Λ - H_{Λ₁} ⊕ H_{Λ₂}`.
pub fn verify_resolvent_identity(
    spec: &OperatorSpec,
    part1: &[LatticePoint],
    part2: &[LatticePoint],
    z: ComplexEnergy,
) -> Result<ResolventCheck> {
    let s1: BTreeSet<&LatticePoint> = part1.iter().collect();
    let overlap = part2.iter().filter(|p| s1.contains(p)).count();
    if overlap > 0 {
        return Err(Error::Overlap(overlap));
    }
    let all: Vec<LatticePoint> = part1.iter().chain(part2).cloned().collect();
    let g = greens_on_points(spec, &all, z)?;
    let g1 = greens_on_points(spec, part1, z)?;
    let g2 = greens_on_points(spec, part2, z)?;
    let (n1, n) = (part1.len(), all.len());
    let h = &g.volume.matrix;
    let block = DMat::from_fn(n, n, |i, j| match (i < n1, j < n1) {
        (true, true) => g1.matrix[(i, j)],
        (false, false) => g2.matrix[(i - n1, j - n1)],
        _ => Complex64::new(0.0, 0.0),
    });
    let gamma = DMat::from_fn(n, n, |i, j| {
        if (i < n1) == (j < n1) {
            Complex64::new(0.0, 0.0)
        } else {
            h[(i, j)]
        }
    });
    let correction = block.matmul(&gamma).matmul(&g.matrix);
    let diff = DMat::from_fn(n, n, |i, j| {
        g.matrix[(i, j)] - (block[(i, j)] - correction[(i, j)])
    });
    let deviation = spectral_norm(&diff)?;
    let scale = g.norm()?;
    Ok(ResolventCheck {
        deviation,
        relative: if scale > 0.0 {
            deviation / scale
        } else {
            deviation
        },
    })
}

/// Exponential decay fit of the resolvent away from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombesThomasFit {
    /// Fitted `c` in `|G(0,n)| ≈ C e^{-c|n|}`; `+∞` when the entries vanish.
    pub rate: f64,
    pub prefactor: f64,
    pub rms_residual: f64,
    /// `dist(E, σ(H_box))`.
    pub distance: f64,
}

/// Fits the decay of `max_{|n| = r} |G(0, n)|` over `r ∈ [R/4, R/2]` on the box `[-R, R]^d`.
pub fn combes_thomas_probe(
    spec: &OperatorSpec,
    radius: u64,
    e: f64,
    eps: f64,
) -> Result<CombesThomasFit> {
    if radius < 4 {
        return Err(invalid(format!(
            "radius {radius} too small for a decay fit"
        )));
    }
    let points = cube_points(spec.dim(), radius as i64);
    let volume = assemble(spec, &points)?;
    let spectrum = hermitian_eigenvalues(&volume.matrix)?;
    let distance = spectrum
        .iter()
        .map(|l| Float::abs(l - e))
        .fold(f64::INFINITY, f64::min);
    if distance < 1.0 {
        return Err(Error::TooCloseToSpectrum {
            distance,
            required: 1.0,
        });
    }
    let g = resolvent_of(volume, ComplexEnergy::new(e, eps)?)?;
    let origin = g
        .volume
        .position(&LatticePoint::origin(spec.dim()))
        .ok_or(Error::EmptyRegion)?;
    let (lo, hi) = (radius.div_ceil(4), radius / 2);
    let mut shell_max = alloc::vec![0.0f64; (hi + 1) as usize];
    for (i, p) in g.points.iter().enumerate() {
        let r = p.norm();
        if (lo..=hi).contains(&r) {
            let a = g.matrix[(i, origin)].norm();
            shell_max[r as usize] = shell_max[r as usize].max(a);
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&r| shell_max[r as usize] > 0.0)
        .map(|r| (r as f64, Float::ln(shell_max[r as usize])))
        .unzip();
    if xs.len() < 2 {
        return Ok(CombesThomasFit {
            rate: f64::INFINITY,
            prefactor: 0.0,
            rms_residual: 0.0,
            distance,
        });
    }
    let f = fit_line(&xs, &ys)?;
    Ok(CombesThomasFit {
        rate: -f.slope,
        prefactor: Float::exp(f.intercept),
        rms_residual: f.rms_residual,
        distance,
    })
}

/// Outcome of the multiscale decay check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiscaleStatus {
    /// Too many bad sub-boxes; the decay check was skipped.
    HypothesisNotMet,
    DecayHolds,
    DecayFails,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleReport {
    pub n: u64,
    pub sub_size: u64,
    pub sub_boxes: usize,
    pub bad_sub_boxes: usize,
    /// `N^ς / N^ξ`.
    pub allowed_bad: f64,
    pub status: MultiscaleStatus,
    /// `min -ln|G(n,n')| / |n-n'|` over pairs with `|n-n'| >= ⌈N/10⌉`;
    /// `+∞` if those entries vanish; `NaN` if skipped.
    pub measured_rate: f64,
    pub required_rate: f64,
}

/// Counts strongly-bad size-`⌊N^ξ⌋` cubes in the grid tiling of `host`; if
/// at most `N^ς/N^ξ` are bad, tests `|G(n,n')| <= exp(-(c₂ - slack)|n-n'|)`
/// on the host. `slack` defaults to `c₂/10`.
pub fn multiscale_decay_check(
    spec: &OperatorSpec,
    host: &ElementaryRegion,
    z: ComplexEnergy,
    params: &ClassificationParams,
    slack: Option<f64>,
) -> Result<MultiscaleReport> {
    let n = host.size();
    let nf = n as f64;
    let sub_size = Float::floor(Float::powf(nf, params.xi)) as u64;
    if sub_size < 10 {
        return Err(invalid(format!(
            "sub-box size floor(N^xi) = {sub_size} is below 10"
        )));
    }
    let family = tile_disjoint(host, sub_size)?;
    let mut bad = 0;
    for cube in &family.members {
        if !is_strongly_good(spec, cube, z, params.c2, params.sigma)?.strongly_good {
            bad += 1;
        }
    }
    let allowed_bad = Float::powf(nf, params.varsigma - params.xi);
    let required_rate = params.c2 - slack.unwrap_or(params.c2 / 10.0);
    let mut report = MultiscaleReport {
        n,
        sub_size,
        sub_boxes: family.len(),
        bad_sub_boxes: bad,
        allowed_bad,
        status: MultiscaleStatus::HypothesisNotMet,
        measured_rate: f64::NAN,
        required_rate,
    };
    if bad as f64 > allowed_bad {
        return Ok(report);
    }
    let g = greens(spec, host, z)?;
    let min_dist = pair_threshold(n);
    let mut rate = f64::INFINITY;
    for (j, pj) in g.points.iter().enumerate() {
        for (i, pi) in g.points.iter().enumerate() {
            let dist = pi.dist(pj);
            let a = g.matrix[(i, j)].norm();
            if dist >= min_dist && a > 0.0 {
                rate = rate.min(-Float::ln(a) / dist as f64);
            }
        }
    }
    report.measured_rate = rate;
    report.status = if rate >= required_rate {
        MultiscaleStatus::DecayHolds
    } else {
        MultiscaleStatus::DecayFails
    };
    Ok(report)
}
