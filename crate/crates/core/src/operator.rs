//! Quasi-periodic long-range operators
//! `H_x = λ⁻¹ S + v(f^n(x)) δ_{n n'}` on `Z^d`.
//!
//! `S` is a covariant (Toeplitz) kernel given by finitely many offsets,
//! `v` a real trigonometric polynomial on the torus `T^b`, and `f^n` one
//! of three shift dynamics. Finite-volume restrictions are assembled as
//! dense Hermitian matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePoint, Region};
use crate::linalg::DMat;

/// Exponential decay envelope `|S(k)| <= amplitude * exp(-rate |k|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub amplitude: f64,
    pub rate: f64,
}

/// Explicit Toeplitz coefficients `S(n, n') = s(n - n')`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzKernel {
    terms: Vec<(LatticePoint, Complex64)>,
    decay: DecayBound,
}

impl ToeplitzKernel {
    /// Validates `s(k) = conj(s(-k))` and the decay envelope on every offset.
    pub fn new(terms: Vec<(LatticePoint, Complex64)>, decay: DecayBound) -> Result<Self> {
        if !(decay.amplitude > 0.0 && decay.rate > 0.0) {
            return Err(invalid("decay constants must be positive"));
        }
        let d = terms.first().map_or(0, |t| t.0.dim());
        let mut map = BTreeMap::new();
        for (k, s) in &terms {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: k.dim(),
                });
            }
            if map.insert(k.clone(), *s).is_some() {
                return Err(invalid(format!("duplicate offset {k}")));
            }
        }
        for (k, s) in &map {
            let mirror = map
                .get(&k.neg())
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0));
            if (mirror.conj() - *s).norm() > 1e-14 * (1.0 + s.norm()) {
                return Err(invalid(format!("kernel is not Hermitian at offset {k}")));
            }
            let envelope = decay.amplitude * Float::exp(-decay.rate * k.norm() as f64);
            if s.norm() > envelope * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "|s({k})| = {} exceeds the decay envelope {envelope}",
                    s.norm()
                )));
            }
        }
        Ok(Self {
            terms: map.into_iter().collect(),
            decay,
        })
    }

    pub fn terms(&self) -> &[(LatticePoint, Complex64)] {
        &self.terms
    }
}

/// The hopping part `S` of the operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Zero,
    /// Nearest-neighbour hopping with unit weight (`(Δu)_n = Σ_{|e|=1} u_{n+e}`).
    Laplacian,
    Toeplitz(ToeplitzKernel),
}

impl Kernel {
    /// Nonzero offsets and values for lattice dimension `d`.
    pub fn coefficients(&self, d: usize) -> Vec<(LatticePoint, Complex64)> {
        match self {
            Kernel::Zero => Vec::new(),
            Kernel::Laplacian => {
                let mut out = Vec::with_capacity(2 * d);
                for axis in 0..d {
                    for sign in [-1i64, 1] {
                        let mut c = vec![0i64; d];
                        c[axis] = sign;
                        out.push((LatticePoint::new(c), Complex64::new(1.0, 0.0)));
                    }
                }
                out.sort_by(|a, b| a.0.cmp(&b.0));
                out
            }
            Kernel::Toeplitz(t) => t.terms.clone(),
        }
    }

    /// Decay constants `(C₁, c₁)`; nearest-neighbour kernels use `c₁ = 1`.
    pub fn decay(&self) -> DecayBound {
        match self {
            Kernel::Zero => DecayBound {
                amplitude: 1.0,
                rate: 1.0,
            },
            Kernel::Laplacian => DecayBound {
                amplitude: core::f64::consts::E,
                rate: 1.0,
            },
            Kernel::Toeplitz(t) => t.decay,
        }
    }

    /// `sup_n Σ_{n'} |S(n, n')|`.
    pub fn row_sum(&self, d: usize) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Laplacian => 2.0 * d as f64,
            Kernel::Toeplitz(t) => t.terms.iter().map(|(_, s)| s.norm()).sum(),
        }
    }
}

/// `a cos(2π k·θ) + b sin(2π k·θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub freq: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// Real trigonometric polynomial on `T^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    torus_dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(torus_dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        if torus_dim == 0 {
            return Err(invalid("torus dimension must be at least 1"));
        }
        for t in &terms {
            if t.freq.len() != torus_dim {
                return Err(Error::DimensionMismatch {
                    expected: torus_dim,
                    got: t.freq.len(),
                });
            }
            if !(t.cos.is_finite() && t.sin.is_finite()) {
                return Err(invalid("non-finite trigonometric coefficient"));
            }
        }
        Ok(Self { torus_dim, terms })
    }

    pub fn constant(torus_dim: usize, c: f64) -> Self {
        Self {
            torus_dim,
            terms: vec![TrigTerm {
                freq: vec![0; torus_dim],
                cos: c,
                sin: 0.0,
            }],
        }
    }

    /// `amplitude * cos(2π θ_1)` on `T^1`.
    pub fn cosine(amplitude: f64) -> Self {
        Self {
            torus_dim: 1,
            terms: vec![TrigTerm {
                freq: vec![1],
                cos: amplitude,
                sin: 0.0,
            }],
        }
    }

    pub fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let phase: f64 = t.freq.iter().zip(theta).map(|(&k, &x)| k as f64 * x).sum();
            let arg = 2.0 * PI * phase;
            if t.cos != 0.0 {
                acc += t.cos * libm::cos(arg);
            }
            if t.sin != 0.0 {
                acc += t.sin * libm::sin(arg);
            }
        }
        acc
    }

    /// Upper bound on `sup |v|` from the coefficients.
    pub fn sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                if t.freq.iter().all(|&k| k == 0) {
                    Float::abs(t.cos)
                } else {
                    libm::hypot(t.cos, t.sin)
                }
            })
            .sum()
    }
}

/// Potential `v` together with the coupling `λ` that divides the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub v: TrigPolynomial,
    pub coupling: f64,
}

/// How the lattice acts on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMode {
    /// `d = 1`, any `b`: `x + n α`.
    LinearForm,
    /// `b = 1`, any `d`: `x + n₁α₁ + ⋯ + n_d α_d`.
    RankOne,
    /// `d = b`: `(x_i + n_i α_i)_i`.
    Product,
}

/// Shift dynamics `f^n(x)` on `T^b`, reduced mod 1 in double precision
/// (orbit points lose accuracy once `|n α|` approaches `1e9`).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDynamics {
    pub mode: ShiftMode,
    pub alpha: Vec<f64>,
    pub phase: Vec<f64>,
}

#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - Float::floor(x);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl ShiftDynamics {
    pub fn torus_dim(&self) -> usize {
        self.phase.len()
    }

    fn validate(&self, d: usize) -> Result<()> {
        let b = self.phase.len();
        let ok = match self.mode {
            ShiftMode::LinearForm => d == 1 && self.alpha.len() == b,
            ShiftMode::RankOne => b == 1 && self.alpha.len() == d,
            ShiftMode::Product => b == d && self.alpha.len() == d,
        };
        if !ok || b == 0 {
            return Err(invalid(format!(
                "{:?} shift needs consistent sizes: d={d}, |alpha|={}, |x|={b}",
                self.mode,
                self.alpha.len()
            )));
        }
        if self.alpha.iter().chain(&self.phase).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite frequency or phase"));
        }
        Ok(())
    }

    /// `f^n(x)`.
    pub fn orbit(&self, n: &LatticePoint) -> Vec<f64> {
        self.orbit_from(&self.phase, n)
    }

    /// `f^n(y)` for an arbitrary starting point `y`.
    pub fn orbit_from(&self, y: &[f64], n: &LatticePoint) -> Vec<f64> {
        let c = n.coords();
        match self.mode {
            ShiftMode::LinearForm => y
                .iter()
                .zip(&self.alpha)
                .map(|(&x, &a)| frac(x + c[0] as f64 * a))
                .collect(),
            ShiftMode::RankOne => {
                let s: f64 = c
                    .iter()
                    .zip(&self.alpha)
                    .map(|(&k, &a)| frac(k as f64 * a))
                    .sum();
                vec![frac(y[0] + s)]
            }
            ShiftMode::Product => y
                .iter()
                .zip(&self.alpha)
                .zip(c)
                .map(|((&x, &a), &k)| frac(x + k as f64 * a))
                .collect(),
        }
    }

    pub fn with_phase(&self, phase: Vec<f64>) -> Self {
        Self {
            mode: self.mode,
            alpha: self.alpha.clone(),
            phase,
        }
    }
}

/// Full operator description.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    dim: usize,
    kernel: Kernel,
    potential: PotentialSpec,
    dynamics: ShiftDynamics,
}

impl OperatorSpec {
    pub fn new(
        dim: usize,
        kernel: Kernel,
        potential: PotentialSpec,
        dynamics: ShiftDynamics,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("lattice dimension must be at least 1"));
        }
        if !(potential.coupling > 0.0 && potential.coupling.is_finite()) {
            return Err(invalid("coupling must be positive"));
        }
        if let Kernel::Toeplitz(t) = &kernel {
            if let Some((k, _)) = t.terms.first() {
                if k.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: k.dim(),
                    });
                }
            }
        }
        dynamics.validate(dim)?;
        if potential.v.torus_dim() != dynamics.torus_dim() {
            return Err(Error::DimensionMismatch {
                expected: dynamics.torus_dim(),
                got: potential.v.torus_dim(),
            });
        }
        Ok(Self {
            dim,
            kernel,
            potential,
            dynamics,
        })
    }

    /// `Δ + 2λ cos(2π(x + nα))` on `Z`.
    pub fn almost_mathieu(lambda: f64, alpha: f64, phase: f64) -> Self {
        Self {
            dim: 1,
            kernel: Kernel::Laplacian,
            potential: PotentialSpec {
                v: TrigPolynomial::cosine(2.0 * lambda),
                coupling: 1.0,
            },
            dynamics: ShiftDynamics {
                mode: ShiftMode::LinearForm,
                alpha: vec![alpha],
                phase: vec![phase],
            },
        }
    }

    /// Free Laplacian on `Z^d`.
    pub fn free_laplacian(d: usize) -> Self {
        Self::constant_potential(d, Kernel::Laplacian, 0.0)
    }

    /// Kernel plus a constant potential `c`.
    pub fn constant_potential(d: usize, kernel: Kernel, c: f64) -> Self {
        let dynamics = if d == 1 {
            ShiftDynamics {
                mode: ShiftMode::LinearForm,
                alpha: vec![0.0],
                phase: vec![0.0],
            }
        } else {
            ShiftDynamics {
                mode: ShiftMode::RankOne,
                alpha: vec![0.0; d],
                phase: vec![0.0],
            }
        };
        Self {
            dim: d,
            kernel,
            potential: PotentialSpec {
                v: TrigPolynomial::constant(1, c),
                coupling: 1.0,
            },
            dynamics,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn dynamics(&self) -> &ShiftDynamics {
        &self.dynamics
    }

    pub fn with_phase(&self, phase: Vec<f64>) -> Result<Self> {
        let dynamics = self.dynamics.with_phase(phase);
        dynamics.validate(self.dim)?;
        Ok(Self {
            dynamics,
            ..self.clone()
        })
    }

    /// Whether `H = Δ + v` on `Z` (coupling one).
    pub fn is_schrodinger_1d(&self) -> bool {
        self.dim == 1 && self.kernel == Kernel::Laplacian && self.potential.coupling == 1.0
    }

    /// `v(f^n(x))`.
    pub fn evaluate_potential(&self, n: &LatticePoint) -> f64 {
        self.potential.v.eval(&self.dynamics.orbit(n))
    }

    /// Kernel decay constants after the `λ⁻¹` scaling.
    pub fn kernel_decay(&self) -> DecayBound {
        let d = self.kernel.decay();
        DecayBound {
            amplitude: d.amplitude / self.potential.coupling,
            rate: d.rate,
        }
    }

    /// `K` with `σ(H) ⊂ [-K + 1, K - 1]`: one plus a row-sum bound on `|H|`.
    pub fn spectral_bound(&self) -> f64 {
        1.0 + self.kernel.row_sum(self.dim) / self.potential.coupling + self.potential.v.sup_bound()
    }
}

/// Restriction of the operator to a finite set of sites.
#[derive(Debug, Clone)]
pub struct FiniteVolume {
    pub points: Vec<LatticePoint>,
    pub index: BTreeMap<LatticePoint, usize>,
    pub matrix: DMat<Complex64>,
}

impl FiniteVolume {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, p: &LatticePoint) -> Option<usize> {
        self.index.get(p).copied()
    }
}

/// `R_Λ H R_Λ` on the given sites (in the given order); the result is
/// exactly Hermitian.
pub fn assemble(spec: &OperatorSpec, points: &[LatticePoint]) -> Result<FiniteVolume> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut index = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if p.dim() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: p.dim(),
            });
        }
        if index.insert(p.clone(), i).is_some() {
            return Err(invalid(format!("duplicate site {p}")));
        }
    }
    let n = points.len();
    let inv_coupling = 1.0 / spec.potential.coupling;
    let coeffs = spec.kernel.coefficients(spec.dim);
    let mut m = DMat::zeros(n, n);
    for (i, p) in points.iter().enumerate() {
        let mut diag = spec.evaluate_potential(p);
        for (k, s) in &coeffs {
            if k.norm() == 0 {
                diag += s.re * inv_coupling;
                continue;
            }
            // H(n, n - k) = s(k) / λ; fill the upper triangle and mirror.
            if let Some(&j) = index.get(&p.sub(k)) {
                if j > i {
                    let h = s * inv_coupling;
                    m[(i, j)] = h;
                    m[(j, i)] = h.conj();
                }
            }
        }
        m[(i, i)] = Complex64::new(diag, 0.0);
    }
    Ok(FiniteVolume {
        points: points.to_vec(),
        index,
        matrix: m,
    })
}

pub fn assemble_region(spec: &OperatorSpec, region: &impl Region) -> Result<FiniteVolume> {
    if region.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: region.dim(),
        });
    }
    assemble(spec, &region.points())
}

/// Finitely supported state on `Z^d`, kept sorted by site.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    entries: Vec<(LatticePoint, Complex64)>,
}

impl StateVector {
    pub fn new(mut entries: Vec<(LatticePoint, Complex64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("duplicate site in state"));
        }
        if let Some(d) = entries.first().map(|e| e.0.dim()) {
            if entries.iter().any(|e| e.0.dim() != d) {
                return Err(invalid("mixed dimensions in state"));
            }
        }
        Ok(Self { entries })
    }

    /// `δ_n`.
    pub fn delta(n: LatticePoint) -> Self {
        Self {
            entries: vec![(n, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn entries(&self) -> &[(LatticePoint, Complex64)] {
        &self.entries
    }

    pub fn amplitude(&self, n: &LatticePoint) -> Complex64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(n))
            .map_or(Complex64::new(0.0, 0.0), |i| self.entries[i].1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum()
    }

    /// Smallest `K₁` with support inside `[-K₁, K₁]^d`.
    pub fn support_radius(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.1 != Complex64::new(0.0, 0.0))
            .map(|e| e.0.norm())
            .max()
            .unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = &LatticePoint> {
        self.entries
            .iter()
            .filter(|e| e.1 != Complex64::new(0.0, 0.0))
            .map(|e| &e.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ElementaryRegion;
    use crate::GOLDEN_MEAN;

    fn p(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    #[test]
    fn zero_kernel_constant_potential_is_scalar() {
        let spec = OperatorSpec::constant_potential(2, Kernel::Zero, 1.5);
        let vol = assemble_region(&spec, &ElementaryRegion::cube(p(&[0, 0]), 1)).unwrap();
        for i in 0..vol.len() {
            for j in 0..vol.len() {
                let want = if i == j { 1.5 } else { 0.0 };
                assert_eq!(vol.matrix[(i, j)], Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn laplacian_chain() {
        let spec = OperatorSpec::free_laplacian(1);
        let vol = assemble_region(&spec, &ElementaryRegion::cube(p(&[0]), 1)).unwrap();
        let want = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(vol.matrix[(i, j)], Complex64::new(want[i][j], 0.0));
            }
        }
    }

    #[test]
    fn almost_mathieu_diagonal() {
        let spec = OperatorSpec::almost_mathieu(3.0, GOLDEN_MEAN, 0.0);
        let vol = assemble_region(&spec, &ElementaryRegion::cube(p(&[0]), 2)).unwrap();
        for (i, n) in (-2i64..=2).enumerate() {
            let want = 6.0 * libm::cos(2.0 * PI * n as f64 * GOLDEN_MEAN);
            assert!((vol.matrix[(i, i)].re - want).abs() < 1e-12);
        }
        assert!(vol.matrix.is_hermitian_exact());
    }

    #[test]
    fn spectral_bounds() {
        assert_eq!(
            OperatorSpec::constant_potential(1, Kernel::Zero, 0.0).spectral_bound(),
            1.0
        );
        assert_eq!(OperatorSpec::free_laplacian(1).spectral_bound(), 3.0);
        assert_eq!(
            OperatorSpec::almost_mathieu(3.0, GOLDEN_MEAN, 0.0).spectral_bound(),
            9.0
        );
    }

    #[test]
    fn potential_evaluation_modes() {
        let v = TrigPolynomial::cosine(1.0);
        let spec = OperatorSpec::new(
            1,
            Kernel::Zero,
            PotentialSpec { v, coupling: 1.0 },
            ShiftDynamics {
                mode: ShiftMode::LinearForm,
                alpha: vec![0.25],
                phase: vec![0.0],
            },
        )
        .unwrap();
        assert!(spec.evaluate_potential(&p(&[1])).abs() < 1e-15);

        let rank_one = ShiftDynamics {
            mode: ShiftMode::RankOne,
            alpha: vec![0.125, 0.25],
            phase: vec![0.0625],
        };
        assert_eq!(rank_one.orbit(&p(&[1, 1])), vec![0.0625 + 0.125 + 0.25]);

        let product = ShiftDynamics {
            mode: ShiftMode::Product,
            alpha: vec![0.375, 0.5],
            phase: vec![0.25, 0.125],
        };
        assert_eq!(product.orbit(&p(&[2, 0])), vec![0.0, 0.125]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let dyn1 = ShiftDynamics {
            mode: ShiftMode::Product,
            alpha: vec![0.1],
            phase: vec![0.0, 0.0],
        };
        assert!(OperatorSpec::new(
            2,
            Kernel::Zero,
            PotentialSpec {
                v: TrigPolynomial::constant(2, 0.0),
                coupling: 1.0
            },
            dyn1
        )
        .is_err());
        let non_herm = ToeplitzKernel::new(
            vec![
                (p(&[1]), Complex64::new(0.1, 0.2)),
                (p(&[-1]), Complex64::new(0.1, 0.2)),
            ],
            DecayBound {
                amplitude: 1.0,
                rate: 1.0,
            },
        );
        assert!(non_herm.is_err());
        let too_big = ToeplitzKernel::new(
            vec![
                (p(&[2]), Complex64::new(1.0, 0.0)),
                (p(&[-2]), Complex64::new(1.0, 0.0)),
            ],
            DecayBound {
                amplitude: 1.0,
                rate: 1.0,
            },
        );
        assert!(too_big.is_err());
    }

    #[test]
    fn duplicate_sites_rejected() {
        let spec = OperatorSpec::free_laplacian(1);
        assert!(assemble(&spec, &[p(&[0]), p(&[0])]).is_err());
        assert_eq!(assemble(&spec, &[]).unwrap_err(), Error::EmptyRegion);
    }
}
