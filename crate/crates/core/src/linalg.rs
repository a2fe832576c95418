//! Dense linear algebra: column-major matrices, Hermitian eigendecomposition
//! (Householder tridiagonalization followed by implicit QL) and LU solves.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Field element for the dense routines: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    const ZERO: Self;
    const ONE: Self;
    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn abs(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn into_complex(self) -> Complex64;
    /// `self / |self|`, or one at zero.
    fn phase(self) -> Self {
        let a = self.abs();
        if a == 0.0 {
            Self::ONE
        } else {
            self.scale(1.0 / a)
        }
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn abs(self) -> f64 {
        Float::abs(self)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn into_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    #[inline]
    fn into_complex(self) -> Complex64 {
        self
    }
}

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Mutable access to two distinct columns.
    pub fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a != b, "columns must differ");
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            let (x, y) = (&mut hi[..r], &mut lo[b * r..(b + 1) * r]);
            (x, y)
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DMat<U> {
        DMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = other.col(j);
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in oc.iter().enumerate() {
                if b == T::ZERO {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![T::ZERO; self.rows];
        for (k, &b) in x.iter().enumerate() {
            if b == T::ZERO {
                continue;
            }
            for (d, &a) in out.iter_mut().zip(self.col(k)) {
                *d += a * b;
            }
        }
        out
    }

    /// `self^* x`.
    pub fn adjoint_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = T::ZERO;
                for (&a, &b) in self.col(j).iter().zip(x) {
                    acc += a.conj() * b;
                }
                acc
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        Float::sqrt(self.data.iter().map(|x| x.norm_sqr()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Exact (bitwise) Hermitian symmetry.
    pub fn is_hermitian_exact(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|j| (0..=j).all(|i| self[(i, j)] == self[(j, i)].conj()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|j| (0..=j).all(|i| (self[(i, j)] - self[(j, i)].conj()).abs() <= tol))
    }

    /// Largest `|i - j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for j in 0..self.cols {
            for (i, x) in self.col(j).iter().enumerate() {
                if *x != T::ZERO {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }
}

impl DMat<Complex64> {
    /// Real part, if every imaginary part is exactly zero.
    pub fn to_real(&self) -> Option<DMat<f64>> {
        if self.data.iter().any(|z| z.im != 0.0) {
            return None;
        }
        Some(self.map(|z| z.re))
    }
}

impl<T> Index<(usize, usize)> for DMat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl<T> IndexMut<(usize, usize)> for DMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

/// Eigendecomposition `A = V diag(values) V^*` of a Hermitian matrix,
/// eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<f64>,
    pub vectors: DMat<T>,
}

impl<T: Scalar> HermitianEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Reconstruct `V f(Λ) V^*`.
    pub fn function(&self, f: impl Fn(f64) -> Complex64) -> DMat<Complex64> {
        let n = self.dim();
        let v = self.vectors.map(|x| x.into_complex());
        let fv: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = DMat::zeros(n, n);
        for k in 0..n {
            let vk = v.col(k);
            for j in 0..n {
                let w = fv[k] * vk[j].conj();
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (d, &a) in out.col_mut(j).iter_mut().zip(vk) {
                    *d += a * w;
                }
            }
        }
        out
    }

    /// `max |A V - V Λ|` entrywise.
    pub fn residual(&self, a: &DMat<T>) -> f64 {
        let av = a.matmul(&self.vectors);
        let mut worst = 0.0f64;
        for k in 0..self.dim() {
            for (x, &v) in av.col(k).iter().zip(self.vectors.col(k)) {
                worst = worst.max((*x - v.scale(self.values[k])).abs());
            }
        }
        worst
    }

    /// `max |V^* V - I|` entrywise.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = T::ZERO;
                for (&a, &b) in self.vectors.col(i).iter().zip(self.vectors.col(j)) {
                    acc += a.conj() * b;
                }
                let target = if i == j { T::ONE } else { T::ZERO };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of a Hermitian matrix. Only the lower triangle is read.
///
/// Real tridiagonal input skips the Householder stage.
pub fn hermitian_eigen<T: Scalar>(a: &DMat<T>) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: DMat::zeros(0, 0),
        });
    }
    if a.bandwidth() <= 1 && is_real_lower_band(a) {
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].re()).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| a[(i + 1, i)].re()).collect();
        let method = if n >= INVERSE_ITERATION_MIN_DIM {
            TridiagonalMethod::InverseIteration
        } else {
            TridiagonalMethod::Ql
        };
        let eig = tridiagonal_eigen(&d, &e, method)?;
        return Ok(HermitianEigen {
            values: eig.values,
            vectors: eig.vectors.map(T::from_re),
        });
    }
    let (mut d, mut e, mut z) = tridiagonalize(a);
    tql2(&mut d, &mut e, &mut z)?;
    Ok(HermitianEigen {
        values: d,
        vectors: z,
    })
}

/// Real tridiagonal inputs at least this large get their eigenvectors by
/// inverse iteration instead of QL accumulation.
pub const INVERSE_ITERATION_MIN_DIM: usize = 400;

/// Eigenvector strategy for real symmetric tridiagonal matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TridiagonalMethod {
    /// Implicit QL with rotations accumulated into the vectors, `O(n^3)`.
    Ql,
    /// QL eigenvalues, then one shifted tridiagonal solve sequence per
    /// eigenvalue with Gram–Schmidt inside clusters of close eigenvalues;
    /// `O(n^2)` unless clusters are large.
    InverseIteration,
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (`e.len() == d.len() - 1`).
pub fn tridiagonal_eigen(
    d: &[f64],
    e: &[f64],
    method: TridiagonalMethod,
) -> Result<HermitianEigen<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: DMat::zeros(0, 0),
        });
    }
    if e.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: e.len(),
        });
    }
    let mut dd = d.to_vec();
    let mut ee = e.to_vec();
    ee.push(0.0);
    match method {
        TridiagonalMethod::Ql => {
            let mut z = DMat::identity(n);
            tql2(&mut dd, &mut ee, &mut z)?;
            Ok(HermitianEigen {
                values: dd,
                vectors: z,
            })
        }
        TridiagonalMethod::InverseIteration => {
            let mut empty: DMat<f64> = DMat::zeros(0, n);
            tql2(&mut dd, &mut ee, &mut empty)?;
            let vectors = inverse_iteration(d, e, &dd);
            Ok(HermitianEigen {
                values: dd,
                vectors,
            })
        }
    }
}

fn inverse_iteration(d: &[f64], e: &[f64], values: &[f64]) -> DMat<f64> {
    let n = d.len();
    let mut z = DMat::<f64>::zeros(n, n);
    let tnorm = (0..n)
        .map(|i| {
            Float::abs(d[i])
                + if i > 0 { Float::abs(e[i - 1]) } else { 0.0 }
                + if i + 1 < n { Float::abs(e[i]) } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ortol = 1e-6 * tnorm;
    let tiny = f64::EPSILON * tnorm;
    let mut cluster_start = 0;
    let mut seed = 0x9E37_79B9_7F4A_7C15u64;
    let mut fac = TridiagLu::with_capacity(n);
    let mut x = vec![0.0; n];
    for k in 0..n {
        if k > 0 && values[k] - values[k - 1] > ortol {
            cluster_start = k;
        }
        // Coincident shifts are nudged apart so the factorisations differ.
        let mut shift = values[k];
        if k > cluster_start {
            let prev = values[k - 1];
            if shift - prev < 10.0 * tiny {
                shift = prev + 10.0 * tiny;
            }
        }
        fac.factor(d, e, shift, tiny);
        for xi in x.iter_mut() {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *xi = ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        }
        for _ in 0..3 {
            normalize(&mut x);
            fac.solve(&mut x);
            for j in cluster_start..k {
                let zj = z.col(j);
                let dot: f64 = zj.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, &a) in x.iter_mut().zip(zj) {
                    *xi -= dot * a;
                }
            }
        }
        normalize(&mut x);
        z.col_mut(k).copy_from_slice(&x);
    }
    z
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(Float::abs(*v)));
    if scale == 0.0 {
        x[0] = 1.0;
        return;
    }
    let nrm = scale * Float::sqrt(x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>());
    for v in x.iter_mut() {
        *v /= nrm;
    }
}

/// Gaussian elimination with partial pivoting for `T - σ I`.
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn with_capacity(n: usize) -> Self {
        Self {
            dl: vec![0.0; n.saturating_sub(1)],
            d: vec![0.0; n],
            du: vec![0.0; n.saturating_sub(1)],
            du2: vec![0.0; n.saturating_sub(2)],
            swapped: vec![false; n.saturating_sub(1)],
        }
    }

    fn factor(&mut self, diag: &[f64], off: &[f64], shift: f64, tiny: f64) {
        let n = diag.len();
        for i in 0..n {
            self.d[i] = diag[i] - shift;
        }
        self.dl.copy_from_slice(off);
        self.du.copy_from_slice(off);
        for v in self.du2.iter_mut() {
            *v = 0.0;
        }
        for i in 0..n.saturating_sub(1) {
            if Float::abs(self.d[i]) >= Float::abs(self.dl[i]) {
                self.swapped[i] = false;
                if self.d[i] == 0.0 {
                    self.d[i] = tiny;
                }
                let fact = self.dl[i] / self.d[i];
                self.dl[i] = fact;
                self.d[i + 1] -= fact * self.du[i];
            } else {
                self.swapped[i] = true;
                let fact = self.d[i] / self.dl[i];
                self.d[i] = self.dl[i];
                self.dl[i] = fact;
                let temp = self.du[i];
                self.du[i] = self.d[i + 1];
                self.d[i + 1] = temp - fact * self.d[i + 1];
                if i + 2 < n {
                    self.du2[i] = self.du[i + 1];
                    self.du[i + 1] *= -fact;
                }
            }
        }
        if self.d[n - 1] == 0.0 {
            self.d[n - 1] = tiny;
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        // Rescale to keep later iterations finite.
        let m = b.iter().fold(0.0f64, |m, v| m.max(Float::abs(*v)));
        if m > 1e150 {
            for v in b.iter_mut() {
                *v /= m;
            }
        }
    }
}

/// Eigenvalues only (no vector accumulation).
pub fn hermitian_eigenvalues<T: Scalar>(a: &DMat<T>) -> Result<Vec<f64>> {
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = if a.bandwidth() <= 1 && is_real_lower_band(a) {
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].re()).collect();
        let mut e = vec![0.0; n];
        for i in 0..n - 1 {
            e[i] = a[(i + 1, i)].re();
        }
        (d, e)
    } else {
        let (d, e, _) = tridiagonalize(a);
        (d, e)
    };
    let mut dummy: DMat<f64> = DMat::zeros(0, n);
    tql2(&mut d, &mut e, &mut dummy)?;
    Ok(d)
}

fn is_real_lower_band<T: Scalar>(a: &DMat<T>) -> bool {
    let n = a.rows();
    (0..n).all(|i| a[(i, i)].conj() == a[(i, i)])
        && (0..n.saturating_sub(1)).all(|i| a[(i + 1, i)].conj() == a[(i + 1, i)])
}

/// Householder reduction `A = Q T Q^*` with `T` real symmetric tridiagonal.
/// Returns the diagonal, the subdiagonal (`e[i] = T[i+1, i]`, `e[n-1] = 0`)
/// and `Q` with the phase normalisation folded in.
fn tridiagonalize<T: Scalar>(a: &DMat<T>) -> (Vec<f64>, Vec<f64>, DMat<T>) {
    let n = a.rows();
    // Work on a full Hermitian copy built from the lower triangle.
    let mut w = DMat::from_fn(
        n,
        n,
        |i, j| if i >= j { a[(i, j)] } else { a[(j, i)].conj() },
    );
    let mut q = DMat::<T>::identity(n);
    let mut sub: Vec<T> = vec![T::ZERO; n];
    let mut v = vec![T::ZERO; n];
    let mut p = vec![T::ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let m0 = k + 1;
        let xnorm = Float::sqrt((m0..n).map(|i| w[(i, k)].norm_sqr()).sum::<f64>());
        let x0 = w[(m0, k)];
        let tail = xnorm * xnorm - x0.norm_sqr();
        if xnorm == 0.0 || tail <= f64::MIN_POSITIVE {
            sub[k] = x0;
            continue;
        }
        // alpha = -phase(x0) * |x|; v = x - alpha e1, normalised.
        let alpha = -(x0.phase().scale(xnorm));
        for i in m0..n {
            v[i] = w[(i, k)];
        }
        v[m0] -= alpha;
        let vnorm = Float::sqrt((m0..n).map(|i| v[i].norm_sqr()).sum::<f64>());
        for vi in v[m0..n].iter_mut() {
            *vi = vi.scale(1.0 / vnorm);
        }
        sub[k] = alpha;

        // p = W v on the trailing block, beta = v^* p (real).
        for pi in p[m0..n].iter_mut() {
            *pi = T::ZERO;
        }
        for j in m0..n {
            let vj = v[j];
            let col = w.col(j);
            for i in m0..n {
                p[i] += col[i] * vj;
            }
        }
        let mut beta = T::ZERO;
        for i in m0..n {
            beta += v[i].conj() * p[i];
        }
        let beta = beta.re();
        // W <- W - 2 (v w^* + w v^*), w = p - beta v.
        for i in m0..n {
            p[i] -= v[i].scale(beta);
        }
        for j in m0..n {
            let vj = v[j].conj().scale(2.0);
            let pj = p[j].conj().scale(2.0);
            let col = w.col_mut(j);
            for i in m0..n {
                col[i] -= v[i] * pj + p[i] * vj;
            }
        }
        w[(m0, k)] = alpha;
        w[(k, m0)] = alpha.conj();
        for i in m0 + 1..n {
            w[(i, k)] = T::ZERO;
            w[(k, i)] = T::ZERO;
        }
        // Q <- Q H, H = I - 2 v v^*.
        for r in 0..n {
            let mut acc = T::ZERO;
            for i in m0..n {
                acc += q[(r, i)] * v[i];
            }
            let acc = acc.scale(2.0);
            for i in m0..n {
                let vc = v[i].conj();
                q[(r, i)] -= acc * vc;
            }
        }
    }
    if n >= 2 {
        sub[n - 2] = w[(n - 1, n - 2)];
    }

    let d: Vec<f64> = (0..n).map(|i| w[(i, i)].re()).collect();
    // Make the subdiagonal real and nonnegative with a diagonal unitary.
    let mut phase = T::ONE;
    let mut e = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let t = sub[k];
        let a = t.abs();
        e[k] = a;
        phase = if a == 0.0 { phase } else { phase * t.phase() };
        for x in q.col_mut(k + 1) {
            *x = *x * phase;
        }
    }
    (d, e, q)
}

/// Implicit QL on a symmetric tridiagonal matrix (`e[i] = T[i+1, i]`),
/// rotations accumulated into the columns of `z` unless it has zero rows.
/// On return `d` holds ascending eigenvalues and `z` the matching vectors.
fn tql2<T: Scalar>(d: &mut [f64], e: &mut [f64], z: &mut DMat<T>) -> Result<()> {
    let n = d.len();
    let accumulate = z.rows() > 0;
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(Float::abs(d[l]) + Float::abs(e[l]));
        let mut m = l;
        while m < n {
            if Float::abs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d[l + 2..n].iter_mut() {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if accumulate {
                        let (zi, zi1) = z.two_cols_mut(i, i + 1);
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = a.scale(s) + hb.scale(c);
                            *a = a.scale(c) - hb.scale(s);
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if Float::abs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort keeps column swaps at O(n) moves.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            if accumulate {
                let (a, b) = z.two_cols_mut(i, k);
                a.swap_with_slice(b);
            }
        }
    }
    Ok(())
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DMat<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &DMat<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= scale * f64::EPSILON * 1e-6 || best == 0.0 {
                return Err(Error::Singular(k));
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] = lu[(i, k)] / pivot;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == T::ZERO {
                    continue;
                }
                let (left, right) = lu.two_cols_mut(k, j);
                for i in k + 1..n {
                    right[i] -= left[i] * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            let xk = x[k];
            if xk == T::ZERO {
                continue;
            }
            let col = self.lu.col(k);
            for i in k + 1..n {
                x[i] -= col[i] * xk;
            }
        }
        for k in (0..n).rev() {
            let col = self.lu.col(k);
            x[k] = x[k] / col[k];
            let xk = x[k];
            for i in 0..k {
                x[i] -= col[i] * xk;
            }
        }
        x
    }

    pub fn inverse(&self) -> DMat<T> {
        let n = self.dim();
        let mut out = DMat::zeros(n, n);
        let mut e = vec![T::ZERO; n];
        for j in 0..n {
            e[j] = T::ONE;
            let x = self.solve(&e);
            out.col_mut(j).copy_from_slice(&x);
            e[j] = T::ZERO;
        }
        out
    }
}

/// Spectral norm of an arbitrary matrix, `sqrt(λ_max(A^* A))`.
pub fn spectral_norm<T: Scalar>(a: &DMat<T>) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let gram = a.adjoint().matmul(a);
    let vals = hermitian_eigenvalues(&gram)?;
    Ok(Float::sqrt(vals.last().copied().unwrap_or(0.0).max(0.0)))
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if Float::abs(self.sum) >= Float::abs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl core::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random_hermitian(n: usize, seed: u64) -> DMat<Complex64> {
        let mut s = seed;
        let mut a = DMat::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let z = if i == j {
                    Complex64::new(lcg(&mut s), 0.0)
                } else {
                    Complex64::new(lcg(&mut s), lcg(&mut s))
                };
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    #[test]
    fn complex_hermitian_eigen_reconstructs() {
        for &n in &[1usize, 2, 3, 7, 20] {
            let a = random_hermitian(n, 17 + n as u64);
            let eig = hermitian_eigen(&a).unwrap();
            assert!(
                eig.residual(&a) < 1e-12,
                "n={n} residual {}",
                eig.residual(&a)
            );
            assert!(eig.orthogonality_defect() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn real_symmetric_and_tridiagonal_paths() {
        let n = 30;
        let mut s = 5u64;
        let mut a = DMat::<f64>::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let x = lcg(&mut s);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let eig = hermitian_eigen(&a).unwrap();
        assert!(eig.residual(&a) < 1e-12);
        assert!(eig.orthogonality_defect() < 1e-12);

        // Free Laplacian chain: eigenvalues 2 cos(k pi / (n + 1)).
        let t = DMat::<f64>::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
        let eig = hermitian_eigen(&t).unwrap();
        let mut exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 * libm::cos(k as f64 * core::f64::consts::PI / (n as f64 + 1.0)))
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in eig.values.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(eig.orthogonality_defect() < 1e-12);
        let vals = hermitian_eigenvalues(&t).unwrap();
        for (x, y) in vals.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn lu_inverse_and_singular_detection() {
        let a = random_hermitian(12, 3).map(|z| z + Complex64::new(0.0, 0.3));
        let inv = Lu::new(&a).unwrap().inverse();
        let prod = a.matmul(&inv);
        let id = DMat::<Complex64>::identity(12);
        let mut worst = 0.0f64;
        for i in 0..12 {
            for j in 0..12 {
                worst = worst.max((prod[(i, j)] - id[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-12);

        let sing = DMat::<f64>::from_fn(3, 3, |i, _| i as f64);
        assert!(matches!(Lu::new(&sing), Err(Error::Singular(_))));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMat::<f64>::from_fn(4, 4, |i, j| if i == j { -(i as f64) - 0.5 } else { 0.0 });
        assert!((spectral_norm(&a).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let s: KahanSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert!((s.value() - 2e-16).abs() < 1e-30);
    }

    #[test]
    fn inverse_iteration_matches_ql() {
        let n = 300;
        let d: Vec<f64> = (0..n)
            .map(|i| {
                6.0 * libm::cos(
                    2.0 * core::f64::consts::PI * (0.3 + i as f64 * 0.618_033_988_749_894_8),
                )
            })
            .collect();
        let e = vec![1.0; n - 1];
        let a = DMat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let ql = tridiagonal_eigen(&d, &e, TridiagonalMethod::Ql).unwrap();
        let ii = tridiagonal_eigen(&d, &e, TridiagonalMethod::InverseIteration).unwrap();
        for (x, y) in ql.values.iter().zip(&ii.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(ii.residual(&a) < 1e-11);
        assert!(ii.orthogonality_defect() < 1e-11);
    }

    #[test]
    fn inverse_iteration_handles_degenerate_blocks() {
        // Two decoupled copies of the same block: every eigenvalue is double.
        let d = [0.5, -1.0, 2.0, 0.5, -1.0, 2.0];
        let e = [1.0, 0.3, 0.0, 1.0, 0.3];
        let a = DMat::<f64>::from_fn(6, 6, |i, j| {
            if i == j {
                d[i]
            } else if i.abs_diff(j) == 1 {
                e[i.min(j)]
            } else {
                0.0
            }
        });
        let ii = tridiagonal_eigen(&d, &e, TridiagonalMethod::InverseIteration).unwrap();
        assert!(ii.residual(&a) < 1e-12);
        assert!(ii.orthogonality_defect() < 1e-12);
    }
}
