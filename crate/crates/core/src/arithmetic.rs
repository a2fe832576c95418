//! Discrepancy of shift orbits, Diophantine checks and continued fractions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{invalid, Result};
use crate::operator::frac;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscrepancyMethod {
    Exact1d,
    GridBd,
}

impl DiscrepancyMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscrepancyMethod::Exact1d => "exact-1d",
            DiscrepancyMethod::GridBd => "grid-bd",
        }
    }
}

/// `sup_S |A(S)/N - Leb(S)|` over boxes `S = Π[ρ_k, β_k]`, `0 <= ρ_k < β_k < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub n: usize,
    pub b: usize,
    pub value: f64,
    /// Box attaining the supremum, or the limit box when it is not attained.
    pub witness_lo: Vec<f64>,
    pub witness_hi: Vec<f64>,
    pub method: DiscrepancyMethod,
    /// The supremum is only approached (open or degenerate limit box).
    pub sup_not_attained: bool,
}

/// Discrepancy of `points ⊂ [0,1)^b` over closed boxes. One-dimensional input
/// is exact in `O(N log N)`; for `b >= 2` every box with corners at point
/// coordinates (or 0 and 1) is examined, `O(N^{2b})`.
pub fn discrepancy(points: &[Vec<f64>]) -> Result<DiscrepancyReport> {
    let n = points.len();
    if n == 0 {
        return Err(invalid("discrepancy of an empty sequence"));
    }
    let b = points[0].len();
    if b == 0 || points.iter().any(|p| p.len() != b) {
        return Err(invalid("points must share a positive dimension"));
    }
    if points.iter().flatten().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(invalid("points must lie in [0, 1)"));
    }
    if b == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        Ok(discrepancy_1d(&xs))
    } else {
        Ok(discrepancy_grid(points, b))
    }
}

fn discrepancy_1d(xs: &[f64]) -> DiscrepancyReport {
    let mut x = xs.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let n = x.len();
    let nf = n as f64;
    // Excess: closed [x_i, x_j], i <= j, value (j - i + 1)/N - (x_j - x_i).
    let mut best_a = f64::NEG_INFINITY;
    let mut arg_a = (0, 0);
    let mut min_i = 0;
    for j in 0..n {
        let bj = j as f64 / nf - x[j];
        let bi = min_i as f64 / nf - x[min_i];
        if bj < bi {
            min_i = j;
        }
        let bi = min_i as f64 / nf - x[min_i];
        let v = 1.0 / nf + bj - bi;
        if v > best_a || (v == best_a && x[arg_a.0] == x[arg_a.1] && x[min_i] < x[j]) {
            best_a = v;
            arg_a = (min_i, j);
        }
    }
    // Deficit: open (y_i, y_j) over y = (0, x_1, .., x_N, 1), i < j,
    // value (y_j - y_i) - (j - i - 1)/N.
    let y: Vec<f64> = core::iter::once(0.0)
        .chain(x.iter().copied())
        .chain(core::iter::once(1.0))
        .collect();
    let c = |k: usize| y[k] - k as f64 / nf;
    let mut best_b = f64::NEG_INFINITY;
    let mut arg_b = (0, 1);
    let mut min_i = 0;
    for j in 1..y.len() {
        let v = 1.0 / nf + c(j) - c(min_i);
        if v > best_b {
            best_b = v;
            arg_b = (min_i, j);
        }
        if c(j) < c(min_i) {
            min_i = j;
        }
    }
    if best_a >= best_b {
        let (i, j) = arg_a;
        DiscrepancyReport {
            n,
            b: 1,
            value: best_a,
            witness_lo: vec![x[i]],
            witness_hi: vec![x[j]],
            method: DiscrepancyMethod::Exact1d,
            sup_not_attained: x[i] == x[j],
        }
    } else {
        let (i, j) = arg_b;
        DiscrepancyReport {
            n,
            b: 1,
            value: best_b,
            witness_lo: vec![y[i]],
            witness_hi: vec![y[j]],
            method: DiscrepancyMethod::Exact1d,
            sup_not_attained: true,
        }
    }
}

fn discrepancy_grid(points: &[Vec<f64>], b: usize) -> DiscrepancyReport {
    let n = points.len();
    let nf = n as f64;
    // Candidate coordinates per axis: 0, the data values, 1.
    let cand: Vec<Vec<f64>> = (0..b)
        .map(|k| {
            let mut v: Vec<f64> = points.iter().map(|p| p[k]).chain([0.0, 1.0]).collect();
            v.sort_by(|a, c| a.partial_cmp(c).expect("finite points"));
            v.dedup();
            v
        })
        .collect();
    let m: Vec<usize> = cand.iter().map(Vec::len).collect();
    // Counting grid: cell index of each point, then inclusive prefix sums.
    let total: usize = m.iter().product();
    let mut grid = vec![0u32; total];
    let flat = |idx: &[usize]| idx.iter().zip(&m).fold(0, |acc, (&i, &mk)| acc * mk + i);
    for p in points {
        let idx: Vec<usize> = (0..b)
            .map(|k| {
                cand[k]
                    .binary_search_by(|c| c.partial_cmp(&p[k]).expect("finite"))
                    .expect("present")
            })
            .collect();
        grid[flat(&idx)] += 1;
    }
    let mut stride = vec![1usize; b];
    for k in (0..b - 1).rev() {
        stride[k] = stride[k + 1] * m[k + 1];
    }
    for k in 0..b {
        for cell in 0..total {
            if !(cell / stride[k]).is_multiple_of(m[k]) {
                grid[cell] += grid[cell - stride[k]];
            }
        }
    }
    // Count of points with lo_k <= index_k <= hi_k (empty if any lo > hi).
    let count = |lo: &[usize], hi: &[usize]| -> i64 {
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return 0;
        }
        let mut s = 0i64;
        for mask in 0..(1usize << b) {
            let mut idx = vec![0usize; b];
            let mut sign = 1i64;
            let mut skip = false;
            for k in 0..b {
                if mask >> k & 1 == 1 {
                    if lo[k] == 0 {
                        skip = true;
                        break;
                    }
                    idx[k] = lo[k] - 1;
                    sign = -sign;
                } else {
                    idx[k] = hi[k];
                }
            }
            if !skip {
                s += sign * grid[flat(&idx)] as i64;
            }
        }
        s
    };
    let mut best = f64::NEG_INFINITY;
    let mut witness = (vec![0.0; b], vec![0.0; b], true);
    let mut lo = vec![0usize; b];
    let mut hi = vec![0usize; b];
    // Odometer over all (lo_k <= hi_k) pairs.
    'outer: loop {
        let vol: f64 = (0..b).map(|k| cand[k][hi[k]] - cand[k][lo[k]]).product();
        let closed = count(&lo, &hi) as f64 / nf - vol;
        let degenerate = (0..b).any(|k| lo[k] == hi[k] || cand[k][hi[k]] >= 1.0);
        if closed > best {
            best = closed;
            witness = (
                lo.iter().enumerate().map(|(k, &i)| cand[k][i]).collect(),
                hi.iter().enumerate().map(|(k, &i)| cand[k][i]).collect(),
                degenerate,
            );
        }
        if (0..b).all(|k| hi[k] > lo[k]) {
            let inner_lo: Vec<usize> = lo.iter().map(|i| i + 1).collect();
            let inner_hi: Vec<usize> = hi.iter().map(|i| i - 1).collect();
            let open = vol - count(&inner_lo, &inner_hi) as f64 / nf;
            if open > best {
                best = open;
                witness = (
                    lo.iter().enumerate().map(|(k, &i)| cand[k][i]).collect(),
                    hi.iter().enumerate().map(|(k, &i)| cand[k][i]).collect(),
                    true,
                );
            }
        }
        for k in (0..b).rev() {
            if hi[k] + 1 < m[k] {
                hi[k] += 1;
                continue 'outer;
            }
            if lo[k] + 1 < m[k] {
                lo[k] += 1;
                hi[k] = lo[k];
                continue 'outer;
            }
            lo[k] = 0;
            hi[k] = 0;
        }
        break;
    }
    DiscrepancyReport {
        n,
        b,
        value: best,
        witness_lo: witness.0,
        witness_hi: witness.1,
        method: DiscrepancyMethod::GridBd,
        sup_not_attained: witness.2,
    }
}

/// `f^k(x) = x + kα mod 1` for `k = 1..=n`.
pub fn shift_orbit(alpha: &[f64], x: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    if alpha.len() != x.len() || alpha.is_empty() {
        return Err(invalid(
            "frequency and phase must have the same positive length",
        ));
    }
    Ok((1..=n)
        .map(|k| {
            alpha
                .iter()
                .zip(x)
                .map(|(&a, &x0)| frac(x0 + k as f64 * a))
                .collect()
        })
        .collect())
}

/// Largest orbit discrepancy over the given phases (the first maximiser is
/// reported), approximating the supremum over `x`.
pub fn discrepancy_phase_sweep(
    alpha: &[f64],
    phases: &[Vec<f64>],
    n: usize,
) -> Result<(usize, DiscrepancyReport)> {
    let mut best: Option<(usize, DiscrepancyReport)> = None;
    for (i, x) in phases.iter().enumerate() {
        let r = discrepancy(&shift_orbit(alpha, x, n)?)?;
        if best.as_ref().is_none_or(|b| r.value > b.1.value) {
            best = Some((i, r));
        }
    }
    best.ok_or_else(|| invalid("no phases to sweep"))
}

/// `DC(κ, τ)`: `‖k·α‖ >= τ / |k|^κ` for `0 < |k| <= kmax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineParams {
    pub kappa: f64,
    pub tau: f64,
    pub kmax: u64,
}

impl DiophantineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0) || !(self.tau > 0.0) || self.kmax == 0 {
            return Err(invalid(format!(
                "need kappa >= 1, tau > 0, kmax >= 1; got {}, {}, {}",
                self.kappa, self.tau, self.kmax
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiophantineReport {
    pub pass: bool,
    /// Minimiser of `‖k·α‖ |k|^κ` (first in enumeration order on ties).
    pub worst_k: Vec<i64>,
    /// `min ‖k·α‖ |k|^κ`; compare with `τ`.
    pub margin: f64,
}

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    Float::abs(x - Float::round(x))
}

/// Brute force over `0 < |k| <= kmax` (one of each `±k` pair).
pub fn diophantine_check(alpha: &[f64], params: DiophantineParams) -> Result<DiophantineReport> {
    params.validate()?;
    let b = alpha.len();
    if b == 0 {
        return Err(invalid("empty frequency vector"));
    }
    let kmax = params.kmax as i64;
    let side = (2 * params.kmax as u128 + 1).pow(b as u32);
    if side > 1u128 << 40 {
        return Err(invalid(format!(
            "brute force over {side} vectors is too large"
        )));
    }
    let mut best = f64::INFINITY;
    let mut worst_k = vec![0i64; b];
    let mut k = vec![-kmax; b];
    loop {
        // Keep k with first nonzero coordinate positive.
        if k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            let dot: f64 = k.iter().zip(alpha).map(|(&c, &a)| c as f64 * a).sum();
            let norm = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as f64;
            let v = dist_to_int(dot) * Float::powf(norm, params.kappa);
            if v < best {
                best = v;
                worst_k.clone_from(&k);
            }
        }
        let mut axis = b;
        loop {
            if axis == 0 {
                return Ok(DiophantineReport {
                    pass: best >= params.tau,
                    worst_k,
                    margin: best,
                });
            }
            axis -= 1;
            if k[axis] < kmax {
                k[axis] += 1;
                break;
            }
            k[axis] = -kmax;
        }
    }
}

/// Partial quotients `[a_0; a_1, ...]` and convergents `p_k/q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub quotients: Vec<u64>,
    pub convergents: Vec<(u64, u64)>,
    /// The expansion terminated because a convergent reproduces `α` to
    /// working precision.
    pub rational: bool,
}

pub fn continued_fraction(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let mut quotients = vec![0u64];
    let mut convergents = vec![(0u64, 1u64)];
    let (mut p_prev, mut q_prev) = (1u64, 0u64);
    let (mut p, mut q) = (0u64, 1u64);
    let mut x = alpha;
    let mut rational = false;
    for _ in 0..depth {
        let r = 1.0 / x;
        let a = Float::floor(r);
        if !(a.is_finite() && a < 1e15) {
            rational = true;
            break;
        }
        let a = a as u64;
        let (pn, qn) = match (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) {
            (Some(pn), Some(qn)) => (pn, qn),
            _ => {
                rational = true;
                break;
            }
        };
        quotients.push(a);
        convergents.push((pn, qn));
        (p_prev, q_prev, p, q) = (p, q, pn, qn);
        if Float::abs(qn as f64 * alpha - pn as f64) <= 4.0 * f64::EPSILON * qn as f64 {
            rational = true;
            break;
        }
        x = r - a as f64;
        if x <= 0.0 {
            rational = true;
            break;
        }
    }
    Ok(ContinuedFraction {
        quotients,
        convergents,
        rational,
    })
}

/// `[0; a_1, a_2, ...]` evaluated from the tail.
pub fn from_partial_quotients(quotients: &[u64]) -> f64 {
    let mut x = 0.0;
    for &a in quotients.iter().rev() {
        x = 1.0 / (a as f64 + x);
    }
    x
}
