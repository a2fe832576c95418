//! Gauss–Legendre panels and a globally adaptive, vector-valued
//! Gauss–Kronrod (7/15) integrator.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if Float::abs(dx) < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod 15-point abscissae (nonnegative half) and weights, with the embedded
// 7-point Gauss weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Options for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Absolute tolerance on the summed (L1 over components) error estimate.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            max_panels: 200_000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub values: Vec<f64>,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn gk15(
    f: &mut impl FnMut(f64, &mut [f64]),
    a: f64,
    b: f64,
    dim: usize,
    buf: &mut [f64],
) -> (Vec<f64>, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (i, &x) in XGK.iter().enumerate() {
        let nodes: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in nodes {
            f(mid + sign * half * x, buf);
            for c in 0..dim {
                kron[c] += WGK[i] * buf[c];
                if i % 2 == 1 {
                    gauss[c] += WG[i / 2] * buf[c];
                }
            }
        }
    }
    let mut err = 0.0;
    for c in 0..dim {
        kron[c] *= half;
        gauss[c] *= half;
        err += Float::abs(kron[c] - gauss[c]);
    }
    (kron, err)
}

/// Integrates a vector-valued function over `[breaks[0], breaks[last]]`,
/// starting from the panels delimited by `breaks` and bisecting the panel
/// with the largest error estimate until the summed estimate is below
/// `opts.abs_tol`.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64, &mut [f64]),
    dim: usize,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Integral> {
    if breaks.len() < 2 {
        return Err(crate::error::invalid("need at least one panel"));
    }
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    let mut evaluations = 0usize;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (values, error) = gk15(&mut f, w[0], w[1], dim, &mut buf);
        evaluations += 15;
        total_err += error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            values,
            error,
        });
    }
    while total_err > opts.abs_tol {
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                error: total_err,
                panels: heap.len(),
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot bisect further at double precision.
            return Err(Error::Quadrature {
                error: total_err,
                panels: heap.len() + 1,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid, dim, &mut buf);
        let (v2, e2) = gk15(&mut f, mid, worst.b, dim, &mut buf);
        evaluations += 30;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            values: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            values: v2,
            error: e2,
        });
    }
    // Deterministic accumulation in panel order.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal));
    let mut values = vec![0.0; dim];
    let mut comps = vec![0.0; dim];
    let mut error = 0.0;
    for p in &panels {
        error += p.error;
        for c in 0..dim {
            // Neumaier summation per component.
            let x = p.values[c];
            let t = values[c] + x;
            if Float::abs(values[c]) >= Float::abs(x) {
                comps[c] += (values[c] - t) + x;
            } else {
                comps[c] += (x - t) + values[c];
            }
            values[c] = t;
        }
    }
    for c in 0..dim {
        values[c] += comps[c];
    }
    Ok(Integral {
        values,
        error,
        panels: panels.len(),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            // x^(2n-2) over [0, 2] = 2^(2n-1) / (2n-1)
            let deg = 2 * n - 2;
            let s: f64 = gl
                .on(0.0, 2.0)
                .map(|(x, w)| w * libm::pow(x, deg as f64))
                .sum();
            let exact = libm::pow(2.0, (deg + 1) as f64) / (deg + 1) as f64;
            assert!((s - exact).abs() < 1e-12 * exact, "n={n}");
        }
    }

    #[test]
    fn adaptive_resolves_lorentzian() {
        // Narrow peak at 0.3; the closed form on [-50, 50] is a sum of two arctangents.
        let eps = 1e-3;
        let r = integrate_adaptive(
            |x, out| out[0] = eps / ((x - 0.3) * (x - 0.3) + eps * eps),
            1,
            &[-50.0, 0.0, 50.0],
            AdaptiveOptions {
                abs_tol: 1e-12,
                max_panels: 100_000,
            },
        )
        .unwrap();
        let exact = libm::atan(49.7 / eps) + libm::atan(50.3 / eps);
        assert!(
            (r.values[0] - exact).abs() < 1e-10,
            "{} vs {exact}",
            r.values[0]
        );
    }
}
