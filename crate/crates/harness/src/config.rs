//! Experiment configuration files.

use std::path::{Path, PathBuf};

use qpdyn_core::dynamics::ParsevalOptions;
use qpdyn_core::greens::ClassificationParams;
use qpdyn_core::lattice::LatticePoint;
use qpdyn_core::operator::{
    DecayBound, Kernel, OperatorSpec, PotentialSpec, ShiftDynamics, ShiftMode, StateVector,
    ToeplitzKernel, TrigPolynomial, TrigTerm,
};
use qpdyn_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Evolve,
    MomentGrowth,
    GreensScan,
    BadSetScan,
    ParsevalCrosscheck,
    DiscrepancySweep,
    Diophantine,
    LyapunovMap,
}

impl Recipe {
    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::Evolve => "evolve",
            Recipe::MomentGrowth => "moment-growth",
            Recipe::GreensScan => "greens-scan",
            Recipe::BadSetScan => "bad-set-scan",
            Recipe::ParsevalCrosscheck => "parseval-crosscheck",
            Recipe::DiscrepancySweep => "discrepancy-sweep",
            Recipe::Diophantine => "diophantine",
            Recipe::LyapunovMap => "lyapunov-map",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Zero,
    Laplacian,
    Toeplitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    LinearForm,
    RankOne,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentModeConfig {
    Instantaneous,
    AveragedDirect,
    AveragedParseval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTerm {
    pub offset: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialTerm {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default)]
    pub kernel_terms: Vec<KernelTerm>,
    #[serde(default = "e")]
    pub kernel_decay_amplitude: f64,
    #[serde(default = "one_f64")]
    pub kernel_decay_rate: f64,
    /// `λ` in `λ⁻¹ S`.
    #[serde(default = "one_f64")]
    pub coupling: f64,
    #[serde(default)]
    pub potential: Vec<PotentialTerm>,
    #[serde(default = "default_shift")]
    pub shift: ShiftKind,
    pub alpha: Vec<f64>,
    pub phase: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..n)
                    .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Box sizes `N`; also orbit lengths for discrepancy sweeps.
    #[serde(default)]
    pub sizes: Vec<u64>,
    #[serde(default)]
    pub energies: Vec<f64>,
    /// Imaginary parts; when empty, `1/T` for every averaging time.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// `T` for time averages and `z = E + i/T`.
    #[serde(default)]
    pub averaging_times: Vec<f64>,
    /// Instantaneous times, merged with `log_times`.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub log_times: Option<LogGrid>,
    /// Random phases drawn from the seeded generator.
    #[serde(default)]
    pub phase_samples: usize,
    #[serde(default)]
    pub phases: Vec<Vec<f64>>,
    /// Initial site; the origin when empty.
    #[serde(default)]
    pub site: Vec<i64>,
    #[serde(default = "default_lyapunov_length")]
    pub lyapunov_length: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            sizes: vec![],
            energies: vec![],
            eps: vec![],
            averaging_times: vec![],
            times: vec![],
            log_times: None,
            phase_samples: 0,
            phases: vec![],
            site: vec![],
            lyapunov_length: default_lyapunov_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    /// Defaults to `0.8 c₁`.
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default = "half")]
    pub sigma: f64,
    #[serde(default = "half")]
    pub xi: f64,
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
    /// Fixed sub-box size; otherwise `⌈N^n1_exponent⌉`.
    #[serde(default)]
    pub n1: Option<u64>,
    #[serde(default = "default_n1_exponent")]
    pub n1_exponent: f64,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            c2: None,
            sigma: 0.5,
            xi: 0.5,
            varsigma: default_varsigma(),
            n1: None,
            n1_exponent: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default = "default_radius")]
    pub radius: u64,
    #[serde(default = "default_leak_tol")]
    pub leak_tol: f64,
    /// Doubles the radius while leakage exceeds `leak_tol`.
    #[serde(default = "yes")]
    pub grow: bool,
    #[serde(default = "default_max_radius")]
    pub max_radius: u64,
    #[serde(default = "default_max_sites")]
    pub max_sites: u64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            leak_tol: default_leak_tol(),
            grow: true,
            max_radius: default_max_radius(),
            max_sites: default_max_sites(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_mode")]
    pub mode: MomentModeConfig,
    #[serde(default)]
    pub k_prime: Option<f64>,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_panels")]
    pub max_panels: usize,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            mode: default_mode(),
            k_prime: None,
            abs_tol: default_abs_tol(),
            max_panels: default_max_panels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineConfig {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_kmax")]
    pub kmax: u64,
}

impl Default for DiophantineConfig {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            tau: default_tau(),
            kmax: default_kmax(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// One sweep axis: a dotted config key and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub recipe: Recipe,
    /// Seeds phase sampling only.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub workers: usize,
    pub model: ModelConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub moments: MomentConfig,
    #[serde(default)]
    pub diophantine: DiophantineConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn e() -> f64 {
    std::f64::consts::E
}
fn default_kernel() -> KernelKind {
    KernelKind::Laplacian
}
fn default_shift() -> ShiftKind {
    ShiftKind::LinearForm
}
fn default_mode() -> MomentModeConfig {
    MomentModeConfig::Instantaneous
}
fn default_varsigma() -> f64 {
    0.95
}
fn default_n1_exponent() -> f64 {
    0.3
}
fn default_radius() -> u64 {
    128
}
fn default_leak_tol() -> f64 {
    1e-8
}
fn default_max_radius() -> u64 {
    4096
}
fn default_max_sites() -> u64 {
    20_000
}
fn default_abs_tol() -> f64 {
    ParsevalOptions::default().abs_tol
}
fn default_max_panels() -> usize {
    ParsevalOptions::default().max_panels
}
fn default_kappa() -> f64 {
    1.01
}
fn default_tau() -> f64 {
    0.3
}
fn default_kmax() -> u64 {
    1000
}
fn default_lyapunov_length() -> usize {
    10_000
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(vec![format!("cannot read {}: {e}", path.display())])
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("config serializes")
    }

    /// SHA-256 over the resolved config, ignoring worker count and output
    /// location, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = 1;
        canon.output = OutputConfig::default();
        digest(&toml::to_string(&canon).expect("config serializes"))
    }

    pub fn model_fingerprint(&self) -> String {
        digest(&toml::to_string(&self.model).expect("model serializes"))
    }

    pub fn build_spec(&self) -> Result<OperatorSpec, String> {
        let m = &self.model;
        let kernel = match m.kernel {
            KernelKind::Zero => Kernel::Zero,
            KernelKind::Laplacian => Kernel::Laplacian,
            KernelKind::Toeplitz => {
                let terms = m
                    .kernel_terms
                    .iter()
                    .map(|t| {
                        (
                            LatticePoint::new(t.offset.clone()),
                            Complex64::new(t.re, t.im),
                        )
                    })
                    .collect();
                let decay = DecayBound {
                    amplitude: m.kernel_decay_amplitude,
                    rate: m.kernel_decay_rate,
                };
                Kernel::Toeplitz(ToeplitzKernel::new(terms, decay).map_err(|e| e.to_string())?)
            }
        };
        let terms = m
            .potential
            .iter()
            .map(|t| TrigTerm {
                freq: t.freq.clone(),
                cos: t.cos,
                sin: t.sin,
            })
            .collect();
        let v = TrigPolynomial::new(m.phase.len(), terms).map_err(|e| e.to_string())?;
        let mode = match m.shift {
            ShiftKind::LinearForm => ShiftMode::LinearForm,
            ShiftKind::RankOne => ShiftMode::RankOne,
            ShiftKind::Product => ShiftMode::Product,
        };
        let dynamics = ShiftDynamics {
            mode,
            alpha: m.alpha.clone(),
            phase: m.phase.clone(),
        };
        OperatorSpec::new(
            m.dim,
            kernel,
            PotentialSpec {
                v,
                coupling: m.coupling,
            },
            dynamics,
        )
        .map_err(|e| e.to_string())
    }

    pub fn initial_state(&self) -> StateVector {
        let site = if self.scan.site.is_empty() {
            vec![0; self.model.dim]
        } else {
            self.scan.site.clone()
        };
        StateVector::delta(LatticePoint::new(site))
    }

    /// Instantaneous times, sorted.
    pub fn times(&self) -> Vec<f64> {
        let mut t = self.scan.times.clone();
        if let Some(g) = &self.scan.log_times {
            t.extend(g.points());
        }
        t.sort_by(f64::total_cmp);
        t
    }

    /// Imaginary parts of the spectral parameter.
    pub fn eps_grid(&self) -> Vec<f64> {
        if self.scan.eps.is_empty() {
            self.scan.averaging_times.iter().map(|t| 1.0 / t).collect()
        } else {
            self.scan.eps.clone()
        }
    }

    /// Explicit phases followed by the seeded samples; the model phase when
    /// neither is given.
    pub fn phases(&self) -> Vec<Vec<f64>> {
        let b = self.model.phase.len();
        let mut out = self.scan.phases.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.scan.phase_samples {
            out.push((0..b).map(|_| rng.random::<f64>()).collect());
        }
        if out.is_empty() {
            out.push(self.model.phase.clone());
        }
        out
    }

    pub fn classification_params(&self, spec: &OperatorSpec) -> ClassificationParams {
        let c = &self.classification;
        let mut p = ClassificationParams::for_spec(spec);
        if let Some(c2) = c.c2 {
            p.c2 = c2;
        }
        p.sigma = c.sigma;
        p.xi = c.xi;
        p.varsigma = c.varsigma;
        p
    }

    pub fn sub_box_size(&self, n: u64) -> u64 {
        self.classification
            .n1
            .unwrap_or_else(|| (n as f64).powf(self.classification.n1_exponent).ceil() as u64)
    }

    pub fn parseval_options(&self) -> ParsevalOptions {
        ParsevalOptions {
            k_prime: self.moments.k_prime,
            abs_tol: self.moments.abs_tol,
            max_panels: self.moments.max_panels,
        }
    }

    /// Every violated precondition, in a stable order.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(
            !self.experiment.trim().is_empty(),
            "experiment: must not be empty".into(),
        );
        check(self.workers >= 1, "workers: must be at least 1".into());
        let m = &self.model;
        check(m.dim >= 1, "model.dim: must be at least 1".into());
        check(
            m.coupling > 0.0 && m.coupling.is_finite(),
            format!("model.coupling: must be positive, got {}", m.coupling),
        );
        check(
            m.kernel == KernelKind::Toeplitz || m.kernel_terms.is_empty(),
            "model.kernel_terms: only used with kernel = \"toeplitz\"".into(),
        );
        let spec = self.build_spec();
        if let Err(e) = &spec {
            check(false, format!("model: {e}"));
        }

        let s = &self.scan;
        for &n in &s.sizes {
            check(n >= 1, "scan.sizes: entries must be at least 1".into());
        }
        for &e in &s.energies {
            check(e.is_finite(), format!("scan.energies: {e} is not finite"));
        }
        for &e in &s.eps {
            check(
                e >= 0.0 && e.is_finite(),
                format!("scan.eps: {e} must be finite and nonnegative"),
            );
        }
        for &t in &s.averaging_times {
            check(
                t > 0.0 && t.is_finite(),
                format!("scan.averaging_times: {t} must be positive"),
            );
        }
        for &t in &s.times {
            check(
                t >= 0.0 && t.is_finite(),
                format!("scan.times: {t} must be finite and nonnegative"),
            );
        }
        if let Some(g) = &s.log_times {
            check(
                g.min > 0.0 && g.max >= g.min && g.max.is_finite(),
                format!(
                    "scan.log_times: need 0 < min <= max, got [{}, {}]",
                    g.min, g.max
                ),
            );
        }
        for x in &s.phases {
            check(
                x.len() == m.phase.len(),
                format!(
                    "scan.phases: expected {} coordinates, got {}",
                    m.phase.len(),
                    x.len()
                ),
            );
        }
        check(
            s.site.is_empty() || s.site.len() == m.dim,
            format!(
                "scan.site: expected {} coordinates, got {}",
                m.dim,
                s.site.len()
            ),
        );
        check(
            s.lyapunov_length >= 1,
            "scan.lyapunov_length: must be at least 1".into(),
        );

        let t = &self.truncation;
        check(
            t.radius >= 1,
            "truncation.radius: must be at least 1".into(),
        );
        check(
            t.max_radius >= t.radius,
            "truncation.max_radius: must be at least truncation.radius".into(),
        );
        check(
            t.leak_tol > 0.0 && t.leak_tol < 1.0,
            format!(
                "truncation.leak_tol: must lie in (0, 1), got {}",
                t.leak_tol
            ),
        );
        let sites = box_sites(m.dim, t.radius);
        check(
            sites.is_some_and(|n| n <= t.max_sites),
            format!(
                "truncation.radius: a radius-{} box in d={} exceeds truncation.max_sites = {}",
                t.radius, m.dim, t.max_sites
            ),
        );
        let support = self.initial_state().support_radius();
        check(
            2 * support <= t.radius,
            format!("scan.site: |site| = {support} exceeds half of truncation.radius"),
        );

        let mo = &self.moments;
        check(
            mo.p > 0.0 && mo.p.is_finite(),
            format!("moments.p: must be positive, got {}", mo.p),
        );
        check(mo.abs_tol > 0.0, "moments.abs_tol: must be positive".into());
        check(
            mo.max_panels >= 1,
            "moments.max_panels: must be at least 1".into(),
        );
        if let (Some(k), Ok(spec)) = (mo.k_prime, &spec) {
            check(
                k >= spec.spectral_bound(),
                format!(
                    "moments.k_prime: {k} is below the spectral bound {}",
                    spec.spectral_bound()
                ),
            );
        }

        let c = &self.classification;
        if let Ok(spec) = &spec {
            let p = self.classification_params(spec);
            if let Err(e) = p.validate(spec.kernel_decay().rate) {
                check(false, format!("classification: {e}"));
            }
        }
        check(
            c.n1_exponent > 0.0 && c.n1_exponent < 1.0,
            format!(
                "classification.n1_exponent: must lie in (0, 1), got {}",
                c.n1_exponent
            ),
        );
        if matches!(self.recipe, Recipe::GreensScan | Recipe::BadSetScan) {
            for &n in &s.sizes {
                let n1 = self.sub_box_size(n);
                check(
                    n1 >= 1 && n1 < n,
                    format!("classification: need 1 <= N1 < N, got N1={n1} for N={n}"),
                );
            }
        }

        let d = &self.diophantine;
        if let Err(e) = (qpdyn_core::arithmetic::DiophantineParams {
            kappa: d.kappa,
            tau: d.tau,
            kmax: d.kmax,
        })
        .validate()
        {
            check(false, format!("diophantine: {e}"));
        }

        if self.recipe == Recipe::LyapunovMap {
            if let Ok(spec) = &spec {
                check(
                    spec.is_schrodinger_1d(),
                    "recipe lyapunov-map: needs a 1-d nearest-neighbour Schrödinger model".into(),
                );
            }
        }
        if self.recipe == Recipe::DiscrepancySweep {
            for a in &m.alpha {
                check(a.is_finite(), "model.alpha: must be finite".into());
            }
        }

        let mut keys = std::collections::BTreeSet::new();
        for a in &self.sweep {
            check(
                keys.insert(a.key.clone()),
                format!("sweep: axis {} listed twice", a.key),
            );
            check(
                a.key != "sweep" && !a.key.starts_with("sweep."),
                "sweep: axes cannot modify the sweep".into(),
            );
        }
        errs
    }
}

fn digest(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// `(2R + 1)^d`, or `None` on overflow.
pub fn box_sites(d: usize, r: u64) -> Option<u64> {
    (2 * r + 1).checked_pow(u32::try_from(d).ok()?)
}
