//! Trade-off oracles standing in for model training.
//!
//! An oracle maps a strategy to the objectives a model trained at that
//! strategy would achieve. The analytic family is a closed-form surface with
//! optional seeded noise; the tabular oracle looks up a precomputed result
//! set.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{
    linspace, read_frontier_csv, AchievedObjectives, EvalPoint, InterpolationMode, ResultSet,
    Strategy, StrategyBox, Surface,
};

/// Closed-form surface:
///
/// ```text
/// sat(ε)    = 1 - exp(-ε / priv_scale)
/// disparity = min(γ, cap_base + cap_gain * sat(ε))
/// accuracy  = clip(base_acc + priv_gain * sat(ε) + fair_gain * disparity + noise)
/// coverage  = clip(cov_base + cov_gain * disparity + noise)
/// privacy   = ε
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSurfaceSpec {
    pub base_acc: f64,
    pub priv_gain: f64,
    pub priv_scale: f64,
    pub fair_gain: f64,
    pub cov_base: f64,
    pub cov_gain: f64,
    pub disparity_cap_base: f64,
    pub disparity_cap_gain: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl AnalyticSurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.base_acc,
            self.priv_gain,
            self.priv_scale,
            self.fair_gain,
            self.cov_base,
            self.cov_gain,
            self.disparity_cap_base,
            self.disparity_cap_gain,
            self.noise_sd,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("analytic oracle parameters must be finite".into()));
        }
        if self.priv_scale <= 0.0 {
            return Err(Error::Invalid("oracle.priv_scale must be > 0".into()));
        }
        if self.noise_sd < 0.0 {
            return Err(Error::Invalid("oracle.noise_sd must be >= 0".into()));
        }
        Ok(())
    }

    pub fn disparity_cap(&self, epsilon: f64) -> f64 {
        self.disparity_cap_base + self.disparity_cap_gain * self.saturation(epsilon)
    }

    fn saturation(&self, epsilon: f64) -> f64 {
        1.0 - (-epsilon / self.priv_scale).exp()
    }

    fn evaluate(&self, s: Strategy) -> AchievedObjectives {
        let sat = self.saturation(s.privacy_param);
        let disparity = s.fairness_param.min(self.disparity_cap(s.privacy_param)).max(0.0);
        let (acc_noise, cov_noise) = self.noise(s);
        AchievedObjectives {
            accuracy: (self.base_acc + self.priv_gain * sat + self.fair_gain * disparity + acc_noise)
                .clamp(0.0, 1.0),
            coverage: (self.cov_base + self.cov_gain * disparity + cov_noise).clamp(0.0, 1.0),
            disparity_achieved: disparity,
            privacy_achieved: s.privacy_param,
        }
    }

    /// Noise drawn from a stream keyed by the seed and the exact strategy.
    fn noise(&self, s: Strategy) -> (f64, f64) {
        if self.noise_sd == 0.0 {
            return (0.0, 0.0);
        }
        let key = mix(mix(self.seed ^ (s.fairness_param + 0.0).to_bits()) ^ (s.privacy_param + 0.0).to_bits());
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let normal = Normal::new(0.0, self.noise_sd).expect("noise_sd validated");
        (normal.sample(&mut rng), normal.sample(&mut rng))
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LookupMode {
    Nearest,
    Interpolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularOracleSpec {
    pub source: PathBuf,
    pub lookup: LookupMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleSpec {
    Analytic(AnalyticSurfaceSpec),
    Tabular(TabularOracleSpec),
}

impl OracleSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            OracleSpec::Analytic(a) => a.validate(),
            OracleSpec::Tabular(_) => Ok(()),
        }
    }

    /// Resolves a relative tabular source against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let OracleSpec::Tabular(t) = self {
            if t.source.is_relative() {
                t.source = base.join(&t.source);
            }
        }
    }
}

/// A ready-to-query oracle.
#[derive(Debug, Clone)]
pub enum Oracle {
    Analytic(AnalyticSurfaceSpec),
    Tabular(TabularOracle),
}

#[derive(Debug, Clone)]
pub struct TabularOracle {
    points: Vec<EvalPoint>,
    lookup: LookupMode,
    bounds: StrategyBox,
    surface: Surface,
}

impl TabularOracle {
    pub fn new(results: &ResultSet, lookup: LookupMode) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::OracleDomain("tabular oracle has no points".into()));
        }
        let points = results.points().to_vec();
        let span = |f: fn(&Strategy) -> f64| {
            let lo = points.iter().map(|p| f(&p.strategy)).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| f(&p.strategy)).fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                [lo, hi]
            } else {
                [lo, lo + 1.0]
            }
        };
        let bounds = StrategyBox {
            gamma: span(|s| s.fairness_param),
            epsilon: span(|s| s.privacy_param),
        };
        let surface = Surface::build(&points, InterpolationMode::GridBilinear, bounds)?;
        Ok(Self {
            points,
            lookup,
            bounds,
            surface,
        })
    }

    fn evaluate(&self, s: Strategy) -> Result<AchievedObjectives> {
        match self.lookup {
            LookupMode::Nearest => {
                let q = self.bounds.normalize(s);
                let nearest = self
                    .points
                    .iter()
                    .min_by(|a, b| {
                        let da = dist2(self.bounds.normalize(a.strategy), q);
                        let db = dist2(self.bounds.normalize(b.strategy), q);
                        da.total_cmp(&db)
                    })
                    .expect("nonempty");
                Ok(nearest.objectives)
            }
            LookupMode::Interpolated => self.surface.interpolate(self.surface.clamp_to_domain(s)),
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

impl Oracle {
    pub fn from_spec(spec: &OracleSpec) -> Result<Self> {
        spec.validate()?;
        match spec {
            OracleSpec::Analytic(a) => Ok(Oracle::Analytic(*a)),
            OracleSpec::Tabular(t) => {
                let file = std::fs::File::open(&t.source).map_err(|e| {
                    Error::Invalid(format!("cannot open oracle source {}: {e}", t.source.display()))
                })?;
                let results = read_frontier_csv(std::io::BufReader::new(file))?;
                Ok(Oracle::Tabular(TabularOracle::new(&results, t.lookup)?))
            }
        }
    }

    pub fn evaluate(&self, s: Strategy) -> Result<AchievedObjectives> {
        if !s.is_finite() {
            return Err(Error::OracleDomain(format!("non-finite strategy {s:?}")));
        }
        match self {
            Oracle::Analytic(a) => Ok(a.evaluate(s)),
            Oracle::Tabular(t) => t.evaluate(s),
        }
    }

    /// Evaluates the tensor grid `n_gamma × n_epsilon`, gamma-major, with
    /// round tag `-1`.
    pub fn sample_grid(
        &self,
        gamma_range: [f64; 2],
        epsilon_range: [f64; 2],
        n_gamma: usize,
        n_epsilon: usize,
    ) -> Result<ResultSet> {
        for (name, [lo, hi]) in [("gamma", gamma_range), ("epsilon", epsilon_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRange(format!("{name} range [{lo}, {hi}]")));
            }
        }
        if n_gamma < 2 || n_epsilon < 2 {
            return Err(Error::InvalidRange(format!(
                "grid needs at least 2 samples per axis, got {n_gamma}x{n_epsilon}"
            )));
        }
        let mut set = ResultSet::new();
        for g in linspace(gamma_range[0], gamma_range[1], n_gamma) {
            for e in linspace(epsilon_range[0], epsilon_range[1], n_epsilon) {
                let s = Strategy::new(g, e);
                set.add(EvalPoint::seed(s, self.evaluate(s)?));
            }
        }
        Ok(set)
    }
}
