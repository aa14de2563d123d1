//! Experiment configuration files and named presets.
//!
//! A configuration is layered: built-in defaults, then an optional preset,
//! then the file itself. Every key of the result is materialized, so the
//! echoed configuration reruns an experiment without the layers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::agents::{BuilderConfig, LossVariant};
use crate::calibration::{LambdaTarget, LevelSetBinning};
use crate::engine::{
    EquilibriumSettings, GameConfig, Leadership, PenaltyPolicy, RegulatorSettings, RegulatorSlots,
    SeedSource,
};
use crate::error::{Error, Result};
use crate::frontier::{read_frontier_csv, InterpolationMode, ResultSet, Strategy, StrategyBox};
use crate::oracle::{AnalyticSurfaceSpec, Oracle, OracleSpec};

pub const PRESETS: [(&str, &str); 7] = [
    ("no-penalty-drift", include_str!("../presets/no-penalty-drift.toml")),
    ("phase-enforcement", include_str!("../presets/phase-enforcement.toml")),
    ("convex", include_str!("../presets/convex.toml")),
    ("knee-sweep", include_str!("../presets/knee-sweep.toml")),
    ("two-datasets", include_str!("../presets/two-datasets.toml")),
    ("fairness-cap-failure", include_str!("../presets/fairness-cap-failure.toml")),
    ("dpsgd", include_str!("../presets/dpsgd.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed, added to every oracle and probe seed.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(rename = "box")]
    pub bounds: StrategyBox,
    pub game: GameSection,
    pub builder: BuilderConfig,
    pub fairness_regulator: RegulatorSettings,
    pub privacy_regulator: RegulatorSettings,
    pub oracle: OracleSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builder_oracle: Option<OracleSpec>,
    pub seeding: SeedingSection,
    pub sweep: SweepSection,
    pub equilibrium: EquilibriumSettings,
    pub lambda: LambdaSection,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub leadership: Leadership,
    pub t_max: usize,
    pub convergence_tol: f64,
    pub convergence_cycles: usize,
    /// Regulator targets `[γ₀, ε₀]`.
    pub initial_specs: Vec<[f64; 2]>,
    pub regulator_slots: RegulatorSlots,
    pub penalty_policy: PenaltyPolicy,
    pub interpolation: InterpolationMode,
    pub gradient_step: f64,
    /// `[C_fair, C_priv]` per phase.
    pub phases: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedingSection {
    pub n_gamma: usize,
    pub n_epsilon: usize,
    pub source: SeedSource,
    /// Frontier CSV to seed from instead of sampling an oracle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub c_fair: Vec<f64>,
    pub c_priv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    /// Frontier CSV of calibrated points; the seed frontier when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    pub which: LambdaTarget,
    pub c: f64,
    pub bin_width: f64,
    pub min_denominator: f64,
    /// Targets `[γ₀, ε₀]` the hinge losses are measured against.
    pub targets: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    pub n_classes: usize,
    pub n_groups: usize,
    pub gamma: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: None,
            bounds: StrategyBox::default(),
            game: GameSection {
                leadership: Leadership::RegulatorLed,
                t_max: 200,
                convergence_tol: 1e-4,
                convergence_cycles: 3,
                initial_specs: vec![[0.1, 2.0], [0.2, 3.0], [0.3, 4.0], [0.15, 5.0], [0.25, 6.0]],
                regulator_slots: RegulatorSlots::FairnessFirst,
                penalty_policy: PenaltyPolicy::Constant,
                interpolation: InterpolationMode::GridBilinear,
                gradient_step: 1e-3,
                phases: vec![[3.0, 3.0]],
            },
            builder: BuilderConfig {
                lambda_fair: 0.3,
                lambda_priv: 0.01,
                lambda_b: 0.7,
                step_size: 10.0,
                decay: 0.67,
                loss_variant: LossVariant::Fairpate,
            },
            fairness_regulator: RegulatorSettings {
                penalty_scalar: 3.0,
                step_size: 0.1,
                decay: 0.67,
            },
            privacy_regulator: RegulatorSettings {
                penalty_scalar: 3.0,
                step_size: 10.0,
                decay: 0.67,
            },
            oracle: OracleSpec::Analytic(AnalyticSurfaceSpec {
                base_acc: 0.45,
                priv_gain: 0.25,
                priv_scale: 4.0,
                fair_gain: 0.3,
                cov_base: 0.5,
                cov_gain: 0.5,
                disparity_cap_base: 1.0,
                disparity_cap_gain: 0.0,
                noise_sd: 0.0,
                seed: 0,
            }),
            builder_oracle: None,
            seeding: SeedingSection {
                n_gamma: 21,
                n_epsilon: 21,
                source: SeedSource::Regulator,
                frontier: None,
            },
            sweep: SweepSection {
                c_fair: vec![0.1, 0.5, 1.0, 2.0, 3.0],
                c_priv: vec![0.1, 0.5, 1.0, 2.0, 3.0],
            },
            equilibrium: EquilibriumSettings::default(),
            lambda: LambdaSection {
                results: None,
                which: LambdaTarget::Priv,
                c: 1.0,
                bin_width: 0.02,
                min_denominator: 1e-6,
                targets: [0.1, 5.0],
            },
            metrics: MetricsSection {
                predictions: None,
                n_classes: 2,
                n_groups: 2,
                gamma: 0.1,
            },
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::Parse(format!("{origin}: {e}")))
}

/// Overlays `top` onto `base`. Tables merge key by key, except tagged
/// tables whose `kind` changes, which are replaced whole.
fn overlay(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) if b.get("kind") == t.get("kind") || !t.contains_key("kind") => {
                overlay(b, t)
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            Error::Invalid(format!(
                "preset: unknown preset `{name}`, expected one of {}",
                preset_names().collect::<Vec<_>>().join(", ")
            ))
        })
}

impl ExperimentConfig {
    /// Layers defaults, the preset (the argument wins over the file's
    /// `preset` key), and the file text. Relative paths resolve against
    /// `base_dir`.
    pub fn load(file_text: Option<&str>, preset: Option<&str>, base_dir: &Path) -> Result<Self> {
        let mut file = match file_text {
            Some(text) => parse_table(text, "config")?,
            None => Table::new(),
        };
        let file_preset = match file.remove("preset") {
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                return Err(Error::Invalid(format!(
                    "preset: expected a string, found {}",
                    other.type_str()
                )))
            }
            None => None,
        };
        let mut merged = Table::try_from(Self::default())
            .map_err(|e| Error::Invalid(format!("default config: {e}")))?;
        if let Some(name) = preset.map(str::to_string).or(file_preset) {
            let table = parse_table(preset_text(&name)?, &format!("preset {name}"))?;
            overlay(&mut merged, table);
        }
        overlay(&mut merged, file);
        let mut cfg: Self = serde_path_to_error::deserialize(Value::Table(merged)).map_err(|e| {
            let path = e.path().to_string();
            Error::Invalid(format!("config key `{path}`: {}", e.into_inner()))
        })?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, preset: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        Self::load(Some(&text), preset, dir)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let base = std::path::absolute(base).unwrap_or_else(|_| base.to_path_buf());
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.seeding.frontier);
        fix(&mut self.lambda.results);
        fix(&mut self.metrics.predictions);
        self.oracle.resolve_paths(&base);
        if let Some(o) = &mut self.builder_oracle {
            o.resolve_paths(&base);
        }
    }

    /// Checks value ranges that the types alone cannot express.
    pub fn validate(&self) -> Result<()> {
        let g = &self.game;
        let checks: [(bool, &str); 9] = [
            (g.t_max >= 1, "game.t_max must be >= 1"),
            (g.convergence_tol > 0.0, "game.convergence_tol must be > 0"),
            (g.convergence_cycles >= 1, "game.convergence_cycles must be >= 1"),
            (!g.initial_specs.is_empty(), "game.initial_specs needs at least one entry"),
            (g.gradient_step > 0.0, "game.gradient_step must be > 0"),
            (self.lambda.c > 0.0, "lambda.c must be > 0"),
            (self.lambda.bin_width > 0.0, "lambda.bin_width must be > 0"),
            (self.lambda.min_denominator > 0.0, "lambda.min_denominator must be > 0"),
            (
                self.equilibrium.probe_radius >= 0.0 && self.equilibrium.tol >= 0.0,
                "equilibrium.probe_radius and equilibrium.tol must be >= 0",
            ),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::Invalid(msg.to_string()));
        }
        self.bounds.validate()?;
        self.oracle.validate()?;
        if let Some(o) = &self.builder_oracle {
            o.validate()?;
        }
        Ok(())
    }

    /// The fully materialized configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(format!("cannot serialize config: {e}")))
    }

    fn oracle_with_seed(&self, spec: &OracleSpec) -> Result<Oracle> {
        let mut spec = spec.clone();
        if let OracleSpec::Analytic(a) = &mut spec {
            a.seed = a.seed.wrapping_add(self.seed);
        }
        Oracle::from_spec(&spec)
    }

    pub fn game_config(&self) -> Result<GameConfig> {
        let g = &self.game;
        let initial_results = match &self.seeding.frontier {
            Some(path) => Some(read_results(path)?),
            None => None,
        };
        let cfg = GameConfig {
            leadership: g.leadership,
            t_max: g.t_max,
            convergence_tol: g.convergence_tol,
            convergence_cycles: g.convergence_cycles,
            initial_specs: g.initial_specs.iter().map(|&[a, b]| Strategy::new(a, b)).collect(),
            builder: self.builder,
            fairness: self.fairness_regulator,
            privacy: self.privacy_regulator,
            regulator_oracle: self.oracle_with_seed(&self.oracle)?,
            builder_oracle: match &self.builder_oracle {
                Some(spec) => Some(self.oracle_with_seed(spec)?),
                None => None,
            },
            seed_source: self.seeding.source,
            seed_grid: [self.seeding.n_gamma, self.seeding.n_epsilon],
            initial_results,
            bounds: self.bounds,
            interpolation: g.interpolation,
            gradient_step: g.gradient_step,
            slots: g.regulator_slots,
            penalty_policy: g.penalty_policy,
            phases: g.phases.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn binning(&self) -> LevelSetBinning {
        LevelSetBinning {
            bin_width: self.lambda.bin_width,
            min_denominator: self.lambda.min_denominator,
        }
    }

    pub fn equilibrium_settings(&self) -> EquilibriumSettings {
        EquilibriumSettings {
            seed: self.equilibrium.seed.wrapping_add(self.seed),
            ..self.equilibrium
        }
    }
}

/// Reads a frontier CSV file.
pub fn read_results(path: &Path) -> Result<ResultSet> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Invalid(format!("cannot open {}: {e}", path.display())))?;
    read_frontier_csv(std::io::BufReader::new(file))
}
