//! The best-response game loop over a shared, recalibrated Pareto frontier.
//!
//! Each round one agent moves on the current frontier, the new strategy is
//! calibrated by an oracle, the point joins the result set, and the frontier
//! is refiltered. The mover's step size then decays.

mod equilibrium;
mod game;
mod io;
mod leadership;
mod phases;
mod two_oracle;

use serde::{Deserialize, Serialize};

use crate::agents::{BuilderConfig, RegulatorConfig, RegulatorKind};
use crate::error::{Error, Result};
use crate::frontier::{
    AchievedObjectives, FrontierSettings, InterpolationMode, ObjectiveSpec, ResultSet, Sense,
    Strategy, StrategyBox,
};
use crate::oracle::Oracle;

pub use equilibrium::{check_equilibrium, EquilibriumReport, EquilibriumSettings};
pub use game::{choose_spec, mover_at, run_game, run_game_from, run_games, seed_results};
pub use io::{write_trace_csv, TRACE_HEADER};
pub use leadership::{compare_leadership, LeadershipRow, LeadershipSummary, Outcome};
pub use phases::run_phases;
pub use two_oracle::{run_two_oracle, TwoOracleOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Leadership {
    RegulatorLed,
    BuilderLed,
}

/// Which regulator takes the first of the two regulator slots per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegulatorSlots {
    FairnessFirst,
    PrivacyFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mover {
    Init,
    Builder,
    FairnessReg,
    PrivacyReg,
}

impl Mover {
    pub fn as_str(self) -> &'static str {
        match self {
            Mover::Init => "init",
            Mover::Builder => "builder",
            Mover::FairnessReg => "fairness_reg",
            Mover::PrivacyReg => "privacy_reg",
        }
    }
}

/// How regulators pick their penalty scalar before each of their moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyPolicy {
    /// The configured scalar, fixed for the whole run.
    Constant,
    /// The configured scalar only while the regulator's own oracle measures
    /// a violation at the current strategy, zero otherwise.
    ComplianceGated,
}

impl PenaltyPolicy {
    pub fn penalty_scale(
        self,
        reg: &RegulatorConfig,
        configured: f64,
        measured: &AchievedObjectives,
    ) -> f64 {
        match self {
            PenaltyPolicy::Constant => configured,
            PenaltyPolicy::ComplianceGated => {
                if reg.loss(measured) > 0.0 {
                    configured
                } else {
                    0.0
                }
            }
        }
    }
}

/// Penalty scalar, step size, and step decay of one regulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorSettings {
    pub penalty_scalar: f64,
    pub step_size: f64,
    pub decay: f64,
}

impl RegulatorSettings {
    pub fn with_target(&self, kind: RegulatorKind, target: f64) -> RegulatorConfig {
        RegulatorConfig {
            kind,
            target,
            penalty_scalar: self.penalty_scalar,
            step_size: self.step_size,
            decay: self.decay,
        }
    }
}

/// Oracle whose grid seeds the shared result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Regulator,
    Builder,
}

/// Everything a game run needs.
#[derive(Debug, Clone)]
pub struct GameConfig {
    pub leadership: Leadership,
    pub t_max: usize,
    /// Threshold on the per-move change, in box-normalized units.
    pub convergence_tol: f64,
    /// Number of consecutive full cycles the threshold must hold.
    pub convergence_cycles: usize,
    /// Regulator targets `(γ₀, ε₀)`, one game per entry.
    pub initial_specs: Vec<Strategy>,
    pub builder: BuilderConfig,
    pub fairness: RegulatorSettings,
    pub privacy: RegulatorSettings,
    pub regulator_oracle: Oracle,
    /// Builder-side oracle; `None` means both sides share one.
    pub builder_oracle: Option<Oracle>,
    pub seed_source: SeedSource,
    pub seed_grid: [usize; 2],
    /// Precomputed seed frontier, used instead of sampling the grid.
    pub initial_results: Option<ResultSet>,
    pub bounds: StrategyBox,
    pub interpolation: InterpolationMode,
    pub gradient_step: f64,
    pub slots: RegulatorSlots,
    pub penalty_policy: PenaltyPolicy,
    /// `(C_fair, C_priv)` per enforcement phase.
    pub phases: Vec<[f64; 2]>,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.t_max < 1 {
            return Err(Error::Invalid("game.t_max must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Invalid("game.convergence_tol must be > 0".into()));
        }
        if self.convergence_cycles < 1 {
            return Err(Error::Invalid("game.convergence_cycles must be >= 1".into()));
        }
        if self.initial_specs.is_empty() {
            return Err(Error::Invalid("game.initial_specs needs at least one entry".into()));
        }
        for s in &self.initial_specs {
            if !s.is_finite() {
                return Err(Error::Invalid(format!("initial spec {s:?} is not finite")));
            }
        }
        if !(self.gradient_step > 0.0) {
            return Err(Error::Invalid("game.gradient_step must be > 0".into()));
        }
        let b = &self.builder;
        if !(0.0..=1.0).contains(&b.lambda_b) {
            return Err(Error::Invalid("builder.lambda_b must lie in [0, 1]".into()));
        }
        if !(b.lambda_fair >= 0.0 && b.lambda_priv >= 0.0) {
            return Err(Error::Invalid("builder lambdas must be >= 0".into()));
        }
        if !(b.step_size > 0.0 && b.decay > 0.0) {
            return Err(Error::Invalid("builder.step_size and builder.decay must be > 0".into()));
        }
        for (name, r) in [("fairness_regulator", self.fairness), ("privacy_regulator", self.privacy)] {
            if !(r.penalty_scalar >= 0.0) {
                return Err(Error::Invalid(format!("{name}.penalty_scalar must be >= 0")));
            }
            if !(r.step_size > 0.0 && r.decay > 0.0) {
                return Err(Error::Invalid(format!("{name}.step_size and decay must be > 0")));
            }
        }
        for &[cf, cp] in &self.phases {
            if !(cf >= 0.0 && cp >= 0.0) {
                return Err(Error::Invalid("phase penalty scalars must be >= 0".into()));
            }
        }
        if self.seed_grid.iter().any(|&n| n < 2) {
            return Err(Error::InvalidRange("seeding grid needs >= 2 samples per axis".into()));
        }
        Ok(())
    }

    pub fn frontier_settings(&self) -> FrontierSettings {
        FrontierSettings {
            objectives: ObjectiveSpec {
                accuracy_weight: self.builder.accuracy_weight(),
                orientation: [Sense::Minimize; 3],
            },
            mode: self.interpolation,
            bounds: self.bounds,
        }
    }

    pub fn builder_side_oracle(&self) -> &Oracle {
        self.builder_oracle.as_ref().unwrap_or(&self.regulator_oracle)
    }

    pub fn with_penalties(&self, c_fair: f64, c_priv: f64) -> Self {
        let mut cfg = self.clone();
        cfg.fairness.penalty_scalar = c_fair;
        cfg.privacy.penalty_scalar = c_priv;
        cfg
    }

    pub fn with_leadership(&self, leadership: Leadership) -> Self {
        Self {
            leadership,
            ..self.clone()
        }
    }
}

/// Snapshot of the agents a trace was played with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    pub leadership: Leadership,
    pub target: Strategy,
    pub builder: BuilderConfig,
    /// Regulators with their targets and last penalty scalars.
    pub fairness: RegulatorConfig,
    pub privacy: RegulatorConfig,
    pub bounds: StrategyBox,
    pub gradient_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub mover: Mover,
    pub strategy: Strategy,
    pub objectives: AchievedObjectives,
    /// Builder total loss, fairness hinge, privacy hinge.
    pub losses: [f64; 3],
    /// Fairness and privacy penalties.
    pub penalties: [f64; 2],
    /// Step sizes in effect during the round: fairness, privacy, builder.
    pub step_sizes: [f64; 3],
}

/// Worst hinge violations over the last full cycle of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationSummary {
    pub fairness: f64,
    pub privacy: f64,
}

impl ViolationSummary {
    pub fn is_violated(&self) -> bool {
        self.fairness > 0.0 || self.privacy > 0.0
    }

    pub fn max(&self) -> f64 {
        self.fairness.max(self.privacy)
    }
}

#[derive(Debug, Clone)]
pub struct GameTrace {
    pub settings: TraceSettings,
    pub records: Vec<RoundRecord>,
    pub converged: bool,
    pub final_strategy: Strategy,
    pub violation: ViolationSummary,
    /// Accumulated result set at the end of the run.
    pub results: ResultSet,
}

impl GameTrace {
    pub fn last(&self) -> &RoundRecord {
        self.records.last().expect("trace has an init record")
    }
}
