use serde::Serialize;

use super::game::run_games;
use super::{GameConfig, GameTrace, Leadership};
use crate::error::Result;
use crate::frontier::Strategy;

/// Final outcome of one game, as seen in its last record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub accuracy: f64,
    pub coverage: f64,
    pub disparity: f64,
    pub epsilon: f64,
    pub builder_loss: f64,
    pub converged: bool,
}

impl Outcome {
    fn of(trace: &GameTrace) -> Self {
        let last = trace.last();
        Self {
            accuracy: last.objectives.accuracy,
            coverage: last.objectives.coverage,
            disparity: last.objectives.disparity_achieved,
            epsilon: last.objectives.privacy_achieved,
            builder_loss: last.losses[0],
            converged: trace.converged,
        }
    }

    fn minus(&self, other: &Self) -> [f64; 5] {
        [
            self.accuracy - other.accuracy,
            self.coverage - other.coverage,
            self.disparity - other.disparity,
            self.epsilon - other.epsilon,
            self.builder_loss - other.builder_loss,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadershipRow {
    pub target: Strategy,
    pub regulator_led: Outcome,
    pub builder_led: Outcome,
}

/// Builder-led minus regulator-led, per initial spec and on average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeadershipSummary {
    pub rows: Vec<LeadershipRow>,
    /// Mean differences in accuracy, coverage, disparity, ε, builder loss.
    pub mean_difference: [f64; 5],
}

/// Plays every initial spec under both leaderships on the same oracle.
pub fn compare_leadership(cfg: &GameConfig) -> Result<LeadershipSummary> {
    let (reg, build) = rayon::join(
        || run_games(&cfg.with_leadership(Leadership::RegulatorLed)),
        || run_games(&cfg.with_leadership(Leadership::BuilderLed)),
    );
    let (reg, build) = (reg?, build?);
    let rows: Vec<LeadershipRow> = cfg
        .initial_specs
        .iter()
        .zip(reg.iter().zip(&build))
        .map(|(&target, (r, b))| LeadershipRow {
            target,
            regulator_led: Outcome::of(r),
            builder_led: Outcome::of(b),
        })
        .collect();
    let mut mean_difference = [0.0; 5];
    for row in &rows {
        for (m, d) in mean_difference.iter_mut().zip(row.builder_led.minus(&row.regulator_led)) {
            *m += d / rows.len() as f64;
        }
    }
    Ok(LeadershipSummary {
        rows,
        mean_difference,
    })
}
