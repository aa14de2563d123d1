use super::game::run_game;
use super::{GameConfig, GameTrace};
use crate::error::{Error, Result};
use crate::frontier::Strategy;

/// One target played three ways: every agent on the regulator oracle, every
/// agent on the builder oracle, and each side on its own oracle over a
/// shared result set.
#[derive(Debug, Clone)]
pub struct TwoOracleOutcome {
    pub regulator_view: GameTrace,
    pub builder_view: GameTrace,
    pub shared: GameTrace,
}

impl TwoOracleOutcome {
    /// Box-normalized ∞-distance between the two single-view final strategies.
    pub fn view_gap(&self) -> f64 {
        let b = self.shared.settings.bounds;
        b.normalized_distance(self.regulator_view.final_strategy, self.builder_view.final_strategy)
    }
}

pub fn run_two_oracle(cfg: &GameConfig, target: Strategy) -> Result<TwoOracleOutcome> {
    let builder_oracle = cfg
        .builder_oracle
        .clone()
        .ok_or_else(|| Error::Invalid("two-oracle run needs a [builder_oracle] section".into()))?;
    let regulator_cfg = GameConfig {
        builder_oracle: None,
        ..cfg.clone()
    };
    let builder_cfg = GameConfig {
        regulator_oracle: builder_oracle,
        builder_oracle: None,
        ..cfg.clone()
    };
    let (regulator_view, (builder_view, shared)) = rayon::join(
        || run_game(&regulator_cfg, target),
        || rayon::join(|| run_game(&builder_cfg, target), || run_game(cfg, target)),
    );
    Ok(TwoOracleOutcome {
        regulator_view: regulator_view?,
        builder_view: builder_view?,
        shared: shared?,
    })
}
