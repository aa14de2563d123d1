use super::game::{run_game_from, seed_results};
use super::{GameConfig, GameTrace};
use crate::error::{Error, Result};
use crate::frontier::Strategy;

/// Runs one game per phase of the penalty schedule. Each phase starts from
/// the previous phase's final strategy and result set; step sizes restart.
pub fn run_phases(cfg: &GameConfig, target: Strategy) -> Result<Vec<GameTrace>> {
    if cfg.phases.is_empty() {
        return Err(Error::Invalid("game.phases must list at least one phase".into()));
    }
    let mut results = seed_results(cfg)?;
    let mut start = None;
    let mut traces = Vec::with_capacity(cfg.phases.len());
    for &[c_fair, c_priv] in &cfg.phases {
        let phase_cfg = cfg.with_penalties(c_fair, c_priv);
        let trace = run_game_from(&phase_cfg, target, results, start)?;
        results = trace.results.clone();
        start = Some(trace.final_strategy);
        traces.push(trace);
    }
    Ok(traces)
}
