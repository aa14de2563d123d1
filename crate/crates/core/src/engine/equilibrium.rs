use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GameTrace;
use crate::agents::builder_total_loss;
use crate::error::{Error, Result};
use crate::frontier::{AchievedObjectives, Axis, FrontierModel, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSettings {
    pub n_probes: usize,
    /// Probe radius as a fraction of each axis' box width.
    pub probe_radius: f64,
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for EquilibriumSettings {
    fn default() -> Self {
        Self {
            n_probes: 64,
            probe_radius: 0.05,
            tol: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// Largest loss decrease any probe found, per agent.
    pub builder_improvement: f64,
    pub fairness_improvement: f64,
    pub privacy_improvement: f64,
    pub n_probes: usize,
    pub probe_radius: f64,
    pub tol: f64,
    pub verified: bool,
}

/// Probes unilateral deviations around the final strategy of a converged
/// trace, scoring each agent's loss on `frontier`.
///
/// Regulators deviate along their own coordinate; the builder alternates
/// between both.
pub fn check_equilibrium(
    trace: &GameTrace,
    frontier: &FrontierModel,
    settings: &EquilibriumSettings,
) -> Result<EquilibriumReport> {
    if !trace.converged {
        return Err(Error::NotConverged);
    }
    if !(settings.probe_radius >= 0.0 && settings.tol >= 0.0) {
        return Err(Error::Invalid("probe_radius and tol must be >= 0".into()));
    }
    let ts = &trace.settings;
    let bounds = frontier.settings().bounds;
    let s_star = trace.final_strategy;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let builder_loss = |o: &AchievedObjectives| builder_total_loss(o, &ts.builder, &ts.fairness, &ts.privacy);
    let fair_loss = |o: &AchievedObjectives| ts.fairness.loss(o);
    let priv_loss = |o: &AchievedObjectives| ts.privacy.loss(o);

    let base = frontier.interpolate_clamped(s_star)?;
    let mut best = [0.0f64; 3];
    let agents: [(&dyn Fn(&AchievedObjectives) -> f64, Option<Axis>); 3] = [
        (&builder_loss, None),
        (&fair_loss, Some(Axis::Fairness)),
        (&priv_loss, Some(Axis::Privacy)),
    ];
    for (i, (loss, axis)) in agents.iter().enumerate() {
        let l0 = loss(&base);
        for k in 0..settings.n_probes {
            let axis = axis.unwrap_or(Axis::BOTH[k % 2]);
            let r = settings.probe_radius * bounds.width(axis);
            let offset = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
            let probe: Strategy = bounds.clamp(s_star.with(axis, s_star.get(axis) + offset));
            let o = frontier.interpolate_clamped(probe)?;
            best[i] = best[i].max(l0 - loss(&o));
        }
    }
    Ok(EquilibriumReport {
        builder_improvement: best[0],
        fairness_improvement: best[1],
        privacy_improvement: best[2],
        n_probes: settings.n_probes,
        probe_radius: settings.probe_radius,
        tol: settings.tol,
        verified: best.iter().all(|&b| b <= settings.tol),
    })
}
