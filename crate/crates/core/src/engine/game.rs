use std::cmp::Ordering;

use rayon::prelude::*;

use super::{
    GameConfig, GameTrace, Leadership, Mover, RegulatorSlots, RoundRecord, SeedSource,
    TraceSettings, ViolationSummary,
};
use crate::agents::{
    builder_error, builder_step, builder_total_loss, regulator_step, BuilderConfig,
    RegulatorConfig, RegulatorKind,
};
use crate::error::{Error, Result};
use crate::frontier::{
    pareto_filter, AchievedObjectives, Axis, EvalPoint, FrontierModel, Insertion, ResultSet,
    Strategy,
};

/// The seed result set: the configured precomputed frontier, or the
/// seeding oracle sampled on the configured grid over the box.
pub fn seed_results(cfg: &GameConfig) -> Result<ResultSet> {
    if let Some(r) = &cfg.initial_results {
        if r.is_empty() {
            return Err(Error::EmptyResultSet);
        }
        return Ok(r.clone());
    }
    let oracle = match cfg.seed_source {
        SeedSource::Regulator => &cfg.regulator_oracle,
        SeedSource::Builder => cfg.builder_side_oracle(),
    };
    let [ng, ne] = cfg.seed_grid;
    oracle.sample_grid(cfg.bounds.gamma, cfg.bounds.epsilon, ng, ne)
}

/// Who moves at round `t >= 1`.
pub fn mover_at(t: usize, leadership: Leadership, slots: RegulatorSlots) -> Mover {
    let (first, second) = match slots {
        RegulatorSlots::FairnessFirst => (Mover::FairnessReg, Mover::PrivacyReg),
        RegulatorSlots::PrivacyFirst => (Mover::PrivacyReg, Mover::FairnessReg),
    };
    let phase = match leadership {
        Leadership::RegulatorLed => t % 3,
        Leadership::BuilderLed => (t + 1) % 3,
    };
    match phase {
        1 => Mover::Builder,
        2 => first,
        _ => second,
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// The first-round strategy, picked by the leader among efficient points.
///
/// Regulators prefer points meeting both targets; among those (or, if none
/// qualify, among all points by smallest box-normalized violation) they
/// take the one with the lowest builder error. A leading builder takes the
/// point with the lowest total loss. Remaining ties go to the lowest γ,
/// then the lowest ε.
pub fn choose_spec(
    frontier: &FrontierModel,
    leadership: Leadership,
    builder: &BuilderConfig,
    fair: &RegulatorConfig,
    privacy: &RegulatorConfig,
) -> Result<EvalPoint> {
    let bounds = frontier.settings().bounds;
    let key = |p: &EvalPoint| -> Vec<f64> {
        let o = &p.objectives;
        let (g, e) = (p.strategy.fairness_param, p.strategy.privacy_param);
        match leadership {
            Leadership::RegulatorLed => {
                let lf = fair.loss(o);
                let lp = privacy.loss(o);
                let infeasible = if lf > 0.0 || lp > 0.0 { 1.0 } else { 0.0 };
                let violation = lf / bounds.width(Axis::Fairness) + lp / bounds.width(Axis::Privacy);
                vec![infeasible, violation, builder_error(o, builder), g, e]
            }
            Leadership::BuilderLed => vec![builder_total_loss(o, builder, fair, privacy), g, e],
        }
    };
    frontier
        .efficient_points()
        .iter()
        .map(|p| (key(p), p))
        .min_by(|a, b| lex(&a.0, &b.0))
        .map(|(_, p)| *p)
        .ok_or(Error::EmptyResultSet)
}

/// Plays one game from the seed result set toward the regulator targets
/// `target`.
pub fn run_game(cfg: &GameConfig, target: Strategy) -> Result<GameTrace> {
    run_game_from(cfg, target, seed_results(cfg)?, None)
}

/// One game per initial spec, in parallel; results keep spec order.
pub fn run_games(cfg: &GameConfig) -> Result<Vec<GameTrace>> {
    cfg.validate()?;
    let seed = seed_results(cfg)?;
    cfg.initial_specs
        .par_iter()
        .map(|&target| run_game_from(cfg, target, seed.clone(), None))
        .collect()
}

/// Plays one game on an existing result set. With `start` the game resumes
/// at that strategy instead of choosing the first-round spec.
pub fn run_game_from(
    cfg: &GameConfig,
    target: Strategy,
    mut results: ResultSet,
    start: Option<Strategy>,
) -> Result<GameTrace> {
    cfg.validate()?;
    let settings = cfg.frontier_settings();
    let bounds = cfg.bounds;
    let h = cfg.gradient_step;
    let builder = cfg.builder;
    let mut fair = cfg.fairness.with_target(RegulatorKind::Fairness, target.fairness_param);
    let mut privacy = cfg.privacy.with_target(RegulatorKind::Privacy, target.privacy_param);
    let configured = [fair.penalty_scalar, privacy.penalty_scalar];
    let reg_oracle = &cfg.regulator_oracle;
    let builder_oracle = cfg.builder_side_oracle();

    let mut frontier = pareto_filter(&results, &settings)?;
    let init = match start {
        Some(s) => {
            let s = bounds.clamp(s);
            EvalPoint {
                strategy: s,
                objectives: reg_oracle.evaluate(s)?,
                round_tag: 0,
            }
        }
        None => choose_spec(&frontier, cfg.leadership, &builder, &fair, &privacy)?,
    };
    let mut s = init.strategy;
    let measured = reg_oracle.evaluate(s)?;
    fair.penalty_scalar = cfg.penalty_policy.penalty_scale(&fair, configured[0], &measured);
    privacy.penalty_scalar = cfg.penalty_policy.penalty_scale(&privacy, configured[1], &measured);

    // fairness, privacy, builder
    let mut etas = [fair.step_size, privacy.step_size, builder.step_size];
    let mut records = vec![make_record(0, Mover::Init, s, &init.objectives, &builder, &fair, &privacy, etas)?];

    let needed = 3 * cfg.convergence_cycles;
    let mut quiet_moves = 0usize;
    let mut converged = false;
    for t in 1..=cfg.t_max {
        let mover = mover_at(t, cfg.leadership, cfg.slots);
        let used = etas;
        let (next, slot, oracle) = match mover {
            Mover::Builder => (
                builder_step(&frontier, s, &builder, &fair, &privacy, etas[2], h)?,
                2,
                builder_oracle,
            ),
            Mover::FairnessReg => {
                let measured = reg_oracle.evaluate(s)?;
                fair.penalty_scalar = cfg.penalty_policy.penalty_scale(&fair, configured[0], &measured);
                (regulator_step(&frontier, s, &fair, etas[0], h)?, 0, reg_oracle)
            }
            Mover::PrivacyReg => {
                let measured = reg_oracle.evaluate(s)?;
                privacy.penalty_scalar =
                    cfg.penalty_policy.penalty_scale(&privacy, configured[1], &measured);
                (regulator_step(&frontier, s, &privacy, etas[1], h)?, 1, reg_oracle)
            }
            Mover::Init => unreachable!("init only at t = 0"),
        };
        let point = EvalPoint {
            strategy: next,
            objectives: oracle.evaluate(next)?,
            round_tag: t as i64,
        };
        frontier = match results.add(point) {
            Insertion::Appended => frontier.with_appended(point)?,
            Insertion::Replaced(_) => pareto_filter(&results, &settings)?,
        };
        etas[slot] *= [fair.decay, privacy.decay, builder.decay][slot];
        records.push(make_record(t, mover, next, &point.objectives, &builder, &fair, &privacy, used)?);

        let delta = bounds.normalized_distance(s, next);
        s = next;
        if delta < cfg.convergence_tol {
            quiet_moves += 1;
        } else {
            quiet_moves = 0;
        }
        if quiet_moves >= needed {
            converged = true;
            break;
        }
    }

    let tail = &records[records.len().saturating_sub(3)..];
    let violation = ViolationSummary {
        fairness: tail.iter().map(|r| r.losses[1]).fold(0.0, f64::max),
        privacy: tail.iter().map(|r| r.losses[2]).fold(0.0, f64::max),
    };
    Ok(GameTrace {
        settings: TraceSettings {
            leadership: cfg.leadership,
            target,
            builder,
            fairness: fair,
            privacy,
            bounds,
            gradient_step: h,
        },
        records,
        converged,
        final_strategy: s,
        violation,
        results,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    round: usize,
    mover: Mover,
    strategy: Strategy,
    objectives: &AchievedObjectives,
    builder: &BuilderConfig,
    fair: &RegulatorConfig,
    privacy: &RegulatorConfig,
    step_sizes: [f64; 3],
) -> Result<RoundRecord> {
    let record = RoundRecord {
        round,
        mover,
        strategy,
        objectives: *objectives,
        losses: [
            builder_total_loss(objectives, builder, fair, privacy),
            fair.loss(objectives),
            privacy.loss(objectives),
        ],
        penalties: [fair.penalty(objectives), privacy.penalty(objectives)],
        step_sizes,
    };
    if record.losses.iter().chain(&record.penalties).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss {
            round,
            detail: format!("{record:?}"),
        });
    }
    Ok(record)
}
