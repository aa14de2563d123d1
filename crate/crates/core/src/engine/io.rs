use std::io::Write;

use super::GameTrace;
use crate::error::Result;

pub const TRACE_HEADER: [&str; 16] = [
    "round",
    "mover",
    "gamma",
    "epsilon",
    "acc",
    "cov",
    "gamma_ach",
    "eps_ach",
    "loss_builder",
    "loss_fair",
    "loss_priv",
    "penalty_fair",
    "penalty_priv",
    "eta_fair",
    "eta_priv",
    "eta_build",
];

pub fn write_trace_csv<W: Write>(trace: &GameTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        let o = &r.objectives;
        let nums = [
            r.strategy.fairness_param,
            r.strategy.privacy_param,
            o.accuracy,
            o.coverage,
            o.disparity_achieved,
            o.privacy_achieved,
            r.losses[0],
            r.losses[1],
            r.losses[2],
            r.penalties[0],
            r.penalties[1],
            r.step_sizes[0],
            r.step_sizes[1],
            r.step_sizes[2],
        ];
        let mut row = vec![r.round.to_string(), r.mover.as_str().to_string()];
        row.extend(nums.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
