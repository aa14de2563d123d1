//! Penalty calibration: estimating the builder's private penalty weights,
//! scalarization over the frontier, penalty sweeps, and knee selection.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{fairness_loss, privacy_loss};
use crate::engine::{run_games, GameConfig};
use crate::error::{Error, Result};
use crate::frontier::{EvalPoint, FrontierModel, ObjectiveSpec, ResultSet, Strategy};

/// Which builder weight to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaTarget {
    Priv,
    Fair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetBinning {
    /// Width of a level set on the other objective's hinge loss.
    pub bin_width: f64,
    /// Pairs whose hinge losses differ by less than this are skipped.
    pub min_denominator: f64,
}

impl Default for LevelSetBinning {
    fn default() -> Self {
        Self {
            bin_width: 0.02,
            min_denominator: 1e-6,
        }
    }
}

/// Estimates `λ_priv` (or `λ_fair`) from calibrated points.
///
/// Points are grouped into level sets of the other objective's hinge loss.
/// Within a level set every ordered pair with distinct losses contributes
/// `(err_j - err_i) / (ℓ_i - ℓ_j)`; pair means are averaged uniformly over
/// level sets and divided by `c`.
pub fn estimate_lambda(
    results: &ResultSet,
    c: f64,
    binning: &LevelSetBinning,
    which: LambdaTarget,
    objectives: &ObjectiveSpec,
    targets: Strategy,
) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Invalid(format!("lambda.c must be > 0, got {c}")));
    }
    if !(binning.bin_width > 0.0 && binning.min_denominator > 0.0) {
        return Err(Error::Invalid(
            "lambda.bin_width and lambda.min_denominator must be > 0".into(),
        ));
    }
    if results.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    let mut bins: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for p in results.iter() {
        let o = &p.objectives;
        let lf = fairness_loss(o.disparity_achieved, targets.fairness_param);
        let lp = privacy_loss(o.privacy_achieved, targets.privacy_param);
        let (own, other) = match which {
            LambdaTarget::Priv => (lp, lf),
            LambdaTarget::Fair => (lf, lp),
        };
        let bin = (other / binning.bin_width).floor() as i64;
        bins.entry(bin).or_default().push((own, objectives.builder_error(o)));
    }
    let mut bin_means = Vec::new();
    for members in bins.values_mut() {
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (mut sum, mut n) = (0.0, 0usize);
        for (i, &(li, ei)) in members.iter().enumerate() {
            for (j, &(lj, ej)) in members.iter().enumerate() {
                if i != j && (li - lj).abs() >= binning.min_denominator {
                    sum += (ej - ei) / (li - lj);
                    n += 1;
                }
            }
        }
        if n > 0 {
            bin_means.push(sum / n as f64);
        }
    }
    if bin_means.is_empty() {
        return Err(Error::InsufficientLevelSetPairs);
    }
    Ok(bin_means.iter().sum::<f64>() / bin_means.len() as f64 / c)
}

/// Weights on builder error, fairness hinge, and privacy hinge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationWeights(pub [f64; 3]);

impl ScalarizationWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.0.iter().all(|&w| w == 0.0) {
            return Err(Error::Invalid(format!(
                "scalarization weights must be nonnegative with one positive, got {:?}",
                self.0
            )));
        }
        Ok(())
    }
}

/// Efficient point minimizing `α₁·err + α₂·ℓ_fair + α₃·ℓ_priv`, with hinge
/// losses against `targets`. Ties go to the lowest γ, then the lowest ε.
pub fn scalarize(frontier: &FrontierModel, w: &ScalarizationWeights, targets: Strategy) -> Result<EvalPoint> {
    w.validate()?;
    let spec = &frontier.settings().objectives;
    let score = |p: &EvalPoint| {
        let o = &p.objectives;
        w.0[0] * spec.builder_error(o)
            + w.0[1] * fairness_loss(o.disparity_achieved, targets.fairness_param)
            + w.0[2] * privacy_loss(o.privacy_achieved, targets.privacy_param)
    };
    frontier
        .efficient_points()
        .iter()
        .min_by(|a, b| {
            score(a)
                .total_cmp(&score(b))
                .then(a.strategy.fairness_param.total_cmp(&b.strategy.fairness_param))
                .then(a.strategy.privacy_param.total_cmp(&b.strategy.privacy_param))
        })
        .copied()
        .ok_or(Error::EmptyResultSet)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub c_fair: f64,
    pub c_priv: f64,
    pub mean_fair_violation: f64,
    pub mean_priv_violation: f64,
    pub mean_acc: f64,
    pub mean_cov: f64,
    pub n_runs: usize,
}

pub const SWEEP_HEADER: [&str; 7] = [
    "c_fair",
    "c_priv",
    "mean_fair_violation",
    "mean_priv_violation",
    "mean_acc",
    "mean_cov",
    "n_runs",
];

/// One game per grid cell and initial spec; rows are `c_fair`-major.
pub fn sweep_penalties(cfg: &GameConfig, c_fair_grid: &[f64], c_priv_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if c_fair_grid.is_empty() || c_priv_grid.is_empty() {
        return Err(Error::Invalid("sweep grids must be nonempty".into()));
    }
    let cells: Vec<(f64, f64)> = c_fair_grid
        .iter()
        .flat_map(|&f| c_priv_grid.iter().map(move |&p| (f, p)))
        .collect();
    cells
        .par_iter()
        .map(|&(c_fair, c_priv)| {
            let traces = run_games(&cfg.with_penalties(c_fair, c_priv))?;
            let n = traces.len() as f64;
            let mean = |f: &dyn Fn(&crate::engine::GameTrace) -> f64| traces.iter().map(f).sum::<f64>() / n;
            Ok(SweepRow {
                c_fair,
                c_priv,
                mean_fair_violation: mean(&|t| t.violation.fairness),
                mean_priv_violation: mean(&|t| t.violation.privacy),
                mean_acc: mean(&|t| t.last().objectives.accuracy),
                mean_cov: mean(&|t| t.last().objectives.coverage),
                n_runs: traces.len(),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.c_fair.to_string(),
            r.c_priv.to_string(),
            r.mean_fair_violation.to_string(),
            r.mean_priv_violation.to_string(),
            r.mean_acc.to_string(),
            r.mean_cov.to_string(),
            r.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knee {
    pub x: f64,
    /// Set when the curve is a straight line; `x` is then the midpoint.
    pub degenerate: bool,
}

/// Point of a curve farthest from the chord joining its ends, both axes
/// rescaled to `[0, 1]`. The first of equally distant points wins.
pub fn knee_point(curve: &[(f64, f64)]) -> Result<Knee> {
    if curve.len() < 3 {
        return Err(Error::Invalid(format!("knee needs >= 3 points, got {}", curve.len())));
    }
    if curve.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::Invalid("knee curve must be finite".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Invalid("knee curve x must be strictly increasing".into()));
    }
    let (x0, xn) = (curve[0].0, curve[curve.len() - 1].0);
    let midpoint = Knee {
        x: 0.5 * (x0 + xn),
        degenerate: true,
    };
    let ylo = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let yhi = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if yhi == ylo {
        return Ok(midpoint);
    }
    let norm: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(x, y)| ((x - x0) / (xn - x0), (y - ylo) / (yhi - ylo)))
        .collect();
    let (a, b) = (norm[0], norm[norm.len() - 1]);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dy);
    let mut best = (0.0, 0usize);
    for (i, &(x, y)) in norm.iter().enumerate() {
        let d = (dx * (y - a.1) - dy * (x - a.0)).abs() / len;
        if d > best.0 {
            best = (d, i);
        }
    }
    if best.0 <= 1e-12 {
        return Ok(midpoint);
    }
    Ok(Knee {
        x: curve[best.1].0,
        degenerate: false,
    })
}
