use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AchievedObjectives, Axis, EvalPoint, Strategy, StrategyBox};
use crate::error::{Error, Result};

/// Neighbors averaged by inverse-distance weighting.
pub const KNN_NEIGHBORS: usize = 4;

const COINCIDENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationMode {
    /// Bilinear on the rectangular grid of sampled strategies.
    GridBilinear,
    /// Inverse-distance weighting of the nearest efficient points.
    KnnIdw,
}

/// Objective surface over strategy space, built from scattered or gridded
/// points.
///
/// In grid mode the lattice axes come from the seeding points (round tag
/// `-1`) when there are any, otherwise from all points. Lattice nodes with
/// no point of their own are filled by inverse-distance weighting, so the
/// bilinear surface is defined on the whole lattice.
#[derive(Debug, Clone)]
pub struct Surface {
    mode: InterpolationMode,
    bounds: StrategyBox,
    samples: Vec<(Strategy, [f64; 4])>,
    grid: Option<Grid>,
}

#[derive(Debug, Clone)]
struct Grid {
    gammas: Vec<f64>,
    epsilons: Vec<f64>,
    /// Row-major, gamma index first.
    values: Vec<[f64; 4]>,
}

impl Grid {
    fn at(&self, i: usize, j: usize) -> [f64; 4] {
        self.values[i * self.epsilons.len() + j]
    }
}

fn sorted_distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.map(|x| x + 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Cell index and weight of the upper node for `x` on `axis`.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    if axis.len() == 1 {
        return (0, 0.0);
    }
    let upper = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1);
    let (lo, hi) = (axis[upper - 1], axis[upper]);
    (upper - 1, (x - lo) / (hi - lo))
}

impl Surface {
    pub fn build(points: &[EvalPoint], mode: InterpolationMode, bounds: StrategyBox) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyResultSet);
        }
        let samples: Vec<(Strategy, [f64; 4])> = points
            .iter()
            .map(|p| (p.strategy, p.objectives.to_array()))
            .collect();
        let mut surface = Self {
            mode,
            bounds,
            samples,
            grid: None,
        };
        if mode == InterpolationMode::GridBilinear {
            surface.grid = Some(surface.build_grid(points));
        }
        Ok(surface)
    }

    fn build_grid(&self, points: &[EvalPoint]) -> Grid {
        let seeds: Vec<&EvalPoint> = points.iter().filter(|p| p.round_tag == -1).collect();
        let axis_source: Vec<&EvalPoint> = if seeds.is_empty() {
            points.iter().collect()
        } else {
            seeds
        };
        let gammas = sorted_distinct(axis_source.iter().map(|p| p.strategy.fairness_param));
        let epsilons = sorted_distinct(axis_source.iter().map(|p| p.strategy.privacy_param));

        let by_key: HashMap<(u64, u64), [f64; 4]> = self
            .samples
            .iter()
            .map(|(s, v)| (s.key(), *v))
            .collect();
        let mut values = Vec::with_capacity(gammas.len() * epsilons.len());
        for &g in &gammas {
            for &e in &epsilons {
                let s = Strategy::new(g, e);
                let v = by_key
                    .get(&s.key())
                    .copied()
                    .unwrap_or_else(|| self.idw(s));
                values.push(v);
            }
        }
        Grid {
            gammas,
            epsilons,
            values,
        }
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    /// Strategy rectangle on which `interpolate` is defined without error.
    pub fn domain(&self) -> StrategyBox {
        match &self.grid {
            Some(g) => StrategyBox {
                gamma: [g.gammas[0], *g.gammas.last().unwrap()],
                epsilon: [g.epsilons[0], *g.epsilons.last().unwrap()],
            },
            None => self.bounds,
        }
    }

    pub fn clamp_to_domain(&self, s: Strategy) -> Strategy {
        match &self.grid {
            Some(_) => {
                let d = self.domain();
                Strategy::new(
                    s.fairness_param.clamp(d.gamma[0], d.gamma[1]),
                    s.privacy_param.clamp(d.epsilon[0], d.epsilon[1]),
                )
            }
            None => s,
        }
    }

    pub fn interpolate(&self, s: Strategy) -> Result<AchievedObjectives> {
        if !s.is_finite() {
            return Err(Error::OutOfDomain {
                gamma: s.fairness_param,
                epsilon: s.privacy_param,
            });
        }
        let v = match &self.grid {
            Some(grid) => self.bilinear(grid, s)?,
            None => self.idw(s),
        };
        Ok(AchievedObjectives::from_array(v))
    }

    fn bilinear(&self, grid: &Grid, s: Strategy) -> Result<[f64; 4]> {
        let d = self.domain();
        let (g, e) = (s.fairness_param, s.privacy_param);
        if g < d.gamma[0] || g > d.gamma[1] || e < d.epsilon[0] || e > d.epsilon[1] {
            return Err(Error::OutOfDomain {
                gamma: g,
                epsilon: e,
            });
        }
        let (i, t) = locate(&grid.gammas, g);
        let (j, u) = locate(&grid.epsilons, e);
        let i1 = (i + 1).min(grid.gammas.len() - 1);
        let j1 = (j + 1).min(grid.epsilons.len() - 1);
        let (v00, v01, v10, v11) = (grid.at(i, j), grid.at(i, j1), grid.at(i1, j), grid.at(i1, j1));
        let mut out = [0.0; 4];
        for k in 0..4 {
            // Skip zero-weight corners so exact hits reproduce node values bit for bit.
            let mut acc = 0.0;
            for (w, v) in [
                ((1.0 - t) * (1.0 - u), v00[k]),
                ((1.0 - t) * u, v01[k]),
                (t * (1.0 - u), v10[k]),
                (t * u, v11[k]),
            ] {
                if w != 0.0 {
                    acc += w * v;
                }
            }
            out[k] = acc;
        }
        Ok(out)
    }

    fn idw(&self, s: Strategy) -> [f64; 4] {
        let q = self.bounds.normalize(s);
        let mut dists: Vec<(f64, usize)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, (p, _))| {
                let n = self.bounds.normalize(*p);
                ((n[0] - q[0]).hypot(n[1] - q[1]), i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if dists[0].0 < COINCIDENT {
            return self.samples[dists[0].1].1;
        }
        let nearest = &dists[..KNN_NEIGHBORS.min(dists.len())];
        let mut total = 0.0;
        let mut out = [0.0; 4];
        for &(d, i) in nearest {
            let w = 1.0 / (d * d);
            total += w;
            for (o, v) in out.iter_mut().zip(self.samples[i].1) {
                *o += w * v;
            }
        }
        out.map(|v| v / total)
    }

    /// Distinct strategy values along `axis` among the source points.
    pub(crate) fn distinct_along(&self, axis: Axis) -> usize {
        sorted_distinct(self.samples.iter().map(|(s, _)| s.get(axis))).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontier::linspace;

    fn grid_points(f: impl Fn(f64, f64) -> f64, n: usize) -> Vec<EvalPoint> {
        let mut pts = Vec::new();
        for g in linspace(0.01, 1.0, n) {
            for e in linspace(1.0, 10.0, n) {
                let v = f(g, e);
                pts.push(EvalPoint::seed(
                    Strategy::new(g, e),
                    AchievedObjectives {
                        accuracy: v,
                        coverage: v,
                        disparity_achieved: g,
                        privacy_achieved: e,
                    },
                ));
            }
        }
        pts
    }

    #[test]
    fn bilinear_exact_on_affine() {
        let pts = grid_points(|g, e| g + e, 5);
        let s = Surface::build(&pts, InterpolationMode::GridBilinear, StrategyBox::default()).unwrap();
        let v = s.interpolate(Strategy::new(0.33, 7.1)).unwrap();
        assert!((v.accuracy - 7.43).abs() < 1e-12);
    }

    #[test]
    fn pass_through_both_modes() {
        let pts = grid_points(|g, e| (g * e).sin(), 4);
        for mode in [InterpolationMode::GridBilinear, InterpolationMode::KnnIdw] {
            let s = Surface::build(&pts, mode, StrategyBox::default()).unwrap();
            for p in &pts {
                assert_eq!(s.interpolate(p.strategy).unwrap(), p.objectives);
            }
        }
    }

    #[test]
    fn grid_rejects_outside_domain() {
        let pts = grid_points(|g, _| g, 3);
        let s = Surface::build(&pts, InterpolationMode::GridBilinear, StrategyBox::default()).unwrap();
        assert!(matches!(
            s.interpolate(Strategy::new(1.5, 2.0)),
            Err(Error::OutOfDomain { .. })
        ));
        let knn = Surface::build(&pts, InterpolationMode::KnnIdw, StrategyBox::default()).unwrap();
        assert!(knn.interpolate(Strategy::new(1.5, 2.0)).is_ok());
    }

    #[test]
    fn missing_nodes_are_filled() {
        let mut pts = grid_points(|g, e| g + e, 3);
        pts.remove(4); // centre node
        let s = Surface::build(&pts, InterpolationMode::GridBilinear, StrategyBox::default()).unwrap();
        let v = s.interpolate(Strategy::new(0.505, 5.5)).unwrap();
        let lo = pts.iter().map(|p| p.objectives.accuracy).fold(f64::MAX, f64::min);
        let hi = pts.iter().map(|p| p.objectives.accuracy).fold(f64::MIN, f64::max);
        assert!(v.accuracy >= lo && v.accuracy <= hi);
    }
}
