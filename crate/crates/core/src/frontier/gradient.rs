use super::{AchievedObjectives, Axis, FrontierModel, Strategy};
use crate::error::Result;

/// Default finite-difference step, in box-normalized units.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-3;

/// Finite-difference gradient in raw strategy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub value: [f64; 2],
    /// Set when the frontier has fewer than two distinct values along the
    /// axis; the component is then reported as zero.
    pub degenerate: [bool; 2],
}

impl Gradient {
    pub fn along(&self, axis: Axis) -> f64 {
        self.value[axis.index()]
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

/// Central differences of `selector ∘ interpolate` at `s`, one-sided where
/// a probe would leave the box or the surface's domain.
///
/// `h` is a fraction of the box width along each axis.
pub fn estimate_gradient<F>(
    frontier: &FrontierModel,
    s: Strategy,
    selector: F,
    h: f64,
) -> Result<Gradient>
where
    F: Fn(&AchievedObjectives) -> f64,
{
    let bounds = frontier.settings().bounds;
    let domain = frontier.surface().domain();
    let s = frontier.surface().clamp_to_domain(bounds.clamp(s));
    let f = |p: Strategy| frontier.interpolate(p).map(|o| selector(&o));

    let mut value = [0.0; 2];
    let mut degenerate = [false; 2];
    for axis in Axis::BOTH {
        let k = axis.index();
        if frontier.surface().distinct_along(axis) < 2 {
            degenerate[k] = true;
            continue;
        }
        let [blo, bhi] = bounds.range(axis);
        let [dlo, dhi] = domain.range(axis);
        let (lo, hi) = (blo.max(dlo), bhi.min(dhi));
        let step = h * bounds.width(axis);
        let x = s.get(axis);
        let up = (x + step).min(hi);
        let down = (x - step).max(lo);
        if up <= down {
            continue;
        }
        value[k] = (f(s.with(axis, up))? - f(s.with(axis, down))?) / (up - down);
    }
    Ok(Gradient { value, degenerate })
}
