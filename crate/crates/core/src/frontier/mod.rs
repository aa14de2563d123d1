//! Result sets, Pareto filtering, and surfaces over strategy space.
//!
//! A [`ResultSet`] accumulates every calibrated strategy of a game. Filtering
//! it yields a [`FrontierModel`]: the efficient points plus an interpolating
//! surface that agents query for achieved objectives and their gradients.

mod csv_io;
mod gradient;
mod interp;
mod pareto;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{parse_frontier_csv, read_frontier_csv, write_frontier_csv, FRONTIER_HEADER};
pub use gradient::{estimate_gradient, Gradient, DEFAULT_GRADIENT_STEP};
pub use interp::{InterpolationMode, Surface, KNN_NEIGHBORS};
pub use pareto::{dominates, non_dominated, pareto_filter, Sense};

/// The trustworthy-parameter pair every agent updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    /// Maximum tolerable disparity (or the threshold of the DP-SGD variant).
    pub fairness_param: f64,
    /// Privacy budget.
    pub privacy_param: f64,
}

impl Strategy {
    pub const fn new(fairness_param: f64, privacy_param: f64) -> Self {
        Self {
            fairness_param,
            privacy_param,
        }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Fairness => self.fairness_param,
            Axis::Privacy => self.privacy_param,
        }
    }

    pub fn with(mut self, axis: Axis, value: f64) -> Self {
        match axis {
            Axis::Fairness => self.fairness_param = value,
            Axis::Privacy => self.privacy_param = value,
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.fairness_param.is_finite() && self.privacy_param.is_finite()
    }

    fn key(&self) -> (u64, u64) {
        // +0.0 and -0.0 must collide
        (
            (self.fairness_param + 0.0).to_bits(),
            (self.privacy_param + 0.0).to_bits(),
        )
    }
}

/// One of the two strategy coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Fairness,
    Privacy,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Fairness, Axis::Privacy];

    pub fn index(self) -> usize {
        match self {
            Axis::Fairness => 0,
            Axis::Privacy => 1,
        }
    }
}

/// Box constraints on the strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBox {
    pub gamma: [f64; 2],
    pub epsilon: [f64; 2],
}

impl Default for StrategyBox {
    fn default() -> Self {
        Self {
            gamma: [0.01, 1.0],
            epsilon: [1.0, 10.0],
        }
    }
}

impl StrategyBox {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("gamma", self.gamma), ("epsilon", self.epsilon)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRange(format!(
                    "box.{name} = [{lo}, {hi}] must satisfy min < max"
                )));
            }
        }
        Ok(())
    }

    pub fn range(&self, axis: Axis) -> [f64; 2] {
        match axis {
            Axis::Fairness => self.gamma,
            Axis::Privacy => self.epsilon,
        }
    }

    pub fn width(&self, axis: Axis) -> f64 {
        let [lo, hi] = self.range(axis);
        hi - lo
    }

    pub fn clamp(&self, s: Strategy) -> Strategy {
        Strategy::new(
            s.fairness_param.clamp(self.gamma[0], self.gamma[1]),
            s.privacy_param.clamp(self.epsilon[0], self.epsilon[1]),
        )
    }

    pub fn contains(&self, s: Strategy) -> bool {
        s.is_finite() && self.clamp(s) == s
    }

    /// Maps a strategy into the unit square.
    pub fn normalize(&self, s: Strategy) -> [f64; 2] {
        [
            (s.fairness_param - self.gamma[0]) / self.width(Axis::Fairness),
            (s.privacy_param - self.epsilon[0]) / self.width(Axis::Privacy),
        ]
    }

    /// Largest coordinate difference in box-normalized units.
    pub fn normalized_distance(&self, a: Strategy, b: Strategy) -> f64 {
        Axis::BOTH
            .iter()
            .map(|&ax| (a.get(ax) - b.get(ax)).abs() / self.width(ax))
            .fold(0.0, f64::max)
    }
}

/// Objectives achieved by a model trained at some strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AchievedObjectives {
    pub accuracy: f64,
    pub coverage: f64,
    pub disparity_achieved: f64,
    pub privacy_achieved: f64,
}

impl AchievedObjectives {
    pub fn validate(&self) -> Result<()> {
        let all = self.to_array();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite objectives {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.accuracy) || !(0.0..=1.0).contains(&self.coverage) {
            return Err(Error::Invalid(format!(
                "accuracy and coverage must lie in [0, 1], got {} and {}",
                self.accuracy, self.coverage
            )));
        }
        if self.disparity_achieved < 0.0 || self.privacy_achieved < 0.0 {
            return Err(Error::Invalid(format!(
                "achieved disparity and privacy must be nonnegative, got {} and {}",
                self.disparity_achieved, self.privacy_achieved
            )));
        }
        Ok(())
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [
            self.accuracy,
            self.coverage,
            self.disparity_achieved,
            self.privacy_achieved,
        ]
    }

    pub(crate) fn from_array(v: [f64; 4]) -> Self {
        Self {
            accuracy: v[0],
            coverage: v[1],
            disparity_achieved: v[2],
            privacy_achieved: v[3],
        }
    }
}

/// Selects a scalar out of [`AchievedObjectives`], e.g. for gradient estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Accuracy,
    Coverage,
    Disparity,
    Privacy,
}

impl Objective {
    pub fn of(self, obj: &AchievedObjectives) -> f64 {
        match self {
            Objective::Accuracy => obj.accuracy,
            Objective::Coverage => obj.coverage,
            Objective::Disparity => obj.disparity_achieved,
            Objective::Privacy => obj.privacy_achieved,
        }
    }
}

/// A calibrated strategy and what it achieved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub strategy: Strategy,
    pub objectives: AchievedObjectives,
    /// Round at which the point was calibrated; `-1` for pre-game seeding.
    pub round_tag: i64,
}

impl EvalPoint {
    pub fn seed(strategy: Strategy, objectives: AchievedObjectives) -> Self {
        Self {
            strategy,
            objectives,
            round_tag: -1,
        }
    }
}

/// Outcome of [`ResultSet::add`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    Appended,
    Replaced(usize),
}

/// Every calibrated point of a game, keyed by strategy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    points: Vec<EvalPoint>,
}

impl ResultSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a point. A point whose strategy is already present replaces the
    /// older one in place.
    pub fn add(&mut self, p: EvalPoint) -> Insertion {
        let key = p.strategy.key();
        match self.points.iter().position(|q| q.strategy.key() == key) {
            Some(i) => {
                self.points[i] = p;
                Insertion::Replaced(i)
            }
            None => {
                self.points.push(p);
                Insertion::Appended
            }
        }
    }

    pub fn points(&self) -> &[EvalPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EvalPoint> {
        self.points.iter()
    }
}

impl FromIterator<EvalPoint> for ResultSet {
    fn from_iter<I: IntoIterator<Item = EvalPoint>>(iter: I) -> Self {
        let mut set = ResultSet::new();
        for p in iter {
            set.add(p);
        }
        set
    }
}

/// The objective vector used for dominance: builder error, achieved
/// disparity, achieved privacy cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Weight of accuracy against coverage in the builder's utility
    /// (`1.0` means accuracy only).
    pub accuracy_weight: f64,
    pub orientation: [Sense; 3],
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self {
            accuracy_weight: 0.7,
            orientation: [Sense::Minimize; 3],
        }
    }
}

impl ObjectiveSpec {
    pub fn builder_error(&self, obj: &AchievedObjectives) -> f64 {
        1.0 - (self.accuracy_weight * obj.accuracy + (1.0 - self.accuracy_weight) * obj.coverage)
    }

    pub fn vector(&self, obj: &AchievedObjectives) -> [f64; 3] {
        [
            self.builder_error(obj),
            obj.disparity_achieved,
            obj.privacy_achieved,
        ]
    }
}

/// How a frontier is built from a result set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierSettings {
    pub objectives: ObjectiveSpec,
    pub mode: InterpolationMode,
    pub bounds: StrategyBox,
}

impl Default for FrontierSettings {
    fn default() -> Self {
        Self {
            objectives: ObjectiveSpec::default(),
            mode: InterpolationMode::GridBilinear,
            bounds: StrategyBox::default(),
        }
    }
}

/// Pareto-efficient subset of a result set with a surface over it.
///
/// Immutable once built; adding results produces a new model.
#[derive(Debug, Clone)]
pub struct FrontierModel {
    efficient: Vec<EvalPoint>,
    settings: FrontierSettings,
    surface: Surface,
}

impl FrontierModel {
    pub(crate) fn from_efficient(
        efficient: Vec<EvalPoint>,
        settings: FrontierSettings,
    ) -> Result<Self> {
        if efficient.is_empty() {
            return Err(Error::EmptyResultSet);
        }
        let surface = Surface::build(&efficient, settings.mode, settings.bounds)?;
        Ok(Self {
            efficient,
            settings,
            surface,
        })
    }

    pub fn efficient_points(&self) -> &[EvalPoint] {
        &self.efficient
    }

    pub fn settings(&self) -> &FrontierSettings {
        &self.settings
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Interpolated objectives at `s`.
    pub fn interpolate(&self, s: Strategy) -> Result<AchievedObjectives> {
        self.surface.interpolate(s)
    }

    /// Interpolated objectives at `s` after clamping it into the box and
    /// the surface's domain.
    pub fn interpolate_clamped(&self, s: Strategy) -> Result<AchievedObjectives> {
        self.surface
            .interpolate(self.surface.clamp_to_domain(self.settings.bounds.clamp(s)))
    }

    /// Frontier after adding `p` to the source result set, where `p` did not
    /// replace an existing strategy. Equivalent to refiltering from scratch.
    pub fn with_appended(&self, p: EvalPoint) -> Result<Self> {
        let spec = &self.settings.objectives;
        let pv = spec.vector(&p.objectives);
        let senses = &spec.orientation;
        let mut keep_new = true;
        for q in &self.efficient {
            let qv = spec.vector(&q.objectives);
            if dominates(&qv, &pv, senses) || qv == pv {
                keep_new = false;
                break;
            }
        }
        let mut efficient: Vec<EvalPoint> = if keep_new {
            self.efficient
                .iter()
                .filter(|q| !dominates(&pv, &spec.vector(&q.objectives), senses))
                .copied()
                .collect()
        } else {
            self.efficient.clone()
        };
        if keep_new {
            efficient.push(p);
        }
        Self::from_efficient(efficient, self.settings)
    }

    /// Number of distinct strategy values along `axis` among efficient points.
    pub fn distinct_values(&self, axis: Axis) -> usize {
        let mut v: Vec<u64> = self
            .efficient
            .iter()
            .map(|p| (p.strategy.get(axis) + 0.0).to_bits())
            .collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Evenly spaced values from `lo` to `hi` inclusive; the endpoints are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
                }
            })
            .collect(),
    }
}
