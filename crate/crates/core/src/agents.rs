//! Agent losses, penalties, and one-step strategy updates.
//!
//! Regulators are charged hinge losses `max(0, achieved - target)` and turn
//! them into penalties `C * loss`. The builder trades its utility error
//! against those penalties, scaled into its error space by `lambda_*`.
//!
//! A regulator descends its penalty along its own coordinate, so it stays
//! put while compliant and never moves under a zero penalty scalar. The
//! builder descends its full penalized loss in box-normalized coordinates.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontier::{estimate_gradient, AchievedObjectives, Axis, FrontierModel, Objective, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegulatorKind {
    Fairness,
    Privacy,
}

impl RegulatorKind {
    /// The strategy coordinate this regulator controls.
    pub fn axis(self) -> Axis {
        match self {
            RegulatorKind::Fairness => Axis::Fairness,
            RegulatorKind::Privacy => Axis::Privacy,
        }
    }

    /// The achieved objective this regulator audits.
    pub fn objective(self) -> Objective {
        match self {
            RegulatorKind::Fairness => Objective::Disparity,
            RegulatorKind::Privacy => Objective::Privacy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorConfig {
    pub kind: RegulatorKind,
    /// Maximum tolerable disparity or privacy budget.
    pub target: f64,
    pub penalty_scalar: f64,
    pub step_size: f64,
    pub decay: f64,
}

impl RegulatorConfig {
    /// Hinge loss of `obj` against this regulator's target.
    pub fn loss(&self, obj: &AchievedObjectives) -> f64 {
        let achieved = self.kind.objective().of(obj);
        match self.kind {
            RegulatorKind::Fairness => fairness_loss(achieved, self.target),
            RegulatorKind::Privacy => privacy_loss(achieved, self.target),
        }
    }

    pub fn penalty(&self, obj: &AchievedObjectives) -> f64 {
        penalty(self.penalty_scalar, self.loss(obj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    /// Weighted accuracy and coverage of a reject-option classifier.
    Fairpate,
    /// Accuracy only.
    Dpsgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderConfig {
    pub lambda_fair: f64,
    pub lambda_priv: f64,
    /// Accuracy weight against coverage, in `[0, 1]`.
    pub lambda_b: f64,
    pub step_size: f64,
    pub decay: f64,
    pub loss_variant: LossVariant,
}

impl BuilderConfig {
    pub fn accuracy_weight(&self) -> f64 {
        match self.loss_variant {
            LossVariant::Fairpate => self.lambda_b,
            LossVariant::Dpsgd => 1.0,
        }
    }
}

pub fn fairness_loss(disparity_achieved: f64, gamma_target: f64) -> f64 {
    (disparity_achieved - gamma_target).max(0.0)
}

pub fn privacy_loss(privacy_achieved: f64, epsilon_target: f64) -> f64 {
    (privacy_achieved - epsilon_target).max(0.0)
}

pub fn penalty(scalar: f64, hinge_loss: f64) -> f64 {
    scalar * hinge_loss
}

/// Negated builder utility: `-(λ_b·acc + (1-λ_b)·cov)`, or `-acc` for DP-SGD.
pub fn builder_utility_error(obj: &AchievedObjectives, cfg: &BuilderConfig) -> f64 {
    match cfg.loss_variant {
        LossVariant::Fairpate => -(cfg.lambda_b * obj.accuracy + (1.0 - cfg.lambda_b) * obj.coverage),
        LossVariant::Dpsgd => -obj.accuracy,
    }
}

/// Utility error on the `[0, 1]` scale, `1 + builder_utility_error`.
pub fn builder_error(obj: &AchievedObjectives, cfg: &BuilderConfig) -> f64 {
    1.0 + builder_utility_error(obj, cfg)
}

pub fn builder_total_loss(
    obj: &AchievedObjectives,
    cfg: &BuilderConfig,
    fair: &RegulatorConfig,
    privacy: &RegulatorConfig,
) -> f64 {
    builder_error(obj, cfg)
        + cfg.lambda_priv * privacy.penalty(obj)
        + cfg.lambda_fair * fair.penalty(obj)
}

/// Moves the regulator's own coordinate down the gradient of its penalty
/// `C * hinge` on the frontier. A degenerate axis yields no move.
pub fn regulator_step(
    frontier: &FrontierModel,
    s: Strategy,
    reg: &RegulatorConfig,
    step_size: f64,
    h: f64,
) -> Result<Strategy> {
    let axis = reg.kind.axis();
    let grad = estimate_gradient(frontier, s, |o| reg.penalty(o), h)?;
    let next = s.with(axis, s.get(axis) - step_size * grad.along(axis));
    Ok(frontier.settings().bounds.clamp(next))
}

/// Gradient step on the builder's penalized loss composed with the
/// frontier interpolation, taken in box-normalized coordinates and
/// projected back into the box.
pub fn builder_step(
    frontier: &FrontierModel,
    s: Strategy,
    builder: &BuilderConfig,
    fair: &RegulatorConfig,
    privacy: &RegulatorConfig,
    step_size: f64,
    h: f64,
) -> Result<Strategy> {
    let bounds = frontier.settings().bounds;
    let grad = estimate_gradient(frontier, s, |o| builder_total_loss(o, builder, fair, privacy), h)?;
    let mut next = s;
    for axis in Axis::BOTH {
        let w = bounds.width(axis);
        next = next.with(axis, s.get(axis) - step_size * w * w * grad.along(axis));
    }
    Ok(bounds.clamp(next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(acc: f64, cov: f64, d: f64, e: f64) -> AchievedObjectives {
        AchievedObjectives {
            accuracy: acc,
            coverage: cov,
            disparity_achieved: d,
            privacy_achieved: e,
        }
    }

    fn builder(variant: LossVariant) -> BuilderConfig {
        BuilderConfig {
            lambda_fair: 0.3,
            lambda_priv: 0.01,
            lambda_b: 0.7,
            step_size: 1.0,
            decay: 0.67,
            loss_variant: variant,
        }
    }

    fn reg(kind: RegulatorKind, target: f64, c: f64) -> RegulatorConfig {
        RegulatorConfig {
            kind,
            target,
            penalty_scalar: c,
            step_size: 0.1,
            decay: 0.67,
        }
    }

    #[test]
    fn hinges() {
        assert!((fairness_loss(0.15, 0.10) - 0.05).abs() < 1e-12);
        assert_eq!(fairness_loss(0.05, 0.10), 0.0);
        assert_eq!(fairness_loss(0.1, 0.1), 0.0);
        assert_eq!(privacy_loss(8.0, 5.0), 3.0);
        assert_eq!(privacy_loss(4.0, 5.0), 0.0);
        assert_eq!(privacy_loss(5.0, 5.0), 0.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(penalty(1.5, 2.0), 3.0);
        assert_eq!(penalty(0.0, 17.0), 0.0);
        assert!((penalty(3.0, 0.04) - 0.12).abs() < 1e-12);
    }

    #[test]
    fn utility_variants() {
        let b = builder(LossVariant::Fairpate);
        assert!((builder_utility_error(&obj(0.9, 0.8, 0.0, 1.0), &b) + 0.87).abs() < 1e-12);
        let d = builder(LossVariant::Dpsgd);
        assert_eq!(builder_utility_error(&obj(0.95, 0.1, 0.0, 1.0), &d), -0.95);
        let full = BuilderConfig { lambda_b: 1.0, ..b };
        assert_eq!(builder_utility_error(&obj(0.95, 0.1, 0.0, 1.0), &full), -0.95);
    }

    #[test]
    fn total_loss_hand_value() {
        // err 0.2, ℓ_priv 2.0 at C_priv 1.5, ℓ_fair 0.04 at C_fair 3.0
        let b = builder(LossVariant::Dpsgd);
        let o = obj(0.8, 0.0, 0.14, 7.0);
        let f = reg(RegulatorKind::Fairness, 0.10, 3.0);
        let p = reg(RegulatorKind::Privacy, 5.0, 1.5);
        assert!((builder_total_loss(&o, &b, &f, &p) - 0.266).abs() < 1e-12);

        let compliant = obj(0.8, 0.0, 0.05, 4.0);
        assert_eq!(builder_total_loss(&compliant, &b, &f, &p), builder_error(&compliant, &b));

        let p2 = RegulatorConfig { penalty_scalar: 3.0, ..p };
        assert!(builder_total_loss(&o, &b, &f, &p2) > builder_total_loss(&o, &b, &f, &p));
    }
}
