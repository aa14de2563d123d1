use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{FrontierModel, FrontierSettings, ResultSet};
use crate::error::{Error, Result};

/// Direction of optimization for one objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Value oriented so that smaller is better.
    fn orient(self, v: f64) -> f64 {
        match self {
            Sense::Minimize => v,
            Sense::Maximize => -v,
        }
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64], senses: &[Sense]) -> bool {
    let mut strict = false;
    for ((&x, &y), &sense) in a.iter().zip(b).zip(senses) {
        let (x, y) = (sense.orient(x), sense.orient(y));
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of the non-dominated vectors, in input order.
///
/// Among vectors equal on every objective only the first is kept. Sorting
/// lexicographically means a dominator always precedes what it dominates, so
/// each candidate only needs checking against the archive kept so far.
pub fn non_dominated<V: AsRef<[f64]>>(vectors: &[V], senses: &[Sense]) -> Vec<usize> {
    let oriented: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            v.as_ref()
                .iter()
                .zip(senses)
                .map(|(&x, &s)| s.orient(x))
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&i, &j| {
        oriented[i]
            .iter()
            .zip(&oriented[j])
            .map(|(a, b)| a.partial_cmp(b).unwrap_or(Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });

    let minimize = vec![Sense::Minimize; senses.len()];
    let mut archive: Vec<usize> = Vec::new();
    for i in order {
        let beaten = archive.iter().any(|&k| {
            oriented[k] == oriented[i] || dominates(&oriented[k], &oriented[i], &minimize)
        });
        if !beaten {
            archive.push(i);
        }
    }
    archive.sort_unstable();
    archive
}

/// Builds the frontier model of `results`.
pub fn pareto_filter(results: &ResultSet, settings: &FrontierSettings) -> Result<FrontierModel> {
    if results.is_empty() {
        return Err(Error::EmptyResultSet);
    }
    for p in results.iter() {
        p.objectives.validate()?;
    }
    let spec = &settings.objectives;
    let vectors: Vec<[f64; 3]> = results.iter().map(|p| spec.vector(&p.objectives)).collect();
    let efficient = non_dominated(&vectors, &spec.orientation)
        .into_iter()
        .map(|i| results.points()[i])
        .collect();
    FrontierModel::from_efficient(efficient, *settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN2: [Sense; 2] = [Sense::Minimize; 2];

    #[test]
    fn dominance_by_inspection() {
        let pts = [[1.0, 1.0], [2.0, 2.0]];
        assert_eq!(non_dominated(&pts, &MIN2), vec![0]);
    }

    #[test]
    fn incomparable_pair_survives() {
        let pts = [[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(non_dominated(&pts, &MIN2), vec![0, 1]);
    }

    #[test]
    fn ties_keep_earliest() {
        let pts = [[3.0, 3.0], [1.0, 2.0], [1.0, 2.0], [2.0, 1.0]];
        assert_eq!(non_dominated(&pts, &MIN2), vec![1, 3]);
    }

    #[test]
    fn maximize_flips_direction() {
        let pts = [[1.0, 1.0], [2.0, 2.0]];
        assert_eq!(
            non_dominated(&pts, &[Sense::Maximize, Sense::Maximize]),
            vec![1]
        );
        assert_eq!(
            non_dominated(&pts, &[Sense::Minimize, Sense::Maximize]),
            vec![0, 1]
        );
    }

    #[test]
    fn empty_result_set_errors() {
        let err = pareto_filter(&ResultSet::new(), &FrontierSettings::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyResultSet));
    }
}
