//! Fairness measures over prediction tables.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionRecord {
    pub predicted_class: usize,
    pub subgroup: usize,
}

/// Demographic disparity per (subgroup, class).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisparityReport {
    /// `matrix[z][k]`: rate of class `k` inside subgroup `z` minus its rate
    /// outside `z`. Signed.
    pub matrix: Vec<Vec<f64>>,
    /// Largest signed entry.
    pub max_signed: f64,
    /// Largest absolute entry.
    pub max_abs_gap: f64,
}

pub fn demographic_disparity(
    records: &[PredictionRecord],
    n_classes: usize,
    n_groups: usize,
) -> Result<DisparityReport> {
    if n_classes == 0 || n_groups == 0 {
        return Err(Error::Invalid("need at least one class and one group".into()));
    }
    let mut counts = vec![vec![0usize; n_classes]; n_groups];
    let mut group_sizes = vec![0usize; n_groups];
    let mut class_totals = vec![0usize; n_classes];
    for r in records {
        if r.predicted_class >= n_classes || r.subgroup >= n_groups {
            return Err(Error::Invalid(format!(
                "record (class {}, group {}) outside {n_classes} classes x {n_groups} groups",
                r.predicted_class, r.subgroup
            )));
        }
        counts[r.subgroup][r.predicted_class] += 1;
        group_sizes[r.subgroup] += 1;
        class_totals[r.predicted_class] += 1;
    }
    let total = records.len();
    let mut matrix = Vec::with_capacity(n_groups);
    for z in 0..n_groups {
        let inside = group_sizes[z];
        let outside = total - inside;
        if inside == 0 || outside == 0 {
            return Err(Error::EmptyGroup(z));
        }
        let row = (0..n_classes)
            .map(|k| {
                let in_rate = counts[z][k] as f64 / inside as f64;
                let out_rate = (class_totals[k] - counts[z][k]) as f64 / outside as f64;
                in_rate - out_rate
            })
            .collect();
        matrix.push(row);
    }
    let entries = || matrix.iter().flatten().copied();
    let max_signed = entries().fold(f64::NEG_INFINITY, f64::max);
    let max_abs_gap = entries().map(f64::abs).fold(0.0, f64::max);
    Ok(DisparityReport {
        matrix,
        max_signed,
        max_abs_gap,
    })
}

/// γ-demographic parity: every (signed) entry is at most `gamma`.
pub fn gamma_dem_parity_check(matrix: &[Vec<f64>], gamma: f64) -> bool {
    matrix.iter().flatten().all(|&v| v <= gamma)
}

/// Per-group accuracy of a baseline and a private model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisparateImpactInput {
    pub baseline: BTreeMap<String, f64>,
    pub private: BTreeMap<String, f64>,
}

/// `|(base_a - priv_a) - (base_b - priv_b)|`.
pub fn disparate_impact_gap(input: &DisparateImpactInput, group_a: &str, group_b: &str) -> Result<f64> {
    let drop = |g: &str| -> Result<f64> {
        let base = input.baseline.get(g).ok_or_else(|| Error::MissingGroup(g.to_string()))?;
        let private = input.private.get(g).ok_or_else(|| Error::MissingGroup(g.to_string()))?;
        Ok(base - private)
    };
    Ok((drop(group_a)? - drop(group_b)?).abs())
}

/// Reads a `predicted_class,subgroup` table.
pub fn read_predictions_csv<R: Read>(input: R) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(["predicted_class", "subgroup"]) {
        return Err(Error::Parse(
            "prediction CSV header must be `predicted_class,subgroup`".into(),
        ));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("row {}: expected nonnegative integers", line + 2)))
        };
        out.push(PredictionRecord {
            predicted_class: field(0)?,
            subgroup: field(1)?,
        });
    }
    Ok(out)
}

pub fn parse_predictions_csv(text: &str) -> Result<Vec<PredictionRecord>> {
    read_predictions_csv(text.as_bytes())
}
