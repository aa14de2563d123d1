use std::io::{Read, Write};

use super::{AchievedObjectives, EvalPoint, ResultSet, Strategy};
use crate::error::{Error, Result};

pub const FRONTIER_HEADER: [&str; 7] = [
    "gamma", "epsilon", "acc", "cov", "gamma_ach", "eps_ach", "round_tag",
];

/// Writes points in the frontier CSV schema.
pub fn write_frontier_csv<W: Write>(points: &[EvalPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONTIER_HEADER)?;
    for p in points {
        let o = &p.objectives;
        w.write_record([
            p.strategy.fairness_param.to_string(),
            p.strategy.privacy_param.to_string(),
            o.accuracy.to_string(),
            o.coverage.to_string(),
            o.disparity_achieved.to_string(),
            o.privacy_achieved.to_string(),
            p.round_tag.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frontier CSV. The header must match the schema exactly.
pub fn read_frontier_csv<R: Read>(input: R) -> Result<ResultSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(FRONTIER_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "frontier CSV header must be `{}`, got `{}`",
            FRONTIER_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut set = ResultSet::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        if rec.len() != FRONTIER_HEADER.len() {
            return Err(Error::Parse(format!("row {row}: expected 7 fields, got {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = rec[i].parse().map_err(|_| {
                Error::Parse(format!("row {row}: `{}` is not a number in column {}", &rec[i], FRONTIER_HEADER[i]))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {row}: non-finite {}", FRONTIER_HEADER[i])));
            }
            Ok(v)
        };
        let round_tag: i64 = rec[6]
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: round_tag `{}` is not an integer", &rec[6])))?;
        if round_tag < -1 {
            return Err(Error::Parse(format!("row {row}: round_tag must be >= -1")));
        }
        let objectives = AchievedObjectives {
            accuracy: num(2)?,
            coverage: num(3)?,
            disparity_achieved: num(4)?,
            privacy_achieved: num(5)?,
        };
        objectives
            .validate()
            .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        set.add(EvalPoint {
            strategy: Strategy::new(num(0)?, num(1)?),
            objectives,
            round_tag,
        });
    }
    Ok(set)
}

pub fn parse_frontier_csv(text: &str) -> Result<ResultSet> {
    read_frontier_csv(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let pts = vec![
            EvalPoint::seed(
                Strategy::new(0.1, 3.0),
                AchievedObjectives {
                    accuracy: 0.1 + 0.2,
                    coverage: 1.0 / 3.0,
                    disparity_achieved: 0.1,
                    privacy_achieved: 3.0,
                },
            ),
            EvalPoint {
                strategy: Strategy::new(0.2, 1e-7),
                objectives: AchievedObjectives {
                    accuracy: 0.0,
                    coverage: 1.0,
                    disparity_achieved: 1e-9,
                    privacy_achieved: 123.456,
                },
                round_tag: 7,
            },
        ];
        let mut buf = Vec::new();
        write_frontier_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,epsilon,acc,cov,gamma_ach,eps_ach,round_tag\n"));
        assert!(text.lines().skip(1).all(|l| !l.contains('e')), "decimal notation only");
        assert_eq!(parse_frontier_csv(&text).unwrap().points(), &pts[..]);
    }

    #[test]
    fn header_required() {
        let err = parse_frontier_csv("0.1,1,0.5,0.5,0.1,1,-1\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn rejects_bad_rows() {
        let h = "gamma,epsilon,acc,cov,gamma_ach,eps_ach,round_tag\n";
        for row in [
            "0.1,1,1.5,0.5,0.1,1,-1",
            "0.1,1,0.5,0.5,0.1,NaN,-1",
            "0.1,1,0.5,0.5,0.1,1,-2",
            "0.1,1,0.5,0.5,0.1,1",
            "x,1,0.5,0.5,0.1,1,0",
        ] {
            assert!(parse_frontier_csv(&format!("{h}{row}\n")).is_err(), "{row}");
        }
    }
}
