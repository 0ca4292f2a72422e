//! CSV tables written by runs.

use crate::error::Result;
use crate::protocols::DecayPoint;
use crate::smc::Datum;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Held-out prediction against observed frequency and, when known, truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sequence: String,
    pub length: usize,
    pub trials: u64,
    pub successes: u64,
    pub observed: f64,
    pub bme: f64,
    pub variance: f64,
    /// Exact probability under the simulated box; empty for external data.
    pub truth: Option<f64>,
    pub quadratic_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdCsvRow {
    pub sequence: String,
    pub predicted: f64,
    pub observed: f64,
    pub tvd: f64,
}

/// Exact probability next to a simulated outcome count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub set: String,
    pub sequence: String,
    pub probability: f64,
    pub trials: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub source: String,
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
}

impl SurvivalRow {
    pub fn from_points<'a>(source: &'a str, points: &'a [DecayPoint]) -> impl Iterator<Item = SurvivalRow> + 'a {
        points.iter().map(move |p| SurvivalRow {
            source: source.to_string(),
            m: p.m,
            mean: p.mean,
            variance: p.variance,
        })
    }
}

impl PredictionRow {
    pub fn new(datum: &Datum, bme: f64, variance: f64, truth: Option<f64>) -> Self {
        Self {
            sequence: datum.sequence.to_string(),
            length: datum.sequence.len(),
            trials: datum.trials,
            successes: datum.successes,
            observed: datum.frequency(),
            bme,
            variance,
            truth,
            quadratic_loss: truth.map(|t| (bme - t).powi(2)),
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Table with a header computed at run time, such as trajectories.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| crate::error::Error::Config(format!("non-numeric cell `{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::Sequence;

    #[test]
    fn typed_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let d = Datum::new(Sequence::new(["Rx", "dt", "Rx"]), 100, 31).unwrap();
        let rows = vec![
            PredictionRow::new(&d, 0.3, 1e-4, Some(0.305)),
            PredictionRow::new(&Datum::new(Sequence::empty(), 10, 10).unwrap(), 1.0, 0.0, None),
        ];
        write_rows(&path, &rows).unwrap();
        let back: Vec<PredictionRow> = read_rows(&path).unwrap();
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sequence,length,trials,successes,observed,bme,variance,truth,quadratic_loss\n"));
        assert!(text.contains("\"Rx,dt,Rx\""));
    }

    #[test]
    fn numeric_tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let header = vec!["t".to_string(), "x".to_string()];
        let rows = vec![vec![0.0, 1.0 / 3.0], vec![0.5, -2.5e-17]];
        write_table(&path, &header, rows.clone()).unwrap();
        assert_eq!(read_table(&path).unwrap(), (header, rows));
    }
}
