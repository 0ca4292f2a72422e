//! Per-sequence total variation distance against observed frequencies.

use crate::error::Result;
use crate::gateset::Sequence;
use crate::smc::{predict, Datum, ParticleCloud};
use serde::{Deserialize, Serialize};

/// `|p_reconstruction - p_data|` for a two-outcome measurement.
pub fn tvd(p_reconstruction: f64, p_data: f64) -> f64 {
    (p_reconstruction - p_data).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdRow {
    pub sequence: Sequence,
    pub predicted: f64,
    pub observed: f64,
    pub tvd: f64,
}

/// One row per datum using any probability model.
pub fn tvd_rows_with<F>(data: &[Datum], mut model: F) -> Result<Vec<TvdRow>>
where
    F: FnMut(&Sequence) -> Result<f64>,
{
    data.iter()
        .map(|d| {
            let predicted = model(&d.sequence)?;
            let observed = d.frequency();
            Ok(TvdRow {
                sequence: d.sequence.clone(),
                predicted,
                observed,
                tvd: tvd(predicted, observed),
            })
        })
        .collect()
}

/// Rows scored with the cloud's Bayes mean prediction.
pub fn tvd_rows(cloud: &ParticleCloud, data: &[Datum]) -> Result<Vec<TvdRow>> {
    tvd_rows_with(data, |s| Ok(predict(cloud, s)?.bme))
}

pub fn tvd_total(cloud: &ParticleCloud, data: &[Datum]) -> Result<f64> {
    Ok(tvd_rows(cloud, data)?.iter().map(|r| r.tvd).sum())
}
