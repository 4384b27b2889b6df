//! Daily linear interpolation of irregular TB observations, per grid cell.

use chrono::NaiveDate;

use crate::error::{FtcError, Result};
use crate::series::PixelSeries;

/// Gaps wider than this split the record instead of being interpolated
/// (satellite revisit is 1-2 days plus one day of slack).
pub const DEFAULT_MAX_GAP_DAYS: i64 = 3;

/// One dated dual-polarization observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawObservation {
    pub date: NaiveDate,
    pub tb_v: f64,
    pub tb_h: f64,
}

/// A pixel's raw (possibly gappy) observation record, dates strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTbSeries {
    pub pixel_id: String,
    pub observations: Vec<RawObservation>,
}

impl RawTbSeries {
    pub fn new(pixel_id: impl Into<String>, observations: Vec<RawObservation>) -> Result<Self> {
        let pixel_id = pixel_id.into();
        for w in observations.windows(2) {
            if w[1].date <= w[0].date {
                return Err(FtcError::contract(format!(
                    "observations for pixel {} not strictly increasing at {}",
                    pixel_id, w[1].date
                )));
            }
        }
        Ok(RawTbSeries {
            pixel_id,
            observations,
        })
    }
}

/// Linearly interpolates a raw record to daily resolution. Observed days are
/// preserved exactly; gaps wider than `max_gap_days` split the record into
/// separate series (no values are fabricated across them).
pub fn interpolate_daily(raw: &RawTbSeries, max_gap_days: i64) -> Result<Vec<PixelSeries>> {
    if raw.observations.len() < 2 {
        return Err(FtcError::contract(format!(
            "pixel {} has {} observation(s); need at least 2 to interpolate",
            raw.pixel_id,
            raw.observations.len()
        )));
    }
    if max_gap_days < 1 {
        return Err(FtcError::contract("max_gap_days must be >= 1"));
    }

    let mut chunks: Vec<Vec<RawObservation>> = vec![vec![raw.observations[0]]];
    for pair in raw.observations.windows(2) {
        let gap = (pair[1].date - pair[0].date).num_days();
        if gap > max_gap_days {
            chunks.push(Vec::new());
        }
        chunks.last_mut().expect("chunk exists").push(pair[1]);
    }

    let mut out = Vec::new();
    for chunk in chunks {
        if chunk.len() < 2 {
            // A stranded single observation supports no daily series.
            continue;
        }
        let start = chunk[0].date;
        let n = (chunk.last().expect("nonempty").date - start).num_days() as usize + 1;
        let mut tb_v = vec![0.0; n];
        let mut tb_h = vec![0.0; n];
        let mut observed = vec![false; n];
        for obs in &chunk {
            let i = (obs.date - start).num_days() as usize;
            tb_v[i] = obs.tb_v;
            tb_h[i] = obs.tb_h;
            observed[i] = true;
        }
        for pair in chunk.windows(2) {
            let i0 = (pair[0].date - start).num_days() as usize;
            let i1 = (pair[1].date - start).num_days() as usize;
            for i in i0 + 1..i1 {
                let f = (i - i0) as f64 / (i1 - i0) as f64;
                tb_v[i] = pair[0].tb_v + f * (pair[1].tb_v - pair[0].tb_v);
                tb_h[i] = pair[0].tb_h + f * (pair[1].tb_h - pair[0].tb_h);
            }
        }
        out.push(PixelSeries::new(
            raw.pixel_id.clone(),
            start,
            tb_v,
            tb_h,
            observed,
        )?);
    }
    Ok(out)
}
