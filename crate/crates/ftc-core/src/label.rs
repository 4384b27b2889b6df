//! Temperature-thresholded training segments.
//!
//! Peak-season segments are isolated where both the soil and the air
//! temperature sit outside a safety margin around freezing: below 271 K for
//! frozen (y=1) segments, above 275 K for thawed (y=0) segments. Days inside
//! the margin, mixed days, and runs shorter than the minimum length are
//! discarded, so shoulder seasons never enter training.

use chrono::NaiveDate;

use crate::error::{FtcError, Result};
use crate::model::INPUT_CHANNELS;
use crate::scalar::Scalar;
use crate::series::{PixelSeries, StratumKey, TempSeries};
use crate::tensor::{Mask, Tensor2};

/// Soil and air must both be below this for a frozen training day (kelvin).
pub const FROZEN_MAX_K: f64 = 271.0;
/// Soil and air must both be above this for a thawed training day (kelvin).
pub const THAWED_MIN_K: f64 = 275.0;
/// Shortest usable segment (days).
pub const MIN_SEGMENT_DAYS: usize = 7;

/// A variable-length 3-channel training segment with a binary label
/// (`frozen == true` is the normal class).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSegment<F: Scalar> {
    pub pixel_id: String,
    pub stratum: StratumKey,
    pub start_date: NaiveDate,
    /// Channels `[TB_V, TB_H, TB_V - TB_H]` in kelvin (not standardized).
    pub x: Tensor2<F>,
    pub frozen: bool,
    pub mask: Mask,
}

impl<F: Scalar> LabeledSegment<F> {
    pub fn new(
        pixel_id: impl Into<String>,
        stratum: StratumKey,
        start_date: NaiveDate,
        x: Tensor2<F>,
        frozen: bool,
    ) -> Result<Self> {
        if x.channels() != INPUT_CHANNELS {
            return Err(FtcError::contract(format!(
                "segment has {} channels, expected {}",
                x.channels(),
                INPUT_CHANNELS
            )));
        }
        if x.length() < MIN_SEGMENT_DAYS {
            return Err(FtcError::contract(format!(
                "segment length {} below minimum {}",
                x.length(),
                MIN_SEGMENT_DAYS
            )));
        }
        let tol = F::from_f64(1e-9);
        for t in 0..x.length() {
            if (x.get(0, t) - x.get(1, t) - x.get(2, t)).abs() > tol {
                return Err(FtcError::contract(format!(
                    "segment channel 3 != channel 1 - channel 2 at step {}",
                    t
                )));
            }
        }
        let mask = Mask::all_valid(x.length());
        Ok(LabeledSegment {
            pixel_id: pixel_id.into(),
            stratum,
            start_date,
            x,
            frozen,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.x.length()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DayClass {
    Frozen,
    Thawed,
    Margin,
}

fn classify(soil: f64, air: f64) -> DayClass {
    if soil < FROZEN_MAX_K && air < FROZEN_MAX_K {
        DayClass::Frozen
    } else if soil > THAWED_MIN_K && air > THAWED_MIN_K {
        DayClass::Thawed
    } else {
        DayClass::Margin
    }
}

/// Extracts maximal frozen/thawed runs of at least `min_len` days from a
/// daily TB series and its aligned temperature series. The polarization
/// difference channel is computed here.
pub fn label_segments<F: Scalar>(
    tb: &PixelSeries,
    temps: &TempSeries,
    min_len: usize,
) -> Result<Vec<LabeledSegment<F>>> {
    if min_len < MIN_SEGMENT_DAYS {
        return Err(FtcError::contract(format!(
            "min_len {} below minimum segment length {}",
            min_len, MIN_SEGMENT_DAYS
        )));
    }
    if tb.pixel_id != temps.pixel_id {
        return Err(FtcError::contract(format!(
            "TB series pixel {} does not match temperature series pixel {}",
            tb.pixel_id, temps.pixel_id
        )));
    }
    if tb.start != temps.start || tb.len() != temps.len() {
        return Err(FtcError::contract(format!(
            "misaligned dates for pixel {}: TB covers {}..{} ({} days), temperatures {}..{} ({} days)",
            tb.pixel_id,
            tb.start,
            tb.end(),
            tb.len(),
            temps.start,
            temps.date(temps.len() - 1),
            temps.len()
        )));
    }
    let stratum = tb.stratum.ok_or_else(|| {
        FtcError::contract(format!("pixel {} has no stratum assigned", tb.pixel_id))
    })?;

    let classes: Vec<DayClass> = temps
        .soil_k
        .iter()
        .zip(&temps.air_k)
        .map(|(&s, &a)| classify(s, a))
        .collect();

    let mut out = Vec::new();
    let mut run_start = 0usize;
    let mut i = 0usize;
    while i <= classes.len() {
        let boundary = i == classes.len() || classes[i] != classes[run_start];
        if boundary {
            let len = i - run_start;
            let class = classes[run_start];
            if len >= min_len && class != DayClass::Margin {
                let mut data = vec![F::zero(); INPUT_CHANNELS * len];
                for (j, t) in (run_start..i).enumerate() {
                    let v = tb.tb_v[t];
                    let h = tb.tb_h[t];
                    data[j] = F::from_f64(v);
                    data[len + j] = F::from_f64(h);
                    data[2 * len + j] = F::from_f64(v) - F::from_f64(h);
                }
                out.push(LabeledSegment::new(
                    tb.pixel_id.clone(),
                    stratum,
                    tb.date(run_start),
                    Tensor2::from_vec(INPUT_CHANNELS, len, data)?,
                    class == DayClass::Frozen,
                )?);
            }
            run_start = i;
        }
        i += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{LandCover, WaterBin};

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
    }

    fn tb_series(n: usize) -> PixelSeries {
        let mut s = PixelSeries::new(
            "p0",
            date(),
            (0..n).map(|i| 250.0 + i as f64 * 0.1).collect(),
            (0..n).map(|i| 245.0 + i as f64 * 0.1).collect(),
            vec![true; n],
        )
        .unwrap();
        s.stratum = Some(StratumKey::new(LandCover::WS, WaterBin::W00_05));
        s
    }

    fn temps(soil: Vec<f64>, air: Vec<f64>) -> TempSeries {
        TempSeries::new("p0", date(), soil, air).unwrap()
    }

    #[test]
    fn cold_run_becomes_frozen_segment() {
        let tb = tb_series(10);
        let t = temps(vec![268.0; 10], vec![269.0; 10]);
        let segs: Vec<LabeledSegment<f64>> = label_segments(&tb, &t, 7).unwrap();
        assert_eq!(segs.len(), 1);
        assert!(segs[0].frozen);
        assert_eq!(segs[0].len(), 10);
        assert_eq!(segs[0].start_date, date());
    }

    #[test]
    fn warm_run_becomes_thawed_segment() {
        let tb = tb_series(10);
        let t = temps(vec![278.0; 10], vec![280.0; 10]);
        let segs: Vec<LabeledSegment<f64>> = label_segments(&tb, &t, 7).unwrap();
        assert_eq!(segs.len(), 1);
        assert!(!segs[0].frozen);
    }

    #[test]
    fn margin_days_are_discarded() {
        let tb = tb_series(10);
        // Soil inside the +/- 2 K margin: no segment regardless of air.
        let t = temps(vec![272.0; 10], vec![270.0; 10]);
        let segs: Vec<LabeledSegment<f64>> = label_segments(&tb, &t, 7).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn short_runs_are_discarded() {
        let tb = tb_series(13);
        let mut soil = vec![268.0; 13];
        let mut air = vec![268.0; 13];
        // A 6-day cold run, one margin day, then a 6-day warm run.
        for i in 6..13 {
            soil[i] = 280.0;
            air[i] = 280.0;
        }
        soil[6] = 273.0;
        air[6] = 273.0;
        let t = temps(soil, air);
        let segs: Vec<LabeledSegment<f64>> = label_segments(&tb, &t, 7).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn misaligned_dates_error() {
        let tb = tb_series(10);
        let t = TempSeries::new(
            "p0",
            date() + chrono::Duration::days(1),
            vec![268.0; 10],
            vec![268.0; 10],
        )
        .unwrap();
        let err = label_segments::<f64>(&tb, &t, 7).unwrap_err();
        assert!(err.to_string().contains("misaligned"));
    }

    #[test]
    fn polarization_channel_identity_holds() {
        let tb = tb_series(12);
        let t = temps(vec![266.0; 12], vec![266.0; 12]);
        let segs: Vec<LabeledSegment<f64>> = label_segments(&tb, &t, 7).unwrap();
        let s = &segs[0];
        for t in 0..s.len() {
            assert_eq!(s.x.get(2, t), s.x.get(0, t) - s.x.get(1, t));
        }
    }

    #[test]
    fn boundary_values_are_margin() {
        // Exactly 271 / 275 K fall inside the margin.
        assert!(matches!(classify(271.0, 260.0), DayClass::Margin));
        assert!(matches!(classify(260.0, 271.0), DayClass::Margin));
        assert!(matches!(classify(275.0, 280.0), DayClass::Margin));
        assert!(matches!(classify(270.9, 270.9), DayClass::Frozen));
        assert!(matches!(classify(275.1, 275.1), DayClass::Thawed));
    }
}
