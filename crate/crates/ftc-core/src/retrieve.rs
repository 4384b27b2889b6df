//! Daily frozen-probability retrieval with a centered sliding window.

use chrono::NaiveDate;

use crate::error::{FtcError, Result};
use crate::model::{forward, freeze_probability, Mode, ModelParams, INPUT_CHANNELS};
use crate::scalar::Scalar;
use crate::series::PixelSeries;
use crate::tensor::Tensor2;
use crate::train::pad_segment;

/// Default retrieval window: wider than the one-week filters, shorter than a
/// season.
pub const DEFAULT_WINDOW_DAYS: usize = 21;

/// Daily frozen-state probabilities for one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalSeries {
    pub pixel_id: String,
    pub start: NaiveDate,
    pub p_frozen: Vec<f64>,
    pub window: usize,
}

impl RetrievalSeries {
    pub fn len(&self) -> usize {
        self.p_frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_frozen.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + chrono::Duration::days(i as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        if off >= 0 && (off as usize) < self.len() {
            Some(off as usize)
        } else {
            None
        }
    }
}

/// Retrieves `p(frozen)` for every day of a daily-interpolated series by
/// reconstructing the window centered on that day (truncated at the series
/// ends) and mapping the masked reconstruction error through `exp(-L)`.
pub fn retrieve<F: Scalar>(
    params: &ModelParams<F>,
    series: &PixelSeries,
    window: usize,
) -> Result<RetrievalSeries> {
    if window < 7 {
        return Err(FtcError::contract(format!(
            "retrieval window {} shorter than 7 days",
            window
        )));
    }
    if window % 2 == 0 {
        return Err(FtcError::contract(format!(
            "retrieval window {} must be an odd day count",
            window
        )));
    }
    let n = series.len();
    if n < 7 {
        return Err(FtcError::contract(format!(
            "series for pixel {} has {} days, need at least 7",
            series.pixel_id, n
        )));
    }

    let half = window / 2;
    let mut p_frozen = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(n);
        let len = hi - lo;
        let mut data = vec![F::zero(); INPUT_CHANNELS * len];
        for (j, i) in (lo..hi).enumerate() {
            let v = F::from_f64(series.tb_v[i]);
            let h = F::from_f64(series.tb_h[i]);
            data[j] = v;
            data[len + j] = h;
            data[2 * len + j] = v - h;
        }
        let x = Tensor2::from_vec(INPUT_CHANNELS, len, data)?;
        let z = params.stats.standardize(&x);
        let (z, mask) = pad_segment(&z, &crate::tensor::Mask::all_valid(len))?;
        let (_, loss) = forward(params, &z, &mask, Mode::Infer, None)?;
        p_frozen.push(freeze_probability(loss)?.to_f64_lossy());
    }
    Ok(RetrievalSeries {
        pixel_id: series.pixel_id.clone(),
        start: series.start,
        p_frozen,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{LandCover, StratumKey, WaterBin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series(n: usize, start: NaiveDate) -> PixelSeries {
        PixelSeries::new(
            "p0",
            start,
            (0..n).map(|i| 250.0 + (i as f64 * 0.3).sin()).collect(),
            (0..n).map(|i| 244.0 + (i as f64 * 0.3).cos()).collect(),
            vec![true; n],
        )
        .unwrap()
    }

    fn model() -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = ModelParams::init(
            StratumKey::new(LandCover::WS, WaterBin::W00_05),
            0.1,
            &mut rng,
        );
        p.stats.mean = vec![250.0, 244.0, 6.0];
        p.stats.std = vec![1.0, 1.0, 1.0];
        p
    }

    #[test]
    fn output_covers_every_input_date() {
        let m = model();
        let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        for n in [30usize, 365] {
            let r = retrieve(&m, &series(n, start), 21).unwrap();
            assert_eq!(r.len(), n);
            assert!(r.p_frozen.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn window_validation() {
        let m = model();
        let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        let s = series(30, start);
        assert!(retrieve(&m, &s, 5).is_err());
        assert!(retrieve(&m, &s, 20).is_err());
        let short = series(6, start);
        assert!(retrieve(&m, &short, 21).is_err());
    }

    #[test]
    fn retrieval_is_translation_consistent() {
        let m = model();
        let a = series(60, NaiveDate::from_ymd_opt(2018, 1, 1).unwrap());
        let mut b = a.clone();
        b.start = NaiveDate::from_ymd_opt(2019, 6, 15).unwrap();
        let ra = retrieve(&m, &a, 21).unwrap();
        let rb = retrieve(&m, &b, 21).unwrap();
        assert_eq!(ra.p_frozen, rb.p_frozen);
        assert_eq!(rb.start, b.start);
    }
}
