//! Per-stratum training of the encoder/decoder under the contrastive
//! objective: deterministic mini-batch Adam over variable-length segments
//! padded and bucketed by length.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FtcError, Result};
use crate::label::LabeledSegment;
use crate::model::{
    backward, contrastive_loss, contrastive_loss_grad, forward_cached, ChannelStats, Mode,
    ModelGrads, ModelParams, INPUT_CHANNELS, LENGTH_MULTIPLE,
};
use crate::scalar::Scalar;
use crate::tensor::{Mask, Tensor2};

/// Whether inputs are standardized with per-stratum statistics (the normal
/// mode) or passed through unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Stratum,
    Identity,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Clamp applied to the reconstruction error inside the thawed-branch
    /// loss, capping it near `-ln(clamp)`.
    pub anomaly_loss_clamp: f64,
    pub norm_mode: NormMode,
    pub dropout_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 16,
            rng_seed: 0,
            anomaly_loss_clamp: 1e-6,
            norm_mode: NormMode::Stratum,
            dropout_rate: 0.10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(FtcError::contract("learning_rate must be > 0"));
        }
        if !(self.anomaly_loss_clamp > 0.0) {
            return Err(FtcError::contract("anomaly_loss_clamp must be > 0"));
        }
        if self.epochs == 0 {
            return Err(FtcError::contract("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(FtcError::contract("batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(FtcError::contract("dropout_rate must be in [0, 1)"));
        }
        Ok(())
    }

    /// Stable digest of the hyperparameters, stored in checkpoints.
    pub fn digest(&self) -> String {
        // FNV-1a over the canonical rendering; collision resistance is not a
        // goal, change detection is.
        let repr = format!(
            "lr={};epochs={};batch={};seed={};clamp={};norm={:?};dropout={}",
            self.learning_rate,
            self.epochs,
            self.batch_size,
            self.rng_seed,
            self.anomaly_loss_clamp,
            self.norm_mode,
            self.dropout_rate
        );
        let mut h: u64 = 0xcbf29ce484222325;
        for b in repr.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{:016x}", h)
    }
}

/// Mean losses of one epoch, split by label class.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// Mean contrastive objective over all segments.
    pub objective: f64,
    /// Mean reconstruction error over frozen (y=1) segments.
    pub recon_frozen: f64,
    /// Mean reconstruction error over thawed (y=0) segments.
    pub recon_thawed: f64,
}

/// Per-epoch statistics of one training run.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

struct Adam<F: Scalar> {
    m: Vec<(Vec<F>, Vec<F>)>,
    v: Vec<(Vec<F>, Vec<F>)>,
    step: u64,
}

impl<F: Scalar> Adam<F> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ModelParams<F>) -> Self {
        let zeros = ModelGrads::zeros_like(params);
        Adam {
            m: zeros.layers.clone(),
            v: zeros.layers,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut ModelParams<F>, grads: &ModelGrads<F>, lr: f64) {
        self.step += 1;
        let b1 = F::from_f64(Self::BETA1);
        let b2 = F::from_f64(Self::BETA2);
        let one = F::one();
        let eps = F::from_f64(Self::EPS);
        let bc1 = F::from_f64(1.0 - Self::BETA1.powi(self.step as i32));
        let bc2 = F::from_f64(1.0 - Self::BETA2.powi(self.step as i32));
        let lr = F::from_f64(lr);

        let mut layer_idx = 0usize;
        let n_enc = params.encoder.len();
        for li in 0..params.encoder.len() + params.decoder.len() {
            let layer = if li < n_enc {
                &mut params.encoder[li]
            } else {
                &mut params.decoder[li - n_enc]
            };
            let (gw, gb) = &grads.layers[layer_idx];
            let (mw, mb) = &mut self.m[layer_idx];
            let (vw, vb) = &mut self.v[layer_idx];
            for i in 0..layer.weights.len() {
                mw[i] = b1 * mw[i] + (one - b1) * gw[i];
                vw[i] = b2 * vw[i] + (one - b2) * gw[i] * gw[i];
                let mhat = mw[i] / bc1;
                let vhat = vw[i] / bc2;
                layer.weights[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
            for i in 0..layer.bias.len() {
                mb[i] = b1 * mb[i] + (one - b1) * gb[i];
                vb[i] = b2 * vb[i] + (one - b2) * gb[i] * gb[i];
                let mhat = mb[i] / bc1;
                let vhat = vb[i] / bc2;
                layer.bias[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
            layer_idx += 1;
        }
    }
}

/// Pads a segment tensor to the next multiple of the model's length step and
/// extends its mask over the padding.
pub fn pad_segment<F: Scalar>(x: &Tensor2<F>, mask: &Mask) -> Result<(Tensor2<F>, Mask)> {
    let padded_len = x.length().div_ceil(LENGTH_MULTIPLE) * LENGTH_MULTIPLE;
    let padded = x.zero_padded(padded_len)?;
    let mut flags = vec![false; padded_len];
    flags[..mask.len()].copy_from_slice(mask.flags());
    Ok((padded, Mask::new(flags)?))
}

struct Prepared<F: Scalar> {
    x: Tensor2<F>,
    mask: Mask,
    frozen: bool,
}

/// Trains one stratum's model on its labeled segments.
///
/// Requires both label classes: with a single class the thawed branch of the
/// objective degenerates and the optimum is the identity map. Returns the
/// final parameters and per-epoch mean losses per class. Fully deterministic
/// for a fixed config.
pub fn train<F: Scalar>(
    segments: &[LabeledSegment<F>],
    cfg: &TrainConfig,
) -> Result<(ModelParams<F>, TrainLog)> {
    cfg.validate()?;
    if segments.is_empty() {
        return Err(FtcError::contract("training set is empty"));
    }
    let stratum = segments[0].stratum;
    if segments.iter().any(|s| s.stratum != stratum) {
        return Err(FtcError::contract(
            "training set mixes segments from different strata",
        ));
    }
    let n_frozen = segments.iter().filter(|s| s.frozen).count();
    if n_frozen == 0 || n_frozen == segments.len() {
        return Err(FtcError::contract(format!(
            "training set for stratum {} has a single label class ({} frozen / {} thawed); \
             the contrastive objective degenerates without both classes",
            stratum,
            n_frozen,
            segments.len() - n_frozen
        )));
    }

    let stats = match cfg.norm_mode {
        NormMode::Stratum => ChannelStats::from_segments(
            segments.iter().map(|s| (&s.x, &s.mask)),
            INPUT_CHANNELS,
        )?,
        NormMode::Identity => ChannelStats::identity(INPUT_CHANNELS),
    };

    let prepared: Vec<Prepared<F>> = segments
        .iter()
        .map(|s| {
            let (x, mask) = pad_segment(&stats.standardize(&s.x), &s.mask)?;
            Ok(Prepared {
                x,
                mask,
                frozen: s.frozen,
            })
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut params = ModelParams::init(stratum, cfg.dropout_rate, &mut rng);
    params.stats = stats;
    params.config_hash = cfg.digest();

    let clamp = F::from_f64(cfg.anomaly_loss_clamp);
    let mut adam = Adam::new(&params);
    let mut log = TrainLog::default();

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);

        // Length buckets preserve the shuffled order within each bucket;
        // batch order is shuffled again so classes interleave.
        let mut buckets: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &i in &order {
            buckets.entry(prepared[i].x.length()).or_default().push(i);
        }
        let mut batches: Vec<Vec<usize>> = Vec::new();
        for bucket in buckets.into_values() {
            for chunk in bucket.chunks(cfg.batch_size) {
                batches.push(chunk.to_vec());
            }
        }
        batches.shuffle(&mut rng);

        let mut sum_objective = 0.0f64;
        let mut sum_frozen = (0.0f64, 0usize);
        let mut sum_thawed = (0.0f64, 0usize);

        for batch in &batches {
            let mut grads = ModelGrads::zeros_like(&params);
            for &i in batch {
                let sample = &prepared[i];
                let cache = forward_cached(
                    &params,
                    &sample.x,
                    &sample.mask,
                    Mode::Train,
                    Some(&mut rng),
                )?;
                let objective = contrastive_loss(cache.loss, sample.frozen, clamp)?;
                let scale = contrastive_loss_grad(cache.loss, sample.frozen, clamp);
                let g = backward(&params, &sample.x, &sample.mask, &cache, scale)?;
                grads.accumulate(&g);

                sum_objective += objective.to_f64_lossy();
                let recon = cache.loss.to_f64_lossy();
                if sample.frozen {
                    sum_frozen.0 += recon;
                    sum_frozen.1 += 1;
                } else {
                    sum_thawed.0 += recon;
                    sum_thawed.1 += 1;
                }
            }
            grads.scale(F::from_f64(1.0 / batch.len() as f64));
            adam.update(&mut params, &grads, cfg.learning_rate);
        }

        log.epochs.push(EpochStats {
            objective: sum_objective / prepared.len() as f64,
            recon_frozen: sum_frozen.0 / sum_frozen.1.max(1) as f64,
            recon_thawed: sum_thawed.0 / sum_thawed.1.max(1) as f64,
        });
    }

    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::LabeledSegment;
    use crate::series::{LandCover, StratumKey, WaterBin};
    use chrono::NaiveDate;
    use rand::Rng;

    fn stratum() -> StratumKey {
        StratumKey::new(LandCover::G, WaterBin::W00_05)
    }

    fn segment(seed: u64, len: usize, frozen: bool) -> LabeledSegment<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = if frozen { 260.0 } else { 225.0 };
        let gap = if frozen { 4.0 } else { 12.0 };
        let mut data = vec![0.0; 3 * len];
        for t in 0..len {
            let v = base + rng.gen_range(-1.5..1.5);
            let h = v - gap + rng.gen_range(-0.5..0.5);
            data[t] = v;
            data[len + t] = h;
            data[2 * len + t] = v - h;
        }
        LabeledSegment::new(
            "px",
            stratum(),
            NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
            Tensor2::from_vec(3, len, data).unwrap(),
            frozen,
        )
        .unwrap()
    }

    fn tiny_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            rng_seed: 7,
            ..TrainConfig::default()
        }
    }

    fn tiny_set() -> Vec<LabeledSegment<f64>> {
        (0..6)
            .map(|i| segment(100 + i, 10 + (i as usize % 3) * 9, i % 2 == 0))
            .collect()
    }

    #[test]
    fn rejects_single_class_sets() {
        let segs: Vec<_> = (0..4).map(|i| segment(i, 12, true)).collect();
        let err = train(&segs, &tiny_config(1)).unwrap_err();
        assert!(err.to_string().contains("single label class"));
    }

    #[test]
    fn rejects_mixed_strata() {
        let mut segs = tiny_set();
        segs[0].stratum = StratumKey::new(LandCover::OS, WaterBin::W05_15);
        assert!(train(&segs, &tiny_config(1)).is_err());
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let segs = tiny_set();
        let cfg = tiny_config(3);
        let (a, _) = train(&segs, &cfg).unwrap();
        let (b, _) = train(&segs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_decreases() {
        let segs = tiny_set();
        let (_, log) = train(&segs, &tiny_config(40)).unwrap();
        let first = log.epochs.first().unwrap().objective;
        let last = log.epochs.last().unwrap().objective;
        assert!(
            last < 0.5 * first,
            "objective {} -> {} did not halve",
            first,
            last
        );
    }

    #[test]
    fn padding_extends_mask() {
        let x = Tensor2::<f64>::zeros(3, 10);
        let (p, m) = pad_segment(&x, &Mask::all_valid(10)).unwrap();
        assert_eq!(p.length(), 16);
        assert_eq!(m.valid_count(), 10);
        assert!(!m.is_valid(10));
    }
}
