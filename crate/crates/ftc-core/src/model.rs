//! The convolutional encoder/decoder, its contrastive objective, and the
//! frozen-state probability it induces.
//!
//! The network reconstructs standardized 3-channel TB segments
//! (`[TB_V, TB_H, TB_V - TB_H]`). Training drives the reconstruction error
//! toward zero on frozen (normal) segments and away from zero on thawed
//! (anomalous) segments; at inference the per-element reconstruction error
//! `L` maps to a frozen probability `exp(-L)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::conv::{
    conv1d_backward, conv1d_forward, tconv1d_backward, tconv1d_forward, ConvLayer, PadMode,
};
use crate::error::{FtcError, Result};
use crate::ops::{dropout, dropout_backward, masked_mse, masked_mse_backward, relu, relu_backward};
use crate::scalar::Scalar;
use crate::series::StratumKey;
use crate::tensor::{Mask, Tensor2};

/// Input channel count: V-pol, H-pol, polarization difference.
pub const INPUT_CHANNELS: usize = 3;
/// Filter counts through the encoder; the decoder mirrors them.
pub const ENCODER_FILTERS: [usize; 3] = [32, 64, 64];
/// One-week filters.
pub const KERNEL_WIDTH: usize = 7;
/// Every stage halves the series length; three stages need input lengths
/// padded to a multiple of this.
pub const LENGTH_MULTIPLE: usize = 8;
const STRIDE: usize = 2;

/// Checkpoint/model format version.
pub const MODEL_VERSION: u32 = 1;

/// Per-channel standardization statistics of one stratum's training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats<F: Scalar> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
}

impl<F: Scalar> ChannelStats<F> {
    /// Identity statistics (mean 0, std 1).
    pub fn identity(channels: usize) -> Self {
        ChannelStats {
            mean: vec![F::zero(); channels],
            std: vec![F::one(); channels],
        }
    }

    /// Mean/stddev per channel over the valid columns of the given tensors.
    /// Standard deviations are floored at 1e-6 so constant channels map to 0.
    pub fn from_segments<'a>(
        segments: impl Iterator<Item = (&'a Tensor2<F>, &'a Mask)>,
        channels: usize,
    ) -> Result<Self>
    where
        F: 'a,
    {
        let mut count = 0usize;
        let mut sum = vec![F::zero(); channels];
        let mut sum_sq = vec![F::zero(); channels];
        for (x, mask) in segments {
            if x.channels() != channels {
                return Err(FtcError::contract(format!(
                    "segment has {} channels, expected {}",
                    x.channels(),
                    channels
                )));
            }
            for c in 0..channels {
                let row = x.row(c);
                for t in 0..x.length() {
                    if mask.is_valid(t) {
                        sum[c] += row[t];
                        sum_sq[c] += row[t] * row[t];
                    }
                }
            }
            count += mask.valid_count();
        }
        if count == 0 {
            return Err(FtcError::contract(
                "cannot compute channel statistics from zero valid samples",
            ));
        }
        let n = F::from_f64(count as f64);
        let floor = F::from_f64(1e-6);
        let mut mean = vec![F::zero(); channels];
        let mut std = vec![F::zero(); channels];
        for c in 0..channels {
            mean[c] = sum[c] / n;
            let var = (sum_sq[c] / n - mean[c] * mean[c]).max(F::zero());
            std[c] = var.sqrt().max(floor);
        }
        Ok(ChannelStats { mean, std })
    }

    /// `(x - mean) / std` per channel.
    pub fn standardize(&self, x: &Tensor2<F>) -> Tensor2<F> {
        let mut out = x.clone();
        for c in 0..x.channels() {
            let m = self.mean[c];
            let s = self.std[c];
            for v in out.row_mut(c) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    /// Inverse of [`ChannelStats::standardize`].
    pub fn destandardize(&self, x: &Tensor2<F>) -> Tensor2<F> {
        let mut out = x.clone();
        for c in 0..x.channels() {
            let m = self.mean[c];
            let s = self.std[c];
            for v in out.row_mut(c) {
                *v = *v * s + m;
            }
        }
        out
    }
}

/// All trainable parameters of one stratum's encoder/decoder, together with
/// the standardization statistics the model expects at its input.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F: Scalar> {
    pub version: u32,
    pub stratum: StratumKey,
    pub encoder: Vec<ConvLayer<F>>,
    pub decoder: Vec<ConvLayer<F>>,
    pub dropout_rate: f64,
    pub stats: ChannelStats<F>,
    /// Hash of the training configuration that produced these weights.
    pub config_hash: String,
}

impl<F: Scalar> ModelParams<F> {
    /// Architecture skeleton with randomly initialized weights: three
    /// stride-2 one-week-filter stages in, three mirrored transposed stages
    /// out (the final decoder stage is linear).
    pub fn init(stratum: StratumKey, dropout_rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut encoder = Vec::new();
        let mut in_c = INPUT_CHANNELS;
        for &out_c in &ENCODER_FILTERS {
            encoder.push(init_layer(in_c, out_c, rng));
            in_c = out_c;
        }
        let mut decoder = Vec::new();
        let dec_out: Vec<usize> = ENCODER_FILTERS
            .iter()
            .rev()
            .skip(1)
            .copied()
            .chain([INPUT_CHANNELS])
            .collect();
        for &out_c in &dec_out {
            decoder.push(init_layer(in_c, out_c, rng));
            in_c = out_c;
        }
        ModelParams {
            version: MODEL_VERSION,
            stratum,
            encoder,
            decoder,
            dropout_rate,
            stats: ChannelStats::identity(INPUT_CHANNELS),
            config_hash: String::new(),
        }
    }

    /// Zero-weight skeleton, useful in tests.
    pub fn zeros(stratum: StratumKey, dropout_rate: f64) -> Self {
        let mut p = {
            let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
            Self::init(stratum, dropout_rate, &mut rng)
        };
        for layer in p.encoder.iter_mut().chain(p.decoder.iter_mut()) {
            layer.weights.fill(F::zero());
            layer.bias.fill(F::zero());
        }
        p
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder
            .iter()
            .chain(self.decoder.iter())
            .map(|l| l.parameter_count())
            .sum()
    }
}

fn init_layer<F: Scalar>(in_c: usize, out_c: usize, rng: &mut ChaCha8Rng) -> ConvLayer<F> {
    // Uniform fan-in scaling.
    let bound = (1.0 / (in_c * KERNEL_WIDTH) as f64).sqrt();
    let weights = (0..out_c * in_c * KERNEL_WIDTH)
        .map(|_| F::from_f64(rng.gen_range(-bound..bound)))
        .collect();
    ConvLayer::new(in_c, out_c, KERNEL_WIDTH, STRIDE, weights, vec![F::zero(); out_c])
        .expect("generated layer shapes are consistent")
}

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

struct StageCache<F: Scalar> {
    input: Tensor2<F>,
    pre_activation: Tensor2<F>,
    kept: Option<Vec<bool>>,
}

/// Intermediate activations of one forward pass, kept for the backward pass.
pub struct ForwardCache<F: Scalar> {
    encoder: Vec<StageCache<F>>,
    decoder: Vec<StageCache<F>>,
    pub xhat: Tensor2<F>,
    pub loss: F,
}

/// Parameter gradients mirroring [`ModelParams`] layer order
/// (encoder stages, then decoder stages).
#[derive(Debug, Clone)]
pub struct ModelGrads<F: Scalar> {
    pub layers: Vec<(Vec<F>, Vec<F>)>,
}

impl<F: Scalar> ModelGrads<F> {
    pub fn zeros_like(params: &ModelParams<F>) -> Self {
        ModelGrads {
            layers: params
                .encoder
                .iter()
                .chain(params.decoder.iter())
                .map(|l| (vec![F::zero(); l.weights.len()], vec![F::zero(); l.bias.len()]))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &ModelGrads<F>) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in w.iter_mut().zip(ow) {
                *d += *s;
            }
            for (d, s) in b.iter_mut().zip(ob) {
                *d += *s;
            }
        }
    }

    pub fn scale(&mut self, factor: F) {
        for (w, b) in self.layers.iter_mut() {
            for v in w.iter_mut() {
                *v *= factor;
            }
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
    }
}

fn check_forward_input<F: Scalar>(params: &ModelParams<F>, x: &Tensor2<F>, mask: &Mask) -> Result<()> {
    if x.channels() != INPUT_CHANNELS {
        return Err(FtcError::contract(format!(
            "model input has {} channels, expected {}",
            x.channels(),
            INPUT_CHANNELS
        )));
    }
    if x.length() % LENGTH_MULTIPLE != 0 {
        return Err(FtcError::contract(format!(
            "model input length {} is not a multiple of {}",
            x.length(),
            LENGTH_MULTIPLE
        )));
    }
    if mask.len() != x.length() {
        return Err(FtcError::contract(format!(
            "mask length {} does not match input length {}",
            mask.len(),
            x.length()
        )));
    }
    let _ = params;
    Ok(())
}

fn ensure_finite<F: Scalar>(t: &Tensor2<F>, what: &str, stage: usize) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(FtcError::Numerical(format!(
            "non-finite activations after {} stage {}",
            what, stage
        )))
    }
}

/// Runs the encoder/decoder on a standardized, padded segment and returns the
/// reconstruction and its masked mean-squared error. Dropout is active only
/// in [`Mode::Train`], which requires an RNG.
pub fn forward<F: Scalar>(
    params: &ModelParams<F>,
    x: &Tensor2<F>,
    mask: &Mask,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor2<F>, F)> {
    let cache = forward_cached(params, x, mask, mode, rng)?;
    Ok((cache.xhat, cache.loss))
}

/// [`forward`] variant that retains intermediate activations for
/// [`backward`].
pub fn forward_cached<F: Scalar>(
    params: &ModelParams<F>,
    x: &Tensor2<F>,
    mask: &Mask,
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardCache<F>> {
    check_forward_input(params, x, mask)?;
    if mode == Mode::Train && rng.is_none() {
        return Err(FtcError::contract("train-mode forward requires an RNG"));
    }

    let mut lengths = vec![x.length()];
    let mut cur = x.clone();
    let mut encoder = Vec::with_capacity(params.encoder.len());
    for (idx, layer) in params.encoder.iter().enumerate() {
        let pre = conv1d_forward(layer, &cur, PadMode::Same)?;
        ensure_finite(&pre, "encoder", idx)?;
        let mut act = relu(&pre);
        let kept = match (mode, rng.as_deref_mut()) {
            (Mode::Train, Some(r)) => {
                let (dropped, kept) = dropout(&act, params.dropout_rate, r)?;
                act = dropped;
                Some(kept)
            }
            _ => None,
        };
        lengths.push(act.length());
        encoder.push(StageCache {
            input: cur,
            pre_activation: pre,
            kept,
        });
        cur = act;
    }

    let mut decoder = Vec::with_capacity(params.decoder.len());
    let n_dec = params.decoder.len();
    for (idx, layer) in params.decoder.iter().enumerate() {
        let target = lengths[lengths.len() - 2 - idx];
        let pre = tconv1d_forward(layer, &cur, Some(target))?;
        ensure_finite(&pre, "decoder", idx)?;
        let last = idx + 1 == n_dec;
        let mut act = if last { pre.clone() } else { relu(&pre) };
        let kept = if last {
            None
        } else {
            match (mode, rng.as_deref_mut()) {
                (Mode::Train, Some(r)) => {
                    let (dropped, kept) = dropout(&act, params.dropout_rate, r)?;
                    act = dropped;
                    Some(kept)
                }
                _ => None,
            }
        };
        decoder.push(StageCache {
            input: cur,
            pre_activation: pre,
            kept,
        });
        cur = act;
    }

    let loss = masked_mse(x, &cur, mask)?;
    if !loss.is_finite() {
        return Err(FtcError::Numerical("non-finite reconstruction loss".into()));
    }
    Ok(ForwardCache {
        encoder,
        decoder,
        xhat: cur,
        loss,
    })
}

/// Backpropagates `upstream_scale * dL/dparams` for the reconstruction error
/// `L` captured in `cache`. `upstream_scale` is the derivative of the outer
/// objective with respect to `L` (1 for plain reconstruction).
pub fn backward<F: Scalar>(
    params: &ModelParams<F>,
    x: &Tensor2<F>,
    mask: &Mask,
    cache: &ForwardCache<F>,
    upstream_scale: F,
) -> Result<ModelGrads<F>> {
    let mut grads = ModelGrads::zeros_like(params);
    let mut up = masked_mse_backward(x, &cache.xhat, mask)?;
    if upstream_scale != F::one() {
        for v in up.data_mut() {
            *v *= upstream_scale;
        }
    }

    let n_enc = params.encoder.len();
    for (idx, layer) in params.decoder.iter().enumerate().rev() {
        let stage = &cache.decoder[idx];
        if let Some(kept) = &stage.kept {
            up = dropout_backward(&up, kept, params.dropout_rate);
        }
        if idx + 1 != params.decoder.len() {
            up = relu_backward(&up, &stage.pre_activation);
        }
        let g = tconv1d_backward(layer, &stage.input, &up, Some(stage.pre_activation.length()))?;
        grads.layers[n_enc + idx] = (g.weights, g.bias);
        up = g.input;
    }

    for (idx, layer) in params.encoder.iter().enumerate().rev() {
        let stage = &cache.encoder[idx];
        if let Some(kept) = &stage.kept {
            up = dropout_backward(&up, kept, params.dropout_rate);
        }
        up = relu_backward(&up, &stage.pre_activation);
        let g = conv1d_backward(layer, &stage.input, &up, PadMode::Same)?;
        grads.layers[idx] = (g.weights, g.bias);
        up = g.input;
    }
    Ok(grads)
}

/// Negative log-likelihood of a Bernoulli frozen-state model built on the
/// reconstruction error: `L` itself for frozen labels, `-log(1 - exp(-L))`
/// for thawed labels. The thawed branch clamps `L` at `clamp` to cap the
/// singularity at zero.
pub fn contrastive_loss<F: Scalar>(loss: F, frozen: bool, clamp: F) -> Result<F> {
    if loss < F::zero() {
        return Err(FtcError::contract(format!(
            "reconstruction loss {} is negative",
            loss
        )));
    }
    if frozen {
        Ok(loss)
    } else {
        let l = loss.max(clamp);
        Ok(-(F::one() - (-l).exp()).ln())
    }
}

/// Derivative of [`contrastive_loss`] with respect to the reconstruction
/// error.
pub fn contrastive_loss_grad<F: Scalar>(loss: F, frozen: bool, clamp: F) -> F {
    if frozen {
        F::one()
    } else if loss < clamp {
        F::zero()
    } else {
        // d/dL of -ln(1 - e^-L) = -1 / (e^L - 1)
        -F::one() / (loss.exp() - F::one())
    }
}

/// Probability that a segment with reconstruction error `L` is frozen:
/// `exp(-L)`, in (0, 1].
pub fn freeze_probability<F: Scalar>(loss: F) -> Result<F> {
    if loss < F::zero() {
        return Err(FtcError::contract(format!(
            "reconstruction loss {} is negative",
            loss
        )));
    }
    Ok((-loss).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{LandCover, WaterBin};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn stratum() -> StratumKey {
        StratumKey::new(LandCover::WS, WaterBin::W00_05)
    }

    fn random_input(len: usize, seed: u64) -> (Tensor2<f64>, Mask) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..INPUT_CHANNELS * len)
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        (
            Tensor2::from_vec(INPUT_CHANNELS, len, data).unwrap(),
            Mask::all_valid(len),
        )
    }

    #[test]
    fn zero_weight_model_outputs_bias_pattern() {
        let params = ModelParams::<f64>::zeros(stratum(), 0.1);
        let (x, mask) = random_input(16, 3);
        let (xhat, loss) = forward(&params, &x, &mask, Mode::Infer, None).unwrap();
        assert!(xhat.data().iter().all(|&v| v == 0.0));
        assert!(loss.is_finite() && loss > 0.0);
    }

    #[test]
    fn output_length_matches_input_for_valid_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = ModelParams::<f64>::init(stratum(), 0.1, &mut rng);
        for len in [8usize, 16, 56] {
            let (x, mask) = random_input(len, len as u64);
            let (xhat, _) = forward(&params, &x, &mask, Mode::Infer, None).unwrap();
            assert_eq!(xhat.length(), len);
            assert_eq!(xhat.channels(), INPUT_CHANNELS);
        }
    }

    #[test]
    fn non_multiple_of_eight_is_rejected() {
        let params = ModelParams::<f64>::zeros(stratum(), 0.1);
        let (x, mask) = random_input(12, 5);
        assert!(forward(&params, &x, &mask, Mode::Infer, None).is_err());
    }

    #[test]
    fn infer_mode_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = ModelParams::<f64>::init(stratum(), 0.1, &mut rng);
        let (x, mask) = random_input(24, 7);
        let (a, la) = forward(&params, &x, &mask, Mode::Infer, None).unwrap();
        let (b, lb) = forward(&params, &x, &mask, Mode::Infer, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn train_mode_requires_rng() {
        let params = ModelParams::<f64>::zeros(stratum(), 0.1);
        let (x, mask) = random_input(8, 2);
        assert!(forward(&params, &x, &mask, Mode::Train, None).is_err());
    }

    #[test]
    fn contrastive_loss_closed_forms() {
        let eps = 1e-6;
        assert_eq!(contrastive_loss(0.3, true, eps).unwrap(), 0.3);
        let ln2 = std::f64::consts::LN_2;
        assert_relative_eq!(
            contrastive_loss(ln2, false, eps).unwrap(),
            ln2,
            max_relative = 1e-12
        );
        // Large reconstruction error drives the anomaly loss to zero.
        let mut prev = contrastive_loss(1.0, false, eps).unwrap();
        for l in [2.0, 5.0, 10.0, 30.0] {
            let v = contrastive_loss(l, false, eps).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-12);
        assert!(contrastive_loss(-0.1, true, eps).is_err());
    }

    #[test]
    fn contrastive_loss_monotonicity() {
        let eps = 1e-6;
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        for w in grid.windows(2) {
            let f0 = contrastive_loss(w[0], true, eps).unwrap();
            let f1 = contrastive_loss(w[1], true, eps).unwrap();
            assert!(f1 >= f0);
            let a0 = contrastive_loss(w[0], false, eps).unwrap();
            let a1 = contrastive_loss(w[1], false, eps).unwrap();
            assert!(a1 <= a0);
        }
    }

    #[test]
    fn freeze_probability_closed_forms() {
        assert_eq!(freeze_probability(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            freeze_probability(std::f64::consts::LN_2).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        assert!(freeze_probability(50.0).unwrap() < 1e-21);
        assert!(freeze_probability(-1.0).is_err());
    }

    #[test]
    fn standardize_round_trips() {
        let stats = ChannelStats {
            mean: vec![250.0, 240.0, 10.0],
            std: vec![20.0, 18.0, 4.0],
        };
        let (x, _) = random_input(16, 13);
        let z = stats.standardize(&x);
        let back = stats.destandardize(&z);
        for (a, b) in x.data().iter().zip(back.data()) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_channel_standardizes_to_zero() {
        let x = Tensor2::from_vec(1, 4, vec![7.0; 4]).unwrap();
        let mask = Mask::all_valid(4);
        let stats = ChannelStats::from_segments([(&x, &mask)].into_iter(), 1).unwrap();
        assert_eq!(stats.std[0], 1e-6);
        let z = stats.standardize(&x);
        assert!(z.data().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn training_set_means_vanish_after_standardization() {
        let (a, ma) = random_input(16, 21);
        let (b, mb) = random_input(24, 22);
        let segs = [(&a, &ma), (&b, &mb)];
        let stats = ChannelStats::from_segments(segs.iter().copied(), INPUT_CHANNELS).unwrap();
        let mut sums = vec![0.0f64; INPUT_CHANNELS];
        let mut n = 0usize;
        for (x, m) in segs {
            let z = stats.standardize(x);
            for c in 0..INPUT_CHANNELS {
                for t in 0..z.length() {
                    if m.is_valid(t) {
                        sums[c] += z.get(c, t);
                    }
                }
            }
            n += m.valid_count();
        }
        for s in sums {
            assert!((s / n as f64).abs() < 1e-9);
        }
    }
}
