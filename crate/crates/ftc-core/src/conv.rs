//! 1D convolution and transposed convolution with exact analytic gradients.
//!
//! Convolution uses the cross-correlation convention (no kernel flip).
//! `Same` padding pads with implicit zeros, split left/right as
//! `pad_left = pad_total / 2`; transposed convolution crops its full output
//! with the mirrored offsets, so a stride-`s` `Same` convolution and a
//! transposed convolution cropped to `s ×` its input length are exact
//! adjoints of one another.

use crate::error::{FtcError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Padding behavior of the forward convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadMode {
    /// No padding; output length `(len - kernel) / stride + 1`.
    Valid,
    /// Zero padding; output length `ceil(len / stride)`.
    Same,
}

/// One convolution (or transposed convolution) layer: weights indexed
/// `[out_channel][in_channel][tap]`, one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<F: Scalar> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_width: usize,
    pub stride: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Scalar> ConvLayer<F> {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_width: usize,
        stride: usize,
        weights: Vec<F>,
        bias: Vec<F>,
    ) -> Result<Self> {
        if kernel_width < 1 {
            return Err(FtcError::contract("kernel_width must be >= 1"));
        }
        if stride < 1 {
            return Err(FtcError::contract("stride must be >= 1"));
        }
        if weights.len() != out_channels * in_channels * kernel_width {
            return Err(FtcError::contract(format!(
                "weight array has {} entries, expected {}x{}x{}",
                weights.len(),
                out_channels,
                in_channels,
                kernel_width
            )));
        }
        if bias.len() != out_channels {
            return Err(FtcError::contract(format!(
                "bias array has {} entries, expected {}",
                bias.len(),
                out_channels
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(FtcError::contract("layer parameters must be finite"));
        }
        Ok(ConvLayer {
            in_channels,
            out_channels,
            kernel_width,
            stride,
            weights,
            bias,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel_width: usize, stride: usize) -> Self {
        ConvLayer {
            in_channels,
            out_channels,
            kernel_width,
            stride,
            weights: vec![F::zero(); out_channels * in_channels * kernel_width],
            bias: vec![F::zero(); out_channels],
        }
    }

    #[inline]
    fn w_base(&self, o: usize, i: usize) -> usize {
        (o * self.in_channels + i) * self.kernel_width
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Output length of the forward convolution for a given input length.
    pub fn conv_output_len(&self, input_len: usize, pad: PadMode) -> Result<usize> {
        match pad {
            PadMode::Valid => {
                if input_len < self.kernel_width {
                    return Err(FtcError::contract(format!(
                        "input length {} shorter than kernel width {}",
                        input_len, self.kernel_width
                    )));
                }
                Ok((input_len - self.kernel_width) / self.stride + 1)
            }
            PadMode::Same => Ok(input_len.div_ceil(self.stride)),
        }
    }

    /// Left zero-pad of a `Same` convolution over `input_len` columns.
    fn same_pad_left(&self, input_len: usize) -> usize {
        let out = input_len.div_ceil(self.stride);
        let total = ((out - 1) * self.stride + self.kernel_width).saturating_sub(input_len);
        total / 2
    }
}

/// Gradients of one layer application: parameter gradients plus the gradient
/// passed back to the layer input.
#[derive(Debug, Clone)]
pub struct LayerGrads<F: Scalar> {
    pub weights: Vec<F>,
    pub bias: Vec<F>,
    pub input: Tensor2<F>,
}

fn check_input_channels<F: Scalar>(layer: &ConvLayer<F>, x: &Tensor2<F>) -> Result<()> {
    if x.channels() != layer.in_channels {
        return Err(FtcError::contract(format!(
            "input has {} channels, layer expects in_channels {}",
            x.channels(),
            layer.in_channels
        )));
    }
    Ok(())
}

/// Cross-correlation forward pass.
pub fn conv1d_forward<F: Scalar>(
    layer: &ConvLayer<F>,
    x: &Tensor2<F>,
    pad: PadMode,
) -> Result<Tensor2<F>> {
    check_input_channels(layer, x)?;
    let len = x.length();
    let out_len = layer.conv_output_len(len, pad)?;
    let pad_left = match pad {
        PadMode::Valid => 0isize,
        PadMode::Same => layer.same_pad_left(len) as isize,
    };

    let mut out = Tensor2::zeros(layer.out_channels, out_len);
    for o in 0..layer.out_channels {
        let bias = layer.bias[o];
        let out_row = out.row_mut(o);
        out_row.fill(bias);
        for i in 0..layer.in_channels {
            let w = &layer.weights[layer.w_base(o, i)..layer.w_base(o, i) + layer.kernel_width];
            let x_row = x.row(i);
            for (tp, acc) in out_row.iter_mut().enumerate() {
                let start = (tp * layer.stride) as isize - pad_left;
                let mut s = F::zero();
                for (k, &wk) in w.iter().enumerate() {
                    let src = start + k as isize;
                    if src >= 0 && (src as usize) < len {
                        s = s + wk * x_row[src as usize];
                    }
                }
                *acc += s;
            }
        }
    }
    Ok(out)
}

/// Gradients of the forward convolution with respect to weights, bias and
/// input, given the upstream gradient at the output.
pub fn conv1d_backward<F: Scalar>(
    layer: &ConvLayer<F>,
    x: &Tensor2<F>,
    upstream: &Tensor2<F>,
    pad: PadMode,
) -> Result<LayerGrads<F>> {
    check_input_channels(layer, x)?;
    let len = x.length();
    let out_len = layer.conv_output_len(len, pad)?;
    if upstream.channels() != layer.out_channels || upstream.length() != out_len {
        return Err(FtcError::contract(format!(
            "upstream shape {}x{} does not match conv output {}x{}",
            upstream.channels(),
            upstream.length(),
            layer.out_channels,
            out_len
        )));
    }
    let pad_left = match pad {
        PadMode::Valid => 0isize,
        PadMode::Same => layer.same_pad_left(len) as isize,
    };

    let mut d_w = vec![F::zero(); layer.weights.len()];
    let mut d_b = vec![F::zero(); layer.out_channels];
    let mut d_x = Tensor2::zeros(x.channels(), len);

    for o in 0..layer.out_channels {
        let up_row = upstream.row(o);
        d_b[o] = up_row.iter().copied().sum();
        for i in 0..layer.in_channels {
            let w_base = layer.w_base(o, i);
            let w = &layer.weights[w_base..w_base + layer.kernel_width];
            let x_row = x.row(i);
            let dx_row = d_x.row_mut(i);
            for (tp, &up) in up_row.iter().enumerate() {
                if up == F::zero() {
                    continue;
                }
                let start = (tp * layer.stride) as isize - pad_left;
                for k in 0..layer.kernel_width {
                    let src = start + k as isize;
                    if src >= 0 && (src as usize) < len {
                        d_w[w_base + k] += up * x_row[src as usize];
                        dx_row[src as usize] += up * w[k];
                    }
                }
            }
        }
    }
    Ok(LayerGrads {
        weights: d_w,
        bias: d_b,
        input: d_x,
    })
}

/// Full output length of a transposed convolution before cropping.
pub fn tconv_full_len<F: Scalar>(layer: &ConvLayer<F>, input_len: usize) -> usize {
    (input_len - 1) * layer.stride + layer.kernel_width
}

fn tconv_crop<F: Scalar>(layer: &ConvLayer<F>, input_len: usize, target_len: Option<usize>) -> Result<(usize, usize)> {
    let full = tconv_full_len(layer, input_len);
    let target = target_len.unwrap_or(full);
    if target > full || full - target >= layer.kernel_width {
        return Err(FtcError::contract(format!(
            "target length {} incompatible with transposed conv output {} (kernel {}, stride {})",
            target, full, layer.kernel_width, layer.stride
        )));
    }
    Ok((target, (full - target) / 2))
}

/// Transposed (fractionally strided) convolution. The layer's `in_channels`
/// are consumed, `out_channels` produced; an optional target length crops the
/// full `(len-1)*stride + kernel` output symmetrically.
pub fn tconv1d_forward<F: Scalar>(
    layer: &ConvLayer<F>,
    x: &Tensor2<F>,
    target_len: Option<usize>,
) -> Result<Tensor2<F>> {
    if x.channels() != layer.in_channels {
        return Err(FtcError::contract(format!(
            "input has {} channels, transposed layer expects in_channels {}",
            x.channels(),
            layer.in_channels
        )));
    }
    let len = x.length();
    let (out_len, crop_left) = tconv_crop(layer, len, target_len)?;

    let mut out = Tensor2::zeros(layer.out_channels, out_len);
    for o in 0..layer.out_channels {
        out.row_mut(o).fill(layer.bias[o]);
    }
    for i in 0..x.channels() {
        let x_row = x.row(i);
        for o in 0..layer.out_channels {
            // Weight block of the *producing* channel: [o][i][k].
            let w_base = (o * layer.in_channels + i) * layer.kernel_width;
            let w = &layer.weights[w_base..w_base + layer.kernel_width];
            let out_row = out.row_mut(o);
            for (t, &xv) in x_row.iter().enumerate() {
                if xv == F::zero() {
                    continue;
                }
                let start = (t * layer.stride) as isize - crop_left as isize;
                for (k, &wk) in w.iter().enumerate() {
                    let dst = start + k as isize;
                    if dst >= 0 && (dst as usize) < out_len {
                        out_row[dst as usize] += xv * wk;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of the transposed convolution.
pub fn tconv1d_backward<F: Scalar>(
    layer: &ConvLayer<F>,
    x: &Tensor2<F>,
    upstream: &Tensor2<F>,
    target_len: Option<usize>,
) -> Result<LayerGrads<F>> {
    if x.channels() != layer.in_channels {
        return Err(FtcError::contract(format!(
            "input has {} channels, transposed layer expects in_channels {}",
            x.channels(),
            layer.in_channels
        )));
    }
    let len = x.length();
    let (out_len, crop_left) = tconv_crop(layer, len, target_len)?;
    if upstream.channels() != layer.out_channels || upstream.length() != out_len {
        return Err(FtcError::contract(format!(
            "upstream shape {}x{} does not match tconv output {}x{}",
            upstream.channels(),
            upstream.length(),
            layer.out_channels,
            out_len
        )));
    }

    let mut d_w = vec![F::zero(); layer.weights.len()];
    let mut d_b = vec![F::zero(); layer.out_channels];
    let mut d_x = Tensor2::zeros(x.channels(), len);

    for o in 0..layer.out_channels {
        let up_row = upstream.row(o);
        d_b[o] = up_row.iter().copied().sum();
        for i in 0..layer.in_channels {
            let w_base = (o * layer.in_channels + i) * layer.kernel_width;
            let w = &layer.weights[w_base..w_base + layer.kernel_width];
            let x_row = x.row(i);
            let dx_row = d_x.row_mut(i);
            for (t, &xv) in x_row.iter().enumerate() {
                let start = (t * layer.stride) as isize - crop_left as isize;
                let mut acc = F::zero();
                for (k, &wk) in w.iter().enumerate() {
                    let dst = start + k as isize;
                    if dst >= 0 && (dst as usize) < out_len {
                        let up = up_row[dst as usize];
                        d_w[w_base + k] += up * xv;
                        acc = acc + up * wk;
                    }
                }
                dx_row[t] += acc;
            }
        }
    }
    Ok(LayerGrads {
        weights: d_w,
        bias: d_b,
        input: d_x,
    })
}
