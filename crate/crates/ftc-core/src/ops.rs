//! ReLU, dropout and masked mean-squared error with analytic gradients.

use rand::Rng;

use crate::error::{FtcError, Result};
use crate::scalar::Scalar;
use crate::tensor::{Mask, Tensor2};

/// Elementwise `max(0, x)`.
pub fn relu<F: Scalar>(x: &Tensor2<F>) -> Tensor2<F> {
    x.map(|v| if v > F::zero() { v } else { F::zero() })
}

/// Gradient of [`relu`] given the pre-activation input.
pub fn relu_backward<F: Scalar>(upstream: &Tensor2<F>, pre_activation: &Tensor2<F>) -> Tensor2<F> {
    let mut out = Tensor2::zeros(upstream.channels(), upstream.length());
    for ((dst, &up), &pre) in out
        .data_mut()
        .iter_mut()
        .zip(upstream.data())
        .zip(pre_activation.data())
    {
        if pre > F::zero() {
            *dst = up;
        }
    }
    out
}

/// Inverted dropout: each entry is zeroed independently with probability
/// `rate` and survivors are scaled by `1/(1-rate)`, so inference needs no
/// correction. Returns the output and the kept-entry mask.
pub fn dropout<F: Scalar, R: Rng>(
    x: &Tensor2<F>,
    rate: f64,
    rng: &mut R,
) -> Result<(Tensor2<F>, Vec<bool>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(FtcError::contract(format!(
            "dropout rate {} outside [0, 1)",
            rate
        )));
    }
    let scale = F::from_f64(1.0 / (1.0 - rate));
    let mut kept = vec![true; x.data().len()];
    let mut out = x.clone();
    if rate > 0.0 {
        for (dst, keep) in out.data_mut().iter_mut().zip(kept.iter_mut()) {
            if rng.gen::<f64>() < rate {
                *dst = F::zero();
                *keep = false;
            } else {
                *dst *= scale;
            }
        }
    }
    Ok((out, kept))
}

/// Gradient of [`dropout`] for the kept-mask recorded in the forward pass.
pub fn dropout_backward<F: Scalar>(upstream: &Tensor2<F>, kept: &[bool], rate: f64) -> Tensor2<F> {
    let scale = F::from_f64(1.0 / (1.0 - rate));
    let mut out = Tensor2::zeros(upstream.channels(), upstream.length());
    for ((dst, &up), &keep) in out.data_mut().iter_mut().zip(upstream.data()).zip(kept) {
        if keep {
            *dst = up * scale;
        }
    }
    out
}

/// Mean squared difference over valid time steps and all channels; padded
/// columns contribute nothing. The per-element normalization (channel count
/// times valid length) keeps the value comparable across segment lengths.
pub fn masked_mse<F: Scalar>(x: &Tensor2<F>, xhat: &Tensor2<F>, mask: &Mask) -> Result<F> {
    check_mse_shapes(x, xhat, mask)?;
    let valid = mask.valid_count();
    let mut acc = F::zero();
    for c in 0..x.channels() {
        let a = x.row(c);
        let b = xhat.row(c);
        for t in 0..x.length() {
            if mask.is_valid(t) {
                let d = a[t] - b[t];
                acc += d * d;
            }
        }
    }
    Ok(acc / F::from_f64((x.channels() * valid) as f64))
}

/// Gradient of [`masked_mse`] with respect to `xhat`.
pub fn masked_mse_backward<F: Scalar>(
    x: &Tensor2<F>,
    xhat: &Tensor2<F>,
    mask: &Mask,
) -> Result<Tensor2<F>> {
    check_mse_shapes(x, xhat, mask)?;
    let norm = F::from_f64(2.0 / (x.channels() * mask.valid_count()) as f64);
    let mut out = Tensor2::zeros(x.channels(), x.length());
    for c in 0..x.channels() {
        let a = x.row(c);
        let b = xhat.row(c);
        let dst = out.row_mut(c);
        for t in 0..a.len() {
            if mask.is_valid(t) {
                dst[t] = norm * (b[t] - a[t]);
            }
        }
    }
    Ok(out)
}

fn check_mse_shapes<F: Scalar>(x: &Tensor2<F>, xhat: &Tensor2<F>, mask: &Mask) -> Result<()> {
    if x.channels() != xhat.channels() || x.length() != xhat.length() {
        return Err(FtcError::contract(format!(
            "shape mismatch: x is {}x{}, xhat is {}x{}",
            x.channels(),
            x.length(),
            xhat.channels(),
            xhat.length()
        )));
    }
    if mask.len() != x.length() {
        return Err(FtcError::contract(format!(
            "mask length {} does not match series length {}",
            mask.len(),
            x.length()
        )));
    }
    if mask.valid_count() == 0 {
        return Err(FtcError::contract("mask has no valid time steps"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor2::from_row(&[-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).row(0), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn relu_is_idempotent() {
        let x = Tensor2::from_vec(2, 3, vec![-3.0, 1.0, 0.0, 4.0, -0.5, 2.5]).unwrap();
        let once = relu(&x);
        assert_eq!(relu(&once), once);
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let x = Tensor2::from_row(&[1.0, -2.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, kept) = dropout(&x, 0.0, &mut rng).unwrap();
        assert_eq!(y, x);
        assert!(kept.iter().all(|&k| k));
    }

    #[test]
    fn dropout_rejects_bad_rate() {
        let x = Tensor2::from_row(&[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(dropout(&x, 1.0, &mut rng).is_err());
        assert!(dropout(&x, -0.1, &mut rng).is_err());
    }

    #[test]
    fn dropout_keeps_expected_fraction_and_reproduces() {
        let n = 1_000_000;
        let x = Tensor2::from_vec(1, n, vec![1.0f64; n]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (y, kept) = dropout(&x, 0.1, &mut rng).unwrap();
        let frac = kept.iter().filter(|&&k| k).count() as f64 / n as f64;
        assert!((frac - 0.9).abs() < 0.002, "kept fraction {}", frac);
        // Survivors carry the inverted scale.
        let idx = kept.iter().position(|&k| k).unwrap();
        assert!((y.data()[idx] - 1.0 / 0.9).abs() < 1e-15);

        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let (_, kept2) = dropout(&x, 0.1, &mut rng2).unwrap();
        assert_eq!(kept, kept2);
    }

    #[test]
    fn mse_examples() {
        let all = Mask::all_valid(2);
        let x = Tensor2::from_row(&[1.0, 0.0]).unwrap();
        let xhat = Tensor2::from_row(&[0.0, 0.0]).unwrap();
        assert_eq!(masked_mse(&x, &x, &all).unwrap(), 0.0);
        assert_eq!(masked_mse(&x, &xhat, &all).unwrap(), 0.5);

        let x = Tensor2::from_row(&[1.0, 5.0]).unwrap();
        let xhat = Tensor2::from_row(&[0.0, 5.0]).unwrap();
        let m = Mask::new(vec![true, false]).unwrap();
        assert_eq!(masked_mse(&x, &xhat, &m).unwrap(), 1.0);
    }

    #[test]
    fn mse_ignores_padded_garbage() {
        let x = Tensor2::from_row(&[1.0, 100.0]).unwrap();
        let xhat = Tensor2::from_row(&[1.0, -100.0]).unwrap();
        let m = Mask::valid_prefix(1, 2).unwrap();
        assert_eq!(masked_mse(&x, &xhat, &m).unwrap(), 0.0);
    }

    #[test]
    fn mse_shape_errors() {
        let x = Tensor2::from_row(&[1.0, 2.0]).unwrap();
        let y = Tensor2::from_row(&[1.0]).unwrap();
        assert!(masked_mse(&x, &y, &Mask::all_valid(2)).is_err());
        assert!(masked_mse(&x, &x, &Mask::all_valid(3)).is_err());
    }
}
