//! Model checkpoints: a self-describing versioned container with a JSON
//! header (layer shapes, stratum, config hash) followed by row-major 64-bit
//! little-endian parameters. Round-trips are bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conv::ConvLayer;
use crate::error::{FtcError, Result};
use crate::model::{ChannelStats, ModelParams, INPUT_CHANNELS};
use crate::scalar::Scalar;
use crate::series::StratumKey;

const MAGIC: &[u8; 8] = b"FTCKPT1\n";

#[derive(Debug, Serialize, Deserialize)]
struct LayerShape {
    in_channels: usize,
    out_channels: usize,
    kernel_width: usize,
    stride: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model_version: u32,
    stratum: String,
    channels: usize,
    encoder: Vec<LayerShape>,
    decoder: Vec<LayerShape>,
    config_hash: String,
}

fn layer_shape<F: Scalar>(layer: &ConvLayer<F>) -> LayerShape {
    LayerShape {
        in_channels: layer.in_channels,
        out_channels: layer.out_channels,
        kernel_width: layer.kernel_width,
        stride: layer.stride,
    }
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Serializes a model to its checkpoint byte representation.
pub fn to_bytes<F: Scalar>(params: &ModelParams<F>) -> Result<Vec<u8>> {
    let header = Header {
        format_version: 1,
        model_version: params.version,
        stratum: params.stratum.id(),
        channels: INPUT_CHANNELS,
        encoder: params.encoder.iter().map(layer_shape).collect(),
        decoder: params.decoder.iter().map(layer_shape).collect(),
        config_hash: params.config_hash.clone(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| FtcError::contract(format!("checkpoint header serialization: {}", e)))?;

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);

    push_f64(&mut buf, params.dropout_rate);
    for v in params.stats.mean.iter().chain(params.stats.std.iter()) {
        push_f64(&mut buf, v.to_f64_lossy());
    }
    for layer in params.encoder.iter().chain(params.decoder.iter()) {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            push_f64(&mut buf, v.to_f64_lossy());
        }
    }
    Ok(buf)
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(FtcError::contract(format!(
                "checkpoint {} truncated at byte {}",
                self.path, self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

/// Deserializes a model from checkpoint bytes.
pub fn from_bytes<F: Scalar>(data: &[u8], path: &str) -> Result<ModelParams<F>> {
    let mut r = Reader { data, pos: 0, path };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(FtcError::contract(format!(
            "{} is not a model checkpoint (bad magic)",
            path
        )));
    }
    let header_len = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")) as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| FtcError::contract(format!("checkpoint {} header: {}", path, e)))?;
    if header.format_version != 1 {
        return Err(FtcError::contract(format!(
            "checkpoint {} has unsupported format version {}",
            path, header.format_version
        )));
    }
    let stratum = StratumKey::from_id(&header.stratum)?;

    let dropout_rate = r.f64()?;
    let mut mean = Vec::with_capacity(header.channels);
    let mut std = Vec::with_capacity(header.channels);
    for _ in 0..header.channels {
        mean.push(F::from_f64(r.f64()?));
    }
    for _ in 0..header.channels {
        std.push(F::from_f64(r.f64()?));
    }

    let mut read_layers = |shapes: &[LayerShape], r: &mut Reader| -> Result<Vec<ConvLayer<F>>> {
        shapes
            .iter()
            .map(|s| {
                let n_w = s.out_channels * s.in_channels * s.kernel_width;
                let mut weights = Vec::with_capacity(n_w);
                for _ in 0..n_w {
                    weights.push(F::from_f64(r.f64()?));
                }
                let mut bias = Vec::with_capacity(s.out_channels);
                for _ in 0..s.out_channels {
                    bias.push(F::from_f64(r.f64()?));
                }
                ConvLayer::new(
                    s.in_channels,
                    s.out_channels,
                    s.kernel_width,
                    s.stride,
                    weights,
                    bias,
                )
            })
            .collect()
    };
    let encoder = read_layers(&header.encoder, &mut r)?;
    let decoder = read_layers(&header.decoder, &mut r)?;
    if r.pos != data.len() {
        return Err(FtcError::contract(format!(
            "checkpoint {} has {} trailing bytes",
            path,
            data.len() - r.pos
        )));
    }

    Ok(ModelParams {
        version: header.model_version,
        stratum,
        encoder,
        decoder,
        dropout_rate,
        stats: ChannelStats { mean, std },
        config_hash: header.config_hash,
    })
}

/// Writes a checkpoint file.
pub fn save<F: Scalar>(params: &ModelParams<F>, path: &Path) -> Result<()> {
    let bytes = to_bytes(params)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads a checkpoint file.
pub fn load<F: Scalar>(path: &Path) -> Result<ModelParams<F>> {
    let data = fs::read(path)?;
    from_bytes(&data, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{LandCover, WaterBin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut p = ModelParams::init(
            StratumKey::new(LandCover::S, WaterBin::W15_35),
            0.1,
            &mut rng,
        );
        p.stats.mean = vec![251.25, 243.5, 7.75];
        p.stats.std = vec![19.0, 18.5, 3.25];
        p.config_hash = "deadbeefdeadbeef".into();
        p
    }

    #[test]
    fn byte_round_trip_is_exact() {
        let m = model();
        let bytes = to_bytes(&m).unwrap();
        let back: ModelParams<f64> = from_bytes(&bytes, "mem").unwrap();
        assert_eq!(m, back);
        // Serialized form is stable too.
        assert_eq!(bytes, to_bytes(&back).unwrap());
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let m = model();
        let bytes = to_bytes(&m).unwrap();
        assert!(from_bytes::<f64>(&bytes[1..], "mem").is_err());
        assert!(from_bytes::<f64>(&bytes[..bytes.len() - 3], "mem").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes::<f64>(&extra, "mem").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("ftc-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.ckpt");
        let m = model();
        save(&m, &path).unwrap();
        let back: ModelParams<f64> = load(&path).unwrap();
        assert_eq!(m, back);
        std::fs::remove_file(&path).ok();
    }
}
