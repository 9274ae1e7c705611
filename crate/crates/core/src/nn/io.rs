//! Weight files.
//!
//! Binary layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic  b"XTMLP\x01\0\0"
//! activation index (ReLU=0, LeakyReLU=1, ELU=2, Swish=3)
//! dropout
//! layer count L
//! L x (inputs, outputs)
//! L x (weights row-major outputs x inputs, then biases)
//! ```
//!
//! The textual form is JSON with the same content.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"XTMLP\x01\0\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFormat {
    Binary,
    Json,
}

impl WeightFormat {
    /// `.json` selects JSON, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => WeightFormat::Json,
            _ => WeightFormat::Binary,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonModel {
    activation: Activation,
    dropout: f64,
    layers: Vec<JsonLayer>,
}

fn activation_index(a: Activation) -> u64 {
    Activation::ALL.iter().position(|x| *x == a).unwrap_or(0) as u64
}

pub fn encode_binary(model: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&activation_index(model.activation).to_le_bytes());
    out.extend_from_slice(&model.dropout.to_le_bytes());
    out.extend_from_slice(&(model.layers.len() as u64).to_le_bytes());
    for l in &model.layers {
        out.extend_from_slice(&(l.input() as u64).to_le_bytes());
        out.extend_from_slice(&(l.output() as u64).to_le_bytes());
    }
    for l in &model.layers {
        for r in 0..l.output() {
            for c in 0..l.input() {
                out.extend_from_slice(&l.w[(r, c)].to_le_bytes());
            }
        }
        for b in l.b.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take8(&mut self) -> Result<[u8; 8]> {
        let bytes = self
            .buf
            .get(self.pos..self.pos + 8)
            .ok_or_else(|| Error::Shape("weight file truncated".into()))?;
        self.pos += 8;
        Ok(bytes.try_into().expect("slice of length 8"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take8()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take8()?))
    }
}

pub fn decode_binary(buf: &[u8]) -> Result<Mlp> {
    if buf.len() < 8 || &buf[..8] != MAGIC {
        return Err(Error::Shape("not a weight file (bad magic)".into()));
    }
    let mut cur = Cursor { buf, pos: 8 };
    let act = cur.u64()? as usize;
    let activation = *Activation::ALL
        .get(act)
        .ok_or_else(|| Error::Shape(format!("unknown activation index {act}")))?;
    let dropout = cur.f64()?;
    let count = cur.u64()? as usize;
    if count == 0 || count > 64 {
        return Err(Error::Shape(format!("implausible layer count {count}")));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let (i, o) = (cur.u64()? as usize, cur.u64()? as usize);
        if i == 0 || o == 0 || i.saturating_mul(o) > buf.len() {
            return Err(Error::Shape(format!("implausible layer shape {i}x{o}")));
        }
        shapes.push((i, o));
    }
    let mut layers = Vec::with_capacity(count);
    for (i, o) in shapes {
        let mut w = DMatrix::zeros(o, i);
        for r in 0..o {
            for c in 0..i {
                w[(r, c)] = cur.f64()?;
            }
        }
        let mut b = DVector::zeros(o);
        for k in 0..o {
            b[k] = cur.f64()?;
        }
        layers.push(Dense { w, b });
    }
    if cur.pos != buf.len() {
        return Err(Error::Shape("trailing bytes after weight data".into()));
    }
    Mlp::from_layers(layers, activation, dropout)
}

fn to_json(model: &Mlp) -> JsonModel {
    JsonModel {
        activation: model.activation,
        dropout: model.dropout,
        layers: model
            .layers
            .iter()
            .map(|l| JsonLayer {
                weights: l.w.row_iter().map(|r| r.iter().copied().collect()).collect(),
                bias: l.b.iter().copied().collect(),
            })
            .collect(),
    }
}

fn from_json(j: JsonModel) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(j.layers.len());
    for l in j.layers {
        let out = l.weights.len();
        let inp = l.weights.first().map(Vec::len).unwrap_or(0);
        if out == 0 || inp == 0 || l.weights.iter().any(|r| r.len() != inp) {
            return Err(Error::Shape("ragged or empty weight matrix".into()));
        }
        let w = DMatrix::from_row_iterator(out, inp, l.weights.into_iter().flatten());
        layers.push(Dense {
            w,
            b: DVector::from_vec(l.bias),
        });
    }
    Mlp::from_layers(layers, j.activation, j.dropout)
}

pub fn write_weights(model: &Mlp, path: &Path) -> Result<()> {
    let bytes = match WeightFormat::from_path(path) {
        WeightFormat::Binary => encode_binary(model),
        WeightFormat::Json => serde_json::to_vec_pretty(&to_json(model))?,
    };
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn read_weights(path: &Path) -> Result<Mlp> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    match WeightFormat::from_path(path) {
        WeightFormat::Binary => decode_binary(&buf),
        WeightFormat::Json => from_json(serde_json::from_slice(&buf)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{MlpConfig, OptimizerKind};

    fn model() -> Mlp {
        let c = MlpConfig {
            l1: 8,
            epochs: 1,
            batch_size: 4,
            dropout: 0.25,
            activation: Activation::ELU,
            optimizer: OptimizerKind::Adam,
            lr_multiplier: 1.0,
            seed: 2,
        };
        Mlp::build(&c, 3).unwrap()
    }

    #[test]
    fn binary_layout() {
        let m = model();
        let bytes = encode_binary(&m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.25);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 5);
        // first weight is W0[0,0]
        let off = 32 + 5 * 16;
        assert_eq!(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()), m.layers[0].w[(0, 0)]);
        assert_eq!(bytes.len(), off + 8 * m.parameter_count());
        assert_eq!(decode_binary(&bytes).unwrap(), m);
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = model();
        for name in ["w.bin", "w.json"] {
            let p = dir.path().join(name);
            write_weights(&m, &p).unwrap();
            assert_eq!(read_weights(&p).unwrap(), m);
        }
    }

    #[test]
    fn corrupt_input_rejected() {
        let bytes = encode_binary(&model());
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_binary(b"nonsense").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_binary(&extra).is_err());
    }
}
