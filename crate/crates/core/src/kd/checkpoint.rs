//! `SPKD` network checkpoint.
//!
//! ```text
//! "SPKD" | u16 version | u16 layer count
//! | per layer: u32 d_out | u32 d_in | u32 activation (0 tanh, 1 identity)
//! | per layer: f64 weights row-major, then f64 bias
//! ```
//!
//! Little-endian throughout.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::net::{Activation, DenseLayer, DenseNet};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SPKD";
pub const VERSION: u16 = 1;

pub fn encode(net: &DenseNet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u16).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.out_width() as u32).to_le_bytes());
        out.extend_from_slice(&(l.in_width() as u32).to_le_bytes());
        out.extend_from_slice(&l.activation.code().to_le_bytes());
    }
    for l in net.layers() {
        for r in 0..l.out_width() {
            for c in 0..l.in_width() {
                out.extend_from_slice(&l.weight[(r, c)].to_le_bytes());
            }
        }
        for b in l.bias.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DenseNet> {
    let err = |offset: usize, reason: String| Error::Format {
        format: "SPKD checkpoint",
        offset: offset as u64,
        reason,
    };
    if bytes.len() < 8 {
        return Err(err(bytes.len(), "truncated header".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(err(0, "bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let count = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if count == 0 {
        return Err(err(6, "no layers".into()));
    }
    let table_end = 8 + 12 * count;
    if bytes.len() < table_end {
        return Err(err(bytes.len(), "truncated layer table".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let mut shapes = Vec::with_capacity(count);
    let mut expected = table_end;
    for i in 0..count {
        let o = 8 + 12 * i;
        let (rows, cols) = (u32_at(o) as usize, u32_at(o + 4) as usize);
        let act = Activation::from_code(u32_at(o + 8))
            .ok_or_else(|| err(o + 8, format!("unknown activation {}", u32_at(o + 8))))?;
        if rows == 0 || cols == 0 || rows > 1 << 20 || cols > 1 << 20 {
            return Err(err(o, format!("implausible layer shape {rows}x{cols}")));
        }
        expected += 8 * (rows * cols + rows);
        shapes.push((rows, cols, act));
    }
    if bytes.len() != expected {
        return Err(err(
            bytes.len().min(expected),
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut pos = table_end;
    let mut next = || {
        let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes"));
        pos += 8;
        v
    };
    let mut layers = Vec::with_capacity(count);
    for (rows, cols, activation) in shapes {
        let weight = DMatrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| next()));
        let bias = DVector::from_iterator(rows, (0..rows).map(|_| next()));
        layers.push(DenseLayer {
            weight,
            bias,
            activation,
        });
    }
    let net = DenseNet::from_layers(layers)?;
    if net
        .layers()
        .iter()
        .any(|l| l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
    {
        return Err(err(table_end, "non-finite parameter".into()));
    }
    Ok(net)
}

pub fn write<W: Write>(net: &DenseNet, mut w: W) -> Result<()> {
    w.write_all(&encode(net))?;
    Ok(())
}

pub fn read<R: Read>(mut r: R) -> Result<DenseNet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}
