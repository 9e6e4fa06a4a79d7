//! `SPHD` head checkpoint.
//!
//! ```text
//! "SPHD" | u16 version | u16 cell kind | u32 hidden | u32 input
//! | f64 tensors in registry order (matrices row-major)
//! | f64 standardizer means (input) | f64 standardizer stds (input)
//! ```
//!
//! All integers and floats little-endian.

use std::io::{Read, Write};

use super::params::{CellKind, HeadParams};
use super::train::{Standardizer, TrainedHead};
use crate::error::{Error, Result};
use crate::optim::Parameters;

pub const MAGIC: [u8; 4] = *b"SPHD";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

pub fn encode(head: &TrainedHead) -> Vec<u8> {
    let p = &head.params;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (p.parameter_count() + 2 * p.input()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&p.kind().code().to_le_bytes());
    out.extend_from_slice(&(p.hidden() as u32).to_le_bytes());
    out.extend_from_slice(&(p.input() as u32).to_le_bytes());
    let tail = [
        head.standardizer.mean.as_slice(),
        head.standardizer.std.as_slice(),
    ];
    for t in p.tensors().into_iter().chain(tail) {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<TrainedHead> {
    let err = |offset: usize, reason: String| Error::Format {
        format: "SPHD checkpoint",
        offset: offset as u64,
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), "truncated header".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(err(0, "bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let code = u16::from_le_bytes([bytes[6], bytes[7]]);
    let kind =
        CellKind::from_code(code).ok_or_else(|| err(6, format!("unknown cell kind {code}")))?;
    let hidden = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let input = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    if hidden == 0 || input == 0 || hidden > 1 << 16 || input > 1 << 16 {
        return Err(err(
            8,
            format!("implausible sizes hidden={hidden} input={input}"),
        ));
    }
    let mut params = HeadParams::zeros(kind, input, hidden)?;
    let expected = HEADER_LEN + 8 * (params.parameter_count() + 2 * input);
    if bytes.len() != expected {
        return Err(err(
            bytes.len().min(expected),
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for t in params.tensors_mut() {
        t.iter_mut()
            .for_each(|v| *v = values.next().expect("length checked"));
    }
    let mean: Vec<f64> = values.by_ref().take(input).collect();
    let std: Vec<f64> = values.collect();
    if !params.is_finite() || mean.iter().chain(&std).any(|v| !v.is_finite()) {
        return Err(err(HEADER_LEN, "non-finite parameter".into()));
    }
    Ok(TrainedHead {
        params,
        standardizer: Standardizer { mean, std },
    })
}

pub fn write<W: Write>(head: &TrainedHead, mut w: W) -> Result<()> {
    w.write_all(&encode(head))?;
    Ok(())
}

pub fn read<R: Read>(mut r: R) -> Result<TrainedHead> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}
