//! Binary activation container (`SPAC`) and length-prefixed socket frames.
//!
//! Container layout, all little-endian:
//!
//! ```text
//! offset 0   magic  "SPAC"
//! offset 4   u16    version (1)
//! offset 6   u16    flags (bit 0: structured sequence)
//! offset 8   u32    T, number of time steps
//! offset 12  u32    D, row width
//! offset 16  T*D f32, row-major by time step
//! ```
//!
//! A frame is a `u32` payload length in bytes followed by that many bytes of
//! `f32` values; a frame carries one activation row.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SPAC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const FLAG_STRUCTURED: u16 = 1;

/// In-memory activation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationContainer {
    pub flags: u16,
    width: usize,
    data: Vec<f32>,
}

impl ActivationContainer {
    pub fn new(flags: u16, width: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(Error::ShapeMismatch {
                context: "container data",
                expected: width.max(1) * (data.len() / width.max(1)),
                actual: data.len(),
            });
        }
        Ok(Self { flags, width, data })
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn is_structured(&self) -> bool {
        self.flags & FLAG_STRUCTURED != 0
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    /// Rows widened to `f64`.
    pub fn rows_f64(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.data
            .chunks_exact(self.width)
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.flags.to_le_bytes());
        out.extend_from_slice(&(self.steps() as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |offset: usize, reason: String| Error::Format {
            format: "SPAC container",
            offset: offset as u64,
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(err(bytes.len(), format!("header needs {HEADER_LEN} bytes")));
        }
        if bytes[0..4] != MAGIC {
            return Err(err(0, "bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(err(4, format!("unsupported version {version}")));
        }
        let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
        let steps = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let width = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        if width == 0 {
            return Err(err(12, "zero width".into()));
        }
        let expected = steps
            .checked_mul(width)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| err(8, "size overflow".into()))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            let at = HEADER_LEN + payload.len().min(expected);
            return Err(err(
                at,
                format!(
                    "payload has {} bytes, header implies {expected}",
                    payload.len()
                ),
            ));
        }
        let mut data = Vec::with_capacity(steps * width);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            if !v.is_finite() {
                return Err(err(HEADER_LEN + 4 * i, "non-finite activation".into()));
            }
            data.push(v);
        }
        Ok(Self { flags, width, data })
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Writes one row as a length-prefixed frame.
pub fn write_frame<W: Write>(mut w: W, row: &[f32]) -> Result<()> {
    let len = u32::try_from(row.len() * 4).map_err(|_| Error::Format {
        format: "frame",
        offset: 0,
        reason: "row too large".into(),
    })?;
    let mut buf = Vec::with_capacity(4 + row.len() * 4);
    buf.extend_from_slice(&len.to_le_bytes());
    for v in row {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Iterator over frames of a byte stream; ends cleanly at EOF between
/// frames.
pub struct FrameReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    /// Reads the next frame, `None` at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<Vec<f32>>> {
        let mut len_buf = [0u8; 4];
        match read_exact_or_eof(&mut self.inner, &mut len_buf) {
            Ok(false) => return Ok(None),
            Ok(true) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(self.truncated("frame length"))
            }
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_le_bytes(len_buf) as usize;
        if !len.is_multiple_of(4) {
            return Err(Error::Format {
                format: "frame",
                offset: self.offset,
                reason: format!("payload length {len} is not a multiple of 4"),
            });
        }
        let start = self.offset;
        self.offset += 4;
        let mut payload = vec![0u8; len];
        if let Err(e) = self.inner.read_exact(&mut payload) {
            return Err(if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::Format {
                    format: "frame",
                    offset: start,
                    reason: "truncated payload".into(),
                }
            } else {
                e.into()
            });
        }
        self.offset += len as u64;
        Ok(Some(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        ))
    }

    fn truncated(&self, what: &str) -> Error {
        Error::Format {
            format: "frame",
            offset: self.offset,
            reason: format!("truncated {what}"),
        }
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<Vec<f32>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// `Ok(false)` if the reader is at EOF before the first byte.
fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let c = ActivationContainer::new(FLAG_STRUCTURED, 2, vec![1.0, -2.0, 0.5, 4.0, 0.0, 1.5])
            .unwrap();
        let b = c.to_bytes();
        assert_eq!(&b[0..4], b"SPAC");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..8], &[1, 0]);
        assert_eq!(&b[8..12], &[3, 0, 0, 0]);
        assert_eq!(&b[12..16], &[2, 0, 0, 0]);
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 16 + 6 * 4);
        assert_eq!(ActivationContainer::from_bytes(&b).unwrap(), c);
    }

    #[test]
    fn malformed_inputs_name_offsets() {
        let c = ActivationContainer::new(0, 2, vec![0.0; 4]).unwrap();
        let mut b = c.to_bytes();
        b.pop();
        match ActivationContainer::from_bytes(&b) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16 + 15),
            other => panic!("{other:?}"),
        }
        let mut bad = c.to_bytes();
        bad[0] = b'X';
        assert!(matches!(
            ActivationContainer::from_bytes(&bad),
            Err(Error::Format { offset: 0, .. })
        ));
        let mut nan = c.to_bytes();
        nan[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            ActivationContainer::from_bytes(&nan),
            Err(Error::Format { offset: 20, .. })
        ));
        assert!(ActivationContainer::from_bytes(&[0u8; 5]).is_err());
    }

    #[test]
    fn frames_round_trip_and_detect_truncation() {
        let mut buf = Vec::new();
        write_frame(&mut buf, &[1.0, 2.0, 3.0]).unwrap();
        write_frame(&mut buf, &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(buf.len(), 2 * (4 + 12));
        let frames: Vec<_> = FrameReader::new(&buf[..]).collect::<Result<_>>().unwrap();
        assert_eq!(frames, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let cut = &buf[..buf.len() - 2];
        let results: Vec<_> = FrameReader::new(cut).collect();
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(Error::Format { offset: 16, .. })));
    }
}
