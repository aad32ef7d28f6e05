//! Raw waveform dump: a 32-byte header followed by six little-endian `f64`
//! arrays in the order `P1, Q1, P2, Q2, P3, Q3`.
//!
//! Header layout: 8-byte magic, `u32` version, `u32` samples per cycle,
//! `f64` period, 8 reserved zero bytes.

use std::io::{Read, Write};

use super::probe::Waveforms;
use crate::error::{Error, Result};

pub const WAVEFORM_MAGIC: [u8; 8] = *b"STNWAVE\0";
pub const WAVEFORM_VERSION: u32 = 1;
pub const WAVEFORM_HEADER_LEN: usize = 32;

pub fn write_waveforms<W: Write>(mut out: W, waveforms: &Waveforms) -> Result<()> {
    if !waveforms.is_consistent() {
        return Err(Error::Data("waveform signals differ in length".into()));
    }
    let samples =
        u32::try_from(waveforms.samples()).map_err(|_| Error::Data("too many samples".into()))?;
    let mut header = [0u8; WAVEFORM_HEADER_LEN];
    header[..8].copy_from_slice(&WAVEFORM_MAGIC);
    header[8..12].copy_from_slice(&WAVEFORM_VERSION.to_le_bytes());
    header[12..16].copy_from_slice(&samples.to_le_bytes());
    header[16..24].copy_from_slice(&waveforms.period.to_le_bytes());
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(6 * 8 * waveforms.samples());
    for signal in waveforms.signals() {
        for v in signal {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_waveforms<R: Read>(mut input: R) -> Result<Waveforms> {
    let mut header = [0u8; WAVEFORM_HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..8] != WAVEFORM_MAGIC {
        return Err(Error::Data("not a waveform file".into()));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != WAVEFORM_VERSION {
        return Err(Error::Data(format!(
            "unsupported waveform version {version}"
        )));
    }
    let samples = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let period = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut body = vec![0u8; 6 * 8 * samples];
    input.read_exact(&mut body)?;
    let mut signals = body.chunks_exact(8 * samples.max(1)).map(|chunk| {
        chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect::<Vec<_>>()
    });
    let mut next = || signals.next().unwrap_or_default();
    Ok(Waveforms {
        period,
        p1: next(),
        q1: next(),
        p2: next(),
        q2: next(),
        p3: next(),
        q3: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let s = |k: f64| {
            (0..64)
                .map(|i| (i as f64 * 0.1 + k).sin() * 1e4)
                .collect::<Vec<_>>()
        };
        let w = Waveforms {
            period: 0.93,
            p1: s(0.0),
            q1: s(1.0),
            p2: s(2.0),
            q2: s(3.0),
            p3: s(4.0),
            q3: s(5.0),
        };
        let mut bytes = Vec::new();
        write_waveforms(&mut bytes, &w).unwrap();
        assert_eq!(bytes.len(), WAVEFORM_HEADER_LEN + 6 * 64 * 8);
        assert_eq!(read_waveforms(bytes.as_slice()).unwrap(), w);
    }

    #[test]
    fn rejects_foreign_files() {
        let bytes = vec![0u8; 64];
        assert!(read_waveforms(bytes.as_slice()).is_err());
    }
}
