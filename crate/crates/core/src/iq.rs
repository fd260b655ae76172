//! Binary IQ captures.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `b"SNIQ"`               |
//! | 4      | 2    | version (`1`)                 |
//! | 6      | 2    | layout tag (`0` = interleaved I,Q) |
//! | 8      | 8    | sample rate, Hz (`f64`)       |
//! | 16     | 8    | center frequency, Hz (`f64`)  |
//! | 24     | 8    | sample count (`u64`)          |
//! | 32     | 8·n  | payload, `f32` I then `f32` Q |

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;
use crate::waveform::TimeSignal;

pub const MAGIC: [u8; 4] = *b"SNIQ";
pub const VERSION: u16 = 1;
pub const LAYOUT_INTERLEAVED: u16 = 0;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum IqError {
    #[error("not an IQ capture (magic {found:?})")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported IQ capture version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported IQ sample layout {0}")]
    UnsupportedLayout(u16),

    #[error("truncated header: {0} of {HEADER_LEN} bytes")]
    TruncatedHeader(usize),

    #[error("payload length mismatch: header declares {expected} bytes, found {actual}")]
    PayloadLengthMismatch { expected: u64, actual: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IqError {
    /// Stable numeric code per failure kind.
    pub fn code(&self) -> u8 {
        match self {
            Self::BadMagic { .. } => 1,
            Self::UnsupportedVersion(_) => 2,
            Self::UnsupportedLayout(_) => 3,
            Self::TruncatedHeader(_) => 4,
            Self::PayloadLengthMismatch { .. } => 5,
            Self::Io(_) => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqCapture {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub samples: Vec<Complex<f32>>,
}

impl IqCapture {
    /// Quantizes a signal to 32-bit floats.
    pub fn from_signal<T: Real>(signal: &TimeSignal<T>, center_freq_hz: f64) -> Self {
        Self {
            sample_rate_hz: signal.sample_rate_hz,
            center_freq_hz,
            samples: signal
                .samples
                .iter()
                .map(|z| Complex::new(z.re.as_f64() as f32, z.im.as_f64() as f32))
                .collect(),
        }
    }

    pub fn to_signal<T: Real>(&self) -> TimeSignal<T> {
        TimeSignal::new(
            self.samples
                .iter()
                .map(|z| Complex::new(T::of(z.re as f64), T::of(z.im as f64)))
                .collect(),
            self.sample_rate_hz,
        )
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), IqError> {
        w.write_all(&MAGIC)?;
        w.write_u16::<LittleEndian>(VERSION)?;
        w.write_u16::<LittleEndian>(LAYOUT_INTERLEAVED)?;
        w.write_f64::<LittleEndian>(self.sample_rate_hz)?;
        w.write_f64::<LittleEndian>(self.center_freq_hz)?;
        w.write_u64::<LittleEndian>(self.samples.len() as u64)?;
        let mut payload = Vec::with_capacity(8 * self.samples.len());
        for z in &self.samples {
            payload.write_f32::<LittleEndian>(z.re)?;
            payload.write_f32::<LittleEndian>(z.im)?;
        }
        w.write_all(&payload)?;
        Ok(())
    }

    /// Reads a whole capture; header and payload length are checked before
    /// any sample is decoded.
    pub fn read_from(mut r: impl Read) -> Result<Self, IqError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(IqError::BadMagic {
                    found: bytes[..4].try_into().expect("4 bytes"),
                });
            }
            return Err(IqError::TruncatedHeader(bytes.len()));
        }
        let mut h = &bytes[..HEADER_LEN];
        let mut magic = [0u8; 4];
        h.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(IqError::BadMagic { found: magic });
        }
        let version = h.read_u16::<LittleEndian>()?;
        if version != VERSION {
            return Err(IqError::UnsupportedVersion(version));
        }
        let layout = h.read_u16::<LittleEndian>()?;
        if layout != LAYOUT_INTERLEAVED {
            return Err(IqError::UnsupportedLayout(layout));
        }
        let sample_rate_hz = h.read_f64::<LittleEndian>()?;
        let center_freq_hz = h.read_f64::<LittleEndian>()?;
        let count = h.read_u64::<LittleEndian>()?;

        let payload = &bytes[HEADER_LEN..];
        let expected = count.saturating_mul(8);
        if payload.len() as u64 != expected {
            return Err(IqError::PayloadLengthMismatch {
                expected,
                actual: payload.len() as u64,
            });
        }
        let samples = payload
            .chunks_exact(8)
            .map(|c| {
                let mut c = c;
                let re = c.read_f32::<LittleEndian>().expect("8-byte chunk");
                let im = c.read_f32::<LittleEndian>().expect("8-byte chunk");
                Complex::new(re, im)
            })
            .collect();
        Ok(Self {
            sample_rate_hz,
            center_freq_hz,
            samples,
        })
    }
}

pub fn write_iq(path: impl AsRef<Path>, capture: &IqCapture) -> Result<(), IqError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    capture.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<IqCapture, IqError> {
    IqCapture::read_from(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capture(n: usize) -> IqCapture {
        IqCapture {
            sample_rate_hz: 125e6,
            center_freq_hz: 77e9,
            samples: (0..n)
                .map(|i| Complex::new(i as f32 * 0.5 - 3.0, f32::MIN_POSITIVE * i as f32))
                .collect(),
        }
    }

    fn encode(c: &IqCapture) -> Vec<u8> {
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let buf = encode(&capture(3));
        assert_eq!(buf.len(), HEADER_LEN + 24);
        assert_eq!(&buf[..4], b"SNIQ");
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..16], &125e6f64.to_le_bytes());
        assert_eq!(&buf[24..32], &3u64.to_le_bytes());
        assert_eq!(&buf[32..36], &(-3.0f32).to_le_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = capture(1000);
        let back = IqCapture::read_from(encode(&c).as_slice()).unwrap();
        assert_eq!(back.sample_rate_hz.to_bits(), c.sample_rate_hz.to_bits());
        for (a, b) in back.samples.iter().zip(&c.samples) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back, c);
    }

    #[test]
    fn truncated_payload() {
        let buf = encode(&capture(10));
        let err = IqCapture::read_from(&buf[..buf.len() - 3]).unwrap_err();
        assert!(err.to_string().contains("payload length mismatch"));
        assert_eq!(err.code(), 5);
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut buf = encode(&capture(2));
        buf.push(0);
        assert!(matches!(
            IqCapture::read_from(buf.as_slice()),
            Err(IqError::PayloadLengthMismatch { expected: 16, actual: 17 })
        ));
    }

    #[test]
    fn distinct_header_errors() {
        let good = encode(&capture(1));
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let mut bad_version = good.clone();
        bad_version[4] = 2;
        let mut bad_layout = good.clone();
        bad_layout[6] = 1;
        let codes: Vec<u8> = [bad_magic, bad_version, bad_layout, good[..20].to_vec()]
            .iter()
            .map(|b| IqCapture::read_from(b.as_slice()).unwrap_err().code())
            .collect();
        assert_eq!(codes, vec![1, 2, 3, 4]);
    }

    #[test]
    fn signal_conversion() {
        let sig = TimeSignal::new(vec![Complex::new(0.1f64, -0.2)], 1e6);
        let c = IqCapture::from_signal(&sig, 0.0);
        let back: TimeSignal<f64> = c.to_signal();
        assert_eq!(back.sample_rate_hz, 1e6);
        assert!((back.samples[0] - sig.samples[0]).norm() < 1e-7);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let c = capture(17);
        write_iq(&path, &c).unwrap();
        assert_eq!(read_iq(&path).unwrap(), c);
    }
}
