//! Minimal mono 16-bit PCM RIFF writer.
//!
//! The simulation is dimensionless (radians per sample), so the sample rate
//! stored in the header is presentation metadata only. Samples are peak
//! normalized to -1 dBFS; an all-zero signal is written as silence.

use std::io::{self, Write};

/// Linear gain of -1 dBFS, the export headroom.
const PEAK_GAIN: f64 = 0.8912509381337456; // 10^(-1/20)

/// Writes `samples` as a mono 16-bit PCM RIFF stream.
pub fn write_wav<W: Write>(mut w: W, samples: &[f64], sample_rate: u32) -> io::Result<()> {
    let data_len = (samples.len() * 2) as u32;

    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVE")?;

    w.write_all(b"fmt ")?;
    w.write_all(&16u32.to_le_bytes())?; // PCM chunk size
    w.write_all(&1u16.to_le_bytes())?; // PCM format tag
    w.write_all(&1u16.to_le_bytes())?; // channels
    w.write_all(&sample_rate.to_le_bytes())?;
    w.write_all(&(sample_rate * 2).to_le_bytes())?; // bytes per second
    w.write_all(&2u16.to_le_bytes())?; // block align
    w.write_all(&16u16.to_le_bytes())?; // bits per sample

    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let gain = if peak > 0.0 { PEAK_GAIN / peak } else { 0.0 };
    for s in samples {
        let v = (s * gain * f64::from(i16::MAX)).round() as i16;
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
