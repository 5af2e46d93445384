//! Packet capture files.
//!
//! Little-endian throughout. A file starts with
//!
//! | bytes | field                       |
//! |-------|-----------------------------|
//! | 4     | magic `EEGC`                |
//! | 2     | format version (1)          |
//! | 2     | channel count               |
//!
//! followed by packets, each
//!
//! | bytes                    | field             |
//! |--------------------------|-------------------|
//! | 4                        | `u32` seq         |
//! | 4                        | `u32` first frame |
//! | 1                        | `u8` trigger flag |
//! | 1                        | `u8` frame count  |
//! | 2 × frames × channels    | `i16` ADC codes, frame-major |
//!
//! Codes are converted with the [`DeviceSpec`] supplied when reading.

use std::path::Path;

use eegchain_core::{DeviceSpec, Packet, SampleFrame};
use thiserror::Error;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EEGC";
pub const VERSION: u16 = 1;
const FILE_HEADER: usize = 8;
const PACKET_HEADER: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptureError {
    #[error("not a capture file")]
    BadMagic,
    #[error("unsupported capture version {0}")]
    UnknownVersion(u16),
    #[error("file has {found} channels, spec has {expected}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("truncated packet at byte {0}")]
    Truncated(usize),
    #[error("packet {seq}: {what} does not fit the format")]
    Overflow { seq: u32, what: &'static str },
    #[error("ADC codes wider than 16 bits cannot be stored")]
    WideCodes,
}

fn code_of(v: f64, spec: &DeviceSpec, seq: u32) -> std::result::Result<i16, CaptureError> {
    let code = spec.adc_code(v).map_err(|_| CaptureError::Overflow { seq, what: "a sample value" })?;
    i16::try_from(code).map_err(|_| CaptureError::Overflow { seq, what: "an ADC code" })
}

pub fn encode(packets: &[Packet], spec: &DeviceSpec) -> std::result::Result<Vec<u8>, CaptureError> {
    if spec.adc_bits > 16 {
        return Err(CaptureError::WideCodes);
    }
    let n_ch = spec.channel_count;
    let channels = u16::try_from(n_ch).map_err(|_| CaptureError::ChannelMismatch { expected: n_ch, found: 0 })?;
    let mut out = Vec::with_capacity(FILE_HEADER + packets.len() * (PACKET_HEADER + 2 * n_ch * spec.frames_per_packet));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    for p in packets {
        let first = u32::try_from(p.first_frame_index)
            .map_err(|_| CaptureError::Overflow { seq: p.seq, what: "the first frame index" })?;
        let count =
            u8::try_from(p.frames.len()).map_err(|_| CaptureError::Overflow { seq: p.seq, what: "the frame count" })?;
        out.extend_from_slice(&p.seq.to_le_bytes());
        out.extend_from_slice(&first.to_le_bytes());
        out.push(u8::from(p.trigger_flag));
        out.push(count);
        for f in &p.frames {
            if f.channel_values_uv.len() != n_ch {
                return Err(CaptureError::ChannelMismatch { expected: n_ch, found: f.channel_values_uv.len() });
            }
            for &v in &f.channel_values_uv {
                out.extend_from_slice(&code_of(v, spec, p.seq)?.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], spec: &DeviceSpec) -> std::result::Result<Vec<Packet>, CaptureError> {
    if bytes.len() < FILE_HEADER || bytes[..4] != MAGIC {
        return Err(CaptureError::BadMagic);
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = u16_at(4);
    if version != VERSION {
        return Err(CaptureError::UnknownVersion(version));
    }
    let n_ch = usize::from(u16_at(6));
    if n_ch != spec.channel_count {
        return Err(CaptureError::ChannelMismatch { expected: spec.channel_count, found: n_ch });
    }
    let mut packets = Vec::new();
    let mut pos = FILE_HEADER;
    while pos < bytes.len() {
        if pos + PACKET_HEADER > bytes.len() {
            return Err(CaptureError::Truncated(pos));
        }
        let seq = u32_at(pos);
        let first = u32_at(pos + 4) as usize;
        let trigger_flag = bytes[pos + 8] != 0;
        let count = usize::from(bytes[pos + 9]);
        let body = pos + PACKET_HEADER;
        let end = body + 2 * count * n_ch;
        if end > bytes.len() {
            return Err(CaptureError::Truncated(pos));
        }
        let frames = (0..count)
            .map(|k| SampleFrame {
                frame_index: first + k,
                channel_values_uv: (0..n_ch)
                    .map(|c| {
                        let i = body + 2 * (k * n_ch + c);
                        spec.code_to_uv(i64::from(i16::from_le_bytes([bytes[i], bytes[i + 1]])))
                    })
                    .collect(),
            })
            .collect();
        packets.push(Packet { seq, first_frame_index: first, frames, trigger_flag });
        pos = end;
    }
    Ok(packets)
}

pub fn write_capture(packets: &[Packet], spec: &DeviceSpec, path: &Path) -> Result<()> {
    let bytes = encode(packets, spec).map_err(|e| Error::Format { path: path.to_owned(), message: e.to_string() })?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_capture(path: &Path, spec: &DeviceSpec) -> Result<Vec<Packet>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, spec).map_err(|e| Error::Format { path: path.to_owned(), message: e.to_string() })
}
