//! `AFRM` acoustic parameter files.
//!
//! Little-endian header `{magic "AFRM", version u16, sample_rate u32, order u16,
//! frame_count u32}` followed by `frame_count` records of `order + 3` f32
//! values: the LSFs, F0, power in dB and the voicing boundary.

use super::{AcousticFrame, VocoderError};

pub const AFRM_MAGIC: &[u8; 4] = b"AFRM";
pub const AFRM_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AfrmHeader {
    pub version: u16,
    pub sample_rate: u32,
    pub order: u16,
    pub frame_count: u32,
}

pub fn write_afrm(frames: &[AcousticFrame], sample_rate: u32, order: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + frames.len() * (order + 3) * 4);
    out.extend_from_slice(AFRM_MAGIC);
    out.extend_from_slice(&AFRM_VERSION.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(order as u16).to_le_bytes());
    out.extend_from_slice(&(frames.len() as u32).to_le_bytes());
    for f in frames {
        debug_assert_eq!(f.lsf.len(), order);
        for v in f.lsf.iter().chain([&f.f0, &f.power_db, &f.voicing_boundary]) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

/// Reads an `AFRM` file. A frame is voiced unless its F0 equals `clamp_f0`.
pub fn read_afrm(bytes: &[u8], clamp_f0: f64) -> Result<(AfrmHeader, Vec<AcousticFrame>), VocoderError> {
    let fmt = |m: String| VocoderError::Format(m);
    if bytes.len() < HEADER_LEN || &bytes[..4] != AFRM_MAGIC {
        return Err(fmt("missing AFRM header".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let header = AfrmHeader {
        version: u16_at(4),
        sample_rate: u32_at(6),
        order: u16_at(10),
        frame_count: u32_at(12),
    };
    if header.version != AFRM_VERSION {
        return Err(fmt(format!("unsupported version {}", header.version)));
    }
    let width = header.order as usize + 3;
    let expected = HEADER_LEN + header.frame_count as usize * width * 4;
    if bytes.len() != expected {
        return Err(fmt(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let order = header.order as usize;
    let frames = values
        .chunks_exact(width)
        .map(|r| AcousticFrame {
            lsf: r[..order].to_vec(),
            f0: r[order],
            power_db: r[order + 1],
            voicing_boundary: r[order + 2],
            voiced: r[order] != clamp_f0 as f32 as f64,
        })
        .collect();
    Ok((header, frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_and_round_trip() {
        let frames = vec![
            AcousticFrame { lsf: vec![0.5, 1.0], f0: 120.0, power_db: -20.0, voicing_boundary: 4000.0, voiced: true },
            AcousticFrame { lsf: vec![0.25, 2.0], f0: 400.0, power_db: -50.0, voicing_boundary: 0.0, voiced: false },
        ];
        let bytes = write_afrm(&frames, 16000, 2);
        assert_eq!(&bytes[..4], b"AFRM");
        assert_eq!(bytes.len(), 16 + 2 * 5 * 4);
        let (h, back) = read_afrm(&bytes, 400.0).unwrap();
        assert_eq!(h, AfrmHeader { version: 1, sample_rate: 16000, order: 2, frame_count: 2 });
        assert_eq!(back, frames);
        assert!(read_afrm(&bytes[..20], 400.0).is_err());
        assert!(read_afrm(b"RIFF0000000000000000", 400.0).is_err());
    }
}
