//! `NNBG` model files.
//!
//! Little-endian: magic `NNBG`, version u16, the 32-byte topology digest, a
//! payload format byte (0 = float32, 1 = 8-bit), the number of dense blocks
//! u16, the payload length u32, the payload, then the output normalization as
//! a u16 width followed by `(lo f64, hi f64)` per dimension.
//!
//! A float32 payload holds, per dense block, `{index u16, rows u16, cols u16}`
//! and `rows * cols + rows` f32 values. An 8-bit payload is the serialized
//! [`QuantizedWeights`].

use super::{build_graph, dequantize, quantize, BlockGraph, BlockKind, GraphError, Normalizer, QuantizedWeights};
use super::TopologySpec;

pub const MODEL_MAGIC: &[u8; 4] = b"NNBG";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadFormat {
    Float32,
    Int8,
}

pub fn write_model(graph: &BlockGraph, normalizer: &Normalizer, format: PayloadFormat) -> Vec<u8> {
    let dense: Vec<usize> = (0..graph.blocks.len())
        .filter(|&i| matches!(graph.blocks[i].kind, BlockKind::Dense(_)))
        .collect();
    let payload = match format {
        PayloadFormat::Int8 => quantize(graph).to_bytes(),
        PayloadFormat::Float32 => {
            let mut p = Vec::new();
            for &i in &dense {
                let b = &graph.blocks[i];
                p.extend_from_slice(&(i as u16).to_le_bytes());
                p.extend_from_slice(&(b.out_width as u16).to_le_bytes());
                p.extend_from_slice(&(b.in_width as u16).to_le_bytes());
                for v in b.weights.iter().chain(&b.biases) {
                    p.extend_from_slice(&(*v as f32).to_le_bytes());
                }
            }
            p
        }
    };
    let mut out = Vec::with_capacity(45 + payload.len() + 16 * normalizer.width());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&graph.spec.digest());
    out.push(match format {
        PayloadFormat::Float32 => 0,
        PayloadFormat::Int8 => 1,
    });
    out.extend_from_slice(&(dense.len() as u16).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&(normalizer.width() as u16).to_le_bytes());
    for (lo, hi) in normalizer.lo.iter().zip(&normalizer.hi) {
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    out
}

/// Loads a model for `spec`, rejecting files written for another topology.
pub fn read_model(bytes: &[u8], spec: &TopologySpec) -> Result<(BlockGraph, Normalizer, PayloadFormat), GraphError> {
    let fmt = |m: &str| GraphError::Format(m.to_string());
    if bytes.len() < 45 || &bytes[..4] != MODEL_MAGIC {
        return Err(fmt("missing NNBG header"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(GraphError::Format(format!("unsupported version {version}")));
    }
    let digest: [u8; 32] = bytes[6..38].try_into().unwrap();
    if digest != spec.digest() {
        return Err(GraphError::Digest);
    }
    let format = match bytes[38] {
        0 => PayloadFormat::Float32,
        1 => PayloadFormat::Int8,
        other => return Err(GraphError::Format(format!("unknown payload format {other}"))),
    };
    let n_blocks = u16::from_le_bytes([bytes[39], bytes[40]]) as usize;
    let len = u32::from_le_bytes(bytes[41..45].try_into().unwrap()) as usize;
    let payload = bytes.get(45..45 + len).ok_or_else(|| fmt("truncated payload"))?;
    let graph = match format {
        PayloadFormat::Int8 => {
            let (q, used) = QuantizedWeights::from_bytes(payload, n_blocks, digest)?;
            if used != len {
                return Err(fmt("payload length mismatch"));
            }
            dequantize(&q, spec)?
        }
        PayloadFormat::Float32 => {
            let mut g = build_graph(spec)?;
            let mut pos = 0;
            for _ in 0..n_blocks {
                let h = payload.get(pos..pos + 6).ok_or_else(|| fmt("truncated payload"))?;
                let at = |o: usize| u16::from_le_bytes([h[o], h[o + 1]]) as usize;
                let (i, rows, cols) = (at(0), at(2), at(4));
                pos += 6;
                let b = g
                    .blocks
                    .get_mut(i)
                    .filter(|b| matches!(b.kind, BlockKind::Dense(_)) && b.out_width == rows && b.in_width == cols)
                    .ok_or_else(|| GraphError::Format(format!("block {i} does not match the topology")))?;
                let n = rows * cols + rows;
                let raw = payload.get(pos..pos + 4 * n).ok_or_else(|| fmt("truncated payload"))?;
                let vals: Vec<f64> = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect();
                b.weights.copy_from_slice(&vals[..rows * cols]);
                b.biases.copy_from_slice(&vals[rows * cols..]);
                pos += 4 * n;
            }
            if pos != len {
                return Err(fmt("payload length mismatch"));
            }
            g
        }
    };
    let mut pos = 45 + len;
    let width_bytes = bytes.get(pos..pos + 2).ok_or_else(|| fmt("missing normalization"))?;
    let width = u16::from_le_bytes([width_bytes[0], width_bytes[1]]) as usize;
    pos += 2;
    if bytes.len() != pos + 16 * width {
        return Err(fmt("normalization length mismatch"));
    }
    let mut normalizer = Normalizer {
        lo: Vec::with_capacity(width),
        hi: Vec::with_capacity(width),
    };
    for c in bytes[pos..].chunks_exact(16) {
        normalizer.lo.push(f64::from_le_bytes(c[..8].try_into().unwrap()));
        normalizer.hi.push(f64::from_le_bytes(c[8..].try_into().unwrap()));
    }
    Ok((graph, normalizer, format))
}
