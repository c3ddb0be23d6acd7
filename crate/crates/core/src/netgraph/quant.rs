use super::{build_graph, BlockGraph, BlockKind, GraphError, TopologySpec};

/// Bytes of the fixed header in front of every quantized block:
/// `{index u16, rows u16, cols u16, zero_point u8, flags u8, scale f32, offset f32}`.
pub const QUANT_BLOCK_HEADER: usize = 16;
const FLAG_CONSTANT: u8 = 1;

/// 8-bit affine codes of one dense block's weights (row-major) followed by
/// its biases. A value decodes as `scale * (code - zero_point)`; a block whose
/// values are all equal has scale 0 and decodes every code to `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedBlock {
    pub block: usize,
    pub rows: usize,
    pub cols: usize,
    pub scale: f32,
    pub zero_point: u8,
    pub offset: f32,
    pub codes: Vec<u8>,
}

impl QuantizedBlock {
    fn encode(block: usize, rows: usize, cols: usize, values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let constant = |v: f64| QuantizedBlock {
            block,
            rows,
            cols,
            scale: 0.0,
            zero_point: 0,
            offset: v as f32,
            codes: vec![0; values.len()],
        };
        if values.is_empty() || min == max {
            return constant(if values.is_empty() { 0.0 } else { min });
        }
        // the range always holds zero so that zero is exactly representable
        let (lo, hi) = (min.min(0.0), max.max(0.0));
        let scale = ((hi - lo) / 255.0) as f32;
        if scale == 0.0 {
            return constant(min);
        }
        let s = scale as f64;
        let zp = (-lo / s).round().clamp(0.0, 255.0);
        let codes = values
            .iter()
            .map(|v| (v / s + zp).round().clamp(0.0, 255.0) as u8)
            .collect();
        QuantizedBlock {
            block,
            rows,
            cols,
            scale,
            zero_point: zp as u8,
            offset: 0.0,
            codes,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.scale == 0.0
    }

    pub fn decode(&self) -> Vec<f64> {
        if self.is_constant() {
            return vec![self.offset as f64; self.codes.len()];
        }
        let s = self.scale as f64;
        let zp = self.zero_point as f64;
        self.codes.iter().map(|&c| s * (c as f64 - zp)).collect()
    }

    pub fn byte_size(&self) -> usize {
        QUANT_BLOCK_HEADER + self.codes.len()
    }
}

/// Quantized weights of every dense block of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedWeights {
    pub digest: [u8; 32],
    pub blocks: Vec<QuantizedBlock>,
}

impl QuantizedWeights {
    /// Serialized size: one header per block plus one byte per weight and bias.
    pub fn byte_size(&self) -> usize {
        self.blocks.iter().map(QuantizedBlock::byte_size).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_size());
        for b in &self.blocks {
            out.extend_from_slice(&(b.block as u16).to_le_bytes());
            out.extend_from_slice(&(b.rows as u16).to_le_bytes());
            out.extend_from_slice(&(b.cols as u16).to_le_bytes());
            out.push(b.zero_point);
            out.push(if b.is_constant() { FLAG_CONSTANT } else { 0 });
            out.extend_from_slice(&b.scale.to_le_bytes());
            out.extend_from_slice(&b.offset.to_le_bytes());
            out.extend_from_slice(&b.codes);
        }
        out
    }

    /// Parses `n_blocks` blocks; returns them with the number of bytes read.
    pub fn from_bytes(bytes: &[u8], n_blocks: usize, digest: [u8; 32]) -> Result<(Self, usize), GraphError> {
        let mut pos = 0;
        let mut blocks = Vec::with_capacity(n_blocks);
        let short = || GraphError::Format("truncated quantized payload".into());
        for _ in 0..n_blocks {
            let h = bytes.get(pos..pos + QUANT_BLOCK_HEADER).ok_or_else(short)?;
            let u16_at = |o: usize| u16::from_le_bytes([h[o], h[o + 1]]) as usize;
            let (block, rows, cols) = (u16_at(0), u16_at(2), u16_at(4));
            let zero_point = h[6];
            let flags = h[7];
            let scale = f32::from_le_bytes(h[8..12].try_into().unwrap());
            let offset = f32::from_le_bytes(h[12..16].try_into().unwrap());
            if (flags & FLAG_CONSTANT != 0) != (scale == 0.0) {
                return Err(GraphError::Format("inconsistent constant flag".into()));
            }
            pos += QUANT_BLOCK_HEADER;
            let n = rows * cols + rows;
            let codes = bytes.get(pos..pos + n).ok_or_else(short)?.to_vec();
            pos += n;
            blocks.push(QuantizedBlock {
                block,
                rows,
                cols,
                scale,
                zero_point,
                offset,
                codes,
            });
        }
        Ok((QuantizedWeights { digest, blocks }, pos))
    }
}

/// Per-block affine 8-bit quantization of every dense block.
pub fn quantize(graph: &BlockGraph) -> QuantizedWeights {
    let blocks = graph
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| matches!(b.kind, BlockKind::Dense(_)))
        .map(|(i, b)| {
            let values: Vec<f64> = b.weights.iter().chain(&b.biases).copied().collect();
            QuantizedBlock::encode(i, b.out_width, b.in_width, &values)
        })
        .collect();
    QuantizedWeights {
        digest: graph.spec.digest(),
        blocks,
    }
}

/// Rebuilds a runnable graph from quantized weights and their topology.
pub fn dequantize(q: &QuantizedWeights, spec: &TopologySpec) -> Result<BlockGraph, GraphError> {
    if q.digest != spec.digest() {
        return Err(GraphError::Digest);
    }
    let mut graph = build_graph(spec)?;
    let dense: Vec<usize> = (0..graph.blocks.len())
        .filter(|&i| matches!(graph.blocks[i].kind, BlockKind::Dense(_)))
        .collect();
    if dense.len() != q.blocks.len() {
        return Err(GraphError::Format(format!(
            "{} quantized blocks for {} dense blocks",
            q.blocks.len(),
            dense.len()
        )));
    }
    for (qb, &i) in q.blocks.iter().zip(&dense) {
        let b = &mut graph.blocks[i];
        if qb.block != i || qb.rows != b.out_width || qb.cols != b.in_width {
            return Err(GraphError::Format(format!("block {} shape does not match `{}`", qb.block, b.name)));
        }
        let v = qb.decode();
        let nw = b.weights.len();
        b.weights.copy_from_slice(&v[..nw]);
        b.biases.copy_from_slice(&v[nw..]);
    }
    Ok(graph)
}
