use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Activation, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Input,
    Output,
    Dense,
    Concat,
    DelayLine,
    RecurrentBuffer,
    Transform,
}

/// One `[[block]]` table. Which optional fields are required depends on the
/// kind: `width` for inputs, outputs and dense blocks, `inputs` and
/// `activation` for dense blocks, `depth` for delay lines and buffers,
/// `function` (`identity` or `slice` with `offset` and `len`) for transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub name: String,
    pub kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub teacher_forced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
}

impl BlockSpec {
    fn bare(name: &str, kind: KindName) -> Self {
        BlockSpec {
            name: name.to_string(),
            kind,
            width: None,
            inputs: None,
            activation: None,
            depth: None,
            teacher_forced: false,
            function: None,
            offset: None,
            len: None,
        }
    }
}

/// One `[[edge]]` table: `from`'s output feeds port `port` of `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub port: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub recurrent: bool,
}

impl EdgeSpec {
    pub fn label(&self) -> String {
        format!("{}->{}:{}", self.from, self.to, self.port)
    }
}

/// Declarative graph description, read from and written to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    /// Seed of the weight initialization.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "block")]
    pub blocks: Vec<BlockSpec>,
    #[serde(default, rename = "edge")]
    pub edges: Vec<EdgeSpec>,
}

impl TopologySpec {
    pub fn new(seed: u64) -> Self {
        TopologySpec {
            seed,
            blocks: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        toml::from_str(text).map_err(|e| GraphError::Topology(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("topology serializes")
    }

    /// SHA-256 of the canonical text with the seed zeroed: identifies the
    /// structure independently of the initialization.
    pub fn digest(&self) -> [u8; 32] {
        let mut canon = self.clone();
        canon.seed = 0;
        Sha256::digest(canon.to_text().as_bytes()).into()
    }

    pub fn input(&mut self, name: &str, width: usize) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::Input);
        b.width = Some(width);
        self.blocks.push(b);
        self
    }

    pub fn output(&mut self, name: &str, width: usize) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::Output);
        b.width = Some(width);
        self.blocks.push(b);
        self
    }

    pub fn dense(&mut self, name: &str, inputs: usize, width: usize, activation: Activation) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::Dense);
        b.inputs = Some(inputs);
        b.width = Some(width);
        b.activation = Some(activation);
        self.blocks.push(b);
        self
    }

    pub fn concat(&mut self, name: &str) -> &mut Self {
        self.blocks.push(BlockSpec::bare(name, KindName::Concat));
        self
    }

    pub fn delay_line(&mut self, name: &str, depth: usize) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::DelayLine);
        b.depth = Some(depth);
        self.blocks.push(b);
        self
    }

    pub fn recurrent_buffer(&mut self, name: &str, depth: usize, teacher_forced: bool) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::RecurrentBuffer);
        b.depth = Some(depth);
        b.teacher_forced = teacher_forced;
        self.blocks.push(b);
        self
    }

    pub fn identity(&mut self, name: &str) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::Transform);
        b.function = Some("identity".into());
        self.blocks.push(b);
        self
    }

    pub fn slice(&mut self, name: &str, offset: usize, len: usize) -> &mut Self {
        let mut b = BlockSpec::bare(name, KindName::Transform);
        b.function = Some("slice".into());
        b.offset = Some(offset);
        b.len = Some(len);
        self.blocks.push(b);
        self
    }

    pub fn edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.edge_port(from, to, 0)
    }

    pub fn edge_port(&mut self, from: &str, to: &str, port: usize) -> &mut Self {
        self.edges.push(EdgeSpec {
            from: from.into(),
            to: to.into(),
            port,
            recurrent: false,
        });
        self
    }

    pub fn recurrent_edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.edges.push(EdgeSpec {
            from: from.into(),
            to: to.into(),
            port: 0,
            recurrent: true,
        });
        self
    }
}
