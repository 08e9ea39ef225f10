//! Declarative search-space definition and exact cardinalities.
//!
//! A search space stacks `L_c` cell layers. Each layer picks one of `N_c`
//! cells and one of `P_c` sampling modes. A cell holds `L_p` parallel
//! pipelines of `L_B` blocks (each block: one of `N_B` operations with one of
//! `P_B` options) followed by a reduction part that merges the pipelines
//! (`P_r` merge modes) with `N_r` reduction blocks placed either on each
//! of `L_r` branches before the merge or once after it.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::evaluation::TrainingBudget;
use crate::graph::TensorShape;
use crate::optimizer::EaParams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("`{key}` must not be empty")]
    Empty { key: &'static str },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

impl ConfigError {
    pub fn key(&self) -> &'static str {
        match self {
            ConfigError::Empty { key } | ConfigError::Invalid { key, .. } => key,
        }
    }

    fn invalid(key: &'static str, reason: impl ToString) -> Self {
        ConfigError::Invalid {
            key,
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpKind {
    #[serde(rename = "conv2d")]
    Conv2d,
    #[serde(rename = "depthwise_sep_conv2d")]
    DepthwiseSepConv2d,
    #[serde(rename = "maxpool")]
    MaxPool,
    #[serde(rename = "identity")]
    Identity,
}

/// A square, padded operation. Identity carries kernel 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Operation {
    kind: OpKind,
    kernel: u32,
}

impl Operation {
    pub fn new(kind: OpKind, kernel: u32) -> Result<Self, ConfigError> {
        if kind == OpKind::Identity {
            return Ok(Self::identity());
        }
        if kernel == 0 {
            return Err(ConfigError::invalid("kernel", "kernel must be >= 1"));
        }
        Ok(Self { kind, kernel })
    }

    pub const fn identity() -> Self {
        Self {
            kind: OpKind::Identity,
            kernel: 1,
        }
    }

    pub const fn conv2d(kernel: u32) -> Self {
        Self {
            kind: OpKind::Conv2d,
            kernel,
        }
    }

    pub const fn depthwise_sep_conv2d(kernel: u32) -> Self {
        Self {
            kind: OpKind::DepthwiseSepConv2d,
            kernel,
        }
    }

    pub const fn maxpool(kernel: u32) -> Self {
        Self {
            kind: OpKind::MaxPool,
            kernel,
        }
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn kernel(&self) -> u32 {
        self.kernel
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockDef {
    pub name: String,
    pub op: Operation,
}

impl BlockDef {
    pub fn new(name: impl Into<String>, op: Operation) -> Self {
        Self {
            name: name.into(),
            op,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    None,
    ReluBefore,
    ReluAfter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct BlockOption {
    skip: bool,
    batch_norm: bool,
    activation: Activation,
}

impl BlockOption {
    /// A skipped block is pure identity, so `skip` overrides the other flags.
    pub fn new(skip: bool, batch_norm: bool, activation: Activation) -> Self {
        if skip {
            Self::skip()
        } else {
            Self {
                skip,
                batch_norm,
                activation,
            }
        }
    }

    pub const fn skip() -> Self {
        Self {
            skip: true,
            batch_norm: false,
            activation: Activation::None,
        }
    }

    pub fn is_skip(&self) -> bool {
        self.skip
    }

    pub fn batch_norm(&self) -> bool {
        self.batch_norm
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    Add,
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Same,
    Down,
    Up,
}

impl SamplingMode {
    /// Channel count a cell must emit under this mode.
    pub fn target_channels(self, c_in: u64) -> u64 {
        match self {
            SamplingMode::Same => c_in,
            SamplingMode::Down => c_in * 2,
            SamplingMode::Up => core::cmp::max(1, c_in / 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadActivation {
    None,
    Relu,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HeadLayer {
    Dense {
        units: u64,
        activation: HeadActivation,
    },
    Dropout {
        rate: f64,
    },
}

/// Layer counts as supplied by the user. `l_r` defaults to `l_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerCounts {
    pub l_c: usize,
    pub n_c: usize,
    pub l_p: usize,
    pub l_b: usize,
    pub l_r: Option<usize>,
    pub allow_mismatched_l_r: bool,
}

/// Hierarchy sizes. The `n_*`/`p_*` catalog counts are always derived from
/// the catalog lengths of a [`SearchConfig`]; building one by hand is only
/// meant for cardinality arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceParams {
    pub l_c: usize,
    pub n_c: usize,
    pub p_c: usize,
    pub l_p: usize,
    pub l_b: usize,
    pub n_b: usize,
    pub p_b: usize,
    pub l_r: usize,
    pub n_r: usize,
    pub p_r: usize,
}

fn pow(base: usize, exp: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), exp)
}

impl SpaceParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields: [(&'static str, usize); 10] = [
            ("L_c", self.l_c),
            ("N_c", self.n_c),
            ("P_c", self.p_c),
            ("L_p", self.l_p),
            ("L_B", self.l_b),
            ("N_B", self.n_b),
            ("P_B", self.p_b),
            ("L_r", self.l_r),
            ("N_r", self.n_r),
            ("P_r", self.p_r),
        ];
        for (key, value) in fields {
            if value == 0 {
                return Err(ConfigError::invalid(key, "must be >= 1"));
            }
        }
        Ok(())
    }

    /// `(P_B·N_B)^L_B`: distinct pipelines.
    pub fn pipeline_cardinality(&self) -> BigUint {
        pow(self.p_b * self.n_b, self.l_b)
    }

    /// `P_r·N_r^L_r + P_r·N_r`: before-merge variants plus after-merge variants.
    pub fn reduction_cardinality(&self) -> BigUint {
        BigUint::from(self.p_r) * pow(self.n_r, self.l_r) + BigUint::from(self.p_r * self.n_r)
    }

    /// `(P_B·N_B)^(L_B·L_p)`.
    pub fn conv_part_cardinality(&self) -> BigUint {
        pow(self.p_b * self.n_b, self.l_b * self.l_p)
    }

    /// `(P_c·N_c)^L_c`: allocations of cells and sampling modes to layers.
    pub fn structure_cardinality(&self) -> BigUint {
        pow(self.p_c * self.n_c, self.l_c)
    }

    /// Per-cell complexity figure of the two-loop search,
    /// `(P_B·N_B)^L_B + P_r·N_r·(N_r^L_r + 1)`.
    ///
    /// Diagnostic only. It omits the `L_p` exponent on the convolution term
    /// and its reduction term differs from [`Self::reduction_cardinality`],
    /// which is what the decoder actually enumerates.
    pub fn cell_complexity(&self) -> BigUint {
        self.pipeline_cardinality()
            + BigUint::from(self.p_r * self.n_r) * (pow(self.n_r, self.l_r) + BigUint::one())
    }

    /// Number of distinct digit genomes:
    /// `structure · (pipeline^L_p · reduction)^N_c`.
    pub fn total_cardinality(&self) -> BigUint {
        let cell =
            num_traits::pow(self.pipeline_cardinality(), self.l_p) * self.reduction_cardinality();
        self.structure_cardinality() * num_traits::pow(cell, self.n_c)
    }

    pub fn structure_radix(&self) -> u64 {
        (self.p_c * self.n_c) as u64
    }

    pub fn block_radix(&self) -> u64 {
        (self.p_b * self.n_b) as u64
    }

    /// Radix of the per-cell reduction digit; `None` when it does not fit in u64.
    pub fn reduction_radix(&self) -> Option<u64> {
        self.reduction_cardinality().to_u64()
    }

    /// Number of branches entering the merge in the before-merge variant.
    pub fn reduction_branches(&self) -> usize {
        core::cmp::max(self.l_p, self.l_r)
    }
}

/// A validated search space plus everything needed to build, score and
/// search it.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    params: SpaceParams,
    allow_mismatched_l_r: bool,
    blocks: Vec<BlockDef>,
    block_options: Vec<BlockOption>,
    reduction_blocks: Vec<Operation>,
    merge_modes: Vec<MergeMode>,
    sampling_modes: Vec<SamplingMode>,
    input_shape: TensorShape,
    stem_filters: u64,
    head: Vec<HeadLayer>,
    total_param: u64,
    ea: EaParams,
}

/// Unvalidated pieces of a [`SearchConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigParts {
    pub layers: LayerCounts,
    pub blocks: Vec<BlockDef>,
    pub block_options: Vec<BlockOption>,
    pub reduction_blocks: Vec<Operation>,
    pub merge_modes: Vec<MergeMode>,
    pub sampling_modes: Vec<SamplingMode>,
    pub input_shape: TensorShape,
    pub stem_filters: u64,
    pub head: Vec<HeadLayer>,
    pub total_param: u64,
    pub ea: EaParams,
}

/// Digits are serialized as 4-byte unsigned integers, so every radix must
/// stay within `2^32`.
const MAX_RADIX: u64 = 1 << 32;

impl SearchConfig {
    pub fn from_parts(parts: ConfigParts) -> Result<Self, ConfigError> {
        let ConfigParts {
            layers,
            blocks,
            block_options,
            reduction_blocks,
            merge_modes,
            sampling_modes,
            input_shape,
            stem_filters,
            head,
            total_param,
            ea,
        } = parts;

        if blocks.is_empty() {
            return Err(ConfigError::Empty { key: "blocks" });
        }
        if block_options.is_empty() {
            return Err(ConfigError::Empty {
                key: "block_options",
            });
        }
        if reduction_blocks.is_empty() {
            return Err(ConfigError::Empty {
                key: "reduction_blocks",
            });
        }
        if merge_modes.is_empty() {
            return Err(ConfigError::Empty { key: "merge_modes" });
        }
        if sampling_modes.is_empty() {
            return Err(ConfigError::Empty {
                key: "sampling_modes",
            });
        }
        for block in &blocks {
            if block.op.kernel() == 0 {
                return Err(ConfigError::invalid("blocks", "kernel must be >= 1"));
            }
        }
        for op in &reduction_blocks {
            let allowed = matches!(
                (op.kind(), op.kernel()),
                (OpKind::MaxPool, 3) | (OpKind::Conv2d, 1) | (OpKind::Identity, _)
            );
            if !allowed {
                return Err(ConfigError::invalid(
                    "reduction_blocks",
                    "reduction blocks are limited to maxpool(3), conv2d(1) and identity",
                ));
            }
        }

        let l_r = layers.l_r.unwrap_or(layers.l_p);
        if l_r != layers.l_p && !layers.allow_mismatched_l_r {
            return Err(ConfigError::invalid(
                "L_r",
                "L_r must equal L_p unless allow_mismatched_L_r is set",
            ));
        }

        let params = SpaceParams {
            l_c: layers.l_c,
            n_c: layers.n_c,
            p_c: sampling_modes.len(),
            l_p: layers.l_p,
            l_b: layers.l_b,
            n_b: blocks.len(),
            p_b: block_options.len(),
            l_r,
            n_r: reduction_blocks.len(),
            p_r: merge_modes.len(),
        };
        params.validate()?;

        if params.structure_radix() > MAX_RADIX {
            return Err(ConfigError::invalid("layers", "P_c·N_c exceeds 2^32"));
        }
        if params.block_radix() > MAX_RADIX {
            return Err(ConfigError::invalid("blocks", "P_B·N_B exceeds 2^32"));
        }
        match params.reduction_radix() {
            Some(r) if r <= MAX_RADIX => {}
            _ => {
                return Err(ConfigError::invalid(
                    "reduction_blocks",
                    "reduction gene bound exceeds 2^32",
                ))
            }
        }

        if input_shape.h == 0 || input_shape.w == 0 || input_shape.c == 0 {
            return Err(ConfigError::invalid(
                "input_shape",
                "all dimensions must be >= 1",
            ));
        }
        if stem_filters == 0 {
            return Err(ConfigError::invalid("stem_filters", "must be >= 1"));
        }
        if head.is_empty() {
            return Err(ConfigError::Empty { key: "head" });
        }
        for layer in &head {
            match *layer {
                HeadLayer::Dense { units: 0, .. } => {
                    return Err(ConfigError::invalid("head", "dense units must be >= 1"))
                }
                HeadLayer::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                    return Err(ConfigError::invalid(
                        "head",
                        "dropout rate must be in [0, 1)",
                    ))
                }
                _ => {}
            }
        }
        if total_param == 0 {
            return Err(ConfigError::invalid("total_param", "budget must be > 0"));
        }
        ea.validate()?;

        let config = Self {
            params,
            allow_mismatched_l_r: layers.allow_mismatched_l_r,
            blocks,
            block_options,
            reduction_blocks,
            merge_modes,
            sampling_modes,
            input_shape,
            stem_filters,
            head,
            total_param,
            ea,
        };
        if config.ea.mode == crate::optimizer::GenomeMode::Packed {
            crate::genome::GenomeLayout::new(&config.params)
                .packed_bounds_u64()
                .ok_or_else(|| {
                    ConfigError::invalid("ea", "packed mode requires every gene bound < 2^53")
                })?;
        }
        Ok(config)
    }

    /// Parts of the reference instance: five single-operation blocks, seven
    /// block options, three reduction blocks, two merge and two sampling
    /// modes, 2 cells over 2 layers, 3 pipelines of 4 blocks, and the
    /// `dense(2048, relu) → dropout(0.7) → dense(10, softmax)` head.
    pub fn reference_default_parts() -> ConfigParts {
        ConfigParts {
            layers: LayerCounts {
                l_c: 2,
                n_c: 2,
                l_p: 3,
                l_b: 4,
                l_r: None,
                allow_mismatched_l_r: false,
            },
            blocks: vec![
                BlockDef::new("conv3x3", Operation::conv2d(3)),
                BlockDef::new("conv5x5", Operation::conv2d(5)),
                BlockDef::new("conv7x7", Operation::conv2d(7)),
                BlockDef::new("maxpool3x3", Operation::maxpool(3)),
                BlockDef::new("sepconv7x7", Operation::depthwise_sep_conv2d(7)),
            ],
            block_options: vec![
                BlockOption::skip(),
                BlockOption::new(false, false, Activation::None),
                BlockOption::new(false, true, Activation::None),
                BlockOption::new(false, true, Activation::ReluBefore),
                BlockOption::new(false, true, Activation::ReluAfter),
                BlockOption::new(false, false, Activation::ReluBefore),
                BlockOption::new(false, false, Activation::ReluAfter),
            ],
            reduction_blocks: vec![
                Operation::maxpool(3),
                Operation::conv2d(1),
                Operation::identity(),
            ],
            merge_modes: vec![MergeMode::Add, MergeMode::Concat],
            sampling_modes: vec![SamplingMode::Same, SamplingMode::Down],
            input_shape: TensorShape::new(28, 28, 1),
            stem_filters: 32,
            head: vec![
                HeadLayer::Dense {
                    units: 2048,
                    activation: HeadActivation::Relu,
                },
                HeadLayer::Dropout { rate: 0.7 },
                HeadLayer::Dense {
                    units: 10,
                    activation: HeadActivation::Softmax,
                },
            ],
            total_param: 150_000_000,
            ea: EaParams::default(),
        }
    }

    pub fn reference_default() -> Self {
        Self::from_parts(Self::reference_default_parts()).expect("reference config is valid")
    }

    /// Parts of a 64-genome space small enough to enumerate exhaustively.
    pub fn tiny_parts() -> ConfigParts {
        ConfigParts {
            layers: LayerCounts {
                l_c: 1,
                n_c: 1,
                l_p: 1,
                l_b: 2,
                l_r: Some(1),
                allow_mismatched_l_r: false,
            },
            blocks: vec![
                BlockDef::new("conv3x3", Operation::conv2d(3)),
                BlockDef::new("sepconv7x7", Operation::depthwise_sep_conv2d(7)),
            ],
            block_options: vec![
                BlockOption::skip(),
                BlockOption::new(false, true, Activation::ReluAfter),
            ],
            reduction_blocks: vec![Operation::maxpool(3), Operation::conv2d(1)],
            merge_modes: vec![MergeMode::Add],
            sampling_modes: vec![SamplingMode::Down],
            input_shape: TensorShape::new(8, 8, 1),
            stem_filters: 128,
            head: vec![HeadLayer::Dense {
                units: 10,
                activation: HeadActivation::Softmax,
            }],
            total_param: 200_000,
            ea: EaParams {
                population: 8,
                generations: 200,
                ..EaParams::default()
            },
        }
    }

    pub fn tiny() -> Self {
        Self::from_parts(Self::tiny_parts()).expect("tiny config is valid")
    }

    pub fn into_parts(self) -> ConfigParts {
        ConfigParts {
            layers: LayerCounts {
                l_c: self.params.l_c,
                n_c: self.params.n_c,
                l_p: self.params.l_p,
                l_b: self.params.l_b,
                l_r: Some(self.params.l_r),
                allow_mismatched_l_r: self.allow_mismatched_l_r,
            },
            blocks: self.blocks,
            block_options: self.block_options,
            reduction_blocks: self.reduction_blocks,
            merge_modes: self.merge_modes,
            sampling_modes: self.sampling_modes,
            input_shape: self.input_shape,
            stem_filters: self.stem_filters,
            head: self.head,
            total_param: self.total_param,
            ea: self.ea,
        }
    }

    /// Returns a copy with different EA settings.
    pub fn with_ea(&self, ea: EaParams) -> Result<Self, ConfigError> {
        let mut parts = self.clone().into_parts();
        parts.ea = ea;
        Self::from_parts(parts)
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn allow_mismatched_l_r(&self) -> bool {
        self.allow_mismatched_l_r
    }

    pub fn blocks(&self) -> &[BlockDef] {
        &self.blocks
    }

    pub fn block_options(&self) -> &[BlockOption] {
        &self.block_options
    }

    pub fn reduction_blocks(&self) -> &[Operation] {
        &self.reduction_blocks
    }

    pub fn merge_modes(&self) -> &[MergeMode] {
        &self.merge_modes
    }

    pub fn sampling_modes(&self) -> &[SamplingMode] {
        &self.sampling_modes
    }

    pub fn input_shape(&self) -> TensorShape {
        self.input_shape
    }

    pub fn stem_filters(&self) -> u64 {
        self.stem_filters
    }

    pub fn head(&self) -> &[HeadLayer] {
        &self.head
    }

    pub fn total_param(&self) -> u64 {
        self.total_param
    }

    pub fn ea(&self) -> &EaParams {
        &self.ea
    }

    pub fn budget(&self) -> TrainingBudget {
        self.ea.budget
    }
}
