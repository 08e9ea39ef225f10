//! Shaped operation DAGs built from architecture plans.
//!
//! Every node is appended after its inputs, so node ids double as a
//! topological order. Shapes are computed as nodes are pushed and can be
//! recomputed from scratch with [`infer_shapes`].

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::genome::{ArchitecturePlan, CellPlan, ReductionVariant};
use crate::space::{
    Activation, HeadActivation, HeadLayer, MergeMode, OpKind, Operation, SamplingMode, SearchConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub h: u64,
    pub w: u64,
    pub c: u64,
}

impl TensorShape {
    pub const fn new(h: u64, w: u64, c: u64) -> Self {
        Self { h, w, c }
    }

    pub fn volume(&self) -> u64 {
        self.h * self.w * self.c
    }

    /// Padded stride-`s` output: `ceil(h/s) × ceil(w/s)`.
    fn strided(&self, stride: u32) -> Self {
        let s = u64::from(stride.max(1));
        Self {
            h: self.h.div_ceil(s),
            w: self.w.div_ceil(s),
            c: self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeOp {
    #[serde(rename = "input")]
    Input,
    #[serde(rename = "stem_conv")]
    StemConv,
    #[serde(rename = "conv2d")]
    Conv2d,
    #[serde(rename = "depthwise_sep_conv2d")]
    DepthwiseSepConv2d,
    #[serde(rename = "maxpool")]
    MaxPool,
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "batch_norm")]
    BatchNorm,
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "merge_add")]
    MergeAdd,
    #[serde(rename = "merge_concat")]
    MergeConcat,
    #[serde(rename = "projection_conv1x1")]
    ProjectionConv1x1,
    #[serde(rename = "upsample2x")]
    Upsample2x,
    #[serde(rename = "flatten")]
    Flatten,
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "dropout")]
    Dropout,
    #[serde(rename = "softmax")]
    Softmax,
}

impl NodeOp {
    pub fn is_merge(self) -> bool {
        matches!(self, NodeOp::MergeAdd | NodeOp::MergeConcat)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl NodeAttrs {
    pub fn conv(kernel: u32, stride: u32, filters: u64) -> Self {
        Self {
            kernel: Some(kernel),
            stride: Some(stride),
            filters: Some(filters),
            ..Self::default()
        }
    }

    pub fn pool(kernel: u32, stride: u32) -> Self {
        Self {
            kernel: Some(kernel),
            stride: Some(stride),
            ..Self::default()
        }
    }

    pub fn dense(units: u64) -> Self {
        Self {
            units: Some(units),
            ..Self::default()
        }
    }

    pub fn dropout(rate: f64) -> Self {
        Self {
            rate: Some(rate),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchNode {
    pub id: usize,
    pub op: NodeOp,
    pub attrs: NodeAttrs,
    pub inputs: Vec<usize>,
    pub out_shape: Option<TensorShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchGraph {
    pub nodes: Vec<ArchNode>,
    pub input_id: usize,
    pub output_id: usize,
}

impl ArchGraph {
    pub fn node(&self, id: usize) -> Option<&ArchNode> {
        self.nodes.get(id)
    }

    pub fn output_shape(&self) -> Option<TensorShape> {
        self.nodes.get(self.output_id).and_then(|n| n.out_shape)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("node {node}: add-merge operands differ ({left:?} vs {right:?})")]
    AddMismatch {
        node: usize,
        left: TensorShape,
        right: TensorShape,
    },
    #[error("node {node}: concat operands differ spatially ({left:?} vs {right:?})")]
    ConcatMismatch {
        node: usize,
        left: TensorShape,
        right: TensorShape,
    },
    #[error("node {node}: expected {expected} input(s), found {found}")]
    Arity {
        node: usize,
        expected: &'static str,
        found: usize,
    },
    #[error("node {node}: input {input} is not an earlier node")]
    NotTopological { node: usize, input: usize },
    #[error("node {node}: missing attribute `{attr}`")]
    MissingAttr { node: usize, attr: &'static str },
    #[error("node {node}: shape not inferred")]
    MissingShape { node: usize },
    #[error("node {node}: id does not match its position")]
    BadId { node: usize },
    #[error("graph must have exactly one input node at its input_id")]
    BadInput,
    #[error("output id {0} is not a node")]
    BadOutput(usize),
    #[error("head is empty")]
    EmptyHead,
    #[error("invalid attribute on node {node}: {attr}")]
    BadAttr { node: usize, attr: &'static str },
}

/// Output shape of one node from its inputs' shapes.
fn node_shape(
    id: usize,
    op: NodeOp,
    attrs: &NodeAttrs,
    inputs: &[TensorShape],
    input_shape: Option<TensorShape>,
) -> Result<TensorShape, GraphError> {
    let arity = |expected: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(GraphError::Arity {
                node: id,
                expected,
                found: inputs.len(),
            })
        }
    };
    let stride = || match attrs.stride {
        Some(0) => Err(GraphError::BadAttr {
            node: id,
            attr: "stride",
        }),
        Some(s) => Ok(s),
        None => Ok(1),
    };
    let filters = || {
        attrs
            .filters
            .filter(|&f| f > 0)
            .ok_or(GraphError::MissingAttr {
                node: id,
                attr: "filters",
            })
    };
    match op {
        NodeOp::Input => {
            arity("0", inputs.is_empty())?;
            input_shape.ok_or(GraphError::MissingShape { node: id })
        }
        NodeOp::MergeAdd => {
            arity(">= 2", inputs.len() >= 2)?;
            let first = inputs[0];
            for other in &inputs[1..] {
                if *other != first {
                    return Err(GraphError::AddMismatch {
                        node: id,
                        left: first,
                        right: *other,
                    });
                }
            }
            Ok(first)
        }
        NodeOp::MergeConcat => {
            arity(">= 2", inputs.len() >= 2)?;
            let first = inputs[0];
            let mut c = 0;
            for other in inputs {
                if (other.h, other.w) != (first.h, first.w) {
                    return Err(GraphError::ConcatMismatch {
                        node: id,
                        left: first,
                        right: *other,
                    });
                }
                c += other.c;
            }
            Ok(TensorShape { c, ..first })
        }
        _ => {
            arity("1", inputs.len() == 1)?;
            let x = inputs[0];
            match op {
                NodeOp::StemConv
                | NodeOp::Conv2d
                | NodeOp::DepthwiseSepConv2d
                | NodeOp::ProjectionConv1x1 => {
                    if attrs.kernel.unwrap_or(0) == 0 {
                        return Err(GraphError::MissingAttr {
                            node: id,
                            attr: "kernel",
                        });
                    }
                    Ok(TensorShape {
                        c: filters()?,
                        ..x.strided(stride()?)
                    })
                }
                NodeOp::MaxPool => Ok(x.strided(stride()?)),
                NodeOp::Upsample2x => Ok(TensorShape {
                    h: x.h * 2,
                    w: x.w * 2,
                    c: x.c,
                }),
                NodeOp::Flatten => Ok(TensorShape::new(1, 1, x.volume())),
                NodeOp::Dense => {
                    let units = attrs
                        .units
                        .filter(|&u| u > 0)
                        .ok_or(GraphError::MissingAttr {
                            node: id,
                            attr: "units",
                        })?;
                    Ok(TensorShape::new(1, 1, units))
                }
                _ => Ok(x),
            }
        }
    }
}

/// Incremental DAG construction with eager shape inference.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    nodes: Vec<ArchNode>,
}

impl GraphBuilder {
    pub fn new(input: TensorShape) -> Self {
        Self {
            nodes: vec![ArchNode {
                id: 0,
                op: NodeOp::Input,
                attrs: NodeAttrs::default(),
                inputs: Vec::new(),
                out_shape: Some(input),
            }],
        }
    }

    /// Continues building on top of an existing, shaped graph.
    pub fn from_graph(graph: ArchGraph) -> Self {
        Self { nodes: graph.nodes }
    }

    pub fn shape(&self, id: usize) -> TensorShape {
        self.nodes[id]
            .out_shape
            .expect("builder nodes are always shaped")
    }

    pub fn push(
        &mut self,
        op: NodeOp,
        attrs: NodeAttrs,
        inputs: Vec<usize>,
    ) -> Result<usize, GraphError> {
        let id = self.nodes.len();
        let mut shapes = Vec::with_capacity(inputs.len());
        for &input in &inputs {
            if input >= id {
                return Err(GraphError::NotTopological { node: id, input });
            }
            shapes.push(self.shape(input));
        }
        let out = node_shape(id, op, &attrs, &shapes, None)?;
        self.nodes.push(ArchNode {
            id,
            op,
            attrs,
            inputs,
            out_shape: Some(out),
        });
        Ok(id)
    }

    pub fn finish(self, output_id: usize) -> ArchGraph {
        ArchGraph {
            nodes: self.nodes,
            input_id: 0,
            output_id,
        }
    }
}

fn push_operation(
    b: &mut GraphBuilder,
    op: Operation,
    stride: u32,
    input: usize,
) -> Result<usize, GraphError> {
    let channels = b.shape(input).c;
    let k = op.kernel();
    match op.kind() {
        OpKind::Conv2d => b.push(
            NodeOp::Conv2d,
            NodeAttrs::conv(k, stride, channels),
            vec![input],
        ),
        OpKind::DepthwiseSepConv2d => b.push(
            NodeOp::DepthwiseSepConv2d,
            NodeAttrs::conv(k, stride, channels),
            vec![input],
        ),
        OpKind::MaxPool => b.push(NodeOp::MaxPool, NodeAttrs::pool(k, stride), vec![input]),
        OpKind::Identity => b.push(NodeOp::Identity, NodeAttrs::default(), vec![input]),
    }
}

/// Pre-activation, operation, batch-norm, post-activation; a skipped block
/// is a single identity node.
fn push_block(
    b: &mut GraphBuilder,
    config: &SearchConfig,
    block: usize,
    option: usize,
    input: usize,
) -> Result<usize, GraphError> {
    let option = config.block_options()[option];
    if option.is_skip() {
        return b.push(NodeOp::Identity, NodeAttrs::default(), vec![input]);
    }
    let mut x = input;
    if option.activation() == Activation::ReluBefore {
        x = b.push(NodeOp::Relu, NodeAttrs::default(), vec![x])?;
    }
    x = push_operation(b, config.blocks()[block].op, 1, x)?;
    if option.batch_norm() {
        x = b.push(NodeOp::BatchNorm, NodeAttrs::default(), vec![x])?;
    }
    if option.activation() == Activation::ReluAfter {
        x = b.push(NodeOp::Relu, NodeAttrs::default(), vec![x])?;
    }
    Ok(x)
}

fn push_reduction_block(
    b: &mut GraphBuilder,
    op: Operation,
    mode: SamplingMode,
    input: usize,
) -> Result<usize, GraphError> {
    match mode {
        SamplingMode::Same => push_operation(b, op, 1, input),
        SamplingMode::Down => {
            // identity cannot halve the resolution
            let op = if op.kind() == OpKind::Identity {
                Operation::maxpool(3)
            } else {
                op
            };
            push_operation(b, op, 2, input)
        }
        SamplingMode::Up => {
            let up = b.push(NodeOp::Upsample2x, NodeAttrs::default(), vec![input])?;
            push_operation(b, op, 1, up)
        }
    }
}

fn push_merge(
    b: &mut GraphBuilder,
    mode: MergeMode,
    inputs: Vec<usize>,
) -> Result<usize, GraphError> {
    if inputs.len() == 1 {
        return Ok(inputs[0]);
    }
    let op = match mode {
        MergeMode::Add => NodeOp::MergeAdd,
        MergeMode::Concat => NodeOp::MergeConcat,
    };
    b.push(op, NodeAttrs::default(), inputs)
}

/// Instantiates one cell on `input` under `mode` and returns its output node.
///
/// Pipelines are channel-preserving. With `max(L_p, L_r)` before-merge
/// branches, branch `k` reads pipeline `k mod L_p` through reduction block
/// `k mod L_r`. A 1×1 projection closes the cell whenever the merged
/// channel count differs from the mode's target.
pub fn build_cell(
    b: &mut GraphBuilder,
    config: &SearchConfig,
    cell: &CellPlan,
    mode: SamplingMode,
    input: usize,
) -> Result<usize, GraphError> {
    let c_in = b.shape(input).c;
    let mut pipeline_outputs = Vec::with_capacity(cell.pipelines.len());
    for pipeline in &cell.pipelines {
        let mut x = input;
        for choice in pipeline {
            x = push_block(b, config, choice.block, choice.option, x)?;
        }
        pipeline_outputs.push(x);
    }

    let merge = config.merge_modes()[cell.reduction.merge];
    let catalog = config.reduction_blocks();
    let mut x = match &cell.reduction.variant {
        ReductionVariant::BeforeMerge(blocks) => {
            let branches = core::cmp::max(pipeline_outputs.len(), blocks.len());
            let mut reduced = Vec::with_capacity(branches);
            for k in 0..branches {
                let src = pipeline_outputs[k % pipeline_outputs.len()];
                let op = catalog[blocks[k % blocks.len()]];
                reduced.push(push_reduction_block(b, op, mode, src)?);
            }
            push_merge(b, merge, reduced)?
        }
        ReductionVariant::AfterMerge(block) => {
            let merged = push_merge(b, merge, pipeline_outputs)?;
            push_reduction_block(b, catalog[*block], mode, merged)?
        }
    };

    let target = mode.target_channels(c_in);
    if b.shape(x).c != target {
        x = b.push(
            NodeOp::ProjectionConv1x1,
            NodeAttrs::conv(1, 1, target),
            vec![x],
        )?;
    }
    Ok(x)
}

/// Input, stem convolution and the cell stack, without the head.
pub fn build_feature_graph(
    plan: &ArchitecturePlan,
    config: &SearchConfig,
) -> Result<ArchGraph, GraphError> {
    let mut b = GraphBuilder::new(config.input_shape());
    let mut x = b.push(
        NodeOp::StemConv,
        NodeAttrs::conv(3, 1, config.stem_filters()),
        vec![0],
    )?;
    for layer in &plan.layers {
        let mode = config.sampling_modes()[layer.sampling];
        x = build_cell(&mut b, config, &plan.cells[layer.cell], mode, x)?;
    }
    Ok(b.finish(x))
}

/// Full graph: input → stem → cells → head.
pub fn build_graph(
    plan: &ArchitecturePlan,
    config: &SearchConfig,
) -> Result<ArchGraph, GraphError> {
    attach_head(build_feature_graph(plan, config)?, config.head())
}

/// Appends flatten followed by the head layers, each dense layer followed
/// by its activation node.
pub fn attach_head(graph: ArchGraph, head: &[HeadLayer]) -> Result<ArchGraph, GraphError> {
    if head.is_empty() {
        return Err(GraphError::EmptyHead);
    }
    let mut x = graph.output_id;
    let mut b = GraphBuilder::from_graph(graph);
    x = b.push(NodeOp::Flatten, NodeAttrs::default(), vec![x])?;
    for layer in head {
        match *layer {
            HeadLayer::Dense { units, activation } => {
                x = b.push(NodeOp::Dense, NodeAttrs::dense(units), vec![x])?;
                match activation {
                    HeadActivation::None => {}
                    HeadActivation::Relu => {
                        x = b.push(NodeOp::Relu, NodeAttrs::default(), vec![x])?
                    }
                    HeadActivation::Softmax => {
                        x = b.push(NodeOp::Softmax, NodeAttrs::default(), vec![x])?
                    }
                }
            }
            HeadLayer::Dropout { rate } => {
                x = b.push(NodeOp::Dropout, NodeAttrs::dropout(rate), vec![x])?;
            }
        }
    }
    Ok(b.finish(x))
}

/// Recomputes every node's shape from the input node's declared shape,
/// checking ids, topological order and arity along the way.
pub fn infer_shapes(graph: &ArchGraph) -> Result<ArchGraph, GraphError> {
    let input_shape = graph
        .nodes
        .get(graph.input_id)
        .filter(|n| n.op == NodeOp::Input)
        .and_then(|n| n.out_shape)
        .ok_or(GraphError::BadInput)?;
    if graph.nodes.iter().filter(|n| n.op == NodeOp::Input).count() != 1 {
        return Err(GraphError::BadInput);
    }
    if graph.output_id >= graph.nodes.len() {
        return Err(GraphError::BadOutput(graph.output_id));
    }
    let mut out = graph.clone();
    for i in 0..out.nodes.len() {
        let node = &out.nodes[i];
        if node.id != i {
            return Err(GraphError::BadId { node: i });
        }
        let mut shapes = Vec::with_capacity(node.inputs.len());
        for &input in &node.inputs {
            if input >= i {
                return Err(GraphError::NotTopological { node: i, input });
            }
            shapes.push(
                out.nodes[input]
                    .out_shape
                    .ok_or(GraphError::MissingShape { node: input })?,
            );
        }
        let shape = node_shape(i, node.op, &node.attrs, &shapes, Some(input_shape))?;
        out.nodes[i].out_shape = Some(shape);
    }
    Ok(out)
}
