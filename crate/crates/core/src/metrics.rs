//! Trainable-parameter counting and the objective vector.
//!
//! All weighted layers carry a bias. Batch-norm counts its trainable scale
//! and offset (`2·c`); moving statistics are not counted.

use serde::{Deserialize, Serialize};

use crate::graph::{ArchGraph, ArchNode, NodeOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("node {0}: shapes not inferred")]
    MissingShape(usize),
    #[error("node {0}: malformed node")]
    Malformed(usize),
    #[error("parameter count overflows u64")]
    Overflow,
    #[error("parameter budget must be > 0")]
    ZeroBudget,
}

/// Trainable parameters of one node of `graph`.
pub fn node_param_count(graph: &ArchGraph, node: &ArchNode) -> Result<u64, MetricsError> {
    let out = node.out_shape.ok_or(MetricsError::MissingShape(node.id))?;
    let input = || {
        let id = *node
            .inputs
            .first()
            .ok_or(MetricsError::Malformed(node.id))?;
        graph
            .node(id)
            .ok_or(MetricsError::Malformed(node.id))?
            .out_shape
            .ok_or(MetricsError::MissingShape(id))
    };
    let kernel = || {
        node.attrs
            .kernel
            .map(u64::from)
            .ok_or(MetricsError::Malformed(node.id))
    };
    let mul = |a: u64, b: u64| a.checked_mul(b).ok_or(MetricsError::Overflow);
    let add = |a: u64, b: u64| a.checked_add(b).ok_or(MetricsError::Overflow);

    match node.op {
        NodeOp::StemConv | NodeOp::Conv2d | NodeOp::ProjectionConv1x1 => {
            let k = kernel()?;
            let weights = mul(mul(k * k, input()?.c)?, out.c)?;
            add(weights, out.c)
        }
        NodeOp::DepthwiseSepConv2d => {
            let k = kernel()?;
            let c_in = input()?.c;
            let depthwise = mul(k * k, c_in)?;
            let pointwise = mul(c_in, out.c)?;
            add(add(depthwise, pointwise)?, out.c)
        }
        NodeOp::Dense => add(mul(input()?.volume(), out.c)?, out.c),
        NodeOp::BatchNorm => mul(2, out.c),
        NodeOp::Input
        | NodeOp::MaxPool
        | NodeOp::Identity
        | NodeOp::Relu
        | NodeOp::MergeAdd
        | NodeOp::MergeConcat
        | NodeOp::Upsample2x
        | NodeOp::Flatten
        | NodeOp::Dropout
        | NodeOp::Softmax => Ok(0),
    }
}

pub fn total_param_count(graph: &ArchGraph) -> Result<u64, MetricsError> {
    graph.nodes.iter().try_fold(0u64, |acc, node| {
        acc.checked_add(node_param_count(graph, node)?)
            .ok_or(MetricsError::Overflow)
    })
}

/// `(f1, f2, g)`: error, parameters over budget, and the budget constraint
/// `g = f2 − 1 ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
    pub g: f64,
}

impl ObjectiveVector {
    /// `f2` is the correctly rounded quotient whenever both counts are below
    /// `2^53`.
    pub fn from_counts(f1: f64, params: u64, total_param: u64) -> Result<Self, MetricsError> {
        if total_param == 0 {
            return Err(MetricsError::ZeroBudget);
        }
        let f2 = params as f64 / total_param as f64;
        Ok(Self {
            f1,
            f2,
            g: f2 - 1.0,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.g <= 0.0
    }
}

pub fn objective_vector(
    f1: f64,
    graph: &ArchGraph,
    total_param: u64,
) -> Result<ObjectiveVector, MetricsError> {
    ObjectiveVector::from_counts(f1, total_param_count(graph)?, total_param)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{attach_head, GraphBuilder, NodeAttrs, TensorShape};
    use crate::space::{HeadActivation, HeadLayer};
    use alloc::vec;

    fn last_count(b: GraphBuilder, id: usize) -> u64 {
        let graph = b.finish(id);
        node_param_count(&graph, &graph.nodes[id]).unwrap()
    }

    #[test]
    fn conv_3x3_1_to_8() {
        let mut b = GraphBuilder::new(TensorShape::new(28, 28, 1));
        let id = b
            .push(NodeOp::Conv2d, NodeAttrs::conv(3, 1, 8), vec![0])
            .unwrap();
        assert_eq!(last_count(b, id), 80);
    }

    #[test]
    fn depthwise_separable_7x7() {
        let mut b = GraphBuilder::new(TensorShape::new(14, 14, 16));
        let id = b
            .push(
                NodeOp::DepthwiseSepConv2d,
                NodeAttrs::conv(7, 1, 16),
                vec![0],
            )
            .unwrap();
        assert_eq!(last_count(b, id), 1056);
    }

    #[test]
    fn dense_6272_to_2048() {
        let mut b = GraphBuilder::new(TensorShape::new(28, 28, 8));
        let f = b
            .push(NodeOp::Flatten, NodeAttrs::default(), vec![0])
            .unwrap();
        let id = b
            .push(NodeOp::Dense, NodeAttrs::dense(2048), vec![f])
            .unwrap();
        // 6272·2048 weights + 2048 biases
        assert_eq!(last_count(b, id), 12_847_104);
    }

    #[test]
    fn batch_norm_counts_trainable_only() {
        let mut b = GraphBuilder::new(TensorShape::new(4, 4, 12));
        let id = b
            .push(NodeOp::BatchNorm, NodeAttrs::default(), vec![0])
            .unwrap();
        assert_eq!(last_count(b, id), 24);
    }

    #[test]
    fn stem_plus_default_head() {
        let mut b = GraphBuilder::new(TensorShape::new(28, 28, 1));
        let stem = b
            .push(NodeOp::StemConv, NodeAttrs::conv(3, 1, 8), vec![0])
            .unwrap();
        let head = [
            HeadLayer::Dense {
                units: 2048,
                activation: HeadActivation::Relu,
            },
            HeadLayer::Dropout { rate: 0.7 },
            HeadLayer::Dense {
                units: 10,
                activation: HeadActivation::Softmax,
            },
        ];
        let graph = attach_head(b.finish(stem), &head).unwrap();
        assert_eq!(total_param_count(&graph).unwrap(), 80 + 12_847_104 + 20_490);
        let dropout = graph
            .nodes
            .iter()
            .find(|n| n.op == NodeOp::Dropout)
            .unwrap();
        assert_eq!(node_param_count(&graph, dropout).unwrap(), 0);
    }

    #[test]
    fn input_only_graph_is_zero() {
        let graph = GraphBuilder::new(TensorShape::new(3, 3, 3)).finish(0);
        assert_eq!(total_param_count(&graph).unwrap(), 0);
    }

    #[test]
    fn unshaped_node_is_an_error() {
        let mut b = GraphBuilder::new(TensorShape::new(3, 3, 3));
        let id = b
            .push(NodeOp::Conv2d, NodeAttrs::conv(3, 1, 2), vec![0])
            .unwrap();
        let mut graph = b.finish(id);
        graph.nodes[id].out_shape = None;
        assert_eq!(
            total_param_count(&graph),
            Err(MetricsError::MissingShape(id))
        );
    }

    #[test]
    fn objective_examples() {
        let at_budget = ObjectiveVector::from_counts(0.1, 150_000_000, 150_000_000).unwrap();
        assert_eq!((at_budget.f2, at_budget.g), (1.0, 0.0));
        assert!(at_budget.is_feasible());
        let over = ObjectiveVector::from_counts(0.1, 300_000_000, 150_000_000).unwrap();
        assert_eq!((over.f2, over.g), (2.0, 1.0));
        assert!(!over.is_feasible());
        let empty = ObjectiveVector::from_counts(0.5, 0, 150_000_000).unwrap();
        assert_eq!((empty.f2, empty.g), (0.0, -1.0));
        assert_eq!(
            ObjectiveVector::from_counts(0.5, 1, 0),
            Err(MetricsError::ZeroBudget)
        );
    }

    #[test]
    fn doubling_budget_halves_f2() {
        for params in [1u64, 12_869_722, 149_999_999, 300_000_000] {
            let a = ObjectiveVector::from_counts(0.0, params, 150_000_000).unwrap();
            let b = ObjectiveVector::from_counts(0.0, params, 300_000_000).unwrap();
            assert_eq!(b.f2, a.f2 / 2.0);
            assert_eq!(b.g, a.f2 / 2.0 - 1.0);
        }
    }
}
