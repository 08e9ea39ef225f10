use cellspace_core::genome::{decode, random_genome, ArchitecturePlan};
use cellspace_core::graph::{build_cell, build_graph, infer_shapes, GraphBuilder, NodeAttrs};
use cellspace_core::metrics::total_param_count;
use cellspace_core::space::SamplingMode;
use cellspace_core::{NodeOp, SearchConfig, TensorShape};

fn expected(mode: SamplingMode, s: TensorShape) -> TensorShape {
    match mode {
        SamplingMode::Same => s,
        SamplingMode::Down => TensorShape::new(s.h.div_ceil(2), s.w.div_ceil(2), 2 * s.c),
        SamplingMode::Up => TensorShape::new(2 * s.h, 2 * s.w, (s.c / 2).max(1)),
    }
}

/// Builds the cell stack one cell at a time, checking each cell's output
/// against the sampling-mode contract.
fn check_cells(plan: &ArchitecturePlan, config: &SearchConfig) {
    let mut b = GraphBuilder::new(config.input_shape());
    let mut x = b
        .push(
            NodeOp::StemConv,
            NodeAttrs::conv(3, 1, config.stem_filters()),
            vec![0],
        )
        .unwrap();
    for layer in &plan.layers {
        let mode = config.sampling_modes()[layer.sampling];
        let before = b.shape(x);
        x = build_cell(&mut b, config, &plan.cells[layer.cell], mode, x).unwrap();
        assert_eq!(b.shape(x), expected(mode, before), "{mode:?} on {before:?}");
    }
}

fn fuzz(config: &SearchConfig, seeds: std::ops::Range<u64>) {
    for seed in seeds {
        let g = random_genome(seed, config.params());
        let plan = decode(&g, config).unwrap();
        let graph = build_graph(&plan, config).unwrap();
        let reinferred = infer_shapes(&graph).unwrap();
        assert_eq!(reinferred, graph, "seed {seed}");
        assert!(total_param_count(&graph).is_ok());
        check_cells(&plan, config);
    }
}

#[test]
fn ten_thousand_default_genomes_build_and_keep_the_contract() {
    fuzz(&SearchConfig::reference_default(), 0..10_000);
}

#[test]
fn contract_holds_with_up_sampling_and_odd_inputs() {
    let mut parts = SearchConfig::reference_default_parts();
    parts.sampling_modes = vec![SamplingMode::Same, SamplingMode::Down, SamplingMode::Up];
    parts.input_shape = TensorShape::new(7, 9, 3);
    parts.stem_filters = 5;
    fuzz(&SearchConfig::from_parts(parts).unwrap(), 0..2_000);
}

#[test]
fn mismatched_reduction_depth_keeps_the_contract() {
    let mut parts = SearchConfig::reference_default_parts();
    parts.layers.l_r = Some(2);
    parts.layers.allow_mismatched_l_r = true;
    fuzz(&SearchConfig::from_parts(parts).unwrap(), 0..1_000);
}
