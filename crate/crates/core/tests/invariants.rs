//! Property tests over random graphs: every placement yields valid partitions,
//! and the engine agrees with the serial oracles.

use proptest::prelude::*;

use agent_graph::engine::EngineConfig;
use agent_graph::graph::{DirectedGraph, EdgeStream, GlobalVertexId};
use agent_graph::oracle::{serial_dijkstra, serial_pagerank, serial_union_find_cc};
use agent_graph::partition::{
    build_agent_graph, compute_metrics, partition_stream, validate_partitions, PartitionConfig, PartitionMode,
};
use agent_graph::programs::{pagerank_program, run_cc, run_pagerank, run_sssp, sssp_program};

fn mode() -> impl Strategy<Value = PartitionMode> {
    prop_oneof![
        Just(PartitionMode::Hash),
        Just(PartitionMode::GreedyOblivious),
        Just(PartitionMode::GreedyCoordinated),
    ]
}

fn graph(max_v: u64, max_e: usize) -> impl Strategy<Value = DirectedGraph> {
    (2..max_v).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n, 1u32..1000), 1..max_e).prop_map(move |t| {
            DirectedGraph::with_vertices((0..n).map(GlobalVertexId), EdgeStream::from_weighted(t))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_are_valid(g in graph(80, 400), k in 1usize..9, m in mode(), loaders in 1usize..5, sync in 1usize..64) {
        let cfg = PartitionConfig::new(k, m).loaders(loaders).sync_interval(sync);
        let placement = partition_stream(g.edges(), &cfg).unwrap();
        prop_assert_eq!(placement.assignment.len(), g.edge_count());
        prop_assert!(placement.assignment.iter().all(|&p| (p as usize) < k));
        let parts = build_agent_graph(&g, &placement).unwrap();
        validate_partitions(&parts, &g).unwrap();
        let total: usize = parts.iter().map(|p| p.edge_count()).sum();
        prop_assert_eq!(total, g.edge_count());

        let met = compute_metrics(&parts, m, g.vertex_count() as u64, g.edge_count() as u64, g.mean_degree(), 0.05).unwrap();
        prop_assert!(met.agent_count <= 2 * met.scatter_count.max(met.combiner_count));
        prop_assert!(met.agent_rate <= met.vertexcut_cut_factor + 1e-12);
        prop_assert_eq!(met.edge_loads.iter().sum::<u64>(), g.edge_count() as u64);
    }

    #[test]
    fn placement_is_deterministic(g in graph(50, 200), k in 1usize..6, m in mode(), loaders in 1usize..4) {
        let cfg = PartitionConfig::new(k, m).loaders(loaders).sync_interval(7);
        prop_assert_eq!(partition_stream(g.edges(), &cfg).unwrap(), partition_stream(g.edges(), &cfg).unwrap());
    }

    #[test]
    fn engine_matches_oracles(g in graph(40, 160), k in 1usize..6, m in mode(), src in 0u64..40, seed in any::<Option<u64>>(), lanes in 1usize..4) {
        let parts = build_agent_graph(&g, &partition_stream(g.edges(), &PartitionConfig::new(k, m).loaders(2)).unwrap()).unwrap();
        let config = EngineConfig { lanes, shuffle_seed: seed, buffer_capacity: 96, ..Default::default() };
        let source = GlobalVertexId(src % g.vertex_count() as u64);

        let got = run_sssp(&parts, &sssp_program(source, true), config).unwrap();
        let want = serial_dijkstra(&g, source).unwrap();
        for ((_, r), (_, d)) in got.values.iter().zip(&want.values) {
            prop_assert_eq!(r.distance, *d);
        }

        let pr = run_pagerank(&parts, &pagerank_program(0.85, 0.15).unwrap(), 10, config).unwrap();
        let want = serial_pagerank(&g, 10, 0.85, 0.15, 1.0);
        for ((_, a), (_, b)) in pr.values.iter().zip(&want.values) {
            prop_assert!((a - b).abs() <= 1e-9);
        }

        let sym = g.symmetrized();
        let sparts = build_agent_graph(&sym, &partition_stream(sym.edges(), &PartitionConfig::new(k, m)).unwrap()).unwrap();
        prop_assert_eq!(run_cc(&sparts, config).unwrap().values, serial_union_find_cc(&sym).values);
    }
}
