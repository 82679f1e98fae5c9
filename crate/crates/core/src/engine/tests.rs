use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{DirectedGraph, EdgeStream};
use crate::oracle::{serial_dijkstra, serial_pagerank, serial_union_find_cc};
use crate::partition::{build_agent_graph, partition_stream, PartitionConfig, PartitionMode, PlacementResult};
use crate::programs::{
    cc_program, pagerank_program, run_cc, run_pagerank, run_sssp, sssp_program, PageRank, INFINITY,
};

fn split(g: &DirectedGraph, k: usize, mode: PartitionMode) -> Vec<AgentGraphPartition> {
    let cfg = PartitionConfig::new(k, mode).loaders(2).sync_interval(8);
    let p = partition_stream(g.edges(), &cfg).unwrap();
    build_agent_graph(g, &p).unwrap()
}

fn placed(g: &DirectedGraph, k: u32, assignment: Vec<u32>) -> Vec<AgentGraphPartition> {
    let p = PlacementResult {
        k,
        mode: PartitionMode::GreedyCoordinated,
        assignment,
    };
    build_agent_graph(g, &p).unwrap()
}

fn pr() -> PageRank {
    pagerank_program(0.85, 0.15).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, n: u64, m: usize, weighted: bool) -> DirectedGraph {
    let triples: Vec<(u64, u64, u32)> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(1..=20)))
        .collect();
    let edges = if weighted {
        EdgeStream::from_weighted(triples)
    } else {
        EdgeStream::from_pairs(triples.into_iter().map(|(u, v, _)| (u, v)))
    };
    DirectedGraph::with_vertices((0..n).map(GlobalVertexId), edges)
}

#[test]
fn missing_initial_value_is_an_error() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 1)]));
    let parts = split(&g, 1, PartitionMode::Hash);
    let p = pr();
    let r = Engine::init_run(&parts, &p, EngineConfig::default(), |v| {
        (v.0 == 0).then(|| p.init(v))
    });
    assert!(matches!(r, Err(EngineError::MissingInit(GlobalVertexId(1)))));
}

#[test]
fn init_sets_identities_and_clears_apply() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(1, 9), (2, 9), (3, 9), (9, 10), (10, 9), (9, 11), (11, 9)]));
    let parts = placed(&g, 2, vec![0, 0, 0, 1, 1, 1, 1]);
    let p = cc_program();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| Some(p.init(v))).unwrap();
    assert_eq!(e.superstep(), 0);
    assert!(e.combiners_at_identity());
    for i in 0..2 {
        let st = e.state_mut(i);
        assert!(st.combine_data().iter().all(|&c| c == INFINITY));
        assert_eq!(st.active_apply.count_ones(), 0);
    }
    assert_eq!(e.active_scatter_count(), 6);
}

#[test]
fn pagerank_isolated_and_two_cycle() {
    let g = DirectedGraph::with_vertices([GlobalVertexId(7)], EdgeStream::from_pairs([(0, 1), (1, 0)]));
    for k in [1, 2] {
        let parts = placed(&g, k, vec![0, k - 1]);
        let out = run_pagerank(&parts, &pr(), 1, EngineConfig::default()).unwrap();
        assert_eq!(out.values[2], (GlobalVertexId(7), 0.15));
        let out = run_pagerank(&parts, &pr(), 30, EngineConfig::default()).unwrap();
        assert_eq!(out.reports.len(), 30);
        assert!((out.values[0].1 - 1.0).abs() < 1e-12);
        assert!((out.values[1].1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fan_in_sends_one_network_message() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(1, 9), (2, 9), (3, 9), (9, 10), (10, 9), (9, 11), (11, 9)]));
    let parts = placed(&g, 2, vec![0, 0, 0, 1, 1, 1, 1]);
    assert_eq!(parts[0].combiner_count(), 1);
    let p = cc_program();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| {
        let mut init = p.init(v);
        init.active = [1, 2, 3].contains(&v.0);
        Some(init)
    })
    .unwrap();
    let r = e.run_superstep().unwrap();
    assert_eq!(r.messages_sent(), 1);
    assert_eq!(r.partitions[0].messages_sent, 1);
    assert_eq!(r.partitions[0].buffers_sent, 1);
    assert_eq!(r.partitions[1].messages_received, 1);
    assert!(e.combiners_at_identity());
    // the folded minimum arrived at 9
    let out = e.output();
    assert_eq!(out.iter().find(|(g, _)| g.0 == 9).unwrap().1, 1);
}

#[test]
fn fan_out_sends_one_network_message() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 11), (0, 12), (0, 13), (20, 0), (21, 0), (22, 0), (23, 0)]));
    let parts = placed(&g, 2, vec![0, 0, 0, 1, 1, 1, 1]);
    assert_eq!(parts[0].scatter_count(), 1);
    let p = cc_program();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| {
        let mut init = p.init(v);
        init.active = v.0 == 0;
        Some(init)
    })
    .unwrap();
    let r = e.run_superstep().unwrap();
    assert_eq!(r.messages_sent(), 1);
    assert_eq!(r.partitions[1].messages_sent, 1);
    // one master scatter plus one agent relay
    assert_eq!(r.partitions.iter().map(|c| c.scatters).sum::<u64>(), 2);
    let out = e.output();
    for v in [11, 12, 13] {
        assert_eq!(out.iter().find(|(g, _)| g.0 == v).unwrap().1, 0);
    }
}

#[test]
fn sssp_chain() {
    let g = DirectedGraph::from_edges(EdgeStream::from_weighted([(0, 1, 2), (1, 2, 3)]));
    for k in [1, 2, 3] {
        let parts = split(&g, k, PartitionMode::Hash);
        let out = run_sssp(&parts, &sssp_program(GlobalVertexId(0), true), EngineConfig::default()).unwrap();
        assert_eq!(out.reports.len(), 3);
        let d: Vec<u64> = out.values.iter().map(|(_, r)| r.distance).collect();
        assert_eq!(d, vec![0, 2, 5]);
        assert_eq!(out.values[2].1.predecessor, Some(GlobalVertexId(1)));
        assert_eq!(out.values[0].1.predecessor, None);
    }
}

#[test]
fn sssp_unreachable_and_preconditions() {
    let g = DirectedGraph::with_vertices([GlobalVertexId(5)], EdgeStream::from_weighted([(0, 1, 2)]));
    let parts = split(&g, 2, PartitionMode::Hash);
    let out = run_sssp(&parts, &sssp_program(GlobalVertexId(0), false), EngineConfig::default()).unwrap();
    assert_eq!(out.values[2].1.distance, INFINITY);
    assert_eq!(out.values[1].1.predecessor, None);
    assert!(matches!(
        run_sssp(&parts, &sssp_program(GlobalVertexId(77), false), EngineConfig::default()),
        Err(crate::programs::ProgramError::UnknownSource(_))
    ));
    let unweighted = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 1)]));
    let parts = split(&unweighted, 1, PartitionMode::Hash);
    assert!(matches!(
        run_sssp(&parts, &sssp_program(GlobalVertexId(0), false), EngineConfig::default()),
        Err(crate::programs::ProgramError::MissingWeights)
    ));
}

#[test]
fn empty_active_set_stops_after_one_superstep() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 1), (1, 2)]));
    let parts = split(&g, 2, PartitionMode::Hash);
    let p = cc_program();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| {
        let mut i = p.init(v);
        i.active = false;
        Some(i)
    })
    .unwrap();
    let reports = e.run_to_termination(None).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].messages_sent(), 0);
    assert_eq!(reports[0].applies(), 0);
}

#[test]
fn cc_triangles_and_path() {
    let tri = DirectedGraph::from_edges(EdgeStream::from_pairs([(1, 2), (2, 3), (3, 1), (7, 8), (8, 9), (9, 7)]).symmetrized());
    let out = run_cc(&split(&tri, 3, PartitionMode::GreedyOblivious), EngineConfig::default()).unwrap();
    let labels: Vec<u64> = out.values.iter().map(|(_, l)| *l).collect();
    assert_eq!(labels, vec![1, 1, 1, 7, 7, 7]);

    let n = 40u64;
    let path = DirectedGraph::from_edges(EdgeStream::from_pairs((0..n - 1).map(|i| (i, i + 1))).symmetrized());
    let out = run_cc(&split(&path, 4, PartitionMode::Hash), EngineConfig::default()).unwrap();
    assert!(out.values.iter().all(|(_, l)| *l == 0));
    assert!(out.reports.len() as u64 <= n);
}

#[test]
fn engine_matches_oracles_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..12 {
        let g = random_graph(&mut rng, 60, 240, true);
        let k = [1, 2, 3, 5, 8][trial % 5];
        let mode = [PartitionMode::Hash, PartitionMode::GreedyOblivious, PartitionMode::GreedyCoordinated][trial % 3];
        let parts = split(&g, k, mode);
        let config = EngineConfig {
            lanes: 1 + trial % 3,
            buffer_capacity: 64 + trial * 16,
            ..Default::default()
        };

        let src = GlobalVertexId(rng.random_range(0..60));
        let sssp = run_sssp(&parts, &sssp_program(src, true), config).unwrap();
        let oracle = serial_dijkstra(&g, src).unwrap();
        for ((v, r), (_, d)) in sssp.values.iter().zip(&oracle.values) {
            assert_eq!(r.distance, *d, "vertex {v}");
        }

        let sym = g.symmetrized();
        let sparts = split(&sym, k, mode);
        let cc = run_cc(&sparts, config).unwrap();
        assert_eq!(
            cc.values,
            serial_union_find_cc(&sym).values,
            "k {k} mode {mode}"
        );

        let pro = run_pagerank(&parts, &pr(), 20, config).unwrap();
        let oracle = serial_pagerank(&g, 20, 0.85, 0.15, 1.0);
        for ((_, a), (_, b)) in pro.values.iter().zip(&oracle.values) {
            assert!((a - b).abs() < 1e-9);
        }
        for r in &pro.reports {
            assert_eq!(r.messages_sent(), r.messages_received());
        }
    }
}

#[test]
fn combiners_reset_every_superstep() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(&mut rng, 50, 300, false);
    let parts = split(&g, 4, PartitionMode::Hash);
    let p = pr();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| Some(p.init(v))).unwrap();
    for _ in 0..5 {
        e.run_superstep().unwrap();
        assert!(e.combiners_at_identity());
        assert!(e.states().iter().all(|s| s.active_apply.count_ones() == 0));
    }
}

#[test]
fn shuffle_and_lanes_do_not_change_integer_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = random_graph(&mut rng, 200, 1200, true);
    let parts = split(&g, 4, PartitionMode::GreedyCoordinated);
    let base = run_sssp(&parts, &sssp_program(GlobalVertexId(3), true), EngineConfig::default()).unwrap();
    let pr_base = run_pagerank(&parts, &pr(), 15, EngineConfig::default()).unwrap();
    for seed in 0..4 {
        let config = EngineConfig {
            lanes: 3,
            shuffle_seed: Some(seed),
            ..Default::default()
        };
        let again = run_sssp(&parts, &sssp_program(GlobalVertexId(3), true), config).unwrap();
        assert_eq!(again.values, base.values);
        let pr_again = run_pagerank(&parts, &pr(), 15, config).unwrap();
        for ((_, a), (_, b)) in pr_again.values.iter().zip(&pr_base.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn checkpoint_restore_resumes_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = random_graph(&mut rng, 120, 500, true);
    let parts = split(&g, 3, PartitionMode::GreedyOblivious);
    let prog = sssp_program(GlobalVertexId(0), true);
    let full = run_sssp(&parts, &prog, EngineConfig::default()).unwrap();
    let total = full.reports.len() as u64;
    let half = total.div_ceil(2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.ckpt");
    let mut e = Engine::init_run(&parts, &prog, EngineConfig::default(), |v| Some(prog.init(v))).unwrap();
    e.run_to_termination(Some(half)).unwrap();
    e.checkpoint(&path).unwrap();
    drop(e);

    let mut r = Engine::restore(&parts, &prog, EngineConfig::default(), &path).unwrap();
    assert_eq!(r.superstep(), half);
    let rest = r.run_to_termination(None).unwrap();
    assert_eq!(half + rest.len() as u64, total);
    assert_eq!(r.output(), full.values);
}

#[test]
fn checkpoint_excludes_agent_state_and_checks_topology() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_graph(&mut rng, 80, 400, false);
    let p = cc_program();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ckpt");

    let parts = split(&g, 4, PartitionMode::Hash);
    let agents: usize = parts.iter().map(|q| q.combiner_count() + q.scatter_count()).sum();
    assert!(agents > 0);
    let e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| Some(p.init(v))).unwrap();
    e.checkpoint(&path).unwrap();
    let size = std::fs::metadata(&path).unwrap().len() as usize;
    let n = g.vertex_count();
    let per_part_fixed = 4 + 8 + 8 + 4 * 8;
    let words: usize = parts.iter().map(|q| 2 * q.master_count().div_ceil(64) * 8).sum();
    let header = 8 + 4 + 8 + 4 + 2 + 2 + 4 + 4;
    // two u64 columns over masters only
    assert_eq!(size, header + 4 * per_part_fixed + n * 16 + words);

    let other = split(&g, 2, PartitionMode::Hash);
    assert!(matches!(
        Engine::restore(&other, &p, EngineConfig::default(), &path),
        Err(EngineError::Compatibility(_))
    ));
    let shuffled = split(&g, 4, PartitionMode::GreedyOblivious);
    assert!(matches!(
        Engine::restore(&shuffled, &p, EngineConfig::default(), &path),
        Err(EngineError::Compatibility(_))
    ));
    let prog = pr();
    assert!(matches!(
        Engine::restore(&parts, &prog, EngineConfig::default(), &path),
        Err(EngineError::Compatibility(_))
    ));
    std::fs::write(&path, b"garbage").unwrap();
    assert!(Engine::restore(&parts, &p, EngineConfig::default(), &path).is_err());
}

#[test]
fn bad_config_rejected() {
    let g = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 1)]));
    let parts = split(&g, 1, PartitionMode::Hash);
    let p = cc_program();
    for config in [
        EngineConfig { lanes: 0, ..Default::default() },
        EngineConfig { buffer_capacity: 10, ..Default::default() },
        EngineConfig { lock_table_size: 0, ..Default::default() },
    ] {
        assert!(matches!(
            Engine::init_run(&parts, &p, config, |v| Some(p.init(v))),
            Err(EngineError::Config(_))
        ));
    }
}

#[test]
fn misrouted_messages_fail_the_superstep() {
    // partition 1 comes from a different graph and knows none of partition 0's targets
    let a = DirectedGraph::from_edges(EdgeStream::from_pairs([(0, 1), (0, 2), (0, 3), (9, 0), (8, 0), (7, 0), (6, 0)]));
    let b = DirectedGraph::from_edges(EdgeStream::from_pairs([(40, 41), (42, 43)]));
    let mut parts = placed(&a, 2, vec![1, 1, 1, 0, 0, 0, 0]);
    assert_eq!(parts[1].scatter_count(), 1);
    parts[1] = placed(&b, 2, vec![1, 1]).remove(1);
    let p = cc_program();
    let mut e = Engine::init_run(&parts, &p, EngineConfig::default(), |v| Some(p.init(v))).unwrap();
    let err = e.run_superstep().unwrap_err();
    assert!(matches!(err, EngineError::Routing { .. }), "{err}");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = random_graph(&mut rng, 300, 3000, false);
    let parts = split(&g, 6, PartitionMode::Hash);
    for config in [
        EngineConfig::default(),
        EngineConfig { shuffle_seed: Some(3), ..Default::default() },
    ] {
        let first = run_pagerank(&parts, &pr(), 10, config).unwrap().values;
        for _ in 0..5 {
            let again = run_pagerank(&parts, &pr(), 10, config).unwrap().values;
            assert!(first.iter().zip(&again).all(|(a, b)| a.1.to_bits() == b.1.to_bits()));
        }
    }
}
