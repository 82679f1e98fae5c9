use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::info;

use agent_graph::engine::{Engine, EngineConfig, SuperstepReport, VertexInit, VertexProgram};
use agent_graph::graph::io::{read_any, write_any};
use agent_graph::graph::{DirectedGraph, GlobalVertexId};
use agent_graph::oracle::{serial_dijkstra, serial_pagerank, serial_union_find_cc, write_csv};
use agent_graph::partition::io::{load_partitions, save_partitions, Manifest};
use agent_graph::partition::{
    build_agent_graph, compute_metrics, graph_from_partitions, partition_stream, AgentGraphPartition,
    PartitionConfig, PartitionMetrics,
};
use agent_graph::programs::{cc_program, check_sssp, pagerank_program, sssp_program, INFINITY, INITIAL_RANK};
use agent_graph::rmat::{assign_weights, generate_rmat, RmatParams};

use crate::args::{App, GenArgs, ModeArg, OracleArgs, PartitionArgs, ReportFormat, RunArgs, PARALLEL_PRESET_LOADERS};
use crate::error::CliError;

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let params = RmatParams {
        edge_factor: a.edge_factor,
        permute: a.permute,
        ..RmatParams::graph500(a.scale, a.seed)
    };
    let mut edges = generate_rmat(&params)?;
    if let Some((lo, hi)) = a.weights {
        edges = assign_weights(&edges, lo, hi, a.seed)?;
    }
    write_any(&a.output, &edges)?;
    println!("vertices {}", params.vertex_count());
    println!("edges {}", edges.len());
    println!("weighted {}", edges.is_weighted());
    Ok(())
}

fn loaders_for(a: &PartitionArgs) -> Result<usize, CliError> {
    match (a.mode, a.loaders) {
        (ModeArg::GreS, Some(l)) if l != 1 => Err(CliError::Param(format!(
            "the gre-s preset uses a single loader, got --loaders {l}"
        ))),
        (ModeArg::GreP, None) => Ok(PARALLEL_PRESET_LOADERS),
        (_, Some(0)) => Err(CliError::Param("--loaders must be >= 1".into())),
        (_, l) => Ok(l.unwrap_or(1)),
    }
}

fn load_graph(path: &Path, weighted: bool, symmetrize: bool) -> Result<DirectedGraph, CliError> {
    let mut edges = read_any(path, weighted)?;
    if symmetrize {
        edges = edges.symmetrized();
    }
    Ok(DirectedGraph::from_edges(edges))
}

pub fn partition(a: &PartitionArgs) -> Result<(), CliError> {
    if a.epsilon.is_nan() || a.epsilon < 0.0 {
        return Err(CliError::Param(format!("--epsilon must be >= 0, got {}", a.epsilon)));
    }
    if a.sync_interval == 0 {
        return Err(CliError::Param("--sync-interval must be >= 1".into()));
    }
    let loaders = loaders_for(a)?;
    let mode = a.mode.mode();
    let started = Instant::now();
    let g = load_graph(&a.input, a.weighted, a.symmetrize)?;
    if g.vertex_count() == 0 {
        return Err(CliError::Config("input has no edges".into()));
    }
    info!("loaded {} vertices, {} edges in {:.2?}", g.vertex_count(), g.edge_count(), started.elapsed());

    let cfg = PartitionConfig::new(a.k as usize, mode)
        .loaders(loaders)
        .sync_interval(a.sync_interval)
        .epsilon(a.epsilon);
    let started = Instant::now();
    let placement = partition_stream(g.edges(), &cfg)?;
    let parts = build_agent_graph(&g, &placement)?;
    info!("partitioned with {mode}, {loaders} loader(s) in {:.2?}", started.elapsed());

    let metrics = compute_metrics(
        &parts,
        mode,
        g.vertex_count() as u64,
        g.edge_count() as u64,
        g.mean_degree(),
        a.epsilon,
    )?;
    let manifest = Manifest {
        k: a.k,
        mode,
        vertex_count: g.vertex_count() as u64,
        edge_count: g.edge_count() as u64,
        weighted: g.edges().is_weighted(),
        symmetrized: a.symmetrize,
        files: Vec::new(),
    };
    save_partitions(&a.output, &parts, manifest, Some(&metrics))?;
    match a.report_format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&metrics)?),
        ReportFormat::Text => print!("{}", metrics_text(&metrics)),
    }
    Ok(())
}

pub fn metrics_text(m: &PartitionMetrics) -> String {
    let rows: Vec<(&str, String)> = vec![
        ("mode", m.mode.to_string()),
        ("k", m.k.to_string()),
        ("vertices", m.vertex_count.to_string()),
        ("edges", m.edge_count.to_string()),
        ("mean_degree", format!("{:.4}", m.mean_degree)),
        ("scatter_agents", m.scatter_count.to_string()),
        ("combiner_agents", m.combiner_count.to_string()),
        ("agent_count", m.agent_count.to_string()),
        ("agent_rate", format!("{:.6}", m.agent_rate)),
        ("equivalent_edge_cut_rate", format!("{:.6}", m.equivalent_edge_cut_rate)),
        ("cut_factor", format!("{:.6}", m.cut_factor)),
        ("edge_cut_rate", format!("{:.6}", m.edge_cut_rate)),
        ("vertexcut_cut_factor", format!("{:.6}", m.vertexcut_cut_factor)),
        ("scatter_share", format!("{:.4}", m.scatter_share)),
        ("combiner_share", format!("{:.4}", m.combiner_share)),
        ("edge_balance", format!("{:.4}", m.edge_balance)),
        ("balance_satisfied", format!("{} (epsilon {})", m.balance_satisfied, m.epsilon)),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

/// Appends superstep reports as JSON lines.
struct ReportSink(Option<std::io::BufWriter<std::fs::File>>);

impl ReportSink {
    fn open(path: Option<&Path>) -> Result<Self, CliError> {
        Ok(ReportSink(match path {
            Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => None,
        }))
    }

    fn write(&mut self, r: &SuperstepReport) -> Result<(), CliError> {
        if let Some(w) = &mut self.0 {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(mut w) = self.0 {
            w.flush()?;
        }
        Ok(())
    }
}

fn engine_config(a: &RunArgs) -> Result<EngineConfig, CliError> {
    let config = EngineConfig {
        lanes: a.engine.workers,
        buffer_capacity: a.engine.buffer_capacity,
        lock_table_size: a.engine.lock_table_size,
        shuffle_seed: a.engine.shuffle_seed,
    };
    config.validate().map_err(|e| CliError::Param(e.to_string()))?;
    Ok(config)
}

/// Drives one program to termination or the superstep cap, writing reports
/// and periodic checkpoints.
fn execute<P, F>(
    parts: &[AgentGraphPartition],
    program: &P,
    a: &RunArgs,
    cap: Option<u64>,
    init: F,
) -> Result<Vec<(GlobalVertexId, P::Output)>, CliError>
where
    P: VertexProgram,
    F: Fn(GlobalVertexId) -> Option<VertexInit<P::Vertex, P::Scatter>>,
{
    let config = engine_config(a)?;
    if a.checkpoint_interval == Some(0) {
        return Err(CliError::Param("--checkpoint-interval must be >= 1".into()));
    }
    let mut engine = match &a.resume {
        Some(path) => {
            let e = Engine::restore(parts, program, config, path)?;
            info!("resumed from {} at superstep {}", path.display(), e.superstep());
            e
        }
        None => Engine::init_run(parts, program, config, init)?,
    };
    let mut sink = ReportSink::open(a.report.as_deref())?;
    let started = Instant::now();
    let mut messages = 0u64;
    loop {
        if cap.is_some_and(|c| engine.superstep() >= c) {
            break;
        }
        let r = engine.run_superstep()?;
        messages += r.messages_sent();
        sink.write(&r)?;
        if let (Some(every), Some(path)) = (a.checkpoint_interval, &a.checkpoint) {
            if engine.superstep() % every == 0 {
                engine.checkpoint(path)?;
                info!("checkpoint at superstep {} -> {}", engine.superstep(), path.display());
            }
        }
        if r.active_scatter == 0 {
            break;
        }
    }
    sink.finish()?;
    info!(
        "{}: {} supersteps, {} network messages, {:.2?}",
        program.name(),
        engine.superstep(),
        messages,
        started.elapsed()
    );
    Ok(engine.output())
}

/// CC runs on the symmetrized graph. Partitions of a directed input are
/// rebuilt from their edges with the same k and mode.
fn symmetric_view(manifest: &Manifest, parts: Vec<AgentGraphPartition>) -> Result<Vec<AgentGraphPartition>, CliError> {
    if manifest.symmetrized {
        return Ok(parts);
    }
    info!(
        "cc: partitions hold a directed graph; running on its symmetrized view (re-partitioned, k = {}, mode = {})",
        manifest.k, manifest.mode
    );
    let g = graph_from_partitions(&parts).symmetrized();
    let placement = partition_stream(g.edges(), &PartitionConfig::new(manifest.k as usize, manifest.mode))?;
    Ok(build_agent_graph(&g, &placement)?)
}

fn distance_text(d: u64) -> String {
    if d == INFINITY {
        "inf".into()
    } else {
        d.to_string()
    }
}

fn write_values<T: Display>(path: &Path, values: &[(GlobalVertexId, T)]) -> Result<(), CliError> {
    write_csv(path, values)?;
    info!("wrote {} values to {}", values.len(), path.display());
    Ok(())
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let (manifest, parts) = load_partitions(&a.partitions)?;
    info!(
        "loaded {} partitions ({} vertices, {} edges, {})",
        manifest.k, manifest.vertex_count, manifest.edge_count, manifest.mode
    );
    match a.app {
        App::Pagerank => {
            let program = pagerank_program(a.damping, a.base)?;
            let values = execute(&parts, &program, a, Some(a.iterations), |v| Some(program.init(v)))?;
            write_values(&a.output, &values)
        }
        App::Sssp => {
            let source = a
                .source
                .ok_or_else(|| CliError::Param("sssp needs --source".into()))?;
            let program = sssp_program(GlobalVertexId(source), true);
            check_sssp(&parts, &program)?;
            let values = execute(&parts, &program, a, None, |v| Some(program.init(v)))?;
            let text: Vec<(GlobalVertexId, String)> =
                values.into_iter().map(|(g, r)| (g, distance_text(r.distance))).collect();
            write_values(&a.output, &text)
        }
        App::Cc => {
            let parts = symmetric_view(&manifest, parts)?;
            let program = cc_program();
            let values = execute(&parts, &program, a, None, |v| Some(program.init(v)))?;
            write_values(&a.output, &values)
        }
    }
}

pub fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let symmetrize = a.app == App::Cc;
    if symmetrize {
        info!("cc: symmetrizing the input");
    }
    let g = load_graph(&a.input, a.weighted, symmetrize)?;
    match a.app {
        App::Pagerank => {
            pagerank_program(a.damping, a.base)?;
            let r = serial_pagerank(&g, a.iterations, a.damping, a.base, INITIAL_RANK);
            write_values(&a.output, &r.values)
        }
        App::Sssp => {
            let source = a
                .source
                .ok_or_else(|| CliError::Param("sssp needs --source".into()))?;
            let r = serial_dijkstra(&g, GlobalVertexId(source))?;
            let text: Vec<(GlobalVertexId, String)> =
                r.values.into_iter().map(|(g, d)| (g, distance_text(d))).collect();
            write_values(&a.output, &text)
        }
        App::Cc => write_values(&a.output, &serial_union_find_cc(&g).values),
    }
}
