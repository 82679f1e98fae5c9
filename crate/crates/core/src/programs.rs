//! PageRank, single-source shortest paths and connected components as
//! Scatter-Combine programs, plus drivers that initialize and run them.

use crate::engine::wire::WireValue;
use crate::engine::{
    EdgeContext, Engine, EngineConfig, EngineError, SuperstepReport, VertexInit, VertexProgram,
};
use crate::graph::GlobalVertexId;
use crate::partition::AgentGraphPartition;

/// Unreached distance / unset label.
pub const INFINITY: u64 = u64::MAX;

/// Rank every vertex starts from.
pub const INITIAL_RANK: f64 = 1.0;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_BASE: f64 = 0.15;
pub const DEFAULT_ITERATIONS: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error("damping must be in (0, 1), got {0}")]
    Damping(f64),
    #[error("shortest paths need edge weights")]
    MissingWeights,
    #[error("source vertex {0} is not in the graph")]
    UnknownSource(GlobalVertexId),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRank {
    pub damping: f64,
    pub base: f64,
}

pub fn pagerank_program(damping: f64, base: f64) -> Result<PageRank, ProgramError> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(ProgramError::Damping(damping));
    }
    Ok(PageRank { damping, base })
}

impl PageRank {
    pub fn init(&self, _: GlobalVertexId) -> VertexInit<(), f64> {
        VertexInit {
            vertex: (),
            scatter: INITIAL_RANK,
            active: true,
        }
    }
}

// pr lives in the scatter column; vertex_data is an empty alias
impl VertexProgram for PageRank {
    type Vertex = ();
    type Scatter = f64;
    type Message = f64;
    type Output = f64;

    const MESSAGE_FORMAT: u16 = 1;
    const SCATTER_FORMAT: u16 = 2;

    fn name(&self) -> &'static str {
        "pagerank"
    }

    fn combine_identity(&self) -> f64 {
        0.0
    }

    fn scatter(&self, pr: &f64, edge: EdgeContext) -> f64 {
        pr / edge.source_out_degree as f64
    }

    fn combine(&self, acc: f64, msg: f64) -> f64 {
        acc + msg
    }

    fn apply(&self, _: &mut (), pr: &mut f64, sum: f64) -> bool {
        *pr = self.base + self.damping * sum;
        true
    }

    fn assert_to_halt(&self) -> bool {
        true
    }

    fn combine_activates_apply(&self) -> bool {
        false
    }

    fn output(&self, _: &(), pr: &f64) -> f64 {
        *pr
    }
}

/// SSSP master state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SsspVertex {
    pub distance: u64,
    pub predecessor: GlobalVertexId,
}

/// Candidate distance and the vertex it came through. Combines by minimum
/// distance, then minimum predecessor id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SsspMessage {
    pub distance: u64,
    pub predecessor: GlobalVertexId,
}

impl WireValue for SsspVertex {
    const WIDTH: usize = 16;
    fn write_to(&self, out: &mut [u8]) {
        self.distance.write_to(out);
        self.predecessor.write_to(&mut out[8..]);
    }
    fn read_from(bytes: &[u8]) -> Self {
        SsspVertex {
            distance: u64::read_from(bytes),
            predecessor: GlobalVertexId::read_from(&bytes[8..]),
        }
    }
}

impl WireValue for SsspMessage {
    const WIDTH: usize = 16;
    fn write_to(&self, out: &mut [u8]) {
        self.distance.write_to(out);
        self.predecessor.write_to(&mut out[8..]);
    }
    fn read_from(bytes: &[u8]) -> Self {
        SsspMessage {
            distance: u64::read_from(bytes),
            predecessor: GlobalVertexId::read_from(&bytes[8..]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SsspResult {
    /// [`INFINITY`] when unreachable.
    pub distance: u64,
    pub predecessor: Option<GlobalVertexId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sssp {
    pub source: GlobalVertexId,
    pub record_predecessor: bool,
}

pub fn sssp_program(source: GlobalVertexId, record_predecessor: bool) -> Sssp {
    Sssp {
        source,
        record_predecessor,
    }
}

impl Sssp {
    pub fn init(&self, v: GlobalVertexId) -> VertexInit<SsspVertex, u64> {
        let source = v == self.source;
        let d = if source { 0 } else { INFINITY };
        VertexInit {
            vertex: SsspVertex {
                distance: d,
                predecessor: GlobalVertexId::NONE,
            },
            scatter: d,
            active: source,
        }
    }
}

impl VertexProgram for Sssp {
    type Vertex = SsspVertex;
    /// oldDistance
    type Scatter = u64;
    type Message = SsspMessage;
    type Output = SsspResult;

    const MESSAGE_FORMAT: u16 = 3;
    const SCATTER_FORMAT: u16 = 4;

    fn name(&self) -> &'static str {
        "sssp"
    }

    fn combine_identity(&self) -> SsspMessage {
        SsspMessage {
            distance: INFINITY,
            predecessor: GlobalVertexId::NONE,
        }
    }

    fn scatter(&self, old: &u64, edge: EdgeContext) -> SsspMessage {
        SsspMessage {
            distance: old.saturating_add(edge.weight.unwrap_or(0) as u64),
            predecessor: if self.record_predecessor {
                edge.source
            } else {
                GlobalVertexId::NONE
            },
        }
    }

    fn combine(&self, acc: SsspMessage, msg: SsspMessage) -> SsspMessage {
        acc.min(msg)
    }

    fn apply(&self, v: &mut SsspVertex, old: &mut u64, sum: SsspMessage) -> bool {
        if sum.distance < v.distance {
            v.distance = sum.distance;
            v.predecessor = sum.predecessor;
            *old = sum.distance;
            true
        } else {
            false
        }
    }

    fn assert_to_halt(&self) -> bool {
        false
    }

    fn combine_activates_apply(&self) -> bool {
        true
    }

    fn output(&self, v: &SsspVertex, _: &u64) -> SsspResult {
        SsspResult {
            distance: v.distance,
            predecessor: (v.predecessor != GlobalVertexId::NONE).then_some(v.predecessor),
        }
    }
}

/// Label propagation: every vertex ends with the smallest id in its
/// (weakly) connected component. Expects a symmetrized graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConnectedComponents;

pub fn cc_program() -> ConnectedComponents {
    ConnectedComponents
}

impl ConnectedComponents {
    pub fn init(&self, v: GlobalVertexId) -> VertexInit<u64, u64> {
        VertexInit {
            vertex: v.0,
            scatter: v.0,
            active: true,
        }
    }
}

impl VertexProgram for ConnectedComponents {
    /// label
    type Vertex = u64;
    /// oldLabel
    type Scatter = u64;
    type Message = u64;
    type Output = u64;

    const MESSAGE_FORMAT: u16 = 5;
    const SCATTER_FORMAT: u16 = 6;

    fn name(&self) -> &'static str {
        "cc"
    }

    fn combine_identity(&self) -> u64 {
        INFINITY
    }

    fn scatter(&self, old: &u64, _: EdgeContext) -> u64 {
        *old
    }

    fn combine(&self, acc: u64, msg: u64) -> u64 {
        acc.min(msg)
    }

    fn apply(&self, label: &mut u64, old: &mut u64, sum: u64) -> bool {
        if sum < *label {
            *label = sum;
            *old = sum;
            true
        } else {
            false
        }
    }

    fn assert_to_halt(&self) -> bool {
        false
    }

    fn combine_activates_apply(&self) -> bool {
        true
    }

    fn output(&self, label: &u64, _: &u64) -> u64 {
        *label
    }
}

/// Values and per-superstep reports of a finished run.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub values: Vec<(GlobalVertexId, T)>,
    pub reports: Vec<SuperstepReport>,
}

pub fn run_pagerank(
    parts: &[AgentGraphPartition],
    program: &PageRank,
    iterations: u64,
    config: EngineConfig,
) -> Result<RunOutput<f64>, ProgramError> {
    let mut engine = Engine::init_run(parts, program, config, |v| Some(program.init(v)))?;
    let reports = engine.run_to_termination(Some(iterations))?;
    Ok(RunOutput {
        values: engine.output(),
        reports,
    })
}

/// Checks that `program` can run on `parts`.
pub fn check_sssp(parts: &[AgentGraphPartition], program: &Sssp) -> Result<(), ProgramError> {
    if parts.iter().any(|p| !p.is_weighted()) {
        return Err(ProgramError::MissingWeights);
    }
    if !parts
        .iter()
        .any(|p| p.master_index().to_local(program.source).is_some())
    {
        return Err(ProgramError::UnknownSource(program.source));
    }
    Ok(())
}

pub fn run_sssp(
    parts: &[AgentGraphPartition],
    program: &Sssp,
    config: EngineConfig,
) -> Result<RunOutput<SsspResult>, ProgramError> {
    check_sssp(parts, program)?;
    let mut engine = Engine::init_run(parts, program, config, |v| Some(program.init(v)))?;
    let reports = engine.run_to_termination(None)?;
    Ok(RunOutput {
        values: engine.output(),
        reports,
    })
}

pub fn run_cc(
    parts: &[AgentGraphPartition],
    config: EngineConfig,
) -> Result<RunOutput<u64>, ProgramError> {
    let program = cc_program();
    let mut engine = Engine::init_run(parts, &program, config, |v| Some(program.init(v)))?;
    let reports = engine.run_to_termination(None)?;
    Ok(RunOutput {
        values: engine.output(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(weight: Option<u32>, deg: u64) -> EdgeContext {
        EdgeContext {
            source: GlobalVertexId(3),
            source_out_degree: deg,
            weight,
        }
    }

    #[test]
    fn pagerank_parameters() {
        assert!(pagerank_program(0.85, 0.15).is_ok());
        assert!(matches!(pagerank_program(1.0, 0.15), Err(ProgramError::Damping(_))));
        assert!(matches!(pagerank_program(0.0, 0.15), Err(ProgramError::Damping(_))));
        let p = pagerank_program(0.85, 0.15).unwrap();
        assert_eq!(p.scatter(&1.0, ctx(None, 4)), 0.25);
        let mut pr = 7.0;
        p.apply(&mut (), &mut pr, 0.0);
        assert_eq!(pr, 0.15);
    }

    #[test]
    fn sssp_saturates_and_orders() {
        let s = sssp_program(GlobalVertexId(0), true);
        let m = s.scatter(&(INFINITY - 1), ctx(Some(5), 1));
        assert_eq!(m.distance, INFINITY);
        let a = SsspMessage {
            distance: 4,
            predecessor: GlobalVertexId(9),
        };
        let b = SsspMessage {
            distance: 4,
            predecessor: GlobalVertexId(2),
        };
        assert_eq!(s.combine(a, b), b);
        let mut v = s.init(GlobalVertexId(1)).vertex;
        let mut old = INFINITY;
        assert!(s.apply(&mut v, &mut old, b));
        assert_eq!((v.distance, old), (4, 4));
        assert!(!s.apply(&mut v, &mut old, a));
        let init = s.init(GlobalVertexId(0));
        assert_eq!(init.vertex.distance, 0);
        assert!(init.active);
    }

    #[test]
    fn wire_encodings_round_trip() {
        let m = SsspMessage {
            distance: 77,
            predecessor: GlobalVertexId(u64::MAX - 1),
        };
        let mut buf = [0u8; 16];
        m.write_to(&mut buf);
        assert_eq!(SsspMessage::read_from(&buf), m);
        let v = SsspVertex {
            distance: 1,
            predecessor: GlobalVertexId(2),
        };
        v.write_to(&mut buf);
        assert_eq!(SsspVertex::read_from(&buf), v);
    }

    fn msg() -> impl Strategy<Value = SsspMessage> {
        (any::<u64>(), any::<u64>()).prop_map(|(d, p)| SsspMessage {
            distance: d,
            predecessor: GlobalVertexId(p),
        })
    }

    proptest! {
        #[test]
        fn sssp_combine_laws(a in msg(), b in msg(), c in msg()) {
            let s = sssp_program(GlobalVertexId(0), true);
            let id = s.combine_identity();
            prop_assert_eq!(s.combine(a, b), s.combine(b, a));
            prop_assert_eq!(s.combine(s.combine(a, b), c), s.combine(a, s.combine(b, c)));
            prop_assert_eq!(s.combine(id, a), a);
            prop_assert_eq!(s.combine(a, id), a);
        }

        #[test]
        fn cc_combine_laws(a: u64, b: u64, c: u64) {
            let p = cc_program();
            prop_assert_eq!(p.combine(a, b), p.combine(b, a));
            prop_assert_eq!(p.combine(p.combine(a, b), c), p.combine(a, p.combine(b, c)));
            prop_assert_eq!(p.combine(p.combine_identity(), a), a);
        }

        #[test]
        fn pagerank_sum_order_independent(mut xs in prop::collection::vec(0.0f64..10.0, 1..200), seed: u64) {
            let p = pagerank_program(0.85, 0.15).unwrap();
            let fold = |v: &[f64]| v.iter().fold(p.combine_identity(), |acc, &x| p.combine(acc, x));
            let forward = fold(&xs);
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            xs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = fold(&xs);
            prop_assert!((forward - shuffled).abs() <= 1e-12 * forward.max(1.0));
            prop_assert_eq!(p.combine(0.0, 2.5), 2.5);
        }
    }
}
