use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Barrier};

use crossbeam_channel::{Receiver, Sender};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sync::{Bitmap, LockTable, LockedColumn};
use super::wire::{pack_buffers, unpack_buffer, WireValue, OP_COMBINE, OP_SCATTER};
use super::{
    combine_slot, EdgeContext, EngineConfig, EngineError, PartitionCounters, RuntimeState,
    SuperstepReport, VertexProgram,
};
use crate::graph::{GlobalVertexId, LocalVertexId};
use crate::partition::AgentGraphPartition;

type Outgoing<T> = Vec<Vec<(GlobalVertexId, T)>>;

struct LaneOut<T> {
    outgoing: Outgoing<T>,
    scatters: u64,
    combines: u64,
}

struct Worker<'w, P: VertexProgram> {
    part: &'w AgentGraphPartition,
    program: &'w P,
    config: &'w EngineConfig,
    locks: &'w LockTable,
    pool: Option<&'w rayon::ThreadPool>,
    inbox: &'w Receiver<Vec<u8>>,
    outboxes: &'w [Sender<Vec<u8>>],
    barrier: &'w Barrier,
    superstep: u64,
}

pub(crate) fn superstep<P: VertexProgram>(
    parts: &[AgentGraphPartition],
    program: &P,
    config: &EngineConfig,
    states: &mut [RuntimeState<P>],
    locks: &[LockTable],
    pools: &[Option<Arc<rayon::ThreadPool>>],
    superstep: u64,
) -> Result<SuperstepReport, EngineError> {
    let k = parts.len();
    let (senders, receivers): (Vec<_>, Vec<_>) =
        (0..k).map(|_| crossbeam_channel::unbounded::<Vec<u8>>()).unzip();
    let barrier = Barrier::new(k);

    let results: Vec<Result<PartitionCounters, EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = states
            .iter_mut()
            .enumerate()
            .map(|(i, st)| {
                let w = Worker {
                    part: &parts[i],
                    program,
                    config,
                    locks: &locks[i],
                    pool: pools[i].as_deref(),
                    inbox: &receivers[i],
                    outboxes: &senders,
                    barrier: &barrier,
                    superstep,
                };
                std::thread::Builder::new()
                    .name(format!("worker-{i}"))
                    .spawn_scoped(scope, move || w.run(st))
                    .expect("spawn worker thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(EngineError::Worker("worker thread died".into()))))
            .collect()
    });

    let partitions = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = SuperstepReport {
        superstep,
        partitions,
        active_scatter: states.iter().map(|s| s.active_scatter_count()).sum(),
    };
    let (sent, received) = (report.messages_sent(), report.messages_received());
    if sent != received {
        return Err(EngineError::Conservation {
            superstep,
            sent,
            received,
        });
    }
    Ok(report)
}

fn wire_cmp<T: WireValue>(a: &T, b: &T) -> std::cmp::Ordering {
    let (mut x, mut y) = (vec![0u8; T::WIDTH], vec![0u8; T::WIDTH]);
    a.write_to(&mut x);
    b.write_to(&mut y);
    x.cmp(&y)
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

impl<P: VertexProgram> Worker<'_, P> {
    fn k(&self) -> usize {
        self.outboxes.len()
    }

    fn run(&self, st: &mut RuntimeState<P>) -> Result<PartitionCounters, EngineError> {
        let mut c = PartitionCounters {
            partition: self.part.index(),
            ..Default::default()
        };
        let mut failure: Option<EngineError> = None;
        // every wave ends at a barrier, even after a failure, so peers never hang
        let mut wave = |f: &mut dyn FnMut() -> Result<(), EngineError>| {
            if failure.is_none() {
                match catch_unwind(AssertUnwindSafe(f)) {
                    Ok(Ok(())) => {}
                    Ok(Err(e)) => failure = Some(e),
                    Err(p) => failure = Some(EngineError::Worker(panic_message(p))),
                }
            }
            self.barrier.wait();
        };
        wave(&mut || self.scatter_wave(st, &mut c));
        wave(&mut || self.relay_wave(st, &mut c));
        wave(&mut || self.flush_wave(st, &mut c));
        wave(&mut || self.fold_wave(st, &mut c));
        wave(&mut || {
            self.apply_phase(st, &mut c);
            Ok(())
        });
        failure.map_or(Ok(c), Err)
    }

    fn shuffle<T>(&self, items: &mut [T], wave: u64) {
        if let Some(seed) = self.config.shuffle_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = self.k() as u64;
            rng.set_stream((self.superstep * k + self.part.index() as u64) * 4 + wave);
            items.shuffle(&mut rng);
        }
    }

    /// Splits `items` over the execution lanes.
    fn lanes<O: Send>(
        &self,
        items: &[u32],
        f: impl Fn(&[u32], &mut LaneOut<O>) + Sync,
    ) -> Vec<LaneOut<O>> {
        let k = self.k();
        let fresh = || LaneOut {
            outgoing: (0..k).map(|_| Vec::new()).collect(),
            scatters: 0,
            combines: 0,
        };
        match self.pool {
            Some(pool) if items.len() > 1 => {
                let chunk = (items.len() / (pool.current_num_threads() * 4)).max(64);
                pool.install(|| {
                    items
                        .par_chunks(chunk)
                        .map(|c| {
                            let mut o = fresh();
                            f(c, &mut o);
                            o
                        })
                        .collect()
                })
            }
            _ => {
                let mut o = fresh();
                f(items, &mut o);
                vec![o]
            }
        }
    }

    /// Runs `scatter` along every local out-edge of `l` and folds the
    /// messages into local masters and combiners.
    fn scatter_edges<O>(
        &self,
        l: LocalVertexId,
        source: GlobalVertexId,
        data: &P::Scatter,
        combine: &LockedColumn<P::Message>,
        apply_flags: &Bitmap,
        out: &mut LaneOut<O>,
    ) {
        let part = self.part;
        let csr = part.csr();
        let n = part.master_count();
        let activates = self.program.combine_activates_apply();
        let deg = part.global_out_degree(l);
        let range = csr.edge_range(l);
        out.scatters += 1;
        out.combines += range.len() as u64;
        for slot in range {
            let t = csr.column_indices()[slot];
            let msg = self.program.scatter(
                data,
                EdgeContext {
                    source,
                    source_out_degree: deg,
                    weight: part.edge_weight(slot),
                },
            );
            combine.update(self.locks, t.0, combine_slot(part, t), |acc| {
                self.program.combine(acc, msg)
            });
            if activates && t.index() < n {
                apply_flags.set(t.index());
            }
        }
    }

    fn send<T: WireValue>(
        &self,
        outgoing: Outgoing<T>,
        op: u8,
        format: u16,
        c: &mut PartitionCounters,
    ) -> Result<(), EngineError> {
        for (p, msgs) in outgoing.into_iter().enumerate() {
            if msgs.is_empty() {
                continue;
            }
            c.messages_sent += msgs.len() as u64;
            for buf in pack_buffers(&msgs, op, format, self.config.buffer_capacity)? {
                c.buffers_sent += 1;
                self.outboxes[p]
                    .send(buf)
                    .map_err(|_| EngineError::Worker(format!("partition {p} inbox closed")))?;
            }
        }
        Ok(())
    }

    fn drain<T: WireValue>(
        &self,
        op: u8,
        format: u16,
        c: &mut PartitionCounters,
    ) -> Result<Vec<(GlobalVertexId, T)>, EngineError> {
        let mut all = Vec::new();
        while let Ok(buf) = self.inbox.try_recv() {
            let (h, mut recs) = unpack_buffer::<T>(&buf)?;
            if h.op != op || h.format_id != format {
                return Err(EngineError::Wire(format!(
                    "expected op {op} format {format}, got op {} format {}",
                    h.op, h.format_id
                )));
            }
            all.append(&mut recs);
        }
        c.messages_received += all.len() as u64;
        // arrival order depends on thread timing; fold in a fixed order instead
        all.sort_unstable_by(|(ga, a), (gb, b)| ga.cmp(gb).then_with(|| wire_cmp(a, b)));
        Ok(all)
    }

    fn merge_lanes<T>(lanes: Vec<LaneOut<T>>, k: usize, c: &mut PartitionCounters) -> Outgoing<T> {
        let mut outgoing: Outgoing<T> = (0..k).map(|_| Vec::new()).collect();
        for lane in lanes {
            c.scatters += lane.scatters;
            c.combines += lane.combines;
            for (dst, mut msgs) in outgoing.iter_mut().zip(lane.outgoing) {
                dst.append(&mut msgs);
            }
        }
        outgoing
    }

    /// Active masters scatter locally and ship their payload to scatter agents.
    fn scatter_wave(&self, st: &mut RuntimeState<P>, c: &mut PartitionCounters) -> Result<(), EngineError> {
        let mut active = st.active_scatter.ones();
        self.shuffle(&mut active, 0);
        let part = self.part;
        let scatter = st.scatter_data.as_slice();
        let (combine, apply_flags, act) = (&st.combine_data, &st.active_apply, &st.active_scatter);
        let lanes = self.lanes::<P::Scatter>(&active, |chunk, out| {
            for &m in chunk {
                let l = LocalVertexId(m);
                let gid = part.masters()[m as usize];
                let data = &scatter[m as usize];
                self.scatter_edges(l, gid, data, combine, apply_flags, out);
                for &p in part.scatter_placement(l) {
                    out.outgoing[p as usize].push((gid, *data));
                }
                if !self.program.assert_to_halt() {
                    act.clear(m as usize);
                }
            }
        });
        let outgoing = Self::merge_lanes(lanes, self.k(), c);
        self.send(outgoing, OP_SCATTER, P::SCATTER_FORMAT, c)
    }

    /// Scatter agents relay their master's payload along local out-edges.
    fn relay_wave(&self, st: &mut RuntimeState<P>, c: &mut PartitionCounters) -> Result<(), EngineError> {
        let mut received = self.drain::<P::Scatter>(OP_SCATTER, P::SCATTER_FORMAT, c)?;
        self.shuffle(&mut received, 1);
        let part = self.part;
        let mut agents = Vec::with_capacity(received.len());
        {
            let slots = st.scatter_data.as_mut_slice();
            for (gid, payload) in received {
                let l = part.scatter_index().to_local(gid).ok_or(EngineError::Routing {
                    part: part.index(),
                    vertex: gid,
                    op: OP_SCATTER,
                })?;
                slots[l.index()] = payload;
                agents.push(l.0);
            }
        }
        let scatter = st.scatter_data.as_slice();
        let (combine, apply_flags) = (&st.combine_data, &st.active_apply);
        let n = part.master_count();
        let lanes = self.lanes::<()>(&agents, |chunk, out| {
            for &a in chunk {
                let gid = part.scatter_globals()[a as usize - n];
                self.scatter_edges(LocalVertexId(a), gid, &scatter[a as usize], combine, apply_flags, out);
            }
        });
        Self::merge_lanes(lanes, self.k(), c);
        Ok(())
    }

    /// Every combiner holding a non-identity value forwards it once to its
    /// master and resets.
    fn flush_wave(&self, st: &mut RuntimeState<P>, c: &mut PartitionCounters) -> Result<(), EngineError> {
        let part = self.part;
        let id = self.program.combine_identity();
        let n = part.master_count();
        let s = part.scatter_count();
        let mut outgoing: Outgoing<P::Message> = (0..self.k()).map(|_| Vec::new()).collect();
        let cells = st.combine_data.as_mut_slice();
        for (j, cell) in cells[n..].iter_mut().enumerate() {
            if *cell != id {
                let owner = part.combiner_owner(LocalVertexId((n + s + j) as u32));
                outgoing[owner as usize].push((part.combiner_globals()[j], *cell));
                *cell = id;
            }
        }
        self.send(outgoing, OP_COMBINE, P::MESSAGE_FORMAT, c)
    }

    /// Masters fold the messages forwarded by remote combiners.
    fn fold_wave(&self, st: &mut RuntimeState<P>, c: &mut PartitionCounters) -> Result<(), EngineError> {
        let mut received = self.drain::<P::Message>(OP_COMBINE, P::MESSAGE_FORMAT, c)?;
        self.shuffle(&mut received, 2);
        let part = self.part;
        let activates = self.program.combine_activates_apply();
        let cells = st.combine_data.as_mut_slice();
        for (gid, msg) in received {
            let l = part.master_index().to_local(gid).ok_or(EngineError::Routing {
                part: part.index(),
                vertex: gid,
                op: OP_COMBINE,
            })?;
            cells[l.index()] = self.program.combine(cells[l.index()], msg);
            c.combines += 1;
            if activates {
                st.active_apply.set(l.index());
            }
        }
        Ok(())
    }

    fn apply_phase(&self, st: &mut RuntimeState<P>, c: &mut PartitionCounters) {
        let n = self.part.master_count();
        let id = self.program.combine_identity();
        let activates = self.program.combine_activates_apply();
        let RuntimeState {
            vertex_data,
            scatter_data,
            combine_data,
            active_scatter,
            active_apply,
        } = st;
        let vertex = vertex_data.as_mut_slice();
        let scatter = &mut scatter_data.as_mut_slice()[..n];
        let combine = &mut combine_data.as_mut_slice()[..n];
        let (flags, act) = (&*active_apply, &*active_scatter);
        let program = self.program;
        let apply_one = |m: usize, v: &mut P::Vertex, s: &mut P::Scatter, cm: &mut P::Message| -> u64 {
            if activates && !flags.get(m) {
                return 0;
            }
            let sum = std::mem::replace(cm, id);
            if program.apply(v, s, sum) {
                act.set(m);
            }
            1
        };
        c.applies += match self.pool {
            Some(pool) => pool.install(|| {
                vertex
                    .par_iter_mut()
                    .zip(scatter.par_iter_mut())
                    .zip(combine.par_iter_mut())
                    .enumerate()
                    .map(|(m, ((v, s), cm))| apply_one(m, v, s, cm))
                    .sum::<u64>()
            }),
            None => vertex
                .iter_mut()
                .zip(scatter.iter_mut())
                .zip(combine.iter_mut())
                .enumerate()
                .map(|(m, ((v, s), cm))| apply_one(m, v, s, cm))
                .sum(),
        };
        active_apply.clear_all();
    }
}
