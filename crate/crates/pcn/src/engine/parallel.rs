//! Reusable layer-parallel worker pool.
//!
//! Workers are spawned once and fed one phase at a time. Every worker
//! receives the full task list plus the shared immutable snapshot and
//! claims the tasks whose index is congruent to its own (striping), so
//! task→worker assignment is static and the merge below is deterministic:
//! outputs are reassembled in task order, making the applied result — and
//! therefore the whole trajectory — bit-identical to serial execution no
//! matter how threads interleave.
//!
//! The two mpsc hops per phase are the synchronization barrier: the
//! coordinator publishes the snapshot, then blocks until every worker has
//! answered, so no phase overlaps another and no task can see a value
//! written in its own phase.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use super::{compute_task, Snapshot, Task, TaskOut};
use crate::{PcnError, Result};

pub(crate) struct Pool {
    workers: usize,
    txs: Vec<mpsc::Sender<Job>>,
    rx: mpsc::Receiver<Reply>,
    handles: Vec<thread::JoinHandle<()>>,
}

struct Job {
    tasks: Arc<Vec<Task>>,
    snap: Arc<Snapshot>,
}

struct Reply {
    /// Per-task outputs as (task index, output), or the failure with the
    /// smallest task index this worker hit.
    outs: std::result::Result<Vec<(usize, TaskOut)>, (usize, PcnError)>,
}

impl Pool {
    pub(crate) fn new(workers: usize) -> Pool {
        let (reply_tx, reply_rx) = mpsc::channel::<Reply>();
        let mut txs = Vec::with_capacity(workers);
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            let (tx, rx) = mpsc::channel::<Job>();
            let replies = reply_tx.clone();
            let handle = thread::Builder::new()
                .name(format!("pcn-layer-{w}"))
                .spawn(move || worker_loop(w, workers, rx, replies))
                .expect("spawning a layer worker");
            txs.push(tx);
            handles.push(handle);
        }
        Pool { workers, txs, rx: reply_rx, handles }
    }

    pub(crate) fn workers(&self) -> usize {
        self.workers
    }

    pub(crate) fn run_phase(&mut self, tasks: Vec<Task>, snap: Snapshot) -> Result<Vec<TaskOut>> {
        let n_tasks = tasks.len();
        let tasks = Arc::new(tasks);
        let snap = Arc::new(snap);
        for tx in &self.txs {
            tx.send(Job { tasks: Arc::clone(&tasks), snap: Arc::clone(&snap) })
                .expect("a layer worker hung up");
        }
        let mut slots: Vec<Option<TaskOut>> = (0..n_tasks).map(|_| None).collect();
        let mut first_err: Option<(usize, PcnError)> = None;
        for _ in 0..self.workers {
            let reply = self.rx.recv().expect("a layer worker died");
            match reply.outs {
                Ok(outs) => {
                    for (idx, out) in outs {
                        debug_assert!(slots[idx].is_none());
                        slots[idx] = Some(out);
                    }
                }
                Err((idx, e)) => {
                    // Keep the error from the smallest task index so the
                    // reported failure matches what serial execution,
                    // which walks tasks in order, would have hit first.
                    if first_err.as_ref().map_or(true, |(i, _)| idx < *i) {
                        first_err = Some((idx, e));
                    }
                }
            }
        }
        if let Some((_, e)) = first_err {
            return Err(e);
        }
        Ok(slots
            .into_iter()
            .map(|s| s.expect("every task slot filled"))
            .collect())
    }
}

impl Drop for Pool {
    fn drop(&mut self) {
        self.txs.clear(); // hang up; workers exit their recv loop
        for handle in self.handles.drain(..) {
            handle.join().expect("joining a layer worker");
        }
    }
}

fn worker_loop(worker: usize, stride: usize, rx: mpsc::Receiver<Job>, replies: mpsc::Sender<Reply>) {
    while let Ok(job) = rx.recv() {
        let mut outs = Vec::new();
        let mut failure: Option<(usize, PcnError)> = None;
        for (idx, task) in job.tasks.iter().enumerate() {
            if idx % stride != worker {
                continue;
            }
            match compute_task(task, &job.snap) {
                Ok(out) => outs.push((idx, out)),
                Err(e) => {
                    failure = Some((idx, e));
                    break; // striping is ascending, so this is this worker's smallest index
                }
            }
        }
        let reply = Reply {
            outs: match failure {
                Some(err) => Err(err),
                None => Ok(outs),
            },
        };
        if replies.send(reply).is_err() {
            return; // coordinator is gone
        }
    }
}
