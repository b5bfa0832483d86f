//! In-process simulated backend: one thread per rank, one channel per
//! ordered pair of ranks.

use std::cell::Cell;
use std::fmt;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::{tree_allreduce, tree_broadcast, CommError, CommResult, Communicator};
use crate::trace::{self, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    P2p,
    Reduce(u64),
    Bcast(u64),
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::P2p => write!(f, "a point-to-point message"),
            Tag::Reduce(s) => write!(f, "allreduce #{s}"),
            Tag::Bcast(s) => write!(f, "broadcast #{s}"),
        }
    }
}

struct Envelope {
    tag: Tag,
    data: Vec<f64>,
}

/// Endpoint handed to each simulated rank.
pub struct SimComm {
    rank: usize,
    size: usize,
    to: Vec<Option<Sender<Envelope>>>,
    from: Vec<Option<Receiver<Envelope>>>,
    timeout: Duration,
    seq: Cell<u64>,
    tag: Cell<Tag>,
}

impl SimComm {
    fn with_tag<T>(&self, tag: Tag, f: impl FnOnce() -> CommResult<T>) -> CommResult<T> {
        let prev = self.tag.replace(tag);
        let out = f();
        self.tag.set(prev);
        out
    }

    fn next_seq(&self) -> u64 {
        let s = self.seq.get();
        self.seq.set(s + 1);
        s
    }
}

impl Communicator for SimComm {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn send(&self, dest: usize, data: &[f64]) -> CommResult<()> {
        self.check_peer(dest)?;
        let tx =
            self.to[dest].as_ref().ok_or_else(|| CommError::Contract(format!("rank {dest} cannot send to itself")))?;
        trace::record_message(data.len());
        tx.send(Envelope { tag: self.tag.get(), data: data.to_vec() })
            .map_err(|_| CommError::Disconnected { rank: self.rank, from: dest })
    }

    fn recv(&self, src: usize) -> CommResult<Vec<f64>> {
        self.check_peer(src)?;
        let rx = self.from[src]
            .as_ref()
            .ok_or_else(|| CommError::Contract(format!("rank {src} cannot receive from itself")))?;
        let env = rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => CommError::Deadlock { rank: self.rank, from: src },
            RecvTimeoutError::Disconnected => CommError::Disconnected { rank: self.rank, from: src },
        })?;
        let expected = self.tag.get();
        if env.tag != expected {
            return Err(CommError::Mismatch {
                rank: self.rank,
                from: src,
                expected: expected.to_string(),
                got: env.tag.to_string(),
            });
        }
        Ok(env.data)
    }

    fn allreduce_sum(&self, local: &[f64]) -> CommResult<Vec<f64>> {
        let tag = Tag::Reduce(self.next_seq());
        self.with_tag(tag, || tree_allreduce(self, local))
    }

    fn broadcast(&self, root: usize, payload: &[f64]) -> CommResult<Vec<f64>> {
        let tag = Tag::Bcast(self.next_seq());
        self.with_tag(tag, || tree_broadcast(self, root, payload))
    }

    fn message_trace(&self) -> CommResult<Trace> {
        Ok(trace::snapshot())
    }
}

/// Result of one rank body together with the counters it recorded.
#[derive(Debug)]
pub struct RankOutput<T> {
    pub value: T,
    pub trace: Trace,
}

/// A group of `P` simulated ranks.
#[derive(Clone, Debug)]
pub struct SimWorld {
    size: usize,
    timeout: Duration,
}

impl SimWorld {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "a world needs at least one rank");
        SimWorld { size, timeout: Self::DEFAULT_TIMEOUT }
    }

    /// Bound on how long a receive waits before reporting a deadlock.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Builds the endpoints without running anything; endpoint `p` belongs
    /// to rank `p` and may be moved to any thread before use.
    pub fn endpoints(&self) -> Vec<SimComm> {
        let p = self.size;
        let mut to: Vec<Vec<Option<Sender<Envelope>>>> = (0..p).map(|_| (0..p).map(|_| None).collect()).collect();
        let mut from: Vec<Vec<Option<Receiver<Envelope>>>> = (0..p).map(|_| (0..p).map(|_| None).collect()).collect();
        for s in 0..p {
            for d in 0..p {
                if s != d {
                    let (tx, rx) = channel();
                    to[s][d] = Some(tx);
                    from[d][s] = Some(rx);
                }
            }
        }
        to.into_iter()
            .zip(from)
            .enumerate()
            .map(|(rank, (to, from))| SimComm {
                rank,
                size: p,
                to,
                from,
                timeout: self.timeout,
                seq: Cell::new(0),
                tag: Cell::new(Tag::P2p),
            })
            .collect()
    }

    /// Runs `body` on every rank concurrently and returns per-rank results
    /// in rank order. Each rank starts from an empty trace. A panic on any
    /// rank is propagated.
    pub fn run<T, F>(&self, body: F) -> Vec<RankOutput<T>>
    where
        T: Send,
        F: Fn(&SimComm) -> T + Sync,
    {
        let endpoints = self.endpoints();
        let body = &body;
        std::thread::scope(|scope| {
            let handles: Vec<_> = endpoints
                .into_iter()
                .map(|comm| {
                    scope.spawn(move || {
                        trace::reset();
                        let value = body(&comm);
                        drop(comm);
                        RankOutput { value, trace: trace::take() }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e))).collect()
        })
    }
}
