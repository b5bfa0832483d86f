//! Per-thread instrumentation: flop counters, message/word counters and
//! wall-clock time, bucketed by a named phase.
//!
//! Every simulated rank runs on its own thread, so the thread-local state
//! doubles as a per-rank trace. Kernels report the flops they perform with
//! [`add_flops`]; the simulated communicator reports messages it sends.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::time::Instant;

/// Phase names used by the TT kernels. They mirror the usual breakdown of a
/// rounding run: tree QR factorizations, applications of implicit
/// orthonormal factors, and everything else.
pub const TSQR: &str = "TSQR";
pub const APPLY_Q: &str = "AppQ";
pub const OTHER: &str = "Other";

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counters {
    pub flops: u64,
    pub words: u64,
    pub messages: u64,
    pub seconds: f64,
}

impl Counters {
    fn merge(&mut self, other: &Counters) {
        self.flops += other.flops;
        self.words += other.words;
        self.messages += other.messages;
        self.seconds += other.seconds;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub phases: BTreeMap<String, Counters>,
}

impl Trace {
    pub fn phase(&self, name: &str) -> Counters {
        self.phases.get(name).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Counters {
        let mut t = Counters::default();
        for c in self.phases.values() {
            t.merge(c);
        }
        t
    }

    /// Elementwise maximum over a set of per-rank traces, i.e. the
    /// critical-path estimate used when reporting parallel runs.
    pub fn max_over<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> Trace {
        let mut out = Trace::default();
        for t in traces {
            for (name, c) in &t.phases {
                let e = out.phases.entry(name.clone()).or_default();
                e.flops = e.flops.max(c.flops);
                e.words = e.words.max(c.words);
                e.messages = e.messages.max(c.messages);
                e.seconds = e.seconds.max(c.seconds);
            }
        }
        out
    }
}

struct State {
    trace: Trace,
    stack: Vec<(&'static str, Instant)>,
}

impl State {
    fn current(&self) -> &'static str {
        self.stack.last().map(|(n, _)| *n).unwrap_or(OTHER)
    }

    fn counters(&mut self) -> &mut Counters {
        let name = self.current();
        self.trace.phases.entry(name.to_string()).or_default()
    }
}

thread_local! {
    static STATE: RefCell<State> = const {
        RefCell::new(State { trace: Trace { phases: BTreeMap::new() }, stack: Vec::new() })
    };
}

#[inline]
pub fn add_flops(n: u64) {
    STATE.with(|s| s.borrow_mut().counters().flops += n);
}

pub(crate) fn record_message(words: usize) {
    STATE.with(|s| {
        let mut s = s.borrow_mut();
        let c = s.counters();
        c.messages += 1;
        c.words += words as u64;
    });
}

/// Clears this thread's trace. Open phase guards keep timing from now on.
pub fn reset() {
    STATE.with(|s| {
        let mut s = s.borrow_mut();
        s.trace = Trace::default();
        let now = Instant::now();
        for e in s.stack.iter_mut() {
            e.1 = now;
        }
    });
}

pub fn snapshot() -> Trace {
    STATE.with(|s| s.borrow().trace.clone())
}

pub fn take() -> Trace {
    let t = snapshot();
    reset();
    t
}

/// RAII guard that attributes work to `name` until dropped. Nested guards
/// pause the enclosing phase's clock, so seconds are never double counted.
pub struct PhaseGuard {
    _not_send: std::marker::PhantomData<*const ()>,
}

pub fn phase(name: &'static str) -> PhaseGuard {
    STATE.with(|s| {
        let mut s = s.borrow_mut();
        let now = Instant::now();
        if let Some(&(outer, start)) = s.stack.last() {
            let dt = now.duration_since(start).as_secs_f64();
            s.trace.phases.entry(outer.to_string()).or_default().seconds += dt;
        }
        s.stack.push((name, now));
    });
    PhaseGuard { _not_send: std::marker::PhantomData }
}

impl Drop for PhaseGuard {
    fn drop(&mut self) {
        STATE.with(|s| {
            let mut s = s.borrow_mut();
            let now = Instant::now();
            if let Some((name, start)) = s.stack.pop() {
                let dt = now.duration_since(start).as_secs_f64();
                s.trace.phases.entry(name.to_string()).or_default().seconds += dt;
            }
            if let Some(top) = s.stack.last_mut() {
                top.1 = now;
            }
        });
    }
}
