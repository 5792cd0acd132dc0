//! Event-driven simulation of the sticky dynamics.
//!
//! A cluster covering particles `first..=last` has mass `(last - first + 1)/n`
//! and constant acceleration `((n - last) - (first - 1))/n`, the mass to its
//! right minus the mass to its left. Between collisions every cluster follows
//! `x + v dt + a dt^2 / 2`. Two neighbours approach with relative acceleration
//! `-(m_left + m_right)`, so each predicted collision is a quadratic root.
//!
//! A merge leaves the masses on either side of every other cluster unchanged,
//! so their trajectories and pending predictions stay valid. Predictions sit
//! in a binary heap and are invalidated lazily through per-cluster stamps,
//! giving `O(n log n)` for the complete history.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::exact::MergingTimes;
use crate::math;
use crate::model::Configuration;

/// Collisions predicted within this time of the current event are treated as
/// simultaneous with it.
pub const SIMULTANEITY_TOLERANCE: f64 = 1e-12;

/// Inclusive 1-based range of particle indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub first: usize,
    pub last: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Snapshot of one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub span: Span,
    pub mass: f64,
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeEvent {
    pub time: f64,
    pub left: Span,
    pub right: Span,
    /// State of the new cluster right after the merge.
    pub merged: Cluster,
}

/// Complete collision history of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    n: usize,
    events: Vec<MergeEvent>,
    final_cluster: Cluster,
}

impl EventLog {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn events(&self) -> &[MergeEvent] {
        &self.events
    }

    pub fn final_cluster(&self) -> &Cluster {
        &self.final_cluster
    }

    pub fn last_collision(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// Clusters alive at time `t`: `n` minus the merges with time `<= t`.
    pub fn cluster_count_at(&self, t: f64) -> usize {
        self.n - self.events.partition_point(|e| e.time <= t)
    }
}

#[derive(Clone, Copy, Debug)]
struct Body {
    last: usize,
    origin: f64,
    position: f64,
    velocity: f64,
    stamp: u64,
}

#[inline]
fn acceleration(first: usize, last: usize, n: usize) -> f64 {
    // 0-based indices: n - 1 - last particles to the right, `first` to the left
    ((n - 1 - last) as f64 - first as f64) / n as f64
}

impl Body {
    #[inline]
    fn state_at(&self, first: usize, n: usize, t: f64) -> (f64, f64) {
        let a = acceleration(first, self.last, n);
        let dt = t - self.origin;
        (self.position + dt * (self.velocity + 0.5 * a * dt), self.velocity + a * dt)
    }

    fn snapshot(&self, first: usize, n: usize, t: f64) -> Cluster {
        let (position, velocity) = self.state_at(first, n, t);
        Cluster {
            span: Span { first: first + 1, last: self.last + 1 },
            mass: (self.last + 1 - first) as f64 / n as f64,
            position,
            velocity,
            acceleration: acceleration(first, self.last, n),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Prediction {
    time: f64,
    left: usize,
    left_stamp: u64,
    right: usize,
    right_stamp: u64,
}

impl PartialEq for Prediction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Prediction {}

impl PartialOrd for Prediction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prediction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.left.cmp(&other.left))
    }
}

/// Smallest `dt >= 0` with `gap + dv dt - c dt^2 = 0`, `c > 0`.
fn time_to_contact(gap: f64, dv: f64, c: f64) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    let root = math::sqrt(dv * dv + 4.0 * c * gap);
    if dv >= 0.0 {
        (dv + root) / (2.0 * c)
    } else {
        2.0 * gap / (root - dv)
    }
}

struct Engine {
    n: usize,
    bodies: Vec<Option<Body>>,
    prev: Vec<usize>,
    heap: BinaryHeap<Reverse<Prediction>>,
    next_stamp: u64,
}

impl Engine {
    fn predict(&mut self, left: usize, right: usize, now: f64) {
        let (lb, rb) = match (self.bodies[left], self.bodies[right]) {
            (Some(l), Some(r)) => (l, r),
            _ => return,
        };
        let reference = lb.origin.max(rb.origin);
        let (xl, vl) = lb.state_at(left, self.n, reference);
        let (xr, vr) = rb.state_at(right, self.n, reference);
        let count = (rb.last + 1 - left) as f64;
        let c = 0.5 * count / self.n as f64;
        let mut time = reference + time_to_contact(xr - xl, vr - vl, c);
        if time < now + SIMULTANEITY_TOLERANCE {
            time = now;
        }
        self.heap.push(Reverse(Prediction {
            time,
            left,
            left_stamp: lb.stamp,
            right,
            right_stamp: rb.stamp,
        }));
    }

    fn is_current(&self, p: &Prediction) -> bool {
        matches!(self.bodies[p.left], Some(b) if b.stamp == p.left_stamp)
            && matches!(self.bodies[p.right], Some(b) if b.stamp == p.right_stamp)
    }
}

/// Runs the dynamics to the final collision.
pub fn simulate(cfg: &Configuration) -> EventLog {
    let n = cfg.n();
    let mut engine = Engine {
        n,
        bodies: cfg
            .positions()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                Some(Body { last: i, origin: 0.0, position: x, velocity: 0.0, stamp: i as u64 })
            })
            .collect(),
        prev: (0..n).map(|i| i.wrapping_sub(1)).collect(),
        heap: BinaryHeap::with_capacity(3 * n),
        next_stamp: n as u64,
    };
    for i in 0..n - 1 {
        engine.predict(i, i + 1, 0.0);
    }

    let mut events = Vec::with_capacity(n - 1);
    let mut now = 0.0f64;
    while let Some(Reverse(p)) = engine.heap.pop() {
        if !engine.is_current(&p) {
            continue;
        }
        now = now.max(p.time);
        let lb = engine.bodies[p.left].take().expect("current left body");
        let rb = engine.bodies[p.right].take().expect("current right body");
        let (xl, vl) = lb.state_at(p.left, n, now);
        let (xr, vr) = rb.state_at(p.right, n, now);
        let cl = (lb.last + 1 - p.left) as f64;
        let cr = (rb.last + 1 - p.right) as f64;
        let merged = Body {
            last: rb.last,
            origin: now,
            position: (cl * xl + cr * xr) / (cl + cr),
            velocity: (cl * vl + cr * vr) / (cl + cr),
            stamp: engine.next_stamp,
        };
        engine.next_stamp += 1;
        engine.bodies[p.left] = Some(merged);
        if merged.last + 1 < n {
            engine.prev[merged.last + 1] = p.left;
        }
        events.push(MergeEvent {
            time: now,
            left: Span { first: p.left + 1, last: lb.last + 1 },
            right: Span { first: p.right + 1, last: rb.last + 1 },
            merged: merged.snapshot(p.left, n, now),
        });
        if p.left > 0 {
            let before = engine.prev[p.left];
            engine.predict(before, p.left, now);
        }
        if merged.last + 1 < n {
            engine.predict(p.left, merged.last + 1, now);
        }
    }

    let final_cluster = match events.last() {
        Some(e) => e.merged,
        None => unreachable!("a configuration has at least two particles"),
    };
    EventLog { n, events, final_cluster }
}

/// `T_{j,n}` is the time of the unique event joining the boundary `j | j+1`.
pub fn merging_times_from_log(log: &EventLog) -> Result<MergingTimes> {
    let n = log.n;
    if log.events.len() != n - 1 {
        return Err(Error::Consistency(format!(
            "expected {} merge events, found {}",
            n - 1,
            log.events.len()
        )));
    }
    let mut times = vec![f64::NAN; n - 1];
    for e in &log.events {
        let j = e.left.last;
        if e.right.first != j + 1 || j == 0 || j >= n {
            return Err(Error::Consistency(format!("event joins non-adjacent spans at {}", e.time)));
        }
        if !times[j - 1].is_nan() {
            return Err(Error::Consistency(format!("boundary {j} merged twice")));
        }
        times[j - 1] = e.time;
    }
    MergingTimes::new(times)
}

/// Replays the log up to `t` and returns the live clusters, left to right.
pub fn state_at(log: &EventLog, cfg: &Configuration, t: f64) -> Vec<Cluster> {
    let mut replay = Replay::new(cfg);
    for e in log.events.iter().take_while(|e| e.time <= t) {
        replay.apply(e);
    }
    replay.clusters(t)
}

struct Replay {
    n: usize,
    bodies: Vec<Option<Body>>,
}

impl Replay {
    fn new(cfg: &Configuration) -> Self {
        let bodies = cfg
            .positions()
            .iter()
            .enumerate()
            .map(|(i, &x)| Some(Body { last: i, origin: 0.0, position: x, velocity: 0.0, stamp: 0 }))
            .collect();
        Replay { n: cfg.n(), bodies }
    }

    fn apply(&mut self, e: &MergeEvent) {
        self.bodies[e.right.first - 1] = None;
        self.bodies[e.left.first - 1] = Some(Body {
            last: e.merged.span.last - 1,
            origin: e.time,
            position: e.merged.position,
            velocity: e.merged.velocity,
            stamp: 0,
        });
    }

    fn for_each_live(&self, mut f: impl FnMut(usize, &Body)) {
        let mut i = 0;
        while i < self.n {
            let b = self.bodies[i].as_ref().expect("live cluster at span start");
            f(i, b);
            i = b.last + 1;
        }
    }

    fn clusters(&self, t: f64) -> Vec<Cluster> {
        let mut out = Vec::new();
        self.for_each_live(|first, b| out.push(b.snapshot(first, self.n, t)));
        out
    }

    /// Total momentum and barycenter at `t`.
    fn totals(&self, t: f64) -> (f64, f64) {
        let (mut momentum, mut moment) = (0.0, 0.0);
        let n = self.n as f64;
        self.for_each_live(|first, b| {
            let (x, v) = b.state_at(first, self.n, t);
            let m = (b.last + 1 - first) as f64 / n;
            momentum += m * v;
            moment += m * x;
        });
        (momentum, moment)
    }
}

/// Worst conservation errors seen at the audited event boundaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationReport {
    pub max_momentum: f64,
    pub max_barycenter_drift: f64,
    pub checkpoints: usize,
}

/// Checks momentum and barycenter conservation right after up to
/// `max_checkpoints` events spread evenly over the log (every event when the
/// log is shorter). Each checkpoint costs `O(n)`.
pub fn audit_conservation(log: &EventLog, cfg: &Configuration, max_checkpoints: usize) -> ConservationReport {
    let mut replay = Replay::new(cfg);
    let initial = cfg.barycenter();
    let total = log.events.len();
    let stride = total.div_ceil(max_checkpoints.max(1)).max(1);
    let mut report = ConservationReport { max_momentum: 0.0, max_barycenter_drift: 0.0, checkpoints: 0 };
    for (i, e) in log.events.iter().enumerate() {
        replay.apply(e);
        if (i + 1) % stride == 0 || i + 1 == total {
            let (p, x) = replay.totals(e.time);
            report.max_momentum = report.max_momentum.max(p.abs());
            report.max_barycenter_drift = report.max_barycenter_drift.max((x - initial).abs());
            report.checkpoints += 1;
        }
    }
    report
}
