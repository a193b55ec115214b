//! Motif-transition statistics gathered in one chronological pass.
//!
//! The pass keeps an open-motif pool. An event that can extend no open
//! instance is cold and starts a size-1 instance. Otherwise it is hot and
//! every eligible instance transitions, each adding one count to
//! `C(type(m) -> type(m'))`.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::ingest::{EdgeKey, Event, NodeId, TemporalGraph, Timestamp};
use crate::motif::{
    can_extend_observed, extend, MotifInstance, MotifVocabulary, OpenMotifPool, TypeIndex,
};

/// Default maximum motif size.
pub const DEFAULT_MAX_SIZE: usize = 3;
/// Default half-width of the waiting-time window, in seconds.
pub const DEFAULT_EPSILON: f64 = 1.0;

const SNAPSHOT_VERSION: u32 = 1;

/// Largest gap between consecutive events sharing a node.
pub fn compute_delta_c(g: &TemporalGraph) -> Result<Timestamp> {
    let events = g.events();
    let mut best: Option<Timestamp> = None;
    for node in 0..g.id_space() as NodeId {
        for pair in g.node_events(node).windows(2) {
            let gap = events[pair[1]].time - events[pair[0]].time;
            best = Some(best.map_or(gap, |b| b.max(gap)));
        }
    }
    match best {
        Some(gap) if gap > 0 => Ok(gap),
        _ => Err(Error::UndefinedDeltaC),
    }
}

/// Reciprocal of the mean inter-event gap: `(k - 1) / (t_k - t_1)`.
pub fn intensity(timestamps: &[Timestamp]) -> Result<f64> {
    let (Some(first), Some(last)) = (timestamps.first(), timestamps.last()) else {
        return Err(Error::UndefinedIntensity("fewer than two timestamps"));
    };
    if timestamps.len() < 2 {
        return Err(Error::UndefinedIntensity("fewer than two timestamps"));
    }
    let span = last - first;
    if span <= 0 {
        return Err(Error::UndefinedIntensity("all inter-event gaps are zero"));
    }
    Ok((timestamps.len() - 1) as f64 / span as f64)
}

/// Hyperparameters of the training pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsParams {
    pub max_size: usize,
    /// Transition time limit in seconds.
    pub delta_c: f64,
    pub epsilon: f64,
    /// Additive smoothing of transition priors; 0 disables it.
    pub laplace_alpha: f64,
}

impl StatsParams {
    pub fn new(max_size: usize, delta_c: f64) -> Self {
        Self {
            max_size,
            delta_c,
            epsilon: DEFAULT_EPSILON,
            laplace_alpha: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_size < 2 {
            return Err(Error::InvalidArgument(
                "maximum motif size must be at least 2".into(),
            ));
        }
        if !(self.delta_c > 0.0 && self.delta_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "transition time limit {} must be positive",
                self.delta_c
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if !(self.laplace_alpha >= 0.0 && self.laplace_alpha.is_finite()) {
            return Err(Error::InvalidArgument(
                "smoothing must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One transition realized by an observed event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedTransition {
    pub source: TypeIndex,
    pub target: TypeIndex,
    /// Time since the source instance's last event.
    pub waiting: f64,
}

/// Drives the open-motif pool over an observed stream with extend-all
/// attribution.
#[derive(Debug, Clone)]
pub struct TransitionTracker<'v> {
    vocab: &'v MotifVocabulary,
    pool: OpenMotifPool,
    delta_c: f64,
}

impl<'v> TransitionTracker<'v> {
    pub fn new(vocab: &'v MotifVocabulary, delta_c: f64) -> Self {
        Self {
            vocab,
            pool: OpenMotifPool::new(vocab.max_size()),
            delta_c,
        }
    }

    /// Processes the next event. An empty result means the event was cold.
    pub fn observe(&mut self, e: &Event) -> SmallVec<[ObservedTransition; 4]> {
        let now = e.time as f64;
        self.pool.prune(now, self.delta_c);
        let max_size = self.vocab.max_size();
        let eligible: SmallVec<[_; 8]> = self
            .pool
            .touching(e.src, e.dst)
            .into_iter()
            .filter(|&id| {
                self.pool
                    .get(id)
                    .is_some_and(|m| can_extend_observed(m, e, self.delta_c, max_size))
            })
            .collect();
        let mut out = SmallVec::new();
        if eligible.is_empty() {
            self.pool.insert(MotifInstance::single(e.src, e.dst, now));
            return out;
        }
        for id in eligible {
            let m = self.pool.get(id).expect("eligible instance is pooled");
            let next = extend(m, e.src, e.dst, now, self.vocab)
                .expect("eligible instance accepts the event");
            out.push(ObservedTransition {
                source: m.type_id,
                target: next.type_id,
                waiting: now - m.last_time,
            });
            self.pool.replace(id, next);
        }
        out
    }

    pub fn pool(&self) -> &OpenMotifPool {
        &self.pool
    }

    pub fn into_pool(self) -> OpenMotifPool {
        self.pool
    }
}

/// Per-edge training statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeStat {
    pub key: EdgeKey,
    pub count: u64,
    /// Poisson intensity, or the global rate when the edge has fewer than
    /// two occurrences or no positive span.
    pub lambda: f64,
    pub last_time: Timestamp,
}

/// Frozen training summary consumed by scoring, prediction and features.
#[derive(Debug, Clone)]
pub struct MtmStats {
    vocab: MotifVocabulary,
    params: StatsParams,
    lambda_global: f64,
    edges: Vec<EdgeStat>,
    edge_index: HashMap<EdgeKey, usize>,
    edge_count_total: u64,
    trans_count: BTreeMap<(TypeIndex, TypeIndex), u64>,
    trans_row_total: Vec<u64>,
    lambda_type: Vec<f64>,
    cold_events: u64,
    train_events: u64,
    t_max: Timestamp,
}

/// Result of [`build_stats_labeled`]: stats plus the cold flag of each event.
#[derive(Debug, Clone)]
pub struct LabeledStats {
    pub stats: MtmStats,
    pub cold: Vec<bool>,
}

/// Builds statistics with default epsilon and no smoothing.
pub fn build_stats(train: &TemporalGraph, max_size: usize, delta_c: f64) -> Result<MtmStats> {
    MtmStats::build(train, StatsParams::new(max_size, delta_c))
}

pub fn build_stats_labeled(train: &TemporalGraph, params: StatsParams) -> Result<LabeledStats> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let vocab = MotifVocabulary::new(params.max_size)?;
    let all_times: Vec<Timestamp> = train.events().iter().map(|e| e.time).collect();
    let lambda_global = intensity(&all_times)?;

    let mut trans_count: BTreeMap<(TypeIndex, TypeIndex), u64> = BTreeMap::new();
    let mut type_times: Vec<Vec<Timestamp>> = vec![Vec::new(); vocab.len()];
    let mut cold = Vec::with_capacity(train.len());
    let mut tracker = TransitionTracker::new(&vocab, params.delta_c);
    for e in train.events() {
        let transitions = tracker.observe(e);
        cold.push(transitions.is_empty());
        for t in &transitions {
            *trans_count.entry((t.source, t.target)).or_default() += 1;
        }
        // one timestamp per event realizing a target type
        let mut targets: SmallVec<[TypeIndex; 4]> = transitions.iter().map(|t| t.target).collect();
        targets.sort_unstable();
        targets.dedup();
        for s in targets {
            type_times[s].push(e.time);
        }
    }
    drop(tracker);

    let mut trans_row_total = vec![0u64; vocab.len()];
    for (&(r, _), &c) in &trans_count {
        trans_row_total[r] += c;
    }
    let lambda_type = type_times
        .iter()
        .map(|ts| intensity(ts).unwrap_or(lambda_global))
        .collect();

    let mut edges: Vec<EdgeStat> = train
        .sorted_edges()
        .into_iter()
        .map(|key| {
            let ts = &train.edge_timestamps()[&key];
            EdgeStat {
                key,
                count: ts.len() as u64,
                lambda: intensity(ts).unwrap_or(lambda_global),
                last_time: *ts.last().expect("edges have at least one event"),
            }
        })
        .collect();
    edges.shrink_to_fit();
    let edge_index = edges.iter().enumerate().map(|(i, e)| (e.key, i)).collect();

    let cold_events = cold.iter().filter(|&&c| c).count() as u64;
    let stats = MtmStats {
        vocab,
        params,
        lambda_global,
        edges,
        edge_index,
        edge_count_total: train.len() as u64,
        trans_count,
        trans_row_total,
        lambda_type,
        cold_events,
        train_events: train.len() as u64,
        t_max: train.t_max(),
    };
    Ok(LabeledStats { stats, cold })
}

impl MtmStats {
    pub fn build(train: &TemporalGraph, params: StatsParams) -> Result<Self> {
        build_stats_labeled(train, params).map(|l| l.stats)
    }

    pub fn vocab(&self) -> &MotifVocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &StatsParams {
        &self.params
    }

    pub fn max_size(&self) -> usize {
        self.params.max_size
    }

    pub fn delta_c(&self) -> f64 {
        self.params.delta_c
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn lambda_global(&self) -> f64 {
        self.lambda_global
    }

    /// Observed edges in ascending key order.
    pub fn edges(&self) -> &[EdgeStat] {
        &self.edges
    }

    pub fn edge(&self, key: EdgeKey) -> Option<&EdgeStat> {
        self.edge_index.get(&key).map(|&i| &self.edges[i])
    }

    /// Position of `key` in [`MtmStats::edges`].
    pub fn edge_position(&self, key: EdgeKey) -> Option<usize> {
        self.edge_index.get(&key).copied()
    }

    pub fn edge_count_total(&self) -> u64 {
        self.edge_count_total
    }

    pub fn transitions(&self) -> &BTreeMap<(TypeIndex, TypeIndex), u64> {
        &self.trans_count
    }

    pub fn trans_count(&self, source: TypeIndex, target: TypeIndex) -> u64 {
        self.trans_count
            .get(&(source, target))
            .copied()
            .unwrap_or(0)
    }

    pub fn trans_row_total(&self, source: TypeIndex) -> u64 {
        self.trans_row_total.get(source).copied().unwrap_or(0)
    }

    pub fn lambda_type(&self, target: TypeIndex) -> f64 {
        self.lambda_type[target]
    }

    pub fn p_cold(&self) -> f64 {
        self.cold_events as f64 / self.train_events as f64
    }

    pub fn cold_events(&self) -> u64 {
        self.cold_events
    }

    pub fn train_events(&self) -> u64 {
        self.train_events
    }

    pub fn t_max(&self) -> Timestamp {
        self.t_max
    }

    /// Replaces epsilon and smoothing without recomputing counts.
    pub fn with_scoring(mut self, epsilon: f64, laplace_alpha: f64) -> Result<Self> {
        let params = StatsParams {
            epsilon,
            laplace_alpha,
            ..self.params
        };
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    pub fn to_snapshot(&self, g: &TemporalGraph) -> StatsSnapshot {
        StatsSnapshot {
            version: SNAPSHOT_VERSION,
            ell_max: self.params.max_size,
            delta_c: self.params.delta_c,
            epsilon: self.params.epsilon,
            laplace_alpha: self.params.laplace_alpha,
            p_cold: self.p_cold(),
            lambda_global: self.lambda_global,
            t_max: self.t_max,
            train_events: self.train_events,
            cold_events: self.cold_events,
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        g.original_id(e.key.src),
                        g.original_id(e.key.dst),
                        e.count,
                        e.lambda,
                        e.last_time,
                    )
                })
                .collect(),
            transitions: self
                .trans_count
                .iter()
                .map(|(&(r, s), &c)| (r, s, c))
                .collect(),
            type_intensity: self.lambda_type.iter().copied().enumerate().collect(),
        }
    }

    /// Rebuilds stats from a snapshot, mapping original node ids through
    /// the id table of `g`.
    pub fn from_snapshot(snap: &StatsSnapshot, g: &TemporalGraph) -> Result<Self> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {}",
                snap.version
            )));
        }
        let params = StatsParams {
            max_size: snap.ell_max,
            delta_c: snap.delta_c,
            epsilon: snap.epsilon,
            laplace_alpha: snap.laplace_alpha,
        };
        params.validate()?;
        let vocab = MotifVocabulary::new(params.max_size)?;
        let dense: HashMap<u64, NodeId> = (0..g.id_space() as NodeId)
            .map(|n| (g.original_id(n), n))
            .collect();
        let lookup = |id: u64| {
            dense
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Snapshot(format!("node {id} not present in graph")))
        };
        let mut edges = Vec::with_capacity(snap.edges.len());
        for &(s, d, count, lambda, last_time) in &snap.edges {
            edges.push(EdgeStat {
                key: EdgeKey::new(lookup(s)?, lookup(d)?),
                count,
                lambda,
                last_time,
            });
        }
        edges.sort_by_key(|e| e.key);
        let edge_index = edges.iter().enumerate().map(|(i, e)| (e.key, i)).collect();
        let edge_count_total = edges.iter().map(|e| e.count).sum();
        let mut trans_count = BTreeMap::new();
        let mut trans_row_total = vec![0; vocab.len()];
        for &(r, s, c) in &snap.transitions {
            if r >= vocab.len() || s >= vocab.len() {
                return Err(Error::Snapshot(format!(
                    "type index out of range in ({r}, {s})"
                )));
            }
            trans_count.insert((r, s), c);
            trans_row_total[r] += c;
        }
        let mut lambda_type = vec![snap.lambda_global; vocab.len()];
        for &(i, l) in &snap.type_intensity {
            *lambda_type
                .get_mut(i)
                .ok_or_else(|| Error::Snapshot(format!("type index {i} out of range")))? = l;
        }
        Ok(Self {
            vocab,
            params,
            lambda_global: snap.lambda_global,
            edges,
            edge_index,
            edge_count_total,
            trans_count,
            trans_row_total,
            lambda_type,
            cold_events: snap.cold_events,
            train_events: snap.train_events,
            t_max: snap.t_max,
        })
    }

    pub fn save<W: Write>(&self, g: &TemporalGraph, out: W) -> Result<()> {
        serde_json::to_writer(out, &self.to_snapshot(g)).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn load<R: Read>(input: R, g: &TemporalGraph) -> Result<Self> {
        let snap: StatsSnapshot =
            serde_json::from_reader(input).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(&snap, g)
    }
}

/// Serialized form of [`MtmStats`]: header fields, then the edge table
/// `(src, dst, count, lambda, last_time)` in original ids, the transition
/// table `(source, target, count)` and the per-type intensity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub version: u32,
    pub ell_max: usize,
    pub delta_c: f64,
    pub epsilon: f64,
    pub laplace_alpha: f64,
    pub p_cold: f64,
    pub lambda_global: f64,
    pub t_max: Timestamp,
    pub train_events: u64,
    pub cold_events: u64,
    pub edges: Vec<(u64, u64, u64, f64, Timestamp)>,
    pub transitions: Vec<(TypeIndex, TypeIndex, u64)>,
    pub type_intensity: Vec<(TypeIndex, f64)>,
}
