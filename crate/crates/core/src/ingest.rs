//! Edge-list ingestion, chronological splitting and dataset statistics.
//!
//! Input is the SNAP temporal format: one `src dst time` triple per line,
//! fields separated by whitespace or commas. Lines starting with `#` or `%`
//! are comments. Self-loops are dropped and counted. Node identifiers are
//! remapped to a dense `0..n` range in order of first appearance; the
//! original identifiers are kept for output.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier.
pub type NodeId = u32;

/// Timestamp in integer seconds.
pub type Timestamp = i64;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// One directed timestamped interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub src: NodeId,
    pub dst: NodeId,
    pub time: Timestamp,
    /// Position in the stream, 0-based.
    pub seq: usize,
}

impl Event {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.src, self.dst)
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.src == node || self.dst == node
    }
}

/// A directed static edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub src: NodeId,
    pub dst: NodeId,
}

impl EdgeKey {
    pub const fn new(src: NodeId, dst: NodeId) -> Self {
        Self { src, dst }
    }
}

/// Immutable indexed temporal graph.
///
/// Graphs produced by [`chronological_split`] share the node-id table of
/// their parent, so dense ids are comparable across train and test.
#[derive(Debug, Clone)]
pub struct TemporalGraph {
    events: Vec<Event>,
    node_ids: Arc<Vec<u64>>,
    edge_timestamps: HashMap<EdgeKey, Vec<Timestamp>>,
    node_events: Vec<Vec<usize>>,
    node_count: usize,
    dropped_self_loops: usize,
}

impl TemporalGraph {
    /// Builds a graph from events already sorted by `(time, input order)`.
    /// `seq` is reassigned to the position in `ordered`.
    fn from_ordered(
        ordered: impl IntoIterator<Item = (NodeId, NodeId, Timestamp)>,
        node_ids: Arc<Vec<u64>>,
        dropped_self_loops: usize,
    ) -> Self {
        let mut events = Vec::new();
        let mut edge_timestamps: HashMap<EdgeKey, Vec<Timestamp>> = HashMap::new();
        let mut node_events = vec![Vec::new(); node_ids.len()];
        for (seq, (src, dst, time)) in ordered.into_iter().enumerate() {
            debug_assert!(events.last().is_none_or(|e: &Event| e.time <= time));
            events.push(Event {
                src,
                dst,
                time,
                seq,
            });
            edge_timestamps
                .entry(EdgeKey::new(src, dst))
                .or_default()
                .push(time);
            node_events[src as usize].push(seq);
            node_events[dst as usize].push(seq);
        }
        let node_count = node_events.iter().filter(|v| !v.is_empty()).count();
        Self {
            events,
            node_ids,
            edge_timestamps,
            node_events,
            node_count,
            dropped_self_loops,
        }
    }

    /// Builds a graph from dense-id triples. Events are stably sorted by
    /// time; `node_ids` must cover every id used.
    pub fn from_triples(
        mut triples: Vec<(NodeId, NodeId, Timestamp)>,
        node_ids: Vec<u64>,
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = node_ids.len();
        let mut dropped = 0;
        triples.retain(|&(s, d, _)| {
            let keep = s != d;
            dropped += usize::from(!keep);
            keep
        });
        if let Some(&(s, d, _)) = triples
            .iter()
            .find(|&&(s, d, _)| s as usize >= n || d as usize >= n)
        {
            return Err(Error::InvalidArgument(format!(
                "node id {} outside node table of size {n}",
                s.max(d)
            )));
        }
        if triples.iter().any(|t| t.2 < 0) {
            return Err(Error::InvalidArgument("negative timestamp".into()));
        }
        if triples.is_empty() {
            return Err(Error::EmptyInput);
        }
        triples.sort_by_key(|t| t.2);
        Ok(Self::from_ordered(triples, Arc::new(node_ids), dropped))
    }

    /// Convenience constructor where dense id `i` has original id `i`.
    pub fn from_dense_triples(triples: Vec<(NodeId, NodeId, Timestamp)>) -> Result<Self> {
        let n = triples
            .iter()
            .map(|&(s, d, _)| s.max(d) as usize + 1)
            .max()
            .unwrap_or(0);
        Self::from_triples(triples, (0..n as u64).collect())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of distinct nodes touched by at least one event.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Size of the dense id space (shared with split siblings).
    pub fn id_space(&self) -> usize {
        self.node_ids.len()
    }

    pub fn original_id(&self, node: NodeId) -> u64 {
        self.node_ids[node as usize]
    }

    pub fn edge_timestamps(&self) -> &HashMap<EdgeKey, Vec<Timestamp>> {
        &self.edge_timestamps
    }

    /// Static edges in ascending `(src, dst)` order.
    pub fn sorted_edges(&self) -> Vec<EdgeKey> {
        let mut keys: Vec<EdgeKey> = self.edge_timestamps.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn static_edge_count(&self) -> usize {
        self.edge_timestamps.len()
    }

    pub fn contains_edge(&self, key: EdgeKey) -> bool {
        self.edge_timestamps.contains_key(&key)
    }

    /// Stream positions of events touching `node`, in order.
    pub fn node_events(&self, node: NodeId) -> &[usize] {
        self.node_events
            .get(node as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn t_min(&self) -> Timestamp {
        self.events.first().map_or(0, |e| e.time)
    }

    pub fn t_max(&self) -> Timestamp {
        self.events.last().map_or(0, |e| e.time)
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    /// Writes the events back as `src dst time` lines with original ids.
    pub fn write_events<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            writeln!(
                out,
                "{} {} {}",
                self.original_id(e.src),
                self.original_id(e.dst),
                e.time
            )?;
        }
        Ok(())
    }
}

/// Parses a SNAP-style temporal edge list.
pub fn parse_events<R: BufRead>(source: R) -> Result<TemporalGraph> {
    let mut dense: HashMap<u64, NodeId> = HashMap::new();
    let mut node_ids: Vec<u64> = Vec::new();
    let mut triples: Vec<(NodeId, NodeId, Timestamp)> = Vec::new();
    let mut dropped = 0usize;

    let mut intern = |id: u64, node_ids: &mut Vec<u64>| -> Result<NodeId> {
        match dense.entry(id) {
            Entry::Occupied(e) => Ok(*e.get()),
            Entry::Vacant(v) => {
                let next = NodeId::try_from(node_ids.len())
                    .map_err(|_| Error::InvalidArgument("too many nodes".into()))?;
                node_ids.push(id);
                v.insert(next);
                Ok(next)
            }
        }
    };

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let field = |i: usize, what: &str| -> Result<u64> {
            fields[i].parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{what} {:?} is not a non-negative integer", fields[i]),
            })
        };
        let src = field(0, "source")?;
        let dst = field(1, "destination")?;
        let time = field(2, "timestamp")?;
        let time = Timestamp::try_from(time).map_err(|_| Error::Parse {
            line: line_no,
            message: "timestamp out of range".into(),
        })?;
        if src == dst {
            dropped += 1;
            continue;
        }
        let s = intern(src, &mut node_ids)?;
        let d = intern(dst, &mut node_ids)?;
        triples.push((s, d, time));
    }

    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }
    triples.sort_by_key(|t| t.2);
    Ok(TemporalGraph::from_ordered(
        triples,
        Arc::new(node_ids),
        dropped,
    ))
}

/// Splits off the last `ceil(test_ratio * |E|)` events as the test stream.
///
/// The test share is clamped so that train keeps at least one event.
pub fn chronological_split(
    g: &TemporalGraph,
    test_ratio: f64,
) -> Result<(TemporalGraph, TemporalGraph)> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test ratio {test_ratio} must lie strictly between 0 and 1"
        )));
    }
    let n = g.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a split needs at least two events".into(),
        ));
    }
    let test_len = ((test_ratio * n as f64).ceil() as usize).clamp(1, n - 1);
    let cut = n - test_len;
    let triples = |events: &[Event]| -> Vec<(NodeId, NodeId, Timestamp)> {
        events.iter().map(|e| (e.src, e.dst, e.time)).collect()
    };
    let train = TemporalGraph::from_ordered(triples(&g.events[..cut]), g.node_ids.clone(), 0);
    let test = TemporalGraph::from_ordered(triples(&g.events[cut..]), g.node_ids.clone(), 0);
    Ok((train, test))
}

/// Dataset summary in the shape of a dataset-statistics table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SummaryStats {
    pub nodes: usize,
    pub events: usize,
    pub static_edges: usize,
    pub timespan_days: u64,
}

pub fn summary_stats(g: &TemporalGraph) -> SummaryStats {
    let span = (g.t_max() - g.t_min()) as f64 / SECONDS_PER_DAY;
    SummaryStats {
        nodes: g.node_count(),
        events: g.len(),
        static_edges: g.static_edge_count(),
        timespan_days: span.round() as u64,
    }
}
