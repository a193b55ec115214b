//! Temporal motif types, instances and the open-motif pool.
//!
//! A motif type is encoded by relabeling the temporally ordered directed
//! event pairs of a motif with small integers in order of first appearance.
//! `[(7,3),(3,9)]` becomes `[(0,1),(1,2)]`. The encoding is invariant under
//! node renaming and independent of absolute timestamps, and two motifs
//! share a type exactly when their codes are equal.
//!
//! The vocabulary orders types by size, then lexicographically by code, so
//! the single-event type `[(0,1)]` always has index 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::ingest::{Event, NodeId};

pub type Label = u8;

/// Index of a motif type in a [`MotifVocabulary`].
pub type TypeIndex = usize;

/// Canonical, node- and time-anonymous motif pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotifType {
    code: Vec<(Label, Label)>,
}

impl MotifType {
    pub fn code(&self) -> &[(Label, Label)] {
        &self.code
    }

    /// Number of events.
    pub fn size(&self) -> usize {
        self.code.len()
    }

    /// Number of distinct nodes.
    pub fn node_count(&self) -> usize {
        self.code
            .iter()
            .map(|&(a, b)| a.max(b) as usize + 1)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for MotifType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.code.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}>{b}")?;
        }
        Ok(())
    }
}

/// Canonicalizes a temporally ordered sequence of directed pairs.
pub fn canonical_type<N: Copy + Eq>(pattern: &[(N, N)], max_size: usize) -> Result<MotifType> {
    if pattern.is_empty() {
        return Err(Error::InvalidMotif("empty pattern".into()));
    }
    if pattern.len() > max_size {
        return Err(Error::InvalidMotif(format!(
            "pattern has {} events, limit is {max_size}",
            pattern.len()
        )));
    }
    let mut seen: SmallVec<[N; 8]> = SmallVec::new();
    let mut code = Vec::with_capacity(pattern.len());
    for (i, &(s, d)) in pattern.iter().enumerate() {
        if s == d {
            return Err(Error::InvalidMotif(format!("event {i} is a self-loop")));
        }
        let ls = seen.iter().position(|&x| x == s);
        let ld = seen.iter().position(|&x| x == d);
        if i > 0 && ls.is_none() && ld.is_none() {
            return Err(Error::InvalidMotif(format!(
                "event {i} shares no node with earlier events"
            )));
        }
        let mut label = |found: Option<usize>, node: N| {
            found.unwrap_or_else(|| {
                seen.push(node);
                seen.len() - 1
            })
        };
        let a = label(ls, s);
        let b = label(ld, d);
        code.push((a as Label, b as Label));
    }
    Ok(MotifType { code })
}

/// All canonical connected types with exactly `size` events, sorted by code.
pub fn enumerate_types(size: usize) -> Result<Vec<MotifType>> {
    if size < 1 {
        return Err(Error::InvalidArgument(
            "motif size must be at least 1".into(),
        ));
    }
    if size > Label::MAX as usize / 2 {
        return Err(Error::InvalidArgument(format!(
            "motif size {size} too large"
        )));
    }
    let mut layer = vec![MotifType { code: vec![(0, 1)] }];
    for _ in 1..size {
        let mut next = BTreeSet::new();
        for t in &layer {
            let n = t.node_count() as Label;
            for a in 0..=n {
                for b in 0..=n {
                    // label n stands for "a new node"; both endpoints new
                    // would disconnect the motif
                    if a == b || (a == n && b == n) {
                        continue;
                    }
                    let mut code = t.code.clone();
                    code.push((a, b));
                    next.insert(MotifType { code });
                }
            }
        }
        layer = next.into_iter().collect();
    }
    Ok(layer)
}

/// Every motif type of size `1..=max_size`, with an extension table.
#[derive(Debug, Clone)]
pub struct MotifVocabulary {
    max_size: usize,
    types: Vec<MotifType>,
    index: HashMap<MotifType, TypeIndex>,
    width: usize,
    next: Vec<Option<TypeIndex>>,
    reachable: Vec<usize>,
}

impl MotifVocabulary {
    pub fn new(max_size: usize) -> Result<Self> {
        if max_size < 1 {
            return Err(Error::InvalidArgument(
                "maximum motif size must be at least 1".into(),
            ));
        }
        let mut types = Vec::new();
        for size in 1..=max_size {
            types.extend(enumerate_types(size)?);
        }
        let index: HashMap<MotifType, TypeIndex> = types
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        // labels 0..=max_size+1 cover existing nodes plus one new node
        let width = max_size + 2;
        let mut next = vec![None; types.len() * width * width];
        let mut reachable = vec![0; types.len()];
        for (i, t) in types.iter().enumerate() {
            if t.size() >= max_size {
                continue;
            }
            let n = t.node_count();
            for a in 0..=n {
                for b in 0..=n {
                    if a == b || (a == n && b == n) {
                        continue;
                    }
                    let mut code = t.code.clone();
                    code.push((a as Label, b as Label));
                    let target = index[&MotifType { code }];
                    next[(i * width + a) * width + b] = Some(target);
                    reachable[i] += 1;
                }
            }
        }
        Ok(Self {
            max_size,
            types,
            index,
            width,
            next,
            reachable,
        })
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, index: TypeIndex) -> &MotifType {
        &self.types[index]
    }

    pub fn types(&self) -> &[MotifType] {
        &self.types
    }

    pub fn index_of(&self, t: &MotifType) -> Option<TypeIndex> {
        self.index.get(t).copied()
    }

    /// Type reached by appending the labeled pair `(a, b)` to `from`, where a
    /// label equal to the node count of `from` denotes a new node.
    pub fn extend_labels(&self, from: TypeIndex, a: usize, b: usize) -> Option<TypeIndex> {
        if a >= self.width || b >= self.width {
            return None;
        }
        self.next[(from * self.width + a) * self.width + b]
    }

    /// Number of distinct one-event extensions of `from`.
    pub fn extension_count(&self, from: TypeIndex) -> usize {
        self.reachable[from]
    }

    /// Writes `index<TAB>size<TAB>code` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, t) in self.types.iter().enumerate() {
            writeln!(out, "{i}\t{}\t{t}", t.size())?;
        }
        Ok(())
    }
}

/// One event inside a motif instance. Times are real-valued so forecast
/// events can live in the same pool as observed ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceEvent {
    pub src: NodeId,
    pub dst: NodeId,
    pub time: f64,
}

/// A concrete partial motif.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifInstance {
    pub type_id: TypeIndex,
    /// Bound nodes; position is the label.
    pub nodes: SmallVec<[NodeId; 4]>,
    pub events: SmallVec<[InstanceEvent; 3]>,
    pub last_time: f64,
}

impl MotifInstance {
    /// The size-1 instance started by a single event.
    pub fn single(src: NodeId, dst: NodeId, time: f64) -> Self {
        debug_assert_ne!(src, dst);
        Self {
            type_id: 0,
            nodes: SmallVec::from_slice(&[src, dst]),
            events: SmallVec::from_slice(&[InstanceEvent { src, dst, time }]),
            last_time: time,
        }
    }

    pub fn size(&self) -> usize {
        self.events.len()
    }

    pub fn label_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    pub fn pattern(&self) -> Vec<(NodeId, NodeId)> {
        self.events.iter().map(|e| (e.src, e.dst)).collect()
    }
}

/// Whether observed event `e` may extend `m`: it shares a node with `m`,
/// arrives within `delta_c` of `m`'s last event, and `m` is not full.
pub fn can_extend_observed(m: &MotifInstance, e: &Event, delta_c: f64, max_size: usize) -> bool {
    (m.contains(e.src) || m.contains(e.dst))
        && e.time as f64 - m.last_time <= delta_c
        && m.size() < max_size
}

/// Ordered pairs over the instance's own nodes, ascending.
pub fn candidate_extensions(m: &MotifInstance, max_size: usize) -> Vec<(NodeId, NodeId)> {
    if m.size() >= max_size {
        return Vec::new();
    }
    let mut nodes = m.nodes.clone();
    nodes.sort_unstable();
    let mut out = Vec::with_capacity(nodes.len() * (nodes.len() - 1));
    for &a in &nodes {
        for &b in &nodes {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

/// Type index `m` would have after appending `(src, dst)`, without
/// building the instance.
pub fn extended_type(
    m: &MotifInstance,
    src: NodeId,
    dst: NodeId,
    vocab: &MotifVocabulary,
) -> Option<TypeIndex> {
    if src == dst || m.size() >= vocab.max_size() {
        return None;
    }
    let n = m.nodes.len();
    let a = m.label_of(src);
    let b = m.label_of(dst);
    let (a, b) = match (a, b) {
        (None, None) => return None,
        (Some(a), Some(b)) => (a, b),
        (None, Some(b)) => (n, b),
        (Some(a), None) => (a, n),
    };
    vocab.extend_labels(m.type_id, a, b)
}

/// Appends `(src, dst, time)` to `m`.
pub fn extend(
    m: &MotifInstance,
    src: NodeId,
    dst: NodeId,
    time: f64,
    vocab: &MotifVocabulary,
) -> Result<MotifInstance> {
    let type_id = extended_type(m, src, dst, vocab).ok_or_else(|| {
        Error::InvalidMotif(format!(
            "({src}, {dst}) cannot extend a {}-event instance over {:?}",
            m.size(),
            m.nodes.as_slice()
        ))
    })?;
    let mut nodes = m.nodes.clone();
    for node in [src, dst] {
        if !nodes.contains(&node) {
            nodes.push(node);
        }
    }
    let mut events = m.events.clone();
    events.push(InstanceEvent { src, dst, time });
    Ok(MotifInstance {
        type_id,
        nodes,
        events,
        last_time: time,
    })
}

/// Creation-ordered handle of an instance inside an [`OpenMotifPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(u64);

/// Open motif instances indexed by node and by last event time.
#[derive(Debug, Clone)]
pub struct OpenMotifPool {
    max_size: usize,
    instances: BTreeMap<InstanceId, MotifInstance>,
    by_node: HashMap<NodeId, Vec<InstanceId>>,
    // non-negative f64 bit patterns sort like the values
    by_last_time: BTreeSet<(u64, InstanceId)>,
    full: Vec<InstanceId>,
    next_id: u64,
}

impl OpenMotifPool {
    pub fn new(max_size: usize) -> Self {
        Self {
            max_size,
            instances: BTreeMap::new(),
            by_node: HashMap::new(),
            by_last_time: BTreeSet::new(),
            full: Vec::new(),
            next_id: 0,
        }
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: InstanceId) -> Option<&MotifInstance> {
        self.instances.get(&id)
    }

    /// Instances in creation order.
    pub fn iter(&self) -> impl Iterator<Item = (InstanceId, &MotifInstance)> {
        self.instances.iter().map(|(&id, m)| (id, m))
    }

    pub fn insert(&mut self, m: MotifInstance) -> InstanceId {
        assert!(
            m.last_time >= 0.0 && m.last_time.is_finite(),
            "instance times must be finite and non-negative"
        );
        let id = InstanceId(self.next_id);
        self.next_id += 1;
        for &node in &m.nodes {
            self.by_node.entry(node).or_default().push(id);
        }
        self.by_last_time.insert((m.last_time.to_bits(), id));
        if m.size() >= self.max_size {
            self.full.push(id);
        }
        self.instances.insert(id, m);
        id
    }

    pub fn remove(&mut self, id: InstanceId) -> Option<MotifInstance> {
        let m = self.instances.remove(&id)?;
        for node in &m.nodes {
            if let Some(list) = self.by_node.get_mut(node) {
                if let Some(pos) = list.iter().position(|&x| x == id) {
                    list.swap_remove(pos);
                }
                if list.is_empty() {
                    self.by_node.remove(node);
                }
            }
        }
        self.by_last_time.remove(&(m.last_time.to_bits(), id));
        Some(m)
    }

    /// Replaces `id` with `m`, returning the new handle.
    pub fn replace(&mut self, id: InstanceId, m: MotifInstance) -> InstanceId {
        self.remove(id);
        self.insert(m)
    }

    /// Instances containing `a` or `b`, in creation order.
    pub fn touching(&self, a: NodeId, b: NodeId) -> Vec<InstanceId> {
        let mut ids: Vec<InstanceId> = Vec::new();
        for node in [a, b] {
            if let Some(list) = self.by_node.get(&node) {
                ids.extend_from_slice(list);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Removes instances idle for more than `delta_c` at `now` and instances
    /// that reached the size limit. Returns how many were removed.
    pub fn prune(&mut self, now: f64, delta_c: f64) -> usize {
        let mut removed = 0;
        for id in std::mem::take(&mut self.full) {
            removed += usize::from(self.remove(id).is_some());
        }
        while let Some(&(bits, id)) = self.by_last_time.first() {
            if now - f64::from_bits(bits) > delta_c {
                self.remove(id);
                removed += 1;
            } else {
                break;
            }
        }
        removed
    }

    /// Checks that both indexes describe exactly the stored instances.
    pub fn is_consistent(&self) -> bool {
        let node_refs: usize = self.by_node.values().map(Vec::len).sum();
        let expected: usize = self.instances.values().map(|m| m.nodes.len()).sum();
        node_refs == expected
            && self.by_last_time.len() == self.instances.len()
            && self.by_last_time.iter().all(|(bits, id)| {
                self.instances
                    .get(id)
                    .is_some_and(|m| m.last_time.to_bits() == *bits)
            })
            && self.instances.iter().all(|(id, m)| {
                m.nodes
                    .iter()
                    .all(|n| self.by_node.get(n).is_some_and(|l| l.contains(id)))
            })
    }
}
