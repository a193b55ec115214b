//! Brute-force reference implementations.
//!
//! Nothing here uses the library's motif machinery: types are recomputed by
//! relabeling event lists, open instances by rescanning the whole stream.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use motifcast::predictor::PredictorState;
use motifcast::{EdgeKey, MtmStats, TemporalGraph};

pub type Code = Vec<(u8, u8)>;

/// First-appearance relabeling of a directed event pattern.
pub fn relabel(pattern: &[(u32, u32)]) -> Code {
    let mut seen: Vec<u32> = Vec::new();
    let mut label = |n: u32| -> u8 {
        match seen.iter().position(|&x| x == n) {
            Some(i) => i as u8,
            None => {
                seen.push(n);
                (seen.len() - 1) as u8
            }
        }
    };
    pattern
        .iter()
        .map(|&(a, b)| {
            let a = label(a);
            let b = label(b);
            (a, b)
        })
        .collect()
}

fn connected_in_order(code: &Code) -> bool {
    let mut nodes = BTreeSet::new();
    for (i, &(a, b)) in code.iter().enumerate() {
        if a == b {
            return false;
        }
        if i > 0 && !nodes.contains(&a) && !nodes.contains(&b) {
            return false;
        }
        nodes.insert(a);
        nodes.insert(b);
    }
    true
}

/// Every canonical, connected pattern of exactly `size` events, found by
/// trying all label sequences.
pub fn brute_force_types(size: usize) -> Vec<Code> {
    let labels = (size + 1) as u8;
    let pairs: Vec<(u8, u8)> = (0..labels)
        .flat_map(|a| (0..labels).map(move |b| (a, b)))
        .collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; size];
    loop {
        let code: Code = idx.iter().map(|&i| pairs[i]).collect();
        if connected_in_order(&code) {
            let pattern: Vec<(u32, u32)> =
                code.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
            if relabel(&pattern) == code {
                out.insert(code);
            }
        }
        let mut k = 0;
        loop {
            if k == size {
                return out.into_iter().collect();
            }
            idx[k] += 1;
            if idx[k] < pairs.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Vocabulary of sizes `1..=max_size` ordered by size, then code.
pub fn brute_force_vocabulary(max_size: usize) -> Vec<Code> {
    (1..=max_size).flat_map(brute_force_types).collect()
}

pub fn intensity_or(times: &[i64], fallback: f64) -> f64 {
    let n = times.len();
    if n < 2 || times[n - 1] == times[0] {
        return fallback;
    }
    (n - 1) as f64 / (times[n - 1] - times[0]) as f64
}

/// `ln` of the exponential mass on `[max(0, dt - eps), dt + eps]`.
pub fn log_window(lambda: f64, dt: f64, eps: f64) -> f64 {
    let lo = (dt - eps).max(0.0);
    let hi = dt + eps;
    -lambda * lo + (1.0 - (-lambda * (hi - lo)).exp()).ln()
}

#[derive(Debug, Clone)]
pub struct RefInstance {
    pub events: Vec<(u32, u32, i64)>,
}

impl RefInstance {
    pub fn code(&self) -> Code {
        let p: Vec<_> = self.events.iter().map(|e| (e.0, e.1)).collect();
        relabel(&p)
    }

    pub fn last(&self) -> i64 {
        self.events.last().unwrap().2
    }

    pub fn touches(&self, n: u32) -> bool {
        self.events.iter().any(|e| e.0 == n || e.1 == n)
    }
}

#[derive(Debug, Clone)]
pub struct RefTransition {
    pub source: Code,
    pub target: Code,
    pub waiting: i64,
}

/// Instances alive just before event `upto`, rebuilt from the start.
pub fn open_instances(
    events: &[(u32, u32, i64)],
    upto: usize,
    max_size: usize,
    delta_c: i64,
) -> Vec<RefInstance> {
    let mut all: Vec<Option<RefInstance>> = Vec::new();
    for &e in &events[..upto] {
        let eligible = eligible(&all, e, max_size, delta_c);
        if eligible.is_empty() {
            all.push(Some(RefInstance { events: vec![e] }));
        }
        for i in eligible {
            all[i].as_mut().unwrap().events.push(e);
        }
    }
    all.into_iter().flatten().collect()
}

fn eligible(
    all: &[Option<RefInstance>],
    e: (u32, u32, i64),
    max_size: usize,
    delta_c: i64,
) -> Vec<usize> {
    all.iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let m = m.as_ref()?;
            let ok = m.events.len() < max_size
                && (m.touches(e.0) || m.touches(e.1))
                && e.2 - m.last() <= delta_c;
            ok.then_some(i)
        })
        .collect()
}

/// Transitions realized by event `i`, recomputed from scratch.
pub fn transitions_at(
    events: &[(u32, u32, i64)],
    i: usize,
    max_size: usize,
    delta_c: i64,
) -> Vec<RefTransition> {
    let e = events[i];
    open_instances(events, i, max_size, delta_c)
        .into_iter()
        .filter(|m| {
            m.events.len() < max_size
                && (m.touches(e.0) || m.touches(e.1))
                && e.2 - m.last() <= delta_c
        })
        .map(|m| {
            let mut next = m.clone();
            next.events.push(e);
            RefTransition {
                source: m.code(),
                target: next.code(),
                waiting: e.2 - m.last(),
            }
        })
        .collect()
}

/// Statistics recomputed with one full rescan per event.
#[derive(Debug, Clone)]
pub struct RefStats {
    pub vocab: Vec<Code>,
    pub cold: Vec<bool>,
    pub trans: BTreeMap<(usize, usize), u64>,
    pub row: HashMap<usize, u64>,
    pub lambda_global: f64,
    pub lambda_type: Vec<f64>,
    pub edge_count: BTreeMap<(u32, u32), u64>,
    pub edge_lambda: BTreeMap<(u32, u32), f64>,
    pub events: usize,
    pub epsilon: f64,
}

impl RefStats {
    pub fn index(&self, code: &Code) -> usize {
        self.vocab
            .iter()
            .position(|c| c == code)
            .expect("code in vocabulary")
    }

    pub fn p_cold(&self) -> f64 {
        self.cold.iter().filter(|&&c| c).count() as f64 / self.events as f64
    }

    pub fn hot_score(&self, r: usize, s: usize, waiting: f64) -> Option<f64> {
        let c = *self.trans.get(&(r, s))?;
        let prior = c as f64 / self.row[&r] as f64;
        Some(log_window(self.lambda_type[s], waiting, self.epsilon) + prior.ln())
    }

    pub fn cold_score(&self, key: (u32, u32), waiting: f64) -> f64 {
        let total: u64 = self.edge_count.values().sum();
        let prior = self.edge_count[&key] as f64 / total as f64;
        log_window(self.edge_lambda[&key], waiting, self.epsilon) + prior.ln()
    }
}

pub fn triples(g: &TemporalGraph) -> Vec<(u32, u32, i64)> {
    g.events().iter().map(|e| (e.src, e.dst, e.time)).collect()
}

pub fn reference_stats(
    events: &[(u32, u32, i64)],
    max_size: usize,
    delta_c: i64,
    epsilon: f64,
) -> RefStats {
    let vocab = brute_force_vocabulary(max_size);
    let times: Vec<i64> = events.iter().map(|e| e.2).collect();
    let lambda_global = intensity_or(&times, f64::NAN);
    let mut cold = Vec::new();
    let mut trans: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut type_times: Vec<Vec<i64>> = vec![Vec::new(); vocab.len()];
    let index = |c: &Code| vocab.iter().position(|x| x == c).unwrap();
    for i in 0..events.len() {
        let ts = transitions_at(events, i, max_size, delta_c);
        cold.push(ts.is_empty());
        let mut targets = BTreeSet::new();
        for t in &ts {
            *trans
                .entry((index(&t.source), index(&t.target)))
                .or_default() += 1;
            targets.insert(index(&t.target));
        }
        for s in targets {
            type_times[s].push(events[i].2);
        }
    }
    let mut row = HashMap::new();
    for (&(r, _), &c) in &trans {
        *row.entry(r).or_default() += c;
    }
    let lambda_type = type_times
        .iter()
        .map(|t| intensity_or(t, lambda_global))
        .collect();
    let mut per_edge: BTreeMap<(u32, u32), Vec<i64>> = BTreeMap::new();
    for e in events {
        per_edge.entry((e.0, e.1)).or_default().push(e.2);
    }
    let edge_count = per_edge.iter().map(|(&k, v)| (k, v.len() as u64)).collect();
    let edge_lambda = per_edge
        .iter()
        .map(|(&k, v)| (k, intensity_or(v, lambda_global)))
        .collect();
    RefStats {
        vocab,
        cold,
        trans,
        row,
        lambda_global,
        lambda_type,
        edge_count,
        edge_lambda,
        events: events.len(),
        epsilon,
    }
}

/// Dense feature matrix, source-type columns, normalized by a plain sum.
pub fn reference_features(
    events: &[(u32, u32, i64)],
    max_size: usize,
    delta_c: i64,
    r: &RefStats,
) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; r.vocab.len()]; events.len()];
    for (i, row) in out.iter_mut().enumerate() {
        let ts = transitions_at(events, i, max_size, delta_c);
        let scored: Vec<(usize, f64)> = ts
            .iter()
            .filter_map(|t| {
                let (a, b) = (r.index(&t.source), r.index(&t.target));
                r.hot_score(a, b, t.waiting as f64).map(|s| (a, s.exp()))
            })
            .collect();
        let total: f64 = scored.iter().map(|s| s.1).sum();
        if total > 0.0 {
            for (col, w) in scored {
                row[col] += w / total;
            }
        }
    }
    out
}

fn near(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Exhaustive cold choice: best score, then smaller pair.
pub fn reference_cold(state: &PredictorState, stats: &MtmStats, r: &RefStats) -> ((u32, u32), f64) {
    let mut scored: Vec<((u32, u32), f64)> = r
        .edge_count
        .keys()
        .map(|&k| {
            let last = state
                .last_occurrence(EdgeKey::new(k.0, k.1), stats)
                .expect("observed edge has a last occurrence");
            (k, r.cold_score(k, state.now - last))
        })
        .collect();
    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scored.retain(|s| near(s.1, best));
    scored.sort_by_key(|a| a.0);
    scored[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefHot {
    pub instance: motifcast::InstanceId,
    pub pair: (u32, u32),
    pub source: usize,
    pub target: usize,
    pub score: f64,
}

/// Exhaustive hot choice: best score, then most recent instance, then
/// smaller pair, then older instance.
pub fn reference_hot(state: &PredictorState, r: &RefStats, max_size: usize) -> Option<RefHot> {
    let mut all: Vec<(RefHot, f64)> = Vec::new();
    for (id, m) in state.pool.iter() {
        if m.events.len() >= max_size {
            continue;
        }
        let pattern: Vec<(u32, u32)> = m.events.iter().map(|e| (e.src, e.dst)).collect();
        let source = r.index(&relabel(&pattern));
        assert_eq!(
            m.type_id, source,
            "pooled instance carries its relabeled type"
        );
        let mut nodes: Vec<u32> = pattern.iter().flat_map(|&(a, b)| [a, b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        for &a in &nodes {
            for &b in &nodes {
                if a == b {
                    continue;
                }
                let mut p = pattern.clone();
                p.push((a, b));
                let target = r.index(&relabel(&p));
                if let Some(score) = r.hot_score(source, target, state.now - m.last_time) {
                    all.push((
                        RefHot {
                            instance: id,
                            pair: (a, b),
                            source,
                            target,
                            score,
                        },
                        m.last_time,
                    ));
                }
            }
        }
    }
    let best = all
        .iter()
        .map(|c| c.0.score)
        .fold(f64::NEG_INFINITY, f64::max);
    all.retain(|c| near(c.0.score, best));
    all.sort_by(|x, y| {
        y.1.total_cmp(&x.1)
            .then(x.0.pair.cmp(&y.0.pair))
            .then(x.0.instance.cmp(&y.0.instance))
    });
    all.into_iter().next().map(|c| c.0)
}

/// Random stream of at most `max_events` events on `nodes` nodes with small,
/// tie-prone gaps. Always spans a positive time range.
pub fn random_stream<R: rand::Rng>(
    rng: &mut R,
    max_events: usize,
    nodes: u32,
) -> Vec<(u32, u32, i64)> {
    let n = rng.random_range(2..=max_events);
    let mut t = 0i64;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a == b {
            continue;
        }
        out.push((a, b, t));
        t += rng.random_range(0..4);
    }
    if out.last().unwrap().2 == 0 {
        out.last_mut().unwrap().2 = 1;
    }
    out
}

/// Discrepancies between the library and the oracles on one stream.
pub fn check_stream(
    events: &[(u32, u32, i64)],
    max_size: usize,
    delta_c: i64,
    steps: usize,
    seed: u64,
) -> Vec<String> {
    use motifcast::stats::{build_stats_labeled, StatsParams};
    use motifcast::{build_feature_matrix, ColumnIndexing, Forecaster};

    let mut errors = Vec::new();
    let g = TemporalGraph::from_dense_triples(events.to_vec()).unwrap();
    let ev = triples(&g);
    let labeled = build_stats_labeled(&g, StatsParams::new(max_size, delta_c as f64)).unwrap();
    let stats = &labeled.stats;
    let r = reference_stats(&ev, max_size, delta_c, stats.epsilon());

    if labeled.cold != r.cold {
        errors.push(format!("cold labels {:?} vs {:?}", labeled.cold, r.cold));
    }
    if stats.transitions() != &r.trans {
        errors.push(format!(
            "transitions {:?} vs {:?}",
            stats.transitions(),
            r.trans
        ));
    }
    if stats.p_cold() != r.p_cold() {
        errors.push(format!("p_cold {} vs {}", stats.p_cold(), r.p_cold()));
    }
    for (s, &l) in r.lambda_type.iter().enumerate() {
        if !near(stats.lambda_type(s), l) {
            errors.push(format!(
                "lambda of type {s}: {} vs {l}",
                stats.lambda_type(s)
            ));
        }
    }

    let fm = build_feature_matrix(&g, stats, ColumnIndexing::Source).unwrap();
    let dense = fm.to_dense();
    let oracle = reference_features(&ev, max_size, delta_c, &r);
    for (i, (a, b)) in dense.iter().zip(&oracle).enumerate() {
        for (c, (x, y)) in a.iter().zip(b).enumerate() {
            if (x - y).abs() > 1e-9 {
                errors.push(format!("feature ({i}, {c}): {x} vs {y}"));
            }
        }
    }

    let mut f = Forecaster::new(&g, stats, seed).unwrap();
    for step in 0..steps {
        let state = f.state();
        let (key, score) = motifcast::solve_cold(state, stats).unwrap();
        let (rk, rs) = reference_cold(state, stats, &r);
        if (key.src, key.dst) != rk || (score.log_posterior - rs).abs() > 1e-9 {
            errors.push(format!(
                "step {step} cold {key:?} {} vs {rk:?} {rs}",
                score.log_posterior
            ));
        }
        let hot = motifcast::solve_hot(state, stats).unwrap();
        let rh = reference_hot(state, &r, max_size);
        match (&hot, &rh) {
            (None, None) => {}
            (Some(h), Some(o)) => {
                if h.instance != o.instance
                    || h.pair != o.pair
                    || h.target_type != o.target
                    || (h.score.log_posterior - o.score).abs() > 1e-9
                {
                    errors.push(format!("step {step} hot {h:?} vs {o:?}"));
                }
            }
            _ => errors.push(format!("step {step} hot {hot:?} vs {rh:?}")),
        }
        f.step().unwrap();
    }
    errors
}
