//! Forecast precision, predictability diagnostics and parameter sweeps.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{chronological_split, EdgeKey, NodeId, TemporalGraph};
use crate::predictor::{step_predict, Prediction};
use crate::stats::{compute_delta_c, MtmStats, StatsParams};

/// Fraction of predictions whose directed pair occurs anywhere in `test`.
pub fn precision_at_k(preds: &[Prediction], test: &TemporalGraph) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = preds
        .iter()
        .filter(|p| test.contains_edge(EdgeKey::new(p.src, p.dst)))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Fraction of test events whose directed pair was already seen in `train`.
///
/// Both graphs must share one node id space, as produced by
/// [`chronological_split`].
pub fn repeated_event_ratio(train: &TemporalGraph, test: &TemporalGraph) -> Result<f64> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let repeated = test
        .events()
        .iter()
        .filter(|e| train.contains_edge(e.key()))
        .count();
    Ok(repeated as f64 / test.len() as f64)
}

/// Shannon entropy in nats of the distribution proportional to `counts`.
pub fn shannon_entropy<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Mean over source nodes of the entropy of their target distribution.
pub fn node_entropy(g: &TemporalGraph) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_source: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();
    for key in g.sorted_edges() {
        by_source
            .entry(key.src)
            .or_default()
            .push(g.edge_timestamps()[&key].len() as u64);
    }
    let total: f64 = by_source
        .values()
        .map(|c| shannon_entropy(c.iter().copied()))
        .sum();
    Ok(total / by_source.len() as f64)
}

/// Entropy of the joint distribution of observed type transitions.
pub fn motif_transition_entropy(stats: &MtmStats) -> Result<f64> {
    if stats.transitions().is_empty() {
        return Err(Error::InvalidArgument(
            "no motif transitions observed".into(),
        ));
    }
    Ok(shannon_entropy(stats.transitions().values().copied()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub test_ratio: f64,
    pub seed: u64,
    pub precision: f64,
    pub rer: f64,
    pub node_entropy: f64,
    pub motif_transition_entropy: Option<f64>,
    pub fallback_count: usize,
    pub delta_c: f64,
    pub p_cold: f64,
}

/// Model settings shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub max_size: usize,
    /// Fixed ΔC; computed from each training split when absent.
    pub delta_c: Option<f64>,
    pub epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            max_size: crate::stats::DEFAULT_MAX_SIZE,
            delta_c: None,
            epsilon: crate::stats::DEFAULT_EPSILON,
        }
    }
}

/// Builds statistics on `train` under `config`.
pub fn train_model(train: &TemporalGraph, config: &ModelConfig) -> Result<MtmStats> {
    let delta_c = match config.delta_c {
        Some(d) => d,
        None => compute_delta_c(train)? as f64,
    };
    let mut params = StatsParams::new(config.max_size, delta_c);
    params.epsilon = config.epsilon;
    MtmStats::build(train, params)
}

/// Splits, trains, forecasts `k` events and scores them.
pub fn evaluate(
    g: &TemporalGraph,
    test_ratio: f64,
    k: usize,
    seed: u64,
    config: &ModelConfig,
) -> Result<(EvalReport, Vec<Prediction>)> {
    let (train, test) = chronological_split(g, test_ratio)?;
    let stats = train_model(&train, config)?;
    let forecast = step_predict(&train, &stats, k, seed)?;
    let report = EvalReport {
        k,
        test_ratio,
        seed,
        precision: precision_at_k(&forecast.predictions, &test)?,
        rer: repeated_event_ratio(&train, &test)?,
        node_entropy: node_entropy(&train)?,
        motif_transition_entropy: motif_transition_entropy(&stats).ok(),
        fallback_count: forecast.fallbacks,
        delta_c: stats.delta_c(),
        p_cold: stats.p_cold(),
    };
    Ok((report, forecast.predictions))
}

/// One `(k, test_ratio, seed)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub test_ratio: f64,
    pub seed: u64,
    pub precision: f64,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// Precision for every `(k, ratio, seed)`. Forecasting is prefix-stable, so
/// each `(ratio, seed)` forecasts the largest `k` once and scores prefixes.
pub fn sweep(
    g: &TemporalGraph,
    ratios: &[f64],
    ks: &[usize],
    seeds: &[u64],
    config: &ModelConfig,
) -> Result<SweepTable> {
    if ratios.is_empty() || ks.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one ratio, k and seed".into(),
        ));
    }
    let max_k = *ks.iter().max().expect("non-empty");
    if ks.contains(&0) {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }

    let splits = ratios
        .par_iter()
        .map(|&r| {
            let (train, test) = chronological_split(g, r)?;
            let stats = train_model(&train, config)?;
            Ok((train, test, stats))
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, u64)> = (0..ratios.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(i, seed)| {
            let (train, test, stats) = &splits[i];
            let forecast = step_predict(train, stats, max_k, seed)?;
            let mut fallback_prefix = Vec::with_capacity(max_k + 1);
            fallback_prefix.push(0usize);
            for p in &forecast.predictions {
                let last = *fallback_prefix.last().expect("seeded");
                fallback_prefix.push(last + p.fallback as usize);
            }
            let mut rows = HashMap::new();
            for &k in ks {
                let precision = precision_at_k(&forecast.predictions[..k], test)?;
                rows.insert(k, (precision, fallback_prefix[k]));
            }
            Ok(((i, seed), rows))
        })
        .collect::<Result<HashMap<_, _>>>()?;

    let mut rows = Vec::with_capacity(ks.len() * ratios.len() * seeds.len());
    for &k in ks {
        for (i, &ratio) in ratios.iter().enumerate() {
            for &seed in seeds {
                let (precision, fallbacks) = results[&(i, seed)][&k];
                rows.push(SweepRow {
                    k,
                    test_ratio: ratio,
                    seed,
                    precision,
                    fallbacks,
                });
            }
        }
    }
    Ok(SweepTable { rows })
}

impl SweepTable {
    /// Mean precision and fallbacks per `(k, ratio)` in first-seen order.
    pub fn means(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut order = Vec::new();
        let mut acc: HashMap<(usize, u64), (f64, f64, usize)> = HashMap::new();
        for r in &self.rows {
            let key = (r.k, r.test_ratio.to_bits());
            let slot = acc.entry(key).or_insert_with(|| {
                order.push((r.k, r.test_ratio));
                (0.0, 0.0, 0)
            });
            slot.0 += r.precision;
            slot.1 += r.fallbacks as f64;
            slot.2 += 1;
        }
        order
            .into_iter()
            .map(|(k, ratio)| {
                let (p, f, n) = acc[&(k, ratio.to_bits())];
                (k, ratio, p / n as f64, f / n as f64)
            })
            .collect()
    }

    pub fn mean_precision(&self, k: usize, ratio: f64) -> Option<f64> {
        self.means()
            .into_iter()
            .find(|m| m.0 == k && m.1 == ratio)
            .map(|m| m.2)
    }

    /// `k,test_ratio,seed,precision,fallbacks` rows, each `(k, ratio)` group
    /// followed by a `mean` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,test_ratio,seed,precision,fallbacks")?;
        let means = self.means();
        for (k, ratio, p, f) in means {
            for r in self
                .rows
                .iter()
                .filter(|r| r.k == k && r.test_ratio == ratio)
            {
                writeln!(
                    out,
                    "{},{},{},{:.6},{}",
                    r.k, r.test_ratio, r.seed, r.precision, r.fallbacks
                )?;
            }
            writeln!(out, "{k},{ratio},mean,{p:.6},{f:.2}")?;
        }
        Ok(())
    }
}

/// Distinct directed pairs in `g`.
pub fn pair_set(g: &TemporalGraph) -> HashSet<EdgeKey> {
    g.edge_timestamps().keys().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::EventKind;

    fn pred(src: NodeId, dst: NodeId) -> Prediction {
        Prediction {
            step: 0,
            src,
            dst,
            time: 0.0,
            kind: EventKind::Cold,
            source_type: None,
            target_type: None,
            score: 0.0,
            fallback: false,
        }
    }

    fn graph(t: &[(u32, u32, i64)]) -> TemporalGraph {
        TemporalGraph::from_dense_triples(t.to_vec()).unwrap()
    }

    #[test]
    fn precision_examples() {
        let test = graph(&[(1, 2, 0), (5, 6, 1)]);
        assert_eq!(
            precision_at_k(&[pred(1, 2), pred(3, 4)], &test).unwrap(),
            0.5
        );
        assert_eq!(precision_at_k(&vec![pred(1, 2); 4], &test).unwrap(), 1.0);
        assert_eq!(precision_at_k(&[pred(2, 1)], &test).unwrap(), 0.0);
        assert!(precision_at_k(&[], &test).is_err());
    }

    #[test]
    fn rer_contained_test_is_one() {
        let g = graph(&[(0, 1, 0), (1, 2, 1), (0, 1, 2), (1, 2, 3)]);
        let (train, test) = chronological_split(&g, 0.5).unwrap();
        assert_eq!(repeated_event_ratio(&train, &test).unwrap(), 1.0);
        let g = graph(&[(0, 1, 0), (1, 2, 1), (2, 0, 2), (0, 1, 3)]);
        let (train, test) = chronological_split(&g, 0.5).unwrap();
        assert_eq!(repeated_event_ratio(&train, &test).unwrap(), 0.5);
    }

    #[test]
    fn uniform_entropy_is_log_n() {
        for n in [1u64, 2, 3, 4, 16, 100] {
            let h = shannon_entropy(std::iter::repeat_n(7, n as usize));
            assert!((h - (n as f64).ln()).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn node_entropy_examples() {
        let g = graph(&[(0, 1, 0), (2, 3, 1), (0, 1, 2)]);
        assert_eq!(node_entropy(&g).unwrap(), 0.0);
        let g = graph(&[(0, 1, 0), (0, 2, 1), (0, 1, 2), (0, 2, 3)]);
        assert!((node_entropy(&g).unwrap() - 2f64.ln()).abs() < 1e-12);
        // one point source and one uniform source
        let g = graph(&[(0, 1, 0), (0, 2, 1), (3, 1, 2)]);
        assert!((node_entropy(&g).unwrap() - 2f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn transition_entropy_examples() {
        let g = graph(&[(0, 1, 0), (0, 1, 1), (5, 6, 100), (5, 6, 101)]);
        let stats = crate::stats::build_stats(&g, 2, 5.0).unwrap();
        assert_eq!(motif_transition_entropy(&stats).unwrap(), 0.0);
        let cold_only = graph(&[(0, 1, 0), (2, 3, 100)]);
        let stats = crate::stats::build_stats(&cold_only, 2, 5.0).unwrap();
        assert!(motif_transition_entropy(&stats).is_err());
    }

    fn stream() -> TemporalGraph {
        let mut t = Vec::new();
        for i in 0..200u32 {
            let a = i % 9;
            let b = (i * 7 + 3) % 11;
            if a != b {
                t.push((a, b, i as i64 * 5 + (i % 4) as i64));
            }
        }
        graph(&t)
    }

    #[test]
    fn sweep_single_cell() {
        let g = stream();
        let table = sweep(&g, &[0.2], &[10], &[1], &ModelConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 1);
        let (report, preds) = evaluate(&g, 0.2, 10, 1, &ModelConfig::default()).unwrap();
        assert_eq!(preds.len(), 10);
        assert_eq!(table.rows[0].precision, report.precision);
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("10,0.2,mean,"));
    }

    #[test]
    fn sweep_prefixes_match_direct_runs() {
        let g = stream();
        let config = ModelConfig::default();
        let table = sweep(&g, &[0.1, 0.3], &[5, 20], &[1, 2], &config).unwrap();
        assert_eq!(table.rows.len(), 8);
        for r in &table.rows {
            let (report, _) = evaluate(&g, r.test_ratio, r.k, r.seed, &config).unwrap();
            assert_eq!(report.precision, r.precision);
            assert_eq!(report.fallback_count, r.fallbacks);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let g = stream();
        let run = || {
            let t = sweep(
                &g,
                &[0.2, 0.4],
                &[5, 15],
                &[3, 4, 5],
                &ModelConfig::default(),
            )
            .unwrap();
            let mut out = Vec::new();
            t.write_csv(&mut out).unwrap();
            out
        };
        assert_eq!(run(), run());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn precision_ignores_order(
                pairs in prop::collection::vec((0u32..6, 0u32..6), 1..20),
                test in prop::collection::vec((0u32..6, 0u32..6), 1..20),
            ) {
                let test: Vec<_> = test.into_iter().enumerate()
                    .filter(|(_, (a, b))| a != b)
                    .map(|(i, (a, b))| (a, b, i as i64)).collect();
                prop_assume!(!test.is_empty());
                let g = graph(&test);
                let preds: Vec<_> = pairs.iter().map(|&(a, b)| pred(a, b)).collect();
                let mut rev = preds.clone();
                rev.reverse();
                prop_assert_eq!(precision_at_k(&preds, &g).unwrap(), precision_at_k(&rev, &g).unwrap());
            }

            #[test]
            fn entropy_bounds(counts in prop::collection::vec(0u64..50, 1..30)) {
                let h = shannon_entropy(counts.iter().copied());
                let support = counts.iter().filter(|&&c| c > 0).count().max(1);
                prop_assert!(h >= 0.0);
                prop_assert!(h <= (support as f64).ln() + 1e-12);
            }
        }
    }
}
