//! Poisson waiting-time likelihoods and log-posterior scores.
//!
//! The likelihood of a waiting time `dt` under rate `lambda` is the mass of
//! the exponential density on `[max(0, dt - eps), dt + eps]`. Scores are
//! unnormalized log posteriors: log likelihood plus log empirical prior.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::EdgeKey;
use crate::motif::TypeIndex;
use crate::stats::MtmStats;

/// Whether an event starts a new motif or extends an open one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Cold,
    Hot,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Cold => "cold",
            EventKind::Hot => "hot",
        }
    }
}

/// Unnormalized log posterior. `-inf` marks an impossible candidate; the
/// value is never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub log_posterior: f64,
    pub kind: EventKind,
}

impl Score {
    pub fn impossible(kind: EventKind) -> Self {
        Self {
            log_posterior: f64::NEG_INFINITY,
            kind,
        }
    }

    pub fn is_impossible(&self) -> bool {
        self.log_posterior == f64::NEG_INFINITY
    }
}

/// `ln(1 - exp(-x))` for `x > 0`.
fn log1mexp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// Log probability mass of an exponential waiting time around `waiting`.
pub fn log_waiting_likelihood(lambda: f64, waiting: f64, epsilon: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate {lambda} must be positive"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if !(waiting >= 0.0 && waiting.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "waiting time {waiting} must be finite and non-negative"
        )));
    }
    let lower = (waiting - epsilon).max(0.0);
    let width = waiting + epsilon - lower;
    Ok(-lambda * lower + log1mexp(lambda * width))
}

/// Score of starting a new motif on an observed edge.
pub fn cold_log_posterior(edge: EdgeKey, waiting: f64, stats: &MtmStats) -> Result<Score> {
    let e = stats.edge(edge).ok_or(Error::UnknownEdge {
        src: edge.src,
        dst: edge.dst,
    })?;
    let likelihood = log_waiting_likelihood(e.lambda, waiting, stats.epsilon())?;
    let prior = (e.count as f64 / stats.edge_count_total() as f64).ln();
    Ok(Score {
        log_posterior: likelihood + prior,
        kind: EventKind::Cold,
    })
}

/// Log prior of the transition `source -> target`, or `None` when it has
/// zero probability.
pub fn log_transition_prior(source: TypeIndex, target: TypeIndex, stats: &MtmStats) -> Option<f64> {
    let count = stats.trans_count(source, target) as f64;
    let row = stats.trans_row_total(source) as f64;
    let alpha = stats.params().laplace_alpha;
    let (num, den) = if alpha > 0.0 {
        let k = stats.vocab().extension_count(source) as f64;
        (count + alpha, row + alpha * k)
    } else {
        (count, row)
    };
    (num > 0.0 && den > 0.0).then(|| (num / den).ln())
}

/// Score of extending an open instance of type `source` into `target`.
pub fn hot_log_posterior(
    source: TypeIndex,
    target: TypeIndex,
    waiting: f64,
    stats: &MtmStats,
) -> Result<Score> {
    let vocab = stats.vocab();
    if source >= vocab.len() || target >= vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "type index out of range in ({source}, {target})"
        )));
    }
    if vocab.get(target).size() != vocab.get(source).size() + 1 {
        return Err(Error::InvalidArgument(format!(
            "type {target} is not one event larger than type {source}"
        )));
    }
    let Some(prior) = log_transition_prior(source, target, stats) else {
        return Ok(Score::impossible(EventKind::Hot));
    };
    let likelihood = log_waiting_likelihood(stats.lambda_type(target), waiting, stats.epsilon())?;
    Ok(Score {
        log_posterior: likelihood + prior,
        kind: EventKind::Hot,
    })
}
