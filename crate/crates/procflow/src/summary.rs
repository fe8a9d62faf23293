//! Descriptive statistics for a process set.

use crate::error::{Error, Result};
use crate::model::ProcessSet;

/// Five-number summary plus mean, computed with the usual linear-interpolation
/// quantile convention on sorted data.
#[derive(Debug, Clone, PartialEq)]
pub struct FiveNumSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl FiveNumSummary {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let h = (sorted.len() as f64 - 1.0) * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        FiveNumSummary {
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[sorted.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

/// Summary statistics of a [`ProcessSet`].
#[derive(Debug, Clone)]
pub struct ProcessSummary {
    pub n_seq: usize,
    pub n_action: usize,
    /// The action vocabulary, in vocabulary order.
    pub actions: Vec<String>,
    /// Length of each process.
    pub seq_length: Vec<usize>,
    /// Total occurrences of each action, in vocabulary order.
    pub action_freq: Vec<u64>,
    /// Number of processes each action appears in.
    pub action_seqfreq: Vec<u64>,
    /// `trans_count[i][j]` counts the bigram `(actions[i], actions[j])` over
    /// all processes.
    pub trans_count: Vec<Vec<u64>>,
    /// Summary of per-process final timestamps; absent when the set carries no
    /// times.
    pub total_time: Option<FiveNumSummary>,
    /// Summary of final timestamp divided by process length.
    pub mean_react_time: Option<FiveNumSummary>,
}

impl ProcessSummary {
    /// Row-normalized transition matrix. Rows with no outgoing transitions are
    /// left as all zeros.
    pub fn trans_prob(&self) -> Vec<Vec<f64>> {
        self.trans_count
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    vec![0.0; row.len()]
                } else {
                    row.iter().map(|&c| c as f64 / total as f64).collect()
                }
            })
            .collect()
    }
}

/// Compute summary statistics for `p`.
pub fn summarize(p: &ProcessSet) -> Result<ProcessSummary> {
    if p.is_empty() {
        return Err(Error::EmptySet);
    }
    let n_action = p.n_actions();
    let mut action_freq = vec![0u64; n_action];
    let mut action_seqfreq = vec![0u64; n_action];
    let mut trans_count = vec![vec![0u64; n_action]; n_action];
    let mut seq_length = Vec::with_capacity(p.n());

    let mut seen = vec![usize::MAX; n_action];
    for i in 0..p.n() {
        let s = p.actions(i);
        seq_length.push(s.len());
        for &a in s {
            action_freq[a as usize] += 1;
            if seen[a as usize] != i {
                seen[a as usize] = i;
                action_seqfreq[a as usize] += 1;
            }
        }
        for w in s.windows(2) {
            trans_count[w[0] as usize][w[1] as usize] += 1;
        }
    }

    let (total_time, mean_react_time) = if p.has_times() {
        let finals: Vec<f64> = (0..p.n()).map(|i| p.times(i).unwrap().last().copied().unwrap()).collect();
        let reacts: Vec<f64> = finals
            .iter()
            .zip(&seq_length)
            .map(|(&t, &l)| t / l as f64)
            .collect();
        (
            Some(FiveNumSummary::of(&finals)),
            Some(FiveNumSummary::of(&reacts)),
        )
    } else {
        (None, None)
    };

    Ok(ProcessSummary {
        n_seq: p.n(),
        n_action,
        actions: p.vocab().to_vec(),
        seq_length,
        action_freq,
        action_seqfreq,
        trans_count,
        total_time,
        mean_react_time,
    })
}
