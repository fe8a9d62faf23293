//! Sequence-manipulation operations for data cleaning.
//!
//! Every operation returns a new [`ProcessSet`]; inputs are never mutated.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::ProcessSet;

impl ProcessSet {
    /// Subset processes by the given indices, preserving their order. The
    /// vocabulary is recomputed to the actions actually present.
    pub fn sub_seqs(&self, indices: &[usize]) -> Result<ProcessSet> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n() {
                return Err(Error::IndexOutOfRange { index: i, n: self.n() });
            }
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        let ids = indices.iter().map(|&i| self.ids()[i].clone()).collect();
        let seqs = indices
            .iter()
            .map(|&i| self.labels_of(i).into_iter().map(String::from).collect())
            .collect();
        let times = if self.has_times() {
            Some(indices.iter().map(|&i| self.times(i).unwrap().to_vec()).collect())
        } else {
            None
        };
        ProcessSet::from_labels(ids, seqs, times)
    }

    /// Collapse each maximal run of identical consecutive actions to its first
    /// occurrence, keeping that occurrence's timestamp.
    pub fn remove_repeat(&self) -> ProcessSet {
        let mut seqs = Vec::with_capacity(self.n());
        let mut times = self.has_times().then(|| Vec::with_capacity(self.n()));
        for i in 0..self.n() {
            let s = self.actions(i);
            let mut keep = Vec::with_capacity(s.len());
            for (l, &a) in s.iter().enumerate() {
                if l == 0 || s[l - 1] != a {
                    keep.push(l);
                }
            }
            seqs.push(
                keep.iter()
                    .map(|&l| self.label(s[l]).to_string())
                    .collect::<Vec<_>>(),
            );
            if let Some(ts) = &mut times {
                let t = self.times(i).unwrap();
                ts.push(keep.iter().map(|&l| t[l]).collect::<Vec<_>>());
            }
        }
        ProcessSet::from_labels(self.ids().to_vec(), seqs, times)
            .expect("run collapse preserves validity")
    }

    /// Remove every occurrence of the target actions together with their
    /// timestamps. Processes left empty are dropped; the count of dropped
    /// processes is returned alongside the new set.
    pub fn remove_action(&self, targets: &[String]) -> (ProcessSet, usize) {
        let targets: HashSet<&str> = targets.iter().map(String::as_str).collect();
        let mut ids = Vec::new();
        let mut seqs: Vec<Vec<String>> = Vec::new();
        let mut times = self.has_times().then(Vec::new);
        let mut n_dropped = 0;
        for i in 0..self.n() {
            let labels = self.labels_of(i);
            let keep: Vec<usize> = (0..labels.len())
                .filter(|&l| !targets.contains(labels[l]))
                .collect();
            if keep.is_empty() {
                n_dropped += 1;
                continue;
            }
            ids.push(self.ids()[i].clone());
            seqs.push(keep.iter().map(|&l| labels[l].to_string()).collect());
            if let Some(ts) = &mut times {
                let t = self.times(i).unwrap();
                ts.push(keep.iter().map(|&l| t[l]).collect::<Vec<f64>>());
            }
        }
        if n_dropped > 0 {
            log::warn!("remove_action dropped {} empty processes", n_dropped);
        }
        let set = ProcessSet::from_labels(ids, seqs, times)
            .expect("removal preserves validity");
        (set, n_dropped)
    }

    /// Rename every occurrence of `old` to `new`. Timestamps are untouched.
    pub fn replace_action(&self, old: &str, new: &str) -> ProcessSet {
        let seqs = (0..self.n())
            .map(|i| {
                self.labels_of(i)
                    .into_iter()
                    .map(|a| if a == old { new.to_string() } else { a.to_string() })
                    .collect()
            })
            .collect();
        let times = self.time_seqs().map(|t| t.to_vec());
        ProcessSet::from_labels(self.ids().to_vec(), seqs, times)
            .expect("relabeling preserves validity")
    }

    /// Replace each non-overlapping, left-to-right occurrence of the exact
    /// consecutive `pattern` by the single action `new`, which carries the
    /// timestamp of the pattern's first element.
    pub fn combine_actions(&self, pattern: &[String], new: &str) -> Result<ProcessSet> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let m = pattern.len();
        let mut seqs = Vec::with_capacity(self.n());
        let mut times = self.has_times().then(|| Vec::with_capacity(self.n()));
        for i in 0..self.n() {
            let labels = self.labels_of(i);
            let t = self.times(i);
            let mut out = Vec::new();
            let mut tout = Vec::new();
            let mut l = 0;
            while l < labels.len() {
                let matches = l + m <= labels.len()
                    && (0..m).all(|k| labels[l + k] == pattern[k]);
                if matches {
                    out.push(new.to_string());
                    if let Some(t) = t {
                        tout.push(t[l]);
                    }
                    l += m;
                } else {
                    out.push(labels[l].to_string());
                    if let Some(t) = t {
                        tout.push(t[l]);
                    }
                    l += 1;
                }
            }
            seqs.push(out);
            if let Some(ts) = &mut times {
                ts.push(tout);
            }
        }
        ProcessSet::from_labels(self.ids().to_vec(), seqs, times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(seqs: Vec<Vec<&str>>, times: Option<Vec<Vec<f64>>>) -> ProcessSet {
        let ids = (0..seqs.len()).map(|i| format!("p{}", i)).collect();
        let seqs = seqs
            .into_iter()
            .map(|s| s.into_iter().map(String::from).collect())
            .collect();
        ProcessSet::from_labels(ids, seqs, times).unwrap()
    }

    #[test]
    fn sub_seqs_preserves_order_and_recomputes_vocab() {
        let p = set(vec![vec!["a", "b"], vec!["c"], vec!["d"]], None);
        let q = p.sub_seqs(&[2, 0]).unwrap();
        assert_eq!(q.ids(), ["p2", "p0"]);
        assert_eq!(q.vocab(), ["a", "b", "d"]);
        let r = p.sub_seqs(&[0, 2]).unwrap();
        assert_eq!(r.ids(), ["p0", "p2"]);
    }

    #[test]
    fn sub_seqs_full_range_is_identity() {
        let p = set(vec![vec!["a", "b"], vec!["c"]], Some(vec![vec![0.0, 1.0], vec![2.0]]));
        let q = p.sub_seqs(&[0, 1]).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn sub_seqs_rejects_duplicates_and_out_of_range() {
        let p = set(vec![vec!["a"], vec!["b"]], None);
        assert!(matches!(p.sub_seqs(&[0, 0]), Err(Error::DuplicateIndex(0))));
        assert!(matches!(
            p.sub_seqs(&[5]),
            Err(Error::IndexOutOfRange { index: 5, n: 2 })
        ));
    }

    #[test]
    fn remove_repeat_keeps_first_timestamp() {
        // run of three identical actions collapses to the first one
        let p = set(
            vec![vec!["x", "r", "r", "r", "y"]],
            Some(vec![vec![0.0, 112.9, 116.5, 117.8, 120.0]]),
        );
        let q = p.remove_repeat();
        assert_eq!(q.labels_of(0), ["x", "r", "y"]);
        assert_eq!(q.times(0).unwrap(), [0.0, 112.9, 120.0]);
    }

    #[test]
    fn remove_repeat_identity_without_runs_and_idempotent() {
        let p = set(vec![vec!["a", "b", "a"]], None);
        assert_eq!(p.remove_repeat(), p);
        let q = set(vec![vec!["a", "a", "a", "a"]], None);
        let r = q.remove_repeat();
        assert_eq!(r.labels_of(0), ["a"]);
        assert_eq!(r.remove_repeat(), r);
    }

    #[test]
    fn remove_action_drops_empty_processes() {
        let p = set(vec![vec!["a", "b"], vec!["b", "b"]], None);
        let (q, dropped) = p.remove_action(&["b".to_string()]);
        assert_eq!(dropped, 1);
        assert_eq!(q.n(), 1);
        assert_eq!(q.labels_of(0), ["a"]);
        assert_eq!(q.vocab(), ["a"]);
    }

    #[test]
    fn remove_action_empty_targets_is_identity() {
        let p = set(vec![vec!["a", "b"]], Some(vec![vec![0.0, 1.0]]));
        let (q, dropped) = p.remove_action(&[]);
        assert_eq!(dropped, 0);
        assert_eq!(q, p);
    }

    #[test]
    fn remove_action_full_vocab_empties_the_set() {
        let p = set(vec![vec!["a"], vec!["b"]], None);
        let (q, dropped) = p.remove_action(&["a".to_string(), "b".to_string()]);
        assert_eq!(dropped, 2);
        assert!(q.is_empty());
    }

    #[test]
    fn remove_action_removes_timestamps_too() {
        let p = set(
            vec![vec!["a", "z", "b"]],
            Some(vec![vec![1.0, 2.0, 3.0]]),
        );
        let (q, _) = p.remove_action(&["z".to_string()]);
        assert_eq!(q.labels_of(0), ["a", "b"]);
        assert_eq!(q.times(0).unwrap(), [1.0, 3.0]);
    }

    #[test]
    fn replace_action_updates_vocab() {
        let p = set(vec![vec!["reset", "go"]], Some(vec![vec![0.0, 5.0]]));
        let q = p.replace_action("reset", "RESET");
        assert_eq!(q.labels_of(0), ["RESET", "go"]);
        assert_eq!(q.vocab(), ["RESET", "go"]);
        assert_eq!(q.times(0).unwrap(), [0.0, 5.0]);
    }

    #[test]
    fn replace_action_identity_cases() {
        let p = set(vec![vec!["a", "b"]], None);
        assert_eq!(p.replace_action("a", "a"), p);
        assert_eq!(p.replace_action("zzz", "q"), p);
    }

    #[test]
    fn combine_actions_keeps_first_timestamp() {
        let p = set(
            vec![vec!["s", "u", "v", "t"]],
            Some(vec![vec![0.0, 50.5, 61.9, 70.0]]),
        );
        let q = p
            .combine_actions(&["u".to_string(), "v".to_string()], "UV")
            .unwrap();
        assert_eq!(q.labels_of(0), ["s", "UV", "t"]);
        assert_eq!(q.times(0).unwrap(), [0.0, 50.5, 70.0]);
    }

    #[test]
    fn combine_actions_single_pattern_equals_replace() {
        let p = set(vec![vec!["a", "b", "a"]], None);
        let q = p.combine_actions(&["a".to_string()], "A").unwrap();
        assert_eq!(q, p.replace_action("a", "A"));
    }

    #[test]
    fn combine_actions_scans_left_to_right_without_overlap() {
        // (a, a, a) with pattern (a, a): first two fuse, third survives
        let p = set(vec![vec!["a", "a", "a"]], None);
        let q = p
            .combine_actions(&["a".to_string(), "a".to_string()], "aa")
            .unwrap();
        assert_eq!(q.labels_of(0), ["aa", "a"]);
    }

    #[test]
    fn combine_actions_empty_pattern_errors() {
        let p = set(vec![vec!["a"]], None);
        assert!(matches!(p.combine_actions(&[], "x"), Err(Error::EmptyPattern)));
    }
}
