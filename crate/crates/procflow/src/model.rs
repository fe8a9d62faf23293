//! The process data model.
//!
//! A response process is a pair of aligned sequences: the actions a respondent
//! took while working on an item, and (optionally) the elapsed time at which
//! each action occurred. A [`ProcessSet`] holds a collection of such processes
//! with an interned action vocabulary.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An ordered collection of identified response processes.
///
/// Values are immutable after construction; manipulation operations return new
/// sets. The vocabulary is the sorted set of distinct action labels occurring
/// in the sequences, and action sequences store indices into it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSet {
    ids: Vec<String>,
    vocab: Vec<String>,
    actions: Vec<Vec<u32>>,
    times: Option<Vec<Vec<f64>>>,
}

impl ProcessSet {
    /// Build a set from label sequences. The vocabulary is computed from the
    /// labels actually present and sorted lexicographically.
    pub fn from_labels(
        ids: Vec<String>,
        seqs: Vec<Vec<String>>,
        times: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let mut vocab: Vec<String> = seqs.iter().flatten().cloned().collect();
        vocab.sort_unstable();
        vocab.dedup();
        let index: HashMap<&str, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i as u32))
            .collect();
        let actions = seqs
            .iter()
            .map(|s| s.iter().map(|a| index[a.as_str()]).collect())
            .collect();
        let set = ProcessSet {
            ids,
            vocab,
            actions,
            times,
        };
        set.validate()?;
        Ok(set)
    }

    /// Build a set from pre-indexed sequences. `vocab` must be sorted and
    /// deduplicated, and every entry must be referenced.
    pub fn from_indexed(
        ids: Vec<String>,
        vocab: Vec<String>,
        actions: Vec<Vec<u32>>,
        times: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let set = ProcessSet {
            ids,
            vocab,
            actions,
            times,
        };
        set.validate()?;
        Ok(set)
    }

    /// Check every structural invariant; returns the first violation found.
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if self.actions.len() != n {
            return Err(Error::InvalidProcessSet(format!(
                "{} ids but {} action sequences",
                n,
                self.actions.len()
            )));
        }
        let mut seen = HashMap::with_capacity(n);
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(j) = seen.insert(id.as_str(), i) {
                return Err(Error::InvalidProcessSet(format!(
                    "duplicate id {:?} at positions {} and {}",
                    id, j, i
                )));
            }
        }
        for w in self.vocab.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidProcessSet(format!(
                    "vocabulary not sorted/distinct near {:?}",
                    w[0]
                )));
            }
        }
        let nv = self.vocab.len() as u32;
        let mut used = vec![false; self.vocab.len()];
        for (i, s) in self.actions.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidProcessSet(format!(
                    "process {} has length 0",
                    i
                )));
            }
            for &a in s {
                if a >= nv {
                    return Err(Error::InvalidProcessSet(format!(
                        "process {} references action index {} >= {}",
                        i, a, nv
                    )));
                }
                used[a as usize] = true;
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::InvalidProcessSet(format!(
                "vocabulary entry {:?} is never referenced",
                self.vocab[k]
            )));
        }
        if let Some(times) = &self.times {
            if times.len() != n {
                return Err(Error::InvalidProcessSet(format!(
                    "{} ids but {} time sequences",
                    n,
                    times.len()
                )));
            }
            for (i, (s, t)) in self.actions.iter().zip(times).enumerate() {
                if s.len() != t.len() {
                    return Err(Error::InvalidProcessSet(format!(
                        "process {}: {} actions but {} timestamps",
                        i,
                        s.len(),
                        t.len()
                    )));
                }
                let mut prev = 0.0;
                for (l, &x) in t.iter().enumerate() {
                    if !x.is_finite() || x < 0.0 {
                        return Err(Error::InvalidProcessSet(format!(
                            "process {}: timestamp {} at step {} is not a nonnegative real",
                            i, x, l
                        )));
                    }
                    if x < prev {
                        return Err(Error::InvalidProcessSet(format!(
                            "process {}: timestamps decrease at step {} ({} < {})",
                            i,
                            l + 1,
                            x,
                            prev
                        )));
                    }
                    prev = x;
                }
            }
        }
        Ok(())
    }

    /// Number of processes.
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Sorted vocabulary of distinct action labels.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn n_actions(&self) -> usize {
        self.vocab.len()
    }

    /// Index sequence of process `i`.
    pub fn actions(&self, i: usize) -> &[u32] {
        &self.actions[i]
    }

    pub fn action_seqs(&self) -> &[Vec<u32>] {
        &self.actions
    }

    pub fn has_times(&self) -> bool {
        self.times.is_some()
    }

    /// Timestamp sequence of process `i`, if times are present.
    pub fn times(&self, i: usize) -> Option<&[f64]> {
        self.times.as_ref().map(|t| t[i].as_slice())
    }

    pub fn time_seqs(&self) -> Option<&[Vec<f64>]> {
        self.times.as_deref()
    }

    pub fn len_of(&self, i: usize) -> usize {
        self.actions[i].len()
    }

    /// Label view of process `i`.
    pub fn labels_of(&self, i: usize) -> Vec<&str> {
        self.actions[i]
            .iter()
            .map(|&a| self.vocab[a as usize].as_str())
            .collect()
    }

    pub(crate) fn label(&self, index: u32) -> &str {
        &self.vocab[index as usize]
    }
}

/// Which processes to show when rendering a set.
#[derive(Debug, Clone)]
pub enum Selection {
    /// The first `k` processes (clamped to the set size).
    First(usize),
    /// Explicit process indices.
    Indices(Vec<usize>),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::First(5)
    }
}

const RENDER_WIDTH: usize = 78;

impl ProcessSet {
    /// Render selected processes as step tables: a header row `Step k`, an
    /// `Event` row, and a `Time` row (one decimal place) when timestamps are
    /// present. Long processes wrap into chunks.
    pub fn render(&self, selection: &Selection) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "ProcessSet of {} processes", self.n());
        let indices: Vec<usize> = match selection {
            Selection::First(k) => {
                let k = (*k).min(self.n());
                let _ = writeln!(out, "\nFirst {} processes:", k);
                (0..k).collect()
            }
            Selection::Indices(v) => {
                for &i in v {
                    if i >= self.n() {
                        return Err(Error::IndexOutOfRange {
                            index: i,
                            n: self.n(),
                        });
                    }
                }
                v.clone()
            }
        };
        for &i in &indices {
            let _ = writeln!(out, "\n{}", self.ids[i]);
            out.push_str(&self.render_one(i));
        }
        Ok(out)
    }

    fn render_one(&self, i: usize) -> String {
        let labels = self.labels_of(i);
        let times = self.times(i);
        let headers: Vec<String> = (1..=labels.len()).map(|k| format!("Step {}", k)).collect();
        let time_strs: Option<Vec<String>> =
            times.map(|t| t.iter().map(|x| format!("{:.1}", x)).collect());
        let widths: Vec<usize> = (0..labels.len())
            .map(|l| {
                let mut w = headers[l].len().max(labels[l].len());
                if let Some(ts) = &time_strs {
                    w = w.max(ts[l].len());
                }
                w
            })
            .collect();

        // row labels pad the header row so columns line up
        let event_tag = "Event ";
        let time_tag = "Time  ";
        let lead = event_tag.len();

        let mut out = String::new();
        let mut start = 0;
        while start < labels.len() {
            // fit as many columns as the line width allows, at least one
            let mut end = start;
            let mut line = lead;
            while end < labels.len() {
                let add = widths[end] + 1;
                if end > start && line + add > RENDER_WIDTH {
                    break;
                }
                line += add;
                end += 1;
            }
            let mut hrow = " ".repeat(lead);
            let mut erow = event_tag.to_string();
            let mut trow = time_tag.to_string();
            for l in start..end {
                let w = widths[l];
                let _ = write!(hrow, "{:<w$} ", headers[l]);
                let _ = write!(erow, "{:<w$} ", labels[l]);
                if let Some(ts) = &time_strs {
                    let _ = write!(trow, "{:>w$} ", ts[l]);
                }
            }
            out.push_str(hrow.trim_end());
            out.push('\n');
            out.push_str(erow.trim_end());
            out.push('\n');
            if time_strs.is_some() {
                out.push_str(trow.trim_end());
                out.push('\n');
            }
            start = end;
        }
        out
    }
}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.render(&Selection::default()) {
            Ok(s) => f.write_str(&s),
            Err(_) => unreachable!("default selection cannot be out of range"),
        }
    }
}
