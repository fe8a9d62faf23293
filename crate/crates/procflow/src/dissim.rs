//! Pairwise dissimilarities between response processes.
//!
//! The optimal symbol similarity (OSS) measure pairs identical actions across
//! two sequences so that total positional displacement is minimized (sorted
//! occurrence positions paired in order achieve this), and charges one unit
//! for every occurrence left unmatched. The time-weighted variant mixes the
//! positional displacement with the displacement of normalized timestamps.


use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ProcessSet;

/// Which dissimilarity produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    OssAction,
    OssBoth { w_time: f64 },
    /// Matrix supplied from outside; entries are not constrained to [0, 1].
    External,
}

impl Measure {
    pub fn tag(&self) -> &'static str {
        match self {
            Measure::OssAction => "oss_action",
            Measure::OssBoth { .. } => "oss_both",
            Measure::External => "external",
        }
    }
}

/// Dense symmetric matrix of pairwise dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    measure: Measure,
    data: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Wrap row-major `data`, checking symmetry, zero diagonal, and
    /// finiteness (and the [0, 1] range for OSS measures).
    pub fn new(n: usize, measure: Measure, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n} x {n} matrix",
                data.len()
            )));
        }
        let m = DissimilarityMatrix { n, measure, data };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bounded = !matches!(self.measure, Measure::External);
        for i in 0..self.n {
            let dii = self.get(i, i);
            if dii.abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({i}, {i}) = {dii} is not zero"
                )));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if !d.is_finite() {
                    return Err(Error::NonFinite(format!("dissimilarity ({i}, {j})")));
                }
                if d < 0.0 || (bounded && d > 1.0 + 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "dissimilarity ({i}, {j}) = {d} out of range"
                    )));
                }
                let dt = self.get(j, i);
                if (d - dt).abs() > 1e-12 * d.abs().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric entries ({i}, {j}): {d} vs {dt}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Entries squared, row-major (used by the double-centering step).
    pub fn squared(&self) -> Vec<f64> {
        self.data.iter().map(|d| d * d).collect()
    }

    /// Reorder objects by `perm` (new index i holds old object perm[i]).
    pub fn permuted(&self, perm: &[usize]) -> DissimilarityMatrix {
        let n = self.n;
        assert_eq!(perm.len(), n);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        DissimilarityMatrix {
            n,
            measure: self.measure,
            data,
        }
    }

    /// Submatrix over `indices` in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> DissimilarityMatrix {
        let m = indices.len();
        let mut data = vec![0.0; m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                data[a * m + b] = self.get(i, j);
            }
        }
        DissimilarityMatrix {
            n: m,
            measure: self.measure,
            data,
        }
    }
}

/// Occurrence positions (1-based, ascending) of every action in a sequence,
/// grouped by action code in ascending code order. The fixed order keeps
/// summation over shared actions identical for (i, j) and (j, i) and across
/// runs, so the measure is bitwise symmetric and reproducible.
fn positions(seq: &[u32]) -> Vec<(u32, Vec<usize>)> {
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by_key(|&l| (seq[l], l));
    let mut out: Vec<(u32, Vec<usize>)> = Vec::new();
    for l in order {
        match out.last_mut() {
            Some((a, pos)) if *a == seq[l] => pos.push(l + 1),
            _ => out.push((seq[l], vec![l + 1])),
        }
    }
    out
}

/// Minimum total cost of matching every entry of `small` (ascending) to a
/// distinct entry of `big` (ascending) without crossing: matched big
/// indices increase with the small index. For ascending position lists and
/// displacement costs this monotone optimum equals the unrestricted
/// optimal assignment, and for equal lengths it is the k-th-with-k-th
/// pairing.
fn monotone_match_cost(
    small: &[usize],
    big: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> f64 {
    let (m, n) = (small.len(), big.len());
    debug_assert!(0 < m && m <= n);
    // row[j]: best cost of matching the first i smalls into the first j bigs.
    let mut row = vec![0.0; n + 1];
    for i in 1..=m {
        let mut next = vec![f64::INFINITY; n + 1];
        for j in i..=n - (m - i) {
            let paired = row[j - 1] + cost(small[i - 1], big[j - 1]);
            next[j] = paired.min(next[j - 1]);
        }
        row = next;
    }
    row[n]
}

/// Ascending-code merge of two position tables, yielding the shared actions'
/// position lists.
fn shared_actions<'a>(
    pos_i: &'a [(u32, Vec<usize>)],
    pos_j: &'a [(u32, Vec<usize>)],
) -> impl Iterator<Item = (&'a [usize], &'a [usize])> {
    let (mut x, mut y) = (0, 0);
    std::iter::from_fn(move || {
        while x < pos_i.len() && y < pos_j.len() {
            match pos_i[x].0.cmp(&pos_j[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    let item = (pos_i[x].1.as_slice(), pos_j[y].1.as_slice());
                    x += 1;
                    y += 1;
                    return Some(item);
                }
            }
        }
        None
    })
}

fn check_pair(p: &ProcessSet, i: usize, j: usize) -> Result<()> {
    let n = p.n();
    for &k in &[i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
    }
    Ok(())
}

/// Optimal symbol similarity between the action sequences of processes `i`
/// and `j`.
///
/// For each action present in both sequences, the sorted occurrence
/// positions are matched by the displacement-minimizing order-preserving
/// pairing (k-th smallest with k-th smallest when the occurrence counts
/// agree); a matched pair at positions p and q costs
/// `|p - q| / max(L_i, L_j)`. Every unmatched occurrence costs 1. The total
/// is divided by `L_i + L_j`, giving a value in [0, 1].
pub fn oss_action(p: &ProcessSet, i: usize, j: usize) -> Result<f64> {
    check_pair(p, i, j)?;
    let (si, sj) = (p.actions(i), p.actions(j));
    let (li, lj) = (si.len(), sj.len());
    let denom_pos = li.max(lj) as f64;
    let pos_i = positions(si);
    let pos_j = positions(sj);
    let mut matched_cost = 0.0;
    let mut n_matched = 0usize;
    for (pi, pj) in shared_actions(&pos_i, &pos_j) {
        let (small, big) = if pi.len() <= pj.len() { (pi, pj) } else { (pj, pi) };
        matched_cost += monotone_match_cost(small, big, |p, q| {
            (p as f64 - q as f64).abs() / denom_pos
        });
        n_matched += small.len();
    }
    let unmatched = (li + lj - 2 * n_matched) as f64;
    Ok((matched_cost + unmatched) / (li + lj) as f64)
}

/// Time-weighted OSS between processes `i` and `j`.
///
/// Matched pairs cost
/// `(1 - w_time) * |p - q| / max(L_i, L_j) + w_time * |t_p / T_i - t_q / T_j|`
/// where `T` is a process's final timestamp; unmatched occurrences still cost
/// 1, and the same normalization applies. The per-action matching minimizes
/// the combined matched cost, so `w_time = 0` reduces exactly to
/// [`oss_action`].
pub fn oss_both(p: &ProcessSet, i: usize, j: usize, w_time: f64) -> Result<f64> {
    check_pair(p, i, j)?;
    if !(0.0..=1.0).contains(&w_time) {
        return Err(Error::InvalidArgument(format!(
            "w_time = {w_time} outside [0, 1]"
        )));
    }
    if !p.has_times() {
        return Err(Error::TimesAbsent);
    }
    let (si, sj) = (p.actions(i), p.actions(j));
    let (ti, tj) = (p.times(i).unwrap(), p.times(j).unwrap());
    let (li, lj) = (si.len(), sj.len());
    let total_i = *ti.last().unwrap();
    let total_j = *tj.last().unwrap();
    if total_i <= 0.0 {
        return Err(Error::ZeroTotalTime(i));
    }
    if total_j <= 0.0 {
        return Err(Error::ZeroTotalTime(j));
    }
    let denom_pos = li.max(lj) as f64;
    let pos_i = positions(si);
    let pos_j = positions(sj);
    let mut matched_cost = 0.0;
    let mut n_matched = 0usize;
    for (pi, pj) in shared_actions(&pos_i, &pos_j) {
        let swap = pi.len() > pj.len();
        let (small, big) = if swap { (pj, pi) } else { (pi, pj) };
        let (t_s, tot_s, t_b, tot_b) = if swap {
            (tj, total_j, ti, total_i)
        } else {
            (ti, total_i, tj, total_j)
        };
        matched_cost += monotone_match_cost(small, big, |p, q| {
            let pos_part = (p as f64 - q as f64).abs() / denom_pos;
            let time_part = (t_s[p - 1] / tot_s - t_b[q - 1] / tot_b).abs();
            (1.0 - w_time) * pos_part + w_time * time_part
        });
        n_matched += small.len();
    }
    let unmatched = (li + lj - 2 * n_matched) as f64;
    Ok((matched_cost + unmatched) / (li + lj) as f64)
}

fn measure_value(p: &ProcessSet, measure: Measure, i: usize, j: usize) -> Result<f64> {
    match measure {
        Measure::OssAction => oss_action(p, i, j),
        Measure::OssBoth { w_time } => oss_both(p, i, j, w_time),
        Measure::External => Err(Error::InvalidArgument(
            "external measure cannot be computed from processes".into(),
        )),
    }
}

/// Compute the full symmetric dissimilarity matrix, in parallel over pairs.
/// The result is identical to sequential elementwise computation.
pub fn dissimilarity_matrix(p: &ProcessSet, measure: Measure) -> Result<DissimilarityMatrix> {
    let n = p.n();
    if matches!(measure, Measure::OssBoth { .. }) && !p.has_times() {
        return Err(Error::TimesAbsent);
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| measure_value(p, measure, i, j))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DissimilarityMatrix::new(n, measure, data)
}

/// Sequential twin of [`dissimilarity_matrix`], kept for determinism checks.
pub fn dissimilarity_matrix_sequential(
    p: &ProcessSet,
    measure: Measure,
) -> Result<DissimilarityMatrix> {
    let n = p.n();
    if matches!(measure, Measure::OssBoth { .. }) && !p.has_times() {
        return Err(Error::TimesAbsent);
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = measure_value(p, measure, i, j)?;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DissimilarityMatrix::new(n, measure, data)
}

/// Compute only the requested pairs (for the subset-anchored MDS path).
pub fn dissimilarity_pairs(
    p: &ProcessSet,
    measure: Measure,
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(i, j)| {
            if i == j {
                Ok(0.0)
            } else {
                measure_value(p, measure, i, j)
            }
        })
        .collect()
}
