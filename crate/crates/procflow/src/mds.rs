//! Latent feature extraction from a dissimilarity matrix by multidimensional
//! scaling.
//!
//! The classical path double-centers the squared dissimilarities and reads
//! coordinates off the top eigenpairs. The large-n path embeds a seeded
//! anchor subset classically and places every remaining object by minimizing
//! its squared stress against the anchors with BFGS, so only O(mn)
//! dissimilarities are ever requested. K is selected by k-fold
//! cross-validation on held-out placement stress.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dissim::{self, DissimilarityMatrix, Measure};
use crate::error::{Error, Result};
use crate::model::ProcessSet;
use crate::optim::{self, BfgsOptions};
use crate::rng;

/// Sample size at or below which method `auto` picks the classical path.
pub const AUTO_THRESHOLD: usize = 2000;

/// Dense n x K feature matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    k: usize,
    names: Vec<String>,
    data: Vec<f64>,
    pca_applied: bool,
}

impl FeatureMatrix {
    /// Wrap row-major data with default column names V1..VK.
    pub fn from_raw(n: usize, k: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * k, "feature data must be n x k");
        let names = (1..=k).map(|j| format!("V{}", j)).collect();
        FeatureMatrix {
            n,
            k,
            names,
            data,
            pca_applied: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn pca_applied(&self) -> bool {
        self.pca_applied
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    /// Euclidean distance between rows `i` and `j`.
    pub fn row_distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Check finiteness, and for rotated matrices column centering and
    /// mutual orthogonality (off-diagonal Gram entries within 1e-8 relative
    /// to the largest diagonal entry).
    pub fn validate(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature entry ({}, {})",
                pos / self.k,
                pos % self.k
            )));
        }
        if !self.pca_applied || self.n == 0 || self.k == 0 {
            return Ok(());
        }
        let mut gram = vec![0.0; self.k * self.k];
        let mut means = vec![0.0; self.k];
        for i in 0..self.n {
            for j in 0..self.k {
                means[j] += self.get(i, j);
            }
        }
        for m in &mut means {
            *m /= self.n as f64;
        }
        for i in 0..self.n {
            for a in 0..self.k {
                for b in a..self.k {
                    gram[a * self.k + b] += self.get(i, a) * self.get(i, b);
                }
            }
        }
        let scale = (0..self.k)
            .map(|a| gram[a * self.k + a])
            .fold(0.0f64, f64::max)
            .max(1e-300);
        for (j, m) in means.iter().enumerate() {
            if m.abs() > 1e-8 * scale.sqrt().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "rotated feature column {} not centered (mean {})",
                    j, m
                )));
            }
        }
        for a in 0..self.k {
            for b in a + 1..self.k {
                if gram[a * self.k + b].abs() > 1e-8 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "rotated feature columns {} and {} not orthogonal",
                        a, b
                    )));
                }
            }
        }
        Ok(())
    }

    /// Replace features by their mean-centered principal-component scores.
    /// Centering plus rotation, so pairwise row distances are unchanged;
    /// columns are renamed PC1..PCK in decreasing-variance order.
    pub fn pca_rotate(&self) -> FeatureMatrix {
        let (n, k) = (self.n, self.k);
        let mut centered = self.data.clone();
        for j in 0..k {
            let mean = (0..n).map(|i| self.get(i, j)).sum::<f64>() / n.max(1) as f64;
            for i in 0..n {
                centered[i * k + j] -= mean;
            }
        }
        let names: Vec<String> = (1..=k).map(|j| format!("PC{}", j)).collect();
        if n < 2 || k == 0 {
            return FeatureMatrix {
                n,
                k,
                names,
                data: centered,
                pca_applied: true,
            };
        }
        let xc = DMatrix::from_row_slice(n, k, &centered);
        let cov = xc.transpose() * &xc / (n as f64 - 1.0);
        let (_, vecs) = sorted_symmetric_eigen(cov);
        let mut scores = (&xc * &vecs).transpose().as_slice().to_vec();
        // transpose() view above is column-major of the transpose, i.e.
        // row-major of the scores
        for j in 0..k {
            fix_column_sign(&mut scores, n, k, j);
        }
        FeatureMatrix {
            n,
            k,
            names,
            data: scores,
            pca_applied: true,
        }
    }
}

/// Eigendecomposition of a symmetric matrix with eigenpairs sorted by
/// decreasing eigenvalue. Returns (eigenvalues, eigenvector columns).
fn sorted_symmetric_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let se = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Make the largest-magnitude entry of column `j` positive (first such entry
/// on exact ties), in place on row-major n x k data.
fn fix_column_sign(data: &mut [f64], n: usize, k: usize, j: usize) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for i in 0..n {
        let a = data[i * k + j].abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if data[best * k + j] < 0.0 {
        for i in 0..n {
            data[i * k + j] = -data[i * k + j];
        }
    }
}

/// Classical scaling: coordinates sqrt(lambda_r) * v_r from the top K
/// eigenpairs of the double-centered squared-dissimilarity matrix.
/// Nonpositive eigenvalues among the top K give zero columns (with a
/// warning); each column's sign makes its largest-magnitude entry positive.
pub fn mds_classical(d: &DissimilarityMatrix, k: usize) -> Result<FeatureMatrix> {
    let n = d.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "K = {} must satisfy 1 <= K < n = {}",
            k, n
        )));
    }
    d.validate()?;
    let d2 = d.squared();
    // b_ij = -1/2 (d2_ij - rowmean_i - rowmean_j + grandmean)
    let mut rowmean = vec![0.0; n];
    for i in 0..n {
        rowmean[i] = d2[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
    }
    let grand = rowmean.iter().sum::<f64>() / n as f64;
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (d2[i * n + j] - rowmean[i] - rowmean[j] + grand);
        }
    }
    let (vals, vecs) = sorted_symmetric_eigen(b);
    let mut data = vec![0.0; n * k];
    let mut n_nonpos = 0usize;
    for r in 0..k {
        if vals[r] <= 0.0 {
            n_nonpos += 1;
            continue;
        }
        let s = vals[r].sqrt();
        for i in 0..n {
            data[i * k + r] = s * vecs[(i, r)];
        }
        fix_column_sign(&mut data, n, k, r);
    }
    if n_nonpos > 0 {
        log::warn!(
            "{} of the top {} eigenvalues are nonpositive; those feature columns are zero",
            n_nonpos,
            k
        );
    }
    Ok(FeatureMatrix::from_raw(n, k, data))
}

/// Sum over object pairs i < j of squared stress
/// `(d_ij - ||theta_i - theta_j||)^2`.
pub fn embedding_stress(d: &DissimilarityMatrix, theta: &FeatureMatrix) -> f64 {
    let n = d.n();
    assert_eq!(theta.n(), n);
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = d.get(i, j) - theta.row_distance(i, j);
            total += r * r;
        }
    }
    total
}

/// Squared stress of one point against a set of anchors, with its gradient.
///
/// `theta` has K entries, `anchors` is row-major m x K, `dists` holds the m
/// target dissimilarities. The objective is sum_j (d_j - ||theta - a_j||)^2;
/// at a coincidence point (theta equal to an anchor) the nondifferentiable
/// term contributes subgradient zero.
pub fn placement_value_grad(
    theta: &[f64],
    anchors: &[f64],
    dists: &[f64],
    grad: &mut [f64],
) -> f64 {
    let k = theta.len();
    let m = dists.len();
    debug_assert_eq!(anchors.len(), m * k);
    debug_assert_eq!(grad.len(), k);
    grad.fill(0.0);
    let mut value = 0.0;
    let mut diff = vec![0.0; k];
    for j in 0..m {
        let a = &anchors[j * k..(j + 1) * k];
        let mut r2 = 0.0;
        for c in 0..k {
            diff[c] = theta[c] - a[c];
            r2 += diff[c] * diff[c];
        }
        let r = r2.sqrt();
        let resid = dists[j] - r;
        value += resid * resid;
        if r > 0.0 {
            let scale = -2.0 * resid / r;
            for c in 0..k {
                grad[c] += scale * diff[c];
            }
        }
    }
    value
}

/// Place one point against anchors by BFGS from `n_starts` random starts
/// drawn uniformly in the anchors' bounding box (widened by 10%), keeping
/// the lowest objective. Returns the point and its objective value.
pub fn place_point(
    anchors: &[f64],
    dists: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
    n_starts: usize,
) -> (Vec<f64>, f64) {
    let m = dists.len();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for j in 0..m {
        for c in 0..k {
            let v = anchors[j * k + c];
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    let opts = BfgsOptions::default();
    let mut best_x = vec![0.0; k];
    let mut best_f = f64::INFINITY;
    let mut start = vec![0.0; k];
    for _ in 0..n_starts {
        for c in 0..k {
            let margin = 0.1 * (hi[c] - lo[c]) + 1e-6;
            start[c] = rng.gen_range(lo[c] - margin..hi[c] + margin);
        }
        let out = optim::minimize(
            |x, g| placement_value_grad(x, anchors, dists, g),
            &start,
            &opts,
        );
        if out.value.is_finite() && out.value < best_f {
            best_f = out.value;
            best_x = out.x;
        }
    }
    if !best_f.is_finite() {
        // Every start failed; fall back to the box center.
        for c in 0..k {
            best_x[c] = 0.5 * (lo[c] + hi[c]);
        }
        let mut g = vec![0.0; k];
        best_f = placement_value_grad(&best_x, anchors, dists, &mut g);
        log::warn!("all placement starts failed; using bounding-box center");
    }
    (best_x, best_f)
}

/// Source of dissimilarities for feature extraction: a process set with a
/// measure (pairs computed on demand) or a precomputed matrix.
pub enum MdsInput<'a> {
    Processes {
        set: &'a ProcessSet,
        measure: Measure,
    },
    Matrix(&'a DissimilarityMatrix),
}

impl MdsInput<'_> {
    pub fn n(&self) -> usize {
        match self {
            MdsInput::Processes { set, .. } => set.n(),
            MdsInput::Matrix(d) => d.n(),
        }
    }

    /// Full matrix; computed for process input.
    pub fn full_matrix(&self) -> Result<DissimilarityMatrix> {
        match self {
            MdsInput::Processes { set, measure } => dissim::dissimilarity_matrix(set, *measure),
            MdsInput::Matrix(d) => Ok((*d).clone()),
        }
    }

    /// Square submatrix over `indices`.
    fn submatrix(&self, indices: &[usize]) -> Result<DissimilarityMatrix> {
        match self {
            MdsInput::Matrix(d) => Ok(d.submatrix(indices)),
            MdsInput::Processes { set, measure } => {
                let m = indices.len();
                let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
                for a in 0..m {
                    for b in a + 1..m {
                        pairs.push((indices[a], indices[b]));
                    }
                }
                let vals = dissim::dissimilarity_pairs(set, *measure, &pairs)?;
                let mut data = vec![0.0; m * m];
                let mut it = vals.into_iter();
                for a in 0..m {
                    for b in a + 1..m {
                        let v = it.next().unwrap();
                        data[a * m + b] = v;
                        data[b * m + a] = v;
                    }
                }
                DissimilarityMatrix::new(m, *measure, data)
            }
        }
    }

    /// Dissimilarities from object `i` to each of `targets`.
    fn to_targets(&self, i: usize, targets: &[usize]) -> Result<Vec<f64>> {
        match self {
            MdsInput::Matrix(d) => Ok(targets.iter().map(|&j| d.get(i, j)).collect()),
            MdsInput::Processes { set, measure } => {
                let pairs: Vec<(usize, usize)> = targets.iter().map(|&j| (i, j)).collect();
                dissim::dissimilarity_pairs(set, *measure, &pairs)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdsMethod {
    Small,
    Large,
    Auto,
}

/// Settings for feature extraction.
#[derive(Debug, Clone)]
pub struct MdsConfig {
    pub k: usize,
    pub method: MdsMethod,
    /// Anchor subset size for the large path.
    pub subset_size: usize,
    /// Placement sweeps over the non-anchor objects; passes after the first
    /// restart BFGS from the current position instead of random starts.
    pub refine_passes: usize,
    pub seed: u64,
    pub pca: bool,
}

impl MdsConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        MdsConfig {
            k,
            method: MdsMethod::Auto,
            subset_size: 100,
            refine_passes: 1,
            seed,
            pca: true,
        }
    }
}

pub struct MdsResult {
    pub theta: FeatureMatrix,
    /// Total squared stress: all pairs for the classical path, placement
    /// objectives summed over non-anchor objects for the large path.
    pub loss: f64,
    pub dist: Option<DissimilarityMatrix>,
}

const N_PLACEMENT_STARTS: usize = 5;

/// RNG stream offsets: 0 draws the anchor subset, 1 + i places object i.
fn placement_rng(seed: u64, i: usize) -> ChaCha8Rng {
    rng::stream(seed, 1 + i as u64)
}

/// Anchor-subset scaling for large n: classical MDS on a seeded m-subset,
/// then independent BFGS placement of every other object against the
/// anchors. Returns features and the summed placement objective.
pub fn mds_large(input: &MdsInput, cfg: &MdsConfig) -> Result<(FeatureMatrix, f64)> {
    let n = input.n();
    let (k, m) = (cfg.k, cfg.subset_size.min(n));
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "K = {} must satisfy 1 <= K < n = {}",
            k, n
        )));
    }
    if m < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "subset size {} must be at least K + 2 = {}",
            m,
            k + 2
        )));
    }
    let mut omega = rand::seq::index::sample(&mut rng::stream(cfg.seed, 0), n, m).into_vec();
    omega.sort_unstable();
    let d_sub = input.submatrix(&omega)?;
    let anchors = mds_classical(&d_sub, k)?;
    let is_anchor = {
        let mut mask = vec![false; n];
        for &j in &omega {
            mask[j] = true;
        }
        mask
    };
    let mut data = vec![0.0; n * k];
    for (a, &j) in omega.iter().enumerate() {
        data[j * k..(j + 1) * k].copy_from_slice(anchors.row(a));
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_anchor[i]).collect();
    let placed: Vec<(usize, Vec<f64>, f64)> = free
        .par_iter()
        .map(|&i| {
            let dists = input.to_targets(i, &omega)?;
            let mut r = placement_rng(cfg.seed, i);
            let (mut x, mut f) =
                place_point(anchors.data(), &dists, k, &mut r, N_PLACEMENT_STARTS);
            for _ in 1..cfg.refine_passes.max(1) {
                let out = optim::minimize(
                    |t, g| placement_value_grad(t, anchors.data(), &dists, g),
                    &x,
                    &BfgsOptions::default(),
                );
                if out.value.is_finite() && out.value < f {
                    f = out.value;
                    x = out.x;
                }
            }
            Ok((i, x, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    for (i, x, f) in placed {
        data[i * k..(i + 1) * k].copy_from_slice(&x);
        loss += f;
    }
    Ok((FeatureMatrix::from_raw(n, k, data), loss))
}

/// Extract K-dimensional features, dispatching on `cfg.method` (auto picks
/// the classical path iff n <= [`AUTO_THRESHOLD`]). With `cfg.pca` the
/// features are replaced by their principal-component scores; the reported
/// loss is computed before rotation, which preserves it. `return_dist`
/// additionally returns the full dissimilarity matrix.
pub fn seq2feature_mds(input: &MdsInput, cfg: &MdsConfig, return_dist: bool) -> Result<MdsResult> {
    let n = input.n();
    let small = match cfg.method {
        MdsMethod::Small => true,
        MdsMethod::Large => false,
        MdsMethod::Auto => n <= AUTO_THRESHOLD,
    };
    let (theta, loss, dist) = if small {
        let d = input.full_matrix()?;
        let theta = mds_classical(&d, cfg.k)?;
        let loss = embedding_stress(&d, &theta);
        (theta, loss, Some(d))
    } else if return_dist {
        // Compute the matrix once and serve the large path from it.
        let d = input.full_matrix()?;
        let matrix_input = MdsInput::Matrix(&d);
        let (theta, loss) = mds_large(&matrix_input, cfg)?;
        (theta, loss, Some(d))
    } else {
        let (theta, loss) = mds_large(input, cfg)?;
        (theta, loss, None)
    };
    let theta = if cfg.pca { theta.pca_rotate() } else { theta };
    theta.validate()?;
    Ok(MdsResult {
        theta,
        loss,
        dist: if return_dist { dist } else { None },
    })
}

pub struct KSelection {
    pub k: usize,
    pub k_cand: Vec<usize>,
    pub cv_loss: Vec<f64>,
    pub dist: Option<DissimilarityMatrix>,
}

/// Select K by k-fold cross-validation: per fold, anchors come from
/// classical MDS on the training objects; each held-out object is placed
/// against the anchors; the fold loss is the mean squared stress over
/// held-out-to-training pairs. Candidates whose loss is within the
/// numerical-convergence floor of the best are tied; ties pick the
/// smaller K.
pub fn choose_k_mds(
    input: &MdsInput,
    k_cand: &[usize],
    n_fold: usize,
    seed: u64,
    return_dist: bool,
) -> Result<KSelection> {
    let n = input.n();
    if k_cand.is_empty() {
        return Err(Error::InvalidArgument("empty K candidate list".into()));
    }
    if n_fold < 2 || n_fold > n {
        return Err(Error::InvalidArgument(format!(
            "n_fold = {} must be in 2..=n = {}",
            n_fold, n
        )));
    }
    let k_max = *k_cand.iter().max().unwrap();
    let k_min = *k_cand.iter().min().unwrap();
    if k_min == 0 {
        return Err(Error::InvalidArgument("K candidates must be >= 1".into()));
    }
    // Every training fold must keep more objects than the largest K.
    let min_train = n - (n + n_fold - 1) / n_fold;
    if k_max >= min_train {
        return Err(Error::InvalidArgument(format!(
            "K = {} too large for {}-fold training sets of {}",
            k_max, n_fold, min_train
        )));
    }
    let d = input.full_matrix()?;

    let mut perm: Vec<usize> = (0..n).collect();
    {
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng::stream(seed, 0));
    }
    let n_k = k_cand.len();
    let mut cv_loss = vec![0.0; n_k];
    for fold in 0..n_fold {
        let test: Vec<usize> = perm
            .iter()
            .enumerate()
            .filter(|(p, _)| p % n_fold == fold)
            .map(|(_, &i)| i)
            .collect();
        let train: Vec<usize> = perm
            .iter()
            .enumerate()
            .filter(|(p, _)| p % n_fold != fold)
            .map(|(_, &i)| i)
            .collect();
        let d_train = d.submatrix(&train);
        let anchors_full = mds_classical(&d_train, k_max)?;
        // Features for smaller K are the leading K columns: the
        // eigendecomposition and per-column sign fixing do not depend on K.
        let fold_losses: Vec<Vec<f64>> = test
            .par_iter()
            .map(|&i| {
                let dists: Vec<f64> = train.iter().map(|&j| d.get(i, j)).collect();
                let mut per_k = vec![0.0; n_k];
                for (ki, &k) in k_cand.iter().enumerate() {
                    let mut sub = Vec::with_capacity(train.len() * k);
                    for a in 0..train.len() {
                        sub.extend_from_slice(&anchors_full.row(a)[..k]);
                    }
                    let mut r = rng::stream(seed, 1 + ((fold * n + i) * n_k + ki) as u64);
                    let (_, f) = place_point(&sub, &dists, k, &mut r, N_PLACEMENT_STARTS);
                    per_k[ki] = f / train.len() as f64;
                }
                per_k
            })
            .collect();
        for per_k in fold_losses {
            for (ki, v) in per_k.into_iter().enumerate() {
                cv_loss[ki] += v / test.len() as f64 / n_fold as f64;
            }
        }
    }
    // Losses at the numerical-convergence floor are indistinguishable: when
    // the held-out distances are exactly embeddable, BFGS stops at
    // machine-precision stress whose trailing digits are noise. Candidates
    // within the floor of the best tie, and ties go to the smallest K.
    let scale = {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += d.get(i, j);
                }
            }
        }
        s / (n * (n - 1)) as f64
    };
    let floor = (1e-6 * scale).powi(2);
    let best_raw = cv_loss.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut best = 0usize;
    let mut found = false;
    for (ki, &loss) in cv_loss.iter().enumerate() {
        if loss <= best_raw + floor && (!found || k_cand[ki] < k_cand[best]) {
            best = ki;
            found = true;
        }
    }
    Ok(KSelection {
        k: k_cand[best],
        k_cand: k_cand.to_vec(),
        cv_loss,
        dist: if return_dist { Some(d) } else { None },
    })
}
