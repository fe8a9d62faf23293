//! Acceptance gates. Each test exercises one end-to-end guarantee at a
//! fixed tolerance and prints a single ACCEPTANCE line; a missed bound or
//! a blown time budget fails the test.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use procflow::dissim::{dissimilarity_matrix, oss_action, oss_both, DissimilarityMatrix, Measure};
use procflow::gen::{seq_gen2, MarkovSpec, TimeModel};
use procflow::io::{read_seqs, write_seqs, CsvStyle, CsvStyleSpec};
use procflow::logit::fit_logistic;
use procflow::mds::{
    choose_k_mds, mds_classical, mds_large, placement_value_grad, seq2feature_mds, FeatureMatrix,
    MdsConfig, MdsInput, MdsMethod,
};
use procflow::nn::gradcheck::max_relative_grad_error;
use procflow::nn::{CellKind, OptimizerKind, TrainConfig};
use procflow::rng;
use procflow::seqae::{
    init_ae_params, seq2feature_seq2seq, AeModel, AeType, SeqAEArchitecture,
};
use procflow::seqm::{
    init_seqm_params, seqm_fit, seqm_predict, seqm_task, ResponseType, SeqmArchitecture,
};
use procflow::ProcessSet;

fn criterion(num: u32, what: &str, budget: Option<Duration>, body: impl FnOnce() -> Result<(), String>) {
    let t0 = Instant::now();
    let outcome = body();
    let dt = t0.elapsed();
    match outcome {
        Ok(()) => {
            if let Some(b) = budget {
                if dt > b {
                    println!(
                        "ACCEPTANCE {num} ({what}): FAIL (took {:.1}s, budget {:.0}s)",
                        dt.as_secs_f64(),
                        b.as_secs_f64()
                    );
                    panic!("criterion {num} exceeded its time budget");
                }
            }
            println!("ACCEPTANCE {num} ({what}): PASS ({:.1}s)", dt.as_secs_f64());
        }
        Err(e) => {
            println!("ACCEPTANCE {num} ({what}): FAIL ({e})");
            panic!("criterion {num} failed: {e}");
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Euclidean distance matrix over `n` points in R^k (row-major coords).
fn euclid_dissim(pts: &[f64], n: usize, k: usize) -> DissimilarityMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = (0..k)
                .map(|c| (pts[i * k + c] - pts[j * k + c]).powi(2))
                .sum::<f64>()
                .sqrt();
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DissimilarityMatrix::new(n, Measure::External, data).unwrap()
}

fn max_residual(d: &DissimilarityMatrix, theta: &FeatureMatrix) -> f64 {
    let n = d.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((d.get(i, j) - theta.row_distance(i, j)).abs());
        }
    }
    worst
}

#[test]
fn criterion_01_io_round_trip() {
    criterion(1, "I/O round trip", Some(Duration::from_secs(5)), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let f_single = dir.path().join("single.csv");
        let f_multi = dir.path().join("multi.csv");
        let single = CsvStyleSpec::new(CsvStyle::Single);
        let multi = CsvStyleSpec::new(CsvStyle::Multiple);
        let mut r = rng::stream(0xAC01, 0);
        for case in 0..200 {
            let n = r.gen_range(1..=50);
            let n_act = r.gen_range(1..=8);
            let vocab: Vec<String> = (0..n_act)
                .map(|a| {
                    if case % 3 == 0 {
                        format!("op {a}")
                    } else {
                        format!("op{a}")
                    }
                })
                .collect();
            let with_times = case % 2 == 0;
            let mut ids = Vec::with_capacity(n);
            let mut seqs = Vec::with_capacity(n);
            let mut times = Vec::with_capacity(n);
            for i in 0..n {
                ids.push(format!("p{i}"));
                let len = r.gen_range(1..=12);
                seqs.push(
                    (0..len)
                        .map(|_| vocab[r.gen_range(0..n_act)].clone())
                        .collect::<Vec<_>>(),
                );
                if with_times {
                    let mut t = 0.0;
                    times.push(
                        (0..len)
                            .map(|_| {
                                t += r.gen_range(0..8) as f64 * 0.25;
                                t
                            })
                            .collect::<Vec<_>>(),
                    );
                }
            }
            let p = ProcessSet::from_labels(ids, seqs, with_times.then_some(times))
                .map_err(|e| format!("case {case}: {e}"))?;
            write_seqs(&p, &f_single, &single).map_err(|e| format!("case {case}: {e}"))?;
            write_seqs(&p, &f_multi, &multi).map_err(|e| format!("case {case}: {e}"))?;
            let from_single =
                read_seqs(&f_single, &single).map_err(|e| format!("case {case}: {e}"))?;
            let from_multi =
                read_seqs(&f_multi, &multi).map_err(|e| format!("case {case}: {e}"))?;
            check(from_single == p, || {
                format!("case {case}: single-style round trip differs")
            })?;
            check(from_multi == p, || {
                format!("case {case}: multiple-style round trip differs")
            })?;
            check(from_single == from_multi, || {
                format!("case {case}: cross-style reads differ")
            })?;
        }
        Ok(())
    });
}

/// Minimum total |p - q| over injective assignments of `small` into `big`.
fn assign_min(small: &[i64], big: &[i64], used: &mut [bool]) -> f64 {
    let Some((&first, rest)) = small.split_first() else {
        return 0.0;
    };
    let mut best = f64::INFINITY;
    for j in 0..big.len() {
        if !used[j] {
            used[j] = true;
            let c = (first - big[j]).abs() as f64 + assign_min(rest, big, used);
            used[j] = false;
            best = best.min(c);
        }
    }
    best
}

/// Optimal-assignment OSS by exhaustive search over per-symbol matchings.
fn oracle_oss(pos_a: &[Vec<i64>], pos_b: &[Vec<i64>], la: usize, lb: usize) -> f64 {
    let lmax = la.max(lb) as f64;
    let mut matched_cost = 0.0;
    let mut n_matched = 0usize;
    for s in 0..pos_a.len() {
        let (small, big) = if pos_a[s].len() <= pos_b[s].len() {
            (&pos_a[s], &pos_b[s])
        } else {
            (&pos_b[s], &pos_a[s])
        };
        if small.is_empty() {
            continue;
        }
        n_matched += 2 * small.len();
        let mut used = vec![false; big.len()];
        matched_cost += assign_min(small, big, &mut used);
    }
    let unmatched = (la + lb - n_matched) as f64;
    (matched_cost / lmax + unmatched) / (la + lb) as f64
}

#[test]
fn criterion_02_oss_properties_and_oracle() {
    criterion(2, "OSS properties and oracle", Some(Duration::from_secs(30)), || {
        let mut r = rng::stream(0xAC02, 0);
        let vocab = ["w", "x", "y", "z"];
        let mut ids = Vec::new();
        let mut seqs = Vec::new();
        let mut times = Vec::new();
        for i in 0..60 {
            ids.push(format!("r{i}"));
            let len = r.gen_range(1..=10);
            seqs.push(
                (0..len)
                    .map(|_| vocab[r.gen_range(0..4)].to_string())
                    .collect::<Vec<_>>(),
            );
            let mut t = 0.0;
            times.push(
                (0..len)
                    .map(|_| {
                        t += r.gen_range(0.1..2.0);
                        t
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let p = ProcessSet::from_labels(ids, seqs, Some(times)).map_err(|e| e.to_string())?;
        for i in 0..p.n() {
            let da = oss_action(&p, i, i).map_err(|e| e.to_string())?;
            let db = oss_both(&p, i, i, 0.5).map_err(|e| e.to_string())?;
            check(da == 0.0 && db == 0.0, || {
                format!("diagonal ({i}, {i}) not exactly zero: {da}, {db}")
            })?;
        }
        for _ in 0..1000 {
            let i = r.gen_range(0..p.n());
            let j = r.gen_range(0..p.n());
            for (tag, dij, dji) in [
                (
                    "action",
                    oss_action(&p, i, j).map_err(|e| e.to_string())?,
                    oss_action(&p, j, i).map_err(|e| e.to_string())?,
                ),
                (
                    "both",
                    oss_both(&p, i, j, 0.5).map_err(|e| e.to_string())?,
                    oss_both(&p, j, i, 0.5).map_err(|e| e.to_string())?,
                ),
            ] {
                check(dij == dji, || {
                    format!("{tag} asymmetric at ({i}, {j}): {dij} vs {dji}")
                })?;
                check((0.0..=1.0).contains(&dij), || {
                    format!("{tag} ({i}, {j}) = {dij} outside [0, 1]")
                })?;
            }
        }

        // Every sequence of length 1..=6 over a 3-action alphabet.
        let letters = ["A", "B", "C"];
        let mut codes: Vec<Vec<usize>> = Vec::new();
        for len in 1..=6usize {
            for mut code in 0..3usize.pow(len as u32) {
                let mut seq = Vec::with_capacity(len);
                for _ in 0..len {
                    seq.push(code % 3);
                    code /= 3;
                }
                codes.push(seq);
            }
        }
        let n = codes.len();
        check(n == 1092, || format!("enumeration produced {n} sequences"))?;
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let label_seqs = codes
            .iter()
            .map(|seq| seq.iter().map(|&c| letters[c].to_string()).collect())
            .collect();
        let all = ProcessSet::from_labels(ids, label_seqs, None).map_err(|e| e.to_string())?;
        let d = dissimilarity_matrix(&all, Measure::OssAction).map_err(|e| e.to_string())?;
        let positions: Vec<Vec<Vec<i64>>> = codes
            .iter()
            .map(|seq| {
                let mut pos = vec![Vec::new(); 3];
                for (q, &c) in seq.iter().enumerate() {
                    pos[c].push(q as i64);
                }
                pos
            })
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let want = oracle_oss(&positions[i], &positions[j], codes[i].len(), codes[j].len());
                let got = d.get(i, j);
                check((got - want).abs() <= 1e-12, || {
                    format!(
                        "pair ({i}, {j}): sorted pairing {got} vs oracle {want} for {:?} / {:?}",
                        codes[i], codes[j]
                    )
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_03_classical_mds_exactness() {
    criterion(3, "classical MDS exactness", Some(Duration::from_secs(10)), || {
        let mut r = rng::stream(0xAC03, 0);
        let n = 50;
        let pts: Vec<f64> = (0..n * 3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let d = euclid_dissim(&pts, n, 3);
        let theta = mds_classical(&d, 3).map_err(|e| e.to_string())?;
        let small = max_residual(&d, &theta);
        check(small < 1e-8, || {
            format!("classical path residual {small:.3e} >= 1e-8")
        })?;
        let cfg = MdsConfig {
            k: 3,
            method: MdsMethod::Large,
            subset_size: 20,
            refine_passes: 1,
            seed: 0xAC03,
            pca: true,
        };
        let (theta_l, _) = mds_large(&MdsInput::Matrix(&d), &cfg).map_err(|e| e.to_string())?;
        let large = max_residual(&d, &theta_l);
        check(large < 1e-3, || {
            format!("anchored path residual {large:.3e} >= 1e-3 with m = 20")
        })?;
        Ok(())
    });
}

#[test]
fn criterion_04_placement_gradient() {
    criterion(4, "placement gradient vs finite differences", None, || {
        let mut r = rng::stream(0xAC04, 0);
        let mut done = 0;
        while done < 100 {
            let k = r.gen_range(1..=4);
            let m = r.gen_range(2..=8);
            let theta: Vec<f64> = (0..k).map(|_| r.gen_range(-2.0..2.0)).collect();
            let anchors: Vec<f64> = (0..m * k).map(|_| r.gen_range(-2.0..2.0)).collect();
            let dists: Vec<f64> = (0..m).map(|_| r.gen_range(0.1..3.0)).collect();
            let too_close = (0..m).any(|j| {
                (0..k)
                    .map(|c| (theta[c] - anchors[j * k + c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    < 1e-2
            });
            if too_close {
                continue;
            }
            let mut g = vec![0.0; k];
            placement_value_grad(&theta, &anchors, &dists, &mut g);
            let h = 1e-6;
            let mut scratch = vec![0.0; k];
            let mut fd = vec![0.0; k];
            for c in 0..k {
                let mut plus = theta.clone();
                plus[c] += h;
                let fp = placement_value_grad(&plus, &anchors, &dists, &mut scratch);
                let mut minus = theta.clone();
                minus[c] -= h;
                let fm = placement_value_grad(&minus, &anchors, &dists, &mut scratch);
                fd[c] = (fp - fm) / (2.0 * h);
            }
            let diff = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = g
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(fd.iter().map(|v| v * v).sum::<f64>().sqrt())
                .max(1e-12);
            let rel = diff / scale;
            check(rel < 1e-5, || {
                format!("config {done} (k = {k}, m = {m}): relative error {rel:.3e} >= 1e-5")
            })?;
            done += 1;
        }
        Ok(())
    });
}

/// Small corpus with strictly increasing times for gradient checks.
fn gradcheck_corpus(n: usize) -> ProcessSet {
    let vocab = ["x", "y", "z"];
    let mut r = rng::stream(0xAC05, 0);
    let mut ids = Vec::new();
    let mut seqs = Vec::new();
    let mut times = Vec::new();
    for i in 0..n {
        ids.push(format!("g{i}"));
        let len = r.gen_range(2..=5);
        seqs.push(
            (0..len)
                .map(|_| vocab[r.gen_range(0..3)].to_string())
                .collect::<Vec<_>>(),
        );
        let mut t = 0.0;
        times.push(
            (0..len)
                .map(|_| {
                    t += r.gen_range(0.3..1.7);
                    t
                })
                .collect::<Vec<_>>(),
        );
    }
    ProcessSet::from_labels(ids, seqs, Some(times)).unwrap()
}

#[test]
fn criterion_05_neural_gradients() {
    criterion(5, "neural gradients", Some(Duration::from_secs(120)), || {
        let p = gradcheck_corpus(6);
        let batch: Vec<usize> = (0..p.n()).collect();
        for cell in [CellKind::Gru, CellKind::Lstm] {
            for ae_type in [AeType::Action, AeType::Time, AeType::Both] {
                let arch = SeqAEArchitecture::new(ae_type, 3, cell);
                let model = AeModel::over_all(&p, &arch).map_err(|e| e.to_string())?;
                let params = init_ae_params(&arch, p.n_actions(), &mut rng::root(71));
                let err = max_relative_grad_error(&model, &params, &batch, 1e-4)
                    .map_err(|e| e.to_string())?;
                check(err < 1e-4, || {
                    format!("autoencoder {ae_type:?} {cell:?}: max relative error {err:.3e}")
                })?;
            }
        }

        let q = gradcheck_corpus(5);
        let response = [1.0, 0.0, 1.0, 1.0, 0.0];
        let mut r = rng::stream(0xAC05, 1);
        let covariates: Vec<f64> = (0..q.n() * 2).map(|_| r.gen_range(-1.0..1.0)).collect();
        let batch: Vec<usize> = (0..q.n()).collect();
        for cell in [CellKind::Gru, CellKind::Lstm] {
            for (with_cov, with_time) in
                [(false, false), (true, false), (false, true), (true, true)]
            {
                let mut arch = SeqmArchitecture::new(ResponseType::Binary, 3, 3, cell);
                arch.include_time = with_time;
                if with_cov {
                    arch.n_covariates = 2;
                    arch.k_hidden = vec![2];
                }
                let cov = with_cov.then_some(covariates.as_slice());
                let task =
                    seqm_task(&q, &response, cov, &arch).map_err(|e| e.to_string())?;
                let params = init_seqm_params(&arch, q.n_actions(), &mut rng::root(72));
                let err = max_relative_grad_error(&task, &params, &batch, 1e-4)
                    .map_err(|e| e.to_string())?;
                check(err < 1e-4, || {
                    format!(
                        "seqm {cell:?} covariates={with_cov} time={with_time}: \
                         max relative error {err:.3e}"
                    )
                })?;
            }
        }
        Ok(())
    });
}

/// Four-state chain entered at `s`, absorbed at `e`; rows sum to one.
fn cluster_spec(prefix: &str) -> MarkovSpec {
    let vocab: Vec<String> = ["s", "m1", "m2", "e"]
        .iter()
        .map(|v| format!("{prefix}{v}"))
        .collect();
    #[rustfmt::skip]
    let p = vec![
        0.0, 0.6, 0.4, 0.0,
        0.0, 0.25, 0.35, 0.4,
        0.0, 0.35, 0.25, 0.4,
        0.0, 0.0, 0.0, 1.0,
    ];
    MarkovSpec::new(vocab, p, 0, 3).unwrap()
}

#[test]
fn criterion_06_autoencoder_learning() {
    criterion(6, "autoencoder learning", Some(Duration::from_secs(300)), || {
        let a = seq_gen2(50, &cluster_spec("a_"), TimeModel::none(), 0xA6).map_err(|e| e.to_string())?;
        let b = seq_gen2(50, &cluster_spec("b_"), TimeModel::none(), 0xB6).map_err(|e| e.to_string())?;
        let mut ids = Vec::new();
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for (tag, sample, y) in [("a", &a.set, 0.0), ("b", &b.set, 1.0)] {
            for i in 0..sample.n() {
                ids.push(format!("{tag}{i}"));
                seqs.push(
                    sample
                        .labels_of(i)
                        .into_iter()
                        .map(str::to_string)
                        .collect::<Vec<_>>(),
                );
                labels.push(y);
            }
        }
        let p = ProcessSet::from_labels(ids, seqs, None).map_err(|e| e.to_string())?;
        let arch = SeqAEArchitecture::new(AeType::Action, 5, CellKind::Gru);
        let mut cfg = TrainConfig::new(OptimizerKind::Adam, 100, 0xAC06);
        cfg.step_size = 0.01;
        let fit = seq2feature_seq2seq(&p, &arch, &cfg).map_err(|e| e.to_string())?;
        check(fit.diverged_at.is_none(), || {
            format!("training diverged at epoch {:?}", fit.diverged_at)
        })?;
        let first = fit.valid_loss[0];
        let best = fit.valid_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        let drop = (first - best) / first;
        check(drop >= 0.20, || {
            format!("validation loss dropped {:.1}% (from {first:.4} to {best:.4})", drop * 100.0)
        })?;

        let n = p.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(0xAC06, 9));
        let n_test = n / 5;
        let test: Vec<usize> = order[..n_test].to_vec();
        let train: Vec<usize> = order[n_test..].to_vec();
        let fit_lr = fit_logistic(n, arch.k, fit.theta.data(), &labels, &train, &test)
            .map_err(|e| e.to_string())?;
        check(fit_lr.accuracy >= 0.9, || {
            format!("cluster separation accuracy {:.3} < 0.9", fit_lr.accuracy)
        })?;
        Ok(())
    });
}

#[test]
fn criterion_07_seqm_planted_signal() {
    criterion(7, "seqm planted signal", Some(Duration::from_secs(300)), || {
        let base = ["look", "move", "turn"];
        let mut r = rng::stream(0xAC07, 0);
        let n = 1000;
        let mut ids = Vec::new();
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            ids.push(format!("t{i}"));
            let len = r.gen_range(3..=8);
            let mut seq: Vec<String> = (0..len)
                .map(|_| base[r.gen_range(0..3)].to_string())
                .collect();
            let y = r.gen_bool(0.5);
            if y {
                seq.insert(r.gen_range(0..=len), "mark".to_string());
            }
            seqs.push(seq);
            labels.push(y as u8 as f64);
        }
        let p = ProcessSet::from_labels(ids, seqs, None).map_err(|e| e.to_string())?;

        // First 800 train (with an inner validation split), last 200 held out.
        let mut order: Vec<usize> = (0..800).collect();
        order.shuffle(&mut rng::stream(0xAC07, 1));
        let mut cfg = TrainConfig::new(OptimizerKind::Adam, 15, 0xAC07);
        cfg.batch_size = 32;
        cfg.valid_idx = order[..80].to_vec();
        cfg.train_idx = order[80..].to_vec();
        cfg.valid_idx.sort_unstable();
        cfg.train_idx.sort_unstable();
        let arch = SeqmArchitecture::new(ResponseType::Binary, 3, 4, CellKind::Gru);
        let model = seqm_fit(&p, &labels, None, &arch, &cfg).map_err(|e| e.to_string())?;
        let pred = seqm_predict(&model, &p, None).map_err(|e| e.to_string())?;

        let test = 800..1000;
        let n_pos = test.clone().filter(|&i| labels[i] == 1.0).count();
        let majority = (n_pos.max(200 - n_pos)) as f64 / 200.0;
        check(majority <= 0.6, || {
            format!("test labels unbalanced: majority baseline {majority:.3}")
        })?;
        let n_hit = test
            .clone()
            .filter(|&i| (pred[i] > 0.5) == (labels[i] == 1.0))
            .count();
        let acc = n_hit as f64 / 200.0;
        check(acc >= 0.95, || {
            format!("held-out accuracy {acc:.3} < 0.95 (majority baseline {majority:.3})")
        })?;
        Ok(())
    });
}

#[test]
fn criterion_08_dimension_recovery() {
    criterion(8, "dimension recovery", Some(Duration::from_secs(120)), || {
        let mut hits = 0;
        let mut picks = Vec::new();
        for seed in 0..10u64 {
            let mut r = rng::stream(0xAC08, seed);
            let n = 100;
            let pts: Vec<f64> = (0..n * 3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let d = euclid_dissim(&pts, n, 3);
            let sel = choose_k_mds(&MdsInput::Matrix(&d), &[1, 2, 3, 4, 5, 6], 5, seed, false)
                .map_err(|e| e.to_string())?;
            picks.push(sel.k);
            if sel.k == 3 || sel.k == 4 {
                hits += 1;
            }
        }
        check(hits >= 8, || {
            format!("selected K in {{3, 4}} for {hits}/10 seeds (picks {picks:?})")
        })?;
        Ok(())
    });
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_procflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`procflow {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Drop output-path lines; the rest of stdout must match byte for byte.
fn strip_paths(stdout: &str) -> String {
    stdout
        .lines()
        .filter(|l| !l.starts_with("out=") && !l.starts_with("model="))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_09_pipeline_determinism() {
    criterion(9, "pipeline determinism", None, || {
        let steps: Vec<Vec<&str>> = vec![
            vec![
                "gen", "--generator", "item", "--n", "40", "--c1", "3", "--c2", "3",
                "--p-continue", "0.5", "--seed", "11", "--out", "p.csv",
            ],
            vec![
                "ae", "--in", "p.csv", "--k", "3", "--epochs", "5", "--seed", "7", "--out",
                "f.csv", "--model-out", "ae.model",
            ],
            vec![
                "seqm-fit", "--in", "p.csv", "--response", "labels.csv", "--k-emb", "3",
                "--k-rnn", "3", "--epochs", "4", "--seed", "5", "--model-out", "m.model",
            ],
            vec!["seqm-predict", "--model", "m.model", "--in", "p.csv", "--out", "pred.csv"],
            vec![
                "mds", "--in", "p.csv", "--k", "2", "--method", "large", "--subset-size", "15",
                "--seed", "3", "--out", "mds.csv",
            ],
        ];
        let labels: String = std::iter::once("id,label".to_string())
            .chain((1..=40).map(|i| format!("{i},{}", i % 2)))
            .collect::<Vec<_>>()
            .join("\n");
        let mut transcripts = Vec::new();
        let mut artifacts: Vec<Vec<Vec<u8>>> = Vec::new();
        let files = ["p.csv", "f.csv", "ae.model", "m.model", "pred.csv", "mds.csv"];
        let dirs = [
            tempfile::tempdir().map_err(|e| e.to_string())?,
            tempfile::tempdir().map_err(|e| e.to_string())?,
        ];
        for dir in &dirs {
            std::fs::write(dir.path().join("labels.csv"), &labels).map_err(|e| e.to_string())?;
            let mut transcript = String::new();
            for step in &steps {
                transcript.push_str(&strip_paths(&run_cli(dir.path(), step)?));
                transcript.push('\n');
            }
            transcripts.push(transcript);
            let mut bytes = Vec::new();
            for f in files {
                bytes.push(std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?);
            }
            artifacts.push(bytes);
        }
        check(transcripts[0] == transcripts[1], || {
            "stdout transcripts differ between same-seed runs".to_string()
        })?;
        for (i, f) in files.iter().enumerate() {
            check(artifacts[0][i] == artifacts[1][i], || {
                format!("artifact {f} differs between same-seed runs")
            })?;
        }
        Ok(())
    });
}

#[test]
fn criterion_10_reference_data_pipeline() {
    let (Some(seq_path), Some(label_path)) = (
        std::env::var_os("PROCFLOW_CC_SEQS"),
        std::env::var_os("PROCFLOW_CC_LABELS"),
    ) else {
        println!(
            "ACCEPTANCE 10 (reference data pipeline): SKIPPED \
             (set PROCFLOW_CC_SEQS and PROCFLOW_CC_LABELS to run)"
        );
        return;
    };
    criterion(10, "reference data pipeline", None, || {
        let single = CsvStyleSpec::new(CsvStyle::Single);
        let multi = CsvStyleSpec::new(CsvStyle::Multiple);
        let raw = read_seqs(&seq_path, &single)
            .or_else(|_| read_seqs(&seq_path, &multi))
            .map_err(|e| format!("reading {seq_path:?}: {e}"))?;
        let p = raw.remove_repeat();

        let mut by_id = std::collections::HashMap::new();
        let mut rdr = csv::Reader::from_path(&label_path).map_err(|e| e.to_string())?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let id = rec.get(0).unwrap_or("").to_string();
            let y: f64 = rec
                .get(1)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| format!("label for {id}: {e}"))?;
            by_id.insert(id, y);
        }
        let labels: Vec<f64> = p
            .ids()
            .iter()
            .map(|id| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| format!("no label for id {id}"))
            })
            .collect::<Result<_, _>>()?;

        let input = MdsInput::Processes {
            set: &p,
            measure: Measure::OssAction,
        };
        let cfg = MdsConfig::new(60, 0xAC10);
        let res = seq2feature_mds(&input, &cfg, false).map_err(|e| e.to_string())?;

        let n = p.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(0xAC10, 1));
        let n_test = n / 5;
        let test: Vec<usize> = order[..n_test].to_vec();
        let train: Vec<usize> = order[n_test..].to_vec();
        let fit = fit_logistic(n, 60, res.theta.data(), &labels, &train, &test)
            .map_err(|e| e.to_string())?;
        check((fit.accuracy - 0.80).abs() <= 0.05, || {
            format!("held-out accuracy {:.4} outside 0.80 +/- 0.05", fit.accuracy)
        })?;
        Ok(())
    });
}
