//! One function per subcommand: resolve flags against the config file,
//! call into the library, print `key=value` results on stdout and tables
//! on stderr.

use crate::config::{self, Cfg};
use crate::ioutil::{align_rows, align_values, kv, kv_list, read_two_col, table, write_two_col};
use crate::{
    AeArchArgs, AeArgs, ChoosekAeArgs, ChoosekMdsArgs, CleanArgs, DistArgs, GenArgs, LogitArgs,
    MdsArgs, SeqmFitArgs, SeqmPredictArgs, StyleArgs, SummarizeArgs, TrainArgs,
};
use procflow::dissim::{self, DissimilarityMatrix, Measure};
use procflow::io::{self, CsvStyle, CsvStyleSpec};
use procflow::mds::{choose_k_mds, seq2feature_mds, MdsConfig, MdsInput, MdsMethod, AUTO_THRESHOLD};
use procflow::nn::{CellKind, OptimizerKind, TrainConfig};
use procflow::seqae::{choose_k_seq2seq, seq2feature_seq2seq, AeType, FeatureMethod, SeqAEArchitecture};
use procflow::seqm::{seqm_fit as fit_seqm, seqm_predict as predict_seqm, ResponseType, SeqmArchitecture};
use procflow::summary::FiveNumSummary;
use procflow::{gen as generate, logit as logistic, rng, Error, ProcessSet, Result};
use rand::seq::SliceRandom;
use std::path::PathBuf;

const STYLE_KEYS: &[&str] = &["style", "id-var", "action-var", "time-var", "step-sep"];
const TRAIN_KEYS: &[&str] = &["epochs", "batch", "optimizer", "step-size", "seed"];
const AE_ARCH_KEYS: &[&str] = &[
    "ae-type", "rnn-type", "method", "cumulative", "log", "w-action", "w-time",
];

fn declare(cfg: &mut Cfg, groups: &[&[&'static str]]) -> Result<()> {
    let mut all = Vec::new();
    for group in groups {
        all.extend_from_slice(group);
    }
    cfg.declare(&all)
}

fn style_spec(cfg: &mut Cfg, a: &StyleArgs) -> Result<CsvStyleSpec> {
    let style = match config::str_or(cfg, "style", a.style.clone(), "single").as_str() {
        "single" => CsvStyle::Single,
        "multiple" => CsvStyle::Multiple,
        other => {
            return Err(Error::InvalidArgument(format!(
                "--style: expected single or multiple, got {other:?}"
            )))
        }
    };
    let mut spec = CsvStyleSpec::new(style);
    if let Some(v) = config::raw(cfg, "id-var", a.id_var.clone()) {
        spec.id_var = v;
    }
    if let Some(v) = config::raw(cfg, "action-var", a.action_var.clone()) {
        spec.action_var = v;
    }
    if let Some(v) = config::raw(cfg, "time-var", a.time_var.clone()) {
        spec.time_var = (v != "none").then_some(v);
    }
    if let Some(v) = config::raw(cfg, "step-sep", a.step_sep.clone()) {
        let mut chars = v.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => spec.step_sep = c,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "--step-sep: expected a single character, got {v:?}"
                )))
            }
        }
    }
    Ok(spec)
}

fn path_req(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Result<PathBuf> {
    Ok(PathBuf::from(config::str_req(cfg, key, flag)?))
}

fn path_opt(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Option<PathBuf> {
    config::raw(cfg, key, flag).map(PathBuf::from)
}

/// The `action` / `both` choice shared by dist and the mds commands.
fn measure_spec(
    cfg: &mut Cfg,
    measure: Option<String>,
    w_time: Option<String>,
) -> Result<Measure> {
    let name = config::str_or(cfg, "measure", measure, "action");
    let w = config::num_opt::<f64>(cfg, "w-time", w_time)?;
    match name.as_str() {
        "action" => {
            if w.is_some() {
                return Err(Error::InvalidArgument(
                    "--w-time only applies to --measure both".into(),
                ));
            }
            Ok(Measure::OssAction)
        }
        "both" => Ok(Measure::OssBoth {
            w_time: w.unwrap_or(0.5),
        }),
        other => Err(Error::InvalidArgument(format!(
            "--measure: expected action or both, got {other:?}"
        ))),
    }
}

fn train_config(cfg: &mut Cfg, a: &TrainArgs) -> Result<TrainConfig> {
    let name = config::str_or(cfg, "optimizer", a.optimizer.clone(), "adam");
    let optimizer = OptimizerKind::parse(&name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "--optimizer: expected sgd, adam, adadelta, or rmsprop, got {name:?}"
        ))
    })?;
    let epochs = config::num_or(cfg, "epochs", a.epochs.clone(), 50usize)?;
    let seed = config::num_req::<u64>(cfg, "seed", a.seed.clone())?;
    let mut tc = TrainConfig::new(optimizer, epochs, seed);
    tc.batch_size = config::num_or(cfg, "batch", a.batch.clone(), tc.batch_size)?;
    if let Some(s) = config::num_opt::<f64>(cfg, "step-size", a.step_size.clone())? {
        tc.step_size = s;
    }
    Ok(tc)
}

fn cell_kind(cfg: &mut Cfg, flag: Option<String>) -> Result<CellKind> {
    let name = config::str_or(cfg, "rnn-type", flag, "lstm");
    CellKind::parse(&name).ok_or_else(|| {
        Error::InvalidArgument(format!("--rnn-type: expected gru or lstm, got {name:?}"))
    })
}

fn five_num(prefix: &str, s: &FiveNumSummary) {
    kv(&format!("{prefix}_min"), s.min);
    kv(&format!("{prefix}_q1"), s.q1);
    kv(&format!("{prefix}_median"), s.median);
    kv(&format!("{prefix}_q3"), s.q3);
    kv(&format!("{prefix}_max"), s.max);
    kv(&format!("{prefix}_mean"), s.mean);
}

pub fn summarize(cfg: &mut Cfg, a: SummarizeArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["in", "actions-out", "trans-out"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let actions_out = path_opt(cfg, "actions-out", a.actions_out);
    let trans_out = path_opt(cfg, "trans-out", a.trans_out);

    let p = io::read_seqs(&input, &spec)?;
    let s = procflow::summarize(&p)?;

    kv("n_seq", s.n_seq);
    kv("n_action", s.n_action);
    let lengths: Vec<f64> = s.seq_length.iter().map(|&l| l as f64).collect();
    five_num("length", &FiveNumSummary::of(&lengths));
    if let Some(t) = &s.total_time {
        five_num("total_time", t);
    }
    if let Some(t) = &s.mean_react_time {
        five_num("react_time", t);
    }

    let action_rows: Vec<Vec<String>> = (0..s.n_action)
        .map(|j| {
            vec![
                s.actions[j].clone(),
                s.action_freq[j].to_string(),
                s.action_seqfreq[j].to_string(),
            ]
        })
        .collect();
    table(&["action", "count", "seq_count"], &action_rows);

    let prob = s.trans_prob();
    if s.n_action <= 20 {
        eprintln!();
        let mut headers = vec!["from\\to"];
        headers.extend(s.actions.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..s.n_action)
            .map(|i| {
                let mut row = vec![s.actions[i].clone()];
                row.extend((0..s.n_action).map(|j| format!("{:.4}", prob[i][j])));
                row
            })
            .collect();
        table(&headers, &rows);
    } else {
        eprintln!("(transition matrix omitted: {} actions; use --trans-out)", s.n_action);
    }

    if let Some(path) = actions_out {
        let rows: Vec<(String, String)> = (0..s.n_action)
            .map(|j| {
                (
                    s.actions[j].clone(),
                    format!("{},{}", s.action_freq[j], s.action_seqfreq[j]),
                )
            })
            .collect();
        // write as three columns: action,count,seq_count
        let file = std::fs::File::create(&path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(["action", "count", "seq_count"])?;
        for (action, rest) in &rows {
            let mut rec = vec![action.clone()];
            rec.extend(rest.split(',').map(String::from));
            writer.write_record(&rec)?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        kv("actions_out", path.display());
    }
    if let Some(path) = trans_out {
        let flat: Vec<f64> = prob.iter().flatten().copied().collect();
        io::write_square_matrix(&path, &s.actions, &flat)?;
        kv("trans_out", path.display());
    }
    Ok(())
}

enum CleanOp {
    RemoveRepeat,
    RemoveAction(Vec<String>),
    Replace(String, String),
    Combine(Vec<String>, String),
}

fn parse_ops(text: &str) -> Result<Vec<CleanOp>> {
    let mut ops = Vec::new();
    for stmt in text.split(|c| c == ';' || c == '\n') {
        let stmt = stmt.trim();
        if stmt.is_empty() || stmt.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = stmt.split_whitespace().collect();
        let op = match tokens.as_slice() {
            ["remove_repeat"] => CleanOp::RemoveRepeat,
            ["remove_action", list] => {
                CleanOp::RemoveAction(list.split(',').map(String::from).collect())
            }
            ["replace", old, new] => CleanOp::Replace((*old).into(), (*new).into()),
            ["combine", list, new] => CleanOp::Combine(
                list.split(',').map(String::from).collect(),
                (*new).into(),
            ),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown cleaning operation {stmt:?}; expected remove_repeat, \
                     remove_action A,B, replace OLD NEW, or combine A,B NEW"
                )))
            }
        };
        ops.push(op);
    }
    Ok(ops)
}

fn total_events(p: &ProcessSet) -> usize {
    (0..p.n()).map(|i| p.len_of(i)).sum()
}

pub fn clean(cfg: &mut Cfg, a: CleanArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["in", "out", "ops", "script"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let out = path_req(cfg, "out", a.out)?;
    let inline = config::raw(cfg, "ops", a.ops);
    let script = path_opt(cfg, "script", a.script);

    let ops = match (inline, script) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either --ops or --script, not both".into(),
            ))
        }
        (Some(text), None) => parse_ops(&text)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_ops(&text)?
        }
        (None, None) => Vec::new(),
    };

    let mut p = io::read_seqs(&input, &spec)?;
    for op in &ops {
        let before = total_events(&p);
        match op {
            CleanOp::RemoveRepeat => {
                p = p.remove_repeat();
                eprintln!("remove_repeat: {} events dropped", before - total_events(&p));
            }
            CleanOp::RemoveAction(targets) => {
                let (next, removed) = p.remove_action(targets);
                p = next;
                eprintln!("remove_action: {removed} events dropped");
            }
            CleanOp::Replace(old, new) => {
                p = p.replace_action(old, new);
                eprintln!("replace: {old:?} -> {new:?}");
            }
            CleanOp::Combine(pattern, new) => {
                p = p.combine_actions(pattern, new)?;
                eprintln!(
                    "combine: {} -> {new:?}, {} events dropped",
                    pattern.join(","),
                    before - total_events(&p)
                );
            }
        }
        if p.is_empty() {
            return Err(Error::InvalidData(
                "cleaning removed every process".into(),
            ));
        }
    }

    io::write_seqs(&p, &out, &spec)?;
    kv("out", out.display());
    kv("n_seq", p.n());
    kv("n_action", p.n_actions());
    Ok(())
}

pub fn dist(cfg: &mut Cfg, a: DistArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["in", "out", "measure", "w-time"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let out = path_req(cfg, "out", a.out)?;
    let measure = measure_spec(cfg, a.measure, a.w_time)?;

    let p = io::read_seqs(&input, &spec)?;
    let d = dissim::dissimilarity_matrix(&p, measure)?;
    io::write_square_matrix(&out, p.ids(), d.data())?;
    kv("out", out.display());
    kv("n", d.n());
    kv("measure", measure.tag());
    Ok(())
}

/// Owned backing for an [`MdsInput`]: processes read from CSV or a
/// precomputed matrix.
enum DissimSource {
    Processes(ProcessSet, Measure),
    Matrix(Vec<String>, DissimilarityMatrix),
}

impl DissimSource {
    fn resolve(
        cfg: &mut Cfg,
        input: Option<String>,
        dist_in: Option<String>,
        measure: Option<String>,
        w_time: Option<String>,
        style: &StyleArgs,
    ) -> Result<DissimSource> {
        let spec = style_spec(cfg, style)?;
        let input = path_opt(cfg, "in", input);
        let dist_in = path_opt(cfg, "dist-in", dist_in);
        match (input, dist_in) {
            (Some(path), None) => {
                let measure = measure_spec(cfg, measure, w_time)?;
                Ok(DissimSource::Processes(
                    io::read_seqs(&path, &spec)?,
                    measure,
                ))
            }
            (None, Some(path)) => {
                if config::raw(cfg, "measure", measure).is_some()
                    || config::raw(cfg, "w-time", w_time).is_some()
                {
                    return Err(Error::InvalidArgument(
                        "--measure/--w-time do not apply to --dist-in".into(),
                    ));
                }
                let (ids, data) = io::read_square_matrix(&path)?;
                let d = DissimilarityMatrix::new(ids.len(), Measure::External, data)?;
                Ok(DissimSource::Matrix(ids, d))
            }
            _ => Err(Error::InvalidArgument(
                "give exactly one of --in or --dist-in".into(),
            )),
        }
    }

    fn ids(&self) -> &[String] {
        match self {
            DissimSource::Processes(p, _) => p.ids(),
            DissimSource::Matrix(ids, _) => ids,
        }
    }

    fn as_input(&self) -> MdsInput<'_> {
        match self {
            DissimSource::Processes(p, measure) => MdsInput::Processes {
                set: p,
                measure: *measure,
            },
            DissimSource::Matrix(_, d) => MdsInput::Matrix(d),
        }
    }
}

pub fn mds(cfg: &mut Cfg, a: MdsArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["in", "dist-in", "out", "k", "method", "subset-size", "pca", "measure", "w-time", "seed"]])?;
    let source = DissimSource::resolve(cfg, a.input, a.dist_in, a.measure, a.w_time, &a.style)?;
    let out = path_req(cfg, "out", a.out)?;
    let k = config::num_req::<usize>(cfg, "k", a.k)?;
    let seed = config::num_req::<u64>(cfg, "seed", a.seed)?;

    let mut mc = MdsConfig::new(k, seed);
    mc.method = match config::str_or(cfg, "method", a.method, "auto").as_str() {
        "auto" => MdsMethod::Auto,
        "small" => MdsMethod::Small,
        "large" => MdsMethod::Large,
        other => {
            return Err(Error::InvalidArgument(format!(
                "--method: expected small, large, or auto, got {other:?}"
            )))
        }
    };
    mc.subset_size = config::num_or(cfg, "subset-size", a.subset_size, mc.subset_size)?;
    mc.pca = config::bool_or(cfg, "pca", a.pca, true)?;

    let input = source.as_input();
    let res = seq2feature_mds(&input, &mc, false)?;
    io::write_features(&out, source.ids(), res.theta.names(), res.theta.data())?;

    let effective = match mc.method {
        MdsMethod::Small => "small",
        MdsMethod::Large => "large",
        MdsMethod::Auto if input.n() > AUTO_THRESHOLD => "large",
        MdsMethod::Auto => "small",
    };
    kv("out", out.display());
    kv("n", res.theta.n());
    kv("k", res.theta.k());
    kv("method", effective);
    kv("loss", res.loss);
    Ok(())
}

pub fn choosek_mds(cfg: &mut Cfg, a: ChoosekMdsArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["in", "dist-in", "k-cand", "folds", "measure", "w-time", "seed"]])?;
    let source = DissimSource::resolve(cfg, a.input, a.dist_in, a.measure, a.w_time, &a.style)?;
    let k_cand = config::num_list_req::<usize>(cfg, "k-cand", a.k_cand)?;
    let folds = config::num_or(cfg, "folds", a.folds, 5usize)?;
    let seed = config::num_req::<u64>(cfg, "seed", a.seed)?;

    let sel = choose_k_mds(&source.as_input(), &k_cand, folds, seed, false)?;

    let rows: Vec<Vec<String>> = sel
        .k_cand
        .iter()
        .zip(&sel.cv_loss)
        .map(|(k, loss)| vec![k.to_string(), format!("{loss:.6}")])
        .collect();
    table(&["K", "cv_loss"], &rows);

    kv("k", sel.k);
    kv_list("k_cand", &sel.k_cand);
    kv_list("cv_loss", &sel.cv_loss);
    Ok(())
}

fn ae_architecture(cfg: &mut Cfg, a: &AeArchArgs, k: usize) -> Result<SeqAEArchitecture> {
    let ae_type = AeType::parse(&config::str_or(cfg, "ae-type", a.ae_type.clone(), "action"))?;
    let rnn_type = cell_kind(cfg, a.rnn_type.clone())?;
    let mut arch = SeqAEArchitecture::new(ae_type, k, rnn_type);
    arch.method = FeatureMethod::parse(&config::str_or(cfg, "method", a.method.clone(), "last"))?;
    arch.cumulative = config::bool_or(cfg, "cumulative", a.cumulative.clone(), arch.cumulative)?;
    arch.log = config::bool_or(cfg, "log", a.log.clone(), arch.log)?;
    arch.weights = (
        config::num_or(cfg, "w-action", a.w_action.clone(), arch.weights.0)?,
        config::num_or(cfg, "w-time", a.w_time.clone(), arch.weights.1)?,
    );
    Ok(arch)
}

fn history_table(history: &[(f64, f64)]) {
    let rows: Vec<Vec<String>> = history
        .iter()
        .enumerate()
        .map(|(i, (tr, vl))| vec![(i + 1).to_string(), format!("{tr:.6}"), format!("{vl:.6}")])
        .collect();
    table(&["epoch", "train", "valid"], &rows);
}

pub fn ae(cfg: &mut Cfg, a: AeArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, TRAIN_KEYS, AE_ARCH_KEYS, &["in", "out", "model-out", "k", "pca"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let out = path_req(cfg, "out", a.out)?;
    let model_out = path_opt(cfg, "model-out", a.model_out);
    let k = config::num_req::<usize>(cfg, "k", a.k)?;
    let mut arch = ae_architecture(cfg, &a.arch, k)?;
    arch.pca = config::bool_or(cfg, "pca", a.pca, true)?;
    let tc = train_config(cfg, &a.train)?;

    let p = io::read_seqs(&input, &spec)?;
    let fit = seq2feature_seq2seq(&p, &arch, &tc)?;
    io::write_features(&out, p.ids(), fit.theta.names(), fit.theta.data())?;

    let history: Vec<(f64, f64)> = fit
        .train_loss
        .iter()
        .zip(&fit.valid_loss)
        .map(|(&tr, &vl)| (tr, vl))
        .collect();
    history_table(&history);

    kv("out", out.display());
    kv("n", fit.theta.n());
    kv("k", fit.theta.k());
    kv("best_epoch", fit.best_epoch);
    kv("train_loss", fit.train_loss[fit.best_epoch - 1]);
    kv("valid_loss", fit.valid_loss[fit.best_epoch - 1]);
    if let Some(epoch) = fit.diverged_at {
        kv("diverged_at", epoch);
    }
    if let Some(path) = model_out {
        let model = procflow::archive::SeqAEModel {
            arch,
            vocab: p.vocab().to_vec(),
            params: fit.params,
        };
        procflow::archive::ModelArchive::SeqAE(model).write(&path)?;
        kv("model", path.display());
    }
    Ok(())
}

pub fn choosek_ae(cfg: &mut Cfg, a: ChoosekAeArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, TRAIN_KEYS, AE_ARCH_KEYS, &["in", "k-cand", "folds"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let k_cand = config::num_list_req::<usize>(cfg, "k-cand", a.k_cand)?;
    let folds = config::num_or(cfg, "folds", a.folds, 5usize)?;
    let template = ae_architecture(cfg, &a.arch, 1)?;
    let tc = train_config(cfg, &a.train)?;

    let p = io::read_seqs(&input, &spec)?;
    let choice = choose_k_seq2seq(&p, &template, &k_cand, folds, &tc)?;

    let rows: Vec<Vec<String>> = choice
        .k_cand
        .iter()
        .zip(&choice.cv_loss)
        .map(|(k, loss)| vec![k.to_string(), format!("{loss:.6}")])
        .collect();
    table(&["K", "cv_loss"], &rows);

    kv("k", choice.k);
    kv_list("k_cand", &choice.k_cand);
    kv_list("cv_loss", &choice.cv_loss);
    Ok(())
}

pub fn seqm_fit(cfg: &mut Cfg, a: SeqmFitArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, TRAIN_KEYS, &["in", "response", "covariates", "model-out", "response-type", "k-emb", "k-rnn", "rnn-type", "include-time", "time-interval", "log-time", "hidden", "max-len"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let input = path_req(cfg, "in", a.input)?;
    let response_path = path_req(cfg, "response", a.response)?;
    let covariate_path = path_opt(cfg, "covariates", a.covariates);
    let model_out = path_req(cfg, "model-out", a.model_out)?;

    let p = io::read_seqs(&input, &spec)?;
    let response = align_values(p.ids(), read_two_col(&response_path)?, "response")?;
    let covariates = match &covariate_path {
        Some(path) => {
            let (ids, names, data) = io::read_features(path)?;
            Some((
                align_rows(p.ids(), &ids, &data, names.len(), "covariate")?,
                names.len(),
            ))
        }
        None => None,
    };

    let response_type = ResponseType::parse(&config::str_or(
        cfg,
        "response-type",
        a.response_type,
        "binary",
    ))?;
    let k_emb = config::num_or(cfg, "k-emb", a.k_emb, 5usize)?;
    let k_rnn = config::num_or(cfg, "k-rnn", a.k_rnn, 5usize)?;
    let rnn_type = cell_kind(cfg, a.rnn_type)?;
    let mut arch = SeqmArchitecture::new(response_type, k_emb, k_rnn, rnn_type);
    arch.include_time = config::bool_or(cfg, "include-time", a.include_time, arch.include_time)?;
    arch.time_interval =
        config::bool_or(cfg, "time-interval", a.time_interval, arch.time_interval)?;
    arch.log_time = config::bool_or(cfg, "log-time", a.log_time, arch.log_time)?;
    arch.k_hidden = config::num_list_or::<usize>(cfg, "hidden", a.hidden)?;
    arch.n_covariates = covariates.as_ref().map_or(0, |(_, k)| *k);
    if let Some(m) = config::num_opt::<usize>(cfg, "max-len", a.max_len)? {
        arch.max_len = m;
    }
    let tc = train_config(cfg, &a.train)?;

    let model = fit_seqm(
        &p,
        &response,
        covariates.as_ref().map(|(flat, _)| flat.as_slice()),
        &arch,
        &tc,
    )?;

    eprintln!("{}", model.structure);
    let history: Vec<(f64, f64)> = model.history.iter().map(|row| (row[0], row[1])).collect();
    history_table(&history);

    kv("best_epoch", model.best_epoch);
    kv("train_loss", model.history[model.best_epoch - 1][0]);
    kv("valid_loss", model.history[model.best_epoch - 1][1]);
    if let Some(epoch) = model.diverged_at {
        kv("diverged_at", epoch);
    }
    procflow::archive::ModelArchive::Seqm(model).write(&model_out)?;
    kv("model", model_out.display());
    Ok(())
}

pub fn seqm_predict(cfg: &mut Cfg, a: SeqmPredictArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["model", "in", "covariates", "out"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let model_path = path_req(cfg, "model", a.model)?;
    let input = path_req(cfg, "in", a.input)?;
    let covariate_path = path_opt(cfg, "covariates", a.covariates);
    let out = path_req(cfg, "out", a.out)?;

    let archive = procflow::archive::ModelArchive::read(&model_path)?;
    let procflow::archive::ModelArchive::Seqm(model) = archive else {
        return Err(Error::Archive(format!(
            "{} is not a seqm model archive",
            model_path.display()
        )));
    };

    let p = io::read_seqs(&input, &spec)?;
    let covariates = match &covariate_path {
        Some(path) => {
            let (ids, names, data) = io::read_features(path)?;
            Some(align_rows(p.ids(), &ids, &data, names.len(), "covariate")?)
        }
        None => None,
    };
    let preds = predict_seqm(&model, &p, covariates.as_deref())?;

    io::write_features(&out, p.ids(), &["prediction".to_string()], &preds)?;
    kv("out", out.display());
    kv("n", preds.len());
    kv("response_type", model.arch.response_type.tag());
    Ok(())
}

fn time_model(cfg: &mut Cfg, a: &GenArgs) -> Result<generate::TimeModel> {
    let name = config::str_or(cfg, "time-dist", a.time_dist.clone(), "exponential");
    let rate = config::num_opt::<f64>(cfg, "time-rate", a.time_rate.clone())?;
    let mu = config::num_opt::<f64>(cfg, "time-mu", a.time_mu.clone())?;
    let sigma = config::num_opt::<f64>(cfg, "time-sigma", a.time_sigma.clone())?;
    let value = config::num_opt::<f64>(cfg, "time-value", a.time_value.clone())?;

    let reject = |flag: &str, given: bool| {
        if given {
            Err(Error::InvalidArgument(format!(
                "--{flag} does not apply to --time-dist {name}"
            )))
        } else {
            Ok(())
        }
    };
    let dist = match name.as_str() {
        "none" => {
            reject("time-rate", rate.is_some())?;
            reject("time-mu", mu.is_some())?;
            reject("time-sigma", sigma.is_some())?;
            reject("time-value", value.is_some())?;
            return Ok(generate::TimeModel::none());
        }
        "exponential" => {
            reject("time-mu", mu.is_some())?;
            reject("time-sigma", sigma.is_some())?;
            reject("time-value", value.is_some())?;
            generate::TimeDist::Exponential {
                rate: rate.unwrap_or(1.0),
            }
        }
        "lognormal" => {
            reject("time-rate", rate.is_some())?;
            reject("time-value", value.is_some())?;
            generate::TimeDist::LogNormal {
                mu: mu.unwrap_or(0.0),
                sigma: sigma.unwrap_or(1.0),
            }
        }
        "constant" => {
            reject("time-rate", rate.is_some())?;
            reject("time-mu", mu.is_some())?;
            reject("time-sigma", sigma.is_some())?;
            generate::TimeDist::Constant {
                value: value.unwrap_or(1.0),
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "--time-dist: expected exponential, lognormal, constant, or none, got {other:?}"
            )))
        }
    };
    Ok(generate::TimeModel {
        dist,
        include_time: true,
    })
}

fn label_index(labels: &[String], label: &str, what: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::InvalidArgument(format!("{what} {label:?} is not in the vocabulary")))
}

pub fn gen(cfg: &mut Cfg, a: GenArgs) -> Result<()> {
    declare(cfg, &[STYLE_KEYS, &["generator", "n", "out", "seed", "c1", "c2", "p-continue", "spec", "start", "terminal", "vocab", "hidden-dim", "time-dist", "time-rate", "time-mu", "time-sigma", "time-value"]])?;
    let spec = style_spec(cfg, &a.style)?;
    let generator = config::str_or(cfg, "generator", a.generator.clone(), "item");
    let n = config::num_req::<usize>(cfg, "n", a.n.clone())?;
    let out = path_req(cfg, "out", a.out.clone())?;
    let seed = config::num_req::<u64>(cfg, "seed", a.seed.clone())?;
    let time = time_model(cfg, &a)?;

    let c1 = config::num_opt::<usize>(cfg, "c1", a.c1)?;
    let c2 = config::num_opt::<usize>(cfg, "c2", a.c2)?;
    let p_continue = config::num_opt::<f64>(cfg, "p-continue", a.p_continue)?;
    let spec_path = path_opt(cfg, "spec", a.spec);
    let start = config::raw(cfg, "start", a.start);
    let terminal = config::raw(cfg, "terminal", a.terminal);
    let vocab = config::raw(cfg, "vocab", a.vocab);
    let hidden_dim = config::num_opt::<usize>(cfg, "hidden-dim", a.hidden_dim)?;

    let inapplicable = |flag: &str, given: bool| {
        if given {
            Err(Error::InvalidArgument(format!(
                "--{flag} does not apply to --generator {generator}"
            )))
        } else {
            Ok(())
        }
    };
    let (p, n_capped) = match generator.as_str() {
        "item" => {
            inapplicable("spec", spec_path.is_some())?;
            inapplicable("start", start.is_some())?;
            inapplicable("terminal", terminal.is_some())?;
            inapplicable("vocab", vocab.is_some())?;
            inapplicable("hidden-dim", hidden_dim.is_some())?;
            let p = generate::seq_gen(
                n,
                c1.unwrap_or(5),
                c2.unwrap_or(5),
                p_continue.unwrap_or(0.5),
                time,
                seed,
            )?;
            (p, None)
        }
        "markov" => {
            inapplicable("c1", c1.is_some())?;
            inapplicable("c2", c2.is_some())?;
            inapplicable("p-continue", p_continue.is_some())?;
            inapplicable("vocab", vocab.is_some())?;
            inapplicable("hidden-dim", hidden_dim.is_some())?;
            let spec_path = spec_path.ok_or_else(|| config::missing("spec"))?;
            let start = start.ok_or_else(|| config::missing("start"))?;
            let terminal = terminal.ok_or_else(|| config::missing("terminal"))?;
            let (labels, probs) = io::read_square_matrix(&spec_path)?;
            let start = label_index(&labels, &start, "--start")?;
            let terminal = label_index(&labels, &terminal, "--terminal")?;
            let markov = generate::MarkovSpec::new(labels, probs, start, terminal)?;
            let sample = generate::seq_gen2(n, &markov, time, seed)?;
            (sample.set, Some(sample.n_capped))
        }
        "rnn" => {
            inapplicable("c1", c1.is_some())?;
            inapplicable("c2", c2.is_some())?;
            inapplicable("p-continue", p_continue.is_some())?;
            inapplicable("spec", spec_path.is_some())?;
            inapplicable("start", start.is_some())?;
            let vocab = vocab.ok_or_else(|| config::missing("vocab"))?;
            let vocab: Vec<String> = vocab
                .split(',')
                .map(|part| part.trim().to_string())
                .filter(|part| !part.is_empty())
                .collect();
            if vocab.is_empty() {
                return Err(Error::InvalidArgument("--vocab: empty label list".into()));
            }
            let terminal = terminal.ok_or_else(|| config::missing("terminal"))?;
            let terminal = label_index(&vocab, &terminal, "--terminal")?;
            let rnn_spec = generate::RnnGenSpec {
                vocab,
                hidden_dim: hidden_dim.unwrap_or(4),
                terminal,
            };
            let sample = generate::seq_gen3(n, &rnn_spec, None, time, seed)?;
            (sample.set, Some(sample.n_capped))
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "--generator: expected item, markov, or rnn, got {other:?}"
            )))
        }
    };

    io::write_seqs(&p, &out, &spec)?;
    kv("out", out.display());
    kv("n", p.n());
    if let Some(capped) = n_capped {
        kv("n_capped", capped);
    }
    Ok(())
}

pub fn logit(cfg: &mut Cfg, a: LogitArgs) -> Result<()> {
    declare(cfg, &[&["features", "labels", "train-frac", "coef-out", "seed"]])?;
    let features = path_req(cfg, "features", a.features)?;
    let labels_path = path_req(cfg, "labels", a.labels)?;
    let train_frac = config::num_or(cfg, "train-frac", a.train_frac, 0.8f64)?;
    let coef_out = path_opt(cfg, "coef-out", a.coef_out);
    let seed = config::num_req::<u64>(cfg, "seed", a.seed)?;

    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "--train-frac must be strictly between 0 and 1, got {train_frac}"
        )));
    }

    let (ids, names, data) = io::read_features(&features)?;
    let y = align_values(&ids, read_two_col(&labels_path)?, "label")?;
    let n = ids.len();
    let k = names.len();
    if n < 2 {
        return Err(Error::InvalidData(
            "need at least 2 feature rows to split".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let n_train = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut test: Vec<usize> = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();

    let fit = logistic::fit_logistic(n, k, &data, &y, &train, &test)?;

    kv("accuracy", fit.accuracy);
    kv("n_train", train.len());
    kv("n_test", test.len());
    kv("n_iter", fit.n_iter);
    kv("converged", fit.converged);
    kv_list("coefficients", &fit.coefficients);

    if let Some(path) = coef_out {
        let mut rows = vec![("intercept".to_string(), fit.coefficients[0].to_string())];
        for (j, name) in names.iter().enumerate() {
            rows.push((name.clone(), fit.coefficients[j + 1].to_string()));
        }
        write_two_col(&path, ("name", "coefficient"), &rows)?;
        kv("coef_out", path.display());
    }
    Ok(())
}
