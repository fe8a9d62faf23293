//! Versioned plain-text persistence for trained models.
//!
//! Line-oriented `key=value` format. A file starts with
//! `format=procflow-model v1` and `kind=seqae|seqm`, followed by the
//! architecture fields, one `action=` line per vocabulary label, optional
//! `history=` lines, and one `param=` line per tensor holding its name,
//! shape, and values. Floats are printed in shortest round-trip form, so a
//! read restores every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{CellKind, NetParams, Tensor};
use crate::seqae::{AeType, FeatureMethod, SeqAEArchitecture};
use crate::seqm::{ResponseType, SeqmArchitecture, SeqmModel};

pub const FORMAT_LINE: &str = "format=procflow-model v1";

/// Trained autoencoder in persistable form.
#[derive(Debug, Clone)]
pub struct SeqAEModel {
    pub arch: SeqAEArchitecture,
    /// Vocabulary the embedding rows are aligned with.
    pub vocab: Vec<String>,
    pub params: NetParams,
}

/// On-disk model: either an autoencoder or a supervised sequence model.
#[derive(Debug, Clone)]
pub enum ModelArchive {
    SeqAE(SeqAEModel),
    Seqm(SeqmModel),
}

impl ModelArchive {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelArchive::SeqAE(_) => "seqae",
            ModelArchive::Seqm(_) => "seqm",
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.render()?;
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<ModelArchive> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        ModelArchive::parse(&text)
    }

    pub fn render(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(FORMAT_LINE);
        out.push('\n');
        let _ = writeln!(out, "kind={}", self.kind());
        match self {
            ModelArchive::SeqAE(m) => {
                let a = &m.arch;
                let _ = writeln!(out, "ae_type={}", a.ae_type.tag());
                let _ = writeln!(out, "k={}", a.k);
                let _ = writeln!(out, "rnn_type={}", a.rnn_type.tag());
                let _ = writeln!(out, "method={}", a.method.tag());
                let _ = writeln!(out, "cumulative={}", a.cumulative);
                let _ = writeln!(out, "log={}", a.log);
                let _ = writeln!(out, "w_a={}", a.weights.0);
                let _ = writeln!(out, "w_t={}", a.weights.1);
                let _ = writeln!(out, "pca={}", a.pca);
                write_vocab(&mut out, &m.vocab)?;
                write_params(&mut out, &m.params)?;
            }
            ModelArchive::Seqm(m) => {
                let a = &m.arch;
                let _ = writeln!(out, "response_type={}", a.response_type.tag());
                let _ = writeln!(out, "k_emb={}", a.k_emb);
                let _ = writeln!(out, "k_rnn={}", a.k_rnn);
                let _ = writeln!(out, "rnn_type={}", a.rnn_type.tag());
                let _ = writeln!(out, "include_time={}", a.include_time);
                let _ = writeln!(out, "time_interval={}", a.time_interval);
                let _ = writeln!(out, "log_time={}", a.log_time);
                let hidden: Vec<String> = a.k_hidden.iter().map(|k| k.to_string()).collect();
                let _ = writeln!(out, "k_hidden={}", hidden.join(","));
                let _ = writeln!(out, "n_covariates={}", a.n_covariates);
                let _ = writeln!(out, "max_len={}", a.max_len);
                if m.structure.contains('\n') {
                    return Err(Error::Archive("structure line contains a newline".into()));
                }
                let _ = writeln!(out, "structure={}", m.structure);
                let _ = writeln!(out, "best_epoch={}", m.best_epoch);
                if let Some(e) = m.diverged_at {
                    let _ = writeln!(out, "diverged_at={e}");
                }
                write_vocab(&mut out, &m.vocab)?;
                for row in &m.history {
                    let _ = writeln!(out, "history={} {}", row[0], row[1]);
                }
                write_params(&mut out, &m.coefficients)?;
            }
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<ModelArchive> {
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_LINE) {
            return Err(Error::Archive(format!(
                "missing header {FORMAT_LINE:?}"
            )));
        }
        let kind = match lines.next().and_then(|l| l.strip_prefix("kind=")) {
            Some(k) => k.to_string(),
            None => return Err(Error::Archive("missing kind line".into())),
        };

        let mut fields: Vec<(String, String)> = Vec::new();
        let mut vocab: Vec<String> = Vec::new();
        let mut history: Vec<[f64; 2]> = Vec::new();
        let mut params = NetParams::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Archive(format!("malformed line {line:?}")))?;
            match key {
                "action" => vocab.push(value.to_string()),
                "history" => {
                    let mut it = value.split(' ');
                    let tr = parse_f64(it.next().unwrap_or(""))?;
                    let vl = parse_f64(it.next().ok_or_else(|| {
                        Error::Archive("history line needs two values".into())
                    })?)?;
                    if it.next().is_some() {
                        return Err(Error::Archive("history line needs two values".into()));
                    }
                    history.push([tr, vl]);
                }
                "param" => {
                    let mut it = value.split(' ');
                    let name = it
                        .next()
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| Error::Archive("param line without a name".into()))?;
                    let rows = parse_usize(it.next().unwrap_or(""))?;
                    let cols = parse_usize(it.next().unwrap_or(""))?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for tok in it {
                        data.push(parse_f64(tok)?);
                    }
                    if data.len() != rows * cols {
                        return Err(Error::Archive(format!(
                            "tensor {name}: {} values for shape {rows}x{cols}",
                            data.len()
                        )));
                    }
                    if params.try_get(name).is_some() {
                        return Err(Error::Archive(format!("duplicate tensor {name}")));
                    }
                    params.insert(name, Tensor::from_vec(rows, cols, data));
                }
                _ => fields.push((key.to_string(), value.to_string())),
            }
        }

        let mut fields = FieldMap::new(fields)?;
        let archive = match kind.as_str() {
            "seqae" => {
                let arch = SeqAEArchitecture {
                    ae_type: AeType::parse(&fields.take("ae_type")?)?,
                    k: parse_usize(&fields.take("k")?)?,
                    rnn_type: {
                        let v = fields.take("rnn_type")?;
                        CellKind::parse(&v)
                            .ok_or_else(|| Error::Archive(format!("unknown cell {v:?}")))?
                    },
                    method: FeatureMethod::parse(&fields.take("method")?)?,
                    cumulative: parse_bool(&fields.take("cumulative")?)?,
                    log: parse_bool(&fields.take("log")?)?,
                    weights: (
                        parse_f64(&fields.take("w_a")?)?,
                        parse_f64(&fields.take("w_t")?)?,
                    ),
                    pca: parse_bool(&fields.take("pca")?)?,
                };
                ModelArchive::SeqAE(SeqAEModel {
                    arch,
                    vocab,
                    params,
                })
            }
            "seqm" => {
                let arch = SeqmArchitecture {
                    response_type: ResponseType::parse(&fields.take("response_type")?)?,
                    k_emb: parse_usize(&fields.take("k_emb")?)?,
                    k_rnn: parse_usize(&fields.take("k_rnn")?)?,
                    rnn_type: {
                        let v = fields.take("rnn_type")?;
                        CellKind::parse(&v)
                            .ok_or_else(|| Error::Archive(format!("unknown cell {v:?}")))?
                    },
                    include_time: parse_bool(&fields.take("include_time")?)?,
                    time_interval: parse_bool(&fields.take("time_interval")?)?,
                    log_time: parse_bool(&fields.take("log_time")?)?,
                    k_hidden: parse_usize_list(&fields.take("k_hidden")?)?,
                    n_covariates: parse_usize(&fields.take("n_covariates")?)?,
                    max_len: parse_usize(&fields.take("max_len")?)?,
                };
                ModelArchive::Seqm(SeqmModel {
                    arch,
                    vocab,
                    structure: fields.take("structure")?,
                    coefficients: params,
                    history,
                    best_epoch: parse_usize(&fields.take("best_epoch")?)?,
                    diverged_at: fields
                        .take_optional("diverged_at")
                        .map(|v| parse_usize(&v))
                        .transpose()?,
                })
            }
            other => {
                return Err(Error::Archive(format!("unknown model kind {other:?}")));
            }
        };
        fields.finish()?;
        Ok(archive)
    }
}

fn write_vocab(out: &mut String, vocab: &[String]) -> Result<()> {
    for label in vocab {
        if label.contains('\n') {
            return Err(Error::Archive(format!(
                "action label {label:?} contains a newline"
            )));
        }
        let _ = writeln!(out, "action={label}");
    }
    Ok(())
}

fn write_params(out: &mut String, params: &NetParams) -> Result<()> {
    params.validate_finite()?;
    for (name, t) in params.iter() {
        if name.contains(' ') || name.contains('\n') {
            return Err(Error::Archive(format!(
                "tensor name {name:?} contains whitespace"
            )));
        }
        let (rows, cols) = t.shape();
        let _ = write!(out, "param={name} {rows} {cols}");
        for v in t.data() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    Ok(())
}

/// Header fields with single-use take semantics; leftovers are errors.
struct FieldMap {
    entries: Vec<(String, Option<String>)>,
}

impl FieldMap {
    fn new(fields: Vec<(String, String)>) -> Result<Self> {
        for (i, (k, _)) in fields.iter().enumerate() {
            if fields[..i].iter().any(|(other, _)| other == k) {
                return Err(Error::Archive(format!("duplicate field {k:?}")));
            }
        }
        Ok(FieldMap {
            entries: fields.into_iter().map(|(k, v)| (k, Some(v))).collect(),
        })
    }

    fn take(&mut self, key: &str) -> Result<String> {
        self.take_optional(key)
            .ok_or_else(|| Error::Archive(format!("missing field {key:?}")))
    }

    fn take_optional(&mut self, key: &str) -> Option<String> {
        self.entries
            .iter_mut()
            .find(|(k, v)| k == key && v.is_some())
            .and_then(|(_, v)| v.take())
    }

    fn finish(self) -> Result<()> {
        for (k, v) in self.entries {
            if v.is_some() {
                return Err(Error::Archive(format!("unknown field {k:?}")));
            }
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Archive(format!("expected true/false, got {other:?}"))),
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Archive(format!("expected an integer, got {s:?}")))
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_usize).collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Archive(format!("expected a number, got {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Archive(format!("non-finite value {s}")));
    }
    Ok(v)
}
