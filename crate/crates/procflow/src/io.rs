//! CSV ingestion and serialization.
//!
//! Process sets are stored in two CSV layouts. In the "single" style one row
//! holds a whole process, with the action (and time) sequence packed into one
//! cell using a step separator. In the "multiple" style each event takes one
//! row, and consecutive rows sharing an id form one process. Cells follow
//! RFC 4180 quoting; timestamps are serialized with their shortest
//! round-trip decimal representation, so `read ∘ write` is the identity.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ProcessSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvStyle {
    /// One row per process; sequences packed into cells with `step_sep`.
    Single,
    /// One row per event; processes are contiguous id blocks.
    Multiple,
}

/// Column layout of a process CSV file.
#[derive(Debug, Clone)]
pub struct CsvStyleSpec {
    pub style: CsvStyle,
    pub id_var: String,
    pub action_var: String,
    /// Name of the time column. Reading tolerates the column being absent,
    /// yielding a set without times.
    pub time_var: Option<String>,
    /// Within-cell step separator (single style only).
    pub step_sep: char,
}

impl CsvStyleSpec {
    pub fn new(style: CsvStyle) -> Self {
        CsvStyleSpec {
            style,
            id_var: "ID".into(),
            action_var: "Action".into(),
            time_var: Some("Time".into()),
            step_sep: ',',
        }
    }

    fn validate(&self) -> Result<()> {
        let mut names = vec![&self.id_var, &self.action_var];
        if let Some(t) = &self.time_var {
            names.push(t);
        }
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return Err(Error::InvalidArgument(format!(
                        "column name {:?} used twice",
                        names[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn parse_time(cell: &str, row: usize) -> Result<f64> {
    let t: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::CsvRow {
            row,
            msg: format!("unparseable decimal {:?}", cell),
        })?;
    if !t.is_finite() {
        return Err(Error::CsvRow {
            row,
            msg: format!("non-finite time {:?}", cell),
        });
    }
    Ok(t)
}

/// Read a process set from `path` according to `spec`.
pub fn read_seqs(path: impl AsRef<Path>, spec: &CsvStyleSpec) -> Result<ProcessSet> {
    let path = path.as_ref();
    spec.validate()?;
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let id_col = find_column(&headers, &spec.id_var)
        .ok_or_else(|| Error::MissingColumn(spec.id_var.clone()))?;
    let action_col = find_column(&headers, &spec.action_var)
        .ok_or_else(|| Error::MissingColumn(spec.action_var.clone()))?;
    let time_col = spec
        .time_var
        .as_ref()
        .and_then(|t| find_column(&headers, t));

    match spec.style {
        CsvStyle::Single => read_single(reader, id_col, action_col, time_col, spec.step_sep),
        CsvStyle::Multiple => read_multiple(reader, id_col, action_col, time_col),
    }
}

fn record_row(record: &csv::StringRecord, fallback: usize) -> usize {
    record
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback)
}

fn read_single(
    mut reader: csv::Reader<File>,
    id_col: usize,
    action_col: usize,
    time_col: Option<usize>,
    step_sep: char,
) -> Result<ProcessSet> {
    let mut ids = Vec::new();
    let mut seqs = Vec::new();
    let mut times = time_col.map(|_| Vec::new());
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_row(&record, k + 2);
        let id = record.get(id_col).unwrap_or("").to_string();
        let action_cell = record.get(action_col).unwrap_or("");
        let labels: Vec<String> = action_cell
            .split(step_sep)
            .map(|a| a.to_string())
            .collect();
        if labels.iter().any(|a| a.is_empty()) {
            return Err(Error::CsvRow {
                row,
                msg: "empty action label in sequence cell".into(),
            });
        }
        if let (Some(times), Some(tc)) = (&mut times, time_col) {
            let cell = record.get(tc).unwrap_or("");
            let ts: Vec<f64> = cell
                .split(step_sep)
                .map(|c| parse_time(c, row))
                .collect::<Result<_>>()?;
            if ts.len() != labels.len() {
                return Err(Error::CsvRow {
                    row,
                    msg: format!(
                        "{} actions but {} timestamps",
                        labels.len(),
                        ts.len()
                    ),
                });
            }
            check_monotone(&ts, row)?;
            times.push(ts);
        }
        ids.push(id);
        seqs.push(labels);
    }
    ProcessSet::from_labels(ids, seqs, times)
}

fn read_multiple(
    mut reader: csv::Reader<File>,
    id_col: usize,
    action_col: usize,
    time_col: Option<usize>,
) -> Result<ProcessSet> {
    let mut ids: Vec<String> = Vec::new();
    let mut seqs: Vec<Vec<String>> = Vec::new();
    let mut times: Option<Vec<Vec<f64>>> = time_col.map(|_| Vec::new());
    let mut block_of: HashMap<String, usize> = HashMap::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_row(&record, k + 2);
        let id = record.get(id_col).unwrap_or("").to_string();
        let action = record.get(action_col).unwrap_or("").to_string();
        if action.is_empty() {
            return Err(Error::CsvRow {
                row,
                msg: "empty action label".into(),
            });
        }
        let current = ids.last().map(|last| last == &id).unwrap_or(false);
        if !current {
            if block_of.contains_key(&id) {
                return Err(Error::CsvRow {
                    row,
                    msg: format!("non-contiguous id block for {:?}", id),
                });
            }
            block_of.insert(id.clone(), ids.len());
            ids.push(id);
            seqs.push(Vec::new());
            if let Some(times) = &mut times {
                times.push(Vec::new());
            }
        }
        seqs.last_mut().unwrap().push(action);
        if let (Some(times), Some(tc)) = (&mut times, time_col) {
            let t = parse_time(record.get(tc).unwrap_or(""), row)?;
            let block = times.last_mut().unwrap();
            if let Some(&prev) = block.last() {
                if t < prev {
                    return Err(Error::CsvRow {
                        row,
                        msg: format!("timestamps decrease ({} < {})", t, prev),
                    });
                }
            }
            block.push(t);
        }
    }
    ProcessSet::from_labels(ids, seqs, times)
}

fn check_monotone(ts: &[f64], row: usize) -> Result<()> {
    for w in ts.windows(2) {
        if w[1] < w[0] {
            return Err(Error::CsvRow {
                row,
                msg: format!("timestamps decrease ({} < {})", w[1], w[0]),
            });
        }
    }
    Ok(())
}

/// Write `p` to `path` according to `spec`. The output parses back to an
/// equal set with [`read_seqs`].
pub fn write_seqs(p: &ProcessSet, path: impl AsRef<Path>, spec: &CsvStyleSpec) -> Result<()> {
    let path = path.as_ref();
    spec.validate()?;
    if spec.style == CsvStyle::Single {
        for label in p.vocab() {
            if label.contains(spec.step_sep) {
                return Err(Error::SeparatorCollision {
                    sep: spec.step_sep,
                    label: label.clone(),
                });
            }
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let with_times = p.has_times() && spec.time_var.is_some();
    let mut header = vec![spec.id_var.as_str(), spec.action_var.as_str()];
    if with_times {
        header.push(spec.time_var.as_deref().unwrap());
    }
    writer.write_record(&header)?;

    let sep = spec.step_sep.to_string();
    match spec.style {
        CsvStyle::Single => {
            for i in 0..p.n() {
                let actions = p.labels_of(i).join(&sep);
                let mut record = vec![p.ids()[i].clone(), actions];
                if with_times {
                    let cell = p
                        .times(i)
                        .unwrap()
                        .iter()
                        .map(|t| t.to_string())
                        .collect::<Vec<_>>()
                        .join(&sep);
                    record.push(cell);
                }
                writer.write_record(&record)?;
            }
        }
        CsvStyle::Multiple => {
            for i in 0..p.n() {
                let labels = p.labels_of(i);
                for (l, label) in labels.iter().enumerate() {
                    let mut record = vec![p.ids()[i].clone(), label.to_string()];
                    if with_times {
                        record.push(p.times(i).unwrap()[l].to_string());
                    }
                    writer.write_record(&record)?;
                }
            }
        }
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Write a square matrix with an id header row and id-labelled rows.
pub fn write_square_matrix(
    path: impl AsRef<Path>,
    ids: &[String],
    data: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    let n = ids.len();
    assert_eq!(data.len(), n * n, "matrix data must be n x n");
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = vec!["id".to_string()];
    header.extend(ids.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..n {
        let mut record = vec![ids[i].clone()];
        record.extend(data[i * n..(i + 1) * n].iter().map(|x| x.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Read a square matrix written by [`write_square_matrix`].
pub fn read_square_matrix(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || headers.get(0) != Some("id") {
        return Err(Error::CsvRow {
            row: 1,
            msg: "matrix header must start with 'id'".into(),
        });
    }
    let ids: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let n = ids.len();
    let mut data = Vec::with_capacity(n * n);
    let mut n_rows = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_row(&record, k + 2);
        if record.len() != n + 1 {
            return Err(Error::CsvRow {
                row,
                msg: format!("expected {} cells, found {}", n + 1, record.len()),
            });
        }
        if record.get(0) != Some(ids[n_rows].as_str()) {
            return Err(Error::CsvRow {
                row,
                msg: "row id does not match header order".into(),
            });
        }
        for cell in record.iter().skip(1) {
            data.push(parse_time(cell, row)?);
        }
        n_rows += 1;
    }
    if n_rows != n {
        return Err(Error::CsvRow {
            row: n_rows + 1,
            msg: format!("expected {} rows, found {}", n, n_rows),
        });
    }
    Ok((ids, data))
}

/// Write an `n x k` feature matrix as CSV with an id column.
pub fn write_features(
    path: impl AsRef<Path>,
    ids: &[String],
    col_names: &[String],
    data: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    let (n, k) = (ids.len(), col_names.len());
    assert_eq!(data.len(), n * k, "feature data must be n x k");
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = vec!["id".to_string()];
    header.extend(col_names.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..n {
        let mut record = vec![ids[i].clone()];
        record.extend(data[i * k..(i + 1) * k].iter().map(|x| x.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Read a feature matrix written by [`write_features`]; returns ids, column
/// names, and row-major data.
pub fn read_features(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<String>, Vec<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || headers.get(0) != Some("id") {
        return Err(Error::CsvRow {
            row: 1,
            msg: "feature header must start with 'id'".into(),
        });
    }
    let col_names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let k = col_names.len();
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_row(&record, idx + 2);
        if record.len() != k + 1 {
            return Err(Error::CsvRow {
                row,
                msg: format!("expected {} cells, found {}", k + 1, record.len()),
            });
        }
        ids.push(record.get(0).unwrap().to_string());
        for cell in record.iter().skip(1) {
            data.push(parse_time(cell, row)?);
        }
    }
    Ok((ids, col_names, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(times: bool) -> ProcessSet {
        ProcessSet::from_labels(
            vec!["r1".into(), "r2".into()],
            vec![
                vec!["start".into(), "1_0_0".into(), "end".into()],
                vec!["start".into(), "end".into()],
            ],
            times.then(|| vec![vec![0.0, 36.9, 171.6], vec![0.0, 12.25]]),
        )
        .unwrap()
    }

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("procflow-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_both_styles() {
        let p = toy(true);
        for (style, name) in [(CsvStyle::Single, "rt_single.csv"), (CsvStyle::Multiple, "rt_multiple.csv")] {
            let spec = CsvStyleSpec::new(style);
            let path = tmp(name);
            write_seqs(&p, &path, &spec).unwrap();
            let q = read_seqs(&path, &spec).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn cross_style_reads_are_equal() {
        let p = toy(true);
        let single = tmp("x_single.csv");
        let multiple = tmp("x_multiple.csv");
        write_seqs(&p, &single, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        write_seqs(&p, &multiple, &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap();
        let a = read_seqs(&single, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        let b = read_seqs(&multiple, &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_time_column_reads_as_no_times() {
        let p = toy(false);
        let path = tmp("no_time.csv");
        write_seqs(&p, &path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        let q = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        assert!(!q.has_times());
        assert_eq!(p, q);
    }

    #[test]
    fn missing_action_column_errors() {
        let path = tmp("missing_col.csv");
        std::fs::write(&path, "ID,Foo\na,b\n").unwrap();
        let err = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "Action"));
    }

    #[test]
    fn ragged_single_row_reports_row_number() {
        let path = tmp("ragged.csv");
        std::fs::write(&path, "ID,Action,Time\na,\"x,y\",1.0\nb,\"x,y\",\"1.0,2.0,3.0\"\n").unwrap();
        let err = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap_err();
        match err {
            Error::CsvRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn non_monotone_times_rejected_with_row() {
        let path = tmp("nonmono.csv");
        std::fs::write(&path, "ID,Action,Time\na,x,1.0\na,y,0.5\n").unwrap();
        let err = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap_err();
        match err {
            Error::CsvRow { row, msg } => {
                assert_eq!(row, 3);
                assert!(msg.contains("decrease"));
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn unparseable_decimal_rejected() {
        let path = tmp("badnum.csv");
        std::fs::write(&path, "ID,Action,Time\na,x,zero\n").unwrap();
        let err = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap_err();
        assert!(matches!(err, Error::CsvRow { row: 2, .. }));
    }

    #[test]
    fn non_contiguous_id_block_errors() {
        // handcrafted 4-row fixture: id "a" reappears after "b"
        let path = tmp("noncontig.csv");
        std::fs::write(&path, "ID,Action\na,x\na,y\nb,x\na,z\n").unwrap();
        let err = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap_err();
        match err {
            Error::CsvRow { row, msg } => {
                assert_eq!(row, 5);
                assert!(msg.contains("non-contiguous"));
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn separator_collision_rejected_on_write() {
        let p = ProcessSet::from_labels(
            vec!["a".into()],
            vec![vec!["x,y".into()]],
            None,
        )
        .unwrap();
        let err = write_seqs(&p, tmp("collide.csv"), &CsvStyleSpec::new(CsvStyle::Single)).unwrap_err();
        assert!(matches!(err, Error::SeparatorCollision { .. }));
        // multiple style has no packed cells, so the same set writes fine
        write_seqs(&p, tmp("collide_ok.csv"), &CsvStyleSpec::new(CsvStyle::Multiple)).unwrap();
    }

    #[test]
    fn high_precision_times_survive_round_trip() {
        let p = ProcessSet::from_labels(
            vec!["a".into()],
            vec![vec!["x".into(), "y".into()]],
            Some(vec![vec![0.1234567890123456, 7.77777777777]]),
        )
        .unwrap();
        let path = tmp("precision.csv");
        write_seqs(&p, &path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        let q = read_seqs(&path, &CsvStyleSpec::new(CsvStyle::Single)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn square_matrix_round_trip() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let data = vec![0.0, 0.5, 0.5, 0.0];
        let path = tmp("matrix.csv");
        write_square_matrix(&path, &ids, &data).unwrap();
        let (rids, rdata) = read_square_matrix(&path).unwrap();
        assert_eq!(rids, ids);
        assert_eq!(rdata, data);
    }

    #[test]
    fn features_round_trip() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let cols = vec!["PC1".to_string(), "PC2".to_string()];
        let data = vec![1.5, -0.25, 0.125, 3.0];
        let path = tmp("features.csv");
        write_features(&path, &ids, &cols, &data).unwrap();
        let (rids, rcols, rdata) = read_features(&path).unwrap();
        assert_eq!(rids, ids);
        assert_eq!(rcols, cols);
        assert_eq!(rdata, data);
    }
}
