//! Shared plumbing for the subcommands: machine-readable stdout lines,
//! aligned stderr tables, and id-keyed auxiliary files.

use procflow::{Error, Result};
use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;

/// One machine-readable line on stdout.
pub fn kv(key: &str, value: impl Display) {
    println!("{key}={value}");
}

pub fn kv_list<T: Display>(key: &str, values: &[T]) {
    let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    println!("{key}={}", joined.join(","));
}

/// Column-aligned table on stderr.
pub fn table(headers: &[&str], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            width[j] = width[j].max(cell.len());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = width[j]))
            .collect();
        eprintln!("{}", padded.join("  ").trim_end());
    };
    line(headers.iter().map(|h| h.to_string()).collect());
    for row in rows {
        line(row.clone());
    }
}

/// Read a two-column CSV (id, value) with a header row.
pub fn read_two_col(path: &Path) -> Result<Vec<(String, f64)>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    if reader.headers()?.len() != 2 {
        return Err(Error::CsvRow {
            row: 1,
            msg: "expected exactly two columns: id, value".into(),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != 2 {
            return Err(Error::CsvRow {
                row,
                msg: format!("expected 2 cells, found {}", record.len()),
            });
        }
        let id = record.get(0).unwrap().to_string();
        let raw = record.get(1).unwrap();
        let value: f64 = raw.parse().map_err(|_| Error::CsvRow {
            row,
            msg: format!("invalid number {raw:?}"),
        })?;
        out.push((id, value));
    }
    Ok(out)
}

/// Order `pairs` by `ids`; every id must appear exactly once.
pub fn align_values(ids: &[String], pairs: Vec<(String, f64)>, what: &str) -> Result<Vec<f64>> {
    let mut map: HashMap<String, f64> = HashMap::with_capacity(pairs.len());
    for (id, value) in pairs {
        if map.insert(id.clone(), value).is_some() {
            return Err(Error::InvalidData(format!("duplicate {what} id {id:?}")));
        }
    }
    let values = ids
        .iter()
        .map(|id| {
            map.remove(id)
                .ok_or_else(|| Error::InvalidData(format!("no {what} for id {id:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(extra) = map.into_keys().next() {
        return Err(Error::InvalidData(format!(
            "{what} id {extra:?} matches no process"
        )));
    }
    Ok(values)
}

/// Reorder feature rows (row-major, `k` columns) to follow `ids`.
pub fn align_rows(
    ids: &[String],
    row_ids: &[String],
    data: &[f64],
    k: usize,
    what: &str,
) -> Result<Vec<f64>> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(row_ids.len());
    for (i, id) in row_ids.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            return Err(Error::InvalidData(format!("duplicate {what} id {id:?}")));
        }
    }
    let mut out = Vec::with_capacity(ids.len() * k);
    for id in ids {
        let &row = index
            .get(id.as_str())
            .ok_or_else(|| Error::InvalidData(format!("no {what} row for id {id:?}")))?;
        out.extend_from_slice(&data[row * k..(row + 1) * k]);
    }
    if row_ids.len() > ids.len() {
        let wanted: std::collections::HashSet<&str> = ids.iter().map(|s| s.as_str()).collect();
        if let Some(extra) = row_ids.iter().find(|id| !wanted.contains(id.as_str())) {
            return Err(Error::InvalidData(format!(
                "{what} id {extra:?} matches no process"
            )));
        }
    }
    Ok(out)
}

/// Write rows of (label, value) as a two-column CSV.
pub fn write_two_col(
    path: &Path,
    header: (&str, &str),
    rows: &[(String, String)],
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([header.0, header.1])?;
    for (a, b) in rows {
        writer.write_record([a.as_str(), b.as_str()])?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn align_values_orders_and_checks() {
        let ids = vec!["b".to_string(), "a".to_string()];
        let pairs = vec![("a".to_string(), 1.0), ("b".to_string(), 2.0)];
        assert_eq!(align_values(&ids, pairs, "response").unwrap(), vec![2.0, 1.0]);

        let missing = vec![("a".to_string(), 1.0)];
        assert!(align_values(&ids, missing, "response").is_err());
        let extra = vec![
            ("a".to_string(), 1.0),
            ("b".to_string(), 2.0),
            ("c".to_string(), 3.0),
        ];
        assert!(align_values(&ids, extra, "response").is_err());
    }

    #[test]
    fn align_rows_reorders_blocks() {
        let ids = vec!["y".to_string(), "x".to_string()];
        let row_ids = vec!["x".to_string(), "y".to_string()];
        let data = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            align_rows(&ids, &row_ids, &data, 2, "covariate").unwrap(),
            vec![3.0, 4.0, 1.0, 2.0]
        );
    }
}
