//! Flat-file formats: dense matrices as headerless CSV, observations as
//! `row,col,value` lines.

use std::fs;
use std::path::Path;

use crate::completion::CompletionDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn records(text: &str, path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    csv_reader(text)
        .into_records()
        .map(|rec| {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_error(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            Ok((line, rec))
        })
        .collect()
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_error(path, line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("non-finite value {field:?}")));
    }
    Ok(v)
}

/// Parses a dense matrix from CSV text. Blank lines are skipped.
pub fn parse_matrix(text: &str, path: &Path) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, rec) in records(text, path)? {
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(parse_error(path, line, format!("expected {c} fields, found {}", rec.len())));
            }
            Some(_) => {}
        }
        for field in rec.iter() {
            data.push(parse_f64(path, line, field)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_error(path, 0, "empty matrix file"))?;
    Matrix::new(rows, cols, data)
}

fn write_csv(rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("ascii output")
}

/// Renders a matrix as CSV using shortest round-trip formatting.
pub fn format_matrix(m: &Matrix) -> String {
    write_csv((0..m.rows()).map(|i| m.row(i).iter().map(|v| v.to_string()).collect()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}

/// Parses `row,col,value` observation lines (0-based indices).
pub fn parse_observations(text: &str, path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut triples = Vec::new();
    for (line, rec) in records(text, path)? {
        if rec.len() != 3 {
            return Err(parse_error(path, line, format!("expected row,col,value, found {} fields", rec.len())));
        }
        let index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(path, line, format!("bad index {s:?}")))
        };
        triples.push((index(&rec[0])?, index(&rec[1])?, parse_f64(path, line, &rec[2])?));
    }
    Ok(triples)
}

pub fn read_observations(path: &Path, m1: usize, m2: usize) -> Result<CompletionDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let triples = parse_observations(&text, path)?;
    CompletionDataset::from_triples(m1, m2, &triples)
}

pub fn format_observations(dataset: &CompletionDataset) -> String {
    write_csv(
        dataset
            .triples()
            .map(|(r, c, v)| vec![r.to_string(), c.to_string(), v.to_string()]),
    )
}

pub fn write_observations(path: &Path, dataset: &CompletionDataset) -> Result<()> {
    fs::write(path, format_observations(dataset)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = Matrix::from_rows(&[
            vec![0.1, -1.0 / 3.0, 1e-300],
            vec![std::f64::consts::PI, 12345.678901234567, -0.0],
        ])
        .unwrap();
        let back = parse_matrix(&format_matrix(&m), p()).unwrap();
        assert_eq!(back.shape(), m.shape());
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ragged_rows_report_line() {
        let err = parse_matrix("1,2\n3\n", p()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_garbage_and_empty() {
        assert!(parse_matrix("1,x\n", p()).is_err());
        assert!(parse_matrix("1,NaN\n", p()).is_err());
        assert!(parse_matrix("\n\n", p()).is_err());
    }

    #[test]
    fn observations_round_trip() {
        let data = CompletionDataset::from_triples(3, 2, &[(0, 1, 0.5), (2, 0, -1.25), (0, 1, 3.0)]).unwrap();
        let text = format_observations(&data);
        assert_eq!(text, "0,1,0.5\n2,0,-1.25\n0,1,3\n");
        let triples = parse_observations(&text, p()).unwrap();
        assert_eq!(triples, vec![(0, 1, 0.5), (2, 0, -1.25), (0, 1, 3.0)]);
    }

    #[test]
    fn observation_errors() {
        assert!(parse_observations("0,1\n", p()).is_err());
        assert!(parse_observations("-1,0,2\n", p()).is_err());
        let err = parse_observations("0,0,1\n0,a,1\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
