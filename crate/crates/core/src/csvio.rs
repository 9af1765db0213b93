//! CSV encodings for sweep results, summaries, and datasets.
//!
//! Floats are written with 17 significant digits so every finite value
//! parses back to the same bits. Missing values are empty fields.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{RenError, Result};
use crate::experiment::{ResultRow, SummaryRow};
use crate::model::Dataset;

pub const RESULT_HEADER: [&str; 13] = [
    "seed",
    "alpha",
    "outlier_fraction",
    "n",
    "p",
    "k",
    "recovered_support",
    "l2_error",
    "refined_l2_error",
    "iterations",
    "runtime_ms",
    "converged",
    "status",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "outlier_fraction",
    "alpha",
    "cells",
    "ok_cells",
    "median_support",
    "mean_support",
    "median_l2_error",
    "mean_l2_error",
    "median_refined_l2_error",
    "mean_refined_l2_error",
];

/// `{:.16e}`: one leading digit plus sixteen decimals.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T, F: Fn(&T) -> String>(v: &Option<T>, f: F) -> String {
    v.as_ref().map(f).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> RenError + '_ {
    move |source| RenError::Csv { path: path.display().to_string(), source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RenError + '_ {
    move |source| RenError::Io { path: path.display().to_string(), source }
}

fn result_record(r: &ResultRow) -> [String; 13] {
    [
        r.seed.to_string(),
        format_float(r.alpha),
        format_float(r.outlier_fraction),
        r.n.to_string(),
        r.p.to_string(),
        r.k.to_string(),
        opt(&r.recovered_support, |v| v.to_string()),
        opt(&r.l2_error, |v| format_float(*v)),
        opt(&r.refined_l2_error, |v| format_float(*v)),
        opt(&r.iterations, |v| v.to_string()),
        opt(&r.runtime_ms, |v| format_float(*v)),
        opt(&r.converged, |v| v.to_string()),
        r.status.clone(),
    ]
}

pub fn write_results<W: Write>(rows: &[ResultRow], writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record(result_record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes sweep rows to `path` (header plus one line per row).
pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_results(rows, std::io::BufWriter::new(file)).map_err(csv_err(path))
}

fn parse<T: std::str::FromStr>(field: &str, name: &str) -> Result<T> {
    field.parse().map_err(|_| RenError::Parse(format!("{name}: cannot parse {field:?}")))
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, name).map(Some)
    }
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| RenError::Parse(e.to_string()))?.clone();
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(RenError::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let f = record.map_err(|e| RenError::Parse(e.to_string()))?;
        rows.push(ResultRow {
            seed: parse(&f[0], "seed")?,
            alpha: parse(&f[1], "alpha")?,
            outlier_fraction: parse(&f[2], "outlier_fraction")?,
            n: parse(&f[3], "n")?,
            p: parse(&f[4], "p")?,
            k: parse(&f[5], "k")?,
            recovered_support: parse_opt(&f[6], "recovered_support")?,
            l2_error: parse_opt(&f[7], "l2_error")?,
            refined_l2_error: parse_opt(&f[8], "refined_l2_error")?,
            iterations: parse_opt(&f[9], "iterations")?,
            runtime_ms: parse_opt(&f[10], "runtime_ms")?,
            converged: parse_opt(&f[11], "converged")?,
            status: f[12].to_string(),
        });
    }
    Ok(rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_results(std::io::BufReader::new(file))
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    let f = |v: &Option<f64>| opt(v, |x| format_float(*x));
    for s in rows {
        w.write_record([
            format_float(s.outlier_fraction),
            format_float(s.alpha),
            s.cells.to_string(),
            s.ok_cells.to_string(),
            f(&s.median_support),
            f(&s.mean_support),
            f(&s.median_l2_error),
            f(&s.mean_l2_error),
            f(&s.median_refined_l2_error),
            f(&s.mean_refined_l2_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_summary(rows, std::io::BufWriter::new(file)).map_err(csv_err(path))
}

/// Dataset layout: `y,x0,…,x{p-1}` plus an `outlier` flag column (0/1)
/// when ground truth is known.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend((0..data.p()).map(|j| format!("x{j}")));
    let flags = data.truth().map(|t| {
        let mut flags = vec![false; data.rows()];
        for &r in &t.outlier_rows {
            flags[r] = true;
        }
        flags
    });
    if flags.is_some() {
        header.push("outlier".into());
    }
    w.write_record(&header)?;
    let x = data.covariates();
    for (i, y) in data.responses().iter().enumerate() {
        let mut record = vec![format_float(*y)];
        record.extend(x.row(i).iter().map(|v| format_float(*v)));
        if let Some(flags) = &flags {
            record.push(u8::from(flags[i]).to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. Ground truth is not
/// restored; the outlier count comes from the flag column when present,
/// otherwise from `n_outliers`.
pub fn read_dataset<R: Read>(reader: R, n_outliers: Option<usize>) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| RenError::Parse(e.to_string()))?.clone();
    let has_flag = header.iter().next_back() == Some("outlier");
    let p = header.len() - 1 - usize::from(has_flag);
    if header.get(0) != Some("y") || p == 0 {
        return Err(RenError::Parse("dataset header must start with y and name covariates".into()));
    }
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    let mut flagged = 0;
    for record in r.records() {
        let f = record.map_err(|e| RenError::Parse(e.to_string()))?;
        ys.push(parse::<f64>(&f[0], "y")?);
        for j in 0..p {
            xs.push(parse::<f64>(&f[j + 1], "x")?);
        }
        if has_flag && parse::<u8>(&f[p + 1], "outlier")? == 1 {
            flagged += 1;
        }
    }
    let rows = ys.len();
    let n_outliers = if has_flag { flagged } else { n_outliers.unwrap_or(0) };
    if n_outliers > rows {
        return Err(RenError::InvalidParameter(format!("{n_outliers} outliers in {rows} rows")));
    }
    let x = Array2::from_shape_vec((rows, p), xs).map_err(|e| RenError::Parse(e.to_string()))?;
    Dataset::new(x, Array1::from(ys), rows - n_outliers, n_outliers, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::STATUS_OK;

    fn row() -> ResultRow {
        ResultRow {
            seed: 7,
            alpha: 0.2,
            outlier_fraction: 0.1,
            n: 150,
            p: 200,
            k: 5,
            recovered_support: Some(4),
            l2_error: Some(0.1 + 0.2),
            refined_l2_error: None,
            iterations: Some(33),
            runtime_ms: Some(1.0 / 3.0),
            converged: Some(true),
            status: STATUS_OK.into(),
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seed,alpha,outlier_fraction,n,p,k,recovered_support,l2_error,refined_l2_error,iterations,runtime_ms,converged,status\n"
        );
    }

    #[test]
    fn one_row_two_lines_and_round_trip() {
        let mut buf = Vec::new();
        let failed = ResultRow { status: "solve_error: bad, really".into(), l2_error: None, ..row() };
        write_results(&[row()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 2);
        buf.clear();
        write_results(&[row(), failed.clone()], &mut buf).unwrap();
        let back = read_results(buf.as_slice()).unwrap();
        assert_eq!(back, vec![row(), failed]);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn io_errors_carry_path() {
        let err = emit_csv(&[row()], "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
