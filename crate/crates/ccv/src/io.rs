//! CSV ingestion and artifact writers.
//!
//! CSV files are comma-separated UTF-8 with a header row and '.' decimals.
//! Dataset values are written with 17 significant digits so a write/reload
//! round trip is element-identical.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::sim::ExperimentResult;

/// Load a dataset from a headered CSV file. Every non-response column must
/// be numeric; binomial responses must be 0 or 1.
pub fn load_csv(path: &Path, response_column: &str, family: Family) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::Csv {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let csv_err = |line: usize, message: String| Error::Csv {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(0, "empty file".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let response_idx = names
        .iter()
        .position(|n| n == response_column)
        .ok_or_else(|| {
            csv_err(
                1,
                format!("response column '{response_column}' not found in header"),
            )
        })?;
    let p = names.len() - 1;
    if p == 0 {
        return Err(csv_err(1, "no predictor columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (line_idx, line) in lines {
        let line_no = line_idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(csv_err(
                line_no,
                format!("expected {} cells, found {}", names.len(), cells.len()),
            ));
        }
        let mut row = Vec::with_capacity(p);
        for (cidx, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                csv_err(
                    line_no,
                    format!("non-numeric cell in column '{}': '{}'", names[cidx], cell.trim()),
                )
            })?;
            if !value.is_finite() {
                return Err(csv_err(
                    line_no,
                    format!("non-finite cell in column '{}'", names[cidx]),
                ));
            }
            if cidx == response_idx {
                if family == Family::Binomial && value != 0.0 && value != 1.0 {
                    return Err(csv_err(
                        line_no,
                        format!("binomial response must be 0 or 1, found {value}"),
                    ));
                }
                y.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }

    let n = rows.len();
    let mut x = Array2::zeros((n, p));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    let predictor_names: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, n)| n.clone())
        .collect();
    Dataset::new(x, Array1::from_vec(y), family)?.with_names(predictor_names)
}

/// 17-significant-digit representation; round-trips through `str::parse`.
pub fn full_precision(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Write a dataset as CSV (predictors then the response column).
pub fn write_dataset_csv(path: &Path, data: &Dataset, response_name: &str) -> Result<()> {
    let mut out = String::new();
    let names: Vec<String> = match &data.column_names {
        Some(n) => n.clone(),
        None => (1..=data.p()).map(|j| format!("x{j}")).collect(),
    };
    out.push_str(&names.join(","));
    out.push(',');
    out.push_str(response_name);
    out.push('\n');
    for i in 0..data.n() {
        for j in 0..data.p() {
            out.push_str(&full_precision(data.x[[i, j]]));
            out.push(',');
        }
        out.push_str(&full_precision(data.y[i]));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Plot-ready two-column series.
pub fn write_series_csv(path: &Path, value_name: &str, series: &[(usize, f64)]) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 24);
    out.push_str(&format!("position,{value_name}\n"));
    for (pos, v) in series {
        out.push_str(&format!("{pos},{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_per_rep_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut out = String::from(
        "method,penalty,rep,fn,fp,loss,loss_penalized,model_size,selected_lambda\n",
    );
    for m in &result.per_rep {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.method,
            m.penalty,
            m.rep,
            m.fn_count,
            m.fp_count,
            m.loss,
            m.loss_penalized.map(|v| v.to_string()).unwrap_or_default(),
            m.model_size,
            m.selected_lambda.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut out = String::from("method,penalty,metric,mean,sd,n_ok\n");
    for r in &result.aggregate {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method, r.penalty, r.metric, r.mean, r.sd, r.n_ok
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_median_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut out = String::from("method,penalty,n_c,median_fp,neg_median_fn\n");
    for r in &result.median_series {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.penalty, r.n_c, r.median_fp, r.neg_median_fn
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_failures_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut out = String::from("method,penalty,rep,error\n");
    for f in &result.failures {
        out.push_str(&format!(
            "{},{},{},\"{}\"\n",
            f.method,
            f.penalty,
            f.rep,
            f.error.replace('"', "'")
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{gen_linear, SparseBeta};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("ccv-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn load_small_csv() {
        let path = tmp("small.csv");
        fs::write(&path, "x1,x2,y\n1.0,2.0,3.0\n4.0,5.0,6.0\n0.5,0.25,0.125\n").unwrap();
        let data = load_csv(&path, "y", Family::Gaussian).unwrap();
        assert_eq!(data.n(), 3);
        assert_eq!(data.p(), 2);
        assert_eq!(data.y[2], 0.125);
        assert_eq!(data.column_names.as_deref().unwrap(), ["x1", "x2"]);
    }

    #[test]
    fn missing_response_column_named_in_error() {
        let path = tmp("miss.csv");
        fs::write(&path, "a,b\n1,2\n3,4\n").unwrap();
        match load_csv(&path, "y", Family::Gaussian) {
            Err(Error::Csv { message, .. }) => assert!(message.contains("'y'")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binomial_response_out_of_range_cites_row() {
        let path = tmp("bin.csv");
        fs::write(&path, "x1,y\n1.0,0\n2.0,2\n").unwrap();
        match load_csv(&path, "y", Family::Binomial) {
            Err(Error::Csv { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains('2'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let path = tmp("badcell.csv");
        fs::write(&path, "x1,y\n1.0,0.5\nfoo,1.0\n").unwrap();
        match load_csv(&path, "y", Family::Gaussian) {
            Err(Error::Csv { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x1"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dataset_round_trip_is_element_identical() {
        let beta = SparseBeta::from_prefix(&[1.0, -0.5]);
        let (data, _) = gen_linear(40, 5, 0.4, &beta, 1.0, 2, 99).unwrap();
        let path = tmp("roundtrip.csv");
        write_dataset_csv(&path, &data, "y").unwrap();
        let back = load_csv(&path, "y", Family::Gaussian).unwrap();
        assert_eq!(data.x, back.x);
        assert_eq!(data.y, back.y);
    }
}
