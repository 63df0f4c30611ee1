//! File formats: network JSON documents and CSV matrices, datasets and reports.
//!
//! CSV floats are written with 17 significant digits so every `f64` reads back
//! unchanged; JSON uses the shortest representation that round-trips.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::compression::MarginAudit;
use crate::error::{Error, Result};
use crate::network::{AffineUnit, GeneralNetwork, ReluNetwork, ThresholdNetwork};
use crate::sign::Sign;
use crate::training::{Dataset, ReportRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetworkFile {
    Relu(ReluNetwork),
    Threshold(ThresholdNetwork),
    General(GeneralNetwork),
}

impl NetworkFile {
    pub fn dim(&self) -> usize {
        match self {
            NetworkFile::Relu(n) => n.dim(),
            NetworkFile::Threshold(n) => n.dim(),
            NetworkFile::General(n) => n.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Sign> {
        match self {
            NetworkFile::Relu(n) => n.eval(x),
            NetworkFile::Threshold(n) => n.eval(x),
            NetworkFile::General(n) => n.eval(x),
        }
    }

    /// Units acting directly on the input.
    pub fn first_layer_units(&self) -> Vec<AffineUnit> {
        match self {
            NetworkFile::Relu(n) => n.units().cloned().collect(),
            NetworkFile::Threshold(n) => n.first_layer_units(),
            NetworkFile::General(n) => n.layers()[0].layer.units(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut s = String::new();
        File::open(path)?.read_to_string(&mut s)?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_json()?.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(w.flush()?)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

/// Matrix with one column per unit (`unit_1, ...`); the last row is the bias row.
pub fn write_matrix<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=m.ncols()).map(|k| format!("unit_{k}")))?;
    for r in 0..m.nrows() {
        out.write_record(m.row(r).iter().map(|&v| fmt_f64(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rd = csv::Reader::from_reader(r);
    let cols = rd.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Parse(format!("row {} has {} fields, expected {cols}", rows + 1, rec.len())));
        }
        for f in rec.iter() {
            data.push(parse_f64(f)?);
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), m)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    read_matrix(BufReader::new(File::open(path)?))
}

/// Columns `x_1..x_d, label, split`; `split` is `train` or `test` and test rows come last.
pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=data.dim).map(|i| format!("x_{i}")).collect();
    header.extend(["label".into(), "split".into()]);
    out.write_record(&header)?;
    let train = data.train_size();
    for (i, (p, l)) in data.points.iter().zip(&data.labels).enumerate() {
        let mut rec: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(l.as_i8().to_string());
        rec.push(if i < train { "train" } else { "test" }.into());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let dim = header.iter().take_while(|h| h.starts_with("x_")).count();
    if dim == 0 || header.get(dim) != Some("label") {
        return Err(Error::Parse("dataset header must be x_1..x_d,label[,split]".into()));
    }
    let has_split = header.get(dim + 1) == Some("split");
    let (mut points, mut labels, mut test) = (Vec::new(), Vec::new(), 0usize);
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        points.push((0..dim).map(|j| parse_f64(&rec[j])).collect::<Result<Vec<_>>>()?);
        labels.push(match rec[dim].trim() {
            "1" | "+1" => Sign::Pos,
            "-1" => Sign::Neg,
            other => return Err(Error::Parse(format!("row {}: label `{other}` is not +-1", row + 1))),
        });
        let is_test = has_split && rec.get(dim + 1).map(str::trim) == Some("test");
        if is_test {
            test += 1;
        } else if test > 0 {
            return Err(Error::Parse(format!("row {}: training row after test rows", row + 1)));
        }
    }
    Dataset::new(dim, points, labels, test)
}

pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Rows of `x_*` columns, each with a trailing 1 appended; other columns are ignored.
pub fn read_augmented_points<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let cols: Vec<usize> = rd.headers()?.iter().enumerate().filter(|(_, h)| h.starts_with("x_")).map(|(i, _)| i).collect();
    if cols.is_empty() {
        return Err(Error::Parse("no x_ columns in data file".into()));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            let mut x = cols.iter().map(|&c| parse_f64(&rec[c])).collect::<Result<Vec<_>>>()?;
            x.push(1.0);
            Ok(x)
        })
        .collect()
}

pub fn load_augmented_points(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    read_augmented_points(BufReader::new(File::open(path)?))
}

pub const REPORT_HEADER: [&str; 7] = ["n", "d", "setting", "train_error", "test_error", "chosen_lr", "epochs"];

pub fn write_report<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.d.to_string(),
            r.setting.clone(),
            fmt_f64(r.train_error),
            fmt_f64(r.test_error),
            fmt_f64(r.chosen_lr),
            r.epochs.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(r: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.records()
        .map(|rec| {
            let rec = rec?;
            let int = |i: usize| rec[i].parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
            Ok(ReportRow {
                n: int(0)?,
                d: int(1)?,
                setting: rec[2].to_string(),
                train_error: parse_f64(&rec[3])?,
                test_error: parse_f64(&rec[4])?,
                chosen_lr: parse_f64(&rec[5])?,
                epochs: int(6)?,
            })
        })
        .collect()
}

pub fn write_audit<W: Write>(w: W, audit: &MarginAudit) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["example", "gamma", "x_inf_norm", "bound", "residual", "passes", "argmax_v", "argmax_ut"])?;
    for (i, r) in audit.records.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            fmt_f64(r.gamma),
            fmt_f64(r.x_inf_norm),
            fmt_f64(r.bound),
            fmt_f64(r.residual_norm),
            r.passes.to_string(),
            (r.argmax_v + 1).to_string(),
            (r.argmax_ut + 1).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1.0 / 3.0, 1e-300, f64::MAX, 5e-324, -0.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("unit_1,unit_2,unit_3\n"));
        let back = read_matrix(&buf[..]).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn dataset_round_trip() {
        let data = Dataset::new(2, vec![vec![0.1, 0.2], vec![-1.5, 3.0], vec![2.0, 2.0]], vec![Sign::Pos, Sign::Neg, Sign::Pos], 1)
            .unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x_1,x_2,label,split\n"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), data);
        let pts = read_augmented_points(&buf[..]).unwrap();
        assert_eq!(pts[1], vec![-1.5, 3.0, 1.0]);
    }

    #[test]
    fn dataset_rejects_interleaved_split() {
        let text = "x_1,label,split\n1,1,test\n2,-1,train\n";
        assert!(read_dataset(text.as_bytes()).is_err());
        assert!(read_dataset("x_1,label\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![ReportRow {
            n: 3,
            d: 10,
            setting: "ctanh(8)".into(),
            train_error: 0.1234,
            test_error: 1.0 / 3.0,
            chosen_lr: 0.01,
            epochs: 77,
        }];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("n,d,setting,train_error,test_error,chosen_lr,epochs\n"));
        assert_eq!(read_report(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn network_file_kinds() {
        let relu = ReluNetwork::new(1, vec![AffineUnit::new(vec![1.0], 0.1).unwrap()], vec![], -0.3).unwrap();
        let f = NetworkFile::Relu(relu);
        let json = f.to_json().unwrap();
        assert!(json.contains("\"kind\": \"relu\""));
        assert_eq!(NetworkFile::from_json(&json).unwrap(), f);
        assert!(NetworkFile::from_json("{\"kind\": \"relu\", \"dim\": 0}").is_err());
    }
}
