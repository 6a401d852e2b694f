use std::fs;
use std::path::{Path, PathBuf};

use ndarray::ArrayView2;

use super::errors::ErrorSummary;
use crate::{Error, Result};

pub const SUMMARY_HEADER: &str = "model,metric,aggregation,max,min,median,mean,sd";

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub metric: String,
    /// `sequence` or `matrix`.
    pub aggregation: String,
    pub summary: ErrorSummary,
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        let s = &self.summary;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.model, self.metric, self.aggregation, s.max, s.min, s.median, s.mean, s.standard_deviation
        )
    }

    pub fn table(rows: &[SummaryRow]) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Rows of comma-separated values, first row at the top of the grid.
pub fn field_csv(field: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in field.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_field_csv(path: impl AsRef<Path>, field: ArrayView2<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, field_csv(field)).map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit binary PGM with a linear min–max mapping, plus a sidecar
/// `<path>.txt` recording the mapping. Returns the sidecar path.
pub fn write_pgm(path: impl AsRef<Path>, field: ArrayView2<f64>) -> Result<PathBuf> {
    let path = path.as_ref();
    let (h, w) = field.dim();
    if field.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("heatmap fields must be finite".into()));
    }
    let min = field.iter().copied().fold(f64::INFINITY, f64::min);
    let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(field.iter().map(|&v| {
        if span > 0.0 {
            ((v - min) / span * 255.0).round() as u8
        } else {
            0
        }
    }));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".txt");
    let sidecar = PathBuf::from(sidecar);
    let note = format!(
        "mapping=linear\nmin={min}\nmax={max}\npixel=round((value-min)/(max-min)*255)\nconstant_field={}\n",
        span == 0.0
    );
    fs::write(&sidecar, note).map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pgm_maps_min_to_black_and_max_to_white() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let sidecar = write_pgm(&path, array![[1.0, 2.0], [3.0, 5.0]].view()).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 64, 128, 255]);
        let note = fs::read_to_string(sidecar).unwrap();
        assert!(note.contains("min=1\n") && note.contains("max=5\n"));
    }

    #[test]
    fn summary_table_layout() {
        let row = SummaryRow {
            model: "persistence".into(),
            metric: "MSE".into(),
            aggregation: "sequence".into(),
            summary: ErrorSummary {
                max: 3.0,
                min: 1.0,
                median: 2.0,
                mean: 2.0,
                standard_deviation: 1.0,
            },
        };
        assert_eq!(
            SummaryRow::table(&[row]),
            "model,metric,aggregation,max,min,median,mean,sd\npersistence,MSE,sequence,3,1,2,2,1\n"
        );
        assert_eq!(field_csv(array![[1.5, 2.0]].view()), "1.5,2\n");
    }
}
