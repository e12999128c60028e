use std::fmt::Write as _;
use std::path::Path;

use crate::classifiers::{Label, LabeledSet};
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureVector};
use crate::serde_ext::{fmt_f64, parse_f64};

/// Feature CSV: `id,label,<feature columns>`, one row per nodule. The label
/// cell is `1`, `-1` or empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub layout: FeatureLayout,
    pub ids: Vec<String>,
    pub labels: Vec<Option<Label>>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(layout: FeatureLayout) -> Self {
        Self {
            layout,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: impl Into<String>, v: FeatureVector) -> Result<()> {
        let id = id.into();
        if v.values.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.layout.len()),
                actual: format!("{} features for {id}", v.values.len()),
            });
        }
        if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "row id {id:?} cannot be written to CSV"
            )));
        }
        self.ids.push(id);
        self.labels.push(v.label);
        self.rows.push(v.values);
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            layout: self.layout,
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Every row must carry a label.
    pub fn to_labeled_set(&self) -> Result<LabeledSet> {
        let labels = self
            .labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::invalid(format!("row {id} has no label"))))
            .collect::<Result<Vec<_>>>()?;
        LabeledSet::new(self.rows.clone(), labels)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,label");
        for name in self.layout.column_names() {
            out.push(',');
            out.push_str(&name);
        }
        out.push('\n');
        for ((id, label), row) in self.ids.iter().zip(&self.labels).zip(&self.rows) {
            out.push_str(id);
            out.push(',');
            if let Some(l) = label {
                let _ = write!(out, "{l}");
            }
            for v in row {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "empty feature table"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "id" || cols[1] != "label" {
            return Err(Error::parse(origin, "header must start with id,label"));
        }
        let layout = FeatureLayout::from_column_names(&cols[2..])
            .map_err(|e| Error::parse(origin, e.to_string()))?;
        let mut table = FeatureTable::new(layout);
        for (n, line) in lines {
            let bad = |msg: String| Error::parse(origin, format!("line {}: {msg}", n + 1));
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != cols.len() {
                return Err(bad(format!(
                    "expected {} cells, found {}",
                    cols.len(),
                    cells.len()
                )));
            }
            let label = match cells[1] {
                "" => None,
                "1" | "+1" => Some(Label::Malignant),
                "-1" => Some(Label::Benign),
                other => return Err(bad(format!("bad label {other:?}"))),
            };
            let values = cells[2..]
                .iter()
                .map(|c| match parse_f64(c) {
                    Some(v) if v.is_finite() => Ok(v),
                    _ => Err(bad(format!("bad feature value {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            table
                .push(cells[0], FeatureVector { values, label })
                .map_err(|e| bad(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let layout = FeatureLayout {
            gray_bins: 2,
            gradient_bins: 1,
        };
        let mut t = FeatureTable::new(layout);
        let vals = vec![0.1 + 0.2, 1.0 / 3.0, 1e-300, 12345.678, 0.5, 0.5, 1.0];
        t.push(
            "a",
            FeatureVector {
                values: vals.clone(),
                label: Some(Label::Malignant),
            },
        )
        .unwrap();
        t.push(
            "b",
            FeatureVector {
                values: vals,
                label: None,
            },
        )
        .unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with(
            "id,label,f_diam_mm,f_aspect,f_area_mm2,f_perim_mm,f_gh_00,f_gh_01,f_ogh_00\n"
        ));
        let back = FeatureTable::from_csv(&csv, Path::new("t.csv")).unwrap();
        assert_eq!(back, t);
        assert!(back.to_labeled_set().is_err());
    }

    #[test]
    fn rejects_malformed_rows() {
        let hdr = FeatureLayout::default().column_names().join(",");
        let short = format!("id,label,{hdr}\na,1,0.5\n");
        assert!(FeatureTable::from_csv(&short, Path::new("x")).is_err());
        let row = vec!["0"; 29].join(",");
        let bad_label = format!("id,label,{hdr}\na,2,{row}\n");
        assert!(FeatureTable::from_csv(&bad_label, Path::new("x")).is_err());
        let ok = format!("id,label,{hdr}\na,-1,{row}\n");
        assert_eq!(
            FeatureTable::from_csv(&ok, Path::new("x")).unwrap().len(),
            1
        );
    }
}
