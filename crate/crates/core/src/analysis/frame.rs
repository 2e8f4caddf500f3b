use crate::metrics::{MetricRow, METRIC_COLUMNS};
use crate::stats::Columnar;

/// Column-major numeric table. Absent severity is stored as NaN.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    columns: Vec<(String, Vec<f64>)>,
    n_rows: usize,
}

impl Frame {
    /// Builds a frame from named columns of equal length.
    ///
    /// # Panics
    ///
    /// If the columns differ in length.
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Self {
        let n_rows = columns.first().map_or(0, |(_, c)| c.len());
        assert!(
            columns.iter().all(|(_, c)| c.len() == n_rows),
            "frame columns must have equal length"
        );
        Frame { columns, n_rows }
    }

    /// Every numeric metric column of the rows.
    pub fn from_rows(rows: &[MetricRow]) -> Self {
        let columns = METRIC_COLUMNS
            .iter()
            .skip(1)
            .map(|&name| {
                let values = rows
                    .iter()
                    .map(|r| r.value(name).expect("METRIC_COLUMNS are all numeric after `component`"))
                    .collect();
                (name.to_owned(), values)
            })
            .collect();
        Frame {
            columns,
            n_rows: rows.len(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    /// Rows for which `keep(row_index)` holds.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Frame {
        let idx: Vec<usize> = (0..self.n_rows).filter(|&i| keep(i)).collect();
        Frame {
            columns: self
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), idx.iter().map(|&i| c[i]).collect()))
                .collect(),
            n_rows: idx.len(),
        }
    }

    /// Rows flagged vulnerable; every row when the frame has no `is_defective` column.
    pub fn vulnerable(&self) -> Frame {
        match self.get("is_defective") {
            Some(col) => self.filter(|i| col[i] == 1.0),
            None => self.clone(),
        }
    }

    /// Rows with a severity score.
    pub fn with_severity(&self) -> Frame {
        match self.get("severity") {
            Some(col) => self.filter(|i| !col[i].is_nan()),
            None => self.filter(|_| false),
        }
    }
}

impl Columnar for Frame {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.get(name).map(<[f64]>::to_vec)
    }
}
