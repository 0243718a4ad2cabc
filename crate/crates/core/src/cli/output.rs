//! CSV tables and summary statistics.

use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> csv::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn vector(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let (i, frac) = (h.floor() as usize, h - h.floor());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// `metric, repeats, median, q25, q75, iqr` per metric, NaNs dropped.
pub fn summary_table(metrics: &[(String, Vec<f64>)]) -> Table {
    let mut t = Table::new(&["metric", "repeats", "median", "q25", "q75", "iqr"]);
    for (name, values) in metrics {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        let (q25, q50, q75) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        t.push(vec![
            name.clone(),
            v.len().to_string(),
            num(q50),
            num(q25),
            num(q75),
            num(q75 - q25),
        ]);
    }
    t
}
