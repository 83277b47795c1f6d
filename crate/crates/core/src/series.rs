//! Growth series `n ↦ log count` (or `n ↦ H_n`) and their fitted linear rate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries within `log 2` of the ceiling count as saturated: with fewer than
/// two sample points per counted set, the count can no longer double.
const SATURATION_MARGIN: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Logarithm of a count.
    LogCount,
    /// Partition entropy `H_μ(P^n)`.
    Entropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub n: usize,
    pub value: f64,
    /// Whether the underlying count is exact rather than a greedy bound.
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    /// Root-mean-square deviation from the fitted line inside the window.
    pub residual: f64,
    pub window: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub method: String,
    pub quantity: Quantity,
    pub entries: Vec<SeriesEntry>,
    /// Largest value the sample can produce (log of the sample size); entries
    /// at the ceiling carry no growth information.
    pub ceiling: Option<f64>,
    pub fit: RateFit,
}

impl GrowthSeries {
    pub fn new(
        method: impl Into<String>,
        quantity: Quantity,
        entries: Vec<SeriesEntry>,
        ceiling: Option<f64>,
        window: Option<(usize, usize)>,
    ) -> Result<Self> {
        let fit = fit_rate(&entries, ceiling, window)?;
        Ok(GrowthSeries { method: method.into(), quantity, entries, ceiling, fit })
    }

    /// Series of logarithms of counts.
    pub fn from_counts(
        method: impl Into<String>,
        counts: &[(usize, usize, bool)],
        sample_size: Option<usize>,
        window: Option<(usize, usize)>,
    ) -> Result<Self> {
        let entries = counts
            .iter()
            .map(|&(n, c, exact)| SeriesEntry { n, value: (c.max(1) as f64).ln(), exact })
            .collect();
        Self::new(method, Quantity::LogCount, entries, sample_size.map(|s| (s as f64).ln()), window)
    }

    pub fn rate(&self) -> f64 {
        self.fit.rate
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn all_exact(&self) -> bool {
        self.entries.iter().all(|e| e.exact)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].value >= w[0].value)
    }

    pub fn refit(&mut self, window: Option<(usize, usize)>) -> Result<()> {
        self.fit = fit_rate(&self.entries, self.ceiling, window)?;
        Ok(())
    }

    /// `n,<value>,h_n` rows with `h_n = value / n`.
    pub fn to_csv(&self) -> String {
        let column = match self.quantity {
            Quantity::LogCount => "log_count",
            Quantity::Entropy => "H_n",
        };
        let mut out = format!("n,{column},h_n\n");
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.n, e.value, e.value / e.n as f64).unwrap();
        }
        out
    }
}

/// Least-squares slope of `value` against `n`.
///
/// The default window is the tail `[⌊m/2⌋, m]`, where `m` is the last `n`
/// before the series comes within `log 2` of `ceiling` (or the last `n` if it
/// never does).
pub fn fit_rate(entries: &[SeriesEntry], ceiling: Option<f64>, window: Option<(usize, usize)>) -> Result<RateFit> {
    if entries.len() < 4 {
        return Err(Error::SeriesTooShort(entries.len()));
    }
    if entries.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(Error::InvalidParameter("series entries must be strictly increasing in n".into()));
    }
    if entries.iter().any(|e| !e.value.is_finite()) {
        return Err(Error::InvalidParameter("series has a non-finite value".into()));
    }
    let last = entries.last().unwrap().n;
    let window = match window {
        Some((lo, hi)) => {
            if lo > hi || in_window(entries, lo, hi) < 2 {
                return Err(Error::InvalidParameter(format!("fit window ({lo}, {hi}) holds fewer than 2 entries")));
            }
            (lo, hi)
        }
        None => {
            let unsaturated = match ceiling {
                Some(c) => entries
                    .iter()
                    .take_while(|e| e.value < c - SATURATION_MARGIN - 1e-12)
                    .last()
                    .map_or(0, |e| e.n),
                None => last,
            };
            let tail = (unsaturated / 2, unsaturated);
            if in_window(entries, tail.0, tail.1) >= 2 { tail } else { (last / 2, last) }
        }
    };
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.n >= window.0 && e.n <= window.1)
        .map(|e| (e.n as f64, e.value))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - rate * (p.0 - mx)).powi(2)).sum::<f64>() / k).sqrt();
    Ok(RateFit { rate, residual, window })
}

fn in_window(entries: &[SeriesEntry], lo: usize, hi: usize) -> usize {
    entries.iter().filter(|e| e.n >= lo && e.n <= hi).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(values: &[f64]) -> Vec<SeriesEntry> {
        values.iter().enumerate().map(|(i, &v)| SeriesEntry { n: i + 1, value: v, exact: true }).collect()
    }

    #[test]
    fn constant_and_exact_lines() {
        let flat = fit_rate(&entries(&[3.0; 10]), None, None).unwrap();
        assert_eq!(flat.rate, 0.0);
        assert_eq!(flat.window, (5, 10));
        let ln2 = std::f64::consts::LN_2;
        let line: Vec<f64> = (1..=12).map(|n| n as f64 * ln2).collect();
        let fit = fit_rate(&entries(&line), None, None).unwrap();
        assert!((fit.rate - ln2).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
    }

    #[test]
    fn too_short() {
        assert_eq!(fit_rate(&entries(&[1.0, 2.0, 3.0]), None, None), Err(Error::SeriesTooShort(3)));
    }

    #[test]
    fn saturated_tail_is_skipped() {
        // doubles until the sample of 64 points is exhausted
        let ln2 = std::f64::consts::LN_2;
        let values: Vec<f64> = (1..=10).map(|n| (n.min(6) as f64) * ln2).collect();
        let fit = fit_rate(&entries(&values), Some(64f64.ln()), None).unwrap();
        assert_eq!(fit.window, (2, 4));
        assert!((fit.rate - ln2).abs() < 1e-14);
        let plain = fit_rate(&entries(&values), None, None).unwrap();
        assert!(plain.rate < 0.1);
    }

    #[test]
    fn explicit_window() {
        let values: Vec<f64> = (1..=8).map(|n| if n <= 4 { n as f64 } else { 4.0 }).collect();
        let fit = fit_rate(&entries(&values), None, Some((1, 4))).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-14);
        assert!(fit_rate(&entries(&values), None, Some((9, 12))).is_err());
    }

    #[test]
    fn csv_rows() {
        let s = GrowthSeries::from_counts("separated", &[(1, 2, true), (2, 4, true), (3, 8, true), (4, 16, true)], None, None)
            .unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("n,log_count,h_n\n1,"));
        assert_eq!(csv.lines().count(), 5);
    }
}
