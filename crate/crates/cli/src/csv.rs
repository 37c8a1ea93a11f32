//! Result rows and deterministic CSV output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// The mandatory header of every benchmark CSV.
pub const CSV_HEADER: &str = "replicate,method,d,dy,eta,n_steps,metric,diverged,seconds";

/// One benchmark result: a single method evaluated on a single replicate
/// (or, for the landscape experiment, one grid point of one instance).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub replicate: usize,
    pub method: String,
    pub d: usize,
    pub dy: usize,
    /// Method-specific tuning value: η for midpoint methods, the winning ζ
    /// for DPS, 0 otherwise.
    pub eta: f64,
    pub n_steps: usize,
    /// Sliced Wasserstein or W2 depending on the experiment, capped at 10
    /// on divergence.
    pub metric: f64,
    /// Number of diverged chains behind this row.
    pub diverged: usize,
    /// Wall-clock seconds, 0 unless timing was enabled.
    pub seconds: f64,
}

/// Sort rows into their canonical output order: by replicate, then method
/// label. The sort is stable, so rows within one (replicate, method) group
/// keep their production order (e.g. ascending η).
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.replicate
            .cmp(&b.replicate)
            .then_with(|| a.method.cmp(&b.method))
    });
}

/// Render rows (assumed sorted) to CSV text.
pub fn format_rows(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.replicate, r.method, r.d, r.dy, r.eta, r.n_steps, r.metric, r.diverged, r.seconds
        );
    }
    out
}

/// Sort rows and write them to `path`.
pub fn write_rows(path: &Path, rows: &mut Vec<ResultRow>) -> Result<()> {
    sort_rows(rows);
    std::fs::write(path, format_rows(rows))?;
    Ok(())
}

/// Mean and normal-approximation 95% confidence half-width of `values`.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, 1.96 * (var / n as f64).sqrt())
}
