//! Counterexample scans, gate protocols and validation runs behind the CLI.

pub mod entanglement;
pub mod gates;
pub mod output;
pub mod validate;
pub mod wigner_scan;

pub use output::{num, sha256_hex, OutputFile, RunManifest, Table};

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Location and value of the maximum of sampled `y(x)`, refined by the parabola
/// through the best sample and its two neighbours.
pub fn parabolic_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = y
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > y[best] { i } else { best });
    if k == 0 || k + 1 == y.len() {
        return (x[k], y[k]);
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    // Newton form: y = y0 + a (x - x0) + b (x - x0)(x - x1)
    let a = (y1 - y0) / (x1 - x0);
    let b = ((y2 - y1) / (x2 - x1) - a) / (x2 - x0);
    if b >= 0.0 {
        return (x1, y1);
    }
    let xv = 0.5 * (x0 + x1) - a / (2.0 * b);
    let yv = y0 + a * (xv - x0) + b * (xv - x0) * (xv - x1);
    (xv, yv)
}
