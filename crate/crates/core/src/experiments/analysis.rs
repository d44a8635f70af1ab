use crate::currents::{linear_fit, DisplacementTrace};

pub fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
}

pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| b.1.total_cmp(a.1))
        .map(|(k, _)| k)
}

/// Interior indices k with v[k−1] < v[k] ≥ v[k+1].
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k - 1] < values[k] && values[k] >= values[k + 1])
        .collect()
}

/// Least-squares slope of ln y against ln x over points with x in [lo, hi] and y > 0.
pub fn loglog_slope(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x >= lo && **x <= hi && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    (pts.len() >= 2).then(|| linear_fit(&pts).0)
}

/// Displacement slope over the second half of the trace.
pub fn late_slope(trace: &DisplacementTrace) -> f64 {
    let end = *trace.times.last().unwrap_or(&0.0);
    trace.slope(0.5 * end, end)
}

/// Exponential decay rate of the oscillation envelope around the final value.
pub fn decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let last = *values.last()?;
    let dev: Vec<f64> = values.iter().map(|v| (v - last).abs()).collect();
    let pts: Vec<(f64, f64)> = local_maxima(&dev)
        .into_iter()
        .filter(|&k| dev[k] > 1e-6)
        .map(|k| (times[k], dev[k].ln()))
        .collect();
    (pts.len() >= 2).then(|| -linear_fit(&pts).0)
}
