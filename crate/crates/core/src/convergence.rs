//! Empirical convergence orders.

/// Least-squares slope of `ln(error)` against `ln(n)`.
///
/// Returns `None` with fewer than two points or when some error is not
/// strictly positive (the logarithm is undefined).
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(n, e)| !(n > 0.0) || !(e > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
    let k = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_laws() {
        let first: Vec<_> = [10.0, 20.0, 40.0].iter().map(|&n| (n, 3.0 / n)).collect();
        assert!((loglog_slope(&first).unwrap() + 1.0).abs() < 1e-12);
        let second: Vec<_> = [10.0, 20.0].iter().map(|&n| (n, 1.0 / (n * n))).collect();
        assert!((loglog_slope(&second).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_for_zero_errors() {
        assert_eq!(loglog_slope(&[(10.0, 0.0), (20.0, 0.0)]), None);
        assert_eq!(loglog_slope(&[(10.0, 1.0)]), None);
    }
}
