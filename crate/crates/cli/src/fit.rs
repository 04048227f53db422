//! Least-squares line fits through the origin.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub residual_rms: f64,
    pub point_count: usize,
}

/// Slope of the best `y = a x` fit: `a = sum(xy) / sum(x^2)`.
pub fn fit_through_origin(points: &[(f64, f64)]) -> Result<FitResult, String> {
    if points.len() < 2 {
        return Err(format!("need at least 2 points, got {}", points.len()));
    }
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx <= 0.0 {
        return Err("all x values vanish; slope is undefined".into());
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let ss: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    Ok(FitResult {
        slope,
        residual_rms: (ss / points.len() as f64).sqrt(),
        point_count: points.len(),
    })
}

/// Ordinary least squares `y = a x + b`; used for log-log scaling checks.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64), String> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err("need at least 2 points".into());
    }
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err("degenerate x values".into());
    }
    let a = (n * sxy - sx * sy) / denom;
    let b = (sy - a * sx) / n;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_has_zero_residual() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let fit = fit_through_origin(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.residual_rms, 0.0, epsilon = 1e-14);
        assert_eq!(fit.point_count, 5);
    }

    #[test]
    fn closed_form_two_points() {
        let fit = fit_through_origin(&[(1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(fit.slope, 7.0 / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(fit_through_origin(&[(1.0, 1.0)]).is_err());
        assert!(fit_through_origin(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }
}
