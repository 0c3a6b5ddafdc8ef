use crate::dist::TypeDistribution;
use crate::error::{Error, Result};

/// Type grid on `(start, effective_upper(tail)]` with about `n` points.
///
/// About an eighth of the points are log-spaced just above `start`, half are
/// uniform in probability and a quarter are geometric in the survival
/// probability down to `tail`.
pub fn type_grid(d: &TypeDistribution, start: f64, n: usize, tail: f64) -> Result<Vec<f64>> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("grid needs at least 8 points, got {n}")));
    }
    let top = d.effective_upper(tail)?;
    if !(start >= d.lower() && start < top) {
        return Err(Error::InvalidParameter(format!(
            "grid start {start} must lie in [{}, {top})",
            d.lower()
        )));
    }
    let p0 = d.cdf(start)?;
    let s0 = 1.0 - p0;
    let n_log = n / 8;
    let n_tail = n / 4;
    let n_prob = n - n_log - n_tail;

    let mut pts = Vec::with_capacity(n + 2);
    for i in 1..=n_prob {
        let p = p0 + (1.0 - tail - p0) * i as f64 / n_prob as f64;
        pts.push(d.quantile(p)?);
    }
    let first = pts[0];
    for i in 0..n_log {
        // offsets from 1e-6 to 1 of the first probability node
        let e = -6.0 + 6.0 * i as f64 / n_log.max(2).saturating_sub(1) as f64;
        pts.push(start + (first - start) * 10f64.powf(e));
    }
    for i in 1..=n_tail {
        let t = i as f64 / n_tail as f64;
        let s = s0.powf(1.0 - t) * tail.powf(t);
        pts.push(d.effective_upper(s.clamp(tail, 1.0 - 1e-15))?);
    }
    pts.push(top);
    pts.retain(|&x| x > start && x <= top && x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1e-300));
    Ok(pts)
}

/// Inserts extra points into a sorted grid, keeping it strictly increasing.
pub fn merge_points(grid: &mut Vec<f64>, extra: &[f64]) {
    grid.extend_from_slice(extra);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1e-300));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let d = TypeDistribution::exponential(1.0).unwrap();
        let g = type_grid(&d, 0.0, 512, 1e-6).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.0 && g[0] < 1e-6);
        assert!((g.last().unwrap() - 1e6f64.ln()).abs() < 1e-12);
        assert!(g.len() > 480 && g.len() <= 513);
    }

    #[test]
    fn grid_starts_above_theta1() {
        let d = TypeDistribution::pareto(1.0, 1.0).unwrap();
        let g = type_grid(&d, 2.0, 64, 1e-6).unwrap();
        assert!(g[0] > 2.0 && g[0] < 2.0 + 1e-5);
        assert!(type_grid(&d, 0.5, 64, 1e-6).is_err());
    }

    #[test]
    fn merge_keeps_order() {
        let mut g = vec![0.1, 0.2, 0.3];
        merge_points(&mut g, &[0.25, 0.2, 0.05]);
        assert_eq!(g, vec![0.05, 0.1, 0.2, 0.25, 0.3]);
    }
}
