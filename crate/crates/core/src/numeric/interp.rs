//! Piecewise cubic Hermite curves on strictly increasing abscissae.

/// Monotone (Fritsch–Butland) derivative estimates, as used by PCHIP.
pub fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Hermite {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == ds.len());
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        Self { xs, ys, ds }
    }

    pub fn pchip(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let ds = pchip_slopes(&xs, &ys);
        Self::new(xs, ys, ds)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Index `i` of the segment `[x_i, x_{i+1}]` holding `x` (clamped to the ends).
    pub fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    fn basis(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.ds[i] * h, self.ds[i + 1] * h);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        (value, deriv)
    }

    /// Value at `x`; outside the node range the end cubic is extrapolated.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        if x == self.xs[i] {
            return self.ys[i];
        }
        if x == self.xs[i + 1] {
            return self.ys[i + 1];
        }
        self.basis(i, x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.basis(self.segment(x), x).1
    }

    /// Solves `eval(x) = y` for a nondecreasing curve, restricted to the node
    /// range. Returns `None` when `y` lies outside `[ys[0], ys[last]]`.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let n = self.ys.len();
        if !(y >= self.ys[0] && y <= self.ys[n - 1]) {
            return None;
        }
        let p = self.ys.partition_point(|&v| v < y);
        if p < n && self.ys[p] == y {
            return Some(self.xs[p]);
        }
        let i = p.saturating_sub(1).min(n - 2);
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.basis(i, mid).0 < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] < w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduced_with_exact_slopes() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
        let ys = xs.iter().map(|x| x * x * x).collect();
        let ds = xs.iter().map(|x| 3.0 * x * x).collect();
        let h = Hermite::new(xs, ys, ds);
        for &x in &[0.1, 0.55, 1.3, 1.99] {
            assert!((h.eval(x) - x * x * x).abs() < 1e-13);
            assert!((h.derivative(x) - 3.0 * x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone() {
        let xs = vec![0.0, 0.1, 0.2, 0.5, 0.9, 1.0];
        let ys = vec![0.0, 0.01, 0.3, 0.31, 0.99, 1.0];
        let h = Hermite::pchip(xs, ys);
        let mut prev = -1.0;
        for i in 0..=1000 {
            let v = h.eval(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trips() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x + x).collect();
        let h = Hermite::pchip(xs, ys);
        for &x in &[0.0, 0.03, 0.4, 0.77, 1.0] {
            let y = h.eval(x);
            assert!((h.inverse(y).unwrap() - x).abs() < 1e-12);
        }
        assert!(h.inverse(2.5).is_none());
    }
}
