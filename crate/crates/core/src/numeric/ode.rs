//! Scalar Dormand–Prince 5(4) integrator with exact landing on output points.
//!
//! Stage and update sums are written relative to the first stage slope
//! (`y + h (c_i K1 + Σ a_ij (K_j − K1))`), which is algebraically identical to
//! the textbook form but keeps `y' = 1` solutions on the diagonal to rounding.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Step size fell below machine resolution of the abscissa.
    StepCollapse,
    /// Solution left the admissible region (or the right-hand side stopped
    /// being finite) and could not be recovered by shrinking the step.
    LeftDomain,
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Solution values at the leading targets that were reached.
    pub values: Vec<f64>,
    /// Abscissa of the last accepted step.
    pub last_x: f64,
    pub last_y: f64,
    pub stop: Option<Stop>,
}

/// Integrates `y' = rhs(x, y)` from `(x0, y0)` through `targets`, which must be
/// monotone in one direction away from `x0`. `admissible` rejects states that
/// leave the problem domain.
pub fn integrate<F, D>(
    rhs: F,
    admissible: D,
    x0: f64,
    y0: f64,
    targets: &[f64],
    cfg: &OdeConfig,
) -> Trajectory
where
    F: Fn(f64, f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let mut values = Vec::with_capacity(targets.len());
    let mut x = x0;
    let mut y = y0;
    let Some(&last) = targets.last() else {
        return Trajectory {
            values,
            last_x: x,
            last_y: y,
            stop: None,
        };
    };
    let dir = if last >= x0 { 1.0 } else { -1.0 };
    let span = (last - x0).abs();
    let mut h = dir * (span * 1e-3).max(1e-6 * x0.abs().max(1e-300)).min(span.max(f64::MIN_POSITIVE));
    let mut steps = 0;
    let mut k = [0.0f64; 7];
    let mut rejected_by_domain = false;

    for &target in targets {
        while (target - x) * dir > 0.0 {
            if steps >= cfg.max_steps {
                return Trajectory {
                    values,
                    last_x: x,
                    last_y: y,
                    stop: Some(Stop::StepLimit),
                };
            }
            steps += 1;
            let clipped = (target - x) * dir <= h.abs();
            let step = if clipped { target - x } else { h };
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Trajectory {
                    values,
                    last_x: x,
                    last_y: y,
                    stop: Some(if rejected_by_domain {
                        Stop::LeftDomain
                    } else {
                        Stop::StepCollapse
                    }),
                };
            }
            match attempt(&rhs, &admissible, x, y, step, &mut k) {
                Some((y_new, err_raw)) => {
                    rejected_by_domain = false;
                    let scale = cfg.abs_tol + cfg.rel_tol * y.abs().max(y_new.abs());
                    let err = err_raw / scale;
                    if err <= 1.0 {
                        x = if clipped { target } else { x + step };
                        y = y_new;
                        let factor = if err == 0.0 {
                            5.0
                        } else {
                            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        if !clipped || factor < 1.0 {
                            h = step * factor;
                        }
                    } else {
                        h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
                    }
                }
                None => {
                    rejected_by_domain = true;
                    h = step * 0.25;
                }
            }
        }
        values.push(y);
    }
    Trajectory {
        values,
        last_x: x,
        last_y: y,
        stop: None,
    }
}

fn attempt<F, D>(rhs: &F, admissible: &D, x: f64, y: f64, h: f64, k: &mut [f64; 7]) -> Option<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    k[0] = rhs(x, y);
    if !k[0].is_finite() {
        return None;
    }
    for i in 1..7 {
        let mut acc = C[i] * k[0];
        for j in 1..i {
            acc += A[i][j] * (k[j] - k[0]);
        }
        let xi = x + C[i] * h;
        let yi = y + h * acc;
        if !admissible(xi, yi) {
            return None;
        }
        k[i] = rhs(xi, yi);
        if !k[i].is_finite() {
            return None;
        }
    }
    let mut incr = k[0];
    let mut err = 0.0;
    for i in 1..7 {
        incr += B[i] * (k[i] - k[0]);
        err += (B[i] - B_LOW[i]) * (k[i] - k[0]);
    }
    let y_new = y + h * incr;
    if !y_new.is_finite() || !admissible(x + h, y_new) {
        return None;
    }
    Some((y_new, (h * err).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let targets: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        let tr = integrate(|_, y| y, |_, _| true, 0.0, 1.0, &targets, &OdeConfig::default());
        assert!(tr.stop.is_none());
        for (t, y) in targets.iter().zip(&tr.values) {
            assert!((y - t.exp()).abs() < 1e-8 * t.exp(), "{t} {y}");
        }
    }

    #[test]
    fn unit_slope_tracks_abscissa() {
        let targets = [0.31, 0.77, 1.9, 3.3];
        let tr = integrate(|_, _| 1.0, |_, _| true, 0.2, 0.2, &targets, &OdeConfig::default());
        for (t, y) in targets.iter().zip(&tr.values) {
            assert!((t - y).abs() <= 1e-14 * t, "{t} {y}");
        }
    }

    #[test]
    fn backward_direction() {
        let targets = [0.5, 0.25, 0.125];
        let tr = integrate(|x, y| y / x, |_, _| true, 1.0, 2.0, &targets, &OdeConfig::default());
        for (t, y) in targets.iter().zip(&tr.values) {
            assert!((y - 2.0 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_truncates() {
        // y' = y², y(0) = 1 explodes at x = 1
        let targets = [0.5, 0.9, 1.5];
        let tr = integrate(|_, y| y * y, |_, y| y < 1e12, 0.0, 1.0, &targets, &OdeConfig::default());
        assert_eq!(tr.values.len(), 2);
        assert!(tr.stop.is_some());
        assert!(tr.last_x < 1.0);
    }
}
