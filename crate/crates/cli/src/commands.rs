use attrition::dist::Family;
use attrition::refine::{selection_sweep, SelectionConfig, SelectionExperiment, DEFAULT_DELTAS};
use attrition::verify::{best_response_gap, deviation_grid, quantile_types, Profile, VerificationReport};
use attrition::{
    Anchor, ClosedForm, DistSpec, EquilibriumFamily, HazardPotential, Player, Solution, StoppingTime,
    TypeDistribution, Upper,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{AnchorArgs, Cli, Format, Mode, PlotArgs, RefineArgs, SolveArgs, VerifyArgs};
use crate::error::CliError;
use crate::format::{emit, num, table, to_json};
use crate::svg::{Plot, Series};

/// Largest integral-identity residual accepted by `verify`.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Everything needed to rebuild one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dist: DistSpec,
    pub anchor: AnchorSpec,
    pub delta: f64,
    pub grid: usize,
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorSpec {
    Gamma(f64),
    C(f64),
    Theta1(f64),
}

impl AnchorSpec {
    fn from_args(a: &AnchorArgs) -> Self {
        match (a.gamma, a.c, a.theta1) {
            (Some(g), _, _) => AnchorSpec::Gamma(g),
            (_, Some(c), _) => AnchorSpec::C(c),
            (_, _, Some(t)) => AnchorSpec::Theta1(t),
            _ => unreachable!("clap requires one anchor"),
        }
    }
}

pub fn load_dist(arg: Option<&str>) -> Result<(DistSpec, TypeDistribution), CliError> {
    let raw = arg.ok_or_else(|| CliError::Config("--dist is required".into()))?;
    let text = match raw.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?,
        None => raw.to_string(),
    };
    let spec: DistSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad distribution spec: {e}")))?;
    let dist = TypeDistribution::from_spec(&spec)?;
    Ok((spec, dist))
}

impl RunConfig {
    pub fn family(&self) -> Result<EquilibriumFamily, CliError> {
        let dist = TypeDistribution::from_spec(&self.dist)?;
        let anchor = match self.anchor {
            AnchorSpec::Gamma(gamma) => {
                if self.delta != 1.0 {
                    return Err(CliError::Config(
                        "--gamma indexes the undiscounted families; use --c together with --delta".into(),
                    ));
                }
                let cf = match *dist.family() {
                    Family::Exponential { lambda } => ClosedForm::ExpGamma { lambda, gamma },
                    Family::Uniform01 => ClosedForm::UniformGamma { gamma },
                    _ => {
                        return Err(CliError::Config(
                            "--gamma applies to the exponential and uniform families only".into(),
                        ))
                    }
                };
                cf.validate()?;
                Anchor::C(cf.c())
            }
            AnchorSpec::C(c) => Anchor::C(c),
            AnchorSpec::Theta1(t) => Anchor::Theta1(t),
        };
        Ok(EquilibriumFamily::new(HazardPotential::new(dist, self.delta)?, anchor)?)
    }
}

fn run_config(cli: &Cli, args: &SolveArgs) -> Result<RunConfig, CliError> {
    let (spec, _) = load_dist(cli.dist.as_deref())?;
    Ok(RunConfig {
        dist: spec,
        anchor: AnchorSpec::from_args(&args.anchor),
        delta: args.delta,
        grid: cli.grid,
        tail: cli.tail,
    })
}

/// JSON number, or its spelled-out form when not finite.
fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}

fn upper_value(u: Upper) -> f64 {
    u.as_f64()
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct Classification {
    lower: f64,
    upper: String,
    lambda_lower: String,
    lambda_upper: String,
    lower_divergent: bool,
    upper_divergent: bool,
    case: String,
}

pub fn classify(cli: &Cli) -> Result<(), CliError> {
    let (_, dist) = load_dist(cli.dist.as_deref())?;
    let hp = HazardPotential::new(dist.clone(), 1.0)?;
    let lim = hp.limits();
    let case = hp.classify()?;
    let show = |v: f64, div: bool, sign: f64| if div { num(sign * f64::INFINITY) } else { num(v) };
    let c = Classification {
        lower: dist.lower(),
        upper: num(upper_value(dist.upper())),
        lambda_lower: show(lim.lower, lim.lower_divergent, -1.0),
        lambda_upper: show(lim.upper, lim.upper_divergent, 1.0),
        lower_divergent: lim.lower_divergent,
        upper_divergent: lim.upper_divergent,
        case: case.to_string(),
    };
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&c)?,
        Format::Csv => format!(
            "lower,upper,lambda_lower,lambda_upper,case\n{},{},{},{},{}\n",
            num(c.lower),
            c.upper,
            c.lambda_lower,
            c.lambda_upper,
            c.case
        ),
        Format::Svg => return Err(CliError::Config("classify has no svg output".into())),
    };
    emit(cli.out.as_deref(), &text)
}

// ---------------------------------------------------------------- solve

/// Grid from the bottom of the support with the thresholds added.
fn row_types(fam: &EquilibriumFamily, sol: &Solution, n: usize, tail: f64) -> Result<Vec<f64>, CliError> {
    let d = fam.dist();
    let mut pts = attrition::type_grid(d, d.lower(), n, tail)?;
    let mut extra = vec![d.lower(), fam.theta1()];
    for u in [sol.sigma1.forever_threshold(), sol.sigma2.forever_threshold()] {
        if let Upper::Finite(t) = u {
            if t <= *pts.last().unwrap() {
                extra.push(t);
            }
        }
    }
    attrition::equilibrium::merge_points(&mut pts, &extra);
    Ok(pts)
}

fn stop(s: StoppingTime) -> f64 {
    s.as_f64()
}

pub fn solve(cli: &Cli, args: &SolveArgs) -> Result<(), CliError> {
    let cfg = run_config(cli, args)?;
    let fam = cfg.family()?;
    let sol = fam.solve(cfg.grid, cfg.tail)?;
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => solution_csv(&fam, &sol, &cfg)?,
        Format::Json => {
            let rows = sol.rows(&row_types(&fam, &sol, cfg.grid, cfg.tail)?)?;
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "theta": jnum(r.theta),
                        "k": jnum(r.k),
                        "sigma1": jnum(stop(r.sigma1)),
                        "sigma2": jnum(stop(r.sigma2)),
                    })
                })
                .collect();
            to_json(&json!({
                "config": cfg,
                "family": {
                    "C": fam.c(),
                    "theta1": fam.theta1(),
                    "delta": fam.delta(),
                    "case": fam.case().to_string(),
                    "player1_forever": jnum(upper_value(sol.sigma1.forever_threshold())),
                    "player2_forever": jnum(upper_value(sol.sigma2.forever_threshold())),
                },
                "rows": rows,
            }))?
        }
        Format::Svg => solution_svg(&fam, &sol)?,
    };
    emit(cli.out.as_deref(), &text)
}

pub fn solution_csv(fam: &EquilibriumFamily, sol: &Solution, cfg: &RunConfig) -> Result<String, CliError> {
    let rows = sol.rows(&row_types(fam, sol, cfg.grid, cfg.tail)?)?;
    let mut s = String::from("theta,k,sigma1,sigma2\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            num(r.theta),
            num(r.k),
            num(stop(r.sigma1)),
            num(stop(r.sigma2))
        ));
    }
    Ok(s)
}

/// Player 1 is dashed for the exponential family and solid otherwise.
fn solution_svg(fam: &EquilibriumFamily, sol: &Solution) -> Result<String, CliError> {
    let d = fam.dist();
    let hi = match d.upper() {
        Upper::Finite(b) => b,
        Upper::Infinite => d.quantile(0.98)?,
    };
    let lo = d.lower();
    let n = 200;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut curves = Vec::new();
    for c in [&sol.sigma1, &sol.sigma2] {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| {
                let x = x.min(d.effective_upper(1e-12).unwrap_or(x));
                Ok((x, stop(c.eval(x)?)))
            })
            .collect::<Result<_, attrition::Error>>()?;
        curves.push(pts);
    }
    let top1 = curves[0].iter().map(|p| p.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let top2 = curves[1].iter().map(|p| p.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let ymax = if top1 > 0.0 { top2.max(top1).min(10.0 * top1) } else { top2.max(1.0) };
    let p1_dashed = matches!(d.family(), Family::Exponential { .. });
    let plot = Plot {
        title: format!("C = {}, θ₁ = {}", num(fam.c()), num(fam.theta1())),
        x_range: (lo, hi),
        y_range: (0.0, ymax),
        series: vec![
            Series { label: "σ₁".into(), dashed: p1_dashed, points: curves[0].clone() },
            Series { label: "σ₂".into(), dashed: !p1_dashed, points: curves[1].clone() },
        ],
    };
    Ok(plot.render())
}

// ---------------------------------------------------------------- verify

pub fn verification_report(cfg: &RunConfig, args: &VerifyArgs) -> Result<VerificationReport, CliError> {
    let fam = cfg.family()?;
    let sol = fam.solve(cfg.grid, cfg.tail)?;
    let mut profile = Profile::from_solution(&sol);
    if args.tamper {
        profile.sigma1 = profile.sigma1.scaled(2.0);
    }
    let types = quantile_types(profile.dist(), args.types, cfg.tail)?;
    let dev = deviation_grid(profile.deviation_span(cfg.tail)?, args.deviations)?;
    Ok(best_response_gap(&profile, &types, &dev)?)
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> Result<(), CliError> {
    let cfg = run_config(cli, &args.solve)?;
    let report = verification_report(&cfg, args)?;
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("player,theta,assigned,best_deviation,gain,flagged\n");
            for r in &report.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    if r.player == Player::One { 1 } else { 2 },
                    num(r.theta),
                    num(stop(r.assigned)),
                    num(r.best_deviation),
                    num(r.gain),
                    r.flagged
                ));
            }
            s
        }
        Format::Svg => return Err(CliError::Config("verify has no svg output".into())),
    };
    emit(cli.out.as_deref(), &text)?;
    if !report.passed {
        return Err(CliError::VerificationFailed(format!(
            "max gain {} exceeds tolerance {} ({} rows flagged)",
            num(report.max_gain),
            num(report.tolerances.effective),
            report.flagged().count()
        )));
    }
    if report.identity_residual > IDENTITY_TOL {
        return Err(CliError::VerificationFailed(format!(
            "integral identity residual {} exceeds {}",
            num(report.identity_residual),
            num(IDENTITY_TOL)
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- refine

pub const DEFAULT_CANDIDATES: [f64; 3] = [0.1, 0.5, 1.0];

pub fn refine_experiment(cli: &Cli, args: &RefineArgs) -> Result<SelectionExperiment, CliError> {
    let (_, dist) = load_dist(cli.dist.as_deref())?;
    let deltas: Vec<f64> = match args.mode {
        Mode::Al => {
            if !args.epsilon.is_empty() {
                return Err(CliError::Config("--epsilon needs --mode bt".into()));
            }
            if args.delta.is_empty() {
                DEFAULT_DELTAS.to_vec()
            } else {
                args.delta.clone()
            }
        }
        Mode::Bt => {
            if !args.delta.is_empty() {
                return Err(CliError::Config("--delta needs --mode al".into()));
            }
            let eps: Vec<f64> = if args.epsilon.is_empty() {
                DEFAULT_DELTAS.iter().map(|d| 1.0 - d).collect()
            } else {
                args.epsilon.clone()
            };
            if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                return Err(CliError::Config(format!("epsilon must lie in (0, 1), got {e}")));
            }
            eps.iter().map(|e| 1.0 - e).collect()
        }
    };
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(CliError::Config(format!("delta must lie in (0, 1), got {d}")));
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("the schedule must approach 1 monotonically".into()));
    }
    let mut cands = args.c.clone();
    if !args.theta1.is_empty() {
        let hp = HazardPotential::new(dist.clone(), 1.0)?;
        let lim = hp.limits();
        if lim.lower_divergent {
            return Err(CliError::Config(
                "--theta1 needs a convergent lower limit of the potential; use --c".into(),
            ));
        }
        for &t in &args.theta1 {
            cands.push(hp.eval(t)? - lim.lower);
        }
    }
    if cands.is_empty() && !dist.upper().is_finite() {
        cands = DEFAULT_CANDIDATES.to_vec();
    }
    let cfg = SelectionConfig {
        grid: cli.grid,
        tail: cli.tail,
        ..SelectionConfig::default()
    };
    Ok(selection_sweep(&dist, &deltas, &cands, &cfg)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

/// Header line naming the run, then the body.
pub fn refine_table(x: &SelectionExperiment, mode: Mode) -> Result<String, CliError> {
    let label = serde_json::to_string(&x.dist).map_err(|e| CliError::Internal(e.to_string()))?;
    let mode = match mode {
        Mode::Al => "discounted payments",
        Mode::Bt => "behavioral types",
    };
    let support = if x.bounded { "bounded" } else { "unbounded" };
    let mut s = format!("# {label}, {support} support, perturbation: {mode}\n");
    let err_row = |c: &attrition::refine::SelectionCell, width: usize| {
        let mut r = vec![num(c.delta), num(c.c)];
        r.push(format!("error: {}", c.error.as_deref().unwrap_or("")));
        r.resize(width, String::new());
        r
    };
    if x.bounded {
        let rows: Vec<Vec<String>> = x
            .cells
            .iter()
            .map(|c| {
                if c.error.is_some() {
                    return err_row(c, 6);
                }
                vec![
                    num(c.delta),
                    num(c.c),
                    opt(c.forced_c),
                    opt(c.a_bar_1),
                    opt(c.max_gain),
                    opt(c.backward_residual),
                ]
            })
            .collect();
        s.push_str(&table(
            &["delta", "C", "forced_C", "a_bar_1", "max_gain", "backward_residual"],
            &rows,
        ));
        if x.unique_zero() {
            s.push_str("unique C=0 at every δ\n");
        } else {
            s.push_str("forced C is not 0 in every cell\n");
        }
    } else {
        let rows: Vec<Vec<String>> = x
            .cells
            .iter()
            .map(|c| {
                if c.error.is_some() {
                    return err_row(c, 6);
                }
                let bound = c.m_delta.map(|m| m / (1.0 - c.delta));
                vec![
                    num(c.delta),
                    num(c.c),
                    opt(c.m_delta),
                    opt(c.a_bar_1),
                    opt(bound),
                    opt(c.max_gain),
                ]
            })
            .collect();
        s.push_str(&table(&["delta", "C", "m_delta", "a_bar_1", "m_delta/(1-delta)", "max_gain"], &rows));
    }
    Ok(s)
}

pub fn refine(cli: &Cli, args: &RefineArgs) -> Result<(), CliError> {
    let x = refine_experiment(cli, args)?;
    match cli.format {
        Some(Format::Json) if cli.out.is_none() => emit(None, &to_json(&x)?),
        Some(Format::Csv | Format::Svg) => Err(CliError::Config("refine writes a table or json".into())),
        _ => {
            if let Some(out) = cli.out.as_deref() {
                emit(Some(out), &to_json(&x)?)?;
            }
            emit(None, &refine_table(&x, args.mode)?)
        }
    }
}

// ---------------------------------------------------------------- plot

pub fn figure(n: u8) -> Plot {
    let sample = |cf: ClosedForm, p: Player, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..=200)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 200.0;
                (x, cf.sigma(x, p).as_f64())
            })
            .collect()
    };
    match n {
        1 => {
            let cf = ClosedForm::ExpGamma { lambda: 1.0, gamma: 1.0 / 3.0 };
            Plot {
                title: "Exponential, λ = 1, γ = 1/3".into(),
                x_range: (0.0, 4.0),
                y_range: (0.0, 3.0),
                series: vec![
                    Series { label: "σ₁ = γθ²/2".into(), dashed: true, points: sample(cf, Player::One, 0.0, 4.0) },
                    Series { label: "σ₂ = θ²/(2γ)".into(), dashed: false, points: sample(cf, Player::Two, 0.0, 4.0) },
                ],
            }
        }
        2 => {
            let cf = ClosedForm::UniformGamma { gamma: 2.0 };
            Plot {
                title: "Uniform on (0, 1), γ = 2".into(),
                x_range: (0.0, 1.0),
                y_range: (0.0, 3.0),
                series: vec![
                    Series { label: "σ₁ with γ = 2".into(), dashed: false, points: sample(cf, Player::One, 0.0, 0.995) },
                    Series { label: "σ₂ with γ = 2".into(), dashed: true, points: sample(cf, Player::Two, 0.0, 0.995) },
                ],
            }
        }
        _ => {
            let cf = ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.0, theta1: 2.0 };
            Plot {
                title: "Pareto, θ = 1, α = 1, θ₁ = 2".into(),
                x_range: (1.0, 3.0),
                y_range: (0.0, 3.0),
                series: vec![
                    Series { label: "σ₁, θ ≥ θ₁".into(), dashed: false, points: sample(cf, Player::One, 1.0, 3.0) },
                    Series { label: "σ₂, θ < 2".into(), dashed: true, points: sample(cf, Player::Two, 1.0, 3.0) },
                ],
            }
        }
    }
}

pub fn plot(cli: &Cli, args: &PlotArgs) -> Result<(), CliError> {
    if matches!(cli.format, Some(Format::Csv | Format::Json)) {
        return Err(CliError::Config("plot only writes svg".into()));
    }
    emit(cli.out.as_deref(), &figure(args.figure).render())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trips() {
        for anchor in [AnchorSpec::Gamma(1.0 / 3.0), AnchorSpec::C(-0.25), AnchorSpec::Theta1(2.0)] {
            let cfg = RunConfig {
                dist: DistSpec::Pareto { theta_min: 1.0, alpha: 1.5 },
                anchor,
                delta: 0.9,
                grid: 300,
                tail: 1e-7,
            };
            let text = serde_json::to_string(&cfg).unwrap();
            let back: RunConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn run_config_rejects_unknown_fields() {
        let text = r#"{"dist":{"family":"uniform01"},"anchor":{"c":0},"delta":1,"grid":10,"tail":1e-6,"x":1}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn gamma_with_discounting_is_a_config_error() {
        let cfg = RunConfig {
            dist: DistSpec::Uniform01,
            anchor: AnchorSpec::Gamma(2.0),
            delta: 0.9,
            grid: 64,
            tail: 1e-6,
        };
        assert_eq!(cfg.family().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn figures_have_both_curves() {
        for n in 1..=3 {
            let p = figure(n);
            assert_eq!(p.series.len(), 2);
            assert!(p.series.iter().any(|s| s.dashed) && p.series.iter().any(|s| !s.dashed));
        }
    }
}
