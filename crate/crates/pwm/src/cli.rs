//! Experiment runner behind the `pwm` binary.
//!
//! Every subcommand takes the same parameter set; values come from flags, then
//! from a `--config` JSON file, then from built-in defaults. Artifacts go to
//! `--out-dir`, the config's `out_dir`, `$PWM_OUT_DIR`, or the working directory.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use pwm_core::certificate::log_grid;
use pwm_core::envelopes::DEFAULT_T_MAX;
use pwm_core::halfplane::{graded_grid, truncated_poisson_integral};
use pwm_core::{
    log_integral_1d, log_integral_radial, log_majorant_check, sinc_product_boundary, verify_envelope, BoundaryLogData,
    CoreError, FitRule, RepresentationPoint, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::construct::{construct_radial, ConstructOptions, DesignReport};
use crate::error::{PwmError, Result};
use crate::euclid::slice_projection_residuals;
use crate::grid::{plane_directions, Field, Grid, SampledFunction};
use crate::io;
use crate::motion::{group_fourier, hs_decay_profile, plancherel_consistency, MotionGroupFunction};
use crate::schrodinger::{uniqueness_experiment_mn, uniqueness_experiment_rn, ExperimentVerdict};
use crate::AnalyticField;

pub const OUT_DIR_ENV: &str = "PWM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pwm", version, about = "Paley–Wiener type experiments on ℝⁿ and the motion group M(2)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify ∫ θ(t)/(1+t²) dt as Convergent, Divergent or Inconclusive.
    Classify(Params),
    /// Build a certified radial function with |f̂| ≤ C e^{−θ}.
    Construct(Params),
    /// Compare f̂ on lines with the 1-D transform of the Radon projection.
    SliceCheck(Params),
    /// Check the Poisson log-majorant inequality for a sinc-product function.
    PoissonCheck(Params),
    /// Group Fourier matrix f̂(T_r) of an M(2) function.
    MnTransform(Params),
    /// Hilbert–Schmidt decay profile r ↦ ‖f̂(T_r)‖ with an envelope certificate.
    MnDecay(Params),
    /// Uniqueness experiment for the free Schrödinger flow on ℝⁿ.
    SchrodingerRn(Params),
    /// Uniqueness experiment for e^{itΔ} on M(2).
    SchrodingerMn(Params),
    /// Plancherel ratio ‖f‖² / ∫‖f̂(T_r)‖²_HS r dr across a battery.
    Plancherel(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Construct(_) => "construct",
            Command::SliceCheck(_) => "slice-check",
            Command::PoissonCheck(_) => "poisson-check",
            Command::MnTransform(_) => "mn-transform",
            Command::MnDecay(_) => "mn-decay",
            Command::SchrodingerRn(_) => "schrodinger-rn",
            Command::SchrodingerMn(_) => "schrodinger-mn",
            Command::Plancherel(_) => "plancherel",
        }
    }

    fn params(&self) -> &Params {
        match self {
            Command::Classify(p)
            | Command::Construct(p)
            | Command::SliceCheck(p)
            | Command::PoissonCheck(p)
            | Command::MnTransform(p)
            | Command::MnDecay(p)
            | Command::SchrodingerRn(p)
            | Command::SchrodingerMn(p)
            | Command::Plancherel(p) => p,
        }
    }
}

/// Experiment parameters; the same keys are accepted in the JSON config.
#[derive(Debug, Clone, Default, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Subcommand the config is meant for (config files only).
    #[arg(skip)]
    pub command: Option<String>,
    /// Envelope: zero, linear, sqrt, pow:a, log2damped or table:<path>.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Grid points per axis (N).
    #[arg(long)]
    #[serde(alias = "N")]
    pub n: Option<usize>,
    /// Grid half width (L).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(alias = "L")]
    pub half_width: Option<f64>,
    /// Angle samples on SO(2) (M).
    #[arg(long)]
    #[serde(alias = "M")]
    pub angles: Option<usize>,
    /// Mode band (B).
    #[arg(long)]
    #[serde(alias = "B")]
    pub band: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Support budget for construct.
    #[arg(long, allow_negative_numbers = true)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub inputs: Option<Vec<PathBuf>>,
    /// Representation parameter r.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    /// Sample or panel count.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub directions: Option<usize>,
    /// poisson-check function: sinc, sinc2 or sinc-sinc2.
    #[arg(long)]
    pub function: Option<String>,
    /// Random battery size.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub observe_n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub observe_half_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        Params { config: $hi.config.clone(), $($f: $hi.$f.clone().or_else(|| $lo.$f.clone()),)* }
    };
}

impl Params {
    fn over(&self, lower: &Params) -> Params {
        overlay!(self, lower; command, theta, dim, n, half_width, angles, band, t0, budget, input, inputs, r, r_max,
            points, directions, function, count, observe_n, observe_half_width, seed, out_dir)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(PwmError::Config { field: name.to_string(), reason: format!("must be positive, got {x}") })
            }
            _ => Ok(()),
        };
        positive("half_width", self.half_width)?;
        positive("t0", self.t0)?;
        positive("budget", self.budget)?;
        positive("r", self.r)?;
        positive("r_max", self.r_max)?;
        positive("observe_half_width", self.observe_half_width)?;
        for (name, v) in [
            ("dim", self.dim),
            ("n", self.n),
            ("angles", self.angles),
            ("points", self.points),
            ("directions", self.directions),
            ("count", self.count),
            ("observe_n", self.observe_n),
        ] {
            positive(name, v.map(|k| k as f64))?;
        }
        positive("band", self.band.map(|b| b as f64))?;
        Ok(())
    }

    fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
        v.clone().ok_or_else(|| PwmError::Config { field: name.to_string(), reason: "required".into() })
    }
}

/// Pass/fail of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CertificateFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CertificateFailure => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::CertificateFailure
        }
    }
}

pub fn load_config(path: &Path) -> Result<Params> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| PwmError::Config {
        field: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        reason: e.to_string(),
    })
}

fn resolve(cmd: &Command) -> Result<(Params, PathBuf)> {
    let flags = cmd.params();
    let merged = match &flags.config {
        Some(path) => {
            let file = load_config(path)?;
            if let Some(c) = &file.command {
                if c != cmd.name() {
                    return Err(PwmError::Config { field: "command".into(), reason: format!("config is for {c}, not {}", cmd.name()) });
                }
            }
            flags.over(&file)
        }
        None => flags.clone(),
    };
    merged.validate()?;
    let out = merged
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((merged, out))
}

struct Sink {
    dir: PathBuf,
}

impl Sink {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        io::write_file(&self.dir, name, contents)
    }

    /// Writes the main report and echoes it on stdout.
    fn report<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = io::to_json(value)?;
        self.write(name, &text)?;
        print!("{text}");
        Ok(())
    }
}

/// Runs one subcommand; errors map to exit status 1 in [`main_exit`].
pub fn run(cmd: &Command) -> Result<Outcome> {
    let (p, dir) = resolve(cmd)?;
    let sink = Sink { dir };
    match cmd {
        Command::Classify(_) => classify(&p, &sink),
        Command::Construct(_) => construct(&p, &sink),
        Command::SliceCheck(_) => slice_check(&p, &sink),
        Command::PoissonCheck(_) => poisson_check(&p, &sink),
        Command::MnTransform(_) => mn_transform(&p, &sink),
        Command::MnDecay(_) => mn_decay(&p, &sink),
        Command::SchrodingerRn(_) => schrodinger_rn(&p, &sink),
        Command::SchrodingerMn(_) => schrodinger_mn(&p, &sink),
        Command::Plancherel(_) => plancherel(&p, &sink),
    }
}

pub fn main_exit() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Usage errors are ordinary errors; 2 is reserved for certificate failures.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "Convergent",
        Verdict::Divergent => "Divergent",
        Verdict::Inconclusive => "Inconclusive",
    }
}

fn theta_of(p: &Params) -> Result<pwm_core::ThetaEnvelope> {
    io::parse_envelope(&Params::required(&p.theta, "theta")?)
}

fn classify(p: &Params, sink: &Sink) -> Result<Outcome> {
    let theta = theta_of(p)?;
    let dim = p.dim.unwrap_or(1);
    let v = if dim == 1 { log_integral_1d(&theta, DEFAULT_T_MAX, 4)? } else { log_integral_radial(&theta, dim, DEFAULT_T_MAX, 4)? };
    let evidence: Vec<_> = v.evidence.iter().map(|w| json!({"lo": w.lo, "hi": w.hi, "value": w.value, "cumulative": w.cumulative})).collect();
    sink.report(
        "classify.json",
        &json!({"theta": theta.name, "dim": dim, "verdict": verdict_str(v.verdict), "value": v.value, "tail": v.tail, "evidence": evidence}),
    )?;
    Ok(Outcome::from_pass(v.verdict != Verdict::Inconclusive))
}

fn construct(p: &Params, sink: &Sink) -> Result<Outcome> {
    let theta = theta_of(p)?;
    let dim = p.dim.unwrap_or(2);
    let budget = p.budget.unwrap_or(4.0);
    let opts = ConstructOptions { output_points: p.n.unwrap_or(128), ..ConstructOptions::default() };
    let c = match construct_radial(&theta, dim, budget, &opts) {
        Ok(c) => c,
        Err(PwmError::Core(CoreError::DivergentLogIntegral)) => {
            sink.report("construct.json", &json!({"theta": theta.name, "error": "DivergentLogIntegral"}))?;
            return Ok(Outcome::CertificateFailure);
        }
        Err(e) => return Err(e),
    };
    let design = DesignReport::new(&c.design, budget);
    let cert = &c.certificate;
    let pass = cert.passes() && design.support <= budget;
    sink.write("construct_function.json", &io::write_sampled(&c.function, None)?)?;
    let curve: Vec<(f64, f64)> = cert.y_grid.iter().cloned().zip(cert.residuals.iter().cloned()).collect();
    sink.write("construct_certificate.csv", &io::curve_csv(["radius", "residual"], &curve)?)?;
    sink.report(
        "construct.json",
        &json!({
            "theta": theta.name,
            "dim": dim,
            "design": design,
            "certificate": {"max_residual": cert.max_residual, "fitted_c": cert.fitted_c(), "violation_at": cert.violation_at, "passes": cert.passes()},
            "function": "construct_function.json",
            "passes": pass,
        }),
    )?;
    Ok(Outcome::from_pass(pass))
}

fn input_sampled(p: &Params) -> Result<Option<SampledFunction>> {
    match &p.input {
        Some(path) => Ok(Some(io::read_sampled(&std::fs::read_to_string(path)?)?.0)),
        None => Ok(None),
    }
}

fn input_motion(p: &Params) -> Result<MotionGroupFunction> {
    let path = Params::required(&p.input, "input")?;
    Ok(io::read_motion(&std::fs::read_to_string(path)?)?.0)
}

fn slice_check(p: &Params, sink: &Sink) -> Result<Outcome> {
    let tolerance = 1e-3;
    let resolution = p.n.unwrap_or(512);
    let input = input_sampled(p)?;
    let gauss;
    let (field, label): (&dyn Field, String) = match &input {
        Some(f) => (f, p.input.as_ref().map(|x| x.display().to_string()).unwrap_or_default()),
        None => {
            gauss = AnalyticField::new(2, 6.5, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
            (&gauss, "gaussian".to_string())
        }
    };
    if field.dim() != 2 {
        return Err(PwmError::Invalid("slice-check needs a planar function".into()));
    }
    let dirs = plane_directions(p.directions.unwrap_or(8));
    let lambdas: Vec<f64> = (0..16).map(|i| 0.25 + 0.75 * i as f64).collect();
    let res = slice_projection_residuals(field, &dirs, &lambdas, resolution)?;
    let angles: Vec<(f64, f64)> = dirs.iter().zip(&res).map(|(d, r)| (d[1].atan2(d[0]), *r)).collect();
    sink.write("slice_check.csv", &io::curve_csv(["angle", "residual"], &angles)?)?;
    let worst = res.iter().cloned().fold(0.0, f64::max);
    let pass = worst < tolerance;
    sink.report(
        "slice_check.json",
        &json!({"input": label, "resolution": resolution, "directions": dirs.len(), "max_residual": worst, "tolerance": tolerance, "passes": pass}),
    )?;
    Ok(Outcome::from_pass(pass))
}

fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-8 {
        Complex64::new(1.0, 0.0)
    } else {
        z.sin() / z
    }
}

fn poisson_check(p: &Params, sink: &Sink) -> Result<Outcome> {
    let name = p.function.clone().unwrap_or_else(|| "sinc".into());
    let (scales, g): (Vec<f64>, fn(Complex64) -> Complex64) = match name.as_str() {
        "sinc" => (vec![1.0], |z| (Complex64::i() * z).exp() * sinc(z)),
        "sinc2" => (vec![1.0, 1.0], |z| (Complex64::i() * z * 2.0).exp() * sinc(z) * sinc(z)),
        "sinc-sinc2" => (vec![1.0, 2.0], |z| (Complex64::i() * z * 3.0).exp() * sinc(z) * sinc(z * 2.0)),
        other => return Err(PwmError::Config { field: "function".into(), reason: format!("unknown function {other:?}") }),
    };
    let boundary = sinc_product_boundary(&scales, p.half_width.unwrap_or(2000.0))?;
    let count = p.points.unwrap_or(20);
    let pts: Vec<(f64, f64)> = (0..count).map(|i| (-3.0 + 0.3 * i as f64, 0.3 + 0.15 * i as f64)).collect();
    let rep = log_majorant_check(g, &boundary, &pts, 1e-6)?;
    let rows: Vec<_> = rep.points.iter().map(|q| json!({"x": q.x, "y": q.y, "lhs": q.lhs, "rhs": q.rhs, "margin": q.margin})).collect();
    let mut csv = String::from("x,y,lhs,rhs,margin\n");
    for q in &rep.points {
        csv.push_str(&format!("{},{},{},{},{}\n", q.x, q.y, q.lhs, q.rhs, q.margin));
    }
    sink.write("poisson_check.csv", &csv)?;
    // Divergence mechanism: P[−θ(|t|)](i) truncated to |t| ≤ T.
    let divergence = match &p.theta {
        Some(_) => {
            let theta = theta_of(p)?;
            let t = graded_grid(1.0, DEFAULT_T_MAX, 16, 16, 1);
            let b = BoundaryLogData::sample(t, |t| -theta.evaluate(t.abs()), None)?;
            let u = truncated_poisson_integral(&b, 0.0, 1.0)?;
            json!({"theta": theta.name, "t_max": DEFAULT_T_MAX, "truncated_integral_at_i": u})
        }
        None => serde_json::Value::Null,
    };
    let pass = rep.holds();
    sink.report(
        "poisson_check.json",
        &json!({"function": name, "min_margin": rep.min_margin, "tolerance": rep.tolerance, "passes": pass, "points": rows, "divergence": divergence}),
    )?;
    Ok(Outcome::from_pass(pass))
}

fn mn_transform(p: &Params, sink: &Sink) -> Result<Outcome> {
    let f = input_motion(p)?;
    let r = p.r.unwrap_or(1.0);
    let a = group_fourier(&f, RepresentationPoint::new(r)?, p.band)?;
    sink.write("mn_transform.json", &io::write_matrix(&a)?)?;
    println!("{}", serde_json::to_string(&json!({"r": r, "B": a.band, "hs_norm": a.hs_norm, "matrix": "mn_transform.json"}))?);
    Ok(Outcome::Pass)
}

fn mn_decay(p: &Params, sink: &Sink) -> Result<Outcome> {
    let f = input_motion(p)?;
    let theta = theta_of(p)?;
    let r_max = p.r_max.unwrap_or(0.9 * f.grid.nyquist());
    let rs: Vec<f64> = log_grid(r_max / 100.0, r_max, p.points.unwrap_or(48)).into_iter().filter(|r| *r > 0.0).collect();
    let prof = hs_decay_profile(&f, &rs, p.band)?;
    sink.write("mn_decay.csv", &io::curve_csv(["r", "hs_norm"], &prof)?)?;
    let (r, l): (Vec<f64>, Vec<f64>) = prof.iter().map(|&(r, h)| (r, h.ln())).unzip();
    let cert = verify_envelope(&r, &l, &theta, FitRule::LowerDecade);
    sink.report(
        "mn_decay.json",
        &json!({"theta": theta.name, "fitted_c": cert.fitted_c(), "max_residual": cert.max_residual, "violation_at": cert.violation_at, "passes": cert.passes(), "profile": "mn_decay.csv"}),
    )?;
    Ok(Outcome::from_pass(cert.passes()))
}

fn observation_grid(p: &Params, dim: usize) -> Result<Grid> {
    let n = p.observe_n.unwrap_or(if dim == 1 { 512 } else { 96 });
    Grid::new(dim, n, p.observe_half_width.unwrap_or(40.0))
}

fn schrodinger_rn(p: &Params, sink: &Sink) -> Result<Outcome> {
    let f = input_sampled(p)?.ok_or_else(|| PwmError::Config { field: "input".into(), reason: "required".into() })?;
    let theta = theta_of(p)?;
    let t0 = p.t0.unwrap_or(1.0);
    let rep = uniqueness_experiment_rn(&f, t0, &theta, observation_grid(p, f.grid.dim)?)?;
    sink.report("schrodinger_rn.json", &json!({"t0": t0, "report": rep}))?;
    Ok(Outcome::from_pass(rep.verdict != ExperimentVerdict::Contradiction))
}

fn schrodinger_mn(p: &Params, sink: &Sink) -> Result<Outcome> {
    let f = input_motion(p)?;
    let theta = theta_of(p)?;
    let t0 = p.t0.unwrap_or(1.0);
    let rep = uniqueness_experiment_mn(&f, t0, &theta, observation_grid(p, 2)?)?;
    sink.report("schrodinger_mn.json", &json!({"t0": t0, "report": rep}))?;
    Ok(Outcome::from_pass(rep.verdict != ExperimentVerdict::Contradiction && rep.mode_bound_holds))
}

/// Radial Gaussian mixture with three random weights and widths.
pub fn random_mixture(rng: &mut ChaCha8Rng, grid: Grid, angles: usize) -> Result<MotionGroupFunction> {
    let w: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.6..1.4))).collect();
    MotionGroupFunction::from_fn(grid, angles, grid.half_width, move |x, _| {
        let s2 = x[0] * x[0] + x[1] * x[1];
        Complex64::new(w.iter().map(|(a, sig)| a * (-s2 / (2.0 * sig * sig)).exp()).sum(), 0.0)
    })
}

fn plancherel(p: &Params, sink: &Sink) -> Result<Outcome> {
    let fs: Vec<MotionGroupFunction> = match &p.inputs {
        Some(paths) => paths
            .iter()
            .map(|x| Ok(io::read_motion(&std::fs::read_to_string(x)?)?.0))
            .collect::<Result<_>>()?,
        None => {
            let grid = Grid::new(2, p.n.unwrap_or(64), p.half_width.unwrap_or(9.0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(0));
            (0..p.count.unwrap_or(5)).map(|_| random_mixture(&mut rng, grid, p.angles.unwrap_or(4))).collect::<Result<_>>()?
        }
    };
    let r_max = p.r_max.unwrap_or(7.0);
    let rep = plancherel_consistency(&fs, r_max, p.points.unwrap_or(14), Some(p.band.unwrap_or(2)))?;
    let mean = rep.entries.iter().map(|e| e.ratio).sum::<f64>() / rep.entries.len().max(1) as f64;
    sink.report("plancherel.json", &json!({"r_max": r_max, "seed": p.seed.unwrap_or(0), "mean_ratio": mean, "expected_ratio": 1.0 / (2.0 * PI), "report": rep}))?;
    Ok(Outcome::from_pass(rep.passes))
}
