//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bubble::{ortho_ratio, radial_integral, solve_eigenpair, bubble_u, kernel_z, U_L2SQ, Z_L2SQ};
use crate::error::{Error, Result};
use crate::field::{InnerField, ModelInner, ModelOuter, OuterField, RadialField, ZeroField};
use crate::glue::{verify_pointwise_bounds, BoundParams, Glue};
use crate::interp::log_grid;
use crate::kernel::{lemma_times, verify_kernel_lemma};
use crate::modulation::{
    check_rate_admissible, orthogonality_residual, separated_lambda_init, solve_lambda0, solve_mu, ModulationOpts,
    MuOpts, OmegaSweep, RateFunction,
};
use crate::pde::{fit_exponent, simulate, write_snapshot_csv, FarField, Mesh, SimConfig};
use crate::profile::{solve_theta, theta_space_time, ProfileParams, A_MAX};
use crate::report::{fmt17, json_num};
use crate::verify::{all_pass, lemma_sources, run_suite, SuiteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "glueheat", version, about = "Gluing ingredients for u_t = Δu + |u|u in six dimensions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Profile amplitude; repeat for several.
    #[arg(long = "A", global = true, allow_negative_numbers = true)]
    pub amplitudes: Vec<f64>,
    /// log | sqrtlog | sqrtlogloglog | blend:c:k | table:<path>
    #[arg(long = "R", global = true)]
    pub rate: Option<String>,
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub a1: Option<f64>,
    #[arg(long, global = true)]
    pub a2: Option<f64>,
    /// Output directory for tables and summaries.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimData {
    Theta,
    Glued,
    Zero,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Self-similar profiles and tail coefficients.
    Profile,
    /// Bubble constants, ball ratios and the unstable eigenvalue.
    Constants,
    /// λ₀, μ, λ, σ, ρ trajectories.
    Modulation {
        /// λ(t₀): a number or `separated`.
        #[arg(long, default_value = "1")]
        lambda_init: String,
    },
    /// Pointwise residual bounds of the glued ansatz.
    Residual {
        #[arg(long, default_value_t = 25)]
        times: usize,
        /// Coefficient of the model inner correction.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi_coeff: f64,
        /// Coefficient of the model outer correction.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        psi_coeff: f64,
    },
    /// Heat-kernel convolution estimates.
    KernelCheck {
        #[arg(long, default_value_t = 8)]
        per_branch: usize,
    },
    /// Radial PDE run.
    Simulate {
        #[arg(long, value_enum, default_value_t = SimData::Glued)]
        data: SimData,
        #[arg(long, default_value_t = 4000)]
        n_cells: usize,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        neumann: bool,
        #[arg(long, default_value_t = 2_000_000)]
        max_steps: u64,
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Every acceptance check; nonzero exit on any failure.
    VerifyAll {
        /// Also run the glued PDE tracking check (never gates).
        #[arg(long)]
        exploratory: bool,
    },
}

/// Resolved and validated run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub amplitudes: Vec<f64>,
    pub rate: RateFunction,
    pub t0: f64,
    pub horizon: f64,
    pub opts: ModulationOpts,
    pub out: PathBuf,
    pub format: Format,
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", k + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn num(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("config key {key}: `{v}` is not a number"))))
        .transpose()
}

impl RunConfig {
    pub fn resolve(cmd: &Command, c: &CommonArgs) -> Result<Self> {
        let file = match &c.config {
            Some(p) => parse_config_file(
                &fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        const KEYS: [&str; 9] = ["A", "R", "t0", "horizon", "a", "a1", "a2", "out", "format"];
        if let Some(k) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown config key `{k}`")));
        }
        let amplitudes = if !c.amplitudes.is_empty() {
            c.amplitudes.clone()
        } else if let Some(v) = file.get("A") {
            v.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("config key A: `{s}` is not a number"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![0.05]
        };
        let rate_spec = c.rate.clone().or_else(|| file.get("R").cloned()).unwrap_or_else(|| "log".into());
        let rate = RateFunction::parse(&rate_spec).map_err(|e| Error::Config(format!("--R {rate_spec}: {e}")))?;
        let t0 = c.t0.or(num(&file, "t0")?).unwrap_or(1e3);
        let default_horizon = match cmd {
            Command::Simulate { .. } => 2.0 * t0,
            _ => 1e3 * t0,
        };
        let horizon = c.horizon.or(num(&file, "horizon")?).unwrap_or(default_horizon);
        let d = ModulationOpts::default();
        let opts = ModulationOpts {
            a: c.a.or(num(&file, "a")?).unwrap_or(d.a),
            a1: c.a1.or(num(&file, "a1")?).unwrap_or(d.a1),
            a2: c.a2.or(num(&file, "a2")?).unwrap_or(d.a2),
            ..d
        };
        let out = c.out.clone().or_else(|| file.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
        let format = match (c.format, file.get("format").map(String::as_str)) {
            (Some(f), _) => f,
            (None, None | Some("csv")) => Format::Csv,
            (None, Some("json")) => Format::Json,
            (None, Some(other)) => return Err(Error::Config(format!("config key format: `{other}` is not csv or json"))),
        };
        let rc = Self { amplitudes, rate, t0, horizon, opts, out, format };
        rc.validate(cmd)?;
        Ok(rc)
    }

    fn validate(&self, cmd: &Command) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.amplitudes.iter().any(|a| !a.is_finite()) {
            return cfg("amplitudes must be finite".into());
        }
        self.opts.validate().map_err(|e| Error::Config(e.to_string()))?;
        let a_cap = match cmd {
            Command::Profile => A_MAX,
            Command::Constants => f64::INFINITY,
            _ => 0.1,
        };
        if let Some(a) = self.amplitudes.iter().find(|a| !(a.abs() <= a_cap) || (a_cap == A_MAX && a.abs() >= A_MAX)) {
            return cfg(format!("amplitude {a} outside the admissible range (|A| limit {a_cap})"));
        }
        if !(self.horizon > self.t0) {
            return cfg(format!("horizon {} must exceed t0 {}", self.horizon, self.t0));
        }
        let needs_rate = !matches!(cmd, Command::Profile | Command::Constants)
            && !matches!(cmd, Command::Simulate { data: SimData::Theta | SimData::Zero, .. });
        if needs_rate {
            if !(self.t0 >= 1e3) {
                return cfg(format!("t0 = {} must be at least 1e3", self.t0));
            }
            let adm = check_rate_admissible(&self.rate, self.t0, self.horizon).map_err(|e| Error::Config(e.to_string()))?;
            if !adm.admissible {
                return cfg(format!("rate function {} is not admissible on [{}, {}]", self.rate.name(), self.t0, self.horizon));
            }
        } else if !(self.t0 >= 0.0) {
            return cfg(format!("t0 = {} must be nonnegative", self.t0));
        }
        if let Command::Residual { times, phi_coeff, psi_coeff } = cmd {
            if *times < 4 {
                return cfg("--times must be at least 4".into());
            }
            if phi_coeff.abs() > 0.125 || psi_coeff.abs() > 1.0 {
                return cfg("model corrections need |phi_coeff| <= 1/8 and |psi_coeff| <= 1".into());
            }
        }
        if let Command::KernelCheck { per_branch } = cmd {
            if *per_branch == 0 {
                return cfg("--per-branch must be positive".into());
            }
        }
        Ok(())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::ScaleCollapse { .. } | Error::Incomplete(_) | Error::Io(_) => 3,
        _ => 4,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("glueheat: {e}");
        return 3;
    }
    let rc = match RunConfig::resolve(&cli.command, &cli.common) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("glueheat: {e}");
            return 3;
        }
    };
    match dispatch(&cli.command, &rc) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("glueheat: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GLUEHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!("GLUEHEAT_THREADS must be a positive integer, got `{v}`"))
    })?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: &Command, rc: &RunConfig) -> Result<i32> {
    match cmd {
        Command::Profile => cmd_profile(rc),
        Command::Constants => cmd_constants(rc),
        Command::Modulation { lambda_init } => cmd_modulation(rc, lambda_init),
        Command::Residual { times, phi_coeff, psi_coeff } => cmd_residual(rc, *times, *phi_coeff, *psi_coeff),
        Command::KernelCheck { per_branch } => cmd_kernel(rc, *per_branch),
        Command::Simulate { data, n_cells, r_max, neumann, max_steps, snapshots } => {
            cmd_simulate(rc, *data, *n_cells, *r_max, *neumann, *max_steps, snapshots)
        }
        Command::VerifyAll { exploratory } => cmd_verify(rc, *exploratory),
    }
}

/// CSV text to a JSON array of row objects; `#` lines are dropped.
pub fn csv_to_json(csv: &str) -> Value {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().map(|h| h.split(',').collect()).unwrap_or_default();
    let rows: Vec<Value> = lines
        .map(|l| {
            let obj: serde_json::Map<String, Value> = header
                .iter()
                .zip(l.split(','))
                .map(|(k, v)| (k.to_string(), v.parse::<f64>().map(json_num).unwrap_or_else(|_| json!(v))))
                .collect();
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

fn write_table(rc: &RunConfig, stem: &str, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    fs::create_dir_all(&rc.out)?;
    let mut buf = Vec::new();
    fill(&mut buf)?;
    match rc.format {
        Format::Csv => fs::write(rc.out.join(format!("{stem}.csv")), buf)?,
        Format::Json => {
            let v = csv_to_json(&String::from_utf8_lossy(&buf));
            fs::write(rc.out.join(format!("{stem}.json")), pretty(&v))?
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn emit_summary(rc: &RunConfig, name: &str, v: &Value) -> Result<()> {
    fs::create_dir_all(&rc.out)?;
    fs::write(rc.out.join(name), pretty(v))?;
    print!("{}", pretty(v));
    Ok(())
}

fn tag(a: f64) -> String {
    format!("A{a}")
}

fn cmd_profile(rc: &RunConfig) -> Result<i32> {
    let mut rows = Vec::new();
    for &a in &rc.amplitudes {
        let sol = solve_theta(ProfileParams::new(a))?;
        write_table(rc, &format!("profile_{}", tag(a)), |w| sol.write_csv(w))?;
        let mut row = json!({
            "A": a,
            "ell": sol.ell,
            "ell_uncertainty": sol.ell_uncertainty,
            "ode_defect": sol.ode_defect(),
            "strictly_decreasing": sol.strictly_decreasing(),
        });
        if a > 0.0 {
            row["ell_over_A"] = json_num(sol.ell / a);
            row["upper_violation"] = json_num(sol.upper_bound_violation());
            row["lower_factor"] = json_num(1.0 - sol.lower_bound_constant() * a);
            row["derivative_constant"] = json_num(sol.derivative_constant());
        }
        rows.push(row);
    }
    emit_summary(rc, "profile_summary.json", &json!(rows))?;
    Ok(0)
}

fn cmd_constants(rc: &RunConfig) -> Result<i32> {
    let u = radial_integral(|r| bubble_u(r).powi(2), 0.0, f64::INFINITY, 1e-13)?;
    let z = radial_integral(|r| kernel_z(r).powi(2), 0.0, f64::INFINITY, 1e-13)?;
    let table = log_grid(50.0, 800.0, 16).into_iter().map(ortho_ratio).collect::<Result<Vec<_>>>()?;
    let eig = solve_eigenpair(60.0, 1e-10)?;
    let v = json!({
        "u_l2sq": u,
        "z_l2sq": z,
        "u_l2sq_closed_form": U_L2SQ,
        "z_l2sq_closed_form": Z_L2SQ,
        "ratio_table": table,
        "gamma0": eig.gamma0,
    });
    if rc.out != Path::new(".") {
        emit_summary(rc, "constants.json", &v)?;
    } else {
        print!("{}", pretty(&v));
    }
    Ok(0)
}

fn lambda_init(rc: &RunConfig, spec: &str) -> Result<f64> {
    if spec == "separated" {
        return Ok(separated_lambda_init(&rc.rate, rc.t0));
    }
    spec.parse::<f64>()
        .ok()
        .filter(|v| *v > 0.0 && v.is_finite())
        .ok_or_else(|| Error::Config(format!("--lambda-init must be positive or `separated`, got `{spec}`")))
}

fn cmd_modulation(rc: &RunConfig, init: &str) -> Result<i32> {
    let sweep = OmegaSweep::standard()?;
    let opts = ModulationOpts { lambda_init: lambda_init(rc, init)?, ..rc.opts };
    let probe_t = if rc.horizon / rc.t0 >= 100.0 { rc.horizon / 10.0 } else { (rc.t0 * rc.horizon).sqrt() };
    let mut rows = Vec::new();
    for &a in &rc.amplitudes {
        let prof = solve_theta(ProfileParams::new(a))?;
        let tr = solve_lambda0(a, &rc.rate, rc.t0, rc.horizon, opts, &sweep)?;
        let tr = solve_mu(&tr, &prof, &ZeroField, MuOpts::default())?;
        let res = orthogonality_residual(&tr, &prof, &ZeroField)?;
        write_table(rc, &format!("modulation_{}", tag(a)), |w| tr.write_csv(w, Some(&res)))?;
        rows.push(json!({
            "A": a,
            "R": rc.rate.name(),
            "probe_t": probe_t,
            "lambda0_exponent": tr.lambda0_exponent(probe_t),
            "sigma_exponent": tr.sigma_exponent(probe_t),
            "contraction": tr.contraction,
            "mu_sc_norm": tr.sc_norm(&tr.mu),
            "max_ortho_residual": res.iter().copied().fold(0.0, f64::max),
            "separation_margin": tr.separation_margin(),
            "sigma_sandwich": tr.sigma_sandwich(),
        }));
    }
    emit_summary(rc, "modulation_summary.json", &json!(rows))?;
    Ok(0)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .filter_map(|c| match c {
            '[' => Some('_'),
            ']' | '=' => None,
            c => Some(c),
        })
        .collect()
}

fn cmd_residual(rc: &RunConfig, n_times: usize, phi_coeff: f64, psi_coeff: f64) -> Result<i32> {
    let sweep = OmegaSweep::standard()?;
    let opts = ModulationOpts { lambda_init: separated_lambda_init(&rc.rate, rc.t0), ..rc.opts };
    let times = log_grid(rc.t0, rc.horizon, n_times);
    let mut rows = Vec::new();
    for &a in &rc.amplitudes {
        let prof = solve_theta(ProfileParams::new(a))?;
        let outer = ModelOuter { coeff: psi_coeff, amplitude: a, a1: rc.opts.a1, rate: rc.rate.clone() };
        let inner = ModelInner { coeff: phi_coeff, a: rc.opts.a };
        let psi: &dyn OuterField = if psi_coeff == 0.0 { &ZeroField } else { &outer };
        let phi: &dyn InnerField = if phi_coeff == 0.0 { &ZeroField } else { &inner };
        let tr = solve_lambda0(a, &rc.rate, rc.t0, rc.horizon, opts, &sweep)?;
        let tr = solve_mu(&tr, &prof, psi, MuOpts::default())?;
        let glue = Glue::new(&tr, &prof, phi, psi)?;
        for rep in verify_pointwise_bounds(&glue, &times, BoundParams::default())? {
            write_table(rc, &format!("residual_{}_{}", file_safe(&rep.name), tag(a)), |w| rep.write_csv(w))?;
            let mut s = rep.summary_json();
            s["A"] = json!(a);
            rows.push(s);
        }
    }
    emit_summary(rc, "residual_summary.json", &json!(rows))?;
    Ok(0)
}

fn cmd_kernel(rc: &RunConfig, per_branch: usize) -> Result<i32> {
    let a = rc.amplitudes.first().copied().unwrap_or(0.05).abs();
    let n = (2.0 * (rc.horizon / rc.t0).log10()).floor().max(1.0) as usize;
    let times = lemma_times(rc.t0, n);
    let mut rows = Vec::new();
    for (name, src) in lemma_sources(a, &rc.rate, rc.opts.a1, rc.t0)? {
        let rep = verify_kernel_lemma(&name, &src, &times, per_branch)?;
        write_table(rc, &format!("kernel_{}", file_safe(&name)), |w| rep.write_csv(w))?;
        let mut s = rep.summary_json();
        s["A"] = json!(a);
        rows.push(s);
    }
    emit_summary(rc, "kernel_summary.json", &json!(rows))?;
    Ok(0)
}

fn cmd_simulate(
    rc: &RunConfig,
    data: SimData,
    n_cells: usize,
    r_max: Option<f64>,
    neumann: bool,
    max_steps: u64,
    snapshots: &[f64],
) -> Result<i32> {
    let a = rc.amplitudes.first().copied().unwrap_or(0.05);
    let prof = solve_theta(ProfileParams::new(a))?;
    let mut cfg = SimConfig::new(r_max.unwrap_or(20.0 * rc.horizon.sqrt()), n_cells, rc.t0, rc.horizon);
    cfg.far_field = if neumann { FarField::Neumann } else { FarField::Dirichlet };
    cfg.max_steps = Some(max_steps);
    cfg.snapshot_times = snapshots.to_vec();
    cfg.n_records = 201;
    let sweep;
    let traj;
    let mut lambda_ref = None;
    let initial: Vec<f64>;
    match data {
        SimData::Zero => {
            cfg.core_width = rc.t0.sqrt().max(1.0);
            initial = vec![0.0; n_cells];
        }
        SimData::Theta => {
            cfg.ell = prof.ell;
            cfg.core_width = (rc.t0 + 1.0).sqrt();
            let mesh = Mesh::graded(cfg.r_max, cfg.n_cells, cfg.core_width)?;
            initial = mesh.centers.iter().map(|&r| theta_space_time(&prof, r, rc.t0)).collect();
        }
        SimData::Glued => {
            sweep = OmegaSweep::standard()?;
            let opts = ModulationOpts { lambda_init: separated_lambda_init(&rc.rate, rc.t0), ..rc.opts };
            let tr = solve_lambda0(a, &rc.rate, rc.t0, rc.horizon, opts, &sweep)?;
            traj = solve_mu(&tr, &prof, &ZeroField, MuOpts::default())?;
            let glue = Glue::new(&traj, &prof, &ZeroField, &ZeroField)?;
            let st = glue.state(rc.t0)?;
            cfg.ell = prof.ell;
            cfg.core_width = st.lambda;
            let mesh = Mesh::graded(cfg.r_max, cfg.n_cells, cfg.core_width)?;
            initial = mesh.centers.iter().map(|&r| glue.u(r, &st)).collect();
            lambda_ref = Some(&traj);
        }
    }
    cfg.validate()?;
    let mesh = Mesh::graded(cfg.r_max, cfg.n_cells, cfg.core_width)?;
    let trace = simulate(&cfg, &RadialField::new(rc.t0, mesh.centers.clone(), initial, None))?;
    let stem = format!("simulate_{:?}_{}", data, tag(a)).to_lowercase();
    write_table(rc, &stem, |w| trace.write_csv(w))?;
    for snap in &trace.snapshots {
        write_table(rc, &format!("{stem}_snapshot_t{}", fmt17(snap.t)), |w| write_snapshot_csv(snap, w))?;
    }
    let end = *trace.times.last().unwrap_or(&rc.t0);
    let fit = fit_exponent(&trace, rc.t0, end);
    let mut tracking = Value::Null;
    if let Some(tr) = lambda_ref {
        let mut worst = 0.0f64;
        for (&t, &s) in trace.times.iter().zip(&trace.sup_norm) {
            let l = tr.state_at(t)?.lambda;
            worst = worst.max((s * l * l - 1.0).abs());
        }
        tracking = json_num(worst);
    }
    let v = json!({
        "A": a,
        "data": format!("{data:?}").to_lowercase(),
        "status": trace.status,
        "steps": trace.steps,
        "mesh_min_width": trace.mesh_min_width,
        "exponent": fit.as_ref().map(|f| json_num(f.exponent)).unwrap_or(Value::Null),
        "exponent_width": fit.as_ref().map(|f| json_num(f.width)).unwrap_or(Value::Null),
        "exponent_error": fit.as_ref().err().map(|e| e.to_string()),
        "max_tracking_dev": tracking,
    });
    emit_summary(rc, &format!("{stem}_summary.json"), &v)?;
    Ok(0)
}

fn cmd_verify(rc: &RunConfig, exploratory: bool) -> Result<i32> {
    let cfg = SuiteConfig {
        amplitudes: rc.amplitudes.clone(),
        rate: rc.rate.clone(),
        t0: rc.t0,
        opts: rc.opts,
        exploratory,
    };
    let crits = run_suite(&cfg)?;
    for c in &crits {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let note = if c.exploratory { " (exploratory, not gating)" } else { "" };
        println!("{verdict} {}{note} [{:.2} s]", c.name, c.seconds);
        for r in c.reports.iter().filter(|r| !r.pass) {
            println!("  FAIL {} fitted_C={} uniformity={}", r.name, r.fitted_c, r.uniformity);
        }
    }
    let ok = all_pass(&crits);
    if rc.out != Path::new(".") {
        fs::create_dir_all(&rc.out)?;
        fs::write(rc.out.join("verify_all.json"), pretty(&json!({"pass": ok, "criteria": crits})))?;
    }
    println!("{}", if ok { "ALL PASS" } else { "SUITE FAILED" });
    Ok(if ok { 0 } else { 1 })
}
