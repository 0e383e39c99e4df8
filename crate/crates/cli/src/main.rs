//! `symflow`: run homogeneous flows, symbol analyses, semi-flat duality
//! checks and the acceptance suite.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use symflow_core::error::{FlowError, GeometryError, HitchinError, SemiflatError, SymbolError};
use symflow_core::exterior::{standard_omega, Form};
use symflow_core::flows::{self, FlowSpec, Weight};
use symflow_core::hitchin::TypeIIAStructure;
use symflow_core::homogeneous::{ansatz, preset_by_name, Preset};
use symflow_core::semiflat::{self, SemiflatFlow};
use symflow_core::symbol::{SymbolProblem, SymbolReport};
use symflow_core::verify;

use config::{FlowConfig, SemiflatRunConfig, SymbolConfig, VerifyConfig};
use output::Artifacts;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometric failure: {0}")]
    Geometric(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Geometric(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        if e.is_geometric() {
            CliError::Geometric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Hitchin(_) | GeometryError::SingularMetric => CliError::Geometric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HitchinError> for CliError {
    fn from(e: HitchinError) -> Self {
        match e {
            HitchinError::Exterior(_) => CliError::Config(e.to_string()),
            _ => CliError::Geometric(e.to_string()),
        }
    }
}

impl From<SymbolError> for CliError {
    fn from(e: SymbolError) -> Self {
        match e {
            SymbolError::DegenerateXi | SymbolError::Exterior(_) => CliError::Config(e.to_string()),
            _ => CliError::Geometric(e.to_string()),
        }
    }
}

impl From<SemiflatError> for CliError {
    fn from(e: SemiflatError) -> Self {
        match e {
            SemiflatError::PositivityLost { .. } => CliError::Geometric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "symflow", version, about = "Symplectic flows of positive 3-forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a flow on a homogeneous preset.
    Flow(FlowArgs),
    /// Principal symbol spectrum at a point.
    Symbol(SymbolArgs),
    /// Semi-flat duality residuals for a Hessian metric flow on T³.
    Semiflat(SemiflatArgs),
    /// Run the acceptance checks.
    VerifyAll(VerifyArgs),
}

#[derive(Args)]
struct FlowArgs {
    /// TOML or JSON file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// torus, nilmanifold or solvmanifold.
    #[arg(long)]
    preset: Option<String>,
    /// hitchin, type-iia, dual-ricci or epsilon.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b0: Option<f64>,
    /// Comma-separated initial parameters, e.g. `1,2,2,1`.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Use adaptive Dormand-Prince with this relative tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SymbolArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    /// Six comma-separated covector components.
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<String>,
    /// Base 3-form, e.g. `"0.5 e^{135} - 0.5 e^{146} - 0.5 e^{245} - 0.5 e^{236}"`.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SemiflatArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// iib or kr.
    #[arg(long)]
    flow: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Constant metric, no periodic modes.
    #[arg(long)]
    flat: bool,
    /// Check the rotated pair (φ̂, −φ).
    #[arg(long)]
    phase_rotated: bool,
    /// Comma-separated grid sizes for a refinement study.
    #[arg(long)]
    sweep: Option<String>,
    /// Write the final metric as a binary dump with a JSON sidecar.
    #[arg(long)]
    dump: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated criterion numbers.
    #[arg(long)]
    only: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Flow(a) => cmd_flow(a),
        Command::Symbol(a) => cmd_symbol(a),
        Command::Semiflat(a) => cmd_semiflat(a),
        Command::VerifyAll(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn default_init(p: Preset) -> Vec<f64> {
    match p {
        Preset::SolvmanifoldTv => vec![1.0, 2.0, 2.0, 1.0],
        _ => vec![0.0, 0.0],
    }
}

fn cmd_flow(a: FlowArgs) -> Result<(), CliError> {
    let mut c: FlowConfig = match &a.config {
        Some(p) => config::load(p)?,
        None => FlowConfig::default(),
    };
    if let Some(v) = a.preset {
        c.preset = v;
    }
    if let Some(v) = a.weight {
        c.weight = v;
    }
    if a.eps.is_some() {
        c.eps = a.eps;
    }
    if let Some(v) = a.init {
        c.init = config::parse_list(&v)?;
    }
    if a.a0.is_some() || a.b0.is_some() {
        if c.init.len() != 2 {
            c.init = vec![0.0, 0.0];
        }
        if let Some(v) = a.a0 {
            c.init[0] = v;
        }
        if let Some(v) = a.b0 {
            c.init[1] = v;
        }
    }
    if let Some(v) = a.horizon {
        c.horizon = v;
    }
    if let Some(v) = a.dt {
        c.dt = v;
    }
    if a.rtol.is_some() {
        c.rtol = a.rtol;
    }
    if let Some(v) = a.stride {
        c.record_stride = v;
    }
    if let Some(v) = a.out {
        c.out = v;
    }

    let lf = preset_by_name::<f64>(&c.preset)?;
    if c.init.is_empty() {
        c.init = default_init(lf.preset);
    }
    let weight = Weight::parse_with_eps(&c.weight, c.eps)?;
    let mut spec = match c.rtol {
        Some(r) => FlowSpec::rk45(weight, r, c.horizon),
        None => FlowSpec::rk4(weight, c.dt, c.horizon),
    };
    spec.record_stride = c.record_stride;
    let fam = ansatz::<f64>(lf.preset);
    let mut art = Artifacts::new(&c.out, "flow", &c)?;
    let traj = flows::run(lf.preset, &fam, &lf.frame, &c.init, &spec)?;
    art.write("trajectory.csv", traj.to_csv().as_bytes())?;

    let closed = traj.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.d_resid));
    let prim = traj.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.prim_resid));
    let ok = closed < 1e-10 && prim < 1e-10;
    let last = traj.final_params();
    println!(
        "{} {} from {:?}: {} samples, final {} = {:?}",
        lf.preset.name(),
        weight,
        c.init,
        traj.len(),
        traj.param_names.join(","),
        last
    );
    if lf.preset == Preset::NilmanifoldDbt && traj.params[0][1] == 0.0 {
        println!("(1 + a - b^2)^(3/2) = {:.12}", (1.0 + last[0] - last[1] * last[1]).powf(1.5));
    }
    art.finish(json!({
        "samples": traj.len(),
        "steps": traj.steps,
        "final_params": last,
        "max_closedness": closed,
        "max_primitivity": prim,
        "max_projection_residual": traj.max_projection_residual,
        "passed": ok,
    }))?;
    if !ok {
        return Err(CliError::Tolerance(format!("|d phi| = {closed:e}, |omega ^ phi| = {prim:e}")));
    }
    Ok(())
}

fn cmd_symbol(a: SymbolArgs) -> Result<(), CliError> {
    let mut c: SymbolConfig = match &a.config {
        Some(p) => config::load(p)?,
        None => SymbolConfig::default(),
    };
    if let Some(v) = a.weight {
        c.weight = v;
    }
    if a.eps.is_some() {
        c.eps = a.eps;
    }
    if let Some(v) = a.xi {
        let xs: Vec<f64> = config::parse_list(&v)?;
        c.xi = xs.try_into().map_err(|_| CliError::Config("--xi needs six components".into()))?;
    }
    if a.phi.is_some() {
        c.phi = a.phi;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
    let weight = Weight::parse_with_eps(&c.weight, c.eps)?;
    let structure = match &c.phi {
        Some(s) => {
            let phi: Form<f64> = s.parse().map_err(|e| CliError::Config(format!("--phi: {e}")))?;
            TypeIIAStructure::pointwise(standard_omega(), phi)?
        }
        None => TypeIIAStructure::adapted(),
    };
    let problem = SymbolProblem::new(structure, c.xi, weight)?;
    let report = SymbolReport::build(&problem)?;
    let mut art = Artifacts::new(&c.out, "symbol", &c)?;
    art.write("symbol.json", output::pretty(&report)?.as_bytes())?;
    println!("weight {}: eigenvalues {:?}, kernel dimension {}", weight, report.eigenvalues, report.kernel_dimension);
    art.finish(json!({ "eigenvalues": report.eigenvalues, "kernel_dimension": report.kernel_dimension }))?;
    Ok(())
}

fn cmd_semiflat(a: SemiflatArgs) -> Result<(), CliError> {
    let mut c: SemiflatRunConfig = match &a.config {
        Some(p) => config::load(p)?,
        None => SemiflatRunConfig { n: 16, steps: 4, ..SemiflatRunConfig::default() },
    };
    if let Some(v) = a.flow {
        c.flow = v.parse::<SemiflatFlow>()?;
    }
    if let Some(v) = a.n {
        c.n = v;
    }
    if let Some(v) = a.steps {
        c.steps = v;
    }
    if let Some(v) = a.dt {
        c.dt = v;
    }
    if a.flat {
        c.potential = semiflat::Potential::flat();
    }
    if a.phase_rotated {
        c.phase_rotated = true;
    }
    if let Some(v) = a.sweep {
        c.sweep = config::parse_list(&v)?;
    }
    if a.dump {
        c.dump = true;
    }
    if let Some(v) = a.out {
        c.out = v;
    }

    let mut art = Artifacts::new(&c.out, "semiflat", &c)?;
    if c.sweep.is_empty() {
        let run = semiflat::run::<f64>(&c.core())?;
        art.write("residuals.csv", run.residual_csv().as_bytes())?;
        if c.dump {
            art.write("metric.bin", &semiflat::dump_bytes(&run.last))?;
            art.write("metric.json", output::pretty(&semiflat::dump_sidecar(&run.last, "metric.bin"))?.as_bytes())?;
        }
        let max = run.max_residual();
        println!("{} N = {}: max residual {:.6e} over {} steps", c.flow, c.n, max, run.rows.len());
        let passed = c.tolerance.is_none_or(|t| max <= t);
        art.finish(json!({ "max_residual": max, "identities": run.identities, "passed": passed }))?;
        if !passed {
            return Err(CliError::Tolerance(format!("max residual {max:e} exceeds {:e}", c.tolerance.unwrap_or(0.0))));
        }
    } else {
        let study = semiflat::refinement_study::<f64>(&c.core(), &c.sweep)?;
        let mut csv = String::from("n,maxResidual\n");
        for (n, r) in study.sizes.iter().zip(&study.residuals) {
            csv.push_str(&format!("{n},{r:.16e}\n"));
        }
        art.write("sweep.csv", csv.as_bytes())?;
        let passed = study.fitted_order >= c.min_order;
        println!(
            "{} sweep {:?}: residuals {:?}, order {:.4} (pairwise {:?})",
            c.flow, study.sizes, study.residuals, study.fitted_order, study.pairwise_orders
        );
        art.finish(json!({ "study": study, "passed": passed }))?;
        if !passed {
            return Err(CliError::Tolerance(format!(
                "measured order {:.4} below {}",
                study.fitted_order, c.min_order
            )));
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let mut c: VerifyConfig = match &a.config {
        Some(p) => config::load(p)?,
        None => VerifyConfig::default(),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.only {
        c.only = config::parse_list(&v)?;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
    if let Some(bad) = c.only.iter().find(|i| !(1..=10).contains(*i)) {
        return Err(CliError::Config(format!("no criterion {bad}")));
    }
    let ids: Vec<u8> = if c.only.is_empty() { (1..=10).collect() } else { c.only.clone() };
    let mut art = Artifacts::new(&c.out, "verify-all", &c)?;
    let mut reports = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, c.seed);
        println!("{}", r.line());
        reports.push(r);
    }
    art.write("verify.json", output::pretty(&reports)?.as_bytes())?;
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    art.finish(json!({ "passed": failed.is_empty(), "failed": failed }))?;
    if !failed.is_empty() {
        return Err(CliError::Tolerance(format!("criteria {failed:?} failed")));
    }
    Ok(())
}
