//! The `mot` command line.
//!
//! Exit codes: 0 ok, 1 input error, 2 infeasible instance or failed check,
//! 3 resource cap.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cascade::{DualCertificate, Variant};
use crate::envelope::{concave_envelope, convex_envelope, GridFunction};
use crate::error::{MotError, Result};
use crate::instance::{load_instance, LoadedInstance};
use crate::lp::SimplexOptions;
use crate::measures::quantize_lognormal;
use crate::optimizer::{
    ascend, certify, descend_upper, relative_gap, AscentConfig, AscentTrace, CertifyReport, StepRule,
};
use crate::primal::{solve_primal, solve_primal_max, PrimalOptions, PrimalSolution, PrimalStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Iteration cap when a primal target drives the step size.
pub const TARGETED_MAX_ITERS: usize = 200_000;

#[derive(Debug, Parser)]
#[command(name = "mot", version, about = "Martingale optimal transport bounds on finite grids")]
pub struct Cli {
    /// Print JSON reports.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for certificates, couplings and trace CSVs.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Target relative gap.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Lower-bound cascade: proposition or remark_b.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// Step rule for the dual optimizer; defaults to polyak when the primal
    /// value is known and adaptive otherwise.
    #[arg(long, global = true)]
    pub step_rule: Option<StepKind>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepKind {
    Adaptive,
    Diminishing,
    Polyak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Primal,
    Dual,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check convex order and support nesting of the marginals.
    Check { instance: PathBuf },
    /// Solve the primal LP, the dual ascent, or both.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "lower")]
        side: Side,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
    },
    /// Five-value certification: both primal problems and all three duals.
    Certify { instance: PathBuf },
    /// Convex envelope of a two-column CSV `x,f`.
    Envelope {
        csv: PathBuf,
        /// Evaluate the envelope at this point.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<f64>,
        /// Concave envelope instead.
        #[arg(long)]
        concave: bool,
    },
    /// Equal-probability quantization of a lognormal law.
    Quantize {
        #[arg(long, allow_hyphen_values = true)]
        location: f64,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        m: usize,
    },
}

impl clap::ValueEnum for Variant {
    fn value_variants<'a>() -> &'a [Self] {
        &[Variant::Lower, Variant::Stepwise]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        let v = clap::builder::PossibleValue::new(self.as_str());
        Some(match self {
            Variant::Lower => v.alias("lower"),
            Variant::Stepwise => v.alias("stepwise"),
            Variant::Upper => v.alias("upper"),
        })
    }
}

/// Maps an error to its exit code.
pub fn exit_code(err: &MotError) -> i32 {
    match err {
        MotError::NotInConvexOrder(_) | MotError::Infeasible | MotError::HedgeViolation { .. } => EXIT_FAILED,
        MotError::SizeCap { .. } | MotError::IterationLimit(_) => EXIT_CAP,
        _ => EXIT_INPUT,
    }
}

/// Output sinks, so the command logic can be driven from tests.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(io.err, "{e}");
            return code;
        }
    };
    run(&cli, io)
}

pub fn run(cli: &Cli, io: &mut Io<'_>) -> i32 {
    let result = match &cli.command {
        Command::Check { instance } => cmd_check(cli, instance, io),
        Command::Solve { instance, side, method } => cmd_solve(cli, instance, *side, *method, io),
        Command::Certify { instance } => cmd_certify(cli, instance, io),
        Command::Envelope { csv, at, concave } => cmd_envelope(cli, csv, *at, *concave, io),
        Command::Quantize { location, scale, m } => cmd_quantize(cli, *location, *scale, *m, io),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            if cli.json {
                let _ = writeln!(io.out, "{}", json!({"error": e.to_string(), "exit_code": code}));
            }
            let _ = writeln!(io.err, "error: {e}");
            code
        }
    }
}

fn emit(io: &mut Io<'_>, value: &Value) -> Result<()> {
    writeln!(io.out, "{}", serde_json::to_string_pretty(value).expect("json"))
        .map_err(|e| MotError::Input(format!("stdout: {e}")))
}

fn line(io: &mut Io<'_>, text: impl std::fmt::Display) -> Result<()> {
    writeln!(io.out, "{text}").map_err(|e| MotError::Input(format!("stdout: {e}")))
}

fn out_file(dir: &Path, name: &str) -> Result<std::fs::File> {
    std::fs::create_dir_all(dir).map_err(|e| MotError::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::File::create(&path).map_err(|e| MotError::Input(format!("{}: {e}", path.display())))
}

fn primal_options(inst: &LoadedInstance) -> PrimalOptions {
    let mut opts = PrimalOptions::default();
    if let Some(v) = inst.options.max_variables {
        opts.max_variables = v;
    }
    if let Some(p) = inst.options.max_pivots {
        opts.simplex = SimplexOptions {
            max_pivots: p,
            ..opts.simplex
        };
    }
    opts
}

/// Merges defaults, instance options and flags; `targeted` is true when the
/// primal value is available to the optimizer.
fn ascent_config(cli: &Cli, inst: &LoadedInstance, targeted: bool) -> AscentConfig {
    let o = &inst.options;
    let mut cfg = AscentConfig::default();
    let rule = match cli.step_rule {
        Some(StepKind::Adaptive) => Some(StepRule::default()),
        Some(StepKind::Diminishing) => Some(StepRule::Diminishing),
        Some(StepKind::Polyak) => Some(StepRule::Polyak),
        None => o.step_rule,
    };
    cfg.step_rule = rule.unwrap_or(if targeted { StepRule::Polyak } else { StepRule::default() });
    if targeted && cfg.step_rule == StepRule::Polyak {
        cfg.max_iters = TARGETED_MAX_ITERS;
    }
    cfg.variant = cli.variant.or(o.variant).unwrap_or(Variant::Lower);
    if let Some(v) = cli.max_iters.or(o.max_iters) {
        cfg.max_iters = v;
    }
    if let Some(v) = cli.tol.or(o.target_gap) {
        cfg.target_gap = v;
    }
    if let Some(v) = cli.seed.or(o.seed) {
        cfg.seed = v;
    }
    if let Some(v) = o.initial_step {
        cfg.initial_step = v;
    }
    cfg
}

fn load(path: &Path) -> Result<LoadedInstance> {
    load_instance(path)
}

fn cmd_check(cli: &Cli, path: &Path, io: &mut Io<'_>) -> Result<i32> {
    let inst = load(path)?;
    let report = inst.marginals.validate();
    let code = if report.passed { EXIT_OK } else { EXIT_FAILED };
    if cli.json {
        emit(io, &json!({"passed": report.passed, "shape": inst.marginals.shape(), "pairs": report.pairs}))?;
    } else {
        line(io, format!("shape {:?}", inst.marginals.shape()))?;
        for p in &report.pairs {
            let status = if p.convex_order.ordered && p.hull_nested { "ok" } else { "FAIL" };
            let witness = match &p.convex_order.witness {
                Some(w) => format!(" witness {}", serde_json::to_string(w).expect("json")),
                None => String::new(),
            };
            line(
                io,
                format!(
                    "pair ({}, {}): {status} convex order {} hull nested {}{witness}",
                    p.index + 1,
                    p.index + 2,
                    p.convex_order.ordered,
                    p.hull_nested
                ),
            )?;
        }
        line(io, if report.passed { "passed" } else { "failed" })?;
    }
    Ok(code)
}

fn primal_side(inst: &LoadedInstance, side: Side) -> Result<PrimalSolution> {
    let opts = primal_options(inst);
    let sol = match side {
        Side::Lower => solve_primal(&inst.cost, &inst.marginals, &opts)?,
        Side::Upper => solve_primal_max(&inst.cost, &inst.marginals, &opts)?,
    };
    match sol.status {
        PrimalStatus::Optimal => Ok(sol),
        PrimalStatus::Infeasible => Err(MotError::Infeasible),
        PrimalStatus::IterationLimit => Err(MotError::IterationLimit(sol.stats.pivots)),
    }
}

fn write_dual_outputs(dir: &Path, cert: &DualCertificate, trace: &AscentTrace) -> Result<()> {
    let mut f = out_file(dir, "certificate.json")?;
    writeln!(f, "{}", cert.to_json()).map_err(|e| MotError::Input(e.to_string()))?;
    trace.write_csv(out_file(dir, "trace.csv")?)?;
    let mut w = csv::Writer::from_writer(out_file(dir, "dual_tables.csv")?);
    let io_err = |e: csv::Error| MotError::Input(format!("csv: {e}"));
    w.write_record(["i", "x", "u"]).map_err(io_err)?;
    for (k, table) in cert.dual_variables.tables().iter().enumerate() {
        for (x, u) in table.grid().iter().zip(table.values()) {
            w.serialize((k + 2, x, u)).map_err(io_err)?;
        }
    }
    w.flush().map_err(|e| MotError::Input(e.to_string()))?;
    Ok(())
}

fn cmd_solve(cli: &Cli, path: &Path, side: Side, method: Method, io: &mut Io<'_>) -> Result<i32> {
    let inst = load(path)?;
    inst.marginals.ensure_valid()?;
    let primal = match method {
        Method::Primal | Method::Both => Some(primal_side(&inst, side)?),
        Method::Dual => None,
    };
    let primal_value = primal.as_ref().map(|p| p.value);
    let dual = match method {
        Method::Primal => None,
        Method::Dual | Method::Both => {
            let mut cfg = ascent_config(cli, &inst, primal_value.is_some());
            cfg.primal_value = primal_value;
            let run = match side {
                Side::Lower => ascend(&inst.cost, &inst.marginals, &cfg)?,
                Side::Upper => descend_upper(&inst.cost, &inst.marginals, &cfg)?,
            };
            Some(run)
        }
    };
    if let Some(dir) = &cli.out {
        if let Some(p) = &primal {
            if let Some(q) = &p.coupling {
                q.write_csv(&inst.marginals, out_file(dir, "coupling.csv")?)?;
            }
        }
        if let Some((cert, trace)) = &dual {
            write_dual_outputs(dir, cert, trace)?;
        }
    }
    let gap = match (primal_value, &dual) {
        (Some(p), Some((c, _))) => Some(relative_gap(p, c.dual_value)),
        _ => None,
    };
    let side_name = match side {
        Side::Lower => "lower",
        Side::Upper => "upper",
    };
    if cli.json {
        emit(
            io,
            &json!({
                "side": side_name,
                "primal": primal.as_ref().map(|p| json!({"value": p.value, "stats": p.stats})),
                "dual": dual.as_ref().map(|(c, t)| json!({
                    "variant": c.variant,
                    "value": c.dual_value,
                    "status": t.status,
                    "iterations": t.rows.len(),
                })),
                "gap": gap,
            }),
        )?;
    } else {
        if let Some(p) = &primal {
            line(io, format!("primal ({side_name}) {:.12}  [{} rows, {} columns, {} pivots]", p.value, p.stats.rows, p.stats.columns, p.stats.pivots))?;
        }
        if let Some((c, t)) = &dual {
            line(io, format!("dual   ({}) {:.12}  [{:?} after {} iterations]", c.variant, c.dual_value, t.status, t.rows.len()))?;
        }
        if let Some(g) = gap {
            line(io, format!("gap    {g:.3e}"))?;
        }
    }
    Ok(EXIT_OK)
}

fn certify_report_json(r: &CertifyReport) -> Value {
    serde_json::to_value(r).expect("json")
}

fn cmd_certify(cli: &Cli, path: &Path, io: &mut Io<'_>) -> Result<i32> {
    let inst = load(path)?;
    let report = inst.marginals.validate();
    if !report.passed {
        let err = inst.marginals.ensure_valid().expect_err("validation failed");
        if cli.json {
            emit(io, &json!({"passed": false, "infeasible": true, "error": err.to_string(), "pairs": report.pairs}))?;
        } else {
            line(io, format!("infeasible: {err}"))?;
        }
        return Ok(EXIT_FAILED);
    }
    let cfg = ascent_config(cli, &inst, true);
    let r = certify(&inst.cost, &inst.marginals, &cfg, &primal_options(&inst))?;
    if let Some(dir) = &cli.out {
        for (name, (cert, trace)) in ["lower", "stepwise", "upper"]
            .iter()
            .zip(r.certificates.iter().zip(&r.traces))
        {
            write_dual_outputs(&dir.join(name), cert, trace)?;
        }
        let mut f = out_file(dir, "report.json")?;
        writeln!(f, "{}", serde_json::to_string_pretty(&certify_report_json(&r)).expect("json"))
            .map_err(|e| MotError::Input(e.to_string()))?;
    }
    if cli.json {
        emit(io, &certify_report_json(&r))?;
    } else {
        line(io, format!("primal min        {:.12}", r.primal_min))?;
        line(io, format!("primal max        {:.12}", r.primal_max))?;
        for b in [&r.lower, &r.stepwise, &r.upper] {
            line(
                io,
                format!(
                    "{:<17} {:.12}  gap {:.3e}  {:?} after {} iterations{}",
                    b.variant.as_str(),
                    b.value,
                    b.gap,
                    b.status,
                    b.iterations,
                    if b.weak_duality { "" } else { "  WEAK DUALITY VIOLATED" }
                ),
            )?;
        }
        line(io, format!("sub-hedge slack   u=0 {:.3e}, optimized {:.3e}", r.subhedge_zero.min_slack, r.subhedge_optimized.min_slack))?;
        line(io, format!("target gap {:.1e}: {}", r.target_gap, if r.passed { "passed" } else { "failed" }))?;
    }
    Ok(if r.passed { EXIT_OK } else { EXIT_FAILED })
}

/// Reads `x,f` rows; a first row that does not parse is taken as a header.
pub fn read_function_csv(path: &Path) -> Result<GridFunction> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| MotError::Input(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MotError::Input(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(MotError::Input(format!("{}:{}: expected two columns", path.display(), row + 1)));
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                xs.push(v[0]);
                fs.push(v[1]);
            }
            Err(_) if row == 0 => continue,
            Err(e) => return Err(MotError::Input(format!("{}:{}: {e}", path.display(), row + 1))),
        }
    }
    GridFunction::new(xs, fs).map_err(|e| MotError::Input(format!("{}: {e}", path.display())))
}

fn cmd_envelope(cli: &Cli, path: &Path, at: Option<f64>, concave: bool, io: &mut Io<'_>) -> Result<i32> {
    let f = read_function_csv(path)?;
    let env = if concave { concave_envelope(&f) } else { convex_envelope(&f) };
    let value = at.map(|t| env.eval(t)).transpose()?;
    if let Some(dir) = &cli.out {
        let mut w = csv::Writer::from_writer(out_file(dir, "hull.csv")?);
        w.write_record(["x", "value"]).map_err(|e| MotError::Input(e.to_string()))?;
        for (x, v) in env.hull_grid.iter().zip(&env.hull_values) {
            w.serialize((x, v)).map_err(|e| MotError::Input(e.to_string()))?;
        }
        w.flush().map_err(|e| MotError::Input(e.to_string()))?;
    }
    if cli.json {
        let knots: Vec<[f64; 2]> = env.hull_grid.iter().zip(&env.hull_values).map(|(x, v)| [*x, *v]).collect();
        emit(io, &json!({"knots": knots, "value": value}))?;
    } else if let Some(v) = value {
        line(io, v)?;
    } else {
        line(io, "x,value")?;
        for (x, v) in env.hull_grid.iter().zip(&env.hull_values) {
            line(io, format!("{x},{v}"))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_quantize(cli: &Cli, location: f64, scale: f64, m: usize, io: &mut Io<'_>) -> Result<i32> {
    let mu = quantize_lognormal(location, scale, m)?;
    if let Some(dir) = &cli.out {
        let mut f = out_file(dir, "measure.json")?;
        writeln!(f, "{}", serde_json::to_string_pretty(&mu).expect("json")).map_err(|e| MotError::Input(e.to_string()))?;
    }
    if cli.json {
        emit(io, &json!({"atoms": mu.atoms(), "weights": mu.weights(), "mean": mu.mean()}))?;
    } else {
        line(io, "atom,weight")?;
        for (x, w) in mu.atoms().iter().zip(mu.weights()) {
            line(io, format!("{x},{w}"))?;
        }
    }
    Ok(EXIT_OK)
}
