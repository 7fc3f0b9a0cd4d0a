//! moranq: construct Moran measures on the line, solve optimal n-point
//! quantizers of order r exactly, and report the uniformity diagnostics.
//!
//! Exit codes: 0 success, 1 spec validation failure, 2 usage error,
//! 3 discretization-depth adequacy failure.
//!
//! All machine outputs are deterministic: the same invocation produces
//! byte-identical files. The `MORANQ_ATOM_CAP` environment variable
//! overrides the default atom-count cap.

use clap::{Args, Parser, Subcommand, ValueEnum};
use moranq_core::{
    antichain, ball_mass_profile, cell_report, census, choose_k, depth_adequacy,
    dimension_estimate, discretize_with_cap, dp_solve, io as mio, lloyd, sweep, Antichain,
    AtomMeasure, Error as CoreError, KRule, Method, MoranSpec, Quantizer, DEFAULT_ATOM_CAP,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "moranq",
    version,
    about = "Optimal quantization of Moran measures on the line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a construction file and print its derived bounds.
    Validate(ValidateCmd),
    /// Dump the discretized atom measure.
    Atoms(AtomsCmd),
    /// List the level-k antichain of cylinders.
    Antichain(AntichainCmd),
    /// Solve one n-point quantizer.
    Quantize(QuantizeCmd),
    /// Sweep point counts and report uniformity statistics per n.
    Sweep(SweepCmd),
    /// Count codepoints per cylinder and cell-cylinder incidences.
    Census(CensusCmd),
    /// Estimate the quantization dimension from error decay.
    Dims(DimsCmd),
}

#[derive(Clone, Copy, Debug)]
enum DepthArg {
    Auto,
    Fixed(usize),
}

impl FromStr for DepthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<DepthArg, String> {
        if s == "auto" {
            return Ok(DepthArg::Auto);
        }
        let m: usize = s
            .parse()
            .map_err(|_| format!("depth must be a positive integer or \"auto\", got {s:?}"))?;
        if m == 0 {
            return Err("depth must be at least 1".into());
        }
        Ok(DepthArg::Fixed(m))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dp,
    Lloyd,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the construction JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Quantization order r (strictly positive).
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ValidateCmd {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AtomsCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Discretization depth (a fixed integer; "auto" needs a point count).
    #[arg(long)]
    depth: DepthArg,
}

#[derive(Args)]
struct AntichainCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Antichain level; 0 is the root sentinel.
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct QuantizeCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Discretization depth, or "auto" to pick one adequate for n.
    #[arg(long, default_value = "auto")]
    depth: DepthArg,
    /// Number of codepoints.
    #[arg(long)]
    n: usize,
    /// Solver: the exact DP or Lloyd refinement from quantile seeds.
    #[arg(long, value_enum, default_value_t = MethodArg::Dp)]
    method: MethodArg,
    /// Proceed even when the depth is inadequate for n.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Discretization depth, or "auto" to pick one adequate for n-max.
    #[arg(long, default_value = "auto")]
    depth: DepthArg,
    /// First point count.
    #[arg(long)]
    n_min: usize,
    /// Last point count (inclusive).
    #[arg(long)]
    n_max: usize,
    /// How to match antichain levels to point counts.
    #[arg(long, default_value = "auto")]
    k_rule: KRule,
    /// Proceed even when the depth is inadequate for n-max.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CensusCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Discretization depth, or "auto" to pick one adequate for n.
    #[arg(long, default_value = "auto")]
    depth: DepthArg,
    /// Number of codepoints.
    #[arg(long)]
    n: usize,
    /// Antichain level; picked by --k-rule when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// How to match the antichain level to n when --k is omitted.
    #[arg(long, default_value = "auto")]
    k_rule: KRule,
    /// Proceed even when the depth is inadequate for n.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct DimsCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Discretization depth, or "auto" to pick one adequate for n-max.
    #[arg(long, default_value = "auto")]
    depth: DepthArg,
    /// Window start (first point count).
    #[arg(long)]
    n_min: usize,
    /// Window end (last point count, inclusive).
    #[arg(long)]
    n_max: usize,
    /// How to match antichain levels to point counts in the sweep.
    #[arg(long, default_value = "auto")]
    k_rule: KRule,
    /// Exponent for the coefficient probes; the fitted slope when omitted.
    #[arg(long)]
    s_probe: Option<f64>,
    /// Comma-separated ball radii; adds a ball-mass profile section.
    #[arg(long)]
    epsilons: Option<String>,
    /// Proceed even when the depth is inadequate for n-max.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Map library failures onto the exit-code contract.
fn exit_code_for(e: &CoreError) -> u8 {
    match e {
        CoreError::InvalidSpec(_) => 1,
        CoreError::AdequacyFailed { .. } => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<u8, CoreError> {
    match command {
        Command::Validate(cmd) => cmd_validate(cmd),
        Command::Atoms(cmd) => cmd_atoms(cmd),
        Command::Antichain(cmd) => cmd_antichain(cmd),
        Command::Quantize(cmd) => cmd_quantize(cmd),
        Command::Sweep(cmd) => cmd_sweep(cmd),
        Command::Census(cmd) => cmd_census(cmd),
        Command::Dims(cmd) => cmd_dims(cmd),
    }
}

// --- shared plumbing --------------------------------------------------------

fn atom_cap() -> Result<usize, CoreError> {
    match std::env::var("MORANQ_ATOM_CAP") {
        Ok(v) => v.parse().map_err(|_| {
            CoreError::InvalidArgument(format!("MORANQ_ATOM_CAP must be a positive integer, got {v:?}"))
        }),
        Err(_) => Ok(DEFAULT_ATOM_CAP),
    }
}

fn load_spec(common: &CommonArgs) -> Result<MoranSpec, CoreError> {
    if !(common.r > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "order r must be strictly positive, got {}",
            common.r
        )));
    }
    MoranSpec::from_path(&common.spec)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CoreError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CoreError::Io(e.to_string())),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CoreError::Io(e.to_string())),
    }
}

/// Resolve `--depth`: a fixed depth discretizes directly; "auto" grows the
/// depth until the transport bound is small enough to certify the n-point
/// error. Two passes: a coarse solve predicts how many extra levels the
/// bound needs, then the prediction is verified (and bumped) until the
/// adequacy check itself passes.
fn resolve_measure(
    spec: &MoranSpec,
    depth: DepthArg,
    target_n: usize,
    r: f64,
) -> Result<AtomMeasure, CoreError> {
    let cap = atom_cap()?;
    match depth {
        DepthArg::Fixed(m) => discretize_with_cap(spec, m, cap),
        DepthArg::Auto => {
            // Coarse pass: enough atoms that the n-point error is positive
            // and stable.
            let floor = (4 * (target_n + 1)).max(64);
            let mut m = 1usize;
            let mut measure = discretize_with_cap(spec, m, cap)?;
            while measure.len() < floor {
                m += 1;
                measure = discretize_with_cap(spec, m, cap)?;
            }
            let bounds = spec.bounds()?;
            loop {
                let (adequate, margin) = depth_adequacy(&measure, target_n, r, None)?;
                if adequate {
                    return Ok(measure);
                }
                // Each extra level shrinks the transport bound by at least
                // the largest contraction ratio; predict how many levels
                // close the remaining gap, conservatively.
                let step = if margin > 0.0 {
                    ((1.0 / margin).ln() / -bounds.c_hi.ln()).ceil() as usize
                } else {
                    2
                };
                m += step.clamp(1, 8);
                if m > 64 {
                    return Err(CoreError::InvalidArgument(format!(
                        "auto depth exceeded 64 levels without reaching adequacy for n = {target_n}"
                    )));
                }
                measure = discretize_with_cap(spec, m, cap)?;
            }
        }
    }
}

/// Clamp a requested point count to the atom count, warning on stderr.
fn clamp_n(n: usize, measure: &AtomMeasure) -> usize {
    if n > measure.len() {
        eprintln!(
            "warning: {n} points exceed the {} atoms; clamping (error is zero from there on)",
            measure.len()
        );
        measure.len()
    } else {
        n
    }
}

/// Quantile seeds for Lloyd: the atom at each (i + 1/2)/n mass quantile,
/// indices forced strictly increasing so the seeds are distinct.
fn lloyd_seeds(measure: &AtomMeasure, n: usize) -> Vec<f64> {
    let weights = measure.weights();
    let positions = measure.positions();
    let mut cum = 0.0f64;
    let cumulative: Vec<f64> = weights
        .iter()
        .map(|w| {
            cum += w;
            cum
        })
        .collect();
    let mut seeds = Vec::with_capacity(n);
    let mut prev: Option<usize> = None;
    for i in 0..n {
        let q = (i as f64 + 0.5) / n as f64;
        let mut idx = cumulative.partition_point(|&c| c < q);
        if let Some(p) = prev {
            idx = idx.max(p + 1);
        }
        idx = idx.min(positions.len() - 1);
        seeds.push(positions[idx]);
        prev = Some(idx);
    }
    seeds
}

/// Adequacy gate shared by the solve-like commands: checks the solved cost
/// at n and fails with the adequacy exit code unless forced.
fn gate_adequacy(
    measure: &AtomMeasure,
    e_pow_r: f64,
    r: f64,
    force: bool,
) -> Result<(), CoreError> {
    let (adequate, margin) =
        moranq_core::measure::adequacy_for_cost(measure, e_pow_r, r, None);
    if adequate || force {
        return Ok(());
    }
    let e = e_pow_r.powf(1.0 / r);
    Err(CoreError::AdequacyFailed {
        w_inf_bound: measure.w_inf_bound(),
        required: moranq_core::DEFAULT_SAFETY * e,
        margin,
    })
}

// --- commands ---------------------------------------------------------------

fn cmd_validate(cmd: ValidateCmd) -> Result<u8, CoreError> {
    let spec = load_spec(&cmd.common)?;
    let report = spec.validate(cmd.common.r);
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_validation_text(&mut buf, &report)?,
        Format::Jsonl => mio::write_validation_jsonl(&mut buf, &report)?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(if report.is_admissible() { 0 } else { 1 })
}

fn cmd_atoms(cmd: AtomsCmd) -> Result<u8, CoreError> {
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let DepthArg::Fixed(m) = cmd.depth else {
        return Err(CoreError::InvalidArgument(
            "atoms needs a fixed --depth (auto depth needs a point count to target)".into(),
        ));
    };
    let measure = discretize_with_cap(&spec, m, atom_cap()?)?;
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_atoms_csv(&mut buf, &measure)?,
        Format::Jsonl => mio::write_atoms_jsonl(&mut buf, &measure)?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}

fn chain_at(spec: &MoranSpec, k: usize, r: f64) -> Result<Antichain, CoreError> {
    if k == 0 {
        Antichain::root(spec, r)
    } else {
        antichain(spec, k, r)
    }
}

fn cmd_antichain(cmd: AntichainCmd) -> Result<u8, CoreError> {
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let chain = chain_at(&spec, cmd.k, cmd.common.r)?;
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_antichain_csv(&mut buf, &chain, spec.base_len())?,
        Format::Jsonl => mio::write_antichain_jsonl(&mut buf, &chain, spec.base_len())?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}

/// Solve the n-point problem behind quantize/census: one DP solve supplies
/// both the adequacy verdict and the quantizer.
fn solve_gated(
    measure: &AtomMeasure,
    n: usize,
    r: f64,
    force: bool,
) -> Result<Quantizer, CoreError> {
    let n_eff = clamp_n(n, measure);
    let solution = dp_solve(measure, n_eff, r)?;
    gate_adequacy(measure, solution.per_layer_costs()[n_eff - 1], r, force)?;
    solution.quantizer(n_eff)
}

fn cmd_quantize(cmd: QuantizeCmd) -> Result<u8, CoreError> {
    if cmd.n == 0 {
        return Err(CoreError::InvalidArgument(
            "point count must be at least 1".into(),
        ));
    }
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let r = cmd.common.r;
    let measure = resolve_measure(&spec, cmd.depth, cmd.n, r)?;
    let q = match cmd.method {
        MethodArg::Dp => solve_gated(&measure, cmd.n, r, cmd.force)?,
        MethodArg::Lloyd => {
            // The gate still needs the optimal cost; reuse its solve for
            // the verdict, then refine from quantile seeds.
            let n_eff = clamp_n(cmd.n, &measure);
            let solution = dp_solve(&measure, n_eff, r)?;
            gate_adequacy(&measure, solution.per_layer_costs()[n_eff - 1], r, cmd.force)?;
            let seeds = lloyd_seeds(&measure, n_eff);
            let refined = lloyd(&measure, &seeds, r)?;
            debug_assert!(refined.method == Method::Lloyd);
            refined
        }
    };
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_quantizer_csv(&mut buf, &q)?,
        Format::Jsonl => mio::write_quantizer_jsonl(&mut buf, &q)?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}

fn cmd_sweep(cmd: SweepCmd) -> Result<u8, CoreError> {
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let r = cmd.common.r;
    if cmd.n_min > cmd.n_max {
        return Err(CoreError::InvalidArgument(format!(
            "inverted point-count range [{}, {}]",
            cmd.n_min, cmd.n_max
        )));
    }
    let measure = resolve_measure(&spec, cmd.depth, cmd.n_max, r)?;
    let rows = sweep(&spec, &measure, cmd.n_min, cmd.n_max, r, cmd.k_rule, !cmd.force)?;
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_sweep_csv(&mut buf, &rows)?,
        Format::Jsonl => mio::write_sweep_jsonl(&mut buf, &rows)?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}

fn cmd_census(cmd: CensusCmd) -> Result<u8, CoreError> {
    if cmd.n == 0 {
        return Err(CoreError::InvalidArgument(
            "point count must be at least 1".into(),
        ));
    }
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let r = cmd.common.r;
    let measure = resolve_measure(&spec, cmd.depth, cmd.n, r)?;
    let q = solve_gated(&measure, cmd.n, r, cmd.force)?;
    let k = match cmd.k {
        Some(k) => k,
        None => choose_k(&spec, r, q.n, cmd.k_rule)?,
    };
    let chain = chain_at(&spec, k, r)?;
    let census_report = census(&spec, &q, &chain)?;
    let cells = cell_report(&measure, &q, &chain)?;
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_census_csv(&mut buf, &census_report, &cells)?,
        Format::Jsonl => mio::write_census_jsonl(&mut buf, &census_report, &cells)?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}

fn cmd_dims(cmd: DimsCmd) -> Result<u8, CoreError> {
    let spec = load_spec(&cmd.common)?;
    spec.ensure_admissible()?;
    let r = cmd.common.r;
    if cmd.n_min > cmd.n_max {
        return Err(CoreError::InvalidArgument(format!(
            "inverted window [{}, {}]",
            cmd.n_min, cmd.n_max
        )));
    }
    let measure = resolve_measure(&spec, cmd.depth, cmd.n_max, r)?;
    let rows = sweep(&spec, &measure, cmd.n_min, cmd.n_max, r, cmd.k_rule, !cmd.force)?;
    let est = dimension_estimate(&rows, (cmd.n_min, cmd.n_max), r, cmd.s_probe)?;
    let profile = match &cmd.epsilons {
        Some(list) => {
            let mut eps = Vec::new();
            for part in list.split(',') {
                let v: f64 = part.trim().parse().map_err(|_| {
                    CoreError::InvalidArgument(format!("bad radius {part:?} in --epsilons"))
                })?;
                eps.push(v);
            }
            let bounds = spec.bounds()?;
            Some(ball_mass_profile(&measure, &eps, Some(&bounds))?)
        }
        None => None,
    };
    let mut buf = Vec::new();
    match cmd.common.format {
        Format::Csv => mio::write_dims_csv(&mut buf, &est, profile.as_ref())?,
        Format::Jsonl => mio::write_dims_jsonl(&mut buf, &est, profile.as_ref())?,
    }
    emit(&cmd.common.out, &buf)?;
    Ok(0)
}
