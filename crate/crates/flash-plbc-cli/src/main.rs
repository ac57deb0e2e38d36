//! Command-line driver for the partitioned-code flash experiments.
//!
//! Every value has three layers: built-in default, config file (`--config`,
//! flat `key = value` lines), and command-line flag, in increasing
//! precedence. CSV files land at `--output`, defaulting to a per-subcommand
//! name under `$FLASH_PLBC_OUTDIR` (or the working directory).

mod config;

use clap::{Args, Parser, Subcommand};
use config::FileConfig;
use flash_plbc::bch::FieldContext;
use flash_plbc::channel::ChannelParams;
use flash_plbc::experiments::{
    default_alpha_grid, default_eta_pre_grid, emit_histogram, run_trial_detailed, sweep_allocation,
    sweep_preread, table_allocations, trial_rng, MonteCarloOpts,
};
use flash_plbc::gf2::Gf2Vector;
use flash_plbc::limits::defect_capacities;
use flash_plbc::pbch::{circ, DefectVector, PbchCode};
use rand::Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "flash-plbc",
    version,
    about = "Defect-masking partitioned BCH codes on a simulated flash wordline channel",
    after_help = "Config precedence: flag > --config file > built-in default.\n\
                  Output files default to $FLASH_PLBC_OUTDIR/<subcommand>.csv."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity grid for the stuck-at/BSC memory model (CSV).
    Limits(LimitsArgs),
    /// Construct the allocation-grid codes and verify their identities.
    CodecCheck(CodecCheckArgs),
    /// Failure-rate sweep over ICI scaling x redundancy allocation (CSV).
    SweepAlpha(SweepAlphaArgs),
    /// Failure-rate sweep over pre-read level x redundancy allocation (CSV).
    SweepPreread(SweepPrereadArgs),
    /// Threshold-voltage histogram of the coded wordline (CSV).
    Histogram(HistogramArgs),
    /// Run single trials and dump their records to stdout.
    Trial(TrialArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Flat key = value config file (lower precedence than flags).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for all random streams.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct OutputArg {
    /// Output CSV path.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

/// Physical channel overrides; anything unset falls back to the config file,
/// then to the reference simulation parameters.
#[derive(Args, Default)]
struct ChannelArgs {
    #[arg(long)]
    init_mean: Option<f64>,
    #[arg(long)]
    init_std: Option<f64>,
    #[arg(long)]
    v_verify_s1: Option<f64>,
    #[arg(long)]
    delta_vpp: Option<f64>,
    #[arg(long)]
    gamma_x: Option<f64>,
    #[arg(long)]
    gamma_y: Option<f64>,
    #[arg(long)]
    gamma_xy: Option<f64>,
    /// ICI scaling factor.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma_read: Option<f64>,
    /// Hard-decision read level.
    #[arg(long)]
    eta: Option<f64>,
    /// Defect pre-read level (must not exceed eta).
    #[arg(long)]
    eta_pre: Option<f64>,
}

#[derive(Args)]
struct LimitsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    output: OutputArg,
    /// Defect probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// BSC crossover probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
}

#[derive(Args)]
struct CodecCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Allocations "l:r", comma separated.
    #[arg(long, value_delimiter = ',')]
    allocations: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    output: OutputArg,
    #[command(flatten)]
    channel: ChannelArgs,
    /// ICI scaling grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Allocations "l:r", comma separated.
    #[arg(long, value_delimiter = ',')]
    allocations: Option<Vec<String>>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Stop a point after this many failures; 0 disables early stopping.
    #[arg(long)]
    max_failures: Option<u64>,
}

#[derive(Args)]
struct SweepPrereadArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    output: OutputArg,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Pre-read levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta_pres: Option<Vec<f64>>,
    /// Allocations "l:r", comma separated.
    #[arg(long, value_delimiter = ',')]
    allocations: Option<Vec<String>>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Stop a point after this many failures; 0 disables early stopping.
    #[arg(long)]
    max_failures: Option<u64>,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    output: OutputArg,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Masking dimensions of the allocation.
    #[arg(long)]
    l: Option<usize>,
    /// Correction redundancy of the allocation.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Masking dimensions of the allocation.
    #[arg(long)]
    l: Option<usize>,
    /// Correction redundancy of the allocation.
    #[arg(long)]
    r: Option<usize>,
    /// Number of trials to dump.
    #[arg(long)]
    count: Option<u64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Limits(a) => cmd_limits(a),
        Command::CodecCheck(a) => cmd_codec_check(a),
        Command::SweepAlpha(a) => cmd_sweep_alpha(a),
        Command::SweepPreread(a) => cmd_sweep_preread(a),
        Command::Histogram(a) => cmd_histogram(a),
        Command::Trial(a) => cmd_trial(a),
    }
}

fn load_config(common: &CommonArgs) -> Result<FileConfig, String> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::empty()),
    }
}

fn pick_f64(flag: Option<f64>, file: &FileConfig, key: &str, default: f64) -> Result<f64, String> {
    Ok(flag.or(file.get_f64(key)?).unwrap_or(default))
}

fn resolve_channel(args: &ChannelArgs, file: &FileConfig) -> Result<ChannelParams, String> {
    let d = ChannelParams::default();
    let params = ChannelParams {
        init_mean: pick_f64(args.init_mean, file, "init_mean", d.init_mean)?,
        init_std: pick_f64(args.init_std, file, "init_std", d.init_std)?,
        v_verify_s1: pick_f64(args.v_verify_s1, file, "v_verify_s1", d.v_verify_s1)?,
        delta_vpp: pick_f64(args.delta_vpp, file, "delta_vpp", d.delta_vpp)?,
        gamma_x: pick_f64(args.gamma_x, file, "gamma_x", d.gamma_x)?,
        gamma_y: pick_f64(args.gamma_y, file, "gamma_y", d.gamma_y)?,
        gamma_xy: pick_f64(args.gamma_xy, file, "gamma_xy", d.gamma_xy)?,
        alpha: pick_f64(args.alpha, file, "alpha", d.alpha)?,
        sigma_read: pick_f64(args.sigma_read, file, "sigma_read", d.sigma_read)?,
        eta: pick_f64(args.eta, file, "eta", d.eta)?,
        eta_pre: pick_f64(args.eta_pre, file, "eta_pre", d.eta_pre)?,
    };
    params.validate().map_err(|e| format!("invalid channel parameters: {e}"))?;
    Ok(params)
}

fn resolve_seed(common: &CommonArgs, file: &FileConfig) -> Result<u64, String> {
    Ok(common.seed.or(file.get_u64("seed")?).unwrap_or(DEFAULT_SEED))
}

fn resolve_mc_opts(
    trials: Option<u64>,
    max_failures: Option<u64>,
    file: &FileConfig,
) -> Result<MonteCarloOpts, String> {
    let defaults = MonteCarloOpts::default();
    let trials = trials.or(file.get_u64("trials")?).unwrap_or(defaults.trials);
    let max = max_failures
        .or(file.get_u64("max_failures")?)
        .unwrap_or(100);
    Ok(MonteCarloOpts {
        trials,
        stop_after_failures: (max > 0).then_some(max),
        batch: defaults.batch,
    })
}

fn resolve_allocations(
    flag: &Option<Vec<String>>,
    file: &FileConfig,
    key: &str,
) -> Result<Vec<(usize, usize)>, String> {
    if let Some(items) = flag {
        return items.iter().map(|s| config::parse_allocation(s)).collect();
    }
    Ok(file.get_alloc_list(key)?.unwrap_or_else(table_allocations))
}

fn output_path(flag: Option<PathBuf>, default_name: &str) -> PathBuf {
    flag.unwrap_or_else(|| match std::env::var_os("FLASH_PLBC_OUTDIR") {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => PathBuf::from(default_name),
    })
}

fn write_output(path: &PathBuf, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn field() -> FieldContext {
    FieldContext::new(10).expect("degree-10 field")
}

fn cmd_limits(args: LimitsArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let default_grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let eps_list = match args.epsilon {
        Some(v) => v,
        None => file.get_f64_list("epsilon")?.unwrap_or_else(|| default_grid.clone()),
    };
    let p_list = match args.p {
        Some(v) => v,
        None => file.get_f64_list("p")?.unwrap_or(default_grid),
    };
    let mut csv = String::from("epsilon,p,c_min_plus,c_max_plus\n");
    for &eps in &eps_list {
        for &p in &p_list {
            let c = defect_capacities(eps, p).map_err(|e| format!("invalid limits input: {e}"))?;
            writeln!(csv, "{eps:.6},{p:.6},{:.6},{:.6}", c.c_min_plus, c.c_max_plus)
                .expect("string write");
        }
    }
    write_output(&output_path(args.output.output, "limits.csv"), &csv)
}

fn cmd_codec_check(args: CodecCheckArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let seed = resolve_seed(&args.common, &file)?;
    let allocations = resolve_allocations(&args.allocations, &file, "allocations")?;
    let ctx = field();
    for (l, r) in allocations {
        let n = ctx.n();
        if l + r >= n {
            return Err(format!("allocation {l}:{r} leaves no message bits at n={n}"));
        }
        let code = PbchCode::construct(n, n - l - r, l, ctx.clone())
            .map_err(|e| format!("code construction failed for {l}:{r}: {e}"))?;
        code.verify_identities();
        check_roundtrips(&code, seed)?;
        println!(
            "l={l} r={r}: identities ok, k={}, t={}, roundtrips ok",
            code.k(),
            code.t_correct()
        );
    }
    println!("all codec checks passed");
    Ok(())
}

/// Random masked-encode / flip / decode cycles; failures inside the decoding
/// radius are hard errors.
fn check_roundtrips(code: &PbchCode, seed: u64) -> Result<(), String> {
    let n = code.n();
    let mut rng = trial_rng(seed, u32::MAX, 0);
    for round in 0..20 {
        let msg = Gf2Vector::random(code.k(), &mut rng);
        let mut defects = DefectVector::all_normal(n);
        for _ in 0..4 {
            let pos = (rng.random::<u64>() % n as u64) as usize;
            defects.set(
                pos,
                if rng.random::<bool>() {
                    flash_plbc::pbch::CellState::Stuck1
                } else {
                    flash_plbc::pbch::CellState::Stuck0
                },
            );
        }
        let out = code
            .encode(&msg, &defects)
            .map_err(|e| format!("encode failed in round {round}: {e}"))?;
        if out.unmasked_count > code.t_correct() {
            // Unmasked defects alone exceed the correction radius; no
            // guarantee applies, so there is nothing to verify.
            continue;
        }
        let budget = code.t_correct() - out.unmasked_count;
        let mut y = circ(&out.codeword, &defects).map_err(|e| e.to_string())?;
        let mut flipped = std::collections::BTreeSet::new();
        while flipped.len() < budget {
            let p = (rng.random::<u64>() % n as u64) as usize;
            if defects.stuck_bit(p).is_none() && flipped.insert(p) {
                y.flip(p);
            }
        }
        match code.decode(&y).map_err(|e| e.to_string())? {
            Some(m) if m == msg => {}
            Some(_) => return Err(format!("round {round}: wrong message after decoding")),
            None => return Err(format!("round {round}: decoder failed within its radius")),
        }
    }
    Ok(())
}

fn cmd_sweep_alpha(args: SweepAlphaArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let params = resolve_channel(&args.channel, &file)?;
    let seed = resolve_seed(&args.common, &file)?;
    let opts = resolve_mc_opts(args.trials, args.max_failures, &file)?;
    let alphas = match args.alphas {
        Some(v) => v,
        None => file.get_f64_list("alphas")?.unwrap_or_else(default_alpha_grid),
    };
    let allocations = resolve_allocations(&args.allocations, &file, "allocations")?;
    let result = sweep_allocation(&field(), &params, &allocations, &alphas, seed, &opts)
        .map_err(|e| format!("sweep failed: {e}"))?;
    write_output(&output_path(args.output.output, "sweep_alpha.csv"), &result.to_csv())
}

fn cmd_sweep_preread(args: SweepPrereadArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let params = resolve_channel(&args.channel, &file)?;
    let seed = resolve_seed(&args.common, &file)?;
    let opts = resolve_mc_opts(args.trials, args.max_failures, &file)?;
    let eta_pres = match args.eta_pres {
        Some(v) => v,
        None => file.get_f64_list("eta_pres")?.unwrap_or_else(default_eta_pre_grid),
    };
    let allocations = resolve_allocations(&args.allocations, &file, "allocations")?;
    let result = sweep_preread(&field(), &params, &eta_pres, &allocations, seed, &opts)
        .map_err(|e| format!("sweep failed: {e}"))?;
    write_output(&output_path(args.output.output, "sweep_preread.csv"), &result.to_csv())
}

fn cmd_histogram(args: HistogramArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let params = resolve_channel(&args.channel, &file)?;
    let seed = resolve_seed(&args.common, &file)?;
    let l = args.l.or(file.get_usize("l")?).unwrap_or(100);
    let r = args.r.or(file.get_usize("r")?).unwrap_or(0);
    let trials = args.trials.or(file.get_u64("trials")?).unwrap_or(200);
    let bins = args.bins.or(file.get_usize("bins")?).unwrap_or(60);
    let hist = emit_histogram(&field(), &params, (l, r), trials, bins, seed)
        .map_err(|e| format!("histogram failed: {e}"))?;
    write_output(&output_path(args.output.output, "histogram.csv"), &hist.to_csv())
}

fn cmd_trial(args: TrialArgs) -> Result<(), String> {
    let file = load_config(&args.common)?;
    let params = resolve_channel(&args.channel, &file)?;
    let seed = resolve_seed(&args.common, &file)?;
    let l = args.l.or(file.get_usize("l")?).unwrap_or(10);
    let r = args.r.or(file.get_usize("r")?).unwrap_or(90);
    let count = args.count.or(file.get_u64("count")?).unwrap_or(1);
    let ctx = field();
    let n = ctx.n();
    if l + r >= n {
        return Err(format!("allocation {l}:{r} leaves no message bits at n={n}"));
    }
    let code = PbchCode::construct(n, n - l - r, l, ctx)
        .map_err(|e| format!("code construction failed: {e}"))?;
    println!(
        "l={l} r={r} alpha={:.6} sigma_read={:.6} eta={:.6} eta_pre={:.6} seed={seed}",
        params.alpha, params.sigma_read, params.eta, params.eta_pre
    );
    for t in 0..count {
        let mut rng = trial_rng(seed, 0, t as u32);
        let d = run_trial_detailed(&code, &params, &mut rng);
        println!(
            "trial {t}: defect_count={} unmasked_count={} read_errors={} decoder_failed={} message_mismatch={} failure={}",
            d.record.defect_count,
            d.record.unmasked_count,
            d.read_errors,
            d.decoder_failed,
            d.message_mismatch,
            d.record.failure
        );
    }
    Ok(())
}
