use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kmpp_cli::commands::{self, ChainArgs};
use kmpp_cli::config::{parse_k_list, ConfigFile, DeltaSpec, ExperimentConfig, DEFAULT_DELTA_EXP, DEFAULT_SEED, DEFAULT_TRIALS};
use kmpp_cli::error::{CliError, Result};
use kmpp_cli::formats::{emit, read_instance, read_json, write_json, CentersFile};
use kmpp_core::oracle::{DEFAULT_MAX_LOCATIONS, DEFAULT_MAX_SEQUENCES};

#[derive(Parser, Debug)]
#[command(name = "kmpp", version, about = "D² seeding experiments on a lower-bound instance family")]
struct Cli {
    /// Base seed of the random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 or unset: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, or output directory for `experiment`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Group spacing: a number, `2^k`, or `schedule`.
    #[arg(long)]
    delta: Option<DeltaSpec>,
    /// Take the spacing from the schedule at `k̄ = k − 1`.
    #[arg(long, conflicts_with = "delta")]
    delta_from_schedule: bool,
    /// Exponent δ of the target approximation factor `δ·ln k`.
    #[arg(long)]
    delta_exp: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write an instance as JSON.
    Gen(InstanceArgs),
    /// Run one seeding trial on an instance.
    Seed {
        #[arg(long)]
        instance: PathBuf,
        /// Number of centers (default: the instance's k).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Refine the seeds with this many Lloyd iterations.
        #[arg(long)]
        lloyd: Option<usize>,
    },
    /// Evaluate a center set on an instance.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        /// JSON list of location indices or of `[x, y]` pairs.
        #[arg(long)]
        centers: PathBuf,
    },
    /// Exact optimum and seeding law on a tiny instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_LOCATIONS)]
        max_locations: usize,
        /// Also enumerate the full seeding outcome tree.
        #[arg(long)]
        exact_seeding: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_SEQUENCES)]
        max_sequences: u128,
        /// Report `Pr[Φ/Φ* ≤ alpha]` from the outcome tree.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Schedule values, inequalities and the covering chain.
    Chain {
        #[arg(long)]
        kbar: Option<f64>,
        /// Natural log of k̄, for k̄ beyond floating-point range.
        #[arg(long)]
        ln_kbar: Option<f64>,
        /// Exponent δ.
        #[arg(long, default_value_t = DEFAULT_DELTA_EXP)]
        delta: f64,
        /// Replace the schedule spacing with an explicit one.
        #[arg(long)]
        geom_delta: Option<f64>,
        /// Replace the schedule α when choosing the absorbing state.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        dp: bool,
        /// Number of simulated walks.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long)]
        check_ineq: bool,
    },
    /// Batches of seeding trials, one per k.
    Experiment {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        trials: Option<u64>,
        /// Use this instance instead of generating one.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Merge experiment summaries into one CSV table.
    Report {
        /// Summary JSON files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn resolve_delta(a: &InstanceArgs, cfg: &ConfigFile) -> Option<DeltaSpec> {
    if a.delta_from_schedule {
        Some(DeltaSpec::Schedule)
    } else {
        a.delta.or(cfg.delta)
    }
}

fn resolve_ks(a: &InstanceArgs, cfg: &ConfigFile) -> Result<Vec<usize>> {
    match &a.k {
        Some(s) => parse_k_list(s).map_err(CliError::Param),
        None => Ok(cfg.k.clone().map(|k| k.into_vec()).unwrap_or_default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    let out = cli.out.clone().or(cfg.out.clone());
    let out = out.as_deref();

    match cli.cmd {
        Cmd::Gen(a) => {
            let ks = resolve_ks(&a, &cfg)?;
            let [k] = ks[..] else {
                return Err(CliError::Param(format!("gen needs exactly one k, got {ks:?}")));
            };
            let delta = resolve_delta(&a, &cfg).ok_or_else(|| CliError::Param("gen needs --delta or --delta-from-schedule".into()))?;
            let delta_exp = a.delta_exp.or(cfg.delta_exp).unwrap_or(DEFAULT_DELTA_EXP);
            commands::cmd_gen(k, a.m.or(cfg.m).unwrap_or(1.0), a.r.or(cfg.r).unwrap_or(1.0), delta, delta_exp, out)
        }
        Cmd::Seed { instance, k, trial, lloyd } => {
            let inst = read_instance(&instance)?;
            write_json(out, &commands::cmd_seed(&inst, k, seed, trial, lloyd)?)
        }
        Cmd::Evaluate { instance, centers } => {
            let inst = read_instance(&instance)?;
            let c: CentersFile = read_json(&centers)?;
            write_json(out, &commands::cmd_evaluate(&inst, &c)?)
        }
        Cmd::Oracle { instance, k, max_locations, exact_seeding, max_sequences, alpha } => {
            let inst = read_instance(&instance)?;
            let res = commands::cmd_oracle(&inst, k, max_locations, exact_seeding.then_some(max_sequences), alpha)?;
            write_json(out, &res)
        }
        Cmd::Chain { kbar, ln_kbar, delta, geom_delta, alpha, steps, dp, mc, check_ineq } => {
            let args = ChainArgs { kbar, ln_kbar, delta_exp: delta, geom_delta, alpha, steps, dp, mc, check_ineq, seed, threads };
            write_json(out, &commands::cmd_chain(&args)?)
        }
        Cmd::Experiment { inst, trials, instance } => {
            let exp = ExperimentConfig {
                ks: resolve_ks(&inst, &cfg)?,
                m: inst.m.or(cfg.m).unwrap_or(1.0),
                r: inst.r.or(cfg.r).unwrap_or(1.0),
                delta: resolve_delta(&inst, &cfg).unwrap_or(DeltaSpec::PowK),
                delta_exp: inst.delta_exp.or(cfg.delta_exp).unwrap_or(DEFAULT_DELTA_EXP),
                trials: trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS),
                base_seed: seed,
                out_dir: out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
                threads,
                instance: instance.or(cfg.instance.clone()),
            };
            let summaries = commands::cmd_experiment(&exp)?;
            for s in &summaries {
                println!("k={} trials={} success_rate={} xi_rate={} dp={}", s.k, s.trials, s.success_rate, s.xi_rate, s.dp);
            }
            Ok(())
        }
        Cmd::Report { inputs } => emit(out, &commands::cmd_report(&inputs)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
