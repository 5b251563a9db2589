use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use openangle::harness::report::{analyze, write_analysis, write_indicators};
use openangle::harness::{
    dynamics_keys, load_results, load_trajectories, run_campaign, write_report, Campaign, CampaignFile, Profile,
    RunOptions,
};
use openangle::landscape::generate_instance;
use openangle::{Instance, InstanceParams};

/// Scalarized (1+λ)-EA experiments on correlated bi-objective NK-landscapes.
#[derive(Parser)]
#[command(name = "openangle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ρMNK instance and write it in binary form.
    GenInstance(GenInstance),
    /// Execute a campaign into a results store (resumes an interrupted one).
    Run(RunArgs),
    /// Write angle, deviation, registry and regression tables for a store.
    Analyze(StoreArgs),
    /// Write per-replicate indicator values for every ε policy of a store.
    Indicators(StoreArgs),
    /// Write every table, the reference sets, run dynamics and a markdown summary.
    Report(StoreArgs),
}

#[derive(Args)]
struct GenInstance {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the instance as CSV to this file.
    #[arg(long)]
    dump_text: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// Campaign file; defaults to the chosen profile.
    #[arg(long, conflicts_with = "profile")]
    campaign: Option<PathBuf>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Results store directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also store the objective vectors of every offspring.
    #[arg(long)]
    dump_offspring: bool,
    /// Override the campaign's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StoreArgs {
    /// Results store directory written by `run`.
    #[arg(long)]
    out: PathBuf,
    /// Where to put the tables; defaults to `<out>/analysis` (`<out>/report` for `report`).
    #[arg(long)]
    dest: Option<PathBuf>,
}

fn gen_instance(args: &GenInstance) -> Result<()> {
    let inst = generate_instance(InstanceParams::new(args.n, args.k, args.rho, args.seed))?;
    let mut w = BufWriter::new(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    inst.write_binary(&mut w)?;
    w.flush()?;
    if let Some(path) = &args.dump_text {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        inst.write_text(&mut w)?;
        w.flush()?;
    }
    // Read back so a bad write never goes unnoticed.
    let back = Instance::read_binary(BufReader::new(File::open(&args.out)?))?;
    if back != inst {
        bail!("instance file {} does not read back identically", args.out.display());
    }
    println!("{}", args.out.display());
    Ok(())
}

fn load_campaign(args: &RunArgs) -> Result<Campaign> {
    let mut file = match (&args.campaign, args.profile) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CampaignFile::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(ProfileArg::Full)) => CampaignFile::profile(Profile::Full),
        (None, _) => CampaignFile::profile(Profile::Desk),
    };
    if let Some(seed) = args.seed {
        file.master_seed = seed;
    }
    Ok(file.resolve()?)
}

fn run(args: &RunArgs) -> Result<()> {
    let campaign = load_campaign(args)?;
    info!("{} runs planned", campaign.total_runs());
    let summary = run_campaign(
        &campaign,
        &args.out,
        RunOptions {
            workers: args.workers,
            dump_offspring: args.dump_offspring,
        },
    )?;
    println!(
        "{}: {} runs executed, {} already stored",
        args.out.display(),
        summary.executed,
        summary.skipped
    );
    Ok(())
}

fn dest(args: &StoreArgs, default: &str) -> PathBuf {
    args.dest.clone().unwrap_or_else(|| args.out.join(default))
}

fn check_store(dir: &Path) -> Result<()> {
    if !dir.join("manifest.toml").exists() {
        bail!("{} is not a results store (no manifest.toml)", dir.display());
    }
    Ok(())
}

fn analyze_cmd(args: &StoreArgs) -> Result<()> {
    check_store(&args.out)?;
    let results = load_results(&args.out, false)?;
    let dir = dest(args, "analysis");
    write_analysis(&results, &analyze(&results)?, &dir)?;
    println!("{}", dir.display());
    Ok(())
}

fn indicators_cmd(args: &StoreArgs) -> Result<()> {
    check_store(&args.out)?;
    let results = load_results(&args.out, false)?;
    let dir = dest(args, "analysis");
    write_indicators(&results, &analyze(&results)?, &dir)?;
    println!("{}", dir.join("indicators.csv").display());
    Ok(())
}

fn report_cmd(args: &StoreArgs) -> Result<()> {
    check_store(&args.out)?;
    let mut results = load_results(&args.out, false)?;
    let keys = dynamics_keys(&results.campaign);
    results.attach_trajectories(load_trajectories(&args.out, |k| keys.contains(k))?);
    let dir = dest(args, "report");
    fs::create_dir_all(&dir)?;
    write_report(&results, &dir)?;
    println!("{}", dir.join("summary.md").display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::GenInstance(a) => gen_instance(&a),
        Command::Run(a) => run(&a),
        Command::Analyze(a) => analyze_cmd(&a),
        Command::Indicators(a) => indicators_cmd(&a),
        Command::Report(a) => report_cmd(&a),
    }
}
