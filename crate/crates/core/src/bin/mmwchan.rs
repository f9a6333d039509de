use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mmwchan::channel::total_tap_energy;
use mmwchan::config::ScenarioConfig;
use mmwchan::io::{read_tap_tensor_file, TensorFile};
use mmwchan::run;

#[derive(Parser)]
#[command(name = "mmwchan", version, about = "Clustered mmWave MIMO channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set d=50`. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed; shorthand for `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix; extensions are appended.
    #[arg(long, default_value = "mmwchan")]
    out: PathBuf,
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one sampled channel and its metadata.
    GenerateStatic {
        #[command(flatten)]
        common: Common,
        /// Drop index; selects the random substream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Write a time-variant snapshot sequence and its metadata.
    GenerateDynamic {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Run `n_trials` drops and write the spectral-efficiency CDF.
    EvalCdf {
        #[command(flatten)]
        common: Common,
    },
    /// Print a summary of a tap tensor file.
    Inspect { file: PathBuf },
}

fn load(common: &Common) -> mmwchan::Result<ScenarioConfig> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| mmwchan::Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    ScenarioConfig::with_overrides(&text, &overrides)
}

fn pool(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

fn inspect(file: &PathBuf) -> mmwchan::Result<()> {
    let describe = |label: &str, ch: &mmwchan::channel::SampledChannel| {
        println!(
            "{label}: {} taps of {}x{}, T_s = {:e} s, first tap at grid index {}, energy {:e}",
            ch.len(),
            ch.n_r(),
            ch.n_t(),
            ch.sample_period,
            ch.tap_offset,
            total_tap_energy(ch)
        );
    };
    match read_tap_tensor_file(file)? {
        TensorFile::Static(ch) => describe("channel", &ch),
        TensorFile::Sequence {
            snapshots,
            snapshot_period,
        } => {
            println!("{} snapshots, spacing {snapshot_period:e} s", snapshots.len());
            for (k, s) in snapshots.iter().enumerate() {
                describe(&format!("snapshot {k}"), s);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::GenerateStatic { common, trial } => load(common)
            .and_then(|cfg| run::generate_static_files(&cfg, *trial, &common.out)),
        Command::GenerateDynamic { common, trial } => load(common)
            .and_then(|cfg| run::generate_dynamic_files(&cfg, *trial, &common.out)),
        Command::EvalCdf { common } => {
            pool(common.threads);
            load(common).and_then(|cfg| run::eval_cdf_files(&cfg, &common.out))
        }
        Command::Inspect { file } => inspect(file).map(|()| run::Outputs { files: vec![] }),
    };
    match outcome {
        Ok(out) => {
            for f in out.files {
                info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
