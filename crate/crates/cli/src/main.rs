use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pixelctl::harness::output::{sha256_hex, summary_header, summary_row};
use pixelctl::harness::{
    render_run, replay_manifest, run_ablation_seeds, run_simulation, run_sweep, train_from_config, write_outputs,
    AblationMode, Overrides, RunConfig, SweepAxes,
};
use pixelctl::metrics::{edp_report, EdpInputs};
use pixelctl::scheduler::TrainConfig;
use pixelctl::sensor::{NoiseModel, PixelFormat};
use pixelctl::Error;

#[derive(Parser)]
#[command(name = "pixelctl", version, about = "Closed-loop patch-selective sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write its outputs.
    Simulate(RunArgs),
    /// Compare scoring modes on identical scenes.
    Ablate(AblateArgs),
    /// Cross product over sensor and scheduler axes into one CSV.
    Sweep(SweepArgs),
    /// Energy-delay product relative to a baseline.
    Edp(EdpArgs),
    /// Write annotated frame_%06d.ppm images of a run.
    Render(RunArgs),
    /// Train the recurrent saliency predictor on generated scenes.
    TrainPredictor(TrainArgs),
    /// Re-run a manifest's configuration and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config, then $PIXELCTL_OUT, then ./pixelctl-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// random, saliency-only, detection-only, tracking-only or all.
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    pixel_format: Option<PixelFormat>,
    /// Fraction of patches sensed per frame.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    feature_dim: Option<usize>,
    /// none, gaussian:<std> or poisson:<scale>.
    #[arg(long)]
    noise: Option<NoiseModel>,
    #[arg(long)]
    full_sense_period: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            pixel_format: self.pixel_format,
            budget: self.budget,
            feature_dim: self.feature_dim,
            noise: self.noise.clone(),
            full_sense_period: self.full_sense_period,
            frames: self.frames,
            output_dir: self.out.clone(),
        }
    }

    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut config = load_config(self.config.as_deref())?;
        config.apply(&self.overrides());
        if let Some(m) = self.mode {
            config = config.with_mode(m);
        }
        Ok(config)
    }
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of consecutive master seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Modes to compare (default: all five).
    #[arg(long, value_delimiter = ',')]
    modes: Vec<AblationMode>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    full_sense_period: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    mode: Vec<AblationMode>,
    #[arg(long, value_delimiter = ',')]
    pixel_format: Vec<PixelFormat>,
    #[arg(long, value_delimiter = ',')]
    budget: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    feature_dim: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    noise: Vec<NoiseModel>,
    /// Run configurations one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct EdpArgs {
    /// Baseline and proposed workload in GFLOPs.
    #[arg(long, num_args = 2, value_names = ["BASELINE", "PROPOSED"])]
    gflops: Vec<f64>,
    /// Baseline and proposed latency in ms.
    #[arg(long, num_args = 2, value_names = ["BASELINE", "PROPOSED"])]
    ms: Vec<f64>,
    /// Baseline and proposed board power in W.
    #[arg(long, num_args = 2, value_names = ["BASELINE", "PROPOSED"])]
    power: Option<Vec<f64>>,
    /// Idle board power in W.
    #[arg(long)]
    idle: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<usize>,
    /// Weight file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    train_scenes: usize,
    #[arg(long, default_value_t = 1)]
    held_out: usize,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 8)]
    bptt: usize,
}

#[derive(Args)]
struct ReplayArgs {
    /// manifest.json of an earlier run.
    manifest: PathBuf,
    /// Directory for the replayed outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::from_json_file)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn simulate(args: &RunArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let dir = config.output_dir();
    let artifacts = run_simulation(&config)?;
    let manifest = write_outputs(&artifacts, &dir)?;
    let r = &artifacts.report;
    println!("{}", summary_header());
    println!("{}", summary_row(&artifacts.config, r));
    println!("outputs\t{}\tdigest\t{}", dir.display(), manifest.digest);
    Ok(())
}

fn ablate(args: &AblateArgs) -> Result<(), Error> {
    let config = args.run.resolve()?;
    let modes = if args.modes.is_empty() {
        AblationMode::ALL.to_vec()
    } else {
        args.modes.clone()
    };
    let seeds: Vec<u64> = (0..args.seeds.max(1)).map(|i| config.seed + i).collect();
    let report = run_ablation_seeds(&config, &modes, &seeds)?;
    let dir = config.output_dir();
    create_dir(&dir)?;
    let csv = report.to_csv();
    write(&dir.join("ablation.csv"), csv.as_bytes())?;
    write(
        &dir.join("ablation.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    print!("{csv}");
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let mut base = load_config(args.config.as_deref())?;
    base.apply(&Overrides {
        frames: args.frames,
        full_sense_period: args.full_sense_period,
        output_dir: args.out.clone(),
        ..Overrides::default()
    });
    let axes = SweepAxes {
        pixel_format: args.pixel_format.clone(),
        feature_dim: args.feature_dim.clone(),
        budget: args.budget.clone(),
        noise: args.noise.clone(),
        mode: args.mode.clone(),
        seed: args.seed.clone(),
    };
    let result = run_sweep(&base, &axes, !args.serial)?;
    let dir = base.output_dir();
    create_dir(&dir)?;
    let csv = result.to_csv();
    write(&dir.join("sweep.csv"), csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn edp(args: &EdpArgs) -> Result<(), Error> {
    let inputs = EdpInputs {
        baseline_gflops: args.gflops[0],
        proposed_gflops: args.gflops[1],
        baseline_ms: args.ms[0],
        proposed_ms: args.ms[1],
        baseline_power_w: args.power.as_ref().map(|p| p[0]),
        proposed_power_w: args.power.as_ref().map(|p| p[1]),
        idle_power_w: args.idle,
    };
    let report = edp_report(&inputs)?;
    println!("ideal power {:.1}X", report.ideal.power_ratio);
    println!("ideal EDP {:.1}X", report.ideal.edp_ratio);
    if let Some(m) = report.measured {
        println!("baseline energy {:.2} J/frame", m.baseline_energy);
        println!("proposed energy {:.2} J/frame", m.proposed_energy);
        println!("measured power {:.2}X", m.power_ratio);
        println!("measured EDP {:.2}X", m.edp_ratio);
    }
    Ok(())
}

fn render(args: &RunArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let dir = config.output_dir();
    let artifacts = run_simulation(&config)?;
    write_outputs(&artifacts, &dir)?;
    let paths = render_run(&artifacts, &dir.join("frames"))?;
    println!("rendered\t{}\tframes\t{}", dir.join("frames").display(), paths.len());
    Ok(())
}

fn train(args: &TrainArgs) -> Result<(), Error> {
    let mut config = load_config(args.config.as_deref())?;
    config.apply(&Overrides {
        seed: args.seed,
        frames: args.frames,
        ..Overrides::default()
    });
    let train = TrainConfig {
        hidden_dim: args.hidden,
        learning_rate: args.learning_rate,
        bptt_length: args.bptt,
        epochs: args.epochs,
        max_steps: None,
        seed: config.seed,
    };
    let (outcome, patches) = train_from_config(&config, args.train_scenes, args.held_out, &train)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    outcome.predictor.save(&args.out, patches as u32)?;
    let bytes = std::fs::read(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    println!(
        "steps\t{}\tfinal_loss\t{}\theld_out_auroc\t{}\tsha256\t{}",
        outcome.steps,
        fmt_opt(outcome.epoch_losses.last().copied()),
        fmt_opt(outcome.held_out_auroc),
        sha256_hex(&bytes)
    );
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<(), Error> {
    let out = match &args.out {
        Some(o) => o.clone(),
        None => RunConfig::default().output_dir().join("replay"),
    };
    let outcome = replay_manifest(&args.manifest, &out)?;
    if outcome.reproduced() {
        println!("reproduced\t{}", outcome.replayed.digest);
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "replay diverged in {}",
            outcome.mismatches().join(", ")
        )))
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ablate(a) => ablate(a),
        Command::Sweep(a) => sweep(a),
        Command::Edp(a) => edp(a),
        Command::Render(a) => render(a),
        Command::TrainPredictor(a) => train(a),
        Command::Replay(a) => replay(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error\tusage\t{}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error\t{}\t{}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
