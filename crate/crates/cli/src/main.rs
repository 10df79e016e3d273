use clap::{Args, Parser, Subcommand};
use prgr::io::{
    load_bundle, load_label_png, load_raw_bundle, load_scores_png, open_image, save_bundle, save_label_png,
    save_raw_bundle,
};
use prgr::metrics::{evaluate, EvalOptions};
use prgr::synth::{synth_case, SynthSpec};
use prgr::{refine_multiclass, Error, Preset, RefineConfig, Result, Rng, ScoreStack};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "prgr", version, about = "Probabilistic region-growing refinement of segmentation scoremaps")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a coarse score stack against its image.
    Refine(RefineArgs),
    /// Compare a predicted label image with ground truth.
    Eval(EvalArgs),
    /// Generate synthetic test cases.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    image: PathBuf,
    /// A score bundle directory, or one grayscale PNG per class.
    #[arg(long, num_args = 1.., required = true)]
    scores: Vec<PathBuf>,
    #[arg(long, default_value = "custom")]
    preset: Preset,
    /// JSON configuration; the preset's spacing and run count take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    classes: u32,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    trimap: Vec<usize>,
    #[arg(long = "boundary-tol", default_value_t = 2)]
    boundary_tol: usize,
    /// Variance bundle from `refine`; enables the variance-accuracy analysis.
    #[arg(long)]
    variance: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn progress(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn load_scores(paths: &[PathBuf]) -> Result<ScoreStack> {
    if let [dir] = paths {
        if dir.is_dir() {
            return load_bundle(dir);
        }
    }
    load_scores_png(paths)
}

fn refine(args: &RefineArgs, quiet: bool) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<RefineConfig>(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        None => RefineConfig::default(),
    };
    args.preset.apply(&mut cfg);
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    let image = open_image(&args.image)?.into_rgb8();
    let stack = load_scores(&args.scores)?;
    progress(
        quiet,
        format!(
            "refining {} class(es) at {}x{}, {} iteration(s) x {} run(s)",
            stack.num_classes(),
            stack.width(),
            stack.height(),
            cfg.total_iterations(),
            cfg.runs
        ),
    );
    let out = refine_multiclass(&image, &stack, &cfg)?;
    fs::create_dir_all(&args.out)?;
    save_bundle(&out.refined, &args.out.join("refined"))?;
    save_raw_bundle(stack.width(), stack.height(), stack.class_names(), &out.variance, &args.out.join("variance"))?;
    save_label_png(&out.labels, &args.out.join("labels.png"))?;
    fs::write(args.out.join("iterations.json"), serde_json::to_string_pretty(&out.manifest)? + "\n")?;
    progress(quiet, format!("wrote {}", args.out.display()));
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let pred = load_label_png(&args.pred)?;
    let gt = load_label_png(&args.gt)?;
    let opts = EvalOptions {
        num_classes: args.classes,
        trimap_bands: args.trimap.clone(),
        boundary_tolerance: args.boundary_tol,
        ..EvalOptions::default()
    };
    let variance = match &args.variance {
        Some(dir) => Some(label_variance(dir, &pred)?),
        None => None,
    };
    let report = evaluate(&pred, &gt, &opts, variance.as_deref())?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

/// Variance of each pixel's predicted class; a single plane serves every label.
fn label_variance(dir: &Path, pred: &prgr::LabelMap) -> Result<Vec<f64>> {
    let (m, planes) = load_raw_bundle(dir)?;
    if (m.width, m.height) != (pred.width(), pred.height()) {
        return Err(Error::DimensionMismatch {
            expected_width: pred.width(),
            expected_height: pred.height(),
            width: m.width,
            height: m.height,
        });
    }
    Ok((0..pred.len())
        .map(|j| {
            let k = if planes.len() == 1 { 0 } else { (pred.get(j) as usize).min(planes.len() - 1) };
            f64::from(planes[k][j])
        })
        .collect())
}

fn synth(args: &SynthArgs, quiet: bool) -> Result<()> {
    let spec = match &args.spec {
        Some(path) => serde_json::from_str::<SynthSpec>(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        None => SynthSpec::default(),
    };
    spec.validate()?;
    let master = Rng::new(args.seed);
    for i in 0..args.n {
        let case = synth_case(&spec, &mut master.child(i as u64))?;
        let dir = args.out.join(format!("case_{i:03}"));
        fs::create_dir_all(&dir)?;
        case.image.save_with_format(dir.join("image.png"), image::ImageFormat::Png)?;
        save_label_png(&case.gt, &dir.join("gt.png"))?;
        save_bundle(&case.coarse, &dir.join("coarse"))?;
        let meta = serde_json::json!({ "shapes": case.shapes, "corruption": case.corruption });
        fs::write(dir.join("case.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    progress(quiet, format!("wrote {} case(s) to {}", args.n, args.out.display()));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let work = || match &cli.command {
        Command::Refine(a) => refine(a, cli.quiet),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a, cli.quiet),
    };
    match cli.threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Single-line `error[code]: message` report.
fn error_line(e: &Error) -> String {
    format!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.exit_code().clamp(1, 255) as u8)
        }
    }
}
