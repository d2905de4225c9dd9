use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newsband::batch::{self, class_dir, stem};
use newsband::config::{Config, CONFIG_ENV};
use newsband::formats::{read_context, read_model, write_atomic, write_change_mask, write_context, write_features_csv, write_model};
use newsband::imageio::{is_image, list_images, load_frame};
use newsband::server::{self, ServerConfig};
use newsband::{Error, Result};
use newsband_core::change::change_detect;
use newsband_core::classifier::{k_fold_evaluate, BandClassifier, Class, ElmModel, TrainingSet};
use newsband_core::evaluation::{ClassifierMeasures, EvaluationReport};
use newsband_core::features::{assemble_feature_vector, FeatureContext};
use newsband_core::pipeline::PipelineConfig;
use newsband_core::text::detect_text;
use newsband_core::{Band, FrameImage};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "newsband", version, about = "Layout analysis for broadcast news frames")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set hough.max_gap=8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the format profile of frames and write `<name>.txt` / `<name>.json`.
    Detect(DetectArgs),
    /// Print text regions found in a frame.
    Text { image: PathBuf },
    /// Build a feature context or extract descriptors.
    #[command(subcommand)]
    Features(FeaturesCommand),
    /// Train the band classifier.
    Train(TrainArgs),
    /// Classify a frame or a region of it as natural or synthetic.
    Classify(ClassifyArgs),
    /// Compare two frames cell by cell.
    Change(ChangeArgs),
    /// Score result profiles against ground truth.
    Evaluate(EvaluateArgs),
    /// Write a synthetic annotated corpus.
    GenCorpus(GenCorpusArgs),
    /// File grid-cell crops of annotated frames into natural/ and artificial/.
    MakeDataset(MakeDatasetArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    context: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Frame images or directories of frames.
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write `<name>.overlay.png`.
    #[arg(long)]
    overlay: bool,
    /// Treat the frames, in name order, as consecutive frames of one
    /// broadcast and apply the change-detection vote.
    #[arg(long)]
    sequence: bool,
}

#[derive(Subcommand)]
enum FeaturesCommand {
    /// Build the reference histograms from annotated frames.
    Context {
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Write one descriptor row per image.
    Extract {
        images: Vec<PathBuf>,
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Annotated frames (image plus `.txt` ground truth).
    #[arg(long, conflicts_with = "dataset")]
    frames: Option<PathBuf>,
    /// Crop dataset with natural/ and artificial/ directories.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Report k-fold cross-validation instead of writing a model.
    #[arg(long)]
    kfold: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    image: PathBuf,
    /// Region `x,y,w,h`; the whole image when omitted.
    #[arg(long, value_parser = parse_region)]
    region: Option<Band>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ChangeArgs {
    current: PathBuf,
    previous: PathBuf,
    /// Write the dynamic-cell mask as a PGM.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1280)]
    width: usize,
    #[arg(long, default_value_t = 720)]
    height: usize,
}

#[derive(Args)]
struct MakeDatasetArgs {
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    addr: Option<String>,
}

fn parse_region(s: &str) -> std::result::Result<Band, String> {
    let n: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("region must be x,y,w,h: {e}"))?;
    match n[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Band::new(x, y, w, h)),
        [_, _, _, _] => Err("region must have non-zero size".into()),
        _ => Err("region must be x,y,w,h".into()),
    }
}

fn required(flag: Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| Error::Config(format!("missing --{name} (or paths.{name} in the configuration)")))
}

fn load_model(args: ModelArgs, cfg: &Config) -> Result<(ElmModel, FeatureContext)> {
    let model = read_model(&required(args.model, &cfg.paths.model, "model")?)?;
    let ctx = read_context(&required(args.context, &cfg.paths.context, "context")?)?;
    if model.input_dim() != ctx.feature_dim() {
        return Err(Error::Core(newsband_core::Error::DimensionMismatch {
            expected: ctx.feature_dim(),
            actual: model.input_dim(),
        }));
    }
    Ok((model, ctx))
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(list_images(p)?);
        } else if is_image(p) {
            out.push(p.clone());
        } else {
            return Err(Error::format(p, "not an image file or directory"));
        }
    }
    Ok(out)
}

fn fmt_measure(m: Option<f64>) -> String {
    m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn print_measures(name: &str, m: &ClassifierMeasures) {
    println!(
        "{name:<10} precision {}  recall {}  f-measure {}  balanced-accuracy {}",
        fmt_measure(m.precision),
        fmt_measure(m.recall),
        fmt_measure(m.f_measure),
        fmt_measure(m.balanced_accuracy)
    );
}

fn detect(args: DetectArgs, cfg: &Config) -> Result<()> {
    let inputs = if args.inputs.is_empty() {
        vec![required(None, &cfg.paths.frames, "frames")?]
    } else {
        args.inputs
    };
    let frames = expand_inputs(&inputs)?;
    let out = required(args.out, &cfg.paths.output, "output")?;
    let (model, ctx) = load_model(args.model, cfg)?;
    let pipeline = cfg.pipeline();
    let grids = if args.sequence {
        batch::sequence_grids(&frames, &pipeline.change)?
    } else {
        Vec::new()
    };
    let results: Vec<Result<(String, usize)>> = batch::with_pool(cfg.jobs, || {
        frames
            .par_iter()
            .enumerate()
            .map(|(i, f)| {
                // grids[..i] are the pairs ending at frame i
                let before = &grids[..i.min(grids.len())];
                let (analysis, _) = batch::detect_frame(f, &model, &ctx, &pipeline, before, &out, args.overlay)?;
                Ok((stem(f), analysis.profile.len()))
            })
            .collect()
    })?;
    for r in results {
        let (name, n) = r?;
        println!("{name}: {n} bands");
    }
    Ok(())
}

fn text(image: &Path, cfg: &Config) -> Result<()> {
    let frame = load_frame(image)?;
    for r in detect_text(&frame, &cfg.text)? {
        println!("text {} {} {} {}", r.rect.x, r.rect.y, r.rect.w, r.rect.h);
    }
    Ok(())
}

fn features(cmd: FeaturesCommand, cfg: &Config) -> Result<()> {
    match cmd {
        FeaturesCommand::Context { frames, out } => {
            let dir = required(frames, &cfg.paths.frames, "frames")?;
            let (ctx, _) = batch::corpus_training_data(&dir, &cfg.pipeline())?;
            write_context(&out, &ctx)?;
            println!("wrote {}", out.display());
        }
        FeaturesCommand::Extract { images, context, out } => {
            let ctx = read_context(&required(context, &cfg.paths.context, "context")?)?;
            let images = expand_inputs(&images)?;
            let rows = batch::with_pool(cfg.jobs, || {
                images
                    .par_iter()
                    .map(|p| Ok(assemble_feature_vector(&load_frame(p)?, &ctx)?.into_vec()))
                    .collect::<Result<Vec<_>>>()
            })??;
            write_features_csv(&out, &rows)?;
            println!("wrote {} rows of {} features to {}", rows.len(), ctx.feature_dim(), out.display());
        }
    }
    Ok(())
}

fn dataset_training(dir: &Path, pipeline: &PipelineConfig) -> Result<(FeatureContext, TrainingSet)> {
    let (graphics, natural) = batch::load_dataset(dir)?;
    if graphics.is_empty() || natural.is_empty() {
        return Err(Error::format(dir, format!("needs images under both {}/ and {}/", class_dir(Class::Natural), class_dir(Class::Graphics))));
    }
    let ctx = FeatureContext::from_samples(&graphics, &natural, pipeline.features)?;
    let describe = |crops: &[FrameImage], class: Class| -> Result<Vec<(Vec<f64>, Class)>> {
        crops
            .par_iter()
            .map(|c| Ok((assemble_feature_vector(c, &ctx)?.into_vec(), class)))
            .collect()
    };
    let mut samples = describe(&graphics, Class::Graphics)?;
    samples.extend(describe(&natural, Class::Natural)?);
    Ok((ctx, TrainingSet::from_samples(samples)?))
}

fn train(args: TrainArgs, cfg: &Config) -> Result<()> {
    let pipeline = cfg.pipeline();
    let (ctx, data) = batch::with_pool(cfg.jobs, || match (args.frames, args.dataset.or_else(|| cfg.paths.dataset.clone())) {
        (Some(frames), _) => batch::corpus_training_data(&frames, &pipeline),
        (None, Some(dataset)) => dataset_training(&dataset, &pipeline),
        (None, None) => match &cfg.paths.frames {
            Some(frames) => batch::corpus_training_data(frames, &pipeline),
            None => Err(Error::Config("missing --frames or --dataset".into())),
        },
    })??;
    println!(
        "{} samples: {} natural, {} graphics",
        data.len(),
        data.count(Class::Natural),
        data.count(Class::Graphics)
    );
    if let Some(k) = args.kfold {
        let report = k_fold_evaluate(&data, k, &pipeline.classifier)?;
        for (i, f) in report.folds.iter().enumerate() {
            println!("fold {i}: tp {} fp {} tn {} fn {}", f.tp, f.fp, f.tn, f.fn_);
        }
        print_measures("natural", &report.measures);
        return Ok(());
    }
    let model = ElmModel::train(&data, &pipeline.classifier)?;
    let model_path = required(args.model.model, &cfg.paths.model, "model")?;
    let ctx_path = required(args.model.context, &cfg.paths.context, "context")?;
    write_model(&model_path, &model)?;
    write_context(&ctx_path, &ctx)?;
    println!("wrote {} and {}", model_path.display(), ctx_path.display());
    Ok(())
}

fn classify(args: ClassifyArgs, cfg: &Config) -> Result<()> {
    let (model, ctx) = load_model(args.model, cfg)?;
    let frame = load_frame(&args.image)?;
    let crop = match args.region {
        Some(r) if !r.fits_in(frame.width() as u32, frame.height() as u32) => {
            return Err(Error::format(&args.image, format!("region {r:?} lies outside the image")));
        }
        Some(r) => frame.crop(&r),
        None => frame,
    };
    let class = model.predict(assemble_feature_vector(&crop, &ctx)?.as_slice())?;
    println!("{}", newsband_core::pipeline::class_label(class));
    Ok(())
}

fn change(args: ChangeArgs, cfg: &Config) -> Result<()> {
    let curr = load_frame(&args.current)?;
    let prev = load_frame(&args.previous)?;
    let grid = change_detect(&curr, &prev, &cfg.change)?;
    println!("{} of {} cells dynamic", grid.dynamic_count(), grid.len());
    if let Some(mask) = args.mask {
        write_change_mask(&mask, &grid)?;
    }
    Ok(())
}

fn print_report(r: &EvaluationReport) {
    println!("{:<24} {:>12} {:>14}", "frame", "net-jaccard", "matched-jacc.");
    for f in &r.frames {
        println!("{:<24} {:>12.4} {:>14.4}", f.name, f.net_jaccard, f.matched_jaccard);
    }
    println!("{:<24} {:>12.4} {:>14.4}", "mean", r.mean_net_jaccard, r.mean_matched_jaccard);
    println!(
        "band labels: tp {} fp {} tn {} fn {}",
        r.labels.tp, r.labels.fp, r.labels.tn, r.labels.fn_
    );
    print_measures("natural", &r.natural);
    print_measures("synthetic", &r.synthetic);
}

fn evaluate(args: EvaluateArgs, cfg: &Config) -> Result<()> {
    let truth = args
        .truth
        .or_else(|| cfg.paths.annotations.clone())
        .ok_or_else(|| Error::Config("missing --truth (or paths.annotations in the configuration)".into()))?;
    let report = batch::evaluate_dirs(&args.results, &truth)?;
    print_report(&report);
    if let Some(json) = args.json {
        write_atomic(&json, &serde_json::to_vec_pretty(&report).expect("report serializes"))?;
    }
    Ok(())
}

fn serve(args: ServeArgs, cfg: &Config) -> Result<()> {
    let frames = required(args.frames, &cfg.paths.frames, "frames")?;
    if !frames.is_dir() {
        return Err(Error::format(&frames, "frames directory does not exist"));
    }
    let scfg = ServerConfig {
        annotations: required(args.annotations, &cfg.paths.annotations, "annotations")?,
        dataset: required(args.dataset, &cfg.paths.dataset, "dataset")?,
        frames,
        hough: cfg.pipeline().hough,
    };
    let addr = args.addr.unwrap_or_else(|| cfg.server.addr.clone());
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Config(format!("cannot start runtime: {e}")))?;
    eprintln!("listening on http://{addr}");
    rt.block_on(server::serve(&addr, scfg))
        .map_err(|e| Error::Config(format!("cannot serve on {addr}: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::resolve(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Detect(a) => detect(a, &cfg),
        Command::Text { image } => text(&image, &cfg),
        Command::Features(c) => features(c, &cfg),
        Command::Train(a) => train(a, &cfg),
        Command::Classify(a) => classify(a, &cfg),
        Command::Change(a) => change(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
        Command::GenCorpus(a) => {
            let seed = cfg.seed.unwrap_or(a.seed);
            let written = batch::with_pool(cfg.jobs, || batch::generate_corpus(a.count, seed, &a.out, a.width, a.height))??;
            println!("wrote {} frames to {}", written.len(), a.out.display());
            Ok(())
        }
        Command::MakeDataset(a) => {
            let frames = required(a.frames, &cfg.paths.frames, "frames")?;
            let out = required(a.out, &cfg.paths.dataset, "dataset")?;
            let n = batch::dataset_from_truth(&frames, &out, &cfg.pipeline().hough)?;
            println!("wrote {n} crops to {}", out.display());
            Ok(())
        }
        Command::Serve(a) => serve(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
