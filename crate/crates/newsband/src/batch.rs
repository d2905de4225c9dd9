//! Directory-level operations: corpus generation, detection runs,
//! evaluation and band-crop datasets.

use std::path::{Path, PathBuf};

use newsband_core::change::{change_detect, ChangeConfig, ChangeGrid};
use newsband_core::classifier::{Class, ElmModel, TrainingSet};
use newsband_core::evaluation::EvaluationReport;
use newsband_core::features::FeatureContext;
use newsband_core::hough::{detect_grid, HoughConfig};
use newsband_core::pipeline::{analyze_frame, apply_change_votes, majority_label, training_class, training_data, FrameAnalysis, PipelineConfig};
use newsband_core::synth::news_frame;
use newsband_core::{Band, FrameImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{check_bands_fit, format_ground_truth, profile_json, read_ground_truth, write_atomic, write_ground_truth};
use crate::imageio::{list_images, load_frame, overlay, save_png};

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes `count` synthetic frames and their ground truth as
/// `frame_NNNN.png` / `frame_NNNN.txt`.
pub fn generate_corpus(count: usize, seed: u64, dir: &Path, width: usize, height: usize) -> Result<Vec<PathBuf>> {
    if count == 0 {
        return Err(Error::Config("corpus count must be at least 1".into()));
    }
    if width < 480 || height < 270 {
        return Err(Error::Config("corpus frames must be at least 480x270".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| rng.random()).collect();
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = news_frame(s, width, height);
            let png = dir.join(format!("frame_{i:04}.png"));
            save_png(&png, &f.frame)?;
            write_ground_truth(&png.with_extension("txt"), &f.truth)?;
            Ok(png)
        })
        .collect()
}

/// Frame images in `dir` that have a `.txt` ground-truth sibling.
pub fn annotated_frames(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    Ok(list_images(dir)?
        .into_iter()
        .map(|p| {
            let t = p.with_extension("txt");
            (p, t)
        })
        .filter(|(_, t)| t.is_file())
        .collect())
}

pub fn load_annotated(dir: &Path) -> Result<Vec<(FrameImage, Vec<Band>)>> {
    let pairs = annotated_frames(dir)?;
    if pairs.is_empty() {
        return Err(Error::format(dir, "no frames with ground truth found"));
    }
    pairs
        .par_iter()
        .map(|(img, txt)| {
            let frame = load_frame(img)?;
            let truth = read_ground_truth(txt)?;
            check_bands_fit(&truth, frame.width() as u32, frame.height() as u32, txt)?;
            Ok((frame, truth))
        })
        .collect()
}

/// Feature context and labelled cell descriptors from an annotated corpus.
pub fn corpus_training_data(dir: &Path, cfg: &PipelineConfig) -> Result<(FeatureContext, TrainingSet)> {
    let frames = load_annotated(dir)?;
    Ok(training_data(&frames, cfg)?)
}

/// Runs `f` on a pool of `jobs` threads (0 means all cores).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Output files written for one detected frame.
#[derive(Debug, Clone)]
pub struct DetectOutputs {
    pub profile: PathBuf,
    pub json: PathBuf,
    pub overlay: Option<PathBuf>,
}

/// Analyses one frame and writes its profile files. `grids` are the change
/// grids of the frame pairs leading up to this frame; pass none for a
/// stand-alone frame.
pub fn detect_frame(
    frame_path: &Path,
    model: &ElmModel,
    ctx: &FeatureContext,
    cfg: &PipelineConfig,
    grids: &[ChangeGrid],
    out_dir: &Path,
    with_overlay: bool,
) -> Result<(FrameAnalysis, DetectOutputs)> {
    let frame = load_frame(frame_path)?;
    let mut analysis = analyze_frame(&frame, model, ctx, cfg)?;
    apply_change_votes(&mut analysis.profile, grids, &cfg.change)?;
    let name = stem(frame_path);
    let profile = out_dir.join(format!("{name}.txt"));
    let json = out_dir.join(format!("{name}.json"));
    write_atomic(&profile, format_ground_truth(analysis.profile.bands()).as_bytes())?;
    let body = serde_json::to_vec_pretty(&profile_json(&analysis.profile)).expect("profile serializes");
    write_atomic(&json, &body)?;
    let overlay_path = if with_overlay {
        let p = out_dir.join(format!("{name}.overlay.png"));
        save_png(&p, &overlay(&frame, analysis.profile.bands()))?;
        Some(p)
    } else {
        None
    };
    Ok((
        analysis,
        DetectOutputs {
            profile,
            json,
            overlay: overlay_path,
        },
    ))
}

/// Change grids of each consecutive pair: element `i` compares frame `i + 1`
/// with frame `i`.
pub fn sequence_grids(frames: &[PathBuf], cfg: &ChangeConfig) -> Result<Vec<ChangeGrid>> {
    let mut grids = Vec::with_capacity(frames.len().saturating_sub(1));
    let mut prev: Option<FrameImage> = None;
    for p in frames {
        let curr = load_frame(p)?;
        if let Some(prev) = &prev {
            grids.push(change_detect(&curr, prev, cfg).map_err(|e| Error::format(p, e.to_string()))?);
        }
        prev = Some(curr);
    }
    Ok(grids)
}

/// Scores every result profile in `results` against the same-named truth
/// file in `truth`.
pub fn evaluate_dirs(results: &Path, truth: &Path) -> Result<EvaluationReport> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(truth)
        .map_err(|e| Error::io(truth, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    names.sort();
    let mut report = EvaluationReport::new();
    for t in names {
        let r = results.join(t.file_name().expect("listed file has a name"));
        if !r.is_file() {
            continue;
        }
        let truth_bands = read_ground_truth(&t)?;
        let result_bands = read_ground_truth(&r)?;
        report.add_frame(&stem(&t), &result_bands, &truth_bands)?;
    }
    if report.frames.is_empty() {
        return Err(Error::format(results, "no result file matches a ground-truth file"));
    }
    Ok(report)
}

/// Grid cells in presentation order: bottom row first, left to right.
pub fn ordered_cells(frame: &FrameImage, hough: &HoughConfig) -> Result<Vec<Band>> {
    let (_, grid) = detect_grid(frame, hough)?;
    let mut cells = grid.cells;
    cells.sort_by_key(|c| (std::cmp::Reverse(c.bottom()), c.x));
    Ok(cells)
}

/// Dataset class directory of a band label.
pub fn class_dir(class: Class) -> &'static str {
    match class {
        Class::Natural => "natural",
        Class::Graphics => "artificial",
    }
}

pub fn crop_name(frame_id: &str, index: usize) -> String {
    format!("{frame_id}_band{index:03}.png")
}

/// Writes the crop of band `index` under `dataset/<class>/`, removing a
/// copy previously filed under the other class.
pub fn write_crop(dataset: &Path, frame_id: &str, index: usize, frame: &FrameImage, band: &Band, class: Class) -> Result<PathBuf> {
    let name = crop_name(frame_id, index);
    for other in [Class::Natural, Class::Graphics].into_iter().filter(|&c| c != class) {
        let stale = dataset.join(class_dir(other)).join(&name);
        if stale.is_file() {
            std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
        }
    }
    let path = dataset.join(class_dir(class)).join(name);
    save_png(&path, &frame.crop(band))?;
    Ok(path)
}

/// Non-interactive dataset build: every grid cell of each annotated frame is
/// filed under the class of the truth band covering most of it.
pub fn dataset_from_truth(frames: &Path, out: &Path, hough: &HoughConfig) -> Result<usize> {
    let mut written = 0;
    for (img, txt) in annotated_frames(frames)? {
        let frame = load_frame(&img)?;
        let truth = read_ground_truth(&txt)?;
        for (k, cell) in ordered_cells(&frame, hough)?.iter().enumerate() {
            let class = majority_label(cell, &truth).and_then(training_class);
            if let Some(class) = class {
                write_crop(out, &stem(&img), k, &frame, cell, class)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

/// Crops under `dir/natural` and `dir/artificial`.
pub fn load_dataset(dir: &Path) -> Result<(Vec<FrameImage>, Vec<FrameImage>)> {
    let load = |class: Class| -> Result<Vec<FrameImage>> {
        let sub = dir.join(class_dir(class));
        if !sub.is_dir() {
            return Ok(Vec::new());
        }
        list_images(&sub)?.par_iter().map(|p| load_frame(p)).collect()
    };
    Ok((load(Class::Graphics)?, load(Class::Natural)?))
}
