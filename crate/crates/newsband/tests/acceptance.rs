//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use newsband::formats::{write_context, write_model};
use newsband::imageio::save_png;
use newsband_core::change::{histogram_change_detect, pixel_change_detect};
use newsband_core::classifier::{confusion, pseudo_inverse, BandClassifier, Class, ElmConfig, ElmModel, TrainingSet};
use newsband_core::evaluation::{classifier_measures, jaccard, net_jaccard, ConfusionCounts, EvaluationReport};
use newsband_core::features::{assemble_feature_vector, FeatureContext, FeatureParams, FEATURE_DIM};
use newsband_core::hough::{ppht, HoughConfig};
use newsband_core::imaging::{bhattacharyya_distance, MONO32_LEVELS};
use newsband_core::pipeline::{analyze_frame, training_data, PipelineConfig};
use newsband_core::reasoning::check_partition;
use newsband_core::synth::{news_frame, noise_frame, planted_lines};
use newsband_core::{Band, FrameImage, Histogram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn feature_dimension() -> Outcome {
    let ctx = FeatureContext::from_samples(
        &[FrameImage::filled(8, 8, [200, 20, 20])],
        &[noise_frame(1, 32, 32)],
        FeatureParams::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..50 {
        let (w, h) = (rng.random_range(1..300), rng.random_range(1..300));
        let img = if i % 2 == 0 { noise_frame(i, w, h) } else { FrameImage::filled(w, h, [i as u8, 90, 200]) };
        let n = assemble_feature_vector(&img, &ctx).map_err(|e| e.to_string())?.len();
        ensure(n == FEATURE_DIM, || format!("{w}x{h} crop gave {n} values"))?;
    }
    let frame = news_frame(5, 1280, 720).frame;
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let crop = frame.crop(&Band::new(100 * k, 40 * k, 256, 256));
        let start = Instant::now();
        assemble_feature_vector(&crop, &ctx).map_err(|e| e.to_string())?;
        worst = worst.max(start.elapsed().as_secs_f64());
    }
    ensure(worst < 0.05, || format!("256x256 crop took {:.1} ms", worst * 1e3))?;
    Ok(format!("{FEATURE_DIM} values for 50 crop sizes; slowest 256x256 crop {:.1} ms", worst * 1e3))
}

fn random_set(n: usize, d: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let x = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (x, if i % 2 == 0 { Class::Graphics } else { Class::Natural })
        })
        .collect();
    TrainingSet::from_samples(samples).unwrap()
}

fn elm_fit() -> Outcome {
    let mut worst_residual: f64 = 0.0;
    for (n, seed) in [(10, 1), (50, 2), (120, 3), (200, 4)] {
        let data = random_set(n, 5, seed);
        let model = ElmModel::train(&data, &ElmConfig { hidden: n, seed, ..Default::default() }).map_err(|e| e.to_string())?;
        let r = model.training_residual(&data).map_err(|e| e.to_string())?;
        ensure(r <= 1e-6, || format!("N = L = {n}: residual {r:e}"))?;
        worst_residual = worst_residual.max(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let blobs: Vec<(Vec<f64>, Class)> = (0..2000)
        .map(|i| {
            let (cx, class) = if i % 2 == 0 { (-3.0, Class::Graphics) } else { (3.0, Class::Natural) };
            (vec![cx + normal.sample(&mut rng), normal.sample(&mut rng)], class)
        })
        .collect();
    let train = TrainingSet::from_samples(blobs[..1400].to_vec()).unwrap();
    let test = TrainingSet::from_samples(blobs[1400..].to_vec()).unwrap();
    let start = Instant::now();
    let model = ElmModel::train(&train, &ElmConfig { hidden: 50, ..Default::default() }).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let ba = classifier_measures(&confusion(&model, &test).map_err(|e| e.to_string())?)
        .balanced_accuracy
        .unwrap_or(0.0);
    ensure(ba >= 0.95, || format!("held-out balanced accuracy {ba:.4}"))?;
    ensure(secs < 5.0, || format!("training took {secs:.2} s"))?;
    Ok(format!("max residual {worst_residual:.1e}; blobs held-out BA {ba:.4}; trained in {:.0} ms", secs * 1e3))
}

fn pseudoinverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rows = rng.random_range(1..=200);
        let cols = rng.random_range(1..=300);
        let h = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let p = pseudo_inverse(&h).map_err(|e| e.to_string())?;
        let err = (&h * &p * &h - &h).norm() / h.norm();
        ensure(err <= 1e-8, || format!("{rows}x{cols}: {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("100 matrices, worst relative error {worst:.1e}"))
}

fn line_recovery() -> Outcome {
    let close = |a: (u32, u32), b: (u32, u32)| a.0.abs_diff(b.0) <= 3 && a.1.abs_diff(b.1) <= 3;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut planted_total, mut slowest) = (0, 0.0f64);
    for image in 0..50u64 {
        let count = rng.random_range(1..=5);
        let (edges, planted) = planted_lines(&mut rng, 1280, 720, count);
        let cfg = HoughConfig { seed: image, ..HoughConfig::default() };
        let start = Instant::now();
        let found = ppht(&edges, &cfg);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        for l in &planted {
            let [a, b] = l.endpoints();
            let ok = found
                .iter()
                .any(|s| (close(s.p0, a) && close(s.p1, b)) || (close(s.p0, b) && close(s.p1, a)));
            ensure(ok, || format!("image {image}: line {l:?} not recovered"))?;
        }
        for s in &found {
            let ok = planted.iter().any(|l| l.supports(s.p0, 3) && l.supports(s.p1, 3));
            ensure(ok, || format!("image {image}: unsupported segment {s:?}"))?;
        }
        planted_total += planted.len();
    }
    ensure(slowest < 1.0, || format!("slowest image {slowest:.2} s"))?;
    Ok(format!("{planted_total} lines in 50 images recovered; slowest 720p image {:.0} ms", slowest * 1e3))
}

fn bhattacharyya() -> Outcome {
    let d = |a: &Histogram, b: &Histogram| bhattacharyya_distance(a, b).map_err(|e| e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_identity: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..600);
        let a = Histogram::from_bins((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        let b = Histogram::from_bins((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        let same = d(&a, &a)?;
        worst_identity = worst_identity.max(same);
        ensure(same <= 1e-9, || format!("identity gave {same:e}"))?;
        let (ab, ba) = (d(&a, &b)?, d(&b, &a)?);
        ensure(ab == ba, || format!("asymmetric: {ab} vs {ba}"))?;
        ensure((0.0..=1.0).contains(&ab), || format!("out of range: {ab}"))?;
    }
    let hand = d(&Histogram::from_bins(vec![0.5, 0.5]), &Histogram::from_bins(vec![1.0, 0.0]))?;
    ensure((hand - 0.5412).abs() <= 1e-3, || format!("([0.5,0.5],[1,0]) gave {hand}"))?;
    Ok(format!("500 random pairs; worst identity {worst_identity:.1e}; hand value {hand:.4}"))
}

fn jaccard_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rect = |rng: &mut ChaCha8Rng| Band::new(rng.random_range(0..40), rng.random_range(0..40), rng.random_range(1..30), rng.random_range(1..30));
    for _ in 0..1000 {
        let (a, b) = (rect(&mut rng), rect(&mut rng));
        let (mut inter, mut union) = (0u64, 0u64);
        for y in 0..70 {
            for x in 0..70 {
                let (ia, ib) = (a.contains(x, y), b.contains(x, y));
                inter += u64::from(ia && ib);
                union += u64::from(ia || ib);
            }
        }
        let j = jaccard(&a, &b).map_err(|e| e.to_string())?;
        ensure(j == inter as f64 / union as f64, || format!("{a:?} {b:?}: {j} vs {inter}/{union}"))?;
    }
    for seed in 0..20 {
        let truth = news_frame(seed, 640, 360).truth;
        let nj = net_jaccard(&truth, &truth).map_err(|e| e.to_string())?;
        ensure(nj == 1.0, || format!("netJaccard(p, p) = {nj} for frame {seed}"))?;
    }
    Ok("1000 pairs match rasterized IoU exactly; netJaccard(p, p) = 1 on 20 profiles".into())
}

struct CorpusRun {
    partition: Outcome,
    end_to_end: Outcome,
}

/// Trains on 30 generated frames, then analyses the seeded 20-frame test
/// corpus, timing the whole run.
fn corpus_run() -> CorpusRun {
    let (w, h) = (1280, 720);
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let train: Vec<_> = (0..30)
        .map(|s| {
            let f = news_frame(10_000 + s, w, h);
            (f.frame, f.truth)
        })
        .collect();
    let trained = training_data(&train, &cfg).and_then(|(ctx, set)| Ok((ElmModel::train(&set, &cfg.classifier)?, ctx)));
    let (model, ctx) = match trained {
        Ok(m) => m,
        Err(e) => {
            return CorpusRun {
                partition: Err(e.to_string()),
                end_to_end: Err(e.to_string()),
            }
        }
    };
    let mut report = EvaluationReport::new();
    let mut partition = Ok(());
    let mut checked = 0;
    for seed in 0..20 {
        let f = news_frame(seed, w, h);
        let a = match analyze_frame(&f.frame, &model, &ctx, &cfg) {
            Ok(a) => a,
            Err(e) => {
                let msg = format!("frame {seed}: {e}");
                return CorpusRun {
                    partition: Err(msg.clone()),
                    end_to_end: Err(msg),
                };
            }
        };
        let s = &a.stages;
        for (name, p) in [("input", &s.input), ("tier 1", &s.tier1), ("tier 2", &s.tier2), ("tier 3", &s.tier3), ("final", &a.profile)] {
            if let Err(e) = check_partition(w as u32, h as u32, p.bands()) {
                partition = partition.and(Err(format!("frame {seed} after {name}: {e}")));
            }
            checked += 1;
        }
        if let Err(e) = report.add_frame(&seed.to_string(), a.profile.bands(), &f.truth) {
            return CorpusRun {
                partition: Err(e.to_string()),
                end_to_end: Err(e.to_string()),
            };
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let end_to_end = ensure(report.mean_net_jaccard >= 0.8, || format!("mean net Jaccard {:.4}", report.mean_net_jaccard))
        .and(ensure(secs < 60.0, || format!("run took {secs:.1} s")))
        .map(|_| {
            format!(
                "20 frames at {w}x{h}: mean net Jaccard {:.4} (matched one-to-one variant {:.4}), {} input dims, run {:.1} s",
                report.mean_net_jaccard,
                report.mean_matched_jaccard,
                model.input_dim(),
                secs
            )
        });
    CorpusRun {
        partition: partition.map(|_| format!("{checked} profiles over 20 frames are disjoint and cover the frame")),
        end_to_end,
    }
}

fn change_detection() -> Outcome {
    let (mut cells, mut pixel, mut hist) = (0, 0, 0);
    for trial in 0..100 {
        let f = noise_frame(trial, 160, 120);
        let p = pixel_change_detect(&f, &f, 20, 50).map_err(|e| e.to_string())?.dynamic_count();
        let h = histogram_change_detect(&f, &f, 0.3, 50, MONO32_LEVELS).map_err(|e| e.to_string())?.dynamic_count();
        ensure(p == 0 && h == 0, || format!("identical pair {trial}: {p}/{h} dynamic cells"))?;

        let a = noise_frame(1000 + 2 * trial, 160, 120);
        let b = noise_frame(1001 + 2 * trial, 160, 120);
        let g = pixel_change_detect(&a, &b, 20, 50).map_err(|e| e.to_string())?;
        cells += g.len();
        pixel += g.dynamic_count();
        hist += histogram_change_detect(&a, &b, 0.3, 50, MONO32_LEVELS).map_err(|e| e.to_string())?.dynamic_count();
    }
    let (pr, hr) = (pixel as f64 / cells as f64, hist as f64 / cells as f64);
    ensure(pr >= 0.99 && hr >= 0.99, || format!("noise pairs dynamic: pixel {pr:.4}, histogram {hr:.4}"))?;
    Ok(format!("identical pairs 100% static; noise pairs dynamic: pixel {:.1}%, histogram {:.1}%", pr * 100.0, hr * 100.0))
}

fn classifier_measure_examples() -> Outcome {
    let near = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() < 5e-5);
    let m = classifier_measures(&ConfusionCounts::new(50, 0, 50, 0));
    ensure(
        [m.precision, m.recall, m.f_measure, m.balanced_accuracy].iter().all(|&v| near(v, 1.0)),
        || format!("perfect classifier: {m:?}"),
    )?;
    let m = classifier_measures(&ConfusionCounts::new(0, 0, 50, 50));
    ensure(near(m.recall, 0.0) && near(m.balanced_accuracy, 0.5), || format!("all-negative: {m:?}"))?;
    let m = classifier_measures(&ConfusionCounts::new(40, 10, 35, 15));
    ensure(
        near(m.precision, 0.8) && near(m.recall, 8.0 / 11.0) && near(m.f_measure, 0.7619) && near(m.balanced_accuracy, 0.7525),
        || format!("(40, 10, 35, 15): {m:?}"),
    )?;
    for (pos, neg) in [(30, 70), (1, 99), (64, 36)] {
        let all_pos = classifier_measures(&ConfusionCounts::new(pos, neg, 0, 0)).balanced_accuracy;
        let all_neg = classifier_measures(&ConfusionCounts::new(0, 0, neg, pos)).balanced_accuracy;
        ensure(all_pos == Some(0.5) && all_neg == Some(0.5), || format!("constant predictor on {pos}/{neg}: {all_pos:?} {all_neg:?}"))?;
    }
    Ok("three worked examples to 4 dp; constant predictors give exactly 0.5".into())
}

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let frames = tmp.path().join("frames");
    let cfg = PipelineConfig {
        classifier: ElmConfig { hidden: 200, ..Default::default() },
        ..Default::default()
    };
    let train: Vec<_> = (0..4)
        .map(|s| {
            let f = news_frame(500 + s, 640, 360);
            (f.frame, f.truth)
        })
        .collect();
    let (ctx, set) = training_data(&train, &cfg).map_err(|e| e.to_string())?;
    let model = ElmModel::train(&set, &cfg.classifier).map_err(|e| e.to_string())?;
    let (model_path, ctx_path) = (tmp.path().join("m.elm"), tmp.path().join("c.json"));
    write_model(&model_path, &model).map_err(|e| e.to_string())?;
    write_context(&ctx_path, &ctx).map_err(|e| e.to_string())?;
    for s in 0..4 {
        save_png(&frames.join(format!("f{s}.png")), &news_frame(700 + s, 640, 360).frame).map_err(|e| e.to_string())?;
    }
    let run = |out: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_newsband"))
            .env_remove("NEWSBAND_CONFIG")
            .args(["detect", "--set", "seed=42", "--model"])
            .arg(&model_path)
            .arg("--context")
            .arg(&ctx_path)
            .arg("-o")
            .arg(out)
            .arg(&frames)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let mut files: Vec<_> = std::fs::read_dir(out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let a = run(&tmp.path().join("a"))?;
    let b = run(&tmp.path().join("b"))?;
    ensure(a.len() == 8, || format!("expected 8 profile files, got {}", a.len()))?;
    ensure(a == b, || "profile files differ between runs".into())?;
    Ok(format!("{} profile files byte-identical across two runs", a.len()))
}

fn main() {
    let corpus = corpus_run();
    let results: Vec<(&str, Outcome)> = vec![
        ("feature dimension", feature_dimension()),
        ("ELM exact fit and blobs", elm_fit()),
        ("pseudoinverse", pseudoinverse()),
        ("line recovery", line_recovery()),
        ("Bhattacharyya distance", bhattacharyya()),
        ("Jaccard oracle", jaccard_oracle()),
        ("partition preservation", corpus.partition),
        ("end-to-end layout", corpus.end_to_end),
        ("change detection", change_detection()),
        ("classifier measures", classifier_measure_examples()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
