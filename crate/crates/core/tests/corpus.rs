use newsband_core::classifier::ElmModel;
use newsband_core::evaluation::EvaluationReport;
use newsband_core::features::FeatureContext;
use newsband_core::pipeline::{analyze_frame, training_data, PipelineConfig};
use newsband_core::reasoning::check_partition;
use newsband_core::synth::news_frame;
use newsband_core::{FrameImage, Label};

fn trained(cfg: &PipelineConfig) -> (FeatureContext, ElmModel) {
    let frames: Vec<_> = (0..30)
        .map(|s| {
            let f = news_frame(10_000 + s, 640, 360);
            (f.frame, f.truth)
        })
        .collect();
    let (ctx, set) = training_data(&frames, cfg).unwrap();
    (ctx, ElmModel::train(&set, &cfg.classifier).unwrap())
}

#[test]
fn corpus_layouts_are_recovered() {
    let cfg = PipelineConfig::default();
    let (ctx, model) = trained(&cfg);
    let mut report = EvaluationReport::new();
    for seed in 0..20 {
        let f = news_frame(seed, 640, 360);
        let a = analyze_frame(&f.frame, &model, &ctx, &cfg).unwrap();
        let s = &a.stages;
        for p in [&s.input, &s.tier1, &s.tier2, &s.tier3, &a.profile] {
            check_partition(640, 360, p.bands()).unwrap();
        }
        assert!(s.tier1.len() <= s.input.len());
        assert!(s.tier2.len() <= s.tier1.len());
        assert!(s.tier3.len() <= s.tier2.len());
        assert!(a.profile.bands().iter().all(|b| b.label != Label::Unlabeled));
        report.add_frame(&seed.to_string(), a.profile.bands(), &f.truth).unwrap();
    }
    assert!(report.mean_net_jaccard >= 0.8, "mean net Jaccard {}", report.mean_net_jaccard);
    assert!(report.mean_matched_jaccard >= 0.8, "mean matched Jaccard {}", report.mean_matched_jaccard);
}

#[test]
fn solid_frame_is_one_synthetic_band() {
    let cfg = PipelineConfig::default();
    let (ctx, model) = trained(&cfg);
    let frame = FrameImage::filled(320, 180, [30, 60, 200]);
    let a = analyze_frame(&frame, &model, &ctx, &cfg).unwrap();
    assert_eq!(a.profile.len(), 1);
    assert_eq!(a.profile.bands()[0].label, Label::Synthetic);
}
