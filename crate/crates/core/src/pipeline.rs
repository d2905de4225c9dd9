//! Whole-frame analysis: grid, text, per-cell classification and merging.

use alloc::vec::Vec;

use crate::classifier::{BandClassifier, Class, ElmConfig, TrainingSet};
use crate::error::{Error, Result};
use crate::features::{assemble_feature_vector, FeatureContext, FeatureParams};
use crate::geometry::{Band, Label};
use crate::hough::{detect_grid, BandGrid, HoughConfig, LineSegment};
use crate::imaging::FrameImage;
use crate::change::{apply_static_override, ChangeConfig, ChangeGrid};
use crate::reasoning::{run_three_tier_stages, FormatProfile, ReasoningConfig, TierStages};
use crate::text::{detect_text, TextDetectorConfig, TextRegion};

/// Cells thinner than this on either side are left unlabeled.
pub const MIN_CLASSIFIED_SIDE: u32 = 3;

/// Every tunable of the pipeline, grouped by stage.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    pub hough: HoughConfig,
    pub text: TextDetectorConfig,
    pub features: FeatureParams,
    pub classifier: ElmConfig,
    pub change: ChangeConfig,
    pub reasoning: ReasoningConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.hough.validate()?;
        self.text.validate()?;
        self.features.validate()?;
        if self.classifier.hidden == 0 {
            return Err(Error::InvalidParameter("classifier.hidden must be at least 1"));
        }
        self.change.validate()?;
        self.reasoning.validate()
    }
}

/// Intermediate and final results for one frame.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub lines: Vec<LineSegment>,
    pub grid: BandGrid,
    pub text: Vec<TextRegion>,
    /// Classifier label per grid cell.
    pub labels: Vec<Label>,
    pub stages: TierStages,
    pub profile: FormatProfile,
}

pub fn class_label(c: Class) -> Label {
    match c {
        Class::Graphics => Label::Synthetic,
        Class::Natural => Label::Natural,
    }
}

/// Classifies each cell large enough to describe.
pub fn classify_cells<C: BandClassifier + ?Sized>(
    frame: &FrameImage,
    cells: &[Band],
    classifier: &C,
    ctx: &FeatureContext,
) -> Result<Vec<Label>> {
    cells
        .iter()
        .map(|cell| {
            if cell.w < MIN_CLASSIFIED_SIDE || cell.h < MIN_CLASSIFIED_SIDE {
                return Ok(Label::Unlabeled);
            }
            let v = assemble_feature_vector(&frame.crop(cell), ctx)?;
            Ok(class_label(classifier.predict(v.as_slice())?))
        })
        .collect()
}

pub fn analyze_frame<C: BandClassifier + ?Sized>(
    frame: &FrameImage,
    classifier: &C,
    ctx: &FeatureContext,
    cfg: &PipelineConfig,
) -> Result<FrameAnalysis> {
    cfg.validate()?;
    if classifier.input_dim() != ctx.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.feature_dim(),
            actual: classifier.input_dim(),
        });
    }
    let (lines, grid) = detect_grid(frame, &cfg.hough)?;
    let text = detect_text(frame, &cfg.text)?;
    let labels = classify_cells(frame, &grid.cells, classifier, ctx)?;
    let stages = run_three_tier_stages(frame, &grid, &labels, &text, &cfg.reasoning)?;
    let profile = stages.finish();
    Ok(FrameAnalysis {
        lines,
        grid,
        text,
        labels,
        stages,
        profile,
    })
}

/// Label of the truth band covering most of `cell`, if any truth band
/// covers more than half of it.
pub fn majority_label(cell: &Band, truth: &[Band]) -> Option<Label> {
    truth
        .iter()
        .max_by_key(|t| t.intersection_area(cell))
        .filter(|t| 2 * t.intersection_area(cell) > cell.area())
        .map(|t| t.label)
}

/// Training class of a labelled band: text and synthetic both count as
/// graphics.
pub fn training_class(label: Label) -> Option<Class> {
    match label {
        Label::Natural => Some(Class::Natural),
        Label::Synthetic | Label::Text => Some(Class::Graphics),
        Label::Unlabeled => None,
    }
}

/// Grid cells of annotated frames with their majority truth class.
pub fn labelled_cells(frame: &FrameImage, truth: &[Band], hough: &HoughConfig) -> Result<Vec<(Band, Class)>> {
    let (_, grid) = detect_grid(frame, hough)?;
    Ok(grid
        .cells
        .into_iter()
        .filter(|c| c.w >= MIN_CLASSIFIED_SIDE && c.h >= MIN_CLASSIFIED_SIDE)
        .filter_map(|c| majority_label(&c, truth).and_then(training_class).map(|k| (c, k)))
        .collect())
}

/// Builds the feature context from whole truth bands, then describes every
/// grid cell of every frame.
pub fn training_data(frames: &[(FrameImage, Vec<Band>)], cfg: &PipelineConfig) -> Result<(FeatureContext, TrainingSet)> {
    let mut graphics = Vec::new();
    let mut natural = Vec::new();
    for (frame, truth) in frames {
        for band in truth.iter().filter(|b| b.w >= MIN_CLASSIFIED_SIDE && b.h >= MIN_CLASSIFIED_SIDE) {
            match training_class(band.label) {
                Some(Class::Natural) => natural.push(frame.crop(band)),
                Some(Class::Graphics) => graphics.push(frame.crop(band)),
                None => {}
            }
        }
    }
    let ctx = FeatureContext::from_samples(&graphics, &natural, cfg.features)?;
    let mut set = TrainingSet::new();
    for (frame, truth) in frames {
        for (cell, class) in labelled_cells(frame, truth, &cfg.hough)? {
            set.push(assemble_feature_vector(&frame.crop(&cell), &ctx)?.into_vec(), class)?;
        }
    }
    Ok((ctx, set))
}

/// Applies the change-detection vote to a finished profile: natural bands
/// whose whole cells stayed static in every one of the last
/// `cfg.min_static_pairs` grids become synthetic. `grids` holds the pairs
/// leading up to the frame, oldest first. Returns the relabelled indices.
pub fn apply_change_votes(profile: &mut FormatProfile, grids: &[ChangeGrid], cfg: &ChangeConfig) -> Result<Vec<usize>> {
    let need = cfg.min_static_pairs.max(1);
    if grids.len() < need {
        return Ok(Vec::new());
    }
    let window = &grids[grids.len() - need..];
    for g in window {
        if g.width() != profile.width() as usize || g.height() != profile.height() as usize {
            return Err(Error::FrameSizeMismatch(profile.width() as usize, profile.height() as usize, g.width(), g.height()));
        }
    }
    let mut bands = profile.bands().to_vec();
    let changed = apply_static_override(&mut bands, window, need);
    if !changed.is_empty() {
        *profile = FormatProfile::with_origins(profile.width(), profile.height(), bands, profile.origins().to_vec())?;
    }
    Ok(changed)
}


#[cfg(test)]
mod change_vote_tests {
    use super::*;
    use crate::change::pixel_change_detect;

    fn profile() -> FormatProfile {
        FormatProfile::new(
            200,
            100,
            alloc::vec![
                Band::new(0, 0, 100, 100).with_label(Label::Natural),
                Band::new(100, 0, 100, 100).with_label(Label::Natural),
            ],
        )
        .unwrap()
    }

    #[test]
    fn static_natural_band_turns_synthetic_after_enough_pairs() {
        let still = FrameImage::filled(200, 100, [10, 10, 10]);
        // right half flickers, left half never changes
        let moving = FrameImage::from_fn(200, 100, |x, _| if x >= 100 { [250, 250, 250] } else { [10, 10, 10] });
        let grid = pixel_change_detect(&moving, &still, 20, 50).unwrap();
        let cfg = ChangeConfig::default();

        let mut p = profile();
        let short = alloc::vec![grid.clone(); cfg.min_static_pairs - 1];
        assert!(apply_change_votes(&mut p, &short, &cfg).unwrap().is_empty());

        let enough = alloc::vec![grid; cfg.min_static_pairs];
        assert_eq!(apply_change_votes(&mut p, &enough, &cfg).unwrap(), alloc::vec![0]);
        assert_eq!(p.bands()[0].label, Label::Synthetic);
        assert_eq!(p.bands()[1].label, Label::Natural);
    }

    #[test]
    fn grid_size_must_match() {
        let f = FrameImage::filled(100, 100, [0, 0, 0]);
        let grid = pixel_change_detect(&f, &f, 20, 50).unwrap();
        let mut p = profile();
        assert!(apply_change_votes(&mut p, &alloc::vec![grid; 5], &ChangeConfig::default()).is_err());
    }
}
