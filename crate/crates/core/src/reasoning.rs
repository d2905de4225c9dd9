//! Band adjacency and the three-tier merge that turns the fragmented grid
//! into a [`FormatProfile`].
//!
//! 1. Adjacent bands with similar colour histograms merge.
//! 2. Adjacent natural bands merge when no edge runs along their boundary.
//! 3. Bands mostly covered by detected text become text; horizontally
//!    adjacent text bands merge.
//!
//! Every merge takes two bands sharing a full side, so the result stays a
//! partition of the frame. Each tier repeats until no pair qualifies,
//! always merging the first qualifying pair in row-major order.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Band, Label};
use crate::hough::BandGrid;
use crate::imaging::{bhattacharyya_distance, histogram_of, mono32_code, scharr_magnitude, to_gray, FloatImage, FrameImage, Histogram};
use crate::text::TextRegion;

/// `j` is above `i`.
pub const ABOVE: u8 = 1;
/// `j` is right of `i`.
pub const RIGHT: u8 = 2;
/// `j` is below `i`.
pub const BELOW: u8 = 3;
/// `j` is left of `i`.
pub const LEFT: u8 = 4;

/// Side of `i` on which `j` touches it with positive length, or 0.
pub fn direction(i: &Band, j: &Band) -> u8 {
    let h_overlap = i.right().min(j.right()) > i.x.max(j.x);
    let v_overlap = i.bottom().min(j.bottom()) > i.y.max(j.y);
    if h_overlap && j.bottom() == i.y {
        ABOVE
    } else if v_overlap && j.x == i.right() {
        RIGHT
    } else if h_overlap && j.y == i.bottom() {
        BELOW
    } else if v_overlap && j.right() == i.x {
        LEFT
    } else {
        0
    }
}

/// Row-major `n x n` matrix of [`direction`] codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    a: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.a[i * self.n + j]
    }

    pub fn nonzero(&self) -> usize {
        self.a.iter().filter(|&&v| v != 0).count()
    }
}

fn check_disjoint(bands: &[Band]) -> Result<()> {
    for (i, a) in bands.iter().enumerate() {
        for (j, b) in bands.iter().enumerate().skip(i + 1) {
            if a.overlaps(b) {
                return Err(Error::Overlap(i, j));
            }
        }
    }
    Ok(())
}

pub fn build_adjacency(bands: &[Band]) -> Result<AdjacencyMatrix> {
    check_disjoint(bands)?;
    let n = bands.len();
    let mut a = alloc::vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a[i * n + j] = direction(&bands[i], &bands[j]);
            }
        }
    }
    Ok(AdjacencyMatrix { n, a })
}

/// Whether `i` and `j` touch along a side both of them span entirely.
pub fn full_side_aligned(i: &Band, j: &Band, dir: u8) -> bool {
    match dir {
        ABOVE | BELOW => i.x == j.x && i.w == j.w,
        RIGHT | LEFT => i.y == j.y && i.h == j.h,
        _ => false,
    }
}

/// Union of two bands sharing a full side. The label is left unlabeled.
pub fn merge_bands(i: &Band, j: &Band, dir: u8) -> Result<Band> {
    if dir == 0 || dir > 4 {
        return Err(Error::NotMergeable("bands are not adjacent"));
    }
    if direction(i, j) != dir {
        return Err(Error::NotMergeable("direction does not match the geometry"));
    }
    if !full_side_aligned(i, j, dir) {
        return Err(Error::NotMergeable("shared side is not full length on both bands"));
    }
    Ok(match dir {
        ABOVE => Band::new(j.x, j.y, j.w, i.h + j.h),
        RIGHT => Band::new(i.x, i.y, i.w + j.w, i.h),
        BELOW => Band::new(i.x, i.y, i.w, i.h + j.h),
        _ => Band::new(j.x, j.y, i.w + j.w, j.h),
    })
}

/// Which step produced a band of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Origin {
    /// Unmerged input band.
    #[default]
    Source,
    HistogramMerge,
    NaturalMerge,
    TextMerge,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Source => "source",
            Origin::HistogramMerge => "histogram_merge",
            Origin::NaturalMerge => "natural_merge",
            Origin::TextMerge => "text_merge",
        }
    }
}

/// Labelled partition of a frame, bands sorted by `(y, x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatProfile {
    width: u32,
    height: u32,
    bands: Vec<Band>,
    origins: Vec<Origin>,
}

impl FormatProfile {
    /// Checks that the bands lie in the frame, are pairwise disjoint and
    /// cover it exactly.
    pub fn new(width: u32, height: u32, bands: Vec<Band>) -> Result<Self> {
        let origins = alloc::vec![Origin::Source; bands.len()];
        Self::with_origins(width, height, bands, origins)
    }

    pub fn with_origins(width: u32, height: u32, bands: Vec<Band>, origins: Vec<Origin>) -> Result<Self> {
        if origins.len() != bands.len() {
            return Err(Error::DimensionMismatch {
                expected: bands.len(),
                actual: origins.len(),
            });
        }
        check_partition(width, height, &bands)?;
        let mut pairs: Vec<(Band, Origin)> = bands.into_iter().zip(origins).collect();
        pairs.sort_by_key(|(b, _)| (b.y, b.x));
        let (bands, origins) = pairs.into_iter().unzip();
        Ok(FormatProfile {
            width,
            height,
            bands,
            origins,
        })
    }

    pub fn single(width: u32, height: u32, label: Label) -> Result<Self> {
        Self::new(width, height, alloc::vec![Band::new(0, 0, width, height).with_label(label)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        build_adjacency(&self.bands).expect("profile bands are disjoint")
    }

    /// Re-runs the partition checks.
    pub fn validate(&self) -> Result<()> {
        check_partition(self.width, self.height, &self.bands)
    }
}

/// Bands inside the frame, pairwise disjoint, areas summing to the frame.
pub fn check_partition(width: u32, height: u32, bands: &[Band]) -> Result<()> {
    for (i, b) in bands.iter().enumerate() {
        if b.area() == 0 {
            return Err(Error::ZeroArea(i));
        }
        if !b.fits_in(width, height) {
            return Err(Error::OutOfFrame(width, height));
        }
    }
    check_disjoint(bands)?;
    let covered: u64 = bands.iter().map(Band::area).sum();
    let frame = width as u64 * height as u64;
    if covered != frame {
        return Err(Error::Coverage { covered, frame });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ReasoningConfig {
    /// Tier 1 merges pairs whose histogram distance is below this.
    pub histogram_threshold: f64,
    /// Bins of the tier 1 histogram over the 15-bit colour codes.
    pub histogram_bins: usize,
    /// Tier 2 merges natural pairs whose boundary gradient mean is below this.
    pub edge_threshold: f64,
    /// Text overlap share at which tier 3 labels a band text.
    pub overlap_threshold: f64,
}

impl Default for ReasoningConfig {
    fn default() -> Self {
        ReasoningConfig {
            histogram_threshold: 0.2,
            histogram_bins: 64,
            edge_threshold: 0.08,
            overlap_threshold: 0.5,
        }
    }
}

impl ReasoningConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.histogram_threshold) || !unit(self.edge_threshold) || !unit(self.overlap_threshold) {
            return Err(Error::InvalidParameter("reasoning thresholds must lie in [0, 1]"));
        }
        if self.histogram_bins == 0 || self.histogram_bins > crate::imaging::MONO32_LEVELS {
            return Err(Error::InvalidParameter("reasoning.histogram_bins must lie in [1, 32768]"));
        }
        Ok(())
    }
}

/// Label of a merged pair: the common label, else the labelled one, else
/// the larger band's (the first on a tie).
fn merged_label(a: &Band, b: &Band) -> Label {
    match (a.label, b.label) {
        (x, y) if x == y => x,
        (Label::Unlabeled, y) => y,
        (x, Label::Unlabeled) => x,
        (x, y) => {
            if b.area() > a.area() {
                y
            } else {
                x
            }
        }
    }
}

struct Item<T> {
    band: Band,
    origin: Origin,
    data: T,
}

/// Merges the first accepted pair in row-major order until none is left.
fn fixpoint<T>(
    items: &mut Vec<Item<T>>,
    origin: Origin,
    mut accept: impl FnMut(&Item<T>, &Item<T>, u8) -> bool,
    mut combine: impl FnMut(&Item<T>, &Item<T>) -> T,
) -> Result<usize> {
    let mut merges = 0;
    'restart: loop {
        items.sort_by_key(|it| (it.band.y, it.band.x));
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let dir = direction(&items[i].band, &items[j].band);
                if dir == 0 || !full_side_aligned(&items[i].band, &items[j].band, dir) {
                    continue;
                }
                if !accept(&items[i], &items[j], dir) {
                    continue;
                }
                let band = merge_bands(&items[i].band, &items[j].band, dir)?
                    .with_label(merged_label(&items[i].band, &items[j].band));
                let data = combine(&items[i], &items[j]);
                items[i] = Item { band, origin, data };
                items.remove(j);
                merges += 1;
                continue 'restart;
            }
        }
        return Ok(merges);
    }
}

fn profile_items<T>(p: &FormatProfile, data: impl Fn(&Band) -> Result<T>) -> Result<Vec<Item<T>>> {
    p.bands
        .iter()
        .zip(&p.origins)
        .map(|(b, o)| {
            Ok(Item {
                band: *b,
                origin: *o,
                data: data(b)?,
            })
        })
        .collect()
}

fn into_profile<T>(p: &FormatProfile, items: Vec<Item<T>>) -> FormatProfile {
    let (bands, origins) = items.into_iter().map(|it| (it.band, it.origin)).unzip();
    FormatProfile {
        width: p.width,
        height: p.height,
        bands,
        origins,
    }
}

fn band_histogram(frame: &FrameImage, band: &Band, bins: usize) -> Result<Histogram> {
    let pixels = (band.y as usize..band.bottom() as usize)
        .flat_map(|y| frame.row(y)[band.x as usize..band.right() as usize].iter().map(|&p| mono32_code(p)));
    histogram_of(pixels, bins)
}

fn check_frame(profile: &FormatProfile, frame: &FrameImage) -> Result<()> {
    if frame.width() != profile.width as usize || frame.height() != profile.height as usize {
        return Err(Error::FrameSizeMismatch(
            frame.width(),
            frame.height(),
            profile.width as usize,
            profile.height as usize,
        ));
    }
    Ok(())
}

/// Tier 1: merge adjacent bands whose colour histograms are closer than the
/// threshold.
pub fn tier1_histogram_merge(profile: &FormatProfile, frame: &FrameImage, cfg: &ReasoningConfig) -> Result<FormatProfile> {
    check_frame(profile, frame)?;
    let mut items = profile_items(profile, |b| band_histogram(frame, b, cfg.histogram_bins))?;
    fixpoint(
        &mut items,
        Origin::HistogramMerge,
        |a, b, _| bhattacharyya_distance(&a.data, &b.data).is_ok_and(|d| d < cfg.histogram_threshold),
        |a, b| {
            let (wa, wb) = (a.band.area() as f64, b.band.area() as f64);
            let bins = a.data.bins().iter().zip(b.data.bins()).map(|(x, y)| (x * wa + y * wb) / (wa + wb)).collect();
            Histogram::from_bins(bins)
        },
    )?;
    Ok(into_profile(profile, items))
}

/// Mean of `magnitude` over the two pixel lines on either side of the
/// boundary between `i` and its neighbour in direction `dir`.
pub fn boundary_edge_mean(magnitude: &FloatImage, i: &Band, j: &Band, dir: u8) -> f64 {
    let (x0, x1) = (i.x.max(j.x) as usize, i.right().min(j.right()) as usize);
    let (y0, y1) = (i.y.max(j.y) as usize, i.bottom().min(j.bottom()) as usize);
    let mut sum = 0.0;
    let mut n = 0usize;
    match dir {
        ABOVE | BELOW => {
            let edge = if dir == ABOVE { i.y } else { i.bottom() } as usize;
            for y in [edge - 1, edge] {
                sum += magnitude.row(y)[x0..x1].iter().sum::<f64>();
                n += x1 - x0;
            }
        }
        RIGHT | LEFT => {
            let edge = if dir == RIGHT { i.right() } else { i.x } as usize;
            for y in y0..y1 {
                sum += magnitude.get(edge - 1, y) + magnitude.get(edge, y);
                n += 2;
            }
        }
        _ => return 0.0,
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Tier 2: merge adjacent natural bands with no edge along their boundary.
pub fn tier2_natural_merge(profile: &FormatProfile, frame: &FrameImage, cfg: &ReasoningConfig) -> Result<FormatProfile> {
    check_frame(profile, frame)?;
    let magnitude = scharr_magnitude(&to_gray(frame))?;
    tier2_with_magnitude(profile, &magnitude, cfg)
}

fn tier2_with_magnitude(profile: &FormatProfile, magnitude: &FloatImage, cfg: &ReasoningConfig) -> Result<FormatProfile> {
    let mut items = profile_items(profile, |_| Ok(()))?;
    fixpoint(
        &mut items,
        Origin::NaturalMerge,
        |a, b, dir| {
            a.band.label == Label::Natural
                && b.band.label == Label::Natural
                && boundary_edge_mean(magnitude, &a.band, &b.band, dir) < cfg.edge_threshold
        },
        |_, _| (),
    )?;
    Ok(into_profile(profile, items))
}

/// Largest share of `band` covered by a single text region.
pub fn text_overlap(band: &Band, regions: &[TextRegion]) -> f64 {
    if band.area() == 0 {
        return 0.0;
    }
    regions
        .iter()
        .map(|r| band.intersection_area(&r.rect) as f64 / band.area() as f64)
        .fold(0.0, f64::max)
}

/// Tier 3: label bands mostly covered by text as text, then merge
/// horizontally adjacent text bands of equal height.
pub fn tier3_text_merge(profile: &FormatProfile, regions: &[TextRegion], cfg: &ReasoningConfig) -> Result<FormatProfile> {
    let mut items = profile_items(profile, |_| Ok(()))?;
    for it in &mut items {
        if text_overlap(&it.band, regions) >= cfg.overlap_threshold {
            it.band.label = Label::Text;
        }
    }
    fixpoint(
        &mut items,
        Origin::TextMerge,
        |a, b, dir| (dir == RIGHT || dir == LEFT) && a.band.label == Label::Text && b.band.label == Label::Text,
        |_, _| (),
    )?;
    Ok(into_profile(profile, items))
}

/// Profiles after each tier. `tier3` still may hold unlabeled bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierStages {
    pub input: FormatProfile,
    pub tier1: FormatProfile,
    pub tier2: FormatProfile,
    pub tier3: FormatProfile,
}

impl TierStages {
    /// The final profile, with unlabeled bands emitted as synthetic.
    pub fn finish(&self) -> FormatProfile {
        let mut out = self.tier3.clone();
        for b in &mut out.bands {
            if b.label == Label::Unlabeled {
                b.label = Label::Synthetic;
            }
        }
        out
    }
}

/// Runs the three tiers on a labelled grid.
pub fn run_three_tier_stages(
    frame: &FrameImage,
    grid: &BandGrid,
    labels: &[Label],
    text: &[TextRegion],
    cfg: &ReasoningConfig,
) -> Result<TierStages> {
    cfg.validate()?;
    if labels.len() != grid.cells.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.cells.len(),
            actual: labels.len(),
        });
    }
    let bands = grid.cells.iter().zip(labels).map(|(c, l)| c.with_label(*l)).collect();
    let input = FormatProfile::new(frame.width() as u32, frame.height() as u32, bands)?;
    let tier1 = tier1_histogram_merge(&input, frame, cfg)?;
    let tier2 = tier2_natural_merge(&tier1, frame, cfg)?;
    let tier3 = tier3_text_merge(&tier2, text, cfg)?;
    Ok(TierStages {
        input,
        tier1,
        tier2,
        tier3,
    })
}

pub fn run_three_tier(
    frame: &FrameImage,
    grid: &BandGrid,
    labels: &[Label],
    text: &[TextRegion],
    cfg: &ReasoningConfig,
) -> Result<FormatProfile> {
    Ok(run_three_tier_stages(frame, grid, labels, text, cfg)?.finish())
}
