//! Line detection with the progressive probabilistic Hough transform and the
//! low-level rectangle grid built from the detected lines.
//!
//! Lines close to horizontal or vertical are extended to the frame borders;
//! every extended line becomes a cut, and consecutive cuts on both axes bound
//! the grid cells.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Band;
use crate::imaging::{scharr_magnitude, to_gray, FrameImage, GrayImage};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct HoughConfig {
    /// Accumulator votes a peak needs before its corridor is searched.
    pub vote_threshold: u32,
    /// Shortest segment reported, in pixels. `None` means 20% of the shorter frame side.
    pub min_line_length: Option<u32>,
    /// Longest run of missing pixels bridged while walking a corridor.
    pub max_gap: u32,
    /// Degrees from horizontal/vertical a segment may deviate and still form a cut.
    pub angle_tolerance: f64,
    /// Cuts this close (pixels) are merged into their mean.
    pub cluster_tolerance: u32,
    /// Normalized Scharr magnitude at which a pixel becomes an edge.
    pub edge_threshold: f64,
    /// Seed for the random pixel order.
    pub seed: u64,
}

impl Default for HoughConfig {
    fn default() -> Self {
        HoughConfig {
            vote_threshold: 30,
            min_line_length: None,
            max_gap: 5,
            angle_tolerance: 2.0,
            cluster_tolerance: 5,
            edge_threshold: 0.1,
            seed: 0,
        }
    }
}

impl HoughConfig {
    pub fn min_line_length_for(&self, width: usize, height: usize) -> f64 {
        match self.min_line_length {
            Some(len) => len as f64,
            None => 0.2 * width.min(height) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vote_threshold == 0 {
            return Err(Error::InvalidParameter("hough.vote_threshold must be positive"));
        }
        if self.min_line_length == Some(0) {
            return Err(Error::InvalidParameter("hough.min_line_length must be positive"));
        }
        if self.max_gap == 0 || self.cluster_tolerance == 0 {
            return Err(Error::InvalidParameter("hough.max_gap and hough.cluster_tolerance must be positive"));
        }
        if !(self.angle_tolerance > 0.0 && self.angle_tolerance < 45.0) {
            return Err(Error::InvalidParameter("hough.angle_tolerance must lie in (0, 45)"));
        }
        if self.edge_threshold.is_nan() || self.edge_threshold <= 0.0 {
            return Err(Error::InvalidParameter("hough.edge_threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineSegment {
    pub p0: (u32, u32),
    pub p1: (u32, u32),
}

impl LineSegment {
    pub fn length(&self) -> f64 {
        let dx = self.p1.0 as f64 - self.p0.0 as f64;
        let dy = self.p1.1 as f64 - self.p0.1 as f64;
        libm::sqrt(dx * dx + dy * dy)
    }

    /// Angle from the horizontal axis, folded into `[0, 90]` degrees.
    pub fn inclination(&self) -> f64 {
        let dx = (self.p1.0 as f64 - self.p0.0 as f64).abs();
        let dy = (self.p1.1 as f64 - self.p0.1 as f64).abs();
        libm::atan2(dy, dx).to_degrees()
    }
}

/// Binary edge map: 1 where the normalized Scharr magnitude of the gray
/// frame reaches `threshold`.
pub fn detect_edges(frame: &FrameImage, threshold: f64) -> Result<GrayImage> {
    let mag = scharr_magnitude(&to_gray(frame))?;
    Ok(mag.map(|&m| u8::from(m >= threshold)))
}

const NUM_ANGLES: usize = 180;
const SHIFT: i64 = 16;

/// Progressive probabilistic Hough transform over a binary edge map.
///
/// Pixels are visited in a seeded random order. Each vote updates the
/// accumulator; once the strongest cell touched by the vote reaches
/// `vote_threshold`, the corridor along that line is walked from the pixel,
/// bridging gaps up to `max_gap`. All pixels on the walked segment leave the
/// input and withdraw their earlier votes, and the segment is kept when it is
/// at least the minimum length long.
pub fn ppht(edges: &GrayImage, cfg: &HoughConfig) -> Vec<LineSegment> {
    let (width, height) = (edges.width(), edges.height());
    let mut mask: Vec<bool> = edges.as_slice().iter().map(|&v| v != 0).collect();
    let mut points: Vec<(usize, usize)> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|&(x, y)| mask[y * width + x])
        .collect();
    if points.is_empty() {
        return Vec::new();
    }
    points.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let min_len = cfg.min_line_length_for(width, height);
    let max_gap = cfg.max_gap as usize;
    let diag = libm::ceil(libm::sqrt((width * width + height * height) as f64)) as i64;
    let num_rho = (2 * diag + 1) as usize;
    let trig: Vec<(f64, f64)> = (0..NUM_ANGLES)
        .map(|n| {
            let t = n as f64 * core::f64::consts::PI / NUM_ANGLES as f64;
            (libm::cos(t), libm::sin(t))
        })
        .collect();
    let rho_index = |x: usize, y: usize, n: usize| -> usize {
        let (c, s) = trig[n];
        (libm::round(x as f64 * c + y as f64 * s) as i64 + diag) as usize
    };

    let mut acc = vec![0u32; NUM_ANGLES * num_rho];
    let mut voted = vec![false; width * height];
    let mut segments = Vec::new();

    for &(px, py) in &points {
        let idx = py * width + px;
        if !mask[idx] {
            continue;
        }
        let mut peak = 0u32;
        let mut peak_angle = 0usize;
        for n in 0..NUM_ANGLES {
            let cell = &mut acc[n * num_rho + rho_index(px, py, n)];
            *cell += 1;
            if *cell > peak {
                peak = *cell;
                peak_angle = n;
            }
        }
        voted[idx] = true;
        mask[idx] = false;
        if peak < cfg.vote_threshold {
            continue;
        }

        let walker = Corridor::new(px, py, trig[peak_angle]);
        let mut ends = [(px, py); 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let mut gap = 0usize;
            for (x, y) in walker.steps(k == 1, width, height) {
                if mask[y * width + x] {
                    gap = 0;
                    *end = (x, y);
                } else {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
            }
        }

        // the seed pixel already left the input; withdraw its vote with the rest
        let mut unvote = |x: usize, y: usize, acc: &mut [u32]| {
            let i = y * width + x;
            if voted[i] {
                for n in 0..NUM_ANGLES {
                    acc[n * num_rho + rho_index(x, y, n)] -= 1;
                }
                voted[i] = false;
            }
        };
        unvote(px, py, &mut acc);
        for (k, &end) in ends.iter().enumerate() {
            if end == (px, py) {
                continue;
            }
            for (x, y) in walker.steps(k == 1, width, height) {
                let i = y * width + x;
                if mask[i] {
                    mask[i] = false;
                    unvote(x, y, &mut acc);
                }
                if (x, y) == end {
                    break;
                }
            }
        }

        let segment = LineSegment {
            p0: (ends[1].0 as u32, ends[1].1 as u32),
            p1: (ends[0].0 as u32, ends[0].1 as u32),
        };
        if segment.length() >= min_len {
            segments.push(segment);
        }
    }
    segments
}

/// Fixed-point walk along the line through a pixel, one pixel per step on
/// the dominant axis.
struct Corridor {
    x0: i64,
    y0: i64,
    dx: i64,
    dy: i64,
    x_major: bool,
}

impl Corridor {
    fn new(px: usize, py: usize, (cos, sin): (f64, f64)) -> Self {
        // line direction is perpendicular to the normal (cos, sin)
        let a = -sin;
        let b = cos;
        let half = 1i64 << (SHIFT - 1);
        if a.abs() > b.abs() {
            Corridor {
                x0: px as i64,
                y0: ((py as i64) << SHIFT) + half,
                dx: if a > 0.0 { 1 } else { -1 },
                dy: libm::round(b * (1i64 << SHIFT) as f64 / a.abs()) as i64,
                x_major: true,
            }
        } else {
            Corridor {
                x0: ((px as i64) << SHIFT) + half,
                y0: py as i64,
                dx: libm::round(a * (1i64 << SHIFT) as f64 / b.abs()) as i64,
                dy: if b > 0.0 { 1 } else { -1 },
                x_major: false,
            }
        }
    }

    /// Pixels visited after the start, in one direction, until leaving the image.
    fn steps(&self, reverse: bool, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let sign = if reverse { -1 } else { 1 };
        let (dx, dy) = (self.dx * sign, self.dy * sign);
        let (mut x, mut y) = (self.x0, self.y0);
        let x_major = self.x_major;
        core::iter::from_fn(move || {
            x += dx;
            y += dy;
            let (px, py) = if x_major { (x, y >> SHIFT) } else { (x >> SHIFT, y) };
            if px < 0 || py < 0 || px >= width as i64 || py >= height as i64 {
                None
            } else {
                Some((px as usize, py as usize))
            }
        })
    }
}

/// Cut positions on both axes, frame borders included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cuts {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
}

/// Turns near-horizontal segments into row cuts and near-vertical segments
/// into column cuts, merging cuts that lie within the cluster tolerance.
/// Other orientations are dropped.
pub fn extend_and_quantize(lines: &[LineSegment], width: u32, height: u32, cfg: &HoughConfig) -> Cuts {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in lines {
        let incl = line.inclination();
        if incl <= cfg.angle_tolerance {
            ys.push((line.p0.1 as f64 + line.p1.1 as f64) / 2.0);
        } else if incl >= 90.0 - cfg.angle_tolerance {
            xs.push((line.p0.0 as f64 + line.p1.0 as f64) / 2.0);
        }
    }
    Cuts {
        x: cluster_cuts(xs, width, cfg.cluster_tolerance as f64),
        y: cluster_cuts(ys, height, cfg.cluster_tolerance as f64),
    }
}

fn cluster_cuts(mut values: Vec<f64>, limit: u32, tol: f64) -> Vec<u32> {
    values.sort_by(f64::total_cmp);
    let mut cuts = vec![0u32];
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        let group = &values[start..end];
        let mean = group.iter().sum::<f64>() / group.len() as f64;
        let cut = libm::floor(mean + 0.5);
        // cuts that hug a border collapse onto it
        if cut > tol && cut < limit as f64 - tol {
            let cut = cut as u32;
            if cuts.last() != Some(&cut) {
                cuts.push(cut);
            }
        }
        start = end;
    }
    if limit > 0 {
        cuts.push(limit);
    }
    cuts
}

/// Partition of a frame into the cells between consecutive cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGrid {
    pub x_cuts: Vec<u32>,
    pub y_cuts: Vec<u32>,
    /// Row-major cells, all unlabeled.
    pub cells: Vec<Band>,
}

impl BandGrid {
    pub fn columns(&self) -> usize {
        self.x_cuts.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.y_cuts.len() - 1
    }

    pub fn width(&self) -> u32 {
        *self.x_cuts.last().unwrap()
    }

    pub fn height(&self) -> u32 {
        *self.y_cuts.last().unwrap()
    }
}

pub fn generate_bands(x_cuts: &[u32], y_cuts: &[u32]) -> Result<BandGrid> {
    if x_cuts.len() < 2 || y_cuts.len() < 2 {
        return Err(Error::TooFewCuts(x_cuts.len(), y_cuts.len()));
    }
    let increasing = |c: &[u32]| c[0] == 0 && c.windows(2).all(|w| w[0] < w[1]);
    if !increasing(x_cuts) || !increasing(y_cuts) {
        return Err(Error::InvalidCuts);
    }
    let mut cells = Vec::with_capacity((x_cuts.len() - 1) * (y_cuts.len() - 1));
    for ys in y_cuts.windows(2) {
        for xs in x_cuts.windows(2) {
            cells.push(Band::new(xs[0], ys[0], xs[1] - xs[0], ys[1] - ys[0]));
        }
    }
    Ok(BandGrid {
        x_cuts: x_cuts.to_vec(),
        y_cuts: y_cuts.to_vec(),
        cells,
    })
}

/// Edge map, line detection and grid formation in one call.
pub fn detect_grid(frame: &FrameImage, cfg: &HoughConfig) -> Result<(Vec<LineSegment>, BandGrid)> {
    let edges = detect_edges(frame, cfg.edge_threshold)?;
    let lines = ppht(&edges, cfg);
    let cuts = extend_and_quantize(&lines, frame.width() as u32, frame.height() as u32, cfg);
    let grid = generate_bands(&cuts.x, &cuts.y)?;
    Ok((lines, grid))
}
