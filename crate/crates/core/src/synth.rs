//! Seeded generators for synthetic news-like frames with exact ground truth.
//!
//! Frames are built from full-width header/ticker/footer bars around a middle
//! section of natural-looking texture and flat graphics panels. Text bands
//! carry dense stroke glyphs. Every band boundary is a straight contrast
//! step; nothing inside a band produces a long straight edge.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Band, Label};
use crate::imaging::{brightness, FrameImage, GrayImage, Rgb};

/// A generated frame and its labelled partition.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub frame: FrameImage,
    pub truth: Vec<Band>,
}

/// Draws glyph-like strokes in `fg` across `area` and returns the tight
/// bounding box of everything drawn. Every glyph has a full-height stem, so
/// the box spans the full height of `area`.
pub fn draw_text(frame: &mut FrameImage, area: Band, fg: Rgb, rng: &mut impl Rng) -> Option<Band> {
    let (x0, y0) = (area.x as usize, area.y as usize);
    let (x_end, gh) = (area.right() as usize, area.h as usize);
    if gh < 6 || area.w < 8 {
        return None;
    }
    let bar = (gh / 8).max(2);
    let mut x = x0;
    let mut last = None;
    'words: loop {
        let letters = rng.random_range(3..10);
        for _ in 0..letters {
            let gw = rng.random_range(5..8);
            if x + gw > x_end {
                break 'words;
            }
            let stroke = |frame: &mut FrameImage, sx: usize, sy: usize, w: usize, h: usize| {
                for yy in sy..sy + h {
                    for xx in sx..sx + w {
                        frame.set(xx, yy, fg);
                    }
                }
            };
            stroke(frame, x, y0, 2, gh);
            match rng.random_range(0..3) {
                0 => stroke(frame, x + gw - 2, y0, 2, gh),
                1 => stroke(frame, x + gw - 2, y0 + gh / 2, 2, gh - gh / 2),
                _ => stroke(frame, x, y0 + gh - bar, gw, bar),
            }
            for at in [0, gh / 2 - bar / 2] {
                if rng.random_bool(0.5) {
                    stroke(frame, x, y0 + at, gw, bar);
                }
            }
            last = Some(x + gw);
            x += gw + rng.random_range(2..4);
        }
        x += rng.random_range(6..13);
        if x >= x_end {
            break;
        }
    }
    let right = last?;
    Some(Band::new(x0 as u32, y0 as u32, (right - x0) as u32, gh as u32).with_label(Label::Text))
}

/// Frame with one or two text stripes on a flat background, returning the
/// glyph bounding boxes.
pub fn text_stripe_frame(seed: u64, width: usize, height: usize) -> (FrameImage, Vec<Band>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dark = rng.random_bool(0.5);
    let bg = if dark { pick_color(&mut rng, 10, 60) } else { pick_color(&mut rng, 190, 240) };
    let fg = if dark { [245, 245, 240] } else { [15, 15, 25] };
    let mut frame = FrameImage::filled(width, height, bg);
    let stripes = rng.random_range(1..3);
    let slot = height / stripes;
    let mut truth = Vec::new();
    for s in 0..stripes {
        let h = rng.random_range(16..31).min(slot - 12);
        let y = s * slot + rng.random_range(6..slot - h - 5);
        let w = rng.random_range(width / 3..width - 20);
        let x = rng.random_range(0..width - w);
        if let Some(b) = draw_text(&mut frame, Band::new(x as u32, y as u32, w as u32, h as u32), fg, &mut rng) {
            truth.push(b);
        }
    }
    (frame, truth)
}

fn pick_color(rng: &mut impl Rng, lo: u8, hi: u8) -> Rgb {
    // random hue at a target brightness in lo..=hi
    let target = rng.random_range(lo..=hi) as i32;
    let spread = (target.min(255 - target)).min(40);
    let mut c = [0u8; 3];
    for ch in &mut c {
        *ch = (target + rng.random_range(-spread..=spread)).clamp(0, 255) as u8;
    }
    c
}

#[derive(Clone, Copy, PartialEq)]
enum Tone {
    Dark,
    Bright,
}

impl Tone {
    fn flip(self) -> Tone {
        match self {
            Tone::Dark => Tone::Bright,
            Tone::Bright => Tone::Dark,
        }
    }

    fn color(self, rng: &mut impl Rng) -> Rgb {
        match self {
            Tone::Dark => pick_color(rng, 15, 45),
            Tone::Bright => pick_color(rng, 205, 235),
        }
    }
}

/// Smooth colour field with mild sensor noise, standing in for camera content.
fn paint_natural(frame: &mut FrameImage, area: Band, rng: &mut impl Rng) {
    let base: Vec<f64> = (0..3).map(|_| rng.random_range(105.0..150.0)).collect();
    let waves: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            let wl = rng.random_range(40.0..140.0);
            let dir = rng.random_range(0.0..core::f64::consts::TAU);
            let amp = rng.random_range(4.0..9.0);
            let k = core::f64::consts::TAU / wl;
            [k * libm::cos(dir), k * libm::sin(dir), rng.random_range(0.0..core::f64::consts::TAU), amp]
        })
        .collect();
    // a few soft blobs (faces, objects) with slow falloff
    let blobs: Vec<[f64; 5]> = (0..rng.random_range(1..4))
        .map(|_| {
            [
                area.x as f64 + rng.random_range(0.0..area.w as f64),
                area.y as f64 + rng.random_range(0.0..area.h as f64),
                rng.random_range(20.0..60.0),
                rng.random_range(-18.0..18.0),
                rng.random_range(0.0..1.0),
            ]
        })
        .collect();
    for y in area.y as usize..area.bottom() as usize {
        for x in area.x as usize..area.right() as usize {
            let (fx, fy) = (x as f64, y as f64);
            let mut px = [0u8; 3];
            for (ch, out) in px.iter_mut().enumerate() {
                let mut v = base[ch];
                for (i, w) in waves.iter().enumerate() {
                    if i % 3 == ch || i >= 3 {
                        v += w[3] * libm::sin(w[0] * fx + w[1] * fy + w[2] + ch as f64);
                    }
                }
                for b in &blobs {
                    let d2 = ((fx - b[0]) * (fx - b[0]) + (fy - b[1]) * (fy - b[1])) / (b[2] * b[2]);
                    v += b[3] * (1.0 + 0.3 * b[4] * ch as f64) * libm::exp(-d2);
                }
                v += rng.random_range(-6.0..6.0);
                *out = v.clamp(0.0, 255.0) as u8;
            }
            frame.set(x, y, px);
        }
    }
}

/// Flat colour with an optional gentle top-to-bottom shade.
fn paint_graphic(frame: &mut FrameImage, area: Band, color: Rgb, rng: &mut impl Rng) {
    let shade = if rng.random_bool(0.4) { rng.random_range(-12.0..12.0) } else { 0.0 };
    for y in area.y as usize..area.bottom() as usize {
        let t = (y - area.y as usize) as f64 / area.h.max(1) as f64;
        let off = shade * t;
        let c = color.map(|v| (v as f64 + off).clamp(0.0, 255.0) as u8);
        for x in area.x as usize..area.right() as usize {
            frame.set(x, y, c);
        }
    }
}

fn paint_text_band(frame: &mut FrameImage, area: Band, bg: Rgb, rng: &mut impl Rng) {
    frame.fill_rect(&area, bg);
    let fg = if brightness(bg) < 128 { [245, 245, 235] } else { [20, 20, 30] };
    let margin = (area.h / 5).max(5);
    let text_area = Band::new(area.x + 8, area.y + margin, area.w - 16, area.h - 2 * margin);
    draw_text(frame, text_area, fg, rng);
}

/// Generates a news-like frame of the given size (at least 480x270).
///
/// Layout, top to bottom: a header bar, a middle section, an optional
/// headline text bar, a ticker text bar and an optional footer bar. The
/// middle is either one natural region or two or three panels split at a
/// single column, mixing natural and graphics content.
pub fn news_frame(seed: u64, width: usize, height: usize) -> SyntheticFrame {
    assert!(width >= 480 && height >= 270, "frame too small for the layout");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as u32, height as u32);
    let mut frame = FrameImage::filled(width, height, [0, 0, 0]);
    let mut truth = Vec::new();

    let header_h = rng.random_range(h / 9..h / 6);
    let ticker_h = rng.random_range(h / 10..h / 7);
    let footer_h = if rng.random_bool(0.5) { rng.random_range(h / 18..h / 12) } else { 0 };
    let headline_h = if rng.random_bool(0.4) { rng.random_range(h / 12..h / 9) } else { 0 };
    let middle_top = header_h;
    let middle_bottom = h - footer_h - ticker_h - headline_h;

    // alternate tones down the stack of full-width bars so neighbours contrast
    let header_tone = if rng.random_bool(0.5) { Tone::Dark } else { Tone::Bright };
    let header = Band::new(0, 0, w, header_h).with_label(Label::Synthetic);
    let header_color = header_tone.color(&mut rng);
    paint_graphic(&mut frame, header, header_color, &mut rng);
    truth.push(header);

    let middle_h = middle_bottom - middle_top;
    let layout = rng.random_range(0..5);
    let split = rng.random_range(w * 9 / 20..w * 7 / 10);
    let mut bottom_tones: Vec<Option<Tone>> = Vec::new();
    match layout {
        0 => {
            let b = Band::new(0, middle_top, w, middle_h).with_label(Label::Natural);
            paint_natural(&mut frame, b, &mut rng);
            truth.push(b);
            bottom_tones.push(None);
        }
        1 | 2 => {
            let nat = Band::new(0, middle_top, split, middle_h).with_label(Label::Natural);
            paint_natural(&mut frame, nat, &mut rng);
            truth.push(nat);
            bottom_tones.push(None);
            let tone = header_tone.flip();
            if layout == 1 {
                let p = Band::new(split, middle_top, w - split, middle_h).with_label(Label::Synthetic);
                let c = tone.color(&mut rng);
                paint_graphic(&mut frame, p, c, &mut rng);
                truth.push(p);
                bottom_tones.push(Some(tone));
            } else {
                let cut = middle_top + rng.random_range(middle_h * 2 / 5..middle_h * 3 / 5);
                let p1 = Band::new(split, middle_top, w - split, cut - middle_top).with_label(Label::Synthetic);
                let p2 = Band::new(split, cut, w - split, middle_bottom - cut).with_label(Label::Synthetic);
                let (c1, c2) = (tone.color(&mut rng), tone.flip().color(&mut rng));
                paint_graphic(&mut frame, p1, c1, &mut rng);
                paint_graphic(&mut frame, p2, c2, &mut rng);
                truth.push(p1);
                truth.push(p2);
                bottom_tones.push(Some(tone.flip()));
            }
        }
        3 => {
            let left_w = rng.random_range(w * 3 / 10..w * 2 / 5);
            let p = Band::new(0, middle_top, left_w, middle_h).with_label(Label::Synthetic);
            let tone = header_tone.flip();
            let c = tone.color(&mut rng);
            paint_graphic(&mut frame, p, c, &mut rng);
            truth.push(p);
            let nat = Band::new(left_w, middle_top, w - left_w, middle_h).with_label(Label::Natural);
            paint_natural(&mut frame, nat, &mut rng);
            truth.push(nat);
            bottom_tones.push(Some(tone));
            bottom_tones.push(None);
        }
        _ => {
            // two camera feeds side by side, one brighter than the other
            let left = Band::new(0, middle_top, split, middle_h).with_label(Label::Natural);
            let right = Band::new(split, middle_top, w - split, middle_h).with_label(Label::Natural);
            paint_natural(&mut frame, left, &mut rng);
            paint_natural(&mut frame, right, &mut rng);
            let offset = if rng.random_bool(0.5) { 70i32 } else { -70 };
            for y in right.y as usize..right.bottom() as usize {
                for x in right.x as usize..right.right() as usize {
                    let p = frame.get(x, y);
                    frame.set(x, y, p.map(|v| (v as i32 + offset).clamp(0, 255) as u8));
                }
            }
            truth.push(left);
            truth.push(right);
            bottom_tones.push(None);
        }
    }

    // the bar under the middle must contrast with every graphics panel above it
    let mut y = middle_bottom;
    let above_tone = bottom_tones.iter().flatten().next().copied();
    let mut tone = match above_tone {
        Some(t) => t.flip(),
        None => {
            if rng.random_bool(0.5) {
                Tone::Dark
            } else {
                Tone::Bright
            }
        }
    };
    if bottom_tones.iter().flatten().any(|&t| t == tone) {
        tone = tone.flip();
    }
    for bar_h in [headline_h, ticker_h] {
        if bar_h == 0 {
            continue;
        }
        let b = Band::new(0, y, w, bar_h).with_label(Label::Text);
        let c = tone.color(&mut rng);
        paint_text_band(&mut frame, b, c, &mut rng);
        truth.push(b);
        y += bar_h;
        tone = tone.flip();
    }
    if footer_h > 0 {
        let b = Band::new(0, y, w, footer_h).with_label(Label::Synthetic);
        let c = tone.color(&mut rng);
        paint_graphic(&mut frame, b, c, &mut rng);
        truth.push(b);
    }
    truth.sort_by_key(|b| (b.y, b.x));
    SyntheticFrame { frame, truth }
}

/// Uniform RGB noise.
pub fn noise_frame(seed: u64, width: usize, height: usize) -> FrameImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FrameImage::from_fn(width, height, |_, _| [rng.random(), rng.random(), rng.random()])
}

/// One axis-aligned line drawn by [`planted_lines`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedLine {
    pub horizontal: bool,
    /// Row of a horizontal line, column of a vertical one.
    pub at: u32,
    pub from: u32,
    /// Inclusive.
    pub to: u32,
}

impl PlantedLine {
    pub fn endpoints(&self) -> [(u32, u32); 2] {
        if self.horizontal {
            [(self.from, self.at), (self.to, self.at)]
        } else {
            [(self.at, self.from), (self.at, self.to)]
        }
    }

    /// Whether `p` lies on the line within `tol` pixels.
    pub fn supports(&self, p: (u32, u32), tol: u32) -> bool {
        let (along, across) = if self.horizontal { (p.0, p.1) } else { (p.1, p.0) };
        across.abs_diff(self.at) <= tol && along + tol >= self.from && along <= self.to + tol
    }

    /// Whether an end of `self` lies near the perpendicular line `other`.
    fn ends_near(&self, other: &PlantedLine, margin: u32) -> bool {
        let spans = self.at + margin >= other.from && self.at <= other.to + margin;
        spans && (self.from.abs_diff(other.at) < margin || self.to.abs_diff(other.at) < margin)
    }
}

/// Binary edge map (0/1) of `count` axis-aligned lines, each at least a
/// third of the frame long. Parallel lines are kept 12 px apart and no end
/// lies within 10 px of a crossing line, so every line is recoverable as a
/// separate segment.
pub fn planted_lines(rng: &mut impl Rng, width: usize, height: usize, count: usize) -> (GrayImage, Vec<PlantedLine>) {
    let mut img = GrayImage::filled(width, height, 0);
    let mut lines: Vec<PlantedLine> = Vec::new();
    while lines.len() < count {
        let horizontal = rng.random_bool(0.5);
        let (span, across) = if horizontal { (width as u32, height as u32) } else { (height as u32, width as u32) };
        let at = rng.random_range(10..across - 10);
        if lines.iter().any(|l| l.horizontal == horizontal && l.at.abs_diff(at) < 12) {
            continue;
        }
        let len = rng.random_range(span / 3..span - 20);
        let from = rng.random_range(5..span - len - 5);
        let new = PlantedLine { horizontal, at, from, to: from + len - 1 };
        if lines.iter().any(|l| l.horizontal != horizontal && (new.ends_near(l, 10) || l.ends_near(&new, 10))) {
            continue;
        }
        lines.push(new);
    }
    for l in &lines {
        for t in l.from..=l.to {
            let (x, y) = if l.horizontal { (t, l.at) } else { (l.at, t) };
            img.set(x as usize, y as usize, 1);
        }
    }
    (img, lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn news_frames_are_partitions() {
        for seed in 0..40 {
            let f = news_frame(seed, 640, 360);
            let area: u64 = f.truth.iter().map(Band::area).sum();
            assert_eq!(area, 640 * 360, "seed {seed}");
            for (i, a) in f.truth.iter().enumerate() {
                assert!(a.fits_in(640, 360));
                for b in &f.truth[i + 1..] {
                    assert!(!a.overlaps(b), "seed {seed}: {a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(news_frame(7, 640, 360).frame, news_frame(7, 640, 360).frame);
        assert_eq!(text_stripe_frame(3, 400, 200), text_stripe_frame(3, 400, 200));
    }

    #[test]
    fn text_box_is_tight() {
        let (frame, truth) = text_stripe_frame(11, 400, 200);
        let bg = frame.get(0, 0);
        for b in &truth {
            // left and right columns, top and bottom rows contain glyph pixels
            assert!((b.y..b.bottom()).any(|y| frame.get(b.x as usize, y as usize) != bg));
            let last = b.right() as usize - 1;
            assert!((b.y..b.bottom()).any(|y| frame.get(last, y as usize) != bg));
            assert!((b.x..b.right()).any(|x| frame.get(x as usize, b.y as usize) != bg));
            assert!((b.x..b.right()).any(|x| frame.get(x as usize, b.bottom() as usize - 1) != bg));
        }
    }
}
