use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use newsband_core::{Band, FrameImage, Label};

use crate::error::{Error, Result};
use crate::formats::write_atomic;

/// Extensions recognised as frame images.
pub const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "bmp", "ppm", "pnm"];

pub fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_frame(path: &Path) -> Result<FrameImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_rgb(img.to_rgb8()))
}

pub fn from_rgb(img: RgbImage) -> FrameImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0).collect();
    FrameImage::from_vec(w, h, data).expect("buffer matches dimensions")
}

pub fn to_rgb(frame: &FrameImage) -> RgbImage {
    let raw = frame.as_slice().iter().flat_map(|p| *p).collect();
    RgbImage::from_raw(frame.width() as u32, frame.height() as u32, raw).expect("buffer matches dimensions")
}

pub fn encode_png(frame: &FrameImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    to_rgb(frame)
        .write_to(&mut out, ImageFormat::Png)
        .expect("PNG encoding into memory cannot fail");
    out.into_inner()
}

pub fn save_png(path: &Path, frame: &FrameImage) -> Result<()> {
    write_atomic(path, &encode_png(frame))
}

fn label_color(label: Label) -> [u8; 3] {
    match label {
        Label::Natural => [40, 200, 60],
        Label::Synthetic => [230, 60, 200],
        Label::Text => [250, 210, 20],
        Label::Unlabeled => [128, 128, 128],
    }
}

/// The frame with each band outlined in its label colour.
pub fn overlay(frame: &FrameImage, bands: &[Band]) -> FrameImage {
    let mut out = frame.clone();
    for b in bands {
        let c = label_color(b.label);
        let t = 2.min(b.w).min(b.h);
        for edge in [
            Band::new(b.x, b.y, b.w, t),
            Band::new(b.x, b.bottom() - t, b.w, t),
            Band::new(b.x, b.y, t, b.h),
            Band::new(b.right() - t, b.y, t, b.h),
        ] {
            out.fill_rect(&edge, c);
        }
    }
    out
}
