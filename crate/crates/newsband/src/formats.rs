//! On-disk formats: ground-truth band lists, profile JSON, model and
//! feature-context files, feature CSV and PGM masks.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use newsband_core::change::ChangeGrid;
use newsband_core::classifier::{Activation, ElmModel};
use newsband_core::features::FeatureContext;
use newsband_core::reasoning::FormatProfile;
use newsband_core::{Band, Label};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labels allowed in ground-truth files.
pub(crate) fn truth_label(s: &str) -> Option<Label> {
    match s.parse() {
        Ok(l @ (Label::Natural | Label::Synthetic | Label::Text)) => Some(l),
        _ => None,
    }
}

/// Sorts bands into the canonical `(y, x)` file order.
pub fn canonical_order(bands: &mut [Band]) {
    bands.sort_by_key(|b| (b.y, b.x, b.h, b.w, b.label));
}

/// Parses `label x y w h` lines; blank lines and `#` comments are skipped.
pub fn parse_ground_truth(text: &str, path: &Path) -> Result<Vec<Band>> {
    let mut bands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(format!("expected `label x y w h`, got {} fields", fields.len())));
        }
        let label = truth_label(fields[0]).ok_or_else(|| err(format!("unknown label `{}`", fields[0])))?;
        let mut n = [0u32; 4];
        for (slot, f) in n.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| err(format!("`{f}` is not a non-negative integer")))?;
        }
        if n[2] == 0 || n[3] == 0 {
            return Err(err("band has zero area".into()));
        }
        bands.push(Band::new(n[0], n[1], n[2], n[3]).with_label(label));
    }
    Ok(bands)
}

/// Canonical text: one `label x y w h` line per band, sorted by `(y, x)`.
pub fn format_ground_truth(bands: &[Band]) -> String {
    let mut sorted = bands.to_vec();
    canonical_order(&mut sorted);
    let mut out = String::new();
    for b in sorted {
        let _ = writeln!(out, "{} {} {} {} {}", b.label, b.x, b.y, b.w, b.h);
    }
    out
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<Band>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text, path)
}

/// Checks that truth bands fit a `width x height` frame.
pub fn check_bands_fit(bands: &[Band], width: u32, height: u32, path: &Path) -> Result<()> {
    match bands.iter().find(|b| !b.fits_in(width, height)) {
        Some(b) => Err(Error::format(path, format!("band {b:?} lies outside the {width}x{height} frame"))),
        None => Ok(()),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_ground_truth(path: &Path, bands: &[Band]) -> Result<()> {
    write_atomic(path, format_ground_truth(bands).as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileBandJson {
    pub label: Label,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    /// Which reasoning step produced the band.
    pub origin: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileJson {
    pub width: u32,
    pub height: u32,
    pub bands: Vec<ProfileBandJson>,
}

pub fn profile_json(p: &FormatProfile) -> ProfileJson {
    ProfileJson {
        width: p.width(),
        height: p.height(),
        bands: p
            .bands()
            .iter()
            .zip(p.origins())
            .map(|(b, o)| ProfileBandJson {
                label: b.label,
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
                origin: o.as_str().into(),
            })
            .collect(),
    }
}

const MODEL_MAGIC: &str = "newsband-elm 1";

/// Model file: text header lines up to `data`, then little-endian f64
/// values: mean, scale, biases, input weights (row-major L x d) and output
/// weights (row-major L x 2).
pub fn write_model(path: &Path, model: &ElmModel) -> Result<()> {
    let d = model.mean().len();
    let l = model.hidden_count();
    let mut bytes = format!("{MODEL_MAGIC}\nactivation {}\ninput {d}\nhidden {l}\noutputs 2\ndata\n", model.activation()).into_bytes();
    let values = model
        .mean()
        .iter()
        .chain(model.scale())
        .chain(model.biases())
        .copied()
        .chain(model.input_weights_row_major())
        .chain(model.output_weights_row_major());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

pub fn read_model(path: &Path) -> Result<ElmModel> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let bad = |m: &str| Error::format(path, m.to_string());
    let mut header = Vec::new();
    loop {
        let mut line = String::new();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(bad("model header is truncated"));
        }
        let line = line.trim_end().to_string();
        if line == "data" {
            break;
        }
        header.push(line);
        if header.len() > 16 {
            return Err(bad("model header is too long"));
        }
    }
    if header.first().map(String::as_str) != Some(MODEL_MAGIC) {
        return Err(bad("not a model file (bad magic line)"));
    }
    let field = |key: &str| -> Result<&str> {
        header
            .iter()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
            .ok_or_else(|| bad(&format!("missing `{key}` in model header")))
    };
    let number = |key: &str| -> Result<usize> { field(key)?.parse().map_err(|_| bad(&format!("bad `{key}` value"))) };
    let activation: Activation = field("activation")?.parse().map_err(|_| bad("unknown activation"))?;
    let (d, l) = (number("input")?, number("hidden")?);
    if number("outputs")? != 2 {
        return Err(bad("only two-class models are supported"));
    }
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    let count = 2 * d + l + l * d + 2 * l;
    if raw.len() != count * 8 {
        return Err(bad(&format!("expected {} data bytes, found {}", count * 8, raw.len())));
    }
    let mut values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
    let mean = take(d);
    let scale = take(d);
    let biases = take(l);
    let input = take(l * d);
    let output = take(2 * l);
    Ok(ElmModel::from_parts(input, biases, output, activation, mean, scale)?)
}

const CONTEXT_FORMAT: &str = "newsband-feature-context";

#[derive(Serialize, Deserialize)]
struct ContextFile {
    format: String,
    version: u32,
    context: FeatureContext,
}

pub fn write_context(path: &Path, ctx: &FeatureContext) -> Result<()> {
    let file = ContextFile {
        format: CONTEXT_FORMAT.into(),
        version: 1,
        context: ctx.clone(),
    };
    let json = serde_json::to_vec(&file).map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(path, &json)
}

pub fn read_context(path: &Path) -> Result<FeatureContext> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: ContextFile = serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))?;
    if file.format != CONTEXT_FORMAT || file.version != 1 {
        return Err(Error::format(path, "unsupported feature context format or version"));
    }
    file.context.validate()?;
    Ok(file.context)
}

/// One feature vector per row, no header.
pub fn write_features_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::format(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn read_features_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Binary PGM of a change grid, one pixel per cell: 255 dynamic, 0 static.
pub fn write_change_mask(path: &Path, grid: &ChangeGrid) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", grid.columns(), grid.rows()).into_bytes();
    for r in 0..grid.rows() {
        for c in 0..grid.columns() {
            bytes.push(if grid.is_dynamic(c, r) { 255 } else { 0 });
        }
    }
    write_atomic(path, &bytes)
}
