use core::fmt;
use core::str::FromStr;

/// Content class of a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    #[default]
    Unlabeled,
    Synthetic,
    Natural,
    Text,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Unlabeled => "unlabeled",
            Label::Synthetic => "synthetic",
            Label::Natural => "natural",
            Label::Text => "text",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel;

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown band label")
    }
}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unlabeled" => Ok(Label::Unlabeled),
            "synthetic" => Ok(Label::Synthetic),
            "natural" => Ok(Label::Natural),
            "text" => Ok(Label::Text),
            _ => Err(UnknownLabel),
        }
    }
}

/// Axis-aligned labelled rectangle with its top-left corner at `(x, y)`.
///
/// Covers the pixel columns `x..x + w` and rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Band {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub label: Label,
}

impl Band {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Band {
            x,
            y,
            w,
            h,
            label: Label::Unlabeled,
        }
    }

    pub const fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub const fn right(&self) -> u32 {
        self.x + self.w
    }

    pub const fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub const fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.w > 0 && self.h > 0 && self.right() <= width && self.bottom() <= height
    }

    /// Area shared with `other`.
    pub fn intersection_area(&self, other: &Band) -> u64 {
        let w = self.right().min(other.right()).saturating_sub(self.x.max(other.x));
        let h = self.bottom().min(other.bottom()).saturating_sub(self.y.max(other.y));
        w as u64 * h as u64
    }

    pub fn overlaps(&self, other: &Band) -> bool {
        self.intersection_area(other) > 0
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }
}
