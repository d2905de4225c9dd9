//! Layout analysis for broadcast news frames.
//!
//! A frame is cut into low-level rectangles along straight lines found by a
//! progressive probabilistic Hough transform. Each rectangle is described by
//! an 11-feature colour/spatial descriptor and labelled natural or synthetic
//! by an extreme learning machine. Text is localized separately from gradient
//! projection profiles. Fragmented rectangles are then merged in three tiers
//! (histogram similarity, edge-free natural boundaries, text overlap) into a
//! [`reasoning::FormatProfile`]: a labelled, non-overlapping partition of the
//! frame.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, image decoding and the CLI live in the `newsband`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod change;
pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod hough;
pub mod imaging;
pub mod pipeline;
pub mod reasoning;
pub mod synth;
pub mod text;

mod geometry;

pub use error::{Error, Result};
pub use geometry::{Band, Label};
pub use imaging::{FrameImage, GrayImage, Histogram, Raster, Rgb};
