use std::time::Instant;

use newsband_core::hough::{ppht, HoughConfig, LineSegment};
use newsband_core::synth::{planted_lines, PlantedLine};
use newsband_core::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: (u32, u32), b: (u32, u32)) -> bool {
    a.0.abs_diff(b.0) <= 3 && a.1.abs_diff(b.1) <= 3
}

fn recovered(l: &PlantedLine, found: &[LineSegment]) -> bool {
    let [a, b] = l.endpoints();
    found
        .iter()
        .any(|s| (close(s.p0, a) && close(s.p1, b)) || (close(s.p0, b) && close(s.p1, a)))
}

#[test]
fn planted_axis_aligned_lines_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for image in 0..50 {
        let count = rng.random_range(1..=5);
        let (edges, planted) = planted_lines(&mut rng, 1280, 720, count);
        let cfg = HoughConfig { seed: image, ..HoughConfig::default() };
        let start = Instant::now();
        let found = ppht(&edges, &cfg);
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "image {image} took {elapsed:?}");
        for l in &planted {
            assert!(recovered(l, &found), "image {image}: {l:?} missing from {found:?}");
        }
        for s in &found {
            assert!(
                planted.iter().any(|l| l.supports(s.p0, 3) && l.supports(s.p1, 3)),
                "image {image}: unsupported segment {s:?}"
            );
        }
    }
}

#[test]
fn noise_without_structure_yields_no_long_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let edges = GrayImage::from_fn(320, 240, |_, _| u8::from(rng.random_bool(0.02)));
    assert!(ppht(&edges, &HoughConfig::default()).is_empty());
}
