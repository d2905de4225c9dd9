use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use newsband::imageio::save_png;
use newsband::server::{router, ServerConfig};
use newsband_core::hough::HoughConfig;
use newsband_core::synth::news_frame;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Fixture {
    dir: TempDir,
    app: Router,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = TempDir::new().unwrap();
        let frames = dir.path().join("frames");
        for (i, seed) in [3u64, 4].into_iter().enumerate() {
            save_png(&frames.join(format!("f{i}.png")), &news_frame(seed, 640, 360).frame).unwrap();
        }
        let app = router(ServerConfig {
            frames,
            annotations: dir.path().join("annotations"),
            dataset: dir.path().join("dataset"),
            hough: HoughConfig::default(),
        });
        Fixture { dir, app }
    }

    fn path(&self, rel: &str) -> std::path::PathBuf {
        self.dir.path().join(rel)
    }

    async fn call(&self, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    async fn json(&self, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }
}

fn file_bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[tokio::test]
async fn lists_frames_with_sizes() {
    let fx = Fixture::new();
    let (s, v) = fx.json("GET", "/frames", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        v,
        json!([{"id": "f0", "width": 640, "height": 360}, {"id": "f1", "width": 640, "height": 360}])
    );
}

#[tokio::test]
async fn empty_frame_directory_lists_nothing() {
    let dir = TempDir::new().unwrap();
    std::fs::create_dir(dir.path().join("frames")).unwrap();
    let fx = Fixture {
        app: router(ServerConfig {
            frames: dir.path().join("frames"),
            annotations: dir.path().join("annotations"),
            dataset: dir.path().join("dataset"),
            hough: HoughConfig::default(),
        }),
        dir,
    };
    assert_eq!(fx.json("GET", "/frames", None).await, (StatusCode::OK, json!([])));
}

#[tokio::test]
async fn serves_frame_as_png() {
    let fx = Fixture::new();
    let (s, bytes) = fx.call("GET", "/frames/f0/image", None).await;
    assert_eq!(s, StatusCode::OK);
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).unwrap();
    assert_eq!((img.width(), img.height()), (640, 360));
}

#[tokio::test]
async fn unknown_frames_are_404() {
    let fx = Fixture::new();
    for uri in ["/frames/nope/image", "/frames/nope/bands", "/frames/nope/annotations", "/frames/..%2Ff0/bands"] {
        assert_eq!(fx.call("GET", uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (s, _) = fx.call("POST", "/frames/nope/bands/0/label", Some(r#"{"label":"natural"}"#)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = fx.call("POST", "/frames/nope/annotations", Some(r#"{"bands":[]}"#)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bands_start_bottom_left_and_tile_the_frame() {
    let fx = Fixture::new();
    let (s, v) = fx.json("GET", "/frames/f0/bands", None).await;
    assert_eq!(s, StatusCode::OK);
    let bands = v["bands"].as_array().unwrap();
    assert!(bands.len() > 1);
    let mut area = 0;
    let mut prev: Option<(u64, u64)> = None;
    for (i, b) in bands.iter().enumerate() {
        assert_eq!(b["index"].as_u64().unwrap(), i as u64);
        let (x, y, w, h) = (b["x"].as_u64().unwrap(), b["y"].as_u64().unwrap(), b["w"].as_u64().unwrap(), b["h"].as_u64().unwrap());
        area += w * h;
        let key = (360 - (y + h), x);
        if let Some(p) = prev {
            assert!(p < key, "band {i} out of order");
        }
        prev = Some(key);
    }
    assert_eq!(area, 640 * 360);
    let first = &bands[0];
    assert_eq!(first["x"], 0);
    assert_eq!(first["y"].as_u64().unwrap() + first["h"].as_u64().unwrap(), 360);
    // Stable across calls.
    assert_eq!(fx.json("GET", "/frames/f0/bands", None).await.1, v);
}

#[tokio::test]
async fn annotations_round_trip_in_canonical_form() {
    let fx = Fixture::new();
    let (s, v) = fx.json("GET", "/frames/f1/annotations", None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({"bands": []})));

    let body = r#"{"bands":[
        {"label":"natural","x":0,"y":60,"w":640,"h":300},
        {"label":"synthetic","x":0,"y":0,"w":640,"h":60}]}"#;
    let (s, v) = fx.json("POST", "/frames/f1/annotations", Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["bands"][0]["label"], "synthetic");
    let saved = std::fs::read_to_string(fx.path("annotations/f1.txt")).unwrap();
    assert_eq!(saved, "synthetic 0 0 640 60\nnatural 0 60 640 300\n");
    assert_eq!(fx.json("GET", "/frames/f1/annotations", None).await.1, v);
}

#[tokio::test]
async fn bad_annotation_bodies_are_400_and_write_nothing() {
    let fx = Fixture::new();
    for body in [
        "not json",
        r#"{"bands":[{"label":"natural","x":0,"y":0,"w":10}]}"#,
        r#"{"bands":[{"label":"sky","x":0,"y":0,"w":10,"h":10}]}"#,
        r#"{"bands":[{"label":"natural","x":600,"y":0,"w":41,"h":10}]}"#,
        r#"{"bands":[{"label":"text","x":0,"y":0,"w":0,"h":10}]}"#,
        r#"{"bands":[],"extra":1}"#,
    ] {
        let (s, v) = fx.json("POST", "/frames/f0/annotations", Some(body)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        assert!(v["error"].is_string());
    }
    assert!(!fx.path("annotations/f0.txt").exists());
}

#[tokio::test]
async fn labelling_files_crops_and_moves_them_between_classes() {
    let fx = Fixture::new();
    let source = fx.path("frames/f0.png");
    let before = file_bytes(&source);
    let (_, v) = fx.json("GET", "/frames/f0/bands", None).await;
    let b0 = &v["bands"][0];

    let (s, r) = fx.json("POST", "/frames/f0/bands/0/label", Some(r#"{"label":"natural"}"#)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["path"], "natural/f0_band000.png");
    let crop = image::open(fx.path("dataset/natural/f0_band000.png")).unwrap().to_rgb8();
    let (x, y, w, h) = ["x", "y", "w", "h"].map(|k| b0[k].as_u64().unwrap() as u32).into();
    assert_eq!((crop.width(), crop.height()), (w, h));
    let frame = image::open(&source).unwrap().to_rgb8();
    for (cx, cy, px) in crop.enumerate_pixels() {
        assert_eq!(px, frame.get_pixel(x + cx, y + cy));
    }

    let (s, _) = fx.json("POST", "/frames/f0/bands/0/label", Some(r#"{"label":"artificial"}"#)).await;
    assert_eq!(s, StatusCode::OK);
    assert!(!fx.path("dataset/natural/f0_band000.png").exists());
    assert!(fx.path("dataset/artificial/f0_band000.png").exists());
    assert_eq!(file_bytes(&source), before);
}

#[tokio::test]
async fn label_errors() {
    let fx = Fixture::new();
    let (_, v) = fx.json("GET", "/frames/f0/bands", None).await;
    let n = v["bands"].as_array().unwrap().len();
    let (s, _) = fx.json("POST", &format!("/frames/f0/bands/{n}/label"), Some(r#"{"label":"natural"}"#)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = fx.json("POST", "/frames/f0/bands/0/label", Some(r#"{"label":"synthetic"}"#)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = fx.json("POST", "/frames/f0/bands/0/label", Some("{")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(!fx.path("dataset").exists());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_annotation_writes_leave_one_complete_file() {
    let fx = Fixture::new();
    let body = |h: u32| {
        format!(
            r#"{{"bands":[{{"label":"synthetic","x":0,"y":0,"w":640,"h":{h}}},{{"label":"natural","x":0,"y":{h},"w":640,"h":{}}}]}}"#,
            360 - h
        )
    };
    let tasks: Vec<_> = (1..=8u32)
        .map(|k| {
            let app = fx.app.clone();
            let req = Request::builder()
                .method("POST")
                .uri("/frames/f0/annotations")
                .body(Body::from(body(40 * k)))
                .unwrap();
            tokio::spawn(async move { app.oneshot(req).await.unwrap().status() })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let saved = std::fs::read_to_string(fx.path("annotations/f0.txt")).unwrap();
    let ok = (1..=8).any(|k| {
        let h = 40 * k;
        saved == format!("synthetic 0 0 640 {h}\nnatural 0 {h} 640 {}\n", 360 - h)
    });
    assert!(ok, "{saved}");
}
