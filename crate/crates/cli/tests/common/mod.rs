#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netsel_core::ingest::{write_detections, write_ground_truth, write_profiles, Category, Dataset, DetectionSet, ImageInfo};
use netsel_core::model::{Backend, BoundingBox, Detection, GroundTruthBox};
use rand::Rng;

use crate::support;
use crate::support::fixtures::{profile, random_raster, two_profile_registry};

pub fn netsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netsel"))
        .args(args)
        .env_remove("NETSEL_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .expect("netsel binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Input files for a full eval, oracle, features, train, predict chain.
pub struct Workspace {
    pub root: tempfile::TempDir,
}

pub const NETWORKS: [(&str, Backend, u32, f64, f64); 3] = [
    ("big", Backend::Gpu, 1, 120.0, 2.0),
    ("mid", Backend::GpuTrt, 4, 40.0, 5.0),
    ("tiny", Backend::Cpu, 1, 15.0, 9.0),
];

impl Workspace {
    pub fn path(&self, name: &str) -> PathBuf {
        self.root.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    pub fn build(seed: u64, n_images: u64) -> Self {
        let root = tempfile::tempdir().unwrap();
        let mut rng = support::rng(seed);
        let images_dir = root.path().join("images");
        std::fs::create_dir(&images_dir).unwrap();
        std::fs::create_dir(root.path().join("detections")).unwrap();

        let mut infos = Vec::new();
        let mut gts = Vec::new();
        for id in 1..=n_images {
            let raster = random_raster(&mut rng, 40);
            let (w, h) = (raster.width() as u32, raster.height() as u32);
            let file_name = format!("frame_{id:03}.png");
            image::RgbImage::from_raw(w, h, raster.pixels().to_vec())
                .unwrap()
                .save(images_dir.join(&file_name))
                .unwrap();
            infos.push(ImageInfo {
                id,
                width: 640,
                height: 480,
                file_name: Some(file_name),
            });
            for _ in 0..rng.gen_range(1..=4) {
                let side = [12.0, 24.0, 48.0, 80.0, 120.0][rng.gen_range(0..5)];
                gts.push(GroundTruthBox {
                    image_id: id,
                    category_id: rng.gen_range(1..=2),
                    bbox: BoundingBox::new(rng.gen_range(0..500) as f64, rng.gen_range(0..350) as f64, side, side * 1.2)
                        .unwrap(),
                    ignored: false,
                });
            }
        }
        let categories = vec![
            Category { id: 1, name: "person".into() },
            Category { id: 2, name: "car".into() },
        ];
        let dataset = Dataset::new(infos, categories, gts.clone()).unwrap();
        write_ground_truth(&dataset, &root.path().join("gt.json")).unwrap();

        let mut profiles = Vec::new();
        for (model, backend, batch, latency, jitter) in NETWORKS {
            let p = profile(model, backend, batch, latency, 0.0);
            let mut dets = Vec::new();
            for g in &gts {
                if rng.gen_bool(0.15) {
                    continue;
                }
                let b = g.bbox;
                let mut j = || rng.gen_range(-jitter..=jitter);
                let bbox = BoundingBox::new(b.x + j(), b.y + j(), b.w + j(), b.h + j()).unwrap();
                dets.push(Detection {
                    image_id: g.image_id,
                    category_id: g.category_id,
                    bbox,
                    score: rng.gen_range(1..=20) as f64 / 20.0,
                });
            }
            for _ in 0..n_images / 2 {
                dets.push(Detection {
                    image_id: rng.gen_range(1..=n_images),
                    category_id: rng.gen_range(1..=2),
                    bbox: BoundingBox::new(rng.gen_range(0..500) as f64, rng.gen_range(0..350) as f64, 30.0, 30.0)
                        .unwrap(),
                    score: rng.gen_range(1..=10) as f64 / 20.0,
                });
            }
            let set = DetectionSet {
                network_id: p.network_id(),
                detections: dets,
            };
            write_detections(&set, &root.path().join("detections").join(format!("{}.json", p.network_id()))).unwrap();
            profiles.push(p);
        }
        // accuracies are placeholders; eval recomputes them
        for (p, acc) in profiles.iter_mut().zip([0.45, 0.35, 0.2]) {
            p.map_overall = acc;
        }
        write_profiles(&profiles, &root.path().join("profiles.csv")).unwrap();

        write_profiles(&two_profile_registry(), &root.path().join("two_profiles.csv")).unwrap();
        std::fs::write(
            root.path().join("scenario.csv"),
            "frame,label,max_latency_ms,min_accuracy,objective\n0,city,,,class:3\n50,highway,50,,class:3\n",
        )
        .unwrap();
        std::fs::write(
            root.path().join("gridlock.csv"),
            "frame,label,max_latency_ms,min_accuracy,objective\n0,gridlock,5,,overall\n",
        )
        .unwrap();
        Workspace { root }
    }
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Argument lists for every subcommand, in pipeline order. `out` is the
/// output root; each step writes to its own subdirectory.
pub fn pipeline(ws: &Workspace, out: &Path) -> Vec<(&'static str, Vec<String>)> {
    let o = |s: &str| out.join(s).to_string_lossy().into_owned();
    vec![
        (
            "eval",
            vec![
                "eval".into(),
                "--dataset".into(),
                ws.arg("gt.json"),
                "--detections".into(),
                ws.arg("detections"),
                "--profiles".into(),
                ws.arg("profiles.csv"),
                "--per-image".into(),
                "--out".into(),
                o("eval"),
            ],
        ),
        (
            "oracle",
            vec![
                "oracle".into(),
                "--scores".into(),
                o("eval/scores.csv"),
                "--profiles".into(),
                o("eval/eval_profiles.csv"),
                "--restrict-pareto".into(),
                "overall".into(),
                "--out".into(),
                o("oracle"),
            ],
        ),
        (
            "pareto",
            vec!["pareto".into(), "--profiles".into(), o("eval/eval_profiles.csv"), "--out".into(), o("pareto")],
        ),
        (
            "simulate",
            vec![
                "simulate".into(),
                "--profiles".into(),
                ws.arg("two_profiles.csv"),
                "--scenario".into(),
                ws.arg("scenario.csv"),
                "--out".into(),
                o("simulate"),
            ],
        ),
        (
            "features",
            vec![
                "features".into(),
                "--images".into(),
                ws.arg("images"),
                "--dataset".into(),
                ws.arg("gt.json"),
                "--out".into(),
                o("features"),
            ],
        ),
        (
            "train",
            vec![
                "train".into(),
                "--features".into(),
                o("features/features.csv"),
                "--labels".into(),
                o("oracle/oracle_labels.csv"),
                "--train-fraction".into(),
                "0.75".into(),
                "--out".into(),
                o("train"),
            ],
        ),
        (
            "predict",
            vec![
                "predict".into(),
                "--model".into(),
                o("train/model_knn.json"),
                "--features".into(),
                o("features/features.csv"),
                "--out".into(),
                o("predict"),
            ],
        ),
    ]
}
