use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use netsel_core::evaluation::{self, default_iou_thresholds, EvalReport};
use netsel_core::features::{self, extract_all_timed, FeatureConfig, FeatureTimings, FeatureVector, RasterImage};
use netsel_core::frontier::{best_per_network, pareto_frontier, write_points_to};
use netsel_core::ingest::{self, Dataset};
use netsel_core::model::{AccuracyMetric, Backend, ImageId, NetworkId, NetworkProfile, PerImageScore, ProfileKey, SizeBucket};
use netsel_core::oracle::{self, build_oracle, oracle_distribution, restrict_to_pareto, Oracle};
use netsel_core::predictor::{self, run_pipeline, ClassifierKind, LabeledCorpus, Predictor, TrainingConfig};
use netsel_core::reactive::{self, simulate_stream, switch_frames, SimulationOptions};
use rayon::prelude::*;

use crate::config::{RunConfig, DEFAULT_SEED};
use crate::output::Outputs;
use crate::svg::{self, Marker, ScatterPoint, Series};
use crate::{BadInput, Cli, Command, Control};

struct Ctx {
    cfg: RunConfig,
    seed: u64,
}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    BadInput(msg.into()).into()
}

/// Flag value, else config value, else a usage error naming both.
fn required(flag: &Option<PathBuf>, cfg: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let path = flag
        .clone()
        .or_else(|| cfg.clone())
        .ok_or_else(|| bad(format!("--{name} is required (flag or [paths].{} in the config)", name.replace('-', "_"))))?;
    if !path.exists() {
        return Err(bad(format!("{} does not exist: {}", name, path.display())));
    }
    Ok(path)
}

fn optional(flag: &Option<PathBuf>, cfg: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match flag.clone().or_else(|| cfg.clone()) {
        Some(p) if !p.exists() => Err(bad(format!("{} does not exist: {}", name, p.display()))),
        other => Ok(other),
    }
}

fn parse_metric(s: &str) -> Result<AccuracyMetric> {
    s.parse().map_err(|e| bad(format!("{e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(bad("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("netsel-out"));
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        cfg,
    };
    let mut out = Outputs::new(&out_dir);
    match &cli.command {
        Command::Eval(a) => cmd_eval(&ctx, a, &mut out)?,
        Command::Oracle(a) => cmd_oracle(&ctx, a, &mut out)?,
        Command::Pareto(a) => cmd_pareto(&ctx, a, &mut out)?,
        Command::Simulate(a) => cmd_simulate(&ctx, a, &mut out)?,
        Command::Features(a) => cmd_features(&ctx, a, &mut out)?,
        Command::Train(a) => cmd_train(&ctx, a, &mut out)?,
        Command::Predict(a) => cmd_predict(&ctx, a, &mut out)?,
    }
    for p in out.commit() {
        println!("{}", p.display());
    }
    Ok(())
}

/// Files as given; directories expand to their `*.json` files in name order.
fn expand_detection_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else if p.exists() {
            files.push(p.clone());
        } else {
            return Err(bad(format!("detections file does not exist: {}", p.display())));
        }
    }
    Ok(files)
}

fn profiles_by_id(profiles: &[NetworkProfile]) -> BTreeMap<NetworkId, &NetworkProfile> {
    profiles.iter().map(|p| (p.network_id(), p)).collect()
}

fn cmd_eval(ctx: &Ctx, a: &crate::EvalArgs, out: &mut Outputs) -> Result<()> {
    let dataset_path = required(&a.dataset, &ctx.cfg.paths.dataset, "dataset")?;
    let det_paths = if a.detections.is_empty() {
        &ctx.cfg.paths.detections
    } else {
        &a.detections
    };
    let files = expand_detection_paths(det_paths)?;
    if files.is_empty() {
        return Err(bad("at least one detections file is required (--detections)"));
    }
    let profiles = match optional(&a.profiles, &ctx.cfg.paths.profiles, "profiles")? {
        Some(p) => ingest::load_profiles(&p)?.0,
        None => Vec::new(),
    };
    let by_id = profiles_by_id(&profiles);
    let bucket: Option<SizeBucket> = match &a.bucket {
        Some(b) => Some(b.parse().map_err(|e| bad(format!("--bucket: {e}")))?),
        None => None,
    };
    if a.latency_ms.is_some_and(|l| !(l.is_finite() && l > 0.0)) {
        return Err(bad("--latency-ms must be positive"));
    }

    let (dataset, report) = ingest::load_ground_truth(&dataset_path)?;
    if report.dropped_boxes > 0 {
        log::warn!("dropped {} degenerate ground-truth boxes", report.dropped_boxes);
    }
    let thresholds = default_iou_thresholds();
    let mut rows: Vec<(NetworkId, EvalReport)> = Vec::new();
    let mut profile_rows = Vec::new();
    let mut scores: Vec<PerImageScore> = Vec::new();
    for f in &files {
        let (set, load) = ingest::load_detections(f, &dataset)?;
        if load.clamped_scores > 0 {
            log::warn!("{}: clamped {} scores into [0, 1]", f.display(), load.clamped_scores);
        }
        let report = evaluation::evaluate_dataset(&dataset, &set, &thresholds, true)?;
        log::info!("{}: map_overall {}", set.network_id, report.map_overall);
        let profile = by_id.get(&set.network_id);
        if !profiles.is_empty() {
            let key: ProfileKey = set.network_id.as_str().parse().map_err(|e| {
                bad(format!(
                    "{}: file stem must be a profile key `model@BACKEND@batch` when --profiles is given ({e})",
                    f.display()
                ))
            })?;
            let p = profile.ok_or_else(|| bad(format!("no profile row for network {}", set.network_id)))?;
            profile_rows.push(report.to_profile(&key, p.latency_ms));
        }
        if a.per_image {
            let latency = profile.map(|p| p.latency_ms).or(a.latency_ms).ok_or_else(|| {
                bad(format!(
                    "per-image scores need a latency for {}: pass --profiles or --latency-ms",
                    set.network_id
                ))
            })?;
            scores.extend(evaluation::evaluate_per_image(&dataset, &set, bucket, latency)?);
        }
        rows.push((set.network_id.clone(), report));
    }
    out.write_with("eval_report.csv", |w| evaluation::write_reports_to(&rows, w))?;
    if !profile_rows.is_empty() {
        out.write_with("eval_profiles.csv", |w| ingest::write_profiles_to(&profile_rows, w))?;
    }
    if a.per_image {
        out.write_with("scores.csv", |w| ingest::write_scores_to(&scores, w))?;
    }
    Ok(())
}

fn load_dataset_ids(path: &Path) -> Result<Dataset> {
    Ok(ingest::load_ground_truth(path)?.0)
}

fn distribution_outputs(out: &mut Outputs, prefix: &str, title: &str, o: &Oracle) -> Result<()> {
    out.write_with(&format!("{prefix}_labels.csv"), |w| oracle::write_labels_to(&o.labels, w))?;
    out.write_with(&format!("{prefix}_excluded.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["image_id"])?;
        for id in &o.excluded {
            wr.write_record([id.to_string()])?;
        }
        wr.flush()
    })?;
    if o.labels.is_empty() {
        log::warn!("no image has ground truth; distribution skipped");
        return Ok(());
    }
    let dist = oracle_distribution(&o.labels)?;
    out.write_with(&format!("{prefix}_distribution.csv"), |w| oracle::write_distribution_to(&dist, w))?;
    let slices: Vec<(String, f64)> = dist.iter().map(|(k, v)| (k.to_string(), v.count as f64)).collect();
    out.write(&format!("{prefix}_distribution.svg"), svg::pie(title, &slices).as_bytes())?;
    Ok(())
}

fn cmd_oracle(ctx: &Ctx, a: &crate::OracleArgs, out: &mut Outputs) -> Result<()> {
    let score_paths = if a.scores.is_empty() {
        ctx.cfg.paths.scores.iter().cloned().collect()
    } else {
        a.scores.clone()
    };
    if score_paths.is_empty() {
        return Err(bad("--scores is required (flag or [paths].scores in the config)"));
    }
    let mut scores = Vec::new();
    for p in &score_paths {
        if !p.exists() {
            return Err(bad(format!("scores does not exist: {}", p.display())));
        }
        scores.extend(ingest::load_scores(p)?);
    }
    let profiles = match optional(&a.profiles, &ctx.cfg.paths.profiles, "profiles")? {
        Some(p) => ingest::load_profiles(&p)?.0,
        None => Vec::new(),
    };
    let networks: BTreeSet<NetworkId> = if profiles.is_empty() {
        scores.iter().map(|s| s.network_id.clone()).collect()
    } else {
        profiles.iter().map(|p| p.network_id()).collect()
    };
    let full = build_oracle(&scores, &networks)?;
    log::info!("{} labeled images, {} excluded", full.labels.len(), full.excluded.len());
    distribution_outputs(out, "oracle", "Oracle network distribution", &full)?;

    if let Some(metric) = &a.restrict_pareto {
        if profiles.is_empty() {
            return Err(bad("--restrict-pareto needs --profiles"));
        }
        let frontier = pareto_frontier(&profiles, parse_metric(metric)?)?;
        let restricted = restrict_to_pareto(&full.labels, &scores, &frontier)?;
        distribution_outputs(out, "oracle_pareto", "Oracle distribution over frontier networks", &restricted)?;
    }
    Ok(())
}

fn backend_marker(b: Backend) -> Marker {
    match b {
        Backend::Cpu => Marker::Circle,
        Backend::CpuAvx2 => Marker::Square,
        Backend::Gpu => Marker::Triangle,
        Backend::GpuTrt => Marker::Diamond,
        Backend::GpuTrtDyn => Marker::Cross,
    }
}

const ALL_BACKENDS: [Backend; 5] = [Backend::Cpu, Backend::CpuAvx2, Backend::Gpu, Backend::GpuTrt, Backend::GpuTrtDyn];

fn cmd_pareto(ctx: &Ctx, a: &crate::ParetoArgs, out: &mut Outputs) -> Result<()> {
    let path = required(&a.profiles, &ctx.cfg.paths.profiles, "profiles")?;
    let metric = parse_metric(&a.metric)?;
    let (profiles, _) = ingest::load_profiles(&path)?;
    let frontier = pareto_frontier(&profiles, metric)?;
    let best = best_per_network(&profiles, metric)?;
    out.write_with("pareto_frontier.csv", |w| write_points_to(&frontier, w))?;
    out.write_with("best_per_network.csv", |w| write_points_to(best.values(), w))?;

    let models: Vec<String> = profiles
        .iter()
        .map(|p| p.model_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let on_front: BTreeSet<ProfileKey> = frontier.iter().map(|p| p.profile.key()).collect();
    let points: Vec<ScatterPoint> = profiles
        .iter()
        .map(|p| ScatterPoint {
            x: p.latency_ms,
            y: p.accuracy(metric).expect("checked by the frontier"),
            radius: 3.0 + (p.batch_size as f64).log2().max(0.0),
            marker: backend_marker(p.backend),
            series: models.binary_search(&p.model_name).expect("model listed"),
            highlight: on_front.contains(&p.key()),
        })
        .collect();
    let markers: Vec<(Marker, String)> = ALL_BACKENDS
        .iter()
        .filter(|b| profiles.iter().any(|p| p.backend == **b))
        .map(|&b| (backend_marker(b), b.to_string()))
        .collect();
    let chart = svg::scatter(
        &format!("Accuracy vs latency ({metric}); outlined points form the frontier, size grows with batch"),
        "latency (ms)",
        &format!("mAP ({metric})"),
        &models,
        &markers,
        &points,
    );
    out.write("pareto.svg", chart.as_bytes())?;
    Ok(())
}

fn cmd_simulate(ctx: &Ctx, a: &crate::SimulateArgs, out: &mut Outputs) -> Result<()> {
    let sim = &ctx.cfg.simulate;
    let profiles_path = required(&a.profiles, &ctx.cfg.paths.profiles, "profiles")?;
    let scenario_path = required(&a.scenario, &ctx.cfg.paths.scenario, "scenario")?;
    let trace_path = optional(&a.latency_trace, &ctx.cfg.paths.latency_trace, "latency-trace")?;
    let policy = a.policy.map(Into::into).or(sim.policy).unwrap_or_default();
    let frames = a.frames.or(sim.frames).unwrap_or(100);
    let switch_cost_ms = a.switch_cost_ms.or(sim.switch_cost_ms).unwrap_or(0.0);

    let (profiles, _) = ingest::load_profiles(&profiles_path)?;
    let events = ingest::load_scenario(&scenario_path, policy)?;
    let latencies = trace_path.map(|p| ingest::load_latency_trace(&p)).transpose()?;
    let options = SimulationOptions {
        latency_trace: latencies.as_ref(),
        switch_cost_ms,
    };
    let trace = simulate_stream(&profiles, &events, frames, &options)?;
    let switches = switch_frames(&trace);
    log::info!("network switches at frames {switches:?}");
    let unsatisfied = trace.iter().filter(|e| !e.constraint_satisfied).count();
    if unsatisfied > 0 {
        log::warn!("{unsatisfied} frames violate their constraints");
    }
    out.write_with("trace.csv", |w| reactive::write_trace_to(&trace, w))?;

    let series = |name: &str, f: &dyn Fn(&reactive::TraceEntry) -> f64| Series {
        name: name.to_string(),
        values: trace.iter().map(f).collect(),
    };
    let mut latency_panel = vec![series("latency (ms)", &|e| e.latency_ms)];
    if events.iter().any(|e| e.constraints.max_latency_ms.is_some()) {
        let active_bound = |frame: u64| {
            events
                .iter()
                .rev()
                .find(|e| e.frame_index <= frame)
                .and_then(|e| e.constraints.max_latency_ms)
        };
        let ceiling = trace.iter().map(|e| e.latency_ms).fold(0.0, f64::max);
        latency_panel.push(series("latency bound (ms)", &|e| active_bound(e.frame_index).unwrap_or(ceiling)));
    }
    let panels = vec![
        (
            "accuracy".to_string(),
            vec![series("objective", &|e| e.objective), series("overall mAP", &|e| e.overall)],
        ),
        ("latency (ms)".to_string(), latency_panel),
    ];
    let marks: Vec<(u64, String)> = events.iter().map(|e| (e.frame_index, e.label.clone())).collect();
    out.write("trace.svg", svg::time_series("Reactive network selection", &panels, &marks).as_bytes())?;
    Ok(())
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(bad(format!("images directory does not exist: {}", dir.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "bmp"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_raster(path: &Path) -> Result<RasterImage> {
    let img = image::open(path)
        .with_context(|| format!("decoding {}", path.display()))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RasterImage::new(w, h, img.into_raw()).with_context(|| path.display().to_string())
}

fn cmd_features(ctx: &Ctx, a: &crate::FeaturesArgs, out: &mut Outputs) -> Result<()> {
    let dir = required(&a.images, &ctx.cfg.paths.images, "images")?;
    let dataset = optional(&a.dataset, &ctx.cfg.paths.dataset, "dataset")?
        .map(|p| load_dataset_ids(&p))
        .transpose()?;
    let mut config: FeatureConfig = ctx.cfg.features;
    if let Some(v) = a.edge_fraction {
        config.edge_fraction = v;
    }
    if let Some(v) = a.peak_fraction {
        config.peak_fraction = v;
    }
    if let Some(v) = a.harris_k {
        config.harris_k = v;
    }
    if let Some(v) = a.harris_threshold {
        config.harris_threshold = v;
    }

    let files = image_files(&dir)?;
    if files.is_empty() {
        return Err(bad(format!("no PNG or BMP images in {}", dir.display())));
    }
    let mut ids = Vec::with_capacity(files.len());
    let mut seen = BTreeSet::new();
    for f in &files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = f.file_stem().and_then(|n| n.to_str()).unwrap_or_default();
        let id: ImageId = dataset
            .as_ref()
            .and_then(|d| d.image_id_by_file_name(name))
            .or_else(|| stem.parse().ok())
            .ok_or_else(|| bad(format!("cannot map {} to an image id", f.display())))?;
        if !seen.insert(id) {
            return Err(bad(format!("image id {id} appears twice in {}", dir.display())));
        }
        ids.push(id);
    }

    let extracted: Vec<(FeatureVector, FeatureTimings)> = files
        .par_iter()
        .map(|f| {
            let raster = load_raster(f)?;
            extract_all_timed(&raster, &config).with_context(|| f.display().to_string())
        })
        .collect::<Result<_>>()?;
    let mut total = FeatureTimings::default();
    let mut rows: Vec<(ImageId, FeatureVector)> = Vec::with_capacity(ids.len());
    for (id, (v, t)) in ids.into_iter().zip(extracted) {
        total.accumulate(&t);
        rows.push((id, v));
    }
    rows.sort_by_key(|(id, _)| *id);
    for (stage, d) in total.stages() {
        log::info!("feature stage {stage}: {:.3} ms", d.as_secs_f64() * 1e3);
    }
    out.write_with("features.csv", |w| features::write_table_to(&rows, w))?;
    Ok(())
}

fn read_feature_table(path: &Path) -> Result<Vec<(ImageId, FeatureVector)>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    features::read_table(std::io::BufReader::new(f)).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn cmd_train(ctx: &Ctx, a: &crate::TrainArgs, out: &mut Outputs) -> Result<()> {
    let features_path = required(&a.features, &ctx.cfg.paths.features, "features")?;
    let labels_path = required(&a.labels, &ctx.cfg.paths.labels, "labels")?;
    let mut config: TrainingConfig = ctx.cfg.predictor;
    if let Some(v) = a.balance {
        config.balance = v;
    }
    if let Some(v) = a.train_fraction {
        config.train_fraction = v;
    }
    if let Some(v) = a.variance_target {
        config.variance_target = v;
    }
    if let Some(v) = a.k {
        config.k = v;
    }
    if let Some(v) = a.max_depth {
        config.max_depth = v;
    }
    if let Some(v) = a.min_leaf {
        config.min_leaf = v;
    }
    let kinds: Vec<ClassifierKind> = a.kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>()?;
    if kinds.is_empty() {
        return Err(bad("--kinds is empty"));
    }

    let table = read_feature_table(&features_path)?;
    let labels_file = std::fs::File::open(&labels_path).with_context(|| format!("opening {}", labels_path.display()))?;
    let labels =
        oracle::read_labels(std::io::BufReader::new(labels_file)).map_err(|e| bad(format!("{}: {e}", labels_path.display())))?;
    let (corpus, dropped) = LabeledCorpus::join(&table, &labels)?;
    if dropped > 0 {
        log::warn!("{dropped} images have features or a label but not both");
    }
    let corpus = match a.control {
        Control::None => corpus,
        Control::Shuffled => corpus.with_shuffled_labels(ctx.seed),
        Control::Permuted => corpus.with_permuted_features(ctx.seed),
    };
    let outcome = run_pipeline(&corpus, &kinds, &config, ctx.seed)?;
    log::info!(
        "trained on {} rows, tested on {}, {} PCA components",
        outcome.train_rows,
        outcome.test_rows,
        outcome.predictors.first().map_or(0, |p| p.pca.n_components())
    );
    out.write_with("train_report.csv", |w| predictor::write_reports_to(&outcome.reports, w))?;
    for (p, r) in outcome.predictors.iter().zip(&outcome.reports) {
        out.write(&format!("model_{}.json", r.kind), p.to_json().as_bytes())?;
        out.write_with(&format!("confusion_{}.csv", r.kind), |w| predictor::write_confusion_to(r, w))?;
    }
    let bars: Vec<(String, f64)> = outcome.reports.iter().map(|r| (r.kind.to_string(), r.accuracy)).collect();
    let baseline = outcome.reports.first().map(|r| r.baseline_accuracy).unwrap_or(0.0);
    out.write(
        "train_report.svg",
        svg::bars("Predictor accuracy on the test split", "accuracy", &bars, Some(("majority", baseline))).as_bytes(),
    )?;
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: &crate::PredictArgs, out: &mut Outputs) -> Result<()> {
    let model_path = required(&a.model, &ctx.cfg.paths.model, "model")?;
    let features_path = required(&a.features, &ctx.cfg.paths.features, "features")?;
    let text = std::fs::read_to_string(&model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model = Predictor::from_json(&text).map_err(|e| anyhow!(e).context(model_path.display().to_string()))?;
    let table = read_feature_table(&features_path)?;
    if let Some((id, _)) = table.iter().find(|(_, v)| v.as_slice().len() != model.pca.dim()) {
        return Err(bad(format!("image {id}: feature count does not match the model")));
    }
    let predicted: Vec<(ImageId, NetworkId)> = table
        .par_iter()
        .map(|(id, v)| (*id, model.predict(v.as_slice()).clone()))
        .collect();
    out.write_with("predictions.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["image_id", "network_id"])?;
        for (id, net) in &predicted {
            wr.write_record([id.to_string(), net.to_string()])?;
        }
        wr.flush()
    })?;
    Ok(())
}
