//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use tubegcn_core::dataset::{random_phantom_spec, DatasetOptions};
use tubegcn_core::metrics::{
    cross_section_dice, evaluate_segment, surface_distances, MetricsReport, SegmentRow,
};
use tubegcn_core::network::{
    load_checkpoint, save_checkpoint, AggregatorMode, GcnModel,
};
use tubegcn_core::pipeline::{build_featured_graph, segment_to_mesh};
use tubegcn_core::trainer::{loss_history_csv, train_with_checkpoints, TrainError};
use tubegcn_core::tubemesh::{
    build_graph, export_obj, mesh_from_positions, parse_obj, realize_with_radii, Mesh,
};
use tubegcn_core::volume::PhantomSpec;

use crate::config::TrainSettings;
use crate::dataset_io::{
    frame_centerline, load_train_segments, write_phantom_bundle, DatasetIndex, DATASET_FILE,
    SPEC_FILE,
};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::radii::RadiiFile;

const MANIFEST_FILE: &str = "run_manifest.json";

/// `phantom`: voxelize a spec into a bundle with analytic ground truth.
pub fn cmd_phantom(spec_path: &Path, out_dir: &Path, spacing_mm: f64) -> Result<(), CliError> {
    let started = Instant::now();
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", spec_path.display())))?;
    let spec: PhantomSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", spec_path.display())))?;

    let written = write_phantom_bundle(&spec, spacing_mm, 0.5, out_dir)?;

    let mut manifest = RunManifest::new("phantom");
    manifest.seed("phantom", spec.seed);
    manifest.input(spec_path)?;
    for path in &written {
        manifest.output(path)?;
    }
    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    println!(
        "phantom written to {} ({} files) in {:.2} s",
        out_dir.display(),
        written.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub struct MakeDatasetArgs {
    pub out_dir: PathBuf,
    pub count: usize,
    pub test_count: usize,
    pub seed: u64,
    pub spacing_mm: f64,
    pub noise_sigma_hu: f64,
    pub blur_sigma_mm: f64,
    pub stenosis_prob: f64,
    pub calc_prob: f64,
}

/// `make-dataset`: synthesize a randomized train/test phantom corpus.
pub fn cmd_make_dataset(args: &MakeDatasetArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.test_count >= args.count {
        return Err(CliError::Validation(format!(
            "test_count {} must be smaller than count {}",
            args.test_count, args.count
        )));
    }
    let opts = DatasetOptions {
        count: args.count,
        test_count: args.test_count,
        seed: args.seed,
        spacing_mm: args.spacing_mm,
        noise_sigma_hu: args.noise_sigma_hu,
        blur_sigma_mm: args.blur_sigma_mm,
        stenosis_prob: args.stenosis_prob,
        calc_prob: args.calc_prob,
        ..DatasetOptions::default()
    };
    std::fs::create_dir_all(&args.out_dir)?;

    let mut manifest = RunManifest::new("make-dataset");
    manifest.seed("dataset", args.seed);
    let mut names = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let name = format!("phantom_{i:03}");
        let dir = args.out_dir.join(&name);
        let spec = random_phantom_spec(&opts, i);
        let written = write_phantom_bundle(&spec, opts.spacing_mm, 0.5, &dir)?;
        let spec_path = dir.join(SPEC_FILE);
        std::fs::write(&spec_path, serde_json::to_string_pretty(&spec)?)?;
        for path in written.iter().chain(std::iter::once(&spec_path)) {
            manifest.output(path)?;
        }
        names.push(name);
    }

    let split = names.len() - args.test_count;
    let index = DatasetIndex {
        seed: args.seed,
        train: names[..split].to_vec(),
        test: names[split..].to_vec(),
    };
    let index_path = args.out_dir.join(DATASET_FILE);
    std::fs::write(&index_path, serde_json::to_string_pretty(&index)?)?;
    manifest.output(&index_path)?;
    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&args.out_dir.join(MANIFEST_FILE))?;
    println!(
        "dataset with {} train / {} test phantoms written to {} in {:.2} s",
        index.train.len(),
        index.test.len(),
        args.out_dir.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// `train`: fit a model on the train split of a dataset directory.
pub fn cmd_train(
    dataset_dir: &Path,
    settings: &TrainSettings,
    config_path: Option<&Path>,
    out_model: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let mode: AggregatorMode = settings.mode.parse().map_err(CliError::Validation)?;
    let opts = settings.segment_options();

    let segments = load_train_segments(dataset_dir, &opts)?;
    let load_ms = started.elapsed().as_millis();

    let mut model = GcnModel::<f64>::standard(mode, settings.seed);
    model.set_dropout_p(settings.dropout_p);
    let cfg = settings.train_config();
    let settings_json = serde_json::to_value(settings)?;

    let train_started = Instant::now();
    let history = train_with_checkpoints(&mut model, &segments, &cfg, |iteration, m| {
        save_checkpoint(m, out_model, iteration, Some(settings_json.clone()))
            .map_err(|e| TrainError::Checkpoint(e.to_string()))
    })?;
    let train_ms = train_started.elapsed().as_millis();

    save_checkpoint(&model, out_model, cfg.iterations, Some(settings_json.clone()))?;
    let loss_path = out_model.with_extension("loss.csv");
    std::fs::write(&loss_path, loss_history_csv(&history))?;

    let mut manifest = RunManifest::new("train");
    manifest.seed("train", settings.seed);
    manifest.config_path = config_path.map(|p| p.display().to_string());
    manifest.config = Some(settings_json);
    manifest.output(out_model)?;
    manifest.output(&loss_path)?;
    manifest.timing("load", load_ms);
    manifest.timing("train", train_ms);
    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&out_model.with_extension("manifest.json"))?;

    let final_loss = history.last().map(|s| s.loss).unwrap_or(f64::NAN);
    println!(
        "trained {} segments for {} iterations ({} updates) in {:.1} s; final loss {final_loss:.6}",
        segments.len(),
        cfg.iterations,
        cfg.iterations / cfg.accum_steps,
        train_ms as f64 / 1000.0
    );
    Ok(())
}

/// `segment`: predict radii for a volume + centerline and export the mesh.
pub fn cmd_segment(
    model_path: &Path,
    volume_path: &Path,
    centerline_path: &Path,
    out_mesh: &Path,
    out_radii: Option<&Path>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let (model, header) = load_checkpoint::<f64>(model_path)?;
    let opts = header
        .train
        .as_ref()
        .and_then(|t| serde_json::from_value::<TrainSettings>(t.clone()).ok())
        .map(|s| s.segment_options())
        .unwrap_or_default();

    let volume = crate::dataset_io::read_volume(volume_path)?;
    let raw_cl = tubegcn_core::centerline::Centerline::read_json(centerline_path)?;
    let (framed, graph) = build_featured_graph(&volume, &raw_cl, &opts)?;
    let (radii, mesh) = segment_to_mesh(&model, &graph, &framed)?;

    std::fs::write(out_mesh, export_obj(&mesh))?;
    let radii_path = out_radii
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_mesh.with_extension("radii.json"));
    let rows: Vec<Vec<f64>> = radii
        .chunks(graph.n_angles())
        .map(|row| row.to_vec())
        .collect();
    RadiiFile::per_vertex(graph.n_angles(), rows).write(&radii_path)?;

    let mut manifest = RunManifest::new("segment");
    manifest.seed("model", header.seed);
    manifest.input(model_path)?;
    manifest.input(centerline_path)?;
    manifest.output(out_mesh)?;
    manifest.output(&radii_path)?;
    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&out_mesh.with_extension("manifest.json"))?;

    println!(
        "segmented {} planes x {} angles in {:.2} s ({} triangles)",
        graph.n_planes(),
        graph.n_angles(),
        started.elapsed().as_secs_f64(),
        mesh.triangles.len()
    );
    Ok(())
}

pub struct EvalArgs {
    pub pred_radii: PathBuf,
    pub ref_radii: PathBuf,
    pub centerline: PathBuf,
    pub pred_mesh: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub segment_id: String,
    pub stratum: Option<String>,
    pub n_angles: Option<usize>,
    pub resample_mm: f64,
    pub dump_plane_dice: bool,
}

/// `eval`: compare predicted radii (and optionally an exported mesh)
/// against reference radii on a shared centerline.
pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let pred_file = RadiiFile::read(&args.pred_radii)?;
    let ref_file = RadiiFile::read(&args.ref_radii)?;
    if pred_file.n_planes() != ref_file.n_planes() {
        return Err(CliError::Validation(format!(
            "plane count mismatch: prediction has {} planes, reference has {}",
            pred_file.n_planes(),
            ref_file.n_planes()
        )));
    }
    let n_angles = args
        .n_angles
        .or(pred_file.n_angles)
        .or(ref_file.n_angles)
        .unwrap_or(24);

    let framed = frame_centerline(&args.centerline, args.resample_mm)?;
    if framed.len() != pred_file.n_planes() {
        return Err(CliError::Validation(format!(
            "plane count mismatch: radii files have {} planes, centerline resamples to {}",
            pred_file.n_planes(),
            framed.len()
        )));
    }
    let graph = build_graph(&framed, n_angles)?;
    let pred = pred_file.expand(n_angles)?;
    let reference = ref_file.expand(n_angles)?;

    let mut metrics = evaluate_segment(&pred, &reference, &graph, &framed)?;
    if let Some(mesh_path) = &args.pred_mesh {
        // Use the exported surface instead of the re-realized one.
        let text = std::fs::read_to_string(mesh_path)?;
        let pred_mesh: Mesh<f64> = parse_obj(&text)?;
        let ref_mesh = Mesh {
            positions: realize_with_radii(&graph, &framed, &reference)?,
            triangles: graph.triangles().to_vec(),
        };
        let sd = surface_distances(&pred_mesh, &ref_mesh)?;
        metrics.msd_mm = sd.msd_mm;
        metrics.hd_mm = sd.hd_mm;
    }

    let report = MetricsReport::from_rows(vec![SegmentRow {
        id: args.segment_id.clone(),
        stratum: args.stratum.clone(),
        dsc: metrics.dsc,
        msd_mm: metrics.msd_mm,
        hd_mm: metrics.hd_mm,
        roughness_mm: metrics.roughness_mm,
    }]);

    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("metrics.csv");
    let json_path = args.out_dir.join("metrics.json");
    std::fs::write(&csv_path, report.to_csv())?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;

    let mut manifest = RunManifest::new("eval");
    manifest.input(&args.pred_radii)?;
    manifest.input(&args.ref_radii)?;
    manifest.input(&args.centerline)?;
    manifest.output(&csv_path)?;
    manifest.output(&json_path)?;

    if args.dump_plane_dice {
        let mut csv = String::from("plane,dsc\n");
        for i in 0..graph.n_planes() {
            let lo = i * n_angles;
            let d = cross_section_dice(&pred[lo..lo + n_angles], &reference[lo..lo + n_angles])?;
            csv.push_str(&format!("{i},{d}\n"));
        }
        let plane_path = args.out_dir.join("plane_dice.csv");
        std::fs::write(&plane_path, csv)?;
        manifest.output(&plane_path)?;
    }

    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&args.out_dir.join(MANIFEST_FILE))?;
    println!(
        "dsc {:.4}  msd {:.4} mm  hd {:.4} mm  roughness {:.5} mm",
        metrics.dsc, metrics.msd_mm, metrics.hd_mm, metrics.roughness_mm
    );
    Ok(())
}

/// `export-mesh`: build a tube OBJ from a centerline and a radii file.
pub fn cmd_export_mesh(
    centerline_path: &Path,
    radii_path: &Path,
    n_angles: Option<usize>,
    resample_mm: f64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let radii_file = RadiiFile::read(radii_path)?;
    let n_angles = n_angles.or(radii_file.n_angles).unwrap_or(24);
    let framed = frame_centerline(centerline_path, resample_mm)?;
    if framed.len() != radii_file.n_planes() {
        return Err(CliError::Validation(format!(
            "plane count mismatch: radii file has {} planes, centerline resamples to {}",
            radii_file.n_planes(),
            framed.len()
        )));
    }
    let graph = build_graph(&framed, n_angles)?;
    let radii = radii_file.expand(n_angles)?;
    let positions = realize_with_radii(&graph, &framed, &radii)?;
    let mesh = mesh_from_positions(&graph, positions);
    std::fs::write(out, export_obj(&mesh))?;

    let mut manifest = RunManifest::new("export-mesh");
    manifest.input(centerline_path)?;
    manifest.input(radii_path)?;
    manifest.output(out)?;
    manifest.timing("total", started.elapsed().as_millis());
    manifest.write(&out.with_extension("manifest.json"))?;
    println!(
        "mesh with {} vertices / {} triangles written to {} in {:.2} s",
        mesh.positions.len(),
        mesh.triangles.len(),
        out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
