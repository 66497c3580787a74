//! On-disk phantom bundles and dataset directories.
//!
//! A phantom bundle holds `volume.raw` + `volume.json`, `centerline.json`,
//! and `ground_truth.json` (per-plane radii at the resampled planes). A
//! dataset directory holds one bundle per phantom plus `dataset.json`
//! listing the train/test split.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tubegcn_core::centerline::Centerline;
use tubegcn_core::pipeline::{build_featured_graph, plane_arclengths, SegmentOptions};
use tubegcn_core::trainer::Segment;
use tubegcn_core::volume::{
    generate_phantom_auto, read_metaimage, read_raw_with_sidecar, write_raw_with_sidecar,
    PhantomSpec, PhantomTruth, Volume,
};

use crate::error::CliError;
use crate::radii::RadiiFile;

pub const VOLUME_STEM: &str = "volume";
pub const CENTERLINE_FILE: &str = "centerline.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const SPEC_FILE: &str = "spec.json";
pub const DATASET_FILE: &str = "dataset.json";

/// Train/test split listing for a dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Voxelizes a phantom spec and writes the bundle into `dir`.
///
/// Returns the paths written: volume blob, volume sidecar, centerline,
/// ground truth.
pub fn write_phantom_bundle(
    spec: &PhantomSpec,
    spacing_mm: f64,
    resample_mm: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let (volume, truth): (Volume<f64>, PhantomTruth) = generate_phantom_auto(spec, spacing_mm)?;

    let (raw_path, sidecar_path) = write_raw_with_sidecar(&volume, &dir.join(VOLUME_STEM))?;

    let centerline = Centerline::new(truth.centerline_points().to_vec())?;
    let cl_path = dir.join(CENTERLINE_FILE);
    centerline.write_json(&cl_path)?;

    // Ground truth at the planes the pipeline will actually build: the
    // radius at each resampled point's cumulative arclength.
    let resampled = centerline.resample(resample_mm)?;
    let radii: Vec<f64> = plane_arclengths(&resampled)
        .iter()
        .map(|&s| truth.radius_at(s))
        .collect();
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    RadiiFile::per_plane(resample_mm, radii).write(&gt_path)?;

    Ok(vec![raw_path, sidecar_path, cl_path, gt_path])
}

/// Reads a volume from a sidecar stem/path or a metaimage header.
pub fn read_volume(path: &Path) -> Result<Volume<f64>, CliError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mhd")) {
        Ok(read_metaimage(path)?)
    } else {
        Ok(read_raw_with_sidecar(path)?)
    }
}

/// Loads the training bundles of a dataset directory (the train split when
/// `dataset.json` is present, otherwise every bundle found, otherwise the
/// directory itself as a single bundle).
pub fn load_train_segments(
    dir: &Path,
    opts: &SegmentOptions,
) -> Result<Vec<Segment<f64>>, CliError> {
    let names = train_bundle_names(dir)?;
    if names.is_empty() {
        return Err(CliError::Validation(format!(
            "no phantom bundles found in {}",
            dir.display()
        )));
    }
    names
        .iter()
        .map(|name| {
            let bundle = if name.is_empty() { dir.to_path_buf() } else { dir.join(name) };
            load_bundle_segment(&bundle, name, opts)
        })
        .collect()
}

fn train_bundle_names(dir: &Path) -> Result<Vec<String>, CliError> {
    let index_path = dir.join(DATASET_FILE);
    if index_path.exists() {
        let index: DatasetIndex = serde_json::from_str(&std::fs::read_to_string(&index_path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", index_path.display())))?;
        return Ok(index.train);
    }
    // No index: the directory itself may be a bundle, or hold bundles.
    if dir.join(format!("{VOLUME_STEM}.json")).exists() {
        return Ok(vec![String::new()]);
    }
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.path().join(format!("{VOLUME_STEM}.json")).exists() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

fn load_bundle_segment(
    bundle: &Path,
    name: &str,
    opts: &SegmentOptions,
) -> Result<Segment<f64>, CliError> {
    let volume = read_volume(&bundle.join(VOLUME_STEM))?;
    let raw_cl = Centerline::read_json(&bundle.join(CENTERLINE_FILE))?;
    let gt_path = bundle.join(GROUND_TRUTH_FILE);
    if !gt_path.exists() {
        return Err(CliError::Validation(format!(
            "bundle `{}` is missing reference radii ({})",
            name,
            gt_path.display()
        )));
    }
    let gt = RadiiFile::read(&gt_path)?;

    let (framed, graph) = build_featured_graph(&volume, &raw_cl, opts)?;
    if gt.n_planes() != graph.n_planes() {
        return Err(CliError::Validation(format!(
            "bundle `{}`: ground truth has {} planes, centerline resamples to {}",
            name,
            gt.n_planes(),
            graph.n_planes()
        )));
    }
    let reference: Vec<f64> = gt.expand(graph.n_angles())?;

    let stratum = read_stratum(bundle);
    Ok(Segment {
        id: if name.is_empty() { "segment".to_string() } else { name.to_string() },
        centerline: framed,
        graph,
        reference,
        stratum,
    })
}

/// Stratum label from the bundle's spec, when present: phantoms with a
/// narrowing count as diseased.
fn read_stratum(bundle: &Path) -> Option<String> {
    let text = std::fs::read_to_string(bundle.join(SPEC_FILE)).ok()?;
    let spec: PhantomSpec = serde_json::from_str(&text).ok()?;
    Some(if spec.radius_profile.stenoses.is_empty() {
        "healthy".to_string()
    } else {
        "diseased".to_string()
    })
}

/// Resamples + frames a centerline file (for eval / export, no volume).
pub fn frame_centerline(path: &Path, resample_mm: f64) -> Result<Centerline<f64>, CliError> {
    let raw = Centerline::read_json(path)?;
    Ok(raw.resample(resample_mm)?.with_frames()?)
}
