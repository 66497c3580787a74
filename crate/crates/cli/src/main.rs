//! `tubegcn`: segment tubular structures in volumetric images by regressing
//! per-vertex tube-mesh radii with a graph convolutional network.

mod commands;
mod config;
mod dataset_io;
mod error;
mod manifest;
mod radii;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvalArgs, MakeDatasetArgs};
use config::TrainSettings;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "tubegcn",
    version,
    about = "Tubular surface segmentation via graph-convolutional radius regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a phantom spec into a volume with analytic ground truth
    Phantom {
        /// Phantom spec JSON
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for the bundle
        #[arg(long)]
        out_dir: PathBuf,
        /// Isotropic voxel spacing in mm
        #[arg(long, default_value_t = 0.35)]
        spacing_mm: f64,
    },
    /// Synthesize a randomized train/test phantom dataset
    MakeDataset {
        #[arg(long)]
        out_dir: PathBuf,
        /// Total number of phantoms
        #[arg(long, default_value_t = 16)]
        count: usize,
        /// How many of them form the held-out test split
        #[arg(long, default_value_t = 4)]
        test_count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.35)]
        spacing_mm: f64,
        #[arg(long, default_value_t = 20.0)]
        noise_sigma_hu: f64,
        #[arg(long, default_value_t = 0.3)]
        blur_sigma_mm: f64,
        /// Probability that a phantom carries a focal narrowing
        #[arg(long, default_value_t = 0.5)]
        stenosis_prob: f64,
        /// Probability that a phantom carries calcifications
        #[arg(long, default_value_t = 0.7)]
        calc_prob: f64,
    },
    /// Train a radius-regression network on a dataset directory
    Train {
        /// Dataset directory (train split of dataset.json, or bundles)
        #[arg(long)]
        dataset: PathBuf,
        /// Optional settings JSON (defaults reproduce the full protocol)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override single settings, e.g. --set iterations=500
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Aggregator mode: gcn or mlp
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output checkpoint path
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict radii for a volume + centerline and export the surface mesh
    Segment {
        /// Model checkpoint
        #[arg(long)]
        model: PathBuf,
        /// Volume sidecar (.json / stem) or metaimage header (.mhd)
        #[arg(long)]
        volume: PathBuf,
        /// Centerline JSON
        #[arg(long)]
        centerline: PathBuf,
        /// Output Wavefront OBJ path
        #[arg(long)]
        out_mesh: PathBuf,
        /// Output radii JSON (defaults next to the mesh)
        #[arg(long)]
        out_radii: Option<PathBuf>,
    },
    /// Evaluate predicted radii (and optionally a mesh) against a reference
    Eval {
        #[arg(long)]
        pred_radii: PathBuf,
        #[arg(long)]
        ref_radii: PathBuf,
        #[arg(long)]
        centerline: PathBuf,
        /// Use this exported OBJ for surface distances instead of
        /// re-realizing the predicted surface
        #[arg(long)]
        pred_mesh: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "segment")]
        segment_id: String,
        /// Optional stratum label (e.g. healthy / diseased)
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long)]
        n_angles: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        resample_mm: f64,
        /// Also write per-plane Dice values for plotting
        #[arg(long)]
        dump_plane_dice: bool,
    },
    /// Build a tube mesh OBJ from a centerline and a radii file
    ExportMesh {
        #[arg(long)]
        centerline: PathBuf,
        #[arg(long)]
        radii: PathBuf,
        #[arg(long)]
        n_angles: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        resample_mm: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phantom {
            spec,
            out_dir,
            spacing_mm,
        } => commands::cmd_phantom(&spec, &out_dir, spacing_mm),
        Command::MakeDataset {
            out_dir,
            count,
            test_count,
            seed,
            spacing_mm,
            noise_sigma_hu,
            blur_sigma_mm,
            stenosis_prob,
            calc_prob,
        } => commands::cmd_make_dataset(&MakeDatasetArgs {
            out_dir,
            count,
            test_count,
            seed,
            spacing_mm,
            noise_sigma_hu,
            blur_sigma_mm,
            stenosis_prob,
            calc_prob,
        }),
        Command::Train {
            dataset,
            config,
            set,
            mode,
            iterations,
            seed,
            out,
        } => {
            let config_text = match &config {
                Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("{}: {e}", path.display()))
                })?),
                None => None,
            };
            let mut settings = TrainSettings::resolve(config_text.as_deref(), &set)?;
            if let Some(mode) = mode {
                settings.mode = mode;
            }
            if let Some(iterations) = iterations {
                settings.iterations = iterations;
            }
            if let Some(seed) = seed {
                settings.seed = seed;
            }
            commands::cmd_train(&dataset, &settings, config.as_deref(), &out)
        }
        Command::Segment {
            model,
            volume,
            centerline,
            out_mesh,
            out_radii,
        } => commands::cmd_segment(&model, &volume, &centerline, &out_mesh, out_radii.as_deref()),
        Command::Eval {
            pred_radii,
            ref_radii,
            centerline,
            pred_mesh,
            out_dir,
            segment_id,
            stratum,
            n_angles,
            resample_mm,
            dump_plane_dice,
        } => commands::cmd_eval(&EvalArgs {
            pred_radii,
            ref_radii,
            centerline,
            pred_mesh,
            out_dir,
            segment_id,
            stratum,
            n_angles,
            resample_mm,
            dump_plane_dice,
        }),
        Command::ExportMesh {
            centerline,
            radii,
            n_angles,
            resample_mm,
            out,
        } => commands::cmd_export_mesh(&centerline, &radii, n_angles, resample_mm, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
