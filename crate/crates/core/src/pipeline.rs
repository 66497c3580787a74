//! End-to-end wiring: centerline to featured tube graph to predicted mesh.

use std::fmt;

use crate::centerline::{Centerline, CenterlineError};
use crate::network::{GcnModel, NetworkError};
use crate::scalar::Real;
use crate::tubemesh::{
    build_graph, extract_features, mesh_from_positions, realize_with_radii, Mesh, MeshError,
    TubeGraph,
};
use crate::volume::Volume;

/// Resampling / graph / ray parameters for segment construction.
#[derive(Debug, Clone, Copy)]
pub struct SegmentOptions {
    /// Centerline resampling step, mm.
    pub resample_mm: f64,
    /// Vertices per cross-section ring.
    pub n_angles: usize,
    /// Ray samples per vertex.
    pub n_samples: usize,
    /// Radial distance between ray samples, mm.
    pub step_mm: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            resample_mm: 0.5,
            n_angles: 24,
            n_samples: 32,
            step_mm: 0.1,
        }
    }
}

/// Errors from pipeline assembly.
#[derive(Debug)]
pub enum PipelineError {
    Centerline(CenterlineError),
    Mesh(MeshError),
    Network(NetworkError),
    /// Centerline leaves the volume's voxel-center bounds.
    CenterlineOutsideVolume { index: usize },
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Centerline(e) => write!(f, "{e}"),
            PipelineError::Mesh(e) => write!(f, "{e}"),
            PipelineError::Network(e) => write!(f, "{e}"),
            PipelineError::CenterlineOutsideVolume { index } => {
                write!(f, "centerline point {index} lies outside the volume bounds")
            }
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<CenterlineError> for PipelineError {
    fn from(e: CenterlineError) -> Self {
        PipelineError::Centerline(e)
    }
}

impl From<MeshError> for PipelineError {
    fn from(e: MeshError) -> Self {
        PipelineError::Mesh(e)
    }
}

impl From<NetworkError> for PipelineError {
    fn from(e: NetworkError) -> Self {
        PipelineError::Network(e)
    }
}

/// Resamples and frames a raw centerline, builds the tube graph, and
/// extracts ray features from the volume.
///
/// Returns the framed centerline alongside the featured graph; plane `i`
/// of the graph corresponds to resampled point `i`.
pub fn build_featured_graph<T: Real>(
    vol: &Volume<T>,
    raw_centerline: &Centerline<T>,
    opts: &SegmentOptions,
) -> Result<(Centerline<T>, TubeGraph<T>), PipelineError> {
    if let Some(index) = raw_centerline
        .points()
        .iter()
        .position(|p| !vol.contains(*p))
    {
        return Err(PipelineError::CenterlineOutsideVolume { index });
    }
    let framed = raw_centerline
        .resample(T::of(opts.resample_mm))?
        .with_frames()?;
    let mut graph = build_graph(&framed, opts.n_angles)?;
    extract_features(&mut graph, &framed, vol, opts.n_samples, T::of(opts.step_mm))?;
    Ok((framed, graph))
}

/// Cumulative arclength of each centerline point (plane), in mm.
pub fn plane_arclengths<T: Real>(cl: &Centerline<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(cl.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in cl.points().windows(2) {
        acc += (w[1] - w[0]).norm();
        out.push(acc);
    }
    out
}

/// Expands one radius per plane into one radius per vertex.
pub fn expand_per_plane<T: Real>(per_plane: &[T], n_angles: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(per_plane.len() * n_angles);
    for &r in per_plane {
        out.extend(std::iter::repeat_n(r, n_angles));
    }
    out
}

/// Runs eval-mode inference and realizes the predicted surface.
pub fn segment_to_mesh<T: Real>(
    model: &GcnModel<T>,
    graph: &TubeGraph<T>,
    centerline: &Centerline<T>,
) -> Result<(Vec<T>, Mesh<T>), PipelineError> {
    let radii = model.predict_radii(graph)?;
    let positions = realize_with_radii(graph, centerline, &radii)?;
    Ok((radii, mesh_from_positions(graph, positions)))
}
