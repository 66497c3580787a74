//! Tubular surface segmentation by per-vertex radius regression.
//!
//! Given a volumetric image and a vessel centerline, this crate builds a
//! fixed-topology tube mesh around the centerline, casts one intensity ray
//! per mesh vertex, and regresses each vertex's radial distance from the
//! centerline with a small graph convolutional network trained from scratch.
//! Synthetic phantoms with analytic ground truth stand in for clinical data,
//! and surface-distance metrics compare predicted meshes against references.
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below are the default precision used
//! by the command-line pipeline.

pub mod centerline;
pub mod dataset;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod scalar;
pub mod seeds;
pub mod trainer;
pub mod tubemesh;
pub mod vec3;
pub mod volume;

pub use scalar::Real;
pub use vec3::{vec3, Vec3};

/// Default-precision aliases for the main domain types.
pub type Volume64 = volume::Volume<f64>;
pub type Centerline64 = centerline::Centerline<f64>;
pub type TubeGraph64 = tubemesh::TubeGraph<f64>;
pub type Mesh64 = tubemesh::Mesh<f64>;
pub type GcnModel64 = network::GcnModel<f64>;
pub type Segment64 = trainer::Segment<f64>;

/// Single-precision aliases.
pub type Volume32 = volume::Volume<f32>;
pub type Centerline32 = centerline::Centerline<f32>;
pub type TubeGraph32 = tubemesh::TubeGraph<f32>;
pub type Mesh32 = tubemesh::Mesh<f32>;
pub type GcnModel32 = network::GcnModel<f32>;
