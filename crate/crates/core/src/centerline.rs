//! Centerline polylines and cross-sectional frames.
//!
//! A centerline is an ordered polyline in world millimetres. Before meshing
//! it is resampled to uniform arclength steps and equipped with per-point
//! orthonormal frames (tangent, normal, binormal). Frames are propagated by
//! rotation-minimizing transport: each frame is rotated by the minimal
//! rotation mapping the previous tangent onto the next, which stays defined
//! on straight segments and never flips at inflections.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vec3::{vec3, Vec3};

/// Errors from centerline construction, resampling, and framing.
#[derive(Debug)]
pub enum CenterlineError {
    /// Fewer than two points, or consecutive duplicates.
    Degenerate(String),
    /// Resampling step must be positive and no longer than the polyline.
    BadStep { step: f64, length: f64 },
    /// Consecutive tangents are anti-parallel: a non-physical kink.
    Kink { index: usize },
    /// Operation requires frames that have not been built.
    MissingFrames,
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for CenterlineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CenterlineError::Degenerate(msg) => write!(f, "degenerate centerline: {msg}"),
            CenterlineError::BadStep { step, length } => write!(
                f,
                "resample step {step} mm invalid for polyline of length {length} mm"
            ),
            CenterlineError::Kink { index } => write!(
                f,
                "anti-parallel tangents at point {index}: centerline has a non-physical kink"
            ),
            CenterlineError::MissingFrames => write!(f, "centerline frames not built"),
            CenterlineError::Io(e) => write!(f, "centerline i/o error: {e}"),
            CenterlineError::Format(msg) => write!(f, "centerline format error: {msg}"),
        }
    }
}

impl std::error::Error for CenterlineError {}

impl From<std::io::Error> for CenterlineError {
    fn from(e: std::io::Error) -> Self {
        CenterlineError::Io(e)
    }
}

/// Orthonormal cross-sectional frame at a centerline point.
#[derive(Debug, Clone, Copy)]
pub struct Frame<T> {
    pub tangent: Vec3<T>,
    pub normal: Vec3<T>,
    pub binormal: Vec3<T>,
}

/// Ordered polyline with optional per-point frames.
#[derive(Debug, Clone)]
pub struct Centerline<T: Real> {
    points: Vec<Vec3<T>>,
    frames: Option<Vec<Frame<T>>>,
}

/// On-disk schema: `{"points": [[x,y,z], ...]}` in mm world coordinates.
#[derive(Serialize, Deserialize)]
struct CenterlineFile {
    points: Vec<[f64; 3]>,
}

impl<T: Real> Centerline<T> {
    /// Builds a centerline, requiring >= 2 points with distinct neighbors.
    pub fn new(points: Vec<Vec3<T>>) -> Result<Self, CenterlineError> {
        if points.len() < 2 {
            return Err(CenterlineError::Degenerate(format!(
                "need >= 2 points, got {}",
                points.len()
            )));
        }
        for (i, w) in points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() <= T::zero() {
                return Err(CenterlineError::Degenerate(format!(
                    "points {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(Self {
            points,
            frames: None,
        })
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frames(&self) -> Option<&[Frame<T>]> {
        self.frames.as_deref()
    }

    /// Total polyline arclength in mm.
    pub fn arclength(&self) -> T {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(T::zero(), |a, b| a + b)
    }

    /// Resamples to uniform `step` spacing by marching along the linear
    /// interpolation of the polyline: each point is the first position on
    /// the polyline at euclidean distance `step` from the previous one. The
    /// endpoint is always included (the last interval may be shorter).
    ///
    /// On straight or finely sampled inputs this coincides with placing
    /// points at arclengths 0, step, 2*step, ...; unlike pure arclength
    /// placement it keeps consecutive spacing exactly `step` across corners,
    /// which also makes resampling idempotent.
    ///
    /// Frames are not carried over; rebuild them on the result.
    pub fn resample(&self, step: T) -> Result<Self, CenterlineError> {
        let length = self.arclength();
        if step <= T::zero() || length < step {
            return Err(CenterlineError::BadStep {
                step: step.widen(),
                length: length.widen(),
            });
        }

        let tol = T::of(1e-9);
        let step_sq = step * step;
        let mut out = vec![self.points[0]];
        let mut seg = 0usize; // current polyline segment
        let mut t = T::zero(); // param of the current position within it
        'march: loop {
            let center = *out.last().unwrap();
            // Find the first exit of the sphere |p - center| = step along
            // the remaining polyline.
            loop {
                if seg + 1 >= self.points.len() {
                    break 'march; // tail shorter than step
                }
                let a = self.points[seg];
                let d = self.points[seg + 1] - a;
                let end_dist_sq = (a + d - center).norm_squared();
                if end_dist_sq < step_sq {
                    seg += 1;
                    t = T::zero();
                    continue;
                }
                // Solve |a + t d - center|^2 = step^2 for the exit root.
                let rel = a - center;
                let qa = d.norm_squared();
                let qb = T::of(2.0) * rel.dot(d);
                let qc = rel.norm_squared() - step_sq;
                let disc = (qb * qb - T::of(4.0) * qa * qc).max(T::zero());
                let root = (-qb + disc.sqrt()) / (T::of(2.0) * qa);
                t = root.max(t).min(T::one());
                out.push(a + d * t);
                continue 'march;
            }
        }

        // Endpoint inclusion: replace a coincident last sample, else append.
        let endpoint = *self.points.last().unwrap();
        if (endpoint - *out.last().unwrap()).norm() <= tol {
            *out.last_mut().unwrap() = endpoint;
        } else {
            out.push(endpoint);
        }
        Centerline::new(out)
    }

    /// Builds rotation-minimizing frames.
    ///
    /// Tangents come from central differences (one-sided at the ends). The
    /// first normal is the global axis least aligned with the first tangent,
    /// projected into its orthogonal plane; later frames are transported by
    /// the minimal rotation between consecutive tangents and re-orthogonalized.
    pub fn with_frames(mut self) -> Result<Self, CenterlineError> {
        let n = self.points.len();
        let mut tangents = Vec::with_capacity(n);
        for i in 0..n {
            let raw = if i == 0 {
                self.points[1] - self.points[0]
            } else if i == n - 1 {
                self.points[n - 1] - self.points[n - 2]
            } else {
                self.points[i + 1] - self.points[i - 1]
            };
            let t = raw
                .try_normalized(T::of(1e-12))
                .ok_or(CenterlineError::Kink { index: i })?;
            tangents.push(t);
        }
        for i in 1..n {
            if tangents[i - 1].dot(tangents[i]) <= T::of(-1.0 + 1e-6) {
                return Err(CenterlineError::Kink { index: i });
            }
        }

        let mut frames = Vec::with_capacity(n);
        let n0 = initial_normal(tangents[0]);
        frames.push(Frame {
            tangent: tangents[0],
            normal: n0,
            binormal: tangents[0].cross(n0),
        });
        for i in 1..n {
            let prev: Frame<T> = frames[i - 1];
            let rotated = rotate_min(prev.normal, prev.tangent, tangents[i]);
            // Re-orthogonalize against accumulated floating error.
            let normal = (rotated - tangents[i] * tangents[i].dot(rotated))
                .try_normalized(T::of(1e-12))
                .ok_or(CenterlineError::Kink { index: i })?;
            frames.push(Frame {
                tangent: tangents[i],
                normal,
                binormal: tangents[i].cross(normal),
            });
        }
        self.frames = Some(frames);
        Ok(self)
    }

    /// Reads `{"points": [[x,y,z],...]}`; tolerates arbitrary spacing.
    pub fn read_json(path: &Path) -> Result<Self, CenterlineError> {
        let text = std::fs::read_to_string(path)?;
        let file: CenterlineFile = serde_json::from_str(&text)
            .map_err(|e| CenterlineError::Format(format!("{e}")))?;
        Centerline::new(file.points.into_iter().map(Vec3::from_f64_array).collect())
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CenterlineError> {
        let file = CenterlineFile {
            points: self.points.iter().map(|p| p.to_f64_array()).collect(),
        };
        let text = serde_json::to_string(&file)
            .map_err(|e| CenterlineError::Format(format!("{e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// The global axis least aligned with `t`, projected orthogonal to `t`.
fn initial_normal<T: Real>(t: Vec3<T>) -> Vec3<T> {
    let axes = [
        vec3(T::one(), T::zero(), T::zero()),
        vec3(T::zero(), T::one(), T::zero()),
        vec3(T::zero(), T::zero(), T::one()),
    ];
    let mut best = axes[0];
    let mut best_dot = T::infinity();
    for a in axes {
        let d = t.dot(a).abs();
        if d < best_dot {
            best_dot = d;
            best = a;
        }
    }
    (best - t * t.dot(best))
        .try_normalized(T::of(1e-12))
        .expect("projection of least-aligned axis is nonzero")
}

/// Rotates `v` by the minimal rotation carrying `from` onto `to`
/// (both unit tangents), via Rodrigues' formula.
fn rotate_min<T: Real>(v: Vec3<T>, from: Vec3<T>, to: Vec3<T>) -> Vec3<T> {
    let axis_raw = from.cross(to);
    let sin = axis_raw.norm();
    let cos = from.dot(to).max(-T::one()).min(T::one());
    if sin <= T::of(1e-14) {
        return v;
    }
    let k = axis_raw / sin;
    v * cos + k.cross(v) * sin + k * (k.dot(v) * (T::one() - cos))
}
