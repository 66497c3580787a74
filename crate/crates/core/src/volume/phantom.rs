//! Synthetic vessel phantoms with analytic ground truth.
//!
//! Phantoms stand in for clinical angiography data: a bright tubular lumen
//! along a parametric curve inside a darker background, optionally with
//! hyperdense calcification spheres next to the wall, partial-volume blur,
//! and additive Gaussian noise. The generating radius profile doubles as the
//! exact reference segmentation.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vec3::{vec3, Vec3};
use crate::volume::{Volume, VolumeError};

/// Radial extent of the ray-cast field of view, in mm.
pub const RAY_FIELD_OF_VIEW_MM: f64 = 3.2;

/// Errors from phantom validation and generation.
#[derive(Debug)]
pub enum PhantomError {
    /// A spec field violates its invariant; names the field.
    InvalidSpec { field: &'static str, message: String },
    /// The requested grid cannot contain curve + max radius + FOV margin.
    VolumeTooSmall { message: String },
    Volume(VolumeError),
}

impl fmt::Display for PhantomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhantomError::InvalidSpec { field, message } => {
                write!(f, "invalid phantom spec field `{field}`: {message}")
            }
            PhantomError::VolumeTooSmall { message } => {
                write!(f, "volume cannot contain phantom: {message}")
            }
            PhantomError::Volume(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PhantomError {}

impl From<VolumeError> for PhantomError {
    fn from(e: VolumeError) -> Self {
        PhantomError::Volume(e)
    }
}

/// Parametric centerline curve for a phantom vessel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    /// Line segment from `start` to `end`.
    Straight { start: [f64; 3], end: [f64; 3] },
    /// Circular helix around an axis line.
    Helix {
        axis_origin: [f64; 3],
        axis_dir: [f64; 3],
        radius_mm: f64,
        pitch_mm: f64,
        turns: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Catmull-Rom spline through the given control points.
    Spline { control_points: Vec<[f64; 3]> },
}

impl CurveSpec {
    /// Samples the curve as a dense polyline with roughly `step` spacing.
    pub fn sample(&self, step_mm: f64) -> Vec<Vec3<f64>> {
        match self {
            CurveSpec::Straight { start, end } => {
                let a: Vec3<f64> = Vec3::from_f64_array(*start);
                let b: Vec3<f64> = Vec3::from_f64_array(*end);
                let len = (b - a).norm();
                let n = ((len / step_mm).ceil() as usize).max(1);
                (0..=n)
                    .map(|i| a + (b - a) * (i as f64 / n as f64))
                    .collect()
            }
            CurveSpec::Helix {
                axis_origin,
                axis_dir,
                radius_mm,
                pitch_mm,
                turns,
                phase_rad,
            } => {
                let origin = Vec3::from_f64_array(*axis_origin);
                let axis = Vec3::from_f64_array(*axis_dir)
                    .try_normalized(1e-12)
                    .unwrap_or(vec3(0.0, 0.0, 1.0));
                let (u, v) = orthonormal_complement(axis);
                let total_angle = 2.0 * std::f64::consts::PI * turns;
                // Arc length per radian for uniform-ish sampling.
                let c = pitch_mm / (2.0 * std::f64::consts::PI);
                let per_rad = (radius_mm * radius_mm + c * c).sqrt();
                let n = ((total_angle * per_rad / step_mm).ceil() as usize).max(1);
                (0..=n)
                    .map(|i| {
                        let t = phase_rad + total_angle * i as f64 / n as f64;
                        origin
                            + axis * (c * (t - phase_rad))
                            + u * (radius_mm * t.cos())
                            + v * (radius_mm * t.sin())
                    })
                    .collect()
            }
            CurveSpec::Spline { control_points } => sample_catmull_rom(control_points, step_mm),
        }
    }
}

/// Deterministic pair of unit vectors orthogonal to `axis`.
fn orthonormal_complement(axis: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let candidates = [
        vec3(1.0, 0.0, 0.0),
        vec3(0.0, 1.0, 0.0),
        vec3(0.0, 0.0, 1.0),
    ];
    let mut best = candidates[0];
    let mut best_dot = f64::INFINITY;
    for c in candidates {
        let d = axis.dot(c).abs();
        if d < best_dot {
            best_dot = d;
            best = c;
        }
    }
    let u = (best - axis * axis.dot(best)).try_normalized(1e-12).unwrap();
    let v = axis.cross(u);
    (u, v)
}

/// Uniform Catmull-Rom through all control points, ends clamped.
fn sample_catmull_rom(points: &[[f64; 3]], step_mm: f64) -> Vec<Vec3<f64>> {
    let pts: Vec<Vec3<f64>> = points.iter().map(|p| Vec3::from_f64_array(*p)).collect();
    if pts.len() < 2 {
        return pts;
    }
    let eval = |p0: Vec3<f64>, p1: Vec3<f64>, p2: Vec3<f64>, p3: Vec3<f64>, t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (p1 * 2.0 + (p2 - p0) * t + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
            + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3)
            * 0.5
    };
    let mut out = Vec::new();
    for s in 0..pts.len() - 1 {
        let p0 = pts[s.saturating_sub(1)];
        let p1 = pts[s];
        let p2 = pts[s + 1];
        let p3 = pts[(s + 2).min(pts.len() - 1)];
        let seg_len = (p2 - p1).norm();
        let n = ((seg_len / step_mm).ceil() as usize).max(1);
        let last = if s == pts.len() - 2 { n } else { n - 1 };
        for i in 0..=last {
            out.push(eval(p0, p1, p2, p3, i as f64 / n as f64));
        }
    }
    out
}

/// Piecewise base radius as a function of arclength.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseProfile {
    Constant { radius_mm: f64 },
    /// Linear interpolation through (arclength, radius) knots; clamped ends.
    Piecewise { knots: Vec<(f64, f64)> },
}

/// Gaussian-shaped local narrowing multiplying the base profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stenosis {
    pub center_mm: f64,
    pub width_mm: f64,
    /// Fractional reduction at the center: radius scales by `1 - severity`.
    pub severity: f64,
}

/// Lumen radius as a function of arclength: base profile times narrowings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusProfile {
    pub base: BaseProfile,
    #[serde(default)]
    pub stenoses: Vec<Stenosis>,
}

impl RadiusProfile {
    pub fn constant(radius_mm: f64) -> Self {
        Self {
            base: BaseProfile::Constant { radius_mm },
            stenoses: Vec::new(),
        }
    }

    /// Lumen radius at arclength `s` (mm).
    pub fn radius_at(&self, s: f64) -> f64 {
        let base = match &self.base {
            BaseProfile::Constant { radius_mm } => *radius_mm,
            BaseProfile::Piecewise { knots } => {
                if knots.is_empty() {
                    return 0.0;
                }
                if s <= knots[0].0 {
                    knots[0].1
                } else if s >= knots[knots.len() - 1].0 {
                    knots[knots.len() - 1].1
                } else {
                    let mut r = knots[knots.len() - 1].1;
                    for w in knots.windows(2) {
                        if s >= w[0].0 && s <= w[1].0 {
                            let t = (s - w[0].0) / (w[1].0 - w[0].0);
                            r = w[0].1 * (1.0 - t) + w[1].1 * t;
                            break;
                        }
                    }
                    r
                }
            }
        };
        let mut r = base;
        for st in &self.stenoses {
            let d = (s - st.center_mm) / st.width_mm;
            r *= 1.0 - st.severity * (-0.5 * d * d).exp();
        }
        r
    }

    /// (min, max) radius over `[0, length]`, scanned densely.
    pub fn extrema(&self, length_mm: f64) -> (f64, f64) {
        let n = ((length_mm / 0.005).ceil() as usize).max(1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=n {
            let r = self.radius_at(length_mm * i as f64 / n as f64);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

/// Hyperdense sphere adjacent to the lumen wall.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calcification {
    pub center: [f64; 3],
    pub radius_mm: f64,
    pub hu: f64,
}

/// Full description of a synthetic vessel phantom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub curve: CurveSpec,
    pub radius_profile: RadiusProfile,
    #[serde(default = "default_lumen_hu")]
    pub lumen_hu: f64,
    #[serde(default = "default_background_hu")]
    pub background_hu: f64,
    #[serde(default)]
    pub calcifications: Vec<Calcification>,
    #[serde(default)]
    pub noise_sigma_hu: f64,
    #[serde(default)]
    pub blur_sigma_mm: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_lumen_hu() -> f64 {
    400.0
}

fn default_background_hu() -> f64 {
    50.0
}

impl PhantomSpec {
    /// Checks all spec invariants, naming the first offending field.
    pub fn validate(&self) -> Result<(), PhantomError> {
        let curve = self.curve.sample(0.05);
        if curve.len() < 2 {
            return Err(PhantomError::InvalidSpec {
                field: "curve",
                message: "curve must have positive length".into(),
            });
        }
        let length = polyline_length(&curve);
        let (rmin, rmax) = self.radius_profile.extrema(length);
        if rmin <= 0.0 {
            return Err(PhantomError::InvalidSpec {
                field: "radius_profile",
                message: format!("minimum radius {rmin:.3} mm must be > 0"),
            });
        }
        if rmax >= RAY_FIELD_OF_VIEW_MM {
            return Err(PhantomError::InvalidSpec {
                field: "radius_profile",
                message: format!(
                    "maximum radius {rmax:.3} mm must stay below the {RAY_FIELD_OF_VIEW_MM} mm ray field of view"
                ),
            });
        }
        if self.lumen_hu <= self.background_hu {
            return Err(PhantomError::InvalidSpec {
                field: "lumen_hu",
                message: format!(
                    "lumen ({} HU) must be hyperdense relative to background ({} HU)",
                    self.lumen_hu, self.background_hu
                ),
            });
        }
        if self.noise_sigma_hu < 0.0 {
            return Err(PhantomError::InvalidSpec {
                field: "noise_sigma_hu",
                message: "noise sigma must be >= 0".into(),
            });
        }
        if self.blur_sigma_mm < 0.0 {
            return Err(PhantomError::InvalidSpec {
                field: "blur_sigma_mm",
                message: "blur sigma must be >= 0".into(),
            });
        }
        for (i, c) in self.calcifications.iter().enumerate() {
            if c.radius_mm <= 0.0 {
                return Err(PhantomError::InvalidSpec {
                    field: "calcifications",
                    message: format!("calcification {i} has non-positive radius"),
                });
            }
        }
        Ok(())
    }
}

fn polyline_length(points: &[Vec3<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Analytic ground truth accompanying a generated phantom.
#[derive(Debug, Clone)]
pub struct PhantomTruth {
    samples: Vec<Vec3<f64>>,
    cum_arclength: Vec<f64>,
    profile: RadiusProfile,
}

impl PhantomTruth {
    /// Exact lumen radius at a given arclength along the centerline.
    pub fn radius_at(&self, arclength_mm: f64) -> f64 {
        self.profile.radius_at(arclength_mm)
    }

    pub fn length(&self) -> f64 {
        *self.cum_arclength.last().unwrap()
    }

    /// Densely sampled centerline polyline (world mm).
    pub fn centerline_points(&self) -> &[Vec3<f64>] {
        &self.samples
    }

    pub fn profile(&self) -> &RadiusProfile {
        &self.profile
    }
}

/// Voxelizes a phantom into an existing grid geometry.
///
/// Fill order: lumen/background by distance to the curve, calcification
/// spheres overwrite, Gaussian blur, then seeded Gaussian noise.
pub fn generate_phantom<T: Real>(
    spec: &PhantomSpec,
    dims: [usize; 3],
    spacing: Vec3<f64>,
    origin: Vec3<f64>,
) -> Result<(Volume<T>, PhantomTruth), PhantomError> {
    spec.validate()?;
    let samples = spec.curve.sample(0.05);
    let mut cum = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in samples.windows(2) {
        acc += (w[1] - w[0]).norm();
        cum.push(acc);
    }
    let (_, rmax) = spec.radius_profile.extrema(acc);

    // Volume must contain curve + max radius + full ray field of view.
    let margin = rmax + RAY_FIELD_OF_VIEW_MM;
    let (mut lo, mut hi) = (samples[0], samples[0]);
    for p in &samples {
        lo = vec3(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = vec3(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let vol_hi = origin
        + vec3(
            spacing.x * (dims[0] - 1) as f64,
            spacing.y * (dims[1] - 1) as f64,
            spacing.z * (dims[2] - 1) as f64,
        );
    for axis in 0..3 {
        let (need_lo, need_hi) = match axis {
            0 => (lo.x - margin, hi.x + margin),
            1 => (lo.y - margin, hi.y + margin),
            _ => (lo.z - margin, hi.z + margin),
        };
        let (have_lo, have_hi) = match axis {
            0 => (origin.x, vol_hi.x),
            1 => (origin.y, vol_hi.y),
            _ => (origin.z, vol_hi.z),
        };
        if need_lo < have_lo || need_hi > have_hi {
            return Err(PhantomError::VolumeTooSmall {
                message: format!(
                    "axis {axis}: need [{need_lo:.2}, {need_hi:.2}] mm (curve + max radius + {RAY_FIELD_OF_VIEW_MM} mm margin), volume spans [{have_lo:.2}, {have_hi:.2}] mm"
                ),
            });
        }
    }

    let n = dims[0] * dims[1] * dims[2];
    let mut field = vec![spec.background_hu; n];

    // Lumen fill: a voxel is lumen when closer to the curve than the radius
    // at the nearest curve sample. Only voxels near the curve's bounding box
    // can qualify.
    let reach = rmax + 0.5;
    for k in 0..dims[2] {
        let z = origin.z + spacing.z * k as f64;
        if z < lo.z - reach || z > hi.z + reach {
            continue;
        }
        for j in 0..dims[1] {
            let y = origin.y + spacing.y * j as f64;
            if y < lo.y - reach || y > hi.y + reach {
                continue;
            }
            for i in 0..dims[0] {
                let x = origin.x + spacing.x * i as f64;
                if x < lo.x - reach || x > hi.x + reach {
                    continue;
                }
                let p = vec3(x, y, z);
                let mut best_d2 = f64::INFINITY;
                let mut best_idx = 0;
                for (si, s) in samples.iter().enumerate() {
                    let d2 = (p - *s).norm_squared();
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best_idx = si;
                    }
                }
                let r = spec.radius_profile.radius_at(cum[best_idx]);
                if best_d2 < r * r {
                    field[i + dims[0] * (j + dims[1] * k)] = spec.lumen_hu;
                }
            }
        }
    }

    // Calcification spheres overwrite whatever is beneath them.
    for c in &spec.calcifications {
        let center: Vec3<f64> = Vec3::from_f64_array(c.center);
        let r = c.radius_mm;
        let i_lo = (((center.x - r - origin.x) / spacing.x).floor().max(0.0)) as usize;
        let i_hi = ((((center.x + r - origin.x) / spacing.x).ceil()) as usize).min(dims[0] - 1);
        let j_lo = (((center.y - r - origin.y) / spacing.y).floor().max(0.0)) as usize;
        let j_hi = ((((center.y + r - origin.y) / spacing.y).ceil()) as usize).min(dims[1] - 1);
        let k_lo = (((center.z - r - origin.z) / spacing.z).floor().max(0.0)) as usize;
        let k_hi = ((((center.z + r - origin.z) / spacing.z).ceil()) as usize).min(dims[2] - 1);
        for k in k_lo..=k_hi {
            for j in j_lo..=j_hi {
                for i in i_lo..=i_hi {
                    let p = vec3(
                        origin.x + spacing.x * i as f64,
                        origin.y + spacing.y * j as f64,
                        origin.z + spacing.z * k as f64,
                    );
                    if (p - center).norm_squared() < r * r {
                        field[i + dims[0] * (j + dims[1] * k)] = c.hu;
                    }
                }
            }
        }
    }

    if spec.blur_sigma_mm > 0.0 {
        gaussian_blur(&mut field, dims, spacing, spec.blur_sigma_mm);
    }

    if spec.noise_sigma_hu > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma_hu).unwrap();
        for v in field.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let data: Vec<T> = field.into_iter().map(T::of).collect();
    let volume = Volume::new(
        dims,
        Vec3::from_f64_array([spacing.x, spacing.y, spacing.z]),
        Vec3::from_f64_array([origin.x, origin.y, origin.z]),
        data,
    )?;
    let truth = PhantomTruth {
        samples,
        cum_arclength: cum,
        profile: spec.radius_profile.clone(),
    };
    Ok((volume, truth))
}

/// Voxelizes a phantom, choosing grid dims and origin automatically so the
/// curve plus maximum radius keeps a full field-of-view margin on all sides.
pub fn generate_phantom_auto<T: Real>(
    spec: &PhantomSpec,
    spacing_mm: f64,
) -> Result<(Volume<T>, PhantomTruth), PhantomError> {
    spec.validate()?;
    let samples = spec.curve.sample(0.05);
    let length = polyline_length(&samples);
    let (_, rmax) = spec.radius_profile.extrema(length);
    let margin = rmax + RAY_FIELD_OF_VIEW_MM + 4.0 * spec.blur_sigma_mm + 0.7;
    let (mut lo, mut hi) = (samples[0], samples[0]);
    for p in &samples {
        lo = vec3(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = vec3(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let origin = lo - vec3(margin, margin, margin);
    let extent = hi - lo + vec3(2.0 * margin, 2.0 * margin, 2.0 * margin);
    let dims = [
        (extent.x / spacing_mm).ceil() as usize + 1,
        (extent.y / spacing_mm).ceil() as usize + 1,
        (extent.z / spacing_mm).ceil() as usize + 1,
    ];
    generate_phantom(spec, dims, vec3(spacing_mm, spacing_mm, spacing_mm), origin)
}

/// Separable Gaussian blur with clamp-to-edge boundaries, sigma in mm.
fn gaussian_blur(field: &mut [f64], dims: [usize; 3], spacing: Vec3<f64>, sigma_mm: f64) {
    let mut tmp = vec![0.0; field.len()];
    for axis in 0..3 {
        let sp = match axis {
            0 => spacing.x,
            1 => spacing.y,
            _ => spacing.z,
        };
        let sigma = sigma_mm / sp;
        let radius = (3.0 * sigma).ceil() as isize;
        if radius == 0 {
            continue;
        }
        let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
        let mut sum = 0.0;
        for o in -radius..=radius {
            let w = (-0.5 * (o as f64 / sigma).powi(2)).exp();
            kernel.push(w);
            sum += w;
        }
        for w in kernel.iter_mut() {
            *w /= sum;
        }

        let (n_axis, stride) = match axis {
            0 => (dims[0], 1),
            1 => (dims[1], dims[0]),
            _ => (dims[2], dims[0] * dims[1]),
        };
        let (n_a, n_b, stride_a, stride_b) = match axis {
            0 => (dims[1], dims[2], dims[0], dims[0] * dims[1]),
            1 => (dims[0], dims[2], 1, dims[0] * dims[1]),
            _ => (dims[0], dims[1], 1, dims[0]),
        };
        for b in 0..n_b {
            for a in 0..n_a {
                let base = a * stride_a + b * stride_b;
                for idx in 0..n_axis {
                    let mut acc = 0.0;
                    for (ki, w) in kernel.iter().enumerate() {
                        let off = idx as isize + ki as isize - radius;
                        let clamped = off.clamp(0, n_axis as isize - 1) as usize;
                        acc += w * field[base + clamped * stride];
                    }
                    tmp[base + idx * stride] = acc;
                }
            }
        }
        field.copy_from_slice(&tmp);
    }
}
