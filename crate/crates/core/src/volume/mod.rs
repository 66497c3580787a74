//! Volumetric image representation and sampling.
//!
//! A [`Volume`] is a dense 3D scalar grid in Hounsfield units with physical
//! voxel spacing and a world-space origin at the center of voxel (0,0,0).
//! Sampling is trilinear in physical coordinates with clamp-to-edge behavior
//! outside the grid, so rays near volume borders never fail.

mod io;
mod phantom;

pub use io::{read_metaimage, read_raw_with_sidecar, write_raw_with_sidecar, VolumeMeta};
pub use phantom::{
    generate_phantom, generate_phantom_auto, BaseProfile, Calcification, CurveSpec, PhantomError,
    PhantomSpec, PhantomTruth, RadiusProfile, Stenosis, RAY_FIELD_OF_VIEW_MM,
};

use std::fmt;

use crate::scalar::Real;
use crate::vec3::Vec3;

/// Upper clip bound for CT intensities, in HU.
pub const HU_CLIP_MAX: f64 = 1000.0;

/// Errors from volume construction and I/O.
#[derive(Debug)]
pub enum VolumeError {
    /// Each grid dimension must be at least 2 voxels.
    DimsTooSmall([usize; 3]),
    /// Voxel spacing components must be strictly positive.
    NonPositiveSpacing([f64; 3]),
    /// Data length does not match `nx * ny * nz`.
    DataLength { expected: usize, got: usize },
    /// I/O failure while reading or writing a volume file.
    Io(std::io::Error),
    /// Malformed sidecar or header content.
    Format(String),
}

impl fmt::Display for VolumeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeError::DimsTooSmall(d) => {
                write!(f, "volume dims {d:?} too small: each axis needs >= 2 voxels")
            }
            VolumeError::NonPositiveSpacing(s) => {
                write!(f, "voxel spacing {s:?} must be strictly positive")
            }
            VolumeError::DataLength { expected, got } => {
                write!(f, "voxel data length {got} does not match dims product {expected}")
            }
            VolumeError::Io(e) => write!(f, "volume i/o error: {e}"),
            VolumeError::Format(msg) => write!(f, "volume format error: {msg}"),
        }
    }
}

impl std::error::Error for VolumeError {}

impl From<std::io::Error> for VolumeError {
    fn from(e: std::io::Error) -> Self {
        VolumeError::Io(e)
    }
}

/// Dense 3D scalar grid in HU, x-fastest voxel ordering.
#[derive(Debug, Clone)]
pub struct Volume<T: Real> {
    dims: [usize; 3],
    spacing: Vec3<T>,
    origin: Vec3<T>,
    data: Vec<T>,
}

impl<T: Real> Volume<T> {
    /// Builds a volume, validating the grid invariants.
    pub fn new(
        dims: [usize; 3],
        spacing: Vec3<T>,
        origin: Vec3<T>,
        data: Vec<T>,
    ) -> Result<Self, VolumeError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(VolumeError::DimsTooSmall(dims));
        }
        if !(spacing.x > T::zero() && spacing.y > T::zero() && spacing.z > T::zero()) {
            return Err(VolumeError::NonPositiveSpacing(spacing.to_f64_array()));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(VolumeError::DataLength {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            data,
        })
    }

    /// Constant-valued volume.
    pub fn filled(
        dims: [usize; 3],
        spacing: Vec3<T>,
        origin: Vec3<T>,
        value: T,
    ) -> Result<Self, VolumeError> {
        let n = dims[0] * dims[1] * dims[2];
        Self::new(dims, spacing, origin, vec![value; n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> Vec3<T> {
        self.spacing
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn voxel(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.index(i, j, k)]
    }

    pub fn set_voxel(&mut self, i: usize, j: usize, k: usize, value: T) {
        let idx = self.index(i, j, k);
        self.data[idx] = value;
    }

    /// World position of the center of voxel (i,j,k).
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        Vec3 {
            x: self.origin.x + self.spacing.x * T::from_usize(i).unwrap(),
            y: self.origin.y + self.spacing.y * T::from_usize(j).unwrap(),
            z: self.origin.z + self.spacing.z * T::from_usize(k).unwrap(),
        }
    }

    /// Inclusive bounds spanned by voxel centers.
    pub fn center_bounds(&self) -> (Vec3<T>, Vec3<T>) {
        let max = Vec3 {
            x: self.origin.x + self.spacing.x * T::from_usize(self.dims[0] - 1).unwrap(),
            y: self.origin.y + self.spacing.y * T::from_usize(self.dims[1] - 1).unwrap(),
            z: self.origin.z + self.spacing.z * T::from_usize(self.dims[2] - 1).unwrap(),
        };
        (self.origin, max)
    }

    /// Whether a world point lies inside the voxel-center hull.
    pub fn contains(&self, p: Vec3<T>) -> bool {
        let (lo, hi) = self.center_bounds();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z
    }

    /// Trilinear sample at a world position, clamping to the grid edge.
    ///
    /// Total function: points outside the grid return the nearest edge value.
    pub fn sample_trilinear(&self, p: Vec3<T>) -> T {
        let u = (p - self.origin).component_div(self.spacing);
        let (i0, fx) = Self::cell_and_frac(u.x, self.dims[0]);
        let (j0, fy) = Self::cell_and_frac(u.y, self.dims[1]);
        let (k0, fz) = Self::cell_and_frac(u.z, self.dims[2]);

        let c000 = self.voxel(i0, j0, k0);
        let c100 = self.voxel(i0 + 1, j0, k0);
        let c010 = self.voxel(i0, j0 + 1, k0);
        let c110 = self.voxel(i0 + 1, j0 + 1, k0);
        let c001 = self.voxel(i0, j0, k0 + 1);
        let c101 = self.voxel(i0 + 1, j0, k0 + 1);
        let c011 = self.voxel(i0, j0 + 1, k0 + 1);
        let c111 = self.voxel(i0 + 1, j0 + 1, k0 + 1);

        let one = T::one();
        let x00 = c000 * (one - fx) + c100 * fx;
        let x10 = c010 * (one - fx) + c110 * fx;
        let x01 = c001 * (one - fx) + c101 * fx;
        let x11 = c011 * (one - fx) + c111 * fx;
        let y0 = x00 * (one - fy) + x10 * fy;
        let y1 = x01 * (one - fy) + x11 * fy;
        y0 * (one - fz) + y1 * fz
    }

    /// Clamped lower cell index and in-cell fraction along one axis.
    fn cell_and_frac(u: T, n: usize) -> (usize, T) {
        let max = T::from_usize(n - 1).unwrap();
        let u = u.max(T::zero()).min(max);
        let mut i0 = u.floor().to_usize().unwrap_or(0);
        if i0 > n - 2 {
            i0 = n - 2;
        }
        let frac = u - T::from_usize(i0).unwrap();
        (i0, frac)
    }
}

/// Clips an HU value to `[0, 1000]` and rescales to `[0, 1]`.
///
/// Normalizes away low-density tissue and air below, and hyperdense
/// calcifications above, the lumen intensity range.
#[inline]
pub fn clip_normalize<T: Real>(hu: T) -> T {
    let hi = T::of(HU_CLIP_MAX);
    hu.max(T::zero()).min(hi) / hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::vec3;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_volume() -> Volume<f64> {
        // 3x3x3, value = 100*i + 10*j + k to make interpolation checks easy
        let dims = [3, 3, 3];
        let mut data = vec![0.0; 27];
        for k in 0..3 {
            for j in 0..3 {
                for i in 0..3 {
                    data[i + 3 * (j + 3 * k)] = 100.0 * i as f64 + 10.0 * j as f64 + k as f64;
                }
            }
        }
        Volume::new(dims, vec3(0.5, 0.5, 0.5), vec3(-1.0, 2.0, 0.0), data).unwrap()
    }

    #[test]
    fn rejects_invalid_construction() {
        let sp = vec3(1.0, 1.0, 1.0);
        let o = Vec3::zero();
        assert!(matches!(
            Volume::new([1, 3, 3], sp, o, vec![0.0; 9]),
            Err(VolumeError::DimsTooSmall(_))
        ));
        assert!(matches!(
            Volume::new([2, 2, 2], vec3(1.0, 0.0, 1.0), o, vec![0.0; 8]),
            Err(VolumeError::NonPositiveSpacing(_))
        ));
        assert!(matches!(
            Volume::new([2, 2, 2], sp, o, vec![0.0; 7]),
            Err(VolumeError::DataLength { .. })
        ));
    }

    #[test]
    fn sample_at_voxel_center_is_identity() {
        let vol = small_volume();
        for k in 0..3 {
            for j in 0..3 {
                for i in 0..3 {
                    let p = vol.voxel_center(i, j, k);
                    assert_eq!(vol.sample_trilinear(p), vol.voxel(i, j, k));
                }
            }
        }
    }

    #[test]
    fn sample_at_midpoint_averages_neighbors() {
        // Two adjacent voxels along x with values 100 and 300.
        let data: Vec<f64> = vec![
            100.0, 300.0, 100.0, 300.0, 100.0, 300.0, 100.0, 300.0,
        ];
        let vol = Volume::new([2, 2, 2], vec3(1.0, 1.0, 1.0), Vec3::zero(), data).unwrap();
        let mid = vec3(0.5, 0.0, 0.0);
        assert!((vol.sample_trilinear(mid) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn far_outside_clamps_to_edge() {
        let vol = Volume::filled([4, 4, 4], vec3(1.0, 1.0, 1.0), Vec3::zero(), 50.0).unwrap();
        assert_eq!(vol.sample_trilinear(vec3(-100.0, 42.0, 7.5)), 50.0);
        assert_eq!(vol.sample_trilinear(vec3(1e6, -1e6, 0.0)), 50.0);
    }

    #[test]
    fn trilinear_is_exact_on_affine_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dims = [8, 9, 10];
        let spacing = vec3(0.4, 0.35, 0.5);
        let origin = vec3(-2.0, 1.0, -3.0);
        let a = vec3(3.0, -2.0, 0.7);
        let c = 11.0;
        let affine = |p: Vec3<f64>| a.dot(p) + c;

        let mut data = vec![0.0; dims[0] * dims[1] * dims[2]];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = vec3(
                        origin.x + spacing.x * i as f64,
                        origin.y + spacing.y * j as f64,
                        origin.z + spacing.z * k as f64,
                    );
                    data[i + dims[0] * (j + dims[1] * k)] = affine(p);
                }
            }
        }
        let vol = Volume::new(dims, spacing, origin, data).unwrap();
        let (lo, hi) = vol.center_bounds();
        for _ in 0..1000 {
            let p = vec3(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            );
            let expect = affine(p);
            let got = vol.sample_trilinear(p);
            assert!(
                (got - expect).abs() <= 1e-9 * expect.abs().max(1.0),
                "affine mismatch at {p:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn clip_normalize_examples() {
        assert_eq!(clip_normalize(1200.0), 1.0);
        assert_eq!(clip_normalize(-100.0), 0.0);
        assert_eq!(clip_normalize(500.0), 0.5);
    }

    #[test]
    fn clip_normalize_monotone_and_idempotent() {
        let mut prev = clip_normalize(-500.0f64);
        let mut hu = -500.0;
        while hu <= 1500.0 {
            let v = clip_normalize(hu);
            assert!(v >= prev);
            assert!((0.0..=1.0).contains(&v));
            // Re-applying after mapping back to HU scale changes nothing.
            assert_eq!(clip_normalize(v * HU_CLIP_MAX), v);
            prev = v;
            hu += 7.3;
        }
    }
}
