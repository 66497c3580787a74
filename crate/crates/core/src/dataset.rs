//! Randomized phantom dataset synthesis.
//!
//! Emulates a multi-patient vessel-segment corpus at configurable scale:
//! each phantom gets a randomized curve (straight, helical, or spline),
//! a base radius, optionally a focal narrowing, and optionally adjacent
//! calcification spheres, under shared noise/blur settings. Everything is
//! derived deterministically from a master seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seeds::{derive_seed, salt};
use crate::vec3::{vec3, Vec3};
use crate::volume::{
    BaseProfile, Calcification, CurveSpec, PhantomSpec, RadiusProfile, Stenosis,
};

/// Knobs for dataset synthesis.
#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub count: usize,
    pub test_count: usize,
    pub seed: u64,
    pub spacing_mm: f64,
    pub noise_sigma_hu: f64,
    pub blur_sigma_mm: f64,
    pub stenosis_prob: f64,
    pub calc_prob: f64,
    pub radius_range: (f64, f64),
    pub length_range: (f64, f64),
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            count: 16,
            test_count: 4,
            seed: 7,
            spacing_mm: 0.35,
            noise_sigma_hu: 20.0,
            blur_sigma_mm: 0.3,
            stenosis_prob: 0.5,
            calc_prob: 0.7,
            radius_range: (1.0, 2.5),
            length_range: (7.0, 11.0),
        }
    }
}

/// Smallest lumen radius a narrowing may leave, mm.
const MIN_STENOSED_RADIUS_MM: f64 = 0.75;

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    loop {
        let v = vec3(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if let Some(u) = v.try_normalized(0.2) {
            return u;
        }
    }
}

/// Deterministic unit vector orthogonal to `t` at in-plane angle `theta`.
fn perpendicular_at(t: Vec3<f64>, theta: f64) -> Vec3<f64> {
    let axes = [
        vec3(1.0, 0.0, 0.0),
        vec3(0.0, 1.0, 0.0),
        vec3(0.0, 0.0, 1.0),
    ];
    let mut best = axes[0];
    let mut best_dot = f64::INFINITY;
    for a in axes {
        let d = t.dot(a).abs();
        if d < best_dot {
            best_dot = d;
            best = a;
        }
    }
    let u = (best - t * t.dot(best)).try_normalized(1e-12).unwrap();
    let v = t.cross(u);
    u * theta.cos() + v * theta.sin()
}

/// Builds the deterministic phantom spec for `index` under a master seed.
pub fn random_phantom_spec(opts: &DatasetOptions, index: usize) -> PhantomSpec {
    let phantom_seed = derive_seed(derive_seed(opts.seed, salt::DATASET), index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(phantom_seed);

    let length = rng.random_range(opts.length_range.0..opts.length_range.1);
    let base_radius = rng.random_range(opts.radius_range.0..opts.radius_range.1);

    let curve = match index % 3 {
        0 => {
            let dir = random_unit(&mut rng);
            let start = dir * (-0.5 * length);
            let end = dir * (0.5 * length);
            CurveSpec::Straight {
                start: start.to_f64_array(),
                end: end.to_f64_array(),
            }
        }
        1 => {
            let axis = random_unit(&mut rng);
            let helix_radius = rng.random_range(5.0..8.0);
            let pitch = rng.random_range(18.0..28.0);
            let c = pitch / (2.0 * std::f64::consts::PI);
            let per_rad = (helix_radius * helix_radius + c * c).sqrt();
            let turns = length / (2.0 * std::f64::consts::PI * per_rad);
            CurveSpec::Helix {
                axis_origin: [0.0, 0.0, 0.0],
                axis_dir: axis.to_f64_array(),
                radius_mm: helix_radius,
                pitch_mm: pitch,
                turns,
                phase_rad: rng.random_range(0.0..std::f64::consts::TAU),
            }
        }
        _ => {
            let dir = random_unit(&mut rng);
            let side = perpendicular_at(dir, rng.random_range(0.0..std::f64::consts::TAU));
            let up = dir.cross(side);
            let n_ctrl = 4;
            let control_points = (0..n_ctrl)
                .map(|k| {
                    let along = length * (k as f64 / (n_ctrl - 1) as f64 - 0.5);
                    let sway = if k == 0 || k == n_ctrl - 1 {
                        0.0
                    } else {
                        rng.random_range(-1.2..1.2)
                    };
                    let lift = if k == 0 || k == n_ctrl - 1 {
                        0.0
                    } else {
                        rng.random_range(-0.8..0.8)
                    };
                    (dir * along + side * sway + up * lift).to_f64_array()
                })
                .collect();
            CurveSpec::Spline { control_points }
        }
    };

    let mut stenoses = Vec::new();
    if rng.random::<f64>() < opts.stenosis_prob {
        let max_severity = (1.0 - MIN_STENOSED_RADIUS_MM / base_radius).max(0.0);
        let severity = rng.random_range(0.2..0.5f64).min(max_severity);
        if severity > 0.05 {
            stenoses.push(Stenosis {
                center_mm: length * rng.random_range(0.35..0.65),
                width_mm: rng.random_range(0.8..1.5),
                severity,
            });
        }
    }
    let radius_profile = RadiusProfile {
        base: BaseProfile::Constant {
            radius_mm: base_radius,
        },
        stenoses,
    };

    // Calcifications hug the lumen wall (slight intrusion, like plaque
    // blooming) and are large enough to stay clearly hyperdense after
    // partial-volume blur, so the exclusion behavior is actually exercised.
    let mut calcifications = Vec::new();
    if rng.random::<f64>() < opts.calc_prob {
        let n_calc = rng.random_range(1..=3);
        let samples = curve.sample(0.05);
        let mut cum = vec![0.0];
        for w in samples.windows(2) {
            cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
        }
        let total = *cum.last().unwrap();
        for _ in 0..n_calc {
            let s = total * rng.random_range(0.2..0.8);
            let idx = cum.partition_point(|&c| c < s).min(samples.len() - 1);
            let p = samples[idx];
            let t = if idx + 1 < samples.len() {
                (samples[idx + 1] - p).try_normalized(1e-12).unwrap()
            } else {
                (p - samples[idx - 1]).try_normalized(1e-12).unwrap()
            };
            let calc_radius = rng.random_range(0.5..0.9);
            let lumen_r = radius_profile.radius_at(cum[idx]);
            let dir = perpendicular_at(t, rng.random_range(0.0..std::f64::consts::TAU));
            let center = p + dir * (lumen_r + 0.9 * calc_radius);
            calcifications.push(Calcification {
                center: center.to_f64_array(),
                radius_mm: calc_radius,
                hu: 900.0,
            });
        }
    }

    PhantomSpec {
        curve,
        radius_profile,
        lumen_hu: 400.0,
        background_hu: 50.0,
        calcifications,
        noise_sigma_hu: opts.noise_sigma_hu,
        blur_sigma_mm: opts.blur_sigma_mm,
        seed: derive_seed(phantom_seed, salt::PHANTOM_NOISE),
    }
}
