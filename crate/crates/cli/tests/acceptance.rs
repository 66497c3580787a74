//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! and asserting its runtime budget.
//!
//! Run with `cargo test -p tubegcn --test acceptance -- --nocapture`.
//! The two training-heavy criteria share one trained pipeline and run the
//! ablation replicates on separate threads.

use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tubegcn_core::centerline::Centerline;
use tubegcn_core::dataset::{random_phantom_spec, DatasetOptions};
use tubegcn_core::metrics::{
    cross_section_dice, evaluate_segment, surface_distances, roughness_from_radii,
};
use tubegcn_core::network::{gradcheck, mean_aggregate, AggregatorMode, GcnModel};
use tubegcn_core::pipeline::{
    build_featured_graph, expand_per_plane, plane_arclengths, SegmentOptions,
};
use tubegcn_core::trainer::{train, Segment, TrainConfig};
use tubegcn_core::tubemesh::{
    bfs_distances, build_graph, mesh_from_positions, realize_with_radii, Features,
};
use tubegcn_core::vec3::{vec3, Vec3};
use tubegcn_core::volume::{generate_phantom_auto, PhantomSpec, RAY_FIELD_OF_VIEW_MM};

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

/// Criteria run one at a time: the runtime budgets describe dedicated use
/// of the machine, and the training-heavy ones parallelize internally.
static GATE: Mutex<()> = Mutex::new(());

/// Runs a criterion body, prints its pass/fail line, enforces the budget.
fn criterion(number: u32, name: &str, budget: Duration, body: impl FnOnce()) {
    let _guard = GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    let started = Instant::now();
    let outcome = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = started.elapsed();
    let status = if outcome.is_ok() && elapsed <= budget {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "[acceptance] criterion {number} ({name}): {status} ({:.1} s, budget {:.0} s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
    assert!(
        elapsed <= budget,
        "criterion {number} exceeded its {budget:?} budget: {elapsed:?}"
    );
}

fn straight_tube_graph(n_planes: usize, n_angles: usize) -> tubegcn_core::TubeGraph64 {
    let cl = Centerline::new(
        (0..n_planes)
            .map(|i| vec3(0.0, 0.0, i as f64 * 0.5))
            .collect(),
    )
    .unwrap()
    .with_frames()
    .unwrap();
    build_graph(&cl, n_angles).unwrap()
}

fn random_features(n: usize, width: usize, rng: &mut ChaCha8Rng) -> Features<f64> {
    Features::from_rows(
        (0..n)
            .map(|_| (0..width).map(|_| rng.random::<f64>()).collect())
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Criterion 1: architecture fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_architecture_fidelity() {
    criterion(1, "architecture fidelity", Duration::from_secs(1), || {
        let model = GcnModel::<f64>::standard(AggregatorMode::Gcn, 42);
        assert_eq!(model.layers().len(), 5, "five aggregation layers");
        assert_eq!(model.layer_dims(), vec![32, 64, 64, 64, 64, 1]);
        assert_eq!(model.dropout_p(), 0.5);

        // With per-layer biases the parameter count is 14,657; the reported
        // figure of 14,567 matches neither the bias-free count (14,400) nor
        // the biased one and is treated as a transposition of 14,657.
        assert_eq!(model.param_count(), 14_657);
        assert_ne!(model.param_count(), 14_567);

        // Every trainable parameter lives in the five linear layers: there
        // are no normalization parameters anywhere.
        let per_layer: usize = model
            .layers()
            .iter()
            .map(|l| l.in_dim() * l.out_dim() + l.out_dim())
            .sum();
        assert_eq!(model.parameters_flat().len(), per_layer);

        // The MLP ablation shares the exact parameter budget.
        let mlp = GcnModel::<f64>::standard(AggregatorMode::Mlp, 42);
        assert_eq!(mlp.param_count(), model.param_count());
    });
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_gradient_correctness() {
    criterion(2, "gradient correctness", Duration::from_secs(60), || {
        let graph = straight_tube_graph(3, 24);
        let adjacency = graph.adjacency().to_vec();
        let seeds: Vec<u64> = (0..20).map(|i| 1_000 + i).collect();

        let check_seed = |seed: u64| -> usize {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let features = random_features(graph.n_vertices(), 32, &mut rng);
            let reference: Vec<f64> = (0..graph.n_vertices())
                .map(|_| rng.random_range(0.8..2.5))
                .collect();

            let mut model = GcnModel::<f64>::standard(AggregatorMode::Gcn, seed);
            model.set_training(false);
            let trace = model.forward_train(&features, &adjacency).unwrap();
            model.zero_gradients();
            model.backward(&trace, &adjacency, &reference).unwrap();
            let analytic = model.gradients_flat();

            let fd = gradcheck::fd_loss_gradient_flagged(
                &model,
                &features,
                &adjacency,
                &reference,
                1e-5,
            )
            .unwrap();
            let base_loss =
                tubegcn_core::network::loss(&model.predict(&features, &adjacency).unwrap(), &reference)
                    .unwrap();

            let mut kinks = 0usize;
            for (i, (a, f)) in analytic.iter().zip(&fd.gradient).enumerate() {
                if fd.kink_crossed[i] {
                    // A ReLU unit or loss term changed sides inside the ±h
                    // window, so the central difference averages two distinct
                    // slopes there. Validate against the one-sided slopes,
                    // one of which stays on the base point's side.
                    kinks += 1;
                    let h = 1e-5;
                    let mut eval = |delta: f64| {
                        model.perturb_parameter(i, delta);
                        let pred = model.predict(&features, &adjacency).unwrap();
                        model.perturb_parameter(i, -delta);
                        tubegcn_core::network::loss(&pred, &reference).unwrap()
                    };
                    let forward = (eval(h) - base_loss) / h;
                    let backward = (base_loss - eval(-h)) / h;
                    let matches_side = |side: f64| {
                        let diff = (a - side).abs();
                        diff <= 1e-6 || diff / side.abs() <= 5e-2
                    };
                    assert!(
                        matches_side(forward) || matches_side(backward),
                        "seed {seed} param {i} (kink): analytic {a}, one-sided {forward}/{backward}"
                    );
                    continue;
                }
                // 1e-4 relative, with an absolute floor of 1e-8 on the
                // difference: central differences at h = 1e-5 carry a
                // rounding noise floor of roughly eps*loss/(2h) ~ 1e-11,
                // so vanishing entries are compared absolutely.
                let diff = (a - f).abs();
                assert!(
                    diff <= 1e-8 || diff / f.abs() <= 1e-4,
                    "seed {seed} param {i}: analytic {a} vs fd {f}"
                );
            }
            kinks
        };

        let total_kinks: usize = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in seeds.chunks(5) {
                handles.push(scope.spawn(move || {
                    chunk.iter().map(|&seed| check_seed(seed)).sum::<usize>()
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        println!(
            "[acceptance]   {total_kinks} of {} parameter checks crossed a kink (validated one-sided)",
            20 * 14_657
        );
    });
}

// ---------------------------------------------------------------------------
// Criterion 3: aggregator oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_aggregator_oracle() {
    criterion(3, "aggregator oracle", Duration::from_secs(10), || {
        // Identical features: the mean of identical vectors is the vector,
        // so GCN and MLP forward passes coincide.
        let graph = straight_tube_graph(6, 24);
        let row: Vec<f64> = (0..32).map(|k| 0.2 + 0.02 * k as f64).collect();
        let features = Features::from_rows(vec![row; graph.n_vertices()]);
        let gcn = GcnModel::<f64>::standard(AggregatorMode::Gcn, 9);
        let mlp = gcn.clone().with_mode(AggregatorMode::Mlp);
        let a = gcn.predict(&features, graph.adjacency()).unwrap();
        let b = mlp.predict(&features, graph.adjacency()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }

        // Brute-force recomputation of the closed-neighborhood mean on
        // random graphs.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..30 {
            let n = rng.random_range(2..40);
            let width = rng.random_range(1..10);
            let mut adjacency = vec![Vec::new(); n];
            for v in 0..n {
                for u in (v + 1)..n {
                    if rng.random::<f64>() < 0.25 {
                        adjacency[v].push(u);
                        adjacency[u].push(v);
                    }
                }
            }
            let features = random_features(n, width, &mut rng);
            let fast = mean_aggregate(&features, &adjacency);
            for (v, neighbors) in adjacency.iter().enumerate() {
                for c in 0..width {
                    let mut sum = features.row(v)[c];
                    for &u in neighbors {
                        sum += features.row(u)[c];
                    }
                    let expect = sum / (neighbors.len() + 1) as f64;
                    assert!(
                        (fast.row(v)[c] - expect).abs() < 1e-12,
                        "vertex {v} channel {c}"
                    );
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Criterion 4: receptive field
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_receptive_field() {
    criterion(4, "receptive field", Duration::from_secs(10), || {
        let graph = straight_tube_graph(30, 24);
        let n = graph.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let features = random_features(n, 32, &mut rng);
        let model = GcnModel::<f64>::standard(AggregatorMode::Gcn, 44);
        let base = model.predict(&features, graph.adjacency()).unwrap();

        let target = graph.vertex_index(15, 7);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|v| features.row(v).to_vec()).collect();
        for x in rows[target].iter_mut() {
            *x = (*x + 0.37).min(1.0);
        }
        let perturbed = model
            .predict(&Features::from_rows(rows), graph.adjacency())
            .unwrap();

        let dist = bfs_distances(graph.adjacency(), target);
        let mut touched = 0;
        for v in 0..n {
            let d = dist[v].expect("tube graph is connected");
            if d > 5 {
                assert_eq!(
                    base[v].to_bits(),
                    perturbed[v].to_bits(),
                    "vertex {v} at distance {d} moved"
                );
            } else if base[v] != perturbed[v] {
                touched += 1;
            }
        }
        assert!(touched > 0, "perturbation never reached the outputs");
        assert_ne!(base[target], perturbed[target]);
    });
}

// ---------------------------------------------------------------------------
// Criteria 5 + 9: phantom recovery and calcification exclusion
// ---------------------------------------------------------------------------

struct HeldOutResult {
    spec: PhantomSpec,
    segment: Segment<f64>,
    predicted: Vec<f64>,
    dsc: f64,
    msd_mm: f64,
}

struct TrainedPipeline {
    held_out: Vec<HeldOutResult>,
    build_and_train: Duration,
}

fn dataset_options() -> DatasetOptions {
    // Seed chosen so the held-out split contains calcified phantoms.
    DatasetOptions {
        seed: 20,
        ..DatasetOptions::default()
    }
}

type HeldOutSet = Vec<(PhantomSpec, Segment<f64>)>;

fn build_segments(opts: &DatasetOptions) -> (Vec<Segment<f64>>, HeldOutSet) {
    let seg_opts = SegmentOptions::default();
    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    for i in 0..opts.count {
        let spec = random_phantom_spec(opts, i);
        let (volume, truth) = generate_phantom_auto::<f64>(&spec, opts.spacing_mm).unwrap();
        let raw_cl = Centerline::new(truth.centerline_points().to_vec()).unwrap();
        let (framed, graph) = build_featured_graph(&volume, &raw_cl, &seg_opts).unwrap();
        let per_plane: Vec<f64> = plane_arclengths(&framed)
            .iter()
            .map(|&s| truth.radius_at(s))
            .collect();
        let reference = expand_per_plane(&per_plane, graph.n_angles());
        let segment = Segment {
            id: format!("phantom_{i:03}"),
            centerline: framed,
            graph,
            reference,
            stratum: Some(if spec.radius_profile.stenoses.is_empty() {
                "healthy".into()
            } else {
                "diseased".into()
            }),
        };
        if i < opts.count - opts.test_count {
            train_set.push(segment);
        } else {
            test_set.push((spec, segment));
        }
    }
    (train_set, test_set)
}

static PIPELINE: OnceLock<TrainedPipeline> = OnceLock::new();

fn trained_pipeline() -> &'static TrainedPipeline {
    PIPELINE.get_or_init(|| {
        let started = Instant::now();
        let opts = dataset_options();
        let (train_set, test_set) = build_segments(&opts);
        assert_eq!(train_set.len(), 12);
        assert_eq!(test_set.len(), 4);

        let mut model = GcnModel::<f64>::standard(AggregatorMode::Gcn, 42);
        let cfg = TrainConfig::default();
        assert_eq!(cfg.iterations, 50_000);
        assert_eq!(cfg.accum_steps, 10);
        assert_eq!(cfg.adam.lr, 0.001);
        train(&mut model, &train_set, &cfg).unwrap();

        let held_out = test_set
            .into_iter()
            .map(|(spec, segment)| {
                let predicted = model.predict_radii(&segment.graph).unwrap();
                let m = evaluate_segment(
                    &predicted,
                    &segment.reference,
                    &segment.graph,
                    &segment.centerline,
                )
                .unwrap();
                HeldOutResult {
                    spec,
                    segment,
                    predicted,
                    dsc: m.dsc,
                    msd_mm: m.msd_mm,
                }
            })
            .collect();
        TrainedPipeline {
            held_out,
            build_and_train: started.elapsed(),
        }
    })
}

#[test]
fn criterion_5_phantom_recovery() {
    criterion(5, "phantom recovery", Duration::from_secs(1800), || {
        let pipeline = trained_pipeline();
        assert!(
            pipeline.build_and_train <= Duration::from_secs(1700),
            "training itself blew the budget: {:?}",
            pipeline.build_and_train
        );
        let n = pipeline.held_out.len() as f64;
        let mean_dsc: f64 = pipeline.held_out.iter().map(|r| r.dsc).sum::<f64>() / n;
        let mean_msd: f64 = pipeline.held_out.iter().map(|r| r.msd_mm).sum::<f64>() / n;
        for r in &pipeline.held_out {
            println!(
                "[acceptance]   held-out {}: dsc {:.4}, msd {:.4} mm",
                r.segment.id, r.dsc, r.msd_mm
            );
        }
        assert!(mean_msd <= 0.15, "mean MSD {mean_msd} mm exceeds 0.15 mm");
        assert!(mean_dsc >= 0.90, "mean DSC {mean_dsc} below 0.90");
    });
}

#[test]
fn criterion_9_calcification_exclusion() {
    criterion(9, "calcification exclusion", Duration::from_secs(1800), || {
        let pipeline = trained_pipeline();
        let mut calc_facing_vertices = 0usize;
        for r in &pipeline.held_out {
            if r.spec.calcifications.is_empty() {
                continue;
            }
            let graph = &r.segment.graph;
            let frames = r.segment.centerline.frames().unwrap();
            let points = r.segment.centerline.points();
            for i in 0..graph.n_planes() {
                for a in 0..graph.n_angles() {
                    let v = graph.vertex_index(i, a);
                    let phi = graph.angle(a);
                    let dir = frames[i].normal * phi.cos() + frames[i].binormal * phi.sin();
                    let facing = r.spec.calcifications.iter().any(|c| {
                        let center: Vec3<f64> = Vec3::from_f64_array(c.center);
                        ray_hits_sphere(points[i], dir, center, c.radius_mm)
                    });
                    if !facing {
                        continue;
                    }
                    calc_facing_vertices += 1;
                    let overshoot = r.predicted[v] - r.segment.reference[v];
                    assert!(
                        overshoot <= 0.2,
                        "{} vertex ({i},{a}) grows {overshoot:.3} mm into calcification",
                        r.segment.id
                    );
                }
            }
        }
        assert!(
            calc_facing_vertices > 0,
            "held-out split contains no calcification-facing vertices"
        );
        println!("[acceptance]   checked {calc_facing_vertices} calcification-facing vertices");
    });
}

/// Whether the ray `origin + t*dir`, t in [0, field of view], enters a sphere.
fn ray_hits_sphere(origin: Vec3<f64>, dir: Vec3<f64>, center: Vec3<f64>, radius: f64) -> bool {
    let rel = origin - center;
    let b = 2.0 * rel.dot(dir);
    let c = rel.norm_squared() - radius * radius;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return false;
    }
    let sqrt_disc = disc.sqrt();
    let t0 = (-b - sqrt_disc) / 2.0;
    let t1 = (-b + sqrt_disc) / 2.0;
    t1 >= 0.0 && t0 <= RAY_FIELD_OF_VIEW_MM
}

// ---------------------------------------------------------------------------
// Criterion 6: ablation ordering
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_ablation_ordering() {
    criterion(6, "ablation ordering", Duration::from_secs(5400), || {
        let opts = dataset_options();
        let (train_set, test_set) = build_segments(&opts);
        let replicate_seeds = [101u64, 202, 303];

        struct ReplicateOutcome {
            seed: u64,
            gcn: (f64, f64, f64),
            mlp: (f64, f64, f64),
        }

        let run_replicate = |seed: u64| -> ReplicateOutcome {
            let mut means = Vec::new();
            for mode in [AggregatorMode::Gcn, AggregatorMode::Mlp] {
                let mut model = GcnModel::<f64>::standard(mode, seed);
                let cfg = TrainConfig {
                    seed,
                    ..TrainConfig::default()
                };
                train(&mut model, &train_set, &cfg).unwrap();
                let mut dsc = 0.0;
                let mut msd = 0.0;
                let mut rough = 0.0;
                for (_, seg) in &test_set {
                    let pred = model.predict_radii(&seg.graph).unwrap();
                    let m =
                        evaluate_segment(&pred, &seg.reference, &seg.graph, &seg.centerline)
                            .unwrap();
                    dsc += m.dsc;
                    msd += m.msd_mm;
                    rough += m.roughness_mm;
                }
                let n = test_set.len() as f64;
                means.push((dsc / n, msd / n, rough / n));
            }
            ReplicateOutcome {
                seed,
                gcn: means[0],
                mlp: means[1],
            }
        };

        let outcomes: Vec<ReplicateOutcome> = std::thread::scope(|scope| {
            let handles: Vec<_> = replicate_seeds
                .iter()
                .map(|&seed| scope.spawn(move || run_replicate(seed)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });

        let mut dsc_wins = 0;
        let mut msd_wins = 0;
        let mut rough_wins = 0;
        for o in &outcomes {
            println!(
                "[acceptance]   seed {}: GCN dsc {:.4} msd {:.4} rough {:.5} | MLP dsc {:.4} msd {:.4} rough {:.5}",
                o.seed, o.gcn.0, o.gcn.1, o.gcn.2, o.mlp.0, o.mlp.1, o.mlp.2
            );
            if o.gcn.0 > o.mlp.0 {
                dsc_wins += 1;
            }
            if o.gcn.1 < o.mlp.1 {
                msd_wins += 1;
            }
            if o.gcn.2 <= o.mlp.2 {
                rough_wins += 1;
            }
        }
        assert!(dsc_wins >= 2, "GCN beat MLP on DSC in only {dsc_wins}/3 replicates");
        assert!(msd_wins >= 2, "GCN beat MLP on MSD in only {msd_wins}/3 replicates");
        assert!(
            rough_wins >= 2,
            "GCN was smoother than MLP in only {rough_wins}/3 replicates"
        );
    });
}

// ---------------------------------------------------------------------------
// Criterion 7: metric oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_metric_oracles() {
    criterion(7, "metric oracles", Duration::from_secs(60), || {
        // Concentric regular 24-gons, radii 1 and 2: similar polygons have
        // area ratio 1:4, so DSC = 2*1/(1+4) = 0.4.
        let d = cross_section_dice(&[1.0; 24], &[2.0; 24]).unwrap();
        assert!((d - 0.4).abs() <= 0.01, "concentric dice {d}");

        // Coaxial tubes: every surface point of one is the radius gap away
        // from the other (up to polygonal flattening).
        let tube = |radius: f64| {
            let cl = Centerline::new((0..100).map(|i| vec3(0.0, 0.0, i as f64 * 0.5)).collect())
                .unwrap()
                .with_frames()
                .unwrap();
            let g = build_graph(&cl, 24).unwrap();
            let positions = realize_with_radii(&g, &cl, &vec![radius; g.n_vertices()]).unwrap();
            mesh_from_positions(&g, positions)
        };
        let a = tube(1.0);
        let b = tube(1.3);
        let sd = surface_distances(&a, &b).unwrap();
        assert!((sd.msd_mm - 0.3).abs() <= 0.02, "coaxial msd {}", sd.msd_mm);
        assert!((sd.hd_mm - 0.3).abs() <= 0.02, "coaxial hd {}", sd.hd_mm);

        // Self distance.
        let self_d = surface_distances(&a, &a).unwrap();
        assert!(self_d.msd_mm <= 1e-12 && self_d.hd_mm <= 1e-12);

        // Hausdorff dominates the mean on 100 random mesh pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let planes = rng.random_range(3..8);
            let mk = |radius: f64, shift: Vec3<f64>, rng: &mut ChaCha8Rng| {
                let cl = Centerline::new(
                    (0..planes)
                        .map(|i| {
                            vec3(
                                rng.random_range(-0.05..0.05),
                                rng.random_range(-0.05..0.05),
                                i as f64 * 0.5,
                            ) + shift
                        })
                        .collect(),
                )
                .unwrap()
                .with_frames()
                .unwrap();
                let g = build_graph(&cl, 8).unwrap();
                let radii: Vec<f64> = (0..g.n_vertices())
                    .map(|_| radius * rng.random_range(0.8..1.2))
                    .collect();
                let positions = realize_with_radii(&g, &cl, &radii).unwrap();
                mesh_from_positions(&g, positions)
            };
            let a = mk(rng.random_range(0.5..2.0), Vec3::zero(), &mut rng);
            let shift = vec3(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let b = mk(rng.random_range(0.5..2.0), shift, &mut rng);
            let sd = surface_distances(&a, &b).unwrap();
            assert!(sd.hd_mm >= sd.msd_mm - 1e-12);
        }

        // Roughness oracle values used by the ablation comparison.
        assert_eq!(roughness_from_radii(&[1.0; 24], 4, 6).unwrap(), 0.0);
    });
}

// ---------------------------------------------------------------------------
// Criterion 8: command-line determinism
// ---------------------------------------------------------------------------

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tubegcn")
}

fn run_ok(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_same_bytes(a: &Path, b: &Path) {
    assert_eq!(
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        "{} differs from {}",
        a.display(),
        b.display()
    );
}

#[test]
fn criterion_8_cli_determinism() {
    criterion(8, "command determinism", Duration::from_secs(300), || {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();

        let spec_path = root.join("spec.json");
        std::fs::write(
            &spec_path,
            r#"{
                "curve": {"kind": "straight", "start": [0,0,0], "end": [0,0,8]},
                "radius_profile": {"base": {"kind": "constant", "radius_mm": 1.6},
                                   "stenoses": [{"center_mm": 4.0, "width_mm": 1.0, "severity": 0.3}]},
                "noise_sigma_hu": 15.0,
                "blur_sigma_mm": 0.3,
                "seed": 9
            }"#,
        )
        .unwrap();

        let run_once = |tag: &str| -> PathBuf {
            let base = root.join(tag);
            let bundle = base.join("phantom");
            run_ok(&[
                "phantom",
                "--spec",
                spec_path.to_str().unwrap(),
                "--out-dir",
                bundle.to_str().unwrap(),
            ]);
            let model = base.join("model.ckpt");
            run_ok(&[
                "train",
                "--dataset",
                bundle.to_str().unwrap(),
                "--iterations",
                "500",
                "--out",
                model.to_str().unwrap(),
            ]);
            let mesh = base.join("pred.obj");
            run_ok(&[
                "segment",
                "--model",
                model.to_str().unwrap(),
                "--volume",
                bundle.join("volume.json").to_str().unwrap(),
                "--centerline",
                bundle.join("centerline.json").to_str().unwrap(),
                "--out-mesh",
                mesh.to_str().unwrap(),
            ]);
            let eval_dir = base.join("eval");
            run_ok(&[
                "eval",
                "--pred-radii",
                base.join("pred.radii.json").to_str().unwrap(),
                "--ref-radii",
                bundle.join("ground_truth.json").to_str().unwrap(),
                "--centerline",
                bundle.join("centerline.json").to_str().unwrap(),
                "--out-dir",
                eval_dir.to_str().unwrap(),
            ]);
            base
        };

        let a = run_once("a");
        let b = run_once("b");

        for rel in [
            "phantom/volume.raw",
            "phantom/volume.json",
            "phantom/centerline.json",
            "phantom/ground_truth.json",
            "model.ckpt",
            "model.loss.csv",
            "pred.obj",
            "pred.radii.json",
            "eval/metrics.csv",
            "eval/metrics.json",
        ] {
            assert_same_bytes(&a.join(rel), &b.join(rel));
        }

        // Manifests carry timings; their artifact hash lists must agree.
        for rel in ["phantom/run_manifest.json", "eval/run_manifest.json"] {
            let ma: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(a.join(rel)).unwrap()).unwrap();
            let mb: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(b.join(rel)).unwrap()).unwrap();
            assert_eq!(ma["outputs"], mb["outputs"], "{rel} hashes differ");
        }
    });
}
