//! Evaluation of predicted tubes against references.
//!
//! Cross-sectional Dice overlap is computed by rasterizing the two closed
//! polygons of each plane onto a shared fine pixel grid (0.05 mm, even-odd
//! rule). Surface distances sample one mesh densely (vertices, triangle
//! centroids, edge midpoints) and measure exact point-to-triangle distances
//! against the other mesh, accelerated by a uniform spatial grid; they are
//! symmetrized into mean surface distance (MSD) and Hausdorff distance (HD).
//! Surface roughness is the mean absolute second difference of radii along
//! the rails, which quantifies how smooth a predicted tube is.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::centerline::Centerline;
use crate::scalar::Real;
use crate::tubemesh::{realize_with_radii, Mesh, TubeGraph};
use crate::vec3::{vec3, Vec3};

/// Raster pixel size for cross-sectional Dice, in mm.
pub const DICE_PIXEL_MM: f64 = 0.05;

/// Errors from metric evaluation.
#[derive(Debug)]
pub enum MetricsError {
    /// Contours must share the angle count.
    AngleCountMismatch { pred: usize, reference: usize },
    /// Radii must be strictly positive.
    NonPositiveRadius,
    /// Mesh is empty or has out-of-range triangle indices / non-finite coords.
    BadMesh(String),
    /// Every triangle of a mesh is degenerate.
    AllDegenerate,
    /// Roughness needs at least three planes.
    TooFewPlanes(usize),
    /// Plane/angle bookkeeping mismatch.
    ShapeMismatch(String),
    Mesh(crate::tubemesh::MeshError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::AngleCountMismatch { pred, reference } => {
                write!(f, "contour angle counts differ: {pred} vs {reference}")
            }
            MetricsError::NonPositiveRadius => write!(f, "contour radii must be > 0"),
            MetricsError::BadMesh(msg) => write!(f, "bad mesh: {msg}"),
            MetricsError::AllDegenerate => write!(f, "mesh has only zero-area triangles"),
            MetricsError::TooFewPlanes(n) => {
                write!(f, "roughness needs >= 3 planes, got {n}")
            }
            MetricsError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            MetricsError::Mesh(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MetricsError {}

impl From<crate::tubemesh::MeshError> for MetricsError {
    fn from(e: crate::tubemesh::MeshError) -> Self {
        MetricsError::Mesh(e)
    }
}

// ---------------------------------------------------------------------------
// Cross-sectional Dice
// ---------------------------------------------------------------------------

/// Dice overlap of two cross-section contours sharing plane, center, and
/// angle slots, given per-angle radii. Rasterized at [`DICE_PIXEL_MM`].
pub fn cross_section_dice<T: Real>(
    pred_radii: &[T],
    ref_radii: &[T],
) -> Result<f64, MetricsError> {
    cross_section_dice_with_pixel(pred_radii, ref_radii, DICE_PIXEL_MM)
}

/// Same as [`cross_section_dice`] with an explicit raster pixel size.
pub fn cross_section_dice_with_pixel<T: Real>(
    pred_radii: &[T],
    ref_radii: &[T],
    pixel_mm: f64,
) -> Result<f64, MetricsError> {
    if pred_radii.len() != ref_radii.len() {
        return Err(MetricsError::AngleCountMismatch {
            pred: pred_radii.len(),
            reference: ref_radii.len(),
        });
    }
    if pred_radii
        .iter()
        .chain(ref_radii)
        .any(|r| !r.is_strictly_positive())
    {
        return Err(MetricsError::NonPositiveRadius);
    }
    let poly = |radii: &[T]| -> Vec<[f64; 2]> {
        let n = radii.len();
        radii
            .iter()
            .enumerate()
            .map(|(a, r)| {
                let phi = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
                let r = r.widen();
                [r * phi.cos(), r * phi.sin()]
            })
            .collect()
    };
    Ok(polygon_dice(&poly(pred_radii), &poly(ref_radii), pixel_mm))
}

/// Dice overlap of two arbitrary closed 2D polygons on a shared raster.
///
/// Pixel centers over the union bounding box (plus one pixel of padding)
/// are classified by the even-odd rule.
pub fn polygon_dice(a: &[[f64; 2]], b: &[[f64; 2]], pixel_mm: f64) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in a.iter().chain(b) {
        for axis in 0..2 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let nx = (((hi[0] - lo[0]) / pixel_mm).ceil() as usize + 2).max(1);
    let ny = (((hi[1] - lo[1]) / pixel_mm).ceil() as usize + 2).max(1);
    let x0 = lo[0] - pixel_mm;
    let y0 = lo[1] - pixel_mm;

    let mut count_a = 0u64;
    let mut count_b = 0u64;
    let mut count_both = 0u64;
    for j in 0..ny {
        let y = y0 + (j as f64 + 0.5) * pixel_mm;
        for i in 0..nx {
            let x = x0 + (i as f64 + 0.5) * pixel_mm;
            let in_a = point_in_polygon_even_odd(x, y, a);
            let in_b = point_in_polygon_even_odd(x, y, b);
            count_a += in_a as u64;
            count_b += in_b as u64;
            count_both += (in_a && in_b) as u64;
        }
    }
    if count_a + count_b == 0 {
        return 0.0;
    }
    2.0 * count_both as f64 / (count_a + count_b) as f64
}

fn point_in_polygon_even_odd(x: f64, y: f64, poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (poly[i][0], poly[i][1]);
        let (xj, yj) = (poly[j][0], poly[j][1]);
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Mean cross-sectional Dice over all planes of a segment.
pub fn segment_dice<T: Real>(
    pred: &[T],
    reference: &[T],
    n_planes: usize,
    n_angles: usize,
) -> Result<f64, MetricsError> {
    if pred.len() != n_planes * n_angles || reference.len() != n_planes * n_angles {
        return Err(MetricsError::ShapeMismatch(format!(
            "per-vertex radii lengths {}/{} vs {} planes x {} angles",
            pred.len(),
            reference.len(),
            n_planes,
            n_angles
        )));
    }
    let mut sum = 0.0;
    for i in 0..n_planes {
        let lo = i * n_angles;
        let hi = lo + n_angles;
        sum += cross_section_dice(&pred[lo..hi], &reference[lo..hi])?;
    }
    Ok(sum / n_planes as f64)
}

// ---------------------------------------------------------------------------
// Surface distances
// ---------------------------------------------------------------------------

/// Symmetric surface distances between two meshes.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceDistances {
    pub msd_mm: f64,
    pub hd_mm: f64,
    /// Zero-area triangles skipped per mesh (a, b).
    pub degenerate_skipped: (usize, usize),
}

/// Mean surface distance and Hausdorff distance between two triangle meshes.
pub fn surface_distances<T: Real>(
    a: &Mesh<T>,
    b: &Mesh<T>,
) -> Result<SurfaceDistances, MetricsError> {
    let a = to_f64_mesh(a)?;
    let b = to_f64_mesh(b)?;
    let grid_a = TriGrid::build(&a)?;
    let grid_b = TriGrid::build(&b)?;

    let (mean_ab, max_ab) = directed_stats(&sample_points(&a, &grid_a.kept), &grid_b);
    let (mean_ba, max_ba) = directed_stats(&sample_points(&b, &grid_b.kept), &grid_a);

    Ok(SurfaceDistances {
        msd_mm: 0.5 * (mean_ab + mean_ba),
        hd_mm: max_ab.max(max_ba),
        degenerate_skipped: (grid_a.skipped, grid_b.skipped),
    })
}

struct F64Mesh {
    positions: Vec<Vec3<f64>>,
    triangles: Vec<[usize; 3]>,
}

fn to_f64_mesh<T: Real>(mesh: &Mesh<T>) -> Result<F64Mesh, MetricsError> {
    if mesh.positions.is_empty() || mesh.triangles.is_empty() {
        return Err(MetricsError::BadMesh("empty mesh".into()));
    }
    let positions: Vec<Vec3<f64>> = mesh
        .positions
        .iter()
        .map(|p| vec3(p.x.widen(), p.y.widen(), p.z.widen()))
        .collect();
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(MetricsError::BadMesh("non-finite vertex coordinates".into()));
    }
    for t in &mesh.triangles {
        if t.iter().any(|&i| i >= positions.len()) {
            return Err(MetricsError::BadMesh(format!(
                "triangle {t:?} indexes past {} vertices",
                positions.len()
            )));
        }
    }
    Ok(F64Mesh {
        positions,
        triangles: mesh.triangles.clone(),
    })
}

/// Surface sample points: referenced vertices, triangle centroids, and the
/// midpoint of every unique triangulation edge (degenerate triangles skipped).
fn sample_points(mesh: &F64Mesh, kept: &[usize]) -> Vec<Vec3<f64>> {
    let mut points = Vec::new();
    let mut seen_vertex = vec![false; mesh.positions.len()];
    let mut seen_edge = std::collections::BTreeSet::new();
    for &ti in kept {
        let t = mesh.triangles[ti];
        let [a, b, c] = t;
        for &v in &t {
            if !seen_vertex[v] {
                seen_vertex[v] = true;
                points.push(mesh.positions[v]);
            }
        }
        points.push((mesh.positions[a] + mesh.positions[b] + mesh.positions[c]) / 3.0);
        for (u, v) in [(a, b), (b, c), (c, a)] {
            let key = (u.min(v), u.max(v));
            if seen_edge.insert(key) {
                points.push((mesh.positions[u] + mesh.positions[v]) * 0.5);
            }
        }
    }
    points
}

fn directed_stats(points: &[Vec3<f64>], target: &TriGrid) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for &p in points {
        let d = target.min_distance(p);
        sum += d;
        max = max.max(d);
    }
    (sum / points.len() as f64, max)
}

/// Uniform spatial grid over a mesh's triangles for nearest-distance queries.
struct TriGrid {
    origin: Vec3<f64>,
    cell: f64,
    ncells: [usize; 3],
    bins: Vec<Vec<u32>>,
    tris: Vec<[Vec3<f64>; 3]>,
    /// Indices (into the source mesh) of kept triangles.
    kept: Vec<usize>,
    skipped: usize,
}

impl TriGrid {
    fn build(mesh: &F64Mesh) -> Result<Self, MetricsError> {
        let mut tris = Vec::new();
        let mut kept = Vec::new();
        let mut skipped = 0usize;
        let mut edge_sum = 0.0;
        for (ti, t) in mesh.triangles.iter().enumerate() {
            let a = mesh.positions[t[0]];
            let b = mesh.positions[t[1]];
            let c = mesh.positions[t[2]];
            let cross = (b - a).cross(c - a);
            let max_edge_sq = (b - a)
                .norm_squared()
                .max((c - a).norm_squared())
                .max((c - b).norm_squared());
            // Relative zero-area test.
            if cross.norm_squared() <= (1e-12 * max_edge_sq).powi(2) {
                skipped += 1;
                continue;
            }
            edge_sum += max_edge_sq.sqrt();
            tris.push([a, b, c]);
            kept.push(ti);
        }
        if tris.is_empty() {
            return Err(MetricsError::AllDegenerate);
        }

        let mut lo = tris[0][0];
        let mut hi = tris[0][0];
        for t in &tris {
            for p in t {
                lo = vec3(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
                hi = vec3(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
            }
        }
        let extent = hi - lo;
        let max_extent = extent.x.max(extent.y).max(extent.z).max(1e-9);
        let mean_edge = edge_sum / tris.len() as f64;
        let cell = mean_edge.max(max_extent / 64.0);
        let ncells = [
            ((extent.x / cell).ceil() as usize + 1).min(64),
            ((extent.y / cell).ceil() as usize + 1).min(64),
            ((extent.z / cell).ceil() as usize + 1).min(64),
        ];

        let mut grid = TriGrid {
            origin: lo,
            cell,
            ncells,
            bins: vec![Vec::new(); ncells[0] * ncells[1] * ncells[2]],
            tris,
            kept,
            skipped,
        };
        for (idx, t) in grid.tris.iter().enumerate() {
            let (mut tlo, mut thi) = (t[0], t[0]);
            for p in t {
                tlo = vec3(tlo.x.min(p.x), tlo.y.min(p.y), tlo.z.min(p.z));
                thi = vec3(thi.x.max(p.x), thi.y.max(p.y), thi.z.max(p.z));
            }
            let c_lo = grid.cell_of(tlo);
            let c_hi = grid.cell_of(thi);
            for cz in c_lo[2]..=c_hi[2] {
                for cy in c_lo[1]..=c_hi[1] {
                    for cx in c_lo[0]..=c_hi[0] {
                        let bin = cx + ncells[0] * (cy + ncells[1] * cz);
                        grid.bins[bin].push(idx as u32);
                    }
                }
            }
        }
        Ok(grid)
    }

    fn cell_of(&self, p: Vec3<f64>) -> [usize; 3] {
        let f = |v: f64, n: usize| -> usize {
            let c = ((v) / self.cell).floor() as isize;
            c.clamp(0, n as isize - 1) as usize
        };
        let rel = p - self.origin;
        [
            f(rel.x, self.ncells[0]),
            f(rel.y, self.ncells[1]),
            f(rel.z, self.ncells[2]),
        ]
    }

    /// Exact minimum distance from a point to any (kept) triangle.
    fn min_distance(&self, p: Vec3<f64>) -> f64 {
        let c0 = self.cell_of(p);
        let max_ring = (0..3)
            .map(|a| c0[a].max(self.ncells[a] - 1 - c0[a]))
            .max()
            .unwrap();
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            self.for_each_ring_cell(c0, ring, |bin| {
                for &ti in &self.bins[bin] {
                    let t = &self.tris[ti as usize];
                    let q = closest_point_on_triangle(p, t[0], t[1], t[2]);
                    let d = (p - q).norm();
                    if d < best {
                        best = d;
                    }
                }
            });
            // Unsearched triangles lie outside the searched box (cells past
            // Chebyshev radius `ring`); if the point is inside that box, the
            // box walls bound their distance from below.
            let box_lo = self.origin
                + vec3(
                    (c0[0] as f64 - ring as f64) * self.cell,
                    (c0[1] as f64 - ring as f64) * self.cell,
                    (c0[2] as f64 - ring as f64) * self.cell,
                );
            let box_hi = self.origin
                + vec3(
                    (c0[0] as f64 + ring as f64 + 1.0) * self.cell,
                    (c0[1] as f64 + ring as f64 + 1.0) * self.cell,
                    (c0[2] as f64 + ring as f64 + 1.0) * self.cell,
                );
            let margin = (p.x - box_lo.x)
                .min(box_hi.x - p.x)
                .min(p.y - box_lo.y)
                .min(box_hi.y - p.y)
                .min(p.z - box_lo.z)
                .min(box_hi.z - p.z);
            if margin > 0.0 && best <= margin {
                break;
            }
        }
        best
    }

    /// Visits every in-grid cell at Chebyshev distance exactly `ring`.
    fn for_each_ring_cell(&self, c0: [usize; 3], ring: usize, mut f: impl FnMut(usize)) {
        let r = ring as isize;
        let [cx, cy, cz] = [c0[0] as isize, c0[1] as isize, c0[2] as isize];
        let [nx, ny, nz] = [
            self.ncells[0] as isize,
            self.ncells[1] as isize,
            self.ncells[2] as isize,
        ];
        let mut visit = |x: isize, y: isize, z: isize| {
            if x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz {
                f((x + nx * (y + ny * z)) as usize);
            }
        };
        if ring == 0 {
            visit(cx, cy, cz);
            return;
        }
        for dz in -r..=r {
            for dy in -r..=r {
                if dz.abs() == r || dy.abs() == r {
                    for dx in -r..=r {
                        visit(cx + dx, cy + dy, cz + dz);
                    }
                } else {
                    visit(cx - r, cy + dy, cz + dz);
                    visit(cx + r, cy + dy, cz + dz);
                }
            }
        }
    }
}

/// Closest point on triangle `abc` to `p` (barycentric region walk).
fn closest_point_on_triangle(
    p: Vec3<f64>,
    a: Vec3<f64>,
    b: Vec3<f64>,
    c: Vec3<f64>,
) -> Vec3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

// ---------------------------------------------------------------------------
// Roughness
// ---------------------------------------------------------------------------

/// Mean |second difference| of radii along the rails (graph with radii).
pub fn surface_roughness<T: Real>(graph: &TubeGraph<T>) -> Result<f64, MetricsError> {
    let radii = graph
        .radii()
        .ok_or_else(|| MetricsError::ShapeMismatch("radii not populated".into()))?;
    roughness_from_radii(radii, graph.n_planes(), graph.n_angles())
}

/// Mean |r(i-1,a) - 2 r(i,a) + r(i+1,a)| over interior planes and angles.
pub fn roughness_from_radii<T: Real>(
    radii: &[T],
    n_planes: usize,
    n_angles: usize,
) -> Result<f64, MetricsError> {
    if n_planes < 3 {
        return Err(MetricsError::TooFewPlanes(n_planes));
    }
    if radii.len() != n_planes * n_angles {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} radii for {} planes x {} angles",
            radii.len(),
            n_planes,
            n_angles
        )));
    }
    let mut sum = 0.0;
    for a in 0..n_angles {
        for i in 1..n_planes - 1 {
            let prev = radii[(i - 1) * n_angles + a].widen();
            let mid = radii[i * n_angles + a].widen();
            let next = radii[(i + 1) * n_angles + a].widen();
            sum += (prev - 2.0 * mid + next).abs();
        }
    }
    Ok(sum / (n_angles * (n_planes - 2)) as f64)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Metrics for one evaluated segment.
#[derive(Debug, Clone, Copy)]
pub struct SegmentMetrics {
    pub dsc: f64,
    pub msd_mm: f64,
    pub hd_mm: f64,
    pub roughness_mm: f64,
}

/// Evaluates a predicted radius field against a reference on one segment:
/// mean cross-sectional Dice, symmetric surface distances between the two
/// analytically realized meshes, and roughness of the prediction.
pub fn evaluate_segment<T: Real>(
    pred: &[T],
    reference: &[T],
    graph: &TubeGraph<T>,
    centerline: &Centerline<T>,
) -> Result<SegmentMetrics, MetricsError> {
    let dsc = segment_dice(pred, reference, graph.n_planes(), graph.n_angles())?;
    let mesh_pred = Mesh {
        positions: realize_with_radii(graph, centerline, pred)?,
        triangles: graph.triangles().to_vec(),
    };
    let mesh_ref = Mesh {
        positions: realize_with_radii(graph, centerline, reference)?,
        triangles: graph.triangles().to_vec(),
    };
    let sd = surface_distances(&mesh_pred, &mesh_ref)?;
    let roughness = roughness_from_radii(pred, graph.n_planes(), graph.n_angles())?;
    Ok(SegmentMetrics {
        dsc,
        msd_mm: sd.msd_mm,
        hd_mm: sd.hd_mm,
        roughness_mm: roughness,
    })
}

/// One row of a metrics report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratum: Option<String>,
    pub dsc: f64,
    pub msd_mm: f64,
    pub hd_mm: f64,
    pub roughness_mm: f64,
}

/// Mean metrics over a set of segments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n_segments: usize,
    pub dsc: f64,
    pub msd_mm: f64,
    pub hd_mm: f64,
    pub roughness_mm: f64,
}

/// Per-segment metrics plus overall and per-stratum aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_segment: Vec<SegmentRow>,
    pub aggregate: AggregateRow,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub strata: BTreeMap<String, AggregateRow>,
}

fn aggregate_rows<'a>(rows: impl Iterator<Item = &'a SegmentRow> + Clone) -> AggregateRow {
    let n = rows.clone().count();
    let mean = |f: fn(&SegmentRow) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            rows.clone().map(f).sum::<f64>() / n as f64
        }
    };
    AggregateRow {
        n_segments: n,
        dsc: mean(|r| r.dsc),
        msd_mm: mean(|r| r.msd_mm),
        hd_mm: mean(|r| r.hd_mm),
        roughness_mm: mean(|r| r.roughness_mm),
    }
}

impl MetricsReport {
    pub fn from_rows(rows: Vec<SegmentRow>) -> Self {
        let aggregate = aggregate_rows(rows.iter());
        let mut strata = BTreeMap::new();
        let labels: std::collections::BTreeSet<String> =
            rows.iter().filter_map(|r| r.stratum.clone()).collect();
        for label in labels {
            let agg = aggregate_rows(rows.iter().filter(|r| r.stratum.as_deref() == Some(&label)));
            strata.insert(label, agg);
        }
        Self {
            per_segment: rows,
            aggregate,
            strata,
        }
    }

    /// CSV with one row per segment and a final `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment,stratum,dsc,msd_mm,hd_mm,roughness_mm\n");
        for r in &self.per_segment {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.id,
                r.stratum.as_deref().unwrap_or(""),
                r.dsc,
                r.msd_mm,
                r.hd_mm,
                r.roughness_mm
            ));
        }
        out.push_str(&format!(
            "mean,,{},{},{},{}\n",
            self.aggregate.dsc,
            self.aggregate.msd_mm,
            self.aggregate.hd_mm,
            self.aggregate.roughness_mm
        ));
        out
    }
}
