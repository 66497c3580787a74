//! Fixed-topology tube graphs over framed centerlines.
//!
//! One ring of `n_angles` equiangular vertices per centerline point; graph
//! edges connect ring neighbors within a cross-section and same-angle
//! vertices in adjacent cross-sections (the "rails"). Each quad between two
//! rings splits into two triangles for rendering; those diagonals are not
//! part of the graph neighborhood used for aggregation.
//!
//! Vertex `(plane i, angle slot a)` has index `i * n_angles + a` and polar
//! angle `phi = 2*pi*a / n_angles` in the plane's (normal, binormal) basis.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::centerline::Centerline;
use crate::scalar::Real;
use crate::vec3::{vec3, Vec3};
use crate::volume::{clip_normalize, Volume};

/// Errors from graph construction and use.
#[derive(Debug)]
pub enum MeshError {
    /// Cross-sections need at least 3 vertices.
    TooFewAngles(usize),
    /// The centerline has no frames built.
    MissingFrames,
    /// Operation needs per-vertex radii that are absent or invalid.
    BadRadii(String),
    /// Operation needs extracted features.
    MissingFeatures,
    /// Invalid sampling parameters.
    BadSampling(String),
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::TooFewAngles(n) => write!(f, "need >= 3 angles per ring, got {n}"),
            MeshError::MissingFrames => write!(f, "centerline frames not built"),
            MeshError::BadRadii(msg) => write!(f, "bad radii: {msg}"),
            MeshError::MissingFeatures => write!(f, "vertex features not extracted"),
            MeshError::BadSampling(msg) => write!(f, "bad sampling parameters: {msg}"),
            MeshError::Io(e) => write!(f, "mesh i/o error: {e}"),
            MeshError::Format(msg) => write!(f, "mesh format error: {msg}"),
        }
    }
}

impl std::error::Error for MeshError {}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e)
    }
}

/// Dense per-vertex feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Features<T> {
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Features<T> {
    pub fn zeros(n_vertices: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![T::zero(); n_vertices * width],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in &rows {
            assert_eq!(r.len(), width, "ragged feature rows");
            data.extend_from_slice(r);
        }
        Self { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[T] {
        &self.data[v * self.width..(v + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, v: usize) -> &mut [T] {
        &mut self.data[v * self.width..(v + 1) * self.width]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// Triangulated surface: positions plus index triples.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub positions: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Tube graph over a framed centerline.
#[derive(Debug, Clone)]
pub struct TubeGraph<T: Real> {
    n_planes: usize,
    n_angles: usize,
    adjacency: Vec<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
    radii: Option<Vec<T>>,
    features: Option<Features<T>>,
}

impl<T: Real> TubeGraph<T> {
    pub fn n_planes(&self) -> usize {
        self.n_planes
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_vertices(&self) -> usize {
        self.n_planes * self.n_angles
    }

    #[inline]
    pub fn vertex_index(&self, plane: usize, angle: usize) -> usize {
        plane * self.n_angles + angle
    }

    /// Polar angle of an angle slot, radians.
    pub fn angle(&self, slot: usize) -> T {
        T::of(2.0) * T::PI() * T::from_usize(slot).unwrap() / T::from_usize(self.n_angles).unwrap()
    }

    /// Graph adjacency (ring + rail edges only; no triangulation diagonals).
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn radii(&self) -> Option<&[T]> {
        self.radii.as_deref()
    }

    pub fn features(&self) -> Option<&Features<T>> {
        self.features.as_ref()
    }

    pub fn features_mut(&mut self) -> Option<&mut Features<T>> {
        self.features.as_mut()
    }

    /// Installs per-vertex radii; all must be finite and positive.
    pub fn set_radii(&mut self, radii: Vec<T>) -> Result<(), MeshError> {
        if radii.len() != self.n_vertices() {
            return Err(MeshError::BadRadii(format!(
                "expected {} radii, got {}",
                self.n_vertices(),
                radii.len()
            )));
        }
        if let Some(bad) = radii.iter().position(|r| !r.is_strictly_positive()) {
            return Err(MeshError::BadRadii(format!(
                "radius at vertex {bad} is not positive and finite"
            )));
        }
        self.radii = Some(radii);
        Ok(())
    }

    pub fn set_features(&mut self, features: Features<T>) -> Result<(), MeshError> {
        if features.n_rows() != self.n_vertices() {
            return Err(MeshError::Format(format!(
                "feature rows {} != vertex count {}",
                features.n_rows(),
                self.n_vertices()
            )));
        }
        self.features = Some(features);
        Ok(())
    }
}

/// Builds the tube graph topology for a framed centerline.
///
/// Ring edges `(i,a)-(i,a±1 mod n)`, rail edges `(i,a)-(i±1,a)`; each quad
/// `{(i,a),(i,a+1),(i+1,a+1),(i+1,a)}` splits along the `(i,a)-(i+1,a+1)`
/// diagonal into two outward-wound triangles.
pub fn build_graph<T: Real>(
    cl: &Centerline<T>,
    n_angles: usize,
) -> Result<TubeGraph<T>, MeshError> {
    if n_angles < 3 {
        return Err(MeshError::TooFewAngles(n_angles));
    }
    if cl.frames().is_none() {
        return Err(MeshError::MissingFrames);
    }
    let n_planes = cl.len();
    let nv = n_planes * n_angles;

    let mut adjacency = vec![Vec::with_capacity(4); nv];
    for i in 0..n_planes {
        for a in 0..n_angles {
            let v = i * n_angles + a;
            let ring_prev = i * n_angles + (a + n_angles - 1) % n_angles;
            let ring_next = i * n_angles + (a + 1) % n_angles;
            adjacency[v].push(ring_prev);
            adjacency[v].push(ring_next);
            if i > 0 {
                adjacency[v].push((i - 1) * n_angles + a);
            }
            if i + 1 < n_planes {
                adjacency[v].push((i + 1) * n_angles + a);
            }
        }
    }

    let mut triangles = Vec::with_capacity(2 * n_angles * (n_planes - 1));
    for i in 0..n_planes - 1 {
        for a in 0..n_angles {
            let a1 = (a + 1) % n_angles;
            let v00 = i * n_angles + a;
            let v01 = i * n_angles + a1;
            let v10 = (i + 1) * n_angles + a;
            let v11 = (i + 1) * n_angles + a1;
            // Outward winding for right-handed (tangent = normal x binormal
            // ... binormal = tangent x normal) frames.
            triangles.push([v00, v11, v10]);
            triangles.push([v00, v01, v11]);
        }
    }

    Ok(TubeGraph {
        n_planes,
        n_angles,
        adjacency,
        triangles,
        radii: None,
        features: None,
    })
}

/// Casts one ray per vertex and samples the volume along it.
///
/// Vertex `(i,a)` uses direction `cos(phi)*n_i + sin(phi)*b_i`; feature `k`
/// is the clipped, normalized intensity at radial offset `k * step_mm` from
/// the centerline point (offset 0 sits on the point itself).
pub fn extract_features<T: Real>(
    graph: &mut TubeGraph<T>,
    cl: &Centerline<T>,
    vol: &Volume<T>,
    n_samples: usize,
    step_mm: T,
) -> Result<(), MeshError> {
    if n_samples < 1 {
        return Err(MeshError::BadSampling("n_samples must be >= 1".into()));
    }
    if !step_mm.is_strictly_positive() {
        return Err(MeshError::BadSampling("step_mm must be > 0".into()));
    }
    let frames = cl.frames().ok_or(MeshError::MissingFrames)?;
    if cl.len() != graph.n_planes {
        return Err(MeshError::Format(format!(
            "centerline has {} points, graph has {} planes",
            cl.len(),
            graph.n_planes
        )));
    }

    let mut features = Features::zeros(graph.n_vertices(), n_samples);
    for (i, (&c, f)) in cl.points().iter().zip(frames).enumerate() {
        for a in 0..graph.n_angles {
            let phi = graph.angle(a);
            let dir = f.normal * phi.cos() + f.binormal * phi.sin();
            let row = features.row_mut(i * graph.n_angles + a);
            for (k, slot) in row.iter_mut().enumerate() {
                let p = c + dir * (step_mm * T::from_usize(k).unwrap());
                *slot = clip_normalize(vol.sample_trilinear(p));
            }
        }
    }
    graph.features = Some(features);
    Ok(())
}

/// Vertex positions from explicit per-vertex radii.
pub fn realize_with_radii<T: Real>(
    graph: &TubeGraph<T>,
    cl: &Centerline<T>,
    radii: &[T],
) -> Result<Vec<Vec3<T>>, MeshError> {
    let frames = cl.frames().ok_or(MeshError::MissingFrames)?;
    if radii.len() != graph.n_vertices() {
        return Err(MeshError::BadRadii(format!(
            "expected {} radii, got {}",
            graph.n_vertices(),
            radii.len()
        )));
    }
    if let Some(bad) = radii.iter().position(|r| !r.is_strictly_positive()) {
        return Err(MeshError::BadRadii(format!(
            "radius at vertex {bad} is not positive and finite"
        )));
    }
    let mut positions = Vec::with_capacity(graph.n_vertices());
    for i in 0..graph.n_planes {
        let c = cl.points()[i];
        let f = frames[i];
        for a in 0..graph.n_angles {
            let phi = graph.angle(a);
            let dir = f.normal * phi.cos() + f.binormal * phi.sin();
            positions.push(c + dir * radii[i * graph.n_angles + a]);
        }
    }
    Ok(positions)
}

/// Vertex positions from the radii stored on the graph.
pub fn realize_positions<T: Real>(
    graph: &TubeGraph<T>,
    cl: &Centerline<T>,
) -> Result<Vec<Vec3<T>>, MeshError> {
    let radii = graph
        .radii()
        .ok_or_else(|| MeshError::BadRadii("radii not populated".into()))?;
    realize_with_radii(graph, cl, radii)
}

/// Assembles a [`Mesh`] from a graph and realized positions.
pub fn mesh_from_positions<T: Real>(graph: &TubeGraph<T>, positions: Vec<Vec3<T>>) -> Mesh<T> {
    Mesh {
        positions,
        triangles: graph.triangles.clone(),
    }
}

/// Serializes a mesh as Wavefront OBJ text: one `v x y z` per vertex in
/// index order, one `f a b c` (1-based) per triangle.
pub fn export_obj<T: Real>(mesh: &Mesh<T>) -> String {
    let mut out = String::new();
    for p in &mesh.positions {
        out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

/// Parses the OBJ subset produced by [`export_obj`].
pub fn parse_obj(text: &str) -> Result<Mesh<f64>, MeshError> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Format(format!("line {}: {e}", ln + 1)))?;
                if coords.len() != 3 {
                    return Err(MeshError::Format(format!("line {}: vertex needs 3 coords", ln + 1)));
                }
                positions.push(vec3(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|t| {
                        // Tolerate `a/b/c` face syntax by taking the vertex id.
                        t.split('/').next().unwrap_or(t).parse::<usize>()
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Format(format!("line {}: {e}", ln + 1)))?;
                if idx.len() != 3 {
                    return Err(MeshError::Format(format!("line {}: face needs 3 indices", ln + 1)));
                }
                triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok(Mesh {
        positions,
        triangles,
    })
}

/// Breadth-first graph distances from a source vertex.
pub fn bfs_distances(adjacency: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &u in &adjacency[v] {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Unique undirected edges of the triangulation (quad edges + diagonals).
pub fn triangulation_edges(triangles: &[[usize; 3]]) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges
}

#[derive(Serialize, Deserialize)]
struct GraphCacheHeader {
    n_planes: usize,
    n_angles: usize,
    feature_width: usize,
    radii: Option<Vec<f64>>,
}

/// Caches a graph (with radii and features) as `<stem>.json` + `<stem>.bin`.
///
/// The blob holds features as little-endian f64, vertex-major. Topology is
/// regenerated on load from the plane/angle counts.
pub fn save_cache<T: Real>(graph: &TubeGraph<T>, stem: &Path) -> Result<(), MeshError> {
    let header = GraphCacheHeader {
        n_planes: graph.n_planes,
        n_angles: graph.n_angles,
        feature_width: graph.features.as_ref().map_or(0, |f| f.width()),
        radii: graph
            .radii
            .as_ref()
            .map(|r| r.iter().map(|v| v.widen()).collect()),
    };
    let text = serde_json::to_string(&header).map_err(|e| MeshError::Format(format!("{e}")))?;
    std::fs::write(stem.with_extension("json"), text)?;

    let mut bytes = Vec::new();
    if let Some(features) = &graph.features {
        bytes.reserve(features.data().len() * 8);
        for v in features.data() {
            bytes.extend_from_slice(&v.widen().to_le_bytes());
        }
    }
    std::fs::write(stem.with_extension("bin"), bytes)?;
    Ok(())
}

/// Loads a graph cached by [`save_cache`].
pub fn load_cache<T: Real>(stem: &Path) -> Result<TubeGraph<T>, MeshError> {
    let text = std::fs::read_to_string(stem.with_extension("json"))?;
    let header: GraphCacheHeader =
        serde_json::from_str(&text).map_err(|e| MeshError::Format(format!("{e}")))?;

    // Rebuild topology directly; geometry is not needed for the structure.
    if header.n_angles < 3 {
        return Err(MeshError::TooFewAngles(header.n_angles));
    }
    let synthetic: Vec<Vec3<T>> = (0..header.n_planes)
        .map(|i| vec3(T::zero(), T::zero(), T::from_usize(i).unwrap()))
        .collect();
    let cl = Centerline::new(synthetic)
        .map_err(|e| MeshError::Format(format!("{e}")))?
        .with_frames()
        .map_err(|e| MeshError::Format(format!("{e}")))?;
    let mut graph = build_graph(&cl, header.n_angles)?;

    if header.feature_width > 0 {
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        let expected = graph.n_vertices() * header.feature_width * 8;
        if bytes.len() != expected {
            return Err(MeshError::Format(format!(
                "feature blob holds {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let mut features = Features::zeros(graph.n_vertices(), header.feature_width);
        for (slot, chunk) in features.data.iter_mut().zip(bytes.chunks_exact(8)) {
            *slot = T::of(f64::from_le_bytes([
                chunk[0], chunk[1], chunk[2], chunk[3], chunk[4], chunk[5], chunk[6], chunk[7],
            ]));
        }
        graph.features = Some(features);
    }
    if let Some(radii) = header.radii {
        graph.set_radii(radii.into_iter().map(T::of).collect())?;
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::vec3;
    use crate::volume::{generate_phantom_auto, CurveSpec, PhantomSpec, RadiusProfile, Volume};

    fn straight_cl(n_planes: usize) -> Centerline<f64> {
        Centerline::new(
            (0..n_planes)
                .map(|i| vec3(0.0, 0.0, i as f64 * 0.5))
                .collect(),
        )
        .unwrap()
        .with_frames()
        .unwrap()
    }

    #[test]
    fn counts_match_ring_and_rail_construction() {
        let g = build_graph(&straight_cl(10), 24).unwrap();
        assert_eq!(g.n_vertices(), 240);
        assert_eq!(g.triangles().len(), 432);
    }

    #[test]
    fn two_plane_three_angle_graph_is_all_degree_three() {
        let g = build_graph(&straight_cl(2), 3).unwrap();
        assert_eq!(g.n_vertices(), 6);
        for adj in g.adjacency() {
            assert_eq!(adj.len(), 3);
        }
    }

    #[test]
    fn interior_vertex_has_two_ring_and_two_rail_neighbors() {
        let g = build_graph(&straight_cl(4), 5).unwrap();
        let v = g.vertex_index(2, 1);
        let mut expect = vec![
            g.vertex_index(2, 0),
            g.vertex_index(2, 2),
            g.vertex_index(1, 1),
            g.vertex_index(3, 1),
        ];
        expect.sort_unstable();
        let mut got = g.adjacency()[v].clone();
        got.sort_unstable();
        assert_eq!(got, expect);
        assert_eq!(got.len(), 4);
    }

    #[test]
    fn adjacency_is_symmetric_without_self_loops() {
        let g = build_graph(&straight_cl(6), 7).unwrap();
        for (v, adj) in g.adjacency().iter().enumerate() {
            for &u in adj {
                assert_ne!(u, v, "no self loops");
                assert!(g.adjacency()[u].contains(&v), "edge {v}-{u} not symmetric");
            }
        }
        // End-plane vertices have degree 3, interior 4.
        for i in 0..g.n_planes() {
            for a in 0..g.n_angles() {
                let deg = g.adjacency()[g.vertex_index(i, a)].len();
                if i == 0 || i == g.n_planes() - 1 {
                    assert_eq!(deg, 3);
                } else {
                    assert_eq!(deg, 4);
                }
            }
        }
    }

    #[test]
    fn topology_is_independent_of_geometry() {
        let bent = Centerline::new(
            (0..8)
                .map(|i| {
                    let t = i as f64 * 0.4;
                    vec3(5.0 * t.cos(), 5.0 * t.sin(), 0.7 * t)
                })
                .collect(),
        )
        .unwrap()
        .with_frames()
        .unwrap();
        let a = build_graph(&straight_cl(8), 12).unwrap();
        let b = build_graph(&bent, 12).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        assert_eq!(a.triangles(), b.triangles());
    }

    #[test]
    fn surface_is_a_manifold_cylinder() {
        let g = build_graph(&straight_cl(7), 9).unwrap();
        let edges = triangulation_edges(g.triangles());

        // Euler characteristic of an open cylinder.
        let v = g.n_vertices() as isize;
        let e = edges.len() as isize;
        let f = g.triangles().len() as isize;
        assert_eq!(v - e + f, 0);

        // Every non-boundary edge borders exactly two triangles.
        let mut edge_uses: std::collections::BTreeMap<(usize, usize), usize> =
            std::collections::BTreeMap::new();
        for t in g.triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edge_uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let boundary: Vec<_> = edge_uses
            .iter()
            .filter(|(_, &uses)| uses == 1)
            .map(|(&e, _)| e)
            .collect();
        assert!(edge_uses.values().all(|&u| u == 1 || u == 2));
        // Two boundary loops: the first and last rings.
        assert_eq!(boundary.len(), 2 * g.n_angles());
        for (a, b) in &boundary {
            let ring_a = a / g.n_angles();
            let ring_b = b / g.n_angles();
            assert_eq!(ring_a, ring_b);
            assert!(ring_a == 0 || ring_a == g.n_planes() - 1);
        }
    }

    #[test]
    fn winding_points_outward() {
        let cl = straight_cl(3);
        let g = build_graph(&cl, 16).unwrap();
        let radii = vec![2.0; g.n_vertices()];
        let positions = realize_with_radii(&g, &cl, &radii).unwrap();
        for t in g.triangles() {
            let [a, b, c] = *t;
            let n = (positions[b] - positions[a]).cross(positions[c] - positions[a]);
            let centroid = (positions[a] + positions[b] + positions[c]) / 3.0;
            let outward = vec3(centroid.x, centroid.y, 0.0);
            assert!(n.dot(outward) > 0.0, "triangle {t:?} winds inward");
        }
    }

    #[test]
    fn constant_volume_gives_constant_features() {
        let cl = straight_cl(4);
        let mut g = build_graph(&cl, 6).unwrap();
        let vol = Volume::filled(
            [40, 40, 40],
            vec3(0.5, 0.5, 0.5),
            vec3(-10.0, -10.0, -8.0),
            500.0,
        )
        .unwrap();
        extract_features(&mut g, &cl, &vol, 32, 0.1).unwrap();
        let feats = g.features().unwrap();
        for v in 0..g.n_vertices() {
            for &x in feats.row(v) {
                assert!((x - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sharp_tube_features_step_at_the_boundary() {
        // Fine 0.1 mm grid so trilinear bleed stays within one sample slot.
        let spec = PhantomSpec {
            curve: CurveSpec::Straight {
                start: [0.0, 0.0, -2.0],
                end: [0.0, 0.0, 2.0],
            },
            radius_profile: RadiusProfile::constant(1.5),
            lumen_hu: 400.0,
            background_hu: 50.0,
            calcifications: Vec::new(),
            noise_sigma_hu: 0.0,
            blur_sigma_mm: 0.0,
            seed: 0,
        };
        let (vol, _) = generate_phantom_auto::<f64>(&spec, 0.1).unwrap();
        let cl = Centerline::new(vec![
            vec3(0.0, 0.0, -1.0),
            vec3(0.0, 0.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ])
        .unwrap()
        .with_frames()
        .unwrap();
        let mut g = build_graph(&cl, 24).unwrap();
        extract_features(&mut g, &cl, &vol, 32, 0.1).unwrap();
        let feats = g.features().unwrap();
        for v in 0..g.n_vertices() {
            let row = feats.row(v);
            // Offsets 0..=3.1 mm in 0.1 steps: slot 14 = 1.4 mm (inside),
            // slot 16 = 1.6 mm (outside).
            assert!((row[14] - 0.4).abs() < 1e-9, "inside sample {}", row[14]);
            assert!((row[16] - 0.05).abs() < 1e-9, "outside sample {}", row[16]);
        }
    }

    #[test]
    fn realized_positions_lie_on_the_cylinder() {
        let cl = straight_cl(5);
        let g = build_graph(&cl, 24).unwrap();
        let positions = realize_with_radii(&g, &cl, &vec![2.0; g.n_vertices()]).unwrap();
        for p in &positions {
            assert!((p.x * p.x + p.y * p.y - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_radii_stay_near_the_centerline() {
        let cl = straight_cl(3);
        let g = build_graph(&cl, 8).unwrap();
        let positions = realize_with_radii(&g, &cl, &vec![0.001; g.n_vertices()]).unwrap();
        for (v, p) in positions.iter().enumerate() {
            let c = cl.points()[v / 8];
            assert!((*p - c).norm() <= 0.001 + 1e-15);
        }
    }

    #[test]
    fn alternating_radii_alternate_distances() {
        let cl = straight_cl(3);
        let g = build_graph(&cl, 24).unwrap();
        let mut radii = vec![1.0; g.n_vertices()];
        for a in 0..24 {
            if a % 2 == 1 {
                radii[g.vertex_index(1, a)] = 2.0;
            }
        }
        let positions = realize_with_radii(&g, &cl, &radii).unwrap();
        let c = cl.points()[1];
        for a in 0..24 {
            let d = (positions[g.vertex_index(1, a)] - c).norm();
            let expect = if a % 2 == 1 { 2.0 } else { 1.0 };
            assert!((d - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unpopulated_or_bad_radii() {
        let cl = straight_cl(3);
        let mut g = build_graph(&cl, 6).unwrap();
        assert!(realize_positions(&g, &cl).is_err());
        assert!(g.set_radii(vec![1.0; 5]).is_err());
        let mut radii = vec![1.0; g.n_vertices()];
        radii[3] = 0.0;
        assert!(g.set_radii(radii).is_err());
    }

    #[test]
    fn obj_export_counts_and_roundtrip() {
        let cl = straight_cl(2);
        let g = build_graph(&cl, 3).unwrap();
        let positions = realize_with_radii(&g, &cl, &[1.25; 6]).unwrap();
        let mesh = mesh_from_positions(&g, positions);
        let text = export_obj(&mesh);
        let v_lines = text.lines().filter(|l| l.starts_with("v ")).count();
        let f_lines = text.lines().filter(|l| l.starts_with("f ")).count();
        assert_eq!(v_lines, 6);
        assert_eq!(f_lines, 6);

        let parsed = parse_obj(&text).unwrap();
        assert_eq!(parsed.positions.len(), mesh.positions.len());
        assert_eq!(parsed.triangles, mesh.triangles);
        for (a, b) in parsed.positions.iter().zip(&mesh.positions) {
            assert!((*a - *b).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_fewer_than_three_angles() {
        let cl = straight_cl(3);
        assert!(matches!(build_graph(&cl, 2), Err(MeshError::TooFewAngles(2))));
    }

    #[test]
    fn features_commute_with_rigid_motion() {
        // Translation: shift the volume origin and the centerline together.
        let spec = PhantomSpec {
            curve: CurveSpec::Straight {
                start: [0.0, 0.0, -3.0],
                end: [0.0, 0.0, 3.0],
            },
            radius_profile: RadiusProfile::constant(1.4),
            lumen_hu: 400.0,
            background_hu: 50.0,
            calcifications: Vec::new(),
            noise_sigma_hu: 0.0,
            blur_sigma_mm: 0.3,
            seed: 0,
        };
        let (vol, _) = generate_phantom_auto::<f64>(&spec, 0.35).unwrap();
        let cl = Centerline::new(vec![
            vec3(0.1, -0.2, -1.5),
            vec3(0.0, 0.0, 0.0),
            vec3(-0.1, 0.2, 1.5),
        ])
        .unwrap()
        .with_frames()
        .unwrap();
        let mut g0 = build_graph(&cl, 24).unwrap();
        extract_features(&mut g0, &cl, &vol, 32, 0.1).unwrap();

        let shift = vec3(3.25, -1.5, 0.75);
        let vol_t = Volume::new(
            vol.dims(),
            vol.spacing(),
            vol.origin() + shift,
            vol.data().to_vec(),
        )
        .unwrap();
        let cl_t = Centerline::new(cl.points().iter().map(|p| *p + shift).collect())
            .unwrap()
            .with_frames()
            .unwrap();
        let mut g_t = build_graph(&cl_t, 24).unwrap();
        extract_features(&mut g_t, &cl_t, &vol_t, 32, 0.1).unwrap();
        for (a, b) in g0.features().unwrap().data().iter().zip(g_t.features().unwrap().data()) {
            assert!((a - b).abs() < 1e-6);
        }

        // Rotation by 90 degrees about z: permute the voxel grid and rotate
        // the centerline; frames rotate with the tangents by construction.
        let dims = vol.dims();
        let rot = |p: Vec3<f64>| vec3(-p.y, p.x, p.z);
        let mut rdata = vec![0.0; vol.data().len()];
        // new grid: x' in [-(old y max)..], choose origin accordingly
        let new_dims = [dims[1], dims[0], dims[2]];
        let old_origin = vol.origin();
        let old_sp = vol.spacing();
        let new_origin = vec3(
            -(old_origin.y + old_sp.y * (dims[1] - 1) as f64),
            old_origin.x,
            old_origin.z,
        );
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    // voxel (i,j,k) at p maps to rot(p) = (-y, x, z)
                    let ni = dims[1] - 1 - j;
                    let nj = i;
                    rdata[ni + new_dims[0] * (nj + new_dims[1] * k)] = vol.voxel(i, j, k);
                }
            }
        }
        let vol_r = Volume::new(new_dims, vec3(old_sp.y, old_sp.x, old_sp.z), new_origin, rdata)
            .unwrap();
        let cl_r = Centerline::new(cl.points().iter().map(|p| rot(*p)).collect())
            .unwrap()
            .with_frames()
            .unwrap();
        let mut g_r = build_graph(&cl_r, 24).unwrap();
        extract_features(&mut g_r, &cl_r, &vol_r, 32, 0.1).unwrap();

        // The initial-normal convention is axis-dependent, so compare feature
        // ROWS as sets per plane: rotating the whole scene by 90 degrees about
        // z maps ray angles onto other ray angles exactly when the normal
        // convention shifts slots; find the slot offset from plane 0.
        let f0 = g0.features().unwrap();
        let fr = g_r.features().unwrap();
        let n_angles = 24;
        let mut offset = None;
        'outer: for shift_a in 0..n_angles {
            for k in 0..32 {
                let a0 = f0.row(g0.vertex_index(0, 0))[k];
                let ar = fr.row(g_r.vertex_index(0, shift_a))[k];
                if (a0 - ar).abs() > 1e-6 {
                    continue 'outer;
                }
            }
            offset = Some(shift_a);
            break;
        }
        let offset = offset.expect("rotated features must match at some angle offset");
        for i in 0..g0.n_planes() {
            for a in 0..n_angles {
                let ra = (a + offset) % n_angles;
                let rowa = f0.row(g0.vertex_index(i, a));
                let rowb = fr.row(g_r.vertex_index(i, ra));
                for (x, y) in rowa.iter().zip(rowb) {
                    assert!((x - y).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn cache_roundtrip_preserves_features_and_radii() {
        let dir = tempfile::tempdir().unwrap();
        let cl = straight_cl(4);
        let mut g = build_graph(&cl, 6).unwrap();
        let nv = g.n_vertices();
        let rows: Vec<Vec<f64>> = (0..nv)
            .map(|v| (0..5).map(|k| (v * 5 + k) as f64 * 0.013).collect())
            .collect();
        g.set_features(Features::from_rows(rows)).unwrap();
        g.set_radii((0..nv).map(|v| 1.0 + v as f64 * 0.01).collect()).unwrap();

        let stem = dir.path().join("graph");
        save_cache(&g, &stem).unwrap();
        let back: TubeGraph<f64> = load_cache(&stem).unwrap();
        assert_eq!(back.n_planes(), g.n_planes());
        assert_eq!(back.n_angles(), g.n_angles());
        assert_eq!(back.adjacency(), g.adjacency());
        assert_eq!(back.features().unwrap().data(), g.features().unwrap().data());
        assert_eq!(back.radii().unwrap(), g.radii().unwrap());
    }

    #[test]
    fn bfs_measures_ring_and_rail_hops() {
        let g = build_graph(&straight_cl(5), 8).unwrap();
        let d = bfs_distances(g.adjacency(), g.vertex_index(2, 0));
        assert_eq!(d[g.vertex_index(2, 0)], Some(0));
        assert_eq!(d[g.vertex_index(2, 1)], Some(1));
        assert_eq!(d[g.vertex_index(0, 0)], Some(2));
        assert_eq!(d[g.vertex_index(4, 4)], Some(6));
    }
}
