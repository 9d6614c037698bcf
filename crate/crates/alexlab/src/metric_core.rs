//! Finite metric spaces and the Alexandrov comparison machinery on them.
//!
//! A space is a finite point set whose pairwise distances come either
//! from a closed-form model-space metric or from shortest paths on a
//! weighted graph. Everything downstream (volume checks, excess
//! verification, criticality scans) consumes the uniform interface
//! here: distances, geodesics, and quadruple defects.

use crate::generators::AnalyticSpace;
use crate::model_plane::{comparison_angle, PlaneError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

/// Exact-backing tolerance for the quadruple condition: pure
/// floating-point slack, since the distances carry no discretization
/// error.
pub const EXACT_QUADRUPLE_TOL: f64 = 1e-6;

/// Default number of segments a closed-form geodesic is discretized
/// into. A power of two, so symmetric configurations place a vertex
/// exactly at the midpoint.
pub const DEFAULT_GEODESIC_SEGMENTS: usize = 256;

/// Shortest-path rows kept in the per-space cache. Bounds memory on
/// graph backings; eviction is FIFO and therefore deterministic.
const ROW_CACHE_CAP: usize = 256;

/// Seed for the build-time triangle-inequality spot check. Fixed so
/// that construction is reproducible.
const BUILD_CHECK_SEED: u64 = 0x0A1E;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("point index {index} out of range (space has {count} points)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("points {points:?} must be pairwise distinct")]
    NotDistinct { points: Vec<usize> },
    #[error("degenerate configuration: points {points:?} include a coincident pair")]
    CoincidentPoints { points: Vec<usize> },
    #[error("comparison-plane evaluation failed: {0}")]
    Plane(#[from] PlaneError),
    #[error("graph edge ({i}, {j}) has non-positive weight {w}")]
    BadEdgeWeight { i: usize, j: usize, w: f64 },
    #[error("graph edge ({i}, {j}) out of range (vertex count {count})")]
    EdgeOutOfRange { i: usize, j: usize, count: usize },
    #[error("self-loop at vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("graph is not connected: vertex {vertex} is unreachable from vertex 0")]
    Disconnected { vertex: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error(
        "triangle inequality failed at sampled triple ({i}, {j}, {k}): \
         d(i,k) = {dik} exceeds d(i,j) + d(j,k) = {sum}"
    )]
    MetricViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        sum: f64,
    },
    #[error("invalid point {index}: {reason}")]
    InvalidPoint { index: usize, reason: String },
    #[error("empty point set")]
    Empty,
}

struct SsspRow {
    dist: Vec<f64>,
    pred: Vec<u32>,
}

/// Binary-heap entry ordered so the smallest distance pops first, ties
/// broken by the smaller vertex index. Total order via `total_cmp`.
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

struct GraphBacking {
    adj: Vec<Vec<(u32, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    rows: Mutex<RowCache>,
}

#[derive(Default)]
struct RowCache {
    map: HashMap<usize, std::sync::Arc<SsspRow>>,
    order: VecDeque<usize>,
}

impl RowCache {
    fn get_or_compute(
        &mut self,
        src: usize,
        adj: &[Vec<(u32, f64)>],
    ) -> std::sync::Arc<SsspRow> {
        if let Some(row) = self.map.get(&src) {
            return row.clone();
        }
        let row = std::sync::Arc::new(dijkstra(adj, src));
        if self.order.len() == ROW_CACHE_CAP {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
        self.order.push_back(src);
        self.map.insert(src, row.clone());
        row
    }
}

fn dijkstra(adj: &[Vec<(u32, f64)>], src: usize) -> SsspRow {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![u32::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    pred[src] = src as u32;
    heap.push(HeapEntry {
        dist: 0.0,
        node: src as u32,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let v = v as usize;
            if done[v] {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = node;
                heap.push(HeapEntry {
                    dist: nd,
                    node: v as u32,
                });
            } else if nd == dist[v] && node < pred[v] {
                // equal-length paths resolve to the smallest predecessor,
                // making path reconstruction reproducible
                pred[v] = node;
            }
        }
    }
    SsspRow { dist, pred }
}

/// Shortest distance from the source set to every vertex.
fn multi_source_distances(adj: &[Vec<(u32, f64)>], sources: &[u32]) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s as usize] > 0.0 {
            dist[s as usize] = 0.0;
            heap.push(HeapEntry { dist: 0.0, node: s });
        }
    }
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let v = v as usize;
            let nd = d + w;
            if !done[v] && nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    node: v as u32,
                });
            }
        }
    }
    dist
}

enum Backing {
    Exact(AnalyticSpace),
    Graph(GraphBacking),
}

/// A finite metric space: points plus a distance oracle.
pub struct FiniteMetricSpace {
    points: Vec<Vec<f64>>,
    backing: Backing,
    dimension_hint: usize,
    delta_net: OnceLock<f64>,
}

/// A discretized minimizing geodesic. Closed-form backings carry chart
/// coordinates of points on the true curve; graph backings carry the
/// vertex indices of the shortest path.
#[derive(Clone, Debug)]
pub struct Geodesic {
    pub length: f64,
    pub verts: GeodesicVerts,
}

#[derive(Clone, Debug)]
pub enum GeodesicVerts {
    Coords(Vec<Vec<f64>>),
    Indices(Vec<u32>),
}

impl Geodesic {
    pub fn vertex_count(&self) -> usize {
        match &self.verts {
            GeodesicVerts::Coords(v) => v.len(),
            GeodesicVerts::Indices(v) => v.len(),
        }
    }
}

impl FiniteMetricSpace {
    /// Build a space whose distances are evaluated by the closed-form
    /// metric of `space`. Validates every point against the space
    /// domain and spot-checks the triangle inequality on `10 * count`
    /// seeded triples.
    pub fn from_exact_points(
        space: &AnalyticSpace,
        points: Vec<Vec<f64>>,
    ) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            space
                .validate_point(p)
                .map_err(|e| SpaceError::InvalidPoint {
                    index,
                    reason: e.to_string(),
                })?;
        }
        let fms = FiniteMetricSpace {
            points,
            dimension_hint: space.dimension(),
            backing: Backing::Exact(space.clone()),
            delta_net: OnceLock::new(),
        };
        fms.spot_check_triangle()?;
        Ok(fms)
    }

    /// Build a space metrized by shortest paths on an undirected
    /// weighted graph. The graph must be connected, loop-free, and
    /// positively weighted. Shortest-path distances satisfy the
    /// triangle inequality by construction, so no spot check runs.
    pub fn build_from_graph(
        points: Vec<Vec<f64>>,
        edges: &[(usize, usize, f64)],
        dimension_hint: usize,
    ) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Empty);
        }
        let n = points.len();
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(SpaceError::EdgeOutOfRange { i, j, count: n });
            }
            if i == j {
                return Err(SpaceError::SelfLoop { vertex: i });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(SpaceError::BadEdgeWeight { i, j, w });
            }
            adj[i].push((j as u32, w));
            adj[j].push((i as u32, w));
        }
        // connectivity sweep from vertex 0
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v as usize);
                }
            }
        }
        if let Some(vertex) = seen.iter().position(|s| !s) {
            return Err(SpaceError::Disconnected { vertex });
        }
        for nb in &mut adj {
            nb.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        }
        Ok(FiniteMetricSpace {
            points,
            dimension_hint,
            backing: Backing::Graph(GraphBacking {
                adj,
                edges: edges.to_vec(),
                rows: Mutex::new(RowCache::default()),
            }),
            delta_net: OnceLock::new(),
        })
    }

    fn spot_check_triangle(&self) -> Result<(), SpaceError> {
        let n = self.points.len();
        if n < 3 {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(BUILD_CHECK_SEED);
        for _ in 0..10 * n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let k = rng.gen_range(0..n);
            let dik = self.distance(i, k);
            let sum = self.distance(i, j) + self.distance(j, k);
            let slack = 1e-9 * sum.max(1e-9);
            if dik > sum + slack {
                return Err(SpaceError::MetricViolation { i, j, k, dik, sum });
            }
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn dimension_hint(&self) -> usize {
        self.dimension_hint
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn backing_name(&self) -> &'static str {
        match self.backing {
            Backing::Exact(_) => "exact",
            Backing::Graph(_) => "graph",
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(self.backing, Backing::Graph(_))
    }

    /// The generating model space, when distances are closed-form.
    pub fn analytic_space(&self) -> Option<&AnalyticSpace> {
        match &self.backing {
            Backing::Exact(s) => Some(s),
            Backing::Graph(_) => None,
        }
    }

    /// Edge list, when the metric is graph-backed.
    pub fn graph_edges(&self) -> Option<&[(usize, usize, f64)]> {
        match &self.backing {
            Backing::Exact(_) => None,
            Backing::Graph(g) => Some(&g.edges),
        }
    }

    fn check_index(&self, index: usize) -> Result<(), SpaceError> {
        if index >= self.points.len() {
            return Err(SpaceError::IndexOutOfRange {
                index,
                count: self.points.len(),
            });
        }
        Ok(())
    }

    /// Distance between two points by index.
    ///
    /// Panics if either index is out of range; public entry points
    /// validate indices before reaching this.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        assert!(
            i < self.points.len() && j < self.points.len(),
            "point index out of range"
        );
        if i == j {
            return 0.0;
        }
        match &self.backing {
            Backing::Exact(space) => space.distance_unchecked(&self.points[i], &self.points[j]),
            Backing::Graph(g) => {
                let row = g.rows.lock().unwrap().get_or_compute(i, &g.adj);
                row.dist[j]
            }
        }
    }

    /// Resolution of the point set: the largest nearest-neighbor
    /// distance. For graph backings the nearest neighbor in the path
    /// metric is always across the lightest incident edge. Computed
    /// once and cached.
    pub fn delta_net(&self) -> f64 {
        *self.delta_net.get_or_init(|| {
            let n = self.points.len();
            if n < 2 {
                return 0.0;
            }
            match &self.backing {
                Backing::Exact(space) => {
                    let mut worst = 0.0f64;
                    for i in 0..n {
                        let mut nearest = f64::INFINITY;
                        for j in 0..n {
                            if i != j {
                                let d = space
                                    .distance_unchecked(&self.points[i], &self.points[j]);
                                if d < nearest {
                                    nearest = d;
                                }
                            }
                        }
                        worst = worst.max(nearest);
                    }
                    worst
                }
                Backing::Graph(g) => g
                    .adj
                    .iter()
                    .map(|nb| {
                        nb.iter()
                            .map(|&(_, w)| w)
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0f64, f64::max),
            }
        })
    }

    /// Tolerance for quadruple-defect sign checks on this backing:
    /// floating-point slack for exact metrics, three net resolutions
    /// for graph surrogates.
    pub fn quadruple_tolerance(&self) -> f64 {
        match self.backing {
            Backing::Exact(_) => EXACT_QUADRUPLE_TOL,
            Backing::Graph(_) => 3.0 * self.delta_net(),
        }
    }

    /// A minimizing geodesic from `p` to `q` with the default
    /// discretization density.
    pub fn geodesic(&self, p: usize, q: usize) -> Result<Geodesic, SpaceError> {
        self.geodesic_with_segments(p, q, DEFAULT_GEODESIC_SEGMENTS)
    }

    /// A minimizing geodesic discretized into at least `segments`
    /// pieces (closed-form backings only; graph paths keep their own
    /// vertex count).
    pub fn geodesic_with_segments(
        &self,
        p: usize,
        q: usize,
        segments: usize,
    ) -> Result<Geodesic, SpaceError> {
        self.check_index(p)?;
        self.check_index(q)?;
        if p == q {
            let verts = match &self.backing {
                Backing::Exact(_) => GeodesicVerts::Coords(vec![self.points[p].clone()]),
                Backing::Graph(_) => GeodesicVerts::Indices(vec![p as u32]),
            };
            return Ok(Geodesic { length: 0.0, verts });
        }
        match &self.backing {
            Backing::Exact(space) => {
                let segments = segments.max(1);
                let verts =
                    space.geodesic_points(&self.points[p], &self.points[q], segments);
                Ok(Geodesic {
                    length: space.distance_unchecked(&self.points[p], &self.points[q]),
                    verts: GeodesicVerts::Coords(verts),
                })
            }
            Backing::Graph(g) => {
                let row = g.rows.lock().unwrap().get_or_compute(p, &g.adj);
                let mut path = vec![q as u32];
                let mut v = q;
                while v != p {
                    let pv = row.pred[v] as usize;
                    debug_assert!(pv != u32::MAX as usize, "graph validated connected");
                    path.push(pv as u32);
                    v = pv;
                }
                path.reverse();
                Ok(Geodesic {
                    length: row.dist[q],
                    verts: GeodesicVerts::Indices(path),
                })
            }
        }
    }

    /// Distance from point `x` to the nearest vertex of a discretized
    /// geodesic of this space.
    ///
    /// Panics if the geodesic's vertex representation does not match
    /// this space's backing.
    pub fn distance_to_geodesic(&self, x: usize, geo: &Geodesic) -> f64 {
        assert!(x < self.points.len(), "point index out of range");
        match (&self.backing, &geo.verts) {
            (Backing::Exact(space), GeodesicVerts::Coords(vs)) => vs
                .iter()
                .map(|v| space.distance_unchecked(&self.points[x], v))
                .fold(f64::INFINITY, f64::min),
            (Backing::Graph(g), GeodesicVerts::Indices(is)) => {
                let row = g.rows.lock().unwrap().get_or_compute(x, &g.adj);
                is.iter()
                    .map(|&i| row.dist[i as usize])
                    .fold(f64::INFINITY, f64::min)
            }
            _ => panic!("geodesic representation does not match space backing"),
        }
    }

    /// Distance from every point of the space to the nearest vertex of
    /// the geodesic. One pass; on graph backings a single multi-source
    /// shortest-path sweep.
    pub fn distances_to_geodesic(&self, geo: &Geodesic) -> Vec<f64> {
        match (&self.backing, &geo.verts) {
            (Backing::Exact(space), GeodesicVerts::Coords(vs)) => self
                .points
                .iter()
                .map(|x| {
                    vs.iter()
                        .map(|v| space.distance_unchecked(x, v))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect(),
            (Backing::Graph(g), GeodesicVerts::Indices(is)) => {
                multi_source_distances(&g.adj, is)
            }
            _ => panic!("geodesic representation does not match space backing"),
        }
    }

    /// Defect of the quadruple condition at curvature `kappa`: `2 pi`
    /// minus the sum of the three comparison angles at `p` spanned by
    /// `a`, `b`, `c`. Non-negative (up to tolerance) on every quadruple
    /// iff the sampled space is consistent with Alexandrov curvature
    /// `>= kappa`.
    pub fn quadruple_defect(
        &self,
        kappa: f64,
        p: usize,
        a: usize,
        b: usize,
        c: usize,
    ) -> Result<f64, SpaceError> {
        for &i in &[p, a, b, c] {
            self.check_index(i)?;
        }
        let idx = [p, a, b, c];
        for s in 0..4 {
            for t in s + 1..4 {
                if idx[s] == idx[t] {
                    return Err(SpaceError::NotDistinct {
                        points: idx.to_vec(),
                    });
                }
            }
        }
        let sides = QuadrupleSides {
            pa: self.distance(p, a),
            pb: self.distance(p, b),
            pc: self.distance(p, c),
            ab: self.distance(a, b),
            bc: self.distance(b, c),
            ca: self.distance(c, a),
        };
        if sides.min() <= 0.0 {
            return Err(SpaceError::CoincidentPoints {
                points: idx.to_vec(),
            });
        }
        Ok(sides.defect(kappa)?)
    }

    /// Largest curvature bound `k` in `[-4, 4]` consistent with the
    /// quadruple condition on `sample_count` seeded random quadruples,
    /// located by bisection. Returns `-4` outright when even that floor
    /// fails, `4` when the whole interval passes.
    pub fn estimate_curvature_bound(
        &self,
        sample_count: usize,
        seed: u64,
    ) -> Result<f64, SpaceError> {
        let n = self.points.len();
        if n < 4 {
            return Err(SpaceError::TooFewPoints { need: 4, got: n });
        }
        let tol = self.quadruple_tolerance();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // graph backings draw quadruples from a bounded seeded pool so
        // the shortest-path row cache stays warm
        let pool: Vec<usize> = if self.is_graph() {
            let cap = n.min(128);
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all.truncate(cap);
            all
        } else {
            (0..n).collect()
        };

        let mut quads: Vec<QuadrupleSides> = Vec::with_capacity(sample_count);
        let mut attempts = 0usize;
        while quads.len() < sample_count && attempts < 60 * sample_count.max(8) {
            attempts += 1;
            let mut idx = [0usize; 4];
            let mut ok = true;
            for slot in 0..4 {
                let cand = pool[rng.gen_range(0..pool.len())];
                if idx[..slot].contains(&cand) {
                    ok = false;
                    break;
                }
                idx[slot] = cand;
            }
            if !ok {
                continue;
            }
            let s = QuadrupleSides {
                pa: self.distance(idx[0], idx[1]),
                pb: self.distance(idx[0], idx[2]),
                pc: self.distance(idx[0], idx[3]),
                ab: self.distance(idx[1], idx[2]),
                bc: self.distance(idx[2], idx[3]),
                ca: self.distance(idx[3], idx[1]),
            };
            if s.min() <= 0.0 {
                continue;
            }
            quads.push(s);
        }
        if quads.is_empty() {
            return Err(SpaceError::TooFewPoints { need: 4, got: 0 });
        }

        let passes = |k: f64| -> bool {
            quads.iter().all(|q| match q.defect(k) {
                Ok(d) => d >= -tol,
                Err(_) => false,
            })
        };

        let (mut lo, mut hi) = (-4.0f64, 4.0f64);
        if !passes(lo) {
            return Ok(lo);
        }
        if passes(hi) {
            return Ok(hi);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// The six pairwise distances of a quadruple `(p, a, b, c)`, with the
/// apex distances first.
#[derive(Clone, Copy, Debug)]
pub struct QuadrupleSides {
    pub pa: f64,
    pub pb: f64,
    pub pc: f64,
    pub ab: f64,
    pub bc: f64,
    pub ca: f64,
}

impl QuadrupleSides {
    fn min(&self) -> f64 {
        self.pa
            .min(self.pb)
            .min(self.pc)
            .min(self.ab)
            .min(self.bc)
            .min(self.ca)
    }

    /// `2 pi` minus the sum of comparison angles at the apex.
    pub fn defect(&self, kappa: f64) -> Result<f64, PlaneError> {
        let sum = comparison_angle(kappa, self.pa, self.pb, self.ab)?
            + comparison_angle(kappa, self.pb, self.pc, self.bc)?
            + comparison_angle(kappa, self.pc, self.pa, self.ca)?;
        Ok(2.0 * PI - sum)
    }
}
