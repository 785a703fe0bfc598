//! Waveguide layout and the structured second-order triangulation of its
//! truncation.
//!
//! The domain is the strip `[x_min, x_max] x [0, 1]` with thin rectangles
//! ("chimneys") standing on the top wall. Every rectangle is covered by one
//! tensor grid whose vertical lines pass through all chimney walls, so the
//! chimney meshes share nodes with the strip along each junction. Quads are
//! split along the SW-NE diagonal; the P2 nodes of the resulting triangles
//! are exactly the points of the half-step ("refined") tensor grid.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use thiserror::Error;

/// Default cap on the number of P2 nodes a mesh may hold.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

/// Half-width of the forbidden band around each resonant height, as a
/// fraction of `pi / (2k)`.
pub const RESONANCE_BAND: f64 = 1e-3;

const GEOM_TOL: f64 = 1e-12;

/// A thin rectangle `(x_center - width/2, x_center + width/2) x [1, 1 + height)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chimney {
    pub x_center: f64,
    pub height: f64,
    pub width: f64,
}

impl Chimney {
    pub fn new(x_center: f64, height: f64, width: f64) -> Self {
        Self {
            x_center,
            height,
            width,
        }
    }

    pub fn left(&self) -> f64 {
        self.x_center - 0.5 * self.width
    }

    pub fn right(&self) -> f64 {
        self.x_center + 0.5 * self.width
    }
}

/// Everything needed to set up one scattering solve.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveguideSpec {
    /// Wavenumber, `0 < k < pi`.
    pub k: f64,
    pub chimneys: Vec<Chimney>,
    /// Truncation abscissa `L`: the computational domain is `|x| <= L`.
    pub trunc_half_length: f64,
    /// Number of transverse modes kept in the Dirichlet-to-Neumann maps.
    pub dtn_terms: usize,
    pub mesh_target_h: f64,
    pub min_cells_across_chimney: usize,
}

impl WaveguideSpec {
    /// Pure strip with the defaults used throughout (20 DtN terms, 4 cells across).
    pub fn strip(k: f64, trunc_half_length: f64, mesh_target_h: f64) -> Self {
        Self {
            k,
            chimneys: Vec::new(),
            trunc_half_length,
            dtn_terms: 20,
            mesh_target_h,
            min_cells_across_chimney: 4,
        }
    }

    pub fn with_chimneys(mut self, chimneys: Vec<Chimney>) -> Self {
        self.chimneys = chimneys;
        self
    }

    /// Common chimney width, if there are chimneys.
    pub fn width(&self) -> Option<f64> {
        self.chimneys.first().map(|c| c.width)
    }

    /// Required clearance between chimney footprints and `x = +-L`: one wavelength.
    pub fn boundary_margin(&self) -> f64 {
        2.0 * PI / self.k
    }

    /// Mirror image `x -> -x` (chimney order reversed so abscissae stay increasing).
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.chimneys = self
            .chimneys
            .iter()
            .rev()
            .map(|c| Chimney::new(-c.x_center, c.height, c.width))
            .collect();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpecViolation {
    #[error("wavenumber {k} outside (0, pi)")]
    WavenumberOutOfRange { k: f64 },
    #[error("chimney {index}: non-positive height or width")]
    NonPositiveDimension { index: usize },
    #[error("chimney {index}: resonant height {height} (close to (2*{p}+1)pi/(2k))")]
    ResonantHeight { index: usize, height: f64, p: u32 },
    #[error("chimneys {first} and {second}: overlapping footprints")]
    OverlappingFootprints { first: usize, second: usize },
    #[error("chimney {index}: footprint not inside |x| < L - margin")]
    TooCloseToBoundary { index: usize },
    #[error("chimney {index}: width differs from the first chimney")]
    MixedWidths { index: usize },
    #[error("truncation half-length must be positive")]
    BadTruncation,
    #[error("at least one DtN term is required")]
    NoDtnTerms,
    #[error("mesh size must be positive and at least two cells are needed across a chimney")]
    BadMeshParameters,
}

/// Distance of `height` to the nearest resonance `(2p+1)pi/(2k)` and that `p`.
pub fn nearest_resonance(k: f64, height: f64) -> (f64, u32) {
    let quarter = PI / (2.0 * k);
    let p = Float::round((height / quarter - 1.0) / 2.0).max(0.0);
    let res = (2.0 * p + 1.0) * quarter;
    (Float::abs(height - res), p as u32)
}

/// True when `height` lies inside the forbidden band of a chimney resonance.
pub fn is_resonant(k: f64, height: f64) -> bool {
    let (dist, _) = nearest_resonance(k, height);
    dist < RESONANCE_BAND * PI / (2.0 * k)
}

/// Checks every invariant of a spec; all violations are reported at once.
pub fn validate_spec(spec: &WaveguideSpec) -> Result<&WaveguideSpec, Vec<SpecViolation>> {
    let mut out = Vec::new();
    let k = spec.k;
    let k_ok = k > 0.0 && k < PI && k.is_finite();
    if !k_ok {
        out.push(SpecViolation::WavenumberOutOfRange { k });
    }
    if !(spec.trunc_half_length > 0.0) {
        out.push(SpecViolation::BadTruncation);
    }
    if spec.dtn_terms == 0 {
        out.push(SpecViolation::NoDtnTerms);
    }
    if !(spec.mesh_target_h > 0.0) || spec.min_cells_across_chimney < 2 {
        out.push(SpecViolation::BadMeshParameters);
    }
    let width0 = spec.width();
    for (index, c) in spec.chimneys.iter().enumerate() {
        if !(c.height > 0.0) || !(c.width > 0.0) {
            out.push(SpecViolation::NonPositiveDimension { index });
            continue;
        }
        if let Some(w) = width0 {
            if Float::abs(c.width - w) > GEOM_TOL {
                out.push(SpecViolation::MixedWidths { index });
            }
        }
        if k_ok {
            let (dist, p) = nearest_resonance(k, c.height);
            if dist < RESONANCE_BAND * PI / (2.0 * k) {
                out.push(SpecViolation::ResonantHeight {
                    index,
                    height: c.height,
                    p,
                });
            }
            let limit = spec.trunc_half_length - spec.boundary_margin();
            if !(c.left() > -limit && c.right() < limit) {
                out.push(SpecViolation::TooCloseToBoundary { index });
            }
        }
    }
    for a in 0..spec.chimneys.len() {
        for b in a + 1..spec.chimneys.len() {
            let (ca, cb) = (&spec.chimneys[a], &spec.chimneys[b]);
            if ca.left() < cb.right() && cb.left() < ca.right() || Float::abs(ca.right() - cb.left()) < GEOM_TOL
                || Float::abs(cb.right() - ca.left()) < GEOM_TOL
            {
                out.push(SpecViolation::OverlappingFootprints { first: a, second: b });
            }
        }
    }
    if out.is_empty() {
        Ok(spec)
    } else {
        Err(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Sound-hard (homogeneous Neumann) wall.
    Wall,
    /// Left truncation section `x = x_min`.
    SigmaMinus,
    /// Right truncation section `x = x_max`.
    SigmaPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Strip,
    Chimney(usize),
}

/// A boundary edge: end nodes and midpoint `[a, mid, b]`, plus the element it bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 3],
    pub tag: BoundaryTag,
    pub element: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid spec: {0:?}")]
    InvalidSpec(Vec<SpecViolation>),
    #[error("mesh would need {needed} nodes, budget is {budget}")]
    NodeBudgetExceeded { needed: usize, budget: usize },
    #[error("chimney {index} does not fit in the meshed interval")]
    ChimneyOutsideDomain { index: usize },
    #[error("expected {expected} pinned vertical cell counts, got {got}")]
    PinnedCellsMismatch { expected: usize, got: usize },
}

/// Knobs that are not part of the physical spec.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshOptions {
    /// Fixed number of vertical cells per chimney (before corner grading).
    /// Keeps the mesh topology constant while heights vary continuously.
    pub chimney_vertical_cells: Option<Vec<usize>>,
    /// Number of times the cell touching each junction corner is halved
    /// (0 disables grading).
    pub corner_levels: usize,
    pub node_budget: usize,
    /// Extra vertical grid lines (e.g. extraction stations).
    pub extra_x_lines: Vec<f64>,
    /// Cell height in the strip when it should differ from the target size
    /// (fields that vary only along the guide need few transverse cells).
    pub transverse_h: Option<f64>,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            chimney_vertical_cells: None,
            corner_levels: 1,
            node_budget: DEFAULT_NODE_BUDGET,
            extra_x_lines: Vec::new(),
            transverse_h: None,
        }
    }
}

/// Conforming 6-node triangle mesh of a rectangle union.
///
/// Node numbering is column-major over the refined grid: for each refined
/// abscissa, the strip nodes bottom to top, then the chimney nodes above.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// `[v0, v1, v2, m01, m12, m20]`, counter-clockwise.
    pub elements: Vec<[usize; 6]>,
    pub regions: Vec<Region>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Refined abscissae (vertex lines at even indices).
    x_lines: Vec<f64>,
    /// Refined strip ordinates in `[0, 1]`.
    strip_y: Vec<f64>,
    column_start: Vec<usize>,
    /// Chimney footprints `(left, right)` in input order.
    footprints: Vec<(f64, f64)>,
    /// Largest cell dimension actually used.
    h_max: f64,
    /// Smallest cell dimension actually used.
    h_min: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn x_min(&self) -> f64 {
        self.x_lines[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x_lines.last().unwrap()
    }

    /// Refined grid abscissae; even indices are element edges.
    pub fn x_lines(&self) -> &[f64] {
        &self.x_lines
    }

    /// Abscissae of vertical element edges (admissible extraction stations).
    pub fn vertex_x_lines(&self) -> impl Iterator<Item = f64> + '_ {
        self.x_lines.iter().step_by(2).copied()
    }

    pub fn strip_y(&self) -> &[f64] {
        &self.strip_y
    }

    /// `(left, right)` wall abscissae of every chimney.
    pub fn footprints(&self) -> &[(f64, f64)] {
        &self.footprints
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Strip nodes (bottom to top) on the vertex line at `x`, if `x` is one.
    pub fn strip_column_at(&self, x: f64) -> Option<Vec<usize>> {
        let tol = 1e-9 * (1.0 + Float::abs(x));
        let c = self
            .x_lines
            .iter()
            .position(|&xl| Float::abs(xl - x) <= tol)?;
        if c % 2 == 1 {
            return None;
        }
        Some(self.strip_column(c))
    }

    /// Strip nodes of refined column `c`.
    pub fn strip_column(&self, c: usize) -> Vec<usize> {
        let s = self.column_start[c];
        (s..s + self.strip_y.len()).collect()
    }

    /// Trace nodes on `x = x_min` or `x = x_max`.
    pub fn sigma_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        match tag {
            BoundaryTag::SigmaMinus => self.strip_column(0),
            BoundaryTag::SigmaPlus => self.strip_column(self.x_lines.len() - 1),
            BoundaryTag::Wall => Vec::new(),
        }
    }

    /// Signed doubled area of element `e` (positive for counter-clockwise).
    pub fn jacobian(&self, e: usize) -> f64 {
        let [a, b, c, ..] = self.elements[e];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
    }

    /// Total area (sum of element areas).
    pub fn area(&self) -> f64 {
        (0..self.elements.len()).map(|e| 0.5 * self.jacobian(e)).sum()
    }
}

/// Meshes `[-L, L] x [0, 1]` plus the chimneys of a validated spec.
pub fn generate_mesh(spec: &WaveguideSpec) -> Result<Mesh, MeshError> {
    generate_mesh_with(spec, &MeshOptions::default())
}

pub fn generate_mesh_with(spec: &WaveguideSpec, options: &MeshOptions) -> Result<Mesh, MeshError> {
    validate_spec(spec).map_err(MeshError::InvalidSpec)?;
    let l = spec.trunc_half_length;
    mesh_region(
        -l,
        l,
        &spec.chimneys,
        spec.mesh_target_h,
        spec.min_cells_across_chimney,
        options,
    )
}

/// Splits `[a, b]` into `max(ceil(len/h), min_cells)` equal cells, then
/// splits the first and/or last cell geometrically `levels_*` times toward
/// the end point. Returns interior and end breakpoints.
fn subdivide(a: f64, b: f64, h: f64, min_cells: usize, levels_start: usize, levels_end: usize) -> Vec<f64> {
    let len = b - a;
    let n = (Float::ceil(len / h - 1e-9) as usize).max(min_cells).max(1);
    let d = len / n as f64;
    let mut pts = Vec::with_capacity(n + levels_start + levels_end + 1);
    pts.push(a);
    for l in (1..=levels_start).rev() {
        pts.push(a + d / (1u64 << l) as f64);
    }
    for i in 1..n {
        pts.push(a + d * i as f64);
    }
    // a single cell graded from both sides keeps only the start grading at the midpoint
    let skip_mid = usize::from(n == 1 && levels_start > 0 && levels_end > 0);
    for l in 1 + skip_mid..=levels_end {
        pts.push(b - d / (1u64 << l) as f64);
    }
    pts.push(b);
    pts
}

fn refine(lines: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * lines.len() - 1);
    for w in lines.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*lines.last().unwrap());
    out
}

/// Meshes `[x_min, x_max] x [0, 1]` plus `chimneys` (no physical validation).
///
/// Ends are tagged `SigmaMinus`/`SigmaPlus`, every other boundary edge `Wall`.
pub fn mesh_region(
    x_min: f64,
    x_max: f64,
    chimneys: &[Chimney],
    target_h: f64,
    min_cells_across: usize,
    options: &MeshOptions,
) -> Result<Mesh, MeshError> {
    let h = target_h;
    let grade = options.corner_levels;
    if let Some(cells) = &options.chimney_vertical_cells {
        if cells.len() != chimneys.len() {
            return Err(MeshError::PinnedCellsMismatch {
                expected: chimneys.len(),
                got: cells.len(),
            });
        }
    }
    let mut order: Vec<usize> = (0..chimneys.len()).collect();
    order.sort_by(|&a, &b| {
        chimneys[a]
            .x_center
            .partial_cmp(&chimneys[b].x_center)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    for &i in &order {
        let c = &chimneys[i];
        if !(c.left() > x_min + GEOM_TOL && c.right() < x_max - GEOM_TOL) {
            return Err(MeshError::ChimneyOutsideDomain { index: i });
        }
    }

    // coarse x breakpoints: ends, chimney walls, optional extra lines
    #[derive(Clone, Copy)]
    struct Brk {
        x: f64,
        wall: bool,
    }
    let mut brks: Vec<Brk> = Vec::new();
    brks.push(Brk { x: x_min, wall: false });
    for &i in &order {
        brks.push(Brk {
            x: chimneys[i].left(),
            wall: true,
        });
        brks.push(Brk {
            x: chimneys[i].right(),
            wall: true,
        });
    }
    brks.push(Brk { x: x_max, wall: false });
    for &x in &options.extra_x_lines {
        if x > x_min + GEOM_TOL && x < x_max - GEOM_TOL {
            let inside = chimneys.iter().any(|c| x > c.left() - GEOM_TOL && x < c.right() + GEOM_TOL);
            if !inside {
                brks.push(Brk { x, wall: false });
            }
        }
    }
    brks.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(core::cmp::Ordering::Equal));
    brks.dedup_by(|b, a| {
        if Float::abs(a.x - b.x) < GEOM_TOL {
            a.wall |= b.wall;
            true
        } else {
            false
        }
    });

    let mut xs: Vec<f64> = Vec::new();
    for w in brks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let in_chimney = chimneys
            .iter()
            .any(|c| Float::abs(c.left() - a.x) < GEOM_TOL && Float::abs(c.right() - b.x) < GEOM_TOL);
        let seg = if in_chimney {
            subdivide(a.x, b.x, h, min_cells_across, grade, grade)
        } else {
            subdivide(a.x, b.x, h, 1, if a.wall { grade } else { 0 }, if b.wall { grade } else { 0 })
        };
        if xs.is_empty() {
            xs.extend_from_slice(&seg);
        } else {
            xs.extend_from_slice(&seg[1..]);
        }
    }
    let strip_lines = subdivide(0.0, 1.0, options.transverse_h.unwrap_or(h), 1, 0, if chimneys.is_empty() { 0 } else { grade });

    // vertical lines above y = 1 for each chimney, relative index 0 is y = 1
    let mut chim_lines: Vec<Vec<f64>> = Vec::with_capacity(chimneys.len());
    for (i, c) in chimneys.iter().enumerate() {
        let lines = match &options.chimney_vertical_cells {
            Some(cells) => subdivide(1.0, 1.0 + c.height, c.height / cells[i] as f64, cells[i], grade, 0),
            None => subdivide(1.0, 1.0 + c.height, h, 1, grade, 0),
        };
        chim_lines.push(lines);
    }

    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    for lines in core::iter::once(&xs).chain(core::iter::once(&strip_lines)).chain(chim_lines.iter()) {
        for w in lines.windows(2) {
            h_max = h_max.max(w[1] - w[0]);
            h_min = h_min.min(w[1] - w[0]);
        }
    }

    let xr = refine(&xs);
    let yr = refine(&strip_lines);
    let chim_yr: Vec<Vec<f64>> = chim_lines.iter().map(|l| refine(l)).collect();
    let ny = yr.len();

    // coarse vertex-line range [ia, ib] covered by each chimney
    let mut footprint: Vec<(usize, usize)> = Vec::with_capacity(chimneys.len());
    for c in chimneys {
        let find = |x: f64| {
            xs.iter()
                .position(|&v| Float::abs(v - x) < 1e-9)
                .expect("chimney wall is a grid line")
        };
        footprint.push((find(c.left()), find(c.right())));
    }
    // chimney owning refined column rc (if any)
    let owner = |rc: usize| -> Option<usize> {
        footprint
            .iter()
            .position(|&(ia, ib)| rc >= 2 * ia && rc <= 2 * ib)
    };

    let mut needed = 0usize;
    let mut column_start = Vec::with_capacity(xr.len() + 1);
    for rc in 0..xr.len() {
        column_start.push(needed);
        needed += ny;
        if let Some(m) = owner(rc) {
            needed += chim_yr[m].len() - 1;
        }
    }
    column_start.push(needed);
    if needed > options.node_budget {
        return Err(MeshError::NodeBudgetExceeded {
            needed,
            budget: options.node_budget,
        });
    }

    let mut vertices = Vec::with_capacity(needed);
    for (rc, &x) in xr.iter().enumerate() {
        for &y in &yr {
            vertices.push([x, y]);
        }
        if let Some(m) = owner(rc) {
            for &y in &chim_yr[m][1..] {
                vertices.push([x, y]);
            }
        }
    }

    let strip_node = |rc: usize, ry: usize| column_start[rc] + ry;
    let chim_node = |rc: usize, ry: usize| {
        if ry == 0 {
            column_start[rc] + ny - 1
        } else {
            column_start[rc] + ny + ry - 1
        }
    };

    let mut elements = Vec::new();
    let mut regions = Vec::new();
    let mut boundary_edges = Vec::new();

    // quad (rc, ry) in refined indices of its SW corner; node lookup closure
    let mut push_quad = |node: &dyn Fn(usize, usize) -> usize, rc: usize, ry: usize, region: Region| -> (usize, usize) {
        let sw = node(rc, ry);
        let se = node(rc + 2, ry);
        let ne = node(rc + 2, ry + 2);
        let nw = node(rc, ry + 2);
        let s_mid = node(rc + 1, ry);
        let e_mid = node(rc + 2, ry + 1);
        let n_mid = node(rc + 1, ry + 2);
        let w_mid = node(rc, ry + 1);
        let center = node(rc + 1, ry + 1);
        let lower = elements.len();
        elements.push([sw, se, ne, s_mid, e_mid, center]);
        regions.push(region);
        elements.push([sw, ne, nw, center, n_mid, w_mid]);
        regions.push(region);
        (lower, lower + 1)
    };

    let ncx = (xr.len() - 1) / 2;
    let ncy = (ny - 1) / 2;
    let mut strip_elems = alloc::vec![(0usize, 0usize); ncx * ncy];
    for i in 0..ncx {
        for j in 0..ncy {
            strip_elems[i * ncy + j] = push_quad(&strip_node, 2 * i, 2 * j, Region::Strip);
        }
    }
    let mut chim_elems: Vec<Vec<(usize, usize)>> = Vec::with_capacity(chimneys.len());
    for (m, &(ia, ib)) in footprint.iter().enumerate() {
        let ncv = (chim_yr[m].len() - 1) / 2;
        let mut v = alloc::vec![(0usize, 0usize); (ib - ia) * ncv];
        for i in ia..ib {
            for j in 0..ncv {
                v[(i - ia) * ncv + j] = push_quad(&chim_node, 2 * i, 2 * j, Region::Chimney(m));
            }
        }
        chim_elems.push(v);
    }

    // ends
    for j in 0..ncy {
        let (_, upper) = strip_elems[j];
        boundary_edges.push(BoundaryEdge {
            nodes: [strip_node(0, 2 * j), strip_node(0, 2 * j + 1), strip_node(0, 2 * j + 2)],
            tag: BoundaryTag::SigmaMinus,
            element: upper,
        });
        let (lower, _) = strip_elems[(ncx - 1) * ncy + j];
        let rc = 2 * ncx;
        boundary_edges.push(BoundaryEdge {
            nodes: [strip_node(rc, 2 * j), strip_node(rc, 2 * j + 1), strip_node(rc, 2 * j + 2)],
            tag: BoundaryTag::SigmaPlus,
            element: lower,
        });
    }
    // bottom and top walls of the strip
    for i in 0..ncx {
        let (lower, _) = strip_elems[i * ncy];
        boundary_edges.push(BoundaryEdge {
            nodes: [strip_node(2 * i, 0), strip_node(2 * i + 1, 0), strip_node(2 * i + 2, 0)],
            tag: BoundaryTag::Wall,
            element: lower,
        });
        let covered = footprint.iter().any(|&(ia, ib)| i >= ia && i < ib);
        if !covered {
            let (_, upper) = strip_elems[i * ncy + ncy - 1];
            let top = ny - 1;
            boundary_edges.push(BoundaryEdge {
                nodes: [strip_node(2 * i, top), strip_node(2 * i + 1, top), strip_node(2 * i + 2, top)],
                tag: BoundaryTag::Wall,
                element: upper,
            });
        }
    }
    // chimney walls and lids
    for (m, &(ia, ib)) in footprint.iter().enumerate() {
        let ncv = (chim_yr[m].len() - 1) / 2;
        for j in 0..ncv {
            let (_, upper) = chim_elems[m][j];
            boundary_edges.push(BoundaryEdge {
                nodes: [
                    chim_node(2 * ia, 2 * j),
                    chim_node(2 * ia, 2 * j + 1),
                    chim_node(2 * ia, 2 * j + 2),
                ],
                tag: BoundaryTag::Wall,
                element: upper,
            });
            let (lower, _) = chim_elems[m][(ib - ia - 1) * ncv + j];
            boundary_edges.push(BoundaryEdge {
                nodes: [
                    chim_node(2 * ib, 2 * j),
                    chim_node(2 * ib, 2 * j + 1),
                    chim_node(2 * ib, 2 * j + 2),
                ],
                tag: BoundaryTag::Wall,
                element: lower,
            });
        }
        for i in ia..ib {
            let (_, upper) = chim_elems[m][(i - ia) * ncv + ncv - 1];
            let top = 2 * ncv;
            boundary_edges.push(BoundaryEdge {
                nodes: [chim_node(2 * i, top), chim_node(2 * i + 1, top), chim_node(2 * i + 2, top)],
                tag: BoundaryTag::Wall,
                element: upper,
            });
        }
    }

    Ok(Mesh {
        vertices,
        elements,
        regions,
        boundary_edges,
        x_lines: xr,
        strip_y: yr,
        column_start,
        footprints: chimneys.iter().map(|c| (c.left(), c.right())).collect(),
        h_max,
        h_min,
    })
}
