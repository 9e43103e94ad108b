//! Computational domains and structured P1 meshes.
//!
//! Meshes carry explicit bulk and surface quadrature weights: the lumped
//! per-node masses for dx sum exactly to |Ω| and the per-boundary-node
//! masses for dS sum exactly to |Γ|, which is what the discrete X² norm is
//! built from. Intervals use the two-point counting measure on the boundary
//! (|Γ| = 2); rectangles use 1D lumped edge masses along the perimeter.
//! Meshes are immutable after construction.

use std::fmt::Write as _;

use crate::error::{invalid, Result};

/// Reference domain shape. `Box3` exists for the closed-form bound
/// comparisons only; no mesh builder targets it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
    Box3 { lx: f64, ly: f64, lz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    shape: Shape,
}

impl Domain {
    pub fn interval(length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(invalid(format!("interval length must be positive, got {length}")));
        }
        Ok(Self { shape: Shape::Interval { length } })
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(invalid(format!("rectangle sides must be positive, got {lx} x {ly}")));
        }
        Ok(Self { shape: Shape::Rectangle { lx, ly } })
    }

    pub fn box3(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lz > 0.0) {
            return Err(invalid(format!("box sides must be positive, got {lx} x {ly} x {lz}")));
        }
        Ok(Self { shape: Shape::Box3 { lx, ly, lz } })
    }

    pub fn cube(side: f64) -> Result<Self> {
        Self::box3(side, side, side)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dimension(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            Shape::Rectangle { .. } => 2,
            Shape::Box3 { .. } => 3,
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn volume(&self) -> f64 {
        match self.shape {
            Shape::Interval { length } => length,
            Shape::Rectangle { lx, ly } => lx * ly,
            Shape::Box3 { lx, ly, lz } => lx * ly * lz,
        }
    }

    /// Surface measure |Γ|; for an interval the boundary is two points.
    pub fn surface(&self) -> f64 {
        match self.shape {
            Shape::Interval { .. } => 2.0,
            Shape::Rectangle { lx, ly } => 2.0 * (lx + ly),
            Shape::Box3 { lx, ly, lz } => 2.0 * (lx * ly + ly * lz + lx * lz),
        }
    }
}

/// Element connectivity: segments in 1D, triangles in 2D.
#[derive(Debug, Clone)]
pub enum Elements {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Elements {
    pub fn len(&self) -> usize {
        match self {
            Elements::Segments(v) => v.len(),
            Elements::Triangles(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Structured grid parameters kept for refinement.
#[derive(Debug, Clone, Copy)]
enum Grid {
    Interval { n: usize },
    Rectangle { nx: usize, ny: usize },
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    grid: Grid,
    nodes: Vec<[f64; 2]>,
    elements: Elements,
    boundary_nodes: Vec<usize>,
    /// Per-node lumped mass for dx; zero nowhere, sums to |Ω|.
    bulk_weights: Vec<f64>,
    /// Per-node lumped mass for dS; zero off Γ, sums to |Γ|.
    surface_weights: Vec<f64>,
    h: f64,
}

/// Uniform mesh of the interval (0, L) with N elements.
pub fn build_interval_mesh(length: f64, n: usize) -> Result<Mesh> {
    let domain = Domain::interval(length)?;
    if n < 4 {
        return Err(invalid(format!("interval mesh needs N >= 4, got {n}")));
    }
    let h = length / n as f64;
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * h, 0.0]).collect();
    let segments: Vec<[usize; 2]> = (0..n).map(|i| [i, i + 1]).collect();
    let mut bulk = vec![0.0; n + 1];
    for seg in &segments {
        bulk[seg[0]] += h / 2.0;
        bulk[seg[1]] += h / 2.0;
    }
    let mut surf = vec![0.0; n + 1];
    surf[0] = 1.0;
    surf[n] = 1.0;
    Ok(Mesh {
        domain,
        grid: Grid::Interval { n },
        nodes,
        elements: Elements::Segments(segments),
        boundary_nodes: vec![0, n],
        bulk_weights: bulk,
        surface_weights: surf,
        h,
    })
}

/// Structured triangulation of (0,Lx)×(0,Ly): each grid cell is split along
/// its (i,j)→(i+1,j+1) diagonal. Node (i,j) has index j·(nx+1)+i.
pub fn build_rectangle_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
    let domain = Domain::rectangle(lx, ly)?;
    if nx < 4 || ny < 4 {
        return Err(invalid(format!("rectangle mesh needs Nx, Ny >= 4, got {nx} x {ny}")));
    }
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let nnx = nx + 1;
    let gid = |i: usize, j: usize| j * nnx + i;
    let mut nodes = Vec::with_capacity(nnx * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 * hx, j as f64 * hy]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            tris.push([gid(i, j), gid(i + 1, j), gid(i + 1, j + 1)]);
            tris.push([gid(i, j), gid(i + 1, j + 1), gid(i, j + 1)]);
        }
    }
    let nn = nodes.len();
    let mut bulk = vec![0.0; nn];
    let area = hx * hy / 2.0;
    for t in &tris {
        for &v in t {
            bulk[v] += area / 3.0;
        }
    }
    // perimeter walk, counterclockwise from the origin
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(gid(i, 0));
    }
    for j in 0..ny {
        boundary.push(gid(nx, j));
    }
    for i in (1..=nx).rev() {
        boundary.push(gid(i, ny));
    }
    for j in (1..=ny).rev() {
        boundary.push(gid(0, j));
    }
    let mut surf = vec![0.0; nn];
    for i in 0..nx {
        for j0 in [0, ny] {
            surf[gid(i, j0)] += hx / 2.0;
            surf[gid(i + 1, j0)] += hx / 2.0;
        }
    }
    for j in 0..ny {
        for i0 in [0, nx] {
            surf[gid(i0, j)] += hy / 2.0;
            surf[gid(i0, j + 1)] += hy / 2.0;
        }
    }
    Ok(Mesh {
        domain,
        grid: Grid::Rectangle { nx, ny },
        nodes,
        elements: Elements::Triangles(tris),
        boundary_nodes: boundary,
        bulk_weights: bulk,
        surface_weights: surf,
        h: hx.hypot(hy),
    })
}

impl Mesh {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &Elements {
        &self.elements
    }

    /// Boundary node indices in perimeter order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn bulk_weights(&self) -> &[f64] {
        &self.bulk_weights
    }

    pub fn surface_weights(&self) -> &[f64] {
        &self.surface_weights
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Band width of the nodal coupling graph (1 in 1D, nx+2 in 2D).
    pub fn bandwidth(&self) -> usize {
        match self.grid {
            Grid::Interval { .. } => 1,
            Grid::Rectangle { nx, .. } => nx + 2,
        }
    }

    /// The same domain meshed with half the element size.
    pub fn refine(&self) -> Mesh {
        match (self.grid, self.domain.shape) {
            (Grid::Interval { n }, Shape::Interval { length }) => {
                build_interval_mesh(length, 2 * n).expect("refining a valid mesh")
            }
            (Grid::Rectangle { nx, ny }, Shape::Rectangle { lx, ly }) => {
                build_rectangle_mesh(lx, ly, 2 * nx, 2 * ny).expect("refining a valid mesh")
            }
            _ => unreachable!("grid/domain mismatch"),
        }
    }

    /// Values of a full nodal vector at the boundary nodes, in boundary order.
    pub fn trace_restrict(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.node_count() {
            return Err(invalid(format!(
                "trace_restrict: state length {} does not match node count {}",
                state.len(),
                self.node_count()
            )));
        }
        Ok(self.boundary_nodes.iter().map(|&i| state[i]).collect())
    }

    /// Embeds boundary values (in boundary order) into a full nodal vector,
    /// zero in the interior. Right inverse of `trace_restrict` on Γ.
    pub fn embed_boundary(&self, boundary_values: &[f64]) -> Result<Vec<f64>> {
        if boundary_values.len() != self.boundary_nodes.len() {
            return Err(invalid(format!(
                "embed_boundary: {} values for {} boundary nodes",
                boundary_values.len(),
                self.boundary_nodes.len()
            )));
        }
        let mut full = vec![0.0; self.node_count()];
        for (&i, &v) in self.boundary_nodes.iter().zip(boundary_values) {
            full[i] = v;
        }
        Ok(full)
    }

    pub fn nodes_csv(&self) -> String {
        let mut s = String::from("id,x,y\n");
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", i, p[0], p[1]);
        }
        s
    }

    pub fn elements_csv(&self) -> String {
        let mut s = String::new();
        match &self.elements {
            Elements::Segments(v) => {
                s.push_str("id,n0,n1\n");
                for (i, e) in v.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{}", i, e[0], e[1]);
                }
            }
            Elements::Triangles(v) => {
                s.push_str("id,n0,n1,n2\n");
                for (i, e) in v.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{},{}", i, e[0], e[1], e[2]);
                }
            }
        }
        s
    }

    pub fn boundary_csv(&self) -> String {
        let mut s = String::from("order,node,surface_weight\n");
        for (k, &i) in self.boundary_nodes.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", k, i, self.surface_weights[i]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basics() {
        let mesh = build_interval_mesh(1.0, 4).unwrap();
        assert_eq!(mesh.node_count(), 5);
        let xs: Vec<f64> = mesh.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((mesh.bulk_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(mesh.boundary_nodes(), &[0, 4]);
    }

    #[test]
    fn interval_surface_is_two_points() {
        let mesh = build_interval_mesh(std::f64::consts::PI, 8).unwrap();
        assert!((mesh.surface_weights().iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interval_fine() {
        let mesh = build_interval_mesh(1.0, 1024).unwrap();
        assert!((mesh.h() - 1.0 / 1024.0).abs() < 1e-15);
        assert_eq!(mesh.boundary_nodes().len(), 2);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_interval_mesh(0.0, 8).is_err());
        assert!(build_interval_mesh(-1.0, 8).is_err());
        assert!(build_interval_mesh(1.0, 3).is_err());
        assert!(build_rectangle_mesh(1.0, 1.0, 3, 4).is_err());
        assert!(build_rectangle_mesh(1.0, -1.0, 4, 4).is_err());
    }

    #[test]
    fn unit_square_counts() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap();
        assert_eq!(mesh.node_count(), 25);
        assert_eq!(mesh.elements().len(), 32);
        assert_eq!(mesh.boundary_nodes().len(), 16);
    }

    #[test]
    fn square_partition_of_unity() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 64, 64).unwrap();
        assert!((mesh.bulk_weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((mesh.surface_weights().iter().sum::<f64>() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn rectangle_perimeter() {
        let mesh = build_rectangle_mesh(2.0, 1.0, 8, 4).unwrap();
        assert!((mesh.surface_weights().iter().sum::<f64>() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_keeps_weight_sums() {
        let mesh = build_rectangle_mesh(2.0, 1.5, 6, 4).unwrap();
        let fine = mesh.refine();
        let vol: f64 = fine.bulk_weights().iter().sum();
        let sur: f64 = fine.surface_weights().iter().sum();
        assert!((vol - mesh.domain().volume()).abs() < 1e-12);
        assert!((sur - mesh.domain().surface()).abs() < 1e-12);
        assert!((fine.h() - mesh.h() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_nodes_lie_on_boundary_and_interior_has_no_surface_weight() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 8, 8).unwrap();
        for &i in mesh.boundary_nodes() {
            let [x, y] = mesh.nodes()[i];
            let on_edge = x == 0.0 || y == 0.0 || (x - 1.0).abs() < 1e-15 || (y - 1.0).abs() < 1e-15;
            assert!(on_edge, "node {i} at ({x},{y}) is not on the boundary");
        }
        let boundary: std::collections::HashSet<_> = mesh.boundary_nodes().iter().collect();
        for i in 0..mesh.node_count() {
            if !boundary.contains(&i) {
                assert_eq!(mesh.surface_weights()[i], 0.0);
            }
        }
    }

    #[test]
    fn trace_restrict_examples() {
        let mesh = build_interval_mesh(2.0, 8).unwrap();
        let c = vec![3.5; mesh.node_count()];
        assert!(mesh.trace_restrict(&c).unwrap().iter().all(|&v| v == 3.5));
        let xs: Vec<f64> = mesh.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(mesh.trace_restrict(&xs).unwrap(), vec![0.0, 2.0]);

        let sq = build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap();
        let xy: Vec<f64> = sq.nodes().iter().map(|p| p[0] + p[1]).collect();
        let tr = sq.trace_restrict(&xy).unwrap();
        for (k, &i) in sq.boundary_nodes().iter().enumerate() {
            let [x, y] = sq.nodes()[i];
            assert!((tr[k] - (x + y)).abs() < 1e-15);
        }
        assert!(sq.trace_restrict(&xy[1..]).is_err());
    }

    #[test]
    fn embed_then_restrict_is_identity() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 5, 4).unwrap();
        let vals: Vec<f64> = (0..mesh.boundary_nodes().len()).map(|k| k as f64 * 0.1).collect();
        let full = mesh.embed_boundary(&vals).unwrap();
        assert_eq!(mesh.trace_restrict(&full).unwrap(), vals);
    }
}
