//! Admissible finite-volume discretizations: cells, edges, transmissibilities
//! and the geometric quantities every other module builds on.
//!
//! A mesh pairs each cell with a point `x_K` such that the segment joining
//! neighboring points is orthogonal to their shared edge. All derived data
//! (normals, distances, transmissibilities, regularity) is computed once at
//! construction; the mesh is immutable afterwards.

mod builder;
mod delaunay;
mod io;
mod rectangular;
mod validate;

pub use builder::{mesh_from_polygons, mesh_from_triangles, PolyCell};
pub use delaunay::{build_delaunay_mesh, build_delaunay_mesh_with, DelaunayOptions};
pub use io::{export_mesh, import_mesh, import_mesh_with, read_mesh, write_mesh, ImportOptions};
pub use rectangular::build_rectangular_mesh;
pub use validate::{validate_admissibility, ValidationReport, Violation};

use crate::geometry::{self, Point};

/// Axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// One control volume.
#[derive(Clone, Debug)]
pub struct Cell<const D: usize> {
    /// Ordered (CCW in 2D) vertex indices describing the polytope.
    pub vertex_ids: Vec<usize>,
    /// The cell point x_K the scheme differentiates against.
    pub center: Point<D>,
    /// Gravity center of the cell, kept for the barycenter gradient variant.
    pub centroid: Point<D>,
    /// d-dimensional measure m(K).
    pub measure: f64,
    /// diam(K).
    pub diameter: f64,
    /// Edges bounding this cell, in traversal order.
    pub edge_ids: Vec<usize>,
    pub is_boundary_adjacent: bool,
}

/// One face between two cells, or between a cell and the boundary.
#[derive(Clone, Debug)]
pub struct Edge<const D: usize> {
    pub vertex_ids: Vec<usize>,
    /// (d-1)-dimensional measure m(sigma).
    pub measure: f64,
    /// Barycenter x_sigma of the edge.
    pub barycenter: Point<D>,
    pub inner_cell: usize,
    pub outer_cell: Option<usize>,
    /// Unit normal, outward from `inner_cell`.
    pub normal: Point<D>,
    /// Signed distance from the inner cell point to the edge hyperplane.
    pub d_inner: f64,
    /// Signed distance from the outer cell point, when interior.
    pub d_outer: Option<f64>,
    /// Orthogonal projection z_sigma of the inner cell point (boundary edges).
    pub projection: Option<Point<D>>,
    /// tau_sigma: m(sigma)/d_{K|L} interior, m(sigma)/d_{K,sigma} boundary.
    pub transmissibility: f64,
}

impl<const D: usize> Edge<D> {
    pub fn is_boundary(&self) -> bool {
        self.outer_cell.is_none()
    }

    /// The cell on the other side of the edge, seen from `cell`.
    pub fn other_cell(&self, cell: usize) -> Option<usize> {
        if cell == self.inner_cell {
            self.outer_cell
        } else {
            Some(self.inner_cell)
        }
    }

    /// Unit normal outward from `cell`.
    pub fn normal_from(&self, cell: usize) -> Point<D> {
        if cell == self.inner_cell {
            self.normal
        } else {
            geometry::scale(-1.0, self.normal)
        }
    }

    /// Distance d_{K,sigma} seen from `cell`.
    pub fn distance_from(&self, cell: usize) -> f64 {
        if cell == self.inner_cell {
            self.d_inner
        } else {
            self.d_outer.expect("outer distance on boundary edge")
        }
    }

    /// d_{K|L} for interior edges, d_{K,sigma} for boundary edges.
    pub fn center_distance(&self) -> f64 {
        self.d_inner + self.d_outer.unwrap_or(0.0)
    }
}

/// Immutable admissible discretization.
#[derive(Clone, Debug)]
pub struct Mesh<const D: usize> {
    pub(crate) vertices: Vec<Point<D>>,
    pub(crate) cells: Vec<Cell<D>>,
    pub(crate) edges: Vec<Edge<D>>,
    pub(crate) h: f64,
    pub(crate) theta: f64,
    pub(crate) domain_diameter: f64,
    pub(crate) total_measure: f64,
    /// m(Omega) recomputed from the boundary via the divergence theorem.
    pub(crate) boundary_divergence_measure: f64,
}

impl<const D: usize> Mesh<D> {
    pub fn dimension(&self) -> usize {
        D
    }

    pub fn vertices(&self) -> &[Point<D>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell<D>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge<D>] {
        &self.edges
    }

    pub fn cell(&self, k: usize) -> &Cell<D> {
        &self.cells[k]
    }

    pub fn edge(&self, e: usize) -> &Edge<D> {
        &self.edges[e]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// h_D, the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// theta_D, min over (K, sigma) of d_{K,sigma}/diam(K).
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn domain_diameter(&self) -> f64 {
        self.domain_diameter
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn boundary_divergence_measure(&self) -> f64 {
        self.boundary_divergence_measure
    }

    pub fn boundary_edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary()).map(|(i, _)| i)
    }

    pub fn interior_edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| !e.is_boundary()).map(|(i, _)| i)
    }

    /// Neighboring cells of `k` paired with the shared edge id.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells[k]
            .edge_ids
            .iter()
            .filter_map(move |&e| self.edges[e].other_cell(k).map(|l| (l, e)))
    }

    /// Assemble a mesh from fully derived parts, recomputing the aggregate
    /// quantities. Used by the 2D builder and by dimension-generic tests.
    pub(crate) fn from_parts(
        vertices: Vec<Point<D>>,
        cells: Vec<Cell<D>>,
        edges: Vec<Edge<D>>,
        domain_diameter: f64,
    ) -> Self {
        let h = cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        let mut theta = f64::INFINITY;
        for edge in &edges {
            let t_in = edge.d_inner / cells[edge.inner_cell].diameter;
            theta = theta.min(t_in);
            if let (Some(d), Some(l)) = (edge.d_outer, edge.outer_cell) {
                theta = theta.min(d / cells[l].diameter);
            }
        }
        let total_measure = cells.iter().map(|c| c.measure).sum();
        let mut boundary_divergence_measure = 0.0;
        for edge in edges.iter().filter(|e| e.is_boundary()) {
            boundary_divergence_measure +=
                edge.measure * geometry::dot(edge.barycenter, edge.normal);
        }
        boundary_divergence_measure /= D as f64;
        Mesh {
            vertices,
            cells,
            edges,
            h,
            theta,
            domain_diameter,
            total_measure,
            boundary_divergence_measure,
        }
    }
}

/// Residual of the geometric identity
/// `sum_sigma m(sigma) (x_sigma - x0) n_{K,sigma}^T = m(K) I`
/// for one cell, as the largest absolute entry of the difference.
pub fn geometric_identity_residual<const D: usize>(mesh: &Mesh<D>, k: usize, x0: Point<D>) -> f64 {
    let cell = &mesh.cells[k];
    let mut acc = [[0.0f64; D]; D];
    for &e in &cell.edge_ids {
        let edge = &mesh.edges[e];
        let n = edge.normal_from(k);
        let r = geometry::sub(edge.barycenter, x0);
        for i in 0..D {
            for j in 0..D {
                acc[i][j] += edge.measure * r[i] * n[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..D {
        for j in 0..D {
            let target = if i == j { cell.measure } else { 0.0 };
            worst = worst.max((acc[i][j] - target).abs());
        }
    }
    worst
}

/// Hand-built 1D mesh: two cells on (0,1) split at 0.5, exercising the
/// dimension-generic data model from tests in other modules.
#[cfg(test)]
pub(crate) fn test_line_mesh_1d() -> Mesh<1> {
    parts_tests::line_mesh_1d()
}

#[cfg(test)]
mod parts_tests {
    use super::*;

    /// Hand-built 1D mesh: two cells on (0,1) split at 0.5, exercising the
    /// dimension-generic data model.
    pub(crate) fn line_mesh_1d() -> Mesh<1> {
        let vertices = vec![[0.0], [0.5], [1.0]];
        let cells = vec![
            Cell {
                vertex_ids: vec![0, 1],
                center: [0.25],
                centroid: [0.25],
                measure: 0.5,
                diameter: 0.5,
                edge_ids: vec![0, 1],
                is_boundary_adjacent: true,
            },
            Cell {
                vertex_ids: vec![1, 2],
                center: [0.75],
                centroid: [0.75],
                measure: 0.5,
                diameter: 0.5,
                edge_ids: vec![1, 2],
                is_boundary_adjacent: true,
            },
        ];
        let edges = vec![
            Edge {
                vertex_ids: vec![0],
                measure: 1.0,
                barycenter: [0.0],
                inner_cell: 0,
                outer_cell: None,
                normal: [-1.0],
                d_inner: 0.25,
                d_outer: None,
                projection: Some([0.0]),
                transmissibility: 4.0,
            },
            Edge {
                vertex_ids: vec![1],
                measure: 1.0,
                barycenter: [0.5],
                inner_cell: 0,
                outer_cell: Some(1),
                normal: [1.0],
                d_inner: 0.25,
                d_outer: Some(0.25),
                projection: None,
                transmissibility: 2.0,
            },
            Edge {
                vertex_ids: vec![2],
                measure: 1.0,
                barycenter: [1.0],
                inner_cell: 1,
                outer_cell: None,
                normal: [1.0],
                d_inner: 0.25,
                d_outer: None,
                projection: Some([1.0]),
                transmissibility: 4.0,
            },
        ];
        Mesh::from_parts(vertices, cells, edges, 1.0)
    }

    #[test]
    fn one_dimensional_mesh_aggregates() {
        let mesh = line_mesh_1d();
        assert_eq!(mesh.dimension(), 1);
        assert!((mesh.total_measure() - 1.0).abs() < 1e-15);
        assert!((mesh.theta() - 0.5).abs() < 1e-15);
        assert!((mesh.h() - 0.5).abs() < 1e-15);
        // Divergence-theorem measure: (1/1) * (1*(1*1) + 1*(0*-1)) = 1.
        assert!((mesh.boundary_divergence_measure() - 1.0).abs() < 1e-15);
        for k in 0..2 {
            assert!(geometric_identity_residual(&mesh, k, mesh.cell(k).center) < 1e-15);
        }
    }
}
