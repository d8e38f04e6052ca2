//! Admissibility diagnostics.
//!
//! The validator never fails; it reports every violation it finds so that
//! imported meshes can be inspected. Generators and the import path turn a
//! non-empty report into an error.

use crate::geometry::{self, Point};
use crate::mesh::{geometric_identity_residual, Mesh};

const ORTHOGONALITY_TOL_RAD: f64 = 1e-8;
const GEOMETRIC_IDENTITY_TOL: f64 = 1e-10;
const BOUNDARY_ALIGNMENT_TOL: f64 = 1e-12;
const MEASURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Interior edge whose center segment is not orthogonal to it.
    NonOrthogonal { edge: usize, angle_deviation: f64 },
    /// Cell point outside the closed cell (reported, not fatal).
    CenterOutsideCell { cell: usize, distance: f64 },
    /// Boundary projection z_sigma falls outside the closed edge.
    ProjectionOutsideEdge { edge: usize, excess: f64 },
    /// d_{K,sigma} below theta_min * diam(K); covers d <= 0.
    DistanceBelowThreshold { cell: usize, edge: usize, ratio: f64, minimum: f64 },
    /// Geometric identity residual above tolerance.
    GeometricIdentityResidual { cell: usize, residual: f64 },
    NonConvexCell { cell: usize },
    /// Sum of cell measures disagrees with the boundary-divergence measure.
    MeasureMismatch { cell_sum: f64, boundary_integral: f64 },
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub theta: f64,
    pub h: f64,
    pub cell_count: usize,
    /// True when every boundary edge has x_sigma equal to z_sigma, the
    /// practical condition under which the O(h) boundary estimate applies.
    pub boundary_alignment_sufficient: bool,
    pub max_boundary_alignment_gap: f64,
    pub max_geometric_identity_residual: f64,
    pub max_orthogonality_deviation: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        // Center-outside-cell is informational; everything else disqualifies.
        self.violations
            .iter()
            .all(|v| matches!(v, Violation::CenterOutsideCell { .. }))
    }

    pub fn first_offending_cell(&self) -> Option<usize> {
        self.violations.iter().find_map(|v| match v {
            Violation::DistanceBelowThreshold { cell, .. }
            | Violation::GeometricIdentityResidual { cell, .. }
            | Violation::NonConvexCell { cell } => Some(*cell),
            Violation::NonOrthogonal { .. }
            | Violation::ProjectionOutsideEdge { .. }
            | Violation::CenterOutsideCell { .. }
            | Violation::MeasureMismatch { .. } => None,
        })
    }
}

/// Check the orthogonality, distance, projection, convexity and geometric
/// identity requirements of an admissible discretization.
///
/// `theta_min` sets the smallest accepted d_{K,sigma}/diam(K) ratio.
pub fn validate_admissibility(mesh: &Mesh<2>, theta_min: f64) -> ValidationReport {
    validate_with_tolerance(mesh, theta_min, ORTHOGONALITY_TOL_RAD)
}

pub fn validate_with_tolerance(
    mesh: &Mesh<2>,
    theta_min: f64,
    orthogonality_tol: f64,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut max_orth: f64 = 0.0;
    let mut max_geom_id: f64 = 0.0;
    let mut max_gap: f64 = 0.0;

    for (id, edge) in mesh.edges().iter().enumerate() {
        match edge.outer_cell {
            Some(l) => {
                let k = edge.inner_cell;
                let seg = geometry::sub(mesh.cell(l).center, mesh.cell(k).center);
                let len = geometry::norm(seg);
                if len == 0.0 {
                    violations.push(Violation::NonOrthogonal {
                        edge: id,
                        angle_deviation: std::f64::consts::FRAC_PI_2,
                    });
                    continue;
                }
                // atan2 keeps full precision for tiny angles, unlike acos.
                let cross = seg[0] * edge.normal[1] - seg[1] * edge.normal[0];
                let deviation = cross.abs().atan2(geometry::dot(seg, edge.normal));
                max_orth = max_orth.max(deviation);
                if deviation > orthogonality_tol {
                    violations.push(Violation::NonOrthogonal { edge: id, angle_deviation: deviation });
                }
            }
            None => {
                let z = edge.projection.expect("boundary edge carries a projection");
                let a = mesh.vertices()[edge.vertex_ids[0]];
                let b = mesh.vertices()[edge.vertex_ids[1]];
                let t = geometry::scale(1.0 / edge.measure, geometry::sub(b, a));
                let s = geometry::dot(geometry::sub(z, a), t);
                let excess = (-s).max(s - edge.measure);
                if excess > 1e-12 * edge.measure.max(1.0) {
                    violations.push(Violation::ProjectionOutsideEdge { edge: id, excess });
                }
                let gap = geometry::dist(z, edge.barycenter);
                max_gap = max_gap.max(gap);
            }
        }
    }

    for (k, cell) in mesh.cells().iter().enumerate() {
        let pts: Vec<Point<2>> = cell.vertex_ids.iter().map(|&v| mesh.vertices()[v]).collect();
        if !geometry::polygon_is_convex_ccw(&pts, 1e-12 * cell.diameter * cell.diameter) {
            violations.push(Violation::NonConvexCell { cell: k });
        }
        let inset = geometry::convex_polygon_inset(&pts, cell.center);
        if inset < -1e-12 * cell.diameter {
            violations.push(Violation::CenterOutsideCell { cell: k, distance: -inset });
        }
        for &e in &cell.edge_ids {
            let edge = mesh.edge(e);
            let d = edge.distance_from(k);
            let ratio = d / cell.diameter;
            if ratio < theta_min {
                violations.push(Violation::DistanceBelowThreshold {
                    cell: k,
                    edge: e,
                    ratio,
                    minimum: theta_min,
                });
            }
        }
        let residual = geometric_identity_residual(mesh, k, cell.center) / cell.measure.max(f64::MIN_POSITIVE);
        max_geom_id = max_geom_id.max(residual);
        if residual > GEOMETRIC_IDENTITY_TOL {
            violations.push(Violation::GeometricIdentityResidual { cell: k, residual });
        }
    }

    let cell_sum = mesh.total_measure();
    let boundary_integral = mesh.boundary_divergence_measure();
    if (cell_sum - boundary_integral).abs() > MEASURE_TOL * cell_sum.abs().max(1.0) {
        violations.push(Violation::MeasureMismatch { cell_sum, boundary_integral });
    }

    ValidationReport {
        theta: mesh.theta(),
        h: mesh.h(),
        cell_count: mesh.cell_count(),
        boundary_alignment_sufficient: max_gap <= BOUNDARY_ALIGNMENT_TOL,
        max_boundary_alignment_gap: max_gap,
        max_geometric_identity_residual: max_geom_id,
        max_orthogonality_deviation: max_orth,
        violations,
    }
}
