//! Uniform rectangular mesh generator.

use crate::error::MeshError;
use crate::geometry::Point;
use crate::mesh::builder::{mesh_from_polygons, PolyCell};
use crate::mesh::{Mesh, Rect};

/// Build a uniform `nx` x `ny` grid of rectangular cells over `domain`.
///
/// Cell points are centroids, so interior orthogonality is exact and every
/// boundary edge has its barycenter equal to the projected cell point.
pub fn build_rectangular_mesh(nx: usize, ny: usize, domain: Rect) -> Result<Mesh<2>, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidDomain(format!("grid {nx}x{ny} is empty")));
    }
    let (w, h) = (domain.width(), domain.height());
    if !(w > 0.0) || !(h > 0.0) || !w.is_finite() || !h.is_finite() {
        return Err(MeshError::InvalidDomain(format!(
            "degenerate rectangle {} x {}",
            w, h
        )));
    }
    let dx = w / nx as f64;
    let dy = h / ny as f64;

    let mut vertices: Vec<Point<2>> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // Exact endpoints keep boundary vertices on the domain boundary.
        let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * dy };
        for i in 0..=nx {
            let x = if i == nx { domain.x1 } else { domain.x0 + i as f64 * dx };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(PolyCell::new(vec![
                vid(i, j),
                vid(i + 1, j),
                vid(i + 1, j + 1),
                vid(i, j + 1),
            ]));
        }
    }
    mesh_from_polygons(vertices, cells)
}
