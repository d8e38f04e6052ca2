//! Construction of a 2D mesh from polygonal cells.
//!
//! Edges, normals, distances and transmissibilities are always derived here;
//! they are never taken from input. Structural defects (bad indices, wrong
//! orientation, non-manifold edges) are hard errors. Admissibility defects
//! (non-orthogonality, negative distances) are left to the validator so that
//! diagnostic imports can still inspect a broken mesh.

use std::collections::BTreeMap;

use crate::error::MeshError;
use crate::geometry::{self, Point};
use crate::mesh::{Cell, Edge, Mesh};

/// Cell description fed to the builder: CCW vertex loop plus an optional
/// explicit cell point. When absent the point defaults to the circumcenter
/// for triangles and the centroid for axis-aligned rectangles.
#[derive(Clone, Debug)]
pub struct PolyCell {
    pub vertices: Vec<usize>,
    pub center: Option<Point<2>>,
}

impl PolyCell {
    pub fn new(vertices: Vec<usize>) -> Self {
        PolyCell { vertices, center: None }
    }

    pub fn with_center(vertices: Vec<usize>, center: Point<2>) -> Self {
        PolyCell { vertices, center: Some(center) }
    }
}

fn is_axis_aligned_rectangle(pts: &[Point<2>]) -> bool {
    if pts.len() != 4 {
        return false;
    }
    let scale = geometry::polygon_diameter(pts).max(f64::MIN_POSITIVE);
    for i in 0..4 {
        let a = pts[i];
        let b = pts[(i + 1) % 4];
        let e = geometry::sub(b, a);
        if e[0].abs().min(e[1].abs()) > 1e-12 * scale {
            return false;
        }
    }
    true
}

pub fn mesh_from_polygons(
    vertices: Vec<Point<2>>,
    poly_cells: Vec<PolyCell>,
) -> Result<Mesh<2>, MeshError> {
    if poly_cells.is_empty() {
        return Err(MeshError::DegenerateInput("mesh has no cells".into()));
    }
    for (i, v) in vertices.iter().enumerate() {
        if !geometry::is_finite(*v) {
            return Err(MeshError::DegenerateInput(format!("vertex {i} is not finite")));
        }
    }

    let mut cells: Vec<Cell<2>> = Vec::with_capacity(poly_cells.len());
    for (k, pc) in poly_cells.iter().enumerate() {
        if pc.vertices.len() < 3 {
            return Err(MeshError::DegenerateInput(format!(
                "cell {k} has {} vertices",
                pc.vertices.len()
            )));
        }
        let mut pts = Vec::with_capacity(pc.vertices.len());
        for &vi in &pc.vertices {
            let p = *vertices.get(vi).ok_or(MeshError::MissingVertex { cell: k, vertex: vi })?;
            pts.push(p);
        }
        let area = geometry::polygon_signed_area(&pts);
        if !(area > 0.0) || !area.is_finite() {
            return Err(MeshError::NotCcw { cell: k });
        }
        let centroid = geometry::polygon_centroid(&pts);
        let center = match pc.center {
            Some(c) => c,
            None if pts.len() == 3 => geometry::circumcenter(pts[0], pts[1], pts[2])
                .ok_or_else(|| MeshError::DegenerateInput(format!("cell {k} is collinear")))?,
            None if is_axis_aligned_rectangle(&pts) => centroid,
            None => return Err(MeshError::MissingCenter { cell: k }),
        };
        if !geometry::is_finite(center) {
            return Err(MeshError::DegenerateInput(format!("cell {k} center is not finite")));
        }
        cells.push(Cell {
            vertex_ids: pc.vertices.clone(),
            center,
            centroid,
            measure: area,
            diameter: geometry::polygon_diameter(&pts),
            edge_ids: Vec::new(),
            is_boundary_adjacent: false,
        });
    }

    // Undirected edge map keyed by sorted vertex pair; BTreeMap keeps the
    // edge numbering independent of hash order.
    struct Draft {
        a: usize,
        b: usize,
        inner: usize,
        outer: Option<usize>,
    }
    let mut drafts: BTreeMap<(usize, usize), Draft> = BTreeMap::new();
    for (k, pc) in poly_cells.iter().enumerate() {
        let n = pc.vertices.len();
        for i in 0..n {
            let a = pc.vertices[i];
            let b = pc.vertices[(i + 1) % n];
            if a == b {
                return Err(MeshError::DegenerateInput(format!("cell {k} repeats vertex {a}")));
            }
            let key = (a.min(b), a.max(b));
            match drafts.get_mut(&key) {
                None => {
                    drafts.insert(key, Draft { a, b, inner: k, outer: None });
                }
                Some(d) if d.outer.is_none() && d.inner != k => d.outer = Some(k),
                Some(_) => return Err(MeshError::NonManifoldEdge { v0: key.0, v1: key.1 }),
            }
        }
    }

    let mut edges: Vec<Edge<2>> = Vec::with_capacity(drafts.len());
    let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (key, d) in drafts.iter() {
        let pa = vertices[d.a];
        let pb = vertices[d.b];
        let measure = geometry::dist(pa, pb);
        if measure <= 0.0 {
            return Err(MeshError::DegenerateInput(format!(
                "zero-length edge between vertices {} and {}",
                d.a, d.b
            )));
        }
        // Inner cell traverses a -> b counter-clockwise, so the outward
        // normal is the clockwise rotation of the edge direction.
        let t = geometry::scale(1.0 / measure, geometry::sub(pb, pa));
        let normal = [t[1], -t[0]];
        let barycenter = geometry::scale(0.5, geometry::add(pa, pb));
        let xk = cells[d.inner].center;
        let d_inner = geometry::dot(geometry::sub(barycenter, xk), normal);
        let (d_outer, projection, transmissibility) = match d.outer {
            Some(l) => {
                let dl = geometry::dot(geometry::sub(cells[l].center, barycenter), normal);
                (Some(dl), None, measure / (d_inner + dl))
            }
            None => {
                let z = geometry::axpy(d_inner, normal, xk);
                (None, Some(z), measure / d_inner)
            }
        };
        edge_index.insert(*key, edges.len());
        edges.push(Edge {
            vertex_ids: vec![d.a, d.b],
            measure,
            barycenter,
            inner_cell: d.inner,
            outer_cell: d.outer,
            normal,
            d_inner,
            d_outer,
            projection,
            transmissibility,
        });
    }

    for (k, pc) in poly_cells.iter().enumerate() {
        let n = pc.vertices.len();
        for i in 0..n {
            let a = pc.vertices[i];
            let b = pc.vertices[(i + 1) % n];
            let e = edge_index[&(a.min(b), a.max(b))];
            cells[k].edge_ids.push(e);
            if edges[e].is_boundary() {
                cells[k].is_boundary_adjacent = true;
            }
        }
    }

    let domain_diameter = geometry::point_set_diameter(&vertices);
    Ok(Mesh::from_parts(vertices, cells, edges, domain_diameter))
}

/// Build a mesh from a triangle soup, taking circumcenters as cell points.
pub fn mesh_from_triangles(
    vertices: Vec<Point<2>>,
    triangles: Vec<[usize; 3]>,
) -> Result<Mesh<2>, MeshError> {
    let cells = triangles.into_iter().map(|t| PolyCell::new(t.to_vec())).collect();
    mesh_from_polygons(vertices, cells)
}
