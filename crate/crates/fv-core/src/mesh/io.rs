//! Mesh file format: a self-describing JSON document.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "vertices": [[0.0, 0.0], [1.0, 0.0], ...],
//!   "cells": [{"vertices": [0, 1, 5, 4], "center": [0.5, 0.5]}, ...]
//! }
//! ```
//!
//! Vertices and centers carry full double precision (shortest round-trip
//! decimals). Cell vertex lists are counter-clockwise. A missing center is
//! recomputed as the circumcenter for triangles and the centroid for
//! axis-aligned rectangles. Edges, normals and transmissibilities are always
//! derived on import, never stored.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::mesh::builder::{mesh_from_polygons, PolyCell};
use crate::mesh::validate::validate_with_tolerance;
use crate::mesh::{Mesh, ValidationReport};

#[derive(Serialize, Deserialize)]
struct CellRecord {
    vertices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct MeshDocument {
    dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    meta: Option<serde_json::Value>,
    vertices: Vec<[f64; 2]>,
    cells: Vec<CellRecord>,
}

#[derive(Clone, Debug)]
pub struct ImportOptions {
    /// Smallest accepted d_{K,sigma}/diam(K).
    pub theta_min: f64,
    /// Orthogonality tolerance in radians; imports are looser than the
    /// generator default to absorb decimal truncation in foreign files.
    pub orthogonality_tol: f64,
    /// Diagnostic mode: return the mesh even when the validator objects.
    pub allow_invalid: bool,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions { theta_min: 1e-9, orthogonality_tol: 1e-6, allow_invalid: false }
    }
}

pub fn read_mesh<R: Read>(
    mut reader: R,
    options: &ImportOptions,
) -> Result<(Mesh<2>, ValidationReport), MeshError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let doc: MeshDocument = serde_json::from_str(&text).map_err(|e| MeshError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.dimension != 2 {
        return Err(MeshError::Format(format!(
            "dimension {} unsupported by this build (expected 2)",
            doc.dimension
        )));
    }
    let cells = doc
        .cells
        .into_iter()
        .map(|c| PolyCell { vertices: c.vertices, center: c.center })
        .collect();
    let mesh = mesh_from_polygons(doc.vertices, cells)?;
    let report = validate_with_tolerance(&mesh, options.theta_min, options.orthogonality_tol);
    if !report.is_admissible() && !options.allow_invalid {
        let cell = report.first_offending_cell().unwrap_or(0);
        return Err(MeshError::Inadmissible {
            cell,
            reason: format!("{:?}", report.violations.first().unwrap()),
        });
    }
    Ok((mesh, report))
}

pub fn write_mesh<W: Write>(
    mesh: &Mesh<2>,
    mut writer: W,
    meta: Option<serde_json::Value>,
) -> Result<(), MeshError> {
    let doc = MeshDocument {
        dimension: 2,
        meta,
        vertices: mesh.vertices().to_vec(),
        cells: mesh
            .cells()
            .iter()
            .map(|c| CellRecord { vertices: c.vertex_ids.clone(), center: Some(c.center) })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| MeshError::Format(e.to_string()))?;
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn import_mesh(path: impl AsRef<Path>) -> Result<Mesh<2>, MeshError> {
    let (mesh, _) = import_mesh_with(path, &ImportOptions::default())?;
    Ok(mesh)
}

pub fn import_mesh_with(
    path: impl AsRef<Path>,
    options: &ImportOptions,
) -> Result<(Mesh<2>, ValidationReport), MeshError> {
    let file = fs::File::open(path)?;
    read_mesh(std::io::BufReader::new(file), options)
}

pub fn export_mesh(mesh: &Mesh<2>, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let file = fs::File::create(path)?;
    write_mesh(mesh, std::io::BufWriter::new(file), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangular_mesh, Rect};

    fn roundtrip(mesh: &Mesh<2>) -> Mesh<2> {
        let mut buf = Vec::new();
        write_mesh(mesh, &mut buf, None).unwrap();
        let (back, _) = read_mesh(buf.as_slice(), &ImportOptions::default()).unwrap();
        back
    }

    #[test]
    fn export_import_is_identity() {
        let mesh = build_rectangular_mesh(2, 2, Rect::UNIT).unwrap();
        let back = roundtrip(&mesh);
        assert_eq!(back.cell_count(), mesh.cell_count());
        assert_eq!(back.edge_count(), mesh.edge_count());
        for (a, b) in mesh.cells().iter().zip(back.cells()) {
            assert_eq!(a.center, b.center);
            assert_eq!(a.measure, b.measure);
        }
        for (a, b) in mesh.edges().iter().zip(back.edges()) {
            assert_eq!(a.transmissibility, b.transmissibility);
            assert_eq!(a.normal, b.normal);
        }
        assert_eq!(mesh.theta(), back.theta());
    }

    #[test]
    fn missing_vertex_is_a_parse_class_error() {
        let text = r#"{"dimension": 2,
            "vertices": [[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,1.0]],
            "cells": [{"vertices": [0,1,2,9]}]}"#;
        let err = read_mesh(text.as_bytes(), &ImportOptions::default()).unwrap_err();
        assert!(matches!(err, MeshError::MissingVertex { cell: 0, vertex: 9 }));
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\"dimension\": 2,\n \"vertices\": [[0,0],]";
        let err = read_mesh(text.as_bytes(), &ImportOptions::default()).unwrap_err();
        match err {
            MeshError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn handwritten_voronoi_strips_are_accepted() {
        // Voronoi diagram of the collinear seeds (0.2,0.5), (0.5,0.5),
        // (0.9,0.5) on the unit square: three vertical strips whose cell
        // points are the seeds, not the centroids.
        let text = r#"{
            "dimension": 2,
            "vertices": [
                [0.0,0.0],[0.35,0.0],[0.7,0.0],[1.0,0.0],
                [0.0,1.0],[0.35,1.0],[0.7,1.0],[1.0,1.0]
            ],
            "cells": [
                {"vertices": [0,1,5,4], "center": [0.2,0.5]},
                {"vertices": [1,2,6,5], "center": [0.5,0.5]},
                {"vertices": [2,3,7,6], "center": [0.9,0.5]}
            ]
        }"#;
        let (mesh, report) = read_mesh(text.as_bytes(), &ImportOptions::default()).unwrap();
        assert!(report.is_admissible(), "{:?}", report.violations);
        assert_eq!(mesh.cell_count(), 3);
        // Bisector property: interior transmissibilities from seed gaps.
        let taus: Vec<f64> = mesh
            .interior_edge_ids()
            .map(|e| mesh.edge(e).transmissibility)
            .collect();
        assert_eq!(taus.len(), 2);
        assert!((taus[0] - 1.0 / 0.3).abs() < 1e-12);
        assert!((taus[1] - 1.0 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_import_is_rejected_unless_diagnostic() {
        // Right triangle: circumcenter on the hypotenuse, d = 0.
        let text = r#"{"dimension": 2,
            "vertices": [[0.0,0.0],[1.0,0.0],[0.0,1.0]],
            "cells": [{"vertices": [0,1,2]}]}"#;
        let err = read_mesh(text.as_bytes(), &ImportOptions::default()).unwrap_err();
        assert!(matches!(err, MeshError::Inadmissible { .. }));
        let opts = ImportOptions { allow_invalid: true, ..ImportOptions::default() };
        let (_, report) = read_mesh(text.as_bytes(), &opts).unwrap();
        assert!(!report.is_admissible());
    }
}
