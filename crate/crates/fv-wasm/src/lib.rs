//! Browser demo bindings: three interactive operations returning JSON that
//! the page renders onto canvases. All computation stays in `fv-core`; the
//! functions here only marshal parameters and results, so they are fully
//! testable on the host target.

use std::sync::Arc;

use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use fv_core::discrete::CoefficientVariant;
use fv_core::mesh::Mesh;
use fv_core::verify::{
    alpha_sweep, argmin_alpha, case1, case2, isotropic_case, run_convergence, solve_case,
    MeshFamily, SolverConfig, TestCase,
};

fn pick_case(name: &str) -> Result<TestCase, String> {
    match name {
        "case1" => case1().map_err(|e| e.to_string()),
        "case2" => case2().map_err(|e| e.to_string()),
        "isotropic" => isotropic_case().map_err(|e| e.to_string()),
        other => Err(format!("unknown case {other:?}")),
    }
}

fn pick_family(name: &str, seed: u64) -> Result<MeshFamily, String> {
    match name {
        "rect" => Ok(MeshFamily::Rectangular),
        "delaunay" => Ok(MeshFamily::Delaunay { jitter: 0.15, seed }),
        other => Err(format!("unknown mesh family {other:?}")),
    }
}

fn pick_variant(name: &str) -> Result<CoefficientVariant, String> {
    match name {
        "center" => Ok(CoefficientVariant::Center),
        "barycenter" => Ok(CoefficientVariant::Barycenter),
        other => Err(format!("unknown variant {other:?}")),
    }
}

fn mesh_polygons(mesh: &Mesh<2>) -> serde_json::Value {
    let polys: Vec<Vec<[f64; 2]>> = mesh
        .cells()
        .iter()
        .map(|c| c.vertex_ids.iter().map(|&v| mesh.vertices()[v]).collect())
        .collect();
    json!(polys)
}

fn err_json(message: String) -> String {
    json!({ "error": message }).to_string()
}

fn solve_field_impl(
    case_name: &str,
    family_name: &str,
    level: usize,
    seed: u64,
    alpha: f64,
    variant_name: &str,
) -> Result<String, String> {
    let case = pick_case(case_name)?;
    let family = pick_family(family_name, seed)?;
    let variant = pick_variant(variant_name)?;
    let mesh = Arc::new(family.build(level).map_err(|e| e.to_string())?);
    let alpha_override = if alpha > 0.0 { Some(alpha) } else { None };
    let (u, system, coeffs, stats) = solve_case(
        &case,
        &mesh,
        variant,
        fv_core::discrete::EdgeAlphaRule::DiamondMean,
        alpha_override,
        SolverConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let err_u = case
        .problem
        .exact
        .as_ref()
        .map(|exact| fv_core::discrete::l2_error_at_centers(&u, |p| exact(p)).unwrap_or(f64::NAN));
    let grad = fv_core::discrete::discrete_gradient(&u, &system.boundary, &coeffs)
        .map_err(|e| e.to_string())?;
    let grad_mag: Vec<f64> =
        grad.vectors().iter().map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt()).collect();
    let lo = u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "polygons": mesh_polygons(&mesh),
        "values": u.values(),
        "gradient_magnitude": grad_mag,
        "min": lo,
        "max": hi,
        "cells": mesh.cell_count(),
        "h": mesh.h(),
        "theta": mesh.theta(),
        "iterations": stats.iterations,
        "residual": stats.final_relative_residual,
        "err_u": err_u,
    })
    .to_string())
}

fn convergence_impl(
    case_name: &str,
    family_name: &str,
    levels: &str,
    seed: u64,
    alpha: f64,
    variant_name: &str,
) -> Result<String, String> {
    let case = pick_case(case_name)?;
    let family = pick_family(family_name, seed)?;
    let variant = pick_variant(variant_name)?;
    let levels: Vec<usize> = levels
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if levels.len() < 3 {
        return Err("give at least three levels".into());
    }
    let alpha_override = if alpha > 0.0 { Some(alpha) } else { None };
    let report = run_convergence(
        &case,
        family,
        &levels,
        alpha_override,
        variant,
        SolverConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "level": r.level, "h": r.h, "cells": r.cells,
                "err_u": r.err_u, "err_grad": r.err_grad,
            })
        })
        .collect();
    Ok(json!({
        "case": report.case,
        "rows": rows,
        "eoc_u": report.eoc_u,
        "eoc_grad": report.eoc_grad,
    })
    .to_string())
}

fn sweep_impl(case_name: &str, n: usize, alphas: &str) -> Result<String, String> {
    let case = pick_case(case_name)?;
    let grid: Vec<f64> = alphas
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err("give an alpha grid".into());
    }
    let mut curves = Vec::new();
    for size in [n, 2 * n] {
        let mesh = Arc::new(
            MeshFamily::Rectangular.build(size).map_err(|e| e.to_string())?,
        );
        let rows = alpha_sweep(&case, &mesh, &grid, SolverConfig::default());
        let best = argmin_alpha(&rows);
        let points: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "alpha": r.alpha,
                    "err_u": if r.err_u.is_finite() { json!(r.err_u) } else { json!(null) },
                    "err_grad": if r.err_grad.is_finite() { json!(r.err_grad) } else { json!(null) },
                    "converged": r.converged,
                })
            })
            .collect();
        curves.push(json!({
            "cells": size * size,
            "label": format!("{size} x {size}"),
            "rows": points,
            "argmin_alpha": best.map(|i| rows[i].alpha),
        }));
    }
    Ok(json!({ "case": case.name, "curves": curves }).to_string())
}

/// Solve a case and return the mesh polygons plus cell values as JSON.
/// `alpha <= 0` means the case default; `level` is cells per side for the
/// rectangular family and the lattice resolution for the Delaunay one.
#[wasm_bindgen]
pub fn solve_field(
    case_name: &str,
    family: &str,
    level: usize,
    seed: u64,
    alpha: f64,
    variant: &str,
) -> String {
    solve_field_impl(case_name, family, level, seed, alpha, variant).unwrap_or_else(err_json)
}

/// Run a refinement study; `levels` is a comma-separated list.
#[wasm_bindgen]
pub fn convergence_study(
    case_name: &str,
    family: &str,
    levels: &str,
    seed: u64,
    alpha: f64,
    variant: &str,
) -> String {
    convergence_impl(case_name, family, levels, seed, alpha, variant).unwrap_or_else(err_json)
}

/// Error against alpha on an n x n and a 2n x 2n grid.
#[wasm_bindgen]
pub fn sweep_alpha(case_name: &str, n: usize, alphas: &str) -> String {
    sweep_impl(case_name, n, alphas).unwrap_or_else(err_json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_field_returns_geometry_and_values() {
        let text = solve_field("case1", "delaunay", 5, 1, -1.0, "center");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        let cells = v["cells"].as_u64().unwrap() as usize;
        assert_eq!(v["polygons"].as_array().unwrap().len(), cells);
        assert_eq!(v["values"].as_array().unwrap().len(), cells);
        assert!(v["err_u"].as_f64().unwrap() < 0.05);
        assert!(v["theta"].as_f64().unwrap() > 0.02);
    }

    #[test]
    fn convergence_study_reports_orders() {
        let text = convergence_study("case1", "rect", "8,16,32", 0, -1.0, "center");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
        assert!(v["eoc_u"].as_f64().unwrap() > 1.7);
    }

    #[test]
    fn sweep_alpha_returns_two_curves() {
        let text = sweep_alpha("case1", 8, "0.5,1.0,1.5,2.0");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        let curves = v["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 2);
        assert!(curves[0]["argmin_alpha"].as_f64().is_some());
    }

    #[test]
    fn bad_parameters_come_back_as_error_json() {
        let v: serde_json::Value =
            serde_json::from_str(&solve_field("caseX", "rect", 8, 0, -1.0, "center")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("caseX"));
        let v: serde_json::Value =
            serde_json::from_str(&convergence_study("case1", "rect", "8", 0, -1.0, "center"))
                .unwrap();
        assert!(v.get("error").is_some());
    }
}
