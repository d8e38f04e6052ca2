//! End-to-end tests of the `fv` binary: output schemas, determinism and
//! exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn fv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fv"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn convergence_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(
        &[
            "convergence",
            "--case",
            "case1",
            "--mesh",
            "rect",
            "--levels",
            "8,16,32",
            "--output",
            "conv.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# fv "));
    assert!(lines[0].contains("config:"));
    assert!(lines[0].contains("seed:"));
    assert_eq!(lines[1], "h,cells,theta,err_u_l2,err_grad_l2");
    assert_eq!(lines.len(), 2 + 3 + 2);
    assert!(lines[5].starts_with("# eoc_u="));
    assert!(lines[6].starts_with("# eoc_grad="));
    let eoc_u: f64 = lines[5].trim_start_matches("# eoc_u=").parse().unwrap();
    assert!(eoc_u > 1.7);
    // Rows parse as full-precision floats.
    let first: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first.len(), 5);
    first[0].parse::<f64>().unwrap();
    first[1].parse::<usize>().unwrap();
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "convergence",
        "--case",
        "case1",
        "--mesh",
        "delaunay",
        "--levels",
        "4,6,8",
        "--seed",
        "7",
        "--output",
        "c.csv",
    ];
    assert!(fv(&args, dir.path()).status.success());
    let first = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert!(fv(&args, dir.path()).status.success());
    let second = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn mesh_gen_check_roundtrip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(
        &[
            "mesh", "gen", "--family", "delaunay", "--resolution", "5", "--jitter", "0.1",
            "--seed", "2", "--output", "mesh.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = fv(&["mesh", "check", "--input", "mesh.json"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# admissible=true"));
    assert!(text.contains("# boundary_alignment_sufficient=true"));

    // An inadmissible mesh file: right triangle, circumcenter on the
    // hypotenuse.
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"dimension": 2,
            "vertices": [[0.0,0.0],[1.0,0.0],[0.0,1.0]],
            "cells": [{"vertices": [0,1,2]}]}"#,
    )
    .unwrap();
    let out = fv(&["mesh", "check", "--input", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = fv(&["mesh", "check", "--input", "bad.json", "--allow-invalid"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# admissible=false"));
}

#[test]
fn solve_outputs_solution_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(
        &[
            "solve", "--case", "case2", "--mesh", "rect", "--n", "10", "--alpha", "9.8",
            "--dump-matrix", "m.mtx", "--output", "sol.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    let lines: Vec<&str> = sol.lines().collect();
    assert_eq!(lines[1], "cell_id,x,y,u");
    assert_eq!(lines.len(), 2 + 100);
    let mtx = std::fs::read_to_string(dir.path().join("m.mtx")).unwrap();
    let mut it = mtx.lines();
    assert_eq!(it.next().unwrap(), "%%MatrixMarket matrix coordinate real symmetric");
    assert!(it.next().unwrap().starts_with("% fv "));
    let size: Vec<usize> =
        it.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(size[0], 100);
    assert_eq!(size[1], 100);
    // Lower triangle, 1-based.
    for line in it {
        let t: Vec<&str> = line.split_whitespace().collect();
        let (i, j): (usize, usize) = (t[0].parse().unwrap(), t[1].parse().unwrap());
        assert!(i >= 1 && j >= 1 && j <= i);
    }
}

#[test]
fn alpha_sweep_records_failed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(
        &[
            "alpha-sweep",
            "--case",
            "case1",
            "--mesh",
            "rect",
            "--n",
            "8",
            "--alphas",
            "0.5,1.0,-2.0",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "alpha,err_u_l2,err_grad_l2,converged");
    assert!(lines[2].ends_with("true"));
    assert!(lines[4].starts_with("-2,NaN,NaN,false"));
}

#[test]
fn properties_subcommand_passes_on_good_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(
        &["properties", "--mesh", "rect", "--n", "6", "--samples", "10"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("geometric identity"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = fv(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = fv(&["solve", "--case", "case1", "--mesh", "rect", "--n", "notanumber"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // Computational failure: unknown case name.
    let out = fv(&["solve", "--case", "case9", "--mesh", "rect", "--n", "4"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
