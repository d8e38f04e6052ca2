//! Report writers. Every file carries the tool version, the config echo and
//! the seed; files are written to a temp path and renamed so readers never
//! see partial output. Floats use shortest round-trip decimals.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use serde_json::json;

use fv_core::mesh::{Mesh, ValidationReport};
use fv_core::verify::{AlphaSweepRow, ConvergenceReport};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub struct OutputSink {
    target: Option<PathBuf>,
    format: ReportFormat,
    config: String,
    seed: u64,
    text: String,
    value: Option<serde_json::Value>,
}

impl OutputSink {
    pub fn new(
        target: Option<&Path>,
        format: ReportFormat,
        config: &str,
        seed: u64,
    ) -> Result<Self> {
        Ok(OutputSink {
            target: target.map(|p| p.to_path_buf()),
            format,
            config: config.to_string(),
            seed,
            text: String::new(),
            value: None,
        })
    }

    fn meta(&self) -> serde_json::Value {
        json!({
            "tool": "fv",
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "seed": self.seed,
        })
    }

    fn header(&mut self) {
        self.text.push_str(&format!(
            "# fv {}; config: {}; seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.config,
            self.seed
        ));
    }

    pub fn convergence(&mut self, report: &ConvergenceReport) -> Result<()> {
        match self.format {
            ReportFormat::Csv => {
                self.header();
                self.text.push_str("h,cells,theta,err_u_l2,err_grad_l2\n");
                for r in &report.rows {
                    self.text.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r.h, r.cells, r.theta, r.err_u, r.err_grad
                    ));
                }
                self.text.push_str(&format!("# eoc_u={}\n", report.eoc_u));
                self.text.push_str(&format!("# eoc_grad={}\n", report.eoc_grad));
            }
            ReportFormat::Json => {
                let rows: Vec<_> = report
                    .rows
                    .iter()
                    .map(|r| {
                        json!({
                            "level": r.level,
                            "h": r.h,
                            "cells": r.cells,
                            "theta": r.theta,
                            "err_u_l2": r.err_u,
                            "err_grad_l2": r.err_grad,
                            "iterations": r.iterations,
                        })
                    })
                    .collect();
                self.value = Some(json!({
                    "meta": self.meta(),
                    "case": report.case,
                    "rows": rows,
                    "eoc_u": report.eoc_u,
                    "eoc_grad": report.eoc_grad,
                }));
            }
        }
        Ok(())
    }

    pub fn alpha_sweep(&mut self, rows: &[AlphaSweepRow]) -> Result<()> {
        match self.format {
            ReportFormat::Csv => {
                self.header();
                self.text.push_str("alpha,err_u_l2,err_grad_l2,converged\n");
                for r in rows {
                    self.text.push_str(&format!(
                        "{},{},{},{}\n",
                        r.alpha, r.err_u, r.err_grad, r.converged
                    ));
                }
            }
            ReportFormat::Json => {
                let rows: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "alpha": r.alpha,
                            "err_u_l2": if r.err_u.is_finite() { json!(r.err_u) } else { json!(null) },
                            "err_grad_l2": if r.err_grad.is_finite() { json!(r.err_grad) } else { json!(null) },
                            "converged": r.converged,
                        })
                    })
                    .collect();
                self.value = Some(json!({ "meta": self.meta(), "rows": rows }));
            }
        }
        Ok(())
    }

    pub fn solution(&mut self, mesh: &Mesh<2>, values: &[f64]) -> Result<()> {
        match self.format {
            ReportFormat::Csv => {
                self.header();
                self.text.push_str("cell_id,x,y,u\n");
                for (k, cell) in mesh.cells().iter().enumerate() {
                    self.text.push_str(&format!(
                        "{},{},{},{}\n",
                        k, cell.center[0], cell.center[1], values[k]
                    ));
                }
            }
            ReportFormat::Json => {
                let rows: Vec<_> = mesh
                    .cells()
                    .iter()
                    .enumerate()
                    .map(|(k, cell)| {
                        json!({"cell_id": k, "x": cell.center[0], "y": cell.center[1], "u": values[k]})
                    })
                    .collect();
                self.value = Some(json!({ "meta": self.meta(), "cells": rows }));
            }
        }
        Ok(())
    }

    pub fn validation_report(&mut self, report: &ValidationReport) -> Result<()> {
        match self.format {
            ReportFormat::Csv => {
                self.header();
                self.text.push_str(&format!("# cells={}\n", report.cell_count));
                self.text.push_str(&format!("# h={}\n", report.h));
                self.text.push_str(&format!("# theta={}\n", report.theta));
                self.text.push_str(&format!(
                    "# boundary_alignment_sufficient={}\n",
                    report.boundary_alignment_sufficient
                ));
                self.text.push_str(&format!("# admissible={}\n", report.is_admissible()));
                self.text.push_str("violation\n");
                for v in &report.violations {
                    self.text.push_str(&format!("{:?}\n", v));
                }
            }
            ReportFormat::Json => {
                let violations: Vec<_> =
                    report.violations.iter().map(|v| json!(format!("{v:?}"))).collect();
                self.value = Some(json!({
                    "meta": self.meta(),
                    "cells": report.cell_count,
                    "h": report.h,
                    "theta": report.theta,
                    "boundary_alignment_sufficient": report.boundary_alignment_sufficient,
                    "max_geometric_identity_residual": report.max_geometric_identity_residual,
                    "max_orthogonality_deviation": report.max_orthogonality_deviation,
                    "admissible": report.is_admissible(),
                    "violations": violations,
                }));
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let body = match self.format {
            ReportFormat::Csv => self.text,
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.value.unwrap_or(json!({})))?;
                s.push('\n');
                s
            }
        };
        match self.target {
            None => {
                std::io::stdout().write_all(body.as_bytes())?;
            }
            Some(path) => {
                let tmp = path.with_extension("tmp");
                std::fs::write(&tmp, body.as_bytes())?;
                std::fs::rename(&tmp, &path)?;
            }
        }
        Ok(())
    }
}
