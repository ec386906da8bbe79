//! Machine-readable invariant reports.

use std::path::Path;

use serde::Serialize;

use crate::config::Table;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` when the stage producing the residual failed.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let finite = residual.is_finite();
        Self {
            name: name.into(),
            max_residual: finite.then_some(residual),
            tolerance,
            pass: finite && residual <= tolerance,
        }
    }

    pub fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), max_residual: None, tolerance, pass: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Table,
    /// Derived quantities such as the chosen `α`.
    pub results: std::collections::BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Faces excluded from curvature statistics.
    pub degenerate_faces: Vec<(i32, i32)>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, params: Table) -> Self {
        Self {
            command: command.into(),
            params,
            results: Default::default(),
            checks: vec![],
            degenerate_faces: vec![],
            notes: vec![],
            pass: true,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
