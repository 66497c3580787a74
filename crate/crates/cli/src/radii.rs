//! Radii file schema: per-plane (circular ground truth) or per-vertex
//! (predictions), in mm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_angles: Option<usize>,
    /// Plane spacing the radii were sampled at, informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_plane: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_vertex: Option<Vec<Vec<f64>>>,
}

impl RadiiFile {
    pub fn per_plane(step_mm: f64, radii: Vec<f64>) -> Self {
        Self {
            n_angles: None,
            step_mm: Some(step_mm),
            per_plane: Some(radii),
            per_vertex: None,
        }
    }

    pub fn per_vertex(n_angles: usize, rows: Vec<Vec<f64>>) -> Self {
        Self {
            n_angles: Some(n_angles),
            step_mm: None,
            per_plane: None,
            per_vertex: Some(rows),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let file: RadiiFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        match (&file.per_plane, &file.per_vertex) {
            (Some(_), None) | (None, Some(_)) => Ok(file),
            _ => Err(CliError::Validation(format!(
                "{}: exactly one of per_plane / per_vertex must be present",
                path.display()
            ))),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn n_planes(&self) -> usize {
        match (&self.per_plane, &self.per_vertex) {
            (Some(p), _) => p.len(),
            (_, Some(v)) => v.len(),
            _ => 0,
        }
    }

    /// Flat per-vertex radii for a graph with `n_angles` ring vertices.
    pub fn expand(&self, n_angles: usize) -> Result<Vec<f64>, CliError> {
        if let Some(declared) = self.n_angles {
            if declared != n_angles {
                return Err(CliError::Validation(format!(
                    "radii file declares {declared} angles, pipeline uses {n_angles}"
                )));
            }
        }
        if let Some(per_plane) = &self.per_plane {
            return Ok(per_plane
                .iter()
                .flat_map(|&r| std::iter::repeat_n(r, n_angles))
                .collect());
        }
        let rows = self.per_vertex.as_ref().ok_or_else(|| {
            CliError::Validation("radii file holds neither per_plane nor per_vertex".into())
        })?;
        let mut out = Vec::with_capacity(rows.len() * n_angles);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_angles {
                return Err(CliError::Validation(format!(
                    "per_vertex row {i} has {} entries, expected {n_angles}",
                    row.len()
                )));
            }
            out.extend_from_slice(row);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_plane_expands_to_rings() {
        let f = RadiiFile::per_plane(0.5, vec![1.0, 2.0]);
        let flat = f.expand(3).unwrap();
        assert_eq!(flat, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(f.n_planes(), 2);
    }

    #[test]
    fn per_vertex_rows_must_match_angle_count() {
        let f = RadiiFile::per_vertex(3, vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0]]);
        assert!(f.expand(3).is_err());
    }
}
