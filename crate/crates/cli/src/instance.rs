//! Versioned JSON instance files.

use std::fs;
use std::path::Path;

use disk_spanner::metric::metric_closure;
use disk_spanner::{Metric, RadiusAssignment};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const INSTANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    Euclidean,
    Matrix,
    /// `dist` is a distance table; the metric is its shortest-path
    /// closure.
    SpecClosure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub kind: InstanceKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

fn default_version() -> u32 {
    INSTANCE_VERSION
}

impl InstanceFile {
    pub fn euclidean(coords: Vec<Vec<f64>>, radii: Vec<f64>) -> Self {
        InstanceFile {
            version: INSTANCE_VERSION,
            kind: InstanceKind::Euclidean,
            n: Some(coords.len()),
            dim: coords.first().map(Vec::len),
            coords: Some(coords),
            dist: None,
            radii,
            metadata: Map::new(),
        }
    }

    pub fn matrix(kind: InstanceKind, dist: Vec<Vec<f64>>, radii: Vec<f64>) -> Self {
        InstanceFile {
            version: INSTANCE_VERSION,
            kind,
            n: Some(dist.len()),
            dim: None,
            coords: None,
            dist: Some(dist),
            radii,
            metadata: Map::new(),
        }
    }

    pub fn point_count(&self) -> usize {
        self.radii.len()
    }

    /// Checks sizes and shape; does not validate the metric axioms.
    pub fn validate(&self) -> CliResult<()> {
        if self.version != INSTANCE_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported instance version {} (expected {INSTANCE_VERSION})",
                self.version
            )));
        }
        let n = self.radii.len();
        if self.n.is_some_and(|m| m != n) {
            return Err(CliError::Usage(format!("n = {:?} but {n} radii", self.n)));
        }
        match self.kind {
            InstanceKind::Euclidean => {
                let coords = self
                    .coords
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("euclidean instance without coords".into()))?;
                if coords.len() != n {
                    return Err(CliError::Usage(format!("{} points but {n} radii", coords.len())));
                }
                if let Some(d) = self.dim {
                    if coords.iter().any(|c| c.len() != d) {
                        return Err(CliError::Usage(format!("coordinates are not all of dimension {d}")));
                    }
                }
            }
            InstanceKind::Matrix | InstanceKind::SpecClosure => {
                let dist = self
                    .dist
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("matrix instance without dist".into()))?;
                if dist.len() != n || dist.iter().any(|row| row.len() != n) {
                    return Err(CliError::Usage(format!("dist must be {n} x {n}")));
                }
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> CliResult<Metric> {
        self.validate()?;
        let m = match self.kind {
            InstanceKind::Euclidean => Metric::euclidean(self.coords.as_deref().unwrap_or_default())?,
            InstanceKind::Matrix => Metric::from_matrix(self.dist.as_deref().unwrap_or_default())?,
            InstanceKind::SpecClosure => metric_closure(self.dist.as_deref().unwrap_or_default())?,
        };
        Ok(m)
    }

    pub fn radius_assignment(&self) -> CliResult<RadiusAssignment> {
        Ok(RadiusAssignment::new(self.radii.clone())?)
    }

    /// The Euclidean dimension, when the instance has one.
    pub fn euclidean_dim(&self) -> Option<usize> {
        match self.kind {
            InstanceKind::Euclidean => self
                .dim
                .or_else(|| self.coords.as_ref().and_then(|c| c.first()).map(Vec::len)),
            _ => None,
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let inst: InstanceFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed instance {}: {e}", path.display())))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, to_json(value)?).map_err(|e| CliError::io(path, e))
}
