//! Run configuration: a TOML document, dotted-key overrides, defaults and
//! validation.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use waveguide_core::designer::DesignConfig;
use waveguide_core::geometry::{Chimney, MeshOptions, WaveguideSpec};
use waveguide_core::obstruction::EigenOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed TOML: {0}")]
    Parse(String),
    #[error("bad override `{0}` (expected key=value)")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Design,
    Predict,
    Obstruction,
    Sweep,
    OracleCompare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChimneyConfig {
    pub x_center: f64,
    pub height: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Alternative to `k`: the wavenumber in units of pi.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_over_pi: Option<f64>,
    pub trunc_half_length: f64,
    pub dtn_terms: usize,
    pub mesh_target_h: f64,
    pub min_cells_across_chimney: usize,
    pub corner_levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transverse_h: Option<f64>,
    /// Fixed vertical cell count per chimney (one entry per chimney).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chimney_vertical_cells: Option<Vec<usize>>,
    pub chimneys: Vec<ChimneyConfig>,
}

impl Default for SpecConfig {
    fn default() -> Self {
        Self {
            k: None,
            k_over_pi: None,
            trunc_half_length: 5.0,
            dtn_terms: 20,
            mesh_target_h: 0.05,
            min_cells_across_chimney: 4,
            corner_levels: 1,
            transverse_h: None,
            chimney_vertical_cells: None,
            chimneys: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub eps: f64,
    /// Defaults to `(-3pi/(4k), 0, 3pi/(4k))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<[f64; 3]>,
    pub stop_tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub t0: [f64; 3],
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            eps: 0.3,
            positions: None,
            stop_tol: 1e-9,
            max_iter: 50,
            relaxation: 1.0,
            t0: [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Eigen-residual target of the obstruction solver.
    pub eigen: f64,
    /// Largest geometry snap accepted by the finite-difference oracle.
    pub snap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eigen: 1e-8, snap: 0.03 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstructionSection {
    /// Defaults to the chimney hull minus one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_minus: Option<f64>,
    /// Defaults to the chimney hull plus one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_plus: Option<f64>,
    pub block_size: usize,
    pub max_iter: usize,
}

impl Default for ObstructionSection {
    fn default() -> Self {
        let e = EigenOptions::default();
        Self {
            x_minus: None,
            x_plus: None,
            block_size: e.block_size,
            max_iter: e.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// One capped design run per `eps`.
    Design,
    /// Coefficients at fixed heights per `eps`.
    Remainder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub mode: SweepMode,
    pub eps: Vec<f64>,
    /// Iteration cap of each design run.
    pub max_iter: usize,
    /// Common chimney height in remainder mode; defaults to `pi/k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mode: SweepMode::Design,
            eps: vec![0.3, 0.2, 0.1],
            max_iter: 15,
            height: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Grid the geometry is snapped to (every FD spacing must divide it).
    pub snap_delta: f64,
    /// Three FD spacings, coarse to fine.
    pub fd_deltas: [f64; 3],
    /// Three FEM target sizes, coarse to fine.
    pub fem_h: [f64; 3],
    pub fem_min_cells: [usize; 3],
    pub fem_corner_levels: [usize; 3],
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            snap_delta: 0.05,
            fd_deltas: [0.05, 0.025, 0.0125],
            fem_h: [0.1, 0.05, 0.025],
            fem_min_cells: [2, 4, 8],
            fem_corner_levels: [1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub spec: SpecConfig,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub obstruction: ObstructionSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

/// Reads `path`, applies `key=value` overrides, fills defaults and validates.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.resolve()
}

/// Sets a dotted key; the value is read as TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(item.into()));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Override(item.into()))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl RunConfig {
    /// Replaces every implicit default by its value and checks ranges.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let k = match (self.spec.k, self.spec.k_over_pi) {
            (Some(_), Some(_)) => return Err(invalid("give either spec.k or spec.k_over_pi, not both")),
            (None, None) => return Err(invalid("spec.k (or spec.k_over_pi) is required")),
            (Some(k), None) => k,
            (None, Some(r)) => r * PI,
        };
        self.spec.k = Some(k);
        self.spec.k_over_pi = None;
        if !(k > 0.0 && k < PI) {
            return Err(invalid(format!("spec.k = {k} must lie in (0, pi)")));
        }
        let s = &self.spec;
        if !(s.trunc_half_length > 0.0) || !(s.mesh_target_h > 0.0) || s.dtn_terms == 0 {
            return Err(invalid("spec.trunc_half_length, spec.mesh_target_h and spec.dtn_terms must be positive"));
        }
        if s.transverse_h.is_some_and(|t| !(t > 0.0)) {
            return Err(invalid("spec.transverse_h must be positive"));
        }
        if let Some(cells) = &s.chimney_vertical_cells {
            if cells.len() != s.chimneys.len() || cells.contains(&0) {
                return Err(invalid("spec.chimney_vertical_cells needs one positive count per chimney"));
            }
        }
        let d = &mut self.design;
        if d.positions.is_none() {
            d.positions = Some(DesignConfig::new(k, d.eps).positions);
        }
        if !(d.eps > 0.0) || !(d.stop_tol > 0.0) || !(d.relaxation > 0.0 && d.relaxation <= 1.0) {
            return Err(invalid("design.eps and design.stop_tol must be positive, design.relaxation in (0, 1]"));
        }
        let t = &self.tolerances;
        if !(t.eigen > 0.0) || !(t.snap > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        match self.command {
            Command::Solve | Command::Predict | Command::Obstruction | Command::OracleCompare => {}
            Command::Design | Command::Sweep => {
                if self.design.max_iter == 0 {
                    return Err(invalid("design.max_iter must be positive"));
                }
            }
        }
        if matches!(self.command, Command::Predict) && self.spec.chimneys.is_empty() {
            return Err(invalid("predict needs at least one chimney"));
        }
        if matches!(self.command, Command::OracleCompare) {
            let o = &self.oracle;
            if !o.fd_deltas.iter().chain(&o.fem_h).chain([&o.snap_delta]).all(|&v| v > 0.0) {
                return Err(invalid("oracle spacings must be positive"));
            }
        }
        if matches!(self.command, Command::Obstruction) {
            if let (Some(a), Some(b)) = (self.obstruction.x_minus, self.obstruction.x_plus) {
                if !(a < b) {
                    return Err(invalid("obstruction.x_minus must be below obstruction.x_plus"));
                }
            }
            if self.obstruction.block_size == 0 || self.obstruction.max_iter == 0 {
                return Err(invalid("obstruction.block_size and obstruction.max_iter must be positive"));
            }
        }
        if matches!(self.command, Command::Sweep) {
            if self.sweep.eps.is_empty() || self.sweep.eps.iter().any(|&e| !(e > 0.0)) {
                return Err(invalid("sweep.eps must be a non-empty list of positive values"));
            }
            if self.sweep.max_iter == 0 {
                return Err(invalid("sweep.max_iter must be positive"));
            }
        }
        Ok(self)
    }

    pub fn k(&self) -> f64 {
        self.spec.k.expect("resolved config")
    }

    pub fn waveguide_spec(&self) -> WaveguideSpec {
        let s = &self.spec;
        WaveguideSpec {
            k: self.k(),
            chimneys: s
                .chimneys
                .iter()
                .map(|c| Chimney::new(c.x_center, c.height, c.width))
                .collect(),
            trunc_half_length: s.trunc_half_length,
            dtn_terms: s.dtn_terms,
            mesh_target_h: s.mesh_target_h,
            min_cells_across_chimney: s.min_cells_across_chimney,
        }
    }

    pub fn mesh_options(&self) -> MeshOptions {
        MeshOptions {
            corner_levels: self.spec.corner_levels,
            transverse_h: self.spec.transverse_h,
            chimney_vertical_cells: self.spec.chimney_vertical_cells.clone(),
            ..MeshOptions::default()
        }
    }

    pub fn design_config(&self) -> DesignConfig {
        let d = &self.design;
        let mut c = DesignConfig::new(self.k(), d.eps);
        c.positions = d.positions.expect("resolved config");
        c.stop_tol = d.stop_tol;
        c.max_iter = d.max_iter;
        c.relaxation = d.relaxation;
        c.t0 = d.t0;
        c
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            block_size: self.obstruction.block_size,
            max_iter: self.obstruction.max_iter,
            tol: self.tolerances.eigen,
            seed: self.seed,
        }
    }

    /// The resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
