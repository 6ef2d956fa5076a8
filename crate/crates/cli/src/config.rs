//! Run configuration: schema, `--set` overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use plasmahom::analysis::{check_grid, linear_grid, TensorEntry};
use plasmahom::cellsolver::Backend;
use plasmahom::geometry::{build_geometry, GeometryKind};
use plasmahom::macrosolver::{Pml, SlabLayout};
use plasmahom::materials::{rescaled_eta_with, BulkPermittivity, DrudeParams, MaterialSpec, ETA_PREFACTOR, OMEGA_UNIT};
use plasmahom::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub geometry: GeometryKind,
    #[serde(default)]
    pub material: MaterialBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub task: Task,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A bare `[re, im]` pair, or separate values inside and outside the
/// interfaces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsBulk {
    Uniform(Complex64),
    Regions { outer: Complex64, inner: Option<Complex64> },
}

impl EpsBulk {
    pub fn to_bulk(self) -> BulkPermittivity {
        match self {
            EpsBulk::Uniform(e) => BulkPermittivity::uniform(e),
            EpsBulk::Regions { outer, inner } => BulkPermittivity { outer, inner },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrudeBlock {
    #[serde(rename = "E_F_tilde")]
    pub fermi_energy_tilde: f64,
    #[serde(default)]
    pub omega_tilde: Option<f64>,
    pub d_tilde: f64,
    #[serde(default = "default_tau_ps")]
    pub tau_ps: f64,
}

fn default_tau_ps() -> f64 {
    0.5
}

impl DrudeBlock {
    fn params(&self, omega: f64) -> DrudeParams {
        DrudeParams::new(self.fermi_energy_tilde, omega, self.d_tilde).with_relax_time(self.tau_ps * 1e-12)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaterialBlock {
    #[serde(default = "unit_eps")]
    pub eps_bulk: EpsBulk,
    /// Fixed cell-scaled surface conductivity. Excludes `drude`.
    #[serde(default)]
    pub sigma_surface: Option<Complex64>,
    #[serde(default)]
    pub lambda_line: Complex64,
    #[serde(default)]
    pub drude: Option<DrudeBlock>,
}

fn unit_eps() -> EpsBulk {
    EpsBulk::Uniform(Complex64::new(1.0, 0.0))
}

impl Default for MaterialBlock {
    fn default() -> Self {
        Self {
            eps_bulk: unit_eps(),
            sigma_surface: None,
            lambda_line: Complex64::new(0.0, 0.0),
            drude: None,
        }
    }
}

impl MaterialBlock {
    /// Cell-problem coefficients at `omega`.
    pub fn at(&self, omega: f64) -> plasmahom::Result<MaterialSpec> {
        let sigma = match &self.drude {
            Some(d) => {
                let damping = 1.0 / (d.tau_ps * 1e-12 * OMEGA_UNIT);
                let eta = rescaled_eta_with(ETA_PREFACTOR, damping, d.fermi_energy_tilde, d.d_tilde, omega)?;
                Complex64::i() * omega * eta
            }
            None => self.sigma_surface.unwrap_or_default(),
        };
        let mut m = MaterialSpec::new(Complex64::new(1.0, 0.0), sigma, self.lambda_line);
        m.eps_bulk = self.eps_bulk.to_bulk();
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverBlock {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub backend: Backend,
}

fn default_h() -> f64 {
    0.025
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            h: default_h(),
            tol: default_tol(),
            parallelism: 0,
            backend: Backend::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Linear { start: f64, stop: f64, points: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Linear { start, stop, points } => linear_grid(*start, *stop, *points),
            GridSpec::List(v) => v.clone(),
        }
    }
}

fn default_entry() -> TensorEntry {
    TensorEntry::Eps11
}

fn default_max_loss() -> f64 {
    plasmahom::enz::REALIZABLE_LOSS
}

fn default_ppw() -> usize {
    20
}

fn default_pml_cells() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Mesh {},
    Cell {
        #[serde(default)]
        omega_tilde: Option<f64>,
    },
    Effperm {
        #[serde(default)]
        omega_tilde: Option<f64>,
    },
    Sweep {
        omega: GridSpec,
        #[serde(default = "default_entry")]
        entry: TensorEntry,
    },
    /// Averaged quantities default to the material block: `eps_bar` to the
    /// outer bulk value, `spacing` to `drude.d_tilde`, `sigma_d` to the
    /// Drude conductivity (or `spacing * sigma_surface`) and `lambda_d` to
    /// `spacing^2 * lambda_line`.
    Enz {
        #[serde(default)]
        omega_tilde: Option<f64>,
        #[serde(default)]
        spacing: Option<f64>,
        #[serde(default)]
        eps_bar: Option<Complex64>,
        #[serde(default)]
        sigma_d: Option<Complex64>,
        #[serde(default)]
        lambda_d: Option<Complex64>,
        #[serde(default = "default_max_loss")]
        max_loss: f64,
    },
    /// Dipole beneath a slab. Without `slab_eps` the slab takes the
    /// diagonal of the effective tensor at `omega_tilde`.
    Macro {
        #[serde(default)]
        omega_tilde: Option<f64>,
        #[serde(default)]
        slab_eps: Option<[Complex64; 3]>,
        #[serde(default = "default_ppw")]
        points_per_wavelength: usize,
        #[serde(default = "default_pml_cells")]
        pml_cells: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        /// Also rerun with a doubled absorber and a doubled grid.
        #[serde(default)]
        checks: bool,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Mesh {} => "mesh",
            Task::Cell { .. } => "cell",
            Task::Effperm { .. } => "effperm",
            Task::Sweep { .. } => "sweep",
            Task::Enz { .. } => "enz",
            Task::Macro { .. } => "macro",
        }
    }

    fn omega(&self) -> Option<Option<f64>> {
        match self {
            Task::Cell { omega_tilde } | Task::Effperm { omega_tilde } => Some(*omega_tilde),
            Task::Enz { omega_tilde, .. } | Task::Macro { omega_tilde, .. } => Some(*omega_tilde),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    Txt,
    Bin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub directory: String,
    /// Optional artifact kinds; the JSON result is always written.
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "out".into()
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Svg, Format::Txt, Format::Bin]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            formats: all_formats(),
        }
    }
}

impl RunConfig {
    /// Frequency of a single-frequency task, from the task or the Drude
    /// block.
    pub fn omega(&self) -> Option<f64> {
        self.task
            .omega()
            .and_then(|o| o.or(self.material.drude.and_then(|d| d.omega_tilde)))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// A parsed, validated configuration with its provenance.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    /// Effective configuration after overrides.
    pub value: Value,
    pub sha256: String,
    pub base_dir: PathBuf,
    pub overrides: Vec<String>,
    pub warnings: Vec<String>,
}

impl Loaded {
    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.directory)
    }
}

/// Applies one `dotted.path=value` override. The value is read as JSON and
/// falls back to a plain string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), Issue> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Issue::new("--set", format!("expected key=value, got `{spec}`")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Issue::new("--set", format!("bad key `{path}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Issue::new(path, format!("`{part}` indexes an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Issue::new(path, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Issue::new(path, format!("`{part}` is inside a scalar"))),
        };
    }
    Ok(())
}

/// Keys present in `input` that did not survive deserialisation.
fn unknown_keys(input: &Value, parsed: &Value, path: &str, out: &mut Vec<String>) {
    match (input, parsed) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get(k) {
                    Some(w) => unknown_keys(v, w, &p, out),
                    None => out.push(p),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (k, (v, w)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, w, &format!("{path}.{k}"), out);
            }
        }
        _ => {}
    }
}

pub fn sha256_hex(value: &Value) -> String {
    let bytes = serde_json::to_vec(value).expect("JSON values serialise");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads, overrides, parses and validates a configuration. All problems
/// found are returned together.
pub fn load(path: &Path, overrides: &[String]) -> Result<Loaded, Vec<Issue>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Issue::new("", format!("cannot read {}: {e}", path.display()))])?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| vec![Issue::new("", format!("malformed JSON: {e}"))])?;
    let mut issues = Vec::new();
    for spec in overrides {
        if let Err(i) = apply_override(&mut value, spec) {
            issues.push(i);
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    let config: RunConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let p = e.path().to_string();
        vec![Issue::new(
            if p == "." { String::new() } else { p },
            e.into_inner().to_string(),
        )]
    })?;
    let round_trip = serde_json::to_value(&config).expect("configuration serialises");
    let mut unknown = Vec::new();
    unknown_keys(&value, &round_trip, "", &mut unknown);
    issues.extend(unknown.into_iter().map(|k| Issue::new(k, "unknown key")));
    issues.extend(validate(&config));
    if !issues.is_empty() {
        return Err(issues);
    }
    let base_dir = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok(Loaded {
        sha256: sha256_hex(&value),
        warnings: warnings(&config),
        config,
        value,
        base_dir,
        overrides: overrides.to_vec(),
    })
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Cross-field checks that need no solver.
pub fn validate(c: &RunConfig) -> Vec<Issue> {
    let mut out = Vec::new();
    if c.schema_version != SCHEMA_VERSION {
        out.push(Issue::new(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", c.schema_version),
        ));
    }
    if let Err(e) = build_geometry(c.geometry) {
        out.push(Issue::new("geometry", e.to_string()));
    }

    let s = &c.solver;
    if !(positive(s.h) && s.h <= 0.25) {
        out.push(Issue::new("solver.h", format!("must lie in (0, 0.25], got {}", s.h)));
    }
    if !(s.tol > 0.0 && s.tol <= 1e-6) {
        out.push(Issue::new(
            "solver.tol",
            format!("must lie in (0, 1e-6], got {}", s.tol),
        ));
    }

    let m = &c.material;
    if m.drude.is_some() && m.sigma_surface.is_some() {
        out.push(Issue::new(
            "material",
            "set either `sigma_surface` or `drude`, not both",
        ));
    }
    if let Some(d) = &m.drude {
        if !positive(d.d_tilde) {
            out.push(Issue::new(
                "material.drude.d_tilde",
                format!("must be positive, got {}", d.d_tilde),
            ));
        }
        if !positive(d.tau_ps) {
            out.push(Issue::new(
                "material.drude.tau_ps",
                format!("must be positive, got {}", d.tau_ps),
            ));
        }
        if !d.fermi_energy_tilde.is_finite() {
            out.push(Issue::new("material.drude.E_F_tilde", "must be finite"));
        }
        if let Some(w) = d.omega_tilde.filter(|w| !positive(*w)) {
            out.push(Issue::new(
                "material.drude.omega_tilde",
                format!("must be positive, got {w}"),
            ));
        }
    }
    if let Err(e) = m.at(1.0).and_then(|spec| spec.validate()) {
        out.push(Issue::new("material", e.to_string()));
    }

    let needs_omega = c.task.omega().is_some();
    match c.omega() {
        None if needs_omega => out.push(Issue::new(
            "task.omega_tilde",
            format!(
                "the {} task needs a frequency (task.omega_tilde or material.drude.omega_tilde)",
                c.task.name()
            ),
        )),
        Some(w) if !positive(w) => out.push(Issue::new("task.omega_tilde", format!("must be positive, got {w}"))),
        _ => {}
    }

    match &c.task {
        Task::Sweep { omega, .. } => {
            if let GridSpec::Linear { points, .. } = omega {
                if *points < 2 {
                    out.push(Issue::new("task.omega.points", "need at least 2 points"));
                }
            }
            if let Err(e) = check_grid(&omega.values()) {
                out.push(Issue::new("task.omega", e.to_string()));
            }
        }
        Task::Enz {
            spacing,
            sigma_d,
            max_loss,
            ..
        } => {
            let d = spacing.or(m.drude.map(|d| d.d_tilde));
            match d {
                None => out.push(Issue::new(
                    "task.spacing",
                    "needed when the material has no drude block",
                )),
                Some(d) if !positive(d) => out.push(Issue::new("task.spacing", format!("must be positive, got {d}"))),
                _ => {}
            }
            if sigma_d.is_none()
                && m.drude.is_none()
                && m.sigma_surface.is_none()
                && m.lambda_line == Complex64::default()
            {
                out.push(Issue::new(
                    "task",
                    "nothing conducts: give sigma_d, lambda_d or a conducting material",
                ));
            }
            if !positive(*max_loss) {
                out.push(Issue::new("task.max_loss", format!("must be positive, got {max_loss}")));
            }
        }
        Task::Macro {
            points_per_wavelength,
            pml_cells,
            tol,
            slab_eps,
            ..
        } => {
            if *points_per_wavelength < 4 || !points_per_wavelength.is_multiple_of(4) {
                out.push(Issue::new(
                    "task.points_per_wavelength",
                    "must be a positive multiple of 4",
                ));
            }
            if *pml_cells == 0 {
                out.push(Issue::new("task.pml_cells", "must be at least 1"));
            }
            if !(*tol > 0.0 && *tol <= 1e-6) {
                out.push(Issue::new("task.tol", format!("must lie in (0, 1e-6], got {tol}")));
            }
            if let Some(eps) = slab_eps {
                for (k, e) in eps.iter().enumerate() {
                    if *e == Complex64::default() {
                        out.push(Issue::new(
                            format!("task.slab_eps.{k}"),
                            "exactly zero; include the loss (imaginary part)",
                        ));
                    }
                }
            }
            if let (Some(w), true) = (
                c.omega().filter(|w| positive(*w)),
                points_per_wavelength.is_multiple_of(4),
            ) {
                // layout checks only; the slab value does not matter here
                let layout = SlabLayout {
                    points_per_wavelength: *points_per_wavelength,
                    pml: Pml {
                        cells: *pml_cells,
                        ..Pml::default()
                    },
                    ..SlabLayout::new(w, [Complex64::new(1.0, 0.0); 3])
                };
                if let Err(e) = layout.problem().and_then(|p| p.validate()) {
                    out.push(Issue::new("task", e.to_string()));
                }
            }
        }
        _ => {}
    }
    if c.output.directory.is_empty() {
        out.push(Issue::new("output.directory", "must not be empty"));
    }
    out
}

/// Parameters outside the studied window: accepted but reported.
fn warnings(c: &RunConfig) -> Vec<String> {
    match (&c.material.drude, c.omega()) {
        (Some(d), w) => d.params(w.unwrap_or(2.0)).range_warnings(),
        _ => Vec::new(),
    }
}
