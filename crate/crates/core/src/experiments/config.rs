use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, eigendecompose, LatticeSpec, Model};
use crate::lindblad::BathSpec;
use crate::measurement::{normalize3, MeasurementKind, MeasurementSpec};
use crate::zeno::{regime_scales, RegimeScales};

pub const DEFAULT_TAU_POINTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "m_theta")]
    MTheta,
    #[serde(rename = "m_phi")]
    MPhi,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "gamma0")]
    Gamma0,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Tau => "tau",
            SweepVariable::V => "V",
            SweepVariable::MTheta => "m_theta",
            SweepVariable::MPhi => "m_phi",
            SweepVariable::Alpha => "alpha",
            SweepVariable::Gamma0 => "gamma0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grid {
    /// Chosen from the regime scales (τ) or a fixed natural range.
    Auto,
    Values { values: Vec<f64> },
    Linear { start: f64, stop: f64, points: usize },
    Log { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::Auto => Err(Error::Config("automatic grid must be resolved first".into())),
            Grid::Values { values } => Ok(values.clone()),
            Grid::Linear { start, stop, points } => Ok(linspace(*start, *stop, *points)),
            Grid::Log { start, stop, points } => {
                if !(*start > 0.0 && *stop > 0.0) {
                    return Err(Error::Config("log grid needs positive bounds".into()));
                }
                Ok(logspace(*start, *stop, *points))
            }
        }
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points).map(|k| start + (stop - start) * k as f64 / (points - 1) as f64).collect(),
    }
}

pub fn logspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(start.ln(), stop.ln(), points).into_iter().map(f64::exp).collect();
    if let Some(first) = v.first_mut() {
        *first = start;
    }
    if points > 1 {
        v[points - 1] = stop;
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    #[serde(default = "auto_grid")]
    pub grid: Grid,
}

fn auto_grid() -> Grid {
    Grid::Auto
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { variable: SweepVariable::Tau, grid: Grid::Auto }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereGrid {
    fn default() -> Self {
        SphereGrid { n_theta: 40, n_phi: 80 }
    }
}

impl SphereGrid {
    /// Equal-angle points, θ ascending then φ; each pole appears once.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n_theta {
            let theta = if self.n_theta == 1 { 0.0 } else { PI * i as f64 / (self.n_theta - 1) as f64 };
            if i == 0 || i + 1 == self.n_theta {
                out.push((theta, 0.0));
                continue;
            }
            for j in 0..self.n_phi {
                out.push((theta, 2.0 * PI * j as f64 / self.n_phi as f64));
            }
        }
        out
    }
}

pub fn bloch_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

pub fn angles_from_bloch(m: [f64; 3]) -> (f64, f64) {
    (m[2].clamp(-1.0, 1.0).acos(), m[1].atan2(m[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlochMode {
    /// Single measurement of the equilibrium state.
    #[default]
    Pulse,
    /// Poisson steady state at the configured τ, with the closed-form Zeno current.
    Zeno,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlochSpec {
    pub mode: BlochMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSpec {
    pub horizon: f64,
    /// Defaults to 0.01/‖H‖.
    pub dt: Option<f64>,
    /// Evolve with the bath after the measurement instead of unitarily.
    pub with_bath: bool,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec { horizon: 100.0, dt: None, with_bath: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloquetMode {
    #[default]
    Sweep,
    /// Current within one period at the configured τ.
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetSpec {
    pub mode: FloquetMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThreeSiteSpec {
    pub cells: usize,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub alpha: f64,
}

impl Default for ThreeSiteSpec {
    fn default() -> Self {
        ThreeSiteSpec { cells: 3, t1: 1.0, t2: 0.5, t3: 0.7, v: 1.0, alpha: PI / 2.0 }
    }
}

impl ThreeSiteSpec {
    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::three_site(self.cells, self.t1, self.t2, self.t3, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZenoReportSpec {
    /// Measurement times; defaults to 10⁻², 10⁻³ and 10⁻⁴ times τ_Z.
    pub taus: Option<Vec<f64>>,
    pub three_site: ThreeSiteSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    pub bath: BathSpec,
    pub measurement: MeasurementSpec,
    pub sweep: SweepSpec,
    pub sphere: SphereGrid,
    pub bloch: BlochSpec,
    pub pulse: PulseSpec,
    pub floquet: FloquetSpec,
    pub zeno: ZenoReportSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = 0.5f64.sqrt();
        ExperimentConfig {
            lattice: LatticeSpec::default(),
            bath: BathSpec::default(),
            measurement: MeasurementSpec::bloch([0.0, s, s], 1e3),
            sweep: SweepSpec::default(),
            sphere: SphereGrid::default(),
            bloch: BlochSpec::default(),
            pulse: PulseSpec::default(),
            floquet: FloquetSpec::default(),
            zeno: ZenoReportSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let MeasurementKind::Bloch { m } = cfg.measurement.kind {
            cfg.measurement.kind = MeasurementKind::Bloch { m: normalize3(m).map_err(|e| Error::Config(e.to_string()))? };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.lattice.validate().map_err(wrap)?;
        self.bath.validate().map_err(wrap)?;
        self.measurement.validate().map_err(wrap)?;
        let matches = matches!(
            (self.measurement.kind, self.lattice.model),
            (MeasurementKind::Bloch { .. }, Model::TwoSite) | (MeasurementKind::ThreeSite { .. }, Model::ThreeSite)
        );
        if !matches {
            return Err(Error::Config("measurement kind does not match the lattice model".into()));
        }
        if self.sphere.n_theta < 2 || self.sphere.n_phi < 1 {
            return Err(Error::Config("sphere grid needs n_theta >= 2 and n_phi >= 1".into()));
        }
        if !(self.pulse.horizon > 0.0) || self.pulse.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(Error::Config("pulse horizon and dt must be positive".into()));
        }
        self.zeno.three_site.lattice().validate().map_err(wrap)?;
        Ok(())
    }

    pub fn h_norm(&self) -> Result<f64> {
        Ok(eigendecompose(&build_hamiltonian(&self.lattice)?)?.norm_h)
    }

    pub fn scales(&self) -> Result<RegimeScales> {
        regime_scales(self.h_norm()?, self.bath.gamma0)
    }

    /// Grid values for the sweep; automatic τ grids span [lower·τ_Z, 100 τ_R].
    pub fn sweep_values(&self, tau_lower: f64) -> Result<Vec<f64>> {
        match (&self.sweep.grid, self.sweep.variable) {
            (Grid::Auto, SweepVariable::Tau) => {
                let s = self.scales()?;
                Ok(logspace(tau_lower * s.tau_z, 100.0 * s.tau_r, DEFAULT_TAU_POINTS))
            }
            (Grid::Auto, SweepVariable::V) => Ok(linspace(-3.0, 3.0, 61)),
            (Grid::Auto, SweepVariable::MTheta) => Ok(linspace(0.0, PI, 41)),
            (Grid::Auto, SweepVariable::MPhi) => Ok((0..80).map(|k| 2.0 * PI * k as f64 / 80.0).collect()),
            (Grid::Auto, SweepVariable::Alpha) => Ok(linspace(0.0, PI, 37)),
            (Grid::Auto, SweepVariable::Gamma0) => Ok(logspace(1e-4, 1e-1, 31)),
            (grid, _) => grid.values(),
        }
    }

    /// Copy with one swept parameter replaced.
    pub fn with_value(&self, var: SweepVariable, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match var {
            SweepVariable::Tau => cfg.measurement.tau = value,
            SweepVariable::V => cfg.lattice.v = value,
            SweepVariable::Gamma0 => cfg.bath.gamma0 = value,
            SweepVariable::MTheta | SweepVariable::MPhi => {
                let MeasurementKind::Bloch { m } = cfg.measurement.kind else {
                    return Err(Error::Config("angle sweeps need a Bloch measurement".into()));
                };
                let (theta, phi) = angles_from_bloch(m);
                let m = if var == SweepVariable::MTheta { bloch_from_angles(value, phi) } else { bloch_from_angles(theta, value) };
                cfg.measurement.kind = MeasurementKind::Bloch { m: normalize3(m)? };
            }
            SweepVariable::Alpha => {
                let MeasurementKind::ThreeSite { .. } = cfg.measurement.kind else {
                    return Err(Error::Config("alpha sweeps need a three-site measurement".into()));
                };
                cfg.measurement.kind = MeasurementKind::ThreeSite { alpha: value };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
