//! Case configuration. Files are TOML; all temperatures are given as fractions of the
//! critical temperature.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundarySet, Face, FaceKind, FaceSpec};
use crate::eos::{maxwell_coexistence, EosParams, DEFAULT_INTERACTION, DEFAULT_LATENT_HEAT};
use crate::error::{Error, Result};
use crate::flow::FlowRelaxation;
use crate::lattice::DEFAULT_REST_WEIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

/// One face. `temperature` is `T/T_c`; an outlet without `density` uses the Maxwell
/// vapor density at its temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaceConfig {
    Periodic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
    },
    Wall {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
        #[serde(default = "neutral_angle")]
        contact_angle: f64,
    },
    PressureOutlet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<f64>,
        temperature: f64,
    },
}

fn neutral_angle() -> f64 {
    90.0
}

impl FaceConfig {
    pub fn periodic() -> Self {
        FaceConfig::Periodic { temperature: None }
    }

    pub fn wall(temperature: Option<f64>, contact_angle: f64) -> Self {
        FaceConfig::Wall { temperature, contact_angle }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, FaceConfig::Periodic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacesConfig {
    pub x_minus: FaceConfig,
    pub x_plus: FaceConfig,
    pub y_minus: FaceConfig,
    pub y_plus: FaceConfig,
    pub z_minus: FaceConfig,
    pub z_plus: FaceConfig,
}

impl FacesConfig {
    pub fn all_periodic() -> Self {
        let p = FaceConfig::periodic();
        Self {
            x_minus: p,
            x_plus: p,
            y_minus: p,
            y_plus: p,
            z_minus: p,
            z_plus: p,
        }
    }

    pub fn get(&self, face: Face) -> FaceConfig {
        match face {
            Face::XMinus => self.x_minus,
            Face::XPlus => self.x_plus,
            Face::YMinus => self.y_minus,
            Face::YPlus => self.y_plus,
            Face::ZMinus => self.z_minus,
            Face::ZPlus => self.z_plus,
        }
    }

    pub fn set(&mut self, face: Face, value: FaceConfig) {
        *match face {
            Face::XMinus => &mut self.x_minus,
            Face::XPlus => &mut self.x_plus,
            Face::YMinus => &mut self.y_minus,
            Face::YPlus => &mut self.y_plus,
            Face::ZMinus => &mut self.z_minus,
            Face::ZPlus => &mut self.z_plus,
        } = value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub omega: f64,
    /// Interaction strength `G`.
    pub interaction: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self {
            a: 3.0 / 49.0,
            b: 2.0 / 21.0,
            r: 1.0,
            omega: 0.344,
            interaction: DEFAULT_INTERACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub s_e: f64,
    pub s_nu: f64,
    pub s_q: f64,
    pub s_pi: f64,
    /// Body-force acceleration, multiplied by the local density.
    pub gravity: [f64; 3],
}

impl Default for FlowConfig {
    fn default() -> Self {
        let r = FlowRelaxation::default();
        Self {
            s_e: r.s_e,
            s_nu: r.s_nu,
            s_q: r.s_q,
            s_pi: r.s_pi,
            gravity: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThermalBackend {
    #[default]
    Lbm,
    Fdm,
    /// Isothermal run: the temperature field stays at its initial values.
    None,
}

impl std::str::FromStr for ThermalBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbm" => Ok(ThermalBackend::Lbm),
            "fdm" => Ok(ThermalBackend::Fdm),
            "none" => Ok(ThermalBackend::None),
            other => Err(Error::Config(format!("unknown thermal backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalConfig {
    pub backend: ThermalBackend,
    pub cv: f64,
    pub lambda_liquid: f64,
    pub lambda_vapor: f64,
    pub rest_weight: f64,
    /// Correction switch `ϑ`, 0 or 1.
    pub correction: u8,
    pub latent_heat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fdm_substeps: Option<usize>,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            backend: ThermalBackend::Lbm,
            cv: 5.0,
            lambda_liquid: 1.0 / 3.0,
            lambda_vapor: 1.0 / 3.0,
            rest_weight: DEFAULT_REST_WEIGHT,
            correction: 0,
            latent_heat: DEFAULT_LATENT_HEAT,
            fdm_substeps: None,
        }
    }
}

/// Initial-condition recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// Vapor for `x < split · nx`, liquid beyond, at the Maxwell densities of `t_sat`.
    FlatSlab {
        t_sat: f64,
        #[serde(default = "half")]
        split: f64,
    },
    /// Spherical droplet with a tanh interface; temperature follows the same profile.
    Droplet {
        radius: f64,
        width: f64,
        t_sat: f64,
        t_gas: f64,
    },
    /// Sphere of diameter `diameter` cut by the `z−` wall so that it meets the wall at
    /// `initial_angle` (defaults to the wall's contact angle).
    SessileDroplet {
        diameter: f64,
        width: f64,
        t_sat: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_angle: Option<f64>,
    },
    /// Uniform density (Maxwell vapor density when omitted) at rest.
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<f64>,
        t: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl InitConfig {
    pub fn recipe_name(&self) -> &'static str {
        match self {
            InitConfig::FlatSlab { .. } => "flat_slab",
            InitConfig::Droplet { .. } => "droplet",
            InitConfig::SessileDroplet { .. } => "sessile_droplet",
            InitConfig::Uniform { .. } => "uniform",
        }
    }

    /// Reference saturation temperature ratio of the recipe.
    pub fn t_sat(&self) -> f64 {
        match *self {
            InitConfig::FlatSlab { t_sat, .. } | InitConfig::Droplet { t_sat, .. } | InitConfig::SessileDroplet { t_sat, .. } => t_sat,
            InitConfig::Uniform { t, .. } => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub steps: u64,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub output_every: u64,
    /// Diagnostics cadence in steps.
    pub diagnostics_every: u64,
    pub seed: u64,
    /// Relative amplitude of a random density perturbation added at start-up.
    pub noise: f64,
    /// Stop once the largest change of `T` and `ρ` over `steady_interval` steps falls
    /// below this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_tolerance: Option<f64>,
    pub steady_interval: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            output_every: 0,
            diagnostics_every: 100,
            seed: 0,
            noise: 0.0,
            steady_tolerance: None,
            steady_interval: 1000,
            threads: None,
        }
    }
}

/// Complete description of a simulation case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub grid: GridConfig,
    pub faces: FacesConfig,
    #[serde(default)]
    pub eos: EosConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub thermal: ThermalConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub run: RunConfig,
}

fn default_name() -> String {
    "case".into()
}

impl CaseConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: CaseConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn eos_params(&self) -> Result<EosParams> {
        let e = self.eos;
        EosParams::new(e.a, e.b, e.r, e.omega).map_err(|err| Error::Config(err.to_string()))
    }

    pub fn flow_relaxation(&self) -> Result<FlowRelaxation> {
        let f = self.flow;
        FlowRelaxation::new(f.s_e, f.s_nu, f.s_q, f.s_pi).map_err(|err| Error::Config(err.to_string()))
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.grid.nx, self.grid.ny, self.grid.nz]
    }

    /// Boundary set with absolute temperatures and resolved outlet densities.
    pub fn boundary_set(&self) -> Result<BoundarySet> {
        let eos = self.eos_params()?;
        let tc = eos.tc();
        let mut specs = Vec::with_capacity(6);
        for face in Face::ALL {
            let kind = match self.faces.get(face) {
                FaceConfig::Periodic { temperature } => FaceKind::Periodic {
                    temperature: temperature.map(|t| t * tc),
                },
                FaceConfig::Wall { temperature, contact_angle } => FaceKind::Wall {
                    temperature: temperature.map(|t| t * tc),
                    contact_angle_deg: contact_angle,
                },
                FaceConfig::PressureOutlet { density, temperature } => {
                    let density = match density {
                        Some(d) => d,
                        None => maxwell_coexistence(temperature * tc, &eos)?.rho_vapor,
                    };
                    FaceKind::PressureOutlet {
                        density,
                        temperature: temperature * tc,
                    }
                }
            };
            specs.push(FaceSpec { face, kind });
        }
        BoundarySet::new(specs.try_into().expect("six faces"))
    }

    /// Checks parameter ranges. Periodic axes may have extent 1 (a reduced, translation
    /// invariant direction); every other axis needs at least 4 nodes.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        for (axis, (lo, _)) in [
            (self.faces.x_minus, self.faces.x_plus),
            (self.faces.y_minus, self.faces.y_plus),
            (self.faces.z_minus, self.faces.z_plus),
        ]
        .iter()
        .enumerate()
        {
            let min = if lo.is_periodic() { 1 } else { 4 };
            if dims[axis] < min {
                return Err(Error::Config(format!(
                    "extent {} along axis {axis} is below the minimum of {min}",
                    dims[axis]
                )));
            }
        }
        let ratio_ok = |t: f64| t > 0.0 && t <= 1.0;
        for face in Face::ALL {
            let t = match self.faces.get(face) {
                FaceConfig::Periodic { temperature } | FaceConfig::Wall { temperature, .. } => temperature,
                FaceConfig::PressureOutlet { temperature, .. } => Some(temperature),
            };
            if let Some(t) = t {
                if !ratio_ok(t) {
                    return Err(Error::Config(format!("temperature ratio {t} on {} outside (0, 1]", face.name())));
                }
            }
        }
        self.boundary_set()?;
        self.flow_relaxation()?;
        let th = self.thermal;
        if th.correction > 1 {
            return Err(Error::Config(format!("correction switch must be 0 or 1, got {}", th.correction)));
        }
        if !(th.cv > 0.0 && th.lambda_liquid > 0.0 && th.lambda_vapor > 0.0 && th.latent_heat > 0.0) {
            return Err(Error::Config("cv, conductivities and latent heat must be positive".into()));
        }
        if !(th.rest_weight > 0.0 && th.rest_weight < 1.0) {
            return Err(Error::Config(format!("rest_weight {} outside (0, 1)", th.rest_weight)));
        }
        let min_extent = dims.iter().copied().min().unwrap_or(0) as f64;
        match self.init {
            InitConfig::FlatSlab { t_sat, split } => {
                if !ratio_ok(t_sat) || t_sat >= 1.0 || !(split > 0.0 && split < 1.0) {
                    return Err(Error::Config("flat_slab needs 0 < t_sat < 1 and 0 < split < 1".into()));
                }
            }
            InitConfig::Droplet { radius, width, t_sat, t_gas } => {
                if !ratio_ok(t_sat) || t_sat >= 1.0 || !ratio_ok(t_gas) {
                    return Err(Error::Config("droplet temperatures must lie in (0, 1]".into()));
                }
                if !(radius > 0.0 && width > 0.0) || radius + width >= min_extent / 2.0 {
                    return Err(Error::Config(format!(
                        "droplet of radius {radius} and width {width} does not fit the grid"
                    )));
                }
            }
            InitConfig::SessileDroplet { diameter, width, t_sat, initial_angle } => {
                if !ratio_ok(t_sat) || t_sat >= 1.0 {
                    return Err(Error::Config("sessile droplet t_sat must lie in (0, 1)".into()));
                }
                if !matches!(self.faces.z_minus, FaceConfig::Wall { .. }) {
                    return Err(Error::Config("sessile droplet needs a wall on z-".into()));
                }
                let angle = initial_angle.unwrap_or(match self.faces.z_minus {
                    FaceConfig::Wall { contact_angle, .. } => contact_angle,
                    _ => 90.0,
                });
                if !(angle > 0.0 && angle < 180.0) {
                    return Err(Error::Config(format!("initial angle {angle} outside (0, 180)")));
                }
                let cap = cap_geometry(diameter, angle);
                let top = cap.top + width;
                let lateral = diameter + 2.0 * width;
                if !(diameter > 0.0 && width > 0.0)
                    || lateral >= self.grid.nx.min(self.grid.ny) as f64
                    || top >= self.grid.nz as f64 - 2.0
                {
                    return Err(Error::Config(format!(
                        "cap of diameter {diameter} at {angle} degrees exceeds the domain"
                    )));
                }
            }
            InitConfig::Uniform { density, t } => {
                if !ratio_ok(t) {
                    return Err(Error::Config("uniform temperature ratio outside (0, 1]".into()));
                }
                if let Some(d) = density {
                    if !(d > 0.0) {
                        return Err(Error::Config("uniform density must be positive".into()));
                    }
                }
            }
        }
        if self.run.steady_interval == 0 || self.run.diagnostics_every == 0 {
            return Err(Error::Config("steady_interval and diagnostics_every must be positive".into()));
        }
        if let Some(0) = self.run.threads {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }

    /// Two-slab conduction between a wall at `T_c` (vapor side) and one at `0.86 T_c`.
    pub fn conduction_slab() -> Self {
        let mut faces = FacesConfig::all_periodic();
        faces.x_minus = FaceConfig::wall(Some(1.0), 90.0);
        faces.x_plus = FaceConfig::wall(Some(0.86), 90.0);
        Self {
            name: "conduction_slab".into(),
            grid: GridConfig { nx: 200, ny: 10, nz: 10 },
            faces,
            eos: EosConfig::default(),
            flow: FlowConfig::default(),
            thermal: ThermalConfig {
                lambda_liquid: 0.4,
                lambda_vapor: 0.2,
                ..ThermalConfig::default()
            },
            init: InitConfig::FlatSlab { t_sat: 0.86, split: 0.5 },
            run: RunConfig {
                steps: 4_000_000,
                diagnostics_every: 10_000,
                steady_tolerance: Some(1e-11),
                steady_interval: 1000,
                ..RunConfig::default()
            },
        }
    }

    /// Droplet evaporating in a hot periodic vapor with the boundary temperature fixed.
    pub fn droplet_evaporation() -> Self {
        let mut faces = FacesConfig::all_periodic();
        for face in Face::ALL {
            faces.set(face, FaceConfig::Periodic { temperature: Some(1.0) });
        }
        Self {
            name: "droplet_evaporation".into(),
            grid: GridConfig { nx: 100, ny: 100, nz: 100 },
            faces,
            eos: EosConfig::default(),
            flow: FlowConfig::default(),
            thermal: ThermalConfig::default(),
            init: InitConfig::Droplet {
                radius: 25.0,
                width: 5.0,
                t_sat: 0.86,
                t_gas: 1.0,
            },
            run: RunConfig {
                steps: 20_000,
                diagnostics_every: 100,
                ..RunConfig::default()
            },
        }
    }

    /// Droplet on a heated wall with contact angle 120° and a pressure outlet on top.
    pub fn sessile_droplet() -> Self {
        let mut faces = FacesConfig::all_periodic();
        faces.z_minus = FaceConfig::wall(Some(0.8931), 120.0);
        faces.z_plus = FaceConfig::PressureOutlet {
            density: None,
            temperature: 0.86,
        };
        Self {
            name: "sessile_droplet".into(),
            grid: GridConfig { nx: 160, ny: 160, nz: 100 },
            faces,
            eos: EosConfig::default(),
            flow: FlowConfig::default(),
            thermal: ThermalConfig::default(),
            init: InitConfig::SessileDroplet {
                diameter: 70.0,
                width: 5.0,
                t_sat: 0.86,
                initial_angle: None,
            },
            run: RunConfig {
                steps: 40_000,
                diagnostics_every: 200,
                ..RunConfig::default()
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "conduction_slab" => Ok(Self::conduction_slab()),
            "droplet_evaporation" => Ok(Self::droplet_evaporation()),
            "sessile_droplet" => Ok(Self::sessile_droplet()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected conduction_slab, droplet_evaporation or sessile_droplet)"
            ))),
        }
    }

    pub const PRESETS: [&'static str; 3] = ["conduction_slab", "droplet_evaporation", "sessile_droplet"];
}

/// Geometry of a spherical cap resting on the plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry {
    pub radius: f64,
    /// Height of the sphere center above the plane (negative below).
    pub center: f64,
    pub base_radius: f64,
    pub top: f64,
}

/// Cap cut from a sphere of diameter `diameter` meeting the plane at `angle_deg`.
pub fn cap_geometry(diameter: f64, angle_deg: f64) -> CapGeometry {
    let theta = angle_deg.to_radians();
    let radius = diameter / 2.0;
    let center = -radius * theta.cos();
    CapGeometry {
        radius,
        center,
        base_radius: radius * theta.sin(),
        top: center + radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in CaseConfig::PRESETS {
            let c = CaseConfig::preset(name).unwrap();
            c.validate().unwrap();
            let text = c.to_toml_string();
            let back = CaseConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, c, "{name}:\n{text}");
        }
        assert!(CaseConfig::preset("nope").is_err());
    }

    #[test]
    fn parses_a_minimal_file() {
        let text = r#"
            [grid]
            nx = 8
            ny = 1
            nz = 1

            [faces]
            x_minus = { kind = "wall", temperature = 1.0 }
            x_plus = { kind = "wall", temperature = 0.86 }
            y_minus = { kind = "periodic" }
            y_plus = { kind = "periodic" }
            z_minus = { kind = "periodic" }
            z_plus = { kind = "periodic" }

            [thermal]
            backend = "fdm"

            [init]
            recipe = "flat_slab"
            t_sat = 0.86
        "#;
        let c = CaseConfig::from_toml_str(text).unwrap();
        assert_eq!(c.thermal.backend, ThermalBackend::Fdm);
        assert_eq!(c.faces.x_minus, FaceConfig::wall(Some(1.0), 90.0));
        assert_eq!(c.run, RunConfig::default());
        let set = c.boundary_set().unwrap();
        let tc = c.eos_params().unwrap().tc();
        assert_eq!(set.spec(Face::XMinus).temperature(), Some(tc));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = CaseConfig::conduction_slab();
        c.grid.nx = 3;
        assert!(c.validate().is_err());
        let mut c = CaseConfig::conduction_slab();
        c.faces.y_minus = FaceConfig::wall(None, 90.0);
        assert!(c.validate().is_err());
        let mut c = CaseConfig::droplet_evaporation();
        c.init = InitConfig::Droplet { radius: 48.0, width: 5.0, t_sat: 0.86, t_gas: 1.0 };
        assert!(c.validate().is_err());
        let mut c = CaseConfig::sessile_droplet();
        c.faces.z_minus = FaceConfig::wall(Some(0.8931), 180.0);
        assert!(c.validate().is_err());
        let mut c = CaseConfig::sessile_droplet();
        c.init = InitConfig::SessileDroplet { diameter: 170.0, width: 5.0, t_sat: 0.86, initial_angle: None };
        assert!(c.validate().is_err());
        let mut c = CaseConfig::conduction_slab();
        c.thermal.correction = 2;
        assert!(c.validate().is_err());
        assert!(CaseConfig::from_toml_str("grid = 3").is_err());
        assert!("gpu".parse::<ThermalBackend>().is_err());
    }

    #[test]
    fn outlet_density_defaults_to_maxwell_vapor() {
        let c = CaseConfig::sessile_droplet();
        let set = c.boundary_set().unwrap();
        let rho = set.outlet().unwrap();
        assert!((rho - 0.3796789993997206).abs() < 1e-8);
    }

    #[test]
    fn cap_geometry_cases() {
        let c = cap_geometry(70.0, 90.0);
        assert!(c.center.abs() < 1e-12 && (c.base_radius - 35.0).abs() < 1e-12 && (c.top - 35.0).abs() < 1e-12);
        let c = cap_geometry(70.0, 120.0);
        assert!((c.base_radius - 35.0 * 120f64.to_radians().sin()).abs() < 1e-12);
        assert!((c.center - 17.5).abs() < 1e-12 && (c.top - 52.5).abs() < 1e-12);
    }
}
