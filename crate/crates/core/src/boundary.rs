//! Boundary treatments: on-node bounce-back walls, non-equilibrium extrapolation of
//! Dirichlet temperatures, the geometric wetting ghost layer, periodic halos and the
//! constant-pressure outlet on the `+z` face.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::grid::{fill_scalar_halo, EdgeKind, Grid, HaloRule, Padded};
use crate::lattice::{D3Q19_OPPOSITE, D3Q19_VELOCITIES, Q19, Q7};

/// One of the six faces of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    XMinus,
    XPlus,
    YMinus,
    YPlus,
    ZMinus,
    ZPlus,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XMinus, Face::XPlus, Face::YMinus, Face::YPlus, Face::ZMinus, Face::ZPlus];

    pub fn axis(self) -> usize {
        match self {
            Face::XMinus | Face::XPlus => 0,
            Face::YMinus | Face::YPlus => 1,
            Face::ZMinus | Face::ZPlus => 2,
        }
    }

    /// 0 for the low face, 1 for the high face.
    pub fn side(self) -> usize {
        match self {
            Face::XMinus | Face::YMinus | Face::ZMinus => 0,
            _ => 1,
        }
    }

    pub fn from_axis_side(axis: usize, side: usize) -> Face {
        Face::ALL[2 * axis + side]
    }

    /// Outward unit normal.
    pub fn normal(self) -> [i32; 3] {
        let mut n = [0; 3];
        n[self.axis()] = if self.side() == 0 { -1 } else { 1 };
        n
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XMinus => "x-",
            Face::XPlus => "x+",
            Face::YMinus => "y-",
            Face::YPlus => "y+",
            Face::ZMinus => "z-",
            Face::ZPlus => "z+",
        }
    }
}

/// Boundary type of one face. Temperatures are absolute lattice values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceKind {
    /// Periodic flow; an optional fixed temperature on the face nodes.
    Periodic { temperature: Option<f64> },
    /// No-slip wall with contact angle in degrees; `None` temperature means adiabatic.
    Wall { temperature: Option<f64>, contact_angle_deg: f64 },
    /// Constant-density outlet with fixed temperature. Only valid on `+z`.
    PressureOutlet { density: f64, temperature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSpec {
    pub face: Face,
    pub kind: FaceKind,
}

impl FaceSpec {
    pub fn edge_kind(&self) -> EdgeKind {
        match self.kind {
            FaceKind::Periodic { .. } => EdgeKind::Periodic,
            FaceKind::Wall { .. } => EdgeKind::Wall,
            FaceKind::PressureOutlet { .. } => EdgeKind::Open,
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self.kind {
            FaceKind::Periodic { temperature } | FaceKind::Wall { temperature, .. } => temperature,
            FaceKind::PressureOutlet { temperature, .. } => Some(temperature),
        }
    }
}

/// Six face specifications, indexed `[axis][side]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    pub faces: [[FaceSpec; 2]; 3],
}

impl BoundarySet {
    pub fn new(specs: [FaceSpec; 6]) -> Result<Self> {
        let mut faces = [[FaceSpec {
            face: Face::XMinus,
            kind: FaceKind::Periodic { temperature: None },
        }; 2]; 3];
        let mut seen = [false; 6];
        for spec in specs {
            let (a, s) = (spec.face.axis(), spec.face.side());
            if std::mem::replace(&mut seen[2 * a + s], true) {
                return Err(Error::Config(format!("face {} specified twice", spec.face.name())));
            }
            faces[a][s] = spec;
        }
        for axis in 0..3 {
            let [lo, hi] = faces[axis];
            let periodic = |s: &FaceSpec| matches!(s.kind, FaceKind::Periodic { .. });
            if periodic(&lo) != periodic(&hi) {
                return Err(Error::Config(format!("periodic faces along axis {axis} must be paired")));
            }
            for spec in [lo, hi] {
                match spec.kind {
                    FaceKind::PressureOutlet { density, .. } => {
                        if spec.face != Face::ZPlus {
                            return Err(Error::Config(format!(
                                "pressure outlet is only supported on z+, not {}",
                                spec.face.name()
                            )));
                        }
                        if !(density > 0.0) {
                            return Err(Error::Config(format!("outlet density must be positive, got {density}")));
                        }
                    }
                    FaceKind::Wall { contact_angle_deg, .. } => {
                        if !(contact_angle_deg > 0.0 && contact_angle_deg < 180.0) {
                            return Err(Error::Config(format!(
                                "contact angle {contact_angle_deg} on {} outside (0, 180)",
                                spec.face.name()
                            )));
                        }
                    }
                    FaceKind::Periodic { .. } => {}
                }
            }
        }
        Ok(Self { faces })
    }

    pub fn fully_periodic() -> Self {
        Self::new(Face::ALL.map(|face| FaceSpec {
            face,
            kind: FaceKind::Periodic { temperature: None },
        }))
        .expect("periodic faces are paired")
    }

    pub fn spec(&self, face: Face) -> &FaceSpec {
        &self.faces[face.axis()][face.side()]
    }

    pub fn edge_kinds(&self) -> [[EdgeKind; 2]; 3] {
        self.faces.map(|pair| pair.map(|s| s.edge_kind()))
    }

    /// Halo rules for the pseudopotential.
    pub fn psi_rules(&self) -> [[HaloRule; 2]; 3] {
        self.faces.map(|pair| {
            pair.map(|s| match s.kind {
                FaceKind::Periodic { .. } => HaloRule::Periodic,
                FaceKind::Wall { contact_angle_deg, .. } => HaloRule::Wetting(contact_angle_deg.to_radians()),
                FaceKind::PressureOutlet { .. } => HaloRule::ZeroGradient,
            })
        })
    }

    /// Halo rules for the fluid velocity: no-slip walls, zero-gradient outlet.
    pub fn velocity_rules(&self) -> [[HaloRule; 2]; 3] {
        self.faces.map(|pair| {
            pair.map(|s| match s.kind {
                FaceKind::Periodic { .. } => HaloRule::Periodic,
                FaceKind::Wall { .. } => HaloRule::Constant(0.0),
                FaceKind::PressureOutlet { .. } => HaloRule::ZeroGradient,
            })
        })
    }

    /// Fixed temperature of a node, if it lies on a face with one. Faces are checked
    /// in the order x, y, z so the last matching face wins at edges and corners.
    pub fn node_temperature(&self, grid: &Grid, xyz: [usize; 3]) -> Option<f64> {
        let dims = grid.dims();
        let mut t = None;
        for axis in 0..3 {
            for side in 0..2 {
                let on_face = if side == 0 { xyz[axis] == 0 } else { xyz[axis] == dims[axis] - 1 };
                if on_face {
                    if let Some(v) = self.faces[axis][side].temperature() {
                        t = Some(v);
                    }
                }
            }
        }
        t
    }

    pub fn outlet(&self) -> Option<f64> {
        match self.faces[2][1].kind {
            FaceKind::PressureOutlet { density, .. } => Some(density),
            _ => None,
        }
    }
}

/// Ghost-layer pseudopotential for a wall with contact angle `theta` (radians):
/// `ψ_mirror + |∇_∥ψ| tan(π/2 − θ)`, where `g1`, `g2` are in-plane central differences
/// on the wall layer.
#[inline]
pub fn wetting_ghost_value(mirror: f64, g1: f64, g2: f64, theta: f64) -> f64 {
    mirror + (g1 * g1 + g2 * g2).sqrt() * (FRAC_PI_2 - theta).tan()
}

/// Checked form of [`wetting_ghost_value`]. `wall_layer` holds `ψ` on the wall layer at
/// `(x+1, x−1, y+1, y−1)`; `layer1` is `ψ` one node into the fluid.
pub fn wetting_ghost_psi(layer1: f64, wall_layer: [f64; 4], theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("contact angle {theta} rad outside (0, pi)")));
    }
    Ok(wetting_ghost_value(layer1, wall_layer[0] - wall_layer[1], wall_layer[2] - wall_layer[3], theta))
}

/// Reflected populations at a wall node with outward normal `normal`: for every link
/// `i` with `c_i · n > 0`, returns `(ī, f*_i)`.
pub fn bounce_back_wall(f_star: &[f64; Q19], normal: [i32; 3]) -> Vec<(usize, f64)> {
    (0..Q19)
        .filter(|&i| {
            let c = D3Q19_VELOCITIES[i];
            c[0] * normal[0] + c[1] * normal[1] + c[2] * normal[2] > 0
        })
        .map(|i| (D3Q19_OPPOSITE[i], f_star[i]))
        .collect()
}

/// Non-equilibrium extrapolation: `g(x_b) = w T_b + g(x_f) − w T_f`.
pub fn dirichlet_temperature(g_neighbor: &[f64], t_b: f64, weights: &[f64]) -> [f64; Q7] {
    let t_f: f64 = g_neighbor[..Q7].iter().sum();
    std::array::from_fn(|i| weights[i] * t_b + g_neighbor[i] - weights[i] * t_f)
}

/// Unknown slots at the `+z` outlet, in order.
pub const OUTLET_UNKNOWNS: [usize; 5] = [6, 12, 13, 16, 17];

/// Constant-density outlet on `+z`. `f` holds the 14 known populations (the unknown
/// slots are ignored); returns `[f6, f12, f13, f16, f17]`.
pub fn pressure_outlet_z(f: &[f64; Q19], rho_out: f64, force: [f64; 3]) -> Result<[f64; 5]> {
    if !(rho_out > 0.0) {
        return Err(Error::InvalidParameter(format!("outlet density must be positive, got {rho_out}")));
    }
    Ok(outlet_unknowns(f, rho_out, force))
}

#[inline]
fn outlet_unknowns(f: &[f64], rho: f64, force: [f64; 3]) -> [f64; 5] {
    let [fx, fy, fz] = force;
    let level = f[0] + f[1] + f[2] + f[3] + f[4] + f[7] + f[8] + f[9] + f[10];
    let up = f[5] + f[11] + f[14] + f[15] + f[18];
    let uz = (level + 2.0 * up + 0.5 * fz) / rho - 1.0;
    let ru = rho * uz;
    let a = (f[1] - f[2]) + (f[7] - f[8]) + (f[9] - f[10]);
    let b = (f[3] - f[4]) + (f[7] - f[8]) - (f[9] - f[10]);
    [
        f[5] - ru / 3.0,
        f[11] + 0.5 * a + (2.0 * fx + fz) / 8.0 - ru / 6.0,
        f[14] - 0.5 * a - (2.0 * fx - fz) / 8.0 - ru / 6.0,
        f[15] + 0.5 * b + (2.0 * fy + fz) / 8.0 - ru / 6.0,
        f[18] - 0.5 * b - (2.0 * fy - fz) / 8.0 - ru / 6.0,
    ]
}

/// Apply the outlet to every non-wall node of the top layer.
pub fn apply_pressure_outlet(grid: &Grid, f: &mut [f64], force: &[[f64; 3]], rho_out: f64) {
    let z = grid.nz - 1;
    for y in 0..grid.ny {
        for x in 0..grid.nx {
            if grid.on_wall([x, y, z]) {
                continue;
            }
            let n = grid.index(x, y, z);
            let slot = &mut f[Q19 * n..Q19 * n + Q19];
            let unknown = outlet_unknowns(slot, rho_out, force[n]);
            for (k, &i) in OUTLET_UNKNOWNS.iter().enumerate() {
                slot[i] = unknown[k];
            }
        }
    }
}

/// Fill the periodic halo of `field` along `axis`.
pub fn apply_periodic(grid: &Grid, field: &mut Padded<f64>, axis: usize) -> Result<()> {
    if !grid.is_periodic(axis) {
        return Err(Error::InvalidParameter(format!("axis {axis} is not periodic")));
    }
    let mut rules = [[HaloRule::ZeroGradient; 2]; 3];
    for a in 0..3 {
        if a == axis || grid.is_periodic(a) {
            rules[a] = [HaloRule::Periodic; 2];
        }
    }
    // Only the requested axis is rewritten; keep the others as they were.
    let before = field.data.clone();
    fill_scalar_halo(grid, field, &rules);
    let dims = grid.dims().map(|d| d as isize);
    for z in -1..=dims[2] {
        for y in -1..=dims[1] {
            for x in -1..=dims[0] {
                let p = [x, y, z];
                let ghost_on_axis = p[axis] == -1 || p[axis] == dims[axis];
                if !ghost_on_axis {
                    let i = grid.padded_index(x, y, z);
                    field.data[i] = before[i];
                }
            }
        }
    }
    Ok(())
}
