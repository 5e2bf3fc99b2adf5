//! D3Q19 non-orthogonal MRT evolution of the density populations with
//! exact-difference forcing and the pseudopotential interaction force.

use std::sync::{Once, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, OpenLink, Padded, StreamPlan};
use crate::lattice::{d3q19_descriptor, d3q19_moments, d3q19_populations, LatticeDescriptor, D3Q19_OPPOSITE, D3Q19_VELOCITIES, D3Q19_WEIGHTS, Q19};

const CS2: f64 = 1.0 / 3.0;

/// Interaction weights `ϖ(|c|²)` for the 18 moving directions (index 0 unused).
pub const INTERACTION_WEIGHTS: [f64; Q19] = {
    let mut w = [0.0; Q19];
    let mut i = 1;
    while i < Q19 {
        w[i] = if i <= 6 { 1.0 / 6.0 } else { 1.0 / 12.0 };
        i += 1;
    }
    w
};

/// Shared D3Q19 descriptor.
pub fn d3q19() -> &'static LatticeDescriptor {
    static LATTICE: OnceLock<LatticeDescriptor> = OnceLock::new();
    LATTICE.get_or_init(|| d3q19_descriptor().expect("D3Q19 moment matrix is invertible"))
}

/// Relaxation rates of the flow moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRelaxation {
    pub s_e: f64,
    pub s_nu: f64,
    pub s_q: f64,
    pub s_pi: f64,
}

impl Default for FlowRelaxation {
    fn default() -> Self {
        Self {
            s_e: 0.8,
            s_nu: 1.25,
            s_q: 1.0,
            s_pi: 1.0,
        }
    }
}

impl FlowRelaxation {
    pub fn new(s_e: f64, s_nu: f64, s_q: f64, s_pi: f64) -> Result<Self> {
        for (name, s) in [("s_e", s_e), ("s_nu", s_nu), ("s_q", s_q), ("s_pi", s_pi)] {
            if !(s > 0.0 && s < 2.0) {
                return Err(Error::InvalidParameter(format!("{name} = {s} outside (0, 2)")));
            }
        }
        Ok(Self { s_e, s_nu, s_q, s_pi })
    }

    /// `diag[1,1,1,1, s_e, s_ν×5, s_q×6, s_π×3]`.
    pub fn diagonal(&self) -> [f64; Q19] {
        let mut d = [1.0; Q19];
        d[4] = self.s_e;
        d[5..10].fill(self.s_nu);
        d[10..16].fill(self.s_q);
        d[16..19].fill(self.s_pi);
        d
    }

    /// `ν = c_s² (1/s_ν − 1/2)` with unit time step.
    pub fn kinematic_viscosity(&self) -> f64 {
        CS2 * (1.0 / self.s_nu - 0.5)
    }
}

/// Per-node flow state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowNodeState {
    pub f: [f64; Q19],
    pub rho: f64,
    pub u_eq: [f64; 3],
    pub u: [f64; 3],
    pub force: [f64; 3],
}

impl FlowNodeState {
    /// Build the node state from populations and the total force acting on the node.
    pub fn from_populations(f: [f64; Q19], force: [f64; 3]) -> Result<Self> {
        let (rho, u_eq, u) = macroscopics(&f, force)?;
        Ok(Self { f, rho, u_eq, u, force })
    }
}

#[inline(always)]
fn equilibrium_into(rho: f64, u: [f64; 3], out: &mut [f64; Q19]) {
    let usq = 1.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    for i in 0..Q19 {
        let c = D3Q19_VELOCITIES[i];
        let cu = 3.0 * (c[0] as f64 * u[0] + c[1] as f64 * u[1] + c[2] as f64 * u[2]);
        out[i] = D3Q19_WEIGHTS[i] * rho * (1.0 + cu + 0.5 * cu * cu - usq);
    }
}

/// Second-order equilibrium with `ĉ_s² = 1/3`.
pub fn equilibrium_f(rho: f64, u: [f64; 3]) -> [f64; Q19] {
    let mut out = [0.0; Q19];
    equilibrium_into(rho, u, &mut out);
    out
}

/// Equilibrium moments `M̂ · f^eq`, in closed form.
#[inline(always)]
pub fn equilibrium_moments(rho: f64, u: [f64; 3]) -> [f64; Q19] {
    let [ux, uy, uz] = u;
    let (xx, yy, zz) = (ux * ux, uy * uy, uz * uz);
    let third = rho / 3.0;
    let ninth = rho / 9.0;
    [
        rho,
        rho * ux,
        rho * uy,
        rho * uz,
        rho * (1.0 + xx + yy + zz),
        rho * (2.0 * xx - yy - zz),
        rho * (yy - zz),
        rho * ux * uy,
        rho * ux * uz,
        rho * uy * uz,
        third * uy,
        third * ux,
        third * uz,
        third * ux,
        third * uz,
        third * uy,
        ninth + third * (xx + yy) - rho * zz / 6.0,
        ninth + third * (xx + zz) - rho * yy / 6.0,
        ninth + third * (yy + zz) - rho * xx / 6.0,
    ]
}

/// Closed-form equilibrium moments as commonly tabulated for this basis. Used only to
/// cross-check [`equilibrium_moments`]; rows 16-18 of this listing do not follow from
/// the second-order equilibrium.
pub fn tabulated_equilibrium_moments(rho: f64, u: [f64; 3]) -> [f64; Q19] {
    let [ux, uy, uz] = u;
    let usq = ux * ux + uy * uy + uz * uz;
    let cs4 = CS2 * CS2;
    let base = rho * cs4 * (1.0 - 1.5 * usq);
    [
        rho,
        rho * ux,
        rho * uy,
        rho * uz,
        rho + rho * usq,
        rho * (2.0 * ux * ux - uy * uy - uz * uz),
        rho * (uy * uy - uz * uz),
        rho * ux * uy,
        rho * ux * uz,
        rho * uy * uz,
        rho * CS2 * uy,
        rho * CS2 * ux,
        rho * CS2 * uz,
        rho * CS2 * ux,
        rho * CS2 * uz,
        rho * CS2 * uy,
        base + rho * CS2 * (ux * ux + uy * uy),
        base + rho * CS2 * (ux * ux + uz * uz),
        base + rho * CS2 * (uy * uy + uz * uz),
    ]
}

/// Rows where the tabulated equilibrium moments disagree with `M̂ · f^eq` at a probe state.
pub fn equilibrium_moment_discrepancies() -> Vec<(usize, f64)> {
    let rho = 1.3;
    let u = [0.03, -0.02, 0.05];
    let derived = equilibrium_moments(rho, u);
    let listed = tabulated_equilibrium_moments(rho, u);
    derived
        .iter()
        .zip(&listed)
        .enumerate()
        .filter_map(|(k, (d, l))| ((d - l).abs() > 1e-12).then_some((k, d - l)))
        .collect()
}

pub(crate) fn log_equilibrium_discrepancies_once() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        for (row, diff) in equilibrium_moment_discrepancies() {
            log::warn!("tabulated equilibrium moment row {row} differs from M*f_eq by {diff:e}; using M*f_eq");
        }
    });
}

/// Pseudopotential interaction force at node `xyz`, reading `ψ` from a halo-filled field.
pub fn interaction_force(psi: &Padded<f64>, grid: &Grid, xyz: [usize; 3], g: f64) -> [f64; 3] {
    let center = grid.padded_index(xyz[0] as isize, xyz[1] as isize, xyz[2] as isize);
    force_at(psi, grid, center, g)
}

#[inline(always)]
fn force_at(psi: &Padded<f64>, grid: &Grid, center: usize, g: f64) -> [f64; 3] {
    let px = (grid.nx + 2) as isize;
    let pxy = px * (grid.ny + 2) as isize;
    let c = center as isize;
    let p = |dx: isize, dy: isize, dz: isize| psi.data[(c + dx + px * dy + pxy * dz) as usize];
    // Axis neighbors carry weight 1/6, planar diagonals 1/12.
    let (xp, xm, yp, ym, zp, zm) = (p(1, 0, 0), p(-1, 0, 0), p(0, 1, 0), p(0, -1, 0), p(0, 0, 1), p(0, 0, -1));
    let (xpyp, xmym, xpym, xmyp) = (p(1, 1, 0), p(-1, -1, 0), p(1, -1, 0), p(-1, 1, 0));
    let (xpzp, xmzm, xpzm, xmzp) = (p(1, 0, 1), p(-1, 0, -1), p(1, 0, -1), p(-1, 0, 1));
    let (ypzp, ymzm, ypzm, ymzp) = (p(0, 1, 1), p(0, -1, -1), p(0, 1, -1), p(0, -1, 1));
    let sx = (xp - xm) / 6.0 + (xpyp - xmym + xpym - xmyp + xpzp - xmzm + xpzm - xmzp) / 12.0;
    let sy = (yp - ym) / 6.0 + (xpyp - xmym - xpym + xmyp + ypzp - ymzm + ypzm - ymzp) / 12.0;
    let sz = (zp - zm) / 6.0 + (xpzp - xmzm - xpzm + xmzp + ypzp - ymzm - ypzm + ymzp) / 12.0;
    let pre = -g * psi.data[center];
    [pre * sx, pre * sy, pre * sz]
}

/// Population increments `f^eq(u_eq + FΔt/ρ) − f^eq(u_eq)`.
pub fn edm_forcing_shift(rho: f64, u_eq: [f64; 3], force: [f64; 3]) -> Result<[f64; Q19]> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("forcing shift needs rho > 0, got {rho}")));
    }
    let shifted = [
        u_eq[0] + force[0] / rho,
        u_eq[1] + force[1] / rho,
        u_eq[2] + force[2] / rho,
    ];
    let a = equilibrium_f(rho, shifted);
    let b = equilibrium_f(rho, u_eq);
    Ok(std::array::from_fn(|i| a[i] - b[i]))
}

/// Density, equilibrium velocity and the half-force-corrected fluid velocity.
pub fn macroscopics(f: &[f64; Q19], force: [f64; 3]) -> Result<(f64, [f64; 3], [f64; 3])> {
    let (rho, j) = moments_of(f);
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("non-positive density {rho}")));
    }
    let u_eq = [j[0] / rho, j[1] / rho, j[2] / rho];
    let u = [
        (j[0] + 0.5 * force[0]) / rho,
        (j[1] + 0.5 * force[1]) / rho,
        (j[2] + 0.5 * force[2]) / rho,
    ];
    Ok((rho, u_eq, u))
}

#[inline(always)]
fn moments_of(f: &[f64]) -> (f64, [f64; 3]) {
    let rho = f[..Q19].iter().sum::<f64>();
    let jx = f[1] - f[2] + f[7] - f[8] + f[9] - f[10] + f[11] - f[12] + f[13] - f[14];
    let jy = f[3] - f[4] + f[7] - f[8] - f[9] + f[10] + f[15] - f[16] + f[17] - f[18];
    let jz = f[5] - f[6] + f[11] - f[12] - f[13] + f[14] + f[15] - f[16] - f[17] + f[18];
    (rho, [jx, jy, jz])
}

/// Moment-space MRT collision with exact-difference forcing.
#[derive(Debug, Clone)]
pub struct FlowCollider {
    diag: [f64; Q19],
}

impl FlowCollider {
    pub fn new(relax: &FlowRelaxation) -> Self {
        Self { diag: relax.diagonal() }
    }

    /// `f* = M̂⁻¹[m − Λ̂(m − m^eq) + (m^eq|_{u+Δu} − m^eq|_u)]`.
    #[inline(always)]
    pub fn collide_into(&self, f: &[f64], rho: f64, u_eq: [f64; 3], force: [f64; 3], out: &mut [f64]) {
        let f: &[f64; Q19] = f.try_into().expect("19 populations");
        let out: &mut [f64; Q19] = out.try_into().expect("19 populations");
        let inv_rho = 1.0 / rho;
        let shifted = [
            u_eq[0] + force[0] * inv_rho,
            u_eq[1] + force[1] * inv_rho,
            u_eq[2] + force[2] * inv_rho,
        ];
        let meq = equilibrium_moments(rho, u_eq);
        let meq_shift = equilibrium_moments(rho, shifted);
        let mut m = d3q19_moments(f);
        for k in 0..Q19 {
            m[k] += meq_shift[k] - meq[k] - self.diag[k] * (m[k] - meq[k]);
        }
        *out = d3q19_populations(&m);
    }
}

/// Collision of a single node.
pub fn collide_flow(node: &FlowNodeState, relax: &FlowRelaxation) -> [f64; Q19] {
    let collider = FlowCollider::new(relax);
    let mut out = [0.0; Q19];
    collider.collide_into(&node.f, node.rho, node.u_eq, node.force, &mut out);
    out
}

/// Streaming plan for the flow lattice on `grid`.
pub fn flow_stream_plan(grid: &Grid) -> StreamPlan {
    StreamPlan::new(grid, &D3Q19_VELOCITIES, &D3Q19_OPPOSITE, OpenLink::Keep)
}

/// Pull streaming of post-collision populations. Links entering through a wall are
/// filled by reflecting the node's own outgoing population; links entering through an
/// open face are left untouched for the outlet condition.
pub fn stream(grid: &Grid, post: &[f64], out: &mut [f64]) {
    stream_with(&flow_stream_plan(grid), post, out);
}

/// [`stream`] with a precomputed plan.
pub fn stream_with(plan: &StreamPlan, post: &[f64], out: &mut [f64]) {
    plan.pull::<Q19, _>(post, out, |_, incoming, dst| *dst = incoming);
}

/// Field-level driver for the flow phases of one time step.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    collider: FlowCollider,
    pub relaxation: FlowRelaxation,
    pub interaction: f64,
    pub gravity: [f64; 3],
}

impl FlowSolver {
    pub fn new(relaxation: FlowRelaxation, interaction: f64, gravity: [f64; 3]) -> Self {
        Self {
            collider: FlowCollider::new(&relaxation),
            relaxation,
            interaction,
            gravity,
        }
    }

    /// Density and momentum `Σ c_i f_i` of every node.
    pub fn moments(&self, grid: &Grid, f: &[f64], rho: &mut [f64], momentum: &mut [[f64; 3]]) {
        let plane = grid.nx * grid.ny;
        rho.par_chunks_mut(plane)
            .zip(momentum.par_chunks_mut(plane))
            .zip(f.par_chunks(Q19 * plane))
            .for_each(|((r, m), fs)| {
                for k in 0..r.len() {
                    let (d, j) = moments_of(&fs[Q19 * k..Q19 * k + Q19]);
                    r[k] = d;
                    m[k] = j;
                }
            });
    }

    /// Total force from the halo-filled `ψ`, and the fluid velocity into the interior of
    /// the padded velocity field. Wall nodes carry zero velocity.
    pub fn forces(
        &self,
        grid: &Grid,
        psi: &Padded<f64>,
        rho: &[f64],
        momentum: &[[f64; 3]],
        wall: &[bool],
        force: &mut [[f64; 3]],
        velocity: &mut Padded<[f64; 3]>,
    ) {
        let [nx, ny, _] = grid.dims();
        let plane = nx * ny;
        let g = self.interaction;
        let gravity = self.gravity;
        force.par_chunks_mut(plane).enumerate().for_each(|(z, fz)| {
            for y in 0..ny {
                let prow = grid.padded_index(0, y as isize, z as isize);
                for x in 0..nx {
                    let n = x + nx * (y + ny * z);
                    let fi = force_at(psi, grid, prow + x, g);
                    let r = rho[n];
                    fz[x + nx * y] = [fi[0] + r * gravity[0], fi[1] + r * gravity[1], fi[2] + r * gravity[2]];
                }
            }
        });
        for z in 0..grid.nz {
            for y in 0..ny {
                let prow = grid.padded_index(0, y as isize, z as isize);
                for x in 0..nx {
                    let n = x + nx * (y + ny * z);
                    let u = if wall[n] {
                        [0.0; 3]
                    } else {
                        let inv = 1.0 / rho[n];
                        let (j, fo) = (momentum[n], force[n]);
                        [(j[0] + 0.5 * fo[0]) * inv, (j[1] + 0.5 * fo[1]) * inv, (j[2] + 0.5 * fo[2]) * inv]
                    };
                    velocity.data[prow + x] = u;
                }
            }
        }
    }

    /// Collision of every node into `post`.
    pub fn collide(
        &self,
        grid: &Grid,
        f: &[f64],
        rho: &[f64],
        momentum: &[[f64; 3]],
        force: &[[f64; 3]],
        wall: &[bool],
        post: &mut [f64],
    ) {
        let plane = grid.nx * grid.ny;
        post.par_chunks_mut(Q19 * plane).enumerate().for_each(|(z, slab)| {
            for k in 0..plane {
                let n = z * plane + k;
                let r = rho[n];
                let u_eq = if wall[n] {
                    // Zero fluid velocity `(ρu_eq + F/2)/ρ` at the boundary node.
                    let fo = force[n];
                    [-0.5 * fo[0] / r, -0.5 * fo[1] / r, -0.5 * fo[2] / r]
                } else {
                    let j = momentum[n];
                    [j[0] / r, j[1] / r, j[2] / r]
                };
                self.collider
                    .collide_into(&f[Q19 * n..Q19 * n + Q19], r, u_eq, force[n], &mut slab[Q19 * k..Q19 * k + Q19]);
            }
        });
    }
}
