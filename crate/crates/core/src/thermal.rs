//! D3Q7 MRT temperature solver. The update divides by the destination node's `ρc_v`
//! so that no gradient of the heat capacity is needed.

use rayon::prelude::*;

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{Grid, OpenLink, Padded, StreamPlan};
use crate::lattice::{d3q7_descriptor, d3q7_moments, d3q7_populations, LatticeDescriptor, D3Q19_VELOCITIES, D3Q7_OPPOSITE, Q7};

/// Relaxation rates `ς_0 … ς_6` of the temperature moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalRelaxation {
    pub rates: [f64; Q7],
}

impl ThermalRelaxation {
    /// Rates for conductivity `λ` on a lattice with sound speed `cs2`:
    /// `ς_{1..3} = 1/(λ/c_s² + 1/2)`, the rest 1.
    pub fn from_conductivity(lambda: f64, cs2: f64) -> Result<Self> {
        let s = conductivity_rate(lambda, cs2)?;
        Ok(Self {
            rates: [1.0, s, s, s, 1.0, 1.0, 1.0],
        })
    }

    pub fn new(rates: [f64; Q7]) -> Result<Self> {
        if rates.iter().any(|&s| !(s > 0.0 && s < 2.0)) {
            return Err(Error::InvalidParameter(format!("thermal rates {rates:?} outside (0, 2)")));
        }
        if rates[1] != rates[2] || rates[2] != rates[3] {
            return Err(Error::InvalidParameter("conductivity rates must be isotropic".into()));
        }
        Ok(Self { rates })
    }

    /// `λ = (1/ς_1 − 1/2) c_s²`.
    pub fn conductivity(&self, cs2: f64) -> f64 {
        (1.0 / self.rates[1] - 0.5) * cs2
    }
}

/// `ς_1` for a given conductivity.
pub fn conductivity_rate(lambda: f64, cs2: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("conductivity must be positive, got {lambda}")));
    }
    Ok(1.0 / (lambda / cs2 + 0.5))
}

/// Per-node thermal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalNodeState {
    pub g: [f64; Q7],
    pub t: f64,
    pub rho_cv: f64,
    pub forcing: f64,
    pub correction: bool,
    /// `T(t − Δt)` and `T(t − 2Δt)`, once available.
    pub t_hist: Option<[f64; 2]>,
}

pub fn equilibrium_g(t: f64, desc: &LatticeDescriptor) -> [f64; Q7] {
    std::array::from_fn(|i| desc.weights()[i] * t)
}

/// Temperature gradient from the first-order moments: `∂_α T = −ς_α m_α / c_s²`.
/// Uses only the node's own populations.
#[inline]
pub fn local_grad_t(g: &[f64; Q7], relax: &ThermalRelaxation, cs2: f64) -> [f64; 3] {
    let m = [g[1] - g[2], g[3] - g[4], g[5] - g[6]];
    std::array::from_fn(|a| -relax.rates[1 + a] * m[a] / cs2)
}

/// Isotropic divergence on the D3Q19 stencil, `(1/c_s²) Σ_i w_i c_i · u(x + c_i)`.
pub fn divergence_u(velocity: &Padded<[f64; 3]>, grid: &Grid, xyz: [usize; 3]) -> f64 {
    let center = grid.padded_index(xyz[0] as isize, xyz[1] as isize, xyz[2] as isize);
    divergence_at(velocity, grid, center)
}

#[inline(always)]
pub(crate) fn divergence_at(velocity: &Padded<[f64; 3]>, grid: &Grid, center: usize) -> f64 {
    let px = (grid.nx + 2) as isize;
    let pxy = px * (grid.ny + 2) as isize;
    let c = center as isize;
    let u = |dx: isize, dy: isize, dz: isize| velocity.data[(c + dx + px * dy + pxy * dz) as usize];
    // Axis neighbors carry 3·w = 1/6, planar diagonals 1/12.
    let axis = u(1, 0, 0)[0] - u(-1, 0, 0)[0] + u(0, 1, 0)[1] - u(0, -1, 0)[1] + u(0, 0, 1)[2] - u(0, 0, -1)[2];
    let (a, b, d, e) = (u(1, 1, 0), u(-1, -1, 0), u(1, -1, 0), u(-1, 1, 0));
    let xy = a[0] + a[1] - b[0] - b[1] + d[0] - d[1] - e[0] + e[1];
    let (a, b, d, e) = (u(1, 0, 1), u(-1, 0, -1), u(1, 0, -1), u(-1, 0, 1));
    let xz = a[0] + a[2] - b[0] - b[2] + d[0] - d[2] - e[0] + e[2];
    let (a, b, d, e) = (u(0, 1, 1), u(0, -1, -1), u(0, 1, -1), u(0, -1, 1));
    let yz = a[1] + a[2] - b[1] - b[2] + d[1] - d[2] - e[1] + e[2];
    axis / 6.0 + (xy + xz + yz) / 12.0
}

/// `F̄ = ρc_v u·∇T + T (∂p/∂T)_ρ ∇·u`.
#[inline]
pub fn thermal_forcing(t: f64, u: [f64; 3], rho: f64, cv: f64, grad_t: [f64; 3], div_u: f64, dp_dt: f64) -> f64 {
    rho * cv * (u[0] * grad_t[0] + u[1] * grad_t[1] + u[2] * grad_t[2]) + t * dp_dt * div_u
}

/// `S_i = w_i ρc_v (Δt/2) ∂_t²T` with a three-level second difference;
/// zero while fewer than two earlier values exist.
pub fn correction_term(t: f64, t_hist: Option<[f64; 2]>, rho_cv: f64, weights: &[f64]) -> [f64; Q7] {
    match t_hist {
        None => [0.0; Q7],
        Some([t1, t2]) => {
            let d2 = t - 2.0 * t1 + t2;
            std::array::from_fn(|i| weights[i] * rho_cv * 0.5 * d2)
        }
    }
}

/// Moment-space collision of a single node, including `F̄_i = −w_i F̄` and `ϑ S_i`.
pub fn collide_thermal(node: &ThermalNodeState, relax: &ThermalRelaxation, desc: &LatticeDescriptor) -> [f64; Q7] {
    let collider = ThermalCollider::new(desc);
    let mut out = [0.0; Q7];
    let s = if node.correction {
        correction_term(node.t, node.t_hist, node.rho_cv, desc.weights())
    } else {
        [0.0; Q7]
    };
    collider.collide_into(&node.g, node.t, relax.rates[1], relax.rates[4], node.forcing, &s, &mut out);
    out
}

/// Destination update `g_i(y) ← [g*_i(y − c_i) + (ρc_v(y) − 1) g_i(y)] / ρc_v(y)`.
#[inline]
pub fn combine(incoming: f64, current: f64, rho_cv: f64) -> f64 {
    (incoming + (rho_cv - 1.0) * current) / rho_cv
}

#[derive(Debug, Clone)]
struct ThermalCollider {
    weights: [f64; Q7],
    rest: f64,
}

impl ThermalCollider {
    fn new(desc: &LatticeDescriptor) -> Self {
        let mut weights = [0.0; Q7];
        weights.copy_from_slice(desc.weights());
        Self {
            weights,
            rest: 1.0 - weights[0],
        }
    }

    /// `g* = M⁻¹(m − Λ(m − m^eq)) − w F̄ + S`, with `m^eq = [T, 0, 0, 0, w̄T, 0, 0]`.
    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn collide_into(&self, g: &[f64], t: f64, s_lambda: f64, s_high: f64, forcing: f64, s: &[f64; Q7], out: &mut [f64]) {
        let mut m = d3q7_moments(g.try_into().expect("7 populations"));
        let meq = [t, 0.0, 0.0, 0.0, self.rest * t, 0.0, 0.0];
        let rates = [1.0, s_lambda, s_lambda, s_lambda, s_high, s_high, s_high];
        for k in 0..Q7 {
            m[k] -= rates[k] * (m[k] - meq[k]);
        }
        let post = d3q7_populations(&m);
        for i in 0..Q7 {
            out[i] = post[i] - self.weights[i] * forcing + s[i];
        }
    }
}

/// A node whose temperature is imposed by non-equilibrium extrapolation from `neighbor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletNode {
    pub node: usize,
    pub neighbor: usize,
    pub temperature: f64,
}

/// Per-phase thermal properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalProperties {
    pub cv: f64,
    pub lambda_liquid: f64,
    pub lambda_vapor: f64,
    /// Nodes with `ρ ≥ phase_threshold` take the liquid conductivity.
    pub phase_threshold: f64,
}

impl ThermalProperties {
    #[inline]
    pub fn conductivity(&self, rho: f64) -> f64 {
        if rho >= self.phase_threshold {
            self.lambda_liquid
        } else {
            self.lambda_vapor
        }
    }
}

/// Flow-side inputs of a thermal step, all at time `t`.
pub struct ThermalInputs<'a> {
    pub rho: &'a [f64],
    /// Fluid velocity with its halo filled.
    pub velocity: &'a Padded<[f64; 3]>,
}

/// Field-level lattice Boltzmann temperature solver.
#[derive(Debug, Clone)]
pub struct ThermalSolver {
    desc: LatticeDescriptor,
    collider: ThermalCollider,
    pub props: ThermalProperties,
    pub eos: EosParams,
    pub correction: bool,
    s_liquid: f64,
    s_vapor: f64,
    s_high: f64,
}

impl ThermalSolver {
    pub fn new(rest_weight: f64, props: ThermalProperties, eos: EosParams, correction: bool) -> Result<Self> {
        let desc = d3q7_descriptor(rest_weight)?;
        if !(props.cv > 0.0) {
            return Err(Error::InvalidParameter(format!("heat capacity must be positive, got {}", props.cv)));
        }
        let s_liquid = conductivity_rate(props.lambda_liquid, desc.cs2())?;
        let s_vapor = conductivity_rate(props.lambda_vapor, desc.cs2())?;
        for s in [s_liquid, s_vapor] {
            if !(s > 0.0 && s < 2.0) {
                return Err(Error::InvalidParameter(format!("conductivity rate {s} outside (0, 2)")));
            }
        }
        Ok(Self {
            collider: ThermalCollider::new(&desc),
            desc,
            props,
            eos,
            correction,
            s_liquid,
            s_vapor,
            s_high: 1.0,
        })
    }

    pub fn descriptor(&self) -> &LatticeDescriptor {
        &self.desc
    }

    /// Relaxation rates applied at a node of density `rho`.
    pub fn relaxation_at(&self, rho: f64) -> ThermalRelaxation {
        let s = if rho >= self.props.phase_threshold { self.s_liquid } else { self.s_vapor };
        ThermalRelaxation {
            rates: [1.0, s, s, s, self.s_high, self.s_high, self.s_high],
        }
    }

    pub fn initialize(&self, temperature: &[f64], g: &mut [f64]) {
        for (n, &t) in temperature.iter().enumerate() {
            g[Q7 * n..Q7 * n + Q7].copy_from_slice(&equilibrium_g(t, &self.desc));
        }
    }

    /// Advance `g` by one step and refresh `temperature = Σ g`. `t_hist` holds
    /// `T(t − Δt)` and `T(t − 2Δt)` when the correction term is active and warmed up.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        grid: &Grid,
        inputs: &ThermalInputs<'_>,
        dirichlet: &[DirichletNode],
        g: &mut [f64],
        post: &mut [f64],
        temperature: &mut [f64],
        t_hist: Option<(&[f64], &[f64])>,
    ) -> Result<()> {
        let plan = thermal_stream_plan(grid);
        self.step_with(grid, &plan, inputs, dirichlet, g, post, temperature, t_hist)
    }

    /// [`ThermalSolver::step`] with a precomputed streaming plan.
    #[allow(clippy::too_many_arguments)]
    pub fn step_with(
        &self,
        grid: &Grid,
        plan: &StreamPlan,
        inputs: &ThermalInputs<'_>,
        dirichlet: &[DirichletNode],
        g: &mut [f64],
        post: &mut [f64],
        temperature: &mut [f64],
        t_hist: Option<(&[f64], &[f64])>,
    ) -> Result<()> {
        let [nx, ny, _] = grid.dims();
        let plane = nx * ny;
        let cv = self.props.cv;
        if let Some(n) = inputs.rho.iter().position(|&r| !(r * cv > 0.0)) {
            let [x, y, z] = grid.coords(n);
            return Err(Error::CorruptedState {
                step: 0,
                x,
                y,
                z,
                what: format!("non-positive heat capacity rho*cv = {}", inputs.rho[n] * cv),
            });
        }
        let weights = self.collider.weights;
        let cs2 = self.desc.cs2();
        let hist = if self.correction { t_hist } else { None };

        {
            let g_in: &[f64] = g;
            post.par_chunks_mut(Q7 * plane).enumerate().for_each(|(z, slab)| {
                for y in 0..ny {
                    let prow = grid.padded_index(0, y as isize, z as isize);
                    for x in 0..nx {
                        let n = x + nx * (y + ny * z);
                        let gn = &g_in[Q7 * n..Q7 * n + Q7];
                        let t: f64 = gn.iter().sum();
                        let rho = inputs.rho[n];
                        let s_lambda = if rho >= self.props.phase_threshold { self.s_liquid } else { self.s_vapor };
                        let m1 = [gn[1] - gn[2], gn[3] - gn[4], gn[5] - gn[6]];
                        let grad = [-s_lambda * m1[0] / cs2, -s_lambda * m1[1] / cs2, -s_lambda * m1[2] / cs2];
                        let u = inputs.velocity.data[prow + x];
                        let div = divergence_at(inputs.velocity, grid, prow + x);
                        let dp_dt = self.eos.dp_dt_unchecked(rho, t);
                        let forcing = thermal_forcing(t, u, rho, cv, grad, div, dp_dt);
                        let s = match hist {
                            Some((t1, t2)) => correction_term(t, Some([t1[n], t2[n]]), rho * cv, &weights),
                            None => [0.0; Q7],
                        };
                        let k = x + nx * y;
                        self.collider
                            .collide_into(gn, t, s_lambda, self.s_high, forcing, &s, &mut slab[Q7 * k..Q7 * k + Q7]);
                    }
                }
            });
        }

        let post: &[f64] = post;
        let rho = inputs.rho;
        plan.pull::<Q7, _>(post, g, |n, incoming, dst| *dst = combine(incoming, *dst, rho[n] * cv));

        for d in dirichlet {
            let nb: [f64; Q7] = std::array::from_fn(|i| g[Q7 * d.neighbor + i]);
            let fixed = crate::boundary::dirichlet_temperature(&nb, d.temperature, &weights);
            g[Q7 * d.node..Q7 * d.node + Q7].copy_from_slice(&fixed);
        }

        temperature.par_iter_mut().enumerate().for_each(|(n, t)| {
            *t = g[Q7 * n..Q7 * n + Q7].iter().sum();
        });
        Ok(())
    }
}

/// Streaming plan for the thermal lattice: every link without an upstream node reflects.
pub fn thermal_stream_plan(grid: &Grid) -> StreamPlan {
    StreamPlan::new(grid, &D3Q19_VELOCITIES[..Q7], &D3Q7_OPPOSITE, OpenLink::Reflect)
}

/// Nodes carrying a fixed temperature, each paired with its inward neighbor.
pub fn dirichlet_nodes(grid: &Grid, boundaries: &crate::boundary::BoundarySet) -> Vec<DirichletNode> {
    let dims = grid.dims();
    let mut out = Vec::new();
    for n in 0..grid.len() {
        let xyz = grid.coords(n);
        let mut hit = None;
        for axis in 0..3 {
            for side in 0..2 {
                let on_face = if side == 0 { xyz[axis] == 0 } else { xyz[axis] == dims[axis] - 1 };
                if !on_face {
                    continue;
                }
                if let Some(t) = boundaries.faces[axis][side].temperature() {
                    let mut inward = [0i32; 3];
                    inward[axis] = if side == 0 { 1 } else { -1 };
                    hit = Some((t, inward));
                }
            }
        }
        if let Some((t, inward)) = hit {
            let neighbor = grid
                .neighbor(xyz, inward)
                .expect("grid has at least two nodes along a fixed-temperature axis");
            out.push(DirichletNode {
                node: n,
                neighbor,
                temperature: t,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{fill_vector_halo, HaloRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desc() -> LatticeDescriptor {
        d3q7_descriptor(0.5).unwrap()
    }

    #[test]
    fn equilibrium_cases() {
        let d = desc();
        assert_eq!(equilibrium_g(0.0, &d), [0.0; Q7]);
        let g = equilibrium_g(0.1, &d);
        assert!((g[0] - 0.05).abs() < 1e-17);
        for i in 1..Q7 {
            assert!((g[i] - 0.1 / 12.0).abs() < 1e-17);
        }
        assert!((g.iter().sum::<f64>() - 0.1).abs() < 1e-16);
    }

    #[test]
    fn conductivity_relation() {
        let r = ThermalRelaxation::from_conductivity(0.4, 1.0 / 6.0).unwrap();
        assert!((r.conductivity(1.0 / 6.0) - 0.4).abs() < 1e-15);
        assert!(ThermalRelaxation::from_conductivity(0.0, 1.0 / 6.0).is_err());
        assert!(ThermalRelaxation::new([1.0, 1.2, 1.1, 1.2, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn local_gradient_cases() {
        let d = desc();
        let r = ThermalRelaxation::from_conductivity(1.0 / 3.0, d.cs2()).unwrap();
        assert_eq!(local_grad_t(&equilibrium_g(0.2, &d), &r, d.cs2()), [0.0; 3]);
        let mut g = equilibrium_g(0.2, &d);
        g[1] += 1e-4;
        g[4] -= 2e-5;
        let a = local_grad_t(&g, &r, d.cs2());
        let mut mirrored = g;
        mirrored.swap(1, 2);
        let b = local_grad_t(&mirrored, &r, d.cs2());
        assert_eq!(a[0], -b[0]);
        assert_eq!(a[1], b[1]);
        assert!(a[0] < 0.0 && a[1] < 0.0);
    }

    fn velocity_field(grid: &Grid, u: impl Fn(f64, f64, f64) -> [f64; 3]) -> Padded<[f64; 3]> {
        let mut p = Padded::new(grid);
        for z in -1..=grid.nz as isize {
            for y in -1..=grid.ny as isize {
                for x in -1..=grid.nx as isize {
                    p.set(grid, x, y, z, u(x as f64, y as f64, z as f64));
                }
            }
        }
        p
    }

    #[test]
    fn divergence_cases() {
        let grid = Grid::periodic([6, 6, 6]);
        let uniform = velocity_field(&grid, |_, _, _| [0.01, -0.02, 0.03]);
        assert!(divergence_u(&uniform, &grid, [2, 3, 4]).abs() < 1e-17);
        let s = 1.7e-3;
        let linear = velocity_field(&grid, |x, _, _| [s * x, 0.0, 0.0]);
        for xyz in [[0, 0, 0], [3, 2, 1], [5, 5, 5]] {
            assert!((divergence_u(&linear, &grid, xyz) - s).abs() < 1e-12);
        }
        let swirl = velocity_field(&grid, |x, y, _| [-y * 1e-3, x * 1e-3, 0.0]);
        assert!(divergence_u(&swirl, &grid, [3, 3, 3]).abs() < 1e-12);
        let mixed = velocity_field(&grid, |x, y, z| [0.1 * y + 0.2 * x, 0.3 * z - 0.1 * y, 0.05 * z + x]);
        assert!((divergence_u(&mixed, &grid, [2, 2, 2]) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn forcing_cases() {
        assert_eq!(thermal_forcing(0.1, [0.0; 3], 2.0, 5.0, [1.0, 2.0, 3.0], 0.0, 0.7), 0.0);
        let f = thermal_forcing(0.1, [0.01, 0.0, 0.0], 2.0, 5.0, [0.0; 3], 1e-3, 0.7);
        assert_eq!(f, 0.1 * 0.7 * 1e-3);
        let f = thermal_forcing(0.1, [0.01, 0.0, 0.0], 2.0, 5.0, [0.5, 0.0, 0.0], 0.0, 0.7);
        assert!((f - 2.0 * 5.0 * 0.005).abs() < 1e-16);
    }

    #[test]
    fn correction_cases() {
        let w = desc().weights().to_vec();
        assert_eq!(correction_term(0.3, Some([0.3, 0.3]), 5.0, &w), [0.0; Q7]);
        let lin = correction_term(0.3, Some([0.2, 0.1]), 5.0, &w);
        assert!(lin.iter().all(|v| v.abs() < 1e-16));
        let s = correction_term(1.0, Some([0.9, 0.81]), 5.0, &w);
        assert!((s[0] - 0.0125).abs() < 1e-15);
        assert_eq!(correction_term(1.0, None, 5.0, &w), [0.0; Q7]);
    }

    #[test]
    fn collision_conserves_temperature_without_forcing() {
        let d = desc();
        let r = ThermalRelaxation::from_conductivity(0.2, d.cs2()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let g: [f64; Q7] = std::array::from_fn(|_| rng.gen_range(0.0..0.1));
            let t = g.iter().sum();
            let node = ThermalNodeState {
                g,
                t,
                rho_cv: 3.0,
                forcing: 0.0,
                correction: false,
                t_hist: None,
            };
            let post = collide_thermal(&node, &r, &d);
            assert!((post.iter().sum::<f64>() - t).abs() < 1e-15);
            let with_force = collide_thermal(&ThermalNodeState { forcing: 1e-3, ..node }, &r, &d);
            assert!((with_force.iter().sum::<f64>() - (t - 1e-3)).abs() < 1e-15);
        }
    }

    fn solver(cv: f64, correction: bool) -> ThermalSolver {
        let props = ThermalProperties {
            cv,
            lambda_liquid: 0.4,
            lambda_vapor: 0.2,
            phase_threshold: 3.0,
        };
        ThermalSolver::new(0.5, props, EosParams::reference(), correction).unwrap()
    }

    #[test]
    fn uniform_field_is_a_fixed_point() {
        let grid = Grid::periodic([5, 4, 3]);
        let n = grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..6.5)).collect();
        let velocity = Padded::new(&grid);
        for correction in [false, true] {
            let s = solver(5.0, correction);
            let temp = vec![0.094; n];
            let mut g = vec![0.0; n * Q7];
            s.initialize(&temp, &mut g);
            let start = g.clone();
            let mut post = vec![0.0; n * Q7];
            let mut t = temp.clone();
            let inputs = ThermalInputs { rho: &rho, velocity: &velocity };
            for _ in 0..5 {
                s.step(&grid, &inputs, &[], &mut g, &mut post, &mut t, Some((&temp, &temp))).unwrap();
            }
            for (a, b) in g.iter().zip(&start) {
                assert!((a - b).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn conserves_heat_content_on_periodic_box_without_flow() {
        let grid = Grid::periodic([8, 3, 3]);
        let n = grid.len();
        let rho = vec![1.0; n];
        let mut velocity = Padded::new(&grid);
        fill_vector_halo(&grid, &mut velocity, &[[HaloRule::Periodic; 2]; 3]);
        let s = solver(1.0, false);
        let temp: Vec<f64> = (0..n).map(|k| 0.09 + 0.01 * ((grid.coords(k)[0] as f64) * 0.7).sin()).collect();
        let mut g = vec![0.0; n * Q7];
        s.initialize(&temp, &mut g);
        let mut post = vec![0.0; n * Q7];
        let mut t = temp.clone();
        let total0: f64 = temp.iter().sum();
        let inputs = ThermalInputs { rho: &rho, velocity: &velocity };
        for _ in 0..50 {
            s.step(&grid, &inputs, &[], &mut g, &mut post, &mut t, None).unwrap();
        }
        let total: f64 = t.iter().sum();
        assert!((total - total0).abs() < 1e-13 * total0);
    }

    #[test]
    fn rejects_non_positive_heat_capacity() {
        let grid = Grid::periodic([3, 3, 3]);
        let rho = vec![-1.0; grid.len()];
        let velocity = Padded::new(&grid);
        let s = solver(5.0, false);
        let mut g = vec![0.0; grid.len() * Q7];
        let mut post = g.clone();
        let mut t = vec![0.0; grid.len()];
        let inputs = ThermalInputs { rho: &rho, velocity: &velocity };
        assert!(s.step(&grid, &inputs, &[], &mut g, &mut post, &mut t, None).is_err());
    }
}
