//! Explicit finite-difference solver of the macroscopic temperature equation
//! `ρc_v (∂_t T + u·∇T) = ∇·(λ∇T) − T (∂p/∂T)_ρ ∇·u`, driven by the flow fields.

use rayon::prelude::*;

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::thermal::{divergence_at, DirichletNode, ThermalInputs, ThermalProperties};

/// Finite-difference reference solver.
#[derive(Debug, Clone)]
pub struct FdmSolver {
    pub props: ThermalProperties,
    pub eos: EosParams,
    /// Fixed number of sub-steps per lattice step; `None` picks the smallest stable count.
    pub substeps: Option<usize>,
    scratch: Vec<f64>,
}

/// Largest stable sub-step: `0.5 · min(ρc_v/(6λ), 1/|u|_max)`.
pub fn stable_substep(props: &ThermalProperties, rho: &[f64], u_max: f64) -> f64 {
    let diffusive = rho
        .iter()
        .map(|&r| r * props.cv / (6.0 * props.conductivity(r)))
        .fold(f64::INFINITY, f64::min);
    let advective = if u_max > 0.0 { 1.0 / u_max } else { f64::INFINITY };
    0.5 * diffusive.min(advective)
}

#[inline]
fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl FdmSolver {
    pub fn new(props: ThermalProperties, eos: EosParams, substeps: Option<usize>) -> Result<Self> {
        if !(props.cv > 0.0 && props.lambda_liquid > 0.0 && props.lambda_vapor > 0.0) {
            return Err(Error::InvalidParameter("heat capacity and conductivities must be positive".into()));
        }
        if substeps == Some(0) {
            return Err(Error::Config("fdm sub-step count must be at least 1".into()));
        }
        Ok(Self {
            props,
            eos,
            substeps,
            scratch: Vec::new(),
        })
    }

    /// Advance `temperature` by one lattice time step. Returns the sub-step count used.
    pub fn step(
        &mut self,
        grid: &Grid,
        inputs: &ThermalInputs<'_>,
        dirichlet: &[DirichletNode],
        temperature: &mut [f64],
    ) -> Result<usize> {
        let u_max = inputs
            .velocity
            .data
            .iter()
            .map(|u| u[0].abs().max(u[1].abs()).max(u[2].abs()))
            .fold(0.0, f64::max);
        let bound = stable_substep(&self.props, inputs.rho, u_max);
        let n_sub = match self.substeps {
            Some(n) => {
                if 1.0 / n as f64 > bound {
                    return Err(Error::Config(format!(
                        "fdm sub-step 1/{n} exceeds the stability bound {bound:.4}"
                    )));
                }
                n
            }
            None => (1.0 / bound).ceil().max(1.0) as usize,
        };
        let dt = 1.0 / n_sub as f64;
        self.scratch.resize(temperature.len(), 0.0);
        for _ in 0..n_sub {
            self.substep(grid, inputs, temperature, dt);
            temperature.copy_from_slice(&self.scratch);
            for d in dirichlet {
                temperature[d.node] = d.temperature;
            }
        }
        Ok(n_sub)
    }

    fn substep(&mut self, grid: &Grid, inputs: &ThermalInputs<'_>, t: &[f64], dt: f64) {
        let [nx, ny, _] = grid.dims();
        let plane = nx * ny;
        let props = self.props;
        let eos = &self.eos;
        self.scratch.par_chunks_mut(plane).enumerate().for_each(|(z, out)| {
            for y in 0..ny {
                let prow = grid.padded_index(0, y as isize, z as isize);
                for x in 0..nx {
                    let xyz = [x, y, z];
                    let n = x + nx * (y + ny * z);
                    let tc = t[n];
                    let rho = inputs.rho[n];
                    let lc = props.conductivity(rho);
                    let mut diffusion = 0.0;
                    let mut grad = [0.0; 3];
                    for axis in 0..3 {
                        let mut side = [(tc, 0.0); 2];
                        for (k, d) in [(0usize, -1i32), (1, 1)] {
                            if let Some(c) = grid.step(axis, xyz[axis], d) {
                                let mut at = xyz;
                                at[axis] = c;
                                let m = grid.index(at[0], at[1], at[2]);
                                let flux = harmonic(lc, props.conductivity(inputs.rho[m])) * (t[m] - tc);
                                diffusion += flux;
                                side[k] = (t[m], 1.0);
                            }
                        }
                        let span = side[0].1 + side[1].1;
                        if span > 0.0 {
                            grad[axis] = (side[1].0 - side[0].0) / span;
                        }
                    }
                    let u = inputs.velocity.data[prow + x];
                    let div = divergence_at(inputs.velocity, grid, prow + x);
                    let rho_cv = rho * props.cv;
                    let advection = u[0] * grad[0] + u[1] * grad[1] + u[2] * grad[2];
                    let source = (diffusion - tc * eos.dp_dt_unchecked(rho, tc) * div) / rho_cv;
                    out[x + nx * y] = tc + dt * (source - advection);
                }
            }
        });
    }
}
