//! Field storage, case initialization and the coupled time-stepping loop.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{apply_pressure_outlet, BoundarySet, FaceKind};
use crate::config::{cap_geometry, CaseConfig, InitConfig, ThermalBackend};
use crate::diagnostics::{contact_radius, droplet_diameter, two_segment_fit, SlabProfile};
use crate::eos::{maxwell_coexistence, CoexistencePoint, EosParams};
use crate::error::{Error, Result};
use crate::fdm::FdmSolver;
use crate::flow::{equilibrium_f, flow_stream_plan, log_equilibrium_discrepancies_once, stream_with, FlowSolver};
use crate::grid::{Grid, HaloPlan, Padded, StreamPlan};
use crate::lattice::{Q19, Q7};
use crate::thermal::{
    dirichlet_nodes, thermal_stream_plan, DirichletNode, ThermalInputs, ThermalProperties, ThermalSolver,
};

/// Environment variable read for the worker thread count when the configuration does
/// not set one.
pub const THREADS_ENV: &str = "THERMOLBM_THREADS";

/// Populations, temperature history and the macroscopic fields derived from them.
/// `f`, `g`, `temperature` and the history are the evolving state; the remaining
/// fields are recomputed from it at the start of every step.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub grid: Grid,
    pub step: u64,
    pub f: Vec<f64>,
    /// Empty unless the lattice Boltzmann thermal backend is active.
    pub g: Vec<f64>,
    pub temperature: Vec<f64>,
    pub t_prev: Vec<f64>,
    pub t_prev2: Vec<f64>,
    /// Number of valid history levels (0, 1 or 2).
    pub history: u8,
    pub rho: Vec<f64>,
    pub momentum: Vec<[f64; 3]>,
    pub force: Vec<[f64; 3]>,
    pub velocity: Padded<[f64; 3]>,
    pub psi: Padded<f64>,
}

impl FieldSet {
    pub fn new(grid: Grid, thermal_populations: bool) -> Self {
        let n = grid.len();
        Self {
            step: 0,
            f: vec![0.0; n * Q19],
            g: if thermal_populations { vec![0.0; n * Q7] } else { Vec::new() },
            temperature: vec![0.0; n],
            t_prev: Vec::new(),
            t_prev2: Vec::new(),
            history: 0,
            rho: vec![0.0; n],
            momentum: vec![[0.0; 3]; n],
            force: vec![[0.0; 3]; n],
            velocity: Padded::new(&grid),
            psi: Padded::new(&grid),
            grid,
        }
    }

    /// `Σρ` in node order.
    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// Largest fluid speed over the interior.
    pub fn max_speed(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for n in 0..g.len() {
            let [x, y, z] = g.coords(n);
            let u = self.velocity.at(g, x as isize, y as isize, z as isize);
            m = m.max((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt());
        }
        m
    }

    /// Interior fluid velocity at node `n`.
    pub fn velocity_at(&self, n: usize) -> [f64; 3] {
        let [x, y, z] = self.grid.coords(n);
        self.velocity.at(&self.grid, x as isize, y as isize, z as isize)
    }

    pub fn psi_at(&self, n: usize) -> f64 {
        let [x, y, z] = self.grid.coords(n);
        self.psi.at(&self.grid, x as isize, y as isize, z as isize)
    }

    /// Values of `field` along x at `(y, z)`.
    pub fn line_x(&self, field: &[f64], y: usize, z: usize) -> Vec<f64> {
        let start = self.grid.index(0, y, z);
        field[start..start + self.grid.nx].to_vec()
    }
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub mass: f64,
    pub max_speed: f64,
    pub diameter: f64,
    pub contact_radius: f64,
    pub mean_step_seconds: f64,
}

/// Time series collected during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub records: Vec<DiagnosticsRecord>,
    /// Whether the steady-state detector stopped the run.
    pub steady: bool,
    pub steps: u64,
}

impl Diagnostics {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.step as f64).collect()
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.diameter).collect()
    }

    pub fn contact_radii(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.contact_radius).collect()
    }
}

/// A configured, initialized simulation.
pub struct Simulation {
    pub config: CaseConfig,
    pub fields: FieldSet,
    pub eos: EosParams,
    pub boundaries: BoundarySet,
    /// Coexistence point at the recipe's saturation temperature.
    pub coexistence: CoexistencePoint,
    wall: Vec<bool>,
    dirichlet: Vec<DirichletNode>,
    flow: FlowSolver,
    thermal: Option<ThermalSolver>,
    fdm: Option<FdmSolver>,
    interaction: f64,
    flow_plan: StreamPlan,
    thermal_plan: Option<StreamPlan>,
    psi_halo: HaloPlan,
    velocity_halo: HaloPlan,
    f_post: Vec<f64>,
    g_post: Vec<f64>,
    t_scratch: Vec<f64>,
    pool: Arc<rayon::ThreadPool>,
}

fn thread_count(config: &CaseConfig) -> Result<usize> {
    if let Some(n) = config.run.threads {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(0),
    }
}

impl Simulation {
    /// Build the solvers and initialize the fields from the configured recipe.
    pub fn new(config: CaseConfig) -> Result<Self> {
        let mut sim = Self::assemble(config)?;
        sim.initialize()?;
        sim.refresh()?;
        Ok(sim)
    }

    /// Resume from a previously saved state.
    pub fn from_fields(config: CaseConfig, fields: FieldSet) -> Result<Self> {
        let mut sim = Self::assemble(config)?;
        if fields.grid.dims() != sim.fields.grid.dims() {
            return Err(Error::Config(format!(
                "snapshot grid {:?} does not match configuration {:?}",
                fields.grid.dims(),
                sim.fields.grid.dims()
            )));
        }
        if fields.g.len() != sim.fields.g.len() {
            return Err(Error::Config("snapshot thermal populations do not match the backend".into()));
        }
        let grid = sim.fields.grid.clone();
        sim.fields = FieldSet { grid, ..fields };
        let n = sim.fields.grid.len();
        if sim.config.thermal.correction == 1 && (sim.fields.t_prev.len() != n || sim.fields.t_prev2.len() != n) {
            // The history restarts when resuming a state saved without it.
            sim.fields.t_prev = vec![0.0; n];
            sim.fields.t_prev2 = vec![0.0; n];
            sim.fields.history = 0;
        }
        sim.refresh()?;
        Ok(sim)
    }

    fn assemble(config: CaseConfig) -> Result<Self> {
        config.validate()?;
        log_equilibrium_discrepancies_once();
        let eos = config.eos_params()?;
        let boundaries = config.boundary_set()?;
        let grid = Grid::new(config.dims(), boundaries.edge_kinds())?;
        let coexistence = maxwell_coexistence(config.init.t_sat() * eos.tc(), &eos)?;
        let props = ThermalProperties {
            cv: config.thermal.cv,
            lambda_liquid: config.thermal.lambda_liquid,
            lambda_vapor: config.thermal.lambda_vapor,
            phase_threshold: 0.5 * (coexistence.rho_liquid + coexistence.rho_vapor),
        };
        let correction = config.thermal.correction == 1;
        let (thermal, fdm) = match config.thermal.backend {
            ThermalBackend::Lbm => (Some(ThermalSolver::new(config.thermal.rest_weight, props, eos, correction)?), None),
            ThermalBackend::Fdm => (None, Some(FdmSolver::new(props, eos, config.thermal.fdm_substeps)?)),
            ThermalBackend::None => (None, None),
        };
        let flow = FlowSolver::new(config.flow_relaxation()?, config.eos.interaction, config.flow.gravity);
        let wall = (0..grid.len()).map(|n| grid.on_wall(grid.coords(n))).collect();
        let dirichlet = match config.thermal.backend {
            ThermalBackend::None => Vec::new(),
            _ => dirichlet_nodes(&grid, &boundaries),
        };
        let threads = thread_count(&config)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
        let n = grid.len();
        let lbm = thermal.is_some();
        Ok(Self {
            flow_plan: flow_stream_plan(&grid),
            thermal_plan: lbm.then(|| thermal_stream_plan(&grid)),
            psi_halo: HaloPlan::new(&grid, &boundaries.psi_rules()),
            velocity_halo: HaloPlan::new(&grid, &boundaries.velocity_rules()),
            fields: FieldSet::new(grid, lbm),
            f_post: vec![0.0; n * Q19],
            g_post: if lbm { vec![0.0; n * Q7] } else { Vec::new() },
            t_scratch: Vec::new(),
            interaction: config.eos.interaction,
            config,
            eos,
            boundaries,
            coexistence,
            wall,
            dirichlet,
            flow,
            thermal,
            fdm,
            pool: Arc::new(pool),
        })
    }

    /// Density threshold separating liquid from vapor.
    pub fn phase_threshold(&self) -> f64 {
        0.5 * (self.coexistence.rho_liquid + self.coexistence.rho_vapor)
    }

    pub fn thread_count(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn initialize(&mut self) -> Result<()> {
        let grid = self.fields.grid.clone();
        let tc = self.eos.tc();
        let (rho_l, rho_v) = (self.coexistence.rho_liquid, self.coexistence.rho_vapor);
        let mid = |r: f64| 0.5 * (rho_l + rho_v) - 0.5 * (rho_l - rho_v) * r;
        let center = |axis: usize| (grid.dims()[axis] as f64 - 1.0) / 2.0;
        let n = grid.len();
        let mut rho = vec![0.0; n];
        let mut temp = vec![0.0; n];
        match self.config.init {
            InitConfig::FlatSlab { t_sat, split } => {
                let cut = split * grid.nx as f64;
                for k in 0..n {
                    let x = grid.coords(k)[0] as f64;
                    rho[k] = if x < cut { rho_v } else { rho_l };
                    temp[k] = t_sat * tc;
                }
            }
            InitConfig::Droplet { radius, width, t_sat, t_gas } => {
                let (ts, tg) = (t_sat * tc, t_gas * tc);
                for k in 0..n {
                    let [x, y, z] = grid.coords(k).map(|c| c as f64);
                    let d = ((x - center(0)).powi(2) + (y - center(1)).powi(2) + (z - center(2)).powi(2)).sqrt();
                    let s = (2.0 * (d - radius) / width).tanh();
                    rho[k] = mid(s);
                    temp[k] = 0.5 * (ts + tg) + 0.5 * (tg - ts) * s;
                }
            }
            InitConfig::SessileDroplet { diameter, width, t_sat, initial_angle } => {
                let angle = initial_angle.unwrap_or(match self.boundaries.faces[2][0].kind {
                    FaceKind::Wall { contact_angle_deg, .. } => contact_angle_deg,
                    _ => 90.0,
                });
                let cap = cap_geometry(diameter, angle);
                for k in 0..n {
                    let [x, y, z] = grid.coords(k).map(|c| c as f64);
                    let d = ((x - center(0)).powi(2) + (y - center(1)).powi(2) + (z - cap.center).powi(2)).sqrt();
                    rho[k] = mid((2.0 * (d - cap.radius) / width).tanh());
                    temp[k] = t_sat * tc;
                }
            }
            InitConfig::Uniform { density, t } => {
                let d = density.unwrap_or(maxwell_coexistence(t * tc, &self.eos)?.rho_vapor);
                rho.fill(d);
                temp.fill(t * tc);
            }
        }
        if self.config.run.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.run.seed);
            let a = self.config.run.noise;
            for r in rho.iter_mut() {
                *r *= 1.0 + a * rng.gen_range(-1.0..1.0);
            }
        }
        for d in &self.dirichlet {
            temp[d.node] = d.temperature;
        }
        for k in 0..n {
            self.fields.f[Q19 * k..Q19 * k + Q19].copy_from_slice(&equilibrium_f(rho[k], [0.0; 3]));
        }
        if let Some(th) = &self.thermal {
            th.initialize(&temp, &mut self.fields.g);
        }
        self.fields.temperature = temp;
        self.fields.step = 0;
        self.fields.history = 0;
        if self.config.thermal.correction == 1 {
            self.fields.t_prev = vec![0.0; n];
            self.fields.t_prev2 = vec![0.0; n];
        }
        Ok(())
    }

    /// Recompute `ρ`, momentum, `ψ`, forces and velocity from the current state.
    pub fn refresh(&mut self) -> Result<()> {
        let pool = Arc::clone(&self.pool);
        pool.install(|| self.refresh_inner())
    }

    fn corrupted(&self, n: usize, what: String) -> Error {
        let [x, y, z] = self.fields.grid.coords(n);
        Error::CorruptedState {
            step: self.fields.step,
            x,
            y,
            z,
            what,
        }
    }

    fn refresh_inner(&mut self) -> Result<()> {
        let grid = self.fields.grid.clone();
        let fs = &mut self.fields;
        self.flow.moments(&grid, &fs.f, &mut fs.rho, &mut fs.momentum);

        let limit = self.eos.max_density();
        if let Some(n) = fs.rho.iter().position(|&r| !(r > 0.0 && r < limit)) {
            let r = self.fields.rho[n];
            return Err(self.corrupted(n, format!("density {r} outside (0, {limit})")));
        }
        if let Some(n) = fs.temperature.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            let t = self.fields.temperature[n];
            return Err(self.corrupted(n, format!("temperature {t}")));
        }

        let eos = self.eos;
        let g = self.interaction;
        let (nx, ny) = (grid.nx, grid.ny);
        let plane = nx * ny;
        let mut flat = std::mem::take(&mut self.t_scratch);
        flat.resize(grid.len(), 0.0);
        {
            let fs = &self.fields;
            flat.par_chunks_mut(plane).enumerate().for_each(|(z, out)| {
                for k in 0..plane {
                    let n = z * plane + k;
                    let (r, t) = (fs.rho[n], fs.temperature[n]);
                    let radicand = 2.0 * (eos.pressure_unchecked(r, t) - r / 3.0) / g;
                    out[k] = if radicand >= 0.0 { radicand.sqrt() } else { f64::NAN };
                }
            });
        }
        if let Some(n) = flat.iter().position(|v| v.is_nan()) {
            let (r, t) = (self.fields.rho[n], self.fields.temperature[n]);
            self.t_scratch = flat;
            return Err(Error::NegativeRadicand {
                rho: r,
                t,
                radicand: 2.0 * (eos.pressure_unchecked(r, t) - r / 3.0) / g,
            });
        }
        let fs = &mut self.fields;
        fs.psi.load_interior(&grid, &flat);
        self.t_scratch = flat;
        self.psi_halo.fill_scalar(&mut fs.psi);
        self.flow
            .forces(&grid, &fs.psi, &fs.rho, &fs.momentum, &self.wall, &mut fs.force, &mut fs.velocity);
        self.velocity_halo.fill_vector(&mut fs.velocity);
        Ok(())
    }

    /// Advance one time step. Macroscopic fields must be current (they are after
    /// construction and after every step).
    pub fn step(&mut self) -> Result<()> {
        let pool = Arc::clone(&self.pool);
        pool.install(|| self.step_inner())
    }

    fn step_inner(&mut self) -> Result<()> {
        let grid = self.fields.grid.clone();
        {
            let fs = &mut self.fields;
            self.flow
                .collide(&grid, &fs.f, &fs.rho, &fs.momentum, &fs.force, &self.wall, &mut self.f_post);
            stream_with(&self.flow_plan, &self.f_post, &mut fs.f);
            if let Some(rho_out) = self.boundaries.outlet() {
                apply_pressure_outlet(&grid, &mut fs.f, &fs.force, rho_out);
            }
        }

        let fs = &mut self.fields;
        let inputs = ThermalInputs {
            rho: &fs.rho,
            velocity: &fs.velocity,
        };
        if let (Some(th), Some(plan)) = (&self.thermal, &self.thermal_plan) {
            if th.correction {
                let mut scratch = std::mem::take(&mut self.t_scratch);
                scratch.clear();
                scratch.extend_from_slice(&fs.temperature);
                let hist = (fs.history >= 2).then_some((fs.t_prev.as_slice(), fs.t_prev2.as_slice()));
                th.step_with(&grid, plan, &inputs, &self.dirichlet, &mut fs.g, &mut self.g_post, &mut fs.temperature, hist)
                    .map_err(|e| at_step(e, fs.step))?;
                std::mem::swap(&mut fs.t_prev2, &mut fs.t_prev);
                std::mem::swap(&mut fs.t_prev, &mut scratch);
                self.t_scratch = scratch;
                fs.history = (fs.history + 1).min(2);
            } else {
                th.step_with(&grid, plan, &inputs, &self.dirichlet, &mut fs.g, &mut self.g_post, &mut fs.temperature, None)
                    .map_err(|e| at_step(e, fs.step))?;
            }
        } else if let Some(fdm) = &mut self.fdm {
            fdm.step(&grid, &inputs, &self.dirichlet, &mut fs.temperature)
                .map_err(|e| at_step(e, fs.step))?;
        }
        fs.step += 1;
        self.refresh_inner()
    }

    /// Advance `n` steps.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        let pool = Arc::clone(&self.pool);
        pool.install(|| {
            for _ in 0..n {
                self.step_inner()?;
            }
            Ok(())
        })
    }

    pub fn record(&self, mean_step_seconds: f64) -> DiagnosticsRecord {
        let threshold = self.phase_threshold();
        let fs = &self.fields;
        let contact = match self.config.init {
            InitConfig::SessileDroplet { .. } => contact_radius(&fs.grid, &fs.rho, threshold, 1.min(fs.grid.nz - 1)),
            _ => 0.0,
        };
        DiagnosticsRecord {
            step: fs.step,
            mass: fs.total_mass(),
            max_speed: fs.max_speed(),
            diameter: droplet_diameter(&fs.rho, threshold).diameter,
            contact_radius: contact,
            mean_step_seconds,
        }
    }

    /// Run for the configured number of steps (or until steady), collecting diagnostics
    /// and, when `output` is set, writing snapshots and the series file there.
    pub fn run(&mut self, output: Option<&Path>) -> Result<Diagnostics> {
        let pool = Arc::clone(&self.pool);
        pool.install(|| self.run_inner(output))
    }

    fn run_inner(&mut self, output: Option<&Path>) -> Result<Diagnostics> {
        let run = self.config.run;
        let mut diag = Diagnostics::default();
        diag.records.push(self.record(0.0));
        let mut last_t = self.fields.temperature.clone();
        let mut last_rho = self.fields.rho.clone();
        let mut chunk_start = Instant::now();
        let mut chunk_steps = 0u64;
        if let Some(dir) = output {
            std::fs::create_dir_all(dir)?;
            if run.output_every > 0 {
                crate::io::write_outputs(dir, &self.fields)?;
            }
        }
        let start_step = self.fields.step;
        while self.fields.step - start_step < run.steps {
            self.step_inner()?;
            chunk_steps += 1;
            let step = self.fields.step;
            if step % run.diagnostics_every == 0 {
                let mean = chunk_start.elapsed().as_secs_f64() / chunk_steps as f64;
                let rec = self.record(mean);
                log::debug!("step {step}: mass {:.9e}, max |u| {:.3e}, D {:.3}", rec.mass, rec.max_speed, rec.diameter);
                diag.records.push(rec);
                chunk_start = Instant::now();
                chunk_steps = 0;
            }
            if let Some(dir) = output {
                if run.output_every > 0 && step % run.output_every == 0 {
                    crate::io::write_outputs(dir, &self.fields)?;
                }
            }
            if let Some(tol) = run.steady_tolerance {
                if step % run.steady_interval == 0 {
                    let dt = max_abs_diff(&self.fields.temperature, &last_t);
                    let dr = max_abs_diff(&self.fields.rho, &last_rho);
                    if dt < tol && dr < tol {
                        log::info!("steady after {step} steps (max dT {dt:e}, max drho {dr:e})");
                        diag.steady = true;
                        break;
                    }
                    last_t.copy_from_slice(&self.fields.temperature);
                    last_rho.copy_from_slice(&self.fields.rho);
                }
            }
        }
        if diag.records.last().map(|r| r.step) != Some(self.fields.step) {
            let mean = if chunk_steps > 0 { chunk_start.elapsed().as_secs_f64() / chunk_steps as f64 } else { 0.0 };
            diag.records.push(self.record(mean));
        }
        diag.steps = self.fields.step - start_step;
        if let Some(dir) = output {
            crate::io::write_series_csv(&dir.join(format!("{}_series.csv", self.config.name)), &diag.records)?;
        }
        Ok(diag)
    }

    /// Temperature and density along x at the center line `(ny/2, nz/2)`.
    pub fn center_line(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.fields.grid;
        let (y, z) = (g.ny / 2, g.nz / 2);
        (self.fields.line_x(&self.fields.rho, y, z), self.fields.line_x(&self.fields.temperature, y, z))
    }

    /// Two-segment fit of the center-line temperature profile of a slab case.
    pub fn slab_profile(&self) -> Result<SlabProfile> {
        let (rho, t) = self.center_line();
        two_segment_fit(&rho, &t, self.phase_threshold(), 3, 2)
    }

    pub fn wall_mask(&self) -> &[bool] {
        &self.wall
    }

    pub fn dirichlet(&self) -> &[DirichletNode] {
        &self.dirichlet
    }
}

/// Solver errors carry no step number; fill it in.
fn at_step(e: Error, step: u64) -> Error {
    match e {
        Error::CorruptedState { x, y, z, what, .. } => Error::CorruptedState { step, x, y, z, what },
        other => other,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Summary of a finished case run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub diagnostics: Diagnostics,
    pub slab: Option<SlabProfile>,
    pub final_mass: f64,
}

/// Initialize and run a case from its configuration.
pub fn run_case(config: CaseConfig, output: Option<&Path>) -> Result<RunSummary> {
    let slab_case = matches!(config.init, InitConfig::FlatSlab { .. });
    let mut sim = Simulation::new(config)?;
    let diagnostics = sim.run(output)?;
    let slab = if slab_case { sim.slab_profile().ok() } else { None };
    Ok(RunSummary {
        final_mass: sim.fields.total_mass(),
        diagnostics,
        slab,
    })
}
