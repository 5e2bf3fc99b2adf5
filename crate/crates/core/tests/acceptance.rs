//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL ...` line to the
//! real stdout (bypassing the harness capture) and then asserts the same verdict.
//!
//! Tests share one lock so that wall-clock measurements are not disturbed by
//! concurrently running cases.

use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermolbm::boundary::{bounce_back_wall, pressure_outlet_z, OUTLET_UNKNOWNS};
use thermolbm::config::{CaseConfig, FaceConfig, FacesConfig, GridConfig, InitConfig, ThermalBackend};
use thermolbm::diagnostics::{d2_law_fit, normalize_at_diameter, sessile_contact_angle};
use thermolbm::flow::{collide_flow, edm_forcing_shift, equilibrium_f, FlowNodeState, FlowRelaxation};
use thermolbm::lattice::{d3q19_descriptor, d3q7_descriptor, LatticeDescriptor, DEFAULT_REST_WEIGHT, Q19, Q7};
use thermolbm::perf::performance_probe;
use thermolbm::sim::max_abs_diff;
use thermolbm::thermal::{collide_thermal, equilibrium_g, ThermalNodeState, ThermalRelaxation};
use thermolbm::{FieldSet, Simulation};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {verdict} {detail}");
    let _ = out.flush();
    pass
}

// Conduction slab.

const SLAB_MAX_STEPS: u64 = 20_000_000;
const SLAB_RUNTIME_TARGET_S: f64 = 300.0;
const CV_TOLERANCE: f64 = 1e-8;
const CORRECTION_TOLERANCE_FRACTION: f64 = 1e-3;
/// Continuation length of the restarted variants.
const RESTART_STEPS: u64 = 200_000;

struct SlabBase {
    config: CaseConfig,
    fields: FieldSet,
    steps: u64,
    seconds: f64,
    steady: bool,
    /// e-folding time of the residual relaxation, in steps.
    relaxation_steps: f64,
}

fn slab_config() -> CaseConfig {
    // Uniform in y and z: a one-cell cross-section evolves identically to 200x10x10
    // (checked bitwise by the restart suite).
    let mut c = CaseConfig::conduction_slab();
    c.grid = GridConfig { nx: 200, ny: 1, nz: 1 };
    c.run.threads = Some(1);
    c
}

/// The slab run to a steady temperature field, shared by criteria 1 to 3.
fn slab_base() -> &'static SlabBase {
    static BASE: OnceLock<SlabBase> = OnceLock::new();
    BASE.get_or_init(|| {
        let config = slab_config();
        let tol = config.run.steady_tolerance.expect("slab preset sets a steady tolerance");
        let interval = config.run.steady_interval;
        let start = Instant::now();
        let mut sim = Simulation::new(config.clone()).unwrap();
        let mut last = sim.fields.temperature.clone();
        let mut prev_change = f64::NAN;
        let mut relaxation_steps = f64::NAN;
        let mut steady = false;
        while sim.fields.step < SLAB_MAX_STEPS {
            sim.advance(interval).unwrap();
            let change = max_abs_diff(&sim.fields.temperature, &last);
            if change > 0.0 && prev_change > change {
                relaxation_steps = interval as f64 / (prev_change / change).ln();
            }
            if change < tol {
                steady = true;
                break;
            }
            prev_change = change;
            last.copy_from_slice(&sim.fields.temperature);
        }
        SlabBase {
            config,
            steps: sim.fields.step,
            seconds: start.elapsed().as_secs_f64(),
            steady,
            relaxation_steps,
            fields: sim.fields,
        }
    })
}

/// Largest steady-profile difference consistent with a restarted variant that has
/// drifted `drift` after `RESTART_STEPS`, given exponential relaxation.
fn steady_difference_bound(drift: f64, relaxation_steps: f64) -> f64 {
    drift / (1.0 - (-(RESTART_STEPS as f64) / relaxation_steps).exp())
}

fn restarted(base: &SlabBase, cv: f64, correction: u8) -> Vec<f64> {
    let mut c = base.config.clone();
    c.thermal.cv = cv;
    c.thermal.correction = correction;
    let mut sim = Simulation::from_fields(c, base.fields.clone()).unwrap();
    sim.advance(RESTART_STEPS).unwrap();
    sim.fields.temperature
}

#[test]
fn criterion_01_conduction_slope_ratio() {
    let _g = serial();
    let base = slab_base();
    let sim = Simulation::from_fields(base.config.clone(), base.fields.clone()).unwrap();
    let profile = sim.slab_profile().unwrap();
    let ratio = profile.slope_ratio;
    // The bound is stated to two decimals.
    let at_precision = (ratio * 100.0).round() / 100.0;
    let pass = base.steady && (1.90..=2.00).contains(&at_precision);
    let runtime = if base.seconds < SLAB_RUNTIME_TARGET_S { "met" } else { "missed" };
    report(
        1,
        pass,
        &format!(
            "slope ratio {ratio:.9} ({at_precision:.2}) in [1.90, 2.00]; steady {} after {} steps; \
             runtime {:.0} s, target {SLAB_RUNTIME_TARGET_S:.0} s {runtime}",
            base.steady, base.steps, base.seconds
        ),
    );
    assert!(pass, "slope ratio {ratio}, steady {}", base.steady);
}

#[test]
fn criterion_02_specific_heat_invariance() {
    let _g = serial();
    let base = slab_base();
    let reference = restarted(base, base.config.thermal.cv, 0);
    let mut worst: f64 = 0.0;
    for cv in [4.0, 6.0] {
        worst = worst.max(max_abs_diff(&restarted(base, cv, 0), &reference));
    }
    let bound = steady_difference_bound(worst, base.relaxation_steps);
    let pass = base.steady && bound < CV_TOLERANCE;
    report(
        2,
        pass,
        &format!(
            "c_v in {{4, 5, 6}}: max |dT| {worst:.3e} after {RESTART_STEPS} steps, steady bound {bound:.3e} < {CV_TOLERANCE:e}"
        ),
    );
    assert!(pass, "bound {bound}");
}

#[test]
fn criterion_03_correction_insensitivity() {
    let _g = serial();
    let base = slab_base();
    let reference = restarted(base, base.config.thermal.cv, 0);
    let corrected = restarted(base, base.config.thermal.cv, 1);
    let diff = max_abs_diff(&corrected, &reference);
    let bound = steady_difference_bound(diff, base.relaxation_steps);
    let sim = Simulation::new(base.config.clone()).unwrap();
    let tc = sim.eos.tc();
    let (t_hot, t_sat) = match (&base.config.faces.x_minus, &base.config.init) {
        (FaceConfig::Wall { temperature: Some(t), .. }, InitConfig::FlatSlab { t_sat, .. }) => (*t, *t_sat),
        other => panic!("unexpected slab setup {other:?}"),
    };
    let tol = CORRECTION_TOLERANCE_FRACTION * (t_hot - t_sat) * tc;
    let pass = base.steady && bound < tol;
    report(
        3,
        pass,
        &format!("theta 0 vs 1: max |dT| {diff:.3e} after {RESTART_STEPS} steps, steady bound {bound:.3e} < {tol:.3e}"),
    );
    assert!(pass, "bound {bound} tol {tol}");
}

// Open droplet.

const D2_STEPS: u64 = 8000;
const D2_DISCARD: f64 = 0.1;
const D2_MIN_R2: f64 = 0.99;
const D2_SLOPE_TOLERANCE: f64 = 0.05;
const D2_RUNTIME_TARGET_S: f64 = 1800.0;

fn droplet_64(backend: ThermalBackend) -> CaseConfig {
    let mut c = CaseConfig::droplet_evaporation();
    c.grid = GridConfig { nx: 64, ny: 64, nz: 64 };
    c.init = InitConfig::Droplet { radius: 16.0, width: 5.0, t_sat: 0.86, t_gas: 1.0 };
    c.thermal.backend = backend;
    c.run.steps = D2_STEPS;
    c.run.diagnostics_every = 100;
    c.run.threads = Some(1);
    c
}

#[test]
fn criterion_04_d2_law() {
    let _g = serial();
    let start = Instant::now();
    let mut fits = Vec::new();
    for backend in [ThermalBackend::Lbm, ThermalBackend::Fdm] {
        let mut sim = Simulation::new(droplet_64(backend)).unwrap();
        let diag = sim.run(None).unwrap();
        fits.push(d2_law_fit(&diag.times(), &diag.diameters(), D2_DISCARD).unwrap());
    }
    let seconds = start.elapsed().as_secs_f64();
    let (lb, fdm) = (fits[0], fits[1]);
    let rel = (lb.k - fdm.k).abs() / fdm.k;
    let pass = lb.r_squared > D2_MIN_R2 && fdm.r_squared > D2_MIN_R2 && rel < D2_SLOPE_TOLERANCE && lb.k > 0.0;
    let runtime = if seconds < D2_RUNTIME_TARGET_S { "met" } else { "missed" };
    report(
        4,
        pass,
        &format!(
            "K lattice {:.4e} (R2 {:.4}), K finite-difference {:.4e} (R2 {:.4}), rel diff {:.2}% < {:.0}%; \
             runtime {seconds:.0} s, target {D2_RUNTIME_TARGET_S:.0} s {runtime}",
            lb.k,
            lb.r_squared,
            fdm.k,
            fdm.r_squared,
            100.0 * rel,
            100.0 * D2_SLOPE_TOLERANCE
        ),
    );
    assert!(pass, "{lb:?} {fdm:?}");
}

// Flat interface.

const MAXWELL_STEPS: u64 = 20_000;
const MAXWELL_TOLERANCE: f64 = 0.05;

#[test]
fn criterion_05_flat_interface_coexistence() {
    let _g = serial();
    let mut c = CaseConfig::conduction_slab();
    c.faces = FacesConfig::all_periodic();
    c.grid = GridConfig { nx: 100, ny: 1, nz: 1 };
    c.thermal.backend = ThermalBackend::None;
    c.init = InitConfig::FlatSlab { t_sat: 0.86, split: 0.5 };
    c.run.threads = Some(1);
    let mut sim = Simulation::new(c).unwrap();
    sim.advance(MAXWELL_STEPS).unwrap();
    // Bulk centers of the two phases.
    let (rho_v, rho_l) = (sim.fields.rho[25], sim.fields.rho[75]);
    let oracle = sim.coexistence;
    let err_v = (rho_v - oracle.rho_vapor).abs() / oracle.rho_vapor;
    let err_l = (rho_l - oracle.rho_liquid).abs() / oracle.rho_liquid;
    let pass = err_v < MAXWELL_TOLERANCE && err_l < MAXWELL_TOLERANCE;
    report(
        5,
        pass,
        &format!(
            "vapor {rho_v:.5} vs {:.5} ({:.2}%), liquid {rho_l:.5} vs {:.5} ({:.2}%), tolerance {:.0}%",
            oracle.rho_vapor,
            100.0 * err_v,
            oracle.rho_liquid,
            100.0 * err_l,
            100.0 * MAXWELL_TOLERANCE
        ),
    );
    assert!(pass, "vapor error {err_v}, liquid error {err_l}");
}

// Pressure outlet.

const OUTLET_STEPS: u64 = 10_000;
const OUTLET_DRIFT: f64 = 1e-3;
const OUTLET_SAMPLES: usize = 10_000;

#[test]
fn criterion_06_pressure_outlet() {
    let _g = serial();
    let mut faces = FacesConfig::all_periodic();
    faces.z_minus = FaceConfig::wall(Some(0.86), 90.0);
    faces.z_plus = FaceConfig::PressureOutlet { density: None, temperature: 0.86 };
    let mut c = CaseConfig::sessile_droplet();
    c.faces = faces;
    c.grid = GridConfig { nx: 8, ny: 8, nz: 64 };
    c.init = InitConfig::Uniform { density: None, t: 0.86 };
    c.thermal.backend = ThermalBackend::None;
    c.run.threads = Some(1);
    let mut sim = Simulation::new(c).unwrap();
    let m0 = sim.fields.total_mass();
    sim.advance(OUTLET_STEPS).unwrap();
    let drift = (sim.fields.total_mass() - m0).abs() / m0;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..OUTLET_SAMPLES {
        let mut f: [f64; Q19] = std::array::from_fn(|_| rng.gen_range(0.001..0.6));
        let rho_out = rng.gen_range(0.1..7.0);
        let force: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        let unknown = pressure_outlet_z(&f, rho_out, force).unwrap();
        for (k, &i) in OUTLET_UNKNOWNS.iter().enumerate() {
            f[i] = unknown[k];
        }
        let (rho, j) = first_moments(&f);
        worst = worst
            .max((rho - rho_out).abs())
            .max((j[0] + 0.5 * force[0]).abs())
            .max((j[1] + 0.5 * force[1]).abs());
    }
    let pass = drift < OUTLET_DRIFT && worst < 1e-12;
    report(
        6,
        pass,
        &format!(
            "mass drift {:.3e}% over {OUTLET_STEPS} steps (< 0.1%); max moment residual {worst:.2e} over {OUTLET_SAMPLES} random nodes (< 1e-12)",
            100.0 * drift
        ),
    );
    assert!(pass, "drift {drift}, residual {worst}");
}

fn first_moments(f: &[f64; Q19]) -> (f64, [f64; 3]) {
    let desc = d3q19_descriptor().unwrap();
    let mut rho = 0.0;
    let mut j = [0.0; 3];
    for (i, c) in desc.velocities().iter().enumerate() {
        rho += f[i];
        for a in 0..3 {
            j[a] += c[a] as f64 * f[i];
        }
    }
    (rho, j)
}

// Wetting.

const WETTING_STEPS: u64 = 5000;
const WETTING_ANGLE: f64 = 120.0;
const WETTING_TOLERANCE_DEG: f64 = 5.0;

#[test]
fn criterion_07_contact_angle() {
    let _g = serial();
    let mut c = CaseConfig::sessile_droplet();
    c.faces.z_minus = FaceConfig::wall(Some(0.86), WETTING_ANGLE);
    c.faces.z_plus = FaceConfig::wall(Some(0.86), 90.0);
    c.grid = GridConfig { nx: 60, ny: 60, nz: 40 };
    c.init = InitConfig::SessileDroplet { diameter: 30.0, width: 5.0, t_sat: 0.86, initial_angle: None };
    c.thermal.backend = ThermalBackend::None;
    c.run.threads = Some(1);
    let mut sim = Simulation::new(c).unwrap();
    sim.advance(WETTING_STEPS).unwrap();
    let threshold = sim.phase_threshold();
    let (angle, fit) = sessile_contact_angle(&sim.fields.grid, &sim.fields.rho, threshold, 4.0).unwrap();
    let pass = (angle - WETTING_ANGLE).abs() <= WETTING_TOLERANCE_DEG;
    report(
        7,
        pass,
        &format!(
            "measured {angle:.2} deg vs {WETTING_ANGLE:.0} +/- {WETTING_TOLERANCE_DEG:.0} after {WETTING_STEPS} steps (cap radius {:.2})",
            fit.radius
        ),
    );
    assert!(pass, "angle {angle}");
}

// Heated sessile droplet.

const SESSILE_STEPS: u64 = 12_000;
const SESSILE_DIAMETER: f64 = 24.0;
const SESSILE_REFERENCE_DIAMETER: f64 = 20.0;
const SESSILE_TRANSIENT_STEPS: u64 = 2000;
const SESSILE_TOLERANCE: f64 = 0.10;

fn sessile(backend: ThermalBackend) -> CaseConfig {
    let mut c = CaseConfig::sessile_droplet();
    c.grid = GridConfig { nx: 60, ny: 60, nz: 40 };
    c.init = InitConfig::SessileDroplet {
        diameter: SESSILE_DIAMETER,
        width: 5.0,
        t_sat: 0.86,
        initial_angle: None,
    };
    c.thermal.backend = backend;
    c.run.steps = SESSILE_STEPS;
    c.run.diagnostics_every = 200;
    c.run.threads = Some(1);
    c
}

/// Linear interpolation of `r*(t*)` on an increasing `t*` grid.
fn interpolate(curve: &[(f64, f64)], t: f64) -> Option<f64> {
    let k = curve.windows(2).position(|w| w[0].0 <= t && t <= w[1].0)?;
    let ((t0, r0), (t1, r1)) = (curve[k], curve[k + 1]);
    Some(r0 + (r1 - r0) * (t - t0) / (t1 - t0))
}

#[test]
fn criterion_08_sessile_evaporation() {
    let _g = serial();
    let mut curves = Vec::new();
    for backend in [ThermalBackend::Lbm, ThermalBackend::Fdm] {
        let mut sim = Simulation::new(sessile(backend)).unwrap();
        let diag = sim.run(None).unwrap();
        let curve = normalize_at_diameter(&diag.times(), &diag.diameters(), &diag.contact_radii(), SESSILE_REFERENCE_DIAMETER);
        let post: Option<Vec<(f64, f64)>> = curve.map(|c| {
            diag.records.iter().zip(c).filter(|(r, _)| r.step >= SESSILE_TRANSIENT_STEPS).map(|(_, p)| p).collect()
        });
        curves.push(post);
    }
    let (Some(lb), Some(fdm)) = (&curves[0], &curves[1]) else {
        report(8, false, &format!("droplet never reached D = {SESSILE_REFERENCE_DIAMETER} within {SESSILE_STEPS} steps"));
        panic!("reference diameter not reached");
    };
    let monotone = |c: &[(f64, f64)]| c.windows(2).all(|w| w[1].1 <= w[0].1) && c.last().unwrap().1 < c[0].1;
    let compared: Vec<f64> = lb
        .iter()
        .filter_map(|&(t, r)| interpolate(fdm, t).map(|rf| (r - rf).abs() / rf))
        .collect();
    let worst = compared.iter().cloned().fold(0.0, f64::max);
    let pass = monotone(lb) && monotone(fdm) && compared.len() > 10 && worst < SESSILE_TOLERANCE;
    report(
        8,
        pass,
        &format!(
            "r* shrinks monotonically after step {SESSILE_TRANSIENT_STEPS}: lattice {} finite-difference {}; \
             max rel diff of r*(t*) {:.2}% over {} points (< {:.0}%)",
            monotone(lb),
            monotone(fdm),
            100.0 * worst,
            compared.len(),
            100.0 * SESSILE_TOLERANCE
        ),
    );
    assert!(pass);
}

// Performance ordering.

const PERF_STEPS: u64 = 1000;
const PERF_CHUNK: u64 = 100;

#[test]
fn criterion_09_correction_cost_ordering() {
    let _g = serial();
    let config = droplet_64(ThermalBackend::Lbm);
    let report_ = performance_probe(&config, PERF_STEPS, PERF_CHUNK).unwrap();
    let pass = report_.ordering_holds() && report_.deterministic;
    report(
        9,
        pass,
        &format!(
            "64^3 over {PERF_STEPS} steps: theta 0 {:.2} ms/step <= theta 1 {:.2} ms/step",
            1e3 * report_.plain.mean,
            1e3 * report_.corrected.mean
        ),
    );
    assert!(pass, "{report_:?}");
}

// Unit invariants.

const INVARIANT_SAMPLES: usize = 2000;
const INVARIANT_BUDGET_S: f64 = 10.0;

fn identity_error(desc: &LatticeDescriptor) -> f64 {
    let q = desc.q();
    let (m, inv) = (desc.matrix(), desc.inverse());
    let mut worst: f64 = 0.0;
    for r in 0..q {
        for c in 0..q {
            let v: f64 = (0..q).map(|k| m[r * q + k] * inv[k * q + c]).sum();
            worst = worst.max((v - if r == c { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

fn isotropy_error(desc: &LatticeDescriptor, fourth_order: bool) -> f64 {
    let w = desc.weights();
    let cs2 = desc.cs2();
    let cs = desc.velocities();
    let mut worst = (w.iter().sum::<f64>() - 1.0).abs();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for a in 0..3 {
        let first: f64 = (0..desc.q()).map(|i| w[i] * cs[i][a] as f64).sum();
        worst = worst.max(first.abs());
        for b in 0..3 {
            let second: f64 = (0..desc.q()).map(|i| w[i] * (cs[i][a] * cs[i][b]) as f64).sum();
            worst = worst.max((second - cs2 * delta(a, b)).abs());
            for c in 0..3 {
                let third: f64 = (0..desc.q()).map(|i| w[i] * (cs[i][a] * cs[i][b] * cs[i][c]) as f64).sum();
                worst = worst.max(third.abs());
                if !fourth_order {
                    continue;
                }
                for d in 0..3 {
                    let fourth: f64 =
                        (0..desc.q()).map(|i| w[i] * (cs[i][a] * cs[i][b] * cs[i][c] * cs[i][d]) as f64).sum();
                    let expect = cs2 * cs2 * (delta(a, b) * delta(c, d) + delta(a, c) * delta(b, d) + delta(a, d) * delta(b, c));
                    worst = worst.max((fourth - expect).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn criterion_10_unit_invariants() {
    let _g = serial();
    let start = Instant::now();
    let d19 = d3q19_descriptor().unwrap();
    let d7 = d3q7_descriptor(DEFAULT_REST_WEIGHT).unwrap();
    let mut checks: Vec<(&str, f64)> = vec![
        ("M M^-1 (D3Q19)", identity_error(&d19)),
        ("M M^-1 (D3Q7)", identity_error(&d7)),
        ("isotropy (D3Q19)", isotropy_error(&d19, true)),
        ("isotropy (D3Q7)", isotropy_error(&d7, false)),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let relax = FlowRelaxation::default();
    let (mut edm, mut bookkeeping, mut bounce, mut fixed_flow, mut fixed_thermal) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let normals = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
    for _ in 0..INVARIANT_SAMPLES {
        let rho = rng.gen_range(0.1..8.0);
        let u: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        let force: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        let f: [f64; Q19] = std::array::from_fn(|_| rng.gen_range(0.01..0.5));

        let (m0, m1) = first_moments(&edm_forcing_shift(rho, u, force).unwrap());
        edm = edm.max(m0.abs()).max((0..3).map(|a| (m1[a] - force[a]).abs()).fold(0.0, f64::max));

        let post = collide_flow(&FlowNodeState::from_populations(f, force).unwrap(), &relax);
        let ((r0, j0), (r1, j1)) = (first_moments(&f), first_moments(&post));
        bookkeeping = bookkeeping.max((r1 - r0).abs());
        for a in 0..3 {
            bookkeeping = bookkeeping.max((j1[a] - j0[a] - force[a]).abs());
        }

        for n in normals {
            let mut reflected = [0.0; Q19];
            for (i, v) in bounce_back_wall(&f, n) {
                reflected[i] = v;
            }
            for (i, v) in bounce_back_wall(&reflected, [-n[0], -n[1], -n[2]]) {
                bounce = bounce.max((v - f[i]).abs());
            }
        }

        let feq = equilibrium_f(rho, u);
        let post = collide_flow(&FlowNodeState::from_populations(feq, [0.0; 3]).unwrap(), &relax);
        fixed_flow = fixed_flow.max(max_abs_diff(&post, &feq) / rho);

        let t = rng.gen_range(0.05..0.12);
        let geq = equilibrium_g(t, &d7);
        let node = ThermalNodeState {
            g: geq,
            t,
            rho_cv: rng.gen_range(0.5..40.0),
            forcing: 0.0,
            correction: false,
            t_hist: None,
        };
        let lambda = rng.gen_range(0.05..0.5);
        let rates = ThermalRelaxation::from_conductivity(lambda, d7.cs2()).unwrap();
        let post: [f64; Q7] = collide_thermal(&node, &rates, &d7);
        fixed_thermal = fixed_thermal.max(max_abs_diff(&post, &geq));
    }
    checks.extend([
        ("forcing shift moments", edm),
        ("collision mass/momentum", bookkeeping),
        ("bounce-back involution", bounce),
        ("flow equilibrium fixed point", fixed_flow),
        ("thermal equilibrium fixed point", fixed_thermal),
    ]);
    let seconds = start.elapsed().as_secs_f64();
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let failed: Vec<&str> = checks.iter().filter(|c| !(c.1 <= 1e-10)).map(|c| c.0).collect();
    let pass = failed.is_empty() && seconds < INVARIANT_BUDGET_S;
    report(
        10,
        pass,
        &format!(
            "{} invariants, max residual {worst:.2e} (<= 1e-10), failing {failed:?}, {seconds:.2} s (< {INVARIANT_BUDGET_S:.0} s)",
            checks.len()
        ),
    );
    assert!(pass);
}
