//! Fixtures shared by the kernel benchmarks.

use thermolbm::config::{CaseConfig, GridConfig, InitConfig, ThermalBackend};
use thermolbm::Simulation;

/// Periodic droplet case on an `n³` grid with the given thermal backend and correction switch.
pub fn droplet_case(n: usize, backend: ThermalBackend, correction: u8) -> CaseConfig {
    let mut c = CaseConfig::droplet_evaporation();
    c.grid = GridConfig { nx: n, ny: n, nz: n };
    let radius = n as f64 / 4.0;
    c.init = InitConfig::Droplet {
        radius,
        width: (radius / 3.0).min(5.0),
        t_sat: 0.86,
        t_gas: 1.0,
    };
    c.thermal.backend = backend;
    c.thermal.correction = correction;
    c.run.threads = Some(1);
    c
}

/// A simulation of [`droplet_case`] advanced past the initial transient.
pub fn warmed_up(n: usize, backend: ThermalBackend, correction: u8) -> Simulation {
    let mut sim = Simulation::new(droplet_case(n, backend, correction)).expect("valid case");
    sim.advance(5).expect("stable start");
    sim
}
