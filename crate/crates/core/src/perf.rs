//! Per-step wall-clock measurements for the correction-term variants and grid scaling.

use std::time::Instant;

use crate::config::{CaseConfig, GridConfig};
use crate::error::Result;
use crate::sim::Simulation;

/// Wall-clock statistics of one variant, in seconds per step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTiming {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub steps: u64,
}

impl StepTiming {
    fn from_chunks(chunks: &[(f64, u64)]) -> Self {
        let steps: u64 = chunks.iter().map(|c| c.1).sum();
        let total: f64 = chunks.iter().map(|c| c.0).sum();
        let mut per: Vec<f64> = chunks.iter().map(|(t, n)| t / *n as f64).collect();
        per.sort_by(f64::total_cmp);
        let median = if per.is_empty() { 0.0 } else { per[per.len() / 2] };
        Self {
            mean: if steps > 0 { total / steps as f64 } else { 0.0 },
            median,
            min: per.first().copied().unwrap_or(0.0),
            steps,
        }
    }
}

/// Timings of the plain scheme (`ϑ = 0`) and the corrected one (`ϑ = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PerfReport {
    pub plain: StepTiming,
    pub corrected: StepTiming,
    /// Whether the final fields of a repeated plain run matched bitwise.
    pub deterministic: bool,
}

impl PerfReport {
    /// `mean(ϑ = 0) ≤ mean(ϑ = 1)`.
    pub fn ordering_holds(&self) -> bool {
        self.plain.mean <= self.corrected.mean
    }
}

fn variant(config: &CaseConfig, correction: u8) -> CaseConfig {
    let mut c = config.clone();
    c.thermal.correction = correction;
    c
}

/// Run both variants of `config` for `n_steps` each, interleaved in chunks of `chunk`
/// steps so that slow drifts of the host affect both alike. A second plain run of the
/// first chunk checks determinism.
pub fn performance_probe(config: &CaseConfig, n_steps: u64, chunk: u64) -> Result<PerfReport> {
    let chunk = chunk.clamp(1, n_steps.max(1));
    let mut plain = Simulation::new(variant(config, 0))?;
    let mut corrected = Simulation::new(variant(config, 1))?;
    let mut replay = Simulation::new(variant(config, 0))?;
    replay.advance(chunk.min(n_steps))?;

    let (mut t0, mut t1) = (Vec::new(), Vec::new());
    let mut done = 0;
    let mut first = true;
    while done < n_steps {
        let n = chunk.min(n_steps - done);
        // Alternate which variant goes first within a chunk pair.
        let order: [bool; 2] = if (done / chunk) % 2 == 0 { [false, true] } else { [true, false] };
        for corrected_turn in order {
            let sim = if corrected_turn { &mut corrected } else { &mut plain };
            let start = Instant::now();
            sim.advance(n)?;
            let elapsed = start.elapsed().as_secs_f64();
            if corrected_turn { t1.push((elapsed, n)) } else { t0.push((elapsed, n)) }
        }
        if first {
            first = false;
            if plain.fields.f != replay.fields.f || plain.fields.temperature != replay.fields.temperature {
                return Ok(PerfReport {
                    plain: StepTiming::from_chunks(&t0),
                    corrected: StepTiming::from_chunks(&t1),
                    deterministic: false,
                });
            }
        }
        done += n;
    }
    Ok(PerfReport {
        plain: StepTiming::from_chunks(&t0),
        corrected: StepTiming::from_chunks(&t1),
        deterministic: true,
    })
}

/// Per-step time at the configured grid and at twice its extent along every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub base_cells: usize,
    pub base: StepTiming,
    pub doubled: StepTiming,
}

impl ScalingReport {
    /// Measured time ratio divided by the cell-count ratio; 1 for perfectly linear cost.
    pub fn linearity(&self) -> f64 {
        (self.doubled.median / self.base.median) / 8.0
    }
}

/// Compare per-step cost on the configured grid and on the grid doubled in each
/// dimension (eight times the cells), `n_steps` each, in chunks of `chunk`.
pub fn scaling_probe(config: &CaseConfig, n_steps: u64, chunk: u64) -> Result<ScalingReport> {
    let chunk = chunk.clamp(1, n_steps.max(1));
    let mut big_config = config.clone();
    big_config.grid = GridConfig {
        nx: 2 * config.grid.nx,
        ny: 2 * config.grid.ny,
        nz: 2 * config.grid.nz,
    };
    let mut small = Simulation::new(config.clone())?;
    let mut big = Simulation::new(big_config)?;
    let (mut ts, mut tb) = (Vec::new(), Vec::new());
    let mut done = 0;
    while done < n_steps {
        let n = chunk.min(n_steps - done);
        let start = Instant::now();
        small.advance(n)?;
        ts.push((start.elapsed().as_secs_f64(), n));
        let start = Instant::now();
        big.advance(n)?;
        tb.push((start.elapsed().as_secs_f64(), n));
        done += n;
    }
    Ok(ScalingReport {
        base_cells: small.fields.grid.len(),
        base: StepTiming::from_chunks(&ts),
        doubled: StepTiming::from_chunks(&tb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitConfig, ThermalBackend};

    fn small_case() -> CaseConfig {
        let mut c = CaseConfig::droplet_evaporation();
        c.grid = GridConfig { nx: 12, ny: 12, nz: 12 };
        c.init = InitConfig::Droplet { radius: 3.0, width: 2.0, t_sat: 0.86, t_gas: 0.9 };
        c.thermal.backend = ThermalBackend::Lbm;
        c.run.threads = Some(1);
        c
    }

    #[test]
    fn probe_reports_both_variants() {
        let r = performance_probe(&small_case(), 6, 2).unwrap();
        assert_eq!(r.plain.steps, 6);
        assert_eq!(r.corrected.steps, 6);
        assert!(r.deterministic);
        assert!(r.plain.mean > 0.0 && r.corrected.min > 0.0);
    }

    #[test]
    fn timing_statistics() {
        let t = StepTiming::from_chunks(&[(1.0, 10), (3.0, 10), (2.0, 10)]);
        assert!((t.mean - 0.2).abs() < 1e-15);
        assert!((t.median - 0.2).abs() < 1e-15);
        assert!((t.min - 0.1).abs() < 1e-15);
        assert_eq!(t.steps, 30);
    }
}
