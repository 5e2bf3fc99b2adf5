//! Peng-Robinson equation of state, pseudopotential mapping and Maxwell coexistence.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Flow-lattice squared sound speed used inside the pseudopotential.
const CS2: f64 = 1.0 / 3.0;

const OMEGA_A: f64 = 0.45724;
const OMEGA_B: f64 = 0.0778;

/// Default latent heat used for the Jakob number of the heated-wall case.
pub const DEFAULT_LATENT_HEAT: f64 = 0.5032;

/// Default interaction strength of the pseudopotential force.
pub const DEFAULT_INTERACTION: f64 = -1.0;

/// Peng-Robinson constants in lattice units together with the derived critical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosParams {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub omega: f64,
    kappa: f64,
    tc: f64,
    pc: f64,
    rho_c: f64,
}

/// Critical temperature, pressure and density of an [`EosParams`] set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub t: f64,
    pub p: f64,
    pub rho: f64,
}

/// Saturated liquid and vapor state at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoexistencePoint {
    pub t: f64,
    pub rho_liquid: f64,
    pub rho_vapor: f64,
    pub p_sat: f64,
}

impl EosParams {
    pub fn new(a: f64, b: f64, r: f64, omega: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && r > 0.0) || !(0.0..1.0).contains(&omega) {
            return Err(Error::InvalidParameter(format!(
                "Peng-Robinson constants need a, b, R > 0 and 0 <= omega < 1 (a={a}, b={b}, R={r}, omega={omega})"
            )));
        }
        let kappa = 0.37464 + 1.54226 * omega - 0.26992 * omega * omega;
        let tc = OMEGA_B * a / (OMEGA_A * b * r);
        let pc = OMEGA_B * r * tc / b;
        let mut eos = Self {
            a,
            b,
            r,
            omega,
            kappa,
            tc,
            pc,
            rho_c: 0.0,
        };
        eos.rho_c = eos.inflection_density(tc)?;
        Ok(eos)
    }

    /// `a = 3/49`, `b = 2/21`, `R = 1`, `omega = 0.344`.
    pub fn reference() -> Self {
        Self::new(3.0 / 49.0, 2.0 / 21.0, 1.0, 0.344).expect("reference constants are valid")
    }

    pub fn tc(&self) -> f64 {
        self.tc
    }

    pub fn pc(&self) -> f64 {
        self.pc
    }

    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Upper bound of the density domain (`1/b`).
    pub fn max_density(&self) -> f64 {
        1.0 / self.b
    }

    #[inline]
    pub fn xi(&self, t: f64) -> f64 {
        let s = 1.0 + self.kappa * (1.0 - (t / self.tc).sqrt());
        s * s
    }

    #[inline]
    pub fn dxi_dt(&self, t: f64) -> f64 {
        let root = (t / self.tc).sqrt();
        -self.kappa * (1.0 + self.kappa * (1.0 - root)) / (root * self.tc)
    }

    #[inline]
    fn attraction_denominator(&self, rho: f64) -> f64 {
        1.0 + 2.0 * self.b * rho - self.b * self.b * rho * rho
    }

    /// Pressure without domain checks; the hot loops validate through the pseudopotential.
    #[inline]
    pub fn pressure_unchecked(&self, rho: f64, t: f64) -> f64 {
        rho * self.r * t / (1.0 - self.b * rho) - self.a * self.xi(t) * rho * rho / self.attraction_denominator(rho)
    }

    #[inline]
    pub fn dp_dt_unchecked(&self, rho: f64, t: f64) -> f64 {
        rho * self.r / (1.0 - self.b * rho) - self.a * self.dxi_dt(t) * rho * rho / self.attraction_denominator(rho)
    }

    fn check_domain(&self, rho: f64, t: f64) -> Result<()> {
        if !(rho >= 0.0 && rho < self.max_density()) {
            return Err(Error::EosDomain {
                rho,
                limit: self.max_density(),
            });
        }
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature must be positive, got {t}")));
        }
        Ok(())
    }

    /// `∂p/∂ρ` at fixed temperature.
    pub fn dp_drho(&self, rho: f64, t: f64) -> f64 {
        let den = self.attraction_denominator(rho);
        self.r * t / (1.0 - self.b * rho).powi(2) - self.a * self.xi(t) * 2.0 * rho * (1.0 + self.b * rho) / (den * den)
    }

    /// `∂²p/∂ρ²` at fixed temperature.
    pub fn d2p_drho2(&self, rho: f64, t: f64) -> f64 {
        let b = self.b;
        let den = self.attraction_denominator(rho);
        let dden = 2.0 * b - 2.0 * b * b * rho;
        2.0 * b * self.r * t / (1.0 - b * rho).powi(3)
            - self.a * self.xi(t) * ((2.0 + 4.0 * b * rho) * den - 4.0 * rho * (1.0 + b * rho) * dden) / den.powi(3)
    }

    /// Density where `∂²p/∂ρ² = 0` on the given isotherm (the critical density at `T_c`).
    fn inflection_density(&self, t: f64) -> Result<f64> {
        // d2p changes sign once between the spinodal region and the covolume wall.
        let hi_bound = 0.95 * self.max_density();
        let n = 2000;
        let mut lo = None;
        let mut prev = self.d2p_drho2(1e-9, t);
        for k in 1..=n {
            let rho = hi_bound * k as f64 / n as f64;
            let cur = self.d2p_drho2(rho, t);
            if prev < 0.0 && cur >= 0.0 || prev > 0.0 && cur <= 0.0 {
                lo = Some((hi_bound * (k - 1) as f64 / n as f64, rho));
                break;
            }
            prev = cur;
        }
        let (a, b) = lo.ok_or(Error::NoConvergence {
            what: "critical inflection search",
            iterations: n,
        })?;
        bisect(|r| self.d2p_drho2(r, t), a.max(1e-9), b, 1e-15, 200, "critical inflection")
    }

    /// Interior local maximum and minimum densities of a subcritical isotherm.
    pub fn spinodal(&self, t: f64) -> Option<(f64, f64)> {
        let n = 4000;
        let top = self.max_density() * (1.0 - 1e-9);
        let mut roots = Vec::with_capacity(2);
        let mut prev_rho = 1e-12;
        let mut prev = self.dp_drho(prev_rho, t);
        for k in 1..=n {
            let rho = top * k as f64 / n as f64;
            let cur = self.dp_drho(rho, t);
            if prev.signum() != cur.signum() && cur != 0.0 {
                let root = bisect(|r| self.dp_drho(r, t), prev_rho, rho, 1e-15, 200, "spinodal").ok()?;
                roots.push(root);
            }
            prev = cur;
            prev_rho = rho;
        }
        (roots.len() == 2).then(|| (roots[0], roots[1]))
    }
}

/// `p_EOS(ρ, T)`.
pub fn pr_pressure(rho: f64, t: f64, eos: &EosParams) -> Result<f64> {
    eos.check_domain(rho, t)?;
    Ok(eos.pressure_unchecked(rho, t))
}

/// `(∂p/∂T)_ρ`, including the temperature dependence of the attraction function.
pub fn pr_dp_dt(rho: f64, t: f64, eos: &EosParams) -> Result<f64> {
    eos.check_domain(rho, t)?;
    Ok(eos.dp_dt_unchecked(rho, t))
}

/// Effective mass `ψ = sqrt(2 (p_EOS − ρ c_s²) / G)` with unit lattice spacing and time step.
#[inline]
pub fn pseudopotential(rho: f64, t: f64, g: f64, eos: &EosParams) -> Result<f64> {
    if !(rho >= 0.0 && rho < eos.max_density()) {
        return Err(Error::EosDomain {
            rho,
            limit: eos.max_density(),
        });
    }
    let radicand = 2.0 * (eos.pressure_unchecked(rho, t) - rho * CS2) / g;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { rho, t, radicand });
    }
    Ok(radicand.sqrt())
}

/// Critical temperature and pressure from the Peng-Robinson constants, and the
/// critical density from the inflection of the critical isotherm.
pub fn critical_point(eos: &EosParams) -> CriticalPoint {
    CriticalPoint {
        t: eos.tc,
        p: eos.pc,
        rho: eos.rho_c,
    }
}

/// Coexisting liquid and vapor densities by the equal-area rule in specific volume.
pub fn maxwell_coexistence(t: f64, eos: &EosParams) -> Result<CoexistencePoint> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be positive, got {t}")));
    }
    if t >= eos.tc {
        return Err(Error::NoPhaseSplit { t });
    }
    let (rho_max, rho_min) = eos.spinodal(t).ok_or(Error::NoPhaseSplit { t })?;
    let p_hi = eos.pressure_unchecked(rho_max, t);
    let p_lo = eos.pressure_unchecked(rho_min, t).max(0.0);
    equal_area(t, eos, rho_max, rho_min, p_lo, p_hi)
}

/// Same as [`maxwell_coexistence`] but with a caller-chosen pressure bracket inside the
/// spinodal pressure range.
pub fn maxwell_coexistence_bracketed(t: f64, eos: &EosParams, p_lo: f64, p_hi: f64) -> Result<CoexistencePoint> {
    let (rho_max, rho_min) = eos.spinodal(t).ok_or(Error::NoPhaseSplit { t })?;
    let lo = p_lo.max(eos.pressure_unchecked(rho_min, t)).max(0.0);
    let hi = p_hi.min(eos.pressure_unchecked(rho_max, t));
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty pressure bracket [{p_lo}, {p_hi}]")));
    }
    equal_area(t, eos, rho_max, rho_min, lo, hi)
}

fn equal_area(t: f64, eos: &EosParams, rho_max: f64, rho_min: f64, p_lo: f64, p_hi: f64) -> Result<CoexistencePoint> {
    let roots = |ps: f64| -> Result<(f64, f64)> {
        let vapor = bisect(|r| eos.pressure_unchecked(r, t) - ps, 0.0, rho_max, 1e-15, 300, "vapor branch")?;
        let top = eos.max_density() * (1.0 - 1e-12);
        let liquid = bisect(|r| eos.pressure_unchecked(r, t) - ps, rho_min, top, 1e-15, 300, "liquid branch")?;
        Ok((vapor, liquid))
    };
    // Signed area between the isotherm and the tie line in specific volume:
    // ∫_{v_l}^{v_v} (p − p_sat) dv = ∫_{ρ_v}^{ρ_l} (p − p_sat) / ρ² dρ, decreasing in p_sat.
    let area = |ps: f64| -> Result<f64> {
        let (rv, rl) = roots(ps)?;
        Ok(gauss_legendre(rv, rl, |r| (eos.pressure_unchecked(r, t) - ps) / (r * r)))
    };
    let mut lo = p_lo;
    let mut hi = p_hi;
    let max_iter = 200;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let a = area(mid)?;
        if a > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi.max(1e-300) || a == 0.0 {
            break;
        }
    }
    let p_sat = 0.5 * (lo + hi);
    let residual = area(p_sat)?;
    if !(residual.abs() < 1e-8) {
        return Err(Error::NoConvergence {
            what: "equal-area bisection",
            iterations: max_iter,
        });
    }
    let (rho_vapor, rho_liquid) = roots(p_sat)?;
    Ok(CoexistencePoint {
        t,
        rho_liquid,
        rho_vapor,
        p_sat,
    })
}

fn bisect(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
    what: &'static str,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoConvergence { what, iterations: 0 });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * (1.0 + mid.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

const QUADRATURE_POINTS: usize = 200;

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUADRATURE_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// 200-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = legendre_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}
