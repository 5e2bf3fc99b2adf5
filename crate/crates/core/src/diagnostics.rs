//! Measurements on density and temperature fields, and fits on their time series.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Equivalent diameter of the liquid region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterMeasurement {
    pub diameter: f64,
    pub cells: usize,
    /// Set when no node reaches the threshold.
    pub empty: bool,
}

/// `D = (6V/π)^{1/3}` with `V` the number of nodes at or above `threshold`.
pub fn droplet_diameter(rho: &[f64], threshold: f64) -> DiameterMeasurement {
    let cells = rho.iter().filter(|&&r| r >= threshold).count();
    DiameterMeasurement {
        diameter: (6.0 * cells as f64 / std::f64::consts::PI).cbrt(),
        cells,
        empty: cells == 0,
    }
}

/// Equivalent radius `sqrt(A/π)` of the thresholded disk in layer `z`.
pub fn contact_radius(grid: &Grid, rho: &[f64], threshold: f64, z: usize) -> f64 {
    let start = grid.index(0, 0, z);
    let area = rho[start..start + grid.nx * grid.ny].iter().filter(|&&r| r >= threshold).count();
    (area as f64 / std::f64::consts::PI).sqrt()
}

/// Sphere fitted to a set of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: [f64; 3],
    pub radius: f64,
    pub points: usize,
}

impl SphereFit {
    /// Angle in degrees, measured inside the liquid, at which the sphere meets the
    /// plane `z = plane`.
    pub fn contact_angle_deg(&self, plane: f64) -> f64 {
        let h = self.center[2] - plane;
        (-h / self.radius).clamp(-1.0, 1.0).acos().to_degrees()
    }
}

/// Algebraic least-squares sphere `|x|² + D·x + E·y + F·z + G = 0`.
pub fn fit_sphere(points: &[[f64; 3]]) -> Result<SphereFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("sphere fit needs 4 points, got {}", points.len())));
    }
    let mut ata = [[0.0; 4]; 4];
    let mut atb = [0.0; 4];
    for p in points {
        let row = [p[0], p[1], p[2], 1.0];
        let rhs = -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let s = solve4(ata, atb)?;
    let center = [-s[0] / 2.0, -s[1] / 2.0, -s[2] / 2.0];
    let r2 = center[0] * center[0] + center[1] * center[1] + center[2] * center[2] - s[3];
    if !(r2 > 0.0) {
        return Err(Error::InvalidParameter("degenerate sphere fit".into()));
    }
    Ok(SphereFit {
        center,
        radius: r2.sqrt(),
        points: points.len(),
    })
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Result<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::SingularMatrix { column: col, pivot: a[pivot][col] });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let k = a[row][col] / a[col][col];
            for c in col..4 {
                a[row][c] -= k * a[col][c];
            }
            b[row] -= k * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for c in row + 1..4 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Points where `ρ` crosses `threshold` along every grid line in x, y and z, by linear
/// interpolation. Lines are not wrapped across periodic faces. Only points with
/// `z ≥ z_min` are kept.
pub fn isosurface_points(grid: &Grid, rho: &[f64], threshold: f64, z_min: f64) -> Vec<[f64; 3]> {
    let dims = grid.dims();
    let mut out = Vec::new();
    for n in 0..grid.len() {
        let xyz = grid.coords(n);
        for axis in 0..3 {
            if xyz[axis] + 1 >= dims[axis] {
                continue;
            }
            let mut next = xyz;
            next[axis] += 1;
            let (a, b) = (rho[n], rho[grid.index(next[0], next[1], next[2])]);
            if (a - threshold) * (b - threshold) < 0.0 {
                let s = (threshold - a) / (b - a);
                let mut p = [xyz[0] as f64, xyz[1] as f64, xyz[2] as f64];
                p[axis] += s;
                if p[2] >= z_min {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Contact angle of a sessile droplet on the `z = 0` plane from a sphere fit to the
/// threshold isosurface above `z_min`.
pub fn sessile_contact_angle(grid: &Grid, rho: &[f64], threshold: f64, z_min: f64) -> Result<(f64, SphereFit)> {
    let points = isosurface_points(grid, rho, threshold, z_min);
    let fit = fit_sphere(&points)?;
    Ok((fit.contact_angle_deg(0.0), fit))
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("linear fit needs two or more paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("linear fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - (intercept + slope * a)).powi(2)).sum();
    let max_abs_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).abs())
        .fold(0.0, f64::max);
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        max_abs_residual,
    })
}

/// Piecewise-linear temperature profile across a flat interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabProfile {
    /// First liquid node along x.
    pub interface: usize,
    pub vapor: LinearFit,
    pub liquid: LinearFit,
    /// `|dT/dx|_vapor / |dT/dx|_liquid`.
    pub slope_ratio: f64,
}

/// Fit straight lines to the vapor (`x < interface`) and liquid parts of a 1D profile,
/// skipping `skip_interface` nodes on each side of the interface and `skip_wall` nodes
/// at each end.
pub fn two_segment_fit(rho: &[f64], t: &[f64], threshold: f64, skip_interface: usize, skip_wall: usize) -> Result<SlabProfile> {
    let interface = rho
        .iter()
        .position(|&r| r >= threshold)
        .ok_or_else(|| Error::InvalidParameter("profile has no liquid".into()))?;
    let n = rho.len();
    let v_lo = skip_wall;
    let v_hi = interface.saturating_sub(skip_interface);
    let l_lo = (interface + skip_interface).min(n);
    let l_hi = n.saturating_sub(skip_wall);
    if v_hi < v_lo + 2 || l_hi < l_lo + 2 {
        return Err(Error::InvalidParameter(format!("interface at {interface} leaves too few nodes")));
    }
    let xs = |a: usize, b: usize| (a..b).map(|i| i as f64).collect::<Vec<_>>();
    let vapor = linear_fit(&xs(v_lo, v_hi), &t[v_lo..v_hi])?;
    let liquid = linear_fit(&xs(l_lo, l_hi), &t[l_lo..l_hi])?;
    Ok(SlabProfile {
        interface,
        vapor,
        liquid,
        slope_ratio: vapor.slope.abs() / liquid.slope.abs(),
    })
}

/// Fit of `(D/D_0)² = 1 − K t` after discarding the leading `discard` fraction of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2Fit {
    pub k: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub fn d2_law_fit(times: &[f64], diameters: &[f64], discard: f64) -> Result<D2Fit> {
    if times.len() != diameters.len() || times.is_empty() {
        return Err(Error::InvalidParameter("d2 fit needs matching, non-empty series".into()));
    }
    let d0 = diameters[0];
    if !(d0 > 0.0) {
        return Err(Error::InvalidParameter("initial diameter must be positive".into()));
    }
    let start = (discard * times.len() as f64).floor() as usize;
    let x = &times[start..];
    let y: Vec<f64> = diameters[start..].iter().map(|d| (d / d0).powi(2)).collect();
    let fit = linear_fit(x, &y)?;
    Ok(D2Fit {
        k: -fit.slope,
        r_squared: fit.r_squared,
        samples: x.len(),
    })
}

/// `Ja = c_p (T_w − T_sat) / h_lv`, with `c_p` supplied by the caller.
pub fn jakob_number(cp: f64, t_wall: f64, t_sat: f64, latent_heat: f64) -> f64 {
    cp * (t_wall - t_sat) / latent_heat
}

/// Normalized `(t*, r*)` series, scaled by the time and contact radius at which the
/// equivalent diameter first falls to `d_ref`. Returns `None` if it never does.
pub fn normalize_at_diameter(times: &[f64], diameters: &[f64], radii: &[f64], d_ref: f64) -> Option<Vec<(f64, f64)>> {
    let k = diameters.iter().position(|&d| d <= d_ref)?;
    let (t0, r0) = (times[k], radii[k]);
    if t0 <= 0.0 || r0 <= 0.0 {
        return None;
    }
    Some(times.iter().zip(radii).map(|(t, r)| (t / t0, r / r0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_of_a_rasterized_ball() {
        let grid = Grid::periodic([40, 40, 40]);
        let rho: Vec<f64> = (0..grid.len())
            .map(|n| {
                let [x, y, z] = grid.coords(n).map(|c| c as f64 - 19.5);
                if (x * x + y * y + z * z).sqrt() <= 10.0 {
                    6.0
                } else {
                    0.4
                }
            })
            .collect();
        let d = droplet_diameter(&rho, 3.0);
        assert!((d.diameter - 20.0).abs() < 1.0, "{}", d.diameter);
        assert!(!d.empty);
        let vapor = vec![0.4; grid.len()];
        let d = droplet_diameter(&vapor, 3.0);
        assert!(d.empty && d.diameter == 0.0);
        let liquid = vec![6.0; 1000];
        let d = droplet_diameter(&liquid, 0.4 + 1e-9);
        assert!((d.diameter - (6000.0 / std::f64::consts::PI).cbrt()).abs() < 1e-12);
    }

    #[test]
    fn sphere_fit_recovers_cap_angle() {
        for angle in [60.0f64, 90.0, 120.0] {
            let r = 20.0;
            let zc = -r * angle.to_radians().cos();
            let mut points = Vec::new();
            for i in 0..40 {
                for j in 0..20 {
                    let phi = i as f64 * 0.157;
                    let th = j as f64 * 0.15;
                    let p = [5.0 + r * th.sin() * phi.cos(), -3.0 + r * th.sin() * phi.sin(), zc + r * th.cos()];
                    if p[2] >= 0.0 {
                        points.push(p);
                    }
                }
            }
            let fit = fit_sphere(&points).unwrap();
            assert!((fit.radius - r).abs() < 1e-9);
            assert!((fit.contact_angle_deg(0.0) - angle).abs() < 1e-6);
        }
        assert!(fit_sphere(&[[0.0; 3]; 3]).is_err());
    }

    #[test]
    fn two_segment_fit_on_exact_profile() {
        let n = 100;
        let rho: Vec<f64> = (0..n).map(|i| if i < 50 { 0.4 } else { 6.5 }).collect();
        let t: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64;
                if x < 50.0 {
                    1.0 - 0.002 * x
                } else {
                    0.9 - 0.001 * (x - 50.0)
                }
            })
            .collect();
        let p = two_segment_fit(&rho, &t, 3.0, 3, 2).unwrap();
        assert_eq!(p.interface, 50);
        assert!((p.slope_ratio - 2.0).abs() < 1e-9);
        assert!(p.vapor.max_abs_residual < 1e-12);
    }

    #[test]
    fn d2_fit_on_linear_decay() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 10.0).collect();
        let d: Vec<f64> = times.iter().map(|t| 30.0 * (1.0 - 2e-4 * t).sqrt()).collect();
        let fit = d2_law_fit(&times, &d, 0.1).unwrap();
        assert!((fit.k - 2e-4).abs() < 1e-12);
        assert!(fit.r_squared > 0.999_999);
        assert_eq!(fit.samples, 90);
    }

    #[test]
    fn jakob_number_for_heated_wall() {
        let tc = 0.109383006111;
        let ja = jakob_number(5.0, 0.8931 * tc, 0.86 * tc, 0.5032);
        assert!((ja - 0.036).abs() < 5e-4, "{ja}");
    }

    #[test]
    fn contact_radius_of_a_disk() {
        let grid = Grid::periodic([30, 30, 3]);
        let rho: Vec<f64> = (0..grid.len())
            .map(|n| {
                let [x, y, _] = grid.coords(n).map(|c| c as f64 - 14.5);
                if x * x + y * y <= 64.0 {
                    6.0
                } else {
                    0.4
                }
            })
            .collect();
        assert!((contact_radius(&grid, &rho, 3.0, 1) - 8.0).abs() < 0.5);
    }

    #[test]
    fn normalization_reference() {
        let t = [0.0, 10.0, 20.0, 30.0];
        let d = [30.0, 25.0, 20.0, 15.0];
        let r = [12.0, 10.0, 8.0, 6.0];
        let s = normalize_at_diameter(&t, &d, &r, 20.0).unwrap();
        assert_eq!(s[2], (1.0, 1.0));
        assert_eq!(s[3], (1.5, 0.75));
        assert!(normalize_at_diameter(&t, &d, &r, 10.0).is_none());
    }
}
