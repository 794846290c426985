//! Direct integration of the excited-state amplitude
//!
//! ```text
//! dC1/dt = -(kappa/2 + i Delta) C1 + sqrt(kappa) f(t),   C1(T0) = 0
//! ```
//!
//! with a three-stage Radau IIA method (L-stable, order 5). Each grid cell
//! is integrated separately so the step never straddles a change of
//! interpolating polynomial; inside a cell the step adapts by comparing one
//! full step with two half steps.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::{require_normalized, DetectorDrive};
use crate::error::{Error, Result};
use crate::grids::{interpolate, ComplexEnvelope};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step, as a fraction of the grid spacing, before giving up.
    pub min_step_fraction: f64,
}

impl Default for LangevinOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            min_step_fraction: 1e-12,
        }
    }
}

struct Tableau {
    c: [f64; 3],
    a: Matrix3<f64>,
}

impl Tableau {
    fn radau_iia() -> Self {
        let s6 = 6f64.sqrt();
        Self {
            c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
            a: Matrix3::new(
                (88.0 - 7.0 * s6) / 360.0,
                (296.0 - 169.0 * s6) / 1800.0,
                (-2.0 + 3.0 * s6) / 225.0,
                (296.0 + 169.0 * s6) / 1800.0,
                (88.0 + 7.0 * s6) / 360.0,
                (-2.0 - 3.0 * s6) / 225.0,
                (16.0 - s6) / 36.0,
                (16.0 + s6) / 36.0,
                1.0 / 9.0,
            ),
        }
    }
}

/// Coefficients of `y' = a(t) y + s(t)`.
struct Coefficients<'a> {
    drive: &'a DetectorDrive,
    input: &'a ComplexEnvelope,
}

impl Coefficients<'_> {
    fn at(&self, t: f64) -> (Complex64, Complex64) {
        let grid = self.drive.grid();
        let kappa = interpolate(grid, self.drive.kappa(), t)
            .unwrap_or(0.0)
            .max(0.0);
        let delta = interpolate(grid, self.drive.delta(), t).unwrap_or(0.0);
        let a = Complex64::new(-0.5 * kappa, -delta);
        let s = self.input.value_at(t) * kappa.sqrt();
        (a, s)
    }
}

fn radau_step(
    tab: &Tableau,
    coef: &Coefficients,
    t: f64,
    y: Complex64,
    h: f64,
) -> Option<Complex64> {
    // Solve (I - h A diag(a)) Y = y 1 + h A s for the stage values Y.
    let mut a_diag = [Complex64::default(); 3];
    let mut s = Vector3::<Complex64>::zeros();
    for i in 0..3 {
        let (ai, si) = coef.at(t + tab.c[i] * h);
        a_diag[i] = ai;
        s[i] = si;
    }
    let mut m = Matrix3::<Complex64>::identity();
    let mut rhs = Vector3::from_element(y);
    for i in 0..3 {
        for j in 0..3 {
            let aij = Complex64::new(h * tab.a[(i, j)], 0.0);
            m[(i, j)] -= aij * a_diag[j];
            rhs[i] += aij * s[j];
        }
    }
    let stages = m.lu().solve(&rhs)?;
    // Stiffly accurate: the last stage is the step result.
    Some(stages[2])
}

/// Integrate the amplitude equation for a normalized input and return
/// `C_1(T)`.
pub fn integrate_langevin(
    drive: &DetectorDrive,
    input: &ComplexEnvelope,
    options: &LangevinOptions,
) -> Result<Complex64> {
    require_normalized(input)?;
    let tab = Tableau::radau_iia();
    let coef = Coefficients { drive, input };
    let grid = drive.grid();
    let dt = grid.spacing();
    let h_min = options.min_step_fraction * dt;

    let mut y = Complex64::default();
    let mut h = dt;
    for cell in 0..grid.len() - 1 {
        let mut t = grid.coord(cell);
        let t_end = grid.coord(cell + 1);
        while t < t_end {
            let remaining = t_end - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let full = radau_step(&tab, &coef, t, y, step);
            let half = radau_step(&tab, &coef, t, y, 0.5 * step)
                .and_then(|mid| radau_step(&tab, &coef, t + 0.5 * step, mid, 0.5 * step));
            let (full, fine) = match (full, half) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (a, b),
                _ => return Err(Error::StepSizeUnderflow { t }),
            };
            let err = (fine - full).norm() / 31.0;
            let tol = options.atol + options.rtol * fine.norm().max(y.norm());
            let ratio = if err == 0.0 {
                4.0
            } else {
                (0.9 * (tol / err).powf(1.0 / 6.0)).clamp(0.2, 4.0)
            };
            if err <= tol {
                y = fine;
                t = if last { t_end } else { t + step };
                h = (step * ratio).min(dt);
            } else {
                h = step * ratio;
                if h < h_min {
                    return Err(Error::StepSizeUnderflow { t });
                }
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::super::{
        click_amplitude, polynomial_drive, retrodict, OnTime, PolynomialDrive, PolynomialFamily,
    };
    use super::*;
    use crate::grids::Grid;

    fn gaussian(grid: Grid, center: f64, sigma: f64, omega: f64) -> ComplexEnvelope {
        ComplexEnvelope::from_fn(grid, |t| {
            let x = t - center;
            let a = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25)
                * (-(x * x) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(a, omega * t)
        })
        .unwrap()
    }

    #[test]
    fn constant_rate_against_closed_form() {
        // kappa constant, f a Gaussian: C1(T) = ∫ sqrt(k) e^{-k (T-t)/2} f(t) dt.
        let grid = Grid::time(-30.0, 0.0, 3001).unwrap();
        let n = grid.len();
        let drive = DetectorDrive::new(grid, vec![1.0; n], vec![0.0; n], OnTime::AlwaysOn).unwrap();
        let f = gaussian(grid, -8.0, 1.0, 0.0);
        let c = integrate_langevin(&drive, &f, &LangevinOptions::default()).unwrap();
        let mode = retrodict(&drive).unwrap();
        let q = click_amplitude(&mode, &f).unwrap();
        assert!((c - q).norm() < 1e-9, "{c} vs {q}");
    }

    #[test]
    fn matched_input_is_detected_with_weight() {
        let desc = PolynomialDrive {
            family: PolynomialFamily::TwoSided,
            order: 2,
            kappa0: 0.5,
            sigma: 1.0,
            t_on: Some(-3.0),
            t_detect: 0.0,
        };
        let drive = polynomial_drive(&desc, 2049).unwrap();
        let mode = retrodict(&drive).unwrap();
        let f = mode.normalized_state().unwrap();
        let c = integrate_langevin(&drive, &f, &LangevinOptions::default()).unwrap();
        assert!((c.norm_sqr() - mode.weight()).abs() < 1e-8);
    }

    #[test]
    fn detuned_drive_accumulates_phase() {
        let grid = Grid::time(-20.0, 0.0, 2001).unwrap();
        let n = grid.len();
        let delta: Vec<f64> = grid.coords().iter().map(|t| 0.3 * t.sin()).collect();
        let drive = DetectorDrive::new(grid, vec![2.0; n], delta, OnTime::AlwaysOn).unwrap();
        let f = gaussian(grid, -4.0, 0.7, 1.3);
        let c = integrate_langevin(&drive, &f, &LangevinOptions::default()).unwrap();
        let q = click_amplitude(&retrodict(&drive).unwrap(), &f).unwrap();
        assert!((c - q).norm() < 1e-8, "{c} vs {q}");
    }

    #[test]
    fn stiff_always_on_drive() {
        // kappa reaches ~1e3 / sigma at the grid start.
        let desc = PolynomialDrive {
            family: PolynomialFamily::OneSided,
            order: 3,
            kappa0: 1.0,
            sigma: 1.0,
            t_on: None,
            t_detect: 0.0,
        };
        let drive = polynomial_drive(&desc, 4096).unwrap();
        let f = gaussian(*drive.grid(), -1.0, 0.5, 0.0)
            .normalized()
            .unwrap();
        let c = integrate_langevin(&drive, &f, &LangevinOptions::default()).unwrap();
        let q = click_amplitude(&retrodict(&drive).unwrap(), &f).unwrap();
        assert!((c.norm_sqr() - q.norm_sqr()).abs() < 1e-8);
    }
}
