//! Inverse problem: the drive `(kappa, Delta)` whose retrodictive wavepacket
//! is a prescribed `Psi*(t) = A(t) e^{i phi(t)}`.
//!
//! ```text
//! kappa(t) = A^2(t) / (1 - ∫_t^T A^2),    Delta(t) = d phi / dt
//! ```
//!
//! The denominator equals the target norm outside `[t, T]`. It is assembled
//! from the mass before `t` plus the mass after `T`, both accumulated from
//! small quantities, so it stays accurate when `1 - W` is far below machine
//! epsilon relative to one.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::forward::{DetectorDrive, OnTime};
use crate::grids::{self, ComplexEnvelope, Domain, Grid};

/// Denominators below this are rejected.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Tolerance on the total norm of a target.
pub const TARGET_NORM_TOLERANCE: f64 = 1e-6;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// A target wavepacket sampled on a grid that extends past the check time.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetWavepacket {
    grid: Grid,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
    detuning: Option<Vec<f64>>,
    detection_index: usize,
    mass_before: f64,
    mass_after: f64,
}

impl TargetWavepacket {
    /// `mass_before` and `mass_after` are the parts of `∫ A^2` lying before
    /// the first and after the last grid node. Together with the sampled norm
    /// they must add up to one.
    pub fn new(
        grid: Grid,
        amplitude: Vec<f64>,
        phase: Vec<f64>,
        detection_time: f64,
        mass_before: f64,
        mass_after: f64,
    ) -> Result<Self> {
        if grid.domain() != Domain::Time {
            return Err(Error::GridMismatch("target needs a time grid".into()));
        }
        if amplitude.len() != grid.len() || phase.len() != grid.len() {
            return Err(Error::GridMismatch(
                "amplitude and phase must match the grid".into(),
            ));
        }
        for (i, (&a, &p)) in amplitude.iter().zip(&phase).enumerate() {
            if !a.is_finite() || !p.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if a < 0.0 {
                return Err(Error::invalid(format!("negative amplitude at index {i}")));
            }
        }
        let detection_index = grid.node_index(detection_time).ok_or_else(|| {
            Error::GridMismatch(format!(
                "detection time {detection_time} is not a grid node"
            ))
        })?;
        if detection_index == 0 {
            return Err(Error::invalid("detection time must follow the grid start"));
        }
        if !(mass_before >= 0.0 && mass_after >= 0.0) {
            return Err(Error::invalid("outside masses must be nonnegative"));
        }
        let sampled =
            grids::integrate(&grid, &amplitude.iter().map(|a| a * a).collect::<Vec<_>>())?;
        let total = sampled + mass_before + mass_after;
        if (total - 1.0).abs() > TARGET_NORM_TOLERANCE {
            return Err(Error::Unnormalized { norm_sqr: total });
        }
        Ok(Self {
            grid,
            amplitude,
            phase,
            detuning: None,
            detection_index,
            mass_before,
            mass_after,
        })
    }

    /// Use an explicit detuning profile instead of differentiating the phase.
    pub fn with_detuning(mut self, detuning: Vec<f64>) -> Result<Self> {
        if detuning.len() != self.grid.len() {
            return Err(Error::GridMismatch("detuning must match the grid".into()));
        }
        if let Some(i) = detuning.iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        self.detuning = Some(detuning);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn detection_time(&self) -> f64 {
        self.grid.coord(self.detection_index)
    }

    pub fn detection_index(&self) -> usize {
        self.detection_index
    }

    /// `Delta(t)` on the whole grid: the installed profile if any, else the
    /// derivative of the phase by central differences.
    pub fn detuning(&self) -> Vec<f64> {
        match &self.detuning {
            Some(d) => d.clone(),
            None => differentiate(&self.grid, &self.phase),
        }
    }

    /// The target as `Psi(t) = A e^{-i phi}` on the whole grid.
    pub fn envelope(&self) -> ComplexEnvelope {
        let samples = self
            .amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex64::from_polar(a, -p))
            .collect();
        ComplexEnvelope::new(self.grid, samples).expect("validated samples")
    }

    /// The part of the target up to `T`, which a click at `T` projects onto.
    pub fn truncated_envelope(&self) -> ComplexEnvelope {
        let grid = self
            .grid
            .slice(0, self.detection_index)
            .expect("detection index in range");
        let samples = self.envelope().into_samples()[..=self.detection_index].to_vec();
        ComplexEnvelope::new(grid, samples).expect("validated samples")
    }

    /// `1 - ∫_t^T A^2` at every node up to `T`.
    pub fn denominator(&self) -> Vec<f64> {
        let intensity: Vec<f64> = self.amplitude.iter().map(|a| a * a).collect();
        let head = grids::cumulative_integral(&self.grid, &intensity);
        let tail = grids::reverse_cumulative_integral(&self.grid, &intensity)[self.detection_index]
            + self.mass_after;
        head[..=self.detection_index]
            .iter()
            .map(|h| self.mass_before + h + tail)
            .collect()
    }

    /// Weight of the click element that projects onto this target at `T`.
    pub fn weight(&self) -> f64 {
        let intensity: Vec<f64> = self.amplitude.iter().map(|a| a * a).collect();
        self.mass_before + grids::cumulative_integral(&self.grid, &intensity)[self.detection_index]
    }
}

/// Second-order derivative with one-sided stencils at the ends.
fn differentiate(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let h = grid.spacing();
    if n < 3 {
        let slope = (values[n - 1] - values[0]) / (h * (n - 1).max(1) as f64);
        return vec![slope; n];
    }
    (0..n)
        .map(|i| match i {
            0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h),
            i if i == n - 1 => {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
            }
            i => (values[i + 1] - values[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Drive on `[grid start, T]` whose retrodictive wavepacket is the target.
/// The grid start stands in for `T_0 = -infinity`.
pub fn invert_to_drive(target: &TargetWavepacket) -> Result<DetectorDrive> {
    let den = target.denominator();
    let kappa: Vec<f64> = den
        .iter()
        .zip(&target.amplitude)
        .enumerate()
        .map(|(i, (&d, &a))| {
            if d < DENOMINATOR_FLOOR {
                Err(Error::DenominatorFloor {
                    t: target.grid.coord(i),
                    denominator: d,
                })
            } else {
                Ok(a * a / d)
            }
        })
        .collect::<Result<_>>()?;
    let mut delta = target.detuning();
    delta.truncate(target.detection_index + 1);
    let grid = target.grid.slice(0, target.detection_index)?;
    DetectorDrive::new(grid, kappa, delta, OnTime::AlwaysOn)
}

/// Deviation of a retrodicted mode from the target it was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripError {
    /// L2 distance between the amplitudes on `[grid start, T]`.
    pub amplitude_l2: f64,
    /// Largest phase deviation where the target amplitude exceeds the floor,
    /// after removing the global phase.
    pub phase_max: f64,
}

/// Compare `|Psi|` and `arg Psi` of a mode with the truncated target. The
/// phase is defined up to a constant, which is fixed through the overlap.
pub fn roundtrip_error(
    target: &TargetWavepacket,
    mode: &crate::forward::TriggerMode,
) -> Result<RoundtripError> {
    let want = target.truncated_envelope();
    if !want.grid().matches(mode.grid()) {
        return Err(Error::GridMismatch(
            "mode and target are sampled differently".into(),
        ));
    }
    let got = mode.psi();
    let overlap = want.inner(got)?;
    let align = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let diff: Vec<f64> = got
        .amplitude()
        .iter()
        .zip(want.amplitude())
        .map(|(a, b)| (a - b).powi(2))
        .collect();
    let amplitude_l2 = grids::integrate(want.grid(), &diff)?.sqrt();
    let floor = grids::AMPLITUDE_FLOOR * want.amplitude().into_iter().fold(0.0, f64::max);
    let phase_max = got
        .samples()
        .iter()
        .zip(want.samples())
        .filter(|(_, w)| w.norm() > floor)
        .map(|(g, w)| (g * align / w).arg().abs())
        .fold(0.0, f64::max);
    Ok(RoundtripError {
        amplitude_l2,
        phase_max,
    })
}

/// Largest violation of `kappa(t0 - t) = exp(∫_{t0-t}^{t0+t} kappa) kappa(t0 + t)`
/// over the nodes where both sides are sampled, relative to `max kappa`.
pub fn symmetry_check(drive: &DetectorDrive, t0: f64) -> Result<f64> {
    let grid = drive.grid();
    let centre = grid
        .node_index(t0)
        .ok_or_else(|| Error::GridMismatch(format!("t0 = {t0} is not a grid node")))?;
    let kappa = drive.kappa();
    let scale = kappa.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let running = grids::cumulative_integral(grid, kappa);
    let reach = centre.min(grid.len() - 1 - centre);
    let worst = (0..=reach)
        .map(|j| {
            let (lo, hi) = (centre - j, centre + j);
            let rhs = (running[hi] - running[lo]).exp() * kappa[hi];
            (kappa[lo] - rhs).abs() / scale
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Closed-form coupling for the Gaussian target of width `sigma` centred at
/// `t0` and checked at `t_detect`.
pub fn gaussian_coupling(sigma: f64, t0: f64, t_detect: f64, t: f64) -> f64 {
    let x = (t - t0) / sigma;
    let density = (-0.5 * x * x).exp() / ((2.0 * PI).sqrt() * sigma);
    density / (normal_cdf(x) + normal_cdf((t0 - t_detect) / sigma))
}

/// Closed-form weight `1/2 + erf((T - t0)/(sqrt(2) sigma))/2` of the Gaussian
/// target, returned as `(W, 1 - W)` to keep the small complement exact.
pub fn gaussian_weight(sigma: f64, t0: f64, t_detect: f64) -> (f64, f64) {
    let x = (t_detect - t0) / sigma;
    (normal_cdf(x), normal_cdf(-x))
}

/// Sampling of generated targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetGridOptions {
    /// Nodes per `sigma`.
    pub points_per_sigma: usize,
    /// Extent of the grid on either side of `t0`, in units of `sigma`.
    pub half_span_sigmas: f64,
}

impl Default for TargetGridOptions {
    fn default() -> Self {
        Self {
            points_per_sigma: 256,
            half_span_sigmas: 8.0,
        }
    }
}

impl TargetGridOptions {
    fn grid(&self, sigma: f64, t0: f64, t_detect: f64) -> Result<Grid> {
        if self.points_per_sigma == 0 || !(self.half_span_sigmas > 0.0) {
            return Err(Error::invalid("grid options must be positive"));
        }
        let half_span = (self.half_span_sigmas * sigma).max((t_detect - t0).abs() + sigma);
        Grid::time_centered(
            t0,
            half_span,
            t_detect,
            sigma / self.points_per_sigma as f64,
        )
    }
}

fn check_shape(sigma: f64, t0: f64, omega0: f64, t_detect: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !t0.is_finite() || !omega0.is_finite() || !t_detect.is_finite() {
        return Err(Error::invalid("t0, omega0 and T must be finite"));
    }
    Ok(())
}

/// Gaussian target `A = (2 pi sigma^2)^{-1/4} exp(-(t - t0)^2 / 4 sigma^2)`
/// with phase `phi = (omega0/2) t`.
pub fn gaussian_target(
    sigma: f64,
    t0: f64,
    omega0: f64,
    t_detect: f64,
    options: &TargetGridOptions,
) -> Result<TargetWavepacket> {
    check_shape(sigma, t0, omega0, t_detect)?;
    let grid = options.grid(sigma, t0, t_detect)?;
    let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
    let coords = grid.coords();
    let amplitude = coords
        .iter()
        .map(|t| {
            let x = t - t0;
            norm * (-(x * x) / (4.0 * sigma * sigma)).exp()
        })
        .collect();
    let phase = coords.iter().map(|t| 0.5 * omega0 * t).collect();
    let before = normal_cdf((grid.start() - t0) / sigma);
    let after = normal_cdf((t0 - grid.end()) / sigma);
    TargetWavepacket::new(grid, amplitude, phase, t_detect, before, after)?
        .with_detuning(vec![0.5 * omega0; coords.len()])
}

/// First-order Hermite-Gaussian target with the sign flip hidden in a zero
/// gap.
///
/// The two halves of `|t - t0| exp(-(t - t0)^2 / 4 sigma^2)` are pushed
/// outwards by `z`, leaving a zero gap of half-width `z`. The result is
/// smoothed with a triangular kernel of full width `s` and renormalized. The
/// phase ramps by `pi` across the centre with a triangular detuning of base
/// `s`, which keeps the whole ramp inside the gap when `z >= s`.
pub fn hermite_gaussian_target(
    sigma: f64,
    t0: f64,
    omega0: f64,
    t_detect: f64,
    gap_halfwidth: f64,
    smoothing_width: f64,
    options: &TargetGridOptions,
) -> Result<TargetWavepacket> {
    check_shape(sigma, t0, omega0, t_detect)?;
    let (z, s) = (gap_halfwidth, smoothing_width);
    if !(s > 0.0) || !(z >= s) || !z.is_finite() {
        return Err(Error::invalid(format!(
            "need gap half-width >= smoothing width > 0, got z = {z}, s = {s}"
        )));
    }
    let grid = options.grid(sigma, t0, t_detect)?;
    let coords = grid.coords();
    let raw: Vec<f64> = coords
        .iter()
        .map(|t| {
            let u = (t - t0).abs() - z;
            if u > 0.0 {
                u * (-(u * u) / (4.0 * sigma * sigma)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let smoothed = triangular_smooth(&raw, (0.5 * s / grid.spacing()).round() as usize);
    let norm = grids::integrate(&grid, &smoothed.iter().map(|a| a * a).collect::<Vec<_>>())?;
    let amplitude: Vec<f64> = smoothed.iter().map(|a| a / norm.sqrt()).collect();

    let half = 0.5 * s;
    let ramp = |u: f64| {
        if u <= -half {
            0.0
        } else if u <= 0.0 {
            (u + half).powi(2) / (2.0 * half * half)
        } else if u < half {
            1.0 - (half - u).powi(2) / (2.0 * half * half)
        } else {
            1.0
        }
    };
    let bump = |u: f64| ((half - u.abs()) / (half * half)).max(0.0);
    let phase = coords
        .iter()
        .map(|t| 0.5 * omega0 * t + PI * ramp(t - t0))
        .collect();
    let detuning = coords
        .iter()
        .map(|t| 0.5 * omega0 + PI * bump(t - t0))
        .collect();
    TargetWavepacket::new(grid, amplitude, phase, t_detect, 0.0, 0.0)?.with_detuning(detuning)
}

/// Discrete convolution with weights `1 - |j|/m`, `|j| < m`, normalized.
fn triangular_smooth(values: &[f64], m: usize) -> Vec<f64> {
    if m <= 1 {
        return values.to_vec();
    }
    let kernel: Vec<f64> = (0..m).map(|j| 1.0 - j as f64 / m as f64).collect();
    let total = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
    let n = values.len();
    (0..n)
        .map(|i| {
            let mut acc = kernel[0] * values[i];
            for (j, w) in kernel.iter().enumerate().skip(1) {
                if i >= j {
                    acc += w * values[i - j];
                }
                if i + j < n {
                    acc += w * values[i + j];
                }
            }
            acc / total
        })
        .collect()
}

/// Reproducible description of a generated target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetDescriptor {
    Gaussian {
        sigma: f64,
        t0: f64,
        omega0: f64,
        t_detect: f64,
        #[serde(default)]
        grid: Option<TargetGridOptions>,
    },
    HermiteGaussian {
        sigma: f64,
        t0: f64,
        omega0: f64,
        t_detect: f64,
        gap_halfwidth: f64,
        smoothing_width: f64,
        #[serde(default)]
        grid: Option<TargetGridOptions>,
    },
}

impl TargetDescriptor {
    pub fn build(&self) -> Result<TargetWavepacket> {
        match self {
            TargetDescriptor::Gaussian {
                sigma,
                t0,
                omega0,
                t_detect,
                grid,
            } => gaussian_target(*sigma, *t0, *omega0, *t_detect, &grid.unwrap_or_default()),
            TargetDescriptor::HermiteGaussian {
                sigma,
                t0,
                omega0,
                t_detect,
                gap_halfwidth,
                smoothing_width,
                grid,
            } => hermite_gaussian_target(
                *sigma,
                *t0,
                *omega0,
                *t_detect,
                *gap_halfwidth,
                *smoothing_width,
                &grid.unwrap_or_default(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::retrodict;

    fn opts(points_per_sigma: usize) -> TargetGridOptions {
        TargetGridOptions {
            points_per_sigma,
            half_span_sigmas: 8.0,
        }
    }

    #[test]
    fn exponential_target_gives_constant_rate() {
        let (k, t_detect): (f64, f64) = (0.8, 0.0);
        let grid = Grid::time(-30.0, t_detect, 3001).unwrap();
        let amplitude: Vec<f64> = grid
            .coords()
            .iter()
            .map(|&t| k.sqrt() * (-k * (t_detect - t) / 2.0).exp())
            .collect();
        let before = (-k * 30.0f64).exp();
        let target =
            TargetWavepacket::new(grid, amplitude, vec![0.0; 3001], t_detect, before, 0.0).unwrap();
        let drive = invert_to_drive(&target).unwrap();
        for &kk in drive.kappa() {
            assert!((kk - k).abs() < 1e-9 * k);
        }
    }

    #[test]
    fn gaussian_coupling_matches_closed_form() {
        let (sigma, t0, t_detect) = (1.3, 0.4, 0.4 + 7.0 * 1.3);
        let target = gaussian_target(sigma, t0, 2.0, t_detect, &opts(256)).unwrap();
        let drive = invert_to_drive(&target).unwrap();
        let mut worst: f64 = 0.0;
        for (i, &k) in drive.kappa().iter().enumerate() {
            let t = drive.grid().coord(i);
            if (t - t0).abs() <= 5.0 * sigma {
                let exact = gaussian_coupling(sigma, t0, t_detect, t);
                worst = worst.max((k - exact).abs() / exact);
            }
        }
        assert!(worst < 1e-8, "{worst}");
        assert!(drive.delta().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn gaussian_weight_at_seven_sigma() {
        let target = gaussian_target(1.0, 0.0, 0.0, 7.0, &TargetGridOptions::default()).unwrap();
        let mode = retrodict(&invert_to_drive(&target).unwrap()).unwrap();
        let (_, tail) = gaussian_weight(1.0, 0.0, 7.0);
        assert!((1.0 - mode.weight() - tail).abs() < 1e-13);
        assert!(1.0 - mode.weight() < 1e-9);
    }

    #[test]
    fn roundtrip_reproduces_gaussian() {
        let target = gaussian_target(1.0, 0.0, 3.0, 2.0, &TargetGridOptions::default()).unwrap();
        let mode = retrodict(&invert_to_drive(&target).unwrap()).unwrap();
        let (w, _) = gaussian_weight(1.0, 0.0, 2.0);
        assert!((mode.weight() - w).abs() < 1e-10);
        let err = roundtrip_error(&target, &mode).unwrap();
        assert!(err.amplitude_l2 < 1e-6, "{err:?}");
        assert!(err.phase_max < 1e-6, "{err:?}");
    }

    #[test]
    fn gaussian_drive_is_symmetric_about_centre() {
        let target = gaussian_target(1.0, 0.0, 0.0, 7.0, &TargetGridOptions::default()).unwrap();
        let drive = invert_to_drive(&target).unwrap();
        assert!(symmetry_check(&drive, 0.0).unwrap() < 1e-6);
    }

    #[test]
    fn sharkfin_dominates_amplitude() {
        let target = gaussian_target(1.0, 0.0, 0.0, 2.0, &TargetGridOptions::default()).unwrap();
        let drive = invert_to_drive(&target).unwrap();
        for (k, a) in drive.kappa().iter().zip(target.amplitude()) {
            assert!(k.sqrt() >= *a * (1.0 - 1e-12));
        }
    }

    #[test]
    fn too_much_norm_before_detection_is_rejected() {
        let target = gaussian_target(1.0, 0.0, 0.0, 7.9, &TargetGridOptions::default()).unwrap();
        assert!(matches!(
            invert_to_drive(&target),
            Err(Error::DenominatorFloor { .. })
        ));
    }

    #[test]
    fn hermite_gaussian_is_orthogonal_to_gaussian() {
        let o = TargetGridOptions::default();
        let hg = hermite_gaussian_target(1.0, 0.0, 1.5, 2.0, 0.5, 0.5, &o).unwrap();
        let g = gaussian_target(1.0, 0.0, 1.5, 2.0, &o).unwrap();
        let overlap = g.envelope().inner(&hg.envelope()).unwrap();
        assert!(overlap.norm() < 1e-10, "{overlap}");
        assert!((hg.envelope().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_gaussian_phase_flip_stays_in_gap() {
        let hg =
            hermite_gaussian_target(1.0, 0.0, 0.0, 2.0, 0.5, 0.5, &TargetGridOptions::default())
                .unwrap();
        for ((t, &a), &p) in hg
            .grid()
            .coords()
            .iter()
            .zip(hg.amplitude())
            .zip(hg.phase())
        {
            if p > 1e-15 && p < PI - 1e-15 {
                assert_eq!(a, 0.0, "ramp overlaps support at t = {t}");
            }
        }
        let drive = invert_to_drive(&hg).unwrap();
        for (&k, &a) in drive.kappa().iter().zip(hg.amplitude()) {
            assert_eq!(k == 0.0, a == 0.0);
        }
    }

    #[test]
    fn hermite_gaussian_rejects_narrow_gap() {
        assert!(hermite_gaussian_target(
            1.0,
            0.0,
            0.0,
            2.0,
            0.2,
            0.5,
            &TargetGridOptions::default()
        )
        .is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        let d = TargetDescriptor::HermiteGaussian {
            sigma: 1.0,
            t0: 0.0,
            omega0: 0.0,
            t_detect: 2.0,
            gap_halfwidth: 0.5,
            smoothing_width: 0.5,
            grid: None,
        };
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"family\":\"hermite-gaussian\""));
        let back: TargetDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<TargetDescriptor>(
            r#"{"family":"gaussian","sigma":1,"t0":0,"omega0":0,"t_detect":1,"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn linear_phase_gives_constant_detuning() {
        let grid = Grid::time(-5.0, 5.0, 1001).unwrap();
        let phase: Vec<f64> = grid.coords().iter().map(|t| 0.75 * t).collect();
        let d = differentiate(&grid, &phase);
        assert!(d.iter().all(|x| (x - 0.75).abs() < 1e-12));
    }
}
