//! Forward problem: from a detector drive `(kappa(t), Delta(t))` to the
//! retrodictive wavepacket `Psi(t)` that a click at the check time `T`
//! projects onto.
//!
//! The closed-form route is [`retrodict`]:
//!
//! ```text
//! Psi*(t) = sqrt(kappa(t)) exp(-∫_t^T D),   D = kappa/2 + i Delta
//! W       = ∫ |Psi|^2 = 1 - exp(-∫ kappa)
//! ```
//!
//! The independent route is [`integrate_langevin`], which integrates the
//! excited-state amplitude equation directly. Both must agree on
//! `|C_1(T)|^2 = W |<Psi_T|f>|^2`.

mod langevin;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{self, ComplexEnvelope, Domain, Grid};

pub use langevin::{integrate_langevin, LangevinOptions};

/// How the drive window opens at the first grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnTime {
    /// The detector is switched on continuously at a finite `T_0`, so
    /// `kappa(T_0) = 0`.
    Switched,
    /// Finite `T_0` with a sudden turn-on (the constant-coupling family).
    Abrupt,
    /// `T_0 -> -infinity`; the first node truncates a negligible tail.
    AlwaysOn,
}

/// Time-dependent decay rate and detuning of the two-level trigger on
/// `[T_0, T]`. The last grid node is the check time `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorDrive {
    grid: Grid,
    kappa: Vec<f64>,
    delta: Vec<f64>,
    on_time: OnTime,
}

impl DetectorDrive {
    pub fn new(grid: Grid, kappa: Vec<f64>, delta: Vec<f64>, on_time: OnTime) -> Result<Self> {
        if grid.domain() != Domain::Time {
            return Err(Error::GridMismatch(
                "detector drive needs a time grid".into(),
            ));
        }
        if kappa.len() != grid.len() || delta.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "drive arrays ({}, {}) do not match {}-point grid",
                kappa.len(),
                delta.len(),
                grid.len()
            )));
        }
        for (i, (&k, &d)) in kappa.iter().zip(&delta).enumerate() {
            if !k.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if k < 0.0 {
                return Err(Error::invalid(format!(
                    "negative decay rate {k} at t = {}",
                    grid.coord(i)
                )));
            }
        }
        if on_time == OnTime::Switched {
            let scale = kappa.iter().cloned().fold(0.0, f64::max);
            if kappa[0] > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "switched-on drive must start from kappa(T0) = 0, got {}",
                    kappa[0]
                )));
            }
        }
        Ok(Self {
            grid,
            kappa,
            delta,
            on_time,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn on_time(&self) -> OnTime {
        self.on_time
    }

    /// `T_0`, or the truncation point standing in for it.
    pub fn start_time(&self) -> f64 {
        self.grid.start()
    }

    /// `T`, the time the trigger is checked.
    pub fn detection_time(&self) -> f64 {
        self.grid.end()
    }

    pub fn sqrt_kappa(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k.sqrt()).collect()
    }

    pub fn integrated_kappa(&self) -> f64 {
        grids::integrate(&self.grid, &self.kappa).unwrap_or(f64::NAN)
    }

    /// `1 - exp(-∫ kappa)`.
    pub fn weight(&self) -> f64 {
        -(-self.integrated_kappa()).exp_m1()
    }

    /// Same coupling with a different detuning profile.
    pub fn with_detuning(&self, delta: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, self.kappa.clone(), delta, self.on_time)
    }
}

/// The retrodictive wavepacket of a drive and its weight `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerMode {
    psi: ComplexEnvelope,
    weight: f64,
}

impl TriggerMode {
    /// `Psi(t)` (not its conjugate), subnormalized to `W`.
    pub fn psi(&self) -> &ComplexEnvelope {
        &self.psi
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }

    /// `A(t) = |Psi(t)|`.
    pub fn amplitude(&self) -> Vec<f64> {
        self.psi.amplitude()
    }

    /// `phi(t)` with `Psi = A e^{-i phi}`.
    pub fn phase(&self) -> Vec<f64> {
        self.psi.conj().phase()
    }

    /// `|Psi_T> = Psi / sqrt(W)`.
    pub fn normalized_state(&self) -> Result<ComplexEnvelope> {
        if !(self.weight > 0.0) {
            return Err(Error::ZeroWeights);
        }
        Ok(self
            .psi
            .scaled(Complex64::new(1.0 / self.weight.sqrt(), 0.0)))
    }

    /// Time of the largest retrodictive amplitude.
    pub fn peak_time(&self) -> f64 {
        let amp = self.amplitude();
        let (idx, _) =
            amp.iter().enumerate().fold(
                (0, f64::MIN),
                |best, (i, &a)| if a > best.1 { (i, a) } else { best },
            );
        self.grid().coord(idx)
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.amplitude().into_iter().fold(0.0, f64::max)
    }
}

/// Relative disagreement tolerated between the two weight routes.
pub const WEIGHT_CROSS_CHECK: f64 = 1e-6;

/// Retrodictive wavepacket of a drive.
///
/// `∫_t^T D` is accumulated once, backwards from `T`. The weight is taken
/// from `1 - exp(-∫ kappa)` and cross-checked against `∫ |Psi|^2`.
pub fn retrodict(drive: &DetectorDrive) -> Result<TriggerMode> {
    let grid = *drive.grid();
    let rate: Vec<Complex64> = drive
        .kappa
        .iter()
        .zip(&drive.delta)
        .map(|(&k, &d)| Complex64::new(0.5 * k, d))
        .collect();
    let exponent = grids::reverse_cumulative_integral(&grid, &rate);
    let samples: Vec<Complex64> = drive
        .kappa
        .iter()
        .zip(&exponent)
        .map(|(&k, &e)| (k.sqrt() * (-e).exp()).conj())
        .collect();
    let psi = ComplexEnvelope::new(grid, samples)?;

    let closed = drive.weight();
    let from_norm = psi.norm_sqr();
    if (closed - from_norm).abs() > WEIGHT_CROSS_CHECK * closed.max(from_norm) + 1e-14 {
        return Err(Error::ResolutionFailure {
            quantity: "weight",
            first: closed,
            second: from_norm,
        });
    }
    Ok(TriggerMode {
        psi,
        weight: closed,
    })
}

/// Overlap `C_1(T) = ∫ Psi*(t) f(t) dt` by quadrature on the mode grid.
/// `f` is resampled onto that grid and taken as zero outside its own.
pub fn click_amplitude(mode: &TriggerMode, input: &ComplexEnvelope) -> Result<Complex64> {
    let f = input.resample(mode.grid())?;
    mode.psi.inner(&f)
}

/// Tolerance on the norm of inputs that are required to be normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

pub fn require_normalized(f: &ComplexEnvelope) -> Result<()> {
    let n = f.norm_sqr();
    if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized { norm_sqr: n });
    }
    Ok(())
}

/// Click probability `W |<Psi_T|f>|^2` for a normalized input wavepacket.
pub fn detection_probability(mode: &TriggerMode, input: &ComplexEnvelope) -> Result<f64> {
    require_normalized(input)?;
    Ok(click_amplitude(mode, input)?.norm_sqr().clamp(0.0, 1.0))
}

/// Shape of a polynomial coupling family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolynomialFamily {
    /// `kappa0 ((t - T0)/sigma)^n ((T - t)/sigma)^n` on `[T0, T]`.
    TwoSided,
    /// `kappa0 ((T - t)/sigma)^n` with `T0 -> -infinity`.
    OneSided,
}

/// Reproducible description of a polynomial drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialDrive {
    pub family: PolynomialFamily,
    pub order: u32,
    pub kappa0: f64,
    pub sigma: f64,
    /// Turn-on time. Required for the two-sided family; for the one-sided
    /// family `None` means `-infinity`.
    #[serde(default)]
    pub t_on: Option<f64>,
    pub t_detect: f64,
}

/// `∫ kappa` that the truncated tail of an always-on drive must reach, so
/// the omitted retrodictive mass `exp(-∫ kappa)` stays below `1e-11`.
pub const ALWAYS_ON_INTEGRATED_RATE: f64 = 25.33;

impl PolynomialDrive {
    /// Family member used for the shape sweeps: detection at `T = 0`; the
    /// two-sided family turns on at `-2.5 sigma` with `kappa0 = 0.2/sigma`,
    /// the one-sided family is always on with `kappa0 = 1/sigma`.
    pub fn standard(family: PolynomialFamily, order: u32, sigma: f64) -> Self {
        let (kappa0, t_on) = match family {
            PolynomialFamily::TwoSided => (0.2 / sigma, Some(-2.5 * sigma)),
            PolynomialFamily::OneSided => (1.0 / sigma, None),
        };
        Self {
            family,
            order,
            kappa0,
            sigma,
            t_on,
            t_detect: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0) || !self.kappa0.is_finite() {
            return Err(Error::invalid(format!(
                "kappa0 must be positive, got {}",
                self.kappa0
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.t_detect.is_finite() {
            return Err(Error::invalid("detection time must be finite"));
        }
        match (self.family, self.t_on) {
            (PolynomialFamily::TwoSided, None) => Err(Error::invalid(
                "two-sided family needs a finite turn-on time t_on",
            )),
            (_, Some(t0)) if !(t0 < self.t_detect) => Err(Error::invalid(format!(
                "t_on = {t0} must precede t_detect = {}",
                self.t_detect
            ))),
            _ => Ok(()),
        }
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        let n = self.order as i32;
        let late = ((self.t_detect - t) / self.sigma).powi(n);
        match self.family {
            PolynomialFamily::TwoSided => {
                let early = ((t - self.t_on.unwrap_or(f64::NEG_INFINITY)) / self.sigma).powi(n);
                self.kappa0 * early * late
            }
            PolynomialFamily::OneSided => self.kappa0 * late,
        }
    }

    /// Start of the sampled window.
    pub fn window_start(&self) -> f64 {
        match self.t_on {
            Some(t0) => t0,
            None => {
                // ∫_{T-x}^{T} kappa0 (u/sigma)^n du = kappa0 sigma (x/sigma)^{n+1} / (n+1)
                let n = self.order as f64;
                let reach = (ALWAYS_ON_INTEGRATED_RATE * (n + 1.0) / (self.kappa0 * self.sigma))
                    .powf(1.0 / (n + 1.0));
                self.t_detect - self.sigma * reach
            }
        }
    }

    pub fn on_time(&self) -> OnTime {
        match (self.family, self.t_on) {
            (_, None) => OnTime::AlwaysOn,
            (PolynomialFamily::TwoSided, Some(_)) if self.order > 0 => OnTime::Switched,
            _ => OnTime::Abrupt,
        }
    }
}

/// Sample a polynomial coupling family on `n_points` nodes, with zero
/// detuning.
pub fn polynomial_drive(desc: &PolynomialDrive, n_points: usize) -> Result<DetectorDrive> {
    desc.validate()?;
    let grid = Grid::time(desc.window_start(), desc.t_detect, n_points)?;
    let kappa = grid.coords().iter().map(|&t| desc.rate_at(t)).collect();
    DetectorDrive::new(grid, kappa, vec![0.0; n_points], desc.on_time())
}
