//! Uniform sampling lattices, quadrature, interpolation and the unitary
//! Fourier transform shared by every other module.
//!
//! All integrals in the crate go through [`integrate`] (composite Simpson,
//! with a 3/8 closing panel on an odd interval count) or through the
//! fourth-order running integrals [`cumulative_integral`] and
//! [`reverse_cumulative_integral`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which variable a grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

/// Uniform lattice `start, start + dx, ..., end` with `n >= 2` nodes.
///
/// A time grid (`TimeGrid` in the docs) and an angular-frequency grid
/// (`FrequencyGrid`) share this representation and differ only by [`Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: Domain,
    start: f64,
    end: f64,
    n: usize,
}

impl Grid {
    pub fn new(domain: Domain, start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 points, got {n}"
            )));
        }
        if !start.is_finite() || !end.is_finite() || end <= start {
            return Err(Error::invalid(format!(
                "grid bounds must be finite with end > start, got [{start}, {end}]"
            )));
        }
        Ok(Self {
            domain,
            start,
            end,
            n,
        })
    }

    pub fn time(start: f64, end: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Time, start, end, n)
    }

    pub fn frequency(start: f64, end: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Frequency, start, end, n)
    }

    /// Grid of `n` nodes starting at `start` with spacing `step`.
    pub fn from_spacing(domain: Domain, start: f64, step: f64, n: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::invalid(format!(
                "grid spacing must be positive, got {step}"
            )));
        }
        Self::new(domain, start, start + step * (n as f64 - 1.0), n)
    }

    /// Time grid whose nodes include both `center` and `node`, spanning at
    /// least `half_span` on either side of `center` (and reaching `node`).
    /// The spacing is the largest value not exceeding `max_step` that puts
    /// `node` exactly on the lattice.
    pub fn time_centered(center: f64, half_span: f64, node: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) || !(half_span > 0.0) {
            return Err(Error::invalid("grid spacing and span must be positive"));
        }
        let offset = node - center;
        let step = if offset == 0.0 {
            max_step
        } else {
            let cells = (offset.abs() / max_step).ceil().max(1.0);
            offset.abs() / cells
        };
        let reach = half_span.max(offset.abs());
        let half_cells = (reach / step - 1e-9).ceil() as usize;
        Self::from_spacing(
            Domain::Time,
            center - half_cells as f64 * step,
            step,
            2 * half_cells + 1,
        )
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.n as f64 - 1.0)
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + i as f64 * self.spacing()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Index of the node at `x`, if `x` lies on the lattice to within
    /// `1e-6` of a cell.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let pos = (x - self.start) / self.spacing();
        let idx = pos.round();
        if idx < 0.0 || idx > (self.n - 1) as f64 || (pos - idx).abs() > 1e-6 {
            None
        } else {
            Some(idx as usize)
        }
    }

    /// Sub-grid of nodes `lo..=hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self> {
        if hi <= lo || hi >= self.n {
            return Err(Error::invalid(format!(
                "bad slice {lo}..={hi} of {}-point grid",
                self.n
            )));
        }
        Self::new(self.domain, self.coord(lo), self.coord(hi), hi - lo + 1)
    }

    /// Same lattice to within a relative tolerance.
    pub fn matches(&self, other: &Grid) -> bool {
        let tol = 1e-9 * self.spacing();
        self.domain == other.domain
            && self.n == other.n
            && (self.start - other.start).abs() <= tol
            && (self.end - other.end).abs() <= tol
    }

    /// Fourier-conjugate grid for an `n * pad` point transform of this grid:
    /// `d_omega * dt = 2 pi / (n * pad)`, with zero frequency on a node.
    pub fn conjugate(&self, pad: usize) -> Result<Self> {
        let pad = pad.max(1);
        let total = self.n * pad;
        let step = 2.0 * PI / (total as f64 * self.spacing());
        let centre = (total / 2) as f64;
        let other = match self.domain {
            Domain::Time => Domain::Frequency,
            Domain::Frequency => Domain::Time,
        };
        Self::from_spacing(other, -centre * step, step, total)
    }
}

/// Values that can be integrated: `f64` and `Complex64`.
pub trait Sample:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn is_finite_sample(&self) -> bool;
}

impl Sample for f64 {
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for Complex64 {
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

fn check_finite<T: Sample>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite_sample()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Composite Simpson weights (in units of the spacing); an odd number of
/// intervals closes with Simpson's 3/8 panel.
pub fn quadrature_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => {}
        2 => {
            w[0] = 0.5;
            w[1] = 0.5;
        }
        3 => {
            w[0] = 1.0 / 3.0;
            w[1] = 4.0 / 3.0;
            w[2] = 1.0 / 3.0;
        }
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) {
                n - 1
            } else {
                n - 4
            };
            for i in (0..simpson_end).step_by(2) {
                w[i] += 1.0 / 3.0;
                w[i + 1] += 4.0 / 3.0;
                w[i + 2] += 1.0 / 3.0;
            }
            if simpson_end != n - 1 {
                let s = simpson_end;
                w[s] += 3.0 / 8.0;
                w[s + 1] += 9.0 / 8.0;
                w[s + 2] += 9.0 / 8.0;
                w[s + 3] += 3.0 / 8.0;
            }
        }
    }
    w
}

/// `∫ f` over the grid.
pub fn integrate<T: Sample>(grid: &Grid, values: &[T]) -> Result<T> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples on a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    check_finite(values)?;
    let acc = quadrature_weights(values.len())
        .iter()
        .zip(values)
        .fold(T::default(), |acc, (&w, &v)| acc + v * w);
    Ok(acc * grid.spacing())
}

/// Integral over each cell `[x_i, x_{i+1}]` from the cubic through the four
/// nearest nodes (fourth order); falls back to the trapezoid below 4 nodes.
pub fn cell_integrals<T: Sample>(grid: &Grid, values: &[T]) -> Vec<T> {
    let n = values.len();
    let h = grid.spacing();
    if n < 4 {
        return values
            .windows(2)
            .map(|w| (w[0] + w[1]) * (0.5 * h))
            .collect();
    }
    let c = h / 24.0;
    (0..n - 1)
        .map(|i| {
            if i == 0 {
                (values[0] * 9.0 + values[1] * 19.0 - values[2] * 5.0 + values[3]) * c
            } else if i == n - 2 {
                (values[n - 4] - values[n - 3] * 5.0 + values[n - 2] * 19.0 + values[n - 1] * 9.0)
                    * c
            } else {
                ((values[i] + values[i + 1]) * 13.0 - values[i - 1] - values[i + 2]) * c
            }
        })
        .collect()
}

/// Running integral `∫_{start}^{x_i} f`, zero at the first node.
pub fn cumulative_integral<T: Sample>(grid: &Grid, values: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::default();
    out.push(acc);
    for cell in cell_integrals(grid, values) {
        acc = acc + cell;
        out.push(acc);
    }
    out
}

/// Running integral `∫_{x_i}^{end} f`, zero at the last node. Computed in
/// one backward pass.
pub fn reverse_cumulative_integral<T: Sample>(grid: &Grid, values: &[T]) -> Vec<T> {
    let cells = cell_integrals(grid, values);
    let mut out = vec![T::default(); values.len()];
    let mut acc = T::default();
    for (i, cell) in cells.iter().enumerate().rev() {
        acc = acc + *cell;
        out[i] = acc;
    }
    out
}

/// Cubic Lagrange interpolation through the four nodes around `x`.
/// Returns `None` outside the grid.
pub fn interpolate<T: Sample>(grid: &Grid, values: &[T], x: f64) -> Option<T> {
    let n = values.len();
    let h = grid.spacing();
    let pos = (x - grid.start()) / h;
    if pos < -1e-9 || pos > (n - 1) as f64 + 1e-9 {
        return None;
    }
    if n < 4 {
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let u = pos - i as f64;
        return Some(values[i] * (1.0 - u) + values[i + 1] * u);
    }
    let i = (pos.floor().max(0.0) as usize).clamp(1, n - 3) - 1;
    let u = pos - i as f64;
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    Some(values[i] * l0 + values[i + 1] * l1 + values[i + 2] * l2 + values[i + 3] * l3)
}

/// A sampled complex function of time or frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    grid: Grid,
    samples: Vec<Complex64>,
}

/// Relative amplitude below which the phase of a sample is undefined.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

impl ComplexEnvelope {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        check_finite(&samples)?;
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.coords().into_iter().map(f).collect();
        Self::new(grid, samples)
    }

    /// Envelope `A e^{i phi}` from amplitude and phase arrays.
    pub fn from_polar(grid: Grid, amplitude: &[f64], phase: &[f64]) -> Result<Self> {
        if amplitude.len() != phase.len() {
            return Err(Error::GridMismatch(
                "amplitude and phase lengths differ".into(),
            ));
        }
        let samples = amplitude
            .iter()
            .zip(phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm()).collect()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Unwrapped phase `arg(samples)`. Where the amplitude is below
    /// [`AMPLITUDE_FLOOR`] times the peak, the last defined phase is held.
    pub fn phase(&self) -> Vec<f64> {
        let peak = self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let floor = AMPLITUDE_FLOOR * peak;
        let mut out = Vec::with_capacity(self.samples.len());
        let mut last: Option<f64> = None;
        for s in &self.samples {
            let value = if s.norm() > floor {
                let raw = s.arg();
                match last {
                    Some(prev) => prev + wrap_angle(raw - prev),
                    None => raw,
                }
            } else {
                last.unwrap_or(0.0)
            };
            if s.norm() > floor {
                last = Some(value);
            }
            out.push(value);
        }
        // Leading undefined samples take the first defined phase.
        if let Some(first) = self.samples.iter().position(|s| s.norm() > floor) {
            let p = out[first];
            out[..first].iter_mut().for_each(|v| *v = p);
        }
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        integrate(&self.grid, &self.intensity()).unwrap_or(f64::NAN)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::Unnormalized { norm_sqr: n });
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|s| s.conj()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &s)| f(self.grid.coord(i), s))
            .collect();
        Self::new(self.grid, samples)
    }

    /// `<self|other> = ∫ conj(self) other`. Both envelopes must share a grid.
    pub fn inner(&self, other: &ComplexEnvelope) -> Result<Complex64> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::GridMismatch(
                "inner product of envelopes on different grids".into(),
            ));
        }
        let prod: Vec<Complex64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .collect();
        integrate(&self.grid, &prod)
    }

    /// Value at an arbitrary coordinate; zero outside the grid.
    pub fn value_at(&self, x: f64) -> Complex64 {
        interpolate(&self.grid, &self.samples, x).unwrap_or_default()
    }

    /// Resample onto another grid of the same domain; zero outside this one.
    pub fn resample(&self, grid: &Grid) -> Result<Self> {
        if grid.domain() != self.grid.domain() {
            return Err(Error::GridMismatch("cannot resample across domains".into()));
        }
        if self.grid.matches(grid) {
            return Ok(Self {
                grid: *grid,
                samples: self.samples.clone(),
            });
        }
        Self::from_fn(*grid, |x| self.value_at(x))
    }
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    x - two_pi * ((x + PI) / two_pi).floor()
}

/// `∫ f` of an envelope over its grid.
pub fn quadrature(f: &ComplexEnvelope) -> Result<Complex64> {
    integrate(f.grid(), f.samples())
}

/// Sign of the exponent in the forward kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierSign {
    /// `F(omega) = (2 pi)^{-1/2} ∫ f(t) e^{+i omega t} dt`.
    #[default]
    Positive,
    /// `F(omega) = (2 pi)^{-1/2} ∫ f(t) e^{-i omega t} dt`.
    Negative,
}

impl FourierSign {
    fn value(self) -> f64 {
        match self {
            FourierSign::Positive => 1.0,
            FourierSign::Negative => -1.0,
        }
    }
}

/// Unitary transform of a time envelope onto the conjugate frequency grid,
/// zero-padding the input to `pad` times its length to refine the
/// frequency spacing.
///
/// The lattice sum is periodic: content beyond the Nyquist band
/// `|omega| < pi / dt` aliases back in. Callers must sample finely enough
/// for the envelope to be band-limited on that band.
pub fn fourier_transform(
    f: &ComplexEnvelope,
    sign: FourierSign,
    pad: usize,
) -> Result<ComplexEnvelope> {
    transform(f, sign, pad, Domain::Time)
}

/// Inverse of [`fourier_transform`] back onto `time_grid`. The spectrum must
/// live on `time_grid.conjugate(pad)` for some integer `pad`.
pub fn inverse_fourier_transform(
    spectrum: &ComplexEnvelope,
    time_grid: &Grid,
    sign: FourierSign,
) -> Result<ComplexEnvelope> {
    let total = spectrum.grid().len();
    if spectrum.grid().domain() != Domain::Frequency || !total.is_multiple_of(time_grid.len()) {
        return Err(Error::GridMismatch(
            "spectrum is not on a conjugate grid of the time grid".into(),
        ));
    }
    let pad = total / time_grid.len();
    let expected = time_grid.conjugate(pad)?;
    if !expected.matches(spectrum.grid()) {
        return Err(Error::GridMismatch(
            "spectrum is not on a conjugate grid of the time grid".into(),
        ));
    }
    let s = -sign.value();
    let omega_step = spectrum.grid().spacing();
    let centre = total / 2;
    let t0 = time_grid.start();
    let mut buf: Vec<Complex64> = spectrum
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * Complex64::from_polar(1.0, s * spectrum.grid().coord(k) * t0))
        .collect();
    run_fft(&mut buf, s);
    let norm = omega_step / (2.0 * PI).sqrt();
    let samples = buf
        .iter()
        .take(time_grid.len())
        .enumerate()
        .map(|(j, &v)| v * lattice_phase(centre, j, total, -s) * norm)
        .collect();
    ComplexEnvelope::new(*time_grid, samples)
}

fn transform(
    f: &ComplexEnvelope,
    sign: FourierSign,
    pad: usize,
    from: Domain,
) -> Result<ComplexEnvelope> {
    if f.grid().domain() != from {
        return Err(Error::GridMismatch(
            "forward transform expects a time envelope".into(),
        ));
    }
    let s = sign.value();
    let target = f.grid().conjugate(pad)?;
    let total = target.len();
    let centre = total / 2;
    let mut buf = vec![Complex64::default(); total];
    for (j, &v) in f.samples().iter().enumerate() {
        buf[j] = v * lattice_phase(centre, j, total, -s);
    }
    run_fft(&mut buf, s);
    let t0 = f.grid().start();
    let norm = f.grid().spacing() / (2.0 * PI).sqrt();
    let samples = buf
        .iter()
        .enumerate()
        .map(|(k, &v)| v * Complex64::from_polar(norm, s * target.coord(k) * t0))
        .collect();
    ComplexEnvelope::new(target, samples)
}

/// `exp(i s 2 pi c j / n)` with the argument reduced modulo `n`.
fn lattice_phase(c: usize, j: usize, n: usize, s: f64) -> Complex64 {
    let r = ((c as u128 * j as u128) % n as u128) as f64;
    Complex64::from_polar(1.0, s * 2.0 * PI * r / n as f64)
}

/// In-place unnormalized DFT with kernel `exp(i s 2 pi k j / n)`.
fn run_fft(buf: &mut [Complex64], s: f64) {
    let mut planner = FftPlanner::new();
    let fft = if s > 0.0 {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(t: f64, mu: f64, sigma: f64) -> f64 {
        (-(t - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).sqrt()
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(Grid::time(0.0, 1.0, 1).is_err());
        assert!(Grid::time(1.0, 1.0, 10).is_err());
        assert!(Grid::time(0.0, f64::INFINITY, 10).is_err());
    }

    #[test]
    fn constant_integrates_exactly() {
        let g = Grid::time(0.0, 1.0, 1001).unwrap();
        let v = vec![1.0; 1001];
        assert!((integrate(&g, &v).unwrap() - 1.0).abs() < 1e-12);
        for n in [2, 3, 4, 5, 6, 1000] {
            let g = Grid::time(-2.0, 3.0, n).unwrap();
            let v = vec![1.0; n];
            assert!(
                (integrate(&g, &v).unwrap() - 5.0).abs() < 1e-12 * 5.0,
                "n = {n}"
            );
        }
    }

    #[test]
    fn gaussian_normalization() {
        let g = Grid::time(-8.0, 8.0, 4097).unwrap();
        let v: Vec<f64> = g.coords().iter().map(|&t| gaussian(t, 0.0, 1.0)).collect();
        assert!((integrate(&g, &v).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn decaying_exponential() {
        let g = Grid::time(0.0, 10.0, 2001).unwrap();
        let v: Vec<f64> = g.coords().iter().map(|&t| (-t).exp()).collect();
        let exact = 1.0 - (-10.0f64).exp();
        assert!((integrate(&g, &v).unwrap() - exact).abs() < 1e-6);
        // Even point count exercises the 3/8 closing panel.
        let g = Grid::time(0.0, 10.0, 2000).unwrap();
        let v: Vec<f64> = g.coords().iter().map(|&t| (-t).exp()).collect();
        assert!((integrate(&g, &v).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn non_finite_rejected_with_index() {
        let g = Grid::time(0.0, 1.0, 5).unwrap();
        let v = [0.0, 1.0, f64::NAN, 0.0, 0.0];
        match integrate(&g, &v) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        let s = vec![Complex64::new(0.0, f64::INFINITY); 5];
        assert!(matches!(
            ComplexEnvelope::new(g, s),
            Err(Error::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn running_integrals_are_fourth_order() {
        let g = Grid::time(0.0, 3.0, 301).unwrap();
        let v: Vec<f64> = g.coords().iter().map(|t| t.sin()).collect();
        let fwd = cumulative_integral(&g, &v);
        let bwd = reverse_cumulative_integral(&g, &v);
        for (i, t) in g.coords().iter().enumerate() {
            assert!((fwd[i] - (1.0 - t.cos())).abs() < 1e-9);
            assert!((bwd[i] - (t.cos() - 3.0f64.cos())).abs() < 1e-9);
        }
        // Exact for cubics.
        let v: Vec<f64> = g.coords().iter().map(|t| t.powi(3) - 2.0 * t).collect();
        let fwd = cumulative_integral(&g, &v);
        let t = 3.0f64;
        assert!((fwd[300] - (t.powi(4) / 4.0 - t * t)).abs() < 1e-11);
    }

    #[test]
    fn interpolation_exact_on_cubics() {
        let g = Grid::time(-1.0, 1.0, 11).unwrap();
        let f = |x: f64| 2.0 * x.powi(3) - x + 0.5;
        let v: Vec<f64> = g.coords().iter().map(|&x| f(x)).collect();
        for x in [-1.0, -0.97, -0.3, 0.01, 0.55, 0.99, 1.0] {
            assert!(
                (interpolate(&g, &v, x).unwrap() - f(x)).abs() < 1e-12,
                "x = {x}"
            );
        }
        assert!(interpolate(&g, &v, 1.1).is_none());
    }

    #[test]
    fn conjugate_grid_reciprocity() {
        let g = Grid::time(-5.0, 5.0, 1024).unwrap();
        for pad in [1, 2, 4] {
            let w = g.conjugate(pad).unwrap();
            let n = (1024 * pad) as f64;
            assert!((w.spacing() * g.spacing() - 2.0 * PI / n).abs() < 1e-14);
            assert_eq!(w.node_index(0.0), Some(512 * pad));
        }
    }

    fn gaussian_envelope(g: Grid, sigma: f64, chirp: f64) -> ComplexEnvelope {
        ComplexEnvelope::from_fn(g, |t| {
            let a = gaussian(t, 0.3, sigma).sqrt();
            Complex64::from_polar(a, 1.7 * t + chirp * t * t)
        })
        .unwrap()
    }

    #[test]
    fn gaussian_self_transform_width() {
        let sigma = 0.7;
        let g = Grid::time(-8.0 * sigma, 8.0 * sigma, 4096).unwrap();
        let f = gaussian_envelope(g, sigma, 0.0);
        let spec = fourier_transform(&f, FourierSign::Positive, 4).unwrap();
        let p = spec.intensity();
        let w = spec.grid().coords();
        let mass = integrate(spec.grid(), &p).unwrap();
        let mean = integrate(
            spec.grid(),
            &p.iter().zip(&w).map(|(p, w)| p * w).collect::<Vec<_>>(),
        )
        .unwrap()
            / mass;
        let var = integrate(
            spec.grid(),
            &p.iter()
                .zip(&w)
                .map(|(p, w)| p * (w - mean).powi(2))
                .collect::<Vec<_>>(),
        )
        .unwrap()
            / mass;
        assert!((var.sqrt() - 1.0 / (2.0 * sigma)).abs() < 1e-8);
        // Kernel e^{+i omega t}: a carrier e^{+i 1.7 t} lands at omega = -1.7.
        assert!((mean + 1.7).abs() < 1e-8);
        let neg = fourier_transform(&f, FourierSign::Negative, 4).unwrap();
        let p = neg.intensity();
        let mean = integrate(
            neg.grid(),
            &p.iter().zip(&w).map(|(p, w)| p * w).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((mean - 1.7).abs() < 1e-8);
    }

    #[test]
    fn narrow_pulse_has_flat_spectrum() {
        let g = Grid::time(-1.0, 1.0, 513).unwrap();
        let mut s = vec![Complex64::default(); 513];
        s[256] = Complex64::new(1.0, 0.0);
        let f = ComplexEnvelope::new(g, s).unwrap();
        let spec = fourier_transform(&f, FourierSign::Positive, 1).unwrap();
        let mags = spec.amplitude();
        let (lo, hi) = mags
            .iter()
            .fold((f64::MAX, 0.0f64), |(l, h), &m| (l.min(m), h.max(m)));
        assert!((hi - lo) / hi < 1e-12);
    }

    #[test]
    fn parseval_and_roundtrip_on_chirped_gaussian() {
        let g = Grid::time(-6.0, 6.0, 2048).unwrap();
        let f = gaussian_envelope(g, 0.8, 0.9);
        for sign in [FourierSign::Positive, FourierSign::Negative] {
            for pad in [2, 3] {
                let spec = fourier_transform(&f, sign, pad).unwrap();
                assert!(
                    (spec.norm_sqr() - f.norm_sqr()).abs() < 1e-8 * f.norm_sqr(),
                    "{sign:?} {pad} {} {}",
                    spec.norm_sqr(),
                    f.norm_sqr()
                );
                let back = inverse_fourier_transform(&spec, &g, sign).unwrap();
                let diff: Vec<f64> = back
                    .samples()
                    .iter()
                    .zip(f.samples())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .collect();
                assert!(integrate(&g, &diff).unwrap().sqrt() < 1e-8);
            }
        }
    }

    #[test]
    fn inverse_rejects_foreign_grid() {
        let g = Grid::time(-6.0, 6.0, 256).unwrap();
        let other = Grid::frequency(-3.0, 3.0, 256).unwrap();
        let spec = ComplexEnvelope::new(other, vec![Complex64::default(); 256]).unwrap();
        assert!(matches!(
            inverse_fourier_transform(&spec, &g, FourierSign::Positive),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn phase_is_held_across_zero_gap() {
        let g = Grid::time(0.0, 1.0, 5).unwrap();
        let s = vec![
            Complex64::from_polar(1.0, 0.2),
            Complex64::from_polar(1.0, 0.4),
            Complex64::default(),
            Complex64::from_polar(1.0, 3.0),
            Complex64::from_polar(1.0, -3.0),
        ];
        let p = ComplexEnvelope::new(g, s).unwrap().phase();
        assert_eq!(p[2], 0.4);
        assert!((p[4] - (2.0 * PI - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn time_centered_puts_both_points_on_nodes() {
        let g = Grid::time_centered(1.0, 8.0, 3.0, 1.0 / 256.0).unwrap();
        assert!(g.node_index(1.0).is_some());
        assert!(g.node_index(3.0).is_some());
        assert!(g.start() <= -7.0 + 1e-12 && g.end() >= 9.0 - 1e-12);
        let g = Grid::time_centered(0.0, 8.0, 12.0, 1.0 / 256.0).unwrap();
        assert!(g.end() >= 12.0 - 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadrature_is_linear_and_positive(
                a in -3.0f64..3.0, b in -3.0f64..3.0, n in 4usize..300,
            ) {
                let g = Grid::time(-1.0, 2.0, n).unwrap();
                let f: Vec<f64> = g.coords().iter().map(|t| t.cos() + 1.1).collect();
                let h: Vec<f64> = g.coords().iter().map(|t| t * t).collect();
                let mix: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
                let lhs = integrate(&g, &mix).unwrap();
                let rhs = a * integrate(&g, &f).unwrap() + b * integrate(&g, &h).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-10);
                prop_assert!(integrate(&g, &f).unwrap() >= 0.0);
            }

            #[test]
            fn refinement_is_stable(n in 200usize..2000, mu in -1.0f64..1.0) {
                let g1 = Grid::time(-8.0, 8.0, n).unwrap();
                let g2 = Grid::time(-8.0, 8.0, 2 * n - 1).unwrap();
                let f = |t: f64| gaussian(t, mu, 1.0) * (1.0 + 0.3 * t.sin());
                let i1 = integrate(&g1, &g1.coords().iter().map(|&t| f(t)).collect::<Vec<_>>()).unwrap();
                let i2 = integrate(&g2, &g2.coords().iter().map(|&t| f(t)).collect::<Vec<_>>()).unwrap();
                prop_assert!((i1 - i2).abs() < 1e-6 * i2.abs());
            }
        }
    }
}
