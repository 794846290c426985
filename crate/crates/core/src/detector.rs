//! Click elements of a realistic detector: a linear filter in front of the
//! trigger, amplification by an integer gain into a thermal target mode, and
//! an inefficient threshold measurement of the amplified signal.
//!
//! The click element has the form `w0 |vac><vac| + wT |g><g|`, where `g` is
//! the filtered trigger state. The weights follow from
//!
//! ```text
//! w0 = sum_{k>=kmin} sum_{n>=k} Pr(n|k) sum_{m=0}^{n/G} P_{n-Gm} P'_m beta^{2m}
//! wT = sum_{k>=kmin} sum_{n>=k} Pr(n|k) sum_{m=1}^{n/G} m P_{n-Gm} P'_{m-1} alpha^2 beta^{2(m-1)}
//! ```
//!
//! with `Pr(n|k)` identified with the binomial `Pr(k|n)`. Because of that
//! identification `w0` and `wT` are weights, not probabilities that add up
//! to one. The Bayes-renormalized reading is available through
//! [`DetectorConfig::renormalized_posterior`] and equals `eta` times the
//! literal one.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::require_normalized;
use crate::grids::{self, ComplexEnvelope, Domain, Grid};
use statrs::function::factorial::ln_binomial;

/// `C(n, k) eta^k (1 - eta)^{n-k}`.
pub fn binomial_inefficiency(k: u64, n: u64, eta: f64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!(
            "cannot detect k = {k} of n = {n} excitations"
        )));
    }
    check_efficiency(eta)?;
    Ok(binomial_pmf(k as usize, n as usize, eta))
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!(
            "efficiency must lie in [0, 1], got {eta}"
        )));
    }
    Ok(())
}

fn binomial_pmf(k: usize, n: usize, eta: f64) -> f64 {
    if eta == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if eta == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n as u64, k as u64) + k as f64 * eta.ln() + (n - k) as f64 * (-eta).ln_1p()).exp()
}

/// `P(Bin(n, eta) >= k_min)` for `n = 0..=n_max`, built from
/// `Q(n) = Q(n-1) + eta Pr(k_min - 1 | n - 1)` with the low binomial
/// probabilities advanced by Pascal's rule. Every update adds nonnegative
/// terms, so no cancellation occurs.
fn threshold_probabilities(k_min: usize, n_max: usize, eta: f64) -> Vec<f64> {
    let mut q = vec![0.0; n_max + 1];
    // low[k] = Pr(k | n) for k < k_min, starting at n = 0.
    let mut low = vec![0.0; k_min];
    if k_min == 0 {
        return vec![1.0; n_max + 1];
    }
    low[0] = 1.0;
    for n in 1..=n_max {
        q[n] = q[n - 1] + eta * low[k_min - 1];
        for k in (0..k_min).rev() {
            let from_below = if k > 0 { eta * low[k - 1] } else { 0.0 };
            low[k] = from_below + (1.0 - eta) * low[k];
        }
    }
    q
}

/// `(1/(1+N)) (N/(1+N))^n`, zero for negative `n`.
pub fn thermal_probability(n: i64, nbar: f64) -> Result<f64> {
    check_occupation(nbar)?;
    if n < 0 {
        return Ok(0.0);
    }
    Ok(thermal_pmf(n as usize, nbar))
}

fn thermal_pmf(n: usize, nbar: f64) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ratio = nbar / (1.0 + nbar);
    ratio.powi(n as i32) / (1.0 + nbar)
}

fn check_occupation(nbar: f64) -> Result<()> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::invalid(format!(
            "thermal occupation must be finite and >= 0, got {nbar}"
        )));
    }
    Ok(())
}

/// Mean occupation `1/(e^{omega'/tau} - 1)` of a mode at frequency `omega'`
/// and temperature `tau`, both in the same energy units (`hbar = 1`).
pub fn thermal_occupation(omega_prime: f64, temperature: f64) -> Result<f64> {
    if !(omega_prime > 0.0) || !(temperature >= 0.0) {
        return Err(Error::invalid("need omega' > 0 and temperature >= 0"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega_prime / temperature).exp_m1())
}

/// Ratio `N/(1+N)` of the geometric thermal distribution.
fn thermal_ratio(nbar: f64) -> f64 {
    nbar / (1.0 + nbar)
}

/// Transmission and reflection of the filter in front of the trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponse {
    grid: Grid,
    transmission: Vec<Complex64>,
    reflection: Vec<Complex64>,
}

/// Tolerance on `|T|^2 + |R|^2 = 1`.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

impl FilterResponse {
    pub fn new(
        grid: Grid,
        transmission: Vec<Complex64>,
        reflection: Vec<Complex64>,
    ) -> Result<Self> {
        if grid.domain() != Domain::Frequency {
            return Err(Error::GridMismatch("filter needs a frequency grid".into()));
        }
        if transmission.len() != grid.len() || reflection.len() != grid.len() {
            return Err(Error::GridMismatch(
                "filter arrays must match the grid".into(),
            ));
        }
        for (i, (t, r)) in transmission.iter().zip(&reflection).enumerate() {
            if !t.is_finite() || !r.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            let total = t.norm_sqr() + r.norm_sqr();
            if (total - 1.0).abs() > UNITARITY_TOLERANCE {
                return Err(Error::invalid(format!(
                    "|T|^2 + |R|^2 = {total} at omega = {}",
                    grid.coord(i)
                )));
            }
        }
        Ok(Self {
            grid,
            transmission,
            reflection,
        })
    }

    /// Complete the reflection as `R = i (T/|T|) sqrt(1 - |T|^2)`, which also
    /// satisfies `R T* + R* T = 0`.
    pub fn from_transmission(grid: Grid, transmission: Vec<Complex64>) -> Result<Self> {
        let mut reflection = Vec::with_capacity(transmission.len());
        for (i, t) in transmission.iter().enumerate() {
            let p = t.norm_sqr();
            if p > 1.0 + UNITARITY_TOLERANCE {
                return Err(Error::invalid(format!(
                    "|T|^2 = {p} > 1 at omega = {}",
                    grid.coord(i)
                )));
            }
            let direction = if t.norm() > 0.0 {
                t / t.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            reflection.push(Complex64::i() * direction * (1.0 - p).max(0.0).sqrt());
        }
        Self::new(grid, transmission, reflection)
    }

    pub fn transparent(grid: Grid) -> Result<Self> {
        Self::flat(grid, 1.0)
    }

    /// Frequency-independent power transmission.
    pub fn flat(grid: Grid, power_transmission: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&power_transmission) {
            return Err(Error::invalid("power transmission must lie in [0, 1]"));
        }
        let t = Complex64::new(power_transmission.sqrt(), 0.0);
        Self::from_transmission(grid, vec![t; grid.len()])
    }

    /// Single-mode cavity in transmission: `T = (g/2)/(g/2 + i (omega - omega_c))`.
    pub fn lorentzian(grid: Grid, center: f64, linewidth: f64) -> Result<Self> {
        if !(linewidth > 0.0) {
            return Err(Error::invalid("linewidth must be positive"));
        }
        let half = 0.5 * linewidth;
        let (t, r) = grid
            .coords()
            .iter()
            .map(|w| {
                let d = Complex64::new(half, w - center);
                (
                    Complex64::new(half, 0.0) / d,
                    Complex64::new(0.0, -(w - center)) / d,
                )
            })
            .unzip();
        Self::new(grid, t, r)
    }

    /// The same cavity seen in reflection, which blocks `omega_c` entirely.
    pub fn notch(grid: Grid, center: f64, linewidth: f64) -> Result<Self> {
        let l = Self::lorentzian(grid, center, linewidth)?;
        Self::new(grid, l.reflection, l.transmission)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn transmission(&self) -> &[Complex64] {
        &self.transmission
    }

    pub fn reflection(&self) -> &[Complex64] {
        &self.reflection
    }
}

/// Reproducible description of a filter, sampled on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FilterDescriptor {
    Transparent,
    Flat { power_transmission: f64 },
    Lorentzian { center: f64, linewidth: f64 },
    Notch { center: f64, linewidth: f64 },
}

impl FilterDescriptor {
    pub fn build(&self, grid: Grid) -> Result<FilterResponse> {
        match *self {
            FilterDescriptor::Transparent => FilterResponse::transparent(grid),
            FilterDescriptor::Flat { power_transmission } => {
                FilterResponse::flat(grid, power_transmission)
            }
            FilterDescriptor::Lorentzian { center, linewidth } => {
                FilterResponse::lorentzian(grid, center, linewidth)
            }
            FilterDescriptor::Notch { center, linewidth } => {
                FilterResponse::notch(grid, center, linewidth)
            }
        }
    }
}

/// Split of a normalized trigger spectrum by a filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSplit {
    pub alpha: f64,
    pub beta: f64,
    /// `Psi(omega) T*(omega) e^{i omega T} / alpha`.
    pub transmitted: ComplexEnvelope,
    /// `Psi(omega) R*(omega) e^{i omega T} / beta`, absent when `beta = 0`.
    pub reflected: Option<ComplexEnvelope>,
}

/// Smallest `alpha^2` treated as nonzero transmission.
pub const TRANSMISSION_FLOOR: f64 = 1e-15;

pub fn filter_overlap(
    spectrum: &ComplexEnvelope,
    filter: &FilterResponse,
    t_detect: f64,
) -> Result<FilterSplit> {
    if !spectrum.grid().matches(&filter.grid) {
        return Err(Error::GridMismatch(
            "trigger spectrum and filter are sampled differently".into(),
        ));
    }
    require_normalized(spectrum)?;
    let branch = |coef: &[Complex64]| -> Result<(f64, ComplexEnvelope)> {
        let env = spectrum.map(|w, psi| {
            let i = filter.grid.node_index(w).unwrap_or(0);
            psi * coef[i].conj() * Complex64::from_polar(1.0, w * t_detect)
        })?;
        Ok((env.norm_sqr(), env))
    };
    let (alpha2, transmitted) = branch(&filter.transmission)?;
    let (beta2, reflected) = branch(&filter.reflection)?;
    if alpha2 < TRANSMISSION_FLOOR {
        return Err(Error::ZeroTransmission);
    }
    let (alpha, beta) = (alpha2.sqrt(), beta2.sqrt());
    Ok(FilterSplit {
        alpha,
        beta,
        transmitted: transmitted.scaled(Complex64::new(1.0 / alpha, 0.0)),
        reflected: (beta2 > 0.0).then(|| reflected.scaled(Complex64::new(1.0 / beta, 0.0))),
    })
}

/// Amplification and readout parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Readout efficiency.
    pub eta: f64,
    /// Target-mode quanta added per trigger excitation.
    pub gain: u32,
    /// Thermal occupation of the amplifier target mode.
    pub nbar: f64,
    /// Thermal occupation of the reflected internal mode.
    pub nbar_reflected: f64,
    /// Smallest detected count registered as a click.
    pub k_min: u32,
    /// Truncation of the sum over `n`; chosen automatically when absent.
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Normalize `Pr(n|k)` over `n` instead of identifying it with `Pr(k|n)`.
    #[serde(default)]
    pub renormalized_posterior: bool,
}

/// Largest truncation tried before giving up.
pub const N_MAX_CAP: usize = 1 << 16;

/// Relative size of the omitted tail accepted by the truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if self.gain == 0 {
            return Err(Error::invalid("gain must be a positive integer"));
        }
        if self.k_min == 0 {
            return Err(Error::invalid("k_min must be a positive integer"));
        }
        check_occupation(self.nbar)?;
        check_occupation(self.nbar_reflected)?;
        Ok(())
    }

    pub fn default_n_max(&self) -> usize {
        let scale = 20.0 * self.gain as f64 * (1.0 + self.nbar) * (1.0 + self.nbar_reflected);
        50.max(self.k_min as usize + scale.ceil() as usize)
    }
}

/// Weights of the click element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickWeights {
    /// Vacuum weight: dark clicks.
    pub w0: f64,
    /// Single-photon weight: efficiency for a mode-matched photon.
    pub w_t: f64,
    pub n_max: usize,
    /// Certified bounds on the omitted parts of each sum.
    pub tail_w0: f64,
    pub tail_w_t: f64,
}

impl ClickWeights {
    /// Account for a subnormalized trigger mode of weight `W`.
    pub fn with_mode_weight(mut self, weight: f64) -> Self {
        self.w_t *= weight;
        self.tail_w_t *= weight;
        self
    }

    /// `Tr[Pi^2]/(Tr Pi)^2` for the vacuum and photon parts, which are
    /// orthogonal.
    pub fn purity(&self) -> Result<f64> {
        let total = self.w0 + self.w_t;
        if !(total > 0.0) {
            return Err(Error::ZeroWeights);
        }
        Ok((self.w0 * self.w0 + self.w_t * self.w_t) / (total * total))
    }
}

/// Bounds on `sum_{n > x}` of the inner sums of `w0` and `wT`, using
/// `N + G M > x  =>  N > x/2  or  G M > x/2`.
fn tail_bounds(cfg: &DetectorConfig, alpha2: f64, beta2: f64, x: usize) -> (f64, f64) {
    let r = thermal_ratio(cfg.nbar);
    let rp = thermal_ratio(cfg.nbar_reflected);
    let q = rp * beta2;
    let p_noise = r.powi((x / 2 + 1) as i32);
    let g = cfg.gain as usize;

    let m0 = x / (2 * g) + 1;
    let w0 = p_noise + (1.0 - rp) * q.powi(m0 as i32) / (1.0 - q);

    let j0 = x / (2 * g);
    let first = (1.0 - rp) / ((1.0 - q) * (1.0 - q));
    let rest = (1.0 - rp)
        * q.powi(j0 as i32)
        * ((j0 as f64 + 1.0) / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
    let wt = alpha2 * (first * p_noise + rest);
    (w0, wt)
}

fn sum_weights(cfg: &DetectorConfig, alpha2: f64, beta2: f64, n_max: usize) -> (f64, f64) {
    let g = cfg.gain as usize;
    let k_min = cfg.k_min as usize;
    let thermal: Vec<f64> = (0..=n_max).map(|n| thermal_pmf(n, cfg.nbar)).collect();
    let reflected: Vec<f64> = (0..=n_max / g + 1)
        .map(|m| thermal_pmf(m, cfg.nbar_reflected))
        .collect();
    let posterior_scale = if cfg.renormalized_posterior {
        cfg.eta
    } else {
        1.0
    };
    let threshold = threshold_probabilities(k_min, n_max, cfg.eta);

    let (mut w0, mut wt) = (0.0, 0.0);
    for n in k_min..=n_max {
        // Swapping the k and n sums leaves sum_{k=kmin}^{n} Pr(n|k) = Q(n).
        let q = threshold[n] * posterior_scale;
        if q == 0.0 {
            continue;
        }
        let mut s0 = 0.0;
        let mut st = 0.0;
        let mut beta_pow = 1.0;
        for m in 0..=n / g {
            let p = thermal[n - g * m];
            s0 += p * reflected[m] * beta_pow;
            if m >= 1 {
                // beta_pow holds beta^{2m}; the photon term needs beta^{2(m-1)}.
                st += m as f64 * p * reflected[m - 1] * alpha2 * prev_power(beta_pow, beta2, m);
            }
            beta_pow *= beta2;
        }
        w0 += q * s0;
        wt += q * st;
    }
    (w0, wt)
}

fn prev_power(beta_pow: f64, beta2: f64, m: usize) -> f64 {
    if beta2 == 0.0 {
        if m == 1 {
            1.0
        } else {
            0.0
        }
    } else {
        beta_pow / beta2
    }
}

/// `w0` and `wT` for a filter split `alpha^2 + beta^2 = 1`.
pub fn assemble_click_weights(cfg: &DetectorConfig, alpha: f64, beta: f64) -> Result<ClickWeights> {
    cfg.validate()?;
    if !(alpha >= 0.0 && beta >= 0.0) || alpha > 1.0 + 1e-12 || beta > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "alpha and beta must lie in [0, 1], got {alpha}, {beta}"
        )));
    }
    let (alpha2, beta2) = ((alpha * alpha).min(1.0), (beta * beta).min(1.0));
    let scale = if cfg.renormalized_posterior {
        cfg.eta
    } else {
        1.0
    };
    let fixed = cfg.n_max.is_some();
    let mut n_max = cfg.n_max.unwrap_or_else(|| cfg.default_n_max());
    loop {
        let (w0, w_t) = sum_weights(cfg, alpha2, beta2, n_max);
        let (b0, bt) = tail_bounds(cfg, alpha2, beta2, n_max);
        let (b0, bt) = (b0 * scale, bt * scale);
        let converged = b0 <= TRUNCATION_TOLERANCE * w0 && bt <= TRUNCATION_TOLERANCE * w_t;
        if converged {
            return Ok(ClickWeights {
                w0,
                w_t,
                n_max,
                tail_w0: b0,
                tail_w_t: bt,
            });
        }
        if fixed || n_max >= N_MAX_CAP {
            let (bound, partial) = if b0 > TRUNCATION_TOLERANCE * w0 {
                (b0, w0)
            } else {
                (bt, w_t)
            };
            return Err(Error::TruncationNotConverged {
                n_max,
                bound,
                partial,
            });
        }
        n_max = (2 * n_max).min(N_MAX_CAP);
    }
}

/// A click element `w0 |vac><vac| + wT |g><g|` for a specific trigger mode
/// and filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmClickElement {
    pub weights: ClickWeights,
    pub alpha: f64,
    pub beta: f64,
    /// The normalized transmitted state `g`.
    pub projected_state: ComplexEnvelope,
}

impl PovmClickElement {
    pub fn build(
        cfg: &DetectorConfig,
        trigger_spectrum: &ComplexEnvelope,
        filter: &FilterResponse,
        t_detect: f64,
    ) -> Result<Self> {
        let split = filter_overlap(trigger_spectrum, filter, t_detect)?;
        let weights = assemble_click_weights(cfg, split.alpha, split.beta)?;
        Ok(Self {
            weights,
            alpha: split.alpha,
            beta: split.beta,
            projected_state: split.transmitted,
        })
    }

    /// Click probability for a normalized single-photon spectrum `f`.
    pub fn detection_probability(&self, f: &ComplexEnvelope) -> Result<f64> {
        require_normalized(f)?;
        Ok(self.weights.w_t * self.projected_state.inner(f)?.norm_sqr())
    }

    pub fn purity(&self) -> Result<f64> {
        self.weights.purity()
    }
}

/// Band-gap test threshold, relative to `max |T|`.
pub const BANDGAP_FLOOR: f64 = 1e-6;
/// Support threshold of a target spectrum, relative to `max |f|`.
pub const SPECTRAL_FLOOR: f64 = 1e-8;

/// Trigger spectrum that makes the filtered detector project onto the
/// target spectrum `f`: `Psi = f e^{-i omega T} / T*`, normalized. Where `f`
/// is below the spectral floor the trigger spectrum is set to zero.
pub fn mode_match_compensation(
    target: &ComplexEnvelope,
    filter: &FilterResponse,
    t_detect: f64,
) -> Result<ComplexEnvelope> {
    if !target.grid().matches(&filter.grid) {
        return Err(Error::GridMismatch(
            "target spectrum and filter are sampled differently".into(),
        ));
    }
    require_normalized(target)?;
    let f = target.samples();
    let t = &filter.transmission;
    let f_floor = SPECTRAL_FLOOR * f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let t_floor = BANDGAP_FLOOR * t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let grid = filter.grid;

    let n = grid.len();
    let in_support = |j: usize| {
        f[j.saturating_sub(1)..(j + 2).min(n)]
            .iter()
            .any(|z| z.norm() > f_floor)
    };
    for j in 0..n {
        if !in_support(j) {
            continue;
        }
        if t[j].norm() <= t_floor {
            return Err(Error::BandGap {
                omega: grid.coord(j),
            });
        }
        if j == 0 || j + 1 == n {
            continue;
        }
        if let Some(s) = unresolved_zero(t, j, t_floor) {
            return Err(Error::BandGap {
                omega: grid.coord(j) + s * grid.spacing(),
            });
        }
    }
    let samples = f
        .iter()
        .zip(t)
        .enumerate()
        .map(|(j, (fj, tj))| {
            if fj.norm() <= f_floor {
                Complex64::default()
            } else {
                fj * Complex64::from_polar(1.0, -grid.coord(j) * t_detect) / tj.conj()
            }
        })
        .collect();
    ComplexEnvelope::new(grid, samples)?.normalized()
}

/// Look for a zero of `T` within half a cell of node `j` that the samples
/// cannot exclude. `T` is modelled by the quadratic through `j-1, j, j+1`;
/// a zero is reported when the smallest modulus of that quadratic is below
/// the floor plus the interpolation error estimated from third differences.
fn unresolved_zero(t: &[Complex64], j: usize, floor: f64) -> Option<f64> {
    let (lo, mid, hi) = (t[j - 1], t[j], t[j + 1]);
    let c = mid;
    let b = 0.5 * (hi - lo);
    let a = 0.5 * (hi + lo) - mid;
    let p = |s: f64| (a * s + b) * s + c;
    let dp = |s: f64| 2.0 * a * s + b;
    let mut third = 0.0f64;
    if j + 2 < t.len() {
        third = third.max((t[j + 2] - 3.0 * hi + 3.0 * mid - lo).norm());
    }
    if j >= 2 {
        third = third.max((hi - 3.0 * mid + 3.0 * lo - t[j - 2]).norm());
    }
    let slack = floor + 0.07 * third;

    // Start from the minimum of the linear part and polish on |p|^2.
    let mut s = if b.norm_sqr() > 0.0 {
        -(c.conj() * b).re / b.norm_sqr()
    } else {
        0.0
    };
    s = s.clamp(-0.5, 0.5);
    for _ in 0..8 {
        let g = (p(s).conj() * dp(s)).re;
        let dg = dp(s).norm_sqr() + (p(s).conj() * 2.0 * a).re;
        if dg <= 0.0 {
            break;
        }
        s = (s - g / dg).clamp(-0.5, 0.5);
    }
    let best = [s, -0.5, 0.5]
        .into_iter()
        .min_by(|x, y| p(*x).norm().total_cmp(&p(*y).norm()))
        .unwrap_or(0.0);
    (p(best).norm() <= slack).then_some(best)
}

fn hermitian_psd(gram: &DMatrix<Complex64>) -> Result<()> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::invalid("Gram matrix must be square"));
    }
    let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if (gram[(i, j)] - gram[(j, i)].conj()).norm() > 1e-10 * scale.max(1.0) {
                return Err(Error::invalid("Gram matrix is not Hermitian"));
            }
        }
    }
    if n > 0 {
        let eig = gram.clone().symmetric_eigenvalues();
        let lowest = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if lowest < -1e-10 * scale.max(1.0) {
            return Err(Error::invalid(format!(
                "Gram matrix is not positive semidefinite (eigenvalue {lowest})"
            )));
        }
    }
    Ok(())
}

/// `Tr[Pi^2] / (Tr Pi)^2` for `Pi = sum_i w_i |s_i><s_i|` given the Gram
/// matrix `<s_i|s_j>`.
pub fn povm_purity(weights: &[f64], gram: &DMatrix<Complex64>) -> Result<f64> {
    if gram.nrows() != weights.len() {
        return Err(Error::invalid("one weight per state is required"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    hermitian_psd(gram)?;
    let trace: f64 = weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * gram[(i, i)].re)
        .sum();
    if !(trace > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mut square = 0.0;
    for (i, wi) in weights.iter().enumerate() {
        for (j, wj) in weights.iter().enumerate() {
            square += wi * wj * gram[(i, j)].norm_sqr();
        }
    }
    Ok((square / (trace * trace)).min(1.0))
}

/// Gram matrix `<s_i|s_j>` of states on a common grid.
pub fn gram_matrix(states: &[ComplexEnvelope]) -> Result<DMatrix<Complex64>> {
    let n = states.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = states[i].inner(&states[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// One member of a family of click elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickComponent {
    pub w0: f64,
    pub w_t: f64,
    pub state: ComplexEnvelope,
}

/// A classical mixture of click elements.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedClickElement {
    pub components: Vec<ClickComponent>,
    pub mixing: Vec<f64>,
}

impl MixedClickElement {
    pub fn w0(&self) -> f64 {
        self.components
            .iter()
            .zip(&self.mixing)
            .map(|(c, p)| p * c.w0)
            .sum()
    }

    pub fn w_t(&self) -> f64 {
        self.components
            .iter()
            .zip(&self.mixing)
            .map(|(c, p)| p * c.w_t)
            .sum()
    }

    /// Click probability for a normalized single-photon input.
    pub fn detection_probability(&self, f: &ComplexEnvelope) -> Result<f64> {
        require_normalized(f)?;
        self.components
            .iter()
            .zip(&self.mixing)
            .map(|(c, p)| Ok(p * c.w_t * c.state.inner(f)?.norm_sqr()))
            .sum()
    }

    /// Purity of the mixed element, vacuum part included.
    pub fn purity(&self) -> Result<f64> {
        let states: Vec<ComplexEnvelope> =
            self.components.iter().map(|c| c.state.clone()).collect();
        let inner = gram_matrix(&states)?;
        let n = states.len();
        let mut gram = DMatrix::zeros(n + 1, n + 1);
        gram[(0, 0)] = Complex64::new(1.0, 0.0);
        gram.view_mut((1, 1), (n, n)).copy_from(&inner);
        let mut weights = vec![self.w0()];
        weights.extend(
            self.components
                .iter()
                .zip(&self.mixing)
                .map(|(c, p)| p * c.w_t),
        );
        povm_purity(&weights, &gram)
    }
}

/// Quadrature rule for a distribution over a classical parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPrior {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ParameterPrior {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::invalid(
                "prior needs matching, nonempty nodes and weights",
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "prior weights must be nonnegative and nodes finite",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Unnormalized { norm_sqr: total });
        }
        Ok(Self { nodes, weights })
    }

    pub fn point(x: f64) -> Self {
        Self {
            nodes: vec![x],
            weights: vec![1.0],
        }
    }

    /// Normal distribution sampled by Simpson's rule over `mean +- 6 width`.
    /// Zero width gives a point mass.
    pub fn gaussian(mean: f64, width: f64, nodes: usize) -> Result<Self> {
        if width == 0.0 {
            return Ok(Self::point(mean));
        }
        if !(width > 0.0) {
            return Err(Error::invalid("prior width must be >= 0"));
        }
        // At least 64 nodes across +-4 widths.
        if nodes < 97 {
            return Err(Error::invalid(
                "Gaussian prior needs at least 97 nodes over +-6 widths",
            ));
        }
        let grid = Grid::time(mean - 6.0 * width, mean + 6.0 * width, nodes)?;
        let q = grids::quadrature_weights(nodes);
        let h = grid.spacing();
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * width);
        let xs = grid.coords();
        let mut weights: Vec<f64> = xs
            .iter()
            .zip(&q)
            .map(|(x, qi)| qi * h * norm * (-(x - mean).powi(2) / (2.0 * width * width)).exp())
            .collect();
        // The truncated tails hold about 2e-9; fold them back in.
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(xs, weights)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Average a parameter-dependent click element over a prior.
pub fn fluctuation_average(
    prior: &ParameterPrior,
    element: impl Fn(f64) -> Result<ClickComponent>,
) -> Result<MixedClickElement> {
    let components = prior
        .nodes
        .iter()
        .map(|&x| element(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(MixedClickElement {
        components,
        mixing: prior.weights.clone(),
    })
}

/// `1 / sqrt(1 + (w/sigma)^2 / 2)`.
pub fn jitter_efficiency_closed_form(sigma: f64, jitter: f64) -> f64 {
    1.0 / (1.0 + 0.5 * (jitter / sigma).powi(2)).sqrt()
}

/// Matched-detection efficiency of an ideal Gaussian detector (width
/// `sigma`) whose centre time jitters with a Gaussian of width `jitter`,
/// by numerical averaging of shifted wavepacket overlaps.
pub fn gaussian_jitter_efficiency(sigma: f64, jitter: f64, prior_nodes: usize) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let prior = ParameterPrior::gaussian(0.0, jitter, prior_nodes)?;
    let reach = 6.0 * jitter + 10.0 * sigma;
    let n = ((2.0 * reach / (sigma / 8.0)).ceil() as usize) | 1;
    let grid = Grid::time(-reach, reach, n)?;
    let packet = |centre: f64| {
        ComplexEnvelope::from_fn(grid, move |t| {
            let x = t - centre;
            let a = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25)
                * (-(x * x) / (4.0 * sigma * sigma)).exp();
            Complex64::new(a, 0.0)
        })
    };
    let target = packet(0.0)?;
    let mixed = fluctuation_average(&prior, |tau| {
        Ok(ClickComponent {
            w0: 0.0,
            w_t: 1.0,
            state: packet(tau)?,
        })
    })?;
    mixed.detection_probability(&target)
}

/// Mixture weights `c_n = sum_m Tr(pi_n pi_m)/Tr(pi_m) Pr(X_m)` for outcomes
/// of a non-orthogonal auxiliary measurement.
pub fn outcome_mixing(outcome_gram: &DMatrix<f64>, probs: &[f64]) -> Result<Vec<f64>> {
    let n = outcome_gram.nrows();
    if outcome_gram.ncols() != n || probs.len() != n {
        return Err(Error::invalid(
            "outcome Gram matrix and probabilities must agree in size",
        ));
    }
    let complex = outcome_gram.map(|x| Complex64::new(x, 0.0));
    hermitian_psd(&complex)?;
    for m in 0..n {
        if !(outcome_gram[(m, m)] > 0.0) {
            return Err(Error::invalid(format!("outcome {m} has zero trace")));
        }
    }
    if probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::invalid("outcome probabilities must be nonnegative"));
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|m| outcome_gram[(i, m)] / outcome_gram[(m, m)] * probs[m])
                .sum()
        })
        .collect())
}

/// Mix click elements indexed by the outcomes of an auxiliary measurement.
pub fn mix_discrete_outcomes(
    elements: Vec<ClickComponent>,
    outcome_gram: &DMatrix<f64>,
    probs: &[f64],
) -> Result<MixedClickElement> {
    if elements.len() != probs.len() {
        return Err(Error::invalid("one element per outcome is required"));
    }
    let mixing = outcome_mixing(outcome_gram, probs)?;
    Ok(MixedClickElement {
        components: elements,
        mixing,
    })
}

/// One row of a weight table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub eta: f64,
    #[serde(rename = "G")]
    pub gain: u32,
    pub k_min: u32,
    pub nbar: f64,
    pub nbar_reflected: f64,
    pub beta2: f64,
    pub w0: f64,
    #[serde(rename = "wT")]
    pub w_t: f64,
    pub purity: f64,
}
