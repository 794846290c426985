//! Super-resolved discrimination of two nearly identical sources.
//!
//! The sources emit `(phi1 +- sqrt(eps) phi2)/sqrt(1 + eps)` with equal
//! probability. Two detectors projecting onto the orthonormal `phi1` and
//! `phi2` click with `P1 = eta/(1 + eps)` and `P2 = eta eps/(1 + eps)`, so
//! `N2/N1` estimates `eps` directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::ComplexEnvelope;
use crate::inverse::{gaussian_target, hermite_gaussian_target, TargetGridOptions};

/// Largest `|<phi1|phi2>|` accepted for the detector basis.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperresScenario {
    epsilon: f64,
    eta: f64,
    phi1: ComplexEnvelope,
    phi2: ComplexEnvelope,
}

impl SuperresScenario {
    /// The basis states are renormalized on their grid.
    pub fn new(
        epsilon: f64,
        eta: f64,
        phi1: &ComplexEnvelope,
        phi2: &ComplexEnvelope,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !phi1.grid().matches(phi2.grid()) {
            return Err(Error::GridMismatch("basis states must share a grid".into()));
        }
        let phi1 = phi1.normalized()?;
        let phi2 = phi2.normalized()?;
        let overlap = phi1.inner(&phi2)?.norm();
        if overlap > ORTHOGONALITY_TOLERANCE {
            return Err(Error::NonOrthogonalBasis { overlap });
        }
        Ok(Self {
            epsilon,
            eta,
            phi1,
            phi2,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The two source states.
    pub fn sources(&self) -> [ComplexEnvelope; 2] {
        let a = 1.0 / (1.0 + self.epsilon).sqrt();
        let b = a * self.epsilon.sqrt();
        let combine = |sign: f64| {
            let samples = self
                .phi1
                .samples()
                .iter()
                .zip(self.phi2.samples())
                .map(|(x, y)| x * a + y * (sign * b))
                .collect();
            ComplexEnvelope::new(*self.phi1.grid(), samples)
                .expect("finite combination of finite samples")
        };
        [combine(1.0), combine(-1.0)]
    }
}

/// Click probabilities of the two detectors, by the Born rule and in closed
/// form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p1_closed: f64,
    pub p2_closed: f64,
}

/// `P_i = eta Tr[|phi_i><phi_i| rho]` with `rho` the equal mixture of the
/// two sources, evaluated by quadrature.
pub fn click_probabilities(scenario: &SuperresScenario) -> Result<ClickProbabilities> {
    let sources = scenario.sources();
    let born = |phi: &ComplexEnvelope| -> Result<f64> {
        let mut p = 0.0;
        for s in &sources {
            p += 0.5 * phi.inner(s)?.norm_sqr();
        }
        Ok(scenario.eta * p)
    };
    let (eps, eta) = (scenario.epsilon, scenario.eta);
    Ok(ClickProbabilities {
        p1: born(&scenario.phi1)?,
        p2: born(&scenario.phi2)?,
        p1_closed: eta / (1.0 + eps),
        p2_closed: eta * eps / (1.0 + eps),
    })
}

/// Trials drawn from one random stream.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Name of the generator recorded with sampled results.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha), stream = chunk index";

/// Counts and the ratio estimate from a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub n_trials: u64,
    pub seed: u64,
    pub n1: u64,
    pub n2: u64,
    pub epsilon_hat: f64,
    pub std_error: f64,
    pub rng: String,
}

fn sample_chunk(seed: u64, chunk: u64, trials: u64, p1: f64, p12: f64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let (mut n1, mut n2) = (0, 0);
    for _ in 0..trials {
        let u: f64 = rng.random();
        if u < p1 {
            n1 += 1;
        } else if u < p12 {
            n2 += 1;
        }
    }
    (n1, n2)
}

/// Simulate `n_trials` single-photon trials with outcome probabilities
/// `(P1, P2, 1 - P1 - P2)` and estimate `eps = N2/N1`. The trials are split
/// into fixed chunks with one stream each, so the counts do not depend on
/// the number of threads.
pub fn estimate_epsilon(
    probabilities: &ClickProbabilities,
    n_trials: u64,
    seed: u64,
) -> Result<EpsilonEstimate> {
    if n_trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let (p1, p2) = (probabilities.p1, probabilities.p2);
    if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "invalid click probabilities ({p1}, {p2})"
        )));
    }
    let chunks = n_trials.div_ceil(CHUNK_TRIALS);
    let (n1, n2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let trials = CHUNK_TRIALS.min(n_trials - c * CHUNK_TRIALS);
            sample_chunk(seed, c, trials, p1, p1 + p2)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if n1 == 0 {
        return Err(Error::NoReferenceClicks);
    }
    let (a, b) = (n1 as f64, n2 as f64);
    Ok(EpsilonEstimate {
        n_trials,
        seed,
        n1,
        n2,
        epsilon_hat: b / a,
        // eps_hat sqrt(1/N2 + 1/N1), written to stay finite at N2 = 0.
        std_error: (b * (a + b)).sqrt() / a.powf(1.5),
        rng: RNG_NAME.to_string(),
    })
}

/// Gaussian and gap-smoothed first-order Hermite-Gaussian pair on a common
/// grid, as produced by the inverse module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteGaussianBasis {
    pub sigma: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub omega0: f64,
    pub t_detect: f64,
    pub gap_halfwidth: f64,
    pub smoothing_width: f64,
    #[serde(default)]
    pub grid: Option<TargetGridOptions>,
}

impl HermiteGaussianBasis {
    pub fn build(&self) -> Result<(ComplexEnvelope, ComplexEnvelope)> {
        let opts = self.grid.unwrap_or_default();
        let g = gaussian_target(self.sigma, self.t0, self.omega0, self.t_detect, &opts)?;
        let hg = hermite_gaussian_target(
            self.sigma,
            self.t0,
            self.omega0,
            self.t_detect,
            self.gap_halfwidth,
            self.smoothing_width,
            &opts,
        )?;
        Ok((g.envelope(), hg.envelope()))
    }
}
