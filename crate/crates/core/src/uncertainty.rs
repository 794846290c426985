//! Entropic widths of retrodictive distributions.
//!
//! A density is binned on its grid (one bin per node, width `dX`), the
//! Shannon entropy `H = -sum p_j log2 p_j` of the bin masses is taken, and
//! the width is `dX_H = 2^H dX`. For Fourier-conjugate densities
//! `Dt Domega >= e pi`, with equality for Gaussians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{require_normalized, TriggerMode};
use crate::grids::{fourier_transform, ComplexEnvelope, FourierSign, Grid};

/// Tolerance on `sum p_j = 1`.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// A binned probability density over time or frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrodictiveDistribution {
    grid: Grid,
    density: Vec<f64>,
}

impl RetrodictiveDistribution {
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} densities for a {}-point grid",
                density.len(),
                grid.len()
            )));
        }
        for (i, &p) in density.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if p < 0.0 {
                return Err(Error::NegativeMass {
                    index: i,
                    mass: p * grid.spacing(),
                });
            }
        }
        let total: f64 = density.iter().sum::<f64>() * grid.spacing();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Unnormalized { norm_sqr: total });
        }
        Ok(Self { grid, density })
    }

    /// `|f|^2`, rescaled so the bin masses add up to one.
    pub fn from_envelope(f: &ComplexEnvelope) -> Result<Self> {
        Self::from_unnormalized(*f.grid(), f.intensity())
    }

    fn from_unnormalized(grid: Grid, mut density: Vec<f64>) -> Result<Self> {
        let total: f64 = density.iter().sum::<f64>() * grid.spacing();
        if !(total > 0.0) {
            return Err(Error::ZeroWeights);
        }
        density.iter_mut().for_each(|p| *p /= total);
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bin_size(&self) -> f64 {
        self.grid.spacing()
    }

    /// Bin masses `p_j = density_j dX`.
    pub fn masses(&self) -> Vec<f64> {
        let dx = self.bin_size();
        self.density.iter().map(|p| p * dx).collect()
    }

    /// Merge every `factor` adjacent bins. A trailing partial group is
    /// merged into a bin of its own.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("coarsening factor must be positive"));
        }
        let dx = self.bin_size() * factor as f64;
        let density: Vec<f64> = self
            .density
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        let first = self.grid.start() + 0.5 * (factor as f64 - 1.0) * self.bin_size();
        let grid = Grid::from_spacing(self.grid.domain(), first, dx, density.len())?;
        Self::from_unnormalized(grid, density)
    }
}

/// Bin size, entropy in bits and the resulting width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropicWidth {
    pub bin: f64,
    pub entropy_bits: f64,
    pub width: f64,
}

pub fn entropic_width(dist: &RetrodictiveDistribution) -> EntropicWidth {
    let entropy_bits = -dist
        .masses()
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>();
    EntropicWidth {
        bin: dist.bin_size(),
        entropy_bits,
        width: entropy_bits.exp2() * dist.bin_size(),
    }
}

/// `dX_H = 2^H dX`.
pub fn entropic_uncertainty(dist: &RetrodictiveDistribution) -> f64 {
    entropic_width(dist).width
}

/// Density `sum_i (w_i / sum w) |phi_i|^2` of a mixture of normalized
/// states sampled on a common grid.
pub fn mixture_distribution(
    states: &[ComplexEnvelope],
    weights: &[f64],
) -> Result<RetrodictiveDistribution> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::invalid(
            "need one weight per state and at least one state",
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid(format!(
            "mixture weights must be nonnegative, got {w}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroWeights);
    }
    let grid = *states[0].grid();
    let mut density = vec![0.0; grid.len()];
    for (state, &w) in states.iter().zip(weights) {
        if !state.grid().matches(&grid) {
            return Err(Error::GridMismatch(
                "mixture states must share a grid".into(),
            ));
        }
        require_normalized(state)?;
        if w == 0.0 {
            continue;
        }
        for (d, p) in density.iter_mut().zip(state.intensity()) {
            *d += w / total * p;
        }
    }
    RetrodictiveDistribution::from_unnormalized(grid, density)
}

/// Settings for the spectral side of [`time_frequency_product`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfOptions {
    #[serde(default)]
    pub sign: FourierSign,
    /// Zero-padding factor of the transform.
    pub pad_factor: usize,
    /// Fraction of frequency bins, split between both ends, checked for
    /// aliased mass.
    pub tail_fraction: f64,
    /// Largest spectral mass allowed in those bins.
    pub tail_tolerance: f64,
}

impl Default for TfOptions {
    fn default() -> Self {
        Self {
            sign: FourierSign::Positive,
            pad_factor: 4,
            tail_fraction: 0.05,
            tail_tolerance: 1e-6,
        }
    }
}

/// Conjugate entropic widths of a trigger mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFrequencyProduct {
    pub time: EntropicWidth,
    pub frequency: EntropicWidth,
    pub product: f64,
    /// Widths recomputed with doubled bins.
    pub time_coarse: f64,
    pub frequency_coarse: f64,
}

impl TimeFrequencyProduct {
    /// Largest relative change of either width between bin sizes `dX` and `2 dX`.
    pub fn refinement_change(&self) -> f64 {
        let dt = (self.time.width - self.time_coarse).abs() / self.time.width;
        let dw = (self.frequency.width - self.frequency_coarse).abs() / self.frequency.width;
        dt.max(dw)
    }
}

/// Mass of the outermost `fraction` of the bins, half at each end.
fn edge_mass(dist: &RetrodictiveDistribution, fraction: f64) -> f64 {
    let masses = dist.masses();
    let k = ((0.5 * fraction * masses.len() as f64).ceil() as usize)
        .max(1)
        .min(masses.len() / 2);
    masses[..k].iter().sum::<f64>() + masses[masses.len() - k..].iter().sum::<f64>()
}

/// `Dt` from `|Psi(t)|^2 / W`, `Domega` from `|FT[Psi](omega)|^2 / W`, and
/// their product.
pub fn time_frequency_product(
    mode: &TriggerMode,
    options: &TfOptions,
) -> Result<TimeFrequencyProduct> {
    envelope_time_frequency_product(mode.psi(), options)
}

/// [`time_frequency_product`] for any time-domain envelope.
pub fn envelope_time_frequency_product(
    psi: &ComplexEnvelope,
    options: &TfOptions,
) -> Result<TimeFrequencyProduct> {
    if !(options.tail_fraction > 0.0 && options.tail_fraction < 1.0) {
        return Err(Error::invalid("tail fraction must lie in (0, 1)"));
    }
    let time = RetrodictiveDistribution::from_envelope(psi)?;
    let spectrum = fourier_transform(psi, options.sign, options.pad_factor)?;
    let frequency = RetrodictiveDistribution::from_envelope(&spectrum)?;
    let tail_mass = edge_mass(&frequency, options.tail_fraction);
    if tail_mass > options.tail_tolerance {
        return Err(Error::UnderResolvedSpectrum {
            tail_mass,
            tolerance: options.tail_tolerance,
        });
    }
    let t = entropic_width(&time);
    let w = entropic_width(&frequency);
    Ok(TimeFrequencyProduct {
        time: t,
        frequency: w,
        product: t.width * w.width,
        time_coarse: entropic_uncertainty(&time.coarsen(2)?),
        frequency_coarse: entropic_uncertainty(&frequency.coarsen(2)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::Domain;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn gaussian_density(grid: Grid, mu: f64, sigma: f64) -> Vec<f64> {
        grid.coords()
            .iter()
            .map(|x| {
                (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
            })
            .collect()
    }

    fn gaussian_state(grid: Grid, mu: f64, sigma: f64) -> ComplexEnvelope {
        let d = gaussian_density(grid, mu, sigma);
        ComplexEnvelope::new(
            grid,
            d.into_iter()
                .map(|p| Complex64::new(p.sqrt(), 0.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_width_is_its_support() {
        let g = Grid::from_spacing(Domain::Time, 0.0, 0.01, 300).unwrap();
        let d = RetrodictiveDistribution::new(g, vec![1.0 / 3.0; 300]).unwrap();
        assert!((entropic_uncertainty(&d) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_adjacent_bins_give_two_bins() {
        let g = Grid::from_spacing(Domain::Time, 0.0, 0.5, 6).unwrap();
        let d = RetrodictiveDistribution::new(g, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        let w = entropic_width(&d);
        assert!((w.entropy_bits - 1.0).abs() < 1e-15);
        assert!((w.width - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_width() {
        let sigma = 0.7;
        let g = Grid::time(-8.0 * sigma, 8.0 * sigma, 4097).unwrap();
        let d = RetrodictiveDistribution::from_unnormalized(g, gaussian_density(g, 0.0, sigma))
            .unwrap();
        let exact = (2.0 * PI * E).sqrt() * sigma;
        assert!((entropic_uncertainty(&d) - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn negative_mass_is_rejected() {
        let g = Grid::from_spacing(Domain::Time, 0.0, 1.0, 3).unwrap();
        assert!(matches!(
            RetrodictiveDistribution::new(g, vec![0.5, 0.6, -0.1]),
            Err(Error::NegativeMass { index: 2, .. })
        ));
    }

    #[test]
    fn mixture_of_disjoint_states_gains_one_bit() {
        let g = Grid::time(-20.0, 20.0, 4001).unwrap();
        let a = gaussian_state(g, -8.0, 1.0);
        let b = gaussian_state(g, 8.0, 1.0);
        let single =
            entropic_width(&mixture_distribution(std::slice::from_ref(&a), &[1.0]).unwrap());
        let mixed = mixture_distribution(&[a.clone(), b], &[0.5, 0.5]).unwrap();
        let lobe: f64 = mixed.masses()[..2001].iter().sum();
        assert!((lobe - 0.5).abs() < 1e-10);
        assert!((entropic_width(&mixed).entropy_bits - single.entropy_bits - 1.0).abs() < 1e-9);
        let dropped =
            mixture_distribution(&[a.clone(), gaussian_state(g, 8.0, 1.0)], &[2.0, 0.0]).unwrap();
        assert_eq!(dropped, mixture_distribution(&[a], &[1.0]).unwrap());
        assert!(matches!(
            mixture_distribution(&[gaussian_state(g, 0.0, 1.0)], &[0.0]),
            Err(Error::ZeroWeights)
        ));
    }

    #[test]
    fn gaussian_envelope_saturates_bound() {
        for sigma in [0.5, 1.0, 2.0] {
            let g = Grid::time(-8.0 * sigma, 8.0 * sigma, 4097).unwrap();
            let r = envelope_time_frequency_product(
                &gaussian_state(g, 0.0, sigma),
                &TfOptions::default(),
            )
            .unwrap();
            assert!((r.product - E * PI).abs() / (E * PI) < 1e-3, "{r:?}");
            assert!(r.refinement_change() < 5e-3);
        }
    }

    #[test]
    fn aliasing_is_detected() {
        // A sharp edge leaves a 1/omega^2 tail up to the band edge.
        let g = Grid::time(-1.0, 1.0, 201).unwrap();
        let box_ = ComplexEnvelope::new(g, vec![Complex64::new(0.5f64.sqrt(), 0.0); 201]).unwrap();
        assert!(matches!(
            envelope_time_frequency_product(&box_, &TfOptions::default()),
            Err(Error::UnderResolvedSpectrum { .. })
        ));
    }

    proptest! {
        #[test]
        fn width_is_translation_invariant_and_scales(shift in -3.0f64..3.0, scale in 0.3f64..3.0) {
            let base = Grid::time(-10.0, 10.0, 801).unwrap();
            let density = gaussian_density(base, 0.0, 1.0);
            let d0 = RetrodictiveDistribution::from_unnormalized(base, density.clone()).unwrap();
            let moved = Grid::time(-10.0 + shift, 10.0 + shift, 801).unwrap();
            let d1 = RetrodictiveDistribution::from_unnormalized(moved, density.clone()).unwrap();
            let scaled = Grid::time(-10.0 * scale, 10.0 * scale, 801).unwrap();
            let d2 = RetrodictiveDistribution::from_unnormalized(scaled, density).unwrap();
            let w0 = entropic_uncertainty(&d0);
            prop_assert!((entropic_uncertainty(&d1) - w0).abs() < 1e-12 * w0);
            prop_assert!((entropic_uncertainty(&d2) - scale * w0).abs() < 1e-12 * scale * w0);
        }

        #[test]
        fn mixing_never_narrows(mu in -4.0f64..4.0, s2 in 0.5f64..2.0, w in 0.05f64..0.95) {
            let g = Grid::time(-16.0, 16.0, 1601).unwrap();
            let a = gaussian_state(g, 0.0, 1.0);
            let b = gaussian_state(g, mu, s2);
            let wa = entropic_uncertainty(&mixture_distribution(std::slice::from_ref(&a), &[1.0]).unwrap());
            let wb = entropic_uncertainty(&mixture_distribution(std::slice::from_ref(&b), &[1.0]).unwrap());
            let wm = entropic_uncertainty(&mixture_distribution(&[a, b], &[w, 1.0 - w]).unwrap());
            prop_assert!(wm >= wa.min(wb) * (1.0 - 1e-12));
        }
    }
}
