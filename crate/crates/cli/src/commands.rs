use std::f64::consts::{E, PI};
use std::fs::File;
use std::io::BufWriter;

use povm_forge_core::applications::{
    click_probabilities, estimate_epsilon, HermiteGaussianBasis, SuperresScenario,
};
use povm_forge_core::detector::{
    assemble_click_weights, gaussian_jitter_efficiency, jitter_efficiency_closed_form,
    mode_match_compensation, DetectorConfig, FilterDescriptor, PovmClickElement, WeightRow,
};
use povm_forge_core::inverse::{roundtrip_error, TargetDescriptor, TargetGridOptions};
use povm_forge_core::io::{write_envelope_file, write_json_file, write_records};
use povm_forge_core::uncertainty::TfOptions;
use povm_forge_core::{
    detection_probability, fourier_transform, integrate_langevin, invert_to_drive,
    polynomial_drive, retrodict, time_frequency_product, ComplexEnvelope, DetectorDrive,
    FourierSign, LangevinOptions, PolynomialDrive, PolynomialFamily, RetrodictiveDistribution,
    TriggerMode,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    ForwardConfig, InvertConfig, JitterConfig, ModeSpec, PovmConfig, SuperresConfig,
    UncertaintyConfig,
};
use crate::error::CliError;
use crate::manifest::Outputs;

type Outcome = Result<Value, CliError>;

fn records<T: Serialize>(out: &mut Outputs, name: &str, rows: &[T]) -> Result<(), CliError> {
    let path = out.file(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_records(BufWriter::new(file), rows)?;
    Ok(())
}

fn envelope(out: &mut Outputs, name: &str, env: &ComplexEnvelope) -> Result<(), CliError> {
    write_envelope_file(out.file(name), env)?;
    Ok(())
}

fn json_file(out: &mut Outputs, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    write_json_file(out.file(name), value)?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Serialize)]
struct DriveRow {
    t: f64,
    kappa: f64,
    sqrt_kappa: f64,
    delta: f64,
}

fn drive_rows(drive: &DetectorDrive) -> Vec<DriveRow> {
    drive
        .grid()
        .coords()
        .into_iter()
        .zip(drive.kappa())
        .zip(drive.delta())
        .map(|((t, &kappa), &delta)| DriveRow {
            t,
            kappa,
            sqrt_kappa: kappa.sqrt(),
            delta,
        })
        .collect()
}

#[derive(Serialize)]
struct ModeRow {
    order: u32,
    t: f64,
    amplitude: f64,
    phase: f64,
    sqrt_kappa: f64,
}

/// Amplitude and coupling curves for each polynomial order.
pub fn forward(cfg: &ForwardConfig, out: &mut Outputs) -> Outcome {
    if cfg.orders.is_empty() {
        return Err(usage("`orders` must list at least one order"));
    }
    let runs = cfg
        .orders
        .par_iter()
        .map(|&order| {
            let desc = cfg.drive(order);
            let drive = polynomial_drive(&desc, cfg.n_points)?;
            let mode = retrodict(&drive)?;
            Ok((desc, drive, mode))
        })
        .collect::<Result<Vec<(PolynomialDrive, DetectorDrive, TriggerMode)>, povm_forge_core::Error>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (desc, drive, mode) in &runs {
        let amplitude = mode.amplitude();
        let phase = mode.phase();
        for (i, t) in drive.grid().coords().into_iter().enumerate() {
            rows.push(ModeRow {
                order: desc.order,
                t,
                amplitude: amplitude[i],
                phase: phase[i],
                sqrt_kappa: drive.kappa()[i].sqrt(),
            });
        }
        summary.push(json!({
            "order": desc.order,
            "weight": mode.weight(),
            "peak_time": mode.peak_time(),
            "peak_amplitude": mode.peak_amplitude(),
            "window_start": drive.start_time(),
        }));
    }
    records(out, "forward.csv", &rows)?;
    let descriptors: Vec<&PolynomialDrive> = runs.iter().map(|r| &r.0).collect();
    json_file(out, "drives.json", &descriptors)?;
    Ok(json!({ "family": cfg.family, "modes": summary }))
}

/// Drive for a target wavepacket, with the roundtrip check.
pub fn invert(cfg: &InvertConfig, out: &mut Outputs) -> Outcome {
    let target = cfg.target.build()?;
    let drive = invert_to_drive(&target)?;
    let mode = retrodict(&drive)?;
    let err = roundtrip_error(&target, &mode)?;
    records(out, "drive.csv", &drive_rows(&drive))?;
    envelope(out, "target.csv", &target.envelope())?;
    envelope(out, "mode.csv", mode.psi())?;
    json_file(out, "target.json", &cfg.target)?;
    Ok(json!({
        "weight": mode.weight(),
        "one_minus_weight": (-drive.integrated_kappa()).exp(),
        "detection_time": drive.detection_time(),
        "window_start": drive.start_time(),
        "n_points": drive.grid().len(),
        "kappa_max": drive.kappa().iter().cloned().fold(0.0, f64::max),
        "roundtrip": err,
    }))
}

fn mode_for(spec: &ModeSpec) -> Result<TriggerMode, CliError> {
    let drive = match (&spec.drive, &spec.target) {
        (Some(d), None) => polynomial_drive(d, spec.n_points.unwrap_or(4097))?,
        (None, Some(t)) => {
            if spec.n_points.is_some() {
                return Err(usage(format!(
                    "mode `{}`: n_points applies to drives only",
                    spec.label
                )));
            }
            invert_to_drive(&t.build()?)?
        }
        _ => {
            return Err(usage(format!(
                "mode `{}` needs exactly one of `drive` or `target`",
                spec.label
            )))
        }
    };
    Ok(retrodict(&drive)?)
}

#[derive(Serialize)]
struct UncertaintyRow<'a> {
    label: &'a str,
    time_bin: f64,
    time_entropy_bits: f64,
    delta_t: f64,
    frequency_bin: f64,
    frequency_entropy_bits: f64,
    delta_omega: f64,
    product: f64,
    product_over_e_pi: f64,
    refinement_change: f64,
}

#[derive(Serialize)]
struct DensityRow {
    x: f64,
    density: f64,
}

fn density_rows(dist: &RetrodictiveDistribution) -> Vec<DensityRow> {
    dist.grid()
        .coords()
        .into_iter()
        .zip(dist.density())
        .map(|(x, &density)| DensityRow { x, density })
        .collect()
}

/// Entropic widths and their product for each mode.
pub fn uncertainty(cfg: &UncertaintyConfig, out: &mut Outputs) -> Outcome {
    let options = cfg.options.unwrap_or_default();
    for spec in &cfg.modes {
        let ok = !spec.label.is_empty()
            && spec
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(usage(format!(
                "label `{}` must be nonempty ASCII letters, digits, - or _",
                spec.label
            )));
        }
    }
    let mut rows = Vec::new();
    let mut triples = Vec::new();
    for spec in &cfg.modes {
        let mode = mode_for(spec)?;
        let tf = time_frequency_product(&mode, &options)?;
        rows.push(UncertaintyRow {
            label: &spec.label,
            time_bin: tf.time.bin,
            time_entropy_bits: tf.time.entropy_bits,
            delta_t: tf.time.width,
            frequency_bin: tf.frequency.bin,
            frequency_entropy_bits: tf.frequency.entropy_bits,
            delta_omega: tf.frequency.width,
            product: tf.product,
            product_over_e_pi: tf.product / (E * PI),
            refinement_change: tf.refinement_change(),
        });
        triples.push(json!({ "label": spec.label, "time": tf.time, "frequency": tf.frequency, "product": tf.product }));

        let time = RetrodictiveDistribution::from_envelope(mode.psi())?;
        let spectrum = fourier_transform(mode.psi(), options.sign, options.pad_factor)?;
        let freq = RetrodictiveDistribution::from_envelope(&spectrum)?;
        records(
            out,
            &format!("density_{}_time.csv", spec.label),
            &density_rows(&time),
        )?;
        records(
            out,
            &format!("density_{}_frequency.csv", spec.label),
            &density_rows(&freq),
        )?;
    }
    records(out, "uncertainty.csv", &rows)?;
    json_file(out, "uncertainty.json", &triples)?;
    Ok(json!({ "options": options, "modes": triples }))
}

fn mode_match(cfg: &crate::config::ModeMatchConfig, out: &mut Outputs) -> Outcome {
    let target = cfg.target.build()?;
    let t_detect = target.detection_time();
    let spectrum = fourier_transform(&target.envelope(), FourierSign::Positive, cfg.pad_factor)?
        .normalized()?;
    let filter = cfg.filter.build(*spectrum.grid())?;
    let trigger = mode_match_compensation(&spectrum, &filter, t_detect)?;
    let element = PovmClickElement::build(&cfg.detector, &trigger, &filter, t_detect)?;
    let p = element.detection_probability(&spectrum)?;
    envelope(out, "target_spectrum.csv", &spectrum)?;
    envelope(out, "trigger_spectrum.csv", &trigger)?;
    Ok(json!({
        "alpha2": element.alpha * element.alpha,
        "beta2": element.beta * element.beta,
        "weights": element.weights,
        "purity": element.purity()?,
        "detection_probability": p,
        "probability_over_wt": p / element.weights.w_t,
    }))
}

/// Weight table over the parameter lattice.
pub fn povm(cfg: &PovmConfig, out: &mut Outputs) -> Outcome {
    let mut lattice = Vec::new();
    for &eta in &cfg.eta {
        for &gain in &cfg.gain {
            for &k_min in &cfg.k_min {
                for &nbar in &cfg.nbar {
                    for &nbar_reflected in &cfg.nbar_reflected {
                        for &beta2 in &cfg.beta2 {
                            lattice.push((eta, gain, k_min, nbar, nbar_reflected, beta2));
                        }
                    }
                }
            }
        }
    }
    if lattice.is_empty() {
        return Err(usage("every lattice axis needs at least one value"));
    }
    let rows = lattice
        .par_iter()
        .map(|&(eta, gain, k_min, nbar, nbar_reflected, beta2)| {
            if !(0.0..=1.0).contains(&beta2) {
                return Err(povm_forge_core::Error::InvalidParameter(format!(
                    "beta2 must lie in [0, 1], got {beta2}"
                )));
            }
            let det = DetectorConfig {
                eta,
                gain,
                nbar,
                nbar_reflected,
                k_min,
                n_max: None,
                renormalized_posterior: cfg.renormalized_posterior,
            };
            let w = assemble_click_weights(&det, (1.0 - beta2).sqrt(), beta2.sqrt())?;
            Ok(WeightRow {
                eta,
                gain,
                k_min,
                nbar,
                nbar_reflected,
                beta2,
                w0: w.w0,
                w_t: w.w_t,
                purity: w.purity()?,
            })
        })
        .collect::<Result<Vec<_>, povm_forge_core::Error>>()?;
    records(out, "weights.csv", &rows)?;
    let matched = cfg
        .mode_match
        .as_ref()
        .map(|m| mode_match(m, out))
        .transpose()?;
    Ok(json!({ "rows": rows.len(), "mode_match": matched }))
}

#[derive(Serialize)]
struct JitterRow {
    ratio: f64,
    efficiency: f64,
    closed_form: f64,
    asymptote: f64,
}

/// Efficiency of a jittered Gaussian detector against its closed form.
pub fn jitter(cfg: &JitterConfig, out: &mut Outputs) -> Outcome {
    let rows = cfg
        .ratios
        .par_iter()
        .map(|&ratio| {
            if ratio.is_nan() || ratio < 0.0 {
                return Err(povm_forge_core::Error::InvalidParameter(format!(
                    "jitter ratio must be >= 0, got {ratio}"
                )));
            }
            let w = ratio * cfg.sigma;
            Ok(JitterRow {
                ratio,
                efficiency: gaussian_jitter_efficiency(cfg.sigma, w, cfg.prior_nodes)?,
                closed_form: jitter_efficiency_closed_form(cfg.sigma, w),
                asymptote: if ratio > 0.0 {
                    2f64.sqrt() / ratio
                } else {
                    f64::INFINITY
                },
            })
        })
        .collect::<Result<Vec<_>, povm_forge_core::Error>>()?;
    let worst = rows
        .iter()
        .map(|r| (r.efficiency - r.closed_form).abs())
        .fold(0.0, f64::max);
    records(out, "jitter.csv", &rows)?;
    Ok(json!({ "points": rows.len(), "max_deviation_from_closed_form": worst }))
}

/// Analytic click probabilities and the sampled ratio estimate.
pub fn superres(cfg: &SuperresConfig, seed: u64, out: &mut Outputs) -> Outcome {
    let (phi1, phi2) = cfg.basis.build()?;
    let scenario = SuperresScenario::new(cfg.epsilon, cfg.eta, &phi1, &phi2)?;
    let probabilities = click_probabilities(&scenario)?;
    let estimate = estimate_epsilon(&probabilities, cfg.n_trials, seed)?;
    let results = json!({
        "epsilon": cfg.epsilon,
        "eta": cfg.eta,
        "probabilities": probabilities,
        "estimate": estimate,
    });
    json_file(out, "superres.json", &results)?;
    Ok(results)
}

#[derive(Serialize)]
struct SelfCheck {
    name: &'static str,
    pass: bool,
    value: f64,
    tolerance: f64,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> SelfCheck {
    SelfCheck {
        name,
        pass: value.abs() <= tolerance,
        value,
        tolerance,
    }
}

fn gaussian_descriptor(t_detect: f64) -> TargetDescriptor {
    TargetDescriptor::Gaussian {
        sigma: 1.0,
        t0: 0.0,
        omega0: 2.0,
        t_detect,
        grid: Some(TargetGridOptions::default()),
    }
}

/// Fast invariant suite over every module.
pub fn selftest(out: &mut Outputs) -> Outcome {
    let mut checks = Vec::new();

    let mut weight_gap: f64 = 0.0;
    for order in 0..=5 {
        let drive = polynomial_drive(
            &PolynomialDrive::standard(PolynomialFamily::TwoSided, order, 1.0),
            4097,
        )?;
        let mode = retrodict(&drive)?;
        weight_gap = weight_gap.max((mode.psi().norm_sqr() - drive.weight()).abs());
    }
    checks.push(check("weight consistency", weight_gap, 1e-8));

    let target = gaussian_descriptor(2.0).build()?;
    let mode = retrodict(&invert_to_drive(&target)?)?;
    checks.push(check(
        "gaussian roundtrip",
        roundtrip_error(&target, &mode)?.amplitude_l2,
        1e-6,
    ));

    let mut ode_gap: f64 = 0.0;
    for order in 0..=3 {
        let drive = polynomial_drive(
            &PolynomialDrive::standard(PolynomialFamily::TwoSided, order, 1.0),
            2049,
        )?;
        let input = ComplexEnvelope::from_fn(*drive.grid(), |t| {
            povm_forge_core::Complex64::from_polar((-(t + 1.0).powi(2) / 0.5).exp(), 0.7 * t)
        })?
        .normalized()?;
        let ode = integrate_langevin(&drive, &input, &LangevinOptions::default())?.norm_sqr();
        ode_gap = ode_gap.max((ode - detection_probability(&retrodict(&drive)?, &input)?).abs());
    }
    checks.push(check("ODE and quadrature agree", ode_gap, 1e-6));

    let long = retrodict(&invert_to_drive(&gaussian_descriptor(7.0).build()?)?)?;
    let tf = time_frequency_product(
        &long,
        &TfOptions {
            pad_factor: 8,
            ..TfOptions::default()
        },
    )?;
    checks.push(check(
        "gaussian entropic product",
        tf.product / (E * PI) - 1.0,
        0.01,
    ));

    let noiseless = assemble_click_weights(
        &DetectorConfig {
            eta: 1.0,
            gain: 4,
            nbar: 0.0,
            nbar_reflected: 0.0,
            k_min: 2,
            n_max: None,
            renormalized_posterior: false,
        },
        1.0,
        0.0,
    )?;
    checks.push(check(
        "noiseless click weights",
        noiseless.w0 + (noiseless.w_t - 1.0).abs(),
        0.0,
    ));

    let matched = mode_match(
        &crate::config::ModeMatchConfig {
            target: gaussian_descriptor(2.0),
            filter: FilterDescriptor::Lorentzian {
                center: 1.0,
                linewidth: 2.0,
            },
            detector: DetectorConfig {
                eta: 0.9,
                gain: 10,
                nbar: 0.05,
                nbar_reflected: 0.01,
                k_min: 2,
                n_max: None,
                renormalized_posterior: false,
            },
            pad_factor: 1,
        },
        out,
    )?;
    let ratio = matched["probability_over_wt"].as_f64().unwrap_or(f64::NAN);
    checks.push(check("mode-matched pipeline", ratio - 1.0, 1e-6));

    let jitter =
        gaussian_jitter_efficiency(1.0, 1.0, 257)? - jitter_efficiency_closed_form(1.0, 1.0);
    checks.push(check("jitter closed form", jitter, 1e-4));

    let basis = HermiteGaussianBasis {
        sigma: 1.0,
        t0: 0.0,
        omega0: 0.0,
        t_detect: 2.0,
        gap_halfwidth: 0.5,
        smoothing_width: 0.5,
        grid: None,
    };
    let (phi1, phi2) = basis.build()?;
    let p = click_probabilities(&SuperresScenario::new(0.05, 0.1, &phi1, &phi2)?)?;
    checks.push(check(
        "superresolution closed form",
        (p.p1 - p.p1_closed).abs().max((p.p2 - p.p2_closed).abs()),
        1e-12,
    ));
    let a = estimate_epsilon(&p, 100_000, 1)?;
    let b = estimate_epsilon(&p, 100_000, 1)?;
    let repeat = a.n1.abs_diff(b.n1) + a.n2.abs_diff(b.n2);
    checks.push(check("seeded sampling repeats", repeat as f64, 0.0));

    records(out, "selftest.csv", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(CliError::SelftestFailed(failed.join(", ")));
    }
    Ok(json!({ "checks": checks }))
}
