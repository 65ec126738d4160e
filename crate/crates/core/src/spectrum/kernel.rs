//! Convolution kernel `g(z, τ) = ∫ e^{ik·z} e^{-(k·k)^n a(τ)} dk` of the
//! rescaled semigroup, and its stretched-exponential decay.

use std::f64::consts::{LN_10, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::a_of_tau;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::quadrature::{integrate_panels, Estimate};
use crate::special::{bessel_j0, sinc};

/// Absolute quadrature target for kernel values.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Samples with `|g|` below this are treated as quadrature noise.
pub const NOISE_FLOOR: f64 = 1e-12;

const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub z: Vec<f64>,
    pub tau: f64,
    pub a: f64,
    pub value: f64,
    pub error: f64,
}

/// Cut-off `P` with `e^{-a P^{2n}} = 10^{-16}`.
pub fn truncation_radius(a: f64, n: u32) -> f64 {
    (16.0 * LN_10 / a).powf(1.0 / (2.0 * n as f64))
}

/// Radial form of the kernel at `|z| = r` with `a = a(τ)`.
pub fn kernel_radial(r: f64, a: f64, n: u32, d: u32, abs_tol: f64) -> Result<Estimate> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("kernel: a = {a} must be positive")));
    }
    if n == 0 {
        return Err(Error::invalid("kernel: n must be positive"));
    }
    let p = truncation_radius(a, n);
    let two_n = 2 * n as i32;
    let damp = move |k: f64| (-a * k.powi(two_n)).exp();
    let r = r.abs();
    let width = if r > 0.0 { (PI / r).min(p / 4.0) } else { p / 4.0 };
    let panels = (p / width).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|i| (i as f64 * width).min(p)).collect();
    let max_panels = breaks.len() + 20_000;
    match d {
        1 => integrate_panels(|k| 2.0 * (k * r).cos() * damp(k), &breaks, abs_tol, max_panels),
        2 => integrate_panels(
            |k| 2.0 * PI * bessel_j0(k * r) * damp(k) * k,
            &breaks,
            abs_tol,
            max_panels,
        ),
        3 => integrate_panels(|k| 4.0 * PI * sinc(k * r) * damp(k) * k * k, &breaks, abs_tol, max_panels),
        _ => Err(Error::invalid(format!("kernel: dimension {d} not in 1..=3"))),
    }
}

pub fn kernel_g(z: &[f64], tau: f64, n: u32, d: u32) -> Result<KernelSample> {
    if !(tau > 0.0) {
        return Err(Error::invalid("kernel: tau must be positive"));
    }
    if z.len() != d as usize {
        return Err(Error::invalid("kernel: point dimension mismatch"));
    }
    let a = a_of_tau(tau);
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let est = kernel_radial(r, a, n, d, DEFAULT_TOLERANCE)?;
    Ok(KernelSample {
        z: z.to_vec(),
        tau,
        a,
        value: est.value,
        error: est.error,
    })
}

/// Leading saddle-point decay of the kernel, `|g| ≈ exp(-γ z^s)` with
/// `s = 2n/(2n-1)` and `γ = (1 - 1/2n) (2na)^{-1/(2n-1)} |cos(πn/(2n-1))|`.
pub fn predicted_decay(n: u32, a: f64) -> (f64, f64) {
    let m = 2.0 * n as f64;
    let s = m / (m - 1.0);
    let gamma = (1.0 - 1.0 / m) * (m * a).powf(-1.0 / (m - 1.0)) * (PI * n as f64 / (m - 1.0)).cos().abs();
    (gamma, s)
}

/// Fit range reaching from near the origin to where the predicted envelope
/// meets the noise floor.
pub fn default_decay_range(n: u32, tau: f64) -> (f64, f64) {
    let (gamma, s) = predicted_decay(n, a_of_tau(tau));
    let start = if n == 1 { 0.5 } else { 1.0 };
    (start, (0.95 * -NOISE_FLOOR.ln() / gamma).powf(1.0 / s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted rate in `log|g| ≈ c - γ |z|^s`.
    pub gamma_hat: f64,
    /// Fitted stretching exponent `s`.
    pub exponent_hat: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
    /// The `(|z|, |g|)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fit `log|g(z, τ)| ≈ c - γ |z|^s` over `z_range`.
///
/// For oscillating kernels the envelope is sampled at the maximum of `|g|`
/// on each lobe between sign changes; a kernel without sign changes is
/// used pointwise.
pub fn kernel_decay_fit(n: u32, d: u32, tau: f64, z_range: (f64, f64)) -> Result<DecayFit> {
    let (z0, z1) = z_range;
    if !(z0 >= 0.0 && z1 > z0) {
        return Err(Error::invalid("decay fit: need 0 <= z_min < z_max"));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("decay fit: tau must be positive"));
    }
    let a = a_of_tau(tau);
    let m = 4000;
    let zs: Vec<f64> = (0..=m).map(|i| z0 + (z1 - z0) * i as f64 / m as f64).collect();
    let gs: Vec<f64> = zs
        .par_iter()
        .map(|&z| kernel_radial(z, a, n, d, 1e-15).map(|e| e.value))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let sign_changes = gs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    if sign_changes == 0 {
        points.extend(zs.iter().zip(&gs).map(|(&z, &g)| (z, g.abs())));
    } else {
        // Interior lobes only: a lobe cut by the range boundary has no true peak.
        let mut start = None;
        for i in 1..gs.len() {
            if gs[i].signum() != gs[i - 1].signum() {
                if let Some(s) = start {
                    let (j, g) = (s..i)
                        .map(|j| (j, gs[j].abs()))
                        .fold((s, 0.0), |best, c| if c.1 > best.1 { c } else { best });
                    if j > s && j + 1 < i {
                        points.push((zs[j], g));
                    }
                }
                start = Some(i);
            }
        }
    }
    points.retain(|&(z, g)| g > NOISE_FLOOR && z > 0.0);
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} samples above the noise floor, found {}",
            points.len()
        )));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit_at = |s: f64| {
        let xs: Vec<f64> = points.iter().map(|p| p.0.powf(s)).collect();
        linear_fit(&xs, &ys)
    };
    // Golden-section search for the exponent maximising R².
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1.0, 3.0);
    let mut c = hi - phi * (hi - lo);
    let mut e = lo + phi * (hi - lo);
    let mut fc = fit_at(c)?.r2;
    let mut fe = fit_at(e)?.r2;
    while hi - lo > 1e-7 {
        if fc > fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - phi * (hi - lo);
            fc = fit_at(c)?.r2;
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + phi * (hi - lo);
            fe = fit_at(e)?.r2;
        }
    }
    let s = 0.5 * (lo + hi);
    let best = fit_at(s)?;
    Ok(DecayFit {
        gamma_hat: -best.slope,
        exponent_hat: s,
        intercept: best.intercept,
        r2: best.r2,
        samples: points.len(),
        points,
    })
}
