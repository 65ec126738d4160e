//! The semigroup `e^{τℒ}` in closed Fourier form,
//! `ṽ(p, τ) = e^{-(p·p)^n a(τ)} ṽ₀(p e^{-τ/(2n)}) e^{(β - d/(2n)) τ}`.

use num_complex::Complex64;

use super::a_of_tau;
use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::frame::{ratio_to_f64, ScalingFrame};
use crate::grid::{Grid, SpectralField};
use crate::interp::dilated_transform;
use crate::relevance::MultiIndex;

/// Physical-space edge level (relative to the peak) above which the
/// band-limited interpolation of `ṽ₀` between p-grid points is not trusted.
pub const EDGE_TOLERANCE: f64 = 1e-10;

fn edge_ratio(grid: &Grid, samples: &[Complex64]) -> f64 {
    let sup = samples.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if sup == 0.0 {
        return 0.0;
    }
    let n = grid.points;
    let mut edge = 0.0f64;
    for (i, z) in samples.iter().enumerate() {
        let u = grid.unravel(i);
        if (0..grid.dim).any(|a| u[a] < 2 || u[a] + 2 > n) {
            edge = edge.max(z.norm());
        }
    }
    edge / sup
}

pub fn semigroup_apply(v0: &SpectralField, tau: f64, frame: &ScalingFrame) -> Result<SpectralField> {
    semigroup_apply_with(v0, tau, frame, &v0.grid.fft())
}

pub fn semigroup_apply_with(v0: &SpectralField, tau: f64, frame: &ScalingFrame, fft: &FftNd) -> Result<SpectralField> {
    let g = &v0.grid;
    if frame.d as usize != g.dim {
        return Err(Error::invalid("semigroup: frame and grid dimensions differ"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("semigroup: tau = {tau} must be finite and >= 0")));
    }
    if tau == 0.0 {
        return Ok(v0.clone());
    }
    let samples = v0.to_samples(fft);
    let edge = edge_ratio(g, &samples);
    if edge > EDGE_TOLERANCE {
        return Err(Error::Interpolation(format!(
            "data not decayed at the box edge (ratio {edge:e}); spectral samples cannot be interpolated to p·e^(-tau/2n)"
        )));
    }
    let gamma = frame.eta(tau);
    let mut out = dilated_transform(g, samples, gamma);
    let a = a_of_tau(tau);
    let n = frame.n as i32;
    let growth = (ratio_to_f64(frame.shift()) * tau).exp();
    for (i, z) in out.iter_mut().enumerate() {
        let k = g.wavevector(i);
        let pp: f64 = k[..g.dim].iter().map(|x| x * x).sum();
        *z *= (-pp.powi(n) * a).exp() * growth;
    }
    Ok(SpectralField {
        grid: *g,
        values: out,
    })
}

/// Relative residual of `D^ℓ e^{τℒ} v = e^{τℓ/(2n)} e^{τℒ} D^ℓ v` with
/// `D = ∂/∂ξ₁`, measured in `L²(dp)`.
pub fn commutation_check(v: &SpectralField, l: u32, tau: f64, frame: &ScalingFrame) -> Result<f64> {
    let g = &v.grid;
    let fft = g.fft();
    let mult = g.derivative_multiplier(&MultiIndex::axis(g.dim, 0, l));
    let apply_d = |s: &SpectralField| SpectralField {
        grid: *g,
        values: s.values.iter().zip(&mult).map(|(a, b)| a * b).collect(),
    };
    let lhs = apply_d(&semigroup_apply_with(v, tau, frame, &fft)?);
    let mut rhs = semigroup_apply_with(&apply_d(v), tau, frame, &fft)?;
    let factor = (tau * l as f64 / (2.0 * frame.n as f64)).exp();
    rhs.values.iter_mut().for_each(|z| *z *= factor);
    let norm = v.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.distance(&rhs) / norm)
}
