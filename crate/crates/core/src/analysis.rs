//! Post-processing of run records: decay exponents, self-similar profiles,
//! amplitudes and remainder rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::frame::{ratio_to_f64, ScalingFrame};
use crate::grid::{Field, Grid};
use crate::interp::resample_dilated;
use crate::nonlinearity::Nonlinearity;
use crate::record::{RunRecord, Snapshot};
use crate::relevance::{predicted_rates, RatePrediction};
use crate::spectrum::{profile_of_kind, ProfileKind, ProfileOptions};

/// Minimum samples for a decay fit.
pub const MIN_DECAY_SAMPLES: usize = 10;
/// Minimum samples for a remainder fit.
pub const MIN_REMAINDER_SAMPLES: usize = 3;
/// Remainders below this fraction of `‖w‖∞` are numerical noise.
pub const SATURATION_FLOOR: f64 = 1e-9;
/// Edge/sup ratio above which moments and profiles are not trusted.
pub const TAIL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    /// Everything sat below the noise floor; nothing to fit.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: String,
    pub status: FitStatus,
    pub exponent: Option<f64>,
    pub amplitude: Option<f64>,
    pub window: (f64, f64),
    pub residual: f64,
    pub samples: usize,
    /// Non-fatal observations, e.g. non-monotone data.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Sup,
    L2,
}

impl Norm {
    pub fn column(&self) -> &'static str {
        match self {
            Norm::Sup => "sup_norm",
            Norm::L2 => "l2_norm",
        }
    }
}

/// The last decade of recorded time.
pub fn last_decade(record: &RunRecord) -> Result<(f64, f64)> {
    let t = record.times();
    let end = *t.last().ok_or_else(|| Error::Fit("empty record".into()))?;
    Ok((end / 10.0, end))
}

fn in_window(t: f64, w: (f64, f64)) -> bool {
    t >= w.0 * (1.0 - 1e-12) && t <= w.1 * (1.0 + 1e-12)
}

/// Least-squares slope of `log ‖w‖` against `log t` over `window`.
pub fn decay_exponent(record: &RunRecord, norm: Norm, window: (f64, f64)) -> Result<FitResult> {
    let t = record.times();
    let y = record.column(norm.column())?;
    let (ts, ys): (Vec<f64>, Vec<f64>) = t.iter().zip(&y).filter(|(t, _)| in_window(**t, window)).unzip();
    if ts.len() < MIN_DECAY_SAMPLES {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need {MIN_DECAY_SAMPLES}",
            window.0,
            window.1,
            ts.len()
        )));
    }
    if ys.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("degenerate data: zero or non-finite norms".into()));
    }
    let mut flags = Vec::new();
    if ys.windows(2).any(|w| w[1] > w[0]) {
        flags.push("non-monotone".into());
    }
    if let Some(&t0) = t.first() {
        if window.0 < 10.0 * t0 {
            flags.push("window starts before 10 t0".into());
        }
    }
    let lx: Vec<f64> = ts.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        method: format!("loglog_{}", norm.column()),
        status: FitStatus::Ok,
        exponent: Some(fit.slope),
        amplitude: Some(fit.intercept.exp()),
        window,
        residual: fit.rms,
        samples: ts.len(),
        flags,
    })
}

fn tail_check(field: &Field, time: f64) -> Result<()> {
    let ratio = field.edge_ratio();
    if ratio > TAIL_LIMIT {
        return Err(Error::BoundaryContamination {
            time,
            ratio,
            limit: TAIL_LIMIT,
        });
    }
    Ok(())
}

/// `v(ξ) = t^β w(ξ t^{1/(2n)})` on `target`.
pub fn scaled_profile(w: &Field, t: f64, frame: &ScalingFrame, target: &Grid) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::invalid("scaled profile needs t > 0"));
    }
    if frame.d as usize != w.grid.dim {
        return Err(Error::invalid("frame and snapshot dimensions differ"));
    }
    tail_check(w, t)?;
    let s = t.powf(frame.spread_exponent());
    let reach = s * target.length / 2.0;
    if reach > w.grid.length / 2.0 {
        return Err(Error::Interpolation(format!(
            "ξ-grid reaches x = {reach}, beyond the box half-width {}",
            w.grid.length / 2.0
        )));
    }
    Ok(resample_dilated(w, target, s)?.scaled(t.powf(frame.beta_f64())))
}

/// `B̂ = ⟨p, r⟩ / ⟨r, r⟩`; residual is `‖p - B̂ r‖∞ / ‖p‖∞`.
pub fn amplitude_fit(profile: &Field, reference: &Field) -> Result<FitResult> {
    if profile.grid != reference.grid {
        return Err(Error::invalid("profile and reference grids differ"));
    }
    let rr = reference.dot(reference);
    if !(rr > 1e-300) || reference.sup_norm() < 1e-12 {
        return Err(Error::Fit("reference profile is numerically zero".into()));
    }
    let b = profile.dot(reference) / rr;
    let sup = profile.sup_norm();
    let misfit = profile.sub(&reference.scaled(b)).sup_norm();
    Ok(FitResult {
        method: "l2_projection".into(),
        status: FitStatus::Ok,
        exponent: None,
        amplitude: Some(b),
        window: (0.0, 0.0),
        residual: if sup > 0.0 { misfit / sup } else { 0.0 },
        samples: profile.values.len(),
        flags: Vec::new(),
    })
}

/// `p(0) / r(0)`, a secondary amplitude estimate for profiles that do not
/// vanish at the origin.
pub fn origin_ratio(profile: &Field, reference: &Field) -> Option<f64> {
    let g = &profile.grid;
    let mid = g.points / 2;
    let idx = (0..g.dim).fold(0, |acc, _| acc * g.points + mid);
    let r = reference.values[idx];
    (r.abs() > 1e-12).then(|| profile.values[idx] / r)
}

/// Slope of `log ‖w(t) - B t^{-β} f(·/t^{1/2n})‖∞` against `log t`, with the
/// sup taken over the points `ξ t^{1/2n}` of `reference.grid`.
pub fn remainder_rate(
    snapshots: &[Snapshot],
    amplitude: f64,
    reference: &Field,
    frame: &ScalingFrame,
    window: (f64, f64),
) -> Result<FitResult> {
    let mut ts = Vec::new();
    let mut rs = Vec::new();
    let mut saturated = 0;
    for s in snapshots.iter().filter(|s| in_window(s.time, window)) {
        let v = scaled_profile(&s.field, s.time, frame, &reference.grid)?;
        let rem = v.sub(&reference.scaled(amplitude)).sup_norm() * s.time.powf(-frame.beta_f64());
        if rem <= SATURATION_FLOOR * s.field.sup_norm() {
            saturated += 1;
            continue;
        }
        ts.push(s.time);
        rs.push(rem);
    }
    let mut flags = Vec::new();
    if saturated > 0 {
        flags.push(format!("{saturated} samples below the noise floor"));
    }
    if ts.len() < MIN_REMAINDER_SAMPLES {
        if saturated > 0 {
            return Ok(FitResult {
                method: "remainder_sup".into(),
                status: FitStatus::Saturated,
                exponent: None,
                amplitude: Some(amplitude),
                window,
                residual: 0.0,
                samples: ts.len(),
                flags,
            });
        }
        return Err(Error::Fit(format!(
            "{} snapshots in the window, need {MIN_REMAINDER_SAMPLES}",
            ts.len()
        )));
    }
    let lx: Vec<f64> = ts.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = rs.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        method: "remainder_sup".into(),
        status: FitStatus::Ok,
        exponent: Some(fit.slope),
        amplitude: Some(amplitude),
        window,
        residual: fit.rms,
        samples: ts.len(),
        flags,
    })
}

/// `∫ w` (order 0) or `∫ x w` (order 1).
pub fn moment(field: &Field, order: u32) -> Result<Vec<f64>> {
    tail_check(field, f64::NAN)?;
    match order {
        0 => Ok(vec![field.integral()]),
        1 => Ok(field.first_moment()),
        _ => Err(Error::invalid("moment order must be 0 or 1")),
    }
}

/// A default `ξ`-grid for profile comparisons in `d` dimensions.
pub fn default_xi_grid(d: usize) -> Result<Grid> {
    match d {
        1 => Grid::new(1, 512, 80.0),
        2 => Grid::new(2, 128, 64.0),
        3 => Grid::new(3, 64, 48.0),
        _ => Err(Error::invalid("dimension must be 1, 2 or 3")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeOptions {
    /// Fit window; the last decade when absent.
    pub window: Option<(f64, f64)>,
    /// Time of the profile comparison; the snapshot nearest to it is used
    /// (the last snapshot when absent).
    pub profile_time: Option<f64>,
    pub xi_grid: Option<Grid>,
    /// Relative tolerance on the decay exponent.
    pub exponent_tolerance: f64,
    /// Relative tolerance on the amplitude and the profile distance.
    pub amplitude_tolerance: f64,
    /// Allowed excess of the remainder slope over `-(d+1)/(2n)`.
    pub remainder_slack: f64,
    /// Require the profile misfit to shrink across the window.
    pub residual_trend: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            window: None,
            profile_time: None,
            xi_grid: None,
            exponent_tolerance: 0.1,
            amplitude_tolerance: 0.1,
            remainder_slack: 0.1,
            residual_trend: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub prediction: RatePrediction,
    pub window: (f64, f64),
    pub decay_sup: FitResult,
    pub decay_l2: Option<FitResult>,
    /// Amplitude forced by conservation: `(2π)^{-d/2} ∫w₀` or `∫x₁w₀`.
    pub predicted_amplitude: Option<f64>,
    pub amplitude: Option<FitResult>,
    pub origin_ratio: Option<f64>,
    /// `‖v - B f‖∞ / |B|` at the profile time, with the predicted amplitude.
    pub profile_distance: Option<f64>,
    pub profile_time: Option<f64>,
    pub remainder: Option<FitResult>,
    /// `(t, amplitude-fit residual)` for every snapshot in the window.
    pub profile_residuals: Vec<(f64, f64)>,
    pub checks: Vec<Check>,
}

impl AnalysisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Full analysis of a physical-frame run record.
pub fn analyze_record(record: &RunRecord, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let meta = &record.metadata;
    let n = meta["n"]
        .as_u64()
        .ok_or_else(|| Error::invalid("record metadata lacks 'n' (not a physical run?)"))? as u32;
    let grid: Grid = serde_json::from_value(meta["grid"].clone())?;
    let nl: Nonlinearity = serde_json::from_value(meta["nonlinearity"].clone())?;
    let d = grid.dim as u32;
    let prediction = predicted_rates(&nl.to_pde_spec(n, d))?;
    let window = match opts.window {
        Some(w) => w,
        None => last_decade(record)?,
    };
    let decay_sup = decay_exponent(record, Norm::Sup, window)?;
    let decay_l2 = decay_exponent(record, Norm::L2, window).ok();
    let mut checks = Vec::new();
    let mut report = AnalysisReport {
        prediction: prediction.clone(),
        window,
        decay_sup,
        decay_l2,
        predicted_amplitude: None,
        amplitude: None,
        origin_ratio: None,
        profile_distance: None,
        profile_time: None,
        remainder: None,
        profile_residuals: Vec::new(),
        checks: Vec::new(),
    };
    let RatePrediction::Predicted {
        decay_exponent: p,
        remainder_exponent: r,
        frame,
    } = prediction
    else {
        return Ok(report);
    };
    let p = ratio_to_f64(p);
    let slope = report.decay_sup.exponent.unwrap_or(f64::NAN);
    checks.push(Check {
        name: "decay_exponent".into(),
        measured: slope,
        target: format!("{} ± {}", -p, opts.exponent_tolerance * p),
        pass: (slope + p).abs() <= opts.exponent_tolerance * p,
    });
    let kind = ProfileKind::for_frame(&frame)?;
    let first = |name: &str| record.column(name).ok().and_then(|c| c.first().copied());
    if nl.is_conservative() {
        report.predicted_amplitude = match kind {
            ProfileKind::Mass => first("mass").map(|m| m * (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)),
            ProfileKind::Dipole => first("moment_1"),
        };
    }
    if frame.is_dipole() {
        // The dipole-frame prediction is for zero-mass data.
        let m = first("mass").unwrap_or(f64::NAN);
        let scale = first("moment_1").unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        checks.push(Check {
            name: "zero_mass".into(),
            measured: m,
            target: "|mass| < 1e-8 |first moment|".into(),
            pass: m.abs() < 1e-8 * scale,
        });
    }
    let snap = match opts.profile_time {
        Some(t) => record.snapshot_near(t),
        None => record.snapshots.last(),
    };
    if let Some(snap) = snap {
        let xi = match opts.xi_grid {
            Some(g) => g,
            None => default_xi_grid(grid.dim)?,
        };
        let reference = profile_of_kind(kind, n, &xi, &ProfileOptions::default())?.field;
        let v = scaled_profile(&snap.field, snap.time, &frame, &xi)?;
        let fit = amplitude_fit(&v, &reference)?;
        report.profile_time = Some(snap.time);
        report.origin_ratio = origin_ratio(&v, &reference);
        let b_hat = fit.amplitude.unwrap_or(f64::NAN);
        if let Some(b) = report.predicted_amplitude {
            checks.push(Check {
                name: "amplitude".into(),
                measured: b_hat,
                target: format!("{b} ± {}%", 100.0 * opts.amplitude_tolerance),
                pass: (b_hat - b).abs() <= opts.amplitude_tolerance * b.abs(),
            });
            let dist = v.sub(&reference.scaled(b)).sup_norm() / b.abs();
            report.profile_distance = Some(dist);
            checks.push(Check {
                name: "profile_distance".into(),
                measured: dist,
                target: format!("< {}", opts.amplitude_tolerance),
                pass: dist < opts.amplitude_tolerance,
            });
        }
        report.amplitude = Some(fit);
        let amp = report.predicted_amplitude.unwrap_or(b_hat);
        if let Ok(rem) = remainder_rate(&record.snapshots, amp, &reference, &frame, window) {
            let bound = -ratio_to_f64(r) + opts.remainder_slack;
            let measured = rem.exponent.unwrap_or(f64::NEG_INFINITY);
            checks.push(Check {
                name: "remainder_exponent".into(),
                measured,
                target: format!("<= {bound}"),
                pass: rem.status == FitStatus::Saturated || measured <= bound,
            });
            report.remainder = Some(rem);
        }
        for s in record.snapshots.iter().filter(|s| in_window(s.time, window)) {
            let v = scaled_profile(&s.field, s.time, &frame, &xi)?;
            report.profile_residuals.push((s.time, amplitude_fit(&v, &reference)?.residual));
        }
        if opts.residual_trend {
            let res = &report.profile_residuals;
            let trend = if res.len() >= 2 {
                let lx: Vec<f64> = res.iter().map(|r| r.0.ln()).collect();
                let ly: Vec<f64> = res.iter().map(|r| r.1.max(1e-300).ln()).collect();
                linear_fit(&lx, &ly)?.slope
            } else {
                f64::NAN
            };
            checks.push(Check {
                name: "profile_residual_trend".into(),
                measured: trend,
                target: "< 0".into(),
                pass: trend < 0.0 && res.last().map(|r| r.1) < res.first().map(|r| r.1),
            });
        }
    }
    report.checks = checks;
    Ok(report)
}
