//! Integration in scaling variables `ξ = x / t^{1/(2n)}`, `τ = log t`:
//!
//! `∂τ v = (-1)^{n+1} Δⁿ v + (1/2n) ξ·∇v + β v + Σ_i e^{r_i τ} F_i(v)`,
//!
//! and the projections `y₀`, `y₁`, `y⊥` onto the leading eigenmodes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::frame::{ratio_to_f64, ScalingFrame};
use crate::grid::{Dealias, Field, Grid, SpectralField};
use crate::nonlinearity::{NonlinearEval, Nonlinearity};
use crate::record::{RunRecord, Snapshot};
use crate::relevance::MultiIndex;
use crate::simulator::{coefficient_sup_bound, finish, linear_symbol, propagate_diagonal, Driver, RunResult, RK4_STABILITY};
use crate::spectrum::{eigenvalue, profile_of_kind, semigroup_apply_with, ProfileKind, ProfileOptions};
use crate::stepper::{Model, StepControl, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledState {
    pub frame: ScalingFrame,
    pub tau: f64,
    pub v: Field,
}

impl ScaledState {
    pub fn new(frame: ScalingFrame, tau: f64, v: Field) -> Result<Self> {
        if frame.d as usize != v.grid.dim {
            return Err(Error::invalid("scaled state: frame and grid dimensions differ"));
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::invalid("scaled state: tau must be finite and >= 0"));
        }
        Ok(Self { frame, tau, v })
    }

    pub fn eta(&self) -> f64 {
        self.frame.eta(self.tau)
    }

    pub fn eta_tilde(&self) -> Option<f64> {
        self.frame.eta_tilde(self.tau)
    }
}

/// How the linear part `ℒ + β` is advanced over a substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearTreatment {
    /// Exact diagonal `-|k|^{2n} + β`; the drift is part of the explicit stage.
    #[default]
    ExplicitDrift,
    /// The closed-form semigroup `e^{hℒ}` (drift included), by band-limited
    /// interpolation.
    Semigroup,
}

struct ScaledModel {
    frame: ScalingFrame,
    grid: Grid,
    fft: FftNd,
    symbol: Vec<f64>,
    /// `∂_j` multipliers.
    gradient: Vec<Vec<Complex64>>,
    nl: NonlinearEval,
    rates: Vec<f64>,
    linear: LinearTreatment,
}

impl ScaledModel {
    fn new(frame: ScalingFrame, grid: &Grid, nl: &Nonlinearity, dealias: Dealias, linear: LinearTreatment) -> Self {
        let gradient = (0..grid.dim)
            .map(|a| grid.derivative_multiplier(&MultiIndex::axis(grid.dim, a, 1)))
            .collect();
        Self {
            frame,
            grid: *grid,
            fft: grid.fft(),
            symbol: linear_symbol(grid, frame.n, frame.beta_f64()),
            gradient,
            nl: NonlinearEval::new(nl, grid, dealias),
            rates: nl.scaled_rates(&frame).into_iter().map(ratio_to_f64).collect(),
            linear,
        }
    }

    fn scales(&self, tau: f64) -> Vec<f64> {
        self.rates.iter().map(|r| (r * tau).exp()).collect()
    }

    /// `(1/2n) ξ·∇v` in DFT coefficients.
    fn drift(&self, u: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let mut acc = vec![Complex64::default(); g.len()];
        for (a, mult) in self.gradient.iter().enumerate() {
            let mut c: Vec<Complex64> = u.iter().zip(mult).map(|(z, m)| z * m).collect();
            self.fft.inverse(&mut c);
            for (i, (s, z)) in acc.iter_mut().zip(&c).enumerate() {
                s.re += g.point(i)[a] * z.re;
            }
        }
        self.fft.forward(&mut acc);
        let f = self.frame.spread_exponent();
        acc.iter_mut().for_each(|z| *z *= f);
        acc
    }
}

impl Model for ScaledModel {
    fn propagate(&self, h: f64, u: &mut [Complex64]) -> Result<()> {
        match self.linear {
            LinearTreatment::ExplicitDrift => {
                propagate_diagonal(&self.symbol, h, u);
                Ok(())
            }
            LinearTreatment::Semigroup => {
                let field = Field::from_dft(self.grid, u, &self.fft);
                let spec = field.to_spectral(&self.fft);
                let out = semigroup_apply_with(&spec, h, &self.frame, &self.fft)?;
                u.copy_from_slice(&out.to_field(&self.fft).dft(&self.fft));
                Ok(())
            }
        }
    }

    fn explicit(&self, tau: f64, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.nl.eval(u, &self.scales(tau), tau)?;
        if self.linear == LinearTreatment::ExplicitDrift {
            for (o, d) in out.iter_mut().zip(self.drift(u)) {
                *o += d;
            }
        }
        Ok(out)
    }

    fn max_step(&self, tau: f64, u: &[Complex64]) -> f64 {
        if self.nl.is_empty() {
            return f64::INFINITY;
        }
        let stiff = self.nl.stiffness(coefficient_sup_bound(u), &self.scales(tau));
        if stiff > 0.0 {
            RK4_STABILITY / stiff
        } else {
            f64::INFINITY
        }
    }
}

/// `∂τ v` for the scaled equation.
pub fn scaled_rhs(state: &ScaledState, nl: &Nonlinearity, dealias: Dealias) -> Result<Field> {
    let f = &state.frame;
    nl.validate(f.n, f.d)?;
    let grid = state.v.grid;
    let model = ScaledModel::new(*f, &grid, nl, dealias, LinearTreatment::ExplicitDrift);
    let u = state.v.dft(&model.fft);
    let mut out = model.explicit(state.tau, &u)?;
    for ((o, z), s) in out.iter_mut().zip(&u).zip(&model.symbol) {
        *o += z * s;
    }
    Ok(Field::from_dft(grid, &out, &model.fft))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projections {
    /// `(2π)^{-d/2} ∫ v`.
    pub y0: f64,
    /// `(2π)^{-d/2} ∫ ξ_j v`.
    pub y1: Vec<f64>,
    /// `‖v - y₀ f* - Σ_j (2π)^{d/2} y1_j F_j‖₂`.
    pub yperp_norm: f64,
}

/// Swap axes 0 and `axis` of a field on a cubic grid.
fn swap_axes(f: &Field, axis: usize) -> Field {
    if axis == 0 {
        return f.clone();
    }
    let g = &f.grid;
    let mut out = f.clone();
    for i in 0..g.len() {
        let mut u = g.unravel(i);
        u.swap(0, axis);
        let j = (0..g.dim).fold(0, |acc, a| acc * g.points + u[a]);
        out.values[j] = f.values[i];
    }
    out
}

/// Projection onto the `j = 0` and `j = 1` eigenspaces on a fixed grid.
#[derive(Debug, Clone)]
pub struct Projector {
    pub mass_profile: Field,
    /// Dipole profiles along each axis, `∫ ξ_j F_j = 1`.
    pub dipoles: Vec<Field>,
    pub edge_tolerance: f64,
}

impl Projector {
    pub fn new(n: u32, grid: &Grid) -> Result<Self> {
        let opts = ProfileOptions::default();
        let mass_profile = profile_of_kind(ProfileKind::Mass, n, grid, &opts)?.field;
        let dipole = profile_of_kind(ProfileKind::Dipole, n, grid, &opts)?.field;
        Ok(Self {
            mass_profile,
            dipoles: (0..grid.dim).map(|a| swap_axes(&dipole, a)).collect(),
            edge_tolerance: 1e-8,
        })
    }

    pub fn project(&self, v: &Field, tau: f64) -> Result<Projections> {
        let g = &v.grid;
        if *g != self.mass_profile.grid {
            return Err(Error::invalid("projector grid differs from the field grid"));
        }
        let ratio = v.edge_ratio();
        if ratio > self.edge_tolerance {
            return Err(Error::BoundaryContamination {
                time: tau,
                ratio,
                limit: self.edge_tolerance,
            });
        }
        let norm = (2.0 * std::f64::consts::PI).powf(-(g.dim as f64) / 2.0);
        let y0 = norm * v.integral();
        let moments = v.first_moment();
        let mut rest = v.sub(&self.mass_profile.scaled(y0));
        for (m, f) in moments.iter().zip(&self.dipoles) {
            rest = rest.sub(&f.scaled(*m));
        }
        Ok(Projections {
            y0,
            y1: moments.iter().map(|m| m * norm).collect(),
            yperp_norm: rest.l2_norm(),
        })
    }
}

fn default_records_per_unit() -> u32 {
    20
}
fn default_edge_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledConfig {
    #[serde(default)]
    pub tau_start: f64,
    pub tau_end: f64,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub dealias: Dealias,
    #[serde(default)]
    pub linear: LinearTreatment,
    /// Evenly spaced record times per unit `τ`; 0 disables.
    #[serde(default = "default_records_per_unit")]
    pub records_per_unit: u32,
    #[serde(default)]
    pub record_taus: Vec<f64>,
    #[serde(default)]
    pub snapshot_taus: Vec<f64>,
    #[serde(default = "default_edge_tolerance")]
    pub edge_tolerance: f64,
}

impl ScaledConfig {
    pub fn new(tau_end: f64) -> Self {
        Self {
            tau_start: 0.0,
            tau_end,
            step: StepControl::default(),
            dealias: Dealias::default(),
            linear: LinearTreatment::default(),
            records_per_unit: default_records_per_unit(),
            record_taus: Vec::new(),
            snapshot_taus: Vec::new(),
            edge_tolerance: default_edge_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_start >= 0.0 && self.tau_end > self.tau_start && self.tau_end.is_finite()) {
            return Err(Error::invalid("need 0 <= tau_start < tau_end"));
        }
        self.step.validate()?;
        for &t in self.record_taus.iter().chain(&self.snapshot_taus) {
            if !(t >= self.tau_start && t <= self.tau_end) {
                return Err(Error::invalid(format!("tau {t} outside [tau_start, tau_end]")));
            }
        }
        if !(self.edge_tolerance > 0.0) {
            return Err(Error::invalid("edge_tolerance must be positive"));
        }
        Ok(())
    }

    pub fn stops(&self) -> Vec<f64> {
        let mut t = vec![self.tau_start, self.tau_end];
        if self.records_per_unit > 0 {
            let count = ((self.tau_end - self.tau_start) * self.records_per_unit as f64).ceil() as usize;
            let h = (self.tau_end - self.tau_start) / count as f64;
            t.extend((1..count).map(|i| self.tau_start + i as f64 * h));
        }
        t.extend_from_slice(&self.record_taus);
        t.extend_from_slice(&self.snapshot_taus);
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        t
    }
}

fn scaled_columns(frame: &ScalingFrame) -> Vec<String> {
    let mut c: Vec<String> = vec!["tau".into(), "eta".into()];
    if frame.eta_tilde(0.0).is_some() {
        c.push("eta_tilde".into());
    }
    c.push("y0".into());
    c.extend((1..=frame.d).map(|j| format!("y1_{j}")));
    for s in ["yperp_norm", "sup_norm", "l2_norm", "mass"] {
        c.push(s.into());
    }
    c
}

/// Integrate `state0` (at `config.tau_start`; its own `tau` is ignored) to
/// `config.tau_end`, recording projections.
pub fn integrate_scaled(state0: &ScaledState, nl: &Nonlinearity, config: &ScaledConfig) -> RunResult {
    let frame = state0.frame;
    let grid = state0.v.grid;
    let columns = scaled_columns(&frame);
    let fail_early = |error: Error| {
        Box::new(crate::simulator::RunFailure {
            error,
            time: config.tau_start,
            state: state0.v.clone(),
            record: RunRecord::new(columns.clone(), serde_json::Value::Null),
        })
    };
    let setup = (|| -> Result<Projector> {
        config.validate()?;
        grid.validate()?;
        nl.validate(frame.n, frame.d)?;
        let mut p = Projector::new(frame.n, &grid)?;
        p.edge_tolerance = config.edge_tolerance;
        Ok(p)
    })();
    let projector = match setup {
        Ok(p) => p,
        Err(e) => return Err(fail_early(e)),
    };
    let metadata = json!({
        "kind": "scaled",
        "frame": frame,
        "grid": grid,
        "nonlinearity": nl,
        "rates": nl.scaled_rates(&frame).iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "integrator": config,
    });
    let model = ScaledModel::new(frame, &grid, nl, config.dealias, config.linear);
    let fft = grid.fft();
    let mut record = RunRecord::new(columns.clone(), metadata);
    let stepper = match Stepper::new(&model, state0.v.dft(&fft), config.tau_start, config.step) {
        Ok(s) => s,
        Err(e) => return Err(fail_early(e)),
    };
    let mut driver = Driver {
        stepper,
        fft: &fft,
        grid,
        edge_tolerance: config.edge_tolerance,
    };
    let snaps = &config.snapshot_taus;
    let result = driver.run(
        &config.stops(),
        |tau, field, _u, _dt, record: &mut RunRecord| {
            let p = projector.project(field, tau)?;
            let mut row = vec![tau, frame.eta(tau)];
            if let Some(e) = frame.eta_tilde(tau) {
                row.push(e);
            }
            row.push(p.y0);
            row.extend(&p.y1);
            row.extend([p.yperp_norm, field.sup_norm(), field.l2_norm(), field.integral()]);
            record.push_row(row)?;
            if snaps.iter().any(|&s| (s - tau).abs() <= 1e-12 * tau.abs().max(1.0)) {
                record.snapshots.push(Snapshot {
                    time: tau,
                    field: field.clone(),
                });
            }
            Ok(())
        },
        &mut record,
    );
    finish(result, driver, record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub tau: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
    pub eta_tilde: Option<Vec<f64>>,
}

/// Linear reduced dynamics on the `j ≤ 1` modes: `y₀ ∝ e^{λ₀τ}`,
/// `y₁ ∝ e^{λ₁τ}`, `η ∝ e^{-τ/2n}`.
pub fn reduced_ode_solution(y0: f64, y1: &[f64], eta0: f64, frame: &ScalingFrame, taus: &[f64]) -> Result<ReducedTrajectory> {
    if !(frame.is_standard() || frame.is_dipole()) {
        return Err(Error::Unsupported(format!(
            "no reduced dynamics for frame n={}, d={}, beta={}",
            frame.n, frame.d, frame.beta
        )));
    }
    if y1.len() != frame.d as usize {
        return Err(Error::invalid("y1 must have d components"));
    }
    let l0 = ratio_to_f64(eigenvalue(0, frame));
    let l1 = ratio_to_f64(eigenvalue(1, frame));
    let tilde0 = frame.eta_tilde(0.0);
    Ok(ReducedTrajectory {
        tau: taus.to_vec(),
        y0: taus.iter().map(|t| y0 * (l0 * t).exp()).collect(),
        y1: taus.iter().map(|t| y1.iter().map(|c| c * (l1 * t).exp()).collect()).collect(),
        eta: taus.iter().map(|&t| eta0 * frame.eta(t)).collect(),
        eta_tilde: tilde0.map(|_| taus.iter().map(|&t| eta0 * frame.eta_tilde(t).unwrap_or(0.0)).collect()),
    })
}

/// Apply `e^{τℒ}` to a real field (convenience for cross-checks).
pub fn semigroup_field(v: &Field, tau: f64, frame: &ScalingFrame) -> Result<Field> {
    let fft = v.grid.fft();
    let spec: SpectralField = v.to_spectral(&fft);
    Ok(semigroup_apply_with(&spec, tau, frame, &fft)?.to_field(&fft))
}
