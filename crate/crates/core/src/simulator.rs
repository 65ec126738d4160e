//! Pseudo-spectral integration of `∂t w = (-1)^{n+1} Δⁿ w + F(w, ∂w)` on a
//! periodic box standing in for `R^d`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::grid::{Dealias, Field, Grid};
use crate::nonlinearity::{NonlinearEval, Nonlinearity};
use crate::record::{RunRecord, Snapshot};
use crate::spectrum::{decay_radius, ProfileKind};
use crate::stepper::{Model, StepControl, StepStats, Stepper};

/// Initial data may not exceed this fraction of its peak at the box edge.
pub const INITIAL_EDGE_TOLERANCE: f64 = 1e-12;

/// Steps between boundary checks away from record times.
const EDGE_CHECK_INTERVAL: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A e^{-|x - c|²/(2σ²)}`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `A (x₁/σ) e^{-|x|²/(2σ²)}`: zero mass, nonzero first moment along `x₁`.
    Dipole { amplitude: f64, width: f64 },
    /// Raw samples in grid order.
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub mass: f64,
    pub first_moment: Vec<f64>,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub edge_ratio: f64,
}

impl InitReport {
    pub fn of(field: &Field) -> Self {
        Self {
            mass: field.integral(),
            first_moment: field.first_moment(),
            sup_norm: field.sup_norm(),
            l1_norm: field.l1_norm(),
            edge_ratio: field.edge_ratio(),
        }
    }
}

pub fn init_perturbation(data: &InitialData, grid: &Grid) -> Result<(Field, InitReport)> {
    grid.validate()?;
    let field = match data {
        InitialData::Gaussian {
            amplitude,
            width,
            center,
        } => {
            check_width(*width, grid)?;
            let c = match center {
                Some(c) if c.len() == grid.dim => c.clone(),
                Some(_) => return Err(Error::invalid("gaussian center has the wrong dimension")),
                None => vec![0.0; grid.dim],
            };
            Field::from_fn(*grid, |x| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            })
        }
        InitialData::Dipole { amplitude, width } => {
            check_width(*width, grid)?;
            Field::from_fn(*grid, |x| {
                let r2: f64 = x.iter().map(|a| a * a).sum();
                amplitude * (x[0] / width) * (-r2 / (2.0 * width * width)).exp()
            })
        }
        InitialData::Samples { values } => Field::new(*grid, values.clone())?,
    };
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial data is not finite"));
    }
    let report = InitReport::of(&field);
    if report.edge_ratio > INITIAL_EDGE_TOLERANCE {
        return Err(Error::invalid(format!(
            "initial data not decayed at the box edge: edge/peak {:e} > {INITIAL_EDGE_TOLERANCE:e}",
            report.edge_ratio
        )));
    }
    Ok((field, report))
}

fn check_width(width: f64, grid: &Grid) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid("width must be positive"));
    }
    if width > grid.length / 8.0 {
        return Err(Error::invalid("width must be small compared with the box"));
    }
    Ok(())
}

fn default_t_start() -> f64 {
    1.0
}
fn default_records_per_decade() -> u32 {
    20
}
fn default_edge_tolerance() -> f64 {
    1e-8
}
fn default_box_margin() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub dealias: Dealias,
    /// Log-spaced record times between `t_start` and `t_end`; 0 disables.
    #[serde(default = "default_records_per_decade")]
    pub records_per_decade: u32,
    #[serde(default)]
    pub record_times: Vec<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Abort when `|w|` near the box edge exceeds this fraction of the sup-norm.
    #[serde(default = "default_edge_tolerance")]
    pub edge_tolerance: f64,
    /// Required `(L/2) / (Ξ t_end^{1/2n})`, with `Ξ` the `10⁻⁶` decay radius
    /// of the mass profile. 0 disables the check.
    #[serde(default = "default_box_margin")]
    pub box_margin: f64,
}

impl IntegratorConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_start: default_t_start(),
            t_end,
            step: StepControl::default(),
            dealias: Dealias::default(),
            records_per_decade: default_records_per_decade(),
            record_times: Vec::new(),
            snapshot_times: Vec::new(),
            edge_tolerance: default_edge_tolerance(),
            box_margin: default_box_margin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start > 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::invalid("need 0 < t_start < t_end"));
        }
        self.step.validate()?;
        for &t in self.record_times.iter().chain(&self.snapshot_times) {
            if !(t >= self.t_start && t <= self.t_end) {
                return Err(Error::invalid(format!("time {t} outside [t_start, t_end]")));
            }
        }
        if !(self.edge_tolerance > 0.0) {
            return Err(Error::invalid("edge_tolerance must be positive"));
        }
        if !(self.box_margin >= 0.0) {
            return Err(Error::invalid("box_margin must be non-negative"));
        }
        Ok(())
    }

    /// Sorted, deduplicated stop times (always including both ends).
    pub fn stops(&self) -> Vec<f64> {
        stop_times(self.t_start, self.t_end, self.records_per_decade, &self.record_times, &self.snapshot_times)
    }
}

/// `t_start`, `t_end`, log-spaced points and explicit times, merged.
pub(crate) fn stop_times(start: f64, end: f64, per_decade: u32, extra: &[f64], snaps: &[f64]) -> Vec<f64> {
    let mut t = vec![start, end];
    if per_decade > 0 && start > 0.0 {
        let decades = (end / start).log10();
        let count = (decades * per_decade as f64).ceil() as usize;
        for i in 1..count {
            t.push(start * 10f64.powf(decades * i as f64 / count as f64));
        }
    }
    t.extend_from_slice(extra);
    t.extend_from_slice(snaps);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    t
}

/// `Ξ`: radius beyond which the mass profile is below `10⁻⁶` of its peak.
pub fn profile_radius(n: u32, d: u32) -> Result<f64> {
    static CACHE: Mutex<Option<HashMap<(u32, u32), f64>>> = Mutex::new(None);
    if let Some(r) = CACHE.lock().expect("cache lock").as_ref().and_then(|m| m.get(&(n, d)).copied()) {
        return Ok(r);
    }
    let r = decay_radius(ProfileKind::Mass, n, d, 1e-6)?;
    CACHE.lock().expect("cache lock").get_or_insert_with(HashMap::new).insert((n, d), r);
    Ok(r)
}

/// `(L/2) / (Ξ t^{1/2n})`.
pub fn box_margin(grid: &Grid, n: u32, t_end: f64) -> Result<f64> {
    let xi = profile_radius(n, grid.dim as u32)?;
    Ok(0.5 * grid.length / (xi * t_end.powf(1.0 / (2.0 * n as f64))))
}

/// Sup-norm bound of the physical field from its DFT coefficients.
pub(crate) fn coefficient_sup_bound(u: &[Complex64]) -> f64 {
    u.iter().map(|z| z.norm()).sum::<f64>() / u.len() as f64
}

/// RK4 is stable on `[-2.78, 0]`; keep a margin.
pub(crate) const RK4_STABILITY: f64 = 2.5;

struct PhysicalModel {
    symbol: Vec<f64>,
    nl: NonlinearEval,
    ones: Vec<f64>,
}

impl PhysicalModel {
    fn new(grid: &Grid, n: u32, nl: &Nonlinearity, dealias: Dealias) -> Self {
        Self {
            symbol: linear_symbol(grid, n, 0.0),
            nl: NonlinearEval::new(nl, grid, dealias),
            ones: vec![1.0; nl.terms.len()],
        }
    }
}

/// `-|k|^{2n} + shift` in FFT order.
pub(crate) fn linear_symbol(grid: &Grid, n: u32, shift: f64) -> Vec<f64> {
    grid.k_squared().into_iter().map(|k2| -k2.powi(n as i32) + shift).collect()
}

pub(crate) fn propagate_diagonal(symbol: &[f64], h: f64, u: &mut [Complex64]) {
    for (z, s) in u.iter_mut().zip(symbol) {
        *z *= (s * h).exp();
    }
}

impl Model for PhysicalModel {
    fn propagate(&self, h: f64, u: &mut [Complex64]) -> Result<()> {
        propagate_diagonal(&self.symbol, h, u);
        Ok(())
    }

    fn explicit(&self, t: f64, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.nl.eval(u, &self.ones, t)
    }

    fn max_step(&self, _t: f64, u: &[Complex64]) -> f64 {
        if self.nl.is_empty() {
            return f64::INFINITY;
        }
        let stiff = self.nl.stiffness(coefficient_sup_bound(u), &self.ones);
        if stiff > 0.0 {
            RK4_STABILITY / stiff
        } else {
            f64::INFINITY
        }
    }
}

/// `∂t w` for the physical equation, evaluated spectrally.
pub fn rhs_spectral(w: &Field, n: u32, nl: &Nonlinearity, dealias: Dealias) -> Result<Field> {
    nl.validate(n, w.grid.dim as u32)?;
    let fft = w.grid.fft();
    let model = PhysicalModel::new(&w.grid, n, nl, dealias);
    let u = w.dft(&fft);
    let mut out = model.explicit(0.0, &u)?;
    for ((o, z), s) in out.iter_mut().zip(&u).zip(&model.symbol) {
        *o += z * s;
    }
    Ok(Field::from_dft(w.grid, &out, &fft))
}

/// Fraction of `Σ|ŵ|²` carried by modes with `|k_i| ≥ N/4` on some axis.
pub fn tail_fraction(grid: &Grid, u: &[Complex64]) -> f64 {
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, z) in u.iter().enumerate() {
        let e = z.norm_sqr();
        total += e;
        let idx = grid.unravel(i);
        if (0..grid.dim).any(|a| 4 * grid.signed_index(idx[a]).unsigned_abs() as usize >= grid.points) {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// A run that stopped early, with the last accepted state.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub time: f64,
    pub state: Field,
    pub record: RunRecord,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (last accepted state at t = {})", self.error, self.time)
    }
}

impl std::error::Error for RunFailure {}

impl From<Box<RunFailure>> for Error {
    fn from(f: Box<RunFailure>) -> Self {
        f.error
    }
}

pub type RunResult = std::result::Result<RunRecord, Box<RunFailure>>;

fn physical_columns(d: usize) -> Vec<String> {
    let mut c: Vec<String> = ["t", "sup_norm", "l2_norm", "mass"].iter().map(|s| s.to_string()).collect();
    c.extend((1..=d).map(|j| format!("moment_{j}")));
    c.push("tail_fraction".into());
    c.push("dt".into());
    c
}

fn physical_row(t: f64, field: &Field, u: &[Complex64], dt: f64) -> Vec<f64> {
    let mut row = vec![t, field.sup_norm(), field.l2_norm(), field.integral()];
    row.extend(field.first_moment());
    row.push(tail_fraction(&field.grid, u));
    row.push(dt);
    row
}

fn edge_check(field: &Field, t: f64, limit: f64) -> Result<()> {
    let ratio = field.edge_ratio();
    if ratio > limit {
        Err(Error::BoundaryContamination { time: t, ratio, limit })
    } else {
        Ok(())
    }
}

/// Integrate from `w0` at `config.t_start` to `config.t_end`.
pub fn integrate(w0: &Field, n: u32, nl: &Nonlinearity, config: &IntegratorConfig) -> RunResult {
    let grid = w0.grid;
    let fail_early = |error: Error| {
        Box::new(RunFailure {
            error,
            time: config.t_start,
            state: w0.clone(),
            record: RunRecord::new(physical_columns(grid.dim), serde_json::Value::Null),
        })
    };
    let setup = (|| -> Result<serde_json::Value> {
        config.validate()?;
        grid.validate()?;
        nl.validate(n, grid.dim as u32)?;
        let mut margin = serde_json::Value::Null;
        if config.box_margin > 0.0 {
            let m = box_margin(&grid, n, config.t_end)?;
            if m < config.box_margin {
                return Err(Error::invalid(format!(
                    "box too small: margin {m:.3} < required {} (increase L or lower box_margin)",
                    config.box_margin
                )));
            }
            margin = json!(m);
        }
        Ok(json!({
            "kind": "physical",
            "n": n,
            "grid": grid,
            "nonlinearity": nl,
            "integrator": config,
            "box_margin": margin,
            "initial": InitReport::of(w0),
        }))
    })();
    let metadata = match setup {
        Ok(m) => m,
        Err(e) => return Err(fail_early(e)),
    };
    let fft = grid.fft();
    let model = PhysicalModel::new(&grid, n, nl, config.dealias);
    let mut record = RunRecord::new(physical_columns(grid.dim), metadata);
    let stepper = match Stepper::new(&model, w0.dft(&fft), config.t_start, config.step) {
        Ok(s) => s,
        Err(e) => return Err(fail_early(e)),
    };
    let mut driver = Driver {
        stepper,
        fft: &fft,
        grid,
        edge_tolerance: config.edge_tolerance,
    };
    let snaps = &config.snapshot_times;
    let result = driver.run(&config.stops(), |t, field, u, dt, record: &mut RunRecord| {
        record.push_row(physical_row(t, field, u, dt))?;
        if snaps.iter().any(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)) {
            record.snapshots.push(Snapshot {
                time: t,
                field: field.clone(),
            });
        }
        Ok(())
    }, &mut record);
    finish(result, driver, record)
}

pub(crate) struct Driver<'a, M: Model> {
    pub stepper: Stepper<'a, M>,
    pub fft: &'a FftNd,
    pub grid: Grid,
    pub edge_tolerance: f64,
}

impl<M: Model> Driver<'_, M> {
    pub fn field(&self) -> Field {
        Field::from_dft(self.grid, self.stepper.state(), self.fft)
    }

    /// Step through `stops`, calling `on_stop` at each.
    pub fn run(
        &mut self,
        stops: &[f64],
        mut on_stop: impl FnMut(f64, &Field, &[Complex64], f64, &mut RunRecord) -> Result<()>,
        record: &mut RunRecord,
    ) -> Result<()> {
        for &target in stops {
            while self.stepper.time() < target {
                let accepted = self.stepper.step(target)?;
                if accepted && self.stepper.stats.accepted % EDGE_CHECK_INTERVAL == 0 {
                    edge_check(&self.field(), self.stepper.time(), self.edge_tolerance)?;
                }
            }
            let field = self.field();
            edge_check(&field, target, self.edge_tolerance)?;
            on_stop(target, &field, self.stepper.state(), self.stepper.stats.last_dt, record)?;
        }
        Ok(())
    }
}

pub(crate) fn finish<M: Model>(result: Result<()>, driver: Driver<'_, M>, mut record: RunRecord) -> RunResult {
    let stats: StepStats = driver.stepper.stats;
    if let Some(obj) = record.metadata.as_object_mut() {
        obj.insert("stats".into(), json!(stats));
    }
    match result {
        Ok(()) => Ok(record),
        Err(error) => {
            if let Some(obj) = record.metadata.as_object_mut() {
                obj.insert("error".into(), json!({"tag": error.tag(), "message": error.to_string()}));
            }
            Err(Box::new(RunFailure {
                error,
                time: driver.stepper.time(),
                state: driver.field(),
                record,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quiet(t_end: f64) -> IntegratorConfig {
        IntegratorConfig {
            box_margin: 0.0,
            ..IntegratorConfig::new(t_end)
        }
    }

    #[test]
    fn initial_moments_match_gaussian_integrals() {
        let g = Grid::new(1, 512, 80.0).unwrap();
        let (a, s) = (0.03, 2.0);
        let (_, r) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: a,
                width: s,
                center: None,
            },
            &g,
        )
        .unwrap();
        assert!((r.mass - a * s * (2.0 * PI).sqrt()).abs() < 1e-14);
        let (_, r) = init_perturbation(&InitialData::Dipole { amplitude: a, width: s }, &g).unwrap();
        assert!(r.mass.abs() < 1e-12);
        assert!((r.first_moment[0] - a * s * s * (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn undecayed_initial_data_is_rejected() {
        let g = Grid::new(1, 128, 40.0).unwrap();
        let wide = InitialData::Gaussian {
            amplitude: 1.0,
            width: 4.5,
            center: None,
        };
        assert!(matches!(init_perturbation(&wide, &g), Err(Error::Invalid(_))));
        let ok = InitialData::Gaussian {
            amplitude: 1.0,
            width: 2.0,
            center: None,
        };
        assert!(init_perturbation(&ok, &g).is_ok());
    }

    #[test]
    fn rhs_of_constants_vanishes() {
        let g = Grid::new(2, 64, 20.0).unwrap();
        let w = Field::from_fn(g, |_| 0.3);
        let r = rhs_spectral(&w, 2, &Nonlinearity::cahn_hilliard(), Dealias::TwoThirds).unwrap();
        assert!(r.sup_norm() < 1e-15);
    }

    #[test]
    fn linearised_single_mode() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let k = 3.0;
        let w = Field::from_fn(g, |x| 1e-3 * (k * x[0]).cos());
        let r = rhs_spectral(&w, 2, &Nonlinearity::none(), Dealias::None).unwrap();
        for (a, b) in r.values.iter().zip(&w.values) {
            assert!((a + k.powi(4) * b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_flow_is_exact() {
        let g = Grid::new(1, 512, 200.0).unwrap();
        let fft = g.fft();
        let (w0, _) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 0.05,
                width: 2.0,
                center: None,
            },
            &g,
        )
        .unwrap();
        let mut cfg = quiet(20.0);
        cfg.snapshot_times = vec![20.0];
        let rec = integrate(&w0, 2, &Nonlinearity::none(), &cfg).unwrap();
        let got = rec.snapshots[0].field.dft(&fft);
        let exact: Vec<Complex64> = w0
            .dft(&fft)
            .iter()
            .zip(g.k_squared())
            .map(|(z, k2)| z * (-k2 * k2 * 19.0).exp())
            .collect();
        let scale = exact.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let err = got.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err < 1e-10 * scale, "{err:e}");
    }

    #[test]
    fn mass_is_conserved() {
        let g = Grid::new(1, 512, 240.0).unwrap();
        let (w0, r0) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 0.3,
                width: 2.0,
                center: Some(vec![1.0]),
            },
            &g,
        )
        .unwrap();
        let rec = integrate(&w0, 2, &Nonlinearity::cahn_hilliard(), &quiet(50.0)).unwrap();
        for m in rec.column("mass").unwrap() {
            assert!((m - r0.mass).abs() < 1e-10 * r0.l1_norm);
        }
    }

    #[test]
    fn rk_self_convergence_is_fourth_order() {
        let g = Grid::new(1, 256, 64.0).unwrap();
        let (w0, _) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 0.5,
                width: 1.5,
                center: None,
            },
            &g,
        )
        .unwrap();
        let run = |dt: f64| {
            let mut cfg = quiet(1.5);
            cfg.step = StepControl {
                dt,
                adaptive: false,
                ..StepControl::default()
            };
            cfg.records_per_decade = 0;
            cfg.snapshot_times = vec![1.5];
            integrate(&w0, 2, &Nonlinearity::cahn_hilliard(), &cfg).unwrap().snapshots[0].field.clone()
        };
        let (a, b, c) = (run(0.004), run(0.002), run(0.001));
        let order = (a.sub(&b).l2_norm() / b.sub(&c).l2_norm()).log2();
        assert!(order >= 3.5, "order {order}");
    }

    #[test]
    fn rotation_equivariance_in_two_dimensions() {
        let g = Grid::new(2, 256, 80.0).unwrap();
        let n = g.points;
        let w0 = Field::from_fn(g, |x| 0.2 * (-(x[0] * x[0] / 2.0 + x[1] * x[1] / 4.5)).exp());
        // (i, j) -> (j, -i) on the periodic lattice.
        let rotate = |f: &Field| {
            let mut out = f.clone();
            for i in 0..n {
                for j in 0..n {
                    out.values[j * n + (n - i) % n] = f.values[i * n + j];
                }
            }
            out
        };
        let mut cfg = quiet(3.0);
        cfg.snapshot_times = vec![3.0];
        cfg.step.adaptive = false;
        cfg.step.dt = 0.01;
        let a = integrate(&w0, 2, &Nonlinearity::cahn_hilliard(), &cfg).unwrap();
        let b = integrate(&rotate(&w0), 2, &Nonlinearity::cahn_hilliard(), &cfg).unwrap();
        for col in ["sup_norm", "l2_norm", "mass"] {
            for (x, y) in a.column(col).unwrap().iter().zip(b.column(col).unwrap()) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{col}");
            }
        }
        let diff = rotate(&a.snapshots[0].field).sub(&b.snapshots[0].field).sup_norm();
        assert!(diff < 1e-10 * a.snapshots[0].field.sup_norm());
    }

    #[test]
    fn stops_include_records_and_snapshots() {
        let mut cfg = quiet(100.0);
        cfg.records_per_decade = 2;
        cfg.snapshot_times = vec![7.0];
        let s = cfg.stops();
        assert_eq!(s.first(), Some(&1.0));
        assert_eq!(s.last(), Some(&100.0));
        assert!(s.contains(&7.0));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn large_data_fails_with_state() {
        let g = Grid::new(1, 128, 40.0).unwrap();
        let (w0, _) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 1e7,
                width: 2.0,
                center: None,
            },
            &g,
        )
        .unwrap();
        let err = integrate(&w0, 2, &Nonlinearity::cahn_hilliard(), &quiet(10.0)).unwrap_err();
        assert_eq!(err.error.kind(), crate::ErrorKind::Numerical);
        assert_eq!(err.state.grid, g);
    }

    #[test]
    fn small_box_is_rejected() {
        let g = Grid::new(1, 128, 40.0).unwrap();
        let (w0, _) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 0.01,
                width: 2.0,
                center: None,
            },
            &g,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(100.0);
        let err = integrate(&w0, 2, &Nonlinearity::none(), &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Invalid(_)));
    }

    #[test]
    fn boundary_contamination_aborts() {
        // A slowly decaying linear solution reaches the edge of a small box.
        let g = Grid::new(1, 64, 16.0).unwrap();
        let (w0, _) = init_perturbation(
            &InitialData::Gaussian {
                amplitude: 0.01,
                width: 1.0,
                center: None,
            },
            &g,
        )
        .unwrap();
        let err = integrate(&w0, 2, &Nonlinearity::none(), &quiet(200.0)).unwrap_err();
        assert!(matches!(err.error, Error::BoundaryContamination { .. }), "{}", err.error);
        assert!(err.time < 200.0);
    }
}
