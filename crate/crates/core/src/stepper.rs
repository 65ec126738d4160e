//! Integrating-factor (Lawson) RK4 for `u' = L u + N(t, u)` with `e^{hL}`
//! applied exactly, plus step-doubling error control with a PI step-size
//! controller.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A split evolution problem on a vector of Fourier coefficients.
pub trait Model {
    /// `u ← e^{hL} u`.
    fn propagate(&self, h: f64, u: &mut [Complex64]) -> Result<()>;
    /// Explicit part `N(t, u)`.
    fn explicit(&self, t: f64, u: &[Complex64]) -> Result<Vec<Complex64>>;
    /// Largest step for which explicit RK4 on `N` is expected to be stable.
    fn max_step(&self, t: f64, u: &[Complex64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    /// Initial step (the step itself when `adaptive` is off).
    pub dt: f64,
    pub adaptive: bool,
    /// Local error target per unit time, measured as a bound on the
    /// sup-norm of the step-doubling difference.
    pub tolerance: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Multiplies the model's stability limit.
    pub cfl_safety: f64,
    pub max_steps: u64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            adaptive: true,
            tolerance: 1e-9,
            dt_min: 1e-12,
            dt_max: f64::INFINITY,
            cfl_safety: 0.9,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if !(self.dt_min > 0.0 && self.dt_max >= self.dt_min) {
            return Err(Error::invalid("need 0 < dt_min <= dt_max"));
        }
        if !(self.cfl_safety > 0.0) {
            return Err(Error::invalid("cfl_safety must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
    pub last_dt: f64,
    pub min_dt: f64,
    pub max_dt: f64,
}

fn axpy(a: f64, x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(yi, xi)| yi + xi * a).collect()
}

/// One Lawson RK4 step.
pub fn lawson_rk4<M: Model + ?Sized>(model: &M, t: f64, h: f64, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let half = 0.5 * h;
    let k1 = model.explicit(t, u)?;
    let mut a = axpy(half, &k1, u);
    model.propagate(half, &mut a)?;
    let k2 = model.explicit(t + half, &a)?;
    let mut eu_half = u.to_vec();
    model.propagate(half, &mut eu_half)?;
    let b = axpy(half, &k2, &eu_half);
    let k3 = model.explicit(t + half, &b)?;
    let mut c = axpy(h, &k3, &eu_half);
    model.propagate(half, &mut c)?;
    let k4 = model.explicit(t + h, &c)?;
    // u⁺ = E u + h/6 (E k1 + 2 E½ (k2 + k3) + k4)
    //    = E½ [E½ (u + h/6 k1) + h/3 (k2 + k3)] + h/6 k4
    let mut out = axpy(h / 6.0, &k1, u);
    model.propagate(half, &mut out)?;
    for ((o, y), z) in out.iter_mut().zip(&k2).zip(&k3) {
        *o += (y + z) * (h / 3.0);
    }
    model.propagate(half, &mut out)?;
    for (o, k) in out.iter_mut().zip(&k4) {
        *o += k * (h / 6.0);
    }
    Ok(out)
}

fn check_finite(u: &[Complex64], t: f64) -> Result<()> {
    if u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp {
            time: t,
            detail: "non-finite state after a step".into(),
        })
    }
}

/// Sup-norm bound `Σ|Δ̂| / M` of the physical difference of two states.
fn difference_bound(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>() / a.len() as f64
}

const K_I: f64 = 0.3 / 4.0;
const K_P: f64 = 0.4 / 4.0;

pub struct Stepper<'a, M: Model + ?Sized> {
    model: &'a M,
    control: StepControl,
    t: f64,
    u: Vec<Complex64>,
    h: f64,
    prev_ratio: f64,
    last_failure: Option<Error>,
    pub stats: StepStats,
}

impl<'a, M: Model + ?Sized> Stepper<'a, M> {
    pub fn new(model: &'a M, u0: Vec<Complex64>, t0: f64, control: StepControl) -> Result<Self> {
        control.validate()?;
        Ok(Self {
            model,
            control,
            t: t0,
            u: u0,
            h: control.dt,
            prev_ratio: 1.0,
            last_failure: None,
            stats: StepStats {
                min_dt: f64::INFINITY,
                ..Default::default()
            },
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[Complex64] {
        &self.u
    }

    pub fn into_state(self) -> Vec<Complex64> {
        self.u
    }

    fn record_step(&mut self, h: f64) {
        self.stats.accepted += 1;
        self.stats.last_dt = h;
        self.stats.min_dt = self.stats.min_dt.min(h);
        self.stats.max_dt = self.stats.max_dt.max(h);
    }

    /// Advance to exactly `target`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.t < target {
            self.step(target)?;
        }
        Ok(())
    }

    fn attempt(&self, h: f64) -> Result<(Vec<Complex64>, f64)> {
        if !self.control.adaptive {
            return Ok((lawson_rk4(self.model, self.t, h, &self.u)?, 0.0));
        }
        let big = lawson_rk4(self.model, self.t, h, &self.u)?;
        let mid = lawson_rk4(self.model, self.t, 0.5 * h, &self.u)?;
        let small = lawson_rk4(self.model, self.t + 0.5 * h, 0.5 * h, &mid)?;
        let ratio = (difference_bound(&big, &small) / (self.control.tolerance * h)).max(1e-10);
        Ok((small, ratio))
    }

    /// One step attempt towards `target` (never past it). Returns whether
    /// the step was accepted.
    pub fn step(&mut self, target: f64) -> Result<bool> {
        if self.t >= target {
            return Ok(true);
        }
        if self.stats.accepted + self.stats.rejected >= self.control.max_steps {
            return Err(Error::StepBudget {
                time: self.t,
                steps: self.control.max_steps,
            });
        }
        let remaining = target - self.t;
        let limit = (self.control.cfl_safety * self.model.max_step(self.t, &self.u)).min(self.control.dt_max);
        let proposal = self.h.min(limit);
        if proposal < self.control.dt_min {
            return Err(Error::StepUnderflow {
                time: self.t,
                dt: proposal,
            });
        }
        let mut h = proposal.min(remaining);
        let clipped = h < proposal;
        // Avoid a sliver step just before the target.
        if remaining - h < 1e-9 * remaining.max(1.0) {
            h = remaining;
        }
        self.stats.evaluations += if self.control.adaptive { 12 } else { 4 };
        let trial = self.attempt(h).and_then(|(next, ratio)| {
            check_finite(&next, self.t + h)?;
            Ok((next, ratio))
        });
        let ratio = match trial {
            Ok((next, ratio)) if ratio <= 1.0 => {
                self.u = next;
                self.t = if h == remaining { target } else { self.t + h };
                self.record_step(h);
                if self.control.adaptive {
                    let factor = (0.9 * ratio.powf(-(K_I + K_P)) * self.prev_ratio.powf(K_P)).clamp(0.2, 5.0);
                    let mut next = h * factor;
                    if clipped {
                        next = next.max(proposal);
                    }
                    self.h = next;
                    self.prev_ratio = ratio;
                }
                return Ok(true);
            }
            Ok((_, ratio)) => ratio,
            // A blow-up on a trial step may be an overly long step.
            Err(e @ Error::BlowUp { .. }) if self.control.adaptive => {
                self.last_failure = Some(e);
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        self.stats.rejected += 1;
        let factor = if ratio.is_finite() {
            (0.9 * ratio.powf(-0.25)).clamp(0.2, 0.9)
        } else {
            0.2
        };
        self.h = h * factor;
        if self.h < self.control.dt_min {
            return Err(match self.last_failure.take() {
                Some(e) => e,
                None => Error::StepUnderflow { time: self.t, dt: self.h },
            });
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `u' = λu + c u²` per component, with exact solution available.
    struct Logistic {
        lambda: Vec<f64>,
        c: f64,
    }

    impl Model for Logistic {
        fn propagate(&self, h: f64, u: &mut [Complex64]) -> Result<()> {
            for (z, l) in u.iter_mut().zip(&self.lambda) {
                *z *= (l * h).exp();
            }
            Ok(())
        }
        fn explicit(&self, _t: f64, u: &[Complex64]) -> Result<Vec<Complex64>> {
            Ok(u.iter().map(|z| z * z * self.c).collect())
        }
        fn max_step(&self, _t: f64, _u: &[Complex64]) -> f64 {
            f64::INFINITY
        }
    }

    fn exact(l: f64, c: f64, u0: f64, t: f64) -> f64 {
        // Bernoulli equation: 1/u = (1/u0 + c/l) e^{-lt} - c/l.
        1.0 / ((1.0 / u0 + c / l) * (-l * t).exp() - c / l)
    }

    #[test]
    fn linear_part_is_exact() {
        let m = Logistic {
            lambda: vec![-1e4, -3.0, 0.0],
            c: 0.0,
        };
        let u = vec![Complex64::new(1.0, 0.0); 3];
        let out = lawson_rk4(&m, 0.0, 0.5, &u).unwrap();
        assert_eq!(out[0].re, (-5e3f64).exp());
        assert!((out[1].re - (-1.5f64).exp()).abs() < 1e-16);
        assert_eq!(out[2].re, 1.0);
    }

    #[test]
    fn fourth_order_convergence() {
        let (l, c, u0, t_end) = (-2.0, 0.8, 0.7, 1.0);
        let m = Logistic { lambda: vec![l], c };
        let run = |n: usize| {
            let control = StepControl {
                dt: t_end / n as f64,
                adaptive: false,
                ..Default::default()
            };
            let mut s = Stepper::new(&m, vec![Complex64::new(u0, 0.0)], 0.0, control).unwrap();
            s.advance_to(t_end).unwrap();
            (s.state()[0].re - exact(l, c, u0, t_end)).abs()
        };
        let e1 = run(10);
        let e2 = run(20);
        let order = (e1 / e2).log2();
        assert!(order > 3.8 && order < 4.3, "order {order}");
    }

    #[test]
    fn adaptive_run_meets_tolerance_and_hits_targets() {
        let (l, c, u0) = (-1.0, 1.5, 0.5);
        let m = Logistic { lambda: vec![l], c };
        let control = StepControl {
            dt: 0.1,
            tolerance: 1e-8,
            ..Default::default()
        };
        let mut s = Stepper::new(&m, vec![Complex64::new(u0, 0.0)], 0.0, control).unwrap();
        for target in [0.3, 1.0, 2.5, 7.0] {
            s.advance_to(target).unwrap();
            assert_eq!(s.time(), target);
            assert!((s.state()[0].re - exact(l, c, u0, target)).abs() < 1e-7);
        }
        assert!(s.stats.accepted > 0);
    }

    #[test]
    fn blow_up_is_reported() {
        // u' = u² from u0 = 1 blows up at t = 1.
        let m = Logistic { lambda: vec![0.0], c: 1.0 };
        let control = StepControl {
            dt: 0.01,
            ..Default::default()
        };
        let mut s = Stepper::new(&m, vec![Complex64::new(1.0, 0.0)], 0.0, control).unwrap();
        let r = s.advance_to(2.0);
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::BlowUp { .. })), "{r:?}");
    }

    #[test]
    fn step_budget() {
        let m = Logistic { lambda: vec![-1.0], c: 0.0 };
        let control = StepControl {
            dt: 0.1,
            adaptive: false,
            max_steps: 5,
            ..Default::default()
        };
        let mut s = Stepper::new(&m, vec![Complex64::new(1.0, 0.0)], 0.0, control).unwrap();
        assert!(matches!(s.advance_to(1.0), Err(Error::StepBudget { .. })));
    }
}
