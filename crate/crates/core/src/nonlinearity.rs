//! Nonlinear terms in the form the solvers evaluate, and their
//! pseudo-spectral evaluation.

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::frame::ScalingFrame;
use crate::grid::{Dealias, Grid};
use crate::relevance::{Factor, MultiIndex, NonlinearTerm, PdeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    /// `c Δ(w^K)`, evaluated in conservative form.
    LaplacianOfPower { coefficient: f64, power: u32 },
    /// A product of derivatives `c ∏ (∂^α w)^k`.
    Monomial { term: NonlinearTerm },
}

impl Term {
    /// Exponent `r` such that the term enters the scaled equation with the
    /// factor `e^{rτ}`.
    pub fn scaled_rate(&self, frame: &ScalingFrame) -> Rational64 {
        match self {
            Term::LaplacianOfPower { power, .. } => {
                // w = t^{-β} v(x / t^{1/2n}) gives Δ(w^K) = t^{-βK - 1/n} Δ_ξ(v^K).
                Rational64::from_integer(1) + frame.beta * Rational64::from_integer(1 - *power as i64)
                    - Rational64::new(1, frame.n as i64)
            }
            Term::Monomial { term } => term.scaled_rate(frame),
        }
    }

    /// Expansion into products of derivatives, for classification.
    pub fn monomials(&self, d: usize) -> Vec<NonlinearTerm> {
        match self {
            Term::LaplacianOfPower { coefficient, power } => {
                // Δ(w^K) = Σ_i K w^{K-1} ∂_i²w + K(K-1) w^{K-2} (∂_i w)².
                let k = *power;
                let mut out = Vec::new();
                for axis in 0..d {
                    if k == 1 {
                        out.push(NonlinearTerm::new(
                            *coefficient,
                            vec![Factor::new(MultiIndex::axis(d, axis, 2), 1)],
                        ));
                        continue;
                    }
                    out.push(NonlinearTerm::new(
                        coefficient * k as f64,
                        vec![
                            Factor::new(MultiIndex::zero(d), k - 1),
                            Factor::new(MultiIndex::axis(d, axis, 2), 1),
                        ],
                    ));
                    let mut factors = vec![Factor::new(MultiIndex::axis(d, axis, 1), 2)];
                    if k > 2 {
                        factors.insert(0, Factor::new(MultiIndex::zero(d), k - 2));
                    }
                    out.push(NonlinearTerm::new(coefficient * (k * (k - 1)) as f64, factors));
                }
                out
            }
            Term::Monomial { term } => vec![term.clone()],
        }
    }

    fn validate(&self, n: u32, d: u32) -> Result<()> {
        match self {
            Term::LaplacianOfPower { coefficient, power } => {
                if !coefficient.is_finite() {
                    return Err(Error::invalid("nonlinearity: coefficient must be finite"));
                }
                if *power < 1 {
                    return Err(Error::invalid("nonlinearity: power must be >= 1"));
                }
                if n < 2 {
                    // Second derivatives must stay below the order 2n of the linear part.
                    return Err(Error::invalid("nonlinearity: Δ(w^K) needs n >= 2"));
                }
                Ok(())
            }
            Term::Monomial { term } => term.validate(n, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nonlinearity {
    pub terms: Vec<Term>,
}

impl Nonlinearity {
    pub fn none() -> Self {
        Self::default()
    }

    /// `√3 Δ(w²) + Δ(w³)`: Cahn-Hilliard expanded about `u = 3^{-1/2}`.
    pub fn cahn_hilliard() -> Self {
        Self {
            terms: vec![
                Term::LaplacianOfPower {
                    coefficient: 3f64.sqrt(),
                    power: 2,
                },
                Term::LaplacianOfPower {
                    coefficient: 1.0,
                    power: 3,
                },
            ],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every term sits under a Laplacian, so `∫F = 0`.
    pub fn is_conservative(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::LaplacianOfPower { .. }))
    }

    pub fn validate(&self, n: u32, d: u32) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.validate(n, d))
    }

    /// The equivalent sum of monomials, for the relevance classifier.
    pub fn to_pde_spec(&self, n: u32, d: u32) -> PdeSpec {
        PdeSpec {
            n,
            d,
            nonlinearity: self.terms.iter().flat_map(|t| t.monomials(d as usize)).collect(),
        }
    }

    pub fn scaled_rates(&self, frame: &ScalingFrame) -> Vec<Rational64> {
        self.terms.iter().map(|t| t.scaled_rate(frame)).collect()
    }
}

enum Prepared {
    Power { coefficient: f64, power: u32, slot: usize },
    Product { coefficient: f64, factors: Vec<(usize, u32)>, slot: usize },
}

/// Evaluates `F̂` from DFT coefficients `ŵ` on a fixed grid.
pub struct NonlinearEval {
    grid: Grid,
    fft: FftNd,
    mask: Option<Vec<bool>>,
    k_squared: Vec<f64>,
    /// Distinct derivative multipliers used by product terms.
    derivs: Vec<(MultiIndex, Vec<Complex64>)>,
    terms: Vec<Prepared>,
    has_power: bool,
    /// Largest `|k|²` passing the dealiasing mask.
    k2_max: f64,
}

impl NonlinearEval {
    pub fn new(nl: &Nonlinearity, grid: &Grid, dealias: Dealias) -> Self {
        let mut derivs: Vec<(MultiIndex, Vec<Complex64>)> = Vec::new();
        let mut terms = Vec::new();
        for (slot, t) in nl.terms.iter().enumerate() {
            match t {
                Term::LaplacianOfPower { coefficient, power } => terms.push(Prepared::Power {
                    coefficient: *coefficient,
                    power: *power,
                    slot,
                }),
                Term::Monomial { term } => {
                    let factors = term
                        .factors
                        .iter()
                        .map(|f| {
                            let idx = match derivs.iter().position(|(a, _)| *a == f.alpha) {
                                Some(i) => i,
                                None => {
                                    derivs.push((f.alpha.clone(), grid.derivative_multiplier(&f.alpha)));
                                    derivs.len() - 1
                                }
                            };
                            (idx, f.power)
                        })
                        .collect();
                    terms.push(Prepared::Product {
                        coefficient: term.coefficient,
                        factors,
                        slot,
                    });
                }
            }
        }
        let has_power = terms.iter().any(|t| matches!(t, Prepared::Power { .. }));
        let mask = (dealias != Dealias::None).then(|| dealias.mask(grid));
        let k_squared = grid.k_squared();
        let k2_max = k_squared
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.as_ref().is_none_or(|m| m[*i]))
            .fold(0.0f64, |a, (_, &k2)| a.max(k2));
        Self {
            grid: *grid,
            fft: grid.fft(),
            mask,
            k_squared,
            k2_max,
            derivs,
            terms,
            has_power,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn masked(&self, u: &[Complex64]) -> Vec<Complex64> {
        match &self.mask {
            Some(m) => u.iter().zip(m).map(|(z, &k)| if k { *z } else { Complex64::default() }).collect(),
            None => u.to_vec(),
        }
    }

    /// `F̂` with term `i` multiplied by `scales[i]`. Fails on non-finite
    /// intermediate values.
    pub fn eval(&self, u: &[Complex64], scales: &[f64], time: f64) -> Result<Vec<Complex64>> {
        let len = self.grid.len();
        let mut out = vec![Complex64::default(); len];
        if self.terms.is_empty() {
            return Ok(out);
        }
        let base = self.masked(u);
        let physical = |coeffs: &[Complex64]| -> Vec<f64> {
            let mut c = coeffs.to_vec();
            self.fft.inverse(&mut c);
            c.into_iter().map(|z| z.re).collect()
        };
        let w = physical(&base);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time,
                detail: "non-finite values in the solution".into(),
            });
        }
        if self.has_power {
            // All Δ(w^K) terms share one transform.
            let mut g = vec![Complex64::default(); len];
            for t in &self.terms {
                if let Prepared::Power {
                    coefficient,
                    power,
                    slot,
                } = t
                {
                    let c = coefficient * scales[*slot];
                    for (gi, &wi) in g.iter_mut().zip(&w) {
                        gi.re += c * wi.powi(*power as i32);
                    }
                }
            }
            self.fft.forward(&mut g);
            for ((o, gi), k2) in out.iter_mut().zip(&g).zip(&self.k_squared) {
                *o -= gi * k2;
            }
        }
        let products: Vec<&Prepared> = self
            .terms
            .iter()
            .filter(|t| matches!(t, Prepared::Product { .. }))
            .collect();
        if !products.is_empty() {
            let deriv_fields: Vec<Vec<f64>> = self
                .derivs
                .iter()
                .map(|(_, m)| {
                    let c: Vec<Complex64> = base.iter().zip(m).map(|(a, b)| a * b).collect();
                    physical(&c)
                })
                .collect();
            let mut g = vec![Complex64::default(); len];
            for t in products {
                if let Prepared::Product {
                    coefficient,
                    factors,
                    slot,
                } = t
                {
                    let c = coefficient * scales[*slot];
                    for (i, gi) in g.iter_mut().enumerate() {
                        let mut v = c;
                        for &(idx, pow) in factors {
                            v *= deriv_fields[idx][i].powi(pow as i32);
                        }
                        gi.re += v;
                    }
                }
            }
            self.fft.forward(&mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += gi;
            }
        }
        if let Some(m) = &self.mask {
            for (o, &k) in out.iter_mut().zip(m) {
                if !k {
                    *o = Complex64::default();
                }
            }
        }
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp {
                time,
                detail: "non-finite nonlinear term".into(),
            });
        }
        Ok(out)
    }

    /// Rough bound on the explicit eigenvalues of the linearised
    /// nonlinearity at amplitude `sup`, used to cap the step.
    pub fn stiffness(&self, sup: f64, scales: &[f64]) -> f64 {
        let k2 = self.k2_max;
        self.terms
            .iter()
            .map(|t| match t {
                Prepared::Power {
                    coefficient,
                    power,
                    slot,
                } => {
                    let k = *power as i32;
                    (coefficient * scales[*slot]).abs() * k as f64 * sup.powi(k - 1) * k2
                }
                Prepared::Product {
                    coefficient,
                    factors,
                    slot,
                } => {
                    let total: u32 = factors.iter().map(|f| f.1).sum();
                    let order = factors
                        .iter()
                        .map(|&(idx, _)| self.derivs[idx].0.degree())
                        .max()
                        .unwrap_or(0);
                    (coefficient * scales[*slot]).abs()
                        * total as f64
                        * sup.powi(total as i32 - 1)
                        * k2.powf(order as f64 / 2.0)
                }
            })
            .sum()
    }
}
