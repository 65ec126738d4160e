//! Relevance classification of polynomial nonlinearities under scaling.
//!
//! A monomial `∏_j (∂^{α_j} u)^{k_j}` in `∂_t u = (-1)^{n+1} Δ^n u + F`
//! acquires the factor `η^p` in scaling variables, where
//! `p = Σ_j (|α_j| + d) k_j - (2n + d)`. Positive `p` makes the term
//! irrelevant, `p = 0` critical and negative `p` relevant. Everything here
//! is exact integer/rational arithmetic.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::ScalingFrame;

/// Derivative orders `(α_1, …, α_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        Self(orders)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// `α = order · e_axis`.
    pub fn axis(d: usize, axis: usize, order: u32) -> Self {
        let mut v = vec![0; d];
        v[axis] = order;
        Self(v)
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total derivative degree `|α|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub alpha: MultiIndex,
    pub power: u32,
}

impl Factor {
    pub fn new(alpha: MultiIndex, power: u32) -> Self {
        Self { alpha, power }
    }
}

/// `coefficient · ∏ (∂^{alpha} u)^{power}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearTerm {
    pub coefficient: f64,
    pub factors: Vec<Factor>,
}

impl NonlinearTerm {
    pub fn new(coefficient: f64, factors: Vec<Factor>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    /// `K = Σ k_j`.
    pub fn total_power(&self) -> u32 {
        self.factors.iter().map(|f| f.power).sum()
    }

    /// `Σ_j (|α_j| + d) k_j`, the scaling weight of the monomial.
    pub fn scaling_weight(&self, d: u32) -> i64 {
        self.factors
            .iter()
            .map(|f| (f.alpha.degree() as i64 + d as i64) * f.power as i64)
            .sum()
    }

    pub fn validate(&self, n: u32, d: u32) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::invalid("nonlinear term has no factors"));
        }
        if !self.coefficient.is_finite() {
            return Err(Error::invalid("nonlinear term coefficient is not finite"));
        }
        let max_order = 2 * n - 1;
        for (i, f) in self.factors.iter().enumerate() {
            if f.alpha.dim() != d as usize {
                return Err(Error::invalid(format!(
                    "multi-index {} has length {}, expected d = {d}",
                    f.alpha,
                    f.alpha.dim()
                )));
            }
            if f.power == 0 {
                return Err(Error::invalid(format!("factor {} has power 0", f.alpha)));
            }
            if f.alpha.degree() > max_order {
                return Err(Error::invalid(format!(
                    "|α| = {} for {} exceeds 2n-1 = {max_order}",
                    f.alpha.degree(),
                    f.alpha
                )));
            }
            if self.factors[..i].iter().any(|g| g.alpha == f.alpha) {
                return Err(Error::invalid(format!(
                    "multi-index {} repeated within one term",
                    f.alpha
                )));
            }
        }
        Ok(())
    }

    /// Growth rate of this term's coefficient in the scaled time of `frame`:
    /// `1 + β - Σ_j (β + |α_j|/(2n)) k_j`. In the standard frame this is
    /// `-p/(2n)`.
    pub fn scaled_rate(&self, frame: &ScalingFrame) -> Rational64 {
        let two_n = 2 * frame.n as i64;
        let mut rate = Rational64::from_integer(1) + frame.beta;
        for f in &self.factors {
            rate -= (frame.beta + Rational64::new(f.alpha.degree() as i64, two_n))
                * Rational64::from_integer(f.power as i64);
        }
        rate
    }

    /// Canonical form used for structural comparisons: factors sorted by
    /// multi-index, coefficient dropped.
    fn signature(&self) -> Vec<(Vec<u32>, u32)> {
        let mut s: Vec<_> = self
            .factors
            .iter()
            .map(|f| (f.alpha.orders().to_vec(), f.power))
            .collect();
        s.sort();
        s
    }
}

impl fmt::Display for NonlinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for fac in &self.factors {
            if fac.alpha.degree() == 0 {
                write!(f, "·u")?;
            } else {
                write!(f, "·∂{}u", fac.alpha)?;
            }
            if fac.power != 1 {
                write!(f, "^{}", fac.power)?;
            }
        }
        Ok(())
    }
}

/// Polynomial PDE `∂_t u = (-1)^{n+1} Δ^n u + Σ terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    pub n: u32,
    pub d: u32,
    #[serde(default)]
    pub nonlinearity: Vec<NonlinearTerm>,
}

impl PdeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("n and d must be positive"));
        }
        self.nonlinearity
            .iter()
            .try_for_each(|t| t.validate(self.n, self.d))
    }

    /// Cahn-Hilliard about `u = 3^{-1/2}`: `√3 Δ(w²) + Δ(w³)` expanded into
    /// monomials.
    pub fn cahn_hilliard(d: u32) -> Self {
        let d_us = d as usize;
        let sqrt3 = 3f64.sqrt();
        let mut terms = Vec::new();
        for i in 0..d_us {
            // Δ(w²) = Σ_i 2 w ∂_i² w + 2 (∂_i w)²
            terms.push(NonlinearTerm::new(
                2.0 * sqrt3,
                vec![
                    Factor::new(MultiIndex::zero(d_us), 1),
                    Factor::new(MultiIndex::axis(d_us, i, 2), 1),
                ],
            ));
            terms.push(NonlinearTerm::new(
                2.0 * sqrt3,
                vec![Factor::new(MultiIndex::axis(d_us, i, 1), 2)],
            ));
        }
        for i in 0..d_us {
            // Δ(w³) = Σ_i 3 w² ∂_i² w + 6 w (∂_i w)²
            terms.push(NonlinearTerm::new(
                3.0,
                vec![
                    Factor::new(MultiIndex::zero(d_us), 2),
                    Factor::new(MultiIndex::axis(d_us, i, 2), 1),
                ],
            ));
            terms.push(NonlinearTerm::new(
                6.0,
                vec![
                    Factor::new(MultiIndex::zero(d_us), 1),
                    Factor::new(MultiIndex::axis(d_us, i, 1), 2),
                ],
            ));
        }
        Self {
            n: 2,
            d,
            nonlinearity: terms,
        }
    }

    /// True when every term has the shape of a term of the expanded
    /// Cahn-Hilliard nonlinearity in one dimension (coefficients ignored).
    fn is_cahn_hilliard_1d(&self) -> bool {
        if self.n != 2 || self.d != 1 {
            return false;
        }
        let reference: Vec<_> = Self::cahn_hilliard(1)
            .nonlinearity
            .iter()
            .map(NonlinearTerm::signature)
            .collect();
        !self.nonlinearity.is_empty()
            && self
                .nonlinearity
                .iter()
                .all(|t| reference.contains(&t.signature()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relevance {
    Irrelevant,
    Critical,
    Relevant,
}

impl fmt::Display for Relevance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relevance::Irrelevant => "irrelevant",
            Relevance::Critical => "critical",
            Relevance::Relevant => "relevant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Relevance,
    /// Scaling exponent `p`; the term carries `η^p` in scaling variables.
    pub p: i64,
    /// Total power `K = Σ k_j`.
    pub total_power: u32,
}

impl Classification {
    fn from_p(p: i64, total_power: u32) -> Self {
        let label = match p.signum() {
            1 => Relevance::Irrelevant,
            0 => Relevance::Critical,
            _ => Relevance::Relevant,
        };
        Self {
            label,
            p,
            total_power,
        }
    }
}

/// Classify one monomial. The coefficient plays no role.
pub fn classify_term(term: &NonlinearTerm, n: u32, d: u32) -> Result<Classification> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("n and d must be positive"));
    }
    term.validate(n, d)?;
    let p = term.scaling_weight(d) - (2 * n as i64 + d as i64);
    Ok(Classification::from_p(p, term.total_power()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub term: NonlinearTerm,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeReport {
    pub n: u32,
    pub d: u32,
    pub terms: Vec<TermReport>,
    /// Most relevant label over all terms; `Irrelevant` for `F = 0`.
    pub aggregate: Relevance,
}

pub fn classify_pde(spec: &PdeSpec) -> Result<PdeReport> {
    spec.validate()?;
    let terms = spec
        .nonlinearity
        .iter()
        .map(|t| {
            Ok(TermReport {
                term: t.clone(),
                classification: classify_term(t, spec.n, spec.d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = terms
        .iter()
        .map(|t| t.classification.label)
        .max()
        .unwrap_or(Relevance::Irrelevant);
    Ok(PdeReport {
        n: spec.n,
        d: spec.d,
        terms,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RatePrediction {
    Predicted {
        /// Sup-norm decays like `t^{-decay_exponent}`.
        #[serde(with = "crate::ratio_serde")]
        decay_exponent: Rational64,
        /// Remainder after subtracting the profile decays like
        /// `t^{-(remainder_exponent - ε)}`.
        #[serde(with = "crate::ratio_serde")]
        remainder_exponent: Rational64,
        frame: ScalingFrame,
    },
    NoPrediction {
        reason: String,
    },
}

impl RatePrediction {
    pub fn frame(&self) -> Option<&ScalingFrame> {
        match self {
            RatePrediction::Predicted { frame, .. } => Some(frame),
            RatePrediction::NoPrediction { .. } => None,
        }
    }
}

pub fn predicted_rates(spec: &PdeSpec) -> Result<RatePrediction> {
    let report = classify_pde(spec)?;
    rates_for(spec, report.aggregate)
}

pub fn rates_for(spec: &PdeSpec, aggregate: Relevance) -> Result<RatePrediction> {
    let two_n = 2 * spec.n as i64;
    match aggregate {
        Relevance::Irrelevant | Relevance::Critical => Ok(RatePrediction::Predicted {
            decay_exponent: Rational64::new(spec.d as i64, two_n),
            remainder_exponent: Rational64::new(spec.d as i64 + 1, two_n),
            frame: ScalingFrame::standard(spec.n, spec.d)?,
        }),
        Relevance::Relevant if spec.is_cahn_hilliard_1d() => Ok(RatePrediction::Predicted {
            decay_exponent: Rational64::new(1, 2),
            remainder_exponent: Rational64::new(3, 4),
            frame: ScalingFrame::dipole(),
        }),
        Relevance::Relevant => Ok(RatePrediction::NoPrediction {
            reason: "relevant nonlinearity outside the one-dimensional Cahn-Hilliard case".into(),
        }),
    }
}
