//! The rescaled linear operator `ℒ = -(p·p)^n - (1/2n) p·∇_p` in Fourier
//! variables: eigenpairs, self-similar profiles, the semigroup and its
//! convolution kernel.

mod kernel;
mod profile;
mod semigroup;

pub use kernel::{
    default_decay_range, kernel_decay_fit, kernel_g, kernel_radial, predicted_decay, truncation_radius, DecayFit,
    KernelSample,
};
pub use profile::{decay_radius, profile, profile_of_kind, profile_value, Profile, ProfileKind, ProfileOptions};
pub use semigroup::{commutation_check, semigroup_apply, semigroup_apply_with, EDGE_TOLERANCE};

use num_complex::Complex64;
use num_rational::Rational64;

use crate::frame::ScalingFrame;
use crate::grid::{Grid, SpectralField};
use crate::relevance::MultiIndex;

/// Eigenvalue of the `j`-th eigenspace, `β - (d + j)/(2n)`.
pub fn eigenvalue(j: u32, frame: &ScalingFrame) -> Rational64 {
    frame.beta - Rational64::new((frame.d + j) as i64, 2 * frame.n as i64)
}

/// `a(τ) = 1 - e^{-τ}`.
pub fn a_of_tau(tau: f64) -> f64 {
    -(-tau).exp_m1()
}

/// Eigenfunction `φ_α(p) = p^α e^{-(p·p)^n}` of `ℒ` in Fourier variables.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFunction {
    pub alpha: MultiIndex,
    pub n: u32,
}

impl EigenFunction {
    pub fn new(alpha: MultiIndex, n: u32) -> Self {
        Self { alpha, n }
    }

    fn monomial(&self, p: &[f64]) -> f64 {
        self.alpha
            .orders()
            .iter()
            .zip(p)
            .map(|(&o, &x)| x.powi(o as i32))
            .product()
    }

    fn radial(&self, p: &[f64]) -> f64 {
        let pp: f64 = p.iter().map(|x| x * x).sum();
        pp.powi(self.n as i32)
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.monomial(p) * (-self.radial(p)).exp()
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n as i32;
        let pp: f64 = p.iter().map(|x| x * x).sum();
        let e = (-pp.powi(n)).exp();
        let mono = self.monomial(p);
        let orders = self.alpha.orders();
        (0..p.len())
            .map(|i| {
                let o = orders[i] as i32;
                let dmono = if o == 0 {
                    0.0
                } else {
                    let rest: f64 = (0..p.len())
                        .filter(|&j| j != i)
                        .map(|j| p[j].powi(orders[j] as i32))
                        .product();
                    o as f64 * p[i].powi(o - 1) * rest
                };
                let dexp = -2.0 * n as f64 * pp.powi(n - 1) * p[i];
                (dmono + mono * dexp) * e
            })
            .collect()
    }

    /// `ℒφ(p)` evaluated from the closed-form gradient.
    pub fn generator(&self, p: &[f64]) -> f64 {
        let grad = self.gradient(p);
        let drift: f64 = p.iter().zip(&grad).map(|(a, b)| a * b).sum();
        -self.radial(p) * self.value(p) - drift / (2.0 * self.n as f64)
    }

    /// Samples on the wavenumbers of `grid`.
    pub fn spectral(&self, grid: &Grid) -> SpectralField {
        SpectralField::from_fn(*grid, |p| Complex64::new(self.value(p), 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eigenvalues_in_both_frames() {
        let std1 = ScalingFrame::standard(2, 1).unwrap();
        assert_eq!(eigenvalue(1, &std1), Rational64::new(-1, 4));
        assert_eq!(eigenvalue(0, &std1), Rational64::from_integer(0));
        let dip = ScalingFrame::dipole();
        assert_eq!(eigenvalue(0, &dip), Rational64::new(1, 4));
        for j in 0..6 {
            // (1 - j)/4 in the β = 1/2 frame.
            assert_eq!(eigenvalue(j, &dip), Rational64::new(1 - j as i64, 4));
        }
        for (n, d) in [(1, 1), (2, 2), (2, 3), (3, 2)] {
            let f = ScalingFrame::standard(n, d).unwrap();
            assert_eq!(eigenvalue(0, &f), Rational64::from_integer(0));
            assert_eq!(eigenvalue(3, &f), Rational64::new(-3, 2 * n as i64));
        }
    }

    #[test]
    fn eigenfunction_values() {
        let phi0 = EigenFunction::new(MultiIndex::zero(1), 2);
        assert_eq!(phi0.value(&[0.0]), 1.0);
        let phi1 = EigenFunction::new(MultiIndex::new(vec![1]), 2);
        assert!((phi1.value(&[1.0]) - (-1.0f64).exp()).abs() < 1e-16);
        let phi20 = EigenFunction::new(MultiIndex::new(vec![2, 0]), 2);
        assert!((phi20.value(&[1.0, 1.0]) - (-4.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let phi = EigenFunction::new(MultiIndex::new(vec![2, 1, 0]), 2);
        let p = [0.3, -0.7, 0.5];
        let g = phi.gradient(&p);
        let h = 1e-6;
        for i in 0..3 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let fd = (phi.value(&a) - phi.value(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "axis {i}");
        }
    }

    proptest! {
        #[test]
        fn eigen_identity(
            a0 in 0u32..4, a1 in 0u32..4, n in 1u32..4,
            p0 in -1.5f64..1.5, p1 in -1.5f64..1.5,
        ) {
            let phi = EigenFunction::new(MultiIndex::new(vec![a0, a1]), n);
            let p = [p0, p1];
            let lhs = phi.generator(&p);
            let rhs = -((a0 + a1) as f64) / (2.0 * n as f64) * phi.value(&p);
            // Relative to the size of the individual terms.
            let scale = phi.value(&p).abs().max(1e-300) * (1.0 + (p0 * p0 + p1 * p1).powi(n as i32) + (a0 + a1) as f64);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn a_of_tau_composes() {
        for (t1, t2) in [(0.3, 1.1), (2.0, 0.5), (5.0, 5.0)] {
            let lhs = a_of_tau(t1) + (-t1 as f64).exp() * a_of_tau(t2);
            assert!((lhs - a_of_tau(t1 + t2)).abs() < 1e-15);
        }
    }
}
