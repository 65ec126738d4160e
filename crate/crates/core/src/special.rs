//! Special functions not covered by std.

use std::f64::consts::PI;

/// Bessel function `J0(x) = (1/π) ∫_0^π cos(x sin θ) dθ`.
///
/// The integrand is smooth and π-periodic, so the trapezoid rule converges
/// geometrically once the node count exceeds roughly `|x| / 2`.
pub fn bessel_j0(x: f64) -> f64 {
    let m = 24 + x.abs().ceil() as usize;
    let h = PI / m as f64;
    // Both endpoints contribute cos(0) / 2.
    let mut s = 1.0;
    for i in 1..m {
        s += (x * (i as f64 * h).sin()).cos();
    }
    s / m as f64
}

/// `sin(x) / x`, continuous at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((bessel_j0(-2.5) - bessel_j0(2.5)).abs() < 1e-15);
    }

    #[test]
    fn j0_zero_and_asymptotics() {
        // First zero of J0.
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
        // Asymptotic form sqrt(2/(πx)) cos(x - π/4) is accurate to ~1e-4 at x = 200.
        let x = 200.0;
        let asym = (2.0 / (PI * x)).sqrt() * (x - PI / 4.0).cos();
        assert!((bessel_j0(x) - asym).abs() < 1e-4);
    }

    #[test]
    fn sinc_is_continuous() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(0.9e-4) - (0.9e-4f64).sin() / 0.9e-4).abs() < 1e-15);
        assert!((sinc(2.0) - 2.0f64.sin() / 2.0).abs() < 1e-16);
    }
}
