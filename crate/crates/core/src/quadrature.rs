//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut lo = [0.0; 7];
    let mut hi = [0.0; 7];
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        lo[j] = f(c - x);
        hi[j] = f(c + x);
        let s = lo[j] + hi[j];
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    // QUADPACK error scaling, based on the spread of f around its mean.
    let mean = 0.5 * kron;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((lo[j] - mean).abs() + (hi[j] - mean).abs());
    }
    resasc *= h.abs();
    let value = kron * h;
    let mut error = ((kron - gauss) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    (value, error.max(50.0 * f64::EPSILON * value.abs()))
}

/// Integrate `f` over `[a, b]`, starting from the given breakpoints (which
/// should resolve oscillations) and bisecting the worst panel until the
/// summed error estimate is below `abs_tol`.
pub fn integrate_panels(f: impl Fn(f64) -> f64, breakpoints: &[f64], abs_tol: f64, max_panels: usize) -> Result<Estimate> {
    if breakpoints.len() < 2 {
        return Err(Error::invalid("quadrature needs at least two breakpoints"));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        let (value, error) = kronrod15(&f, w[0], w[1]);
        evaluations += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        let total: f64 = heap.iter().map(|p| p.value).sum();
        // Below this the estimate is dominated by rounding in the panel sums.
        let roundoff = 100.0 * f64::EPSILON * heap.iter().map(|p| p.value.abs()).sum::<f64>();
        if !total_err.is_finite() {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: abs_tol,
            });
        }
        if total_err <= abs_tol.max(roundoff) {
            return Ok(Estimate {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: abs_tol,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot split further; accept what floating point allows.
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: abs_tol,
            });
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod15(&f, a, b);
            evaluations += 15;
            heap.push(Panel { a, b, value, error });
        }
    }
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<Estimate> {
    integrate_panels(f, &[a, b], abs_tol, 10_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_exponentials() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let r = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand_with_panels() {
        // ∫_0^{20π} cos(x) e^{-x/10} dx
        let b = 20.0 * PI;
        let exact = (0.1 - 0.1 * (-b / 10.0).exp()) / (1.0 + 0.01);
        let bp: Vec<f64> = (0..=20).map(|i| i as f64 * PI).collect();
        let r = integrate_panels(|x| x.cos() * (-x / 10.0).exp(), &bp, 1e-12, 1000).unwrap();
        assert!((r.value - exact).abs() < 1e-12, "{} vs {}", r.value, exact);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate_panels(|x| (1.0 / x).sin(), &[1e-3, 1.0], 1e-14, 20);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
        let r = integrate_panels(|x| 1.0 / x.abs().sqrt(), &[-1.0, 1.0], 1e-14, 20);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
