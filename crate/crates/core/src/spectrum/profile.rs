//! Self-similar profiles.
//!
//! The mass profile is `f*(ξ) = (2π)^{-d/2} ∫ e^{ip·ξ} e^{-(p·p)^n} dp`, the
//! zero mode of `ℒ`. The dipole profile
//! `F(ξ) = (2π)^{-d} ∫ e^{ip·ξ} (-ip₁) e^{-(p·p)^n} dp = -(2π)^{-d/2} ∂₁f*`
//! is the `|α| = 1` mode, normalised to unit first moment `∫ξ₁F = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel::kernel_radial;
use crate::error::{Error, Result};
use crate::frame::ScalingFrame;
use crate::grid::{Field, Grid, SpectralField};
use crate::quadrature::{integrate, integrate_panels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Mass,
    Dipole,
}

impl ProfileKind {
    /// The profile describing the leading asymptotics in `frame`.
    pub fn for_frame(frame: &ScalingFrame) -> Result<Self> {
        if frame.is_standard() {
            Ok(ProfileKind::Mass)
        } else if frame.is_dipole() {
            Ok(ProfileKind::Dipole)
        } else {
            Err(Error::Unsupported(format!(
                "no self-similar profile for frame n={}, d={}, beta={}",
                frame.n, frame.d, frame.beta
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOptions {
    /// Largest acceptable refinement estimate (absolute).
    pub tolerance: f64,
    /// Cap on the total number of points of the refinement grid.
    pub max_points: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_points: 1 << 22,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub n: u32,
    pub kind: ProfileKind,
    pub field: Field,
    /// Refinement-based estimate of the sup-norm tabulation error.
    pub error_estimate: f64,
}

impl Profile {
    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }
}

fn spectral_samples(kind: ProfileKind, n: u32, grid: &Grid) -> SpectralField {
    let c = (2.0 * PI).powf(-(grid.dim as f64) / 2.0);
    SpectralField::from_fn(*grid, |p| {
        let pp: f64 = p.iter().map(|x| x * x).sum();
        let e = (-pp.powi(n as i32)).exp();
        match kind {
            ProfileKind::Mass => Complex64::new(e, 0.0),
            ProfileKind::Dipole => Complex64::new(0.0, -p[0] * e * c),
        }
    })
}

fn tabulate(kind: ProfileKind, n: u32, grid: &Grid) -> Field {
    let fft = grid.fft();
    spectral_samples(kind, n, grid).to_field(&fft)
}

/// Bound on the spectral mass outside the ball `|p| < k`, which the
/// tabulation cannot see.
fn truncation_bound(kind: ProfileKind, n: u32, d: usize, k: f64) -> Result<f64> {
    let surface = match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let extra = match kind {
        ProfileKind::Mass => 0,
        ProfileKind::Dipole => 1,
    };
    let pow = d as i32 - 1 + extra;
    let two_n = 2 * n as i32;
    let upper = k + 10.0;
    let tail = integrate(|p| p.powi(pow) * (-p.powi(two_n)).exp(), k, upper, 1e-18)?;
    let pref = match kind {
        ProfileKind::Mass => (2.0 * PI).powf(-(d as f64) / 2.0),
        ProfileKind::Dipole => (2.0 * PI).powf(-(d as f64)),
    };
    Ok(pref * surface * tail.value.abs())
}

/// Tabulate the profile for `frame` on `grid`.
pub fn profile(frame: &ScalingFrame, grid: &Grid, opts: &ProfileOptions) -> Result<Profile> {
    if frame.d as usize != grid.dim {
        return Err(Error::invalid("profile: frame and grid dimensions differ"));
    }
    profile_of_kind(ProfileKind::for_frame(frame)?, frame.n, grid, opts)
}

/// Tabulate by inverse DFT of the Fourier samples. The error is estimated
/// by comparing against a grid of twice the extent and twice the points
/// (same spacing, half the p-spacing), plus a bound on the spectral mass
/// beyond the Nyquist wavenumber; the extent keeps doubling until the
/// estimate meets the tolerance or the point budget runs out.
pub fn profile_of_kind(kind: ProfileKind, n: u32, grid: &Grid, opts: &ProfileOptions) -> Result<Profile> {
    grid.validate()?;
    if n == 0 {
        return Err(Error::invalid("profile: n must be positive"));
    }
    let tail = truncation_bound(kind, n, grid.dim, grid.max_wavenumber())?;
    if tail > opts.tolerance {
        return Err(Error::ToleranceUnreachable {
            achieved: tail,
            requested: opts.tolerance,
        });
    }
    let sample = |big: &Field, factor: usize| -> Vec<f64> {
        // Requested point i sits at index i + (factor - 1) N / 2 of the big grid.
        let off = (factor - 1) * grid.points / 2;
        (0..grid.len())
            .map(|i| {
                let u = grid.unravel(i);
                let mut idx = 0;
                for a in 0..grid.dim {
                    idx = idx * big.grid.points + u[a] + off;
                }
                big.values[idx]
            })
            .collect()
    };
    let mut factor = 1;
    let mut coarse = tabulate(kind, n, grid).values;
    loop {
        let fine_grid = Grid::new(grid.dim, grid.points * factor * 2, grid.length * (factor * 2) as f64)?;
        if fine_grid.len() > opts.max_points {
            let achieved = f64::INFINITY;
            return Err(Error::ToleranceUnreachable {
                achieved,
                requested: opts.tolerance,
            });
        }
        let fine = sample(&tabulate(kind, n, &fine_grid), factor * 2);
        let diff = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let estimate = diff + tail;
        if estimate <= opts.tolerance {
            return Ok(Profile {
                n,
                kind,
                field: Field::new(*grid, fine)?,
                error_estimate: estimate,
            });
        }
        coarse = fine;
        factor *= 2;
    }
}

/// Profile value at an arbitrary point by radial quadrature.
pub fn profile_value(kind: ProfileKind, n: u32, xi: &[f64]) -> Result<f64> {
    let d = xi.len();
    if !(1..=3).contains(&d) {
        return Err(Error::invalid("profile: dimension not in 1..=3"));
    }
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    match kind {
        ProfileKind::Mass => {
            let g = kernel_radial(r, 1.0, n, d as u32, 1e-13)?;
            Ok((2.0 * PI).powf(-(d as f64) / 2.0) * g.value)
        }
        ProfileKind::Dipole => {
            // -∂₁ f* = (ξ₁ / r) (-∂_r f*), with -∂_r f* a radial quadrature.
            if r == 0.0 {
                return Ok(0.0);
            }
            let two_n = 2 * n as i32;
            let p_max = super::kernel::truncation_radius(1.0, n);
            let width = (PI / r).min(p_max / 4.0);
            let panels = (p_max / width).ceil() as usize;
            let breaks: Vec<f64> = (0..=panels).map(|i| (i as f64 * width).min(p_max)).collect();
            let damp = |p: f64| (-p.powi(two_n)).exp();
            let radial_deriv = match d {
                // d/dr [2∫cos(pr)e] = -2∫ p sin(pr) e.
                1 => integrate_panels(|p| 2.0 * p * (p * r).sin() * damp(p), &breaks, 1e-13, 50_000)?.value,
                // d/dr [2π∫J0(pr) p e] = -2π∫J1(pr) p² e; J1 via J1(x) = -J0'(x).
                2 => integrate_panels(
                    |p| 2.0 * PI * bessel_j1(p * r) * p * p * damp(p),
                    &breaks,
                    1e-13,
                    50_000,
                )?
                .value,
                _ => integrate_panels(
                    |p| {
                        let x = p * r;
                        // -d/dr sinc(pr) = p (sin x - x cos x) / x².
                        let j1s = if x < 1e-3 { x / 3.0 } else { (x.sin() - x * x.cos()) / (x * x) };
                        4.0 * PI * p * j1s * p * p * damp(p)
                    },
                    &breaks,
                    1e-13,
                    50_000,
                )?
                .value,
            };
            let c = (2.0 * PI).powf(-(d as f64));
            Ok(c * xi[0] / r * radial_deriv)
        }
    }
}

/// `J1(x) = (1/π) ∫_0^π cos(θ - x sin θ) dθ`.
fn bessel_j1(x: f64) -> f64 {
    let m = 24 + x.abs().ceil() as usize;
    let h = PI / m as f64;
    // Endpoint values cos(0) = 1 and cos(π) = -1 cancel.
    let mut s = 0.0;
    for i in 1..m {
        let t = i as f64 * h;
        s += (t - x * t.sin()).cos();
    }
    s / m as f64
}

/// Smallest radius beyond which `|f(ξ)| < threshold · sup|f|`, scanning the
/// radial quadrature evaluator along the first axis in steps of 0.05.
pub fn decay_radius(kind: ProfileKind, n: u32, d: u32, threshold: f64) -> Result<f64> {
    let mut xi = vec![0.0; d as usize];
    let step = 0.05;
    let mut values = Vec::new();
    let mut r = 0.0;
    while r <= 200.0 {
        xi[0] = r;
        values.push((r, profile_value(kind, n, &xi)?.abs()));
        r += step;
    }
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.1));
    let last = values
        .iter()
        .rev()
        .find(|v| v.1 >= threshold * sup)
        .map(|v| v.0)
        .unwrap_or(0.0);
    Ok(last + step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_5_4() -> f64 {
        statrs::function::gamma::gamma(1.25)
    }

    #[test]
    fn origin_value_from_gamma_identity() {
        let f = profile_of_kind(ProfileKind::Mass, 2, &Grid::new(1, 256, 100.0).unwrap(), &ProfileOptions::default())
            .unwrap();
        let centre = f.field.values[128];
        let expected = (2.0 * PI).powf(-0.5) * 2.0 * gamma_5_4();
        assert!((centre - expected).abs() < 1e-12, "{centre} vs {expected}");
        assert!(f.error_estimate < 1e-10);
        // Quadrature oracle.
        let q = integrate(|p| (-p.powi(4)).exp(), 0.0, 8.0, 1e-14).unwrap();
        assert!((q.value - gamma_5_4()).abs() < 1e-13);
        assert!((profile_value(ProfileKind::Mass, 2, &[0.0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn gaussian_profile_for_n1() {
        let grid = Grid::new(1, 128, 60.0).unwrap();
        let f = profile_of_kind(ProfileKind::Mass, 1, &grid, &ProfileOptions::default()).unwrap();
        for (j, v) in f.field.values.iter().enumerate() {
            let xi = grid.coord(j);
            let exact = (-xi * xi / 4.0).exp() / 2f64.sqrt();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn profiles_are_even_and_odd() {
        let grid = Grid::new(1, 256, 100.0).unwrap();
        let f = profile_of_kind(ProfileKind::Mass, 2, &grid, &ProfileOptions::default()).unwrap();
        let g = profile_of_kind(ProfileKind::Dipole, 2, &grid, &ProfileOptions::default()).unwrap();
        for j in 1..256 {
            let m = 256 - j;
            assert!((f.field.values[j] - f.field.values[m]).abs() < 1e-14);
            assert!((g.field.values[j] + g.field.values[m]).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_and_first_moment_normalisation() {
        for d in 1..=2usize {
            let grid = Grid::new(d, 128, 80.0).unwrap();
            let f = profile_of_kind(ProfileKind::Mass, 2, &grid, &ProfileOptions::default()).unwrap();
            let mass = f.field.integral() * (2.0 * PI).powf(-(d as f64) / 2.0);
            assert!((mass - 1.0).abs() < 1e-10, "d {d}");
            let g = profile_of_kind(ProfileKind::Dipole, 2, &grid, &ProfileOptions::default()).unwrap();
            assert!(g.field.integral().abs() < 1e-12);
            assert!((g.field.first_moment()[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tabulation_matches_radial_quadrature() {
        for d in 1..=3usize {
            let grid = Grid::new(d, 64, 64.0).unwrap();
            for kind in [ProfileKind::Mass, ProfileKind::Dipole] {
                let f = profile_of_kind(kind, 2, &grid, &ProfileOptions::default()).unwrap();
                for i in (0..grid.len()).step_by(grid.len() / 37 + 1) {
                    let x = grid.point(i);
                    let q = profile_value(kind, 2, &x[..d]).unwrap();
                    assert!((f.field.values[i] - q).abs() < 1e-11, "d {d} {kind:?} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn coarse_spacing_is_reported() {
        // Nyquist wavenumber π/2.5 leaves visible spectral mass for n = 1.
        let grid = Grid::new(1, 64, 160.0).unwrap();
        let r = profile_of_kind(ProfileKind::Mass, 1, &grid, &ProfileOptions::default());
        assert!(matches!(r, Err(Error::ToleranceUnreachable { .. })));
        let small = ProfileOptions {
            tolerance: 1e-10,
            max_points: 64,
        };
        let r = profile_of_kind(ProfileKind::Mass, 2, &Grid::new(1, 64, 40.0).unwrap(), &small);
        assert!(matches!(r, Err(Error::ToleranceUnreachable { .. })));
    }

    #[test]
    fn decay_radii() {
        let r1 = decay_radius(ProfileKind::Mass, 2, 1, 1e-6).unwrap();
        assert!(r1 > 15.0 && r1 < 25.0, "{r1}");
        // n = 1: e^{-r²/4} = 1e-6 at r = 2√(6 ln 10).
        let g = decay_radius(ProfileKind::Mass, 1, 1, 1e-6).unwrap();
        assert!((g - 2.0 * (6.0 * std::f64::consts::LN_10).sqrt()).abs() < 0.06);
    }

    #[test]
    fn frame_selects_profile() {
        assert_eq!(
            ProfileKind::for_frame(&ScalingFrame::standard(2, 3).unwrap()).unwrap(),
            ProfileKind::Mass
        );
        assert_eq!(ProfileKind::for_frame(&ScalingFrame::dipole()).unwrap(), ProfileKind::Dipole);
        let odd = ScalingFrame::new(2, 2, num_rational::Rational64::new(1, 3)).unwrap();
        assert!(ProfileKind::for_frame(&odd).is_err());
    }
}
