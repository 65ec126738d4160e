//! Band-limited (trigonometric) evaluation of grid data off the grid.
//!
//! Both operations below are separable, so they are applied one axis at a
//! time with a dense `M × N` matrix. That costs `O(M N^d)` per axis, which is
//! fine at the grid sizes used here and keeps the result exact up to
//! rounding.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, SpectralField};

/// Periodic band-limited interpolation kernel for an even number of points,
/// with the Nyquist mode taken as a cosine.
fn dirichlet(y: f64, n: usize, length: f64) -> f64 {
    let theta = PI * y / length;
    let s = theta.sin();
    if s.abs() < 1e-14 {
        // y ≡ 0 (mod L), where the kernel is 1 for even n.
        return 1.0;
    }
    (n as f64 * theta).sin() / (n as f64 * theta.tan())
}

/// Interpolation weights `W[m][j]` such that `v(x_m) ≈ Σ_j W[m][j] v_j`.
pub fn interpolation_matrix(grid: &Grid, targets: &[f64]) -> Result<Vec<f64>> {
    let half = 0.5 * grid.length;
    let slack = 1e-9 * grid.length;
    let n = grid.points;
    let mut w = Vec::with_capacity(targets.len() * n);
    for &x in targets {
        if !(x >= -half - slack && x <= half + slack) {
            return Err(Error::Interpolation(format!(
                "target {x} outside box [-{half}, {half}]"
            )));
        }
        for j in 0..n {
            w.push(dirichlet(x - grid.coord(j), n, grid.length));
        }
    }
    Ok(w)
}

/// Apply an `m × n` matrix along `axis` of a row-major complex tensor.
fn apply_axis(data: &[Complex64], dims: &[usize], axis: usize, mat: &[Complex64], m: usize) -> (Vec<Complex64>, Vec<usize>) {
    let n = dims[axis];
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = vec![Complex64::default(); outer * m * inner];
    let mut line = vec![Complex64::default(); n];
    for o in 0..outer {
        for i in 0..inner {
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[(o * n + j) * inner + i];
            }
            for r in 0..m {
                let row = &mat[r * n..(r + 1) * n];
                let s: Complex64 = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                out[(o * m + r) * inner + i] = s;
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[axis] = m;
    (out, new_dims)
}

/// Evaluate the band-limited interpolant of `field` on `target`, where the
/// target point `ξ` samples the source at `x = scale · ξ` on every axis.
pub fn resample_dilated(field: &Field, target: &Grid, scale: f64) -> Result<Field> {
    let src = &field.grid;
    if src.dim != target.dim {
        return Err(Error::invalid("resample: dimension mismatch"));
    }
    let xs: Vec<f64> = target.coords().iter().map(|xi| xi * scale).collect();
    let w: Vec<Complex64> = interpolation_matrix(src, &xs)?
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut dims = vec![src.points; src.dim];
    for axis in 0..src.dim {
        let (d, nd) = apply_axis(&data, &dims, axis, &w, target.points);
        data = d;
        dims = nd;
    }
    Field::new(*target, data.into_iter().map(|z| z.re).collect())
}

/// Unitary Fourier transform of the grid data evaluated at the dilated
/// wavenumbers `gamma · p_k`: `ṽ(γ p_k) = (2π)^{-d/2} Δ^d Σ_j v_j e^{-iγ p_k·x_j}`.
///
/// For `gamma < 1` this is band-limited interpolation of the spectral
/// samples between grid wavenumbers.
pub fn spectrum_at_dilated(field: &Field, gamma: f64) -> SpectralField {
    let data = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    SpectralField {
        grid: field.grid,
        values: dilated_transform(&field.grid, data, gamma),
    }
}

/// Complex-sample version of [`spectrum_at_dilated`].
pub fn dilated_transform(g: &Grid, mut data: Vec<Complex64>, gamma: f64) -> Vec<Complex64> {
    let n = g.points;
    let weight = g.spacing() / (2.0 * PI).sqrt();
    let mut mat = Vec::with_capacity(n * n);
    for k in 0..n {
        let p = gamma * g.wavenumber(k);
        for j in 0..n {
            mat.push(Complex64::from_polar(weight, -p * g.coord(j)));
        }
    }
    let mut dims = vec![n; g.dim];
    for axis in 0..g.dim {
        let (d, nd) = apply_axis(&data, &dims, axis, &mat, n);
        data = d;
        dims = nd;
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_reproduces_grid_values() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let xs = g.coords();
        let w = interpolation_matrix(&g, &xs).unwrap();
        for m in 0..64 {
            for j in 0..64 {
                let expected = if m == j { 1.0 } else { 0.0 };
                assert!((w[m * 64 + j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trigonometric_polynomials_are_exact() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let f = |x: f64| (3.0 * x).sin() + 0.5 * (7.0 * x).cos() + (32.0 * x).cos();
        let field = Field::from_fn(g, |x| f(x[0]));
        let targets = [0.123, -2.9, 1.7, 3.1];
        let w = interpolation_matrix(&g, &targets).unwrap();
        for (m, &x) in targets.iter().enumerate() {
            let v: f64 = (0..64).map(|j| w[m * 64 + j] * field.values[j]).sum();
            assert!((v - f(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn rejects_targets_outside_the_box() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        assert!(interpolation_matrix(&g, &[5.5]).is_err());
    }

    #[test]
    fn dilated_resampling_of_a_gaussian() {
        let src = Grid::new(2, 64, 40.0).unwrap();
        let v = Field::from_fn(src, |x| (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp());
        let target = Grid::new(2, 64, 16.0).unwrap();
        let out = resample_dilated(&v, &target, 2.0).unwrap();
        for i in 0..target.len() {
            let xi = target.point(i);
            let exact = (-(4.0 * (xi[0] * xi[0] + xi[1] * xi[1])) / 8.0).exp();
            assert!((out.values[i] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn dilated_spectrum_of_a_gaussian() {
        let g = Grid::new(1, 128, 40.0).unwrap();
        let v = Field::from_fn(g, |x| (-0.5 * x[0] * x[0]).exp());
        let s = spectrum_at_dilated(&v, 0.37);
        for (k, z) in s.values.iter().enumerate() {
            let p = 0.37 * g.wavenumber(k);
            assert!((z.re - (-0.5 * p * p).exp()).abs() < 1e-13);
            assert!(z.im.abs() < 1e-13);
        }
    }
}
