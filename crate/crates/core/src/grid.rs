//! Uniform periodic grids over `[-L/2, L/2)^d`, real fields and their
//! Fourier representations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::relevance::MultiIndex;

pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dim: usize,
    /// Points per axis.
    pub points: usize,
    /// Box side length.
    pub length: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        let g = Self {
            dim,
            points,
            length,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::invalid(format!("grid dimension {} not in 1..=3", self.dim)));
        }
        if self.points < MIN_POINTS || !self.points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid points per axis must be a power of two >= {MIN_POINTS}, got {}",
                self.points
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("grid length must be positive"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coord(j)).collect()
    }

    /// Signed FFT index of position `j` (`-N/2 ..= N/2 - 1`).
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI / self.length * self.signed_index(j) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wavenumber(j)).collect()
    }

    /// Nyquist wavenumber `π N / L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    /// Per-axis indices of flat index `idx` (axis 0 slowest).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let u = self.unravel(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coord(u[a]);
        }
        x
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let u = self.unravel(idx);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(u[a]);
        }
        k
    }

    /// `|k|²` over the whole array in FFT order.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.wavevector(i);
                k[..self.dim].iter().map(|v| v * v).sum()
            })
            .collect()
    }

    /// Fourier multiplier of `∂^α`, with the Nyquist mode zeroed on axes of
    /// odd derivative order.
    pub fn derivative_multiplier(&self, alpha: &MultiIndex) -> Vec<Complex64> {
        let orders = alpha.orders();
        let half = self.points / 2;
        (0..self.len())
            .map(|i| {
                let u = self.unravel(i);
                let mut m = Complex64::new(1.0, 0.0);
                for a in 0..self.dim {
                    let o = orders[a];
                    if o == 0 {
                        continue;
                    }
                    if o % 2 == 1 && u[a] == half {
                        return Complex64::default();
                    }
                    m *= Complex64::new(0.0, self.wavenumber(u[a])).powu(o);
                }
                m
            })
            .collect()
    }

    pub fn fft(&self) -> FftNd {
        FftNd::new(self.dim, self.points)
    }

    /// Same box, twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            points: self.points * 2,
            ..*self
        }
    }
}

/// Wavenumber truncation applied before forming products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    None,
    /// Keep `|k_i| < N/3` on every axis (exact for quadratic products).
    #[default]
    TwoThirds,
    /// Keep `|k_i| < N/4` (exact for cubic products).
    Half,
}

impl Dealias {
    pub fn keeps(&self, signed: i64, n: usize) -> bool {
        let a = signed.unsigned_abs() as usize;
        match self {
            Dealias::None => true,
            Dealias::TwoThirds => 3 * a < n,
            Dealias::Half => 4 * a < n,
        }
    }

    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len())
            .map(|i| {
                let u = grid.unravel(i);
                (0..grid.dim).all(|a| self.keeps(grid.signed_index(u[a]), grid.points))
            })
            .collect()
    }
}

/// Real samples on a [`Grid`], row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..grid.dim])
            })
            .collect();
        Self { grid, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Trapezoid-rule integral (spectrally accurate for decayed data).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `∫ x_a v dx` for every axis `a`.
    pub fn first_moment(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut m = vec![0.0; g.dim];
        for (i, v) in self.values.iter().enumerate() {
            let x = g.point(i);
            for a in 0..g.dim {
                m[a] += x[a] * v;
            }
        }
        m.iter().map(|s| s * g.cell_volume()).collect()
    }

    /// Largest `|v|` within two points of the box boundary, relative to the
    /// sup-norm (0 for the zero field).
    pub fn edge_ratio(&self) -> f64 {
        let sup = self.sup_norm();
        if sup == 0.0 {
            return 0.0;
        }
        let n = self.grid.points;
        let edge = |j: usize| j < 2 || j + 2 > n;
        let mut m = 0.0f64;
        for (i, v) in self.values.iter().enumerate() {
            let u = self.grid.unravel(i);
            if (0..self.grid.dim).any(|a| edge(u[a])) {
                m = m.max(v.abs());
            }
        }
        m / sup
    }

    /// Unnormalized DFT coefficients (FFT order).
    pub fn dft(&self, fft: &FftNd) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut c);
        c
    }

    pub fn from_dft(grid: Grid, coeffs: &[Complex64], fft: &FftNd) -> Self {
        let mut c = coeffs.to_vec();
        fft.inverse(&mut c);
        Self {
            grid,
            values: c.into_iter().map(|z| z.re).collect(),
        }
    }

    /// Samples of the unitary Fourier transform
    /// `ṽ(p) = (2π)^{-d/2} ∫ e^{-ip·x} v(x) dx` at the grid wavenumbers.
    pub fn to_spectral(&self, fft: &FftNd) -> SpectralField {
        let mut c = self.dft(fft);
        let g = &self.grid;
        let scale = g.cell_volume() * (2.0 * PI).powf(-(g.dim as f64) / 2.0);
        for (i, z) in c.iter_mut().enumerate() {
            // Phase from the grid origin sitting at -L/2: e^{i p L/2} = (-1)^k.
            let u = g.unravel(i);
            let parity: i64 = (0..g.dim).map(|a| g.signed_index(u[a])).sum();
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *z *= scale * sign;
        }
        SpectralField {
            grid: *g,
            values: c,
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    /// Spectral derivative `∂^α v`.
    pub fn derivative(&self, alpha: &MultiIndex, fft: &FftNd) -> Field {
        let mut c = self.dft(fft);
        for (z, m) in c.iter_mut().zip(self.grid.derivative_multiplier(alpha)) {
            *z *= m;
        }
        Field::from_dft(self.grid, &c, fft)
    }
}

/// Samples of the unitary Fourier transform of a field on the wavenumbers
/// of its grid (FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                f(&k[..grid.dim])
            })
            .collect();
        Self { grid, values }
    }

    /// Complex physical-space samples of the inverse unitary transform.
    pub fn to_samples(&self, fft: &FftNd) -> Vec<Complex64> {
        let g = &self.grid;
        let scale = (2.0 * PI).powf(g.dim as f64 / 2.0) / g.cell_volume();
        let mut c = self.values.clone();
        for (i, z) in c.iter_mut().enumerate() {
            let u = g.unravel(i);
            let parity: i64 = (0..g.dim).map(|a| g.signed_index(u[a])).sum();
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *z *= scale * sign;
        }
        fft.inverse(&mut c);
        c
    }

    /// Real part of [`SpectralField::to_samples`].
    pub fn to_field(&self, fft: &FftNd) -> Field {
        Field {
            grid: self.grid,
            values: self.to_samples(fft).into_iter().map(|z| z.re).collect(),
        }
    }

    /// Discrete `L²(dp)` norm.
    pub fn l2_norm(&self) -> f64 {
        let dp = 2.0 * PI / self.grid.length;
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dp.powi(self.grid.dim as i32)).sqrt()
    }

    pub fn distance(&self, other: &SpectralField) -> f64 {
        let dp = 2.0 * PI / self.grid.length;
        (self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * dp.powi(self.grid.dim as i32))
        .sqrt()
    }
}
