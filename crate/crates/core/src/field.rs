//! Real-space samples and Fourier coefficients on the torus grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

/// Real samples of a periodic function, row-major with the `x₁` index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    geometry: TorusGeometry,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(geometry: TorusGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.cells() {
            return Err(Error::ShapeMismatch {
                expected: geometry.cells(),
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {bad}")));
        }
        Ok(Self { geometry, values })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_raw(geometry: TorusGeometry, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geometry.cells());
        Self { geometry, values }
    }

    pub fn zeros(geometry: TorusGeometry) -> Self {
        Self::from_raw(geometry, vec![0.0; geometry.cells()])
    }

    pub fn constant(geometry: TorusGeometry, c: f64) -> Self {
        Self::from_raw(geometry, vec![c; geometry.cells()])
    }

    /// Samples `f(x₁, x₂)` at the grid points.
    pub fn from_fn(geometry: TorusGeometry, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(geometry.cells());
        for j in 0..geometry.ny() {
            let x2 = geometry.x2(j);
            for i in 0..geometry.nx() {
                values.push(f(geometry.x1(i), x2));
            }
        }
        Self::from_raw(geometry, values)
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.geometry.nx() + i]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_same_grid(&self, other: &GridField) -> Result<()> {
        if self.geometry.same_grid(&other.geometry) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    /// Grid quadrature `∫ f dx` (uniform sum times cell area).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Quadrature inner product `∫ f g dx`.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.geometry.cell_area())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        Self::from_raw(self.geometry, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> GridField {
        self.map(|v| c * v)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &GridField, b: f64) -> Result<GridField> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_raw(self.geometry, values))
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.axpby(1.0, other, -1.0)
    }

    /// Subtracts the grid mean in place and returns the removed value.
    pub fn remove_mean(&mut self) -> f64 {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
        m
    }

    /// Cyclic translation by whole cells: `out(i, j) = self(i - di, j - dj)`.
    pub fn shifted(&self, di: isize, dj: isize) -> GridField {
        let (nx, ny) = (self.geometry.nx() as isize, self.geometry.ny() as isize);
        let mut out = vec![0.0; self.values.len()];
        for j in 0..ny {
            let sj = (j - dj).rem_euclid(ny);
            for i in 0..nx {
                let si = (i - di).rem_euclid(nx);
                out[(j * nx + i) as usize] = self.values[(sj * nx + si) as usize];
            }
        }
        Self::from_raw(self.geometry, out)
    }
}

/// Fourier coefficients in standard FFT layout: entry `q·nx + p` holds the
/// wavevector `(k₁, k₂) = (wrap(p, nx), wrap(q, ny))`.
///
/// Normalisation: `f(x) = Σ_k c_k exp(i(k₁x₁/ν₁ + k₂x₂/ν₂))`, so `c_0` is the
/// grid mean. The coefficients of the orthonormal basis
/// `ζ_k = exp(i k·x/ν)/√|𝕋²|` are `√|𝕋²|·c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    geometry: TorusGeometry,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(geometry: TorusGeometry, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != geometry.cells() {
            return Err(Error::ShapeMismatch {
                expected: geometry.cells(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { geometry, coeffs })
    }

    pub(crate) fn from_raw(geometry: TorusGeometry, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), geometry.cells());
        Self { geometry, coeffs }
    }

    pub fn zeros(geometry: TorusGeometry) -> Self {
        Self::from_raw(geometry, vec![Complex64::new(0.0, 0.0); geometry.cells()])
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Storage index of the wavevector `(k1, k2)`, if it is on the grid.
    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        let p = unwrap_index(k1, self.geometry.nx())?;
        let q = unwrap_index(k2, self.geometry.ny())?;
        Some(q * self.geometry.nx() + p)
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Option<Complex64> {
        self.index_of(k1, k2).map(|idx| self.coeffs[idx])
    }

    /// Wavevector stored at a given index.
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        let nx = self.geometry.nx();
        (wrap_index(idx % nx, nx), wrap_index(idx / nx, self.geometry.ny()))
    }

    /// `Σ_k |c_k|²`.
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|c_k - conj(c_{-k})|` over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let (nx, ny) = (self.geometry.nx(), self.geometry.ny());
        let mut worst: f64 = 0.0;
        for q in 0..ny {
            for p in 0..nx {
                let mirror = ((ny - q) % ny) * nx + (nx - p) % nx;
                let d = (self.coeffs[q * nx + p] - self.coeffs[mirror].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Signed wavenumber of FFT index `p` on an `n`-point axis. The Nyquist index
/// `n/2` (even `n`) maps to `+n/2`.
pub fn wrap_index(p: usize, n: usize) -> i64 {
    if p <= n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// FFT index of the signed wavenumber `k` on an `n`-point axis.
pub fn unwrap_index(k: i64, n: usize) -> Option<usize> {
    let n_i = n as i64;
    if k.unsigned_abs() as usize > n / 2 {
        return None;
    }
    Some(k.rem_euclid(n_i) as usize)
}

/// True for the unpaired Nyquist index of an even-length axis.
pub fn is_nyquist(p: usize, n: usize) -> bool {
    n.is_multiple_of(2) && p == n / 2
}

/// Total flux `∫ v dx` of a velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluxVector {
    pub f1: f64,
    pub f2: f64,
}

impl FluxVector {
    pub const ZERO: FluxVector = FluxVector { f1: 0.0, f2: 0.0 };

    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::InvalidArgument("flux must be finite".into()));
        }
        Ok(Self { f1, f2 })
    }

    pub fn norm(&self) -> f64 {
        self.f1.hypot(self.f2)
    }
}
