//! The flat torus `[0, 2πν₁) × [0, 2πν₂)` and its uniform sampling grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest grid size accepted by [`TorusGeometry::new`].
pub const MIN_GRID: usize = 8;

/// Relative separation below which two distinct length scales are refused,
/// because the multiplicity of the least eigenvalue jumps at `ν₁ = ν₂`.
pub const SQUARE_AMBIGUITY: f64 = 1e-12;

/// Aspect parameters of the torus together with the sampling grid.
///
/// Grid points sit at `x₁ = 2πν₁·i/nx`, `x₂ = 2πν₂·j/ny`; field samples are
/// stored row-major with the `x₁` index fastest (`index = j·nx + i`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGeometry {
    nu1: f64,
    nu2: f64,
    nx: usize,
    ny: usize,
    area: f64,
}

impl TorusGeometry {
    /// Validated constructor: `ν > 0`, even grid sizes of at least 8.
    ///
    /// Length scales that differ by less than `1e-12` (relative) but are not
    /// bitwise equal are rejected; declare the square case with
    /// [`TorusGeometry::square`] instead.
    pub fn new(nu1: f64, nu2: f64, nx: usize, ny: usize) -> Result<Self> {
        check_lengths(nu1, nu2)?;
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < MIN_GRID || n % 2 != 0 {
                return Err(Error::InvalidGeometry(format!(
                    "{name} = {n} must be even and at least {MIN_GRID}"
                )));
            }
        }
        Ok(Self::build(nu1, nu2, nx, ny))
    }

    /// Square torus `ν₁ = ν₂ = ν`.
    pub fn square(nu: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(nu, nu, nx, ny)
    }

    /// Unvalidated grid sizes for toy instances (exhaustive-permutation
    /// oracles on a handful of cells). Length scales are still checked.
    pub fn debug_grid(nu1: f64, nu2: f64, nx: usize, ny: usize) -> Result<Self> {
        check_lengths(nu1, nu2)?;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGeometry("empty grid".into()));
        }
        Ok(Self::build(nu1, nu2, nx, ny))
    }

    fn build(nu1: f64, nu2: f64, nx: usize, ny: usize) -> Self {
        Self {
            nu1,
            nu2,
            nx,
            ny,
            area: 4.0 * PI * PI * nu1 * nu2,
        }
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// `|𝕋²| = 4π²ν₁ν₂`.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.area / self.cells() as f64
    }

    pub fn dx1(&self) -> f64 {
        2.0 * PI * self.nu1 / self.nx as f64
    }

    pub fn dx2(&self) -> f64 {
        2.0 * PI * self.nu2 / self.ny as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        self.dx1() * i as f64
    }

    pub fn x2(&self, j: usize) -> f64 {
        self.dx2() * j as f64
    }

    pub fn is_square(&self) -> bool {
        self.nu1 == self.nu2
    }

    /// Same torus and grid (bitwise comparison of the length scales).
    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nu1 == other.nu1 && self.nu2 == other.nu2
    }

    /// The torus with the two axes exchanged.
    pub fn transposed(&self) -> Self {
        Self::build(self.nu2, self.nu1, self.ny, self.nx)
    }
}

fn check_lengths(nu1: f64, nu2: f64) -> Result<()> {
    if !(nu1.is_finite() && nu2.is_finite() && nu1 > 0.0 && nu2 > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "length scales must be positive and finite (nu1 = {nu1}, nu2 = {nu2})"
        )));
    }
    if nu1 != nu2 && (nu1 - nu2).abs() < SQUARE_AMBIGUITY * nu1.max(nu2) {
        return Err(Error::InvalidGeometry(format!(
            "nu1 = {nu1} and nu2 = {nu2} are within {SQUARE_AMBIGUITY:e}; declare a square torus explicitly"
        )));
    }
    Ok(())
}
