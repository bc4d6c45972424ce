//! Conserved quantities of the Euler flow and the energy–enstrophy bound.
//!
//! All integrals are uniform grid sums times the cell area. For fields below
//! the Nyquist limit this quadrature is exact, so the real-space and
//! Fourier-sum forms of `E` and `Z` agree to rounding.

use crate::eigenmodes::{self, EigenvalueInfo};
use crate::error::{Error, Result};
use crate::field::{FluxVector, GridField};
use crate::geometry::TorusGeometry;
use crate::spectral::SpectralOps;

/// Default set of `p` values tracked by the ledger.
pub const DEFAULT_LP: [f64; 2] = [2.0, 4.0];

/// Kinetic energy of the mean-zero part, `E(ω) = ½∫ω Kω dx`.
pub fn energy(omega: &GridField) -> Result<f64> {
    energy_with(&SpectralOps::new(*omega.geometry()), omega)
}

pub fn energy_with(ops: &SpectralOps, omega: &GridField) -> Result<f64> {
    let psi = ops.apply_k(omega)?;
    Ok(0.5 * omega.inner(&psi)?)
}

/// `E` evaluated as `½|𝕋²| Σ_k |ω̂_k|²/λ_k`.
pub fn energy_spectral(ops: &SpectralOps, omega: &GridField) -> Result<f64> {
    let s = ops.forward(omega)?;
    let sum: f64 = s
        .coeffs()
        .iter()
        .zip(ops.inverse_eigenvalues())
        .map(|(c, il)| c.norm_sqr() * il)
        .sum();
    Ok(0.5 * omega.geometry().area() * sum)
}

/// Enstrophy `Z(ω) = ½∫ω² dx`.
pub fn enstrophy(omega: &GridField) -> f64 {
    0.5 * omega.values().iter().map(|v| v * v).sum::<f64>() * omega.geometry().cell_area()
}

/// `Z` evaluated as `½|𝕋²| Σ_k |ω̂_k|²`.
pub fn enstrophy_spectral(ops: &SpectralOps, omega: &GridField) -> Result<f64> {
    Ok(0.5 * omega.geometry().area() * ops.forward(omega)?.power())
}

/// `|x|^p` with exact products for the common exponents.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.abs().powf(p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Lp exponent must exceed 1, got {p}")))
    }
}

/// `‖f‖_{Lᵖ} = (∫|f|ᵖ dx)^{1/p}` by grid quadrature.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let s: f64 = f.values().iter().map(|&v| abs_pow(v, p)).sum();
    Ok((s * f.geometry().cell_area()).powf(1.0 / p))
}

/// Total flux `∫ v dx`.
pub fn flux(v1: &GridField, v2: &GridField) -> Result<FluxVector> {
    v1.ensure_same_grid(v2)?;
    Ok(FluxVector {
        f1: v1.integral(),
        f2: v2.integral(),
    })
}

/// Growth constant `C = (1 − max{(ν₁/ν₂)², 1/4})⁻¹` bounding
/// `Z(ω̃_t) ≤ C·Z(ω̃₀)` for the component orthogonal to the least
/// eigenspace on a short torus (`ν₁ < ν₂`). Swap the axes for a long torus.
pub fn arnold_constant(geometry: &TorusGeometry) -> Result<f64> {
    let (nu1, nu2) = (geometry.nu1(), geometry.nu2());
    if nu1 >= nu2 {
        return Err(Error::InvalidArgument(format!(
            "the bound needs nu1 < nu2 (got nu1 = {nu1}, nu2 = {nu2}); swap the axes"
        )));
    }
    let r = nu1 / nu2;
    Ok(1.0 / (1.0 - (r * r).max(0.25)))
}

/// Stated constant `c` in `E(f) ≤ c·Z(f)` on the complement of the least
/// eigenspace: `max{ν₁², ν₂²/4}` (short), `max{ν₂², ν₁²/4}` (long),
/// `ν²/4` (square).
pub fn complement_bound(geometry: &TorusGeometry) -> f64 {
    let (nu1, nu2) = (geometry.nu1(), geometry.nu2());
    if nu1 < nu2 {
        (nu1 * nu1).max(nu2 * nu2 / 4.0)
    } else if nu1 > nu2 {
        (nu2 * nu2).max(nu1 * nu1 / 4.0)
    } else {
        nu1 * nu1 / 4.0
    }
}

/// Smallest admissible `c` in `E(f) ≤ c·Z(f)` on the complement: `1/λ` for the
/// least eigenvalue outside `J_{λ₁}`.
///
/// Every wavevector off `J_{λ₁} ∪ {0}` dominates one of `(1,0)`, `(0,1)`,
/// `(1,1)`, `(2,0)`, `(0,2)` componentwise, so the minimum is among these. On
/// the square torus it is attained at `(1,1)`, giving `ν²/2`.
pub fn sharp_complement_bound(geometry: &TorusGeometry) -> f64 {
    let info = eigenmodes::analyze(geometry);
    let lambda = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
        .into_iter()
        .filter(|&(a, b)| !info.contains(a, b))
        .map(|(a, b)| crate::spectral::eigenvalue(geometry, a, b))
        .fold(f64::INFINITY, f64::min);
    1.0 / lambda
}

/// Sorted multiset of cell values: the discrete distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution {
    sorted_values: Vec<f64>,
    cell_area: f64,
}

impl ValueDistribution {
    pub fn of(f: &GridField) -> Self {
        let mut sorted_values = f.values().to_vec();
        sorted_values.sort_by(f64::total_cmp);
        Self {
            sorted_values,
            cell_area: f.geometry().cell_area(),
        }
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn range(&self) -> f64 {
        match (self.sorted_values.first(), self.sorted_values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Area of `{f > s}`.
    pub fn measure_above(&self, s: f64) -> f64 {
        let below = self.sorted_values.partition_point(|&v| v <= s);
        (self.sorted_values.len() - below) as f64 * self.cell_area
    }

    /// Largest elementwise gap between the two sorted arrays.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .sorted_values
            .iter()
            .zip(&other.sorted_values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `max_deviation` relative to the value range of `reference`.
    pub fn relative_drift(&self, reference: &Self) -> Result<f64> {
        let dev = self.max_deviation(reference)?;
        let range = reference.range();
        Ok(if range > 0.0 { dev / range } else { dev })
    }

    /// Discrete equimeasurability: sorted arrays equal within `1e-12·range`.
    pub fn equimeasurable(&self, other: &Self) -> bool {
        let tol = 1e-12 * self.range().max(other.range());
        self.max_deviation(other).map(|d| d <= tol).unwrap_or(false)
    }
}

/// Discrete distribution of a field.
pub fn distribution(f: &GridField) -> ValueDistribution {
    ValueDistribution::of(f)
}

/// Conserved quantities sampled at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedLedger {
    pub time: f64,
    pub flux: FluxVector,
    pub energy: f64,
    pub enstrophy: f64,
    /// `(p, ‖ω‖_{Lᵖ})`, in the order requested.
    pub lp_norms: Vec<(f64, f64)>,
    /// Enstrophy of the component orthogonal to the least eigenspace.
    pub perp_enstrophy: f64,
}

impl ConservedLedger {
    /// Evaluates every ledger quantity for the vorticity `omega` with total flux
    /// `flux` (the velocity flux is recomputed by quadrature).
    pub fn measure(
        ops: &SpectralOps,
        info: &EigenvalueInfo,
        time: f64,
        omega: &GridField,
        flux_in: FluxVector,
        exponents: &[f64],
    ) -> Result<Self> {
        let (v1, v2) = ops.biot_savart(omega, flux_in)?;
        let lp_norms = exponents
            .iter()
            .map(|&p| lp_norm(omega, p).map(|n| (p, n)))
            .collect::<Result<Vec<_>>>()?;
        let (_, perp) = eigenmodes::project_least_with(ops, omega, info)?;
        Ok(Self {
            time,
            flux: flux(&v1, &v2)?,
            energy: energy_with(ops, omega)?,
            enstrophy: enstrophy(omega),
            lp_norms,
            perp_enstrophy: enstrophy(&perp),
        })
    }

    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp_norms.iter().find(|(q, _)| *q == p).map(|(_, n)| *n)
    }
}
