//! Seeded band-limited perturbations of eigenstates.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::enstrophy;
use crate::eigenmodes::{analyze, make_eigenstate, project_least_with, OrbitSpec};
use crate::error::{Error, Result};
use crate::field::{unwrap_index, GridField, SpectralField};
use crate::geometry::TorusGeometry;
use crate::spectral::SpectralOps;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// `‖perturbation‖_{L²} / ‖eigenstate‖_{L²}` (absolute size when the eigenstate vanishes).
    pub epsilon: f64,
    pub k_min: i64,
    pub k_max: i64,
    pub seed: u64,
    /// Remove the least-eigenspace component, so the perturbation is orthogonal to the orbit.
    pub orthogonal: bool,
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            k_min: 2,
            k_max: 8,
            seed,
            orthogonal: true,
        }
    }
}

/// Mean-zero random field with Gaussian coefficients on
/// `k_min ≤ max(|k₁|, |k₂|) ≤ k_max`, normalised to unit `L²` norm.
pub fn band_limited(geometry: TorusGeometry, k_min: i64, k_max: i64, seed: u64) -> Result<GridField> {
    let limit = (geometry.nx().min(geometry.ny()) / 2) as i64 - 1;
    if k_min < 1 || k_max < k_min || k_max > limit {
        return Err(Error::InvalidArgument(format!(
            "band [{k_min}, {k_max}] must satisfy 1 ≤ k_min ≤ k_max ≤ {limit}"
        )));
    }
    let (nx, ny) = (geometry.nx(), geometry.ny());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SpectralField::zeros(geometry);
    // One draw per conjugate pair: k₂ > 0, or k₂ = 0 and k₁ > 0.
    for k2 in 0..=k_max {
        for k1 in -k_max..=k_max {
            if k2 == 0 && k1 <= 0 {
                continue;
            }
            if k1.abs().max(k2) < k_min {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = Complex64::new(re, im);
            let (p, q) = (unwrap_index(k1, nx).unwrap(), unwrap_index(k2, ny).unwrap());
            let (pm, qm) = (unwrap_index(-k1, nx).unwrap(), unwrap_index(-k2, ny).unwrap());
            s.coeffs_mut()[q * nx + p] = c;
            s.coeffs_mut()[qm * nx + pm] = c.conj();
        }
    }
    let f = SpectralOps::new(geometry).inverse(&s)?;
    let norm = (2.0 * enstrophy(&f)).sqrt();
    Ok(f.scaled(1.0 / norm))
}

/// `(ω₀, ω̃₀)`: the eigenstate of `orbit` plus a scaled perturbation, and the
/// perturbation itself.
pub fn perturbed_eigenstate(orbit: &OrbitSpec, spec: &PerturbationSpec) -> Result<(GridField, GridField)> {
    if !(spec.epsilon.is_finite() && spec.epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {} must be nonnegative",
            spec.epsilon
        )));
    }
    let g = *orbit.geometry();
    let base = make_eigenstate(orbit);
    let mut pert = band_limited(g, spec.k_min, spec.k_max, spec.seed)?;
    if spec.orthogonal {
        let (_, tilde) = project_least_with(&SpectralOps::new(g), &pert, &analyze(&g))?;
        pert = tilde;
    }
    let reference = (2.0 * enstrophy(&base)).sqrt();
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let norm = (2.0 * enstrophy(&pert)).sqrt();
    let pert = if norm > 0.0 {
        pert.scaled(spec.epsilon * reference / norm)
    } else {
        pert
    };
    Ok((base.add(&pert)?, pert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenmodes::spectral_support;

    #[test]
    fn band_and_norm() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let f = band_limited(g, 2, 8, 5).unwrap();
        assert!(((2.0 * enstrophy(&f)).sqrt() - 1.0).abs() < 1e-12);
        assert!(f.mean().abs() < 1e-14);
        let support = spectral_support(&SpectralOps::new(g), &f, 1e-14).unwrap();
        assert!(support.iter().all(|(a, b)| (2..=8).contains(&a.abs().max(b.abs()))));
        assert_eq!(f, band_limited(g, 2, 8, 5).unwrap());
        assert_ne!(f, band_limited(g, 2, 8, 6).unwrap());
        assert!(band_limited(g, 2, 16, 5).is_err());
    }

    #[test]
    fn perturbation_scaled_and_orthogonal() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let orbit = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
        let (w, p) = perturbed_eigenstate(&orbit, &PerturbationSpec::new(0.01, 9)).unwrap();
        let base = make_eigenstate(&orbit);
        assert!(((enstrophy(&p) / enstrophy(&base)).sqrt() - 0.01).abs() < 1e-12);
        assert!(p.inner(&base).unwrap().abs() < 1e-12);
        assert!(w.sub(&base).unwrap().sub(&p).unwrap().max_abs() < 1e-15);
        let (w0, _) = perturbed_eigenstate(&orbit, &PerturbationSpec::new(0.0, 9)).unwrap();
        assert_eq!(w0, base);
    }
}
