//! Fourier transforms and spectral differential operators on the torus.
//!
//! The forward transform divides by `nx·ny`, so the zero coefficient is the
//! grid mean. Derivatives multiply mode `k` by `i·k₁/ν₁` (resp. `i·k₂/ν₂`)
//! and drop the unpaired Nyquist modes so that derivatives of real fields
//! stay real. The inverse Laplacian `K` keeps every nonzero mode, Nyquist
//! included, and divides it by `λ_k = (k₁/ν₁)² + (k₂/ν₂)²`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{is_nyquist, unwrap_index, wrap_index, FluxVector, GridField, SpectralField};
use crate::geometry::TorusGeometry;
use crate::par::{self, Execution};

/// Relative size of the input mean tolerated by [`SpectralOps::poisson_inverse`].
pub const MEAN_TOLERANCE: f64 = 1e-10;

const ROWS_PER_TASK: usize = 16;

type Plan = Arc<dyn Fft<f64>>;
type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    let forward = direction == FftDirection::Forward;
    plans
        .entry((len, forward))
        .or_insert_with(|| planner.plan_fft(len, direction))
        .clone()
}

/// Result of applying `K` to a field whose mean had to be discarded.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub stream: GridField,
    /// Grid mean removed from the input before inversion.
    pub discarded_mean: f64,
    /// Whether the discarded mean was within [`MEAN_TOLERANCE`]`·‖f‖∞`.
    pub mean_within_tolerance: bool,
}

/// Transform plans and wavenumber tables for one geometry.
pub struct SpectralOps {
    geometry: TorusGeometry,
    exec: Execution,
    row_fwd: Plan,
    row_inv: Plan,
    col_fwd: Plan,
    col_inv: Plan,
    /// `k₁/ν₁` per `x₁` index, Nyquist zeroed.
    d1: Vec<f64>,
    /// `k₂/ν₂` per `x₂` index, Nyquist zeroed.
    d2: Vec<f64>,
    /// `1/λ_k`, zero at `k = 0`.
    inv_lambda: Vec<f64>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps")
            .field("geometry", &self.geometry)
            .field("exec", &self.exec)
            .finish_non_exhaustive()
    }
}

impl SpectralOps {
    pub fn new(geometry: TorusGeometry) -> Self {
        Self::with_execution(geometry, Execution::default())
    }

    pub fn with_execution(geometry: TorusGeometry, exec: Execution) -> Self {
        let (nx, ny) = (geometry.nx(), geometry.ny());
        let axis = |n: usize, nu: f64| -> Vec<f64> {
            (0..n)
                .map(|p| {
                    if is_nyquist(p, n) {
                        0.0
                    } else {
                        wrap_index(p, n) as f64 / nu
                    }
                })
                .collect()
        };
        let mut inv_lambda = vec![0.0; nx * ny];
        for q in 0..ny {
            for p in 0..nx {
                let l = eigenvalue(&geometry, wrap_index(p, nx), wrap_index(q, ny));
                if l > 0.0 {
                    inv_lambda[q * nx + p] = 1.0 / l;
                }
            }
        }
        Self {
            geometry,
            exec,
            row_fwd: plan(nx, FftDirection::Forward),
            row_inv: plan(nx, FftDirection::Inverse),
            col_fwd: plan(ny, FftDirection::Forward),
            col_inv: plan(ny, FftDirection::Inverse),
            d1: axis(nx, geometry.nu1()),
            d2: axis(ny, geometry.nu2()),
            inv_lambda,
        }
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// Derivative multipliers `(k₁/ν₁, k₂/ν₂)` per axis index, Nyquist zeroed.
    pub fn wavenumbers(&self) -> (&[f64], &[f64]) {
        (&self.d1, &self.d2)
    }

    /// `1/λ_k` table in storage order (zero at the mean mode).
    pub fn inverse_eigenvalues(&self) -> &[f64] {
        &self.inv_lambda
    }

    fn check(&self, g: &TorusGeometry) -> Result<()> {
        if self.geometry.same_grid(g) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    fn fft2(&self, buf: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.geometry.nx(), self.geometry.ny());
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        run_batched(self.exec, row, buf, nx);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for q in 0..ny {
            for p in 0..nx {
                t[p * ny + q] = buf[q * nx + p];
            }
        }
        run_batched(self.exec, col, &mut t, ny);
        let scale = if forward { 1.0 / (nx * ny) as f64 } else { 1.0 };
        for p in 0..nx {
            for q in 0..ny {
                buf[q * nx + p] = t[p * ny + q] * scale;
            }
        }
    }

    /// In-place forward transform of complex samples (normalised by `1/(nx·ny)`).
    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        self.fft2(buf, true);
    }

    /// In-place inverse transform (no normalisation).
    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        self.fft2(buf, false);
    }

    pub fn forward(&self, f: &GridField) -> Result<SpectralField> {
        self.check(f.geometry())?;
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_inplace(&mut buf);
        Ok(SpectralField::from_raw(self.geometry, buf))
    }

    /// Inverse transform keeping the real part.
    pub fn inverse(&self, s: &SpectralField) -> Result<GridField> {
        self.check(s.geometry())?;
        let mut buf = s.coeffs().to_vec();
        self.inverse_inplace(&mut buf);
        Ok(GridField::from_raw(
            self.geometry,
            buf.into_iter().map(|c| c.re).collect(),
        ))
    }

    /// Inverts two Hermitian spectra with one complex transform.
    pub fn inverse_pair(&self, a: &SpectralField, b: &SpectralField) -> Result<(GridField, GridField)> {
        self.check(a.geometry())?;
        self.check(b.geometry())?;
        let mut buf: Vec<Complex64> = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| x + Complex64::i() * y)
            .collect();
        self.inverse_inplace(&mut buf);
        let (re, im) = split_real_imag(&buf);
        Ok((
            GridField::from_raw(self.geometry, re),
            GridField::from_raw(self.geometry, im),
        ))
    }

    /// `λ_k` of the wavevector stored at `idx`.
    pub fn eigenvalue_at(&self, idx: usize) -> f64 {
        let nx = self.geometry.nx();
        eigenvalue(
            &self.geometry,
            wrap_index(idx % nx, nx),
            wrap_index(idx / nx, self.geometry.ny()),
        )
    }

    /// Spectral `(∂₁f̂, ∂₂f̂)`.
    pub fn gradient_spectral(&self, s: &SpectralField) -> Result<(SpectralField, SpectralField)> {
        self.check(s.geometry())?;
        let nx = self.geometry.nx();
        let mut g1 = s.coeffs().to_vec();
        let mut g2 = s.coeffs().to_vec();
        for (idx, (a, b)) in g1.iter_mut().zip(g2.iter_mut()).enumerate() {
            let (p, q) = (idx % nx, idx / nx);
            *a *= Complex64::new(0.0, self.d1[p]);
            *b *= Complex64::new(0.0, self.d2[q]);
        }
        Ok((
            SpectralField::from_raw(self.geometry, g1),
            SpectralField::from_raw(self.geometry, g2),
        ))
    }

    pub fn gradient(&self, f: &GridField) -> Result<(GridField, GridField)> {
        let (a, b) = self.gradient_spectral(&self.forward(f)?)?;
        self.inverse_pair(&a, &b)
    }

    /// `∇⊥f = (∂₂f, −∂₁f)`.
    pub fn perp_gradient(&self, f: &GridField) -> Result<(GridField, GridField)> {
        let (d1, d2) = self.gradient(f)?;
        Ok((d2, d1.scaled(-1.0)))
    }

    /// `K f̂`: divide by `λ_k`, zero mode set to zero.
    pub fn apply_k_spectral(&self, s: &SpectralField) -> Result<SpectralField> {
        self.check(s.geometry())?;
        let coeffs = s.coeffs().iter().zip(&self.inv_lambda).map(|(c, l)| c * l).collect();
        Ok(SpectralField::from_raw(self.geometry, coeffs))
    }

    /// `−Δ f̂`.
    pub fn neg_laplacian_spectral(&self, s: &SpectralField) -> Result<SpectralField> {
        self.check(s.geometry())?;
        let coeffs = s
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| c * self.eigenvalue_at(idx))
            .collect();
        Ok(SpectralField::from_raw(self.geometry, coeffs))
    }

    pub fn neg_laplacian(&self, f: &GridField) -> Result<GridField> {
        self.inverse(&self.neg_laplacian_spectral(&self.forward(f)?)?)
    }

    /// The inverse Laplacian `K` on mean-zero fields. The input mean is
    /// discarded and reported rather than rejected.
    pub fn poisson_inverse(&self, f: &GridField) -> Result<PoissonSolution> {
        let spec = self.forward(f)?;
        let discarded_mean = spec.coeffs()[0].re;
        let mean_within_tolerance = discarded_mean.abs() <= MEAN_TOLERANCE * f.max_abs();
        if !mean_within_tolerance {
            log::warn!("poisson_inverse: discarding input mean {discarded_mean:e}");
        }
        let stream = self.inverse(&self.apply_k_spectral(&spec)?)?;
        Ok(PoissonSolution {
            stream,
            discarded_mean,
            mean_within_tolerance,
        })
    }

    /// Shorthand for `poisson_inverse(f).stream`.
    pub fn apply_k(&self, f: &GridField) -> Result<GridField> {
        Ok(self.poisson_inverse(f)?.stream)
    }

    /// Velocity spectra `∇⊥Kω̂ + F/|𝕋²|`.
    pub fn velocity_spectral(&self, omega: &SpectralField, flux: FluxVector) -> Result<(SpectralField, SpectralField)> {
        let psi = self.apply_k_spectral(omega)?;
        let (d1, d2) = self.gradient_spectral(&psi)?;
        let mut v1 = d2;
        let mut v2 = d1;
        v2.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
        let area = self.geometry.area();
        v1.coeffs_mut()[0] = Complex64::new(flux.f1 / area, 0.0);
        v2.coeffs_mut()[0] = Complex64::new(flux.f2 / area, 0.0);
        Ok((v1, v2))
    }

    /// Biot–Savart law `v = ∇⊥Kω + F/|𝕋²|`.
    pub fn biot_savart(&self, omega: &GridField, flux: FluxVector) -> Result<(GridField, GridField)> {
        let spec = self.forward(omega)?;
        let mean = spec.coeffs()[0].re;
        if mean.abs() > MEAN_TOLERANCE * omega.max_abs() {
            log::warn!("biot_savart: discarding vorticity mean {mean:e}");
        }
        let (v1, v2) = self.velocity_spectral(&spec, flux)?;
        self.inverse_pair(&v1, &v2)
    }

    /// Dealiasing filter: zero every mode with `|k₁| > fraction·nx/2` or
    /// `|k₂| > fraction·ny/2`.
    pub fn truncate(&self, s: &SpectralField, fraction: f64) -> Result<SpectralField> {
        self.check(s.geometry())?;
        let mut out = s.clone();
        truncate_inplace(&self.geometry, out.coeffs_mut(), fraction)?;
        Ok(out)
    }

    /// Trigonometric interpolant of `f` sampled on a grid `factor` times finer
    /// in each direction. Nyquist modes are dropped, so the coarse-grid
    /// samples are reproduced exactly only when they carry no Nyquist content.
    pub fn refine(&self, f: &GridField, factor: usize) -> Result<GridField> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be positive".into()));
        }
        let s = self.forward(f)?;
        let g = self.geometry;
        let (nx, ny) = (g.nx(), g.ny());
        let fine = TorusGeometry::debug_grid(g.nu1(), g.nu2(), nx * factor, ny * factor)?;
        let mut t = SpectralField::zeros(fine);
        for (idx, &c) in s.coeffs().iter().enumerate() {
            let (p, q) = (idx % nx, idx / nx);
            if is_nyquist(p, nx) || is_nyquist(q, ny) {
                continue;
            }
            let pp = unwrap_index(wrap_index(p, nx), nx * factor).expect("fits the finer grid");
            let qq = unwrap_index(wrap_index(q, ny), ny * factor).expect("fits the finer grid");
            t.coeffs_mut()[qq * nx * factor + pp] = c;
        }
        SpectralOps::with_execution(fine, self.exec).inverse(&t)
    }
}

/// Eigenvalue `λ_k = (k₁/ν₁)² + (k₂/ν₂)²` of `−Δ` for the mode `k`.
pub fn eigenvalue(geometry: &TorusGeometry, k1: i64, k2: i64) -> f64 {
    let a = k1 as f64 / geometry.nu1();
    let b = k2 as f64 / geometry.nu2();
    a * a + b * b
}

/// Largest retained `|k|` along an axis of `n` points for a truncation fraction.
pub fn retained_limit(n: usize, fraction: f64) -> usize {
    // Tolerance guards fractions like 2/3 landing a hair below an integer.
    ((fraction * (n / 2) as f64) + 1e-9).floor() as usize
}

/// Whether the truncation keeps the mode stored at `(p, q)`.
pub fn is_retained(geometry: &TorusGeometry, p: usize, q: usize, fraction: f64) -> bool {
    let (nx, ny) = (geometry.nx(), geometry.ny());
    wrap_index(p, nx).unsigned_abs() as usize <= retained_limit(nx, fraction)
        && wrap_index(q, ny).unsigned_abs() as usize <= retained_limit(ny, fraction)
}

pub(crate) fn truncate_inplace(geometry: &TorusGeometry, coeffs: &mut [Complex64], fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation fraction {fraction} outside (0, 1]"
        )));
    }
    if fraction == 1.0 {
        return Ok(());
    }
    let nx = geometry.nx();
    let (l1, l2) = (retained_limit(nx, fraction), retained_limit(geometry.ny(), fraction));
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k1 = wrap_index(idx % nx, nx).unsigned_abs() as usize;
        let k2 = wrap_index(idx / nx, geometry.ny()).unsigned_abs() as usize;
        if k1 > l1 || k2 > l2 {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    Ok(())
}

fn run_batched(exec: Execution, plan: &Plan, buf: &mut [Complex64], len: usize) {
    let scratch_len = plan.get_inplace_scratch_len();
    par::for_each_chunk(exec, buf, len * ROWS_PER_TASK, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        plan.process_with_scratch(chunk, &mut scratch);
    });
}

fn split_real_imag(buf: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    buf.iter().map(|c| (c.re, c.im)).unzip()
}

/// One-shot forward transform.
pub fn forward_transform(f: &GridField) -> Result<SpectralField> {
    SpectralOps::new(*f.geometry()).forward(f)
}

/// One-shot inverse transform.
pub fn inverse_transform(s: &SpectralField) -> Result<GridField> {
    SpectralOps::new(*s.geometry()).inverse(s)
}

/// One-shot `K f`.
pub fn poisson_inverse(f: &GridField) -> Result<GridField> {
    SpectralOps::new(*f.geometry()).apply_k(f)
}

/// One-shot Biot–Savart velocity.
pub fn biot_savart(omega: &GridField, flux: FluxVector) -> Result<(GridField, GridField)> {
    SpectralOps::new(*omega.geometry()).biot_savart(omega, flux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: TorusGeometry, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridField::from_raw(g, (0..g.cells()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn max_diff(a: &GridField, b: &GridField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let s = forward_transform(&GridField::zeros(g)).unwrap();
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_mode_has_two_coefficients() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let f = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        let s = forward_transform(&f).unwrap();
        let nonzero: Vec<_> = (0..g.cells())
            .filter(|&i| s.coeffs()[i].norm() > 1e-12)
            .map(|i| s.wavevector(i))
            .collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.contains(&(0, 1)) && nonzero.contains(&(0, -1)));
        // sin = (e^{iθ} - e^{-iθ}) / 2i
        let c = s.coeff(0, 1).unwrap();
        assert!((c - Complex64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn round_trip_random() {
        let g = TorusGeometry::new(1.3, 0.7, 16, 16).unwrap();
        let f = random_field(g, 3);
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        assert!(max_diff(&f, &back) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn derivative_of_sine() {
        let g = TorusGeometry::new(1.5, 2.0, 32, 16).unwrap();
        let ops = SpectralOps::new(g);
        let f = GridField::from_fn(g, |x1, _| (x1 / 1.5).sin());
        let (d1, d2) = ops.gradient(&f).unwrap();
        let expect = GridField::from_fn(g, |x1, _| (x1 / 1.5).cos() / 1.5);
        assert!(max_diff(&d1, &expect) < 1e-13);
        assert!(d2.max_abs() < 1e-13);

        let f = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        let (p1, p2) = ops.perp_gradient(&f).unwrap();
        let expect = GridField::from_fn(g, |_, x2| (x2 / 2.0).cos() / 2.0);
        assert!(max_diff(&p1, &expect) < 1e-13);
        assert!(p2.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_centered_difference() {
        // Smooth band-limited field; centred differences converge as h².
        let errors: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| {
                let g = TorusGeometry::new(1.0, 1.0, n, n).unwrap();
                let f = GridField::from_fn(g, |x1, x2| (x1 + 0.3).sin() * (2.0 * x2).cos() + (3.0 * x1).cos());
                let (d1, _) = SpectralOps::new(g).gradient(&f).unwrap();
                let h = g.dx1();
                let fd = GridField::from_fn(g, |x1, x2| {
                    let f = |x: f64| (x + 0.3).sin() * (2.0 * x2).cos() + (3.0 * x).cos();
                    (f(x1 + h) - f(x1 - h)) / (2.0 * h)
                });
                max_diff(&d1, &fd)
            })
            .collect();
        let ratio = errors[0] / errors[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn inverse_laplacian_of_modes() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let ops = SpectralOps::new(g);
        let f = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        let u = ops.apply_k(&f).unwrap();
        assert!(max_diff(&u, &f.scaled(4.0)) < 1e-13);

        let f = GridField::from_fn(g, |x1, _| (x1 + 0.7).sin());
        let sol = ops.poisson_inverse(&f).unwrap();
        assert!(sol.mean_within_tolerance);
        assert!(max_diff(&sol.stream, &f) < 1e-13);
        let back = ops.neg_laplacian(&sol.stream).unwrap();
        assert!(max_diff(&back, &f) < 1e-12);

        assert_eq!(ops.apply_k(&GridField::zeros(g)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mean_is_discarded_and_reported() {
        let g = TorusGeometry::new(1.0, 1.0, 16, 16).unwrap();
        let f = GridField::from_fn(g, |x1, _| x1.sin() + 0.25);
        let sol = SpectralOps::new(g).poisson_inverse(&f).unwrap();
        assert!(!sol.mean_within_tolerance);
        assert!((sol.discarded_mean - 0.25).abs() < 1e-14);
        assert!(sol.stream.mean().abs() < 1e-14);
    }

    #[test]
    fn biot_savart_examples() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let ops = SpectralOps::new(g);
        let omega = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        let (v1, v2) = ops.biot_savart(&omega, FluxVector::ZERO).unwrap();
        let expect = GridField::from_fn(g, |_, x2| 2.0 * (x2 / 2.0).cos());
        assert!(max_diff(&v1, &expect) < 1e-13);
        assert!(v2.max_abs() < 1e-13);

        let flux = FluxVector::new(8.0 * PI * PI, 0.0).unwrap();
        let (v1, v2) = ops.biot_savart(&GridField::zeros(g), flux).unwrap();
        assert!(max_diff(&v1, &GridField::constant(g, 1.0)) < 1e-14);
        assert!(v2.max_abs() < 1e-14);
    }

    #[test]
    fn biot_savart_recovers_vorticity() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let ops = SpectralOps::new(g);
        // Random field without Nyquist content so curl∘(∇⊥K) is the identity.
        let mut s = ops.forward(&random_field(g, 9)).unwrap();
        truncate_inplace(&g, s.coeffs_mut(), 0.9).unwrap();
        s.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        let omega = ops.inverse(&s).unwrap();
        let (v1, v2) = ops.biot_savart(&omega, FluxVector::new(1.0, -2.0).unwrap()).unwrap();
        let (d1v2, _) = ops.gradient(&v2).unwrap();
        let (_, d2v1) = ops.gradient(&v1).unwrap();
        let curl = d1v2.sub(&d2v1).unwrap();
        assert!(max_diff(&curl, &omega) <= 1e-10 * omega.max_abs());
        let (dv1, _) = ops.gradient(&v1).unwrap();
        let (_, dv2) = ops.gradient(&v2).unwrap();
        assert!(dv1.add(&dv2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let g = TorusGeometry::new(1.0, 1.0, 64, 64).unwrap();
        let ops = SpectralOps::new(g);
        let noise = ops.forward(&random_field(g, 1)).unwrap();
        assert_eq!(ops.truncate(&noise, 1.0).unwrap(), noise);

        let f = GridField::from_fn(g, |_, x2| x2.sin());
        let s = ops.forward(&f).unwrap();
        let kept = ops.truncate(&s, 2.0 / 3.0).unwrap();
        let diff = kept
            .coeffs()
            .iter()
            .zip(s.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-15);
        assert_eq!(kept.coeff(0, 1), s.coeff(0, 1));

        let t = ops.truncate(&noise, 2.0 / 3.0).unwrap();
        let survivors = t.coeffs().iter().filter(|c| c.norm() > 0.0).count();
        let mut expected = 0;
        for k1 in -32i64..32 {
            for k2 in -32i64..32 {
                if k1.abs() as f64 <= 64.0 / 3.0 && k2.abs() as f64 <= 64.0 / 3.0 {
                    expected += 1;
                }
            }
        }
        assert_eq!(survivors, expected);
        assert!(t.hermitian_defect() < 1e-15);
        assert!(ops.truncate(&noise, 0.0).is_err());
        assert!(ops.truncate(&noise, 1.5).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = TorusGeometry::new(1.0, 1.0, 16, 16).unwrap();
        let h = TorusGeometry::new(1.0, 1.0, 32, 16).unwrap();
        let ops = SpectralOps::new(g);
        assert!(ops.forward(&GridField::zeros(h)).is_err());
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let g = TorusGeometry::new(1.0, 2.0, 64, 32).unwrap();
        let f = random_field(g, 11);
        let a = SpectralOps::with_execution(g, Execution::Sequential)
            .forward(&f)
            .unwrap();
        let b = SpectralOps::with_execution(g, Execution::Parallel).forward(&f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_interpolates() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 8).unwrap();
        let f = GridField::from_fn(g, |x1, x2| (2.0 * x1).sin() + (1.5 * x2).cos() * x1.cos());
        let fine = SpectralOps::new(g).refine(&f, 4).unwrap();
        assert_eq!((fine.geometry().nx(), fine.geometry().ny()), (64, 32));
        let exact = GridField::from_fn(*fine.geometry(), |x1, x2| {
            (2.0 * x1).sin() + (1.5 * x2).cos() * x1.cos()
        });
        assert!(fine.sub(&exact).unwrap().max_abs() < 1e-13);
        for j in 0..8 {
            for i in 0..16 {
                assert!((fine.get(4 * i, 4 * j) - f.get(i, j)).abs() < 1e-13);
            }
        }
    }
}
