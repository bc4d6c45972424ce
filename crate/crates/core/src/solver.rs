//! Dealiased pseudo-spectral RK4 integration of `∂ₜω + v·∇ω = 0`, with an
//! optional follower `ζ` carried by the same velocity.
//!
//! The state is kept in Fourier space between samples. Each right-hand side
//! evaluation costs three complex transforms (two packed inverses and one
//! packed forward), plus one inverse when a follower is tracked.

use num_complex::Complex64;

use crate::diagnostics::{ConservedLedger, ValueDistribution, DEFAULT_LP};
use crate::eigenmodes::{analyze, orbit_union_distance, EigenvalueInfo, NearestOrbit, OrbitSpec};
use crate::error::{Error, Result};
use crate::field::{FluxVector, GridField, SpectralField};
use crate::geometry::TorusGeometry;
use crate::par::Execution;
use crate::spectral::{truncate_inplace, SpectralOps};

pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Fixed step, shortened where needed to land on sample times.
    Fixed(f64),
    /// CFL target in `(0, 1)`; the step is re-chosen at every sample.
    Cfl(f64),
}

/// Exponential spectral filter `exp(−strength·(k/k_max)^order)` per axis.
/// Any run using it is dissipative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    pub strength: f64,
    pub order: u32,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub geometry: TorusGeometry,
    pub time_step: TimeStep,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub sample_interval: f64,
    pub flux: FluxVector,
    /// Initial follower `ζ₀`; tracked iff present.
    pub follower: Option<GridField>,
    pub filter: Option<SpectralFilter>,
    pub lp_exponents: Vec<f64>,
    /// Orbit whose distance is sampled for every exponent in `lp_exponents`.
    pub orbit: Option<OrbitSpec>,
    pub execution: Execution,
}

impl SolverConfig {
    pub fn new(geometry: TorusGeometry, time_step: TimeStep, t_end: f64) -> Self {
        Self {
            geometry,
            time_step,
            t_end,
            dealias_fraction: DEFAULT_DEALIAS,
            sample_interval: t_end,
            flux: FluxVector::ZERO,
            follower: None,
            filter: None,
            lp_exponents: DEFAULT_LP.to_vec(),
            orbit: None,
            execution: Execution::default(),
        }
    }

    pub fn is_dissipative(&self) -> bool {
        self.filter.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self.time_step {
            TimeStep::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => return bad(format!("dt = {dt} must be positive")),
            TimeStep::Cfl(c) if !(c > 0.0 && c < 1.0) => return bad(format!("cfl = {c} outside (0, 1)")),
            _ => {}
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return bad(format!("sample_interval = {} must be positive", self.sample_interval));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return bad(format!("dealias_fraction = {} outside (0, 1]", self.dealias_fraction));
        }
        for &p in &self.lp_exponents {
            crate::diagnostics::check_exponent(p)?;
        }
        if let Some(z) = &self.follower {
            if !z.geometry().same_grid(&self.geometry) {
                return Err(Error::GeometryMismatch);
            }
        }
        if let Some(o) = &self.orbit {
            if !o.geometry().same_grid(&self.geometry) {
                return Err(Error::GeometryMismatch);
            }
        }
        if let Some(f) = &self.filter {
            if !(f.strength.is_finite() && f.strength >= 0.0 && f.order > 0) {
                return bad("filter needs strength ≥ 0 and order > 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub omega: GridField,
    pub zeta: Option<GridField>,
    /// Total absolute mean removed so far.
    pub discarded_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub p: f64,
    /// Distance to the orbit (to the union with the swapped orbit for square pairs).
    pub distance: f64,
    pub alpha: f64,
    pub beta: f64,
    pub nearest: NearestOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerSample {
    /// `‖ζ − ω‖_{L²}`.
    pub gap: f64,
    /// Sorted-values deviation of `ζ` from `ζ₀`, relative to the range of `ζ₀`.
    pub distribution_drift: f64,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub ledger: ConservedLedger,
    pub orbit: Vec<OrbitSample>,
    pub follower: Option<FollowerSample>,
}

impl Sample {
    pub fn time(&self) -> f64 {
        self.ledger.time
    }

    pub fn distance(&self, p: f64) -> Option<f64> {
        self.orbit.iter().find(|o| o.p == p).map(|o| o.distance)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftSummary {
    pub energy: f64,
    pub enstrophy: f64,
    /// Worst relative drift of each tracked `Lᵖ` norm, in exponent order.
    pub lp: Vec<(f64, f64)>,
    /// `‖F(t) − F(0)‖ / max(‖F(0)‖, 1)`.
    pub flux: f64,
    /// Largest `Zperp(t)/Zperp(0)`.
    pub perp_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: SolverState,
    pub samples: Vec<Sample>,
    pub steps: usize,
    /// `(t, dt)` at the start of every sample interval.
    pub dt_history: Vec<(f64, f64)>,
    pub dissipative: bool,
    /// `L²` norm removed from `ω₀` by the initial dealiasing truncation.
    pub initial_truncation: f64,
}

impl RunResult {
    pub fn drift(&self) -> DriftSummary {
        let Some(first) = self.samples.first() else {
            return DriftSummary::default();
        };
        let rel = |a: f64, b: f64| {
            if b != 0.0 {
                (a - b).abs() / b.abs()
            } else {
                (a - b).abs()
            }
        };
        let mut d = DriftSummary::default();
        let f0 = first.ledger.flux;
        d.lp = first.ledger.lp_norms.iter().map(|&(p, _)| (p, 0.0)).collect();
        for s in &self.samples {
            let l = &s.ledger;
            d.energy = d.energy.max(rel(l.energy, first.ledger.energy));
            d.enstrophy = d.enstrophy.max(rel(l.enstrophy, first.ledger.enstrophy));
            for ((_, worst), (&(_, v), &(_, v0))) in d.lp.iter_mut().zip(l.lp_norms.iter().zip(&first.ledger.lp_norms))
            {
                *worst = worst.max(rel(v, v0));
            }
            let df = FluxVector {
                f1: l.flux.f1 - f0.f1,
                f2: l.flux.f2 - f0.f2,
            };
            d.flux = d.flux.max(df.norm() / f0.norm().max(1.0));
            let z0 = first.ledger.perp_enstrophy;
            if z0 > 0.0 {
                d.perp_ratio = d.perp_ratio.max(l.perp_enstrophy / z0);
            }
        }
        d
    }
}

/// Fourier-space state advanced by the integrator.
#[derive(Clone)]
struct Coeffs {
    omega: Vec<Complex64>,
    zeta: Option<Vec<Complex64>>,
}

pub struct Solver {
    config: SolverConfig,
    ops: SpectralOps,
    info: EigenvalueInfo,
    /// Retained-mode mask for the dealiasing truncation.
    keep: Vec<bool>,
    /// Conjugate-partner index `−k` of every storage index.
    partner: Vec<usize>,
    filter: Option<Vec<f64>>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let g = config.geometry;
        let (nx, ny) = (g.nx(), g.ny());
        let mut mask = vec![Complex64::new(1.0, 0.0); g.cells()];
        truncate_inplace(&g, &mut mask, config.dealias_fraction)?;
        let keep = mask.iter().map(|c| c.re != 0.0).collect();
        let partner = (0..g.cells())
            .map(|idx| {
                let (p, q) = (idx % nx, idx / nx);
                ((ny - q) % ny) * nx + (nx - p) % nx
            })
            .collect();
        let filter = config.filter.map(|f| {
            let l1 = crate::spectral::retained_limit(nx, config.dealias_fraction).max(1) as f64;
            let l2 = crate::spectral::retained_limit(ny, config.dealias_fraction).max(1) as f64;
            (0..g.cells())
                .map(|idx| {
                    let k1 = crate::field::wrap_index(idx % nx, nx).abs() as f64 / l1;
                    let k2 = crate::field::wrap_index(idx / nx, ny).abs() as f64 / l2;
                    (-f.strength * (k1.powi(f.order as i32) + k2.powi(f.order as i32))).exp()
                })
                .collect()
        });
        Ok(Self {
            ops: SpectralOps::with_execution(g, config.execution),
            info: analyze(&g),
            keep,
            partner,
            filter,
            config,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    /// `−P(v·∇ω)` in physical space for a grid field.
    pub fn rhs(&self, omega: &GridField) -> Result<GridField> {
        let mut s = self.ops.forward(omega)?.into_coeffs();
        s[0] = ZERO;
        let (dw, _) = self.rhs_spectral(&Coeffs { omega: s, zeta: None });
        self.ops.inverse(&SpectralField::from_raw(self.config.geometry, dw))
    }

    /// Velocity and gradient spectra packed as `a + i·b` for one inverse transform.
    fn packed_gradient(&self, s: &[Complex64]) -> Vec<Complex64> {
        let nx = self.config.geometry.nx();
        let (d1, d2) = self.ops.wavenumbers();
        s.iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k1, k2) = (d1[idx % nx], d2[idx / nx]);
                // i·k₁·c + i·(i·k₂·c) = i·k₁·c − k₂·c
                Complex64::new(-k1 * c.im - k2 * c.re, k1 * c.re - k2 * c.im)
            })
            .collect()
    }

    fn packed_velocity(&self, s: &[Complex64]) -> Vec<Complex64> {
        let g = self.config.geometry;
        let nx = g.nx();
        let (d1, d2) = self.ops.wavenumbers();
        let inv = self.ops.inverse_eigenvalues();
        let mut out: Vec<Complex64> = s
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let psi = c * inv[idx];
                let (k1, k2) = (d1[idx % nx], d2[idx / nx]);
                // v₁ = i·k₂·ψ, v₂ = −i·k₁·ψ, packed as v₁ + i·v₂ = i·k₂·ψ + k₁·ψ
                Complex64::new(k1 * psi.re - k2 * psi.im, k1 * psi.im + k2 * psi.re)
            })
            .collect();
        let area = g.area();
        out[0] = Complex64::new(self.config.flux.f1 / area, self.config.flux.f2 / area);
        out
    }

    fn rhs_spectral(&self, state: &Coeffs) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let mut vel = self.packed_velocity(&state.omega);
        let mut grad = self.packed_gradient(&state.omega);
        self.ops.inverse_inplace(&mut vel);
        self.ops.inverse_inplace(&mut grad);
        let mut zgrad = state.zeta.as_ref().map(|z| self.packed_gradient(z));
        if let Some(z) = zgrad.as_mut() {
            self.ops.inverse_inplace(z);
        }
        // Nonlinear terms for ω (real part) and ζ (imaginary part).
        let mut prod: Vec<Complex64> = match &zgrad {
            Some(zg) => vel
                .iter()
                .zip(&grad)
                .zip(zg)
                .map(|((v, g), z)| Complex64::new(v.re * g.re + v.im * g.im, v.re * z.re + v.im * z.im))
                .collect(),
            None => vel
                .iter()
                .zip(&grad)
                .map(|(v, g)| Complex64::new(v.re * g.re + v.im * g.im, 0.0))
                .collect(),
        };
        self.ops.forward_inplace(&mut prod);
        let tracked = zgrad.is_some();
        let mut dw = vec![ZERO; prod.len()];
        let mut dz = if tracked { vec![ZERO; prod.len()] } else { Vec::new() };
        for idx in 1..prod.len() {
            if !self.keep[idx] {
                continue;
            }
            let a = prod[idx];
            if tracked {
                let b = prod[self.partner[idx]].conj();
                dw[idx] = -0.5 * (a + b);
                // (a − b)/(2i) = −i(a − b)/2
                let d = a - b;
                dz[idx] = -Complex64::new(0.5 * d.im, -0.5 * d.re);
            } else {
                dw[idx] = -a;
            }
        }
        if !tracked {
            // Real input: restore exact Hermitian symmetry lost to roundoff.
            for idx in 1..dw.len() {
                let j = self.partner[idx];
                if j > idx {
                    let avg = 0.5 * (dw[idx] + dw[j].conj());
                    dw[idx] = avg;
                    dw[j] = avg.conj();
                }
            }
        }
        (dw, tracked.then_some(dz))
    }

    fn rk4(&self, s: &Coeffs, dt: f64) -> Coeffs {
        let axpy = |base: &Coeffs, k: &(Vec<Complex64>, Option<Vec<Complex64>>), h: f64| -> Coeffs {
            Coeffs {
                omega: base.omega.iter().zip(&k.0).map(|(a, b)| a + b * h).collect(),
                zeta: base
                    .zeta
                    .as_ref()
                    .zip(k.1.as_ref())
                    .map(|(z, kz)| z.iter().zip(kz).map(|(a, b)| a + b * h).collect()),
            }
        };
        let k1 = self.rhs_spectral(s);
        let k2 = self.rhs_spectral(&axpy(s, &k1, 0.5 * dt));
        let k3 = self.rhs_spectral(&axpy(s, &k2, 0.5 * dt));
        let k4 = self.rhs_spectral(&axpy(s, &k3, dt));
        let combine = |base: &[Complex64], a: &[Complex64], b: &[Complex64], c: &[Complex64], d: &[Complex64]| {
            base.iter()
                .enumerate()
                .map(|(i, x)| x + (a[i] + 2.0 * (b[i] + c[i]) + d[i]) * (dt / 6.0))
                .collect::<Vec<_>>()
        };
        Coeffs {
            omega: combine(&s.omega, &k1.0, &k2.0, &k3.0, &k4.0),
            zeta: s.zeta.as_ref().map(|z| {
                combine(
                    z,
                    k1.1.as_ref().unwrap(),
                    k2.1.as_ref().unwrap(),
                    k3.1.as_ref().unwrap(),
                    k4.1.as_ref().unwrap(),
                )
            }),
        }
    }

    /// One RK4 step with mean re-zeroing, optional filtering and a
    /// finiteness check. Returns the absolute mean discarded.
    fn advance(&self, s: &mut Coeffs, t: f64, dt: f64) -> Result<f64> {
        *s = self.rk4(s, dt);
        let discarded = s.omega[0].norm();
        s.omega[0] = ZERO;
        if let Some(z) = s.zeta.as_mut() {
            z[0] = ZERO;
        }
        if let Some(f) = &self.filter {
            s.omega.iter_mut().zip(f).for_each(|(c, w)| *c *= w);
            if let Some(z) = s.zeta.as_mut() {
                z.iter_mut().zip(f).for_each(|(c, w)| *c *= w);
            }
        }
        let finite = s.omega.iter().all(|c| c.re.is_finite() && c.im.is_finite())
            && s.zeta
                .as_ref()
                .is_none_or(|z| z.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        if !finite {
            return Err(Error::Numerical {
                time: t + dt,
                detail: format!("non-finite vorticity after a step of size {dt:e}"),
            });
        }
        Ok(discarded)
    }

    fn to_coeffs(&self, omega: &GridField, zeta: Option<&GridField>) -> Result<(Coeffs, f64)> {
        let mut w = self.ops.forward(omega)?.into_coeffs();
        w[0] = ZERO;
        let mut z = match zeta {
            Some(z) => {
                let mut c = self.ops.forward(z)?.into_coeffs();
                c[0] = ZERO;
                Some(c)
            }
            None => None,
        };
        let mut removed = 0.0;
        for (idx, keep) in self.keep.iter().enumerate() {
            if !keep {
                removed += w[idx].norm_sqr();
                w[idx] = ZERO;
                if let Some(z) = z.as_mut() {
                    z[idx] = ZERO;
                }
            }
        }
        Ok((
            Coeffs { omega: w, zeta: z },
            (removed * self.config.geometry.area()).sqrt(),
        ))
    }

    fn to_state(&self, c: &Coeffs, t: f64, discarded_mean: f64) -> Result<SolverState> {
        let g = self.config.geometry;
        let omega = SpectralField::from_raw(g, c.omega.clone());
        let (omega, zeta) = match &c.zeta {
            Some(z) => {
                let (w, z) = self.ops.inverse_pair(&omega, &SpectralField::from_raw(g, z.clone()))?;
                (w, Some(z))
            }
            None => (self.ops.inverse(&omega)?, None),
        };
        Ok(SolverState {
            t,
            omega,
            zeta,
            discarded_mean,
        })
    }

    fn max_velocity_rate(&self, c: &Coeffs) -> f64 {
        let mut vel = self.packed_velocity(&c.omega);
        self.ops.inverse_inplace(&mut vel);
        let g = self.config.geometry;
        let (m1, m2) = vel
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), v| (a.max(v.re.abs()), b.max(v.im.abs())));
        m1 / g.dx1() + m2 / g.dx2()
    }

    /// Number of equal steps covering `span`.
    fn step_count(&self, c: &Coeffs, span: f64) -> usize {
        let dt = match self.config.time_step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl(target) => {
                let rate = self.max_velocity_rate(c);
                if rate > 0.0 {
                    target / rate
                } else {
                    span
                }
            }
        };
        ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    /// Advances a grid-level state by one RK4 step of size `dt`.
    pub fn step(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        let (mut c, _) = self.to_coeffs(&state.omega, state.zeta.as_ref())?;
        let discarded = self.advance(&mut c, state.t, dt)?;
        self.to_state(&c, state.t + dt, state.discarded_mean + discarded)
    }

    fn sample(&self, state: &SolverState, zeta0: Option<&ValueDistribution>) -> Result<Sample> {
        let ledger = ConservedLedger::measure(
            &self.ops,
            &self.info,
            state.t,
            &state.omega,
            self.config.flux,
            &self.config.lp_exponents,
        )?;
        let mut orbit = Vec::new();
        if let Some(spec) = &self.config.orbit {
            for &p in &self.config.lp_exponents {
                let u = orbit_union_distance(&state.omega, spec, p)?;
                let best = match u.nearest() {
                    NearestOrbit::Direct => u.direct,
                    NearestOrbit::Swapped => u.swapped,
                };
                orbit.push(OrbitSample {
                    p,
                    distance: u.distance(),
                    alpha: best.alpha,
                    beta: best.beta,
                    nearest: u.nearest(),
                });
            }
        }
        let follower = match (&state.zeta, zeta0) {
            (Some(z), Some(d0)) => Some(FollowerSample {
                gap: (2.0 * crate::diagnostics::enstrophy(&z.sub(&state.omega)?)).sqrt(),
                distribution_drift: ValueDistribution::of(z).relative_drift(d0)?,
            }),
            _ => None,
        };
        Ok(Sample {
            ledger,
            orbit,
            follower,
        })
    }

    /// Integrates from `omega0` to `t_end`, sampling every `sample_interval`
    /// (and at `t_end`).
    pub fn run(&self, omega0: &GridField) -> Result<RunResult> {
        self.run_with(omega0, |_| Ok(()))
    }

    /// As [`Solver::run`], calling `on_sample` after every sample.
    pub fn run_with(
        &self,
        omega0: &GridField,
        mut on_sample: impl FnMut(&(SolverState, Sample)) -> Result<()>,
    ) -> Result<RunResult> {
        if !omega0.geometry().same_grid(&self.config.geometry) {
            return Err(Error::GeometryMismatch);
        }
        let mean = omega0.mean();
        if mean.abs() > crate::spectral::MEAN_TOLERANCE * omega0.max_abs() {
            log::warn!("run: subtracting initial vorticity mean {mean:e}");
        }
        let (mut c, initial_truncation) = self.to_coeffs(omega0, self.config.follower.as_ref())?;
        if initial_truncation > 0.0 {
            log::info!("run: dealiasing removed {initial_truncation:e} (L2) from the initial vorticity");
        }
        let mut discarded = mean.abs();
        let mut t = 0.0;
        let state0 = self.to_state(&c, t, discarded)?;
        let zeta0 = state0.zeta.as_ref().map(ValueDistribution::of);
        let first = self.sample(&state0, zeta0.as_ref())?;
        let mut samples = vec![first.clone()];
        on_sample(&(state0.clone(), first))?;

        let t_end = self.config.t_end;
        let interval = self.config.sample_interval;
        let mut steps = 0;
        let mut dt_history = Vec::new();
        let mut k = 0u64;
        let mut last_state = state0;
        while t < t_end {
            k += 1;
            let target = (k as f64 * interval).min(t_end);
            let span = target - t;
            let n = self.step_count(&c, span);
            let dt = span / n as f64;
            dt_history.push((t, dt));
            for i in 0..n {
                discarded += self.advance(&mut c, t + i as f64 * dt, dt)?;
            }
            steps += n;
            t = target;
            let state = self.to_state(&c, t, discarded)?;
            let s = self.sample(&state, zeta0.as_ref())?;
            log::debug!(
                "t = {t:.4}: E = {:.12e}, Z = {:.12e}",
                s.ledger.energy,
                s.ledger.enstrophy
            );
            on_sample(&(state.clone(), s.clone()))?;
            samples.push(s);
            last_state = state;
        }
        if discarded > 0.0 {
            log::debug!("run: discarded {discarded:e} of accumulated mean");
        }
        Ok(RunResult {
            final_state: last_state,
            samples,
            steps,
            dt_history,
            dissipative: self.config.is_dissipative(),
            initial_truncation,
        })
    }
}

/// `−P(v·∇ω)` for a one-off evaluation.
pub fn rhs(omega: &GridField, flux: FluxVector, dealias_fraction: f64) -> Result<GridField> {
    let mut cfg = SolverConfig::new(*omega.geometry(), TimeStep::Fixed(1.0), 1.0);
    cfg.flux = flux;
    cfg.dealias_fraction = dealias_fraction;
    Solver::new(cfg)?.rhs(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::enstrophy;
    use crate::eigenmodes::make_eigenstate;

    fn g12(n: usize) -> TorusGeometry {
        TorusGeometry::new(1.0, 2.0, n, n).unwrap()
    }

    #[test]
    fn eigenstates_are_stationary() {
        let g = g12(32);
        let w = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        assert!(rhs(&w, FluxVector::ZERO, DEFAULT_DEALIAS).unwrap().max_abs() < 1e-12);

        let sq = TorusGeometry::square(1.0, 32, 32).unwrap();
        let w = GridField::from_fn(sq, |x1, x2| x1.sin() + x2.sin());
        assert!(rhs(&w, FluxVector::ZERO, DEFAULT_DEALIAS).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn mean_flow_rhs() {
        let g = g12(32);
        let c = 3.0;
        let w = GridField::from_fn(g, |x1, x2| (2.0 * x1 + 1.5 * x2).cos());
        let r = rhs(&w, FluxVector::new(c, 0.0).unwrap(), DEFAULT_DEALIAS).unwrap();
        let expect = GridField::from_fn(g, |x1, x2| 2.0 * c / g.area() * (2.0 * x1 + 1.5 * x2).sin());
        assert!(r.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn stationary_over_many_steps() {
        for (nu1, nu2) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
            let g = TorusGeometry::new(nu1, nu2, 32, 32).unwrap();
            let spec = OrbitSpec::least(g, 1.0, 0.5).unwrap();
            let w0 = make_eigenstate(&spec.with_phases(0.4, 1.3));
            let solver = Solver::new(SolverConfig::new(g, TimeStep::Fixed(0.01), 1.0)).unwrap();
            let mut s = SolverState {
                t: 0.0,
                omega: w0.clone(),
                zeta: None,
                discarded_mean: 0.0,
            };
            for _ in 0..100 {
                s = solver.step(&s, 0.01).unwrap();
            }
            assert!(s.omega.sub(&w0).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn follower_equal_to_omega_stays_equal() {
        let g = g12(32);
        let w0 = GridField::from_fn(g, |x1, x2| {
            (x2 / 2.0).sin() + 0.1 * (x1 + x2).cos() - 0.05 * (2.0 * x1).sin()
        });
        let mut cfg = SolverConfig::new(g, TimeStep::Cfl(0.5), 1.0);
        cfg.follower = Some(w0.clone());
        cfg.sample_interval = 0.25;
        let r = Solver::new(cfg).unwrap().run(&w0).unwrap();
        for s in &r.samples {
            assert!(s.follower.unwrap().gap < 1e-12);
        }
        let fin = r.final_state;
        assert!(fin.zeta.unwrap().sub(&fin.omega).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mean_flow_advection_is_exact() {
        let g = g12(32);
        let (c1, c2) = (g.area() * 0.7, -g.area() * 0.3);
        let f = |x1: f64, x2: f64| (x1 + 0.5 * x2).sin();
        let w0 = GridField::from_fn(g, f);
        let mut cfg = SolverConfig::new(g, TimeStep::Fixed(0.01), 1.0);
        cfg.flux = FluxVector::new(c1, c2).unwrap();
        let r = Solver::new(cfg).unwrap().run(&w0).unwrap();
        let exact = GridField::from_fn(g, |x1, x2| f(x1 - 0.7, x2 + 0.3));
        assert!(r.final_state.omega.sub(&exact).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let g = g12(32);
        let f = |x1: f64, x2: f64| (x1 + 0.5 * x2).sin();
        let w0 = GridField::from_fn(g, f);
        let exact = GridField::from_fn(g, |x1, x2| f(x1 - 2.0, x2));
        let err = |dt: f64| {
            let mut cfg = SolverConfig::new(g, TimeStep::Fixed(dt), 1.0);
            cfg.flux = FluxVector::new(2.0 * g.area(), 0.0).unwrap();
            let r = Solver::new(cfg).unwrap().run(&w0).unwrap();
            r.final_state.omega.sub(&exact).unwrap().max_abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn short_run_conserves() {
        let g = g12(32);
        let w0 = GridField::from_fn(g, |x1, x2| {
            (x2 / 2.0).sin() + 0.2 * (x1 + x2).cos() + 0.1 * (2.0 * x1 - x2).sin()
        });
        let mut cfg = SolverConfig::new(g, TimeStep::Cfl(0.25), 2.0);
        cfg.sample_interval = 0.5;
        cfg.orbit = Some(OrbitSpec::axis2(g, 1.0, 0.0).unwrap());
        let r = Solver::new(cfg).unwrap().run(&w0).unwrap();
        assert_eq!(r.samples.len(), 5);
        assert!((r.samples[4].time() - 2.0).abs() < 1e-15);
        let d = r.drift();
        assert!(d.energy < 1e-8 && d.enstrophy < 1e-8, "{d:?}");
        assert!(d.flux < 1e-12);
        assert!(r.samples[0].distance(2.0).is_some());
    }

    #[test]
    fn follower_gap_is_l2_norm() {
        let g = g12(16);
        let w = GridField::from_fn(g, |x1, _| x1.sin());
        let z = GridField::zeros(g);
        let mut cfg = SolverConfig::new(g, TimeStep::Fixed(0.1), 0.1);
        cfg.follower = Some(z);
        let r = Solver::new(cfg).unwrap().run(&w).unwrap();
        let gap = r.samples[0].follower.unwrap().gap;
        assert!((gap - (2.0 * enstrophy(&w)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let g = g12(16);
        assert!(Solver::new(SolverConfig::new(g, TimeStep::Cfl(1.5), 1.0)).is_err());
        assert!(Solver::new(SolverConfig::new(g, TimeStep::Fixed(-1.0), 1.0)).is_err());
        let mut c = SolverConfig::new(g, TimeStep::Fixed(0.1), 1.0);
        c.lp_exponents = vec![1.0];
        assert!(Solver::new(c).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = g12(32);
        let w0 = GridField::from_fn(g, |x1, x2| (x2 / 2.0).sin() + 0.3 * (x1 - x2).cos());
        let run = |exec| {
            let mut cfg = SolverConfig::new(g, TimeStep::Fixed(0.05), 0.5);
            cfg.execution = exec;
            Solver::new(cfg).unwrap().run(&w0).unwrap().final_state.omega
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
