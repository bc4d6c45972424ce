//! Least eigenvalue of `−Δ` per aspect ratio, projections onto its
//! eigenspace, and the fixed-amplitude orbits of sinusoidal states.

use num_complex::Complex64;

use crate::diagnostics::{abs_pow, check_exponent};
use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::TorusGeometry;
use crate::par::Execution;
use crate::search::{self, wrap_phase};
use crate::spectral::SpectralOps;

/// Which axis carries the least eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusCase {
    /// `ν₁ < ν₂`: least modes vary along `x₂`.
    Short,
    /// `ν₁ > ν₂`: least modes vary along `x₁`.
    Long,
    /// `ν₁ = ν₂`: both axes.
    Square,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueInfo {
    pub lambda1: f64,
    pub case: TorusCase,
    /// Wavevectors `j` with `λ_j = λ₁`.
    pub j_set: Vec<(i64, i64)>,
}

impl EigenvalueInfo {
    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        self.j_set.contains(&(k1, k2))
    }
}

/// Classifies the torus and returns `λ₁` with its wavevector set.
pub fn analyze(geometry: &TorusGeometry) -> EigenvalueInfo {
    let (nu1, nu2) = (geometry.nu1(), geometry.nu2());
    if nu1 < nu2 {
        EigenvalueInfo {
            lambda1: 1.0 / (nu2 * nu2),
            case: TorusCase::Short,
            j_set: vec![(0, 1), (0, -1)],
        }
    } else if nu1 > nu2 {
        EigenvalueInfo {
            lambda1: 1.0 / (nu1 * nu1),
            case: TorusCase::Long,
            j_set: vec![(1, 0), (-1, 0)],
        }
    } else {
        EigenvalueInfo {
            lambda1: 1.0 / (nu1 * nu1),
            case: TorusCase::Square,
            j_set: vec![(0, 1), (0, -1), (1, 0), (-1, 0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    /// `A sin(x₁/ν₁ + α)`.
    Axis1,
    /// `A sin(x₂/ν₂ + α)`.
    Axis2,
    /// `A sin(x₁/ν + α) + B sin(x₂/ν + β)` on a square torus.
    SquarePair,
}

/// A sinusoidal state together with its fixed amplitudes. The phases are
/// the free parameters of the orbit; they are used by [`make_eigenstate`]
/// and ignored by the distance routines, which minimise over them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSpec {
    geometry: TorusGeometry,
    kind: OrbitKind,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
}

impl OrbitSpec {
    pub fn new(geometry: TorusGeometry, kind: OrbitKind, a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidOrbit(format!(
                    "amplitude {name} = {v} must be nonnegative"
                )));
            }
        }
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidOrbit("phases must be finite".into()));
        }
        if kind == OrbitKind::SquarePair && !geometry.is_square() {
            return Err(Error::InvalidOrbit("square-pair orbits need nu1 = nu2".into()));
        }
        let b = if kind == OrbitKind::SquarePair { b } else { 0.0 };
        Ok(Self {
            geometry,
            kind,
            a,
            b,
            alpha,
            beta,
        })
    }

    pub fn axis1(geometry: TorusGeometry, a: f64, alpha: f64) -> Result<Self> {
        Self::new(geometry, OrbitKind::Axis1, a, 0.0, alpha, 0.0)
    }

    pub fn axis2(geometry: TorusGeometry, a: f64, alpha: f64) -> Result<Self> {
        Self::new(geometry, OrbitKind::Axis2, a, 0.0, alpha, 0.0)
    }

    pub fn square_pair(geometry: TorusGeometry, a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(geometry, OrbitKind::SquarePair, a, b, alpha, beta)
    }

    /// The least-eigenvalue orbit of the geometry (`b` only used when square).
    pub fn least(geometry: TorusGeometry, a: f64, b: f64) -> Result<Self> {
        match analyze(&geometry).case {
            TorusCase::Short => Self::axis2(geometry, a, 0.0),
            TorusCase::Long => Self::axis1(geometry, a, 0.0),
            TorusCase::Square => Self::square_pair(geometry, a, b, 0.0, 0.0),
        }
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_phases(&self, alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, ..*self }
    }

    pub fn with_geometry(&self, geometry: TorusGeometry) -> Result<Self> {
        Self::new(geometry, self.kind, self.a, self.b, self.alpha, self.beta)
    }

    /// `𝒱_{B,A}` for a square pair; unchanged otherwise.
    pub fn swapped(&self) -> Self {
        match self.kind {
            OrbitKind::SquarePair => Self {
                a: self.b,
                b: self.a,
                alpha: self.beta,
                beta: self.alpha,
                ..*self
            },
            _ => *self,
        }
    }

    /// Whether the orbit lies in the least eigenspace of its geometry.
    pub fn is_least(&self) -> bool {
        matches!(
            (analyze(&self.geometry).case, self.kind),
            (TorusCase::Short, OrbitKind::Axis2)
                | (TorusCase::Long, OrbitKind::Axis1)
                | (TorusCase::Square, OrbitKind::SquarePair)
        )
    }

    /// `‖v‖²_{L²}` of any orbit member.
    pub fn l2_norm_sq(&self) -> f64 {
        0.5 * self.geometry.area() * (self.a * self.a + self.b * self.b)
    }
}

/// Per-axis `sin(x/ν)` and `cos(x/ν)` tables.
struct Trig {
    s1: Vec<f64>,
    c1: Vec<f64>,
    s2: Vec<f64>,
    c2: Vec<f64>,
}

impl Trig {
    fn new(g: &TorusGeometry) -> Self {
        let (s1, c1) = (0..g.nx()).map(|i| (g.x1(i) / g.nu1()).sin_cos()).unzip();
        let (s2, c2) = (0..g.ny()).map(|j| (g.x2(j) / g.nu2()).sin_cos()).unzip();
        Self { s1, c1, s2, c2 }
    }

    /// Row profile `A sin(x₁/ν₁ + α)` and column profile `B sin(x₂/ν₂ + β)`.
    fn profiles(&self, spec: &OrbitSpec, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
        let axis = |s: &[f64], c: &[f64], amp: f64, ph: f64| -> Vec<f64> {
            let (sp, cp) = ph.sin_cos();
            s.iter().zip(c).map(|(s, c)| amp * (s * cp + c * sp)).collect()
        };
        let zeros1 = vec![0.0; self.s1.len()];
        let zeros2 = vec![0.0; self.s2.len()];
        match spec.kind {
            OrbitKind::Axis1 => (axis(&self.s1, &self.c1, spec.a, alpha), zeros2),
            OrbitKind::Axis2 => (zeros1, axis(&self.s2, &self.c2, spec.a, alpha)),
            OrbitKind::SquarePair => (
                axis(&self.s1, &self.c1, spec.a, alpha),
                axis(&self.s2, &self.c2, spec.b, beta),
            ),
        }
    }
}

/// Samples the orbit member with the phases stored in `spec`.
pub fn make_eigenstate(spec: &OrbitSpec) -> GridField {
    let g = spec.geometry;
    let (row, col) = Trig::new(&g).profiles(spec, spec.alpha, spec.beta);
    let mut values = Vec::with_capacity(g.cells());
    for c in &col {
        values.extend(row.iter().map(|r| r + c));
    }
    GridField::from_raw(g, values)
}

/// Splits `f` into its least-eigenspace component and the remainder.
pub fn project_least(f: &GridField, info: &EigenvalueInfo) -> Result<(GridField, GridField)> {
    project_least_with(&SpectralOps::new(*f.geometry()), f, info)
}

pub fn project_least_with(ops: &SpectralOps, f: &GridField, info: &EigenvalueInfo) -> Result<(GridField, GridField)> {
    let spec = ops.forward(f)?;
    let mut kept = crate::field::SpectralField::zeros(*f.geometry());
    for &(k1, k2) in &info.j_set {
        if let Some(idx) = spec.index_of(k1, k2) {
            kept.coeffs_mut()[idx] = spec.coeffs()[idx];
        }
    }
    let bar = ops.inverse(&kept)?;
    let tilde = f.sub(&bar)?;
    Ok((bar, tilde))
}

/// How an orbit distance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    ClosedForm,
    PhaseSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitDistance {
    pub distance: f64,
    /// Minimising phases in `[0, 2π)` (`beta` is zero for single-axis orbits).
    pub alpha: f64,
    pub beta: f64,
    pub method: DistanceMethod,
}

/// `min over phases of ‖ω − v‖_{Lᵖ}` over the orbit of `spec`.
///
/// For `p = 2` this uses the closed form through the least-mode Fourier
/// coefficients; otherwise it runs the phase search.
pub fn orbit_distance(omega: &GridField, spec: &OrbitSpec, p: f64) -> Result<OrbitDistance> {
    check_exponent(p)?;
    if p == 2.0 {
        orbit_distance_l2(omega, spec)
    } else {
        orbit_distance_search(omega, spec, p)
    }
}

/// Closed-form `L²` distance to the orbit.
pub fn orbit_distance_l2(omega: &GridField, spec: &OrbitSpec) -> Result<OrbitDistance> {
    check_grid(omega, spec)?;
    let g = spec.geometry;
    let t = Trig::new(&g);
    let (nx, ny) = (g.nx(), g.ny());
    let v = omega.values();
    let (mut s1, mut c1, mut s2, mut c2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            let w = v[j * nx + i];
            s1 += w * t.s1[i];
            c1 += w * t.c1[i];
            s2 += w * t.s2[j];
            c2 += w * t.c2[j];
        }
    }
    let da = g.cell_area();
    // ⟨ω, A sin(θ + α)⟩ = A (s cos α + c sin α) is maximised at α = atan2(c, s).
    let best = |s: f64, c: f64| {
        if s == 0.0 && c == 0.0 {
            0.0
        } else {
            wrap_phase(c.atan2(s))
        }
    };
    let (alpha, beta) = match spec.kind {
        OrbitKind::Axis1 => (best(s1, c1), 0.0),
        OrbitKind::Axis2 => (best(s2, c2), 0.0),
        OrbitKind::SquarePair => (best(s1, c1), best(s2, c2)),
    };
    // Expanding ‖ω − v‖² loses digits near the orbit, so the residual at the
    // optimal phases is summed directly.
    let (row, col) = t.profiles(spec, alpha, beta);
    let mut d2 = 0.0;
    for (j, c) in col.iter().enumerate() {
        d2 += v[j * nx..(j + 1) * nx]
            .iter()
            .zip(&row)
            .map(|(w, r)| (w - r - c).powi(2))
            .sum::<f64>();
    }
    Ok(OrbitDistance {
        distance: (d2 * da).sqrt(),
        alpha,
        beta,
        method: DistanceMethod::ClosedForm,
    })
}

/// Orbit distance by coarse scan plus golden-section refinement, any `p > 1`.
pub fn orbit_distance_search(omega: &GridField, spec: &OrbitSpec, p: f64) -> Result<OrbitDistance> {
    orbit_distance_search_with(omega, spec, p, Execution::default())
}

pub fn orbit_distance_search_with(
    omega: &GridField,
    spec: &OrbitSpec,
    p: f64,
    exec: Execution,
) -> Result<OrbitDistance> {
    check_exponent(p)?;
    check_grid(omega, spec)?;
    let g = spec.geometry;
    let trig = Trig::new(&g);
    let v = omega.values();
    let nx = g.nx();
    let da = g.cell_area();
    let objective = |alpha: f64, beta: f64| -> f64 {
        let (row, col) = trig.profiles(spec, alpha, beta);
        let mut s = 0.0;
        for (j, c) in col.iter().enumerate() {
            let line = &v[j * nx..(j + 1) * nx];
            s += line.iter().zip(&row).map(|(w, r)| abs_pow(w - r - c, p)).sum::<f64>();
        }
        s * da
    };
    let to_norm = |s: f64| s.max(0.0).powf(1.0 / p);
    Ok(match spec.kind {
        OrbitKind::SquarePair => {
            let ((a, b), f) = search::minimize_periodic_2d(objective, exec);
            OrbitDistance {
                distance: to_norm(f),
                alpha: a,
                beta: b,
                method: DistanceMethod::PhaseSearch,
            }
        }
        _ => {
            let (a, f) = search::minimize_periodic_1d(|x| objective(x, 0.0), exec);
            OrbitDistance {
                distance: to_norm(f),
                alpha: a,
                beta: 0.0,
                method: DistanceMethod::PhaseSearch,
            }
        }
    })
}

/// Which of the two square-torus orbits is nearer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearestOrbit {
    /// `𝒱_{A,B}`.
    Direct,
    /// `𝒱_{B,A}`.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionDistance {
    pub direct: OrbitDistance,
    /// Distance to `𝒱_{B,A}`; equals `direct` for single-axis orbits.
    pub swapped: OrbitDistance,
}

impl UnionDistance {
    pub fn distance(&self) -> f64 {
        self.direct.distance.min(self.swapped.distance)
    }

    pub fn nearest(&self) -> NearestOrbit {
        if self.swapped.distance < self.direct.distance {
            NearestOrbit::Swapped
        } else {
            NearestOrbit::Direct
        }
    }
}

/// Distances to `𝒱_{A,B}` and `𝒱_{B,A}` (the maximiser set of the square-torus
/// rearrangement class is their union).
pub fn orbit_union_distance(omega: &GridField, spec: &OrbitSpec, p: f64) -> Result<UnionDistance> {
    let direct = orbit_distance(omega, spec, p)?;
    let swapped = if spec.kind == OrbitKind::SquarePair && spec.a != spec.b {
        orbit_distance(omega, &spec.swapped(), p)?
    } else {
        direct
    };
    Ok(UnionDistance { direct, swapped })
}

/// Solves `C + D = sum`, `C² + D² = sum_sq` for nonnegative amplitudes and
/// returns both assignments `(C, D)` and `(D, C)`.
pub fn identify_amplitudes(sum: f64, sum_sq: f64) -> Result<((f64, f64), (f64, f64))> {
    if !(sum.is_finite() && sum_sq.is_finite()) || sum < 0.0 || sum_sq < 0.0 {
        return Err(Error::NoAmplitudeSolution(format!(
            "inputs must be finite and nonnegative (sum = {sum}, sum_sq = {sum_sq})"
        )));
    }
    // C and D are the roots of t² − sum·t + (sum² − sum_sq)/2.
    let disc = 2.0 * sum_sq - sum * sum;
    let scale = sum_sq.max(sum * sum).max(f64::MIN_POSITIVE);
    if disc < -1e-12 * scale {
        return Err(Error::NoAmplitudeSolution(format!("negative discriminant {disc:e}")));
    }
    let root = disc.max(0.0).sqrt();
    let c = 0.5 * (sum + root);
    let d = 0.5 * (sum - root);
    if d < -1e-12 * scale.sqrt() {
        return Err(Error::NoAmplitudeSolution(format!(
            "roots {c} and {d} are not both nonnegative"
        )));
    }
    let d = d.max(0.0);
    Ok(((c, d), (d, c)))
}

/// `min ‖u − v‖_{Lᵖ}` over `u ∈ 𝒱` of `spec_a` and `v ∈ 𝒱` of `spec_b`.
///
/// Both orbits are invariant under simultaneous translation, so `u` is pinned
/// at zero phases and the search runs over the phases of `v`.
pub fn orbit_separation(spec_a: &OrbitSpec, spec_b: &OrbitSpec, p: f64) -> Result<f64> {
    check_exponent(p)?;
    for s in [spec_a, spec_b] {
        if s.kind != OrbitKind::SquarePair {
            return Err(Error::InvalidOrbit(
                "separation is defined for square-pair orbits".into(),
            ));
        }
    }
    if !spec_a.geometry.same_grid(&spec_b.geometry) {
        return Err(Error::GeometryMismatch);
    }
    let u = make_eigenstate(&spec_a.with_phases(0.0, 0.0));
    Ok(orbit_distance_search(&u, spec_b, p)?.distance)
}

fn check_grid(omega: &GridField, spec: &OrbitSpec) -> Result<()> {
    if omega.geometry().same_grid(&spec.geometry) {
        Ok(())
    } else {
        Err(Error::GeometryMismatch)
    }
}

/// Nonzero Fourier support of a field (wavevectors with `|c_k| > tol`).
pub fn spectral_support(ops: &SpectralOps, f: &GridField, tol: f64) -> Result<Vec<(i64, i64)>> {
    let s = ops.forward(f)?;
    let mut out: Vec<_> = s
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol)
        .map(|(i, _)| s.wavevector(i))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Phase of a least mode from its Fourier coefficient: for
/// `A sin(θ + α)` the `+1` coefficient is `A e^{iα}/(2i)`.
pub fn phase_from_coefficient(c: Complex64) -> f64 {
    wrap_phase((c * Complex64::new(0.0, 2.0)).arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{enstrophy, lp_norm};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn classification() {
        let i = analyze(&TorusGeometry::new(1.0, 2.0, 8, 8).unwrap());
        assert_eq!(i.case, TorusCase::Short);
        assert_eq!(i.lambda1, 0.25);
        assert_eq!(i.j_set, vec![(0, 1), (0, -1)]);
        let i = analyze(&TorusGeometry::new(2.0, 1.0, 8, 8).unwrap());
        assert_eq!(i.case, TorusCase::Long);
        assert_eq!(i.lambda1, 0.25);
        assert_eq!(i.j_set, vec![(1, 0), (-1, 0)]);
        let i = analyze(&TorusGeometry::square(1.0, 8, 8).unwrap());
        assert_eq!(i.case, TorusCase::Square);
        assert_eq!(i.lambda1, 1.0);
        assert_eq!(i.j_set.len(), 4);
    }

    #[test]
    fn eigenstate_examples() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let f = make_eigenstate(&OrbitSpec::axis2(g, 1.0, 0.0).unwrap());
        let expect = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin());
        assert!(f.sub(&expect).unwrap().max_abs() < 1e-15);

        let sq = TorusGeometry::square(1.0, 16, 16).unwrap();
        let z = make_eigenstate(&OrbitSpec::square_pair(sq, 0.0, 0.0, 0.4, 0.1).unwrap());
        assert_eq!(z.max_abs(), 0.0);

        let f = make_eigenstate(&OrbitSpec::square_pair(sq, 2.0, 1.0, 0.3, -1.1).unwrap());
        let support = spectral_support(&SpectralOps::new(sq), &f, 1e-12).unwrap();
        assert_eq!(support, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);

        assert!(OrbitSpec::square_pair(g, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(OrbitSpec::axis2(g, -1.0, 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let info = analyze(&g);
        let f = GridField::from_fn(g, |_, x2| 0.3 * (x2 / 2.0).sin() - 1.2 * (x2 / 2.0).cos());
        let (bar, tilde) = project_least(&f, &info).unwrap();
        assert!(bar.sub(&f).unwrap().max_abs() < 1e-14);
        assert!(tilde.max_abs() < 1e-14);

        let f = GridField::from_fn(g, |_, x2| x2.sin());
        let (bar, tilde) = project_least(&f, &info).unwrap();
        assert!(bar.max_abs() < 1e-14);
        assert!(tilde.sub(&f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn distance_to_member_is_zero() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let spec = OrbitSpec::axis2(g, 1.5, 0.0).unwrap();
        let w = make_eigenstate(&spec.with_phases(1.234, 0.0));
        let d = orbit_distance(&w, &spec, 2.0).unwrap();
        assert!(d.distance < 1e-6);
        assert!((d.alpha - 1.234).abs() < 1e-10);
        let d = orbit_distance(&w, &spec, 4.0).unwrap();
        assert!(d.distance < 1e-6);
        assert!((d.alpha - 1.234).abs() < 1e-6);
    }

    #[test]
    fn orthogonal_perturbation_distance() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let spec = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
        let w = GridField::from_fn(g, |_, x2| (x2 / 2.0).sin() + 0.1 * x2.sin());
        let expect = 0.1 * (g.area() / 2.0).sqrt();
        let closed = orbit_distance(&w, &spec, 2.0).unwrap();
        assert_eq!(closed.method, DistanceMethod::ClosedForm);
        assert!((closed.distance - expect).abs() < 1e-12);
        let searched = orbit_distance_search(&w, &spec, 2.0).unwrap();
        assert!((searched.distance - closed.distance).abs() < 1e-8);
    }

    #[test]
    fn p4_search_matches_dense_scan() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let spec = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
        let w = GridField::from_fn(g, |x1, x2| {
            (x2 / 2.0 + 0.7).sin() + 0.2 * (x1 + x2).cos() + 0.1 * (x2 / 2.0).cos()
        });
        let d = orbit_distance(&w, &spec, 4.0).unwrap();
        let brute = (0..10_000)
            .map(|i| {
                let a = TAU * i as f64 / 10_000.0;
                let v = make_eigenstate(&spec.with_phases(a, 0.0));
                lp_norm(&w.sub(&v).unwrap(), 4.0).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d.distance <= brute + 1e-12);
        assert!((d.distance - brute).abs() < 1e-6);
    }

    #[test]
    fn square_union_distance() {
        let g = TorusGeometry::square(1.0, 32, 32).unwrap();
        let spec = OrbitSpec::square_pair(g, 2.0, 1.0, 0.0, 0.0).unwrap();
        let w = make_eigenstate(&spec.swapped().with_phases(0.5, 2.5));
        let u = orbit_union_distance(&w, &spec, 2.0).unwrap();
        assert_eq!(u.nearest(), NearestOrbit::Swapped);
        assert!(u.distance() < 1e-6);
        assert!(u.direct.distance > 1.0);
    }

    #[test]
    fn amplitudes() {
        let ((c, d), (d2, c2)) = identify_amplitudes(4.0, 10.0).unwrap();
        assert!((c - 3.0).abs() < 1e-14 && (d - 1.0).abs() < 1e-14);
        assert_eq!((c, d), (c2, d2));
        let a = 1.7;
        let ((c, d), _) = identify_amplitudes(2.0 * a, 2.0 * a * a).unwrap();
        assert!((c - a).abs() < 1e-7 && (d - a).abs() < 1e-7);
        assert!(identify_amplitudes(1.0, 5.0).is_err());
        assert!(identify_amplitudes(4.0, 7.0).is_err());
    }

    #[test]
    fn separation_cases() {
        let g = TorusGeometry::square(1.0, 32, 32).unwrap();
        let ab = OrbitSpec::square_pair(g, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(orbit_separation(&ab, &ab.swapped(), 2.0).unwrap() < 1e-6);

        let a = OrbitSpec::square_pair(g, 1.0, 0.0, 0.0, 0.0).unwrap();
        let s = orbit_separation(&a, &a.swapped(), 2.0).unwrap();
        assert!((s - 2.0 * PI).abs() < 1e-6);

        let rect = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let x = OrbitSpec::axis2(rect, 1.0, 0.0).unwrap();
        assert!(orbit_separation(&x, &x, 2.0).is_err());
    }

    #[test]
    fn projection_parseval() {
        let g = TorusGeometry::square(1.0, 16, 16).unwrap();
        let info = analyze(&g);
        let mut f = GridField::from_fn(g, |x1, x2| {
            (x1 * 3.0).sin() + (x1 + 0.2).cos() * (2.0 * x2).sin() + 0.5 * (x2 + 1.0).sin() + (x1 * x2 / 7.0).cos()
        });
        f.remove_mean();
        let (bar, tilde) = project_least(&f, &info).unwrap();
        let total = enstrophy(&f);
        assert!((enstrophy(&bar) + enstrophy(&tilde) - total).abs() < 1e-10 * total);
    }

    #[test]
    fn phase_of_coefficient() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let f = make_eigenstate(&OrbitSpec::axis2(g, 2.0, 2.2).unwrap());
        let c = SpectralOps::new(g).forward(&f).unwrap().coeff(0, 1).unwrap();
        assert!((phase_from_coefficient(c) - 2.2).abs() < 1e-12);
    }
}
