//! Discrete rearrangement classes: all permutations of a generator's cell
//! values. Provides the monotone (Hardy–Littlewood) pairing, the convex
//! combinations of the weak closure, and the Burton energy ascent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{energy_with, enstrophy, ValueDistribution};
use crate::eigenmodes::{
    analyze, make_eigenstate, orbit_union_distance, project_least_with, EigenvalueInfo, NearestOrbit, OrbitKind,
    OrbitSpec,
};
use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::TorusGeometry;
use crate::spectral::SpectralOps;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 500;
/// Membership tolerance relative to the value range.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// Mean-zero tolerance for generators, relative to the value range.
const MEAN_TOL: f64 = 1e-10;
/// A generator counts as a least eigenstate when its residual off the least
/// eigenspace is below this fraction of its norm.
const EIGENSTATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementClass {
    distribution: ValueDistribution,
    geometry: TorusGeometry,
    origin: Option<OrbitSpec>,
    least_generated: bool,
}

impl RearrangementClass {
    /// The class of a sampled eigenstate profile.
    pub fn from_eigenstate(spec: &OrbitSpec) -> Result<Self> {
        let generator = make_eigenstate(spec);
        let mut class = Self::from_field(&generator)?;
        class.origin = Some(*spec);
        class.least_generated = spec.is_least();
        Ok(class)
    }

    /// The class of an arbitrary mean-zero field.
    pub fn from_field(generator: &GridField) -> Result<Self> {
        let distribution = ValueDistribution::of(generator);
        let sum: f64 = distribution.sorted_values().iter().sum();
        let range = distribution.range();
        if sum.abs() > MEAN_TOL * range.max(f64::MIN_POSITIVE) * distribution.len() as f64 {
            return Err(Error::InvalidArgument(format!(
                "generator must have zero mean (cell sum {sum:e})"
            )));
        }
        let geometry = *generator.geometry();
        let least_generated = {
            let ops = SpectralOps::new(geometry);
            let (_, tilde) = project_least_with(&ops, generator, &analyze(&geometry))?;
            let norm = enstrophy(generator).sqrt();
            enstrophy(&tilde).sqrt() <= EIGENSTATE_TOL * norm
        };
        Ok(Self {
            distribution,
            geometry,
            origin: None,
            least_generated,
        })
    }

    pub fn distribution(&self) -> &ValueDistribution {
        &self.distribution
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn origin(&self) -> Option<&OrbitSpec> {
        self.origin.as_ref()
    }

    /// Enstrophy shared by every member.
    pub fn enstrophy(&self) -> f64 {
        0.5 * self.distribution.cell_area() * self.distribution.sorted_values().iter().map(|v| v * v).sum::<f64>()
    }

    /// Deviation of `f`'s distribution from the class.
    pub fn membership_deviation(&self, f: &GridField) -> Result<f64> {
        if !f.geometry().same_grid(&self.geometry) {
            return Err(Error::GeometryMismatch);
        }
        ValueDistribution::of(f).max_deviation(&self.distribution)
    }

    pub fn contains(&self, f: &GridField) -> bool {
        self.membership_deviation(f)
            .map(|d| d <= MEMBERSHIP_TOL * self.distribution.range())
            .unwrap_or(false)
    }

    fn ensure_member(&self, f: &GridField) -> Result<()> {
        let deviation = self.membership_deviation(f)?;
        if deviation <= MEMBERSHIP_TOL * self.distribution.range() {
            Ok(())
        } else {
            Err(Error::NotInClass { deviation })
        }
    }

    /// A uniformly random member (seeded permutation of the class values).
    pub fn random_member(&self, seed: u64) -> GridField {
        let mut values = self.distribution.sorted_values().to_vec();
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        GridField::from_raw(self.geometry, values)
    }
}

/// The member maximising `∫ f g`: class values assigned in ascending order to
/// cells sorted by `g` ascending, ties broken by cell index.
pub fn max_rearrangement_against(class: &RearrangementClass, g: &GridField) -> Result<GridField> {
    if !g.geometry().same_grid(&class.geometry) {
        return Err(Error::GeometryMismatch);
    }
    let gv = g.values();
    let mut order: Vec<usize> = (0..gv.len()).collect();
    order.sort_unstable_by(|&a, &b| gv[a].total_cmp(&gv[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; gv.len()];
    for (&cell, &v) in order.iter().zip(class.distribution.sorted_values()) {
        out[cell] = v;
    }
    Ok(GridField::from_raw(class.geometry, out))
}

/// `θ f₁ + (1 − θ) f₂` for two class members; generally not itself a member.
pub fn convex_combination_distribution(
    class: &RearrangementClass,
    theta: f64,
    f1: &GridField,
    f2: &GridField,
) -> Result<GridField> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, 1]")));
    }
    class.ensure_member(f1)?;
    class.ensure_member(f2)?;
    if theta == 1.0 {
        return Ok(f1.clone());
    }
    if theta == 0.0 {
        return Ok(f2.clone());
    }
    f1.axpby(theta, f2, 1.0 - theta)
}

/// `sup E` over the class, `λ₁⁻¹ Z`, for classes generated by a least
/// eigenstate.
pub fn class_supremum(class: &RearrangementClass, info: &EigenvalueInfo) -> Result<f64> {
    if !class.least_generated {
        return Err(Error::NoClosedForm(
            "class generator is not in the least eigenspace".into(),
        ));
    }
    Ok(class.enstrophy() / info.lambda1)
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    /// Number of rearrangement steps taken.
    pub iterates: usize,
    /// `E(ω₀), E(ω₁), …`; one longer than `iterates`.
    pub energies: Vec<f64>,
    /// `L²` distance of each iterate to the class orbit (empty without an origin).
    pub orbit_distances: Vec<f64>,
    pub final_field: GridField,
    pub final_orbit_distance: Option<f64>,
    /// For square-pair origins: which of `𝒱_{A,B}`, `𝒱_{B,A}` the final field is near.
    pub nearest: Option<NearestOrbit>,
    pub converged: bool,
    /// Largest distribution deviation seen across iterates.
    pub max_distribution_deviation: f64,
}

impl IterationReport {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("energies is never empty")
    }

    /// Largest drop `E(ω_k) − E(ω_{k+1})` relative to `E(ω_k)` (zero when ascending).
    pub fn worst_relative_descent(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| if w[0] > 0.0 { (w[0] - w[1]) / w[0] } else { w[0] - w[1] })
            .fold(0.0, f64::max)
    }

    /// Per-step rows `(iter, E, delta_E, orbit_dist)` for the trace CSV.
    pub fn trace_rows(&self) -> Vec<(usize, f64, f64, f64)> {
        self.energies
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                let delta = if k == 0 { 0.0 } else { e - self.energies[k - 1] };
                let d = self.orbit_distances.get(k).copied().unwrap_or(f64::NAN);
                (k, e, delta, d)
            })
            .collect()
    }
}

/// Repeats `ω ← max_rearrangement_against(class, Kω)` until the relative
/// energy gain drops to `tol` or `max_iters` steps have been taken.
pub fn burton_iterate(
    class: &RearrangementClass,
    omega0: &GridField,
    max_iters: usize,
    tol: f64,
) -> Result<IterationReport> {
    burton_iterate_with(&SpectralOps::new(class.geometry), class, omega0, max_iters, tol)
}

pub fn burton_iterate_with(
    ops: &SpectralOps,
    class: &RearrangementClass,
    omega0: &GridField,
    max_iters: usize,
    tol: f64,
) -> Result<IterationReport> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if !ops.geometry().same_grid(&class.geometry) {
        return Err(Error::GeometryMismatch);
    }
    class.ensure_member(omega0)?;

    let distance = |w: &GridField| -> Result<Option<(f64, NearestOrbit)>> {
        match &class.origin {
            Some(spec) => {
                let u = orbit_union_distance(w, spec, 2.0)?;
                Ok(Some((u.distance(), u.nearest())))
            }
            None => Ok(None),
        }
    };
    let checked_energy = |w: &GridField, k: usize| -> Result<f64> {
        let e = energy_with(ops, w)?;
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::Numerical {
                time: k as f64,
                detail: format!("non-finite energy at iterate {k}"),
            })
        }
    };

    let mut omega = omega0.clone();
    let mut energies = vec![checked_energy(&omega, 0)?];
    let mut orbit_distances = Vec::new();
    let mut nearest = None;
    if let Some((d, n)) = distance(&omega)? {
        orbit_distances.push(d);
        nearest = Some(n);
    }
    let mut converged = false;
    let mut max_dev: f64 = 0.0;
    for k in 1..=max_iters {
        let psi = ops.apply_k(&omega)?;
        let next = max_rearrangement_against(class, &psi)?;
        max_dev = max_dev.max(class.membership_deviation(&next)?);
        let e = checked_energy(&next, k)?;
        let prev = *energies.last().unwrap();
        energies.push(e);
        if let Some((d, n)) = distance(&next)? {
            orbit_distances.push(d);
            nearest = Some(n);
        }
        omega = next;
        if e - prev <= tol * prev {
            converged = true;
            break;
        }
    }
    log::debug!(
        "burton: {} iterates, E = {:.12e}, converged = {converged}",
        energies.len() - 1,
        energies.last().unwrap()
    );
    Ok(IterationReport {
        iterates: energies.len() - 1,
        final_orbit_distance: orbit_distances.last().copied(),
        orbit_distances,
        energies,
        final_field: omega,
        nearest: class
            .origin
            .filter(|s| s.kind() == OrbitKind::SquarePair && s.a() != s.b())
            .and(nearest),
        converged,
        max_distribution_deviation: max_dev,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) const TOY_VALUES: [f64; 6] = [-2.5, -1.0, -0.5, 0.5, 1.2, 2.3];

    fn toy() -> (TorusGeometry, GridField) {
        let g = TorusGeometry::debug_grid(1.0, 2.0, 3, 2).unwrap();
        (g, GridField::new(g, TOY_VALUES.to_vec()).unwrap())
    }

    pub(crate) fn permutations(v: &[f64]) -> Vec<Vec<f64>> {
        if v.len() <= 1 {
            return vec![v.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..v.len() {
            let mut rest = v.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn constant_g_gives_index_order() {
        let (g, f) = toy();
        let class = RearrangementClass::from_field(&f).unwrap();
        let out = max_rearrangement_against(&class, &GridField::constant(g, 3.0)).unwrap();
        assert_eq!(out.values(), class.distribution().sorted_values());
    }

    #[test]
    fn generator_pairs_with_itself() {
        let g = TorusGeometry::new(1.0, 2.0, 16, 16).unwrap();
        let gen = make_eigenstate(&OrbitSpec::axis2(g, 1.0, 0.3).unwrap());
        let class = RearrangementClass::from_field(&gen).unwrap();
        assert_eq!(max_rearrangement_against(&class, &gen).unwrap(), gen);
    }

    #[test]
    fn pairing_matches_brute_force() {
        let (g, f) = toy();
        let class = RearrangementClass::from_field(&f).unwrap();
        let target = GridField::new(g, vec![0.3, -1.7, 2.2, 0.9, -0.4, 1.1]).unwrap();
        let best = permutations(&TOY_VALUES)
            .into_iter()
            .map(|p| GridField::new(g, p).unwrap().inner(&target).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let got = max_rearrangement_against(&class, &target).unwrap();
        assert!((got.inner(&target).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn burton_reaches_toy_maximum() {
        let (g, f) = toy();
        let class = RearrangementClass::from_field(&f).unwrap();
        let ops = SpectralOps::new(g);
        let perms = permutations(&TOY_VALUES);
        let best = perms
            .iter()
            .map(|p| energy_with(&ops, &GridField::new(g, p.clone()).unwrap()).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let report = burton_iterate_with(&ops, &class, &f, 50, 0.0).unwrap();
        assert!((report.final_energy() - best).abs() <= 1e-10 * best);
        // Arbitrary starts may stall at lower fixed points, but never descend.
        for p in perms.iter().step_by(37) {
            let start = GridField::new(g, p.clone()).unwrap();
            let r = burton_iterate_with(&ops, &class, &start, 50, 0.0).unwrap();
            assert!(r.final_energy() <= best * (1.0 + 1e-12));
            assert!(r.worst_relative_descent() <= 1e-12);
        }
    }

    #[test]
    fn eigenstate_is_fixed_point() {
        let g = TorusGeometry::new(1.0, 2.0, 32, 32).unwrap();
        let spec = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
        let class = RearrangementClass::from_eigenstate(&spec).unwrap();
        let report = burton_iterate(&class, &make_eigenstate(&spec), 10, DEFAULT_TOL).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterates, 1);
        assert!(report.final_orbit_distance.unwrap() < 1e-10);
    }

    #[test]
    fn supremum_examples() {
        let g = TorusGeometry::new(1.0, 2.0, 64, 64).unwrap();
        let info = analyze(&g);
        let class = RearrangementClass::from_eigenstate(&OrbitSpec::axis2(g, 1.0, 0.0).unwrap()).unwrap();
        assert!((class_supremum(&class, &info).unwrap() - 8.0 * PI * PI).abs() < 1e-10);
        let zero = RearrangementClass::from_eigenstate(&OrbitSpec::axis2(g, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(class_supremum(&zero, &info).unwrap(), 0.0);

        let sq = TorusGeometry::square(1.0, 64, 64).unwrap();
        let class =
            RearrangementClass::from_eigenstate(&OrbitSpec::square_pair(sq, 2.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((class_supremum(&class, &analyze(&sq)).unwrap() - 5.0 * PI * PI).abs() < 1e-10);

        let other = GridField::from_fn(g, |_, x2| x2.sin());
        let class = RearrangementClass::from_field(&other).unwrap();
        assert!(matches!(class_supremum(&class, &info), Err(Error::NoClosedForm(_))));
    }

    #[test]
    fn convex_combination_stays_below_supremum() {
        let g = TorusGeometry::new(1.0, 2.0, 64, 64).unwrap();
        let spec = OrbitSpec::axis2(g, 1.0, 0.0).unwrap();
        let class = RearrangementClass::from_eigenstate(&spec).unwrap();
        let f1 = make_eigenstate(&spec);
        let f2 = f1.shifted(0, 16);
        assert_eq!(convex_combination_distribution(&class, 0.0, &f1, &f2).unwrap(), f2);
        assert_eq!(convex_combination_distribution(&class, 1.0, &f1, &f2).unwrap(), f1);
        let mid = convex_combination_distribution(&class, 0.5, &f1, &f2).unwrap();
        let m = class_supremum(&class, &analyze(&g)).unwrap();
        assert!(energy_with(&SpectralOps::new(g), &mid).unwrap() <= m);
        assert!(!class.contains(&mid));
        let stranger = GridField::from_fn(g, |_, x2| 2.0 * (x2 / 2.0).sin());
        assert!(matches!(
            convex_combination_distribution(&class, 0.5, &f1, &stranger),
            Err(Error::NotInClass { .. })
        ));
    }

    #[test]
    fn zero_class_converges_immediately() {
        let g = TorusGeometry::square(1.0, 16, 16).unwrap();
        let spec = OrbitSpec::new(g, OrbitKind::SquarePair, 0.0, 0.0, 0.0, 0.0).unwrap();
        let class = RearrangementClass::from_eigenstate(&spec).unwrap();
        let r = burton_iterate(&class, &class.random_member(3), DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        assert!(r.converged);
        assert_eq!(r.final_energy(), 0.0);
    }

    #[test]
    fn rejects_non_members() {
        let (g, f) = toy();
        let class = RearrangementClass::from_field(&f).unwrap();
        let bad = GridField::new(g, vec![0.0; 6]).unwrap();
        assert!(burton_iterate(&class, &bad, 5, DEFAULT_TOL).is_err());
        assert!(burton_iterate(&class, &f, 0, DEFAULT_TOL).is_err());
        let shifted = GridField::new(g, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(RearrangementClass::from_field(&shifted).is_err());
    }

    #[test]
    fn random_member_is_seeded() {
        let (_, f) = toy();
        let class = RearrangementClass::from_field(&f).unwrap();
        assert_eq!(class.random_member(7), class.random_member(7));
        assert!(class.contains(&class.random_member(11)));
    }
}
