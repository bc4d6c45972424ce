//! Phase minimisation: a uniform coarse scan followed by golden-section
//! refinement of the best bracket.
//!
//! The protocol is fixed so that results are reproducible: `COARSE_SAMPLES`
//! points per periodic axis, then golden-section search on `[x* − h, x* + h]`
//! down to `PHASE_TOL`. Ties on the coarse grid go to the smallest phase.

use std::f64::consts::TAU;

use crate::par::{self, Execution};

pub const COARSE_SAMPLES: usize = 128;
pub const PHASE_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 60;

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // The interior probes can beat the midpoint on a flat valley.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Minimises a `2π`-periodic function of one phase.
pub fn minimize_periodic_1d(f: impl Fn(f64) -> f64 + Sync + Send, exec: Execution) -> (f64, f64) {
    let h = TAU / COARSE_SAMPLES as f64;
    let values = par::map_indices(exec, COARSE_SAMPLES, |i| f(h * i as f64));
    let (best, fbest) = argmin(&values);
    let x0 = h * best as f64;
    let (x, fx) = golden_section(&f, x0 - h, x0 + h, PHASE_TOL);
    if fx <= fbest {
        (wrap_phase(x), fx)
    } else {
        (x0, fbest)
    }
}

/// Minimises a function periodic in both phases: coarse `128 × 128` scan,
/// then alternating golden-section refinement along each axis.
pub fn minimize_periodic_2d(f: impl Fn(f64, f64) -> f64 + Sync + Send, exec: Execution) -> ((f64, f64), f64) {
    let n = COARSE_SAMPLES;
    let h = TAU / n as f64;
    let values = par::map_indices(exec, n * n, |idx| {
        let (ia, ib) = (idx / n, idx % n);
        f(h * ia as f64, h * ib as f64)
    });
    let (best, fbest) = argmin(&values);
    let (mut a, mut b) = (h * (best / n) as f64, h * (best % n) as f64);
    let mut fx = fbest;
    for _ in 0..MAX_SWEEPS {
        let (na, fa) = golden_section(|x| f(x, b), a - h, a + h, PHASE_TOL);
        let (nb, fb) = golden_section(|y| f(na, y), b - h, b + h, PHASE_TOL);
        let moved = (na - a).abs().max((nb - b).abs());
        let improved = fa.min(fb) < fx;
        if fb <= fx {
            a = na;
            b = nb;
            fx = fb;
        } else if fa <= fx {
            a = na;
            fx = fa;
        }
        if !improved || moved < PHASE_TOL {
            break;
        }
    }
    ((wrap_phase(a), wrap_phase(b)), fx)
}

fn argmin(values: &[f64]) -> (usize, f64) {
    values.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cosine_minimum() {
        let (x, fx) = minimize_periodic_1d(|a| -(a - 1.234).cos(), Execution::Sequential);
        assert!((x - 1.234).abs() < 1e-6);
        assert!((fx + 1.0).abs() < 1e-14);
    }

    #[test]
    fn wraps_negative_minimum() {
        let (x, _) = minimize_periodic_1d(|a| -(a + 0.5).cos(), Execution::Sequential);
        assert!((x - (TAU - 0.5)).abs() < 1e-6);
    }

    #[test]
    fn finds_2d_minimum() {
        let f = |a: f64, b: f64| -(a - 2.0).cos() - 0.5 * (b - 5.0).cos() - 0.2 * (a - b + 3.0).cos();
        let ((a, b), fx) = minimize_periodic_2d(f, Execution::default());
        // Dense brute force for comparison.
        let n = 2000;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                best = best.min(f(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64));
            }
        }
        assert!(fx <= best + 1e-9, "{fx} vs {best}");
        assert!((f(a, b) - fx).abs() < 1e-15);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, _) = golden_section(|x| (x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
    }
}
