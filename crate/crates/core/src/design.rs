//! Design-point search: highest fidelity subject to a heralding-probability floor.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scheme::{self, TargetQubit};

pub const COARSE_STEPS: usize = 64;
pub const REFINE_STEPS: usize = 8;
pub const REFINE_ROUNDS: usize = 3;
/// Points along a target's one-parameter family.
pub const FAMILY_STEPS: usize = 2001;
/// Fidelities closer than this count as tied; the higher probability wins.
const FIDELITY_TIE: f64 = 1e-12;
const AMPLITUDE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignQuery {
    pub eta: f64,
    pub p_min: f64,
    pub target: Option<TargetQubit>,
    /// Upper end of the `|gamma|` search interval.
    pub gamma_max: f64,
}

impl DesignQuery {
    pub fn new(eta: f64, p_min: f64, target: Option<TargetQubit>) -> Result<Self> {
        let q = Self { eta, p_min, target, gamma_max: 2.0 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!("eta {} outside [0, 1]", self.eta)));
        }
        if !(self.p_min > 0.0 && self.p_min < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "probability floor {} outside (0, 1)",
                self.p_min
            )));
        }
        if !(self.gamma_max > 0.0 && self.gamma_max.is_finite()) {
            return Err(Error::InvalidArgument("gamma_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub gamma: Complex64,
    pub phi: f64,
    pub fidelity: f64,
    pub p_yn: f64,
}

impl DesignPoint {
    fn evaluate(eta: f64, gamma: Complex64, phi: f64) -> (f64, Option<Self>) {
        let p_yn = scheme::p_yn_analytic(eta, gamma, phi);
        let point = scheme::fidelity_analytic(eta, gamma, phi)
            .ok()
            .map(|fidelity| Self { gamma, phi, fidelity, p_yn });
        (p_yn, point)
    }

    fn beats(&self, other: &DesignPoint) -> bool {
        if self.fidelity > other.fidelity + FIDELITY_TIE {
            return true;
        }
        (self.fidelity - other.fidelity).abs() <= FIDELITY_TIE && self.p_yn > other.p_yn
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub best: DesignPoint,
    /// Incumbent after the coarse pass and after each refinement round.
    pub history: Vec<DesignPoint>,
    /// Largest probability seen over the searched set.
    pub max_p_yn: f64,
}

/// Keeps the best feasible point and the largest probability seen.
struct Incumbent {
    p_min: f64,
    best: Option<DesignPoint>,
    max_p: f64,
}

impl Incumbent {
    fn new(p_min: f64) -> Self {
        Self { p_min, best: None, max_p: 0.0 }
    }

    fn offer(&mut self, p: f64, point: Option<DesignPoint>) {
        self.max_p = self.max_p.max(p);
        let Some(point) = point else { return };
        if point.p_yn < self.p_min {
            return;
        }
        if self.best.as_ref().is_none_or(|b| point.beats(b)) {
            self.best = Some(point);
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Coarse 64x64 grid over `gamma in [0, gamma_max]`, `phi in [0, pi]`, then
/// three 8x8 zooms around the incumbent.
pub fn design_search(query: &DesignQuery) -> Result<DesignReport> {
    query.validate()?;
    if let Some(target) = query.target {
        return design_for_target(query, &target);
    }
    let eta = query.eta;
    let mut inc = Incumbent::new(query.p_min);
    for phi in linspace(0.0, PI, COARSE_STEPS) {
        for g in linspace(0.0, query.gamma_max, COARSE_STEPS) {
            let (p, pt) = DesignPoint::evaluate(eta, Complex64::new(g, 0.0), phi);
            inc.offer(p, pt);
        }
    }
    let Some(mut best) = inc.best else {
        return Err(Error::Infeasible { p_min: query.p_min, max_probability: inc.max_p });
    };
    let mut history = vec![best];
    let mut half_g = query.gamma_max / (COARSE_STEPS - 1) as f64;
    let mut half_phi = PI / (COARSE_STEPS - 1) as f64;
    for _ in 0..REFINE_ROUNDS {
        let g_lo = (best.gamma.re - half_g).max(0.0);
        let g_hi = (best.gamma.re + half_g).min(query.gamma_max);
        let p_lo = (best.phi - half_phi).max(0.0);
        let p_hi = (best.phi + half_phi).min(PI);
        for phi in linspace(p_lo, p_hi, REFINE_STEPS) {
            for g in linspace(g_lo, g_hi, REFINE_STEPS) {
                let (p, pt) = DesignPoint::evaluate(eta, Complex64::new(g, 0.0), phi);
                inc.offer(p, pt);
            }
        }
        best = inc.best.expect("incumbent only improves");
        history.push(best);
        half_g = (g_hi - g_lo) / (REFINE_STEPS - 1) as f64;
        half_phi = (p_hi - p_lo) / (REFINE_STEPS - 1) as f64;
    }
    Ok(DesignReport { best, history, max_p_yn: inc.max_p })
}

/// `(gamma, phi)` producing `target` at parameter `t = |gamma|`.
///
/// The ideal output is proportional to `sin(phi)|0> + gamma cos(phi)|1>`, so
/// `a1/a0 = gamma cot(phi)`.
pub fn family_point(target: &TargetQubit, t: f64) -> (Complex64, f64) {
    let (a0, a1) = (target.a0, target.a1);
    if a1.norm() <= AMPLITUDE_FLOOR {
        (Complex64::new(t, 0.0), FRAC_PI_2)
    } else if a0.norm() <= AMPLITUDE_FLOOR {
        (a1 / a1.norm() * t, 0.0)
    } else {
        let ratio = a1 / a0;
        (ratio / ratio.norm() * t, (t / ratio.norm()).atan())
    }
}

/// Scans the one-parameter family of settings whose ideal output is `target`.
pub fn design_for_target(query: &DesignQuery, target: &TargetQubit) -> Result<DesignReport> {
    query.validate()?;
    let mut inc = Incumbent::new(query.p_min);
    for t in linspace(0.0, query.gamma_max, FAMILY_STEPS) {
        let (gamma, phi) = family_point(target, t);
        let (p, pt) = DesignPoint::evaluate(query.eta, gamma, phi);
        inc.offer(p, pt);
    }
    match inc.best {
        Some(best) => Ok(DesignReport { best, history: vec![best], max_p_yn: inc.max_p }),
        None => Err(Error::Infeasible { p_min: query.p_min, max_probability: inc.max_p }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_high_fidelity_at_twenty_percent() {
        let report = design_search(&DesignQuery::new(0.8, 0.195, None).unwrap()).unwrap();
        assert!(report.best.p_yn >= 0.195);
        assert!(report.best.fidelity >= 0.9);
    }

    #[test]
    fn refinement_is_monotone() {
        for (eta, p_min) in [(0.8, 0.195), (0.5, 0.1), (0.9, 0.3)] {
            let report = design_search(&DesignQuery::new(eta, p_min, None).unwrap()).unwrap();
            assert_eq!(report.history.len(), REFINE_ROUNDS + 1);
            for w in report.history.windows(2) {
                assert!(!w[0].beats(&w[1]) || w[0] == w[1], "{w:?}");
                assert!(w[1].fidelity >= w[0].fidelity - FIDELITY_TIE);
            }
        }
    }

    #[test]
    fn vacuum_target_with_perfect_detectors() {
        let target = TargetQubit::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let report = design_search(&DesignQuery::new(1.0, 0.4, Some(target)).unwrap()).unwrap();
        assert_abs_diff_eq!(report.best.phi, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(report.best.fidelity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.best.gamma.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(report.best.p_yn, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn family_reproduces_target() {
        let target = TargetQubit::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        for t in [0.1, 0.7, 1.9] {
            let (gamma, phi) = family_point(&target, t);
            let ideal = scheme::target_state(gamma, phi).unwrap();
            let overlap = (ideal.a0.conj() * target.a0 + ideal.a1.conj() * target.a1).norm();
            assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn infeasible_floor() {
        let err = design_search(&DesignQuery::new(0.8, 0.99, None).unwrap()).unwrap_err();
        let Error::Infeasible { max_probability, .. } = err else {
            panic!("expected infeasible, got {err:?}");
        };
        assert!(max_probability < 0.99);
    }

    #[test]
    fn query_validation() {
        assert!(DesignQuery::new(0.8, 0.0, None).is_err());
        assert!(DesignQuery::new(0.8, 1.0, None).is_err());
        assert!(DesignQuery::new(1.3, 0.2, None).is_err());
    }
}
