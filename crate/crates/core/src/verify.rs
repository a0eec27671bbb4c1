//! Closed-form vs brute-force reconciliation over a parameter grid.
//!
//! Each [`Check`] keeps its worst deviation and where it occurred, so a
//! failing run points at the offending parameters.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::detection;
use crate::error::Result;
use crate::scheme::{self, Herald, NumericCircuit, SchemeParams};

/// Tolerances for the reconciliation checks.
pub mod tol {
    pub const ORACLE: f64 = 1e-8;
    pub const COEFFICIENT_SUM: f64 = 1e-12;
    pub const COMPLETENESS: f64 = 1e-9;
    pub const HERMITIAN: f64 = 1e-10;
    pub const PSD: f64 = 1e-8;
    pub const TRACE: f64 = 1e-9;
    pub const SUPPORT: f64 = 1e-10;
    pub const BOUNDARY_ANALYTIC: f64 = 1e-10;
    pub const BOUNDARY_NUMERIC: f64 = 1e-8;
    pub const SMALL_GAMMA: f64 = 1e-6;
}

/// Gamma used to probe the `gamma -> 0` fidelity limit.
pub const SMALL_GAMMA: f64 = 1e-4;
/// Efficiency offset applied to the numeric arm by the fault-injection self-test.
pub const FAULT_ETA_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub etas: Vec<f64>,
    pub grid: usize,
    /// Perturb eta in the numeric arm; the run must then fail.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { etas: vec![0.4, 0.8, 1.0], grid: 12, inject_fault: false }
    }
}

impl VerifyConfig {
    pub fn gammas(&self) -> Vec<f64> {
        let n = self.grid;
        if n == 1 {
            return vec![0.05];
        }
        (0..n).map(|i| 0.05 + 1.95 * i as f64 / (n - 1) as f64).collect()
    }

    /// Interior points of `(0, pi)`.
    pub fn phis(&self) -> Vec<f64> {
        let n = self.grid;
        (1..=n).map(|j| PI * j as f64 / (n + 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub worst: f64,
    /// Parameters of the worst point.
    pub at: Option<(f64, f64, f64)>,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, worst: 0.0, at: None }
    }

    fn record(&mut self, deviation: f64, at: (f64, f64, f64)) {
        // NaN counts as a failure.
        if !(deviation <= self.worst) {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
            self.at = Some(at);
        }
    }

    fn merge(&mut self, other: &Check) {
        if let Some(at) = other.at {
            self.record(other.worst, at);
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<34} worst {:>10.3e}  tol {:>8.1e}",
            if self.passed() { "ok" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )?;
        if let (false, Some((eta, g, phi))) = (self.passed(), self.at) {
            write!(f, "  at eta={eta} gamma={g} phi={phi}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// Per efficiency, whether the no-click element is exactly the vacuum projector.
    pub vacuum_projector: Vec<(f64, bool)>,
    pub points: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

const CHECK_NAMES: [(&str, f64); 15] = [
    ("oracle |dp|", tol::ORACLE),
    ("oracle |drho|_max", tol::ORACLE),
    ("oracle |dF|", tol::ORACLE),
    ("d00 + d11 - P_YN", tol::COEFFICIENT_SUM),
    ("outcome completeness", tol::COMPLETENESS),
    ("conditional Hermiticity", tol::HERMITIAN),
    ("conditional negativity", tol::PSD),
    ("conditional trace", tol::TRACE),
    ("support above level 1", tol::SUPPORT),
    ("NY vs YN(phi + pi/2)", tol::ORACLE),
    ("boundary P(gamma=0) analytic", tol::BOUNDARY_ANALYTIC),
    ("boundary P(phi=pi/2, 0) analytic", tol::BOUNDARY_ANALYTIC),
    ("boundary F(phi=pi/2) analytic", tol::BOUNDARY_ANALYTIC),
    ("boundary identities numeric", tol::BOUNDARY_NUMERIC),
    ("F(gamma=1e-4) -> 1", tol::SMALL_GAMMA),
];

fn empty_checks() -> Vec<Check> {
    CHECK_NAMES.iter().map(|&(n, t)| Check::new(n, t)).collect()
}

fn numeric_eta(eta: f64, inject_fault: bool) -> f64 {
    match (inject_fault, eta + FAULT_ETA_OFFSET <= 1.0) {
        (false, _) => eta,
        (true, true) => eta + FAULT_ETA_OFFSET,
        (true, false) => eta - FAULT_ETA_OFFSET,
    }
}

fn grid_point(eta: f64, gamma: f64, phi: f64, inject_fault: bool) -> Result<Vec<Check>> {
    let mut checks = empty_checks();
    let at = (eta, gamma, phi);
    let g = Complex64::new(gamma, 0.0);

    let p_ana = scheme::p_yn_analytic(eta, g, phi);
    let k = scheme::coefficients_analytic(eta, g, phi);
    let rho_ana = scheme::rho_yn_analytic(eta, g, phi)?;
    let f_ana = scheme::fidelity_analytic(eta, g, phi)?;

    let eta_num = numeric_eta(eta, inject_fault);
    let circuit = NumericCircuit::build(&SchemeParams::real(eta_num, gamma, phi)?)?;
    let yn = circuit.evaluate(Herald::Yn, g, phi)?;
    checks[0].record((yn.p_yn - p_ana).abs(), at);
    checks[1].record(yn.rho.max_abs_diff(&rho_ana)?, at);
    checks[2].record((yn.fidelity - f_ana).abs(), at);
    checks[3].record((k.trace() - p_ana).abs(), at);

    let total: f64 = circuit.outcome_distribution()?.values().sum();
    checks[4].record((total - 1.0).abs(), at);

    let mut support = yn.diagnostics.higher_level_population;
    for herald in [Herald::Yn, Herald::Ny] {
        let full = circuit.conditional_full(herald)?;
        let state = &full.state;
        checks[5].record(state.hermiticity_defect(), at);
        checks[6].record((-state.min_eigenvalue()).max(0.0), at);
        checks[7].record((state.trace().re - 1.0).abs().max(state.trace().im.abs()), at);
        support = support.max((2..state.dim()).map(|n| state.get(n, n).re).sum());
    }
    checks[8].record(support, at);

    let ny = circuit.evaluate(Herald::Ny, g, phi)?;
    let shifted = NumericCircuit::build(&SchemeParams::real(eta_num, gamma, phi + FRAC_PI_2)?)?
        .evaluate(Herald::Yn, g, phi + FRAC_PI_2)?;
    let ny_dev = (ny.p_yn - shifted.p_yn)
        .abs()
        .max(ny.rho.max_abs_diff(&shifted.rho)?)
        .max((ny.fidelity - shifted.fidelity).abs());
    checks[9].record(ny_dev, at);
    Ok(checks)
}

fn boundary_point(eta: f64, gamma: f64, phi: f64, inject_fault: bool) -> Result<Vec<Check>> {
    let mut checks = empty_checks();
    let at = (eta, gamma, phi);
    let g = Complex64::new(gamma, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let eta_num = numeric_eta(eta, inject_fault);
    let numeric_p = |gamma: f64, phi: f64| -> Result<f64> {
        NumericCircuit::build(&SchemeParams::real(eta_num, gamma, phi)?)?.probability(Herald::Yn)
    };

    // P(eta, 0, phi) = (eta/2) sin^2 phi
    let want = 0.5 * eta * phi.sin().powi(2);
    checks[10].record((scheme::p_yn_analytic(eta, zero, phi) - want).abs(), at);
    let mut numeric_dev = (numeric_p(0.0, phi)? - want).abs();

    // P(eta, gamma, pi/2) = (eta/2) e^{-eta g^2}, P(eta, gamma, 0) = (1 - e^{-eta g^2})(1 - eta/2)
    let decay = (-eta * gamma * gamma).exp();
    let want_quarter = 0.5 * eta * decay;
    let want_zero = (1.0 - decay) * (1.0 - 0.5 * eta);
    let dev = (scheme::p_yn_analytic(eta, g, FRAC_PI_2) - want_quarter)
        .abs()
        .max((scheme::p_yn_analytic(eta, g, 0.0) - want_zero).abs());
    checks[11].record(dev, at);
    numeric_dev = numeric_dev
        .max((numeric_p(gamma, FRAC_PI_2)? - want_quarter).abs())
        .max((numeric_p(gamma, 0.0)? - want_zero).abs());

    // F(eta, gamma, pi/2) = 1
    checks[12].record((scheme::fidelity_analytic(eta, g, FRAC_PI_2)? - 1.0).abs(), at);
    let quarter = scheme::run_numeric(&SchemeParams::real(eta_num, gamma, FRAC_PI_2)?, Herald::Yn)?;
    numeric_dev = numeric_dev.max((quarter.fidelity - 1.0).abs());
    checks[13].record(numeric_dev, at);

    let small = Complex64::new(SMALL_GAMMA, 0.0);
    checks[14].record((scheme::fidelity_analytic(eta, small, phi)? - 1.0).abs(), at);
    Ok(checks)
}

/// Runs every reconciliation check; errors only on evaluation failures.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let gammas = config.gammas();
    let phis = config.phis();
    let mut grid = Vec::new();
    for &eta in &config.etas {
        for &phi in &phis {
            for &g in &gammas {
                grid.push((eta, g, phi));
            }
        }
    }
    let boundary: Vec<(f64, f64, f64)> = config
        .etas
        .iter()
        .flat_map(|&eta| [(0.3, 0.4), (1.0, 1.1), (1.8, 2.6)].map(|(g, phi)| (eta, g, phi)))
        .collect();

    let per_point: Vec<Vec<Check>> = grid
        .par_iter()
        .map(|&(eta, g, phi)| grid_point(eta, g, phi, config.inject_fault))
        .chain(
            boundary
                .par_iter()
                .map(|&(eta, g, phi)| boundary_point(eta, g, phi, config.inject_fault)),
        )
        .collect::<Result<_>>()?;

    let mut checks = empty_checks();
    for point in &per_point {
        for (acc, c) in checks.iter_mut().zip(point) {
            acc.merge(c);
        }
    }

    let vacuum_projector = config
        .etas
        .iter()
        .map(|&eta| Ok((eta, detection::povm_elements(eta, 4)?.is_vacuum_projector())))
        .collect::<Result<_>>()?;
    Ok(VerifyReport { checks, vacuum_projector, points: grid.len() })
}
