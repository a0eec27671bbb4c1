//! Heralded preparation of `a0|0> + a1|1>` in mode `a`.
//!
//! Two routes to the same quantities:
//!
//! * closed forms in `(eta, gamma, phi)` for the click/no-click probability,
//!   the unnormalized 2x2 conditional state and the fidelity;
//! * a brute-force route that builds the three-mode output ket, conditions it
//!   on the detector outcomes and traces out modes `b` and `c`.
//!
//! The `NY` outcome (click on `c`, none on `b`) is the `YN` outcome at
//! `phi + pi/2`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detection::{self, DetectorModel, Measurement, Outcome, OutcomePattern, MIN_OUTCOME_PROBABILITY};
use crate::error::{Error, Result};
use crate::fock::{self, DensityOperator, FockState};
use crate::optics::{self, MODE_B, MODE_C};

/// Mode-`a` population above level 1 tolerated before the qubit block is reported.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Below this `sin^2(phi) + |gamma|^2 cos^2(phi)` the target qubit is undefined.
pub const TARGET_NORM_FLOOR: f64 = 1e-15;

/// Which detector clicks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Herald {
    /// Click on `b`, no click on `c`.
    Yn,
    /// No click on `b`, click on `c`.
    Ny,
}

impl Herald {
    /// Phase at which the `YN` formulas describe this outcome.
    pub fn effective_phi(self, phi: f64) -> f64 {
        match self {
            Herald::Yn => phi,
            Herald::Ny => phi + FRAC_PI_2,
        }
    }

    fn outcomes(self) -> (Outcome, Outcome) {
        match self {
            Herald::Yn => (Outcome::Yes, Outcome::No),
            Herald::Ny => (Outcome::No, Outcome::Yes),
        }
    }
}

impl fmt::Display for Herald {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Herald::Yn => "yn",
            Herald::Ny => "ny",
        })
    }
}

impl FromStr for Herald {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yn" => Ok(Herald::Yn),
            "ny" => Ok(Herald::Ny),
            other => Err(Error::InvalidArgument(format!("unknown outcome '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Cutoff::Auto);
        }
        s.parse::<usize>()
            .map(Cutoff::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("cutoff must be 'auto' or an integer, got '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub eta: f64,
    pub gamma: Complex64,
    pub phi: f64,
    pub cutoff: Cutoff,
}

impl SchemeParams {
    pub fn new(eta: f64, gamma: Complex64, phi: f64, cutoff: Cutoff) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("eta {eta} outside [0, 1]")));
        }
        if !gamma.re.is_finite() || !gamma.im.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument("gamma and phi must be finite".into()));
        }
        if let Cutoff::Fixed(d) = cutoff {
            if d < 2 {
                return Err(Error::InvalidDimension(format!("cutoff {d} < 2")));
            }
        }
        Ok(Self { eta, gamma, phi, cutoff })
    }

    /// Real `gamma` with automatic cutoff.
    pub fn real(eta: f64, gamma: f64, phi: f64) -> Result<Self> {
        Self::new(eta, Complex64::new(gamma, 0.0), phi, Cutoff::Auto)
    }

    pub fn resolved_cutoff(&self) -> usize {
        match self.cutoff {
            Cutoff::Auto => fock::auto_cutoff(self.gamma.norm()),
            Cutoff::Fixed(d) => d,
        }
    }
}

/// Unnormalized entries of the conditional qubit: `d00 |0><0| + d11 |1><1| + d01 |0><1| + h.c.`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCoefficients {
    pub d00: f64,
    pub d11: f64,
    pub d01: Complex64,
}

impl QubitCoefficients {
    pub fn trace(&self) -> f64 {
        self.d00 + self.d11
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetQubit {
    pub a0: Complex64,
    pub a1: Complex64,
}

impl TargetQubit {
    /// Normalizes `(a0, a1)`.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("target amplitudes vanish".into()));
        }
        Ok(Self { a0: a0 / n, a1: a1 / n })
    }

    pub fn to_state(&self) -> FockState {
        FockState::from_amplitudes(1, 2, vec![self.a0, self.a1]).expect("two amplitudes on one mode")
    }
}

/// Brute-force diagnostics collected along the way.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub cutoff: usize,
    /// Coherent tail mass discarded before renormalization.
    pub truncated_mass: f64,
    /// Mass the interferometer pushed past the cutoff.
    pub transform_leakage: f64,
    /// Conditional population of mode `a` above level 1.
    pub higher_level_population: f64,
}

#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub p_yn: f64,
    /// Conditional state of mode `a` on the `{|0>, |1>}` block.
    pub rho: DensityOperator,
    pub fidelity: f64,
    pub diagnostics: Diagnostics,
}

struct Trig {
    s2: f64,
    c2: f64,
    sc: f64,
    g2: f64,
    /// exp(-eta |gamma|^2 sin^2 phi)
    e_sin: f64,
    /// exp(-eta |gamma|^2 cos^2 phi)
    e_cos: f64,
}

impl Trig {
    fn new(eta: f64, gamma: Complex64, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let g2 = gamma.norm_sqr();
        Self {
            s2: s * s,
            c2: c * c,
            sc: s * c,
            g2,
            e_sin: (-eta * g2 * s * s).exp(),
            e_cos: (-eta * g2 * c * c).exp(),
        }
    }

    /// `1 - (1-eta) e_cos + eta cos^2 (eta |gamma|^2 sin^2 - 1)`, shared by d00 and F.
    fn vacuum_bracket(&self, eta: f64) -> f64 {
        1.0 - (1.0 - eta) * self.e_cos + eta * self.c2 * (eta * self.g2 * self.s2 - 1.0)
    }
}

/// Probability of a click on `b` and none on `c`.
pub fn p_yn_analytic(eta: f64, gamma: Complex64, phi: f64) -> f64 {
    let t = Trig::new(eta, gamma, phi);
    t.e_sin * (1.0 - t.e_cos + 0.5 * eta * (t.e_cos + t.c2 * (eta * t.g2 * t.s2 - 1.0)))
}

pub fn coefficients_analytic(eta: f64, gamma: Complex64, phi: f64) -> QubitCoefficients {
    let t = Trig::new(eta, gamma, phi);
    QubitCoefficients {
        d00: 0.5 * t.e_sin * t.vacuum_bracket(eta),
        d11: 0.5 * t.e_sin * (1.0 - t.e_cos),
        // coefficient of |0><1|; carries conj(gamma) for complex amplitudes
        d01: gamma.conj() * (0.5 * eta * t.e_sin * t.sc),
    }
}

/// Normalized 2x2 conditional state of mode `a`.
pub fn rho_yn_analytic(eta: f64, gamma: Complex64, phi: f64) -> Result<DensityOperator> {
    let p = p_yn_analytic(eta, gamma, phi);
    if !(p > MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    Ok(qubit_density(&coefficients_analytic(eta, gamma, phi), p))
}

fn qubit_density(k: &QubitCoefficients, p: f64) -> DensityOperator {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(k.d00, 0.0), k.d01, k.d01.conj(), Complex64::new(k.d11, 0.0)],
    ) / Complex64::new(p, 0.0);
    DensityOperator::new(1, 2, m).expect("2x2 on one mode at cutoff 2")
}

/// Ideal conditional output, proportional to `sin(phi)|0> + gamma cos(phi)|1>`.
pub fn target_state(gamma: Complex64, phi: f64) -> Result<TargetQubit> {
    let (s, c) = phi.sin_cos();
    let norm2 = s * s + gamma.norm_sqr() * c * c;
    if !(norm2 > TARGET_NORM_FLOOR) {
        return Err(Error::UndefinedTarget);
    }
    let n = norm2.sqrt();
    Ok(TargetQubit {
        a0: Complex64::new(s / n, 0.0),
        a1: gamma * (c / n),
    })
}

/// Closed-form fidelity of the `YN` conditional state with [`target_state`].
pub fn fidelity_analytic(eta: f64, gamma: Complex64, phi: f64) -> Result<f64> {
    let p = p_yn_analytic(eta, gamma, phi);
    if !(p > MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    let t = Trig::new(eta, gamma, phi);
    let norm2 = t.s2 + t.g2 * t.c2;
    if !(norm2 > TARGET_NORM_FLOOR) {
        return Err(Error::UndefinedTarget);
    }
    let braces = t.g2 * t.c2 * (1.0 - t.e_cos)
        + 2.0 * eta * t.g2 * t.s2 * t.c2
        + t.s2 * t.vacuum_bracket(eta);
    Ok((t.e_sin * braces / (2.0 * p * norm2)).clamp(0.0, 1.0))
}

/// Closed-form probability, state and fidelity for either outcome.
#[derive(Debug, Clone)]
pub struct AnalyticPoint {
    pub probability: f64,
    pub coefficients: QubitCoefficients,
    pub rho: DensityOperator,
    pub fidelity: f64,
}

pub fn analytic_point(eta: f64, gamma: Complex64, phi: f64, herald: Herald) -> Result<AnalyticPoint> {
    let phi = herald.effective_phi(phi);
    let probability = p_yn_analytic(eta, gamma, phi);
    Ok(AnalyticPoint {
        probability,
        coefficients: coefficients_analytic(eta, gamma, phi),
        rho: rho_yn_analytic(eta, gamma, phi)?,
        fidelity: fidelity_analytic(eta, gamma, phi)?,
    })
}

/// Three-mode output ket plus identical detectors on `b` and `c`.
pub struct NumericCircuit {
    state: FockState,
    detector: DetectorModel,
    diagnostics: Diagnostics,
}

impl NumericCircuit {
    pub fn build(params: &SchemeParams) -> Result<Self> {
        let cutoff = params.resolved_cutoff();
        let (state, leakage) = optics::build_circuit_state(params.gamma, params.phi, cutoff)?;
        Ok(Self {
            diagnostics: Diagnostics {
                cutoff,
                truncated_mass: state.truncated_mass(),
                transform_leakage: leakage,
                higher_level_population: 0.0,
            },
            detector: detection::povm_elements(params.eta, cutoff)?,
            state,
        })
    }

    pub fn state(&self) -> &FockState {
        &self.state
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    fn measurements(&self, herald: Herald) -> [Measurement<'_>; 2] {
        let (on_b, on_c) = herald.outcomes();
        [
            Measurement { mode: MODE_B, detector: &self.detector, outcome: on_b },
            Measurement { mode: MODE_C, detector: &self.detector, outcome: on_c },
        ]
    }

    pub fn probability(&self, herald: Herald) -> Result<f64> {
        detection::outcome_probability(&self.state, &self.measurements(herald))
    }

    /// Probabilities of YY, YN, NY, NN (mode `b` first).
    pub fn outcome_distribution(&self) -> Result<BTreeMap<OutcomePattern, f64>> {
        detection::outcome_distribution(&self.state, &[(MODE_B, &self.detector), (MODE_C, &self.detector)])
    }

    /// Conditional state of mode `a` on its full truncated space.
    pub fn conditional_full(&self, herald: Herald) -> Result<detection::ConditionalResult> {
        detection::condition(&self.state, &self.measurements(herald))
    }

    /// Conditions on `herald` and reports the qubit block with its fidelity.
    pub fn evaluate(&self, herald: Herald, gamma: Complex64, phi: f64) -> Result<SchemeResult> {
        let cond = self.conditional_full(herald)?;
        let higher: f64 = (2..cond.state.dim()).map(|n| cond.state.get(n, n).re).sum();
        if higher > SUPPORT_TOL {
            return Err(Error::NumericalInconsistency(format!(
                "mode a population {higher:e} above level 1"
            )));
        }
        let rho = cond.state.leading_block(2)?;
        let target = target_state(gamma, herald.effective_phi(phi))?;
        let fidelity = fock::fidelity_pure(&target.to_state(), &rho)?;
        Ok(SchemeResult {
            p_yn: cond.probability,
            rho,
            fidelity,
            diagnostics: Diagnostics {
                higher_level_population: higher,
                ..self.diagnostics
            },
        })
    }
}

/// Brute-force heralded state for `params`.
pub fn run_numeric(params: &SchemeParams, herald: Herald) -> Result<SchemeResult> {
    NumericCircuit::build(params)?.evaluate(herald, params.gamma, params.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn probability_boundaries() {
        for eta in [0.3, 0.8, 1.0] {
            for phi in [0.2, 1.0, 2.5] {
                assert_abs_diff_eq!(p_yn_analytic(eta, r(0.0), phi), 0.5 * eta * phi.sin().powi(2), epsilon = 1e-15);
            }
            for g in [0.1f64, 0.9, 1.7] {
                assert_abs_diff_eq!(
                    p_yn_analytic(eta, r(g), FRAC_PI_2),
                    0.5 * eta * (-eta * g * g).exp(),
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    p_yn_analytic(eta, r(g), 0.0),
                    (1.0 - (-eta * g * g).exp()) * (1.0 - eta / 2.0),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn coefficients_at_quarter_turn_and_zero_gamma() {
        let (eta, g) = (0.8, 1.3);
        let k = coefficients_analytic(eta, r(g), FRAC_PI_2);
        assert_abs_diff_eq!(k.d11, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.d01.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.d00, 0.5 * eta * (-eta * g * g).exp(), epsilon = 1e-12);

        assert_eq!(coefficients_analytic(0.6, r(0.0), 0.9).d01, r(0.0));
    }

    #[test]
    fn coefficients_sum_to_probability() {
        for &(eta, g, phi) in &[(0.8, 1.0, 0.6), (0.4, 2.0, 2.9), (1.0, 0.05, 0.1), (0.0, 1.0, 1.0)] {
            let k = coefficients_analytic(eta, r(g), phi);
            assert_abs_diff_eq!(k.trace(), p_yn_analytic(eta, r(g), phi), epsilon = 1e-12);
            assert!(k.d00 >= 0.0 && k.d11 >= 0.0);
        }
    }

    #[test]
    fn rho_at_quarter_turn_is_vacuum() {
        let rho = rho_yn_analytic(0.7, r(1.1), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(rho.get(0, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.get(1, 1).re, 0.0, epsilon = 1e-15);
        let rho = rho_yn_analytic(0.8, r(0.7), 0.9).unwrap();
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        assert!(matches!(rho_yn_analytic(0.8, r(0.0), 0.0), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn rho_psd_on_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let g = 0.1 + 0.2 * i as f64;
                let phi = 0.05 + 0.3 * j as f64;
                let rho = rho_yn_analytic(0.8, r(g), phi).unwrap();
                rho.validate(Some(1.0)).unwrap();
            }
        }
    }

    #[test]
    fn target_examples() {
        let t = target_state(r(0.4), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(t.a0.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.a1.norm(), 0.0, epsilon = 1e-15);

        let gamma = Complex64::new(0.3, -0.4);
        let t = target_state(gamma, 0.0).unwrap();
        assert_abs_diff_eq!(t.a0.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((t.a1 - gamma / gamma.norm()).norm(), 0.0, epsilon = 1e-15);

        let t = target_state(r(1.0), FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(t.a0.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.a1.re, FRAC_1_SQRT_2, epsilon = 1e-15);

        assert_eq!(target_state(r(0.0), 0.0), Err(Error::UndefinedTarget));
        assert_eq!(target_state(r(0.0), PI), Err(Error::UndefinedTarget));
    }

    #[test]
    fn fidelity_closed_form_matches_overlap() {
        for &(eta, g, phi) in &[(0.8, 1.0, 0.6), (0.4, 1.9, 2.2), (1.0, 0.3, 0.2), (0.6, 0.8, 1.4)] {
            let f = fidelity_analytic(eta, r(g), phi).unwrap();
            let target = target_state(r(g), phi).unwrap().to_state();
            let direct = fock::fidelity_pure(&target, &rho_yn_analytic(eta, r(g), phi).unwrap()).unwrap();
            assert_abs_diff_eq!(f, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_limits() {
        assert_abs_diff_eq!(fidelity_analytic(0.8, r(1.5), FRAC_PI_2).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_analytic(0.8, r(1e-4), 0.7).unwrap(), 1.0, epsilon = 1e-6);
        assert!(fidelity_analytic(0.8, r(0.0), 0.0).is_err());
    }

    #[test]
    fn complex_gamma_phase_lands_in_coherence() {
        let gamma = Complex64::from_polar(0.9, 0.7);
        let params = SchemeParams::new(0.8, gamma, 0.6, Cutoff::Auto).unwrap();
        let num = run_numeric(&params, Herald::Yn).unwrap();
        let ana = rho_yn_analytic(0.8, gamma, 0.6).unwrap();
        assert!(num.rho.max_abs_diff(&ana).unwrap() < 1e-8);
        assert_abs_diff_eq!(num.fidelity, fidelity_analytic(0.8, gamma, 0.6).unwrap(), epsilon = 1e-8);
    }

    #[test]
    fn numeric_reference_point() {
        let params = SchemeParams::real(0.8, 1.0, 0.6).unwrap();
        let res = run_numeric(&params, Herald::Yn).unwrap();
        assert_abs_diff_eq!(res.p_yn, p_yn_analytic(0.8, r(1.0), 0.6), epsilon = 1e-8);
        let k = coefficients_analytic(0.8, r(1.0), 0.6);
        assert_abs_diff_eq!(res.rho.get(0, 0).re * res.p_yn, k.d00, epsilon = 1e-8);
        assert_abs_diff_eq!(res.rho.get(1, 1).re * res.p_yn, k.d11, epsilon = 1e-8);
        assert_abs_diff_eq!((res.rho.get(0, 1) * res.p_yn - k.d01).norm(), 0.0, epsilon = 1e-8);
        assert!(res.diagnostics.higher_level_population < SUPPORT_TOL);
    }

    #[test]
    fn numeric_perfect_detector_identity_interferometer() {
        let params = SchemeParams::real(1.0, 0.0, FRAC_PI_2).unwrap();
        let res = run_numeric(&params, Herald::Yn).unwrap();
        assert_abs_diff_eq!(res.p_yn, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(res.rho.get(0, 0).re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ny_is_yn_shifted() {
        let (eta, g, phi) = (0.7, 1.2, 0.5);
        let ny = run_numeric(&SchemeParams::real(eta, g, phi).unwrap(), Herald::Ny).unwrap();
        let yn = run_numeric(&SchemeParams::real(eta, g, phi + FRAC_PI_2).unwrap(), Herald::Yn).unwrap();
        assert_abs_diff_eq!(ny.p_yn, yn.p_yn, epsilon = 1e-8);
        assert!(ny.rho.max_abs_diff(&yn.rho).unwrap() < 1e-8);
        assert_abs_diff_eq!(ny.fidelity, yn.fidelity, epsilon = 1e-8);
    }

    #[test]
    fn params_validation() {
        assert!(SchemeParams::real(1.5, 0.2, 0.1).is_err());
        assert!(SchemeParams::new(0.5, r(0.2), 0.1, Cutoff::Fixed(1)).is_err());
        assert_eq!("auto".parse::<Cutoff>().unwrap(), Cutoff::Auto);
        assert_eq!("12".parse::<Cutoff>().unwrap(), Cutoff::Fixed(12));
        assert!("x".parse::<Cutoff>().is_err());
        assert_eq!("NY".parse::<Herald>().unwrap(), Herald::Ny);
    }

    #[test]
    fn fixed_cutoff_too_small_is_reported() {
        let params = SchemeParams::new(0.8, r(2.0), 0.6, Cutoff::Fixed(8)).unwrap();
        assert!(matches!(run_numeric(&params, Herald::Yn), Err(Error::TruncationInsufficient { .. })));
    }
}
