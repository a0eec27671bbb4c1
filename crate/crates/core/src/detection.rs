//! On/off (avalanche) photodetection with finite quantum efficiency.
//!
//! The no-click element is `Pi_N = sum_p (1 - eta)^p |p><p|` and the click
//! element is `Pi_Y = I - Pi_N`. Both are diagonal in the Fock basis, so
//! conditioning multiplies the joint density by the product of diagonal
//! weights of the measured modes and traces them out; no square-root
//! channel is needed.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityOperator, FockState, ModeIndex};

/// Outcome probabilities below this are refused for conditioning.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// No click.
    No,
    /// Click: one or more photons registered.
    Yes,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Yes => "Y",
            Outcome::No => "N",
        })
    }
}

/// Two-element POVM of an on/off detector truncated to `cutoff` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    eta: f64,
    pi_no: Vec<f64>,
    pi_yes: Vec<f64>,
}

impl DetectorModel {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cutoff(&self) -> usize {
        self.pi_no.len()
    }

    /// Diagonal of `Pi_N`.
    pub fn pi_no(&self) -> &[f64] {
        &self.pi_no
    }

    /// Diagonal of `Pi_Y`.
    pub fn pi_yes(&self) -> &[f64] {
        &self.pi_yes
    }

    pub fn element(&self, outcome: Outcome) -> &[f64] {
        match outcome {
            Outcome::Yes => &self.pi_yes,
            Outcome::No => &self.pi_no,
        }
    }

    /// True when `Pi_N` is exactly the vacuum projector (eta = 1).
    pub fn is_vacuum_projector(&self) -> bool {
        self.pi_no[0] == 1.0 && self.pi_no[1..].iter().all(|&w| w == 0.0)
    }
}

pub fn povm_elements(eta: f64, cutoff: usize) -> Result<DetectorModel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "quantum efficiency {eta} outside [0, 1]"
        )));
    }
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
    }
    let loss = 1.0 - eta;
    let pi_no: Vec<f64> = (0..cutoff).map(|p| loss.powi(p as i32)).collect();
    let pi_yes = pi_no.iter().map(|w| 1.0 - w).collect();
    Ok(DetectorModel { eta, pi_no, pi_yes })
}

/// One measured mode with its detector and the outcome conditioned on.
#[derive(Debug, Clone, Copy)]
pub struct Measurement<'a> {
    pub mode: ModeIndex,
    pub detector: &'a DetectorModel,
    pub outcome: Outcome,
}

/// Outcome tags of the measured modes, in ascending mode order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomePattern(pub Vec<Outcome>);

impl fmt::Display for OutcomePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|o| write!(f, "{o}"))
    }
}

#[derive(Debug, Clone)]
pub struct ConditionalResult {
    pub probability: f64,
    /// Normalized state of the unmeasured modes (ascending mode order).
    pub state: DensityOperator,
}

/// Per-index weight of the joint POVM element, and the split of each index into kept/measured parts.
struct Layout {
    kept_dim: usize,
    measured_dim: usize,
    kept_modes: usize,
    /// (kept index, measured index) per full index
    split: Vec<(usize, usize)>,
}

fn layout(state: &FockState, measured: &[usize]) -> Layout {
    let (m, d) = (state.num_modes(), state.cutoff());
    let kept: Vec<usize> = (0..m).filter(|k| !measured.contains(k)).collect();
    let split = (0..state.dim())
        .map(|i| {
            let levels = state.levels_of(i);
            let k = kept.iter().fold(0, |acc, &mode| acc * d + levels[mode]);
            let t = measured.iter().fold(0, |acc, &mode| acc * d + levels[mode]);
            (k, t)
        })
        .collect();
    Layout {
        kept_dim: d.pow(kept.len() as u32),
        measured_dim: d.pow(measured.len() as u32),
        kept_modes: kept.len(),
        split,
    }
}

fn validate_measurements(state: &FockState, measurements: &[Measurement<'_>]) -> Result<Vec<usize>> {
    let mut modes = Vec::with_capacity(measurements.len());
    for meas in measurements {
        let mode = meas.mode.check(state.num_modes())?;
        if modes.contains(&mode) {
            return Err(Error::InvalidArgument(format!("mode {mode} measured twice")));
        }
        if meas.detector.cutoff() != state.cutoff() {
            return Err(Error::Incompatible(format!(
                "detector cutoff {} vs state cutoff {}",
                meas.detector.cutoff(),
                state.cutoff()
            )));
        }
        modes.push(mode);
    }
    Ok(modes)
}

/// Weight of the joint element at each full basis index.
fn joint_weights(state: &FockState, measurements: &[Measurement<'_>]) -> Vec<f64> {
    let (m, d) = (state.num_modes(), state.cutoff());
    (0..state.dim())
        .map(|i| {
            measurements
                .iter()
                .map(|meas| meas.detector.element(meas.outcome)[fock::level_at(i, meas.mode.index(), m, d)])
                .product()
        })
        .collect()
}

/// `Tr[|psi><psi| (E_1 (x) ... (x) I)]` for the given outcomes.
pub fn outcome_probability(state: &FockState, measurements: &[Measurement<'_>]) -> Result<f64> {
    validate_measurements(state, measurements)?;
    Ok(joint_weights(state, measurements)
        .iter()
        .zip(state.amplitudes())
        .map(|(w, a)| w * a.norm_sqr())
        .sum())
}

/// Probability and normalized post-measurement state of the unmeasured modes.
pub fn condition(state: &FockState, measurements: &[Measurement<'_>]) -> Result<ConditionalResult> {
    let modes = validate_measurements(state, measurements)?;
    if modes.len() >= state.num_modes() {
        return Err(Error::InvalidArgument("no unmeasured mode left".into()));
    }
    let mut sorted = modes.clone();
    sorted.sort_unstable();
    let lay = layout(state, &sorted);
    let weights = joint_weights(state, measurements);

    // Amplitudes as a (kept x measured) matrix; rho = A W A^†.
    let mut amat = DMatrix::from_element(lay.kept_dim, lay.measured_dim, Complex64::new(0.0, 0.0));
    let mut wdiag = vec![0.0; lay.measured_dim];
    for (i, &(k, t)) in lay.split.iter().enumerate() {
        amat[(k, t)] = state.amplitudes()[i];
        wdiag[t] = weights[i];
    }
    let mut weighted = amat.clone();
    for (t, w) in wdiag.iter().enumerate() {
        weighted.column_mut(t).scale_mut(*w);
    }
    let unnormalized = weighted * amat.adjoint();
    let probability = unnormalized.trace().re;
    if !(probability > MIN_OUTCOME_PROBABILITY) {
        return Err(Error::ZeroProbability(probability));
    }
    let rho = unnormalized / Complex64::new(probability, 0.0);
    Ok(ConditionalResult {
        probability,
        state: DensityOperator::new(lay.kept_modes, state.cutoff(), rho)?,
    })
}

/// Probabilities of all `2^k` click patterns over the given detectors.
pub fn outcome_distribution(
    state: &FockState,
    detectors: &[(ModeIndex, &DetectorModel)],
) -> Result<BTreeMap<OutcomePattern, f64>> {
    let mut order: Vec<(ModeIndex, &DetectorModel)> = detectors.to_vec();
    order.sort_by_key(|(m, _)| *m);
    let k = order.len();
    let mut dist = BTreeMap::new();
    for bits in 0..(1usize << k) {
        let measurements: Vec<Measurement<'_>> = order
            .iter()
            .enumerate()
            .map(|(j, &(mode, detector))| Measurement {
                mode,
                detector,
                outcome: if bits >> (k - 1 - j) & 1 == 1 { Outcome::Yes } else { Outcome::No },
            })
            .collect();
        let p = outcome_probability(state, &measurements)?;
        dist.insert(OutcomePattern(measurements.iter().map(|m| m.outcome).collect()), p);
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{number_state, tensor, vacuum};
    use approx::assert_abs_diff_eq;

    const M0: ModeIndex = ModeIndex::unchecked(0);
    const M1: ModeIndex = ModeIndex::unchecked(1);

    #[test]
    fn povm_limits() {
        let perfect = povm_elements(1.0, 5).unwrap();
        assert_eq!(perfect.pi_no(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(perfect.is_vacuum_projector());

        let blind = povm_elements(0.0, 4).unwrap();
        assert!(blind.pi_no().iter().all(|&w| w == 1.0));
        assert!(blind.pi_yes().iter().all(|&w| w == 0.0));

        let d = povm_elements(0.8, 4).unwrap();
        assert_abs_diff_eq!(d.pi_no()[2], 0.04, epsilon = 1e-15);
    }

    #[test]
    fn povm_completeness_exact() {
        for eta in [0.0, 0.13, 0.5, 0.8, 1.0] {
            let d = povm_elements(eta, 12).unwrap();
            for (n, y) in d.pi_no().iter().zip(d.pi_yes()) {
                assert_eq!(n + y, 1.0);
                assert!((0.0..=1.0).contains(n) && (0.0..=1.0).contains(y));
            }
        }
    }

    #[test]
    fn povm_rejects_bad_eta() {
        assert!(matches!(povm_elements(1.2, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(povm_elements(-0.1, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_photon_probabilities() {
        let eta = 0.7;
        let det = povm_elements(eta, 3).unwrap();
        let perfect = povm_elements(1.0, 3).unwrap();
        // |0>_a |1>_b: condition mode b, keep a
        let s = tensor(&vacuum(1, 3).unwrap(), &number_state(1, 3).unwrap()).unwrap();
        let yes = condition(&s, &[Measurement { mode: M1, detector: &perfect, outcome: Outcome::Yes }]).unwrap();
        assert_abs_diff_eq!(yes.probability, 1.0, epsilon = 1e-15);
        let no = condition(&s, &[Measurement { mode: M1, detector: &det, outcome: Outcome::No }]).unwrap();
        assert_abs_diff_eq!(no.probability, 1.0 - eta, epsilon = 1e-15);

        let one = number_state(1, 3).unwrap();
        let dist = outcome_distribution(&one, &[(M0, &det)]).unwrap();
        assert_abs_diff_eq!(dist[&OutcomePattern(vec![Outcome::Yes])], eta, epsilon = 1e-15);
        assert_abs_diff_eq!(dist[&OutcomePattern(vec![Outcome::No])], 1.0 - eta, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_never_clicks() {
        let det = povm_elements(0.6, 3).unwrap();
        let dist = outcome_distribution(&vacuum(3, 3).unwrap(), &[(M1, &det), (ModeIndex::unchecked(2), &det)]).unwrap();
        assert_eq!(dist[&OutcomePattern(vec![Outcome::No, Outcome::No])], 1.0);
        assert_eq!(dist.values().sum::<f64>(), 1.0);
    }

    #[test]
    fn perfect_no_click_projects_onto_vacuum() {
        // (|0,0> + |1,1> + |0,2>) / sqrt 3 ; NO on mode 1 at eta = 1 leaves |0> on mode 0
        let d = 3;
        let mut amps = vec![Complex64::new(0.0, 0.0); 9];
        let r = 1.0 / 3f64.sqrt();
        amps[0] = Complex64::new(r, 0.0);
        amps[4] = Complex64::new(r, 0.0);
        amps[2] = Complex64::new(r, 0.0);
        let s = FockState::from_amplitudes(2, d, amps).unwrap();
        let perfect = povm_elements(1.0, d).unwrap();
        let res = condition(&s, &[Measurement { mode: M1, detector: &perfect, outcome: Outcome::No }]).unwrap();
        assert_abs_diff_eq!(res.probability, 1.0 / 3.0, epsilon = 1e-15);
        let expect = fock::to_density(&vacuum(1, d).unwrap());
        assert!(res.state.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn condition_errors() {
        let det = povm_elements(0.5, 3).unwrap();
        let s = vacuum(2, 3).unwrap();
        let yes = |mode| Measurement { mode, detector: &det, outcome: Outcome::Yes };
        assert!(matches!(condition(&s, &[yes(M1)]), Err(Error::ZeroProbability(_))));
        assert!(condition(&s, &[yes(M0), yes(M1)]).is_err());
        assert!(condition(&s, &[yes(M1), yes(M1)]).is_err());
        let other = povm_elements(0.5, 4).unwrap();
        let meas = Measurement { mode: M1, detector: &other, outcome: Outcome::No };
        assert!(matches!(condition(&s, &[meas]), Err(Error::Incompatible(_))));
    }
}
