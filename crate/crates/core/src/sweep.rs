//! Grid sweeps over `(gamma, phi)` at fixed efficiency.
//!
//! Records come back in a fixed order (phi outer, gamma inner) no matter
//! how the worker pool schedules the points.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::MIN_OUTCOME_PROBABILITY;
use crate::error::{Error, Result};
use crate::scheme::{self, Cutoff, Herald, NumericCircuit, SchemeParams};

/// Slack allowed when checking that a range lies inside `[0, pi]`.
const DOMAIN_SLACK: f64 = 1e-12;

/// Parses `1.5`, `pi`, `-pi`, `pi/3`, `2pi`, `2*pi/3`.
pub fn parse_scalar(text: &str) -> Result<f64> {
    let s = text.trim().to_ascii_lowercase();
    let bad = || Error::InvalidArgument(format!("cannot parse number '{text}'"));
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let (head, rest) = (&s[..at], &s[at + 2..]);
    let factor = match head.trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        "+" => 1.0,
        num => num.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match rest {
        "" => 1.0,
        r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    let value = factor * PI / divisor;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Inclusive linear range `min:max:steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let r = Self { min, max, steps };
        r.validate()?;
        Ok(r)
    }

    pub fn single(value: f64) -> Self {
        Self { min: value, max: value, steps: 1 }
    }

    /// `steps >= 2` with `min <= max`, or one step on a degenerate range.
    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidArgument("range bounds must be finite".into()));
        }
        if self.min > self.max {
            return Err(Error::InvalidArgument(format!(
                "range min {} exceeds max {}",
                self.min, self.max
            )));
        }
        match self.steps {
            0 => Err(Error::InvalidArgument("range needs at least one step".into())),
            1 if self.min != self.max => Err(Error::InvalidArgument(
                "a one-step range needs min == max".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * i as f64 / last
                }
            })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(Error::InvalidArgument(format!(
                "range '{s}' is not of the form min:max:steps"
            )));
        };
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad step count in '{s}'")))?;
        Self::new(parse_scalar(min)?, parse_scalar(max)?, steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EvalMode {
    #[default]
    Analytic,
    Numeric,
    Both,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(EvalMode::Analytic),
            "numeric" => Ok(EvalMode::Numeric),
            "both" => Ok(EvalMode::Both),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Analytic => "analytic",
            EvalMode::Numeric => "numeric",
            EvalMode::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub gamma: AxisRange,
    pub phi: AxisRange,
    pub eta: f64,
    pub herald: Herald,
    pub mode: EvalMode,
    pub cutoff: Cutoff,
}

impl SweepSpec {
    /// The 41x41 grid over `gamma in [0, 2]`, `phi in [0, pi]`.
    pub fn standard(eta: f64) -> Self {
        Self {
            gamma: AxisRange { min: 0.0, max: 2.0, steps: 41 },
            phi: AxisRange { min: 0.0, max: PI, steps: 41 },
            eta,
            herald: Herald::Yn,
            mode: EvalMode::Analytic,
            cutoff: Cutoff::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gamma.validate()?;
        self.phi.validate()?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!("eta {} outside [0, 1]", self.eta)));
        }
        if self.gamma.min < 0.0 {
            return Err(Error::InvalidArgument("gamma range must be non-negative".into()));
        }
        if self.phi.min < -DOMAIN_SLACK || self.phi.max > PI + DOMAIN_SLACK {
            return Err(Error::InvalidArgument("phi range must lie within [0, pi]".into()));
        }
        if let Cutoff::Fixed(d) = self.cutoff {
            if d < 2 {
                return Err(Error::InvalidDimension(format!("cutoff {d} < 2")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gamma.steps * self.phi.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One grid point. Fidelity is reported as 0 where no conditional state exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub phi: f64,
    pub eta: f64,
    pub p_yn: f64,
    pub fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dp: Option<f64>,
    #[serde(rename = "dF", skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
}

fn analytic_values(eta: f64, gamma: Complex64, phi: f64, herald: Herald) -> (f64, f64) {
    let phi = herald.effective_phi(phi);
    let p = scheme::p_yn_analytic(eta, gamma, phi);
    let f = scheme::fidelity_analytic(eta, gamma, phi).unwrap_or(0.0);
    (p, f)
}

fn numeric_values(params: &SchemeParams, herald: Herald) -> Result<(f64, f64)> {
    let circuit = NumericCircuit::build(params)?;
    let p = circuit.probability(herald)?;
    if !(p > MIN_OUTCOME_PROBABILITY) {
        return Ok((p, 0.0));
    }
    match circuit.evaluate(herald, params.gamma, params.phi) {
        Ok(res) => Ok((res.p_yn, res.fidelity)),
        Err(Error::UndefinedTarget | Error::ZeroProbability(_)) => Ok((p, 0.0)),
        Err(e) => Err(e),
    }
}

/// Evaluates one point in the requested mode.
pub fn evaluate_point(spec: &SweepSpec, gamma: f64, phi: f64) -> Result<SweepRecord> {
    let g = Complex64::new(gamma, 0.0);
    let (p_yn, fidelity, dp, df) = match spec.mode {
        EvalMode::Analytic => {
            let (p, f) = analytic_values(spec.eta, g, phi, spec.herald);
            (p, f, None, None)
        }
        EvalMode::Numeric => {
            let params = SchemeParams::new(spec.eta, g, phi, spec.cutoff)?;
            let (p, f) = numeric_values(&params, spec.herald)?;
            (p, f, None, None)
        }
        EvalMode::Both => {
            let (pa, fa) = analytic_values(spec.eta, g, phi, spec.herald);
            let params = SchemeParams::new(spec.eta, g, phi, spec.cutoff)?;
            let (pn, fnum) = numeric_values(&params, spec.herald)?;
            (pa, fa, Some(pn - pa), Some(fnum - fa))
        }
    };
    Ok(SweepRecord {
        gamma,
        phi,
        eta: spec.eta,
        p_yn,
        fidelity,
        dp,
        df,
    })
}

/// Every grid point, phi outer and gamma inner.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let gammas = spec.gamma.values();
    let phis = spec.phi.values();
    let points: Vec<(f64, f64)> = phis
        .iter()
        .flat_map(|&phi| gammas.iter().map(move |&g| (g, phi)))
        .collect();
    points
        .par_iter()
        .map(|&(g, phi)| evaluate_point(spec, g, phi))
        .collect()
}
