//! Truncated multimode Fock spaces.
//!
//! Every mode carries the same local dimension `cutoff` (levels `0..cutoff`).
//! Multimode amplitudes and density-matrix indices are row-major with mode 0
//! varying slowest: `index = sum_k level_k * cutoff^(num_modes - 1 - k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Squared-norm tolerance for states labelled normalized.
pub const NORM_TOL: f64 = 1e-9;
/// Maximum elementwise deviation from Hermiticity for a density operator.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue tolerated before a density operator counts as non-positive.
pub const PSD_TOL: f64 = 1e-8;
/// Trace tolerance for normalized density operators.
pub const TRACE_TOL: f64 = 1e-9;
/// Largest coherent-state tail mass accepted when truncating.
pub const TAIL_MASS_LIMIT: f64 = 1e-12;
/// Floor on the automatically chosen cutoff.
pub const MIN_AUTO_CUTOFF: usize = 4;
/// Imaginary part tolerated in an expectation value that must be real.
pub const IMAG_TOL: f64 = 1e-10;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Label of one mode inside a multimode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(usize);

impl ModeIndex {
    pub fn new(index: usize, num_modes: usize) -> Result<Self> {
        if index >= num_modes {
            return Err(Error::InvalidArgument(format!(
                "mode index {index} out of range for {num_modes} modes"
            )));
        }
        Ok(Self(index))
    }

    /// Mode label without a range check; validated by the operation that consumes it.
    pub const fn unchecked(index: usize) -> Self {
        Self(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    pub(crate) fn check(self, num_modes: usize) -> Result<usize> {
        Self::new(self.0, num_modes).map(|m| m.0)
    }
}

/// Pure multimode bosonic state on a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    num_modes: usize,
    cutoff: usize,
    amplitudes: Vec<Complex64>,
    /// Probability mass discarded by truncation before renormalization.
    truncated_mass: f64,
}

impl FockState {
    pub fn from_amplitudes(num_modes: usize, cutoff: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_shape(num_modes, cutoff)?;
        let dim = cutoff.pow(num_modes as u32);
        if amplitudes.len() != dim {
            return Err(Error::InvalidDimension(format!(
                "expected {dim} amplitudes for {num_modes} modes at cutoff {cutoff}, got {}",
                amplitudes.len()
            )));
        }
        Ok(Self {
            num_modes,
            cutoff,
            amplitudes,
            truncated_mass: 0.0,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Probability mass removed by truncating a coherent component (before renormalization).
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.num_modes {
            return Err(Error::InvalidArgument(format!(
                "{} levels given for a {}-mode state",
                levels.len(),
                self.num_modes
            )));
        }
        levels.iter().try_fold(0usize, |acc, &n| {
            if n >= self.cutoff {
                Err(Error::OutOfRange {
                    level: n,
                    cutoff: self.cutoff,
                })
            } else {
                Ok(acc * self.cutoff + n)
            }
        })
    }

    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        levels_of(index, self.num_modes, self.cutoff)
    }

    pub fn amplitude(&self, levels: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.index_of(levels)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a null state".into()));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        check_same_space(self.num_modes, self.cutoff, other.num_modes, other.cutoff)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `<n_mode>` without renormalizing.
    pub fn mean_photon_number(&self, mode: ModeIndex) -> Result<f64> {
        let m = mode.check(self.num_modes)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| level_at(i, m, self.num_modes, self.cutoff) as f64 * a.norm_sqr())
            .sum())
    }

    /// Distribution of the total photon number `sum_k n_k`, indexed by photon count.
    pub fn total_photon_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.num_modes * (self.cutoff - 1) + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let total: usize = self.levels_of(i).iter().sum();
            dist[total] += a.norm_sqr();
        }
        dist
    }

    pub(crate) fn with_truncated_mass(mut self, mass: f64) -> Self {
        self.truncated_mass = mass;
        self
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }
}

fn check_shape(num_modes: usize, cutoff: usize) -> Result<()> {
    if num_modes == 0 {
        return Err(Error::InvalidDimension("a state needs at least one mode".into()));
    }
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
    }
    if cutoff.checked_pow(num_modes as u32).is_none() {
        return Err(Error::InvalidDimension("state dimension overflows".into()));
    }
    Ok(())
}

fn check_same_space(m1: usize, d1: usize, m2: usize, d2: usize) -> Result<()> {
    if m1 != m2 || d1 != d2 {
        return Err(Error::Incompatible(format!(
            "{m1} modes at cutoff {d1} vs {m2} modes at cutoff {d2}"
        )));
    }
    Ok(())
}

pub(crate) fn levels_of(mut index: usize, num_modes: usize, cutoff: usize) -> Vec<usize> {
    let mut levels = vec![0; num_modes];
    for slot in levels.iter_mut().rev() {
        *slot = index % cutoff;
        index /= cutoff;
    }
    levels
}

pub(crate) fn level_at(index: usize, mode: usize, num_modes: usize, cutoff: usize) -> usize {
    (index / cutoff.pow((num_modes - 1 - mode) as u32)) % cutoff
}

pub fn vacuum(num_modes: usize, cutoff: usize) -> Result<FockState> {
    check_shape(num_modes, cutoff)?;
    let mut amplitudes = vec![ZERO; cutoff.pow(num_modes as u32)];
    amplitudes[0] = ONE;
    FockState::from_amplitudes(num_modes, cutoff, amplitudes)
}

/// Single-mode number state `|n>`.
pub fn number_state(n: usize, cutoff: usize) -> Result<FockState> {
    check_shape(1, cutoff)?;
    if n >= cutoff {
        return Err(Error::OutOfRange { level: n, cutoff });
    }
    let mut amplitudes = vec![ZERO; cutoff];
    amplitudes[n] = ONE;
    FockState::from_amplitudes(1, cutoff, amplitudes)
}

/// Poisson mass `sum_{n >= cutoff} e^{-|g|^2} |g|^{2n} / n!` lost when truncating `|gamma>`.
pub fn coherent_tail_mass(gamma_abs: f64, cutoff: usize) -> f64 {
    let mean = gamma_abs * gamma_abs;
    if mean == 0.0 {
        return 0.0;
    }
    // p_n built in log space up to the cutoff, then summed forward until negligible.
    let ln_p = -mean + cutoff as f64 * mean.ln() - ln_factorial(cutoff);
    let mut term = ln_p.exp();
    let mut tail = 0.0;
    let mut n = cutoff;
    while term > 0.0 && (term > tail * 1e-18 || (n as f64) < mean) {
        tail += term;
        n += 1;
        term *= mean / n as f64;
        if n > cutoff + 10_000 {
            break;
        }
    }
    tail
}

/// Smallest cutoff `d >= 4` whose coherent tail mass for `|gamma|` stays below 1e-12.
pub fn auto_cutoff(gamma_abs: f64) -> usize {
    let mut d = MIN_AUTO_CUTOFF;
    while coherent_tail_mass(gamma_abs, d) >= TAIL_MASS_LIMIT {
        d += 1;
    }
    d
}

/// Truncated, renormalized coherent state `|gamma>`; the discarded mass is kept as a diagnostic.
pub fn coherent_state(gamma: Complex64, cutoff: usize) -> Result<FockState> {
    check_shape(1, cutoff)?;
    let tail = coherent_tail_mass(gamma.norm(), cutoff);
    if tail >= TAIL_MASS_LIMIT {
        return Err(Error::TruncationInsufficient {
            what: "coherent tail mass",
            mass: tail,
            limit: TAIL_MASS_LIMIT,
            cutoff,
        });
    }
    let mut amplitudes = Vec::with_capacity(cutoff);
    let mut c = Complex64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    for n in 0..cutoff {
        amplitudes.push(c);
        c = c * gamma / ((n + 1) as f64).sqrt();
    }
    let state = FockState::from_amplitudes(1, cutoff, amplitudes)?.normalized()?;
    Ok(state.with_truncated_mass(tail))
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Outer product; modes of `s1` come first.
pub fn tensor(s1: &FockState, s2: &FockState) -> Result<FockState> {
    if s1.cutoff != s2.cutoff {
        return Err(Error::Incompatible(format!(
            "cutoff {} vs {}",
            s1.cutoff, s2.cutoff
        )));
    }
    let amplitudes = s1
        .amplitudes
        .iter()
        .flat_map(|a| s2.amplitudes.iter().map(move |b| a * b))
        .collect();
    let state = FockState::from_amplitudes(s1.num_modes + s2.num_modes, s1.cutoff, amplitudes)?;
    let (m1, m2) = (s1.truncated_mass, s2.truncated_mass);
    Ok(state.with_truncated_mass(m1 + m2 - m1 * m2))
}

/// Hermitian operator on a truncated multimode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    num_modes: usize,
    cutoff: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(num_modes: usize, cutoff: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_shape(num_modes, cutoff)?;
        let dim = cutoff.pow(num_modes as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "expected {dim}x{dim} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            num_modes,
            cutoff,
            matrix,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho.
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity, positivity and (when given) the trace.
    pub fn validate(&self, expected_trace: Option<f64>) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NumericalInconsistency(format!(
                "Hermiticity defect {defect:e}"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::NumericalInconsistency(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        if let Some(t) = expected_trace {
            let tr = self.trace();
            if (tr.re - t).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
                return Err(Error::NumericalInconsistency(format!(
                    "trace {tr} differs from {t}"
                )));
            }
        }
        Ok(())
    }

    /// Leading `levels x levels` block of a single-mode operator, as a single-mode operator.
    pub fn leading_block(&self, levels: usize) -> Result<Self> {
        if self.num_modes != 1 {
            return Err(Error::InvalidArgument(
                "leading block is only defined for a single mode".into(),
            ));
        }
        if levels < 2 || levels > self.cutoff {
            return Err(Error::InvalidDimension(format!(
                "block of {levels} levels from cutoff {}",
                self.cutoff
            )));
        }
        Self::new(1, levels, self.matrix.view((0, 0), (levels, levels)).into_owned())
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        check_same_space(self.num_modes, self.cutoff, other.num_modes, other.cutoff)?;
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

/// `|psi><psi|`.
pub fn to_density(s: &FockState) -> DensityOperator {
    let v = nalgebra::DVector::from_column_slice(&s.amplitudes);
    let matrix = &v * v.adjoint();
    DensityOperator {
        num_modes: s.num_modes,
        cutoff: s.cutoff,
        matrix,
    }
}

/// Reduced operator over `keep`; kept modes appear in ascending original order.
pub fn partial_trace(rho: &DensityOperator, keep: &[ModeIndex]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set is empty".into()));
    }
    let mut kept: Vec<usize> = keep
        .iter()
        .map(|m| m.check(rho.num_modes))
        .collect::<Result<_>>()?;
    kept.sort_unstable();
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate mode in keep set".into()));
    }
    let (m, d) = (rho.num_modes, rho.cutoff);
    let traced: Vec<usize> = (0..m).filter(|k| !kept.contains(k)).collect();
    let keep_dim = d.pow(kept.len() as u32);
    let traced_dim = d.pow(traced.len() as u32);

    // groups[t] lists (kept index, full index) for every full index whose traced part is t.
    let mut groups = vec![Vec::with_capacity(keep_dim); traced_dim];
    for full in 0..rho.dim() {
        let levels = levels_of(full, m, d);
        let k = kept.iter().fold(0, |acc, &mode| acc * d + levels[mode]);
        let t = traced.iter().fold(0, |acc, &mode| acc * d + levels[mode]);
        groups[t].push((k, full));
    }
    let mut reduced = DMatrix::from_element(keep_dim, keep_dim, ZERO);
    for group in &groups {
        for &(ki, fi) in group {
            for &(kj, fj) in group {
                reduced[(ki, kj)] += rho.matrix[(fi, fj)];
            }
        }
    }
    DensityOperator::new(kept.len(), d, reduced)
}

/// `<psi|rho|psi>` for a normalized pure target.
pub fn fidelity_pure(target: &FockState, rho: &DensityOperator) -> Result<f64> {
    check_same_space(target.num_modes, target.cutoff, rho.num_modes, rho.cutoff)?;
    if !target.is_normalized() {
        return Err(Error::InvalidArgument(format!(
            "target norm^2 {} is not 1",
            target.norm_sqr()
        )));
    }
    let v = nalgebra::DVector::from_column_slice(&target.amplitudes);
    let value = (v.adjoint() * &rho.matrix * &v)[(0, 0)];
    if value.im.abs() > IMAG_TOL {
        return Err(Error::NumericalInconsistency(format!(
            "fidelity has imaginary part {:e}",
            value.im
        )));
    }
    let f = value.re;
    if !(-IMAG_TOL..=1.0 + IMAG_TOL).contains(&f) {
        return Err(Error::NumericalInconsistency(format!(
            "fidelity {f} outside [0, 1]"
        )));
    }
    Ok(f.clamp(0.0, 1.0))
}
