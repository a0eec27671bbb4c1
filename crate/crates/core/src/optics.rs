//! Passive two-mode linear optics on the truncated Fock basis.
//!
//! A [`ModeTransform`] with matrix `S` rewrites creation operators of the
//! selected pair `(p, q)` as
//!
//! ```text
//! p† -> S11 p† + S12 q†
//! q† -> S21 p† + S22 q†
//! ```
//!
//! The induced Fock-space unitary conserves total photon number, so it is
//! applied block by block: block `N` acts on `{|k, N-k>}` and its columns are
//! generated from block `N-1` by one more transformed creation operator.
//! With this row convention the single-photon block is `S^T`, and applying
//! `S1` then `S2` equals applying `S1 * S2`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, FockState, ModeIndex};

/// Probability mass pushed past the cutoff that `apply_transform` tolerates.
pub const LEAKAGE_LIMIT: f64 = 1e-9;
/// Unitarity tolerance on `S^† S`.
pub const UNITARY_TOL: f64 = 1e-12;

/// Modes of the three-mode circuit state.
pub const MODE_A: ModeIndex = ModeIndex::unchecked(0);
pub const MODE_B: ModeIndex = ModeIndex::unchecked(1);
pub const MODE_C: ModeIndex = ModeIndex::unchecked(2);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// 2x2 unitary acting on the creation operators of a mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTransform {
    matrix: Matrix2<Complex64>,
}

impl ModeTransform {
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self> {
        let t = Self { matrix };
        let defect = t.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!(
                "mode transform is not unitary (defect {defect:e})"
            )));
        }
        Ok(t)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    /// `max |S^† S - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `self` followed by `next`, as one transform.
    pub fn then(&self, next: &ModeTransform) -> ModeTransform {
        ModeTransform {
            matrix: self.matrix * next.matrix,
        }
    }

    /// Induced unitary on the `N`-photon block, indexed `[m][k]` = `<m, N-m| U |k, N-k>`.
    pub fn photon_block(&self, photons: usize) -> Vec<Vec<Complex64>> {
        let mut block = vec![vec![Complex64::new(1.0, 0.0)]];
        for n in 1..=photons {
            block = self.next_block(&block, n);
        }
        block
    }

    fn next_block(&self, prev: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
        let s = &self.matrix;
        // Raising by (x p† + y q†) a column over |m, n-1-m>:
        //   p†|m, n-1-m> = sqrt(m+1) |m+1, n-1-m>,  q†|m, n-1-m> = sqrt(n-m) |m, n-m>.
        let raise = |col: &dyn Fn(usize) -> Complex64, x: Complex64, y: Complex64, scale: f64| {
            let mut out = vec![ZERO; n + 1];
            for m in 0..n {
                let a = col(m);
                if a == ZERO {
                    continue;
                }
                out[m + 1] += x * a * ((m + 1) as f64).sqrt();
                out[m] += y * a * ((n - m) as f64).sqrt();
            }
            out.iter_mut().for_each(|z| *z /= scale);
            out
        };
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n + 1);
        // |0, n> = q†|0, n-1> / sqrt(n)
        cols.push(raise(&|m| prev[m][0], s[(1, 0)], s[(1, 1)], (n as f64).sqrt()));
        // |k, n-k> = p†|k-1, n-k> / sqrt(k)
        for k in 1..=n {
            cols.push(raise(&|m| prev[m][k - 1], s[(0, 0)], s[(0, 1)], (k as f64).sqrt()));
        }
        // transpose columns into [m][k]
        (0..=n)
            .map(|m| (0..=n).map(|k| cols[k][m]).collect())
            .collect()
    }
}

/// Mach-Zehnder transform `S(phi) = [[sin, -cos], [cos, sin]]`.
///
/// A photon entering `b` leaves as `sin(phi) b† - cos(phi) c†`, and `|gamma>_c`
/// leaves as `|gamma cos(phi)>_b |gamma sin(phi)>_c`.
pub fn mz_transform(phi: f64) -> ModeTransform {
    let (s, c) = phi.sin_cos();
    ModeTransform {
        matrix: Matrix2::new(
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
        ),
    }
}

/// Applies `t` to modes `(p, q)`; the result is not renormalized.
pub fn apply_transform(state: &FockState, t: &ModeTransform, modes: (ModeIndex, ModeIndex)) -> Result<FockState> {
    let (out, leakage) = apply_transform_with_leakage(state, t, modes)?;
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::TruncationInsufficient {
            what: "transform leakage",
            mass: leakage,
            limit: LEAKAGE_LIMIT,
            cutoff: state.cutoff(),
        });
    }
    Ok(out)
}

/// Like [`apply_transform`] but never fails on leakage; returns the leaked mass instead.
pub fn apply_transform_with_leakage(
    state: &FockState,
    t: &ModeTransform,
    modes: (ModeIndex, ModeIndex),
) -> Result<(FockState, f64)> {
    let m = state.num_modes();
    let p = modes.0.check(m)?;
    let q = modes.1.check(m)?;
    if p == q {
        return Err(Error::InvalidArgument("transform modes must be distinct".into()));
    }
    let d = state.cutoff();
    let stride_p = d.pow((m - 1 - p) as u32);
    let stride_q = d.pow((m - 1 - q) as u32);

    let max_photons = 2 * (d - 1);
    let blocks: Vec<_> = {
        let mut v = Vec::with_capacity(max_photons + 1);
        let mut block = vec![vec![Complex64::new(1.0, 0.0)]];
        v.push(block.clone());
        for n in 1..=max_photons {
            block = t.next_block(&block, n);
            v.push(block.clone());
        }
        v
    };

    let src = state.amplitudes();
    let mut out = state.clone();
    let dst = out.amplitudes_mut();
    dst.iter_mut().for_each(|z| *z = ZERO);
    let mut leakage = 0.0;

    // Spectator configurations: every index whose p and q levels are zero.
    let spectators = (0..state.dim()).filter(|&i| {
        fock::level_at(i, p, m, d) == 0 && fock::level_at(i, q, m, d) == 0
    });
    for base in spectators {
        let at = |np: usize, nq: usize| base + np * stride_p + nq * stride_q;
        for (n, block) in blocks.iter().enumerate() {
            let k_lo = n.saturating_sub(d - 1);
            let k_hi = n.min(d - 1);
            let input: Vec<(usize, Complex64)> = (k_lo..=k_hi)
                .map(|k| (k, src[at(k, n - k)]))
                .filter(|(_, a)| *a != ZERO)
                .collect();
            if input.is_empty() {
                continue;
            }
            for (mo, row) in block.iter().enumerate() {
                let amp: Complex64 = input.iter().map(|&(k, a)| row[k] * a).sum();
                if mo < d && n - mo < d {
                    dst[at(mo, n - mo)] = amp;
                } else {
                    leakage += amp.norm_sqr();
                }
            }
        }
    }
    Ok((out, leakage))
}

/// `(|0>_a |1>_b + |1>_a |0>_b) / sqrt 2`.
pub fn prepare_entangled(cutoff: usize) -> Result<FockState> {
    let mut state = fock::vacuum(2, cutoff)?;
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let amps = state.amplitudes_mut();
    amps[0] = ZERO;
    amps[1] = h; // |0, 1>
    amps[cutoff] = h; // |1, 0>
    Ok(state)
}

/// Output of the interferometer for the entangled pair in `(a, b)` and `|gamma>` in `c`.
pub fn build_circuit_state(gamma: Complex64, phi: f64, cutoff: usize) -> Result<(FockState, f64)> {
    let input = fock::tensor(&prepare_entangled(cutoff)?, &fock::coherent_state(gamma, cutoff)?)?;
    let (out, leakage) = apply_transform_with_leakage(&input, &mz_transform(phi), (MODE_B, MODE_C))?;
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::TruncationInsufficient {
            what: "transform leakage",
            mass: leakage,
            limit: LEAKAGE_LIMIT,
            cutoff,
        });
    }
    Ok((out, leakage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, number_state, tensor, vacuum};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn mz_special_angles() {
        let id = mz_transform(FRAC_PI_2);
        assert!((id.matrix() - Matrix2::identity()).iter().all(|z| z.norm() < 1e-15));
        let swap = mz_transform(0.0);
        assert_eq!(*swap.matrix(), Matrix2::new(c(0.0), c(-1.0), c(1.0), c(0.0)));
        let t = mz_transform(0.7);
        assert!(t.unitarity_defect() < 1e-15);
        assert!(t.matrix().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn non_unitary_rejected() {
        let m = Matrix2::new(c(1.0), c(1.0), c(0.0), c(1.0));
        assert!(ModeTransform::new(m).is_err());
    }

    #[test]
    fn vacuum_is_fixed() {
        let v = vacuum(2, 5).unwrap();
        let out = apply_transform(&v, &mz_transform(0.3), (MODE_A, ModeIndex::unchecked(1))).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn single_photon_follows_creation_operator_map() {
        // b† -> sin(phi) b† - cos(phi) c†
        let phi = 0.4;
        let s = tensor(&number_state(1, 3).unwrap(), &vacuum(1, 3).unwrap()).unwrap();
        let out = apply_transform(&s, &mz_transform(phi), (MODE_A, ModeIndex::unchecked(1))).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1, 0]).unwrap().re, phi.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[0, 1]).unwrap().re, -phi.cos(), epsilon = 1e-15);
    }

    #[test]
    fn coherent_splits_with_cos_into_b() {
        let (gamma, phi) = (c(1.1), 0.8);
        let d = fock::auto_cutoff(1.1) + 2;
        let input = tensor(&vacuum(1, d).unwrap(), &coherent_state(gamma, d).unwrap()).unwrap();
        let out = apply_transform(&input, &mz_transform(phi), (MODE_A, ModeIndex::unchecked(1))).unwrap();
        let expect = tensor(
            &coherent_state(gamma * phi.cos(), d).unwrap(),
            &coherent_state(gamma * phi.sin(), d).unwrap(),
        )
        .unwrap();
        let overlap = expect.inner(&out).unwrap().norm_sqr();
        assert!(1.0 - overlap < 1e-8, "overlap deficit {}", 1.0 - overlap);
    }

    #[test]
    fn two_photon_block_is_unitary() {
        let t = ModeTransform::new(Matrix2::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.6, 0.0),
        ))
        .unwrap();
        for n in 0..6 {
            let b = t.photon_block(n);
            for i in 0..=n {
                for j in 0..=n {
                    let dot: Complex64 = (0..=n).map(|m| b[m][i].conj() * b[m][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn leakage_reported_when_cutoff_too_small() {
        // |2,2> at cutoff 3 spreads onto |4,0> and |0,4>.
        let s = tensor(&number_state(2, 3).unwrap(), &number_state(2, 3).unwrap()).unwrap();
        let bs = mz_transform(std::f64::consts::FRAC_PI_4);
        let (_, leak) = apply_transform_with_leakage(&s, &bs, (MODE_A, ModeIndex::unchecked(1))).unwrap();
        assert!(leak > 0.1);
        assert!(matches!(
            apply_transform(&s, &bs, (MODE_A, ModeIndex::unchecked(1))),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn transform_mode_errors() {
        let s = vacuum(2, 3).unwrap();
        let t = mz_transform(0.1);
        assert!(apply_transform(&s, &t, (MODE_A, MODE_A)).is_err());
        assert!(apply_transform(&s, &t, (MODE_A, MODE_C)).is_err());
    }

    #[test]
    fn entangled_pair() {
        let s = prepare_entangled(3).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
        assert_eq!(s.amplitude(&[1, 1]).unwrap(), c(0.0));
        let red = fock::partial_trace(&fock::to_density(&s), &[MODE_A]).unwrap();
        assert_abs_diff_eq!(red.get(0, 0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.get(1, 1).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.get(0, 1).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn circuit_state_at_zero_gamma() {
        // (|1,0,0> + sin|0,1,0> - cos|0,0,1>)/sqrt 2
        let phi = 1.3;
        let (s, _) = build_circuit_state(c(0.0), phi, 4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0); 64];
        amps[16] = c(h);
        amps[4] = c(h * phi.sin());
        amps[1] = c(-h * phi.cos());
        let expect = FockState::from_amplitudes(3, 4, amps).unwrap();
        assert_abs_diff_eq!(expect.inner(&s).unwrap().norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn circuit_state_identity_interferometer() {
        let gamma = c(0.7);
        let d = fock::auto_cutoff(0.7);
        let (s, _) = build_circuit_state(gamma, FRAC_PI_2, d).unwrap();
        let expect = tensor(&prepare_entangled(d).unwrap(), &coherent_state(gamma, d).unwrap()).unwrap();
        let worst = s
            .amplitudes()
            .iter()
            .zip(expect.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-15);
    }

    #[test]
    fn circuit_state_is_normalized() {
        let d = fock::auto_cutoff(1.0);
        let (s, _) = build_circuit_state(c(1.0), 0.6, d).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-9);
    }
}
