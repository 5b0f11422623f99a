//! A ((2,3)) quantum threshold scheme on qutrits.
//!
//! One secret qutrit is spread across three: basis state |s⟩ becomes the
//! uniform superposition over |a, a+s, a+2s⟩ (indices mod 3), extended
//! linearly. Any one share alone carries the maximally mixed state I/3 —
//! no information — while any two shares, run through a two-gate
//! disentangling circuit, surrender the secret exactly on the pair's
//! second register. The leftover registers settle into the same maximally
//! correlated pair state regardless of the secret.
//!
//! States are dense complex amplitude vectors: 3 for a qutrit, 27 for the
//! full three-qutrit system indexed as 9·q₁ + 3·q₂ + q₃.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QutritError {
    #[error("state is not normalized: squared norm {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("pair does not determine a qutrit: share purity {purity}")]
    NotAnEncoding { purity: f64 },
}

/// Tolerance for state-vector normalization checks.
const NORM_TOLERANCE: f64 = 1e-9;

/// Purity threshold below which a post-circuit pair is rejected: the
/// nominally recovered register is still entangled with the rest.
const PURITY_THRESHOLD: f64 = 1.0 - 1e-9;

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

fn check_norm(norm_sq: f64) -> Result<(), QutritError> {
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        return Err(QutritError::NotNormalized { norm_sq });
    }
    Ok(())
}

/// One qutrit: three complex amplitudes, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritState {
    amps: [Complex64; 3],
}

impl QutritState {
    pub fn new(amps: [Complex64; 3]) -> Result<QutritState, QutritError> {
        check_norm(amps.iter().map(|a| a.norm_sqr()).sum())?;
        Ok(QutritState { amps })
    }

    /// Computational basis state |s⟩.
    pub fn basis(s: usize) -> QutritState {
        let mut amps = [Complex64::ZERO; 3];
        amps[s % 3] = Complex64::ONE;
        QutritState { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; 3] {
        &self.amps
    }
}

/// Two qutrits: nine amplitudes indexed 3·first + second.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQutritState {
    amps: [Complex64; 9],
}

impl TwoQutritState {
    pub fn new(amps: [Complex64; 9]) -> Result<TwoQutritState, QutritError> {
        check_norm(amps.iter().map(|a| a.norm_sqr()).sum())?;
        Ok(TwoQutritState { amps })
    }

    /// The state the residual registers always land in: (1/√3) Σ_t |t,t⟩.
    pub fn maximally_correlated() -> TwoQutritState {
        let mut amps = [Complex64::ZERO; 9];
        for t in 0..3 {
            amps[3 * t + t] = Complex64::new(INV_SQRT3, 0.0);
        }
        TwoQutritState { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; 9] {
        &self.amps
    }
}

/// Three qutrits: 27 amplitudes indexed 9·q₁ + 3·q₂ + q₃.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amps: [Complex64; 27],
}

pub fn basis_index(q1: usize, q2: usize, q3: usize) -> usize {
    9 * q1 + 3 * q2 + q3
}

fn unpack_index(idx: usize) -> [usize; 3] {
    [idx / 9, idx / 3 % 3, idx % 3]
}

impl JointState {
    pub fn new(amps: [Complex64; 27]) -> Result<JointState, QutritError> {
        check_norm(amps.iter().map(|a| a.norm_sqr()).sum())?;
        Ok(JointState { amps })
    }

    pub fn amplitudes(&self) -> &[Complex64; 27] {
        &self.amps
    }
}

/// 3×3 complex density matrix of a single share.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3 {
    pub entries: [[Complex64; 3]; 3],
}

impl DensityMatrix3 {
    /// Largest entrywise deviation from I/3.
    pub fn deviation_from_maximally_mixed(&self) -> f64 {
        let third = Complex64::new(1.0 / 3.0, 0.0);
        let mut worst = 0.0f64;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &entry) in row.iter().enumerate() {
                let expected = if i == j { third } else { Complex64::ZERO };
                worst = worst.max((entry - expected).norm());
            }
        }
        worst
    }
}

/// Spreads one qutrit across three: |s⟩ ↦ (1/√3) Σ_a |a, a+s, a+2s⟩,
/// extended linearly over superpositions.
pub fn encode(secret: &QutritState) -> JointState {
    let mut amps = [Complex64::ZERO; 27];
    for (s, &alpha) in secret.amps.iter().enumerate() {
        for a in 0..3 {
            let idx = basis_index(a, (a + s) % 3, (a + 2 * s) % 3);
            amps[idx] += alpha * INV_SQRT3;
        }
    }
    JointState { amps }
}

/// Partial trace onto one share (1, 2 or 3): what that share alone holds.
pub fn reduced_density(joint: &JointState, share: usize) -> DensityMatrix3 {
    assert!((1..=3).contains(&share), "share index must be 1, 2 or 3");
    let pos = share - 1;
    let mut entries = [[Complex64::ZERO; 3]; 3];
    for (idx_a, &amp_a) in joint.amps.iter().enumerate() {
        let regs_a = unpack_index(idx_a);
        for (idx_b, &amp_b) in joint.amps.iter().enumerate() {
            let regs_b = unpack_index(idx_b);
            let mut others_match = true;
            for r in 0..3 {
                if r != pos && regs_a[r] != regs_b[r] {
                    others_match = false;
                    break;
                }
            }
            if others_match {
                entries[regs_a[pos]][regs_b[pos]] += amp_a * amp_b.conj();
            }
        }
    }
    DensityMatrix3 { entries }
}

/// Which two shares take part in reconstruction. Only the cyclic pairs are
/// meaningful: the disentangling circuit is written for share order
/// (first, second) and the cycle keeps the residual pair uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharePair {
    OneTwo,
    TwoThree,
    ThreeOne,
}

impl SharePair {
    /// Zero-based register positions (first, second) of the pair.
    fn registers(self) -> (usize, usize) {
        match self {
            SharePair::OneTwo => (0, 1),
            SharePair::TwoThree => (1, 2),
            SharePair::ThreeOne => (2, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SharePair::OneTwo => "1,2",
            SharePair::TwoThree => "2,3",
            SharePair::ThreeOne => "3,1",
        }
    }

    pub fn parse(text: &str) -> Option<SharePair> {
        match text {
            "1,2" => Some(SharePair::OneTwo),
            "2,3" => Some(SharePair::TwoThree),
            "3,1" => Some(SharePair::ThreeOne),
            _ => None,
        }
    }
}

/// The two-gate disentangling circuit on the pair's registers, as a basis
/// permutation of the full joint state: first |a,b⟩ ↦ |a, b−a⟩, then
/// |a,b⟩ ↦ |a+2b, b⟩ (mod 3).
pub fn disentangle(joint: &JointState, pair: SharePair) -> JointState {
    let (first, second) = pair.registers();
    let mut amps = [Complex64::ZERO; 27];
    for (idx, &amp) in joint.amps.iter().enumerate() {
        let mut regs = unpack_index(idx);
        let a = regs[first];
        let b = regs[second];
        let b2 = (b + 3 - a) % 3;
        let a2 = (a + 2 * b2) % 3;
        regs[first] = a2;
        regs[second] = b2;
        amps[basis_index(regs[0], regs[1], regs[2])] += amp;
    }
    JointState { amps }
}

/// Recovers the secret from two shares.
///
/// Runs the disentangling circuit on the pair, then checks that the pair's
/// second register really factored out (its reduced state must be pure);
/// otherwise the input was not an encoding and the call fails. On success
/// returns the recovered qutrit together with the residual two-qutrit
/// state of the untouched registers. The split's phase convention is fixed
/// by rotating the residual's largest amplitude to the positive real axis,
/// which for true encodings leaves the recovered amplitudes exactly as
/// they were encoded.
pub fn reconstruct(
    joint: &JointState,
    pair: SharePair,
) -> Result<(QutritState, TwoQutritState), QutritError> {
    let rotated = disentangle(joint, pair);
    let (_, second) = pair.registers();
    let others: Vec<usize> = (0..3).filter(|&r| r != second).collect();

    // Flatten to a 3×9 matrix: row = recovered register value, column =
    // joint value of the two residual registers (in register order).
    let mut m = [[Complex64::ZERO; 9]; 3];
    for (idx, &amp) in rotated.amps.iter().enumerate() {
        let regs = unpack_index(idx);
        m[regs[second]][3 * regs[others[0]] + regs[others[1]]] += amp;
    }

    // Purity of the recovered register: tr(ρ²) with ρ = M·M†.
    let mut rho = [[Complex64::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (a, b) in m[i].iter().zip(&m[j]) {
                rho[i][j] += a * b.conj();
            }
        }
    }
    let purity: f64 = rho
        .iter()
        .flatten()
        .map(|entry| entry.norm_sqr())
        .sum();
    if purity < PURITY_THRESHOLD {
        return Err(QutritError::NotAnEncoding { purity });
    }

    // Rank-one extraction: take the heaviest column as the recovered
    // direction, then project every column onto it for the residual.
    let col_norm = |o: usize| (0..3).map(|s| m[s][o].norm_sqr()).sum::<f64>();
    let best = (0..9)
        .max_by(|&a, &b| col_norm(a).partial_cmp(&col_norm(b)).expect("finite"))
        .expect("nonempty");
    let scale = col_norm(best).sqrt();
    let v: Vec<Complex64> = (0..3).map(|s| m[s][best] / scale).collect();
    let mut w: Vec<Complex64> = (0..9)
        .map(|o| (0..3).map(|s| v[s].conj() * m[s][o]).sum())
        .collect();

    // Canonical phase: residual's largest amplitude real and positive.
    let anchor = (0..9)
        .max_by(|&a, &b| w[a].norm().partial_cmp(&w[b].norm()).expect("finite"))
        .expect("nonempty");
    let phase = w[anchor] / w[anchor].norm();
    let v: Vec<Complex64> = v.iter().map(|&c| c * phase).collect();
    for entry in &mut w {
        *entry *= phase.conj();
    }

    // Exact renormalization guards against accumulated float drift.
    let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let wn = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let recovered = QutritState::new([v[0] / vn, v[1] / vn, v[2] / vn])?;
    let mut res = [Complex64::ZERO; 9];
    for (slot, value) in res.iter_mut().zip(&w) {
        *slot = value / wn;
    }
    Ok((recovered, TwoQutritState::new(res)?))
}

/// Overlap fidelity |⟨a|b⟩|² between two qutrits.
pub fn fidelity(a: &QutritState, b: &QutritState) -> f64 {
    let inner: Complex64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum();
    inner.norm_sqr()
}

/// Overlap fidelity |⟨a|b⟩|² between two-qutrit states.
pub fn fidelity_pair(a: &TwoQutritState, b: &TwoQutritState) -> f64 {
    let inner: Complex64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum();
    inner.norm_sqr()
}

/// Whether a ((k, n)) quantum threshold scheme is admissible: disjoint
/// quorums would clone the secret, so n < 2k is required.
pub fn threshold_bound_check(k: usize, n: usize) -> bool {
    n < 2 * k
}
