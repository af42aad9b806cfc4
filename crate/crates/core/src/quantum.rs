//! Exact state-vector engine.
//!
//! Amplitudes are stored little-endian: qubit `q` is bit `q` of the basis
//! index. Everything here is pure linear algebra on at most [`MAX_QUBITS`]
//! qubits; randomness only enters through the caller's RNG at measurement.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;

/// Tolerance used for normalization and Bell classification.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Outcomes whose probability is this close to one are taken without
/// consuming randomness, which keeps every backend on the same random stream.
const CERTAIN: f64 = 1.0 - 1e-12;

/// Two-bit Bell state label `u_i u_j`:
/// `|β⟩ = (|0⟩|u_j⟩ + (−1)^{u_i} |1⟩|1⊕u_j⟩) / √2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BellLabel {
    pub phase: u8,
    pub parity: u8,
}

impl BellLabel {
    pub const B00: BellLabel = BellLabel { phase: 0, parity: 0 };
    pub const B01: BellLabel = BellLabel { phase: 0, parity: 1 };
    pub const B10: BellLabel = BellLabel { phase: 1, parity: 0 };
    pub const B11: BellLabel = BellLabel { phase: 1, parity: 1 };

    /// All four labels in canonical order 00, 01, 10, 11.
    pub const ALL: [BellLabel; 4] = [Self::B00, Self::B01, Self::B10, Self::B11];

    pub fn new(phase: u8, parity: u8) -> Self {
        BellLabel { phase: phase & 1, parity: parity & 1 }
    }

    pub fn from_index(index: usize) -> Self {
        Self::new((index >> 1) as u8, index as u8)
    }

    pub fn index(self) -> usize {
        ((self.phase << 1) | self.parity) as usize
    }

    /// Bitwise XOR of two labels.
    pub fn xor(self, other: BellLabel) -> BellLabel {
        BellLabel::new(self.phase ^ other.phase, self.parity ^ other.parity)
    }

    /// Label with its two bits exchanged.
    pub fn swapped(self) -> BellLabel {
        BellLabel::new(self.parity, self.phase)
    }

    /// The two bits as `[u_i, u_j]`.
    pub fn bits(self) -> [u8; 2] {
        [self.phase, self.parity]
    }

    /// Amplitude of `|first⟩|second⟩` in this Bell state.
    pub fn amplitude(self, first: u8, second: u8) -> f64 {
        if second == first ^ self.parity {
            if first == 1 && self.phase == 1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 }
        } else {
            0.0
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.phase, self.parity)
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        match b {
            [a @ (b'0' | b'1'), c @ (b'0' | b'1')] => Ok(BellLabel::new(a - b'0', c - b'0')),
            _ => Err(Error::arg(format!("bad Bell label {s:?}, expected two bits"))),
        }
    }
}

impl TryFrom<String> for BellLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BellLabel> for String {
    fn from(l: BellLabel) -> String {
        l.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    /// `X·Z`: Z applied first, then X.
    XZ,
}

impl Pauli {
    /// Pauli that moves a Bell pair's label by `delta` when applied to either qubit.
    /// X toggles the parity bit, Z toggles the phase bit.
    pub fn for_label_delta(delta: BellLabel) -> Pauli {
        match (delta.phase, delta.parity) {
            (0, 0) => Pauli::I,
            (0, _) => Pauli::X,
            (_, 0) => Pauli::Z,
            _ => Pauli::XZ,
        }
    }

    pub fn label_delta(self) -> BellLabel {
        match self {
            Pauli::I => BellLabel::B00,
            Pauli::X => BellLabel::B01,
            Pauli::Z => BellLabel::B10,
            Pauli::XZ => BellLabel::B11,
        }
    }
}

/// Rotation angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAngle(pub f64);

impl RotationAngle {
    /// `π / 4^z`, the base angle of the rotation cipher.
    pub fn for_level(z: u32) -> Result<Self> {
        if !(1..=31).contains(&z) {
            return Err(Error::arg(format!("rotation level z must be in 1..=31, got {z}")));
        }
        Ok(RotationAngle(std::f64::consts::PI / 4f64.powi(z as i32)))
    }

    pub fn scaled(self, k: f64) -> Self {
        RotationAngle(self.0 * k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::arg(format!("basis index {index} out of range")));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg(format!("amplitude count {len} is not a power of two ≥ 2")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_capacity(num_qubits)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < NORM_TOLERANCE {
            return Err(Error::arg("zero vector"));
        }
        Ok(StateVector { num_qubits, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::arg("inner product of registers with different sizes"));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check(q)?;
        let mask = 1 << q;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & mask != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    fn check_pair(&self, q1: usize, q2: usize) -> Result<()> {
        self.check(q1)?;
        self.check(q2)?;
        if q1 == q2 {
            return Err(Error::SameQubit(q1));
        }
        Ok(())
    }

    /// Applies a 2×2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        self.check(q)?;
        let mask = 1 << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    fn apply_real(&mut self, q: usize, m: [[f64; 2]; 2]) -> Result<()> {
        let c = |x: f64| Complex64::new(x, 0.0);
        self.apply_single(q, [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    /// Real rotation `[[cos θ, −sin θ], [sin θ, cos θ]]` in the `{|0⟩, |1⟩}` plane.
    pub fn apply_rotation(&mut self, q: usize, angle: RotationAngle) -> Result<()> {
        let (s, c) = angle.0.sin_cos();
        self.apply_real(q, [[c, -s], [s, c]])
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        let h = FRAC_1_SQRT_2;
        self.apply_real(q, [[h, h], [h, -h]])
    }

    pub fn apply_pauli(&mut self, q: usize, which: Pauli) -> Result<()> {
        match which {
            Pauli::I => self.check(q),
            Pauli::X => self.apply_real(q, [[0.0, 1.0], [1.0, 0.0]]),
            Pauli::Z => self.apply_real(q, [[1.0, 0.0], [0.0, -1.0]]),
            Pauli::XZ => self.apply_real(q, [[0.0, -1.0], [1.0, 0.0]]),
        }
    }

    /// Superdense encoding of `msg = (b0, b1)` on qubit `q`: `Z^{b0} X^{b1}`.
    /// On a Bell pair this moves the label by exactly `msg`.
    pub fn dense_encode(&mut self, q: usize, msg: BellLabel) -> Result<()> {
        self.apply_pauli(q, Pauli::for_label_delta(msg))
    }

    /// Born-rule measurement of qubit `q` in the computational basis.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8> {
        let p1 = self.prob_one(q)?;
        let bit = u8::from(rng.random::<f64>() < p1);
        self.collapse_z(q, bit)?;
        Ok(bit)
    }

    /// Projects qubit `q` onto `|bit⟩` and renormalizes.
    pub fn collapse_z(&mut self, q: usize, bit: u8) -> Result<f64> {
        self.check(q)?;
        let mask = 1 << q;
        let want = if bit == 1 { mask } else { 0 };
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == want {
                p += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if p < 1e-15 {
            return Err(Error::ZeroProbability(format!("qubit {q} = {bit}")));
        }
        let scale = 1.0 / p.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(p)
    }

    /// Overlaps `c_L(rest) = ⟨β_L|_(q1,q2) ψ` for every label, indexed by the
    /// basis index with the bits of `q1` and `q2` cleared.
    fn bell_components(&self, q1: usize, q2: usize) -> Result<[Vec<(usize, Complex64)>; 4]> {
        self.check_pair(q1, q2)?;
        let (m1, m2) = (1 << q1, 1 << q2);
        let mut out: [Vec<(usize, Complex64)>; 4] = Default::default();
        for rest in 0..self.amps.len() {
            if rest & (m1 | m2) != 0 {
                continue;
            }
            let a = |x: usize, y: usize| self.amps[rest | (x * m1) | (y * m2)];
            for label in BellLabel::ALL {
                let mut c = Complex64::new(0.0, 0.0);
                for x in 0..2u8 {
                    for y in 0..2u8 {
                        let w = label.amplitude(x, y);
                        if w != 0.0 {
                            c += a(x as usize, y as usize) * w;
                        }
                    }
                }
                out[label.index()].push((rest, c));
            }
        }
        Ok(out)
    }

    /// Projector weights of the four Bell outcomes on `(q1, q2)`, in label order.
    pub fn bell_weights(&self, q1: usize, q2: usize) -> Result<[f64; 4]> {
        let comps = self.bell_components(q1, q2)?;
        Ok(std::array::from_fn(|i| comps[i].iter().map(|(_, c)| c.norm_sqr()).sum()))
    }

    fn project_bell(&mut self, q1: usize, q2: usize, label: BellLabel, comps: &[(usize, Complex64)], p: f64) {
        let (m1, m2) = (1 << q1, 1 << q2);
        let scale = 1.0 / p.sqrt();
        self.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for &(rest, c) in comps {
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let w = label.amplitude(x, y);
                    if w != 0.0 {
                        self.amps[rest | (x as usize * m1) | (y as usize * m2)] = c * w * scale;
                    }
                }
            }
        }
    }

    /// Bell state measurement on `(q1, q2)`. The measured pair stays in the
    /// register, left in the outcome Bell state.
    pub fn bsm<R: Rng + ?Sized>(&mut self, q1: usize, q2: usize, rng: &mut R) -> Result<BellLabel> {
        let comps = self.bell_components(q1, q2)?;
        let weights: [f64; 4] = std::array::from_fn(|i| comps[i].iter().map(|(_, c)| c.norm_sqr()).sum());
        let label = sample_label(&weights, rng);
        let p = weights[label.index()];
        if p < 1e-15 {
            return Err(Error::ZeroProbability(format!("Bell outcome {label} on ({q1},{q2})")));
        }
        self.project_bell(q1, q2, label, &comps[label.index()], p);
        Ok(label)
    }

    /// Bell state measurement with the outcome fixed to `label`. Returns the
    /// branch probability; fails if the branch is impossible.
    pub fn bsm_forced(&mut self, q1: usize, q2: usize, label: BellLabel) -> Result<f64> {
        let comps = self.bell_components(q1, q2)?;
        let p: f64 = comps[label.index()].iter().map(|(_, c)| c.norm_sqr()).sum();
        if p < 1e-12 {
            return Err(Error::ZeroProbability(format!("forced Bell outcome {label} on ({q1},{q2})")));
        }
        self.project_bell(q1, q2, label, &comps[label.index()], p);
        Ok(p)
    }

    /// Label of the pair `(q1, q2)` when it is, up to global phase, a Bell
    /// state in product with the rest of the register.
    pub fn bell_label_of(&self, q1: usize, q2: usize) -> Result<Option<BellLabel>> {
        let w = self.bell_weights(q1, q2)?;
        let total: f64 = w.iter().sum();
        Ok(BellLabel::ALL.into_iter().find(|l| (w[l.index()] - total).abs() <= NORM_TOLERANCE && total > 0.5))
    }
}

/// Samples a label from the four weights with a single uniform draw, unless
/// one outcome is certain.
pub(crate) fn sample_label<R: Rng + ?Sized>(weights: &[f64; 4], rng: &mut R) -> BellLabel {
    if let Some(i) = weights.iter().position(|&w| w >= CERTAIN) {
        return BellLabel::from_index(i);
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return BellLabel::from_index(i);
        }
    }
    // rounding left u just above the cumulative sum
    BellLabel::from_index(weights.iter().rposition(|&w| w > 0.0).unwrap_or(3))
}

/// Unentangled qubits held as one single-qubit state each, so their cost is
/// linear in the qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    qubits: Vec<StateVector>,
}

impl ProductState {
    /// `|b_0 b_1 ...⟩` with qubit `i` holding `bits[i]`.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let qubits = bits.iter().map(|&b| StateVector::basis(1, usize::from(b))).collect::<Result<_>>()?;
        Ok(ProductState { qubits })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn qubit(&self, q: usize) -> Result<&StateVector> {
        self.qubits.get(q).ok_or(Error::QubitOutOfRange { index: q, num_qubits: self.qubits.len() })
    }

    fn qubit_mut(&mut self, q: usize) -> Result<&mut StateVector> {
        let n = self.qubits.len();
        self.qubits.get_mut(q).ok_or(Error::QubitOutOfRange { index: q, num_qubits: n })
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        self.qubit_mut(q)?.apply_hadamard(0)
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8> {
        self.qubit_mut(q)?.measure_z(0, rng)
    }

    /// Dense form; qubit `i` of the product is qubit `i` of the register.
    pub fn to_state_vector(&self) -> Result<StateVector> {
        let (first, rest) = self.qubits.split_first().ok_or(Error::Capacity { requested: 0, max: MAX_QUBITS })?;
        rest.iter().try_fold(first.clone(), |acc, q| tensor(&acc, q))
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity { requested: n, max: MAX_QUBITS });
    }
    Ok(())
}

/// Two-qubit Bell state; qubit 0 is the first ket, qubit 1 the second.
pub fn make_bell(label: BellLabel) -> StateVector {
    let amps = (0..4)
        .map(|i| Complex64::new(label.amplitude((i & 1) as u8, (i >> 1) as u8), 0.0))
        .collect();
    StateVector { num_qubits: 2, amps }
}

/// Kronecker product; qubits of `b` are placed above those of `a`.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let n = a.num_qubits + b.num_qubits;
    check_capacity(n)?;
    let mut amps = Vec::with_capacity(1 << n);
    for hb in &b.amps {
        for la in &a.amps {
            amps.push(la * hb);
        }
    }
    Ok(StateVector { num_qubits: n, amps })
}

/// Product of Bell pairs placed on arbitrary qubits of an `n`-qubit register.
/// Each entry is `(first, second, label)`; unlisted qubits are `|0⟩`.
pub fn bell_product(num_qubits: usize, pairs: &[(usize, usize, BellLabel)]) -> Result<StateVector> {
    check_capacity(num_qubits)?;
    let mut used = 0usize;
    for &(a, b, _) in pairs {
        for q in [a, b] {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { index: q, num_qubits });
            }
            if used & (1 << q) != 0 {
                return Err(Error::SameQubit(q));
            }
            used |= 1 << q;
        }
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
    // enumerate the 4^k nonzero terms
    let k = pairs.len();
    for combo in 0..(1usize << (2 * k)) {
        let mut idx = 0usize;
        let mut amp = 1.0;
        for (j, &(a, b, label)) in pairs.iter().enumerate() {
            let x = ((combo >> (2 * j)) & 1) as u8;
            let y = ((combo >> (2 * j + 1)) & 1) as u8;
            amp *= label.amplitude(x, y);
            idx |= (x as usize) << a | (y as usize) << b;
        }
        if amp != 0.0 {
            amps[idx] += Complex64::new(amp, 0.0);
        }
    }
    Ok(StateVector { num_qubits, amps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn close(a: Complex64, b: f64) -> bool {
        (a - Complex64::new(b, 0.0)).norm() < EPS
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let amps = (0..1 << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn bell_states_match_their_kets() {
        let h = FRAC_1_SQRT_2;
        let b00 = make_bell(BellLabel::B00);
        assert!(close(b00.amps[0], h) && close(b00.amps[3], h));
        assert!(close(b00.amps[1], 0.0) && close(b00.amps[2], 0.0));
        // (|01⟩ − |10⟩)/√2: |0⟩_first|1⟩_second is index 2
        let b11 = make_bell(BellLabel::B11);
        assert!(close(b11.amps[2], h) && close(b11.amps[1], -h));
        for l in BellLabel::ALL {
            assert!((make_bell(l).norm_sqr() - 1.0).abs() < EPS);
        }
    }

    #[test]
    fn label_strings_round_trip() {
        for l in BellLabel::ALL {
            assert_eq!(l.to_string().parse::<BellLabel>().unwrap(), l);
        }
        assert!("2x".parse::<BellLabel>().is_err());
        assert!("010".parse::<BellLabel>().is_err());
        assert_eq!(serde_json::to_string(&BellLabel::B10).unwrap(), "\"10\"");
    }

    #[test]
    fn tensor_places_second_factor_above() {
        let plus = {
            let mut s = StateVector::zero(1).unwrap();
            s.apply_hadamard(0).unwrap();
            s
        };
        let zero = StateVector::zero(1).unwrap();
        let t = tensor(&plus, &zero).unwrap();
        assert!(close(t.amps[0], FRAC_1_SQRT_2) && close(t.amps[1], FRAC_1_SQRT_2));
        assert!(close(t.amps[2], 0.0) && close(t.amps[3], 0.0));

        let big = StateVector::zero(10).unwrap();
        assert!(matches!(tensor(&big, &StateVector::zero(7).unwrap()), Err(Error::Capacity { requested: 17, .. })));
    }

    #[test]
    fn gates_on_basis_states() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_rotation(0, RotationAngle(std::f64::consts::FRAC_PI_2)).unwrap();
        assert!(close(s.amps[1], 1.0));

        let mut s = StateVector::zero(1).unwrap();
        s.apply_pauli(0, Pauli::X).unwrap();
        assert!(close(s.amps[1], 1.0));

        // H^y|x⟩ with x = y = 1
        let mut s = StateVector::basis(1, 1).unwrap();
        s.apply_hadamard(0).unwrap();
        assert!(close(s.amps[0], FRAC_1_SQRT_2) && close(s.amps[1], -FRAC_1_SQRT_2));
    }

    #[test]
    fn involutions_and_rotation_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let psi = random_state(3, &mut rng);
            let mut s = psi.clone();
            s.apply_hadamard(1).unwrap();
            s.apply_hadamard(1).unwrap();
            s.apply_pauli(2, Pauli::Z).unwrap();
            s.apply_pauli(2, Pauli::Z).unwrap();
            assert!((s.fidelity(&psi).unwrap() - 1.0).abs() < EPS);

            let (a, b) = (rng.random::<f64>() * 7.0, rng.random::<f64>() * 7.0);
            let mut ab = psi.clone();
            ab.apply_rotation(0, RotationAngle(a)).unwrap();
            ab.apply_rotation(0, RotationAngle(b)).unwrap();
            let mut sum = psi.clone();
            sum.apply_rotation(0, RotationAngle(a + b)).unwrap();
            let mut ba = psi.clone();
            ba.apply_rotation(0, RotationAngle(b)).unwrap();
            ba.apply_rotation(0, RotationAngle(a)).unwrap();
            for i in 0..8 {
                assert!((ab.amps[i] - sum.amps[i]).norm() < EPS);
                assert!((ab.amps[i] - ba.amps[i]).norm() < EPS);
            }
            let mut undo = psi.clone();
            undo.apply_rotation(2, RotationAngle(a)).unwrap();
            undo.apply_rotation(2, RotationAngle(-a)).unwrap();
            assert!((undo.fidelity(&psi).unwrap() - 1.0).abs() < EPS);
        }
    }

    #[test]
    fn unitaries_preserve_norm_and_inverse_restores() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let psi = random_state(4, &mut rng);
            for p in [Pauli::X, Pauli::Z, Pauli::XZ] {
                let mut s = psi.clone();
                s.apply_pauli(1, p).unwrap();
                assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
                // (XZ)† = Z X, so undo XZ with Z then X
                match p {
                    Pauli::XZ => {
                        s.apply_pauli(1, Pauli::X).unwrap();
                        s.apply_pauli(1, Pauli::Z).unwrap();
                    }
                    _ => s.apply_pauli(1, p).unwrap(),
                }
                assert!((s.inner(&psi).unwrap().re - 1.0).abs() < EPS);
            }
        }
    }

    #[test]
    fn pauli_classification_on_b00() {
        // XZ on one half of β00 gives β11 up to phase
        let expected = [BellLabel::B00, BellLabel::B01, BellLabel::B10, BellLabel::B11];
        for (p, want) in [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ].into_iter().zip(expected) {
            for q in 0..2 {
                let mut s = make_bell(BellLabel::B00);
                s.apply_pauli(q, p).unwrap();
                assert_eq!(s.bell_label_of(0, 1).unwrap(), Some(want), "{p:?} on qubit {q}");
            }
        }
    }

    #[test]
    fn measure_z_is_deterministic_on_basis_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let mut s = StateVector::basis(1, 1).unwrap();
            assert_eq!(s.measure_z(0, &mut rng).unwrap(), 1);
        }
        for _ in 0..50 {
            let mut s = make_bell(BellLabel::B00);
            let a = s.measure_z(0, &mut rng).unwrap();
            let b = s.measure_z(1, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bsm_of_a_bell_state_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for l in BellLabel::ALL {
            let mut s = make_bell(l);
            assert_eq!(s.bsm(0, 1, &mut rng).unwrap(), l);
            assert_eq!(s.bsm(1, 0, &mut rng).unwrap(), l);
        }
        let mut s = make_bell(BellLabel::B00);
        assert!(matches!(s.bsm_forced(0, 1, BellLabel::B01), Err(Error::ZeroProbability(_))));
        assert!(matches!(s.bsm(0, 0, &mut rng), Err(Error::SameQubit(0))));
        assert!(matches!(s.bsm(0, 2, &mut rng), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn bell_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_state(4, &mut rng);
            let w = s.bell_weights(3, 1).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn post_measurement_pair_classifies_as_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut s = random_state(3, &mut rng);
            let l = s.bsm(2, 0, &mut rng).unwrap();
            assert_eq!(s.bell_label_of(2, 0).unwrap(), Some(l));
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn product_state_is_not_bell() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(s.bell_label_of(0, 1).unwrap(), None);
        assert_eq!(make_bell(BellLabel::B10).bell_label_of(0, 1).unwrap(), Some(BellLabel::B10));
    }

    #[test]
    fn bell_product_matches_tensor() {
        let a = BellLabel::B01;
        let b = BellLabel::B11;
        let t = tensor(&make_bell(a), &make_bell(b)).unwrap();
        let p = bell_product(4, &[(0, 1, a), (2, 3, b)]).unwrap();
        assert!((t.fidelity(&p).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn dense_coding_bijection_on_b00() {
        // encoding on either half shifts the label by the message
        for m in BellLabel::ALL {
            let mut s = make_bell(BellLabel::B00);
            s.dense_encode(0, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert_eq!(s.bsm(0, 1, &mut rng).unwrap(), m);
        }
    }

    #[test]
    fn product_state_matches_dense_register() {
        let mut p = ProductState::basis(&[1, 0, 1]).unwrap();
        let mut dense = StateVector::basis(3, 0b101).unwrap();
        p.apply_hadamard(1).unwrap();
        p.apply_hadamard(2).unwrap();
        dense.apply_hadamard(1).unwrap();
        dense.apply_hadamard(2).unwrap();
        let folded = p.to_state_vector().unwrap();
        for (a, b) in folded.amplitudes().iter().zip(dense.amplitudes()) {
            assert!((a - b).norm() < EPS);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(p.measure_z(0, &mut rng).unwrap(), 1);
        assert!(p.qubit(3).is_err());
    }
}
