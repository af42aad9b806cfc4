//! Rotation-cipher authentication with a position-derived key `K_P`.
//!
//! `P` rotates fresh qubits by `s_i θ_P`, `V0` adds `t_i θ_V`, `P` strips his
//! part and adds `(p_i ⊕ m_i) π/2`, and `V0` strips hers and measures.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{MAX_QUBITS, RotationAngle, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthSession {
    pub z_p: u32,
    pub z_v: u32,
    /// Prover's rotation multipliers, each in `[0, 4^z_p)`.
    pub s: Vec<u64>,
    /// Verifier's rotation multipliers, each in `[0, 4^z_v)`.
    pub t: Vec<u64>,
    /// Message bits.
    pub m: Vec<u8>,
}

fn period(z: u32) -> u64 {
    1u64 << (2 * z)
}

impl AuthSession {
    pub fn new(z_p: u32, z_v: u32, s: Vec<u64>, t: Vec<u64>, m: Vec<u8>) -> Result<Self> {
        RotationAngle::for_level(z_p)?;
        RotationAngle::for_level(z_v)?;
        let n = m.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::arg(format!("message length must be 1..={MAX_QUBITS}, got {n}")));
        }
        if s.len() != n || t.len() != n {
            return Err(Error::arg("S, T and M must have equal length"));
        }
        if m.iter().any(|&b| b > 1) {
            return Err(Error::arg("message bits must be 0 or 1"));
        }
        if s.iter().any(|&x| x >= period(z_p)) || t.iter().any(|&x| x >= period(z_v)) {
            return Err(Error::arg("rotation multipliers must lie in [0, 4^z)"));
        }
        Ok(AuthSession { z_p, z_v, s, t, m })
    }

    /// Fresh session with `S`, `T` and `M` drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(z_p: u32, z_v: u32, len: usize, rng: &mut R) -> Result<Self> {
        RotationAngle::for_level(z_p)?;
        RotationAngle::for_level(z_v)?;
        let s = (0..len).map(|_| rng.random_range(0..period(z_p))).collect();
        let t = (0..len).map(|_| rng.random_range(0..period(z_v))).collect();
        let m = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        Self::new(z_p, z_v, s, t, m)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn theta_p(&self) -> RotationAngle {
        RotationAngle::for_level(self.z_p).expect("validated on construction")
    }

    pub fn theta_v(&self) -> RotationAngle {
        RotationAngle::for_level(self.z_v).expect("validated on construction")
    }

    fn rotate_each(&self, state: &mut StateVector, angle: impl Fn(usize) -> f64) -> Result<()> {
        if state.num_qubits() != self.len() {
            return Err(Error::arg(format!("state has {} qubits, session needs {}", state.num_qubits(), self.len())));
        }
        for q in 0..self.len() {
            state.apply_rotation(q, RotationAngle(angle(q)))?;
        }
        Ok(())
    }

    fn check_key(&self, key: &[u8]) -> Result<()> {
        if key.len() != self.len() {
            return Err(Error::arg(format!("key has {} bits, session needs {}", key.len(), self.len())));
        }
        Ok(())
    }

    /// `|ψ_S⟩`.
    pub fn auth_encode_s(&self) -> Result<StateVector> {
        let mut st = StateVector::zero(self.len())?;
        let th = self.theta_p().0;
        self.rotate_each(&mut st, |i| self.s[i] as f64 * th)?;
        Ok(st)
    }

    /// `|ψ_ST⟩` from `|ψ_S⟩`.
    pub fn auth_counter_encode(&self, mut state: StateVector) -> Result<StateVector> {
        let th = self.theta_v().0;
        self.rotate_each(&mut state, |i| self.t[i] as f64 * th)?;
        Ok(state)
    }

    /// The prover removes his own rotations.
    pub fn auth_strip_s(&self, mut state: StateVector) -> Result<StateVector> {
        let th = self.theta_p().0;
        self.rotate_each(&mut state, |i| -(self.s[i] as f64) * th)?;
        Ok(state)
    }

    /// `|ψ_TM⟩` from the stripped state.
    pub fn auth_encrypt_message(&self, mut state: StateVector, key: &[u8]) -> Result<StateVector> {
        self.check_key(key)?;
        self.rotate_each(&mut state, |i| f64::from((key[i] ^ self.m[i]) & 1) * FRAC_PI_2)?;
        Ok(state)
    }

    /// The verifier strips `T`, measures, and unmasks with `key`.
    pub fn auth_decode_verify<R: Rng + ?Sized>(&self, mut state: StateVector, key: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        self.check_key(key)?;
        let th = self.theta_v().0;
        self.rotate_each(&mut state, |i| -(self.t[i] as f64) * th)?;
        (0..self.len()).map(|q| Ok(state.measure_z(q, rng)? ^ key[q])).collect()
    }

    /// Both legs end to end; `prover_key` encrypts, `verifier_key` decodes.
    pub fn run<R: Rng + ?Sized>(&self, prover_key: &[u8], verifier_key: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        let st = self.auth_encode_s()?;
        let st = self.auth_counter_encode(st)?;
        let st = self.auth_strip_s(st)?;
        let st = self.auth_encrypt_message(st, prover_key)?;
        self.auth_decode_verify(st, verifier_key, rng)
    }
}

/// `R(angle)|0⟩` as a one-qubit state.
fn rotated(angle: f64) -> Result<StateVector> {
    let mut s = StateVector::zero(1)?;
    s.apply_rotation(0, RotationAngle(angle))?;
    Ok(s)
}

/// `|⟨ψ_s(θ)|ψ_{s'}(θ)⟩|` with `θ = π/4^z`, from explicit states.
pub fn pairwise_overlap(s: u64, s2: u64, z: u32) -> Result<f64> {
    let th = RotationAngle::for_level(z)?.0;
    Ok(rotated(s as f64 * th)?.inner(&rotated(s2 as f64 * th)?)?.norm())
}

/// `√(1 − |⟨ψ_s|ψ_{s+1}⟩|²)` for neighbouring multipliers.
pub fn nearest_neighbor_distance(z: u32) -> Result<f64> {
    let o = pairwise_overlap(0, 1, z)?;
    Ok((1.0 - o * o).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_s_leaves_vacuum() {
        let a = AuthSession::new(1, 1, vec![0, 0], vec![0, 0], vec![0, 1]).unwrap();
        assert!((a.auth_encode_s().unwrap().amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_qubit_level_one() {
        let a = AuthSession::new(1, 1, vec![1], vec![0], vec![0]).unwrap();
        let st = a.auth_encode_s().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((st.amplitudes()[0].re - h).abs() < 1e-12 && (st.amplitudes()[1].re - h).abs() < 1e-12);
    }

    #[test]
    fn pipeline_recovers_message() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = AuthSession::random(3, 5, 6, &mut rng).unwrap();
            let key: Vec<u8> = (0..6).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(a.run(&key, &key, &mut rng).unwrap(), a.m);
        }
    }

    #[test]
    fn wrong_key_bit_flips_message_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = AuthSession::random(2, 2, 4, &mut rng).unwrap();
        let key = vec![0, 1, 1, 0];
        let mut bad = key.clone();
        bad[2] ^= 1;
        let out = a.run(&key, &bad, &mut rng).unwrap();
        assert_eq!(out[2], a.m[2] ^ 1);
        assert_eq!(&out[..2], &a.m[..2]);
    }

    #[test]
    fn distances() {
        assert!((nearest_neighbor_distance(1).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(nearest_neighbor_distance(8).unwrap() < 1e-4);
    }

    #[test]
    fn bad_sessions_are_rejected() {
        assert!(AuthSession::new(0, 1, vec![0], vec![0], vec![0]).is_err());
        assert!(AuthSession::new(1, 1, vec![4], vec![0], vec![0]).is_err());
        assert!(AuthSession::new(1, 1, vec![0], vec![0, 1], vec![0]).is_err());
        let a = AuthSession::new(1, 1, vec![0], vec![0], vec![0]).unwrap();
        assert!(a.auth_encrypt_message(a.auth_encode_s().unwrap(), &[0, 1]).is_err());
    }
}
