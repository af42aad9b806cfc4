//! Two interchangeable engines for the entangled part of a protocol run.
//!
//! [`StateBackend`] keeps full amplitudes; [`LabelBackend`] keeps only pair
//! labels. Both draw exactly one uniform variate per uncertain Bell
//! measurement and none for certain ones, so a given seed drives them down
//! the same branch.

use std::collections::BTreeMap;

use rand::Rng;

use crate::bell::{PairRegistry, QubitId};
use crate::error::{Error, Result};
use crate::quantum::{BellLabel, Pauli, StateVector, make_bell, tensor};

/// Measurement basis for single qubits: computational (`Z`) or Hadamard (`X`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 { Basis::Z } else { Basis::X }
    }

    pub fn bit(self) -> u8 {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }
}

pub trait Backend: Default {
    const NAME: &'static str;

    fn prepare_pair(&mut self, first: QubitId, second: QubitId, label: BellLabel) -> Result<()>;

    /// Bell measurement on `(a, b)`; `forced` pins the branch.
    fn bsm<R: Rng + ?Sized>(
        &mut self,
        a: QubitId,
        b: QubitId,
        forced: Option<BellLabel>,
        rng: &mut R,
    ) -> Result<BellLabel>;

    fn pauli(&mut self, q: QubitId, p: Pauli) -> Result<()>;

    /// Label of `(a, b)` if they currently form a Bell pair.
    fn pair_label(&self, a: QubitId, b: QubitId) -> Result<Option<BellLabel>>;

    /// Single-qubit measurement in `basis`, leaving the qubit in the measured
    /// basis state.
    fn measure_basis<R: Rng + ?Sized>(&mut self, q: QubitId, basis: Basis, rng: &mut R) -> Result<u8> {
        let _ = (q, basis, rng);
        Err(Error::Unsupported { backend: Self::NAME, op: "single-qubit measurement" })
    }
}

#[derive(Debug, Clone, Default)]
pub struct LabelBackend {
    registry: PairRegistry,
}

impl LabelBackend {
    pub fn registry(&self) -> &PairRegistry {
        &self.registry
    }
}

impl Backend for LabelBackend {
    const NAME: &'static str = "label";

    fn prepare_pair(&mut self, first: QubitId, second: QubitId, label: BellLabel) -> Result<()> {
        self.registry.add_pair(first, second, label).map(|_| ())
    }

    fn bsm<R: Rng + ?Sized>(
        &mut self,
        a: QubitId,
        b: QubitId,
        forced: Option<BellLabel>,
        rng: &mut R,
    ) -> Result<BellLabel> {
        if let Some(label) = self.registry.label_of(a, b) {
            if forced.is_some_and(|f| f != label) {
                return Err(Error::ZeroProbability(format!("forced Bell outcome on pair ({a},{b}) labeled {label}")));
            }
            return self.registry.measure_pair(a, b);
        }
        match forced {
            Some(m) => {
                self.registry.swap_with(a, b, m)?;
                Ok(m)
            }
            None => self.registry.bsm_label(a, b, rng),
        }
    }

    fn pauli(&mut self, q: QubitId, p: Pauli) -> Result<()> {
        self.registry.apply_pauli(q, p)
    }

    fn pair_label(&self, a: QubitId, b: QubitId) -> Result<Option<BellLabel>> {
        Ok(self.registry.label_of(a, b))
    }
}

#[derive(Debug, Clone, Default)]
pub struct StateBackend {
    state: Option<StateVector>,
    index: BTreeMap<QubitId, usize>,
}

impl StateBackend {
    pub fn state(&self) -> Option<&StateVector> {
        self.state.as_ref()
    }

    pub fn qubit_index(&self, q: QubitId) -> Result<usize> {
        self.index.get(&q).copied().ok_or(Error::UnknownQubit(q))
    }

    fn state_mut(&mut self) -> Result<&mut StateVector> {
        self.state.as_mut().ok_or_else(|| Error::Invariant("empty register".into()))
    }
}

impl Backend for StateBackend {
    const NAME: &'static str = "state-vector";

    fn prepare_pair(&mut self, first: QubitId, second: QubitId, label: BellLabel) -> Result<()> {
        for q in [first, second] {
            if self.index.contains_key(&q) {
                return Err(Error::QubitInUse(q));
            }
        }
        if first == second {
            return Err(Error::arg(format!("pair needs two qubits, got {first} twice")));
        }
        let bell = make_bell(label);
        let base = self.state.as_ref().map_or(0, StateVector::num_qubits);
        self.state = Some(match &self.state {
            None => bell,
            Some(s) => tensor(s, &bell)?,
        });
        self.index.insert(first, base);
        self.index.insert(second, base + 1);
        Ok(())
    }

    fn bsm<R: Rng + ?Sized>(
        &mut self,
        a: QubitId,
        b: QubitId,
        forced: Option<BellLabel>,
        rng: &mut R,
    ) -> Result<BellLabel> {
        let (ia, ib) = (self.qubit_index(a)?, self.qubit_index(b)?);
        let s = self.state_mut()?;
        match forced {
            Some(label) => s.bsm_forced(ia, ib, label).map(|_| label),
            None => s.bsm(ia, ib, rng),
        }
    }

    fn pauli(&mut self, q: QubitId, p: Pauli) -> Result<()> {
        let i = self.qubit_index(q)?;
        self.state_mut()?.apply_pauli(i, p)
    }

    fn pair_label(&self, a: QubitId, b: QubitId) -> Result<Option<BellLabel>> {
        let (ia, ib) = (self.qubit_index(a)?, self.qubit_index(b)?);
        match &self.state {
            Some(s) => s.bell_label_of(ia, ib),
            None => Ok(None),
        }
    }

    fn measure_basis<R: Rng + ?Sized>(&mut self, q: QubitId, basis: Basis, rng: &mut R) -> Result<u8> {
        let i = self.qubit_index(q)?;
        let s = self.state_mut()?;
        if basis == Basis::X {
            s.apply_hadamard(i)?;
        }
        let bit = s.measure_z(i, rng)?;
        if basis == Basis::X {
            s.apply_hadamard(i)?;
        }
        Ok(bit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn both_backends_follow_the_same_seeded_branch() {
        for seed in 0..200 {
            let mut rs = ChaCha8Rng::seed_from_u64(seed);
            let mut rl = ChaCha8Rng::seed_from_u64(seed);
            let mut sb = StateBackend::default();
            let mut lb = LabelBackend::default();
            for (a, b, l) in [(1, 2, BellLabel::B11), (3, 4, BellLabel::B01), (5, 6, BellLabel::B00)] {
                sb.prepare_pair(a, b, l).unwrap();
                lb.prepare_pair(a, b, l).unwrap();
            }
            for (a, b) in [(2, 3), (4, 5), (1, 6)] {
                let ms = sb.bsm(a, b, None, &mut rs).unwrap();
                let ml = lb.bsm(a, b, None, &mut rl).unwrap();
                assert_eq!(ms, ml, "seed {seed}, bsm ({a},{b})");
            }
        }
    }

    #[test]
    fn label_backend_rejects_single_qubit_measurement() {
        let mut lb = LabelBackend::default();
        lb.prepare_pair(1, 2, BellLabel::B00).unwrap();
        let err = lb.measure_basis(1, Basis::Z, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::Unsupported { .. }));
    }

    #[test]
    fn forced_mismatch_on_certain_pair_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sb = StateBackend::default();
        let mut lb = LabelBackend::default();
        sb.prepare_pair(1, 2, BellLabel::B10).unwrap();
        lb.prepare_pair(1, 2, BellLabel::B10).unwrap();
        assert!(matches!(sb.bsm(1, 2, Some(BellLabel::B00), &mut rng), Err(Error::ZeroProbability(_))));
        assert!(matches!(lb.bsm(1, 2, Some(BellLabel::B00), &mut rng), Err(Error::ZeroProbability(_))));
    }
}
