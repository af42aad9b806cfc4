//! Exact Bell-label bookkeeping for segments made only of Bell preparations,
//! Bell state measurements and Paulis.
//!
//! Every pair is tracked by its two-bit label instead of amplitudes. The
//! closed forms here (`swap_label` as bitwise XOR, chains as XOR folds) are
//! certified against the state-vector engine by the test suite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::{BellLabel, Pauli};

/// Physical qubit identifier, numbered as in the protocol descriptions.
pub type QubitId = u32;

/// Residual label after entanglement swapping: pairs labeled `a` and `b`,
/// one qubit of each measured in the Bell basis with outcome `m`.
pub fn swap_label(a: BellLabel, b: BellLabel, m: BellLabel) -> BellLabel {
    a.xor(b).xor(m)
}

/// Label of the two end qubits of a chain of Bell pairs after every interior
/// Bell measurement.
pub fn chain_label(pair_labels: &[BellLabel], bsm_outcomes: &[BellLabel]) -> Result<BellLabel> {
    if pair_labels.is_empty() {
        return Err(Error::arg("empty chain"));
    }
    if bsm_outcomes.len() + 1 != pair_labels.len() {
        return Err(Error::arg(format!(
            "a chain of {} pairs needs {} interior outcomes, got {}",
            pair_labels.len(),
            pair_labels.len() - 1,
            bsm_outcomes.len()
        )));
    }
    Ok(pair_labels.iter().chain(bsm_outcomes).fold(BellLabel::B00, |acc, &l| acc.xor(l)))
}

/// Solves a chain for its one unknown interior outcome, given the observed
/// endpoint label.
pub fn infer_hidden(
    known_pairs: &[BellLabel],
    known_outcomes: &[BellLabel],
    observed_endpoint: BellLabel,
) -> Result<BellLabel> {
    if known_pairs.is_empty() {
        return Err(Error::arg("empty chain"));
    }
    if known_outcomes.len() + 2 != known_pairs.len() {
        return Err(Error::arg("exactly one interior outcome must be unknown"));
    }
    Ok(known_pairs.iter().chain(known_outcomes).fold(observed_endpoint, |acc, &l| acc.xor(l)))
}

/// One row of the swapping table: initial `(1,3)` and `(2,4)` labels, the Bell
/// outcome on `(1,2)` and the resulting `(3,4)` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapRow {
    pub pair13: BellLabel,
    pub pair24: BellLabel,
    pub outcome12: BellLabel,
    pub residual34: BellLabel,
}

/// All 64 swap cases, ordered by `(pair13, pair24, outcome12)`.
pub fn swap_table() -> Vec<SwapRow> {
    let mut rows = Vec::with_capacity(64);
    for pair13 in BellLabel::ALL {
        for pair24 in BellLabel::ALL {
            for outcome12 in BellLabel::ALL {
                rows.push(SwapRow { pair13, pair24, outcome12, residual34: swap_label(pair13, pair24, outcome12) });
            }
        }
    }
    rows
}

/// Renders [`swap_table`] as plain text, one line per initial `(1,3)(2,4)`
/// state listing every `(1,2)(3,4)` result. The output is fixed byte-for-byte.
pub fn emit_table() -> String {
    let mut out = String::new();
    out.push_str("# Entanglement swapping: pairs (1,3) and (2,4), Bell measurement on (1,2).\n");
    out.push_str("# u1u3u2u4 | u1u2u3u4 for each measurement outcome\n");
    for group in swap_table().chunks(4) {
        let _ = write!(out, "{}{} |", group[0].pair13, group[0].pair24);
        for r in group {
            let _ = write!(out, " {}{}", r.outcome12, r.residual34);
        }
        out.push('\n');
    }
    out
}

/// Identifier of a registered pair.
pub type PairId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub first: QubitId,
    pub second: QubitId,
    pub label: BellLabel,
}

impl LabeledPair {
    fn partner(&self, q: QubitId) -> QubitId {
        if q == self.first { self.second } else { self.first }
    }
}

/// Registry of labeled Bell pairs. A qubit belongs to at most one live pair.
#[derive(Debug, Clone, Default)]
pub struct PairRegistry {
    pairs: BTreeMap<PairId, LabeledPair>,
    consumed: BTreeSet<PairId>,
    owner: BTreeMap<QubitId, PairId>,
    next_id: PairId,
}

impl PairRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pair(&mut self, first: QubitId, second: QubitId, label: BellLabel) -> Result<PairId> {
        if first == second {
            return Err(Error::arg(format!("pair needs two qubits, got {first} twice")));
        }
        for q in [first, second] {
            if self.owner.contains_key(&q) {
                return Err(Error::QubitInUse(q));
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.pairs.insert(id, LabeledPair { first, second, label });
        self.owner.insert(first, id);
        self.owner.insert(second, id);
        Ok(id)
    }

    /// Live pair containing `q`.
    pub fn pair_of(&self, q: QubitId) -> Result<(PairId, LabeledPair)> {
        let id = *self.owner.get(&q).ok_or(Error::UnknownQubit(q))?;
        Ok((id, self.pairs[&id]))
    }

    pub fn get(&self, id: PairId) -> Result<LabeledPair> {
        if self.consumed.contains(&id) {
            return Err(Error::PairConsumed(id));
        }
        self.pairs.get(&id).copied().ok_or_else(|| Error::arg(format!("unknown pair {id}")))
    }

    pub fn is_consumed(&self, id: PairId) -> bool {
        self.consumed.contains(&id)
    }

    /// Label of `(a, b)` if they form a live pair.
    pub fn label_of(&self, a: QubitId, b: QubitId) -> Option<BellLabel> {
        let (_, p) = self.pair_of(a).ok()?;
        (p.partner(a) == b).then_some(p.label)
    }

    pub fn live_pairs(&self) -> impl Iterator<Item = (PairId, LabeledPair)> + '_ {
        self.pairs.iter().filter(|(id, _)| !self.consumed.contains(id)).map(|(&id, &p)| (id, p))
    }

    fn consume(&mut self, id: PairId) {
        let p = self.pairs[&id];
        self.owner.remove(&p.first);
        self.owner.remove(&p.second);
        self.consumed.insert(id);
    }

    /// Applies a Pauli to one qubit of a live pair.
    pub fn apply_pauli(&mut self, q: QubitId, p: Pauli) -> Result<()> {
        let (id, _) = self.pair_of(q)?;
        let pair = self.pairs.get_mut(&id).expect("owner map points at a live pair");
        pair.label = pair.label.xor(p.label_delta());
        Ok(())
    }

    /// Entanglement swap with outcome `m`: consumes the pairs of `qa` and `qb`
    /// and registers their partners as a new pair. Returns the new pair.
    pub fn swap_with(&mut self, qa: QubitId, qb: QubitId, m: BellLabel) -> Result<PairId> {
        let (ida, pa) = self.pair_of(qa)?;
        let (idb, pb) = self.pair_of(qb)?;
        if ida == idb {
            return Err(Error::DegeneratePair(qa, qb));
        }
        let (ra, rb) = (pa.partner(qa), pb.partner(qb));
        self.consume(ida);
        self.consume(idb);
        self.add_pair(ra, rb, swap_label(pa.label, pb.label, m))
    }

    /// Bell measurement on one qubit from each of two distinct live pairs.
    /// The outcome is uniform over the four labels.
    pub fn bsm_label<R: Rng + ?Sized>(&mut self, qa: QubitId, qb: QubitId, rng: &mut R) -> Result<BellLabel> {
        let (ida, _) = self.pair_of(qa)?;
        let (idb, _) = self.pair_of(qb)?;
        if ida == idb {
            return Err(Error::DegeneratePair(qa, qb));
        }
        let u: f64 = rng.random();
        let m = BellLabel::from_index(((u * 4.0) as usize).min(3));
        self.swap_with(qa, qb, m)?;
        Ok(m)
    }

    /// Measures both qubits of one live pair in the Bell basis; the outcome
    /// is the pair's label with certainty.
    pub fn measure_pair(&mut self, a: QubitId, b: QubitId) -> Result<BellLabel> {
        let (id, p) = self.pair_of(a)?;
        if p.partner(a) != b {
            return Err(Error::arg(format!("qubits {a} and {b} are not paired")));
        }
        self.consume(id);
        Ok(p.label)
    }
}
