//! EPR variant of BB84 verification: `V0` keeps one half of β00, `P`
//! measures the other half in the basis `V1` announces.

use rand::Rng;
use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::{Backend, Basis};
use crate::bell::QubitId;
use crate::error::Result;
use crate::quantum::BellLabel;
use crate::spacetime::Party;

use super::{Payload, Protocol, START, Scenario, Scheme, Sim, Transcript, Verdict, drive, sync_send_times};

const KEPT: QubitId = 1;
const SENT: QubitId = 2;

struct SchemeII {
    y: u8,
    sent: (f64, f64),
    qubit: Option<QubitId>,
    basis: Option<u8>,
    answer: Option<u8>,
    own: Option<u8>,
    v: Verdict,
}

impl<B: Backend> Protocol<B> for SchemeII {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, _tag: u32) -> Result<()> {
        match party {
            Party::V0 => sim.send(Party::V0, Party::P, Payload::Qubits(vec![SENT]))?,
            _ => sim.send(Party::V1, Party::P, Payload::Bit(self.y))?,
        };
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::P, Payload::Qubits(qs)) => self.qubit = qs.first().copied(),
            (Party::P, Payload::Bit(y)) if from == Party::V1 => self.basis = Some(y),
            (Party::V0, Payload::Bit(b)) => {
                self.v.round_trip(sim, Party::V0, "v0-timing", self.sent.0)?;
                let mine = sim.measure(Party::V0, KEPT, Basis::from_bit(self.y))?;
                self.own = Some(mine);
                self.v.value(sim, Party::V0, "correlation", mine == b, json!({ "prover": b, "verifier": mine }));
            }
            (Party::V1, Payload::Bit(_)) => {
                self.v.round_trip(sim, Party::V1, "v1-timing", self.sent.1)?;
            }
            _ => {}
        }
        if to == Party::P && self.answer.is_none() {
            if let (Some(q), Some(y)) = (self.qubit, self.basis) {
                let bit = sim.measure(Party::P, q, Basis::from_bit(y))?;
                self.answer = Some(bit);
                sim.send(Party::P, Party::V0, Payload::Bit(bit))?;
                sim.send(Party::P, Party::V1, Payload::Bit(bit))?;
            }
        }
        Ok(())
    }
}

/// Needs a backend with single-qubit measurement.
pub fn run_scheme_ii<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    sim.prepare_pair((KEPT, Party::V0), (SENT, Party::V0), BellLabel::B00)?;
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::II)?;
    // y reaches V1 over the verifiers' private link before the round.
    let y = sim.rng.random_range(0..2u8);
    let sent = sync_send_times(sim.world())?;
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.1, Party::V1, START);
    let mut proto = SchemeII { y, sent, qubit: None, basis: None, answer: None, own: None, v: Verdict::default() };
    drive(&mut sim, &mut proto, &mut adv)?;
    let detail = json!({ "y": y, "answer": proto.answer, "verifier": proto.own });
    Ok(proto.v.finish(&mut sim, 3, Scheme::II, scenario.seed, None, adv.report(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{LabelBackend, StateBackend};

    #[test]
    fn honest_rounds_correlate_in_both_bases() {
        let mut seen = [false; 2];
        for seed in 0..40 {
            let sc = Scenario::canonical(1.0, seed).unwrap();
            let t = run_scheme_ii::<StateBackend>(&sc, AdversaryKind::None).unwrap();
            assert!(t.outcome.accepted, "seed {seed}");
            seen[t.outcome.detail["y"].as_u64().unwrap() as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn label_backend_cannot_run_it() {
        let sc = Scenario::canonical(1.0, 0).unwrap();
        assert!(run_scheme_ii::<LabelBackend>(&sc, AdversaryKind::None).is_err());
    }
}
