//! Swapping plus superdense coding: `V0` links (3,4) and (5,6), then both
//! verifiers dense-code a two-bit message toward `P`.

use rand::Rng;
use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::Backend;
use crate::error::Result;
use crate::quantum::{BellLabel, Pauli};
use crate::spacetime::Party;

use super::{PRE, Payload, Protocol, START, Scenario, Scheme, Sim, Transcript, Verdict, drive, pre_round_time, sync_send_times};

const L12: BellLabel = BellLabel::B00;
const L34: BellLabel = BellLabel::B00;
const L56: BellLabel = BellLabel::B11;

fn l46(m0: BellLabel) -> BellLabel {
    L34.xor(L56).xor(m0)
}

struct SchemeIV {
    messages: (BellLabel, BellLabel),
    sent: (f64, f64),
    /// V0's swap outcome, as known to V0, V1 and P respectively.
    m0: [Option<BellLabel>; 3],
    prover_decoded: [Option<BellLabel>; 2],
    verifier_decoded: [Option<BellLabel>; 2],
    v: Verdict,
}

impl<B: Backend> Protocol<B> for SchemeIV {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, tag: u32) -> Result<()> {
        match (party, tag) {
            (Party::V0, PRE) => {
                let m0 = sim.bsm(Party::V0, 3, 5)?;
                self.m0[0] = Some(m0);
                sim.announce(Party::V0, &[Party::V1, Party::P], Payload::Label(m0))?;
            }
            (Party::V0, START) => {
                sim.pauli(Party::V0, 1, Pauli::for_label_delta(self.messages.0))?;
                sim.send(Party::V0, Party::P, Payload::Qubits(vec![1]))?;
            }
            (Party::V1, START) if self.m0[1].is_some() => {
                sim.pauli(Party::V1, 6, Pauli::for_label_delta(self.messages.1))?;
                sim.send(Party::V1, Party::P, Payload::Qubits(vec![6]))?;
            }
            _ => {}
        }
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::V1, Payload::Label(m)) if from == Party::V0 => self.m0[1] = Some(m),
            (Party::P, Payload::Label(m)) if from == Party::V0 => self.m0[2] = Some(m),
            (Party::P, Payload::Qubits(qs)) => {
                let Some(&q) = qs.first() else { return Ok(()) };
                let (partner, side) = if from == Party::V0 { (2, 0) } else { (4, 1) };
                let r = sim.bsm(Party::P, q, partner)?;
                let base = if side == 0 { Some(L12) } else { self.m0[2].map(l46) };
                self.prover_decoded[side] = base.map(|b| r.xor(b));
                sim.send(Party::P, from, Payload::Label(r))?;
            }
            (Party::V0, Payload::Label(r)) if from == Party::P => {
                self.v.round_trip(sim, Party::V0, "v0-timing", self.sent.0)?;
                let got = r.xor(L12);
                self.verifier_decoded[0] = Some(got);
                let want = self.messages.0;
                self.v.value(sim, Party::V0, "v0-message", got == want, json!({ "sent": want, "decoded": got }));
            }
            (Party::V1, Payload::Label(r)) if from == Party::P => {
                self.v.round_trip(sim, Party::V1, "v1-timing", self.sent.1)?;
                let got = self.m0[1].map(|m| r.xor(l46(m)));
                self.verifier_decoded[1] = got;
                let want = self.messages.1;
                self.v.value(sim, Party::V1, "v1-message", got == Some(want), json!({ "sent": want, "decoded": got }));
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn run_scheme_iv<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    sim.set_now(pre_round_time(sim.world()));
    sim.prepare_pair((1, Party::V0), (2, Party::P), L12)?;
    sim.prepare_pair((3, Party::V0), (4, Party::P), L34)?;
    sim.prepare_pair((5, Party::V0), (6, Party::V1), L56)?;
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::IV)?;
    let messages = match scenario.messages {
        Some(m) => m,
        None => (
            BellLabel::from_index(sim.rng.random_range(0..4)),
            BellLabel::from_index(sim.rng.random_range(0..4)),
        ),
    };
    let sent = sync_send_times(sim.world())?;
    sim.timer(pre_round_time(sim.world()), Party::V0, PRE);
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.1, Party::V1, START);
    let mut proto = SchemeIV {
        messages,
        sent,
        m0: [None; 3],
        prover_decoded: [None; 2],
        verifier_decoded: [None; 2],
        v: Verdict::default(),
    };
    drive(&mut sim, &mut proto, &mut adv)?;
    let detail = json!({
        "messages": [messages.0, messages.1],
        "swap_outcome": proto.m0[0],
        "prover_decoded": proto.prover_decoded,
        "verifier_decoded": proto.verifier_decoded,
    });
    Ok(proto.v.finish(&mut sim, 4, Scheme::IV, scenario.seed, None, adv.report(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{LabelBackend, StateBackend};

    #[test]
    fn honest_round_decodes_both_messages() {
        let sc = Scenario::canonical(1.0, 4).unwrap().with_messages(BellLabel::B10, BellLabel::B11);
        let t = run_scheme_iv::<StateBackend>(&sc, AdversaryKind::None).unwrap();
        assert!(t.outcome.accepted);
        assert_eq!(t.outcome.detail["prover_decoded"], json!(["10", "11"]));
    }

    #[test]
    fn swap_outcome_01_links_4_and_6_as_10() {
        assert_eq!(l46(BellLabel::B01), BellLabel::B10);
    }

    #[test]
    fn attack_recovers_messages() {
        for seed in 0..32 {
            let sc = Scenario::canonical(1.0, seed).unwrap();
            let t = run_scheme_iv::<LabelBackend>(&sc, AdversaryKind::SchemeIvAttack).unwrap();
            assert!(t.outcome.accepted);
            let rep = t.outcome.adversary.unwrap();
            let sent = &t.outcome.detail["messages"];
            assert_eq!(sent[0], rep.recovered_for(Party::V0).unwrap().to_string());
            assert_eq!(sent[1], rep.recovered_for(Party::V1).unwrap().to_string());
        }
    }
}
