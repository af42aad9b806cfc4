//! Entanglement-swapping verification: `P` swaps (1,2) and (3,4) and
//! announces the outcome; `V1` ships qubit 4 to `V0`, who re-measures.

use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::Backend;
use crate::bell::QubitId;
use crate::error::Result;
use crate::quantum::BellLabel;
use crate::spacetime::Party;

use super::{Payload, Protocol, START, Scenario, Scheme, Sim, Transcript, Verdict, drive, sync_send_times};

const PAIR_LABEL: BellLabel = BellLabel::B11;

struct SchemeIII {
    sent: (f64, f64),
    held: [Option<QubitId>; 2],
    announced: Option<BellLabel>,
    received: Option<BellLabel>,
    confirm: Option<BellLabel>,
    v: Verdict,
}

impl<B: Backend> Protocol<B> for SchemeIII {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, _tag: u32) -> Result<()> {
        match party {
            Party::V0 => sim.send(Party::V0, Party::P, Payload::Qubits(vec![2]))?,
            _ => sim.send(Party::V1, Party::P, Payload::Qubits(vec![3]))?,
        };
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::P, Payload::Qubits(qs)) => {
                let side = usize::from(from == Party::V1);
                self.held[side] = qs.first().copied();
                if let [Some(a), Some(b)] = self.held {
                    let m = sim.bsm(Party::P, a, b)?;
                    self.announced = Some(m);
                    sim.send(Party::P, Party::V0, Payload::Label(m))?;
                    sim.send(Party::P, Party::V1, Payload::Label(m))?;
                }
            }
            (Party::V0, Payload::Label(m)) => {
                self.received = Some(m);
                self.v.round_trip(sim, Party::V0, "v0-timing", self.sent.0)?;
            }
            (Party::V1, Payload::Label(m)) => {
                let t1 = sim.now();
                sim.send(Party::V1, Party::V0, Payload::Shipment { qubit: 4, time: t1, label: m })?;
            }
            (Party::V0, Payload::Shipment { qubit, time, label }) => {
                let expected = 2.0 * sim.world().arm(Party::V1)?;
                self.v.interval(sim, Party::V0, "v1-timing", expected, time - self.sent.1);
                let mine = sim.bsm(Party::V0, 1, qubit)?;
                self.confirm = Some(mine);
                let theirs = self.received;
                self.v.value(
                    sim,
                    Party::V0,
                    "swap-consistency",
                    theirs == Some(mine) && theirs == Some(label),
                    json!({ "prover": theirs, "relayed": label, "verifier": mine }),
                );
            }
            _ => {}
        }
        Ok(())
    }
}

/// `adversary` is usually `None` or one of the scheme III attacks.
pub fn run_scheme_iii<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    sim.prepare_pair((1, Party::V0), (2, Party::V0), PAIR_LABEL)?;
    sim.prepare_pair((3, Party::V1), (4, Party::V1), PAIR_LABEL)?;
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::III)?;
    let sent = sync_send_times(sim.world())?;
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.1, Party::V1, START);
    let mut proto =
        SchemeIII { sent, held: [None, None], announced: None, received: None, confirm: None, v: Verdict::default() };
    drive(&mut sim, &mut proto, &mut adv)?;
    let detail = json!({ "prover_label": proto.announced, "verifier_label": proto.confirm });
    Ok(proto.v.finish(&mut sim, 3, Scheme::III, scenario.seed, None, adv.report(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{LabelBackend, StateBackend};
    use crate::protocols::Branches;

    #[test]
    fn honest_forced_branch_confirms() {
        let sc = Scenario::canonical(1.0, 9).unwrap().with_forced(Branches::new().force(2, 3, BellLabel::B10));
        let t = run_scheme_iii::<StateBackend>(&sc, AdversaryKind::None).unwrap();
        assert!(t.outcome.accepted);
        assert_eq!(t.outcome.detail["verifier_label"], "10");
        assert!((t.outcome.elapsed - 2.0).abs() < 1e-12);
    }

    #[test]
    fn attack_passes_and_learns_the_label() {
        for seed in 0..64 {
            let sc = Scenario::canonical(1.0, seed).unwrap();
            let t = run_scheme_iii::<LabelBackend>(&sc, AdversaryKind::SchemeIiiAttack { skip_fixup: false }).unwrap();
            assert!(t.outcome.accepted && !t.outcome.detected_adversary);
            let got = t.outcome.adversary.as_ref().unwrap().recovered_for(Party::P).unwrap();
            assert_eq!(t.outcome.detail["prover_label"], got.to_string());
        }
    }
}
