//! BB84-based position verification: `V0` sends `H^y|x⟩`, `V1` sends `y`,
//! and `P` answers with the measured bit.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::{Backend, Basis};
use crate::error::Result;
use crate::quantum::ProductState;
use crate::spacetime::Party;

use super::{Payload, Protocol, START, Scenario, Scheme, Sim, Transcript, Verdict, drive, sync_send_times};

/// The verifiers' secret bits for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pv84Round {
    pub x: u8,
    pub y: u8,
}

impl Pv84Round {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Pv84Round { x: rng.random_range(0..2), y: rng.random_range(0..2) }
    }

    pub fn state(self) -> Result<ProductState> {
        let mut s = ProductState::basis(&[self.x])?;
        if self.y == 1 {
            s.apply_hadamard(0)?;
        }
        Ok(s)
    }
}

struct Pv84 {
    round: Pv84Round,
    sent: (f64, f64),
    carrier: Option<ProductState>,
    basis: Option<u8>,
    answer: Option<u8>,
    v: Verdict,
}

impl<B: Backend> Protocol<B> for Pv84 {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, _tag: u32) -> Result<()> {
        match party {
            Party::V0 => {
                sim.send(Party::V0, Party::P, Payload::Carrier(self.round.state()?))?;
            }
            Party::V1 => {
                sim.send(Party::V1, Party::P, Payload::Bit(self.round.y))?;
            }
            _ => {}
        }
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::P, Payload::Carrier(s)) => self.carrier = Some(s),
            (Party::P, Payload::Bit(y)) if from == Party::V1 => self.basis = Some(y),
            (Party::V0, Payload::Bit(b)) => {
                self.v.round_trip(sim, Party::V0, "v0-timing", self.sent.0)?;
                self.v.value(sim, Party::V0, "v0-bit", b == self.round.x, json!({ "expected": self.round.x, "got": b }));
            }
            (Party::V1, Payload::Bit(_)) => {
                self.v.round_trip(sim, Party::V1, "v1-timing", self.sent.1)?;
            }
            _ => {}
        }
        if to == Party::P && self.answer.is_none() && self.carrier.is_some() {
            if let Some(y) = self.basis {
                let mut s = self.carrier.take().expect("checked above");
                let bit = sim.measure_carrier(Party::P, &mut s, 0, Basis::from_bit(y))?;
                self.answer = Some(bit);
                sim.send(Party::P, Party::V0, Payload::Bit(bit))?;
                sim.send(Party::P, Party::V1, Payload::Bit(bit))?;
            }
        }
        Ok(())
    }
}

pub fn run_pv_bb84<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::PvBb84)?;
    let round = Pv84Round::random(&mut sim.rng);
    let sent = sync_send_times(sim.world())?;
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.1, Party::V1, START);
    let mut proto = Pv84 { round, sent, carrier: None, basis: None, answer: None, v: Verdict::default() };
    drive(&mut sim, &mut proto, &mut adv)?;
    let detail = json!({ "x": round.x, "y": round.y, "answer": proto.answer });
    Ok(proto.v.finish(&mut sim, 3, Scheme::PvBb84, scenario.seed, None, adv.report(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::LabelBackend;

    #[test]
    fn honest_rounds_accept_in_two_arm_lengths() {
        for seed in 0..50 {
            let sc = Scenario::canonical(1.5, seed).unwrap();
            let t = run_pv_bb84::<LabelBackend>(&sc, AdversaryKind::None).unwrap();
            assert!(t.outcome.accepted, "seed {seed}");
            assert!((t.outcome.elapsed - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_zero_round_answers_zero() {
        let s = Pv84Round { x: 0, y: 0 }.state().unwrap();
        assert_eq!(s.qubit(0).unwrap().prob_one(0).unwrap(), 0.0);
    }
}
