//! Two-stage keyed verification. Simultaneous swaps leave the chain ends
//! (1,5) and (7,11) in labels nobody knows; `P` measures them on arrival and
//! each side infers the other's hidden outcome. The keyed echo that follows
//! checks the inference.

use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::Backend;
use crate::bell::infer_hidden;
use crate::error::{Error, Result};
use crate::quantum::BellLabel;
use crate::spacetime::Party;

use super::keyed::random_bits;
use super::{
    KeyBits, Payload, Protocol, RoundKeys, START, Scenario, Scheme, Sim, Transcript, Verdict, decode_keyed_message, drive,
    encode_keyed_message, sync_send_times,
};

/// Chain pair labels from each verifier's end toward the prover.
const CHAIN_V0: [BellLabel; 3] = [BellLabel::B11, BellLabel::B01, BellLabel::B00];
const CHAIN_V1: [BellLabel; 3] = [BellLabel::B00, BellLabel::B01, BellLabel::B11];
pub(crate) const DEFAULT_MESSAGE_BITS: usize = 16;

#[derive(Default, Clone)]
struct Side {
    /// The verifier's own swap outcome.
    own: Option<BellLabel>,
    /// The prover's swap outcome on this chain.
    prover_own: Option<BellLabel>,
    /// The prover's end-of-chain announcement.
    announced: Option<BellLabel>,
    /// What the verifier infers for `prover_own`.
    inferred_prover: Option<BellLabel>,
    /// What the prover infers for `own`.
    prover_inferred: Option<BellLabel>,
    stage4_at: f64,
    message: Vec<u8>,
}

struct SchemeB {
    bits: usize,
    sent: (f64, f64),
    sides: [Side; 2],
    v: Verdict,
}

fn idx(p: Party) -> usize {
    usize::from(p == Party::V1)
}

fn lower(p: Party) -> String {
    p.to_string().to_lowercase()
}

impl<B: Backend> Protocol<B> for SchemeB {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, _tag: u32) -> Result<()> {
        match party {
            Party::V0 => {
                self.sides[0].own = Some(sim.bsm(Party::V0, 2, 3)?);
                sim.send(Party::V0, Party::P, Payload::Qubits(vec![1]))?;
            }
            Party::V1 => {
                self.sides[1].own = Some(sim.bsm(Party::V1, 10, 12)?);
                sim.send(Party::V1, Party::P, Payload::Qubits(vec![11]))?;
            }
            Party::P => {
                self.sides[0].prover_own = Some(sim.bsm(Party::P, 4, 6)?);
                self.sides[1].prover_own = Some(sim.bsm(Party::P, 8, 9)?);
            }
            _ => {}
        }
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::P, Payload::Qubits(qs)) if from.is_verifier() => {
                let i = idx(from);
                let Some(&q) = qs.first() else { return Ok(()) };
                let chain = if i == 0 { CHAIN_V0 } else { CHAIN_V1 };
                let own = self.sides[i].prover_own.ok_or_else(|| Error::Invariant("prover swap missing".into()))?;
                let end = if i == 0 { sim.bsm(Party::P, q, 5)? } else { sim.bsm(Party::P, 7, q)? };
                self.sides[i].prover_inferred = Some(infer_hidden(&chain, &[own], end)?);
                sim.send(Party::P, from, Payload::Label(end))?;
            }
            (Party::V0 | Party::V1, Payload::Label(end)) if from == Party::P => {
                let i = idx(to);
                let start = if i == 0 { self.sent.0 } else { self.sent.1 };
                let on_time = self.v.round_trip(sim, to, &format!("{}-stage4-timing", lower(to)), start)?;
                let chain = if i == 0 { CHAIN_V0 } else { CHAIN_V1 };
                let own = self.sides[i].own.ok_or_else(|| Error::Invariant("verifier swap missing".into()))?;
                let key = infer_hidden(&chain, &[own], end)?;
                self.sides[i].announced = Some(end);
                self.sides[i].inferred_prover = Some(key);
                if !on_time {
                    return Ok(());
                }
                let msg = random_bits(self.bits, &mut sim.rng);
                self.sides[i].message = msg.clone();
                self.sides[i].stage4_at = sim.now();
                sim.send(to, Party::P, Payload::Carrier(encode_keyed_message(&msg, key)?))?;
            }
            (Party::P, Payload::Carrier(c)) if from.is_verifier() => {
                let s = &self.sides[idx(from)];
                let (Some(kp), Some(kv)) = (s.prover_own, s.prover_inferred) else { return Ok(()) };
                let msg = decode_keyed_message(c, kp, &mut sim.rng)?;
                sim.send(Party::P, from, Payload::Carrier(encode_keyed_message(&msg, kv.swapped())?))?;
            }
            (Party::V0 | Party::V1, Payload::Carrier(c)) if from == Party::P => {
                let i = idx(to);
                self.v.round_trip(sim, to, &format!("{}-stage7-timing", lower(to)), self.sides[i].stage4_at)?;
                let own = self.sides[i].own.ok_or_else(|| Error::Invariant("verifier swap missing".into()))?;
                let got = decode_keyed_message(c, own.swapped(), &mut sim.rng)?;
                let want = self.sides[i].message.clone();
                self.v.value(sim, to, &format!("{}-stage7-echo", lower(to)), got == want, json!({ "sent": want, "echo": got }));
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn run_scheme_b<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    sim.prepare_pair((1, Party::V0), (2, Party::V0), BellLabel::B11)?;
    sim.prepare_pair((3, Party::V0), (4, Party::P), BellLabel::B01)?;
    sim.prepare_pair((5, Party::P), (6, Party::P), BellLabel::B00)?;
    sim.prepare_pair((7, Party::P), (8, Party::P), BellLabel::B00)?;
    sim.prepare_pair((9, Party::P), (10, Party::V1), BellLabel::B01)?;
    sim.prepare_pair((11, Party::V1), (12, Party::V1), BellLabel::B11)?;
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::B)?;
    let sent = sync_send_times(sim.world())?;
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.0.min(sent.1), Party::P, START);
    sim.timer(sent.1, Party::V1, START);
    let bits = scenario.message_bits.unwrap_or(DEFAULT_MESSAGE_BITS);
    let mut proto = SchemeB { bits, sent, sides: Default::default(), v: Verdict::default() };
    drive(&mut sim, &mut proto, &mut adv)?;
    let [s0, s1] = &proto.sides;
    let side_keys = |s: &Side| -> Option<KeyBits> {
        Some(KeyBits { k_v: s.own?, k_p: s.inferred_prover?, prover_k_v: s.prover_inferred, prover_k_p: s.prover_own? })
    };
    let keys = side_keys(s0).zip(side_keys(s1)).map(|(v0, v1)| RoundKeys { v0, v1 });
    let detail = json!({
        "verifier_swaps": [s0.own, s1.own],
        "prover_swaps": [s0.prover_own, s1.prover_own],
        "announced": [s0.announced, s1.announced],
        "verifier_inferred": [s0.inferred_prover, s1.inferred_prover],
        "prover_inferred": [s0.prover_inferred, s1.prover_inferred],
        "inference_ok": [
            s0.inferred_prover.is_some() && s0.inferred_prover == s0.prover_own,
            s1.inferred_prover.is_some() && s1.inferred_prover == s1.prover_own,
        ],
        "keys": [s0.prover_own, s1.prover_own],
    });
    Ok(proto.v.finish(&mut sim, 6, Scheme::B, scenario.seed, keys, adv.report(), detail))
}
