//! Keyed verification over swapped chains. Private swaps fix a secret label
//! on (5,6) known to `V0` and on (7,8) known to `V1`; `P` learns each by
//! measuring the pair, then echoes the keyed message back.

use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::Backend;
use crate::bell::chain_label;
use crate::error::Result;
use crate::quantum::BellLabel;
use crate::spacetime::Party;

use super::keyed::random_bits;
use super::{
    KeyBits, PRE, Payload, Protocol, RoundKeys, START, Scenario, Scheme, Sim, Transcript, Verdict, decode_keyed_message,
    drive, encode_keyed_message, pre_round_time, sync_send_times,
};

const VP_LABEL: BellLabel = BellLabel::B01;
const VV_LABEL: BellLabel = BellLabel::B11;
pub(crate) const DEFAULT_MESSAGE_BITS: usize = 2;

#[derive(Default)]
struct Side {
    private: Option<BellLabel>,
    public: Option<BellLabel>,
    /// The other verifier's public outcome as received.
    heard: Option<BellLabel>,
    key: Option<BellLabel>,
    message: Vec<u8>,
    prover_key: Option<BellLabel>,
}

struct SchemeA {
    bits: usize,
    sent: (f64, f64),
    sides: [Side; 2],
    v: Verdict,
}

fn idx(p: Party) -> usize {
    usize::from(p == Party::V1)
}

impl<B: Backend> Protocol<B> for SchemeA {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, tag: u32) -> Result<()> {
        let i = idx(party);
        let other = if i == 0 { Party::V1 } else { Party::V0 };
        match tag {
            PRE => {
                let (private, public) = if i == 0 { ((1, 2), (3, 4)) } else { ((11, 12), (9, 10)) };
                let a = sim.bsm(party, private.0, private.1)?;
                let c = sim.bsm(party, public.0, public.1)?;
                self.sides[i].private = Some(a);
                self.sides[i].public = Some(c);
                sim.announce(party, &[other, Party::P], Payload::Label(c))?;
            }
            _ => {
                // (5,6) = 01 ⊕ 11 ⊕ 01 ⊕ a ⊕ e; (7,8) = 01 ⊕ 11 ⊕ 01 ⊕ c ⊕ b
                let s = &self.sides[i];
                let (Some(own), Some(heard)) = (s.private, s.heard) else { return Ok(()) };
                let outcomes = if i == 0 { [own, heard] } else { [heard, own] };
                let key = chain_label(&[VP_LABEL, VV_LABEL, VP_LABEL], &outcomes)?;
                let msg = random_bits(self.bits, &mut sim.rng);
                let carrier = encode_keyed_message(&msg, key)?;
                self.sides[i].key = Some(key);
                self.sides[i].message = msg;
                sim.send(party, Party::P, Payload::Carrier(carrier))?;
            }
        }
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        match (to, payload) {
            (Party::V0 | Party::V1, Payload::Label(l)) if from.is_verifier() => self.sides[idx(to)].heard = Some(l),
            (Party::P, Payload::Carrier(c)) if from.is_verifier() => {
                let pair = if from == Party::V0 { (5, 6) } else { (7, 8) };
                let key = sim.bsm(Party::P, pair.0, pair.1)?;
                self.sides[idx(from)].prover_key = Some(key);
                let msg = decode_keyed_message(c, key, &mut sim.rng)?;
                sim.send(Party::P, from, Payload::Carrier(encode_keyed_message(&msg, key)?))?;
            }
            (Party::V0 | Party::V1, Payload::Carrier(c)) if from == Party::P => {
                let i = idx(to);
                let start = if i == 0 { self.sent.0 } else { self.sent.1 };
                self.v.round_trip(sim, to, &format!("{}-timing", to.to_string().to_lowercase()), start)?;
                let Some(key) = self.sides[i].key else { return Ok(()) };
                let got = decode_keyed_message(c, key, &mut sim.rng)?;
                let want = self.sides[i].message.clone();
                let name = format!("{}-echo", to.to_string().to_lowercase());
                self.v.value(sim, to, &name, got == want, json!({ "sent": want, "echo": got }));
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn run_scheme_a<B: Backend>(scenario: &Scenario, adversary: AdversaryKind) -> Result<Transcript> {
    let mut sim = Sim::<B>::new(scenario);
    sim.set_now(pre_round_time(sim.world()));
    sim.prepare_pair((2, Party::V0), (5, Party::P), VP_LABEL)?;
    sim.prepare_pair((3, Party::V0), (7, Party::P), VP_LABEL)?;
    sim.prepare_pair((1, Party::V0), (9, Party::V1), VV_LABEL)?;
    sim.prepare_pair((4, Party::V0), (12, Party::V1), VV_LABEL)?;
    sim.prepare_pair((6, Party::P), (10, Party::V1), VP_LABEL)?;
    sim.prepare_pair((8, Party::P), (11, Party::V1), VP_LABEL)?;
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::A)?;
    let sent = sync_send_times(sim.world())?;
    let pre = pre_round_time(sim.world());
    sim.timer(pre, Party::V0, PRE);
    sim.timer(pre, Party::V1, PRE);
    sim.timer(sent.0, Party::V0, START);
    sim.timer(sent.1, Party::V1, START);
    let bits = scenario.message_bits.unwrap_or(DEFAULT_MESSAGE_BITS);
    let mut proto = SchemeA { bits, sent, sides: Default::default(), v: Verdict::default() };
    drive(&mut sim, &mut proto, &mut adv)?;
    let [s0, s1] = &proto.sides;
    let keys = match (s0.private, s0.key, s0.prover_key, s1.private, s1.key, s1.prover_key) {
        (Some(a), Some(k0), Some(p0), Some(b), Some(k1), Some(p1)) => Some(RoundKeys {
            v0: KeyBits { k_v: a, k_p: k0, prover_k_v: None, prover_k_p: p0 },
            v1: KeyBits { k_v: b, k_p: k1, prover_k_v: None, prover_k_p: p1 },
        }),
        _ => None,
    };
    let detail = json!({
        "private": [s0.private, s1.private],
        "public": [s0.public, s1.public],
        "keys": [s0.key, s1.key],
        "prover_keys": [s0.prover_key, s1.prover_key],
    });
    Ok(proto.v.finish(&mut sim, 4, Scheme::A, scenario.seed, keys, adv.report(), detail))
}
