//! Event loop shared by every protocol: message delivery through tapped
//! channels, qubit ownership, and the transcript log.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Value, json};

use crate::adversaries::Strategy;
use crate::backend::{Backend, Basis};
use crate::bell::QubitId;
use crate::error::{Error, Result};
use crate::quantum::{BellLabel, Pauli, ProductState};
use crate::spacetime::{Envelope, Event, EventKind, Network, Party, Pending, TapAction, WorldLine};

use super::Scenario;

/// What travels on a channel.
#[derive(Debug, Clone)]
pub enum Payload {
    /// Qubits that live in the shared entangled register.
    Qubits(Vec<QubitId>),
    /// Stand-alone product-state qubits carried with the message.
    Carrier(ProductState),
    Bit(u8),
    Label(BellLabel),
    /// A qubit shipped together with a receipt time and a Bell label.
    Shipment { qubit: QubitId, time: f64, label: BellLabel },
}

impl Payload {
    pub fn record(&self) -> Value {
        match self {
            Payload::Qubits(qs) => json!({ "qubits": qs }),
            Payload::Carrier(s) => json!({ "carrier": s.len() }),
            Payload::Bit(b) => json!({ "bit": b }),
            Payload::Label(l) => json!({ "label": l }),
            Payload::Shipment { qubit, time, label } => json!({ "qubits": [qubit], "time": time, "label": label }),
        }
    }

    fn register_qubits(&self) -> Vec<QubitId> {
        match self {
            Payload::Qubits(qs) => qs.clone(),
            Payload::Shipment { qubit, .. } => vec![*qubit],
            _ => Vec::new(),
        }
    }
}

/// Per-run simulation state: network, entangled register, ownership and log.
pub struct Sim<B: Backend> {
    net: Network<Payload>,
    backend: B,
    owners: BTreeMap<QubitId, Party>,
    pub rng: ChaCha8Rng,
    forced: BTreeMap<(QubitId, QubitId), BellLabel>,
    events: Vec<Event>,
    branch: Vec<BellLabel>,
    now: f64,
    tolerance: f64,
}

impl<B: Backend> Sim<B> {
    pub fn new(scenario: &Scenario) -> Self {
        Sim {
            net: Network::new(scenario.world.clone()),
            backend: B::default(),
            owners: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            forced: scenario.forced.map.clone(),
            events: Vec::new(),
            branch: Vec::new(),
            now: 0.0,
            tolerance: scenario.tolerance,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn set_now(&mut self, t: f64) {
        self.now = t;
    }

    pub fn world(&self) -> &WorldLine {
        self.net.world()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn network_mut(&mut self) -> &mut Network<Payload> {
        &mut self.net
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub(crate) fn take_log(&mut self) -> (Vec<Event>, String) {
        let branch = self.branch.iter().map(ToString::to_string).collect::<Vec<_>>().join("-");
        (std::mem::take(&mut self.events), branch)
    }

    pub fn log(&mut self, actor: Party, kind: EventKind, payload: Value) {
        self.events.push(Event { t: self.now, actor, kind, payload });
    }

    pub fn owner(&self, q: QubitId) -> Option<Party> {
        self.owners.get(&q).copied()
    }

    fn require(&self, party: Party, q: QubitId) -> Result<()> {
        if self.owners.get(&q) == Some(&party) {
            Ok(())
        } else {
            Err(Error::NotOwner { party, qubit: q })
        }
    }

    /// Pre-shared pair `(first, second)`; each half goes to its holder.
    pub fn prepare_pair(&mut self, first: (QubitId, Party), second: (QubitId, Party), label: BellLabel) -> Result<()> {
        self.backend.prepare_pair(first.0, second.0, label)?;
        self.owners.insert(first.0, first.1);
        self.owners.insert(second.0, second.1);
        self.log(first.1, EventKind::Prepare, json!({ "pair": [first.0, second.0], "label": label, "holders": [first.1, second.1] }));
        Ok(())
    }

    pub fn bsm(&mut self, actor: Party, a: QubitId, b: QubitId) -> Result<BellLabel> {
        self.require(actor, a)?;
        self.require(actor, b)?;
        let forced = self.forced.get(&(a.min(b), a.max(b))).copied();
        let m = self.backend.bsm(a, b, forced, &mut self.rng)?;
        self.branch.push(m);
        self.log(actor, EventKind::Bsm, json!({ "qubits": [a, b], "outcome": m }));
        Ok(m)
    }

    pub fn pauli(&mut self, actor: Party, q: QubitId, p: Pauli) -> Result<()> {
        self.require(actor, q)?;
        self.backend.pauli(q, p)?;
        self.log(actor, EventKind::Apply, json!({ "qubit": q, "pauli": p }));
        Ok(())
    }

    pub fn measure(&mut self, actor: Party, q: QubitId, basis: Basis) -> Result<u8> {
        self.require(actor, q)?;
        let bit = self.backend.measure_basis(q, basis, &mut self.rng)?;
        self.log(actor, EventKind::Measure, json!({ "qubit": q, "basis": basis, "bit": bit }));
        Ok(bit)
    }

    /// Measures qubit `q` of a travelling carrier in `basis`.
    pub fn measure_carrier(&mut self, actor: Party, state: &mut ProductState, q: usize, basis: Basis) -> Result<u8> {
        if basis == Basis::X {
            state.apply_hadamard(q)?;
        }
        let bit = state.measure_z(q, &mut self.rng)?;
        if basis == Basis::X {
            state.apply_hadamard(q)?;
        }
        self.log(actor, EventKind::Measure, json!({ "carrier_qubit": q, "basis": basis, "bit": bit }));
        Ok(bit)
    }

    pub fn pair_label(&self, a: QubitId, b: QubitId) -> Result<Option<BellLabel>> {
        self.backend.pair_label(a, b)
    }

    /// Sends now. Returns the nominal arrival time.
    pub fn send(&mut self, from: Party, to: Party, payload: Payload) -> Result<f64> {
        self.send_at(self.now, from, to, payload)
    }

    pub fn send_at(&mut self, at: f64, from: Party, to: Party, payload: Payload) -> Result<f64> {
        for q in payload.register_qubits() {
            self.require(from, q)?;
            self.owners.remove(&q);
        }
        let record = payload.record();
        let saved = self.now;
        self.now = at;
        self.log(from, EventKind::Send, json!({ "to": to, "payload": record }));
        self.now = saved;
        self.net.send(from, to, payload, at)
    }

    pub fn announce(&mut self, from: Party, to: &[Party], payload: Payload) -> Result<()> {
        self.log(from, EventKind::Announce, json!({ "to": to, "payload": payload.record() }));
        for &t in to {
            self.send(from, t, payload.clone())?;
        }
        Ok(())
    }

    pub fn timer(&mut self, at: f64, party: Party, tag: u32) {
        self.net.timer(at, party, tag);
    }

    /// Logs a named validation and returns its result.
    pub fn verify(&mut self, actor: Party, check: &str, ok: bool, detail: Value) -> bool {
        self.log(actor, EventKind::Verify, json!({ "check": check, "ok": ok, "detail": detail }));
        ok
    }

    /// Timing validation of a measured interval against its expected value.
    pub fn verify_time(&mut self, actor: Party, check: &str, expected: f64, observed: f64) -> bool {
        let ok = crate::spacetime::verify_timing(expected, observed, self.tolerance);
        self.verify(actor, check, ok, json!({ "expected": expected, "observed": observed }))
    }
}

/// Reaction of the honest parties to deliveries and timers.
pub trait Protocol<B: Backend> {
    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()>;

    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, tag: u32) -> Result<()> {
        let _ = (sim, party, tag);
        Ok(())
    }
}

/// Runs the scheduler until no event is left.
pub fn drive<B: Backend, P: Protocol<B>>(sim: &mut Sim<B>, proto: &mut P, adversary: &mut Strategy) -> Result<()> {
    while let Some((t, pending)) = sim.net.next() {
        sim.now = t;
        match pending {
            Pending::Timer { party, tag } => proto.on_timer(sim, party, tag)?,
            Pending::Deliver(env) => {
                for q in env.payload.register_qubits() {
                    sim.owners.insert(q, env.to);
                }
                sim.log(env.to, EventKind::Deliver, json!({ "from": env.from, "payload": env.payload.record() }));
                proto.on_deliver(sim, env.from, env.to, env.payload)?;
            }
            Pending::Intercept { tap, msg } => intercept(sim, adversary, tap, msg)?,
        }
    }
    Ok(())
}

fn intercept<B: Backend>(
    sim: &mut Sim<B>,
    adversary: &mut Strategy,
    tap: crate::spacetime::Tap,
    mut msg: Envelope<Payload>,
) -> Result<()> {
    for q in msg.payload.register_qubits() {
        sim.owners.insert(q, tap.adversary);
    }
    let action = adversary.on_intercept(sim, &tap, &mut msg)?;
    let label = match &action {
        TapAction::Forward => "forward",
        TapAction::Replace(_) => "replace",
        TapAction::Jam => "jam",
    };
    sim.log(
        tap.adversary,
        if matches!(action, TapAction::Jam) { EventKind::Jam } else { EventKind::Intercept },
        json!({ "from": msg.from, "to": msg.to, "payload": msg.payload.record(), "action": label }),
    );
    match &action {
        TapAction::Forward => {
            for q in msg.payload.register_qubits() {
                sim.owners.remove(&q);
            }
        }
        TapAction::Replace(p) => {
            for q in p.register_qubits() {
                sim.require(tap.adversary, q)?;
                sim.owners.remove(&q);
            }
        }
        TapAction::Jam => {}
    }
    sim.net.resume(msg, action)
}
