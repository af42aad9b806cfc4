//! Eavesdropper strategies. A strategy owns its own qubits and taps and sees
//! honest traffic only through intercepted envelopes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Basis};
use crate::error::{Error, Result};
use crate::protocols::{Payload, Scheme, Sim};
use crate::quantum::{BellLabel, Pauli};
use crate::spacetime::{Envelope, Party, Tap, TapAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisPolicy {
    /// Fresh uniformly random basis per qubit.
    Random,
    /// Always the computational basis.
    Fixed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdversaryKind {
    #[default]
    None,
    SchemeIiiAttack { skip_fixup: bool },
    SchemeIvAttack,
    InterceptResend(BasisPolicy),
    /// Entangling intercept on the qubit leaving `V0` (or `V1`).
    EntanglingIntercept(Party),
    /// Listens only; `read_carriers` additionally measures carrier qubits in Z.
    Passive { read_carriers: bool },
    /// Replaces the prover's classical reply to `V0` with a coin flip.
    KeyGuess,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 11] = [
        AdversaryKind::None,
        AdversaryKind::SchemeIiiAttack { skip_fixup: false },
        AdversaryKind::SchemeIiiAttack { skip_fixup: true },
        AdversaryKind::SchemeIvAttack,
        AdversaryKind::InterceptResend(BasisPolicy::Random),
        AdversaryKind::InterceptResend(BasisPolicy::Fixed),
        AdversaryKind::EntanglingIntercept(Party::V0),
        AdversaryKind::EntanglingIntercept(Party::V1),
        AdversaryKind::Passive { read_carriers: false },
        AdversaryKind::Passive { read_carriers: true },
        AdversaryKind::KeyGuess,
    ];

    pub fn id(self) -> &'static str {
        match self {
            AdversaryKind::None => "none",
            AdversaryKind::SchemeIiiAttack { skip_fixup: false } => "scheme-iii-attack",
            AdversaryKind::SchemeIiiAttack { skip_fixup: true } => "scheme-iii-attack-no-fixup",
            AdversaryKind::SchemeIvAttack => "scheme-iv-attack",
            AdversaryKind::InterceptResend(BasisPolicy::Random) => "intercept-resend",
            AdversaryKind::InterceptResend(BasisPolicy::Fixed) => "intercept-resend-fixed",
            AdversaryKind::EntanglingIntercept(Party::V1) => "entangling-intercept-v1",
            AdversaryKind::EntanglingIntercept(_) => "entangling-intercept",
            AdversaryKind::Passive { read_carriers: false } => "passive",
            AdversaryKind::Passive { read_carriers: true } => "passive-read",
            AdversaryKind::KeyGuess => "key-guess",
        }
    }

    pub fn supports(self, scheme: Scheme) -> bool {
        match self {
            AdversaryKind::None | AdversaryKind::Passive { .. } => true,
            AdversaryKind::SchemeIiiAttack { .. } => scheme == Scheme::III,
            AdversaryKind::SchemeIvAttack => scheme == Scheme::IV,
            AdversaryKind::InterceptResend(_) => matches!(scheme, Scheme::PvBb84 | Scheme::II | Scheme::A | Scheme::B),
            AdversaryKind::EntanglingIntercept(_) => scheme == Scheme::B,
            AdversaryKind::KeyGuess => scheme == Scheme::I,
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown adversary {s:?}")))
    }
}

impl TryFrom<String> for AdversaryKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdversaryKind> for String {
    fn from(k: AdversaryKind) -> String {
        k.id().to_string()
    }
}

/// A Bell label an eavesdropper learned that was meant for `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recovered {
    pub target: Party,
    pub label: BellLabel,
}

/// A classical label overheard on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heard {
    pub from: Party,
    pub label: BellLabel,
}

/// Everything the adversaries learned or did in one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub strategy: String,
    pub recovered: Vec<Recovered>,
    pub heard: Vec<Heard>,
    /// Measurement outcomes on intercepted qubits, in order.
    pub observed: Vec<u8>,
    pub substituted: u32,
}

impl AdversaryReport {
    pub fn recovered_for(&self, target: Party) -> Option<BellLabel> {
        self.recovered.iter().find(|r| r.target == target).map(|r| r.label)
    }

    /// Compact rendering of what a passive listener saw, for information estimates.
    pub fn observation(&self) -> String {
        let heard: Vec<String> = self.heard.iter().map(|h| format!("{}:{}", h.from, h.label)).collect();
        let bits: String = self.observed.iter().map(|b| char::from(b'0' + b)).collect();
        format!("{}|{}", heard.join(","), bits)
    }
}

// Qubit numbering of the eavesdropper pairs.
const III_E0_PAIR: (u32, u32) = (5, 6);
const III_SHARED_PAIR: (u32, u32) = (7, 8);
const IV_E0_PAIR: (u32, u32) = (7, 8);
const IV_E1_PAIR: (u32, u32) = (9, 10);
const B_E0_PAIR: (u32, u32) = (13, 14);
const B_E1_PAIR: (u32, u32) = (15, 16);

/// A strategy instance for one round.
#[derive(Debug, Clone)]
pub struct Strategy {
    kind: AdversaryKind,
    report: AdversaryReport,
    announced_v0: Option<BellLabel>,
}

impl Strategy {
    pub fn new(kind: AdversaryKind) -> Self {
        Strategy {
            kind,
            report: AdversaryReport { strategy: kind.id().to_string(), ..Default::default() },
            announced_v0: None,
        }
    }

    pub fn none() -> Self {
        Self::new(AdversaryKind::None)
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn is_active(&self) -> bool {
        self.kind != AdversaryKind::None
    }

    pub fn report(&self) -> Option<AdversaryReport> {
        self.is_active().then(|| {
            let mut r = self.report.clone();
            r.recovered.sort_by_key(|x| x.target);
            r
        })
    }

    /// Places taps at the channel midpoints and prepares the strategy's own
    /// pairs. Must run after the honest inventory is prepared.
    pub fn install<B: Backend>(&mut self, sim: &mut Sim<B>, scheme: Scheme) -> Result<()> {
        if !self.kind.supports(scheme) {
            return Err(Error::Config(format!("adversary {} does not apply to scheme {scheme}", self.kind)));
        }
        if !self.is_active() {
            return Ok(());
        }
        let w = sim.world().clone();
        let x0 = w.point_between(Party::V0, Party::P, 0.5)?;
        let x1 = w.point_between(Party::P, Party::V1, 0.5)?;
        let net = sim.network_mut();
        net.add_tap(Tap { a: Party::V0, b: Party::P, adversary: Party::E0, x: x0 })?;
        net.add_tap(Tap { a: Party::P, b: Party::V1, adversary: Party::E1, x: x1 })?;
        net.add_tap(Tap { a: Party::V0, b: Party::V1, adversary: Party::E0, x: x0 })?;
        net.add_tap(Tap { a: Party::V0, b: Party::V1, adversary: Party::E1, x: x1 })?;
        let bell = BellLabel::B00;
        match self.kind {
            AdversaryKind::SchemeIiiAttack { .. } => {
                sim.prepare_pair((III_E0_PAIR.0, Party::E0), (III_E0_PAIR.1, Party::E0), bell)?;
                // E1's qubit 7 is handed to E0 before the round starts.
                sim.prepare_pair((III_SHARED_PAIR.0, Party::E0), (III_SHARED_PAIR.1, Party::E1), bell)?;
            }
            AdversaryKind::SchemeIvAttack => {
                sim.prepare_pair((IV_E0_PAIR.0, Party::E0), (IV_E0_PAIR.1, Party::E0), bell)?;
                sim.prepare_pair((IV_E1_PAIR.0, Party::E1), (IV_E1_PAIR.1, Party::E1), bell)?;
            }
            AdversaryKind::EntanglingIntercept(Party::V1) => {
                sim.prepare_pair((B_E1_PAIR.0, Party::E1), (B_E1_PAIR.1, Party::E1), bell)?;
            }
            AdversaryKind::EntanglingIntercept(_) => {
                sim.prepare_pair((B_E0_PAIR.0, Party::E0), (B_E0_PAIR.1, Party::E0), bell)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Decision at a tap. Intercepted register qubits already belong to the
    /// tap's owner when this runs.
    pub fn on_intercept<B: Backend>(
        &mut self,
        sim: &mut Sim<B>,
        tap: &Tap,
        msg: &mut Envelope<Payload>,
    ) -> Result<TapAction<Payload>> {
        let me = tap.adversary;
        if let Payload::Label(label) = msg.payload {
            self.hear(msg.from, label);
        }
        match self.kind {
            AdversaryKind::None => Ok(TapAction::Forward),
            AdversaryKind::SchemeIiiAttack { skip_fixup } => self.scheme_iii(sim, me, msg, skip_fixup),
            AdversaryKind::SchemeIvAttack => self.scheme_iv(sim, me, msg),
            AdversaryKind::InterceptResend(policy) => {
                if msg.from == Party::V0 && msg.to == Party::P && me == Party::E0 {
                    self.measure_in_flight(sim, me, msg, policy)?;
                }
                Ok(TapAction::Forward)
            }
            AdversaryKind::Passive { read_carriers } => {
                if read_carriers && msg.from == Party::V0 && msg.to == Party::P && me == Party::E0 {
                    if let Payload::Carrier(_) = msg.payload {
                        self.measure_in_flight(sim, me, msg, BasisPolicy::Fixed)?;
                    }
                }
                Ok(TapAction::Forward)
            }
            AdversaryKind::EntanglingIntercept(side) => {
                let (sent, (keep, fwd)) = if side == Party::V1 { (11, B_E1_PAIR) } else { (1, B_E0_PAIR) };
                let ours = if side == Party::V1 { Party::E1 } else { Party::E0 };
                match &msg.payload {
                    Payload::Qubits(qs) if msg.from == side && msg.to == Party::P && me == ours && qs == &[sent] => {
                        let e = sim.bsm(me, sent, keep)?;
                        self.report.observed.extend(e.bits());
                        self.report.substituted += 1;
                        Ok(TapAction::Replace(Payload::Qubits(vec![fwd])))
                    }
                    _ => Ok(TapAction::Forward),
                }
            }
            AdversaryKind::KeyGuess => match msg.payload {
                Payload::Bit(_) if msg.from == Party::P && msg.to == Party::V0 && me == Party::E0 => {
                    self.report.substituted += 1;
                    Ok(TapAction::Replace(Payload::Bit(sim.rng.random_range(0..2u8))))
                }
                _ => Ok(TapAction::Forward),
            },
        }
    }

    fn hear(&mut self, from: Party, label: BellLabel) {
        let h = Heard { from, label };
        if !self.report.heard.contains(&h) {
            self.report.heard.push(h);
        }
    }

    fn measure_in_flight<B: Backend>(
        &mut self,
        sim: &mut Sim<B>,
        me: Party,
        msg: &mut Envelope<Payload>,
        policy: BasisPolicy,
    ) -> Result<()> {
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| match policy {
            BasisPolicy::Random => Basis::from_bit(rng.random_range(0..2u8)),
            BasisPolicy::Fixed => Basis::Z,
        };
        match &mut msg.payload {
            Payload::Carrier(state) => {
                for q in 0..state.len() {
                    let basis = pick(&mut sim.rng);
                    if basis == Basis::X {
                        state.apply_hadamard(q)?;
                    }
                    let bit = state.measure_z(q, &mut sim.rng)?;
                    if basis == Basis::X {
                        state.apply_hadamard(q)?;
                    }
                    self.report.observed.push(bit);
                }
            }
            Payload::Qubits(qs) => {
                for q in qs.clone() {
                    let basis = pick(&mut sim.rng);
                    let bit = sim.measure(me, q, basis)?;
                    self.report.observed.push(bit);
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn scheme_iii<B: Backend>(
        &mut self,
        sim: &mut Sim<B>,
        me: Party,
        msg: &Envelope<Payload>,
        skip_fixup: bool,
    ) -> Result<TapAction<Payload>> {
        match (&msg.payload, me, msg.from, msg.to) {
            (Payload::Qubits(qs), Party::E0, Party::V0, Party::P) if qs == &[2] => {
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Qubits(vec![III_E0_PAIR.1])))
            }
            (Payload::Qubits(qs), Party::E1, Party::V1, Party::P) if qs == &[3] => {
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Qubits(vec![III_SHARED_PAIR.1])))
            }
            (Payload::Shipment { time, label, .. }, Party::E0, Party::V1, Party::V0) => {
                let e = sim.bsm(me, III_E0_PAIR.0, III_SHARED_PAIR.0)?;
                self.report.recovered.push(Recovered { target: Party::P, label: e });
                if !skip_fixup {
                    // (1,2) is still the public 11 pair; move it onto e.
                    sim.pauli(me, 2, Pauli::for_label_delta(e.xor(BellLabel::B11)))?;
                }
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Shipment { qubit: 2, time: *time, label: *label }))
            }
            _ => Ok(TapAction::Forward),
        }
    }

    fn scheme_iv<B: Backend>(
        &mut self,
        sim: &mut Sim<B>,
        me: Party,
        msg: &Envelope<Payload>,
    ) -> Result<TapAction<Payload>> {
        match (&msg.payload, me, msg.from, msg.to) {
            (Payload::Label(m0), _, Party::V0, _) => {
                self.announced_v0 = Some(*m0);
                Ok(TapAction::Forward)
            }
            (Payload::Qubits(qs), Party::E0, Party::V0, Party::P) if qs == &[1] => {
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Qubits(vec![IV_E0_PAIR.0])))
            }
            (Payload::Qubits(qs), Party::E1, Party::V1, Party::P) if qs == &[6] => {
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Qubits(vec![IV_E1_PAIR.0])))
            }
            (Payload::Label(r), Party::E0, Party::P, Party::V0) => {
                let retained = sim.bsm(me, IV_E0_PAIR.1, 1)?;
                let encoded = retained.xor(*r);
                self.report.recovered.push(Recovered { target: Party::V0, label: encoded.xor(BellLabel::B00) });
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Label(encoded)))
            }
            (Payload::Label(r), Party::E1, Party::P, Party::V1) => {
                let m0 = self.announced_v0.ok_or_else(|| Error::Invariant("V0's announcement was never overheard".into()))?;
                let retained = sim.bsm(me, IV_E1_PAIR.1, 6)?;
                let encoded = retained.xor(*r);
                let l46 = BellLabel::B00.xor(BellLabel::B11).xor(m0);
                self.report.recovered.push(Recovered { target: Party::V1, label: encoded.xor(l46) });
                self.report.substituted += 1;
                Ok(TapAction::Replace(Payload::Label(encoded)))
            }
            _ => Ok(TapAction::Forward),
        }
    }
}
