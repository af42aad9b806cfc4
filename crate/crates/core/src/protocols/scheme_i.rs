//! Pre-shared classical key: each round `P` answers with key bit
//! `k[4i + 2x_i + y_i]`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adversaries::{AdversaryKind, Strategy};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::spacetime::Party;

use super::{Payload, Protocol, Scenario, Scheme, Sim, Transcript, Verdict, drive, sync_send_times};

/// Key shared by `V0` and `P`, plus the verifiers' challenge strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeIKey {
    pub key: Vec<u8>,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

impl SchemeIKey {
    pub fn new(key: Vec<u8>, x: Vec<u8>, y: Vec<u8>) -> Result<Self> {
        let n = x.len();
        if y.len() != n || key.len() != 4 * n {
            return Err(Error::arg(format!("need |x| = |y| = N and |key| = 4N, got {}, {}, {}", x.len(), y.len(), key.len())));
        }
        if key.iter().chain(&x).chain(&y).any(|&b| b > 1) {
            return Err(Error::arg("scheme I strings must be bits"));
        }
        Ok(SchemeIKey { key, x, y })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut bits = |k: usize| (0..k).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>();
        let key = bits(4 * n);
        let x = bits(n);
        let y = bits(n);
        SchemeIKey { key, x, y }
    }

    pub fn rounds(&self) -> usize {
        self.x.len()
    }

    pub fn index(&self, i: usize) -> usize {
        4 * i + 2 * usize::from(self.x[i]) + usize::from(self.y[i])
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.key[self.index(i)]
    }
}

struct SchemeI {
    key: SchemeIKey,
    sent: (f64, f64),
    period: f64,
    xs: VecDeque<u8>,
    ys: VecDeque<u8>,
    answered: usize,
    replies: [usize; 2],
    v: Verdict,
}

impl<B: Backend> Protocol<B> for SchemeI {
    fn on_timer(&mut self, sim: &mut Sim<B>, party: Party, tag: u32) -> Result<()> {
        let i = tag as usize;
        match party {
            Party::V0 => sim.send(Party::V0, Party::P, Payload::Bit(self.key.x[i]))?,
            _ => sim.send(Party::V1, Party::P, Payload::Bit(self.key.y[i]))?,
        };
        Ok(())
    }

    fn on_deliver(&mut self, sim: &mut Sim<B>, from: Party, to: Party, payload: Payload) -> Result<()> {
        let Payload::Bit(b) = payload else { return Ok(()) };
        match (from, to) {
            (Party::V0, Party::P) => self.xs.push_back(b),
            (Party::V1, Party::P) => self.ys.push_back(b),
            (Party::P, v) => {
                let side = usize::from(v == Party::V1);
                let i = self.replies[side];
                self.replies[side] += 1;
                if i >= self.key.rounds() {
                    return Ok(());
                }
                let start = if side == 0 { self.sent.0 } else { self.sent.1 } + i as f64 * self.period;
                self.v.round_trip(sim, v, &format!("{v}-timing-{i}").to_lowercase(), start)?;
                if v == Party::V0 {
                    let want = self.key.bit(i);
                    self.v.value(sim, v, &format!("v0-bit-{i}"), b == want, json!({ "index": self.key.index(i), "got": b }));
                }
            }
            _ => {}
        }
        while let (Some(&x), Some(&y)) = (self.xs.front(), self.ys.front()) {
            self.xs.pop_front();
            self.ys.pop_front();
            let i = self.answered;
            self.answered += 1;
            let k = *self.key.key.get(4 * i + 2 * usize::from(x) + usize::from(y)).unwrap_or(&0);
            sim.send(Party::P, Party::V0, Payload::Bit(k))?;
            sim.send(Party::P, Party::V1, Payload::Bit(k))?;
        }
        Ok(())
    }
}

/// Runs `N` challenge rounds; `key` defaults to fresh random strings.
pub fn run_scheme_i<B: Backend>(
    scenario: &Scenario,
    n: usize,
    key: Option<SchemeIKey>,
    adversary: AdversaryKind,
) -> Result<Transcript> {
    if n == 0 {
        return Err(Error::arg("scheme I needs at least one round"));
    }
    let mut sim = Sim::<B>::new(scenario);
    let mut adv = Strategy::new(adversary);
    adv.install(&mut sim, Scheme::I)?;
    let key = match key {
        Some(k) if k.rounds() == n => k,
        Some(k) => return Err(Error::arg(format!("key covers {} rounds, asked for {n}", k.rounds()))),
        None => SchemeIKey::random(n, &mut sim.rng),
    };
    let sent = sync_send_times(sim.world())?;
    let period = 2.0 * sim.world().span();
    for i in 0..n {
        sim.timer(sent.0 + i as f64 * period, Party::V0, i as u32);
        sim.timer(sent.1 + i as f64 * period, Party::V1, i as u32);
    }
    let mut proto = SchemeI {
        key,
        sent,
        period,
        xs: VecDeque::new(),
        ys: VecDeque::new(),
        answered: 0,
        replies: [0, 0],
        v: Verdict::default(),
    };
    drive(&mut sim, &mut proto, &mut adv)?;
    let detail = json!({ "rounds": n });
    Ok(proto.v.finish(&mut sim, 3 * n, Scheme::I, scenario.seed, None, adv.report(), detail))
}
