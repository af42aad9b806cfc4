//! One-dimensional geometry, light-speed channels and a deterministic
//! discrete-event scheduler.
//!
//! Units: coordinates in light-seconds with `c = 1`, so a transit time is a
//! plain coordinate difference. Clocks are synchronized.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default timing tolerance in light-seconds.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    V0,
    V1,
    P,
    E0,
    E1,
}

impl Party {
    pub fn is_verifier(self) -> bool {
        matches!(self, Party::V0 | Party::V1)
    }

    pub fn is_adversary(self) -> bool {
        matches!(self, Party::E0 | Party::E1)
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::V0 => "V0",
            Party::V1 => "V1",
            Party::P => "P",
            Party::E0 => "E0",
            Party::E1 => "E1",
        };
        f.write_str(s)
    }
}

impl FromStr for Party {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V0" => Ok(Party::V0),
            "V1" => Ok(Party::V1),
            "P" => Ok(Party::P),
            "E0" => Ok(Party::E0),
            "E1" => Ok(Party::E1),
            _ => Err(Error::arg(format!("unknown party {s:?}"))),
        }
    }
}

/// Positions of the honest parties on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldLine {
    positions: BTreeMap<Party, f64>,
}

impl WorldLine {
    /// `V0` at 0, `P` at `d`, `V1` at `2d`.
    pub fn canonical(d: f64) -> Result<Self> {
        Self::new(0.0, d, 2.0 * d)
    }

    pub fn new(v0: f64, p: f64, v1: f64) -> Result<Self> {
        if ![v0, p, v1].iter().all(|x| x.is_finite()) {
            return Err(Error::arg("non-finite coordinate"));
        }
        if !((v0 < p && p < v1) || (v1 < p && p < v0)) {
            return Err(Error::arg(format!("prover at {p} must lie strictly between verifiers at {v0} and {v1}")));
        }
        Ok(WorldLine { positions: BTreeMap::from([(Party::V0, v0), (Party::P, p), (Party::V1, v1)]) })
    }

    pub fn position(&self, party: Party) -> Result<f64> {
        self.positions.get(&party).copied().ok_or(Error::UnknownParty(party))
    }

    pub fn transit_time(&self, a: Party, b: Party) -> Result<f64> {
        Ok((self.position(a)? - self.position(b)?).abs())
    }

    /// Distance of the prover from verifier `v`.
    pub fn arm(&self, v: Party) -> Result<f64> {
        self.transit_time(v, Party::P)
    }

    /// Length of the segment spanned by both verifiers.
    pub fn span(&self) -> f64 {
        (self.positions[&Party::V0] - self.positions[&Party::V1]).abs()
    }

    /// Point on the `a`–`b` segment at fraction `f` from `a`.
    pub fn point_between(&self, a: Party, b: Party, f: f64) -> Result<f64> {
        let (xa, xb) = (self.position(a)?, self.position(b)?);
        Ok(xa + (xb - xa) * f)
    }
}

pub fn verify_timing(expected: f64, observed: f64, tol: f64) -> bool {
    tol >= 0.0 && (expected - observed).abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Prepare,
    Send,
    Deliver,
    Intercept,
    Jam,
    Bsm,
    Measure,
    Apply,
    Announce,
    Verify,
    Timeout,
}

/// One line of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub actor: Party,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

struct Queued<T> {
    time: f64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Queued<T> {}
impl<T> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Queued<T> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Time-ordered queue; equal times pop in insertion order.
pub struct Scheduler<T> {
    heap: BinaryHeap<Queued<T>>,
    seq: u64,
}

impl<T> Default for Scheduler<T> {
    fn default() -> Self {
        Scheduler { heap: BinaryHeap::new(), seq: 0 }
    }
}

impl<T> Scheduler<T> {
    pub fn schedule(&mut self, time: f64, item: T) {
        self.heap.push(Queued { time, seq: self.seq, item });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, T)> {
        self.heap.pop().map(|q| (q.time, q.item))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// An adversary's listening point on the channel between two parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub a: Party,
    pub b: Party,
    pub adversary: Party,
    pub x: f64,
}

impl Tap {
    pub fn on(&self, from: Party, to: Party) -> bool {
        (self.a == from && self.b == to) || (self.a == to && self.b == from)
    }
}

/// A message in flight.
#[derive(Debug, Clone)]
pub struct Envelope<M> {
    pub id: u64,
    pub from: Party,
    pub to: Party,
    pub sent_at: f64,
    pub arrives_at: f64,
    pub payload: M,
    remaining: Vec<Tap>,
}

/// What a tap does with an intercepted message.
#[derive(Debug, Clone)]
pub enum TapAction<M> {
    Forward,
    Replace(M),
    Jam,
}

#[derive(Debug)]
pub enum Pending<M> {
    Intercept { tap: Tap, msg: Envelope<M> },
    Deliver(Envelope<M>),
    Timer { party: Party, tag: u32 },
}

/// Channels between every pair of honest parties, none authenticated.
/// Qubits and classical data both travel at `c`.
pub struct Network<M> {
    world: WorldLine,
    taps: Vec<Tap>,
    queue: Scheduler<Pending<M>>,
    next_id: u64,
}

impl<M> Network<M> {
    pub fn new(world: WorldLine) -> Self {
        Network { world, taps: Vec::new(), queue: Scheduler::default(), next_id: 0 }
    }

    pub fn world(&self) -> &WorldLine {
        &self.world
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn add_tap(&mut self, tap: Tap) -> Result<()> {
        let (xa, xb) = (self.world.position(tap.a)?, self.world.position(tap.b)?);
        let (lo, hi) = if xa < xb { (xa, xb) } else { (xb, xa) };
        if !(lo < tap.x && tap.x < hi) {
            return Err(Error::arg(format!("tap at {} is not strictly between {} and {}", tap.x, tap.a, tap.b)));
        }
        if !tap.adversary.is_adversary() {
            return Err(Error::arg(format!("{} cannot own a tap", tap.adversary)));
        }
        self.taps.push(tap);
        Ok(())
    }

    /// Schedules `payload` from `from` to `to` leaving at `at`. Returns the
    /// nominal arrival time.
    pub fn send(&mut self, from: Party, to: Party, payload: M, at: f64) -> Result<f64> {
        let x_from = self.world.position(from)?;
        let arrives_at = at + self.world.transit_time(from, to)?;
        let mut remaining: Vec<Tap> = self.taps.iter().copied().filter(|t| t.on(from, to)).collect();
        // nearest tap to the sender first; pop from the back
        remaining.sort_by(|p, q| (q.x - x_from).abs().total_cmp(&(p.x - x_from).abs()));
        let env = Envelope { id: self.next_id, from, to, sent_at: at, arrives_at, payload, remaining };
        self.next_id += 1;
        self.advance(env, x_from);
        Ok(arrives_at)
    }

    fn advance(&mut self, mut env: Envelope<M>, x_from: f64) {
        match env.remaining.pop() {
            Some(tap) => {
                let t = env.sent_at + (tap.x - x_from).abs();
                self.queue.schedule(t, Pending::Intercept { tap, msg: env });
            }
            None => {
                let t = env.arrives_at;
                self.queue.schedule(t, Pending::Deliver(env));
            }
        }
    }

    /// Continues an intercepted message after its tap decided.
    pub fn resume(&mut self, mut env: Envelope<M>, action: TapAction<M>) -> Result<()> {
        match action {
            TapAction::Jam => Ok(()),
            TapAction::Forward => {
                let x_from = self.world.position(env.from)?;
                self.advance(env, x_from);
                Ok(())
            }
            TapAction::Replace(p) => {
                env.payload = p;
                let x_from = self.world.position(env.from)?;
                self.advance(env, x_from);
                Ok(())
            }
        }
    }

    pub fn timer(&mut self, at: f64, party: Party, tag: u32) {
        self.queue.schedule(at, Pending::Timer { party, tag });
    }

    pub fn next(&mut self) -> Option<(f64, Pending<M>)> {
        self.queue.pop()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transit_times() {
        let w = WorldLine::canonical(1.0).unwrap();
        assert_eq!(w.transit_time(Party::V0, Party::P).unwrap(), 1.0);
        assert_eq!(w.transit_time(Party::P, Party::V0).unwrap(), 1.0);
        assert_eq!(2.0 * w.arm(Party::V0).unwrap(), 2.0);
        assert_eq!(w.span(), 2.0);
        assert!(matches!(w.transit_time(Party::E0, Party::P), Err(Error::UnknownParty(Party::E0))));
        assert!(WorldLine::new(0.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn timing_check() {
        assert!(verify_timing(2.0, 2.0, 1e-6));
        assert!(!verify_timing(2.0, 2.5, 1e-6));
        assert!(!verify_timing(2.0, 2.0, -1.0));
    }

    #[test]
    fn scheduler_orders_by_time_then_insertion() {
        let mut s = Scheduler::default();
        s.schedule(2.0, "c");
        s.schedule(1.0, "a");
        s.schedule(1.0, "b");
        s.schedule(0.5, "first");
        let order: Vec<_> = std::iter::from_fn(|| s.pop()).map(|(_, x)| x).collect();
        assert_eq!(order, ["first", "a", "b", "c"]);
    }

    #[test]
    fn untapped_send_delivers_after_transit() {
        let mut n: Network<&str> = Network::new(WorldLine::canonical(1.0).unwrap());
        n.send(Party::V0, Party::P, "q", 0.25).unwrap();
        let (t, p) = n.next().unwrap();
        assert_eq!(t, 1.25);
        assert!(matches!(p, Pending::Deliver(e) if e.payload == "q"));
    }

    #[test]
    fn midpoint_tap_intercepts_then_replacement_arrives_on_time() {
        let mut n: Network<&str> = Network::new(WorldLine::canonical(1.0).unwrap());
        n.add_tap(Tap { a: Party::V0, b: Party::P, adversary: Party::E0, x: 0.5 }).unwrap();
        n.send(Party::V0, Party::P, "2", 0.0).unwrap();
        let (t, p) = n.next().unwrap();
        assert_eq!(t, 0.5);
        let Pending::Intercept { msg, .. } = p else { panic!("expected intercept") };
        n.resume(msg, TapAction::Replace("6")).unwrap();
        let (t, p) = n.next().unwrap();
        assert_eq!(t, 1.0);
        assert!(matches!(p, Pending::Deliver(e) if e.payload == "6"));
    }

    #[test]
    fn jammed_payload_never_arrives() {
        let mut n: Network<&str> = Network::new(WorldLine::canonical(1.0).unwrap());
        n.add_tap(Tap { a: Party::P, b: Party::V1, adversary: Party::E1, x: 1.5 }).unwrap();
        n.send(Party::P, Party::V1, "r", 1.0).unwrap();
        let (_, Pending::Intercept { msg, .. }) = n.next().unwrap() else { panic!() };
        n.resume(msg, TapAction::Jam).unwrap();
        assert!(n.next().is_none());
    }

    #[test]
    fn taps_on_a_long_channel_fire_in_path_order() {
        let mut n: Network<u8> = Network::new(WorldLine::canonical(1.0).unwrap());
        n.add_tap(Tap { a: Party::V0, b: Party::V1, adversary: Party::E0, x: 0.5 }).unwrap();
        n.add_tap(Tap { a: Party::V0, b: Party::V1, adversary: Party::E1, x: 1.5 }).unwrap();
        n.send(Party::V1, Party::V0, 4, 2.0).unwrap();
        let (t, Pending::Intercept { tap, msg }) = n.next().unwrap() else { panic!() };
        assert_eq!((t, tap.adversary), (2.5, Party::E1));
        n.resume(msg, TapAction::Forward).unwrap();
        let (t, Pending::Intercept { tap, msg }) = n.next().unwrap() else { panic!() };
        assert_eq!((t, tap.adversary), (3.5, Party::E0));
        n.resume(msg, TapAction::Forward).unwrap();
        let (t, Pending::Deliver(_)) = n.next().unwrap() else { panic!() };
        assert_eq!(t, 4.0);
    }

    #[test]
    fn taps_must_lie_inside_the_channel() {
        let mut n: Network<u8> = Network::new(WorldLine::canonical(1.0).unwrap());
        assert!(n.add_tap(Tap { a: Party::V0, b: Party::P, adversary: Party::E0, x: 1.5 }).is_err());
        assert!(n.add_tap(Tap { a: Party::V0, b: Party::P, adversary: Party::P, x: 0.5 }).is_err());
    }
}
