//! Scenario configuration: TOML file, environment, and flag overrides.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversaries::AdversaryKind;
use crate::error::{Error, Result};
use crate::protocols::{Branches, Scenario, Scheme};
use crate::quantum::BellLabel;
use crate::spacetime::{DEFAULT_TOLERANCE, WorldLine};

/// Environment variable consulted for the default seed.
pub const SEED_ENV: &str = "QPVSIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    /// Label algebra where possible, state vector where required.
    #[default]
    Auto,
    Label,
    State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// `accept` without an adversary, `any` otherwise.
    #[default]
    Auto,
    /// Every round accepted.
    Accept,
    /// Every trial has at least one rejected round.
    Detect,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Positions {
    pub v0: f64,
    pub p: f64,
    pub v1: f64,
}

impl Default for Positions {
    fn default() -> Self {
        Positions { v0: 0.0, p: 1.0, v1: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// Prover distance from each verifier in the symmetric layout.
    pub d: f64,
    /// Explicit coordinates; overrides `d` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Positions>,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { d: 1.0, positions: None }
    }
}

impl Geometry {
    pub fn world(&self) -> Result<WorldLine> {
        let w = match &self.positions {
            Some(p) => WorldLine::new(p.v0, p.p, p.v1),
            None if self.d > 0.0 => WorldLine::canonical(self.d),
            None => return Err(Error::Config(format!("d must be positive, got {}", self.d))),
        };
        w.map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuthConfig {
    /// Run an authentication session with each trial's accumulated `K_P`.
    pub enabled: bool,
    pub z_p: u32,
    pub z_v: u32,
    /// Message length in bits; capped by the key length and 16 qubits.
    pub message_length: usize,
}

impl Default for AuthConfig {
    fn default() -> Self {
        AuthConfig { enabled: false, z_p: 4, z_v: 5, message_length: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    pub geometry: Geometry,
    /// Rounds per trial (challenge count `N` for scheme I).
    pub rounds: usize,
    pub trials: usize,
    pub seed: u64,
    pub adversary: AdversaryKind,
    pub auth: AuthConfig,
    pub timing_tolerance: f64,
    pub backend: BackendChoice,
    /// Keyed-message length for schemes A and B; scheme default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message_bits: Option<usize>,
    pub expect: Expectation,
    /// Forced Bell outcomes, e.g. `"2-3" = "10"`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub branches: BTreeMap<String, BellLabel>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scheme: Scheme::A,
            geometry: Geometry::default(),
            rounds: 1,
            trials: 1,
            seed: 0,
            adversary: AdversaryKind::None,
            auth: AuthConfig::default(),
            timing_tolerance: DEFAULT_TOLERANCE,
            backend: BackendChoice::Auto,
            message_bits: None,
            expect: Expectation::Auto,
            branches: BTreeMap::new(),
        }
    }
}

/// Parses `"a-b"` into a qubit pair.
pub fn parse_pair(key: &str) -> Result<(u32, u32)> {
    let (a, b) = key.split_once('-').ok_or_else(|| Error::Config(format!("branch key {key:?} is not of the form a-b")))?;
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad qubit id {s:?} in {key:?}")));
    Ok((parse(a)?, parse(b)?))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.world()?;
        if self.rounds == 0 || self.trials == 0 {
            return Err(Error::Config("rounds and trials must be at least 1".into()));
        }
        if !(self.timing_tolerance >= 0.0 && self.timing_tolerance.is_finite()) {
            return Err(Error::Config(format!("bad timing tolerance {}", self.timing_tolerance)));
        }
        if !self.adversary.supports(self.scheme) {
            return Err(Error::Config(format!("adversary {} does not apply to scheme {}", self.adversary, self.scheme)));
        }
        if let Some(b) = self.message_bits {
            if b == 0 || b > 16 {
                return Err(Error::Config(format!("message bits must be 1..=16, got {b}")));
            }
        }
        if self.backend == BackendChoice::Label && self.needs_state_backend() {
            return Err(Error::Config(format!("scheme {} with adversary {} needs the state backend", self.scheme, self.adversary)));
        }
        if self.auth.enabled {
            if !self.scheme.has_keys() {
                return Err(Error::Config("authentication needs key material from scheme a or b".into()));
            }
            for z in [self.auth.z_p, self.auth.z_v] {
                if !(1..=31).contains(&z) {
                    return Err(Error::Config(format!("auth z must be in 1..=31, got {z}")));
                }
            }
            if self.auth.message_length == 0 {
                return Err(Error::Config("auth message length must be positive".into()));
            }
        }
        self.forced()?;
        Ok(())
    }

    /// Whether single-qubit measurements on register qubits are required.
    pub fn needs_state_backend(&self) -> bool {
        self.scheme == Scheme::II
            || (self.scheme == Scheme::B && matches!(self.adversary, AdversaryKind::InterceptResend(_)))
    }

    pub fn forced(&self) -> Result<Branches> {
        self.branches.iter().try_fold(Branches::new(), |acc, (k, &l)| {
            let (a, b) = parse_pair(k)?;
            Ok(acc.force(a, b, l))
        })
    }

    /// The scenario for one round with the given seed.
    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        let mut sc = Scenario::new(self.geometry.world()?, seed).with_tolerance(self.timing_tolerance).with_forced(self.forced()?);
        sc.message_bits = self.message_bits;
        Ok(sc)
    }

    pub fn expectation(&self) -> Expectation {
        match self.expect {
            Expectation::Auto if self.adversary == AdversaryKind::None => Expectation::Accept,
            Expectation::Auto => Expectation::Any,
            e => e,
        }
    }
}
