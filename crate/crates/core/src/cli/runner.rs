//! Batch execution: derived per-round seeds, parallel trials, key
//! accumulation and optional authentication sessions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, LabelBackend, StateBackend};
use crate::error::Result;
use crate::keyauth::{AccumulatedKeys, AuthSession, KeyPair, accumulate_keys, bits_to_hex};
use crate::protocols::{
    Scenario, Scheme, Transcript, run_pv_bb84, run_scheme_a, run_scheme_b, run_scheme_i, run_scheme_ii, run_scheme_iii,
    run_scheme_iv,
};

use super::config::{BackendChoice, ScenarioConfig};

/// Mixes the batch seed with trial and round indices (splitmix64 finalizer).
pub fn derive_seed(base: u64, trial: u64, round: u64) -> u64 {
    let mut z = base
        .wrapping_add(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(round.wrapping_mul(0xd1b5_4a32_d192_ed03))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn dispatch<B: Backend>(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Transcript> {
    let adv = cfg.adversary;
    match cfg.scheme {
        Scheme::PvBb84 => run_pv_bb84::<B>(sc, adv),
        Scheme::I => run_scheme_i::<B>(sc, cfg.rounds, None, adv),
        Scheme::II => run_scheme_ii::<B>(sc, adv),
        Scheme::III => run_scheme_iii::<B>(sc, adv),
        Scheme::IV => run_scheme_iv::<B>(sc, adv),
        Scheme::A => run_scheme_a::<B>(sc, adv),
        Scheme::B => run_scheme_b::<B>(sc, adv),
    }
}

/// Transcripts per trial: scheme I folds its `N` challenges into one.
pub fn rounds_per_trial(cfg: &ScenarioConfig) -> usize {
    if cfg.scheme == Scheme::I { 1 } else { cfg.rounds }
}

pub fn run_round(cfg: &ScenarioConfig, trial: u64, round: u64) -> Result<Transcript> {
    let seed = derive_seed(cfg.seed, trial, round);
    let sc = cfg.scenario(seed)?;
    let use_state = match cfg.backend {
        BackendChoice::State => true,
        BackendChoice::Label => false,
        BackendChoice::Auto => cfg.needs_state_backend(),
    };
    let mut t = if use_state { dispatch::<StateBackend>(cfg, &sc)? } else { dispatch::<LabelBackend>(cfg, &sc)? };
    t.trial = trial;
    t.round = round;
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthResult {
    pub verifier: String,
    pub bits: usize,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub transcripts: Vec<Transcript>,
    pub keys: Option<AccumulatedKeys>,
    pub auth: Vec<AuthResult>,
}

impl TrialOutcome {
    pub fn accepted(&self) -> bool {
        self.transcripts.iter().all(|t| t.outcome.accepted)
    }

    pub fn detected(&self) -> bool {
        self.transcripts.iter().any(|t| t.outcome.detected_adversary)
    }
}

fn authenticate(cfg: &ScenarioConfig, trial: u64, name: &str, k: &KeyPair) -> Result<Option<AuthResult>> {
    let len = cfg.auth.message_length.min(k.k_p.len()).min(crate::quantum::MAX_QUBITS);
    if len == 0 {
        return Ok(None);
    }
    let salt = if name == "V0" { 0 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed ^ 0xa5a5_a5a5, trial, salt));
    let session = AuthSession::random(cfg.auth.z_p, cfg.auth.z_v, len, &mut rng)?;
    let decoded = session.run(&k.prover_k_p[..len], &k.k_p[..len], &mut rng)?;
    Ok(Some(AuthResult { verifier: name.to_string(), bits: len, exact: decoded == session.m }))
}

pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Result<TrialOutcome> {
    let transcripts = (0..rounds_per_trial(cfg) as u64).map(|r| run_round(cfg, trial, r)).collect::<Result<Vec<_>>>()?;
    let mut out = TrialOutcome { trial, transcripts, keys: None, auth: Vec::new() };
    if cfg.scheme.has_keys() && out.accepted() {
        let keys = accumulate_keys(&out.transcripts)?;
        if cfg.auth.enabled {
            for (name, k) in [("V0", &keys.v0), ("V1", &keys.v1)] {
                out.auth.extend(authenticate(cfg, trial, name, k)?);
            }
        }
        out.keys = Some(keys);
    }
    Ok(out)
}

/// All trials, in parallel, returned in trial order.
pub fn run_batch(cfg: &ScenarioConfig) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, t)).collect()
}

/// Hex view of one verifier's keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyHex {
    pub bits: usize,
    pub k_v: String,
    pub k_p: String,
    pub prover_k_v: Option<String>,
    pub prover_k_p: String,
}

impl From<&KeyPair> for KeyHex {
    fn from(k: &KeyPair) -> Self {
        KeyHex {
            bits: k.k_p.len(),
            k_v: bits_to_hex(&k.k_v),
            k_p: bits_to_hex(&k.k_p),
            prover_k_v: k.prover_k_v.as_deref().map(bits_to_hex),
            prover_k_p: bits_to_hex(&k.prover_k_p),
        }
    }
}
