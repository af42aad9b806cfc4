//! Aggregate statistics over transcript streams.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{Scheme, Transcript};
use crate::spacetime::Party;

struct Counts<'a, X, Y> {
    joint: BTreeMap<(&'a X, &'a Y), usize>,
    px: BTreeMap<&'a X, usize>,
    py: BTreeMap<&'a Y, usize>,
}

fn counts<X: Ord, Y: Ord>(pairs: &[(X, Y)]) -> Counts<'_, X, Y> {
    let mut c = Counts { joint: BTreeMap::new(), px: BTreeMap::new(), py: BTreeMap::new() };
    for (x, y) in pairs {
        *c.joint.entry((x, y)).or_default() += 1;
        *c.px.entry(x).or_default() += 1;
        *c.py.entry(y).or_default() += 1;
    }
    c
}

fn plug_in<X: Ord, Y: Ord>(c: &Counts<'_, X, Y>, n: f64) -> f64 {
    c.joint
        .iter()
        .map(|((x, y), &k)| {
            let pxy = k as f64 / n;
            pxy * (pxy / (c.px[x] as f64 / n * (c.py[y] as f64 / n))).log2()
        })
        .sum()
}

/// Plug-in estimate of `I(X; Y)` in bits from paired samples.
pub fn mutual_information<X: Ord, Y: Ord>(pairs: &[(X, Y)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    plug_in(&counts(pairs), pairs.len() as f64).max(0.0)
}

/// Miller–Madow corrected estimate of `I(X; Y)` in bits. The plug-in value
/// overshoots by about `(|X|-1)(|Y|-1) / 2n ln 2` on independent data.
pub fn mutual_information_corrected<X: Ord, Y: Ord>(pairs: &[(X, Y)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let c = counts(pairs);
    let bins = |k: usize| k.saturating_sub(1) as f64;
    let bias = (bins(c.px.len()) + bins(c.py.len()) - bins(c.joint.len())) / (2.0 * n * std::f64::consts::LN_2);
    (plug_in(&c, n) + bias).max(0.0)
}

/// Largest corrected information between any single observed qubit outcome
/// and the key.
fn key_information(samples: &[(&[u8], &str)]) -> Option<f64> {
    let width = samples.iter().map(|(o, _)| o.len()).max().filter(|&w| w > 0)?;
    let per_position = (0..width).map(|i| {
        let pairs: Vec<(u8, &str)> = samples.iter().filter_map(|&(o, k)| Some((*o.get(i)?, k))).collect();
        mutual_information_corrected(&pairs)
    });
    Some(per_position.fold(0.0, f64::max))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdversaryInfo {
    pub strategy: String,
    /// Share of rounds where the adversary recovered the secret it targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_rate: Option<f64>,
    /// Estimated information (bits) between a single intercepted qubit's
    /// outcome and the V0–P round key, maximized over qubit positions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_information_bits: Option<f64>,
    /// Share of rounds in which a verifier's chain inference was wrong.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inference_error_rate: Option<f64>,
    pub mean_substitutions: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schemes: Vec<Scheme>,
    pub transcripts: usize,
    pub trials: usize,
    pub acceptance_rate: f64,
    pub detection_rate: f64,
    pub trial_acceptance_rate: f64,
    pub trial_detection_rate: f64,
    pub mean_elapsed: f64,
    pub branch_counts: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryInfo>,
}

fn rate(n: usize, d: usize) -> f64 {
    if d == 0 { 0.0 } else { n as f64 / d as f64 }
}

fn recovered_ok(t: &Transcript) -> Option<bool> {
    let rep = t.outcome.adversary.as_ref()?;
    let d = &t.outcome.detail;
    let s = |p: Party| rep.recovered_for(p).map(|l| l.to_string());
    match t.scheme {
        Scheme::III => Some(s(Party::P).as_deref() == d["prover_label"].as_str()),
        Scheme::IV => Some(
            s(Party::V0).as_deref() == d["messages"][0].as_str() && s(Party::V1).as_deref() == d["messages"][1].as_str(),
        ),
        _ => None,
    }
}

pub fn stats(transcripts: &[Transcript]) -> Result<StatsReport> {
    if transcripts.is_empty() {
        return Err(Error::arg("no transcripts"));
    }
    let n = transcripts.len();
    let mut trials: BTreeMap<u64, (bool, bool)> = BTreeMap::new();
    let mut branch_counts = BTreeMap::new();
    let mut schemes = BTreeSet::new();
    for t in transcripts {
        schemes.insert(t.scheme);
        let e = trials.entry(t.trial).or_insert((true, false));
        e.0 &= t.outcome.accepted;
        e.1 |= t.outcome.detected_adversary;
        *branch_counts.entry(t.outcome.branch.clone()).or_default() += 1;
    }
    let accepted = transcripts.iter().filter(|t| t.outcome.accepted).count();
    let detected = transcripts.iter().filter(|t| t.outcome.detected_adversary).count();
    let mean_elapsed = transcripts.iter().map(|t| t.outcome.elapsed).sum::<f64>() / n as f64;
    let reports: Vec<_> = transcripts.iter().filter_map(|t| t.outcome.adversary.as_ref().map(|r| (t, r))).collect();
    let adversary = (!reports.is_empty()).then(|| {
        let recov: Vec<bool> = reports.iter().filter_map(|(t, _)| recovered_ok(t)).collect();
        let keyed: Vec<(&[u8], &str)> = reports
            .iter()
            .filter(|(t, _)| t.scheme.has_keys())
            .filter_map(|(t, r)| Some((r.observed.as_slice(), t.outcome.detail["keys"][0].as_str()?)))
            .collect();
        let inference: Vec<bool> = reports
            .iter()
            .filter(|(t, _)| t.scheme == Scheme::B)
            .map(|(t, _)| t.outcome.detail["inference_ok"].as_array().is_some_and(|a| a.iter().all(|v| v == true)))
            .collect();
        AdversaryInfo {
            strategy: reports[0].1.strategy.clone(),
            recovery_rate: (!recov.is_empty()).then(|| rate(recov.iter().filter(|&&b| b).count(), recov.len())),
            key_information_bits: key_information(&keyed),
            inference_error_rate: (!inference.is_empty())
                .then(|| rate(inference.iter().filter(|&&b| !b).count(), inference.len())),
            mean_substitutions: reports.iter().map(|(_, r)| f64::from(r.substituted)).sum::<f64>() / reports.len() as f64,
        }
    });
    Ok(StatsReport {
        schemes: schemes.into_iter().collect(),
        transcripts: n,
        trials: trials.len(),
        acceptance_rate: rate(accepted, n),
        detection_rate: rate(detected, n),
        trial_acceptance_rate: rate(trials.values().filter(|v| v.0).count(), trials.len()),
        trial_detection_rate: rate(trials.values().filter(|v| v.1).count(), trials.len()),
        mean_elapsed,
        branch_counts,
        adversary,
    })
}

/// Reads a line-delimited transcript stream, skipping blank lines.
pub fn read_transcripts<R: BufRead>(r: R) -> Result<Vec<Transcript>> {
    r.lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|(i, l)| {
            let l = l.map_err(|e| Error::arg(format!("read error: {e}")))?;
            Transcript::from_json_line(&l).map_err(|e| Error::arg(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
