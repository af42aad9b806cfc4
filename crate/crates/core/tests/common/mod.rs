//! Brute-force state-vector oracle, written independently of the library's
//! simulator. Qubit `q` is bit `q` of the basis index.

#![allow(dead_code)]

use num_complex::Complex64;
use qpvsim::quantum::BellLabel;

pub type Ket = Vec<Complex64>;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `⟨x y | β_l⟩` for the first qubit in `x`, second in `y`.
pub fn bell_amp(l: BellLabel, x: usize, y: usize) -> f64 {
    if y != x ^ usize::from(l.parity) {
        return 0.0;
    }
    if l.phase == 1 && x == 1 { -H } else { H }
}

fn bit(i: usize, q: usize) -> usize {
    (i >> q) & 1
}

/// Product of Bell pairs on `n` qubits; unlisted qubits are `|0⟩`.
pub fn product(n: usize, pairs: &[(usize, usize, BellLabel)]) -> Ket {
    let used: usize = pairs.iter().map(|&(a, b, _)| (1 << a) | (1 << b)).sum();
    (0..1usize << n)
        .map(|i| {
            if i & !used != 0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(pairs.iter().map(|&(a, b, l)| bell_amp(l, bit(i, a), bit(i, b))).product(), 0.0)
        })
        .collect()
}

pub fn norm_sqr(k: &Ket) -> f64 {
    k.iter().map(|c| c.norm_sqr()).sum()
}

pub fn inner(a: &Ket, b: &Ket) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unnormalized projection of `(q1, q2)` onto `β_l`.
pub fn project(k: &Ket, q1: usize, q2: usize, l: BellLabel) -> Ket {
    let mask = (1 << q1) | (1 << q2);
    let mut out = vec![Complex64::new(0.0, 0.0); k.len()];
    for base in (0..k.len()).filter(|i| i & mask == 0) {
        let idx = |x: usize, y: usize| base | (x << q1) | (y << q2);
        let mut c = Complex64::new(0.0, 0.0);
        for x in 0..2 {
            for y in 0..2 {
                c += bell_amp(l, x, y) * k[idx(x, y)];
            }
        }
        for x in 0..2 {
            for y in 0..2 {
                out[idx(x, y)] = c * bell_amp(l, x, y);
            }
        }
    }
    out
}

pub fn normalize(mut k: Ket) -> Ket {
    let n = norm_sqr(&k).sqrt();
    assert!(n > 1e-12, "zero-probability branch");
    k.iter_mut().for_each(|c| *c /= n);
    k
}

/// Probabilities of the four Bell outcomes on `(q1, q2)`.
pub fn bell_probs(k: &Ket, q1: usize, q2: usize) -> [f64; 4] {
    BellLabel::ALL.map(|l| norm_sqr(&project(k, q1, q2, l)))
}

/// Projects onto a chosen outcome and renormalizes.
pub fn measure_forced(k: &Ket, q1: usize, q2: usize, l: BellLabel) -> Ket {
    normalize(project(k, q1, q2, l))
}

/// The Bell label of `(q1, q2)` if the pair is in a definite Bell state.
pub fn definite_label(k: &Ket, q1: usize, q2: usize) -> Option<BellLabel> {
    let probs = bell_probs(k, q1, q2);
    let total: f64 = probs.iter().sum();
    BellLabel::ALL.into_iter().zip(probs).find(|&(_, p)| (p / total - 1.0).abs() < 1e-9).map(|(l, _)| l)
}

/// Applies `X^{parity} Z^{phase}` to qubit `q`.
pub fn apply_label_pauli(k: &Ket, q: usize, delta: BellLabel) -> Ket {
    (0..k.len())
        .map(|i| {
            let src = if delta.parity == 1 { i ^ (1 << q) } else { i };
            let sign = if delta.phase == 1 && bit(src, q) == 1 { -1.0 } else { 1.0 };
            k[src] * sign
        })
        .collect()
}

pub fn label(s: &str) -> BellLabel {
    s.parse().unwrap()
}
