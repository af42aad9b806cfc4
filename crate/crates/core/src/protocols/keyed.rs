//! Conjugate coding keyed by a two-bit secret: bit `i` of the message becomes
//! `H^{k1} |m_i ⊕ k0⟩`, where `k0` is the label's phase bit and `k1` its
//! parity bit.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::{BellLabel, MAX_QUBITS, ProductState};

pub fn encode_keyed_message(msg: &[u8], key: BellLabel) -> Result<ProductState> {
    if msg.is_empty() || msg.len() > MAX_QUBITS {
        return Err(Error::arg(format!("keyed message must be 1..={MAX_QUBITS} bits, got {}", msg.len())));
    }
    if msg.iter().any(|&b| b > 1) {
        return Err(Error::arg("message bits must be 0 or 1"));
    }
    let shifted: Vec<u8> = msg.iter().map(|&b| b ^ key.phase).collect();
    let mut s = ProductState::basis(&shifted)?;
    if key.parity == 1 {
        for q in 0..msg.len() {
            s.apply_hadamard(q)?;
        }
    }
    Ok(s)
}

/// Decodes with `key`; consumes the carrier.
pub fn decode_keyed_message<R: Rng + ?Sized>(mut carrier: ProductState, key: BellLabel, rng: &mut R) -> Result<Vec<u8>> {
    (0..carrier.len())
        .map(|q| {
            if key.parity == 1 {
                carrier.apply_hadamard(q)?;
            }
            Ok(carrier.measure_z(q, rng)? ^ key.phase)
        })
        .collect()
}

/// Uniform random bit string.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_key_is_plain_basis_encoding() {
        let s = encode_keyed_message(&[1, 0], BellLabel::B00).unwrap();
        assert!((s.to_state_vector().unwrap().amplitudes()[0b01].re - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(decode_keyed_message(s, BellLabel::B00, &mut rng).unwrap(), vec![1, 0]);
    }

    #[test]
    fn right_key_always_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for key in BellLabel::ALL {
            for m in 0..16u8 {
                let msg: Vec<u8> = (0..4).map(|i| (m >> i) & 1).collect();
                let s = encode_keyed_message(&msg, key).unwrap();
                assert_eq!(decode_keyed_message(s, key, &mut rng).unwrap(), msg);
            }
        }
    }

    #[test]
    fn wrong_basis_key_scrambles_about_half_the_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let msg = random_bits(16, &mut rng);
        let mut wrong = 0;
        for _ in 0..200 {
            let s = encode_keyed_message(&msg, BellLabel::B01).unwrap();
            let got = decode_keyed_message(s, BellLabel::B00, &mut rng).unwrap();
            wrong += got.iter().zip(&msg).filter(|(a, b)| a != b).count();
        }
        let rate = wrong as f64 / 3200.0;
        assert!((rate - 0.5).abs() < 0.05, "{rate}");
    }

    #[test]
    fn bad_messages_are_rejected() {
        assert!(encode_keyed_message(&[], BellLabel::B00).is_err());
        assert!(encode_keyed_message(&[2], BellLabel::B00).is_err());
    }
}
