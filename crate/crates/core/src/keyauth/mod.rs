//! Position-based key establishment and rotation-cipher authentication.

mod auth;
mod keys;

pub use auth::{AuthSession, nearest_neighbor_distance, pairwise_overlap};
pub use keys::{AccumulatedKeys, KeyPair, accumulate_keys, bits_to_hex, hex_to_bits, labels_to_bits};
