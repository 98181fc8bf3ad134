// SPDX-License-Identifier: Apache-2.0

//! Prints reference vectors computed from the pairing primitives alone,
//! without going through the node or querier pipelines. `tests/golden.rs`
//! pins the output.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use pepsi_core::pairing::{
    derive_tag, domain, hash_to_g1, hash_to_g2, pair, random_scalar,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn main() {
    // Identity bytes for ["irvine, ca", "temp"], written out by hand.
    let mut id = Vec::new();
    for kw in ["irvine, ca", "temp"] {
        id.extend_from_slice(&(kw.len() as u16).to_be_bytes());
        id.extend_from_slice(kw.as_bytes());
    }
    println!("identity={}", hex::encode(&id));

    let h1 = hash_to_g1(&id, domain::H1);
    let h2 = hash_to_g2(&id, domain::H2);
    println!("h1={}", hex::encode(h1.to_bytes()));
    println!("h2={}", hex::encode(h2.to_bytes()));
    let unit_shared = pair(&h1, &h2);
    println!("unit_tag={}", derive_tag(&unit_shared));

    // Random master secret from seed 2024.
    let z = random_scalar(&mut ChaCha20Rng::seed_from_u64(2024));
    let node_point = h1.mul(&z);
    let querier_point = h2.mul(&z);
    println!("z={}", hex::encode(z.to_bytes()));
    println!("node_point={}", hex::encode(node_point.to_bytes()));
    println!("querier_point={}", hex::encode(querier_point.to_bytes()));
    let shared = pair(&node_point, &h2);
    assert_eq!(shared, pair(&h1, &querier_point));
    let tag = derive_tag(&shared);
    println!("tag={tag}");

    // Report for "74 F" with the nonce drawn from seed 99.
    let mut nonce = [0u8; 12];
    ChaCha20Rng::seed_from_u64(99).fill_bytes(&mut nonce);
    let mut ad = tag.as_bytes().to_vec();
    ad.extend_from_slice(&nonce);
    // The library never exposes key bytes, so redo the HKDF step here.
    let okm = {
        let hk = hkdf::Hkdf::<sha2::Sha256>::new(None, &shared.to_bytes());
        let mut out = [0u8; 32];
        hk.expand(domain::ENC, &mut out).unwrap();
        out
    };
    let ct = Aes256Gcm::new((&okm).into())
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: b"74 F", aad: &ad })
        .unwrap();
    let mut frame = b"PEPR\x01".to_vec();
    frame.extend_from_slice(tag.as_bytes());
    frame.extend_from_slice(&nonce);
    frame.extend_from_slice(&4u32.to_be_bytes());
    frame.extend_from_slice(&ct);
    println!("report={}", hex::encode(&frame));
}
