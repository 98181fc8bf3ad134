// SPDX-License-Identifier: Apache-2.0

//! Mobile node report pipeline: shared secret, tag, encrypt, frame.
//!
//! The node derives its encryption key locally from its issued key. Anyone
//! holding a key for the same label derives the same symmetric key.

use pepsi_wire::MAX_PAYLOAD_LEN;
use rand::{CryptoRng, RngCore};

pub use pepsi_wire::ReportFrame as Report;

use crate::authority::NodeKey;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::label::{encode_identity, Label};
use crate::pairing::{domain, hash_to_g2, pair, GtElement, Tag};

/// Opaque sensor reading, 1..=4096 bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct Measurement(Vec<u8>);

impl Measurement {
    pub fn new(payload: impl Into<Vec<u8>>) -> Result<Self> {
        let payload = payload.into();
        if payload.is_empty() {
            return Err(Error::EmptyPayload);
        }
        if payload.len() > MAX_PAYLOAD_LEN {
            return Err(Error::PayloadTooLarge(payload.len()));
        }
        Ok(Measurement(payload))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Debug for Measurement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Measurement({} bytes)", self.0.len())
    }
}

/// `e(z·H1(id), H2(id))`
pub fn node_shared_secret(nk: &NodeKey) -> GtElement {
    let id = encode_identity(nk.label());
    pair(nk.point(), &hash_to_g2(id.as_bytes(), domain::H2))
}

/// Builds a report from scratch, pairing included. This is the per-report
/// cost path; [`MobileNode`] caches the pairing instead.
pub fn make_report<R: RngCore + CryptoRng>(nk: &NodeKey, m: &Measurement, rng: &mut R) -> Report {
    Channel::from_shared(&node_shared_secret(nk)).seal(m, rng)
}

/// A node key with its shared secret computed once.
#[derive(Debug, Clone)]
pub struct MobileNode {
    key: NodeKey,
    channel: Channel,
}

impl MobileNode {
    pub fn new(key: NodeKey) -> Self {
        let channel = Channel::from_shared(&node_shared_secret(&key));
        MobileNode { key, channel }
    }

    pub fn key(&self) -> &NodeKey {
        &self.key
    }

    pub fn label(&self) -> &Label {
        self.key.label()
    }

    pub fn tag(&self) -> Tag {
        self.channel.tag()
    }

    pub fn report<R: RngCore + CryptoRng>(&self, m: &Measurement, rng: &mut R) -> Report {
        self.channel.seal(m, rng)
    }

    /// Validates `payload` and returns the encoded `PEPR` frame.
    pub fn report_frame<R: RngCore + CryptoRng>(&self, payload: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        Ok(self.report(&Measurement::new(payload)?, rng).encode())
    }
}
