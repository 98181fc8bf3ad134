// SPDX-License-Identifier: Apache-2.0

//! Tag plus AEAD key derived from one shared target-group value.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use pepsi_wire::{associated_data, ReportFrame, NONCE_LEN};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::node::Measurement;
use crate::pairing::{derive_key, derive_tag, GtElement, SymmetricKey, Tag};

/// What both ends of a label hold once the pairing is done: the public tag and
/// the AES-256-GCM key.
#[derive(Debug, Clone)]
pub struct Channel {
    tag: Tag,
    key: SymmetricKey,
}

impl Channel {
    pub fn from_shared(shared: &GtElement) -> Self {
        Channel {
            tag: derive_tag(shared),
            key: derive_key(shared),
        }
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    fn cipher(&self) -> Aes256Gcm {
        Aes256Gcm::new(self.key.expose().into())
    }

    /// Encrypts under a fresh random nonce with `tag || nonce` as associated data.
    pub fn seal<R: RngCore + CryptoRng>(&self, m: &Measurement, rng: &mut R) -> ReportFrame {
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let ad = associated_data(&self.tag, &nonce);
        let ciphertext = self
            .cipher()
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: m.as_bytes(),
                    aad: &ad,
                },
            )
            .expect("AES-GCM encryption within size limits");
        ReportFrame {
            tag: self.tag,
            nonce,
            ciphertext,
        }
    }

    pub fn open(&self, report: &ReportFrame) -> Result<Measurement> {
        let plain = self
            .cipher()
            .decrypt(
                Nonce::from_slice(&report.nonce),
                Payload {
                    msg: &report.ciphertext,
                    aad: &report.associated_data(),
                },
            )
            .map_err(|_| Error::AuthenticationFailed)?;
        Measurement::new(plain)
    }
}
