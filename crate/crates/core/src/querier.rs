// SPDX-License-Identifier: Apache-2.0

//! Querier side: subscription tags and report decryption.
//!
//! Holding a key and subscribing are independent: a querier may hold keys for
//! labels it never subscribes to.

use pepsi_wire::SubscriptionFrame;

pub use pepsi_wire::SubscriptionFrame as Subscription;

use crate::authority::QuerierKey;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::label::{encode_identity, Label};
use crate::node::{Measurement, Report};
use crate::pairing::{domain, hash_to_g1, pair, GtElement, Tag};

/// `e(H1(id), z·H2(id))`; equal to the node side for the same label.
pub fn querier_shared_secret(qk: &QuerierKey) -> GtElement {
    let id = encode_identity(qk.label());
    pair(&hash_to_g1(id.as_bytes(), domain::H1), qk.point())
}

/// A subscription carries the tag and the endpoint, never the label.
pub fn make_subscription(qk: &QuerierKey, endpoint: impl Into<Vec<u8>>) -> Result<Subscription> {
    Querier::new(qk.clone()).subscription(endpoint)
}

pub fn decrypt_report(qk: &QuerierKey, report: &Report) -> Result<Measurement> {
    Channel::from_shared(&querier_shared_secret(qk)).open(report)
}

/// A querier key with its shared secret computed once.
#[derive(Debug, Clone)]
pub struct Querier {
    key: QuerierKey,
    channel: Channel,
}

impl Querier {
    pub fn new(key: QuerierKey) -> Self {
        let channel = Channel::from_shared(&querier_shared_secret(&key));
        Querier { key, channel }
    }

    pub fn label(&self) -> &Label {
        self.key.label()
    }

    pub fn tag(&self) -> Tag {
        self.channel.tag()
    }

    pub fn subscription(&self, endpoint: impl Into<Vec<u8>>) -> Result<Subscription> {
        SubscriptionFrame::new(self.tag(), endpoint).map_err(Error::InvalidSubscription)
    }

    /// Fails with [`Error::AuthenticationFailed`] on a label mismatch or any
    /// tampering with tag, nonce, or ciphertext.
    pub fn decrypt(&self, report: &Report) -> Result<Measurement> {
        self.channel.open(report)
    }

    pub fn decrypt_frame(&self, frame: &[u8]) -> Result<Measurement> {
        let report = Report::decode(frame).map_err(Error::MalformedReport)?;
        self.decrypt(&report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authority::MasterSecret;
    use crate::label::canonicalize;
    use crate::node::{node_shared_secret, MobileNode};
    use crate::pairing::{hash_to_g2, Scalar};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pair_for(ms: &MasterSecret, kw: &[&str]) -> (MobileNode, Querier) {
        let l = canonicalize(kw).unwrap();
        (
            MobileNode::new(ms.issue_node_key(&l)),
            Querier::new(ms.issue_querier_key(&l)),
        )
    }

    fn m(bytes: &[u8]) -> Measurement {
        Measurement::new(bytes).unwrap()
    }

    #[test]
    fn unit_master_querier_secret() {
        let ms = MasterSecret::from_scalar(Scalar::one()).unwrap();
        let qk = ms.issue_querier_key(&canonicalize(["temp"]).unwrap());
        let id = encode_identity(qk.label());
        assert_eq!(
            querier_shared_secret(&qk),
            pair(&hash_to_g1(id.as_bytes(), domain::H1), &hash_to_g2(id.as_bytes(), domain::H2))
        );
    }

    #[test]
    fn both_sides_agree_over_100_labels() {
        let ms = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(10));
        for i in 0..100 {
            let l = canonicalize([format!("kw{i}"), format!("city {}", i % 7)]).unwrap();
            assert_eq!(
                node_shared_secret(&ms.issue_node_key(&l)),
                querier_shared_secret(&ms.issue_querier_key(&l))
            );
        }
    }

    #[test]
    fn independent_authorities_disagree() {
        let l = canonicalize(["temp"]).unwrap();
        let a = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(1));
        let b = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(2));
        assert_ne!(
            querier_shared_secret(&a.issue_querier_key(&l)),
            querier_shared_secret(&b.issue_querier_key(&l))
        );
    }

    #[test]
    fn subscription_matches_report_tag() {
        let ms = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(11));
        let (node, querier) = pair_for(&ms, &["Temp", "Irvine, CA"]);
        let sub = querier.subscription(&b"bob"[..]).unwrap();
        let report = node.report(&m(b"74 F"), &mut ChaCha20Rng::seed_from_u64(1));
        assert_eq!(sub.tag, report.tag);
        assert_eq!(sub, querier.subscription(&b"bob"[..]).unwrap());
        assert!(querier.subscription(Vec::new()).is_err());
    }

    #[test]
    fn round_trip_and_failures() {
        let ms = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(12));
        let (node, querier) = pair_for(&ms, &["temp"]);
        let (_, other) = pair_for(&ms, &["noise"]);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let report = node.report(&m(b"74 F"), &mut rng);

        assert_eq!(querier.decrypt(&report).unwrap().as_bytes(), b"74 F");
        assert_eq!(
            decrypt_report(&ms.issue_querier_key(querier.label()), &report)
                .unwrap()
                .as_bytes(),
            b"74 F"
        );
        assert!(matches!(other.decrypt(&report), Err(Error::AuthenticationFailed)));

        let mut flipped = report.clone();
        flipped.ciphertext[0] ^= 1;
        assert!(matches!(querier.decrypt(&flipped), Err(Error::AuthenticationFailed)));

        // Re-tagging a report breaks authentication.
        let mut retagged = report.clone();
        retagged.tag = other.tag();
        assert!(matches!(querier.decrypt(&retagged), Err(Error::AuthenticationFailed)));

        let mut frame = report.encode();
        frame.pop();
        assert!(matches!(querier.decrypt_frame(&frame), Err(Error::MalformedReport(_))));
    }

    #[test]
    fn subscription_bytes_do_not_contain_keywords() {
        let ms = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(13));
        for i in 0..100 {
            let l = canonicalize([format!("keyword-{i}"), "irvine, ca".to_string()]).unwrap();
            let sub = make_subscription(&ms.issue_querier_key(&l), &b"q"[..]).unwrap();
            let bytes = sub.encode();
            assert_eq!(bytes.len(), 27 + 1);
            for kw in l.keywords() {
                // Any 4-byte window of a keyword would be an accidental leak.
                for w in kw.as_bytes().windows(4) {
                    assert!(!bytes.windows(4).any(|b| b == w), "leaked {kw:?}");
                }
            }
        }
    }
}
