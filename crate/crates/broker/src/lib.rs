// SPDX-License-Identifier: Apache-2.0

//! The service provider: an oblivious matching broker.
//!
//! Subscriptions are indexed by their 20-byte tag. An incoming report is
//! matched by looking up its tag and forwarding the frame, bit for bit, to
//! every subscription in that bucket. Nothing else about the report is read.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use pepsi_wire::{peek_report_tag, FrameError, SubscriptionFrame, Tag};
use thiserror::Error;

pub type SubscriptionId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrokerError {
    #[error("malformed subscription: {0}")]
    MalformedSubscription(#[source] FrameError),
    #[error("malformed report: {0}")]
    MalformedReport(#[source] FrameError),
}

/// A report frame routed to one subscription.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub subscription_id: SubscriptionId,
    pub endpoint: Arc<[u8]>,
    /// The report frame exactly as received.
    pub report: Arc<[u8]>,
}

impl Delivery {
    /// Wire form: subscription id as u64 big-endian, then the verbatim report frame.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.report.len());
        out.extend_from_slice(&self.subscription_id.to_be_bytes());
        out.extend_from_slice(&self.report);
        out
    }

    /// Splits an encoded delivery back into `(subscription id, report frame)`.
    pub fn split(bytes: &[u8]) -> Option<(SubscriptionId, &[u8])> {
        let (id, report) = bytes.split_at_checked(8)?;
        Some((u64::from_be_bytes(id.try_into().ok()?), report))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub reports_seen: u64,
    pub matches_made: u64,
    pub subs_active: u64,
}

#[derive(Debug)]
struct Entry {
    id: SubscriptionId,
    endpoint: Arc<[u8]>,
}

#[derive(Debug, Default)]
struct Index {
    next_id: SubscriptionId,
    by_tag: HashMap<Tag, Vec<Entry>>,
    tag_of: HashMap<SubscriptionId, Tag>,
}

/// Tag-indexed subscription multimap.
///
/// `match_report` takes a shared lock, so any number of matches run in
/// parallel. `subscribe` and `unsubscribe` take the exclusive lock, so a
/// concurrent match observes the table entirely before or after a mutation.
#[derive(Debug, Default)]
pub struct SubscriptionTable {
    index: RwLock<Index>,
    reports_seen: AtomicU64,
    matches_made: AtomicU64,
}

impl SubscriptionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a `PEPS` frame. Ids start at 1 and are never reused.
    pub fn subscribe(&self, frame: &[u8]) -> Result<SubscriptionId, BrokerError> {
        let sub = SubscriptionFrame::decode(frame).map_err(BrokerError::MalformedSubscription)?;
        Ok(self.subscribe_frame(sub))
    }

    pub fn subscribe_frame(&self, sub: SubscriptionFrame) -> SubscriptionId {
        let mut index = self.index.write().unwrap_or_else(|e| e.into_inner());
        index.next_id += 1;
        let id = index.next_id;
        index.by_tag.entry(sub.tag).or_default().push(Entry {
            id,
            endpoint: sub.endpoint.into(),
        });
        index.tag_of.insert(id, sub.tag);
        id
    }

    /// Returns `false` if `id` was not active.
    pub fn unsubscribe(&self, id: SubscriptionId) -> bool {
        let mut index = self.index.write().unwrap_or_else(|e| e.into_inner());
        let Some(tag) = index.tag_of.remove(&id) else {
            return false;
        };
        if let Some(bucket) = index.by_tag.get_mut(&tag) {
            bucket.retain(|e| e.id != id);
            if bucket.is_empty() {
                index.by_tag.remove(&tag);
            }
        }
        true
    }

    /// Routes a `PEPR` frame to every subscription carrying the same tag, in
    /// subscription order. Unmatched reports are counted and dropped.
    pub fn match_report(&self, report: &[u8]) -> Result<Vec<Delivery>, BrokerError> {
        let tag = peek_report_tag(report).map_err(BrokerError::MalformedReport)?;
        let deliveries = {
            let index = self.index.read().unwrap_or_else(|e| e.into_inner());
            match index.by_tag.get(&tag) {
                Some(bucket) => {
                    let frame: Arc<[u8]> = Arc::from(report);
                    bucket
                        .iter()
                        .map(|e| Delivery {
                            subscription_id: e.id,
                            endpoint: Arc::clone(&e.endpoint),
                            report: Arc::clone(&frame),
                        })
                        .collect()
                }
                None => Vec::new(),
            }
        };
        self.reports_seen.fetch_add(1, Ordering::Relaxed);
        self.matches_made
            .fetch_add(deliveries.len() as u64, Ordering::Relaxed);
        Ok(deliveries)
    }

    pub fn stats(&self) -> Stats {
        let subs_active = self
            .index
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .tag_of
            .len() as u64;
        Stats {
            reports_seen: self.reports_seen.load(Ordering::Relaxed),
            matches_made: self.matches_made.load(Ordering::Relaxed),
            subs_active,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pepsi_wire::{ReportFrame, AUTH_TAG_LEN};

    fn sub(tag: u8, endpoint: &str) -> Vec<u8> {
        SubscriptionFrame::new(Tag::from_bytes([tag; 20]), endpoint.as_bytes().to_vec())
            .unwrap()
            .encode()
    }

    fn report(tag: u8) -> Vec<u8> {
        ReportFrame {
            tag: Tag::from_bytes([tag; 20]),
            nonce: [tag; 12],
            ciphertext: vec![0x55; 5 + AUTH_TAG_LEN],
        }
        .encode()
    }

    #[test]
    fn first_subscription_gets_id_one() {
        let table = SubscriptionTable::new();
        assert_eq!(table.stats(), Stats::default());
        assert_eq!(table.subscribe(&sub(1, "q")).unwrap(), 1);
        assert_eq!(table.stats().subs_active, 1);
    }

    #[test]
    fn same_tag_shares_a_bucket_and_duplicates_are_kept() {
        let table = SubscriptionTable::new();
        let a = table.subscribe(&sub(1, "q")).unwrap();
        let b = table.subscribe(&sub(1, "q")).unwrap();
        assert_ne!(a, b);
        let d = table.match_report(&report(1)).unwrap();
        assert_eq!(d.iter().map(|d| d.subscription_id).collect::<Vec<_>>(), vec![a, b]);
    }

    #[test]
    fn unsubscribe_semantics() {
        let table = SubscriptionTable::new();
        let id = table.subscribe(&sub(3, "q")).unwrap();
        assert!(table.unsubscribe(id));
        assert!(!table.unsubscribe(id));
        assert!(!table.unsubscribe(999));
        assert!(table.match_report(&report(3)).unwrap().is_empty());
        assert_eq!(table.stats().subs_active, 0);
    }

    #[test]
    fn only_matching_subscriptions_receive() {
        let table = SubscriptionTable::new();
        assert!(table.match_report(&report(1)).unwrap().is_empty());
        let hit = table.subscribe(&sub(1, "hit")).unwrap();
        table.subscribe(&sub(2, "miss")).unwrap();
        let d = table.match_report(&report(1)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].subscription_id, hit);
        assert_eq!(&*d[0].endpoint, b"hit");
        assert_eq!(&*d[0].report, &report(1)[..]);
    }

    #[test]
    fn bucket_order_is_insertion_order() {
        let table = SubscriptionTable::new();
        let ids: Vec<_> = (0..6)
            .map(|i| table.subscribe(&sub(4, &format!("q{i}"))).unwrap())
            .collect();
        // Removing from the middle keeps the remaining order.
        table.unsubscribe(ids[2]);
        let got: Vec<_> = table
            .match_report(&report(4))
            .unwrap()
            .into_iter()
            .map(|d| d.subscription_id)
            .collect();
        assert_eq!(got, vec![ids[0], ids[1], ids[3], ids[4], ids[5]]);
    }

    #[test]
    fn counters_after_one_match() {
        let table = SubscriptionTable::new();
        table.subscribe(&sub(1, "q")).unwrap();
        table.match_report(&report(1)).unwrap();
        assert_eq!(
            table.stats(),
            Stats {
                reports_seen: 1,
                matches_made: 1,
                subs_active: 1
            }
        );
    }

    #[test]
    fn malformed_input_is_rejected_without_side_effects() {
        let table = SubscriptionTable::new();
        table.subscribe(&sub(1, "q")).unwrap();
        let mut bad = report(1);
        bad.pop();
        assert!(matches!(
            table.match_report(&bad),
            Err(BrokerError::MalformedReport(_))
        ));
        assert!(matches!(
            table.subscribe(&bad),
            Err(BrokerError::MalformedSubscription(_))
        ));
        assert_eq!(table.stats().reports_seen, 0);
        assert_eq!(table.stats().subs_active, 1);
    }

    #[test]
    fn delivery_encoding() {
        let d = Delivery {
            subscription_id: 258,
            endpoint: Arc::from(&b"q"[..]),
            report: Arc::from(&report(1)[..]),
        };
        let bytes = d.encode();
        assert_eq!(&bytes[..8], &[0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(Delivery::split(&bytes), Some((258, &report(1)[..])));
    }
}
