// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use pepsi_core::authority::MasterSecret;
use pepsi_core::broker::SubscriptionTable;
use pepsi_core::label::canonicalize;
use pepsi_core::{MobileNode, Querier};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// A node and a querier for the same label, issued by one authority.
pub fn pair_for(keywords: &[&str]) -> (MobileNode, Querier) {
    let master = MasterSecret::generate(&mut rng(1));
    let label = canonicalize(keywords).expect("valid label");
    (
        MobileNode::new(master.issue_node_key(&label)),
        Querier::new(master.issue_querier_key(&label)),
    )
}

/// A table with `n` subscriptions under distinct random tags, plus one
/// subscription for `target`'s label so a matching report has one hit.
pub fn populated_table(n: usize, target: &Querier) -> SubscriptionTable {
    use rand::RngCore;
    let table = SubscriptionTable::new();
    let mut r = rng(2);
    for i in 0..n.saturating_sub(1) {
        let mut tag = [0u8; 20];
        r.fill_bytes(&mut tag);
        let sub = pepsi_core::Subscription::new(pepsi_core::Tag::from_bytes(tag), format!("q{i}"))
            .expect("endpoint");
        table.subscribe(&sub.encode()).expect("frame");
    }
    let sub = target.subscription(b"target".to_vec()).expect("endpoint");
    table.subscribe(&sub.encode()).expect("frame");
    table
}
