// SPDX-License-Identifier: Apache-2.0

//! Privacy-enhanced participatory sensing.
//!
//! Mobile nodes publish reports tagged with a 160-bit token and encrypted
//! under a key derived from the same pairing value; queriers holding the
//! matching label key compute the identical tag, subscribe with it, and
//! decrypt what the broker forwards. The broker ([`broker`]) compares tags and
//! nothing else.
//!
//! ```no_run
//! use pepsi_core::{authority::MasterSecret, label::canonicalize};
//! use pepsi_core::{broker::SubscriptionTable, node::{Measurement, MobileNode}, querier::Querier};
//! use rand::rngs::OsRng;
//!
//! let ms = MasterSecret::generate(&mut OsRng);
//! let label = canonicalize(["Temp", "Irvine, CA"])?;
//! let node = MobileNode::new(ms.issue_node_key(&label));
//! let querier = Querier::new(ms.issue_querier_key(&label));
//!
//! let sp = SubscriptionTable::new();
//! sp.subscribe(&querier.subscription("bob")?.encode()).unwrap();
//! let frame = node.report(&Measurement::new("74 F")?, &mut OsRng).encode();
//! for d in sp.match_report(&frame).unwrap() {
//!     assert_eq!(querier.decrypt_frame(&d.report)?.as_bytes(), b"74 F");
//! }
//! # Ok::<(), pepsi_core::Error>(())
//! ```

pub mod authority;
pub mod bench;
pub mod channel;
pub mod error;
pub mod label;
pub mod node;
pub mod pairing;
pub mod querier;
pub mod sim;

pub use pepsi_broker as broker;
pub use pepsi_wire as wire;

pub use authority::{NodeKey, QuerierKey, SystemParams};
pub use error::{Error, Result};
pub use label::Label;
pub use node::{Measurement, MobileNode, Report};
pub use pairing::Tag;
pub use querier::{Querier, Subscription};
