// SPDX-License-Identifier: Apache-2.0

//! End-to-end simulation with a plaintext matching oracle.
//!
//! A scenario registers nodes and queriers with one authority, uploads
//! subscriptions to a [`SubscriptionTable`], publishes reports through a
//! transport, and decrypts every delivery. Expected deliveries are computed
//! independently by comparing labels (never tags) over all
//! (report, subscription) pairs, and the two sets are compared.
//!
//! Scenario files are TOML:
//!
//! ```toml
//! seed = 7
//! num_nodes = 10
//! num_queriers = 10
//! reports_per_node = 10
//! subscription_density = 0.5
//! payload_size = 16
//! label_universe = [["Temp", "Irvine, CA"], ["noise"]]
//! # optional
//! threads = 1            # > 1 drives nodes concurrently
//! transport = "direct"   # or "loopback"
//! ```

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use pepsi_broker::{Delivery, SubscriptionId, SubscriptionTable};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;

use crate::authority::{Ledger, MasterSecret, RegistrationAuthority};
use crate::error::{Error, Result};
use crate::label::{canonicalize, Label};
use crate::node::MobileNode;
use crate::querier::Querier;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    /// Nodes call the broker directly.
    #[default]
    Direct,
    /// Frames cross an in-process channel to a broker thread.
    Loopback,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub num_nodes: usize,
    pub num_queriers: usize,
    pub label_universe: Vec<Vec<String>>,
    pub reports_per_node: usize,
    pub subscription_density: f64,
    pub payload_size: usize,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub transport: TransportKind,
}

fn one() -> usize {
    1
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::ConfigInvalid(msg.to_owned()));
        if self.num_nodes == 0 || self.num_queriers == 0 || self.reports_per_node == 0 {
            return bad("num_nodes, num_queriers and reports_per_node must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.subscription_density) {
            return bad("subscription_density must be in [0, 1]");
        }
        if self.label_universe.is_empty() {
            return bad("label_universe must not be empty");
        }
        if self.payload_size == 0 || self.payload_size > pepsi_wire::MAX_PAYLOAD_LEN {
            return bad("payload_size must be in 1..=4096");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        for raw in &self.label_universe {
            canonicalize(raw).map_err(|e| Error::ConfigInvalid(format!("label {raw:?}: {e}")))?;
        }
        Ok(())
    }
}

/// Every random choice of a scenario, drawn up front from the seed.
#[derive(Debug, Clone)]
pub struct ScenarioPlan {
    pub labels: Vec<Label>,
    /// Index into `labels` for each node.
    pub node_labels: Vec<usize>,
    /// For each querier, the label indices it subscribes to (ascending).
    pub querier_labels: Vec<Vec<usize>>,
    /// `payloads[node][report]`
    pub payloads: Vec<Vec<Vec<u8>>>,
    node_seeds: Vec<u64>,
    master_seed: u64,
}

impl ScenarioPlan {
    pub fn generate(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let labels = cfg
            .label_universe
            .iter()
            .map(canonicalize)
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let master_seed = rng.next_u64();
        let node_labels = (0..cfg.num_nodes)
            .map(|_| rng.gen_range(0..labels.len()))
            .collect();
        let querier_labels = (0..cfg.num_queriers)
            .map(|_| {
                (0..labels.len())
                    .filter(|_| rng.gen_bool(cfg.subscription_density))
                    .collect()
            })
            .collect();
        let payloads = (0..cfg.num_nodes)
            .map(|_| {
                (0..cfg.reports_per_node)
                    .map(|_| {
                        let mut p = vec![0u8; cfg.payload_size];
                        rng.fill_bytes(&mut p);
                        p
                    })
                    .collect()
            })
            .collect();
        let node_seeds = (0..cfg.num_nodes).map(|_| rng.next_u64()).collect();
        Ok(ScenarioPlan {
            labels,
            node_labels,
            querier_labels,
            payloads,
            node_seeds,
            master_seed,
        })
    }

    /// Brute-force plaintext matching: every (report, subscription) pair whose
    /// labels are equal. Reports are `(node, index)`, subscriptions are
    /// `(querier, label index)`.
    pub fn expected_deliveries(&self) -> HashSet<(ReportId, SubscriptionSlot)> {
        let mut expected = HashSet::new();
        for (node, &node_label) in self.node_labels.iter().enumerate() {
            for report in 0..self.payloads[node].len() {
                for (querier, subs) in self.querier_labels.iter().enumerate() {
                    for &sub_label in subs {
                        if self.labels[sub_label] == self.labels[node_label] {
                            expected.insert(((node, report), (querier, sub_label)));
                        }
                    }
                }
            }
        }
        expected
    }
}

pub type ReportId = (usize, usize);
pub type SubscriptionSlot = (usize, usize);

/// Counters that must be identical across runs with the same seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScenarioCounters {
    pub reports_published: u64,
    pub subscriptions: u64,
    pub deliveries_expected: u64,
    pub deliveries_made: u64,
    pub deliveries_missed: u64,
    pub false_deliveries: u64,
    pub decryptions_ok: u64,
    pub decryptions_failed: u64,
    pub sp_reports_seen: u64,
    pub sp_matches_made: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub registration: Duration,
    pub subscription: Duration,
    pub reporting: Duration,
    pub delivery: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub counters: ScenarioCounters,
    pub timings: PhaseTimings,
}

impl ScenarioResult {
    /// No false or missed deliveries and every delivery decrypted.
    pub fn is_sound(&self) -> bool {
        let c = &self.counters;
        c.false_deliveries == 0
            && c.decryptions_failed == 0
            && c.deliveries_missed == 0
            && c.deliveries_made == c.deliveries_expected
    }

    /// `key=value` lines for scripting.
    pub fn to_kv_lines(&self) -> String {
        let c = &self.counters;
        let t = &self.timings;
        let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
        [
            format!("reports={}", c.reports_published),
            format!("subscriptions={}", c.subscriptions),
            format!("deliveries_expected={}", c.deliveries_expected),
            format!("deliveries={}", c.deliveries_made),
            format!("deliveries_missed={}", c.deliveries_missed),
            format!("false_deliveries={}", c.false_deliveries),
            format!("decryptions_ok={}", c.decryptions_ok),
            format!("decryptions_failed={}", c.decryptions_failed),
            format!("sp_reports_seen={}", c.sp_reports_seen),
            format!("sp_matches_made={}", c.sp_matches_made),
            format!("registration_ms={}", ms(t.registration)),
            format!("subscription_ms={}", ms(t.subscription)),
            format!("reporting_ms={}", ms(t.reporting)),
            format!("delivery_ms={}", ms(t.delivery)),
            format!("sound={}", self.is_sound()),
        ]
        .join("\n")
    }
}

/// Carries frames from nodes to the broker. Only raw frame bytes cross it;
/// no sender identity is attached.
trait Transport {
    fn publish(&self, sp: &SubscriptionTable, frames: Vec<Vec<u8>>) -> Result<Vec<Delivery>>;
}

struct DirectTransport;

impl Transport for DirectTransport {
    fn publish(&self, sp: &SubscriptionTable, frames: Vec<Vec<u8>>) -> Result<Vec<Delivery>> {
        let mut out = Vec::new();
        for frame in frames {
            out.extend(sp.match_report(&frame).map_err(broker_error)?);
        }
        Ok(out)
    }
}

/// A broker thread fed through an mpsc channel.
struct LoopbackTransport;

impl Transport for LoopbackTransport {
    fn publish(&self, sp: &SubscriptionTable, frames: Vec<Vec<u8>>) -> Result<Vec<Delivery>> {
        thread::scope(|s| {
            let (tx, rx) = mpsc::channel::<Vec<u8>>();
            let broker = s.spawn(move || -> Result<Vec<Delivery>> {
                let mut out = Vec::new();
                for frame in rx {
                    out.extend(sp.match_report(&frame).map_err(broker_error)?);
                }
                Ok(out)
            });
            for frame in frames {
                if tx.send(frame).is_err() {
                    break;
                }
            }
            drop(tx);
            broker.join().expect("broker thread panicked")
        })
    }
}

fn broker_error(e: pepsi_broker::BrokerError) -> Error {
    match e {
        pepsi_broker::BrokerError::MalformedReport(f) => Error::MalformedReport(f),
        pepsi_broker::BrokerError::MalformedSubscription(f) => Error::InvalidSubscription(f),
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let plan = ScenarioPlan::generate(cfg)?;
    let expected = plan.expected_deliveries();
    let mut timings = PhaseTimings::default();

    // Registration.
    let started = Instant::now();
    let master = MasterSecret::generate(&mut ChaCha20Rng::seed_from_u64(plan.master_seed));
    let mut ra = RegistrationAuthority::new(master, Ledger::in_memory());
    let nodes = plan
        .node_labels
        .iter()
        .enumerate()
        .map(|(i, &l)| Ok(MobileNode::new(ra.register_node(&plan.labels[l], &format!("node-{i}"))?)))
        .collect::<Result<Vec<_>>>()?;
    let mut queriers: HashMap<SubscriptionSlot, Querier> = HashMap::new();
    for (j, subs) in plan.querier_labels.iter().enumerate() {
        for &l in subs {
            let key = ra.register_querier(&plan.labels[l], &format!("querier-{j}"))?;
            queriers.insert((j, l), Querier::new(key));
        }
    }
    timings.registration = started.elapsed();

    // Subscription.
    let started = Instant::now();
    let sp = SubscriptionTable::new();
    let mut slot_of: HashMap<SubscriptionId, SubscriptionSlot> = HashMap::new();
    for (j, subs) in plan.querier_labels.iter().enumerate() {
        for &l in subs {
            let frame = queriers[&(j, l)].subscription(format!("querier-{j}"))?.encode();
            let id = sp.subscribe(&frame).map_err(broker_error)?;
            slot_of.insert(id, (j, l));
        }
    }
    timings.subscription = started.elapsed();

    // Reporting. Each node has its own rng, so frames do not depend on thread
    // scheduling.
    let started = Instant::now();
    let build_frames = |i: usize| -> Vec<Vec<u8>> {
        let mut rng = ChaCha20Rng::seed_from_u64(plan.node_seeds[i]);
        plan.payloads[i]
            .iter()
            .map(|p| nodes[i].report_frame(p, &mut rng).expect("payload size validated"))
            .collect()
    };
    let transport: &(dyn Transport + Sync) = match cfg.transport {
        TransportKind::Direct => &DirectTransport,
        TransportKind::Loopback => &LoopbackTransport,
    };
    let mut report_of: HashMap<Vec<u8>, ReportId> = HashMap::new();
    let mut deliveries = Vec::new();
    if cfg.threads <= 1 {
        for i in 0..nodes.len() {
            let frames = build_frames(i);
            for (r, f) in frames.iter().enumerate() {
                report_of.insert(f.clone(), (i, r));
            }
            deliveries.extend(transport.publish(&sp, frames)?);
        }
    } else {
        let chunk = nodes.len().div_ceil(cfg.threads);
        let per_thread = thread::scope(|s| {
            let handles: Vec<_> = (0..nodes.len())
                .collect::<Vec<_>>()
                .chunks(chunk)
                .map(|ids| {
                    let ids = ids.to_vec();
                    let sp = &sp;
                    let build_frames = &build_frames;
                    s.spawn(move || -> Result<_> {
                        let mut tagged = Vec::new();
                        let mut delivered = Vec::new();
                        for i in ids {
                            let frames = build_frames(i);
                            for (r, f) in frames.iter().enumerate() {
                                tagged.push((f.clone(), (i, r)));
                            }
                            delivered.extend(transport.publish(sp, frames)?);
                        }
                        Ok((tagged, delivered))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("node thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?;
        for (tagged, delivered) in per_thread {
            report_of.extend(tagged);
            deliveries.extend(delivered);
        }
    }
    timings.reporting = started.elapsed();

    // Delivery: queriers decrypt what they received.
    let started = Instant::now();
    let mut counters = ScenarioCounters {
        reports_published: report_of.len() as u64,
        subscriptions: slot_of.len() as u64,
        deliveries_expected: expected.len() as u64,
        deliveries_made: deliveries.len() as u64,
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for d in &deliveries {
        let slot = slot_of[&d.subscription_id];
        let report = report_of.get(&d.report[..]).copied();
        match report {
            Some(report) if expected.contains(&(report, slot)) => {
                seen.insert((report, slot));
            }
            _ => counters.false_deliveries += 1,
        }
        let querier = &queriers[&slot];
        match querier.decrypt_frame(&d.report) {
            Ok(m) if report.is_some_and(|(i, r)| plan.payloads[i][r] == m.as_bytes()) => {
                counters.decryptions_ok += 1
            }
            _ => counters.decryptions_failed += 1,
        }
    }
    counters.deliveries_missed = (expected.len() - seen.len()) as u64;
    let stats = sp.stats();
    counters.sp_reports_seen = stats.reports_seen;
    counters.sp_matches_made = stats.matches_made;
    timings.delivery = started.elapsed();

    Ok(ScenarioResult { counters, timings })
}
