// SPDX-License-Identifier: Apache-2.0

//! Per-report cost measurement.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::authority::MasterSecret;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::label::canonicalize;
use crate::node::{node_shared_secret, Measurement, MobileNode};

pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub trials: usize,
    pub cold: bool,
    pub mean_ms: f64,
    pub p95_ms: f64,
    /// Mean time spent hashing to G2 and pairing (cold runs only).
    pub pairing_mean_ms: f64,
    /// Mean time spent deriving the tag and key, encrypting and framing.
    pub seal_mean_ms: f64,
    pub report_overhead_bytes: usize,
}

impl BenchResult {
    pub fn to_kv_lines(&self) -> String {
        [
            format!("trials={}", self.trials),
            format!("cold={}", self.cold),
            format!("mean_ms={:.4}", self.mean_ms),
            format!("p95_ms={:.4}", self.p95_ms),
            format!("pairing_mean_ms={:.4}", self.pairing_mean_ms),
            format!("seal_mean_ms={:.4}", self.seal_mean_ms),
            format!("report_overhead_bytes={}", self.report_overhead_bytes),
        ]
        .join("\n")
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank percentile.
fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times `trials` report constructions. With `cold` set, each trial redoes
/// the pairing, as a node without a cached shared secret would.
pub fn bench_report(trials: usize, payload_size: usize, cold: bool) -> Result<BenchResult> {
    if trials == 0 {
        return Err(Error::ConfigInvalid("trials must be at least 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let master = MasterSecret::generate(&mut rng);
    let key = master.issue_node_key(&canonicalize(["Temp", "Irvine, CA"])?);
    let measurement = Measurement::new(vec![0x42; payload_size])?;
    let warm = MobileNode::new(key.clone());

    let mut total = Vec::with_capacity(trials);
    let mut pairing = Vec::with_capacity(trials);
    let mut seal = Vec::with_capacity(trials);
    let mut frame_len = 0;
    for _ in 0..trials {
        let start = Instant::now();
        let frame = if cold {
            let shared = node_shared_secret(&key);
            let paired = Instant::now();
            let frame = Channel::from_shared(&shared).seal(&measurement, &mut rng).encode();
            pairing.push(ms(paired - start));
            seal.push(ms(paired.elapsed()));
            frame
        } else {
            let frame = warm.report(&measurement, &mut rng).encode();
            seal.push(ms(start.elapsed()));
            frame
        };
        total.push(ms(start.elapsed()));
        frame_len = std::hint::black_box(frame).len();
    }
    Ok(BenchResult {
        trials,
        cold,
        mean_ms: mean(&total),
        p95_ms: percentile(&total, 95.0),
        pairing_mean_ms: if cold { mean(&pairing) } else { 0.0 },
        seal_mean_ms: mean(&seal),
        report_overhead_bytes: frame_len - payload_size,
    })
}
