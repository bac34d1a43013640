//! Seeded lossy channel used by the simulator in place of a real network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GazeMessage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub base_latency_ms: f64,
    /// Half-width of the uniform jitter added to every delivery.
    pub jitter_ms: f64,
    pub loss_prob: f64,
    pub seed: u64,
}

impl Default for ChannelSpec {
    /// Zero-latency, lossless channel.
    fn default() -> Self {
        ChannelSpec {
            base_latency_ms: 0.0,
            jitter_ms: 0.0,
            loss_prob: 0.0,
            seed: 0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_latency_ms >= 0.0 && self.base_latency_ms.is_finite()) {
            return Err(Error::domain("base_latency_ms must be finite and >= 0"));
        }
        if !(self.jitter_ms >= 0.0 && self.jitter_ms.is_finite()) {
            return Err(Error::domain("jitter_ms must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(Error::domain("loss_prob must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub arrival_us: u64,
    pub msg: GazeMessage,
}

/// Pushes `(send_time_us, message)` pairs through the channel.
///
/// Each message draws a loss decision and a jitter value from a ChaCha
/// stream seeded by `spec.seed`, in input order. Delay is
/// `base_latency + U(-jitter, +jitter)`, floored at zero so nothing arrives
/// before it was sent. Output is sorted by arrival time; ties keep send order.
pub fn channel_transmit(
    messages: &[(u64, GazeMessage)],
    spec: &ChannelSpec,
) -> Result<Vec<Arrival>> {
    spec.validate()?;
    if messages.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::domain("send times must be non-decreasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base_us = spec.base_latency_ms * 1e3;
    let jitter_us = spec.jitter_ms * 1e3;

    let mut out = Vec::with_capacity(messages.len());
    for &(send_us, msg) in messages {
        let lost = rng.random::<f64>() < spec.loss_prob;
        let jitter = if jitter_us > 0.0 {
            rng.random_range(-jitter_us..=jitter_us)
        } else {
            0.0
        };
        if lost {
            continue;
        }
        let delay_us = (base_us + jitter).max(0.0).round() as u64;
        out.push(Arrival {
            arrival_us: send_us + delay_us,
            msg,
        });
    }
    out.sort_by_key(|a| a.arrival_us);
    Ok(out)
}
