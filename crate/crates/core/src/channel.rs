//! Lossy node-to-fusion-center link.
//!
//! Samples travel in packets of `L` consecutive samples; a packet arrives
//! intact or not at all. The channel is noiseless and order-preserving, so
//! the received vector `y` is the subsequence of `x_s` at the surviving
//! sequence numbers.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrices::SelectionMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossMode {
    /// Exactly this many samples arrive (a multiple of the packet length).
    ExactCount(usize),
    /// Every packet is dropped independently with this probability.
    PerSampleProb(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub mode: LossMode,
    pub packet_length: usize,
}

impl LossModel {
    pub fn exact(received: usize, packet_length: usize) -> Self {
        LossModel {
            mode: LossMode::ExactCount(received),
            packet_length,
        }
    }

    pub fn probabilistic(drop_probability: f64, packet_length: usize) -> Self {
        LossModel {
            mode: LossMode::PerSampleProb(drop_probability),
            packet_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutcome {
    received_seq: Vec<usize>,
    y: Vec<f64>,
    sent_count: usize,
    packet_length: usize,
    seed: u64,
}

impl ChannelOutcome {
    /// 1-based sequence numbers of the received samples, ascending.
    pub fn received_seq(&self) -> &[usize] {
        &self.received_seq
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sent_count(&self) -> usize {
        self.sent_count
    }

    pub fn received_count(&self) -> usize {
        self.received_seq.len()
    }

    pub fn packet_length(&self) -> usize {
        self.packet_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Log record `sent_count M L seed : i1 i2 ... iM`.
    pub fn record(&self) -> String {
        let mut out = format!(
            "{} {} {} {} :",
            self.sent_count,
            self.received_seq.len(),
            self.packet_length,
            self.seed
        );
        for i in &self.received_seq {
            let _ = write!(out, " {i}");
        }
        out
    }
}

/// Parsed form of [`ChannelOutcome::record`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRecord {
    pub sent_count: usize,
    pub packet_length: usize,
    pub seed: u64,
    pub received_seq: Vec<usize>,
}

impl ChannelRecord {
    pub fn parse(line: &str) -> Result<Self> {
        let err = |message: &str| Error::Parse {
            line: 1,
            message: message.to_string(),
        };
        let (head, tail) = line.split_once(':').ok_or_else(|| err("missing `:`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 4 {
            return Err(err("expected `sent_count M L seed`"));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| err("non-integer field"));
        let sent_count = int(head[0])? as usize;
        let m = int(head[1])? as usize;
        let packet_length = int(head[2])? as usize;
        let seed = int(head[3])?;
        let received_seq = tail
            .split_whitespace()
            .map(|s| int(s).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        if received_seq.len() != m {
            return Err(err("received count does not match M"));
        }
        SelectionMatrix::new(received_seq.clone(), sent_count)?;
        Ok(ChannelRecord {
            sent_count,
            packet_length,
            seed,
            received_seq,
        })
    }
}

/// Sends `x_s` over the lossy link.
pub fn transmit(x_s: &[f64], loss: &LossModel, seed: u64) -> Result<ChannelOutcome> {
    let sent = x_s.len();
    let l = loss.packet_length;
    if sent == 0 {
        return Err(Error::EmptySignal);
    }
    if l == 0 || l > sent || !sent.is_multiple_of(l) {
        return Err(Error::invalid(
            "packet_length",
            format!("{l} does not divide {sent} sent samples"),
        ));
    }
    let packets = sent / l;
    let mut rng = seed::rng(seed);
    let surviving: Vec<usize> = match loss.mode {
        LossMode::ExactCount(m) => {
            if m > sent {
                return Err(Error::invalid(
                    "M",
                    format!("{m} received samples exceed {sent} sent"),
                ));
            }
            if m % l != 0 {
                return Err(Error::invalid(
                    "M",
                    format!("{m} is not a multiple of the packet length {l}"),
                ));
            }
            let mut kept = index::sample(&mut rng, packets, m / l).into_vec();
            kept.sort_unstable();
            kept
        }
        LossMode::PerSampleProb(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("p", format!("{p} is not a probability")));
            }
            (0..packets).filter(|_| !rng.random_bool(p)).collect()
        }
    };
    let received_seq: Vec<usize> = surviving
        .iter()
        .flat_map(|&p| (p * l + 1)..=(p * l + l))
        .collect();
    let y = received_seq.iter().map(|&j| x_s[j - 1]).collect();
    Ok(ChannelOutcome {
        received_seq,
        y,
        sent_count: sent,
        packet_length: l,
        seed,
    })
}

/// The loss matrix `Φr` induced by an outcome.
pub fn outcome_to_selection(outcome: &ChannelOutcome) -> SelectionMatrix {
    SelectionMatrix::new(outcome.received_seq.clone(), outcome.sent_count)
        .expect("channel outcomes hold strictly increasing in-range sequence numbers")
}
