//! The access point. It sees uplink messages and nothing else, and turns each
//! subset's messages into downlink blocks.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::config::{DownlinkMode, SystemConfig};
use crate::dataset::streams;
use crate::error::{Error, Result};
use crate::gf256::{mul_acc, Gf256};
use crate::matrix::{mds_matrix, random_matrix_with_retry, CoefficientMatrix};
use crate::subset::UserSet;
use crate::uplink::{MessageContent, UplinkMessage};

/// What both ends need to agree on the coefficients of a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DownlinkParams {
    pub mode: DownlinkMode,
    pub seed: u64,
    pub retry_limit: u32,
}

impl From<&SystemConfig> for DownlinkParams {
    fn from(cfg: &SystemConfig) -> Self {
        Self {
            mode: cfg.downlink,
            seed: cfg.seed,
            retry_limit: cfg.retry_limit,
        }
    }
}

fn subset_rng(seed: u64, subset: UserSet) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"coefficients");
    h.update(seed.to_be_bytes());
    h.update(streams::COEFFICIENTS.to_be_bytes());
    h.update(subset.mask().to_be_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Coefficient matrix of `subset`, columns indexed by sender rank.
///
/// `(|S|−1) × |S|` for the coded modes, the `|S| × |S|` identity for
/// forwarding. Derived, never transmitted; the second value is the number
/// of random draws (1 for deterministic modes).
pub fn subset_coefficients(params: &DownlinkParams, subset: UserSet) -> Result<(CoefficientMatrix, u32)> {
    let c = subset.len();
    match params.mode {
        DownlinkMode::Mds => Ok((mds_matrix(c - 1, c)?, 1)),
        DownlinkMode::Random => random_matrix_with_retry(
            c - 1,
            c,
            &mut subset_rng(params.seed, subset),
            CoefficientMatrix::all_maximal_minors_invertible,
            params.retry_limit,
        ),
        DownlinkMode::Forward => Ok((CoefficientMatrix::identity(c), 1)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownlinkBlock {
    pub subset: UserSet,
    /// Row of the subset's coefficient matrix.
    pub index: usize,
    pub coefficients: Vec<Gf256>,
    pub payload: Bits,
    pub padding_bits: usize,
    /// Set when forwarding a raw value.
    pub label: Option<(usize, usize)>,
}

impl DownlinkBlock {
    pub fn bits(&self) -> usize {
        self.payload.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DownlinkOutput {
    /// Canonical order: by subset, then row.
    pub blocks: Vec<DownlinkBlock>,
    /// Random-mode draws per coded subset.
    pub attempts: Vec<(UserSet, u32)>,
}

impl DownlinkOutput {
    pub fn bits(&self) -> usize {
        self.blocks.iter().map(DownlinkBlock::bits).sum()
    }

    pub fn padding_bits(&self) -> usize {
        self.blocks.iter().map(|b| b.padding_bits).sum()
    }
}

/// Messages of each subset, sorted by sender; every member must have sent one.
fn group(messages: &[UplinkMessage]) -> Result<BTreeMap<UserSet, Vec<&UplinkMessage>>> {
    let mut by_subset: BTreeMap<UserSet, Vec<&UplinkMessage>> = BTreeMap::new();
    for m in messages {
        by_subset.entry(m.subset).or_default().push(m);
    }
    for (s, msgs) in by_subset.iter_mut() {
        msgs.sort_by_key(|m| m.sender);
        let senders = UserSet::from_members(msgs.iter().map(|m| m.sender));
        if senders != *s || msgs.len() != s.len() {
            return Err(Error::InconsistentLengths(format!(
                "subset {s} has messages from {senders}"
            )));
        }
    }
    Ok(by_subset)
}

fn combine(
    subset: UserSet,
    msgs: &[&UplinkMessage],
    params: &DownlinkParams,
    out: &mut DownlinkOutput,
) -> Result<()> {
    let (coeffs, attempts) = subset_coefficients(params, subset)?;
    if params.mode == DownlinkMode::Random {
        out.attempts.push((subset, attempts));
    }
    let parts = msgs.len();
    let longest = msgs.iter().map(|m| m.bits()).max().unwrap_or(0);
    let nbytes = longest.div_ceil(8);
    let useful: usize = msgs.iter().map(|m| m.bits() - m.padding_bits).sum::<usize>().div_ceil(parts);
    let padded: Vec<Vec<u8>> = msgs.iter().map(|m| m.payload.to_padded_bytes(nbytes)).collect();
    for r in 0..coeffs.rows() {
        let mut acc = vec![0u8; nbytes];
        for (c, p) in padded.iter().enumerate() {
            mul_acc(&mut acc, p, coeffs.get(r, c));
        }
        out.blocks.push(DownlinkBlock {
            subset,
            index: r,
            coefficients: coeffs.row(r).to_vec(),
            payload: Bits::from_bytes(&acc, nbytes * 8),
            padding_bits: (nbytes * 8).saturating_sub(useful),
            label: None,
        });
    }
    Ok(())
}

fn forward(subset: UserSet, msgs: &[&UplinkMessage], out: &mut DownlinkOutput) {
    let id = CoefficientMatrix::identity(msgs.len());
    for (r, m) in msgs.iter().enumerate() {
        out.blocks.push(DownlinkBlock {
            subset,
            index: r,
            coefficients: id.row(r).to_vec(),
            payload: m.payload.clone(),
            padding_bits: m.padding_bits,
            label: None,
        });
    }
}

fn encode(messages: &[UplinkMessage], params: &DownlinkParams, equal_lengths: bool) -> Result<DownlinkOutput> {
    let mut out = DownlinkOutput::default();
    for (subset, msgs) in group(messages)? {
        if equal_lengths && msgs.iter().any(|m| m.bits() != msgs[0].bits()) {
            return Err(Error::InconsistentLengths(format!("unequal message lengths in subset {subset}")));
        }
        if params.mode == DownlinkMode::Forward {
            forward(subset, &msgs, &mut out);
        } else {
            combine(subset, &msgs, params, &mut out)?;
        }
    }
    Ok(out)
}

/// `|S|−1` combinations per subset of equal-length messages.
pub fn encode_downlink_centralized(messages: &[UplinkMessage], params: &DownlinkParams) -> Result<DownlinkOutput> {
    encode(messages, params, true)
}

/// `|S|−1` combinations per subset, shorter messages zero-padded to the
/// longest, then to a whole byte.
pub fn encode_downlink_decentralized(messages: &[UplinkMessage], params: &DownlinkParams) -> Result<DownlinkOutput> {
    encode(messages, params, false)
}

/// One block per message, copied verbatim.
pub fn forward_uncoded(messages: &[UplinkMessage]) -> DownlinkOutput {
    let blocks = messages
        .iter()
        .map(|m| DownlinkBlock {
            subset: m.subset,
            index: 0,
            coefficients: vec![Gf256::ONE],
            payload: m.payload.clone(),
            padding_bits: m.padding_bits,
            label: match m.content {
                MessageContent::Raw { target, file } => Some((target, file)),
                MessageContent::Coded => None,
            },
        })
        .collect();
    DownlinkOutput {
        blocks,
        attempts: Vec::new(),
    }
}
