//! Uplink side of the shuffle: exclusivity index, segment association, and
//! the coded (XOR) or raw messages each user sends to the access point.
//!
//! For a subset `S` with `j = |S| − 1`, each target `k ∈ S` needs the values
//! `V^k_{S∖{k}}` that are stored by exactly the users `S∖{k}`. That payload is
//! cut into `j` contiguous chunks of `⌈L_k / j⌉` bits, chunk `r` belonging to
//! the `r`-th smallest member of `S∖{k}`. Sender `i` then transmits the XOR of
//! its chunks over all targets `k ≠ i`, each zero-padded to the longest.

use std::collections::BTreeMap;

use crate::bits::Bits;
use crate::engine::{MapOutput, UserMapOutput};
use crate::error::{Error, Result};
use crate::placement::{Placement, PlacementKind};
use crate::subset::UserSet;

/// Files whose values a target needs from one subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetFiles {
    pub target: usize,
    pub files: Vec<usize>,
}

/// Exclusivity structure of one subset `S`; derived from placement only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetPlan {
    pub subset: UserSet,
    /// Targets with a nonempty need, increasing.
    pub targets: Vec<TargetFiles>,
}

impl SubsetPlan {
    /// Number of senders each target's payload is split across.
    pub fn split(&self) -> usize {
        self.subset.len() - 1
    }

    pub fn files_for(&self, target: usize) -> &[usize] {
        self.targets
            .iter()
            .find(|t| t.target == target)
            .map_or(&[], |t| t.files.as_slice())
    }

    pub fn payload_bits(&self, target: usize, value_bits: usize) -> usize {
        self.files_for(target).len() * value_bits
    }

    /// Padded chunk length for `target`.
    pub fn segment_bits(&self, target: usize, value_bits: usize) -> usize {
        self.payload_bits(target, value_bits).div_ceil(self.split())
    }

    /// Length of sender `i`'s message: its longest associated chunk.
    pub fn message_bits(&self, sender: usize, value_bits: usize) -> usize {
        self.subset
            .without(sender)
            .members()
            .map(|k| self.segment_bits(k, value_bits))
            .max()
            .unwrap_or(0)
    }

    /// Unpadded bits of target `k`'s chunk assigned to `sender`.
    pub fn segment_content_bits(&self, target: usize, sender: usize, value_bits: usize) -> usize {
        let total = self.payload_bits(target, value_bits);
        let c = self.segment_bits(target, value_bits);
        let r = self.subset.without(target).rank_of(sender).expect("sender in subset");
        total.saturating_sub(r * c).min(c)
    }

    /// Bits a perfectly balanced split would put in sender `i`'s message:
    /// the mean of its chunks' unpadded lengths, rounded up.
    pub fn message_useful_bits(&self, sender: usize, value_bits: usize) -> usize {
        let content: usize = self
            .subset
            .without(sender)
            .members()
            .map(|k| self.segment_content_bits(k, sender, value_bits))
            .sum();
        content.div_ceil(self.split())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShufflePlan {
    pub users: usize,
    pub value_bits: usize,
    /// Active subsets in canonical order.
    pub subsets: Vec<SubsetPlan>,
}

impl ShufflePlan {
    pub fn subset(&self, s: UserSet) -> Option<&SubsetPlan> {
        self.subsets
            .binary_search_by(|p| p.subset.cmp(&s))
            .ok()
            .map(|i| &self.subsets[i])
    }
}

/// Groups every needed, available value by its subset `S = owners ∪ {target}`.
pub fn build_plan(placement: &Placement, value_bits: usize) -> Result<ShufflePlan> {
    let users = placement.users();
    let owners = placement.owner_sets()?;
    let mut grouped: BTreeMap<UserSet, BTreeMap<usize, Vec<usize>>> = BTreeMap::new();
    for (n, w) in owners.iter().enumerate() {
        if w.is_empty() {
            continue;
        }
        for k in (0..users).filter(|&k| !w.contains(k)) {
            grouped.entry(w.with(k)).or_default().entry(k).or_default().push(n);
        }
    }
    let subsets = grouped
        .into_iter()
        .map(|(subset, targets)| SubsetPlan {
            subset,
            targets: targets
                .into_iter()
                .map(|(target, files)| TargetFiles { target, files })
                .collect(),
        })
        .collect();
    Ok(ShufflePlan {
        users,
        value_bits,
        subsets,
    })
}

/// `V^k_W`: values needed by `target` and stored by exactly the users `owners`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusiveSet {
    pub target: usize,
    pub owners: UserSet,
    pub files: Vec<usize>,
    pub values: Vec<Bits>,
}

impl ExclusiveSet {
    pub fn payload(&self) -> Bits {
        Bits::concat(&self.values)
    }
}

/// Every nonempty exclusive set, values read from the lowest owner's map output.
pub fn build_exclusive_sets(plan: &ShufflePlan, map_output: &MapOutput) -> Vec<ExclusiveSet> {
    let mut out = Vec::new();
    for sp in &plan.subsets {
        for t in &sp.targets {
            let owners = sp.subset.without(t.target);
            let holder = map_output.user(owners.first().expect("owners nonempty"));
            let values = t
                .files
                .iter()
                .map(|&n| holder.value(t.target, n).expect("owner stores file").clone())
                .collect();
            out.push(ExclusiveSet {
                target: t.target,
                owners,
                files: t.files.clone(),
                values,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub target: usize,
    pub owners: UserSet,
    pub sender: usize,
    /// Padded to the common chunk length.
    pub payload: Bits,
    pub content_bits: usize,
}

impl Segment {
    pub fn padding_bits(&self) -> usize {
        self.payload.len() - self.content_bits
    }
}

/// Chunk `rank` of `payload` cut into `parts` pieces of `⌈len/parts⌉` bits.
pub(crate) fn chunk(payload: &Bits, parts: usize, rank: usize) -> Bits {
    let c = payload.len().div_ceil(parts);
    payload.slice(rank * c, c)
}

/// Splits an exclusive set's payload across `senders` in increasing order.
pub fn segment_split(es: &ExclusiveSet, senders: UserSet) -> Result<Vec<Segment>> {
    if senders.len() != es.owners.len() || senders.is_empty() {
        return Err(Error::InconsistentLengths(format!(
            "{} senders for an exclusive set owned by {}",
            senders.len(),
            es.owners.len()
        )));
    }
    let payload = es.payload();
    let parts = senders.len();
    let c = payload.len().div_ceil(parts);
    Ok(senders
        .members()
        .enumerate()
        .map(|(r, sender)| Segment {
            target: es.target,
            owners: es.owners,
            sender,
            payload: chunk(&payload, parts, r),
            content_bits: payload.len().saturating_sub(r * c).min(c),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageContent {
    /// XOR of chunks for every other target of the subset.
    Coded,
    /// One intermediate value sent as-is.
    Raw { target: usize, file: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UplinkMessage {
    pub sender: usize,
    pub subset: UserSet,
    pub payload: Bits,
    pub padding_bits: usize,
    pub content: MessageContent,
}

impl UplinkMessage {
    pub fn bits(&self) -> usize {
        self.payload.len()
    }
}

/// Target `k`'s chunk for `sender`, built from the sender's own map output.
pub(crate) fn local_chunk(
    sp: &SubsetPlan,
    target: usize,
    sender: usize,
    local: &UserMapOutput,
) -> Bits {
    let files = sp.files_for(target);
    let values: Vec<&Bits> = files
        .iter()
        .map(|&n| local.value(target, n).expect("sender stores the file"))
        .collect();
    let payload = Bits::concat(values);
    let rank = sp.subset.without(target).rank_of(sender).expect("sender in subset");
    chunk(&payload, sp.split(), rank)
}

/// `W_i^S` from sender `i`'s local map output.
pub fn coded_message(sp: &SubsetPlan, sender: usize, local: &UserMapOutput, value_bits: usize) -> UplinkMessage {
    let len = sp.message_bits(sender, value_bits);
    let mut payload = Bits::zeros(len);
    for k in sp.subset.without(sender).members() {
        if sp.files_for(k).is_empty() {
            continue;
        }
        payload.xor_assign(&local_chunk(sp, k, sender, local));
    }
    UplinkMessage {
        sender,
        subset: sp.subset,
        padding_bits: len - sp.message_useful_bits(sender, value_bits),
        payload,
        content: MessageContent::Coded,
    }
}

fn encode_coded(plan: &ShufflePlan, map_output: &MapOutput) -> Vec<UplinkMessage> {
    let mut out = Vec::new();
    for sp in &plan.subsets {
        for i in sp.subset.members() {
            out.push(coded_message(sp, i, map_output.user(i), plan.value_bits));
        }
    }
    out
}

/// Coded uplink for centralized (and memory-sharing) placements. All
/// messages of one subset have the same length.
pub fn encode_centralized_uplink(
    placement: &Placement,
    plan: &ShufflePlan,
    map_output: &MapOutput,
) -> Result<Vec<UplinkMessage>> {
    if !matches!(
        placement.kind,
        PlacementKind::Centralized { .. } | PlacementKind::MemorySharing { .. }
    ) {
        return Err(Error::ModeMismatch("centralized uplink needs a centralized placement".into()));
    }
    let msgs = encode_coded(plan, map_output);
    for w in msgs.chunk_by(|a, b| a.subset == b.subset) {
        if w.iter().any(|m| m.bits() != w[0].bits()) {
            return Err(Error::InconsistentLengths(format!(
                "unequal message lengths in subset {}",
                w[0].subset
            )));
        }
    }
    Ok(msgs)
}

/// Coded uplink over every active subset of size at least two; chunks are
/// zero-padded to the longest one in each XOR.
pub fn encode_decentralized_uplink(plan: &ShufflePlan, map_output: &MapOutput) -> Vec<UplinkMessage> {
    encode_coded(plan, map_output)
}

/// Each needed value sent once, raw, by its lowest-indexed owner.
pub fn encode_uncoded_uplink(plan: &ShufflePlan, map_output: &MapOutput) -> Vec<UplinkMessage> {
    let mut out = Vec::new();
    for sp in &plan.subsets {
        for t in &sp.targets {
            let sender = sp.subset.without(t.target).first().expect("owner");
            let local = map_output.user(sender);
            for &n in &t.files {
                out.push(UplinkMessage {
                    sender,
                    subset: UserSet::from_members([sender, t.target]),
                    payload: local.value(t.target, n).expect("owner stores file").clone(),
                    padding_bits: 0,
                    content: MessageContent::Raw {
                        target: t.target,
                        file: n,
                    },
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, Mu, PlacementMode, SystemConfig};
    use crate::dataset::{default_compute_functions, synthesize_dataset};
    use crate::engine::run_map;
    use crate::placement::place;

    fn pipeline(cfg: SystemConfig) -> (Placement, ShufflePlan, MapOutput) {
        let v = validate_config(cfg.clone()).unwrap();
        let p = place(&v).unwrap();
        let d = synthesize_dataset(&cfg);
        let m = run_map(&p, &d, &default_compute_functions(&cfg));
        let plan = build_plan(&p, cfg.value_bits).unwrap();
        (p, plan, m)
    }

    #[test]
    fn golden_exclusive_sets() {
        let (_, plan, m) = pipeline(SystemConfig::new(3, 6, Mu::new(2, 3)));
        let sets = build_exclusive_sets(&plan, &m);
        assert_eq!(sets.len(), 3);
        let v1 = sets.iter().find(|s| s.target == 0).unwrap();
        assert_eq!(v1.owners, UserSet::from_members([1, 2]));
        assert_eq!(v1.files, vec![4, 5]);
        let v2 = sets.iter().find(|s| s.target == 1).unwrap();
        assert_eq!(v2.files, vec![2, 3]);
        let v3 = sets.iter().find(|s| s.target == 2).unwrap();
        assert_eq!(v3.files, vec![0, 1]);
    }

    #[test]
    fn full_storage_needs_nothing() {
        let (_, plan, _) = pipeline(SystemConfig::new(4, 4, Mu::from_integer(1)));
        assert!(plan.subsets.is_empty());
    }

    #[test]
    fn four_user_sets_have_eta_values() {
        let (_, plan, m) = pipeline(SystemConfig::new(4, 12, Mu::new(1, 2)));
        let sets = build_exclusive_sets(&plan, &m);
        assert_eq!(sets.len(), 4 * 3);
        assert!(sets.iter().all(|s| s.owners.len() == 2 && s.values.len() == 2));
    }

    #[test]
    fn split_even_and_ragged() {
        let v = |bits: usize| ExclusiveSet {
            target: 0,
            owners: UserSet::from_members([1, 2]),
            files: vec![],
            values: vec![Bits::from_bytes(&[0xab, 0xcd], bits)],
        };
        let segs = segment_split(&v(16), UserSet::from_members([1, 2])).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs.iter().all(|s| s.payload.len() == 8 && s.padding_bits() == 0));
        assert_eq!(segs[0].payload.as_bytes(), &[0xab]);
        assert_eq!(segs[1].sender, 2);

        let segs = segment_split(&v(3), UserSet::from_members([1, 2])).unwrap();
        assert_eq!(segs.iter().map(|s| s.payload.len()).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(segs.iter().map(|s| s.padding_bits()).sum::<usize>(), 1);

        let segs = segment_split(&v(0), UserSet::from_members([1, 2])).unwrap();
        assert!(segs.iter().all(|s| s.payload.is_empty()));
        assert!(segment_split(&v(8), UserSet::from_members([1])).is_err());
    }

    #[test]
    fn golden_uplink_is_three_messages_of_t_bits() {
        let (p, plan, m) = pipeline(SystemConfig::new(3, 6, Mu::new(2, 3)));
        let msgs = encode_centralized_uplink(&p, &plan, &m).unwrap();
        assert_eq!(msgs.len(), 3);
        assert!(msgs.iter().all(|w| w.bits() == 64 && w.padding_bits == 0));
        // user 1's message: v_{2,.} chunk XOR v_{3,.} chunk
        let u = m.user(0);
        let mut expect = u.value(1, 2).unwrap().clone();
        expect.xor_assign(u.value(2, 0).unwrap());
        assert_eq!(msgs[0].payload, expect);
    }

    #[test]
    fn four_user_uplink_count() {
        let (p, plan, m) = pipeline(SystemConfig::new(4, 12, Mu::new(1, 2)).with_value_bits(8));
        let msgs = encode_centralized_uplink(&p, &plan, &m).unwrap();
        assert_eq!(msgs.len(), 12);
        assert_eq!(msgs.iter().map(UplinkMessage::bits).sum::<usize>(), 96);
    }

    #[test]
    fn xor_involution_recovers_each_chunk() {
        let (_, plan, m) = pipeline(SystemConfig::new(5, 10, Mu::new(2, 5)).with_value_bits(24));
        for sp in &plan.subsets {
            for i in sp.subset.members() {
                let msg = coded_message(sp, i, m.user(i), 24);
                for missing in sp.subset.without(i).members() {
                    let mut acc = msg.payload.clone();
                    for k in sp.subset.without(i).without(missing).members() {
                        acc.xor_assign(&local_chunk(sp, k, i, m.user(i)));
                    }
                    let want = local_chunk(sp, missing, i, m.user(i));
                    assert_eq!(acc.slice(0, want.len()), want);
                }
            }
        }
    }

    #[test]
    fn uncoded_sends_each_needed_value_once() {
        let (_, plan, m) = pipeline(SystemConfig::new(3, 6, Mu::new(2, 3)));
        let msgs = encode_uncoded_uplink(&plan, &m);
        assert_eq!(msgs.len(), 6);
        let v1 = msgs.iter().find(|w| w.content == MessageContent::Raw { target: 0, file: 4 }).unwrap();
        assert_eq!(v1.sender, 1);
    }

    #[test]
    fn identical_storage_only_activates_the_full_subset() {
        let mut p = Placement::load("files 4\nuser 1: 1 2\nuser 2: 1 2\nuser 3: 1 2\n").unwrap();
        p.kind = PlacementKind::Loaded;
        let plan = build_plan(&p, 8).unwrap();
        assert!(plan.subsets.is_empty());
        // a fourth user that stores nothing needs everything from {1,2,3}
        let p = Placement::load("files 2\nuser 1: 1 2\nuser 2: 1 2\nuser 3: 1 2\nuser 4:\n").unwrap();
        let plan = build_plan(&p, 8).unwrap();
        assert_eq!(plan.subsets.len(), 1);
        assert_eq!(plan.subsets[0].subset, UserSet::full(4));
    }

    #[test]
    fn singly_stored_values_go_uncoded() {
        let cfg = SystemConfig::new(3, 30, Mu::new(1, 3))
            .with_placement(PlacementMode::Decentralized)
            .with_seed(2);
        let (_, plan, m) = pipeline(cfg);
        let msgs = encode_decentralized_uplink(&plan, &m);
        for w in msgs.iter().filter(|w| w.subset.len() == 2) {
            let sp = plan.subset(w.subset).unwrap();
            let target = w.subset.without(w.sender).first().unwrap();
            let files = sp.files_for(target);
            let raw = Bits::concat(files.iter().map(|&n| m.user(w.sender).value(target, n).unwrap()));
            assert_eq!(w.payload, raw);
        }
    }
}
