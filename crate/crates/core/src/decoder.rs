//! User-side decoding of the downlink.
//!
//! A user only ever sees its own map output, the (public) shuffle plan and
//! the broadcast blocks. Coefficients are re-derived from the shared
//! downlink parameters.

use std::collections::BTreeMap;

use crate::access_point::{subset_coefficients, DownlinkBlock, DownlinkParams};
use crate::bits::Bits;
use crate::engine::UserMapOutput;
use crate::error::{Error, Result};
use crate::gf256::mul_acc;
use crate::matrix::{independent_rows, solve_linear_system, CoefficientMatrix};
use crate::uplink::{coded_message, local_chunk, ShufflePlan, SubsetPlan};

/// Values a user recovered from the shuffle, keyed by file index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecoveredValues(BTreeMap<usize, Bits>);

impl RecoveredValues {
    pub fn insert(&mut self, file: usize, value: Bits) -> Option<Bits> {
        self.0.insert(file, value)
    }

    pub fn get(&self, file: usize) -> Option<&Bits> {
        self.0.get(&file)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Bits)> {
        self.0.iter().map(|(&n, v)| (n, v))
    }
}

/// Blocks of one subset with everything the user knows cancelled out.
/// Columns are the other members of the subset, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedSystem {
    pub user: usize,
    pub senders: Vec<usize>,
    pub matrix: CoefficientMatrix,
    pub rhs: Vec<Vec<u8>>,
}

/// Removes user `user`'s own message and every chunk it stores from the
/// blocks of `sp`.
pub fn cancel_known(
    user: usize,
    sp: &SubsetPlan,
    blocks: &[&DownlinkBlock],
    coefficients: &CoefficientMatrix,
    local: &UserMapOutput,
    value_bits: usize,
) -> Result<ReducedSystem> {
    let subset = sp.subset;
    if !subset.contains(user) {
        return Err(Error::InconsistentLengths(format!("user {} not in {subset}", user + 1)));
    }
    let nbytes = blocks.iter().map(|b| b.bits().div_ceil(8)).max().unwrap_or(0);
    let longest = subset.members().map(|s| sp.message_bits(s, value_bits)).max().unwrap_or(0);
    if nbytes != longest.div_ceil(8) {
        return Err(Error::InconsistentLengths(format!(
            "blocks of {subset} are {nbytes} bytes, plan expects {}",
            longest.div_ceil(8)
        )));
    }
    let own = coded_message(sp, user, local, value_bits).payload.to_padded_bytes(nbytes);
    let senders: Vec<usize> = subset.without(user).members().collect();
    let known: Vec<Vec<u8>> = senders
        .iter()
        .map(|&s| {
            let mut acc = Bits::new();
            for k in subset.without(s).without(user).members() {
                if !sp.files_for(k).is_empty() {
                    acc.xor_assign(&local_chunk(sp, k, s, local));
                }
            }
            acc.to_padded_bytes(nbytes)
        })
        .collect();
    let own_col = subset.rank_of(user).expect("member");
    let cols: Vec<usize> = senders.iter().map(|&s| subset.rank_of(s).expect("member")).collect();
    let mut rows = Vec::with_capacity(blocks.len());
    let mut rhs = Vec::with_capacity(blocks.len());
    for b in blocks {
        if b.index >= coefficients.rows() {
            return Err(Error::InconsistentLengths(format!("block row {} out of range", b.index)));
        }
        let c = coefficients.row(b.index);
        let mut y = b.payload.to_padded_bytes(nbytes);
        mul_acc(&mut y, &own, c[own_col]);
        for (k, &col) in known.iter().zip(&cols) {
            mul_acc(&mut y, k, c[col]);
        }
        rows.push(cols.iter().map(|&col| c[col]).collect());
        rhs.push(y);
    }
    Ok(ReducedSystem {
        user,
        senders,
        matrix: CoefficientMatrix::from_rows(rows, coefficients.construction)?,
        rhs,
    })
}

/// The user's unknown chunk from each other sender, still padded.
pub fn decode_subset(sys: &ReducedSystem) -> Result<Vec<(usize, Vec<u8>)>> {
    let unknowns = sys.senders.len();
    let (a, b) = if sys.matrix.rows() == unknowns {
        (sys.matrix.clone(), sys.rhs.clone())
    } else {
        let pick = independent_rows(&sys.matrix, unknowns)?;
        let b = pick.iter().map(|&r| sys.rhs[r].clone()).collect();
        (sys.matrix.select_rows(&pick), b)
    };
    let x = solve_linear_system(&a, &b)?;
    Ok(sys.senders.iter().copied().zip(x).collect())
}

/// Concatenates chunks in sender order, strips padding and splits the
/// payload back into the values of `sp.files_for(user)`.
pub fn reassemble(
    user: usize,
    sp: &SubsetPlan,
    chunks: &[(usize, Vec<u8>)],
    value_bits: usize,
) -> Result<Vec<(usize, Bits)>> {
    let seg = sp.segment_bits(user, value_bits);
    let mut payload = Bits::new();
    for s in sp.subset.without(user).members() {
        let (_, bytes) = chunks.iter().find(|(c, _)| *c == s).ok_or_else(|| Error::MissingSegment {
            user,
            subset: sp.subset.to_string(),
        })?;
        if bytes.len() * 8 < seg {
            return Err(Error::InconsistentLengths(format!("chunk from user {} too short", s + 1)));
        }
        payload.extend(&Bits::from_bytes(bytes, seg));
    }
    Ok(sp
        .files_for(user)
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, payload.slice(i * value_bits, value_bits)))
        .collect())
}

/// Full coded decode for one user.
pub fn decode_user(
    user: usize,
    plan: &ShufflePlan,
    blocks: &[DownlinkBlock],
    local: &UserMapOutput,
    params: &DownlinkParams,
) -> Result<RecoveredValues> {
    let mut by_subset: BTreeMap<_, Vec<&DownlinkBlock>> = BTreeMap::new();
    for b in blocks.iter().filter(|b| b.subset.contains(user)) {
        by_subset.entry(b.subset).or_default().push(b);
    }
    let mut out = RecoveredValues::default();
    for sp in plan.subsets.iter().filter(|sp| sp.subset.contains(user)) {
        if sp.files_for(user).is_empty() {
            continue;
        }
        let missing = || Error::MissingSegment {
            user,
            subset: sp.subset.to_string(),
        };
        let sb = by_subset.get(&sp.subset).ok_or_else(missing)?;
        let (coeffs, _) = subset_coefficients(params, sp.subset)?;
        let sys = cancel_known(user, sp, sb, &coeffs, local, plan.value_bits)?;
        let chunks = decode_subset(&sys).map_err(|e| match e {
            Error::SingularMatrix if sys.matrix.rows() < sys.senders.len() => missing(),
            e => e,
        })?;
        for (n, v) in reassemble(user, sp, &chunks, plan.value_bits)? {
            out.insert(n, v);
        }
    }
    Ok(out)
}

/// Uncoded decode: keep the forwarded values addressed to `user`.
pub fn decode_uncoded(user: usize, blocks: &[DownlinkBlock]) -> RecoveredValues {
    let mut out = RecoveredValues::default();
    for b in blocks {
        if let Some((target, file)) = b.label {
            if target == user {
                out.insert(file, b.payload.clone());
            }
        }
    }
    out
}
