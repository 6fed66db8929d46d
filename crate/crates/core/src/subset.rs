//! User subsets as bitmasks, lexicographic enumeration, and binomials.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;

/// Largest user count representable by [`UserSet`].
pub const MAX_USERS: usize = 63;

/// A set of 0-based user indices.
///
/// Ordering is canonical: first by size, then lexicographically by the sorted
/// member list. Every enumeration in the shuffle (batch labels, segment
/// association, message and block emission) follows this order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct UserSet(u64);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    pub fn singleton(user: usize) -> Self {
        Self(1 << user)
    }

    /// All users `0..k`.
    pub fn full(k: usize) -> Self {
        if k >= 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << k) - 1)
        }
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        Self(members.into_iter().fold(0, |m, u| m | (1 << u)))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, user: usize) -> bool {
        user < 64 && self.0 >> user & 1 == 1
    }

    pub fn with(self, user: usize) -> Self {
        Self(self.0 | 1 << user)
    }

    pub fn without(self, user: usize) -> Self {
        Self(self.0 & !(1 << user))
    }

    pub fn is_subset_of(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Position of `user` among the sorted members.
    pub fn rank_of(self, user: usize) -> Option<usize> {
        self.contains(user)
            .then(|| (self.0 & ((1u64 << user) - 1)).count_ones() as usize)
    }
}

#[derive(Clone)]
pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let u = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(u)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

impl Ord for UserSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members().cmp(other.members()))
    }
}

impl PartialOrd for UserSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Displays 1-based members, e.g. `{2,3}`.
impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", m + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All `size`-subsets of `0..k` in lexicographic order.
pub fn combinations(k: usize, size: usize) -> Vec<UserSet> {
    let mut out = Vec::new();
    if size > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(UserSet::from_members(idx.iter().copied()));
        // advance the rightmost index that still has room
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < k - size + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `C(n, r)` as a machine integer; `None` on overflow.
pub fn binomial(n: usize, r: usize) -> Option<u64> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

pub fn binomial_big(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    let r = r.min(n - r);
    let mut acc = BigUint::from(1u32);
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}
