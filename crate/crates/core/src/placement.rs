//! Dataset placement: which files each user stores.
//!
//! Centralized placement labels `C(K, r)` disjoint batches of `η` files by the
//! `r`-subsets of users in lexicographic order and gives each user every batch
//! whose label contains it. Memory sharing runs two such placements side by
//! side on a split of the file range. Decentralized placement lets every user
//! draw its own uniform `⌊μN⌋`-subset.

use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::index;

use crate::config::{Mu, PlacementMode, Replication, SharePart, ValidatedConfig};
use crate::dataset::{seeded_rng, streams};
use crate::error::{Error, Result};
use crate::subset::{combinations, UserSet, MAX_USERS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub label: UserSet,
    pub files: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementKind {
    Centralized {
        factor: usize,
        eta: usize,
        batches: Vec<Batch>,
    },
    MemorySharing {
        alpha: Mu,
        mu_low: Mu,
        mu_high: Mu,
        /// Files `0..αN`, replicated `⌊μK⌋` times.
        low: Vec<Batch>,
        /// Files `αN..N`, replicated `⌈μK⌉` times.
        high: Vec<Batch>,
    },
    Decentralized {
        stored_per_user: usize,
        floored: bool,
    },
    /// Read from a dump; no structure known.
    Loaded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub files: usize,
    /// Sorted 0-based file indices stored by each user.
    pub user_files: Vec<Vec<usize>>,
    pub kind: PlacementKind,
}

impl Placement {
    pub fn users(&self) -> usize {
        self.user_files.len()
    }

    pub fn stores(&self, user: usize, file: usize) -> bool {
        self.user_files[user].binary_search(&file).is_ok()
    }

    /// For every file, the set of users storing it.
    pub fn owner_sets(&self) -> Result<Vec<UserSet>> {
        if self.users() > MAX_USERS {
            return Err(Error::TooManyUsers(self.users()));
        }
        let mut owners = vec![UserSet::EMPTY; self.files];
        for (k, files) in self.user_files.iter().enumerate() {
            for &n in files {
                owners[n] = owners[n].with(k);
            }
        }
        Ok(owners)
    }

    /// Files stored by at least one user.
    pub fn available_files(&self) -> Vec<usize> {
        let mut seen = vec![false; self.files];
        for files in &self.user_files {
            for &n in files {
                seen[n] = true;
            }
        }
        (0..self.files).filter(|&n| seen[n]).collect()
    }

    pub fn max_stored(&self) -> usize {
        self.user_files.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Line-oriented dump with 1-based indices.
    pub fn dump(&self) -> String {
        let mut out = String::from("# coded-shuffle placement v1\n");
        let _ = writeln!(out, "files {}", self.files);
        for (k, files) in self.user_files.iter().enumerate() {
            let _ = write!(out, "user {}:", k + 1);
            for n in files {
                let _ = write!(out, " {}", n + 1);
            }
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<Placement> {
        let mut files = None;
        let mut user_files: Vec<Vec<usize>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse(format!("placement line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix("files") {
                files = Some(rest.trim().parse::<usize>().map_err(|_| err("bad file count"))?);
                continue;
            }
            let rest = line.strip_prefix("user").ok_or_else(|| err("expected `user`"))?;
            let (idx, list) = rest.split_once(':').ok_or_else(|| err("missing `:`"))?;
            let idx: usize = idx.trim().parse().map_err(|_| err("bad user index"))?;
            if idx != user_files.len() + 1 {
                return Err(err("users must be listed in order starting at 1"));
            }
            let total = files.ok_or_else(|| err("`files` must come before users"))?;
            let mut set = Vec::new();
            for tok in list.split_whitespace() {
                let n: usize = tok.parse().map_err(|_| err("bad file index"))?;
                if n == 0 || n > total {
                    return Err(err("file index out of range"));
                }
                set.push(n - 1);
            }
            set.sort_unstable();
            set.dedup();
            user_files.push(set);
        }
        let files = files.ok_or_else(|| Error::Parse("placement has no `files` line".into()))?;
        if user_files.is_empty() {
            return Err(Error::ZeroSize("users"));
        }
        Ok(Placement {
            files,
            user_files,
            kind: PlacementKind::Loaded,
        })
    }
}

fn batches_over(users: usize, factor: usize, eta: usize, offset: usize) -> Vec<Batch> {
    combinations(users, factor)
        .into_iter()
        .enumerate()
        .map(|(i, label)| Batch {
            label,
            files: offset + i * eta..offset + (i + 1) * eta,
        })
        .collect()
}

fn assign(users: usize, batches: &[Batch], user_files: &mut [Vec<usize>]) {
    for b in batches {
        for k in b.label.members() {
            user_files[k].extend(b.files.clone());
        }
    }
    debug_assert_eq!(user_files.len(), users);
}

pub fn centralized_placement(cfg: &ValidatedConfig) -> Result<Placement> {
    let (factor, eta) = match &cfg.replication {
        Replication::Integer { factor, eta, .. } => (*factor, *eta),
        Replication::MemorySharing { .. } => {
            return Err(Error::ModeMismatch(
                "non-integer μK needs memory-sharing placement".into(),
            ))
        }
        Replication::Random { .. } => {
            return Err(Error::ModeMismatch("config is decentralized".into()))
        }
    };
    if cfg.users > MAX_USERS {
        return Err(Error::TooManyUsers(cfg.users));
    }
    let batches = batches_over(cfg.users, factor, eta, 0);
    let mut user_files = vec![Vec::new(); cfg.users];
    assign(cfg.users, &batches, &mut user_files);
    for f in &mut user_files {
        f.sort_unstable();
    }
    Ok(Placement {
        files: cfg.files,
        user_files,
        kind: PlacementKind::Centralized {
            factor,
            eta,
            batches,
        },
    })
}

pub fn memory_sharing_placement(cfg: &ValidatedConfig) -> Result<Placement> {
    let (low, high, alpha) = match &cfg.replication {
        Replication::MemorySharing { low, high, alpha } => (*low, *high, *alpha),
        Replication::Integer { .. } => {
            return Err(Error::ModeMismatch(
                "integer μK uses plain centralized placement".into(),
            ))
        }
        Replication::Random { .. } => {
            return Err(Error::ModeMismatch("config is decentralized".into()))
        }
    };
    if cfg.users > MAX_USERS {
        return Err(Error::TooManyUsers(cfg.users));
    }
    let part = |p: SharePart, offset| batches_over(cfg.users, p.factor, p.eta, offset);
    let low_batches = part(low, 0);
    let high_batches = part(high, low.files);
    let mut user_files = vec![Vec::new(); cfg.users];
    assign(cfg.users, &low_batches, &mut user_files);
    assign(cfg.users, &high_batches, &mut user_files);
    for f in &mut user_files {
        f.sort_unstable();
    }
    let k = Mu::from_integer(cfg.users as u64);
    Ok(Placement {
        files: cfg.files,
        user_files,
        kind: PlacementKind::MemorySharing {
            alpha,
            mu_low: Mu::from_integer(low.factor as u64) / k,
            mu_high: Mu::from_integer(high.factor as u64) / k,
            low: low_batches,
            high: high_batches,
        },
    })
}

/// Independent uniform `⌊μN⌋`-subsets, one per user, from the placement stream.
pub fn decentralized_placement(cfg: &ValidatedConfig) -> Result<Placement> {
    let (stored, floored) = match cfg.replication {
        Replication::Random {
            stored_per_user,
            floored,
        } => (stored_per_user, floored),
        _ => return Err(Error::ModeMismatch("config is centralized".into())),
    };
    Ok(random_placement(cfg.users, cfg.files, stored, floored, cfg.seed))
}

pub(crate) fn random_placement(
    users: usize,
    files: usize,
    stored: usize,
    floored: bool,
    seed: u64,
) -> Placement {
    let mut rng = seeded_rng(seed, streams::PLACEMENT);
    let user_files = (0..users)
        .map(|_| {
            let mut v = index::sample(&mut rng, files, stored).into_vec();
            v.sort_unstable();
            v
        })
        .collect();
    Placement {
        files,
        user_files,
        kind: PlacementKind::Decentralized {
            stored_per_user: stored,
            floored,
        },
    }
}

/// Placement matching the config's mode and replication plan.
pub fn place(cfg: &ValidatedConfig) -> Result<Placement> {
    match (cfg.placement, &cfg.replication) {
        (PlacementMode::Decentralized, _) => decentralized_placement(cfg),
        (_, Replication::MemorySharing { .. }) => memory_sharing_placement(cfg),
        _ => centralized_placement(cfg),
    }
}

/// `counts[j]` = number of files stored by exactly `j` of the participants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationHistogram {
    pub counts: Vec<usize>,
    pub files: usize,
}

impl ReplicationHistogram {
    pub fn participants(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn unstored(&self) -> usize {
        self.counts[0]
    }

    /// `Σ_j j·a^j`, the total number of stored copies.
    pub fn stored_copies(&self) -> usize {
        self.counts.iter().enumerate().map(|(j, a)| j * a).sum()
    }

    pub fn from_counts(counts: Vec<usize>) -> Self {
        let files = counts.iter().sum();
        Self { counts, files }
    }
}

pub fn replication_histogram(p: &Placement, participants: &[usize]) -> ReplicationHistogram {
    let mut per_file = vec![0usize; p.files];
    for &k in participants {
        for &n in &p.user_files[k] {
            per_file[n] += 1;
        }
    }
    let mut counts = vec![0usize; participants.len() + 1];
    for c in per_file {
        counts[c] += 1;
    }
    ReplicationHistogram {
        counts,
        files: p.files,
    }
}

pub fn all_users(p: &Placement) -> Vec<usize> {
    (0..p.users()).collect()
}

/// Fraction of files no participant stores.
pub fn information_loss(h: &ReplicationHistogram) -> Mu {
    Mu::new(h.unstored() as u64, h.files as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, SystemConfig};
    use crate::subset::binomial;

    fn centralized(k: usize, n: usize, mu: Mu) -> Placement {
        place(&validate_config(SystemConfig::new(k, n, mu)).unwrap()).unwrap()
    }

    fn decentralized(k: usize, n: usize, mu: Mu, seed: u64) -> Placement {
        let cfg = SystemConfig::new(k, n, mu)
            .with_placement(PlacementMode::Decentralized)
            .with_seed(seed);
        place(&validate_config(cfg).unwrap()).unwrap()
    }

    #[test]
    fn golden_placement() {
        let p = centralized(3, 6, Mu::new(2, 3));
        assert_eq!(
            p.user_files,
            vec![vec![0, 1, 2, 3], vec![0, 1, 4, 5], vec![2, 3, 4, 5]]
        );
        match &p.kind {
            PlacementKind::Centralized { batches, eta, .. } => {
                assert_eq!(*eta, 2);
                assert_eq!(batches.len(), 3);
            }
            k => panic!("{k:?}"),
        }
        let h = replication_histogram(&p, &all_users(&p));
        assert_eq!(h.counts, vec![0, 0, 6, 0]);
        assert_eq!(information_loss(&h), Mu::from_integer(0));
    }

    #[test]
    fn full_replication() {
        for k in 1..6 {
            let p = centralized(k, 5, Mu::from_integer(1));
            assert!(p.user_files.iter().all(|f| f == &(0..5).collect::<Vec<_>>()));
        }
    }

    #[test]
    fn four_users_half_storage() {
        let p = centralized(4, 12, Mu::new(1, 2));
        let h = replication_histogram(&p, &all_users(&p));
        assert_eq!(h.counts, vec![0, 0, 12, 0, 0]);
        assert!(p.user_files.iter().all(|f| f.len() == 6));
    }

    #[test]
    fn batches_cover_files_disjointly() {
        for k in 2..=7 {
            for r in 1..=k {
                let b = binomial(k, r).unwrap() as usize;
                let p = centralized(k, 2 * b, Mu::new(r as u64, k as u64));
                let h = replication_histogram(&p, &all_users(&p));
                assert_eq!(h.counts[r], 2 * b);
                assert!(p.max_stored() * k <= r * 2 * b);
            }
        }
    }

    #[test]
    fn memory_sharing_parts() {
        let cfg = validate_config(SystemConfig::new(4, 24, Mu::new(3, 8))).unwrap();
        let p = memory_sharing_placement(&cfg).unwrap();
        let h = replication_histogram(&p, &all_users(&p));
        assert_eq!(h.counts, vec![0, 12, 12, 0, 0]);
        assert!(p.user_files.iter().all(|f| f.len() == 9));
        match p.kind {
            PlacementKind::MemorySharing { alpha, mu_low, mu_high, .. } => {
                assert_eq!((alpha, mu_low, mu_high), (Mu::new(1, 2), Mu::new(1, 4), Mu::new(1, 2)));
            }
            k => panic!("{k:?}"),
        }
        let integer = validate_config(SystemConfig::new(4, 12, Mu::new(1, 2))).unwrap();
        assert!(matches!(memory_sharing_placement(&integer), Err(Error::ModeMismatch(_))));
        assert!(matches!(centralized_placement(&cfg), Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn decentralized_is_seeded_and_sized() {
        let a = decentralized(5, 40, Mu::new(1, 2), 3);
        assert_eq!(a, decentralized(5, 40, Mu::new(1, 2), 3));
        assert_ne!(a, decentralized(5, 40, Mu::new(1, 2), 4));
        assert!(a.user_files.iter().all(|f| f.len() == 20));
        let full = decentralized(4, 30, Mu::from_integer(1), 1);
        let h = replication_histogram(&full, &all_users(&full));
        assert_eq!(h.counts[4], 30);
        assert_eq!(information_loss(&h), Mu::from_integer(0));
    }

    #[test]
    fn decentralized_matches_binomial_law() {
        let p = decentralized(4, 100_000, Mu::new(1, 2), 11);
        let h = replication_histogram(&p, &all_users(&p));
        for j in 0..=4 {
            let expected = binomial(4, j).unwrap() as f64 / 16.0;
            let got = h.counts[j] as f64 / 1e5;
            assert!((got - expected).abs() < 0.01, "j={j}: {got} vs {expected}");
        }
        let loss = crate::config::mu_to_f64(information_loss(&h));
        assert!((loss - 0.0625).abs() < 0.005);
        assert_eq!(h.stored_copies(), 4 * 50_000);
    }

    #[test]
    fn hand_built_histogram() {
        let p = Placement::load("files 3\nuser 1: 1 2\nuser 2: 2 3\nuser 3: 3 1\n").unwrap();
        let h = replication_histogram(&p, &all_users(&p));
        assert_eq!(h.counts, vec![0, 0, 3, 0]);
        let sub = replication_histogram(&p, &[0]);
        assert_eq!(sub.counts, vec![1, 2]);
    }

    #[test]
    fn dump_roundtrip_and_errors() {
        let p = centralized(4, 12, Mu::new(1, 2));
        let back = Placement::load(&p.dump()).unwrap();
        assert_eq!(back.user_files, p.user_files);
        assert!(Placement::load("user 1: 1\n").is_err());
        assert!(Placement::load("files 2\nuser 1: 3\n").is_err());
        assert!(Placement::load("files 2\nuser 2: 1\n").is_err());
    }
}
