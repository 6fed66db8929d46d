//! Map and Reduce phases.

use crate::bits::Bits;
use crate::dataset::{ComputeFunctions, Dataset};
use crate::decoder::RecoveredValues;
use crate::error::{Error, Result};
use crate::placement::Placement;

/// Everything one user computes in the Map phase: `v_{q,n}` for every input
/// `q` and every stored file `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserMapOutput {
    pub user: usize,
    /// Sorted stored file indices.
    pub files: Vec<usize>,
    /// `values[q][i]` is `v_{q, files[i]}`.
    values: Vec<Vec<Bits>>,
}

impl UserMapOutput {
    pub fn value(&self, input: usize, file: usize) -> Option<&Bits> {
        let i = self.files.binary_search(&file).ok()?;
        self.values.get(input).map(|row| &row[i])
    }

    pub fn value_count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapOutput {
    pub users: Vec<UserMapOutput>,
}

impl MapOutput {
    pub fn user(&self, k: usize) -> &UserMapOutput {
        &self.users[k]
    }
}

pub fn run_map(placement: &Placement, dataset: &Dataset, fns: &dyn ComputeFunctions) -> MapOutput {
    let users = placement
        .user_files
        .iter()
        .enumerate()
        .map(|(k, files)| {
            let values = dataset
                .inputs
                .iter()
                .map(|d| files.iter().map(|&n| fns.map(d, &dataset.files[n])).collect())
                .collect();
            UserMapOutput {
                user: k,
                files: files.clone(),
                values,
            }
        })
        .collect();
    MapOutput { users }
}

/// Reduce at user `k` over `available`, taking stored values locally and the
/// rest from what the shuffle recovered.
pub fn run_reduce(
    k: usize,
    local: &UserMapOutput,
    recovered: &RecoveredValues,
    available: &[usize],
    fns: &dyn ComputeFunctions,
) -> Result<Bits> {
    let mut files = available.to_vec();
    files.sort_unstable();
    files.dedup();
    let mut values = Vec::with_capacity(files.len());
    for n in files {
        let v = local
            .value(k, n)
            .or_else(|| recovered.get(n))
            .ok_or(Error::MissingValue { user: k, file: n })?;
        values.push((n, v));
    }
    Ok(fns.reduce(&values))
}
