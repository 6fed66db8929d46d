//! Data series behind the published load and concentration plots.

use crate::analysis::{
    concentration_density, theory_centralized, theory_decentralized, theory_uncoded, to_f64, Concentration, Exact,
};
use crate::config::{validate_config, Mu, PlacementMode, SystemConfig};
use crate::error::Result;
use crate::placement::place;

pub const LOAD_FIGURE_USERS: usize = 20;
pub const CONCENTRATION_MU: Mu = Mu::new_raw(2, 5);
pub const CONCENTRATION_USERS: [usize; 5] = [8, 16, 32, 64, 128];
pub const CONCENTRATION_FILES: usize = 100_000;

/// `μ = t/K` for `t = 1..=K`.
pub fn mu_grid(users: usize) -> Vec<Mu> {
    (1..=users as u64).map(|t| Mu::new(t, users as u64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedVsUncoded {
    pub mu: Mu,
    pub coded_uplink: f64,
    pub coded_downlink: f64,
    pub uncoded: f64,
}

pub fn coded_vs_uncoded(users: usize) -> Result<Vec<CodedVsUncoded>> {
    mu_grid(users)
        .into_iter()
        .map(|mu| {
            let e = Exact::new((*mu.numer()).into(), (*mu.denom()).into());
            let (u, d) = theory_centralized(users, &e)?;
            Ok(CodedVsUncoded {
                mu,
                coded_uplink: to_f64(&u),
                coded_downlink: to_f64(&d),
                uncoded: to_f64(&theory_uncoded(users, &e, PlacementMode::Centralized)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedVsDecentralized {
    pub mu: Mu,
    pub centralized_uplink: f64,
    pub centralized_downlink: f64,
    pub decentralized_uplink: f64,
    pub decentralized_downlink: f64,
}

pub fn centralized_vs_decentralized(users: usize) -> Result<Vec<CentralizedVsDecentralized>> {
    mu_grid(users)
        .into_iter()
        .map(|mu| {
            let e = Exact::new((*mu.numer()).into(), (*mu.denom()).into());
            let (u, d) = theory_centralized(users, &e)?;
            let t = theory_decentralized(users, &e)?;
            Ok(CentralizedVsDecentralized {
                mu,
                centralized_uplink: to_f64(&u),
                centralized_downlink: to_f64(&d),
                decentralized_uplink: to_f64(&t.uplink),
                decentralized_downlink: to_f64(&t.downlink),
            })
        })
        .collect()
}

/// One decentralized placement per user count, each against Binomial(K, μ).
pub fn concentration(users: &[usize], files: usize, mu: Mu, seed: u64) -> Result<Vec<Concentration>> {
    users
        .iter()
        .map(|&k| {
            let cfg = SystemConfig::new(k, files, mu)
                .with_placement(PlacementMode::Decentralized)
                .with_seed(seed);
            let p = place(&validate_config(cfg)?)?;
            Ok(concentration_density(std::slice::from_ref(&p), k, crate::config::mu_to_f64(mu)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = mu_grid(20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], Mu::new(1, 20));
        assert_eq!(g[19], Mu::from_integer(1));
    }

    #[test]
    fn uncoded_is_mu_k_times_coded_uplink() {
        for row in coded_vs_uncoded(20).unwrap() {
            let mu_k = crate::config::mu_to_f64(row.mu) * 20.0;
            assert!((row.uncoded - mu_k * row.coded_uplink).abs() < 1e-12);
        }
    }

    #[test]
    fn small_concentration_matches_binomial() {
        let c = concentration(&[4], 100_000, Mu::new(1, 2), 1).unwrap();
        for (j, want) in [1.0, 4.0, 6.0, 4.0, 1.0].iter().enumerate() {
            assert!((c[0].empirical[j] - want / 16.0).abs() < 0.01);
        }
        let full = concentration(&[5], 1000, Mu::from_integer(1), 1).unwrap();
        assert_eq!(full[0].empirical[5], 1.0);
    }
}
