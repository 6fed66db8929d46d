//! Scenario configuration and validation.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::binomial;

/// Storage fraction, kept exact.
pub type Mu = Ratio<u64>;

/// Decimal storage fractions within this distance of a multiple of `1/K`
/// snap onto it, so `0.6667` with three users means `2/3`.
pub const MU_SNAP_TOLERANCE: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    Centralized,
    Decentralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DownlinkMode {
    /// Cauchy coefficients; every user's reduced system is invertible.
    Mds,
    /// Uniform random coefficients, redrawn until decodable.
    Random,
    /// The access point relays each uplink message unchanged.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Coded,
    Uncoded,
}

macro_rules! keyword_enum {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::Parse(format!(
                        "unknown {} `{}`", stringify!($ty), other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $(v if *v == $variant => $name,)+
                    _ => unreachable!(),
                };
                f.write_str(name)
            }
        }
    };
}

keyword_enum!(PlacementMode {
    "centralized" => PlacementMode::Centralized,
    "decentralized" => PlacementMode::Decentralized,
});

keyword_enum!(DownlinkMode {
    "mds" => DownlinkMode::Mds,
    "random" => DownlinkMode::Random,
    "forward" => DownlinkMode::Forward,
});

keyword_enum!(Baseline {
    "coded" => Baseline::Coded,
    "uncoded" => Baseline::Uncoded,
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: usize,
    pub files: usize,
    #[serde(with = "mu_serde")]
    pub mu: Mu,
    /// Bits per intermediate value.
    pub value_bits: usize,
    pub file_bits: usize,
    pub input_bits: usize,
    pub output_bits: usize,
    pub seed: u64,
    pub placement: PlacementMode,
    pub downlink: DownlinkMode,
    pub baseline: Baseline,
    /// Cap on coefficient draws per subset in random downlink mode.
    pub retry_limit: u32,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 3,
            files: 6,
            mu: Mu::new(2, 3),
            value_bits: 64,
            file_bits: 256,
            input_bits: 32,
            output_bits: 64,
            seed: 0,
            placement: PlacementMode::Centralized,
            downlink: DownlinkMode::Mds,
            baseline: Baseline::Coded,
            retry_limit: 64,
        }
    }
}

impl SystemConfig {
    pub fn new(users: usize, files: usize, mu: Mu) -> Self {
        Self {
            users,
            files,
            mu,
            ..Self::default()
        }
    }

    pub fn with_value_bits(mut self, bits: usize) -> Self {
        self.value_bits = bits;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_placement(mut self, mode: PlacementMode) -> Self {
        self.placement = mode;
        self
    }

    pub fn with_downlink(mut self, mode: DownlinkMode) -> Self {
        self.downlink = mode;
        self
    }

    pub fn with_baseline(mut self, baseline: Baseline) -> Self {
        self.baseline = baseline;
        self
    }

    /// `μK` as an exact rational.
    pub fn mu_k(&self) -> Mu {
        self.mu * Mu::from_integer(self.users as u64)
    }
}

/// How files are replicated across users, derived from a valid config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replication {
    /// Every file stored by exactly `factor = μK` users, `eta` files per batch.
    Integer {
        factor: usize,
        batches: usize,
        eta: usize,
    },
    /// Convex combination of two integer replications at `⌊μK⌋` and `⌈μK⌉`.
    MemorySharing {
        low: SharePart,
        high: SharePart,
        /// Weight of the low-replication part.
        alpha: Mu,
    },
    /// Each user independently stores `stored_per_user` random files.
    Random {
        stored_per_user: usize,
        /// True when `μN` was fractional and rounded down.
        floored: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharePart {
    pub factor: usize,
    pub files: usize,
    pub batches: usize,
    pub eta: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedConfig {
    pub config: SystemConfig,
    pub replication: Replication,
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SystemConfig;
    fn deref(&self) -> &SystemConfig {
        &self.config
    }
}

/// Checks every config invariant and attaches derived quantities.
pub fn validate_config(cfg: SystemConfig) -> Result<ValidatedConfig> {
    for (name, v) in [
        ("users", cfg.users),
        ("files", cfg.files),
        ("value_bits", cfg.value_bits),
        ("file_bits", cfg.file_bits),
        ("input_bits", cfg.input_bits),
        ("output_bits", cfg.output_bits),
    ] {
        if v == 0 {
            return Err(Error::ZeroSize(name));
        }
    }
    if cfg.retry_limit == 0 {
        return Err(Error::ZeroSize("retry_limit"));
    }
    check_mu(cfg.users, cfg.mu)?;
    // bit totals are accumulated in u64
    let needed = (cfg.files as u128) * (cfg.users as u128) * (cfg.users as u128) * (cfg.value_bits as u128);
    if needed > u64::MAX as u128 {
        return Err(Error::Parse("configuration exceeds 64-bit bit accounting".into()));
    }

    let replication = match cfg.placement {
        PlacementMode::Centralized => centralized_replication(cfg.users, cfg.files, cfg.mu)?,
        PlacementMode::Decentralized => {
            let exact = cfg.mu * Mu::from_integer(cfg.files as u64);
            Replication::Random {
                stored_per_user: exact.to_integer() as usize,
                floored: !exact.is_integer(),
            }
        }
    };
    Ok(ValidatedConfig {
        config: cfg,
        replication,
    })
}

pub(crate) fn check_mu(users: usize, mu: Mu) -> Result<()> {
    if users == 0 {
        return Err(Error::ZeroSize("users"));
    }
    let lower = Mu::new(1, users as u64);
    if mu < lower || mu > Mu::from_integer(1) {
        return Err(Error::MuOutOfRange {
            mu: mu.to_string(),
            users,
        });
    }
    Ok(())
}

fn batches_for(users: usize, factor: usize) -> Result<usize> {
    binomial(users, factor)
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::Parse(format!("C({users},{factor}) overflows")))
}

/// Replication plan for centralized placement, or the divisibility failure.
pub fn centralized_replication(users: usize, files: usize, mu: Mu) -> Result<Replication> {
    check_mu(users, mu)?;
    let mu_k = mu * Mu::from_integer(users as u64);
    if mu_k.is_integer() {
        let factor = mu_k.to_integer() as usize;
        let batches = batches_for(users, factor)?;
        if files % batches != 0 {
            return Err(Error::DivisibilityViolation {
                files,
                reason: format!("{files} is not a multiple of C({users},{factor}) = {batches}"),
                suggestion: suggest_file_count(users, mu, files),
            });
        }
        return Ok(Replication::Integer {
            factor,
            batches,
            eta: files / batches,
        });
    }

    let low = mu_k.floor().to_integer() as usize;
    let high = low + 1;
    // α = (μ2 − μ)/(μ2 − μ1) = ⌈μK⌉ − μK since the two grid points are 1/K apart
    let alpha = Mu::from_integer(high as u64) - mu_k;
    let low_files = alpha * Mu::from_integer(files as u64);
    let violation = |reason: String| Error::DivisibilityViolation {
        files,
        reason,
        suggestion: suggest_file_count(users, mu, files),
    };
    if !low_files.is_integer() {
        return Err(violation(format!("alpha*N = {low_files} is not an integer (alpha = {alpha})")));
    }
    let low_files = low_files.to_integer() as usize;
    let high_files = files - low_files;
    let low_batches = batches_for(users, low)?;
    let high_batches = batches_for(users, high)?;
    if low_files % low_batches != 0 || high_files % high_batches != 0 {
        return Err(violation(format!(
            "split {low_files}+{high_files} must be multiples of C({users},{low}) = {low_batches} and C({users},{high}) = {high_batches}"
        )));
    }
    Ok(Replication::MemorySharing {
        low: SharePart {
            factor: low,
            files: low_files,
            batches: low_batches,
            eta: low_files / low_batches,
        },
        high: SharePart {
            factor: high,
            files: high_files,
            batches: high_batches,
            eta: high_files / high_batches,
        },
        alpha,
    })
}

/// Smallest valid centralized file count; used when picking sweep sizes.
pub fn minimal_file_count(users: usize, mu: Mu) -> Option<usize> {
    let mu_k = mu * Mu::from_integer(users as u64);
    if mu_k.is_integer() {
        return binomial(users, mu_k.to_integer() as usize).map(|b| b as usize);
    }
    let low = mu_k.floor().to_integer() as usize;
    let alpha = Mu::from_integer(low as u64 + 1) - mu_k;
    let b1 = binomial(users, low)? as usize;
    let b2 = binomial(users, low + 1)? as usize;
    // N must make αN a multiple of b1 and (1−α)N a multiple of b2
    let step = |share: Mu, batches: usize| {
        let modulus = batches as u64 * *share.denom();
        modulus / share.numer().gcd(&modulus)
    };
    let low_step = step(alpha, b1);
    let high_step = step(Mu::from_integer(1) - alpha, b2);
    Some(low_step.lcm(&high_step) as usize)
}

/// The memory-sharing partition sizes `(αN, (1−α)N)` and `(μ1, μ2, α)`,
/// without checking that either part can be placed.
pub fn memory_sharing_split(users: usize, files: usize, mu: Mu) -> Option<(Mu, Mu, Mu, Mu, Mu)> {
    let mu_k = mu * Mu::from_integer(users as u64);
    if mu_k.is_integer() {
        return None;
    }
    let k = Mu::from_integer(users as u64);
    let mu1 = mu_k.floor() / k;
    let mu2 = mu_k.ceil() / k;
    let alpha = (mu2 - mu) / (mu2 - mu1);
    let n = Mu::from_integer(files as u64);
    Some((alpha * n, (Mu::from_integer(1) - alpha) * n, mu1, mu2, alpha))
}

/// Nearest file count (ties toward the larger) that centralized placement
/// accepts for `(users, mu)`.
pub fn suggest_file_count(users: usize, mu: Mu, near: usize) -> Option<usize> {
    let step = minimal_file_count(users, mu)?;
    if step == 0 {
        return None;
    }
    let below = near / step * step;
    let above = below + step;
    if below == 0 || near - below >= above - near {
        Some(above)
    } else {
        Some(below)
    }
}

/// Parses `"p/q"` exactly, or a decimal snapped to the `1/users` grid when
/// within [`MU_SNAP_TOLERANCE`].
pub fn parse_mu(text: &str, users: usize) -> Result<Mu> {
    let text = text.trim();
    let bad = || Error::Parse(format!("invalid storage fraction `{text}`"));
    if let Some((p, q)) = text.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Mu::new(p, q));
    }
    let value: f64 = text.parse().map_err(|_| bad())?;
    if !value.is_finite() || value < 0.0 {
        return Err(bad());
    }
    if users > 0 {
        let nearest = (value * users as f64).round();
        if (value - nearest / users as f64).abs() <= MU_SNAP_TOLERANCE {
            return Ok(Mu::new(nearest as u64, users as u64));
        }
    }
    decimal_to_ratio(text).ok_or_else(bad)
}

fn decimal_to_ratio(text: &str) -> Option<Mu> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 15 {
        return None;
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let scale = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Mu::new(int.checked_mul(scale)? + frac, scale))
}

pub fn mu_to_f64(mu: Mu) -> f64 {
    mu.to_f64().unwrap_or(f64::NAN)
}

pub fn format_mu(mu: Mu) -> String {
    if mu.denom().is_zero() || mu.is_integer() {
        mu.to_integer().to_string()
    } else {
        format!("{}/{}", mu.numer(), mu.denom())
    }
}

mod mu_serde {
    use super::{format_mu, parse_mu, Mu};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mu: &Mu, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_mu(*mu))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mu, D::Error> {
        let text = String::deserialize(d)?;
        parse_mu(&text, 0).map_err(serde::de::Error::custom)
    }
}
