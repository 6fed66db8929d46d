//! Closed-form loads, lower bounds and load accounting.
//!
//! All formulas are evaluated over exact rationals; conversion to `f64`
//! happens only when formatting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::config::{Baseline, DownlinkMode, Mu, PlacementMode, SystemConfig};
use crate::error::{Error, Result};
use crate::placement::{Placement, ReplicationHistogram};
use crate::subset::binomial_big;

pub type Exact = BigRational;

pub fn exact(mu: Mu) -> Exact {
    Exact::new(BigInt::from(*mu.numer()), BigInt::from(*mu.denom()))
}

fn int(n: usize) -> Exact {
    Exact::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Exact) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn centralized_range(users: usize, mu: &Exact) -> Result<()> {
    if users == 0 || *mu < Exact::new(1.into(), users.into()) || *mu > Exact::one() {
        return Err(Error::MuOutOfRange {
            mu: mu.to_string(),
            users,
        });
    }
    Ok(())
}

/// Loads at an integer replication point `t = μK`.
fn integer_point(users: usize, t: usize) -> (Exact, Exact) {
    let mu = Exact::new(t.into(), users.into());
    let up = mu.recip() - Exact::one();
    let down = Exact::new(t.into(), (t + 1).into()) * &up;
    (up, down)
}

/// Achievable centralized `(L_u, L_d)`; memory sharing between `⌊μK⌋` and
/// `⌈μK⌉` when `μK` is fractional.
pub fn theory_centralized(users: usize, mu: &Exact) -> Result<(Exact, Exact)> {
    centralized_range(users, mu)?;
    let mu_k = mu * int(users);
    let lo = mu_k.floor().to_integer().to_usize().expect("small");
    if mu_k.is_integer() {
        return Ok(integer_point(users, lo));
    }
    let alpha = mu_k.ceil() - &mu_k;
    let beta = Exact::one() - &alpha;
    let (u1, d1) = integer_point(users, lo);
    let (u2, d2) = integer_point(users, lo + 1);
    Ok((&alpha * u1 + &beta * u2, alpha * d1 + beta * d2))
}

fn pow(x: &Exact, e: usize) -> Exact {
    num_traits::pow(x.clone(), e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecentralizedTheory {
    pub uplink: Exact,
    pub downlink: Exact,
    pub delta: Exact,
}

/// Expected decentralized loads and information loss `(1−μ)^K`.
pub fn theory_decentralized(users: usize, mu: &Exact) -> Result<DecentralizedTheory> {
    if !mu.is_positive() || *mu > Exact::one() {
        return Err(Error::MuOutOfRange {
            mu: mu.to_string(),
            users,
        });
    }
    let nu = Exact::one() - mu;
    let mut uplink = Exact::zero();
    let mut downlink = Exact::zero();
    for j in 1..users {
        let term = Exact::from_integer(binomial_big(users, j + 1).into()) * pow(mu, j) * pow(&nu, users - j);
        uplink += &term * Exact::new((j + 1).into(), j.into());
        downlink += term;
    }
    Ok(DecentralizedTheory {
        uplink,
        downlink,
        delta: pow(&nu, users),
    })
}

fn histogram_sum(h: &ReplicationHistogram, offset: usize) -> Result<Exact> {
    if h.unstored() > 0 {
        return Err(Error::LostFilesPresent(h.unstored()));
    }
    if h.files == 0 {
        return Err(Error::ZeroSize("files"));
    }
    let k = h.participants();
    let mut acc = Exact::zero();
    for (j, &a) in h.counts.iter().enumerate().skip(1) {
        if a > 0 {
            acc += Exact::new(a.into(), h.files.into()) * Exact::new((k - j).into(), (j + offset).into());
        }
    }
    Ok(acc)
}

/// Uplink bound from a replication histogram: `Σ_j (a^j/N)(K−j)/j`.
pub fn lower_bound_uplink(h: &ReplicationHistogram) -> Result<Exact> {
    histogram_sum(h, 0)
}

/// Downlink bound from a replication histogram: `Σ_j (a^j/N)(K−j)/(j+1)`.
pub fn lower_bound_downlink(h: &ReplicationHistogram) -> Result<Exact> {
    histogram_sum(h, 1)
}

/// Lower convex hull of points sorted by x.
fn lower_hull(points: &[(Exact, Exact)]) -> Vec<(Exact, Exact)> {
    let mut hull: Vec<(Exact, Exact)> = Vec::new();
    for p in points {
        while hull.len() >= 2 {
            let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
            if cross.is_positive() {
                break;
            }
            hull.pop();
        }
        hull.push(p.clone());
    }
    hull
}

fn evaluate_piecewise(hull: &[(Exact, Exact)], x: &Exact) -> Exact {
    for w in hull.windows(2) {
        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
        if x >= x0 && x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    hull[0].1.clone()
}

/// Lower convex envelope at `μ` of the integer-point loads over
/// `μ ∈ {1/K, …, 1}`.
pub fn lower_bound_envelope(users: usize, mu: &Exact) -> Result<(Exact, Exact)> {
    centralized_range(users, mu)?;
    let xs: Vec<Exact> = (1..=users).map(|t| Exact::new(t.into(), users.into())).collect();
    let pts = |f: &dyn Fn(usize) -> Exact| -> Vec<(Exact, Exact)> {
        xs.iter().cloned().zip((1..=users).map(f)).collect()
    };
    let up = lower_hull(&pts(&|t| integer_point(users, t).0));
    let down = lower_hull(&pts(&|t| integer_point(users, t).1));
    Ok((evaluate_piecewise(&up, mu), evaluate_piecewise(&down, mu)))
}

/// Decentralized converse evaluated at information loss `delta`.
pub fn decentralized_bound(users: usize, mu: &Exact, delta: &Exact) -> (Exact, Exact) {
    let keep = Exact::one() - delta;
    let up = (&keep / mu - Exact::one()) * &keep;
    let mu_k = mu * int(users);
    let denom = &mu_k + &keep;
    let down = if denom.is_zero() {
        Exact::zero()
    } else {
        mu_k / denom * &up
    };
    (up, down)
}

/// Uncoded loads: every needed value crosses each hop once.
pub fn theory_uncoded(users: usize, mu: &Exact, placement: PlacementMode) -> Exact {
    let nu = Exact::one() - mu;
    match placement {
        PlacementMode::Centralized => int(users) * nu,
        PlacementMode::Decentralized => int(users) * (&nu - pow(&nu, users)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concentration {
    pub users: usize,
    /// Fraction of files stored by exactly `j` users, `j = 0..=K`.
    pub empirical: Vec<f64>,
    pub binomial: Vec<f64>,
    pub total_variation: f64,
}

pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if p >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    if p <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let mut v = Vec::with_capacity(n + 1);
    let mut cur = (1.0 - p).powi(n as i32);
    let odds = p / (1.0 - p);
    for j in 0..=n {
        v.push(cur);
        cur *= (n - j) as f64 / (j + 1) as f64 * odds;
    }
    v
}

/// Replication densities pooled over `samples`, against Binomial(K, μ).
pub fn concentration_density(samples: &[Placement], users: usize, mu: f64) -> Concentration {
    let mut counts = vec![0usize; users + 1];
    let mut files = 0usize;
    for p in samples {
        let mut per_file = vec![0usize; p.files];
        for stored in p.user_files.iter().take(users) {
            for &n in stored {
                per_file[n] += 1;
            }
        }
        for c in per_file {
            counts[c] += 1;
        }
        files += p.files;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / files.max(1) as f64).collect();
    let binomial = binomial_pmf(users, mu);
    let total_variation = 0.5 * empirical.iter().zip(&binomial).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Concentration {
        users,
        empirical,
        binomial,
        total_variation,
    }
}

/// Raw counters from a finished run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub uplink_bits: u64,
    pub downlink_bits: u64,
    pub padding_up: u64,
    pub padding_down: u64,
    pub unstored_files: usize,
    pub attempts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub users: usize,
    pub files: usize,
    pub mu: Mu,
    pub value_bits: usize,
    pub placement: PlacementMode,
    pub downlink: DownlinkMode,
    pub baseline: Baseline,
    pub uplink_bits: u64,
    pub downlink_bits: u64,
    pub padding_up: u64,
    pub padding_down: u64,
    pub l_u: Exact,
    pub l_d: Exact,
    pub theory_l_u: Exact,
    pub theory_l_d: Exact,
    pub bound_l_u: Exact,
    pub bound_l_d: Exact,
    pub delta: Exact,
    pub delta_theory: Exact,
    pub attempts: Vec<u32>,
}

impl LoadReport {
    pub fn padding_bits(&self) -> u64 {
        self.padding_up + self.padding_down
    }

    pub fn mean_attempts(&self) -> Option<f64> {
        if self.attempts.is_empty() {
            return None;
        }
        Some(self.attempts.iter().map(|&a| a as f64).sum::<f64>() / self.attempts.len() as f64)
    }

    /// Human-readable block.
    pub fn text(&self) -> String {
        let f = |x: &Exact| format_sig(to_f64(x));
        let mut out = format!(
            "K={} N={} mu={} T={} mode={} downlink={} baseline={}\n",
            self.users,
            self.files,
            crate::config::format_mu(self.mu),
            self.value_bits,
            self.placement,
            self.downlink,
            self.baseline
        );
        out += &format!(
            "uplink:   {} bits  L_u={} ({})  theory={}  bound={}\n",
            self.uplink_bits,
            f(&self.l_u),
            self.l_u,
            f(&self.theory_l_u),
            f(&self.bound_l_u)
        );
        out += &format!(
            "downlink: {} bits  L_d={} ({})  theory={}  bound={}\n",
            self.downlink_bits,
            f(&self.l_d),
            self.l_d,
            f(&self.theory_l_d),
            f(&self.bound_l_d)
        );
        out += &format!(
            "padding:  {} up, {} down\ndelta:    {} (theory {})\n",
            self.padding_up,
            self.padding_down,
            f(&self.delta),
            f(&self.delta_theory)
        );
        if let Some(m) = self.mean_attempts() {
            out += &format!("coefficient draws: mean {} over {} subsets\n", format_sig(m), self.attempts.len());
        }
        out
    }
}

/// Theory `(L_u, L_d, Δ)` for a configuration.
pub fn theory_loads(cfg: &SystemConfig) -> Result<(Exact, Exact, Exact)> {
    let mu = exact(cfg.mu);
    let k = cfg.users;
    let (up, down, delta) = match (cfg.placement, cfg.baseline) {
        (PlacementMode::Centralized, Baseline::Coded) => {
            let (u, d) = theory_centralized(k, &mu)?;
            (u, d, Exact::zero())
        }
        (PlacementMode::Decentralized, Baseline::Coded) => {
            let t = theory_decentralized(k, &mu)?;
            (t.uplink, t.downlink, t.delta)
        }
        (placement, Baseline::Uncoded) => {
            let u = theory_uncoded(k, &mu, placement);
            let delta = match placement {
                PlacementMode::Centralized => Exact::zero(),
                PlacementMode::Decentralized => pow(&(Exact::one() - &mu), k),
            };
            (u.clone(), u, delta)
        }
    };
    let down = if cfg.downlink == DownlinkMode::Forward || cfg.baseline == Baseline::Uncoded {
        up.clone()
    } else {
        down
    };
    Ok((up, down, delta))
}

/// Converse for a configuration: the envelope for centralized placement,
/// the decentralized expression at `delta` otherwise.
pub fn bound_loads(cfg: &SystemConfig, delta: &Exact) -> Result<(Exact, Exact)> {
    let mu = exact(cfg.mu);
    match cfg.placement {
        PlacementMode::Centralized => lower_bound_envelope(cfg.users, &mu),
        PlacementMode::Decentralized => Ok(decentralized_bound(cfg.users, &mu, delta)),
    }
}

/// Normalizes counters by `N·T` and attaches theory and bounds. The
/// decentralized bound uses the measured information loss.
pub fn measure_loads(cfg: &SystemConfig, counters: &RunCounters) -> Result<LoadReport> {
    let nt = int(cfg.files) * int(cfg.value_bits);
    let bits = |b: u64| Exact::from_integer(BigInt::from(b)) / &nt;
    let (theory_l_u, theory_l_d, delta_theory) = theory_loads(cfg)?;
    let delta = Exact::new(counters.unstored_files.into(), cfg.files.into());
    let (bound_l_u, bound_l_d) = bound_loads(cfg, &delta)?;
    Ok(LoadReport {
        users: cfg.users,
        files: cfg.files,
        mu: cfg.mu,
        value_bits: cfg.value_bits,
        placement: cfg.placement,
        downlink: cfg.downlink,
        baseline: cfg.baseline,
        uplink_bits: counters.uplink_bits,
        downlink_bits: counters.downlink_bits,
        padding_up: counters.padding_up,
        padding_down: counters.padding_down,
        l_u: bits(counters.uplink_bits),
        l_d: bits(counters.downlink_bits),
        theory_l_u,
        theory_l_d,
        bound_l_u,
        bound_l_d,
        delta,
        delta_theory,
        attempts: counters.attempts.clone(),
    })
}

/// Twelve significant digits, trailing zeros trimmed, scientific outside
/// `[1e-5, 1e12)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, r: i64) -> Exact {
        Exact::new(p.into(), r.into())
    }

    #[test]
    fn centralized_points() {
        assert_eq!(theory_centralized(3, &q(2, 3)).unwrap(), (q(1, 2), q(1, 3)));
        assert_eq!(theory_centralized(7, &q(1, 1)).unwrap(), (q(0, 1), q(0, 1)));
        assert_eq!(theory_centralized(4, &q(3, 8)).unwrap(), (q(2, 1), q(13, 12)));
        assert!(matches!(theory_centralized(4, &q(1, 5)), Err(Error::MuOutOfRange { .. })));
        assert!(matches!(theory_centralized(4, &q(5, 4)), Err(Error::MuOutOfRange { .. })));
    }

    #[test]
    fn centralized_loads_decrease_with_mu() {
        for k in 2..=12 {
            let mut prev: Option<(Exact, Exact)> = None;
            for num in 4..=(4 * k) {
                let cur = theory_centralized(k, &q(num as i64, 4 * k as i64)).unwrap();
                if let Some(p) = prev {
                    assert!(cur.0 <= p.0 && cur.1 <= p.1);
                }
                prev = Some(cur);
            }
        }
    }

    #[test]
    fn decentralized_sums() {
        let t = theory_decentralized(4, &q(1, 2)).unwrap();
        assert_eq!(t.uplink, q(58, 48));
        assert_eq!(t.downlink, q(11, 16));
        assert_eq!(t.delta, q(1, 16));
        let full = theory_decentralized(5, &q(1, 1)).unwrap();
        assert!(full.uplink.is_zero() && full.downlink.is_zero() && full.delta.is_zero());
        // downlink sits at 1/μ − 1 already; the uplink excess shrinks like 1/(μK)
        let limit = 1.5;
        let gap = |k: usize| {
            let t = theory_decentralized(k, &q(2, 5)).unwrap();
            assert!((to_f64(&t.downlink) - limit).abs() / limit < 0.01);
            (to_f64(&t.uplink) - limit) / limit
        };
        let (g100, g200, g300) = (gap(100), gap(200), gap(300));
        assert!(g100 > g200 && g200 > g300 && g300 > 0.0);
        assert!(g100 < 0.03 && g300 < 0.01);
    }

    #[test]
    fn histogram_bounds() {
        let h = ReplicationHistogram::from_counts(vec![0, 0, 6, 0]);
        assert_eq!(lower_bound_uplink(&h).unwrap(), q(1, 2));
        assert_eq!(lower_bound_downlink(&h).unwrap(), q(1, 3));
        let top = ReplicationHistogram::from_counts(vec![0, 0, 0, 5]);
        assert!(lower_bound_uplink(&top).unwrap().is_zero());
        assert!(lower_bound_downlink(&top).unwrap().is_zero());
        assert_eq!(lower_bound_uplink(&ReplicationHistogram::from_counts(vec![0, 9, 0, 0, 0])).unwrap(), q(3, 1));
        assert_eq!(lower_bound_downlink(&ReplicationHistogram::from_counts(vec![0, 9, 0, 0])).unwrap(), q(1, 1));
        assert_eq!(
            lower_bound_uplink(&ReplicationHistogram::from_counts(vec![2, 4, 0])),
            Err(Error::LostFilesPresent(2))
        );
    }

    #[test]
    fn envelope_matches_points_and_blend() {
        for k in 1..=10 {
            for t in 1..=k {
                let mu = q(t as i64, k as i64);
                assert_eq!(lower_bound_envelope(k, &mu).unwrap(), theory_centralized(k, &mu).unwrap());
            }
        }
        assert_eq!(lower_bound_envelope(4, &q(3, 8)).unwrap(), (q(2, 1), q(13, 12)));
        assert_eq!(lower_bound_envelope(20, &q(1, 2)).unwrap(), (q(1, 1), q(10, 11)));
        for k in 2..=9 {
            for num in 1..(3 * k) {
                let mu = q(k as i64 + num as i64, 4 * k as i64);
                if mu <= Exact::one() && &mu * q(k as i64, 1) >= Exact::one() {
                    assert_eq!(lower_bound_envelope(k, &mu).unwrap(), theory_centralized(k, &mu).unwrap());
                }
            }
        }
    }

    #[test]
    fn decentralized_bound_cases() {
        assert_eq!(decentralized_bound(4, &q(1, 2), &q(0, 1)), (q(1, 1), q(2, 3)));
        assert_eq!(decentralized_bound(4, &q(1, 2), &q(1, 16)).0, q(105, 128));
        let (u, d) = decentralized_bound(4, &q(1, 2), &q(1, 1));
        assert!(u.is_zero() && d.is_zero());
    }

    #[test]
    fn binomial_reference() {
        let p = binomial_pmf(4, 0.5);
        for (j, c) in [1.0, 4.0, 6.0, 4.0, 1.0].iter().enumerate() {
            assert!((p[j] - c / 16.0).abs() < 1e-15);
        }
        assert_eq!(binomial_pmf(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
        let s: f64 = binomial_pmf(128, 0.4).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(13.0 / 12.0), "1.08333333333");
        assert_eq!(format_sig(0.0021768), "0.0021768");
        assert_eq!(format_sig(1.5e-7), "1.5e-7");
        assert_eq!(format_sig(0.0), "0");
    }
}
