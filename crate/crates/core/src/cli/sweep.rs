use std::time::Instant;

use num_integer::Integer;
use serde::Serialize;

use crate::analysis::{bound_loads, format_sig, theory_loads, to_f64};
use crate::config::{format_mu, minimal_file_count, parse_mu, Baseline, DownlinkMode, Mu, PlacementMode, SystemConfig};
use crate::error::Result;
use crate::figures::mu_grid;
use crate::sim::{run, FailureKind, RunOptions};

pub const SWEEP_HEADER: [&str; 20] = [
    "K",
    "N",
    "mu",
    "mode",
    "baseline",
    "L_u_meas",
    "L_d_meas",
    "L_u_theory",
    "L_d_theory",
    "L_u_bound",
    "L_d_bound",
    "delta_meas",
    "delta_theory",
    "uplink_bits",
    "downlink_bits",
    "padding_bits",
    "seed",
    "analytic",
    "status",
    "duration_ms",
];

pub const MAX_SIMULATED_CENTRALIZED: usize = 14;
pub const MAX_SIMULATED_DECENTRALIZED: usize = 12;
const DECENTRALIZED_SWEEP_FILES: usize = 2000;
const DECENTRALIZED_SWEEP_BITS: usize = 64;

/// One CSV row; empty strings for columns that do not apply.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub users: String,
    #[serde(rename = "N")]
    pub files: String,
    pub mu: String,
    pub mode: String,
    pub baseline: String,
    #[serde(rename = "L_u_meas")]
    pub l_u_meas: String,
    #[serde(rename = "L_d_meas")]
    pub l_d_meas: String,
    #[serde(rename = "L_u_theory")]
    pub l_u_theory: String,
    #[serde(rename = "L_d_theory")]
    pub l_d_theory: String,
    #[serde(rename = "L_u_bound")]
    pub l_u_bound: String,
    #[serde(rename = "L_d_bound")]
    pub l_d_bound: String,
    pub delta_meas: String,
    pub delta_theory: String,
    pub uplink_bits: String,
    pub downlink_bits: String,
    pub padding_bits: String,
    pub seed: String,
    pub analytic: String,
    pub status: String,
    pub duration_ms: String,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub users: Vec<usize>,
    /// `None` means every `t/K`.
    pub mu: Option<Vec<String>>,
    pub modes: Vec<PlacementMode>,
    pub baselines: Vec<Baseline>,
    pub downlink: DownlinkMode,
    pub files: Option<usize>,
    pub value_bits: Option<usize>,
    pub seed: u64,
    pub analytic_only: bool,
}

/// Bits per value that keep every centralized chunk byte-aligned.
pub fn aligned_value_bits(users: usize, mu: Mu) -> usize {
    let mu_k = mu * Mu::from_integer(users as u64);
    let lo = mu_k.floor().to_integer().max(1) as usize;
    let hi = mu_k.ceil().to_integer().max(1) as usize;
    8 * lo.lcm(&hi)
}

fn tractable(cfg: &SystemConfig) -> bool {
    match cfg.placement {
        PlacementMode::Centralized => cfg.users <= MAX_SIMULATED_CENTRALIZED,
        PlacementMode::Decentralized => cfg.users <= MAX_SIMULATED_DECENTRALIZED,
    }
}

fn sig(x: &crate::analysis::Exact) -> String {
    format_sig(to_f64(x))
}

fn point(plan: &SweepPlan, users: usize, mu: Mu, mode: PlacementMode, baseline: Baseline) -> SweepRow {
    let started = Instant::now();
    let files = plan.files.unwrap_or_else(|| match mode {
        PlacementMode::Centralized => minimal_file_count(users, mu).unwrap_or(0),
        PlacementMode::Decentralized => DECENTRALIZED_SWEEP_FILES,
    });
    let value_bits = plan.value_bits.unwrap_or_else(|| match mode {
        PlacementMode::Centralized => aligned_value_bits(users, mu),
        PlacementMode::Decentralized => DECENTRALIZED_SWEEP_BITS,
    });
    let cfg = SystemConfig::new(users, files, mu)
        .with_placement(mode)
        .with_baseline(baseline)
        .with_downlink(plan.downlink)
        .with_value_bits(value_bits)
        .with_seed(plan.seed);
    let mut row = SweepRow {
        users: users.to_string(),
        files: files.to_string(),
        mu: format_mu(mu),
        mode: mode.to_string(),
        baseline: baseline.to_string(),
        seed: plan.seed.to_string(),
        ..Default::default()
    };
    match theory_loads(&cfg) {
        Ok((u, d, delta)) => {
            row.l_u_theory = sig(&u);
            row.l_d_theory = sig(&d);
            row.delta_theory = sig(&delta);
            if let Ok((bu, bd)) = bound_loads(&cfg, &delta) {
                row.l_u_bound = sig(&bu);
                row.l_d_bound = sig(&bd);
            }
        }
        Err(e) => {
            row.status = format!("config-invalid: {e}");
            row.analytic = "1".into();
            row.duration_ms = started.elapsed().as_millis().to_string();
            return row;
        }
    }
    if plan.analytic_only || !tractable(&cfg) {
        row.analytic = "1".into();
        row.status = "ok".into();
    } else {
        row.analytic = "0".into();
        match run(&cfg, RunOptions::default()) {
            Ok(o) => {
                let r = &o.report;
                row.l_u_meas = sig(&r.l_u);
                row.l_d_meas = sig(&r.l_d);
                row.l_u_bound = sig(&r.bound_l_u);
                row.l_d_bound = sig(&r.bound_l_d);
                row.delta_meas = sig(&r.delta);
                row.uplink_bits = r.uplink_bits.to_string();
                row.downlink_bits = r.downlink_bits.to_string();
                row.padding_bits = r.padding_bits().to_string();
                row.status = "ok".into();
            }
            Err(e) => {
                let tag = match e.kind {
                    FailureKind::Config => "config-invalid",
                    FailureKind::Verification => "verification-failed",
                    FailureKind::Decode => "decode-failed",
                };
                row.status = format!("{tag}: {e}");
            }
        }
    }
    row.duration_ms = started.elapsed().as_millis().to_string();
    row
}

/// Rows in grid order: users, then μ, then mode, then baseline.
pub fn sweep_rows(plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in &plan.users {
        let mus = match &plan.mu {
            None => mu_grid(k),
            Some(list) => list.iter().map(|m| parse_mu(m, k)).collect::<Result<_>>()?,
        };
        for &mu in &mus {
            for &mode in &plan.modes {
                for &baseline in &plan.baselines {
                    rows.push(point(plan, k, mu, mode, baseline));
                }
            }
        }
    }
    Ok(rows)
}
