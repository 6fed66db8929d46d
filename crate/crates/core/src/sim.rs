//! One complete run: placement, Map, shuffle, Reduce, oracle check and
//! load measurement.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::access_point::{
    encode_downlink_centralized, encode_downlink_decentralized, forward_uncoded, DownlinkOutput, DownlinkParams,
};
use crate::analysis::{format_sig, measure_loads, to_f64, LoadReport, RunCounters};
use crate::config::{format_mu, validate_config, Baseline, DownlinkMode, PlacementMode, SystemConfig};
use crate::dataset::{default_compute_functions, oracle_output, synthesize_dataset, ComputeFunctions};
use crate::decoder::{decode_uncoded, decode_user};
use crate::engine::{run_map, run_reduce};
use crate::error::Error;
use crate::gf256::REDUCTION_POLYNOMIAL;
use crate::matrix::MDS_CONSTRUCTION;
use crate::placement::{all_users, place, replication_histogram, Placement, ReplicationHistogram};
use crate::subset::MAX_USERS;
use crate::uplink::{
    build_plan, encode_centralized_uplink, encode_decentralized_uplink, encode_uncoded_uplink, UplinkMessage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Verification,
    Decode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFailure {
    pub kind: FailureKind,
    pub error: Option<Error>,
    pub message: String,
}

impl RunFailure {
    fn config(e: Error) -> Self {
        Self {
            kind: FailureKind::Config,
            message: e.to_string(),
            error: Some(e),
        }
    }

    fn decode(e: Error) -> Self {
        Self {
            kind: FailureKind::Decode,
            message: e.to_string(),
            error: Some(e),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => 2,
            FailureKind::Verification => 3,
            FailureKind::Decode => 4,
        }
    }
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunFailure {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetadata {
    pub hash_primitive: String,
    pub field_polynomial: String,
    pub matrix_construction: String,
    pub version: String,
}

pub fn run_metadata(cfg: &SystemConfig, fns_id: &str) -> RunMetadata {
    let matrix = match (cfg.baseline, cfg.downlink) {
        (Baseline::Uncoded, _) | (_, DownlinkMode::Forward) => "identity (forwarding)".to_string(),
        (_, DownlinkMode::Mds) => MDS_CONSTRUCTION.to_string(),
        (_, DownlinkMode::Random) => format!(
            "uniform over GF(2^8), redrawn until every maximal minor is invertible (cap {}); ChaCha20 keyed by SHA-256(seed, subset)",
            cfg.retry_limit
        ),
    };
    RunMetadata {
        hash_primitive: fns_id.to_string(),
        field_polynomial: format!("{REDUCTION_POLYNOMIAL:#x}"),
        matrix_construction: matrix,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: SystemConfig,
    pub report: LoadReport,
    pub histogram: ReplicationHistogram,
    pub placement: Placement,
    pub verified_users: usize,
    pub metadata: RunMetadata,
    pub duration_ms: u128,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Replaces the default Map/Reduce functions.
    pub functions: Option<&'a dyn ComputeFunctions>,
    /// JSON-lines sink for every transmitted message and block.
    pub trace: Option<&'a mut dyn Write>,
}

fn trace_messages(w: &mut dyn Write, up: &[UplinkMessage], down: &DownlinkOutput) -> std::io::Result<()> {
    for m in up {
        let line = json!({
            "phase": "uplink",
            "sender": m.sender + 1,
            "subset": m.subset.to_string(),
            "bits": m.bits(),
            "padding_bits": m.padding_bits,
        });
        writeln!(w, "{line}")?;
    }
    for b in &down.blocks {
        let line = json!({
            "phase": "downlink",
            "subset": b.subset.to_string(),
            "index": b.index,
            "bits": b.bits(),
            "padding_bits": b.padding_bits,
            "coefficients": b.coefficients.iter().map(|c| c.0).collect::<Vec<_>>(),
        });
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Runs the full protocol. Fails with `Config` on invalid parameters,
/// `Decode` when some user cannot recover a needed value, and
/// `Verification` when a reduce output differs from the oracle.
pub fn run(cfg: &SystemConfig, opts: RunOptions<'_>) -> Result<RunOutcome, RunFailure> {
    let started = Instant::now();
    if cfg.users > MAX_USERS {
        return Err(RunFailure::config(Error::TooManyUsers(cfg.users)));
    }
    let valid = validate_config(cfg.clone()).map_err(RunFailure::config)?;
    let placement = place(&valid).map_err(RunFailure::config)?;
    let dataset = synthesize_dataset(cfg);
    let default_fns;
    let fns: &dyn ComputeFunctions = match opts.functions {
        Some(f) => f,
        None => {
            default_fns = default_compute_functions(cfg);
            &default_fns
        }
    };
    let map = run_map(&placement, &dataset, fns);
    let plan = build_plan(&placement, cfg.value_bits).map_err(RunFailure::config)?;
    let params = DownlinkParams::from(cfg);

    let (uplink, downlink) = match (cfg.baseline, cfg.placement) {
        (Baseline::Uncoded, _) => {
            let up = encode_uncoded_uplink(&plan, &map);
            let down = forward_uncoded(&up);
            (up, down)
        }
        (Baseline::Coded, PlacementMode::Centralized) => {
            let up = encode_centralized_uplink(&placement, &plan, &map).map_err(RunFailure::decode)?;
            let down = encode_downlink_centralized(&up, &params).map_err(RunFailure::decode)?;
            (up, down)
        }
        (Baseline::Coded, PlacementMode::Decentralized) => {
            let up = encode_decentralized_uplink(&plan, &map);
            let down = encode_downlink_decentralized(&up, &params).map_err(RunFailure::decode)?;
            (up, down)
        }
    };
    if let Some(w) = opts.trace {
        trace_messages(w, &uplink, &downlink).map_err(|e| RunFailure::config(Error::Parse(format!("trace: {e}"))))?;
    }

    let available = placement.available_files();
    let mut mismatched = Vec::new();
    if !available.is_empty() {
        for k in 0..cfg.users {
            let recovered = match cfg.baseline {
                Baseline::Uncoded => decode_uncoded(k, &downlink.blocks),
                Baseline::Coded => {
                    decode_user(k, &plan, &downlink.blocks, map.user(k), &params).map_err(RunFailure::decode)?
                }
            };
            let out = run_reduce(k, map.user(k), &recovered, &available, fns).map_err(RunFailure::decode)?;
            let want = oracle_output(&dataset, fns, k, &available).map_err(RunFailure::decode)?;
            if out != want {
                mismatched.push(k + 1);
            }
        }
    }
    if !mismatched.is_empty() {
        return Err(RunFailure {
            kind: FailureKind::Verification,
            error: None,
            message: format!("reduce output differs from the oracle at users {mismatched:?}"),
        });
    }

    let counters = RunCounters {
        uplink_bits: uplink.iter().map(|m| m.bits() as u64).sum(),
        downlink_bits: downlink.bits() as u64,
        padding_up: uplink.iter().map(|m| m.padding_bits as u64).sum(),
        padding_down: downlink.padding_bits() as u64,
        unstored_files: cfg.files - available.len(),
        attempts: downlink.attempts.iter().map(|&(_, a)| a).collect(),
    };
    let report = measure_loads(cfg, &counters).map_err(RunFailure::config)?;
    let histogram = replication_histogram(&placement, &all_users(&placement));
    Ok(RunOutcome {
        config: cfg.clone(),
        report,
        histogram,
        placement,
        verified_users: cfg.users,
        metadata: run_metadata(cfg, fns.identifier()),
        duration_ms: started.elapsed().as_millis(),
    })
}

/// Serializable summary of a run, sufficient to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config: SystemConfig,
    pub uplink_bits: u64,
    pub downlink_bits: u64,
    pub padding_bits_up: u64,
    pub padding_bits_down: u64,
    pub l_u: String,
    pub l_d: String,
    pub l_u_exact: String,
    pub l_d_exact: String,
    pub theory_l_u: String,
    pub theory_l_d: String,
    pub bound_l_u: String,
    pub bound_l_d: String,
    pub delta: String,
    pub delta_theory: String,
    pub retry_counts: Vec<u32>,
    pub verified: bool,
    pub duration_ms: u128,
    pub metadata: RunMetadata,
}

impl From<&RunOutcome> for RunRecord {
    fn from(o: &RunOutcome) -> Self {
        let r = &o.report;
        let f = |x| format_sig(to_f64(x));
        Self {
            config: o.config.clone(),
            uplink_bits: r.uplink_bits,
            downlink_bits: r.downlink_bits,
            padding_bits_up: r.padding_up,
            padding_bits_down: r.padding_down,
            l_u: f(&r.l_u),
            l_d: f(&r.l_d),
            l_u_exact: r.l_u.to_string(),
            l_d_exact: r.l_d.to_string(),
            theory_l_u: f(&r.theory_l_u),
            theory_l_d: f(&r.theory_l_d),
            bound_l_u: f(&r.bound_l_u),
            bound_l_d: f(&r.bound_l_d),
            delta: f(&r.delta),
            delta_theory: f(&r.delta_theory),
            retry_counts: r.attempts.clone(),
            verified: o.verified_users == o.config.users,
            duration_ms: o.duration_ms,
            metadata: o.metadata.clone(),
        }
    }
}

impl RunRecord {
    pub fn summary_line(&self) -> String {
        format!(
            "K={} N={} mu={} L_u={} L_d={} padding={} verified={}",
            self.config.users,
            self.config.files,
            format_mu(self.config.mu),
            self.l_u,
            self.l_d,
            self.padding_bits_up + self.padding_bits_down,
            self.verified
        )
    }
}
