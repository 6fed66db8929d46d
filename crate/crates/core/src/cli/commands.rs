use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::sweep::{sweep_rows, SweepPlan};
use super::{resolve_config, BoundsArgs, CliError, FigArgs, RunArgs, SweepArgs, EXIT_OK};
use crate::analysis::{
    decentralized_bound, exact, format_sig, lower_bound_downlink, lower_bound_envelope, lower_bound_uplink,
    theory_centralized, theory_decentralized, to_f64, Exact,
};
use crate::config::{parse_mu, Baseline, PlacementMode};
use crate::figures::{
    centralized_vs_decentralized, coded_vs_uncoded, concentration, CONCENTRATION_FILES, CONCENTRATION_MU,
    CONCENTRATION_USERS, LOAD_FIGURE_USERS,
};
use crate::placement::{all_users, replication_histogram, Placement, ReplicationHistogram};
use crate::sim::{self, RunOptions, RunRecord};

pub fn run(args: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = resolve_config(&args.system)?;
    let mut trace_file = match &args.trace {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let opts = RunOptions {
        functions: None,
        trace: trace_file.as_mut().map(|w| w as &mut dyn Write),
    };
    let outcome = sim::run(&cfg, opts).map_err(|e| CliError {
        code: e.exit_code(),
        message: e.message.clone(),
    })?;
    if let Some(mut w) = trace_file {
        w.flush()?;
    }
    let record = RunRecord::from(&outcome);
    write!(out, "{}", outcome.report.text())?;
    writeln!(out, "verified: all {} users match the oracle", outcome.verified_users)?;
    if let Some(p) = &args.out {
        let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::config(e))?;
        std::fs::write(p, json + "\n")?;
    }
    Ok(EXIT_OK)
}

fn list<T, F>(text: &str, f: F) -> Result<Vec<T>, CliError>
where
    F: Fn(&str) -> Result<T, CliError>,
{
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let plan = SweepPlan {
        users: list(&args.users, |s| {
            s.parse().map_err(|_| CliError::config(format!("bad user count `{s}`")))
        })?,
        mu: (args.mu.trim() != "grid").then(|| args.mu.split(',').map(|s| s.trim().to_string()).collect()),
        modes: list(&args.mode, |s| s.parse::<PlacementMode>().map_err(CliError::from))?,
        baselines: list(&args.baseline, |s| s.parse::<Baseline>().map_err(CliError::from))?,
        downlink: args.downlink.parse()?,
        files: args.files,
        value_bits: args.value_bits,
        seed: args.seed,
        analytic_only: args.analytic,
    };
    let rows = sweep_rows(&plan)?;
    let sink: Box<dyn Write + '_> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(&mut *out),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn line(out: &mut dyn Write, name: &str, x: &Exact) -> std::io::Result<()> {
    writeln!(out, "{name:<24} {:<16} {x}", format_sig(to_f64(x)))
}

fn parse_histogram(text: &str) -> Result<ReplicationHistogram, CliError> {
    let counts = list(text, |s| {
        s.parse::<usize>()
            .map_err(|_| CliError::config(format!("bad histogram entry `{s}`")))
    })?;
    if counts.len() < 2 {
        return Err(CliError::config("histogram needs entries for j = 0..K"));
    }
    Ok(ReplicationHistogram::from_counts(counts))
}

pub fn bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut printed = false;
    if let (Some(k), Some(m)) = (args.users, &args.mu) {
        let mu = exact(parse_mu(m, k)?);
        writeln!(out, "K={k} mu={mu}")?;
        if let Ok((u, d)) = theory_centralized(k, &mu) {
            line(out, "centralized L_u", &u)?;
            line(out, "centralized L_d", &d)?;
            let (bu, bd) = lower_bound_envelope(k, &mu)?;
            line(out, "envelope bound L_u", &bu)?;
            line(out, "envelope bound L_d", &bd)?;
        }
        let t = theory_decentralized(k, &mu)?;
        line(out, "decentralized L_u", &t.uplink)?;
        line(out, "decentralized L_d", &t.downlink)?;
        line(out, "decentralized delta", &t.delta)?;
        let (bu, bd) = decentralized_bound(k, &mu, &t.delta);
        line(out, "decentralized bound L_u", &bu)?;
        line(out, "decentralized bound L_d", &bd)?;
        printed = true;
    }
    let hist = match (&args.histogram, &args.placement) {
        (Some(h), _) => Some(parse_histogram(h)?),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            let placement = Placement::load(&text)?;
            Some(replication_histogram(&placement, &all_users(&placement)))
        }
        (None, None) => None,
    };
    if let Some(h) = hist {
        writeln!(out, "histogram {:?} over N={}", h.counts, h.files)?;
        line(out, "histogram bound L_u", &lower_bound_uplink(&h)?)?;
        line(out, "histogram bound L_d", &lower_bound_downlink(&h)?)?;
        printed = true;
    }
    if !printed {
        return Err(CliError::config("bounds needs --users and --mu, or --histogram, or --placement"));
    }
    Ok(EXIT_OK)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::config(format!("csv: {e}")))?;
    w.write_record(header).map_err(|e| CliError::config(format!("csv: {e}")))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn f(x: f64) -> String {
    format_sig(x)
}

pub fn figdata(args: &FigArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let which: Vec<&str> = match args.which.as_str() {
        "all" => vec!["fig2", "fig5", "fig6"],
        w @ ("fig2" | "fig5" | "fig6") => vec![w],
        other => return Err(CliError::config(format!("unknown figure `{other}`"))),
    };
    std::fs::create_dir_all(&args.out)?;
    for w in which {
        let path = args.out.join(format!("{w}.csv"));
        match w {
            "fig2" => {
                let rows: Vec<Vec<String>> = coded_vs_uncoded(LOAD_FIGURE_USERS)?
                    .iter()
                    .map(|r| {
                        vec![
                            f(crate::config::mu_to_f64(r.mu)),
                            f(r.coded_uplink),
                            f(r.coded_downlink),
                            f(r.uncoded),
                        ]
                    })
                    .collect();
                write_csv(&path, &["mu", "coded_uplink", "coded_downlink", "uncoded"], &rows)?;
            }
            "fig5" => {
                let rows: Vec<Vec<String>> = centralized_vs_decentralized(LOAD_FIGURE_USERS)?
                    .iter()
                    .map(|r| {
                        vec![
                            f(crate::config::mu_to_f64(r.mu)),
                            f(r.centralized_uplink),
                            f(r.centralized_downlink),
                            f(r.decentralized_uplink),
                            f(r.decentralized_downlink),
                        ]
                    })
                    .collect();
                write_csv(
                    &path,
                    &["mu", "centralized_uplink", "centralized_downlink", "decentralized_uplink", "decentralized_downlink"],
                    &rows,
                )?;
            }
            _ => {
                let series = concentration(&CONCENTRATION_USERS, CONCENTRATION_FILES, CONCENTRATION_MU, args.seed)?;
                let mut rows = Vec::new();
                for c in &series {
                    for j in 0..=c.users {
                        rows.push(vec![
                            c.users.to_string(),
                            j.to_string(),
                            f(c.empirical[j]),
                            f(c.binomial[j]),
                            f(c.total_variation),
                        ]);
                    }
                }
                write_csv(&path, &["K", "j", "fraction", "binomial", "tv_distance"], &rows)?;
            }
        }
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(EXIT_OK)
}
