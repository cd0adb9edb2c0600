use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use ststore::dmt::{emit_fig1, to_f64, Rational};
use ststore::outage::{estimate_slope, run_outage, CellEstimate, OutageSpec};
use ststore::protocol::{repair_sweep, session_sweep, RepairCell, RepairParams, Scheme, SessionSweepSpec};
use ststore::storage::StorageConfig;

use crate::config::{Common, DmtConfig, OutageConfig, RepairConfig, SimulateConfig};
use crate::output::{num, svg_line_chart, write_file, write_summary, write_table, Provenance, Series, Table};
use crate::CliError;

pub const DMT_COLUMNS: &[&str] = &[
    "r",
    "d_optimal",
    "d_proposed",
    "d_tdma",
    "r_exact",
    "d_optimal_exact",
    "d_proposed_exact",
    "d_tdma_exact",
];

pub const OUTAGE_COLUMNS: &[&str] = &["scheme", "K", "r", "offset", "snr_db", "trials", "outages", "p_hat", "ci_lo", "ci_hi"];

pub const SIMULATE_COLUMNS: &[&str] = &[
    "snr_db",
    "users",
    "m",
    "decoder",
    "trials",
    "frame_errors",
    "fer",
    "symbol_errors",
    "ser",
    "visited_nodes_mean",
    "fallbacks",
];

pub const REPAIR_COLUMNS: &[&str] = &[
    "snr_db",
    "trials",
    "session_err_rate",
    "share_fail_rate",
    "repair_fail_rate",
    "scheme",
    "sessions",
    "session_errors",
    "pair_sessions",
    "pair_session_errors",
    "shares",
    "share_failures",
    "repair_failures",
    "visited_nodes_mean",
];

/// Files written by a command and its JSON summary.
#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn cmd_dmt(common: &Common, cfg: &DmtConfig) -> Result<Report, CliError> {
    let rows = emit_fig1(cfg.k, cfg.grid)?;
    let prov = Provenance::new("dmt", common, cfg);
    let mut table = Table::new(DMT_COLUMNS);
    for r in &rows {
        let vals = [r.r, r.d_optimal, r.d_proposed, r.d_tdma];
        let mut cells: Vec<String> = vals.iter().map(|&v| num(to_f64(v))).collect();
        cells.extend(vals.iter().map(|v| v.to_string()));
        table.push(cells);
    }
    let table_path = write_table(&common.out, "dmt", common.format, &table, &prov)?;
    let series = |label, color, f: fn(&ststore::dmt::Fig1Row) -> Rational| Series {
        label,
        color,
        points: rows.iter().map(|r| (to_f64(r.r), to_f64(f(r)))).collect(),
    };
    let svg = svg_line_chart(
        &format!("DMT, K = {}, nt = 1, nr = 2", cfg.k),
        "r",
        "d(r)",
        &[
            series("optimal MAC", "#1f77b4", |r| r.d_optimal),
            series("pair scheme", "#d62728", |r| r.d_proposed),
            series("TDMA", "#2ca02c", |r| r.d_tdma),
        ],
    );
    let svg_path = common.out.join("dmt.svg");
    write_file(&svg_path, &svg)?;
    Ok(Report {
        files: vec![table_path, svg_path],
        summary: json!({ "rows": rows.len() }),
    })
}

pub fn outage_spec(cfg: &OutageConfig, seed: u64) -> OutageSpec {
    OutageSpec {
        scheme: cfg.scheme,
        k: cfg.k,
        r: cfg.r.0,
        rate_offset_bits: cfg.offset,
        snr_grid_db: cfg.snr_db.0.clone(),
        trials: cfg.trials,
        seed,
    }
}

pub fn cmd_outage(common: &Common, cfg: &OutageConfig) -> Result<Report, CliError> {
    let spec = outage_spec(cfg, common.seed);
    let start = Instant::now();
    let est = run_outage(&spec)?;
    let prov = Provenance::new("outage", common, cfg);
    let mut table = Table::new(OUTAGE_COLUMNS);
    for c in &est.cells {
        table.push(vec![
            cfg.scheme.name().into(),
            cfg.k.to_string(),
            cfg.r.to_string(),
            num(cfg.offset),
            num(c.snr_db),
            c.trials.to_string(),
            c.outages.to_string(),
            num(c.p_hat),
            num(c.ci_lo),
            num(c.ci_hi),
        ]);
    }
    let table_path = write_table(&common.out, "outage", common.format, &table, &prov)?;
    let db = |i: &usize| cfg.snr_db.0[*i];
    let slope = est.slope.as_ref().map(|s| {
        json!({
            "d_hat": s.d_hat,
            "stderr": s.stderr,
            "used_snr_db": s.used.iter().map(db).collect::<Vec<_>>(),
            "excluded_snr_db": s.excluded.iter().map(db).collect::<Vec<_>>(),
        })
    });
    let summary = json!({ "slope": slope });
    let summary_path = write_summary(&common.out, "outage", &prov, summary.clone())?;
    eprintln!(
        "outage: {} trials x {} SNR points in {:.2} s",
        cfg.trials,
        cfg.snr_db.0.len(),
        start.elapsed().as_secs_f64()
    );
    if est.slope.is_none() {
        return Err(CliError::Statistical(format!(
            "fewer than 2 SNR points had outage events; files written to {}",
            common.out.display()
        )));
    }
    Ok(Report {
        files: vec![table_path, summary_path],
        summary,
    })
}

pub fn cmd_simulate(common: &Common, cfg: &SimulateConfig) -> Result<Report, CliError> {
    let spec = SessionSweepSpec {
        users: cfg.users,
        m: cfg.m,
        snr_grid_db: cfg.snr_db.0.clone(),
        trials: cfg.trials,
        seed: common.seed,
        decoder: cfg.decoder,
        channel: cfg.channel,
    };
    let start = Instant::now();
    let cells = session_sweep(&spec)?;
    let prov = Provenance::new("simulate", common, cfg);
    let decoder = serde_json::to_value(cfg.decoder).expect("enum serializes");
    let decoder = decoder.as_str().unwrap_or_default();
    let mut table = Table::new(SIMULATE_COLUMNS);
    let mut rows = Vec::new();
    for (c, &db) in cells.iter().zip(&cfg.snr_db.0) {
        table.push(vec![
            num(db),
            cfg.users.to_string(),
            cfg.m.to_string(),
            decoder.into(),
            c.trials.to_string(),
            c.frame_errors.to_string(),
            num(ratio(c.frame_errors, c.trials)),
            c.symbol_errors.to_string(),
            num(ratio(c.symbol_errors, c.symbols)),
            num(ratio(c.visited_nodes, c.trials)),
            c.fallbacks.to_string(),
        ]);
        rows.push(json!({ "snr_db": db, "frame_errors": c.frame_errors, "symbol_errors": c.symbol_errors }));
    }
    let table_path = write_table(&common.out, "simulate", common.format, &table, &prov)?;
    let total_visited: u64 = cells.iter().map(|c| c.visited_nodes).sum();
    let total_trials: u64 = cells.iter().map(|c| c.trials).sum();
    let summary = json!({ "cells": rows, "visited_nodes_mean": ratio(total_visited, total_trials) });
    let summary_path = write_summary(&common.out, "simulate", &prov, summary.clone())?;
    eprintln!(
        "simulate: {} trials x {} SNR points in {:.2} s, visited-node mean {:.1}",
        cfg.trials,
        cells.len(),
        start.elapsed().as_secs_f64(),
        ratio(total_visited, total_trials)
    );
    Ok(Report {
        files: vec![table_path, summary_path],
        summary,
    })
}

pub fn repair_params(cfg: &RepairConfig, seed: u64) -> ststore::Result<RepairParams> {
    Ok(RepairParams {
        storage: StorageConfig::new(cfg.n, cfg.k, cfg.d)?,
        m: cfg.m,
        file_bytes: cfg.file_bytes,
        decoder: cfg.decoder,
        channel: cfg.channel,
        seed,
    })
}

/// Log-log slope of the pair-session error rate over the points in `[lo, hi]` dB.
pub fn session_slope(cells: &[RepairCell], grid: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .zip(grid)
        .filter(|(_, &db)| (lo..=hi).contains(&db))
        .map(|(c, &db)| (10f64.powf(db / 10.0), ratio(c.pair_session_errors, c.pair_sessions)))
        .collect();
    estimate_slope(&pts).ok().map(|f| f.d_hat)
}

pub fn cmd_repair(common: &Common, cfg: &RepairConfig) -> Result<Report, CliError> {
    let params = repair_params(cfg, common.seed)?;
    let start = Instant::now();
    let prov = Provenance::new("repair", common, cfg);
    let mut table = Table::new(REPAIR_COLUMNS);
    let mut per_scheme = serde_json::Map::new();
    for scheme in cfg.scheme.schemes() {
        let cells = repair_sweep(&params, scheme, &cfg.snr_db.0, cfg.trials)?;
        let mut monotone = true;
        let est: Vec<CellEstimate> = cells
            .iter()
            .zip(&cfg.snr_db.0)
            .map(|(c, &db)| CellEstimate::new(db, c.share_failures, c.shares))
            .collect();
        for w in est.windows(2) {
            monotone &= w[1].p_hat <= w[0].p_hat || w[1].overlaps(&w[0]);
        }
        for (c, &db) in cells.iter().zip(&cfg.snr_db.0) {
            table.push(vec![
                num(db),
                c.trials.to_string(),
                num(ratio(c.session_errors, c.sessions)),
                num(ratio(c.share_failures, c.shares)),
                num(ratio(c.repair_failures, c.trials)),
                scheme.name().into(),
                c.sessions.to_string(),
                c.session_errors.to_string(),
                c.pair_sessions.to_string(),
                c.pair_session_errors.to_string(),
                c.shares.to_string(),
                c.share_failures.to_string(),
                c.repair_failures.to_string(),
                num(ratio(c.visited_nodes, c.sessions)),
            ]);
        }
        let slope = (scheme == Scheme::Pair)
            .then(|| session_slope(&cells, &cfg.snr_db.0, 20.0, 30.0))
            .flatten();
        per_scheme.insert(
            scheme.name().into(),
            json!({
                "share_failures_non_increasing": monotone,
                "pair_session_slope_20_30_db": slope,
                "repair_failures": cells.iter().map(|c| c.repair_failures).collect::<Vec<_>>(),
            }),
        );
    }
    let table_path = write_table(&common.out, "repair", common.format, &table, &prov)?;
    let summary = Value::Object(per_scheme);
    let summary_path = write_summary(&common.out, "repair", &prov, summary.clone())?;
    eprintln!(
        "repair: {} trials x {} SNR points in {:.2} s",
        cfg.trials,
        cfg.snr_db.0.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(Report {
        files: vec![table_path, summary_path],
        summary,
    })
}
