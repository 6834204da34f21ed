//! Command implementations: build reception environments, farm experiments,
//! and emit the CSV schema.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use ncsim_core::bounds::{expected_stopping_bound, p_same_subspace_bound, BoundsError};
use ncsim_core::engine::{run_trials, summarize, ExperimentSummary, Protocol, SimConfig};
use ncsim_core::radio::{
    build_reception_matrix, classify_connectivity, make_topology, ChannelParams, NodePosition,
    ReceptionMatrix, DEFAULT_ZERO_TOLERANCE,
};

use crate::spec::{resolve, Settings, TopologyKind};
use crate::{BoundArgs, Command, CompareArgs, ProtocolArg, SimulateArgs, SweepNArgs, SweepPowerArgs};

pub const CSV_HEADER: &str = "topology,N,d,power_w,noise_w,z_db,eta,q,protocol,trials,\
    mean_slots,std_slots,ci95_lo,ci95_hi,bound_slots,bound_degenerate,connectivity_class,seed";

struct Row {
    topology: &'static str,
    n: usize,
    d: f64,
    power_w: f64,
    protocol: &'static str,
    trials: u64,
    mean: Option<f64>,
    std_dev: Option<f64>,
    ci95_lo: Option<f64>,
    ci95_hi: Option<f64>,
    bound_slots: Option<f64>,
    bound_degenerate: bool,
    connectivity: String,
    ratio: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    fn render(&self, settings: &Settings, with_ratio: bool) -> String {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.topology,
            self.n,
            self.d,
            self.power_w,
            settings.noise_w,
            settings.z_db,
            settings.eta,
            settings.q,
            self.protocol,
            self.trials,
            opt(self.mean),
            opt(self.std_dev),
            opt(self.ci95_lo),
            opt(self.ci95_hi),
            opt(self.bound_slots),
            self.bound_degenerate,
            self.connectivity,
            settings.seed,
        );
        if with_ratio {
            write!(line, ",{}", opt(self.ratio)).expect("write to string");
        }
        line
    }
}

/// One simulated cell of a sweep: environment, bound and per-protocol rows.
struct Cell {
    n: usize,
    d_column: f64,
    power_w: f64,
    matrix: ReceptionMatrix,
    connectivity: String,
    bound_slots: Option<f64>,
    bound_degenerate: bool,
}

fn build_cell(settings: &Settings, n_hint: Option<usize>, power_w: f64) -> Result<Cell> {
    let positions = positions_for(settings, n_hint)?;
    let n = positions.len();
    let params = ChannelParams::new(power_w, settings.noise_w, settings.z_db, settings.eta)
        .map_err(|e| anyhow!(e))?;
    let matrix = build_reception_matrix(&positions, &params);
    let connectivity = classify_connectivity(&matrix, DEFAULT_ZERO_TOLERANCE).to_string();
    let (bound_slots, bound_degenerate) = match expected_stopping_bound(&matrix) {
        Ok(bound) => (bound.value.is_finite().then_some(bound.value), bound.degenerate),
        // undefined (N = 1) or vacuous environments leave the cell empty
        Err(_) => (None, false),
    };
    Ok(Cell {
        n,
        d_column: if settings.kind == TopologyKind::File {
            0.0
        } else {
            settings.spacing_m
        },
        power_w,
        matrix,
        connectivity,
        bound_slots,
        bound_degenerate,
    })
}

fn positions_for(settings: &Settings, n_hint: Option<usize>) -> Result<Vec<NodePosition>> {
    match settings.kind {
        TopologyKind::File => {
            let spec = settings.topology_for(0)?;
            Ok(make_topology(&spec, settings.spacing_m).map_err(|e| anyhow!(e))?)
        }
        _ => {
            let n = n_hint.ok_or_else(|| anyhow!("a network size is required (--n or --sizes)"))?;
            let spec = settings.topology_for(n)?;
            Ok(make_topology(&spec, settings.spacing_m).map_err(|e| anyhow!(e))?)
        }
    }
}

fn sim_config(settings: &Settings, protocol: Protocol, record_trace: bool) -> SimConfig {
    SimConfig {
        q: settings.q,
        r: settings.r,
        protocol,
        trials: settings.trials,
        seed: settings.seed,
        max_slots: None,
        record_trace,
    }
}

/// Runs one protocol on a cell; pushes a row and records any failure.
fn simulate_cell(
    settings: &Settings,
    cell: &Cell,
    protocol: Protocol,
    failures: &mut Vec<String>,
) -> (Row, ExperimentSummary) {
    let config = sim_config(settings, protocol, false);
    let summary = match run_trials(&cell.matrix, &config) {
        Ok(results) => summarize(&results),
        Err(err) => {
            failures.push(format!(
                "N={} power_w={} protocol={}: {err}",
                cell.n, cell.power_w, protocol
            ));
            ExperimentSummary {
                trials: 0,
                incomplete_count: 0,
                mean: f64::NAN,
                std_dev: f64::NAN,
                ci95_lo: f64::NAN,
                ci95_hi: f64::NAN,
                degenerate: true,
            }
        }
    };
    if summary.degenerate && summary.trials > 0 {
        failures.push(format!(
            "N={} power_w={} protocol={}: no trial completed within the slot cap",
            cell.n, cell.power_w, protocol
        ));
    }
    let row = summary_row(cell, protocol, &summary);
    (row, summary)
}

fn summary_row(cell: &Cell, protocol: Protocol, summary: &ExperimentSummary) -> Row {
    let stats = !summary.degenerate;
    Row {
        topology: "",
        n: cell.n,
        d: cell.d_column,
        power_w: cell.power_w,
        protocol: protocol.as_str(),
        trials: summary.trials,
        mean: stats.then_some(summary.mean),
        std_dev: stats.then_some(summary.std_dev),
        ci95_lo: stats.then_some(summary.ci95_lo),
        ci95_hi: stats.then_some(summary.ci95_hi),
        bound_slots: cell.bound_slots,
        bound_degenerate: cell.bound_degenerate,
        connectivity: cell.connectivity.clone(),
        ratio: None,
    }
}

fn write_output(settings: &Settings, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match &settings.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write output {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn execute(command: Command) -> Result<Vec<String>> {
    match command {
        Command::SweepN(args) => sweep_n(args),
        Command::SweepPower(args) => sweep_power(args),
        Command::Compare(args) => compare(args),
        Command::Bound(args) => bound(args),
        Command::Simulate(args) => simulate(args),
    }
}

fn topology_name(settings: &Settings) -> &'static str {
    settings.kind.as_str()
}

fn sweep_n(args: SweepNArgs) -> Result<Vec<String>> {
    let settings = resolve(&args.common, ProtocolArg::Nc)?;
    let sizes = args
        .sizes
        .or_else(|| settings.sizes.clone())
        .ok_or_else(|| anyhow!("sweep-n requires --sizes"))?;
    if sizes.is_empty() {
        bail!("--sizes is empty");
    }
    if settings.kind == TopologyKind::File {
        bail!("sweep-n requires a line or grid topology");
    }
    let power = settings.single_power()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &sizes {
        let cell = build_cell(&settings, Some(n), power)?;
        for &protocol in &settings.protocols {
            let (mut row, _) = simulate_cell(&settings, &cell, protocol, &mut failures);
            row.topology = topology_name(&settings);
            rows.push(row.render(&settings, false));
        }
    }
    write_output(&settings, CSV_HEADER, &rows)?;
    Ok(failures)
}

fn sweep_power(args: SweepPowerArgs) -> Result<Vec<String>> {
    let settings = resolve(&args.common, ProtocolArg::Nc)?;
    let n_hint = args.n.or(settings.n);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &power in &settings.powers_w {
        let cell = build_cell(&settings, n_hint, power)?;
        for &protocol in &settings.protocols {
            let (mut row, _) = simulate_cell(&settings, &cell, protocol, &mut failures);
            row.topology = topology_name(&settings);
            rows.push(row.render(&settings, false));
        }
    }
    write_output(&settings, CSV_HEADER, &rows)?;
    Ok(failures)
}

fn compare(args: CompareArgs) -> Result<Vec<String>> {
    let settings = resolve(&args.common, ProtocolArg::Both)?;
    if settings.protocols.len() != 2 {
        bail!("compare needs both protocols enabled");
    }
    let sizes = args
        .sizes
        .or_else(|| settings.sizes.clone())
        .ok_or_else(|| anyhow!("compare requires --sizes"))?;
    if sizes.is_empty() {
        bail!("--sizes is empty");
    }
    let power = settings.single_power()?;
    let header = format!("{CSV_HEADER},ratio");
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &sizes {
        let cell = build_cell(&settings, Some(n), power)?;
        let (nc_row, nc) = simulate_cell(&settings, &cell, Protocol::Nc, &mut failures);
        let (base_row, base) =
            simulate_cell(&settings, &cell, Protocol::RandomSelection, &mut failures);
        let ratio = (!nc.degenerate && !base.degenerate).then(|| base.mean / nc.mean);
        for mut row in [nc_row, base_row] {
            row.topology = topology_name(&settings);
            row.ratio = ratio;
            rows.push(row.render(&settings, true));
        }
    }
    write_output(&settings, &header, &rows)?;
    Ok(failures)
}

fn bound(args: BoundArgs) -> Result<Vec<String>> {
    let settings = resolve(&args.common, ProtocolArg::Nc)?;
    let n_hint = args.n.or(settings.n);
    let sizes: Vec<Option<usize>> = match settings.sizes.clone() {
        Some(sizes) if !sizes.is_empty() => sizes.into_iter().map(Some).collect(),
        _ => vec![n_hint],
    };
    let power = settings.single_power()?;
    let mut rows = Vec::new();
    for &n in &sizes {
        let cell = build_cell(&settings, n, power)?;
        // the bound subcommand treats an unusable environment as a hard error
        let bound = expected_stopping_bound(&cell.matrix).map_err(|err| match err {
            BoundsError::ZeroReceptionSum => {
                anyhow!("total reception probability is zero; the bound is undefined")
            }
            other => anyhow!(other),
        })?;
        if args.verbose {
            for (i, _) in bound.per_i_terms.iter().enumerate() {
                let stage = p_same_subspace_bound(cell.n, i + 1).expect("stage in range");
                eprintln!(
                    "N={} p[{}] = {}/{} ≈ {}{}",
                    cell.n,
                    i + 1,
                    stage.exact.numer(),
                    stage.exact.denom(),
                    stage.value(),
                    if stage.degenerate { " (degenerate)" } else { "" }
                );
            }
        }
        rows.push(
            Row {
                topology: topology_name(&settings),
                n: cell.n,
                d: cell.d_column,
                power_w: power,
                protocol: Protocol::Nc.as_str(),
                trials: 0,
                mean: None,
                std_dev: None,
                ci95_lo: None,
                ci95_hi: None,
                bound_slots: bound.value.is_finite().then_some(bound.value),
                bound_degenerate: bound.degenerate,
                connectivity: cell.connectivity.clone(),
                ratio: None,
            }
            .render(&settings, false),
        );
    }
    write_output(&settings, CSV_HEADER, &rows)?;
    Ok(Vec::new())
}

fn simulate(args: SimulateArgs) -> Result<Vec<String>> {
    let settings = resolve(&args.common, ProtocolArg::Nc)?;
    if args.trace && settings.out.is_none() {
        bail!("--trace requires --out for the sidecar file");
    }
    let n_hint = args.n.or(settings.n);
    let power = settings.single_power()?;
    let cell = build_cell(&settings, n_hint, power)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut trace_csv = String::from("N,protocol,trial,slot,total_dim_increase\n");
    for &protocol in &settings.protocols {
        let config = sim_config(&settings, protocol, args.trace);
        let results = run_trials(&cell.matrix, &config)
            .map_err(|e| anyhow!("N={} protocol={}: {e}", cell.n, protocol))?;
        if args.trace {
            for (trial, result) in results.iter().enumerate() {
                let trace = result
                    .dimension_trace
                    .as_ref()
                    .expect("tracing was requested");
                for (slot, d) in trace.iter().enumerate() {
                    writeln!(
                        trace_csv,
                        "{},{},{},{},{}",
                        cell.n, protocol, trial, slot, d
                    )
                    .expect("write to string");
                }
            }
        }
        let summary = summarize(&results);
        if summary.degenerate {
            failures.push(format!(
                "N={} power_w={} protocol={}: no trial completed within the slot cap",
                cell.n, cell.power_w, protocol
            ));
        }
        let mut row = summary_row(&cell, protocol, &summary);
        row.topology = topology_name(&settings);
        rows.push(row.render(&settings, false));
    }
    write_output(&settings, CSV_HEADER, &rows)?;
    if args.trace {
        let out = settings.out.as_ref().expect("checked above");
        let sidecar = out.with_extension("trace.csv");
        fs::write(&sidecar, trace_csv)
            .with_context(|| format!("cannot write trace sidecar {}", sidecar.display()))?;
    }
    Ok(failures)
}
