//! Experiment specification: JSON config file, flag overrides and defaults.

use std::env;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ncsim_core::engine::Protocol;
use ncsim_core::radio::{dbm_to_watts, TopologySpec};
use serde::Deserialize;

use crate::{CommonArgs, ProtocolArg, TopologyArg};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: u64 = 200;
pub const DEFAULT_SPACING_M: f64 = 30.0;
pub const DEFAULT_POWER_W: f64 = 20e-6;
pub const DEFAULT_NOISE_W: f64 = 4e-14;
pub const DEFAULT_Z_DB: f64 = 45.0;
pub const DEFAULT_ETA: f64 = 2.0;
pub const DEFAULT_Q: u8 = 8;
pub const DEFAULT_R: usize = 4;

/// A float or a list of floats, e.g. `"power_w": 2e-5` or `[1e-3, 1e-4]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    #[serde(default)]
    pub topology: TopologySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sim: SimSection,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// "line", "grid" or "file"
    pub kind: Option<String>,
    pub d: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub grid_cols: Option<usize>,
    pub positions: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub power_w: Option<OneOrMany>,
    pub power_dbm: Option<OneOrMany>,
    pub noise_w: Option<f64>,
    pub z_db: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub q: Option<u8>,
    pub r: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub protocols: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Line,
    Grid,
    File,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Line => "line",
            TopologyKind::Grid => "grid",
            TopologyKind::File => "file",
        }
    }
}

/// Everything a command needs, after merging flags, config file, environment
/// and defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub kind: TopologyKind,
    pub spacing_m: f64,
    pub sizes: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub grid_cols: Option<usize>,
    pub positions: Option<PathBuf>,
    /// Transmit powers in watts, in sweep order.
    pub powers_w: Vec<f64>,
    pub noise_w: f64,
    pub z_db: f64,
    pub eta: f64,
    pub q: u8,
    pub r: usize,
    pub trials: u64,
    pub seed: u64,
    pub protocols: Vec<Protocol>,
    pub out: Option<PathBuf>,
}

pub fn resolve(common: &CommonArgs, protocol_default: ProtocolArg) -> Result<Settings> {
    let file: FileSpec = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("cannot parse config {}", path.display()))?
        }
        None => FileSpec::default(),
    };

    let kind = match common.topology {
        Some(TopologyArg::Line) => TopologyKind::Line,
        Some(TopologyArg::Grid) => TopologyKind::Grid,
        Some(TopologyArg::File) => TopologyKind::File,
        None => match file.topology.kind.as_deref() {
            None | Some("line") => TopologyKind::Line,
            Some("grid") => TopologyKind::Grid,
            Some("file") => TopologyKind::File,
            Some(other) => bail!("unknown topology kind `{other}` in config"),
        },
    };

    // power: flags beat config; watts and dBm are mutually exclusive per layer
    let powers_w = if let Some(watts) = &common.power_w {
        watts.clone()
    } else if let Some(dbm) = &common.power_dbm {
        dbm.iter().copied().map(dbm_to_watts).collect()
    } else {
        match (&file.channel.power_w, &file.channel.power_dbm) {
            (Some(_), Some(_)) => bail!("config sets both power_w and power_dbm"),
            (Some(w), None) => w.clone().into_vec(),
            (None, Some(dbm)) => dbm.clone().into_vec().into_iter().map(dbm_to_watts).collect(),
            (None, None) => vec![DEFAULT_POWER_W],
        }
    };
    if powers_w.is_empty() {
        bail!("power list is empty");
    }

    let protocols = match common.protocol {
        Some(ProtocolArg::Nc) => vec![Protocol::Nc],
        Some(ProtocolArg::Baseline) => vec![Protocol::RandomSelection],
        Some(ProtocolArg::Both) => vec![Protocol::Nc, Protocol::RandomSelection],
        None => match &file.sim.protocols {
            Some(names) => {
                let mut protocols = Vec::new();
                for name in names {
                    let protocol: Protocol =
                        name.parse().map_err(|e: String| anyhow::anyhow!(e))?;
                    if !protocols.contains(&protocol) {
                        protocols.push(protocol);
                    }
                }
                if protocols.is_empty() {
                    bail!("config protocols list is empty");
                }
                protocols
            }
            None => match protocol_default {
                ProtocolArg::Nc => vec![Protocol::Nc],
                ProtocolArg::Baseline => vec![Protocol::RandomSelection],
                ProtocolArg::Both => vec![Protocol::Nc, Protocol::RandomSelection],
            },
        },
    };

    let seed = match common.seed.or(file.sim.seed) {
        Some(seed) => seed,
        None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
    };

    Ok(Settings {
        kind,
        spacing_m: common.d.or(file.topology.d).unwrap_or(DEFAULT_SPACING_M),
        sizes: file.topology.sizes,
        n: file.topology.n,
        grid_cols: common.grid_cols.or(file.topology.grid_cols),
        positions: common.positions.clone().or(file.topology.positions),
        powers_w,
        noise_w: common.noise.or(file.channel.noise_w).unwrap_or(DEFAULT_NOISE_W),
        z_db: common.z_db.or(file.channel.z_db).unwrap_or(DEFAULT_Z_DB),
        eta: common.eta.or(file.channel.eta).unwrap_or(DEFAULT_ETA),
        q: common.q.or(file.sim.q).unwrap_or(DEFAULT_Q),
        r: common.r.or(file.sim.r).unwrap_or(DEFAULT_R),
        trials: common.trials.or(file.sim.trials).unwrap_or(DEFAULT_TRIALS),
        seed,
        protocols,
        out: common.out.clone().or(file.out),
    })
}

fn seed_from_env() -> Result<Option<u64>> {
    match env::var("NCSIM_SEED") {
        Ok(text) => {
            let seed = text
                .parse()
                .with_context(|| format!("NCSIM_SEED=`{text}` is not a u64"))?;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

impl Settings {
    /// Maps a node count onto a topology spec. Grid sizes must be perfect
    /// squares unless grid_cols divides them.
    pub fn topology_for(&self, n: usize) -> Result<TopologySpec> {
        match self.kind {
            TopologyKind::Line => Ok(TopologySpec::Line { n }),
            TopologyKind::Grid => {
                if let Some(cols) = self.grid_cols {
                    if cols == 0 || !n.is_multiple_of(cols) {
                        bail!("size {n} is not divisible by grid_cols {cols}");
                    }
                    Ok(TopologySpec::Grid { rows: n / cols, cols })
                } else {
                    let side = (n as f64).sqrt().round() as usize;
                    if side * side != n {
                        bail!("grid size {n} is not a perfect square; set --grid-cols");
                    }
                    Ok(TopologySpec::Grid { rows: side, cols: side })
                }
            }
            TopologyKind::File => {
                let path = self
                    .positions
                    .as_deref()
                    .ok_or_else(|| anyhow::anyhow!("file topology requires --positions"))?;
                Ok(TopologySpec::File { path: path.to_path_buf() })
            }
        }
    }

    pub fn single_power(&self) -> Result<f64> {
        if self.powers_w.len() != 1 {
            bail!(
                "this command uses a single transmit power, got {} values",
                self.powers_w.len()
            );
        }
        Ok(self.powers_w[0])
    }
}
