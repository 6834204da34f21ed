//! Topology construction and the physical-layer reception model.
//!
//! A broadcast from node u is decoded by node v when the received SNR clears
//! a capture threshold. With Rayleigh fading the received power is
//! exponential with mean P * d^-eta, which gives the closed form
//! `P_uv = exp(-z_lin * N0 * d^eta / P)` evaluated here.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("topology must contain at least one node")]
    EmptyTopology,
    #[error("cannot read positions file {path}: {source}")]
    PositionsIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed positions file {path} (line {line}): {reason}")]
    MalformedPositions {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("channel parameter {name} must be {requirement}, got {value}")]
    InvalidChannelParam {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("reception matrix must be square with a zero diagonal")]
    MalformedMatrix,
    #[error("reception probability at ({u},{v}) is {value}, outside [0,1]")]
    InvalidProbability { u: usize, v: usize, value: f64 },
}

/// A node location in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
}

impl NodePosition {
    pub fn distance(self, other: NodePosition) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Transmit power, noise floor, capture threshold and path-loss exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Transmit power in watts.
    pub tx_power_w: f64,
    /// Noise power in watts.
    pub noise_w: f64,
    /// Capture threshold z in dB; converted to a linear ratio internally.
    pub capture_threshold_db: f64,
    /// Path-loss exponent eta.
    pub path_loss_exponent: f64,
}

impl ChannelParams {
    pub fn new(
        tx_power_w: f64,
        noise_w: f64,
        capture_threshold_db: f64,
        path_loss_exponent: f64,
    ) -> Result<Self, RadioError> {
        if tx_power_w.is_nan() || tx_power_w <= 0.0 {
            return Err(RadioError::InvalidChannelParam {
                name: "tx_power_w",
                requirement: "positive",
                value: tx_power_w,
            });
        }
        if noise_w.is_nan() || noise_w <= 0.0 {
            return Err(RadioError::InvalidChannelParam {
                name: "noise_w",
                requirement: "positive",
                value: noise_w,
            });
        }
        if path_loss_exponent.is_nan() || path_loss_exponent < 1.0 {
            return Err(RadioError::InvalidChannelParam {
                name: "path_loss_exponent",
                requirement: "at least 1",
                value: path_loss_exponent,
            });
        }
        if !capture_threshold_db.is_finite() {
            return Err(RadioError::InvalidChannelParam {
                name: "capture_threshold_db",
                requirement: "finite",
                value: capture_threshold_db,
            });
        }
        Ok(ChannelParams {
            tx_power_w,
            noise_w,
            capture_threshold_db,
            path_loss_exponent,
        })
    }

    /// The capture threshold as a linear power ratio, 10^(z_dB / 10).
    pub fn threshold_linear(&self) -> f64 {
        10f64.powf(self.capture_threshold_db / 10.0)
    }
}

/// Converts transmit power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    /// `n` nodes on a line, neighbors `spacing` apart.
    Line { n: usize },
    /// A rows x cols lattice, row-major node indexing.
    Grid { rows: usize, cols: usize },
    /// Positions read from a CSV file with header `node_id,x,y`.
    File { path: PathBuf },
}

pub fn make_topology(spec: &TopologySpec, spacing_m: f64) -> Result<Vec<NodePosition>, RadioError> {
    match spec {
        TopologySpec::Line { n } => {
            if *n == 0 {
                return Err(RadioError::EmptyTopology);
            }
            if spacing_m.is_nan() || spacing_m <= 0.0 {
                return Err(RadioError::NonPositiveSpacing(spacing_m));
            }
            Ok((0..*n)
                .map(|i| NodePosition {
                    x: i as f64 * spacing_m,
                    y: 0.0,
                })
                .collect())
        }
        TopologySpec::Grid { rows, cols } => {
            if *rows == 0 || *cols == 0 {
                return Err(RadioError::EmptyTopology);
            }
            if spacing_m.is_nan() || spacing_m <= 0.0 {
                return Err(RadioError::NonPositiveSpacing(spacing_m));
            }
            let mut positions = Vec::with_capacity(rows * cols);
            for row in 0..*rows {
                for col in 0..*cols {
                    positions.push(NodePosition {
                        x: col as f64 * spacing_m,
                        y: row as f64 * spacing_m,
                    });
                }
            }
            Ok(positions)
        }
        TopologySpec::File { path } => load_positions(path),
    }
}

/// Parses a positions CSV: header `node_id,x,y`, coordinates in meters,
/// node ids dense from 0 (any row order).
pub fn load_positions(path: &Path) -> Result<Vec<NodePosition>, RadioError> {
    let text = fs::read_to_string(path).map_err(|source| RadioError::PositionsIo {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |line: usize, reason: String| RadioError::MalformedPositions {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file".into()))?;
    if header.trim() != "node_id,x,y" {
        return Err(malformed(1, format!("expected header `node_id,x,y`, got `{header}`")));
    }
    let mut entries: Vec<(usize, NodePosition)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(malformed(line_no, format!("expected 3 fields, got {}", fields.len())));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad node_id `{}`", fields[0])))?;
        let x: f64 = fields[1]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad x `{}`", fields[1])))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(line_no, format!("bad y `{}`", fields[2])))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(malformed(line_no, "coordinates must be finite".into()));
        }
        entries.push((id, NodePosition { x, y }));
    }
    if entries.is_empty() {
        return Err(RadioError::EmptyTopology);
    }
    entries.sort_by_key(|(id, _)| *id);
    for (expected, (id, _)) in entries.iter().enumerate() {
        if *id != expected {
            return Err(malformed(
                0,
                format!("node ids must be dense from 0; missing or duplicate id {expected}"),
            ));
        }
    }
    Ok(entries.into_iter().map(|(_, p)| p).collect())
}

/// Probability that a broadcast is decoded at the given distance:
/// `exp(-z_lin * N0 * d^eta / P)`. Distance zero returns 1 (limit case,
/// unused for self-links, which are excluded from the matrix).
pub fn reception_probability(params: &ChannelParams, distance_m: f64) -> f64 {
    debug_assert!(distance_m >= 0.0);
    if distance_m == 0.0 {
        return 1.0;
    }
    let exponent = params.threshold_linear() * params.noise_w * distance_m.powf(params.path_loss_exponent)
        / params.tx_power_w;
    (-exponent).exp()
}

/// N x N per-link success probabilities; `get(u, v)` is the probability that
/// a broadcast from u is decoded by v. The diagonal is fixed at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionMatrix {
    n: usize,
    probs: Vec<f64>,
}

impl ReceptionMatrix {
    pub fn from_probs(rows: Vec<Vec<f64>>) -> Result<Self, RadioError> {
        let n = rows.len();
        if n == 0 {
            return Err(RadioError::EmptyTopology);
        }
        let mut probs = Vec::with_capacity(n * n);
        for (u, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(RadioError::MalformedMatrix);
            }
            for (v, &p) in row.iter().enumerate() {
                if u == v && p != 0.0 {
                    return Err(RadioError::MalformedMatrix);
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(RadioError::InvalidProbability { u, v, value: p });
                }
                probs.push(p);
            }
        }
        Ok(ReceptionMatrix { n, probs })
    }

    /// Complete graph: every off-diagonal entry is `p`.
    pub fn uniform_complete(n: usize, p: f64) -> Result<Self, RadioError> {
        ReceptionMatrix::build(n, |u, v| if u == v { 0.0 } else { p })
    }

    /// Chain: probability `p` between adjacent indices, zero elsewhere.
    pub fn nearest_neighbor_chain(n: usize, p: f64) -> Result<Self, RadioError> {
        ReceptionMatrix::build(n, |u, v| if u.abs_diff(v) == 1 { p } else { 0.0 })
    }

    fn build(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, RadioError> {
        if n == 0 {
            return Err(RadioError::EmptyTopology);
        }
        let mut probs = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                let p = if u == v { 0.0 } else { f(u, v) };
                if !(0.0..=1.0).contains(&p) {
                    return Err(RadioError::InvalidProbability { u, v, value: p });
                }
                probs.push(p);
            }
        }
        Ok(ReceptionMatrix { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.probs[u * self.n + v]
    }

    /// Sum of P_uv over all ordered pairs u != v.
    pub fn sum_off_diagonal(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Outgoing reception row of a transmitter.
    pub(crate) fn row(&self, u: usize) -> &[f64] {
        &self.probs[u * self.n..(u + 1) * self.n]
    }
}

pub fn build_reception_matrix(
    positions: &[NodePosition],
    params: &ChannelParams,
) -> ReceptionMatrix {
    let n = positions.len();
    assert!(n > 0, "at least one position required");
    let mut probs = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                probs.push(0.0);
            } else {
                probs.push(reception_probability(
                    params,
                    positions[u].distance(positions[v]),
                ));
            }
        }
    }
    ReceptionMatrix { n, probs }
}

/// Connectivity regimes distinguished by the transmission-range structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityClass {
    FullyConnected,
    SparselyConnected,
    Intermediate,
    Disconnected,
}

impl fmt::Display for ConnectivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectivityClass::FullyConnected => "fully_connected",
            ConnectivityClass::SparselyConnected => "sparsely_connected",
            ConnectivityClass::Intermediate => "intermediate",
            ConnectivityClass::Disconnected => "disconnected",
        })
    }
}

/// Probabilities at or below this are treated as exact zeros when classifying
/// connectivity. Never applied to simulation draws.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-12;

/// A network is sparse when every node's transmission-range neighborhood
/// (including itself) is at most this fraction of the network.
pub const DEFAULT_SPARSE_RATIO: f64 = 0.2;

pub fn classify_connectivity(matrix: &ReceptionMatrix, zero_tolerance: f64) -> ConnectivityClass {
    classify_connectivity_with_ratio(matrix, zero_tolerance, DEFAULT_SPARSE_RATIO)
}

pub fn classify_connectivity_with_ratio(
    matrix: &ReceptionMatrix,
    zero_tolerance: f64,
    sparse_ratio: f64,
) -> ConnectivityClass {
    let n = matrix.n();
    if n == 1 {
        return ConnectivityClass::FullyConnected;
    }
    let reachable = |u: usize, v: usize| matrix.get(u, v) > zero_tolerance;

    let fully = (0..n).all(|u| (0..n).all(|v| u == v || reachable(u, v)));
    if fully {
        return ConnectivityClass::FullyConnected;
    }

    // breadth-first search over links usable in either direction
    let mut seen = vec![false; n];
    let mut queue = vec![0usize];
    seen[0] = true;
    while let Some(u) = queue.pop() {
        for (v, visited) in seen.iter_mut().enumerate() {
            if !*visited && (reachable(u, v) || reachable(v, u)) {
                *visited = true;
                queue.push(v);
            }
        }
    }
    if !seen.iter().all(|&s| s) {
        return ConnectivityClass::Disconnected;
    }

    // |V_u| counts u itself plus every node it can reach directly
    let max_neighborhood = (0..n)
        .map(|u| 1 + (0..n).filter(|&v| v != u && reachable(u, v)).count())
        .max()
        .unwrap_or(1);
    if max_neighborhood as f64 / n as f64 <= sparse_ratio {
        ConnectivityClass::SparselyConnected
    } else {
        ConnectivityClass::Intermediate
    }
}
