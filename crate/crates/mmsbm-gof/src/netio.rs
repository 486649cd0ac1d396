//! Ingestion and emission of directed binary networks.
//!
//! Two file formats: an edge list ("i j" per line, whitespace separated,
//! 1-based ids) and a headerless dense CSV of 0/1 entries. Emission mirrors
//! ingestion bit-exactly. Node ids are 1-based in files and 0-based in the
//! API.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dyad::DyadIndex;
use crate::error::{Error, Result};

/// A D x D binary directed network. The diagonal is structurally zero and
/// excluded from every statistic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    d: usize,
    cells: Vec<u8>,
}

impl AdjacencyMatrix {
    /// All-zero network on `d` nodes.
    pub fn zeros(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Shape(format!("need at least 2 nodes, got {d}")));
        }
        Ok(AdjacencyMatrix {
            d,
            cells: vec![0; d * d],
        })
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    pub fn dyads(&self) -> DyadIndex {
        DyadIndex::new(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.d + j]
    }

    /// Set an off-diagonal cell.
    pub fn set(&mut self, i: usize, j: usize, value: u8) -> Result<()> {
        if i == j {
            return Err(Error::Value(format!("cell ({i},{i}) is on the diagonal")));
        }
        if value > 1 {
            return Err(Error::Value(format!("cell value must be 0 or 1, got {value}")));
        }
        self.cells[i * self.d + j] = value;
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// The network as a dyad-indexed count table (the walk's starting point).
    pub fn to_table(&self) -> Vec<u32> {
        let dy = self.dyads();
        dy.iter().map(|(i, j)| self.get(i, j) as u32).collect()
    }
}

/// Parse a 1-based edge list into a `d`-node network. Duplicate lines are
/// idempotent; self-loops and out-of-range ids are rejected.
pub fn parse_edge_list(text: &str, d: usize) -> Result<AdjacencyMatrix> {
    let mut y = AdjacencyMatrix::zeros(d)?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::MalformedInput {
                    line: lineno + 1,
                    msg: format!("expected two node ids, got {line:?}"),
                })
            }
        };
        let parse_id = |s: &str| -> Result<usize> {
            let id: usize = s.parse().map_err(|_| Error::MalformedInput {
                line: lineno + 1,
                msg: format!("invalid node id {s:?}"),
            })?;
            if id < 1 || id > d {
                return Err(Error::MalformedInput {
                    line: lineno + 1,
                    msg: format!("node id {id} out of range 1..={d}"),
                });
            }
            Ok(id)
        };
        let i = parse_id(a)?;
        let j = parse_id(b)?;
        if i == j {
            return Err(Error::SelfLoop {
                line: lineno + 1,
                node: i,
            });
        }
        y.set(i - 1, j - 1, 1)?;
    }
    Ok(y)
}

/// Emit the edge list sorted lexicographically, 1-based, one "i j" per line.
pub fn emit_edge_list(y: &AdjacencyMatrix) -> String {
    let mut out = String::new();
    for i in 0..y.node_count() {
        for j in 0..y.node_count() {
            if i != j && y.get(i, j) == 1 {
                out.push_str(&format!("{} {}\n", i + 1, j + 1));
            }
        }
    }
    out
}

/// Parse a headerless dense CSV of 0/1 entries with a zero diagonal.
pub fn parse_dense_csv(text: &str) -> Result<AdjacencyMatrix> {
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::trim).collect())
        .collect();
    let d = rows.len();
    if d < 2 {
        return Err(Error::Shape(format!("need at least 2 rows, got {d}")));
    }
    let mut y = AdjacencyMatrix::zeros(d)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Shape(format!(
                "row {} has {} entries, expected {d}",
                i + 1,
                row.len()
            )));
        }
        for (j, cell) in row.iter().enumerate() {
            let v: u8 = match *cell {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Value(format!(
                        "entry ({},{}) must be 0 or 1, got {other:?}",
                        i + 1,
                        j + 1
                    )))
                }
            };
            if i == j {
                if v != 0 {
                    return Err(Error::SelfLoop {
                        line: i + 1,
                        node: i + 1,
                    });
                }
            } else {
                y.set(i, j, v)?;
            }
        }
    }
    Ok(y)
}

/// Emit the dense CSV form: 0/1 entries, no header, zero diagonal.
pub fn emit_dense_csv(y: &AdjacencyMatrix) -> String {
    let d = y.node_count();
    let mut out = String::new();
    for i in 0..d {
        for j in 0..d {
            if j > 0 {
                out.push(',');
            }
            out.push(if y.get(i, j) == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct DataManifest {
    nodes: usize,
    edges: usize,
    sha256: String,
}

const SAMPSON_EDGES: &str = include_str!("../data/sampson_samplk3.txt");
const SAMPSON_MANIFEST: &str = include_str!("../data/sampson_manifest.json");

/// Load the bundled 18-node monastery liking network (third wave,
/// binarised), verifying the checksum manifest first.
pub fn load_sampson() -> Result<AdjacencyMatrix> {
    let manifest: DataManifest = serde_json::from_str(SAMPSON_MANIFEST)
        .map_err(|e| Error::DataIntegrity(format!("bad bundled manifest: {e}")))?;
    let digest = Sha256::digest(SAMPSON_EDGES.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    if hex != manifest.sha256 {
        return Err(Error::DataIntegrity(format!(
            "bundled network checksum mismatch: {hex} != {}",
            manifest.sha256
        )));
    }
    let y = parse_edge_list(SAMPSON_EDGES, manifest.nodes)
        .map_err(|e| Error::DataIntegrity(format!("bundled network unreadable: {e}")))?;
    if y.edge_count() != manifest.edges {
        return Err(Error::DataIntegrity(format!(
            "bundled network has {} edges, manifest says {}",
            y.edge_count(),
            manifest.edges
        )));
    }
    Ok(y)
}
