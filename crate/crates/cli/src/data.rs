//! Data directory layout: `nodes.csv`, `edges.csv` and `neighborhoods.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use netinfer_core::{Dataset, Network, Population};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliError, CliResult};

pub const NODES: &str = "nodes.csv";
pub const EDGES: &str = "edges.csv";
pub const NEIGHBORHOODS: &str = "neighborhoods.json";

/// SHA-256 digests of the three data files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataDigest {
    pub nodes: String,
    pub edges: String,
    pub neighborhoods: String,
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub pop: Population,
    pub data: Dataset,
    pub digest: DataDigest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Validation(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| invalid(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| invalid(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| invalid(e.to_string()))
}

/// Writes a CSV file atomically.
pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_atomic(path, &csv_bytes(&header, rows)?)
}

pub fn write_data_dir(dir: &Path, pop: &Population, data: &Dataset) -> CliResult<DataDigest> {
    let n = data.n_units();
    let d = data.covariates.ncols();
    let mut header = vec!["unit_id".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.push("y".into());
    let rows = (0..n).map(|i| {
        let mut r = vec![i.to_string()];
        r.extend((0..d).map(|k| data.covariates[(i, k)].to_string()));
        r.push(data.responses[i].to_string());
        r
    });
    let nodes = csv_bytes(&header, rows)?;
    let edges = csv_bytes(
        &["src".into(), "dst".into()],
        data.network.edge_list().into_iter().map(|(a, b)| vec![a.to_string(), b.to_string()]),
    )?;
    let map: BTreeMap<usize, Vec<usize>> = pop.neighborhoods().iter().cloned().enumerate().collect();
    let mut nb = serde_json::to_string_pretty(&map).map_err(|e| invalid(e.to_string()))?;
    nb.push('\n');
    write_atomic(&dir.join(NODES), &nodes)?;
    write_atomic(&dir.join(EDGES), &edges)?;
    write_atomic(&dir.join(NEIGHBORHOODS), nb.as_bytes())?;
    Ok(DataDigest { nodes: sha256_hex(&nodes), edges: sha256_hex(&edges), neighborhoods: sha256_hex(nb.as_bytes()) })
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn parse_nodes(bytes: &[u8]) -> CliResult<(DMatrix<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| invalid(format!("{NODES}: {e}")))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let d = cols.len().saturating_sub(2);
    let expected: Vec<String> =
        std::iter::once("unit_id".to_string()).chain((1..=d).map(|k| format!("x{k}"))).chain(["y".to_string()]).collect();
    if cols.len() < 2 || cols != expected {
        return Err(invalid(format!("{NODES} line 1: header must be unit_id, x1..xd, y; got {}", cols.join(","))));
    }
    let mut rows: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| invalid(format!("{NODES}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> CliResult<f64> {
            let s = rec.get(k).unwrap_or("").trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| invalid(format!("{NODES} line {line}: column {}: `{s}` is not a finite number", expected[k])))
        };
        let id = rec
            .get(0)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| invalid(format!("{NODES} line {line}: unit_id is not a non-negative integer")))?;
        let x = (1..=d).map(field).collect::<CliResult<Vec<f64>>>()?;
        rows.push((id, x, field(d + 1)?));
    }
    let n = rows.len();
    let mut seen = vec![false; n];
    for (k, row) in rows.iter().enumerate() {
        if row.0 >= n || std::mem::replace(&mut seen[row.0], true) {
            return Err(invalid(format!("{NODES} line {}: unit ids must be 0..{} with no repeats, got {}", k + 2, n, row.0)));
        }
    }
    rows.sort_by_key(|r| r.0);
    let x = DMatrix::from_fn(n, d, |i, k| rows[i].1[k]);
    let y = rows.iter().map(|r| r.2).collect();
    Ok((x, y))
}

fn parse_edges(bytes: &[u8], n: usize, directed: bool) -> CliResult<Network> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| invalid(format!("{EDGES}: {e}")))?.clone();
    if header.iter().collect::<Vec<_>>() != ["src", "dst"] {
        return Err(invalid(format!("{EDGES} line 1: header must be src,dst")));
    }
    let mut net = Network::empty(n, directed);
    for rec in r.records() {
        let rec = rec.map_err(|e| invalid(format!("{EDGES}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let unit = |k: usize| -> CliResult<usize> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .filter(|&v| v < n)
                .ok_or_else(|| invalid(format!("{EDGES} line {line}: endpoint is not a unit id below {n}")))
        };
        let (a, b) = (unit(0)?, unit(1)?);
        if a == b {
            return Err(invalid(format!("{EDGES} line {line}: self-loop on unit {a}")));
        }
        if !directed && a > b {
            return Err(invalid(format!("{EDGES} line {line}: undirected edges are stored once with src < dst")));
        }
        if net.has_edge(a, b) {
            return Err(invalid(format!("{EDGES} line {line}: duplicate edge ({a}, {b})")));
        }
        net.set(a, b, true);
    }
    Ok(net)
}

fn parse_neighborhoods(bytes: &[u8], n: usize) -> CliResult<Population> {
    let map: BTreeMap<usize, Vec<usize>> =
        serde_json::from_slice(bytes).map_err(|e| invalid(format!("{NEIGHBORHOODS}: {e}")))?;
    if map.len() != n || map.keys().last().is_some_and(|&k| k != n - 1) {
        return Err(invalid(format!("{NEIGHBORHOODS}: expected one entry for each unit id 0..{n}")));
    }
    for (i, list) in &map {
        if !list.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid(format!("{NEIGHBORHOODS}: list of unit {i} is not sorted without repeats")));
        }
        if let Some(k) = list.iter().find(|&&k| k >= n) {
            return Err(invalid(format!("{NEIGHBORHOODS}: unit {i} lists unknown unit {k}")));
        }
    }
    Ok(Population::new(map.into_values().collect())?)
}

/// Reads and validates a data directory. `directed` selects how edges are
/// read; the covariate count must equal `covariates` when given.
pub fn read_data_dir(dir: &Path, directed: bool, covariates: Option<usize>) -> CliResult<LoadedData> {
    let nodes = read_bytes(&dir.join(NODES))?;
    let edges = read_bytes(&dir.join(EDGES))?;
    let nb = read_bytes(&dir.join(NEIGHBORHOODS))?;
    let (x, y) = parse_nodes(&nodes)?;
    let n = y.len();
    if n < 3 {
        return Err(invalid(format!("{NODES}: need at least 3 units, got {n}")));
    }
    if let Some(d) = covariates {
        if x.ncols() != d {
            return Err(invalid(format!("{NODES}: the model needs {d} covariate columns, found {}", x.ncols())));
        }
    }
    let net = parse_edges(&edges, n, directed)?;
    let pop = parse_neighborhoods(&nb, n)?;
    let data = Dataset::new(x, y, net)?;
    let digest = DataDigest { nodes: sha256_hex(&nodes), edges: sha256_hex(&edges), neighborhoods: sha256_hex(&nb) };
    Ok(LoadedData { pop, data, digest })
}
