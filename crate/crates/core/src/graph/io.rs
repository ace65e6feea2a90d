//! Dataset loaders and the canonical event file.
//!
//! Canonical format, one record per line:
//!
//! ```text
//! #eagle-events v1
//! H <d_x> <d_e> <num_nodes> <bipartite|unipartite>
//! N <node> <x_1> ... <x_dx>            (only nodes with non-zero features)
//! E <src> <dst> <timestamp> <label> <e_1> ... <e_de>
//! ```
//!
//! Events appear in seq order. Reals are written in shortest round-trip form,
//! so load/write is lossless and writing a loaded canonical file reproduces it
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate_synthetic, Event, NodeId, RolePool, SyntheticConfig, TemporalGraph};

const CANONICAL_MAGIC: &str = "#eagle-events v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `user_id,item_id,timestamp,state_label,f1,...` with a header line.
    JodieCsv,
    /// Whitespace separated `SRC DST UNIXTS`, `#` comments.
    SnapEdges,
    /// TOML file holding a [`SyntheticConfig`].
    SyntheticConfig,
    /// The format written by [`write_canonical`].
    Canonical,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jodie-csv" | "jodie" => Ok(DatasetFormat::JodieCsv),
            "snap-edges" | "snap" => Ok(DatasetFormat::SnapEdges),
            "synthetic-config" | "synthetic" => Ok(DatasetFormat::SyntheticConfig),
            "canonical" => Ok(DatasetFormat::Canonical),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

impl DatasetFormat {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetFormat::JodieCsv => "jodie-csv",
            DatasetFormat::SnapEdges => "snap-edges",
            DatasetFormat::SyntheticConfig => "synthetic-config",
            DatasetFormat::Canonical => "canonical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    /// Node feature width for formats without node features (zero-filled).
    pub d_x: usize,
    /// Edge feature width for snap-edges (zero-filled).
    pub snap_d_e: usize,
    /// Overrides the format's default role pool.
    pub role_pool: Option<RolePool>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            d_x: 0,
            snap_d_e: 1,
            role_pool: None,
        }
    }
}

/// Loads a dataset. Rows are stable-sorted by timestamp.
pub fn load_events(
    path: &Path,
    format: DatasetFormat,
    opts: &LoadOptions,
) -> Result<TemporalGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut g = match format {
        DatasetFormat::JodieCsv => parse_jodie(&text, opts)?,
        DatasetFormat::SnapEdges => parse_snap(&text, opts)?,
        DatasetFormat::SyntheticConfig => {
            let cfg: SyntheticConfig = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            generate_synthetic(&cfg)?
        }
        DatasetFormat::Canonical => parse_canonical(&text)?,
    };
    if let Some(pool) = opts.role_pool {
        g.set_role_pool(pool);
    }
    Ok(g)
}

struct Row {
    src: u32,
    dst: u32,
    ts: f64,
    label: f64,
    features: Vec<f64>,
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what}")));
    }
    Ok(v)
}

fn parse_id(field: &str, line: usize, what: &str) -> Result<u32> {
    let f = field.trim();
    // some exports write ids as floats ("12.0")
    if let Ok(v) = f.parse::<u32>() {
        return Ok(v);
    }
    match f.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(x as u32),
        _ => Err(Error::parse(line, format!("bad {what} `{f}`"))),
    }
}

fn build(rows: Vec<Row>, d_x: usize, d_e: usize, pool: RolePool) -> Result<TemporalGraph> {
    let mut rows = rows;
    rows.sort_by(|a, b| a.ts.total_cmp(&b.ts));
    let mut g = TemporalGraph::new(d_x, d_e).with_role_pool(pool);
    for r in rows {
        g.ingest(Event {
            source: NodeId(r.src),
            destination: NodeId(r.dst),
            timestamp: r.ts,
            edge_features: r.features,
            label: r.label,
        })?;
    }
    Ok(g)
}

fn parse_jodie(text: &str, opts: &LoadOptions) -> Result<TemporalGraph> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some(_) => {}
        None => return Err(Error::Empty("jodie-csv file has no header".into())),
    }
    let mut rows = Vec::new();
    let mut d_e: Option<usize> = None;
    let mut max_user = 0u32;
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::parse(
                lineno,
                format!("expected at least 4 columns, got {}", fields.len()),
            ));
        }
        let src = parse_id(fields[0], lineno, "user_id")?;
        let dst = parse_id(fields[1], lineno, "item_id")?;
        let ts = parse_f64(fields[2], lineno, "timestamp")?;
        let label = parse_f64(fields[3], lineno, "state_label")?;
        let features = fields[4..]
            .iter()
            .map(|f| parse_f64(f, lineno, "feature"))
            .collect::<Result<Vec<_>>>()?;
        match d_e {
            None => d_e = Some(features.len()),
            Some(n) if n != features.len() => {
                return Err(Error::parse(
                    lineno,
                    format!("expected {n} feature columns, got {}", features.len()),
                ))
            }
            _ => {}
        }
        if ts < 0.0 {
            return Err(Error::parse(lineno, "negative timestamp"));
        }
        max_user = max_user.max(src);
        rows.push(Row {
            src,
            dst,
            ts,
            label,
            features,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("jodie-csv file has no events".into()));
    }
    // users and items have separate id spaces; items follow the users
    let offset = max_user + 1;
    for r in &mut rows {
        r.dst = r
            .dst
            .checked_add(offset)
            .ok_or_else(|| Error::Config("item id overflow".into()))?;
    }
    build(rows, opts.d_x, d_e.unwrap_or(0), RolePool::Bipartite)
}

fn parse_snap(text: &str, opts: &LoadOptions) -> Result<TemporalGraph> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected `SRC DST UNIXTS`, got {} fields", fields.len()),
            ));
        }
        let ts = parse_f64(fields[2], lineno, "timestamp")?;
        if ts < 0.0 {
            return Err(Error::parse(lineno, "negative timestamp"));
        }
        rows.push(Row {
            src: parse_id(fields[0], lineno, "source")?,
            dst: parse_id(fields[1], lineno, "destination")?,
            ts,
            label: 0.0,
            features: vec![0.0; opts.snap_d_e],
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("snap-edges file has no events".into()));
    }
    build(rows, opts.d_x, opts.snap_d_e, RolePool::Unipartite)
}

fn parse_canonical(text: &str) -> Result<TemporalGraph> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == CANONICAL_MAGIC => {}
        _ => {
            return Err(Error::parse(
                1,
                format!("missing `{CANONICAL_MAGIC}` header"),
            ))
        }
    }
    let mut g: Option<TemporalGraph> = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let mut fields = line.split_ascii_whitespace();
        let Some(tag) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        match tag {
            "H" => {
                if rest.len() != 4 {
                    return Err(Error::parse(lineno, "header needs d_x d_e num_nodes pool"));
                }
                let d_x = parse_id(rest[0], lineno, "d_x")? as usize;
                let d_e = parse_id(rest[1], lineno, "d_e")? as usize;
                let n = parse_id(rest[2], lineno, "num_nodes")? as usize;
                let pool =
                    RolePool::parse(rest[3]).map_err(|e| Error::parse(lineno, e.to_string()))?;
                let mut graph = TemporalGraph::new(d_x, d_e).with_role_pool(pool);
                if n > 0 {
                    graph.ensure_node(NodeId(n as u32 - 1));
                }
                g = Some(graph);
            }
            "N" => {
                let graph = g
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "N before H"))?;
                if rest.len() != graph.d_x() + 1 {
                    return Err(Error::parse(lineno, "node row width does not match d_x"));
                }
                let v = NodeId(parse_id(rest[0], lineno, "node")?);
                let x = rest[1..]
                    .iter()
                    .map(|f| parse_f64(f, lineno, "node feature"))
                    .collect::<Result<Vec<_>>>()?;
                graph.set_node_features(v, &x)?;
            }
            "E" => {
                let graph = g
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "E before H"))?;
                if rest.len() != graph.d_e() + 4 {
                    return Err(Error::parse(lineno, "event row width does not match d_e"));
                }
                let ev = Event {
                    source: NodeId(parse_id(rest[0], lineno, "source")?),
                    destination: NodeId(parse_id(rest[1], lineno, "destination")?),
                    timestamp: parse_f64(rest[2], lineno, "timestamp")?,
                    label: parse_f64(rest[3], lineno, "label")?,
                    edge_features: rest[4..]
                        .iter()
                        .map(|f| parse_f64(f, lineno, "edge feature"))
                        .collect::<Result<Vec<_>>>()?,
                };
                graph
                    .ingest(ev)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
            other => return Err(Error::parse(lineno, format!("unknown record `{other}`"))),
        }
    }
    g.ok_or_else(|| Error::Empty("canonical file has no header record".into()))
}

/// Writes `g` in canonical form.
pub fn write_canonical(g: &TemporalGraph, out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = String::new();
    writeln!(buf, "{CANONICAL_MAGIC}").unwrap();
    writeln!(
        buf,
        "H {} {} {} {}",
        g.d_x(),
        g.d_e(),
        g.num_nodes(),
        g.role_pool().name()
    )
    .unwrap();
    for v in 0..g.num_nodes() as u32 {
        let x = g.node_features(NodeId(v)).to_vec();
        if x.iter().any(|&f| f != 0.0) {
            write!(buf, "N {v}").unwrap();
            for f in x {
                write!(buf, " {f}").unwrap();
            }
            buf.push('\n');
        }
    }
    out.write_all(buf.as_bytes())?;
    buf.clear();
    for e in g.events() {
        write!(
            buf,
            "E {} {} {} {}",
            e.source, e.destination, e.timestamp, e.label
        )
        .unwrap();
        for f in e.edge_features {
            write!(buf, " {f}").unwrap();
        }
        buf.push('\n');
        if buf.len() > 1 << 16 {
            out.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())
}
