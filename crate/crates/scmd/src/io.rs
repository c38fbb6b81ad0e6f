//! Dataset, graph and report files.
//!
//! * Datasets are UTF-8 CSV with a header row of variable names and one
//!   numeric row per sample. Every cell must parse as a finite number.
//! * Graphs are edge lists: one `parent -> child` per line, a bare name for an
//!   isolated node, `#` starting a comment.
//! * Reports are JSON (any result) or CSV (pair terms or a pairwise matrix).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scmd_core::distance::{InterventionOrigin, PairwiseMatrix};
use scmd_core::{Dag, Dataset, DistanceKind, DistanceReport, EstimatorConfig, RidgeScaling};
use serde::Serialize;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        #[source]
        source: scmd_core::Error,
    },

    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn invalid(path: &Path) -> impl FnOnce(scmd_core::Error) -> IoError + '_ {
    move |source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a CSV dataset; the id is the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset(&text, &id).map_err(|(line, message)| parse_err(path, line, message))
}

/// Parses CSV text; errors carry the 1-based line number.
pub fn parse_dataset(text: &str, id: &str) -> Result<Dataset, (u64, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err((1, "missing header row".into())),
        Some(r) => r.map_err(|e| (1, e.to_string()))?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().all(|n| n.parse::<f64>().is_ok()) {
        return Err((1, "missing header row: first line is numeric".into()));
    }
    let mut seen = BTreeMap::new();
    for (k, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err((1, format!("column {} has an empty name", k + 1)));
        }
        if let Some(first) = seen.insert(name.as_str(), k) {
            return Err((1, format!("duplicate variable `{name}` in columns {} and {}", first + 1, k + 1)));
        }
    }
    let mut columns = vec![Vec::new(); names.len()];
    for record in records {
        let record = record.map_err(|e| (e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != names.len() {
            return Err((line, format!("expected {} fields, found {}", names.len(), record.len())));
        }
        for (k, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| (line, format!("column `{}`: cannot parse `{cell}` as a number", names[k])))?;
            if !v.is_finite() {
                return Err((line, format!("column `{}`: non-finite value `{cell}`", names[k])));
            }
            columns[k].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err((2, "no data rows".into()));
    }
    Dataset::new(id, names, columns).map_err(|e| (1, e.to_string()))
}

/// Writes a dataset as CSV with shortest round-trip number formatting.
pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, dataset_csv(data)).map_err(io_err(path))
}

pub fn dataset_csv(data: &Dataset) -> String {
    let cols: Vec<&[f64]> = data.columns().map(|(_, c)| c).collect();
    let mut out = data.names().join(",");
    out.push('\n');
    for s in 0..data.n_samples() {
        for (k, c) in cols.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{}", c[s]).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Reads an edge-list graph. With `expected` given, the graph must have
/// exactly those nodes.
pub fn load_graph(path: impl AsRef<Path>, expected: Option<&[String]>) -> Result<Dag, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let g = parse_graph(&text).map_err(|e| match e {
        GraphParseError::Line(line, message) => parse_err(path, line, message),
        GraphParseError::Invalid(source) => invalid(path)(source),
    })?;
    if let Some(expected) = expected {
        check_nodes(&g, expected).map_err(invalid(path))?;
    }
    Ok(g)
}

/// Edge list of the expert signalling network for the Sachs flow-cytometry
/// data (11 nodes, 17 edges).
pub const SACHS_EXPERT: &str = include_str!("../data/sachs_expert.txt");

/// The bundled expert signalling network.
pub fn sachs_expert_graph() -> Dag {
    parse_graph(SACHS_EXPERT).expect("bundled graph is valid")
}

#[derive(Debug)]
pub enum GraphParseError {
    Line(u64, String),
    Invalid(scmd_core::Error),
}

pub fn parse_graph(text: &str) -> Result<Dag, GraphParseError> {
    let mut nodes: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let add = |n: &str, nodes: &mut Vec<String>| {
        if !nodes.iter().any(|m| m == n) {
            nodes.push(n.to_string());
        }
    };
    for (k, raw) in text.lines().enumerate() {
        let line = (k + 1) as u64;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let valid_name = |s: &str| !s.is_empty() && !s.contains(char::is_whitespace) && !s.contains("->");
        match content.split_once("->") {
            Some((p, c)) => {
                let (p, c) = (p.trim(), c.trim());
                if !valid_name(p) || !valid_name(c) {
                    return Err(GraphParseError::Line(line, format!("malformed edge `{content}`")));
                }
                add(p, &mut nodes);
                add(c, &mut nodes);
                edges.push((p.to_string(), c.to_string()));
            }
            None if valid_name(content) => add(content, &mut nodes),
            None => {
                return Err(GraphParseError::Line(
                    line,
                    format!("expected `parent -> child` or a node name, found `{content}`"),
                ))
            }
        }
    }
    if nodes.is_empty() {
        return Err(GraphParseError::Line(1, "graph has no nodes".into()));
    }
    Dag::new(nodes, edges).map_err(GraphParseError::Invalid)
}

/// Checks that `g` has exactly the nodes in `expected`.
pub fn check_nodes(g: &Dag, expected: &[String]) -> Result<(), scmd_core::Error> {
    let missing: Vec<&str> = expected.iter().filter(|n| !g.contains(n)).map(String::as_str).collect();
    let extra: Vec<&str> = g
        .nodes()
        .iter()
        .filter(|n| !expected.contains(n))
        .map(String::as_str)
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        Err(scmd_core::Error::NodeSetMismatch(format!(
            "graph lacks {missing:?} and has unexpected {extra:?}"
        )))
    }
}

pub fn graph_text(g: &Dag) -> String {
    let mut out = String::new();
    for n in g.nodes() {
        if g.parents(n).is_ok_and(|p| p.is_empty()) && g.children(n).is_ok_and(|c| c.is_empty()) {
            out.push_str(n);
            out.push('\n');
        }
    }
    for (p, c) in g.edges() {
        writeln!(out, "{p} -> {c}").expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Anything the CLI can write out.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a> {
    Distance(&'a DistanceReport),
    Pairwise {
        matrix: &'a PairwiseMatrix,
        metric: &'static str,
        config: &'a EstimatorConfig,
    },
    Sid {
        guess: &'a str,
        truth: &'a str,
        value: usize,
    },
}

#[derive(Serialize)]
struct ConfigJson {
    bandwidth_sq: f64,
    ridge_lambda: f64,
    ridge_scaling: &'static str,
    jitter: f64,
    clamp_tol: f64,
}

impl From<&EstimatorConfig> for ConfigJson {
    fn from(c: &EstimatorConfig) -> Self {
        ConfigJson {
            bandwidth_sq: c.kernel.bandwidth_sq(),
            ridge_lambda: c.ridge_lambda,
            ridge_scaling: match c.ridge_scaling {
                RidgeScaling::Unscaled => "unscaled",
                RidgeScaling::SampleSize => "sample-size",
            },
            jitter: c.jitter,
            clamp_tol: c.clamp_tol,
        }
    }
}

#[derive(Serialize)]
struct InterventionJson<'a> {
    origin: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    first: &'a BTreeMap<String, f64>,
    second: &'a BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct PairTermJson<'a> {
    intervened: &'a str,
    target: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct DistanceJson<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<&'a [f64]>,
    value: f64,
    datasets: [&'a str; 2],
    config: ConfigJson,
    interventions: Vec<InterventionJson<'a>>,
    pair_terms: Vec<PairTermJson<'a>>,
}

#[derive(Serialize)]
struct PairwiseJson<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    metric: &'static str,
    config: ConfigJson,
    ids: &'a [String],
    matrix: Vec<&'a [f64]>,
}

#[derive(Serialize)]
struct SidJson<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    guess: &'a str,
    truth: &'a str,
    value: usize,
}

fn origin_name(o: InterventionOrigin) -> (&'static str, Option<f64>) {
    match o {
        InterventionOrigin::User => ("user", None),
        InterventionOrigin::PerVariableMean => ("per-variable-mean", None),
        InterventionOrigin::Quantile(q) => ("quantile", Some(q)),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Serializes an output. JSON numbers use shortest round-trip formatting.
pub fn render(output: Output<'_>, format: Format) -> Result<String, IoError> {
    let mut text = match (output, format) {
        (Output::Distance(r), Format::Json) => {
            let (target, levels) = match &r.kind {
                DistanceKind::PScmd { target } => (Some(target.as_str()), None),
                DistanceKind::EScmd { levels } => (None, Some(levels.as_slice())),
                _ => (None, None),
            };
            let doc = DistanceJson {
                tool: TOOL_NAME,
                version: TOOL_VERSION,
                kind: r.kind.name(),
                target,
                levels,
                value: r.value,
                datasets: [&r.dataset_ids.0, &r.dataset_ids.1],
                config: (&r.config).into(),
                interventions: r
                    .interventions
                    .iter()
                    .map(|(a, b)| {
                        let (origin, level) = origin_name(a.origin);
                        InterventionJson {
                            origin,
                            level,
                            first: &a.values,
                            second: &b.values,
                        }
                    })
                    .collect(),
                pair_terms: r
                    .pair_terms
                    .iter()
                    .map(|((i, j), v)| PairTermJson {
                        intervened: i,
                        target: j,
                        value: *v,
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc)?
        }
        (Output::Distance(r), Format::Csv) => {
            let mut out = String::from("intervened,target,value\n");
            for ((i, j), v) in &r.pair_terms {
                writeln!(out, "{},{},{v}", csv_field(i), csv_field(j)).expect("writing to a String cannot fail");
            }
            writeln!(out, "total,,{}", r.value).expect("writing to a String cannot fail");
            out
        }
        (Output::Pairwise { matrix, metric, config }, Format::Json) => serde_json::to_string_pretty(&PairwiseJson {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            kind: "pairwise",
            metric,
            config: config.into(),
            ids: &matrix.ids,
            matrix: (0..matrix.len()).map(|a| matrix.row(a)).collect(),
        })?,
        (Output::Pairwise { matrix, .. }, Format::Csv) => {
            let mut out = String::from("environment");
            for id in &matrix.ids {
                out.push(',');
                out.push_str(&csv_field(id));
            }
            out.push('\n');
            for (a, id) in matrix.ids.iter().enumerate() {
                out.push_str(&csv_field(id));
                for v in matrix.row(a) {
                    write!(out, ",{v}").expect("writing to a String cannot fail");
                }
                out.push('\n');
            }
            out
        }
        (Output::Sid { guess, truth, value }, Format::Json) => serde_json::to_string_pretty(&SidJson {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            kind: "sid",
            guess,
            truth,
            value,
        })?,
        (Output::Sid { value, .. }, Format::Csv) => format!("sid\n{value}\n"),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    Ok(text)
}

pub fn write_report(output: Output<'_>, format: Format, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, render(output, format)?).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_csv() {
        let d = parse_dataset("X,Y\n1,2\n3,4.5\n-1e-3,0\n", "t").unwrap();
        assert_eq!(d.n_samples(), 3);
        assert_eq!(d.column("Y").unwrap(), [2.0, 4.5, 0.0]);
        assert_eq!(d.id(), "t");
    }

    #[test]
    fn csv_errors_name_the_line() {
        let cases = [
            ("", 1, "missing header"),
            ("1,2\n3,4\n", 1, "numeric"),
            ("X,X\n1,2\n", 1, "duplicate"),
            ("X,Y\n1,2\n3\n", 3, "expected 2 fields"),
            ("X,Y\n1,2\n3,abc\n", 3, "column `Y`"),
            ("X,Y\n1,NaN\n", 2, "non-finite"),
            ("X,Y\n1,inf\n", 2, "non-finite"),
            ("X,Y\n", 2, "no data"),
            ("X,\n1,2\n", 1, "empty name"),
        ];
        for (text, line, needle) in cases {
            let (l, msg) = parse_dataset(text, "t").unwrap_err();
            assert_eq!(l, line, "{text:?}: {msg}");
            assert!(msg.contains(needle), "{text:?}: {msg}");
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let vals = vec![0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308, 5e-324];
        let d = Dataset::from_columns("r", [("A", vals.clone()), ("B", vals.iter().map(|v| -v).collect())]).unwrap();
        let back = parse_dataset(&dataset_csv(&d), "r").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn parses_graphs() {
        let g = parse_graph("# comment\nX -> Y\n\nZ   # isolated\n  Y->W\n").unwrap();
        assert_eq!(g.nodes(), ["X", "Y", "Z", "W"]);
        assert_eq!(g.n_edges(), 2);
        assert!(matches!(
            parse_graph("X -> Y\nY -> X\n"),
            Err(GraphParseError::Invalid(scmd_core::Error::Cycle(_)))
        ));
        assert!(matches!(parse_graph("X -> \n"), Err(GraphParseError::Line(1, _))));
        assert!(matches!(parse_graph("X Y\n"), Err(GraphParseError::Line(1, _))));
        assert!(matches!(parse_graph("A -> B -> C\n"), Err(GraphParseError::Line(1, _))));
        assert!(matches!(parse_graph("# nothing\n"), Err(GraphParseError::Line(..))));
    }

    #[test]
    fn graph_text_round_trips() {
        let g = parse_graph("A\nB -> C\n").unwrap();
        let back = parse_graph(&graph_text(&g)).unwrap();
        assert!(back.same_node_set(&g));
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn node_set_check() {
        let g = parse_graph("X -> Y\n").unwrap();
        assert!(check_nodes(&g, &["Y".into(), "X".into()]).is_ok());
        assert!(check_nodes(&g, &["X".into()]).is_err());
        assert!(check_nodes(&g, &["X".into(), "Y".into(), "Z".into()]).is_err());
    }

    #[test]
    fn csv_fields_are_quoted() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("q\"x"), "\"q\"\"x\"");
    }
}
