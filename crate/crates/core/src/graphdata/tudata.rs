//! TUDataset flat-file ingestion and export.
//!
//! Layout, all 1-indexed, under `dir/`:
//!   `{name}_A.txt`               one edge per line, "i, j", both directions present
//!   `{name}_graph_indicator.txt` line k = graph id of node k
//!   `{name}_graph_labels.txt`    line g = raw label of graph g
//!   `{name}_node_labels.txt`     optional, line k = integer label of node k
//!   `{name}_node_attributes.txt` optional, line k = comma-separated reals
//!
//! Node features come from attributes if present, else one-hot node
//! labels, else a single constant 1.0. Raw graph labels are remapped to
//! dense 0..K-1 in ascending raw-label order.

use super::{DataError, Dataset, Graph};
use crate::numkit::Matrix;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

struct NumberedLines {
    file: String,
    lines: Vec<(usize, String)>,
}

fn read_lines(dir: &Path, name: &str, suffix: &str, required: bool) -> Result<Option<NumberedLines>, DataError> {
    let file = format!("{name}_{suffix}.txt");
    let path = dir.join(&file);
    if !path.is_file() {
        if required {
            return Err(DataError::MissingFile(path.display().to_string()));
        }
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    Ok(Some(NumberedLines { file, lines }))
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_int(file: &str, line: usize, token: &str) -> Result<i64, DataError> {
    token
        .trim()
        .parse::<i64>()
        .map_err(|_| parse_err(file, line, format!("expected integer, got {token:?}")))
}

/// Loads `dir/{name}_*.txt` into a dataset.
pub fn load_tudataset(dir: &Path, name: &str) -> Result<Dataset, DataError> {
    let indicator = read_lines(dir, name, "graph_indicator", true)?.unwrap();
    let labels_file = read_lines(dir, name, "graph_labels", true)?.unwrap();
    let edges_file = read_lines(dir, name, "A", true)?.unwrap();
    let node_attributes = read_lines(dir, name, "node_attributes", false)?;
    let node_labels = read_lines(dir, name, "node_labels", false)?;

    if labels_file.lines.is_empty() {
        return Err(parse_err(&labels_file.file, 1, "graph labels file is empty"));
    }
    if indicator.lines.is_empty() {
        return Err(parse_err(&indicator.file, 1, "graph indicator file is empty"));
    }

    // node -> graph assignment; graphs keyed by ascending indicator value.
    let num_nodes = indicator.lines.len();
    let mut node_graph = Vec::with_capacity(num_nodes);
    for (line, text) in &indicator.lines {
        node_graph.push(parse_int(&indicator.file, *line, text)?);
    }
    let mut graph_keys: Vec<i64> = node_graph.clone();
    graph_keys.sort_unstable();
    graph_keys.dedup();
    let graph_index: BTreeMap<i64, usize> =
        graph_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let num_graphs = graph_keys.len();

    if labels_file.lines.len() != num_graphs {
        let (line, _) = labels_file.lines[labels_file.lines.len() - 1];
        return Err(parse_err(
            &labels_file.file,
            line,
            format!(
                "{} graph labels for {} graphs in the indicator",
                labels_file.lines.len(),
                num_graphs
            ),
        ));
    }

    // Local node numbering per graph, in file order.
    let mut local_index = Vec::with_capacity(num_nodes);
    let mut graph_sizes = vec![0usize; num_graphs];
    for key in &node_graph {
        let g = graph_index[key];
        local_index.push(graph_sizes[g]);
        graph_sizes[g] += 1;
    }

    // Raw labels remapped to dense indices in ascending raw-label order.
    let mut raw_labels = Vec::with_capacity(num_graphs);
    for (line, text) in &labels_file.lines {
        raw_labels.push(parse_int(&labels_file.file, *line, text)?);
    }
    let mut distinct = raw_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let label_map: BTreeMap<i64, usize> =
        distinct.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| label_map[l]).collect();

    // Adjacency, tracking the first line of each directed edge so the
    // symmetry check can point at the offender.
    let mut adjacency: Vec<Matrix> = graph_sizes.iter().map(|&n| Matrix::zeros(n, n)).collect();
    let mut edge_lines: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (line, text) in &edges_file.lines {
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 2 {
            return Err(parse_err(&edges_file.file, *line, format!("expected \"i, j\", got {text:?}")));
        }
        let i = parse_int(&edges_file.file, *line, parts[0])?;
        let j = parse_int(&edges_file.file, *line, parts[1])?;
        for &v in [i, j].iter() {
            if v < 1 || v > num_nodes as i64 {
                return Err(parse_err(
                    &edges_file.file,
                    *line,
                    format!("node id {v} outside 1..={num_nodes}"),
                ));
            }
        }
        let (ni, nj) = ((i - 1) as usize, (j - 1) as usize);
        if ni == nj {
            return Err(parse_err(&edges_file.file, *line, format!("self-loop at node {i}")));
        }
        let (gi, gj) = (graph_index[&node_graph[ni]], graph_index[&node_graph[nj]]);
        if gi != gj {
            return Err(parse_err(
                &edges_file.file,
                *line,
                format!("edge {i}, {j} crosses graphs {} and {}", node_graph[ni], node_graph[nj]),
            ));
        }
        adjacency[gi].set(local_index[ni], local_index[nj], 1.0);
        edge_lines.entry((ni, nj)).or_insert(*line);
    }
    for (&(ni, nj), &line) in &edge_lines {
        if !edge_lines.contains_key(&(nj, ni)) {
            return Err(parse_err(
                &edges_file.file,
                line,
                format!("edge {}, {} has no reverse direction", ni + 1, nj + 1),
            ));
        }
    }

    // Feature hierarchy: attributes > one-hot node labels > constant 1.0.
    let features = if let Some(attrs) = node_attributes {
        if attrs.lines.len() != num_nodes {
            let line = attrs.lines.last().map_or(1, |(l, _)| *l);
            return Err(parse_err(
                &attrs.file,
                line,
                format!("{} attribute rows for {} nodes", attrs.lines.len(), num_nodes),
            ));
        }
        let mut rows = Vec::with_capacity(num_nodes);
        let mut dim = None;
        for (line, text) in &attrs.lines {
            let row: Result<Vec<f64>, DataError> = text
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(&attrs.file, *line, format!("expected real, got {t:?}")))
                })
                .collect();
            let row = row?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(parse_err(
                        &attrs.file,
                        *line,
                        format!("attribute dimension {} does not match {}", row.len(), d),
                    ))
                }
                _ => {}
            }
            rows.push(row);
        }
        rows
    } else if let Some(nl) = node_labels {
        if nl.lines.len() != num_nodes {
            let line = nl.lines.last().map_or(1, |(l, _)| *l);
            return Err(parse_err(
                &nl.file,
                line,
                format!("{} node labels for {} nodes", nl.lines.len(), num_nodes),
            ));
        }
        let mut values = Vec::with_capacity(num_nodes);
        for (line, text) in &nl.lines {
            values.push(parse_int(&nl.file, *line, text)?);
        }
        let mut kinds = values.clone();
        kinds.sort_unstable();
        kinds.dedup();
        let index: BTreeMap<i64, usize> = kinds.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        values
            .iter()
            .map(|v| {
                let mut row = vec![0.0; kinds.len()];
                row[index[v]] = 1.0;
                row
            })
            .collect()
    } else {
        vec![vec![1.0]; num_nodes]
    };

    let mut feature_rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); num_graphs];
    for (node, row) in features.into_iter().enumerate() {
        feature_rows[graph_index[&node_graph[node]]].push(row);
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, adj) in adjacency.into_iter().enumerate() {
        let feats = Matrix::from_rows(&feature_rows[g]).map_err(|e| DataError::InvalidGraph {
            id: g,
            message: e.to_string(),
        })?;
        graphs.push(Graph::new(g, adj, feats, labels[g])?);
    }
    Dataset::new(graphs, label_map.len())
}

/// Writes a dataset back out in the same flat-file layout. Features are
/// always written as node attributes so a reload reproduces them
/// bit-exactly.
pub fn save_tudataset(d: &Dataset, dir: &Path, name: &str) -> Result<(), DataError> {
    fs::create_dir_all(dir)?;
    let mut a = fs::File::create(dir.join(format!("{name}_A.txt")))?;
    let mut indicator = fs::File::create(dir.join(format!("{name}_graph_indicator.txt")))?;
    let mut labels = fs::File::create(dir.join(format!("{name}_graph_labels.txt")))?;
    let mut attributes = fs::File::create(dir.join(format!("{name}_node_attributes.txt")))?;

    let mut offset = 0usize;
    for (gid, g) in d.graphs().iter().enumerate() {
        let n = g.num_nodes();
        writeln!(labels, "{}", g.label())?;
        for u in 0..n {
            writeln!(indicator, "{}", gid + 1)?;
            let row: Vec<String> = g.features().row(u).iter().map(|v| format!("{v}")).collect();
            writeln!(attributes, "{}", row.join(", "))?;
            for v in 0..n {
                if g.adjacency().get(u, v) == 1.0 {
                    writeln!(a, "{}, {}", offset + u + 1, offset + v + 1)?;
                }
            }
        }
        offset += n;
    }
    Ok(())
}
