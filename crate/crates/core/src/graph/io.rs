//! Graph serialization: whitespace edge lists (`i j w`) and coordinate CSVs (`node,x,y`).

use std::io::{BufRead, BufReader, Read, Write};

use super::Graph;
use crate::error::{Error, Result};

/// Writes `# nodes N` followed by one `i j w` line per undirected edge.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {}", g.n_nodes())?;
    for (i, j, w) in g.edges() {
        writeln!(out, "{i} {j} {w:e}")?;
    }
    Ok(())
}

/// Reads an edge list written by [`write_edge_list`].
///
/// Without a `# nodes` header the node count is one past the largest index.
/// Both orientations of an edge may appear, but they must carry the same weight.
pub fn read_edge_list<R: Read>(input: R) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("nodes") {
                let n = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("line {}: bad node header", lineno + 1)))?;
                declared = Some(n);
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected `i j w`", lineno + 1)));
        }
        let parse_idx = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse(format!("line {}: bad node index {s:?}", lineno + 1)))
        };
        let i = parse_idx(fields[0])?;
        let j = parse_idx(fields[1])?;
        let w: f64 =
            fields[2].parse().map_err(|_| Error::Parse(format!("line {}: bad weight {:?}", lineno + 1, fields[2])))?;
        edges.push((i, j, w));
    }
    let inferred = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = declared.unwrap_or(inferred);
    if n < inferred {
        return Err(Error::Parse(format!("edge index {} exceeds declared {n} nodes", inferred - 1)));
    }
    let mut w = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut seen = nalgebra::DMatrix::<bool>::from_element(n, n, false);
    for (i, j, weight) in edges {
        if i == j {
            return Err(Error::invalid(format!("self loop at node {i}")));
        }
        if seen[(i, j)] && w[(i, j)] != weight {
            return Err(Error::invalid(format!(
                "edge ({i}, {j}) listed with conflicting weights {} and {weight}",
                w[(i, j)]
            )));
        }
        seen[(i, j)] = true;
        seen[(j, i)] = true;
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    Graph::from_weights(w)
}

/// Writes `node,x,y` rows.
pub fn write_coords<W: Write>(coords: &[[f64; 2]], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["node", "x", "y"])?;
    for (i, c) in coords.iter().enumerate() {
        wtr.write_record([i.to_string(), format!("{:e}", c[0]), format!("{:e}", c[1])])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a `node,x,y` CSV; nodes must be numbered `0..N` (any order).
pub fn read_coords<R: Read>(input: R) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node", "x", "y"] {
        return Err(Error::Parse(format!("coords header must be node,x,y, got {headers:?}")));
    }
    let mut rows: Vec<(usize, [f64; 2])> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec[k].trim().parse().map_err(|_| Error::Parse(format!("bad number {:?}", &rec[k])))
        };
        let node: usize = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad node id {:?}", &rec[0])))?;
        rows.push((node, [parse(1)?, parse(2)?]));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, (node, _)) in rows.iter().enumerate() {
        if *node != expect {
            return Err(Error::Parse(format!("coords must cover nodes 0..{}, missing {expect}", rows.len())));
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
