//! Text formats for graphs, partitions, embeddings and trees, plus the
//! JSON sidecar written next to generated instances.
//!
//! All formats are whitespace separated. Blank lines and everything after
//! a `#` are ignored. Floats are written in Rust's shortest round-trip form,
//! so reading back a written file reproduces the values exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::hierarchy::ClusterTree;
use crate::instance::Sidecar;

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(k, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(line) => {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| Ok((k + 1, body.to_string())))
        }
    })
}

fn parse<T: FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} {token:?}"),
    })
}

fn no_trailing<'a>(line: usize, mut tokens: impl Iterator<Item = &'a str>) -> Result<()> {
    match tokens.next() {
        Some(t) => Err(Error::Parse {
            line,
            msg: format!("unexpected token {t:?}"),
        }),
        None => Ok(()),
    }
}

fn header(lines: &mut impl Iterator<Item = Result<(usize, String)>>, what: &str) -> Result<(usize, String)> {
    lines.next().unwrap_or_else(|| {
        Err(Error::Parse {
            line: 0,
            msg: format!("missing {what} header"),
        })
    })
}

/// Edge list: `n m`, then `m` lines `u v` with 0-based endpoints.
pub fn read_edge_list(r: impl BufRead) -> Result<Graph> {
    let mut lines = content_lines(r);
    let (ln, head) = header(&mut lines, "edge list")?;
    let mut t = head.split_whitespace();
    let n: usize = parse(ln, t.next(), "vertex count")?;
    let m: usize = parse(ln, t.next(), "edge count")?;
    no_trailing(ln, t)?;
    let mut edges = Vec::with_capacity(m);
    for item in lines {
        let (ln, body) = item?;
        let mut t = body.split_whitespace();
        let u: usize = parse(ln, t.next(), "endpoint")?;
        let v: usize = parse(ln, t.next(), "endpoint")?;
        no_trailing(ln, t)?;
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            got: edges.len(),
        });
    }
    Graph::new(n, edges)
}

pub fn write_edge_list(mut w: impl Write, g: &Graph) -> Result<()> {
    writeln!(w, "{} {}", g.n(), g.m())?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Partition: one label per line, vertex `i` on the `i`-th content line.
/// The number of parts is one more than the largest label.
pub fn read_partition(r: impl BufRead) -> Result<Partition> {
    let mut labels = Vec::new();
    for item in content_lines(r) {
        let (ln, body) = item?;
        let mut t = body.split_whitespace();
        labels.push(parse::<u8>(ln, t.next(), "label")?);
        no_trailing(ln, t)?;
    }
    let parts = labels.iter().max().map_or(1, |&l| l as usize + 1).max(2);
    Partition::from_labels(labels, parts)
}

pub fn write_partition(mut w: impl Write, p: &Partition) -> Result<()> {
    for l in p.labels() {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// Embedding: `d n trace_scale`, then `n` lines of `d` coordinates.
pub fn read_embedding(r: impl BufRead) -> Result<Embedding> {
    let mut lines = content_lines(r);
    let (ln, head) = header(&mut lines, "embedding")?;
    let mut t = head.split_whitespace();
    let d: usize = parse(ln, t.next(), "dimension")?;
    let n: usize = parse(ln, t.next(), "vertex count")?;
    let trace: f64 = parse(ln, t.next(), "trace scale")?;
    no_trailing(ln, t)?;
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for item in lines {
        let (ln, body) = item?;
        let mut t = body.split_whitespace();
        for _ in 0..d {
            data.push(parse::<f64>(ln, t.next(), "coordinate")?);
        }
        no_trailing(ln, t)?;
        rows += 1;
    }
    if rows != n {
        return Err(Error::SizeMismatch { expected: n, got: rows });
    }
    Embedding::from_rows(d, data, trace)
}

pub fn write_embedding(mut w: impl Write, e: &Embedding) -> Result<()> {
    writeln!(w, "{} {} {}", e.d(), e.n(), e.trace_scale())?;
    for i in 0..e.n() {
        let row: Vec<String> = e.vector(i).iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Tree: `n_nodes`, then one line `node parent [weight]` per node, with
/// parent `-` at the root. Nodes `0..n` are the leaves, labeled by vertex.
pub fn read_tree(r: impl BufRead) -> Result<ClusterTree> {
    let mut lines = content_lines(r);
    let (ln, head) = header(&mut lines, "tree")?;
    let mut t = head.split_whitespace();
    let total: usize = parse(ln, t.next(), "node count")?;
    no_trailing(ln, t)?;
    if total % 2 == 0 {
        return Err(Error::Parse {
            line: ln,
            msg: format!("a binary tree has an odd node count, got {total}"),
        });
    }
    let mut parents: Vec<Option<Option<usize>>> = vec![None; total];
    let mut weights = vec![None; total];
    for item in lines {
        let (ln, body) = item?;
        let mut t = body.split_whitespace();
        let node: usize = parse(ln, t.next(), "node")?;
        if node >= total {
            return Err(Error::VertexOutOfRange { vertex: node, n: total });
        }
        if parents[node].is_some() {
            return Err(Error::Parse {
                line: ln,
                msg: format!("node {node} listed twice"),
            });
        }
        parents[node] = Some(match t.next() {
            Some("-") => None,
            other => Some(parse::<usize>(ln, other, "parent")?),
        });
        weights[node] = t.next().map(|x| parse::<f64>(ln, Some(x), "weight")).transpose()?;
        no_trailing(ln, t)?;
    }
    let parents: Vec<Option<usize>> = parents
        .into_iter()
        .enumerate()
        .map(|(v, p)| {
            p.ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("node {v} is missing"),
            })
        })
        .collect::<Result<_>>()?;
    ClusterTree::from_parents(total.div_ceil(2), &parents, &weights)
}

pub fn write_tree(mut w: impl Write, t: &ClusterTree) -> Result<()> {
    writeln!(w, "{}", t.n_nodes())?;
    for v in 0..t.n_nodes() {
        let parent = t.parent(v).map_or_else(|| "-".to_string(), |p| p.to_string());
        match t.weight(v) {
            Some(x) => writeln!(w, "{v} {parent} {x}")?,
            None => writeln!(w, "{v} {parent}")?,
        }
    }
    Ok(())
}

pub fn read_sidecar(r: impl BufRead) -> Result<Sidecar> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_sidecar(mut w: impl Write, s: &Sidecar) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, s)?;
    writeln!(w)?;
    Ok(())
}

/// Opens `path` and applies a reader.
pub fn load<T>(path: impl AsRef<Path>, read: impl FnOnce(BufReader<File>) -> Result<T>) -> Result<T> {
    read(BufReader::new(File::open(path)?))
}

/// Creates `path` and applies a writer.
pub fn save(path: impl AsRef<Path>, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}
