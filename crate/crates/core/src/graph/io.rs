//! Dataset directory format.
//!
//! ```text
//! manifest.json    {name, object_kind, category_names[], embedding_dim, node_count}
//! nodes.jsonl      {"id": int, "text": string, "label": int} per line
//! edges.tsv        two whitespace-separated node ids per line
//! embeddings.bin   u32 rows, u32 cols, then rows*cols f32, little-endian, row-major
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DataSplit, DatasetManifest, TextAttributedGraph};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const NODES_FILE: &str = "nodes.jsonl";
pub const EDGES_FILE: &str = "edges.tsv";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    text: String,
    label: i64,
}

pub fn load_dataset(dir: &Path) -> Result<(TextAttributedGraph, DatasetManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = serde_json::from_str(&read_string(&manifest_path)?)?;
    manifest.validate()?;

    let nodes = read_nodes(&dir.join(NODES_FILE))?;
    if nodes.len() != manifest.node_count {
        return Err(Error::RowCountMismatch {
            what: "nodes.jsonl",
            expected: manifest.node_count,
            found: nodes.len(),
        });
    }
    let embeddings = read_embeddings(&dir.join(EMBEDDINGS_FILE))?;
    if embeddings.ncols() != manifest.embedding_dim {
        return Err(Error::Shape(format!(
            "embeddings.bin has {} columns, manifest says {}",
            embeddings.ncols(),
            manifest.embedding_dim
        )));
    }
    let edges = read_edges(&dir.join(EDGES_FILE))?;

    let (texts, labels): (Vec<_>, Vec<_>) = nodes.into_iter().map(|r| (r.text, r.label)).unzip();
    if let Some(&bad) = labels
        .iter()
        .find(|&&l| l >= manifest.category_names.len() as i64)
    {
        return Err(Error::InvalidArgument(format!(
            "label {bad} has no category name ({} categories)",
            manifest.category_names.len()
        )));
    }
    let graph = TextAttributedGraph::new(texts, edges, embeddings, labels)?;
    Ok((graph, manifest))
}

pub fn save_dataset(dir: &Path, graph: &TextAttributedGraph, manifest: &DatasetManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n").map_err(|e| Error::io(&path, e))?;

    let path = dir.join(NODES_FILE);
    let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
    for (id, (text, &label)) in graph.texts().iter().zip(graph.labels()).enumerate() {
        let record = NodeRecord {
            id,
            text: text.clone(),
            label,
        };
        writeln!(out, "{}", serde_json::to_string(&record)?).map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(EDGES_FILE);
    let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
    for (i, j) in graph.edges() {
        writeln!(out, "{i}\t{j}").map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    write_embeddings(&dir.join(EMBEDDINGS_FILE), graph.embeddings())
}

pub fn load_split(path: &Path) -> Result<DataSplit> {
    Ok(serde_json::from_str(&read_string(path)?)?)
}

pub fn save_split(path: &Path, split: &DataSplit) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(split)? + "\n").map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_nodes(path: &Path) -> Result<Vec<NodeRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: NodeRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    records.sort_by_key(|r| r.id);
    for (expected, r) in records.iter().enumerate() {
        if r.id != expected {
            return Err(Error::Parse {
                path: path.into(),
                line: 0,
                message: format!("node ids must be 0..n without gaps; missing or duplicate id near {expected}"),
            });
        }
    }
    Ok(records)
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut cols = line.split_whitespace();
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse {
                path: path.into(),
                line: lineno + 1,
                message: "expected two node ids".into(),
            });
        };
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                message: format!("bad node id {s:?}: {e}"),
            })
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

/// Reads the `u32 rows, u32 cols, f32...` matrix format.
pub fn read_embeddings(path: &Path) -> Result<Array2<f32>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            message: "truncated header".into(),
        });
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != rows * cols * 4 {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            message: format!("expected {} bytes of f32 data for {rows}x{cols}, found {}", rows * cols * 4, body.len()),
        });
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

pub fn write_embeddings(path: &Path, matrix: &Array2<f32>) -> Result<()> {
    let mut out = Vec::with_capacity(8 + matrix.len() * 4);
    out.extend_from_slice(&(matrix.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.ncols() as u32).to_le_bytes());
    for v in matrix.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
