//! Text embedding providers.

use super::client::{agent, post_json, RetryPolicy, API_KEY_ENV, BASE_URL_ENV};
use crate::error::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    /// One row per text.
    fn embed(&self, texts: &[String]) -> Result<Array2<f32>>;
}

/// Hex sha256 of the text; the key of lookup files.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Embeds `texts`, checking the provider's width against `expected_dim`.
pub fn embed_texts(provider: &dyn EmbeddingProvider, texts: &[String], expected_dim: usize) -> Result<Array2<f32>> {
    if provider.dim() != expected_dim {
        return Err(Error::Shape(format!(
            "embedding provider gives {} columns, graph has {expected_dim}",
            provider.dim()
        )));
    }
    if texts.is_empty() {
        return Ok(Array2::zeros((0, expected_dim)));
    }
    let matrix = provider.embed(texts)?;
    if matrix.dim() != (texts.len(), expected_dim) {
        return Err(Error::Shape(format!(
            "embedding provider returned {:?}, expected ({}, {expected_dim})",
            matrix.dim(),
            texts.len()
        )));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("embedding".into()));
    }
    Ok(matrix)
}

/// Deterministic mock: a unit-norm Gaussian direction seeded by the text.
#[derive(Debug, Clone)]
pub struct HashEmbedding {
    dim: usize,
}

impl HashEmbedding {
    pub fn new(dim: usize) -> Self {
        HashEmbedding { dim }
    }

    fn vector(&self, text: &str) -> Vec<f32> {
        let digest = Sha256::digest(text.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        let raw: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        raw.iter().map(|x| (x / norm) as f32).collect()
    }
}

impl EmbeddingProvider for HashEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Array2<f32>> {
        let mut out = Array2::zeros((texts.len(), self.dim));
        for (mut row, text) in out.rows_mut().into_iter().zip(texts) {
            row.assign(&ndarray::Array1::from(self.vector(text)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LookupLine {
    sha256: String,
    vector: Vec<f32>,
}

/// Precomputed vectors keyed by [`text_hash`], read from JSONL lines
/// `{"sha256": ..., "vector": [...]}`.
#[derive(Debug, Clone)]
pub struct LookupEmbedding {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl LookupEmbedding {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f32>>) -> Result<Self> {
        if let Some((k, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::Shape(format!("lookup vector {k} has {} entries, expected {dim}", v.len())));
        }
        Ok(LookupEmbedding { dim, vectors })
    }

    pub fn load(path: &Path, dim: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LookupLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if parsed.vector.len() != dim {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("vector has {} entries, expected {dim}", parsed.vector.len()),
                });
            }
            vectors.insert(parsed.sha256, parsed.vector);
        }
        Ok(LookupEmbedding { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for LookupEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Array2<f32>> {
        let mut out = Array2::zeros((texts.len(), self.dim));
        for (i, text) in texts.iter().enumerate() {
            let key = text_hash(text);
            let v = self
                .vectors
                .get(&key)
                .ok_or_else(|| Error::CacheMiss(format!("no precomputed embedding for text {key}")))?;
            out.row_mut(i).assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
        Ok(out)
    }
}

/// Writes a lookup file for [`LookupEmbedding`], one line per text.
pub fn write_lookup(path: &Path, texts: &[String], vectors: &Array2<f32>) -> Result<()> {
    if vectors.nrows() != texts.len() {
        return Err(Error::RowCountMismatch { what: "lookup vectors", expected: texts.len(), found: vectors.nrows() });
    }
    let mut out = String::new();
    for (text, row) in texts.iter().zip(vectors.rows()) {
        out.push_str(&serde_json::to_string(&LookupLine { sha256: text_hash(text), vector: row.to_vec() })?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// OpenAI-compatible `POST {base_url}/embeddings`.
pub struct RemoteEmbedding {
    base_url: String,
    api_key: Option<String>,
    model: String,
    dim: usize,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl RemoteEmbedding {
    pub fn new(base_url: &str, api_key: Option<String>, model: &str, dim: usize) -> Self {
        RemoteEmbedding {
            base_url: base_url.trim_end_matches('/').to_owned(),
            api_key,
            model: model.to_owned(),
            dim,
            retry: RetryPolicy::default(),
            agent: agent(),
        }
    }

    pub fn from_env(model: &str, dim: usize) -> Result<Self> {
        let base = std::env::var(BASE_URL_ENV).map_err(|_| Error::Llm(format!("{BASE_URL_ENV} is not set")))?;
        Ok(Self::new(&base, std::env::var(API_KEY_ENV).ok(), model, dim))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl EmbeddingProvider for RemoteEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Array2<f32>> {
        let url = format!("{}/embeddings", self.base_url);
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let response = post_json(&self.agent, &url, self.api_key.as_deref(), &body, self.retry)?;
        let data = response["data"]
            .as_array()
            .ok_or_else(|| Error::Llm(format!("{url}: response has no data array")))?;
        if data.len() != texts.len() {
            return Err(Error::Llm(format!("{url}: {} embeddings for {} texts", data.len(), texts.len())));
        }
        let mut out = Array2::zeros((texts.len(), self.dim));
        for (pos, item) in data.iter().enumerate() {
            let row = item["index"].as_u64().map(|i| i as usize).unwrap_or(pos);
            let values = item["embedding"]
                .as_array()
                .ok_or_else(|| Error::Llm(format!("{url}: item {pos} has no embedding")))?;
            if row >= texts.len() || values.len() != self.dim {
                return Err(Error::Shape(format!("{url}: item {pos} has {} values, expected {}", values.len(), self.dim)));
            }
            for (j, v) in values.iter().enumerate() {
                out[[row, j]] = v.as_f64().ok_or_else(|| Error::Llm(format!("{url}: non-numeric embedding value")))? as f32;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hash_embedding_is_deterministic_and_unit() {
        let p = HashEmbedding::new(16);
        let m = embed_texts(&p, &texts(&["a", "b", "a"]), 16).unwrap();
        assert_eq!(m.row(0), m.row(2));
        assert_ne!(m.row(0), m.row(1));
        for row in m.rows() {
            let norm: f64 = row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-6);
        }
        assert_eq!(embed_texts(&p, &[], 16).unwrap().dim(), (0, 16));
        assert!(matches!(embed_texts(&p, &texts(&["a"]), 8), Err(Error::Shape(_))));
    }

    #[test]
    fn lookup_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        let t = texts(&["x", "y"]);
        let m = ndarray::array![[1.0f32, 2.0], [3.0, 4.0]];
        write_lookup(&path, &t, &m).unwrap();
        let p = LookupEmbedding::load(&path, 2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(embed_texts(&p, &texts(&["y", "x"]), 2).unwrap(), ndarray::array![[3.0f32, 4.0], [1.0, 2.0]]);
        assert!(matches!(p.embed(&texts(&["z"])), Err(Error::CacheMiss(_))));
        assert!(LookupEmbedding::load(&path, 3).is_err());
    }

    #[test]
    fn remote_embedding_wire_format() {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            let body = r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]}"#;
            let reply = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
            head + &String::from_utf8(payload).unwrap()
        });
        let p = RemoteEmbedding::new(&format!("http://{addr}/v1/"), Some("k".into()), "enc", 2);
        let m = p.embed(&texts(&["a", "b"])).unwrap();
        assert_eq!(m, ndarray::array![[1.0f32, 0.0], [0.0, 1.0]]);
        let request = server.join().unwrap();
        assert!(request.starts_with("POST /v1/embeddings "));
        assert!(request.to_ascii_lowercase().contains("authorization: bearer k"));
        let body: serde_json::Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
        assert_eq!(body["input"], serde_json::json!(["a", "b"]));
        assert_eq!(body["model"], "enc");
    }
}
