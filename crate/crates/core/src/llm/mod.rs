//! LLM-driven pseudo-OOD exposure: the chat and embedding contracts,
//! prompt construction and parsing, node identification and generation,
//! graph augmentation and the response cache.

mod augment;
mod cache;
mod client;
mod embed;
mod generate;
mod identify;
mod prompts;

use serde::{Deserialize, Serialize};

pub use augment::{augment_graph, AugmentedGraph, EdgeMode};
pub use cache::{cache_key, CacheEntry, LlmSession, ResponseCache};
pub(crate) use client::mock_generated_item;
pub use client::{ChatClient, ChatMessage, ChatRequest, HttpChatClient, MockChatClient, RetryPolicy, API_KEY_ENV, BASE_URL_ENV};
pub use embed::{
    embed_texts, text_hash, write_lookup, EmbeddingProvider, HashEmbedding, LookupEmbedding, RemoteEmbedding,
};
pub use generate::{generate_pseudo_ood, read_generated, write_generated, GenerateOptions, GeneratedNode, GenerationOutcome};
pub use identify::{annotate_nodes, annotation_accuracy, identify_pseudo_ood, IdentifyOptions, LlmAnnotation, ParsedAnnotation};
pub use prompts::{
    build_generation_prompt, build_identification_prompt, normalize_response, parse_generation_response,
    parse_identification_response,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoOodMode {
    Identified,
    Generated,
}

/// Where a pseudo-OOD candidate came from and what happened to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Annotation {
        node_id: usize,
        response: String,
        parsed: String,
        included: bool,
    },
    Generation {
        node_id: usize,
        category: String,
        title: String,
    },
}

/// Nodes used as OOD supervision. In identified mode `node_ids` index the
/// original graph; in generated mode they index the augmented graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOodSet {
    pub mode: PseudoOodMode,
    pub node_ids: Vec<usize>,
    pub provenance: Vec<Provenance>,
}

impl PseudoOodSet {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn load(path: &std::path::Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> crate::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| crate::Error::io(parent, e))?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| crate::Error::io(path, e))
    }
}
