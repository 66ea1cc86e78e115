//! Pre-extracted patent corpus: loading, validation, and indexing.
//!
//! Each record carries an abstract, a set of normalized core technical
//! features, a unit-norm semantic embedding, and its citation list. The
//! corpus file is line-delimited JSON with a `{"dim": D}` header declaring
//! the embedding dimension shared by every record.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::EmbedderBackend;
use crate::error::{Error, Result};

/// Tolerance for accepting a stored embedding as unit-norm.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// One literature record: abstract, core-feature set, unit embedding, citations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentDoc {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub features: BTreeSet<String>,
    pub embedding: Vec<f64>,
    pub citations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ipc_section: Option<char>,
}

/// A user query embedded in the same space as the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub embedding: Vec<f64>,
}

/// Validated, id-sorted document collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<PatentDoc>,
    index: HashMap<String, usize>,
    dim: usize,
    dangling_citations: usize,
}

impl Corpus {
    /// Build a corpus from already-parsed docs, enforcing the record invariants.
    ///
    /// `normalize_embeddings` rescales off-norm embeddings instead of rejecting
    /// them. Citations to ids outside the corpus are dropped and counted.
    pub fn from_docs(
        mut docs: Vec<PatentDoc>,
        dim: usize,
        normalize_embeddings: bool,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &docs {
            if !seen.insert(doc.id.clone()) {
                return Err(Error::validation(format!("duplicate document id '{}'", doc.id)));
            }
        }
        for doc in &mut docs {
            if doc.embedding.len() != dim {
                return Err(Error::validation(format!(
                    "embedding dimension mismatch for id '{}': expected {}, got {}",
                    doc.id,
                    dim,
                    doc.embedding.len()
                )));
            }
            let norm = l2_norm(&doc.embedding);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                if !normalize_embeddings {
                    return Err(Error::validation(format!(
                        "embedding for id '{}' has norm {norm:.6}, not unit (set normalize_embeddings to rescale)",
                        doc.id
                    )));
                }
                if norm == 0.0 {
                    return Err(Error::validation(format!(
                        "embedding for id '{}' is the zero vector and cannot be normalized",
                        doc.id
                    )));
                }
                for x in &mut doc.embedding {
                    *x /= norm;
                }
            }
            let normalized: BTreeSet<String> =
                doc.features.iter().map(|f| normalize_feature(f)).collect();
            doc.features = normalized;
        }
        docs.sort_by(|a, b| a.id.cmp(&b.id));

        let ids: HashSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        let mut dangling = 0usize;
        let mut cleaned: Vec<Vec<String>> = Vec::with_capacity(docs.len());
        for doc in &docs {
            let mut kept = Vec::with_capacity(doc.citations.len());
            for c in &doc.citations {
                if ids.contains(c.as_str()) {
                    kept.push(c.clone());
                } else {
                    dangling += 1;
                }
            }
            cleaned.push(kept);
        }
        for (doc, kept) in docs.iter_mut().zip(cleaned) {
            doc.citations = kept;
        }

        let index = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        Ok(Corpus {
            docs,
            index,
            dim,
            dangling_citations: dangling,
        })
    }

    pub fn docs(&self) -> &[PatentDoc] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of citations that referenced ids outside the corpus and were dropped.
    pub fn dangling_citation_count(&self) -> usize {
        self.dangling_citations
    }

    pub fn get(&self, id: &str) -> Option<&PatentDoc> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn require(&self, id: &str) -> Result<&PatentDoc> {
        self.get(id)
            .ok_or_else(|| Error::validation(format!("unknown document id '{id}'")))
    }

    /// Write the corpus back out in the line-delimited input format.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        let header = serde_json::json!({ "dim": self.dim });
        writeln!(f, "{header}")?;
        for doc in &self.docs {
            let line = serde_json::to_string(doc)
                .map_err(|e| Error::validation(format!("serialize doc '{}': {e}", doc.id)))?;
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Where record embeddings come from at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// Embeddings are read from the corpus file; a record without one is an error.
    #[default]
    FromFile,
    /// Embeddings are computed from each abstract via the embedder backend.
    Computed,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub normalize_embeddings: bool,
    pub embedding_mode: EmbeddingMode,
}

#[derive(Deserialize)]
struct HeaderLine {
    dim: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    features: Vec<String>,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    citations: Vec<String>,
    #[serde(default)]
    ipc_section: Option<String>,
}

/// Load and validate a line-delimited corpus file.
///
/// The first line must be the `{"dim": D}` header. In [`EmbeddingMode::Computed`]
/// an embedder backend is required and record embeddings in the file are ignored.
pub fn load_corpus(
    path: &Path,
    opts: &LoadOptions,
    embedder: Option<&dyn EmbedderBackend>,
) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| {
        Error::validation(format!("cannot open corpus file '{}': {e}", path.display()))
    })?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let dim = loop {
        match lines.next() {
            Some((lineno, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let header: HeaderLine = serde_json::from_str(&line).map_err(|e| {
                    Error::validation(format!(
                        "malformed header at line {}: {e}",
                        lineno + 1
                    ))
                })?;
                if header.dim == 0 {
                    return Err(Error::validation("header dim must be positive"));
                }
                break header.dim;
            }
            None => return Err(Error::validation("corpus file is empty (missing header line)")),
        }
    };

    let mut docs = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| {
            Error::validation(format!("malformed record at line {}: {e}", lineno + 1))
        })?;
        let embedding = match opts.embedding_mode {
            EmbeddingMode::FromFile => raw.embedding.ok_or_else(|| {
                Error::validation(format!(
                    "record '{}' has no embedding and embedding mode is from_file",
                    raw.id
                ))
            })?,
            EmbeddingMode::Computed => {
                let embedder = embedder.ok_or_else(|| {
                    Error::validation("embedding mode is computed but no embedder was supplied")
                })?;
                embedder.embed_text(&raw.abstract_text)?
            }
        };
        let ipc_section = match raw.ipc_section {
            None => None,
            Some(s) => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some(c),
                    _ => {
                        return Err(Error::validation(format!(
                            "ipc_section for id '{}' must be a single character, got '{s}'",
                            raw.id
                        )))
                    }
                }
            }
        };
        docs.push(PatentDoc {
            id: raw.id,
            abstract_text: raw.abstract_text,
            features: raw.features.into_iter().collect(),
            embedding,
            citations: raw.citations,
            ipc_section,
        });
    }

    Corpus::from_docs(docs, dim, opts.normalize_embeddings)
}

/// Lowercase, trim, and collapse internal whitespace so feature-set overlap
/// is insensitive to formatting noise.
pub fn normalize_feature(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Embed a query string with the given backend; the result is unit-norm.
pub fn embed_query(text: &str, embedder: &dyn EmbedderBackend) -> Result<Query> {
    if text.trim().is_empty() {
        return Err(Error::validation("empty query"));
    }
    let mut embedding = embedder.embed_text(text)?;
    let norm = l2_norm(&embedding);
    if norm == 0.0 {
        return Err(Error::backend("embedder returned a zero vector"));
    }
    for x in &mut embedding {
        *x /= norm;
    }
    Ok(Query {
        text: text.to_string(),
        embedding,
    })
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity. Inputs are expected to be near-unit vectors but the
/// norms are divided out so `cosine_similarity(a, a)` is 1 to machine
/// precision. Exactly symmetric in its arguments.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "cosine dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::validation("cosine of zero-norm vector"));
    }
    Ok(dot / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::mock::MockEmbedder;
    use proptest::prelude::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn empty_file_of_records_loads_empty_corpus() {
        let f = write_lines(&[r#"{"dim": 3}"#]);
        let corpus = load_corpus(f.path(), &LoadOptions::default(), None).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.dim(), 3);
    }

    #[test]
    fn off_norm_embedding_is_error_unless_normalizing() {
        let lines = [
            r#"{"dim": 2}"#,
            r#"{"id": "a", "abstract": "x", "features": [], "embedding": [0.3, 0.4], "citations": []}"#,
        ];
        let f = write_lines(&lines);
        let err = load_corpus(f.path(), &LoadOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("norm"), "{err}");

        let opts = LoadOptions {
            normalize_embeddings: true,
            ..Default::default()
        };
        let corpus = load_corpus(f.path(), &opts, None).unwrap();
        let emb = &corpus.docs()[0].embedding;
        assert!((l2_norm(emb) - 1.0).abs() < 1e-12);
        assert!((emb[0] - 0.6).abs() < 1e-12 && (emb[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dangling_citations_dropped_with_count() {
        // Three records, one citation pointing outside the corpus.
        let lines = [
            r#"{"dim": 2}"#,
            r#"{"id": "a", "abstract": "x", "features": [], "embedding": [1.0, 0.0], "citations": ["b", "zz"]}"#,
            r#"{"id": "b", "abstract": "y", "features": [], "embedding": [0.0, 1.0], "citations": []}"#,
            r#"{"id": "c", "abstract": "z", "features": [], "embedding": [1.0, 0.0], "citations": ["a"]}"#,
        ];
        let f = write_lines(&lines);
        let corpus = load_corpus(f.path(), &LoadOptions::default(), None).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.dangling_citation_count(), 1);
        assert_eq!(corpus.get("a").unwrap().citations, vec!["b".to_string()]);
    }

    #[test]
    fn malformed_record_errors_name_the_line() {
        let lines = [r#"{"dim": 2}"#, r#"{"id": "a""#];
        let f = write_lines(&lines);
        let err = load_corpus(f.path(), &LoadOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let lines = [
            r#"{"dim": 2}"#,
            r#"{"id": "a", "abstract": "x", "features": [], "embedding": [1.0, 0.0], "citations": []}"#,
            r#"{"id": "a", "abstract": "y", "features": [], "embedding": [0.0, 1.0], "citations": []}"#,
        ];
        let f = write_lines(&lines);
        let err = load_corpus(f.path(), &LoadOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn dimension_mismatch_names_offending_id() {
        let lines = [
            r#"{"dim": 3}"#,
            r#"{"id": "weird", "abstract": "x", "features": [], "embedding": [1.0, 0.0], "citations": []}"#,
        ];
        let f = write_lines(&lines);
        let err = load_corpus(f.path(), &LoadOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("weird"), "{err}");
    }

    #[test]
    fn computed_mode_embeds_abstracts() {
        let lines = [
            r#"{"dim": 8}"#,
            r#"{"id": "a", "abstract": "first abstract", "features": ["F  One"], "citations": []}"#,
            r#"{"id": "b", "abstract": "second abstract", "features": [], "citations": []}"#,
        ];
        let f = write_lines(&lines);
        let embedder = MockEmbedder::new(7, 8);
        let opts = LoadOptions {
            normalize_embeddings: false,
            embedding_mode: EmbeddingMode::Computed,
        };
        let corpus = load_corpus(f.path(), &opts, Some(&embedder)).unwrap();
        assert_eq!(corpus.dim(), 8);
        assert!((l2_norm(&corpus.get("a").unwrap().embedding) - 1.0).abs() < 1e-9);
        assert_ne!(
            corpus.get("a").unwrap().embedding,
            corpus.get("b").unwrap().embedding
        );
        // feature normalization applied at load
        assert!(corpus.get("a").unwrap().features.contains("f one"));
    }

    #[test]
    fn reload_and_roundtrip_yield_identical_corpus() {
        let lines = [
            r#"{"dim": 2}"#,
            r#"{"id": "b", "abstract": "y", "features": ["beta"], "embedding": [0.0, 1.0], "citations": ["a"], "ipc_section": "G"}"#,
            r#"{"id": "a", "abstract": "x", "features": ["Alpha", "beta"], "embedding": [0.6, 0.8], "citations": []}"#,
        ];
        let f = write_lines(&lines);
        let c1 = load_corpus(f.path(), &LoadOptions::default(), None).unwrap();
        let c2 = load_corpus(f.path(), &LoadOptions::default(), None).unwrap();
        assert_eq!(c1, c2);

        let out = tempfile::NamedTempFile::new().unwrap();
        c1.write_jsonl(out.path()).unwrap();
        let c3 = load_corpus(out.path(), &LoadOptions::default(), None).unwrap();
        assert_eq!(c1, c3);
        // byte stability: writing the reloaded corpus reproduces the file
        let out2 = tempfile::NamedTempFile::new().unwrap();
        c3.write_jsonl(out2.path()).unwrap();
        assert_eq!(
            std::fs::read(out.path()).unwrap(),
            std::fs::read(out2.path()).unwrap()
        );
    }

    #[test]
    fn embed_query_rejects_empty_and_is_deterministic() {
        let embedder = MockEmbedder::new(3, 6);
        let err = embed_query("   ", &embedder).unwrap_err();
        assert!(err.to_string().contains("empty query"));

        let q1 = embed_query("topic A", &embedder).unwrap();
        let q2 = embed_query("topic A", &embedder).unwrap();
        assert_eq!(q1, q2);
        let q3 = embed_query("topic B", &embedder).unwrap();
        assert_ne!(q1.embedding, q3.embedding);
    }

    #[test]
    fn cosine_examples() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert!((cosine_similarity(&e1, &e1).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(cosine_similarity(&e1, &e2).unwrap(), 0.0);
        let a = [0.6, 0.8];
        let b = [0.8, 0.6];
        assert!((cosine_similarity(&a, &b).unwrap() - 0.96).abs() < 1e-12);
        assert!(cosine_similarity(&e1, &[1.0]).is_err());
    }

    #[test]
    fn feature_normalization_collapses_whitespace() {
        assert_eq!(normalize_feature("  Neural   Control\t"), "neural control");
    }

    proptest! {
        #[test]
        fn cosine_exactly_symmetric(
            a in proptest::collection::vec(-10.0f64..10.0, 2..6),
            b in proptest::collection::vec(-10.0f64..10.0, 2..6),
        ) {
            prop_assume!(a.len() == b.len());
            prop_assume!(l2_norm(&a) > 1e-9 && l2_norm(&b) > 1e-9);
            let ab = cosine_similarity(&a, &b).unwrap();
            let ba = cosine_similarity(&b, &a).unwrap();
            // bitwise equality, not approximate
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        }
    }
}
