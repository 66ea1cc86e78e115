//! Remote chat-completion backends.
//!
//! The wire format is the generic chat shape: request `{model, messages,
//! temperature}`, response text located by a configurable dotted extraction
//! path. The API key is read from the environment variable named in the
//! config. Requests are retried with exponential backoff
//! (`backoff_base * 2^attempt`); timeouts and unparseable payloads count as
//! failures. All traffic can be logged to a JSONL file with secrets redacted.

use std::fs::OpenOptions;
use std::io::Write;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use crate::corpus::{PatentDoc, Query};
use crate::error::{Error, Result};
use crate::evolve::Idea;

use super::{BackendConfig, EmbedderBackend, GeneratorBackend, IdeaDraft, RewardBackend, RewardResponse};

/// Bounds concurrent in-flight requests.
struct Gate {
    state: Mutex<usize>,
    cv: Condvar,
    max: usize,
}

impl Gate {
    fn new(max: usize) -> Self {
        Gate {
            state: Mutex::new(0),
            cv: Condvar::new(),
            max: max.max(1),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut inflight = self.state.lock().unwrap();
        while *inflight >= self.max {
            inflight = self.cv.wait(inflight).unwrap();
        }
        *inflight += 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut inflight = self.gate.state.lock().unwrap();
        *inflight -= 1;
        self.gate.cv.notify_one();
    }
}

/// Follow a dotted path (`choices.0.message.content`) into a JSON document;
/// numeric segments index arrays.
pub fn extract_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = value;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get(seg)?,
            Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

/// Scan prose for embedded JSON objects and return the first one carrying a
/// numeric value under `key`.
pub fn extract_first_score(text: &str, key: &str) -> Option<f64> {
    for (pos, ch) in text.char_indices() {
        if ch != '{' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            if let Some(v) = map.get(key).and_then(Value::as_f64) {
                return Some(v);
            }
        }
    }
    None
}

/// Clamp a score into [1, 5], logging when the backend strayed out of range.
pub fn clamp_score(value: f64, key: &str) -> f64 {
    if (1.0..=5.0).contains(&value) {
        value
    } else {
        let clamped = value.clamp(1.0, 5.0);
        log::warn!("{key} {value} outside [1, 5]; clamped to {clamped}");
        clamped
    }
}

/// Blocking chat-completion client shared by the remote backends.
pub struct ChatClient {
    http: reqwest::blocking::Client,
    base_url: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    max_retries: u32,
    backoff_base: Duration,
    extraction_path: String,
    gate: Gate,
    log: Option<Mutex<std::fs::File>>,
}

impl ChatClient {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        cfg.validate("remote")?;
        let base_url = cfg.base_url.clone().unwrap();
        let model = cfg.model_name.clone().unwrap();
        let api_key = cfg
            .api_key_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::backend(format!("cannot build http client: {e}")))?;
        let log = match &cfg.log_path {
            Some(path) => Some(Mutex::new(
                OpenOptions::new().create(true).append(true).open(path)?,
            )),
            None => None,
        };
        Ok(ChatClient {
            http,
            base_url,
            model,
            temperature: cfg.temperature,
            api_key,
            max_retries: cfg.max_retries,
            backoff_base: Duration::from_secs_f64(cfg.backoff_base_secs),
            extraction_path: cfg.extraction_path.clone(),
            gate: Gate::new(cfg.max_in_flight),
            log,
        })
    }

    fn log_attempt(&self, record: &Value) {
        if let Some(log) = &self.log {
            if let Ok(mut f) = log.lock() {
                let _ = writeln!(f, "{record}");
            }
        }
    }

    /// POST `body` with up to `max_retries` attempts and exponential backoff.
    /// Returns the parsed response document of the first successful attempt.
    pub fn call_with_retry(&self, body: &Value) -> Result<Value> {
        self.call_validated(body, |v| Ok(v.clone()))
    }

    /// Like [`call_with_retry`](Self::call_with_retry) but an attempt only
    /// succeeds when `validate` accepts the response; rejected payloads are
    /// retried like transport failures.
    pub fn call_validated<T>(
        &self,
        body: &Value,
        validate: impl Fn(&Value) -> Result<T>,
    ) -> Result<T> {
        let _guard = self.gate.acquire();
        let mut attempt_log: Vec<String> = Vec::new();
        for attempt in 0..self.max_retries {
            let outcome = self.single_attempt(body);
            let detail = match &outcome {
                Ok(value) => match validate(value) {
                    Ok(out) => {
                        self.log_attempt(&json!({
                            "attempt": attempt + 1,
                            "url": self.base_url,
                            "authorization": self.api_key.as_ref().map(|_| "***redacted***"),
                            "request": body,
                            "response": value,
                            "ok": true,
                        }));
                        return Ok(out);
                    }
                    Err(e) => e.to_string(),
                },
                Err(e) => e.to_string(),
            };
            attempt_log.push(format!("attempt {}: {detail}", attempt + 1));
            self.log_attempt(&json!({
                "attempt": attempt + 1,
                "url": self.base_url,
                "authorization": self.api_key.as_ref().map(|_| "***redacted***"),
                "request": body,
                "ok": false,
                "error": detail,
            }));
            if attempt + 1 < self.max_retries {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt));
            }
        }
        Err(Error::backend(format!(
            "request failed after {} attempts: [{}]",
            self.max_retries,
            attempt_log.join("; ")
        )))
    }

    fn single_attempt(&self, body: &Value) -> Result<Value> {
        let mut req = self.http.post(&self.base_url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::backend(format!("transport error: {e}")))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| Error::backend(format!("cannot read response body: {e}")))?;
        if !status.is_success() {
            return Err(Error::backend(format!("http status {status}: {text}")));
        }
        serde_json::from_str(&text)
            .map_err(|e| Error::backend(format!("response is not valid JSON: {e}")))
    }

    fn chat_body(&self, prompt: &str, temperature: f64) -> Value {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        })
    }

    /// One chat completion; returns the generated text at the extraction path.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let body = self.chat_body(prompt, self.temperature);
        let path = self.extraction_path.clone();
        self.call_validated(&body, move |value| {
            extract_path(value, &path)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| {
                    Error::backend(format!("no text at extraction path '{path}'"))
                })
        })
    }

    /// Chat completion whose text must satisfy `parse`; a response that fails
    /// to parse is retried and the final error carries the raw payload.
    pub fn complete_parsed<T>(
        &self,
        prompt: &str,
        temperature: f64,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<T> {
        let body = self.chat_body(prompt, temperature);
        let path = self.extraction_path.clone();
        self.call_validated(&body, move |value| {
            let text = extract_path(value, &path)
                .and_then(Value::as_str)
                .ok_or_else(|| {
                    Error::backend(format!("no text at extraction path '{path}'"))
                })?;
            parse(text).map_err(|e| Error::backend(format!("{e}; raw_text: {text}")))
        })
    }
}

const SECTION_MARKERS: [&str; 5] = ["(A)", "(B)", "(C)", "(D)", "(E)"];

/// Split a five-section response into its parts. Returns
/// (motivation, method, experimental_plan, auxiliary, degraded):
/// A feeds motivation, B and C the method, E the plan, D is kept as
/// auxiliary text. When any marker is missing the whole text becomes the
/// method and `degraded` is set.
pub fn parse_sections(text: &str) -> (String, String, String, Option<String>, bool) {
    let mut positions = Vec::with_capacity(5);
    let mut from = 0usize;
    for marker in SECTION_MARKERS {
        match text[from..].find(marker) {
            Some(rel) => {
                let abs = from + rel;
                positions.push(abs);
                from = abs + marker.len();
            }
            None => {
                return (
                    String::new(),
                    text.trim().to_string(),
                    String::new(),
                    None,
                    true,
                );
            }
        }
    }
    let mut sections = Vec::with_capacity(5);
    for i in 0..5 {
        let start = positions[i] + SECTION_MARKERS[i].len();
        let end = if i + 1 < 5 { positions[i + 1] } else { text.len() };
        sections.push(text[start..end].trim().to_string());
    }
    let motivation = sections[0].clone();
    let method = format!("{}\n{}", sections[1], sections[2]);
    let auxiliary = Some(sections[3].clone());
    let plan = sections[4].clone();
    (motivation, method, plan, auxiliary, false)
}

fn draft_from_text(text: &str) -> Result<IdeaDraft> {
    let (motivation, method, plan, auxiliary, degraded) = parse_sections(text);
    if degraded {
        log::warn!("section markers (A)-(E) missing; degraded to whole-text-as-method");
        if method.is_empty() {
            return Err(Error::backend("empty idea text"));
        }
        let mut draft = IdeaDraft::new(
            "(unstructured response)".to_string(),
            method,
            "(unstructured response)".to_string(),
        );
        draft.parse_warning = true;
        return Ok(draft);
    }
    let mut draft = IdeaDraft::new(motivation, method, plan);
    draft.auxiliary = auxiliary;
    Ok(draft)
}

const OUTPUT_FORMAT: &str = "Output Requirements:\n\
Return exactly five sections using these markers:\n\
(A) Core Method Description\n\
(B) Functional Principle\n\
(C) Concrete Workflow\n\
(D) Potential Innovation Directions\n\
(E) Experimental Design\n";

fn doc_metadata(docs: &[&PatentDoc]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&format!("- [{}] {}\n", d.id, d.abstract_text));
    }
    if out.is_empty() {
        out.push_str("(none)\n");
    }
    out
}

fn technical_elements(docs: &[&PatentDoc]) -> String {
    let mut elements: Vec<&str> = docs
        .iter()
        .flat_map(|d| d.features.iter().map(String::as_str))
        .collect();
    elements.sort_unstable();
    elements.dedup();
    if elements.is_empty() {
        "(none)".to_string()
    } else {
        elements.join("; ")
    }
}

fn idea_text(idea: &Idea) -> String {
    format!(
        "(A) {}\n(B) {}\n(C) see method\n(D) {}\n(E) {}",
        idea.motivation,
        idea.method,
        idea.auxiliary.as_deref().unwrap_or("n/a"),
        idea.experimental_plan
    )
}

/// Remote idea generator over the chat client.
pub struct RemoteGenerator {
    client: ChatClient,
}

impl RemoteGenerator {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        Ok(RemoteGenerator {
            client: ChatClient::new(cfg)?,
        })
    }

    pub fn initial_prompt(query: &Query, docs: &[&PatentDoc]) -> String {
        format!(
            "You are an expert in cross-domain innovation. Generate one scientific idea \
             with an experimental validation plan, grounded in the materials below. The idea \
             must address a clear scientific problem and a measurable technical effect.\n\n\
             User Query:\n{}\n\n\
             Extracted technical elements:\n{}\n\n\
             Reference patent-based literature metadata:\n{}\n\
             {OUTPUT_FORMAT}",
            query.text,
            technical_elements(docs),
            doc_metadata(docs),
        )
    }

    pub fn crossover_prompt(
        query: &Query,
        a: &Idea,
        score_a: f64,
        b: &Idea,
        score_b: f64,
        context: &[&PatentDoc],
    ) -> String {
        format!(
            "You are an expert innovation designer. Intelligently fuse two scientific ideas \
             into one superior idea that combines their advantages, guided by the literature \
             context below.\n\n\
             Research Topic:\n{}\n\n\
             Isolation Island Literature Context:\n{}\n\
             Scientific Idea A(score:{score_a:.3}):\n{}\n\n\
             Scientific Idea B(score:{score_b:.3}):\n{}\n\n\
             {OUTPUT_FORMAT}",
            query.text,
            doc_metadata(context),
            idea_text(a),
            idea_text(b),
        )
    }

    pub fn mutation_prompt(query: &Query, idea: &Idea, score: f64, island: &[&PatentDoc]) -> String {
        format!(
            "You are an expert innovation improver. Enhance and mutate the idea below, \
             integrating the out-of-domain literature to enrich its boundaries while keeping \
             it technically sound.\n\n\
             Research Topic:\n{}\n\n\
             Isolation Island Literature Context:\n{}\n\
             Original Idea(score:{score:.3}):\n{}\n\n\
             {OUTPUT_FORMAT}",
            query.text,
            doc_metadata(island),
            idea_text(idea),
        )
    }
}

impl GeneratorBackend for RemoteGenerator {
    fn generate_initial(&self, query: &Query, trajectory_docs: &[&PatentDoc]) -> Result<IdeaDraft> {
        if trajectory_docs.is_empty() {
            return Err(Error::backend("cannot generate from an empty trajectory"));
        }
        let text = self.client.complete(&Self::initial_prompt(query, trajectory_docs))?;
        draft_from_text(&text)
    }

    fn crossover_idea(
        &self,
        query: &Query,
        parent_a: &Idea,
        score_a: f64,
        parent_b: &Idea,
        score_b: f64,
        context_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft> {
        let prompt =
            Self::crossover_prompt(query, parent_a, score_a, parent_b, score_b, context_docs);
        let text = self.client.complete(&prompt)?;
        draft_from_text(&text)
    }

    fn mutate_idea(
        &self,
        query: &Query,
        idea: &Idea,
        score: f64,
        island_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft> {
        if island_docs.is_empty() {
            let mut draft = IdeaDraft::new(
                idea.motivation.clone(),
                idea.method.clone(),
                idea.experimental_plan.clone(),
            );
            draft.genome = idea.genome.clone();
            draft.passthrough = true;
            return Ok(draft);
        }
        let text = self
            .client
            .complete(&Self::mutation_prompt(query, idea, score, island_docs))?;
        draft_from_text(&text)
    }
}

/// Remote judge: one prompt call per reward dimension, each parsed for its
/// score key, out-of-range values clamped with a warning.
pub struct RemoteRewardModel {
    client: ChatClient,
    temperature: f64,
}

impl RemoteRewardModel {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        Ok(RemoteRewardModel {
            client: ChatClient::new(cfg)?,
            temperature: cfg.temperature,
        })
    }

    pub fn novelty_prompt(idea: &Idea) -> String {
        format!(
            "You are a patent examination expert. Evaluate the novelty of the scientific idea \
             below: how original and innovative it is compared to existing research, on a 1-5 \
             scale (5 = groundbreaking, 1 = not original).\n\
             You MUST output your result in valid JSON format only.\n\n\
             Idea content:\n{}\n\n\
             Output Format:\n{{\n\"novelty_score\": <decimal number between 1 and 5>\n}}",
            idea_text(idea),
        )
    }

    pub fn feasibility_prompt(idea: &Idea) -> String {
        format!(
            "You are a patent examination expert. Evaluate the feasibility of the scientific \
             idea below in terms of logic, consistency, and combinatorial reasonableness, on a \
             1-5 scale (5 = fully feasible, 1 = not feasible).\n\
             You MUST output your result in valid JSON format only.\n\n\
             Idea content:\n{}\n\n\
             Output Format:\n{{\n\"feasibility_score\": <decimal number between 1 and 5>\n}}",
            idea_text(idea),
        )
    }

    fn score_dimension(&self, prompt: &str, key: &'static str) -> Result<(f64, String)> {
        self.client.complete_parsed(prompt, self.temperature, move |text| {
            match extract_first_score(text, key) {
                Some(v) => Ok((clamp_score(v, key), text.to_string())),
                None => Err(Error::backend(format!("no {key} object found in response"))),
            }
        })
    }
}

impl RewardBackend for RemoteRewardModel {
    fn score_idea(&self, idea: &Idea) -> Result<RewardResponse> {
        let (novelty, raw_n) = self.score_dimension(&Self::novelty_prompt(idea), "novelty_score")?;
        let (feasibility, raw_f) =
            self.score_dimension(&Self::feasibility_prompt(idea), "feasibility_score")?;
        Ok(RewardResponse {
            novelty_score: novelty,
            feasibility_score: feasibility,
            raw_text: format!("{raw_n}\n---\n{raw_f}"),
        })
    }
}

/// Remote embedder against an embeddings-style endpoint; the vector is read
/// from the extraction path (default layouts use `data.0.embedding`) and
/// normalized to unit length.
pub struct RemoteEmbedder {
    client: ChatClient,
    path: String,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(cfg: &BackendConfig, dim: usize) -> Result<Self> {
        let mut cfg = cfg.clone();
        if cfg.extraction_path == BackendConfig::default().extraction_path {
            cfg.extraction_path = "data.0.embedding".to_string();
        }
        let path = cfg.extraction_path.clone();
        Ok(RemoteEmbedder {
            client: ChatClient::new(&cfg)?,
            path,
            dim,
        })
    }
}

impl EmbedderBackend for RemoteEmbedder {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        if text.is_empty() {
            return Err(Error::backend("cannot embed empty text"));
        }
        let body = json!({ "model": "embedding", "input": text });
        let path = self.path.clone();
        let dim = self.dim;
        self.client.call_validated(&body, move |value| {
            let arr = extract_path(value, &path)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::backend(format!("no embedding at path '{path}'")))?;
            let mut v: Vec<f64> = arr
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::backend("non-numeric embedding entry")))
                .collect::<Result<_>>()?;
            if v.len() != dim {
                return Err(Error::backend(format!(
                    "embedding dimension {} does not match corpus dimension {dim}",
                    v.len()
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::backend("zero-norm embedding"));
            }
            for x in &mut v {
                *x /= norm;
            }
            Ok(v)
        })
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_path_walks_objects_and_arrays() {
        let v: Value = serde_json::json!({
            "choices": [{"message": {"content": "hello"}}]
        });
        assert_eq!(
            extract_path(&v, "choices.0.message.content").unwrap(),
            "hello"
        );
        assert!(extract_path(&v, "choices.1.message").is_none());
        assert!(extract_path(&v, "nope").is_none());
    }

    #[test]
    fn first_valid_score_object_wins() {
        assert_eq!(
            extract_first_score(r#"{"novelty_score": 4.2}"#, "novelty_score"),
            Some(4.2)
        );
        let prose = r#"Sure! Here is my assessment {not json} and then
            {"other": 1} followed by {"novelty_score": 3.5} and {"novelty_score": 9.0}"#;
        assert_eq!(extract_first_score(prose, "novelty_score"), Some(3.5));
        assert_eq!(extract_first_score("no objects here", "novelty_score"), None);
        assert_eq!(
            extract_first_score(r#"{"novelty_score": "high"}"#, "novelty_score"),
            None
        );
    }

    #[test]
    fn clamping_is_applied_outside_range() {
        assert_eq!(clamp_score(7.0, "novelty_score"), 5.0);
        assert_eq!(clamp_score(0.2, "novelty_score"), 1.0);
        assert_eq!(clamp_score(4.2, "novelty_score"), 4.2);
    }

    #[test]
    fn sections_parse_and_degrade() {
        let text = "(A) core idea (B) principle (C) workflow (D) directions (E) plan";
        let (motivation, method, plan, auxiliary, degraded) = parse_sections(text);
        assert!(!degraded);
        assert_eq!(motivation, "core idea");
        assert_eq!(method, "principle\nworkflow");
        assert_eq!(plan, "plan");
        assert_eq!(auxiliary.as_deref(), Some("directions"));

        let (m2, method2, _, _, degraded2) = parse_sections("free-form response");
        assert!(degraded2);
        assert!(m2.is_empty());
        assert_eq!(method2, "free-form response");
    }

    #[test]
    fn prompts_carry_required_slots() {
        let query = Query {
            text: "topic".into(),
            embedding: vec![1.0],
        };
        let docs: Vec<PatentDoc> = vec![crate::litgraph::tests::doc(
            "p1",
            &["feature one"],
            vec![1.0],
            &[],
        )];
        let refs: Vec<&PatentDoc> = docs.iter().collect();
        let p = RemoteGenerator::initial_prompt(&query, &refs);
        assert!(p.contains("Extracted technical elements"));
        assert!(p.contains("feature one"));
        assert!(p.contains("(E) Experimental Design"));

        let idea_a = crate::evolve::tests::bare_idea("a");
        let idea_b = crate::evolve::tests::bare_idea("b");
        let xp = RemoteGenerator::crossover_prompt(&query, &idea_a, 0.75, &idea_b, 0.5, &refs);
        assert!(xp.contains("Scientific Idea A(score:0.750)"));
        assert!(xp.contains("Scientific Idea B(score:0.500)"));
        // both parents' three sections ride along in the payload
        for idea in [&idea_a, &idea_b] {
            assert!(xp.contains(&idea.motivation));
            assert!(xp.contains(&idea.method));
            assert!(xp.contains(&idea.experimental_plan));
        }
        assert!(xp.contains("Isolation Island Literature Context"));

        let mp = RemoteGenerator::mutation_prompt(&query, &idea_a, 0.6, &refs);
        assert!(mp.contains("Isolation Island Literature Context"));

        let np = RemoteRewardModel::novelty_prompt(&idea_a);
        assert!(np.contains("novelty_score"));
        let fp = RemoteRewardModel::feasibility_prompt(&idea_a);
        assert!(fp.contains("feasibility_score"));
    }
}
