//! OpenAI-compatible chat-completions backend.

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use pseudobridge_core::synth::{ArtifactKind, GenerationBackend, OfflineBackend, QualityScore, RefineContext, SynthError};
use pseudobridge_core::Sample;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::templates::{fill, TemplateError, Templates};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    /// Endpoint root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Model used for scoring; defaults to `model`.
    pub evaluator_model: Option<String>,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Retries after the first attempt on 5xx, 429, and connection failures.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    pub template_dir: Option<PathBuf>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            evaluator_model: None,
            token_env: "PSEUDOBRIDGE_API_KEY".into(),
            temperature: 0.2,
            max_tokens: 2048,
            timeout_secs: 60,
            max_retries: 3,
            backoff_ms: 500,
            template_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    agent: ureq::Agent,
    config: RemoteConfig,
    token: Option<String>,
    templates: Templates,
}

fn template_error(e: TemplateError) -> SynthError {
    SynthError::Transport { attempts: 0, status: None, message: e.to_string() }
}

/// Removes a surrounding markdown code fence, if any.
pub fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let body = rest.split_once('\n').map_or("", |(_, b)| b);
    body.strip_suffix("```").unwrap_or(body).trim_end_matches('\n')
}

/// Reads the five rubric integers from a JSON object, tolerating prose or
/// a code fence around it.
pub fn parse_score(text: &str) -> Result<QualityScore, SynthError> {
    let t = strip_fence(text);
    let object = match (t.find('{'), t.rfind('}')) {
        (Some(a), Some(b)) if a < b => &t[a..=b],
        _ => return Err(SynthError::ScorePayload(excerpt(text))),
    };
    let value: Value = serde_json::from_str(object).map_err(|e| SynthError::ScorePayload(e.to_string()))?;
    let mut values = [0i64; 5];
    for (slot, name) in values.iter_mut().zip(QualityScore::DIMENSIONS) {
        *slot = value
            .get(name)
            .and_then(Value::as_i64)
            .ok_or_else(|| SynthError::ScorePayload(format!("missing integer {name}")))?;
    }
    QualityScore::new(values)
}

/// Accepts `{"variants": [...]}`, a bare JSON array, or fenced code blocks.
pub fn parse_variants(text: &str) -> Vec<String> {
    let t = strip_fence(text);
    let parsed: Option<Value> = match (t.find(['{', '[']), t.rfind(['}', ']'])) {
        (Some(a), Some(b)) if a < b => serde_json::from_str(&t[a..=b]).ok(),
        _ => None,
    };
    let list = parsed.and_then(|v| match v {
        Value::Array(a) => Some(a),
        Value::Object(mut o) => match o.remove("variants") {
            Some(Value::Array(a)) => Some(a),
            _ => None,
        },
        _ => None,
    });
    if let Some(list) = list {
        return list.iter().filter_map(Value::as_str).map(|s| strip_fence(s).to_string()).collect();
    }
    let mut out = Vec::new();
    let mut parts = text.split("```");
    parts.next();
    while let Some(block) = parts.next() {
        let body = block.split_once('\n').map_or("", |(_, b)| b).trim_end();
        if !body.is_empty() {
            out.push(body.to_string());
        }
        parts.next();
    }
    out
}

fn excerpt(text: &str) -> String {
    let t: String = text.chars().take(120).collect();
    if t.len() < text.len() {
        format!("{t}...")
    } else {
        t
    }
}

impl RemoteBackend {
    /// Reads the token from the configured environment variable; a missing
    /// variable means requests go out without authorization.
    pub fn new(config: RemoteConfig, templates: Templates) -> Self {
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        Self::with_token(config, templates, token)
    }

    pub fn with_token(config: RemoteConfig, templates: Templates, token: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
        Self { agent, config, token, templates }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// One chat completion with retries; returns the first choice's content.
    pub fn chat(&self, model: &str, prompt: &str) -> Result<String, SynthError> {
        let body = json!({
            "model": model,
            "messages": [
                {"role": "system", "content": self.templates.system.trim()},
                {"role": "user", "content": prompt},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let mut request = self.agent.post(&self.endpoint()).set("Content-Type", "application/json");
            if let Some(token) = &self.token {
                request = request.set("Authorization", &format!("Bearer {token}"));
            }
            let (status, message) = match request.send_json(body.clone()) {
                Ok(response) => return self.content(response, attempts),
                Err(ureq::Error::Status(code, response)) => {
                    let text = response.into_string().unwrap_or_default();
                    if code < 500 && code != 429 {
                        return Err(SynthError::Transport { attempts, status: Some(code), message: excerpt(&text) });
                    }
                    (Some(code), excerpt(&text))
                }
                Err(ureq::Error::Transport(t)) => (None, t.to_string()),
            };
            if attempts > self.config.max_retries {
                return Err(SynthError::Transport { attempts, status, message });
            }
            let delay = self.config.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
            thread::sleep(Duration::from_millis(delay));
        }
    }

    fn content(&self, response: ureq::Response, attempts: u32) -> Result<String, SynthError> {
        let status = response.status();
        let malformed = |message: String| SynthError::Transport { attempts, status: Some(status), message };
        let value: Value = response.into_json().map_err(|e| malformed(format!("malformed completion body: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| malformed("completion body has no choices[0].message.content".into()))
    }

    fn evaluator(&self) -> &str {
        self.config.evaluator_model.as_deref().unwrap_or(&self.config.model)
    }

    pub fn pseudocode_prompt(&self, sample: &Sample) -> Result<String, TemplateError> {
        fill(&self.templates.pseudocode, "pseudocode", &[("query", &sample.query), ("code", &sample.code)])
    }

    pub fn variants_prompt(&self, pseudo_code: &str, original_code: &str, n: usize) -> Result<String, TemplateError> {
        let n = n.to_string();
        fill(&self.templates.variants, "variants", &[("pseudo_code", pseudo_code), ("code", original_code), ("n", &n)])
    }

    pub fn evaluate_prompt(&self, kind: ArtifactKind, candidate: &str, ctx: &RefineContext<'_>) -> Result<String, TemplateError> {
        match kind {
            ArtifactKind::Pseudocode => fill(
                &self.templates.evaluate_pseudocode,
                "evaluate_pseudocode",
                &[("query", ctx.query), ("code", ctx.code), ("pseudo_code", candidate)],
            ),
            ArtifactKind::Variant => fill(
                &self.templates.evaluate_variant,
                "evaluate_variant",
                &[("pseudo_code", ctx.pseudo_code.unwrap_or("")), ("code", ctx.code), ("candidate", candidate)],
            ),
        }
    }

    pub fn refine_prompt(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        score: &QualityScore,
        ctx: &RefineContext<'_>,
    ) -> Result<String, TemplateError> {
        let scores = serde_json::to_string(score).expect("scores serialize");
        match kind {
            ArtifactKind::Pseudocode => fill(
                &self.templates.refine_pseudocode,
                "refine_pseudocode",
                &[("query", ctx.query), ("code", ctx.code), ("pseudo_code", candidate), ("scores", &scores)],
            ),
            ArtifactKind::Variant => fill(
                &self.templates.refine_variant,
                "refine_variant",
                &[
                    ("pseudo_code", ctx.pseudo_code.unwrap_or("")),
                    ("code", ctx.code),
                    ("candidate", candidate),
                    ("scores", &scores),
                ],
            ),
        }
    }
}

impl GenerationBackend for RemoteBackend {
    fn generate_pseudocode(&self, sample: &Sample) -> Result<String, SynthError> {
        let prompt = self.pseudocode_prompt(sample).map_err(template_error)?;
        Ok(strip_fence(&self.chat(&self.config.model, &prompt)?).to_string())
    }

    fn generate_variants(&self, pseudo_code: &str, original_code: &str, n: usize) -> Result<Vec<String>, SynthError> {
        let prompt = self.variants_prompt(pseudo_code, original_code, n).map_err(template_error)?;
        let mut out = parse_variants(&self.chat(&self.config.model, &prompt)?);
        out.truncate(n);
        Ok(out)
    }

    /// Re-prompts once when the answer is not a valid score object.
    fn evaluate(&self, kind: ArtifactKind, candidate: &str, context: &RefineContext<'_>) -> Result<QualityScore, SynthError> {
        let prompt = self.evaluate_prompt(kind, candidate, context).map_err(template_error)?;
        match parse_score(&self.chat(self.evaluator(), &prompt)?) {
            Ok(score) => Ok(score),
            Err(_) => parse_score(&self.chat(self.evaluator(), &prompt)?),
        }
    }

    fn refine(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        score: &QualityScore,
        context: &RefineContext<'_>,
    ) -> Result<String, SynthError> {
        let prompt = self.refine_prompt(kind, candidate, score, context).map_err(template_error)?;
        Ok(strip_fence(&self.chat(&self.config.model, &prompt)?).to_string())
    }
}

/// The backend selected by configuration.
#[derive(Debug)]
pub enum Backend {
    Offline(OfflineBackend),
    Remote(RemoteBackend),
}

impl Backend {
    fn inner(&self) -> &dyn GenerationBackend {
        match self {
            Self::Offline(b) => b,
            Self::Remote(b) => b,
        }
    }
}

impl GenerationBackend for Backend {
    fn generate_pseudocode(&self, sample: &Sample) -> Result<String, SynthError> {
        self.inner().generate_pseudocode(sample)
    }

    fn generate_variants(&self, pseudo_code: &str, original_code: &str, n: usize) -> Result<Vec<String>, SynthError> {
        self.inner().generate_variants(pseudo_code, original_code, n)
    }

    fn evaluate(&self, kind: ArtifactKind, candidate: &str, context: &RefineContext<'_>) -> Result<QualityScore, SynthError> {
        self.inner().evaluate(kind, candidate, context)
    }

    fn refine(
        &self,
        kind: ArtifactKind,
        candidate: &str,
        score: &QualityScore,
        context: &RefineContext<'_>,
    ) -> Result<String, SynthError> {
        self.inner().refine(kind, candidate, score, context)
    }
}
