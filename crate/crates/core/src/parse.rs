//! Decoding model answers into frame predictions.
//!
//! Text answers go through a fixed ladder, strictest first, and the step
//! that succeeded is recorded as the prediction's [`DecodePath`]:
//!
//! 1. `clean_json`: the whole reply is a JSON object with the exact
//!    expected key and a valid value.
//! 2. `repaired_json`: code fences stripped, the first balanced `{...}`
//!    taken, single quotes and trailing commas tolerated, keys matched
//!    case-insensitively, values normalized.
//! 3. `fuzzy_name` (frame-name answers only): a candidate name appears in
//!    the text as whole tokens, compared exactly and then ignoring case
//!    and underscores. Earliest occurrence wins, then the longest name.
//! 4. `ordinal` (Artifacts numbers and QA letters): the first standalone
//!    label after the last `Answer` cue.
//!
//! Anything else is `failed`. A decoded frame is always one of the
//! prompt's candidates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::backends::ModelResponse;
use crate::promptkit::{AnswerSchema, LabelMap, RenderedPrompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodePath {
    CleanJson,
    RepairedJson,
    FuzzyName,
    Ordinal,
    LogprobArgmax,
    /// Single-candidate shortcut; no model call was made.
    AutoSingleton,
    Failed,
}

impl DecodePath {
    pub const ALL: [DecodePath; 7] = [
        DecodePath::CleanJson,
        DecodePath::RepairedJson,
        DecodePath::FuzzyName,
        DecodePath::Ordinal,
        DecodePath::LogprobArgmax,
        DecodePath::AutoSingleton,
        DecodePath::Failed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecodePath::CleanJson => "clean_json",
            DecodePath::RepairedJson => "repaired_json",
            DecodePath::FuzzyName => "fuzzy_name",
            DecodePath::Ordinal => "ordinal",
            DecodePath::LogprobArgmax => "logprob_argmax",
            DecodePath::AutoSingleton => "auto_singleton",
            DecodePath::Failed => "failed",
        }
    }
}

impl fmt::Display for DecodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecodePath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecodePath::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown decode path `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub predicted_frame: Option<String>,
    /// Option label the frame was decoded from, if any.
    pub label: Option<String>,
    pub decode_path: DecodePath,
    pub raw_text: String,
}

impl Prediction {
    pub fn failed(instance_id: &str, raw_text: &str) -> Self {
        Prediction {
            instance_id: instance_id.to_string(),
            predicted_frame: None,
            label: None,
            decode_path: DecodePath::Failed,
            raw_text: raw_text.to_string(),
        }
    }

    fn decoded(prompt: &RenderedPrompt, raw: &str, frame: &str, label: Option<&str>, path: DecodePath) -> Self {
        Prediction {
            instance_id: prompt.instance_id.clone(),
            predicted_frame: Some(frame.to_string()),
            label: label.map(str::to_string),
            decode_path: path,
            raw_text: raw.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("no logprob for label `{0}`")]
    MissingLabel(String),
    #[error("label map is empty")]
    NoLabels,
}

/// Decodes a backend response against the prompt it answers.
pub fn parse_response(response: &ModelResponse, prompt: &RenderedPrompt) -> Prediction {
    match &response.label_logprobs {
        Some(lp) => match decode_logprobs(lp, &prompt.label_map) {
            Ok((label, frame)) => Prediction {
                instance_id: prompt.instance_id.clone(),
                predicted_frame: Some(frame),
                label: Some(label),
                decode_path: DecodePath::LogprobArgmax,
                raw_text: response.raw_text.clone(),
            },
            Err(_) => Prediction::failed(&prompt.instance_id, &response.raw_text),
        },
        None => parse_text(&response.raw_text, prompt),
    }
}

/// Argmax over the label logprobs; ties go to the earlier label in the
/// prompt. Returns (label, frame).
pub fn decode_logprobs(logprobs: &BTreeMap<String, f64>, labels: &LabelMap) -> Result<(String, String), ParseError> {
    let mut best: Option<(&str, &str, f64)> = None;
    for (label, frame) in labels.iter() {
        let lp = *logprobs.get(label).ok_or_else(|| ParseError::MissingLabel(label.to_string()))?;
        if best.is_none_or(|(_, _, b)| lp > b) {
            best = Some((label, frame, lp));
        }
    }
    best.map(|(l, f, _)| (l.to_string(), f.to_string())).ok_or(ParseError::NoLabels)
}

fn expected_key(schema: AnswerSchema) -> Option<&'static str> {
    match schema {
        AnswerSchema::FrameNameJson => Some("frame_Name"),
        AnswerSchema::FrameOptionJson => Some("frame_Option"),
        AnswerSchema::DefOptionJson => Some("frame_definition_Option"),
        _ => None,
    }
}

pub fn parse_text(raw: &str, prompt: &RenderedPrompt) -> Prediction {
    let schema = prompt.expected_answer_schema;
    if let Some(key) = expected_key(schema) {
        if let Some(p) = strict_json(raw, prompt, key) {
            return p;
        }
        if let Some(p) = repaired_json(raw, prompt, key) {
            return p;
        }
    }
    match schema {
        AnswerSchema::FrameNameJson => {
            if let Some(frame) = find_name_in_text(raw, &prompt.candidates) {
                return Prediction::decoded(prompt, raw, &frame, None, DecodePath::FuzzyName);
            }
        }
        AnswerSchema::OrdinalAnswer | AnswerSchema::LetterAnswer => {
            if let Some((label, frame)) = label_after_cue(raw, &prompt.label_map, schema) {
                return Prediction::decoded(prompt, raw, &frame, Some(&label), DecodePath::Ordinal);
            }
        }
        _ => {}
    }
    Prediction::failed(&prompt.instance_id, raw)
}

fn strict_json(raw: &str, prompt: &RenderedPrompt, key: &str) -> Option<Prediction> {
    let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(raw.trim()) else {
        return None;
    };
    let value = obj.get(key)?.as_str()?;
    if prompt.expected_answer_schema == AnswerSchema::FrameNameJson {
        let frame = prompt.candidates.iter().find(|c| *c == value)?;
        Some(Prediction::decoded(prompt, raw, frame, None, DecodePath::CleanJson))
    } else {
        let frame = prompt.label_map.get(value)?;
        Some(Prediction::decoded(prompt, raw, frame, Some(value), DecodePath::CleanJson))
    }
}

fn repaired_json(raw: &str, prompt: &RenderedPrompt, key: &str) -> Option<Prediction> {
    let obj = extract_object(raw)?;
    let get = |k: &str| -> Option<String> {
        obj.iter().find(|(name, _)| name.eq_ignore_ascii_case(k)).and_then(|(_, v)| match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        })
    };
    let decoded = |frame: String, label: Option<&str>| {
        Some(Prediction::decoded(prompt, raw, &frame, label, DecodePath::RepairedJson))
    };

    if prompt.expected_answer_schema == AnswerSchema::FrameNameJson {
        let value = get(key)?;
        return match_name(&value, &prompt.candidates).and_then(|f| decoded(f, None));
    }
    if let Some(label) = get(key).and_then(|v| normalize_label(&v, &prompt.label_map)) {
        let frame = prompt.label_map.get(&label)?.to_string();
        return decoded(frame, Some(&label));
    }
    // An invalid option letter next to a valid frame name still names the
    // frame the model meant.
    if prompt.expected_answer_schema == AnswerSchema::FrameOptionJson {
        let name = get("frame_Name")?;
        let frame = match_name(&name, &prompt.candidates)?;
        let label = prompt.label_map.label_of(&frame).map(str::to_string);
        return decoded(frame, label.as_deref());
    }
    None
}

/// The first balanced `{...}` in the text (after removing code fences),
/// parsed leniently.
pub fn extract_object(raw: &str) -> Option<Map<String, Value>> {
    let text = strip_fences(raw);
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find('{') {
        let start = search_from + rel;
        if let Some(end) = balanced_end(&text[start..]) {
            let candidate = &text[start..start + end];
            if let Some(obj) = lenient_object(candidate) {
                return Some(obj);
            }
        }
        search_from = start + 1;
    }
    None
}

fn strip_fences(raw: &str) -> String {
    raw.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n")
}

/// Byte length of the balanced brace group starting at `s[0] == '{'`.
fn balanced_end(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn lenient_object(text: &str) -> Option<Map<String, Value>> {
    if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(text) {
        return Some(m);
    }
    let mut fixed = drop_trailing_commas(text);
    if !fixed.contains('"') {
        fixed = fixed.replace('\'', "\"");
    }
    match serde_json::from_str::<Value>(&fixed) {
        Ok(Value::Object(m)) => Some(m),
        _ => None,
    }
}

fn drop_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Accepts `B`, `b`, ` B.`, `B)`, `Option B`, `B. Frame: X` for label `B`.
fn normalize_label(value: &str, labels: &LabelMap) -> Option<String> {
    let v = value.trim();
    let upper = v.to_ascii_uppercase();
    if labels.get(&upper).is_some() {
        return Some(upper);
    }
    let stripped = upper.strip_prefix("OPTION").map(str::trim_start).unwrap_or(&upper);
    let token: String = stripped.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
    labels.get(&token).map(|_| token)
}

fn normalize_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn match_name(value: &str, candidates: &[String]) -> Option<String> {
    let value = value.trim();
    if let Some(c) = candidates.iter().find(|c| *c == value) {
        return Some(c.clone());
    }
    let norm = normalize_name(value);
    candidates.iter().find(|c| normalize_name(c) == norm).cloned()
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Earliest whole-token occurrence of any candidate; longer names win ties.
fn earliest<'a>(
    haystack: &str,
    needles: impl Iterator<Item = (&'a String, String)>,
    boundary: fn(char) -> bool,
) -> Option<String> {
    let mut best: Option<(usize, usize, String)> = None;
    for (candidate, needle) in needles {
        if needle.is_empty() {
            continue;
        }
        let mut from = 0;
        while let Some(rel) = haystack[from..].find(&needle) {
            let pos = from + rel;
            let before = haystack[..pos].chars().next_back();
            let after = haystack[pos + needle.len()..].chars().next();
            if before.is_none_or(|c| !boundary(c)) && after.is_none_or(|c| !boundary(c)) {
                let better = match &best {
                    None => true,
                    Some((p, len, _)) => pos < *p || (pos == *p && needle.len() > *len),
                };
                if better {
                    best = Some((pos, needle.len(), candidate.clone()));
                }
                break;
            }
            from = pos + needle.len().max(1);
        }
    }
    best.map(|(_, _, c)| c)
}

fn find_name_in_text(raw: &str, candidates: &[String]) -> Option<String> {
    if let Some(found) = earliest(raw, candidates.iter().map(|c| (c, c.clone())), is_word) {
        return Some(found);
    }
    let norm = normalize_name(raw);
    earliest(&norm, candidates.iter().map(|c| (c, normalize_name(c))), char::is_alphanumeric)
}

fn label_after_cue(raw: &str, labels: &LabelMap, schema: AnswerSchema) -> Option<(String, String)> {
    let lower = raw.to_ascii_lowercase();
    let tail = match lower.rfind("answer") {
        Some(i) => &raw[i + "answer".len()..],
        None => raw,
    };
    let tokens = tail.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty());
    for token in tokens {
        let hit = match schema {
            AnswerSchema::OrdinalAnswer => {
                token.bytes().all(|b| b.is_ascii_digit()) && matches!(token.parse::<u32>(), Ok(1..=43))
            }
            _ => token.bytes().all(|b| b.is_ascii_uppercase()),
        };
        if hit {
            let key = token.trim_start_matches('0');
            if let Some(frame) = labels.get(key) {
                return Some((key.to_string(), frame.to_string()));
            }
        }
    }
    None
}

/// Reads `{"frame": ..., "definition": ...}` from a definition-generation
/// reply. Returns the definition text.
pub fn parse_definition(raw: &str) -> Option<String> {
    let obj = extract_object(raw)?;
    let def = obj.iter().find(|(k, _)| k.eq_ignore_ascii_case("definition")).and_then(|(_, v)| v.as_str())?;
    let def = def.split_whitespace().collect::<Vec<_>>().join(" ");
    (!def.is_empty()).then_some(def)
}
