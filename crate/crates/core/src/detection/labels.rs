//! Canonical ingredient labels and parsing of free-text model answers.

/// Leading words dropped before singularizing.
const LEADING_WORDS: &[&str] = &["a", "an", "the", "some", "fresh", "ripe", "whole", "raw"];

/// Applied after singularizing. Targets must be fixed points of normalization.
const SYNONYMS: &[(&str, &str)] = &[
    ("scallion", "green onion"),
    ("spring onion", "green onion"),
    ("red onion", "onion"),
    ("white onion", "onion"),
    ("yellow onion", "onion"),
    ("cherry tomato", "tomato"),
    ("roma tomato", "tomato"),
    ("plum tomato", "tomato"),
    ("hass avocado", "avocado"),
    ("lemon wedge", "lemon"),
    ("coriander", "cilantro"),
    ("coriander leaf", "cilantro"),
    ("jalapeno", "jalapeño"),
    ("jalapeno pepper", "jalapeño"),
    ("jalapeño pepper", "jalapeño"),
    ("chile", "chili"),
    ("chili pepper", "chili"),
    ("capsicum", "bell pepper"),
    ("aubergine", "eggplant"),
    ("courgette", "zucchini"),
    ("garbanzo bean", "chickpea"),
];

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("leaves", "leaf"),
    ("loaves", "loaf"),
    ("halves", "half"),
    ("knives", "knife"),
    ("cloves", "clove"),
    ("olives", "olive"),
    ("chives", "chive"),
];

fn singularize(word: &str) -> String {
    if let Some((_, s)) = IRREGULAR_PLURALS.iter().find(|(p, _)| *p == word) {
        return (*s).to_string();
    }
    if word.chars().count() <= 3 || ["ss", "us", "is"].iter().any(|e| word.ends_with(e)) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["oes", "ches", "shes", "xes", "sses", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    match word.strip_suffix('s') {
        Some(stem) => stem.to_string(),
        None => word.to_string(),
    }
}

/// Lowercases, trims, drops articles and quantities, singularizes the last
/// word and applies the synonym table. `None` when nothing is left.
///
/// One pass can expose another plural or punctuation (e.g. `aa-s'`), so
/// passes repeat until the label stops changing.
pub fn normalize_label(raw: &str) -> Option<String> {
    let mut current = normalize_once(raw)?;
    for _ in 0..8 {
        let next = normalize_once(&current)?;
        if next == current {
            break;
        }
        current = next;
    }
    Some(current)
}

fn normalize_once(raw: &str) -> Option<String> {
    let mut text = raw.to_lowercase();
    // drop parenthesized remarks
    while let (Some(open), Some(close)) = (text.find('('), text.find(')')) {
        if close < open {
            break;
        }
        text.replace_range(open..=close, " ");
    }
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() || c == ' ' || c == '-' || c == '\'' { c } else { ' ' })
        .collect();
    let mut words: Vec<&str> = cleaned
        .split_whitespace()
        .map(|w| w.trim_matches(|c| c == '-' || c == '\''))
        .filter(|w| !w.is_empty())
        .collect();
    while let Some(first) = words.first() {
        if LEADING_WORDS.contains(first) || first.chars().all(|c| c.is_ascii_digit()) {
            words.remove(0);
        } else {
            break;
        }
    }
    let last = words.pop()?;
    let last = singularize(last);
    let last = last.trim_end_matches(['-', '\'']);
    if !last.is_empty() {
        words.push(last);
    }
    if words.is_empty() {
        return None;
    }
    let joined = words.join(" ");
    let canonical = SYNONYMS
        .iter()
        .find(|(from, _)| *from == joined)
        .map(|(_, to)| (*to).to_string())
        .unwrap_or(joined);
    Some(canonical)
}

/// One item pulled out of a model answer, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLabel {
    pub text: String,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable model response: {0}")]
pub struct Unparseable(pub String);

/// Items longer than this many words are prose, not labels.
const MAX_LABEL_WORDS: usize = 4;

fn split_confidence(item: &str) -> (String, Option<f64>) {
    let t = item.trim();
    if let Some(open) = t.rfind('(') {
        if t.ends_with(')') {
            let inner = t[open + 1..t.len() - 1].trim().trim_end_matches('%');
            if let Ok(v) = inner.parse::<f64>() {
                let v = if t[open..].contains('%') { v / 100.0 } else { v };
                return (t[..open].trim().to_string(), Some(v));
            }
        }
    }
    (t.to_string(), None)
}

fn strip_bullet(line: &str) -> &str {
    let t = line.trim_start();
    let t = t.trim_start_matches(['-', '*', '•', '·']);
    let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return r.trim_start();
        }
    }
    t.trim_start()
}

fn parse_json(text: &str) -> Result<Vec<RawLabel>, Unparseable> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|_| Unparseable(text.to_string()))?;
    let items = value.as_array().ok_or_else(|| Unparseable(text.to_string()))?;
    items
        .iter()
        .map(|item| match item {
            serde_json::Value::String(s) => Ok(RawLabel {
                text: s.clone(),
                confidence: None,
            }),
            serde_json::Value::Object(map) => {
                let label = map
                    .get("label")
                    .or_else(|| map.get("name"))
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Unparseable(text.to_string()))?;
                Ok(RawLabel {
                    text: label.to_string(),
                    confidence: map.get("confidence").and_then(|v| v.as_f64()),
                })
            }
            _ => Err(Unparseable(text.to_string())),
        })
        .collect()
}

/// Accepts a JSON array, bulleted or numbered lines, or comma/semicolon
/// separated text. An empty answer is an empty list.
pub fn parse_response(text: &str) -> Result<Vec<RawLabel>, Unparseable> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        return parse_json(trimmed);
    }
    let mut out = Vec::new();
    for line in trimmed.lines() {
        let line = strip_bullet(line);
        let line = match line.split_once(':') {
            Some((_, rest)) => rest,
            None => line,
        };
        for item in line.split([',', ';']) {
            let item = item.trim().trim_end_matches('.');
            let item = item.strip_prefix("and ").unwrap_or(item).trim();
            if item.is_empty() {
                continue;
            }
            let (label, confidence) = split_confidence(item);
            if label.split_whitespace().count() > MAX_LABEL_WORDS
                || label.contains(['?', '!'])
                || label.contains(". ")
            {
                return Err(Unparseable(text.to_string()));
            }
            out.push(RawLabel {
                text: label,
                confidence,
            });
        }
    }
    Ok(out)
}
