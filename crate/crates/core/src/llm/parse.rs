//! Parsers for every answer format, plus renderers that produce answers in
//! the same format. `parse(render(x)) == x` for well-formed drafts.

use std::collections::{BTreeMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::domain::{word_count, Classification, FacetKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty answer")]
    Empty,
    #[error("block {block} is missing `{field}`")]
    MalformedBlock { block: usize, field: String },
    #[error("section `{section}` has {found} entries")]
    WrongGroupCount { section: String, found: usize },
    #[error("no `Class:` line")]
    NoClassLine,
    #[error("missing <{0}> tag")]
    MissingTag(String),
    #[error("{what}: {found} items, expected {min}..={max}")]
    CountOutOfRange { what: String, found: usize, min: usize, max: usize },
    #[error("no ranking found")]
    NoRankingFound,
    #[error("block {block} breaks a rule: {reason}")]
    Invalid { block: usize, reason: String },
    #[error("facet id `{0}` was not offered")]
    UnknownFacetId(String),
}

fn malformed(block: usize, field: &str) -> ParseError {
    ParseError::MalformedBlock { block, field: field.to_string() }
}

/// Splits `Label: value` when the label is one of `labels` (case-insensitive).
/// Longer labels are tried first.
fn match_label<'l>(line: &str, labels: &[(&'l str, &'l str)]) -> Option<(&'l str, String)> {
    let line = line.trim_start();
    let mut best: Option<(&str, &str, usize)> = None;
    for (label, key) in labels {
        let Some(head) = line.get(..label.len()) else { continue };
        if !head.eq_ignore_ascii_case(label) {
            continue;
        }
        let rest = line[label.len()..].trim_start();
        if rest.starts_with(':') && best.is_none_or(|(_, _, n)| label.len() > n) {
            best = Some((key, label, label.len()));
        }
    }
    best.map(|(key, _, n)| {
        let rest = line[n..].trim_start();
        (key, rest[1..].trim().to_string())
    })
}

fn append(slot: &mut String, more: &str) {
    let more = more.trim();
    if more.is_empty() {
        return;
    }
    if !slot.is_empty() {
        slot.push(' ');
    }
    slot.push_str(more);
}

/// Strips brackets, quotes and trailing punctuation around a facet id.
pub fn clean_id(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| matches!(c, '[' | ']' | '"' | '\'' | '`' | '*' | '(' | ')'))
        .trim_end_matches(['.', ',', ';'])
        .trim()
        .to_string()
}

// ---------------------------------------------------------------- facets

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetDraft {
    pub text: String,
    pub definition: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetTripleDraft {
    pub purpose: FacetDraft,
    pub mechanism: FacetDraft,
    pub evaluation: FacetDraft,
}

impl FacetTripleDraft {
    pub fn get(&self, kind: FacetKind) -> &FacetDraft {
        match kind {
            FacetKind::Purpose => &self.purpose,
            FacetKind::Mechanism => &self.mechanism,
            FacetKind::Evaluation => &self.evaluation,
        }
    }
}

const FACET_FIELDS: [(&str, &str); 6] = [
    ("Purpose", "purpose"),
    ("Purpose Definition", "purpose_definition"),
    ("Mechanism", "mechanism"),
    ("Mechanism Definition", "mechanism_definition"),
    ("Evaluation", "evaluation"),
    ("Evaluation Definition", "evaluation_definition"),
];

static TEXT_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*\**text\s+(\d+)\s*\**\s*:?\s*$").unwrap());

/// One triple per `Text <n>` block, in order.
pub fn parse_facet_extraction(raw: &str) -> Result<Vec<FacetTripleDraft>, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut blocks: Vec<BTreeMap<&str, String>> = Vec::new();
    let mut last: Option<&str> = None;
    for line in raw.lines() {
        if TEXT_HEADER.is_match(line) {
            blocks.push(BTreeMap::new());
            last = None;
            continue;
        }
        if let Some((key, value)) = match_label(line, &FACET_FIELDS) {
            if blocks.is_empty() {
                blocks.push(BTreeMap::new());
            }
            let block = blocks.last_mut().unwrap();
            if block.contains_key(key) {
                blocks.push(BTreeMap::new());
            }
            blocks.last_mut().unwrap().insert(key, value);
            last = Some(key);
        } else if let (Some(key), Some(block)) = (last, blocks.last_mut()) {
            append(block.entry(key).or_default(), line);
        }
    }
    if blocks.is_empty() {
        return Err(malformed(1, "purpose"));
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(i, mut b)| {
            let mut take = |key: &str| b.remove(key).filter(|v| !v.is_empty()).ok_or_else(|| malformed(i + 1, key));
            Ok(FacetTripleDraft {
                purpose: FacetDraft { text: take("purpose")?, definition: take("purpose_definition")? },
                mechanism: FacetDraft { text: take("mechanism")?, definition: take("mechanism_definition")? },
                evaluation: FacetDraft { text: take("evaluation")?, definition: take("evaluation_definition")? },
            })
        })
        .collect()
}

pub fn render_facet_extraction(drafts: &[FacetTripleDraft]) -> String {
    let mut out = String::new();
    for (i, d) in drafts.iter().enumerate() {
        out.push_str(&format!(
            "Text {}\nPurpose: {}\nPurpose Definition: {}\nMechanism: {}\nMechanism Definition: {}\nEvaluation: {}\nEvaluation Definition: {}\n\n",
            i + 1,
            d.purpose.text,
            d.purpose.definition,
            d.mechanism.text,
            d.mechanism.definition,
            d.evaluation.text,
            d.evaluation.definition
        ));
    }
    out
}

// ------------------------------------------------------- analogy queries

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyDraft {
    /// `Different Topic` / `Different Subarea` label; empty for same-topic entries.
    pub context: String,
    pub analogy: String,
    pub purpose: String,
    pub mechanism: String,
    pub query: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyQueriesDraft {
    pub same_topic: String,
    pub same_subarea: String,
    pub near: Vec<AnalogyDraft>,
    pub far: Vec<AnalogyDraft>,
    pub very_far: Vec<AnalogyDraft>,
}

pub const MAX_QUERY_WORDS: usize = 5;

const ANALOGY_FIELDS: [(&str, &str); 7] = [
    ("Same Topic", "same_topic"),
    ("Same Subarea", "same_subarea"),
    ("Different Topic", "context"),
    ("Different Subarea", "context"),
    ("Analogy", "analogy"),
    ("Purpose", "purpose"),
    ("Mechanism", "mechanism"),
];
const QUERY_LABEL: (&str, &str) = ("Query for Relevant Research Papers", "query");

static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[?(\d+)\]?\.\s*(.*)$").unwrap());

/// Parses the three analogy sections, each of which must hold `per_group` entries.
pub fn parse_analogy_queries(raw: &str, per_group: usize) -> Result<AnalogyQueriesDraft, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut labels: Vec<(&str, &str)> = ANALOGY_FIELDS.to_vec();
    labels.push(QUERY_LABEL);
    let mut out = AnalogyQueriesDraft::default();
    let mut section: Option<usize> = None;
    let mut entries: [Vec<BTreeMap<&str, String>>; 3] = Default::default();
    let mut last: Option<&str> = None;
    for line in raw.lines() {
        let lower = line.trim().to_ascii_lowercase();
        if lower.starts_with("analogies within same topic") {
            section = Some(0);
            last = None;
            continue;
        }
        if lower.starts_with("analogies within same subarea") {
            section = Some(1);
            last = None;
            continue;
        }
        if lower.starts_with("analogies across different subarea") {
            section = Some(2);
            last = None;
            continue;
        }
        let Some(s) = section else { continue };
        let (body, numbered) = match NUMBERED.captures(line) {
            Some(c) => (c.get(2).unwrap().as_str().to_string(), true),
            None => (line.to_string(), false),
        };
        if numbered {
            entries[s].push(BTreeMap::new());
        }
        match match_label(&body, &labels) {
            Some(("same_topic", v)) => out.same_topic = v,
            Some(("same_subarea", v)) => out.same_subarea = v,
            Some((key, value)) => {
                if entries[s].is_empty() || entries[s].last().unwrap().contains_key(key) {
                    entries[s].push(BTreeMap::new());
                }
                entries[s].last_mut().unwrap().insert(key, value);
                last = Some(key);
            }
            None => {
                if let (Some(key), Some(e)) = (last, entries[s].last_mut()) {
                    append(e.entry(key).or_default(), &body);
                }
            }
        }
    }
    let names = ["same topic", "same subarea", "different subareas"];
    let mut block = 0;
    let mut groups: Vec<Vec<AnalogyDraft>> = Vec::new();
    for (s, list) in entries.into_iter().enumerate() {
        let list: Vec<_> = list.into_iter().filter(|e| !e.is_empty()).collect();
        if list.len() != per_group {
            return Err(ParseError::WrongGroupCount { section: names[s].to_string(), found: list.len() });
        }
        let mut drafts = Vec::new();
        for mut e in list {
            block += 1;
            let mut take = |key: &str| e.remove(key).filter(|v| !v.is_empty()).ok_or_else(|| malformed(block, key));
            let draft = AnalogyDraft {
                context: if s == 0 { String::new() } else { take("context").unwrap_or_default() },
                analogy: take("analogy")?,
                purpose: take("purpose")?,
                mechanism: take("mechanism")?,
                query: take("query")?,
            };
            if word_count(&draft.query) > MAX_QUERY_WORDS {
                warn!(query = %draft.query, "analogy query longer than {MAX_QUERY_WORDS} words");
            }
            drafts.push(draft);
        }
        groups.push(drafts);
    }
    out.very_far = groups.pop().unwrap();
    out.far = groups.pop().unwrap();
    out.near = groups.pop().unwrap();
    Ok(out)
}

pub fn render_analogy_queries(d: &AnalogyQueriesDraft) -> String {
    let entry = |n: usize, a: &AnalogyDraft, context: Option<&str>| {
        let mut s = format!("{n}. ");
        if let Some(label) = context {
            s.push_str(&format!("{label}: {}\n", a.context));
        }
        s.push_str(&format!(
            "Analogy: {}\nPurpose: {}\nMechanism: {}\nQuery for Relevant Research Papers: {}\n",
            a.analogy, a.purpose, a.mechanism, a.query
        ));
        s
    };
    let mut out = String::from("Analogies within same topic of computer science research:\n");
    out.push_str(&format!("Same Topic: {}\n", d.same_topic));
    for (i, a) in d.near.iter().enumerate() {
        out.push_str(&entry(i + 1, a, None));
    }
    out.push_str("\nAnalogies within same subarea of computer science research, but across different topics of computer science research:\n");
    out.push_str(&format!("Same Subarea: {}\n", d.same_subarea));
    for (i, a) in d.far.iter().enumerate() {
        out.push_str(&entry(i + 1, a, Some("Different Topic")));
    }
    out.push_str("\nAnalogies across different subareas of computer science research:\n");
    for (i, a) in d.very_far.iter().enumerate() {
        out.push_str(&entry(i + 1, a, Some("Different Subarea")));
    }
    out
}

// ---------------------------------------------------- shorten / summary

static ANSWER_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(answer|query|shortened query|shorter query|simplified query)\s*:\s*").unwrap());

/// The first non-empty line, without label or quotes.
pub fn parse_shortened_query(raw: &str) -> Result<String, ParseError> {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).ok_or(ParseError::Empty)?;
    let line = ANSWER_PREFIX.replace(line, "");
    let q = line.trim_matches(|c: char| matches!(c, '"' | '\'' | '*' | '`')).trim();
    if q.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(q.to_string())
}

pub fn render_shortened_query(query: &str) -> String {
    format!("{query}\n")
}

pub fn parse_summary(raw: &str) -> Result<String, ParseError> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(s.to_string())
}

pub fn render_summary(summary: &str) -> String {
    format!("{summary}\n")
}

// ------------------------------------------------------------- ideas

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionDraft {
    pub analogy: String,
    pub idea: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaDraft {
    pub analogy: String,
    pub purpose_text: String,
    pub purpose_id: String,
    pub mechanism_text: String,
    pub mechanism_id: String,
    pub evaluation_text: String,
    pub evaluation_id: String,
    pub twist: String,
    pub relevance: String,
    pub initial_idea: String,
    pub issues: String,
    pub address: String,
    pub new_idea: String,
    pub expanded_idea: String,
}

impl IdeaDraft {
    pub fn id(&self, kind: FacetKind) -> &str {
        match kind {
            FacetKind::Purpose => &self.purpose_id,
            FacetKind::Mechanism => &self.mechanism_id,
            FacetKind::Evaluation => &self.evaluation_id,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaBlock {
    /// Candidate analogies; kept for logs only.
    pub options: Vec<OptionDraft>,
    pub best: Vec<IdeaDraft>,
}

const IDEA_FIELDS: [(&str, &str); 13] = [
    ("Purpose Text", "purpose_text"),
    ("Purpose ID", "purpose_id"),
    ("Mechanism Text", "mechanism_text"),
    ("Mechanism ID", "mechanism_id"),
    ("Evaluation Text", "evaluation_text"),
    ("Evaluation ID", "evaluation_id"),
    ("Imaginative Twist to Add to Facet Combination", "twist"),
    ("Initial Research Idea", "initial_idea"),
    ("Issues with Initial Idea", "issues"),
    ("How to Address Issues", "address"),
    ("New Research Idea", "new_idea"),
    ("Expanded New Research Idea", "expanded_idea"),
    ("Idea", "option_idea"),
];

static OPTION_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*option\s*\[?\d+\]?\.\s*analogy\s*:\s*(.*)$").unwrap());
static BEST_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*best\s*(\d+)\.\s*analogy\s*:\s*(.*)$").unwrap());
static RELEVANCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*how idea will be relevant to [^:]*:\s*(.*)$").unwrap());

enum Current {
    None,
    Option,
    Best,
}

/// Parses an idea answer and requires exactly `expected` `Best <i>.` blocks.
pub fn parse_idea_block(raw: &str, expected: usize) -> Result<IdeaBlock, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut options: Vec<OptionDraft> = Vec::new();
    let mut bests: Vec<BTreeMap<&str, String>> = Vec::new();
    let mut current = Current::None;
    let mut last: Option<&str> = None;
    for line in raw.lines() {
        if let Some(c) = OPTION_START.captures(line) {
            options.push(OptionDraft { analogy: c[1].trim().to_string(), idea: String::new() });
            current = Current::Option;
            last = Some("analogy");
            continue;
        }
        if let Some(c) = BEST_START.captures(line) {
            let mut b = BTreeMap::new();
            b.insert("analogy", c[2].trim().to_string());
            bests.push(b);
            current = Current::Best;
            last = Some("analogy");
            continue;
        }
        if line.trim_end().ends_with("::") {
            current = Current::None;
            last = None;
            continue;
        }
        if let Some(c) = RELEVANCE.captures(line) {
            if let (Current::Best, Some(b)) = (&current, bests.last_mut()) {
                b.insert("relevance", c[1].trim().to_string());
                last = Some("relevance");
            }
            continue;
        }
        match (&current, match_label(line, &IDEA_FIELDS)) {
            (Current::Option, Some(("option_idea", v))) => {
                options.last_mut().unwrap().idea = v;
                last = Some("option_idea");
            }
            (Current::Best, Some((key, v))) if key != "option_idea" => {
                bests.last_mut().unwrap().insert(key, v);
                last = Some(key);
            }
            (Current::Option, None) => {
                let o = options.last_mut().unwrap();
                match last {
                    Some("option_idea") => append(&mut o.idea, line),
                    _ => append(&mut o.analogy, line),
                }
            }
            (Current::Best, None) => {
                if let Some(key) = last {
                    append(bests.last_mut().unwrap().entry(key).or_default(), line);
                }
            }
            _ => {}
        }
    }
    if bests.len() != expected {
        return Err(malformed(bests.len() + 1, "best"));
    }
    let best = bests
        .into_iter()
        .enumerate()
        .map(|(i, mut b)| {
            let block = i + 1;
            let mut req = |key: &str| b.remove(key).filter(|v| !v.is_empty()).ok_or_else(|| malformed(block, key));
            let purpose_id = clean_id(&req("purpose_id")?);
            let mechanism_id = clean_id(&req("mechanism_id")?);
            let evaluation_id = clean_id(&req("evaluation_id")?);
            let new_idea = req("new_idea")?;
            let expanded_idea = req("expanded_idea")?;
            let analogy = req("analogy")?;
            let mut opt = |key: &str| b.remove(key).unwrap_or_default();
            Ok(IdeaDraft {
                analogy,
                purpose_text: opt("purpose_text"),
                purpose_id,
                mechanism_text: opt("mechanism_text"),
                mechanism_id,
                evaluation_text: opt("evaluation_text"),
                evaluation_id,
                twist: opt("twist"),
                relevance: opt("relevance"),
                initial_idea: opt("initial_idea"),
                issues: opt("issues"),
                address: opt("address"),
                new_idea,
                expanded_idea,
            })
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    Ok(IdeaBlock { options, best })
}

pub fn render_idea_block(block: &IdeaBlock, topic: &str) -> String {
    let mut out = format!("{} Analogies Comparing Papers and Associated Ideas::\n", block.options.len());
    for (i, o) in block.options.iter().enumerate() {
        out.push_str(&format!("Option {}. Analogy: {}\nIdea: {}\n", i + 1, o.analogy, o.idea));
    }
    out.push_str(&format!(
        "\n{} Best Analogies and the Novel/Feasible/Relevant/Specific Research Ideas that they Inspire::\n",
        block.best.len()
    ));
    for (i, d) in block.best.iter().enumerate() {
        out.push_str(&format!("Best {}. Analogy: {}\n", i + 1, d.analogy));
        out.push_str(&format!("Purpose Text: {}\nPurpose ID: {}\n", d.purpose_text, d.purpose_id));
        out.push_str(&format!("Mechanism Text: {}\nMechanism ID: {}\n", d.mechanism_text, d.mechanism_id));
        out.push_str(&format!("Evaluation Text: {}\nEvaluation ID: {}\n", d.evaluation_text, d.evaluation_id));
        out.push_str(&format!("Imaginative Twist to Add to Facet Combination: {}\n", d.twist));
        out.push_str(&format!("How Idea will be Relevant to {}: {}\n", topic.replace(':', " "), d.relevance));
        out.push_str(&format!("Initial Research Idea: {}\n", d.initial_idea));
        out.push_str(&format!("Issues with Initial Idea: {}\n", d.issues));
        out.push_str(&format!("How to Address Issues: {}\n", d.address));
        out.push_str(&format!("New Research Idea: {}\n", d.new_idea));
        out.push_str(&format!("Expanded New Research Idea: {}\n\n", d.expanded_idea));
    }
    out
}

// ----------------------------------------------------------- novelty

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoveltyDraft {
    pub classification: Classification,
    pub review: String,
}

static CLASS_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^[ \t]*[-*]*[ \t]*\**class\**[ \t]*:[ \t]*(.*)$").unwrap());
static REVIEW_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)^[ \t]*[-*]*[ \t]*\**review\**[ \t]*:[ \t]*(.*)$").unwrap());

pub fn parse_novelty(raw: &str) -> Result<NoveltyDraft, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let caps = CLASS_LINE.captures(raw).ok_or(ParseError::NoClassLine)?;
    let classification: Classification = caps[1].parse().map_err(|_| ParseError::NoClassLine)?;
    let after = &raw[caps.get(0).unwrap().end()..];
    let review = after
        .lines()
        .skip_while(|l| l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    let review = match REVIEW_LINE.captures(&review) {
        Some(c) => c[1].trim().to_string(),
        None => review.trim().to_string(),
    };
    let n = word_count(&review);
    if !(60..=100).contains(&n) {
        tracing::debug!(words = n, "novelty review outside 60-100 words");
    }
    Ok(NoveltyDraft { classification, review })
}

pub fn render_novelty(d: &NoveltyDraft) -> String {
    format!("- Class: {}\n- Review: {}\n", d.classification.prompt_label(), d.review)
}

// ---------------------------------------------------------- keywords

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordsDraft {
    pub keywords: Vec<String>,
    pub titles: Vec<String>,
}

fn tagged<'a>(raw: &'a str, tag: &str) -> Result<&'a str, ParseError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = raw.find(&open).ok_or_else(|| ParseError::MissingTag(tag.to_string()))? + open.len();
    let end = raw[start..].find(&close).ok_or_else(|| ParseError::MissingTag(format!("/{tag}")))?;
    Ok(&raw[start..start + end])
}

static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#""([^"]+)""#).unwrap());

fn string_list(body: &str) -> Vec<String> {
    if let Ok(list) = serde_json::from_str::<Vec<String>>(body.trim()) {
        return list.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    let quoted: Vec<String> = QUOTED.captures_iter(body).map(|c| c[1].trim().to_string()).collect();
    if !quoted.is_empty() {
        return quoted;
    }
    body.split(['\n', ','])
        .map(|s| s.trim().trim_start_matches(['-', '*', '[']).trim_end_matches(']').trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// `keyword_range` is enforced; title counts only need to be non-zero.
pub fn parse_keywords_titles(raw: &str, keyword_range: (usize, usize)) -> Result<KeywordsDraft, ParseError> {
    let keywords = string_list(tagged(raw, "keywords")?);
    let titles = string_list(tagged(raw, "titles")?);
    let (min, max) = keyword_range;
    if keywords.len() < min || keywords.len() > max {
        return Err(ParseError::CountOutOfRange { what: "keywords".into(), found: keywords.len(), min, max });
    }
    if titles.is_empty() {
        return Err(ParseError::CountOutOfRange { what: "titles".into(), found: 0, min: 1, max: usize::MAX });
    }
    for k in &keywords {
        let n = word_count(k);
        if !(3..=6).contains(&n) {
            tracing::debug!(keyword = %k, words = n, "keyword phrase outside 3-6 words");
        }
    }
    Ok(KeywordsDraft { keywords, titles })
}

pub fn render_keywords_titles(d: &KeywordsDraft) -> String {
    format!(
        "<keywords>\n{}\n</keywords>\n\n<titles>\n{}\n</titles>\n",
        serde_json::to_string(&d.keywords).unwrap(),
        serde_json::to_string(&d.titles).unwrap()
    )
}

// ------------------------------------------------------- idea facets

pub fn parse_idea_facets(raw: &str) -> Result<String, ParseError> {
    let body = tagged(raw, "facets")?.trim();
    if body.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(body.to_string())
}

pub fn render_idea_facets(facets: &str) -> String {
    format!("<facets>\n{facets}\n</facets>\n")
}

// ----------------------------------------------------------- ranking

static INDEX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[\s*(\d+)\s*\]").unwrap());

/// Indices in answer order, out-of-range and repeated ones dropped, then
/// every missing index appended in ascending order.
pub fn parse_ranking(raw: &str, num: usize) -> Result<Vec<usize>, ParseError> {
    let mut seen = HashSet::new();
    let mut order: Vec<usize> = INDEX
        .captures_iter(raw)
        .filter_map(|c| c[1].parse::<usize>().ok())
        .filter(|&i| i < num && seen.insert(i))
        .collect();
    if order.is_empty() {
        return Err(ParseError::NoRankingFound);
    }
    order.extend((0..num).filter(|i| !seen.contains(i)));
    Ok(order)
}

pub fn render_ranking(order: &[usize]) -> String {
    order.iter().map(|i| format!("[{i}]")).collect::<Vec<_>>().join(" > ")
}

// ------------------------------------------------------- suggestions

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionDraft {
    pub kind: FacetKind,
    pub removed_text: String,
    pub removed_id: String,
    pub added_text: String,
    pub added_id: String,
    pub idea_text: String,
    pub why_more_novel: String,
    pub why_useful: String,
}

static SUGGESTION_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(\d+)\.\s*(removed\s+\w+\s*:.*)$").unwrap());

/// Exactly three blocks: purpose, mechanism, evaluation.
pub fn parse_suggestions(raw: &str) -> Result<Vec<SuggestionDraft>, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut blocks: Vec<Vec<String>> = Vec::new();
    for line in raw.lines() {
        if let Some(c) = SUGGESTION_START.captures(line) {
            blocks.push(vec![c[2].to_string()]);
        } else if let Some(b) = blocks.last_mut() {
            b.push(line.to_string());
        }
    }
    if blocks.len() != 3 {
        return Err(malformed(blocks.len().min(3) + 1, "block"));
    }
    blocks
        .into_iter()
        .zip(FacetKind::ALL)
        .enumerate()
        .map(|(i, (lines, kind))| parse_suggestion_block(i + 1, kind, &lines))
        .collect()
}

fn parse_suggestion_block(block: usize, kind: FacetKind, lines: &[String]) -> Result<SuggestionDraft, ParseError> {
    let k = kind.label();
    let labels_owned = [
        (format!("Removed {k}"), "removed_text"),
        (format!("Removed {k} ID"), "removed_id"),
        (format!("Added {k}"), "added_text"),
        (format!("Added {k} ID"), "added_id"),
        ("More Novel Idea".to_string(), "idea_text"),
        ("Why Idea is More Novel".to_string(), "why_more_novel"),
        ("Why Idea is Useful".to_string(), "why_useful"),
    ];
    let labels: Vec<(&str, &str)> = labels_owned.iter().map(|(l, k)| (l.as_str(), *k)).collect();
    let mut fields: BTreeMap<&str, String> = BTreeMap::new();
    let mut last = None;
    for (n, line) in lines.iter().enumerate() {
        match match_label(line, &labels) {
            Some((key, v)) => {
                fields.insert(key, v);
                last = Some(key);
            }
            None if n == 0 => return Err(malformed(block, &format!("removed_{}", kind.as_str()))),
            None => {
                if let Some(key) = last {
                    append(fields.entry(key).or_default(), line);
                }
            }
        }
    }
    let mut take = |key: &str| fields.remove(key).filter(|v| !v.is_empty()).ok_or_else(|| malformed(block, key));
    Ok(SuggestionDraft {
        kind,
        removed_text: take("removed_text")?,
        removed_id: clean_id(&take("removed_id")?),
        added_text: take("added_text")?,
        added_id: clean_id(&take("added_id")?),
        idea_text: take("idea_text")?,
        why_more_novel: take("why_more_novel")?,
        why_useful: take("why_useful")?,
    })
}

pub fn render_suggestions(drafts: &[SuggestionDraft]) -> String {
    let mut out = String::new();
    for (i, d) in drafts.iter().enumerate() {
        let k = d.kind.label();
        out.push_str(&format!(
            "{}. Removed {k}: {}\nRemoved {k} ID: [{}]\nAdded {k}: {}\nAdded {k} ID: [{}]\nMore Novel Idea: {}\nWhy Idea is More Novel: {}\nWhy Idea is Useful: {}\n",
            i + 1,
            d.removed_text,
            d.removed_id,
            d.added_text,
            d.added_id,
            d.idea_text,
            d.why_more_novel,
            d.why_useful
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FACETS: &str = "Text 1\nPurpose: To support elementary creative writing\nPurpose Definition: Helping young pupils write stories.\nMechanism: story graph scaffolding\nMechanism Definition: A visual map of plot events.\nEvaluation: lab user study\nEvaluation Definition: A controlled session with participants.\n\nText 2\nPurpose: To provide clinical decision support\nPurpose Definition: Helping doctors choose treatments.\nMechanism: collaborative filtering\nMechanism Definition: Recommending items from similar users.\nEvaluation: semi-structured interviews\nEvaluation Definition: Open conversations guided by prompts.\n";

    #[test]
    fn facet_extraction_two_texts() {
        let got = parse_facet_extraction(FACETS).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].mechanism.text, "collaborative filtering");
        assert_eq!(got[0].purpose.definition, "Helping young pupils write stories.");
    }

    #[test]
    fn facet_extraction_missing_definition() {
        let broken = FACETS.replace("Evaluation Definition: A controlled session with participants.\n", "");
        assert_eq!(parse_facet_extraction(&broken).unwrap_err(), malformed(1, "evaluation_definition"));
    }

    #[test]
    fn long_facet_parses_but_fails_validation() {
        let raw = FACETS.replace("lab user study", "a very long lab user study with many participants");
        let got = parse_facet_extraction(&raw).unwrap();
        let e = &got[0].evaluation;
        assert!(crate::domain::check_facet(FacetKind::Evaluation, &e.text, &e.definition).is_err());
    }

    #[test]
    fn facet_continuation_lines_are_joined() {
        let raw = FACETS.replace("Helping young pupils write stories.", "Helping young pupils\n  write stories.");
        assert_eq!(parse_facet_extraction(&raw).unwrap()[0].purpose.definition, "Helping young pupils write stories.");
    }

    fn analogy_answer(counts: [usize; 3], long_query: bool) -> String {
        let mk = |n: usize, ctx: &str| AnalogyDraft {
            context: ctx.to_string(),
            analogy: format!("A is to B as C{n} is to D{n} because both involve E."),
            purpose: format!("to do thing {n}"),
            mechanism: format!("method {n}"),
            query: if long_query && n == 0 { "one two three four five six seven".into() } else { format!("thing {n} method") },
        };
        render_analogy_queries(&AnalogyQueriesDraft {
            same_topic: "creative writing".into(),
            same_subarea: "human computer interaction".into(),
            near: (0..counts[0]).map(|n| mk(n, "")).collect(),
            far: (0..counts[1]).map(|n| mk(n, "education")).collect(),
            very_far: (0..counts[2]).map(|n| mk(n, "robotics")).collect(),
        })
    }

    #[test]
    fn analogy_queries_four_each() {
        let got = parse_analogy_queries(&analogy_answer([4, 4, 4], true), 4).unwrap();
        assert_eq!((got.near.len(), got.far.len(), got.very_far.len()), (4, 4, 4));
        assert_eq!(got.far[0].context, "education");
        assert_eq!(word_count(&got.near[0].query), 7);
    }

    #[test]
    fn analogy_queries_wrong_count() {
        let err = parse_analogy_queries(&analogy_answer([4, 3, 4], false), 4).unwrap_err();
        assert_eq!(err, ParseError::WrongGroupCount { section: "same subarea".into(), found: 3 });
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(
            parse_ranking("[2] > [1] > [5] > [3] > [0] > [8] > [6] > [7] > [4] > [9]", 10).unwrap(),
            vec![2, 1, 5, 3, 0, 8, 6, 7, 4, 9]
        );
        assert_eq!(parse_ranking("[0]", 1).unwrap(), vec![0]);
        assert_eq!(parse_ranking("[1] > [1] > [0]", 3).unwrap(), vec![1, 0, 2]);
        assert_eq!(parse_ranking("nothing", 3).unwrap_err(), ParseError::NoRankingFound);
        assert_eq!(parse_ranking("[7] > [2]", 3).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn novelty_examples() {
        let d = parse_novelty("Class: not novel\nReview: The idea is not novel because [2] already does it.").unwrap();
        assert_eq!(d.classification, Classification::NotNovel);
        assert_eq!(d.review, "The idea is not novel because [2] already does it.");
        let d = parse_novelty("Class: Novel\nReview: x").unwrap();
        assert_eq!((d.classification, d.review.as_str()), (Classification::Novel, "x"));
        assert_eq!(parse_novelty("The idea is fine.").unwrap_err(), ParseError::NoClassLine);
        let d = parse_novelty("- Class: [not novel]\n- Review: Close to [0].").unwrap();
        assert_eq!(d.classification, Classification::NotNovel);
    }

    #[test]
    fn keyword_examples() {
        let raw = "<keywords>\n[\"a b c\", \"d e f\", \"g h i\", \"j k l\"]\n</keywords>\n<titles>\n[\"T1\", \"T2\", \"T3\", \"T4\"]\n</titles>";
        let d = parse_keywords_titles(raw, (3, 6)).unwrap();
        assert_eq!((d.keywords.len(), d.titles.len()), (4, 4));
        let two = "<keywords>[\"a b c\", \"d e f\"]</keywords><titles>[\"T\"]</titles>";
        assert!(matches!(parse_keywords_titles(two, (3, 6)), Err(ParseError::CountOutOfRange { found: 2, .. })));
        let open = "<keywords>[\"a\",\"b\",\"c\"]</keywords><titles>[\"T\"]";
        assert_eq!(parse_keywords_titles(open, (3, 6)).unwrap_err(), ParseError::MissingTag("/titles".into()));
    }

    fn suggestions() -> Vec<SuggestionDraft> {
        FacetKind::ALL
            .iter()
            .map(|&kind| SuggestionDraft {
                kind,
                removed_text: format!("old {kind}"),
                removed_id: format!("{kind}-old-000000001"),
                added_text: format!("new {kind}"),
                added_id: format!("{kind}-new-000000002"),
                idea_text: "A new idea.".into(),
                why_more_novel: "Nobody did it.".into(),
                why_useful: "It helps.".into(),
            })
            .collect()
    }

    #[test]
    fn suggestion_examples() {
        let raw = render_suggestions(&suggestions());
        let got = parse_suggestions(&raw).unwrap();
        assert_eq!(got.iter().map(|s| s.kind).collect::<Vec<_>>(), FacetKind::ALL.to_vec());
        assert_eq!(got[0].added_id, "purpose-new-000000002");
        let wrong = raw.replace("2. Removed Mechanism:", "2. Removed Purpose:");
        assert_eq!(parse_suggestions(&wrong).unwrap_err(), malformed(2, "removed_mechanism"));
    }

    #[test]
    fn idea_block_expects_count() {
        let d = IdeaDraft {
            analogy: "A is to B".into(),
            purpose_id: "[purpose-x-1]".into(),
            mechanism_id: "mechanism-y-2".into(),
            evaluation_id: "evaluation-z-3".into(),
            new_idea: "Idea.".into(),
            expanded_idea: "Longer idea.".into(),
            ..Default::default()
        };
        let block = IdeaBlock { options: vec![], best: vec![d.clone(), d] };
        let raw = render_idea_block(&block, "topic");
        let got = parse_idea_block(&raw, 2).unwrap();
        assert_eq!(got.best[0].purpose_id, "purpose-x-1");
        assert!(matches!(parse_idea_block(&raw, 3), Err(ParseError::MalformedBlock { .. })));
    }

    #[test]
    fn shorten_strips_labels() {
        assert_eq!(parse_shortened_query("Shortened query: \"story graphs\"\n").unwrap(), "story graphs");
        assert_eq!(parse_shortened_query("\n  story graphs").unwrap(), "story graphs");
    }
    mod props {
        use super::*;
        use proptest::prelude::*;

        fn phrase() -> impl Strategy<Value = String> {
            prop::collection::vec("[a-z]{1,9}", 1..12).prop_map(|w| w.join(" "))
        }

        fn sentence() -> impl Strategy<Value = String> {
            (phrase(), prop::sample::select(vec![".", "!", "?", ""])).prop_map(|(p, end)| format!("{p}{end}"))
        }

        fn facet_id(kind: FacetKind) -> impl Strategy<Value = String> {
            ("[a-z]{1,8}", "[0-9]{9}").prop_map(move |(s, n)| format!("{kind}-{s}-{n}"))
        }

        fn facet_draft() -> impl Strategy<Value = FacetDraft> {
            (phrase(), sentence()).prop_map(|(text, definition)| FacetDraft { text, definition })
        }

        fn triple() -> impl Strategy<Value = FacetTripleDraft> {
            (facet_draft(), facet_draft(), facet_draft())
                .prop_map(|(purpose, mechanism, evaluation)| FacetTripleDraft { purpose, mechanism, evaluation })
        }

        fn analogy(context: bool) -> impl Strategy<Value = AnalogyDraft> {
            (phrase(), sentence(), phrase(), phrase(), phrase()).prop_map(move |(c, analogy, purpose, mechanism, query)| {
                AnalogyDraft { context: if context { c } else { String::new() }, analogy, purpose, mechanism, query }
            })
        }

        fn idea() -> impl Strategy<Value = IdeaDraft> {
            (
                (sentence(), phrase(), facet_id(FacetKind::Purpose), phrase(), facet_id(FacetKind::Mechanism)),
                (phrase(), facet_id(FacetKind::Evaluation), sentence(), sentence(), sentence()),
                (sentence(), sentence(), sentence(), sentence()),
            )
                .prop_map(|(a, b, c)| IdeaDraft {
                    analogy: a.0,
                    purpose_text: a.1,
                    purpose_id: a.2,
                    mechanism_text: a.3,
                    mechanism_id: a.4,
                    evaluation_text: b.0,
                    evaluation_id: b.1,
                    twist: b.2,
                    relevance: b.3,
                    initial_idea: b.4,
                    issues: c.0,
                    address: c.1,
                    new_idea: c.2,
                    expanded_idea: c.3,
                })
        }

        fn suggestion(kind: FacetKind) -> impl Strategy<Value = SuggestionDraft> {
            (phrase(), facet_id(kind), phrase(), facet_id(kind), sentence(), sentence(), sentence()).prop_map(
                move |(removed_text, removed_id, added_text, added_id, idea_text, why_more_novel, why_useful)| {
                    SuggestionDraft { kind, removed_text, removed_id, added_text, added_id, idea_text, why_more_novel, why_useful }
                },
            )
        }

        proptest! {
            #[test]
            fn facet_extraction_round_trips(d in prop::collection::vec(triple(), 1..6)) {
                prop_assert_eq!(parse_facet_extraction(&render_facet_extraction(&d)).unwrap(), d);
            }

            #[test]
            fn analogy_queries_round_trip(
                n in 1usize..5,
                same_topic in phrase(),
                same_subarea in phrase(),
                pool in prop::collection::vec((analogy(false), analogy(true), analogy(true)), 4),
            ) {
                let d = AnalogyQueriesDraft {
                    same_topic,
                    same_subarea,
                    near: pool.iter().take(n).map(|p| p.0.clone()).collect(),
                    far: pool.iter().take(n).map(|p| p.1.clone()).collect(),
                    very_far: pool.iter().take(n).map(|p| p.2.clone()).collect(),
                };
                prop_assert_eq!(parse_analogy_queries(&render_analogy_queries(&d), n).unwrap(), d);
            }

            #[test]
            fn shortened_query_round_trips(q in phrase()) {
                prop_assert_eq!(parse_shortened_query(&render_shortened_query(&q)).unwrap(), q);
            }

            #[test]
            fn summary_round_trips(s in sentence()) {
                prop_assert_eq!(parse_summary(&render_summary(&s)).unwrap(), s);
            }

            #[test]
            fn idea_block_round_trips(
                best in prop::collection::vec(idea(), 1..4),
                options in prop::collection::vec((sentence(), sentence()), 0..7),
                topic in phrase(),
            ) {
                let block = IdeaBlock {
                    options: options.into_iter().map(|(analogy, idea)| OptionDraft { analogy, idea }).collect(),
                    best,
                };
                prop_assert_eq!(parse_idea_block(&render_idea_block(&block, &topic), block.best.len()).unwrap(), block);
            }

            #[test]
            fn novelty_round_trips(novel in any::<bool>(), review in sentence()) {
                let d = NoveltyDraft {
                    classification: if novel { Classification::Novel } else { Classification::NotNovel },
                    review,
                };
                prop_assert_eq!(parse_novelty(&render_novelty(&d)).unwrap(), d);
            }

            #[test]
            fn keywords_round_trip(
                keywords in prop::collection::vec(phrase(), 3..=6),
                titles in prop::collection::vec(phrase(), 1..5),
            ) {
                let d = KeywordsDraft { keywords, titles };
                prop_assert_eq!(parse_keywords_titles(&render_keywords_titles(&d), (3, 6)).unwrap(), d);
            }

            #[test]
            fn idea_facets_round_trip(lines in prop::collection::vec(sentence(), 1..6)) {
                let f = lines.join("\n");
                prop_assert_eq!(parse_idea_facets(&render_idea_facets(&f)).unwrap(), f);
            }

            #[test]
            fn ranking_round_trips(order in (1usize..30).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())) {
                prop_assert_eq!(parse_ranking(&render_ranking(&order), order.len()).unwrap(), order);
            }

            #[test]
            fn ranking_repair_is_a_permutation(raw in "[\\[\\]0-9 >a-z]{0,80}", num in 1usize..25) {
                if let Ok(order) = parse_ranking(&raw, num) {
                    let mut sorted = order.clone();
                    sorted.sort_unstable();
                    prop_assert_eq!(sorted, (0..num).collect::<Vec<_>>());
                }
            }

            #[test]
            fn suggestions_round_trip(
                p in suggestion(FacetKind::Purpose),
                m in suggestion(FacetKind::Mechanism),
                e in suggestion(FacetKind::Evaluation),
            ) {
                let d = vec![p, m, e];
                prop_assert_eq!(parse_suggestions(&render_suggestions(&d)).unwrap(), d);
            }
        }
    }
}
