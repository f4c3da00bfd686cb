//! Template-based review comments and review rendering.
//!
//! Predicted scores pick the polarity of each comment; evidence graphs fill
//! the slots. Summary and novelty comments verbalize their relation edges,
//! the comparison comment names recommended uncited papers, and the remaining
//! categories get generic comments carrying their score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::background::Posting;
use crate::corpus::{Category, RelationType};
use crate::error::{Error, Result};
use crate::evidence::{recommend_related, EvidenceBundle, RECOMMENDATIONS, SUMMARY_RELATIONS};
use crate::kg::{ElementKey, Entity, KnowledgeGraph};
use crate::scoring::{CategoryScore, ScoreReport};

/// Most relation sentences per comment.
pub const MAX_RELATION_SENTENCES: usize = 5;
/// Most elements listed in a novelty comment.
pub const MAX_LISTED_ELEMENTS: usize = 5;
/// Most comparison entries commented on.
pub const MAX_COMPARISON_ENTRIES: usize = 3;

const COMMENT_SLOTS: [&str; 5] = ["SCORE", "COUNT", "ELEMENTS", "RECOMMENDATIONS", "RELATION_SENTENCES"];
const PHRASE_SLOTS: [&str; 2] = ["HEAD", "TAIL"];
const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Positive exactly for scores above 3.
pub fn select_polarity(score: u8) -> Polarity {
    if score > 3 {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Text(String),
    Slot(String),
}

/// A pattern with `${NAME}` slots, parsed once at load time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    parts: Vec<Part>,
}

impl Template {
    pub fn parse(source: &str, allowed: &[&str]) -> Result<Template> {
        let mut parts = Vec::new();
        let mut rest = source;
        while let Some(start) = rest.find("${") {
            if start > 0 {
                parts.push(Part::Text(rest[..start].to_string()));
            }
            let after = &rest[start + 2..];
            let end = after
                .find('}')
                .ok_or_else(|| Error::Template(format!("unterminated slot in {source:?}")))?;
            let name = &after[..end];
            if !allowed.contains(&name) {
                return Err(Error::Template(format!("unknown slot ${{{name}}} in {source:?}")));
            }
            parts.push(Part::Slot(name.to_string()));
            rest = &after[end + 1..];
        }
        if !rest.is_empty() {
            parts.push(Part::Text(rest.to_string()));
        }
        Ok(Template { source: source.to_string(), parts })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(|p| match p {
            Part::Slot(s) => Some(s.as_str()),
            Part::Text(_) => None,
        })
    }

    /// Fill every slot; a slot without a value is an error. Runs of spaces
    /// left by empty values collapse to one.
    pub fn fill(&self, values: &[(&str, &str)]) -> Result<String> {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                Part::Text(t) => out.push_str(t),
                Part::Slot(name) => {
                    let value = values
                        .iter()
                        .find(|(k, _)| k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| Error::Template(format!("no value for slot ${{{name}}}")))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out.split(' ').filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTemplates {
    pub positive: Vec<Template>,
    pub negative: Vec<Template>,
    pub positive_empty: Vec<Template>,
    pub negative_empty: Vec<Template>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub categories: BTreeMap<Category, CategoryTemplates>,
    pub relation_phrases: BTreeMap<RelationType, Template>,
    /// Which template of a polarity list to use (modulo list length).
    pub choice: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryFile {
    positive: Vec<String>,
    negative: Vec<String>,
    #[serde(default)]
    positive_empty: Vec<String>,
    #[serde(default)]
    negative_empty: Vec<String>,
}

// unknown blocks fail on the Category key; deny_unknown_fields cannot be
// combined with flatten
#[derive(Debug, Deserialize)]
struct TemplateFile {
    relation_phrases: BTreeMap<RelationType, String>,
    #[serde(flatten)]
    categories: BTreeMap<Category, CategoryFile>,
}

impl TemplateSet {
    pub fn parse(text: &str, locus: &str) -> Result<TemplateSet> {
        let file: TemplateFile =
            toml::from_str(text).map_err(|e| Error::Template(format!("{locus}: {}", e.message())))?;
        let compile = |list: &[String]| -> Result<Vec<Template>> {
            list.iter().map(|s| Template::parse(s, &COMMENT_SLOTS)).collect()
        };

        let mut categories = BTreeMap::new();
        for category in Category::ALL {
            let block = file
                .categories
                .get(&category)
                .ok_or_else(|| Error::Template(format!("{locus}: missing [{category}] block")))?;
            let t = CategoryTemplates {
                positive: compile(&block.positive)?,
                negative: compile(&block.negative)?,
                positive_empty: compile(&block.positive_empty)?,
                negative_empty: compile(&block.negative_empty)?,
            };
            if t.positive.is_empty() || t.negative.is_empty() {
                return Err(Error::Template(format!("{locus}: [{category}] needs positive and negative templates")));
            }
            let needs_empty = matches!(
                category,
                Category::Summary | Category::Novelty | Category::MeaningfulComparison
            );
            if needs_empty && (t.positive_empty.is_empty() || t.negative_empty.is_empty()) {
                return Err(Error::Template(format!("{locus}: [{category}] needs no-evidence variants")));
            }
            categories.insert(category, t);
        }

        let mut relation_phrases = BTreeMap::new();
        for (relation, pattern) in &file.relation_phrases {
            relation_phrases.insert(*relation, Template::parse(pattern, &PHRASE_SLOTS)?);
        }
        if let Some(missing) = SUMMARY_RELATIONS.iter().find(|r| !relation_phrases.contains_key(r)) {
            return Err(Error::Template(format!("{locus}: no relation phrase for {missing}")));
        }
        Ok(TemplateSet { categories, relation_phrases, choice: 0 })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TemplateSet> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TemplateSet::parse(&text, &path.display().to_string())
    }

    /// The bundled default templates.
    pub fn builtin() -> TemplateSet {
        TemplateSet::parse(DEFAULT_TEMPLATES, "builtin templates").expect("bundled templates are valid")
    }

    fn pick(&self, category: Category, polarity: Polarity, empty: bool) -> &Template {
        let t = &self.categories[&category];
        let list = match (polarity, empty) {
            (Polarity::Positive, false) => &t.positive,
            (Polarity::Negative, false) => &t.negative,
            (Polarity::Positive, true) => &t.positive_empty,
            (Polarity::Negative, true) => &t.negative_empty,
        };
        let list = if list.is_empty() {
            // generic categories have no separate no-evidence variants
            match polarity {
                Polarity::Positive => &t.positive,
                Polarity::Negative => &t.negative,
            }
        } else {
            list
        };
        &list[self.choice % list.len()]
    }
}

fn entity<'a>(graph: &'a KnowledgeGraph, id: usize) -> Result<&'a Entity> {
    graph
        .entity(id)
        .ok_or_else(|| Error::PreconditionViolation(format!("edge endpoint {id} missing from graph")))
}

/// Verbalize one edge with its relation phrase, using representative
/// surfaces in their original casing.
pub fn realize_relation(edge: &crate::kg::Edge, graph: &KnowledgeGraph, templates: &TemplateSet) -> Result<String> {
    let phrase = templates
        .relation_phrases
        .get(&edge.relation)
        .filter(|_| SUMMARY_RELATIONS.contains(&edge.relation))
        .ok_or(Error::UnsupportedRelation(edge.relation))?;
    let head = entity(graph, edge.head)?;
    let tail = entity(graph, edge.tail)?;
    phrase.fill(&[("HEAD", &head.surface), ("TAIL", &tail.surface)])
}

/// Describable edges of `graph` in element-key order, at most `limit`.
fn relation_sentences(
    graph: &KnowledgeGraph,
    only: Option<&BTreeSet<ElementKey>>,
    templates: &TemplateSet,
    limit: usize,
) -> Result<Vec<String>> {
    let mut edges: Vec<(ElementKey, &crate::kg::Edge)> = graph
        .edges
        .iter()
        .filter(|e| SUMMARY_RELATIONS.contains(&e.relation))
        .map(|e| (graph.edge_key(e), e))
        .filter(|(k, _)| only.is_none_or(|set| set.contains(k)))
        .collect();
    edges.sort_by(|a, b| a.0.cmp(&b.0));
    edges
        .into_iter()
        .take(limit)
        .map(|(_, e)| realize_relation(e, graph, templates))
        .collect()
}

pub fn generate_summary(summary: &KnowledgeGraph, overall_score: u8, templates: &TemplateSet) -> Result<Vec<String>> {
    let polarity = select_polarity(overall_score);
    let sentences = relation_sentences(summary, None, templates, MAX_RELATION_SENTENCES)?;
    let template = templates.pick(Category::Summary, polarity, sentences.is_empty());
    let score = overall_score.to_string();
    let joined = sentences.join(" ");
    Ok(vec![template.fill(&[("SCORE", &score), ("RELATION_SENTENCES", &joined)])?])
}

pub fn generate_novelty(
    novelty_new: &BTreeSet<ElementKey>,
    graph: &KnowledgeGraph,
    score: u8,
    templates: &TemplateSet,
) -> Result<Vec<String>> {
    let polarity = select_polarity(score);
    let template = templates.pick(Category::Novelty, polarity, novelty_new.is_empty());
    let listed: Vec<String> = novelty_new
        .iter()
        .take(MAX_LISTED_ELEMENTS)
        .map(|k| graph.display(k).ok_or_else(|| Error::PreconditionViolation(format!("{k} not in graph"))))
        .collect::<Result<_>>()?;
    let sentences = relation_sentences(graph, Some(novelty_new), templates, MAX_RELATION_SENTENCES)?;
    let count = novelty_new.len().to_string();
    let score = score.to_string();
    let elements = listed.join(", ");
    let relations = sentences.join(" ");
    Ok(vec![template.fill(&[
        ("SCORE", &score),
        ("COUNT", &count),
        ("ELEMENTS", &elements),
        ("RELATION_SENTENCES", &relations),
    ])?])
}

/// One comparison element with the papers recommended for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonItem {
    pub element: String,
    pub recommendations: Vec<Posting>,
}

pub fn generate_comparison(items: &[ComparisonItem], score: u8, templates: &TemplateSet) -> Result<Vec<String>> {
    let polarity = select_polarity(score);
    let score = score.to_string();
    if items.is_empty() {
        let t = templates.pick(Category::MeaningfulComparison, polarity, true);
        return Ok(vec![t.fill(&[("SCORE", &score)])?]);
    }
    let template = templates.pick(Category::MeaningfulComparison, polarity, false);
    items
        .iter()
        .take(MAX_COMPARISON_ENTRIES)
        .map(|item| {
            let recs: Vec<String> = item
                .recommendations
                .iter()
                .map(|p| format!("{} ({})", p.paper_id, p.year))
                .collect();
            let recs = recs.join(", ");
            template.fill(&[("SCORE", &score), ("ELEMENTS", &item.element), ("RECOMMENDATIONS", &recs)])
        })
        .collect()
}

/// Generic comment for a category without structured evidence.
pub fn generate_generic(category: Category, score: u8, templates: &TemplateSet) -> Result<Vec<String>> {
    if !(1..=5).contains(&score) {
        return Err(Error::PreconditionViolation(format!("score {score} outside 1..=5")));
    }
    let template = templates.pick(category, select_polarity(score), false);
    Ok(vec![template.fill(&[("SCORE", &score.to_string())])?])
}

#[derive(Debug, Clone)]
pub struct ReviewDocument {
    pub paper_id: String,
    pub scores: ScoreReport,
    pub comments: BTreeMap<Category, Vec<String>>,
    /// Seconds since the Unix epoch; not rendered and not compared.
    pub generated_at: Option<u64>,
}

impl PartialEq for ReviewDocument {
    fn eq(&self, other: &Self) -> bool {
        self.paper_id == other.paper_id && self.scores == other.scores && self.comments == other.comments
    }
}

impl ReviewDocument {
    pub fn validate(&self) -> Result<()> {
        for category in Category::ALL {
            if self.comments.get(&category).is_none_or(|c| c.is_empty()) {
                return Err(Error::PreconditionViolation(format!("no comment for {category}")));
            }
            if category.is_scoreable() != self.scores.scores.contains_key(&category) {
                return Err(Error::PreconditionViolation(format!("score presence wrong for {category}")));
            }
        }
        if let Some((c, s)) = self.scores.scores.iter().find(|(_, s)| !(1..=5).contains(&s.score)) {
            return Err(Error::PreconditionViolation(format!("{c} score {} outside 1..=5", s.score)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ReviewDocument> {
        let doc: DocJson = serde_json::from_str(text).map_err(|e| Error::from_json("review json", e))?;
        let doc = ReviewDocument {
            paper_id: doc.paper_id,
            scores: ScoreReport {
                scores: doc
                    .scores
                    .into_iter()
                    .map(|(c, s)| {
                        (c, CategoryScore { score: s.score, confidence: s.confidence, probabilities: s.probabilities })
                    })
                    .collect(),
            },
            comments: doc.comments,
            generated_at: None,
        };
        doc.validate()?;
        Ok(doc)
    }
}

pub fn assemble(
    paper_id: &str,
    scores: &ScoreReport,
    evidence: &EvidenceBundle,
    templates: &TemplateSet,
) -> Result<ReviewDocument> {
    let score = |c: Category| {
        scores
            .get(c)
            .map(|s| s.score)
            .ok_or_else(|| Error::PreconditionViolation(format!("no score for {c}")))
    };
    let mut comments = BTreeMap::new();
    for category in Category::ALL {
        let lines = match category {
            Category::Summary => generate_summary(&evidence.summary, score(Category::OverallRecommendation)?, templates)?,
            Category::Novelty => generate_novelty(&evidence.novelty_new, &evidence.graph, score(category)?, templates)?,
            Category::MeaningfulComparison => {
                let items: Vec<ComparisonItem> = evidence
                    .comparison
                    .iter()
                    .take(MAX_COMPARISON_ENTRIES)
                    .map(|entry| {
                        let element = evidence
                            .graph
                            .display(&entry.element)
                            .ok_or_else(|| Error::PreconditionViolation(format!("{} not in graph", entry.element)))?;
                        Ok(ComparisonItem { element, recommendations: recommend_related(entry, RECOMMENDATIONS) })
                    })
                    .collect::<Result<_>>()?;
                generate_comparison(&items, score(category)?, templates)?
            }
            _ => generate_generic(category, score(category)?, templates)?,
        };
        comments.insert(category, lines);
    }
    let scores = ScoreReport {
        scores: Category::SCOREABLE
            .iter()
            .map(|&c| (c, scores.get(c).cloned().expect("checked above")))
            .collect(),
    };
    let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    let doc = ReviewDocument { paper_id: paper_id.to_string(), scores, comments, generated_at };
    doc.validate()?;
    Ok(doc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?} (expected json or markdown)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreJson {
    confidence: f64,
    probabilities: Vec<f64>,
    score: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocJson {
    comments: BTreeMap<Category, Vec<String>>,
    paper_id: String,
    scores: BTreeMap<Category, ScoreJson>,
}

pub fn render(doc: &ReviewDocument, format: Format) -> String {
    match format {
        Format::Json => render_json(doc),
        Format::Markdown => render_markdown(doc),
    }
}

fn render_json(doc: &ReviewDocument) -> String {
    let json = DocJson {
        comments: doc.comments.clone(),
        paper_id: doc.paper_id.clone(),
        scores: doc
            .scores
            .scores
            .iter()
            .map(|(c, s)| {
                (*c, ScoreJson { confidence: s.confidence, probabilities: s.probabilities.clone(), score: s.score })
            })
            .collect(),
    };
    // a Value map sorts its keys
    let value = serde_json::to_value(&json).expect("review serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("review serializes");
    text.push('\n');
    text
}

fn render_markdown(doc: &ReviewDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Review of {}", doc.paper_id);
    for category in Category::ALL {
        let _ = writeln!(out, "\n## {}\n", category.title());
        if let Some(s) = doc.scores.get(category) {
            let probs: Vec<String> = s.probabilities.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "**Score:** {}/5 (confidence {})  ", s.score, s.confidence);
            let _ = writeln!(out, "Probabilities: {}\n", probs.join(", "));
        }
        for line in doc.comments.get(&category).into_iter().flatten() {
            let _ = writeln!(out, "- {line}");
        }
    }
    out
}
