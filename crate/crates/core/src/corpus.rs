//! Paper annotation records, review labels and target-score derivation.
//!
//! A paper is one self-contained JSON document holding tokenized sections
//! together with the entity mentions, coreference clusters and relations
//! produced by an upstream information-extraction system. Review labels live
//! in a separate per-corpus document.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Abstract,
    Conclusion,
    RelatedWork,
    Body,
}

impl SectionKind {
    pub const ALL: [SectionKind; 4] = [
        SectionKind::Abstract,
        SectionKind::Conclusion,
        SectionKind::RelatedWork,
        SectionKind::Body,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Abstract => "abstract",
            SectionKind::Conclusion => "conclusion",
            SectionKind::RelatedWork => "related_work",
            SectionKind::Body => "body",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Task,
    Method,
    EvaluationMetric,
    Material,
    OtherScientificTerm,
    Generic,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::Task,
        EntityType::Method,
        EntityType::EvaluationMetric,
        EntityType::Material,
        EntityType::OtherScientificTerm,
        EntityType::Generic,
    ];

    /// Content-bearing types; only `Generic` is uninformative.
    pub fn is_informative(self) -> bool {
        self != EntityType::Generic
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    UsedFor,
    FeatureOf,
    EvaluateFor,
    HyponymOf,
    PartOf,
    Compare,
    Conjunction,
}

impl RelationType {
    pub const ALL: [RelationType; 7] = [
        RelationType::UsedFor,
        RelationType::FeatureOf,
        RelationType::EvaluateFor,
        RelationType::HyponymOf,
        RelationType::PartOf,
        RelationType::Compare,
        RelationType::Conjunction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationType::UsedFor => "used_for",
            RelationType::FeatureOf => "feature_of",
            RelationType::EvaluateFor => "evaluate_for",
            RelationType::HyponymOf => "hyponym_of",
            RelationType::PartOf => "part_of",
            RelationType::Compare => "compare",
            RelationType::Conjunction => "conjunction",
        }
    }

    /// Short English gloss used when an edge is named inline.
    pub fn gloss(self) -> &'static str {
        match self {
            RelationType::UsedFor => "used for",
            RelationType::FeatureOf => "feature of",
            RelationType::EvaluateFor => "evaluated for",
            RelationType::HyponymOf => "a kind of",
            RelationType::PartOf => "part of",
            RelationType::Compare => "compared with",
            RelationType::Conjunction => "together with",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown relation type {s:?}"))
    }
}

/// Review categories. All but `Summary` carry a 1-5 score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Summary,
    Appropriateness,
    Clarity,
    Novelty,
    Soundness,
    MeaningfulComparison,
    PotentialImpact,
    OverallRecommendation,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Summary,
        Category::Appropriateness,
        Category::Clarity,
        Category::Novelty,
        Category::Soundness,
        Category::MeaningfulComparison,
        Category::PotentialImpact,
        Category::OverallRecommendation,
    ];

    pub const SCOREABLE: [Category; 7] = [
        Category::Appropriateness,
        Category::Clarity,
        Category::Novelty,
        Category::Soundness,
        Category::MeaningfulComparison,
        Category::PotentialImpact,
        Category::OverallRecommendation,
    ];

    pub fn is_scoreable(self) -> bool {
        self != Category::Summary
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Summary => "summary",
            Category::Appropriateness => "appropriateness",
            Category::Clarity => "clarity",
            Category::Novelty => "novelty",
            Category::Soundness => "soundness",
            Category::MeaningfulComparison => "meaningful_comparison",
            Category::PotentialImpact => "potential_impact",
            Category::OverallRecommendation => "overall_recommendation",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::Summary => "Summary",
            Category::Appropriateness => "Appropriateness",
            Category::Clarity => "Clarity",
            Category::Novelty => "Novelty",
            Category::Soundness => "Soundness",
            Category::MeaningfulComparison => "Meaningful Comparison",
            Category::PotentialImpact => "Potential Impact",
            Category::OverallRecommendation => "Overall Recommendation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sentence_index: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub mention_id: usize,
    pub section: SectionKind,
    pub sentence_index: usize,
    /// Half-open token range within the sentence.
    pub token_span: (usize, usize),
    pub surface: String,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationAnnotation {
    pub head: usize,
    pub tail: usize,
    pub relation: RelationType,
    pub section: SectionKind,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IeAnnotations {
    pub mentions: Vec<Mention>,
    /// Explicit coreference clusters as mention ids. Mentions not listed form
    /// implicit singletons.
    pub clusters: Vec<Vec<usize>>,
    pub relations: Vec<RelationAnnotation>,
}

impl IeAnnotations {
    /// Explicit clusters followed by one singleton per uncovered mention, in
    /// mention-id order.
    pub fn clusters_with_singletons(&self) -> Vec<Vec<usize>> {
        let covered: BTreeSet<usize> = self.clusters.iter().flatten().copied().collect();
        let mut out = self.clusters.clone();
        out.extend(
            (0..self.mentions.len())
                .filter(|id| !covered.contains(id))
                .map(|id| vec![id]),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub year: i32,
    pub venue: String,
    pub sections: BTreeMap<SectionKind, Vec<Sentence>>,
    pub citations: Vec<String>,
    pub annotations: IeAnnotations,
}

impl PaperRecord {
    pub fn sentence(&self, section: SectionKind, index: usize) -> Option<&Sentence> {
        self.sections.get(&section).and_then(|s| s.get(index))
    }

    pub fn section(&self, section: SectionKind) -> &[Sentence] {
        self.sections.get(&section).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Serialize to the annotation document format.
    pub fn to_json(&self) -> String {
        let doc = PaperDoc::from(self);
        let mut text = serde_json::to_string_pretty(&doc).expect("paper documents always serialize");
        text.push('\n');
        text
    }
}

// Wire format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaperDoc {
    paper_id: String,
    title: String,
    year: i64,
    venue: String,
    citations: Vec<String>,
    sections: BTreeMap<SectionKind, Vec<Vec<String>>>,
    mentions: Vec<MentionDoc>,
    clusters: Vec<Vec<usize>>,
    relations: Vec<RelationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionDoc {
    id: usize,
    section: SectionKind,
    sentence: usize,
    span: [usize; 2],
    #[serde(rename = "type")]
    entity_type: EntityType,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDoc {
    head_id: usize,
    tail_id: usize,
    #[serde(rename = "type")]
    relation: RelationType,
    section: SectionKind,
    sentence: usize,
}

impl From<&PaperRecord> for PaperDoc {
    fn from(p: &PaperRecord) -> Self {
        PaperDoc {
            paper_id: p.paper_id.clone(),
            title: p.title.clone(),
            year: i64::from(p.year),
            venue: p.venue.clone(),
            citations: p.citations.clone(),
            sections: p
                .sections
                .iter()
                .map(|(k, sents)| (*k, sents.iter().map(|s| s.tokens.clone()).collect()))
                .collect(),
            mentions: p
                .annotations
                .mentions
                .iter()
                .map(|m| MentionDoc {
                    id: m.mention_id,
                    section: m.section,
                    sentence: m.sentence_index,
                    span: [m.token_span.0, m.token_span.1],
                    entity_type: m.entity_type,
                })
                .collect(),
            clusters: p.annotations.clusters.clone(),
            relations: p
                .annotations
                .relations
                .iter()
                .map(|r| RelationDoc {
                    head_id: r.head,
                    tail_id: r.tail,
                    relation: r.relation,
                    section: r.section,
                    sentence: r.sentence_index,
                })
                .collect(),
        }
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

fn into_record(doc: PaperDoc, locus: &str) -> Result<PaperRecord> {
    let fail = |rule: String| Error::validation(locus, rule);

    if !valid_id(&doc.paper_id) {
        return Err(fail("paper_id must be non-empty and contain no whitespace".into()));
    }
    if doc.year < 1900 || doc.year > i64::from(i32::MAX) {
        return Err(fail(format!("year {} must be >= 1900", doc.year)));
    }
    if let Some(bad) = doc.citations.iter().find(|c| !valid_id(c)) {
        return Err(fail(format!("citation id {bad:?} must be non-empty and contain no whitespace")));
    }

    let mut sections = BTreeMap::new();
    for (kind, sents) in doc.sections {
        let mut out = Vec::with_capacity(sents.len());
        for (i, tokens) in sents.into_iter().enumerate() {
            if tokens.is_empty() {
                return Err(fail(format!("{} sentence {i} has no tokens", kind.name())));
            }
            if tokens.iter().any(|t| t.trim().is_empty() || t.chars().any(char::is_whitespace)) {
                return Err(fail(format!("{} sentence {i} has an empty or whitespace token", kind.name())));
            }
            out.push(Sentence { sentence_index: i, tokens });
        }
        sections.insert(kind, out);
    }

    let sentence_of = |section: SectionKind, index: usize| -> Option<&Sentence> {
        sections.get(&section).and_then(|s: &Vec<Sentence>| s.get(index))
    };

    let mut mentions = Vec::with_capacity(doc.mentions.len());
    for (pos, m) in doc.mentions.into_iter().enumerate() {
        if m.id != pos {
            return Err(fail(format!("mention ids must be 0..n in order (found {} at position {pos})", m.id)));
        }
        let sentence = sentence_of(m.section, m.sentence).ok_or_else(|| {
            fail(format!("mention {} sentence out of range ({} {})", m.id, m.section.name(), m.sentence))
        })?;
        let [start, end] = m.span;
        if start >= end || end > sentence.tokens.len() {
            return Err(fail(format!("mention {} span [{start}, {end}) out of range", m.id)));
        }
        mentions.push(Mention {
            mention_id: m.id,
            section: m.section,
            sentence_index: m.sentence,
            token_span: (start, end),
            surface: sentence.tokens[start..end].join(" "),
            entity_type: m.entity_type,
        });
    }

    let mut seen = BTreeSet::new();
    for cluster in &doc.clusters {
        if cluster.is_empty() {
            return Err(fail("empty cluster".into()));
        }
        for &id in cluster {
            if id >= mentions.len() {
                return Err(fail(format!("cluster member {id} out of range")));
            }
            if !seen.insert(id) {
                return Err(fail(format!("mention {id} appears in more than one cluster")));
            }
        }
    }

    let mut relations = Vec::with_capacity(doc.relations.len());
    for r in doc.relations {
        if r.head_id >= mentions.len() || r.tail_id >= mentions.len() {
            return Err(fail(format!(
                "relation endpoint out of range ({} -> {} with {} mentions)",
                r.head_id,
                r.tail_id,
                mentions.len()
            )));
        }
        if sentence_of(r.section, r.sentence).is_none() {
            return Err(fail(format!("relation sentence out of range ({} {})", r.section.name(), r.sentence)));
        }
        relations.push(RelationAnnotation {
            head: r.head_id,
            tail: r.tail_id,
            relation: r.relation,
            section: r.section,
            sentence_index: r.sentence,
        });
    }

    Ok(PaperRecord {
        paper_id: doc.paper_id,
        title: doc.title,
        year: doc.year as i32,
        venue: doc.venue,
        sections,
        citations: doc.citations,
        annotations: IeAnnotations { mentions, clusters: doc.clusters, relations },
    })
}

/// Parse an annotation document held in memory. `locus` names the source in
/// error messages.
pub fn parse_paper(text: &str, locus: &str) -> Result<PaperRecord> {
    let doc: PaperDoc = serde_json::from_str(text).map_err(|e| Error::from_json(locus, e))?;
    into_record(doc, locus)
}

pub fn load_paper(path: impl AsRef<Path>) -> Result<PaperRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_paper(&text, &path.display().to_string())
}

/// Load every `*.json` file directly inside `dir`, ordered by paper id.
/// Paper ids must be unique across the directory.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<PaperRecord>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();

    let mut papers = Vec::with_capacity(files.len());
    let mut ids = BTreeSet::new();
    for file in files {
        let paper = load_paper(&file)?;
        if !ids.insert(paper.paper_id.clone()) {
            return Err(Error::validation(
                file.display().to_string(),
                format!("duplicate paper_id {}", paper.paper_id),
            ));
        }
        papers.push(paper);
    }
    papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    Ok(papers)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewLabels {
    pub paper_id: String,
    pub per_review: Vec<BTreeMap<Category, u8>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelDoc {
    paper_id: String,
    reviews: Vec<BTreeMap<Category, i64>>,
}

pub fn parse_review_labels(text: &str, locus: &str) -> Result<Vec<ReviewLabels>> {
    let docs: Vec<LabelDoc> = serde_json::from_str(text).map_err(|e| Error::from_json(locus, e))?;
    let mut ids = BTreeSet::new();
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        let fail = |rule: String| Error::validation(locus, format!("{}: {rule}", doc.paper_id));
        if !valid_id(&doc.paper_id) {
            return Err(fail("paper_id must be non-empty and contain no whitespace".into()));
        }
        if !ids.insert(doc.paper_id.clone()) {
            return Err(fail("duplicate paper_id".into()));
        }
        if doc.reviews.is_empty() {
            return Err(fail("no reviews".into()));
        }
        let mut per_review = Vec::with_capacity(doc.reviews.len());
        for review in &doc.reviews {
            let mut scores = BTreeMap::new();
            for (&category, &score) in review {
                if !category.is_scoreable() {
                    return Err(fail("summary never carries a score".into()));
                }
                if !(1..=5).contains(&score) {
                    return Err(fail(format!("{category} score {score} outside 1..=5")));
                }
                scores.insert(category, score as u8);
            }
            per_review.push(scores);
        }
        out.push(ReviewLabels { paper_id: doc.paper_id, per_review });
    }
    Ok(out)
}

pub fn load_review_labels(path: impl AsRef<Path>) -> Result<Vec<ReviewLabels>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_review_labels(&text, &path.display().to_string())
}

/// Per-category rounded (half-up) mean over the reviews that score it.
pub fn target_scores(labels: &ReviewLabels) -> BTreeMap<Category, u8> {
    let mut sums: BTreeMap<Category, (u32, u32)> = BTreeMap::new();
    for review in &labels.per_review {
        for (&category, &score) in review {
            let entry = sums.entry(category).or_default();
            entry.0 += u32::from(score);
            entry.1 += 1;
        }
    }
    // floor(sum / n + 1/2) in integers
    sums.into_iter()
        .map(|(c, (sum, n))| (c, ((2 * sum + n) / (2 * n)) as u8))
        .collect()
}
