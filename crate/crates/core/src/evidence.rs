//! Evidence extraction by comparing the target-paper graph, its related-work
//! graph and the background index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::background::{build_index, tfidf, BackgroundIndex, Posting};
use crate::corpus::{EntityType, PaperRecord, RelationType};
use crate::error::{Error, Result};
use crate::kg::{self, ElementKey, KnowledgeGraph};

/// Elements must score strictly above this to support a comparison comment.
pub const TFIDF_THRESHOLD: f64 = 0.5;

/// Default number of recommended papers per element.
pub const RECOMMENDATIONS: usize = 5;

/// Relations described in summary and novelty comments.
pub const SUMMARY_RELATIONS: [RelationType; 4] = [
    RelationType::UsedFor,
    RelationType::FeatureOf,
    RelationType::Compare,
    RelationType::EvaluateFor,
];

pub const FEATURE_DIM: usize = 17;

/// Informative types counted in the new-node block of the feature vector.
const NODE_FEATURE_TYPES: [EntityType; 5] = [
    EntityType::Task,
    EntityType::Method,
    EntityType::EvaluationMetric,
    EntityType::Material,
    EntityType::OtherScientificTerm,
];

/// Fixed-order evidence features:
///
/// | range  | meaning                                          |
/// |--------|--------------------------------------------------|
/// | 0..5   | new nodes per informative entity type            |
/// | 5..12  | new edges per relation type                      |
/// | 12     | entities in the target graph                     |
/// | 13     | edges in the target graph                        |
/// | 14     | comparison entries                               |
/// | 15     | target elements with TF-IDF above the threshold  |
/// | 16     | mean TF-IDF over target elements (0 when empty)  |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sum of the new-node and new-edge counts.
    pub fn novelty_count(&self) -> f64 {
        self.0[..12].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub element: ElementKey,
    pub tfidf: f64,
    /// Matched background papers neither cited nor covered by the related-work
    /// graph, most recent first.
    pub uncited: Vec<Posting>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceBundle {
    /// Abstract+conclusion graph of the target paper.
    pub graph: KnowledgeGraph,
    /// Related-work graph of the target paper.
    pub related: KnowledgeGraph,
    pub summary: KnowledgeGraph,
    pub novelty_new: BTreeSet<ElementKey>,
    pub comparison: Vec<ComparisonEntry>,
    pub features: FeatureVector,
}

/// Sub-graph holding the summary relations and their endpoints.
pub fn extract_summary(gp: &KnowledgeGraph) -> KnowledgeGraph {
    let edges: Vec<_> = gp
        .edges
        .iter()
        .filter(|e| SUMMARY_RELATIONS.contains(&e.relation))
        .cloned()
        .collect();
    let used: BTreeSet<usize> = edges.iter().flat_map(|e| [e.head, e.tail]).collect();
    KnowledgeGraph {
        paper_id: gp.paper_id.clone(),
        scope: gp.scope.clone(),
        entities: gp.entities.iter().filter(|e| used.contains(&e.entity_id)).cloned().collect(),
        edges,
    }
}

/// Elements of `gp` with no match in the background, ignoring nodes of
/// generic entities.
pub fn extract_novelty(gp: &KnowledgeGraph, index: &BackgroundIndex) -> BTreeSet<ElementKey> {
    extract_novelty_with(gp, index, false)
}

pub fn extract_novelty_with(
    gp: &KnowledgeGraph,
    index: &BackgroundIndex,
    include_generic: bool,
) -> BTreeSet<ElementKey> {
    gp.elements()
        .into_iter()
        .filter(|key| include_generic || !is_generic_node(gp, key))
        .filter(|key| index.match_element(key).papers.is_empty())
        .collect()
}

fn is_generic_node(gp: &KnowledgeGraph, key: &ElementKey) -> bool {
    match key {
        ElementKey::Node(rep) => gp
            .entity_by_representative(rep)
            .is_some_and(|e| e.entity_type == EntityType::Generic),
        ElementKey::Edge { .. } => false,
    }
}

/// TF-IDF of every element of the target graph.
pub fn element_scores(gp: &KnowledgeGraph, index: &BackgroundIndex) -> BTreeMap<ElementKey, f64> {
    gp.elements()
        .into_iter()
        .map(|k| {
            let score = tfidf(index, &k, gp).expect("key drawn from the graph");
            (k, score)
        })
        .collect()
}

/// High-TF-IDF elements of the target graph together with matched background
/// papers the target neither cites nor covers in its related-work section.
pub fn extract_comparison(
    gp: &KnowledgeGraph,
    grel: &KnowledgeGraph,
    index: &BackgroundIndex,
    citations: &BTreeSet<String>,
) -> Vec<ComparisonEntry> {
    comparison_from_scores(&element_scores(gp, index), grel, index, citations)
}

fn comparison_from_scores(
    scores: &BTreeMap<ElementKey, f64>,
    grel: &KnowledgeGraph,
    index: &BackgroundIndex,
    citations: &BTreeSet<String>,
) -> Vec<ComparisonEntry> {
    let related = grel.elements();
    let mut entries = Vec::new();
    for (key, &score) in scores {
        if score <= TFIDF_THRESHOLD {
            continue;
        }
        // paper -> covered by the related-work graph through any matched key
        let mut papers: BTreeMap<&Posting, bool> = BTreeMap::new();
        for (matched, postings) in index.matching_keys(key) {
            let covered = related.iter().any(|r| r.matches(matched));
            for p in postings {
                *papers.entry(p).or_default() |= covered;
            }
        }
        let mut uncited: Vec<Posting> = papers
            .into_iter()
            .filter(|(p, covered)| !covered && !citations.contains(&p.paper_id))
            .map(|(p, _)| p.clone())
            .collect();
        if uncited.is_empty() {
            continue;
        }
        uncited.sort_by(crate::background::recency_order);
        entries.push(ComparisonEntry { element: key.clone(), tfidf: score, uncited });
    }
    entries.sort_by(|a, b| b.tfidf.total_cmp(&a.tfidf).then_with(|| a.element.cmp(&b.element)));
    entries
}

/// The `k` most recent uncited papers of an entry.
pub fn recommend_related(entry: &ComparisonEntry, k: usize) -> Vec<Posting> {
    entry.uncited.iter().take(k).cloned().collect()
}

pub fn evidence_features(
    gp: &KnowledgeGraph,
    novelty_new: &BTreeSet<ElementKey>,
    comparison: &[ComparisonEntry],
    scores: &BTreeMap<ElementKey, f64>,
) -> FeatureVector {
    let mut f = [0.0; FEATURE_DIM];
    for key in novelty_new {
        match key {
            ElementKey::Node(rep) => {
                let ty = gp.entity_by_representative(rep).map(|e| e.entity_type);
                if let Some(slot) = ty.and_then(|t| NODE_FEATURE_TYPES.iter().position(|x| *x == t)) {
                    f[slot] += 1.0;
                }
            }
            ElementKey::Edge { relation, .. } => f[5 + relation.index()] += 1.0,
        }
    }
    f[12] = gp.entities.len() as f64;
    f[13] = gp.edges.len() as f64;
    f[14] = comparison.len() as f64;
    f[15] = scores.values().filter(|&&s| s > TFIDF_THRESHOLD).count() as f64;
    f[16] = if scores.is_empty() { 0.0 } else { scores.values().sum::<f64>() / scores.len() as f64 };
    FeatureVector(f)
}

/// Full evidence for one target paper against a background index.
pub fn extract_evidence(paper: &PaperRecord, index: &BackgroundIndex) -> EvidenceBundle {
    let graph = kg::build_kg(paper, &kg::main_scope());
    let related = kg::build_kg(paper, &kg::related_work_scope());
    let citations: BTreeSet<String> = paper.citations.iter().cloned().collect();
    let scores = element_scores(&graph, index);
    let summary = extract_summary(&graph);
    let novelty_new = extract_novelty(&graph, index);
    let comparison = comparison_from_scores(&scores, &related, index, &citations);
    let features = evidence_features(&graph, &novelty_new, &comparison, &scores);
    EvidenceBundle { graph, related, summary, novelty_new, comparison, features }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyTimeline {
    /// (cutoff year, mean number of new elements), years increasing.
    pub entries: Vec<(i32, f64)>,
}

impl NoveltyTimeline {
    /// Two whitespace-separated columns, one cutoff per line.
    pub fn to_plot_text(&self) -> String {
        let mut out = String::new();
        for (year, mean) in &self.entries {
            let _ = writeln!(out, "{year}\t{mean}");
        }
        out
    }
}

/// Mean novelty of `papers` against backgrounds built from `corpus` at each
/// cutoff in `years`.
pub fn novelty_timeline(papers: &[PaperRecord], corpus: &[PaperRecord], years: &[i32]) -> Result<NoveltyTimeline> {
    if years.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("years must be strictly increasing".into()));
    }
    let graphs: Vec<KnowledgeGraph> = papers.iter().map(|p| kg::build_kg(p, &kg::main_scope())).collect();
    let entries = years
        .iter()
        .map(|&year| {
            let index = build_index(corpus, year);
            let total: usize = graphs.iter().map(|g| extract_novelty(g, &index).len()).sum();
            let mean = if graphs.is_empty() { 0.0 } else { total as f64 / graphs.len() as f64 };
            (year, mean)
        })
        .collect();
    Ok(NoveltyTimeline { entries })
}
