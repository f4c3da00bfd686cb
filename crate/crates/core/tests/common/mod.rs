//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! The oracles deliberately avoid the library's own matching and scoring
//! helpers: they work on plain token vectors with nested loops.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use kgreview::corpus::{
    parse_paper, EntityType, IeAnnotations, Mention, PaperRecord, RelationAnnotation, RelationType, SectionKind,
    Sentence,
};
use kgreview::kg::{build_kg, main_scope, ElementKey, KnowledgeGraph};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

const WORDS: [&str; 9] = ["graph", "neural", "network", "model", "attention", "translation", "deep", "learning", "tree"];
const PUNCT: [&str; 3] = [",", "(", "--"];

/// Generator limits for [`random_paper`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_mentions: usize,
    pub max_clusters: usize,
    pub max_relations: usize,
    /// Fraction of mentions placed in the abstract or conclusion.
    pub main_share: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_mentions: 15, max_clusters: 8, max_relations: 12, main_share: 0.75 }
    }
}

fn random_surface(rng: &mut impl Rng) -> Vec<String> {
    if rng.gen_bool(0.08) {
        return vec![PUNCT.choose(rng).unwrap().to_string()];
    }
    let len = rng.gen_range(1..=3);
    let mut words: Vec<String> = (0..len)
        .map(|_| {
            let w = WORDS.choose(rng).unwrap();
            if rng.gen_bool(0.2) {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect();
    if rng.gen_bool(0.1) {
        words.insert(rng.gen_range(0..=words.len()), PUNCT.choose(rng).unwrap().to_string());
    }
    words
}

/// A random but well-formed paper: one sentence per mention, random explicit
/// clusters and relations. Round-tripped through the JSON reader so every
/// generated paper is known to be valid input.
pub fn random_paper(rng: &mut impl Rng, id: &str, year: i32, shape: Shape) -> PaperRecord {
    let n = rng.gen_range(1..=shape.max_mentions);
    let mut sections: BTreeMap<SectionKind, Vec<Sentence>> = BTreeMap::new();
    let mut mentions = Vec::with_capacity(n);
    for mention_id in 0..n {
        let section = if rng.gen_bool(shape.main_share) {
            *[SectionKind::Abstract, SectionKind::Conclusion].choose(rng).unwrap()
        } else {
            *[SectionKind::RelatedWork, SectionKind::Body].choose(rng).unwrap()
        };
        let tokens = random_surface(rng);
        let list = sections.entry(section).or_default();
        let sentence_index = list.len();
        let mention = Mention {
            mention_id,
            section,
            sentence_index,
            token_span: (0, tokens.len()),
            surface: tokens.join(" "),
            entity_type: *EntityType::ALL.choose(rng).unwrap(),
        };
        list.push(Sentence { sentence_index, tokens });
        mentions.push(mention);
    }

    let k = rng.gen_range(0..=shape.max_clusters);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    if k > 0 {
        for id in 0..n {
            if rng.gen_bool(0.5) {
                groups[rng.gen_range(0..k)].push(id);
            }
        }
    }
    let clusters: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();

    let relations = (0..rng.gen_range(0..=shape.max_relations))
        .map(|_| {
            let head = rng.gen_range(0..n);
            let tail = rng.gen_range(0..n);
            RelationAnnotation {
                head,
                tail,
                relation: *RelationType::ALL.choose(rng).unwrap(),
                section: mentions[head].section,
                sentence_index: mentions[head].sentence_index,
            }
        })
        .collect();

    let paper = PaperRecord {
        paper_id: id.to_string(),
        title: format!("Synthetic paper {id}"),
        year,
        venue: "Synth".into(),
        sections,
        citations: Vec::new(),
        annotations: IeAnnotations { mentions, clusters, relations },
    };
    parse_paper(&paper.to_json(), id).expect("generated paper is valid")
}

// Oracles.

pub fn oracle_normalize(surface: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in surface.split_whitespace() {
        let lower = raw.to_lowercase();
        if lower.chars().any(|c| c.is_alphanumeric()) {
            out.push(lower);
        }
    }
    out
}

/// `needle` occurs as a contiguous run inside `hay`.
pub fn oracle_contains(hay: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > hay.len() {
        return false;
    }
    let mut start = 0;
    while start + needle.len() <= hay.len() {
        let mut all = true;
        for k in 0..needle.len() {
            if hay[start + k] != needle[k] {
                all = false;
                break;
            }
        }
        if all {
            return true;
        }
        start += 1;
    }
    false
}

pub fn oracle_coref(a: &[String], b: &[String]) -> bool {
    oracle_contains(a, b) || oracle_contains(b, a)
}

/// Longest informative mention, ties to the smaller normalized form and then
/// the lower id; all mentions count when none is informative.
pub fn oracle_representative<'a>(mentions: &[&'a Mention]) -> &'a Mention {
    let any_informative = mentions.iter().any(|m| m.entity_type != EntityType::Generic);
    let mut best: Option<&Mention> = None;
    for m in mentions {
        if any_informative && m.entity_type == EntityType::Generic {
            continue;
        }
        best = match best {
            None => Some(m),
            Some(b) => {
                let (nm, nb) = (oracle_normalize(&m.surface), oracle_normalize(&b.surface));
                let better = nm.len() > nb.len() || (nm.len() == nb.len() && (nm < nb || (nm == nb && m.mention_id < b.mention_id)));
                Some(if better { m } else { b })
            }
        };
    }
    best.expect("non-empty cluster")
}

/// Entity partition by repeated pairwise merging: two groups join when any
/// original cluster representative of one contains, or is contained in, any
/// original representative of the other. Returns mention-id sets.
pub fn oracle_partition(paper: &PaperRecord, scope: &BTreeSet<SectionKind>) -> BTreeSet<BTreeSet<usize>> {
    let mentions = &paper.annotations.mentions;
    let usable = |id: usize| scope.contains(&mentions[id].section) && !oracle_normalize(&mentions[id].surface).is_empty();
    let mut clustered = vec![false; mentions.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for c in &paper.annotations.clusters {
        for &id in c {
            clustered[id] = true;
        }
        clusters.push(c.iter().copied().filter(|&id| usable(id)).collect());
    }
    for id in 0..mentions.len() {
        if !clustered[id] {
            clusters.push(if usable(id) { vec![id] } else { vec![] });
        }
    }
    clusters.retain(|c| !c.is_empty());

    let reps: Vec<Vec<String>> = clusters
        .iter()
        .map(|c| {
            let refs: Vec<&Mention> = c.iter().map(|&id| &mentions[id]).collect();
            oracle_normalize(&oracle_representative(&refs).surface)
        })
        .collect();

    // each group: indices of original clusters
    let mut groups: Vec<Vec<usize>> = (0..clusters.len()).map(|i| vec![i]).collect();
    loop {
        let mut merged = false;
        'outer: for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let touch = groups[a].iter().any(|&i| groups[b].iter().any(|&j| oracle_coref(&reps[i], &reps[j])));
                if touch {
                    let moved = groups.remove(b);
                    groups[a].extend(moved);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    groups
        .into_iter()
        .map(|g| g.into_iter().flat_map(|i| clusters[i].iter().copied()).collect())
        .collect()
}

pub fn key_tokens(key: &ElementKey) -> (Vec<String>, Option<RelationType>, Vec<String>) {
    match key {
        ElementKey::Node(n) => (n.tokens().to_vec(), None, Vec::new()),
        ElementKey::Edge { head, relation, tail } => (head.tokens().to_vec(), Some(*relation), tail.tokens().to_vec()),
    }
}

pub fn oracle_match(a: &ElementKey, b: &ElementKey) -> bool {
    let (ha, ra, ta) = key_tokens(a);
    let (hb, rb, tb) = key_tokens(b);
    match (ra, rb) {
        (None, None) => oracle_coref(&ha, &hb),
        (Some(x), Some(y)) => x == y && oracle_coref(&ha, &hb) && oracle_coref(&ta, &tb),
        _ => false,
    }
}

/// Papers of `background` dated before `cutoff` with an element matching `key`.
pub fn oracle_matched_papers(key: &ElementKey, background: &[(PaperRecord, KnowledgeGraph)], cutoff: i32) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (paper, graph) in background {
        if paper.year >= cutoff {
            continue;
        }
        for element in graph.elements() {
            if oracle_match(key, &element) {
                out.insert(paper.paper_id.clone());
            }
        }
    }
    out
}

/// Elements of `gp` without a match in any pre-cutoff background paper,
/// skipping nodes of generic entities.
pub fn oracle_novelty(gp: &KnowledgeGraph, background: &[(PaperRecord, KnowledgeGraph)], cutoff: i32) -> BTreeSet<ElementKey> {
    let mut out = BTreeSet::new();
    for key in gp.elements() {
        if let ElementKey::Node(rep) = &key {
            let generic = gp.entities.iter().any(|e| &e.representative == rep && e.entity_type == EntityType::Generic);
            if generic {
                continue;
            }
        }
        if oracle_matched_papers(&key, background, cutoff).is_empty() {
            out.insert(key);
        }
    }
    out
}

/// `tf / max_tf * (1 - ln df / ln n)`, with the idf factor 1 when df is 0 or
/// n is at most 1.
pub fn oracle_tfidf(tf: usize, max_tf: usize, n: usize, df: usize) -> f64 {
    let tf_part = if max_tf == 0 { 0.0 } else { tf as f64 / max_tf as f64 };
    let idf_part = if df == 0 || n < 2 { 1.0 } else { 1.0 - (df as f64).ln() / (n as f64).ln() };
    tf_part * idf_part.clamp(0.0, 1.0)
}

/// A background corpus plus one target paper dated after it.
pub fn random_instance(rng: &mut impl Rng, max_background: usize, shape: Shape) -> (PaperRecord, Vec<PaperRecord>) {
    let size = rng.gen_range(0..=max_background);
    let background: Vec<PaperRecord> = (0..size)
        .map(|i| {
            let year = rng.gen_range(2000..2010);
            random_paper(rng, &format!("B{i:02}"), year, shape)
        })
        .collect();
    let mut target = random_paper(rng, "T", 2010, shape);
    let mut cited: Vec<String> = background.iter().map(|p| p.paper_id.clone()).filter(|_| rng.gen_bool(0.3)).collect();
    cited.sort();
    target.citations = cited;
    (target, background)
}

pub fn with_graphs(papers: &[PaperRecord]) -> Vec<(PaperRecord, KnowledgeGraph)> {
    papers.iter().map(|p| (p.clone(), build_kg(p, &main_scope()))).collect()
}
