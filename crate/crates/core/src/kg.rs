//! Per-paper knowledge graphs.
//!
//! Entities are clusters of co-referential mentions identified by a
//! representative (the longest informative mention). Clusters whose
//! representatives contain one another token-wise are merged to a fixed point
//! with union-find, since containment itself is not transitive.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::corpus::{EntityType, Mention, PaperRecord, RelationType, SectionKind};

/// Lowercased token sequence used for matching entity names.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalizedString(Vec<String>);

impl NormalizedString {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NormalizedString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Lowercase and split on whitespace, dropping tokens made only of
/// punctuation. Internal hyphens survive ("TF-IDF" -> "tf-idf").
pub fn normalize(surface: &str) -> NormalizedString {
    NormalizedString(
        surface
            .split_whitespace()
            .filter(|t| t.chars().any(char::is_alphanumeric))
            .map(str::to_lowercase)
            .collect(),
    )
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// True iff one token sequence occurs contiguously inside the other.
pub fn coreferential(a: &NormalizedString, b: &NormalizedString) -> bool {
    contains_run(&a.0, &b.0) || contains_run(&b.0, &a.0)
}

fn representative_key(m: &Mention) -> (Reverse<usize>, NormalizedString, usize) {
    let norm = normalize(&m.surface);
    (Reverse(norm.len()), norm, m.mention_id)
}

/// Longest informative mention; ties go to the smaller normalized form, then
/// the lower mention id. Falls back to all mentions when none is informative.
pub fn representative_mention<'a>(cluster: &[&'a Mention]) -> Option<&'a Mention> {
    let informative = cluster.iter().any(|m| m.entity_type.is_informative());
    cluster
        .iter()
        .filter(|m| !informative || m.entity_type.is_informative())
        .min_by_key(|m| representative_key(m))
        .copied()
}

/// Majority type; ties resolve towards the more specific type
/// (declaration order of [`EntityType`]).
fn majority_type(mentions: &[Mention]) -> EntityType {
    let mut counts = [0usize; 6];
    for m in mentions {
        counts[m.entity_type.index()] += 1;
    }
    EntityType::ALL
        .into_iter()
        .max_by_key(|t| (counts[t.index()], Reverse(t.index())))
        .expect("six entity types")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub entity_id: usize,
    /// Member mentions in mention-id order.
    pub mentions: Vec<Mention>,
    pub representative: NormalizedString,
    /// Surface form (original casing) of the representative mention.
    pub surface: String,
    pub entity_type: EntityType,
    pub paper_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
    pub relation: RelationType,
    /// Location of the first annotation that produced this edge.
    pub provenance: (SectionKind, usize),
    /// Number of relation annotations collapsed into this edge.
    pub support: usize,
}

/// A canonical knowledge element: an entity node or a typed edge, named by
/// representatives so that elements compare across papers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKey {
    Node(NormalizedString),
    Edge {
        head: NormalizedString,
        relation: RelationType,
        tail: NormalizedString,
    },
}

impl ElementKey {
    /// Tab-separated text form: `node\t<rep>` or `edge\t<head>\t<rel>\t<tail>`.
    pub fn to_line(&self) -> String {
        match self {
            ElementKey::Node(rep) => format!("node\t{rep}"),
            ElementKey::Edge { head, relation, tail } => format!("edge\t{head}\t{relation}\t{tail}"),
        }
    }

    /// Inverse of [`ElementKey::to_line`] over already-split fields.
    pub fn from_fields(fields: &[&str]) -> Result<ElementKey, String> {
        let rep = |s: &str| {
            let n = normalize(s);
            if n.is_empty() || n.to_string() != s {
                Err(format!("{s:?} is not a normalized representative"))
            } else {
                Ok(n)
            }
        };
        match fields {
            ["node", r] => Ok(ElementKey::Node(rep(r)?)),
            ["edge", h, rel, t] => Ok(ElementKey::Edge {
                head: rep(h)?,
                relation: rel.parse()?,
                tail: rep(t)?,
            }),
            _ => Err(format!("malformed element key {fields:?}")),
        }
    }

    /// Node-to-node containment, or edge-to-edge with equal relation and
    /// containment at both endpoints.
    pub fn matches(&self, other: &ElementKey) -> bool {
        match (self, other) {
            (ElementKey::Node(a), ElementKey::Node(b)) => coreferential(a, b),
            (
                ElementKey::Edge { head: h1, relation: r1, tail: t1 },
                ElementKey::Edge { head: h2, relation: r2, tail: t2 },
            ) => r1 == r2 && coreferential(h1, h2) && coreferential(t1, t2),
            _ => false,
        }
    }

    pub fn relation(&self) -> Option<RelationType> {
        match self {
            ElementKey::Node(_) => None,
            ElementKey::Edge { relation, .. } => Some(*relation),
        }
    }
}

impl fmt::Display for ElementKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub paper_id: String,
    pub scope: BTreeSet<SectionKind>,
    pub entities: Vec<Entity>,
    pub edges: Vec<Edge>,
}

impl KnowledgeGraph {
    pub fn empty(paper_id: &str, scope: BTreeSet<SectionKind>) -> Self {
        KnowledgeGraph { paper_id: paper_id.to_string(), scope, entities: Vec::new(), edges: Vec::new() }
    }

    pub fn entity(&self, entity_id: usize) -> Option<&Entity> {
        self.entities.iter().find(|e| e.entity_id == entity_id)
    }

    pub fn node_key(&self, entity: &Entity) -> ElementKey {
        ElementKey::Node(entity.representative.clone())
    }

    pub fn edge_key(&self, edge: &Edge) -> ElementKey {
        let head = self.entity(edge.head).expect("edge head in graph");
        let tail = self.entity(edge.tail).expect("edge tail in graph");
        ElementKey::Edge {
            head: head.representative.clone(),
            relation: edge.relation,
            tail: tail.representative.clone(),
        }
    }

    /// All knowledge elements in key order.
    pub fn elements(&self) -> BTreeSet<ElementKey> {
        self.entities
            .iter()
            .map(|e| self.node_key(e))
            .chain(self.edges.iter().map(|e| self.edge_key(e)))
            .collect()
    }

    pub fn entity_by_representative(&self, rep: &NormalizedString) -> Option<&Entity> {
        self.entities.iter().find(|e| &e.representative == rep)
    }

    /// Term frequency of an element: mentions of a node, supporting
    /// annotations of an edge. `None` if the key is not in this graph.
    pub fn mention_count(&self, key: &ElementKey) -> Option<usize> {
        match key {
            ElementKey::Node(rep) => self.entity_by_representative(rep).map(|e| e.mentions.len()),
            ElementKey::Edge { .. } => self
                .edges
                .iter()
                .find(|e| &self.edge_key(e) == key)
                .map(|e| e.support),
        }
    }

    /// Human-readable name: representative surfaces joined by the relation gloss.
    pub fn display(&self, key: &ElementKey) -> Option<String> {
        let surface = |rep: &NormalizedString| self.entity_by_representative(rep).map(|e| e.surface.clone());
        match key {
            ElementKey::Node(rep) => surface(rep),
            ElementKey::Edge { head, relation, tail } => {
                Some(format!("{} {} {}", surface(head)?, relation.gloss(), surface(tail)?))
            }
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Build the knowledge graph of `paper` restricted to the `scope` sections.
pub fn build_kg(paper: &PaperRecord, scope: &BTreeSet<SectionKind>) -> KnowledgeGraph {
    let ann = &paper.annotations;
    // mentions with no alphanumeric content cannot name an entity
    let usable: Vec<bool> = ann
        .mentions
        .iter()
        .map(|m| scope.contains(&m.section) && !normalize(&m.surface).is_empty())
        .collect();

    let clusters: Vec<Vec<&Mention>> = ann
        .clusters_with_singletons()
        .into_iter()
        .map(|c| c.into_iter().filter(|&id| usable[id]).map(|id| &ann.mentions[id]).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();

    let reps: Vec<NormalizedString> = clusters
        .iter()
        .map(|c| normalize(&representative_mention(c).expect("non-empty cluster").surface))
        .collect();

    let mut dsu = DisjointSet::new(clusters.len());
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            if coreferential(&reps[i], &reps[j]) {
                dsu.union(i, j);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<Mention>> = BTreeMap::new();
    for (i, cluster) in clusters.iter().enumerate() {
        groups.entry(dsu.find(i)).or_default().extend(cluster.iter().map(|m| (*m).clone()));
    }
    let mut groups: Vec<Vec<Mention>> = groups.into_values().collect();
    for g in &mut groups {
        g.sort_by_key(|m| m.mention_id);
    }
    groups.sort_by_key(|g| g[0].mention_id);

    let mut entity_of = vec![None; ann.mentions.len()];
    let entities: Vec<Entity> = groups
        .into_iter()
        .enumerate()
        .map(|(entity_id, mentions)| {
            for m in &mentions {
                entity_of[m.mention_id] = Some(entity_id);
            }
            let refs: Vec<&Mention> = mentions.iter().collect();
            let rep = representative_mention(&refs).expect("non-empty entity");
            Entity {
                entity_id,
                representative: normalize(&rep.surface),
                surface: rep.surface.clone(),
                entity_type: majority_type(&mentions),
                paper_id: paper.paper_id.clone(),
                mentions,
            }
        })
        .collect();

    let mut edges: Vec<Edge> = Vec::new();
    let mut seen: BTreeMap<(usize, RelationType, usize), usize> = BTreeMap::new();
    for r in &ann.relations {
        if !scope.contains(&r.section) {
            continue;
        }
        let (Some(head), Some(tail)) = (entity_of[r.head], entity_of[r.tail]) else {
            continue;
        };
        if head == tail {
            continue;
        }
        match seen.get(&(head, r.relation, tail)) {
            Some(&at) => edges[at].support += 1,
            None => {
                seen.insert((head, r.relation, tail), edges.len());
                edges.push(Edge {
                    head,
                    tail,
                    relation: r.relation,
                    provenance: (r.section, r.sentence_index),
                    support: 1,
                });
            }
        }
    }

    KnowledgeGraph { paper_id: paper.paper_id.clone(), scope: scope.clone(), entities, edges }
}

/// Scope of the target-paper graph: abstract and conclusion.
pub fn main_scope() -> BTreeSet<SectionKind> {
    BTreeSet::from([SectionKind::Abstract, SectionKind::Conclusion])
}

/// Scope of the related-work graph.
pub fn related_work_scope() -> BTreeSet<SectionKind> {
    BTreeSet::from([SectionKind::RelatedWork])
}
