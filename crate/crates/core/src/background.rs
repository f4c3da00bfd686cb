//! Background knowledge base over papers published before a cutoff year.
//!
//! The index stores exact element keys with their (paper, year) postings.
//! Queries are fuzzy: a node matches any indexed node whose representative
//! contains or is contained in the query, an edge additionally needs an equal
//! relation and matching tail. A token-level hint table narrows the candidates
//! for that scan.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::corpus::{PaperRecord, SectionKind};
use crate::error::{Error, Result};
use crate::kg::{self, ElementKey, KnowledgeGraph};

const MAGIC: &str = "#kgreview-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Posting {
    pub paper_id: String,
    pub year: i32,
}

impl Posting {
    pub fn new(paper_id: impl Into<String>, year: i32) -> Self {
        Posting { paper_id: paper_id.into(), year }
    }
}

/// Most recent first, then by paper id.
pub fn recency_order(a: &Posting, b: &Posting) -> std::cmp::Ordering {
    (Reverse(a.year), &a.paper_id).cmp(&(Reverse(b.year), &b.paper_id))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementMatch {
    pub element: ElementKey,
    /// Distinct matched papers, most recent first.
    pub papers: Vec<Posting>,
}

#[derive(Debug, Clone, Default)]
struct Hints {
    keys: Vec<ElementKey>,
    nodes_by_token: BTreeMap<String, Vec<usize>>,
    edges_by_head_token: BTreeMap<String, Vec<usize>>,
}

impl Hints {
    fn build<'a>(keys: impl Iterator<Item = &'a ElementKey>) -> Self {
        let mut hints = Hints::default();
        for (i, key) in keys.enumerate() {
            let (table, rep) = match key {
                ElementKey::Node(rep) => (&mut hints.nodes_by_token, rep),
                ElementKey::Edge { head, .. } => (&mut hints.edges_by_head_token, head),
            };
            let distinct: BTreeSet<&String> = rep.tokens().iter().collect();
            for token in distinct {
                table.entry(token.clone()).or_default().push(i);
            }
            hints.keys.push(key.clone());
        }
        hints
    }

    /// Indexed keys that share at least one token with the query's node (or
    /// edge head). Containment is impossible without a shared token.
    fn candidates(&self, query: &ElementKey) -> BTreeSet<usize> {
        let (table, rep) = match query {
            ElementKey::Node(rep) => (&self.nodes_by_token, rep),
            ElementKey::Edge { head, .. } => (&self.edges_by_head_token, head),
        };
        rep.tokens()
            .iter()
            .filter_map(|t| table.get(t))
            .flatten()
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BackgroundIndex {
    cutoff_year: i32,
    /// Every corpus paper dated before the cutoff, with its year.
    papers: BTreeMap<String, i32>,
    /// Postings sorted by paper id.
    postings: BTreeMap<ElementKey, Vec<Posting>>,
    hints: Hints,
}

impl PartialEq for BackgroundIndex {
    fn eq(&self, other: &Self) -> bool {
        self.cutoff_year == other.cutoff_year && self.papers == other.papers && self.postings == other.postings
    }
}

impl Eq for BackgroundIndex {}

impl BackgroundIndex {
    pub fn empty(cutoff_year: i32) -> Self {
        BackgroundIndex {
            cutoff_year,
            papers: BTreeMap::new(),
            postings: BTreeMap::new(),
            hints: Hints::default(),
        }
    }

    fn from_parts(
        cutoff_year: i32,
        papers: BTreeMap<String, i32>,
        postings: BTreeMap<ElementKey, Vec<Posting>>,
    ) -> Self {
        let hints = Hints::build(postings.keys());
        BackgroundIndex { cutoff_year, papers, postings, hints }
    }

    pub fn cutoff_year(&self) -> i32 {
        self.cutoff_year
    }

    /// Number of papers dated before the cutoff, including those that
    /// contribute no elements.
    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn papers(&self) -> &BTreeMap<String, i32> {
        &self.papers
    }

    pub fn postings(&self) -> &BTreeMap<ElementKey, Vec<Posting>> {
        &self.postings
    }

    pub fn key_count(&self) -> usize {
        self.postings.len()
    }

    /// Document frequency of an exact key.
    pub fn df(&self, key: &ElementKey) -> usize {
        self.postings.get(key).map_or(0, Vec::len)
    }

    pub fn df_table(&self) -> BTreeMap<ElementKey, usize> {
        self.postings.iter().map(|(k, v)| (k.clone(), v.len())).collect()
    }

    /// Indexed keys matching `key`, in key order.
    pub fn matching_keys(&self, key: &ElementKey) -> Vec<(&ElementKey, &[Posting])> {
        self.hints
            .candidates(key)
            .into_iter()
            .map(|i| &self.hints.keys[i])
            .filter(|candidate| key.matches(candidate))
            .map(|k| (k, self.postings[k].as_slice()))
            .collect()
    }

    pub fn match_element(&self, key: &ElementKey) -> ElementMatch {
        let mut papers: Vec<Posting> = self
            .matching_keys(key)
            .into_iter()
            .flat_map(|(_, postings)| postings.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        papers.sort_by(recency_order);
        ElementMatch { element: key.clone(), papers }
    }

    /// The same index as if built with an earlier cutoff.
    pub fn restrict(&self, cutoff_year: i32) -> Result<BackgroundIndex> {
        if cutoff_year > self.cutoff_year {
            return Err(Error::PreconditionViolation(format!(
                "cannot raise index cutoff from {} to {cutoff_year}",
                self.cutoff_year
            )));
        }
        let papers = self
            .papers
            .iter()
            .filter(|(_, &y)| y < cutoff_year)
            .map(|(p, &y)| (p.clone(), y))
            .collect();
        let postings = self
            .postings
            .iter()
            .filter_map(|(k, ps)| {
                let kept: Vec<Posting> = ps.iter().filter(|p| p.year < cutoff_year).cloned().collect();
                (!kept.is_empty()).then(|| (k.clone(), kept))
            })
            .collect();
        Ok(BackgroundIndex::from_parts(cutoff_year, papers, postings))
    }

    /// Serialize to the line-oriented index format. Output depends only on
    /// the index contents.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{MAGIC}\tversion={FORMAT_VERSION}\tcutoff_year={}\tn={}\tkeys={}",
            self.cutoff_year,
            self.papers.len(),
            self.postings.len()
        );
        for (paper, year) in &self.papers {
            let _ = writeln!(out, "paper\t{paper}\t{year}");
        }
        for (key, postings) in &self.postings {
            let list: Vec<String> = postings.iter().map(|p| format!("{}@{}", p.paper_id, p.year)).collect();
            let _ = writeln!(out, "{}\t{}", key.to_line(), list.join(" "));
        }
        let _ = writeln!(out, "end\t{}", self.papers.len() + self.postings.len());
        out
    }

    pub fn from_text(text: &str, locus: &str) -> Result<BackgroundIndex> {
        if !text.ends_with('\n') {
            return Err(Error::format(locus, "truncated index (no final newline)"));
        }
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::format(locus, "empty file"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&MAGIC) {
            return Err(Error::format(locus, "missing index header"));
        }
        let header_value = |name: &str| -> Result<i64> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(name).and_then(|v| v.strip_prefix('=')))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::format(locus, format!("header field {name} missing")))
        };
        let version = header_value("version")?;
        if version != i64::from(FORMAT_VERSION) {
            return Err(Error::format(locus, format!("unsupported index version {version}")));
        }
        let cutoff_year = i32::try_from(header_value("cutoff_year")?)
            .map_err(|_| Error::format(locus, "cutoff_year out of range"))?;
        let n = header_value("n")? as usize;
        let key_total = header_value("keys")? as usize;

        let parse_err = |line: usize, message: String| Error::Parse { locus: format!("{locus}:{}", line + 1), message };

        let mut papers = BTreeMap::new();
        let mut postings: BTreeMap<ElementKey, Vec<Posting>> = BTreeMap::new();
        let mut last_key: Option<ElementKey> = None;
        let mut finished = false;
        for (ln, line) in lines.by_ref() {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "paper" => {
                    let [_, id, year] = fields[..] else {
                        return Err(parse_err(ln, "paper line needs id and year".into()));
                    };
                    let year: i32 = year.parse().map_err(|_| parse_err(ln, format!("bad year {year:?}")))?;
                    if year >= cutoff_year {
                        return Err(parse_err(ln, format!("paper {id} year {year} not before cutoff")));
                    }
                    if papers.insert(id.to_string(), year).is_some() {
                        return Err(parse_err(ln, format!("duplicate paper {id}")));
                    }
                }
                "node" | "edge" => {
                    let (key_fields, list) = fields.split_at(fields.len() - 1);
                    let key = ElementKey::from_fields(key_fields).map_err(|m| parse_err(ln, m))?;
                    if last_key.as_ref().is_some_and(|prev| prev >= &key) {
                        return Err(parse_err(ln, "keys out of order".into()));
                    }
                    let mut plist = Vec::new();
                    for item in list[0].split(' ') {
                        let (id, year) = item
                            .rsplit_once('@')
                            .ok_or_else(|| parse_err(ln, format!("bad posting {item:?}")))?;
                        let year: i32 = year.parse().map_err(|_| parse_err(ln, format!("bad posting {item:?}")))?;
                        if papers.get(id) != Some(&year) {
                            return Err(parse_err(ln, format!("posting {item} does not name an indexed paper")));
                        }
                        plist.push(Posting::new(id, year));
                    }
                    if plist.windows(2).any(|w| w[0].paper_id >= w[1].paper_id) {
                        return Err(parse_err(ln, "postings not sorted by paper id".into()));
                    }
                    last_key = Some(key.clone());
                    postings.insert(key, plist);
                }
                "end" => {
                    let count: usize = fields
                        .get(1)
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad end line".into()))?;
                    if count != papers.len() + postings.len() {
                        return Err(Error::format(locus, "record count mismatch"));
                    }
                    finished = true;
                    break;
                }
                other => return Err(parse_err(ln, format!("unknown record {other:?}"))),
            }
        }
        if !finished {
            return Err(Error::format(locus, "truncated index (no end record)"));
        }
        if lines.next().is_some() {
            return Err(Error::format(locus, "trailing data after end record"));
        }
        if papers.len() != n || postings.len() != key_total {
            return Err(Error::format(locus, "header counts disagree with contents"));
        }
        Ok(BackgroundIndex::from_parts(cutoff_year, papers, postings))
    }
}

/// Index every paper dated strictly before `cutoff_year`, using the
/// abstract+conclusion graph of each.
pub fn build_index(corpus: &[PaperRecord], cutoff_year: i32) -> BackgroundIndex {
    build_index_with_scope(corpus, cutoff_year, &kg::main_scope())
}

pub fn build_index_with_scope(
    corpus: &[PaperRecord],
    cutoff_year: i32,
    scope: &BTreeSet<SectionKind>,
) -> BackgroundIndex {
    let mut papers = BTreeMap::new();
    let mut postings: BTreeMap<ElementKey, Vec<Posting>> = BTreeMap::new();
    for paper in corpus.iter().filter(|p| p.year < cutoff_year) {
        papers.insert(paper.paper_id.clone(), paper.year);
        for key in kg::build_kg(paper, scope).elements() {
            postings.entry(key).or_default().push(Posting::new(&paper.paper_id, paper.year));
        }
    }
    for list in postings.values_mut() {
        list.sort();
        list.dedup();
    }
    BackgroundIndex::from_parts(cutoff_year, papers, postings)
}

/// Combine indexes built over disjoint shards of one corpus.
pub fn merge(a: &BackgroundIndex, b: &BackgroundIndex) -> Result<BackgroundIndex> {
    if a.cutoff_year != b.cutoff_year {
        return Err(Error::CutoffMismatch(a.cutoff_year, b.cutoff_year));
    }
    let overlap: Vec<String> = a.papers.keys().filter(|p| b.papers.contains_key(*p)).cloned().collect();
    if !overlap.is_empty() {
        return Err(Error::OverlappingPapers(overlap));
    }
    let mut papers = a.papers.clone();
    papers.extend(b.papers.iter().map(|(k, v)| (k.clone(), *v)));
    let mut postings = a.postings.clone();
    for (key, list) in &b.postings {
        postings.entry(key.clone()).or_default().extend(list.iter().cloned());
    }
    for list in postings.values_mut() {
        list.sort();
    }
    Ok(BackgroundIndex::from_parts(a.cutoff_year, papers, postings))
}

/// Normalized TF-IDF in [0, 1]: `tf / max_tf` times `ln(N / df) / ln N`,
/// with the idf factor pinned to 1 when nothing matches or `N <= 1`.
pub fn tfidf_score(tf: usize, max_tf: usize, paper_count: usize, df: usize) -> f64 {
    let tf_norm = if max_tf == 0 { 0.0 } else { tf as f64 / max_tf as f64 };
    let idf_norm = if df == 0 || paper_count <= 1 {
        1.0
    } else {
        let n = paper_count as f64;
        (n / df as f64).ln() / n.ln()
    };
    (tf_norm * idf_norm).clamp(0.0, 1.0)
}

/// TF-IDF of `key` in the target graph, with document frequency counted over
/// papers matched by [`BackgroundIndex::match_element`].
pub fn tfidf(index: &BackgroundIndex, key: &ElementKey, paper_kg: &KnowledgeGraph) -> Result<f64> {
    let tf = paper_kg
        .mention_count(key)
        .ok_or_else(|| Error::PreconditionViolation(format!("{key} is not an element of the paper graph")))?;
    let max_tf = paper_kg
        .elements()
        .iter()
        .filter_map(|k| paper_kg.mention_count(k))
        .max()
        .unwrap_or(tf);
    let df = index.match_element(key).papers.len();
    Ok(tfidf_score(tf, max_tf, index.paper_count(), df))
}

pub fn save_index(index: &BackgroundIndex, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), index.to_text().as_bytes())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<BackgroundIndex> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BackgroundIndex::from_text(&text, &path.display().to_string())
}

/// Write through a temporary file in the target directory, then rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // the default 0600 of temporary files is wrong for artifacts
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
