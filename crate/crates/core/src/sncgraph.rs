//! Weighted dual graphs of snc models.
//!
//! Vertices carry a multiplicity, a genus, and an optional set of
//! marked-point labels; edges are an unordered multiset of vertex pairs
//! (self-loops allowed). Self-intersection numbers are never stored: on a
//! fiber they are determined by the multiplicities, and `validate` checks
//! exactly that determination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::exactmath::gcd_u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("marked-point label `{0}` appears on more than one vertex")]
    DuplicateMark(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex `{vertex}` has multiplicity {multiplicity} > 1; the genus formula applies to semi-stable graphs only")]
    NotSemistable { vertex: String, multiplicity: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse { line, message: message.into() }
}

/// A component of the special fiber: multiplicity, genus, marks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SncVertex {
    pub id: String,
    pub multiplicity: u64,
    pub genus: u64,
    pub marks: BTreeSet<String>,
}

impl SncVertex {
    pub fn new(id: &str, multiplicity: u64, genus: u64) -> Self {
        SncVertex {
            id: id.to_string(),
            multiplicity,
            genus,
            marks: BTreeSet::new(),
        }
    }

    pub fn with_mark(mut self, mark: &str) -> Self {
        self.marks.insert(mark.to_string());
        self
    }
}

/// Finite weighted dual graph with multiset edges.
#[derive(Debug, Clone, Serialize)]
pub struct SncGraph {
    vertices: BTreeMap<String, SncVertex>,
    edges: Vec<(String, String)>,
}

// Edges are a multiset: equality ignores insertion order.
impl PartialEq for SncGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.vertices != other.vertices {
            return false;
        }
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort();
        b.sort();
        a == b
    }
}

impl Eq for SncGraph {}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Violation,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub vertex: String,
    pub message: String,
}

impl SncGraph {
    pub fn new() -> Self {
        SncGraph { vertices: BTreeMap::new(), edges: Vec::new() }
    }

    pub fn add_vertex(&mut self, v: SncVertex) -> Result<(), GraphError> {
        if self.vertices.contains_key(&v.id) {
            return Err(GraphError::DuplicateVertex(v.id));
        }
        self.vertices.insert(v.id.clone(), v);
        Ok(())
    }

    /// Adds an edge; endpoints are stored in sorted order.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        for id in [a, b] {
            if !self.vertices.contains_key(id) {
                return Err(GraphError::UnknownVertex(id.to_string()));
            }
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges.push((a.to_string(), b.to_string()));
        Ok(())
    }

    pub fn vertex(&self, id: &str) -> Option<&SncVertex> {
        self.vertices.get(id)
    }

    pub fn vertex_mut(&mut self, id: &str) -> Option<&mut SncVertex> {
        self.vertices.get_mut(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &SncVertex> {
        self.vertices.values()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &String> {
        self.vertices.keys()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Degree of a vertex; a self-loop counts twice.
    pub fn degree(&self, id: &str) -> usize {
        self.edges
            .iter()
            .map(|(a, b)| (a == id) as usize + (b == id) as usize)
            .sum()
    }

    /// Opposite endpoints over non-loop edges at `id`, with multiplicity.
    pub fn neighbors(&self, id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        for (a, b) in &self.edges {
            if a == id && b != id {
                out.push(b.as_str());
            } else if b == id && a != id {
                out.push(a.as_str());
            }
        }
        out
    }

    /// Map from mark label to the carrying vertex id (first occurrence).
    pub fn marks(&self) -> BTreeMap<&str, &str> {
        let mut out = BTreeMap::new();
        for v in self.vertices.values() {
            for m in &v.marks {
                out.entry(m.as_str()).or_insert(v.id.as_str());
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.keys().next() else {
            return false;
        };
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut queue = VecDeque::from([start.as_str()]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            for (a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Derived self-intersection of the component at `id`.
    ///
    /// On a fiber the component `E` satisfies `m E^2 = -(sum of the
    /// multiplicities across its non-loop edges)`, so `E^2` exists as an
    /// integer exactly when the divisibility holds. `None` when the
    /// vertex is isolated or the divisibility fails.
    pub fn self_intersection(&self, id: &str) -> Option<i64> {
        let v = self.vertices.get(id)?;
        let ns = self.neighbors(id);
        if ns.is_empty() {
            return None;
        }
        let sum: u64 = ns.iter().map(|n| self.vertices[*n].multiplicity).sum();
        if sum % v.multiplicity != 0 {
            return None;
        }
        Some(-((sum / v.multiplicity) as i64))
    }

    /// Structural and intersection-calculus validation.
    ///
    /// Hard errors: empty or disconnected graph, duplicated mark labels.
    /// Violations come from the fiber relation `m E^2 = -(adjacent
    /// multiplicity sum)` at the vertices whose intersections are fully
    /// visible in the graph, the genus-0 chain vertices: a degree-2
    /// vertex must have `m | m_prev + m_next` and a degree-1 end must
    /// have `m_r | m_{r-1}`. Branch vertices are exempt, so a chain can
    /// be validated standalone with its anchor attached. A mark on a
    /// vertex of multiplicity greater than one is reported as a warning.
    pub fn validate(&self) -> Result<Vec<Diagnostic>, GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let mut seen_marks: BTreeSet<&str> = BTreeSet::new();
        for v in self.vertices.values() {
            for m in &v.marks {
                if !seen_marks.insert(m) {
                    return Err(GraphError::DuplicateMark(m.clone()));
                }
            }
        }

        let mut diags = Vec::new();
        for v in self.vertices.values() {
            let ns = self.neighbors(&v.id);
            if v.genus == 0 && (1..=2).contains(&self.degree(&v.id)) && !ns.is_empty() {
                let sum: u64 = ns.iter().map(|n| self.vertices[*n].multiplicity).sum();
                if sum % v.multiplicity != 0 {
                    diags.push(Diagnostic {
                        severity: Severity::Violation,
                        vertex: v.id.clone(),
                        message: format!(
                            "multiplicity {} does not divide the adjacent sum {}",
                            v.multiplicity, sum
                        ),
                    });
                }
            }
            if !v.marks.is_empty() && v.multiplicity > 1 {
                diags.push(Diagnostic {
                    severity: Severity::Warning,
                    vertex: v.id.clone(),
                    message: format!(
                        "mark on a component of multiplicity {}; rational points specialize to multiplicity-one components",
                        v.multiplicity
                    ),
                });
            }
        }
        Ok(diags)
    }

    /// Genus of the curve from a semi-stable graph: the first Betti
    /// number plus the sum of the vertex genera.
    ///
    /// Rejects graphs carrying any multiplicity above one.
    pub fn genus_semistable(&self) -> Result<u64, GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        if let Some(v) = self.vertices.values().find(|v| v.multiplicity != 1) {
            return Err(GraphError::NotSemistable {
                vertex: v.id.clone(),
                multiplicity: v.multiplicity,
            });
        }
        let b1 = self.edges.len() as u64 + 1 - self.vertices.len() as u64;
        Ok(b1 + self.vertices.values().map(|v| v.genus).sum::<u64>())
    }

    /// Canonical text record; `from_text` inverts it losslessly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("sncgraph v1\n");
        for v in self.vertices.values() {
            write!(out, "v {} m={} g={}", v.id, v.multiplicity, v.genus).unwrap();
            if !v.marks.is_empty() {
                let labels: Vec<&str> = v.marks.iter().map(String::as_str).collect();
                write!(out, " marks={}", labels.join(",")).unwrap();
            }
            out.push('\n');
        }
        let mut edges = self.edges.clone();
        edges.sort();
        for (a, b) in edges {
            writeln!(out, "e {a} {b}").unwrap();
        }
        out
    }

    /// Parses the graph record format. Group-action lines (`group`,
    /// `elt`, `mul`, `act`) are tolerated and skipped so that a skeleton
    /// file can also be read as a bare graph.
    pub fn from_text(input: &str) -> Result<Self, GraphError> {
        let mut g = SncGraph::new();
        let mut lines = input.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((i, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => {
                    let _ = i;
                    continue;
                }
                Some((i, l)) => break (i, l.trim()),
                None => return Err(parse_err(1, "empty input")),
            }
        };
        if header.1 != "sncgraph v1" {
            return Err(parse_err(header.0 + 1, "expected header `sncgraph v1`"));
        }
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let id = tok
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex line needs an id"))?;
                    check_ident(id, lineno)?;
                    let mut mult: Option<u64> = None;
                    let mut genus: Option<u64> = None;
                    let mut marks = BTreeSet::new();
                    for field in tok {
                        if let Some(m) = field.strip_prefix("m=") {
                            let m: u64 = m.parse().map_err(|_| {
                                parse_err(lineno, format!("bad multiplicity `{m}`"))
                            })?;
                            if m == 0 {
                                return Err(parse_err(lineno, "multiplicity must be >= 1"));
                            }
                            mult = Some(m);
                        } else if let Some(gv) = field.strip_prefix("g=") {
                            genus = Some(gv.parse().map_err(|_| {
                                parse_err(lineno, format!("bad genus `{gv}`"))
                            })?);
                        } else if let Some(ms) = field.strip_prefix("marks=") {
                            for label in ms.split(',').filter(|s| !s.is_empty()) {
                                check_ident(label, lineno)?;
                                marks.insert(label.to_string());
                            }
                        } else {
                            return Err(parse_err(lineno, format!("unknown field `{field}`")));
                        }
                    }
                    let mult =
                        mult.ok_or_else(|| parse_err(lineno, "vertex line needs m=<int>"))?;
                    let genus =
                        genus.ok_or_else(|| parse_err(lineno, "vertex line needs g=<int>"))?;
                    let mut v = SncVertex::new(id, mult, genus);
                    v.marks = marks;
                    g.add_vertex(v).map_err(|e| match e {
                        GraphError::DuplicateVertex(id) => {
                            parse_err(lineno, format!("duplicate vertex id `{id}`"))
                        }
                        other => other,
                    })?;
                }
                Some("e") => {
                    let a = tok
                        .next()
                        .ok_or_else(|| parse_err(lineno, "edge line needs two vertex ids"))?;
                    let b = tok
                        .next()
                        .ok_or_else(|| parse_err(lineno, "edge line needs two vertex ids"))?;
                    if tok.next().is_some() {
                        return Err(parse_err(lineno, "trailing tokens on edge line"));
                    }
                    g.add_edge(a, b).map_err(|e| match e {
                        GraphError::UnknownVertex(id) => {
                            parse_err(lineno, format!("edge references unknown vertex `{id}`"))
                        }
                        other => other,
                    })?;
                }
                Some("group") | Some("elt") | Some("mul") | Some("act") => break,
                Some(other) => {
                    return Err(parse_err(lineno, format!("unknown record `{other}`")));
                }
                None => {}
            }
        }
        if g.vertices.is_empty() {
            return Err(parse_err(1, "graph has no vertices"));
        }
        Ok(g)
    }

    /// DOT rendering; the vertices in `highlight` are filled red, marked
    /// vertices get a doubled outline.
    pub fn to_dot(&self, highlight: &BTreeSet<String>) -> String {
        let mut out = String::from("graph snc {\n  node [shape=circle, fontsize=10];\n");
        for v in self.vertices.values() {
            let mut label = format!("{}\\nm={} g={}", v.id, v.multiplicity, v.genus);
            if !v.marks.is_empty() {
                let labels: Vec<&str> = v.marks.iter().map(String::as_str).collect();
                write!(label, "\\n({})", labels.join(",")).unwrap();
            }
            let mut attrs = format!("label=\"{label}\"");
            if highlight.contains(&v.id) {
                attrs.push_str(", style=filled, fillcolor=red");
            }
            if !v.marks.is_empty() {
                attrs.push_str(", peripheries=2");
            }
            writeln!(out, "  \"{}\" [{attrs}];", v.id).unwrap();
        }
        let mut edges = self.edges.clone();
        edges.sort();
        for (a, b) in edges {
            writeln!(out, "  \"{a}\" -- \"{b}\";").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

impl Default for SncGraph {
    fn default() -> Self {
        Self::new()
    }
}

fn check_ident(s: &str, lineno: usize) -> Result<(), GraphError> {
    if s.is_empty()
        || !s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
    {
        return Err(parse_err(
            lineno,
            format!("identifier `{s}` must be nonempty [A-Za-z0-9_.-]"),
        ));
    }
    Ok(())
}

/// A chain: an anchor vertex followed by consecutive degree-2 interior
/// vertices, ending either at another anchor (two-ended) or at a
/// degree-1 terminal (dangling).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chain {
    /// Vertex ids in path order, anchor first.
    pub vertices: Vec<String>,
    pub dangling: bool,
}

impl Chain {
    pub fn multiplicities(&self, g: &SncGraph) -> Vec<u64> {
        self.vertices
            .iter()
            .map(|id| g.vertex(id).map(|v| v.multiplicity).unwrap_or(0))
            .collect()
    }
}

/// Extracts the maximal chains of `g` leaving the anchor set.
///
/// Interior vertices must have degree 2 and genus 0; walks that hit a
/// branch vertex or a positive-genus vertex are discarded (they are not
/// chains). A two-ended chain is discovered once from each end and
/// listed once, keyed by its pair of terminal edges, so parallel edges
/// and loops back to the same anchor are kept apart correctly.
pub fn chains(g: &SncGraph, anchors: &BTreeSet<String>) -> Vec<Chain> {
    let mut out: Vec<Chain> = Vec::new();
    let mut seen_edge_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for anchor in anchors {
        // Walk each edge germ out of the anchor.
        for (idx, (a, b)) in g.edges().iter().enumerate() {
            let next = if a == anchor && b != anchor {
                b.clone()
            } else if b == anchor && a != anchor {
                a.clone()
            } else {
                continue;
            };
            let mut path = vec![anchor.clone()];
            let mut prev_edge = idx;
            let mut cur = next;
            let chain = loop {
                if anchors.contains(&cur) {
                    path.push(cur.clone());
                    break Some(Chain { vertices: path.clone(), dangling: false });
                }
                let v = match g.vertex(&cur) {
                    Some(v) => v,
                    None => break None,
                };
                let deg = g.degree(&cur);
                if v.genus > 0 || deg > 2 {
                    break None; // not chain-shaped
                }
                path.push(cur.clone());
                if deg == 1 {
                    break Some(Chain { vertices: path.clone(), dangling: true });
                }
                // continue through the other edge
                let mut advanced = false;
                for (j, (x, y)) in g.edges().iter().enumerate() {
                    if j == prev_edge {
                        continue;
                    }
                    let to = if x == &cur {
                        y
                    } else if y == &cur {
                        x
                    } else {
                        continue;
                    };
                    prev_edge = j;
                    cur = to.clone();
                    advanced = true;
                    break;
                }
                if !advanced {
                    break None;
                }
            };
            if let Some(c) = chain {
                if !c.dangling {
                    let key = (idx.min(prev_edge), idx.max(prev_edge));
                    if !seen_edge_pairs.insert(key) {
                        continue;
                    }
                }
                out.push(c);
            }
        }
    }
    out
}

/// Gcd invariance along a chain: every consecutive pair has the same gcd
/// as the whole multiplicity sequence, and on a dangling chain that gcd
/// is the terminal multiplicity.
pub fn chain_gcd_check(g: &SncGraph, chain: &Chain) -> Vec<Diagnostic> {
    let mults = chain.multiplicities(g);
    let mut diags = Vec::new();
    if mults.len() < 2 {
        return diags;
    }
    let total = mults.iter().copied().fold(0u64, gcd_u64);
    for (i, w) in mults.windows(2).enumerate() {
        let pair = gcd_u64(w[0], w[1]);
        if pair != total {
            diags.push(Diagnostic {
                severity: Severity::Violation,
                vertex: chain.vertices[i].clone(),
                message: format!(
                    "gcd({}, {}) = {pair} differs from the chain gcd {total}",
                    w[0], w[1]
                ),
            });
        }
    }
    if chain.dangling {
        let last = *mults.last().unwrap();
        if total != last {
            diags.push(Diagnostic {
                severity: Severity::Violation,
                vertex: chain.vertices.last().unwrap().clone(),
                message: format!(
                    "dangling chain gcd {total} differs from the terminal multiplicity {last}"
                ),
            });
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_graph(mults: &[u64]) -> SncGraph {
        let mut g = SncGraph::new();
        for (i, &m) in mults.iter().enumerate() {
            g.add_vertex(SncVertex::new(&format!("x{i}"), m, 0)).unwrap();
        }
        for i in 1..mults.len() {
            g.add_edge(&format!("x{}", i - 1), &format!("x{i}")).unwrap();
        }
        g
    }

    /// The (6,5,4,3,2,1) chain with its two sibling arms attached to the
    /// multiplicity-6 anchor.
    fn star_chain_graph() -> SncGraph {
        let mut g = chain_graph(&[6, 5, 4, 3, 2, 1]);
        g.add_vertex(SncVertex::new("p1", 3, 0)).unwrap();
        g.add_vertex(SncVertex::new("q1", 4, 0)).unwrap();
        g.add_vertex(SncVertex::new("q2", 2, 0)).unwrap();
        g.add_edge("x0", "p1").unwrap();
        g.add_edge("x0", "q1").unwrap();
        g.add_edge("q1", "q2").unwrap();
        g
    }

    #[test]
    fn long_chain_passes_with_constant_self_intersection() {
        let g = star_chain_graph();
        assert!(g.validate().unwrap().is_empty());
        for i in 1..6 {
            assert_eq!(g.self_intersection(&format!("x{i}")), Some(-2));
        }
    }

    #[test]
    fn divisibility_violation_detected() {
        // interior vertex of multiplicity 3 between 4 and 1
        let mut g = chain_graph(&[4, 3, 1]);
        g.add_vertex(SncVertex::new("d", 2, 0)).unwrap();
        g.add_vertex(SncVertex::new("e", 2, 0)).unwrap();
        g.add_edge("x0", "d").unwrap();
        g.add_edge("x0", "e").unwrap();
        let diags = g.validate().unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].vertex, "x1");
    }

    #[test]
    fn single_vertex_is_valid() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("x", 1, 0)).unwrap();
        assert!(g.validate().unwrap().is_empty());
    }

    #[test]
    fn disconnected_is_an_error() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("a", 1, 0)).unwrap();
        g.add_vertex(SncVertex::new("b", 1, 0)).unwrap();
        assert_eq!(g.validate(), Err(GraphError::Disconnected));
    }

    #[test]
    fn duplicate_mark_is_an_error() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("a", 1, 0).with_mark("O")).unwrap();
        g.add_vertex(SncVertex::new("b", 1, 0).with_mark("O")).unwrap();
        g.add_edge("a", "b").unwrap();
        assert_eq!(g.validate(), Err(GraphError::DuplicateMark("O".into())));
    }

    #[test]
    fn mark_on_high_multiplicity_warns() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("a", 2, 0).with_mark("O")).unwrap();
        g.add_vertex(SncVertex::new("b", 2, 0)).unwrap();
        g.add_edge("a", "b").unwrap();
        let diags = g.validate().unwrap();
        assert!(diags.iter().any(|d| d.severity == Severity::Warning));
    }

    #[test]
    fn genus_examples() {
        // loop of n multiplicity-1 vertices has genus 1
        for n in 2..=5 {
            let mut g = SncGraph::new();
            for i in 0..n {
                g.add_vertex(SncVertex::new(&format!("v{i}"), 1, 0)).unwrap();
            }
            for i in 0..n {
                g.add_edge(&format!("v{i}"), &format!("v{}", (i + 1) % n)).unwrap();
            }
            assert_eq!(g.genus_semistable().unwrap(), 1);
        }
        // single vertex of genus 2
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("x", 1, 2)).unwrap();
        assert_eq!(g.genus_semistable().unwrap(), 2);
        // two vertices, three parallel edges
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("a", 1, 0)).unwrap();
        g.add_vertex(SncVertex::new("b", 1, 0)).unwrap();
        for _ in 0..3 {
            g.add_edge("a", "b").unwrap();
        }
        assert_eq!(g.genus_semistable().unwrap(), 2);
    }

    #[test]
    fn genus_rejects_multiplicities() {
        let g = chain_graph(&[2, 1]);
        assert!(matches!(
            g.genus_semistable(),
            Err(GraphError::NotSemistable { .. })
        ));
    }

    #[test]
    fn self_loop_counts_twice_in_degree() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("a", 1, 0)).unwrap();
        g.add_edge("a", "a").unwrap();
        assert_eq!(g.degree("a"), 2);
        assert_eq!(g.genus_semistable().unwrap(), 1);
    }

    #[test]
    fn text_round_trip() {
        let mut g = chain_graph(&[6, 3, 1]);
        g.vertex_mut("x2").unwrap().marks.insert("O".into());
        let text = g.to_text();
        let back = SncGraph::from_text(&text).unwrap();
        assert_eq!(g, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "sncgraph v1\nv a m=1 g=0\ne a zz\n";
        match SncGraph::from_text(bad) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(SncGraph::from_text("nope\n").is_err());
        assert!(SncGraph::from_text("sncgraph v1\nv a m=0 g=0\n").is_err());
    }

    #[test]
    fn chain_extraction_and_gcd() {
        let g = chain_graph(&[6, 5, 4, 3, 2, 1]);
        let anchors = BTreeSet::from(["x0".to_string()]);
        let cs = chains(&g, &anchors);
        assert_eq!(cs.len(), 1);
        assert!(cs[0].dangling);
        assert_eq!(cs[0].multiplicities(&g), vec![6, 5, 4, 3, 2, 1]);
        assert!(chain_gcd_check(&g, &cs[0]).is_empty());
    }

    #[test]
    fn constant_chain_two_ended() {
        let g = chain_graph(&[3, 3, 3]);
        let anchors = BTreeSet::from(["x0".to_string(), "x2".to_string()]);
        let cs = chains(&g, &anchors);
        assert_eq!(cs.len(), 1);
        assert!(!cs[0].dangling);
        assert!(chain_gcd_check(&g, &cs[0]).is_empty());
    }

    #[test]
    fn parallel_edges_give_distinct_chains_and_loops_one() {
        // theta graph with both vertices anchored: three parallel chains
        let mut theta = SncGraph::new();
        theta.add_vertex(SncVertex::new("a", 1, 0)).unwrap();
        theta.add_vertex(SncVertex::new("b", 1, 0)).unwrap();
        for _ in 0..3 {
            theta.add_edge("a", "b").unwrap();
        }
        let anchors = BTreeSet::from(["a".to_string(), "b".to_string()]);
        assert_eq!(chains(&theta, &anchors).len(), 3);

        // a loop through three interior vertices is one chain, not two
        let mut loopg = SncGraph::new();
        for (id, m) in [("a", 1), ("c1", 1), ("c2", 1), ("c3", 1)] {
            loopg.add_vertex(SncVertex::new(id, m, 0)).unwrap();
        }
        loopg.add_edge("a", "c1").unwrap();
        loopg.add_edge("c1", "c2").unwrap();
        loopg.add_edge("c2", "c3").unwrap();
        loopg.add_edge("c3", "a").unwrap();
        let anchors = BTreeSet::from(["a".to_string()]);
        let cs = chains(&loopg, &anchors);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].vertices.first(), cs[0].vertices.last());
    }

    #[test]
    fn derived_self_intersections_reproduce_the_recurrence() {
        // m_{j+1} = -E_j^2 m_j - m_{j-1} along the validated chain
        let g = star_chain_graph();
        let mults: Vec<i64> = (0..6)
            .map(|i| g.vertex(&format!("x{i}")).unwrap().multiplicity as i64)
            .collect();
        for j in 1..5 {
            let e2 = g.self_intersection(&format!("x{j}")).unwrap();
            assert_eq!(mults[j + 1], -e2 * mults[j] - mults[j - 1]);
        }
    }

    #[test]
    fn dot_output_mentions_highlight() {
        let g = chain_graph(&[2, 1]);
        let dot = g.to_dot(&BTreeSet::from(["x0".to_string()]));
        assert!(dot.contains("fillcolor=red"));
        assert!(dot.contains("\"x0\" -- \"x1\""));
    }
}
