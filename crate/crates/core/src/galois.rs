//! Finite group actions on semi-stable skeletons and their quotients.
//!
//! The input is the skeleton of the semi-stable model upstairs — a
//! connected graph whose vertices all have multiplicity one, carrying
//! per-vertex genus and marks — together with a finite group acting by
//! vertex and edge permutations, each edge image carrying an orientation
//! bit. The quotient identifies orbits; an edge some element maps to
//! itself reversed is first subdivided at its midpoint, so the fold image
//! of the midpoint is a genuine vertex downstairs.
//!
//! Splitting numbers (orbit sizes) decorate the quotient: they are the
//! degrees of the fields of constants, and their jumps locate the nodes
//! of the skeleton. Multiplicities over the base field are deliberately
//! not computed here: orbit sizes do not determine them, and those
//! questions belong to the dual-graph calculus.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::triangulate::{ComponentClass, ComponentKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GaloisError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid group: {0}")]
    BadGroup(String),
    #[error("invalid action: {0}")]
    BadAction(String),
    #[error("skeleton must have multiplicity 1 everywhere; vertex `{0}` does not")]
    NotSemistableSkeleton(String),
    #[error("skeleton is not connected")]
    Disconnected,
    #[error("skeleton has no vertices")]
    Empty,
    #[error("duplicate mark label `{0}`")]
    DuplicateMark(String),
    #[error("empty node set: no positive genus, no branching, and no splitting jumps (an unmarked skeleton of genus at most 1 has no canonical triangulation; mark a point)")]
    EmptyNodes,
    #[error("no admissible minimal triangulation: every node is an unmarked removable bending point; mark a point to break the symmetry")]
    NoMinimalTriangulation,
    #[error("{0:?} is not a subgroup")]
    NotASubgroup(Vec<String>),
    #[error("subgroup {0:?} is not normal")]
    NotNormal(Vec<String>),
    #[error("component with boundary attachments {0:?} is not classifiable as a disc or annulus")]
    Unclassifiable(Vec<String>),
}

fn parse_err(line: usize, message: impl Into<String>) -> GaloisError {
    GaloisError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SkelVertex {
    genus: u64,
    marks: BTreeSet<String>,
}

/// Per-element action: a vertex permutation and an edge permutation with
/// an orientation bit per edge (`true` = image traversed backwards).
#[derive(Debug, Clone, PartialEq, Eq)]
struct ElementAction {
    vmap: BTreeMap<String, String>,
    emap: Vec<(usize, bool)>,
}

/// A semi-stable skeleton with a finite group action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisSkeleton {
    vertices: BTreeMap<String, SkelVertex>,
    /// Oriented as written; index in this vector is the edge id.
    edges: Vec<(String, String)>,
    elements: Vec<String>,
    /// `mul[i][j]` is the index of `elements[i] * elements[j]`.
    mul: Vec<Vec<usize>>,
    /// Parallel to `elements`; the identity action is stored explicitly.
    actions: Vec<ElementAction>,
}

impl GaloisSkeleton {
    /// A skeleton with the trivial group.
    pub fn new(
        vertices: Vec<(&str, u64)>,
        edges: Vec<(&str, &str)>,
    ) -> Result<Self, GaloisError> {
        let mut vs = BTreeMap::new();
        for (id, genus) in vertices {
            if vs
                .insert(id.to_string(), SkelVertex { genus, marks: BTreeSet::new() })
                .is_some()
            {
                return Err(GaloisError::BadAction(format!("duplicate vertex `{id}`")));
            }
        }
        let mut es = Vec::new();
        for (a, b) in edges {
            for id in [a, b] {
                if !vs.contains_key(id) {
                    return Err(GaloisError::BadAction(format!("unknown vertex `{id}`")));
                }
            }
            es.push((a.to_string(), b.to_string()));
        }
        let identity = ElementAction {
            vmap: vs.keys().map(|k| (k.clone(), k.clone())).collect(),
            emap: (0..es.len()).map(|i| (i, false)).collect(),
        };
        Ok(GaloisSkeleton {
            vertices: vs,
            edges: es,
            elements: vec!["1".to_string()],
            mul: vec![vec![0]],
            actions: vec![identity],
        })
    }

    pub fn add_mark(&mut self, vertex: &str, label: &str) -> Result<(), GaloisError> {
        let v = self
            .vertices
            .get_mut(vertex)
            .ok_or_else(|| GaloisError::BadAction(format!("unknown vertex `{vertex}`")))?;
        v.marks.insert(label.to_string());
        Ok(())
    }

    /// Installs a group; element actions start as unset except the
    /// identity and must be provided with [`set_action`](Self::set_action).
    pub fn set_group(
        &mut self,
        elements: Vec<&str>,
        mul: Vec<Vec<usize>>,
    ) -> Result<(), GaloisError> {
        let n = elements.len();
        if n == 0 || mul.len() != n || mul.iter().any(|r| r.len() != n) {
            return Err(GaloisError::BadGroup("composition table must be n x n".into()));
        }
        self.elements = elements.iter().map(|s| s.to_string()).collect();
        self.mul = mul;
        let identity = ElementAction {
            vmap: self.vertices.keys().map(|k| (k.clone(), k.clone())).collect(),
            emap: (0..self.edges.len()).map(|i| (i, false)).collect(),
        };
        self.actions = vec![identity; n];
        Ok(())
    }

    pub fn set_action(
        &mut self,
        element: &str,
        vmap: Vec<(&str, &str)>,
        emap: Vec<(usize, usize, bool)>,
    ) -> Result<(), GaloisError> {
        let idx = self
            .elements
            .iter()
            .position(|e| e == element)
            .ok_or_else(|| GaloisError::BadGroup(format!("unknown element `{element}`")))?;
        let mut vm: BTreeMap<String, String> =
            self.vertices.keys().map(|k| (k.clone(), k.clone())).collect();
        for (from, to) in vmap {
            vm.insert(from.to_string(), to.to_string());
        }
        let mut em: Vec<(usize, bool)> = (0..self.edges.len()).map(|i| (i, false)).collect();
        for (from, to, rev) in emap {
            if from >= em.len() || to >= self.edges.len() {
                return Err(GaloisError::BadAction(format!("edge index out of range: {from}>{to}")));
            }
            em[from] = (to, rev);
        }
        self.actions[idx] = ElementAction { vmap: vm, emap: em };
        Ok(())
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn identity_index(&self) -> Result<usize, GaloisError> {
        let n = self.elements.len();
        (0..n)
            .find(|&e| (0..n).all(|x| self.mul[e][x] == x && self.mul[x][e] == x))
            .ok_or_else(|| GaloisError::BadGroup("no identity element in the table".into()))
    }

    fn inverse_index(&self, g: usize) -> Result<usize, GaloisError> {
        let e = self.identity_index()?;
        (0..self.elements.len())
            .find(|&h| self.mul[g][h] == e)
            .ok_or_else(|| {
                GaloisError::BadGroup(format!("element `{}` has no inverse", self.elements[g]))
            })
    }

    /// Checks the table is a group, the actions are permutations
    /// respecting incidence, the whole assignment is a homomorphism, and
    /// genus is constant on orbits. Marks on vertices moved by the
    /// action are legal but reported.
    pub fn validate(&self) -> Result<Vec<String>, GaloisError> {
        if self.vertices.is_empty() {
            return Err(GaloisError::Empty);
        }
        if !self.is_connected() {
            return Err(GaloisError::Disconnected);
        }
        let mut seen = BTreeSet::new();
        for v in self.vertices.values() {
            for m in &v.marks {
                if !seen.insert(m.clone()) {
                    return Err(GaloisError::DuplicateMark(m.clone()));
                }
            }
        }
        let n = self.elements.len();
        {
            let mut labels = self.elements.clone();
            labels.sort();
            labels.dedup();
            if labels.len() != n {
                return Err(GaloisError::BadGroup("duplicate element labels".into()));
            }
        }
        // Latin square + associativity make the table a group.
        for i in 0..n {
            let mut row: Vec<usize> = self.mul[i].clone();
            let mut col: Vec<usize> = (0..n).map(|j| self.mul[j][i]).collect();
            row.sort_unstable();
            col.sort_unstable();
            if row != (0..n).collect::<Vec<_>>() || col != (0..n).collect::<Vec<_>>() {
                return Err(GaloisError::BadGroup(format!(
                    "row or column of `{}` is not a permutation",
                    self.elements[i]
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.mul[self.mul[a][b]][c] != self.mul[a][self.mul[b][c]] {
                        return Err(GaloisError::BadGroup("table is not associative".into()));
                    }
                }
            }
        }
        let e = self.identity_index()?;
        if self.actions[e].vmap.iter().any(|(k, v)| k != v)
            || self.actions[e].emap.iter().enumerate().any(|(i, &(j, r))| i != j || r)
        {
            return Err(GaloisError::BadAction("identity element must act trivially".into()));
        }

        for (gi, act) in self.actions.iter().enumerate() {
            let name = &self.elements[gi];
            // vertex permutation
            let mut image: BTreeSet<&String> = BTreeSet::new();
            for (from, to) in &act.vmap {
                let _ = from;
                if !self.vertices.contains_key(to) || !image.insert(to) {
                    return Err(GaloisError::BadAction(format!(
                        "`{name}` does not act by a vertex permutation"
                    )));
                }
            }
            if act.vmap.len() != self.vertices.len() {
                return Err(GaloisError::BadAction(format!(
                    "`{name}` is missing vertex images"
                )));
            }
            // edge permutation + incidence
            let mut eimage = BTreeSet::new();
            for (i, &(j, rev)) in act.emap.iter().enumerate() {
                if !eimage.insert(j) {
                    return Err(GaloisError::BadAction(format!(
                        "`{name}` does not act by an edge permutation"
                    )));
                }
                let (a, b) = &self.edges[i];
                let (ia, ib) = (&act.vmap[a], &act.vmap[b]);
                let (ja, jb) = &self.edges[j];
                let ok = if rev { ia == jb && ib == ja } else { ia == ja && ib == jb };
                if !ok {
                    return Err(GaloisError::BadAction(format!(
                        "`{name}` maps edge {i} to {j} but the endpoints do not match"
                    )));
                }
            }
            // genus constancy
            for (vid, v) in &self.vertices {
                let iv = &act.vmap[vid];
                if self.vertices[iv].genus != v.genus {
                    return Err(GaloisError::BadAction(format!(
                        "`{name}` moves `{vid}` to `{iv}` of different genus"
                    )));
                }
            }
        }
        // homomorphism
        for g in 0..n {
            for h in 0..n {
                let gh = self.mul[g][h];
                for vid in self.vertices.keys() {
                    let via = &self.actions[g].vmap[&self.actions[h].vmap[vid]];
                    if via != &self.actions[gh].vmap[vid] {
                        return Err(GaloisError::BadAction(format!(
                            "vertex action is not a homomorphism at ({}, {})",
                            self.elements[g], self.elements[h]
                        )));
                    }
                }
                for i in 0..self.edges.len() {
                    let (hj, hr) = self.actions[h].emap[i];
                    let (gj, gr) = self.actions[g].emap[hj];
                    if self.actions[gh].emap[i] != (gj, hr ^ gr) {
                        return Err(GaloisError::BadAction(format!(
                            "edge action is not a homomorphism at ({}, {})",
                            self.elements[g], self.elements[h]
                        )));
                    }
                }
            }
        }
        let mut notes = Vec::new();
        for (vid, v) in &self.vertices {
            if !v.marks.is_empty() {
                let moved = self.actions.iter().any(|a| &a.vmap[vid] != vid);
                if moved {
                    notes.push(format!(
                        "marked vertex `{vid}` is moved by the action; rational marks are usually fixed"
                    ));
                }
            }
        }
        Ok(notes)
    }

    fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.keys().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(v) = queue.pop_front() {
            for (a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == &v && !seen.contains(y) {
                        seen.insert(y.clone());
                        queue.push_back(y.clone());
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Parses the skeleton file format: a graph record (all `m=1`)
    /// followed by `group <n>`, `elt <name>` lines, `mul <x> <y> <xy>`
    /// lines, and `act <elt> v <a>><b>` / `act <elt> e <i>><j> [rev]`
    /// lines. Edge ids are the 0-based order of the `e` lines.
    pub fn from_text(input: &str) -> Result<Self, GaloisError> {
        let mut vertices: BTreeMap<String, SkelVertex> = BTreeMap::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut elements: Vec<String> = Vec::new();
        let mut group_n: Option<usize> = None;
        let mut mul_lines: Vec<(usize, String, String, String)> = Vec::new();
        let mut act_lines: Vec<(usize, String, String, String)> = Vec::new();

        let mut lines = input.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
                Some((i, l)) => break (i, l.trim().to_string()),
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
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "v" => {
                    if toks.len() < 4 {
                        return Err(parse_err(lineno, "vertex line needs `v <id> m=<n> g=<n>`"));
                    }
                    let id = toks[1].to_string();
                    let mut genus = None;
                    let mut marks = BTreeSet::new();
                    for field in &toks[2..] {
                        if let Some(m) = field.strip_prefix("m=") {
                            let m: u64 = m
                                .parse()
                                .map_err(|_| parse_err(lineno, format!("bad multiplicity `{m}`")))?;
                            if m != 1 {
                                return Err(GaloisError::NotSemistableSkeleton(id));
                            }
                        } else if let Some(g) = field.strip_prefix("g=") {
                            genus = Some(g.parse().map_err(|_| {
                                parse_err(lineno, format!("bad genus `{g}`"))
                            })?);
                        } else if let Some(ms) = field.strip_prefix("marks=") {
                            for label in ms.split(',').filter(|s| !s.is_empty()) {
                                marks.insert(label.to_string());
                            }
                        } else {
                            return Err(parse_err(lineno, format!("unknown field `{field}`")));
                        }
                    }
                    let genus =
                        genus.ok_or_else(|| parse_err(lineno, "vertex line needs g=<int>"))?;
                    if vertices.insert(id.clone(), SkelVertex { genus, marks }).is_some() {
                        return Err(parse_err(lineno, format!("duplicate vertex `{id}`")));
                    }
                }
                "e" => {
                    if toks.len() != 3 {
                        return Err(parse_err(lineno, "edge line needs two vertex ids"));
                    }
                    for id in &toks[1..3] {
                        if !vertices.contains_key(*id) {
                            return Err(parse_err(lineno, format!("unknown vertex `{id}`")));
                        }
                    }
                    edges.push((toks[1].to_string(), toks[2].to_string()));
                }
                "group" => {
                    let n: usize = toks
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(lineno, "group line needs an order"))?;
                    group_n = Some(n);
                }
                "elt" => {
                    let name = toks
                        .get(1)
                        .ok_or_else(|| parse_err(lineno, "elt line needs a label"))?;
                    elements.push(name.to_string());
                }
                "mul" => {
                    if toks.len() != 4 {
                        return Err(parse_err(lineno, "mul line needs `mul <x> <y> <xy>`"));
                    }
                    mul_lines.push((
                        lineno,
                        toks[1].to_string(),
                        toks[2].to_string(),
                        toks[3].to_string(),
                    ));
                }
                "act" => {
                    if toks.len() < 4 {
                        return Err(parse_err(lineno, "act line needs `act <elt> v|e <x>><y>`"));
                    }
                    let rest = if toks.len() > 4 { toks[4..].join(" ") } else { String::new() };
                    act_lines.push((
                        lineno,
                        toks[1].to_string(),
                        format!("{} {}", toks[2], toks[3]),
                        rest,
                    ));
                }
                other => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
            }
        }
        if vertices.is_empty() {
            return Err(parse_err(1, "skeleton has no vertices"));
        }
        let n = group_n.unwrap_or(1);
        if elements.is_empty() {
            elements.push("1".to_string());
        }
        if elements.len() != n {
            return Err(GaloisError::BadGroup(format!(
                "group order {n} but {} element labels",
                elements.len()
            )));
        }
        let index: BTreeMap<&str, usize> =
            elements.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
        let mut mul = vec![vec![usize::MAX; n]; n];
        if n == 1 {
            mul[0][0] = 0;
        }
        for (lineno, x, y, z) in mul_lines {
            let (&xi, &yi, &zi) = (
                index.get(x.as_str()).ok_or_else(|| parse_err(lineno, format!("unknown element `{x}`")))?,
                index.get(y.as_str()).ok_or_else(|| parse_err(lineno, format!("unknown element `{y}`")))?,
                index.get(z.as_str()).ok_or_else(|| parse_err(lineno, format!("unknown element `{z}`")))?,
            );
            mul[xi][yi] = zi;
        }
        if mul.iter().any(|r| r.contains(&usize::MAX)) {
            return Err(GaloisError::BadGroup("incomplete composition table".into()));
        }

        let mut sk = GaloisSkeleton {
            vertices,
            edges,
            elements: elements.clone(),
            mul,
            actions: Vec::new(),
        };
        let identity = ElementAction {
            vmap: sk.vertices.keys().map(|k| (k.clone(), k.clone())).collect(),
            emap: (0..sk.edges.len()).map(|i| (i, false)).collect(),
        };
        sk.actions = vec![identity; n];
        for (lineno, elt, spec, rest) in act_lines {
            let &gi = index
                .get(elt.as_str())
                .ok_or_else(|| parse_err(lineno, format!("unknown element `{elt}`")))?;
            let (kind, mapping) = spec
                .split_once(' ')
                .ok_or_else(|| parse_err(lineno, "malformed act line"))?;
            let (from, to) = mapping
                .split_once('>')
                .ok_or_else(|| parse_err(lineno, "act mapping needs `from>to`"))?;
            match kind {
                "v" => {
                    if !sk.vertices.contains_key(to) {
                        return Err(parse_err(lineno, format!("unknown vertex `{to}`")));
                    }
                    sk.actions[gi].vmap.insert(from.to_string(), to.to_string());
                }
                "e" => {
                    let fi: usize = from
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad edge id `{from}`")))?;
                    let ti: usize = to
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad edge id `{to}`")))?;
                    if fi >= sk.edges.len() || ti >= sk.edges.len() {
                        return Err(parse_err(lineno, "edge id out of range"));
                    }
                    let rev = match rest.trim() {
                        "" => false,
                        "rev" => true,
                        other => {
                            return Err(parse_err(lineno, format!("unknown act suffix `{other}`")))
                        }
                    };
                    sk.actions[gi].emap[fi] = (ti, rev);
                }
                other => return Err(parse_err(lineno, format!("unknown act kind `{other}`"))),
            }
        }
        Ok(sk)
    }

    /// The quotient by the full group.
    pub fn quotient(&self) -> Result<QuotientSkeleton, GaloisError> {
        self.validate()?;
        let all: Vec<usize> = (0..self.elements.len()).collect();
        Ok(self.quotient_full(&all)?.skeleton)
    }

    /// Quotient by a subgroup given by element labels, returning the
    /// quotient skeleton together with the induced action of the
    /// quotient group when the subgroup is normal.
    pub fn quotient_by_subgroup(
        &self,
        subgroup: &BTreeSet<String>,
    ) -> Result<GaloisSkeleton, GaloisError> {
        self.validate()?;
        let sub: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| subgroup.contains(*e))
            .map(|(i, _)| i)
            .collect();
        let labels: Vec<String> = subgroup.iter().cloned().collect();
        if sub.len() != subgroup.len() {
            return Err(GaloisError::NotASubgroup(labels));
        }
        let e = self.identity_index()?;
        if !sub.contains(&e) {
            return Err(GaloisError::NotASubgroup(labels));
        }
        for &a in &sub {
            for &b in &sub {
                if !sub.contains(&self.mul[a][b]) {
                    return Err(GaloisError::NotASubgroup(labels));
                }
            }
        }
        for g in 0..self.elements.len() {
            let gi = self.inverse_index(g)?;
            for &h in &sub {
                let conj = self.mul[self.mul[g][h]][gi];
                if !sub.contains(&conj) {
                    return Err(GaloisError::NotNormal(labels));
                }
            }
        }

        let comp = self.quotient_full(&sub)?;
        let q = &comp.skeleton;

        // Quotient graph as a plain skeleton.
        let mut vs: BTreeMap<String, SkelVertex> = BTreeMap::new();
        for (id, v) in &q.vertices {
            vs.insert(id.clone(), SkelVertex { genus: v.genus, marks: v.marks.clone() });
        }
        let mut new_edges = Vec::new();
        for qe in &q.edges {
            new_edges.push((qe.a.clone(), qe.b.clone()));
        }

        // Cosets of the subgroup, represented by their smallest label.
        let n = self.elements.len();
        let mut coset_of: Vec<usize> = vec![usize::MAX; n];
        let mut coset_reps: Vec<usize> = Vec::new();
        for g in 0..n {
            if coset_of[g] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = sub.iter().map(|&h| self.mul[g][h]).collect();
            let rep = *members
                .iter()
                .min_by_key(|&&m| &self.elements[m])
                .expect("coset nonempty");
            let ci = coset_reps.len();
            coset_reps.push(rep);
            for m in members {
                coset_of[m] = ci;
            }
        }
        let coset_labels: Vec<String> = coset_reps
            .iter()
            .map(|&r| self.elements[r].clone())
            .collect();
        let m = coset_reps.len();
        let mut qmul = vec![vec![0usize; m]; m];
        for (i, &gi) in coset_reps.iter().enumerate() {
            for (j, &gj) in coset_reps.iter().enumerate() {
                qmul[i][j] = coset_of[self.mul[gi][gj]];
            }
        }

        // Induced action of each coset representative on the quotient.
        // Quotient vertex ids are their own orbit representatives, so the
        // image of a quotient vertex is the orbit of its rep's image.
        let mut actions = Vec::with_capacity(m);
        for &rep in &coset_reps {
            let (dv, de) = self.derived_action(&comp.derived, rep);
            let mut vmap = BTreeMap::new();
            for id in q.vertices.keys() {
                vmap.insert(id.clone(), comp.vertex_orbit[&dv[id]].clone());
            }
            let mut emap = vec![(0usize, false); q.edges.len()];
            for (qi, _) in q.edges.iter().enumerate() {
                let rep_edge = comp.rep_edge_of_quotient[qi];
                let (img, rev) = de[rep_edge];
                let target_rep = comp.edge_orbit[img];
                let align = comp.edge_align[img];
                emap[qi] = (comp.quotient_edge_of[&target_rep], rev ^ align);
            }
            actions.push(ElementAction { vmap, emap });
        }

        let out = GaloisSkeleton {
            vertices: vs,
            edges: new_edges,
            elements: coset_labels,
            mul: qmul,
            actions,
        };
        out.validate()?;
        Ok(out)
    }

    /// Quotient by the subgroup in two stages composed into one result:
    /// splitting numbers multiply across the stages and fold flags
    /// accumulate, so the outcome is directly comparable with the
    /// one-step quotient by the full group.
    pub fn staged_quotient(
        &self,
        subgroup: &BTreeSet<String>,
    ) -> Result<QuotientSkeleton, GaloisError> {
        let sub: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| subgroup.contains(*e))
            .map(|(i, _)| i)
            .collect();
        let stage1 = self.quotient_full(&sub)?.skeleton;
        let mid = self.quotient_by_subgroup(subgroup)?;
        let mut stage2 = mid.quotient()?;
        // Compose splittings and fold flags through the stage-1 lifts. A
        // stage-2 lift is either a stage-1 quotient vertex (scale by its
        // stage-1 splitting) or a midpoint of a stage-1 quotient edge
        // created by a stage-2 fold (scale by the edge splitting: the
        // fold point upstairs is one midpoint per lifted edge).
        for v in stage2.vertices.values_mut() {
            let mut scale = None;
            for l in &v.lifts {
                let s = match l.strip_prefix("@m").and_then(|s| s.parse::<usize>().ok()) {
                    Some(k) => stage1.edges[k].splitting,
                    None => stage1.vertices[l].splitting,
                };
                debug_assert!(scale.is_none() || scale == Some(s));
                scale.get_or_insert(s);
            }
            v.splitting *= scale.unwrap_or(1);
            if v.fold.is_none() {
                for l in &v.lifts {
                    if let Some(f) = stage1.vertices.get(l).and_then(|x| x.fold.clone()) {
                        v.fold = Some(f);
                        break;
                    }
                }
            }
        }
        // All stage-1 edges under one stage-2 edge are related by the
        // quotient group, so their splittings agree.
        for e in stage2.edges.iter_mut() {
            let mut scale = None;
            for &k in &e.origins {
                let s = stage1.edges[k].splitting;
                debug_assert!(scale.is_none() || scale == Some(s));
                scale.get_or_insert(s);
            }
            e.splitting *= scale.unwrap_or(1);
        }
        Ok(stage2)
    }

    /// Extends the action of one element to the derived (subdivided)
    /// graph. Requires that the element maps folded edges to folded
    /// edges, which holds for subgroup elements and, for normal
    /// subgroups, for every element.
    fn derived_action(
        &self,
        derived: &DerivedGraph,
        g: usize,
    ) -> DerivedAction {
        let act = &self.actions[g];
        let mut vmap = BTreeMap::new();
        for id in derived.vertices.keys() {
            if let Some(edge) = derived.midpoint_edge(id) {
                let (j, _) = act.emap[edge];
                vmap.insert(id.clone(), DerivedGraph::midpoint_name(j));
            } else {
                vmap.insert(id.clone(), act.vmap[id].clone());
            }
        }
        let mut emap = Vec::with_capacity(derived.edges.len());
        for de in &derived.edges {
            let (j, r) = act.emap[de.origin];
            let image = match (de.part, r) {
                (Part::Full, _) => (derived.index_of(j, Part::Full), r),
                (Part::HalfA, false) => (derived.index_of(j, Part::HalfA), false),
                (Part::HalfA, true) => (derived.index_of(j, Part::HalfB), true),
                (Part::HalfB, false) => (derived.index_of(j, Part::HalfB), false),
                (Part::HalfB, true) => (derived.index_of(j, Part::HalfA), true),
            };
            emap.push(image);
        }
        (vmap, emap)
    }

    /// Full orbit computation for the action of the listed elements.
    fn quotient_full(&self, elements: &[usize]) -> Result<QuotientComputation, GaloisError> {
        // fold detection: an edge some listed element maps to itself reversed
        let mut folded = vec![false; self.edges.len()];
        let mut fold_witness: Vec<Option<usize>> = vec![None; self.edges.len()];
        for &g in elements {
            for (i, &(j, rev)) in self.actions[g].emap.iter().enumerate() {
                if i == j && rev {
                    folded[i] = true;
                    fold_witness[i].get_or_insert(g);
                }
            }
        }
        // propagate across orbits: subdividing one edge of an orbit
        // subdivides them all
        loop {
            let mut changed = false;
            for &g in elements {
                for (i, &(j, _)) in self.actions[g].emap.iter().enumerate() {
                    if folded[i] != folded[j] {
                        folded[i] = true;
                        folded[j] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let derived = DerivedGraph::build(self, &folded);
        let actions: Vec<DerivedAction> = elements
            .iter()
            .map(|&g| self.derived_action(&derived, g))
            .collect();

        // vertex orbits
        let mut vertex_orbit: BTreeMap<String, String> = BTreeMap::new();
        let mut vertex_orbits: Vec<Vec<String>> = Vec::new();
        for id in derived.vertices.keys() {
            if vertex_orbit.contains_key(id) {
                continue;
            }
            let mut orbit = BTreeSet::from([id.clone()]);
            let mut queue = VecDeque::from([id.clone()]);
            while let Some(v) = queue.pop_front() {
                for (vm, _) in &actions {
                    let to = vm[&v].clone();
                    if orbit.insert(to.clone()) {
                        queue.push_back(to);
                    }
                }
            }
            let rep = orbit.iter().next().expect("orbit nonempty").clone();
            for v in &orbit {
                vertex_orbit.insert(v.clone(), rep.clone());
            }
            vertex_orbits.push(orbit.into_iter().collect());
        }

        // edge orbits with orientation alignment relative to the
        // representative (well-defined: no derived edge reverses onto
        // itself)
        let mut edge_orbit: Vec<usize> = (0..derived.edges.len()).collect();
        let mut edge_align: Vec<bool> = vec![false; derived.edges.len()];
        let mut edge_seen = vec![false; derived.edges.len()];
        let mut edge_orbits: Vec<Vec<usize>> = Vec::new();
        for start in 0..derived.edges.len() {
            if edge_seen[start] {
                continue;
            }
            let mut members = vec![start];
            edge_seen[start] = true;
            edge_orbit[start] = start;
            edge_align[start] = false;
            let mut queue = VecDeque::from([start]);
            while let Some(e) = queue.pop_front() {
                for (_, em) in &actions {
                    let (to, rev) = em[e];
                    let new_align = edge_align[e] ^ rev;
                    if !edge_seen[to] {
                        edge_seen[to] = true;
                        edge_orbit[to] = start;
                        edge_align[to] = new_align;
                        members.push(to);
                        queue.push_back(to);
                    } else if edge_align[to] != new_align && to == e {
                        // self-reversal survived subdivision: impossible
                        unreachable!("derived edge reverses onto itself");
                    }
                }
            }
            members.sort_unstable();
            edge_orbits.push(members);
        }

        // assemble the skeleton
        let mut qvertices: BTreeMap<String, QuotientVertex> = BTreeMap::new();
        for orbit in &vertex_orbits {
            let rep = orbit[0].clone();
            let genus = derived.vertices[&rep].genus;
            let mut marks = BTreeSet::new();
            for v in orbit {
                marks.extend(derived.vertices[v].marks.iter().cloned());
            }
            let fold = self.find_fold(&derived, &actions, orbit, &fold_witness, elements);
            qvertices.insert(
                rep.clone(),
                QuotientVertex {
                    id: rep.clone(),
                    genus,
                    splitting: orbit.len() as u64,
                    fold,
                    marks,
                    lifts: orbit.clone(),
                },
            );
        }
        let mut qedges: Vec<QuotientEdge> = Vec::new();
        let mut quotient_edge_of: BTreeMap<usize, usize> = BTreeMap::new();
        let mut rep_edge_of_quotient: Vec<usize> = Vec::new();
        for members in &edge_orbits {
            let rep = members[0];
            let de = &derived.edges[rep];
            quotient_edge_of.insert(rep, qedges.len());
            rep_edge_of_quotient.push(rep);
            let mut origins: Vec<usize> =
                members.iter().map(|&i| derived.edges[i].origin).collect();
            origins.sort_unstable();
            origins.dedup();
            qedges.push(QuotientEdge {
                a: vertex_orbit[&de.a].clone(),
                b: vertex_orbit[&de.b].clone(),
                splitting: members.len() as u64,
                origins,
            });
        }

        Ok(QuotientComputation {
            skeleton: QuotientSkeleton { vertices: qvertices, edges: qedges },
            derived,
            vertex_orbit,
            edge_orbit,
            edge_align,
            quotient_edge_of,
            rep_edge_of_quotient,
        })
    }

    /// Fold detection for one vertex orbit: a lift of degree 2 whose two
    /// incident darts are swapped by a stabilizing element (midpoints of
    /// reversed edges always qualify, with the reversing element as
    /// witness).
    fn find_fold(
        &self,
        derived: &DerivedGraph,
        actions: &[DerivedAction],
        orbit: &[String],
        fold_witness: &[Option<usize>],
        elements: &[usize],
    ) -> Option<FoldWitness> {
        for v in orbit {
            if let Some(edge) = derived.midpoint_edge(v) {
                let g = fold_witness[edge].expect("midpoint implies a reversing element");
                return Some(FoldWitness::ReversedEdgeMidpoint {
                    element: self.elements[g].clone(),
                });
            }
            let darts = derived.darts_at(v);
            if darts.len() != 2 {
                continue;
            }
            for (k, (vm, em)) in actions.iter().enumerate() {
                if vm[v] != *v {
                    continue;
                }
                if apply_dart(em, &darts[0]) == darts[1] {
                    return Some(FoldWitness::GermSwapAtVertex {
                        lift: v.clone(),
                        element: self.elements[elements[k]].clone(),
                    });
                }
            }
        }
        None
    }
}

fn apply_dart(emap: &[(usize, bool)], dart: &(usize, u8)) -> (usize, u8) {
    let (j, rev) = emap[dart.0];
    (j, dart.1 ^ rev as u8)
}

/// Extension of one element's action to the derived graph: the vertex
/// map plus the edge map with orientation bits.
type DerivedAction = (BTreeMap<String, String>, Vec<(usize, bool)>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Full,
    HalfA,
    HalfB,
}

#[derive(Debug, Clone)]
struct DerivedEdge {
    a: String,
    b: String,
    origin: usize,
    part: Part,
}

/// The input graph with every folded edge subdivided at its midpoint.
#[derive(Debug, Clone)]
struct DerivedGraph {
    vertices: BTreeMap<String, SkelVertex>,
    edges: Vec<DerivedEdge>,
    index: BTreeMap<(usize, u8), usize>,
}

impl DerivedGraph {
    fn midpoint_name(edge: usize) -> String {
        format!("@m{edge}")
    }

    fn midpoint_edge(&self, id: &str) -> Option<usize> {
        id.strip_prefix("@m").and_then(|s| s.parse().ok())
    }

    fn build(sk: &GaloisSkeleton, folded: &[bool]) -> Self {
        let mut vertices = sk.vertices.clone();
        let mut edges = Vec::new();
        let mut index = BTreeMap::new();
        for (i, (a, b)) in sk.edges.iter().enumerate() {
            if folded[i] {
                let mid = Self::midpoint_name(i);
                vertices.insert(mid.clone(), SkelVertex { genus: 0, marks: BTreeSet::new() });
                index.insert((i, 1u8), edges.len());
                edges.push(DerivedEdge { a: a.clone(), b: mid.clone(), origin: i, part: Part::HalfA });
                index.insert((i, 2u8), edges.len());
                edges.push(DerivedEdge { a: mid, b: b.clone(), origin: i, part: Part::HalfB });
            } else {
                index.insert((i, 0u8), edges.len());
                edges.push(DerivedEdge { a: a.clone(), b: b.clone(), origin: i, part: Part::Full });
            }
        }
        DerivedGraph { vertices, edges, index }
    }

    fn index_of(&self, origin: usize, part: Part) -> usize {
        let key = match part {
            Part::Full => (origin, 0u8),
            Part::HalfA => (origin, 1u8),
            Part::HalfB => (origin, 2u8),
        };
        self.index[&key]
    }

    /// Darts at a vertex: (edge index, end) with end 0 = `a`, 1 = `b`.
    fn darts_at(&self, v: &str) -> Vec<(usize, u8)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.a == v {
                out.push((i, 0));
            }
            if e.b == v {
                out.push((i, 1));
            }
        }
        out
    }

}

struct QuotientComputation {
    skeleton: QuotientSkeleton,
    derived: DerivedGraph,
    vertex_orbit: BTreeMap<String, String>,
    edge_orbit: Vec<usize>,
    edge_align: Vec<bool>,
    quotient_edge_of: BTreeMap<usize, usize>,
    rep_edge_of_quotient: Vec<usize>,
}

/// Why a quotient vertex is a fold point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldWitness {
    /// The vertex is the image of the midpoint of an edge reversed by
    /// the recorded element.
    ReversedEdgeMidpoint { element: String },
    /// The recorded element fixes the lift and swaps its two germs.
    GermSwapAtVertex { lift: String, element: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientVertex {
    pub id: String,
    pub genus: u64,
    /// Orbit size: the number of preimages upstairs.
    pub splitting: u64,
    pub fold: Option<FoldWitness>,
    pub marks: BTreeSet<String>,
    pub lifts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientEdge {
    pub a: String,
    pub b: String,
    /// Orbit size: the number of edges upstairs over this one.
    pub splitting: u64,
    /// Indices of the input edges lying over this one.
    pub origins: Vec<usize>,
}

/// The quotient skeleton: orbit vertices and edges with splitting data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientSkeleton {
    pub vertices: BTreeMap<String, QuotientVertex>,
    pub edges: Vec<QuotientEdge>,
}

impl QuotientSkeleton {
    /// Degree in the quotient graph; loops count twice.
    pub fn degree(&self, id: &str) -> usize {
        self.edges
            .iter()
            .map(|e| (e.a == id) as usize + (e.b == id) as usize)
            .sum()
    }

    pub fn incident_edges(&self, id: &str) -> Vec<&QuotientEdge> {
        self.edges.iter().filter(|e| e.a == id || e.b == id).collect()
    }

    /// Splitting numbers on vertices and edge interiors, and the set of
    /// vertices where the function jumps.
    pub fn splitting_profile(&self) -> SplittingProfile {
        let mut vertex_s = BTreeMap::new();
        let mut discontinuities = BTreeSet::new();
        for (id, v) in &self.vertices {
            vertex_s.insert(id.clone(), v.splitting);
            if self
                .incident_edges(id)
                .iter()
                .any(|e| e.splitting != v.splitting)
            {
                discontinuities.insert(id.clone());
            }
        }
        let edge_s = self
            .edges
            .iter()
            .map(|e| (e.a.clone(), e.b.clone(), e.splitting))
            .collect();
        SplittingProfile { vertex_s, edge_s, discontinuities }
    }

    /// Nodes: positive genus, mark-adjusted degree different from 2, or
    /// a splitting jump. Every mark adds one to the degree of its
    /// carrier (the path from the marked point to the skeleton enters
    /// there). Errs when the set is empty.
    pub fn nodes(&self) -> Result<BTreeSet<String>, GaloisError> {
        let profile = self.splitting_profile();
        let mut out = BTreeSet::new();
        for (id, v) in &self.vertices {
            let adjusted = self.degree(id) + v.marks.len();
            if v.genus > 0 || adjusted != 2 || profile.discontinuities.contains(id) {
                out.insert(id.clone());
            }
        }
        if out.is_empty() {
            return Err(GaloisError::EmptyNodes);
        }
        Ok(out)
    }

    /// Bending points: genus-0 nodes of quotient degree 1 whose single
    /// incident edge has interior splitting twice the vertex splitting
    /// and which carry a fold witness. These are exactly the nodes a
    /// minimal triangulation may drop.
    pub fn bending_points(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (id, v) in &self.vertices {
            if v.genus != 0 || v.fold.is_none() || self.degree(id) != 1 {
                continue;
            }
            let e = self.incident_edges(id)[0];
            if e.splitting == 2 * v.splitting {
                out.insert(id.clone());
            }
        }
        out
    }

    /// The minimal triangulation of the marked quotient: the nodes minus
    /// the unmarked bending points. A mark pins its bending point (the
    /// marked disc may not sit inside the dropped annulus), and marked
    /// vertices are always nodes, so removability needs no iteration.
    /// Errs when nothing is left.
    pub fn minimal_triangulation_marked(&self) -> Result<BTreeSet<String>, GaloisError> {
        let nodes = self.nodes()?;
        let bending = self.bending_points();
        let kept: BTreeSet<String> = nodes
            .iter()
            .filter(|id| {
                !bending.contains(*id) || !self.vertices[*id].marks.is_empty()
            })
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(GaloisError::NoMinimalTriangulation);
        }
        Ok(kept)
    }

    /// Classifies the complement components of a vertex subset as
    /// virtual discs, two-ended annuli, or one-ended annuli (folded
    /// segments with the fold vertex as bending point).
    pub fn classify_components(
        &self,
        subset: &BTreeSet<String>,
    ) -> Result<Vec<ComponentClass>, GaloisError> {
        let interior: Vec<&String> =
            self.vertices.keys().filter(|id| !subset.contains(*id)).collect();
        let index: BTreeMap<&str, usize> =
            interior.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut dsu: Vec<usize> = (0..interior.len()).collect();
        fn find(dsu: &mut [usize], mut i: usize) -> usize {
            while dsu[i] != i {
                dsu[i] = dsu[dsu[i]];
                i = dsu[i];
            }
            i
        }
        // union pass first: roots are only final once every internal
        // edge has been processed
        for e in &self.edges {
            if let (Some(&ia), Some(&ib)) = (index.get(e.a.as_str()), index.get(e.b.as_str())) {
                let (ra, rb) = (find(&mut dsu, ia), find(&mut dsu, ib));
                dsu[ra] = rb;
            }
        }
        let mut internal_edges: BTreeMap<usize, usize> = BTreeMap::new();
        let mut boundary: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut bare: Vec<(String, String)> = Vec::new();
        for e in &self.edges {
            match (index.get(e.a.as_str()), index.get(e.b.as_str())) {
                (Some(&ia), Some(_)) => {
                    *internal_edges.entry(find(&mut dsu, ia)).or_default() += 1;
                }
                (Some(&ia), None) => boundary.entry(find(&mut dsu, ia)).or_default().push(e.b.clone()),
                (None, Some(&ib)) => boundary.entry(find(&mut dsu, ib)).or_default().push(e.a.clone()),
                (None, None) => bare.push((e.a.clone(), e.b.clone())),
            }
        }
        let mut members: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, id) in interior.iter().enumerate() {
            members.entry(find(&mut dsu, i)).or_default().push((*id).clone());
        }

        let mut out = Vec::new();
        for (root, ids) in members {
            let mut bd = boundary.remove(&root).unwrap_or_default();
            bd.sort();
            let n_internal = internal_edges.get(&root).copied().unwrap_or(0);
            let is_tree = n_internal + 1 == ids.len();
            let folds: Vec<&String> = ids
                .iter()
                .filter(|id| self.vertices[*id].fold.is_some())
                .collect();
            let has_genus = ids.iter().any(|id| self.vertices[id].genus > 0);
            let kind = match (bd.len(), folds.len()) {
                (1, 0) if is_tree && !has_genus => ComponentKind::VirtualDisc,
                (1, 1) if is_tree && !has_genus => ComponentKind::VirtualAnnulusOneEnd,
                (2, 0) if is_tree && !has_genus => ComponentKind::VirtualAnnulusTwoEnds,
                _ => return Err(GaloisError::Unclassifiable(bd)),
            };
            let bending_vertex = match kind {
                ComponentKind::VirtualAnnulusOneEnd => Some(folds[0].clone()),
                _ => None,
            };
            let mut interior_sorted = ids;
            interior_sorted.sort();
            out.push(ComponentClass { kind, boundary: bd, bending_vertex, interior: interior_sorted });
        }
        for (a, b) in bare {
            let mut bd = vec![a, b];
            bd.sort();
            out.push(ComponentClass {
                kind: ComponentKind::VirtualAnnulusTwoEnds,
                boundary: bd,
                bending_vertex: None,
                interior: Vec::new(),
            });
        }
        out.sort_by(|a, b| (&a.boundary, &a.interior).cmp(&(&b.boundary, &b.interior)));
        Ok(out)
    }

    /// Total lift count: the sum of the vertex splittings, which must
    /// equal the number of upstairs vertices plus created midpoints.
    pub fn total_vertex_lifts(&self) -> u64 {
        self.vertices.values().map(|v| v.splitting).sum()
    }
}

/// Splitting data exposed per point class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplittingProfile {
    pub vertex_s: BTreeMap<String, u64>,
    pub edge_s: Vec<(String, String, u64)>,
    pub discontinuities: BTreeSet<String>,
}

/// Attribute-respecting isomorphism test between two quotient skeletons
/// (genus, splitting, fold presence, marks, adjacency with edge
/// splittings). Used to compare staged and direct quotients.
pub fn quotients_isomorphic(a: &QuotientSkeleton, b: &QuotientSkeleton) -> bool {
    if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let sig = |q: &QuotientSkeleton, v: &QuotientVertex| {
        (
            v.genus,
            v.splitting,
            v.fold.is_some(),
            v.marks.clone(),
            q.degree(&v.id),
        )
    };
    let avs: Vec<&QuotientVertex> = a.vertices.values().collect();
    let bvs: Vec<&QuotientVertex> = b.vertices.values().collect();
    let edge_multiset = |q: &QuotientSkeleton, x: &str, y: &str| -> Vec<u64> {
        let mut v: Vec<u64> = q
            .edges
            .iter()
            .filter(|e| (e.a == x && e.b == y) || (e.a == y && e.b == x))
            .map(|e| e.splitting)
            .collect();
        v.sort_unstable();
        v
    };
    fn extend(
        i: usize,
        avs: &[&QuotientVertex],
        bvs: &[&QuotientVertex],
        used: &mut Vec<bool>,
        map: &mut BTreeMap<String, String>,
        a: &QuotientSkeleton,
        b: &QuotientSkeleton,
        sig: &dyn Fn(&QuotientSkeleton, &QuotientVertex) -> (u64, u64, bool, BTreeSet<String>, usize),
        edge_multiset: &dyn Fn(&QuotientSkeleton, &str, &str) -> Vec<u64>,
    ) -> bool {
        if i == avs.len() {
            return true;
        }
        let av = avs[i];
        for (j, bv) in bvs.iter().enumerate() {
            if used[j] || sig(a, av) != sig(b, bv) {
                continue;
            }
            let ok = avs[..i].iter().all(|prev| {
                let pb = &map[&prev.id];
                edge_multiset(a, &av.id, &prev.id) == edge_multiset(b, &bv.id, pb)
            }) && edge_multiset(a, &av.id, &av.id) == edge_multiset(b, &bv.id, &bv.id);
            if !ok {
                continue;
            }
            used[j] = true;
            map.insert(av.id.clone(), bv.id.clone());
            if extend(i + 1, avs, bvs, used, map, a, b, sig, edge_multiset) {
                return true;
            }
            map.remove(&av.id);
            used[j] = false;
        }
        false
    }
    let mut used = vec![false; bvs.len()];
    let mut map = BTreeMap::new();
    extend(0, &avs, &bvs, &mut used, &mut map, a, b, &sig, &edge_multiset)
}
