//! The Kodaira dictionary for elliptic curves with a marked origin.
//!
//! Three equivalent descriptions are wired together here: the reduction
//! type label, the marked dual graph of the minimal snc model, and the
//! numerical invariants `(m(x), alpha mod Z)` where `x` is the unique
//! point of the minimal triangulation and `alpha` is the radius exponent
//! of the fractional disc containing the origin. The exponent is
//! computed by gluing regular fractional annuli along the path from `x`
//! to the marked leaf.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::exactmath::{ExactError, Rational};
use crate::sncgraph::{GraphError, SncGraph, SncVertex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EllipticError {
    #[error("type {0} requires the parameter n >= 2")]
    BadParameter(KodairaType),
    #[error("type {0} is multiplicative; it has no (m, alpha) invariants, see the multiplicative report")]
    MultiplicativeType(KodairaType),
    #[error("type {0} is not multiplicative")]
    NotMultiplicative(KodairaType),
    #[error("no reduction type has invariants (m = {m}, alpha = {alpha}); valid pairs: {valid}")]
    UnknownInvariants { m: u64, alpha: Rational, valid: String },
    #[error("not a minimal elliptic snc graph: {reason}")]
    NoMatch { reason: String },
    #[error("chain must end at a multiplicity-1 leaf, got {0}")]
    LeafNotOne(u64),
    #[error("chain step {index} produced exponent {exp} whose denominator is not the multiplicity {m}; the steps do not glue along regular annuli")]
    NonIntegralStep { index: usize, exp: Rational, m: u64 },
    #[error("empty multiplicity chain")]
    EmptyChain,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("unknown reduction type `{0}`")]
    ParseType(String),
}

/// Kodaira reduction type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KodairaType {
    I0,
    In(u64),
    I0star,
    Instar(u64),
    II,
    IIstar,
    III,
    IIIstar,
    IV,
    IVstar,
}

impl KodairaType {
    pub fn is_multiplicative(&self) -> bool {
        matches!(self, KodairaType::In(_) | KodairaType::Instar(_))
    }

    /// Parses labels like `II*`, `IV`, `I0`, `I3`, `I5*`.
    pub fn parse(s: &str) -> Result<Self, EllipticError> {
        let t = s.trim();
        let norm = t.replace("star", "*").to_uppercase();
        let out = match norm.as_str() {
            "I0" => KodairaType::I0,
            "I0*" => KodairaType::I0star,
            "II" => KodairaType::II,
            "II*" => KodairaType::IIstar,
            "III" => KodairaType::III,
            "III*" => KodairaType::IIIstar,
            "IV" => KodairaType::IV,
            "IV*" => KodairaType::IVstar,
            other => {
                let (body, star) = match other.strip_suffix('*') {
                    Some(b) => (b, true),
                    None => (other, false),
                };
                let n: u64 = body
                    .strip_prefix('I')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| EllipticError::ParseType(s.to_string()))?;
                if star {
                    KodairaType::Instar(n)
                } else {
                    KodairaType::In(n)
                }
            }
        };
        Ok(out)
    }
}

impl std::fmt::Display for KodairaType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KodairaType::I0 => write!(f, "I0"),
            KodairaType::In(n) => write!(f, "I{n}"),
            KodairaType::I0star => write!(f, "I0*"),
            KodairaType::Instar(n) => write!(f, "I{n}*"),
            KodairaType::II => write!(f, "II"),
            KodairaType::IIstar => write!(f, "II*"),
            KodairaType::III => write!(f, "III"),
            KodairaType::IIIstar => write!(f, "III*"),
            KodairaType::IV => write!(f, "IV"),
            KodairaType::IVstar => write!(f, "IV*"),
        }
    }
}

const POTENTIALLY_GOOD: [KodairaType; 8] = [
    KodairaType::I0,
    KodairaType::I0star,
    KodairaType::II,
    KodairaType::IIstar,
    KodairaType::III,
    KodairaType::IIIstar,
    KodairaType::IV,
    KodairaType::IVstar,
];

/// Numerical invariants of a potentially good type: the multiplicity of
/// the triangulation point and the disc exponent `alpha`, stored by its
/// canonical representative in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EllipticInvariants {
    pub m: u64,
    pub alpha: Rational,
}

impl EllipticInvariants {
    /// Balanced representative in `(-1/2, 1/2]`, the form the dictionary
    /// is usually quoted in (`5/6` prints as `-1/6`).
    pub fn alpha_display(&self) -> Rational {
        let half = Rational::new(1, 2).unwrap();
        if self.alpha > half {
            self.alpha
                .checked_sub(&Rational::ONE)
                .expect("alpha is in [0,1)")
        } else {
            self.alpha
        }
    }
}

fn table() -> Vec<(KodairaType, u64, Rational)> {
    let q = |n: i64, d: i64| Rational::new(n, d).unwrap();
    vec![
        (KodairaType::I0, 1, q(0, 1)),
        (KodairaType::I0star, 2, q(1, 2)),
        (KodairaType::II, 6, q(-1, 6).mod_one()),
        (KodairaType::IIstar, 6, q(1, 6)),
        (KodairaType::III, 4, q(-1, 4).mod_one()),
        (KodairaType::IIIstar, 4, q(1, 4)),
        (KodairaType::IV, 3, q(-1, 3).mod_one()),
        (KodairaType::IVstar, 3, q(1, 3)),
    ]
}

/// Dictionary lookup for the eight potentially good types.
pub fn invariants_from_type(t: &KodairaType) -> Result<EllipticInvariants, EllipticError> {
    if t.is_multiplicative() {
        return Err(EllipticError::MultiplicativeType(*t));
    }
    let row = table()
        .into_iter()
        .find(|(ty, _, _)| ty == t)
        .expect("all non-multiplicative types are in the table");
    Ok(EllipticInvariants { m: row.1, alpha: row.2 })
}

/// Inverse dictionary lookup; the pair determines the type uniquely.
pub fn type_from_invariants(inv: &EllipticInvariants) -> Result<KodairaType, EllipticError> {
    let alpha = inv.alpha.mod_one();
    for (ty, m, a) in table() {
        if m == inv.m && a == alpha {
            return Ok(ty);
        }
    }
    let valid = table()
        .iter()
        .map(|(ty, m, a)| format!("{ty}:({m},{a})"))
        .collect::<Vec<_>>()
        .join(" ");
    Err(EllipticError::UnknownInvariants { m: inv.m, alpha, valid })
}

/// The marked dual graph of the minimal snc model of each type.
///
/// Arm layout follows the standard pictures: `c` is the central
/// component (genus 1 for potentially good types, 0 otherwise) and the
/// mark `O` sits on the multiplicity-1 component the origin specializes
/// to.
pub fn graph_from_type(t: &KodairaType) -> Result<SncGraph, EllipticError> {
    let mut g = SncGraph::new();
    let arm = |g: &mut SncGraph, center: &str, prefix: &str, mults: &[u64], mark: bool| {
        let mut prev = center.to_string();
        for (i, &m) in mults.iter().enumerate() {
            let id = format!("{prefix}{}", i + 1);
            let mut v = SncVertex::new(&id, m, 0);
            if mark && i + 1 == mults.len() {
                v = v.with_mark("O");
            }
            g.add_vertex(v).expect("fresh id");
            g.add_edge(&prev, &id).expect("endpoint exists");
            prev = id;
        }
    };
    match t {
        KodairaType::I0 => {
            g.add_vertex(SncVertex::new("c", 1, 1).with_mark("O"))?;
        }
        KodairaType::I0star => {
            g.add_vertex(SncVertex::new("c", 2, 1))?;
            arm(&mut g, "c", "a", &[1], true);
            arm(&mut g, "c", "b", &[1], false);
            arm(&mut g, "c", "d", &[1], false);
            arm(&mut g, "c", "f", &[1], false);
        }
        KodairaType::II => {
            g.add_vertex(SncVertex::new("c", 6, 1))?;
            arm(&mut g, "c", "a", &[1], true);
            arm(&mut g, "c", "b", &[2], false);
            arm(&mut g, "c", "d", &[3], false);
        }
        KodairaType::IIstar => {
            g.add_vertex(SncVertex::new("c", 6, 1))?;
            arm(&mut g, "c", "a", &[3], false);
            arm(&mut g, "c", "b", &[4, 2], false);
            arm(&mut g, "c", "d", &[5, 4, 3, 2, 1], true);
        }
        KodairaType::III => {
            g.add_vertex(SncVertex::new("c", 4, 1))?;
            arm(&mut g, "c", "a", &[1], true);
            arm(&mut g, "c", "b", &[2], false);
            arm(&mut g, "c", "d", &[1], false);
        }
        KodairaType::IIIstar => {
            g.add_vertex(SncVertex::new("c", 4, 1))?;
            arm(&mut g, "c", "a", &[2], false);
            arm(&mut g, "c", "b", &[3, 2, 1], false);
            arm(&mut g, "c", "d", &[3, 2, 1], true);
        }
        KodairaType::IV => {
            g.add_vertex(SncVertex::new("c", 3, 1))?;
            arm(&mut g, "c", "a", &[1], true);
            arm(&mut g, "c", "b", &[1], false);
            arm(&mut g, "c", "d", &[1], false);
        }
        KodairaType::IVstar => {
            g.add_vertex(SncVertex::new("c", 3, 1))?;
            arm(&mut g, "c", "a", &[2, 1], true);
            arm(&mut g, "c", "b", &[2, 1], false);
            arm(&mut g, "c", "d", &[2, 1], false);
        }
        KodairaType::In(n) => {
            if *n < 2 {
                return Err(EllipticError::BadParameter(*t));
            }
            for i in 0..*n {
                let mut v = SncVertex::new(&format!("v{i}"), 1, 0);
                if i == 0 {
                    v = v.with_mark("O");
                }
                g.add_vertex(v)?;
            }
            for i in 0..*n {
                g.add_edge(&format!("v{i}"), &format!("v{}", (i + 1) % n))?;
            }
        }
        KodairaType::Instar(n) => {
            if *n < 2 {
                return Err(EllipticError::BadParameter(*t));
            }
            for i in 0..=*n {
                g.add_vertex(SncVertex::new(&format!("c{i}"), 2, 0))?;
            }
            for i in 0..*n {
                g.add_edge(&format!("c{i}"), &format!("c{}", i + 1))?;
            }
            g.add_vertex(SncVertex::new("l1", 1, 0).with_mark("O"))?;
            g.add_vertex(SncVertex::new("l2", 1, 0))?;
            g.add_vertex(SncVertex::new("r1", 1, 0))?;
            g.add_vertex(SncVertex::new("r2", 1, 0))?;
            g.add_edge("c0", "l1")?;
            g.add_edge("c0", "l2")?;
            g.add_edge(&format!("c{n}"), "r1")?;
            g.add_edge(&format!("c{n}"), "r2")?;
        }
    }
    Ok(g)
}

/// A successful template match: the recognized type together with the
/// isomorphism sending input vertices to template vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeMatch {
    pub kodaira: KodairaType,
    pub witness: BTreeMap<String, String>,
}

/// Recognizes the reduction type of a marked dual graph, up to
/// isomorphism respecting multiplicities, genera, and mark counts.
pub fn type_from_graph(g: &SncGraph) -> Result<TypeMatch, EllipticError> {
    let mut near: Vec<String> = Vec::new();

    // Parameterized families first: they are cheap structural tests.
    if let Some(m) = match_in_loop(g) {
        return Ok(m);
    }
    if let Some(m) = match_instar(g) {
        return Ok(m);
    }

    for ty in POTENTIALLY_GOOD {
        let template = graph_from_type(&ty).expect("fixed templates build");
        if template.vertex_count() != g.vertex_count() {
            continue;
        }
        let mut tm = multiset(&template);
        let mut gm = multiset(g);
        if tm != gm {
            tm.sort();
            gm.sort();
            near.push(format!(
                "{ty}: same vertex count but different (m, g, degree, marks) profile"
            ));
            continue;
        }
        if let Some(witness) = find_isomorphism(g, &template) {
            return Ok(TypeMatch { kodaira: ty, witness });
        }
        near.push(format!("{ty}: matching vertex profile but no adjacency isomorphism"));
    }
    let reason = if near.is_empty() {
        "no template with this vertex count or shape".to_string()
    } else {
        format!("nearest templates: {}", near.join("; "))
    };
    Err(EllipticError::NoMatch { reason })
}

fn match_in_loop(g: &SncGraph) -> Option<TypeMatch> {
    let n = g.vertex_count() as u64;
    if n < 2 || g.edge_count() as u64 != n {
        return None;
    }
    let mut marked = None;
    for v in g.vertices() {
        if v.multiplicity != 1 || v.genus != 0 || g.degree(&v.id) != 2 {
            return None;
        }
        match v.marks.len() {
            0 => {}
            1 => {
                if marked.replace(v.id.clone()).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let marked = marked?;
    if !g.is_connected() {
        return None;
    }
    // Walk the cycle from the marked vertex to build the witness.
    let template = graph_from_type(&KodairaType::In(n)).expect("n >= 2");
    let mut witness = BTreeMap::new();
    let mut prev = marked.clone();
    let mut cur = marked.clone();
    for i in 0..n {
        witness.insert(cur.clone(), format!("v{i}"));
        let next = g
            .neighbors(&cur)
            .into_iter()
            .find(|x| *x != prev || n == 2 && i == 1)?;
        prev = std::mem::replace(&mut cur, next.to_string());
    }
    let _ = template;
    Some(TypeMatch { kodaira: KodairaType::In(n), witness })
}

fn match_instar(g: &SncGraph) -> Option<TypeMatch> {
    let twos: Vec<&SncVertex> = g.vertices().filter(|v| v.multiplicity == 2).collect();
    let ones: Vec<&SncVertex> = g.vertices().filter(|v| v.multiplicity == 1).collect();
    if twos.len() < 3 || ones.len() != 4 || twos.len() + 4 != g.vertex_count() {
        return None;
    }
    if g.vertices().any(|v| v.genus != 0) {
        return None;
    }
    let n = (twos.len() - 1) as u64;
    for v in &ones {
        if g.degree(&v.id) != 1 {
            return None;
        }
    }
    let total_marks: usize = g.vertices().map(|v| v.marks.len()).sum();
    let marked_leaf = ones.iter().find(|v| v.marks.len() == 1)?;
    if total_marks != 1 {
        return None;
    }
    // The chain ends have degree 3 (two leaves each), interiors degree 2.
    let forks: Vec<&&SncVertex> = twos.iter().filter(|v| g.degree(&v.id) == 3).collect();
    if forks.len() != 2 || twos.iter().any(|v| !(2..=3).contains(&g.degree(&v.id))) {
        return None;
    }
    // Orient the chain to start at the fork adjacent to the marked leaf.
    let start = forks
        .iter()
        .find(|f| g.neighbors(&f.id).contains(&marked_leaf.id.as_str()))?;
    let mut witness = BTreeMap::new();
    let mut prev: Option<String> = None;
    let mut cur = start.id.clone();
    for i in 0..=n {
        witness.insert(cur.clone(), format!("c{i}"));
        if i == n {
            break;
        }
        let next = g
            .neighbors(&cur)
            .into_iter()
            .filter(|x| g.vertex(x).map(|v| v.multiplicity) == Some(2))
            .find(|x| Some((*x).to_string()) != prev)?;
        prev = Some(std::mem::replace(&mut cur, next.to_string()));
    }
    // leaves
    let mut left: Vec<&str> = g
        .neighbors(&start.id)
        .into_iter()
        .filter(|x| g.vertex(x).map(|v| v.multiplicity) == Some(1))
        .collect();
    left.sort_unstable();
    let end_id = witness
        .iter()
        .find(|(_, t)| **t == format!("c{n}"))
        .map(|(k, _)| k.clone())?;
    let mut right: Vec<&str> = g
        .neighbors(&end_id)
        .into_iter()
        .filter(|x| g.vertex(x).map(|v| v.multiplicity) == Some(1))
        .collect();
    right.sort_unstable();
    if left.len() != 2 || right.len() != 2 {
        return None;
    }
    let (l1, l2) = if g.vertex(left[0]).unwrap().marks.len() == 1 {
        (left[0], left[1])
    } else {
        (left[1], left[0])
    };
    if g.vertex(l1).unwrap().marks.len() != 1 {
        return None;
    }
    witness.insert(l1.to_string(), "l1".to_string());
    witness.insert(l2.to_string(), "l2".to_string());
    witness.insert(right[0].to_string(), "r1".to_string());
    witness.insert(right[1].to_string(), "r2".to_string());
    Some(TypeMatch { kodaira: KodairaType::Instar(n), witness })
}

fn multiset(g: &SncGraph) -> Vec<(u64, u64, usize, usize)> {
    let mut v: Vec<(u64, u64, usize, usize)> = g
        .vertices()
        .map(|x| (x.multiplicity, x.genus, g.degree(&x.id), x.marks.len()))
        .collect();
    v.sort();
    v
}

/// Backtracking graph isomorphism respecting (multiplicity, genus,
/// degree, mark count). Graphs here have at most a dozen vertices.
fn find_isomorphism(a: &SncGraph, b: &SncGraph) -> Option<BTreeMap<String, String>> {
    let sig = |g: &SncGraph, v: &SncVertex| (v.multiplicity, v.genus, g.degree(&v.id), v.marks.len());
    let avs: Vec<&SncVertex> = a.vertices().collect();
    let bvs: Vec<&SncVertex> = b.vertices().collect();
    if avs.len() != bvs.len() {
        return None;
    }
    let edge_count = |g: &SncGraph, x: &str, y: &str| {
        g.edges()
            .iter()
            .filter(|(p, q)| {
                (p == x && q == y) || (p == y && q == x)
            })
            .count()
    };
    fn extend(
        i: usize,
        avs: &[&SncVertex],
        bvs: &[&SncVertex],
        used: &mut Vec<bool>,
        map: &mut BTreeMap<String, String>,
        a: &SncGraph,
        b: &SncGraph,
        sig: &dyn Fn(&SncGraph, &SncVertex) -> (u64, u64, usize, usize),
        edge_count: &dyn Fn(&SncGraph, &str, &str) -> usize,
    ) -> bool {
        if i == avs.len() {
            return true;
        }
        let av = avs[i];
        for (j, bv) in bvs.iter().enumerate() {
            if used[j] || sig(a, av) != sig(b, bv) {
                continue;
            }
            // adjacency with the already-mapped prefix must agree
            let ok = avs[..i].iter().all(|prev| {
                let pb = &map[&prev.id];
                edge_count(a, &av.id, &prev.id) == edge_count(b, &bv.id, pb)
            }) && edge_count(a, &av.id, &av.id) == edge_count(b, &bv.id, &bv.id);
            if !ok {
                continue;
            }
            used[j] = true;
            map.insert(av.id.clone(), bv.id.clone());
            if extend(i + 1, avs, bvs, used, map, a, b, sig, edge_count) {
                return true;
            }
            map.remove(&av.id);
            used[j] = false;
        }
        false
    }
    let mut used = vec![false; bvs.len()];
    let mut map = BTreeMap::new();
    extend(0, &avs, &bvs, &mut used, &mut map, a, b, &sig, &edge_count).then_some(map)
}

/// The exponent walk along a chain of multiplicities from the
/// triangulation point down to the marked multiplicity-1 leaf.
///
/// The leaf carries exponent 1 and each edge contributes the unique
/// strictly decreasing unimodular step, `e_j = e_{j+1} - 1/(m_j m_{j+1})`.
/// Every intermediate exponent must come out with denominator exactly
/// `m_j`; anything else means the chain does not glue along regular
/// annuli and is rejected.
pub fn exponent_walk(mults: &[u64]) -> Result<Vec<Rational>, EllipticError> {
    if mults.is_empty() {
        return Err(EllipticError::EmptyChain);
    }
    let last = *mults.last().unwrap();
    if last != 1 {
        return Err(EllipticError::LeafNotOne(last));
    }
    let mut exps = vec![Rational::ONE; mults.len()];
    for j in (0..mults.len() - 1).rev() {
        let step = Rational::new(1, (mults[j] * mults[j + 1]) as i64)?;
        let e = exps[j + 1].checked_sub(&step)?;
        if e.denom() as u64 != mults[j] {
            return Err(EllipticError::NonIntegralStep { index: j, exp: e, m: mults[j] });
        }
        exps[j] = e;
    }
    Ok(exps)
}

/// The gluing exponent `alpha mod Z` of a chain, as its `[0, 1)`
/// representative. Closed form: `1 - sum_j 1/(m_j m_{j+1})`.
pub fn alpha_from_chain(mults: &[u64]) -> Result<Rational, EllipticError> {
    let exps = exponent_walk(mults)?;
    Ok(exps[0].mod_one())
}

/// Report for the multiplicative types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplicativeReport {
    pub kodaira: KodairaType,
    pub min_strong_size: u32,
    pub min_triangulation_size: u32,
    /// The distinguished virtual annulus among the complement components.
    pub annulus: String,
    /// Modulus of the annulus when it is an annulus over the base field.
    pub modulus: Option<u64>,
    /// Degree of the extension trivializing the annulus.
    pub trivializing_degree: u32,
    pub end_multiplicities: (u64, u64),
}

pub fn multiplicative_report(t: &KodairaType) -> Result<MultiplicativeReport, EllipticError> {
    match t {
        KodairaType::In(n) => Ok(MultiplicativeReport {
            kodaira: *t,
            min_strong_size: 1,
            min_triangulation_size: 1,
            annulus: format!("{{|pi|^{n} < |T(x)| < 1}}"),
            modulus: Some(*n),
            trivializing_degree: 1,
            end_multiplicities: (1, 1),
        }),
        KodairaType::Instar(n) => Ok(MultiplicativeReport {
            kodaira: *t,
            min_strong_size: 2,
            min_triangulation_size: 1,
            annulus: format!("{{|pi|^{} < |T^2(x)-pi| < |pi|^2}}", 2 * (n + 1)),
            modulus: None,
            trivializing_degree: 2,
            end_multiplicities: (2, 2),
        }),
        other => Err(EllipticError::NotMultiplicative(*other)),
    }
}

/// The multiplicity chain from the triangulation point to the marked
/// leaf of a potentially good graph, in walk order.
pub fn mark_chain(g: &SncGraph, principal: &str) -> Result<Vec<u64>, EllipticError> {
    let marked = g
        .vertices()
        .find(|v| !v.marks.is_empty())
        .ok_or_else(|| EllipticError::NoMatch { reason: "no marked vertex".to_string() })?
        .id
        .clone();
    // BFS path from principal to marked; the graphs are trees off cycles,
    // so the shortest path is the chain.
    let mut prev: BTreeMap<String, String> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([principal.to_string()]);
    while let Some(cur) = queue.pop_front() {
        if cur == marked {
            break;
        }
        for n in g.neighbors(&cur) {
            if n != principal && !prev.contains_key(n) {
                prev.insert(n.to_string(), cur.clone());
                queue.push_back(n.to_string());
            }
        }
    }
    let mut path = vec![marked.clone()];
    let mut cur = marked;
    while cur != principal {
        cur = prev
            .get(&cur)
            .cloned()
            .ok_or_else(|| EllipticError::NoMatch { reason: "mark unreachable".to_string() })?;
        path.push(cur.clone());
    }
    path.reverse();
    Ok(path
        .iter()
        .map(|id| g.vertex(id).expect("path vertex").multiplicity)
        .collect())
}
