//! Principalization, tame minimal strong triangulations, the Saito
//! degree, and tame base change on dual graphs.
//!
//! Everything in this module refuses wild inputs outright: when the
//! residue characteristic divides the lcm of the principal
//! multiplicities, the theorems backing these computations do not apply
//! and silently returning something would be wrong.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::exactmath::{gcd_u64, lcm_u64, ExactError};
use crate::sncgraph::{Diagnostic, GraphError, Severity, SncGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TriangulateError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("no principal vertices: every vertex has genus 0 and effective degree < 3 (unmarked graphs of genus at most 1 have no principalization)")]
    EmptyPrincipalSet,
    #[error("empty vertex subset")]
    EmptySubset,
    #[error("tame hypothesis violated: residue characteristic {p} divides the principal lcm {lcm}; the minimal strong triangulation is only computed in the tame case")]
    Wild { p: u64, lcm: u64 },
    #[error("base change of degree {d} in residue characteristic {p} is not covered by the tame multiplicity formula at vertex `{vertex}` (m = {m})")]
    WildBaseChange { d: u64, p: u64, vertex: String, m: u64 },
    #[error("complement component with {0} boundary attachments; interior vertices of a principalized graph have degree at most 2")]
    MalformedComponent(usize),
}

/// Result of the Saito computation over a principal vertex set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SaitoReport {
    /// Lcm of the principal multiplicities.
    pub lcm: u64,
    /// Residue characteristic exponent; 1 means characteristic zero.
    pub residue_char: u64,
    pub tame: bool,
    /// Degree of the minimal semi-stabilizing extension; present exactly
    /// in the tame case, where it equals the lcm.
    pub degree: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    VirtualDisc,
    VirtualAnnulusTwoEnds,
    VirtualAnnulusOneEnd,
}

/// A classified connected component of the complement of a vertex set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentClass {
    pub kind: ComponentKind,
    /// Boundary vertex ids; one entry for a disc, two (possibly equal)
    /// for a two-ended annulus.
    pub boundary: Vec<String>,
    /// Present for one-ended annuli only.
    pub bending_vertex: Option<String>,
    /// Interior vertex ids, in path order where the component is a path.
    pub interior: Vec<String>,
}

/// Output of the tame minimal strong triangulation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triangulation {
    pub vertices: BTreeSet<String>,
    pub components: Vec<ComponentClass>,
    pub report: SaitoReport,
}

/// The principal vertices of a validated graph.
///
/// A vertex is principal when its genus is positive or its effective
/// degree is at least three, the effective degree being the graph degree
/// plus one for each mark on the vertex. Marks sitting further down a
/// dangling chain do not promote the chain's interior vertices: the path
/// from the marked point to the rest of the graph passes through them
/// without branching.
pub fn principalize(g: &SncGraph) -> Result<BTreeSet<String>, TriangulateError> {
    principalize_with_diagnostics(g).map(|(s, _)| s)
}

/// As [`principalize`], also reporting the cases the degree convention
/// has to decide: a mark on a degree-2 vertex is what tips it over the
/// threshold.
pub fn principalize_with_diagnostics(
    g: &SncGraph,
) -> Result<(BTreeSet<String>, Vec<Diagnostic>), TriangulateError> {
    let mut diags = Vec::new();
    let mut principal = BTreeSet::new();
    for v in g.vertices() {
        let deg = g.degree(&v.id);
        let eff = deg + v.marks.len();
        if v.genus > 0 || eff >= 3 {
            principal.insert(v.id.clone());
        }
        if v.genus == 0 && deg == 2 && !v.marks.is_empty() {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                vertex: v.id.clone(),
                message: "principal only through its mark (+1 effective degree)".to_string(),
            });
        }
    }
    if principal.is_empty() {
        return Err(TriangulateError::EmptyPrincipalSet);
    }
    Ok((principal, diags))
}

/// Lcm, tameness, and (in the tame case) the degree of the minimal
/// semi-stabilizing extension over a nonempty multiplicity set.
pub fn saito_report(mults: &[u64], p: u64) -> Result<SaitoReport, TriangulateError> {
    if mults.is_empty() {
        return Err(TriangulateError::EmptySubset);
    }
    let mut l = 1u64;
    for &m in mults {
        l = lcm_u64(l, m)?;
    }
    let tame = p == 1 || l % p != 0;
    Ok(SaitoReport {
        lcm: l,
        residue_char: p,
        tame,
        degree: tame.then_some(l),
    })
}

/// True when every vertex has multiplicity 1.
pub fn is_semistable(g: &SncGraph) -> bool {
    g.vertices().all(|v| v.multiplicity == 1)
}

/// The minimal strong triangulation of a minimal snc graph in the tame
/// case: the principal vertices, with every complement component
/// classified as a virtual disc (dangling side) or a two-ended virtual
/// annulus (between two principal vertices, possibly the same one).
///
/// Wild inputs — residue characteristic dividing the principal lcm — are
/// rejected.
pub fn minimal_strong_triangulation_tame(
    g: &SncGraph,
    p: u64,
) -> Result<Triangulation, TriangulateError> {
    let principal = principalize(g)?;
    let mults: Vec<u64> = principal
        .iter()
        .map(|id| g.vertex(id).expect("principal vertex exists").multiplicity)
        .collect();
    let report = saito_report(&mults, p)?;
    if !report.tame {
        return Err(TriangulateError::Wild { p, lcm: report.lcm });
    }
    let components = classify_complement(g, &principal)?;
    Ok(Triangulation { vertices: principal, components, report })
}

/// Decomposes the complement of `subset` into connected components and
/// classifies each by its boundary attachments.
pub fn classify_complement(
    g: &SncGraph,
    subset: &BTreeSet<String>,
) -> Result<Vec<ComponentClass>, TriangulateError> {
    // Union-find over complement vertices, joined along complement edges.
    let interior: Vec<&str> = g
        .vertex_ids()
        .filter(|id| !subset.contains(*id))
        .map(String::as_str)
        .collect();
    let index: BTreeMap<&str, usize> =
        interior.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut dsu: Vec<usize> = (0..interior.len()).collect();
    fn find(dsu: &mut [usize], mut i: usize) -> usize {
        while dsu[i] != i {
            dsu[i] = dsu[dsu[i]];
            i = dsu[i];
        }
        i
    }
    for (a, b) in g.edges() {
        if let (Some(&ia), Some(&ib)) = (index.get(a.as_str()), index.get(b.as_str())) {
            let (ra, rb) = (find(&mut dsu, ia), find(&mut dsu, ib));
            dsu[ra] = rb;
        }
    }

    // Gather members and boundary attachments per component root; edges
    // between two subset vertices form their own components.
    let mut members: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (i, id) in interior.iter().enumerate() {
        members.entry(find(&mut dsu, i)).or_default().push(id);
    }
    let mut boundary: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut bare_edges: Vec<(String, String)> = Vec::new();
    for (a, b) in g.edges() {
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&ia), None) => {
                let r = find(&mut dsu, ia);
                boundary.entry(r).or_default().push(b.clone());
            }
            (None, Some(&ib)) => {
                let r = find(&mut dsu, ib);
                boundary.entry(r).or_default().push(a.clone());
            }
            (None, None) => bare_edges.push((a.clone(), b.clone())),
            (Some(_), Some(_)) => {}
        }
    }

    let mut out = Vec::new();
    for (root, mut ids) in members {
        ids.sort_unstable();
        let mut bd = boundary.remove(&root).unwrap_or_default();
        bd.sort();
        let interior_path = order_as_path(g, &ids);
        let class = match bd.len() {
            1 => ComponentClass {
                kind: ComponentKind::VirtualDisc,
                boundary: bd,
                bending_vertex: None,
                interior: interior_path,
            },
            2 => ComponentClass {
                kind: ComponentKind::VirtualAnnulusTwoEnds,
                boundary: bd,
                bending_vertex: None,
                interior: interior_path,
            },
            n => return Err(TriangulateError::MalformedComponent(n)),
        };
        out.push(class);
    }
    for (a, b) in bare_edges {
        out.push(ComponentClass {
            kind: ComponentKind::VirtualAnnulusTwoEnds,
            boundary: vec![a, b],
            bending_vertex: None,
            interior: Vec::new(),
        });
    }
    out.sort_by(|a, b| (&a.boundary, &a.interior).cmp(&(&b.boundary, &b.interior)));
    Ok(out)
}

/// Orders component vertices along their path when the component is a
/// path; otherwise returns them sorted by id.
fn order_as_path(g: &SncGraph, ids: &[&str]) -> Vec<String> {
    if ids.len() <= 1 {
        return ids.iter().map(|s| s.to_string()).collect();
    }
    let set: BTreeSet<&str> = ids.iter().copied().collect();
    let internal_degree = |v: &str| -> usize {
        g.edges()
            .iter()
            .map(|(a, b)| {
                ((a == v && set.contains(b.as_str())) as usize)
                    + ((b == v && set.contains(a.as_str())) as usize)
            })
            .sum()
    };
    let mut ends: Vec<&str> = ids.iter().copied().filter(|v| internal_degree(v) <= 1).collect();
    ends.sort_unstable();
    let Some(&start) = ends.first() else {
        let mut sorted: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        sorted.sort();
        return sorted;
    };
    let mut order = vec![start.to_string()];
    let mut prev: Option<&str> = None;
    let mut cur = start;
    while order.len() < ids.len() {
        let mut next = None;
        for (a, b) in g.edges() {
            let to = if a == cur { b.as_str() } else if b == cur { a.as_str() } else { continue };
            if set.contains(to) && Some(to) != prev && !order.iter().any(|x| x == to) {
                next = Some(to);
                break;
            }
        }
        match next {
            Some(n) => {
                order.push(n.to_string());
                prev = Some(cur);
                cur = n;
            }
            None => {
                let mut sorted: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
                sorted.sort();
                return sorted;
            }
        }
    }
    order
}

/// The tame multiplicity transform `m -> m / gcd(m, d)` under base
/// change of degree `d`, applied to every vertex (or to `subset` when
/// given). Topology is untouched; only the multiplicities move.
///
/// Applicability: `d` coprime to the residue characteristic, or `p` not
/// dividing the multiplicity at each transformed vertex. Anything else
/// is refused.
pub fn base_change_tame(
    g: &SncGraph,
    subset: Option<&BTreeSet<String>>,
    d: u64,
    p: u64,
) -> Result<BTreeMap<String, u64>, TriangulateError> {
    let mut out = BTreeMap::new();
    let tame_degree = p == 1 || d % p != 0;
    for v in g.vertices() {
        if let Some(s) = subset {
            if !s.contains(&v.id) {
                continue;
            }
        }
        if !tame_degree && v.multiplicity % p == 0 {
            return Err(TriangulateError::WildBaseChange {
                d,
                p,
                vertex: v.id.clone(),
                m: v.multiplicity,
            });
        }
        out.insert(v.id.clone(), v.multiplicity / gcd_u64(v.multiplicity, d));
    }
    Ok(out)
}

/// The transform of a single multiplicity, for callers without a graph.
pub fn base_change_multiplicity(m: u64, d: u64, p: u64) -> Result<u64, TriangulateError> {
    let tame_degree = p == 1 || d % p != 0;
    if !tame_degree && m % p == 0 {
        return Err(TriangulateError::WildBaseChange { d, p, vertex: String::new(), m });
    }
    Ok(m / gcd_u64(m, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{graph_from_type, KodairaType};
    use crate::sncgraph::SncVertex;

    #[test]
    fn principal_set_of_star_types() {
        let g = graph_from_type(&KodairaType::IIstar).unwrap();
        let p = principalize(&g).unwrap();
        assert_eq!(p.len(), 1);
        let center = p.iter().next().unwrap();
        assert_eq!(g.vertex(center).unwrap().multiplicity, 6);
    }

    #[test]
    fn principal_set_of_instar_is_the_two_forks() {
        let g = graph_from_type(&KodairaType::Instar(3)).unwrap();
        let p = principalize(&g).unwrap();
        assert_eq!(p.len(), 2);
        for id in &p {
            assert_eq!(g.vertex(id).unwrap().multiplicity, 2);
            assert_eq!(g.degree(id), 3);
        }
    }

    #[test]
    fn single_genus_two_vertex_is_principal() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("x", 1, 2)).unwrap();
        assert_eq!(principalize(&g).unwrap(), BTreeSet::from(["x".to_string()]));
    }

    #[test]
    fn unmarked_low_genus_has_no_principal_vertices() {
        let mut g = SncGraph::new();
        g.add_vertex(SncVertex::new("x", 1, 0)).unwrap();
        assert_eq!(principalize(&g), Err(TriangulateError::EmptyPrincipalSet));
    }

    #[test]
    fn marked_loop_vertex_is_principal() {
        let g = graph_from_type(&KodairaType::In(4)).unwrap();
        let p = principalize(&g).unwrap();
        assert_eq!(p.len(), 1);
        assert!(!g.vertex(p.iter().next().unwrap()).unwrap().marks.is_empty());
    }

    fn without_vertex(g: &SncGraph, id: &str) -> SncGraph {
        let mut smaller = SncGraph::new();
        for v in g.vertices().filter(|v| v.id != id) {
            smaller.add_vertex(v.clone()).unwrap();
        }
        for (a, b) in g.edges() {
            if a != id && b != id {
                smaller.add_edge(a, b).unwrap();
            }
        }
        smaller
    }

    #[test]
    fn deleting_a_nonprincipal_leaf_preserves_the_principal_set() {
        // holds across the potentially good dictionary, where the
        // central vertex is principal through its genus; a fork kept
        // principal only by its leaf count has no such stability
        for ty in [
            KodairaType::I0star,
            KodairaType::II,
            KodairaType::IIstar,
            KodairaType::III,
            KodairaType::IIIstar,
            KodairaType::IV,
            KodairaType::IVstar,
        ] {
            let g = graph_from_type(&ty).unwrap();
            let p = principalize(&g).unwrap();
            let leaves: Vec<String> = g
                .vertices()
                .filter(|v| g.degree(&v.id) == 1 && !p.contains(&v.id))
                .map(|v| v.id.clone())
                .collect();
            for leaf in leaves {
                let smaller = without_vertex(&g, &leaf);
                assert_eq!(principalize(&smaller).unwrap(), p, "{ty} minus {leaf}");
            }
        }
    }

    #[test]
    fn every_complement_vertex_lands_in_exactly_one_component() {
        for ty in [KodairaType::IIstar, KodairaType::In(6), KodairaType::Instar(4)] {
            let g = graph_from_type(&ty).unwrap();
            let t = minimal_strong_triangulation_tame(&g, 7).unwrap();
            let mut seen = BTreeSet::new();
            for c in &t.components {
                for v in &c.interior {
                    assert!(seen.insert(v.clone()), "{ty}: vertex {v} in two components");
                }
            }
            let complement: BTreeSet<String> = g
                .vertex_ids()
                .filter(|id| !t.vertices.contains(*id))
                .cloned()
                .collect();
            assert_eq!(seen, complement, "{ty}: classification covers the complement");
        }
    }

    #[test]
    fn saito_report_examples() {
        let r = saito_report(&[6], 5).unwrap();
        assert_eq!((r.lcm, r.tame, r.degree), (6, true, Some(6)));
        let r = saito_report(&[6], 3).unwrap();
        assert_eq!((r.lcm, r.tame, r.degree), (6, false, None));
        let r = saito_report(&[1, 1, 1], 7).unwrap();
        assert_eq!((r.lcm, r.degree), (1, Some(1)));
        assert!(saito_report(&[], 5).is_err());
    }

    #[test]
    fn semistability_shadow() {
        assert!(is_semistable(&graph_from_type(&KodairaType::In(3)).unwrap()));
        assert!(!is_semistable(&graph_from_type(&KodairaType::II).unwrap()));
    }

    #[test]
    fn tame_triangulation_of_iistar() {
        let g = graph_from_type(&KodairaType::IIstar).unwrap();
        let t = minimal_strong_triangulation_tame(&g, 5).unwrap();
        assert_eq!(t.vertices.len(), 1);
        assert_eq!(t.components.len(), 3);
        assert!(t
            .components
            .iter()
            .all(|c| c.kind == ComponentKind::VirtualDisc));
        assert_eq!(t.report.degree, Some(6));
    }

    #[test]
    fn loop_component_is_a_two_ended_annulus_on_one_vertex() {
        let g = graph_from_type(&KodairaType::In(5)).unwrap();
        let t = minimal_strong_triangulation_tame(&g, 7).unwrap();
        assert_eq!(t.components.len(), 1);
        let c = &t.components[0];
        assert_eq!(c.kind, ComponentKind::VirtualAnnulusTwoEnds);
        assert_eq!(c.boundary.len(), 2);
        assert_eq!(c.boundary[0], c.boundary[1]);
        assert_eq!(c.interior.len(), 4);
    }

    #[test]
    fn wild_input_is_refused() {
        let g = graph_from_type(&KodairaType::Instar(5)).unwrap();
        match minimal_strong_triangulation_tame(&g, 2) {
            Err(TriangulateError::Wild { p: 2, lcm: 2 }) => {}
            other => panic!("expected wild refusal, got {other:?}"),
        }
    }

    #[test]
    fn base_change_formula() {
        assert_eq!(base_change_multiplicity(6, 6, 5).unwrap(), 1);
        assert_eq!(base_change_multiplicity(4, 2, 5).unwrap(), 2);
        assert_eq!(base_change_multiplicity(3, 2, 5).unwrap(), 3);
    }

    #[test]
    fn base_change_wild_case_is_refused() {
        let g = graph_from_type(&KodairaType::II).unwrap();
        // degree divisible by p at a vertex with p | m
        assert!(matches!(
            base_change_tame(&g, None, 3, 3),
            Err(TriangulateError::WildBaseChange { .. })
        ));
        // coprime multiplicities stay fine even when p | d
        let mut ok = SncGraph::new();
        ok.add_vertex(SncVertex::new("a", 4, 0)).unwrap();
        assert_eq!(base_change_tame(&ok, None, 3, 3).unwrap()["a"], 4);
    }

    #[test]
    fn divisibility_of_semistabilizing_degrees() {
        // whenever base change by d makes all multiplicities 1, the lcm divides d
        let g = graph_from_type(&KodairaType::IIIstar).unwrap();
        let p = principalize(&g).unwrap();
        let mults: Vec<u64> =
            p.iter().map(|id| g.vertex(id).unwrap().multiplicity).collect();
        let l = saito_report(&mults, 5).unwrap().lcm;
        for d in 1..=24u64 {
            let all_one = mults
                .iter()
                .all(|&m| m / gcd_u64(m, d) == 1);
            if all_one {
                assert_eq!(d % l, 0, "d = {d}");
            }
        }
    }
}
