//! Fractional discs and annuli on the analytic line.
//!
//! An open fractional annulus `{ |pi|^a/b < |T| < |pi|^a'/b' }` is stored
//! by its pair of exact exponents; exponent `0` denotes radius 1. The end
//! multiplicities are the denominators of the reduced exponents. The
//! annulus is regular exactly when the exponent pair is unimodular, and
//! this module provides two independent routes to that fact: the
//! determinant test and a continued-fraction adjacency test, plus the
//! blowup calculus that resolves a non-regular annulus into regular
//! pieces.

use std::collections::VecDeque;

use serde::Serialize;

use crate::exactmath::{
    cf_expand, extended_gcd, gcd_u64, mediant, unimodular_det, ExactError, Rational,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnulusError {
    #[error("negative exponent {0} is not a radius exponent")]
    NegativeExponent(Rational),
    #[error("degenerate annulus: both exponents equal {0}")]
    DegenerateAnnulus(Rational),
    #[error("multiplicities {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("expected 1 or 2 multiplicities at a closed point, got {0}")]
    BadMultiplicityCount(usize),
    #[error("wild formal fiber: residue characteristic {p} divides {m}; classification not guaranteed")]
    WildFormalFiber { p: u64, m: u64 },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Open fractional annulus, stored as an ordered exponent pair.
///
/// `inner_exp > outer_exp`: the inner radius is the smaller one, hence
/// carries the larger exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FractionalAnnulus {
    inner_exp: Rational,
    outer_exp: Rational,
}

impl FractionalAnnulus {
    /// Builds an annulus from two exponents in either order.
    pub fn new(e1: Rational, e2: Rational) -> Result<Self, AnnulusError> {
        for e in [&e1, &e2] {
            if e.is_negative() {
                return Err(AnnulusError::NegativeExponent(*e));
            }
        }
        if e1 == e2 {
            return Err(AnnulusError::DegenerateAnnulus(e1));
        }
        let (inner_exp, outer_exp) = if e1 > e2 { (e1, e2) } else { (e2, e1) };
        Ok(FractionalAnnulus { inner_exp, outer_exp })
    }

    pub fn inner_exp(&self) -> Rational {
        self.inner_exp
    }

    pub fn outer_exp(&self) -> Rational {
        self.outer_exp
    }

    /// The multiplicities of the two ends: the reduced denominators.
    pub fn end_multiplicities(&self) -> (u64, u64) {
        (self.inner_exp.denom() as u64, self.outer_exp.denom() as u64)
    }

    /// Regularity via the determinant test; orientation-independent.
    pub fn is_regular(&self) -> bool {
        unimodular_det(&self.inner_exp, &self.outer_exp).abs() == 1
    }
}

/// Determinant-based regularity for a raw exponent pair.
pub fn is_regular_pair(e1: Rational, e2: Rational) -> Result<bool, AnnulusError> {
    Ok(FractionalAnnulus::new(e1, e2)?.is_regular())
}

/// Continued-fraction adjacency: the second route to regularity.
///
/// `small` and `large` are the exponents ordered so that
/// `small.denom() <= large.denom()`. Returns true when the expansion of
/// `large` arises from the expansion `[a0; ..., an]` of `small` in one of
/// the four neighbor shapes
///
/// ```text
/// [a0; ..., a_{n-1}, an + 1]
/// [a0; ..., a_{n-1}, an, x]        x >= 2
/// [a0; ..., a_{n-1}, an - 1, 2]
/// [a0; ..., a_{n-1}, an - 1, 1, x] x >= 2
/// ```
///
/// or, when both denominators are 1, when the integers differ by one.
/// This is deliberately independent of the determinant test so the two
/// can be checked against each other.
pub fn cf_adjacent(small: &Rational, large: &Rational) -> bool {
    let b = small.denom();
    let b2 = large.denom();
    if b == b2 {
        return b == 1 && (small.numer() - large.numer()).abs() == 1;
    }
    if b > b2 {
        return false;
    }
    let base = cf_expand(small);
    let target = cf_expand(large);
    let u = base.terms();
    let v = target.terms();
    let n = u.len() - 1;

    // [a0; ..., an + 1]
    if v.len() == u.len() && v[..n] == u[..n] && v[n] == u[n] + 1 {
        return true;
    }
    // [a0; ..., an, x] with x >= 2
    if v.len() == u.len() + 1 && v[..=n] == u[..=n] && v[n + 1] >= 2 {
        return true;
    }
    // The remaining shapes lower the terminal term; they only produce a
    // valid expansion when the lowered term stays in range.
    let lowered_ok = u[n] > if n == 0 { 0 } else { 1 };
    if lowered_ok {
        // [a0; ..., an - 1, 2]
        if v.len() == u.len() + 1
            && v[..n] == u[..n]
            && v[n] == u[n] - 1
            && v[n + 1] == 2
        {
            return true;
        }
        // [a0; ..., an - 1, 1, x] with x >= 2
        if v.len() == u.len() + 2
            && v[..n] == u[..n]
            && v[n] == u[n] - 1
            && v[n + 1] == 1
            && v[n + 2] >= 2
        {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupDirection {
    /// Blow up the point of the previous exceptional divisor pointing
    /// towards zero (exponents grow).
    Downward,
    /// Blow up the point pointing towards infinity (exponents shrink).
    Upward,
}

/// One point blowup in the resolution of a fractional annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlowupStep {
    pub direction: BlowupDirection,
    pub new_exp: Rational,
}

/// The blowup sequence creating the exponent `target` on the line.
///
/// With `[a0; a1, ..., an]` the expansion of the target, the walk blows
/// up `a0 + 1` times downward, `a1` times upward, `a2` downward, and so
/// on, with the final run shortened by one; every created exponent is the
/// mediant of its two bracketing neighbors in the Stern-Brocot sense, and
/// the final exponent is the target. Target `0` yields the empty
/// sequence.
pub fn blowup_resolution(target: &Rational) -> Result<Vec<BlowupStep>, AnnulusError> {
    if target.is_negative() {
        return Err(AnnulusError::NegativeExponent(*target));
    }
    if target.is_zero() {
        return Ok(Vec::new());
    }
    let terms = cf_expand(target).terms().to_vec();
    let n = terms.len() - 1;
    let mut runs: Vec<i64> = Vec::with_capacity(terms.len());
    for (i, &a) in terms.iter().enumerate() {
        let mut r = a;
        if i == 0 {
            r += 1;
        }
        if i == n {
            r -= 1;
        }
        runs.push(r);
    }

    let mut steps = Vec::new();
    let mut lo = Rational::ZERO;
    // The zero-side bracket starts at the infinite exponent 1/0, which is
    // never a produced exponent; track it as an Option.
    let mut hi: Option<Rational> = None;
    let mut prev: Option<Rational> = None;
    for (i, &run) in runs.iter().enumerate() {
        let downward = i % 2 == 0;
        for _ in 0..run {
            if let Some(p) = prev {
                if downward {
                    lo = p;
                } else {
                    hi = Some(p);
                }
            }
            let new_exp = match hi {
                Some(h) => mediant(&lo, &h)?,
                // mediant with 1/0: (lo.num + 1) / lo.den
                None => Rational::new(lo.numer() + 1, lo.denom())?,
            };
            steps.push(BlowupStep {
                direction: if downward {
                    BlowupDirection::Downward
                } else {
                    BlowupDirection::Upward
                },
                new_exp,
            });
            prev = Some(new_exp);
        }
    }
    debug_assert_eq!(steps.last().map(|s| s.new_exp), Some(*target));
    debug_assert_eq!(steps.len() as i64, terms.iter().sum::<i64>());
    Ok(steps)
}

/// Closed-form count of regular pieces for the annulus `{target, 0}`.
///
/// Counts the downward steps of [`blowup_resolution`] without running the
/// walk: it is the sum of the even-index terms of the expansion once the
/// expansion is normalized to have an even last index (rewriting a
/// terminal `[..., a]` as `[..., a - 1, 1]` when needed). This is the
/// cross-check for the search-based [`minimal_regular_subdivision`], not
/// its implementation.
pub fn piece_count_closed_form(target: &Rational) -> Result<u64, AnnulusError> {
    if target.is_negative() {
        return Err(AnnulusError::NegativeExponent(*target));
    }
    if target.is_zero() {
        return Ok(0);
    }
    let mut terms = cf_expand(target).terms().to_vec();
    if (terms.len() - 1) % 2 == 1 {
        let last = terms.pop().expect("nonempty");
        terms.push(last - 1);
        terms.push(1);
    }
    Ok(terms.iter().step_by(2).sum::<i64>() as u64)
}

/// Literal even-index term sum over the canonical expansion.
///
/// Kept separate from [`piece_count_closed_form`] because the two differ
/// exactly on targets whose canonical expansion has an odd last index
/// (for example `1/2 = [0;2]` sums to 0 although the annulus is one
/// regular piece); callers use this to report those discrepancies.
pub fn even_index_term_sum(target: &Rational) -> u64 {
    cf_expand(target)
        .terms()
        .iter()
        .step_by(2)
        .sum::<i64>()
        .max(0) as u64
}

/// Shortest chain of cut exponents making every piece regular.
///
/// Returns the cuts strictly between the outer and inner exponents, in
/// increasing order; consecutive members of the full chain (endpoints
/// included) are unimodular, and no shorter chain exists. The search is
/// breadth-first over candidate cuts of denominator bounded by the larger
/// end multiplicity, escalating the bound if no chain is found there.
pub fn minimal_regular_subdivision(
    x: &FractionalAnnulus,
) -> Result<Vec<Rational>, AnnulusError> {
    let (m_in, m_out) = x.end_multiplicities();
    let mut bound = m_in.max(m_out) as i64;
    loop {
        if let Some(cuts) = subdivision_with_denominator_bound(x, bound)? {
            return Ok(cuts);
        }
        bound = bound.checked_mul(2).ok_or(ExactError::Overflow)?;
    }
}

/// Breadth-first search for the shortest unimodular chain whose cuts have
/// denominator at most `bound`. Exposed for oracle cross-checks with a
/// larger bound.
pub fn subdivision_with_denominator_bound(
    x: &FractionalAnnulus,
    bound: i64,
) -> Result<Option<Vec<Rational>>, AnnulusError> {
    let lo = x.outer_exp();
    let hi = x.inner_exp();
    if unimodular_det(&lo, &hi).abs() == 1 {
        return Ok(Some(Vec::new()));
    }

    // Candidate cuts: reduced fractions strictly between the ends.
    let mut nodes: Vec<Rational> = Vec::new();
    for den in 1..=bound {
        let first = (lo.numer() as i128 * den as i128).div_euclid(lo.denom() as i128) as i64;
        let last = (hi.numer() as i128 * den as i128).div_euclid(hi.denom() as i128) as i64 + 1;
        for num in first..=last {
            let q = Rational::new(num, den)?;
            if q.denom() == den && q > lo && q < hi {
                nodes.push(q);
            }
        }
    }
    nodes.sort();
    nodes.dedup();
    nodes.push(hi);

    // BFS over increasing unimodular steps starting from the outer end.
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut seen = vec![false; nodes.len()];
    let mut queue: VecDeque<Option<usize>> = VecDeque::new();
    queue.push_back(None); // None encodes the outer endpoint
    let target = nodes.len() - 1;
    let mut found = false;
    'bfs: while let Some(cur) = queue.pop_front() {
        let cur_q = match cur {
            None => lo,
            Some(i) => nodes[i],
        };
        let start = match cur {
            None => 0,
            Some(i) => i + 1,
        };
        for next in start..nodes.len() {
            if seen[next] || nodes[next] <= cur_q {
                continue;
            }
            if unimodular_det(&cur_q, &nodes[next]).abs() == 1 {
                seen[next] = true;
                parent[next] = cur;
                if next == target {
                    found = true;
                    break 'bfs;
                }
                queue.push_back(Some(next));
            }
        }
    }
    if !found {
        return Ok(None);
    }
    let mut cuts = Vec::new();
    let mut at = parent[target];
    while let Some(i) = at {
        cuts.push(nodes[i]);
        at = parent[i];
    }
    cuts.reverse();
    Ok(Some(cuts))
}

/// A regular fractional annulus with prescribed coprime end
/// multiplicities, built from the extended Euclidean algorithm.
pub fn coprime_regular_witness(m: u64, m2: u64) -> Result<FractionalAnnulus, AnnulusError> {
    if m == 0 || m2 == 0 || gcd_u64(m, m2) != 1 {
        return Err(AnnulusError::NotCoprime(m, m2));
    }
    if m == 1 && m2 == 1 {
        return FractionalAnnulus::new(Rational::ONE, Rational::ZERO);
    }
    // Solve x*m2 - y*m = 1 with minimal non-negative x, y.
    let (g, x0, _) = extended_gcd(m2 as i64, -(m as i64));
    debug_assert_eq!(g, 1);
    let m_i = m as i64;
    let m2_i = m2 as i64;
    let mut x = x0.rem_euclid(m_i);
    // With x fixed, y = (x*m2 - 1) / m; bump x by m when y lands below 0
    // (only possible for m = 1, where x = 0).
    let mut y = (x * m2_i - 1) / m_i;
    if y < 0 {
        x += m_i;
        y = (x * m2_i - 1) / m_i;
    }
    debug_assert_eq!(x * m2_i - y * m_i, 1);
    let a = Rational::new(x, m_i)?;
    let b = Rational::new(y, m2_i)?;
    debug_assert_eq!(a.denom(), m_i);
    debug_assert_eq!(b.denom(), m2_i);
    FractionalAnnulus::new(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormalFiberKind {
    GeneralizedFractionalDisc,
    GeneralizedFractionalAnnulus,
}

/// Classification of the formal fiber at a closed point of an snc model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FormalFiberClass {
    pub kind: FormalFiberKind,
    /// Degree over the base field of the field of constants.
    pub constants_degree: u64,
}

/// Classifies the formal fiber at a closed point lying on one component
/// (a smooth point) or two components (a double point), given the
/// residue characteristic exponent `p` (`1` meaning characteristic 0).
///
/// Tameness is required: `p` must not divide the component multiplicity,
/// respectively the gcd of the two multiplicities. Wild inputs are a hard
/// error because the classification is not guaranteed there.
pub fn formal_fiber_type(mults: &[u64], p: u64) -> Result<FormalFiberClass, AnnulusError> {
    let tame = |m: u64| p == 1 || m % p != 0;
    match mults {
        [m] => {
            if !tame(*m) {
                return Err(AnnulusError::WildFormalFiber { p, m: *m });
            }
            Ok(FormalFiberClass {
                kind: FormalFiberKind::GeneralizedFractionalDisc,
                constants_degree: *m,
            })
        }
        [m1, m2] => {
            let g = gcd_u64(*m1, *m2);
            if !tame(g) {
                return Err(AnnulusError::WildFormalFiber { p, m: g });
            }
            Ok(FormalFiberClass {
                kind: FormalFiberKind::GeneralizedFractionalAnnulus,
                constants_degree: g,
            })
        }
        other => Err(AnnulusError::BadMultiplicityCount(other.len())),
    }
}
