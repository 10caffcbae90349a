//! Edge predicates for the curve graph and its refinements, plus exact
//! small-distance classifiers.
//!
//! All rules are decided from one shared computation: the pair is put in
//! minimal position and the census of complementary regions is read off.
//! The structural convention throughout: a region "contains an essential
//! simple closed curve" exactly when it is neither a disc nor a
//! once-punctured disc (every such region contains one, possibly parallel
//! to a boundary curve of the region).

use crate::arrangement::minimal_pair;
use crate::census::{RegionCensus, RegionKind};
use crate::curve::{NormalCurve, DEFAULT_TRACE_BUDGET};
use crate::error::{Error, Result};
use crate::surface::Triangulation;
use num_bigint::BigUint;

/// Which graph's edge relation to decide.
///
/// All four graphs share the same vertices (isotopy classes of essential
/// simple closed curves); they differ in which complementary regions of a
/// pair count as an edge witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Edge iff the curves are disjoint.
    CurveGraph,
    /// Edge iff some complementary region is essential.
    Cg0,
    /// Edge iff some region is essential, a polygon with at least 8 sides,
    /// or a once-punctured polygon with at least `punctured_threshold`
    /// sides. The threshold is 4 or 6.
    Principal { punctured_threshold: u64 },
    /// Edge iff some region is essential, some polygon has at least 10
    /// sides, or at least two regions are neither fourgons nor hexagons.
    Intermediate,
}

impl EdgeRule {
    /// The principal rule with the default once-punctured threshold 4
    /// (exactly the fourgon/hexagon/once-punctured-bigon exclusion).
    pub fn principal() -> Self {
        EdgeRule::Principal { punctured_threshold: 4 }
    }

    /// The principal rule variant that lets once-punctured fourgons pass
    /// (threshold 6).
    pub fn principal6() -> Self {
        EdgeRule::Principal { punctured_threshold: 6 }
    }

    /// Canonical command-line name of the rule.
    pub fn name(&self) -> &'static str {
        match self {
            EdgeRule::CurveGraph => "cg",
            EdgeRule::Cg0 => "cg0",
            EdgeRule::Principal { punctured_threshold: 4 } => "principal",
            EdgeRule::Principal { punctured_threshold: 6 } => "principal6",
            EdgeRule::Principal { .. } => unreachable!("threshold is 4 or 6"),
            EdgeRule::Intermediate => "intermediate",
        }
    }
}

impl std::str::FromStr for EdgeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(EdgeRule::CurveGraph),
            "cg0" => Ok(EdgeRule::Cg0),
            "principal" => Ok(EdgeRule::principal()),
            "principal6" => Ok(EdgeRule::principal6()),
            "intermediate" => Ok(EdgeRule::Intermediate),
            other => Err(Error::Format(format!(
                "unknown edge rule {other:?} (expected cg, cg0, principal, principal6, or intermediate)"
            ))),
        }
    }
}

/// Outcome of an edge decision, with the evidence that produced it.
#[derive(Debug, Clone)]
pub struct EdgeVerdict {
    pub adjacent: bool,
    /// Geometric intersection number of the pair.
    pub intersection: u64,
    /// Census of the complement in minimal position.
    pub census: RegionCensus,
    /// Indices into `census.regions` of the faces that witness the edge
    /// (empty for the plain curve-graph rule, whose witness is disjointness
    /// itself).
    pub witnesses: Vec<usize>,
}

/// Validates a pair for the edge predicates and returns its minimal
/// position data.
fn prepared_pair(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
) -> Result<(u64, RegionCensus)> {
    if c.surface() != tri.surface() || d.surface() != tri.surface() {
        return Err(Error::SurfaceMismatch);
    }
    c.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET)?;
    d.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET)?;
    minimal_pair(tri, c, d)
}

/// Decides adjacency of two non-isotopic essential curves under `rule`,
/// returning the census evidence alongside the verdict.
pub fn edge_verdict(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
    rule: EdgeRule,
) -> Result<EdgeVerdict> {
    if crate::arrangement::isotopic(tri, c, d)? {
        return Err(Error::EqualCurves);
    }
    let (intersection, census) = prepared_pair(tri, c, d)?;
    let witnesses = rule_witnesses(&census, rule);
    let adjacent = match rule {
        EdgeRule::CurveGraph => intersection == 0,
        _ => !witnesses.is_empty(),
    };
    Ok(EdgeVerdict { adjacent, intersection, census, witnesses })
}

/// Region indices that witness an edge under `rule`.
fn rule_witnesses(census: &RegionCensus, rule: EdgeRule) -> Vec<usize> {
    let region_kinds: Vec<RegionKind> = census.regions.iter().map(|r| r.kind()).collect();
    match rule {
        EdgeRule::CurveGraph => Vec::new(),
        EdgeRule::Cg0 => (0..region_kinds.len())
            .filter(|&i| region_kinds[i] == RegionKind::Essential)
            .collect(),
        EdgeRule::Principal { punctured_threshold } => (0..region_kinds.len())
            .filter(|&i| match region_kinds[i] {
                RegionKind::Essential => true,
                RegionKind::Polygon { sides } => sides >= 8,
                RegionKind::PuncturedPolygon { sides } => sides >= punctured_threshold,
            })
            .collect(),
        EdgeRule::Intermediate => {
            let big: Vec<usize> = (0..region_kinds.len())
                .filter(|&i| match region_kinds[i] {
                    RegionKind::Essential => true,
                    RegionKind::Polygon { sides } => sides >= 10,
                    RegionKind::PuncturedPolygon { .. } => false,
                })
                .collect();
            if !big.is_empty() {
                return big;
            }
            // No single face decides; at least two faces that are neither
            // fourgons nor hexagons still give an edge. Families of
            // parallel faces count with their multiplicity.
            let odd: Vec<usize> = (0..region_kinds.len())
                .filter(|&i| {
                    !matches!(region_kinds[i], RegionKind::Polygon { sides: 4 | 6 })
                })
                .collect();
            let count: BigUint = odd.iter().map(|&i| &census.regions[i].multiplicity).sum();
            if count >= BigUint::from(2u32) {
                odd
            } else {
                Vec::new()
            }
        }
    }
}

/// Decides adjacency under `rule`; see [`edge_verdict`] for the evidence.
pub fn adjacent(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
    rule: EdgeRule,
) -> Result<bool> {
    Ok(edge_verdict(tri, c, d, rule)?.adjacent)
}

/// Exact small-distance classification in the curve graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgDistance {
    /// Isotopic curves.
    Zero,
    /// Disjoint non-isotopic curves.
    One,
    /// Crossing curves with a complementary region that is neither a disc
    /// nor a once-punctured disc: an essential curve disjoint from both
    /// lives there.
    Two,
    /// The pair binds the surface, so every essential curve crosses one of
    /// the two: curve-graph distance is at least three.
    AtLeastThree,
}

impl CgDistance {
    /// Canonical report label.
    pub fn label(&self) -> &'static str {
        match self {
            CgDistance::Zero => "0",
            CgDistance::One => "1",
            CgDistance::Two => "2",
            CgDistance::AtLeastThree => ">=3",
        }
    }
}

/// Classifies the curve-graph distance of a pair exactly over
/// `{0, 1, 2, ≥3}`.
pub fn cg_distance_class(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
) -> Result<CgDistance> {
    if crate::arrangement::isotopic(tri, c, d)? {
        return Ok(CgDistance::Zero);
    }
    let (intersection, census) = prepared_pair(tri, c, d)?;
    if intersection == 0 {
        Ok(CgDistance::One)
    } else if census.binds() {
        Ok(CgDistance::AtLeastThree)
    } else {
        Ok(CgDistance::Two)
    }
}

/// Searches the small-curve pool for an essential curve disjoint from both
/// `c` and `d` — an explicit midpoint for a distance-two pair. Bounded and
/// deterministic; returns `None` when the pool has no witness, which never
/// revises the exact classification.
pub fn cg_witness(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
    weight_cap: u64,
    pool_limit: usize,
) -> Result<Option<NormalCurve>> {
    for w in crate::curve::enumerate_small_curves(tri, weight_cap, pool_limit) {
        if w.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET).is_err() {
            continue;
        }
        if crate::bundle::geometric_intersection(tri, &w, c)? == BigUint::ZERO
            && crate::bundle::geometric_intersection(tri, &w, d)? == BigUint::ZERO
        {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Exact small-distance classification in the principal curve graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcDistance {
    Zero,
    One,
    /// The pair completely fills the surface.
    AtLeastTwo,
}

impl PcDistance {
    /// Canonical report label.
    pub fn label(&self) -> &'static str {
        match self {
            PcDistance::Zero => "0",
            PcDistance::One => "1",
            PcDistance::AtLeastTwo => ">=2",
        }
    }
}

/// Classifies the principal-curve-graph distance of a pair exactly over
/// `{0, 1, ≥2}`; distance ≥ 2 is the "completely fills" condition.
pub fn pc_distance_class(
    tri: &Triangulation,
    c: &NormalCurve,
    d: &NormalCurve,
    rule: EdgeRule,
) -> Result<PcDistance> {
    if !matches!(rule, EdgeRule::Principal { .. }) {
        return Err(Error::Unsupported(
            "the principal distance classifier needs a principal edge rule".into(),
        ));
    }
    match edge_verdict(tri, c, d, rule) {
        Err(Error::EqualCurves) => Ok(PcDistance::Zero),
        Err(e) => Err(e),
        Ok(v) if v.adjacent => Ok(PcDistance::One),
        Ok(_) => Ok(PcDistance::AtLeastTwo),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::stratum_signature;
    use crate::curve::enumerate_small_curves;
    use crate::surface::{Surface, Triangulation};

    fn tri(g: u32, m: u32) -> Triangulation {
        Triangulation::canonical(Surface::new(g, m).unwrap())
    }

    fn pool(t: &Triangulation) -> Vec<NormalCurve> {
        enumerate_small_curves(t, 3, 14)
            .into_iter()
            .filter(|c| c.validate_essential_scc(t, DEFAULT_TRACE_BUDGET).is_ok())
            .collect()
    }

    #[test]
    fn curve_graph_edge_is_disjointness() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = pool(&t);
            for a in &curves {
                for b in &curves {
                    match edge_verdict(&t, a, b, EdgeRule::CurveGraph) {
                        Ok(v) => {
                            let i = crate::arrangement::intersection_number(&t, a, b).unwrap();
                            assert_eq!(v.adjacent, i == 0);
                            assert_eq!(v.intersection, i);
                        }
                        Err(Error::EqualCurves) => {
                            assert!(crate::arrangement::isotopic(&t, a, b).unwrap());
                        }
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn equal_curves_are_rejected_by_every_rule() {
        let t = tri(0, 5);
        let c = &pool(&t)[0];
        for rule in [
            EdgeRule::CurveGraph,
            EdgeRule::Cg0,
            EdgeRule::principal(),
            EdgeRule::principal6(),
            EdgeRule::Intermediate,
        ] {
            assert!(matches!(edge_verdict(&t, c, c, rule), Err(Error::EqualCurves)));
        }
    }

    #[test]
    fn rules_nest_as_refinements() {
        // CG edge ⟹ CG0 edge ⟹ principal edge; principal6 ⟹ principal4;
        // CG0 ⟹ intermediate.
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = pool(&t);
            for (ai, a) in curves.iter().enumerate() {
                for b in curves.iter().skip(ai + 1) {
                    let verdicts = match edge_verdict(&t, a, b, EdgeRule::CurveGraph) {
                        Err(Error::EqualCurves) => continue,
                        Err(e) => panic!("unexpected error {e}"),
                        Ok(cg) => {
                            let cg0 = edge_verdict(&t, a, b, EdgeRule::Cg0).unwrap();
                            let p4 = edge_verdict(&t, a, b, EdgeRule::principal()).unwrap();
                            let p6 = edge_verdict(&t, a, b, EdgeRule::principal6()).unwrap();
                            let im = edge_verdict(&t, a, b, EdgeRule::Intermediate).unwrap();
                            (cg, cg0, p4, p6, im)
                        }
                    };
                    let (cg, cg0, p4, p6, im) = verdicts;
                    if cg.adjacent {
                        assert!(cg0.adjacent, "disjoint pairs have an essential region");
                    }
                    if cg0.adjacent {
                        assert!(p4.adjacent);
                        assert!(p6.adjacent);
                        assert!(im.adjacent);
                    }
                    if p6.adjacent {
                        assert!(p4.adjacent, "threshold 6 witnesses pass threshold 4");
                    }
                    for (v, rule) in [
                        (&cg0, EdgeRule::Cg0),
                        (&p4, EdgeRule::principal()),
                        (&p6, EdgeRule::principal6()),
                    ] {
                        assert_eq!(v.adjacent, !v.witnesses.is_empty());
                        for &w in &v.witnesses {
                            let kind = v.census.regions[w].kind();
                            let ok = match rule {
                                EdgeRule::Cg0 => kind == RegionKind::Essential,
                                EdgeRule::Principal { punctured_threshold } => match kind {
                                    RegionKind::Essential => true,
                                    RegionKind::Polygon { sides } => sides >= 8,
                                    RegionKind::PuncturedPolygon { sides } => {
                                        sides >= punctured_threshold
                                    }
                                },
                                _ => unreachable!(),
                            };
                            assert!(ok, "witness face fits its rule");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distance_classes_follow_the_census() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = pool(&t);
            for a in &curves {
                for b in &curves {
                    let class = cg_distance_class(&t, a, b).unwrap();
                    let is_iso = crate::arrangement::isotopic(&t, a, b).unwrap();
                    let i = crate::arrangement::intersection_number(&t, a, b).unwrap();
                    match class {
                        CgDistance::Zero => assert!(is_iso),
                        CgDistance::One => {
                            assert!(!is_iso && i == 0);
                        }
                        CgDistance::Two | CgDistance::AtLeastThree => assert!(i > 0),
                    }
                    let pc = pc_distance_class(&t, a, b, EdgeRule::principal()).unwrap();
                    match pc {
                        PcDistance::Zero => assert!(is_iso),
                        PcDistance::One => {
                            assert!(adjacent(&t, a, b, EdgeRule::principal()).unwrap());
                        }
                        PcDistance::AtLeastTwo => {
                            // Completely filling pairs bind in particular.
                            assert_eq!(class, CgDistance::AtLeastThree);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distance_two_pairs_have_small_witnesses() {
        // Two curves around overlapping puncture pairs cross but do not
        // bind the five-punctured sphere; the pool contains a disjoint
        // midpoint for them.
        let t = tri(0, 5);
        let curves = pool(&t);
        let mut checked = 0;
        for (ai, a) in curves.iter().enumerate() {
            for b in curves.iter().skip(ai + 1) {
                if cg_distance_class(&t, a, b).unwrap() != CgDistance::Two {
                    continue;
                }
                if let Some(w) = cg_witness(&t, a, b, 3, 200).unwrap() {
                    assert_eq!(
                        crate::bundle::geometric_intersection(&t, &w, a).unwrap(),
                        BigUint::ZERO
                    );
                    assert_eq!(
                        crate::bundle::geometric_intersection(&t, &w, b).unwrap(),
                        BigUint::ZERO
                    );
                    checked += 1;
                }
                if checked >= 8 {
                    return;
                }
            }
        }
        assert!(checked > 0, "the pool contains distance-two pairs with witnesses");
    }

    #[test]
    fn stratum_agrees_with_the_principal_rule() {
        // A binding pair is principal-non-adjacent exactly when its flat
        // structure has only simple zeros and simple poles.
        let mut binding_seen = 0;
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = pool(&t);
            for (ai, a) in curves.iter().enumerate() {
                for b in curves.iter().skip(ai + 1) {
                    let v = match edge_verdict(&t, a, b, EdgeRule::principal()) {
                        Err(Error::EqualCurves) => continue,
                        Err(e) => panic!("unexpected error {e}"),
                        Ok(v) => v,
                    };
                    match stratum_signature(&t, &v.census) {
                        Ok(stratum) => {
                            binding_seen += 1;
                            assert_eq!(stratum.order_sum(), 4 * (g as i64) - 4);
                            assert_eq!(stratum.puncture_orders.len(), m as usize);
                            assert!(stratum.interior_orders.iter().all(|&o| o >= 0));
                            assert!(stratum.puncture_orders.iter().all(|&(_, o)| o >= -1));
                            assert_eq!(
                                stratum.principal,
                                !v.adjacent,
                                "principal stratum ⟺ no principal edge"
                            );
                        }
                        Err(Error::NotBinding) => {
                            assert!(v.census.any_essential());
                        }
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
        }
        assert!(binding_seen > 0, "the pool contains binding pairs");
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in [
            EdgeRule::CurveGraph,
            EdgeRule::Cg0,
            EdgeRule::principal(),
            EdgeRule::principal6(),
            EdgeRule::Intermediate,
        ] {
            assert_eq!(rule.name().parse::<EdgeRule>().unwrap(), rule);
        }
        assert!("octagon".parse::<EdgeRule>().is_err());
    }
}
