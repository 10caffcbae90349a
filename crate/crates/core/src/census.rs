//! Complementary-region censuses: the shared report types, region
//! classification, and the global consistency identities every census engine
//! must satisfy.
//!
//! A census describes the closure of the components of `S ∖ (c ∪ d)` for a
//! pair of curves in minimal position. Euler characteristics are reported
//! with punctures *filled* (a once-punctured disc has `euler_filled = 1`);
//! puncture content is tracked separately. The marked vertex of a closed
//! surface is transparent: it never counts as a puncture.

use crate::error::{Error, Result};
use crate::surface::Triangulation;
use num_bigint::BigUint;
use num_traits::{One, Zero};

/// One complementary region, or a family of `multiplicity` parallel copies
/// of the same region shape (families arise between parallel strands).
#[derive(Debug, Clone)]
pub struct Region {
    /// Euler characteristic with punctures filled.
    pub euler_filled: i64,
    /// Puncture vertices inside the region (empty for families).
    pub punctures: Vec<usize>,
    /// Whether the marked vertex of a closed surface lies inside.
    pub contains_marked: bool,
    /// One entry per boundary component.
    pub walks: Vec<BoundaryWalk>,
    /// Number of parallel copies of this region.
    pub multiplicity: BigUint,
}

/// Boundary component summary: corner count and the labels of its arcs.
#[derive(Debug, Clone)]
pub struct BoundaryWalk {
    /// Number of crossing corners passed (equals the number of arcs for
    /// walks with at least one corner).
    pub corners: u64,
    /// Label of each arc between consecutive corners, in walk order; a
    /// corner-free walk has a single entry for its full circle.
    pub arc_labels: Vec<usize>,
}

/// Shape classification used by the edge predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Disc without punctures; `sides` counts its crossing corners.
    Polygon { sides: u64 },
    /// Disc with exactly one puncture.
    PuncturedPolygon { sides: u64 },
    /// Everything else: positive genus, several boundary components, or at
    /// least two punctures.
    Essential,
}

impl Region {
    pub fn is_disc(&self) -> bool {
        self.euler_filled == 1 && self.walks.len() == 1
    }

    pub fn kind(&self) -> RegionKind {
        if self.is_disc() {
            let sides = self.walks[0].corners;
            match self.punctures.len() {
                0 => RegionKind::Polygon { sides },
                1 => RegionKind::PuncturedPolygon { sides },
                _ => RegionKind::Essential,
            }
        } else {
            RegionKind::Essential
        }
    }

    /// A region neither a disc nor a once-punctured disc.
    pub fn is_essential(&self) -> bool {
        self.kind() == RegionKind::Essential
    }
}

/// Census of the complement of a curve system in minimal position.
#[derive(Debug, Clone)]
pub struct RegionCensus {
    /// Crossings of the underlying arrangement.
    pub crossings: BigUint,
    pub regions: Vec<Region>,
}

impl RegionCensus {
    /// Total number of regions, counting families with multiplicity.
    pub fn region_count(&self) -> BigUint {
        self.regions.iter().map(|r| &r.multiplicity).sum()
    }

    pub fn any_essential(&self) -> bool {
        self.regions.iter().any(Region::is_essential)
    }

    /// The pair binds the surface: every region is a disc or a
    /// once-punctured disc.
    pub fn binds(&self) -> bool {
        !self.any_essential()
    }

    /// Global identities every census must satisfy; panics on breach.
    pub fn check_invariants(&self, tri: &Triangulation) {
        let s = tri.surface();
        let mut chi = num_bigint::BigInt::zero();
        for r in &self.regions {
            chi += num_bigint::BigInt::from(r.euler_filled)
                * num_bigint::BigInt::from(r.multiplicity.clone());
        }
        let expected = num_bigint::BigInt::from(2 - 2 * (s.g as i64))
            + num_bigint::BigInt::from(self.crossings.clone());
        assert_eq!(chi, expected, "filled Euler characteristics must sum to 2-2g+i");
        let punctures: usize = self.regions.iter().map(|r| r.punctures.len()).sum();
        assert_eq!(punctures, s.m as usize, "every puncture lies in one region");
        let marked = self.regions.iter().filter(|r| r.contains_marked).count();
        assert_eq!(marked, usize::from(s.m == 0), "marked vertex in one region iff closed");
        for r in &self.regions {
            if !r.punctures.is_empty() || r.contains_marked {
                assert!(r.multiplicity.is_one(), "content-bearing regions are not families");
            }
            for w in &r.walks {
                assert_eq!(
                    w.arc_labels.len() as u64,
                    w.corners.max(1),
                    "one arc per corner (or one closed arc)"
                );
            }
        }
    }
}

/// Cone-point data of the flat structure dual to a binding pair: every
/// complementary `2k`-gon carries a singularity of order `k − 2` (a fourgon
/// is a regular point, a hexagon a simple zero, a once-punctured bigon a
/// simple pole).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    /// Orders of the interior cone points, one entry per unpunctured face,
    /// sorted ascending.
    pub interior_orders: Vec<i64>,
    /// Order at each puncture, keyed by puncture vertex, sorted by vertex.
    pub puncture_orders: Vec<(usize, i64)>,
    /// Every face is a fourgon, a hexagon, or a once-punctured bigon — the
    /// flat structure has only simple zeros and simple poles.
    pub principal: bool,
}

impl Stratum {
    /// Sum of all orders; always `4g − 4` for a binding pair on a genus-`g`
    /// surface.
    pub fn order_sum(&self) -> i64 {
        let interior: i64 = self.interior_orders.iter().sum();
        let punctures: i64 = self.puncture_orders.iter().map(|&(_, o)| o).sum();
        interior + punctures
    }
}

/// Classifies the singularities of the flat structure dual to a binding
/// pair from its census.
///
/// Fails with [`Error::NotBinding`] when some region is essential. The order
/// sum `4g − 4` and the one-face-per-puncture correspondence are asserted,
/// not assumed.
pub fn stratum_signature(tri: &Triangulation, census: &RegionCensus) -> Result<Stratum> {
    if !census.binds() {
        return Err(Error::NotBinding);
    }
    let mut interior_orders = Vec::new();
    let mut puncture_orders = Vec::new();
    let mut principal = true;
    for r in &census.regions {
        match r.kind() {
            RegionKind::Polygon { sides } => {
                assert!(sides >= 4 && sides % 2 == 0, "minimal position excludes small polygons");
                let copies = u64::try_from(&r.multiplicity).expect("binding censuses are literal");
                for _ in 0..copies {
                    interior_orders.push(sides as i64 / 2 - 2);
                }
                principal &= sides == 4 || sides == 6;
            }
            RegionKind::PuncturedPolygon { sides } => {
                assert!(sides >= 2 && sides % 2 == 0, "punctured faces of essential pairs have corners");
                assert!(r.multiplicity.is_one(), "content-bearing regions are not families");
                puncture_orders.push((r.punctures[0], sides as i64 / 2 - 2));
                principal &= sides == 2;
            }
            RegionKind::Essential => unreachable!("binding censuses have no essential region"),
        }
    }
    interior_orders.sort_unstable();
    puncture_orders.sort_unstable();
    let s = tri.surface();
    assert_eq!(puncture_orders.len(), s.m as usize, "one once-punctured face per puncture");
    let stratum = Stratum { interior_orders, puncture_orders, principal };
    assert_eq!(stratum.order_sum(), 4 * (s.g as i64) - 4, "cone angles sum to the flat total");
    Ok(stratum)
}
