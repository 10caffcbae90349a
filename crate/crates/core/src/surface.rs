//! Surfaces of finite type and their canonical marked triangulations.
//!
//! Every curve in this crate is carried by the canonical triangulation of its
//! surface (format tag `canonical-v1`), built deterministically so that corner
//! counts are portable across runs and machines:
//!
//! - closed genus `g ≥ 2`: the one-vertex fan triangulation of the `4g`-gon
//!   with the standard `a₁b₁a₁⁻¹b₁⁻¹…` side pairing (`V=1, E=6g−3, T=4g−2`);
//!   the single vertex is a marked point, not a puncture;
//! - genus `0`, `m ≥ 5` punctures: the double of a fan-triangulated `m`-gon
//!   (`V=m, E=3m−6, T=2m−4`), every vertex a puncture;
//! - genus `g ≥ 1`, `m ≥ 1`: the `4g`-gon fan with its vertex taken as the
//!   first puncture, followed by `m−1` vertex-insertion subdivisions.
//!
//! Orientation conventions used everywhere downstream: triangles are oriented
//! counterclockwise; corner `k` is opposite side `k`; side `k` runs from the
//! vertex at corner `k+1` to the vertex at corner `k+2` (indices mod 3). Each
//! edge is glued from exactly two triangle sides traversing it in opposite
//! directions; the side listed first defines the edge's forward orientation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Format tag of the triangulations built by this module.
pub const TRIANGULATION_TAG: &str = "canonical-v1";

/// An orientable surface of finite type with `3g − 3 + m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Surface {
    /// Genus.
    pub g: u32,
    /// Number of punctures.
    pub m: u32,
}

impl Surface {
    /// Creates a surface, rejecting the exceptional ones (`3g − 3 + m < 2`).
    pub fn new(g: u32, m: u32) -> Result<Self> {
        if 3 * (g as i64) - 3 + (m as i64) < 2 {
            return Err(Error::ExceptionalSurface {
                genus: g,
                punctures: m,
            });
        }
        Ok(Surface { g, m })
    }

    /// Complexity `3g − 3 + m`, the number of curves in a pants decomposition.
    pub fn complexity(&self) -> u32 {
        3 * self.g - 3 + self.m
    }

    /// Euler characteristic of the punctured surface, `2 − 2g − m`.
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * (self.g as i64) - (self.m as i64)
    }
}

impl std::fmt::Display for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S_{{{},{}}}", self.g, self.m)
    }
}

/// A triangle side or its opposite corner, always in `0..3`.
pub type Idx3 = usize;

/// One of the two triangle sides glued along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SideRef {
    pub tri: usize,
    pub side: Idx3,
}

impl SideRef {
    pub fn new(tri: usize, side: Idx3) -> Self {
        SideRef { tri, side }
    }
}

/// The canonical marked triangulation carrying all curve coordinates.
#[derive(Debug, Clone)]
pub struct Triangulation {
    surface: Surface,
    /// Vertex id at each corner; corner `k` is opposite side `k`.
    corner_vertex: Vec<[usize; 3]>,
    /// Edge id of each side.
    side_edge: Vec<[usize; 3]>,
    /// Whether the side traverses its edge forward (in the edge's canonical
    /// orientation). Exactly one side of each edge is forward.
    side_forward: Vec<[bool; 3]>,
    /// The two sides of each edge; slot 0 is the forward one.
    edge_sides: Vec<[SideRef; 2]>,
    /// Which vertices are punctures; the rest are marked points.
    vertex_is_puncture: Vec<bool>,
}

/// Mutable gluing table used while assembling a triangulation.
struct Builder {
    corner_vertex: Vec<[usize; 3]>,
    /// Partner of each side.
    glue: Vec<[Option<SideRef>; 3]>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            corner_vertex: Vec::new(),
            glue: Vec::new(),
        }
    }

    fn add_triangle(&mut self, corners: [usize; 3]) -> usize {
        self.corner_vertex.push(corners);
        self.glue.push([None; 3]);
        self.corner_vertex.len() - 1
    }

    fn glue(&mut self, a: SideRef, b: SideRef) {
        assert!(self.glue[a.tri][a.side].is_none(), "side glued twice");
        assert!(self.glue[b.tri][b.side].is_none(), "side glued twice");
        assert!(a != b, "side glued to itself");
        self.glue[a.tri][a.side] = Some(b);
        self.glue[b.tri][b.side] = Some(a);
    }

    /// Splits triangle `t` into three around a fresh vertex, reusing slot `t`
    /// for the child that keeps old side 0. Returns the new vertex id.
    fn insert_vertex(&mut self, t: usize, new_vertex: usize) {
        let old_corners = self.corner_vertex[t];
        let old_glue = self.glue[t];
        // Child k keeps old side k and is bounded otherwise by the spokes to
        // the two old corners adjacent to that side.
        let ids = [t, self.corner_vertex.len(), self.corner_vertex.len() + 1];
        for (k, &id) in ids.iter().enumerate() {
            let corners = [
                new_vertex,
                old_corners[(k + 1) % 3],
                old_corners[(k + 2) % 3],
            ];
            if id == t {
                self.corner_vertex[t] = corners;
                self.glue[t] = [None; 3];
            } else {
                let got = self.add_triangle(corners);
                assert_eq!(got, id);
            }
        }
        for k in 0..3 {
            let partner = old_glue[k].expect("subdivided triangle had unglued side");
            assert!(partner.tri != t, "canonical builds have no same-triangle edges");
            self.glue[partner.tri][partner.side] = None;
            self.glue(partner, SideRef::new(ids[k], 0));
        }
        // Spoke to old corner j lies between the children on either side of it.
        for j in 0..3 {
            // Child k has the spoke to corner j as: side 2 if j == k+1
            // (outgoing), side 1 if j == k+2 (incoming).
            let outgoing = SideRef::new(ids[(j + 2) % 3], 2);
            let incoming = SideRef::new(ids[(j + 1) % 3], 1);
            self.glue(outgoing, incoming);
        }
    }

    fn finish(self, surface: Surface, vertex_is_puncture: Vec<bool>) -> Triangulation {
        let n = self.corner_vertex.len();
        let mut side_edge = vec![[usize::MAX; 3]; n];
        let mut side_forward = vec![[false; 3]; n];
        let mut edge_sides = Vec::new();
        for t in 0..n {
            for s in 0..3 {
                if side_edge[t][s] != usize::MAX {
                    continue;
                }
                let here = SideRef::new(t, s);
                let there = self.glue[t][s].expect("unglued side");
                let e = edge_sides.len();
                edge_sides.push([here, there]);
                side_edge[t][s] = e;
                side_forward[t][s] = true;
                side_edge[there.tri][there.side] = e;
                side_forward[there.tri][there.side] = false;
            }
        }
        let tri = Triangulation {
            surface,
            corner_vertex: self.corner_vertex,
            side_edge,
            side_forward,
            edge_sides,
            vertex_is_puncture,
        };
        tri.check();
        tri
    }
}

impl Triangulation {
    /// Builds the canonical triangulation of `surface`.
    pub fn canonical(surface: Surface) -> Triangulation {
        let g = surface.g as usize;
        let m = surface.m as usize;
        if g == 0 {
            Self::doubled_polygon(surface, m)
        } else {
            let mut b = Builder::new();
            Self::fan_4g(&mut b, g);
            let punctured = m > 0;
            for v in 1..m {
                let last = b.corner_vertex.len() - 1;
                b.insert_vertex(last, v);
            }
            let vertex_is_puncture = vec![punctured; m.max(1)];
            b.finish(surface, vertex_is_puncture)
        }
    }

    /// One-vertex fan triangulation of the `4g`-gon with the standard
    /// `a₁b₁a₁⁻¹b₁⁻¹…` boundary pairing. All polygon corners become vertex 0.
    fn fan_4g(b: &mut Builder, g: usize) {
        let n = 4 * g;
        // Triangle j spans polygon corners (0, j+1, j+2):
        //   side 0 = boundary segment j+1, side 1 = chord (j+2, 0),
        //   side 2 = chord (0, j+1); segment 0 is side 2 of triangle 0 and
        //   segment n−1 is side 1 of triangle n−3.
        for _ in 0..n - 2 {
            b.add_triangle([0, 0, 0]);
        }
        let seg = |k: usize| -> SideRef {
            if k == 0 {
                SideRef::new(0, 2)
            } else if k == n - 1 {
                SideRef::new(n - 3, 1)
            } else {
                SideRef::new(k - 1, 0)
            }
        };
        // Interior fan chords (0, k) for k = 2..n−2.
        for k in 2..n - 1 {
            b.glue(SideRef::new(k - 2, 1), SideRef::new(k - 1, 2));
        }
        // Boundary pairing per handle block: 4j ↔ 4j+2 and 4j+1 ↔ 4j+3.
        for j in 0..g {
            b.glue(seg(4 * j), seg(4 * j + 2));
            b.glue(seg(4 * j + 1), seg(4 * j + 3));
        }
    }

    /// Double of a fan-triangulated `m`-gon; vertices are the `m` punctures.
    fn doubled_polygon(surface: Surface, m: usize) -> Triangulation {
        let mut b = Builder::new();
        // Front copy: triangle j = (0, j+1, j+2), counterclockwise.
        for j in 0..m - 2 {
            b.add_triangle([0, j + 1, j + 2]);
        }
        // Back copy: mirrored so the double is oriented.
        for j in 0..m - 2 {
            b.add_triangle([0, j + 2, j + 1]);
        }
        let back = m - 2;
        let seg_front = |k: usize| -> SideRef {
            if k == 0 {
                SideRef::new(0, 2)
            } else if k == m - 1 {
                SideRef::new(m - 3, 1)
            } else {
                SideRef::new(k - 1, 0)
            }
        };
        // Back triangle j traverses segment j+1 reversed as its side 0,
        // segment 0 reversed as side 1 of back 0, segment m−1 reversed as
        // side 2 of back m−3.
        let seg_back = |k: usize| -> SideRef {
            if k == 0 {
                SideRef::new(back, 1)
            } else if k == m - 1 {
                SideRef::new(back + m - 3, 2)
            } else {
                SideRef::new(back + k - 1, 0)
            }
        };
        for k in 0..m {
            b.glue(seg_front(k), seg_back(k));
        }
        for k in 2..m - 1 {
            // Front chord (0,k) and its back copy.
            b.glue(SideRef::new(k - 2, 1), SideRef::new(k - 1, 2));
            b.glue(SideRef::new(back + k - 1, 1), SideRef::new(back + k - 2, 2));
        }
        b.finish(surface, vec![true; m])
    }

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn num_triangles(&self) -> usize {
        self.corner_vertex.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_sides.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_is_puncture.len()
    }

    /// Vertex id at corner `k` of triangle `t`.
    pub fn corner_vertex(&self, t: usize, k: Idx3) -> usize {
        self.corner_vertex[t][k]
    }

    pub fn side_edge(&self, s: SideRef) -> usize {
        self.side_edge[s.tri][s.side]
    }

    /// Whether `s` traverses its edge in the edge's forward orientation.
    pub fn side_is_forward(&self, s: SideRef) -> bool {
        self.side_forward[s.tri][s.side]
    }

    pub fn edge_sides(&self, e: usize) -> [SideRef; 2] {
        self.edge_sides[e]
    }

    /// The side glued to `s` across their common edge.
    pub fn opposite_side(&self, s: SideRef) -> SideRef {
        let [a, b] = self.edge_sides[self.side_edge[s.tri][s.side]];
        if a == s {
            b
        } else {
            a
        }
    }

    /// Start and end vertices of side `s` in its own direction.
    pub fn side_vertices(&self, s: SideRef) -> (usize, usize) {
        (
            self.corner_vertex[s.tri][(s.side + 1) % 3],
            self.corner_vertex[s.tri][(s.side + 2) % 3],
        )
    }

    pub fn vertex_is_puncture(&self, v: usize) -> bool {
        self.vertex_is_puncture[v]
    }

    /// The marked (non-puncture) vertex, present exactly on closed surfaces.
    pub fn marked_vertex(&self) -> Option<usize> {
        self.vertex_is_puncture.iter().position(|p| !p)
    }

    /// Steps to the next corner around the vertex of corner `(t, k)`,
    /// crossing the side that leaves that vertex.
    pub fn rotate_corner(&self, t: usize, k: Idx3) -> (usize, Idx3) {
        let out = SideRef::new(t, (k + 2) % 3);
        let p = self.opposite_side(out);
        (p.tri, (p.side + 2) % 3)
    }

    /// Corner counts of the link of vertex `v` (one strand per corner at `v`).
    pub fn vertex_link_counts(&self, v: usize) -> Vec<[u64; 3]> {
        self.corner_vertex
            .iter()
            .map(|c| {
                let mut row = [0u64; 3];
                for k in 0..3 {
                    if c[k] == v {
                        row[k] = 1;
                    }
                }
                row
            })
            .collect()
    }

    /// Structural validation; panics on breach (construction bug).
    fn check(&self) {
        let t_count = self.corner_vertex.len();
        let e_count = self.edge_sides.len();
        let v_count = self.vertex_is_puncture.len();
        assert_eq!(3 * t_count, 2 * e_count, "side/edge count mismatch");
        for (e, [a, b]) in self.edge_sides.iter().enumerate() {
            assert_ne!(a.tri, b.tri, "edge glued within one triangle");
            assert_eq!(self.side_edge[a.tri][a.side], e);
            assert_eq!(self.side_edge[b.tri][b.side], e);
            assert!(self.side_forward[a.tri][a.side]);
            assert!(!self.side_forward[b.tri][b.side]);
            let (a0, a1) = self.side_vertices(*a);
            let (b0, b1) = self.side_vertices(*b);
            assert_eq!(a0, b1, "gluing reverses direction");
            assert_eq!(a1, b0, "gluing reverses direction");
        }
        // Corner orbits around each vertex must close up and cover everything.
        let mut seen = vec![[false; 3]; t_count];
        let mut orbits = 0;
        for t in 0..t_count {
            for k in 0..3 {
                if seen[t][k] {
                    continue;
                }
                orbits += 1;
                let v = self.corner_vertex[t][k];
                let (mut ct, mut ck) = (t, k);
                loop {
                    assert!(!seen[ct][ck]);
                    seen[ct][ck] = true;
                    assert_eq!(self.corner_vertex[ct][ck], v, "corner orbit changes vertex");
                    let nxt = self.rotate_corner(ct, ck);
                    (ct, ck) = nxt;
                    if (ct, ck) == (t, k) {
                        break;
                    }
                }
            }
        }
        assert_eq!(orbits, v_count, "one corner orbit per vertex");
        let filled_chi = v_count as i64 - e_count as i64 + t_count as i64;
        assert_eq!(filled_chi, 2 - 2 * self.surface.g as i64, "Euler characteristic");
        let punctures = self.vertex_is_puncture.iter().filter(|p| **p).count();
        assert_eq!(punctures, self.surface.m as usize, "puncture count");
        if self.surface.m == 0 {
            assert_eq!(v_count, 1, "closed surfaces carry one marked vertex");
        } else {
            assert_eq!(v_count, punctures, "all vertices are punctures");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_exceptional_surfaces() {
        for (g, m) in [(0, 0), (0, 3), (0, 4), (1, 0), (1, 1)] {
            assert!(Surface::new(g, m).is_err(), "S_{{{g},{m}}} must be rejected");
        }
        for (g, m) in [(0, 5), (1, 2), (2, 0), (2, 1), (3, 0)] {
            assert!(Surface::new(g, m).is_ok());
        }
    }

    #[test]
    fn closed_genus_two_counts() {
        let tri = Triangulation::canonical(Surface::new(2, 0).unwrap());
        assert_eq!(tri.num_vertices(), 1);
        assert_eq!(tri.num_edges(), 9);
        assert_eq!(tri.num_triangles(), 6);
        assert_eq!(tri.marked_vertex(), Some(0));
    }

    #[test]
    fn five_punctured_sphere_counts() {
        let tri = Triangulation::canonical(Surface::new(0, 5).unwrap());
        assert_eq!(tri.num_vertices(), 5);
        assert_eq!(tri.num_edges(), 9);
        assert_eq!(tri.num_triangles(), 6);
        assert_eq!(tri.marked_vertex(), None);
    }

    #[test]
    fn twice_punctured_torus_counts() {
        let tri = Triangulation::canonical(Surface::new(1, 2).unwrap());
        assert_eq!(tri.num_vertices(), 2);
        assert_eq!(tri.num_edges(), 6);
        assert_eq!(tri.num_triangles(), 4);
        assert_eq!(tri.marked_vertex(), None);
    }

    #[test]
    fn canonical_families_validate() {
        // `check` runs inside the builder; instantiating is the assertion.
        for (g, m) in [
            (0, 5),
            (0, 6),
            (0, 7),
            (0, 9),
            (1, 2),
            (1, 3),
            (1, 5),
            (2, 0),
            (2, 1),
            (2, 3),
            (3, 0),
            (3, 2),
            (4, 0),
        ] {
            let tri = Triangulation::canonical(Surface::new(g, m).unwrap());
            let s = tri.surface();
            assert_eq!((s.g, s.m), (g, m));
        }
    }

    #[test]
    fn vertex_links_close_up() {
        let tri = Triangulation::canonical(Surface::new(2, 0).unwrap());
        let link = tri.vertex_link_counts(0);
        // One-vertex triangulation: every corner contributes one strand.
        assert!(link.iter().all(|row| *row == [1, 1, 1]));
    }
}
