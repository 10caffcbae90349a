//! Point-level drawn arrangements of normal curve systems.
//!
//! An [`Arrangement`] draws one or more normal systems on a shared
//! triangulation, one drawn point per edge intersection, keeping the exact
//! order of points along every edge together with each strand's closed
//! itinerary through the triangles. On top of that data the module computes
//! chord crossings, the cellulation the curves cut the surface into, censuses
//! of complementary regions, isotopies to minimal position, and Dehn twists
//! by annulus surgery.
//!
//! Everything here is exact but deliberately small-scale: the work grows with
//! the number of drawn points, so inputs are capped by [`POINT_BUDGET`]. The
//! module serves as the ground-truth engine that scalable coordinate-level
//! algorithms are checked against.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::census::{BoundaryWalk, Region, RegionCensus};
use crate::curve::{self, NormalCurve, DEFAULT_TRACE_BUDGET};
use crate::error::{Error, Result};
use crate::surface::{SideRef, Triangulation};

/// Ceiling on the number of drawn points an arrangement may hold.
pub const POINT_BUDGET: u64 = 1 << 20;

fn budget_error() -> Error {
    Error::Unsupported("curve system too heavy for the point-level engine".into())
}

fn budgeted(value: &BigUint) -> Result<u64> {
    u64::try_from(value)
        .ok()
        .filter(|&v| v <= POINT_BUDGET)
        .ok_or_else(budget_error)
}

/// One closed strand of a drawn system. Entry `k` holds a point id and the
/// triangle the strand crosses after that point, so chord `k` joins point
/// `path[k].0` to point `path[k+1].0` inside triangle `path[k].1`.
#[derive(Debug, Clone)]
struct Strand {
    label: usize,
    path: Vec<(usize, usize)>,
}

/// A chord is one triangle crossing of a strand: the piece of strand
/// `strand` between its points `k` and `k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Chord {
    strand: usize,
    k: usize,
}

/// Several normal systems drawn together in general position.
pub struct Arrangement<'t> {
    tri: &'t Triangulation,
    /// Active point ids along each edge, in edge-forward order.
    order: Vec<Vec<usize>>,
    /// Home edge of every point ever created; `None` once retired.
    pt_edge: Vec<Option<usize>>,
    strands: Vec<Strand>,
}

/// Moves performed while bringing an arrangement to minimal position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MinimizeStats {
    /// Empty-bigon removals (each erases one crossing pair).
    pub bigon_moves: usize,
    /// Slides of a strand across the marked vertex of a closed surface.
    pub vertex_slides: usize,
}

impl<'t> Arrangement<'t> {
    /// Draws the given systems together; `curves[i]` becomes label `i`.
    ///
    /// On every edge the points of later labels are stacked after those of
    /// earlier labels, so each system stays in its own normal position and
    /// crossings occur only between corner families of different labels.
    pub fn overlay(tri: &'t Triangulation, curves: &[&NormalCurve]) -> Result<Self> {
        let ne = tri.num_edges();
        let nt = tri.num_triangles();
        let mut weights: Vec<Vec<u64>> = Vec::with_capacity(curves.len());
        let mut corners: Vec<Vec<[u64; 3]>> = Vec::with_capacity(curves.len());
        let mut total: u64 = 0;
        for c in curves {
            if c.surface() != tri.surface() {
                return Err(Error::InvalidCurve(
                    "system drawn on a different surface".into(),
                ));
            }
            let w = c
                .edge_weights(tri)
                .iter()
                .map(budgeted)
                .collect::<Result<Vec<_>>>()?;
            total += w.iter().sum::<u64>();
            if total > POINT_BUDGET {
                return Err(budget_error());
            }
            let mut cc = Vec::with_capacity(nt);
            for t in 0..nt {
                cc.push([
                    budgeted(c.corner_count(t, 0))?,
                    budgeted(c.corner_count(t, 1))?,
                    budgeted(c.corner_count(t, 2))?,
                ]);
            }
            weights.push(w);
            corners.push(cc);
        }

        let mut order: Vec<Vec<usize>> = vec![Vec::new(); ne];
        let mut pt_edge: Vec<Option<usize>> = Vec::new();
        let mut base: Vec<Vec<usize>> = vec![vec![0; ne]; curves.len()];
        for e in 0..ne {
            for (l, w) in weights.iter().enumerate() {
                base[l][e] = pt_edge.len();
                for _ in 0..w[e] {
                    order[e].push(pt_edge.len());
                    pt_edge.push(Some(e));
                }
            }
        }

        let mut strands = Vec::new();
        for l in 0..curves.len() {
            let w = &weights[l];
            let cc = &corners[l];
            let mut seen: Vec<Vec<bool>> = w.iter().map(|&n| vec![false; n as usize]).collect();
            for e0 in 0..ne {
                for p0 in 0..w[e0] {
                    if seen[e0][p0 as usize] {
                        continue;
                    }
                    let mut path = Vec::new();
                    let (mut e, mut p) = (e0, p0);
                    let mut into = tri.edge_sides(e0)[0];
                    loop {
                        assert!(!seen[e][p as usize], "a strand closes up at its seed point");
                        seen[e][p as usize] = true;
                        path.push((base[l][e] + p as usize, into.tri));
                        let (e2, p2, into2) = curve::step_strand(tri, cc, w, e, p, into);
                        e = e2;
                        p = p2;
                        into = into2;
                        if (e, p) == (e0, p0) {
                            break;
                        }
                    }
                    assert!(path.len() >= 2, "a closed strand crosses at least two edges");
                    strands.push(Strand { label: l, path });
                }
            }
        }

        Ok(Arrangement {
            tri,
            order,
            pt_edge,
            strands,
        })
    }

    pub fn triangulation(&self) -> &Triangulation {
        self.tri
    }

    /// Position of every active point within its edge order.
    fn positions(&self) -> HashMap<usize, usize> {
        let mut pos = HashMap::new();
        for ord in &self.order {
            for (i, &p) in ord.iter().enumerate() {
                pos.insert(p, i);
            }
        }
        pos
    }

    /// The chord leaving each point; the arriving chord is its predecessor.
    fn point_roles(&self) -> HashMap<usize, Chord> {
        let mut roles = HashMap::new();
        for (si, st) in self.strands.iter().enumerate() {
            for (k, &(p, _)) in st.path.iter().enumerate() {
                let old = roles.insert(p, Chord { strand: si, k });
                assert!(old.is_none(), "each drawn point lies on exactly one strand");
            }
        }
        roles
    }

    fn chord_ends(&self, c: Chord) -> (usize, usize) {
        let path = &self.strands[c.strand].path;
        (path[c.k].0, path[(c.k + 1) % path.len()].0)
    }

    fn chord_tri(&self, c: Chord) -> usize {
        self.strands[c.strand].path[c.k].1
    }

    fn chord_label(&self, c: Chord) -> usize {
        self.strands[c.strand].label
    }

    fn chord_pred(&self, c: Chord) -> Chord {
        let len = self.strands[c.strand].path.len();
        Chord {
            strand: c.strand,
            k: (c.k + len - 1) % len,
        }
    }

    /// Circular ranks of the active points around the boundary of triangle
    /// `t`, following sides 0, 1, 2 in the triangle's orientation.
    fn boundary_ranks(&self, t: usize) -> (HashMap<usize, usize>, usize) {
        let mut rank = HashMap::new();
        let mut r = 0usize;
        for s in 0..3 {
            let sref = SideRef::new(t, s);
            let e = self.tri.side_edge(sref);
            if self.tri.side_is_forward(sref) {
                for &p in &self.order[e] {
                    rank.insert(p, r);
                    r += 1;
                }
            } else {
                for &p in self.order[e].iter().rev() {
                    rank.insert(p, r);
                    r += 1;
                }
            }
        }
        (rank, r)
    }

    /// All chord crossings, with per-chord orderings along each chord.
    fn crossings(&self) -> CrossingData {
        let nt = self.tri.num_triangles();
        let mut chords_by_tri: Vec<Vec<Chord>> = vec![Vec::new(); nt];
        for (si, st) in self.strands.iter().enumerate() {
            for k in 0..st.path.len() {
                chords_by_tri[st.path[k].1].push(Chord { strand: si, k });
            }
        }
        let mut pairs = Vec::new();
        let mut along: HashMap<Chord, Vec<(usize, usize)>> = HashMap::new();
        for (t, list) in chords_by_tri.iter().enumerate() {
            let (rank, n) = self.boundary_ranks(t);
            let mut partners: HashMap<Chord, Vec<Chord>> = HashMap::new();
            for i in 0..list.len() {
                for j in i + 1..list.len() {
                    let (ca, cb) = (list[i], list[j]);
                    let ea = self.chord_ends(ca);
                    let eb = self.chord_ends(cb);
                    if !interleaved(&rank, n, ea, eb) {
                        continue;
                    }
                    assert_ne!(
                        self.chord_label(ca),
                        self.chord_label(cb),
                        "strands of one system stay parallel"
                    );
                    let idx = pairs.len();
                    pairs.push((ca, cb));
                    along
                        .entry(ca)
                        .or_default()
                        .push((inside_key(&rank, n, ea, eb), idx));
                    along
                        .entry(cb)
                        .or_default()
                        .push((inside_key(&rank, n, eb, ea), idx));
                    partners.entry(ca).or_default().push(cb);
                    partners.entry(cb).or_default().push(ca);
                }
            }
            // The crossings along one chord come from parallel families, so
            // their order along the chord matches the circular order of their
            // interval endpoints; that requires the partners to be pairwise
            // non-crossing.
            for ps in partners.values() {
                for i in 0..ps.len() {
                    for j in i + 1..ps.len() {
                        assert!(
                            !interleaved(
                                &rank,
                                n,
                                self.chord_ends(ps[i]),
                                self.chord_ends(ps[j])
                            ),
                            "chords crossing a common chord are parallel"
                        );
                    }
                }
            }
        }
        let along = along
            .into_iter()
            .map(|(c, mut v)| {
                v.sort();
                for w in v.windows(2) {
                    assert!(w[0].0 < w[1].0, "crossing order along a chord is strict");
                }
                (c, v.into_iter().map(|(_, i)| i).collect())
            })
            .collect();
        CrossingData { pairs, along }
    }

    /// Total number of chord crossings of the drawn arrangement.
    pub fn total_crossings(&self) -> u64 {
        self.crossings().pairs.len() as u64
    }

    /// Crossings between the strands of two labels.
    pub fn crossings_between(&self, la: usize, lb: usize) -> u64 {
        self.crossings()
            .pairs
            .iter()
            .filter(|&&(a, b)| {
                let (x, y) = (self.chord_label(a), self.chord_label(b));
                (x, y) == (la, lb) || (x, y) == (lb, la)
            })
            .count() as u64
    }

    /// Builds the cell structure the drawn curves cut the surface into.
    fn cellulation(&self) -> Cellulation {
        let tri = self.tri;
        let ne = tri.num_edges();
        let cross = self.crossings();
        let nv = tri.num_vertices();

        let mut pts = Vec::new();
        let mut node_of_pt: HashMap<usize, usize> = HashMap::new();
        for ord in &self.order {
            for &p in ord {
                node_of_pt.insert(p, nv + pts.len());
                pts.push(p);
            }
        }
        let np = pts.len();
        let nx = cross.pairs.len();

        let mut darts: Vec<Dart> = Vec::new();

        // Transversal arcs: the pieces of triangulation edges between
        // consecutive drawn points.
        let mut chain_darts: Vec<Vec<usize>> = Vec::with_capacity(ne);
        for e in 0..ne {
            let fwd = tri.edge_sides(e)[0];
            let (va, vb) = tri.side_vertices(fwd);
            let mut nodes = Vec::with_capacity(self.order[e].len() + 2);
            nodes.push(va);
            nodes.extend(self.order[e].iter().map(|p| node_of_pt[p]));
            nodes.push(vb);
            let mut links = Vec::new();
            for w in nodes.windows(2) {
                let (d, _) = add_dart_pair(&mut darts, w[0], w[1], DartKind::Arc, DartKind::Arc);
                links.push(d);
            }
            chain_darts.push(links);
        }

        // Chord segments: the pieces of chords between consecutive crossings.
        let mut germ_start: HashMap<Chord, usize> = HashMap::new();
        let mut germ_end: HashMap<Chord, usize> = HashMap::new();
        let mut cross_germs: HashMap<(usize, Chord), (usize, usize)> = HashMap::new();
        let empty: Vec<usize> = Vec::new();
        for (si, st) in self.strands.iter().enumerate() {
            for k in 0..st.path.len() {
                let c = Chord { strand: si, k };
                let (a, b) = self.chord_ends(c);
                let xs = cross.along.get(&c).unwrap_or(&empty);
                let mut nodes = Vec::with_capacity(xs.len() + 2);
                nodes.push(node_of_pt[&a]);
                nodes.extend(xs.iter().map(|&pi| nv + np + pi));
                nodes.push(node_of_pt[&b]);
                let mut prev_fwd: Option<usize> = None;
                let last = nodes.len() - 2;
                for (i, w) in nodes.windows(2).enumerate() {
                    let (df, db) = add_dart_pair(
                        &mut darts,
                        w[0],
                        w[1],
                        DartKind::Seg { chord: c },
                        DartKind::Seg { chord: c },
                    );
                    if i == 0 {
                        germ_start.insert(c, df);
                    }
                    if let Some(pf) = prev_fwd {
                        cross_germs.insert((w[0], c), (darts[pf].rev, df));
                    }
                    prev_fwd = Some(df);
                    if i == last {
                        germ_end.insert(c, db);
                    }
                }
            }
        }

        let n_nodes = nv + np + nx;
        let mut rot: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];

        // Vertex rotations: one outgoing edge germ per corner, in
        // counterclockwise order around the vertex.
        let mut seen_corner = vec![[false; 3]; tri.num_triangles()];
        for t0 in 0..tri.num_triangles() {
            for k0 in 0..3 {
                if seen_corner[t0][k0] {
                    continue;
                }
                let v = tri.corner_vertex(t0, k0);
                let mut orbit = Vec::new();
                let (mut t, mut k) = (t0, k0);
                loop {
                    seen_corner[t][k] = true;
                    orbit.push((t, k));
                    let (t2, k2) = tri.rotate_corner(t, k);
                    t = t2;
                    k = k2;
                    if (t, k) == (t0, k0) {
                        break;
                    }
                }
                // rotate_corner walks clockwise; rotations here are
                // counterclockwise.
                orbit.reverse();
                for &(tt, kk) in &orbit {
                    let out = SideRef::new(tt, (kk + 2) % 3);
                    let e = tri.side_edge(out);
                    let germ = if tri.side_is_forward(out) {
                        chain_darts[e][0]
                    } else {
                        darts[*chain_darts[e].last().unwrap()].rev
                    };
                    assert_eq!(darts[germ].from, v, "vertex germ leaves its vertex");
                    rot[v].push(germ);
                }
            }
        }

        // Point rotations: the two arc germs separate the two chord germs,
        // with the chord germ into the edge-forward left triangle placed
        // after the arc germ toward higher positions.
        let roles = self.point_roles();
        let positions = self.positions();
        for (idx, &p) in pts.iter().enumerate() {
            let node = nv + idx;
            let e = self.pt_edge[p].expect("active point");
            let pos = positions[&p];
            let arc_plus = chain_darts[e][pos + 1];
            let arc_minus = darts[chain_darts[e][pos]].rev;
            let leaving = roles[&p];
            let arriving = self.chord_pred(leaving);
            let (tl, ta) = (self.chord_tri(leaving), self.chord_tri(arriving));
            assert_ne!(tl, ta, "a point's chords occupy the edge's two triangles");
            let t0 = tri.edge_sides(e)[0].tri;
            let (g0, g1) = if tl == t0 {
                (germ_start[&leaving], germ_end[&arriving])
            } else {
                assert_eq!(ta, t0, "chords at a point lie in the edge's triangles");
                (germ_end[&arriving], germ_start[&leaving])
            };
            rot[node] = vec![arc_plus, g0, arc_minus, g1];
        }

        // Crossing rotations: the four segment germs ordered by the circular
        // rank of the chord endpoint they head toward.
        for (pi, &(ca, cb)) in cross.pairs.iter().enumerate() {
            let node = nv + np + pi;
            let t = self.chord_tri(ca);
            debug_assert_eq!(t, self.chord_tri(cb));
            let (rank, _) = self.boundary_ranks(t);
            let mut germs = Vec::with_capacity(4);
            for &c in &[ca, cb] {
                let (a, b) = self.chord_ends(c);
                let (to_start, to_end) = cross_germs[&(node, c)];
                germs.push((rank[&a], to_start));
                germs.push((rank[&b], to_end));
            }
            germs.sort();
            rot[node] = germs.into_iter().map(|(_, d)| d).collect();
        }

        let mut rot_pos = vec![usize::MAX; darts.len()];
        for ring in &rot {
            for (i, &d) in ring.iter().enumerate() {
                assert_eq!(rot_pos[d], usize::MAX, "each dart sits in one rotation");
                rot_pos[d] = i;
            }
        }
        assert!(
            rot_pos.iter().all(|&x| x != usize::MAX),
            "every dart leaves its node through a rotation slot"
        );

        // Faces: orbits that keep the face on the left of each dart.
        let mut face_of = vec![usize::MAX; darts.len()];
        let mut faces = 0usize;
        for d0 in 0..darts.len() {
            if face_of[d0] != usize::MAX {
                continue;
            }
            let f = faces;
            faces += 1;
            let mut d = d0;
            loop {
                face_of[d] = f;
                let ring = &rot[darts[d].to];
                let i = rot_pos[darts[d].rev];
                d = ring[(i + ring.len() - 1) % ring.len()];
                if d == d0 {
                    break;
                }
                assert_eq!(face_of[d], usize::MAX, "face orbits are disjoint");
            }
        }

        // Regions: faces merged across the transversal arcs.
        let mut uf = UnionFind::new(faces);
        let mut arc_darts = Vec::new();
        for (d, dart) in darts.iter().enumerate() {
            if matches!(dart.kind, DartKind::Arc) && d < dart.rev {
                arc_darts.push(d);
                uf.union(face_of[d], face_of[dart.rev]);
            }
        }
        let mut region_ids: HashMap<usize, usize> = HashMap::new();
        let mut regions: Vec<RegionData> = Vec::new();
        let mut region_of_face = vec![0usize; faces];
        for f in 0..faces {
            let root = uf.find(f);
            let ri = match region_ids.get(&root) {
                Some(&i) => i,
                None => {
                    let i = regions.len();
                    region_ids.insert(root, i);
                    regions.push(RegionData::default());
                    i
                }
            };
            region_of_face[f] = ri;
            regions[ri].faces += 1;
        }
        for &d in &arc_darts {
            let r1 = region_of_face[face_of[d]];
            let r2 = region_of_face[face_of[darts[d].rev]];
            assert_eq!(r1, r2, "an arc's two sides share a region");
            regions[r1].arcs += 1;
        }
        for v in 0..nv {
            assert!(!rot[v].is_empty(), "every vertex meets the triangulation");
            let ri = region_of_face[face_of[rot[v][0]]];
            regions[ri].vertices.push(v);
        }
        let total_arcs: usize = regions.iter().map(|r| r.arcs).sum();
        assert_eq!(total_arcs, np + ne, "each edge piece lies in one region");

        // Boundary walks: how the curves travel around each region, crossing
        // straight through points and turning at crossings.
        let mut walk_of = vec![usize::MAX; darts.len()];
        let mut walks: Vec<WalkData> = Vec::new();
        for d0 in 0..darts.len() {
            if matches!(darts[d0].kind, DartKind::Arc) || walk_of[d0] != usize::MAX {
                continue;
            }
            let wi = walks.len();
            let mut ds = Vec::new();
            let mut d = d0;
            loop {
                walk_of[d] = wi;
                ds.push(d);
                let node = darts[d].to;
                d = if node >= nv + np {
                    // crossing: turn along the same face
                    let ring = &rot[node];
                    let i = rot_pos[darts[d].rev];
                    ring[(i + ring.len() - 1) % ring.len()]
                } else {
                    // point: continue onto the strand's next chord
                    let ring = &rot[node];
                    let i = rot_pos[darts[d].rev];
                    assert!(
                        i == 1 || i == 3,
                        "segments reach a point through its chord germs"
                    );
                    ring[(i + 2) % 4]
                };
                if d == d0 {
                    break;
                }
                assert_eq!(walk_of[d], usize::MAX, "walk orbits are disjoint");
            }
            let corner_positions: Vec<usize> = ds
                .iter()
                .enumerate()
                .filter(|&(_, &d)| darts[d].to >= nv + np)
                .map(|(i, _)| i)
                .collect();
            let strand_label = |d: usize| match darts[d].kind {
                DartKind::Seg { chord } => self.strands[chord.strand].label,
                DartKind::Arc => unreachable!("walks traverse segments only"),
            };
            let labels = if corner_positions.is_empty() {
                let l = strand_label(ds[0]);
                assert!(
                    ds.iter().all(|&d| strand_label(d) == l),
                    "a cornerless walk follows one strand"
                );
                vec![l]
            } else {
                let m = corner_positions.len();
                let n = ds.len();
                (0..m)
                    .map(|j| {
                        let a = corner_positions[j];
                        let b = corner_positions[(j + 1) % m];
                        let mut i = (a + 1) % n;
                        let l = strand_label(ds[i]);
                        while i != b {
                            assert_eq!(strand_label(ds[i]), l, "one strand per side run");
                            i = (i + 1) % n;
                        }
                        assert_eq!(strand_label(ds[b]), l, "one strand per side run");
                        l
                    })
                    .collect()
            };
            let corners = corner_positions.len() as u64;
            let region = region_of_face[face_of[d0]];
            regions[region].walks.push(wi);
            walks.push(WalkData {
                darts: ds,
                corners,
                labels,
            });
        }

        Cellulation {
            nv,
            np,
            pts,
            crossings: nx,
            darts,
            rot,
            face_of,
            region_of_face,
            regions,
            walks,
        }
    }

    /// Census of the complementary regions of the drawn arrangement.
    ///
    /// The result always satisfies the global census identities; breaching
    /// them panics, so a returned census is internally consistent.
    pub fn census(&self) -> RegionCensus {
        let cell = self.cellulation();
        let marked = self.tri.marked_vertex();
        let regions = cell
            .regions
            .iter()
            .map(|r| Region {
                euler_filled: euler_filled(r),
                punctures: r
                    .vertices
                    .iter()
                    .copied()
                    .filter(|&v| self.tri.vertex_is_puncture(v))
                    .collect(),
                contains_marked: marked.is_some_and(|mv| r.vertices.contains(&mv)),
                walks: r
                    .walks
                    .iter()
                    .map(|&w| BoundaryWalk {
                        corners: cell.walks[w].corners,
                        arc_labels: cell.walks[w].labels.clone(),
                    })
                    .collect(),
                multiplicity: BigUint::from(1u32),
            })
            .collect();
        let census = RegionCensus {
            crossings: BigUint::from(cell.crossings as u64),
            regions,
        };
        census.check_invariants(self.tri);
        census
    }

    /// Isotopes the arrangement to minimal position by removing empty bigons
    /// and, on closed surfaces, bigons whose interior holds only the marked
    /// vertex. Same-surface invariants (crossing counts between isotopy
    /// classes, censuses) are unchanged; on closed surfaces the drawn curves
    /// may slide across the marked vertex.
    pub fn minimize(&mut self) -> MinimizeStats {
        self.tighten();
        let mut stats = MinimizeStats::default();
        loop {
            let before = self.total_crossings();
            if before == 0 {
                break;
            }
            let cell = self.cellulation();
            if let Some(swaps) = self.find_bigon(&cell) {
                self.apply_bigon(&swaps);
                assert_eq!(
                    self.total_crossings() + 2,
                    before,
                    "a bigon move removes one crossing pair"
                );
                stats.bigon_moves += 1;
                continue;
            }
            match self.find_marked_slide(&cell) {
                Some(plan) => {
                    self.apply_slide(&plan);
                    assert_eq!(
                        self.total_crossings() + 2,
                        before,
                        "a vertex slide removes one crossing pair"
                    );
                    self.tighten();
                    stats.vertex_slides += 1;
                }
                None => break,
            }
        }
        stats
    }

    /// Finds an empty bigon and returns the adjacent point pairs to swap.
    fn find_bigon(&self, cell: &Cellulation) -> Option<Vec<(usize, usize)>> {
        for reg in &cell.regions {
            if !reg.vertices.is_empty() || reg.walks.len() != 1 || euler_filled(reg) != 1 {
                continue;
            }
            let w = &cell.walks[reg.walks[0]];
            if w.corners != 2 {
                continue;
            }
            let ds = &w.darts;
            let n = ds.len();
            let cp: Vec<usize> = (0..n)
                .filter(|&i| cell.is_crossing_node(cell.darts[ds[i]].to))
                .collect();
            let (p0, p1) = (cp[0], cp[1]);
            let collect_side = |from: usize, to: usize| {
                let mut side = Vec::new();
                let mut i = (from + 1) % n;
                while i != to {
                    side.push(
                        cell.node_point(cell.darts[ds[i]].to)
                            .expect("bigon side interiors are points"),
                    );
                    i = (i + 1) % n;
                }
                side
            };
            let side1 = collect_side(p0, p1);
            let side2 = collect_side(p1, p0);
            // An empty bigon between parallel families is a ladder: its two
            // sides thread the same sequence of edges in opposite order.
            assert_eq!(side1.len(), side2.len(), "an empty bigon is a ladder");
            assert!(
                !side1.is_empty(),
                "crossing chords meet once, so a bigon spans at least one edge"
            );
            let swaps = side1
                .iter()
                .zip(side2.iter().rev())
                .map(|(&a, &b)| (a, b))
                .collect();
            return Some(swaps);
        }
        None
    }

    /// Pulls the two sides of an empty bigon through each other by swapping
    /// the paired points on every edge the bigon spans.
    fn apply_bigon(&mut self, swaps: &[(usize, usize)]) {
        for &(a, b) in swaps {
            let e = self.pt_edge[a].expect("active point");
            assert_eq!(self.pt_edge[b], Some(e), "bigon doors pair points on one edge");
            let ord = &mut self.order[e];
            let ia = ord.iter().position(|&x| x == a).unwrap();
            let ib = ord.iter().position(|&x| x == b).unwrap();
            assert_eq!(ia.abs_diff(ib), 1, "door points are adjacent on their edge");
            ord.swap(ia, ib);
        }
    }

    /// Finds a bigon whose interior holds exactly the marked vertex of a
    /// closed surface and plans the slide that empties it.
    fn find_marked_slide(&self, cell: &Cellulation) -> Option<SlidePlan> {
        let marked = self.tri.marked_vertex()?;
        for reg in &cell.regions {
            if reg.walks.len() != 1 || euler_filled(reg) != 1 {
                continue;
            }
            if reg.vertices.len() != 1 || reg.vertices[0] != marked {
                continue;
            }
            let w = &cell.walks[reg.walks[0]];
            if w.corners != 2 {
                continue;
            }
            let ds = &w.darts;
            let n = ds.len();
            let cp: Vec<usize> = (0..n)
                .filter(|&i| cell.is_crossing_node(cell.darts[ds[i]].to))
                .collect();
            let (p0, p1) = (cp[0], cp[1]);
            let side_darts = |from: usize, to: usize| {
                let mut v = Vec::new();
                let mut i = (from + 1) % n;
                loop {
                    v.push(ds[i]);
                    if i == to {
                        break;
                    }
                    i = (i + 1) % n;
                }
                v
            };
            let s1 = side_darts(p0, p1);
            let s2 = side_darts(p1, p0);
            let chord_of = |d: usize| match cell.darts[d].kind {
                DartKind::Seg { chord } => chord,
                DartKind::Arc => unreachable!("bigon sides are segments"),
            };
            let l1 = self.chord_label(chord_of(s1[0]));
            let l2 = self.chord_label(chord_of(s2[0]));
            assert_ne!(l1, l2, "the two sides of a crossing bigon differ in label");
            // Slide the higher label; the walk runs corner X, kept side,
            // corner Y, slid side, so the kept side travels X to Y and the
            // slid side Y to X.
            let (kept, slid) = if l1 < l2 { (s1, s2) } else { (s2, s1) };
            let k = kept.len();
            let m = slid.len() - 1;
            let slid_chords: Vec<Chord> = slid.iter().map(|&d| chord_of(d)).collect();
            let strand = slid_chords[0].strand;
            assert!(
                slid_chords.iter().all(|c| c.strand == strand),
                "a bigon side follows one strand"
            );
            // Outside anchors: where the slid strand continues beyond the two
            // corners.
            let first = *slid.first().unwrap();
            let lastd = *slid.last().unwrap();
            let (fa, fb) = self.chord_ends(chord_of(lastd));
            let a_pt = if seg_forward(cell, lastd) { fb } else { fa };
            let (ga, gb) = self.chord_ends(chord_of(first));
            let b_pt = if seg_forward(cell, first) { ga } else { gb };
            let doomed: Vec<usize> = slid[..m]
                .iter()
                .map(|&d| {
                    cell.node_point(cell.darts[d].to)
                        .expect("slid side interiors are points")
                })
                .collect();
            let kept_chords: Vec<Chord> = kept.iter().map(|&d| chord_of(d)).collect();
            let mut route = Vec::with_capacity(k - 1);
            for t in 0..k - 1 {
                let node = cell.darts[kept[t]].to;
                let p = cell.node_point(node).expect("kept side interiors are points");
                let ring = &cell.rot[node];
                let bigon_region = cell.region_of_face[cell.face_of[ds[0]]];
                let after = cell.region_of_face[cell.face_of[ring[0]]] == bigon_region;
                if !after {
                    assert_eq!(
                        cell.region_of_face[cell.face_of[ring[2]]],
                        bigon_region,
                        "the bigon sits on one side of each kept-side point"
                    );
                }
                route.push(RouteStep {
                    edge: self.pt_edge[p].expect("active point"),
                    anchor: p,
                    after,
                    tri_fwd: self.chord_tri(kept_chords[t + 1]),
                    tri_bwd: self.chord_tri(kept_chords[t]),
                });
            }
            return Some(SlidePlan {
                strand,
                a_pt,
                b_pt,
                doomed,
                route,
                tau_x: self.chord_tri(kept_chords[0]),
                tau_y: self.chord_tri(kept_chords[k - 1]),
            });
        }
        None
    }

    /// Reroutes the slid strand across the marked vertex along the kept side
    /// of the bigon, retiring the slid-off points.
    fn apply_slide(&mut self, plan: &SlidePlan) {
        let mut n_ids = Vec::with_capacity(plan.route.len());
        for step in &plan.route {
            let id = self.pt_edge.len();
            self.pt_edge.push(Some(step.edge));
            let ord = &mut self.order[step.edge];
            let pos = ord
                .iter()
                .position(|&x| x == step.anchor)
                .expect("route anchor stays active");
            ord.insert(if step.after { pos + 1 } else { pos }, id);
            n_ids.push(id);
        }

        let path = self.strands[plan.strand].path.clone();
        let len = path.len();
        let m = plan.doomed.len();
        let ia = path
            .iter()
            .position(|&(p, _)| p == plan.a_pt)
            .expect("outside anchor on slid strand");
        let adj = if m > 0 { plan.doomed[m - 1] } else { plan.b_pt };
        let fwd = if path[(ia + 1) % len].0 == adj {
            true
        } else {
            assert_eq!(
                path[(ia + len - 1) % len].0,
                adj,
                "the slid run neighbours its outside anchor"
            );
            false
        };
        let (start, head_tri) = if fwd {
            (ia, plan.tau_x)
        } else {
            ((ia + len - (m + 1)) % len, plan.tau_y)
        };
        let mut new_path = Vec::with_capacity(len - m + n_ids.len());
        new_path.push((path[start].0, head_tri));
        if fwd {
            for (t, &nid) in n_ids.iter().enumerate() {
                new_path.push((nid, plan.route[t].tri_fwd));
            }
        } else {
            for (t, &nid) in n_ids.iter().enumerate().rev() {
                new_path.push((nid, plan.route[t].tri_bwd));
            }
        }
        let mut i = (start + m + 1) % len;
        assert_eq!(
            path[i].0,
            if fwd { plan.b_pt } else { plan.a_pt },
            "the far anchor closes the slid run"
        );
        while i != start {
            new_path.push(path[i]);
            i = (i + 1) % len;
        }
        self.strands[plan.strand].path = new_path;

        for &q in &plan.doomed {
            let e = self.pt_edge[q].take().expect("doomed point was active");
            self.order[e].retain(|&x| x != q);
        }
    }

    /// Removes same-side returns: chords whose two endpoints lie on one edge.
    ///
    /// Always pulls a pocket with the fewest points strictly between its
    /// endpoints; such a pocket contains only strands that cross it, so the
    /// pull is an isotopy and never increases crossings. The terminal
    /// arrangement crosses every edge in corner arcs only, which makes its
    /// counts canonical normal coordinates.
    pub fn tighten(&mut self) {
        loop {
            let positions = self.positions();
            let mut best: Option<(usize, Chord)> = None;
            for (si, st) in self.strands.iter().enumerate() {
                let len = st.path.len();
                for k in 0..len {
                    let a = st.path[k].0;
                    let b = st.path[(k + 1) % len].0;
                    if self.pt_edge[a] != self.pt_edge[b] {
                        continue;
                    }
                    let gap = positions[&a].abs_diff(positions[&b]) - 1;
                    if best.map_or(true, |(g, _)| gap < g) {
                        best = Some((gap, Chord { strand: si, k }));
                    }
                }
            }
            match best {
                Some((_, c)) => self.pull(c),
                None => break,
            }
        }
    }

    /// Pulls one same-side pocket straight, deleting its two endpoints.
    fn pull(&mut self, c: Chord) {
        let len = self.strands[c.strand].path.len();
        assert!(len >= 4, "a same-side pocket sits on a strand with other chords");
        let k = c.k;
        let kn = (k + 1) % len;
        let alpha = self.strands[c.strand].path[k].0;
        let beta = self.strands[c.strand].path[kn].0;
        let e = self.pt_edge[alpha].expect("active point");
        assert_eq!(self.pt_edge[beta], Some(e), "pocket chord returns to its edge");
        let prev = (k + len - 1) % len;
        assert_eq!(
            self.strands[c.strand].path[prev].1,
            self.strands[c.strand].path[kn].1,
            "pocket neighbours approach through the opposite triangle"
        );
        let path = &mut self.strands[c.strand].path;
        let mut np = Vec::with_capacity(len - 2);
        for (i, &entry) in path.iter().enumerate() {
            if i != k && i != kn {
                np.push(entry);
            }
        }
        *path = np;
        for &q in &[alpha, beta] {
            self.pt_edge[q] = None;
            self.order[e].retain(|&x| x != q);
        }
    }

    /// Replaces every crossing of the label-0 strand by a detour around the
    /// whole strand: the annulus surgery of a Dehn twist.
    ///
    /// Each detour is drawn as a spiral band across the core's annulus
    /// neighbourhood: depths are measured from one fixed side of the core,
    /// every band shifts one depth per crossing site it passes, and a strand
    /// traverses its band starting from the side it arrives on. The two signs
    /// spiral opposite ways and are mutually inverse.
    fn twist_label_zero(&mut self, positive: bool) -> Result<()> {
        let tri = self.tri;
        let cores: Vec<usize> = self
            .strands
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == 0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(cores.len(), 1, "the twisting core is a single closed strand");
        let cs = cores[0];
        let cpath = self.strands[cs].path.clone();
        let n = cpath.len();
        let cross = self.crossings();

        // Global crossing order: by core chord, then by position along it.
        // Each event also records whether the crossing strand arrives on the
        // core's right side (its approach endpoint sits inside the core
        // chord's boundary interval), which fixes the direction it traverses
        // its detour.
        let mut event_of_pair: HashMap<usize, usize> = HashMap::new();
        let mut events: Vec<(usize, bool)> = Vec::new();
        let mut prefix = vec![0usize; n + 1];
        for j in 0..n {
            let c = Chord { strand: cs, k: j };
            if let Some(list) = cross.along.get(&c) {
                let (rank, circ) = self.boundary_ranks(cpath[j].1);
                let (cx, cy) = self.chord_ends(c);
                let rel = |x: usize| (rank[&x] + circ - rank[&cx]) % circ;
                let end = rel(cy);
                for &pi in list {
                    let (pa, pb) = cross.pairs[pi];
                    let other = if pa == c { pb } else { pa };
                    let (la, lb) = self.chord_ends(other);
                    let ina = rel(la) > 0 && rel(la) < end;
                    let inb = rel(lb) > 0 && rel(lb) < end;
                    assert!(ina != inb, "crossing chords interleave exactly once");
                    event_of_pair.insert(pi, events.len());
                    events.push((j, ina));
                }
            }
            prefix[j + 1] = events.len();
        }
        let r = events.len();
        assert_eq!(r, cross.pairs.len(), "all crossings involve the twisting core");
        if r == 0 {
            for &(p, _) in &cpath {
                let e = self.pt_edge[p].take().expect("core point active");
                self.order[e].retain(|&x| x != p);
            }
            self.strands.remove(cs);
            return Ok(());
        }

        let active: u64 = self.order.iter().map(|o| o.len() as u64).sum();
        let added = (r as u64)
            .checked_mul(n as u64)
            .ok_or_else(budget_error)?;
        if active + added > POINT_BUDGET {
            return Err(budget_error());
        }

        // One detour point per crossing and core section.
        let base = self.pt_edge.len();
        let upt = |x: usize, sec: usize| base + x * n + sec;
        for _x in 0..r {
            for entry in &cpath {
                let e = self.pt_edge[entry.0].expect("core point active");
                self.pt_edge.push(Some(e));
            }
        }

        // At each core section the detours stack at distinct depths, forming
        // a permutation of 0..r. Depths are measured from the core's right
        // side; a band advances one depth per crossing site it passes, so its
        // depth at a section counts the sites between its own crossing and
        // that section, in the spiralling direction of the twist.
        let sec_of_core_pt: HashMap<usize, usize> =
            cpath.iter().enumerate().map(|(k, &(p, _))| (p, k)).collect();
        let mut stacks: Vec<Vec<usize>> = Vec::with_capacity(n);
        for k in 0..n {
            let s_k = prefix[k];
            let mut slots: Vec<Option<usize>> = vec![None; r];
            for x in 0..r {
                let lvl = if positive {
                    (s_k + r - 1 - x) % r
                } else {
                    (x + r - s_k) % r
                };
                assert!(slots[lvl].is_none(), "levels at a section form a permutation");
                slots[lvl] = Some(upt(x, k));
            }
            let mut ids: Vec<usize> = slots.into_iter().map(Option::unwrap).collect();
            // The core enters `cpath[k].1` through its section edge; along
            // that side's local direction, depth from the right decreases, so
            // the edge-forward order ascends in depth exactly when the side
            // runs against the edge.
            let t_in = cpath[k].1;
            let e_k = self.pt_edge[cpath[k].0].expect("core point active");
            let s_in = side_of(tri, t_in, e_k);
            if tri.side_is_forward(SideRef::new(t_in, s_in)) {
                ids.reverse();
            }
            stacks.push(ids);
        }
        for e in 0..tri.num_edges() {
            let old = std::mem::take(&mut self.order[e]);
            let mut fresh = Vec::with_capacity(old.len());
            for p in old {
                match sec_of_core_pt.get(&p) {
                    Some(&k) => fresh.extend(stacks[k].iter().copied()),
                    None => fresh.push(p),
                }
            }
            self.order[e] = fresh;
        }

        // Splice each crossing's detour into its strand: a full trip around
        // the core. A band is one spiral whichever way it is walked, so the
        // strand traverses it starting from the side it arrives on: arriving
        // on the right, a positive twist's spiral leads forward along the
        // core and a negative one leads backward; arriving on the left, the
        // reverse.
        for si in 0..self.strands.len() {
            if si == cs {
                continue;
            }
            let old = self.strands[si].path.clone();
            let mut fresh = Vec::new();
            for (kk, &(pt, tau)) in old.iter().enumerate() {
                fresh.push((pt, tau));
                let c = Chord { strand: si, k: kk };
                if let Some(list) = cross.along.get(&c) {
                    for &pi in list {
                        let x = event_of_pair[&pi];
                        let (j, arrives_on_right) = events[x];
                        if arrives_on_right == positive {
                            for step in 1..=n {
                                let sec = (j + step) % n;
                                fresh.push((upt(x, sec), cpath[sec].1));
                            }
                        } else {
                            for step in 0..n {
                                let sec = (j + n - step) % n;
                                fresh.push((upt(x, sec), cpath[(sec + n - 1) % n].1));
                            }
                        }
                    }
                }
            }
            self.strands[si].path = fresh;
        }

        for &(p, _) in &cpath {
            let e = self.pt_edge[p].take().expect("core point active");
            debug_assert!(!self.order[e].contains(&p));
        }
        self.strands.remove(cs);

        // The surgery must leave the remaining strands mutually parallel.
        let check = self.crossings();
        assert!(check.pairs.is_empty(), "twisted strands stay parallel");
        Ok(())
    }

    /// Reads one label back off as a normal curve. Requires the label's
    /// strands to cross every edge in corner arcs, i.e. a tightened state.
    pub fn extract(&self, label: usize) -> Result<NormalCurve> {
        let tri = self.tri;
        let mut counts = vec![[0u64; 3]; tri.num_triangles()];
        for st in self.strands.iter().filter(|s| s.label == label) {
            let len = st.path.len();
            for k in 0..len {
                let (a, t) = st.path[k];
                let b = st.path[(k + 1) % len].0;
                let ea = self.pt_edge[a].expect("active point");
                let eb = self.pt_edge[b].expect("active point");
                let (sa, sb) = (side_of(tri, t, ea), side_of(tri, t, eb));
                assert_ne!(sa, sb, "corner reading requires a tightened arrangement");
                counts[t][3 - sa - sb] += 1;
            }
        }
        NormalCurve::from_corner_counts(
            tri,
            counts
                .into_iter()
                .map(|row| row.map(BigUint::from))
                .collect(),
        )
    }
}

/// The image of `target` under the Dehn twist along `core`, computed by
/// annulus surgery on the drawn overlay and returned in normal form.
///
/// The two signs give mutually inverse twists; `positive` fixes one
/// handedness consistently across all surfaces and cores.
pub fn dehn_twist(
    tri: &Triangulation,
    core: &NormalCurve,
    target: &NormalCurve,
    positive: bool,
) -> Result<NormalCurve> {
    core.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET)?;
    if target.surface() != tri.surface() {
        return Err(Error::InvalidCurve(
            "system drawn on a different surface".into(),
        ));
    }
    if target.is_zero() {
        return Ok(target.clone());
    }
    let mut arr = Arrangement::overlay(tri, &[core, target])?;
    arr.twist_label_zero(positive)?;
    arr.tighten();
    arr.extract(1)
}

/// Minimal position of a pair: the geometric intersection number together
/// with the census of complementary regions.
pub fn minimal_pair(
    tri: &Triangulation,
    a: &NormalCurve,
    b: &NormalCurve,
) -> Result<(u64, RegionCensus)> {
    let mut arr = Arrangement::overlay(tri, &[a, b])?;
    arr.minimize();
    Ok((arr.total_crossings(), arr.census()))
}

/// The union of two crossing curves in minimal position, reduced to its
/// four-valent crossing map.
///
/// Dart `d` leaves vertex `d / 4` through counterclockwise rotation slot
/// `d % 4`; strand labels alternate around every vertex.
#[derive(Debug, Clone)]
pub struct PairGraph {
    /// For each dart, the dart met by following its strand to the next
    /// crossing (a fixed-point-free involution).
    pub dart_partner: Vec<usize>,
    /// Strand label per dart: 0 for the first curve, 1 for the second.
    pub dart_label: Vec<u8>,
}

impl PairGraph {
    /// Number of crossings; equals the geometric intersection number.
    pub fn vertices(&self) -> usize {
        self.dart_label.len() / 4
    }

    /// Number of strand edges between crossings.
    pub fn edges(&self) -> usize {
        self.dart_label.len() / 2
    }
}

/// Realizes `c ∪ d` in minimal position as an embedded four-valent graph.
pub fn embed_pair(tri: &Triangulation, c: &NormalCurve, d: &NormalCurve) -> Result<PairGraph> {
    if isotopic(tri, c, d)? {
        return Err(Error::EqualCurves);
    }
    let mut arr = Arrangement::overlay(tri, &[c, d])?;
    arr.minimize();
    if arr.total_crossings() == 0 {
        return Err(Error::DisjointPair);
    }
    let cell = arr.cellulation();
    let nvp = cell.nv + cell.np;
    let mut germ_id: HashMap<usize, usize> = HashMap::new();
    for x in 0..cell.crossings {
        let ring = &cell.rot[nvp + x];
        assert_eq!(ring.len(), 4, "crossings are four-valent");
        for (s, &dd) in ring.iter().enumerate() {
            germ_id.insert(dd, 4 * x + s);
        }
    }
    let chord_label = |dart: usize| -> u8 {
        match cell.darts[dart].kind {
            DartKind::Seg { chord } => {
                let l = arr.strands[chord.strand].label;
                assert!(l < 2, "a pair graph has two labels");
                l as u8
            }
            DartKind::Arc => unreachable!("crossing germs are strand segments"),
        }
    };
    let n = 4 * cell.crossings;
    let mut dart_partner = vec![usize::MAX; n];
    let mut dart_label = vec![0u8; n];
    for x in 0..cell.crossings {
        for s in 0..4 {
            let g = cell.rot[nvp + x][s];
            dart_label[4 * x + s] = chord_label(g);
            // Follow the strand, crossing straight through edge points.
            let mut dd = g;
            loop {
                let node = cell.darts[dd].to;
                if node >= nvp {
                    dart_partner[4 * x + s] = germ_id[&cell.darts[dd].rev];
                    break;
                }
                assert!(node >= cell.nv, "strands meet vertices only at edge points");
                let ring = &cell.rot[node];
                let i = ring
                    .iter()
                    .position(|&q| q == cell.darts[dd].rev)
                    .expect("arriving germ sits in the point rotation");
                assert!(i == 1 || i == 3, "segments reach a point through its chord germs");
                dd = ring[(i + 2) % 4];
            }
        }
    }
    for g in 0..n {
        assert_ne!(dart_partner[g], g, "strand edges join distinct germs");
        assert_eq!(dart_partner[dart_partner[g]], g, "strand partnering is an involution");
        assert_eq!(dart_label[g], dart_label[dart_partner[g]], "strand edges keep one label");
        assert_ne!(
            dart_label[g],
            dart_label[g / 4 * 4 + (g + 1) % 4],
            "labels alternate around each crossing"
        );
    }
    Ok(PairGraph { dart_partner, dart_label })
}

/// Geometric intersection number of two systems.
pub fn intersection_number(tri: &Triangulation, a: &NormalCurve, b: &NormalCurve) -> Result<u64> {
    let mut arr = Arrangement::overlay(tri, &[a, b])?;
    arr.minimize();
    Ok(arr.total_crossings())
}

/// Whether two essential simple closed curves are isotopic on the surface.
///
/// On punctured surfaces normal coordinates are a complete invariant. On
/// closed surfaces the marked vertex is transparent: after minimizing, the
/// curves are isotopic exactly when they cobound an annulus (which may
/// contain the marked vertex).
pub fn isotopic(tri: &Triangulation, a: &NormalCurve, b: &NormalCurve) -> Result<bool> {
    if a == b {
        return Ok(true);
    }
    a.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET)?;
    b.validate_essential_scc(tri, DEFAULT_TRACE_BUDGET)?;
    if tri.marked_vertex().is_none() {
        return Ok(false);
    }
    let (i, census) = minimal_pair(tri, a, b)?;
    if i != 0 {
        return Ok(false);
    }
    Ok(census.regions.iter().any(|r| {
        r.euler_filled == 0
            && r.punctures.is_empty()
            && r.walks.len() == 2
            && r.walks.iter().all(|w| w.corners == 0)
            && r.walks[0].arc_labels.len() == 1
            && r.walks[1].arc_labels.len() == 1
            && r.walks[0].arc_labels[0] != r.walks[1].arc_labels[0]
    }))
}

struct CrossingData {
    /// Crossing chord pairs in triangle-major discovery order.
    pairs: Vec<(Chord, Chord)>,
    /// For each chord, its crossings ordered along the chord from its start,
    /// as indices into `pairs`.
    along: HashMap<Chord, Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DartKind {
    Arc,
    Seg { chord: Chord },
}

#[derive(Debug, Clone, Copy)]
struct Dart {
    from: usize,
    to: usize,
    rev: usize,
    kind: DartKind,
}

#[derive(Debug, Default)]
struct RegionData {
    faces: usize,
    arcs: usize,
    vertices: Vec<usize>,
    walks: Vec<usize>,
}

struct WalkData {
    darts: Vec<usize>,
    corners: u64,
    labels: Vec<usize>,
}

/// The cell structure cut out by the drawn curves: nodes are vertices, drawn
/// points, and crossings; 1-cells are edge arcs and chord segments; faces
/// merge into complementary regions across the arcs.
struct Cellulation {
    nv: usize,
    np: usize,
    pts: Vec<usize>,
    crossings: usize,
    darts: Vec<Dart>,
    rot: Vec<Vec<usize>>,
    face_of: Vec<usize>,
    region_of_face: Vec<usize>,
    regions: Vec<RegionData>,
    walks: Vec<WalkData>,
}

impl Cellulation {
    fn node_point(&self, n: usize) -> Option<usize> {
        (n >= self.nv && n < self.nv + self.np).then(|| self.pts[n - self.nv])
    }

    fn is_crossing_node(&self, n: usize) -> bool {
        n >= self.nv + self.np
    }
}

fn euler_filled(r: &RegionData) -> i64 {
    r.vertices.len() as i64 - r.arcs as i64 + r.faces as i64
}

fn seg_forward(cell: &Cellulation, d: usize) -> bool {
    // Segment darts are created in forward/backward pairs; the forward dart
    // of each pair has the smaller id.
    d < cell.darts[d].rev
}

struct SlidePlan {
    strand: usize,
    a_pt: usize,
    b_pt: usize,
    doomed: Vec<usize>,
    route: Vec<RouteStep>,
    tau_x: usize,
    tau_y: usize,
}

struct RouteStep {
    edge: usize,
    anchor: usize,
    after: bool,
    tri_fwd: usize,
    tri_bwd: usize,
}

fn add_dart_pair(
    darts: &mut Vec<Dart>,
    from: usize,
    to: usize,
    kf: DartKind,
    kb: DartKind,
) -> (usize, usize) {
    let a = darts.len();
    darts.push(Dart {
        from,
        to,
        rev: a + 1,
        kind: kf,
    });
    darts.push(Dart {
        from: to,
        to: from,
        rev: a,
        kind: kb,
    });
    (a, a + 1)
}

/// Whether chords `a` and `b` cross: their endpoints interleave on the
/// triangle's boundary circle.
fn interleaved(
    rank: &HashMap<usize, usize>,
    n: usize,
    a: (usize, usize),
    b: (usize, usize),
) -> bool {
    let rel = |x: usize| (rank[&x] + n - rank[&a.0]) % n;
    let end = rel(a.1);
    let inside = |x: usize| {
        let r = rel(x);
        r > 0 && r < end
    };
    inside(b.0) != inside(b.1)
}

/// Rank key ordering crossings along chord `a`: the circular position,
/// measured from `a`'s start, of the endpoint of `b` inside `a`'s interval.
fn inside_key(
    rank: &HashMap<usize, usize>,
    n: usize,
    a: (usize, usize),
    b: (usize, usize),
) -> usize {
    let rel = |x: usize| (rank[&x] + n - rank[&a.0]) % n;
    let end = rel(a.1);
    let (r0, r1) = (rel(b.0), rel(b.1));
    let in0 = r0 > 0 && r0 < end;
    let in1 = r1 > 0 && r1 < end;
    assert!(in0 != in1, "crossing chords interleave exactly once");
    if in0 {
        r0
    } else {
        r1
    }
}

fn side_of(tri: &Triangulation, t: usize, e: usize) -> usize {
    (0..3)
        .find(|&s| tri.side_edge(SideRef::new(t, s)) == e)
        .expect("triangle carries the edge")
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while c != r {
            let nx = self.parent[c];
            self.parent[c] = r;
            c = nx;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::RegionKind;
    use crate::curve::enumerate_small_curves;
    use crate::surface::Surface;

    fn tri(g: u32, m: u32) -> Triangulation {
        Triangulation::canonical(Surface::new(g, m).unwrap())
    }

    fn inter(t: &Triangulation, a: &NormalCurve, b: &NormalCurve) -> u64 {
        intersection_number(t, a, b).unwrap()
    }

    /// First pair from the pool with the requested intersection number.
    fn pair_with(
        t: &Triangulation,
        curves: &[NormalCurve],
        want: u64,
    ) -> Option<(NormalCurve, NormalCurve)> {
        for a in curves {
            for b in curves {
                if (want > 0 || a != b) && inter(t, a, b) == want {
                    return Some((a.clone(), b.clone()));
                }
            }
        }
        None
    }

    #[test]
    fn embedded_pair_graphs_match_intersection_numbers() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves: Vec<NormalCurve> = enumerate_small_curves(&t, 3, 10);
            let mut crossing_pairs = 0;
            for a in &curves {
                for b in &curves {
                    let i = inter(&t, a, b);
                    match embed_pair(&t, a, b) {
                        Ok(graph) => {
                            crossing_pairs += 1;
                            assert_eq!(graph.vertices() as u64, i);
                            assert_eq!(graph.dart_label.len(), 4 * graph.vertices());
                            assert_eq!(graph.edges(), 2 * graph.vertices());
                        }
                        Err(Error::DisjointPair) => assert_eq!(i, 0),
                        Err(Error::EqualCurves) => {
                            assert!(isotopic(&t, a, b).unwrap());
                        }
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
            assert!(crossing_pairs > 0, "the pool contains crossing pairs");
        }
    }

    #[test]
    fn empty_overlay_census_is_the_whole_surface() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let arr = Arrangement::overlay(&t, &[]).unwrap();
            let census = arr.census();
            assert_eq!(census.crossings, BigUint::from(0u32));
            assert_eq!(census.regions.len(), 1);
            let r = &census.regions[0];
            assert_eq!(r.euler_filled, 2 - 2 * i64::from(g));
            assert_eq!(r.punctures.len(), m as usize);
            assert_eq!(r.contains_marked, m == 0);
            assert!(r.walks.is_empty());
        }
    }

    #[test]
    fn single_curve_censuses_are_crossing_free() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            for c in enumerate_small_curves(&t, 2, 8) {
                let arr = Arrangement::overlay(&t, &[&c]).unwrap();
                let census = arr.census();
                assert_eq!(census.crossings, BigUint::from(0u32));
                let walk_count: usize = census.regions.iter().map(|r| r.walks.len()).sum();
                assert_eq!(walk_count, 2, "a simple closed curve has two sides");
                for r in &census.regions {
                    for w in &r.walks {
                        assert_eq!(w.corners, 0);
                        assert_eq!(w.arc_labels, vec![0]);
                    }
                }
                if g == 0 {
                    assert_eq!(census.regions.len(), 2, "every curve on a sphere separates");
                }
                assert_eq!(arr.extract(0).unwrap(), c);
            }
        }
    }

    #[test]
    fn pair_overlays_roundtrip_and_validate() {
        for (g, m) in [(0u32, 5u32), (1, 2)] {
            let t = tri(g, m);
            let curves = enumerate_small_curves(&t, 2, 6);
            for a in &curves {
                for b in &curves {
                    let arr = Arrangement::overlay(&t, &[a, b]).unwrap();
                    let census = arr.census();
                    for r in &census.regions {
                        for w in &r.walks {
                            assert_eq!(w.corners % 2, 0, "two-label walks alternate labels");
                        }
                    }
                    assert_eq!(arr.extract(0).unwrap(), *a);
                    assert_eq!(arr.extract(1).unwrap(), *b);
                }
            }
        }
    }

    #[test]
    fn minimal_intersection_is_symmetric() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = enumerate_small_curves(&t, 2, 6);
            for a in &curves {
                assert_eq!(inter(&t, a, a), 0, "a system never crosses itself");
                for b in &curves {
                    assert_eq!(inter(&t, a, b), inter(&t, b, a));
                }
            }
        }
    }

    #[test]
    fn minimal_square_pairs_on_the_five_punctured_sphere() {
        let t = tri(0, 5);
        let curves = enumerate_small_curves(&t, 2, 20);
        let mut found = 0;
        for a in &curves {
            for b in &curves {
                let (i, census) = minimal_pair(&t, a, b).unwrap();
                if i != 2 {
                    continue;
                }
                found += 1;
                assert_eq!(census.regions.len(), 4);
                let mut bigons = 0;
                let mut essential = 0;
                for r in &census.regions {
                    match r.kind() {
                        RegionKind::PuncturedPolygon { sides: 2 } => bigons += 1,
                        RegionKind::Essential => {
                            essential += 1;
                            assert_eq!(r.euler_filled, 1);
                            assert_eq!(r.punctures.len(), 2);
                            assert_eq!(r.walks.len(), 1);
                            assert_eq!(r.walks[0].corners, 2);
                        }
                        other => panic!("unexpected region {other:?} in a minimal square pair"),
                    }
                }
                assert_eq!((bigons, essential), (3, 1));
            }
        }
        assert!(found > 0, "the pool contains pairs crossing twice");
    }

    #[test]
    fn minimize_erases_removable_crossings() {
        let t = tri(0, 5);
        let curves = enumerate_small_curves(&t, 2, 14);
        let (a, b) = pair_with(&t, &curves, 2).expect("a pair crossing twice");
        let tb = dehn_twist(&t, &a, &b, true).unwrap();
        let t2b = dehn_twist(&t, &a, &tb, true).unwrap();
        let mut excess_seen = false;
        for (x, y) in [(&tb, &b), (&t2b, &b), (&t2b, &tb), (&tb, &a)] {
            let mut arr = Arrangement::overlay(&t, &[x, y]).unwrap();
            let raw = arr.total_crossings();
            arr.minimize();
            let min = arr.total_crossings();
            assert!(min <= raw);
            assert_eq!(min, inter(&t, x, y));
            excess_seen |= raw > min;
            let census = arr.census();
            assert!(
                !census
                    .regions
                    .iter()
                    .any(|r| r.kind() == RegionKind::Polygon { sides: 2 }),
                "minimal position leaves no empty bigons"
            );
        }
        assert!(excess_seen, "stacked normal overlays carry removable crossings");
    }

    #[test]
    fn twists_fix_their_core_and_disjoint_systems() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = enumerate_small_curves(&t, 2, 8);
            for a in &curves {
                assert_eq!(dehn_twist(&t, a, a, true).unwrap(), *a);
            }
            'outer: for a in &curves {
                for b in &curves {
                    if a != b && inter(&t, a, b) == 0 {
                        assert_eq!(dehn_twist(&t, a, b, true).unwrap(), *b);
                        assert_eq!(dehn_twist(&t, a, b, false).unwrap(), *b);
                        break 'outer;
                    }
                }
            }
        }
    }

    #[test]
    fn opposite_twists_undo_each_other() {
        for (g, m) in [(0u32, 5u32), (1, 2), (2, 0)] {
            let t = tri(g, m);
            let curves = enumerate_small_curves(&t, 2, 10);
            let (a, b) = curves
                .iter()
                .flat_map(|a| curves.iter().map(move |b| (a, b)))
                .find(|(a, b)| inter(&t, a, b) > 0)
                .expect("a crossing pair");
            let plus = dehn_twist(&t, a, b, true).unwrap();
            assert_ne!(&plus, b, "a twist along a crossing core moves the curve");
            assert_eq!(&dehn_twist(&t, a, &plus, false).unwrap(), b);
            let minus = dehn_twist(&t, a, b, false).unwrap();
            assert_eq!(&dehn_twist(&t, a, &minus, true).unwrap(), b);
            assert_eq!(
                inter(&t, a, &plus),
                inter(&t, a, b),
                "twisting along the core preserves crossings with it"
            );
        }
    }

    #[test]
    fn twist_powers_scale_intersections_quadratically() {
        let t = tri(0, 5);
        let curves = enumerate_small_curves(&t, 2, 20);
        let (a, b) = pair_with(&t, &curves, 2).expect("a pair crossing twice");
        let t1 = dehn_twist(&t, &a, &b, true).unwrap();
        assert_eq!(inter(&t, &t1, &b), 4);
        let t2 = dehn_twist(&t, &a, &t1, true).unwrap();
        assert_eq!(inter(&t, &t2, &b), 8);
        assert_eq!(inter(&t, &t2, &t1), 4);
        let n1 = dehn_twist(&t, &a, &b, false).unwrap();
        assert_eq!(inter(&t, &n1, &b), 4);
        assert_ne!(n1, t1, "the two twist directions differ on a crossing pair");
    }

    #[test]
    fn isotopy_matches_normal_forms_on_punctured_surfaces() {
        let t = tri(0, 5);
        let curves = enumerate_small_curves(&t, 2, 10);
        for a in &curves {
            for b in &curves {
                assert_eq!(isotopic(&t, a, b).unwrap(), a == b);
            }
        }
    }

    #[test]
    fn isotopy_on_the_closed_surface() {
        let t = tri(2, 0);
        let curves = enumerate_small_curves(&t, 2, 8);
        for a in &curves {
            assert!(isotopic(&t, a, a).unwrap());
            for b in &curves {
                if inter(&t, a, b) > 0 {
                    assert!(!isotopic(&t, a, b).unwrap());
                }
            }
        }
    }
}
