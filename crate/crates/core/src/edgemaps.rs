//! The four boundary edge maps of the piece map, their functional digraphs,
//! periodic orbits, corner pairing and initial points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decomposition::{PieceMap, SymbolicLength};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{Arc, Digraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }

    /// Corner at the start (offset 0) or end (full length) of this side.
    /// Vertical sides are measured downward, horizontal ones rightward.
    pub fn corner_at(self, at_start: bool) -> Corner {
        match (self, at_start) {
            (Side::Left, true) | (Side::Top, true) => Corner::TopLeft,
            (Side::Left, false) | (Side::Bottom, true) => Corner::BottomLeft,
            (Side::Right, true) | (Side::Top, false) => Corner::TopRight,
            (Side::Right, false) | (Side::Bottom, false) => Corner::BottomRight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::TopLeft, Corner::TopRight, Corner::BottomLeft, Corner::BottomRight];

    pub fn vertical_side(self) -> Side {
        match self {
            Corner::TopLeft | Corner::BottomLeft => Side::Left,
            Corner::TopRight | Corner::BottomRight => Side::Right,
        }
    }

    pub fn horizontal_side(self) -> Side {
        match self {
            Corner::TopLeft | Corner::TopRight => Side::Top,
            Corner::BottomLeft | Corner::BottomRight => Side::Bottom,
        }
    }

    /// Whether the corner sits at offset 0 of the given side.
    pub fn at_start_of(self, side: Side) -> bool {
        match side {
            Side::Left | Side::Right => matches!(self, Corner::TopLeft | Corner::TopRight),
            Side::Top | Side::Bottom => matches!(self, Corner::TopLeft | Corner::BottomLeft),
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Corner::TopLeft => "TL",
            Corner::TopRight => "TR",
            Corner::BottomLeft => "BL",
            Corner::BottomRight => "BR",
        }
    }
}

/// f_L, f_R, f_T⁻¹ and f_B⁻¹. All four contract their edges by λ⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MapKind {
    Left,
    Right,
    Top,
    Bottom,
}

impl MapKind {
    pub const ALL: [MapKind; 4] = [MapKind::Left, MapKind::Right, MapKind::Top, MapKind::Bottom];

    pub fn side(self) -> Side {
        match self {
            MapKind::Left => Side::Left,
            MapKind::Right => Side::Right,
            MapKind::Top => Side::Top,
            MapKind::Bottom => Side::Bottom,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Strips of these maps run into attracting ends.
    pub fn is_attracting(self) -> bool {
        matches!(self, MapKind::Left | MapKind::Right)
    }

    /// Map acting on the other side through a shared corner.
    pub fn corner_partner(self, corner: Corner) -> MapKind {
        match self {
            MapKind::Left | MapKind::Right => match corner.horizontal_side() {
                Side::Top => MapKind::Top,
                _ => MapKind::Bottom,
            },
            MapKind::Top | MapKind::Bottom => match corner.vertical_side() {
                Side::Left => MapKind::Left,
                _ => MapKind::Right,
            },
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::Left => "f_L",
            MapKind::Right => "f_R",
            MapKind::Top => "f_T^-1",
            MapKind::Bottom => "f_B^-1",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoordinate {
    pub rect: usize,
    pub side: Side,
    pub offset: f64,
    pub symbolic_offset: Option<SymbolicLength>,
}

/// Restriction of the extreme strip's branch to a whole rectangle edge:
/// `offset ↦ offset_in_target + offset / λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBranch {
    pub rect: usize,
    pub target: usize,
    pub offset: f64,
    pub offset_symbolic: SymbolicLength,
    /// Edge start lands on the target edge's start.
    pub lands_first: bool,
    /// Edge end lands on the target edge's end.
    pub lands_last: bool,
    pub piece_branch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMap {
    pub kind: MapKind,
    pub lambda: f64,
    pub edge_lengths: Vec<f64>,
    /// Edge lengths as strip-size combinations (row k of M for heights,
    /// column k for widths).
    pub edge_lengths_symbolic: Vec<SymbolicLength>,
    pub branches: Vec<EdgeBranch>,
}

impl EdgeMap {
    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn successor(&self, k: usize) -> usize {
        self.branches[k].target
    }

    pub fn apply(&self, k: usize, offset: f64) -> (usize, f64) {
        let b = &self.branches[k];
        (b.target, b.offset + offset / self.lambda)
    }

    pub fn slope(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn digraph(&self) -> Digraph {
        Digraph {
            vertex_count: self.n(),
            arcs: self
                .branches
                .iter()
                .map(|b| Arc {
                    from: b.rect,
                    to: b.target,
                    multiplicity: 1,
                })
                .collect(),
        }
    }

    pub fn is_functional(&self) -> bool {
        let g = self.digraph();
        (0..self.n()).all(|v| g.arcs.iter().filter(|a| a.from == v).count() == 1)
    }

    /// Cycles of the functional digraph, each starting at its smallest vertex,
    /// ordered by that vertex.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut on_cycle = vec![false; n];
        for v in 0..n {
            // after n steps every walk sits on a cycle
            let mut w = v;
            for _ in 0..n {
                w = self.successor(w);
            }
            let start = w;
            loop {
                on_cycle[w] = true;
                w = self.successor(w);
                if w == start {
                    break;
                }
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for v in 0..n {
            if !on_cycle[v] || seen[v] {
                continue;
            }
            let mut cyc = vec![v];
            seen[v] = true;
            let mut w = self.successor(v);
            while w != v {
                seen[w] = true;
                cyc.push(w);
                w = self.successor(w);
            }
            out.push(cyc);
        }
        out
    }

    /// Steps each vertex needs to reach a cycle.
    pub fn tails(&self) -> Vec<usize> {
        let n = self.n();
        let mut periodic = vec![false; n];
        for c in self.cycles() {
            for v in c {
                periodic[v] = true;
            }
        }
        (0..n)
            .map(|v| {
                let mut w = v;
                let mut t = 0;
                while !periodic[w] {
                    w = self.successor(w);
                    t += 1;
                }
                t
            })
            .collect()
    }
}

pub fn build_edge_map(p: &PieceMap, kind: MapKind) -> EdgeMap {
    let d = &p.decomposition;
    let n = p.n();
    let branches = (0..n)
        .map(|k| match kind {
            MapKind::Left | MapKind::Right => {
                let slots = d.vertical_slot_count(k);
                let slot = if kind == MapKind::Left { 0 } else { slots - 1 };
                let bi = p.vertical_branch[k][slot];
                let b = &p.branches[bi];
                EdgeBranch {
                    rect: k,
                    target: b.target_rect,
                    offset: b.y_offset,
                    offset_symbolic: b.y_offset_symbolic.clone(),
                    lands_first: b.target_slot == 0,
                    lands_last: b.target_slot + 1 == d.horizontal_slot_count(b.target_rect),
                    piece_branch: bi,
                }
            }
            MapKind::Top | MapKind::Bottom => {
                let slots = d.horizontal_slot_count(k);
                let slot = if kind == MapKind::Top { 0 } else { slots - 1 };
                let bi = p.horizontal_branch[k][slot];
                let b = &p.branches[bi];
                EdgeBranch {
                    rect: k,
                    target: b.source_rect,
                    offset: b.x_offset,
                    offset_symbolic: b.x_offset_symbolic.clone(),
                    lands_first: b.source_slot == 0,
                    lands_last: b.source_slot + 1 == d.vertical_slot_count(b.source_rect),
                    piece_branch: bi,
                }
            }
        })
        .collect();
    let (edge_lengths, edge_lengths_symbolic) = if kind.side().is_vertical() {
        (
            d.rect_heights.clone(),
            d.horizontal_boundaries.iter().map(|b| b.last().unwrap().clone()).collect(),
        )
    } else {
        (
            d.rect_widths.clone(),
            d.vertical_boundaries.iter().map(|b| b.last().unwrap().clone()).collect(),
        )
    };
    EdgeMap {
        kind,
        lambda: p.lambda(),
        edge_lengths,
        edge_lengths_symbolic,
        branches,
    }
}

/// f_L, f_R, f_T⁻¹, f_B⁻¹ in that order.
pub fn build_edge_maps(p: &PieceMap) -> Vec<EdgeMap> {
    par::map(&MapKind::ALL, |&k| build_edge_map(p, k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitRef {
    pub map: MapKind,
    pub orbit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointRef {
    pub map: MapKind,
    pub orbit: usize,
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub map: MapKind,
    pub location: EdgeCoordinate,
    pub period: usize,
    pub orbit_id: usize,
    /// Position along the orbit in the direction of the edge map.
    pub orbit_position: usize,
    pub is_corner: bool,
    pub corner: Option<Corner>,
    pub corner_partner: Option<PointRef>,
    pub is_initial: bool,
}

/// One periodic orbit; `points[t]` is the t-th iterate of `points[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub map: MapKind,
    pub id: usize,
    pub points: Vec<PeriodicPoint>,
    pub corner: Option<Corner>,
    pub partner: Option<OrbitRef>,
}

impl Orbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn rects(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.location.rect).collect()
    }

    pub fn initial_position(&self) -> Option<usize> {
        self.points.iter().position(|p| p.is_initial)
    }
}

/// Periodic orbits of one edge map, one per digraph cycle, with the fixed
/// point of the composed contraction in closed form.
pub fn periodic_points(e: &EdgeMap) -> Vec<Orbit> {
    let lambda = e.lambda;
    let side = e.kind.side();
    e.cycles()
        .into_iter()
        .enumerate()
        .map(|(id, cyc)| {
            let p = cyc.len();
            let all_first = cyc.iter().all(|&v| e.branches[v].lands_first);
            let all_last = cyc.iter().all(|&v| e.branches[v].lands_last);
            // f^p(x) = x / λ^p + B, accumulated around the cycle
            let mut scale = 1.0;
            let mut shift = 0.0;
            for &v in &cyc {
                scale /= lambda;
                shift = e.branches[v].offset + shift / lambda;
            }
            let start = cyc[0];
            let mut x = if all_first {
                0.0
            } else if all_last {
                e.edge_lengths[start]
            } else {
                shift / (1.0 - scale)
            };
            let corner = if all_first {
                Some(side.corner_at(true))
            } else if all_last {
                Some(side.corner_at(false))
            } else {
                None
            };
            let mut points = Vec::with_capacity(p);
            for (t, &v) in cyc.iter().enumerate() {
                let symbolic_offset = corner.map(|c| {
                    if c.at_start_of(side) {
                        SymbolicLength::zero(e.n(), e.branches[v].offset_symbolic.basis)
                    } else {
                        e.edge_lengths_symbolic[v].clone()
                    }
                });
                points.push(PeriodicPoint {
                    map: e.kind,
                    location: EdgeCoordinate {
                        rect: v,
                        side,
                        offset: x,
                        symbolic_offset,
                    },
                    period: p,
                    orbit_id: id,
                    orbit_position: t,
                    is_corner: corner.is_some(),
                    corner,
                    corner_partner: None,
                    is_initial: false,
                });
                let next = cyc[(t + 1) % p];
                x = match corner {
                    Some(c) if c.at_start_of(side) => 0.0,
                    Some(_) => e.edge_lengths[next],
                    None => e.apply(v, x).1,
                };
            }
            Orbit {
                map: e.kind,
                id,
                points,
                corner,
                partner: None,
            }
        })
        .collect()
}

/// Fixed-point residual |f^p(x) − x| of a periodic point.
pub fn fixed_point_residual(e: &EdgeMap, point: &PeriodicPoint) -> f64 {
    let mut k = point.location.rect;
    let mut x = point.location.offset;
    for _ in 0..point.period {
        let (k2, x2) = e.apply(k, x);
        k = k2;
        x = x2;
    }
    if k != point.location.rect {
        return f64::INFINITY;
    }
    (x - point.location.offset).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMapSystem {
    pub maps: Vec<EdgeMap>,
    pub orbits: Vec<Vec<Orbit>>,
    pub tails: Vec<Vec<usize>>,
}

impl EdgeMapSystem {
    pub fn map(&self, kind: MapKind) -> &EdgeMap {
        &self.maps[kind.index()]
    }

    pub fn orbits_of(&self, kind: MapKind) -> &[Orbit] {
        &self.orbits[kind.index()]
    }

    pub fn orbit(&self, r: OrbitRef) -> &Orbit {
        &self.orbits[r.map.index()][r.orbit]
    }

    pub fn point(&self, r: PointRef) -> &PeriodicPoint {
        &self.orbits[r.map.index()][r.orbit].points[r.position]
    }

    pub fn all_orbits(&self) -> impl Iterator<Item = &Orbit> {
        self.orbits.iter().flatten()
    }

    pub fn max_period(&self) -> usize {
        self.all_orbits().map(|o| o.period()).max().unwrap_or(1)
    }

    pub fn max_tail(&self) -> usize {
        self.tails.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Orbit of `kind` through the given rectangle, if that edge is periodic.
    pub fn orbit_through(&self, kind: MapKind, rect: usize) -> Option<(usize, usize)> {
        self.orbits_of(kind).iter().find_map(|o| {
            o.points
                .iter()
                .position(|p| p.location.rect == rect)
                .map(|pos| (o.id, pos))
        })
    }
}

/// Builds the edge maps and their periodic orbits, links corner partners and
/// picks initial points.
pub fn analyze_edge_maps(p: &PieceMap) -> Result<EdgeMapSystem> {
    let maps = build_edge_maps(p);
    let orbits: Vec<Vec<Orbit>> = par::map(&maps, periodic_points);
    let tails = maps.iter().map(|m| m.tails()).collect();
    let mut sys = EdgeMapSystem { maps, orbits, tails };
    link_corner_partners(&mut sys);
    choose_initial_points(&mut sys)?;
    Ok(sys)
}

fn link_corner_partners(sys: &mut EdgeMapSystem) {
    let mut links = Vec::new();
    for kind in MapKind::ALL {
        for o in sys.orbits_of(kind) {
            let Some(c) = o.corner else { continue };
            let pk = kind.corner_partner(c);
            for (pos, pt) in o.points.iter().enumerate() {
                let found = sys.orbits_of(pk).iter().find_map(|o2| {
                    o2.points
                        .iter()
                        .position(|q| q.corner == Some(c) && q.location.rect == pt.location.rect)
                        .map(|pos2| (o2.id, pos2))
                });
                if let Some((oid, pos2)) = found {
                    links.push((
                        PointRef {
                            map: kind,
                            orbit: o.id,
                            position: pos,
                        },
                        PointRef {
                            map: pk,
                            orbit: oid,
                            position: pos2,
                        },
                    ));
                }
            }
        }
    }
    for (a, b) in links {
        let orbit = &mut sys.orbits[a.map.index()][a.orbit];
        orbit.partner = Some(OrbitRef {
            map: b.map,
            orbit: b.orbit,
        });
        orbit.points[a.position].corner_partner = Some(b);
    }
}

/// Corner duality: every corner orbit of f_L or f_R has a partner orbit of
/// f_T⁻¹ or f_B⁻¹ through the same corners, with the same period.
pub fn check_corner_duality(sys: &EdgeMapSystem) -> Result<()> {
    for kind in [MapKind::Left, MapKind::Right] {
        for o in sys.orbits_of(kind) {
            if o.corner.is_none() {
                continue;
            }
            let partner = o.partner.ok_or_else(|| {
                Error::verification("corner-duality", format!("{kind} corner orbit {} has no partner", o.id))
            })?;
            let q = sys.orbit(partner);
            if q.period() != o.period() {
                return Err(Error::verification(
                    "corner-duality",
                    format!(
                        "{kind} orbit {} has period {}, partner {} orbit {} has period {}",
                        o.id,
                        o.period(),
                        partner.map,
                        partner.orbit,
                        q.period()
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn rotate_to_initial(o: &mut Orbit, start: usize) {
    o.points.rotate_left(start);
    for (t, p) in o.points.iter_mut().enumerate() {
        p.orbit_position = t;
        p.is_initial = t == 0;
    }
}

/// Picks one initial point per orbit (least rectangle, then offset), forcing
/// paired corner orbits to share their initial corner. Orbits are rotated so
/// the initial point comes first.
pub fn choose_initial_points(sys: &mut EdgeMapSystem) -> Result<()> {
    for kind in MapKind::ALL {
        for oid in 0..sys.orbits_of(kind).len() {
            let o = &sys.orbits[kind.index()][oid];
            let inherited = match (kind, o.partner) {
                (MapKind::Top | MapKind::Bottom, Some(pr)) => {
                    let partner = sys.orbit(pr);
                    let init = partner.initial_position().ok_or_else(|| Error::internal("partner has no initial point"))?;
                    let rect = partner.points[init].location.rect;
                    Some(
                        o.points
                            .iter()
                            .position(|p| p.location.rect == rect)
                            .ok_or_else(|| Error::internal("partner initial corner missing from orbit"))?,
                    )
                }
                _ => None,
            };
            let start = inherited.unwrap_or_else(|| {
                (0..o.points.len())
                    .min_by(|&a, &b| {
                        let pa = &o.points[a].location;
                        let pb = &o.points[b].location;
                        pa.rect.cmp(&pb.rect).then(pa.offset.total_cmp(&pb.offset))
                    })
                    .unwrap()
            });
            rotate_to_initial(&mut sys.orbits[kind.index()][oid], start);
        }
    }
    // positions moved, so refresh the point-level partner references
    let mut refs = Vec::new();
    for kind in MapKind::ALL {
        for o in sys.orbits_of(kind) {
            if let Some(pr) = o.partner {
                let q = sys.orbit(pr);
                for (pos, p) in o.points.iter().enumerate() {
                    let pos2 = q
                        .points
                        .iter()
                        .position(|x| x.location.rect == p.location.rect)
                        .ok_or_else(|| Error::internal("partner orbit lost a corner"))?;
                    refs.push((kind, o.id, pos, PointRef { map: pr.map, orbit: pr.orbit, position: pos2 }));
                }
            }
        }
    }
    for (kind, oid, pos, r) in refs {
        sys.orbits[kind.index()][oid].points[pos].corner_partner = Some(r);
    }
    for o in sys.all_orbits() {
        if o.points.iter().filter(|p| p.is_initial).count() != 1 {
            return Err(Error::internal("orbit without a unique initial point"));
        }
        for p in &o.points {
            if let Some(r) = p.corner_partner {
                if sys.point(r).is_initial != p.is_initial {
                    return Err(Error::internal("corner initial points are inconsistent"));
                }
            }
        }
    }
    Ok(())
}

/// Longest tail k plus twice the largest period. Too small once switch
/// windows are taken into account; kept for comparison with [`max_escape_depth`].
pub fn escape_depth_tail_plus_two_periods(sys: &EdgeMapSystem) -> usize {
    sys.max_tail() + 2 * sys.max_period()
}

/// Number of steps after which every boundary point of the extended system
/// lies on a strip. A point reaches the initial edge of its cycle within
/// k + p − 1 steps, is caught by a switch window at most p steps later and
/// needs up to p more steps to land in the strip.
pub fn max_escape_depth(sys: &EdgeMapSystem) -> usize {
    let p = sys.max_period();
    let k = sys.max_tail();
    if p == 1 {
        k + 2
    } else {
        k + 3 * p - 1
    }
}

/// Product of the periods of all cycles of the four edge maps.
pub fn nesting_period(sys: &EdgeMapSystem) -> Result<u64> {
    sys.all_orbits().try_fold(1u64, |acc, o| {
        acc.checked_mul(o.period() as u64)
            .ok_or_else(|| Error::invalid("nesting period overflows 64 bits"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{build_decomposition, corner_selection, piece_map};
    use crate::spectral::{perron_eigendata, IntMatrix, DEFAULT_TOL};

    fn system(m: &IntMatrix, corner: bool) -> EdgeMapSystem {
        let e = perron_eigendata(m, DEFAULT_TOL).unwrap();
        let d = if corner {
            let p = corner_selection(m).unwrap();
            build_decomposition(m, &e, Some(p.sigma), Some(p.tau)).unwrap()
        } else {
            build_decomposition(m, &e, None, None).unwrap()
        };
        analyze_edge_maps(&piece_map(&d).unwrap()).unwrap()
    }

    fn running() -> IntMatrix {
        IntMatrix::from_rows(vec![vec![0, 0, 1, 0], vec![1, 0, 0, 1], vec![0, 0, 0, 1], vec![1, 2, 0, 0]]).unwrap()
    }

    #[test]
    fn integer_case_corners() {
        let s = system(&IntMatrix::scalar(4), false);
        let corners: Vec<Option<Corner>> = MapKind::ALL.iter().map(|&k| s.orbits_of(k)[0].corner).collect();
        assert_eq!(
            corners,
            [Some(Corner::TopLeft), Some(Corner::BottomRight), Some(Corner::TopLeft), Some(Corner::BottomRight)]
        );
        assert_eq!(max_escape_depth(&s), 2);
        assert_eq!(nesting_period(&s).unwrap(), 1);
        check_corner_duality(&s).unwrap();
    }

    #[test]
    fn running_example_identity_left_edge_goes_to_q2() {
        let s = system(&running(), false);
        assert_eq!(s.map(MapKind::Left).successor(0), 1);
    }

    #[test]
    fn running_example_corner_orbit_has_period_four() {
        let s = system(&running(), true);
        let (oid, _) = s.orbit_through(MapKind::Left, 0).unwrap();
        let o = &s.orbits_of(MapKind::Left)[oid];
        assert_eq!(o.corner, Some(Corner::TopLeft));
        assert_eq!(o.period(), 4);
        assert_eq!(nesting_period(&s).unwrap() % 4, 0);
        check_corner_duality(&s).unwrap();
    }

    #[test]
    fn cycles_start_at_smallest_vertex() {
        let s = system(&running(), true);
        for o in s.orbits_of(MapKind::Left) {
            assert!(o.points.iter().filter(|p| p.is_initial).count() == 1);
        }
        for m in &s.maps {
            for c in m.cycles() {
                assert_eq!(c[0], *c.iter().min().unwrap());
            }
        }
    }
}
