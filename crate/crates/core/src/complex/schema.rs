//! Boundary dynamics of the extended map, the bounded-depth enumeration of
//! the gluing relation and the census of its equivalence classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::strips::{EdgeInterval, ExtendedPieceMap};
use crate::decomposition::PieceMap;
use crate::edgemaps::{Corner, EdgeMapSystem, MapKind, Side};
use crate::error::{Error, Result};
use crate::spectral::COORD_TOL;

/// Boundary points along interior vertical strip boundaries (glued by f_L
/// against f_R) or interior horizontal ones (f_T⁻¹ against f_B⁻¹).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Vertical,
    Horizontal,
}

impl Family {
    pub fn maps(self) -> (MapKind, MapKind) {
        match self {
            Family::Vertical => (MapKind::Left, MapKind::Right),
            Family::Horizontal => (MapKind::Top, MapKind::Bottom),
        }
    }
}

/// Interior strip boundary `{a} × [0, η_k]` or `[0, ω_k] × {c}` of one rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSource {
    pub id: usize,
    pub family: Family,
    pub rect: usize,
    /// The boundary between slot `boundary` and slot `boundary + 1`.
    pub boundary: usize,
    pub length: f64,
    /// First-step images, as (target rect, offset at parameter 0).
    pub first_step: [(usize, f64); 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SegmentState {
    Edge {
        rect: usize,
        side: Side,
        lo: f64,
        hi: f64,
    },
    /// Inside a switch region or strip; `steps` counts steps since capture.
    Strip {
        kind: MapKind,
        orbit: usize,
        window: usize,
        entry: EdgeInterval,
        steps: usize,
        escaped: bool,
        /// Completed unit shifts since landing in the initial strip.
        w_shift: usize,
    },
}

impl SegmentState {
    pub fn is_escaped(&self) -> bool {
        matches!(self, SegmentState::Strip { escaped: true, .. })
    }
}

/// `f^depth` images of one sub-segment of a generator under the two maps of its family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationPair {
    pub source: usize,
    pub u: (f64, f64),
    pub depth: usize,
    pub first: SegmentState,
    pub second: SegmentState,
}

/// Eventual behaviour of a sub-segment once both images run in strips: each
/// further period moves both images one unit out along their strips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicTail {
    pub source: usize,
    pub u: (f64, f64),
    pub escape_depth: usize,
    pub first_orbit: (MapKind, usize),
    pub second_orbit: (MapKind, usize),
    pub first_period: usize,
    pub second_period: usize,
    pub shift_per_period: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointKey {
    Corner {
        rect: usize,
        corner: Corner,
    },
    Edge {
        rect: usize,
        side: Side,
        q: i64,
    },
    Strip {
        kind: MapKind,
        orbit: usize,
        window: usize,
        entry_rect: usize,
        entry_q: i64,
        steps: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Towards larger offsets along the side.
    Increasing,
    Decreasing,
}

/// Images of one generator endpoint at one depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointPair {
    pub source: usize,
    pub at_start: bool,
    pub depth: usize,
    pub first: PointKey,
    pub second: PointKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationSchema {
    pub depth_cap: usize,
    pub escape_depth: usize,
    pub generators: Vec<GeneratorSource>,
    pub pairs: Vec<IdentificationPair>,
    pub periodic_tails: Vec<PeriodicTail>,
    #[serde(skip)]
    pub endpoint_pairs: Vec<EndpointPair>,
    /// Largest depth at which a generator image first ran in a strip.
    pub observed_escape_depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointState {
    Edge { rect: usize, offset: f64 },
    Captured { orbit: usize, window: usize, entry_rect: usize, entry_offset: f64, steps: usize },
}

/// Boundary dynamics of the extended map for one edge map: the piece-map
/// branch outside switch windows, then p − j steps through the switch
/// regions and translation along strips afterwards.
pub struct BoundaryDynamics<'a> {
    pub sys: &'a EdgeMapSystem,
    pub ext: &'a ExtendedPieceMap,
    pub kind: MapKind,
    tol: f64,
}

impl<'a> BoundaryDynamics<'a> {
    pub fn new(sys: &'a EdgeMapSystem, ext: &'a ExtendedPieceMap, kind: MapKind) -> Self {
        let scale = sys.map(kind).edge_lengths.iter().cloned().fold(1.0, f64::max);
        BoundaryDynamics {
            sys,
            ext,
            kind,
            tol: 1e-9 * scale,
        }
    }

    fn window(&self, rect: usize) -> Option<(usize, usize, &EdgeInterval)> {
        self.ext
            .strip_at(self.kind, rect)
            .map(|s| (s.orbit.orbit, s.position, &s.window))
    }

    pub fn step(&self, s: PointState) -> PointState {
        match s {
            PointState::Edge { rect, offset } => {
                if let Some((orbit, j, w)) = self.window(rect) {
                    if w.contains(offset, self.tol) {
                        return PointState::Captured {
                            orbit,
                            window: j,
                            entry_rect: rect,
                            entry_offset: offset,
                            steps: 1,
                        };
                    }
                }
                let (r, x) = self.sys.map(self.kind).apply(rect, offset);
                PointState::Edge { rect: r, offset: x }
            }
            PointState::Captured {
                orbit,
                window,
                entry_rect,
                entry_offset,
                steps,
            } => PointState::Captured {
                orbit,
                window,
                entry_rect,
                entry_offset,
                steps: steps + 1,
            },
        }
    }

    pub fn period(&self, orbit: usize) -> usize {
        self.sys.orbits_of(self.kind)[orbit].period()
    }

    /// On a strip boundary ray, past the switch regions.
    pub fn is_escaped(&self, s: &PointState) -> bool {
        match *s {
            PointState::Edge { .. } => false,
            PointState::Captured { orbit, window, steps, .. } => steps >= self.period(orbit) - window,
        }
    }

    /// First time the orbit of `start` is escaped, if within `cap` steps.
    pub fn escape_time(&self, start: PointState, cap: usize) -> Option<usize> {
        let mut s = start;
        for t in 0..=cap {
            if self.is_escaped(&s) {
                return Some(t);
            }
            s = self.step(s);
        }
        None
    }
}

/// Interns offsets so that equal points reached along different routes share
/// one key.
struct KeyRegistry {
    grid: f64,
    seen: HashMap<(usize, Side, i64), f64>,
}

impl KeyRegistry {
    fn new(grid: f64) -> Self {
        KeyRegistry {
            grid,
            seen: HashMap::new(),
        }
    }

    fn canon(&mut self, rect: usize, side: Side, offset: f64) -> i64 {
        let q = (offset / self.grid).round() as i64;
        for c in [q, q - 1, q + 1] {
            if let Some(v) = self.seen.get(&(rect, side, c)) {
                if (v - offset).abs() <= self.grid {
                    return c;
                }
            }
        }
        self.seen.insert((rect, side, q), offset);
        q
    }

    fn edge_key(&mut self, rect: usize, side: Side, offset: f64, len: f64) -> PointKey {
        if offset.abs() <= self.grid {
            PointKey::Corner {
                rect,
                corner: side.corner_at(true),
            }
        } else if (offset - len).abs() <= self.grid {
            PointKey::Corner {
                rect,
                corner: side.corner_at(false),
            }
        } else {
            PointKey::Edge {
                rect,
                side,
                q: self.canon(rect, side, offset),
            }
        }
    }
}

struct PointKeys<'a> {
    sys: &'a EdgeMapSystem,
    registry: KeyRegistry,
}

impl<'a> PointKeys<'a> {
    fn key(&mut self, kind: MapKind, s: &PointState) -> PointKey {
        let side = kind.side();
        match *s {
            PointState::Edge { rect, offset } => {
                let len = self.sys.map(kind).edge_lengths[rect];
                self.registry.edge_key(rect, side, offset, len)
            }
            PointState::Captured {
                orbit,
                window,
                entry_rect,
                entry_offset,
                steps,
            } => {
                let len = self.sys.map(kind).edge_lengths[entry_rect];
                let entry_q = if entry_offset.abs() <= self.registry.grid {
                    0
                } else if (entry_offset - len).abs() <= self.registry.grid {
                    i64::MAX
                } else {
                    self.registry.canon(entry_rect, side, entry_offset)
                };
                PointKey::Strip {
                    kind,
                    orbit,
                    window,
                    entry_rect,
                    entry_q,
                    steps,
                }
            }
        }
    }
}

pub fn generator_sources(p: &PieceMap) -> Vec<GeneratorSource> {
    let d = &p.decomposition;
    let mut out = Vec::new();
    for k in 0..p.n() {
        for b in 0..d.vertical_slot_count(k).saturating_sub(1) {
            // left edge of slot b+1 feeds f_L, right edge of slot b feeds f_R
            let right_of = &p.branches[p.vertical_branch[k][b + 1]];
            let left_of = &p.branches[p.vertical_branch[k][b]];
            out.push(GeneratorSource {
                id: out.len(),
                family: Family::Vertical,
                rect: k,
                boundary: b,
                length: d.rect_heights[k],
                first_step: [
                    (right_of.target_rect, right_of.y_offset),
                    (left_of.target_rect, left_of.y_offset),
                ],
            });
        }
    }
    for i in 0..p.n() {
        for b in 0..d.horizontal_slot_count(i).saturating_sub(1) {
            // top edge of slot b+1 feeds f_T⁻¹, bottom edge of slot b feeds f_B⁻¹
            let below = &p.branches[p.horizontal_branch[i][b + 1]];
            let above = &p.branches[p.horizontal_branch[i][b]];
            out.push(GeneratorSource {
                id: out.len(),
                family: Family::Horizontal,
                rect: i,
                boundary: b,
                length: d.rect_widths[i],
                first_step: [(below.source_rect, below.x_offset), (above.source_rect, above.x_offset)],
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
enum SegSide {
    Edge { rect: usize, alpha: f64, beta: f64 },
    Captured { orbit: usize, window: usize, entry: EdgeInterval, steps: usize },
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    u0: f64,
    u1: f64,
    depth: usize,
    sides: [SegSide; 2],
}

enum Advance {
    Next(SegSide),
    Split(Vec<f64>),
}

fn advance(dynamics: &BoundaryDynamics<'_>, s: SegSide, u0: f64, u1: f64) -> Advance {
    match s {
        SegSide::Edge { rect, alpha, beta } => {
            let lo = alpha + beta * u0;
            let hi = alpha + beta * u1;
            if let Some((orbit, j, w)) = dynamics.window(rect) {
                let tol = dynamics.tol;
                if w.contains_interval(lo, hi, tol) {
                    return Advance::Next(SegSide::Captured {
                        orbit,
                        window: j,
                        entry: EdgeInterval {
                            rect,
                            side: dynamics.kind.side(),
                            lo,
                            hi,
                        },
                        steps: 1,
                    });
                }
                let cuts: Vec<f64> = [w.lo, w.hi]
                    .into_iter()
                    .filter(|&c| c > lo + tol && c < hi - tol)
                    .map(|c| (c - alpha) / beta)
                    .collect();
                if !cuts.is_empty() {
                    return Advance::Split(cuts);
                }
            }
            let b = &dynamics.sys.map(dynamics.kind).branches[rect];
            let lambda = dynamics.sys.map(dynamics.kind).lambda;
            Advance::Next(SegSide::Edge {
                rect: b.target,
                alpha: b.offset + alpha / lambda,
                beta: beta / lambda,
            })
        }
        SegSide::Captured {
            orbit,
            window,
            entry,
            steps,
        } => Advance::Next(SegSide::Captured {
            orbit,
            window,
            entry,
            steps: steps + 1,
        }),
    }
}

fn seg_state(dynamics: &BoundaryDynamics<'_>, s: &SegSide, u0: f64, u1: f64) -> SegmentState {
    match *s {
        SegSide::Edge { rect, alpha, beta } => SegmentState::Edge {
            rect,
            side: dynamics.kind.side(),
            lo: alpha + beta * u0,
            hi: alpha + beta * u1,
        },
        SegSide::Captured {
            orbit,
            window,
            entry,
            steps,
        } => {
            let p = dynamics.period(orbit);
            let landed = p - window;
            SegmentState::Strip {
                kind: dynamics.kind,
                orbit,
                window,
                entry,
                steps,
                escaped: steps >= landed,
                w_shift: if steps >= landed { (steps - landed) / p } else { 0 },
            }
        }
    }
}

fn is_escaped_side(dynamics: &BoundaryDynamics<'_>, s: &SegSide) -> bool {
    match *s {
        SegSide::Edge { .. } => false,
        SegSide::Captured { orbit, window, steps, .. } => steps >= dynamics.period(orbit) - window,
    }
}

struct GeneratorRun {
    pairs: Vec<IdentificationPair>,
    tails: Vec<PeriodicTail>,
    endpoints: Vec<(bool, usize, [PointState; 2])>,
    max_escape: usize,
}

fn run_generator(
    g: &GeneratorSource,
    dyns: &[BoundaryDynamics<'_>; 2],
    lambda: f64,
    depth_cap: usize,
) -> Result<GeneratorRun> {
    let start = |i: usize| SegSide::Edge {
        rect: g.first_step[i].0,
        alpha: g.first_step[i].1,
        beta: 1.0 / lambda,
    };
    let mut queue = vec![Piece {
        u0: 0.0,
        u1: g.length,
        depth: 1,
        sides: [start(0), start(1)],
    }];
    let mut pairs = Vec::new();
    let mut tails = Vec::new();
    let mut max_escape = 0;
    let mut guard = 0usize;
    while let Some(piece) = queue.pop() {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::internal("segment enumeration does not terminate"));
        }
        let mut split = None;
        for i in 0..2 {
            if let Advance::Split(cuts) = advance(&dyns[i], piece.sides[i], piece.u0, piece.u1) {
                split = Some(cuts);
                break;
            }
        }
        if let Some(mut cuts) = split {
            cuts.sort_by(f64::total_cmp);
            let mut bounds = vec![piece.u0];
            bounds.extend(cuts);
            bounds.push(piece.u1);
            // pushed in reverse so pieces are processed top to bottom
            for w in bounds.windows(2).rev() {
                queue.push(Piece {
                    u0: w[0],
                    u1: w[1],
                    ..piece
                });
            }
            continue;
        }
        let first = seg_state(&dyns[0], &piece.sides[0], piece.u0, piece.u1);
        let second = seg_state(&dyns[1], &piece.sides[1], piece.u0, piece.u1);
        let done = first.is_escaped() && second.is_escaped();
        pairs.push(IdentificationPair {
            source: g.id,
            u: (piece.u0, piece.u1),
            depth: piece.depth,
            first,
            second,
        });
        if done {
            max_escape = max_escape.max(piece.depth);
            let orbit_of = |s: &SegSide, d: &BoundaryDynamics<'_>| match *s {
                SegSide::Captured { orbit, .. } => (d.kind, orbit),
                SegSide::Edge { .. } => unreachable!("escaped sides are captured"),
            };
            let a = orbit_of(&piece.sides[0], &dyns[0]);
            let b = orbit_of(&piece.sides[1], &dyns[1]);
            tails.push(PeriodicTail {
                source: g.id,
                u: (piece.u0, piece.u1),
                escape_depth: piece.depth,
                first_orbit: a,
                second_orbit: b,
                first_period: dyns[0].period(a.1),
                second_period: dyns[1].period(b.1),
                shift_per_period: 1,
            });
            continue;
        }
        if piece.depth >= depth_cap {
            return Err(Error::internal(format!(
                "generator {} has not escaped by depth {depth_cap}",
                g.id
            )));
        }
        let mut next = [piece.sides[0], piece.sides[1]];
        for i in 0..2 {
            if !is_escaped_side(&dyns[i], &piece.sides[i]) {
                match advance(&dyns[i], piece.sides[i], piece.u0, piece.u1) {
                    Advance::Next(s) => next[i] = s,
                    Advance::Split(_) => unreachable!("splits handled above"),
                }
            } else if let SegSide::Captured {
                orbit,
                window,
                entry,
                steps,
            } = piece.sides[i]
            {
                next[i] = SegSide::Captured {
                    orbit,
                    window,
                    entry,
                    steps: steps + 1,
                };
            }
        }
        queue.push(Piece {
            depth: piece.depth + 1,
            sides: next,
            ..piece
        });
    }
    pairs.sort_by(|a, b| a.depth.cmp(&b.depth).then(a.u.0.total_cmp(&b.u.0)));
    tails.sort_by(|a, b| a.u.0.total_cmp(&b.u.0));

    let mut endpoints = Vec::new();
    for (at_start, u) in [(true, 0.0), (false, g.length)] {
        let mut states = [0, 1].map(|i| PointState::Edge {
            rect: g.first_step[i].0,
            offset: g.first_step[i].1 + u / lambda,
        });
        for depth in 1..=depth_cap {
            endpoints.push((at_start, depth, states));
            states = [dyns[0].step(states[0]), dyns[1].step(states[1])];
        }
    }
    Ok(GeneratorRun {
        pairs,
        tails,
        endpoints,
        max_escape,
    })
}

pub fn enumerate_identifications(
    p: &PieceMap,
    sys: &EdgeMapSystem,
    ext: &ExtendedPieceMap,
    escape_depth: usize,
    depth_cap: usize,
) -> Result<IdentificationSchema> {
    if depth_cap < escape_depth {
        return Err(Error::invalid(format!(
            "depth cap {depth_cap} is below the escape depth {escape_depth}"
        )));
    }
    let generators = generator_sources(p);
    let lambda = p.lambda();
    let runs: Vec<Result<GeneratorRun>> = crate::par::map(&generators, |g| {
        let (a, b) = g.family.maps();
        let dyns = [BoundaryDynamics::new(sys, ext, a), BoundaryDynamics::new(sys, ext, b)];
        run_generator(g, &dyns, lambda, depth_cap + 1)
    });
    let mut pairs = Vec::new();
    let mut tails = Vec::new();
    let mut endpoint_pairs = Vec::new();
    let mut observed = 0;
    let scale = sys
        .maps
        .iter()
        .flat_map(|m| m.edge_lengths.iter().cloned())
        .fold(1.0, f64::max);
    let mut keys = PointKeys {
        sys,
        registry: KeyRegistry::new(1e-9 * scale),
    };
    for (g, run) in generators.iter().zip(runs) {
        let run = run?;
        observed = observed.max(run.max_escape);
        pairs.extend(run.pairs);
        tails.extend(run.tails);
        let (a, b) = g.family.maps();
        for (at_start, depth, states) in run.endpoints {
            if depth > depth_cap {
                continue;
            }
            endpoint_pairs.push(EndpointPair {
                source: g.id,
                at_start,
                depth,
                first: keys.key(a, &states[0]),
                second: keys.key(b, &states[1]),
            });
        }
    }
    Ok(IdentificationSchema {
        depth_cap,
        escape_depth,
        generators,
        pairs,
        periodic_tails: tails,
        endpoint_pairs,
        observed_escape_depth: observed,
    })
}

/// Contraction law: before capture an image at depth N has length
/// (source length)·λ⁻ᴺ.
pub fn check_contraction(schema: &IdentificationSchema, lambda: f64) -> Result<()> {
    for pair in &schema.pairs {
        let src = pair.u.1 - pair.u.0;
        let expect = src * lambda.powi(-(pair.depth as i32));
        for s in [&pair.first, &pair.second] {
            if let SegmentState::Edge { lo, hi, .. } = s {
                let rel = ((hi - lo) - expect).abs() / expect;
                if rel > 1e-6 {
                    return Err(Error::verification(
                        "generator-contraction",
                        format!("depth {} image has relative length error {rel:e}", pair.depth),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Segment granularity: boundary images of different generator points never
/// overlap, so every boundary point is glued to at most one other point.
pub fn check_segment_classes(schema: &IdentificationSchema, sys: &EdgeMapSystem) -> Result<usize> {
    let mut by_edge: BTreeMap<(usize, Side), Vec<(f64, f64)>> = BTreeMap::new();
    let mut strip_keys = BTreeSet::new();
    for pair in &schema.pairs {
        for s in [&pair.first, &pair.second] {
            match s {
                SegmentState::Edge { rect, side, lo, hi } => by_edge.entry((*rect, *side)).or_default().push((*lo, *hi)),
                SegmentState::Strip {
                    kind,
                    orbit,
                    window,
                    entry,
                    steps,
                    ..
                } => {
                    let key = (*kind, *orbit, *window, entry.rect, entry.lo.to_bits(), *steps);
                    if !strip_keys.insert(key) {
                        return Err(Error::verification(
                            "finite-class-size",
                            "two generator segments share a strip image",
                        ));
                    }
                }
            }
        }
    }
    let scale = sys
        .maps
        .iter()
        .flat_map(|m| m.edge_lengths.iter().cloned())
        .fold(1.0, f64::max);
    let tol = COORD_TOL * scale * 1e-2;
    let mut segments = 0;
    for ((rect, side), mut segs) in by_edge {
        segs.sort_by(|a, b| a.0.total_cmp(&b.0));
        segments += segs.len();
        for w in segs.windows(2) {
            if w[1].0 < w[0].1 - tol {
                return Err(Error::verification(
                    "finite-class-size",
                    format!(
                        "images [{}, {}] and [{}, {}] overlap on {side:?} of Q{}",
                        w[0].0,
                        w[0].1,
                        w[1].0,
                        w[1].1,
                        rect + 1
                    ),
                ));
            }
        }
    }
    Ok(segments)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkType {
    Line,
    CountableCircles,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfiniteClass {
    pub representative: PointKey,
    pub corners: Vec<(usize, Corner)>,
    /// Points of the class met up to the depth cap.
    pub size_at_cap: usize,
    pub link: LinkType,
    pub link_shape: LinkShape,
    /// Strip orbits whose boundary rays carry points of the class.
    pub strip_orbits: Vec<(MapKind, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteCornerClass {
    pub points: Vec<PointKey>,
    pub link: LinkShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCensus {
    /// Rectangle corners that no generator image reaches.
    pub finite_singletons: usize,
    /// Glued segment pairs before escape.
    pub finite_pairs: usize,
    /// Two-point classes among generator endpoints.
    pub finite_endpoint_pairs: usize,
    /// Bounded classes of three or more points. Generator endpoints are strip
    /// corners, so these are chains of strip-corner images closing up; each
    /// must still be a surface point.
    pub finite_corner_classes: Vec<FiniteCornerClass>,
    pub largest_finite_class: usize,
    pub infinite_classes: Vec<InfiniteClass>,
    pub growth_window: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub(crate) fn union_find_components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    (0..n).map(|i| uf.find(i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Germ {
    node: usize,
    side: Side,
    dir: Direction,
}

fn germ_side(key: &PointKey, side: Side) -> Side {
    match key {
        PointKey::Edge { side, .. } => *side,
        _ => side,
    }
}

/// The two germs of a point's link arc.
fn arc_germs(node: usize, key: &PointKey, map_side: Side) -> [Germ; 2] {
    match key {
        PointKey::Corner { corner, .. } => {
            let v = corner.vertical_side();
            let h = corner.horizontal_side();
            let away = |s: Side| {
                if corner.at_start_of(s) {
                    Direction::Increasing
                } else {
                    Direction::Decreasing
                }
            };
            [
                Germ {
                    node,
                    side: v,
                    dir: away(v),
                },
                Germ {
                    node,
                    side: h,
                    dir: away(h),
                },
            ]
        }
        _ => {
            let side = germ_side(key, map_side);
            [
                Germ {
                    node,
                    side,
                    dir: Direction::Increasing,
                },
                Germ {
                    node,
                    side,
                    dir: Direction::Decreasing,
                },
            ]
        }
    }
}

/// Shape of the link graph of a class: closed chains, open chains, and
/// whether every open chain ends at a point met near the depth cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkShape {
    pub cycles: usize,
    pub paths: usize,
    pub open_ends_at_frontier: bool,
    /// A germ is glued twice or along a direction that leaves its rectangle.
    pub anomalous: bool,
}

impl LinkShape {
    fn infinite_type(&self) -> LinkType {
        if self.anomalous {
            LinkType::Undetermined
        } else if self.cycles == 0 && self.paths == 1 && self.open_ends_at_frontier {
            LinkType::Line
        } else if self.cycles >= 2 && self.open_ends_at_frontier {
            LinkType::CountableCircles
        } else {
            LinkType::Undetermined
        }
    }

    /// Finite classes must be interior points (one circle) or boundary
    /// points (one arc).
    fn is_surface_point(&self) -> bool {
        !self.anomalous && self.cycles + self.paths == 1
    }
}

fn link_shape(
    nodes: &[usize],
    keys: &[PointKey],
    node_side: &[Side],
    glues: &[(Germ, Germ)],
    frontier: &[bool],
) -> LinkShape {
    let anomaly = LinkShape {
        cycles: 0,
        paths: 0,
        open_ends_at_frontier: false,
        anomalous: true,
    };
    let mut germs: Vec<Germ> = Vec::new();
    for &v in nodes {
        germs.extend(arc_germs(v, &keys[v], node_side[v]));
    }
    let mut index: HashMap<Germ, usize> = HashMap::new();
    for (i, g) in germs.iter().enumerate() {
        index.insert(*g, i);
    }
    let mut degree = vec![0usize; germs.len()];
    let mut edges = Vec::new();
    for pair in germs.chunks(2) {
        edges.push((index[&pair[0]], index[&pair[1]]));
    }
    for (a, b) in glues {
        let (Some(&ia), Some(&ib)) = (index.get(a), index.get(b)) else {
            return anomaly;
        };
        degree[ia] += 1;
        degree[ib] += 1;
        edges.push((ia, ib));
    }
    if degree.iter().any(|&d| d > 1) {
        return anomaly;
    }
    let comp = union_find_components(germs.len(), edges.iter().copied());
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in comp.iter().enumerate() {
        members.entry(*c).or_default().push(i);
    }
    let mut shape = LinkShape {
        cycles: 0,
        paths: 0,
        open_ends_at_frontier: true,
        anomalous: false,
    };
    for m in members.values() {
        let ends: Vec<usize> = m.iter().copied().filter(|&i| degree[i] == 0).collect();
        if ends.is_empty() {
            shape.cycles += 1;
        } else {
            shape.paths += 1;
            if !ends.iter().all(|&i| frontier[germs[i].node]) {
                shape.open_ends_at_frontier = false;
            }
        }
    }
    shape
}

pub fn classify_classes(schema: &IdentificationSchema, sys: &EdgeMapSystem) -> Result<ClassCensus> {
    let mut ids: HashMap<PointKey, usize> = HashMap::new();
    let mut keys: Vec<PointKey> = Vec::new();
    let mut node_side: Vec<Side> = Vec::new();
    let mut max_depth: Vec<usize> = Vec::new();
    let mut intern = |k: PointKey, side: Side, depth: usize, keys: &mut Vec<PointKey>, md: &mut Vec<usize>| {
        let id = *ids.entry(k).or_insert_with(|| {
            keys.push(k);
            node_side.push(side);
            md.push(0);
            keys.len() - 1
        });
        md[id] = md[id].max(depth);
        id
    };
    let mut links = Vec::new();
    let mut glues = Vec::new();
    for ep in &schema.endpoint_pairs {
        let family = schema.generators[ep.source].family;
        let (a, b) = family.maps();
        let ia = intern(ep.first, a.side(), ep.depth, &mut keys, &mut max_depth);
        let ib = intern(ep.second, b.side(), ep.depth, &mut keys, &mut max_depth);
        links.push((ia, ib));
        let dir = if ep.at_start {
            Direction::Increasing
        } else {
            Direction::Decreasing
        };
        glues.push((
            ia,
            Germ {
                node: ia,
                side: germ_side(&ep.first, a.side()),
                dir,
            },
            Germ {
                node: ib,
                side: germ_side(&ep.second, b.side()),
                dir,
            },
        ));
    }
    let node_side = {
        // the closure above holds a mutable borrow until here
        let mut s = Vec::with_capacity(keys.len());
        for k in &keys {
            s.push(match k {
                PointKey::Edge { side, .. } => *side,
                PointKey::Corner { corner, .. } => corner.vertical_side(),
                PointKey::Strip { kind, .. } => kind.side(),
            });
        }
        s
    };
    let comp = union_find_components(keys.len(), links.iter().copied());
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in comp.iter().enumerate() {
        members.entry(*c).or_default().push(i);
    }
    let window = 2 * sys.max_period() + 1;
    let frontier_depth = schema.depth_cap.saturating_sub(window);
    let frontier: Vec<bool> = max_depth.iter().map(|&d| d >= frontier_depth).collect();

    let mut infinite = Vec::new();
    let mut largest_finite = 0;
    let mut finite_endpoint_pairs = 0;
    let mut finite_corner_classes = Vec::new();
    for (root, m) in &members {
        let class_glues: Vec<(Germ, Germ)> = glues
            .iter()
            .filter(|(v, _, _)| comp[*v] == *root)
            .map(|(_, a, b)| (*a, *b))
            .collect();
        let shape = link_shape(m, &keys, &node_side, &class_glues, &frontier);
        // infinite classes meet the bounded domain off the strips; classes born
        // after escape consist of strip points only and are finite, and so is
        // any class whose link has closed up
        let growing = m.len() >= 3
            && m.iter().any(|&v| frontier[v])
            && m.iter().any(|&v| !matches!(keys[v], PointKey::Strip { .. }))
            && shape.paths > 0;
        if !growing {
            largest_finite = largest_finite.max(m.len());
            if !shape.is_surface_point() {
                return Err(Error::verification(
                    "finite-class-link",
                    format!("a bounded class of {} points has link {shape:?}", m.len()),
                ));
            }
            if m.len() == 2 {
                finite_endpoint_pairs += 1;
            } else if m.len() > 2 {
                let mut points: Vec<PointKey> = m.iter().map(|&v| keys[v]).collect();
                points.sort();
                finite_corner_classes.push(FiniteCornerClass { points, link: shape });
            }
            continue;
        }
        let mut corners: Vec<(usize, Corner)> = m
            .iter()
            .filter_map(|&v| match keys[v] {
                PointKey::Corner { rect, corner } => Some((rect, corner)),
                _ => None,
            })
            .collect();
        corners.sort();
        let mut strip_orbits: Vec<(MapKind, usize)> = m
            .iter()
            .filter_map(|&v| match keys[v] {
                PointKey::Strip { kind, orbit, .. } => Some((kind, orbit)),
                _ => None,
            })
            .collect();
        strip_orbits.sort();
        strip_orbits.dedup();
        let representative = corners
            .first()
            .map(|&(rect, corner)| PointKey::Corner { rect, corner })
            .unwrap_or_else(|| m.iter().map(|&v| keys[v]).min().unwrap());
        infinite.push(InfiniteClass {
            representative,
            corners,
            size_at_cap: m.len(),
            link: shape.infinite_type(),
            link_shape: shape,
            strip_orbits,
        });
    }
    finite_corner_classes.sort_by(|a, b| a.points.cmp(&b.points));
    infinite.sort_by(|a, b| a.representative.cmp(&b.representative));

    let n = sys.map(MapKind::Left).n();
    let mut singletons = 0;
    for rect in 0..n {
        for corner in Corner::ALL {
            if !ids.contains_key(&PointKey::Corner { rect, corner }) {
                singletons += 1;
            }
        }
    }
    let finite_pairs = schema
        .pairs
        .iter()
        .filter(|p| !(p.first.is_escaped() && p.second.is_escaped()))
        .count();
    Ok(ClassCensus {
        finite_singletons: singletons,
        finite_pairs,
        finite_endpoint_pairs,
        finite_corner_classes,
        largest_finite_class: largest_finite.max(1),
        infinite_classes: infinite,
        growth_window: window,
    })
}

/// Worst escape time over `samples` boundary points spread evenly across
/// the rectangles, each followed to `horizon` steps.
pub fn sample_escape_times(
    sys: &EdgeMapSystem,
    ext: &ExtendedPieceMap,
    kind: MapKind,
    samples: usize,
    horizon: usize,
) -> Result<usize> {
    let dynamics = BoundaryDynamics::new(sys, ext, kind);
    let e = sys.map(kind);
    let n = e.n();
    let per_rect = samples.div_ceil(n).max(2);
    let mut worst = 0;
    for i in 0..samples {
        let rect = i % n;
        let t = (i / n) as f64 / (per_rect - 1) as f64;
        let start = PointState::Edge {
            rect,
            offset: e.edge_lengths[rect] * t,
        };
        match dynamics.escape_time(start, horizon) {
            Some(time) => worst = worst.max(time),
            None => {
                return Err(Error::verification(
                    "escape-law",
                    format!("{kind} orbit of Q{} offset {t} stays off the strips for {horizon} steps", rect + 1),
                ))
            }
        }
    }
    Ok(worst)
}
