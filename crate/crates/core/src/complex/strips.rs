//! Infinite strips glued at periodic points, switch regions and the case
//! table of the extended piece map.

use serde::{Deserialize, Serialize};

use crate::decomposition::PieceMap;
use crate::edgemaps::{Corner, EdgeMapSystem, MapKind, OrbitRef, PointRef, Side};
use crate::error::{Error, Result};
use crate::spectral::COORD_TOL;

/// Closed interval on one side of one rectangle, in that side's offset chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeInterval {
    pub rect: usize,
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
}

impl EdgeInterval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn contains_interval(&self, lo: f64, hi: f64, tol: f64) -> bool {
        lo >= self.lo - tol && hi <= self.hi + tol
    }
}

/// Strip `[0,1] × [0,∞)` glued along `attachment` at one periodic point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfiniteStrip {
    pub id: usize,
    pub kind: MapKind,
    pub orbit: OrbitRef,
    /// Position j of the base point after the orbit's initial point.
    pub position: usize,
    pub period: usize,
    pub base_point: PointRef,
    /// Image of the initial point's full edge after 2p + j steps.
    pub attachment: EdgeInterval,
    /// Image of the initial point's full edge after p + j steps; points of
    /// this closed window enter the switch region.
    pub window: EdgeInterval,
    /// Rectangles visited by the composed branches, starting at the initial edge.
    pub composition: Vec<usize>,
    /// Mapping into this strip applies the unit shift (base point is initial).
    pub shift_on_initial: bool,
    pub corner: Option<Corner>,
}

fn compose(sys: &EdgeMapSystem, kind: MapKind, start: usize, steps: usize) -> (usize, f64, f64, Vec<usize>) {
    let e = sys.map(kind);
    let mut rect = start;
    let mut lo = 0.0;
    let mut hi = e.edge_lengths[start];
    let mut path = vec![start];
    for _ in 0..steps {
        let (r, a) = e.apply(rect, lo);
        let (_, b) = e.apply(rect, hi);
        rect = r;
        lo = a;
        hi = b;
        path.push(rect);
    }
    (rect, lo, hi, path)
}

pub fn attach_strips(_p: &PieceMap, sys: &EdgeMapSystem) -> Result<Vec<InfiniteStrip>> {
    let mut strips = Vec::new();
    for kind in MapKind::ALL {
        let orbits = sys.orbits_of(kind);
        if orbits.is_empty() {
            return Err(Error::internal(format!("{kind} has no periodic orbit")));
        }
        for o in orbits {
            let p = o.period();
            let c0 = o.points[0].location.rect;
            for j in 0..p {
                let pt = &o.points[j];
                let (rect, lo, hi, path) = compose(sys, kind, c0, 2 * p + j);
                let (wrect, wlo, whi, _) = compose(sys, kind, c0, p + j);
                if rect != pt.location.rect || wrect != rect {
                    return Err(Error::internal("strip attachment left the orbit's edge"));
                }
                let len = sys.map(kind).edge_lengths[rect];
                let tol = COORD_TOL * len.max(1.0);
                let attachment = EdgeInterval {
                    rect,
                    side: kind.side(),
                    lo,
                    hi,
                };
                let window = EdgeInterval {
                    rect,
                    side: kind.side(),
                    lo: wlo,
                    hi: whi,
                };
                if !attachment.contains(pt.location.offset, tol)
                    || !window.contains_interval(lo, hi, tol)
                    || lo < -tol
                    || hi > len + tol
                {
                    return Err(Error::internal(format!(
                        "attachment of {kind} strip at Q{} does not surround its periodic point",
                        rect + 1
                    )));
                }
                strips.push(InfiniteStrip {
                    id: strips.len(),
                    kind,
                    orbit: OrbitRef { map: kind, orbit: o.id },
                    position: j,
                    period: p,
                    base_point: PointRef {
                        map: kind,
                        orbit: o.id,
                        position: j,
                    },
                    attachment,
                    window,
                    composition: path,
                    shift_on_initial: j == 0,
                    corner: pt.corner,
                });
            }
        }
    }
    // one periodic point per edge and map, so attachments never share an edge
    for (a, s) in strips.iter().enumerate() {
        for t in &strips[a + 1..] {
            if s.kind == t.kind && s.attachment.rect == t.attachment.rect {
                return Err(Error::internal("two strips attached to the same edge"));
            }
        }
    }
    Ok(strips)
}

/// Rule used by the extended map on one region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseRule {
    /// Outside the strips and switch regions the piece map applies.
    PieceMap,
    /// Switch map from one switch region to the next one along the orbit.
    Switch { from_region: usize, to_region: usize, into_strip_with_shift: bool },
    /// Translation along strips: `(z, w) ↦ (z, w + shift)` into the next strip.
    Translate { kind: MapKind, from_strip: usize, to_strip: usize, shift: i32 },
}

/// Path joining the two window endpoints of an initial point's switch region,
/// kept only as endpoint data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchPath {
    pub id: usize,
    pub region: usize,
    pub endpoints: [(usize, Side, f64); 2],
    /// The path must avoid all other marked points and paths in its interior.
    pub disjointness_obligation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchConstruction {
    NonCornerLeftRight,
    NonCornerTopBottom,
    Corner,
}

/// Opaque switch region `P(x)`; only its boundary references are recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchRegion {
    pub id: usize,
    pub strip: usize,
    pub construction: SwitchConstruction,
    /// Window on the rectangle edge where the region meets the boundary.
    pub window: EdgeInterval,
    pub attachment: EdgeInterval,
    pub path: Option<usize>,
    /// Steps after which points of the window reach the initial strip.
    pub steps_to_strip: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPieceMap {
    pub strips: Vec<InfiniteStrip>,
    pub switch_regions: Vec<SwitchRegion>,
    pub paths: Vec<SwitchPath>,
    pub case_table: Vec<CaseRule>,
}

impl ExtendedPieceMap {
    pub fn strip_at(&self, kind: MapKind, rect: usize) -> Option<&InfiniteStrip> {
        self.strips.iter().find(|s| s.kind == kind && s.attachment.rect == rect)
    }

    pub fn strip_of(&self, kind: MapKind, orbit: usize, position: usize) -> Option<&InfiniteStrip> {
        self.strips
            .iter()
            .find(|s| s.kind == kind && s.orbit.orbit == orbit && s.position == position)
    }
}

pub fn build_extended_map(_p: &PieceMap, strips: Vec<InfiniteStrip>, sys: &EdgeMapSystem) -> Result<ExtendedPieceMap> {
    let mut regions = Vec::new();
    let mut paths = Vec::new();
    for s in &strips {
        let construction = if s.corner.is_some() {
            SwitchConstruction::Corner
        } else if s.kind.is_attracting() {
            SwitchConstruction::NonCornerLeftRight
        } else {
            SwitchConstruction::NonCornerTopBottom
        };
        let path = if s.shift_on_initial {
            let id = paths.len();
            paths.push(SwitchPath {
                id,
                region: s.id,
                endpoints: [
                    (s.window.rect, s.window.side, s.window.lo),
                    (s.window.rect, s.window.side, s.window.hi),
                ],
                disjointness_obligation: true,
            });
            Some(id)
        } else {
            None
        };
        regions.push(SwitchRegion {
            id: s.id,
            strip: s.id,
            construction,
            window: s.window,
            attachment: s.attachment,
            path,
            steps_to_strip: s.period - s.position,
        });
    }

    let mut case_table = vec![CaseRule::PieceMap];
    for s in &strips {
        let p = s.period;
        // f_T⁻¹ and f_B⁻¹ run the orbit forward, so f itself steps backwards there
        let next = if s.kind.is_attracting() {
            (s.position + 1) % p
        } else {
            (s.position + p - 1) % p
        };
        let to = strips
            .iter()
            .find(|t| t.orbit == s.orbit && t.position == next)
            .ok_or_else(|| Error::internal("strip orbit is incomplete"))?;
        let into_initial = next == 0;
        case_table.push(CaseRule::Switch {
            from_region: s.id,
            to_region: to.id,
            into_strip_with_shift: into_initial,
        });
        let shift = match (into_initial, s.kind.is_attracting()) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => -1,
        };
        case_table.push(CaseRule::Translate {
            kind: s.kind,
            from_strip: s.id,
            to_strip: to.id,
            shift,
        });
    }
    let e = ExtendedPieceMap {
        strips,
        switch_regions: regions,
        paths,
        case_table,
    };
    check_case_table(&e, sys)?;
    Ok(e)
}

/// Each strip has exactly one translation rule and the unit shift appears
/// exactly when the image strip belongs to an initial point.
pub fn check_case_table(e: &ExtendedPieceMap, sys: &EdgeMapSystem) -> Result<()> {
    for s in &e.strips {
        let rules: Vec<&CaseRule> = e
            .case_table
            .iter()
            .filter(|r| matches!(r, CaseRule::Translate { from_strip, .. } if *from_strip == s.id))
            .collect();
        if rules.len() != 1 {
            return Err(Error::internal(format!("strip {} has {} translation rules", s.id, rules.len())));
        }
        if let CaseRule::Translate { to_strip, shift, .. } = rules[0] {
            let target = &e.strips[*to_strip];
            if sys.point(target.base_point).is_initial != (*shift != 0) {
                return Err(Error::internal("shift rule disagrees with the initial points"));
            }
        }
    }
    Ok(())
}
