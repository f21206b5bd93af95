//! SVG diagrams of construction records. Output is a pure function of the
//! record: fixed layout, fixed number formatting and a palette keyed by
//! strip labels.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decomposition::{StripDecomposition, StripLabel};
use crate::edgemaps::{EdgeMapSystem, MapKind, Orbit, Side};
use crate::error::{Error, Result};
use crate::pipeline::ConstructionRecord;
use crate::spectral::IntMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramKind {
    PieceMap,
    Digraphs,
    Orbits,
    ExpandedRectangles,
    Complex2D,
}

impl DiagramKind {
    pub const ALL: [DiagramKind; 5] = [
        DiagramKind::PieceMap,
        DiagramKind::Digraphs,
        DiagramKind::Orbits,
        DiagramKind::ExpandedRectangles,
        DiagramKind::Complex2D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiagramKind::PieceMap => "piecemap",
            DiagramKind::Digraphs => "digraphs",
            DiagramKind::Orbits => "orbits",
            DiagramKind::ExpandedRectangles => "expanded",
            DiagramKind::Complex2D => "complex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

pub struct DiagramSpec<'a> {
    pub kind: DiagramKind,
    pub record: &'a ConstructionRecord,
}

const SCALE: f64 = 160.0;
const GAP: f64 = 30.0;
const MARGIN: f64 = 40.0;
/// Infinite strips are drawn this many attachment widths long.
const STRIP_UNITS: f64 = 3.0;

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Fill colour of a strip, a function of its label only.
pub fn strip_color(label: &StripLabel) -> String {
    let h = fnv(label.to_string().as_bytes());
    let hue = (h % 360) as f64;
    let sat = (45 + (h >> 16) % 30) as f64 / 100.0;
    let light = (55 + (h >> 32) % 20) as f64 / 100.0;
    hsl_hex(hue, sat, light)
}

fn hsl_hex(hue: f64, sat: f64, light: f64) -> String {
    let c = (1.0 - (2.0 * light - 1.0).abs()) * sat;
    let hp = hue / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = light - c / 2.0;
    let byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

fn map_color(kind: MapKind) -> &'static str {
    match kind {
        MapKind::Left => "#1f77b4",
        MapKind::Right => "#ff7f0e",
        MapKind::Top => "#2ca02c",
        MapKind::Bottom => "#d62728",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
    defs: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Svg {
            body: String::new(),
            width,
            height,
            defs: String::new(),
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str, class: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect class="{class}" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" {style}/>"#
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str, class: &str) {
        let _ = writeln!(
            self.body,
            r#"<line class="{class}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" {style}/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    fn circle(&mut self, c: (f64, f64), r: f64, style: &str, class: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="{r:.3}" {style}/>"#,
            c.0, c.1
        );
    }

    fn text(&mut self, p: (f64, f64), size: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.3}" y="{:.3}" font-size="{size:.1}" font-family="sans-serif" text-anchor="middle">{}</text>"#,
            p.0,
            p.1,
            esc(s)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str, class: &str) {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.3},{:.3}", if i == 0 { "" } else { " " }, p.0, p.1);
        }
        let _ = writeln!(self.body, r#"<polyline class="{class}" points="{d}" {style}/>"#);
    }

    fn arrow(&mut self, a: (f64, f64), b: (f64, f64), color: &str, class: &str) {
        let _ = writeln!(
            self.body,
            r#"<line class="{class}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="1.2" marker-end="url(#head)"/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    fn finish(self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(out, "<defs>");
        let _ = writeln!(
            out,
            r#"<marker id="head" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z"/></marker>"#
        );
        out.push_str(&self.defs);
        let _ = writeln!(out, "</defs>");
        out.push_str(&self.body);
        let _ = writeln!(out, "</svg>");
        out
    }
}

/// Placement of the rectangles in a row, in diagram units.
pub struct Layout {
    pub origin: Vec<(f64, f64)>,
    pub scale: f64,
    pub width: f64,
    pub height: f64,
}

impl Layout {
    pub fn row(d: &StripDecomposition, left: f64, top: f64) -> Self {
        let widest = d
            .rect_widths
            .iter()
            .chain(d.rect_heights.iter())
            .cloned()
            .fold(0.0, f64::max);
        let scale = SCALE / widest.max(1e-9);
        let mut x = left;
        let mut origin = Vec::new();
        let mut height: f64 = 0.0;
        for k in 0..d.rect_widths.len() {
            origin.push((x, top));
            x += d.rect_widths[k] * scale + GAP;
            height = height.max(d.rect_heights[k] * scale);
        }
        Layout {
            origin,
            scale,
            width: x - GAP - left,
            height,
        }
    }

    pub fn point(&self, rect: usize, x: f64, y: f64) -> (f64, f64) {
        let (ox, oy) = self.origin[rect];
        (ox + x * self.scale, oy + y * self.scale)
    }
}

fn edge_point(d: &StripDecomposition, layout: &Layout, rect: usize, side: Side, offset: f64) -> (f64, f64) {
    match side {
        Side::Left => layout.point(rect, 0.0, offset),
        Side::Right => layout.point(rect, d.rect_widths[rect], offset),
        Side::Top => layout.point(rect, offset, 0.0),
        Side::Bottom => layout.point(rect, offset, d.rect_heights[rect]),
    }
}

fn outline(svg: &mut Svg, d: &StripDecomposition, layout: &Layout) {
    for k in 0..d.rect_widths.len() {
        let (x, y) = layout.origin[k];
        svg.rect(
            x,
            y,
            d.rect_widths[k] * layout.scale,
            d.rect_heights[k] * layout.scale,
            r##"fill="none" stroke="#000" stroke-width="1""##,
            "rectangle",
        );
        svg.text((x + d.rect_widths[k] * layout.scale / 2.0, y - 8.0), 12.0, &format!("Q{}", k + 1));
    }
}

fn require(cond: bool, field: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::MissingData(field.to_string()))
    }
}

pub fn render(spec: &DiagramSpec<'_>) -> Result<String> {
    let r = spec.record;
    require(!r.piece_map.decomposition.rect_widths.is_empty(), "piece_map.decomposition")?;
    match spec.kind {
        DiagramKind::PieceMap => {
            require(!r.piece_map.branches.is_empty(), "piece_map.branches")?;
            Ok(render_piece_map(r))
        }
        DiagramKind::Digraphs => {
            require(r.edge_maps.maps.len() == 4, "edge_maps.maps")?;
            Ok(render_digraphs(&r.matrix, &r.edge_maps))
        }
        DiagramKind::Orbits => {
            require(r.edge_maps.maps.len() == 4, "edge_maps.maps")?;
            let orbits: Vec<Orbit> = r.edge_maps.all_orbits().cloned().collect();
            Ok(render_orbits(&r.piece_map.decomposition, &orbits))
        }
        DiagramKind::ExpandedRectangles => {
            require(!r.extended.strips.is_empty(), "extended.strips")?;
            Ok(render_expanded(r, false))
        }
        DiagramKind::Complex2D => {
            require(!r.extended.strips.is_empty(), "extended.strips")?;
            require(!r.schema.generators.is_empty() || r.matrix.total() == 0, "schema.generators")?;
            Ok(render_expanded(r, true))
        }
    }
}

/// Vertical strips of each rectangle (top row) and horizontal strips (bottom
/// row), each branch coloured by its target strip.
pub fn render_piece_map(r: &ConstructionRecord) -> String {
    let d = &r.piece_map.decomposition;
    let top = Layout::row(d, MARGIN, MARGIN);
    let bottom = Layout::row(d, MARGIN, MARGIN + top.height + 2.0 * GAP + 20.0);
    let mut svg = Svg::new(top.width + 2.0 * MARGIN, bottom.origin[0].1 + bottom.height + MARGIN);
    for b in &r.piece_map.branches {
        let color = strip_color(&b.target);
        let (x, y) = top.point(b.source_rect, b.x_offset, 0.0);
        svg.rect(
            x,
            y,
            b.source_width * top.scale,
            d.rect_heights[b.source_rect] * top.scale,
            &format!(r##"fill="{color}" stroke="#555" stroke-width="0.5""##),
            "branch-source",
        );
        let (x, y) = bottom.point(b.target_rect, 0.0, b.y_offset);
        svg.rect(
            x,
            y,
            d.rect_widths[b.target_rect] * bottom.scale,
            b.target_height * bottom.scale,
            &format!(r##"fill="{color}" stroke="#555" stroke-width="0.5""##),
            "branch-target",
        );
    }
    outline(&mut svg, d, &top);
    outline(&mut svg, d, &bottom);
    svg.text(
        (MARGIN + top.width / 2.0, bottom.origin[0].1 - GAP),
        13.0,
        "f0: vertical strips to horizontal strips",
    );
    svg.finish()
}

/// One panel per edge map: the edge digraph in black over the remaining arcs
/// of the matrix digraph (or its transpose for the top and bottom maps) in gray.
pub fn render_digraphs(m: &IntMatrix, sys: &EdgeMapSystem) -> String {
    let n = m.n();
    let panel = 220.0;
    let mut svg = Svg::new(4.0 * panel + 2.0 * MARGIN, panel + 2.0 * MARGIN);
    for (p, kind) in MapKind::ALL.into_iter().enumerate() {
        let cx = MARGIN + panel * (p as f64 + 0.5);
        let cy = MARGIN + panel / 2.0;
        let radius = panel * 0.32;
        let pos = |v: usize| {
            let a = std::f64::consts::TAU * v as f64 / n as f64 - std::f64::consts::FRAC_PI_2;
            (cx + radius * a.cos(), cy + radius * a.sin())
        };
        let _ = writeln!(svg.body, r#"<g class="panel" data-map="{kind}">"#);
        svg.text((cx, MARGIN), 13.0, &kind.to_string());
        let base = if kind.is_attracting() { m.digraph() } else { m.transpose().digraph() };
        let e = sys.map(kind);
        for from in 0..n {
            for to in base.successors(from) {
                if e.successor(from) == to {
                    continue;
                }
                draw_arc(&mut svg, pos(from), pos(to), "#bbb", "arc-rest");
            }
        }
        for from in 0..n {
            draw_arc(&mut svg, pos(from), pos(e.successor(from)), "#000", "arc-edge-map");
        }
        for v in 0..n {
            svg.circle(pos(v), 11.0, r##"fill="#fff" stroke="#000""##, "vertex");
            svg.text((pos(v).0, pos(v).1 + 4.0), 11.0, &format!("{}", v + 1));
        }
        let _ = writeln!(svg.body, "</g>");
    }
    svg.finish()
}

fn draw_arc(svg: &mut Svg, a: (f64, f64), b: (f64, f64), color: &str, class: &str) {
    if a == b {
        let _ = writeln!(
            svg.body,
            r#"<path class="{class}" d="M {:.3} {:.3} c -18 -30 18 -30 4 -11" fill="none" stroke="{color}" marker-end="url(#head)"/>"#,
            a.0 - 4.0,
            a.1 - 10.0
        );
        return;
    }
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = (dx / len, dy / len);
    let start = (a.0 + ux * 12.0, a.1 + uy * 12.0);
    let end = (b.0 - ux * 12.0, b.1 - uy * 12.0);
    // bow to one side so opposite arcs stay apart
    let mid = ((start.0 + end.0) / 2.0 - uy * 10.0, (start.1 + end.1) / 2.0 + ux * 10.0);
    let _ = writeln!(
        svg.body,
        r#"<path class="{class}" d="M {:.3} {:.3} Q {:.3} {:.3} {:.3} {:.3}" fill="none" stroke="{color}" marker-end="url(#head)"/>"#,
        start.0, start.1, mid.0, mid.1, end.0, end.1
    );
}

/// Periodic points on the rectangle edges with arrows along each orbit.
pub fn render_orbits(d: &StripDecomposition, orbits: &[Orbit]) -> String {
    let layout = Layout::row(d, MARGIN, MARGIN);
    let mut svg = Svg::new(layout.width + 2.0 * MARGIN, layout.height + 2.0 * MARGIN);
    outline(&mut svg, d, &layout);
    for o in orbits {
        let color = map_color(o.map);
        let pts: Vec<(f64, f64)> = o
            .points
            .iter()
            .map(|p| edge_point(d, &layout, p.location.rect, p.location.side, p.location.offset))
            .collect();
        if pts.len() > 1 {
            for i in 0..pts.len() {
                svg.arrow(pts[i], pts[(i + 1) % pts.len()], color, "orbit-arrow");
            }
        }
        for (p, q) in o.points.iter().zip(&pts) {
            let style = if p.is_initial {
                format!(r##"fill="{color}" stroke="#000""##)
            } else {
                format!(r#"fill="{color}""#)
            };
            svg.circle(*q, 4.0, &style, "periodic-point");
        }
    }
    svg.finish()
}

fn strip_direction(kind: MapKind) -> (f64, f64) {
    match kind {
        MapKind::Left => (-1.0, 0.0),
        MapKind::Right => (1.0, 0.0),
        MapKind::Top => (0.0, -1.0),
        MapKind::Bottom => (0.0, 1.0),
    }
}

/// Rectangles with their infinite strips, truncated and faded, the switch
/// windows and the switch paths; with `identifications` also the glued
/// segment pairs and the infinite classes.
pub fn render_expanded(r: &ConstructionRecord, identifications: bool) -> String {
    let d = &r.piece_map.decomposition;
    let reach = 90.0;
    let layout = Layout::row(d, MARGIN + reach, MARGIN + reach);
    let mut svg = Svg::new(
        layout.width + 2.0 * (MARGIN + reach),
        layout.height + 2.0 * (MARGIN + reach),
    );
    for kind in MapKind::ALL {
        let (dx, dy) = strip_direction(kind);
        let _ = writeln!(
            svg.defs,
            r#"<linearGradient id="fade-{kind:?}" x1="{}" y1="{}" x2="{}" y2="{}"><stop offset="0" stop-color="{}" stop-opacity="0.6"/><stop offset="1" stop-color="{}" stop-opacity="0"/></linearGradient>"#,
            if dx < 0.0 { 1 } else { 0 },
            if dy < 0.0 { 1 } else { 0 },
            if dx > 0.0 { 1 } else { 0 },
            if dy > 0.0 { 1 } else { 0 },
            map_color(kind),
            map_color(kind)
        );
    }
    for s in &r.extended.strips {
        let a = &s.attachment;
        let width = a.len() * layout.scale;
        let length = (width * STRIP_UNITS * 10.0).clamp(20.0, reach - 10.0);
        let p0 = edge_point(d, &layout, a.rect, a.side, a.lo);
        let (dx, dy) = strip_direction(s.kind);
        let (x, y, w, h) = if dx != 0.0 {
            let x = if dx < 0.0 { p0.0 - length } else { p0.0 };
            (x, p0.1, length, width.max(1.5))
        } else {
            let y = if dy < 0.0 { p0.1 - length } else { p0.1 };
            (p0.0, y, width.max(1.5), length)
        };
        svg.rect(x, y, w, h, &format!(r#"fill="url(#fade-{:?})""#, s.kind), "infinite-strip");
        let wlo = edge_point(d, &layout, s.window.rect, s.window.side, s.window.lo);
        let whi = edge_point(d, &layout, s.window.rect, s.window.side, s.window.hi);
        svg.line(
            wlo,
            whi,
            &format!(r#"stroke="{}" stroke-width="4" stroke-opacity="0.5""#, map_color(s.kind)),
            "switch-window",
        );
    }
    for path in &r.extended.paths {
        let [(ra, sa, oa), (rb, sb, ob)] = path.endpoints;
        let a = edge_point(d, &layout, ra, sa, oa);
        let b = edge_point(d, &layout, rb, sb, ob);
        // push the bend into the rectangle so the path avoids its edge
        let inward = match sa {
            Side::Left => (12.0, 0.0),
            Side::Right => (-12.0, 0.0),
            Side::Top => (0.0, 12.0),
            Side::Bottom => (0.0, -12.0),
        };
        let pts = [a, (a.0 + inward.0, a.1 + inward.1), (b.0 + inward.0, b.1 + inward.1), b];
        svg.polyline(
            &pts,
            r##"fill="none" stroke="#444" stroke-dasharray="3 2" stroke-linejoin="round" stroke-linecap="round""##,
            "switch-path",
        );
    }
    outline(&mut svg, d, &layout);
    if identifications {
        for pair in &r.schema.pairs {
            let color = hsl_hex((fnv(&pair.source.to_le_bytes()) % 360) as f64, 0.7, 0.4);
            for s in [&pair.first, &pair.second] {
                if let crate::complex::schema::SegmentState::Edge { rect, side, lo, hi } = s {
                    let a = edge_point(d, &layout, *rect, *side, *lo);
                    let b = edge_point(d, &layout, *rect, *side, *hi);
                    svg.line(a, b, &format!(r#"stroke="{color}" stroke-width="2""#), "identified-segment");
                }
            }
        }
        for (i, c) in r.census.infinite_classes.iter().enumerate() {
            for &(rect, corner) in &c.corners {
                let w = d.rect_widths[rect];
                let h = d.rect_heights[rect];
                let (x, y) = match corner.short() {
                    "TL" => (0.0, 0.0),
                    "TR" => (w, 0.0),
                    "BL" => (0.0, h),
                    _ => (w, h),
                };
                let p = layout.point(rect, x, y);
                if i % 2 == 0 {
                    svg.rect(p.0 - 4.0, p.1 - 4.0, 8.0, 8.0, r##"fill="#000""##, "infinite-class");
                } else {
                    svg.circle(p, 4.5, r##"fill="#000""##, "infinite-class");
                }
            }
        }
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Orientation;

    #[test]
    fn colours_depend_on_label_only() {
        let l = StripLabel {
            orientation: Orientation::Horizontal,
            rect: 1,
            source: 2,
            copy: 0,
        };
        assert_eq!(strip_color(&l), strip_color(&l.clone()));
        let other = StripLabel { copy: 1, ..l };
        assert_ne!(strip_color(&l), strip_color(&other));
    }

    #[test]
    fn kinds_round_trip_by_name() {
        for k in DiagramKind::ALL {
            assert_eq!(DiagramKind::parse(k.name()), Some(k));
        }
    }
}
