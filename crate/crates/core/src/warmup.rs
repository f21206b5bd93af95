//! The integer case `[[d]]` built directly on the unit square, in planar
//! coordinates with y pointing up, and compared against the general
//! pipeline on chart-independent data.

use serde::{Deserialize, Serialize};

use crate::complex::EndSign;
use crate::edgemaps::MapKind;
use crate::error::{Error, Result};
use crate::pipeline::{construct, ConstructionRecord, PipelineConfig};
use crate::spectral::IntMatrix;

/// The piece formula exactly as written for strip `k` (1-based):
/// `(dx − k + 1, 1 − (k − 1 + y)/d)`. It flips each strip vertically.
pub fn written_formula(d: u64, k: u64, x: f64, y: f64) -> (f64, f64) {
    let d = d as f64;
    let k = k as f64;
    (d * x - k + 1.0, 1.0 - (k - 1.0 + y) / d)
}

/// Strip index (1-based) of an interior point of the square.
fn strip_of(d: u64, x: f64) -> u64 {
    ((x * d as f64).floor() as u64 + 1).min(d)
}

/// Orientation-preserving piece map: `V_k` onto `H_k`, the k-th horizontal
/// strip from the top, keeping top on top and left on left.
pub fn piece_map_plane(d: u64, x: f64, y: f64) -> (f64, f64) {
    let k = strip_of(d, x) as f64;
    let df = d as f64;
    (df * x - k + 1.0, 1.0 - (k - y) / df)
}

pub fn inverse_piece_map_plane(d: u64, x: f64, y: f64) -> (f64, f64) {
    let df = d as f64;
    let k = ((1.0 - y) * df).floor().clamp(0.0, df - 1.0) + 1.0;
    ((x + k - 1.0) / df, k - df * (1.0 - y))
}

/// Edge map of the square's boundary: `f_L` on `x = 0`, `f_R` on `x = 1`,
/// `f_T⁻¹` on `y = 1`, `f_B⁻¹` on `y = 0`, as a map of the edge coordinate.
pub fn direct_edge_map(d: u64, kind: MapKind, t: f64) -> f64 {
    let df = d as f64;
    match kind {
        MapKind::Left => 1.0 - (1.0 - t) / df,
        MapKind::Right => 1.0 - (df - t) / df,
        MapKind::Top => t / df,
        MapKind::Bottom => (t + df - 1.0) / df,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectStrip {
    pub kind: MapKind,
    /// Fixed point of the edge map, as a point of the square.
    pub base: (f64, f64),
    /// Attachment interval in the edge coordinate.
    pub attachment: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerCase {
    pub d: u64,
    pub vertical_strips: u64,
    pub horizontal_strips: u64,
    pub strip_width: f64,
    pub strips: Vec<DirectStrip>,
    pub attracting_ends: usize,
    pub repelling_ends: usize,
    pub incidence: IntMatrix,
    pub stretch_factor: u64,
    /// Whether the written formula keeps the vertical orientation of strips.
    pub written_formula_preserves_orientation: bool,
}

fn edge_point(kind: MapKind, t: f64) -> (f64, f64) {
    match kind {
        MapKind::Left => (0.0, t),
        MapKind::Right => (1.0, t),
        MapKind::Top => (t, 1.0),
        MapKind::Bottom => (t, 0.0),
    }
}

pub fn build_integer_case(d: u64) -> Result<IntegerCase> {
    if d < 2 {
        return Err(Error::invalid(format!("integer case needs d ≥ 2, got {d}")));
    }
    let df = d as f64;
    let mut strips = Vec::new();
    for kind in MapKind::ALL {
        // t ↦ a + t/d has the single fixed point a·d/(d − 1)
        let a = direct_edge_map(d, kind, 0.0);
        let fixed = a * df / (df - 1.0);
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..2 {
            lo = direct_edge_map(d, kind, lo);
            hi = direct_edge_map(d, kind, hi);
        }
        strips.push(DirectStrip {
            kind,
            base: edge_point(kind, fixed),
            attachment: (lo, hi),
        });
    }
    // An interior vertical line is carried into the left strip by f_L and
    // into the right strip by f_R, so both strips lie in one attracting end;
    // likewise one repelling end. Both ends meet the boundary at a corner and
    // survive doubling as single ends.
    let corners = |kinds: [MapKind; 2]| {
        kinds.iter().all(|k| {
            let s = strips.iter().find(|s| s.kind == *k).unwrap();
            let (x, y) = s.base;
            (x == 0.0 || x == 1.0) && (y == 0.0 || y == 1.0)
        })
    };
    let attracting_ends = if corners([MapKind::Left, MapKind::Right]) { 1 } else { 2 };
    let repelling_ends = if corners([MapKind::Top, MapKind::Bottom]) { 1 } else { 2 };
    let (_, y0) = written_formula(d, 1, 0.5 / df, 0.0);
    let (_, y1) = written_formula(d, 1, 0.5 / df, 1.0);
    // one Markov rectangle per copy of the square, each crossed d times
    let incidence = IntMatrix::from_rows(vec![vec![d, 0], vec![0, d]])?;
    Ok(IntegerCase {
        d,
        vertical_strips: d,
        horizontal_strips: d,
        strip_width: 1.0 / df,
        strips,
        attracting_ends,
        repelling_ends,
        incidence,
        stretch_factor: d,
        written_formula_preserves_orientation: y1 > y0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub d: u64,
    pub agreed: bool,
    pub differences: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

/// Compares the direct record with the general pipeline on `[[d]]`.
pub fn compare_records(direct: &IntegerCase, general: &ConstructionRecord) -> Vec<String> {
    let mut diffs = Vec::new();
    let dec = &general.piece_map.decomposition;
    let v: usize = (0..dec.rect_widths.len()).map(|k| dec.vertical_slot_count(k)).sum();
    let h: usize = (0..dec.rect_widths.len()).map(|k| dec.horizontal_slot_count(k)).sum();
    if v as u64 != direct.vertical_strips || h as u64 != direct.horizontal_strips {
        diffs.push(format!(
            "strip counts: direct {}/{} general {v}/{h}",
            direct.vertical_strips, direct.horizontal_strips
        ));
    }
    for b in &general.piece_map.branches {
        let ratio = b.source_width / dec.rect_widths[b.source_rect];
        if !close(ratio, direct.strip_width) {
            diffs.push(format!("strip width ratio {ratio} vs {}", direct.strip_width));
            break;
        }
    }
    if general.extended.strips.len() != direct.strips.len() {
        diffs.push(format!(
            "infinite strips: direct {} general {}",
            direct.strips.len(),
            general.extended.strips.len()
        ));
    }
    for s in &direct.strips {
        let direct_ratio = s.attachment.1 - s.attachment.0;
        match general.extended.strip_at(s.kind, 0) {
            Some(g) => {
                let edge = general.edge_maps.map(s.kind).edge_lengths[0];
                let ratio = g.attachment.len() / edge;
                if !close(ratio, direct_ratio) {
                    diffs.push(format!("{} attachment ratio {ratio} vs {direct_ratio}", s.kind));
                }
            }
            None => diffs.push(format!("general route has no {} strip", s.kind)),
        }
    }
    let count = |sign| {
        general
            .surface
            .ends
            .iter()
            .filter(|e| e.sign == sign)
            .map(|e| e.copies)
            .sum::<usize>()
    };
    let (a, r) = (count(EndSign::Attracting), count(EndSign::Repelling));
    if a != direct.attracting_ends || r != direct.repelling_ends {
        diffs.push(format!(
            "ends: direct {}+{} general {a}+{r}",
            direct.attracting_ends, direct.repelling_ends
        ));
    }
    if general.incidence.incidence != direct.incidence {
        diffs.push("incidence matrices differ".into());
    }
    if general.incidence.exact_stretch != Some(direct.stretch_factor) {
        diffs.push(format!(
            "stretch factor: direct {} general {:?}",
            direct.stretch_factor, general.incidence.exact_stretch
        ));
    }
    diffs
}

pub fn cross_validate(d: u64) -> Result<CrossValidation> {
    let direct = build_integer_case(d)?;
    let general = construct(&PipelineConfig::integer(d))?;
    let differences = compare_records(&direct, &general);
    Ok(CrossValidation {
        d,
        agreed: differences.is_empty(),
        differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_formula_at_strip_midline() {
        let (x, y) = written_formula(2, 1, 0.5, 0.5);
        assert_eq!((x, y), (1.0, 0.75));
        assert_eq!(piece_map_plane(2, 0.49999999, 0.5).1, 0.75);
    }

    #[test]
    fn written_formula_flips_strips() {
        assert!(!build_integer_case(3).unwrap().written_formula_preserves_orientation);
    }

    #[test]
    fn inverse_undoes_piece_map() {
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.9), (0.95, 0.05)] {
            let (u, v) = piece_map_plane(4, x, y);
            let (a, b) = inverse_piece_map_plane(4, u, v);
            assert!((a - x).abs() < 1e-12 && (b - y).abs() < 1e-12);
        }
    }

    #[test]
    fn strips_sit_at_the_two_corners() {
        let c = build_integer_case(3).unwrap();
        let base = |k| c.strips.iter().find(|s| s.kind == k).unwrap().base;
        assert_eq!(base(MapKind::Left), (0.0, 1.0));
        assert_eq!(base(MapKind::Top), (0.0, 1.0));
        assert_eq!(base(MapKind::Right), (1.0, 0.0));
        assert_eq!(base(MapKind::Bottom), (1.0, 0.0));
        let l = &c.strips[0];
        assert!((l.attachment.0 - (1.0 - 1.0 / 9.0)).abs() < 1e-15 && l.attachment.1 == 1.0);
    }

    #[test]
    fn rejects_d_below_two() {
        assert!(matches!(build_integer_case(1), Err(Error::InvalidInput(_))));
    }
}
