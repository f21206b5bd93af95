//! Frozen values, each computed first by an independent route in this file.

mod common;

use common::{power_radius, running};
use endperiodic::complex::schema::sample_escape_times;
use endperiodic::complex::LinkType;
use endperiodic::decomposition::{LengthBasis, SymbolicLength};
use endperiodic::edgemaps::{
    escape_depth_tail_plus_two_periods, max_escape_depth, periodic_points, Corner, EdgeBranch, EdgeMap, MapKind,
};
use endperiodic::pipeline::{construct, PipelineConfig};
use endperiodic::warmup::{direct_edge_map, written_formula};
use endperiodic::IntMatrix;

fn rows(r: Vec<Vec<u64>>) -> IntMatrix {
    IntMatrix::from_rows(r).unwrap()
}

#[test]
fn single_branch_fixed_point_matches_iteration() {
    // x ↦ 0.3 + x/2 on an edge of length 1
    let e = EdgeMap {
        kind: MapKind::Left,
        lambda: 2.0,
        edge_lengths: vec![1.0],
        edge_lengths_symbolic: vec![SymbolicLength::unit(1, 0, LengthBasis::Height)],
        branches: vec![EdgeBranch {
            rect: 0,
            target: 0,
            offset: 0.3,
            offset_symbolic: SymbolicLength::zero(1, LengthBasis::Height),
            lands_first: false,
            lands_last: false,
            piece_branch: 0,
        }],
    };
    let mut x: f64 = 0.5;
    for _ in 0..200 {
        x = 0.3 + x / 2.0;
    }
    assert!((x - 0.6).abs() < 1e-12);
    let orbits = periodic_points(&e);
    assert_eq!(orbits.len(), 1);
    let p = &orbits[0].points[0];
    assert!(!p.is_corner);
    assert!((p.location.offset - x).abs() < 1e-9);
}

#[test]
fn escape_needs_three_periods_minus_one() {
    // every rectangle is periodic with period 2 and there is no tail, so the
    // tail-plus-two-periods bound is 4; sampled boundary points need 5 steps
    let r = construct(&PipelineConfig::matrix(rows(vec![vec![0, 2], vec![1, 0]]))).unwrap();
    assert_eq!(r.edge_maps.max_tail(), 0);
    assert_eq!(r.edge_maps.max_period(), 2);
    assert_eq!(escape_depth_tail_plus_two_periods(&r.edge_maps), 4);
    assert_eq!(max_escape_depth(&r.edge_maps), 5);
    let worst = MapKind::ALL
        .iter()
        .map(|&k| sample_escape_times(&r.edge_maps, &r.extended, k, 2000, r.certificates.depth_cap).unwrap())
        .max()
        .unwrap();
    assert_eq!(worst, 5);
}

#[test]
fn integer_case_escape_depth_is_two() {
    let r = construct(&PipelineConfig::integer(3)).unwrap();
    assert_eq!(r.certificates.escape_depth, 2);
    assert_eq!(r.certificates.nesting_period, 1);
}

#[test]
fn running_example_depths() {
    let r = construct(&PipelineConfig::matrix(running())).unwrap();
    assert_eq!(r.certificates.nesting_period % 4, 0);
    assert_eq!(r.certificates.nesting_period, 64);
    assert_eq!(r.certificates.escape_depth, 13);
    assert_eq!(r.certificates.depth_cap, 13 + 3 * 64);
}

#[test]
fn integer_case_classes_sit_at_opposite_corners() {
    for d in [2u64, 3, 5] {
        let r = construct(&PipelineConfig::integer(d)).unwrap();
        let classes = &r.census.infinite_classes;
        assert_eq!(classes.len(), 2);
        let mut corners: Vec<Corner> = classes.iter().flat_map(|c| c.corners.iter().map(|&(_, k)| k)).collect();
        corners.sort();
        corners.dedup();
        // chart y points down, so the planar (0,0) and (1,1) are these two
        assert_eq!(corners, vec![Corner::TopRight, Corner::BottomLeft]);
        assert!(classes.iter().all(|c| c.link == LinkType::Line));
    }
}

#[test]
fn integer_case_attachments_have_length_one_over_d_squared() {
    for d in 2..=6u64 {
        let r = construct(&PipelineConfig::integer(d)).unwrap();
        assert_eq!(r.extended.strips.len(), 4);
        for s in &r.extended.strips {
            let expect = 1.0 / (d * d) as f64;
            assert!((s.attachment.len() - expect).abs() < 1e-12, "{} {}", s.kind, s.attachment.len());
        }
        // two steps of the direct left map from the whole edge
        let lo = direct_edge_map(d, MapKind::Left, direct_edge_map(d, MapKind::Left, 0.0));
        assert!((1.0 - lo - 1.0 / (d * d) as f64).abs() < 1e-12);
    }
}

#[test]
fn written_formula_reverses_strips() {
    // strip k = 2 of d = 3: bottom of the strip goes above its top
    let (_, bottom) = written_formula(3, 2, 0.5, 0.0);
    let (_, top) = written_formula(3, 2, 0.5, 1.0);
    assert!((bottom - 2.0 / 3.0).abs() < 1e-15);
    assert!((top - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn doubled_running_example_keeps_lambda() {
    let r = construct(&PipelineConfig::matrix(running())).unwrap();
    assert_eq!(r.incidence.incidence.n(), 8);
    let rho = power_radius(&r.incidence.incidence);
    assert!((rho - 1.785_370_843_671_46).abs() < 1e-9);
    assert!((rho - r.incidence.spectral_radius).abs() < 1e-9);
}

#[test]
fn square_root_two_from_lift() {
    let r = construct(&PipelineConfig::lift(IntMatrix::scalar(2), 2)).unwrap();
    assert_eq!(r.matrix.rows(), vec![vec![0, 2], vec![1, 0]]);
    let s = r.incidence.spectral_radius;
    assert!((s * s - 2.0).abs() < 1e-9);
}

#[test]
fn running_example_reaches_every_rectangle_from_the_first() {
    // boolean powers of M until column 1 is positive
    let m = running();
    let n = m.n();
    let mut reach: Vec<bool> = (0..n).map(|i| m.get(i, 0) > 0).collect();
    let mut k = 1;
    while !reach.iter().all(|&b| b) {
        reach = (0..n).map(|i| (0..n).any(|j| m.get(i, j) > 0 && reach[j])).collect();
        k += 1;
    }
    let r = construct(&PipelineConfig::matrix(m)).unwrap();
    assert_eq!(r.surface.connectivity.reachability_power, Some(k));
    assert_eq!(k, 3);
    assert!(r.surface.connected);
}

#[test]
fn running_example_census() {
    let r = construct(&PipelineConfig::matrix(running())).unwrap();
    assert_eq!(r.census.infinite_classes.len(), 6);
    assert!(r.census.infinite_classes.iter().all(|c| c.link == LinkType::Line));
    assert_eq!(r.surface.attracting_ends, 1);
    assert_eq!(r.surface.repelling_ends, 1);
}
