mod common;

use std::collections::BTreeSet;

use common::bisect;
use endperiodic::complex::schema::check_contraction;
use endperiodic::complex::EndSign;
use endperiodic::edgemaps::check_corner_duality;
use endperiodic::pipeline::{construct, ConstructionRecord, PipelineConfig};
use endperiodic::render::{render, DiagramKind, DiagramSpec};
use endperiodic::spectral::{block_lift, char_poly, determinant, is_irreducible, is_primitive, perron_eigendata};
use endperiodic::IntMatrix;
use num_traits::ToPrimitive;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn any_matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..=4).prop_flat_map(|n| {
        proptest::collection::vec(0u64..=2, n * n)
            .prop_map(move |v| IntMatrix::from_rows(v.chunks(n).map(|r| r.to_vec()).collect()).unwrap())
    })
}

fn irreducible_matrix() -> impl Strategy<Value = IntMatrix> {
    any_matrix().prop_filter("irreducible with λ > 1", |m| {
        m.total() > 0 && is_irreducible(m).unwrap_or(false) && !m.is_permutation()
    })
}

fn record(m: &IntMatrix) -> ConstructionRecord {
    construct(&PipelineConfig::matrix(m.clone())).unwrap_or_else(|e| panic!("{:?}: {e}", m.rows()))
}

fn residual(m: &IntMatrix, v: &[f64], lambda: f64, transpose: bool) -> f64 {
    let n = m.n();
    (0..n)
        .map(|i| {
            let mv: f64 = (0..n)
                .map(|j| if transpose { m.get(j, i) } else { m.get(i, j) } as f64 * v[j])
                .sum();
            (mv - lambda * v[i]).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn primitive_implies_irreducible(m in any_matrix()) {
        match is_primitive(&m) {
            Ok(true) => prop_assert!(is_irreducible(&m).unwrap()),
            Ok(false) => {}
            Err(_) => prop_assert!(!is_irreducible(&m).unwrap()),
        }
    }

    #[test]
    fn determinant_is_signed_constant_term(m in any_matrix()) {
        let p = char_poly(&m);
        let sign = if m.n() % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(determinant(&m), &p.coefficients[0] * sign);
    }

    #[test]
    fn perron_data_is_an_eigenpair_at_a_root(m in irreducible_matrix()) {
        let e = perron_eigendata(&m, TOL).unwrap();
        prop_assert!(residual(&m, &e.eta, e.lambda, false) <= 1e-8 * e.lambda);
        prop_assert!(residual(&m, &e.omega, e.lambda, true) <= 1e-8 * e.lambda);
        let min_row = (0..m.n()).map(|i| m.row_sum(i)).min().unwrap() as f64;
        prop_assert!(e.lambda >= min_row - TOL);
        let coeffs: Vec<i64> = char_poly(&m).coefficients.iter().map(|c| c.to_i64().unwrap()).collect();
        let root = bisect(&coeffs, e.lambda - 1e-6, e.lambda + 1e-6);
        prop_assert!((root - e.lambda).abs() <= 1e-9, "λ {} root {}", e.lambda, root);
    }

    #[test]
    fn lifts_take_kth_roots(m in irreducible_matrix(), k in 1usize..=3) {
        let rho = perron_eigendata(&m, TOL).unwrap().lambda;
        let lifted = perron_eigendata(&block_lift(&m, k).unwrap(), TOL).unwrap().lambda;
        prop_assert!((lifted.powi(k as i32) - rho).abs() <= 10.0 * TOL * rho.max(1.0));
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn strips_partition_and_scale(m in irreducible_matrix()) {
        let r = record(&m);
        let d = &r.piece_map.decomposition;
        let lambda = r.spectral.eigen.lambda;
        d.check_partition().unwrap();
        for k in 0..m.n() {
            for (vals, full) in [
                (&d.vertical_boundary_values[k], d.rect_widths[k]),
                (&d.horizontal_boundary_values[k], d.rect_heights[k]),
            ] {
                prop_assert!(vals.windows(2).all(|w| w[0] < w[1]));
                prop_assert!((vals.last().unwrap() - full).abs() <= 1e-9 * full.max(1.0));
            }
        }
        let hit: BTreeSet<(usize, usize)> = r.piece_map.branches.iter().map(|b| (b.target_rect, b.target_slot)).collect();
        let slots: usize = (0..m.n()).map(|k| d.horizontal_slot_count(k)).sum();
        prop_assert_eq!(hit.len(), r.piece_map.branches.len());
        prop_assert_eq!(hit.len(), slots);
        for b in &r.piece_map.branches {
            let w = d.rect_widths[b.target_rect] / b.source_width;
            let h = b.target_height / d.rect_heights[b.source_rect];
            prop_assert!((w - lambda).abs() <= 1e-6 * lambda);
            prop_assert!((h * lambda - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn corner_selection_gives_dual_corner_orbits(m in irreducible_matrix()) {
        let r = record(&m);
        prop_assert!(check_corner_duality(&r.edge_maps).is_ok());
    }

    #[test]
    fn gluing_certificates_hold(m in irreducible_matrix()) {
        let r = record(&m);
        let lambda = r.spectral.eigen.lambda;
        check_contraction(&r.schema, lambda).unwrap();
        for t in &r.schema.periodic_tails {
            prop_assert!(t.shift_per_period >= 1);
        }
        let corners = r.extended.strips.len() + 4 * m.n();
        prop_assert!(r.census.infinite_classes.len() <= 2 * corners);
        for end in &r.surface.ends {
            for o in &end.orbits {
                prop_assert_eq!(o.map.is_attracting(), end.sign == EndSign::Attracting);
            }
        }
        prop_assert!((r.incidence.spectral_radius - lambda).abs() <= 1e-9 * lambda);
    }

    #[test]
    fn records_are_deterministic(m in irreducible_matrix()) {
        let a = record(&m);
        let b = record(&m);
        prop_assert_eq!(&a.hash, &b.hash);
        prop_assert_eq!(a.to_json(), b.to_json());
        for kind in DiagramKind::ALL {
            let spec = DiagramSpec { kind, record: &a };
            let svg = render(&spec).unwrap();
            prop_assert_eq!(&svg, &render(&DiagramSpec { kind, record: &b }).unwrap());
            prop_assert!(roxmltree::Document::parse(&svg).is_ok());
        }
    }
}
