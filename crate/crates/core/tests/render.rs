mod common;

use std::path::PathBuf;

use common::running;
use endperiodic::pipeline::{construct, PipelineConfig};
use endperiodic::render::{render, render_orbits, DiagramKind, DiagramSpec};
use endperiodic::Error;

fn count(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

#[test]
fn piece_map_has_one_region_per_branch() {
    let r = construct(&PipelineConfig::matrix(running())).unwrap();
    let svg = render(&DiagramSpec {
        kind: DiagramKind::PieceMap,
        record: &r,
    })
    .unwrap();
    assert_eq!(count(&svg, "branch-source"), r.matrix.total() as usize);
    assert_eq!(count(&svg, "branch-target"), 7);
}

#[test]
fn digraph_panels() {
    let r = construct(&PipelineConfig::matrix(running())).unwrap();
    let svg = render(&DiagramSpec {
        kind: DiagramKind::Digraphs,
        record: &r,
    })
    .unwrap();
    assert_eq!(count(&svg, "panel"), 4);
    assert_eq!(count(&svg, "vertex"), 4 * 4);
    assert_eq!(count(&svg, "arc-edge-map"), 4 * 4);
    // distinct arcs of M: 1→2, 1→4, 2→4, 3→1, 4→2, 4→3; the same count for Mᵀ
    let edge_arcs = 6;
    let gray = count(&svg, "arc-rest");
    let black_in_digraph = 4 * 4;
    assert_eq!(gray + black_in_digraph, 4 * edge_arcs);
}

#[test]
fn no_orbits_no_arrows() {
    let r = construct(&PipelineConfig::integer(2)).unwrap();
    let svg = render_orbits(&r.piece_map.decomposition, &[]);
    assert!(roxmltree::Document::parse(&svg).is_ok());
    assert_eq!(count(&svg, "orbit-arrow"), 0);
    assert_eq!(count(&svg, "periodic-point"), 0);
}

#[test]
fn missing_branches_are_named() {
    let mut r = construct(&PipelineConfig::integer(2)).unwrap();
    r.piece_map.branches.clear();
    match render(&DiagramSpec {
        kind: DiagramKind::PieceMap,
        record: &r,
    }) {
        Err(Error::MissingData(field)) => assert_eq!(field, "piece_map.branches"),
        other => panic!("{other:?}"),
    }
}

/// Set UPDATE_GOLDEN=1 to rewrite the fixtures after an intended change.
#[test]
fn golden_figures() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, config) in [
        ("running", PipelineConfig::matrix(running())),
        ("integer3", PipelineConfig::integer(3)),
    ] {
        let r = construct(&config).unwrap();
        for kind in DiagramKind::ALL {
            let svg = render(&DiagramSpec { kind, record: &r }).unwrap();
            let path = dir.join(format!("{name}-{}.svg", kind.name()));
            if update {
                std::fs::create_dir_all(&dir).unwrap();
                std::fs::write(&path, &svg).unwrap();
                continue;
            }
            let golden = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            assert!(golden == svg, "{} differs from the fixture", path.display());
        }
    }
}
