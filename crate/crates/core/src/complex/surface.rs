//! Ends, connectedness, doubling and genus insertion of the assembled surface.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{union_find_components, ClassCensus, IdentificationSchema, LinkType, PointKey, SegmentState};
use crate::edgemaps::{Corner, EdgeMapSystem, MapKind, OrbitRef};
use crate::error::{Error, Result};
use crate::spectral::{block_lift, first_positive_column_power, is_primitive, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndSign {
    Attracting,
    Repelling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct End {
    pub id: usize,
    pub sign: EndSign,
    pub orbits: Vec<OrbitRef>,
    /// A neighbourhood of the end contains boundary rays, so doubling joins
    /// the end with its mirror copy.
    pub meets_boundary: bool,
    /// Number of ends of the doubled surface coming from this end.
    pub copies: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Connected,
    Disconnected,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayFamily {
    /// Left rays of the corner boundary components.
    A,
    /// Top rays of the corner boundary components.
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayGluing {
    pub family: RayFamily,
    pub ray: usize,
    /// Index of the mirror ray it is glued to.
    pub mirror_ray: usize,
    pub component: usize,
    pub mirror_component: usize,
}

/// Boundary regluing for irreducible but imprimitive input: the components
/// of the 2-complex are permuted cyclically by the map, and the corner rays
/// are glued to their mirrors with an index shift on the B family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regluing {
    pub k: Option<usize>,
    /// Components in the cyclic order in which the map permutes them.
    pub component_order: Vec<usize>,
    /// Rectangle carrying each corner ray, in orbit order.
    pub ray_rects: Vec<usize>,
    pub gluings: Vec<RayGluing>,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub status: Connectivity,
    /// Rectangles grouped into components of the undoubled 2-complex.
    pub components: Vec<Vec<usize>>,
    /// Smallest power whose first column is positive, for primitive input.
    pub reachability_power: Option<usize>,
    pub regluing: Option<Regluing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenusInsertion {
    /// Chosen point of the invariant set: the corner of the first rectangle
    /// on the periodic boundary line.
    pub rect: usize,
    pub corner: Corner,
    pub orbit: OrbitRef,
    pub ends_accumulated_by_genus: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceOptions {
    pub insert_genus: bool,
    pub weak_perron_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub ends: Vec<End>,
    pub attracting_ends: usize,
    pub repelling_ends: usize,
    pub infinite_type: bool,
    pub genus_insertion_applied: bool,
    pub genus_insertion: Option<GenusInsertion>,
    pub connectivity: ConnectivityReport,
    pub connected: bool,
    pub doubled: bool,
    pub nesting_period: u64,
    pub escape_depth: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn orbit_rect(sys: &EdgeMapSystem, kind: MapKind, orbit: usize, position: usize) -> usize {
    let o = &sys.orbits_of(kind)[orbit];
    o.points[position % o.period()].location.rect
}

fn state_rect(sys: &EdgeMapSystem, s: &SegmentState) -> usize {
    match s {
        SegmentState::Edge { rect, .. } => *rect,
        SegmentState::Strip {
            kind,
            orbit,
            window,
            steps,
            ..
        } => orbit_rect(sys, *kind, *orbit, window + steps),
    }
}

fn key_rect(sys: &EdgeMapSystem, k: &PointKey) -> usize {
    match k {
        PointKey::Corner { rect, .. } | PointKey::Edge { rect, .. } => *rect,
        PointKey::Strip {
            kind,
            orbit,
            window,
            steps,
            ..
        } => orbit_rect(sys, *kind, *orbit, window + steps),
    }
}

/// Rectangles joined by some identification, at every depth and through one
/// full common period of the strip translation afterwards.
pub fn rect_components(sys: &EdgeMapSystem, schema: &IdentificationSchema) -> Vec<Vec<usize>> {
    let n = sys.map(MapKind::Left).n();
    let mut edges = Vec::new();
    for pair in &schema.pairs {
        let a = state_rect(sys, &pair.first);
        let b = state_rect(sys, &pair.second);
        edges.push((a, b));
        if let (
            SegmentState::Strip {
                kind: ka,
                orbit: oa,
                window: wa,
                steps: sa,
                escaped: true,
                ..
            },
            SegmentState::Strip {
                kind: kb,
                orbit: ob,
                window: wb,
                steps: sb,
                escaped: true,
                ..
            },
        ) = (&pair.first, &pair.second)
        {
            let pa = sys.orbits_of(*ka)[*oa].period();
            let pb = sys.orbits_of(*kb)[*ob].period();
            let l = pa / gcd(pa, pb) * pb;
            for t in 0..l {
                edges.push((
                    orbit_rect(sys, *ka, *oa, wa + sa + t),
                    orbit_rect(sys, *kb, *ob, wb + sb + t),
                ));
            }
        }
    }
    for ep in &schema.endpoint_pairs {
        edges.push((key_rect(sys, &ep.first), key_rect(sys, &ep.second)));
    }
    let comp = union_find_components(n, edges);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (r, c) in comp.into_iter().enumerate() {
        groups.entry(c).or_default().push(r);
    }
    groups.into_values().collect()
}

/// Ends of the 2-complex: strip orbits glued to one another by escaped
/// generator segments form one end.
pub fn group_ends(sys: &EdgeMapSystem, schema: &IdentificationSchema, census: &ClassCensus) -> Vec<End> {
    let refs: Vec<OrbitRef> = MapKind::ALL
        .iter()
        .flat_map(|&k| (0..sys.orbits_of(k).len()).map(move |o| OrbitRef { map: k, orbit: o }))
        .collect();
    let index = |r: OrbitRef| refs.iter().position(|x| *x == r).unwrap();
    let links = schema.periodic_tails.iter().map(|t| {
        (
            index(OrbitRef {
                map: t.first_orbit.0,
                orbit: t.first_orbit.1,
            }),
            index(OrbitRef {
                map: t.second_orbit.0,
                orbit: t.second_orbit.1,
            }),
        )
    });
    let comp = union_find_components(refs.len(), links);
    let mut groups: BTreeMap<usize, Vec<OrbitRef>> = BTreeMap::new();
    for (i, c) in comp.into_iter().enumerate() {
        groups.entry(c).or_default().push(refs[i]);
    }
    let in_infinite_class = |r: &OrbitRef| {
        census
            .infinite_classes
            .iter()
            .any(|c| c.strip_orbits.contains(&(r.map, r.orbit)))
    };
    groups
        .into_values()
        .enumerate()
        .map(|(id, orbits)| {
            let meets_boundary = orbits
                .iter()
                .any(|r| sys.orbit(*r).corner.is_some() || in_infinite_class(r));
            End {
                id,
                sign: if orbits[0].map.is_attracting() {
                    EndSign::Attracting
                } else {
                    EndSign::Repelling
                },
                orbits,
                meets_boundary,
                copies: if meets_boundary { 1 } else { 2 },
            }
        })
        .collect()
}

/// Every end holds strip orbits of a single sign.
pub fn check_end_signs(ends: &[End]) -> Result<()> {
    for e in ends {
        if e.orbits.is_empty() {
            return Err(Error::verification("end-signs", format!("end {} has no strip orbit", e.id)));
        }
        let attracting = e.orbits[0].map.is_attracting();
        if e.orbits.iter().any(|o| o.map.is_attracting() != attracting) {
            return Err(Error::verification(
                "end-signs",
                format!("end {} mixes attracting and repelling strips", e.id),
            ));
        }
    }
    Ok(())
}

fn check_lift_shape(m: &IntMatrix, k: usize) -> Result<()> {
    let n = m.n();
    if k == 0 || n % k != 0 {
        return Err(Error::precondition(format!("a {n}×{n} matrix is not a {k}-block lift")));
    }
    let b = n / k;
    let mut base = IntMatrix::zeros(b);
    for i in 0..b {
        for j in 0..b {
            base.set(i, j, m.get(i, n - b + j));
        }
    }
    if block_lift(&base, k)? != *m {
        return Err(Error::precondition(format!("matrix is not a {k}-block lift of its top-right block")));
    }
    Ok(())
}

fn reglue(
    m: &IntMatrix,
    sys: &EdgeMapSystem,
    components: &[Vec<usize>],
    k: Option<usize>,
) -> Result<Regluing> {
    let n = m.n();
    let mut comp_of = vec![0; n];
    for (c, rs) in components.iter().enumerate() {
        for &r in rs {
            comp_of[r] = c;
        }
    }
    // cyclic order: the image of a component under the map is one component
    let g = m.digraph();
    let mut order = vec![comp_of[0]];
    let mut cyclic = true;
    loop {
        let cur = *order.last().unwrap();
        let mut next = None;
        for &r in &components[cur] {
            for s in g.successors(r) {
                match next {
                    None => next = Some(comp_of[s]),
                    Some(c) if c != comp_of[s] => cyclic = false,
                    _ => {}
                }
            }
        }
        let Some(next) = next else {
            cyclic = false;
            break;
        };
        if next == order[0] {
            break;
        }
        if order.contains(&next) {
            cyclic = false;
            break;
        }
        order.push(next);
    }
    if order.len() != components.len() {
        cyclic = false;
    }

    let (orbit, _) = sys
        .orbit_through(MapKind::Left, 0)
        .ok_or_else(|| Error::internal("no periodic point on the left edge of Q1"))?;
    let o = &sys.orbits_of(MapKind::Left)[orbit];
    let rays: Vec<usize> = (0..o.period()).map(|j| orbit_rect(sys, MapKind::Left, orbit, j)).collect();
    let h = rays.len();
    let mut gluings = Vec::new();
    // nodes: component c of the surface is 2c, its mirror 2c + 1
    let mut edges = Vec::new();
    for i in 0..h {
        let (c, c_next) = (comp_of[rays[i]], comp_of[rays[(i + 1) % h]]);
        gluings.push(RayGluing {
            family: RayFamily::A,
            ray: i,
            mirror_ray: i,
            component: c,
            mirror_component: c,
        });
        gluings.push(RayGluing {
            family: RayFamily::B,
            ray: i,
            mirror_ray: (i + 1) % h,
            component: c,
            mirror_component: c_next,
        });
        edges.push((2 * c, 2 * c + 1));
        edges.push((2 * c, 2 * c_next + 1));
    }
    let comp = union_find_components(2 * components.len(), edges);
    let connected = cyclic && comp.iter().all(|&c| c == comp[0]);
    Ok(Regluing {
        k,
        component_order: order,
        ray_rects: rays,
        gluings,
        connected,
    })
}

pub fn assess_connectivity(
    m: &IntMatrix,
    sys: &EdgeMapSystem,
    schema: &IdentificationSchema,
    weak_perron_k: Option<usize>,
) -> Result<ConnectivityReport> {
    let components = rect_components(sys, schema);
    let primitive = is_primitive(m)?;
    if let Some(k) = weak_perron_k {
        check_lift_shape(m, k)?;
    }
    if primitive {
        let power = first_positive_column_power(m, 0);
        if power.is_none() || components.len() != 1 {
            return Err(Error::verification(
                "connectedness",
                format!(
                    "primitive matrix but the identifications leave {} components",
                    components.len()
                ),
            ));
        }
        return Ok(ConnectivityReport {
            status: Connectivity::Connected,
            components,
            reachability_power: power,
            regluing: None,
        });
    }
    if components.len() == 1 {
        return Ok(ConnectivityReport {
            status: Connectivity::Connected,
            components,
            reachability_power: None,
            regluing: None,
        });
    }
    if let Some(k) = weak_perron_k {
        if components.len() % k != 0 {
            return Err(Error::verification(
                "connectedness",
                format!("{} components are not permuted in {k}-cycles", components.len()),
            ));
        }
    }
    let regluing = reglue(m, sys, &components, weak_perron_k)?;
    let status = if regluing.connected {
        Connectivity::Connected
    } else {
        Connectivity::Undetermined
    };
    Ok(ConnectivityReport {
        status,
        components,
        reachability_power: None,
        regluing: Some(regluing),
    })
}

fn choose_genus_point(sys: &EdgeMapSystem) -> Option<GenusInsertion> {
    let (orbit, position) = sys.orbit_through(MapKind::Left, 0)?;
    let o = &sys.orbits_of(MapKind::Left)[orbit];
    let pt = &o.points[position];
    let corner = pt.corner?;
    Some(GenusInsertion {
        rect: 0,
        corner,
        orbit: OrbitRef {
            map: MapKind::Left,
            orbit,
        },
        ends_accumulated_by_genus: 2,
    })
}

pub fn assemble_surface(
    m: &IntMatrix,
    sys: &EdgeMapSystem,
    schema: &IdentificationSchema,
    census: &ClassCensus,
    options: SurfaceOptions,
    nesting_period: u64,
) -> Result<SurfaceReport> {
    let ends = group_ends(sys, schema, census);
    check_end_signs(&ends)?;
    let connectivity = assess_connectivity(m, sys, schema, options.weak_perron_k)?;
    let genus_insertion = if options.insert_genus {
        Some(choose_genus_point(sys).ok_or_else(|| {
            Error::precondition("genus insertion needs a corner periodic point on Q1; use corner selection")
        })?)
    } else {
        None
    };
    let circles = census
        .infinite_classes
        .iter()
        .any(|c| c.link == LinkType::CountableCircles);
    let count = |sign| ends.iter().filter(|e| e.sign == sign).map(|e| e.copies).sum();
    Ok(SurfaceReport {
        attracting_ends: count(EndSign::Attracting),
        repelling_ends: count(EndSign::Repelling),
        ends,
        infinite_type: genus_insertion.is_some() || circles,
        genus_insertion_applied: genus_insertion.is_some(),
        genus_insertion,
        connected: connectivity.status == Connectivity::Connected,
        connectivity,
        doubled: true,
        nesting_period,
        escape_depth: schema.escape_depth,
    })
}
