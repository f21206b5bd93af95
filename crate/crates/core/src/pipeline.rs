//! End-to-end construction from a matrix to a hashed construction record,
//! and re-verification of stored records.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex::schema::{check_contraction, check_segment_classes, sample_escape_times};
use crate::complex::{
    assemble_surface, attach_strips, build_extended_map, classify_classes, enumerate_identifications, ClassCensus,
    ExtendedPieceMap, IdentificationSchema, SurfaceOptions, SurfaceReport,
};
use crate::decomposition::{build_decomposition, corner_selection, piece_map, PieceMap};
use crate::edgemaps::{
    analyze_edge_maps, check_corner_duality, escape_depth_tail_plus_two_periods, fixed_point_residual,
    max_escape_depth, nesting_period, EdgeMapSystem, MapKind,
};
use crate::error::{Error, Result};
use crate::markov::{check_incidence, check_incidence_structure, incidence_matrix, IncidenceReport};
use crate::par::{self, Execution};
use crate::spectral::{
    block_lift, char_poly, determinant, imprimitivity_index, is_irreducible, perron_eigendata, IntMatrix, PerronData,
    DEFAULT_TOL,
};

pub const SCHEMA_VERSION: &str = "endperiodic-record/1";

/// Depth caps beyond this are refused rather than enumerated.
pub const DEPTH_LIMIT: usize = 100_000;

pub const ESCAPE_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    Matrix(IntMatrix),
    Integer(u64),
    Lift { base: IntMatrix, k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSpec,
    pub tol: f64,
    pub depth: Option<usize>,
    pub corner_selection: bool,
    pub insert_genus: bool,
}

impl PipelineConfig {
    pub fn new(input: InputSpec) -> Self {
        PipelineConfig {
            input,
            tol: DEFAULT_TOL,
            depth: None,
            corner_selection: true,
            insert_genus: true,
        }
    }

    pub fn matrix(m: IntMatrix) -> Self {
        Self::new(InputSpec::Matrix(m))
    }

    pub fn integer(d: u64) -> Self {
        Self::new(InputSpec::Integer(d))
    }

    pub fn lift(base: IntMatrix, k: usize) -> Self {
        Self::new(InputSpec::Lift { base, k })
    }

    /// The matrix actually fed to the construction, with the lift index.
    pub fn resolve(&self) -> Result<(IntMatrix, Option<usize>)> {
        match &self.input {
            InputSpec::Matrix(m) => Ok((m.clone(), None)),
            InputSpec::Integer(d) => {
                if *d < 2 {
                    return Err(Error::invalid(format!("integer case needs d ≥ 2, got {d}")));
                }
                Ok((IntMatrix::scalar(*d), None))
            }
            InputSpec::Lift { base, k } => {
                if *k == 0 {
                    return Err(Error::invalid("lift index must be positive"));
                }
                Ok((block_lift(base, *k)?, Some(*k)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub escape_depth: usize,
    /// Tail plus twice the period, for comparison with the certified depth.
    pub escape_depth_tail_two_periods: usize,
    pub observed_escape_depth: usize,
    pub sampled_escape_depth: usize,
    pub nesting_period: u64,
    pub depth_cap: usize,
    pub max_fixed_point_residual: f64,
    pub segment_images: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub irreducible: bool,
    pub primitive: bool,
    pub imprimitivity_index: usize,
    pub char_poly: String,
    pub determinant: String,
    pub eigen: PerronData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRecord {
    pub schema_version: String,
    /// Wall-clock creation time; the only field left out of the hash.
    pub created_at: Option<String>,
    pub config: PipelineConfig,
    pub matrix: IntMatrix,
    pub spectral: SpectralSummary,
    pub piece_map: PieceMap,
    pub edge_maps: EdgeMapSystem,
    pub extended: ExtendedPieceMap,
    pub schema: IdentificationSchema,
    pub census: ClassCensus,
    pub surface: SurfaceReport,
    pub incidence: IncidenceReport,
    pub certificates: Certificates,
    pub hash: String,
}

impl ConstructionRecord {
    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.created_at = None;
        copy.hash = String::new();
        let bytes = serde_json::to_vec(&copy).expect("records serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("record is not JSON: {e}")))?;
        match v.get("schema_version").and_then(|s| s.as_str()) {
            Some(SCHEMA_VERSION) => {}
            Some(other) => {
                return Err(Error::invalid(format!(
                    "record schema version {other} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(Error::invalid("record has no schema version")),
        }
        serde_json::from_value(v).map_err(|e| Error::invalid(format!("malformed record: {e}")))
    }
}

fn check(checks: &mut Vec<Check>, name: &str, r: Result<String>) -> Result<()> {
    match r {
        Ok(detail) => {
            checks.push(Check {
                name: name.to_string(),
                passed: true,
                detail,
            });
            Ok(())
        }
        Err(e) => Err(e),
    }
}

pub fn construct(config: &PipelineConfig) -> Result<ConstructionRecord> {
    let (m, lift_k) = config.resolve()?;
    if !(config.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if !is_irreducible(&m)? {
        return Err(Error::precondition("matrix is not irreducible"));
    }
    if m.total() == 0 {
        return Err(Error::precondition("the zero matrix has λ = 0; the construction needs λ > 1"));
    }
    if m.is_permutation() {
        return Err(Error::precondition(
            "permutation matrices have λ = 1; the construction needs λ > 1",
        ));
    }
    let eigen = perron_eigendata(&m, config.tol)?;
    let index = imprimitivity_index(&m)?;
    let spectral = SpectralSummary {
        irreducible: true,
        primitive: index == 1,
        imprimitivity_index: index,
        char_poly: char_poly(&m).to_string(),
        determinant: determinant(&m).to_string(),
        eigen: eigen.clone(),
    };

    let perms = if config.corner_selection {
        Some(corner_selection(&m)?)
    } else {
        None
    };
    let (sigma, tau) = match perms {
        Some(p) => (Some(p.sigma), Some(p.tau)),
        None => (None, None),
    };
    let decomposition = build_decomposition(&m, &eigen, sigma, tau)?;
    let pm = piece_map(&decomposition)?;
    let sys = analyze_edge_maps(&pm)?;
    let mut checks = Vec::new();
    check(&mut checks, "corner-duality", check_corner_duality(&sys).map(|_| "partners found".into()))?;

    let mut max_residual: f64 = 0.0;
    for o in sys.all_orbits() {
        for pt in &o.points {
            max_residual = max_residual.max(fixed_point_residual(sys.map(o.map), pt));
        }
    }
    if max_residual > 1e-9 {
        return Err(Error::verification(
            "fixed-point-residual",
            format!("periodic point residual {max_residual:e}"),
        ));
    }

    let escape_depth = max_escape_depth(&sys);
    let period = nesting_period(&sys)?;
    let depth_cap = match config.depth {
        Some(d) => d,
        None => (period as usize)
            .checked_mul(3)
            .and_then(|x| x.checked_add(escape_depth))
            .filter(|&d| d <= DEPTH_LIMIT)
            .ok_or_else(|| Error::invalid("default depth cap exceeds the depth limit; pass an explicit depth"))?,
    };
    if depth_cap > DEPTH_LIMIT {
        return Err(Error::invalid(format!("depth cap {depth_cap} exceeds {DEPTH_LIMIT}")));
    }

    let strips = attach_strips(&pm, &sys)?;
    let ext = build_extended_map(&pm, strips, &sys)?;
    let schema = enumerate_identifications(&pm, &sys, &ext, escape_depth, depth_cap)?;
    // generator depth counts the first step onto the boundary
    if schema.observed_escape_depth > escape_depth + 1 {
        return Err(Error::verification(
            "escape-depth",
            format!(
                "a generator escaped at depth {} beyond the bound {}",
                schema.observed_escape_depth,
                escape_depth + 1
            ),
        ));
    }
    check(
        &mut checks,
        "generator-contraction",
        check_contraction(&schema, eigen.lambda).map(|_| format!("{} segment pairs", schema.pairs.len())),
    )?;
    let segments = check_segment_classes(&schema, &sys)?;
    checks.push(Check {
        name: "finite-class-size".into(),
        passed: true,
        detail: format!("{segments} boundary segments with disjoint interiors"),
    });

    let mut sampled = 0;
    for kind in MapKind::ALL {
        let worst = sample_escape_times(&sys, &ext, kind, ESCAPE_SAMPLES, depth_cap.max(escape_depth))?;
        if worst > escape_depth {
            return Err(Error::verification(
                "escape-law",
                format!("{kind} sample escaped after {worst} > {escape_depth} steps"),
            ));
        }
        sampled = sampled.max(worst);
    }
    checks.push(Check {
        name: "escape-law".into(),
        passed: true,
        detail: format!("{ESCAPE_SAMPLES} samples per map escape within {sampled} ≤ {escape_depth} steps"),
    });

    let census = classify_classes(&schema, &sys)?;
    let strip_corners = 2 * ext.strips.len();
    let bound = 2 * (4 * m.n() + strip_corners);
    if census.infinite_classes.len() > bound {
        return Err(Error::verification(
            "census-bound",
            format!("{} infinite classes exceed {bound}", census.infinite_classes.len()),
        ));
    }

    let surface = assemble_surface(
        &m,
        &sys,
        &schema,
        &census,
        SurfaceOptions {
            insert_genus: config.insert_genus,
            weak_perron_k: lift_k,
        },
        period,
    )?;
    let incidence = check_incidence(&incidence_matrix(&m, surface.doubled), eigen.lambda, config.tol)?;
    checks.push(Check {
        name: "stretch-factor".into(),
        passed: true,
        detail: format!("ρ(incidence) = {} for λ = {}", incidence.spectral_radius, eigen.lambda),
    });

    let mut record = ConstructionRecord {
        schema_version: SCHEMA_VERSION.to_string(),
        created_at: None,
        config: config.clone(),
        matrix: m,
        spectral,
        piece_map: pm,
        edge_maps: sys.clone(),
        extended: ext,
        certificates: Certificates {
            escape_depth,
            escape_depth_tail_two_periods: escape_depth_tail_plus_two_periods(&sys),
            observed_escape_depth: schema.observed_escape_depth,
            sampled_escape_depth: sampled,
            nesting_period: period,
            depth_cap,
            max_fixed_point_residual: max_residual,
            segment_images: segments,
            checks,
        },
        schema,
        census,
        surface,
        incidence,
        hash: String::new(),
    };
    record.hash = record.compute_hash();
    Ok(record)
}

pub fn construct_batch(configs: &[PipelineConfig], exec: Execution) -> Vec<Result<ConstructionRecord>> {
    par::map_with(exec, configs, construct)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Re-checks a stored record: depth precondition, incidence, hash and a
/// full reconstruction from the embedded config. Stops at the first failure.
pub fn verify_record(record: &ConstructionRecord) -> Result<VerificationReport> {
    if record.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "record schema version {} is not supported",
            record.schema_version
        )));
    }
    let mut checks = Vec::new();
    if record.schema.depth_cap < record.certificates.escape_depth {
        return Err(Error::precondition(format!(
            "stored schema depth {} is below the escape depth {}",
            record.schema.depth_cap, record.certificates.escape_depth
        )));
    }
    checks.push(Check {
        name: "schema-depth".into(),
        passed: true,
        detail: format!("{} ≥ {}", record.schema.depth_cap, record.certificates.escape_depth),
    });
    let (m, _) = record.config.resolve()?;
    if m != record.matrix {
        return Err(Error::verification("input-matrix", "stored matrix does not match the config"));
    }
    let lambda = perron_eigendata(&m, record.config.tol)?.lambda;
    let inc = check_incidence(&record.incidence.incidence, lambda, record.config.tol)?;
    checks.push(Check {
        name: "stretch-factor".into(),
        passed: true,
        detail: format!("ρ = {}", inc.spectral_radius),
    });
    check_incidence_structure(&m, &record.incidence.incidence, record.surface.doubled)?;
    checks.push(Check {
        name: "incidence-structure".into(),
        passed: true,
        detail: "block-diagonal double".into(),
    });
    if record.compute_hash() != record.hash {
        return Err(Error::verification("record-hash", "stored hash does not match the record"));
    }
    checks.push(Check {
        name: "record-hash".into(),
        passed: true,
        detail: record.hash.clone(),
    });
    let fresh = construct(&record.config)?;
    if fresh.hash != record.hash {
        return Err(Error::verification(
            "reconstruction",
            "rebuilding from the stored config gives a different record",
        ));
    }
    checks.push(Check {
        name: "reconstruction".into(),
        passed: true,
        detail: "identical record".into(),
    });
    Ok(VerificationReport { checks, passed: true })
}
