//! Incidence matrix of the Markov decomposition and the stretch-factor check.

use serde::{Deserialize, Serialize};

use crate::complex::SurfaceReport;
use crate::error::{Error, Result};
use crate::spectral::{perron_eigendata, spectral_radius, IntMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub incidence: IntMatrix,
    pub spectral_radius: f64,
    pub target_lambda: f64,
    pub relative_error: f64,
    /// Common row sum when every row of the incidence has the same sum, in
    /// which case it is the spectral radius exactly.
    pub exact_stretch: Option<u64>,
}

pub fn incidence_matrix(m: &IntMatrix, doubled: bool) -> IntMatrix {
    if doubled {
        m.block_diag(m)
    } else {
        m.clone()
    }
}

fn constant_row_sum(m: &IntMatrix) -> Option<u64> {
    let r = m.row_sum(0);
    (0..m.n()).all(|i| m.row_sum(i) == r).then_some(r)
}

/// Compares the spectral radius of `incidence` with `target_lambda`.
pub fn check_incidence(incidence: &IntMatrix, target_lambda: f64, tol: f64) -> Result<IncidenceReport> {
    let rho = spectral_radius(incidence, tol)?;
    let relative_error = (rho - target_lambda).abs() / target_lambda;
    if (rho - target_lambda).abs() > tol.max(1e-12 * target_lambda) {
        return Err(Error::verification(
            "stretch-factor",
            format!("incidence has spectral radius {rho} but λ = {target_lambda}"),
        ));
    }
    Ok(IncidenceReport {
        incidence: incidence.clone(),
        spectral_radius: rho,
        target_lambda,
        relative_error,
        exact_stretch: constant_row_sum(incidence),
    })
}

pub fn verify_stretch(m: &IntMatrix, report: &SurfaceReport, tol: f64) -> Result<IncidenceReport> {
    let lambda = perron_eigendata(m, tol)?.lambda;
    let incidence = incidence_matrix(m, report.doubled);
    check_incidence(&incidence, lambda, tol)
}

/// Structural check: a stored incidence must be the doubled input matrix.
pub fn check_incidence_structure(m: &IntMatrix, incidence: &IntMatrix, doubled: bool) -> Result<()> {
    if *incidence != incidence_matrix(m, doubled) {
        return Err(Error::verification(
            "incidence-structure",
            "incidence is not the block-diagonal double of the input",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undoubled_is_identity_operation() {
        let m = IntMatrix::from_rows(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert_eq!(incidence_matrix(&m, false), m);
        let d = incidence_matrix(&m, true);
        assert_eq!(d.n(), 4);
        assert_eq!(d.get(2, 2), 1);
        assert_eq!(d.get(0, 2), 0);
    }

    #[test]
    fn scalar_double_is_exact() {
        let m = IntMatrix::scalar(7);
        let r = check_incidence(&incidence_matrix(&m, true), 7.0, 1e-10).unwrap();
        assert_eq!(r.exact_stretch, Some(7));
        assert_eq!(r.incidence.rows(), vec![vec![7, 0], vec![0, 7]]);
    }

    #[test]
    fn perturbed_incidence_is_rejected() {
        let m = IntMatrix::from_rows(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let lambda = perron_eigendata(&m, 1e-10).unwrap().lambda;
        let mut d = incidence_matrix(&m, true);
        d.set(0, 1, 2);
        assert!(matches!(
            check_incidence(&d, lambda, 1e-10),
            Err(Error::Verification { .. })
        ));
    }
}
