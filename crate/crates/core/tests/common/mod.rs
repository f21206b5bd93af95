//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numeric routines.

#![allow(dead_code)]

use endperiodic::IntMatrix;

pub fn running() -> IntMatrix {
    IntMatrix::from_rows(vec![vec![0, 0, 1, 0], vec![1, 0, 0, 1], vec![0, 0, 0, 1], vec![1, 2, 0, 0]]).unwrap()
}

/// Evaluates a polynomial given by ascending integer coefficients.
pub fn eval(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// Root of `coeffs` in `[lo, hi]` by plain bisection; the endpoints must
/// bracket a sign change.
pub fn bisect(coeffs: &[i64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    assert!(flo * eval(coeffs, hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = eval(coeffs, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spectral radius of a non-negative irreducible matrix by power iteration on
/// `I + A`, which is primitive, so the iteration converges without any
/// period issues.
pub fn power_radius(m: &IntMatrix) -> f64 {
    let n = m.n();
    let mut v = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..20_000 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = v[i];
            for j in 0..n {
                w[i] += m.get(i, j) as f64 * v[j];
            }
        }
        let norm = w.iter().cloned().fold(0.0, f64::max);
        for x in &mut w {
            *x /= norm;
        }
        let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        rho = norm - 1.0;
        if delta < 1e-15 {
            break;
        }
    }
    rho
}

/// Counts, for the midpoint of every interval, how many intervals contain it
/// in their interior. Disjoint interiors means every count is one.
pub fn max_midpoint_cover(intervals: &[(f64, f64)], tol: f64) -> usize {
    intervals
        .iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            intervals.iter().filter(|&&(a, b)| a + tol < mid && mid < b - tol).count()
        })
        .max()
        .unwrap_or(0)
}
