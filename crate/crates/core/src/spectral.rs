//! Exact integer matrix algebra, irreducibility and primitivity tests, and
//! Perron eigendata with a char-poly cross-check.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default tolerance for eigen residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance used for every coordinate comparison downstream of the eigendata.
pub const COORD_TOL: f64 = 1e-7;

const MAX_POWER_ITERATIONS: usize = 200_000;
const REFINE_EVERY: usize = 25;

/// Square matrix of non-negative integers, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<u64>,
}

impl IntMatrix {
    /// Builds a matrix from rows. An empty row list gives the 0×0 matrix.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            entries: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// The 1×1 matrix `[[d]]`.
    pub fn scalar(d: u64) -> Self {
        IntMatrix {
            n: 1,
            entries: vec![d],
        }
    }

    /// Parses either whitespace-separated rows or a JSON array of arrays.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('[') {
            Self::parse_json(trimmed)
        } else {
            Self::parse_text(text)
        }
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|_| {
                        Error::invalid(format!("line {}: `{tok}` is not a non-negative integer", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u64>> =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("matrix JSON: {e}")))?;
        Self::from_rows(rows)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// Total of all entries.
    pub fn total(&self) -> u64 {
        self.entries.iter().sum()
    }

    /// Matrix product, `None` on overflow.
    pub fn checked_mul(&self, other: &IntMatrix) -> Option<IntMatrix> {
        if self.n != other.n {
            return None;
        }
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc: u64 = 0;
                for k in 0..n {
                    acc = acc.checked_add(self.get(i, k).checked_mul(other.get(k, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Some(out)
    }

    /// Block-diagonal matrix with `self` in the top-left and `other` in the bottom-right.
    pub fn block_diag(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n + other.n;
        let mut out = Self::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.get(i, j));
            }
        }
        for i in 0..other.n {
            for j in 0..other.n {
                out.set(self.n + i, self.n + j, other.get(i, j));
            }
        }
        out
    }

    pub fn is_permutation(&self) -> bool {
        (0..self.n).all(|i| self.row_sum(i) == 1 && self.col_sum(i) == 1)
    }

    /// Directed multigraph with `m_ij` arcs from vertex `j` to vertex `i`.
    pub fn digraph(&self) -> Digraph {
        let mut arcs = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                let m = self.get(i, j);
                if m > 0 {
                    arcs.push(Arc {
                        from: j,
                        to: i,
                        multiplicity: m,
                    });
                }
            }
        }
        Digraph {
            vertex_count: self.n,
            arcs,
        }
    }

    /// Zero pattern of `self^k`, computed with boolean products.
    pub fn power_pattern(&self, k: usize) -> Vec<Vec<bool>> {
        let n = self.n;
        let base: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| self.get(i, j) > 0).collect()).collect();
        let mut acc: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        for _ in 0..k {
            acc = bool_mul(&acc, &base);
        }
        acc
    }

    fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as f64).collect())
            .collect()
    }

    fn to_bigint(&self) -> Vec<Vec<BigInt>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| BigInt::from(self.get(i, j))).collect())
            .collect()
    }
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u64>>::deserialize(d)?;
        IntMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// One bundle of parallel arcs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub multiplicity: u64,
}

/// Directed multigraph on `vertex_count` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    pub vertex_count: usize,
    pub arcs: Vec<Arc>,
}

impl Digraph {
    /// Targets of arcs leaving `v`, ascending.
    pub fn successors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.arcs.iter().filter(|a| a.from == v).map(|a| a.to).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn predecessors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.arcs.iter().filter(|a| a.to == v).map(|a| a.from).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn multiplicity(&self, from: usize, to: usize) -> u64 {
        self.arcs
            .iter()
            .filter(|a| a.from == from && a.to == to)
            .map(|a| a.multiplicity)
            .sum()
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.multiplicity(from, to) > 0
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            let next = if forward { self.successors(v) } else { self.predecessors(v) };
            for w in next {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        self.reach(0, true).iter().all(|&b| b) && self.reach(0, false).iter().all(|&b| b)
    }

    /// Strongly connected components, each sorted, in order of smallest vertex.
    pub fn strong_components(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.vertex_count];
        let mut comps = Vec::new();
        for v in 0..self.vertex_count {
            if assigned[v] {
                continue;
            }
            let fwd = self.reach(v, true);
            let bwd = self.reach(v, false);
            let comp: Vec<usize> = (0..self.vertex_count).filter(|&w| fwd[w] && bwd[w]).collect();
            for &w in &comp {
                assigned[w] = true;
            }
            comps.push(comp);
        }
        comps
    }

    /// One arc per line as `from to`, 1-based, repeated by multiplicity.
    pub fn to_arc_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.arcs {
            for _ in 0..a.multiplicity {
                out.push_str(&format!("{} {}\n", a.from + 1, a.to + 1));
            }
        }
        out
    }
}

/// Monic integer polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntPolynomial {
    pub coefficients: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPolynomial {
            coefficients: coeffs.iter().map(|&c| BigInt::from(c)).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coefficients.last().map_or(false, |c| c.is_one())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Exact evaluation at an integer.
    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.coefficients.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (deg, c) in self.coefficients.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_mag = !mag.is_one() || deg == 0;
            if show_mag {
                write!(f, "{mag}")?;
            }
            match deg {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{deg}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub fn is_irreducible(m: &IntMatrix) -> Result<bool> {
    if m.n() == 0 {
        return Err(Error::invalid("matrix has dimension 0"));
    }
    Ok(m.digraph().is_strongly_connected())
}

/// Wielandt bound on the exponent of a primitive n×n matrix.
pub fn wielandt_bound(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        n * n - 2 * n + 2
    }
}

pub fn is_primitive(m: &IntMatrix) -> Result<bool> {
    if !is_irreducible(m)? {
        return Err(Error::precondition("primitivity is only defined here for irreducible matrices"));
    }
    Ok(first_positive_power(m).is_some())
}

/// Smallest k ≤ Wielandt bound with every entry of M^k positive.
pub fn first_positive_power(m: &IntMatrix) -> Option<usize> {
    let n = m.n();
    let base: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) > 0).collect()).collect();
    let mut acc = base.clone();
    for k in 1..=wielandt_bound(n) {
        if acc.iter().all(|r| r.iter().all(|&b| b)) {
            return Some(k);
        }
        acc = bool_mul(&acc, &base);
    }
    None
}

/// Smallest k ≤ Wielandt bound with column `col` of M^k positive.
pub fn first_positive_column_power(m: &IntMatrix, col: usize) -> Option<usize> {
    let n = m.n();
    let base: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) > 0).collect()).collect();
    let mut acc = base.clone();
    for k in 1..=wielandt_bound(n) {
        if (0..n).all(|i| acc[i][col]) {
            return Some(k);
        }
        acc = bool_mul(&acc, &base);
    }
    None
}

/// Index of imprimitivity (gcd of cycle lengths) of an irreducible matrix.
pub fn imprimitivity_index(m: &IntMatrix) -> Result<usize> {
    if !is_irreducible(m)? {
        return Err(Error::precondition("imprimitivity index needs an irreducible matrix"));
    }
    let g = m.digraph();
    let n = m.n();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for w in g.successors(v) {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut h: i64 = 0;
    for a in &g.arcs {
        let d = level[a.from] as i64 + 1 - level[a.to] as i64;
        h = gcd(h, d.abs());
    }
    Ok(h.max(1) as usize)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Characteristic polynomial det(xI − M) by Faddeev–LeVerrier in big integers.
pub fn char_poly(m: &IntMatrix) -> IntPolynomial {
    let n = m.n();
    let a = m.to_bigint();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut mk: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k-1} + c_{n-k+1}·I
        let mut next = big_mul(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = next;
        let amk = big_mul(&a, &mk);
        let trace: BigInt = (0..n).map(|i| amk[i][i].clone()).sum();
        // exact: Newton's identities guarantee divisibility by k
        coeffs[n - k] = -(trace / BigInt::from(k));
    }
    IntPolynomial { coefficients: coeffs }
}

fn big_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

pub fn determinant(m: &IntMatrix) -> BigInt {
    let p = char_poly(m);
    let c0 = p.coefficients[0].clone();
    if m.n() % 2 == 0 {
        c0
    } else {
        -c0
    }
}

/// Largest real root of a monic polynomial inside `[lo, hi]`, located by a
/// descending sign scan followed by bisection. Requires `p(hi) > 0`.
pub fn largest_real_root(p: &IntPolynomial, lo: f64, hi: f64) -> Option<f64> {
    const CELLS: usize = 1 << 14;
    if p.eval_f64(hi) <= 0.0 {
        return None;
    }
    let h = (hi - lo) / CELLS as f64;
    let mut upper = hi;
    for step in 1..=CELLS {
        let x = hi - h * step as f64;
        let v = p.eval_f64(x);
        if v == 0.0 {
            return Some(x);
        }
        if v < 0.0 {
            let (mut a, mut b) = (x, upper);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if p.eval_f64(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        upper = x;
    }
    None
}

/// Perron root located on the exact characteristic polynomial.
pub fn perron_root_by_bisection(m: &IntMatrix) -> Option<f64> {
    let n = m.n();
    let max_row = (0..n).map(|i| m.row_sum(i)).max().unwrap_or(0) as f64;
    let min_row = (0..n).map(|i| m.row_sum(i)).min().unwrap_or(0) as f64;
    largest_real_root(&char_poly(m), min_row - 1.0, max_row + 1.0)
}

/// λ with right and left Perron vectors, normalized so the last entry is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronData {
    pub lambda: f64,
    pub eta: Vec<f64>,
    pub omega: Vec<f64>,
    pub residual: f64,
}

impl PerronData {
    pub fn n(&self) -> usize {
        self.eta.len()
    }
}

/// Formats with 15 significant digits, plain decimal notation.
pub fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (14 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Serialize, Deserialize)]
struct PerronRepr {
    lambda: String,
    eta: Vec<String>,
    omega: Vec<String>,
    residual: f64,
}

impl Serialize for PerronData {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PerronRepr {
            lambda: sig15(self.lambda),
            eta: self.eta.iter().map(|&x| sig15(x)).collect(),
            omega: self.omega.iter().map(|&x| sig15(x)).collect(),
            residual: self.residual,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PerronData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PerronRepr::deserialize(d)?;
        let p = |s: &String| s.parse::<f64>().map_err(serde::de::Error::custom);
        Ok(PerronData {
            lambda: p(&r.lambda)?,
            eta: r.eta.iter().map(p).collect::<std::result::Result<_, _>>()?,
            omega: r.omega.iter().map(p).collect::<std::result::Result<_, _>>()?,
            residual: r.residual,
        })
    }
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn residual_last_normalized(a: &[Vec<f64>], x: &[f64], lambda: f64) -> f64 {
    let last = *x.last().unwrap();
    let ax = mat_vec(a, x);
    let r = ax.iter().zip(x).fold(0.0f64, |m, (p, q)| m.max((p - lambda * q).abs()));
    r / last.abs()
}

fn rayleigh(a: &[Vec<f64>], x: &[f64]) -> f64 {
    let ax = mat_vec(a, x);
    let num: f64 = ax.iter().zip(x).map(|(p, q)| p * q).sum();
    let den: f64 = x.iter().map(|q| q * q).sum();
    num / den
}

/// Solves (A − μI) z = b by Gaussian elimination with partial pivoting.
fn shifted_solve(a: &[Vec<f64>], mu: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a[i][j] - if i == j { mu } else { 0.0 }).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..=n {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * z[j]).sum();
        z[i] = (m[i][n] - s) / m[i][i];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

fn normalize_max(x: &mut [f64]) {
    let s = max_abs(x);
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

/// Power iteration on A + I with periodic inverse-iteration refinement.
fn perron_vector(a: &[Vec<f64>], tol: f64) -> Result<Vec<f64>> {
    let n = a.len();
    let shifted: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut x = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_POWER_ITERATIONS {
        x = mat_vec(&shifted, &x);
        normalize_max(&mut x);
        if it % REFINE_EVERY == 0 || it < 4 {
            let mu = rayleigh(a, &x);
            residual = residual_last_normalized(a, &x, mu);
            if residual <= tol {
                return Ok(x);
            }
            // Rayleigh-quotient refinement; kept only if it stays positive and helps.
            if let Some(mut z) = shifted_solve(a, mu, &x) {
                normalize_max(&mut z);
                if z.iter().all(|v| *v < 0.0) {
                    z.iter_mut().for_each(|v| *v = -*v);
                }
                if z.iter().all(|v| *v > 0.0) {
                    let mu_z = rayleigh(a, &z);
                    let r_z = residual_last_normalized(a, &z, mu_z);
                    if r_z < residual && (mu_z - mu).abs() <= 1e-3 * mu.abs().max(1.0) {
                        x = z;
                        residual = r_z;
                        if residual <= tol {
                            return Ok(x);
                        }
                    }
                }
            }
        }
    }
    Err(Error::Convergence {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

pub fn perron_eigendata(m: &IntMatrix, tol: f64) -> Result<PerronData> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if !is_irreducible(m)? {
        return Err(Error::precondition("Perron eigendata requires an irreducible matrix"));
    }
    let a = m.to_f64();
    let at = m.transpose().to_f64();
    let mut eta = perron_vector(&a, tol * 0.1)?;
    let mut omega = perron_vector(&at, tol * 0.1)?;
    let last_e = *eta.last().unwrap();
    let last_o = *omega.last().unwrap();
    eta.iter_mut().for_each(|v| *v /= last_e);
    omega.iter_mut().for_each(|v| *v /= last_o);
    let ae = mat_vec(&a, &eta);
    let num: f64 = omega.iter().zip(&ae).map(|(p, q)| p * q).sum();
    let den: f64 = omega.iter().zip(&eta).map(|(p, q)| p * q).sum();
    let lambda = num / den;
    let residual = residual_last_normalized(&a, &eta, lambda).max(residual_last_normalized(&at, &omega, lambda));
    if !(residual <= tol) {
        return Err(Error::Convergence {
            iterations: MAX_POWER_ITERATIONS,
            residual,
        });
    }
    if eta.iter().chain(&omega).any(|v| !(*v > 0.0)) {
        return Err(Error::internal("Perron vector has a non-positive entry"));
    }
    let root = perron_root_by_bisection(m)
        .ok_or_else(|| Error::internal("no real root found on the characteristic polynomial"))?;
    if (root - lambda).abs() > tol.max(1e-12 * lambda) {
        return Err(Error::verification(
            "perron-root-cross-check",
            format!("power iteration gave {lambda}, polynomial bisection gave {root}"),
        ));
    }
    Ok(PerronData {
        lambda,
        eta,
        omega,
        residual,
    })
}

/// Spectral radius of any non-negative matrix: the largest Perron root over
/// its strongly connected components.
pub fn spectral_radius(m: &IntMatrix, tol: f64) -> Result<f64> {
    let g = m.digraph();
    let mut best: f64 = 0.0;
    for comp in g.strong_components() {
        let k = comp.len();
        let mut sub = IntMatrix::zeros(k);
        for (a, &i) in comp.iter().enumerate() {
            for (b, &j) in comp.iter().enumerate() {
                sub.set(a, b, m.get(i, j));
            }
        }
        if k == 1 && sub.get(0, 0) == 0 {
            continue;
        }
        best = best.max(perron_eigendata(&sub, tol)?.lambda);
    }
    Ok(best)
}

/// The km×km matrix with M in the top-right block and identity blocks on the
/// block subdiagonal.
pub fn block_lift(m: &IntMatrix, k: usize) -> Result<IntMatrix> {
    if k == 0 {
        return Err(Error::invalid("lift order must be at least 1"));
    }
    let n = m.n();
    let mut out = IntMatrix::zeros(n * k);
    for i in 0..n {
        for j in 0..n {
            out.set(i, (k - 1) * n + j, m.get(i, j));
        }
    }
    for b in 1..k {
        for i in 0..n {
            out.set(b * n + i, (b - 1) * n + i, 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> IntMatrix {
        IntMatrix::from_rows(vec![vec![0, 0, 1, 0], vec![1, 0, 0, 1], vec![0, 0, 0, 1], vec![1, 2, 0, 0]]).unwrap()
    }

    #[test]
    fn char_poly_running_example() {
        assert_eq!(char_poly(&running()), IntPolynomial::from_i64(&[-2, -1, -2, 0, 1]));
        assert_eq!(char_poly(&running()).to_string(), "x^4 - 2x^2 - x - 2");
    }

    #[test]
    fn char_poly_small() {
        assert_eq!(char_poly(&IntMatrix::identity(2)), IntPolynomial::from_i64(&[1, -2, 1]));
        assert_eq!(char_poly(&IntMatrix::scalar(7)), IntPolynomial::from_i64(&[-7, 1]));
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&running()), BigInt::from(-2));
        assert_eq!(determinant(&IntMatrix::identity(3)), BigInt::from(1));
        let m = IntMatrix::from_rows(vec![vec![0, 2], vec![1, 0]]).unwrap();
        assert_eq!(determinant(&m), BigInt::from(-2));
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&running()).unwrap());
        assert!(!is_irreducible(&IntMatrix::identity(2)).unwrap());
        let swap = IntMatrix::from_rows(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(is_irreducible(&swap).unwrap());
        assert!(matches!(is_irreducible(&IntMatrix::zeros(0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn primitivity() {
        let swap = IntMatrix::from_rows(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(!is_primitive(&swap).unwrap());
        let fib = IntMatrix::from_rows(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert!(is_primitive(&fib).unwrap());
        assert!(matches!(is_primitive(&IntMatrix::identity(2)), Err(Error::Precondition(_))));
        assert_eq!(imprimitivity_index(&swap).unwrap(), 2);
        assert_eq!(imprimitivity_index(&fib).unwrap(), 1);
    }

    #[test]
    fn lift_shapes() {
        let m = running();
        assert_eq!(block_lift(&m, 1).unwrap(), m);
        let two = block_lift(&IntMatrix::scalar(2), 2).unwrap();
        assert_eq!(two, IntMatrix::from_rows(vec![vec![0, 2], vec![1, 0]]).unwrap());
    }

    #[test]
    fn scalar_eigendata() {
        let p = perron_eigendata(&IntMatrix::scalar(5), DEFAULT_TOL).unwrap();
        assert_eq!(p.lambda, 5.0);
        assert_eq!(p.eta, vec![1.0]);
        assert_eq!(p.omega, vec![1.0]);
    }

    #[test]
    fn sig15_formatting() {
        assert_eq!(sig15(1.5), "1.50000000000000");
        assert_eq!(sig15(123.0), "123.000000000000");
        assert_eq!(sig15(0.25), "0.250000000000000");
    }

    #[test]
    fn parses_both_forms() {
        let a = IntMatrix::parse("0 2\n1 0\n").unwrap();
        let b = IntMatrix::parse("[[0,2],[1,0]]").unwrap();
        assert_eq!(a, b);
        assert!(IntMatrix::parse("1 2\n3\n").is_err());
        assert!(IntMatrix::parse("1 -2\n3 4\n").is_err());
    }

    #[test]
    fn arc_lines() {
        let g = IntMatrix::from_rows(vec![vec![0, 2], vec![1, 0]]).unwrap().digraph();
        assert_eq!(g.to_arc_lines(), "1 2\n2 1\n2 1\n");
    }
}
