//! Rectangles, strip partitions sized by the Perron vectors, the strip
//! bijections and the piece map between vertical and horizontal strips.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{is_irreducible, IntMatrix, PerronData, COORD_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

/// Strip `V^(rect)_{source,copy}` or `H^(rect)_{source,copy}`; all indices 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StripLabel {
    pub orientation: Orientation,
    pub rect: usize,
    pub source: usize,
    pub copy: usize,
}

impl fmt::Display for StripLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.orientation {
            Orientation::Vertical => 'V',
            Orientation::Horizontal => 'H',
        };
        write!(f, "{letter}^({})_{{{},{}}}", self.rect + 1, self.source + 1, self.copy + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LengthBasis {
    /// Coefficient i counts copies of λ⁻¹ω_i.
    Width,
    /// Coefficient i counts copies of λ⁻¹η_i.
    Height,
}

/// Integer combination of the basic strip widths or heights.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicLength {
    pub coefficients: Vec<u64>,
    pub basis: LengthBasis,
}

impl SymbolicLength {
    pub fn zero(n: usize, basis: LengthBasis) -> Self {
        SymbolicLength {
            coefficients: vec![0; n],
            basis,
        }
    }

    pub fn unit(n: usize, i: usize, basis: LengthBasis) -> Self {
        let mut s = Self::zero(n, basis);
        s.coefficients[i] = 1;
        s
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &SymbolicLength) -> SymbolicLength {
        debug_assert_eq!(self.basis, other.basis);
        SymbolicLength {
            coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + b).collect(),
            basis: self.basis,
        }
    }
}

pub fn evaluate_length(len: &SymbolicLength, eigen: &PerronData) -> f64 {
    let base = match len.basis {
        LengthBasis::Width => &eigen.omega,
        LengthBasis::Height => &eigen.eta,
    };
    len.coefficients
        .iter()
        .zip(base)
        .map(|(&c, &b)| c as f64 * b)
        .sum::<f64>()
        / eigen.lambda
}

/// Per-rectangle slot permutations. `tau[k][slot]` is the index (in the
/// canonical vertical order of `Q_k`) of the label sitting in that slot;
/// `sigma[k][label]` is the slot of the canonical horizontal label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripPermutations {
    pub sigma: Vec<Vec<usize>>,
    pub tau: Vec<Vec<usize>>,
}

impl StripPermutations {
    pub fn identity(m: &IntMatrix) -> Self {
        let n = m.n();
        StripPermutations {
            sigma: (0..n).map(|k| (0..m.row_sum(k) as usize).collect()).collect(),
            tau: (0..n).map(|k| (0..m.col_sum(k) as usize).collect()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripDecomposition {
    pub matrix: IntMatrix,
    pub eigen: PerronData,
    pub rect_widths: Vec<f64>,
    pub rect_heights: Vec<f64>,
    /// Canonical left-to-right labels of each rectangle.
    pub vertical_order: Vec<Vec<StripLabel>>,
    /// Canonical top-to-bottom labels of each rectangle.
    pub horizontal_order: Vec<Vec<StripLabel>>,
    pub permutations: StripPermutations,
    /// Cumulative x-offsets of the physical vertical slots (length slots + 1).
    pub vertical_boundaries: Vec<Vec<SymbolicLength>>,
    /// Cumulative y-offsets of the physical horizontal slots.
    pub horizontal_boundaries: Vec<Vec<SymbolicLength>>,
    pub vertical_boundary_values: Vec<Vec<f64>>,
    pub horizontal_boundary_values: Vec<Vec<f64>>,
}

fn check_permutation(perm: &[usize], len: usize, what: &str, k: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::invalid(format!(
            "{what} for rectangle {} has {} entries, expected {len}",
            k + 1,
            perm.len()
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(Error::invalid(format!("{what} for rectangle {} is not a bijection", k + 1)));
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn build_decomposition(
    m: &IntMatrix,
    eigen: &PerronData,
    sigma: Option<Vec<Vec<usize>>>,
    tau: Option<Vec<Vec<usize>>>,
) -> Result<StripDecomposition> {
    let n = m.n();
    if eigen.n() != n {
        return Err(Error::invalid("eigendata dimension does not match the matrix"));
    }
    let ident = StripPermutations::identity(m);
    let sigma = sigma.unwrap_or(ident.sigma);
    let tau = tau.unwrap_or(ident.tau);
    if sigma.len() != n || tau.len() != n {
        return Err(Error::invalid("one permutation per rectangle is required"));
    }

    let mut vertical_order = Vec::with_capacity(n);
    let mut horizontal_order = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = Vec::new();
        let mut h = Vec::new();
        for i in 0..n {
            for j in 0..m.get(i, k) as usize {
                v.push(StripLabel {
                    orientation: Orientation::Vertical,
                    rect: k,
                    source: i,
                    copy: j,
                });
            }
            for j in 0..m.get(k, i) as usize {
                h.push(StripLabel {
                    orientation: Orientation::Horizontal,
                    rect: k,
                    source: i,
                    copy: j,
                });
            }
        }
        check_permutation(&tau[k], v.len(), "tau", k)?;
        check_permutation(&sigma[k], h.len(), "sigma", k)?;
        vertical_order.push(v);
        horizontal_order.push(h);
    }

    let mut vertical_boundaries = Vec::with_capacity(n);
    let mut horizontal_boundaries = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = SymbolicLength::zero(n, LengthBasis::Width);
        let mut vb = vec![acc.clone()];
        for &label_idx in &tau[k] {
            let src = vertical_order[k][label_idx].source;
            acc = acc.add(&SymbolicLength::unit(n, src, LengthBasis::Width));
            vb.push(acc.clone());
        }
        vertical_boundaries.push(vb);

        let mut slot_label = vec![0usize; sigma[k].len()];
        for (label_idx, &slot) in sigma[k].iter().enumerate() {
            slot_label[slot] = label_idx;
        }
        let mut acc = SymbolicLength::zero(n, LengthBasis::Height);
        let mut hb = vec![acc.clone()];
        for label_idx in slot_label {
            let src = horizontal_order[k][label_idx].source;
            acc = acc.add(&SymbolicLength::unit(n, src, LengthBasis::Height));
            hb.push(acc.clone());
        }
        horizontal_boundaries.push(hb);
    }

    let eval = |rows: &Vec<Vec<SymbolicLength>>| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|s| evaluate_length(s, eigen)).collect())
            .collect()
    };
    let vertical_boundary_values = eval(&vertical_boundaries);
    let horizontal_boundary_values = eval(&horizontal_boundaries);

    let d = StripDecomposition {
        matrix: m.clone(),
        eigen: eigen.clone(),
        rect_widths: eigen.omega.clone(),
        rect_heights: eigen.eta.clone(),
        vertical_order,
        horizontal_order,
        permutations: StripPermutations { sigma, tau },
        vertical_boundaries,
        horizontal_boundaries,
        vertical_boundary_values,
        horizontal_boundary_values,
    };
    d.check_partition()?;
    Ok(d)
}

impl StripDecomposition {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn lambda(&self) -> f64 {
        self.eigen.lambda
    }

    pub fn vertical_slot_count(&self, k: usize) -> usize {
        self.vertical_order[k].len()
    }

    pub fn horizontal_slot_count(&self, k: usize) -> usize {
        self.horizontal_order[k].len()
    }

    /// Label occupying a physical vertical slot of `Q_k`.
    pub fn vertical_label_at(&self, k: usize, slot: usize) -> StripLabel {
        self.vertical_order[k][self.permutations.tau[k][slot]]
    }

    /// Label occupying a physical horizontal slot of `Q_k`.
    pub fn horizontal_label_at(&self, k: usize, slot: usize) -> StripLabel {
        let idx = self.permutations.sigma[k]
            .iter()
            .position(|&s| s == slot)
            .expect("sigma is a bijection");
        self.horizontal_order[k][idx]
    }

    pub fn vertical_slot_of(&self, label: &StripLabel) -> Option<usize> {
        let idx = self.vertical_order[label.rect].iter().position(|l| l == label)?;
        self.permutations.tau[label.rect].iter().position(|&t| t == idx)
    }

    pub fn horizontal_slot_of(&self, label: &StripLabel) -> Option<usize> {
        let idx = self.horizontal_order[label.rect].iter().position(|l| l == label)?;
        Some(self.permutations.sigma[label.rect][idx])
    }

    /// Partition property: boundaries strictly increase and close up at the
    /// rectangle's width and height.
    pub fn check_partition(&self) -> Result<()> {
        for k in 0..self.n() {
            for (vals, full, what) in [
                (&self.vertical_boundary_values[k], self.rect_widths[k], "width"),
                (&self.horizontal_boundary_values[k], self.rect_heights[k], "height"),
            ] {
                if vals.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::internal(format!("strip boundaries of Q{} not increasing", k + 1)));
                }
                let last = *vals.last().unwrap();
                if (last - full).abs() > COORD_TOL * full.max(1.0) {
                    return Err(Error::verification(
                        "strip-partition",
                        format!("Q{} strips sum to {last}, {what} is {full}", k + 1),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One affine branch `(x, y) ↦ (λ(x − a), c + y/λ)` of the piece map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub source: StripLabel,
    pub target: StripLabel,
    pub source_rect: usize,
    pub target_rect: usize,
    pub source_slot: usize,
    pub target_slot: usize,
    /// Left x-offset `a` of the source slot.
    pub x_offset: f64,
    pub x_offset_symbolic: SymbolicLength,
    pub source_width: f64,
    /// Top y-offset `c` of the target slot.
    pub y_offset: f64,
    pub y_offset_symbolic: SymbolicLength,
    pub target_height: f64,
}

impl Branch {
    pub fn apply(&self, lambda: f64, x: f64, y: f64) -> (f64, f64) {
        (lambda * (x - self.x_offset), self.y_offset + y / lambda)
    }

    pub fn apply_inverse(&self, lambda: f64, x: f64, y: f64) -> (f64, f64) {
        (self.x_offset + x / lambda, lambda * (y - self.y_offset))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceMap {
    pub decomposition: StripDecomposition,
    pub branches: Vec<Branch>,
    /// `vertical_branch[k][slot]` indexes the branch leaving that slot.
    pub vertical_branch: Vec<Vec<usize>>,
    /// `horizontal_branch[k][slot]` indexes the branch landing in that slot.
    pub horizontal_branch: Vec<Vec<usize>>,
}

pub fn piece_map(d: &StripDecomposition) -> Result<PieceMap> {
    let n = d.n();
    let lambda = d.lambda();
    let mut branches = Vec::new();
    let mut vertical_branch: Vec<Vec<usize>> = (0..n).map(|k| vec![usize::MAX; d.vertical_slot_count(k)]).collect();
    let mut horizontal_branch: Vec<Vec<usize>> =
        (0..n).map(|k| vec![usize::MAX; d.horizontal_slot_count(k)]).collect();
    for k in 0..n {
        for label in &d.vertical_order[k] {
            let target = StripLabel {
                orientation: Orientation::Horizontal,
                rect: label.source,
                source: k,
                copy: label.copy,
            };
            let s = d.vertical_slot_of(label).ok_or_else(|| Error::internal("vertical label missing"))?;
            let t = d.horizontal_slot_of(&target).ok_or_else(|| Error::internal("horizontal label missing"))?;
            let i = label.source;
            let b = Branch {
                source: *label,
                target,
                source_rect: k,
                target_rect: i,
                source_slot: s,
                target_slot: t,
                x_offset: d.vertical_boundary_values[k][s],
                x_offset_symbolic: d.vertical_boundaries[k][s].clone(),
                source_width: d.vertical_boundary_values[k][s + 1] - d.vertical_boundary_values[k][s],
                y_offset: d.horizontal_boundary_values[i][t],
                y_offset_symbolic: d.horizontal_boundaries[i][t].clone(),
                target_height: d.horizontal_boundary_values[i][t + 1] - d.horizontal_boundary_values[i][t],
            };
            if horizontal_branch[i][t] != usize::MAX {
                return Err(Error::internal(format!("{target} is hit twice by the piece map")));
            }
            vertical_branch[k][s] = branches.len();
            horizontal_branch[i][t] = branches.len();
            branches.push(b);
        }
    }
    if horizontal_branch.iter().flatten().any(|&b| b == usize::MAX) {
        return Err(Error::internal("piece map misses a horizontal strip"));
    }
    let p = PieceMap {
        decomposition: d.clone(),
        branches,
        vertical_branch,
        horizontal_branch,
    };
    p.check_scaling(lambda)?;
    Ok(p)
}

impl PieceMap {
    pub fn lambda(&self) -> f64 {
        self.decomposition.lambda()
    }

    pub fn n(&self) -> usize {
        self.decomposition.n()
    }

    /// Every branch stretches widths by λ and shrinks heights by λ.
    pub fn check_scaling(&self, lambda: f64) -> Result<()> {
        let d = &self.decomposition;
        for b in &self.branches {
            let image_width = d.rect_widths[b.target_rect];
            let source_height = d.rect_heights[b.source_rect];
            let rel_w = (image_width / b.source_width - lambda).abs() / lambda;
            let rel_h = (b.target_height / source_height - 1.0 / lambda).abs() * lambda;
            if rel_w > 1e-6 || rel_h > 1e-6 {
                return Err(Error::verification(
                    "branch-scaling",
                    format!("{} -> {} scales by {rel_w:e}/{rel_h:e} off λ", b.source, b.target),
                ));
            }
        }
        Ok(())
    }
}

/// Cycle through vertex 0 found by depth-first search in the digraph of M
/// (arc k → i when m_ik > 0), visiting neighbours in ascending order.
pub fn corner_cycle(m: &IntMatrix) -> Result<Vec<usize>> {
    if !is_irreducible(m)? {
        return Err(Error::precondition("corner selection needs an irreducible matrix"));
    }
    let g = m.digraph();
    let n = m.n();
    let mut visited = vec![false; n];
    let mut path = vec![0usize];
    let mut iters: Vec<std::vec::IntoIter<usize>> = vec![g.successors(0).into_iter()];
    visited[0] = true;
    while let Some(it) = iters.last_mut() {
        match it.next() {
            Some(0) => return Ok(path),
            Some(w) if !visited[w] => {
                visited[w] = true;
                path.push(w);
                iters.push(g.successors(w).into_iter());
            }
            Some(_) => {}
            None => {
                iters.pop();
                path.pop();
            }
        }
    }
    Err(Error::internal("no cycle through the first vertex"))
}

/// Slot permutations that make the top-left corner of `Q_1` periodic under
/// the left edge map, with period equal to the length of [`corner_cycle`].
pub fn corner_selection(m: &IntMatrix) -> Result<StripPermutations> {
    let cycle = corner_cycle(m)?;
    let n = m.n();
    let mut perms = StripPermutations::identity(m);
    for (pos, &s) in cycle.iter().enumerate() {
        let next = cycle[(pos + 1) % cycle.len()];
        // leftmost slot of Q_s carries V^(s)_{next,1}
        let v_idx: usize = (0..next).map(|i| m.get(i, s) as usize).sum();
        let mut tau: Vec<usize> = vec![v_idx];
        tau.extend((0..m.col_sum(s) as usize).filter(|&l| l != v_idx));
        perms.tau[s] = tau;
        // topmost slot of Q_next carries H^(next)_{s,1}
        let h_idx: usize = (0..s).map(|i| m.get(next, i) as usize).sum();
        let len = m.row_sum(next) as usize;
        let mut sigma = vec![0usize; len];
        sigma[h_idx] = 0;
        let mut slot = 1;
        for (l, entry) in sigma.iter_mut().enumerate() {
            if l != h_idx {
                *entry = slot;
                slot += 1;
            }
        }
        perms.sigma[next] = sigma;
    }
    debug_assert!(n > 0);
    Ok(perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{perron_eigendata, DEFAULT_TOL};

    fn running() -> IntMatrix {
        IntMatrix::from_rows(vec![vec![0, 0, 1, 0], vec![1, 0, 0, 1], vec![0, 0, 0, 1], vec![1, 2, 0, 0]]).unwrap()
    }

    fn decomp(m: &IntMatrix, perms: Option<StripPermutations>) -> StripDecomposition {
        let e = perron_eigendata(m, DEFAULT_TOL).unwrap();
        match perms {
            Some(p) => build_decomposition(m, &e, Some(p.sigma), Some(p.tau)).unwrap(),
            None => build_decomposition(m, &e, None, None).unwrap(),
        }
    }

    #[test]
    fn running_example_q1_strips() {
        let d = decomp(&running(), None);
        let v: Vec<String> = d.vertical_order[0].iter().map(|l| l.to_string()).collect();
        let h: Vec<String> = d.horizontal_order[0].iter().map(|l| l.to_string()).collect();
        assert_eq!(v, ["V^(1)_{2,1}", "V^(1)_{4,1}"]);
        assert_eq!(h, ["H^(1)_{3,1}"]);
    }

    #[test]
    fn running_example_branch() {
        let d = decomp(&running(), None);
        let p = piece_map(&d).unwrap();
        let b = &p.branches[p.vertical_branch[0][0]];
        assert_eq!(b.source.to_string(), "V^(1)_{2,1}");
        assert_eq!(b.target.to_string(), "H^(2)_{1,1}");
        assert_eq!(p.branches.len() as u64, running().total());
    }

    #[test]
    fn integer_case_strips() {
        let m = IntMatrix::scalar(3);
        let d = decomp(&m, None);
        assert_eq!(d.vertical_order[0].len(), 3);
        assert_eq!(d.horizontal_order[0].len(), 3);
        let p = piece_map(&d).unwrap();
        for b in &p.branches {
            assert_eq!(b.source.copy, b.target.copy);
            assert_eq!(b.source_slot, b.target_slot);
        }
    }

    #[test]
    fn running_example_cycle_and_constraints() {
        let m = running();
        assert_eq!(corner_cycle(&m).unwrap(), vec![0, 1, 3, 2]);
        let perms = corner_selection(&m).unwrap();
        let d = decomp(&m, Some(perms));
        // τ_4 puts V^(4)_{3,1} leftmost, σ_4 puts H^(4)_{2,1} on top
        assert_eq!(d.vertical_label_at(3, 0).to_string(), "V^(4)_{3,1}");
        assert_eq!(d.horizontal_label_at(3, 0).to_string(), "H^(4)_{2,1}");
    }

    #[test]
    fn rejects_bad_permutation() {
        let m = running();
        let e = perron_eigendata(&m, DEFAULT_TOL).unwrap();
        let mut tau = StripPermutations::identity(&m).tau;
        tau[0] = vec![0, 0];
        assert!(matches!(build_decomposition(&m, &e, None, Some(tau)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn evaluate_zero_and_unit() {
        let m = running();
        let e = perron_eigendata(&m, DEFAULT_TOL).unwrap();
        assert_eq!(evaluate_length(&SymbolicLength::zero(4, LengthBasis::Width), &e), 0.0);
        let u = SymbolicLength::unit(4, 2, LengthBasis::Width);
        assert!((evaluate_length(&u, &e) - e.omega[2] / e.lambda).abs() < 1e-15);
    }
}
