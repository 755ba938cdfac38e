//! Labeled tensor-product layouts and the index gymnastics built on them:
//! partial trace, partial transpose and subsystem permutation.
//!
//! Basis states are indexed big-endian: the first factor is the most
//! significant digit, so `|b1 b2 b3>` of three qubits has index
//! `4*b1 + 2*b2 + b3`.

use std::collections::HashSet;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemLayout {
    factors: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if factors.is_empty() {
            return Err(Error::Layout("no factors".into()));
        }
        let mut seen = HashSet::new();
        for (label, dim) in &factors {
            if *dim == 0 {
                return Err(Error::Layout(format!("factor `{label}` has dimension 0")));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::Layout(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self { factors })
    }

    /// Layout of qubits with the given labels.
    pub fn qubits(labels: &[&str]) -> Result<Self> {
        Self::new(labels.iter().map(|&l| (l, 2)))
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// The layout with the given factors removed.
    pub fn without(&self, drop: &[&str]) -> Result<Self> {
        for l in drop {
            self.position(l)?;
        }
        let kept: Vec<(String, usize)> = self
            .factors
            .iter()
            .filter(|(l, _)| !drop.contains(&l.as_str()))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Ok(Self {
                factors: vec![("scalar".into(), 1)],
            });
        }
        Ok(Self { factors: kept })
    }

    pub fn reordered(&self, new_order: &[&str]) -> Result<Self> {
        let perm = self.permutation(new_order)?;
        Ok(Self {
            factors: perm.iter().map(|&p| self.factors[p].clone()).collect(),
        })
    }

    /// Renames factors; `renames` maps old label to new label.
    pub fn relabeled(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let mut factors = self.factors.clone();
        for (old, new) in renames {
            let p = self.position(old)?;
            factors[p].0 = (*new).to_string();
        }
        Self::new(factors)
    }

    fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    fn permutation(&self, new_order: &[&str]) -> Result<Vec<usize>> {
        if new_order.len() != self.factors.len() {
            return Err(Error::Layout(format!(
                "new order has {} labels, layout has {}",
                new_order.len(),
                self.factors.len()
            )));
        }
        let perm = new_order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let distinct: HashSet<_> = perm.iter().collect();
        if distinct.len() != perm.len() {
            return Err(Error::Layout("new order is not a permutation".into()));
        }
        Ok(perm)
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix on a layout of dimension {}",
                m.rows(),
                m.cols(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn compose(digits: impl Iterator<Item = (usize, usize)>) -> usize {
    digits.fold(0, |acc, (d, dim)| acc * dim + d)
}

/// Old index -> new index under a reordering of tensor factors.
fn index_map(layout: &SubsystemLayout, new_order: &[&str]) -> Result<Vec<usize>> {
    let perm = layout.permutation(new_order)?;
    let dims = layout.dims();
    Ok((0..layout.dim())
        .map(|i| {
            let d = digits(i, &dims);
            compose(perm.iter().map(|&p| (d[p], dims[p])))
        })
        .collect())
}

/// Traces out the factors named in `drop`.
pub fn partial_trace(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    drop: &[&str],
) -> Result<ComplexMatrix> {
    layout.check_matrix(m)?;
    let dropped: Vec<usize> = drop
        .iter()
        .map(|l| layout.position(l))
        .collect::<Result<_>>()?;
    let dims = layout.dims();
    let kept: Vec<usize> = (0..dims.len()).filter(|k| !dropped.contains(k)).collect();
    let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let drop_dim: usize = dropped.iter().map(|&k| dims[k]).product();

    // full[kept_idx * drop_dim + drop_idx] = index into m
    let mut full = vec![0usize; kept_dim * drop_dim];
    for i in 0..layout.dim() {
        let d = digits(i, &dims);
        let ki = compose(kept.iter().map(|&k| (d[k], dims[k])));
        let di = compose(dropped.iter().map(|&k| (d[k], dims[k])));
        full[ki * drop_dim + di] = i;
    }

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = ZERO;
            for x in 0..drop_dim {
                acc += m[(full[r * drop_dim + x], full[c * drop_dim + x])];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Transposes the factors named in `flip`, leaving the rest untouched.
pub fn partial_transpose(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    flip: &[&str],
) -> Result<ComplexMatrix> {
    layout.check_matrix(m)?;
    let flipped: Vec<usize> = flip
        .iter()
        .map(|l| layout.position(l))
        .collect::<Result<_>>()?;
    let dims = layout.dims();
    let n = layout.dim();
    let all_digits: Vec<Vec<usize>> = (0..n).map(|i| digits(i, &dims)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (di, dj) = (&all_digits[i], &all_digits[j]);
            let row = compose((0..dims.len()).map(|k| {
                let d = if flipped.contains(&k) { dj[k] } else { di[k] };
                (d, dims[k])
            }));
            let col = compose((0..dims.len()).map(|k| {
                let d = if flipped.contains(&k) { di[k] } else { dj[k] };
                (d, dims[k])
            }));
            out[(row, col)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: the result lives on `layout.reordered(new_order)`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    new_order: &[&str],
) -> Result<ComplexMatrix> {
    layout.check_matrix(m)?;
    let map = index_map(layout, new_order)?;
    let n = layout.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders only the row space of a (possibly rectangular) operator, e.g. the
/// output factors of a Kraus operator.
pub fn permute_rows(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    new_order: &[&str],
) -> Result<ComplexMatrix> {
    if m.rows() != layout.dim() {
        return Err(Error::Dimension(format!(
            "{} rows on a layout of dimension {}",
            m.rows(),
            layout.dim()
        )));
    }
    let map = index_map(layout, new_order)?;
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for (i, &mi) in map.iter().enumerate() {
        for j in 0..m.cols() {
            out[(mi, j)] = m[(i, j)];
        }
    }
    Ok(out)
}
