//! Block operators `E ⊗ ℋ → E' ⊗ ℋ` with operator entries, used for the
//! tilde maps `T̃_i` and the flip-twist products `t ⊗ U`.
//!
//! Block row `r` corresponds to the fiber basis vector with row-major index `r`.
//! Identities between products of block operators are checked by applying the
//! factors to vectors, never by multiplying the blocks out symbolically.

use super::{GradedVector, Op, Space, WindowCheck};
use crate::error::{Error, Result};
use crate::linalg::{Mat, ZERO};

#[derive(Clone, Debug)]
pub struct BlockOp {
    pub space: Space,
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Option<Op>>,
}

impl BlockOp {
    pub fn zero(space: &Space, rows: usize, cols: usize) -> Self {
        BlockOp { space: space.clone(), rows, cols, entries: vec![None; rows * cols] }
    }

    pub fn set(&mut self, r: usize, c: usize, op: Op) {
        self.entries[r * self.cols + c] = Some(op);
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&Op> {
        self.entries[r * self.cols + c].as_ref()
    }

    /// A `1 × n` row `[ops[0] … ops[n-1]]`.
    pub fn row(space: &Space, ops: Vec<Op>) -> Self {
        let n = ops.len();
        BlockOp { space: space.clone(), rows: 1, cols: n, entries: ops.into_iter().map(Some).collect() }
    }

    /// A single operator viewed as a `1 × 1` block.
    pub fn single(op: Op) -> Self {
        let space = op.space();
        Self::row(&space, vec![op])
    }

    pub fn identity(space: &Space, n: usize) -> Self {
        let mut b = Self::zero(space, n, n);
        for i in 0..n {
            b.set(i, i, Op::identity(space));
        }
        b
    }

    /// `I_k ⊗ X`: `k` diagonal copies of `X`.
    pub fn identity_kron(k: usize, x: &BlockOp) -> Self {
        let mut b = Self::zero(&x.space, k * x.rows, k * x.cols);
        for s in 0..k {
            for r in 0..x.rows {
                for c in 0..x.cols {
                    if let Some(op) = x.get(r, c) {
                        b.set(s * x.rows + r, s * x.cols + c, op.clone());
                    }
                }
            }
        }
        b
    }

    /// `m ⊗ U` for a scalar matrix `m`: block `(r, c)` is `m[r,c]·U`.
    pub fn scalar_kron(m: &Mat, u: &Op) -> Self {
        let space = u.space();
        let mut b = Self::zero(&space, m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != ZERO {
                    b.set(r, c, u.scale(m[(r, c)]));
                }
            }
        }
        b
    }

    /// `m ⊗ I_ℋ`.
    pub fn scalar(space: &Space, m: &Mat) -> Self {
        Self::scalar_kron(m, &Op::identity(space))
    }

    pub fn adjoint(&self) -> Self {
        let mut b = Self::zero(&self.space, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if let Some(op) = self.get(r, c) {
                    b.set(c, r, op.adjoint());
                }
            }
        }
        b
    }

    pub fn apply(&self, v: &[GradedVector]) -> Vec<GradedVector> {
        debug_assert_eq!(v.len(), self.cols);
        let fiber = self.space.fiber();
        (0..self.rows)
            .map(|r| {
                let mut acc = GradedVector::zeros(fiber);
                for (c, vc) in v.iter().enumerate() {
                    if vc.entries.is_empty() {
                        continue;
                    }
                    if let Some(op) = self.get(r, c) {
                        acc.add_scaled(crate::linalg::ONE, &op.apply(vc));
                    }
                }
                acc
            })
            .collect()
    }

    /// Symbolic product `self · other` (entries composed and summed).
    pub fn compose(&self, other: &BlockOp) -> Result<BlockOp> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "block compose: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut b = Self::zero(&self.space, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc: Option<Op> = None;
                for m in 0..self.cols {
                    if let (Some(x), Some(y)) = (self.get(r, m), other.get(m, c)) {
                        let p = x.compose(y)?;
                        acc = Some(match acc {
                            Some(a) => a.add(&p)?,
                            None => p,
                        });
                    }
                }
                if let Some(a) = acc {
                    b.set(r, c, a);
                }
            }
        }
        Ok(b)
    }
}

/// Apply `chain[0] · chain[1] · …` to a block vector, rightmost first.
pub fn apply_block_chain(chain: &[&BlockOp], v: Vec<GradedVector>) -> Vec<GradedVector> {
    chain.iter().rev().fold(v, |acc, b| b.apply(&acc))
}

/// Compare two products of block operators on every block basis vector
/// `e_c ⊗ δ_m ⊗ e_a` with `m` in the window.
pub fn compare_block_chains(
    space: &Space,
    n: usize,
    tol: f64,
    lhs: &[&BlockOp],
    rhs: &[&BlockOp],
) -> Result<WindowCheck> {
    let cols_l = lhs.last().map(|b| b.cols).ok_or_else(|| Error::Input("empty block chain".into()))?;
    let cols_r = rhs.last().map(|b| b.cols).ok_or_else(|| Error::Input("empty block chain".into()))?;
    let rows_l = lhs[0].rows;
    let rows_r = rhs[0].rows;
    if cols_l != cols_r || rows_l != rows_r {
        return Err(Error::Dimension(format!("block chains have shapes {rows_l}x{cols_l} and {rows_r}x{cols_r}")));
    }
    for w in lhs.windows(2).chain(rhs.windows(2)) {
        if w[0].cols != w[1].rows {
            return Err(Error::Dimension("block chain factors do not conform".into()));
        }
    }
    let mut check = WindowCheck { equal: true, max_deviation: 0.0, worst: None, tested: 0 };
    let fiber = space.fiber();
    for (m, a) in space.window_basis(n) {
        for c in 0..cols_l {
            let mut v = vec![GradedVector::zeros(fiber); cols_l];
            v[c] = space.basis_vector(&m, a);
            let l = apply_block_chain(lhs, v.clone());
            let r = apply_block_chain(rhs, v);
            let dev = l.iter().zip(&r).map(|(x, y)| x.minus(y).norm_sqr()).sum::<f64>().sqrt();
            check.tested += 1;
            if dev > check.max_deviation || dev.is_nan() {
                check.max_deviation = if dev.is_nan() { f64::INFINITY } else { dev };
                check.worst = Some((m.clone(), c * fiber + a));
            }
        }
    }
    check.equal = check.max_deviation <= tol;
    Ok(check)
}
