//! The two operator backends and their common interface.
//!
//! Dense operators act on `ℂ^D`, stored as a [`GradedVector`] with the single
//! rank-0 degree. Lattice operators act on `⊕_n ℂ^d` over `ℤ^k` or `ℤ₊^k`.
//! Equality is tested on degree windows: every basis vector whose degree has all
//! coordinates in `[0, N]` (unsigned) or `[-N, N]` (signed).

pub mod block;
pub mod lattice;
pub mod vector;

pub use block::{apply_block_chain, compare_block_chains, BlockOp};
pub use lattice::{Affine, BlockGenerator, Bounds, Factor, LatticeOperator, LatticeSpace, Term};
pub use vector::GradedVector;

use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, zeros, Mat, Vector, C64, ONE};
use crate::tensorspace::MultiIndex;

/// A square matrix on a finite-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub matrix: Mat,
}

impl DenseOperator {
    pub fn new(matrix: Mat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!("dense operator must be square, got {:?}", matrix.shape())));
        }
        Ok(DenseOperator { matrix })
    }
}

/// The Hilbert space an operator acts on.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Dense(usize),
    Lattice(LatticeSpace),
}

impl Space {
    /// The rank-0 degree carrying dense vectors.
    pub fn dense_degree() -> MultiIndex {
        MultiIndex::zero(0, false)
    }

    pub fn fiber(&self) -> usize {
        match self {
            Space::Dense(d) => *d,
            Space::Lattice(l) => l.fiber,
        }
    }

    pub fn lattice_rank(&self) -> usize {
        match self {
            Space::Dense(_) => 0,
            Space::Lattice(l) => l.rank,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Space::Dense(_))
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Space::Lattice(l) if l.signed)
    }

    pub fn lattice(&self) -> Option<&LatticeSpace> {
        match self {
            Space::Lattice(l) => Some(l),
            Space::Dense(_) => None,
        }
    }

    pub fn window_degrees(&self, n: usize) -> Vec<MultiIndex> {
        match self {
            Space::Dense(_) => vec![Self::dense_degree()],
            Space::Lattice(l) => l.window(n),
        }
    }

    pub fn in_window(&self, m: &MultiIndex, n: usize) -> bool {
        match self {
            Space::Dense(_) => m.rank() == 0,
            Space::Lattice(l) => l.contains_degree(m) && l.in_window(m, n),
        }
    }

    pub fn supported(&self, m: &MultiIndex, comp: usize) -> bool {
        match self {
            Space::Dense(d) => m.rank() == 0 && comp < *d,
            Space::Lattice(l) => comp < l.fiber && l.supported(m, comp),
        }
    }

    /// Supported components at degree `m`.
    pub fn components(&self, m: &MultiIndex) -> Vec<usize> {
        (0..self.fiber()).filter(|&c| self.supported(m, c)).collect()
    }

    /// Every supported basis vector `δ_m ⊗ e_c` with `m` in the window.
    pub fn window_basis(&self, n: usize) -> Vec<(MultiIndex, usize)> {
        let mut out = vec![];
        for m in self.window_degrees(n) {
            for c in self.components(&m) {
                out.push((m.clone(), c));
            }
        }
        out
    }

    pub fn basis_vector(&self, m: &MultiIndex, comp: usize) -> GradedVector {
        GradedVector::basis(m.clone(), self.fiber(), comp)
    }

    pub fn zero_vector(&self) -> GradedVector {
        GradedVector::zeros(self.fiber())
    }

    pub fn mask(&self, v: &mut GradedVector) {
        if let Space::Lattice(l) = self {
            l.mask(v);
        }
    }
}

/// An operator from either backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Dense(DenseOperator),
    Lattice(LatticeOperator),
}

impl From<LatticeOperator> for Op {
    fn from(l: LatticeOperator) -> Self {
        Op::Lattice(l)
    }
}

impl From<DenseOperator> for Op {
    fn from(d: DenseOperator) -> Self {
        Op::Dense(d)
    }
}

impl Op {
    pub fn dense(m: Mat) -> Result<Op> {
        Ok(Op::Dense(DenseOperator::new(m)?))
    }

    pub fn space(&self) -> Space {
        match self {
            Op::Dense(d) => Space::Dense(d.matrix.nrows()),
            Op::Lattice(l) => Space::Lattice(l.space.clone()),
        }
    }

    pub fn identity(space: &Space) -> Op {
        match space {
            Space::Dense(d) => Op::Dense(DenseOperator { matrix: identity(*d) }),
            Space::Lattice(l) => Op::Lattice(LatticeOperator::identity(l)),
        }
    }

    pub fn zero(space: &Space) -> Op {
        match space {
            Space::Dense(d) => Op::Dense(DenseOperator { matrix: zeros(*d, *d) }),
            Space::Lattice(l) => Op::Lattice(LatticeOperator::zero(l)),
        }
    }

    /// A degree-independent block `m` (the whole matrix on dense spaces).
    pub fn constant(space: &Space, m: Mat) -> Result<Op> {
        match space {
            Space::Dense(_) => Op::dense(m),
            Space::Lattice(l) => Ok(Op::Lattice(LatticeOperator::constant(l, m)?)),
        }
    }

    pub fn as_lattice(&self) -> Option<&LatticeOperator> {
        match self {
            Op::Lattice(l) => Some(l),
            Op::Dense(_) => None,
        }
    }

    pub fn as_dense(&self) -> Option<&Mat> {
        match self {
            Op::Dense(d) => Some(&d.matrix),
            Op::Lattice(_) => None,
        }
    }

    pub fn apply(&self, v: &GradedVector) -> GradedVector {
        match self {
            Op::Dense(d) => {
                let key = Space::dense_degree();
                match v.get(&key) {
                    Some(x) => GradedVector::single(key, &d.matrix * x),
                    None => GradedVector::zeros(d.matrix.nrows()),
                }
            }
            Op::Lattice(l) => l.apply(v),
        }
    }

    pub fn adjoint(&self) -> Op {
        match self {
            Op::Dense(d) => Op::Dense(DenseOperator { matrix: dagger(&d.matrix) }),
            Op::Lattice(l) => Op::Lattice(l.adjoint()),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Op) -> Result<Op> {
        match (self, other) {
            (Op::Dense(a), Op::Dense(b)) if a.matrix.ncols() == b.matrix.nrows() => {
                Ok(Op::Dense(DenseOperator { matrix: &a.matrix * &b.matrix }))
            }
            (Op::Lattice(a), Op::Lattice(b)) => Ok(Op::Lattice(a.compose(b)?)),
            _ => Err(Error::Dimension("compose: operator spaces differ".into())),
        }
    }

    /// Left-to-right product `ops[0] ∘ ops[1] ∘ …`; identity when empty.
    pub fn product(space: &Space, ops: &[&Op]) -> Result<Op> {
        let mut acc = Op::identity(space);
        for op in ops {
            acc = acc.compose(op)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Op) -> Result<Op> {
        match (self, other) {
            (Op::Dense(a), Op::Dense(b)) if a.matrix.shape() == b.matrix.shape() => {
                Ok(Op::Dense(DenseOperator { matrix: &a.matrix + &b.matrix }))
            }
            (Op::Lattice(a), Op::Lattice(b)) => Ok(Op::Lattice(a.add(b)?)),
            _ => Err(Error::Dimension("add: operator spaces differ".into())),
        }
    }

    pub fn sub(&self, other: &Op) -> Result<Op> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Op {
        match self {
            Op::Dense(d) => Op::Dense(DenseOperator { matrix: d.matrix.map(|x| x * c) }),
            Op::Lattice(l) => Op::Lattice(l.scale(c)),
        }
    }

    /// Largest absolute offset coordinate (0 for dense operators).
    pub fn max_offset(&self) -> i64 {
        match self {
            Op::Dense(_) => 0,
            Op::Lattice(l) => l.max_offset(),
        }
    }
}

/// Result of comparing two maps on every window basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCheck {
    pub equal: bool,
    pub max_deviation: f64,
    /// Worst basis vector `(degree, component)`.
    pub worst: Option<(MultiIndex, usize)>,
    pub tested: usize,
}

/// Compare `f` and `g` on every supported basis vector of degree within the window.
pub fn compare_on_window(
    space: &Space,
    n: usize,
    tol: f64,
    f: impl Fn(&GradedVector) -> GradedVector,
    g: impl Fn(&GradedVector) -> GradedVector,
) -> WindowCheck {
    let mut check = WindowCheck { equal: true, max_deviation: 0.0, worst: None, tested: 0 };
    for (m, c) in space.window_basis(n) {
        let v = space.basis_vector(&m, c);
        let dev = f(&v).minus(&g(&v)).norm();
        check.tested += 1;
        if dev > check.max_deviation || (dev.is_nan() && check.max_deviation.is_finite()) {
            check.max_deviation = if dev.is_nan() { f64::INFINITY } else { dev };
            check.worst = Some((m, c));
        }
    }
    check.equal = check.max_deviation <= tol;
    check
}

/// `‖(a - b)v‖ ≤ tol` for every window basis vector `v`.
pub fn equal_on_window(a: &Op, b: &Op, n: usize, tol: f64) -> Result<WindowCheck> {
    if a.space() != b.space() {
        return Err(Error::Dimension("equal_on_window: operator spaces differ".into()));
    }
    Ok(compare_on_window(&a.space(), n, tol, |v| a.apply(v), |v| b.apply(v)))
}

/// Apply a product `ops[0] ∘ ops[1] ∘ …` to a vector without forming it symbolically.
pub fn apply_chain(ops: &[&Op], v: &GradedVector) -> GradedVector {
    ops.iter().rev().fold(v.clone(), |acc, op| op.apply(&acc))
}

/// Coefficient vector of a dense graded vector (zero if empty).
pub fn dense_coords(v: &GradedVector, dim: usize) -> Vector {
    v.get(&Space::dense_degree()).cloned().unwrap_or_else(|| Vector::zeros(dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_rows};
    use proptest::prelude::*;

    /// `(offset, coefficient, domain lower bound, per-coordinate exponent of U)`.
    type TermSpec = (Vec<i64>, C64, Option<Vec<i64>>, i64);

    fn lattice_op(space: &LatticeSpace, terms: Vec<TermSpec>, u: &Mat) -> Op {
        let ts = terms
            .into_iter()
            .map(|(off, coeff, lo, e)| {
                let rank = off.len();
                let mut t = Term::new(
                    off,
                    vec![Factor::power("U", u.clone(), Affine { coeffs: vec![e; rank], constant: 1 }).unwrap()],
                )
                .with_coeff(coeff);
                if let Some(lo) = lo {
                    t = t.with_domain(Bounds::at_least(&lo));
                }
                t
            })
            .collect();
        Op::Lattice(LatticeOperator::new(space.clone(), ts).unwrap())
    }

    fn random_vector(space: &LatticeSpace, seed: u64, n: usize) -> GradedVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = GradedVector::zeros(space.fiber);
        for m in space.window(n) {
            if rng.random::<f64>() < 0.5 {
                let x = Vector::from_fn(space.fiber, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                v.add_at(m, &x);
            }
        }
        v
    }

    fn term_strategy(rank: usize) -> impl Strategy<Value = Vec<TermSpec>> {
        prop::collection::vec(
            (
                prop::collection::vec(-2i64..3, rank),
                (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)),
                prop::option::of(prop::collection::vec(-2i64..3, rank)),
                -2i64..3,
            ),
            1..4,
        )
    }

    fn unitary2() -> Mat {
        let s = 0.5f64.sqrt();
        Mat::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)])
    }

    proptest! {
        #[test]
        fn adjoint_pairing(signed in any::<bool>(), ta in term_strategy(2), s1 in 0u64..1000, s2 in 0u64..1000) {
            let space = LatticeSpace::new(2, 2, signed);
            let a = lattice_op(&space, ta, &unitary2());
            let v = random_vector(&space, s1, 3);
            let w = random_vector(&space, s2, 3);
            let lhs = w.inner(&a.apply(&v));
            let rhs = a.adjoint().apply(&w).inner(&v);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn compose_matches_sequential(signed in any::<bool>(), ta in term_strategy(2), tb in term_strategy(2), s in 0u64..1000) {
            let space = LatticeSpace::new(2, 2, signed);
            let a = lattice_op(&space, ta, &unitary2());
            let b = lattice_op(&space, tb, &unitary2());
            let v = random_vector(&space, s, 3);
            let direct = a.compose(&b).unwrap().apply(&v);
            let seq = a.apply(&b.apply(&v));
            prop_assert!(direct.minus(&seq).norm() < 1e-12);
            let adj = a.compose(&b).unwrap().adjoint().apply(&v);
            let adj_seq = b.adjoint().apply(&a.adjoint().apply(&v));
            prop_assert!(adj.minus(&adj_seq).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_operator_gives_zero() {
        let sp = Space::Lattice(LatticeSpace::new(1, 1, false));
        let v = sp.basis_vector(&MultiIndex::zero(1, false), 0);
        assert!(Op::zero(&sp).apply(&v).is_zero());
        let d = Space::Dense(3);
        assert!(Op::zero(&d).apply(&d.basis_vector(&Space::dense_degree(), 2)).is_zero());
    }

    #[test]
    fn window_equality_and_negative_control() {
        let sp = LatticeSpace::new(2, 1, false);
        let u = Mat::from_element(1, 1, c(0.0, 1.0));
        let a = lattice_op(&sp, vec![(vec![1, 0], ONE, None, 1)], &u);
        let chk = equal_on_window(&a, &a.clone(), 4, 0.0).unwrap();
        assert!(chk.equal && chk.max_deviation == 0.0);
        let b = lattice_op(&sp, vec![(vec![1, 0], ONE, None, 2)], &u);
        let chk = equal_on_window(&a, &b, 4, 1e-12).unwrap();
        assert!(!chk.equal);
        assert!(chk.worst.is_some());
    }

    #[test]
    fn dense_ops_compose() {
        let x = Op::dense(from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let xx = x.compose(&x).unwrap();
        assert!(equal_on_window(&xx, &Op::identity(&Space::Dense(2)), 0, 0.0).unwrap().equal);
    }
}
