//! Multi-indices, fiber bookkeeping and the flip unitaries of a product system.
//!
//! Every tensor product uses the row-major convention of [`kron`]: in
//! `E_a ⊗ E_b` the basis vector `e_x ⊗ e_y` sits at index `x·dim(E_b) + y`.
//! A flip `t_ij : E_i ⊗ E_j → E_j ⊗ E_i` is therefore a `(d_j·d_i) × (d_i·d_j)`
//! matrix whose entry `[γ·d_i + δ, α·d_j + β]` is `⟨e^j_γ ⊗ e^i_δ, t_ij(e^i_α ⊗ e^j_β)⟩`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, is_unitary, max_abs_diff, zeros, Mat, ONE};
use crate::report::CheckReport;

pub use crate::linalg::kron;

/// A lattice degree in `ℤ^k` (signed) or `ℤ₊^k` (unsigned).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub coords: Vec<i64>,
    pub signed: bool,
}

impl MultiIndex {
    pub fn new(coords: Vec<i64>, signed: bool) -> Result<Self> {
        if !signed && coords.iter().any(|&c| c < 0) {
            return Err(Error::Input(format!("negative coordinate in unsigned multi-index {coords:?}")));
        }
        Ok(MultiIndex { coords, signed })
    }

    pub fn zero(rank: usize, signed: bool) -> Self {
        MultiIndex { coords: vec![0; rank], signed }
    }

    pub fn unit(rank: usize, i: usize, signed: bool) -> Self {
        let mut coords = vec![0; rank];
        coords[i] = 1;
        MultiIndex { coords, signed }
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn total(&self) -> i64 {
        self.coords.iter().sum()
    }

    /// `self + offset`, or `None` when the result leaves `ℤ₊^k` on an unsigned lattice.
    pub fn shifted(&self, offset: &[i64]) -> Option<MultiIndex> {
        debug_assert_eq!(offset.len(), self.coords.len());
        let coords: Vec<i64> = self.coords.iter().zip(offset).map(|(a, b)| a + b).collect();
        if !self.signed && coords.iter().any(|&c| c < 0) {
            None
        } else {
            Some(MultiIndex { coords, signed: self.signed })
        }
    }

    pub fn max_abs(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// All degrees with every coordinate in `[0, n]` (unsigned) or `[-n, n]` (signed).
    pub fn window(rank: usize, signed: bool, n: usize) -> Vec<MultiIndex> {
        let lo = if signed { -(n as i64) } else { 0 };
        Self::boxed(&vec![lo; rank], &vec![n as i64; rank], signed)
    }

    /// All degrees in the box `lo ≤ m ≤ hi`, lexicographic order.
    pub fn boxed(lo: &[i64], hi: &[i64], signed: bool) -> Vec<MultiIndex> {
        let rank = lo.len();
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            return vec![];
        }
        let mut out = vec![];
        let mut cur = lo.to_vec();
        loop {
            out.push(MultiIndex { coords: cur.clone(), signed });
            let mut p = rank;
            loop {
                if p == 0 {
                    return out;
                }
                p -= 1;
                if cur[p] < hi[p] {
                    cur[p] += 1;
                    cur[p + 1..rank].copy_from_slice(&lo[p + 1..rank]);
                    break;
                }
            }
        }
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The coordinate swap `E_a ⊗ E_b → E_b ⊗ E_a`: column `x·d_b + y` has its 1 at row `y·d_a + x`.
pub fn swap_flip(da: usize, db: usize) -> Mat {
    let mut m = zeros(db * da, da * db);
    for x in 0..da {
        for y in 0..db {
            m[(y * da + x, x * db + y)] = ONE;
        }
    }
    m
}

/// Fiber dimensions `d_1..d_k` and the flips `t_ij` for every ordered pair `i ≠ j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSpec {
    pub dims: Vec<usize>,
    flips: BTreeMap<(usize, usize), Mat>,
}

impl FiberSpec {
    /// All flips set to the coordinate swap.
    pub fn coordinate_swaps(dims: Vec<usize>) -> Self {
        let mut flips = BTreeMap::new();
        for i in 0..dims.len() {
            for j in 0..dims.len() {
                if i != j {
                    flips.insert((i, j), swap_flip(dims[i], dims[j]));
                }
            }
        }
        FiberSpec { dims, flips }
    }

    /// Scalar fibers `d_i = 1` with unimodular flips `c_ij` for `i < j` (and `c_ji = c̄_ij`).
    pub fn scalar(k: usize, scalars: &BTreeMap<(usize, usize), crate::linalg::C64>) -> Result<Self> {
        let mut spec = Self::coordinate_swaps(vec![1; k]);
        for (&(i, j), &c) in scalars {
            spec.set_flip(i, j, Mat::from_element(1, 1, c))?;
        }
        Ok(spec)
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Register `t_ij` and its inverse `t_ji = t_ij*`.
    pub fn set_flip(&mut self, i: usize, j: usize, t: Mat) -> Result<()> {
        self.check_pair(i, j)?;
        let (di, dj) = (self.dims[i], self.dims[j]);
        if t.shape() != (dj * di, di * dj) {
            return Err(Error::Dimension(format!(
                "flip t_{i}{j} must be {}x{}, got {}x{}",
                dj * di,
                di * dj,
                t.nrows(),
                t.ncols()
            )));
        }
        if !is_unitary(&t, 1e-10) {
            return Err(Error::Input(format!("flip t_{i}{j} is not unitary")));
        }
        self.flips.insert((j, i), dagger(&t));
        self.flips.insert((i, j), t);
        Ok(())
    }

    pub fn flip(&self, i: usize, j: usize) -> Result<&Mat> {
        self.check_pair(i, j)?;
        Ok(&self.flips[&(i, j)])
    }

    /// The `1×1` entry of `t_ij` for scalar fibers.
    pub fn scalar_flip(&self, i: usize, j: usize) -> Result<crate::linalg::C64> {
        let t = self.flip(i, j)?;
        if t.shape() != (1, 1) {
            return Err(Error::Unsupported(format!("flip t_{i}{j} is not scalar")));
        }
        Ok(t[(0, 0)])
    }

    pub fn all_scalar(&self) -> bool {
        self.dims.iter().all(|&d| d == 1)
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::Input(format!("invalid flip pair ({i},{i})")));
        }
        if i >= self.rank() || j >= self.rank() {
            return Err(Error::Input(format!("flip pair ({i},{j}) out of range for rank {}", self.rank())));
        }
        Ok(())
    }

    /// Structural invariants: shapes, unitarity and `t_ji t_ij = I`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                if i == j {
                    continue;
                }
                let t = self.flip(i, j)?;
                let back = self.flip(j, i)?;
                if max_abs_diff(&(back * t), &identity(t.ncols())) > tol {
                    return Err(Error::Input(format!("t_{j}{i} is not the inverse of t_{i}{j}")));
                }
            }
        }
        Ok(())
    }

    /// `dim E_i^n = d_i^n`.
    pub fn power_dim(&self, i: usize, n: usize) -> usize {
        self.dims[i].pow(n as u32)
    }
}

/// `t_ij^{(n)} : E_i ⊗ E_j^n → E_j^n ⊗ E_i`, the ordered product
/// `∏_{k=1}^{n} (I_{E_j^{n-k}} ⊗ t_ij ⊗ I_{E_j^{k-1}})` with `k = 1` leftmost.
pub fn flip_iterated(spec: &FiberSpec, i: usize, j: usize, n: usize) -> Result<Mat> {
    let t = spec.flip(i, j)?;
    let di = spec.dims[i];
    let total = di * spec.power_dim(j, n);
    let mut acc = identity(total);
    for k in 1..=n {
        let f = kron(&kron(&identity(spec.power_dim(j, n - k)), t), &identity(spec.power_dim(j, k - 1)));
        acc *= f;
    }
    Ok(acc)
}

/// `t_ij^{(m,n)} : E_i^m ⊗ E_j^n → E_j^n ⊗ E_i^m`, the ordered product
/// `∏_{k=1}^{m} (I_{E_i^{k-1}} ⊗ t_ij^{(n)} ⊗ I_{E_i^{m-k}})` with `k = 1` leftmost.
pub fn flip_block(spec: &FiberSpec, i: usize, j: usize, m: usize, n: usize) -> Result<Mat> {
    spec.check_pair(i, j)?;
    let total = spec.power_dim(i, m) * spec.power_dim(j, n);
    if m == 0 || n == 0 {
        return Ok(identity(total));
    }
    let tn = flip_iterated(spec, i, j, n)?;
    let mut acc = identity(total);
    for k in 1..=m {
        let f = kron(&kron(&identity(spec.power_dim(i, k - 1)), &tn), &identity(spec.power_dim(i, m - k)));
        acc *= f;
    }
    Ok(acc)
}

/// One hexagon evaluation for the triple `i > j > l` at level `n`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HexagonEntry {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub n: usize,
    pub deviation: f64,
    /// Row/column of the worst entry.
    pub at: (usize, usize),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HexagonReport {
    pub check: CheckReport,
    pub entries: Vec<HexagonEntry>,
}

/// Both sides of the level-`n` hexagon on `E_i ⊗ E_j ⊗ E_l^n`:
/// `(I_{E_l^n}⊗t_ij)(t_il^{(n)}⊗I_{E_j})(I_{E_i}⊗t_jl^{(n)})` and
/// `(t_jl^{(n)}⊗I_{E_i})(I_{E_j}⊗t_il^{(n)})(t_ij⊗I_{E_l^n})`.
pub fn hexagon_sides(spec: &FiberSpec, i: usize, j: usize, l: usize, n: usize) -> Result<(Mat, Mat)> {
    let (di, dj, dln) = (spec.dims[i], spec.dims[j], spec.power_dim(l, n));
    let tij = spec.flip(i, j)?;
    let til = flip_iterated(spec, i, l, n)?;
    let tjl = flip_iterated(spec, j, l, n)?;
    let lhs = kron(&identity(dln), tij) * kron(&til, &identity(dj)) * kron(&identity(di), &tjl);
    let rhs = kron(&tjl, &identity(di)) * kron(&identity(dj), &til) * kron(tij, &identity(dln));
    Ok((lhs, rhs))
}

/// Check the level-`n` hexagon for all `i > j > l` and `1 ≤ n ≤ bound`.
pub fn check_hexagon(spec: &FiberSpec, bound: usize, tol: f64) -> Result<HexagonReport> {
    let mut check = CheckReport::new("hexagon", tol);
    let mut entries = vec![];
    let k = spec.rank();
    if k < 3 {
        check.add_note("rank < 3: no triples, vacuous");
    }
    for i in 0..k {
        for j in 0..i {
            for l in 0..j {
                for n in 1..=bound {
                    let (lhs, rhs) = hexagon_sides(spec, i, j, l, n)?;
                    let mut at = (0, 0);
                    let mut dev = 0.0;
                    for r in 0..lhs.nrows() {
                        for c in 0..lhs.ncols() {
                            let d = (lhs[(r, c)] - rhs[(r, c)]).norm();
                            if d > dev {
                                dev = d;
                                at = (r, c);
                            }
                        }
                    }
                    check.record(dev, || format!("(i,j,l)=({i},{j},{l}) n={n} entry=({},{})", at.0, at.1));
                    entries.push(HexagonEntry { i, j, l, n, deviation: dev, at });
                }
            }
        }
    }
    Ok(HexagonReport { check, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_rows, is_identity, max_abs};
    use proptest::prelude::*;

    fn c3_s1() -> Mat {
        from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
    }
    fn c3_s2() -> Mat {
        from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]])
    }

    #[test]
    fn kron_examples() {
        assert!(is_identity(&kron(&identity(2), &identity(3)), 0.0));
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(kron(&x, &identity(1)), x);
        // S1 e_a = e_{a+1}, S2 e_b = e_{b+2}; oracle: move each basis vector by hand.
        let k = kron(&c3_s1(), &c3_s2());
        for a in 0..3 {
            for b in 0..3 {
                let target = ((a + 1) % 3) * 3 + (b + 2) % 3;
                for r in 0..9 {
                    let expect = if r == target { 1.0 } else { 0.0 };
                    assert_eq!(k[(r, a * 3 + b)], c(expect, 0.0));
                }
            }
        }
    }

    #[test]
    fn multi_index_window_and_shift() {
        let w = MultiIndex::window(2, false, 2);
        assert_eq!(w.len(), 9);
        assert_eq!(MultiIndex::window(1, true, 3).len(), 7);
        let z = MultiIndex::zero(2, false);
        assert!(z.shifted(&[-1, 0]).is_none());
        assert_eq!(z.shifted(&[1, 2]).unwrap().coords, vec![1, 2]);
        assert!(MultiIndex::new(vec![-1], false).is_err());
        assert_eq!(MultiIndex::window(0, false, 5).len(), 1);
    }

    #[test]
    fn flip_iterated_base_cases() {
        let spec = FiberSpec::coordinate_swaps(vec![2, 3]);
        assert!(is_identity(&flip_iterated(&spec, 0, 1, 0).unwrap(), 0.0));
        assert_eq!(&flip_iterated(&spec, 0, 1, 1).unwrap(), spec.flip(0, 1).unwrap());
        assert!(flip_iterated(&spec, 1, 1, 2).is_err());
    }

    #[test]
    fn flip_iterated_n2_moves_first_slot_to_end() {
        // Oracle: e_x ⊗ e_y ⊗ e_z ↦ e_y ⊗ e_z ⊗ e_x for d_i = d_j = 2.
        let spec = FiberSpec::coordinate_swaps(vec![2, 2]);
        let t2 = flip_iterated(&spec, 0, 1, 2).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let col = x * 4 + y * 2 + z;
                    let row = y * 4 + z * 2 + x;
                    for r in 0..8 {
                        assert_eq!(t2[(r, col)].re, if r == row { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        let t = spec.flip(0, 1).unwrap();
        let composed = kron(&identity(2), t) * kron(t, &identity(2));
        assert_eq!(t2, composed);
    }

    #[test]
    fn flip_block_examples() {
        let spec = FiberSpec::coordinate_swaps(vec![2, 3]);
        for n in 0..3 {
            assert_eq!(flip_block(&spec, 0, 1, 1, n).unwrap(), flip_iterated(&spec, 0, 1, n).unwrap());
        }
        assert!(is_identity(&flip_block(&spec, 0, 1, 2, 0).unwrap(), 0.0));
        let mut scalars = BTreeMap::new();
        scalars.insert((0, 1), c(0.0, 1.0));
        let ones = FiberSpec::coordinate_swaps(vec![1, 1]);
        assert!(is_identity(&flip_block(&ones, 0, 1, 2, 2).unwrap(), 0.0));
        // Scalar flip c gives c^{mn}.
        let sc = FiberSpec::scalar(2, &scalars).unwrap();
        let v = flip_block(&sc, 0, 1, 2, 3).unwrap()[(0, 0)];
        assert!((v - c(0.0, 1.0).powi(6)).norm() < 1e-14);
    }

    #[test]
    fn swap_hexagon_exact_for_small_dims() {
        for dims in [[1, 1, 1], [2, 1, 2], [2, 2, 2], [1, 2, 2]] {
            let spec = FiberSpec::coordinate_swaps(dims.to_vec());
            let rep = check_hexagon(&spec, 3, 0.0).unwrap();
            assert!(rep.check.passed, "{dims:?}: {}", rep.check.summary());
            assert_eq!(rep.check.max_deviation, 0.0);
        }
    }

    /// A valid non-swap product system: t_{1,0} = (X ⊗ I)·swap, the rest swaps.
    fn relabeled_spec() -> FiberSpec {
        let mut spec = FiberSpec::coordinate_swaps(vec![2, 2, 2]);
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        spec.set_flip(1, 0, kron(&x, &identity(2)) * swap_flip(2, 2)).unwrap();
        spec
    }

    #[test]
    fn relabeled_swap_satisfies_hexagon() {
        let rep = check_hexagon(&relabeled_spec(), 3, 1e-14).unwrap();
        assert!(rep.check.passed, "{}", rep.check.summary());
    }

    #[test]
    fn corrupted_sign_breaks_hexagon() {
        let mut spec = relabeled_spec();
        let d = crate::linalg::diag(&[ONE, ONE, ONE, -ONE]);
        spec.set_flip(2, 0, d * swap_flip(2, 2)).unwrap();
        let rep = check_hexagon(&spec, 3, 1e-12).unwrap();
        assert!(!rep.check.passed);
        assert!(rep.check.first_violation.as_ref().unwrap().contains("(i,j,l)=(2,1,0)"));
        assert!(rep.check.max_deviation > 0.5);
    }

    #[test]
    fn scalar_fibers_hexagon_always_holds() {
        let mut s = BTreeMap::new();
        s.insert((0, 1), c(0.6, 0.8));
        s.insert((0, 2), crate::linalg::phase(0.3));
        s.insert((1, 2), crate::linalg::phase(0.77));
        let spec = FiberSpec::scalar(3, &s).unwrap();
        assert!(check_hexagon(&spec, 3, 1e-14).unwrap().check.passed);
    }

    #[test]
    fn rejects_bad_flips() {
        let mut spec = FiberSpec::coordinate_swaps(vec![2, 2]);
        assert!(spec.set_flip(0, 1, identity(3)).is_err());
        assert!(spec.set_flip(0, 1, identity(4).scale(2.0)).is_err());
        assert!(spec.set_flip(0, 0, identity(4)).is_err());
        assert!(spec.validate(1e-12).is_ok());
    }

    fn random_spec(seed: u64, dims: Vec<usize>) -> FiberSpec {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut spec = FiberSpec::coordinate_swaps(dims.clone());
        for i in 0..dims.len() {
            for j in i + 1..dims.len() {
                let u = crate::linalg::random_unitary(dims[i] * dims[j], &mut rng);
                spec.set_flip(i, j, u).unwrap();
            }
        }
        spec
    }

    proptest! {
        #[test]
        fn iterated_flip_recursion(seed in 0u64..500, di in 1usize..3, dj in 1usize..3, n in 0usize..3) {
            let spec = random_spec(seed, vec![di, dj]);
            let t = spec.flip(0, 1).unwrap().clone();
            let next = flip_iterated(&spec, 0, 1, n + 1).unwrap();
            let rec = kron(&identity(spec.power_dim(1, n)), &t)
                * kron(&flip_iterated(&spec, 0, 1, n).unwrap(), &identity(dj));
            prop_assert!(max_abs_diff(&next, &rec) < 1e-12);
        }

        #[test]
        fn block_flip_unitary_and_inverse(seed in 0u64..500, di in 1usize..3, dj in 1usize..3, m in 0usize..3, n in 0usize..3) {
            let spec = random_spec(seed, vec![di, dj]);
            let x = flip_block(&spec, 0, 1, m, n).unwrap();
            prop_assert!(is_unitary(&x, 1e-12));
            let back = flip_block(&spec, 1, 0, n, m).unwrap();
            prop_assert!(max_abs_diff(&(back * &x), &identity(x.ncols())) < 1e-12);
        }

        #[test]
        fn block_flip_second_index_recursion(seed in 0u64..300, di in 1usize..3, dj in 1usize..3, m in 1usize..3, n in 1usize..3) {
            // t^{(m,n)} = (I_{E_j^{n-1}} ⊗ t^{(m,1)})(t^{(m,n-1)} ⊗ I_{E_j})
            let spec = random_spec(seed, vec![di, dj]);
            let lhs = flip_block(&spec, 0, 1, m, n).unwrap();
            let rhs = kron(&identity(spec.power_dim(1, n - 1)), &flip_block(&spec, 0, 1, m, 1).unwrap())
                * kron(&flip_block(&spec, 0, 1, m, n - 1).unwrap(), &identity(dj));
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn swap_flip_is_permutation(da in 1usize..4, db in 1usize..4) {
            let s = swap_flip(da, db);
            prop_assert!(is_unitary(&s, 0.0));
            prop_assert!(max_abs(&(swap_flip(db, da) * &s - identity(da * db))) == 0.0);
        }
    }
}
