//! Graded lattice operators: finite sums of `(offset, block)` terms acting on `⊕_n ℂ^d`.
//!
//! A term `(c, s, D, f)` sends `δ_n ⊗ h` to `c · δ_{n+s} ⊗ f(n)h` whenever `n ∈ D`.
//! On unsigned lattices the output is dropped when `n + s` leaves `ℤ₊^k`; this is
//! the only lossy boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::vector::GradedVector;
use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, is_identity, is_unitary, mat_pow, Mat, Vector, C64, ONE, ZERO};
use crate::tensorspace::MultiIndex;

/// A box `lo ≤ n ≤ hi` with optional bounds per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<Option<i64>>,
    pub hi: Vec<Option<i64>>,
}

impl Bounds {
    pub fn unbounded(rank: usize) -> Self {
        Bounds { lo: vec![None; rank], hi: vec![None; rank] }
    }

    pub fn at_least(lo: &[i64]) -> Self {
        Bounds { lo: lo.iter().map(|&x| Some(x)).collect(), hi: vec![None; lo.len()] }
    }

    pub fn rank(&self) -> usize {
        self.lo.len()
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|b| b.is_none())
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        n.iter().enumerate().all(|(c, &x)| self.lo[c].is_none_or(|l| x >= l) && self.hi[c].is_none_or(|h| x <= h))
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| matches!((l, h), (Some(l), Some(h)) if l > h))
    }

    pub fn intersect(&self, other: &Bounds) -> Bounds {
        let pick = |a: Option<i64>, b: Option<i64>, f: fn(i64, i64) -> i64| match (a, b) {
            (Some(x), Some(y)) => Some(f(x, y)),
            (x, None) => x,
            (None, y) => y,
        };
        Bounds {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| pick(*a, *b, i64::max)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| pick(*a, *b, i64::min)).collect(),
        }
    }

    /// `{n + s : n ∈ self}`.
    pub fn shifted(&self, s: &[i64]) -> Bounds {
        Bounds {
            lo: self.lo.iter().zip(s).map(|(b, d)| b.map(|x| x + d)).collect(),
            hi: self.hi.iter().zip(s).map(|(b, d)| b.map(|x| x + d)).collect(),
        }
    }

    /// Drop lower bounds that are vacuous on `ℤ₊^k`.
    pub fn normalized(mut self, signed: bool) -> Bounds {
        if !signed {
            for l in self.lo.iter_mut() {
                if l.is_some_and(|x| x <= 0) {
                    *l = None;
                }
            }
        }
        self
    }
}

/// Affine exponent law `n ↦ coeffs·n + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl Affine {
    pub fn constant(rank: usize, c: i64) -> Self {
        Affine { coeffs: vec![0; rank], constant: c }
    }

    /// `n ↦ n_i`.
    pub fn coordinate(rank: usize, i: usize) -> Self {
        let mut coeffs = vec![0; rank];
        coeffs[i] = 1;
        Affine { coeffs, constant: 0 }
    }

    pub fn eval(&self, n: &[i64]) -> i64 {
        self.coeffs.iter().zip(n).map(|(a, b)| a * b).sum::<i64>() + self.constant
    }

    /// `n ↦ f(n + s)`.
    pub fn shifted(&self, s: &[i64]) -> Affine {
        Affine { coeffs: self.coeffs.clone(), constant: self.eval(s) }
    }

    pub fn negated(&self) -> Affine {
        Affine { coeffs: self.coeffs.iter().map(|c| -c).collect(), constant: -self.constant }
    }

    pub fn plus(&self, other: &Affine) -> Affine {
        Affine {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    pub fn scaled(&self, k: i64) -> Affine {
        Affine { coeffs: self.coeffs.iter().map(|c| c * k).collect(), constant: self.constant * k }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.coeffs.iter().all(|&c| c == 0)
    }
}

/// One factor of a block generator.
#[derive(Clone, Debug)]
pub enum Factor {
    /// `base^{exponent(n)}` for a registered unitary `base`.
    Power { name: String, base: Arc<Mat>, base_adj: Arc<Mat>, exponent: Affine },
    /// A degree-independent matrix.
    Const { name: Option<String>, matrix: Arc<Mat> },
}

impl PartialEq for Factor {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Factor::Power { name: a, base: b, exponent: e, .. },
                Factor::Power { name: a2, base: b2, exponent: e2, .. },
            ) => a == a2 && e == e2 && (Arc::ptr_eq(b, b2) || b == b2),
            (Factor::Const { matrix: m, .. }, Factor::Const { matrix: m2, .. }) => Arc::ptr_eq(m, m2) || m == m2,
            _ => false,
        }
    }
}

impl Factor {
    /// A named unitary raised to an affine power; rejects non-unitary bases.
    pub fn power(name: impl Into<String>, base: Mat, exponent: Affine) -> Result<Factor> {
        let name = name.into();
        if !is_unitary(&base, 1e-10) {
            return Err(Error::Input(format!("power base '{name}' must be unitary")));
        }
        let adj = dagger(&base);
        Ok(Factor::Power { name, base: Arc::new(base), base_adj: Arc::new(adj), exponent })
    }

    pub fn constant(matrix: Mat) -> Factor {
        Factor::Const { name: None, matrix: Arc::new(matrix) }
    }

    pub fn named_constant(name: impl Into<String>, matrix: Mat) -> Factor {
        Factor::Const { name: Some(name.into()), matrix: Arc::new(matrix) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Power { base, .. } => base.nrows(),
            Factor::Const { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn evaluate(&self, n: &[i64]) -> Mat {
        match self {
            Factor::Power { base, exponent, .. } => mat_pow(base, exponent.eval(n)),
            Factor::Const { matrix, .. } => (**matrix).clone(),
        }
    }

    fn apply(&self, n: &[i64], x: &Vector) -> Vector {
        match self {
            Factor::Power { base, base_adj, exponent, .. } => {
                let e = exponent.eval(n);
                if e.unsigned_abs() <= 8 {
                    let m = if e < 0 { base_adj } else { base };
                    let mut y = x.clone();
                    for _ in 0..e.unsigned_abs() {
                        y = &**m * y;
                    }
                    y
                } else {
                    mat_pow(base, e) * x
                }
            }
            Factor::Const { matrix, .. } => &**matrix * x,
        }
    }

    fn shifted(&self, s: &[i64]) -> Factor {
        match self {
            Factor::Power { name, base, base_adj, exponent } => Factor::Power {
                name: name.clone(),
                base: base.clone(),
                base_adj: base_adj.clone(),
                exponent: exponent.shifted(s),
            },
            c => c.clone(),
        }
    }

    fn adjoint(&self) -> Factor {
        match self {
            Factor::Power { name, base, base_adj, exponent } => Factor::Power {
                name: name.clone(),
                base: base.clone(),
                base_adj: base_adj.clone(),
                exponent: exponent.negated(),
            },
            Factor::Const { name, matrix } => {
                Factor::Const { name: name.as_ref().map(|n| format!("{n}*")), matrix: Arc::new(dagger(matrix)) }
            }
        }
    }
}

/// Ordered product of factors; the first factor is leftmost.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BlockGenerator {
    pub factors: Vec<Factor>,
}

impl BlockGenerator {
    pub fn identity() -> Self {
        BlockGenerator { factors: vec![] }
    }

    pub fn new(factors: Vec<Factor>) -> Self {
        BlockGenerator { factors }.normalized()
    }

    pub fn evaluate(&self, n: &[i64], d: usize) -> Mat {
        self.factors.iter().fold(identity(d), |acc, f| acc * f.evaluate(n))
    }

    pub fn apply(&self, n: &[i64], x: &Vector) -> Vector {
        self.factors.iter().rev().fold(x.clone(), |y, f| f.apply(n, &y))
    }

    /// `n ↦ f(n + s)`.
    pub fn shifted(&self, s: &[i64]) -> Self {
        BlockGenerator { factors: self.factors.iter().map(|f| f.shifted(s)).collect() }
    }

    /// `n ↦ f(n)*`.
    pub fn adjoint(&self) -> Self {
        BlockGenerator { factors: self.factors.iter().rev().map(|f| f.adjoint()).collect() }.normalized()
    }

    /// `n ↦ self(n)·other(n)`.
    pub fn then(&self, other: &BlockGenerator) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        BlockGenerator { factors }.normalized()
    }

    /// Merge adjacent powers of the same base, multiply adjacent constants and
    /// drop trivial factors. Purely syntactic.
    pub fn normalized(self) -> Self {
        let mut out: Vec<Factor> = Vec::with_capacity(self.factors.len());
        for f in self.factors {
            let merged = match (out.last_mut(), &f) {
                (
                    Some(Factor::Power { name, base, exponent, .. }),
                    Factor::Power { name: n2, base: b2, exponent: e2, .. },
                ) if name == n2 && (Arc::ptr_eq(base, b2) || **base == **b2) => {
                    *exponent = exponent.plus(e2);
                    true
                }
                (Some(Factor::Const { name, matrix }), Factor::Const { matrix: m2, .. }) => {
                    *matrix = Arc::new(&**matrix * &**m2);
                    *name = None;
                    true
                }
                _ => false,
            };
            if !merged {
                out.push(f);
            }
            out.retain(|f| match f {
                Factor::Power { exponent, .. } => !exponent.is_zero(),
                Factor::Const { matrix, .. } => !is_identity(matrix, 0.0),
            });
        }
        BlockGenerator { factors: out }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }
}

/// One term `(coeff, offset, domain, gen)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub offset: Vec<i64>,
    pub domain: Bounds,
    pub gen: BlockGenerator,
}

impl Term {
    pub fn new(offset: Vec<i64>, factors: Vec<Factor>) -> Term {
        let rank = offset.len();
        Term { coeff: ONE, offset, domain: Bounds::unbounded(rank), gen: BlockGenerator::new(factors) }
    }

    pub fn with_domain(mut self, domain: Bounds) -> Term {
        self.domain = domain;
        self
    }

    pub fn with_coeff(mut self, c: C64) -> Term {
        self.coeff = c;
        self
    }
}

/// Per-component support of a graded space: component `c` lives on the degrees in `support[c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpace {
    pub rank: usize,
    pub fiber: usize,
    pub signed: bool,
    /// Empty means every component is supported everywhere.
    pub support: Vec<Bounds>,
}

impl LatticeSpace {
    pub fn new(rank: usize, fiber: usize, signed: bool) -> Self {
        LatticeSpace { rank, fiber, signed, support: vec![] }
    }

    pub fn with_support(mut self, support: Vec<Bounds>) -> Result<Self> {
        if !support.is_empty() && (support.len() != self.fiber || support.iter().any(|b| b.rank() != self.rank)) {
            return Err(Error::Dimension("support must list one box per fiber component".into()));
        }
        self.support = support.into_iter().map(|b| b.normalized(self.signed)).collect();
        if self.support.iter().all(|b| b.is_unbounded()) {
            self.support.clear();
        }
        Ok(self)
    }

    pub fn contains_degree(&self, n: &MultiIndex) -> bool {
        n.rank() == self.rank && (self.signed || n.coords.iter().all(|&c| c >= 0))
    }

    pub fn supported(&self, n: &MultiIndex, comp: usize) -> bool {
        self.contains_degree(n) && self.support.get(comp).is_none_or(|b| b.contains(&n.coords))
    }

    pub fn mask(&self, v: &mut GradedVector) {
        if self.support.is_empty() {
            return;
        }
        for (n, x) in v.entries.iter_mut() {
            for (c, b) in self.support.iter().enumerate() {
                if !b.contains(&n.coords) {
                    x[c] = ZERO;
                }
            }
        }
    }

    pub fn window(&self, n: usize) -> Vec<MultiIndex> {
        MultiIndex::window(self.rank, self.signed, n)
    }

    pub fn in_window(&self, m: &MultiIndex, n: usize) -> bool {
        let n = n as i64;
        m.coords.iter().all(|&c| c <= n && c >= if self.signed { -n } else { 0 })
    }

    /// Same rank, fiber and support on the signed lattice.
    pub fn signed_version(&self) -> LatticeSpace {
        LatticeSpace { signed: true, ..self.clone() }
    }
}

/// Finite sum of terms on a [`LatticeSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeOperator {
    pub space: LatticeSpace,
    pub terms: Vec<Term>,
}

impl LatticeOperator {
    pub fn new(space: LatticeSpace, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.offset.len() != space.rank || t.domain.rank() != space.rank {
                return Err(Error::Dimension(format!("term rank differs from lattice rank {}", space.rank)));
            }
            for f in &t.gen.factors {
                if f.dim() != space.fiber {
                    return Err(Error::Dimension(format!(
                        "block factor is {}x{}, fiber is {}",
                        f.dim(),
                        f.dim(),
                        space.fiber
                    )));
                }
                if let Factor::Power { exponent, .. } = f {
                    if exponent.coeffs.len() != space.rank {
                        return Err(Error::Dimension("exponent coefficient length differs from rank".into()));
                    }
                }
            }
        }
        Ok(LatticeOperator { space, terms }.normalized())
    }

    pub fn identity(space: &LatticeSpace) -> Self {
        LatticeOperator { space: space.clone(), terms: vec![Term::new(vec![0; space.rank], vec![])] }
    }

    pub fn zero(space: &LatticeSpace) -> Self {
        LatticeOperator { space: space.clone(), terms: vec![] }
    }

    /// Constant block `m` at every degree.
    pub fn constant(space: &LatticeSpace, m: Mat) -> Result<Self> {
        Self::new(space.clone(), vec![Term::new(vec![0; space.rank], vec![Factor::constant(m)])])
    }

    pub fn rank(&self) -> usize {
        self.space.rank
    }

    pub fn fiber(&self) -> usize {
        self.space.fiber
    }

    pub fn max_offset(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.offset.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Evaluation without support masking; used to detect support leaks.
    pub fn apply_unmasked(&self, v: &GradedVector) -> GradedVector {
        let mut out = GradedVector::zeros(self.space.fiber);
        for (n, x) in &v.entries {
            if x.iter().all(|z| *z == ZERO) {
                continue;
            }
            for t in &self.terms {
                if !t.domain.contains(&n.coords) {
                    continue;
                }
                let Some(m) = n.shifted(&t.offset) else {
                    continue;
                };
                let mut y = t.gen.apply(&n.coords, x);
                if t.coeff != ONE {
                    y *= t.coeff;
                }
                out.add_at(m, &y);
            }
        }
        out
    }

    pub fn apply(&self, v: &GradedVector) -> GradedVector {
        let mut out = self.apply_unmasked(v);
        self.space.mask(&mut out);
        out
    }

    pub fn adjoint(&self) -> LatticeOperator {
        let signed = self.space.signed;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut domain = t.domain.shifted(&t.offset);
                if !signed {
                    // The argument m - s of f must itself be a degree of ℤ₊^k.
                    domain = domain.intersect(&Bounds::at_least(&t.offset));
                }
                Term {
                    coeff: t.coeff.conj(),
                    offset: t.offset.iter().map(|x| -x).collect(),
                    domain: domain.normalized(signed),
                    gen: t.gen.shifted(&t.offset.iter().map(|x| -x).collect::<Vec<_>>()).adjoint(),
                }
            })
            .collect();
        LatticeOperator { space: self.space.clone(), terms }.normalized()
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &LatticeOperator) -> Result<LatticeOperator> {
        if self.space != other.space {
            return Err(Error::Dimension("compose: lattice spaces differ".into()));
        }
        let signed = self.space.signed;
        let mut terms = vec![];
        for a in &self.terms {
            for b in &other.terms {
                let mut domain =
                    b.domain.intersect(&a.domain.shifted(&b.offset.iter().map(|x| -x).collect::<Vec<_>>()));
                if !signed {
                    let lo: Vec<i64> = b.offset.iter().map(|x| -x).collect();
                    domain = domain.intersect(&Bounds::at_least(&lo));
                }
                let domain = domain.normalized(signed);
                if domain.is_empty() {
                    continue;
                }
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    offset: a.offset.iter().zip(&b.offset).map(|(x, y)| x + y).collect(),
                    domain,
                    gen: a.gen.shifted(&b.offset).then(&b.gen),
                });
            }
        }
        Ok(LatticeOperator { space: self.space.clone(), terms }.normalized())
    }

    pub fn add(&self, other: &LatticeOperator) -> Result<LatticeOperator> {
        if self.space != other.space {
            return Err(Error::Dimension("add: lattice spaces differ".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(LatticeOperator { space: self.space.clone(), terms }.normalized())
    }

    pub fn scale(&self, c: C64) -> LatticeOperator {
        let terms = self.terms.iter().map(|t| Term { coeff: t.coeff * c, ..t.clone() }).collect();
        LatticeOperator { space: self.space.clone(), terms }.normalized()
    }

    /// Merge syntactically equal terms and drop zero coefficients and empty domains.
    pub fn normalized(self) -> LatticeOperator {
        let signed = self.space.signed;
        let mut out: Vec<Term> = vec![];
        for mut t in self.terms {
            t.domain = t.domain.normalized(signed);
            if t.domain.is_empty() {
                continue;
            }
            if let Some(existing) =
                out.iter_mut().find(|e| e.offset == t.offset && e.domain == t.domain && e.gen == t.gen)
            {
                existing.coeff += t.coeff;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coeff != ZERO);
        LatticeOperator { space: self.space, terms: out }
    }

    /// The same terms read on another space of equal rank and fiber (signed continuation).
    pub fn on_space(&self, space: &LatticeSpace) -> Result<LatticeOperator> {
        if space.rank != self.space.rank || space.fiber != self.space.fiber {
            return Err(Error::Dimension("continuation space must share rank and fiber".into()));
        }
        LatticeOperator::new(space.clone(), self.terms.clone())
    }
}
