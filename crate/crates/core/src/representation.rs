//! Twisted tuples `(σ, {S^i_α}, {U_ij})` and their relation checkers.
//!
//! The stored primitives are the operators `S^i_α = T̃_i(e^i_α ⊗ ·)`, one per
//! fiber basis vector. Every check runs on a degree window and records the
//! worst deviation together with the cell `(i, j, α, β, degree)` where it occurred.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, is_unitary, Mat, C64, ONE, ZERO};
use crate::operators::{compare_on_window, BlockOp, GradedVector, Op, Space};
use crate::report::CheckReport;
use crate::tensorspace::{FiberSpec, MultiIndex};

/// The coefficient algebra `𝒜`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgebraKind {
    Scalar,
    Diagonal { dim: usize },
    Matrix { dim: usize },
}

/// A `*`-automorphism of `𝒜` given on generators.
#[derive(Clone, Debug, PartialEq)]
pub enum Automorphism {
    /// `α(a)[x] = a[p[x]]` on `ℂ^m`.
    Permutation(Vec<usize>),
    /// `α(a) = U a U*` on `M_d`.
    Conjugation(Mat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraSpec {
    pub kind: AlgebraKind,
    /// One automorphism per coordinate when the automorphic case is active.
    pub automorphisms: Option<Vec<Automorphism>>,
}

impl AlgebraSpec {
    pub fn scalar() -> Self {
        AlgebraSpec { kind: AlgebraKind::Scalar, automorphisms: None }
    }

    pub fn diagonal(m: usize) -> Self {
        AlgebraSpec { kind: AlgebraKind::Diagonal { dim: m }, automorphisms: None }
    }

    pub fn matrix(d: usize) -> Self {
        AlgebraSpec { kind: AlgebraKind::Matrix { dim: d }, automorphisms: None }
    }

    pub fn with_automorphisms(mut self, a: Vec<Automorphism>) -> Self {
        self.automorphisms = Some(a);
        self
    }

    /// Basis size: 1, `m` coordinate idempotents, or `d²` matrix units `E_ab` at index `a·d + b`.
    pub fn basis_len(&self) -> usize {
        match self.kind {
            AlgebraKind::Scalar => 1,
            AlgebraKind::Diagonal { dim } => dim,
            AlgebraKind::Matrix { dim } => dim * dim,
        }
    }

    pub fn is_commutative(&self) -> bool {
        !matches!(self.kind, AlgebraKind::Matrix { dim } if dim > 1)
    }

    /// Structure constants: `b_x b_y` as coefficients over the basis.
    pub fn product(&self, x: usize, y: usize) -> Vec<C64> {
        let n = self.basis_len();
        let mut out = vec![ZERO; n];
        match self.kind {
            AlgebraKind::Scalar => out[0] = ONE,
            AlgebraKind::Diagonal { .. } => {
                if x == y {
                    out[x] = ONE;
                }
            }
            AlgebraKind::Matrix { dim } => {
                let (a, b) = (x / dim, x % dim);
                let (c, d) = (y / dim, y % dim);
                if b == c {
                    out[a * dim + d] = ONE;
                }
            }
        }
        out
    }

    /// Index of `b_x*` (the basis is closed under adjoint).
    pub fn star(&self, x: usize) -> usize {
        match self.kind {
            AlgebraKind::Matrix { dim } => (x % dim) * dim + x / dim,
            _ => x,
        }
    }

    /// Coefficients of the unit.
    pub fn unit(&self) -> Vec<C64> {
        let n = self.basis_len();
        match self.kind {
            AlgebraKind::Matrix { dim } => (0..n).map(|x| if x / dim == x % dim { ONE } else { ZERO }).collect(),
            _ => vec![ONE; n],
        }
    }

    /// `α_i(b_x)` as coefficients over the basis; identity when no automorphisms are set.
    pub fn apply_automorphism(&self, i: usize, x: usize) -> Result<Vec<C64>> {
        let n = self.basis_len();
        let Some(auts) = &self.automorphisms else {
            let mut out = vec![ZERO; n];
            out[x] = ONE;
            return Ok(out);
        };
        let aut = auts.get(i).ok_or_else(|| Error::Input(format!("no automorphism for coordinate {i}")))?;
        let mut out = vec![ZERO; n];
        match (aut, &self.kind) {
            (Automorphism::Permutation(p), AlgebraKind::Diagonal { .. }) => {
                for (pos, &src) in p.iter().enumerate() {
                    if src == x {
                        out[pos] = ONE;
                    }
                }
            }
            (Automorphism::Conjugation(u), AlgebraKind::Matrix { dim }) => {
                let (a, b) = (x / dim, x % dim);
                for c in 0..*dim {
                    for d in 0..*dim {
                        out[c * dim + d] = u[(c, a)] * u[(d, b)].conj();
                    }
                }
            }
            _ => return Err(Error::Input("automorphism kind does not match the algebra".into())),
        }
        Ok(out)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let Some(auts) = &self.automorphisms else {
            return Ok(());
        };
        if auts.len() != k {
            return Err(Error::Input(format!("expected {k} automorphisms, got {}", auts.len())));
        }
        for a in auts {
            match (a, &self.kind) {
                (Automorphism::Permutation(p), AlgebraKind::Diagonal { dim }) => {
                    let mut seen = vec![false; *dim];
                    if p.len() != *dim || p.iter().any(|&x| x >= *dim || std::mem::replace(&mut seen[x], true)) {
                        return Err(Error::Input(format!("{p:?} is not a permutation of {dim} points")));
                    }
                }
                (Automorphism::Conjugation(u), AlgebraKind::Matrix { dim }) => {
                    if u.shape() != (*dim, *dim) || !is_unitary(u, 1e-10) {
                        return Err(Error::Input(
                            "conjugation automorphism must be a unitary of the algebra size".into(),
                        ));
                    }
                }
                _ => return Err(Error::Input("automorphism kind does not match the algebra".into())),
            }
        }
        // α_i ∘ α_j = α_j ∘ α_i on the basis.
        let n = self.basis_len();
        let compose = |i: usize, j: usize, x: usize| -> Result<Vec<C64>> {
            let inner = self.apply_automorphism(j, x)?;
            let mut out = vec![ZERO; n];
            for (y, cy) in inner.iter().enumerate() {
                if *cy == ZERO {
                    continue;
                }
                for (z, cz) in self.apply_automorphism(i, y)?.iter().enumerate() {
                    out[z] += cy * cz;
                }
            }
            Ok(out)
        };
        for i in 0..k {
            for j in 0..i {
                for x in 0..n {
                    let a = compose(i, j, x)?;
                    let b = compose(j, i, x)?;
                    if a.iter().zip(&b).any(|(p, q)| (p - q).norm() > 1e-10) {
                        return Err(Error::Input(format!("automorphisms {i} and {j} do not commute")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A candidate twisted representation.
#[derive(Clone, Debug)]
pub struct TwistedTuple {
    pub fibers: FiberSpec,
    pub algebra: AlgebraSpec,
    pub space: Space,
    /// `ops[i][α] = S^i_α`.
    pub ops: Vec<Vec<Op>>,
    /// `U_ij` for every ordered pair `i ≠ j`.
    pub twists: BTreeMap<(usize, usize), Op>,
    /// `σ(b_x)` for each algebra basis element.
    pub sigma: Vec<Op>,
}

impl TwistedTuple {
    /// Build and structurally validate. `twists` may list only `i < j`; the
    /// missing direction is filled with the adjoint.
    pub fn new(
        fibers: FiberSpec,
        algebra: AlgebraSpec,
        ops: Vec<Vec<Op>>,
        twists: BTreeMap<(usize, usize), Op>,
        sigma: Vec<Op>,
    ) -> Result<Self> {
        let k = fibers.rank();
        let space = ops
            .iter()
            .flatten()
            .next()
            .map(|o| o.space())
            .or_else(|| sigma.first().map(|s| s.space()))
            .ok_or_else(|| Error::Input("tuple has no operators".into()))?;
        let mut all = BTreeMap::new();
        for ((i, j), u) in twists {
            if i == j || i >= k || j >= k {
                return Err(Error::Input(format!("invalid twist pair ({i},{j})")));
            }
            all.insert((i, j), u);
        }
        for i in 0..k {
            for j in 0..k {
                if i != j && !all.contains_key(&(i, j)) {
                    let u = all
                        .get(&(j, i))
                        .map(|u| u.adjoint())
                        .ok_or_else(|| Error::Input(format!("missing twist U_{i}{j}")))?;
                    all.insert((i, j), u);
                }
            }
        }
        let t = TwistedTuple { fibers, algebra, space, ops, twists: all, sigma };
        t.validate_structure()?;
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.fibers.rank()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.fibers.dims[i]
    }

    pub fn op(&self, i: usize, alpha: usize) -> &Op {
        &self.ops[i][alpha]
    }

    pub fn twist(&self, i: usize, j: usize) -> &Op {
        &self.twists[&(i, j)]
    }

    fn validate_structure(&self) -> Result<()> {
        let k = self.k();
        self.fibers.validate(1e-10)?;
        self.algebra.validate(k)?;
        if self.ops.len() != k {
            return Err(Error::Dimension(format!("expected {k} coordinates, got {}", self.ops.len())));
        }
        for (i, row) in self.ops.iter().enumerate() {
            if row.len() != self.fibers.dims[i] {
                return Err(Error::Dimension(format!(
                    "coordinate {i} has {} operators but fiber dimension {}",
                    row.len(),
                    self.fibers.dims[i]
                )));
            }
        }
        if self.sigma.len() != self.algebra.basis_len() {
            return Err(Error::Dimension(format!(
                "sigma lists {} operators, algebra basis has {}",
                self.sigma.len(),
                self.algebra.basis_len()
            )));
        }
        let all = self.ops.iter().flatten().chain(self.twists.values()).chain(&self.sigma);
        for op in all {
            if op.space() != self.space {
                return Err(Error::Dimension("operators act on different spaces".into()));
            }
        }
        Ok(())
    }

    /// All operators of the tuple with readable labels.
    pub fn labelled_ops(&self) -> Vec<(String, &Op)> {
        let mut out = vec![];
        for (i, row) in self.ops.iter().enumerate() {
            for (a, op) in row.iter().enumerate() {
                out.push((format!("S{i}.{a}"), op));
            }
        }
        for ((i, j), u) in &self.twists {
            out.push((format!("U{i}{j}"), u));
        }
        for (x, s) in self.sigma.iter().enumerate() {
            out.push((format!("sigma{x}"), s));
        }
        out
    }

    /// Largest offset among all operators; bounds the exactness window loss.
    pub fn max_offset(&self) -> i64 {
        self.labelled_ops().iter().map(|(_, o)| o.max_offset()).max().unwrap_or(0)
    }

    /// `T̃_i` as the row `[S^i_0 … S^i_{d-1}]`.
    pub fn tilde(&self, i: usize) -> BlockOp {
        BlockOp::row(&self.space, self.ops[i].clone())
    }

    /// `S_w = S^{i_1}_{α_1} ∘ S^{i_2}_{α_2} ∘ …` for a word `w`.
    pub fn word_op(&self, word: &[(usize, usize)]) -> Result<Op> {
        let ops: Vec<&Op> = word.iter().map(|&(i, a)| &self.ops[i][a]).collect();
        Op::product(&self.space, &ops)
    }

    /// `T̃_A^{(m)} = T̃_{a_1}^{(m_1)}(I ⊗ T̃_{a_2}^{(m_2)})⋯` as a row over
    /// `E_{a_1}^{m_1} ⊗ E_{a_2}^{m_2} ⊗ …` (row-major, first letter slowest).
    pub fn tilde_multi(&self, coords: &[usize], powers: &[usize]) -> Result<BlockOp> {
        let mut letters: Vec<usize> = vec![];
        for (&i, &m) in coords.iter().zip(powers) {
            letters.extend(std::iter::repeat_n(i, m));
        }
        let mut words: Vec<Vec<(usize, usize)>> = vec![vec![]];
        for &i in &letters {
            let mut next = Vec::with_capacity(words.len() * self.dim(i));
            for w in &words {
                for a in 0..self.dim(i) {
                    let mut w2 = w.clone();
                    w2.push((i, a));
                    next.push(w2);
                }
            }
            words = next;
        }
        let ops = words.iter().map(|w| self.word_op(w)).collect::<Result<Vec<_>>>()?;
        Ok(BlockOp::row(&self.space, ops))
    }

    /// `T̃_i^{(n)}`.
    pub fn tilde_power(&self, i: usize, n: usize) -> Result<BlockOp> {
        self.tilde_multi(&[i], &[n])
    }

    /// `Σ_α S^i_α S^i_α*`, i.e. `T̃_i T̃_i*`.
    pub fn range_projection(&self, i: usize) -> Result<Op> {
        let mut acc = Op::zero(&self.space);
        for s in &self.ops[i] {
            acc = acc.add(&s.compose(&s.adjoint())?)?;
        }
        Ok(acc)
    }

    /// `P_{𝒲_i} = I − T̃_i T̃_i*`.
    pub fn wandering_projection(&self, i: usize) -> Result<Op> {
        Op::identity(&self.space).sub(&self.range_projection(i)?)
    }

    /// Support-closedness of every operator and its adjoint on the window.
    pub fn check_support_closed(&self, n: usize, tol: f64) -> CheckReport {
        let mut r = CheckReport::new("support_closed", tol);
        let Space::Lattice(l) = &self.space else {
            return r.note("dense space");
        };
        if l.support.is_empty() {
            return r.note("no support restrictions");
        }
        for (name, op) in self.labelled_ops() {
            let lat = op.as_lattice().expect("lattice tuple");
            for (adj, o) in [(false, lat.clone()), (true, lat.adjoint())] {
                for (m, c) in self.space.window_basis(n) {
                    let v = self.space.basis_vector(&m, c);
                    let raw = o.apply_unmasked(&v);
                    let masked = o.apply(&v);
                    r.record(raw.minus(&masked).norm(), || {
                        format!("{name}{} on δ{m}⊗e{c}", if adj { "*" } else { "" })
                    });
                }
            }
        }
        r
    }
}

/// Flip entry `⟨e^j_γ ⊗ e^i_δ, t_ij(e^i_α ⊗ e^j_β)⟩`.
fn flip_entry(t: &Mat, di: usize, dj: usize, gamma: usize, delta: usize, alpha: usize, beta: usize) -> C64 {
    t[(gamma * di + delta, alpha * dj + beta)]
}

/// `S^i_α* S^i_β = δ_αβ I` on the window.
pub fn check_isometric(t: &TwistedTuple, n: usize, tol: f64) -> CheckReport {
    let mut r = CheckReport::new("isometric", tol);
    for i in 0..t.k() {
        for a in 0..t.dim(i) {
            for b in 0..t.dim(i) {
                let (sa, sb) = (t.op(i, a), t.op(i, b));
                let w = compare_on_window(
                    &t.space,
                    n,
                    tol,
                    |v| sa.adjoint().apply(&sb.apply(v)),
                    |v| {
                        if a == b {
                            v.clone()
                        } else {
                            t.space.zero_vector()
                        }
                    },
                );
                r.record(w.max_deviation, || format!("i={i} α={a} β={b} at {:?}", w.worst));
            }
        }
    }
    r
}

/// `Σ_α S^i_α S^i_α* = I` on the window.
pub fn check_coisometric(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("fully_coisometric", tol);
    for i in 0..t.k() {
        let p = t.range_projection(i)?;
        let w = compare_on_window(&t.space, n, tol, |v| p.apply(v), |v| v.clone());
        r.record(w.max_deviation, || format!("i={i} at {:?}", w.worst));
    }
    Ok(r)
}

/// Coordinates that are fully coisometric on the window.
pub fn coisometric_coordinates(t: &TwistedTuple, n: usize, tol: f64) -> Result<Vec<bool>> {
    (0..t.k())
        .map(|i| {
            let p = t.range_projection(i)?;
            Ok(compare_on_window(&t.space, n, tol, |v| p.apply(v), |v| v.clone()).equal)
        })
        .collect()
}

/// Twist-family axioms: unitarity, `U_ji = U_ij*`, pairwise commutation, and
/// commutation with every `S^ℓ_α` and every `σ(b)`.
pub fn check_twist_family(t: &TwistedTuple, n: usize, tol: f64) -> CheckReport {
    let mut r = CheckReport::new("twist_family", tol);
    let sp = &t.space;
    for (&(i, j), u) in &t.twists {
        let ua = u.adjoint();
        let w = compare_on_window(sp, n, tol, |v| ua.apply(&u.apply(v)), |v| v.clone());
        r.record(w.max_deviation, || format!("U{i}{j}*U{i}{j} ≠ I at {:?}", w.worst));
        let w = compare_on_window(sp, n, tol, |v| u.apply(&ua.apply(v)), |v| v.clone());
        r.record(w.max_deviation, || format!("U{i}{j}U{i}{j}* ≠ I at {:?}", w.worst));
        let uji = t.twist(j, i);
        let w = compare_on_window(sp, n, tol, |v| uji.apply(v), |v| ua.apply(v));
        r.record(w.max_deviation, || format!("U{j}{i} ≠ U{i}{j}* at {:?}", w.worst));
        for (&(p, q), u2) in &t.twists {
            if (p, q) <= (i, j) {
                continue;
            }
            let w = compare_on_window(sp, n, tol, |v| u.apply(&u2.apply(v)), |v| u2.apply(&u.apply(v)));
            r.record(w.max_deviation, || format!("U{i}{j}, U{p}{q} do not commute at {:?}", w.worst));
        }
        for l in 0..t.k() {
            for a in 0..t.dim(l) {
                let s = t.op(l, a);
                let w = compare_on_window(sp, n, tol, |v| u.apply(&s.apply(v)), |v| s.apply(&u.apply(v)));
                r.record(w.max_deviation, || format!("U{i}{j} S{l}.{a} ≠ S{l}.{a} U{i}{j} at {:?}", w.worst));
            }
        }
        for (x, s) in t.sigma.iter().enumerate() {
            let w = compare_on_window(sp, n, tol, |v| u.apply(&s.apply(v)), |v| s.apply(&u.apply(v)));
            r.record(w.max_deviation, || format!("U{i}{j} σ(b{x}) ≠ σ(b{x}) U{i}{j} at {:?}", w.worst));
        }
    }
    r
}

/// `S^i_α S^j_β = Σ_{γδ} t_ij[γ d_i + δ, α d_j + β] S^j_γ S^i_δ U_ij`, plus the twist-family axioms.
pub fn check_twisted(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("twisted", tol);
    for i in 0..t.k() {
        for j in 0..t.k() {
            if i == j {
                continue;
            }
            let (di, dj) = (t.dim(i), t.dim(j));
            let flip = t.fibers.flip(i, j)?;
            let u = t.twist(i, j);
            for a in 0..di {
                for b in 0..dj {
                    let lhs = |v: &GradedVector| t.op(i, a).apply(&t.op(j, b).apply(v));
                    let rhs = |v: &GradedVector| {
                        let uv = u.apply(v);
                        let mut acc = t.space.zero_vector();
                        for g in 0..dj {
                            for d in 0..di {
                                let c = flip_entry(flip, di, dj, g, d, a, b);
                                if c != ZERO {
                                    acc.add_scaled(c, &t.op(j, g).apply(&t.op(i, d).apply(&uv)));
                                }
                            }
                        }
                        acc
                    };
                    let w = compare_on_window(&t.space, n, tol, lhs, rhs);
                    r.record(w.max_deviation, || format!("(i,j,α,β)=({i},{j},{a},{b}) at {:?}", w.worst));
                }
            }
        }
    }
    r.absorb(&check_twist_family(t, n, tol));
    Ok(r)
}

/// `(S^j_β)* S^i_α = Σ_{δγ} t_ij[β d_i + δ, α d_j + γ] S^i_δ U_ij (S^j_γ)*`.
pub fn check_doubly_twisted(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("doubly_twisted", tol);
    if t.k() < 2 {
        return Ok(r.note("k < 2: vacuous"));
    }
    for i in 0..t.k() {
        for j in 0..t.k() {
            if i == j {
                continue;
            }
            let (di, dj) = (t.dim(i), t.dim(j));
            let flip = t.fibers.flip(i, j)?;
            let u = t.twist(i, j);
            let sj_adj: Vec<Op> = (0..dj).map(|g| t.op(j, g).adjoint()).collect();
            for a in 0..di {
                for b in 0..dj {
                    let lhs = |v: &GradedVector| sj_adj[b].apply(&t.op(i, a).apply(v));
                    let rhs = |v: &GradedVector| {
                        let mut acc = t.space.zero_vector();
                        for (g, sg) in sj_adj.iter().enumerate() {
                            let mut inner: Option<GradedVector> = None;
                            for d in 0..di {
                                let c = flip_entry(flip, di, dj, b, d, a, g);
                                if c != ZERO {
                                    let x = inner.get_or_insert_with(|| u.apply(&sg.apply(v)));
                                    acc.add_scaled(c, &t.op(i, d).apply(x));
                                }
                            }
                        }
                        acc
                    };
                    let w = compare_on_window(&t.space, n, tol, lhs, rhs);
                    r.record(w.max_deviation, || format!("(i,j,α,β)=({i},{j},{a},{b}) at {:?}", w.worst));
                }
            }
        }
    }
    Ok(r)
}

/// `σ(b) Σ c_y σ(b_y)` helper: apply a coefficient combination of `σ`.
fn apply_sigma_combo(t: &TwistedTuple, coeffs: &[C64], v: &GradedVector) -> GradedVector {
    let mut acc = t.space.zero_vector();
    for (y, c) in coeffs.iter().enumerate() {
        if *c != ZERO {
            acc.add_scaled(*c, &t.sigma[y].apply(v));
        }
    }
    acc
}

/// `σ(b) S_i = S_i σ(α_i(b))` over the algebra basis; requires the automorphic encoding `d_i = 1`.
pub fn check_covariance_automorphic(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    if matches!(t.algebra.kind, AlgebraKind::Scalar) || t.algebra.automorphisms.is_none() {
        return Err(Error::Hypothesis("automorphic covariance needs a non-scalar algebra with automorphisms".into()));
    }
    covariance(t, n, tol, "covariance_automorphic")
}

/// Covariance `σ(b) S^i_α = S^i_α σ(α_i(b))`, with `α_i = id` when no automorphisms are set.
pub fn check_covariance(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    covariance(t, n, tol, "covariance")
}

fn covariance(t: &TwistedTuple, n: usize, tol: f64, name: &str) -> Result<CheckReport> {
    let mut r = CheckReport::new(name, tol);
    for i in 0..t.k() {
        for x in 0..t.algebra.basis_len() {
            let coeffs = t.algebra.apply_automorphism(i, x)?;
            for a in 0..t.dim(i) {
                let s = t.op(i, a);
                let w = compare_on_window(
                    &t.space,
                    n,
                    tol,
                    |v| t.sigma[x].apply(&s.apply(v)),
                    |v| s.apply(&apply_sigma_combo(t, &coeffs, v)),
                );
                r.record(w.max_deviation, || format!("(b,i,α)=({x},{i},{a}) at {:?}", w.worst));
            }
        }
    }
    Ok(r)
}

/// `σ` is a unital `*`-homomorphism on the algebra basis.
pub fn check_sigma_homomorphism(t: &TwistedTuple, n: usize, tol: f64) -> CheckReport {
    let mut r = CheckReport::new("sigma_homomorphism", tol);
    let alg = &t.algebra;
    let len = alg.basis_len();
    for x in 0..len {
        for y in 0..len {
            let prod = alg.product(x, y);
            let w = compare_on_window(
                &t.space,
                n,
                tol,
                |v| t.sigma[x].apply(&t.sigma[y].apply(v)),
                |v| apply_sigma_combo(t, &prod, v),
            );
            r.record(w.max_deviation, || format!("σ(b{x})σ(b{y}) at {:?}", w.worst));
        }
        let adj = t.sigma[x].adjoint();
        let star = alg.star(x);
        let w = compare_on_window(&t.space, n, tol, |v| adj.apply(v), |v| t.sigma[star].apply(v));
        r.record(w.max_deviation, || format!("σ(b{x})* at {:?}", w.worst));
    }
    let unit = alg.unit();
    let w = compare_on_window(&t.space, n, tol, |v| apply_sigma_combo(t, &unit, v), |v| v.clone());
    r.record(w.max_deviation, || format!("σ(1) ≠ I at {:?}", w.worst));
    r
}

/// Necessary condition for complete contractivity: the window compression of
/// `Σ_α S^i_α S^i_α*` has spectrum `≤ 1`.
pub fn check_row_contraction(t: &TwistedTuple, n: usize, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("row_contraction", tol).note("window compression only: a necessary condition");
    let basis = t.space.window_basis(n);
    let index: BTreeMap<(MultiIndex, usize), usize> = basis.iter().cloned().enumerate().map(|(p, b)| (b, p)).collect();
    for i in 0..t.k() {
        let p = t.range_projection(i)?;
        let mut m = Mat::zeros(basis.len(), basis.len());
        for (col, (deg, c)) in basis.iter().enumerate() {
            let out = p.apply(&t.space.basis_vector(deg, *c));
            for (d, x) in &out.entries {
                for (comp, val) in x.iter().enumerate() {
                    if let Some(&row) = index.get(&(d.clone(), comp)) {
                        m[(row, col)] = *val;
                    }
                }
            }
        }
        let (vals, _) = hermitian_eigen(&m);
        let top = vals.last().copied().unwrap_or(0.0);
        r.record((top - 1.0).max(0.0), || format!("i={i} top eigenvalue {top:.6}"));
    }
    Ok(r)
}

/// Package an `S`-family into a tuple, rejecting families that fail the row-contraction test.
pub fn induce_from_s(
    ops: Vec<Vec<Op>>,
    fibers: FiberSpec,
    twists: BTreeMap<(usize, usize), Op>,
    algebra: AlgebraSpec,
    sigma: Vec<Op>,
    n: usize,
    tol: f64,
) -> Result<TwistedTuple> {
    let t = TwistedTuple::new(fibers, algebra, ops, twists, sigma)?;
    let rc = check_row_contraction(&t, n, tol)?;
    if !rc.passed {
        return Err(Error::Hypothesis(format!("row contraction violated: {}", rc.summary())));
    }
    Ok(t)
}

/// The standard relation suite: isometric, twisted, doubly twisted, σ, and covariance when applicable.
pub fn verify_all(t: &TwistedTuple, n: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let mut out = vec![
        t.check_support_closed(n, tol),
        check_isometric(t, n, tol),
        check_twisted(t, n, tol)?,
        check_doubly_twisted(t, n, tol)?,
        check_sigma_homomorphism(t, n, tol),
    ];
    if t.algebra.automorphisms.is_some() && !matches!(t.algebra.kind, AlgebraKind::Scalar) {
        out.push(check_covariance_automorphic(t, n, tol)?);
    } else if !matches!(t.algebra.kind, AlgebraKind::Scalar) {
        out.push(check_covariance(t, n, tol)?);
    }
    Ok(out)
}

/// `σ` for the scalar algebra: `[I]`.
pub fn scalar_sigma(space: &Space) -> Vec<Op> {
    vec![Op::identity(space)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_rows, phase};
    use crate::operators::{Affine, Factor, LatticeOperator, LatticeSpace, Term};

    fn shift_op(sp: &LatticeSpace, off: Vec<i64>, factors: Vec<Factor>) -> Op {
        Op::Lattice(LatticeOperator::new(sp.clone(), vec![Term::new(off, factors)]).unwrap())
    }

    fn pair(v1: Op, v2: Op, u12: Op) -> TwistedTuple {
        let space = v1.space();
        let mut tw = BTreeMap::new();
        tw.insert((0, 1), u12);
        TwistedTuple::new(
            FiberSpec::coordinate_swaps(vec![1, 1]),
            AlgebraSpec::scalar(),
            vec![vec![v1], vec![v2]],
            tw,
            scalar_sigma(&space),
        )
        .unwrap()
    }

    #[test]
    fn strict_contraction_fails_isometry_by_three_quarters() {
        let sp = LatticeSpace::new(1, 1, false);
        let s = shift_op(&sp, vec![1], vec![]).scale(c(0.5, 0.0));
        let t = TwistedTuple::new(
            FiberSpec::coordinate_swaps(vec![1]),
            AlgebraSpec::scalar(),
            vec![vec![s]],
            BTreeMap::new(),
            scalar_sigma(&Space::Lattice(sp)),
        )
        .unwrap();
        let r = check_isometric(&t, 4, 1e-12);
        assert!(!r.passed);
        assert!((r.max_deviation - 0.75).abs() < 1e-14);
        assert!(check_row_contraction(&t, 4, 1e-12).unwrap().passed);
    }

    #[test]
    fn commuting_shifts_doubly_commute() {
        let sp = LatticeSpace::new(2, 1, false);
        let space = Space::Lattice(sp.clone());
        let t = pair(shift_op(&sp, vec![1, 0], vec![]), shift_op(&sp, vec![0, 1], vec![]), Op::identity(&space));
        assert!(check_isometric(&t, 5, 1e-12).passed);
        assert!(check_twisted(&t, 5, 1e-12).unwrap().passed);
        assert!(check_doubly_twisted(&t, 5, 1e-12).unwrap().passed);
    }

    #[test]
    fn equal_shifts_fail_doubly_twisted_at_vacuum() {
        let sp = LatticeSpace::new(1, 1, false);
        let space = Space::Lattice(sp.clone());
        let s = shift_op(&sp, vec![1], vec![]);
        let t = pair(s.clone(), s, Op::identity(&space));
        assert!(check_twisted(&t, 5, 1e-12).unwrap().passed);
        let r = check_doubly_twisted(&t, 5, 1e-12).unwrap();
        assert!(!r.passed);
        assert!(r.first_violation.unwrap().contains("(0)"));
    }

    #[test]
    fn scalar_twisted_pair_and_wrong_twist() {
        // V1 δ_n = δ_{n+e1}, V2 δ_n = z̄^{n1} δ_{n+e2}: V1V2 = z V2V1.
        let z = c(0.0, 1.0);
        let sp = LatticeSpace::new(2, 1, false);
        let space = Space::Lattice(sp.clone());
        let zb = Mat::from_element(1, 1, z.conj());
        let v1 = shift_op(&sp, vec![1, 0], vec![]);
        let v2 = shift_op(&sp, vec![0, 1], vec![Factor::power("zbar", zb, Affine::coordinate(2, 0)).unwrap()]);
        let u = Op::identity(&space).scale(z);
        let t = pair(v1.clone(), v2.clone(), u);
        assert!(check_twisted(&t, 5, 1e-12).unwrap().passed);
        assert!(check_doubly_twisted(&t, 5, 1e-12).unwrap().passed);
        let wrong = pair(v1, v2, Op::identity(&space));
        assert!(!check_twisted(&wrong, 5, 1e-12).unwrap().passed);
    }

    #[test]
    fn covariance_negative_control() {
        let s1 = from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let space = Space::Dense(3);
        let sigma: Vec<Op> = (0..3)
            .map(|x| {
                let mut m = Mat::zeros(3, 3);
                m[(x, x)] = ONE;
                Op::dense(m).unwrap()
            })
            .collect();
        let ops = vec![vec![Op::dense(s1.clone()).unwrap()], vec![Op::dense(s1.transpose()).unwrap()]];
        let mut tw = BTreeMap::new();
        tw.insert((0, 1), Op::identity(&space));
        let identity_auts = AlgebraSpec::diagonal(3).with_automorphisms(vec![
            Automorphism::Permutation(vec![0, 1, 2]),
            Automorphism::Permutation(vec![0, 1, 2]),
        ]);
        let t = TwistedTuple::new(FiberSpec::coordinate_swaps(vec![1, 1]), identity_auts, ops, tw, sigma).unwrap();
        assert!(!check_covariance_automorphic(&t, 0, 1e-12).unwrap().passed);
    }

    #[test]
    fn automorphism_coefficients() {
        let alg = AlgebraSpec::diagonal(3).with_automorphisms(vec![Automorphism::Permutation(vec![1, 2, 0])]);
        // α(a)[x] = a[p[x]]: α(e_1) has a 1 where p[x] = 1, i.e. x = 0.
        assert_eq!(alg.apply_automorphism(0, 1).unwrap(), vec![ONE, ZERO, ZERO]);
        let u = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let m = AlgebraSpec::matrix(2).with_automorphisms(vec![Automorphism::Conjugation(u)]);
        // U E_00 U* = E_11.
        assert_eq!(m.apply_automorphism(0, 0).unwrap(), vec![ZERO, ZERO, ZERO, ONE]);
        let bad = AlgebraSpec::diagonal(3).with_automorphisms(vec![Automorphism::Permutation(vec![0, 0, 1])]);
        assert!(bad.validate(1).is_err());
    }

    #[test]
    fn twist_family_detects_noncommuting_twist() {
        let x = Op::dense(from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let dz = Op::dense(crate::linalg::diag(&[phase(0.0), phase(0.25)])).unwrap();
        let t = pair(x.clone(), x, dz);
        let r = check_twist_family(&t, 0, 1e-12);
        assert!(!r.passed);
    }
}
