//! Fock-space models `ℓ²(ℤ₊^{|A|}) ⊗ 𝒟` and the canonical identification of a
//! Wold summand with its model.
//!
//! Fibers are scalar (`E_i = ℂ` or `E_i = 𝒜` with trivial action), so every flip
//! is a unimodular scalar `c_ij` and `t_ij^{(m,n)} = c_ij^{mn}`. For
//! `A = {a_1 < … < a_p}` and `n ∈ ℤ₊^p`:
//!
//! * `M_{a_q} (δ_n ⊗ h) = δ_{n+e_q} ⊗ ∏_{r<q} (c_{a_q a_r} U_{a_q a_r})^{n_r} h`
//! * `M_l (δ_n ⊗ h) = δ_n ⊗ W_l ∏_{r} (c_{l a_r} U_{l a_r})^{n_r} h` for `l ∉ A`
//! * `U_{A,ij} = I ⊗ U_ij`, `σ_A = I ⊗ σ`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, is_unitary, max_abs_diff, Mat, Vector, C64, ONE, ZERO};
use crate::operators::{
    compare_on_window, Affine, Factor, GradedVector, LatticeOperator, LatticeSpace, Op, Space, Term,
};
use crate::report::CheckReport;
use crate::representation::{AlgebraSpec, TwistedTuple};
use crate::tensorspace::{flip_block, FiberSpec, MultiIndex};
use crate::wold::{self, WoldOptions};

/// Core data on `𝒟`: `σ`, the coisometric coordinates `W_l` (`l ∉ A`) and the twists.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreOps {
    pub dim: usize,
    pub sigma: Vec<Mat>,
    pub w: BTreeMap<usize, Mat>,
    /// `U_ij` for every ordered pair `i ≠ j`.
    pub u: BTreeMap<(usize, usize), Mat>,
}

impl CoreOps {
    /// Fill `U_ji = U_ij*` for pairs given in one direction only.
    pub fn complete_twists(mut self, k: usize) -> Self {
        for i in 0..k {
            for j in 0..k {
                if i != j && !self.u.contains_key(&(i, j)) {
                    if let Some(m) = self.u.get(&(j, i)).map(dagger) {
                        self.u.insert((i, j), m);
                    }
                }
            }
        }
        self
    }

    /// `Q* X Q` applied to every matrix.
    pub fn conjugated(&self, q: &Mat) -> CoreOps {
        let f = |m: &Mat| dagger(q) * m * q;
        CoreOps {
            dim: q.ncols(),
            sigma: self.sigma.iter().map(f).collect(),
            w: self.w.iter().map(|(k, m)| (*k, f(m))).collect(),
            u: self.u.iter().map(|(k, m)| (*k, f(m))).collect(),
        }
    }
}

/// The table realizing `Π_A*` on the window: `images[n][a] = T̃_A^{(n)} h_a`.
#[derive(Clone, Debug)]
pub struct PiTable {
    pub window: usize,
    /// Orthonormal basis `h_a` of `𝒟_A` inside the original space.
    pub core_vectors: Vec<GradedVector>,
    pub images: BTreeMap<MultiIndex, Vec<GradedVector>>,
}

/// A Fock model `(σ_A, {M_{A,i}}, {U_{A,ij}})`.
#[derive(Clone, Debug)]
pub struct FockModel {
    pub k: usize,
    /// Sorted ascending, 0-based.
    pub subset: Vec<usize>,
    pub core: CoreOps,
    pub tuple: TwistedTuple,
    /// Present when the model was transported from a tuple by [`pi_a`].
    pub pi: Option<PiTable>,
}

impl FockModel {
    pub fn core_dim(&self) -> usize {
        self.core.dim
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.k).filter(|i| !self.subset.contains(i)).collect()
    }
}

fn sorted_subset(k: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut a = subset.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.len() != subset.len() || a.iter().any(|&i| i >= k) {
        return Err(Error::Input(format!("{subset:?} is not a subset of 0..{k}")));
    }
    Ok(a)
}

/// Relations the core must satisfy: unitary twists with `U_ji = U_ij*` commuting
/// among themselves and with `W`, `σ`; unitary `W_l` twisted by `c_ij U_ij`; `σ`
/// commuting with `W`.
pub fn check_core(k: usize, subset: &[usize], core: &CoreOps, fibers: &FiberSpec, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("core", tol);
    let d = core.dim;
    let id = identity(d);
    let comm = |a: &Mat, b: &Mat| max_abs_diff(&(a * b), &(b * a));
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let u = core.u.get(&(i, j)).ok_or_else(|| Error::Input(format!("core lacks U_{i}{j}")))?;
            if u.shape() != (d, d) {
                return Err(Error::Dimension(format!("core U_{i}{j} must be {d}x{d}")));
            }
            r.record(max_abs_diff(&(u.adjoint() * u), &id), || format!("U{i}{j} not unitary"));
            r.record(max_abs_diff(&core.u[&(j, i)], &dagger(u)), || format!("U{j}{i} ≠ U{i}{j}*"));
            for v in core.u.values() {
                r.record(comm(u, v), || format!("U{i}{j} does not commute with the twist family"));
            }
            for (l, w) in &core.w {
                r.record(comm(u, w), || format!("U{i}{j} does not commute with W{l}"));
            }
            for (x, s) in core.sigma.iter().enumerate() {
                r.record(comm(u, s), || format!("U{i}{j} does not commute with σ(b{x})"));
            }
        }
    }
    let comp: Vec<usize> = (0..k).filter(|i| !subset.contains(i)).collect();
    for &l in &comp {
        let w = core.w.get(&l).ok_or_else(|| Error::Input(format!("core lacks W_{l}")))?;
        if w.shape() != (d, d) {
            return Err(Error::Dimension(format!("core W_{l} must be {d}x{d}")));
        }
        r.record(if is_unitary(w, tol) { 0.0 } else { f64::INFINITY }, || format!("W{l} not unitary"));
        for (x, s) in core.sigma.iter().enumerate() {
            r.record(comm(w, s), || format!("W{l} does not commute with σ(b{x})"));
        }
        for &m in &comp {
            if m == l {
                continue;
            }
            let c = fibers.scalar_flip(l, m)?;
            let lhs = w * &core.w[&m];
            let rhs = (&core.w[&m] * w * &core.u[&(l, m)]).map(|z| z * c);
            r.record(max_abs_diff(&lhs, &rhs), || format!("W{l}W{m} ≠ c W{m}W{l}U{l}{m}"));
        }
    }
    Ok(r)
}

/// Build the model tuple on `ℓ²(ℤ₊^{|A|}) ⊗ 𝒟`.
pub fn build_model_operators(
    k: usize,
    subset: &[usize],
    core: CoreOps,
    fibers: &FiberSpec,
    algebra: &AlgebraSpec,
) -> Result<FockModel> {
    if !fibers.all_scalar() || fibers.rank() != k {
        return Err(Error::Unsupported("Fock models need k scalar fibers".into()));
    }
    if algebra.automorphisms.is_some() {
        return Err(Error::Unsupported("Fock models need trivial automorphisms".into()));
    }
    let a = sorted_subset(k, subset)?;
    let core = core.complete_twists(k);
    let chk = check_core(k, &a, &core, fibers, 1e-10)?;
    if !chk.passed {
        return Err(Error::Hypothesis(format!("core fails its relations: {}", chk.summary())));
    }
    let p = a.len();
    let d = core.dim;
    let lat = LatticeSpace::new(p, d, false);
    // (c_ij U_ij)^{n_r}: the scalar flip power t_ij^{(1,n_r)} folded into the twist base.
    let twist_power = |i: usize, r: usize| -> Result<Factor> {
        let j = a[r];
        let c = flip_block(fibers, i, j, 1, 1)?[(0, 0)];
        let base = core.u[&(i, j)].map(|z| z * c);
        Factor::power(format!("cU{i}_{j}"), base, Affine::coordinate(p, r))
    };
    let mut ops = vec![];
    for i in 0..k {
        let mut factors = vec![];
        let offset = match a.iter().position(|&x| x == i) {
            Some(q) => {
                for r in 0..q {
                    factors.push(twist_power(i, r)?);
                }
                let mut off = vec![0; p];
                off[q] = 1;
                off
            }
            None => {
                factors.push(Factor::named_constant(format!("W{i}"), core.w[&i].clone()));
                for r in 0..p {
                    factors.push(twist_power(i, r)?);
                }
                vec![0; p]
            }
        };
        ops.push(vec![Op::Lattice(LatticeOperator::new(lat.clone(), vec![Term::new(offset, factors)])?)]);
    }
    let mut twists = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            let t = Term::new(vec![0; p], vec![Factor::named_constant(format!("U{i}{j}"), core.u[&(i, j)].clone())]);
            twists.insert((i, j), Op::Lattice(LatticeOperator::new(lat.clone(), vec![t])?));
        }
    }
    let sigma = core
        .sigma
        .iter()
        .enumerate()
        .map(|(x, s)| {
            let t = Term::new(vec![0; p], vec![Factor::named_constant(format!("sigma{x}"), s.clone())]);
            Ok(Op::Lattice(LatticeOperator::new(lat.clone(), vec![t])?))
        })
        .collect::<Result<Vec<_>>>()?;
    let tuple = TwistedTuple::new(fibers.clone(), algebra.clone(), ops, twists, sigma)?;
    Ok(FockModel { k, subset: a, core, tuple, pi: None })
}

/// Enumerate words of `T̃_A^{(n)}` for scalar fibers: returns `S_{a_1}^{n_1} S_{a_2}^{n_2} ⋯ h`.
fn apply_tilde_a(t: &TwistedTuple, a: &[usize], n: &[i64], h: &GradedVector) -> GradedVector {
    let mut v = h.clone();
    for (q, &i) in a.iter().enumerate().rev() {
        for _ in 0..n[q] {
            v = t.op(i, 0).apply(&v);
        }
    }
    v
}

/// Transport the summand `ℋ_A` of `t` to its Fock model.
///
/// The core basis is the `𝒟_A` basis computed by the wold module; core matrices
/// are the compressions `⟨h_b, X h_a⟩`, and the residual of each compression is
/// checked so that `𝒟_A` really reduces `σ`, `U` and the `A^c` coordinates.
pub fn pi_a(t: &TwistedTuple, subset: &[usize], opts: &WoldOptions) -> Result<FockModel> {
    if !t.fibers.all_scalar() {
        return Err(Error::Unsupported("pi_A needs scalar fibers".into()));
    }
    let k = t.k();
    let a = sorted_subset(k, subset)?;
    let dspace = wold::d_space(t, &a, opts)?;
    let core_vectors: Vec<GradedVector> = dspace.vectors();
    if core_vectors.is_empty() {
        return Err(Error::Degenerate(format!("𝒟_A is zero for A = {a:?}; ℋ_A vanishes on the window")));
    }
    let dim = core_vectors.len();
    let compress = |op: &Op, name: &str| -> Result<Mat> {
        let mut m = Mat::zeros(dim, dim);
        for (c, h) in core_vectors.iter().enumerate() {
            let img = op.apply(h);
            let mut proj = GradedVector::zeros(h.fiber);
            for (r, g) in core_vectors.iter().enumerate() {
                m[(r, c)] = g.inner(&img);
                proj.add_scaled(m[(r, c)], g);
            }
            let res = img.minus(&proj).norm();
            if res > opts.composite_tol {
                return Err(Error::Hypothesis(format!("𝒟_A does not reduce {name}: residual {res:.3e}")));
            }
        }
        Ok(m)
    };
    let sigma =
        t.sigma.iter().enumerate().map(|(x, s)| compress(s, &format!("σ(b{x})"))).collect::<Result<Vec<_>>>()?;
    let mut w = BTreeMap::new();
    for l in (0..k).filter(|i| !a.contains(i)) {
        w.insert(l, compress(t.op(l, 0), &format!("S{l}"))?);
    }
    let mut u = BTreeMap::new();
    for (&(i, j), op) in &t.twists {
        u.insert((i, j), compress(op, &format!("U{i}{j}"))?);
    }
    let core = CoreOps { dim, sigma, w, u };
    let mut fm = build_model_operators(k, &a, core, &t.fibers, &t.algebra)?;
    let mut images = BTreeMap::new();
    for n in MultiIndex::window(a.len(), false, opts.window) {
        let imgs = core_vectors.iter().map(|h| apply_tilde_a(t, &a, &n.coords, h)).collect();
        images.insert(n, imgs);
    }
    fm.pi = Some(PiTable { window: opts.window, core_vectors, images });
    Ok(fm)
}

/// `Π_A*` applied to a model vector supported on the table window.
fn pi_star(table: &PiTable, v: &GradedVector, fiber: usize) -> Option<GradedVector> {
    let mut out = GradedVector::zeros(fiber);
    for (n, x) in &v.entries {
        let imgs = table.images.get(n)?;
        for (a, c) in x.iter().enumerate() {
            if *c != ZERO {
                out.add_scaled(*c, &imgs[a]);
            }
        }
    }
    Some(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

/// `Π_A` is isometric on the table and intertwines `S_i`, `σ`, `U_ij` with the model operators.
pub fn verify_equivalence(t: &TwistedTuple, fm: &FockModel, tol: f64) -> Result<EquivalenceReport> {
    let table = fm.pi.as_ref().ok_or_else(|| Error::Input("model carries no Π_A table".into()))?;
    let fiber = t.space.fiber();
    let n = table.window;
    let mut iso = CheckReport::new("pi_isometric", tol);
    let flat: Vec<(&MultiIndex, usize, &GradedVector)> =
        table.images.iter().flat_map(|(m, v)| v.iter().enumerate().map(move |(a, x)| (m, a, x))).collect();
    for (p, (m1, a1, x1)) in flat.iter().enumerate() {
        for (m2, a2, x2) in flat.iter().skip(p) {
            let want = if m1 == m2 && a1 == a2 { ONE } else { ZERO };
            iso.record((x1.inner(x2) - want).norm(), || format!("⟨{m1}/{a1}, {m2}/{a2}⟩"));
        }
    }
    let mspace = &fm.tuple.space;
    let intertwine = |name: String, orig: &Op, model: &Op| -> CheckReport {
        let mut r = CheckReport::new(name, tol);
        for (m, c) in mspace.window_basis(n) {
            let e = mspace.basis_vector(&m, c);
            let me = model.apply(&e);
            // Only degrees whose image stays inside the table are comparable.
            let Some(lhs) = pi_star(table, &me, fiber) else {
                continue;
            };
            let Some(pe) = pi_star(table, &e, fiber) else {
                continue;
            };
            let rhs = orig.apply(&pe);
            r.record(lhs.minus(&rhs).norm(), || format!("δ{m}⊗e{c}"));
        }
        r
    };
    let mut checks = vec![iso];
    for i in 0..t.k() {
        checks.push(intertwine(format!("intertwine_S{i}"), t.op(i, 0), fm.tuple.op(i, 0)));
    }
    for (x, s) in t.sigma.iter().enumerate() {
        checks.push(intertwine(format!("intertwine_sigma{x}"), s, &fm.tuple.sigma[x]));
    }
    for (&(i, j), u) in &t.twists {
        checks.push(intertwine(format!("intertwine_U{i}{j}"), u, fm.tuple.twist(i, j)));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(EquivalenceReport { passed, checks })
}

/// Roundtrip: transport a model's own tuple back through [`pi_a`] and compare
/// with the generating operators after the recorded core basis change
/// `M' = (I ⊗ Q*) M (I ⊗ Q)`, where `Q` holds the `𝒟_A` basis at degree 0.
pub fn roundtrip(fm: &FockModel, opts: &WoldOptions, tol: f64) -> Result<(FockModel, CheckReport)> {
    let back = pi_a(&fm.tuple, &fm.subset, opts)?;
    let table = back.pi.as_ref().expect("pi_a sets the table");
    let d = fm.core_dim();
    let zero = MultiIndex::zero(fm.subset.len(), false);
    let mut q = Mat::zeros(d, table.core_vectors.len());
    for (c, h) in table.core_vectors.iter().enumerate() {
        if h.support().iter().any(|m| *m != zero) {
            return Err(Error::Hypothesis("𝒟_A of a model must sit at degree 0".into()));
        }
        let x = h.get(&zero).cloned().unwrap_or_else(|| Vector::zeros(d));
        q.set_column(c, &x);
    }
    let mut r = CheckReport::new("model_roundtrip", tol);
    if q.ncols() != d {
        r.record(f64::INFINITY, || format!("core dimension {} recovered as {}", d, q.ncols()));
        return Ok((back, r));
    }
    let qop = Op::constant(&fm.tuple.space, q.clone())?;
    let qadj = qop.adjoint();
    let sp = fm.tuple.space.clone();
    let conj = |x: &Op, v: &GradedVector| qadj.apply(&x.apply(&qop.apply(v)));
    let n = opts.window;
    for i in 0..fm.k {
        let w = compare_on_window(&sp, n, tol, |v| conj(fm.tuple.op(i, 0), v), |v| back.tuple.op(i, 0).apply(v));
        r.record(w.max_deviation, || format!("M{i} at {:?}", w.worst));
    }
    for (&(i, j), u) in &fm.tuple.twists {
        let w = compare_on_window(&sp, n, tol, |v| conj(u, v), |v| back.tuple.twist(i, j).apply(v));
        r.record(w.max_deviation, || format!("U{i}{j} at {:?}", w.worst));
    }
    for (x, s) in fm.tuple.sigma.iter().enumerate() {
        let w = compare_on_window(&sp, n, tol, |v| conj(s, v), |v| back.tuple.sigma[x].apply(v));
        r.record(w.max_deviation, || format!("sigma{x} at {:?}", w.worst));
    }
    Ok((back, r))
}

/// Identity used by tests: the scalar `t_ij^{(m,n)}` for scalar fibers.
pub fn scalar_block_flip(fibers: &FiberSpec, i: usize, j: usize, m: usize, n: usize) -> Result<C64> {
    Ok(flip_block(fibers, i, j, m, n)?[(0, 0)])
}

/// Space of a model with subset size `p` and core dimension `d`.
pub fn model_space(p: usize, d: usize) -> Space {
    Space::Lattice(LatticeSpace::new(p, d, false))
}
