//! Operator identities behind the decomposition and the Fock model, asserted on
//! windows as equalities of block-operator chains.
//!
//! Every identity is evaluated factor by factor on basis vectors
//! `e_c ⊗ δ_m ⊗ e_a`; nothing is multiplied out symbolically, so a failure
//! points at a concrete block column and degree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{identity, kron, Mat};
use crate::operators::{compare_block_chains, BlockOp, GradedVector, Op};
use crate::report::CheckReport;
use crate::representation::TwistedTuple;
use crate::tensorspace::{flip_block, flip_iterated, MultiIndex};
use crate::wold::all_subsets;

/// Bounds for the lemma suite.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityOptions {
    pub window: usize,
    pub tol: f64,
    /// Largest power in the DTR, `U`-intertwining and commutation identities.
    pub max_power: usize,
    /// Largest entry of `m` in the `Simplify` identity.
    pub simplify_max: usize,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions { window: 8, tol: 1e-10, max_power: 3, simplify_max: 2 }
    }
}

fn op_pow(t: &TwistedTuple, op: &Op, n: usize) -> Result<Op> {
    let mut acc = Op::identity(&t.space);
    for _ in 0..n {
        acc = acc.compose(op)?;
    }
    Ok(acc)
}

fn single(op: Op) -> BlockOp {
    BlockOp::single(op)
}

/// `P_m^{(n)} = T̃_m^{(n)} T̃_m^{(n)*}` as one operator.
fn power_range_projection(t: &TwistedTuple, m: usize, n: usize) -> Result<Op> {
    let tp = t.tilde_power(m, n)?;
    Ok(tp.compose(&tp.adjoint())?.get(0, 0).cloned().unwrap_or_else(|| Op::zero(&t.space)))
}

/// `P_{𝒲_A} = ∏_{i∈A} (I − T̃_iT̃_i*)`.
pub fn joint_wandering_projection(t: &TwistedTuple, subset: &[usize]) -> Result<Op> {
    let mut p = Op::identity(&t.space);
    for &i in subset {
        p = p.compose(&t.wandering_projection(i)?)?;
    }
    Ok(p)
}

fn dim_multi(t: &TwistedTuple, coords: &[usize], powers: &[usize]) -> usize {
    coords.iter().zip(powers).map(|(&i, &m)| t.fibers.power_dim(i, m)).product()
}

fn record_chains(
    r: &mut CheckReport,
    t: &TwistedTuple,
    opts: &IdentityOptions,
    lhs: &[&BlockOp],
    rhs: &[&BlockOp],
    label: impl Fn() -> String,
) -> Result<()> {
    let w = compare_block_chains(&t.space, opts.window, opts.tol, lhs, rhs)?;
    r.record(w.max_deviation, || format!("{} at {:?}", label(), w.worst));
    Ok(())
}

/// All `n ∈ ℤ₊^p` with `|n| ≤ total`.
fn multi_indices(p: usize, total: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                let used: usize = v.iter().sum();
                (0..=total - used).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// `T̃_i^{(p)*} T̃_j^{(q)} = (I_{E_i^p} ⊗ T̃_j^{(q)})(t_ji^{(q,p)} ⊗ U_ji^{qp})(I_{E_j^q} ⊗ T̃_i^{(p)*})`.
pub fn dtr_relation(t: &TwistedTuple, opts: &IdentityOptions) -> Result<CheckReport> {
    let mut r = CheckReport::new("dtr_relation", opts.tol);
    for i in 0..t.k() {
        for j in 0..t.k() {
            if i == j {
                continue;
            }
            for p in 0..=opts.max_power {
                for q in 0..=opts.max_power {
                    let ti = t.tilde_power(i, p)?.adjoint();
                    let tj = t.tilde_power(j, q)?;
                    let mid =
                        BlockOp::scalar_kron(&flip_block(&t.fibers, j, i, q, p)?, &op_pow(t, t.twist(j, i), q * p)?);
                    let left = BlockOp::identity_kron(t.fibers.power_dim(i, p), &tj);
                    let right = BlockOp::identity_kron(t.fibers.power_dim(j, q), &ti);
                    record_chains(&mut r, t, opts, &[&ti, &tj], &[&left, &mid, &right], || {
                        format!("(i,j,p,q)=({i},{j},{p},{q})")
                    })?;
                }
            }
        }
    }
    Ok(r)
}

/// `∏_{i∈A} T̃_i^{(m_i)}(I ⊗ P_{𝒲_i})T̃_i^{(m_i)*} = T̃_A^{(m)}(I ⊗ P_{𝒲_A})T̃_A^{(m)*}`
/// for every nonempty `A` and `m ≤ (simplify_max, …)`.
pub fn simplify_lemma(t: &TwistedTuple, opts: &IdentityOptions) -> Result<CheckReport> {
    let mut r = CheckReport::new("simplify", opts.tol);
    let pw: Vec<Op> = (0..t.k()).map(|i| t.wandering_projection(i)).collect::<Result<_>>()?;
    for a in all_subsets(t.k()).into_iter().filter(|a| !a.is_empty()) {
        let pwa = joint_wandering_projection(t, &a)?;
        let ms = multi_indices(a.len(), opts.simplify_max * a.len())
            .into_iter()
            .filter(|m| m.iter().all(|&x| x <= opts.simplify_max));
        for m in ms {
            let mut lhs_blocks = vec![];
            for (&i, &mi) in a.iter().zip(&m) {
                let ti = t.tilde_power(i, mi)?;
                let mid = BlockOp::identity_kron(t.fibers.power_dim(i, mi), &single(pw[i].clone()));
                lhs_blocks.extend([ti.clone(), mid, ti.adjoint()]);
            }
            let ta = t.tilde_multi(&a, &m)?;
            let mid = BlockOp::identity_kron(dim_multi(t, &a, &m), &single(pwa.clone()));
            let rhs_blocks = [ta.clone(), mid, ta.adjoint()];
            let lhs: Vec<&BlockOp> = lhs_blocks.iter().collect();
            let rhs: Vec<&BlockOp> = rhs_blocks.iter().collect();
            record_chains(&mut r, t, opts, &lhs, &rhs, || format!("A={a:?} m={m:?}"))?;
        }
    }
    Ok(r)
}

/// The three intertwining identities of `U_ij` with `T̃_m^{(n)}`, `P_m^{(n)}`
/// and `t_ij ⊗ U_ij`.
pub fn u_intertwining(t: &TwistedTuple, opts: &IdentityOptions) -> Result<CheckReport> {
    let mut r = CheckReport::new("u_intertwining", opts.tol);
    for i in 0..t.k() {
        for j in 0..t.k() {
            if i == j {
                continue;
            }
            let u = single(t.twist(i, j).clone());
            let tu = BlockOp::scalar_kron(t.fibers.flip(i, j)?, t.twist(i, j));
            for m in 0..t.k() {
                for n in 0..=opts.max_power {
                    let tm = t.tilde_power(m, n)?;
                    let tma = tm.adjoint();
                    let dn = t.fibers.power_dim(m, n);
                    let iu = BlockOp::identity_kron(dn, &u);
                    let lbl = |item: u8| move || format!("({item}) (i,j,m,n)=({i},{j},{m},{n})");
                    record_chains(&mut r, t, opts, &[&u, &tm], &[&tm, &iu], lbl(1))?;
                    record_chains(&mut r, t, opts, &[&u, &tm, &tma], &[&tm, &tma, &u], lbl(2))?;
                    let p = power_range_projection(t, m, n)?;
                    let ip_in = BlockOp::identity_kron(t.dim(i) * t.dim(j), &single(p.clone()));
                    let ip_out = BlockOp::identity_kron(t.dim(j) * t.dim(i), &single(p));
                    record_chains(&mut r, t, opts, &[&tu, &ip_in], &[&ip_out, &tu], lbl(3))?;
                }
            }
        }
    }
    Ok(r)
}

/// `D_r[W_{l,a_r}] = I_{E_{<r}} ⊗ t_{l a_r}^{(n_r)} ⊗ I_{E_{>r}} ⊗ U_{l a_r}^{n_r}`,
/// moving `E_l` across the `r`-th block of `E_A^n`.
fn crossing(t: &TwistedTuple, l: usize, a: &[usize], n: &[usize], r: usize) -> Result<BlockOp> {
    let before = dim_multi(t, &a[..r], &n[..r]);
    let after = dim_multi(t, &a[r + 1..], &n[r + 1..]);
    let flip = flip_iterated(&t.fibers, l, a[r], n[r])?;
    let m = kron(&kron(&identity(before), &flip), &identity(after));
    Ok(BlockOp::scalar_kron(&m, &op_pow(t, t.twist(l, a[r]), n[r])?))
}

/// The commutation identities used to build the model operators, each on the
/// window for powers up to `max_power`.
pub fn commutation_lemmas(t: &TwistedTuple, opts: &IdentityOptions) -> Result<Vec<CheckReport>> {
    let k = t.k();
    let np = opts.max_power;
    let mut uijn_tlm = CheckReport::new("uijn_tlm", opts.tol);
    let mut tij_uij_tl = CheckReport::new("tij_uij_tl", opts.tol);
    let mut tij_uij_ta = CheckReport::new("tij_uij_ta", opts.tol);
    let mut ti_tj_n = CheckReport::new("ti_tj_n", opts.tol);
    let mut tij_ta = CheckReport::new("tij_ta", opts.tol);
    let mut tl_tna = CheckReport::new("tl_tna", opts.tol);
    let subsets: Vec<Vec<usize>> = all_subsets(k).into_iter().filter(|a| !a.is_empty()).collect();

    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            for n in 0..=np {
                let un = op_pow(t, t.twist(i, j), n)?;
                let tn = flip_iterated(&t.fibers, i, j, n)?;
                let dj = t.fibers.power_dim(j, n);
                let dij = t.dim(i) * dj;
                let tu = BlockOp::scalar_kron(&tn, &un);
                for l in 0..k {
                    for m in 0..=np {
                        let tl = t.tilde_power(l, m)?;
                        let dl = t.fibers.power_dim(l, m);
                        // U_ij^n T̃_l^{(m)} = T̃_l^{(m)} (I ⊗ U_ij^n)
                        let u = single(un.clone());
                        let iu = BlockOp::identity_kron(dl, &u);
                        record_chains(&mut uijn_tlm, t, opts, &[&u, &tl], &[&tl, &iu], || {
                            format!("(i,j,l,n,m)=({i},{j},{l},{n},{m})")
                        })?;
                        // (t_ij^{(n)} ⊗ U^n)(I ⊗ T̃_l^{(m)}) = (I ⊗ T̃_l^{(m)})(t_ij^{(n)} ⊗ I_{E_l^m} ⊗ U^n)
                        let itl = BlockOp::identity_kron(dij, &tl);
                        let tiu = BlockOp::scalar_kron(&kron(&tn, &identity(dl)), &un);
                        record_chains(&mut tij_uij_tl, t, opts, &[&tu, &itl], &[&itl, &tiu], || {
                            format!("(i,j,l,n,m)=({i},{j},{l},{n},{m})")
                        })?;
                    }
                }
                for a in &subsets {
                    for q in multi_indices(a.len(), np) {
                        let ta = t.tilde_multi(a, &q)?;
                        let da = dim_multi(t, a, &q);
                        let ita = BlockOp::identity_kron(dij, &ta);
                        let tiu = BlockOp::scalar_kron(&kron(&tn, &identity(da)), &un);
                        record_chains(&mut tij_uij_ta, t, opts, &[&tu, &ita], &[&ita, &tiu], || {
                            format!("(i,j,n)=({i},{j},{n}) A={a:?} q={q:?}")
                        })?;
                    }
                }
                // T̃_i (I ⊗ T̃_j^{(n)}) = T̃_j^{(n)} (I ⊗ T̃_i)(t_ij^{(n)} ⊗ U_ij^n)
                let ti = t.tilde(i);
                let tjn = t.tilde_power(j, n)?;
                let lhs2 = BlockOp::identity_kron(t.dim(i), &tjn);
                let rhs2 = BlockOp::identity_kron(dj, &ti);
                record_chains(&mut ti_tj_n, t, opts, &[&ti, &lhs2], &[&tjn, &rhs2, &tu], || {
                    format!("(i,j,n)=({i},{j},{n})")
                })?;
            }
        }
    }

    for a in &subsets {
        let p = a.len();
        for n in multi_indices(p, np) {
            let ta = t.tilde_multi(a, &n)?;
            let da = dim_multi(t, a, &n);
            // T̃_{a_j}(I ⊗ T̃_A^{(n)}) = T̃_A^{(n+e_j)} D_{j-1} ⋯ D_0
            for j in 1..p {
                let l = a[j];
                let mut n1 = n.clone();
                n1[j] += 1;
                let mut rhs = vec![t.tilde_multi(a, &n1)?];
                for r in (0..j).rev() {
                    rhs.push(crossing(t, l, a, &n, r)?);
                }
                let tl = t.tilde(l);
                let ita = BlockOp::identity_kron(t.dim(l), &ta);
                let rhs_refs: Vec<&BlockOp> = rhs.iter().collect();
                record_chains(&mut tij_ta, t, opts, &[&tl, &ita], &rhs_refs, || format!("A={a:?} n={n:?} j={j}"))?;
            }
            // T̃_l(I ⊗ T̃_A^{(n)}) = T̃_A^{(n)}(I ⊗ T̃_l) D_{p-1} ⋯ D_0 for l ∉ A
            for l in (0..k).filter(|l| !a.contains(l)) {
                let tl = t.tilde(l);
                let ita = BlockOp::identity_kron(t.dim(l), &ta);
                let mut rhs = vec![ta.clone(), BlockOp::identity_kron(da, &tl)];
                for r in (0..p).rev() {
                    rhs.push(crossing(t, l, a, &n, r)?);
                }
                let rhs_refs: Vec<&BlockOp> = rhs.iter().collect();
                record_chains(&mut tl_tna, t, opts, &[&tl, &ita], &rhs_refs, || format!("l={l} A={a:?} n={n:?}"))?;
            }
        }
    }
    for r in [&mut tij_ta, &mut tl_tna] {
        if r.cells == 0 {
            r.add_note("no admissible (A, j) or (l, A) pairs: vacuous");
        }
    }
    Ok(vec![uijn_tlm, tij_uij_tl, tij_uij_ta, ti_tj_n, tij_ta, tl_tna])
}

/// Per-degree dimensions of the two sides of the twisted intersection identity
/// for a reducing subspace with projection `ps`, truncated at `levels`.
#[derive(Clone, Debug, Serialize)]
pub struct IntersectionDims {
    pub subset: Vec<usize>,
    pub subspace: String,
    pub joint: Vec<(MultiIndex, usize)>,
    pub coordinatewise: Vec<(MultiIndex, usize)>,
}

/// Degree-`d` block of a degree-preserving operator given by `f`.
fn degree_block(t: &TwistedTuple, d: &MultiIndex, f: impl Fn(&GradedVector) -> GradedVector) -> Result<Mat> {
    let fiber = t.space.fiber();
    let mut m = Mat::zeros(fiber, fiber);
    for c in t.space.components(d) {
        let out = f(&t.space.basis_vector(d, c));
        for (deg, x) in &out.entries {
            if deg != d {
                if x.norm() > 1e-12 {
                    return Err(Error::Unsupported(format!("range projection moves degree {d} to {deg}")));
                }
                continue;
            }
            m.set_column(c, x);
        }
    }
    Ok(m)
}

/// Dimension of `⋂ Ran(P_k)` at one degree: nullity of `Σ (I − P_k)`.
/// Unsupported components have zero columns in every block, so `I − P_k`
/// keeps them out of the nullspace.
fn intersection_dim(blocks: &[Mat], rank_tol: f64) -> usize {
    let fiber = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let mut acc = Mat::zeros(fiber, fiber);
    for b in blocks {
        acc += identity(fiber) - b;
    }
    fiber - crate::linalg::rank(&acc, rank_tol)
}

/// `⋂_m T̃_A^{(m)}(I ⊗ 𝒮)` against `⋂_{i∈A} ⋂_{m_i} T̃_i^{(m_i)}(I ⊗ 𝒮)`, with
/// `𝒮` either `𝒲_A` or the whole space, per degree on the window.
pub fn twisted_intersection(
    t: &TwistedTuple,
    subset: &[usize],
    levels: usize,
    opts: &IdentityOptions,
) -> Result<(CheckReport, Vec<IntersectionDims>)> {
    let mut r = CheckReport::new("twisted_intersection", 0.0);
    let mut out = vec![];
    if subset.is_empty() {
        return Ok((r.note("A = ∅: both sides are 𝒮"), out));
    }
    let candidates = [("W_A", joint_wandering_projection(t, subset)?), ("H", Op::identity(&t.space))];
    let degrees = t.space.window_degrees(opts.window);
    for (label, ps) in candidates {
        let compress = |chain: BlockOp| -> Result<Op> {
            let mid = BlockOp::identity_kron(chain.cols, &single(ps.clone()));
            Ok(chain.compose(&mid)?.compose(&chain.adjoint())?.get(0, 0).cloned().unwrap_or_else(|| Op::zero(&t.space)))
        };
        let mut joint_ops = vec![];
        for m in
            multi_indices(subset.len(), levels * subset.len()).into_iter().filter(|m| m.iter().all(|&x| x <= levels))
        {
            joint_ops.push(compress(t.tilde_multi(subset, &m)?)?);
        }
        let mut coord_ops = vec![];
        for &i in subset {
            for m in 0..=levels {
                coord_ops.push(compress(t.tilde_power(i, m)?)?);
            }
        }
        let mut dims =
            IntersectionDims { subset: subset.to_vec(), subspace: label.into(), joint: vec![], coordinatewise: vec![] };
        for d in &degrees {
            let jb = joint_ops.iter().map(|p| degree_block(t, d, |v| p.apply(v))).collect::<Result<Vec<_>>>()?;
            let cb = coord_ops.iter().map(|p| degree_block(t, d, |v| p.apply(v))).collect::<Result<Vec<_>>>()?;
            let (dj, dc) = (intersection_dim(&jb, 1e-8), intersection_dim(&cb, 1e-8));
            r.record(dj.abs_diff(dc) as f64, || format!("𝒮={label} degree {d}: {dj} vs {dc}"));
            dims.joint.push((d.clone(), dj));
            dims.coordinatewise.push((d.clone(), dc));
        }
        out.push(dims);
    }
    Ok((r, out))
}

/// DTR, Simplify, `U`-intertwining and the commutation lemmas.
pub fn lemma_suite(t: &TwistedTuple, opts: &IdentityOptions) -> Result<Vec<CheckReport>> {
    let mut out = vec![dtr_relation(t, opts)?, simplify_lemma(t, opts)?, u_intertwining(t, opts)?];
    out.extend(commutation_lemmas(t, opts)?);
    Ok(out)
}
