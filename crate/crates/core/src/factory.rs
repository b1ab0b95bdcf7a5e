//! Fixture constructors: the finite-dimensional permutation and matrix-algebra
//! examples, Fock models with sampled cores, shifts on ℤ₊ⁿ and ℤ, and a few
//! negative controls.
//!
//! Coordinates are 0-based throughout. Sampled fixtures are deterministic in
//! their seed (ChaCha8).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, dagger, diag, from_real_rows, identity, kron, phase, random_phase, random_unitary, zeros, Mat, C64, ONE, ZERO,
};
use crate::model::{build_model_operators, CoreOps, FockModel};
use crate::operators::{Affine, Bounds, Factor, LatticeOperator, LatticeSpace, Op, Space, Term};
use crate::representation::{scalar_sigma, AlgebraSpec, Automorphism, TwistedTuple};
use crate::tensorspace::FiberSpec;

fn lattice_op(space: &LatticeSpace, terms: Vec<Term>) -> Result<Op> {
    Ok(Op::Lattice(LatticeOperator::new(space.clone(), terms)?))
}

fn unit(rank: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; rank];
    v[i] = 1;
    v
}

fn identity_twists(space: &Space, k: usize) -> BTreeMap<(usize, usize), Op> {
    let mut m = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            m.insert((i, j), Op::identity(space));
        }
    }
    m
}

fn scalar_tuple(space: LatticeSpace, ops: Vec<Op>) -> TwistedTuple {
    let k = ops.len();
    let sp = Space::Lattice(space);
    TwistedTuple::new(
        FiberSpec::coordinate_swaps(vec![1; k]),
        AlgebraSpec::scalar(),
        ops.into_iter().map(|o| vec![o]).collect(),
        identity_twists(&sp, k),
        scalar_sigma(&sp),
    )
    .expect("scalar fixture is well formed")
}

/// `(M_{z_1}, …, M_{z_n})` on `ℓ²(ℤ₊ⁿ)`.
pub fn polydisc(n: usize) -> TwistedTuple {
    assert!(n >= 1, "polydisc needs n ≥ 1");
    let sp = LatticeSpace::new(n, 1, false);
    let ops = (0..n).map(|i| lattice_op(&sp, vec![Term::new(unit(n, i), vec![])]).unwrap()).collect();
    scalar_tuple(sp, ops)
}

pub fn unilateral_shift() -> TwistedTuple {
    polydisc(1)
}

/// `M_z ⊗ I_d` on `ℓ²(ℤ₊) ⊗ ℂ^d`.
pub fn unilateral_shift_with_multiplicity(d: usize) -> TwistedTuple {
    let sp = LatticeSpace::new(1, d, false);
    let s = lattice_op(&sp, vec![Term::new(vec![1], vec![])]).unwrap();
    scalar_tuple(sp, vec![s])
}

pub fn bilateral_shift() -> TwistedTuple {
    let sp = LatticeSpace::new(1, 1, true);
    let s = lattice_op(&sp, vec![Term::new(vec![1], vec![])]).unwrap();
    scalar_tuple(sp, vec![s])
}

/// Unilateral shift (component 0, degrees ≥ 0) ⊕ bilateral shift (component 1) on ℤ.
pub fn unilateral_plus_bilateral() -> TwistedTuple {
    direct_sum(&to_signed(&unilateral_shift()).unwrap(), &bilateral_shift()).expect("compatible summands")
}

/// `V₁` the bilateral shift on `ℓ²(ℤ)`; `V₂ f_n = f_n` for `n < 0` and `f_{n+1}` for `n ≥ 0`.
/// Both are isometries; they do not commute, and `ℋ^1` of `V₂` does not reduce `V₁`.
pub fn bilateral_counterexample() -> TwistedTuple {
    let sp = LatticeSpace::new(1, 1, true);
    let v1 = lattice_op(&sp, vec![Term::new(vec![1], vec![])]).unwrap();
    let v2 = lattice_op(
        &sp,
        vec![
            Term::new(vec![1], vec![]).with_domain(Bounds::at_least(&[0])),
            Term::new(vec![0], vec![]).with_domain(Bounds { lo: vec![None], hi: vec![Some(-1)] }),
        ],
    )
    .unwrap();
    scalar_tuple(sp, vec![v1, v2])
}

/// `V₁ = M_{z₁}`, `V₂ δ_n = z̄^{n₁} δ_{n+e₂}` on `ℓ²(ℤ₊²)`, so `V₁V₂ = z V₂V₁` with `U₁₂ = z I`.
pub fn doubly_noncommuting(z: C64) -> Result<TwistedTuple> {
    let sp = LatticeSpace::new(2, 1, false);
    let zbar = Factor::power("zbar", Mat::from_element(1, 1, z.conj()), Affine::coordinate(2, 0))?;
    let v1 = lattice_op(&sp, vec![Term::new(vec![1, 0], vec![])])?;
    let v2 = lattice_op(&sp, vec![Term::new(vec![0, 1], vec![zbar])])?;
    let u =
        lattice_op(&sp, vec![Term::new(vec![0, 0], vec![Factor::named_constant("z", Mat::from_element(1, 1, z))])])?;
    let space = Space::Lattice(sp);
    TwistedTuple::new(
        FiberSpec::coordinate_swaps(vec![1, 1]),
        AlgebraSpec::scalar(),
        vec![vec![v1], vec![v2]],
        BTreeMap::from([((0, 1), u)]),
        scalar_sigma(&space),
    )
}

/// The cyclic permutations of ℂ³ with the diagonal algebra and shift automorphisms.
pub fn c3_permutation() -> TwistedTuple {
    let s1 = from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let s2 = from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
    let sigma = (0..3)
        .map(|x| {
            let mut e = vec![ZERO; 3];
            e[x] = ONE;
            Op::dense(diag(&e)).unwrap()
        })
        .collect();
    let algebra = AlgebraSpec::diagonal(3)
        .with_automorphisms(vec![Automorphism::Permutation(vec![1, 2, 0]), Automorphism::Permutation(vec![2, 0, 1])]);
    TwistedTuple::new(
        FiberSpec::coordinate_swaps(vec![1, 1]),
        algebra,
        vec![vec![Op::dense(s1).unwrap()], vec![Op::dense(s2).unwrap()]],
        BTreeMap::from([((0, 1), Op::dense(identity(3)).unwrap())]),
        sigma,
    )
    .expect("c3 fixture is well formed")
}

/// `S_i = U_i ⊗ V_i` on `ℂ² ⊗ (H²(𝔻²) ⊕ H²(𝔻²))` with
/// `V₁ = M_{z₁} ⊕ D[λ]M_{z₂}`, `V₂ = D[λ]M_{z₂} ⊕ M_{z₁}`, where `D[λ]` multiplies
/// degree `n` by `λ^{n₁}`. The fiber at each degree is `ℂ²(algebra) ⊗ ℂ²(summand)`.
pub fn m2_hardy(lambda: C64) -> Result<TwistedTuple> {
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("λ must be unimodular, |λ| = {}", lambda.norm())));
    }
    let sp = LatticeSpace::new(2, 4, false);
    let u1 = diag(&[ONE, -ONE]);
    let u2 = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let p0 = diag(&[ONE, ZERO]);
    let p1 = diag(&[ZERO, ONE]);
    let lam = || Factor::power("lambda", identity(4) * lambda, Affine::coordinate(2, 0));
    let s1 = lattice_op(
        &sp,
        vec![
            Term::new(vec![1, 0], vec![Factor::named_constant("U1.p0", kron(&u1, &p0))]),
            Term::new(vec![0, 1], vec![Factor::named_constant("U1.p1", kron(&u1, &p1)), lam()?]),
        ],
    )?;
    let s2 = lattice_op(
        &sp,
        vec![
            Term::new(vec![0, 1], vec![Factor::named_constant("U2.p0", kron(&u2, &p0)), lam()?]),
            Term::new(vec![1, 0], vec![Factor::named_constant("U2.p1", kron(&u2, &p1))]),
        ],
    )?;
    let twist = kron(&(identity(2) * c(-1.0, 0.0)), &diag(&[lambda.conj(), lambda]));
    let u12 = lattice_op(&sp, vec![Term::new(vec![0, 0], vec![Factor::named_constant("WxU", twist)])])?;
    let sigma = (0..4)
        .map(|x| {
            let mut e = zeros(2, 2);
            e[(x / 2, x % 2)] = ONE;
            lattice_op(
                &sp,
                vec![Term::new(
                    vec![0, 0],
                    vec![Factor::named_constant(format!("E{}{}", x / 2, x % 2), kron(&e, &identity(2)))],
                )],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let algebra =
        AlgebraSpec::matrix(2).with_automorphisms(vec![Automorphism::Conjugation(u1), Automorphism::Conjugation(u2)]);
    TwistedTuple::new(
        FiberSpec::coordinate_swaps(vec![1, 1]),
        algebra,
        vec![vec![s1], vec![s2]],
        BTreeMap::from([((0, 1), u12)]),
        sigma,
    )
}

/// `S^1_α = c_α X`, `S^2_β = c'_β Y` on `ℂ^m` with clock `X` and shift `Y`, coordinate-swap
/// flips and `U₁₂ = ωI`, `ω = e^{2πi/m}`. A row contraction iff `Σ|c_α|² ≤ 1` and `Σ|c'_β|² ≤ 1`.
pub fn scalar_s_family(m: usize, c1: &[C64], c2: &[C64]) -> Result<TwistedTuple> {
    if m == 0 || c1.is_empty() || c2.is_empty() {
        return Err(Error::Input("scalar S family needs m ≥ 1 and nonempty coefficient lists".into()));
    }
    let omega = phase(1.0 / m as f64);
    let clock = diag(&(0..m).map(|x| omega.powu(x as u32)).collect::<Vec<_>>());
    let mut shift = zeros(m, m);
    for x in 0..m {
        shift[((x + 1) % m, x)] = ONE;
    }
    let ops = vec![
        c1.iter().map(|&a| Op::dense(&clock * a)).collect::<Result<Vec<_>>>()?,
        c2.iter().map(|&b| Op::dense(&shift * b)).collect::<Result<Vec<_>>>()?,
    ];
    let space = Space::Dense(m);
    TwistedTuple::new(
        FiberSpec::coordinate_swaps(vec![c1.len(), c2.len()]),
        AlgebraSpec::scalar(),
        ops,
        BTreeMap::from([((0, 1), Op::dense(identity(m) * omega)?)]),
        scalar_sigma(&space),
    )
}

/// Parameters for sampled Fock-model cores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockParams {
    pub core_dim: usize,
    pub seed: u64,
    /// `m > 1` uses the diagonal algebra `ℂ^m` acting on blocks of the core.
    pub algebra_dim: usize,
    /// Draw unimodular scalar flips `c_ij` instead of trivial ones.
    pub scalar_flips: bool,
}

impl Default for FockParams {
    fn default() -> Self {
        FockParams { core_dim: 2, seed: 7, algebra_dim: 1, scalar_flips: false }
    }
}

fn sample_core(
    k: usize,
    subset: &[usize],
    p: &FockParams,
    rng: &mut ChaCha8Rng,
) -> Result<(FiberSpec, AlgebraSpec, CoreOps)> {
    let d = p.core_dim;
    if d == 0 || p.algebra_dim == 0 || p.algebra_dim > d {
        return Err(Error::Input(format!("need 1 ≤ algebra_dim ≤ core_dim, got {} and {d}", p.algebra_dim)));
    }
    let mut flips = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            flips.insert((i, j), if p.scalar_flips { random_phase(rng) } else { ONE });
        }
    }
    let fibers = FiberSpec::scalar(k, &flips)?;
    let q = random_unitary(d, rng);
    let diagonal = |rng: &mut ChaCha8Rng| {
        let e: Vec<C64> = (0..d).map(|_| random_phase(rng)).collect();
        &q * diag(&e) * dagger(&q)
    };
    let mut u = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            let m = if subset.contains(&i) || subset.contains(&j) {
                diagonal(rng)
            } else {
                // W_iW_j = W_jW_i for simultaneously diagonal W, so c_ij U_ij must be I.
                identity(d) * flips[&(i, j)].conj()
            };
            u.insert((i, j), m);
        }
    }
    let w = (0..k).filter(|i| !subset.contains(i)).map(|l| (l, diagonal(rng))).collect();
    let sigma = if p.algebra_dim == 1 {
        vec![identity(d)]
    } else {
        (0..p.algebra_dim)
            .map(|x| {
                let e: Vec<C64> = (0..d).map(|r| if r % p.algebra_dim == x { ONE } else { ZERO }).collect();
                &q * diag(&e) * dagger(&q)
            })
            .collect()
    };
    let algebra = if p.algebra_dim == 1 { AlgebraSpec::scalar() } else { AlgebraSpec::diagonal(p.algebra_dim) };
    Ok((fibers, algebra, CoreOps { dim: d, sigma, w, u }.complete_twists(k)))
}

const CORE_RETRIES: u64 = 8;

/// A Fock model on `ℓ²(ℤ₊^{|A|}) ⊗ ℂ^{core_dim}` with a sampled core whose
/// unitaries are simultaneously diagonal in a random basis.
pub fn make_fock_model(k: usize, subset: &[usize], p: &FockParams) -> Result<FockModel> {
    let mut last = None;
    for attempt in 0..CORE_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9)));
        let (fibers, algebra, core) = sample_core(k, subset, p, &mut rng)?;
        match build_model_operators(k, subset, core, &fibers, &algebra) {
            Ok(m) => return Ok(m),
            Err(e @ Error::Hypothesis(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// A Fock model with an explicit core and trivial flips.
pub fn make_fock_model_with_core(k: usize, subset: &[usize], core: CoreOps) -> Result<FockModel> {
    let fibers = FiberSpec::coordinate_swaps(vec![1; k]);
    let algebra = if core.sigma.len() == 1 { AlgebraSpec::scalar() } else { AlgebraSpec::diagonal(core.sigma.len()) };
    build_model_operators(k, subset, core, &fibers, &algebra)
}

/// `k = 2`, `A = {0}`, `U₀₁ = diag(i, −i)` on `𝒟 = ℂ²`, `W₁ = diag(1, i)`.
pub fn fock_diag_i_example() -> Result<FockModel> {
    let i = c(0.0, 1.0);
    let core = CoreOps {
        dim: 2,
        sigma: vec![identity(2)],
        w: BTreeMap::from([(1, diag(&[ONE, i]))]),
        u: BTreeMap::from([((0, 1), diag(&[i, -i]))]),
    };
    make_fock_model_with_core(2, &[0], core)
}

fn remap_factor(f: &Factor, map: &[usize], rank: usize) -> Factor {
    match f {
        Factor::Power { name, base, base_adj, exponent } => {
            let mut coeffs = vec![0; rank];
            for (q, &x) in exponent.coeffs.iter().enumerate() {
                coeffs[map[q]] = x;
            }
            Factor::Power {
                name: name.clone(),
                base: base.clone(),
                base_adj: base_adj.clone(),
                exponent: Affine { coeffs, constant: exponent.constant },
            }
        }
        other => other.clone(),
    }
}

fn remap_bounds(b: &Bounds, map: &[usize], rank: usize, pinned: Option<i64>) -> Bounds {
    let mut out = Bounds { lo: vec![pinned; rank], hi: vec![pinned; rank] };
    for (q, &x) in map.iter().enumerate() {
        out.lo[x] = b.lo[q];
        out.hi[x] = b.hi[q];
    }
    out
}

/// Place a lattice tuple on `ℤ₊^rank` (or `ℤ^rank`): old coordinate `q` becomes
/// coordinate `map[q]`, and the remaining coordinates are pinned to 0 by the support.
pub fn embed_lattice(t: &TwistedTuple, map: &[usize], rank: usize) -> Result<TwistedTuple> {
    let old = t.space.lattice().ok_or_else(|| Error::Unsupported("embedding needs a lattice tuple".into()))?;
    if map.len() != old.rank || map.iter().any(|&x| x >= rank) {
        return Err(Error::Input(format!("coordinate map {map:?} does not fit rank {rank}")));
    }
    let support = (0..old.fiber)
        .map(|c| remap_bounds(old.support.get(c).unwrap_or(&Bounds::unbounded(old.rank)), map, rank, Some(0)))
        .collect();
    let space = LatticeSpace::new(rank, old.fiber, old.signed).with_support(support)?;
    let lift = |op: &Op| -> Result<Op> {
        let lat = op.as_lattice().expect("lattice tuple");
        let terms = lat
            .terms
            .iter()
            .map(|term| {
                let mut offset = vec![0; rank];
                for (q, &x) in map.iter().enumerate() {
                    offset[x] = term.offset[q];
                }
                Term {
                    coeff: term.coeff,
                    offset,
                    domain: remap_bounds(&term.domain, map, rank, None),
                    gen: crate::operators::BlockGenerator {
                        factors: term.gen.factors.iter().map(|f| remap_factor(f, map, rank)).collect(),
                    },
                }
            })
            .collect();
        lattice_op(&space, terms)
    };
    rebuild(t, lift)
}

fn rebuild(t: &TwistedTuple, f: impl Fn(&Op) -> Result<Op>) -> Result<TwistedTuple> {
    let ops = t.ops.iter().map(|row| row.iter().map(&f).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    let twists = t
        .twists
        .iter()
        .filter(|((i, j), _)| i < j)
        .map(|(&k, u)| Ok((k, f(u)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let sigma = t.sigma.iter().map(&f).collect::<Result<Vec<_>>>()?;
    TwistedTuple::new(t.fibers.clone(), t.algebra.clone(), ops, twists, sigma)
}

/// Read an unsigned lattice tuple on the signed lattice, supported on degrees ≥ 0.
pub fn to_signed(t: &TwistedTuple) -> Result<TwistedTuple> {
    let old = t.space.lattice().ok_or_else(|| Error::Unsupported("to_signed needs a lattice tuple".into()))?;
    if old.signed {
        return Ok(t.clone());
    }
    let nonneg = Bounds::at_least(&vec![0; old.rank]);
    let support = (0..old.fiber).map(|c| old.support.get(c).map_or(nonneg.clone(), |b| b.intersect(&nonneg))).collect();
    let space = LatticeSpace::new(old.rank, old.fiber, true).with_support(support)?;
    rebuild(t, |op| {
        let lat = op.as_lattice().expect("lattice tuple");
        let terms = lat.terms.iter().map(|term| term.clone().with_domain(term.domain.intersect(&nonneg))).collect();
        lattice_op(&space, terms)
    })
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (da, db) = (a.nrows(), b.nrows());
    let mut m = zeros(da + db, da + db);
    m.view_mut((0, 0), (da, da)).copy_from(a);
    m.view_mut((da, da), (db, db)).copy_from(b);
    m
}

/// Pad every factor of one summand to the sum fiber; the block projector kills the other summand.
fn pad_op(op: &Op, space: &LatticeSpace, first: bool, da: usize, db: usize) -> Result<Op> {
    let lat = op.as_lattice().expect("lattice tuple");
    let (id_a, id_b) = (identity(da), identity(db));
    let pad = |m: &Mat, other: &Mat| {
        if first {
            block_diag(m, other)
        } else {
            block_diag(other, m)
        }
    };
    let projector =
        pad(&identity(if first { da } else { db }), &zeros(if first { db } else { da }, if first { db } else { da }));
    let tag = if first { "a" } else { "b" };
    let terms = lat
        .terms
        .iter()
        .map(|term| {
            let mut factors = vec![Factor::constant(projector.clone())];
            for f in &term.gen.factors {
                factors.push(match f {
                    Factor::Power { name, base, exponent, .. } => {
                        let other = if first { &id_b } else { &id_a };
                        Factor::power(format!("{name}@{tag}"), pad(base, other), exponent.clone())?
                    }
                    Factor::Const { matrix, .. } => {
                        let zero = if first { zeros(db, db) } else { zeros(da, da) };
                        Factor::constant(pad(matrix, &zero))
                    }
                });
            }
            Ok(Term::new(term.offset.clone(), factors).with_domain(term.domain.clone()).with_coeff(term.coeff))
        })
        .collect::<Result<Vec<_>>>()?;
    lattice_op(space, terms)
}

/// Orthogonal direct sum of two tuples with the same coordinates, flips and algebra.
pub fn direct_sum(a: &TwistedTuple, b: &TwistedTuple) -> Result<TwistedTuple> {
    if a.fibers != b.fibers || a.algebra != b.algebra {
        return Err(Error::Input("direct sum needs equal fibers, flips and algebra".into()));
    }
    let fiber_sum = |x: &Op, y: &Op| block_diag(x.as_dense().unwrap(), y.as_dense().unwrap());
    match (&a.space, &b.space) {
        (Space::Dense(_), Space::Dense(_)) => {
            let ops = a
                .ops
                .iter()
                .zip(&b.ops)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| Op::dense(fiber_sum(x, y))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let twists = a
                .twists
                .iter()
                .filter(|((i, j), _)| i < j)
                .map(|(&k, u)| Ok((k, Op::dense(fiber_sum(u, &b.twists[&k]))?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let sigma =
                a.sigma.iter().zip(&b.sigma).map(|(x, y)| Op::dense(fiber_sum(x, y))).collect::<Result<Vec<_>>>()?;
            TwistedTuple::new(a.fibers.clone(), a.algebra.clone(), ops, twists, sigma)
        }
        (Space::Lattice(la), Space::Lattice(lb)) => {
            if la.rank != lb.rank || la.signed != lb.signed {
                return Err(Error::Input("direct sum needs lattices of equal rank and signedness".into()));
            }
            let (da, db) = (la.fiber, lb.fiber);
            let boxes = |l: &LatticeSpace| -> Vec<Bounds> {
                (0..l.fiber).map(|c| l.support.get(c).cloned().unwrap_or_else(|| Bounds::unbounded(l.rank))).collect()
            };
            let mut support = boxes(la);
            support.extend(boxes(lb));
            let space = LatticeSpace::new(la.rank, da + db, la.signed).with_support(support)?;
            let sum = |x: &Op, y: &Op| -> Result<Op> {
                pad_op(x, &space, true, da, db)?.add(&pad_op(y, &space, false, da, db)?)
            };
            let ops = a
                .ops
                .iter()
                .zip(&b.ops)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| sum(x, y)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let twists = a
                .twists
                .iter()
                .filter(|((i, j), _)| i < j)
                .map(|(&k, u)| Ok((k, sum(u, &b.twists[&k])?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let sigma = a.sigma.iter().zip(&b.sigma).map(|(x, y)| sum(x, y)).collect::<Result<Vec<_>>>()?;
            TwistedTuple::new(a.fibers.clone(), a.algebra.clone(), ops, twists, sigma)
        }
        _ => Err(Error::Unsupported("direct sum of a dense and a lattice tuple".into())),
    }
}

/// `k = 2`: the Fock model with `A = {0}` (embedded in ℤ₊² at `n₁ = 0`) ⊕ the model with `A = {0,1}`.
/// Returns the tuple and the two models, whose block dimensions are the expected summand dimensions.
pub fn fock_direct_sum(p: &FockParams) -> Result<(TwistedTuple, FockModel, FockModel)> {
    let m1 = make_fock_model(2, &[0], p)?;
    let p2 = FockParams { seed: p.seed.wrapping_add(1), ..p.clone() };
    let m2 = make_fock_model(2, &[0, 1], &p2)?;
    let e1 = embed_lattice(&m1.tuple, &[0], 2)?;
    // Both models must share flips; scalar flips are drawn per seed, so only trivial ones align.
    let t = direct_sum(&e1, &m2.tuple)?;
    Ok((t, m1, m2))
}

/// Named fixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ExampleId {
    C3Permutation,
    M2Hardy { lambda_turns: f64 },
    FockModel { k: usize, subset: Vec<usize>, params: FockParams },
    FockDirectSum { params: FockParams },
    ScalarSFamily { m: usize, c1: Vec<f64>, c2: Vec<f64> },
    Polydisc { n: usize },
    UnilateralShift,
    BilateralShift,
    UnilateralPlusBilateral,
    BilateralCounterexample,
    DoublyNoncommuting { z_turns: f64 },
}

/// Names accepted by [`ExampleId::from_name`].
pub const EXAMPLE_NAMES: &[&str] = &[
    "c3_permutation",
    "m2_hardy",
    "fock_model",
    "fock_direct_sum",
    "scalar_s_family",
    "polydisc",
    "unilateral_shift",
    "bilateral_shift",
    "unilateral_plus_bilateral",
    "bilateral_counterexample",
    "doubly_noncommuting",
];

/// Knobs that parametrized fixtures read; unused fields are ignored.
#[derive(Clone, Debug)]
pub struct ExampleParams {
    pub k: usize,
    pub subset: Vec<usize>,
    pub n: usize,
    pub seed: u64,
    pub core_dim: usize,
    pub turns: Option<f64>,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams { k: 2, subset: vec![0], n: 2, seed: 7, core_dim: 2, turns: None }
    }
}

impl ExampleId {
    pub fn from_name(name: &str, p: &ExampleParams) -> Result<ExampleId> {
        let fock = FockParams { core_dim: p.core_dim, seed: p.seed, ..FockParams::default() };
        Ok(match name.replace('-', "_").as_str() {
            "c3_permutation" | "c3" => ExampleId::C3Permutation,
            "m2_hardy" => ExampleId::M2Hardy { lambda_turns: p.turns.unwrap_or(1.0 / 6.0) },
            "fock_model" | "fock" => ExampleId::FockModel { k: p.k, subset: p.subset.clone(), params: fock },
            "fock_direct_sum" => ExampleId::FockDirectSum { params: fock },
            "scalar_s_family" => ExampleId::ScalarSFamily { m: 3, c1: vec![0.6, 0.8], c2: vec![1.0] },
            "polydisc" => ExampleId::Polydisc { n: p.n },
            "unilateral_shift" => ExampleId::UnilateralShift,
            "bilateral_shift" => ExampleId::BilateralShift,
            "unilateral_plus_bilateral" => ExampleId::UnilateralPlusBilateral,
            "bilateral_counterexample" => ExampleId::BilateralCounterexample,
            "doubly_noncommuting" => ExampleId::DoublyNoncommuting { z_turns: p.turns.unwrap_or(0.25) },
            other => {
                return Err(Error::Input(format!("unknown example '{other}'; known: {}", EXAMPLE_NAMES.join(", "))))
            }
        })
    }

    pub fn build(&self) -> Result<TwistedTuple> {
        let real = |v: &[f64]| v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>();
        match self {
            ExampleId::C3Permutation => Ok(c3_permutation()),
            ExampleId::M2Hardy { lambda_turns } => m2_hardy(phase(*lambda_turns)),
            ExampleId::FockModel { k, subset, params } => Ok(make_fock_model(*k, subset, params)?.tuple),
            ExampleId::FockDirectSum { params } => Ok(fock_direct_sum(params)?.0),
            ExampleId::ScalarSFamily { m, c1, c2 } => scalar_s_family(*m, &real(c1), &real(c2)),
            ExampleId::Polydisc { n } if *n >= 1 => Ok(polydisc(*n)),
            ExampleId::Polydisc { .. } => Err(Error::Input("polydisc needs n ≥ 1".into())),
            ExampleId::UnilateralShift => Ok(unilateral_shift()),
            ExampleId::BilateralShift => Ok(bilateral_shift()),
            ExampleId::UnilateralPlusBilateral => Ok(unilateral_plus_bilateral()),
            ExampleId::BilateralCounterexample => Ok(bilateral_counterexample()),
            ExampleId::DoublyNoncommuting { z_turns } => doubly_noncommuting(phase(*z_turns)),
        }
    }
}

/// Build a fixture by name with default parameters and the given seed.
pub fn make(name: &str, seed: u64) -> Result<TwistedTuple> {
    ExampleId::from_name(name, &ExampleParams { seed, ..ExampleParams::default() })?.build()
}

/// Draw a random subset of `0..k` (used by property tests over Fock models).
pub fn random_subset<R: Rng>(k: usize, rng: &mut R) -> Vec<usize> {
    (0..k).filter(|_| rng.random_bool(0.5)).collect()
}
