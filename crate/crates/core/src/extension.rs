//! Unitary extensions of doubly twisted isometric tuples.
//!
//! The direct limit of `ℋ →Φ ℋ →Φ ⋯` is realized on the signed lattice: `ψ₀`
//! is the inclusion `ℤ₊^r ⊂ ℤ^r`, the connecting map continues to a unitary
//! `Φ_∞`, and `ψ_m = Φ_∞^{*m} ψ₀`. Each extended operator is the signed
//! continuation of the original terms. The verifier checks that this agrees
//! with the limit formula `V_{∞,i} ψ_m = ψ_m Z_i^m V_i` level by level, so the
//! continuation is never trusted on its own.
//!
//! Inputs are restricted to one operator per coordinate (`d_i = 1`) on an
//! unsigned lattice without support boxes and without piecewise terms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{compare_on_window, Bounds, GradedVector, LatticeOperator, LatticeSpace, Op, Space};
use crate::report::CheckReport;
use crate::representation::{
    check_doubly_twisted, check_isometric, check_sigma_homomorphism, check_twisted, coisometric_coordinates,
    TwistedTuple,
};
use crate::tensorspace::MultiIndex;

/// Which construction produced an extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    /// Every coordinate was already unitary; nothing to extend.
    Unchanged,
    /// `Φ` is the product of the shift-type coordinates.
    DoublyTwisted,
    /// `Φ = S_A ⊗ I` on a Fock model over a commutative algebra.
    CommutativeLattice,
}

#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub kind: ExtensionKind,
    pub original: TwistedTuple,
    pub extended: TwistedTuple,
    /// Connecting map `φ_{m+1,m}` on the original space.
    pub phi: Op,
    /// Its continuation `Φ_∞`.
    pub phi_ext: Op,
    /// Coordinates whose product forms `Φ` (empty for the commutative construction).
    pub phi_coords: Vec<usize>,
    /// Level twists: `M_{m,i} = Z_i^m V_i` on the original space.
    pub z: Vec<Op>,
    pub log: Vec<String>,
}

/// Inclusion `ψ₀`: relabel degrees as signed.
pub fn psi0(v: &GradedVector) -> GradedVector {
    GradedVector {
        fiber: v.fiber,
        entries: v
            .entries
            .iter()
            .map(|(m, x)| (MultiIndex { coords: m.coords.clone(), signed: true }, x.clone()))
            .collect(),
    }
}

fn continuation_space(t: &TwistedTuple) -> Result<LatticeSpace> {
    let l = t.space.lattice().ok_or_else(|| Error::Unsupported("extension needs a lattice tuple".into()))?;
    if l.signed {
        return Err(Error::Unsupported("extension of tuples already on a signed lattice".into()));
    }
    if !l.support.is_empty() {
        return Err(Error::Unsupported("extension of tuples with support boxes".into()));
    }
    Ok(l.signed_version())
}

fn continue_op(op: &Op, space: &LatticeSpace) -> Result<Op> {
    let lat = op.as_lattice().expect("lattice operator");
    let unbounded = Bounds::unbounded(space.rank);
    if lat.terms.iter().any(|t| t.domain != unbounded) {
        return Err(Error::Unsupported("signed continuation of piecewise terms".into()));
    }
    Ok(Op::Lattice(lat.on_space(space)?))
}

fn continue_tuple(t: &TwistedTuple, space: &LatticeSpace) -> Result<TwistedTuple> {
    let ops = t
        .ops
        .iter()
        .map(|row| row.iter().map(|o| continue_op(o, space)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let twists = t
        .twists
        .iter()
        .filter(|((i, j), _)| i < j)
        .map(|(&k, u)| Ok((k, continue_op(u, space)?)))
        .collect::<Result<_>>()?;
    let sigma = t.sigma.iter().map(|s| continue_op(s, space)).collect::<Result<Vec<_>>>()?;
    TwistedTuple::new(t.fibers.clone(), t.algebra.clone(), ops, twists, sigma)
}

fn require_single_operator_coordinates(t: &TwistedTuple) -> Result<()> {
    if t.fibers.dims.iter().any(|&d| d != 1) {
        return Err(Error::Unsupported("extension needs one operator per coordinate".into()));
    }
    Ok(())
}

fn unchanged(t: &TwistedTuple, note: &str) -> ExtensionResult {
    let id = Op::identity(&t.space);
    ExtensionResult {
        kind: ExtensionKind::Unchanged,
        original: t.clone(),
        extended: t.clone(),
        phi: id.clone(),
        phi_ext: id.clone(),
        phi_coords: vec![],
        z: vec![id; t.k()],
        log: vec![note.to_string()],
    }
}

/// `Z_i = ∏_{a∈Φ, a≠i} c_{ai} U_{ai}`, so that `Φ V_i = Z_i V_i Φ`.
fn z_for(t: &TwistedTuple, phi_coords: &[usize], i: usize) -> Result<Op> {
    let mut z = Op::identity(&t.space);
    for &a in phi_coords.iter().filter(|&&a| a != i) {
        let c = t.fibers.scalar_flip(a, i)?;
        z = z.compose(&t.twist(a, i).scale(c))?;
    }
    Ok(z)
}

/// Extend a doubly twisted isometric tuple to a doubly twisted unitary tuple.
///
/// `Φ` is the product of the coordinates that are not fully coisometric on the
/// window; unitary coordinates are left out of it.
pub fn extend_doubly_twisted_isometries(t: &TwistedTuple, n: usize, tol: f64) -> Result<ExtensionResult> {
    require_single_operator_coordinates(t)?;
    for r in [check_isometric(t, n, tol), check_twisted(t, n, tol)?, check_doubly_twisted(t, n, tol)?] {
        if !r.passed {
            return Err(Error::Hypothesis(format!(
                "extension needs a doubly twisted isometric tuple: {}",
                r.summary()
            )));
        }
    }
    let coiso = coisometric_coordinates(t, n, tol)?;
    let phi_coords: Vec<usize> = (0..t.k()).filter(|&i| !coiso[i]).collect();
    if phi_coords.is_empty() {
        return Ok(unchanged(t, "every coordinate is unitary on the window"));
    }
    let space = continuation_space(t)?;
    let phi = Op::product(&t.space, &phi_coords.iter().map(|&i| t.op(i, 0)).collect::<Vec<_>>())?;
    let z = (0..t.k()).map(|i| z_for(t, &phi_coords, i)).collect::<Result<Vec<_>>>()?;
    let extended = continue_tuple(t, &space)?;
    let phi_ext = continue_op(&phi, &space)?;
    let log = vec![
        format!("Φ = product of coordinates {phi_coords:?}"),
        format!("Z_i = ∏ c_ai U_ai over a ∈ {phi_coords:?}, a ≠ i"),
        "ψ_m = Φ_∞^{*m} ψ₀ with ψ₀ the inclusion of the unsigned lattice".into(),
    ];
    Ok(ExtensionResult {
        kind: ExtensionKind::DoublyTwisted,
        original: t.clone(),
        extended,
        phi,
        phi_ext,
        phi_coords,
        z,
        log,
    })
}

/// Extend a Fock model over a commutative algebra with `φ_{m+1,m} = S_A ⊗ I`.
///
/// Level twists: `X_{a_q} = ∏_{r<q} c_{a_r a_q} U_{a_r a_q}` for `a_q ∈ A` and
/// `Y_l = ∏_r c_{a_r l} U_{a_r l}` for `l ∉ A`.
pub fn extend_commutative_lattice(fm: &crate::model::FockModel) -> Result<ExtensionResult> {
    let t = &fm.tuple;
    if !t.algebra.is_commutative() {
        return Err(Error::Hypothesis("commutative lattice extension needs a commutative algebra".into()));
    }
    require_single_operator_coordinates(t)?;
    let a = &fm.subset;
    if a.is_empty() {
        return Ok(unchanged(t, "A = ∅: the model is a unitary tuple on its core"));
    }
    let p = a.len();
    let lat = t.space.lattice().expect("Fock model lives on a lattice").clone();
    let phi = Op::Lattice(LatticeOperator::new(lat.clone(), vec![crate::operators::Term::new(vec![1; p], vec![])])?);
    let mut z = vec![];
    for i in 0..fm.k {
        let before: Vec<usize> = match a.iter().position(|&x| x == i) {
            Some(q) => a[..q].to_vec(),
            None => a.clone(),
        };
        z.push(z_for(t, &before, i)?);
    }
    let space = continuation_space(t)?;
    let extended = continue_tuple(t, &space)?;
    let phi_ext = continue_op(&phi, &space)?;
    let log = vec![
        format!("φ = S_A ⊗ I with offset {:?}", vec![1; p]),
        "X_{a_q} = ∏_{r<q} c U_{a_r a_q}; Y_l = ∏_r c U_{a_r l}".into(),
    ];
    Ok(ExtensionResult {
        kind: ExtensionKind::CommutativeLattice,
        original: t.clone(),
        extended,
        phi,
        phi_ext,
        phi_coords: vec![],
        z,
        log,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub kind: ExtensionKind,
    pub checks: Vec<CheckReport>,
    pub unitary: bool,
    pub twisted: bool,
    pub doubly_twisted: bool,
    pub passed: bool,
    pub log: Vec<String>,
}

impl ExtensionReport {
    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn pow_apply(op: &Op, m: usize, v: &GradedVector) -> GradedVector {
    (0..m).fold(v.clone(), |acc, _| op.apply(&acc))
}

/// Verify an extension on windows of radius `n` (original and extended):
/// restriction, unitarity, relations, `σ_∞`, level intertwinings, the limit
/// formula, the coisometry hypothesis and the density surrogate.
pub fn verify_extension(res: &ExtensionResult, n: usize, levels: usize, tol: f64) -> Result<ExtensionReport> {
    let orig = &res.original;
    let ext = &res.extended;
    let osp = &orig.space;
    let esp = &ext.space;

    let mut restriction = CheckReport::new("restriction", tol);
    for (name, o) in orig.labelled_ops() {
        let e = ext.labelled_ops().into_iter().find(|(m, _)| *m == name).map(|(_, e)| e.clone()).expect("same labels");
        let w = compare_on_window(osp, n, tol, |v| e.apply(&lift(res, v)), |v| lift(res, &o.apply(v)));
        restriction.record(w.max_deviation, || format!("{name} at {:?}", w.worst));
    }

    let mut unitary = CheckReport::new("unitary", tol);
    for i in 0..ext.k() {
        let s = ext.op(i, 0);
        let sa = s.adjoint();
        let w = compare_on_window(esp, n, tol, |v| sa.apply(&s.apply(v)), |v| v.clone());
        unitary.record(w.max_deviation, || format!("V{i}*V{i} at {:?}", w.worst));
        let w = compare_on_window(esp, n, tol, |v| s.apply(&sa.apply(v)), |v| v.clone());
        unitary.record(w.max_deviation, || format!("V{i}V{i}* at {:?}", w.worst));
    }

    let twisted = check_twisted(ext, n, tol)?;
    let doubly = check_doubly_twisted(ext, n, tol)?;
    let sigma = check_sigma_homomorphism(ext, n, tol);

    // φ^{n−m} Z_i^m V_i = Z_i^{n} V_i φ^{n−m} for m ≤ n ≤ levels.
    let mut level = CheckReport::new("level_intertwining", tol);
    for i in 0..orig.k() {
        let (zi, vi) = (&res.z[i], orig.op(i, 0));
        for hi in 0..=levels {
            for lo in 0..=hi {
                let w = compare_on_window(
                    osp,
                    n,
                    tol,
                    |v| pow_apply(&res.phi, hi - lo, &pow_apply(zi, lo, &vi.apply(v))),
                    |v| pow_apply(zi, hi, &vi.apply(&pow_apply(&res.phi, hi - lo, v))),
                );
                level.record(w.max_deviation, || format!("i={i} (m,n)=({lo},{hi}) at {:?}", w.worst));
            }
        }
    }

    // V_{∞,i} ψ_m = ψ_m Z_i^m V_i with ψ_m = Φ_∞^{*m} ψ₀.
    let mut limit = CheckReport::new("limit_formula", tol);
    let phi_adj = res.phi_ext.adjoint();
    for i in 0..orig.k() {
        let (zi, vi, ve) = (&res.z[i], orig.op(i, 0), ext.op(i, 0));
        for m in 0..=levels {
            let psi = |v: &GradedVector| pow_apply(&phi_adj, m, &lift(res, v));
            let w = compare_on_window(osp, n, tol, |v| ve.apply(&psi(v)), |v| psi(&pow_apply(zi, m, &vi.apply(v))));
            limit.record(w.max_deviation, || format!("i={i} m={m} at {:?}", w.worst));
        }
    }

    // V_jV_j* φ = φ: the range condition that makes the limit fully coisometric.
    let mut coiso = CheckReport::new("coisometry_hypothesis", tol);
    for j in 0..orig.k() {
        let p = orig.range_projection(j)?;
        let w = compare_on_window(osp, n, tol, |v| p.apply(&res.phi.apply(v)), |v| res.phi.apply(v));
        coiso.record(w.max_deviation, || format!("j={j} at {:?}", w.worst));
    }

    let density = density_surrogate(res, n, tol);

    let unitary_ok = unitary.passed;
    let (twisted_ok, doubly_ok) = (twisted.passed, doubly.passed);
    let checks = vec![restriction, unitary, twisted, doubly, sigma, level, limit, coiso, density];
    let passed = checks.iter().all(|c| c.passed);
    Ok(ExtensionReport {
        kind: res.kind,
        checks,
        unitary: unitary_ok,
        twisted: twisted_ok,
        doubly_twisted: doubly_ok,
        passed,
        log: res.log.clone(),
    })
}

fn lift(res: &ExtensionResult, v: &GradedVector) -> GradedVector {
    if res.kind == ExtensionKind::Unchanged {
        v.clone()
    } else {
        psi0(v)
    }
}

/// Every degree of the extended window is reached by some `ψ_m` image.
fn density_surrogate(res: &ExtensionResult, n: usize, tol: f64) -> CheckReport {
    let mut r = CheckReport::new("density", tol);
    if res.kind == ExtensionKind::Unchanged {
        return r.note("nothing to extend");
    }
    let ext = &res.extended.space;
    let Space::Lattice(lat) = ext else { return r };
    // Offset of the connecting map, read off the image of the vacuum.
    let vac = MultiIndex::zero(lat.rank, false);
    let probe = res.phi.apply(&res.original.space.basis_vector(&vac, 0));
    let Some(shift) = probe.support().first().map(|m| m.coords.clone()) else {
        return r.note("connecting map kills the vacuum");
    };
    if shift.iter().any(|&s| s <= 0) {
        r.require(false, || format!("connecting map offset {shift:?} does not move every coordinate"));
        return r;
    }
    let phi_adj = res.phi_ext.adjoint();
    for m in ext.window_degrees(n) {
        let steps =
            m.coords.iter().zip(&shift).map(|(&x, &s)| if x >= 0 { 0 } else { (-x + s - 1) / s }).max().unwrap_or(0);
        let q: Vec<i64> = m.coords.iter().zip(&shift).map(|(&x, &s)| x + steps * s).collect();
        let qd = MultiIndex { coords: q, signed: false };
        let mut cols = vec![];
        for c in 0..lat.fiber {
            let img = pow_apply(&phi_adj, steps as usize, &psi0(&res.original.space.basis_vector(&qd, c)));
            cols.push(img.get(&m).cloned().unwrap_or_else(|| crate::linalg::Vector::zeros(lat.fiber)));
        }
        let mut mat = crate::linalg::Mat::zeros(lat.fiber, cols.len());
        for (c, v) in cols.iter().enumerate() {
            mat.set_column(c, v);
        }
        let rank = crate::linalg::rank(&mat, 1e-8);
        r.record((lat.fiber - rank) as f64, || format!("degree {m}: ψ images span {rank} of {}", lat.fiber));
    }
    r
}

/// Negative control: multiply `V_{∞,i}` by an extra `Z_i` on degrees with
/// `n_coord ≤ −1`, i.e. use the wrong exponent in the limit formula there.
pub fn corrupt_z_exponent(res: &ExtensionResult, i: usize, coord: usize) -> Result<ExtensionResult> {
    if res.kind == ExtensionKind::Unchanged {
        return Err(Error::Input("nothing to corrupt in an unchanged extension".into()));
    }
    let space = res.extended.space.lattice().expect("lattice extension").clone();
    let v = res.extended.op(i, 0).as_lattice().expect("lattice").clone();
    let z = continue_op(&res.z[i], &space)?;
    let zv = z.as_lattice().expect("lattice").compose(&v)?;
    let mut nonneg = Bounds::unbounded(space.rank);
    nonneg.lo[coord] = Some(0);
    let mut neg = Bounds::unbounded(space.rank);
    neg.hi[coord] = Some(-1);
    let mut terms: Vec<_> = v.terms.iter().map(|t| t.clone().with_domain(t.domain.intersect(&nonneg))).collect();
    terms.extend(zv.terms.iter().map(|t| t.clone().with_domain(t.domain.intersect(&neg))));
    let bad = Op::Lattice(LatticeOperator::new(space, terms)?);
    let mut out = res.clone();
    let mut ops = out.extended.ops.clone();
    ops[i][0] = bad;
    let twists = out.extended.twists.iter().filter(|((a, b), _)| a < b).map(|(k, u)| (*k, u.clone())).collect();
    out.extended = TwistedTuple::new(
        out.extended.fibers.clone(),
        out.extended.algebra.clone(),
        ops,
        twists,
        out.extended.sigma.clone(),
    )?;
    out.log.push(format!("corrupted: extra Z_{i} on degrees with n_{coord} ≤ -1"));
    Ok(out)
}

/// Unitary ⇒ doubly twisted, over a corpus of extension reports.
pub fn check_implication(reports: &[(String, ExtensionReport)]) -> CheckReport {
    let mut r = CheckReport::new("unitary_implies_doubly_twisted", 0.0);
    for (name, rep) in reports {
        r.require(!rep.unitary || rep.doubly_twisted, || format!("{name}: unitary but not doubly twisted"));
    }
    r
}

/// Lemma form: unitary and twisted ⇒ doubly twisted. Holds for any run,
/// including deliberately corrupted ones.
pub fn check_twisted_unitary_lemma(reports: &[(String, ExtensionReport)]) -> CheckReport {
    let mut r = CheckReport::new("twisted_unitary_implies_doubly_twisted", 0.0);
    for (name, rep) in reports {
        let premise = rep.unitary && rep.twisted;
        r.require(!premise || rep.doubly_twisted, || format!("{name}: unitary and twisted but not doubly twisted"));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{self, FockParams};
    use crate::linalg::c;

    fn summaries(r: &ExtensionReport) -> Vec<String> {
        r.checks.iter().map(|c| c.summary()).collect()
    }

    #[test]
    fn unilateral_shift_extends_to_the_bilateral_shift() {
        let t = factory::unilateral_shift();
        let res = extend_doubly_twisted_isometries(&t, 5, 1e-12).unwrap();
        let bil = factory::bilateral_shift();
        let w = crate::operators::equal_on_window(res.extended.op(0, 0), bil.op(0, 0), 5, 0.0).unwrap();
        assert!(w.equal);
        let rep = verify_extension(&res, 5, 3, 1e-12).unwrap();
        assert!(rep.passed, "{:?}", summaries(&rep));
    }

    #[test]
    fn bishift_extension_passes_everything() {
        let res = extend_doubly_twisted_isometries(&factory::polydisc(2), 4, 1e-12).unwrap();
        assert_eq!(res.phi_coords, vec![0, 1]);
        let rep = verify_extension(&res, 4, 3, 1e-12).unwrap();
        assert!(rep.passed, "{:?}", summaries(&rep));
    }

    #[test]
    fn doubly_noncommuting_pair_keeps_its_twist() {
        let t = factory::doubly_noncommuting(c(0.0, 1.0)).unwrap();
        let res = extend_doubly_twisted_isometries(&t, 4, 1e-12).unwrap();
        let rep = verify_extension(&res, 4, 3, 1e-12).unwrap();
        assert!(rep.passed, "{:?}", summaries(&rep));
    }

    #[test]
    fn corrupted_z_keeps_restriction_but_breaks_relations() {
        let t = factory::doubly_noncommuting(c(0.0, 1.0)).unwrap();
        let res = extend_doubly_twisted_isometries(&t, 4, 1e-12).unwrap();
        let bad = corrupt_z_exponent(&res, 1, 0).unwrap();
        let rep = verify_extension(&bad, 4, 2, 1e-12).unwrap();
        assert!(rep.check("restriction").unwrap().passed);
        assert!(rep.unitary);
        assert!(!rep.twisted);
        assert!(!rep.check("limit_formula").unwrap().passed);
    }

    #[test]
    fn commutative_lattice_extension_of_fock_models() {
        for a in [vec![0], vec![0, 1]] {
            let fm = factory::make_fock_model(2, &a, &FockParams::default()).unwrap();
            let res = extend_commutative_lattice(&fm).unwrap();
            let rep = verify_extension(&res, 3, 3, 1e-10).unwrap();
            assert!(rep.passed, "{a:?}: {:?}", summaries(&rep));
        }
    }

    #[test]
    fn unitary_tuples_are_returned_unchanged() {
        let t = factory::c3_permutation();
        let res = extend_doubly_twisted_isometries(&t, 0, 1e-12).unwrap();
        assert_eq!(res.kind, ExtensionKind::Unchanged);
        assert!(verify_extension(&res, 0, 2, 1e-12).unwrap().passed);
    }

    #[test]
    fn non_doubly_twisted_input_is_rejected() {
        let t = factory::bilateral_counterexample();
        assert!(matches!(extend_doubly_twisted_isometries(&t, 4, 1e-12), Err(Error::Hypothesis(_))));
    }
}
