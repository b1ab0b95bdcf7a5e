//! The operator-spec file: a JSON document describing one twisted tuple.
//!
//! Matrices are declared once under `matrices` and referenced by name from
//! operators, twists and `σ`. Complex entries are always `[re, im]`.
//! [`to_canonical_string`] after [`parse`] is idempotent: names, key order and
//! float formatting are fixed by the writer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, Mat, C64, ONE};
use crate::operators::{Affine, Bounds, Factor, LatticeOperator, LatticeSpace, Op, Space, Term};
use crate::representation::{scalar_sigma, AlgebraKind, AlgebraSpec, Automorphism, TwistedTuple};
use crate::tensorspace::FiberSpec;

pub const SCHEMA: &str = "twisted-tuple/1";

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Dense,
    LatticeUnsigned,
    LatticeSigned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentJson {
    pub coeffs: Vec<i64>,
    #[serde(rename = "const")]
    pub constant: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorJson {
    pub name: String,
    /// Present for powers `name^{coeffs·n + const}`; absent for constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub offset: Vec<i64>,
    #[serde(default)]
    pub factors: Vec<FactorJson>,
    /// Scalar coefficient; `[1, 0]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Bounds>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OpJson {
    Matrix { matrix: String },
    Terms { terms: Vec<TermJson> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairOp {
    pub pair: [usize; 2],
    pub op: OpJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipJson {
    pub pair: [usize; 2],
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AutomorphismJson {
    Permutation(Vec<usize>),
    Conjugation(MatrixJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    /// `scalar`, `diagonal` or `matrix`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub automorphisms: Option<Vec<AutomorphismJson>>,
}

/// The on-disk document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub schema: String,
    pub rank: usize,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<Bounds>>,
    pub fiber_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flips: Vec<FlipJson>,
    #[serde(default)]
    pub matrices: BTreeMap<String, MatrixJson>,
    pub coords: Vec<Vec<OpJson>>,
    #[serde(default)]
    pub twists: Vec<PairOp>,
    pub algebra: AlgebraJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<OpJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

/// A parsed spec: the tuple plus the optional subset and window hints.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub tuple: TwistedTuple,
    pub subset: Option<Vec<usize>>,
    pub window: Option<usize>,
}

fn schema(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("{path}: {msg}"))
}

pub fn matrix_to_json(m: &Mat) -> MatrixJson {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

pub fn matrix_from_json(path: &str, rows: &MatrixJson) -> Result<Mat> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if nr == 0 || nc == 0 {
        return Err(schema(path, "empty matrix"));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(schema(path, "ragged matrix rows"));
    }
    Ok(Mat::from_fn(nr, nc, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    file: &'a SpecFile,
    cache: BTreeMap<String, Mat>,
}

impl Reader<'_> {
    fn matrix(&mut self, path: &str, name: &str) -> Result<Mat> {
        if let Some(m) = self.cache.get(name) {
            return Ok(m.clone());
        }
        let raw = self.file.matrices.get(name).ok_or_else(|| schema(path, format!("unknown matrix '{name}'")))?;
        let m = matrix_from_json(&format!("matrices.{name}"), raw)?;
        self.cache.insert(name.to_string(), m.clone());
        Ok(m)
    }

    fn op(&mut self, path: &str, space: &Space, spec: &OpJson) -> Result<Op> {
        match (space, spec) {
            (Space::Dense(n), OpJson::Matrix { matrix }) => {
                let m = self.matrix(path, matrix)?;
                if m.shape() != (*n, *n) {
                    return Err(schema(
                        path,
                        format!("matrix '{matrix}' is {}x{}, space has dimension {n}", m.nrows(), m.ncols()),
                    ));
                }
                Op::dense(m)
            }
            (Space::Lattice(l), OpJson::Terms { terms }) => {
                let mut out = vec![];
                for (ti, t) in terms.iter().enumerate() {
                    let tp = format!("{path}.terms[{ti}]");
                    if t.offset.len() != l.rank {
                        return Err(schema(
                            &tp,
                            format!("offset has length {}, lattice rank is {}", t.offset.len(), l.rank),
                        ));
                    }
                    let mut factors = vec![];
                    for (fi, f) in t.factors.iter().enumerate() {
                        let fp = format!("{tp}.factors[{fi}]");
                        let m = self.matrix(&fp, &f.name)?;
                        if m.shape() != (l.fiber, l.fiber) {
                            return Err(schema(&fp, format!("matrix '{}' does not match fiber {}", f.name, l.fiber)));
                        }
                        factors.push(match &f.exponent {
                            Some(e) => {
                                if e.coeffs.len() != l.rank {
                                    return Err(schema(&fp, "exponent coefficient length differs from lattice rank"));
                                }
                                Factor::power(&f.name, m, Affine { coeffs: e.coeffs.clone(), constant: e.constant })
                                    .map_err(|e| schema(&fp, e))?
                            }
                            None => Factor::named_constant(&f.name, m),
                        });
                    }
                    let mut term = Term::new(t.offset.clone(), factors);
                    if let Some([re, im]) = t.constant {
                        term = term.with_coeff(C64::new(re, im));
                    }
                    if let Some(d) = &t.domain {
                        if d.rank() != l.rank {
                            return Err(schema(&tp, "domain rank differs from lattice rank"));
                        }
                        term = term.with_domain(d.clone());
                    }
                    out.push(term);
                }
                Ok(Op::Lattice(LatticeOperator::new(l.clone(), out).map_err(|e| schema(path, e))?))
            }
            (Space::Dense(_), _) => Err(schema(path, "dense backend expects {\"matrix\": name}")),
            (Space::Lattice(_), _) => Err(schema(path, "lattice backend expects {\"terms\": [...]}")),
        }
    }
}

fn algebra_from_json(a: &AlgebraJson) -> Result<AlgebraSpec> {
    let kind = match (a.kind.as_str(), a.dim) {
        ("scalar", None | Some(1)) => AlgebraKind::Scalar,
        ("diagonal", Some(dim)) => AlgebraKind::Diagonal { dim },
        ("matrix", Some(dim)) => AlgebraKind::Matrix { dim },
        ("diagonal" | "matrix", None) => return Err(schema("algebra.dim", "required for this kind")),
        (k, _) => return Err(schema("algebra.kind", format!("unknown algebra kind '{k}'"))),
    };
    let automorphisms = match &a.automorphisms {
        None => None,
        Some(list) => Some(
            list.iter()
                .enumerate()
                .map(|(i, x)| match x {
                    AutomorphismJson::Permutation(p) => Ok(Automorphism::Permutation(p.clone())),
                    AutomorphismJson::Conjugation(m) => {
                        Ok(Automorphism::Conjugation(matrix_from_json(&format!("algebra.automorphisms[{i}]"), m)?))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(AlgebraSpec { kind, automorphisms })
}

/// Build the tuple described by a document.
pub fn load(file: &SpecFile) -> Result<LoadedSpec> {
    if file.schema != SCHEMA {
        return Err(schema("schema", format!("expected '{SCHEMA}', got '{}'", file.schema)));
    }
    let k = file.rank;
    if file.fiber_dims.len() != k {
        return Err(schema("fiber_dims", format!("expected {k} entries, got {}", file.fiber_dims.len())));
    }
    if file.coords.len() != k {
        return Err(schema("coords", format!("expected {k} coordinates, got {}", file.coords.len())));
    }
    let space = match file.backend {
        Backend::Dense => {
            let n = file.dim.ok_or_else(|| schema("dim", "required for the dense backend"))?;
            Space::Dense(n)
        }
        Backend::LatticeUnsigned | Backend::LatticeSigned => {
            let r = file.lattice_rank.ok_or_else(|| schema("lattice_rank", "required for lattice backends"))?;
            let d = file.fiber.ok_or_else(|| schema("fiber", "required for lattice backends"))?;
            let l = LatticeSpace::new(r, d, file.backend == Backend::LatticeSigned)
                .with_support(file.support.clone().unwrap_or_default())
                .map_err(|e| schema("support", e))?;
            Space::Lattice(l)
        }
    };
    let mut fibers = FiberSpec::coordinate_swaps(file.fiber_dims.clone());
    for (n, f) in file.flips.iter().enumerate() {
        let path = format!("flips[{n}]");
        let m = matrix_from_json(&path, &f.matrix)?;
        fibers.set_flip(f.pair[0], f.pair[1], m).map_err(|e| schema(&path, e))?;
    }
    let algebra = algebra_from_json(&file.algebra)?;
    let mut rd = Reader { file, cache: BTreeMap::new() };
    let mut ops = vec![];
    for (i, row) in file.coords.iter().enumerate() {
        if row.len() != file.fiber_dims[i] {
            return Err(schema(
                &format!("coords[{i}]"),
                format!("expected {} operators, got {}", file.fiber_dims[i], row.len()),
            ));
        }
        ops.push(
            row.iter()
                .enumerate()
                .map(|(a, o)| rd.op(&format!("coords[{i}][{a}]"), &space, o))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut twists = BTreeMap::new();
    for (n, p) in file.twists.iter().enumerate() {
        let path = format!("twists[{n}]");
        let [i, j] = p.pair;
        if i >= j || j >= k {
            return Err(schema(&path, format!("pair ({i},{j}) must satisfy i < j < {k}")));
        }
        twists.insert((i, j), rd.op(&format!("{path}.op"), &space, &p.op)?);
    }
    for i in 0..k {
        for j in i + 1..k {
            twists.entry((i, j)).or_insert_with(|| Op::identity(&space));
        }
    }
    let sigma = match &file.sigma {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(x, o)| rd.op(&format!("sigma[{x}]"), &space, o))
            .collect::<Result<Vec<_>>>()?,
        None if algebra.kind == AlgebraKind::Scalar => scalar_sigma(&space),
        None => return Err(schema("sigma", "required for non-scalar algebras")),
    };
    if let Some(a) = &file.subset {
        if a.iter().any(|&x| x >= k) {
            return Err(schema("subset", format!("indices must be below {k}")));
        }
    }
    let tuple = TwistedTuple::new(fibers, algebra, ops, twists, sigma).map_err(|e| match e {
        Error::Schema(_) => e,
        other => schema("tuple", other),
    })?;
    Ok(LoadedSpec { tuple, subset: file.subset.clone(), window: file.window })
}

pub fn parse(text: &str) -> Result<LoadedSpec> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| schema("document", e))?;
    load(&file)
}

pub fn read_path(path: &str) -> Result<LoadedSpec> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        s
    } else {
        std::fs::read_to_string(path)?
    };
    parse(&text)
}

// ---------------------------------------------------------------- writing

/// Assigns stable names to matrices: declared names are kept, clashes get a
/// `~n` suffix, anonymous constants become `m0`, `m1`, ….
#[derive(Default)]
struct Writer {
    matrices: BTreeMap<String, Mat>,
    anon: usize,
}

impl Writer {
    fn register(&mut self, name: Option<&str>, m: &Mat) -> String {
        if let Some(base) = name {
            let mut candidate = base.to_string();
            let mut n = 1;
            loop {
                match self.matrices.get(&candidate) {
                    None => {
                        self.matrices.insert(candidate.clone(), m.clone());
                        return candidate;
                    }
                    Some(existing) if existing.shape() == m.shape() && max_abs_diff(existing, m) == 0.0 => {
                        return candidate
                    }
                    Some(_) => {
                        candidate = format!("{base}~{n}");
                        n += 1;
                    }
                }
            }
        }
        if let Some((k, _)) = self.matrices.iter().find(|(k, v)| {
            k.starts_with('m') && k[1..].parse::<usize>().is_ok() && v.shape() == m.shape() && max_abs_diff(v, m) == 0.0
        }) {
            return k.clone();
        }
        loop {
            let candidate = format!("m{}", self.anon);
            self.anon += 1;
            if !self.matrices.contains_key(&candidate) {
                self.matrices.insert(candidate.clone(), m.clone());
                return candidate;
            }
        }
    }

    fn op(&mut self, op: &Op) -> OpJson {
        match op {
            Op::Dense(d) => OpJson::Matrix { matrix: self.register(None, &d.matrix) },
            Op::Lattice(l) => OpJson::Terms {
                terms: l
                    .terms
                    .iter()
                    .map(|t| TermJson {
                        offset: t.offset.clone(),
                        factors: t
                            .gen
                            .factors
                            .iter()
                            .map(|f| match f {
                                Factor::Power { name, base, exponent, .. } => FactorJson {
                                    name: self.register(Some(name), base),
                                    exponent: Some(ExponentJson {
                                        coeffs: exponent.coeffs.clone(),
                                        constant: exponent.constant,
                                    }),
                                },
                                Factor::Const { name, matrix } => {
                                    FactorJson { name: self.register(name.as_deref(), matrix), exponent: None }
                                }
                            })
                            .collect(),
                        constant: (t.coeff != ONE).then_some([t.coeff.re, t.coeff.im]),
                        domain: (!t.domain.is_unbounded()).then(|| t.domain.clone()),
                    })
                    .collect(),
            },
        }
    }
}

/// Describe a tuple as a document.
pub fn to_spec(t: &TwistedTuple, subset: Option<Vec<usize>>, window: Option<usize>) -> SpecFile {
    let k = t.k();
    let mut w = Writer::default();
    let (backend, dim, lattice_rank, fiber, support) = match &t.space {
        Space::Dense(n) => (Backend::Dense, Some(*n), None, None, None),
        Space::Lattice(l) => (
            if l.signed { Backend::LatticeSigned } else { Backend::LatticeUnsigned },
            None,
            Some(l.rank),
            Some(l.fiber),
            (!l.support.is_empty()).then(|| l.support.clone()),
        ),
    };
    let mut flips = vec![];
    for i in 0..k {
        for j in i + 1..k {
            let f = t.fibers.flip(i, j).expect("valid pair");
            flips.push(FlipJson { pair: [i, j], matrix: matrix_to_json(f) });
        }
    }
    let coords = t.ops.iter().map(|row| row.iter().map(|o| w.op(o)).collect()).collect();
    let twists =
        t.twists.iter().filter(|((i, j), _)| i < j).map(|(&(i, j), u)| PairOp { pair: [i, j], op: w.op(u) }).collect();
    let scalar = t.algebra.kind == AlgebraKind::Scalar;
    let sigma = (!scalar).then(|| t.sigma.iter().map(|s| w.op(s)).collect());
    let algebra = AlgebraJson {
        kind: match t.algebra.kind {
            AlgebraKind::Scalar => "scalar",
            AlgebraKind::Diagonal { .. } => "diagonal",
            AlgebraKind::Matrix { .. } => "matrix",
        }
        .into(),
        dim: match t.algebra.kind {
            AlgebraKind::Scalar => None,
            AlgebraKind::Diagonal { dim } | AlgebraKind::Matrix { dim } => Some(dim),
        },
        automorphisms: t.algebra.automorphisms.as_ref().map(|list| {
            list.iter()
                .map(|a| match a {
                    Automorphism::Permutation(p) => AutomorphismJson::Permutation(p.clone()),
                    Automorphism::Conjugation(u) => AutomorphismJson::Conjugation(matrix_to_json(u)),
                })
                .collect()
        }),
    };
    SpecFile {
        schema: SCHEMA.into(),
        rank: k,
        backend,
        dim,
        lattice_rank,
        fiber,
        support,
        fiber_dims: t.fibers.dims.clone(),
        flips,
        matrices: w.matrices.iter().map(|(k, m)| (k.clone(), matrix_to_json(m))).collect(),
        coords,
        twists,
        algebra,
        sigma,
        subset,
        window,
    }
}

pub fn to_canonical_string(t: &TwistedTuple, subset: Option<Vec<usize>>, window: Option<usize>) -> String {
    let mut s = serde_json::to_string_pretty(&to_spec(t, subset, window)).expect("spec serializes");
    s.push('\n');
    s
}

/// Parse and re-emit in canonical form.
pub fn canonicalize(text: &str) -> Result<String> {
    let loaded = parse(text)?;
    Ok(to_canonical_string(&loaded.tuple, loaded.subset, loaded.window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{self, FockParams};
    use crate::linalg::c;
    use crate::operators::equal_on_window;

    fn assert_same_tuple(a: &TwistedTuple, b: &TwistedTuple, n: usize) {
        let la = a.labelled_ops();
        let lb = b.labelled_ops();
        assert_eq!(la.len(), lb.len());
        for ((na, oa), (nb, ob)) in la.iter().zip(&lb) {
            assert_eq!(na, nb);
            assert!(equal_on_window(oa, ob, n, 0.0).unwrap().equal, "{na} differs");
        }
        assert_eq!(a.fibers, b.fibers);
        assert_eq!(a.algebra, b.algebra);
    }

    #[test]
    fn every_named_example_round_trips_byte_for_byte() {
        for name in factory::EXAMPLE_NAMES {
            let t = factory::make(name, 7).unwrap();
            let s1 = to_canonical_string(&t, None, None);
            let back = parse(&s1).unwrap();
            assert_same_tuple(&t, &back.tuple, 2);
            let s2 = to_canonical_string(&back.tuple, None, None);
            assert_eq!(s1, s2, "{name}");
        }
    }

    #[test]
    fn fock_models_round_trip() {
        let fm =
            factory::make_fock_model(3, &[0, 2], &FockParams { algebra_dim: 2, core_dim: 3, ..Default::default() })
                .unwrap();
        let s1 = to_canonical_string(&fm.tuple, Some(vec![0, 2]), Some(4));
        let back = parse(&s1).unwrap();
        assert_eq!(back.subset, Some(vec![0, 2]));
        assert_eq!(back.window, Some(4));
        assert_eq!(canonicalize(&s1).unwrap(), s1);
    }

    #[test]
    fn missing_matrix_reports_its_path() {
        let t = factory::doubly_noncommuting(c(0.0, 1.0)).unwrap();
        let mut spec = to_spec(&t, None, None);
        spec.matrices.remove("z");
        let text = serde_json::to_string(&spec).unwrap();
        match parse(&text) {
            Err(Error::Schema(msg)) => {
                assert!(msg.starts_with("twists[0].op.terms[0].factors[0]"), "{msg}")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors_are_schema_errors() {
        let t = factory::c3_permutation();
        let mut spec = to_spec(&t, None, None);
        spec.rank = 3;
        assert!(matches!(parse(&serde_json::to_string(&spec).unwrap()), Err(Error::Schema(_))));
        assert!(matches!(parse("{ not json"), Err(Error::Schema(_))));
        let mut spec = to_spec(&t, None, None);
        spec.schema = "twisted-tuple/0".into();
        let e = parse(&serde_json::to_string(&spec).unwrap()).unwrap_err();
        assert!(e.is_input_error());
    }

    #[test]
    fn hand_written_unilateral_shift() {
        let text = r#"{
            "schema": "twisted-tuple/1", "rank": 1, "backend": "lattice-unsigned",
            "lattice_rank": 1, "fiber": 1, "fiber_dims": [1],
            "coords": [[{"terms": [{"offset": [1]}]}]],
            "algebra": {"kind": "scalar"}
        }"#;
        let t = parse(text).unwrap().tuple;
        let u = factory::unilateral_shift();
        assert_same_tuple(&t, &u, 4);
    }
}
