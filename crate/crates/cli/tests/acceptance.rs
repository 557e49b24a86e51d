#![allow(clippy::needless_range_loop, clippy::type_complexity)]

//! Acceptance suite over the standard corpus. Prints one line per criterion
//! and exits non-zero when any criterion fails. Every comparison is exact.
//!
//! The oracles here are written against the raw structure constants and do
//! not reuse the library validators they are meant to confirm.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_traits::{One, Zero};
use rand::Rng;

use dlie_core::conncat::{
    annihilator_ideal, build_end_extension, c_functor, c_functor_on, curvature_identity_check,
    lpsi_connection_space, r_functor, split_extension, validate_connection, validate_lpsi, Connection,
    LPsiConnection, SplitStatus,
};
use dlie_core::corpus;
use dlie_core::dlie::{
    build_d1, build_d1_with, canonical_quotient, canonical_section, check_lr_isomorphism, classify_maps_d1,
    free_basis, functor_f, functor_f_unchecked, reconstruct, section_change_witness, shifted_section,
    splitting_data, validate_dlie, validate_dlie_map, BracketConvention, DLieAlgebra,
};
use dlie_core::exactlin::{
    axpy, is_zero_vec, kernel, q, rank, solve_affine, unit_vec, vec_add, vec_sub, zero_vec, QuotientMap,
    RationalMatrix, Subspace, Q,
};
use dlie_core::finalg::{
    build_principal_parts, compute_derivations, kahler_differentials_dim, AModule, Derivations, FiniteAlgebra,
};
use dlie_core::lierinehart::{
    coboundary_solve, cochain_space, is_cocycle, lr_differential, nonzero_classes, Cochain, FlatConnectionModule,
    LieRinehartAlgebra,
};

type Verdict = Result<String, String>;

trait Ctx<T> {
    fn ctx(self, what: &str) -> Result<T, String>;
}

impl<T, E: Display> Ctx<T> for Result<T, E> {
    fn ctx(self, what: &str) -> Result<T, String> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

// ---------------------------------------------------------------- corpus

struct Case {
    name: String,
    alg: FiniteAlgebra,
    der: Derivations,
    der_lr: LieRinehartAlgebra,
    lrs: Vec<(String, LieRinehartAlgebra)>,
    cocycles: Vec<(String, Cochain)>,
    /// The seven-dimensional algebra with nonzero classes; only the
    /// derivation algebra is used over it.
    large: bool,
}

impl Case {
    fn trivial(&self) -> FlatConnectionModule {
        FlatConnectionModule::trivial(&self.der_lr)
    }
}

fn build_corpus() -> Result<Vec<Case>, String> {
    let mut algebras: Vec<(String, FiniteAlgebra, bool)> =
        corpus::algebras().into_iter().map(|(n, a)| (n.to_string(), a, false)).collect();
    algebras.push(("Q[x,y]/(x^2y,xy^2,x^3-y^3)".into(), corpus::nonzero_class_algebra(), true));
    let mut out = Vec::new();
    for (seed, (name, alg, large)) in algebras.into_iter().enumerate() {
        let der = compute_derivations(&alg);
        let der_lr = LieRinehartAlgebra::derivations(&alg);
        let trivial = FlatConnectionModule::trivial(&der_lr);
        let mut rng = corpus::rng(1000 + seed as u64);
        let mut cocycles = vec![("0".to_string(), Cochain::zero(2, der_lr.dim(), alg.dim()))];
        for k in 0..2 {
            let c = corpus::random_coboundary(&der_lr, &mut rng).ctx("random coboundary")?;
            cocycles.push((format!("dphi{k}"), c));
        }
        for (i, c) in nonzero_classes(&der_lr, &trivial).ctx("nonzero classes")?.into_iter().enumerate() {
            cocycles.push((format!("class{i}"), c));
        }
        let lrs = if large { vec![("Der".to_string(), der_lr.clone())] } else { corpus::lie_rinehart_algebras(&alg) };
        out.push(Case { name, alg, der, der_lr, lrs, cocycles, large });
    }
    Ok(out)
}

// ---------------------------------------------------------------- raw helpers

fn bracket(b: &[Vec<Vec<Q>>], u: &[Q], v: &[Q]) -> Vec<Q> {
    let mut out = zero_vec(b.len());
    for (i, x) in u.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in v.iter().enumerate() {
            if !y.is_zero() {
                axpy(&mut out, &(x * y), &b[i][j]);
            }
        }
    }
    out
}

fn lin(ms: &[RationalMatrix], c: &[Q], d: usize) -> RationalMatrix {
    let mut out = RationalMatrix::zeros(d, d);
    for (m, x) in ms.iter().zip(c) {
        if !x.is_zero() {
            out = out.add(&m.scale(x));
        }
    }
    out
}

fn trace(m: &RationalMatrix) -> Q {
    (0..m.rows()).fold(Q::zero(), |s, i| s + &m[(i, i)])
}

fn jacobi_failure(b: &[Vec<Vec<Q>>]) -> Option<[usize; 3]> {
    let m = b.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let mut s = bracket(b, &unit_vec(m, i), &b[j][k]);
                axpy(&mut s, &Q::one(), &bracket(b, &unit_vec(m, j), &b[k][i]));
                axpy(&mut s, &Q::one(), &bracket(b, &unit_vec(m, k), &b[i][j]));
                if !is_zero_vec(&s) {
                    return Some([i, j, k]);
                }
            }
        }
    }
    None
}

/// The D-Lie axioms on basis elements, straight from the structure data.
fn dlie_axioms(t: &DLieAlgebra) -> Result<(), String> {
    let (n, big) = (t.alg_dim(), t.dim());
    let e = |i: usize| unit_vec(big, i);
    let left = &t.carrier.action;
    let right = t.carrier.right_action.as_ref().unwrap_or(left);
    let act = |a: &[Q], v: &[Q]| lin(left, a, big).mul_vec(v);
    let pi = |v: &[Q]| lin(&t.anchor_pi, v, n);
    for i in 0..big {
        for j in 0..big {
            ensure!(is_zero_vec(&vec_add(&t.bracket[i][j], &t.bracket[j][i])), "bracket not alternating at ({i},{j})");
        }
    }
    if let Some([i, j, k]) = jacobi_failure(&t.bracket) {
        return Err(format!("Jacobi fails at ({i},{j},{k})"));
    }
    ensure!(pi(&t.central).is_zero(), "anchor of D is nonzero");
    for i in 0..big {
        ensure!(is_zero_vec(&bracket(&t.bracket, &t.central, &e(i))), "D is not central against e{i}");
        for a in 0..n {
            let pia = t.anchor_pi[i].column(a);
            for j in 0..big {
                let lhs = bracket(&t.bracket, &e(i), &left[a].mul_vec(&e(j)));
                let rhs = vec_add(&left[a].mul_vec(&t.bracket[i][j]), &act(&pia, &e(j)));
                ensure!(lhs == rhs, "anchor law fails at (e{i}, a{a}, e{j})");
            }
            let da = vec_sub(&right[a].mul_vec(&e(i)), &left[a].mul_vec(&e(i)));
            ensure!(da == act(&pia, &t.central), "da.u differs from pi(u)(a)D at (a{a}, e{i})");
            let scaled = t.algebra.basis_mult(a).mul(&t.anchor_pi[i]);
            ensure!(pi(&left[a].mul_vec(&e(i))) == scaled, "anchor is not A-linear at (a{a}, e{i})");
        }
        for j in 0..big {
            ensure!(
                pi(&t.bracket[i][j]) == t.anchor_pi[i].commutator(&t.anchor_pi[j]),
                "anchor does not preserve the bracket at ({i},{j})"
            );
        }
    }
    Ok(())
}

/// `f^α(x,y) = f(α x, α y)`, reading `α` off the anchor matrices.
fn pull_back(l: &LieRinehartAlgebra, der: &Derivations, f: &Cochain) -> Result<Cochain, String> {
    let coords = l
        .anchor
        .iter()
        .map(|m| der.coords(m).ok_or_else(|| "anchor outside Der(A)".to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Cochain::from_fn(2, l.dim(), f.mdim, |t| f.eval(&[&coords[t[0]], &coords[t[1]]])))
}

/// `(dφ)(x,y) = ∇_x φ(y) − ∇_y φ(x) − φ([x,y])` on basis pairs.
fn d_one(l: &LieRinehartAlgebra, nabla: &[RationalMatrix], phi: &Cochain) -> Cochain {
    Cochain::from_fn(2, l.dim(), phi.mdim, |t| {
        let (i, j) = (t[0], t[1]);
        let mut v = nabla[i].mul_vec(&phi.get(&[j]));
        axpy(&mut v, &-Q::one(), &nabla[j].mul_vec(&phi.get(&[i])));
        axpy(&mut v, &-Q::one(), &phi.eval(&[&l.bracket[i][j]]));
        v
    })
}

/// Solves `residual(y) = 0` for a residual that is affine in `y`, after
/// confirming affineness at a random point. Exhaustive over all `y`.
fn affine_zero(
    unknowns: usize,
    residual: impl Fn(&[Q]) -> Vec<Q>,
    rng: &mut impl Rng,
) -> Result<Option<Vec<Q>>, String> {
    let f0 = residual(&zero_vec(unknowns));
    let cols: Vec<Vec<Q>> = (0..unknowns).map(|k| vec_sub(&residual(&unit_vec(unknowns, k)), &f0)).collect();
    let y = corpus::random_vec(unknowns, rng);
    let mut predicted = f0.clone();
    for (yk, c) in y.iter().zip(&cols) {
        axpy(&mut predicted, yk, c);
    }
    ensure!(residual(&y) == predicted, "residual is not affine in the unknowns");
    let mut seen = BTreeSet::new();
    let (mut rows, mut rhs) = (Vec::new(), Vec::new());
    for r in 0..f0.len() {
        let row: Vec<Q> = cols.iter().map(|c| c[r].clone()).collect();
        let b = -f0[r].clone();
        if is_zero_vec(&row) {
            if !b.is_zero() {
                return Ok(None);
            }
            continue;
        }
        if seen.insert((row.clone(), b.clone())) {
            rows.push(row);
            rhs.push(b);
        }
    }
    if rows.is_empty() {
        return Ok(Some(zero_vec(unknowns)));
    }
    let m = RationalMatrix::from_rows(unknowns, rows).ctx("system")?;
    Ok(solve_affine(&m, &rhs).ctx("solve")?.map(|s| s.particular))
}

/// Nilradical of `A` as the kernel of the trace form (characteristic zero).
fn radical(alg: &FiniteAlgebra) -> Vec<Vec<Q>> {
    let n = alg.dim();
    let rows = (0..n)
        .map(|a| (0..n).map(|b| trace(&alg.basis_mult(a).mul(alg.basis_mult(b)))).collect())
        .collect();
    kernel(&RationalMatrix::from_rows(n, rows).expect("square"))
}

fn induced_trace(qm: &QuotientMap, m: &RationalMatrix) -> Q {
    (0..qm.dim()).fold(Q::zero(), |s, k| s + &qm.project(&m.mul_vec(&qm.lift(&unit_vec(qm.dim(), k))))[k])
}

/// `M` is free of rank `r` iff `dim M = r·dim A` and `a` has trace
/// `r·tr(a | A/rad)` on `M/rad·M` for every `a`.
fn is_free(alg: &FiniteAlgebra, m: &AModule) -> bool {
    let (n, d) = (alg.dim(), m.dim);
    if d % n != 0 {
        return false;
    }
    let r = Q::from_integer(((d / n) as i64).into());
    let rad = radical(alg);
    let gens: Vec<Vec<Q>> =
        rad.iter().flat_map(|a| (0..d).map(move |k| (a, k))).map(|(a, k)| lin(&m.action, a, d).column(k)).collect();
    let qm = QuotientMap::new(Subspace::span(d, &gens));
    let qa = QuotientMap::new(Subspace::span(n, &rad));
    (0..n).all(|a| induced_trace(&qm, &m.action[a]) == &r * induced_trace(&qa, alg.basis_mult(a)))
}

fn end_a_basis(e: &AModule) -> Vec<RationalMatrix> {
    let d = e.dim;
    let cols: Vec<Vec<Q>> = (0..d * d)
        .map(|k| {
            let x = RationalMatrix::from_vec(d, d, unit_vec(d * d, k));
            e.action.iter().flat_map(|a| x.commutator(a).to_vec()).collect()
        })
        .collect();
    let rows = e.action.len() * d * d;
    if rows == 0 {
        return (0..d * d).map(|k| RationalMatrix::from_vec(d, d, unit_vec(d * d, k))).collect();
    }
    kernel(&RationalMatrix::from_columns(rows, &cols).expect("dims"))
        .into_iter()
        .map(|v| RationalMatrix::from_vec(d, d, v))
        .collect()
}

/// `[ρu, ρv] − ρ[u,v]` on every basis pair, from the raw operators.
fn raw_curvature(t: &DLieAlgebra, rho: &[RationalMatrix], d: usize) -> Vec<Vec<RationalMatrix>> {
    let big = t.dim();
    (0..big)
        .map(|s| (0..big).map(|u| rho[s].commutator(&rho[u]).sub(&lin(rho, &t.bracket[s][u], d))).collect())
        .collect()
}

fn twisted_lr_part(t: &DLieAlgebra, l: &LieRinehartAlgebra) -> RationalMatrix {
    let (n, m) = (t.alg_dim(), l.dim());
    let cols: Vec<Vec<Q>> = (0..m).map(|i| unit_vec(n + m, n + i)).collect();
    RationalMatrix::from_columns(n + m, &cols).expect("dims")
}

// ---------------------------------------------------------------- criteria

fn structure_validity(cases: &[Case]) -> Verdict {
    let mut checked = 0;
    let mut negatives = 0;
    for c in cases {
        let trivial = c.trivial();
        for (fname, f) in &c.cocycles {
            ensure!(is_cocycle(&c.der_lr, &trivial, f).ctx("is_cocycle")?.is_cocycle, "{}: {fname} is not a cocycle", c.name);
            let d1 = build_d1(&c.alg, f).ctx("build_d1")?;
            let report = validate_dlie(&d1);
            ensure!(report.is_valid(), "{}: D1({fname}) invalid: {report}", c.name);
            dlie_axioms(&d1).map_err(|e| format!("{}: D1({fname}): {e}", c.name))?;
            checked += 1;
            for (lname, l) in &c.lrs {
                let t = functor_f(l, f).ctx("functor_f")?;
                let report = validate_dlie(&t);
                ensure!(report.is_valid(), "{}: F({lname},{fname}) invalid: {report}", c.name);
                dlie_axioms(&t).map_err(|e| format!("{}: F({lname},{fname}): {e}", c.name))?;
                checked += 1;
            }
        }
        // non-cocycles: random 2-cochains with nonzero differential
        let mut rng = corpus::rng(7);
        for _ in 0..4 {
            let f = corpus::random_cochain(&c.der_lr, &trivial, 2, &mut rng);
            let check = is_cocycle(&c.der_lr, &trivial, &f).ctx("is_cocycle")?;
            if check.is_cocycle {
                continue;
            }
            ensure!(check.witness.is_some(), "{}: non-cocycle without a witness", c.name);
            ensure!(build_d1(&c.alg, &f).is_err(), "{}: build_d1 accepted a non-cocycle", c.name);
            for (what, t) in [
                ("D1", build_d1_with(&c.alg, &f, BracketConvention::Standard).ctx("build_d1_with")?),
                ("F(Der)", functor_f_unchecked(&c.der_lr, &f).ctx("functor_f_unchecked")?),
            ] {
                let report = validate_dlie(&t);
                let witness = report.violations.iter().find(|v| v.check == "jacobi");
                ensure!(report.failures("jacobi") > 0 && witness.is_some(), "{}: {what} of a non-cocycle passes Jacobi", c.name);
                ensure!(jacobi_failure(&t.bracket).is_some(), "{}: {what} of a non-cocycle satisfies Jacobi", c.name);
            }
            negatives += 1;
        }
    }
    ensure!(negatives > 0, "no non-cocycle found in the corpus");
    Ok(format!("{checked} algebras satisfy the axioms; {negatives} non-cocycles give Jacobi witnesses"))
}

fn flat_modules(c: &Case, rng: &mut impl Rng) -> Result<Vec<(String, LieRinehartAlgebra, FlatConnectionModule)>, String> {
    let mut out = Vec::new();
    for (lname, l) in &c.lrs {
        out.push((format!("{lname}/A"), l.clone(), FlatConnectionModule::trivial(l)));
        if l.dim() == c.alg.dim() && l.bracket.iter().flatten().all(|v| is_zero_vec(v)) && l.anchor.iter().all(|m| m.is_zero()) {
            // rank-one abelian with zero anchor: u ↦ x·X is flat for X ∈ End_A(E)
            for (ename, e) in corpus::modules(&c.alg) {
                let ends = end_a_basis(&e);
                let coeffs = corpus::random_vec(ends.len(), rng);
                let x = lin(&ends, &coeffs, e.dim);
                let nabla: Vec<RationalMatrix> = (0..l.dim()).map(|r| e.action[r].mul(&x)).collect();
                out.push((format!("{lname}/{ename}"), l.clone(), FlatConnectionModule::new(e, nabla).ctx("module")?));
            }
        }
    }
    for (lname, l) in &c.lrs {
        let t = functor_f(l, &c.cocycles[1].1).ctx("functor_f")?;
        let Ok(cq) = canonical_quotient(&t) else { continue };
        if let Some(basis) = free_basis(&c.alg, &cq.lr.carrier) {
            let s = canonical_section(&t, &cq, &basis).ctx("section")?;
            let sd = splitting_data(&t, &s).ctx("splitting")?;
            out.push((format!("{lname}/J"), sd.quotient.lr.clone(), sd.nabla));
        }
    }
    Ok(out)
}

fn d_squared(cases: &[Case]) -> Verdict {
    let mut pairs = 0;
    let mut cochains = 0;
    let mut rng = corpus::rng(11);
    for c in cases {
        for (name, l, m) in flat_modules(c, &mut rng)? {
            for i in 0..l.dim() {
                for j in 0..l.dim() {
                    let r = m.nabla[i].commutator(&m.nabla[j]).sub(&lin(&m.nabla, &l.bracket[i][j], m.dim()));
                    ensure!(r.is_zero(), "{}: {name} is not flat", c.name);
                }
            }
            for p in [0, 1] {
                for b in cochain_space(&l, &m, p) {
                    let db = lr_differential(&l, &m, &b).ctx("d")?;
                    let ddb = lr_differential(&l, &m, &db).ctx("d")?;
                    ensure!(ddb.is_zero(), "{}: {name}: d(d c) != 0 in degree {}", c.name, p + 2);
                    cochains += 1;
                }
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} (L, module) pairs, {cochains} basis cochains in degrees 0 and 1"))
}

/// All block-shaped maps `(a,x) ↦ (X a + Φ x, x)` from `D¹(A,g)` to
/// `D¹(A,f)`: the DLieMap conditions are affine in `(X, Φ)`.
fn exhaustive_d1_map(s: &DLieAlgebra, t: &DLieAlgebra, rng: &mut impl Rng) -> Result<Option<RationalMatrix>, String> {
    let (n, big) = (s.alg_dim(), s.dim());
    let m = big - n;
    let build = |y: &[Q]| {
        let mut phi = RationalMatrix::zeros(big, big);
        for r in 0..n {
            for col in 0..big {
                phi[(r, col)] = y[r * big + col].clone();
            }
        }
        for i in 0..m {
            phi[(n + i, n + i)] = Q::one();
        }
        phi
    };
    let residual = |y: &[Q]| -> Vec<Q> {
        let phi = build(y);
        let mut out = Vec::new();
        let sl = &s.carrier.action;
        let sr = s.carrier.right_action.as_ref().unwrap_or(sl);
        let tl = &t.carrier.action;
        let tr = t.carrier.right_action.as_ref().unwrap_or(tl);
        for a in 0..n {
            out.extend(phi.mul(&sl[a]).sub(&tl[a].mul(&phi)).to_vec());
            out.extend(phi.mul(&sr[a]).sub(&tr[a].mul(&phi)).to_vec());
        }
        for i in 0..big {
            for j in i + 1..big {
                out.extend(vec_sub(&phi.mul_vec(&s.bracket[i][j]), &bracket(&t.bracket, &phi.column(i), &phi.column(j))));
            }
            out.extend(lin(&t.anchor_pi, &phi.column(i), n).sub(&s.anchor_pi[i]).to_vec());
        }
        out.extend(vec_sub(&phi.mul_vec(&s.central), &t.central));
        out
    };
    Ok(affine_zero(n * big, residual, rng)?.map(|y| build(&y)))
}

fn map_classification(cases: &[Case]) -> Verdict {
    let mut pairs = 0;
    let mut maps = 0;
    let mut unequal = 0;
    let mut rng = corpus::rng(13);
    for c in cases {
        let trivial = c.trivial();
        for (gname, g) in &c.cocycles {
            for (fname, f) in &c.cocycles {
                let solvable = coboundary_solve(&c.der_lr, &trivial, f, g).ctx("coboundary_solve")?.is_some();
                let found = classify_maps_d1(&c.alg, g, f).ctx("classify")?;
                ensure!(found.is_some() == solvable, "{}: classify({gname},{fname}) disagrees with the solver", c.name);
                let s = build_d1(&c.alg, g).ctx("d1")?;
                let t = build_d1(&c.alg, f).ctx("d1")?;
                if let Some(cl) = &found {
                    let map = &cl.map;
                    ensure!(validate_dlie_map(&s, &t, &map.matrix).is_valid(), "{}: map {gname}->{fname} invalid", c.name);
                    let inv = map.inverse.as_ref().ok_or("missing inverse")?;
                    ensure!(validate_dlie_map(&t, &s, inv).is_valid(), "{}: inverse {fname}->{gname} invalid", c.name);
                    let id = RationalMatrix::identity(s.dim());
                    ensure!(inv.mul(&map.matrix) == id && map.matrix.mul(inv) == id, "{}: inverse does not compose to the identity", c.name);
                    maps += 1;
                }
                // the exhaustive search on nonzero-class pairs and on the small algebras
                if c.large && gname.as_str() > fname.as_str() {
                    continue;
                }
                let exhaustive = exhaustive_d1_map(&s, &t, &mut rng)?;
                ensure!(
                    exhaustive.is_some() == solvable,
                    "{}: exhaustive search over block maps {gname}->{fname} disagrees (found {})",
                    c.name,
                    exhaustive.is_some()
                );
                if let Some(phi) = exhaustive {
                    ensure!(validate_dlie_map(&s, &t, &phi).is_valid(), "{}: exhaustive candidate invalid", c.name);
                } else {
                    unequal += 1;
                }
                pairs += 1;
            }
        }
    }
    ensure!(unequal > 0, "no instance with unequal classes was searched");
    Ok(format!("{pairs} cocycle pairs searched exhaustively, {maps} maps validated, {unequal} unequal pairs with no map"))
}

fn round_trips(cases: &[Case]) -> Verdict {
    let mut quotients = 0;
    let mut rebuilt = 0;
    let mut not_free = 0;
    for c in cases {
        let mut algebras: Vec<(String, LieRinehartAlgebra, DLieAlgebra)> = Vec::new();
        for (fname, f) in &c.cocycles {
            algebras.push((format!("D1({fname})"), c.der_lr.clone(), build_d1(&c.alg, f).ctx("d1")?));
            for (lname, l) in &c.lrs {
                algebras.push((format!("F({lname},{fname})"), l.clone(), functor_f(l, f).ctx("functor_f")?));
            }
        }
        for (name, l, t) in algebras {
            let cq = canonical_quotient(&t).ctx("quotient")?;
            ensure!(cq.report.is_valid(), "{}: {name}: quotient report invalid", c.name);
            let m = cq.projection.mul(&twisted_lr_part(&t, &l));
            ensure!(m.is_square() && m.inverse().is_some(), "{}: {name}: L -> T/J is not invertible", c.name);
            let ql = &cq.lr;
            for i in 0..l.dim() {
                for a in 0..c.alg.dim() {
                    ensure!(
                        m.mul_vec(&l.carrier.action[a].column(i)) == ql.carrier.action[a].mul_vec(&m.column(i)),
                        "{}: {name}: not A-linear",
                        c.name
                    );
                }
                ensure!(lin(&ql.anchor, &m.column(i), c.alg.dim()) == l.anchor[i], "{}: {name}: anchor differs", c.name);
                for j in 0..l.dim() {
                    ensure!(
                        m.mul_vec(&l.bracket[i][j]) == bracket(&ql.bracket, &m.column(i), &m.column(j)),
                        "{}: {name}: bracket differs",
                        c.name
                    );
                }
            }
            ensure!(check_lr_isomorphism(&l, ql, &m).is_valid(), "{}: {name}: isomorphism check fails", c.name);
            quotients += 1;
            let free = is_free(&c.alg, &ql.carrier);
            match reconstruct(&t) {
                Ok(rec) => {
                    ensure!(free, "{}: {name}: reconstructed although the quotient is not free", c.name);
                    ensure!(rec.report.is_valid(), "{}: {name}: reconstruction report invalid: {}", c.name, rec.report);
                    let g_on_l = Cochain::from_fn(2, l.dim(), c.alg.dim(), |tp| rec.g.eval(&[&m.column(tp[0]), &m.column(tp[1])]));
                    let fa = pull_back(&l, &c.der, &t.base_cocycle)?;
                    let sol = coboundary_solve(&l, &FlatConnectionModule::trivial(&l), &g_on_l, &fa)
                        .ctx("coboundary_solve")?
                        .ok_or_else(|| format!("{}: {name}: g is not cohomologous to the defining cocycle", c.name))?;
                    ensure!(fa.sub(&g_on_l) == d_one(&l, &l.anchor, &sol.phi), "{}: {name}: bad cohomology witness", c.name);
                    rebuilt += 1;
                }
                Err(dlie_core::Error::Unsupported(_)) => {
                    ensure!(!free, "{}: {name}: quotient is free but reconstruction is unsupported", c.name);
                    not_free += 1;
                }
                Err(e) => return Err(format!("{}: {name}: reconstruct: {e}", c.name)),
            }
        }
    }
    ensure!(rebuilt > 0, "no free quotient in the corpus");
    Ok(format!("{quotients} quotients identified with L; {rebuilt} reconstructed, {not_free} non-free skipped"))
}

fn section_independence(cases: &[Case]) -> Verdict {
    let mut instances = 0;
    let mut comparisons = 0;
    let mut rng = corpus::rng(17);
    for c in cases.iter().filter(|c| c.alg.dim() > 1 && !c.large) {
        for (lname, l) in &c.lrs {
            let t = functor_f(l, &c.cocycles[1].1).ctx("functor_f")?;
            let cq = canonical_quotient(&t).ctx("quotient")?;
            let Some(basis) = free_basis(&c.alg, &cq.lr.carrier) else { continue };
            let s = canonical_section(&t, &cq, &basis).ctx("section")?;
            let ql = cq.lr.clone();
            let qtrivial = FlatConnectionModule::trivial(&ql);
            if cochain_space(&ql, &qtrivial, 1).is_empty() {
                continue;
            }
            let mut rho = Cochain::zero(1, ql.dim(), c.alg.dim());
            while rho.is_zero() {
                rho = corpus::random_cochain(&ql, &qtrivial, 1, &mut rng);
            }
            // a second free basis: multiply by the unit 1 + e1
            let unit = vec_add(c.alg.unit(), &c.alg.basis_element(1));
            let scaled: Vec<Vec<Q>> = basis.iter().map(|b| lin(&ql.carrier.action, &unit, ql.dim()).mul_vec(b)).collect();
            let others = [shifted_section(&t, &s, &rho), canonical_section(&t, &cq, &scaled).ctx("section")?];
            let base = splitting_data(&t, &s).ctx("splitting")?;
            let before = comparisons;
            for s2 in others.into_iter().filter(|s2| *s2 != s) {
                let other = splitting_data(&t, &s2).ctx("splitting")?;
                ensure!(other.nabla == base.nabla, "{}: F({lname}): connections differ between sections", c.name);
                let w = section_change_witness(&base, &other)
                    .ctx("witness")?
                    .ok_or_else(|| format!("{}: F({lname}): psi difference outside im d1", c.name))?;
                let diff = other.psi.sub(&base.psi);
                ensure!(d_one(&ql, &base.nabla.nabla, &w.phi) == diff, "{}: F({lname}): witness fails", c.name);
                comparisons += 1;
            }
            ensure!(comparisons > before, "{}: F({lname}): no second section", c.name);
            instances += 1;
        }
    }
    ensure!(instances >= 3, "only {instances} instances admit sections");
    Ok(format!("{instances} instances, {comparisons} section pairs with equal connections and a d1 witness"))
}

fn connection_equivalence(cases: &[Case]) -> Verdict {
    let mut lpsi_trips = 0;
    let mut conn_trips = 0;
    let mut identities = 0;
    let mut rng = corpus::rng(19);
    for c in cases.iter().filter(|c| !c.large) {
        let f = &c.cocycles[1].1;
        for (lname, l) in &c.lrs {
            let t = functor_f(l, f).ctx("functor_f")?;
            let fa = pull_back(l, &c.der, f)?;
            let n = c.alg.dim();
            for (ename, e) in corpus::modules(&c.alg) {
                let d = e.dim;
                for scale in [1, 2] {
                    let psi = RationalMatrix::identity(d).scale(&q(scale));
                    let Some(space) = lpsi_connection_space(l, &e, &psi).ctx("lpsi space")? else { continue };
                    let nb = space.point(&corpus::random_vec(space.dim(), &mut rng));
                    let what = format!("{}: ({lname},{scale}) on {ename}", c.name);
                    ensure!(validate_lpsi(&nb).is_valid(), "{what}: not an (L,psi)-connection");
                    let rho = c_functor(&nb, f).ctx("c_functor")?;
                    ensure!(validate_connection(&rho).is_valid(), "{what}: C(nabla) is not a connection");
                    ensure!(r_functor(&rho).ctx("r_functor")? == nb, "{what}: R(C(nabla)) != nabla");
                    ensure!(c_functor_on(&rho.source, &nb).ctx("c")?.rho == rho.rho, "{what}: rebuild differs");
                    lpsi_trips += 1;
                    if scale == 1 {
                        let curv = raw_curvature(&rho.source, &rho.rho, d);
                        let big = rho.source.dim();
                        let nab_curv = |i: usize, j: usize| {
                            nb.nabla[i].commutator(&nb.nabla[j]).sub(&lin(&nb.nabla, &l.bracket[i][j], d))
                        };
                        for s in 0..big {
                            for u in 0..big {
                                let expected = if s < n || u < n {
                                    RationalMatrix::zeros(d, d)
                                } else {
                                    let (i, j) = (s - n, u - n);
                                    nab_curv(i, j).sub(&lin(&e.action, &fa.eval(&[&unit_vec(l.dim(), i), &unit_vec(l.dim(), j)]), d))
                                };
                                ensure!(curv[s][u] == expected, "{what}: curvature identity fails at ({s},{u})");
                            }
                        }
                        identities += 1;
                    } else {
                        let report = curvature_identity_check(&nb, f).ctx("identity")?;
                        ensure!(report.is_valid(), "{what}: general curvature identity fails: {report}");
                    }
                }
                if let Some(conn) = corpus::random_connection(&t, &e, None, &mut rng).ctx("random connection")? {
                    let what = format!("{}: connection on F({lname}) over {ename}", c.name);
                    ensure!(validate_connection(&conn).is_valid(), "{what}: invalid");
                    let back: LPsiConnection = r_functor(&conn).ctx("r_functor")?;
                    ensure!(validate_lpsi(&back).is_valid(), "{what}: R(rho) invalid");
                    ensure!(c_functor_on(&t, &back).ctx("c")?.rho == conn.rho, "{what}: C(R(rho)) != rho");
                    conn_trips += 1;
                }
            }
        }
    }
    ensure!(lpsi_trips >= 20 && conn_trips >= 20, "only {lpsi_trips} / {conn_trips} round trips");
    Ok(format!("{lpsi_trips} + {conn_trips} round trips, curvature identity on {identities} connections"))
}

/// Rank-one connections with `ρ(D) = Id` across the corpus.
fn rank_one_connections(cases: &[Case]) -> Result<Vec<(String, Connection)>, String> {
    let mut out = Vec::new();
    let mut rng = corpus::rng(23);
    for c in cases {
        for (fname, f) in &c.cocycles {
            if c.large && fname.starts_with("dphi") {
                continue;
            }
            let d1 = build_d1(&c.alg, f).ctx("d1")?;
            out.push((format!("{}: tautological D1({fname})", c.name), Connection::tautological(&d1).ctx("taut")?));
        }
        if c.large {
            continue;
        }
        let mut e = AModule::free(&c.alg, 1);
        e.right_action = None;
        let id = RationalMatrix::identity(e.dim);
        for (fname, f) in c.cocycles.iter().take(2) {
            for (lname, l) in &c.lrs {
                if let Some(nb) = corpus::random_lpsi(l, &e, &id, &mut rng).ctx("lpsi")? {
                    out.push((format!("{}: C({lname},{fname})", c.name), c_functor(&nb, f).ctx("c_functor")?));
                }
                let t = functor_f(l, f).ctx("functor_f")?;
                if let Some(conn) = corpus::random_connection(&t, &e, Some(&id), &mut rng).ctx("random")? {
                    out.push((format!("{}: random on F({lname},{fname})", c.name), conn));
                }
            }
        }
    }
    let h = corpus::heisenberg();
    let one = RationalMatrix::identity(1);
    let line = AModule::free(&h.algebra, 1);
    out.push(("Heisenberg: unit".into(), Connection::new(h, line, vec![one, RationalMatrix::zeros(1, 1), RationalMatrix::zeros(1, 1)]).ctx("conn")?));
    Ok(out)
}

/// Whether some `P: L̃ → End_A(E)` with P-linearity and `P(D) = 0` makes
/// `ρ + P` flat, searching the whole correction space.
fn exhaustive_flat_correction(c: &Connection, rng: &mut impl Rng) -> Result<Option<Vec<RationalMatrix>>, String> {
    let t = &c.source;
    let (n, big, d) = (t.alg_dim(), t.dim(), c.dim());
    let ends = end_a_basis(&c.module);
    for a in &ends {
        for b in &ends {
            ensure!(a.commutator(b).is_zero(), "End_A(E) is not commutative");
        }
    }
    let k = ends.len();
    let build = |y: &[Q]| -> Vec<RationalMatrix> { (0..big).map(|i| lin(&ends, &y[i * k..(i + 1) * k], d)).collect() };
    let residual = |y: &[Q]| -> Vec<Q> {
        let p = build(y);
        let mut out = Vec::new();
        let left = &t.carrier.action;
        let right = t.carrier.right_action.as_ref().unwrap_or(left);
        for a in 0..n {
            for i in 0..big {
                let am = &c.module.action[a];
                out.extend(lin(&p, &left[a].column(i), d).sub(&am.mul(&p[i])).to_vec());
                out.extend(lin(&p, &right[a].column(i), d).sub(&am.mul(&p[i])).to_vec());
            }
        }
        out.extend(lin(&p, &t.central, d).to_vec());
        let shifted: Vec<RationalMatrix> = c.rho.iter().zip(&p).map(|(r, x)| r.add(x)).collect();
        let curv = raw_curvature(t, &shifted, d);
        for s in 0..big {
            for u in s + 1..big {
                out.extend(curv[s][u].to_vec());
            }
        }
        out
    };
    Ok(affine_zero(big * k, residual, rng)?.map(|y| build(&y)))
}

fn extension_splitting(cases: &[Case]) -> Verdict {
    let (mut split, mut not_split) = (0, 0);
    let mut rng = corpus::rng(29);
    for (name, c) in rank_one_connections(cases)? {
        ensure!(validate_connection(&c).is_valid(), "{name}: not a connection");
        let x = build_end_extension(&c).ctx("end extension")?;
        let report = validate_dlie(&x.dlie);
        ensure!(report.is_valid(), "{name}: End extension invalid: {report}");
        dlie_axioms(&x.dlie).map_err(|e| format!("{name}: End extension: {e}"))?;
        let flat = raw_curvature(&x.dlie, &x.flat.rho, x.flat.dim());
        ensure!(flat.iter().flatten().all(|m| m.is_zero()), "{name}: rho! is not flat");
        let decision = split_extension(&x).ctx("split")?;
        let oracle = exhaustive_flat_correction(&c, &mut rng)?;
        match (decision.status, &oracle) {
            (SplitStatus::Split, Some(_)) => {
                let p = decision.correction.as_ref().ok_or("split without a correction")?;
                let shifted: Vec<RationalMatrix> = c.rho.iter().zip(p).map(|(r, x)| r.add(x)).collect();
                ensure!(
                    raw_curvature(&c.source, &shifted, c.dim()).iter().flatten().all(|m| m.is_zero()),
                    "{name}: returned correction is not flat"
                );
                ensure!(decision.report.is_valid(), "{name}: split report invalid");
                split += 1;
            }
            (SplitStatus::NotSplit, None) => not_split += 1,
            (status, _) => {
                return Err(format!("{name}: split_extension says {status}, exhaustive search found {}", oracle.is_some()))
            }
        }
    }
    ensure!(split > 0 && not_split > 0, "only one direction exercised ({split} split, {not_split} not)");
    Ok(format!("{split} split and {not_split} non-split extensions agree with the exhaustive search"))
}

fn principal_parts(cases: &[Case]) -> Verdict {
    for c in cases {
        let n = c.alg.dim();
        let nn = n * n;
        let tensor = |a: usize, b: usize| a * n + b;
        let mu_cols: Vec<Vec<Q>> = (0..nn).map(|t| c.alg.basis_product(t / n, t % n).to_vec()).collect();
        let ideal = kernel(&RationalMatrix::from_columns(n, &mu_cols).ctx("mu")?);
        let mul = |u: &[Q], v: &[Q]| -> Vec<Q> {
            let mut out = zero_vec(nn);
            for (s, x) in u.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                for (t, y) in v.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                    let (a, b) = (c.alg.basis_product(s / n, t / n), c.alg.basis_product(s % n, t % n));
                    for (i, ai) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                        for (j, bj) in b.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                            out[tensor(i, j)] += x * y * ai * bj;
                        }
                    }
                }
            }
            out
        };
        let products: Vec<Vec<Q>> = ideal.iter().flat_map(|u| ideal.iter().map(|v| mul(u, v))).collect();
        let i2 = if products.is_empty() { 0 } else { rank(&RationalMatrix::from_rows(nn, products).ctx("I^2")?) };
        let conormal = ideal.len() - i2;
        let pp = build_principal_parts(&c.alg);
        ensure!(pp.dim == n + conormal, "{}: dim P = {} but dim A + dim I/I^2 = {}", c.name, pp.dim, n + conormal);
        ensure!(kahler_differentials_dim(&c.alg) == conormal, "{}: Kähler differentials disagree", c.name);
        match c.name.as_str() {
            "Q" => ensure!(pp.dim == 1, "dim P(Q) = {}", pp.dim),
            "Q[x]/(x^2)" => ensure!(pp.dim == 3, "dim P(Q[x]/(x^2)) = {}", pp.dim),
            _ => {}
        }
    }
    Ok(format!("dim P matches dim A + dim I/I^2 on {} algebras; P(Q) = 1, P(Q[x]/(x^2)) = 3", cases.len()))
}

fn annihilator(cases: &[Case]) -> Verdict {
    let mut conns = rank_one_connections(cases)?;
    let mut rng = corpus::rng(31);
    for c in cases.iter().filter(|c| !c.large) {
        for (lname, l) in &c.lrs {
            let t = functor_f(l, &c.cocycles[1].1).ctx("functor_f")?;
            for (ename, e) in corpus::modules(&c.alg) {
                if let Some(conn) = corpus::random_connection(&t, &e, None, &mut rng).ctx("random")? {
                    conns.push((format!("{}: F({lname}) on {ename}", c.name), conn));
                }
            }
        }
    }
    let count = conns.len();
    for (name, c) in conns {
        let ideal = annihilator_ideal(&c).ctx("annihilator")?;
        ensure!(ideal.report.is_valid(), "{name}: {}", ideal.report);
        let pp = build_principal_parts(&c.source.algebra);
        let d = c.dim();
        let acts = |v: &[Q]| -> Vec<Q> {
            let mut out = Vec::new();
            for m in &c.rho {
                let mut acc = RationalMatrix::zeros(d, d);
                for (r, x) in v.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                    let (i, j) = pp.representative(r);
                    acc = acc.add(&c.module.action[i].mul(m).mul(&c.module.action[j]).scale(x));
                }
                out.extend(acc.to_vec());
            }
            out
        };
        for v in &ideal.basis {
            ensure!(is_zero_vec(&acts(v)), "{name}: ideal element does not annihilate rho");
            for r in 0..pp.dim {
                let w = pp.algebra.mul(&unit_vec(pp.dim, r), v);
                ensure!(is_zero_vec(&acts(&w)), "{name}: ideal is not closed under P");
            }
        }
        let cols: Vec<Vec<Q>> = (0..pp.dim).map(|r| acts(&unit_vec(pp.dim, r))).collect();
        let action_rank = if c.rho.is_empty() { 0 } else { rank(&RationalMatrix::from_columns(c.rho.len() * d * d, &cols).ctx("cols")?) };
        let independent = ideal.basis.is_empty() || rank(&RationalMatrix::from_rows(pp.dim, ideal.basis.clone()).ctx("rows")?) == ideal.basis.len();
        ensure!(independent, "{name}: ideal basis is dependent");
        ensure!(ideal.basis.len() + action_rank == pp.dim, "{name}: rank-nullity fails");
    }
    Ok(format!("{count} connections"))
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_dlie");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir).ctx("corpus dir")?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().ctx("entry")?;
    files.sort();
    ensure!(!files.is_empty(), "empty corpus");
    let fresh = tempfile::tempdir().ctx("tempdir")?;
    let gen = Command::new(bin).arg("--write-corpus").arg(fresh.path()).output().ctx("write corpus")?;
    ensure!(gen.status.success(), "--write-corpus failed");
    let mut bytes = 0;
    for f in &files {
        let name = f.file_name().unwrap_or_default();
        let regen = std::fs::read(fresh.path().join(name)).ctx("regenerated file")?;
        ensure!(regen == std::fs::read(f).ctx("corpus file")?, "{name:?} differs from a fresh generation");
        for json in [false, true] {
            let run = || {
                let mut cmd = Command::new(bin);
                cmd.arg("suite").arg("-w").arg(f);
                if json {
                    cmd.arg("--json");
                }
                cmd.output()
            };
            let (a, b) = (run().ctx("suite")?, run().ctx("suite")?);
            ensure!(a.status.code() == Some(0), "suite on {name:?} exited with {:?}", a.status.code());
            ensure!(a.stdout == b.stdout && a.stderr == b.stderr && a.status == b.status, "suite on {name:?} is not reproducible");
            bytes += a.stdout.len();
        }
    }
    Ok(format!("{} workspaces, {bytes} bytes of reports reproduced exactly", files.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cases = match build_corpus() {
        Ok(c) => c,
        Err(e) => {
            println!("corpus: FAIL ({e})");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("structure validity", Box::new(|| structure_validity(&cases))),
        ("d o d = 0", Box::new(|| d_squared(&cases))),
        ("map classification", Box::new(|| map_classification(&cases))),
        ("round trips", Box::new(|| round_trips(&cases))),
        ("section independence", Box::new(|| section_independence(&cases))),
        ("connection equivalence", Box::new(|| connection_equivalence(&cases))),
        ("extension splitting", Box::new(|| extension_splitting(&cases))),
        ("principal parts", Box::new(|| principal_parts(&cases))),
        ("annihilator ideal", Box::new(|| annihilator(&cases))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let ms = t.elapsed().as_millis();
        match verdict {
            Ok(detail) => println!("criterion {:2} {name}: PASS ({detail}) [{ms} ms]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} {name}: FAIL ({detail}) [{ms} ms]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass in {} ms", criteria.len() - failed, criteria.len(), start.elapsed().as_millis());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
