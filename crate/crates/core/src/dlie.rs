//! D-Lie algebras: the universal algebras `D¹(A,f)`, the twisted extensions
//! `F(L,f) = Az ⊕ L`, the canonical quotient by `J = A·D`, map
//! classification and reconstruction of a D-Lie algebra from its quotient.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactlin::{
    axpy, unit_vec, vec_add, zero_vec, Coordinates, QuotientMap, RationalMatrix, Subspace, Q,
};
use crate::finalg::{compute_derivations, AModule, Derivation, Derivations, FiniteAlgebra};
use crate::lierinehart::{
    check_lie_bracket, coboundary_solve, cochain_space, is_cocycle, lr_differential, pullback_cochain,
    solve_in_family, validate_flat_connection, validate_lr, validate_lr_map, Cochain,
    CoboundarySolution, FlatConnectionModule, LieRinehartAlgebra,
};
use crate::report::ValidationReport;

/// How a D-Lie algebra was built. Twisted constructions remember the
/// Lie–Rinehart algebra `L` whose extension they are.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `D¹(A,f)` itself.
    D1,
    /// `F(L,f)`, twisted by the pullback `f^α`.
    Functor { lr: LieRinehartAlgebra },
    /// `Az ⊕ L` twisted by an arbitrary 2-cocycle on `L`.
    Extension { lr: LieRinehartAlgebra, cocycle: Cochain },
    Other,
}

/// Sign convention of the A-component of the twisted bracket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketConvention {
    /// `(α(x)(b) − α(y)(a) + c(x,y), [x,y])`.
    Standard,
    /// `(α(y)(a) − α(x)(b) + c(x,y), [x,y])`; kept for negative tests.
    Flipped,
}

/// `(L̃, α̃, π̃, [,], D)` over a carrier with both A-actions.
///
/// `alpha` has one column per carrier basis vector, written in the
/// coordinates of `D¹(A, base_cocycle)`: the A-part first, then the
/// coordinates in the canonical derivation basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DLieAlgebra {
    pub algebra: FiniteAlgebra,
    pub carrier: AModule,
    pub bracket: Vec<Vec<Vec<Q>>>,
    pub anchor_pi: Vec<RationalMatrix>,
    pub alpha: RationalMatrix,
    pub base_cocycle: Cochain,
    pub central: Vec<Q>,
    pub provenance: Provenance,
}

impl DLieAlgebra {
    pub fn dim(&self) -> usize {
        self.carrier.dim
    }

    pub fn alg_dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn bracket_vec(&self, u: &[Q], v: &[Q]) -> Vec<Q> {
        let mut out = zero_vec(self.dim());
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if !vj.is_zero() {
                    axpy(&mut out, &(ui * vj), &self.bracket[i][j]);
                }
            }
        }
        out
    }

    pub fn pi_of(&self, u: &[Q]) -> RationalMatrix {
        let n = self.alg_dim();
        let mut out = RationalMatrix::zeros(n, n);
        for (c, a) in u.iter().zip(&self.anchor_pi) {
            if !c.is_zero() {
                out.add_scaled(c, a);
            }
        }
        out
    }

    /// `a · u`.
    pub fn act(&self, a: &[Q], u: &[Q]) -> Vec<Q> {
        self.carrier.act_on(a, u)
    }

    /// `u · a`.
    pub fn act_right(&self, u: &[Q], a: &[Q]) -> Vec<Q> {
        self.carrier.act_right_on(u, a)
    }

    /// `a · D`.
    pub fn scaled_central(&self, a: &[Q]) -> Vec<Q> {
        self.act(a, &self.central)
    }

    /// The Lie–Rinehart algebra and its defining cocycle when the algebra
    /// is a twisted extension `Az ⊕ L`; the coordinates are `(A-part, L-part)`.
    pub fn twisted_data(&self) -> Option<(LieRinehartAlgebra, Cochain)> {
        match &self.provenance {
            Provenance::D1 => Some((LieRinehartAlgebra::derivations(&self.algebra), self.base_cocycle.clone())),
            Provenance::Functor { lr } => {
                let der = compute_derivations(&self.algebra);
                let fa = pullback_cochain(lr, &der, &self.base_cocycle).ok()?;
                Some((lr.clone(), fa))
            }
            Provenance::Extension { lr, cocycle } => Some((lr.clone(), cocycle.clone())),
            Provenance::Other => None,
        }
    }

    /// `L` when the algebra is `F(L,f)` or `D¹(A,f)`.
    pub fn functor_lr(&self) -> Option<LieRinehartAlgebra> {
        match &self.provenance {
            Provenance::D1 => Some(LieRinehartAlgebra::derivations(&self.algebra)),
            Provenance::Functor { lr } => Some(lr.clone()),
            _ => None,
        }
    }
}

/// `Az ⊕ L` with bracket `(α(x)(b) − α(y)(a) + c(x,y), [x,y])`, left action
/// `e(a,x) = (ea, ex)`, right action `(a,x)e = (ae + α(x)(e), ex)`,
/// anchor `π(a,x) = α(x)` and `D = (1,0)`.
pub fn twisted_extension(
    l: &LieRinehartAlgebra,
    cocycle: &Cochain,
    alpha: RationalMatrix,
    base_cocycle: Cochain,
    provenance: Provenance,
    convention: BracketConvention,
) -> Result<DLieAlgebra> {
    let alg = &l.algebra;
    let (n, m) = (alg.dim(), l.dim());
    let big = n + m;
    if cocycle.degree != 2 || cocycle.ldim != m || cocycle.mdim != n {
        return Err(Error::Dimension("cocycle must be an A-valued 2-cochain on L".into()));
    }
    if alpha.cols() != big {
        return Err(Error::Dimension(format!("structure map needs {big} columns")));
    }
    let sign = match convention {
        BracketConvention::Standard => Q::one(),
        BracketConvention::Flipped => -Q::one(),
    };
    let mut bracket = vec![vec![zero_vec(big); big]; big];
    for i in 0..m {
        for k in 0..n {
            // [(0,u_i), (e_k,0)] = (α(u_i)(e_k), 0)
            let d = l.anchor[i].column(k);
            for t in 0..n {
                bracket[n + i][k][t] = &sign * &d[t];
                bracket[k][n + i][t] = -&sign * &d[t];
            }
        }
        for j in 0..m {
            let fv = cocycle.get(&[i, j]);
            let entry = &mut bracket[n + i][n + j];
            entry[..n].clone_from_slice(&fv);
            entry[n..(m + n)].clone_from_slice(&l.bracket[i][j][..m]);
        }
    }
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for c in 0..n {
        let mut lm = RationalMatrix::zeros(big, big);
        let am = alg.basis_mult(c);
        let lc = &l.carrier.action[c];
        for r in 0..n {
            for s in 0..n {
                lm[(r, s)] = am[(r, s)].clone();
            }
        }
        for r in 0..m {
            for s in 0..m {
                lm[(n + r, n + s)] = lc[(r, s)].clone();
            }
        }
        let mut rm = lm.clone();
        for i in 0..m {
            let d = l.anchor[i].column(c);
            for t in 0..n {
                rm[(t, n + i)] = d[t].clone();
            }
        }
        left.push(lm);
        right.push(rm);
    }
    let carrier = AModule::new(big, left, Some(right))?;
    let zero = RationalMatrix::zeros(n, n);
    let anchor_pi = (0..big).map(|s| if s < n { zero.clone() } else { l.anchor[s - n].clone() }).collect();
    let mut central = zero_vec(big);
    central[..n].clone_from_slice(alg.unit());
    Ok(DLieAlgebra {
        algebra: alg.clone(),
        carrier,
        bracket,
        anchor_pi,
        alpha,
        base_cocycle,
        central,
        provenance,
    })
}

fn require_der_cocycle(alg: &FiniteAlgebra, der: &LieRinehartAlgebra, f: &Cochain) -> Result<()> {
    if f.degree != 2 || f.ldim != der.dim() || f.mdim != alg.dim() {
        return Err(Error::Dimension(format!(
            "cocycle must be an A-valued 2-cochain on Der_k(A) of dimension {}",
            der.dim()
        )));
    }
    let check = is_cocycle(der, &FlatConnectionModule::trivial(der), f)?;
    if let Some((t, v)) = check.witness {
        return Err(Error::Precondition(format!(
            "cochain is not a cocycle: d f at {t:?} is {}",
            crate::exactlin::fmt_vec(&v)
        )));
    }
    Ok(())
}

/// `D¹(A,f) = A ⊕ Der_k(A)`; rejects non-cocycles.
pub fn build_d1(alg: &FiniteAlgebra, f: &Cochain) -> Result<DLieAlgebra> {
    let der = LieRinehartAlgebra::derivations(alg);
    require_der_cocycle(alg, &der, f)?;
    build_d1_with(alg, f, BracketConvention::Standard)
}

/// `D¹(A,f)` without the cocycle check, under either sign convention.
pub fn build_d1_with(alg: &FiniteAlgebra, f: &Cochain, convention: BracketConvention) -> Result<DLieAlgebra> {
    let der = LieRinehartAlgebra::derivations(alg);
    let big = alg.dim() + der.dim();
    twisted_extension(&der, f, RationalMatrix::identity(big), f.clone(), Provenance::D1, convention)
}

/// `(a,x) ↦ (a, α(x))` into `D¹` coordinates.
fn functor_alpha(l: &LieRinehartAlgebra, der: &Derivations) -> Result<RationalMatrix> {
    let n = l.alg_dim();
    let coords = l.anchor_coords(der)?;
    let r = der.dim();
    let mut m = RationalMatrix::zeros(n + r, n + l.dim());
    for i in 0..n {
        m[(i, i)] = Q::one();
    }
    for i in 0..l.dim() {
        for k in 0..r {
            m[(n + k, n + i)] = coords[(k, i)].clone();
        }
    }
    Ok(m)
}

/// `F(L,f) = Az ⊕ L` twisted by `f^α`; rejects non-cocycles.
pub fn functor_f(l: &LieRinehartAlgebra, f: &Cochain) -> Result<DLieAlgebra> {
    let der = LieRinehartAlgebra::derivations(&l.algebra);
    require_der_cocycle(&l.algebra, &der, f)?;
    functor_f_unchecked(l, f)
}

pub fn functor_f_unchecked(l: &LieRinehartAlgebra, f: &Cochain) -> Result<DLieAlgebra> {
    let der = compute_derivations(&l.algebra);
    let fa = pullback_cochain(l, &der, f)?;
    let alpha = functor_alpha(l, &der)?;
    twisted_extension(l, &fa, alpha, f.clone(), Provenance::Functor { lr: l.clone() }, BracketConvention::Standard)
}

/// Whether `α̃(D)` is the central element of `D¹(A,f)`.
pub fn is_normalised(t: &DLieAlgebra) -> bool {
    let mut expected = zero_vec(t.alpha.rows());
    let n = t.alg_dim();
    if expected.len() < n {
        return false;
    }
    expected[..n].clone_from_slice(t.algebra.unit());
    t.alpha.mul_vec(&t.central) == expected
}

/// Every clause of the D-Lie axioms, with witnesses. Whether `α̃(D)` is the
/// distinguished element of `D¹(A,f)` is reported as a note.
pub fn validate_dlie(t: &DLieAlgebra) -> ValidationReport {
    let mut r = ValidationReport::new("dlie");
    let alg = &t.algebra;
    let (n, big) = (t.alg_dim(), t.dim());
    let shapes_ok = t.carrier.algebra_dim() == n
        && t.bracket.len() == big
        && t.anchor_pi.len() == big
        && t.central.len() == big
        && t.alpha.cols() == big;
    if !shapes_ok {
        r.fail("shape", &[], "inconsistent dimensions".into(), format!("carrier of dimension {big}"));
        return r;
    }
    r.merge("carrier", t.carrier.validate(alg));
    check_lie_bracket(&mut r, &t.bracket);
    for name in [
        "anchor_law",
        "principal_parts_law",
        "central",
        "pi_central",
        "pi_derivation",
        "pi_p_linear",
        "pi_lie",
        "alpha_p_linear",
        "alpha_lie",
        "pi_factorisation",
    ] {
        r.check(name);
    }
    let e = |i: usize| unit_vec(big, i);
    for i in 0..big {
        for j in 0..big {
            for a in 0..n {
                let av = alg.basis_element(a);
                let lhs = t.bracket_vec(&e(i), &t.act(&av, &e(j)));
                let mut rhs = t.act(&av, &t.bracket[i][j]);
                let c = t.anchor_pi[i].column(a);
                axpy(&mut rhs, &Q::one(), &t.act(&c, &e(j)));
                r.expect_vec("anchor_law", &[i, j, a], &lhs, &rhs);
            }
        }
    }
    for a in 0..n {
        let av = alg.basis_element(a);
        for i in 0..big {
            let mut lhs = t.act_right(&e(i), &av);
            axpy(&mut lhs, &-Q::one(), &t.act(&av, &e(i)));
            let rhs = t.scaled_central(&t.anchor_pi[i].column(a));
            r.expect_vec("principal_parts_law", &[a, i], &lhs, &rhs);
        }
    }
    for i in 0..big {
        r.expect_vec("central", &[i], &t.bracket_vec(&t.central, &e(i)), &zero_vec(big));
    }
    r.expect_matrix("pi_central", &[], &t.pi_of(&t.central), &RationalMatrix::zeros(n, n));
    for i in 0..big {
        r.merge("pi_derivation", Derivation::new(t.anchor_pi[i].clone()).validate(alg));
        for a in 0..n {
            let av = alg.basis_element(a);
            let scaled = alg.mult_matrix(&av).mul(&t.anchor_pi[i]);
            r.expect_matrix("pi_p_linear", &[a, i, 0], &t.pi_of(&t.act(&av, &e(i))), &scaled);
            r.expect_matrix("pi_p_linear", &[a, i, 1], &t.pi_of(&t.act_right(&e(i), &av)), &scaled);
        }
        for j in i + 1..big {
            let lhs = t.pi_of(&t.bracket[i][j]);
            let rhs = t.anchor_pi[i].commutator(&t.anchor_pi[j]);
            r.expect_matrix("pi_lie", &[i, j], &lhs, &rhs);
        }
    }
    match build_d1_with(alg, &t.base_cocycle, BracketConvention::Standard) {
        Err(err) => r.fail("alpha_target", &[], err.to_string(), "D¹(A,f)".into()),
        Ok(d1) if d1.dim() != t.alpha.rows() => r.fail(
            "alpha_target",
            &[],
            format!("{} rows", t.alpha.rows()),
            format!("{} rows", d1.dim()),
        ),
        Ok(d1) => {
            for i in 0..big {
                let ai = t.alpha.column(i);
                for a in 0..n {
                    let av = alg.basis_element(a);
                    let lhs = t.alpha.mul_vec(&t.act(&av, &e(i)));
                    r.expect_vec("alpha_p_linear", &[a, i, 0], &lhs, &d1.act(&av, &ai));
                    let lhs = t.alpha.mul_vec(&t.act_right(&e(i), &av));
                    r.expect_vec("alpha_p_linear", &[a, i, 1], &lhs, &d1.act_right(&ai, &av));
                }
                for j in i + 1..big {
                    let lhs = t.alpha.mul_vec(&t.bracket[i][j]);
                    let rhs = d1.bracket_vec(&ai, &t.alpha.column(j));
                    r.expect_vec("alpha_lie", &[i, j], &lhs, &rhs);
                }
                r.expect_matrix("pi_factorisation", &[i], &d1.pi_of(&ai), &t.anchor_pi[i]);
            }
        }
    }
    if is_normalised(t) {
        r.note("alpha(D) is the central element of D1(A,f)");
    } else {
        r.note("alpha(D) is not the central element of D1(A,f)");
    }
    r
}

/// P-linearity, the Lie property, `φ(D) = D′` and `π̃′ ∘ φ = π̃`.
pub fn validate_dlie_map(s: &DLieAlgebra, t: &DLieAlgebra, phi: &RationalMatrix) -> ValidationReport {
    let mut r = ValidationReport::new("dlie_map");
    if phi.rows() != t.dim() || phi.cols() != s.dim() || s.algebra != t.algebra {
        r.fail(
            "shape",
            &[],
            format!("{}x{}", phi.rows(), phi.cols()),
            format!("{}x{} over one algebra", t.dim(), s.dim()),
        );
        return r;
    }
    for name in ["left_linear", "right_linear", "lie", "central", "anchor"] {
        r.check(name);
    }
    let big = s.dim();
    let e = |i: usize| unit_vec(big, i);
    for a in 0..s.alg_dim() {
        let av = s.algebra.basis_element(a);
        for i in 0..big {
            let lhs = phi.mul_vec(&s.act(&av, &e(i)));
            r.expect_vec("left_linear", &[a, i], &lhs, &t.act(&av, &phi.column(i)));
            let lhs = phi.mul_vec(&s.act_right(&e(i), &av));
            r.expect_vec("right_linear", &[a, i], &lhs, &t.act_right(&phi.column(i), &av));
        }
    }
    for i in 0..big {
        for j in i + 1..big {
            let lhs = phi.mul_vec(&s.bracket[i][j]);
            let rhs = t.bracket_vec(&phi.column(i), &phi.column(j));
            r.expect_vec("lie", &[i, j], &lhs, &rhs);
        }
        r.expect_matrix("anchor", &[i], &t.pi_of(&phi.column(i)), &s.anchor_pi[i]);
    }
    r.expect_vec("central", &[], &phi.mul_vec(&s.central), &t.central);
    r
}

/// `J = A·D`, the quotient `L̃/J` as a Lie–Rinehart algebra and the checks
/// that `J` is a free rank-one ideal.
#[derive(Clone, Debug)]
pub struct CanonicalQuotient {
    pub lr: LieRinehartAlgebra,
    pub ideal: Subspace,
    pub quotient: QuotientMap,
    pub projection: RationalMatrix,
    /// Coordinates `a` of `aD ∈ J`.
    pub j_coords: Coordinates,
    pub report: ValidationReport,
}

impl CanonicalQuotient {
    /// The `a` with `x = aD`, if `x ∈ J`.
    pub fn j_coefficient(&self, x: &[Q]) -> Option<Vec<Q>> {
        self.j_coords.coords(x)
    }
}

pub fn canonical_quotient(t: &DLieAlgebra) -> Result<CanonicalQuotient> {
    let alg = &t.algebra;
    let (n, big) = (t.alg_dim(), t.dim());
    let gens: Vec<Vec<Q>> = (0..n).map(|a| t.scaled_central(&alg.basis_element(a))).collect();
    let ideal = Subspace::span(big, &gens);
    if ideal.dim() != n {
        return Err(Error::Structure(format!(
            "A·D has dimension {} but a free rank-one module has dimension {n}",
            ideal.dim()
        )));
    }
    let j_coords = Coordinates::new(big, &gens)?;
    let mut report = ValidationReport::new("canonical_quotient");
    report.check("ideal");
    report.check("right_equals_left");
    for i in 0..big {
        for (a, g) in gens.iter().enumerate() {
            let v = t.bracket_vec(&unit_vec(big, i), g);
            if !ideal.contains(&v) {
                return Err(Error::Structure(format!(
                    "A·D is not an ideal: [e_{i}, e_{a}·D] = {} lies outside",
                    crate::exactlin::fmt_vec(&v)
                )));
            }
        }
    }
    let quotient = QuotientMap::new(ideal.clone());
    let q = quotient.dim();
    let lift = |u: &[Q]| quotient.lift(u);
    let mut bracket = vec![vec![zero_vec(q); q]; q];
    for i in 0..q {
        for j in 0..q {
            bracket[i][j] = quotient.project(&t.bracket_vec(&lift(&unit_vec(q, i)), &lift(&unit_vec(q, j))));
        }
    }
    let mut action = Vec::new();
    for a in 0..n {
        let av = alg.basis_element(a);
        let cols: Vec<Vec<Q>> = (0..q).map(|i| quotient.project(&t.act(&av, &lift(&unit_vec(q, i))))).collect();
        let left = RationalMatrix::from_columns(q, &cols)?;
        let rcols: Vec<Vec<Q>> =
            (0..q).map(|i| quotient.project(&t.act_right(&lift(&unit_vec(q, i)), &av))).collect();
        let right = RationalMatrix::from_columns(q, &rcols)?;
        report.expect_matrix("right_equals_left", &[a], &right, &left);
        action.push(left);
    }
    let anchor = (0..q).map(|i| t.pi_of(&lift(&unit_vec(q, i)))).collect();
    let lr = LieRinehartAlgebra::new(alg.clone(), AModule::new(q, action, None)?, bracket, anchor)?;
    report.merge("lie_rinehart", validate_lr(&lr));
    let projection = quotient.matrix();
    Ok(CanonicalQuotient { lr, ideal, quotient, projection, j_coords, report })
}

/// Checks that `matrix` is an isomorphism of Lie–Rinehart algebras by
/// validating it and its inverse.
pub fn check_lr_isomorphism(
    a: &LieRinehartAlgebra,
    b: &LieRinehartAlgebra,
    matrix: &RationalMatrix,
) -> ValidationReport {
    let mut r = ValidationReport::new("lie_rinehart_isomorphism");
    r.merge("forward", validate_lr_map(a, b, matrix));
    match matrix.inverse() {
        Some(inv) => r.merge("inverse", validate_lr_map(b, a, &inv)),
        None => r.fail("invertible", &[], "singular".into(), "invertible".into()),
    }
    r
}

/// Matrix of `(a,x) ↦ (a + α₁(x), ψ₂(x))` between two twisted extensions.
pub fn extension_map_matrix(n: usize, alpha1: &RationalMatrix, psi2: &RationalMatrix) -> RationalMatrix {
    let (m_src, m_tgt) = (psi2.cols(), psi2.rows());
    let mut out = RationalMatrix::zeros(n + m_tgt, n + m_src);
    for i in 0..n {
        out[(i, i)] = Q::one();
    }
    for r in 0..n {
        for c in 0..m_src {
            out[(r, n + c)] = alpha1[(r, c)].clone();
        }
    }
    for r in 0..m_tgt {
        for c in 0..m_src {
            out[(n + r, n + c)] = psi2[(r, c)].clone();
        }
    }
    out
}

/// A map between twisted extensions together with its checks.
#[derive(Clone, Debug)]
pub struct ExtensionMap {
    pub alpha1: Cochain,
    pub matrix: RationalMatrix,
    pub inverse: Option<RationalMatrix>,
    pub report: ValidationReport,
}

/// Maps `D¹(A,g) → D¹(A,f)` of the form `(a,x) ↦ (a + φ₁(x), x)`.
#[derive(Clone, Debug)]
pub struct D1Classification {
    pub map: ExtensionMap,
    /// Every map of this shape is `φ₁ + z` for `z` in this basis of `Z¹`.
    pub cocycles: Vec<Cochain>,
}

/// Decides whether `g = f + d¹φ₁`; if so returns the isomorphism
/// `D¹(A,g) → D¹(A,f)` and its inverse, both validated.
pub fn classify_maps_d1(alg: &FiniteAlgebra, g: &Cochain, f: &Cochain) -> Result<Option<D1Classification>> {
    let der = LieRinehartAlgebra::derivations(alg);
    let trivial = FlatConnectionModule::trivial(&der);
    let Some(sol) = coboundary_solve(&der, &trivial, f, g)? else {
        return Ok(None);
    };
    let s = build_d1(alg, g)?;
    let t = build_d1(alg, f)?;
    let n = alg.dim();
    let id = RationalMatrix::identity(der.dim());
    let a1 = sol.phi.as_matrix();
    let forward = extension_map_matrix(n, &a1, &id);
    let backward = extension_map_matrix(n, &a1.scale(&-Q::one()), &id);
    let mut report = ValidationReport::new("d1_classification");
    report.merge("forward", validate_dlie_map(&s, &t, &forward));
    report.merge("inverse", validate_dlie_map(&t, &s, &backward));
    let idn = RationalMatrix::identity(s.dim());
    report.expect_matrix("inverse_left", &[], &backward.mul(&forward), &idn);
    report.expect_matrix("inverse_right", &[], &forward.mul(&backward), &idn);
    Ok(Some(D1Classification {
        map: ExtensionMap { alpha1: sol.phi, matrix: forward, inverse: Some(backward), report },
        cocycles: sol.cocycles,
    }))
}

/// The decision on maps `F(L,g) → F(L′,f)`.
#[derive(Clone, Debug)]
pub struct MapDecision {
    pub source: DLieAlgebra,
    pub target: DLieAlgebra,
    pub source_lr: LieRinehartAlgebra,
    pub target_lr: LieRinehartAlgebra,
    /// `g^α − f^α = d¹(φ∘α)` for some `φ ∈ C¹(Der_k(A), A)`.
    pub restricted: Option<CoboundarySolution>,
    /// `g^α − f^α = d¹α₁` for some `α₁ ∈ C¹(L, A)`; computed on request.
    pub widened: Option<Option<CoboundarySolution>>,
}

impl MapDecision {
    /// The answer inside the image of `α*`.
    pub fn exists(&self) -> bool {
        self.restricted.is_some()
    }

    fn chosen(&self) -> Option<&CoboundarySolution> {
        self.restricted.as_ref().or(self.widened.as_ref().and_then(|w| w.as_ref()))
    }

    /// The D-Lie map `(a,x) ↦ (a + α₁(x), ψ₂(x))` for a Lie–Rinehart map ψ₂.
    pub fn construct(&self, psi2: &RationalMatrix) -> Result<ExtensionMap> {
        let lr_report = validate_lr_map(&self.source_lr, &self.target_lr, psi2);
        if !lr_report.is_valid() {
            return Err(Error::Input(format!("not a Lie–Rinehart map: {lr_report}")));
        }
        let sol = self
            .chosen()
            .ok_or_else(|| Error::Precondition("the cocycle classes differ; no map exists".into()))?;
        let n = self.source.alg_dim();
        let matrix = extension_map_matrix(n, &sol.phi.as_matrix(), psi2);
        let mut report = ValidationReport::new("constructed_map");
        report.merge("lie_rinehart_map", lr_report);
        report.merge("dlie_map", validate_dlie_map(&self.source, &self.target, &matrix));
        Ok(ExtensionMap { alpha1: sol.phi.clone(), matrix, inverse: None, report })
    }
}

/// Decides whether D-Lie maps `F(L,g) → F(L′,f)` exist by comparing `g^α`
/// and `f^α` on `L`.
pub fn exists_dlie_map(s: &DLieAlgebra, t: &DLieAlgebra, widen: bool) -> Result<MapDecision> {
    let (Some(l), Some(lt)) = (s.functor_lr(), t.functor_lr()) else {
        return Err(Error::Unsupported("both algebras must be built by the functor F or as D¹".into()));
    };
    if s.algebra != t.algebra {
        return Err(Error::Input("algebras differ".into()));
    }
    let der_data = compute_derivations(&s.algebra);
    let der = LieRinehartAlgebra::from_derivation_data(&s.algebra, &der_data);
    let ga = pullback_cochain(&l, &der_data, &s.base_cocycle)?;
    let fa = pullback_cochain(&l, &der_data, &t.base_cocycle)?;
    let trivial = FlatConnectionModule::trivial(&l);
    let diff = ga.sub(&fa);
    let family = cochain_space(&der, &FlatConnectionModule::trivial(&der), 1)
        .iter()
        .map(|phi| pullback_cochain(&l, &der_data, phi))
        .collect::<Result<Vec<_>>>()?;
    let restricted = solve_in_family(&l, &trivial, &family, &diff)?;
    let widened = if widen { Some(coboundary_solve(&l, &trivial, &fa, &ga)?) } else { None };
    Ok(MapDecision { source: s.clone(), target: t.clone(), source_lr: l, target_lr: lt, restricted, widened })
}

/// `(J, ∇_s)`, the curvature `ψ_s` of a section and its A-valued form `g`.
#[derive(Clone, Debug)]
pub struct SplittingData {
    pub quotient: CanonicalQuotient,
    pub section: RationalMatrix,
    /// `∇_s(ū)(aD) = [s(ū), aD]` in the A-coordinates of `J`.
    pub nabla: FlatConnectionModule,
    /// `ψ_s(ū,v̄) = [s ū, s v̄] − s[ū,v̄]` in the A-coordinates of `J`.
    pub psi: Cochain,
    /// `g` with `ψ_s = g·D`, as an A-valued cochain.
    pub g: Cochain,
    pub report: ValidationReport,
}

/// Verifies that `section` is a left A-linear section of the canonical
/// projection, then computes `∇_s`, `ψ_s` and `g`.
pub fn splitting_data(t: &DLieAlgebra, section: &RationalMatrix) -> Result<SplittingData> {
    let quotient = canonical_quotient(t)?;
    splitting_data_with(t, quotient, section)
}

fn splitting_data_with(t: &DLieAlgebra, quotient: CanonicalQuotient, s: &RationalMatrix) -> Result<SplittingData> {
    let l = &quotient.lr;
    let (n, q) = (t.alg_dim(), l.dim());
    if s.rows() != t.dim() || s.cols() != q {
        return Err(Error::Input(format!("section must be {}x{q}", t.dim())));
    }
    if quotient.projection.mul(s) != RationalMatrix::identity(q) {
        return Err(Error::Input("map is not a section of the canonical projection".into()));
    }
    for a in 0..n {
        let av = t.algebra.basis_element(a);
        for i in 0..q {
            let u = unit_vec(q, i);
            if s.mul_vec(&l.act(&av, &u)) != t.act(&av, &s.mul_vec(&u)) {
                return Err(Error::Input(format!("section is not A-linear at ({a},{i})")));
            }
        }
    }
    let j_of = |x: &[Q]| -> Result<Vec<Q>> {
        quotient
            .j_coefficient(x)
            .ok_or_else(|| Error::Structure(format!("{} does not lie in A·D", crate::exactlin::fmt_vec(x))))
    };
    let mut nabla = Vec::with_capacity(q);
    for i in 0..q {
        let su = s.column(i);
        let cols = (0..n)
            .map(|a| j_of(&t.bracket_vec(&su, &t.scaled_central(&t.algebra.basis_element(a)))))
            .collect::<Result<Vec<_>>>()?;
        nabla.push(RationalMatrix::from_columns(n, &cols)?);
    }
    let mut module = AModule::regular(&t.algebra);
    module.right_action = None;
    let nabla = FlatConnectionModule::new(module, nabla)?;
    let mut err = None;
    let psi = Cochain::from_fn(2, q, n, |tup| {
        let (i, j) = (tup[0], tup[1]);
        let mut v = t.bracket_vec(&s.column(i), &s.column(j));
        axpy(&mut v, &-Q::one(), &s.mul_vec(&l.bracket[i][j]));
        j_of(&v).unwrap_or_else(|e| {
            err = Some(e);
            zero_vec(n)
        })
    });
    if let Some(e) = err {
        return Err(e);
    }
    let g = psi.clone();
    let mut report = ValidationReport::new("splitting_data");
    report.merge("nabla", validate_flat_connection(l, &nabla));
    let trivial = FlatConnectionModule::trivial(l);
    report.expect("psi_cocycle", &[], is_cocycle(l, &nabla, &psi)?.is_cocycle, "d psi != 0".into(), "0".into());
    report.expect("g_cocycle", &[], is_cocycle(l, &trivial, &g)?.is_cocycle, "d g != 0".into(), "0".into());
    Ok(SplittingData { quotient, section: s.clone(), nabla, psi, g, report })
}

/// A free A-basis of a module, chosen greedily among basis vectors and then
/// among fixed integer combinations of them.
pub fn free_basis(alg: &FiniteAlgebra, module: &AModule) -> Option<Vec<Vec<Q>>> {
    let (n, d) = (alg.dim(), module.dim);
    if n == 0 || d % n != 0 {
        return None;
    }
    let mut candidates: Vec<Vec<Q>> = (0..d).map(|i| unit_vec(d, i)).collect();
    for k in 1..=3i64 {
        candidates.push((0..d).map(|i| Q::from_integer((k.pow(i as u32 % 8) + i as i64).into())).collect());
    }
    for mask in 1u32..(1 << d.min(10)) {
        candidates.push((0..d).map(|i| if i < 32 && mask & (1 << i) != 0 { Q::one() } else { Q::zero() }).collect());
    }
    let mut chosen: Vec<Vec<Q>> = Vec::new();
    let mut span = Subspace::zero(d);
    for c in candidates {
        if span.dim() == d {
            break;
        }
        let orbit: Vec<Vec<Q>> = (0..n).map(|a| module.action[a].mul_vec(&c)).collect();
        let grown = span.sum(&Subspace::span(d, &orbit));
        if grown.dim() == span.dim() + n {
            span = grown;
            chosen.push(c);
        }
    }
    (span.dim() == d).then_some(chosen)
}

/// The result of rebuilding a D-Lie algebra from its canonical quotient.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub free_basis: Vec<Vec<Q>>,
    pub splitting: SplittingData,
    /// The cocycle `g` of the chosen section.
    pub g: Cochain,
    /// `f^α` on the quotient, from the base cocycle.
    pub f_alpha: Cochain,
    /// `f^α = g + d¹β`.
    pub beta: Cochain,
    /// `J ⊕ L` twisted by `g`.
    pub direct_sum: DLieAlgebra,
    /// `F(L,f)`.
    pub model: DLieAlgebra,
    /// `(x, ū) ↦ x + s(ū)` from the direct sum to the input.
    pub rho: RationalMatrix,
    /// `F(L,f) → T`, with its inverse.
    pub iso: RationalMatrix,
    pub inverse: RationalMatrix,
    pub report: ValidationReport,
}

/// Canonical A-linear section extending the lifts of a free basis.
pub fn canonical_section(t: &DLieAlgebra, quotient: &CanonicalQuotient, basis: &[Vec<Q>]) -> Result<RationalMatrix> {
    let l = &quotient.lr;
    let (n, q) = (t.alg_dim(), l.dim());
    let mut cols = Vec::new();
    let mut lifts = Vec::new();
    for b in basis {
        let lift = quotient.quotient.lift(b);
        for a in 0..n {
            let av = t.algebra.basis_element(a);
            cols.push(l.act(&av, b));
            lifts.push(t.act(&av, &lift));
        }
    }
    let m = RationalMatrix::from_columns(q, &cols)?;
    let inv = m.inverse().ok_or_else(|| Error::Unsupported("quotient is not free on the chosen basis".into()))?;
    let lift_m = RationalMatrix::from_columns(t.dim(), &lifts)?;
    Ok(lift_m.mul(&inv))
}

/// Rebuilds `T` as `F(L,f)` for its canonical quotient `L`. Requires a
/// valid input whose structure map sends `D` to the central element of
/// `D¹(A,f)`, and a free quotient.
pub fn reconstruct(t: &DLieAlgebra) -> Result<Reconstruction> {
    let valid = validate_dlie(t);
    if !valid.is_valid() {
        return Err(Error::Precondition(format!("input is not a D-Lie algebra: {:?}", valid.failed_checks())));
    }
    if !is_normalised(t) {
        return Err(Error::Precondition("alpha(D) is not the central element of D1(A,f)".into()));
    }
    let quotient = canonical_quotient(t)?;
    let basis = free_basis(&t.algebra, &quotient.lr.carrier)
        .ok_or_else(|| Error::Unsupported("canonical quotient is not a free A-module".into()))?;
    let section = canonical_section(t, &quotient, &basis)?;
    let splitting = splitting_data_with(t, quotient, &section)?;
    let l = splitting.quotient.lr.clone();
    let (n, q) = (t.alg_dim(), l.dim());
    let g = splitting.g.clone();
    let der = compute_derivations(&t.algebra);
    let f_alpha = pullback_cochain(&l, &der, &t.base_cocycle)?;
    let trivial = FlatConnectionModule::trivial(&l);
    let sol = coboundary_solve(&l, &trivial, &g, &f_alpha)?.ok_or_else(|| {
        Error::Structure("the section cocycle is not cohomologous to the pulled-back base cocycle".into())
    })?;
    let beta = sol.phi;
    let mut rho = RationalMatrix::zeros(t.dim(), n + q);
    for a in 0..n {
        rho.set_column(a, &t.scaled_central(&t.algebra.basis_element(a)));
    }
    for i in 0..q {
        rho.set_column(n + i, &section.column(i));
    }
    let alpha_sum = t.alpha.mul(&rho);
    let direct_sum = twisted_extension(
        &l,
        &g,
        alpha_sum,
        t.base_cocycle.clone(),
        Provenance::Extension { lr: l.clone(), cocycle: g.clone() },
        BracketConvention::Standard,
    )?;
    let model = functor_f_unchecked(&l, &t.base_cocycle)?;
    let to_sum = extension_map_matrix(n, &beta.as_matrix(), &RationalMatrix::identity(q));
    let iso = rho.mul(&to_sum);
    let mut report = ValidationReport::new("reconstruction");
    report.merge("splitting", splitting.report.clone());
    report.merge("direct_sum", validate_dlie(&direct_sum));
    report.merge("rho", validate_dlie_map(&direct_sum, t, &rho));
    report.merge("model", validate_dlie(&model));
    report.merge("iso", validate_dlie_map(&model, t, &iso));
    let inverse = match iso.inverse() {
        Some(inv) => {
            report.merge("inverse", validate_dlie_map(t, &model, &inv));
            inv
        }
        None => {
            report.fail("invertible", &[], "singular".into(), "invertible".into());
            RationalMatrix::zeros(0, 0)
        }
    };
    Ok(Reconstruction {
        free_basis: basis,
        splitting,
        g,
        f_alpha,
        beta,
        direct_sum,
        model,
        rho,
        iso,
        inverse,
        report,
    })
}

/// Second section `s + ρ` for an A-linear `ρ: L → J` given in A-coordinates.
pub fn shifted_section(t: &DLieAlgebra, section: &RationalMatrix, rho: &Cochain) -> RationalMatrix {
    let mut out = section.clone();
    for i in 0..section.cols() {
        let shift = t.scaled_central(&rho.get(&[i]));
        out.set_column(i, &vec_add(&section.column(i), &shift));
    }
    out
}

/// `ψ_{s′} − ψ_s = d¹ρ` in `(J, ∇_s)`: returns the solver's witness.
pub fn section_change_witness(a: &SplittingData, b: &SplittingData) -> Result<Option<CoboundarySolution>> {
    coboundary_solve(&a.quotient.lr, &a.nabla, &a.psi, &b.psi)
}

/// `d¹ρ` in `(J, ∇_s)`.
pub fn section_change(a: &SplittingData, rho: &Cochain) -> Result<Cochain> {
    lr_differential(&a.quotient.lr, &a.nabla, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::q;

    fn dual() -> FiniteAlgebra {
        FiniteAlgebra::truncated_polynomial(2)
    }

    #[test]
    fn d1_examples() {
        let a = dual();
        let f = Cochain::zero(2, 1, 2);
        let d1 = build_d1(&a, &f).unwrap();
        assert_eq!(d1.dim(), 3);
        let r = validate_dlie(&d1);
        assert!(r.is_valid(), "{r}");
        for i in 0..3 {
            assert_eq!(d1.bracket_vec(&d1.central, &unit_vec(3, i)), zero_vec(3));
        }
        // right action: (0, x∂x)·x = (x∂x(x), x·x∂x) = (x, 0)
        let u = unit_vec(3, 2);
        assert_eq!(d1.act_right(&u, &a.basis_element(1)), vec![q(0), q(1), q(0)]);
        assert!(is_normalised(&d1));
    }

    #[test]
    fn functor_and_quotient() {
        let a = FiniteAlgebra::truncated_polynomial(3);
        let l = LieRinehartAlgebra::derivations(&a);
        let f = Cochain::zero(2, l.dim(), 3);
        let t = functor_f(&l, &f).unwrap();
        assert!(validate_dlie(&t).is_valid());
        let cq = canonical_quotient(&t).unwrap();
        assert!(cq.report.is_valid(), "{}", cq.report);
        assert_eq!(cq.lr.dim(), t.dim() - a.dim());
        assert!(check_lr_isomorphism(&cq.lr, &l, &RationalMatrix::identity(l.dim())).is_valid());
    }

    #[test]
    fn broken_centrality_is_reported() {
        let a = dual();
        let mut d1 = build_d1(&a, &Cochain::zero(2, 1, 2)).unwrap();
        d1.bracket[0][2][2] = q(1);
        d1.bracket[2][0][2] = q(-1);
        let r = validate_dlie(&d1);
        assert!(r.failures("central") > 0);
    }

    #[test]
    fn map_scaling_central_fails() {
        let a = dual();
        let d1 = build_d1(&a, &Cochain::zero(2, 1, 2)).unwrap();
        let id = RationalMatrix::identity(3);
        assert!(validate_dlie_map(&d1, &d1, &id).is_valid());
        let r = validate_dlie_map(&d1, &d1, &id.scale(&q(2)));
        assert!(r.failures("central") > 0);
    }

    #[test]
    fn reconstruct_examples() {
        let a = dual();
        let d1 = build_d1(&a, &Cochain::zero(2, 1, 2)).unwrap();
        assert!(matches!(reconstruct(&d1), Err(Error::Unsupported(_))));
        let pp = FiniteAlgebra::product(&FiniteAlgebra::rationals(), &FiniteAlgebra::rationals());
        let d1 = build_d1(&pp, &Cochain::zero(2, 0, 2)).unwrap();
        let rec = reconstruct(&d1).unwrap();
        assert!(rec.report.is_valid(), "{}", rec.report);
        let xdx = RationalMatrix::from_i64(&[&[0, 0], &[0, 1]]);
        let l = LieRinehartAlgebra::action_algebra(&a, &[xdx]).unwrap();
        let t = functor_f(&l, &Cochain::zero(2, 1, 2)).unwrap();
        let rec = reconstruct(&t).unwrap();
        assert!(rec.report.is_valid(), "{}", rec.report);
    }
}
