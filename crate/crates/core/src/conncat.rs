//! First-order differential operators, connections on D-Lie algebras and
//! their curvature, the correspondence with `(L,ψ)`-connections, the
//! extension `End(L̃,E)` and the annihilator ideal of a connection.

use num_traits::Zero;

use crate::dlie::{
    canonical_quotient, functor_f, validate_dlie, validate_dlie_map, DLieAlgebra, Provenance,
};
use crate::error::{Error, Result};
use crate::exactlin::{
    kernel, rank, solve_affine, unit_vec, zero_vec, Coordinates, RationalMatrix, Subspace, Q,
};
use crate::finalg::{build_principal_parts, AModule};
use crate::lierinehart::{pullback_cochain, Cochain, LieRinehartAlgebra};
use crate::report::ValidationReport;

/// Kernel of a linear operator on `d×d` matrices, as canonical matrices.
fn operator_kernel(d: usize, mut op: impl FnMut(&RationalMatrix) -> Vec<Q>) -> Vec<RationalMatrix> {
    let cols: Vec<Vec<Q>> = (0..d * d)
        .map(|t| op(&RationalMatrix::from_vec(d, d, unit_vec(d * d, t))))
        .collect();
    let rows = cols.first().map_or(0, |c| c.len());
    let basis = if rows == 0 {
        (0..d * d).map(|t| unit_vec(d * d, t)).collect()
    } else {
        kernel(&RationalMatrix::from_columns(rows, &cols).expect("uniform"))
    };
    basis.into_iter().map(|v| RationalMatrix::from_vec(d, d, v)).collect()
}

/// `End_A(E)`: operators commuting with the A-action.
pub fn end_a(e: &AModule) -> Vec<RationalMatrix> {
    operator_kernel(e.dim, |m| e.action.iter().flat_map(|a| m.commutator(a).to_vec()).collect())
}

/// `Diff¹(E)` as a subspace of `End_k(E)` with its two A-actions
/// `a·∂ = a∘∂` and `∂·b = ∂∘b`.
#[derive(Clone, Debug)]
pub struct Diff1Space {
    pub module: AModule,
    pub basis: Vec<RationalMatrix>,
    coords: Coordinates,
    /// Left and right A-actions on basis coordinates.
    pub pmodule: AModule,
}

impl Diff1Space {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, m: &RationalMatrix) -> bool {
        self.coords(m).is_some()
    }

    pub fn coords(&self, m: &RationalMatrix) -> Option<Vec<Q>> {
        if m.rows() != self.module.dim || m.cols() != self.module.dim {
            return None;
        }
        self.coords.coords(&m.to_vec())
    }

    /// Closure under commutators and the P-module axioms.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("diff1");
        r.check("first_order");
        r.check("commutator_closed");
        let e = &self.module;
        let zero = RationalMatrix::zeros(e.dim, e.dim);
        for (p, d) in self.basis.iter().enumerate() {
            for i in 0..e.algebra_dim() {
                for j in i..e.algebra_dim() {
                    let c = d.commutator(&e.action[i]).commutator(&e.action[j]);
                    r.expect_matrix("first_order", &[p, i, j], &c, &zero);
                }
            }
        }
        for p in 0..self.dim() {
            for q in p + 1..self.dim() {
                let c = self.basis[p].commutator(&self.basis[q]);
                r.expect("commutator_closed", &[p, q], self.contains(&c), format!("{c:?}"), "in Diff1".into());
            }
        }
        r.merge("pmodule", crate::finalg::check_pmodule(&self.pmodule));
        r
    }
}

/// Solves `[[∂, a], b] = 0` over `End_k(E)`.
pub fn compute_diff1(e: &AModule) -> Diff1Space {
    let n = e.algebra_dim();
    let basis = operator_kernel(e.dim, |m| {
        let mut out = Vec::new();
        for i in 0..n {
            let c = m.commutator(&e.action[i]);
            for j in i..n {
                out.extend(c.commutator(&e.action[j]).to_vec());
            }
        }
        out
    });
    let vecs: Vec<Vec<Q>> = basis.iter().map(|b| b.to_vec()).collect();
    let coords = Coordinates::new(e.dim * e.dim, &vecs).expect("kernel basis is independent");
    let k = basis.len();
    let act = |f: &dyn Fn(&RationalMatrix) -> RationalMatrix| -> RationalMatrix {
        let cols: Vec<Vec<Q>> = basis
            .iter()
            .map(|b| coords.coords(&f(b).to_vec()).expect("Diff1 is an A⊗A-module"))
            .collect();
        RationalMatrix::from_columns(k, &cols).expect("dims")
    };
    let left = (0..n).map(|i| act(&|b| e.action[i].mul(b))).collect();
    let right = (0..n).map(|i| act(&|b| b.mul(&e.action[i]))).collect();
    let pmodule = AModule { dim: k, action: left, right_action: Some(right) };
    Diff1Space { module: e.clone(), basis, coords, pmodule }
}

/// `[[m, a], b] = 0` for all `a, b ∈ A`.
pub fn is_first_order(e: &AModule, m: &RationalMatrix) -> bool {
    let n = e.algebra_dim();
    (0..n).all(|i| {
        let c = m.commutator(&e.action[i]);
        (i..n).all(|j| c.commutator(&e.action[j]).is_zero())
    })
}

/// A connection `ρ: L̃ → Diff¹(E)`, given on the carrier basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub source: DLieAlgebra,
    pub module: AModule,
    pub rho: Vec<RationalMatrix>,
}

impl Connection {
    pub fn new(source: DLieAlgebra, module: AModule, rho: Vec<RationalMatrix>) -> Result<Self> {
        if rho.len() != source.dim() {
            return Err(Error::Dimension(format!("connection needs {} operators", source.dim())));
        }
        if rho.iter().any(|m| m.rows() != module.dim || m.cols() != module.dim) {
            return Err(Error::Dimension(format!("operators must be {0}x{0}", module.dim)));
        }
        if module.algebra_dim() != source.alg_dim() {
            return Err(Error::Dimension("module and D-Lie algebra live over different algebras".into()));
        }
        Ok(Self { source, module, rho })
    }

    /// The zero connection.
    pub fn zero(source: DLieAlgebra, module: AModule) -> Self {
        let d = module.dim;
        let rho = vec![RationalMatrix::zeros(d, d); source.dim()];
        Self { source, module, rho }
    }

    /// `(a, x) ↦ aI + x` on `D¹(A,f)` acting on `E = A`.
    pub fn tautological(d1: &DLieAlgebra) -> Result<Self> {
        if d1.provenance != Provenance::D1 {
            return Err(Error::Unsupported("tautological connection needs D1(A,f)".into()));
        }
        let n = d1.alg_dim();
        let rho = (0..d1.dim())
            .map(|s| if s < n { d1.algebra.basis_mult(s).clone() } else { d1.anchor_pi[s].clone() })
            .collect();
        let mut module = AModule::regular(&d1.algebra);
        module.right_action = None;
        Ok(Self { source: d1.clone(), module, rho })
    }

    pub fn dim(&self) -> usize {
        self.module.dim
    }

    pub fn rho_of(&self, u: &[Q]) -> RationalMatrix {
        let d = self.dim();
        let mut out = RationalMatrix::zeros(d, d);
        for (c, m) in u.iter().zip(&self.rho) {
            if !c.is_zero() {
                out.add_scaled(c, m);
            }
        }
        out
    }

    pub fn rho_d(&self) -> RationalMatrix {
        self.rho_of(&self.source.central)
    }

    pub fn rho_d_is_identity(&self) -> bool {
        self.rho_d() == RationalMatrix::identity(self.dim())
    }

    /// `R_ρ(u,v) = [ρ(u), ρ(v)] − ρ([u,v])`.
    pub fn curvature(&self, u: &[Q], v: &[Q]) -> RationalMatrix {
        self.rho_of(u).commutator(&self.rho_of(v)).sub(&self.rho_of(&self.source.bracket_vec(u, v)))
    }

    pub fn curvature_basis(&self, i: usize, j: usize) -> RationalMatrix {
        let big = self.source.dim();
        self.curvature(&unit_vec(big, i), &unit_vec(big, j))
    }

    pub fn is_flat(&self) -> bool {
        let big = self.source.dim();
        (0..big).all(|i| (i + 1..big).all(|j| self.curvature_basis(i, j).is_zero()))
    }
}

/// The Connection invariants; whether `ρ(D)` is the identity is a note.
pub fn validate_connection(c: &Connection) -> ValidationReport {
    let mut r = ValidationReport::new("connection");
    let t = &c.source;
    let (n, big) = (t.alg_dim(), t.dim());
    for name in ["in_diff1", "left_linear", "right_linear", "leibniz", "rho_d_a_linear", "curvature_in_diff1"] {
        r.check(name);
    }
    for i in 0..big {
        r.expect("in_diff1", &[i], is_first_order(&c.module, &c.rho[i]), format!("{:?}", c.rho[i]), "in Diff1".into());
    }
    let e = |i: usize| unit_vec(big, i);
    let rd = c.rho_d();
    for a in 0..n {
        let av = t.algebra.basis_element(a);
        let am = &c.module.action[a];
        for i in 0..big {
            r.expect_matrix("left_linear", &[a, i], &c.rho_of(&t.act(&av, &e(i))), &am.mul(&c.rho[i]));
            r.expect_matrix("right_linear", &[a, i], &c.rho_of(&t.act_right(&e(i), &av)), &c.rho[i].mul(am));
            let lhs = c.rho[i].mul(am).sub(&am.mul(&c.rho[i]));
            let rhs = c.module.act(&t.anchor_pi[i].column(a)).mul(&rd);
            r.expect_matrix("leibniz", &[i, a], &lhs, &rhs);
        }
        r.expect_matrix("rho_d_a_linear", &[a], &rd.mul(am), &am.mul(&rd));
    }
    for i in 0..big {
        for j in i + 1..big {
            let k = c.curvature_basis(i, j);
            r.expect("curvature_in_diff1", &[i, j], is_first_order(&c.module, &k), format!("{k:?}"), "in Diff1".into());
        }
    }
    if c.rho_d_is_identity() {
        r.note("rho(D) is the identity");
    } else {
        r.note("rho(D) is not the identity");
    }
    r
}

/// `∇: L → End_k(E)` with `∇(x)(ae) = a∇(x)(e) + α(x)(a)ψ(e)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPsiConnection {
    pub lr: LieRinehartAlgebra,
    pub module: AModule,
    pub psi: RationalMatrix,
    pub nabla: Vec<RationalMatrix>,
}

impl LPsiConnection {
    pub fn new(lr: LieRinehartAlgebra, module: AModule, psi: RationalMatrix, nabla: Vec<RationalMatrix>) -> Result<Self> {
        let d = module.dim;
        if nabla.len() != lr.dim() {
            return Err(Error::Dimension(format!("connection needs {} operators", lr.dim())));
        }
        if psi.rows() != d || psi.cols() != d || nabla.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::Dimension(format!("operators must be {d}x{d}")));
        }
        Ok(Self { lr, module, psi, nabla })
    }

    pub fn nabla_of(&self, x: &[Q]) -> RationalMatrix {
        let d = self.module.dim;
        let mut out = RationalMatrix::zeros(d, d);
        for (c, m) in x.iter().zip(&self.nabla) {
            if !c.is_zero() {
                out.add_scaled(c, m);
            }
        }
        out
    }

    /// `R_∇(x,y) = [∇x, ∇y] − ∇[x,y]`.
    pub fn curvature(&self, x: &[Q], y: &[Q]) -> RationalMatrix {
        self.nabla_of(x).commutator(&self.nabla_of(y)).sub(&self.nabla_of(&self.lr.bracket_vec(x, y)))
    }
}

/// Twisted Leibniz rule, A-linearity of `ψ`, and A-linearity of `∇` in
/// its Lie argument.
pub fn validate_lpsi(c: &LPsiConnection) -> ValidationReport {
    let mut r = ValidationReport::new("lpsi_connection");
    let l = &c.lr;
    r.check("leibniz");
    r.check("psi_a_linear");
    r.check("a_linear");
    for a in 0..l.alg_dim() {
        let am = &c.module.action[a];
        for i in 0..l.dim() {
            let lhs = c.nabla[i].commutator(am);
            let rhs = c.module.act(&l.anchor[i].column(a)).mul(&c.psi);
            r.expect_matrix("leibniz", &[i, a], &lhs, &rhs);
            let au = l.act(&l.algebra.basis_element(a), &unit_vec(l.dim(), i));
            r.expect_matrix("a_linear", &[a, i], &c.nabla_of(&au), &am.mul(&c.nabla[i]));
        }
        r.expect_matrix("psi_a_linear", &[a], &c.psi.mul(am), &am.mul(&c.psi));
    }
    r
}

/// An affine family `particular + Σ t_k directions[k]` of operator tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorFamily {
    pub particular: Vec<RationalMatrix>,
    pub directions: Vec<Vec<RationalMatrix>>,
}

impl OperatorFamily {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn point(&self, coeffs: &[Q]) -> Vec<RationalMatrix> {
        let mut out = self.particular.clone();
        for (c, dir) in coeffs.iter().zip(&self.directions) {
            if !c.is_zero() {
                for (m, d) in out.iter_mut().zip(dir) {
                    m.add_scaled(c, d);
                }
            }
        }
        out
    }
}

fn combine(coeffs: &[Q], ops: &[RationalMatrix], d: usize) -> RationalMatrix {
    let mut out = RationalMatrix::zeros(d, d);
    for (c, o) in coeffs.iter().zip(ops) {
        if !c.is_zero() {
            out.add_scaled(c, o);
        }
    }
    out
}

/// Solves `linear(ops) = rhs` for `count` operators on a `d`-dimensional space.
fn solve_operators(
    count: usize,
    d: usize,
    linear: impl Fn(&[RationalMatrix]) -> Vec<Q>,
    rhs: Vec<Q>,
) -> Result<Option<OperatorFamily>> {
    let dd = d * d;
    let unknowns = count * dd;
    let split = |v: &[Q]| -> Vec<RationalMatrix> {
        (0..count).map(|i| RationalMatrix::from_vec(d, d, v[i * dd..(i + 1) * dd].to_vec())).collect()
    };
    if unknowns == 0 || rhs.is_empty() {
        if rhs.iter().any(|x| !x.is_zero()) {
            return Ok(None);
        }
        let directions = (0..unknowns).map(|t| split(&unit_vec(unknowns, t))).collect();
        return Ok(Some(OperatorFamily { particular: split(&zero_vec(unknowns)), directions }));
    }
    let cols: Vec<Vec<Q>> = (0..unknowns).map(|t| linear(&split(&unit_vec(unknowns, t)))).collect();
    let system = RationalMatrix::from_columns(rhs.len(), &cols)?;
    Ok(solve_affine(&system, &rhs)?.map(|sol| OperatorFamily {
        particular: split(&sol.particular),
        directions: sol.kernel.iter().map(|k| split(k)).collect(),
    }))
}

/// All `(L,ψ)`-connections on `E` for a fixed `ψ`.
#[derive(Clone, Debug)]
pub struct LPsiSpace {
    pub lr: LieRinehartAlgebra,
    pub module: AModule,
    pub psi: RationalMatrix,
    pub family: OperatorFamily,
}

impl LPsiSpace {
    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn point(&self, coeffs: &[Q]) -> LPsiConnection {
        LPsiConnection {
            lr: self.lr.clone(),
            module: self.module.clone(),
            psi: self.psi.clone(),
            nabla: self.family.point(coeffs),
        }
    }
}

/// Solves the twisted Leibniz rule and A-linearity for `∇`; `None` when
/// `E` carries no `(L,ψ)`-connection.
pub fn lpsi_connection_space(
    l: &LieRinehartAlgebra,
    e: &AModule,
    psi: &RationalMatrix,
) -> Result<Option<LPsiSpace>> {
    let (n, m, d) = (l.alg_dim(), l.dim(), e.dim);
    if e.algebra_dim() != n || psi.rows() != d || psi.cols() != d {
        return Err(Error::Dimension("module, endomorphism and algebra do not match".into()));
    }
    let linear = |nabla: &[RationalMatrix]| -> Vec<Q> {
        let mut out = Vec::new();
        for a in 0..n {
            let am = &e.action[a];
            for (i, op) in nabla.iter().enumerate() {
                out.extend(op.commutator(am).to_vec());
                let au = l.act(&l.algebra.basis_element(a), &unit_vec(m, i));
                out.extend(combine(&au, nabla, d).sub(&am.mul(op)).to_vec());
            }
        }
        out
    };
    let mut rhs = Vec::new();
    for a in 0..n {
        for i in 0..m {
            rhs.extend(e.act(&l.anchor[i].column(a)).mul(psi).to_vec());
            rhs.extend(zero_vec(d * d));
        }
    }
    Ok(solve_operators(m, d, linear, rhs)?.map(|family| LPsiSpace {
        lr: l.clone(),
        module: e.clone(),
        psi: psi.clone(),
        family,
    }))
}

/// All connections `L̃ → Diff¹(E)`, optionally with `ρ(D)` prescribed.
pub fn connection_space(
    t: &DLieAlgebra,
    e: &AModule,
    rho_d: Option<&RationalMatrix>,
) -> Result<Option<OperatorFamily>> {
    let (n, big, d) = (t.alg_dim(), t.dim(), e.dim);
    if e.algebra_dim() != n {
        return Err(Error::Dimension("module and D-Lie algebra live over different algebras".into()));
    }
    let dd = d * d;
    let linear = |rho: &[RationalMatrix]| -> Vec<Q> {
        let rd = combine(&t.central, rho, d);
        let mut out = Vec::new();
        for (s, op) in rho.iter().enumerate() {
            for i in 0..n {
                let c = op.commutator(&e.action[i]);
                for j in i..n {
                    out.extend(c.commutator(&e.action[j]).to_vec());
                }
            }
            for a in 0..n {
                let av = t.algebra.basis_element(a);
                let am = &e.action[a];
                let u = unit_vec(big, s);
                out.extend(combine(&t.act(&av, &u), rho, d).sub(&am.mul(op)).to_vec());
                out.extend(combine(&t.act_right(&u, &av), rho, d).sub(&op.mul(am)).to_vec());
                let leib = op.commutator(am).sub(&e.act(&t.anchor_pi[s].column(a)).mul(&rd));
                out.extend(leib.to_vec());
            }
        }
        for a in 0..n {
            out.extend(rd.commutator(&e.action[a]).to_vec());
        }
        if rho_d.is_some() {
            out.extend(rd.to_vec());
        }
        out
    };
    let homogeneous = big * (n * (n + 1) / 2 + 3 * n) * dd + n * dd;
    let mut rhs = zero_vec(homogeneous);
    if let Some(target) = rho_d {
        if target.rows() != d || target.cols() != d {
            return Err(Error::Dimension(format!("rho(D) must be {d}x{d}")));
        }
        rhs.extend(target.to_vec());
    }
    solve_operators(big, d, linear, rhs)
}

/// `ρ(az + x) = aψ + ∇(x)` on a twisted extension `Az ⊕ L`.
pub fn c_functor_on(t: &DLieAlgebra, n: &LPsiConnection) -> Result<Connection> {
    let (lr, _) = t
        .twisted_data()
        .ok_or_else(|| Error::Unsupported("source is not a twisted extension".into()))?;
    if lr != n.lr {
        return Err(Error::Input("connection and extension use different Lie–Rinehart algebras".into()));
    }
    let k = t.alg_dim();
    let rho = (0..t.dim())
        .map(|s| if s < k { n.module.action[s].mul(&n.psi) } else { n.nabla[s - k].clone() })
        .collect();
    Connection::new(t.clone(), n.module.clone(), rho)
}

/// `C_f`: the connection on `F(L,f)` induced by an `(L,ψ)`-connection.
pub fn c_functor(n: &LPsiConnection, f: &Cochain) -> Result<Connection> {
    let t = functor_f(&n.lr, f)?;
    c_functor_on(&t, n)
}

/// `R_f`: `∇ = ρ ∘ i` and `ψ = ρ(z)`.
pub fn r_functor(c: &Connection) -> Result<LPsiConnection> {
    let (lr, _) = c
        .source
        .twisted_data()
        .ok_or_else(|| Error::Unsupported("source is not built as a twisted extension".into()))?;
    let k = c.source.alg_dim();
    let nabla = c.rho[k..].to_vec();
    LPsiConnection::new(lr, c.module.clone(), c.rho_d(), nabla)
}

/// Checks, for `u = az + x` and `v = bz + y` on all basis pairs,
/// `R_ρ(u,v) = R_∇(x,y) + a[ψ,∇y] + b[∇x,ψ] + (x(b) − y(a))(ψ² − ψ) − f^α(x,y)ψ`,
/// which for `ψ = Id` is `R_∇(x,y) − f^α(x,y)·Id`. The short form is
/// checked separately when `ψ = Id`.
pub fn curvature_identity_check(n: &LPsiConnection, f: &Cochain) -> Result<ValidationReport> {
    let rho = c_functor(n, f)?;
    let t = &rho.source;
    let der = crate::finalg::compute_derivations(&n.lr.algebra);
    let fa = pullback_cochain(&n.lr, &der, f)?;
    let (k, m, d) = (t.alg_dim(), n.lr.dim(), n.module.dim);
    let big = k + m;
    let psi = &n.psi;
    let id = RationalMatrix::identity(d);
    let psi_is_id = *psi == id;
    let mut r = ValidationReport::new("curvature_identity");
    r.check("general_form");
    if psi_is_id {
        r.check("identity_form");
    }
    let split = |s: usize| -> (Vec<Q>, Vec<Q>) {
        let v = unit_vec(big, s);
        (v[..k].to_vec(), v[k..].to_vec())
    };
    for s in 0..big {
        for t2 in 0..big {
            let (a, x) = split(s);
            let (b, y) = (split(t2).0, split(t2).1);
            let lhs = rho.curvature_basis(s, t2);
            let rnab = n.curvature(&x, &y);
            let ma = n.module.act(&a);
            let mb = n.module.act(&b);
            let xb = n.lr.anchor_of(&x).mul_vec(&b);
            let ya = n.lr.anchor_of(&y).mul_vec(&a);
            let coeff = crate::exactlin::vec_sub(&xb, &ya);
            let fxy = fa.eval(&[&x, &y]);
            let general = rnab
                .add(&ma.mul(&psi.commutator(&n.nabla_of(&y))))
                .add(&mb.mul(&n.nabla_of(&x).commutator(psi)))
                .add(&n.module.act(&coeff).mul(&psi.mul(psi).sub(psi)))
                .sub(&n.module.act(&fxy).mul(psi));
            r.expect_matrix("general_form", &[s, t2], &lhs, &general);
            if psi_is_id {
                let short = rnab.sub(&n.module.act(&fxy));
                r.expect_matrix("identity_form", &[s, t2], &lhs, &short);
            } else if general != rnab.sub(&n.module.act(&fxy)) && s <= t2 {
                r.note(format!("psi is not the identity; the short form differs at ({s},{t2})"));
            }
        }
    }
    Ok(r)
}

/// `End(L̃,E) = End_A(E) ⊕ L̃` with its flat connection `ρ^!`.
#[derive(Clone, Debug)]
pub struct EndExtension {
    pub base: DLieAlgebra,
    pub connection: Connection,
    pub end_basis: Vec<RationalMatrix>,
    end_coords: Coordinates,
    pub dlie: DLieAlgebra,
    /// `ρ^!(φ,u) = φ + ρ(u)`.
    pub flat: Connection,
    /// `p_E(φ,u) = u`.
    pub projection: RationalMatrix,
    pub report: ValidationReport,
}

impl EndExtension {
    pub fn end_dim(&self) -> usize {
        self.end_basis.len()
    }

    pub fn end_coords(&self, m: &RationalMatrix) -> Option<Vec<Q>> {
        self.end_coords.coords(&m.to_vec())
    }

    pub fn end_is_commutative(&self) -> bool {
        let b = &self.end_basis;
        (0..b.len()).all(|i| (i + 1..b.len()).all(|j| b[i].commutator(&b[j]).is_zero()))
    }

    /// `([φ,ψ] + [ρ(u),ψ] − [ρ(v),φ] + R_ρ(u,v), [u,v])` from the stored data.
    pub fn formula_bracket(&self, z: &[Q], w: &[Q]) -> Vec<Q> {
        let e = self.end_dim();
        let phi = self.end_element(&z[..e]);
        let psi = self.end_element(&w[..e]);
        let (u, v) = (&z[e..], &w[e..]);
        let c = &self.connection;
        let endpart = phi
            .commutator(&psi)
            .add(&c.rho_of(u).commutator(&psi))
            .sub(&c.rho_of(v).commutator(&phi))
            .add(&c.curvature(u, v));
        let mut out = self.end_coords(&endpart).expect("bracket lands in End_A(E)");
        out.extend(self.base.bracket_vec(u, v));
        out
    }

    pub fn end_element(&self, coords: &[Q]) -> RationalMatrix {
        let d = self.connection.dim();
        let mut out = RationalMatrix::zeros(d, d);
        for (c, b) in coords.iter().zip(&self.end_basis) {
            if !c.is_zero() {
                out.add_scaled(c, b);
            }
        }
        out
    }
}

/// Builds `End(L̃,E)` for a connection with `ρ(D) = Id` and checks it.
pub fn build_end_extension(c: &Connection) -> Result<EndExtension> {
    let valid = validate_connection(c);
    if !valid.is_valid() {
        return Err(Error::Precondition(format!("invalid connection: {:?}", valid.failed_checks())));
    }
    if !c.rho_d_is_identity() {
        return Err(Error::Precondition("rho(D) is not the identity".into()));
    }
    let t = &c.source;
    let end_basis = end_a(&c.module);
    let vecs: Vec<Vec<Q>> = end_basis.iter().map(|b| b.to_vec()).collect();
    let end_coords = Coordinates::new(c.dim() * c.dim(), &vecs)?;
    let (e, big, n) = (end_basis.len(), t.dim(), t.alg_dim());
    let total = e + big;
    let to_end = |m: &RationalMatrix| -> Result<Vec<Q>> {
        end_coords
            .coords(&m.to_vec())
            .ok_or_else(|| Error::Structure("operator does not lie in End_A(E)".into()))
    };
    let mut bracket = vec![vec![zero_vec(total); total]; total];
    for p in 0..e {
        for q in 0..e {
            let v = to_end(&end_basis[p].commutator(&end_basis[q]))?;
            bracket[p][q][..e].clone_from_slice(&v);
        }
        for j in 0..big {
            let v = to_end(&c.rho[j].commutator(&end_basis[p]))?;
            // [(φ,0),(0,v)] = −[ρ(v), φ]
            for (s, x) in v.iter().enumerate() {
                bracket[p][e + j][s] = -x;
                bracket[e + j][p][s] = x.clone();
            }
        }
    }
    for i in 0..big {
        for j in 0..big {
            let v = to_end(&c.curvature_basis(i, j))?;
            bracket[e + i][e + j][..e].clone_from_slice(&v);
            bracket[e + i][e + j][e..].clone_from_slice(&t.bracket[i][j]);
        }
    }
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for a in 0..n {
        let mut lm = RationalMatrix::zeros(total, total);
        let mut rm = RationalMatrix::zeros(total, total);
        for p in 0..e {
            let v = to_end(&c.module.action[a].mul(&end_basis[p]))?;
            for (s, x) in v.iter().enumerate() {
                lm[(s, p)] = x.clone();
                rm[(s, p)] = x.clone();
            }
        }
        let (tl, tr) = (&t.carrier.action[a], t.carrier.right(a));
        for r in 0..big {
            for s in 0..big {
                lm[(e + r, e + s)] = tl[(r, s)].clone();
                rm[(e + r, e + s)] = tr[(r, s)].clone();
            }
        }
        left.push(lm);
        right.push(rm);
    }
    let carrier = AModule::new(total, left, Some(right))?;
    let zero = RationalMatrix::zeros(n, n);
    let anchor_pi = (0..total).map(|s| if s < e { zero.clone() } else { t.anchor_pi[s - e].clone() }).collect();
    let alpha = RationalMatrix::zeros(t.alpha.rows(), e).hstack(&t.alpha);
    let mut central = zero_vec(e);
    central.extend(t.central.iter().cloned());
    let dlie = DLieAlgebra {
        algebra: t.algebra.clone(),
        carrier,
        bracket,
        anchor_pi,
        alpha,
        base_cocycle: t.base_cocycle.clone(),
        central,
        provenance: Provenance::Other,
    };
    let flat_rho = end_basis.iter().cloned().chain(c.rho.iter().cloned()).collect();
    let flat = Connection::new(dlie.clone(), c.module.clone(), flat_rho)?;
    let projection = RationalMatrix::zeros(big, e).hstack(&RationalMatrix::identity(big));
    let mut ext = EndExtension {
        base: t.clone(),
        connection: c.clone(),
        end_basis,
        end_coords,
        dlie,
        flat,
        projection,
        report: ValidationReport::new("end_extension"),
    };
    let mut report = ValidationReport::new("end_extension");
    report.check("formula_bracket");
    for i in 0..total {
        for j in 0..total {
            let (z, w) = (unit_vec(total, i), unit_vec(total, j));
            report.expect_vec("formula_bracket", &[i, j], &ext.dlie.bracket_vec(&z, &w), &ext.formula_bracket(&z, &w));
        }
    }
    report.merge("dlie", validate_dlie(&ext.dlie));
    report.merge("flat_connection", validate_connection(&ext.flat));
    report.expect("flat", &[], ext.flat.is_flat(), "nonzero curvature".into(), "0".into());
    report.merge("projection", validate_dlie_map(&ext.dlie, t, &ext.projection));
    let kernel_dim = total - rank(&ext.projection);
    report.expect("projection_kernel", &[], kernel_dim == e, kernel_dim.to_string(), e.to_string());
    match canonical_quotient(&ext.dlie) {
        Ok(q) => {
            let expected = e + big - n;
            report.expect("quotient_dim", &[], q.lr.dim() == expected, q.lr.dim().to_string(), expected.to_string())
        }
        Err(err) => report.fail("quotient_dim", &[], err.to_string(), "a canonical quotient".into()),
    }
    ext.report = report;
    Ok(ext)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStatus {
    Split,
    NotSplit,
    Undecided,
}

impl std::fmt::Display for SplitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitStatus::Split => "split",
            SplitStatus::NotSplit => "not split",
            SplitStatus::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub status: SplitStatus,
    /// `P(u_i)` for each basis vector of `L̃`.
    pub correction: Option<Vec<RationalMatrix>>,
    /// `s(u) = (P(u), u)`.
    pub section: Option<RationalMatrix>,
    pub report: ValidationReport,
}

/// Linear constraints on `P: L̃ → End_A(E)` (in End coordinates, unknown
/// `P_i` at `i*e..(i+1)*e`): left and right P-linearity and `P(D) = 0`.
pub fn correction_constraints(x: &EndExtension) -> RationalMatrix {
    let t = &x.base;
    let (e, big, n) = (x.end_dim(), t.dim(), t.alg_dim());
    let unknowns = big * e;
    let mut rows = Vec::new();
    let left_end = |a: usize| -> RationalMatrix {
        let cols: Vec<Vec<Q>> = (0..e).map(|p| x.dlie.carrier.action[a].column(p)[..e].to_vec()).collect();
        RationalMatrix::from_columns(e, &cols).expect("dims")
    };
    let mut push = |combo: &[Q], a: Option<&RationalMatrix>, i: usize| {
        // Σ_k combo_k P_k − a·P_i = 0, one row per End coordinate
        for s in 0..e {
            let mut row = zero_vec(unknowns);
            for (k, c) in combo.iter().enumerate() {
                if !c.is_zero() {
                    row[k * e + s] += c;
                }
            }
            if let Some(am) = a {
                for q in 0..e {
                    row[i * e + q] -= &am[(s, q)];
                }
            }
            rows.push(row);
        }
    };
    for a in 0..n {
        let av = t.algebra.basis_element(a);
        let am = left_end(a);
        for i in 0..big {
            push(&t.act(&av, &unit_vec(big, i)), Some(&am), i);
            push(&t.act_right(&unit_vec(big, i), &av), Some(&am), i);
        }
    }
    push(&t.central, None, 0);
    RationalMatrix::from_rows(unknowns, rows).expect("uniform")
}

/// Decides whether `End(L̃,E) → L̃` splits when `End_A(E)` is commutative,
/// by solving the then linear flatness equation for a correction `P`.
pub fn split_extension(x: &EndExtension) -> Result<SplitResult> {
    let mut report = ValidationReport::new("split");
    if !x.end_is_commutative() {
        report.note("End_A(E) is not commutative; only candidate verification is available");
        return Ok(SplitResult { status: SplitStatus::Undecided, correction: None, section: None, report });
    }
    let t = &x.base;
    let c = &x.connection;
    let (e, big) = (x.end_dim(), t.dim());
    let unknowns = big * e;
    let constraints = correction_constraints(x);
    let ad: Vec<RationalMatrix> = (0..big)
        .map(|i| {
            let cols: Vec<Vec<Q>> = x
                .end_basis
                .iter()
                .map(|b| x.end_coords(&c.rho[i].commutator(b)).expect("End_A(E) is stable"))
                .collect();
            RationalMatrix::from_columns(e, &cols).expect("dims")
        })
        .collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for _ in 0..constraints.rows() {
        rhs.push(Q::zero());
    }
    for i in 0..big {
        for j in i + 1..big {
            let curv = x.end_coords(&c.curvature_basis(i, j)).expect("curvature lies in End_A(E)");
            for s in 0..e {
                let mut row = zero_vec(unknowns);
                for q in 0..e {
                    row[j * e + q] += &ad[i][(s, q)];
                    row[i * e + q] -= &ad[j][(s, q)];
                }
                for (k, coef) in t.bracket[i][j].iter().enumerate() {
                    if !coef.is_zero() {
                        row[k * e + s] -= coef;
                    }
                }
                rows.push(row);
                rhs.push(-&curv[s]);
            }
        }
    }
    let system = constraints.vstack(&RationalMatrix::from_rows(unknowns, rows)?);
    match solve_affine(&system, &rhs)? {
        None => {
            report.note("the flatness system for a correction has no solution");
            Ok(SplitResult { status: SplitStatus::NotSplit, correction: None, section: None, report })
        }
        Some(sol) => {
            let correction: Vec<RationalMatrix> =
                (0..big).map(|i| x.end_element(&sol.particular[i * e..(i + 1) * e])).collect();
            let check = verify_splitting(x, &correction);
            let section = splitting_section(x, &correction);
            report.merge("verify", check);
            Ok(SplitResult { status: SplitStatus::Split, correction: Some(correction), section: Some(section), report })
        }
    }
}

/// `s(u) = (P(u), u)` as a matrix.
pub fn splitting_section(x: &EndExtension, correction: &[RationalMatrix]) -> RationalMatrix {
    let (e, big) = (x.end_dim(), x.base.dim());
    let mut s = RationalMatrix::zeros(e + big, big);
    for (i, p) in correction.iter().enumerate() {
        let mut col = x.end_coords(p).unwrap_or_else(|| zero_vec(e));
        col.extend(unit_vec(big, i));
        s.set_column(i, &col);
    }
    s
}

/// Checks a candidate correction: values in `End_A(E)`, `ρ + P` a flat
/// connection, and `s(u) = (P(u), u)` a D-Lie section of `p_E`.
pub fn verify_splitting(x: &EndExtension, correction: &[RationalMatrix]) -> ValidationReport {
    let mut r = ValidationReport::new("splitting");
    let big = x.base.dim();
    if correction.len() != big {
        r.fail("shape", &[], correction.len().to_string(), big.to_string());
        return r;
    }
    r.check("in_end_a");
    for (i, p) in correction.iter().enumerate() {
        r.expect("in_end_a", &[i], x.end_coords(p).is_some(), format!("{p:?}"), "in End_A(E)".into());
    }
    let rho: Vec<RationalMatrix> = x.connection.rho.iter().zip(correction).map(|(a, b)| a.add(b)).collect();
    match Connection::new(x.base.clone(), x.connection.module.clone(), rho) {
        Ok(shifted) => {
            r.merge("connection", validate_connection(&shifted));
            r.expect("rho_d", &[], shifted.rho_d_is_identity(), "rho'(D) != Id".into(), "Id".into());
            r.check("flat");
            for i in 0..big {
                for j in i + 1..big {
                    let k = shifted.curvature_basis(i, j);
                    r.expect_matrix("flat", &[i, j], &k, &RationalMatrix::zeros(k.rows(), k.cols()));
                }
            }
        }
        Err(err) => r.fail("connection", &[], err.to_string(), "a connection".into()),
    }
    let s = splitting_section(x, correction);
    r.merge("section", validate_dlie_map(&x.base, &x.dlie, &s));
    r.expect_matrix("projection", &[], &x.projection.mul(&s), &RationalMatrix::identity(big));
    r
}

/// `I(ρ) ⊆ P`, the elements of the principal parts acting as zero on `ρ`.
#[derive(Clone, Debug)]
pub struct AnnihilatorIdeal {
    pub p_dim: usize,
    pub basis: Vec<Vec<Q>>,
    pub action_rank: usize,
    pub report: ValidationReport,
}

pub fn annihilator_ideal(c: &Connection) -> Result<AnnihilatorIdeal> {
    let alg = &c.source.algebra;
    let pp = build_principal_parts(alg);
    let d = c.dim();
    let columns: Vec<Vec<Q>> = (0..pp.dim)
        .map(|r| {
            let (i, j) = pp.representative(r);
            let (a, b) = (&c.module.action[i], &c.module.action[j]);
            c.rho.iter().flat_map(|m| a.mul(m).mul(b).to_vec()).collect()
        })
        .collect();
    let rows = c.rho.len() * d * d;
    let action = RationalMatrix::from_columns(rows, &columns)?;
    let basis = if rows == 0 { (0..pp.dim).map(|r| unit_vec(pp.dim, r)).collect() } else { kernel(&action) };
    let action_rank = rank(&action);
    let sub = Subspace::span(pp.dim, &basis);
    let mut report = ValidationReport::new("annihilator_ideal");
    report.check("ideal");
    for (k, v) in basis.iter().enumerate() {
        for r in 0..pp.dim {
            let prod = pp.algebra.mul(&unit_vec(pp.dim, r), v);
            report.expect("ideal", &[k, r], sub.contains(&prod), crate::exactlin::fmt_vec(&prod), "in I(rho)".into());
        }
    }
    report.expect(
        "rank_nullity",
        &[],
        basis.len() + action_rank == pp.dim,
        format!("{} + {}", basis.len(), action_rank),
        pp.dim.to_string(),
    );
    Ok(AnnihilatorIdeal { p_dim: pp.dim, basis, action_rank, report })
}
