//! Lie–Rinehart algebras, flat connections, and the low-degree part of the
//! Lie–Rinehart cochain complex with A-multilinear alternating cochains.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactlin::{
    axpy, fmt_vec, is_zero_vec, kernel, solve_affine, unit_vec, vec_sub, zero_vec, Coordinates,
    RationalMatrix, Subspace, Q,
};
use crate::finalg::{compute_derivations, AModule, Derivations, FiniteAlgebra};
use crate::report::ValidationReport;

/// `(L, α)`: a left A-module with a k-Lie bracket on its ℚ-basis and an
/// anchor sending each basis vector to a derivation matrix of A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieRinehartAlgebra {
    pub algebra: FiniteAlgebra,
    pub carrier: AModule,
    pub bracket: Vec<Vec<Vec<Q>>>,
    pub anchor: Vec<RationalMatrix>,
}

impl LieRinehartAlgebra {
    pub fn new(
        algebra: FiniteAlgebra,
        carrier: AModule,
        bracket: Vec<Vec<Vec<Q>>>,
        anchor: Vec<RationalMatrix>,
    ) -> Result<Self> {
        let m = carrier.dim;
        let n = algebra.dim();
        if carrier.algebra_dim() != n {
            return Err(Error::Dimension(format!(
                "carrier has {} action matrices for an algebra of dimension {n}",
                carrier.algebra_dim()
            )));
        }
        if bracket.len() != m || bracket.iter().any(|r| r.len() != m || r.iter().any(|v| v.len() != m)) {
            return Err(Error::Dimension(format!("bracket must be {m}x{m}x{m}")));
        }
        if anchor.len() != m || anchor.iter().any(|a| a.rows() != n || a.cols() != n) {
            return Err(Error::Dimension(format!("anchor must give {m} matrices of size {n}x{n}")));
        }
        Ok(Self { algebra, carrier: AModule { right_action: None, ..carrier }, bracket, anchor })
    }

    /// `Der_k(A)` with the identity anchor.
    pub fn derivations(alg: &FiniteAlgebra) -> Self {
        let der = compute_derivations(alg);
        Self::from_derivation_data(alg, &der)
    }

    pub fn from_derivation_data(alg: &FiniteAlgebra, der: &Derivations) -> Self {
        let r = der.dim();
        let basis = der.basis();
        let bracket = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        der.coords(&basis[i].matrix.commutator(&basis[j].matrix))
                            .expect("Der is closed under commutator")
                    })
                    .collect()
            })
            .collect();
        let carrier = AModule { dim: r, action: der.a_action().to_vec(), right_action: None };
        let anchor = basis.iter().map(|d| d.matrix.clone()).collect();
        Self { algebra: alg.clone(), carrier, bracket, anchor }
    }

    /// The A-submodule of `Der_k(A)` spanned by `generators`, with the
    /// inclusion anchor. Fails if the span is not closed under the bracket.
    pub fn span_of_derivations(alg: &FiniteAlgebra, generators: &[RationalMatrix]) -> Result<Self> {
        let n = alg.dim();
        let mut vecs = Vec::new();
        for g in generators {
            if g.rows() != n || g.cols() != n {
                return Err(Error::Dimension(format!("generator must be {n}x{n}")));
            }
            for i in 0..n {
                vecs.push(alg.basis_mult(i).mul(g).to_vec());
            }
        }
        let sub = Subspace::span(n * n, &vecs);
        let basis: Vec<RationalMatrix> =
            sub.basis().iter().map(|v| RationalMatrix::from_vec(n, n, v.clone())).collect();
        let coords = Coordinates::new(n * n, sub.basis())?;
        let m = basis.len();
        let to_coords = |mat: &RationalMatrix, what: &str| -> Result<Vec<Q>> {
            coords
                .coords(&mat.to_vec())
                .ok_or_else(|| Error::Structure(format!("span is not closed under {what}")))
        };
        let mut bracket = vec![vec![zero_vec(m); m]; m];
        for i in 0..m {
            for j in 0..m {
                bracket[i][j] = to_coords(&basis[i].commutator(&basis[j]), "the bracket")?;
            }
        }
        let mut action = Vec::new();
        for i in 0..n {
            let cols = basis
                .iter()
                .map(|b| to_coords(&alg.basis_mult(i).mul(b), "the A-action"))
                .collect::<Result<Vec<_>>>()?;
            action.push(RationalMatrix::from_columns(m, &cols)?);
        }
        let carrier = AModule { dim: m, action, right_action: None };
        let out = Self { algebra: alg.clone(), carrier, bracket, anchor: basis };
        Ok(out)
    }

    /// The action algebra `A ⊗ g` of a Lie algebra `g` of derivations, with
    /// basis `e_k ⊗ X_i` at index `i*n + k`, bracket
    /// `[a⊗X, b⊗Y] = ab⊗[X,Y] + aX(b)⊗Y − bY(a)⊗X` and anchor `a⊗X ↦ aX`.
    pub fn action_algebra(alg: &FiniteAlgebra, generators: &[RationalMatrix]) -> Result<Self> {
        let n = alg.dim();
        let r = generators.len();
        let vecs: Vec<Vec<Q>> = generators.iter().map(|g| g.to_vec()).collect();
        if generators.iter().any(|g| g.rows() != n || g.cols() != n) {
            return Err(Error::Dimension(format!("generators must be {n}x{n}")));
        }
        let coords = Coordinates::new(n * n, &vecs)?;
        let mut structure = vec![vec![zero_vec(r); r]; r];
        for i in 0..r {
            for j in 0..r {
                structure[i][j] = coords
                    .coords(&generators[i].commutator(&generators[j]).to_vec())
                    .ok_or_else(|| Error::Structure("generators do not span a Lie algebra".into()))?;
            }
        }
        let carrier = AModule::free(alg, r);
        let m = carrier.dim;
        let idx = |i: usize, k: usize| i * n + k;
        let mut bracket = vec![vec![zero_vec(m); m]; m];
        for i in 0..r {
            for k in 0..n {
                for j in 0..r {
                    for l in 0..n {
                        let out = &mut bracket[idx(i, k)][idx(j, l)];
                        let ab = alg.basis_product(k, l);
                        for (t, c) in structure[i][j].iter().enumerate() {
                            for (p, x) in ab.iter().enumerate() {
                                out[idx(t, p)] += c * x;
                            }
                        }
                        // e_k X_i(e_l) ⊗ X_j − e_l X_j(e_k) ⊗ X_i
                        let xb = alg.mul(&alg.basis_element(k), &generators[i].column(l));
                        let ya = alg.mul(&alg.basis_element(l), &generators[j].column(k));
                        for p in 0..n {
                            out[idx(j, p)] += &xb[p];
                            out[idx(i, p)] -= &ya[p];
                        }
                    }
                }
            }
        }
        let anchor = (0..m).map(|s| alg.basis_mult(s % n).mul(&generators[s / n])).collect();
        Ok(Self { algebra: alg.clone(), carrier, bracket, anchor })
    }

    /// Free module `A^rank` with zero bracket and zero anchor.
    pub fn abelian(alg: &FiniteAlgebra, rank: usize) -> Self {
        let carrier = AModule::free(alg, rank);
        let m = carrier.dim;
        let n = alg.dim();
        Self {
            algebra: alg.clone(),
            carrier,
            bracket: vec![vec![zero_vec(m); m]; m],
            anchor: vec![RationalMatrix::zeros(n, n); m],
        }
    }

    pub fn dim(&self) -> usize {
        self.carrier.dim
    }

    pub fn alg_dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Bilinear extension of the bracket.
    pub fn bracket_vec(&self, u: &[Q], v: &[Q]) -> Vec<Q> {
        let m = self.dim();
        let mut out = zero_vec(m);
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

    /// Derivation matrix `α(u)`.
    pub fn anchor_of(&self, u: &[Q]) -> RationalMatrix {
        let n = self.alg_dim();
        let mut out = RationalMatrix::zeros(n, n);
        for (c, a) in u.iter().zip(&self.anchor) {
            if !c.is_zero() {
                out.add_scaled(c, a);
            }
        }
        out
    }

    /// `a · u` in the carrier.
    pub fn act(&self, a: &[Q], u: &[Q]) -> Vec<Q> {
        self.carrier.act(a).mul_vec(u)
    }

    /// Anchor images in the coordinates of a derivation basis.
    pub fn anchor_coords(&self, der: &Derivations) -> Result<RationalMatrix> {
        let cols = self
            .anchor
            .iter()
            .enumerate()
            .map(|(i, a)| {
                der.coords(a)
                    .ok_or_else(|| Error::Structure(format!("anchor of basis vector {i} is not a derivation")))
            })
            .collect::<Result<Vec<_>>>()?;
        RationalMatrix::from_columns(der.dim(), &cols)
    }
}

/// Checks the carrier module axioms, antisymmetry, Jacobi, that the anchor
/// is an A-linear Lie map, and the anchor law `[u, cv] = c[u,v] + α(u)(c)v`.
pub fn validate_lr(l: &LieRinehartAlgebra) -> ValidationReport {
    let mut r = ValidationReport::new("lie_rinehart");
    let alg = &l.algebra;
    let (m, n) = (l.dim(), l.alg_dim());
    r.merge("carrier", l.carrier.validate(alg));
    for name in ["antisymmetry", "jacobi", "anchor_lie", "anchor_a_linear", "anchor_law", "anchor_derivation"] {
        r.check(name);
    }
    check_lie_bracket(&mut r, &l.bracket);
    let e = |i: usize| unit_vec(m, i);
    for i in 0..m {
        r.merge(
            "anchor_derivation",
            crate::finalg::Derivation::new(l.anchor[i].clone()).validate(alg),
        );
        for j in i + 1..m {
            let lhs = l.anchor_of(&l.bracket[i][j]);
            let rhs = l.anchor[i].commutator(&l.anchor[j]);
            r.expect_matrix("anchor_lie", &[i, j], &lhs, &rhs);
        }
    }
    for a in 0..n {
        let av = alg.basis_element(a);
        for i in 0..m {
            let lhs = l.anchor_of(&l.act(&av, &e(i)));
            let rhs = alg.mult_matrix(&av).mul(&l.anchor[i]);
            r.expect_matrix("anchor_a_linear", &[a, i], &lhs, &rhs);
        }
    }
    for i in 0..m {
        for j in 0..m {
            for c in 0..n {
                let cv = alg.basis_element(c);
                let lhs = l.bracket_vec(&e(i), &l.act(&cv, &e(j)));
                let mut rhs = l.act(&cv, &l.bracket[i][j]);
                let deriv = l.anchor[i].mul_vec(&cv);
                axpy(&mut rhs, &Q::one(), &l.act(&deriv, &e(j)));
                r.expect_vec("anchor_law", &[i, j, c], &lhs, &rhs);
            }
        }
    }
    r
}

/// Antisymmetry on basis pairs and Jacobi on basis triples of a bracket
/// given by structure constants.
pub fn check_lie_bracket(r: &mut ValidationReport, bracket: &[Vec<Vec<Q>>]) {
    let m = bracket.len();
    r.check("antisymmetry");
    r.check("jacobi");
    for i in 0..m {
        for j in i..m {
            let mut s = bracket[i][j].clone();
            axpy(&mut s, &Q::one(), &bracket[j][i]);
            r.expect_vec("antisymmetry", &[i, j], &s, &zero_vec(m));
        }
    }
    let br = |u: usize, v: &[Q]| {
        let mut out = zero_vec(m);
        for (j, c) in v.iter().enumerate() {
            if !c.is_zero() {
                axpy(&mut out, c, &bracket[u][j]);
            }
        }
        out
    };
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let mut s = br(i, &bracket[j][k]);
                axpy(&mut s, &Q::one(), &br(j, &bracket[k][i]));
                axpy(&mut s, &Q::one(), &br(k, &bracket[i][j]));
                r.expect_vec("jacobi", &[i, j, k], &s, &zero_vec(m));
            }
        }
    }
}

/// Checks that `matrix` (columns = images of basis vectors) is an A-linear
/// Lie map `L → L′` with `α′ ∘ ψ = α`.
pub fn validate_lr_map(
    source: &LieRinehartAlgebra,
    target: &LieRinehartAlgebra,
    matrix: &RationalMatrix,
) -> ValidationReport {
    let mut r = ValidationReport::new("lie_rinehart_map");
    if matrix.rows() != target.dim() || matrix.cols() != source.dim() || source.algebra != target.algebra {
        r.fail(
            "shape",
            &[],
            format!("{}x{}", matrix.rows(), matrix.cols()),
            format!("{}x{} over the same algebra", target.dim(), source.dim()),
        );
        return r;
    }
    r.check("a_linear");
    r.check("lie");
    r.check("anchor");
    let m = source.dim();
    let n = source.alg_dim();
    for a in 0..n {
        let av = source.algebra.basis_element(a);
        for i in 0..m {
            let u = unit_vec(m, i);
            let lhs = matrix.mul_vec(&source.act(&av, &u));
            let rhs = target.act(&av, &matrix.mul_vec(&u));
            r.expect_vec("a_linear", &[a, i], &lhs, &rhs);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let lhs = matrix.mul_vec(&source.bracket[i][j]);
            let rhs = target.bracket_vec(&matrix.column(i), &matrix.column(j));
            r.expect_vec("lie", &[i, j], &lhs, &rhs);
        }
        r.expect_matrix("anchor", &[i], &target.anchor_of(&matrix.column(i)), &source.anchor[i]);
    }
    r
}

/// A left A-module `M` with an L-connection `∇`, given on the basis of L.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatConnectionModule {
    pub module: AModule,
    pub nabla: Vec<RationalMatrix>,
}

impl FlatConnectionModule {
    pub fn new(module: AModule, nabla: Vec<RationalMatrix>) -> Result<Self> {
        if nabla.iter().any(|m| m.rows() != module.dim || m.cols() != module.dim) {
            return Err(Error::Dimension(format!("connection operators must be {0}x{0}", module.dim)));
        }
        Ok(Self { module, nabla })
    }

    /// `A` with `∇(u) = α(u)`.
    pub fn trivial(l: &LieRinehartAlgebra) -> Self {
        let mut module = AModule::regular(&l.algebra);
        module.right_action = None;
        Self { module, nabla: l.anchor.clone() }
    }

    pub fn dim(&self) -> usize {
        self.module.dim
    }

    pub fn nabla_of(&self, u: &[Q]) -> RationalMatrix {
        let d = self.dim();
        let mut out = RationalMatrix::zeros(d, d);
        for (c, m) in u.iter().zip(&self.nabla) {
            if !c.is_zero() {
                out.add_scaled(c, m);
            }
        }
        out
    }
}

/// Connection law, A-linearity in the Lie argument, and flatness.
pub fn validate_flat_connection(l: &LieRinehartAlgebra, c: &FlatConnectionModule) -> ValidationReport {
    let mut r = ValidationReport::new("flat_connection");
    if c.nabla.len() != l.dim() || c.module.algebra_dim() != l.alg_dim() {
        r.fail("shape", &[], format!("{} operators", c.nabla.len()), format!("{}", l.dim()));
        return r;
    }
    r.merge("module", c.module.validate(&l.algebra));
    r.check("connection_law");
    r.check("a_linear");
    r.check("flat");
    let (m, n) = (l.dim(), l.alg_dim());
    for i in 0..m {
        for a in 0..n {
            let am = &c.module.action[a];
            let lhs = c.nabla[i].mul(am).sub(&am.mul(&c.nabla[i]));
            let rhs = c.module.act(&l.anchor[i].column(a));
            r.expect_matrix("connection_law", &[i, a], &lhs, &rhs);
            let au = l.act(&l.algebra.basis_element(a), &unit_vec(m, i));
            r.expect_matrix("a_linear", &[a, i], &c.nabla_of(&au), &am.mul(&c.nabla[i]));
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let lhs = c.nabla_of(&l.bracket[i][j]);
            let rhs = c.nabla[i].commutator(&c.nabla[j]);
            r.expect_matrix("flat", &[i, j], &lhs, &rhs);
        }
    }
    r
}

/// Strictly increasing `p`-tuples from `0..m` in lexicographic order.
pub fn increasing_tuples(m: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, p, &mut Vec::new(), &mut out);
    out
}

fn tuple_index(m: usize, t: &[usize]) -> usize {
    // rank of an increasing tuple among increasing tuples of the same length
    let p = t.len();
    let mut idx = 0;
    let mut prev = 0;
    for (pos, &x) in t.iter().enumerate() {
        for y in prev..x {
            idx += binom(m - y - 1, p - pos - 1);
        }
        prev = x + 1;
    }
    idx
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// An alternating `p`-cochain on a carrier of dimension `ldim` with values in
/// a module of dimension `mdim`, stored on increasing basis tuples.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cochain {
    pub degree: usize,
    pub ldim: usize,
    pub mdim: usize,
    values: Vec<Vec<Q>>,
}

impl Cochain {
    pub fn zero(degree: usize, ldim: usize, mdim: usize) -> Self {
        let count = binom(ldim, degree);
        Self { degree, ldim, mdim, values: vec![zero_vec(mdim); count] }
    }

    /// Builds a cochain from its values on increasing tuples.
    pub fn from_fn(degree: usize, ldim: usize, mdim: usize, mut f: impl FnMut(&[usize]) -> Vec<Q>) -> Self {
        let values = increasing_tuples(ldim, degree).iter().map(|t| f(t)).collect();
        Self { degree, ldim, mdim, values }
    }

    /// Values on increasing tuples, in lexicographic tuple order.
    pub fn from_values(degree: usize, ldim: usize, mdim: usize, values: Vec<Vec<Q>>) -> Result<Self> {
        if values.len() != binom(ldim, degree) || values.iter().any(|v| v.len() != mdim) {
            return Err(Error::Dimension(format!(
                "a degree {degree} cochain on dimension {ldim} needs {} values of length {mdim}",
                binom(ldim, degree)
            )));
        }
        Ok(Self { degree, ldim, mdim, values })
    }

    pub fn values(&self) -> &[Vec<Q>] {
        &self.values
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        increasing_tuples(self.ldim, self.degree)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| is_zero_vec(v))
    }

    /// Value on an arbitrary basis tuple, using the alternating property.
    pub fn get(&self, t: &[usize]) -> Vec<Q> {
        match sorted_index(self.ldim, t) {
            None => zero_vec(self.mdim),
            Some((1, idx)) => self.values[idx].clone(),
            Some((_, idx)) => self.values[idx].iter().map(|x| -x).collect(),
        }
    }

    /// Multilinear extension to arbitrary carrier vectors.
    pub fn eval(&self, args: &[&[Q]]) -> Vec<Q> {
        assert_eq!(args.len(), self.degree, "wrong number of arguments");
        let mut out = zero_vec(self.mdim);
        let mut idx = vec![0usize; self.degree];
        self.eval_rec(args, 0, Q::one(), &mut idx, &mut out);
        out
    }

    fn eval_rec(&self, args: &[&[Q]], pos: usize, coeff: Q, idx: &mut Vec<usize>, out: &mut [Q]) {
        if pos == args.len() {
            axpy(out, &coeff, &self.get(idx));
            return;
        }
        for (i, c) in args[pos].iter().enumerate() {
            if c.is_zero() || idx[..pos].contains(&i) {
                continue;
            }
            idx[pos] = i;
            self.eval_rec(args, pos + 1, &coeff * c, idx, out);
        }
    }

    pub fn to_vec(&self) -> Vec<Q> {
        self.values.iter().flatten().cloned().collect()
    }

    pub fn from_vec(degree: usize, ldim: usize, mdim: usize, v: &[Q]) -> Self {
        let values = v.chunks(mdim.max(1)).map(|c| c.to_vec()).collect::<Vec<_>>();
        let values = if mdim == 0 { vec![Vec::new(); binom(ldim, degree)] } else { values };
        Self { degree, ldim, mdim, values }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, Q::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -Q::one())
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self {
            values: self.values.iter().map(|v| v.iter().map(|x| x * s).collect()).collect(),
            ..self.clone()
        }
    }

    fn combine(&self, other: &Self, s: Q) -> Self {
        assert_eq!((self.degree, self.ldim, self.mdim), (other.degree, other.ldim, other.mdim));
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            axpy(a, &s, b);
        }
        out
    }

    /// Linear map of a degree-1 cochain as a `mdim × ldim` matrix.
    pub fn as_matrix(&self) -> RationalMatrix {
        assert_eq!(self.degree, 1);
        RationalMatrix::from_columns(self.mdim, &self.values).expect("dims")
    }

    pub fn from_matrix(m: &RationalMatrix) -> Self {
        Self { degree: 1, ldim: m.cols(), mdim: m.rows(), values: m.columns() }
    }
}

impl std::fmt::Display for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .tuples()
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| !is_zero_vec(v))
            .map(|(t, v)| {
                let idx: Vec<String> = t.iter().map(|i| i.to_string()).collect();
                format!("({}) -> {}", idx.join(","), fmt_vec(v))
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join("; "))
        }
    }
}

/// Checks A-multilinearity: `c(a·u_i, u_j, …) = a·c(u_i, u_j, …)`.
pub fn check_cochain(l: &LieRinehartAlgebra, m: &FlatConnectionModule, c: &Cochain) -> ValidationReport {
    let mut r = ValidationReport::new("cochain");
    if c.ldim != l.dim() || c.mdim != m.dim() {
        r.fail("shape", &[], format!("{}->{}", c.ldim, c.mdim), format!("{}->{}", l.dim(), m.dim()));
        return r;
    }
    r.check("a_multilinear");
    let ld = l.dim();
    for a in 0..l.alg_dim() {
        let av = l.algebra.basis_element(a);
        for t in a_linearity_tuples(ld, c.degree) {
            let first = l.act(&av, &unit_vec(ld, t[0]));
            let rest: Vec<Vec<Q>> = t[1..].iter().map(|&i| unit_vec(ld, i)).collect();
            let mut args: Vec<&[Q]> = vec![&first];
            args.extend(rest.iter().map(|v| v.as_slice()));
            let lhs = c.eval(&args);
            let rhs = m.module.action[a].mul_vec(&c.get(&t));
            let mut idx = vec![a];
            idx.extend(&t);
            r.expect_vec("a_multilinear", &idx, &lhs, &rhs);
        }
    }
    r
}

// tuples (i, rest…) with rest increasing and i arbitrary; enough for alternating maps
fn a_linearity_tuples(m: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for rest in increasing_tuples(m, p - 1) {
        for i in 0..m {
            let mut t = vec![i];
            t.extend(&rest);
            out.push(t);
        }
    }
    out
}

/// The Lie–Rinehart differential `d: C^p → C^{p+1}` for `p ≤ 2`.
pub fn lr_differential(l: &LieRinehartAlgebra, m: &FlatConnectionModule, c: &Cochain) -> Result<Cochain> {
    if c.ldim != l.dim() || c.mdim != m.dim() {
        return Err(Error::Dimension("cochain does not match the algebra and module".into()));
    }
    let ld = l.dim();
    let e = |i: usize| unit_vec(ld, i);
    let nab = |i: usize, v: &[Q]| m.nabla[i].mul_vec(v);
    match c.degree {
        0 => Ok(Cochain::from_fn(1, ld, c.mdim, |t| nab(t[0], &c.values[0]))),
        1 => Ok(Cochain::from_fn(2, ld, c.mdim, |t| {
            let (i, j) = (t[0], t[1]);
            let mut v = nab(i, &c.get(&[j]));
            axpy(&mut v, &-Q::one(), &nab(j, &c.get(&[i])));
            axpy(&mut v, &-Q::one(), &c.eval(&[&l.bracket[i][j]]));
            v
        })),
        2 => Ok(Cochain::from_fn(3, ld, c.mdim, |t| {
            let (i, j, k) = (t[0], t[1], t[2]);
            let (ei, ej, ek) = (e(i), e(j), e(k));
            let mut v = nab(i, &c.get(&[j, k]));
            axpy(&mut v, &-Q::one(), &nab(j, &c.get(&[i, k])));
            axpy(&mut v, &Q::one(), &nab(k, &c.get(&[i, j])));
            axpy(&mut v, &-Q::one(), &c.eval(&[&l.bracket[i][j], &ek]));
            axpy(&mut v, &Q::one(), &c.eval(&[&l.bracket[i][k], &ej]));
            axpy(&mut v, &-Q::one(), &c.eval(&[&l.bracket[j][k], &ei]));
            v
        })),
        p => Err(Error::Unsupported(format!("differential on degree {p} cochains"))),
    }
}

/// Result of a cocycle test with the first failing basis triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleCheck {
    pub is_cocycle: bool,
    pub witness: Option<(Vec<usize>, Vec<Q>)>,
}

pub fn is_cocycle(l: &LieRinehartAlgebra, m: &FlatConnectionModule, f: &Cochain) -> Result<CocycleCheck> {
    let df = lr_differential(l, m, f)?;
    let witness = df
        .tuples()
        .into_iter()
        .zip(df.values.iter())
        .find(|(_, v)| !is_zero_vec(v))
        .map(|(t, v)| (t, v.clone()));
    Ok(CocycleCheck { is_cocycle: witness.is_none(), witness })
}

/// Pulls a cochain on `Der_k(A)` back along the anchor: `f^α(u,…) = f(α u, …)`.
pub fn pullback_cochain(l: &LieRinehartAlgebra, der: &Derivations, f: &Cochain) -> Result<Cochain> {
    if f.ldim != der.dim() {
        return Err(Error::Dimension(format!(
            "cochain lives on dimension {}, derivations have dimension {}",
            f.ldim,
            der.dim()
        )));
    }
    let coords = l.anchor_coords(der)?;
    Ok(Cochain::from_fn(f.degree, l.dim(), f.mdim, |t| {
        let args: Vec<Vec<Q>> = t.iter().map(|&i| coords.column(i)).collect();
        let refs: Vec<&[Q]> = args.iter().map(|v| v.as_slice()).collect();
        f.eval(&refs)
    }))
}

/// Pullback of a 2-cocycle; the result is asserted to be a cocycle.
pub fn pullback_cocycle(l: &LieRinehartAlgebra, der: &Derivations, f: &Cochain) -> Result<Cochain> {
    let out = pullback_cochain(l, der, f)?;
    let trivial = FlatConnectionModule::trivial(l);
    if f.degree == 2 && !is_cocycle(l, &trivial, &out)?.is_cocycle {
        return Err(Error::Precondition("pulled-back cochain is not a cocycle".into()));
    }
    Ok(out)
}

/// A ℚ-basis of the A-multilinear alternating `p`-cochains, in canonical form.
pub fn cochain_space(l: &LieRinehartAlgebra, m: &FlatConnectionModule, p: usize) -> Vec<Cochain> {
    let ld = l.dim();
    let md = m.dim();
    let count = binom(ld, p);
    let unknowns = count * md;
    let mut rows = Vec::new();
    for a in 0..l.alg_dim() {
        let av = l.algebra.basis_element(a);
        for t in a_linearity_tuples(ld, p) {
            let first = l.act(&av, &unit_vec(ld, t[0]));
            // coefficient rows of c(a·u_{t0}, rest) − a·c(t) for each output component
            let mut block = vec![zero_vec(unknowns); md];
            for (k, ck) in first.iter().enumerate() {
                if ck.is_zero() {
                    continue;
                }
                let mut tt = t.clone();
                tt[0] = k;
                if let Some((sign, idx)) = sorted_index(ld, &tt) {
                    for (r, row) in block.iter_mut().enumerate() {
                        row[idx * md + r] += ck * Q::from_integer(sign.into());
                    }
                }
            }
            if let Some((sign, idx)) = sorted_index(ld, &t) {
                let act = &m.module.action[a];
                for (r, row) in block.iter_mut().enumerate() {
                    for s in 0..md {
                        row[idx * md + s] -= &act[(r, s)] * Q::from_integer(sign.into());
                    }
                }
            }
            rows.extend(block.into_iter().filter(|r| !is_zero_vec(r)));
        }
    }
    let basis = if rows.is_empty() {
        (0..unknowns).map(|i| unit_vec(unknowns, i)).collect()
    } else {
        kernel(&RationalMatrix::from_rows(unknowns, rows).expect("uniform"))
    };
    basis.iter().map(|v| Cochain::from_vec(p, ld, md, v)).collect()
}

fn sorted_index(m: usize, t: &[usize]) -> Option<(i32, usize)> {
    let mut s = t.to_vec();
    let mut sign = 1;
    for i in 0..s.len() {
        for j in 0..s.len().saturating_sub(1 + i) {
            if s[j] > s[j + 1] {
                s.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if s.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, tuple_index(m, &s)))
}

/// A solution of `d¹φ = target` inside the span of a family of 1-cochains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoboundarySolution {
    /// Particular solution with free parameters set to zero.
    pub phi: Cochain,
    /// Coefficients of `phi` in the family.
    pub coefficients: Vec<Q>,
    /// Canonical basis of the family combinations `φ` with `d¹φ = 0`.
    pub cocycles: Vec<Cochain>,
}

/// Solves `d¹(Σ t_b family_b) = target` exactly.
pub fn solve_in_family(
    l: &LieRinehartAlgebra,
    m: &FlatConnectionModule,
    family: &[Cochain],
    target: &Cochain,
) -> Result<Option<CoboundarySolution>> {
    if target.degree != 2 || target.ldim != l.dim() || target.mdim != m.dim() {
        return Err(Error::Input("target must be a 2-cochain on the given algebra and module".into()));
    }
    let images = family.iter().map(|c| lr_differential(l, m, c).map(|d| d.to_vec())).collect::<Result<Vec<_>>>()?;
    let rows = target.to_vec().len();
    let phi_from = |coeffs: &[Q]| {
        let mut phi = Cochain::zero(1, l.dim(), m.dim());
        for (c, b) in coeffs.iter().zip(family) {
            if !c.is_zero() {
                phi = phi.add(&b.scale(c));
            }
        }
        phi
    };
    if family.is_empty() {
        if target.is_zero() {
            return Ok(Some(CoboundarySolution {
                phi: Cochain::zero(1, l.dim(), m.dim()),
                coefficients: Vec::new(),
                cocycles: Vec::new(),
            }));
        }
        return Ok(None);
    }
    let mat = RationalMatrix::from_columns(rows, &images)?;
    let Some(sol) = solve_affine(&mat, &target.to_vec())? else {
        return Ok(None);
    };
    let cocycles = sol.kernel.iter().map(|k| phi_from(k)).collect();
    Ok(Some(CoboundarySolution { phi: phi_from(&sol.particular), coefficients: sol.particular, cocycles }))
}

/// Decides whether `g − f ∈ d¹(C¹)`; on success the solution `φ₁` satisfies
/// `f + d¹φ₁ = g` and `cocycles` is a basis of `Z¹`.
pub fn coboundary_solve(
    l: &LieRinehartAlgebra,
    m: &FlatConnectionModule,
    f: &Cochain,
    g: &Cochain,
) -> Result<Option<CoboundarySolution>> {
    let shape = |c: &Cochain| (c.degree, c.ldim, c.mdim);
    if shape(f) != shape(g) {
        return Err(Error::Input("cocycles have different parents or coefficients".into()));
    }
    if shape(f) != (2, l.dim(), m.dim()) {
        return Err(Error::Input("cocycles do not live on the given algebra and module".into()));
    }
    let family = cochain_space(l, m, 1);
    solve_in_family(l, m, &family, &g.sub(f))
}

/// Dimensions of the low-degree cochain, cocycle and coboundary spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CohomologyDims {
    pub c1: usize,
    pub z1: usize,
    pub c2: usize,
    pub z2: usize,
    pub b2: usize,
}

impl CohomologyDims {
    pub fn h1(&self) -> usize {
        self.z1
    }

    pub fn h2(&self) -> usize {
        self.z2 - self.b2
    }
}

/// Computes `dim C¹, Z¹, C², Z², B²` by rank computations.
pub fn cohomology_dims(l: &LieRinehartAlgebra, m: &FlatConnectionModule) -> Result<CohomologyDims> {
    let rank_of = |family: &[Cochain]| -> Result<usize> {
        let images = family.iter().map(|c| lr_differential(l, m, c).map(|d| d.to_vec())).collect::<Result<Vec<_>>>()?;
        let len = images.first().map_or(0, |v| v.len());
        Ok(Subspace::span(len, &images).dim())
    };
    let c1 = cochain_space(l, m, 1);
    let c2 = cochain_space(l, m, 2);
    let b2 = rank_of(&c1)?;
    let r2 = rank_of(&c2)?;
    Ok(CohomologyDims { c1: c1.len(), z1: c1.len() - b2, c2: c2.len(), z2: c2.len() - r2, b2 })
}

/// 2-cocycles whose classes form a basis of `H²`, found by extending a
/// basis of `B²` inside `Z²`.
pub fn nonzero_classes(l: &LieRinehartAlgebra, m: &FlatConnectionModule) -> Result<Vec<Cochain>> {
    let c2 = cochain_space(l, m, 2);
    let (ld, md) = (l.dim(), m.dim());
    let len2 = Cochain::zero(2, ld, md).to_vec().len();
    let images = c2.iter().map(|c| lr_differential(l, m, c).map(|d| d.to_vec())).collect::<Result<Vec<_>>>()?;
    let z2: Vec<Cochain> = if c2.is_empty() {
        Vec::new()
    } else {
        let rows = images[0].len();
        let mat = RationalMatrix::from_columns(rows, &images)?;
        let combos = if rows == 0 { (0..c2.len()).map(|i| unit_vec(c2.len(), i)).collect() } else { kernel(&mat) };
        combos
            .iter()
            .map(|k| {
                let mut z = Cochain::zero(2, ld, md);
                for (c, b) in k.iter().zip(&c2) {
                    if !c.is_zero() {
                        z = z.add(&b.scale(c));
                    }
                }
                z
            })
            .collect()
    };
    let b2: Vec<Vec<Q>> = cochain_space(l, m, 1)
        .iter()
        .map(|c| lr_differential(l, m, c).map(|d| d.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let mut span = Subspace::span(len2, &b2);
    let mut out = Vec::new();
    for z in z2 {
        let v = z.to_vec();
        if !span.contains(&v) {
            span = span.sum(&Subspace::span(len2, &[v]));
            out.push(z);
        }
    }
    Ok(out)
}

/// `Z¹` as a subspace of `C¹`, in canonical form.
pub fn one_cocycles(l: &LieRinehartAlgebra, m: &FlatConnectionModule) -> Result<Vec<Cochain>> {
    let zero = Cochain::zero(2, l.dim(), m.dim());
    let sol = coboundary_solve(l, m, &zero, &zero)?.expect("zero is a coboundary");
    let dim = Cochain::zero(1, l.dim(), m.dim()).to_vec().len();
    let sub = Subspace::span(dim, &sol.cocycles.iter().map(|c| c.to_vec()).collect::<Vec<_>>());
    Ok(sub.basis().iter().map(|v| Cochain::from_vec(1, l.dim(), m.dim(), v)).collect())
}

/// `g − f` as a difference of cochains, checking compatible shapes.
pub fn difference(f: &Cochain, g: &Cochain) -> Result<Cochain> {
    if (f.degree, f.ldim, f.mdim) != (g.degree, g.ldim, g.mdim) {
        return Err(Error::Input("cochains differ in shape".into()));
    }
    Ok(Cochain::from_vec(f.degree, f.ldim, f.mdim, &vec_sub(&g.to_vec(), &f.to_vec())))
}
