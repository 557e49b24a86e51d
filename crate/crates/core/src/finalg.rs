//! Finite-dimensional commutative unital ℚ-algebras given by structure
//! constants, their derivations, modules over them, and the first-order
//! module of principal parts `P = A ⊗ A / I²`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactlin::{
    axpy, is_zero_vec, kernel, unit_vec, zero_vec, Coordinates, QuotientMap,
    RationalMatrix, Subspace, Q,
};
use crate::report::ValidationReport;

/// A commutative unital algebra with basis `e_0..e_{n-1}` and products
/// `e_i e_j = Σ_k mul[i][j][k] e_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    labels: Vec<String>,
    mul: Vec<Vec<Vec<Q>>>,
    unit: Vec<Q>,
    // left multiplication by each basis element, column j = e_i e_j
    mult: Vec<RationalMatrix>,
}

impl FiniteAlgebra {
    /// Checks only shapes; algebraic laws are checked by [`FiniteAlgebra::validate`].
    pub fn new(labels: Vec<String>, mul: Vec<Vec<Vec<Q>>>, unit: Vec<Q>) -> Result<Self> {
        let n = labels.len();
        if unit.len() != n {
            return Err(Error::Dimension(format!("unit has length {} for dimension {n}", unit.len())));
        }
        if mul.len() != n || mul.iter().any(|r| r.len() != n || r.iter().any(|v| v.len() != n)) {
            return Err(Error::Dimension(format!("structure constants must be {n}x{n}x{n}")));
        }
        let mult = (0..n)
            .map(|i| {
                let cols: Vec<Vec<Q>> = (0..n).map(|j| mul[i][j].clone()).collect();
                RationalMatrix::from_columns(n, &cols).expect("shape checked")
            })
            .collect();
        Ok(Self { labels, mul, unit, mult })
    }

    /// The base field ℚ.
    pub fn rationals() -> Self {
        Self::new(vec!["1".into()], vec![vec![vec![Q::one()]]], vec![Q::one()]).expect("valid")
    }

    /// `ℚ[x]/(x^n)` with monomial basis `1, x, …, x^{n-1}`.
    pub fn truncated_polynomial(n: usize) -> Self {
        Self::monomial(&["x"], |e| (e[0] as usize) < n)
    }

    /// Monomial algebra on the variables `vars` whose basis is the set of
    /// exponent vectors accepted by `standard` (which must be closed under
    /// taking divisors and contain only finitely many monomials with every
    /// exponent below 16). Products leaving the set are zero.
    pub fn monomial(vars: &[&str], standard: impl Fn(&[u32]) -> bool) -> Self {
        let k = vars.len();
        let mut monos: Vec<Vec<u32>> = Vec::new();
        let mut e = vec![0u32; k];
        loop {
            if standard(&e) {
                monos.push(e.clone());
            }
            // odometer over exponents < 16
            let mut i = 0;
            loop {
                if i == k {
                    break;
                }
                e[i] += 1;
                if e[i] < 16 {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
        monos.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        let index: BTreeMap<Vec<u32>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let n = monos.len();
        let labels = monos.iter().map(|m| monomial_label(vars, m)).collect();
        let mut mul = vec![vec![zero_vec(n); n]; n];
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                let p: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&t) = index.get(&p) {
                    mul[i][j][t] = Q::one();
                }
            }
        }
        let unit = unit_vec(n, index[&vec![0u32; k]]);
        Self::new(labels, mul, unit).expect("monomial algebra is well formed")
    }

    /// `ℚ[vars] / (generators + m^degree_bound)`. Each generator is a list of
    /// `(coefficient, exponents)` terms. The basis consists of the monomials
    /// left after reducing by the ideal, in degree order.
    pub fn polynomial_quotient(
        vars: &[&str],
        generators: &[Vec<(Q, Vec<u32>)>],
        degree_bound: u32,
    ) -> Result<Self> {
        let k = vars.len();
        let ambient = Self::monomial(vars, |e| e.iter().sum::<u32>() < degree_bound);
        let n = ambient.dim();
        let exps: Vec<Vec<u32>> = (0..n).map(|i| parse_label(vars, &ambient.labels[i])).collect();
        let index: BTreeMap<Vec<u32>, usize> =
            exps.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut gens = Vec::new();
        for g in generators {
            let mut v = zero_vec(n);
            for (c, e) in g {
                if e.len() != k {
                    return Err(Error::Input("generator exponent length mismatch".into()));
                }
                if let Some(&i) = index.get(e) {
                    v[i] += c;
                }
            }
            gens.push(v);
        }
        let mut ideal = Vec::new();
        for g in &gens {
            for i in 0..n {
                ideal.push(ambient.mult[i].mul_vec(g));
            }
        }
        let quotient = QuotientMap::new(Subspace::span(n, &ideal));
        let m = quotient.dim();
        if m == 0 {
            return Err(Error::Structure("quotient algebra is zero".into()));
        }
        let basis: Vec<usize> = quotient.complement().to_vec();
        let labels = basis.iter().map(|&i| ambient.labels[i].clone()).collect();
        let mut mul = vec![vec![zero_vec(m); m]; m];
        for (a, &i) in basis.iter().enumerate() {
            for (b, &j) in basis.iter().enumerate() {
                mul[a][b] = quotient.project(&ambient.mul[i][j]);
            }
        }
        let unit = quotient.project(&ambient.unit);
        Self::new(labels, mul, unit)
    }

    /// Cartesian product `A × B` with basis `(e_i, 0)` followed by `(0, f_j)`.
    pub fn product(a: &Self, b: &Self) -> Self {
        let (n, m) = (a.dim(), b.dim());
        let t = n + m;
        let mut mul = vec![vec![zero_vec(t); t]; t];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    mul[i][j][k] = a.mul[i][j][k].clone();
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    mul[n + i][n + j][n + k] = b.mul[i][j][k].clone();
                }
            }
        }
        let mut unit = a.unit.clone();
        unit.extend(b.unit.iter().cloned());
        let labels = a
            .labels
            .iter()
            .map(|l| format!("({l},0)"))
            .chain(b.labels.iter().map(|l| format!("(0,{l})")))
            .collect();
        Self::new(labels, mul, unit).expect("well formed")
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn unit(&self) -> &[Q] {
        &self.unit
    }

    pub fn structure_constants(&self) -> &[Vec<Vec<Q>>] {
        &self.mul
    }

    pub fn basis_product(&self, i: usize, j: usize) -> &[Q] {
        &self.mul[i][j]
    }

    pub fn element(&self, coeffs: Vec<Q>) -> Result<AlgElement<'_>> {
        AlgElement::new(self, coeffs)
    }

    pub fn basis_element(&self, i: usize) -> Vec<Q> {
        unit_vec(self.dim(), i)
    }

    /// Product of coefficient vectors.
    pub fn mul(&self, a: &[Q], b: &[Q]) -> Vec<Q> {
        let mut out = zero_vec(self.dim());
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    axpy(&mut out, &(x * y), &self.mul[i][j]);
                }
            }
        }
        out
    }

    /// Matrix of `b ↦ a·b`.
    pub fn mult_matrix(&self, a: &[Q]) -> RationalMatrix {
        combine(self.dim(), &self.mult, a)
    }

    pub fn basis_mult(&self, i: usize) -> &RationalMatrix {
        &self.mult[i]
    }

    /// Checks commutativity, associativity and the unit law on basis
    /// elements.
    pub fn validate(&self) -> ValidationReport {
        let n = self.dim();
        let mut r = ValidationReport::new("algebra");
        r.check("commutativity");
        r.check("associativity");
        r.check("unit");
        for i in 0..n {
            for j in i + 1..n {
                r.expect_vec("commutativity", &[i, j], &self.mul[i][j], &self.mul[j][i]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let left = self.mul(&self.mul[i][j], &self.basis_element(l));
                    let right = self.mul(&self.basis_element(i), &self.mul[j][l]);
                    r.expect_vec("associativity", &[i, j, l], &left, &right);
                }
            }
        }
        for i in 0..n {
            let e = self.basis_element(i);
            r.expect_vec("unit", &[i], &self.mul(&self.unit, &e), &e);
        }
        r
    }
}

fn monomial_label(vars: &[&str], e: &[u32]) -> String {
    let parts: Vec<String> = vars
        .iter()
        .zip(e)
        .filter(|(_, &p)| p > 0)
        .map(|(v, &p)| if p == 1 { v.to_string() } else { format!("{v}^{p}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("")
    }
}

fn parse_label(vars: &[&str], label: &str) -> Vec<u32> {
    let mut e = vec![0u32; vars.len()];
    if label == "1" {
        return e;
    }
    let mut rest = label;
    while !rest.is_empty() {
        let (vi, v) = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| rest.starts_with(**v))
            .max_by_key(|(_, v)| v.len())
            .expect("label produced by monomial_label");
        rest = &rest[v.len()..];
        let mut p = 1;
        if let Some(s) = rest.strip_prefix('^') {
            let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
            p = digits.parse().expect("exponent");
            rest = &s[digits.len()..];
        }
        e[vi] += p;
    }
    e
}

/// An element of a specific algebra.
#[derive(Clone, Debug)]
pub struct AlgElement<'a> {
    parent: &'a FiniteAlgebra,
    coeffs: Vec<Q>,
}

impl<'a> AlgElement<'a> {
    pub fn new(parent: &'a FiniteAlgebra, coeffs: Vec<Q>) -> Result<Self> {
        if coeffs.len() != parent.dim() {
            return Err(Error::Dimension(format!(
                "element has {} coefficients, algebra has dimension {}",
                coeffs.len(),
                parent.dim()
            )));
        }
        Ok(Self { parent, coeffs })
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn parent(&self) -> &'a FiniteAlgebra {
        self.parent
    }

    pub fn multiply(&self, other: &AlgElement<'_>) -> Result<AlgElement<'a>> {
        if !std::ptr::eq(self.parent, other.parent) && self.parent != other.parent {
            return Err(Error::Input("elements belong to different algebras".into()));
        }
        Ok(Self { parent: self.parent, coeffs: self.parent.mul(&self.coeffs, &other.coeffs) })
    }
}

impl PartialEq for AlgElement<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.parent == other.parent && self.coeffs == other.coeffs
    }
}

/// A k-linear derivation, as the matrix acting on coefficient vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub matrix: RationalMatrix,
}

impl Derivation {
    pub fn new(matrix: RationalMatrix) -> Self {
        Self { matrix }
    }

    pub fn apply(&self, a: &[Q]) -> Vec<Q> {
        self.matrix.mul_vec(a)
    }

    /// Leibniz rule on all basis pairs and `D(1) = 0`.
    pub fn validate(&self, alg: &FiniteAlgebra) -> ValidationReport {
        let n = alg.dim();
        let mut r = ValidationReport::new("derivation");
        r.check("leibniz");
        for i in 0..n {
            for j in i..n {
                let lhs = self.apply(alg.basis_product(i, j));
                let mut rhs = alg.mul(&self.apply(&alg.basis_element(i)), &alg.basis_element(j));
                axpy(&mut rhs, &Q::one(), &alg.mul(&alg.basis_element(i), &self.apply(&alg.basis_element(j))));
                r.expect_vec("leibniz", &[i, j], &lhs, &rhs);
            }
        }
        r.expect_vec("unit_killed", &[], &self.apply(alg.unit()), &zero_vec(n));
        r
    }
}

/// Commutator `xy - yx` of two derivations.
pub fn derivation_bracket(x: &Derivation, y: &Derivation) -> Derivation {
    Derivation::new(x.matrix.commutator(&y.matrix))
}

/// A ℚ-basis of `Der_k(A)` together with its left A-module structure.
#[derive(Clone, Debug)]
pub struct Derivations {
    n: usize,
    basis: Vec<Derivation>,
    coords: Coordinates,
    a_action: Vec<RationalMatrix>,
}

impl Derivations {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Derivation] {
        &self.basis
    }

    /// Coordinates of an `n×n` matrix in the derivation basis, if it is a
    /// derivation.
    pub fn coords(&self, m: &RationalMatrix) -> Option<Vec<Q>> {
        if m.rows() != self.n || m.cols() != self.n {
            return None;
        }
        self.coords.coords(&m.to_vec())
    }

    pub fn from_coords(&self, c: &[Q]) -> Derivation {
        let mut m = RationalMatrix::zeros(self.n, self.n);
        for (x, b) in c.iter().zip(&self.basis) {
            if !x.is_zero() {
                m.add_scaled(x, &b.matrix);
            }
        }
        Derivation::new(m)
    }

    /// Action of each A-basis element on derivation coordinates.
    pub fn a_action(&self) -> &[RationalMatrix] {
        &self.a_action
    }
}

/// Solves the Leibniz system for `Der_k(A)`.
pub fn compute_derivations(alg: &FiniteAlgebra) -> Derivations {
    let n = alg.dim();
    let c = alg.structure_constants();
    // unknown D[k][m] at index k*n + m; D[k][m] = coefficient of e_k in D(e_m)
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut row = zero_vec(n * n);
                for m in 0..n {
                    row[k * n + m] += &c[i][j][m];
                }
                for l in 0..n {
                    row[l * n + i] -= &c[l][j][k];
                    row[l * n + j] -= &c[i][l][k];
                }
                if !is_zero_vec(&row) {
                    rows.push(row);
                }
            }
        }
    }
    let sys = RationalMatrix::from_rows(n * n, rows).expect("uniform rows");
    let vecs = if sys.rows() == 0 {
        (0..n * n).map(|i| unit_vec(n * n, i)).collect()
    } else {
        kernel(&sys)
    };
    let basis: Vec<Derivation> =
        vecs.iter().map(|v| Derivation::new(RationalMatrix::from_vec(n, n, v.clone()))).collect();
    let coords = Coordinates::new(n * n, &vecs).expect("kernel basis is independent");
    let r = basis.len();
    let a_action = (0..n)
        .map(|i| {
            let cols: Vec<Vec<Q>> = basis
                .iter()
                .map(|d| {
                    coords
                        .coords(&alg.basis_mult(i).mul(&d.matrix).to_vec())
                        .expect("a·D is a derivation")
                })
                .collect();
            RationalMatrix::from_columns(r, &cols).expect("dims")
        })
        .collect();
    Derivations { n, basis, coords, a_action }
}

/// A left A-module on ℚ^dim, optionally with a commuting right action
/// (making it an `A ⊗ A`-module). `action[i]` is the matrix of `e_i · −`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AModule {
    pub dim: usize,
    pub action: Vec<RationalMatrix>,
    pub right_action: Option<Vec<RationalMatrix>>,
}

impl AModule {
    pub fn new(
        dim: usize,
        action: Vec<RationalMatrix>,
        right_action: Option<Vec<RationalMatrix>>,
    ) -> Result<Self> {
        let bad = |ms: &[RationalMatrix]| ms.iter().any(|m| m.rows() != dim || m.cols() != dim);
        if bad(&action) || right_action.as_deref().is_some_and(bad) {
            return Err(Error::Dimension(format!("action matrices must be {dim}x{dim}")));
        }
        if right_action.as_ref().is_some_and(|r| r.len() != action.len()) {
            return Err(Error::Dimension("left and right actions differ in length".into()));
        }
        Ok(Self { dim, action, right_action })
    }

    /// `A` acting on itself, with equal left and right actions.
    pub fn regular(alg: &FiniteAlgebra) -> Self {
        let action: Vec<RationalMatrix> = (0..alg.dim()).map(|i| alg.basis_mult(i).clone()).collect();
        Self { dim: alg.dim(), right_action: Some(action.clone()), action }
    }

    /// `A^rank` with the diagonal action.
    pub fn free(alg: &FiniteAlgebra, rank: usize) -> Self {
        let n = alg.dim();
        let action = (0..n)
            .map(|i| {
                let mut m = RationalMatrix::zeros(n * rank, n * rank);
                let b = alg.basis_mult(i);
                for k in 0..rank {
                    for r in 0..n {
                        for c in 0..n {
                            m[(k * n + r, k * n + c)] = b[(r, c)].clone();
                        }
                    }
                }
                m
            })
            .collect();
        Self { dim: n * rank, action, right_action: None }
    }

    /// The cyclic module `A / I` for the ideal generated by `generators`.
    pub fn cyclic_quotient(alg: &FiniteAlgebra, generators: &[Vec<Q>]) -> Self {
        let n = alg.dim();
        let ideal: Vec<Vec<Q>> = generators
            .iter()
            .flat_map(|g| (0..n).map(move |i| alg.mul(&alg.basis_element(i), g)))
            .collect();
        let qm = QuotientMap::new(Subspace::span(n, &ideal));
        let action = (0..n)
            .map(|i| {
                let cols: Vec<Vec<Q>> = qm
                    .complement()
                    .iter()
                    .map(|&j| qm.project(alg.basis_product(i, j)))
                    .collect();
                RationalMatrix::from_columns(qm.dim(), &cols).expect("dims")
            })
            .collect();
        Self { dim: qm.dim(), action, right_action: None }
    }

    pub fn algebra_dim(&self) -> usize {
        self.action.len()
    }

    pub fn is_pmodule(&self) -> bool {
        self.right_action.is_some()
    }

    /// Matrix of `m ↦ a·m`.
    pub fn act(&self, a: &[Q]) -> RationalMatrix {
        combine(self.dim, &self.action, a)
    }

    /// Matrix of `m ↦ m·a`. Falls back to the left action for plain modules.
    pub fn act_right(&self, a: &[Q]) -> RationalMatrix {
        combine(self.dim, self.right_action.as_ref().unwrap_or(&self.action), a)
    }

    /// `a·m`, without forming the operator.
    pub fn act_on(&self, a: &[Q], m: &[Q]) -> Vec<Q> {
        combine_apply(self.dim, &self.action, a, m)
    }

    /// `m·a`, without forming the operator.
    pub fn act_right_on(&self, m: &[Q], a: &[Q]) -> Vec<Q> {
        combine_apply(self.dim, self.right_action.as_ref().unwrap_or(&self.action), a, m)
    }

    pub fn right(&self, i: usize) -> &RationalMatrix {
        &self.right_action.as_ref().unwrap_or(&self.action)[i]
    }

    /// Operator of `da = 1⊗a − a⊗1`, i.e. `m ↦ m·a − a·m`.
    pub fn d_action(&self, i: usize) -> RationalMatrix {
        self.right(i).sub(&self.action[i])
    }

    /// Module axioms for the left action (and the right one when present).
    pub fn validate(&self, alg: &FiniteAlgebra) -> ValidationReport {
        let mut r = ValidationReport::new("module");
        if self.algebra_dim() != alg.dim() {
            r.fail("shape", &[], format!("{} action matrices", self.algebra_dim()), format!("{}", alg.dim()));
            return r;
        }
        check_action_law(&mut r, "left", alg, self.dim, &self.action);
        if let Some(right) = &self.right_action {
            check_action_law(&mut r, "right", alg, self.dim, right);
            r.merge("pmodule", check_pmodule(self));
        }
        r
    }
}

fn combine(dim: usize, ms: &[RationalMatrix], a: &[Q]) -> RationalMatrix {
    let mut out = vec![Q::zero(); dim * dim];
    for (m, c) in ms.iter().zip(a) {
        if !c.is_zero() {
            for (o, x) in out.iter_mut().zip(m.data()) {
                if !x.is_zero() {
                    *o += c * x;
                }
            }
        }
    }
    RationalMatrix::from_vec(dim, dim, out)
}

fn combine_apply(dim: usize, ms: &[RationalMatrix], a: &[Q], v: &[Q]) -> Vec<Q> {
    let mut out = zero_vec(dim);
    for (m, c) in ms.iter().zip(a) {
        if !c.is_zero() {
            axpy(&mut out, c, &m.mul_vec(v));
        }
    }
    out
}

fn check_action_law(
    r: &mut ValidationReport,
    side: &str,
    alg: &FiniteAlgebra,
    dim: usize,
    action: &[RationalMatrix],
) {
    let n = alg.dim();
    let rep = format!("{side}_structure_constants");
    r.check(&rep);
    for i in 0..n {
        for j in 0..n {
            let lhs = action[i].mul(&action[j]);
            let rhs = combine(dim, action, alg.basis_product(i, j));
            r.expect_matrix(&rep, &[i, j], &lhs, &rhs);
        }
    }
    let unit = combine(dim, action, alg.unit());
    r.expect_matrix(&format!("{side}_unit"), &[], &unit, &RationalMatrix::identity(dim));
}

/// Commuting actions and `da·db·m = 0` for basis `a, b`, i.e. the
/// `A ⊗ A`-action factors through `P`.
pub fn check_pmodule(m: &AModule) -> ValidationReport {
    let mut r = ValidationReport::new("pmodule");
    r.check("has_right_action");
    r.check("actions_commute");
    r.check("i2_annihilates");
    let Some(right) = &m.right_action else {
        r.fail("has_right_action", &[], "none".into(), "right action".into());
        return r;
    };
    let n = m.algebra_dim();
    for i in 0..n {
        for j in 0..n {
            let lhs = m.action[i].mul(&right[j]);
            let rhs = right[j].mul(&m.action[i]);
            r.expect_matrix("actions_commute", &[i, j], &lhs, &rhs);
        }
    }
    let zero = RationalMatrix::zeros(m.dim, m.dim);
    let d: Vec<RationalMatrix> = (0..n).map(|i| m.d_action(i)).collect();
    for i in 0..n {
        for j in i..n {
            r.expect_matrix("i2_annihilates", &[i, j], &d[i].mul(&d[j]), &zero);
        }
    }
    r
}

/// The first-order module of principal parts.
///
/// Coordinates of `A ⊗ A` use index `i*n + j` for `e_i ⊗ e_j`; `P` carries
/// the canonical quotient coordinates of `A ⊗ A / I²`. The left action of
/// `a` is multiplication by `a ⊗ 1`, the right action multiplication by
/// `1 ⊗ a`, `p(a) = 1⊗a`, `q(a) = a⊗1` and `d = p − q`.
#[derive(Clone, Debug)]
pub struct PrincipalParts {
    pub dim: usize,
    pub algebra: FiniteAlgebra,
    pub left_action: Vec<RationalMatrix>,
    pub right_action: Vec<RationalMatrix>,
    pub d_map: RationalMatrix,
    pub p_map: RationalMatrix,
    pub q_map: RationalMatrix,
    pub ideal_dim: usize,
    pub ideal_square_dim: usize,
    quotient: QuotientMap,
    n: usize,
}

impl PrincipalParts {
    pub fn as_module(&self) -> AModule {
        AModule {
            dim: self.dim,
            action: self.left_action.clone(),
            right_action: Some(self.right_action.clone()),
        }
    }

    /// The pair `(i, j)` such that basis vector `r` of `P` is the class of
    /// `e_i ⊗ e_j`.
    pub fn representative(&self, r: usize) -> (usize, usize) {
        let t = self.quotient.complement()[r];
        (t / self.n, t % self.n)
    }

    /// Class in `P` of `Σ t_ij e_i ⊗ e_j`.
    pub fn project_tensor(&self, t: &[Q]) -> Vec<Q> {
        self.quotient.project(t)
    }

    pub fn d(&self, a: &[Q]) -> Vec<Q> {
        self.d_map.mul_vec(a)
    }

    /// Class of `a ⊗ b`.
    pub fn tensor(&self, a: &[Q], b: &[Q]) -> Vec<Q> {
        let n = self.n;
        let mut t = zero_vec(n * n);
        for i in 0..n {
            for j in 0..n {
                t[i * n + j] = &a[i] * &b[j];
            }
        }
        self.quotient.project(&t)
    }

    /// The invariants: commuting actions, `I²` annihilation, `d = p − q` and
    /// `d(ab) = p(a)d(b) + d(a)q(b)` on basis pairs.
    pub fn validate(&self, alg: &FiniteAlgebra) -> ValidationReport {
        let mut r = ValidationReport::new("principal_parts");
        r.merge("module", self.as_module().validate(alg));
        r.expect_matrix("d_is_p_minus_q", &[], &self.d_map, &self.p_map.sub(&self.q_map));
        let n = alg.dim();
        let pm = &self.algebra;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (alg.basis_element(i), alg.basis_element(j));
                let lhs = self.d(alg.basis_product(i, j));
                let mut rhs = pm.mul(&self.p_map.mul_vec(&a), &self.d(&b));
                axpy(&mut rhs, &Q::one(), &pm.mul(&self.d(&a), &self.q_map.mul_vec(&b)));
                r.expect_vec("d_leibniz", &[i, j], &lhs, &rhs);
            }
        }
        r
    }
}

/// Builds `P = A ⊗ A / I²` with its two A-actions and the maps `d`, `p`, `q`.
pub fn build_principal_parts(alg: &FiniteAlgebra) -> PrincipalParts {
    let n = alg.dim();
    let nn = n * n;
    let tensor = tensor_square(alg);
    // multiplication map A⊗A → A
    let mu_cols: Vec<Vec<Q>> =
        (0..nn).map(|t| alg.basis_product(t / n, t % n).to_vec()).collect();
    let mu = RationalMatrix::from_columns(n, &mu_cols).expect("dims");
    let ideal = kernel(&mu);
    let mut products = Vec::new();
    for (s, u) in ideal.iter().enumerate() {
        for v in &ideal[s..] {
            products.push(tensor.mul(u, v));
        }
    }
    let i2 = Subspace::span(nn, &products);
    let ideal_square_dim = i2.dim();
    let quotient = QuotientMap::new(i2);
    let dim = quotient.dim();
    let reps: Vec<usize> = quotient.complement().to_vec();
    let mut mul = vec![vec![zero_vec(dim); dim]; dim];
    for (a, &s) in reps.iter().enumerate() {
        for (b, &t) in reps.iter().enumerate() {
            mul[a][b] = quotient.project(tensor.basis_product(s, t));
        }
    }
    let labels = reps
        .iter()
        .map(|&t| format!("{}⊗{}", alg.labels()[t / n], alg.labels()[t % n]))
        .collect();
    let unit = quotient.project(tensor.unit());
    let palg = FiniteAlgebra::new(labels, mul, unit).expect("quotient algebra well formed");
    let embed = |t: Vec<Q>| quotient.project(&t);
    let left_of = |a: &[Q]| -> Vec<Q> { embed(tensor_vec(a, alg.unit())) };
    let right_of = |a: &[Q]| -> Vec<Q> { embed(tensor_vec(alg.unit(), a)) };
    let q_cols: Vec<Vec<Q>> = (0..n).map(|i| left_of(&alg.basis_element(i))).collect();
    let p_cols: Vec<Vec<Q>> = (0..n).map(|i| right_of(&alg.basis_element(i))).collect();
    let q_map = RationalMatrix::from_columns(dim, &q_cols).expect("dims");
    let p_map = RationalMatrix::from_columns(dim, &p_cols).expect("dims");
    let d_map = p_map.sub(&q_map);
    let left_action = q_cols.iter().map(|v| palg.mult_matrix(v)).collect();
    let right_action = p_cols.iter().map(|v| palg.mult_matrix(v)).collect();
    PrincipalParts {
        dim,
        algebra: palg,
        left_action,
        right_action,
        d_map,
        p_map,
        q_map,
        ideal_dim: ideal.len(),
        ideal_square_dim,
        quotient,
        n,
    }
}

fn tensor_vec(a: &[Q], b: &[Q]) -> Vec<Q> {
    let n = a.len();
    let mut t = zero_vec(n * n);
    for i in 0..n {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..n {
            t[i * n + j] = &a[i] * &b[j];
        }
    }
    t
}

/// The algebra `A ⊗ A` with basis `e_i ⊗ e_j` at index `i*n + j`.
fn tensor_square(alg: &FiniteAlgebra) -> FiniteAlgebra {
    let n = alg.dim();
    let nn = n * n;
    let mut mul = vec![vec![zero_vec(nn); nn]; nn];
    for s in 0..nn {
        for t in 0..nn {
            let left = alg.basis_product(s / n, t / n);
            let right = alg.basis_product(s % n, t % n);
            mul[s][t] = tensor_vec(left, right);
        }
    }
    let labels = (0..nn).map(|t| format!("{}⊗{}", alg.labels()[t / n], alg.labels()[t % n])).collect();
    FiniteAlgebra::new(labels, mul, tensor_vec(alg.unit(), alg.unit())).expect("well formed")
}

/// Dimension of the Kähler differentials `Ω¹`, computed from the
/// presentation by generators `de_k` and Leibniz relations. Independent of the
/// principal-parts construction.
pub fn kahler_differentials_dim(alg: &FiniteAlgebra) -> usize {
    let n = alg.dim();
    // free module A^n on generators de_k; coordinate (k, l) at k*n + l means e_l·de_k
    let mut relations = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut rel = zero_vec(n * n);
            for (k, c) in alg.basis_product(i, j).iter().enumerate() {
                if !c.is_zero() {
                    add_scaled_unit_multiple(&mut rel, alg, k, c);
                }
            }
            // − e_i·de_j − e_j·de_i
            rel[j * n + i] -= Q::one();
            rel[i * n + j] -= Q::one();
            relations.push(rel);
        }
    }
    let mut span = Vec::new();
    for rel in &relations {
        for l in 0..n {
            span.push(scale_free(alg, &alg.basis_element(l), rel));
        }
    }
    n * n - Subspace::span(n * n, &span).dim()
}

fn add_scaled_unit_multiple(rel: &mut [Q], alg: &FiniteAlgebra, k: usize, c: &Q) {
    let n = alg.dim();
    for (l, u) in alg.unit().iter().enumerate() {
        if !u.is_zero() {
            rel[k * n + l] += c * u;
        }
    }
}

fn scale_free(alg: &FiniteAlgebra, a: &[Q], v: &[Q]) -> Vec<Q> {
    let n = alg.dim();
    let mut out = zero_vec(v.len());
    for k in 0..v.len() / n {
        let block = alg.mul(a, &v[k * n..(k + 1) * n]);
        out[k * n..(k + 1) * n].clone_from_slice(&block);
    }
    out
}

/// Human-readable element using the algebra's basis labels.
pub fn fmt_element(alg: &FiniteAlgebra, a: &[Q]) -> String {
    let terms: Vec<String> = a
        .iter()
        .zip(alg.labels())
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, l)| if l == "1" { c.to_string() } else if c.is_one() { l.clone() } else { format!("{c}*{l}") })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}
