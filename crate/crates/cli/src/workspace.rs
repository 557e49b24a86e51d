//! Workspace files: named algebras, Lie–Rinehart algebras, modules,
//! cochains, D-Lie algebras and connections, cross-referenced by name.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use dlie_core::conncat::{c_functor_on, validate_connection, validate_lpsi, Connection, LPsiConnection};
use dlie_core::dlie::{
    build_d1_with, functor_f_unchecked, twisted_extension, validate_dlie, BracketConvention, DLieAlgebra,
    Provenance,
};
use dlie_core::exactlin::{zero_vec, RationalMatrix, Q};
use dlie_core::finalg::{compute_derivations, AModule, FiniteAlgebra};
use dlie_core::lierinehart::{
    check_cochain, lr_differential, nonzero_classes, validate_lr, Cochain, FlatConnectionModule,
    LieRinehartAlgebra,
};
use dlie_core::report::ValidationReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::parse_polynomial;
use crate::rational::{to_matrix, to_vec, RawMatrix, RawVec};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed workspace: {0}")]
    Syntax(String),
    #[error("{section}.{name}: {message}")]
    Object { section: &'static str, name: String, message: String },
}

type WsResult<T> = std::result::Result<T, WorkspaceError>;

fn object_err(section: &'static str, name: &str, message: impl ToString) -> WorkspaceError {
    WorkspaceError::Object { section, name: name.to_string(), message: message.to_string() }
}

fn is_empty_map<K, V>(m: &BTreeMap<K, V>) -> bool {
    m.is_empty()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWorkspace {
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub algebras: BTreeMap<String, RawAlgebra>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub lie_rinehart: BTreeMap<String, RawLieRinehart>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub modules: BTreeMap<String, RawModule>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub cocycles: BTreeMap<String, RawCochain>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub dlie: BTreeMap<String, RawDLie>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub lpsi_connections: BTreeMap<String, RawLPsi>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    pub connections: BTreeMap<String, RawConnection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawAlgebra {
    Rationals {},
    Truncated { degree: usize },
    Polynomial { vars: Vec<String>, relations: Vec<String>, degree_bound: u32 },
    Product { factors: Vec<String> },
    /// Products keyed `"i,j"`; `(j,i)` is filled in, missing entries are 0.
    Table { labels: Vec<String>, unit: RawVec, products: BTreeMap<String, RawVec> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawLieRinehart {
    Derivations { algebra: String },
    Span { algebra: String, generators: Vec<RawMatrix> },
    Action { algebra: String, generators: Vec<RawMatrix> },
    Abelian { algebra: String, rank: usize },
    /// Bracket keyed `"i,j"` with antisymmetric fill-in.
    Table { algebra: String, action: Vec<RawMatrix>, bracket: BTreeMap<String, RawVec>, anchor: Vec<RawMatrix> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawModule {
    Free { algebra: String, rank: usize },
    Cyclic { algebra: String, generators: Vec<RawVec> },
    Table { algebra: String, dim: usize, action: Vec<RawMatrix> },
}

/// A-valued cochains on a named Lie–Rinehart algebra.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawCochain {
    Zero { lie_rinehart: String },
    /// Values keyed by comma-separated index tuples; missing tuples are 0.
    Values { lie_rinehart: String, degree: usize, values: BTreeMap<String, RawVec> },
    /// `d¹φ` for the 1-cochain `φ` given by its values.
    Coboundary { lie_rinehart: String, phi: BTreeMap<String, RawVec> },
    /// The `index`-th representative of a nonzero class in `H²`.
    Class { lie_rinehart: String, index: usize },
}

impl RawCochain {
    fn lie_rinehart(&self) -> &str {
        match self {
            RawCochain::Zero { lie_rinehart }
            | RawCochain::Values { lie_rinehart, .. }
            | RawCochain::Coboundary { lie_rinehart, .. }
            | RawCochain::Class { lie_rinehart, .. } => lie_rinehart,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawDLie {
    /// `D¹(A,f)` for a cochain on `Der_k(A)`.
    D1 { cocycle: String },
    /// `F(L,f)` for a cochain `f` on `Der_k(A)`.
    Functor { lie_rinehart: String, cocycle: String },
    /// `Az ⊕ L` twisted directly by a cochain on `L`; structure map zero
    /// unless given.
    Extension {
        lie_rinehart: String,
        cocycle: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<RawMatrix>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLPsi {
    pub lie_rinehart: String,
    pub module: String,
    pub psi: RawMatrix,
    pub nabla: Vec<RawMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawConnection {
    Operators { dlie: String, module: String, rho: Vec<RawMatrix> },
    /// `(a,x) ↦ aI + x` on `D¹(A,f)` acting on `A`.
    Tautological { dlie: String },
    /// `C_f` of a named `(L,ψ)`-connection.
    CFunctor { lpsi: String, cocycle: String },
}

#[derive(Clone, Debug)]
pub struct LrEntry {
    pub algebra: String,
    pub lr: LieRinehartAlgebra,
    pub is_derivations: bool,
}

#[derive(Clone, Debug)]
pub struct ModuleEntry {
    pub algebra: String,
    pub module: AModule,
}

#[derive(Clone, Debug)]
pub struct CochainEntry {
    pub lie_rinehart: String,
    pub cochain: Cochain,
}

#[derive(Clone, Debug)]
pub struct DLieEntry {
    pub algebra: String,
    pub dlie: DLieAlgebra,
}

#[derive(Clone, Debug)]
pub struct LPsiEntry {
    pub lie_rinehart: String,
    pub connection: LPsiConnection,
}

#[derive(Clone, Debug)]
pub struct ConnectionEntry {
    pub dlie: Option<String>,
    pub connection: Connection,
}

/// A resolved workspace; `reports` holds the load-time validation of every
/// object, keyed `section.name`.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub algebras: BTreeMap<String, FiniteAlgebra>,
    pub lie_rinehart: BTreeMap<String, LrEntry>,
    pub modules: BTreeMap<String, ModuleEntry>,
    pub cocycles: BTreeMap<String, CochainEntry>,
    pub dlie: BTreeMap<String, DLieEntry>,
    pub lpsi_connections: BTreeMap<String, LPsiEntry>,
    pub connections: BTreeMap<String, ConnectionEntry>,
    pub reports: Vec<(String, ValidationReport)>,
}

impl Workspace {
    pub fn is_valid(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.is_valid())
    }

    pub fn cocycle_algebra(&self, name: &str) -> Option<&str> {
        let c = self.cocycles.get(name)?;
        Some(self.lie_rinehart[&c.lie_rinehart].algebra.as_str())
    }

    /// Whether the named cochain lives on `Der_k(A)`.
    pub fn on_derivations(&self, cocycle: &str) -> bool {
        self.cocycles.get(cocycle).is_some_and(|c| self.lie_rinehart[&c.lie_rinehart].is_derivations)
    }
}

pub fn load_workspace(path: &Path) -> WsResult<Workspace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WorkspaceError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_workspace(&text)
}

pub fn parse_workspace(text: &str) -> WsResult<Workspace> {
    let raw: RawWorkspace = serde_json::from_str(text).map_err(|e| WorkspaceError::Syntax(e.to_string()))?;
    resolve(&raw)
}

fn parse_tuple(key: &str, len: usize) -> Result<Vec<usize>, String> {
    let parts: Result<Vec<usize>, _> = key.split(',').map(|p| p.trim().parse::<usize>()).collect();
    let t = parts.map_err(|_| format!("bad index tuple {key:?}"))?;
    if t.len() != len {
        return Err(format!("index tuple {key:?} should have {len} entries"));
    }
    Ok(t)
}

fn check_len(v: &RawVec, len: usize, what: &str) -> Result<Vec<Q>, String> {
    if v.len() != len {
        return Err(format!("{what} needs {len} coordinates, got {}", v.len()));
    }
    Ok(to_vec(v))
}

fn matrices(ms: &[RawMatrix], count: usize, rows: usize, cols: usize, what: &str) -> Result<Vec<RationalMatrix>, String> {
    if ms.len() != count {
        return Err(format!("{what}: expected {count} matrices, got {}", ms.len()));
    }
    ms.iter().map(|m| to_matrix(m, rows, cols).map_err(|e| format!("{what}: {e}"))).collect()
}

fn resolve_algebra(
    name: &str,
    raw: &BTreeMap<String, RawAlgebra>,
    done: &mut BTreeMap<String, FiniteAlgebra>,
    visiting: &mut BTreeSet<String>,
) -> WsResult<FiniteAlgebra> {
    if let Some(a) = done.get(name) {
        return Ok(a.clone());
    }
    let spec = raw.get(name).ok_or_else(|| object_err("algebras", name, "unknown algebra"))?;
    if !visiting.insert(name.to_string()) {
        return Err(object_err("algebras", name, "cyclic product definition"));
    }
    let err = |m: String| object_err("algebras", name, m);
    let alg = match spec {
        RawAlgebra::Rationals {} => FiniteAlgebra::rationals(),
        RawAlgebra::Truncated { degree } => {
            if *degree == 0 {
                return Err(err("degree must be positive".into()));
            }
            FiniteAlgebra::truncated_polynomial(*degree)
        }
        RawAlgebra::Polynomial { vars, relations, degree_bound } => {
            let gens = relations
                .iter()
                .map(|r| parse_polynomial(r, vars))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let names: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
            FiniteAlgebra::polynomial_quotient(&names, &gens, *degree_bound).map_err(|e| err(e.to_string()))?
        }
        RawAlgebra::Product { factors } => {
            let mut it = factors.iter();
            let first = it.next().ok_or_else(|| err("a product needs factors".into()))?;
            let mut acc = resolve_algebra(first, raw, done, visiting)?;
            for f in it {
                let b = resolve_algebra(f, raw, done, visiting)?;
                acc = FiniteAlgebra::product(&acc, &b);
            }
            acc
        }
        RawAlgebra::Table { labels, unit, products } => {
            let n = labels.len();
            let unit = check_len(unit, n, "unit").map_err(err)?;
            let mut mul = vec![vec![zero_vec(n); n]; n];
            let mut seen = BTreeMap::new();
            for (key, v) in products {
                let t = parse_tuple(key, 2).map_err(err)?;
                if t.iter().any(|&i| i >= n) {
                    return Err(err(format!("index out of range in {key:?}")));
                }
                let v = check_len(v, n, key).map_err(err)?;
                let sorted = (t[0].min(t[1]), t[0].max(t[1]));
                if let Some(prev) = seen.insert(sorted, v.clone()) {
                    if prev != v {
                        return Err(err(format!("products {key:?} and its transpose disagree")));
                    }
                }
                mul[t[0]][t[1]] = v.clone();
                mul[t[1]][t[0]] = v;
            }
            FiniteAlgebra::new(labels.clone(), mul, unit).map_err(|e| err(e.to_string()))?
        }
    };
    visiting.remove(name);
    done.insert(name.to_string(), alg.clone());
    Ok(alg)
}

fn bracket_table(table: &BTreeMap<String, RawVec>, m: usize) -> Result<Vec<Vec<Vec<Q>>>, String> {
    let mut bracket = vec![vec![zero_vec(m); m]; m];
    let mut given = BTreeSet::new();
    for (key, v) in table {
        let t = parse_tuple(key, 2)?;
        if t.iter().any(|&i| i >= m) {
            return Err(format!("index out of range in {key:?}"));
        }
        let v = check_len(v, m, key)?;
        if t[0] == t[1] {
            if v.iter().any(|x| *x != Q::from_integer(0.into())) {
                return Err(format!("bracket {key:?} of an element with itself must vanish"));
            }
            continue;
        }
        let neg: Vec<Q> = v.iter().map(|x| -x).collect();
        if given.contains(&(t[1], t[0])) && bracket[t[0]][t[1]] != v {
            return Err(format!("bracket {key:?} is not antisymmetric to its transpose"));
        }
        given.insert((t[0], t[1]));
        bracket[t[0]][t[1]] = v;
        bracket[t[1]][t[0]] = neg;
    }
    Ok(bracket)
}

fn cochain_values(degree: usize, ldim: usize, mdim: usize, values: &BTreeMap<String, RawVec>) -> Result<Cochain, String> {
    let mut table: BTreeMap<Vec<usize>, Vec<Q>> = BTreeMap::new();
    for (key, v) in values {
        let mut t = parse_tuple(key, degree)?;
        if t.iter().any(|&i| i >= ldim) {
            return Err(format!("index out of range in {key:?}"));
        }
        let mut v = check_len(v, mdim, key)?;
        let mut odd = false;
        for i in 0..t.len() {
            for j in 0..t.len() - 1 - i {
                if t[j] > t[j + 1] {
                    t.swap(j, j + 1);
                    odd = !odd;
                }
            }
        }
        if t.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("repeated index in {key:?}"));
        }
        if odd {
            v = v.iter().map(|x| -x).collect();
        }
        if let Some(prev) = table.insert(t, v.clone()) {
            if prev != v {
                return Err(format!("conflicting values for {key:?}"));
            }
        }
    }
    Ok(Cochain::from_fn(degree, ldim, mdim, |t| table.get(t).cloned().unwrap_or_else(|| zero_vec(mdim))))
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, key: &str, section: &'static str, name: &str, what: &str) -> WsResult<&'a T> {
    map.get(key).ok_or_else(|| object_err(section, name, format!("unknown {what} {key:?}")))
}

pub fn resolve(raw: &RawWorkspace) -> WsResult<Workspace> {
    let mut ws = Workspace::default();
    let mut visiting = BTreeSet::new();
    for name in raw.algebras.keys() {
        resolve_algebra(name, &raw.algebras, &mut ws.algebras, &mut visiting)?;
    }
    for (name, a) in &ws.algebras {
        ws.reports.push((format!("algebras.{name}"), a.validate()));
    }

    for (name, spec) in &raw.lie_rinehart {
        let err = |m: String| object_err("lie_rinehart", name, m);
        let (alg_name, lr, is_der) = match spec {
            RawLieRinehart::Derivations { algebra } => {
                let a = lookup(&ws.algebras, algebra, "lie_rinehart", name, "algebra")?;
                (algebra, LieRinehartAlgebra::derivations(a), true)
            }
            RawLieRinehart::Span { algebra, generators } | RawLieRinehart::Action { algebra, generators } => {
                let a = lookup(&ws.algebras, algebra, "lie_rinehart", name, "algebra")?;
                let n = a.dim();
                let gens = matrices(generators, generators.len(), n, n, "generators").map_err(err)?;
                let lr = if matches!(spec, RawLieRinehart::Span { .. }) {
                    LieRinehartAlgebra::span_of_derivations(a, &gens)
                } else {
                    LieRinehartAlgebra::action_algebra(a, &gens)
                };
                (algebra, lr.map_err(|e| err(e.to_string()))?, false)
            }
            RawLieRinehart::Abelian { algebra, rank } => {
                let a = lookup(&ws.algebras, algebra, "lie_rinehart", name, "algebra")?;
                (algebra, LieRinehartAlgebra::abelian(a, *rank), false)
            }
            RawLieRinehart::Table { algebra, action, bracket, anchor } => {
                let a = lookup(&ws.algebras, algebra, "lie_rinehart", name, "algebra")?;
                let n = a.dim();
                let m = action.first().map_or(anchor.len(), |x| x.len());
                let act = matrices(action, n, m, m, "action").map_err(err)?;
                let anc = matrices(anchor, m, n, n, "anchor").map_err(err)?;
                let br = bracket_table(bracket, m).map_err(err)?;
                let carrier = AModule::new(m, act, None).map_err(|e| err(e.to_string()))?;
                let lr = LieRinehartAlgebra::new(a.clone(), carrier, br, anc).map_err(|e| err(e.to_string()))?;
                (algebra, lr, false)
            }
        };
        ws.reports.push((format!("lie_rinehart.{name}"), validate_lr(&lr)));
        ws.lie_rinehart.insert(name.clone(), LrEntry { algebra: alg_name.clone(), lr, is_derivations: is_der });
    }

    for (name, spec) in &raw.modules {
        let err = |m: String| object_err("modules", name, m);
        let (alg_name, module) = match spec {
            RawModule::Free { algebra, rank } => {
                let a = lookup(&ws.algebras, algebra, "modules", name, "algebra")?;
                (algebra, AModule::free(a, *rank))
            }
            RawModule::Cyclic { algebra, generators } => {
                let a = lookup(&ws.algebras, algebra, "modules", name, "algebra")?;
                let gens = generators.iter().map(|g| check_len(g, a.dim(), "generator")).collect::<Result<Vec<_>, _>>().map_err(err)?;
                (algebra, AModule::cyclic_quotient(a, &gens))
            }
            RawModule::Table { algebra, dim, action } => {
                let a = lookup(&ws.algebras, algebra, "modules", name, "algebra")?;
                let act = matrices(action, a.dim(), *dim, *dim, "action").map_err(err)?;
                (algebra, AModule::new(*dim, act, None).map_err(|e| err(e.to_string()))?)
            }
        };
        let alg = &ws.algebras[alg_name];
        ws.reports.push((format!("modules.{name}"), module.validate(alg)));
        ws.modules.insert(name.clone(), ModuleEntry { algebra: alg_name.clone(), module });
    }

    for (name, spec) in &raw.cocycles {
        let err = |m: String| object_err("cocycles", name, m);
        let lr_name = spec.lie_rinehart();
        let entry = lookup(&ws.lie_rinehart, lr_name, "cocycles", name, "Lie–Rinehart algebra")?;
        let l = &entry.lr;
        let trivial = FlatConnectionModule::trivial(l);
        let (m, n) = (l.dim(), l.alg_dim());
        let cochain = match spec {
            RawCochain::Zero { .. } => Cochain::zero(2, m, n),
            RawCochain::Values { degree, values, .. } => cochain_values(*degree, m, n, values).map_err(err)?,
            RawCochain::Coboundary { phi, .. } => {
                let phi = cochain_values(1, m, n, phi).map_err(err)?;
                lr_differential(l, &trivial, &phi).map_err(|e| err(e.to_string()))?
            }
            RawCochain::Class { index, .. } => {
                let classes = nonzero_classes(l, &trivial).map_err(|e| err(e.to_string()))?;
                classes
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| err(format!("only {} nonzero classes exist", classes.len())))?
            }
        };
        ws.reports.push((format!("cocycles.{name}"), check_cochain(l, &trivial, &cochain)));
        ws.cocycles.insert(name.clone(), CochainEntry { lie_rinehart: lr_name.to_string(), cochain });
    }

    for (name, spec) in &raw.dlie {
        let err = |m: String| object_err("dlie", name, m);
        let der_cocycle = |c: &str| -> WsResult<(String, Cochain)> {
            let entry = lookup(&ws.cocycles, c, "dlie", name, "cocycle")?;
            let lr = &ws.lie_rinehart[&entry.lie_rinehart];
            if !lr.is_derivations || entry.cochain.degree != 2 {
                return Err(err(format!("cocycle {c:?} must be a 2-cochain on a derivations algebra")));
            }
            Ok((lr.algebra.clone(), entry.cochain.clone()))
        };
        let (alg_name, dlie) = match spec {
            RawDLie::D1 { cocycle } => {
                let (alg_name, f) = der_cocycle(cocycle)?;
                let alg = &ws.algebras[&alg_name];
                (alg_name, build_d1_with(alg, &f, BracketConvention::Standard).map_err(|e| err(e.to_string()))?)
            }
            RawDLie::Functor { lie_rinehart, cocycle } => {
                let (alg_name, f) = der_cocycle(cocycle)?;
                let l = lookup(&ws.lie_rinehart, lie_rinehart, "dlie", name, "Lie–Rinehart algebra")?;
                if l.algebra != alg_name {
                    return Err(err("Lie–Rinehart algebra and cocycle live over different algebras".into()));
                }
                (alg_name, functor_f_unchecked(&l.lr, &f).map_err(|e| err(e.to_string()))?)
            }
            RawDLie::Extension { lie_rinehart, cocycle, alpha } => {
                let l = lookup(&ws.lie_rinehart, lie_rinehart, "dlie", name, "Lie–Rinehart algebra")?;
                let c = lookup(&ws.cocycles, cocycle, "dlie", name, "cocycle")?;
                if c.lie_rinehart != *lie_rinehart || c.cochain.degree != 2 {
                    return Err(err(format!("cocycle {cocycle:?} must be a 2-cochain on {lie_rinehart:?}")));
                }
                let alg = &ws.algebras[&l.algebra];
                let rows = alg.dim() + compute_derivations(alg).dim();
                let cols = alg.dim() + l.lr.dim();
                let alpha = match alpha {
                    Some(m) => to_matrix(m, rows, cols).map_err(|e| err(format!("alpha: {e}")))?,
                    None => RationalMatrix::zeros(rows, cols),
                };
                let base = Cochain::zero(2, rows - alg.dim(), alg.dim());
                let provenance = Provenance::Extension { lr: l.lr.clone(), cocycle: c.cochain.clone() };
                let t = twisted_extension(&l.lr, &c.cochain, alpha, base, provenance, BracketConvention::Standard)
                    .map_err(|e| err(e.to_string()))?;
                (l.algebra.clone(), t)
            }
        };
        ws.reports.push((format!("dlie.{name}"), validate_dlie(&dlie)));
        ws.dlie.insert(name.clone(), DLieEntry { algebra: alg_name, dlie });
    }

    for (name, spec) in &raw.lpsi_connections {
        let err = |m: String| object_err("lpsi_connections", name, m);
        let l = lookup(&ws.lie_rinehart, &spec.lie_rinehart, "lpsi_connections", name, "Lie–Rinehart algebra")?;
        let e = lookup(&ws.modules, &spec.module, "lpsi_connections", name, "module")?;
        if e.algebra != l.algebra {
            return Err(err("module and Lie–Rinehart algebra live over different algebras".into()));
        }
        let d = e.module.dim;
        let psi = to_matrix(&spec.psi, d, d).map_err(|m| err(format!("psi: {m}")))?;
        let nabla = matrices(&spec.nabla, l.lr.dim(), d, d, "nabla").map_err(err)?;
        let c = LPsiConnection::new(l.lr.clone(), e.module.clone(), psi, nabla).map_err(|e| err(e.to_string()))?;
        ws.reports.push((format!("lpsi_connections.{name}"), validate_lpsi(&c)));
        ws.lpsi_connections.insert(name.clone(), LPsiEntry { lie_rinehart: spec.lie_rinehart.clone(), connection: c });
    }

    for (name, spec) in &raw.connections {
        let err = |m: String| object_err("connections", name, m);
        let (dlie_name, c) = match spec {
            RawConnection::Operators { dlie, module, rho } => {
                let t = lookup(&ws.dlie, dlie, "connections", name, "D-Lie algebra")?;
                let e = lookup(&ws.modules, module, "connections", name, "module")?;
                if e.algebra != t.algebra {
                    return Err(err("module and D-Lie algebra live over different algebras".into()));
                }
                let d = e.module.dim;
                let ops = matrices(rho, t.dlie.dim(), d, d, "rho").map_err(err)?;
                let c = Connection::new(t.dlie.clone(), e.module.clone(), ops).map_err(|e| err(e.to_string()))?;
                (Some(dlie.clone()), c)
            }
            RawConnection::Tautological { dlie } => {
                let t = lookup(&ws.dlie, dlie, "connections", name, "D-Lie algebra")?;
                (Some(dlie.clone()), Connection::tautological(&t.dlie).map_err(|e| err(e.to_string()))?)
            }
            RawConnection::CFunctor { lpsi, cocycle } => {
                let n = lookup(&ws.lpsi_connections, lpsi, "connections", name, "(L,psi)-connection")?;
                let f = lookup(&ws.cocycles, cocycle, "connections", name, "cocycle")?;
                if !ws.lie_rinehart[&f.lie_rinehart].is_derivations {
                    return Err(err(format!("cocycle {cocycle:?} must live on a derivations algebra")));
                }
                let t = functor_f_unchecked(&n.connection.lr, &f.cochain).map_err(|e| err(e.to_string()))?;
                (None, c_functor_on(&t, &n.connection).map_err(|e| err(e.to_string()))?)
            }
        };
        ws.reports.push((format!("connections.{name}"), validate_connection(&c)));
        ws.connections.insert(name.clone(), ConnectionEntry { dlie: dlie_name, connection: c });
    }
    Ok(ws)
}
