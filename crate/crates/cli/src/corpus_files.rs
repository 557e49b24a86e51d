//! Workspace files for the standard corpus, generated from fixed seeds.

use std::collections::BTreeMap;

use dlie_core::conncat::connection_space;
use dlie_core::corpus::{random_cochain, random_lpsi, random_vec, rng};
use dlie_core::exactlin::RationalMatrix;
use dlie_core::finalg::{compute_derivations, AModule};
use dlie_core::lierinehart::{nonzero_classes, Cochain, FlatConnectionModule};

use crate::rational::{from_matrix, from_vec, RawVec};
use crate::workspace::{
    resolve, RawAlgebra, RawCochain, RawConnection, RawDLie, RawLPsi, RawLieRinehart, RawModule, RawWorkspace,
    WorkspaceError,
};

fn poly(vars: &[&str], relations: &[&str], degree_bound: u32) -> RawAlgebra {
    RawAlgebra::Polynomial {
        vars: vars.iter().map(|s| s.to_string()).collect(),
        relations: relations.iter().map(|s| s.to_string()).collect(),
        degree_bound,
    }
}

fn cochain_map(c: &Cochain) -> BTreeMap<String, RawVec> {
    c.tuples()
        .iter()
        .zip(c.values())
        .filter(|(_, v)| v.iter().any(|x| *x != dlie_core::exactlin::q(0)))
        .map(|(t, v)| {
            let key: Vec<String> = t.iter().map(|i| i.to_string()).collect();
            (key.join(","), from_vec(v))
        })
        .collect()
}

type Spec<'a> = (&'a str, Vec<(&'a str, RawAlgebra)>, bool);

/// Names and contents of the corpus workspaces.
pub fn corpus_workspaces() -> Result<Vec<(String, RawWorkspace)>, WorkspaceError> {
    let specs: Vec<Spec> = vec![
        ("rationals", vec![("A", RawAlgebra::Rationals {})], true),
        ("dual", vec![("A", RawAlgebra::Truncated { degree: 2 })], true),
        ("cubic", vec![("A", RawAlgebra::Truncated { degree: 3 })], true),
        ("quartic", vec![("A", RawAlgebra::Truncated { degree: 4 })], true),
        ("plane", vec![("A", poly(&["x", "y"], &["x^2", "x*y", "y^2"], 2))], true),
        (
            "split",
            vec![("Q", RawAlgebra::Rationals {}), ("A", RawAlgebra::Product { factors: vec!["Q".into(), "Q".into()] })],
            true,
        ),
        ("classes", vec![("A", poly(&["x", "y"], &["x^2*y", "x*y^2", "x^3 - y^3"], 5))], false),
    ];
    let mut out = Vec::new();
    for (seed, (name, algebras, full)) in specs.into_iter().enumerate() {
        out.push((name.to_string(), corpus_workspace(seed as u64, algebras, full)?));
    }
    out.push(("heisenberg".into(), heisenberg()));
    Ok(out)
}

fn corpus_workspace(seed: u64, algebras: Vec<(&str, RawAlgebra)>, full: bool) -> Result<RawWorkspace, WorkspaceError> {
    let mut raw = RawWorkspace::default();
    for (k, v) in algebras {
        raw.algebras.insert(k.to_string(), v);
    }
    let base = resolve(&raw)?;
    let alg = base.algebras["A"].clone();
    let n = alg.dim();
    let der = compute_derivations(&alg);
    let a = || "A".to_string();
    raw.lie_rinehart.insert("Der".into(), RawLieRinehart::Derivations { algebra: a() });
    if full {
        raw.lie_rinehart.insert("Abelian".into(), RawLieRinehart::Abelian { algebra: a(), rank: 1 });
        if let Some(d0) = der.basis().first() {
            let g = vec![from_matrix(&d0.matrix)];
            raw.lie_rinehart.insert("Span".into(), RawLieRinehart::Span { algebra: a(), generators: g.clone() });
            raw.lie_rinehart.insert("Action".into(), RawLieRinehart::Action { algebra: a(), generators: g });
        }
    }
    raw.modules.insert("A".into(), RawModule::Free { algebra: a(), rank: 1 });
    if full && 2 * n <= 4 {
        raw.modules.insert("A2".into(), RawModule::Free { algebra: a(), rank: 2 });
    }
    if full && n >= 2 {
        raw.modules.insert("Residue".into(), RawModule::Cyclic { algebra: a(), generators: vec![from_vec(&alg.basis_element(1))] });
    }
    let ws = resolve(&raw)?;
    let mut r = rng(seed);
    let der_lr = &ws.lie_rinehart["Der"].lr;
    let trivial = FlatConnectionModule::trivial(der_lr);
    raw.cocycles.insert("zero".into(), RawCochain::Zero { lie_rinehart: "Der".into() });
    let phi = random_cochain(der_lr, &trivial, 1, &mut r);
    raw.cocycles.insert("exact".into(), RawCochain::Coboundary { lie_rinehart: "Der".into(), phi: cochain_map(&phi) });
    let classes = nonzero_classes(der_lr, &trivial).map_err(|e| WorkspaceError::Syntax(e.to_string()))?;
    for i in 0..classes.len() {
        raw.cocycles.insert(format!("class{i}"), RawCochain::Class { lie_rinehart: "Der".into(), index: i });
    }
    raw.dlie.insert("D1_zero".into(), RawDLie::D1 { cocycle: "zero".into() });
    raw.dlie.insert("D1_exact".into(), RawDLie::D1 { cocycle: "exact".into() });
    if !classes.is_empty() {
        raw.dlie.insert("D1_class0".into(), RawDLie::D1 { cocycle: "class0".into() });
    }
    for l in ["Span", "Action", "Abelian"] {
        if raw.lie_rinehart.contains_key(l) {
            raw.dlie.insert(format!("F_{l}"), RawDLie::Functor { lie_rinehart: l.into(), cocycle: "exact".into() });
        }
    }
    raw.connections.insert("taut_zero".into(), RawConnection::Tautological { dlie: "D1_zero".into() });
    raw.connections.insert("taut_exact".into(), RawConnection::Tautological { dlie: "D1_exact".into() });
    if !classes.is_empty() {
        raw.connections.insert("taut_class0".into(), RawConnection::Tautological { dlie: "D1_class0".into() });
    }
    let ws = resolve(&raw)?;
    for (lname, lentry) in &ws.lie_rinehart {
        for (mname, mentry) in &ws.modules {
            let id = RationalMatrix::identity(mentry.module.dim);
            let found = random_lpsi(&lentry.lr, &mentry.module, &id, &mut r)
                .map_err(|e| WorkspaceError::Syntax(e.to_string()))?;
            if let Some(c) = found {
                let key = format!("{lname}_{mname}");
                raw.lpsi_connections.insert(
                    key.clone(),
                    RawLPsi {
                        lie_rinehart: lname.clone(),
                        module: mname.clone(),
                        psi: from_matrix(&c.psi),
                        nabla: c.nabla.iter().map(from_matrix).collect(),
                    },
                );
                if lname == "Der" || !full {
                    raw.connections
                        .insert(format!("C_{key}"), RawConnection::CFunctor { lpsi: key, cocycle: "exact".into() });
                }
            }
        }
    }
    if full {
        for (tname, tentry) in &ws.dlie {
            if !tname.starts_with("F_") {
                continue;
            }
            let e: &AModule = &ws.modules["A"].module;
            let family = connection_space(&tentry.dlie, e, None).map_err(|e| WorkspaceError::Syntax(e.to_string()))?;
            if let Some(family) = family {
                let rho = family.point(&random_vec(family.dim(), &mut r));
                raw.connections.insert(
                    format!("random_{tname}"),
                    RawConnection::Operators {
                        dlie: tname.clone(),
                        module: "A".into(),
                        rho: rho.iter().map(from_matrix).collect(),
                    },
                );
            }
        }
    }
    Ok(raw)
}

/// `[x,y] = z` over `ℚ` with a line on which `z` acts as 1.
fn heisenberg() -> RawWorkspace {
    let mut raw = RawWorkspace::default();
    raw.algebras.insert("Q".into(), RawAlgebra::Rationals {});
    raw.lie_rinehart.insert("Plane".into(), RawLieRinehart::Abelian { algebra: "Q".into(), rank: 2 });
    let one = from_vec(&[dlie_core::exactlin::q(1)]);
    raw.cocycles.insert(
        "area".into(),
        RawCochain::Values { lie_rinehart: "Plane".into(), degree: 2, values: BTreeMap::from([("0,1".into(), one)]) },
    );
    raw.dlie.insert(
        "Heisenberg".into(),
        RawDLie::Extension { lie_rinehart: "Plane".into(), cocycle: "area".into(), alpha: None },
    );
    raw.modules.insert("Line".into(), RawModule::Free { algebra: "Q".into(), rank: 1 });
    let m = |v: i64| from_matrix(&RationalMatrix::identity(1).scale(&dlie_core::exactlin::q(v)));
    raw.connections.insert(
        "unit".into(),
        RawConnection::Operators { dlie: "Heisenberg".into(), module: "Line".into(), rho: vec![m(1), m(0), m(0)] },
    );
    raw
}

pub fn corpus_json(raw: &RawWorkspace) -> String {
    let mut s = serde_json::to_string_pretty(raw).expect("workspace serializes");
    s.push('\n');
    s
}
