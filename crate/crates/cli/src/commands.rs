//! One function per subcommand; each turns named workspace objects into
//! [`Outcome`]s.

use std::collections::BTreeMap;

use clap::ValueEnum;
use dlie_core::conncat::{
    annihilator_ideal, build_end_extension, c_functor_on, compute_diff1, curvature_identity_check, r_functor,
    split_extension, validate_connection, validate_lpsi, Connection, SplitStatus,
};
use dlie_core::dlie::{
    build_d1_with, canonical_quotient, check_lr_isomorphism, classify_maps_d1, exists_dlie_map, functor_f_unchecked,
    reconstruct, validate_dlie, BracketConvention, Provenance,
};
use dlie_core::exactlin::{fmt_vec, RationalMatrix};
use dlie_core::finalg::{build_principal_parts, compute_derivations, kahler_differentials_dim};
use dlie_core::lierinehart::{coboundary_solve, is_cocycle, lr_differential, Cochain, FlatConnectionModule};
use dlie_core::report::ValidationReport;
use thiserror::Error;

use crate::outcome::{fmt_matrix, Outcome};
use crate::workspace::{Workspace, WorkspaceError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dlie_core::Error),
}

impl CliError {
    /// 2 for malformed input, 1 for a failed mathematical precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Workspace(_) | CliError::Usage(_) => 2,
            CliError::Core(dlie_core::Error::Input(_) | dlie_core::Error::Dimension(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Command {
    Validate,
    Derivations,
    PrincipalParts,
    CocycleCheck,
    ClassEqual,
    BuildD1,
    BuildDlie,
    Quotient,
    Reconstruct,
    ClassifyMap,
    Diff1,
    CheckConnection,
    Curvature,
    CFunctor,
    RFunctor,
    CurvatureIdentity,
    EndExtension,
    Split,
    Annihilator,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Derivations => "derivations",
            Command::PrincipalParts => "principal-parts",
            Command::CocycleCheck => "cocycle-check",
            Command::ClassEqual => "class-equal",
            Command::BuildD1 => "build-d1",
            Command::BuildDlie => "build-dlie",
            Command::Quotient => "quotient",
            Command::Reconstruct => "reconstruct",
            Command::ClassifyMap => "classify-map",
            Command::Diff1 => "diff1",
            Command::CheckConnection => "check-connection",
            Command::Curvature => "curvature",
            Command::CFunctor => "c-functor",
            Command::RFunctor => "r-functor",
            Command::CurvatureIdentity => "curvature-identity",
            Command::EndExtension => "end-extension",
            Command::Split => "split",
            Command::Annihilator => "annihilator",
            Command::Suite => "suite",
        }
    }

    /// Roles of the `--name` arguments, in order.
    pub fn roles(self) -> &'static [&'static str] {
        match self {
            Command::Validate | Command::Suite => &[],
            Command::Derivations | Command::PrincipalParts => &["algebra"],
            Command::CocycleCheck | Command::BuildD1 => &["cocycle"],
            Command::ClassEqual => &["cocycle", "cocycle"],
            Command::BuildDlie => &["lie_rinehart", "cocycle"],
            Command::Quotient | Command::Reconstruct => &["dlie"],
            Command::ClassifyMap => &["dlie", "dlie"],
            Command::Diff1 => &["module"],
            Command::CFunctor | Command::CurvatureIdentity => &["lpsi_connection", "cocycle"],
            Command::CheckConnection
            | Command::Curvature
            | Command::RFunctor
            | Command::EndExtension
            | Command::Split
            | Command::Annihilator => &["connection"],
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub widen_class_test: bool,
}

fn get<'a, T>(map: &'a BTreeMap<String, T>, name: &str, what: &str) -> CliResult<&'a T> {
    map.get(name).ok_or_else(|| CliError::Usage(format!("no {what} named {name:?} in the workspace")))
}

/// Input errors propagate; failed preconditions become a failed outcome.
fn math<T>(o: &mut Outcome, r: dlie_core::Result<T>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (dlie_core::Error::Input(_) | dlie_core::Error::Dimension(_))) => Err(e.into()),
        Err(e) => {
            o.passed = false;
            o.fact("error", e);
            Ok(None)
        }
    }
}

fn fmt_cochain(c: &Cochain) -> String {
    let parts: Vec<String> = c
        .tuples()
        .iter()
        .zip(c.values())
        .filter(|(_, v)| v.iter().any(|x| *x != dlie_core::exactlin::q(0)))
        .map(|(t, v)| {
            let idx: Vec<String> = t.iter().map(|i| i.to_string()).collect();
            format!("({})={}", idx.join(","), fmt_vec(v))
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" ")
    }
}

pub fn run(ws: &Workspace, cmd: Command, names: &[String], opts: Options) -> CliResult<Vec<Outcome>> {
    let roles = cmd.roles();
    if cmd != Command::Validate && names.len() != roles.len() {
        return Err(CliError::Usage(format!(
            "{} expects --name for: {}",
            cmd.name(),
            if roles.is_empty() { "nothing".to_string() } else { roles.join(", ") }
        )));
    }
    let n = |i: usize| names[i].as_str();
    let out = match cmd {
        Command::Validate => return validate(ws, names),
        Command::Suite => return suite(ws, opts),
        Command::Derivations => derivations(ws, n(0))?,
        Command::PrincipalParts => principal_parts(ws, n(0))?,
        Command::CocycleCheck => cocycle_check(ws, n(0))?,
        Command::ClassEqual => class_equal(ws, n(0), n(1))?,
        Command::BuildD1 => build_d1_cmd(ws, n(0))?,
        Command::BuildDlie => build_dlie(ws, n(0), n(1))?,
        Command::Quotient => quotient(ws, n(0))?,
        Command::Reconstruct => reconstruct_cmd(ws, n(0))?,
        Command::ClassifyMap => classify_map(ws, n(0), n(1), opts)?,
        Command::Diff1 => diff1(ws, n(0))?,
        Command::CheckConnection => check_connection(ws, n(0))?,
        Command::Curvature => curvature(ws, n(0))?,
        Command::CFunctor => c_functor_cmd(ws, n(0), n(1))?,
        Command::RFunctor => r_functor_cmd(ws, n(0))?,
        Command::CurvatureIdentity => curvature_identity(ws, n(0), n(1))?,
        Command::EndExtension => end_extension(ws, n(0))?,
        Command::Split => split(ws, n(0))?,
        Command::Annihilator => annihilator(ws, n(0))?,
    };
    Ok(vec![out])
}

fn validate(ws: &Workspace, names: &[String]) -> CliResult<Vec<Outcome>> {
    let mut out = Vec::new();
    for name in names {
        if !ws.reports.iter().any(|(k, _)| k == name) {
            return Err(CliError::Usage(format!("no object {name:?}; use section.name")));
        }
    }
    for (key, report) in &ws.reports {
        if names.is_empty() || names.contains(key) {
            let mut o = Outcome::new("validate", key.clone());
            o.report(report.clone());
            out.push(o);
        }
    }
    Ok(out)
}

fn derivations(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let alg = get(&ws.algebras, name, "algebra")?;
    let der = compute_derivations(alg);
    let mut o = Outcome::new("derivations", name);
    o.fact("dim_algebra", alg.dim()).fact("dim_derivations", der.dim());
    let mut r = ValidationReport::new("derivations");
    for (i, d) in der.basis().iter().enumerate() {
        o.fact(&format!("basis[{i}]"), fmt_matrix(&d.matrix));
        r.merge(&format!("basis[{i}]"), d.validate(alg));
    }
    o.report(r);
    Ok(o)
}

fn principal_parts(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let alg = get(&ws.algebras, name, "algebra")?;
    let pp = build_principal_parts(alg);
    let kahler = kahler_differentials_dim(alg);
    let mut o = Outcome::new("principal-parts", name);
    o.fact("dim_algebra", alg.dim())
        .fact("dim_principal_parts", pp.dim)
        .fact("dim_ideal", pp.ideal_dim)
        .fact("dim_ideal_square", pp.ideal_square_dim)
        .fact("dim_kahler", kahler);
    let mut r = pp.validate(alg);
    r.expect(
        "dimension_formula",
        &[],
        pp.dim == alg.dim() + kahler,
        pp.dim.to_string(),
        format!("{} + {kahler}", alg.dim()),
    );
    o.report(r);
    Ok(o)
}

fn cocycle_check(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = get(&ws.cocycles, name, "cocycle")?;
    let l = &ws.lie_rinehart[&c.lie_rinehart].lr;
    let check = is_cocycle(l, &FlatConnectionModule::trivial(l), &c.cochain)?;
    let mut o = Outcome::new("cocycle-check", name);
    o.fact("lie_rinehart", &c.lie_rinehart).fact("degree", c.cochain.degree).fact("is_cocycle", check.is_cocycle);
    let mut r = ValidationReport::new("cocycle");
    r.check("closed");
    if let Some((t, v)) = check.witness {
        r.fail("closed", &t, fmt_vec(&v), "0".into());
    }
    o.report(r);
    Ok(o)
}

fn class_equal(ws: &Workspace, f: &str, g: &str) -> CliResult<Outcome> {
    let cf = get(&ws.cocycles, f, "cocycle")?;
    let cg = get(&ws.cocycles, g, "cocycle")?;
    if cf.lie_rinehart != cg.lie_rinehart {
        return Err(CliError::Usage("both cochains must live on the same Lie–Rinehart algebra".into()));
    }
    let l = &ws.lie_rinehart[&cf.lie_rinehart].lr;
    let m = FlatConnectionModule::trivial(l);
    let mut o = Outcome::new("class-equal", format!("{f} {g}"));
    let sol = coboundary_solve(l, &m, &cf.cochain, &cg.cochain)?;
    o.fact("cohomologous", sol.is_some());
    let mut r = ValidationReport::new("class_equal");
    r.check("coboundary");
    match sol {
        Some(s) => {
            let d = lr_differential(l, &m, &s.phi)?;
            r.expect_vec("coboundary", &[], &cg.cochain.sub(&cf.cochain).to_vec(), &d.to_vec());
            o.fact("phi", fmt_cochain(&s.phi)).fact("z1_dim", s.cocycles.len());
        }
        None => {
            o.passed = false;
            o.fact("phi", "none");
        }
    }
    o.report(r);
    Ok(o)
}

fn require_der(ws: &Workspace, cocycle: &str) -> CliResult<()> {
    if !ws.on_derivations(cocycle) {
        return Err(CliError::Usage(format!("cocycle {cocycle:?} must live on a derivations algebra")));
    }
    Ok(())
}

fn build_d1_cmd(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = get(&ws.cocycles, name, "cocycle")?;
    require_der(ws, name)?;
    let entry = &ws.lie_rinehart[&c.lie_rinehart];
    let alg = &ws.algebras[&entry.algebra];
    let t = build_d1_with(alg, &c.cochain, BracketConvention::Standard)?;
    let closed = is_cocycle(&entry.lr, &FlatConnectionModule::trivial(&entry.lr), &c.cochain)?.is_cocycle;
    let mut o = Outcome::new("build-d1", name);
    o.fact("algebra", &entry.algebra).fact("dim", t.dim()).fact("is_cocycle", closed);
    o.report(validate_dlie(&t));
    Ok(o)
}

fn build_dlie(ws: &Workspace, lr: &str, cocycle: &str) -> CliResult<Outcome> {
    let l = get(&ws.lie_rinehart, lr, "Lie–Rinehart algebra")?;
    let c = get(&ws.cocycles, cocycle, "cocycle")?;
    require_der(ws, cocycle)?;
    if ws.cocycle_algebra(cocycle) != Some(l.algebra.as_str()) {
        return Err(CliError::Usage("Lie–Rinehart algebra and cocycle live over different algebras".into()));
    }
    let t = functor_f_unchecked(&l.lr, &c.cochain)?;
    let mut o = Outcome::new("build-dlie", format!("{lr} {cocycle}"));
    o.fact("dim", t.dim());
    o.report(validate_dlie(&t));
    Ok(o)
}

fn quotient(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let t = &get(&ws.dlie, name, "D-Lie algebra")?.dlie;
    let mut o = Outcome::new("quotient", name);
    if let Some(cq) = math(&mut o, canonical_quotient(t))? {
        o.fact("dim_ideal", cq.ideal.dim()).fact("dim_quotient", cq.lr.dim());
        o.report(cq.report.clone());
        if let Some((lr, _)) = t.twisted_data() {
            if lr.dim() == cq.lr.dim() {
                o.report(check_lr_isomorphism(&cq.lr, &lr, &RationalMatrix::identity(lr.dim())));
            }
        }
    }
    Ok(o)
}

fn reconstruct_cmd(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let t = &get(&ws.dlie, name, "D-Lie algebra")?.dlie;
    let mut o = Outcome::new("reconstruct", name);
    if let Some(rec) = math(&mut o, reconstruct(t))? {
        o.fact("free_rank", rec.free_basis.len())
            .fact("g", fmt_cochain(&rec.g))
            .fact("f_alpha", fmt_cochain(&rec.f_alpha))
            .fact("beta", fmt_cochain(&rec.beta))
            .fact("isomorphism", if rec.report.is_valid() { "found" } else { "not verified" });
        o.report(rec.report);
    }
    Ok(o)
}

fn classify_map(ws: &Workspace, src: &str, tgt: &str, opts: Options) -> CliResult<Outcome> {
    let s = get(&ws.dlie, src, "D-Lie algebra")?;
    let t = get(&ws.dlie, tgt, "D-Lie algebra")?;
    let mut o = Outcome::new("classify-map", format!("{src} {tgt}"));
    if s.dlie.provenance == Provenance::D1 && t.dlie.provenance == Provenance::D1 {
        if s.algebra != t.algebra {
            return Err(CliError::Usage("both algebras must be built over the same algebra".into()));
        }
        let alg = &ws.algebras[&s.algebra];
        if let Some(found) = math(&mut o, classify_maps_d1(alg, &s.dlie.base_cocycle, &t.dlie.base_cocycle))? {
            o.fact("exists", found.is_some());
            match found {
                Some(c) => {
                    o.fact("alpha1", fmt_cochain(&c.map.alpha1)).fact("z1_dim", c.cocycles.len());
                    o.report(c.map.report);
                }
                None => {
                    o.passed = false;
                }
            }
        }
        return Ok(o);
    }
    if let Some(dec) = math(&mut o, exists_dlie_map(&s.dlie, &t.dlie, opts.widen_class_test))? {
        o.fact("exists", dec.exists());
        if let Some(w) = &dec.widened {
            o.fact("exists_widened", w.is_some());
        }
        if !dec.exists() {
            o.passed = false;
        } else if dec.source_lr == dec.target_lr {
            let id = RationalMatrix::identity(dec.source_lr.dim());
            if let Some(m) = math(&mut o, dec.construct(&id))? {
                o.fact("alpha1", fmt_cochain(&m.alpha1));
                o.report(m.report);
            }
        }
    }
    Ok(o)
}

fn diff1(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let e = &get(&ws.modules, name, "module")?.module;
    let d = compute_diff1(e);
    let mut o = Outcome::new("diff1", name);
    o.fact("dim_module", e.dim).fact("dim_diff1", d.dim()).fact("dim_end", e.dim * e.dim);
    o.report(d.validate());
    Ok(o)
}

fn connection<'a>(ws: &'a Workspace, name: &str) -> CliResult<&'a Connection> {
    Ok(&get(&ws.connections, name, "connection")?.connection)
}

fn check_connection(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("check-connection", name);
    o.fact("rho_d_identity", c.rho_d_is_identity()).fact("flat", c.is_flat());
    o.report(validate_connection(c));
    Ok(o)
}

fn curvature(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("curvature", name);
    let diff = compute_diff1(&c.module);
    let mut r = ValidationReport::new("curvature");
    r.check("in_diff1");
    r.check("alternating");
    let big = c.source.dim();
    let mut nonzero = 0;
    for i in 0..big {
        let rii = c.curvature_basis(i, i);
        r.expect_matrix("alternating", &[i, i], &rii, &RationalMatrix::zeros(rii.rows(), rii.cols()));
        for j in i + 1..big {
            let k = c.curvature_basis(i, j);
            r.expect("in_diff1", &[i, j], diff.contains(&k), fmt_matrix(&k), "in Diff1".into());
            if !k.is_zero() {
                nonzero += 1;
                o.fact(&format!("R({i},{j})"), fmt_matrix(&k));
            }
        }
    }
    o.fact("flat", nonzero == 0).fact("nonzero_pairs", nonzero);
    o.report(r);
    Ok(o)
}

fn c_functor_cmd(ws: &Workspace, lpsi: &str, cocycle: &str) -> CliResult<Outcome> {
    let n = &get(&ws.lpsi_connections, lpsi, "(L,psi)-connection")?.connection;
    let f = get(&ws.cocycles, cocycle, "cocycle")?;
    require_der(ws, cocycle)?;
    let t = functor_f_unchecked(&n.lr, &f.cochain)?;
    let mut o = Outcome::new("c-functor", format!("{lpsi} {cocycle}"));
    if let Some(c) = math(&mut o, c_functor_on(&t, n))? {
        o.fact("rho_z_is_psi", c.rho_d() == n.psi).fact("rho_d_identity", c.rho_d_is_identity());
        o.report(validate_connection(&c));
        let mut r = ValidationReport::new("round_trip");
        let back = r_functor(&c)?;
        r.expect("r_after_c", &[], back == *n, "differs".into(), "identity".into());
        o.report(r);
    }
    Ok(o)
}

fn r_functor_cmd(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("r-functor", name);
    if let Some(n) = math(&mut o, r_functor(c))? {
        o.fact("psi", fmt_matrix(&n.psi)).fact("psi_identity", n.psi == RationalMatrix::identity(n.psi.rows()));
        for (i, m) in n.nabla.iter().enumerate() {
            o.fact(&format!("nabla[{i}]"), fmt_matrix(m));
        }
        o.report(validate_lpsi(&n));
        let mut r = ValidationReport::new("round_trip");
        let back = c_functor_on(&c.source, &n)?;
        r.expect("c_after_r", &[], back == *c, "differs".into(), "identity".into());
        o.report(r);
    }
    Ok(o)
}

fn curvature_identity(ws: &Workspace, lpsi: &str, cocycle: &str) -> CliResult<Outcome> {
    let n = &get(&ws.lpsi_connections, lpsi, "(L,psi)-connection")?.connection;
    require_der(ws, cocycle)?;
    let f = &get(&ws.cocycles, cocycle, "cocycle")?.cochain;
    let mut o = Outcome::new("curvature-identity", format!("{lpsi} {cocycle}"));
    o.fact("psi_identity", n.psi == RationalMatrix::identity(n.psi.rows()));
    if let Some(r) = math(&mut o, curvature_identity_check(n, f))? {
        o.report(r);
    }
    Ok(o)
}

fn end_extension(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("end-extension", name);
    if let Some(x) = math(&mut o, build_end_extension(c))? {
        o.fact("dim_end", x.end_dim())
            .fact("dim", x.dlie.dim())
            .fact("end_commutative", x.end_is_commutative())
            .fact("flat", x.flat.is_flat());
        o.report(x.report);
    }
    Ok(o)
}

fn split(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("split", name);
    let Some(x) = math(&mut o, build_end_extension(c))? else {
        return Ok(o);
    };
    let s = split_extension(&x)?;
    o.fact("status", s.status);
    if let Some(p) = &s.correction {
        for (i, m) in p.iter().enumerate() {
            o.fact(&format!("P[{i}]"), fmt_matrix(m));
        }
    }
    if s.status != SplitStatus::Split {
        o.passed = false;
    }
    o.report(s.report);
    Ok(o)
}

fn annihilator(ws: &Workspace, name: &str) -> CliResult<Outcome> {
    let c = connection(ws, name)?;
    let mut o = Outcome::new("annihilator", name);
    let ideal = annihilator_ideal(c)?;
    o.fact("dim_principal_parts", ideal.p_dim)
        .fact("dim_ideal", ideal.basis.len())
        .fact("action_rank", ideal.action_rank);
    for (i, v) in ideal.basis.iter().enumerate() {
        o.fact(&format!("basis[{i}]"), fmt_vec(v));
    }
    o.report(ideal.report);
    Ok(o)
}

/// Every applicable command on every object and compatible pair.
fn suite(ws: &Workspace, opts: Options) -> CliResult<Vec<Outcome>> {
    let mut out = validate(ws, &[])?;
    let mut push = |cmd: Command, names: &[&str]| -> CliResult<()> {
        let owned: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        out.extend(run(ws, cmd, &owned, opts)?);
        Ok(())
    };
    for a in ws.algebras.keys() {
        push(Command::Derivations, &[a])?;
        push(Command::PrincipalParts, &[a])?;
    }
    let der_cocycles: Vec<&String> = ws.cocycles.keys().filter(|c| ws.on_derivations(c)).collect();
    for (c, entry) in &ws.cocycles {
        push(Command::CocycleCheck, &[c])?;
        for (d, other) in &ws.cocycles {
            if c < d && entry.lie_rinehart == other.lie_rinehart && entry.cochain.degree == other.cochain.degree {
                push(Command::ClassEqual, &[c, d])?;
            }
        }
    }
    for c in &der_cocycles {
        push(Command::BuildD1, &[c])?;
        for (l, entry) in &ws.lie_rinehart {
            if ws.cocycle_algebra(c) == Some(entry.algebra.as_str()) {
                push(Command::BuildDlie, &[l, c])?;
            }
        }
    }
    for (t, entry) in &ws.dlie {
        push(Command::Quotient, &[t])?;
        push(Command::Reconstruct, &[t])?;
        for (u, other) in &ws.dlie {
            if entry.algebra == other.algebra && entry.dlie.functor_lr().is_some() && other.dlie.functor_lr().is_some() {
                push(Command::ClassifyMap, &[t, u])?;
            }
        }
    }
    for m in ws.modules.keys() {
        push(Command::Diff1, &[m])?;
    }
    for (n, entry) in &ws.lpsi_connections {
        let alg = &ws.lie_rinehart[&entry.lie_rinehart].algebra;
        for c in &der_cocycles {
            if ws.cocycle_algebra(c) == Some(alg.as_str()) {
                push(Command::CFunctor, &[n, c])?;
                push(Command::CurvatureIdentity, &[n, c])?;
            }
        }
    }
    for (c, entry) in &ws.connections {
        push(Command::CheckConnection, &[c])?;
        push(Command::Curvature, &[c])?;
        if entry.connection.source.twisted_data().is_some() {
            push(Command::RFunctor, &[c])?;
        }
        if entry.connection.rho_d_is_identity() {
            push(Command::EndExtension, &[c])?;
            push(Command::Split, &[c])?;
        }
        push(Command::Annihilator, &[c])?;
    }
    Ok(out)
}
