//! The fixed desk-scale corpus: small algebras, Lie–Rinehart algebras,
//! modules, cocycles and seeded random data over them.

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::conncat::{connection_space, lpsi_connection_space, Connection, LPsiConnection};
use crate::dlie::{twisted_extension, BracketConvention, DLieAlgebra, Provenance};
use crate::error::Result;
use crate::exactlin::{q, RationalMatrix, Q};
use crate::finalg::{compute_derivations, AModule, FiniteAlgebra};
use crate::lierinehart::{cochain_space, lr_differential, Cochain, FlatConnectionModule, LieRinehartAlgebra};

pub use rand::SeedableRng;

/// A seeded generator; every randomized corpus routine takes one.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The two-variable square-zero algebra `ℚ[x,y]/(x,y)²`.
pub fn square_zero_plane() -> FiniteAlgebra {
    FiniteAlgebra::monomial(&["x", "y"], |e| e.iter().sum::<u32>() < 2)
}

/// `ℚ × ℚ`.
pub fn split_pair() -> FiniteAlgebra {
    FiniteAlgebra::product(&FiniteAlgebra::rationals(), &FiniteAlgebra::rationals())
}

/// The corpus algebras, named.
pub fn algebras() -> Vec<(&'static str, FiniteAlgebra)> {
    vec![
        ("Q", FiniteAlgebra::rationals()),
        ("Q[x]/(x^2)", FiniteAlgebra::truncated_polynomial(2)),
        ("Q[x]/(x^3)", FiniteAlgebra::truncated_polynomial(3)),
        ("Q[x]/(x^4)", FiniteAlgebra::truncated_polynomial(4)),
        ("Q[x,y]/(x,y)^2", square_zero_plane()),
        ("QxQ", split_pair()),
    ]
}

/// `ℚ[x,y]/(x²y, xy², x³ − y³)`, of dimension 7, whose derivation algebra
/// has three independent classes in `H²(Der, A)`.
pub fn nonzero_class_algebra() -> FiniteAlgebra {
    let gens = vec![
        vec![(q(1), vec![2, 1])],
        vec![(q(1), vec![1, 2])],
        vec![(q(1), vec![3, 0]), (q(-1), vec![0, 3])],
    ];
    FiniteAlgebra::polynomial_quotient(&["x", "y"], &gens, 5).expect("the ideal is zero-dimensional")
}

/// Lie–Rinehart algebras over `alg`: `Der_k(A)`, the A-span of the first
/// derivation, the action algebra of that derivation, and `A` with zero
/// anchor.
pub fn lie_rinehart_algebras(alg: &FiniteAlgebra) -> Vec<(String, LieRinehartAlgebra)> {
    let mut out = vec![("Der".to_string(), LieRinehartAlgebra::derivations(alg))];
    let der = compute_derivations(alg);
    if let Some(d0) = der.basis().first() {
        let g = [d0.matrix.clone()];
        out.push(("A*d0".into(), LieRinehartAlgebra::span_of_derivations(alg, &g).expect("valid span")));
        out.push(("A#d0".into(), LieRinehartAlgebra::action_algebra(alg, &g).expect("abelian action")));
    }
    out.push(("A0".into(), LieRinehartAlgebra::abelian(alg, 1)));
    out
}

/// Modules of ℚ-dimension at most 4.
pub fn modules(alg: &FiniteAlgebra) -> Vec<(String, AModule)> {
    let n = alg.dim();
    let mut out = Vec::new();
    for rank in 1..=4 / n.max(1) {
        let mut m = AModule::free(alg, rank);
        m.right_action = None;
        out.push((if rank == 1 { "A".into() } else { format!("A^{rank}") }, m));
    }
    if n >= 2 {
        out.push(("A/(e1)".into(), AModule::cyclic_quotient(alg, &[alg.basis_element(1)])));
    }
    out
}

pub fn small_rational(rng: &mut impl Rng) -> Q {
    q(rng.gen_range(-3..=3))
}

pub fn random_vec(len: usize, rng: &mut impl Rng) -> Vec<Q> {
    (0..len).map(|_| small_rational(rng)).collect()
}

/// A random element of the A-multilinear `p`-cochains.
pub fn random_cochain(l: &LieRinehartAlgebra, m: &FlatConnectionModule, p: usize, rng: &mut impl Rng) -> Cochain {
    let mut c = Cochain::zero(p, l.dim(), m.dim());
    for b in cochain_space(l, m, p) {
        let s = small_rational(rng);
        if !s.is_zero() {
            c = c.add(&b.scale(&s));
        }
    }
    c
}

/// `d¹φ` for a random A-valued 1-cochain `φ`.
pub fn random_coboundary(l: &LieRinehartAlgebra, rng: &mut impl Rng) -> Result<Cochain> {
    let m = FlatConnectionModule::trivial(l);
    let phi = random_cochain(l, &m, 1, rng);
    lr_differential(l, &m, &phi)
}

/// `Az ⊕ ℚ²` over `A = ℚ` with `[x,y] = z` and structure map zero; not
/// normalised, and no connection with `ρ(z) = 1` on a line is flat.
pub fn heisenberg() -> DLieAlgebra {
    let alg = FiniteAlgebra::rationals();
    let l = LieRinehartAlgebra::abelian(&alg, 2);
    let c = Cochain::from_fn(2, 2, 1, |_| vec![Q::one()]);
    twisted_extension(
        &l,
        &c,
        RationalMatrix::zeros(1, 3),
        Cochain::zero(2, 0, 1),
        Provenance::Extension { lr: l.clone(), cocycle: c.clone() },
        BracketConvention::Standard,
    )
    .expect("shapes agree")
}

/// A random `(L,ψ)`-connection on `E`, or `None` when `E` has none.
pub fn random_lpsi(
    l: &LieRinehartAlgebra,
    e: &AModule,
    psi: &RationalMatrix,
    rng: &mut impl Rng,
) -> Result<Option<LPsiConnection>> {
    Ok(lpsi_connection_space(l, e, psi)?.map(|space| {
        let coeffs = random_vec(space.dim(), rng);
        space.point(&coeffs)
    }))
}

/// A random connection on `E`, with `ρ(D)` prescribed when given.
pub fn random_connection(
    t: &DLieAlgebra,
    e: &AModule,
    rho_d: Option<&RationalMatrix>,
    rng: &mut impl Rng,
) -> Result<Option<Connection>> {
    let Some(family) = connection_space(t, e, rho_d)? else {
        return Ok(None);
    };
    let coeffs = random_vec(family.dim(), rng);
    Connection::new(t.clone(), e.clone(), family.point(&coeffs)).map(Some)
}
