//! Rationals as JSON strings `"p/q"` (integers may also be bare numbers).

use std::fmt;
use std::str::FromStr;

use dlie_core::exactlin::{RationalMatrix, Q};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Q);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

struct RatVisitor;

impl<'de> Visitor<'de> for RatVisitor {
    type Value = Rat;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as an integer or a string \"p/q\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
        Ok(Rat(Q::from_integer(v.into())))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
        Ok(Rat(Q::from_integer(v.into())))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
        parse_rational(v).map(Rat).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(RatVisitor)
    }
}

pub fn parse_rational(s: &str) -> Result<Q, String> {
    let t = s.trim();
    let q = Q::from_str(t).map_err(|_| format!("not a rational number: {s:?}"))?;
    Ok(q)
}

pub type RawVec = Vec<Rat>;
pub type RawMatrix = Vec<Vec<Rat>>;

pub fn to_vec(v: &[Rat]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

pub fn from_vec(v: &[Q]) -> RawVec {
    v.iter().cloned().map(Rat).collect()
}

/// Rows to a matrix, checking the shape.
pub fn to_matrix(m: &RawMatrix, rows: usize, cols: usize) -> Result<RationalMatrix, String> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(format!("expected a {rows}x{cols} matrix"));
    }
    let data = m.iter().flat_map(|r| r.iter().map(|x| x.0.clone())).collect();
    Ok(RationalMatrix::from_vec(rows, cols, data))
}

pub fn from_matrix(m: &RationalMatrix) -> RawMatrix {
    (0..m.rows()).map(|r| from_vec(m.row(r))).collect()
}
