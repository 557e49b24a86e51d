//! Polynomial relations such as `x^3 - y^3` or `2*x*y + 1/2`.

use dlie_core::exactlin::Q;

use crate::rational::parse_rational;

/// Parses a sum of terms `c*v^k*w` into `(coefficient, exponents)` pairs.
pub fn parse_polynomial(text: &str, vars: &[String]) -> Result<Vec<(Q, Vec<u32>)>, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty polynomial".into());
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = compact.as_bytes();
    for i in 1..=bytes.len() {
        if i == bytes.len() || ((bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^') {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.iter().map(|t| parse_term(t, vars)).collect()
}

fn parse_term(term: &str, vars: &[String]) -> Result<(Q, Vec<u32>), String> {
    let (sign, body) = match term.as_bytes().first() {
        Some(b'-') => (-1, &term[1..]),
        Some(b'+') => (1, &term[1..]),
        _ => (1, term),
    };
    if body.is_empty() {
        return Err(format!("dangling sign in {term:?}"));
    }
    let mut coeff = Q::from_integer(sign.into());
    let mut exps = vec![0u32; vars.len()];
    for factor in body.split('*') {
        if factor.is_empty() {
            return Err(format!("empty factor in {term:?}"));
        }
        if factor.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            coeff *= parse_rational(factor)?;
            continue;
        }
        let (name, power) = match factor.split_once('^') {
            Some((n, p)) => (n, p.parse::<u32>().map_err(|_| format!("bad exponent in {factor:?}"))?),
            None => (factor, 1),
        };
        let v = vars
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| format!("unknown variable {name:?}"))?;
        exps[v] += power;
    }
    Ok((coeff, exps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dlie_core::exactlin::{q, qf};

    #[test]
    fn parses_signs_and_coefficients() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let p = parse_polynomial("x^3 - 3/2*x*y^2 + 2", &vars).unwrap();
        assert_eq!(p, vec![(q(1), vec![3, 0]), (qf(-3, 2), vec![1, 2]), (q(2), vec![0, 0])]);
        assert!(parse_polynomial("x + z", &vars).is_err());
        assert!(parse_polynomial("x +", &vars).is_err());
    }
}
