//! Named parameter profiles accepted by the command line.

use num_bigint::BigUint;
use num_traits::{Num, One};

use vhss_core::pke::PkeParams;
use vhss_core::{params, Error, Result};

/// Resolves a profile string to a canonical name and a parameter set.
///
/// `toy` is the fixed insecure test profile. `toy-exact[=B]` derives a full
/// parameter set at ring dimension 8, which keeps evaluation exact up to the
/// statistical slack but is equally insecure. `table2=<lg B>` derives a
/// production row for the plaintext bound `2^lg B`.
pub fn parse_profile(spec: &str) -> Result<(String, PkeParams)> {
    let bad = |msg: String| Error::InvalidParameter(msg);
    if spec == "toy" {
        return Ok(("toy".into(), params::toy()));
    }
    if spec == "toy-exact" {
        return Ok(("toy-exact=16".into(), params::toy_exact(16)?));
    }
    if let Some(arg) = spec.strip_prefix("toy-exact=") {
        let bound: u64 = arg
            .parse()
            .map_err(|_| bad(format!("bad toy-exact bound {arg:?}")))?;
        return Ok((format!("toy-exact={bound}"), params::toy_exact(bound)?));
    }
    if let Some(arg) = spec.strip_prefix("table2=") {
        let lg: u32 = arg
            .parse()
            .map_err(|_| bad(format!("bad table2 exponent {arg:?}")))?;
        let derived = params::derive(&params::ParamRequest::new(BigUint::one() << lg))?;
        return Ok((format!("table2={lg}"), derived.pke));
    }
    Err(bad(format!(
        "unknown profile {spec:?}; expected toy, toy-exact[=B], or table2=<lg B>"
    )))
}

/// Parses a magnitude given either in decimal or as `2^k`.
pub fn parse_magnitude(s: &str) -> Result<BigUint> {
    let bad = || Error::InvalidParameter(format!("bad magnitude {s:?}"));
    if let Some(exp) = s.strip_prefix("2^") {
        let k: u64 = exp.parse().map_err(|_| bad())?;
        if k > 4096 {
            return Err(bad());
        }
        return Ok(BigUint::one() << k);
    }
    BigUint::from_str_radix(s, 10).map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles_resolve() {
        let (name, p) = parse_profile("toy").unwrap();
        assert_eq!(name, "toy");
        assert_eq!(p.n, 8);

        let (name, p) = parse_profile("toy-exact").unwrap();
        assert_eq!(name, "toy-exact=16");
        assert_eq!(p.n, 8);
        assert_eq!(p.r.value(), &BigUint::from(16u32));

        let (name, p) = parse_profile("table2=32").unwrap();
        assert_eq!(name, "table2=32");
        assert_eq!(p.n, 8192);
        assert_eq!(p.q.value(), &(BigUint::one() << 220));
    }

    #[test]
    fn bad_profiles_are_rejected() {
        assert!(parse_profile("huge").is_err());
        assert!(parse_profile("table2=").is_err());
        assert!(parse_profile("toy-exact=x").is_err());
    }

    #[test]
    fn magnitudes_parse_both_ways() {
        assert_eq!(parse_magnitude("12").unwrap(), BigUint::from(12u32));
        assert_eq!(parse_magnitude("2^32").unwrap(), BigUint::one() << 32);
        assert!(parse_magnitude("2^").is_err());
        assert!(parse_magnitude("-1").is_err());
        assert!(parse_magnitude("2^9999").is_err());
    }
}
