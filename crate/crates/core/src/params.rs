//! Parameter profiles: derivation from a plaintext bound, the reference
//! production rows, the insecure toy profile for tests, and the exact
//! evaluation correctness bound.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::pke::PkeParams;
use crate::ring::Modulus;

/// Default statistical security parameter.
pub const DEFAULT_KAPPA: u32 = 40;
/// Default noise standard deviation.
pub const DEFAULT_SIGMA: u64 = 8;

/// Reference parameter rows: `(lg B_max, N, lg p, lg q, security)`.
/// The security column is the documented classical hardness estimate of the
/// underlying ring-LWE instance for that row.
pub const REFERENCE_ROWS: [(u32, usize, u64, u64, f64); 6] = [
    (1, 4096, 66, 153, 117.1),
    (16, 4096, 81, 183, 86.5),
    (32, 8192, 99, 220, 198.7),
    (64, 8192, 131, 284, 128.9),
    (128, 16384, 197, 417, 214.0),
    (256, 16384, 325, 673, 96.7),
];

/// Inputs to parameter derivation.
#[derive(Clone, Debug)]
pub struct ParamRequest {
    /// Bound on the magnitude of every plaintext value the program touches.
    pub b_max: BigUint,
    /// Optional power-of-two override for the ring dimension.
    pub n: Option<usize>,
    /// Statistical security parameter.
    pub kappa: u32,
    /// Noise standard deviation.
    pub sigma: u64,
    /// Maximum number of original ciphertexts summed into a consumed one.
    pub b_add: u64,
}

impl ParamRequest {
    pub fn new(b_max: BigUint) -> Self {
        ParamRequest {
            b_max,
            n: None,
            kappa: DEFAULT_KAPPA,
            sigma: DEFAULT_SIGMA,
            b_add: 1,
        }
    }
}

/// A derived parameter set plus the documented security level when the
/// request matches a reference row.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedParams {
    pub pke: PkeParams,
    pub security: Option<f64>,
}

fn ceil_log2(x: &BigUint) -> u64 {
    debug_assert!(x.bits() > 0, "ceil_log2 of zero");
    if x.count_ones() == 1 {
        x.bits() - 1
    } else {
        x.bits()
    }
}

/// Picks the reference ring dimension for a plaintext bound.
fn dimension_for(b_max: &BigUint) -> Result<usize> {
    if *b_max <= BigUint::one() << 16 {
        Ok(4096)
    } else if *b_max <= BigUint::one() << 64 {
        Ok(8192)
    } else if *b_max <= BigUint::one() << 256 {
        Ok(16384)
    } else {
        Err(Error::InvalidParameter(
            "no reference dimension for plaintext bounds above 2^256".into(),
        ))
    }
}

/// Derives a full parameter set from a plaintext bound.
///
/// With secret weight `h_sk = N/2` and noise bound `B_err = 8 sigma`, the
/// rounding modulus is `p = N * B_max * h_sk * 2^(kappa+2)` rounded up to a
/// power of two, and `q = p * 2^k` is the smallest such multiple with
/// `q >= 2^(kappa+3) * p * N^2 * B_max * B_ct`. The decryption-noise bound
/// keeps the exact factor `B_ct = B_err * (2 h_sk + 1)`.
pub fn derive(req: &ParamRequest) -> Result<DerivedParams> {
    if req.b_max < BigUint::from(2u32) {
        return Err(Error::InvalidParameter(
            "plaintext bound must be at least 2".into(),
        ));
    }
    if req.sigma == 0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    if req.b_add == 0 {
        return Err(Error::InvalidParameter("B_add must be positive".into()));
    }
    let n = match req.n {
        Some(n) => {
            if !n.is_power_of_two() || n < 2 {
                return Err(Error::InvalidParameter(format!(
                    "ring dimension {n} must be a power of two and at least 2"
                )));
            }
            n
        }
        None => dimension_for(&req.b_max)?,
    };
    let h_sk = n / 2;
    let b_err = 8 * req.sigma;
    let b_ct = b_err * (2 * h_sk as u64 + 1);

    let p_raw = (BigUint::from(n) * &req.b_max * BigUint::from(h_sk)) << (req.kappa + 2);
    let lg_p = ceil_log2(&p_raw);
    let p = BigUint::one() << lg_p;

    let need =
        (BigUint::from(n) * BigUint::from(n) * &req.b_max * BigUint::from(b_ct)) << (req.kappa + 3);
    let k = ceil_log2(&need);
    let q = &p << k;

    let pke = PkeParams {
        n,
        p: Modulus::new(p)?,
        q: Modulus::new(q)?,
        r: Modulus::new(req.b_max.clone())?,
        sigma: req.sigma,
        b_sk: 1,
        b_err,
        b_ct,
        h_sk,
        b_add: req.b_add,
    };
    pke.validate()?;

    let security = REFERENCE_ROWS
        .iter()
        .find(|(lg_b, row_n, _, _, _)| {
            req.b_max == BigUint::one() << *lg_b
                && n == *row_n
                && req.kappa == DEFAULT_KAPPA
                && req.sigma == DEFAULT_SIGMA
        })
        .map(|&(_, _, _, _, sec)| sec);

    Ok(DerivedParams { pke, security })
}

/// Derives all six reference rows.
pub fn table_rows() -> Result<Vec<DerivedParams>> {
    REFERENCE_ROWS
        .iter()
        .map(|&(lg_b, _, _, _, _)| derive(&ParamRequest::new(BigUint::one() << lg_b)))
        .collect()
}

/// The insecure toy profile used throughout the test suite: small enough to
/// run thousands of evaluations per second, with enough rounding headroom
/// for single-shot examples but nowhere near the derived correctness margin.
pub fn toy() -> PkeParams {
    PkeParams {
        n: 8,
        p: Modulus::pow2(10),
        q: Modulus::pow2(30),
        r: Modulus::pow2(4),
        sigma: 3,
        b_sk: 1,
        b_err: 24,
        b_ct: 24 * 9,
        h_sk: 4,
        b_add: 1,
    }
}

/// Small derived profile: full `kappa = 40` rounding margins at a toy ring
/// dimension, so mass exactness tests never hit a rounding failure.
pub fn toy_exact(b_max: u64) -> Result<PkeParams> {
    let mut req = ParamRequest::new(BigUint::from(b_max));
    req.n = Some(8);
    Ok(derive(&req)?.pke)
}

/// Exact rational lower bound on the probability that a verified evaluation
/// of a program with `size_f` instructions returns the correct output, for
/// honest servers and inputs within the declared bounds. `p_inp_plus` is the
/// maximum number of input ciphertexts summed before consumption.
pub fn correctness_bound(params: &PkeParams, size_f: u64, p_inp_plus: u64) -> BigRational {
    let int = |u: &BigUint| BigInt::from(u.clone());
    let n = BigInt::from(params.n);
    let p = int(params.p.value());
    let q = int(params.q.value());
    let b_max = int(params.r.value());
    let b_ct = BigInt::from(params.b_ct);
    let b_sk = BigInt::from(params.b_sk);
    let four_s = BigInt::from(4u32) * BigInt::from(size_f);
    let p_inp = BigInt::from(p_inp_plus);

    let term_output = BigRational::new(&n * (&b_max + BigInt::one()), q.clone());
    let inner =
        BigRational::new(&b_ct * &p, q.clone()) + BigRational::new(&b_sk * &b_sk, p.clone());
    let term_mult = BigRational::from(&four_s * &n * &n * &p_inp * &b_max) * inner;
    let term_lift = BigRational::from(&four_s * &n)
        * (BigRational::new(p.clone(), q.clone()) + BigRational::new(BigInt::one(), p.clone()));

    BigRational::one() - term_output - term_mult - term_lift
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{Signed, Zero};

    #[test]
    fn reference_rows_reproduce() {
        for &(lg_b, n, lg_p, lg_q, security) in REFERENCE_ROWS.iter() {
            let derived = derive(&ParamRequest::new(BigUint::one() << lg_b)).unwrap();
            let pke = &derived.pke;
            assert_eq!(pke.n, n, "N for B_max = 2^{lg_b}");
            assert_eq!(pke.p.value(), &(BigUint::one() << lg_p), "p for 2^{lg_b}");
            assert_eq!(pke.q.value(), &(BigUint::one() << lg_q), "q for 2^{lg_b}");
            assert_eq!(pke.h_sk, n / 2);
            assert_eq!(pke.b_err, 64);
            assert_eq!(pke.b_ct, 64 * (n as u64 + 1));
            assert_eq!(pke.r.value(), &(BigUint::one() << lg_b));
            assert_eq!(derived.security, Some(security));
        }
    }

    #[test]
    fn table_rows_lists_all_six() {
        let rows = table_rows().unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!(row.security.is_some());
            row.pke.validate().unwrap();
        }
    }

    #[test]
    fn derived_bound_row_one_is_tiny() {
        let derived = derive(&ParamRequest::new(BigUint::from(2u32))).unwrap();
        let bound = correctness_bound(&derived.pke, 1, 1);
        let floor = BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << 35);
        assert!(bound >= floor, "bound {bound} below 1 - 2^-35");
        assert!(bound < BigRational::one());
    }

    #[test]
    fn bound_decreases_with_size() {
        let derived = derive(&ParamRequest::new(BigUint::one() << 32)).unwrap();
        let mut prev = correctness_bound(&derived.pke, 1, 1);
        for size in 2..100 {
            let next = correctness_bound(&derived.pke, size, 1);
            assert!(next < prev, "bound not decreasing at size {size}");
            prev = next;
        }
    }

    #[test]
    fn toy_bound_is_vacuous_but_exact() {
        // The toy profile trades the correctness margin for speed; the exact
        // rational bound goes negative there, which downstream tests treat
        // as an unconditional failure allowance.
        let bound = correctness_bound(&toy(), 32, 1);
        assert!(bound.is_negative());
    }

    #[test]
    fn derivation_respects_overrides() {
        let mut req = ParamRequest::new(BigUint::from(16u32));
        req.n = Some(8);
        let derived = derive(&req).unwrap();
        assert_eq!(derived.pke.n, 8);
        assert_eq!(derived.pke.h_sk, 4);
        assert_eq!(derived.security, None);
        // p = 8 * 16 * 4 * 2^42 = 2^51, q/p needs 2^43 * 64 * 16 * 576.
        assert_eq!(derived.pke.p.value(), &(BigUint::one() << 51));
        let need = BigUint::from(64u64 * 16 * 576) << 43;
        let q_over_p = derived.pke.q_over_p();
        assert!(q_over_p >= need);
        assert!((&q_over_p >> 1) < need, "q is not minimal");
    }

    #[test]
    fn derivation_rejects_bad_requests() {
        assert!(derive(&ParamRequest::new(BigUint::one())).is_err());
        assert!(derive(&ParamRequest::new(BigUint::zero())).is_err());
        let mut req = ParamRequest::new(BigUint::from(4u32));
        req.n = Some(12);
        assert!(derive(&req).is_err());
        assert!(derive(&ParamRequest::new(BigUint::one() << 300)).is_err());
        let mut req = ParamRequest::new(BigUint::from(4u32));
        req.sigma = 0;
        assert!(derive(&req).is_err());
    }

    #[test]
    fn off_row_bounds_have_no_security_claim() {
        let derived = derive(&ParamRequest::new(BigUint::from(1000u32))).unwrap();
        assert_eq!(derived.security, None);
        assert_eq!(derived.pke.n, 4096);
        derived.pke.validate().unwrap();
    }

    #[test]
    fn toy_profiles_validate() {
        toy().validate().unwrap();
        let te = toy_exact(16).unwrap();
        te.validate().unwrap();
        assert_eq!(te.n, 8);
        // kappa = 40 margins at dimension 8.
        assert!(te.q_over_p() >= (BigUint::one() << 43));
    }

    #[test]
    fn non_power_of_two_bound_rounds_p_up() {
        let derived = derive(&ParamRequest::new(BigUint::from(7u32))).unwrap();
        let p = derived.pke.p.value();
        assert_eq!(p.count_ones(), 1, "p must be a power of two");
        // N * 7 * h * 2^42 for N = 4096 is 7 * 2^65; the next power is 2^68.
        assert_eq!(p, &(BigUint::one() << 68));
    }
}
