//! Public-key encryption with nearly linear decryption.
//!
//! For the secret key vector `s_vec = (1, s)` and any ciphertext `c = (c0, c1)`
//! encrypting `m` in `R_p`, the inner product `<s_vec, c> = c0 + c1 * s`
//! equals `(q/p) * m + e mod q` with `|e|_inf <= B_ct`. Distributed
//! decryption exploits that relation share by share.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ring::{Modulus, RingElement, RingPair};
use crate::sampling::{self, RngHandle};

/// Identifies one of the two evaluation servers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServerId {
    One,
    Two,
}

impl ServerId {
    pub fn index(self) -> u8 {
        match self {
            ServerId::One => 1,
            ServerId::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(ServerId::One),
            2 => Ok(ServerId::Two),
            other => Err(Error::InvalidParameter(format!(
                "server index must be 1 or 2, got {other}"
            ))),
        }
    }

    /// Sign of the re-randomization term: `+1` for server 1, `-1` for server 2.
    pub fn rerand_positive(self) -> bool {
        matches!(self, ServerId::One)
    }

    pub fn other(self) -> Self {
        match self {
            ServerId::One => ServerId::Two,
            ServerId::Two => ServerId::One,
        }
    }
}

/// Parameter set shared by every object of one deployment.
///
/// `r` doubles as the plaintext magnitude bound: derivation always sets
/// `r = B_max`, and the program validator caps every intermediate value with
/// it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PkeParams {
    /// Ring dimension, a power of two.
    pub n: usize,
    /// Rounding modulus; plaintexts of the encryption layer live in `R_p`.
    pub p: Modulus,
    /// Ciphertext modulus, a multiple of `p`.
    pub q: Modulus,
    /// Output modulus; scheme inputs and outputs live in `R_r`.
    pub r: Modulus,
    /// Standard deviation of the rounded Gaussian noise.
    pub sigma: u64,
    /// Magnitude bound on secret key coefficients (1 for ternary keys).
    pub b_sk: u64,
    /// Hard bound on noise coefficients, `8 * sigma`.
    pub b_err: u64,
    /// Bound on the nearly-linear decryption noise, `B_err * (2 h_sk + 1)`.
    pub b_ct: u64,
    /// Number of non-zero coefficients in each secret.
    pub h_sk: usize,
    /// Maximum number of original ciphertexts summed into a consumed one.
    pub b_add: u64,
}

impl PkeParams {
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "ring dimension {} must be a power of two and at least 2",
                self.n
            )));
        }
        if self.h_sk == 0 || self.h_sk > self.n {
            return Err(Error::InvalidParameter(format!(
                "secret weight {} out of range for dimension {}",
                self.h_sk, self.n
            )));
        }
        if self.q.value() <= self.p.value() {
            return Err(Error::InvalidParameter(
                "ciphertext modulus must exceed the rounding modulus".into(),
            ));
        }
        if !(self.q.value() % self.p.value()).is_zero() {
            return Err(Error::InvalidParameter(
                "rounding modulus must divide the ciphertext modulus".into(),
            ));
        }
        if self.r.value() > self.p.value() {
            return Err(Error::InvalidParameter(
                "output modulus must not exceed the rounding modulus".into(),
            ));
        }
        if self.sigma == 0 || self.b_err == 0 || self.b_ct == 0 || self.b_add == 0 {
            return Err(Error::InvalidParameter(
                "sigma, B_err, B_ct and B_add must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The rounding ratio `q / p`.
    pub fn q_over_p(&self) -> BigUint {
        self.q.value() / self.p.value()
    }

    /// The plaintext magnitude bound enforced by the program validator.
    pub fn b_max(&self) -> &BigUint {
        self.r.value()
    }
}

/// Ring-LWE public key `(a, b = a s + e)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub a: RingElement,
    pub b: RingElement,
}

/// The non-trivial half of the secret key vector `(1, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub s: RingElement,
}

/// A ciphertext `(c0, c1)` over `R_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub c0: RingElement,
    pub c1: RingElement,
}

impl Ciphertext {
    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Ciphertext {
            c0: self.c0.add(&other.c0)?,
            c1: self.c1.add(&other.c1)?,
        })
    }
}

/// Two-column matrix encrypting `(x, x * s)` without referencing `s` itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KdmCiphertext {
    pub col1: Ciphertext,
    pub col2: Ciphertext,
}

impl KdmCiphertext {
    /// Entrywise ciphertext sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(KdmCiphertext {
            col1: self.col1.add(&other.col1)?,
            col2: self.col2.add(&other.col2)?,
        })
    }
}

/// Embeds `m` from `R_p` into `R_q` scaled by `q/p`.
pub fn scale_to_q(params: &PkeParams, m: &RingElement) -> Result<RingElement> {
    if m.modulus() != &params.p {
        return Err(Error::modulus_mismatch(m.modulus(), &params.p));
    }
    let factor = params.q_over_p();
    let coeffs = m.coeffs().iter().map(|c| c * &factor).collect();
    RingElement::from_canonical(coeffs, &params.q)
}

/// Key generation: uniform `a`, sparse ternary `s`, bounded noise `e`.
pub fn gen(params: &PkeParams, rng: &mut RngHandle) -> Result<(PublicKey, SecretKey)> {
    params.validate()?;
    let a = sampling::sample_uniform_ring(params.n, &params.q, rng);
    let s = sampling::sample_sk(params.n, params.h_sk, &params.q, rng)?;
    let e = sampling::sample_err(params.n, params.sigma as f64, &params.q, rng)?;
    let b = a.mul(&s)?.add(&e)?;
    Ok((PublicKey { a, b }, SecretKey { s }))
}

/// Deterministic encryption core with caller-provided randomness.
pub fn enc_with(
    params: &PkeParams,
    pk: &PublicKey,
    m: &RingElement,
    v: &RingElement,
    e0: &RingElement,
    e1: &RingElement,
) -> Result<Ciphertext> {
    let scaled = scale_to_q(params, m)?;
    let c1 = pk.a.mul(v)?.neg().add(e0)?;
    let c0 = pk.b.mul(v)?.add(e1)?.add(&scaled)?;
    Ok(Ciphertext { c0, c1 })
}

/// Encrypts `m` in `R_p`.
pub fn enc(
    params: &PkeParams,
    pk: &PublicKey,
    m: &RingElement,
    rng: &mut RngHandle,
) -> Result<Ciphertext> {
    let v = sampling::sample_sk(params.n, params.h_sk, &params.q, rng)?;
    let e0 = sampling::sample_err(params.n, params.sigma as f64, &params.q, rng)?;
    let e1 = sampling::sample_err(params.n, params.sigma as f64, &params.q, rng)?;
    enc_with(params, pk, m, &v, &e0, &e1)
}

/// Encrypts `x * s^(j-1)` for `j` in `{1, 2}` using only the public key:
/// `j = 1` is a plain encryption of `x`, and `j = 2` adds `(q/p) * x` onto
/// the `c1` slot of an encryption of zero, the slot the secret multiplies.
pub fn okdm_component(
    params: &PkeParams,
    pk: &PublicKey,
    x: &RingElement,
    j: u8,
    rng: &mut RngHandle,
) -> Result<Ciphertext> {
    match j {
        1 => enc(params, pk, x, rng),
        2 => {
            let zero = RingElement::zero(params.n, &params.p);
            let mut ct = enc(params, pk, &zero, rng)?;
            ct.c1 = ct.c1.add(&scale_to_q(params, x)?)?;
            Ok(ct)
        }
        other => Err(Error::InvalidParameter(format!(
            "KDM component index must be 1 or 2, got {other}"
        ))),
    }
}

/// Full KDM encryption of `(x, x * s)`.
pub fn okdm(
    params: &PkeParams,
    pk: &PublicKey,
    x: &RingElement,
    rng: &mut RngHandle,
) -> Result<KdmCiphertext> {
    Ok(KdmCiphertext {
        col1: okdm_component(params, pk, x, 1, rng)?,
        col2: okdm_component(params, pk, x, 2, rng)?,
    })
}

/// Distributed decryption: rounds `<key_share, ct>` down to `R_p`, then lifts
/// the centered representative back into `R_q`. The server index does not
/// enter the computation; both servers run the identical formula on their
/// own shares.
pub fn ddec(
    params: &PkeParams,
    _server: ServerId,
    key_share: &RingPair,
    ct: &Ciphertext,
) -> Result<RingElement> {
    let inner = ct.c0.mul(&key_share.0)?.add(&ct.c1.mul(&key_share.1)?)?;
    Ok(inner.round_scale(&params.p)?.reduce_to(&params.q))
}

/// Applies [`ddec`] to both columns of a KDM ciphertext.
pub fn ddec_matrix(
    params: &PkeParams,
    server: ServerId,
    key_share: &RingPair,
    ct: &KdmCiphertext,
) -> Result<RingPair> {
    Ok(RingPair(
        ddec(params, server, key_share, &ct.col1)?,
        ddec(params, server, key_share, &ct.col2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params;
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    const SEED: [u8; 32] = [21u8; 32];

    fn toy() -> PkeParams {
        params::toy()
    }

    /// `<(1, s), c>` as used by the nearly-linear relation.
    fn inner(ct: &Ciphertext, s: &RingElement) -> RingElement {
        ct.c0.add(&ct.c1.mul(s).unwrap()).unwrap()
    }

    #[test]
    fn gen_satisfies_key_relation() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        for _ in 0..20 {
            let (pk, sk) = gen(&params, &mut rng).unwrap();
            let e = pk.b.sub(&pk.a.mul(&sk.s).unwrap()).unwrap();
            assert!(e.inf_norm() <= BigUint::from(params.b_err));
            assert_eq!(sk.s.support(), params.h_sk);
        }
    }

    #[test]
    fn enc_is_nearly_linear() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let bound = BigUint::from(params.b_ct);
        for _ in 0..100 {
            let m = sampling::sample_uniform_ring(params.n, &params.p, &mut rng);
            let ct = enc(&params, &pk, &m, &mut rng).unwrap();
            let noise = inner(&ct, &sk.s)
                .sub(&scale_to_q(&params, &m).unwrap())
                .unwrap();
            assert!(noise.inf_norm() <= bound, "noise {}", noise.inf_norm());
        }
    }

    #[test]
    fn enc_with_zero_noise_is_exact() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let zero_q = RingElement::zero(params.n, &params.q);

        // m = 0 with v = e0 = e1 = 0 gives the all-zero ciphertext.
        let zero_p = RingElement::zero(params.n, &params.p);
        let ct = enc_with(&params, &pk, &zero_p, &zero_q, &zero_q, &zero_q).unwrap();
        assert!(ct.c0.is_zero());
        assert!(ct.c1.is_zero());

        // Any m with zero randomness decrypts exactly: <s_vec, c> = (q/p) m.
        let m = RingElement::from_i64s(&[5, -3, 0, 2, 0, 0, 1, 0], params.n, &params.p);
        let ct = enc_with(&params, &pk, &m, &zero_q, &zero_q, &zero_q).unwrap();
        assert_eq!(inner(&ct, &sk.s), scale_to_q(&params, &m).unwrap());
    }

    #[test]
    fn okdm_components_are_nearly_linear() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let bound = BigUint::from(params.b_ct);
        for trial in 0..50 {
            let x = RingElement::from_i64s(&[trial - 25, 0, 3, 0, 0, 0, 0, 0], params.n, &params.p);

            // j = 1 encrypts x itself.
            let c1 = okdm_component(&params, &pk, &x, 1, &mut rng).unwrap();
            let noise = inner(&c1, &sk.s)
                .sub(&scale_to_q(&params, &x).unwrap())
                .unwrap();
            assert!(noise.inf_norm() <= bound);

            // j = 2 encrypts x * s.
            let c2 = okdm_component(&params, &pk, &x, 2, &mut rng).unwrap();
            let target = scale_to_q(&params, &x).unwrap().mul(&sk.s).unwrap();
            let noise = inner(&c2, &sk.s).sub(&target).unwrap();
            assert!(noise.inf_norm() <= bound, "j=2 noise {}", noise.inf_norm());
        }
    }

    #[test]
    fn okdm_rejects_bad_component_index() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, _) = gen(&params, &mut rng).unwrap();
        let x = RingElement::zero(params.n, &params.p);
        assert!(okdm_component(&params, &pk, &x, 0, &mut rng).is_err());
        assert!(okdm_component(&params, &pk, &x, 3, &mut rng).is_err());
    }

    #[test]
    fn ddec_zero_share_gives_zero() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, _) = gen(&params, &mut rng).unwrap();
        let m = RingElement::constant(&BigInt::from(3), params.n, &params.p);
        let ct = enc(&params, &pk, &m, &mut rng).unwrap();
        let zero_share = RingPair::zero(params.n, &params.q);
        let d = ddec(&params, ServerId::One, &zero_share, &ct).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn ddec_shares_sum_to_plaintext() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let s_vec = RingPair(
            RingElement::constant(&BigInt::from(1), params.n, &params.q),
            sk.s.clone(),
        );
        let mut failures = 0u32;
        let trials = 100;
        for t in 0..trials {
            // Small-magnitude plaintexts are the scheme's contract.
            let m =
                RingElement::from_i64s(&[t % 8, -(t % 5), 0, 0, 1, 0, 0, 0], params.n, &params.p);
            let ct = enc(&params, &pk, &m, &mut rng).unwrap();
            let t1 = RingPair(
                sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
                sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
            );
            let t2 = s_vec.sub(&t1).unwrap();
            let sum = ddec(&params, ServerId::One, &t1, &ct)
                .unwrap()
                .add(&ddec(&params, ServerId::Two, &t2, &ct).unwrap())
                .unwrap();
            let want = m.reduce_to(&params.q);
            if sum != want {
                failures += 1;
            }
        }
        // The distributed rounding failure bound at these parameters is
        // well under 10%; the pinned seed observes at most a stray failure.
        assert!(failures <= 2, "{failures} rounding failures in {trials}");
    }

    #[test]
    fn ddec_failure_rate_below_analytic_bound() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let s_vec = RingPair(
            RingElement::constant(&BigInt::from(1), params.n, &params.q),
            sk.s.clone(),
        );
        let trials = 1000;
        let mut failures = 0u32;
        let mut max_xm: f64 = 0.0;
        for t in 0..trials {
            let m =
                RingElement::from_i64s(&[(t % 17) - 8, 0, 0, 0, 0, 0, 0, 0], params.n, &params.p);
            max_xm = max_xm.max(m.inf_norm().to_f64().unwrap());
            let ct = enc(&params, &pk, &m, &mut rng).unwrap();
            let t1 = RingPair(
                sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
                sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
            );
            let t2 = s_vec.sub(&t1).unwrap();
            let sum = ddec(&params, ServerId::One, &t1, &ct)
                .unwrap()
                .add(&ddec(&params, ServerId::Two, &t2, &ct).unwrap())
                .unwrap();
            if sum != m.reduce_to(&params.q) {
                failures += 1;
            }
        }
        // Per-decryption failure bound with multiplier x = 1 and B_add = 1:
        // N * (N * B_ct * p/q + |m|/p + p/q + 1/p).
        let n = params.n as f64;
        let p = 1024.0;
        let q = (1u64 << 30) as f64;
        let bound = n * (n * params.b_ct as f64 * p / q + max_xm / p + p / q + 1.0 / p);
        let observed = failures as f64 / trials as f64;
        assert!(
            observed <= bound,
            "observed {observed} exceeds bound {bound}"
        );
    }

    #[test]
    fn ddec_matrix_applies_per_column() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, sk) = gen(&params, &mut rng).unwrap();
        let x = RingElement::constant(&BigInt::from(2), params.n, &params.p);
        let kdm = okdm(&params, &pk, &x, &mut rng).unwrap();
        let share = RingPair(
            sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
            sampling::sample_uniform_ring(params.n, &params.q, &mut rng),
        );
        let m = ddec_matrix(&params, ServerId::One, &share, &kdm).unwrap();
        assert_eq!(
            m.0,
            ddec(&params, ServerId::One, &share, &kdm.col1).unwrap()
        );
        assert_eq!(
            m.1,
            ddec(&params, ServerId::One, &share, &kdm.col2).unwrap()
        );
        let _ = sk;
    }

    #[test]
    fn modulus_mismatch_is_rejected() {
        let params = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let (pk, _) = gen(&params, &mut rng).unwrap();
        // Plaintext accidentally over q instead of p.
        let bad = RingElement::zero(params.n, &params.q);
        assert!(enc(&params, &pk, &bad, &mut rng).is_err());
    }
}
