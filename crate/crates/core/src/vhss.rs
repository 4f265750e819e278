//! Two-server verifiable homomorphic secret sharing.
//!
//! Key generation splits the secret key vector `(1, s)` and the tag key
//! vector `(s_hat, s_hat * s)` additively between two servers. Inputs are
//! published as KDM ciphertext matrices. Each server evaluates a validated
//! program locally over memory shares, re-randomizing with signed PRF terms
//! that cancel across the pair, and emits a partial result over `R_r`. The
//! verifier accepts when the reconstructed tag equals `s_hat` times the
//! reconstructed output.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::pke::{self, KdmCiphertext, PkeParams, PublicKey, ServerId};
use crate::program::{Instr, ValidatedProgram};
use crate::ring::{RingElement, RingPair};
use crate::sampling::{self, PrfKey, RngHandle};

use std::collections::HashMap;

/// The verifier's secret: a sparse ternary `s_hat` together with
/// `s_hat * s`, both over `R_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationKey {
    pub s_hat: RingElement,
    pub s_hat_s: RingElement,
}

/// One server's evaluation key: two PRF keys shared with the other server
/// and additive shares of the secret-key and tag-key vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationKey {
    pub server: ServerId,
    pub k1: PrfKey,
    pub k2: PrfKey,
    /// Share of `(1, s)`.
    pub s1: RingPair,
    /// Share of `(s_hat, s_hat * s)`.
    pub s2: RingPair,
}

/// Everything key generation produces.
#[derive(Clone, Debug)]
pub struct KeyBundle {
    pub pk: PublicKey,
    pub vk: VerificationKey,
    pub ek1: EvaluationKey,
    pub ek2: EvaluationKey,
}

impl KeyBundle {
    pub fn ek(&self, server: ServerId) -> &EvaluationKey {
        match server {
            ServerId::One => &self.ek1,
            ServerId::Two => &self.ek2,
        }
    }
}

/// One server's running share of a value `x`: the `t` lane sums to
/// `(x, x*s)` across servers and the `tau` lane to `(x*s_hat, x*s_hat*s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryShare {
    pub t: RingPair,
    pub tau: RingPair,
}

impl MemoryShare {
    pub fn zero(params: &PkeParams) -> Self {
        MemoryShare {
            t: RingPair::zero(params.n, &params.q),
            tau: RingPair::zero(params.n, &params.q),
        }
    }
}

/// One server's published result: output and tag shares over `R_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialResult {
    pub t: RingElement,
    pub tau: RingElement,
}

/// Verification verdict. `Reject` is a value, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifyOutcome {
    Accept(RingElement),
    Reject,
}

impl VerifyOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, VerifyOutcome::Accept(_))
    }
}

/// Generates the public key, verification key, and both evaluation keys.
pub fn gen(params: &PkeParams, rng: &mut RngHandle) -> Result<KeyBundle> {
    let (pk, sk) = pke::gen(params, rng)?;
    let s_hat = sampling::sample_sk(params.n, params.h_sk, &params.q, rng)?;
    let s_hat_s = s_hat.mul(&sk.s)?;

    let one = RingElement::constant(&BigInt::from(1), params.n, &params.q);
    let sk_vec = RingPair(one, sk.s.clone());
    let vk_vec = RingPair(s_hat.clone(), s_hat_s.clone());

    let uniform_pair = |rng: &mut RngHandle| {
        RingPair(
            sampling::sample_uniform_ring(params.n, &params.q, rng),
            sampling::sample_uniform_ring(params.n, &params.q, rng),
        )
    };
    let s11 = uniform_pair(rng);
    let s12 = uniform_pair(rng);
    let s21 = sk_vec.sub(&s11)?;
    let s22 = vk_vec.sub(&s12)?;

    let k1 = PrfKey::random(rng);
    let k2 = PrfKey::random(rng);

    Ok(KeyBundle {
        pk,
        vk: VerificationKey { s_hat, s_hat_s },
        ek1: EvaluationKey {
            server: ServerId::One,
            k1,
            k2,
            s1: s11,
            s2: s12,
        },
        ek2: EvaluationKey {
            server: ServerId::Two,
            k1,
            k2,
            s1: s21,
            s2: s22,
        },
    })
}

/// Encrypts an input `x` in `R_r`, centered-lifted into the plaintext ring.
pub fn enc(
    params: &PkeParams,
    pk: &PublicKey,
    x: &RingElement,
    rng: &mut RngHandle,
) -> Result<KdmCiphertext> {
    if x.modulus() != &params.r {
        return Err(Error::modulus_mismatch(x.modulus(), &params.r));
    }
    let m = x.reduce_to(&params.p);
    pke::okdm(params, pk, &m, rng)
}

/// One server's program interpreter. `rerandomize` controls the signed PRF
/// terms; disabling it is useful only for the ablation regression that checks
/// the terms cancel across servers.
pub struct Evaluator<'a> {
    params: &'a PkeParams,
    ek: &'a EvaluationKey,
    rerandomize: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(params: &'a PkeParams, ek: &'a EvaluationKey) -> Self {
        Evaluator {
            params,
            ek,
            rerandomize: true,
        }
    }

    pub fn without_rerandomization(params: &'a PkeParams, ek: &'a EvaluationKey) -> Self {
        Evaluator {
            params,
            ek,
            rerandomize: false,
        }
    }

    fn server(&self) -> ServerId {
        self.ek.server
    }

    /// Adds the signed PRF term for `key` and `id`: `+` for server one,
    /// `-` for server two, so the pair cancels.
    fn rerand(&self, share: RingPair, key: &PrfKey, id: u64) -> Result<RingPair> {
        if !self.rerandomize {
            return Ok(share);
        }
        let (r0, r1) = sampling::prf_expand(key, id, self.params.n, &self.params.q);
        let term = RingPair(r0, r1);
        if self.server().rerand_positive() {
            share.add(&term)
        } else {
            share.sub(&term)
        }
    }

    fn ddec_both(
        &self,
        id: u64,
        keys: (&RingPair, &RingPair),
        ct: &KdmCiphertext,
    ) -> Result<MemoryShare> {
        let t = pke::ddec_matrix(self.params, self.server(), keys.0, ct)?;
        let tau = pke::ddec_matrix(self.params, self.server(), keys.1, ct)?;
        Ok(MemoryShare {
            t: self.rerand(t, &self.ek.k1, id)?,
            tau: self.rerand(tau, &self.ek.k2, id)?,
        })
    }

    /// Converts an input ciphertext into a memory share.
    pub fn load(&self, id: u64, ct: &KdmCiphertext) -> Result<MemoryShare> {
        self.ddec_both(id, (&self.ek.s1, &self.ek.s2), ct)
    }

    /// Adds two memory shares.
    pub fn add_mem(&self, id: u64, a: &MemoryShare, b: &MemoryShare) -> Result<MemoryShare> {
        Ok(MemoryShare {
            t: self.rerand(a.t.add(&b.t)?, &self.ek.k1, id)?,
            tau: self.rerand(a.tau.add(&b.tau)?, &self.ek.k2, id)?,
        })
    }

    /// Adds two input ciphertexts. Purely local matrix addition; the
    /// validator enforces the addition budget.
    pub fn add_ct(&self, a: &KdmCiphertext, b: &KdmCiphertext) -> Result<KdmCiphertext> {
        a.add(b)
    }

    /// Multiplies a ciphertext by a public constant from `R_r`.
    pub fn cmult(&self, id: u64, c: &RingElement, ct: &KdmCiphertext) -> Result<MemoryShare> {
        if c.modulus() != &self.params.r {
            return Err(Error::modulus_mismatch(c.modulus(), &self.params.r));
        }
        let c_q = c.reduce_to(&self.params.q);
        let k1 = self.ek.s1.mul_element(&c_q)?;
        let k2 = self.ek.s2.mul_element(&c_q)?;
        self.ddec_both(id, (&k1, &k2), ct)
    }

    /// Multiplies a memory share by a ciphertext: the share's own lanes act
    /// as the decryption key shares.
    pub fn mult(&self, id: u64, t: &MemoryShare, ct: &KdmCiphertext) -> Result<MemoryShare> {
        self.ddec_both(id, (&t.t, &t.tau), ct)
    }

    /// Projects the first component of each lane down to `R_r`.
    pub fn output(&self, share: &MemoryShare) -> PartialResult {
        PartialResult {
            t: share.t.0.reduce_to(&self.params.r),
            tau: share.tau.0.reduce_to(&self.params.r),
        }
    }

    /// Runs a validated program over the input ciphertexts. Instruction ids
    /// are the 0-based instruction positions.
    pub fn eval(&self, cts: &[KdmCiphertext], prog: &ValidatedProgram) -> Result<PartialResult> {
        if cts.len() != prog.n_inputs() {
            return Err(Error::Validation {
                instr: 0,
                msg: format!(
                    "program declares {} inputs, got {} ciphertexts",
                    prog.n_inputs(),
                    cts.len()
                ),
            });
        }
        let mut regs: HashMap<usize, MemoryShare> = HashMap::new();
        let mut slots: HashMap<usize, KdmCiphertext> = HashMap::new();
        for (i, ct) in cts.iter().enumerate() {
            slots.insert(i, ct.clone());
        }

        let missing = |idx: usize, what: String| Error::Validation {
            instr: idx,
            msg: what,
        };

        for (idx, instr) in prog.instrs().iter().enumerate() {
            let id = idx as u64;
            match instr {
                Instr::Load { dst, ct } => {
                    let c = slots
                        .get(ct)
                        .ok_or_else(|| missing(idx, format!("unknown ciphertext ct{ct}")))?;
                    let share = self.load(id, c)?;
                    regs.insert(*dst, share);
                }
                Instr::AddMem { dst, lhs, rhs } => {
                    let a = regs
                        .get(lhs)
                        .ok_or_else(|| missing(idx, format!("unknown register r{lhs}")))?;
                    let b = regs
                        .get(rhs)
                        .ok_or_else(|| missing(idx, format!("unknown register r{rhs}")))?;
                    let share = self.add_mem(id, a, b)?;
                    regs.insert(*dst, share);
                }
                Instr::AddCt { dst, lhs, rhs } => {
                    let a = slots
                        .get(lhs)
                        .ok_or_else(|| missing(idx, format!("unknown ciphertext ct{lhs}")))?;
                    let b = slots
                        .get(rhs)
                        .ok_or_else(|| missing(idx, format!("unknown ciphertext ct{rhs}")))?;
                    let sum = self.add_ct(a, b)?;
                    slots.insert(*dst, sum);
                }
                Instr::CMult { dst, konst, ct } => {
                    let c = slots
                        .get(ct)
                        .ok_or_else(|| missing(idx, format!("unknown ciphertext ct{ct}")))?;
                    let k = RingElement::from_signed(konst, self.params.n, &self.params.r);
                    let share = self.cmult(id, &k, c)?;
                    regs.insert(*dst, share);
                }
                Instr::Mult { dst, lhs, ct } => {
                    let a = regs
                        .get(lhs)
                        .ok_or_else(|| missing(idx, format!("unknown register r{lhs}")))?;
                    let c = slots
                        .get(ct)
                        .ok_or_else(|| missing(idx, format!("unknown ciphertext ct{ct}")))?;
                    let share = self.mult(id, a, c)?;
                    regs.insert(*dst, share);
                }
                Instr::Output { src } => {
                    let a = regs
                        .get(src)
                        .ok_or_else(|| missing(idx, format!("unknown register r{src}")))?;
                    return Ok(self.output(a));
                }
            }
        }
        Err(Error::Validation {
            instr: prog.instrs().len(),
            msg: "program ended without output".into(),
        })
    }
}

/// Reconstructs `y = t1 + t2` and `tau = tau1 + tau2` over `R_r` and accepts
/// iff `tau = s_hat * y` with `s_hat` centered-reduced into `R_r`.
pub fn ver(vk: &VerificationKey, y1: &PartialResult, y2: &PartialResult) -> Result<VerifyOutcome> {
    let y = y1.t.add(&y2.t)?;
    let tau = y1.tau.add(&y2.tau)?;
    let s_hat_r = vk.s_hat.reduce_to(y.modulus());
    if s_hat_r.mul(&y)? == tau {
        Ok(VerifyOutcome::Accept(y))
    } else {
        Ok(VerifyOutcome::Reject)
    }
}

/// Convenience wrapper: run both servers on the same inputs and verify.
pub fn eval_and_verify(
    params: &PkeParams,
    keys: &KeyBundle,
    cts: &[KdmCiphertext],
    prog: &ValidatedProgram,
) -> Result<VerifyOutcome> {
    let y1 = Evaluator::new(params, &keys.ek1).eval(cts, prog)?;
    let y2 = Evaluator::new(params, &keys.ek2).eval(cts, prog)?;
    ver(&keys.vk, &y1, &y2)
}
