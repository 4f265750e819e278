//! Byte-exact file format for every protocol object.
//!
//! Each file is an envelope: 7 magic bytes `2SVHSS\0`, a little-endian
//! `u16` version, one kind byte, a 32-byte SHA-256 digest of the canonical
//! parameter encoding, then the kind-specific payload. The digest binds
//! every object to the parameter set it was produced under; decoding checks
//! it before touching the payload.
//!
//! Ring elements serialize as fixed-width little-endian coefficient arrays,
//! `ceil(bitlen(modulus) / 8)` bytes per coefficient. Every encoding is
//! canonical: decoding rejects coefficients at or above the modulus,
//! non-minimal big-integer fields, trailing bytes, and program text that is
//! not in the printer's normal form.

use num_bigint::BigUint;
use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pke::{Ciphertext, KdmCiphertext, PkeParams, PublicKey, ServerId};
use crate::program::Program;
use crate::ring::{Modulus, RingElement, RingPair};
use crate::sampling::PrfKey;
use crate::vhss::{EvaluationKey, PartialResult, VerificationKey};

pub const MAGIC: &[u8; 7] = b"2SVHSS\0";
pub const VERSION: u16 = 1;

/// Object kinds carried by the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Params = 0,
    PublicKey = 1,
    VerifyKey = 2,
    EvalKey = 3,
    Ciphertext = 4,
    Partial = 5,
    Program = 6,
}

impl Kind {
    pub fn from_u8(b: u8) -> Result<Kind> {
        Ok(match b {
            0 => Kind::Params,
            1 => Kind::PublicKey,
            2 => Kind::VerifyKey,
            3 => Kind::EvalKey,
            4 => Kind::Ciphertext,
            5 => Kind::Partial,
            6 => Kind::Program,
            other => return Err(Error::Wire(format!("unknown object kind {other}"))),
        })
    }
}

fn wire_err(msg: impl Into<String>) -> Error {
    Error::Wire(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| wire_err("truncated payload"))?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16_le(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32_le(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64_le(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Length-prefixed minimal little-endian big integer.
    fn biguint(&mut self) -> Result<BigUint> {
        let len = self.u32_le()? as usize;
        let bytes = self.take(len)?;
        if let Some(0) = bytes.last() {
            return Err(wire_err("non-minimal integer encoding"));
        }
        Ok(BigUint::from_bytes_le(bytes))
    }

    /// Fixed-width coefficient array; rejects non-canonical residues.
    fn ring(&mut self, n: usize, modulus: &Modulus) -> Result<RingElement> {
        let w = modulus.byte_width();
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            let c = BigUint::from_bytes_le(self.take(w)?);
            coeffs.push(c);
        }
        RingElement::from_canonical(coeffs, modulus)
            .map_err(|e| wire_err(format!("non-canonical coefficient: {e}")))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(wire_err(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_biguint(out: &mut Vec<u8>, v: &BigUint) {
    let bytes = if v.is_zero() {
        Vec::new()
    } else {
        v.to_bytes_le()
    };
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&bytes);
}

fn put_ring(out: &mut Vec<u8>, e: &RingElement) {
    let w = e.modulus().byte_width();
    for c in e.coeffs() {
        let mut bytes = c.to_bytes_le();
        bytes.resize(w, 0);
        out.extend_from_slice(&bytes);
    }
}

fn put_pair(out: &mut Vec<u8>, p: &RingPair) {
    put_ring(out, &p.0);
    put_ring(out, &p.1);
}

fn read_pair(r: &mut Reader, n: usize, modulus: &Modulus) -> Result<RingPair> {
    Ok(RingPair(r.ring(n, modulus)?, r.ring(n, modulus)?))
}

fn params_payload(params: &PkeParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(params.n as u64).to_le_bytes());
    put_biguint(&mut out, params.p.value());
    put_biguint(&mut out, params.q.value());
    put_biguint(&mut out, params.r.value());
    out.extend_from_slice(&params.sigma.to_le_bytes());
    out.extend_from_slice(&params.b_sk.to_le_bytes());
    out.extend_from_slice(&params.b_err.to_le_bytes());
    out.extend_from_slice(&params.b_ct.to_le_bytes());
    out.extend_from_slice(&(params.h_sk as u64).to_le_bytes());
    out.extend_from_slice(&params.b_add.to_le_bytes());
    out
}

/// SHA-256 of the canonical parameter encoding; stored in every envelope.
pub fn params_digest(params: &PkeParams) -> [u8; 32] {
    Sha256::digest(params_payload(params)).into()
}

fn envelope(kind: Kind, digest: &[u8; 32], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(42 + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind as u8);
    out.extend_from_slice(digest);
    out.extend_from_slice(payload);
    out
}

/// Checks the header and returns the stored digest and the payload slice.
fn open(bytes: &[u8], expect: Kind) -> Result<([u8; 32], &[u8])> {
    let mut r = Reader::new(bytes);
    let magic = r.take(7)?;
    if magic != MAGIC {
        return Err(wire_err("bad magic"));
    }
    let version = r.u16_le()?;
    if version != VERSION {
        return Err(wire_err(format!("unsupported version {version}")));
    }
    let kind = Kind::from_u8(r.u8()?)?;
    if kind != expect {
        return Err(wire_err(format!(
            "expected {expect:?} object, found {kind:?}"
        )));
    }
    let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    Ok((digest, &bytes[r.pos..]))
}

/// Reads only the kind byte, for dispatch and diagnostics.
pub fn peek_kind(bytes: &[u8]) -> Result<Kind> {
    let mut r = Reader::new(bytes);
    if r.take(7)? != MAGIC {
        return Err(wire_err("bad magic"));
    }
    let _version = r.u16_le()?;
    Kind::from_u8(r.u8()?)
}

fn check_digest(stored: &[u8; 32], params: &PkeParams) -> Result<()> {
    if *stored != params_digest(params) {
        return Err(wire_err(
            "object was produced under a different parameter set",
        ));
    }
    Ok(())
}

pub fn encode_params(params: &PkeParams) -> Vec<u8> {
    let payload = params_payload(params);
    let digest: [u8; 32] = Sha256::digest(&payload).into();
    envelope(Kind::Params, &digest, &payload)
}

pub fn decode_params(bytes: &[u8]) -> Result<PkeParams> {
    let (digest, payload) = open(bytes, Kind::Params)?;
    let computed: [u8; 32] = Sha256::digest(payload).into();
    if digest != computed {
        return Err(wire_err("parameter digest mismatch"));
    }
    let mut r = Reader::new(payload);
    let n = r.u64_le()? as usize;
    let p = Modulus::new(r.biguint()?).map_err(|e| wire_err(e.to_string()))?;
    let q = Modulus::new(r.biguint()?).map_err(|e| wire_err(e.to_string()))?;
    let rr = Modulus::new(r.biguint()?).map_err(|e| wire_err(e.to_string()))?;
    let params = PkeParams {
        n,
        p,
        q,
        r: rr,
        sigma: r.u64_le()?,
        b_sk: r.u64_le()?,
        b_err: r.u64_le()?,
        b_ct: r.u64_le()?,
        h_sk: r.u64_le()? as usize,
        b_add: r.u64_le()?,
    };
    r.finish()?;
    params.validate().map_err(|e| wire_err(e.to_string()))?;
    Ok(params)
}

pub fn encode_public_key(params: &PkeParams, pk: &PublicKey) -> Vec<u8> {
    let mut payload = Vec::new();
    put_ring(&mut payload, &pk.a);
    put_ring(&mut payload, &pk.b);
    envelope(Kind::PublicKey, &params_digest(params), &payload)
}

pub fn decode_public_key(params: &PkeParams, bytes: &[u8]) -> Result<PublicKey> {
    let (digest, payload) = open(bytes, Kind::PublicKey)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let pk = PublicKey {
        a: r.ring(params.n, &params.q)?,
        b: r.ring(params.n, &params.q)?,
    };
    r.finish()?;
    Ok(pk)
}

pub fn encode_verify_key(params: &PkeParams, vk: &VerificationKey) -> Vec<u8> {
    let mut payload = Vec::new();
    put_ring(&mut payload, &vk.s_hat);
    put_ring(&mut payload, &vk.s_hat_s);
    envelope(Kind::VerifyKey, &params_digest(params), &payload)
}

pub fn decode_verify_key(params: &PkeParams, bytes: &[u8]) -> Result<VerificationKey> {
    let (digest, payload) = open(bytes, Kind::VerifyKey)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let vk = VerificationKey {
        s_hat: r.ring(params.n, &params.q)?,
        s_hat_s: r.ring(params.n, &params.q)?,
    };
    r.finish()?;
    Ok(vk)
}

pub fn encode_eval_key(params: &PkeParams, ek: &EvaluationKey) -> Vec<u8> {
    let mut payload = Vec::new();
    payload.push(ek.server.index());
    payload.extend_from_slice(ek.k1.as_bytes());
    payload.extend_from_slice(ek.k2.as_bytes());
    put_pair(&mut payload, &ek.s1);
    put_pair(&mut payload, &ek.s2);
    envelope(Kind::EvalKey, &params_digest(params), &payload)
}

pub fn decode_eval_key(params: &PkeParams, bytes: &[u8]) -> Result<EvaluationKey> {
    let (digest, payload) = open(bytes, Kind::EvalKey)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let server = ServerId::from_index(r.u8()?).map_err(|e| wire_err(e.to_string()))?;
    let k1 = PrfKey(r.take(16)?.try_into().unwrap());
    let k2 = PrfKey(r.take(16)?.try_into().unwrap());
    let s1 = read_pair(&mut r, params.n, &params.q)?;
    let s2 = read_pair(&mut r, params.n, &params.q)?;
    r.finish()?;
    Ok(EvaluationKey {
        server,
        k1,
        k2,
        s1,
        s2,
    })
}

pub fn encode_ciphertext(params: &PkeParams, ct: &KdmCiphertext) -> Vec<u8> {
    let mut payload = Vec::new();
    for col in [&ct.col1, &ct.col2] {
        put_ring(&mut payload, &col.c0);
        put_ring(&mut payload, &col.c1);
    }
    envelope(Kind::Ciphertext, &params_digest(params), &payload)
}

pub fn decode_ciphertext(params: &PkeParams, bytes: &[u8]) -> Result<KdmCiphertext> {
    let (digest, payload) = open(bytes, Kind::Ciphertext)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let col = |r: &mut Reader| -> Result<Ciphertext> {
        Ok(Ciphertext {
            c0: r.ring(params.n, &params.q)?,
            c1: r.ring(params.n, &params.q)?,
        })
    };
    let col1 = col(&mut r)?;
    let col2 = col(&mut r)?;
    r.finish()?;
    Ok(KdmCiphertext { col1, col2 })
}

pub fn encode_partial(params: &PkeParams, partial: &PartialResult) -> Vec<u8> {
    let mut payload = Vec::new();
    put_ring(&mut payload, &partial.t);
    put_ring(&mut payload, &partial.tau);
    envelope(Kind::Partial, &params_digest(params), &payload)
}

pub fn decode_partial(params: &PkeParams, bytes: &[u8]) -> Result<PartialResult> {
    let (digest, payload) = open(bytes, Kind::Partial)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let partial = PartialResult {
        t: r.ring(params.n, &params.r)?,
        tau: r.ring(params.n, &params.r)?,
    };
    r.finish()?;
    Ok(partial)
}

pub fn encode_program(params: &PkeParams, prog: &Program) -> Vec<u8> {
    let text = prog.to_text();
    let mut payload = Vec::new();
    payload.extend_from_slice(&(text.len() as u32).to_le_bytes());
    payload.extend_from_slice(text.as_bytes());
    envelope(Kind::Program, &params_digest(params), &payload)
}

pub fn decode_program(params: &PkeParams, bytes: &[u8]) -> Result<Program> {
    let (digest, payload) = open(bytes, Kind::Program)?;
    check_digest(&digest, params)?;
    let mut r = Reader::new(payload);
    let len = r.u32_le()? as usize;
    let text = std::str::from_utf8(r.take(len)?)
        .map_err(|_| wire_err("program text is not valid UTF-8"))?;
    r.finish()?;
    let prog = Program::parse(text).map_err(|e| wire_err(e.to_string()))?;
    if prog.to_text() != text {
        return Err(wire_err("program text is not in canonical form"));
    }
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params;
    use crate::sampling::RngHandle;
    use crate::vhss;
    use proptest::prelude::*;

    const SEED: [u8; 32] = [55u8; 32];

    fn toy() -> PkeParams {
        params::toy()
    }

    fn sample_bundle() -> (PkeParams, vhss::KeyBundle, RngHandle) {
        let p = toy();
        let mut rng = RngHandle::from_seed(SEED);
        let keys = vhss::gen(&p, &mut rng).unwrap();
        (p, keys, rng)
    }

    #[test]
    fn params_round_trip() {
        let p = toy();
        let bytes = encode_params(&p);
        assert_eq!(decode_params(&bytes).unwrap(), p);
        for row in params::table_rows().unwrap() {
            let bytes = encode_params(&row.pke);
            assert_eq!(decode_params(&bytes).unwrap(), row.pke);
        }
    }

    #[test]
    fn all_kinds_round_trip() {
        let (p, keys, mut rng) = sample_bundle();
        let x = RingElement::from_i64s(&[3, -1], p.n, &p.r);
        let ct = vhss::enc(&p, &keys.pk, &x, &mut rng).unwrap();
        let partial = PartialResult {
            t: RingElement::from_i64s(&[1, 2, 3], p.n, &p.r),
            tau: RingElement::from_i64s(&[-4, 5], p.n, &p.r),
        };
        let prog =
            Program::parse("inputs 2 bound 2,3\nload r0 ct0\nmult r1 r0 ct1\noutput r1\n").unwrap();

        let bytes = encode_public_key(&p, &keys.pk);
        assert_eq!(decode_public_key(&p, &bytes).unwrap(), keys.pk);
        let bytes = encode_verify_key(&p, &keys.vk);
        assert_eq!(decode_verify_key(&p, &bytes).unwrap(), keys.vk);
        for ek in [&keys.ek1, &keys.ek2] {
            let bytes = encode_eval_key(&p, ek);
            assert_eq!(&decode_eval_key(&p, &bytes).unwrap(), ek);
        }
        let bytes = encode_ciphertext(&p, &ct);
        assert_eq!(decode_ciphertext(&p, &bytes).unwrap(), ct);
        let bytes = encode_partial(&p, &partial);
        assert_eq!(decode_partial(&p, &bytes).unwrap(), partial);
        let bytes = encode_program(&p, &prog);
        assert_eq!(decode_program(&p, &bytes).unwrap(), prog);
    }

    #[test]
    fn encoding_is_canonical() {
        let (p, keys, _) = sample_bundle();
        let bytes = encode_public_key(&p, &keys.pk);
        let again = encode_public_key(&p, &decode_public_key(&p, &bytes).unwrap());
        assert_eq!(bytes, again);
        let bytes = encode_params(&p);
        assert_eq!(bytes, encode_params(&decode_params(&bytes).unwrap()));
    }

    #[test]
    fn header_errors() {
        let (p, keys, _) = sample_bundle();
        let good = encode_public_key(&p, &keys.pk);

        let mut bad = good.clone();
        bad[0] ^= 0xff;
        assert!(decode_public_key(&p, &bad).is_err(), "bad magic accepted");

        let mut bad = good.clone();
        bad[7] = 9; // version
        assert!(decode_public_key(&p, &bad).is_err(), "bad version accepted");

        let mut bad = good.clone();
        bad[9] = Kind::Ciphertext as u8;
        assert!(
            decode_public_key(&p, &bad).is_err(),
            "kind confusion accepted"
        );

        let mut bad = good.clone();
        bad[9] = 200;
        assert!(
            decode_public_key(&p, &bad).is_err(),
            "unknown kind accepted"
        );

        let mut bad = good.clone();
        bad[10] ^= 1; // digest byte
        assert!(
            decode_public_key(&p, &bad).is_err(),
            "digest mismatch accepted"
        );
    }

    #[test]
    fn digest_binds_parameter_sets() {
        let (p, keys, _) = sample_bundle();
        let bytes = encode_verify_key(&p, &keys.vk);
        let mut other = p.clone();
        other.b_add = p.b_add + 1;
        assert!(decode_verify_key(&other, &bytes).is_err());
    }

    #[test]
    fn truncation_is_an_error_for_every_prefix() {
        let (p, keys, _) = sample_bundle();
        let bytes = encode_verify_key(&p, &keys.vk);
        for cut in 0..bytes.len() {
            assert!(
                decode_verify_key(&p, &bytes[..cut]).is_err(),
                "prefix of {cut} bytes decoded"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let (p, keys, _) = sample_bundle();
        let mut bytes = encode_verify_key(&p, &keys.vk);
        bytes.push(0);
        assert!(decode_verify_key(&p, &bytes).is_err());
    }

    #[test]
    fn non_canonical_coefficient_is_rejected() {
        let p = toy();
        let zero = PartialResult {
            t: RingElement::zero(p.n, &p.r),
            tau: RingElement::zero(p.n, &p.r),
        };
        let mut bytes = encode_partial(&p, &zero);
        // First coefficient byte of the payload: set to r (= 16), which is
        // out of range for canonical residues mod 16.
        bytes[42] = 16;
        assert!(decode_partial(&p, &bytes).is_err());
    }

    #[test]
    fn non_canonical_program_text_is_rejected() {
        let p = toy();
        let prog = Program::parse("inputs 1\nload r0 ct0\noutput r0\n").unwrap();
        let good = encode_program(&p, &prog);
        assert_eq!(decode_program(&p, &good).unwrap(), prog);

        // Hand-build an envelope with a comment in the text: same parse
        // result, different bytes.
        let text = "inputs 1\n# c\nload r0 ct0\noutput r0\n";
        let mut payload = Vec::new();
        payload.extend_from_slice(&(text.len() as u32).to_le_bytes());
        payload.extend_from_slice(text.as_bytes());
        let bytes = envelope(Kind::Program, &params_digest(&p), &payload);
        assert!(decode_program(&p, &bytes).is_err());
    }

    #[test]
    fn peek_kind_reads_the_header() {
        let (p, keys, _) = sample_bundle();
        let bytes = encode_verify_key(&p, &keys.vk);
        assert_eq!(peek_kind(&bytes).unwrap(), Kind::VerifyKey);
        assert!(peek_kind(&bytes[..6]).is_err());
    }

    proptest! {
        #[test]
        fn prop_random_mutations_never_panic(
            flip in 0usize..200,
            bit in 0u8..8,
            cut in 0usize..200,
        ) {
            let (p, keys, _) = sample_bundle();
            let mut bytes = encode_verify_key(&p, &keys.vk);
            if flip < bytes.len() {
                bytes[flip] ^= 1 << bit;
            }
            let end = cut.min(bytes.len());
            let _ = decode_verify_key(&p, &bytes[..end]);
        }
    }
}
