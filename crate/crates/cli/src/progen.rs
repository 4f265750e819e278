//! Random generation of valid programs, used by the security games.
//!
//! Programs are valid by construction: the generator tracks the same
//! magnitude, support, and degree information as the validator and only emits
//! an instruction when the resulting value stays representable. Instruction
//! kinds are drawn with weights mult 4 : load 2 : addm 2 : cmult 2 : addc 1,
//! which biases programs toward multiplication chains; the first instruction
//! is always a `load` and the output register prefers the most recent value.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use vhss_core::pke::PkeParams;
use vhss_core::program::{validate, Instr, Program, ValidatedProgram};
use vhss_core::ring::RingElement;
use vhss_core::sampling::RngHandle;
use vhss_core::Result;

pub struct ProgenConfig {
    pub n_inputs_max: usize,
    /// Upper limit on total instructions, including the final `output`.
    pub size_max: usize,
    pub degree_max: usize,
    /// Budget for `load`, `cmult`, and `mult` combined. These are the
    /// instructions whose homomorphic evaluation runs distributed decryption,
    /// so capping them bounds the evaluation cost of a generated program.
    pub heavy_max: usize,
    /// Declared bound for every input.
    pub input_bound: BigUint,
    pub use_add_ct: bool,
}

impl ProgenConfig {
    /// Small inputs so that multiplication chains survive a 4-bit plaintext
    /// bound for a while.
    pub fn toy(params: &PkeParams) -> Self {
        ProgenConfig {
            n_inputs_max: 2,
            size_max: 32,
            degree_max: 11,
            heavy_max: 8,
            input_bound: BigUint::from(2u32),
            use_add_ct: params.b_add >= 2,
        }
    }

    /// Profile for production-sized parameter sets, where each distributed
    /// decryption costs on the order of a second.
    pub fn full(params: &PkeParams) -> Self {
        ProgenConfig {
            n_inputs_max: 2,
            size_max: 32,
            degree_max: 11,
            heavy_max: 3,
            input_bound: BigUint::from(1000u32),
            use_add_ct: params.b_add >= 2,
        }
    }
}

#[derive(Clone)]
struct Info {
    bound: BigUint,
    supp: usize,
    degree: usize,
}

#[derive(Clone)]
struct Slot {
    info: Info,
    count: u64,
}

/// Uniform in `[-bound, bound]`.
pub fn signed_scalar(bound: &BigUint, rng: &mut RngHandle) -> BigInt {
    let magnitude = rng.below(&(bound + 1u32));
    if magnitude.is_zero() || rng.next_u64() & 1 == 0 {
        BigInt::from(magnitude)
    } else {
        -BigInt::from(magnitude)
    }
}

pub fn random_program(
    cfg: &ProgenConfig,
    params: &PkeParams,
    rng: &mut RngHandle,
) -> Result<ValidatedProgram> {
    let n = params.n;
    let cap = params.b_max().clone();
    let n_inputs = 1 + rng.below_u64(cfg.n_inputs_max as u64) as usize;

    let input_info = Info {
        bound: cfg.input_bound.clone(),
        supp: 1,
        degree: 1,
    };
    let mut slots: Vec<(usize, Slot)> = (0..n_inputs)
        .map(|i| {
            (
                i,
                Slot {
                    info: input_info.clone(),
                    count: 1,
                },
            )
        })
        .collect();
    let mut regs: Vec<Info> = Vec::new();
    let mut next_slot = n_inputs;
    let mut instrs = Vec::new();
    let mut heavy_left = cfg.heavy_max;

    let first = rng.below_u64(n_inputs as u64) as usize;
    instrs.push(Instr::Load { dst: 0, ct: first });
    regs.push(input_info);
    heavy_left -= 1;

    // Pick a register, favoring the newest so programs tend to form chains.
    let pick_reg = |regs: &Vec<Info>, rng: &mut RngHandle| -> usize {
        if regs.len() > 1 && rng.below_u64(4) != 0 {
            regs.len() - 1
        } else {
            rng.below_u64(regs.len() as u64) as usize
        }
    };

    let body_len = 1 + rng.below_u64((cfg.size_max - 1) as u64) as usize;
    while instrs.len() < body_len {
        let mut kinds: Vec<(u64, u8)> = vec![(2, b'a')];
        if heavy_left > 0 {
            kinds.push((4, b'm'));
            kinds.push((2, b'l'));
            kinds.push((2, b'c'));
        }
        if cfg.use_add_ct && slots.len() >= 2 {
            kinds.push((1, b'+'));
        }
        let total: u64 = kinds.iter().map(|(w, _)| w).sum();
        let mut emitted = false;
        'attempts: for _ in 0..32 {
            let mut roll = rng.below_u64(total);
            let kind = kinds
                .iter()
                .find(|(w, _)| {
                    if roll < *w {
                        true
                    } else {
                        roll -= w;
                        false
                    }
                })
                .unwrap()
                .1;
            match kind {
                b'm' => {
                    let lhs = pick_reg(&regs, rng);
                    let (ct, slot) = &slots[rng.below_u64(slots.len() as u64) as usize];
                    let a = &regs[lhs];
                    if slot.count > params.b_add || a.degree + slot.info.degree > cfg.degree_max {
                        continue 'attempts;
                    }
                    let bound =
                        BigUint::from(a.supp.min(slot.info.supp)) * &a.bound * &slot.info.bound;
                    if bound > cap {
                        continue 'attempts;
                    }
                    let info = Info {
                        bound,
                        supp: (a.supp * slot.info.supp).min(n),
                        degree: a.degree + slot.info.degree,
                    };
                    instrs.push(Instr::Mult {
                        dst: regs.len(),
                        lhs,
                        ct: *ct,
                    });
                    regs.push(info);
                    heavy_left -= 1;
                }
                b'l' => {
                    let (ct, slot) = &slots[rng.below_u64(slots.len() as u64) as usize];
                    if slot.count > params.b_add {
                        continue 'attempts;
                    }
                    instrs.push(Instr::Load {
                        dst: regs.len(),
                        ct: *ct,
                    });
                    regs.push(slot.info.clone());
                    heavy_left -= 1;
                }
                b'c' => {
                    let (ct, slot) = &slots[rng.below_u64(slots.len() as u64) as usize];
                    if slot.count > params.b_add {
                        continue 'attempts;
                    }
                    let konst = vec![signed_scalar(&BigUint::from(3u32), rng)];
                    let c = RingElement::from_signed(&konst, n, &params.r);
                    let c_norm = c.inf_norm();
                    let c_supp = c.support();
                    let bound =
                        BigUint::from(c_supp.min(slot.info.supp)) * &c_norm * &slot.info.bound;
                    if bound > cap {
                        continue 'attempts;
                    }
                    let info = Info {
                        bound,
                        supp: (c_supp * slot.info.supp).min(n),
                        degree: slot.info.degree,
                    };
                    instrs.push(Instr::CMult {
                        dst: regs.len(),
                        konst,
                        ct: *ct,
                    });
                    regs.push(info);
                    heavy_left -= 1;
                }
                b'a' => {
                    let lhs = pick_reg(&regs, rng);
                    let rhs = rng.below_u64(regs.len() as u64) as usize;
                    let (a, b) = (&regs[lhs], &regs[rhs]);
                    let bound = &a.bound + &b.bound;
                    if bound > cap {
                        continue 'attempts;
                    }
                    let info = Info {
                        bound,
                        supp: (a.supp + b.supp).min(n),
                        degree: a.degree.max(b.degree),
                    };
                    instrs.push(Instr::AddMem {
                        dst: regs.len(),
                        lhs,
                        rhs,
                    });
                    regs.push(info);
                }
                b'+' => {
                    let li = rng.below_u64(slots.len() as u64) as usize;
                    let ri = rng.below_u64(slots.len() as u64) as usize;
                    let (lhs, a) = slots[li].clone();
                    let (rhs, b) = slots[ri].clone();
                    if a.count + b.count > params.b_add {
                        continue 'attempts;
                    }
                    let bound = &a.info.bound + &b.info.bound;
                    if bound > cap {
                        continue 'attempts;
                    }
                    let slot = Slot {
                        info: Info {
                            bound,
                            supp: (a.info.supp + b.info.supp).min(n),
                            degree: a.info.degree.max(b.info.degree),
                        },
                        count: a.count + b.count,
                    };
                    instrs.push(Instr::AddCt {
                        dst: next_slot,
                        lhs,
                        rhs,
                    });
                    slots.push((next_slot, slot));
                    next_slot += 1;
                }
                _ => unreachable!(),
            }
            emitted = true;
            break;
        }
        if !emitted {
            break;
        }
    }

    let src = pick_reg(&regs, rng);
    instrs.push(Instr::Output { src });

    let program = Program {
        n_inputs,
        input_bounds: Some(vec![cfg.input_bound.clone()]),
        instrs,
    };
    validate(program, params)
}

/// Uniform scalar inputs within each declared bound.
pub fn random_inputs(
    prog: &ValidatedProgram,
    params: &PkeParams,
    rng: &mut RngHandle,
) -> Vec<RingElement> {
    prog.input_bounds
        .iter()
        .map(|b| RingElement::from_signed(&[signed_scalar(b, rng)], params.n, &params.r))
        .collect()
}
