//! Reference evaluation of programs on plaintexts over `R_r`.
//!
//! Two evaluators compute the same function through different code paths: a
//! forward interpreter that walks the instruction list, and a backward
//! evaluator that recurses over value definitions. The homomorphic evaluator
//! is checked against both; the two oracles are checked against each other so
//! that a shared misreading of the program semantics cannot hide.

use std::collections::HashMap;

use vhss_core::pke::PkeParams;
use vhss_core::program::{Instr, ValidatedProgram};
use vhss_core::ring::RingElement;
use vhss_core::{Error, Result};

fn check_inputs(params: &PkeParams, prog: &ValidatedProgram, inputs: &[RingElement]) -> Result<()> {
    if inputs.len() != prog.n_inputs() {
        return Err(Error::InvalidParameter(format!(
            "program takes {} inputs, got {}",
            prog.n_inputs(),
            inputs.len()
        )));
    }
    for x in inputs {
        if x.modulus() != &params.r || x.n() != params.n {
            return Err(Error::InvalidParameter(
                "oracle inputs must live in R_r".into(),
            ));
        }
    }
    Ok(())
}

/// Forward interpreter: one pass over the instructions, registers and
/// ciphertext slots held in maps keyed by index.
pub fn plaintext_oracle(
    params: &PkeParams,
    prog: &ValidatedProgram,
    inputs: &[RingElement],
) -> Result<RingElement> {
    check_inputs(params, prog, inputs)?;
    let mut regs: HashMap<usize, RingElement> = HashMap::new();
    let mut slots: HashMap<usize, RingElement> = HashMap::new();
    for (i, x) in inputs.iter().enumerate() {
        slots.insert(i, x.clone());
    }
    for instr in prog.instrs() {
        match instr {
            Instr::Load { dst, ct } => {
                regs.insert(*dst, slots[ct].clone());
            }
            Instr::AddMem { dst, lhs, rhs } => {
                regs.insert(*dst, regs[lhs].add(&regs[rhs])?);
            }
            Instr::AddCt { dst, lhs, rhs } => {
                slots.insert(*dst, slots[lhs].add(&slots[rhs])?);
            }
            Instr::CMult { dst, konst, ct } => {
                let c = RingElement::from_signed(konst, params.n, &params.r);
                regs.insert(*dst, c.mul(&slots[ct])?);
            }
            Instr::Mult { dst, lhs, ct } => {
                regs.insert(*dst, regs[lhs].mul(&slots[ct])?);
            }
            Instr::Output { src } => return Ok(regs[src].clone()),
        }
    }
    unreachable!("validated programs end in output")
}

/// Backward evaluator: starts from the output register and recurses through
/// the instruction that defined each value, memoizing as it goes.
pub fn recursive_oracle(
    params: &PkeParams,
    prog: &ValidatedProgram,
    inputs: &[RingElement],
) -> Result<RingElement> {
    check_inputs(params, prog, inputs)?;

    let mut reg_def: HashMap<usize, &Instr> = HashMap::new();
    let mut slot_def: HashMap<usize, &Instr> = HashMap::new();
    let mut out = None;
    for instr in prog.instrs() {
        match instr {
            Instr::Load { dst, .. }
            | Instr::AddMem { dst, .. }
            | Instr::CMult { dst, .. }
            | Instr::Mult { dst, .. } => {
                reg_def.insert(*dst, instr);
            }
            Instr::AddCt { dst, .. } => {
                slot_def.insert(*dst, instr);
            }
            Instr::Output { src } => out = Some(*src),
        }
    }

    struct Walk<'a> {
        params: &'a PkeParams,
        inputs: &'a [RingElement],
        reg_def: HashMap<usize, &'a Instr>,
        slot_def: HashMap<usize, &'a Instr>,
        reg_memo: HashMap<usize, RingElement>,
        slot_memo: HashMap<usize, RingElement>,
    }

    impl Walk<'_> {
        fn slot(&mut self, i: usize) -> Result<RingElement> {
            if i < self.inputs.len() {
                return Ok(self.inputs[i].clone());
            }
            if let Some(v) = self.slot_memo.get(&i) {
                return Ok(v.clone());
            }
            let v = match self.slot_def[&i] {
                Instr::AddCt { lhs, rhs, .. } => {
                    let (lhs, rhs) = (*lhs, *rhs);
                    self.slot(lhs)?.add(&self.slot(rhs)?)?
                }
                _ => unreachable!("slots are defined by addc"),
            };
            self.slot_memo.insert(i, v.clone());
            Ok(v)
        }

        fn reg(&mut self, i: usize) -> Result<RingElement> {
            if let Some(v) = self.reg_memo.get(&i) {
                return Ok(v.clone());
            }
            let v = match self.reg_def[&i] {
                Instr::Load { ct, .. } => self.slot(*ct)?,
                Instr::AddMem { lhs, rhs, .. } => {
                    let (lhs, rhs) = (*lhs, *rhs);
                    self.reg(lhs)?.add(&self.reg(rhs)?)?
                }
                Instr::CMult { konst, ct, .. } => {
                    let c = RingElement::from_signed(konst, self.params.n, &self.params.r);
                    self.slot(*ct)?.mul(&c)?
                }
                Instr::Mult { lhs, ct, .. } => {
                    let (lhs, ct) = (*lhs, *ct);
                    self.slot(ct)?.mul(&self.reg(lhs)?)?
                }
                _ => unreachable!("registers are defined by load, addm, cmult, or mult"),
            };
            self.reg_memo.insert(i, v.clone());
            Ok(v)
        }
    }

    let mut walk = Walk {
        params,
        inputs,
        reg_def,
        slot_def,
        reg_memo: HashMap::new(),
        slot_memo: HashMap::new(),
    };
    walk.reg(out.expect("validated programs end in output"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vhss_core::program::{validate, Program};
    use vhss_core::{params, sampling::RngHandle};

    fn eval_both(params: &PkeParams, text: &str, inputs: &[i64]) -> (RingElement, RingElement) {
        let prog = validate(Program::parse(text).unwrap(), params).unwrap();
        let xs: Vec<RingElement> = inputs
            .iter()
            .map(|&v| RingElement::from_i64s(&[v], params.n, &params.r))
            .collect();
        (
            plaintext_oracle(params, &prog, &xs).unwrap(),
            recursive_oracle(params, &prog, &xs).unwrap(),
        )
    }

    #[test]
    fn identity_and_product() {
        let params = params::toy();
        let text = "inputs 1\nload r0 ct0\noutput r0\n";
        let (a, b) = eval_both(&params, text, &[7]);
        assert_eq!(a, RingElement::from_i64s(&[7], params.n, &params.r));
        assert_eq!(a, b);

        let text = "inputs 2 bound 2,3\nload r0 ct0\nmult r1 r0 ct1\noutput r1\n";
        let (a, b) = eval_both(&params, text, &[2, 3]);
        assert_eq!(a, RingElement::from_i64s(&[6], params.n, &params.r));
        assert_eq!(a, b);
    }

    #[test]
    fn shared_subexpressions_count_once() {
        let params = params::toy();
        let text = "inputs 1 bound 2\n\
                    load r0 ct0\n\
                    addm r1 r0 r0\n\
                    addm r2 r1 r1\n\
                    addm r3 r2 r2\n\
                    output r3\n";
        let (a, b) = eval_both(&params, text, &[-2]);
        assert_eq!(a, RingElement::from_i64s(&[-16], params.n, &params.r));
        assert_eq!(a, b);
    }

    #[test]
    fn ciphertext_sums_and_constants() {
        let mut params = params::toy();
        params.b_add = 2;
        let text = "inputs 2 bound 3\n\
                    addc ct2 ct0 ct1\n\
                    load r0 ct2\n\
                    cmult r1 -2 ct0\n\
                    addm r2 r0 r1\n\
                    output r2\n";
        // (x0 + x1) - 2*x0 at (3, -1) is -4.
        let (a, b) = eval_both(&params, text, &[3, -1]);
        assert_eq!(a, RingElement::from_i64s(&[-4], params.n, &params.r));
        assert_eq!(a, b);
    }

    #[test]
    fn oracles_agree_on_random_programs() {
        let params = params::toy();
        let mut rng = RngHandle::from_seed([41u8; 32]);
        let cfg = crate::progen::ProgenConfig::toy(&params);
        for _ in 0..100 {
            let prog = crate::progen::random_program(&cfg, &params, &mut rng).unwrap();
            let inputs = crate::progen::random_inputs(&prog, &params, &mut rng);
            let a = plaintext_oracle(&params, &prog, &inputs).unwrap();
            let b = recursive_oracle(&params, &prog, &inputs).unwrap();
            assert_eq!(a, b, "program:\n{}", prog.program().to_text());
        }
    }

    #[test]
    fn input_checks() {
        let params = params::toy();
        let prog = validate(
            Program::parse("inputs 2\nload r0 ct0\noutput r0\n").unwrap(),
            &params,
        )
        .unwrap();
        let one = RingElement::from_i64s(&[1], params.n, &params.r);
        assert!(plaintext_oracle(&params, &prog, &[one.clone()]).is_err());
        let wrong = RingElement::from_i64s(&[1], params.n, &params.q);
        assert!(recursive_oracle(&params, &prog, &[one, wrong]).is_err());
    }
}
