//! Straight-line programs over encrypted inputs, their text format, and the
//! static validator that bounds every intermediate plaintext magnitude.
//!
//! Program text is line oriented. The first non-comment line is a header
//! `inputs <n> [bound <B>]` declaring the input count and an optional
//! magnitude bound for the input values: a single value applies to every
//! input, a comma list gives one bound per input, and omitting the clause
//! defaults to the largest centered value mod `r`, i.e. `floor(r/2)`.
//! Instruction lines follow, one per line:
//!
//! ```text
//! load r<k> ct<j>
//! addm r<k> r<i> r<j>
//! addc ct<k> ct<i> ct<j>
//! cmult r<k> <c0,c1,...> ct<j>
//! mult r<k> r<i> ct<j>
//! output r<k>
//! ```
//!
//! `#` starts a comment. Input values are scalars embedded as constant
//! polynomials; the validator's support tracking relies on that convention.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};

use crate::error::{Error, Result};
use crate::pke::PkeParams;
use crate::ring::RingElement;

/// One instruction. Registers hold memory values; `ct` slots hold input
/// ciphertexts (indices below `n_inputs`) or sums created by `AddCt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    Load {
        dst: usize,
        ct: usize,
    },
    AddMem {
        dst: usize,
        lhs: usize,
        rhs: usize,
    },
    AddCt {
        dst: usize,
        lhs: usize,
        rhs: usize,
    },
    CMult {
        dst: usize,
        konst: Vec<BigInt>,
        ct: usize,
    },
    Mult {
        dst: usize,
        lhs: usize,
        ct: usize,
    },
    Output {
        src: usize,
    },
}

/// A parsed program, not yet checked against any parameter set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub n_inputs: usize,
    /// Declared magnitude bounds: one entry broadcast to all inputs, or one
    /// entry per input.
    pub input_bounds: Option<Vec<BigUint>>,
    pub instrs: Vec<Instr>,
}

impl Program {
    /// Parses the line-based text format.
    pub fn parse(text: &str) -> Result<Program> {
        let mut header: Option<(usize, Option<Vec<BigUint>>)> = None;
        let mut instrs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            if header.is_none() {
                header = Some(parse_header(&toks, line)?);
                continue;
            }
            instrs.push(parse_instr(&toks, line)?);
        }
        let (n_inputs, input_bounds) = header.ok_or_else(|| Error::ProgramParse {
            line: 1,
            msg: "missing `inputs <n>` header".into(),
        })?;
        Ok(Program {
            n_inputs,
            input_bounds,
            instrs,
        })
    }

    /// Renders the program back into its text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.input_bounds {
            Some(bs) => {
                let csv: Vec<String> = bs.iter().map(|b| b.to_string()).collect();
                writeln!(out, "inputs {} bound {}", self.n_inputs, csv.join(",")).unwrap()
            }
            None => writeln!(out, "inputs {}", self.n_inputs).unwrap(),
        }
        for instr in &self.instrs {
            match instr {
                Instr::Load { dst, ct } => writeln!(out, "load r{dst} ct{ct}").unwrap(),
                Instr::AddMem { dst, lhs, rhs } => {
                    writeln!(out, "addm r{dst} r{lhs} r{rhs}").unwrap()
                }
                Instr::AddCt { dst, lhs, rhs } => {
                    writeln!(out, "addc ct{dst} ct{lhs} ct{rhs}").unwrap()
                }
                Instr::CMult { dst, konst, ct } => {
                    let csv: Vec<String> = konst.iter().map(|c| c.to_string()).collect();
                    writeln!(out, "cmult r{dst} {} ct{ct}", csv.join(",")).unwrap()
                }
                Instr::Mult { dst, lhs, ct } => writeln!(out, "mult r{dst} r{lhs} ct{ct}").unwrap(),
                Instr::Output { src } => writeln!(out, "output r{src}").unwrap(),
            }
        }
        out
    }
}

fn parse_header(toks: &[&str], line: usize) -> Result<(usize, Option<Vec<BigUint>>)> {
    let err = |msg: &str| Error::ProgramParse {
        line,
        msg: msg.into(),
    };
    if toks[0] != "inputs" {
        return Err(err("first line must be `inputs <n> [bound <B>]`"));
    }
    match toks {
        [_, n] => Ok((parse_count(n, line)?, None)),
        [_, n, kw, b] if *kw == "bound" => {
            let bounds = b
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<BigUint>()
                        .map_err(|_| err(&format!("invalid bound `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((parse_count(n, line)?, Some(bounds)))
        }
        _ => Err(err("expected `inputs <n> [bound <B>]`")),
    }
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::ProgramParse {
        line,
        msg: format!("invalid count `{tok}`"),
    })
}

fn parse_instr(toks: &[&str], line: usize) -> Result<Instr> {
    let err = |msg: String| Error::ProgramParse { line, msg };
    let reg = |tok: &str| -> Result<usize> {
        tok.strip_prefix('r')
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(format!("expected register `r<k>`, got `{tok}`")))
    };
    let ct = |tok: &str| -> Result<usize> {
        tok.strip_prefix("ct")
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(format!("expected ciphertext `ct<j>`, got `{tok}`")))
    };
    match toks {
        ["load", d, c] => Ok(Instr::Load {
            dst: reg(d)?,
            ct: ct(c)?,
        }),
        ["addm", d, a, b] => Ok(Instr::AddMem {
            dst: reg(d)?,
            lhs: reg(a)?,
            rhs: reg(b)?,
        }),
        ["addc", d, a, b] => Ok(Instr::AddCt {
            dst: ct(d)?,
            lhs: ct(a)?,
            rhs: ct(b)?,
        }),
        ["cmult", d, csv, c] => {
            let konst = csv
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<BigInt>()
                        .map_err(|_| err(format!("invalid constant coefficient `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Instr::CMult {
                dst: reg(d)?,
                konst,
                ct: ct(c)?,
            })
        }
        ["mult", d, a, c] => Ok(Instr::Mult {
            dst: reg(d)?,
            lhs: reg(a)?,
            ct: ct(c)?,
        }),
        ["output", s] => Ok(Instr::Output { src: reg(s)? }),
        [op, ..] => Err(err(format!("unknown or malformed instruction `{op}`"))),
        [] => unreachable!("blank lines are filtered"),
    }
}

/// Static magnitude annotation of one value: a bound on its centered
/// coefficients over the integers, the number of possibly non-zero
/// coefficients, and its degree in the program inputs.
#[derive(Clone, Debug)]
struct ValueInfo {
    bound: BigUint,
    supp: usize,
    degree: usize,
}

#[derive(Clone, Debug)]
struct CtInfo {
    value: ValueInfo,
    /// Number of original input ciphertexts summed into this slot.
    count: u64,
}

/// A program that passed validation against a parameter set.
#[derive(Clone, Debug)]
pub struct ValidatedProgram {
    program: Program,
    /// Instruction count.
    pub size: usize,
    /// Maximum degree of any computed value in the inputs.
    pub degree: usize,
    /// Largest magnitude annotation reached anywhere.
    pub max_bound: BigUint,
    /// Resolved per-input bounds, one per input.
    pub input_bounds: Vec<BigUint>,
}

impl ValidatedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.program.instrs
    }

    pub fn n_inputs(&self) -> usize {
        self.program.n_inputs
    }
}

/// Checks structural rules (single static assignment, def-before-use, exactly
/// one trailing `output`, at least one `load`, ciphertext-sum budget) and the
/// magnitude analysis: every value's bound must stay at or below the
/// parameter set's plaintext bound.
///
/// The product rule uses the support-aware bound
/// `min(supp_a, supp_b) * B_a * B_b`: each output coefficient of a negacyclic
/// product is a signed sum of at most `min(supp_a, supp_b)` coefficient
/// products, which degrades to the generic `N * B_a * B_b` for dense
/// operands and stays N-free for the scalar inputs the scheme encrypts.
pub fn validate(program: Program, params: &PkeParams) -> Result<ValidatedProgram> {
    let n = params.n;
    let cap = params.b_max().clone();
    let half_r = params.r.half();

    if program.n_inputs == 0 {
        return Err(Error::Validation {
            instr: 0,
            msg: "program must declare at least one input".into(),
        });
    }
    let input_bounds: Vec<BigUint> = match &program.input_bounds {
        Some(bs) if bs.len() == 1 => vec![bs[0].clone(); program.n_inputs],
        Some(bs) if bs.len() == program.n_inputs => bs.clone(),
        Some(bs) => {
            return Err(Error::Validation {
                instr: 0,
                msg: format!(
                    "{} bounds declared for {} inputs",
                    bs.len(),
                    program.n_inputs
                ),
            });
        }
        None => vec![half_r.clone(); program.n_inputs],
    };
    if let Some(b) = input_bounds.iter().find(|b| **b > half_r) {
        return Err(Error::Validation {
            instr: 0,
            msg: format!(
                "declared input bound {b} exceeds the representable floor(r/2) = {half_r}"
            ),
        });
    }

    let mut regs: HashMap<usize, ValueInfo> = HashMap::new();
    let mut cts: HashMap<usize, CtInfo> = HashMap::new();
    for (i, bound) in input_bounds.iter().enumerate() {
        cts.insert(
            i,
            CtInfo {
                value: ValueInfo {
                    bound: bound.clone(),
                    supp: 1,
                    degree: 1,
                },
                count: 1,
            },
        );
    }

    let fail = |instr: usize, msg: String| Error::Validation { instr, msg };
    let mut n_load = 0usize;
    let mut output_seen = false;
    let mut max_bound = input_bounds.iter().max().cloned().unwrap();
    let mut max_degree = 1usize;

    for (idx, instr) in program.instrs.iter().enumerate() {
        if output_seen {
            return Err(fail(idx, "instructions after output".into()));
        }
        let use_reg = |r: usize, regs: &HashMap<usize, ValueInfo>| -> Result<ValueInfo> {
            regs.get(&r)
                .cloned()
                .ok_or_else(|| fail(idx, format!("register r{r} used before definition")))
        };
        let consume_ct = |c: usize, cts: &HashMap<usize, CtInfo>| -> Result<CtInfo> {
            let info = cts
                .get(&c)
                .cloned()
                .ok_or_else(|| fail(idx, format!("ciphertext ct{c} used before definition")))?;
            if info.count > params.b_add {
                return Err(fail(
                    idx,
                    format!(
                        "ct{c} sums {} original ciphertexts, budget B_add = {}",
                        info.count, params.b_add
                    ),
                ));
            }
            Ok(info)
        };
        let fresh_reg = |r: usize, regs: &HashMap<usize, ValueInfo>| -> Result<()> {
            if regs.contains_key(&r) {
                return Err(fail(idx, format!("register r{r} assigned twice")));
            }
            Ok(())
        };

        let new_value = match instr {
            Instr::Load { dst, ct } => {
                let info = consume_ct(*ct, &cts)?;
                fresh_reg(*dst, &regs)?;
                n_load += 1;
                regs.insert(*dst, info.value.clone());
                info.value
            }
            Instr::AddMem { dst, lhs, rhs } => {
                let a = use_reg(*lhs, &regs)?;
                let b = use_reg(*rhs, &regs)?;
                fresh_reg(*dst, &regs)?;
                let value = ValueInfo {
                    bound: &a.bound + &b.bound,
                    supp: (a.supp + b.supp).min(n),
                    degree: a.degree.max(b.degree),
                };
                regs.insert(*dst, value.clone());
                value
            }
            Instr::AddCt { dst, lhs, rhs } => {
                let a = cts.get(lhs).cloned().ok_or_else(|| {
                    fail(idx, format!("ciphertext ct{lhs} used before definition"))
                })?;
                let b = cts.get(rhs).cloned().ok_or_else(|| {
                    fail(idx, format!("ciphertext ct{rhs} used before definition"))
                })?;
                if *dst < program.n_inputs || cts.contains_key(dst) {
                    return Err(fail(idx, format!("ciphertext ct{dst} assigned twice")));
                }
                let value = ValueInfo {
                    bound: &a.value.bound + &b.value.bound,
                    supp: (a.value.supp + b.value.supp).min(n),
                    degree: a.value.degree.max(b.value.degree),
                };
                cts.insert(
                    *dst,
                    CtInfo {
                        value: value.clone(),
                        count: a.count + b.count,
                    },
                );
                value
            }
            Instr::CMult { dst, konst, ct } => {
                if konst.len() > n {
                    return Err(fail(
                        idx,
                        format!(
                            "constant has {} coefficients, dimension is {n}",
                            konst.len()
                        ),
                    ));
                }
                let info = consume_ct(*ct, &cts)?;
                fresh_reg(*dst, &regs)?;
                let c = RingElement::from_signed(konst, n, &params.r);
                let c_norm = c.inf_norm();
                let c_supp = c.support();
                let value = ValueInfo {
                    bound: BigUint::from(c_supp.min(info.value.supp)) * &c_norm * &info.value.bound,
                    supp: (c_supp * info.value.supp).min(n),
                    degree: info.value.degree,
                };
                regs.insert(*dst, value.clone());
                value
            }
            Instr::Mult { dst, lhs, ct } => {
                let a = use_reg(*lhs, &regs)?;
                let b = consume_ct(*ct, &cts)?;
                fresh_reg(*dst, &regs)?;
                let value = ValueInfo {
                    bound: BigUint::from(a.supp.min(b.value.supp)) * &a.bound * &b.value.bound,
                    supp: (a.supp * b.value.supp).min(n),
                    degree: a.degree + b.value.degree,
                };
                regs.insert(*dst, value.clone());
                value
            }
            Instr::Output { src } => {
                let info = use_reg(*src, &regs)?;
                output_seen = true;
                info
            }
        };

        if new_value.bound > cap {
            return Err(fail(
                idx,
                format!(
                    "magnitude bound {} exceeds the plaintext bound {cap}",
                    new_value.bound
                ),
            ));
        }
        if new_value.bound > max_bound {
            max_bound = new_value.bound.clone();
        }
        max_degree = max_degree.max(new_value.degree);
    }

    if !output_seen {
        return Err(fail(
            program.instrs.len(),
            "program must end with exactly one output".into(),
        ));
    }
    if n_load == 0 {
        return Err(fail(0, "program must load at least one input".into()));
    }

    let size = program.instrs.len();
    Ok(ValidatedProgram {
        program,
        size,
        degree: max_degree,
        max_bound,
        input_bounds,
    })
}
