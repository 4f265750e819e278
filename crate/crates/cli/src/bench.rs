//! Wall-clock measurements of the six evaluation subroutines and of whole
//! multiplication chains, driven by one server's evaluator.

use std::time::Instant;

use num_bigint::BigUint;

use vhss_core::pke::PkeParams;
use vhss_core::program::{validate, Program, ValidatedProgram};
use vhss_core::ring::RingElement;
use vhss_core::sampling::RngHandle;
use vhss_core::vhss::{self, Evaluator};
use vhss_core::Result;

use crate::stats;

pub struct BenchRow {
    pub name: &'static str,
    pub median_ms: f64,
}

pub fn render_rows(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&format!("{}_ms={:.3}\n", row.name, row.median_ms));
    }
    out
}

fn time_ms<T>(mut f: impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    std::hint::black_box(out);
    elapsed
}

fn median_of<T>(reps: usize, mut f: impl FnMut() -> T) -> f64 {
    let mut samples: Vec<f64> = (0..reps).map(|_| time_ms(&mut f)).collect();
    stats::median(&mut samples)
}

/// Medians over `reps` runs of each subroutine on one server, on a freshly
/// generated key bundle and a small scalar ciphertext.
pub fn bench_subroutines(
    params: &PkeParams,
    reps: usize,
    rng: &mut RngHandle,
) -> Result<Vec<BenchRow>> {
    let keys = vhss::gen(params, rng)?;
    let x = RingElement::from_i64s(&[2], params.n, &params.r);
    let ct = vhss::enc(params, &keys.pk, &x, rng)?;
    let ev = Evaluator::new(params, &keys.ek1);
    let share = ev.load(0, &ct)?;
    let c = RingElement::from_i64s(&[3], params.n, &params.r);

    let rows = vec![
        BenchRow {
            name: "load",
            median_ms: median_of(reps, || ev.load(0, &ct).unwrap()),
        },
        BenchRow {
            name: "add_mem",
            median_ms: median_of(reps, || ev.add_mem(1, &share, &share).unwrap()),
        },
        BenchRow {
            name: "add_ct",
            median_ms: median_of(reps, || ev.add_ct(&ct, &ct).unwrap()),
        },
        BenchRow {
            name: "cmult",
            median_ms: median_of(reps, || ev.cmult(2, &c, &ct).unwrap()),
        },
        BenchRow {
            name: "mult",
            median_ms: median_of(reps, || ev.mult(3, &share, &ct).unwrap()),
        },
        BenchRow {
            name: "output",
            median_ms: median_of(reps, || ev.output(&share)),
        },
    ];
    Ok(rows)
}

/// Largest input bound that still keeps a degree-`d` power representable.
fn sweep_bound(params: &PkeParams, max_degree: usize) -> BigUint {
    let cap = params.b_max();
    let mut b = BigUint::from(1u32);
    while &(&b + 1u32).pow(max_degree as u32) <= cap && b < params.r.half() {
        b += 1u32;
    }
    b
}

pub fn monomial_program(
    params: &PkeParams,
    degree: usize,
    bound: &BigUint,
) -> Result<ValidatedProgram> {
    let mut text = format!("inputs 1 bound {bound}\nload r0 ct0\n");
    for i in 1..degree {
        text.push_str(&format!("mult r{i} r{} ct0\n", i - 1));
    }
    text.push_str(&format!("output r{}\n", degree - 1));
    validate(Program::parse(&text)?, params)
}

/// Median wall time of one server's evaluation of `x^d` for each degree.
/// Keys and the input ciphertext are shared across degrees so the sweep
/// isolates evaluation cost.
pub fn degree_sweep(
    params: &PkeParams,
    degrees: &[usize],
    reps: usize,
    rng: &mut RngHandle,
) -> Result<Vec<(usize, f64)>> {
    let max_degree = degrees.iter().copied().max().unwrap_or(1);
    let bound = sweep_bound(params, max_degree);
    let keys = vhss::gen(params, rng)?;
    let x = RingElement::from_i64s(&[1], params.n, &params.r);
    let cts = [vhss::enc(params, &keys.pk, &x, rng)?];
    let ev = Evaluator::new(params, &keys.ek1);

    let mut points = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let prog = monomial_program(params, d, &bound)?;
        let median = median_of(reps, || ev.eval(&cts, &prog).unwrap());
        points.push((d, median));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vhss_core::params;

    #[test]
    fn subroutine_rows_cover_all_six() {
        let params = params::toy();
        let mut rng = RngHandle::from_seed([3u8; 32]);
        let rows = bench_subroutines(&params, 3, &mut rng).unwrap();
        let names: Vec<_> = rows.iter().map(|r| r.name).collect();
        assert_eq!(
            names,
            ["load", "add_mem", "add_ct", "cmult", "mult", "output"]
        );
        assert!(rows.iter().all(|r| r.median_ms >= 0.0));
        let text = render_rows(&rows);
        assert!(text.contains("mult_ms="));
    }

    #[test]
    fn sweep_bound_fits_the_cap() {
        let params = params::toy();
        // 16 is the toy plaintext bound; only 1^11 stays under it.
        assert_eq!(sweep_bound(&params, 11), BigUint::from(1u32));
        assert_eq!(sweep_bound(&params, 2), BigUint::from(4u32));
        let big = params::toy_exact(1 << 16).unwrap();
        let b = sweep_bound(&big, 11);
        assert!(b.pow(11) <= *big.b_max());
        assert!((&b + 1u32).pow(11) > *big.b_max() || b == big.r.half());
    }

    #[test]
    fn degree_sweep_evaluates_each_degree() {
        let params = params::toy();
        let mut rng = RngHandle::from_seed([4u8; 32]);
        let points = degree_sweep(&params, &[1, 2, 3], 3, &mut rng).unwrap();
        assert_eq!(points.len(), 3);
        assert!(points.iter().all(|&(_, ms)| ms >= 0.0));
    }

    #[test]
    fn monomial_program_computes_powers() {
        let params = params::toy();
        let prog = monomial_program(&params, 3, &BigUint::from(2u32)).unwrap();
        assert_eq!(prog.degree, 3);
        let mut rng = RngHandle::from_seed([5u8; 32]);
        let keys = vhss::gen(&params, &mut rng).unwrap();
        let x = RingElement::from_i64s(&[-2], params.n, &params.r);
        let cts = [vhss::enc(&params, &keys.pk, &x, &mut rng).unwrap()];
        let outcome = vhss::eval_and_verify(&params, &keys, &cts, &prog).unwrap();
        assert_eq!(
            outcome,
            vhss_core::vhss::VerifyOutcome::Accept(RingElement::from_i64s(
                &[-8],
                params.n,
                &params.r
            ))
        );
    }
}
