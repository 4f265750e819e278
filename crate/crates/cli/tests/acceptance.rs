//! One test per release gate. Each prints a single PASS/FAIL line (visible
//! with `cargo test --test acceptance -- --nocapture`) and asserts its gate.

use std::process::Command;

use num_bigint::BigUint;
use num_traits::One;

use vhss_cli::games::{run_correctness_game, run_hiding_game, run_verifiability_game};
use vhss_cli::progen::ProgenConfig;
use vhss_cli::{bench, profile, progen, stats};
use vhss_core::program::{validate, Program};
use vhss_core::ring::{Modulus, RingElement, RingPair};
use vhss_core::sampling::{sample_uniform_ring, RngHandle};
use vhss_core::vhss::{self, Evaluator, PartialResult};
use vhss_core::{params, wire};

const SEED: [u8; 32] = [61u8; 32];

fn report(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

#[test]
fn c1_parameter_table_reproduction() {
    let start = std::time::Instant::now();
    let rows = params::table_rows().unwrap();
    let expected: [(u32, usize, u64, u64); 6] = [
        (1, 4096, 66, 153),
        (16, 4096, 81, 183),
        (32, 8192, 99, 220),
        (64, 8192, 131, 284),
        (128, 16384, 197, 417),
        (256, 16384, 325, 673),
    ];
    let mut pass = rows.len() == expected.len();
    for (row, (lg_b, n, lg_p, lg_q)) in rows.iter().zip(expected) {
        pass &= row.pke.r.value() == &(BigUint::one() << lg_b);
        pass &= row.pke.n == n;
        pass &= row.pke.p.value() == &(BigUint::one() << lg_p);
        pass &= row.pke.q.value() == &(BigUint::one() << lg_q);
    }
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs() < 1;
    report(
        "parameter table reproduction",
        pass,
        &format!("6/6 rows exact in {elapsed:.2?}"),
    );
}

#[test]
fn c2_share_reconstruction_invariants() {
    // Derived parameters at ring dimension 8: same shape as the toy profile
    // but with the statistical slack that makes distributed decryption exact
    // up to probability ~2^-40, so 4000 exact equality checks are stable.
    let params = params::toy_exact(16).unwrap();
    let mut rng = RngHandle::from_seed(SEED);
    let keys = vhss::gen(&params, &mut rng).unwrap();

    let s_vec = keys.ek1.s1.add(&keys.ek2.s1).unwrap();
    let one = RingElement::from_i64s(&[1], params.n, &params.q);
    assert_eq!(s_vec.0, one, "first key lane must reconstruct to 1");
    let s = s_vec.1.clone();
    let s_hat = keys.vk.s_hat.clone();
    let s_hat_s = keys.vk.s_hat_s.clone();

    let ev1 = Evaluator::new(&params, &keys.ek1);
    let ev2 = Evaluator::new(&params, &keys.ek2);

    let check = |t1: &vhss_core::vhss::MemoryShare,
                 t2: &vhss_core::vhss::MemoryShare,
                 v: &RingElement|
     -> bool {
        let t = t1.t.add(&t2.t).unwrap();
        let tau = t1.tau.add(&t2.tau).unwrap();
        t == RingPair(v.clone(), v.mul(&s).unwrap())
            && tau == RingPair(v.mul(&s_hat).unwrap(), v.mul(&s_hat_s).unwrap())
    };

    let instances = 1000u64;
    let mut checks = 0u64;
    let mut pass = true;
    for i in 0..instances {
        let x = if i % 4 == 3 {
            RingElement::from_i64s(&[1, -1], params.n, &params.r)
        } else {
            RingElement::from_signed(
                &[progen::signed_scalar(&BigUint::from(2u32), &mut rng)],
                params.n,
                &params.r,
            )
        };
        let y = RingElement::from_signed(
            &[progen::signed_scalar(&BigUint::from(2u32), &mut rng)],
            params.n,
            &params.r,
        );
        let c = RingElement::from_signed(
            &[progen::signed_scalar(&BigUint::from(3u32), &mut rng)],
            params.n,
            &params.r,
        );
        let ct_x = vhss::enc(&params, &keys.pk, &x, &mut rng).unwrap();
        let ct_y = vhss::enc(&params, &keys.pk, &y, &mut rng).unwrap();
        let x_q = x.reduce_to(&params.q);
        let y_q = y.reduce_to(&params.q);

        let id = i * 8;
        let lx = (ev1.load(id, &ct_x).unwrap(), ev2.load(id, &ct_x).unwrap());
        let ly = (
            ev1.load(id + 1, &ct_y).unwrap(),
            ev2.load(id + 1, &ct_y).unwrap(),
        );
        pass &= check(&lx.0, &lx.1, &x_q);

        let add = (
            ev1.add_mem(id + 2, &lx.0, &ly.0).unwrap(),
            ev2.add_mem(id + 2, &lx.1, &ly.1).unwrap(),
        );
        pass &= check(&add.0, &add.1, &x_q.add(&y_q).unwrap());

        let cm = (
            ev1.cmult(id + 3, &c, &ct_x).unwrap(),
            ev2.cmult(id + 3, &c, &ct_x).unwrap(),
        );
        pass &= check(&cm.0, &cm.1, &c.reduce_to(&params.q).mul(&x_q).unwrap());

        let mu = (
            ev1.mult(id + 4, &lx.0, &ct_y).unwrap(),
            ev2.mult(id + 4, &lx.1, &ct_y).unwrap(),
        );
        pass &= check(&mu.0, &mu.1, &x_q.mul(&y_q).unwrap());
        checks += 4;
        if !pass {
            break;
        }
    }
    report(
        "share reconstruction invariants",
        pass,
        &format!("{instances} instances, {checks} exact lane checks over load/add/cmult/mult"),
    );
}

#[test]
fn c3_end_to_end_correctness() {
    let toy = params::toy();
    let mut rng = RngHandle::from_seed(SEED);
    let toy_report = run_correctness_game(&toy, 1000, &ProgenConfig::toy(&toy), &mut rng).unwrap();

    let full = profile::parse_profile("table2=32").unwrap().1;
    let full_report =
        run_correctness_game(&full, 100, &ProgenConfig::full(&full), &mut rng).unwrap();

    let pass = toy_report.pass && full_report.pass && full_report.count == 0;
    report(
        "end-to-end correctness",
        pass,
        &format!(
            "toy: {}/1000 failures (allowance {:.3}); table2=32: {}/100 failures (allowance {:.3e})",
            toy_report.count, toy_report.bound, full_report.count, full_report.bound
        ),
    );
}

#[test]
fn c4_verifiability_game() {
    let params = params::toy();
    let mut rng = RngHandle::from_seed(SEED);
    let report_v = run_verifiability_game(&params, 10_000, 8, None, &mut rng).unwrap();
    let whitebox = report_v
        .extra
        .iter()
        .find(|(k, _)| k == "whitebox_fired")
        .map(|(_, v)| v.clone())
        .unwrap_or_default();
    let ucb = stats::zero_rate_ucb_99(report_v.trials);
    report(
        "verifiability",
        report_v.pass,
        &format!(
            "{} forgeries / {} tamperings across 4 strategies, whitebox {whitebox}, \
             rate ucb99 {ucb:.2e} <= {:.2e}",
            report_v.count, report_v.trials, report_v.bound
        ),
    );
}

#[test]
fn c5_ring_multiplication_oracle_equivalence() {
    let modulus = Modulus::pow2(220);
    let mut rng = RngHandle::from_seed(SEED);
    let mut pairs_total = 0u64;
    let mut pass = true;

    let sparse = |n: usize, modulus: &Modulus, rng: &mut RngHandle| -> RingElement {
        let mut x = RingElement::zero(n, modulus);
        let k = 1 + rng.below_u64(16) as usize;
        for _ in 0..k {
            let i = rng.below_u64(n as u64) as usize;
            x.set_coeff(i, rng.below(modulus.value())).unwrap();
        }
        x
    };

    for n in [4usize, 8, 1024] {
        for i in 0..1000u64 {
            let (a, b) = match i % 4 {
                0 => (
                    sample_uniform_ring(n, &modulus, &mut rng),
                    sample_uniform_ring(n, &modulus, &mut rng),
                ),
                1 => (
                    sparse(n, &modulus, &mut rng),
                    sample_uniform_ring(n, &modulus, &mut rng),
                ),
                2 => (sparse(n, &modulus, &mut rng), sparse(n, &modulus, &mut rng)),
                _ => (
                    RingElement::from_signed(
                        &[progen::signed_scalar(&(BigUint::one() << 64), &mut rng)],
                        n,
                        &modulus,
                    ),
                    sample_uniform_ring(n, &modulus, &mut rng),
                ),
            };
            if a.mul(&b).unwrap() != a.mul_schoolbook(&b).unwrap() {
                pass = false;
                break;
            }
            pairs_total += 1;
        }
    }
    report(
        "ring multiplication oracle equivalence",
        pass,
        &format!("{pairs_total} random pairs at N in {{4, 8, 1024}}, 220-bit modulus, exact"),
    );
}

#[test]
fn c6_context_hiding() {
    let params = params::toy();
    let mut rng = RngHandle::from_seed(SEED);
    let rep = run_hiding_game(&params, 10_000, &mut rng).unwrap();
    let chi2 = rep
        .extra
        .iter()
        .find(|(k, _)| k == "chi_square")
        .map(|(_, v)| v.clone())
        .unwrap_or_default();
    report(
        "context hiding",
        rep.pass,
        &format!(
            "{} simulator failures / {} samples, chi-square {chi2} <= {:.2} at 0.01",
            rep.count, rep.trials, rep.bound
        ),
    );
}

#[test]
fn c7_subroutine_costs_and_degree_linearity() {
    let full = profile::parse_profile("table2=32").unwrap().1;
    let mut rng = RngHandle::from_seed(SEED);

    let rows = bench::bench_subroutines(&full, 3, &mut rng).unwrap();
    let ms = |name: &str| -> f64 {
        rows.iter()
            .find(|r| r.name == name)
            .map(|r| r.median_ms)
            .unwrap()
    };
    let mult = ms("mult");
    let heavy = [ms("load"), ms("cmult"), mult];
    let heavy_min = heavy.iter().cloned().fold(f64::INFINITY, f64::min);
    let heavy_max = heavy.iter().cloned().fold(0.0, f64::max);
    let ordering_ok =
        ms("add_ct") < 0.05 * mult && ms("output") < 0.05 * mult && heavy_max <= 2.0 * heavy_min;

    let degrees = [3usize, 5, 7, 9, 11];
    let sweep = bench::degree_sweep(&full, &degrees, 3, &mut rng).unwrap();
    let points: Vec<(f64, f64)> = sweep.iter().map(|&(d, t)| (d as f64, t)).collect();
    let r2 = stats::linear_r2(&points);
    let linear_ok = r2 >= 0.99;

    report(
        "subroutine costs and degree linearity",
        ordering_ok && linear_ok,
        &format!(
            "load/cmult/mult {:.0}/{:.0}/{:.0} ms (spread {:.2}x), add_ct {:.1} ms, \
             output {:.1} ms, degree sweep R^2 {r2:.4}",
            ms("load"),
            ms("cmult"),
            mult,
            heavy_max / heavy_min,
            ms("add_ct"),
            ms("output"),
        ),
    );
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vhss"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn c8_wire_round_trip_and_cross_process_determinism() {
    let params = params::toy();
    let mut rng = RngHandle::from_seed(SEED);
    let mut pass = true;

    // Round trips: every object kind, 100 fresh instances each.
    for row in params::table_rows().unwrap() {
        pass &= wire::decode_params(&wire::encode_params(&row.pke)).unwrap() == row.pke;
    }
    let cfg = ProgenConfig::toy(&params);
    for i in 0..100 {
        let p = if i % 2 == 0 {
            params.clone()
        } else {
            params::toy_exact(16).unwrap()
        };
        pass &= wire::decode_params(&wire::encode_params(&p)).unwrap() == p;

        let keys = vhss::gen(&params, &mut rng).unwrap();
        pass &= wire::decode_public_key(&params, &wire::encode_public_key(&params, &keys.pk))
            .unwrap()
            == keys.pk;
        pass &= wire::decode_verify_key(&params, &wire::encode_verify_key(&params, &keys.vk))
            .unwrap()
            == keys.vk;
        let ek = if i % 2 == 0 { &keys.ek1 } else { &keys.ek2 };
        pass &= wire::decode_eval_key(&params, &wire::encode_eval_key(&params, ek)).unwrap() == *ek;

        let x = RingElement::from_i64s(&[i as i64 % 8], params.n, &params.r);
        let ct = vhss::enc(&params, &keys.pk, &x, &mut rng).unwrap();
        pass &=
            wire::decode_ciphertext(&params, &wire::encode_ciphertext(&params, &ct)).unwrap() == ct;

        let partial = PartialResult {
            t: sample_uniform_ring(params.n, &params.r, &mut rng),
            tau: sample_uniform_ring(params.n, &params.r, &mut rng),
        };
        pass &= wire::decode_partial(&params, &wire::encode_partial(&params, &partial)).unwrap()
            == partial;

        let prog = progen::random_program(&cfg, &params, &mut rng).unwrap();
        pass &= wire::decode_program(&params, &wire::encode_program(&params, prog.program()))
            .unwrap()
            == *prog.program();
    }

    // Two-process evaluation must match the in-process evaluation byte for
    // byte: same parameter file, keys, ciphertexts, and program.
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).display().to_string();
    let seed_hex = hex::encode([17u8; 32]);

    run_ok(cli().args([
        "params",
        "derive",
        "--profile",
        "toy-exact=16",
        "--out",
        &path("params.vhss"),
    ]));
    run_ok(cli().args([
        "keygen",
        "--params",
        &path("params.vhss"),
        "--out-dir",
        &dir.path().display().to_string(),
        "--seed",
        &seed_hex,
    ]));
    let prog_text = "inputs 2 bound 2,3\nload r0 ct0\nmult r1 r0 ct1\noutput r1\n";
    std::fs::write(dir.path().join("prog.txt"), prog_text).unwrap();
    for (name, value, seed) in [("x1.vhss", "2", [19u8; 32]), ("x2.vhss", "3", [23u8; 32])] {
        run_ok(cli().args([
            "encrypt",
            "--params",
            &path("params.vhss"),
            "--pk",
            &path("pk.vhss"),
            "--value",
            value,
            "--out",
            &path(name),
            "--seed",
            &hex::encode(seed),
        ]));
    }

    let file_params =
        wire::decode_params(&std::fs::read(dir.path().join("params.vhss")).unwrap()).unwrap();
    let prog = validate(Program::parse(prog_text).unwrap(), &file_params).unwrap();
    let cts = [
        wire::decode_ciphertext(
            &file_params,
            &std::fs::read(dir.path().join("x1.vhss")).unwrap(),
        )
        .unwrap(),
        wire::decode_ciphertext(
            &file_params,
            &std::fs::read(dir.path().join("x2.vhss")).unwrap(),
        )
        .unwrap(),
    ];
    for server in [1u8, 2] {
        let ek_name = format!("ek{server}.vhss");
        let out_name = format!("p{server}.vhss");
        run_ok(cli().args([
            "eval",
            "--params",
            &path("params.vhss"),
            "--server",
            &server.to_string(),
            "--ek",
            &path(&ek_name),
            "--program",
            &path("prog.txt"),
            "--ct",
            &path("x1.vhss"),
            "--ct",
            &path("x2.vhss"),
            "--out",
            &path(&out_name),
        ]));
        let subprocess_bytes = std::fs::read(dir.path().join(&out_name)).unwrap();

        let ek = wire::decode_eval_key(
            &file_params,
            &std::fs::read(dir.path().join(&ek_name)).unwrap(),
        )
        .unwrap();
        let partial = Evaluator::new(&file_params, &ek).eval(&cts, &prog).unwrap();
        let in_process_bytes = wire::encode_partial(&file_params, &partial);
        pass &= subprocess_bytes == in_process_bytes;

        // A second subprocess run must reproduce the bytes exactly.
        let rerun = format!("p{server}b.vhss");
        run_ok(cli().args([
            "eval",
            "--params",
            &path("params.vhss"),
            "--server",
            &server.to_string(),
            "--ek",
            &path(&ek_name),
            "--program",
            &path("prog.txt"),
            "--ct",
            &path("x1.vhss"),
            "--ct",
            &path("x2.vhss"),
            "--out",
            &path(&rerun),
        ]));
        pass &= std::fs::read(dir.path().join(&rerun)).unwrap() == subprocess_bytes;
    }

    report(
        "wire round trip and cross-process determinism",
        pass,
        "100 round trips per object kind; subprocess eval bytes equal in-process bytes for both servers",
    );
}
