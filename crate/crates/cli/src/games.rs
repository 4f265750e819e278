//! Executable security games: correctness against the plaintext oracles,
//! verifiability against a bag of tampering strategies, and context hiding
//! via an explicit simulator.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use vhss_core::params::correctness_bound;
use vhss_core::pke::PkeParams;
use vhss_core::ring::RingElement;
use vhss_core::sampling::{sample_uniform_ring, RngHandle};
use vhss_core::vhss::{self, KeyBundle, PartialResult, VerifyOutcome};
use vhss_core::{Error, Result};

use crate::oracle;
use crate::progen::{self, ProgenConfig};
use crate::stats;

/// Outcome of one game run, printed as line-oriented `key=value` text.
pub struct GameReport {
    pub name: &'static str,
    pub trials: u64,
    /// What the `count` field counts: failures, forgeries, sim failures.
    pub counter: &'static str,
    pub count: u64,
    /// Theoretical bound the observations are held against.
    pub bound: f64,
    pub pass: bool,
    pub extra: Vec<(String, String)>,
}

impl fmt::Display for GameReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "game={}", self.name)?;
        writeln!(f, "trials={}", self.trials)?;
        writeln!(f, "{}={}", self.counter, self.count)?;
        writeln!(f, "bound={:e}", self.bound)?;
        for (k, v) in &self.extra {
            writeln!(f, "{k}={v}")?;
        }
        write!(f, "pass={}", self.pass)
    }
}

/// Correctness: fresh keys per trial, a random valid program, random inputs
/// within the declared bounds, honest evaluation on both servers. A trial
/// fails when verification rejects or accepts anything other than the value
/// both plaintext oracles computed. The observed failure rate is held
/// against the derived failure allowance, which is clamped to 1 when the
/// parameter set is too small for the bound to bite.
pub fn run_correctness_game(
    params: &PkeParams,
    trials: u64,
    cfg: &ProgenConfig,
    rng: &mut RngHandle,
) -> Result<GameReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let mut failures = 0u64;
    for _ in 0..trials {
        let keys = vhss::gen(params, rng)?;
        let prog = progen::random_program(cfg, params, rng)?;
        let inputs = progen::random_inputs(&prog, params, rng);
        let expected = oracle::plaintext_oracle(params, &prog, &inputs)?;
        let check = oracle::recursive_oracle(params, &prog, &inputs)?;
        assert_eq!(
            expected,
            check,
            "plaintext oracles disagree on:\n{}",
            prog.program().to_text()
        );
        let mut cts = Vec::with_capacity(inputs.len());
        for x in &inputs {
            cts.push(vhss::enc(params, &keys.pk, x, rng)?);
        }
        match vhss::eval_and_verify(params, &keys, &cts, &prog)? {
            VerifyOutcome::Accept(y) if y == expected => {}
            _ => failures += 1,
        }
    }

    let one = BigRational::one();
    let mut allowed = &one - correctness_bound(params, cfg.size_max as u64, params.b_add);
    if allowed > one {
        allowed = one;
    }
    let frac = BigRational::new(failures.into(), trials.into());
    let pass = frac <= allowed;
    Ok(GameReport {
        name: "correctness",
        trials,
        counter: "failures",
        count: failures,
        bound: allowed.to_f64().unwrap_or(1.0),
        pass,
        extra: vec![
            ("size_max".into(), cfg.size_max.to_string()),
            ("heavy_max".into(), cfg.heavy_max.to_string()),
            ("input_bound".into(), cfg.input_bound.to_string()),
        ],
    })
}

/// The built-in tampering strategies for the verifiability game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tamper {
    /// Replace the partial with fresh uniform output and tag shares.
    UniformReplace,
    /// Bump a single coefficient of one lane by a nonzero amount.
    CoeffPerturb,
    /// Shift the output by `dy` and the tag by `c * dy` for a random scalar
    /// `c`, which forges exactly when `c` collides with the tag key.
    ScaledTag,
    /// Replay the server's honest partial from an evaluation of the same
    /// program on different inputs under the same keys.
    StaleReplay,
}

pub const ALL_TAMPERS: [Tamper; 4] = [
    Tamper::UniformReplace,
    Tamper::CoeffPerturb,
    Tamper::ScaledTag,
    Tamper::StaleReplay,
];

fn tamper_label(t: Tamper) -> &'static str {
    match t {
        Tamper::UniformReplace => "uniform",
        Tamper::CoeffPerturb => "coeff",
        Tamper::ScaledTag => "scaled_tag",
        Tamper::StaleReplay => "stale",
    }
}

struct GameContext {
    keys: KeyBundle,
    y_true: RingElement,
    honest: [PartialResult; 2],
    stale: [PartialResult; 2],
}

fn honest_run(
    params: &PkeParams,
    keys: &KeyBundle,
    prog: &vhss_core::program::ValidatedProgram,
    inputs: &[RingElement],
    rng: &mut RngHandle,
) -> Result<Option<(PartialResult, PartialResult, RingElement)>> {
    let expected = oracle::plaintext_oracle(params, prog, inputs)?;
    let mut cts = Vec::with_capacity(inputs.len());
    for x in inputs {
        cts.push(vhss::enc(params, &keys.pk, x, rng)?);
    }
    let y1 = vhss::Evaluator::new(params, &keys.ek1).eval(&cts, prog)?;
    let y2 = vhss::Evaluator::new(params, &keys.ek2).eval(&cts, prog)?;
    match vhss::ver(&keys.vk, &y1, &y2)? {
        VerifyOutcome::Accept(y) if y == expected => Ok(Some((y1, y2, expected))),
        // Rounding failure; the caller retries so tampering is judged
        // against contexts whose honest run is correct.
        _ => Ok(None),
    }
}

fn build_context(params: &PkeParams, rng: &mut RngHandle) -> Result<GameContext> {
    let cfg = ProgenConfig::toy(params);
    for _ in 0..64 {
        let keys = vhss::gen(params, rng)?;
        let prog = progen::random_program(&cfg, params, rng)?;
        let inputs = progen::random_inputs(&prog, params, rng);
        let Some((y1, y2, y_true)) = honest_run(params, &keys, &prog, &inputs, rng)? else {
            continue;
        };
        let stale = loop {
            let alt_inputs = progen::random_inputs(&prog, params, rng);
            if alt_inputs == inputs {
                continue;
            }
            if let Some((s1, s2, _)) = honest_run(params, &keys, &prog, &alt_inputs, rng)? {
                break [s1, s2];
            }
        };
        return Ok(GameContext {
            keys,
            y_true,
            honest: [y1, y2],
            stale,
        });
    }
    Err(Error::InvalidParameter(
        "could not build an honest game context; parameters round-fail too often".into(),
    ))
}

fn nonzero_uniform(params: &PkeParams, rng: &mut RngHandle) -> RingElement {
    loop {
        let x = sample_uniform_ring(params.n, &params.r, rng);
        if !x.is_zero() {
            return x;
        }
    }
}

fn forge(
    params: &PkeParams,
    ctx: &GameContext,
    b: usize,
    strategy: Tamper,
    rng: &mut RngHandle,
) -> Result<PartialResult> {
    let honest = &ctx.honest[b];
    Ok(match strategy {
        Tamper::UniformReplace => PartialResult {
            t: sample_uniform_ring(params.n, &params.r, rng),
            tau: sample_uniform_ring(params.n, &params.r, rng),
        },
        Tamper::CoeffPerturb => {
            let mut forged = honest.clone();
            let idx = rng.below_u64(params.n as u64) as usize;
            let delta = rng.below(&(params.r.value() - 1u32)) + 1u32;
            let lane = if rng.next_u64() & 1 == 0 {
                &mut forged.t
            } else {
                &mut forged.tau
            };
            let bumped = (lane.coeff(idx) + delta) % params.r.value();
            lane.set_coeff(idx, bumped)?;
            forged
        }
        Tamper::ScaledTag => {
            let dy = nonzero_uniform(params, rng);
            let c = rng.below(params.r.value());
            PartialResult {
                t: honest.t.add(&dy)?,
                tau: honest.tau.add(&dy.mul_uint(&c))?,
            }
        }
        Tamper::StaleReplay => ctx.stale[b].clone(),
    })
}

/// Verifiability: the adversary corrupts one server, sees that server's
/// evaluation key and honest partial, and submits a substitute; the other
/// partial stays honest. A forgery is an accepted output different from the
/// true one. The game also runs a white-box control per context: an attacker
/// who knows the tag key itself shifts both lanes consistently, and that
/// forgery must be accepted, showing the game would notice if acceptance
/// were too lax or the check degenerate.
pub fn run_verifiability_game(
    params: &PkeParams,
    trials: u64,
    n_contexts: usize,
    strategy: Option<Tamper>,
    rng: &mut RngHandle,
) -> Result<GameReport> {
    if trials == 0 || n_contexts == 0 {
        return Err(Error::InvalidParameter(
            "trials and contexts must be positive".into(),
        ));
    }
    let contexts: Vec<GameContext> = (0..n_contexts)
        .map(|_| build_context(params, rng))
        .collect::<Result<_>>()?;

    let mut forgeries = 0u64;
    let mut per_trials = [0u64; 4];
    let mut per_forgeries = [0u64; 4];
    for i in 0..trials {
        let chosen = strategy.unwrap_or(ALL_TAMPERS[(i % 4) as usize]);
        let slot = ALL_TAMPERS.iter().position(|t| *t == chosen).unwrap();
        let ctx = &contexts[rng.below_u64(n_contexts as u64) as usize];
        let b = rng.below_u64(2) as usize;
        let forged = forge(params, ctx, b, chosen, rng)?;
        let outcome = if b == 0 {
            vhss::ver(&ctx.keys.vk, &forged, &ctx.honest[1])?
        } else {
            vhss::ver(&ctx.keys.vk, &ctx.honest[0], &forged)?
        };
        per_trials[slot] += 1;
        if let VerifyOutcome::Accept(out) = outcome {
            if out != ctx.y_true {
                forgeries += 1;
                per_forgeries[slot] += 1;
            }
        }
    }

    let mut whitebox_fired = 0usize;
    for ctx in &contexts {
        let dy = nonzero_uniform(params, rng);
        let dtau = ctx.keys.vk.s_hat.reduce_to(&params.r).mul(&dy)?;
        let forged = PartialResult {
            t: ctx.honest[0].t.add(&dy)?,
            tau: ctx.honest[0].tau.add(&dtau)?,
        };
        if let VerifyOutcome::Accept(out) = vhss::ver(&ctx.keys.vk, &forged, &ctx.honest[1])? {
            if out != ctx.y_true {
                whitebox_fired += 1;
            }
        }
    }

    // Soundness error of the tag check: at most 4 / 2^N for N-coefficient
    // tag keys. The pass verdict also demands enough trials for the 99%
    // upper confidence bound on the forgery rate to reach that target.
    let bound = 4.0 / 2f64.powi(params.n as i32);
    let ucb = stats::zero_rate_ucb_99(trials);
    let pass = forgeries == 0 && whitebox_fired == n_contexts && ucb <= bound;

    let mut extra = Vec::new();
    extra.push((
        "strategy".into(),
        strategy.map_or("all", tamper_label).to_string(),
    ));
    for (i, t) in ALL_TAMPERS.iter().enumerate() {
        if strategy.is_some_and(|s| s != *t) {
            continue;
        }
        extra.push((
            format!("{}_trials", tamper_label(*t)),
            per_trials[i].to_string(),
        ));
        extra.push((
            format!("{}_forgeries", tamper_label(*t)),
            per_forgeries[i].to_string(),
        ));
    }
    extra.push((
        "whitebox_fired".into(),
        format!("{whitebox_fired}/{n_contexts}"),
    ));
    extra.push(("forgery_rate_ucb99".into(), format!("{ucb:e}")));
    Ok(GameReport {
        name: "verifiability",
        trials,
        counter: "forgeries",
        count: forgeries,
        bound,
        pass,
        extra,
    })
}

/// Simulator for context hiding: given only the verification key and the
/// output, produce partials distributed like an honest pair. The first
/// server's shares are uniform; the second server's are the unique values
/// that reconstruct `y` and its tag.
pub fn context_hiding_sim(
    params: &PkeParams,
    vk: &vhss_core::vhss::VerificationKey,
    y: &RingElement,
    rng: &mut RngHandle,
) -> Result<(PartialResult, PartialResult)> {
    if y.modulus() != &params.r {
        return Err(Error::ModulusMismatch(
            y.modulus().to_string(),
            params.r.to_string(),
        ));
    }
    let t1 = sample_uniform_ring(params.n, &params.r, rng);
    let tau1 = sample_uniform_ring(params.n, &params.r, rng);
    let t2 = y.sub(&t1)?;
    let tau2 = vk.s_hat.reduce_to(&params.r).mul(y)?.sub(&tau1)?;
    Ok((
        PartialResult { t: t1, tau: tau1 },
        PartialResult { t: t2, tau: tau2 },
    ))
}

/// Context hiding: each sample runs an honest single-input identity program
/// and the simulator on the same output, then compares the distribution of
/// the first server's output-share coefficients with a two-sample chi-square
/// test. Every simulated pair must verify to its target.
pub fn run_hiding_game(
    params: &PkeParams,
    samples: u64,
    rng: &mut RngHandle,
) -> Result<GameReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let r = params
        .r
        .value()
        .to_usize()
        .filter(|&r| r <= 4096)
        .ok_or_else(|| {
            Error::InvalidParameter(
                "the hiding game histograms all residues and needs a small plaintext modulus"
                    .into(),
            )
        })?;

    let prog = vhss_core::program::validate(
        vhss_core::program::Program::parse("inputs 1\nload r0 ct0\noutput r0\n")?,
        params,
    )?;
    let mut honest_hist = vec![0u64; r];
    let mut sim_hist = vec![0u64; r];
    let mut sim_failures = 0u64;
    let mut honest_accepts = 0u64;
    let half = params.r.half();
    for _ in 0..samples {
        let keys = vhss::gen(params, rng)?;
        let x = RingElement::from_signed(&[progen::signed_scalar(&half, rng)], params.n, &params.r);
        let ct = vhss::enc(params, &keys.pk, &x, rng)?;
        let y1 = vhss::Evaluator::new(params, &keys.ek1).eval(&[ct.clone()], &prog)?;
        let y2 = vhss::Evaluator::new(params, &keys.ek2).eval(&[ct], &prog)?;
        if matches!(vhss::ver(&keys.vk, &y1, &y2)?, VerifyOutcome::Accept(ref y) if *y == x) {
            honest_accepts += 1;
        }
        for c in y1.t.coeffs() {
            honest_hist[c.to_usize().unwrap()] += 1;
        }

        let (s1, s2) = context_hiding_sim(params, &keys.vk, &x, rng)?;
        if !matches!(vhss::ver(&keys.vk, &s1, &s2)?, VerifyOutcome::Accept(ref y) if *y == x) {
            sim_failures += 1;
        }
        for c in s1.t.coeffs() {
            sim_hist[c.to_usize().unwrap()] += 1;
        }

        // The simulator must also hit arbitrary ring elements, not just
        // scalar outputs.
        let y_rand = sample_uniform_ring(params.n, &params.r, rng);
        let (u1, u2) = context_hiding_sim(params, &keys.vk, &y_rand, rng)?;
        if !matches!(vhss::ver(&keys.vk, &u1, &u2)?, VerifyOutcome::Accept(ref y) if *y == y_rand) {
            sim_failures += 1;
        }
    }

    let chi2 = stats::chi_square_two_sample(&honest_hist, &sim_hist);
    let crit = stats::chi_square_critical_99(r - 1);
    let pass = sim_failures == 0 && chi2 <= crit;
    Ok(GameReport {
        name: "hiding",
        trials: samples,
        counter: "sim_failures",
        count: sim_failures,
        bound: crit,
        pass,
        extra: vec![
            ("chi_square".into(), format!("{chi2:.3}")),
            ("chi_square_df".into(), (r - 1).to_string()),
            (
                "honest_accept_rate".into(),
                format!("{:.4}", honest_accepts as f64 / samples as f64),
            ),
        ],
    })
}
