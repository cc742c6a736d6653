//! The acceptance criteria as executable checks.
//!
//! Criteria 1-7 and 14 are exact or property checks and run in seconds.
//! Criteria 8-13 are Monte-Carlo reproductions at desk scale.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use schatten_core::analysis::{
    batch_lower_bound_check, experts_envelope, ogd_envelope, rad_separation_witness, rademacher_sum_check, rate_fit,
    run_regret, sign_stream_lower_bound, BatchLearner, Comparator, Construction, Erm, McEstimate, OnlineToBatch,
    OrthogonalTree, PredictableTree, RandomTree,
};
use schatten_core::hilbert::{inner, trace_pairing};
use schatten_core::learners::{
    BinaryIndexOperator, ExpertsConfig, ExpertsLearner, OgdConfig, OgdLearner, OnlineLearner, ZeroLearner,
};
use schatten_core::rng::{seeded, split_seed, Rng};
use schatten_core::spectral::{project_schatten_ball, schatten_norm, svd};
use schatten_core::streams::{
    kernel_operator, schatten_lower_stream, separation_stream, sign_stream_comparator_loss, BatchLowerBoundConfig,
    Example, InstanceMode, InstanceSpace, Kernel, KernelSpec, Stream,
};
use schatten_core::{BallSpec, HVector, LinOp, SchattenIndex};

use crate::config::{ExperimentConfig, DEFAULT_SEED};
use crate::error::{CliError, CliResult};
use crate::oracle;
use crate::run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Property and oracle checks: criteria 1-7 and 14.
    Unit,
    /// Monte-Carlo reproductions: criteria 8-13.
    Paper,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u32> {
        match self {
            Suite::Unit => vec![1, 2, 3, 4, 5, 6, 7, 14],
            Suite::Paper => (8..=13).collect(),
            Suite::All => (1..=14).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Overrides the trial or path count of criteria 7, 8, 9, 11 and 12.
    pub trials: Option<usize>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl VerifyOptions {
    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "SVD invariants on 500 random matrices",
        2 => "Schatten norms against a brute-force eigensolver",
        3 => "trace identity tr(f (v ⊗ w)) = <f v, w>",
        4 => "Schatten-ball projection: feasibility, idempotence, variational inequality",
        5 => "sign-stream comparator exactness",
        6 => "binary-index experts structure",
        7 => "separation witness value T/2",
        8 => "sign-stream regret lower bound at T = 256",
        9 => "OGD regret sandwich and rate at p = 2",
        10 => "experts regret on realizable separation streams",
        11 => "Rademacher sums on predictable trees",
        12 => "batch excess-risk lower bounds",
        13 => "kernel operators are Hilbert-Schmidt",
        14 => "end-to-end run determinism",
        _ => "unknown criterion",
    }
}

/// Outcome of one check: pass flag and a one-line detail.
type Outcome = CliResult<(bool, String)>;

pub fn run_criterion(id: u32, opts: &VerifyOptions) -> CriterionResult {
    let start = Instant::now();
    let outcome: Outcome = match id {
        1 => svd_invariants(opts.seed),
        2 => schatten_oracle(opts.seed),
        3 => trace_identity(opts.seed),
        4 => projection_properties(opts.seed),
        5 => comparator_exactness(opts.seed),
        6 => experts_structure(opts.seed),
        7 => witness(opts),
        8 => sign_stream_lower_bound_check(opts),
        9 => ogd_sandwich(opts),
        10 => experts_regret(opts.seed),
        11 => tree_sums(opts),
        12 => batch_bounds(opts),
        13 => kernel_norms(),
        14 => determinism(opts.seed),
        _ => Err(CliError::config(format!("criterion: no criterion {id}, expected 1-14"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title: title(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CriterionResult> {
    suite.criteria().into_iter().map(|id| run_criterion(id, opts)).collect()
}

pub fn format_table(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>3}  {:<6}  {:>8}  {}", "#", "result", "seconds", "criterion");
    for r in results {
        let _ = writeln!(
            out,
            "{:>3}  {:<6}  {:>8.2}  {}: {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.title,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(out, "{} passed, {} failed", results.len() - failed, failed);
    out
}

/// Runs the suite, prints the table and fails if any criterion failed.
pub fn cmd_verify(suite: Suite, opts: &VerifyOptions) -> CliResult<()> {
    let mut results = Vec::new();
    for id in suite.criteria() {
        let r = run_criterion(id, opts);
        eprintln!("criterion {id}: {} ({:.1}s)", if r.passed { "pass" } else { "FAIL" }, r.seconds);
        results.push(r);
    }
    print!("{}", format_table(&results));
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Verification(n)),
    }
}

fn idx(p: f64) -> SchattenIndex {
    SchattenIndex::new(p).expect("valid index")
}

fn random_matrix(rng: &mut Rng, d_out: usize, d_in: usize) -> LinOp {
    let data = (0..d_out * d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LinOp::from_row_major(d_out, d_in, data).expect("shape matches")
}

fn random_vector(rng: &mut Rng, d: usize) -> HVector {
    HVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

/// Dense, low-rank or diagonal-with-repeats, chosen by `kind`.
fn test_matrix(rng: &mut Rng, d_out: usize, d_in: usize, kind: usize) -> LinOp {
    match kind % 4 {
        0 | 1 => random_matrix(rng, d_out, d_in),
        2 => {
            let r = rng.gen_range(1..=d_out.min(d_in));
            let a = random_matrix(rng, d_out, r);
            let b = random_matrix(rng, r, d_in);
            a.compose(&b).expect("inner dims agree")
        }
        _ => {
            let k = d_out.min(d_in);
            let levels = [0.0, 1.0, 2.5];
            let diag: Vec<f64> = (0..k).map(|_| levels[rng.gen_range(0..levels.len())]).collect();
            LinOp::diagonal(d_out, d_in, &diag)
        }
    }
}

fn orthonormality_error(q: &LinOp) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..q.d_in() {
        for b in 0..=a {
            let dot: f64 = (0..q.d_out()).map(|i| q.get(i, a) * q.get(i, b)).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

fn svd_invariants(seed: u64) -> Outcome {
    let mut rng = seeded(split_seed(seed, 1));
    let mut worst_orth: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    let mut unsorted = 0;
    for i in 0..500 {
        let d_out = rng.gen_range(1..=64);
        let d_in = rng.gen_range(1..=64);
        let f = test_matrix(&mut rng, d_out, d_in, i);
        let fac = svd(&f)?;
        worst_orth = worst_orth.max(orthonormality_error(&fac.u)).max(orthonormality_error(&fac.v));
        worst_rec = worst_rec.max(fac.reconstruct().max_abs_diff(&f));
        if !(fac.s.windows(2).all(|w| w[0] >= w[1]) && fac.s.iter().all(|&s| s >= 0.0)) {
            unsorted += 1;
        }
    }
    Ok((
        worst_orth <= 1e-9 && worst_rec <= 1e-8 && unsorted == 0,
        format!("max orthonormality error {worst_orth:.2e}, max reconstruction error {worst_rec:.2e}, {unsorted} unsorted"),
    ))
}

fn schatten_oracle(seed: u64) -> Outcome {
    let mut rng = seeded(split_seed(seed, 2));
    let ps = [1.0, 1.5, 2.0, 3.0, 4.0, 7.5];
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d_out = rng.gen_range(1..=16);
        let d_in = rng.gen_range(1..=16);
        let f = test_matrix(&mut rng, d_out, d_in, i);
        for &p in &ps {
            let ours = schatten_norm(&f, idx(p))?.powf(p);
            let theirs = oracle::power_trace(&f, p);
            worst = worst.max((ours - theirs).abs() / theirs.abs().max(1.0));
        }
    }
    Ok((worst <= 1e-8, format!("max relative deviation {worst:.2e} over 200 matrices x 6 indices")))
}

fn trace_identity(seed: u64) -> Outcome {
    let mut rng = seeded(split_seed(seed, 3));
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d_out = rng.gen_range(1..=20);
        let d_in = rng.gen_range(1..=20);
        let f = random_matrix(&mut rng, d_out, d_in);
        let v = random_vector(&mut rng, d_in);
        let w = random_vector(&mut rng, d_out);
        let lhs = trace_pairing(&f, &v, &w)?;
        let rhs = inner(&f.apply(&v)?, &w)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.2e} over 200 triples")))
}

fn projection_properties(seed: u64) -> Outcome {
    let mut rng = seeded(split_seed(seed, 4));
    let mut worst_feasible: f64 = 0.0;
    let mut worst_idempotent: f64 = 0.0;
    let mut worst_variational = f64::NEG_INFINITY;
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let p = idx(p);
        for i in 0..100 {
            let d_out = rng.gen_range(1..=10);
            let d_in = rng.gen_range(1..=10);
            let scale = [0.2, 1.0, 5.0][i % 3];
            let f = test_matrix(&mut rng, d_out, d_in, i).scale(scale);
            let c = rng.gen_range(0.5..2.0);
            let ball = BallSpec::new(p, c)?;
            let proj = project_schatten_ball(&f, &ball)?;
            worst_feasible = worst_feasible.max(schatten_norm(&proj, p)? / c - 1.0);
            worst_idempotent = worst_idempotent.max(project_schatten_ball(&proj, &ball)?.max_abs_diff(&proj));
            let residual = f.sub(&proj)?;
            for _ in 0..5 {
                let g = random_matrix(&mut rng, d_out, d_in);
                let norm = schatten_norm(&g, p)?;
                let z = if norm > 0.0 { g.scale(c * rng.gen_range(0.0..1.0) / norm) } else { g };
                let gap = residual.frobenius_inner(&z.sub(&proj)?)?;
                worst_variational = worst_variational.max(gap);
            }
        }
    }
    Ok((
        worst_feasible <= 1e-9 && worst_idempotent <= 1e-9 && worst_variational <= 1e-7,
        format!(
            "max relative excess norm {worst_feasible:.2e}, idempotence gap {worst_idempotent:.2e}, max <f - P f, z - P f> {worst_variational:.2e}"
        ),
    ))
}

fn comparator_exactness(seed: u64) -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut worst_loss: f64 = 0.0;
    for horizon in [4usize, 16, 64] {
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let p = idx(p);
            for (k, c) in [1.0, 0.7].into_iter().enumerate() {
                let s = schatten_lower_stream(horizon, horizon, c, split_seed(seed, 50 + k as u64))?;
                let f = s.comparator(p)?;
                worst_norm = worst_norm.max((schatten_norm(&f, p)? - c).abs());
                let expected = c * c * horizon as f64 * (1.0 - (horizon as f64).powf(-p.reciprocal())).powi(2);
                worst_loss = worst_loss.max((s.stream.loss_of(&f)? - expected).abs());
            }
        }
    }
    Ok((
        worst_norm <= 1e-9 && worst_loss <= 1e-8,
        format!("max norm deviation {worst_norm:.2e}, max loss deviation {worst_loss:.2e}"),
    ))
}

/// A stream with `y` near `f_k x` plus noise, so the index sets are busy.
fn noisy_separation_stream(horizon: usize, d: usize, rng: &mut Rng) -> CliResult<Stream> {
    let k = rng.gen_range(1..=d);
    let f = BinaryIndexOperator::new(k, d)?;
    let mut rounds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l1: f64 = raw.iter().map(|a| a.abs()).sum();
        let x = HVector::new(raw.iter().map(|a| a / l1).collect())?;
        let mut y = f.apply(&x)?.into_vec();
        for v in y.iter_mut() {
            *v += 0.3 * rng.gen_range(-1.0..1.0);
        }
        let n = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1.0 {
            y.iter_mut().for_each(|a| *a /= n);
        }
        rounds.push(Example::new(x, HVector::new(y)?));
    }
    Ok(Stream::new(d, InstanceSpace::L1Unit, 1.0, rounds)?)
}

fn best_binary_index(stream: &Stream) -> CliResult<usize> {
    let d = stream.dim();
    let mut best = (0, f64::INFINITY);
    for k in 0..=d {
        let f = BinaryIndexOperator::new(k, d)?;
        let mut loss = 0.0;
        for ex in &stream.rounds {
            loss += f.apply(&ex.x)?.sub(&ex.y)?.norm2_sq();
        }
        if loss < best.1 {
            best = (k, loss);
        }
    }
    Ok(best.0)
}

fn experts_structure(seed: u64) -> Outcome {
    let mut rng = seeded(split_seed(seed, 6));
    let (horizon, d) = (32usize, 48usize);
    let threshold = 0.5 / (horizon as f64).sqrt();
    let mut max_set = 0;
    let mut switch_failures = 0;
    let mut worst_case = f64::NEG_INFINITY;
    for s in 0..50u64 {
        let stream = match s % 3 {
            0 => noisy_separation_stream(horizon, d, &mut rng)?,
            1 => separation_stream(horizon, d, rng.gen_range(1..=d), split_seed(seed, s), InstanceMode::Dense)?,
            _ => separation_stream(horizon, d, rng.gen_range(1..=d), split_seed(seed, s), InstanceMode::Basis)?,
        };
        let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, d))?;
        for ex in &stream.rounds {
            learner.update(&ex.x, &ex.y)?;
        }
        for t in 1..=horizon {
            max_set = max_set.max(learner.index_set(t).map_or(0, <[usize]>::len));
        }
        let k_star = best_binary_index(&stream)?;
        if k_star == 0 {
            continue;
        }
        let f_star = BinaryIndexOperator::new(k_star, d)?;
        let first = (1..=horizon).find(|&t| learner.index_set(t).is_some_and(|set| set.contains(&k_star)));
        if let Some(t_star) = first {
            let set = learner.index_set(t_star).unwrap_or(&[]);
            let r_star = set.iter().position(|&k| k == k_star).map_or(0, |r| r + 1);
            for (t, ex) in stream.rounds.iter().enumerate().map(|(t, ex)| (t + 1, ex)) {
                let expert = learner.expert_prediction(t_star, r_star, t, &ex.x)?;
                let expected = if t > t_star { f_star.apply(&ex.x)? } else { HVector::zeros(d) };
                if expert != expected {
                    switch_failures += 1;
                }
            }
        }
        for ex in stream.rounds.iter().take(first.unwrap_or(horizon + 1) - 1) {
            let a = f_star.coefficient(&ex.x);
            let c = ex.y.get(k_star - 1);
            if c.abs() >= threshold {
                switch_failures += 1;
            }
            worst_case = worst_case.max(2.0 * a * c - a * a - 1.0 / horizon as f64);
        }
    }
    // Targets with exactly 4T coordinates at the threshold sit on the unit sphere.
    let small = 8usize;
    let at_threshold = 0.5 / (small as f64).sqrt();
    let mut learner = ExpertsLearner::new(ExpertsConfig::new(small, 64))?;
    for t in 0..small {
        let y: Vec<f64> = (0..64).map(|n| if (n + t) % 64 < 4 * small { at_threshold } else { 0.0 }).collect();
        learner.update(&HVector::zeros(64), &HVector::new(y)?)?;
    }
    let boundary_max = (1..=small).map(|t| learner.index_set(t).map_or(0, <[usize]>::len)).max().unwrap_or(0);

    let d_big = 1 << 16;
    let mut worst_norm: f64 = 0.0;
    for i in 0..1000 {
        let k = if i == 0 { d_big } else if i == 1 { d_big - 1 } else { rng.gen_range(0..=d_big) };
        let support = rng.gen_range(1..=64);
        let mut coeffs = vec![0.0; d_big];
        let radius = rng.gen_range(0.0..=1.0);
        let raw: Vec<f64> = (0..support).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l1: f64 = raw.iter().map(|a| a.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        for (n, r) in raw.iter().enumerate() {
            let slot = if n < 17 { n } else { rng.gen_range(0..d_big) };
            coeffs[slot] += radius * r / l1;
        }
        let x = HVector::new(coeffs)?;
        worst_norm = worst_norm.max(BinaryIndexOperator::new(k, d_big)?.apply(&x)?.norm2());
    }
    let case_ok = worst_case <= 1e-15;
    Ok((
        max_set <= 4 * horizon && boundary_max <= 4 * small && switch_failures == 0 && case_ok && worst_norm <= 1.0 + 1e-12,
        format!(
            "max |S_t|/T {:.3} on generated streams and {:.3} on boundary targets (limit 4), switch mismatches {switch_failures}, max 2ac - a^2 - 1/T {worst_case:.2e}, max ||f_k x|| {worst_norm:.6}",
            max_set as f64 / horizon as f64,
            boundary_max as f64 / small as f64
        ),
    ))
}

fn witness(opts: &VerifyOptions) -> Outcome {
    let trials = opts.trials(1000);
    let mut ok = true;
    let mut parts = Vec::new();
    for horizon in [8usize, 64, 512] {
        let est = rad_separation_witness(horizon, trials, split_seed(opts.seed, 7))?;
        ok &= est.exact == horizon as f64 / 2.0 && est.consistent();
        parts.push(format!("T={horizon}: {:.3} ± {:.3} vs {}", est.mean, est.stderr, est.exact));
    }
    Ok((ok, parts.join("; ")))
}

/// Regret and learner loss of one learner per trial on fresh sign streams.
fn sign_stream_trials<L>(horizon: usize, p: SchattenIndex, trials: usize, seed: u64, make: L) -> CliResult<(McEstimate, McEstimate)>
where
    L: Fn() -> schatten_core::Result<Box<dyn OnlineLearner>> + Sync,
{
    let pairs = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = schatten_lower_stream(horizon, horizon, 1.0, split_seed(seed, i))?;
            let mut learner = make()?;
            let comparator = Comparator::ClosedForm(sign_stream_comparator_loss(horizon, p, 1.0));
            let report = run_regret(learner.as_mut(), &s.stream, &comparator)?;
            Ok((report.regret, report.learner_loss()))
        })
        .collect::<schatten_core::Result<Vec<(f64, f64)>>>()?;
    let regret = McEstimate::from_values(pairs.iter().map(|p| p.0).collect())?;
    let loss = McEstimate::from_values(pairs.iter().map(|p| p.1).collect())?;
    Ok((regret, loss))
}

fn ogd(p: SchattenIndex, horizon: usize) -> schatten_core::Result<Box<dyn OnlineLearner>> {
    let config = OgdConfig::auto(BallSpec::new(p, 1.0)?, horizon);
    Ok(Box::new(OgdLearner::new(config, horizon, horizon)?))
}

fn sign_stream_lower_bound_check(opts: &VerifyOptions) -> Outcome {
    let horizon = 256;
    let trials = opts.trials(200);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [2.0, 4.0, f64::INFINITY] {
        let p = idx(p);
        let bound = sign_stream_lower_bound(horizon, p, 1.0);
        let learners: [(&str, Box<dyn Fn() -> schatten_core::Result<Box<dyn OnlineLearner>> + Sync>); 3] = [
            ("zero", Box::new(move || Ok(Box::new(ZeroLearner::new(horizon, horizon)) as Box<dyn OnlineLearner>))),
            ("ogd", Box::new(move || ogd(p, horizon))),
            (
                "experts",
                Box::new(move || Ok(Box::new(ExpertsLearner::new(ExpertsConfig::new(horizon, horizon))?) as Box<dyn OnlineLearner>)),
            ),
        ];
        for (name, make) in &learners {
            let (regret, loss) = sign_stream_trials(horizon, p, trials, split_seed(opts.seed, 8), make)?;
            let mut pass = regret.mean >= bound - 3.0 * regret.stderr;
            let mut extra = String::new();
            if p.is_infinite() {
                let floor = horizon as f64 * 0.95;
                pass &= loss.mean >= floor;
                extra = format!(", loss {:.2} >= {floor:.1}", loss.mean);
            }
            ok &= pass;
            parts.push(format!(
                "p={} {name}: {:.2} ± {:.2} vs {:.2}{extra}",
                p.value(),
                regret.mean,
                regret.stderr,
                bound
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn ogd_sandwich(opts: &VerifyOptions) -> Outcome {
    let p = SchattenIndex::TWO;
    let trials = opts.trials(200);
    let mut ok = true;
    let mut parts = Vec::new();
    for horizon in [256usize, 1024] {
        let (regret, _) = sign_stream_trials(horizon, p, trials, split_seed(opts.seed, 9), || ogd(p, horizon))?;
        let envelope = ogd_envelope(horizon, 1.0);
        ok &= regret.mean <= envelope + 3.0 * regret.stderr;
        parts.push(format!("T={horizon}: {:.3} ± {:.3} <= {envelope:.1}", regret.mean, regret.stderr));
    }
    // The sweep reaches T = 4096, where each stream holds 2T dense vectors of
    // dimension T, so it uses a tenth of the trials.
    let sweep_trials = (trials / 10).max(2);
    let horizons: Vec<usize> = (6..=12).map(|k| 1usize << k).collect();
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    for &horizon in &horizons {
        let (regret, _) = sign_stream_trials(horizon, p, sweep_trials, split_seed(opts.seed, 90), || ogd(p, horizon))?;
        means.push(regret.mean);
        stderrs.push(regret.stderr);
    }
    let fit = rate_fit(&horizons, &means, &stderrs)?;
    ok &= (0.4..=0.6).contains(&fit.slope);
    parts.push(format!("slope over T=64..4096 ({sweep_trials} trials each) {:.4}, r2 {:.4}", fit.slope, fit.r2));
    Ok((ok, parts.join("; ")))
}

fn experts_regret(seed: u64) -> Outcome {
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut count = 0;
    for horizon in [64usize, 256] {
        let envelope = experts_envelope(horizon);
        let results = (0..50u64)
            .into_par_iter()
            .map(|s| {
                let trial_seed = split_seed(seed ^ horizon as u64, s);
                let k_star = 1 + (trial_seed % horizon as u64) as usize;
                let mode = if s % 2 == 0 { InstanceMode::Dense } else { InstanceMode::Basis };
                let stream = separation_stream(horizon, horizon, k_star, trial_seed, mode)?;
                let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, horizon))?;
                Ok(run_regret(&mut learner, &stream, &Comparator::ClosedForm(0.0))?.regret)
            })
            .collect::<schatten_core::Result<Vec<f64>>>()?;
        for r in results {
            count += 1;
            worst_ratio = worst_ratio.max(r / envelope);
            if r > envelope {
                failures += 1;
            }
        }
    }
    Ok((
        failures == 0,
        format!("{count} streams, {failures} above the envelope, max regret/envelope {worst_ratio:.4}"),
    ))
}

fn tree_sums(opts: &VerifyOptions) -> Outcome {
    let paths = opts.trials(500);
    let qs = [1.0, 2.0, 4.0].map(idx);
    let mut ok = true;
    let mut parts = Vec::new();
    for horizon in [16usize, 128] {
        let trees: [(&str, Box<dyn PredictableTree>); 2] = [
            ("orthogonal", Box::new(OrthogonalTree::new(horizon, horizon, 1.0, 1.0)?)),
            ("random", Box::new(RandomTree::new(horizon, horizon, 1.0, 1.0, split_seed(opts.seed, 11))?)),
        ];
        for (name, tree) in &trees {
            let checks = rademacher_sum_check(tree.as_ref(), &qs, paths, split_seed(opts.seed, 110))?;
            for c in &checks {
                ok &= c.holds();
                if *name == "orthogonal" && c.q == SchattenIndex::TWO {
                    // Every path gives exactly sqrt(T); the only spread is summation rounding.
                    ok &= c.stderr <= 1e-12 && (c.mean - c.bound).abs() <= 1e-9;
                }
            }
            let summary: Vec<String> = checks
                .iter()
                .map(|c| format!("q={}: {:.3}+3*{:.3} <= {:.3}", c.q.value(), c.mean, c.stderr, c.bound))
                .collect();
            parts.push(format!("T={horizon} {name} [{}]", summary.join(", ")));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn batch_bounds(opts: &VerifyOptions) -> Outcome {
    let trials = opts.trials(100);
    let learners: [&dyn BatchLearner; 2] = [&Erm { tol: 1e-10 }, &OnlineToBatch];
    let mut ok = true;
    let mut parts = Vec::new();
    for construction in [Construction::Agnostic, Construction::Realizable] {
        for n in [8usize, 32] {
            for learner in learners {
                let cfg = BatchLowerBoundConfig::new(n, SchattenIndex::TWO, 1.0);
                let check = batch_lower_bound_check(learner, construction, &cfg, trials, split_seed(opts.seed, 12))?;
                ok &= check.holds();
                parts.push(format!(
                    "{construction:?} n={n} {}: {:.4} ± {:.4} vs {:.4}",
                    check.learner, check.mean_excess, check.stderr, check.bound
                ));
            }
        }
    }
    let floor = 1.0 / 20.0;
    for n in [8usize, 32] {
        for learner in learners {
            let cfg = BatchLowerBoundConfig::new(n, idx(64.0), 1.0);
            let check = batch_lower_bound_check(learner, Construction::Agnostic, &cfg, trials, split_seed(opts.seed, 120))?;
            ok &= check.mean_excess >= floor;
            parts.push(format!("p=64 n={n} {}: {:.4} vs {floor}", check.learner, check.mean_excess));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn kernel_norms() -> Outcome {
    let kernels = [
        Kernel::Gaussian { bandwidth: 0.2 },
        Kernel::Gaussian { bandwidth: 0.05 },
        Kernel::Constant { value: 1.0 },
        Kernel::Constant { value: -0.4 },
    ];
    let mut worst = f64::NEG_INFINITY;
    for kernel in kernels {
        for d in [16usize, 64, 256] {
            let oracle_norm = oracle::grid_l2_norm(|r, s| kernel.eval(r, s), d);
            let spec = KernelSpec {
                kernel,
                grid: d,
                c: oracle_norm * (1.0 + 1e-9),
            };
            let f = kernel_operator(&spec)?;
            worst = worst.max(schatten_norm(&f, SchattenIndex::TWO)? - oracle_norm);
        }
    }
    Ok((worst <= 1e-8, format!("max ||f_K||_2 - ||K||_grid {worst:.2e} over 4 kernels x 3 grids")))
}

fn determinism(seed: u64) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))?;
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for preset in ["thm2-p2", "b2-batch"] {
        let out = dir.path().join(preset);
        let text = serde_json::json!({
            "experiment": preset,
            "seed": seed,
            "trials": 4,
            "output_dir": out,
            "emit": ["csv", "json"],
        })
        .to_string();
        let config = ExperimentConfig::parse(&text)?;
        let mut snapshots = Vec::new();
        for _ in 0..2 {
            run::run_config(&config)?;
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                .map_err(|e| CliError::io(&out, e))?
                .map(|entry| {
                    let entry = entry.map_err(|e| CliError::io(&out, e))?;
                    let bytes = std::fs::read(entry.path()).map_err(|e| CliError::io(entry.path(), e))?;
                    Ok((entry.file_name().to_string_lossy().into_owned(), bytes))
                })
                .collect::<CliResult<_>>()?;
            files.sort();
            std::fs::remove_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            snapshots.push(files);
        }
        compared += snapshots[0].len();
        if snapshots[0].is_empty() || snapshots[0] != snapshots[1] {
            mismatched.push(preset);
        }
    }
    Ok((
        mismatched.is_empty(),
        format!("{compared} files compared byte for byte, mismatches in {mismatched:?}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_partition_the_criteria() {
        let mut all = Suite::Unit.criteria();
        all.extend(Suite::Paper.criteria());
        all.sort();
        assert_eq!(all, Suite::All.criteria());
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(15, &VerifyOptions::default());
        assert!(!r.passed && r.detail.contains("no criterion 15"));
    }

    #[test]
    fn fast_criteria_pass() {
        for id in [3, 5, 13] {
            let r = run_criterion(id, &VerifyOptions::default());
            assert!(r.passed, "{id}: {}", r.detail);
        }
    }
}
