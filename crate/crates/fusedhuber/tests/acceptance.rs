//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails. Runs criteria sequentially so the timings are honest.

use std::time::{Duration, Instant};

use fusedhuber::core::diagnostics::{bregman_symmetric, cone_report, gram_matrix, huber_hessian, loss_gradient};
use fusedhuber::core::huber::huber_loss;
use fusedhuber::core::linalg::Cholesky;
use fusedhuber::core::prox::{huber_prox, soft_threshold_scalar};
use fusedhuber::core::{objective, solve, LossKind, Matrix, ProblemData, SolverConfig};
use fusedhuber::experiments::{median, rate_experiment, run_bench, tuned_fit, BenchConfig, GridSpec, Method, RateConfig};
use fusedhuber::simulate::{generate, make_beta_star, sample_design, sample_noise, NoiseLaw, SyntheticSpec};
use fusedhuber_oracles::{central_difference, fista_reference, fused_objective, grid_argmin, prox_subgradient_reference};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Tuning grid for the p = 400 and convergence criteria.
fn compact_grid() -> GridSpec {
    GridSpec { tau_multipliers: vec![0.4, 0.95, 1.5], lambda1s: vec![0.01, 0.1, 1.0], lambda2s: vec![0.01, 0.1, 1.0] }
}

fn tight(cfg: SolverConfig) -> SolverConfig {
    cfg.with_tol(1e-10, 200_000)
}

fn prox_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut soft_err, mut huber_err, mut moreau_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let v: f64 = rng.random_range(-5.0..5.0);
        let c: f64 = rng.random_range(0.0..3.0);
        let s = soft_threshold_scalar(v, c);
        let g = grid_argmin(|x| c * x.abs() + 0.5 * (x - v) * (x - v), -6.0, 6.0, 1e-4);
        soft_err = soft_err.max((s - g).abs());
        // conjugate of c|.| is the indicator of [-c, c]; its prox is clamping
        moreau_err = moreau_err.max((v - (s + v.clamp(-c, c))).abs());
    }
    for _ in 0..1000 {
        let v: f64 = rng.random_range(-5.0..5.0);
        let tau: f64 = rng.random_range(0.05..3.0);
        let c: f64 = rng.random_range(0.05..5.0);
        let n = rng.random_range(1..20usize);
        let h = huber_prox(v, tau, c, n).unwrap();
        let huber = |x: f64| if x.abs() <= tau { 0.5 * x * x } else { tau * x.abs() - 0.5 * tau * tau };
        let g = grid_argmin(|x| huber(x) / n as f64 + (x - v) * (x - v) / (2.0 * c), -6.0, 6.0, 1e-4);
        huber_err = huber_err.max((h - g).abs());
        // the conjugate of h/n is n w^2 / 2 on |w| <= tau / n
        let conj = (v / (n as f64 + c)).clamp(-tau / n as f64, tau / n as f64);
        moreau_err = moreau_err.max((v - (h + c * conj)).abs());
    }
    check(
        soft_err <= 2e-4 && huber_err <= 2e-4 && moreau_err <= 1e-12,
        format!("soft max err {soft_err:.2e}, huber max err {huber_err:.2e} (limit 2e-4); Moreau max err {moreau_err:.2e} (limit 1e-12)"),
    )
}

fn small_instance(i: u64) -> (NoiseLaw, f64, Vec<Vec<f64>>, Vec<f64>) {
    let law = NoiseLaw::all()[(i % 3) as usize];
    let lambda = [0.01, 0.1, 1.0][((i / 3) % 3) as usize];
    let x = sample_design(10, 6, 0.5, 100 + i).unwrap();
    let mut y = x.mul_vec(&[1.0; 6]).unwrap();
    for (v, e) in y.iter_mut().zip(sample_noise(&law, 10, 100 + i).unwrap()) {
        *v += e;
    }
    (law, lambda, x.to_rows(), y)
}

fn small_instance_optimality() -> Verdict {
    let (mut worst_sub, mut worst_fista, mut ok) = (f64::NEG_INFINITY, 0.0f64, true);
    for i in 0..25 {
        let (_, lambda, rows, y) = small_instance(i);
        let data = ProblemData::new(Matrix::from_rows(&rows).unwrap(), y.clone()).unwrap();
        let cfg = tight(SolverConfig::default().with_lambdas(lambda, lambda));
        let fit = solve(&data, &cfg, None).unwrap();
        let loss = Some(cfg.tau);
        let ours = fused_objective(&rows, &y, &fit.beta, loss, lambda, lambda);
        let sub = fused_objective(&rows, &y, &prox_subgradient_reference(&rows, &y, loss, lambda, lambda, 200_000), loss, lambda, lambda);
        let acc = fused_objective(&rows, &y, &fista_reference(&rows, &y, loss, lambda, lambda, 200_000), loss, lambda, lambda);
        // The subgradient reference is a feasible point, so it bounds the optimum from above.
        let gap_sub = (ours - sub) / sub.abs();
        let gap_acc = (ours - acc).abs() / acc.abs();
        worst_sub = worst_sub.max(gap_sub);
        worst_fista = worst_fista.max(gap_acc);
        ok &= fit.converged() && gap_sub <= 1e-6 && gap_acc <= 1e-6;
    }
    check(
        ok,
        format!("25 instances: max (ours - subgradient ref)/ref {worst_sub:.2e}, max |ours - accelerated ref|/ref {worst_fista:.2e} (limit 1e-6)"),
    )
}

struct TunedRun {
    p: usize,
    noise: NoiseLaw,
    iterations: usize,
    converged: bool,
    solve_time: Duration,
}

fn convergence(runs: &mut Vec<TunedRun>) -> Verdict {
    let base = SolverConfig::default();
    let mut ok = true;
    let mut worst = 0;
    for p in [50, 200, 400] {
        for noise in NoiseLaw::all() {
            let data = generate(&SyntheticSpec { p, n: 100, n_test: 100, noise, seed: 0, ..Default::default() }).unwrap();
            let r = tuned_fit(&data, &compact_grid(), &base, 1).unwrap();
            ok &= r.converged && r.iterations <= 2000;
            worst = worst.max(r.iterations);
            runs.push(TunedRun { p, noise, iterations: r.iterations, converged: r.converged, solve_time: r.solve_time });
        }
    }
    let failed: Vec<String> = runs.iter().filter(|r| !r.converged).map(|r| format!("p={} {}", r.p, r.noise)).collect();
    let detail = format!("9 tuned instances, sigma=0.1, step=1, tol=1e-3: max iterations {worst} (limit 2000); not converged: {failed:?}");
    check(ok, detail)
}

fn robustness() -> Verdict {
    let cfg = BenchConfig {
        noises: vec![NoiseLaw::LOGNORMAL, NoiseLaw::STUDENT_T],
        ps: vec![400],
        n: 100,
        n_test: 100,
        replications: 20,
        compare_squared: true,
        grid: compact_grid(),
        ..Default::default()
    };
    let report = run_bench(&cfg, &SolverConfig::default(), 1).unwrap();
    let mut ok = report.failures() == 0;
    let mut parts = Vec::new();
    for noise in &cfg.noises {
        let med = |m: Method| {
            let errs: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.noise == *noise && r.method == m)
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.estimation_error))
                .collect();
            median(&errs).unwrap_or(f64::NAN)
        };
        let (h, s) = (med(Method::Huber), med(Method::Squared));
        ok &= h < s;
        parts.push(format!("{noise}: huber median {h:.4} vs least squares {s:.4}"));
    }
    check(ok, format!("p=400, 20 replications; {}", parts.join("; ")))
}

fn tau_limit() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let noise = NoiseLaw::all()[(seed % 3) as usize];
        let s = generate(&SyntheticSpec { p: 12, n: 30, n_test: 0, noise, seed: 500 + seed, ..Default::default() }).unwrap();
        let base = tight(SolverConfig::default().with_lambdas(0.05, 0.05));
        let h = base.with_tau(1e6);
        let q = base.with_loss(LossKind::Squared);
        let fh = solve(&s.train, &h, None).unwrap();
        let fq = solve(&s.train, &q, None).unwrap();
        let oh = objective(&s.train, &fh.beta, &h).unwrap();
        let oq = objective(&s.train, &fq.beta, &q).unwrap();
        worst = worst.max((oh - oq).abs() / oq.abs());
    }
    check(worst <= 1e-6, format!("10 instances: max relative objective gap {worst:.2e} (limit 1e-6)"))
}

fn rate() -> Verdict {
    let cfg = RateConfig {
        p: 50,
        n_list: vec![100, 400, 1600],
        n_test: 100,
        rho: 0.5,
        noise: NoiseLaw::GAUSSIAN,
        replications: 20,
        seed: 0,
        grid: GridSpec { tau_multipliers: vec![0.4, 0.95, 1.5], lambda1s: vec![0.001, 0.003, 0.01, 0.03, 0.1], lambda2s: vec![0.001, 0.01, 0.1] },
    };
    let table = rate_experiment(&cfg, &SolverConfig::default(), 1).unwrap();
    let medians: Vec<f64> = table.rows.iter().map(|r| r.median_error).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let in_band = table.slope.is_some_and(|s| (-0.8..=-0.2).contains(&s));
    check(
        decreasing && in_band,
        format!("medians {:?} at n = [100, 400, 1600]; slope {:?} (band [-0.8, -0.2])", medians.iter().map(|m| format!("{m:.5}")).collect::<Vec<_>>(), table.slope),
    )
}

fn structure() -> Verdict {
    let grid = GridSpec { tau_multipliers: vec![0.4, 0.95, 1.5], ..GridSpec::default() };
    let s = generate(&SyntheticSpec { p: 50, n: 200, n_test: 100, noise: NoiseLaw::Gaussian { sd: 0.05 }, seed: 0, ..Default::default() }).unwrap();
    let r = tuned_fit(&s, &grid, &SolverConfig::default(), 1).unwrap();
    let truth = make_beta_star(50).unwrap();
    // maximal runs of equal true coefficients
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for j in 1..=50 {
        if j == 50 || truth[j] != truth[start] {
            blocks.push((start, j));
            start = j;
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, b) in blocks.into_iter().filter(|(a, b)| b - a >= 2) {
        let (mut close, mut total) = (0usize, 0usize);
        for i in a..b {
            for j in i + 1..b {
                total += 1;
                close += usize::from((r.beta[i] - r.beta[j]).abs() < 0.05);
            }
        }
        let frac = close as f64 / total as f64;
        ok &= frac >= 0.9;
        parts.push(format!("[{}..{}] {:.3}", a + 1, b, frac));
    }
    check(ok, format!("lambda=({}, {}); close-pair fraction per block {} (limit 0.9)", r.config.lambda1, r.config.lambda2, parts.join(", ")))
}

fn speed(runs: &[TunedRun]) -> Verdict {
    let big: Vec<&TunedRun> = runs.iter().filter(|r| r.p == 400).collect();
    let worst = big.iter().map(|r| r.solve_time).max().unwrap_or(Duration::MAX);
    let its: Vec<usize> = big.iter().map(|r| r.iterations).collect();
    check(!big.is_empty() && worst < Duration::from_secs(5), format!("p=400, n=100 solve at tuned parameters: max {worst:.3?} over 3 noise laws (iterations {its:?}; limit 5 s)"))
}

fn diagnostics() -> Verdict {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..50u64 {
        let noise = NoiseLaw::all()[(k % 3) as usize];
        let p = 12 + (k % 5) as usize;
        let s = generate(&SyntheticSpec { p, n: 40, n_test: 0, noise, seed: 900 + k, ..Default::default() }).unwrap();
        let data = &s.train;
        let tau: f64 = rng.random_range(0.2..3.0);
        let b1: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b2: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();

        let d = bregman_symmetric(&b1, &b2, data, tau).unwrap();
        if d < -1e-12 || d != bregman_symmetric(&b2, &b1, data, tau).unwrap() {
            failures.push(format!("#{k} bregman symmetry/sign"));
        }
        for l in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let bl: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| b + l * (a - b)).collect();
            if bregman_symmetric(&bl, &b2, data, tau).unwrap() > l * d + 1e-10 {
                failures.push(format!("#{k} scaling at {l}"));
            }
        }

        // keep every residual away from the kinks so central differences are valid
        let mut beta = b1.clone();
        while data.residuals(&beta).unwrap().iter().any(|r| (r.abs() - tau).abs() < 1e-3) {
            beta.iter_mut().for_each(|b| *b += rng.random_range(-1e-2..1e-2));
        }
        let g = loss_gradient(data, &beta, tau).unwrap();
        for j in 0..p {
            let f = |t: f64| {
                let mut b = beta.clone();
                b[j] = t;
                huber_loss(&data.residuals(&b).unwrap(), tau).unwrap()
            };
            let err = (central_difference(f, beta[j], 1e-6) - g[j]).abs();
            if err > 1e-5 {
                failures.push(format!("#{k} gradient coordinate {j} off by {err:.1e}"));
            }
        }

        let h = huber_hessian(data, &beta, tau).unwrap();
        let gram = gram_matrix(data);
        let mut gap = gram.clone();
        for i in 0..p {
            for j in 0..p {
                gap.set(i, j, gram.get(i, j) - h.get(i, j) + if i == j { 1e-12 } else { 0.0 });
            }
        }
        let mut hr = h.clone();
        (0..p).for_each(|i| hr.set(i, i, h.get(i, i) + 1e-12));
        if Cholesky::factor(&gap).is_err() || Cholesky::factor(&hr).is_err() {
            failures.push(format!("#{k} hessian not between 0 and the Gram matrix"));
        }

        let lambda1 = 2.5 * loss_gradient(data, &s.beta_star, tau).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambda2 = 0.5 * lambda1;
        let cfg = tight(SolverConfig::default().with_tau(tau).with_lambdas(lambda1, lambda2));
        let fit = solve(data, &cfg, None).unwrap();
        let cone = cone_report(data, &fit.beta, &s.beta_star, tau, lambda1, lambda2).unwrap();
        if !cone.gradient_condition || cone.violated() {
            failures.push(format!("#{k} cone: off {:.3e} vs {:.3} x on {:.3e}", cone.off_support, cone.cone_constant, cone.on_support));
        }
    }
    check(failures.is_empty(), format!("50 instances: Bregman, scaling, gradient, Hessian sandwich, cone; failures {failures:?}"))
}

fn main() {
    let mut runs = Vec::new();
    let mut all_pass = true;
    let mut report = |id: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = v.pass && in_time;
        all_pass &= pass;
        let budget = limit.map(|l| format!(" / limit {l:?}")).unwrap_or_default();
        println!("{id} {} {} [{elapsed:.1?}{budget}]", if pass { "PASS" } else { "FAIL" }, v.detail);
    };
    report("AC1", Some(Duration::from_secs(5)), &mut prox_oracles);
    report("AC2", Some(Duration::from_secs(120)), &mut small_instance_optimality);
    report("AC3", Some(Duration::from_secs(300)), &mut || convergence(&mut runs));
    report("AC4", Some(Duration::from_secs(600)), &mut robustness);
    report("AC5", None, &mut tau_limit);
    report("AC6", Some(Duration::from_secs(900)), &mut rate);
    report("AC7", None, &mut structure);
    report("AC8", None, &mut || speed(&runs));
    report("AC9", Some(Duration::from_secs(60)), &mut diagnostics);
    if !all_pass {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
