//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.
//!
//! All Monte Carlo criteria use the same seed, fixed before the first run.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use qwalk::analytics::{integrate_against_f_t, intensity_with_kernel, rho_functional, rho_support};
use qwalk::ensemble::{laplace_exact, laplace_monte_carlo};
use qwalk::quadrature::QuadConfig;
use qwalk::stats::{exact_functional_variance, poisson_fit, DEFAULT_POISSON_TV};
use qwalk::{
    averaged_kernel, chirality_kernel, density_f, empirical_functional, ks_distance_to_limit,
    local_equilibrium_scan, measure_field, rho, CoinTag, CountHistogram, Experiment,
    FieldConfiguration, LaplaceExponent, MonteCarloEstimate, Profile, RandomSource, SpinorState,
};
use qwalk_cli::ExperimentConfig;

const SEED: u64 = 20_240_601;

type Check = Result<String, String>;

type Criterion = (u32, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn triangle() -> Profile {
    Profile::triangle(-1.0, 0.0, 1.0, 1.0).unwrap()
}

/// Occupation probabilities after `n` steps from a dense `S·(Id ⊗ H)` on
/// sites `[-n-1, n+1]`.
fn dense_distribution(n: u64, coin: CoinTag) -> Vec<(i64, f64)> {
    let w = n as i64 + 1;
    let dim = (2 * (2 * w + 1)) as usize;
    let idx = |site: i64, c: usize| (2 * (site + w)) as usize + c;
    let h = FRAC_1_SQRT_2;
    let mut u = vec![vec![0.0; dim]; dim];
    for site in -w..=w {
        for (c, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            if site < w {
                u[idx(site + 1, 0)][idx(site, c)] += h;
            }
            if site > -w {
                u[idx(site - 1, 1)][idx(site, c)] += sign * h;
            }
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[idx(0, if coin == CoinTag::Plus { 0 } else { 1 })] = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        v = u.iter().map(|row| row.iter().zip(&v).map(|(&a, &x)| x * a).sum()).collect();
    }
    (-w..=w).map(|s| (s, v[idx(s, 0)].norm_sqr() + v[idx(s, 1)].norm_sqr())).collect()
}

fn criterion_1() -> Check {
    for (n, expected) in [
        (2u64, vec![(-2i64, 0.25), (0, 0.5), (2, 0.25)]),
        (3, vec![(-3, 0.125), (-1, 0.125), (1, 0.625), (3, 0.125)]),
    ] {
        let d = SpinorState::from_localized(0, CoinTag::Plus).evolve(n).position_distribution();
        for (site, p) in expected {
            ensure((d.prob(site) - p).abs() <= 1e-12, || format!("n = {n}, site {site}: {}", d.prob(site)))?;
        }
        // A measured lone walker lands on the support above.
        let mut config = FieldConfiguration::new();
        config.add(0, CoinTag::Plus, 1);
        let field = measure_field(&config, n, 1, RandomSource::new(SEED, n));
        let (site, _) = field.iter().next().ok_or("empty measurement")?;
        ensure(d.prob(site) > 0.0, || format!("measured site {site} outside support"))?;
    }
    let mut worst = 0.0f64;
    for n in 0..=12u64 {
        for coin in CoinTag::ALL {
            let fast = chirality_kernel(coin, n);
            for (site, p) in dense_distribution(n, coin) {
                worst = worst.max((fast.prob(site) - p).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("dense oracle gap {worst:e}"))?;
    Ok(format!("max gap to dense oracle {worst:.1e}"))
}

fn criterion_2() -> Check {
    let mut state = SpinorState::from_localized(0, CoinTag::Plus);
    let mut worst = 0.0f64;
    for n in 1..=10_000u64 {
        state = state.step();
        if n % 100 == 0 || n <= 100 {
            worst = worst.max((state.total_probability() - 1.0).abs());
            for (site, p) in state.position_distribution().iter() {
                if (site - n as i64).rem_euclid(2) != 0 && p != 0.0 {
                    return Err(format!("n = {n}: mass {p:e} on wrong-parity site {site}"));
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("norm drift {worst:e}"))?;
    Ok(format!("max norm drift {worst:.1e} up to n = 10^4"))
}

fn criterion_3() -> Check {
    let mut worst = 0.0f64;
    for n in 0..=200u64 {
        let plus = chirality_kernel(CoinTag::Plus, n);
        let minus = chirality_kernel(CoinTag::Minus, n);
        let q = averaged_kernel(n);
        for m in -(n as i64)..=n as i64 {
            worst = worst.max((plus.prob(m) - minus.prob(-m)).abs()).max((q.prob(m) - q.prob(-m)).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("asymmetry {worst:e}"))?;
    Ok(format!("max asymmetry {worst:.1e}"))
}

fn criterion_4() -> Check {
    let cfg = QuadConfig { abs_tol: 1e-12, max_panels: 4000 };
    let mass = integrate_against_f_t(1.0, |_| 1.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, &[], cfg).map_err(|e| e.to_string())?;
    ensure((mass - 1.0).abs() <= 1e-9, || format!("∫f = {mass}"))?;
    // A second route: bounded angle integrand by midpoint sums, which never
    // touch the endpoints where f blows up.
    let m = 200_000;
    let h = PI / m as f64;
    let mass2: f64 = (0..m)
        .map(|i| {
            let th = -FRAC_PI_2 + (i as f64 + 0.5) * h;
            density_f(th.sin() / SQRT_2) * th.cos() / SQRT_2 * h
        })
        .sum();
    ensure((mass2 - 1.0).abs() <= 1e-9, || format!("∫f by midpoint = {mass2}"))?;
    for i in 0..=1000 {
        let x = i as f64 * 7.07e-4;
        ensure(density_f(x) == density_f(-x), || format!("f not even at {x}"))?;
    }
    let g = triangle();
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let (lo, hi) = rho_support(&g, t).map_err(|e| e.to_string())?;
        let ones = Profile::from_points(&[(lo - 1.0, 0.0), (lo - 0.5, 1.0), (hi + 0.5, 1.0), (hi + 1.0, 0.0)]).unwrap();
        let total = rho_functional(&g, &ones, t).map_err(|e| e.to_string())?;
        worst = worst.max((total - g.integral()).abs());
        for dx in [1e-12, 1e-6, 0.1, 3.0] {
            let outside = [rho(&g, t, hi + dx), rho(&g, t, lo - dx)];
            for r in outside {
                let r = r.map_err(|e| e.to_string())?;
                ensure(r == 0.0, || format!("rho = {r:e} at distance {dx} outside the cone (t = {t})"))?;
            }
        }
    }
    ensure(worst <= 1e-6, || format!("mass defect {worst:e}"))?;
    Ok(format!("|∫f − 1| = {:.1e}, rho mass defect {worst:.1e}", (mass - 1.0).abs()))
}

fn criterion_5() -> Check {
    let ks: Vec<f64> = [20u64, 200, 2000].iter().map(|&n| ks_distance_to_limit(&averaged_kernel(n), n)).collect();
    ensure(ks[0] > ks[1] && ks[1] > ks[2], || format!("not decreasing: {ks:?}"))?;
    ensure(ks[2] <= 0.03, || format!("ks(2000) = {}", ks[2]))?;
    Ok(format!("ks = {:.5} > {:.5} > {:.5}", ks[0], ks[1], ks[2]))
}

fn criterion_6() -> Check {
    let g = triangle();
    let n = 64;
    let e = Experiment::new(&g, n, 1.0).map_err(|e| e.to_string())?;
    let kernel = e.positions().averaged_kernel();
    let probes = [-40i64, -11, 0, 19, 57];
    let rows = e.replicate(100_000, RandomSource::new(SEED, 6 << 32), |f| probes.map(|s| f.get(s)));
    let mut worst = 0.0f64;
    for (i, &site) in probes.iter().enumerate() {
        let hist = CountHistogram::from_samples(rows.iter().map(|r| r[i]));
        let b = intensity_with_kernel(&g, n, &kernel, site);
        let fit = poisson_fit(&hist, b, DEFAULT_POISSON_TV).map_err(|e| e.to_string())?;
        ensure(fit.pass, || format!("site {site}: tv {} vs B = {b}", fit.tv))?;
        worst = worst.max(fit.tv);
    }
    let r = rows.len() as f64;
    let (a, b) = (2usize, 3usize);
    let ma = rows.iter().map(|x| x[a] as f64).sum::<f64>() / r;
    let mb = rows.iter().map(|x| x[b] as f64).sum::<f64>() / r;
    let prods: Vec<f64> = rows.iter().map(|x| (x[a] as f64 - ma) * (x[b] as f64 - mb)).collect();
    let cov = MonteCarloEstimate::from_samples(&prods);
    let z = cov.mean.abs() / cov.std_err;
    ensure(z <= 3.0, || format!("covariance z = {z:.2}"))?;
    Ok(format!("max tv {worst:.4}, covariance z {z:.2}"))
}

fn criterion_7() -> Check {
    let g = triangle();
    let n = 64;
    let lambda = LaplaceExponent::from_pairs(&[(-20, 0.5), (-3, 1.0), (0, 0.3), (8, 0.8), (30, 2.0)]).unwrap();
    let exact = laplace_exact(&g, n, 1.0, &lambda).map_err(|e| e.to_string())?;
    let e = Experiment::new(&g, n, 1.0).map_err(|e| e.to_string())?;
    let mc = laplace_monte_carlo(&e, &lambda, 100_000, RandomSource::new(SEED, 7 << 32));
    let z = (mc.mean - exact).abs() / mc.std_err;
    ensure(z <= 3.0, || format!("exact {exact}, mc {} ± {}", mc.mean, mc.std_err))?;
    Ok(format!("exact {exact:.6}, mc {:.6} ± {:.6} (z {z:.2})", mc.mean, mc.std_err))
}

fn criterion_8() -> Check {
    let g = triangle();
    let replicas = 1_000_000;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (i, x) in [0.0, 0.3].into_iter().enumerate() {
        let report = local_equilibrium_scan(&g, 1.0, x, &[32, 128, 512], replicas, RandomSource::new(SEED, (8 + i as u64) << 48))
            .map_err(|e| e.to_string())?;
        let gap = &report.aux["tv_poisson_b_rho"];
        let line = format!(
            "x = {x}: tv {:?} (noise ≈ {:.1e}, Poisson(B) vs Poisson(ρ) {:.1e} → {:.1e})",
            report.metric_values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
            report.stderrs[0],
            gap[0],
            gap[2]
        );
        if !report.monotone_trend {
            failures.push(line.clone());
        }
        lines.push(line);
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(lines.join("; "))
}

fn criterion_9() -> Check {
    let g = triangle();
    let h = triangle();
    let e = Experiment::new(&g, 1000, 1.0).map_err(|e| e.to_string())?;
    let target = rho_functional(&g, &h, 1.0).map_err(|e| e.to_string())?;
    let r = 50usize;
    let samples = e.replicate(r as u64, RandomSource::new(SEED, 9 << 32), |f| empirical_functional(f, &h));
    let est = MonteCarloEstimate::from_samples(&samples);
    let rel = (est.mean - target).abs() / target;
    ensure(rel <= 0.05, || format!("relative error {rel}"))?;
    let exact_sd = exact_functional_variance(&e, &h).sqrt();
    // Delta-method standard error of the sample standard deviation.
    let var = est.std_dev * est.std_dev;
    let m4 = samples.iter().map(|x| (x - est.mean).powi(4)).sum::<f64>() / r as f64;
    let se_sd = ((m4 - var * var) / r as f64).sqrt() / (2.0 * est.std_dev);
    let z = (est.std_dev - exact_sd).abs() / se_sd;
    ensure(z <= 3.0, || format!("sd {} vs exact {exact_sd} (se {se_sd})", est.std_dev))?;
    Ok(format!("relative error {rel:.4}; sd {:.5} vs exact {exact_sd:.5} (z {z:.2})", est.std_dev))
}

fn criterion_10() -> Check {
    let configs = [
        "command = \"evolve\"\nsite = 2\ncoin = \"minus\"\nsteps = 40\n",
        "command = \"kernel\"\nn = 50\n",
        "command = \"lln\"\nn = [20, 200]\n",
        "command = \"local-eq\"\nn = [16, 32]\nt = 1.0\nx = 0.3\nprofile_path = \"g.txt\"\nreplicas = 500\n",
        "command = \"hydro\"\nn = [50, 100]\nt = 1.0\nprofile_path = \"g.txt\"\ntest_fn_path = \"h.txt\"\nreplicas = 20\n",
        "command = \"laplace\"\nn = 32\nt = 1.0\nprofile_path = \"g.txt\"\nreplicas = 500\n[lambda]\n-2 = 1.0\n5 = 0.5\n",
    ];
    let mut compared = 0;
    for cfg_text in configs {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for _ in 0..2 {
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                fs::write(dir.path().join("g.txt"), triangle().to_text()).unwrap();
                fs::write(dir.path().join("h.txt"), "-0.8 0\n0.1 2\n0.9 0\n").unwrap();
                let path = dir.path().join("run.toml");
                fs::write(&path, format!("seed = {SEED}\noutput_path = \"out.{format}\"\n{cfg_text}")).unwrap();
                let cfg = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
                qwalk_cli::run(&cfg).map_err(|e| e.to_string())?;
                let mut files: Vec<_> = fs::read_dir(dir.path())
                    .unwrap()
                    .map(|e| e.unwrap().path())
                    .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("out"))
                    .collect();
                files.sort();
                let bytes: Vec<(String, Vec<u8>)> = files
                    .iter()
                    .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(p).unwrap()))
                    .collect();
                outputs.push(bytes);
            }
            ensure(outputs[0] == outputs[1], || format!("outputs differ for {format}: {cfg_text:?}"))?;
            compared += outputs[0].len();
        }
    }
    Ok(format!("{compared} output files byte-identical across runs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "exact small-n kernels", criterion_1),
        (2, "unitarity and parity", criterion_2),
        (3, "mirror symmetry", criterion_3),
        (4, "limit density and rho", criterion_4),
        (5, "law of large numbers", criterion_5),
        (6, "product Poisson law", criterion_6),
        (7, "Laplace identity", criterion_7),
        (8, "local equilibrium scan", criterion_8),
        (9, "hydrodynamic limit", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("criterion {id}: PASS  {name} [{}] {detail}", secs(elapsed)),
            Err(detail) => {
                failed += 1;
                println!("criterion {id}: FAIL  {name} [{}] {detail}", secs(elapsed));
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
