//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stereo_qubo::energy::{total_energy, DisparityRange, Labeling};
use stereo_qubo::fixtures::{self, SUPPLEMENTARY_ALPHA, SUPPLEMENTARY_BITS};
use stereo_qubo::imaging::{write_pgm, DispMatrix, GrayImage};
use stereo_qubo::metrics::{bad_beta, qubit_counts, rms, ComplexityInputs, QubitCounts};
use stereo_qubo::qubo::{build_qubo, default_alpha, local_alpha_bound, BitVector, PenaltyCheck};
use stereo_qubo::solvers::{brute_force_labelings, icm, simulated_anneal, wta, AnnealSchedule};
use stereo_qubo::verify::verify_instance;
use stereo_qubo::Rational;

type Outcome = Result<String, String>;

fn int(v: i64) -> Rational {
    Rational::from_integer(v)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_golden_qubo() -> Outcome {
    let p = fixtures::supplementary(int(10));
    let q = build_qubo(&p, int(SUPPLEMENTARY_ALPHA), PenaltyCheck::Unchecked).map_err(|e| e.to_string())?;
    ensure(q.num_vars() == 18, || format!("{} variables", q.num_vars()))?;
    ensure(q.offset() == int(1800), || format!("offset {}", q.offset()))?;
    // -150 where the data cost is 50, -200 where it is 0
    let expected_150 = [(1, 0, 0), (2, 0, 1), (2, 1, 0), (3, 1, 1), (1, 2, 0), (2, 2, 1)];
    ensure(q.linear().len() == 18, || format!("{} linear terms", q.linear().len()))?;
    for a in 0..18 {
        let ((i, j), d) = q.index().triple(a).ok_or("bad index")?;
        let want = if expected_150.contains(&(i, j, d)) { -150 } else { -200 };
        ensure(q.linear_coeff(a) == int(want), || format!("x{a} coefficient {}", q.linear_coeff(a)))?;
    }
    let same = q.quadratic().iter().filter(|(_, &c)| c == int(400)).count();
    let cross = q.quadratic().iter().filter(|(_, &c)| c == int(10)).count();
    ensure(same == 9 && cross == 24 && q.quadratic().len() == 33, || {
        format!("{same} couplings of 400, {cross} of 10, {} total", q.quadratic().len())
    })?;
    for (&(a, b), &c) in q.quadratic() {
        let (pa, _) = q.index().triple(a).ok_or("bad index")?;
        let (pb, _) = q.index().triple(b).ok_or("bad index")?;
        ensure((pa == pb) == (c == int(400)), || format!("coupling ({a},{b}) = {c}"))?;
    }
    Ok("18 vars, offset 1800, 18 linear in {-150,-200}, 9x400 + 24x10 (exact)".into())
}

fn c2_golden_optimum() -> Outcome {
    let p = fixtures::supplementary(int(10));
    let opt = brute_force_labelings(&p).map_err(|e| e.to_string())?;
    let golden = fixtures::supplementary_labeling(&p);
    ensure(opt.min_energy == int(50), || format!("min F {}", opt.min_energy))?;
    ensure(opt.minimizers.contains(&golden), || "published map not among minimizers".into())?;
    let q = build_qubo(&p, int(SUPPLEMENTARY_ALPHA), PenaltyCheck::Unchecked).map_err(|e| e.to_string())?;
    let x = BitVector::from_u8(&SUPPLEMENTARY_BITS);
    let decoded = q.decode(&x).map_err(|e| e.to_string())?;
    ensure(decoded == golden, || format!("x* decodes to {:?}", decoded.values()))?;
    let map = p.disparity_map(&decoded).map_err(|e| e.to_string())?;
    let want = p.disparity_map(&golden).map_err(|e| e.to_string())?;
    ensure(map == want, || "disparity map differs".into())?;
    Ok(format!(
        "min F = 50 over 512 labelings, {} minimizer(s), x* decodes to the published map (exact)",
        opt.minimizers.len()
    ))
}

fn c3_lemma1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3a1);
    let mut checked = 0u64;
    for inst in 0..200 {
        let k = rng.random_range(1..=4u32);
        let d_min = rng.random_range(0..=2u32);
        let d_max = d_min + k - 1;
        let width = rng.random_range(d_max as usize + 1..=8);
        let height = rng.random_range(1..=8usize);
        let lambda = int(rng.random_range(0..=50));
        let range = DisparityRange::new(d_min, d_max).map_err(|e| e.to_string())?;
        let p = fixtures::random_problem(&mut rng, width, height, range, lambda);
        let q = build_qubo(&p, default_alpha(&p), PenaltyCheck::Strict).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let w = Labeling::new((0..p.num_pixels()).map(|_| rng.random_range(d_min..=d_max)).collect());
            let x = q.encode(&w).map_err(|e| e.to_string())?;
            let h = q.evaluate(&x).map_err(|e| e.to_string())?;
            let f = total_energy(&p, &q.decode(&x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure(h == f, || format!("instance {inst}: H = {h} but F = {f}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} feasible vectors on 200 instances, H == F exactly, 0 failures"))
}

fn c4_lemma2_theorem1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3a2);
    let mut vectors = 0u64;
    for inst in 0..50 {
        let d_min = rng.random_range(0..=2u32);
        let d_max = d_min + 1;
        let height = rng.random_range(1..=3usize);
        let cols = rng.random_range(1..=6 / height);
        let width = d_max as usize + cols;
        let lambda = Rational::new(rng.random_range(0..=200), rng.random_range(1..=4));
        let range = DisparityRange::new(d_min, d_max).map_err(|e| e.to_string())?;
        let p = fixtures::random_problem(&mut rng, width, height, range, lambda);
        let rep = verify_instance(&p).map_err(|e| e.to_string())?;
        for c in rep.checks.iter().filter(|c| c.name != "lemma1") {
            ensure(c.passed, || format!("instance {inst}: {} failed: {}", c.name, c.detail))?;
        }
        vectors += 1 << rep.num_vars;
    }
    Ok(format!("50 instances, {vectors} bit vectors enumerated, every minimizer feasible and optimal for F"))
}

fn c5_sa_efficacy() -> Outcome {
    let p = fixtures::supplementary(int(10));
    let q = build_qubo(&p, int(SUPPLEMENTARY_ALPHA), PenaltyCheck::Unchecked).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for seed in 0..100u64 {
        let sched = AnnealSchedule::default_for(&q, seed).map_err(|e| e.to_string())?;
        let r = simulated_anneal(&q, &sched).map_err(|e| e.to_string())?;
        if r.feasible && r.energy == int(50) {
            hits += 1;
        }
    }
    ensure(hits >= 95, || format!("{hits}/100 seeds reached energy 50 (need >= 95)"))?;
    Ok(format!("{hits}/100 seeds reached feasible energy 50 (need >= 95)"))
}

fn c6_energy_ordering() -> Outcome {
    let (mut le_icm, mut le_wta) = (0, 0);
    let mut losses = Vec::new();
    for inst in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
        let k = 2 + (inst % 3) as u32;
        let range = DisparityRange::new(0, k - 1).map_err(|e| e.to_string())?;
        let p = fixtures::random_scene(&mut rng, 16, 16, range, int(20), 8);
        let alpha = local_alpha_bound(&p).floor() + int(1);
        let q = build_qubo(&p, alpha, PenaltyCheck::Unchecked).map_err(|e| e.to_string())?;
        let w = wta(&p).map_err(|e| e.to_string())?;
        let init = w.labeling.clone().ok_or("wta gave no labeling")?;
        let i = icm(&p, &init).map_err(|e| e.to_string())?;
        let sched = AnnealSchedule::default_for(&q, inst).map_err(|e| e.to_string())?;
        let s = simulated_anneal(&q, &sched).map_err(|e| e.to_string())?;
        if s.feasible && s.energy <= i.energy {
            le_icm += 1;
        }
        if s.feasible && s.energy <= w.energy {
            le_wta += 1;
        } else {
            losses.push(inst);
        }
    }
    let msg = format!("SA <= ICM on {le_icm}/50 (need >= 45), SA <= WTA on {le_wta}/50 (need 50)");
    ensure(le_icm >= 45 && le_wta == 50, || format!("{msg}; WTA losses at {losses:?}"))?;
    Ok(msg)
}

fn c7_metrics() -> Outcome {
    let m = |v: &[i64]| DispMatrix::new(v.len(), 1, v.to_vec()).expect("nonempty");
    let id = DispMatrix::new(3, 2, vec![0, 4, 9, 2, 2, 7]).expect("dims");
    let e = |r: Result<f64, _>| r.map_err(|e: stereo_qubo::metrics::MetricsError| e.to_string());
    ensure(e(rms(&id, &id))? == 0.0, || "rms identity".into())?;
    ensure(e(bad_beta(&id, &id, 0.5))? == 0.0 && e(bad_beta(&id, &id, 1.0))? == 0.0, || "bad identity".into())?;
    let r = e(rms(&m(&[0, 0]), &m(&[0, 2])))?;
    let b05 = e(bad_beta(&m(&[0, 1, 2]), &m(&[0, 0, 0]), 0.5))?;
    let b10 = e(bad_beta(&m(&[0, 1, 2]), &m(&[0, 0, 0]), 1.0))?;
    ensure((r - 2f64.sqrt()).abs() <= 0.01, || format!("rms {r}"))?;
    ensure((b05 - 66.67).abs() <= 0.01, || format!("bad-0.5 {b05}"))?;
    ensure((b10 - 33.33).abs() <= 0.01, || format!("bad-1.0 {b10}"))?;
    Ok(format!("identity 0/0/0; rms {r:.4}, bad-0.5 {b05:.2}, bad-1.0 {b10:.2} (tol 0.01)"))
}

fn c8_complexity() -> Outcome {
    let c1 = qubit_counts(ComplexityInputs { n: 1, m: 1, k: 1 });
    let c2 = qubit_counts(ComplexityInputs { n: 2, m: 2, k: 2 });
    // 7nmk + 9nm - 2nk - 2mk - 2n - 2m + 2, nmk + nm + 2, nmk + k^2, nmk
    ensure(c1 == QubitCounts { cruz: 10, heidari2021: 4, heidari2022: 2, ours: 1 }, || format!("{c1:?}"))?;
    ensure(c2 == QubitCounts { cruz: 70, heidari2021: 14, heidari2022: 12, ours: 8 }, || format!("{c2:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3a8);
    let mut models = 0;
    for _ in 0..40 {
        let d_max = rng.random_range(0..=3u32);
        let d_min = rng.random_range(0..=d_max);
        let k = u64::from(d_max - d_min + 1);
        let m = rng.random_range(d_max as u64 + 1..=12);
        let n = rng.random_range(1..=6u64);
        let range = DisparityRange::new(d_min, d_max).map_err(|e| e.to_string())?;
        let p = fixtures::random_problem(&mut rng, m as usize, n as usize, range, int(3));
        let q = build_qubo(&p, default_alpha(&p), PenaltyCheck::Strict).map_err(|e| e.to_string())?;
        // the domain is n rows by the m - d_max columns that have a match
        let ours = qubit_counts(ComplexityInputs { n, m: m - u64::from(d_max), k }).ours;
        ensure(ours == q.num_vars() as u128, || format!("{n}x{m} k={k}: {ours} vs {}", q.num_vars()))?;
        models += 1;
    }
    Ok(format!("(1,1,1) and (2,2,2) rows exact; ours == num_vars on {models} built models"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_stereo-qubo"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3a9);
    let p = fixtures::random_scene(&mut rng, 16, 12, DisparityRange::new(0, 3).map_err(|e| e.to_string())?, int(20), 8);
    let save = |name: &str, img: &GrayImage| std::fs::write(d.join(name), write_pgm(img, true));
    save("left.pgm", p.left()).map_err(|e| e.to_string())?;
    save("right.pgm", p.right()).map_err(|e| e.to_string())?;

    let configs: [&[&str]; 2] = [
        &["--preset", "supplementary", "--seed", "7"],
        &["--left", "left.pgm", "--right", "right.pgm", "--d-max", "3", "--alpha", "local", "--seed", "11", "--repair"],
    ];
    for (c, cfg) in configs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let (disp, rep) = (format!("d{c}_{run}.pgm"), format!("r{c}_{run}.json"));
            let mut args = vec!["solve", "--solver", "sa", "--disparity", &disp, "--report", &rep];
            args.extend_from_slice(cfg);
            run_cli(d, &args)?;
            let read = |f: &str| std::fs::read(d.join(f)).map_err(|e| e.to_string());
            outputs.push((read(&disp)?, read(&rep)?));
        }
        ensure(outputs[0] == outputs[1], || format!("config {c}: outputs differ between runs"))?;
    }
    Ok("two configs, each run twice: disparity PGM and report byte-identical".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "golden QUBO reproduction", budget: Duration::from_secs(1), run: c1_golden_qubo },
        Criterion { id: 2, name: "golden optimum", budget: Duration::from_secs(1), run: c2_golden_optimum },
        Criterion { id: 3, name: "lemma 1 suite", budget: Duration::from_secs(30), run: c3_lemma1 },
        Criterion { id: 4, name: "lemma 2 / theorem 1 suite", budget: Duration::from_secs(60), run: c4_lemma2_theorem1 },
        Criterion { id: 5, name: "SA efficacy", budget: Duration::from_secs(10), run: c5_sa_efficacy },
        Criterion { id: 6, name: "desk-scale energy ordering", budget: Duration::from_secs(300), run: c6_energy_ordering },
        Criterion { id: 7, name: "metrics", budget: Duration::from_secs(1), run: c7_metrics },
        Criterion { id: 8, name: "complexity formulas", budget: Duration::from_secs(1), run: c8_complexity },
        Criterion { id: 9, name: "determinism", budget: Duration::from_secs(60), run: c9_determinism },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let t = Instant::now();
        let outcome = (c.run)();
        let took = t.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the time budget")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {} | {} | {:.2}s (budget {}s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
