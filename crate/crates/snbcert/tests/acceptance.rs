//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p snbcert --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use snbcert::formats::DecompositionFile;
use snbcert::parallel::sample_parallel;
use snbcert::sweep::{run_sweep, zero_crossings, Family, LambdaGrid, SweepConfig, SweepRow};
use snbcert_core::channels::{
    compose, dephasing, depolarizing, factor_through_k, random_channel_any_rank, random_cp_map, random_povm,
    KrausChannel,
};
use snbcert_core::circuit::{circuit_povm, prep_gates, run_circuit};
use snbcert_core::decomposition::game_inputs_from_decomposition;
use snbcert_core::game::{
    adversarial_payoff, certification_game, certify, correlation, exact_payoff, witness_decomposition,
    MeasurementModel, Mode,
};
use snbcert_core::random::seeded;
use snbcert_core::witnesses::{is_ppt, npt_witness_from_choi, optimal_sn_witness, witness_value};
use snbcert_core::{ComplexMatrix, QuantumMap, C64};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

/// Family name, family, k and the closed-form payoff in λ.
type ClosedForm = (&'static str, Family, usize, fn(f64) -> f64);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed > limit {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snbcert"))
}

/// Coefficients of W₂ over the unnormalized rank-one operators of the
/// qutrit basis kets, 1-based rows x and columns y.
const GAMMA_TABLE: [[f64; 9]; 9] = {
    const H: f64 = 0.5;
    const Q: f64 = 0.25;
    [
        [H, 1.0, 1.0, Q, Q, 0.0, -Q, -Q, 0.0],
        [1.0, H, 1.0, Q, 0.0, Q, -Q, 0.0, -Q],
        [1.0, 1.0, H, 0.0, Q, Q, 0.0, -Q, -Q],
        [Q, Q, 0.0, -Q, 0.0, 0.0, 0.0, 0.0, 0.0],
        [Q, 0.0, Q, 0.0, -Q, 0.0, 0.0, 0.0, 0.0],
        [0.0, Q, Q, 0.0, 0.0, -Q, 0.0, 0.0, 0.0],
        [-Q, -Q, 0.0, 0.0, 0.0, 0.0, Q, 0.0, 0.0],
        [-Q, 0.0, -Q, 0.0, 0.0, 0.0, 0.0, Q, 0.0],
        [0.0, -Q, -Q, 0.0, 0.0, 0.0, 0.0, 0.0, Q],
    ]
};

fn gamma_table() -> Outcome {
    let start = Instant::now();
    let out = bin()
        .args(["decompose", "--builtin", "w2opt-d3"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    let pd: DecompositionFile = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let g = &pd.gamma_kets;
    ensure!(g.len() == 9 && g.iter().all(|r| r.len() == 9), "gamma_kets is not 9x9");
    let mut worst = 0.0f64;
    for x in 0..9 {
        for y in 0..9 {
            worst = worst.max((g[x][y] - GAMMA_TABLE[x][y]).abs());
        }
    }
    ensure!(worst <= 1e-10, "max deviation {worst:e}");
    for ((x, y), v) in [((1, 1), 0.5), ((1, 2), 1.0), ((4, 4), -0.25), ((1, 7), -0.25), ((9, 9), 0.25)] {
        let got = g[x - 1][y - 1];
        ensure!((got - v).abs() <= 1e-10, "gamma_{x},{y} = {got}, want {v}");
    }
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("81 entries, max deviation {worst:.1e}, {elapsed:.2?}"))
}

/// `Σ_ij A_ij B_ji` computed entrywise.
fn direct_trace(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut t = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t.re
}

/// 9×9 operators built from index rules: `|Φ⟩⟨Φ|`, `I/9` and the
/// classically correlated `Σᵢ|ii⟩⟨ii|/3`.
fn qutrit_operators() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let mut phi = ComplexMatrix::zeros(9, 9);
    let mut flat = ComplexMatrix::zeros(9, 9);
    let mut diag = ComplexMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            phi[(4 * i, 4 * j)] = C64::new(1.0 / 3.0, 0.0);
        }
        diag[(4 * i, 4 * i)] = C64::new(1.0 / 3.0, 0.0);
    }
    for i in 0..9 {
        flat[(i, i)] = C64::new(1.0 / 9.0, 0.0);
    }
    (phi, flat, diag)
}

/// `I − (3/k)|Φ⟩⟨Φ|` built entrywise.
fn direct_witness(k: usize, phi: &ComplexMatrix) -> ComplexMatrix {
    let mut w = phi.scale_real(-3.0 / k as f64);
    for i in 0..9 {
        w[(i, i)] += C64::new(1.0, 0.0);
    }
    w
}

fn sweep(family: Family, k: usize) -> Result<(Vec<SweepRow>, Duration), String> {
    let cfg = SweepConfig {
        family,
        d: 3,
        k,
        grid: LambdaGrid::parse("0:1:0.01").map_err(|e| e.to_string())?,
        mode: Mode::Exact,
    };
    let start = Instant::now();
    let rows = run_sweep(&cfg).map_err(|e| e.to_string())?;
    Ok((rows, start.elapsed()))
}

fn thresholds() -> Outcome {
    let (phi, flat, diag) = qutrit_operators();
    // Numerical re-derivation of the closed forms before they are trusted.
    let depol = |k: usize, l: f64| {
        let w = direct_witness(k, &phi);
        (1.0 - l) * direct_trace(&w, &phi) + l * direct_trace(&w, &flat)
    };
    let dephase = |k: usize, l: f64| {
        let w = direct_witness(k, &phi);
        (1.0 - l) * direct_trace(&w, &phi) + l * direct_trace(&w, &diag)
    };
    let closed: [ClosedForm; 4] = [
        ("depolarizing", Family::Depolarizing, 2, |l| -(1.0 - l) / 2.0 + 5.0 * l / 6.0),
        ("depolarizing", Family::Depolarizing, 1, |l| -2.0 + 8.0 * l / 3.0),
        ("dephasing", Family::Dephasing, 2, |l| l - 0.5),
        ("dephasing", Family::Dephasing, 1, |l| 2.0 * l - 2.0),
    ];
    let mut notes = Vec::new();
    for (name, family, k, formula) in closed {
        let (rows, elapsed) = sweep(family, k)?;
        within(elapsed, Duration::from_secs(10))?;
        ensure!(rows.len() == 101, "{name} k={k}: {} rows", rows.len());
        for r in &rows {
            let direct = if name == "depolarizing" { depol(k, r.lambda) } else { dephase(k, r.lambda) };
            ensure!(
                (direct - formula(r.lambda)).abs() <= 1e-12,
                "{name} k={k} λ={}: direct trace {direct} vs closed form {}",
                r.lambda,
                formula(r.lambda)
            );
            ensure!(
                (r.result.exact_payoff - direct).abs() <= 1e-9,
                "{name} k={k} λ={}: payoff {} vs {direct}",
                r.lambda,
                r.result.exact_payoff
            );
        }
        if name == "dephasing" && k == 1 {
            let last = rows.last().unwrap();
            ensure!(
                rows.iter().filter(|r| r.lambda <= 0.99 + 1e-12).all(|r| r.result.exact_payoff < 0.0),
                "dephasing k=1 payoff not negative on λ <= 0.99"
            );
            ensure!(last.lambda == 1.0 && last.result.exact_payoff.abs() <= 1e-9, "dephasing k=1 payoff at λ=1 is {}", last.result.exact_payoff);
            notes.push(format!("dephasing k=1 <0 to 0.99, {:.1e} at 1", last.result.exact_payoff));
        } else {
            let want = match (name, k) {
                ("depolarizing", 2) => 0.375,
                ("depolarizing", 1) => 0.75,
                _ => 0.5,
            };
            let crossings = zero_crossings(&rows);
            ensure!(crossings.len() == 1, "{name} k={k}: crossings {crossings:?}");
            ensure!((crossings[0] - want).abs() <= 0.005, "{name} k={k}: crossing {} vs {want}", crossings[0]);
            notes.push(format!("{name} k={k} at {:.4}", crossings[0]));
        }
    }
    Ok(notes.join("; "))
}

fn circuit_equivalence() -> Outcome {
    let start = Instant::now();
    let p = snbcert_core::channels::max_entangled_projector(3).map_err(|e| e.to_string())?;
    let effect = &circuit_povm(3).map_err(|e| e.to_string())?[0];
    let dev = effect.max_abs_diff(&p);
    ensure!(dev <= 1e-12, "effect(0,0) deviates from the Bell projector by {dev:e}");
    let pd = witness_decomposition(3, 2).map_err(|e| e.to_string())?;
    let (psi, phi) = game_inputs_from_decomposition(&pd);
    let ga = prep_gates(&psi).map_err(|e| e.to_string())?;
    let gb = prep_gates(&phi).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let ch = random_channel_any_rank(&mut seeded(seed), 3, 3);
        for (x, sx) in psi.iter().enumerate() {
            for (y, sy) in phi.iter().enumerate() {
                let circ = run_circuit(&ch, x, y, &ga, &gb).map_err(|e| e.to_string())?;
                let abst = correlation(&ch, sx, sy, &MeasurementModel::Circuit).map_err(|e| e.to_string())?;
                ensure!(circ.len() == abst.len(), "outcome counts differ");
                for (o, q) in circ.iter().zip(&abst) {
                    worst = worst.max((o.probability - q).abs());
                }
            }
        }
    }
    ensure!(worst <= 1e-10, "max distribution deviation {worst:e}");
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("effect(0,0) dev {dev:.1e}, 50x81 max dev {worst:.1e}, {elapsed:.2?}"))
}

fn identity_payoff() -> Outcome {
    let spec = certification_game(3, 2, MeasurementModel::BellProjector).map_err(|e| e.to_string())?;
    let payoff = exact_payoff(&spec, &KrausChannel::identity(3)).map_err(|e| e.to_string())?;
    let (phi, _, _) = qutrit_operators();
    let oracle = direct_trace(&direct_witness(2, &phi), &phi);
    ensure!((oracle + 0.5).abs() <= 1e-12, "Tr[W P] = {oracle}");
    ensure!((payoff + 0.5).abs() <= 1e-9, "payoff {payoff}");
    Ok(format!("payoff {payoff:.12}"))
}

fn device_independence() -> Outcome {
    let start = Instant::now();
    let spec = certification_game(3, 2, MeasurementModel::BellProjector).map_err(|e| e.to_string())?;
    let channels: Vec<KrausChannel> = (0..20)
        .map(|s| factor_through_k(3, 2, 1000 + s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut min = f64::INFINITY;
    for p in 0..100 {
        let povm = random_povm(9, 2, 5000 + p).map_err(|e| e.to_string())?;
        for ch in &channels {
            min = min.min(adversarial_payoff(&spec, ch, &povm).map_err(|e| e.to_string())?);
        }
    }
    ensure!(min >= -1e-9, "minimum payoff {min:e}");
    for seed in 0..100u64 {
        for k in [1, 2] {
            let ch = factor_through_k(3, k, seed).map_err(|e| e.to_string())?;
            for mode in [Mode::Exact, Mode::Sampled { shots: 20_000, seed }] {
                let r = certify(&ch, k, 3, mode).map_err(|e| e.to_string())?;
                ensure!(!r.verdict.is_certified(), "seed {seed} k={k} {mode:?} certified: {r:?}");
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!("min payoff {min:.3e} over 2000 pairs, 0/400 certified, {elapsed:.2?}"))
}

fn cp_postprocessing() -> Outcome {
    let mut min = f64::INFINITY;
    for k in [1, 2] {
        let w = optimal_sn_witness(3, k).map_err(|e| e.to_string())?;
        for case in 0..50u64 {
            let seed = 77 * case + k as u64;
            let e = factor_through_k(3, k, seed).map_err(|e| e.to_string())?;
            let rank = 1 + (case as usize % 4);
            let f = random_cp_map(&mut seeded(seed ^ 0xabcdef), 3, 3, rank);
            let j = compose(&f, &e).map_err(|e| e.to_string())?.choi().normalized();
            min = min.min(witness_value(&w, &j).map_err(|e| e.to_string())?);
        }
    }
    ensure!(min >= -1e-9, "minimum witness value {min:e}");
    Ok(format!("min witness value {min:.3e} over 100 cases"))
}

fn npt_extension() -> Outcome {
    let mut threshold = None;
    let mut prev_ppt = false;
    for step in 0..=1000 {
        let lambda = step as f64 / 1000.0;
        let j = depolarizing(3, lambda).map_err(|e| e.to_string())?.choi();
        let (ppt, min) = is_ppt(&j).map_err(|e| e.to_string())?;
        let oracle = lambda / 9.0 - (1.0 - lambda) / 3.0;
        ensure!((min - oracle.min(lambda / 9.0)).abs() <= 1e-9, "λ={lambda}: PT eigenvalue {min} vs {oracle}");
        if ppt && !prev_ppt {
            ensure!(threshold.is_none(), "PPT region is not an interval");
            threshold = Some(lambda);
        }
        prev_ppt = ppt;
        let npt = npt_witness_from_choi(&j);
        if lambda < 0.74 {
            let w = npt.map_err(|e| format!("λ={lambda}: {e}"))?;
            let v = witness_value(&w, &j).map_err(|e| e.to_string())?;
            ensure!(v < 0.0, "λ={lambda}: NPT witness value {v}");
        } else if lambda > 0.76 {
            ensure!(npt.is_err(), "λ={lambda}: witness built for a PPT input");
        }
    }
    let t = threshold.ok_or("no PPT region found")?;
    ensure!((t - 0.75).abs() <= 0.005, "PPT threshold {t}");
    Ok(format!("PPT from λ = {t}"))
}

fn monte_carlo() -> Outcome {
    let configs: [(&str, f64, usize); 10] = [
        ("depolarizing", 0.0, 2),
        ("depolarizing", 0.2, 2),
        ("depolarizing", 0.375, 2),
        ("depolarizing", 0.6, 2),
        ("depolarizing", 0.5, 1),
        ("depolarizing", 1.0, 1),
        ("dephasing", 0.1, 2),
        ("dephasing", 0.5, 2),
        ("dephasing", 0.9, 1),
        ("dephasing", 0.3, 1),
    ];
    let mut worst = 0.0f64;
    for (i, (name, lambda, k)) in configs.into_iter().enumerate() {
        let ch = if name == "depolarizing" { depolarizing(3, lambda) } else { dephasing(3, lambda) }
            .map_err(|e| e.to_string())?;
        let spec = certification_game(3, k, MeasurementModel::BellProjector).map_err(|e| e.to_string())?;
        let (r, _) = sample_parallel(&spec, &ch, 1_000_000, 4242 + i as u64, false).map_err(|e| e.to_string())?;
        let (est, se) = (r.estimate.unwrap(), r.stderr.unwrap());
        let z = (est - r.exact_payoff).abs() / se;
        ensure!(z <= 5.0, "{name} λ={lambda} k={k}: estimate {est} exact {} stderr {se}", r.exact_payoff);
        worst = worst.max(z);
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut logs = Vec::new();
    for (threads, name) in [("1", "a.jsonl"), ("4", "b.jsonl")] {
        let path = dir.path().join(name);
        let out = bin()
            .env("SNBCERT_THREADS", threads)
            .args(["simulate", "--family", "depolarizing", "--lambda", "0.3", "--shots", "1000000", "--seed", "99"])
            .arg("--log")
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "simulate failed: {}", String::from_utf8_lossy(&out.stderr));
        logs.push((out.stdout, std::fs::read(&path).map_err(|e| e.to_string())?));
    }
    ensure!(logs[0] == logs[1], "logs differ between runs with the same seed");
    Ok(format!(
        "max |est-exact|/stderr {worst:.2} over 10 configs; {} byte logs identical",
        logs[0].1.len()
    ))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("gamma table", gamma_table),
        ("sweep thresholds", thresholds),
        ("circuit-POVM equivalence", circuit_equivalence),
        ("identity channel payoff", identity_payoff),
        ("measurement-device independence", device_independence),
        ("CP post-processing", cp_postprocessing),
        ("NPT extension", npt_extension),
        ("Monte-Carlo consistency", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}; {elapsed:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
