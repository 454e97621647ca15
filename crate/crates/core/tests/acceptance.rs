//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gasketdim::boxdim::{
    box_count_series, cell_oscillations, estimate_dimension, fif_bounds, harmonic_bounds,
    holder_estimate, BoxCountSeries, CountMethod, LOG2_3,
};
use gasketdim::energy::{energy_series, renormalized_energy};
use gasketdim::fif::{
    build_fif, check_energy_condition, energy_cap, rb_refine, AlphaSpec, FunctionProvider,
    OperatorSpec,
};
use gasketdim::gasket::{apply_map, LatticeVertex, Symbol, Word};
use gasketdim::harmonic::{harmonic_extend, BoundaryValues, HarmonicSpec};
use gasketdim::oracle::{exhaustive_pair_check, HarmonicSolver};
use gasketdim::VertexFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, outcome: Outcome) -> Outcome {
    let secs = elapsed.as_secs_f64();
    match outcome {
        Ok(d) if secs < limit_s => Ok(d),
        Ok(d) => Err(format!("{d}; took {secs:.1} s, limit {limit_s} s")),
        Err(d) => Err(d),
    }
}

fn random_boundary(rng: &mut ChaCha8Rng) -> BoundaryValues {
    let mut draw = || rng.gen_range(-1.0..=1.0);
    BoundaryValues::new(draw(), draw(), draw()).unwrap()
}

fn harmonic(b: BoundaryValues, m: u32) -> VertexFunction {
    harmonic_extend(&HarmonicSpec::new(b), m).unwrap()
}

fn gasketdim(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gasketdim"))
        .args(args)
        .env_remove("GASKETDIM_LEVEL_CAP")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let parse = |kind: &str| -> Result<(f64, f64), String> {
        let out = gasketdim(&["bounds", "--kind", kind])?;
        let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
        Ok((v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap()))
    };
    let (h_lo, h_hi) = parse("harmonic")?;
    let (e_lo, e_hi) = parse("energy")?;
    // agreement to 6 decimals; the quoted 2.216479 is truncated, not rounded
    let six = |x: f64, expected: f64| (x - expected).abs() < 1e-6;
    let ok =
        six(h_lo, 1.584963) && six(e_lo, 1.584963) && six(h_hi, 1.847997) && six(e_hi, 2.216479);
    let elapsed = start.elapsed();
    within(
        elapsed / 2,
        1.0,
        check(
            ok,
            format!("lower {h_lo:.7}, harmonic upper {h_hi:.7}, energy upper {e_hi:.7}"),
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u = harmonic(random_boundary(&mut rng), 12);
        let series = energy_series(&u, 12).map_err(|e| e.to_string())?;
        let first = series.entries[0].renormalized;
        for e in &series.entries {
            worst = worst.max((e.renormalized - first).abs() / first);
        }
    }
    within(
        start.elapsed(),
        30.0,
        check(
            worst <= 1e-9,
            format!("max relative drift {worst:.1e} over 100 triples, m <= 12"),
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let triples: Vec<BoundaryValues> = (0..50).map(|_| random_boundary(&mut rng)).collect();
    let mut worst = 0.0f64;
    for m in 0..=8 {
        let solver = HarmonicSolver::new(m).map_err(|e| e.to_string())?;
        for b in &triples {
            let solved = solver.solve(b).map_err(|e| e.to_string())?;
            worst = worst.max(harmonic(*b, m).sup_distance(&solved).unwrap());
        }
    }
    within(
        start.elapsed(),
        60.0,
        check(
            worst <= 1e-10,
            format!("max sup distance {worst:.1e}, 50 triples, m <= 8"),
        ),
    )
}

fn criterion_4() -> Outcome {
    let u = harmonic(BoundaryValues::new(1.0, 0.0, 0.0).unwrap(), 1);
    let at = |a, b| u.value_at(&LatticeVertex::new(1, a, b).unwrap()).unwrap();
    let (q12, q13, q23) = (at(1, 0), at(0, 1), at(1, 1));
    let energy = renormalized_energy(&u);
    let ok = (q12 - 0.4).abs() <= 1e-15
        && (q13 - 0.4).abs() <= 1e-15
        && (q23 - 0.2).abs() <= 1e-15
        && (energy - 2.0).abs() <= 1e-15;
    check(
        ok,
        format!("q12 = {q12}, q13 = {q13}, q23 = {q23}, level-1 energy {energy}"),
    )
}

/// Compatible seed/base pairs used by the FIF criteria.
fn fif_pair(kind: usize, rng: &mut ChaCha8Rng) -> (FunctionProvider, FunctionProvider) {
    let f: FunctionProvider = match kind % 5 {
        0 => FunctionProvider::CoordinateX,
        1 => FunctionProvider::CoordinateY,
        2 => "coordinate_x + coordinate_y".parse().unwrap(),
        3 => FunctionProvider::Harmonic(random_boundary(rng)),
        _ => "coordinate_x - 0.5*coordinate_y".parse().unwrap(),
    };
    let b = if kind % 5 == 3 {
        // harmonic seeds are fixed points of their own interpolant
        let x = FunctionProvider::CoordinateX;
        let g = FunctionProvider::affine(
            vec![
                (1.0, f.clone()),
                (1.0, x.clone()),
                (-1.0, x.harmonic_interpolant().unwrap()),
            ],
            0.0,
        );
        OperatorSpec::scaled_blend(0.5, g, 1.0).apply(&f).unwrap()
    } else {
        f.harmonic_interpolant().unwrap()
    };
    (f, b)
}

fn random_alpha(n: u32, max: f64, rng: &mut ChaCha8Rng) -> AlphaSpec {
    AlphaSpec::new(
        n,
        (0..3usize.pow(n))
            .map(|_| rng.gen_range(-max..max))
            .collect(),
    )
    .unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inputs = Vec::new();
    for _ in 0..10 {
        inputs.push((
            "harmonic".to_string(),
            harmonic(random_boundary(&mut rng), 8),
        ));
    }
    for i in 0..10 {
        let n = 1 + (i % 2) as u32;
        let (f, b) = fif_pair(i, &mut rng);
        let threshold = check_energy_condition(&AlphaSpec::uniform(n, 0.0).unwrap()).threshold;
        let alpha = random_alpha(n, threshold, &mut rng);
        if !check_energy_condition(&alpha).holds {
            return Err(format!(
                "generated α violates the energy condition: {alpha:?}"
            ));
        }
        let inst = build_fif(&f, &b, &alpha, 8).map_err(|e| e.to_string())?;
        inputs.push((format!("fif n={n} f={f}"), inst.values));
    }
    let mut worst = (0.0f64, String::new());
    for (name, u) in &inputs {
        let root = renormalized_energy(u).sqrt();
        let report = exhaustive_pair_check(u, |m| 0.6f64.powf(m as f64 / 2.0) * root)
            .map_err(|e| e.to_string())?;
        if report.worst_ratio > worst.0 {
            worst = (report.worst_ratio, name.clone());
        }
    }
    check(
        worst.0 <= 1.0,
        format!(
            "worst ratio {:.4} ({}), 10 harmonic + 10 FIF inputs, M = 8",
            worst.0, worst.1
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let b = random_boundary(&mut rng);
        let u = harmonic(b, 12);
        let global = b.max() - b.min();
        for m in 0..=10 {
            let table = cell_oscillations(&u, m).map_err(|e| e.to_string())?;
            let bound = 0.6f64.powi(m as i32) * global;
            worst = worst.max(table.max_oscillation() / bound);
        }
    }
    check(
        worst <= 1.0 + 1e-12,
        format!(
            "max oscillation / ((3/5)^m osc) = {worst:.6}, 50 triples, m <= 10 sampled at level 12"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut interp = 0.0f64;
    let mut fixed = 0.0f64;
    for i in 0..20 {
        let n = 1 + (i % 2) as u32;
        let (f, b) = fif_pair(i, &mut rng);
        let alpha = random_alpha(n, 0.99, &mut rng);
        let level = 3 * n;
        let inst = build_fif(&f, &b, &alpha, level).map_err(|e| e.to_string())?;
        for w in Word::all(n as usize) {
            for s in Symbol::ALL {
                let q = apply_map(&w, &LatticeVertex::corner(0, s)).unwrap();
                let got = inst.values.value_at(&q).unwrap();
                interp = interp.max((got - f.evaluate(&q).unwrap()).abs());
            }
        }
        let again = rb_refine(&inst.values.restrict(level - n).unwrap(), &f, &b, &alpha)
            .map_err(|e| e.to_string())?;
        fixed = fixed.max(again.sup_distance(&inst.values).unwrap());
    }
    let example = build_fif(
        &FunctionProvider::CoordinateX,
        &FunctionProvider::harmonic(0.0, 1.0, 0.5).unwrap(),
        &AlphaSpec::uniform(1, 0.2).unwrap(),
        2,
    )
    .map_err(|e| e.to_string())?;
    let q113 = example
        .values
        .value_at(&LatticeVertex::new(2, 0, 1).unwrap())
        .unwrap();
    check(
        interp <= 1e-12 && fixed <= 1e-12 && (q113 - 0.095).abs() <= 1e-12,
        format!(
            "interpolation error {interp:.1e}, re-refinement error {fixed:.1e}, f^α(q113) = {q113}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 1 + (i % 2) as u32;
        let (f, b) = fif_pair(i, &mut rng);
        let threshold = check_energy_condition(&AlphaSpec::uniform(n, 0.0).unwrap()).threshold;
        let alpha = random_alpha(n, 0.9 * threshold, &mut rng);
        let inst = build_fif(&f, &b, &alpha, 10).map_err(|e| e.to_string())?;
        let ef = renormalized_energy(&f.sample(10).unwrap());
        let eb = renormalized_energy(&b.sample(10).unwrap());
        let cap = energy_cap(&alpha, ef, eb / ef).map_err(|e| e.to_string())?;
        let series = energy_series(&inst, 10).map_err(|e| e.to_string())?;
        for e in &series.entries {
            worst = worst.max(e.renormalized / cap);
        }
    }
    check(
        worst <= 1.0,
        format!("max energy / cap = {worst:.4}, 20 configurations, m <= 10"),
    )
}

fn slope(u: &VertexFunction, method: CountMethod) -> f64 {
    let series = box_count_series(u, 4, 10, 4, method).unwrap();
    estimate_dimension(&series, 4, 10).unwrap().slope
}

fn criterion_9() -> Outcome {
    let constant = VertexFunction::constant(14, 0.25).unwrap();
    let s_const = slope(&constant, CountMethod::Column);
    let synthetic = |base: u64| {
        let series = BoxCountSeries {
            entries: (0..=12u32).map(|k| (k, base.pow(k))).collect(),
            method: CountMethod::Column,
        };
        estimate_dimension(&series, 4, 10).unwrap().slope
    };
    let (s3, s4) = (synthetic(3), synthetic(4));
    check(
        (s_const - 1.585).abs() <= 0.05 && (s3 - LOG2_3).abs() <= 1e-9 && (s4 - 2.0).abs() <= 1e-9,
        format!("constant {s_const:.6}, 3^k {s3:.12}, 4^k {s4:.12}"),
    )
}

/// Rescales to values in `[0, 1]` with unit oscillation.
fn normalized(u: &VertexFunction) -> VertexFunction {
    let (lo, hi) = (u.min(), u.max());
    u.shifted(-lo).scaled(1.0 / (hi - lo))
}

struct Estimate {
    name: String,
    column: f64,
    grid: f64,
    lower: f64,
    upper: f64,
    tolerance: f64,
}

fn bound_membership_inputs() -> Vec<Estimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut out = Vec::new();
    let (lower, upper) = harmonic_bounds();
    while out.len() < 20 {
        let b = random_boundary(&mut rng);
        if b.max() - b.min() < 1e-3 {
            continue;
        }
        let u = normalized(&harmonic(b, 14));
        out.push(Estimate {
            name: format!("harmonic {:?}", b.as_array()),
            column: slope(&u, CountMethod::Column),
            grid: slope(&u, CountMethod::Grid),
            lower,
            upper,
            tolerance: 0.03,
        });
    }
    let maxima = [0.3, 0.6, 0.95];
    for i in 0..20 {
        let n = 1 + (i % 2) as u32;
        let (f, b) = fif_pair(i, &mut rng);
        let alpha = random_alpha(n, maxima[i % 3], &mut rng);
        let inst = build_fif(&f, &b, &alpha, 14).unwrap();
        let u = normalized(&inst.values);
        let eta = |p: &FunctionProvider| {
            holder_estimate(&p.sample(12).unwrap())
                .unwrap()
                .for_bounds()
        };
        let bounds = fif_bounds(alpha.psi(), eta(&f).min(eta(&b))).unwrap();
        out.push(Estimate {
            name: format!("fif n={n} f={f} ψ={:.3}", alpha.psi()),
            column: slope(&u, CountMethod::Column),
            grid: slope(&u, CountMethod::Grid),
            lower: bounds.lower,
            upper: bounds.upper,
            tolerance: 0.05,
        });
    }
    out
}

fn criterion_10(estimates: &[Estimate], elapsed: Duration) -> Outcome {
    let outside: Vec<String> = estimates
        .iter()
        .filter(|e| e.column < e.lower - e.tolerance || e.column > e.upper + e.tolerance)
        .map(|e| {
            format!(
                "{} -> {:.4} not in [{:.4}, {:.4}]",
                e.name, e.column, e.lower, e.upper
            )
        })
        .collect();
    let (lo, hi) = estimates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.column), hi.max(e.column))
        });
    within(
        elapsed,
        600.0,
        check(
            outside.is_empty(),
            if outside.is_empty() {
                format!("20 harmonic + 20 FIF column estimates in bounds, range [{lo:.4}, {hi:.4}]")
            } else {
                outside.join("; ")
            },
        ),
    )
}

fn criterion_11(estimates: &[Estimate]) -> Outcome {
    let worst = estimates
        .iter()
        .max_by(|a, b| {
            (a.column - a.grid)
                .abs()
                .total_cmp(&(b.column - b.grid).abs())
        })
        .unwrap();
    let gap = (worst.column - worst.grid).abs();
    check(
        gap <= 0.05,
        format!("max |column - grid| = {gap:.4} ({})", worst.name),
    )
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run_all = |threads: &str| -> Result<Vec<Vec<u8>>, String> {
        let (fif, harm, report) = (path("fif.csv"), path("h.csv"), path("report.json"));
        let mut outputs = vec![
            gasketdim(&["gasket", "--threads", threads, "--level", "5"])?,
            gasketdim(&["bounds", "--kind", "energy"])?,
            gasketdim(&[
                "harmonic",
                "--threads",
                threads,
                "--seed",
                "9",
                "--boundary",
                "random",
                "--level",
                "8",
                "--out",
                &harm,
            ])?,
            gasketdim(&[
                "energy",
                "--threads",
                threads,
                "--input",
                &harm,
                "--levels",
                "0..8",
            ])?,
            gasketdim(&[
                "fif",
                "--threads",
                threads,
                "--seed",
                "4",
                "--n",
                "2",
                "--alpha",
                "random:0.6",
                "--f",
                "coordinate_x + coordinate_y",
                "--b",
                "harmonic",
                "--level",
                "10",
                "--out",
                &fif,
            ])?,
            gasketdim(&[
                "fif",
                "--threads",
                threads,
                "--n",
                "1",
                "--alpha",
                "0.2",
                "--f",
                "coordinate_x",
                "--b",
                "harmonic",
                "--level",
                "8",
                "--energy-series",
            ])?,
        ];
        outputs.push(std::fs::read(&harm).map_err(|e| e.to_string())?);
        outputs.push(std::fs::read(&fif).map_err(|e| e.to_string())?);
        for method in ["column", "grid"] {
            outputs.push(gasketdim(&[
                "boxdim",
                "--threads",
                threads,
                "--input",
                &fif,
                "--kmin",
                "3",
                "--kmax",
                "7",
                "--method",
                method,
                "--oversample",
                "3",
                "--report",
                &report,
                "--kind",
                "fif",
            ])?);
            outputs.push(std::fs::read(&report).map_err(|e| e.to_string())?);
        }
        Ok(outputs)
    };
    let first = run_all("1")?;
    let bytes: usize = first.iter().map(Vec::len).sum();
    let same = [run_all("1")?, run_all("4")?, run_all("4")?]
        .iter()
        .all(|other| other == &first);
    check(
        same,
        format!(
            "{} outputs ({bytes} bytes) identical across 4 runs with 1 and 4 threads",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |number: u32, title: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {number:>2}: {status}  {title}: {detail} [{secs:.1} s]");
    };

    let t = Instant::now();
    report(1, "bound constants", t, criterion_1());
    let t = Instant::now();
    report(2, "harmonic energy invariance", t, criterion_2());
    let t = Instant::now();
    report(3, "rule vs linear solve", t, criterion_3());
    let t = Instant::now();
    report(4, "worked level-1 values", t, criterion_4());
    let t = Instant::now();
    report(5, "same-cell difference bound", t, criterion_5());
    let t = Instant::now();
    report(6, "oscillation contraction", t, criterion_6());
    let t = Instant::now();
    report(7, "FIF interpolation and fixed point", t, criterion_7());
    let t = Instant::now();
    report(8, "FIF finite-level energy cap", t, criterion_8());
    let t = Instant::now();
    report(9, "estimator calibration", t, criterion_9());
    let t = Instant::now();
    let estimates = bound_membership_inputs();
    report(
        10,
        "bound membership",
        t,
        criterion_10(&estimates, t.elapsed()),
    );
    let t = Instant::now();
    report(11, "column vs grid", t, criterion_11(&estimates));
    let t = Instant::now();
    report(12, "determinism", t, criterion_12());

    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
