//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails. The heavy reproduction targets run only
//! with `--ignored` or `--include-ignored`.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twobody_qsl::bounds::{
    ghz_two_body_time, k3_spectrum, mt_bound, sequential_ghz_time, symmetric3_spectrum,
    two_eigenvalue_hxx,
};
use twobody_qsl::dynamics::{
    count_distinct, eigendecompose, energy_stddev, evolve, hermitian_eigenvalues,
    normalize_bandwidth,
};
use twobody_qsl::operators::{
    three_body_hamiltonian, HamiltonianModel, InteractionGraph, SymmetryClass,
};
use twobody_qsl::optimizer::{
    maximize_at_time, minimal_time, sweep, threshold_time, FidelityCurve, OptimizeConfig,
    TimeGrid,
};
use twobody_qsl::reference::{catalog, reference_hamiltonian, verify_entry, ClaimPrecision, GraphKind, StateFamily};
use twobody_qsl::states::{zero_state, TargetState};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn reference_verification() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_exact: f64 = 1.0;
    let mut worst_approx: f64 = 1.0;
    let entries = catalog();
    for entry in &entries {
        let r = verify_entry(entry).map_err(|e| e.to_string())?;
        let needed = match entry.precision {
            ClaimPrecision::Exact => {
                worst_exact = worst_exact.min(r.best_fidelity);
                1.0 - 1e-6
            }
            ClaimPrecision::Approximate => {
                worst_approx = worst_approx.min(r.best_fidelity);
                if (r.best_time - entry.claimed_time).abs() > 0.05 + 1e-12 {
                    failures.push(format!("{} maximum outside window", r.label));
                }
                1.0 - 1e-4
            }
        };
        if r.best_fidelity < needed {
            failures.push(format!("{} F={:.9}", r.label, r.best_fidelity));
        }
    }
    check(
        failures.is_empty() && entries.len() == 11,
        format!(
            "{} entries, worst exact F={worst_exact:.10}, worst approximate F={worst_approx:.10} {}",
            entries.len(),
            failures.join("; ")
        ),
    )
}

fn analytic_spectra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_sym: f64 = 0.0;
    for _ in 0..500 {
        let mut h = Matrix3::zeros();
        for r in 0..3 {
            for c in r..3 {
                let v = rng.gen_range(-1.0..1.0);
                h[(r, c)] = v;
                h[(c, r)] = v;
            }
        }
        let numeric = k3_spectrum(&h, &Vector3::zeros()).map_err(|e| e.to_string())?;
        worst_sym = worst_sym.max(multiset_distance(&numeric, &symmetric3_spectrum(&h)));
    }

    let mut two_level = 0;
    let mut tried = 0;
    while tried < 500 {
        let (h_yy, h_zz): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (h_yy + h_zz).abs() < 0.05 {
            continue;
        }
        tried += 1;
        let (h_xy, h_yz, h_xz) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let (h_xx, _) = two_eigenvalue_hxx(h_yy, h_zz, h_xy, h_yz, h_xz).map_err(|e| e.to_string())?;
        let h = Matrix3::new(h_xx, h_xy, h_xz, h_xy, h_yy, h_yz, h_xz, h_yz, h_zz);
        let numeric = k3_spectrum(&h, &Vector3::zeros()).map_err(|e| e.to_string())?;
        if count_distinct(&numeric, 1e-9) == 2 {
            two_level += 1;
        }
    }

    let mut worst_three: f64 = 0.0;
    for _ in 0..100 {
        let h: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        let values = hermitian_eigenvalues(three_body_hamiltonian(h).matrix()).map_err(|e| e.to_string())?;
        let expected: Vec<f64> = (0..8).map(|k| if k < 4 { -norm } else { norm }).collect();
        worst_three = worst_three.max(multiset_distance(&values, &expected));
    }
    check(
        worst_sym <= 1e-9 && two_level == 500 && worst_three <= 1e-10,
        format!(
            "closed form max dev {worst_sym:.2e}, two-level {two_level}/500, three-body max dev {worst_three:.2e}"
        ),
    )
}

fn energy_spread_claims() -> Outcome {
    let zero = zero_state(3).map_err(|e| e.to_string())?;
    let spread = |family| -> Result<(f64, usize), String> {
        let entry = reference_hamiltonian(family, 3, GraphKind::Complete).map_err(|e| e.to_string())?;
        let h = normalize_bandwidth(&entry.hamiltonian).map_err(|e| e.to_string())?;
        let levels = eigendecompose(&h).map_err(|e| e.to_string())?.distinct_levels(1e-8);
        Ok((energy_stddev(&h, &zero).map_err(|e| e.to_string())?, levels))
    };
    let (w_dh, _) = spread(StateFamily::W)?;
    let (g_dh, g_levels) = spread(StateFamily::Ghz)?;
    let w_ok = (w_dh - 0.5).abs() <= 1e-9;
    let g_ok = (g_dh - 0.125).abs() <= 1e-9;
    check(
        w_ok && g_ok && g_levels >= 5,
        format!(
            "W dH={w_dh:.12} (want 0.5), GHZ dH={g_dh:.12} (want 0.125), GHZ levels={g_levels} (want >= 5)"
        ),
    )
}

fn mandelstam_tamm_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d54);
    let mut worst_margin = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=4);
        let model = HamiltonianModel::new(
            InteractionGraph::complete(n).map_err(|e| e.to_string())?,
            SymmetryClass::Unconstrained,
        )
        .map_err(|e| e.to_string())?;
        let params: Vec<f64> = (0..model.parameter_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = normalize_bandwidth(&model.assemble_flat(&params).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let zero = zero_state(n).map_err(|e| e.to_string())?;
        let dh = energy_stddev(&h, &zero).map_err(|e| e.to_string())?;
        let t = rng.gen_range(0.0..20.0);
        let psi = evolve(&h, t, &zero).map_err(|e| e.to_string())?;
        let overlap = zero.inner(&psi).map_err(|e| e.to_string())?.norm().min(1.0);
        worst_margin = worst_margin.min(t * dh + 1e-8 - overlap.acos());
    }
    let ghz = mt_bound(std::f64::consts::FRAC_1_SQRT_2, 0.5).map_err(|e| e.to_string())?;
    let w = mt_bound(0.0, 0.5).map_err(|e| e.to_string())?;
    let ame = mt_bound(1.0 / 8f64.sqrt(), 0.5).map_err(|e| e.to_string())?;
    let table_ok = (ghz - PI / 2.0).abs() < 1e-12 && (w - PI).abs() < 1e-12 && (ame - 2.42).abs() <= 0.01;
    check(
        worst_margin >= 0.0 && table_ok,
        format!("min margin {worst_margin:.3e} over 1000 samples; GHZ {ghz:.6}, W {w:.6}, AME {ame:.6}"),
    )
}

fn k3_sweep(target: TargetState, end: f64) -> Result<FidelityCurve, String> {
    let mut cfg = OptimizeConfig::new(
        target,
        InteractionGraph::complete(3).map_err(|e| e.to_string())?,
        SymmetryClass::FullPermutation,
        TimeGrid::uniform(0.0, end, 0.1),
    );
    cfg.stop_at_unit_fidelity = true;
    sweep(&cfg).map_err(|e| e.to_string())
}

fn small_n_optimization() -> Outcome {
    let dt = 0.1;
    let w = k3_sweep(TargetState::W, 4.0)?;
    let w_t = threshold_time(&w, 1.0 - 1e-4);
    let w_ok = w_t.is_some_and(|t| (t - PI).abs() <= dt);

    let g = k3_sweep(TargetState::Ghz, 7.0)?;
    let g_t = minimal_time(&g, 1e-6);
    let g_ok = g_t.is_some_and(|t| (t - 2.0 * PI).abs() <= dt);

    let cfg = OptimizeConfig::new(
        TargetState::Ghz,
        InteractionGraph::complete(3).map_err(|e| e.to_string())?,
        SymmetryClass::FullPermutation,
        TimeGrid::uniform(PI, PI, 0.1),
    );
    let at_pi = maximize_at_time(PI, &cfg).map_err(|e| e.to_string())?.fidelity;
    check(
        w_ok && g_ok && at_pi < 0.999,
        format!("W t_min={w_t:?}, GHZ t_min={g_t:?}, GHZ F(pi)={at_pi:.6}"),
    )
}

fn pairing_law() -> Outcome {
    let expected = [2.0 * PI, 2.0 * PI, 4.5 * PI, 4.5 * PI, 8.0 * PI];
    let mut ok = true;
    for (n, e) in (3..=7).zip(expected) {
        let t = ghz_two_body_time(n).map_err(|e| e.to_string())?;
        ok &= t == e && t <= sequential_ghz_time(n).map_err(|e| e.to_string())?;
    }
    let pairs = |a, b| ghz_two_body_time(a).ok() == ghz_two_body_time(b).ok();
    ok &= pairs(3, 4) && pairs(5, 6) && !pairs(4, 5);
    check(ok, "N=3..7 -> 2pi, 2pi, 9pi/2, 9pi/2, 8pi".into())
}

fn symmetric_ame_ceiling() -> Outcome {
    let mut cfg = OptimizeConfig::new(
        TargetState::Ame52,
        InteractionGraph::complete(5).map_err(|e| e.to_string())?,
        SymmetryClass::FullPermutation,
        TimeGrid::uniform(0.0, 30.0, 0.1),
    );
    cfg.restarts = 20;
    cfg.refine_threshold = None;
    let curve = sweep(&cfg).map_err(|e| e.to_string())?;
    let best = curve.max_fidelity().ok_or("empty curve")?;
    check(
        best.fidelity <= 0.15,
        format!("max F={:.6} at t={:.2} over {} points (ceiling 0.15)", best.fidelity, best.time, curve.points.len()),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("twobody-qsl-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let config = dir.join("run.toml");
    fs::write(
        &config,
        "[target]\nstate = \"ghz\"\nsites = 3\n\n[time]\nsegments = [{ start = 1.0, end = 1.5, step = 0.1 }]\n\n[optimizer]\nrestarts = 16\nseed = 2024\n",
    )
    .map_err(|e| e.to_string())?;
    let mut tables = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_twobody-qsl"))
            .args(["--threads", threads, "sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("sweep exited with {status}"));
        }
        tables.push(fs::read(out.join("curve.tsv")).map_err(|e| e.to_string())?);
    }
    let _ = fs::remove_dir_all(&dir);
    check(
        tables[0] == tables[1] && !tables[0].is_empty(),
        format!("two seeded runs, {} bytes each", tables[0].len()),
    )
}

fn heavy_ame_reduced_symmetry() -> Outcome {
    let mut cfg = OptimizeConfig::new(
        TargetState::Ame52,
        InteractionGraph::complete(5).map_err(|e| e.to_string())?,
        SymmetryClass::PairSwapProduct(vec![(1, 3), (2, 4)]),
        TimeGrid::uniform(9.0, 11.5, 0.1),
    );
    cfg.restarts = 24;
    cfg.refine_threshold = None;
    cfg.stop_at_unit_fidelity = false;
    let curve = sweep(&cfg).map_err(|e| e.to_string())?;
    let t99 = threshold_time(&curve, 0.99);
    let diag: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.1}:{:.4}", p.time, p.fidelity))
        .collect();
    check(
        t99.is_some_and(|t| t <= 11.5),
        format!("t99={t99:?}; curve {}", diag.join(" ")),
    )
}

fn heavy_dicke() -> Outcome {
    let center = 7.5 * PI;
    let mut cfg = OptimizeConfig::new(
        TargetState::Dicke(2),
        InteractionGraph::complete(4).map_err(|e| e.to_string())?,
        SymmetryClass::FullPermutation,
        TimeGrid::uniform(0.0, center + 1.0, 0.1),
    );
    cfg.stop_at_unit_fidelity = true;
    cfg.epsilon = 1e-3;
    let curve = sweep(&cfg).map_err(|e| e.to_string())?;
    let t = threshold_time(&curve, 1.0 - 1e-3);
    let best = curve.max_fidelity().map(|p| (p.time, p.fidelity));
    check(
        t.is_some_and(|t| (t - center).abs() <= 1.0),
        format!("first F >= 1-1e-3 at {t:?} (target {center:.3} +- 1.0); best {best:?}"),
    )
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    heavy: bool,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let include_heavy = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let only_heavy = args.iter().any(|a| a == "--ignored");
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria = [
        Criterion { id: "1", name: "reference verification", heavy: false, run: reference_verification },
        Criterion { id: "2", name: "analytic spectra", heavy: false, run: analytic_spectra },
        Criterion { id: "3", name: "energy spread claims", heavy: false, run: energy_spread_claims },
        Criterion { id: "4", name: "Mandelstam-Tamm suite", heavy: false, run: mandelstam_tamm_suite },
        Criterion { id: "5", name: "small-N optimization", heavy: false, run: small_n_optimization },
        Criterion { id: "6", name: "GHZ pairing law", heavy: false, run: pairing_law },
        Criterion { id: "7", name: "symmetric AME ceiling", heavy: false, run: symmetric_ame_ceiling },
        Criterion { id: "8a", name: "AME reduced symmetry t99", heavy: true, run: heavy_ame_reduced_symmetry },
        Criterion { id: "8b", name: "Dicke D4^2 minimal time", heavy: true, run: heavy_dicke },
        Criterion { id: "9", name: "determinism", heavy: false, run: determinism },
    ];

    let mut failed = 0;
    for c in &criteria {
        if c.heavy && !include_heavy {
            println!("criterion {:<3} {:<28} SKIP (heavy; pass --ignored)", c.id, c.name);
            continue;
        }
        if !c.heavy && only_heavy {
            println!("criterion {:<3} {:<28} SKIP (--ignored runs heavy criteria only)", c.id, c.name);
            continue;
        }
        let clock = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:<3} {:<28} PASS [{secs:.1}s] {detail}", c.id, c.name),
            Err(detail) => {
                // heavy targets report but do not gate
                if c.heavy {
                    println!("criterion {:<3} {:<28} FAIL (not gating) [{secs:.1}s] {detail}", c.id, c.name);
                } else {
                    failed += 1;
                    println!("criterion {:<3} {:<28} FAIL [{secs:.1}s] {detail}", c.id, c.name);
                }
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
