//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::qp_oracle::{enumerate, random_bounded_qp, random_infeasible_qp};
use common::series::phi_psi;
use common::sparse::{random_vehicle_horizon, sparse_problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sca_core::disturbance::{estimate_delta, estimate_delta_for, DeltaReport, GridSpec, LinearSurrogate};
use sca_core::qp::{check_certificate, solve, QpOutcome, QpSettings};
use sca_core::scenario::{run_sweep, DetectionError, PpcPathMode, Scenario, ScenarioConfig};
use sca_core::supervisor::condense_horizon;
use sca_core::vehicle::{build_continuous_model, discretize_exact, zoh_blocks, ActuatorLimits, VehicleParams};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn qp_soundness() -> Verdict {
    let start = Instant::now();
    let settings = QpSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut matched = 0;
    let total = 1000;
    for _ in 0..total {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=6);
        let (problem, _) = random_bounded_qp(&mut rng, n, m);
        let Some(oracle) = enumerate(&problem) else { continue };
        let outcome = solve(&problem, &settings);
        if let QpOutcome::Feasible(sol) = &outcome {
            let close = (sol.objective - oracle.objective).abs() <= 1e-6 * (1.0 + oracle.objective.abs());
            if close && check_certificate(&problem, &outcome) {
                matched += 1;
            }
        }
    }
    let mut certified = 0;
    let infeasible_total = 200;
    for _ in 0..infeasible_total {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(2..=6);
        let problem = random_infeasible_qp(&mut rng, n, m);
        let outcome = solve(&problem, &settings);
        if matches!(outcome, QpOutcome::Infeasible(_)) && check_certificate(&problem, &outcome) {
            certified += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        matched == total && certified == infeasible_total && elapsed <= Duration::from_secs(60),
        format!("{matched}/{total} optima match, {certified}/{infeasible_total} certificates verify, {elapsed:.2?}"),
    )
}

fn discretization() -> Verdict {
    let m = build_continuous_model(&VehicleParams::passenger_car()).unwrap();
    let d = discretize_exact(&m, 0.1).unwrap();
    let a = DMatrix::from_column_slice(8, 8, m.a_mat.as_slice());
    let b = DMatrix::from_column_slice(8, 2, m.b_mat.as_slice());
    let e = DMatrix::from_column_slice(8, 2, m.e_mat.as_slice());
    let (phi, psi) = phi_psi(&a, 0.1);
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let car = diff(d.a_mat.as_slice(), phi.as_slice())
        .max(diff(d.b_mat.as_slice(), (&psi * b).as_slice()))
        .max(diff(d.e_mat.as_slice(), (&psi * e).as_slice()));
    let (sphi, sgam) = zoh_blocks(&DMatrix::from_element(1, 1, -1.0), &[&DMatrix::from_element(1, 1, 1.0)], 0.1).unwrap();
    let scalar = (sphi[(0, 0)] - (-0.1f64).exp()).abs().max((sgam[0][(0, 0)] - (1.0 - (-0.1f64).exp())).abs());
    verdict(car <= 1e-9 && scalar <= 1e-12, format!("passenger car model max diff {car:.2e}, scalar max diff {scalar:.2e}"))
}

fn condensing() -> Verdict {
    let settings = QpSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut agree, mut feasible, mut worst) = (0, 0, 0.0f64);
    for _ in 0..100 {
        let horizon = random_vehicle_horizon(&mut rng);
        let condensed = condense_horizon(&horizon).unwrap();
        let dense = solve(&condensed.qp, &settings);
        let sparse = sparse_problem(&horizon).map(|p| solve(&p, &settings));
        match (&dense, &sparse) {
            (QpOutcome::Feasible(d), Some(QpOutcome::Feasible(s))) => {
                feasible += 1;
                let gap = (d.objective + condensed.objective_offset - s.objective).abs() / (1.0 + s.objective.abs());
                worst = worst.max(gap);
                if gap <= 1e-6 {
                    agree += 1;
                }
            }
            (QpOutcome::Infeasible(_), Some(QpOutcome::Infeasible(_)) | None) => agree += 1,
            _ => {}
        }
    }
    verdict(agree == 100, format!("{agree}/100 agree ({feasible} feasible), worst relative optimum gap {worst:.2e}"))
}

fn scenario_suite() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, mode) in [("blind", PpcPathMode::Blind), ("late", PpcPathMode::Late), ("early", PpcPathMode::Early)] {
        let start = Instant::now();
        let sc = Scenario::from_config(&ScenarioConfig::new(0.01, 10.0, mode)).unwrap();
        let log = sc.run();
        let elapsed = start.elapsed();
        let interventions = log.records.iter().filter(|r| r.applied != r.u_op || r.verdict.as_str() != "certified").count();
        let ok = match mode {
            PpcPathMode::Early => interventions == 0,
            _ => !log.collision && log.min_clearance >= 0.0 && log.detection_step.is_some(),
        } && elapsed <= Duration::from_secs(5);
        pass &= ok;
        parts.push(format!(
            "{name}: clearance {:.3} m, collision {}, interventions {interventions}, {elapsed:.2?}",
            log.min_clearance, log.collision
        ));
    }
    verdict(pass, parts.join("; "))
}

fn sweep_statistics() -> Verdict {
    let start = Instant::now();
    let rows = run_sweep(&ScenarioConfig::new(0.01, 10.0, PpcPathMode::Blind), None, 0).unwrap();
    let elapsed = start.elapsed();
    let metrics: Vec<_> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let n = rows.len() as f64;
    let lead_ok = metrics.iter().filter(|m| m.lead_samples.is_some_and(|l| (1..=4).contains(&l))).count();
    let gap_ok = metrics.iter().filter(|m| m.distance_gap().is_some_and(|g| (0.5..=3.0).contains(&g))).count();
    let type2 = metrics.iter().filter(|m| m.detection_error == DetectionError::Type2).count();
    let collisions = metrics.iter().filter(|m| m.collision).count();
    let pass = rows.len() == 64
        && metrics.len() == 64
        && lead_ok as f64 >= 0.7 * n
        && gap_ok as f64 >= 0.6 * n
        && type2 == 0
        && collisions == 0
        && elapsed <= Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "lead in [1,4]: {lead_ok}/64 (need 45), d_mpc-d_opt in [0.5,3] m: {gap_ok}/64 (need 39), type-2 {type2}, collisions {collisions}, {elapsed:.2?}"
        ),
    )
}

fn delta_estimation() -> Verdict {
    let params = VehicleParams::passenger_car();
    let limits = ActuatorLimits::passenger_car();
    let model = discretize_exact(&build_continuous_model(&params).unwrap(), 0.1).unwrap();
    let surrogate = LinearSurrogate { model };
    let grid = GridSpec::for_vehicle(&params, &limits, 3);
    let linear = estimate_delta(&grid, &surrogate, &surrogate.model).unwrap().delta;

    let mut deltas = Vec::new();
    let mut grid = GridSpec::for_vehicle(&params, &limits, 2);
    for _ in 0..3 {
        let mut full = grid.clone();
        full.max_samples = full.full_size();
        deltas.push(estimate_delta_for(&params, &limits, 0.1, &full).unwrap().delta);
        grid = grid.refined();
    }
    let monotone = deltas.windows(2).all(|w| w[1] >= w[0]);

    let grid = GridSpec::for_vehicle(&params, &limits, 2);
    let report = DeltaReport::new(&estimate_delta_for(&params, &limits, 0.1, &grid).unwrap(), &grid, params.v_x, 0.1);
    let round_trip = DeltaReport::from_toml(&report.to_toml().unwrap()).is_ok_and(|r| r == report);
    verdict(
        linear <= 1e-9 && monotone && round_trip,
        format!("surrogate delta {linear:.2e}, nested grids 2/3/5 points {deltas:.4?}, report round-trip {round_trip}"),
    )
}

fn margin_monotonicity() -> Verdict {
    let cfg = ScenarioConfig::new(0.01, 10.0, PpcPathMode::Blind);
    let steps: Vec<Option<usize>> =
        [0.0, 0.25, 0.5, 1.0].iter().map(|&d| Scenario::with_delta(&cfg, d).unwrap().run().detection_step).collect();
    let pass = steps.iter().all(Option::is_some) && steps.windows(2).all(|w| w[1] <= w[0]);
    verdict(pass, format!("detection steps for delta 0/0.25/0.5/1.0: {steps:?}"))
}

fn sca(args: &[&str]) -> Option<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_sca")).args(args).output().ok()?;
    out.status.success().then_some(out.stdout)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map(|it| {
            it.flatten()
                .filter(|e| e.path().is_file())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("scenario.toml");
    fs::write(&config, "omega = 0.03\nspeed = 14.0\nppc_path = \"late\"\n").unwrap();
    let config = config.to_str().unwrap();
    let mut same = Vec::new();
    for command in ["run", "sweep", "estimate-delta", "counterfactual"] {
        let mut outputs = Vec::new();
        for attempt in ["a", "b"] {
            let out = tmp.path().join(format!("{command}-{attempt}"));
            fs::create_dir_all(&out).unwrap();
            let out_s = out.to_str().unwrap().to_string();
            let report = format!("{out_s}/delta.toml");
            let args: Vec<&str> = match command {
                "run" => vec!["--seed", "5", "run", "--config", config, "--out", &out_s],
                "sweep" => vec!["--seed", "5", "sweep", "--out", &out_s],
                "estimate-delta" => vec!["--seed", "5", "estimate-delta", "--out", &report],
                _ => vec!["--seed", "5", "counterfactual", "--config", config],
            };
            outputs.push(sca(&args).map(|stdout| (stdout, snapshot(&out))));
        }
        let ok = outputs[0].is_some() && outputs[0] == outputs[1];
        same.push((command, ok));
    }
    let pass = same.iter().all(|s| s.1);
    let detail = same.iter().map(|(c, ok)| format!("{c}: {}", if *ok { "identical" } else { "differs" })).collect::<Vec<_>>();
    verdict(pass, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 QP soundness", qp_soundness),
        ("2 discretization", discretization),
        ("3 condensing equivalence", condensing),
        ("4 scenario suite", scenario_suite),
        ("5 sweep statistics", sweep_statistics),
        ("6 delta estimation", delta_estimation),
        ("7 margin monotonicity", margin_monotonicity),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("[{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
