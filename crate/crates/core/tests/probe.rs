//! Scratch measurement probes for preset tuning. Not part of the test suite
//! (all ignored); run explicitly with `cargo test --test probe -- --ignored`.

use std::time::Instant;

use aggdiff::diagnostics::weak_form_residual;
use aggdiff::driver::{run, RunConfig, TrajectoryRecord};
use aggdiff::grid::{Grid, GridDensity};
use aggdiff::model::ModelSpec;
use aggdiff::oracle::barenblatt_profile;
use aggdiff::testfns::space_battery;

fn descent_stats(traj: &TrajectoryRecord) -> String {
    let unconverged = traj.steps.iter().filter(|s| !s.jko.converged).count();
    let max_iters = traj.steps.iter().map(|s| s.jko.iterations).max().unwrap_or(0);
    let worst_rel = traj
        .steps
        .iter()
        .map(|s| s.jko.residual / s.jko.residual_initial.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    format!("unconv={unconverged} max_it={max_iters} worst_rel={worst_rel:.1e}")
}

#[test]
#[ignore]
fn post_fix_fixed_ladders() {
    let battery = space_battery(4.0);
    let gaussian = |grid: Grid| GridDensity::from_fn(grid, |x| 0.6 * (-x * x / 1.28).exp());

    let spec = ModelSpec::new(2.0, 0.0, 0.0, 1.0, 0.0).unwrap();
    let grid = Grid::new(4.0, 1024).unwrap();
    let initial = barenblatt_profile(grid, 1.0, 1.0).unwrap();
    for tau in [4e-3, 2e-3, 1e-3] {
        let t0 = Instant::now();
        let traj = run(&spec, &initial, &RunConfig::new(tau, 0.5, 800)).unwrap();
        let rep = weak_form_residual(&traj, &battery, 0.0, 0.5).unwrap();
        println!(
            "barenblatt-800 tau={tau}: R={:.3e}  ({:.1}s, {})",
            rep.max_abs,
            t0.elapsed().as_secs_f64(),
            descent_stats(&traj)
        );
    }

    let spec = ModelSpec::new(2.0, 1.0, 0.0, 1.0, 0.0).unwrap();
    let grid = Grid::new(4.0, 512).unwrap();
    let initial = gaussian(grid).unwrap();
    for tau in [4e-3, 2e-3, 1e-3] {
        let t0 = Instant::now();
        let traj = run(&spec, &initial, &RunConfig::new(tau, 0.24, 300)).unwrap();
        let rep = weak_form_residual(&traj, &battery, 0.0, 0.24).unwrap();
        println!(
            "aggregation-300 tau={tau}: R={:.3e}  ({:.1}s, {})",
            rep.max_abs,
            t0.elapsed().as_secs_f64(),
            descent_stats(&traj)
        );
    }

    let spec = ModelSpec::new(3.0, 0.0, 0.0, 1.0, 0.0).unwrap();
    let initial = gaussian(grid).unwrap();
    for tau in [4e-3, 2e-3, 1e-3] {
        let t0 = Instant::now();
        let traj = run(&spec, &initial, &RunConfig::new(tau, 0.24, 300)).unwrap();
        let rep = weak_form_residual(&traj, &battery, 0.0, 0.24).unwrap();
        println!(
            "pme-smooth-300 tau={tau}: R={:.3e}  ({:.1}s, {})",
            rep.max_abs,
            t0.elapsed().as_secs_f64(),
            descent_stats(&traj)
        );
    }
}

#[test]
#[ignore]
fn post_fix_joint_ladders() {
    let battery = space_battery(4.0);
    let grid = Grid::new(4.0, 512).unwrap();
    let initial = GridDensity::from_fn(grid, |x| 0.6 * (-x * x / 1.28).exp()).unwrap();
    let ladder = [(4e-3, 450usize), (2e-3, 1034), (1e-3, 2376)];

    for (name, gamma, chi, k_m) in
        [("split-km05", 2.0, 1.0, 0.5), ("pme3-km025", 3.0, 0.5, 0.25)]
    {
        let spec = ModelSpec::new(gamma, chi, k_m, 1.0, 0.0).unwrap();
        for (tau, n_p) in ladder {
            let mut cfg = RunConfig::new(tau, 0.048, n_p);
            cfg.eps_grad = 1e-3;
            cfg.max_iters = 4000;
            let t0 = Instant::now();
            let traj = run(&spec, &initial, &cfg).unwrap();
            let rep = weak_form_residual(&traj, &battery, 0.0, 0.048).unwrap();
            println!(
                "{name} tau={tau} n_p={n_p}: R={:.3e}  ({:.1}s, {})",
                rep.max_abs,
                t0.elapsed().as_secs_f64(),
                descent_stats(&traj)
            );
        }
    }
}
