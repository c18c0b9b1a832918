//! Run orchestration and on-disk artifacts: `diagnostics.csv` (one row per
//! step), `snapshots/step_{n}.csv` (fields on the grid), and a versioned
//! `summary.json` carrying the full config echo and every check verdict.
//!
//! Float columns use Rust's shortest round-trip formatting and all reductions
//! run on one thread in a fixed order, so identical configs produce
//! byte-identical CSV files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aggdiff::diagnostics::dissipation_check;
use aggdiff::driver::{run, TrajectoryRecord};
use aggdiff::kernel::KernelTable;
use aggdiff::metrics::{dbl_bounds, l1_distance, w2};
use aggdiff::model::support_set;
use aggdiff::oracle::{barenblatt_profile, fv_run, FvConfig};
use aggdiff::testfns::space_time_battery;
use aggdiff::{GridDensity, SupportIndicator};
use serde_json::{json, Value as Json};

use crate::config::{CheckMode, CliConfig, InitialProfile, Mode};
use crate::error::{io_err, CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One check verdict as it lands in `summary.json`. `passed` is `None` when
/// the check does not apply to the run mode.
#[derive(Debug, Clone)]
pub struct CheckVerdict {
    pub id: &'static str,
    pub mode: CheckMode,
    pub passed: Option<bool>,
    pub detail: String,
}

impl CheckVerdict {
    fn gates_exit(&self) -> bool {
        self.mode == CheckMode::Enforce && self.passed == Some(false)
    }

    fn to_json(&self) -> Json {
        json!({
            "id": self.id,
            "mode": match self.mode {
                CheckMode::Off => "off",
                CheckMode::Record => "record",
                CheckMode::Enforce => "enforce",
            },
            "passed": self.passed,
            "detail": self.detail,
        })
    }
}

/// Everything a finished run leaves in memory; `compare` feeds on the states.
pub struct RunOutcome {
    pub times: Vec<f64>,
    pub states: Vec<GridDensity>,
    pub checks: Vec<CheckVerdict>,
    pub stalled: bool,
    pub wall_clock: f64,
}

impl RunOutcome {
    pub fn final_state(&self) -> &GridDensity {
        self.states.last().expect("outcome always holds the initial state")
    }

    /// The exit-status error for this outcome, if any: stall wins over failed
    /// checks because it taints every downstream number.
    pub fn status_error(&self) -> Option<CliError> {
        if self.stalled {
            return Some(CliError::Stall(
                "transport optimizer missed its tolerance on at least one step \
                 (see summary.json); artifacts were still written"
                    .into(),
            ));
        }
        let failed: Vec<&str> =
            self.checks.iter().filter(|c| c.gates_exit()).map(|c| c.id).collect();
        if failed.is_empty() {
            None
        } else {
            Some(CliError::ChecksFailed(format!("enforced checks failed: {}", failed.join(", "))))
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path.display().to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path.display().to_string()))
}

fn push_f64(row: &mut String, v: f64) {
    let _ = write!(row, ",{v}");
}

const DIAG_HEADER: &str = "time,mass,second_moment,entropy,internal_energy,interaction_energy,\
support_energy,w2_step,dissipation_slack,gronwall_lgamma,gronwall_m2,gronwall_h1\n";

fn snapshot_csv(rho: &GridDensity, beta: &SupportIndicator, tab: &KernelTable) -> Result<String> {
    let grid = rho.grid();
    let conv_rho = tab.convolve(rho)?;
    let conv_beta = tab.convolve_indicator(beta)?;
    let mut out = String::with_capacity(grid.cells() * 48);
    out.push_str("x,rho,beta,kernel_field\n");
    for i in 0..grid.cells() {
        let x = grid.center(i);
        let r = rho.values()[i];
        let b = u8::from(beta.mask()[i]);
        let k = conv_rho.values()[i] + conv_beta.values()[i];
        let _ = writeln!(out, "{x},{r},{b},{k}");
    }
    Ok(out)
}

struct SnapshotWriter<'a> {
    dir: PathBuf,
    every: usize,
    last: usize,
    tab: &'a KernelTable,
    written: Vec<String>,
}

impl<'a> SnapshotWriter<'a> {
    fn new(out_dir: &Path, every: usize, last: usize, tab: &'a KernelTable) -> Result<Self> {
        let dir = out_dir.join("snapshots");
        create_dir(&dir)?;
        Ok(Self { dir, every, last, tab, written: Vec::new() })
    }

    fn write(&mut self, n: usize, rho: &GridDensity, beta: &SupportIndicator) -> Result<()> {
        if n != 0 && n != self.last && n % self.every != 0 {
            return Ok(());
        }
        let name = format!("step_{n}.csv");
        write_file(&self.dir.join(&name), &snapshot_csv(rho, beta, self.tab)?)?;
        self.written.push(name);
        Ok(())
    }
}

/// Runs the configured solver and writes all artifacts into `out_dir`.
/// Always writes `summary.json`, even when the solve itself fails partway.
pub fn execute_run(cfg: &CliConfig, out_dir: &Path) -> Result<RunOutcome> {
    create_dir(out_dir)?;
    let started = Instant::now();
    let result = match cfg.mode {
        Mode::Splitting | Mode::JkoOnly => run_particle_scheme(cfg, out_dir, &started),
        Mode::FvOracle => run_fv(cfg, out_dir, &started),
    };
    if let Err(e) = &result {
        // Leave a machine-readable trace of the failure next to whatever
        // artifacts made it to disk.
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "run",
            "config": cfg.echo(),
            "outcome": { "error": e.to_string() },
            "versions": versions(),
        });
        let _ = write_file(&out_dir.join("summary.json"), &pretty(&summary));
    }
    result
}

fn versions() -> Json {
    json!({
        "aggdiff-cli": env!("CARGO_PKG_VERSION"),
        "aggdiff": aggdiff::VERSION,
        "schema": SCHEMA_VERSION,
    })
}

fn pretty(v: &Json) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

fn run_particle_scheme(cfg: &CliConfig, out_dir: &Path, started: &Instant) -> Result<RunOutcome> {
    let grid = cfg.grid()?;
    let initial = cfg.initial.build(grid)?;
    let tab = KernelTable::new(grid);

    if cfg.t_final == 0.0 {
        let beta = if cfg.freeze_beta_empty {
            SupportIndicator::empty(grid)
        } else {
            support_set(&initial, cfg.spec.support_threshold)
        };
        let mut snaps = SnapshotWriter::new(out_dir, cfg.snapshot_every, 0, &tab)?;
        snaps.write(0, &initial, &beta)?;
        write_file(&out_dir.join("diagnostics.csv"), DIAG_HEADER)?;
        let outcome = RunOutcome {
            times: vec![0.0],
            states: vec![initial],
            checks: Vec::new(),
            stalled: false,
            wall_clock: started.elapsed().as_secs_f64(),
        };
        write_summary(cfg, out_dir, &outcome, &snaps.written)?;
        return Ok(outcome);
    }

    let core_cfg = cfg.core_run_config();
    let n_steps = core_cfg.step_count()?;
    let traj = run(&cfg.spec, &initial, &core_cfg)?;

    // diagnostics.csv
    let mut csv = String::with_capacity(64 * (n_steps + 1));
    csv.push_str(DIAG_HEADER);
    for s in &traj.steps {
        let mut row = format!("{}", s.time);
        push_f64(&mut row, s.rho.mass());
        push_f64(&mut row, s.rho.second_moment());
        push_f64(&mut row, s.rho.entropy());
        push_f64(&mut row, s.jko.energy_new.internal);
        push_f64(&mut row, s.jko.energy_new.interaction);
        push_f64(&mut row, s.jko.energy_new.support);
        push_f64(&mut row, s.jko.transport_sq.sqrt());
        let slack = s.jko.energy_new.total() + s.jko.transport_sq / (2.0 * cfg.tau)
            - s.jko.energy_prev.total();
        push_f64(&mut row, slack);
        push_f64(&mut row, s.gronwall.lgamma_ratio);
        push_f64(&mut row, s.gronwall.m2_ratio);
        push_f64(&mut row, s.gronwall.h1_ratio);
        row.push('\n');
        csv.push_str(&row);
    }
    write_file(&out_dir.join("diagnostics.csv"), &csv)?;

    // snapshots
    let mut snaps = SnapshotWriter::new(out_dir, cfg.snapshot_every, traj.steps.len(), &tab)?;
    snaps.write(0, &traj.initial, &traj.initial_beta)?;
    for (k, s) in traj.steps.iter().enumerate() {
        snaps.write(k + 1, &s.rho, &s.beta)?;
    }

    let checks = particle_checks(cfg, &traj);
    let stalled = traj.steps.iter().any(|s| !s.jko.converged);
    let mut times = vec![0.0];
    let mut states = vec![traj.initial.clone()];
    for s in &traj.steps {
        times.push(s.time);
        states.push(s.rho.clone());
    }
    let outcome = RunOutcome {
        times,
        states,
        checks,
        stalled,
        wall_clock: started.elapsed().as_secs_f64(),
    };
    write_summary(cfg, out_dir, &outcome, &snaps.written)?;
    Ok(outcome)
}

fn particle_checks(cfg: &CliConfig, traj: &TrajectoryRecord) -> Vec<CheckVerdict> {
    let mut out = Vec::new();
    let c = &cfg.checks;

    if c.dissipation.runs() {
        let rep = dissipation_check(traj);
        out.push(CheckVerdict {
            id: "dissipation",
            mode: c.dissipation,
            passed: Some(rep.passed(1e-9)),
            detail: format!(
                "worst normalized slack {:.3e} at step {} of {}",
                rep.worst_slack, rep.worst_step, rep.steps
            ),
        });
    }

    if c.mass.runs() {
        let mut worst_transport = 0.0f64;
        let mut worst_growth = 0.0f64;
        let envelope = (cfg.spec.k_m * cfg.tau).exp();
        let mut prev = traj.initial.mass();
        for s in &traj.steps {
            worst_transport = worst_transport.max((s.rho_half.mass() - prev).abs() / prev);
            worst_growth = worst_growth.max(s.rho.mass() / (s.rho_half.mass() * envelope) - 1.0);
            prev = s.rho.mass();
        }
        let passed = worst_transport <= 1e-12 && worst_growth <= 1e-12;
        out.push(CheckVerdict {
            id: "mass",
            mode: c.mass,
            passed: Some(passed),
            detail: format!(
                "worst transport drift {worst_transport:.3e}, worst reaction growth excess {worst_growth:.3e}"
            ),
        });
    }

    if c.gronwall.runs() {
        let failed = traj.steps.iter().filter(|s| !s.gronwall.passed()).count();
        let worst = traj
            .steps
            .iter()
            .map(|s| {
                s.gronwall.lgamma_ratio.max(s.gronwall.m2_ratio).max(s.gronwall.h1_ratio)
                    / s.gronwall.bound
            })
            .fold(0.0f64, f64::max);
        out.push(CheckVerdict {
            id: "gronwall",
            mode: c.gronwall,
            passed: Some(failed == 0),
            detail: format!("{failed} steps over the bound; worst ratio/bound {worst:.6}"),
        });
    }

    if c.constraint.runs() {
        let battery = space_time_battery(cfg.half_width, cfg.t_final);
        let rep = aggdiff::diagnostics::constraint_residual(traj, &battery);
        out.push(CheckVerdict {
            id: "constraint",
            mode: c.constraint,
            passed: Some(rep.max_residual <= c.constraint_tol),
            detail: format!(
                "max weighted uptake-outside-mask residual {:.3e} (tolerance {:.1e})",
                rep.max_residual, c.constraint_tol
            ),
        });
    }

    if c.oracle.runs() {
        let InitialProfile::Barenblatt { t0, mass } = cfg.initial else {
            unreachable!("config validation requires barenblatt initial data");
        };
        let verdict = match barenblatt_profile(traj.grid(), t0 + cfg.t_final, mass) {
            Ok(exact) => {
                let err = l1_distance(traj.final_density(), &exact);
                CheckVerdict {
                    id: "oracle",
                    mode: c.oracle,
                    passed: Some(err <= c.oracle_budget),
                    detail: format!(
                        "L1 distance to the closed-form profile {err:.5} (budget {})",
                        c.oracle_budget
                    ),
                }
            }
            Err(e) => CheckVerdict {
                id: "oracle",
                mode: c.oracle,
                passed: Some(false),
                detail: format!("reference profile unavailable: {e}"),
            },
        };
        out.push(verdict);
    }

    out
}

fn run_fv(cfg: &CliConfig, out_dir: &Path, started: &Instant) -> Result<RunOutcome> {
    let grid = cfg.grid()?;
    let initial = cfg.initial.build(grid)?;
    let tab = KernelTable::new(grid);
    let n_steps = if cfg.t_final == 0.0 {
        0
    } else {
        let ratio = cfg.t_final / cfg.tau;
        ratio.round() as usize
    };
    let output_times: Vec<f64> = (1..=n_steps).map(|k| k as f64 * cfg.tau).collect();

    let states = if n_steps == 0 {
        Vec::new()
    } else {
        fv_run(&cfg.spec, &initial, &output_times, &FvConfig::default())?.states
    };

    let mut csv = String::with_capacity(64 * (n_steps + 1));
    csv.push_str(DIAG_HEADER);
    let mut snaps = SnapshotWriter::new(out_dir, cfg.snapshot_every, n_steps, &tab)?;
    let beta_of = |rho: &GridDensity| support_set(rho, cfg.spec.support_threshold);
    snaps.write(0, &initial, &beta_of(&initial))?;
    for (k, (t, rho)) in output_times.iter().zip(&states).enumerate() {
        let beta = beta_of(rho);
        let parts = cfg.spec.energy_parts(rho, &beta, &tab)?;
        let mut row = format!("{t}");
        push_f64(&mut row, rho.mass());
        push_f64(&mut row, rho.second_moment());
        push_f64(&mut row, rho.entropy());
        push_f64(&mut row, parts.internal);
        push_f64(&mut row, parts.interaction);
        push_f64(&mut row, parts.support);
        // No transport step, no reaction substep bookkeeping: the solver-
        // specific columns stay empty.
        row.push_str(",,,,,");
        row.push('\n');
        csv.push_str(&row);
        snaps.write(k + 1, rho, &beta)?;
    }
    write_file(&out_dir.join("diagnostics.csv"), &csv)?;

    let mut checks = Vec::new();
    let c = &cfg.checks;
    for (id, mode) in [
        ("dissipation", c.dissipation),
        ("gronwall", c.gronwall),
        ("constraint", c.constraint),
    ] {
        if mode.runs() {
            checks.push(CheckVerdict {
                id,
                mode,
                passed: None,
                detail: "not applicable to fv-oracle mode".into(),
            });
        }
    }
    if c.mass.runs() {
        let envelope = (cfg.spec.k_m * cfg.tau).exp();
        let mut worst = 0.0f64;
        let mut prev = initial.mass();
        for rho in &states {
            let m = rho.mass();
            if cfg.spec.k_m == 0.0 {
                worst = worst.max((m - prev).abs() / prev);
            } else {
                worst = worst.max(m / (prev * envelope) - 1.0);
            }
            prev = m;
        }
        checks.push(CheckVerdict {
            id: "mass",
            mode: c.mass,
            passed: Some(worst <= 1e-11),
            detail: format!("worst per-interval drift/growth excess {worst:.3e}"),
        });
    }
    if c.oracle.runs() {
        let InitialProfile::Barenblatt { t0, mass } = cfg.initial else {
            unreachable!("config validation requires barenblatt initial data");
        };
        let final_state = states.last().unwrap_or(&initial);
        let exact = barenblatt_profile(grid, t0 + cfg.t_final, mass)?;
        let err = l1_distance(final_state, &exact);
        checks.push(CheckVerdict {
            id: "oracle",
            mode: c.oracle,
            passed: Some(err <= c.oracle_budget),
            detail: format!(
                "L1 distance to the closed-form profile {err:.5} (budget {})",
                c.oracle_budget
            ),
        });
    }

    let mut times = vec![0.0];
    times.extend_from_slice(&output_times);
    let mut all_states = vec![initial];
    all_states.extend(states);
    let outcome = RunOutcome {
        times,
        states: all_states,
        checks,
        stalled: false,
        wall_clock: started.elapsed().as_secs_f64(),
    };
    write_summary(cfg, out_dir, &outcome, &snaps.written)?;
    Ok(outcome)
}

fn write_summary(
    cfg: &CliConfig,
    out_dir: &Path,
    outcome: &RunOutcome,
    snapshots: &[String],
) -> Result<()> {
    let fin = outcome.final_state();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "run",
        "config": cfg.echo(),
        "outcome": {
            "steps_completed": outcome.times.len() - 1,
            "t_reached": outcome.times.last(),
            "stalled": outcome.stalled,
            "wall_clock_sec": outcome.wall_clock,
            "final": {
                "mass": fin.mass(),
                "second_moment": fin.second_moment(),
                "entropy": fin.entropy(),
                "max_value": fin.max_value(),
            },
            "snapshots": snapshots,
        },
        "checks": outcome.checks.iter().map(CheckVerdict::to_json).collect::<Vec<_>>(),
        "versions": versions(),
    });
    write_file(&out_dir.join("summary.json"), &pretty(&summary))
}

/// Cross-run comparison rows at every matched output time.
pub fn compare_outcomes(
    a: &RunOutcome,
    b: &RunOutcome,
) -> Result<Vec<Json>> {
    let mut rows = Vec::new();
    let match_tol = 1e-9;
    for (ta, sa) in a.times.iter().zip(&a.states) {
        if *ta == 0.0 {
            continue;
        }
        let Some((_, sb)) = b
            .times
            .iter()
            .zip(&b.states)
            .find(|(tb, _)| (*tb - ta).abs() <= match_tol * ta.max(1.0))
        else {
            continue;
        };
        if sa.grid() != sb.grid() {
            return Err(CliError::Config(
                "compare needs both runs on the identical grid (same half_width and cells)"
                    .into(),
            ));
        }
        let l1 = l1_distance(sa, sb);
        let mass_gap = (sa.mass() - sb.mass()).abs() / sa.mass().max(sb.mass());
        let row = if mass_gap <= 1e-9 {
            let w = w2(sa, sb).map_err(|e| CliError::Config(e.to_string()))?;
            json!({ "time": ta, "l1": l1, "w2": w })
        } else {
            let d = dbl_bounds(sa, sb).map_err(|e| CliError::Config(e.to_string()))?;
            json!({ "time": ta, "l1": l1, "dbl_upper": d.upper })
        };
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config(
            "the two runs share no output times; align t_final and tau so at least \
             one time matches"
                .into(),
        ));
    }
    Ok(rows)
}
