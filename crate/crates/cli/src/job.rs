use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use serde_json::json;

use nakao_core::curves::{
    branch_provenance, evaluate, gamma_scattering, region_scan, Curve, CurvePoint, DampingKind,
    Range,
};
use nakao_core::exec::Execution;
use nakao_core::iteration::{constants, iterate, lifespan_bound, LadderParams, Part};
use nakao_core::lifespan::LifespanEstimate;
use nakao_core::odi::{frame_audit, frame_constant, integrate_system, OdiConfig, OdiSweep};
use nakao_core::pde::{
    identity_audit, lifespan_sweep_pde, lower_bound_audit, refinement_study, solve,
    write_snapshots, ModelConfig, PdeSweep,
};
use nakao_core::verify::{run_suite, Suite};

/// A fully resolved command, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "job", rename_all = "snake_case")]
pub enum Job {
    Curves {
        point: CurvePoint,
        curve: Curve,
        damping: DampingKind,
    },
    Scan {
        n: u32,
        mu: f64,
        p: Range,
        q: Range,
        resolution: usize,
    },
    Odi {
        config: OdiConfig,
        t_max: f64,
        threshold: f64,
    },
    Iterate {
        params: LadderParams,
        part: Part,
        j_max: usize,
    },
    Pde {
        config: ModelConfig,
        refine: bool,
    },
    SweepOdi {
        sweep: OdiSweep,
    },
    SweepPde {
        sweep: PdeSweep,
    },
    Verify {
        suite: Suite,
    },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Curves { .. } => "curves",
            Job::Scan { .. } => "scan",
            Job::Odi { .. } => "odi",
            Job::Iterate { .. } => "iterate",
            Job::Pde { .. } => "pde",
            Job::SweepOdi { .. } | Job::SweepPde { .. } => "sweep",
            Job::Verify { .. } => "verify",
        }
    }
}

/// Exit status with its cause.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            error: error.into(),
        }
    }
}

impl From<nakao_core::Error> for Failure {
    fn from(e: nakao_core::Error) -> Self {
        if e.is_usage() {
            Failure::usage(e)
        } else {
            Failure::runtime(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::runtime(e)
    }
}

pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub calibration: serde_json::Value,
    /// Printed on stdout.
    pub summary: String,
    /// A failed audit or verdict; maps to exit 1 after the outputs are written.
    pub failure: Option<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))?;
        Ok(())
    }
}

pub fn execute(job: &Job, dir: &Path, exec: Execution) -> Result<Outcome, Failure> {
    fs::create_dir_all(dir)?;
    let mut w = Writer {
        dir,
        outputs: Vec::new(),
    };
    let mut calibration = serde_json::Value::Null;
    let mut failure = None;
    let summary = match job {
        Job::Curves {
            point,
            curve,
            damping,
        } => {
            let result = match (curve, damping) {
                (Curve::Mu, DampingKind::Scattering) => gamma_scattering(point.n, point.exponents)?,
                _ => evaluate(*curve, *point)?,
            };
            let provenance = if *curve == Curve::Mu && result.blowup_predicted {
                Some(branch_provenance(*point, *damping)?)
            } else {
                None
            };
            let report = json!({
                "point": point,
                "damping": damping,
                "result": result,
                "provenance": provenance,
            });
            w.json("curves.json", &report)?;
            serde_json::to_string_pretty(&report)?
        }
        Job::Scan {
            n,
            mu,
            p,
            q,
            resolution,
        } => {
            let grid = region_scan(*n, *mu, *p, *q, *resolution, exec)?;
            w.text("region.csv", &grid.to_csv())?;
            let predicted = grid.cells.iter().filter(|c| c.blowup_predicted).count();
            format!(
                "{} cells, {predicted} with predicted blow-up",
                grid.cells.len()
            )
        }
        Job::Odi {
            config,
            t_max,
            threshold,
        } => {
            let run = integrate_system(config, *t_max, *threshold)?;
            let audit = frame_audit(&run.trajectory, config)?;
            calibration = json!({ "K": frame_constant(config)? });
            w.text("trajectory.csv", &run.trajectory.to_csv())?;
            w.json(
                "odi.json",
                &json!({
                    "event": run.event,
                    "accepted_steps": run.accepted_steps,
                    "rejected_steps": run.rejected_steps,
                    "frame_audit": audit,
                }),
            )?;
            if !audit.passed {
                failure = Some(format!(
                    "frame audit failed: worst margin {}",
                    audit.worst_margin()
                ));
            }
            match run.event {
                Some(e) => format!("blow-up at t = {} ({})", e.time, e.trigger.as_str()),
                None => format!("no blow-up before t = {t_max}"),
            }
        }
        Job::Iterate {
            params,
            part,
            j_max,
        } => {
            let states = iterate(*part, params, *j_max)?;
            let consts = constants(*part, params)?;
            let bound = lifespan_bound(*part, params)?;
            calibration = serde_json::to_value(consts)?;
            let mut csv = String::from("j,a,b,log_b,slice_time\n");
            for s in &states {
                let _ = writeln!(csv, "{},{},{},{},{}", s.j, s.a, s.b, s.log_b, s.slice_time);
            }
            w.text("ladder.csv", &csv)?;
            w.json(
                "iterate.json",
                &json!({ "constants": consts, "lifespan_bound": bound }),
            )?;
            format!(
                "{} rungs; theta = {}, T_bound = {}, admissible: {}",
                states.len(),
                bound.theta,
                bound.t_bound,
                bound.admissible
            )
        }
        Job::Pde { config, refine } => {
            let run = solve(config)?;
            let ident = identity_audit(&run.series, config)?;
            let bounds = lower_bound_audit(&run.series, config)?;
            calibration = json!({ "C0": bounds.c0, "C1": bounds.c1 });
            w.text("series.csv", &run.series.to_csv())?;
            if !run.snapshots.is_empty() {
                let mut buf = Vec::new();
                write_snapshots(&mut buf, config.n, run.grid.h, run.dt, &run.snapshots)?;
                let path = dir.join("snapshots.bin");
                fs::write(&path, buf)?;
                w.outputs.push(path);
            }
            let study = if *refine {
                Some(refinement_study(config, exec)?)
            } else {
                None
            };
            w.json(
                "pde.json",
                &json!({
                    "event": run.event,
                    "grid": run.grid,
                    "dt": run.dt,
                    "steps": run.steps,
                    "identity_audit": ident,
                    "lower_bound_audit": bounds,
                    "refinement": study,
                }),
            )?;
            let mut problems = Vec::new();
            if !ident.passed {
                problems.push(format!(
                    "identity residual {} > {}",
                    ident.max_residual(),
                    ident.tolerance
                ));
            }
            if !bounds.passed {
                problems.push("lower-bound audit failed".to_string());
            }
            if study.as_ref().is_some_and(|s| !s.halves()) {
                problems.push("refinement did not halve the residuals".to_string());
            }
            if !problems.is_empty() {
                failure = Some(problems.join("; "));
            }
            match run.event {
                Some(e) => format!(
                    "blow-up at t = {} ({}); max identity residual {:.3e}",
                    e.time,
                    e.trigger.as_str(),
                    ident.max_residual()
                ),
                None => format!(
                    "no blow-up before t = {}; max identity residual {:.3e}",
                    config.t_max,
                    ident.max_residual()
                ),
            }
        }
        Job::SweepOdi { sweep } => {
            let est = nakao_core::odi::lifespan_sweep(sweep, exec)?;
            sweep_outputs(&mut w, &est, &mut calibration, &mut failure)?
        }
        Job::SweepPde { sweep } => {
            let out = lifespan_sweep_pde(sweep, exec)?;
            sweep_outputs(&mut w, &out.estimate, &mut calibration, &mut failure)?
        }
        Job::Verify { suite } => {
            let report = run_suite(*suite, exec)?;
            let text = report.to_text();
            w.text("verify.txt", &text)?;
            if !report.passed() {
                failure = Some(format!(
                    "{} required checks failed",
                    report.failures().count()
                ));
            }
            text.trim_end().to_string()
        }
    };
    Ok(Outcome {
        outputs: w.outputs,
        calibration,
        summary,
        failure,
    })
}

fn sweep_outputs(
    w: &mut Writer<'_>,
    est: &LifespanEstimate,
    calibration: &mut serde_json::Value,
    failure: &mut Option<String>,
) -> Result<String, Failure> {
    let csv = est.to_csv();
    w.text("sweep.csv", &csv)?;
    w.json("sweep.json", est)?;
    *calibration = json!({ "C": est.constant });
    let v = &est.verdict;
    if !(v.all_blew_up && v.monotone && v.consistent) {
        *failure = Some(format!(
            "sweep verdict: all blew up {}, monotone {}, consistent {} (tail excess {})",
            v.all_blew_up, v.monotone, v.consistent, v.tail_excess
        ));
    }
    let mut out = csv;
    let _ = writeln!(out, "# predicted exponent {}", est.predicted_exponent);
    if let Some(fit) = est.fit {
        let _ = writeln!(
            out,
            "# fit slope {} intercept {} r2 {}",
            fit.slope, fit.intercept, fit.r_squared
        );
    }
    let _ = write!(
        out,
        "# C {:?} tail excess {} (tol {}) consistent {}",
        est.constant, v.tail_excess, v.tail_tolerance, v.consistent
    );
    Ok(out)
}

pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(anyhow!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(anyhow!("invalid config {}: {e}", path.display())))
}
