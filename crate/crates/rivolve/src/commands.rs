//! The `solve`, `verify`, `jumpcost` and `sweep` commands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rivolve_core::jump::jump_cost;
use rivolve_core::models::{Interface, Model};
use rivolve_core::scheme::{convergence_report, solve_incremental, sup_distance, StudyConfig};
use rivolve_core::stability::residual_stability;
use rivolve_core::trajectory::{detect_transitions, interpolate_transitions, interpolate_with};
use rivolve_core::verify::{balance, verify_e, verify_ve, Certificate};
use rivolve_core::{Correction, DiscreteTrajectory, RisProblem, Trajectory};

use crate::config::{ModelConfig, RunConfig, SchemeName};
use crate::io::{fmt_f64, read_trajectory, write_trajectory};
use crate::report::{add_certificate, Report};

/// Outcome of a command: `pass` decides between exit codes 0 and 2.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

fn out_path(dir: &Path, prefix: &str, name: &str) -> PathBuf {
    dir.join(format!("{prefix}_{name}"))
}

fn certificate(cfg: &RunConfig, model: &Model, traj: &DiscreteTrajectory) -> Result<Certificate> {
    let tol = cfg.tol_config();
    Ok(match cfg.scheme.kind {
        SchemeName::E => verify_e(model, traj, &tol)?,
        SchemeName::Ve | SchemeName::Bv => verify_ve(model, traj, &tol)?,
    })
}

fn node_residuals(cfg: &RunConfig, model: &Model, traj: &DiscreteTrajectory) -> Result<Vec<f64>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| Ok(residual_stability(model, t, &s.z, &traj.correction, &cfg.minimizer)?.residual))
        .collect()
}

fn jump_flags(cfg: &RunConfig, model: &Model, traj: &DiscreteTrajectory) -> Result<Vec<bool>> {
    let tol = cfg.tol_config();
    let mut flags = vec![false; traj.len()];
    for n in detect_transitions(model, traj, &tol.jump_detection, &traj.correction, &tol.minimizer)? {
        flags[n] = true;
    }
    Ok(flags)
}

/// Start times of jumps; consecutive jump steps form one jump.
fn jump_starts(traj: &Trajectory) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for j in &traj.jumps {
        if prev != Some(j.step.wrapping_sub(1)) {
            out.push(j.t);
        }
        prev = Some(j.step);
    }
    out
}

fn header(r: &mut Report, cfg: &RunConfig, model: &Model, traj: &DiscreteTrajectory) {
    r.text("model", model.name());
    r.text("scheme", cfg.scheme_kind().name());
    r.num("tau", traj.tau);
    r.int("steps", traj.len().saturating_sub(1));
    r.text("seed", cfg.seed.to_string());
    r.text("certified_global", traj.certified.to_string());
    for (i, w) in traj.warnings.iter().enumerate() {
        r.text(format!("warning.{i}"), w.clone());
    }
}

/// Solves, writes the trajectory CSV and the certificate.
pub fn solve(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let solved = solve_incremental(&model, &cfg.scheme_config())?;
    // certify exactly what is written, so `verify` on the CSV reproduces the verdicts
    let traj = DiscreteTrajectory::from_nodes(&model, solved.times.clone(), solved.states.clone(), solved.correction.clone())?;
    let traj = DiscreteTrajectory { certified: solved.certified, warnings: solved.warnings.clone(), ..traj };
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_path(out_dir, &cfg.output.prefix, "trajectory.csv");
    let residuals = node_residuals(cfg, &model, &traj)?;
    write_trajectory(BufWriter::new(File::create(&csv_path)?), &model, &traj, &residuals, &jump_flags(cfg, &model, &traj)?)?;
    let cert = certificate(cfg, &model, &traj)?;
    let mut r = Report::new();
    header(&mut r, cfg, &model, &traj);
    r.list("final_z", &traj.states[traj.len() - 1].z);
    add_certificate(&mut r, &cert);
    let rep_path = out_path(out_dir, &cfg.output.prefix, "certificate.txt");
    fs::write(&rep_path, r.render())?;
    Ok(Outcome { pass: cert.pass(), report: r, files: vec![csv_path, rep_path] })
}

/// Certifies a trajectory CSV written by [`solve`].
pub fn verify(cfg: &RunConfig, csv: &Path, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let file = File::open(csv).with_context(|| format!("opening {}", csv.display()))?;
    let nodes = read_trajectory(file, model.n_z(), model.n_u()).with_context(|| format!("reading {}", csv.display()))?;
    let traj = DiscreteTrajectory::from_nodes(&model, nodes.times, nodes.states, cfg.step_correction())?;
    let cert = certificate(cfg, &model, &traj)?;
    let mut r = Report::new();
    header(&mut r, cfg, &model, &traj);
    r.text("trajectory", csv.display().to_string());
    add_certificate(&mut r, &cert);
    fs::create_dir_all(out_dir)?;
    let rep_path = out_path(out_dir, &cfg.output.prefix, "verify.txt");
    fs::write(&rep_path, r.render())?;
    Ok(Outcome { pass: cert.pass(), report: r, files: vec![rep_path] })
}

/// Jump cost bounds between two states, with the witness chain.
pub fn jumpcost(cfg: &RunConfig, t: f64, z_minus: &[f64], z_plus: &[f64], out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    if z_minus.len() != model.n_z() || z_plus.len() != model.n_z() {
        bail!("endpoints need {} components", model.n_z());
    }
    let corr = cfg.step_correction();
    let tol = cfg.tol_config();
    let mut r = Report::new();
    r.text("model", model.name());
    r.num("t", t);
    r.list("z_minus", z_minus);
    r.list("z_plus", z_plus);
    let mut u = vec![0.0; model.n_u()];
    let feasible = (0.0..=model.horizon()).contains(&t)
        && model.reduce(t, z_minus, &mut u).is_finite()
        && model.reduce(t, z_plus, &mut u).is_finite();
    fs::create_dir_all(out_dir)?;
    let rep_path = out_path(out_dir, &cfg.output.prefix, "jumpcost.txt");
    if !feasible {
        r.text("status", "infeasible endpoints");
        fs::write(&rep_path, r.render())?;
        return Ok(Outcome { pass: false, report: r, files: vec![rep_path] });
    }
    let b = jump_cost(&model, t, z_minus, z_plus, &corr, &tol.jump_search)?;
    r.num("lower", b.lower);
    r.num("upper", b.upper);
    r.num("gap", b.gap);
    r.num("constructive_upper", b.constructive_upper);
    r.num("dp_value", b.dp_value.unwrap_or(f64::NAN));
    r.int("chain_points", b.witness.len());
    let pass = b.upper.is_finite();
    r.text("status", if pass { "ok" } else { "no finite chain" });
    fs::write(&rep_path, r.render())?;

    let chain_path = out_path(out_dir, &cfg.output.prefix, "chain.csv");
    let mut w = csv::Writer::from_path(&chain_path)?;
    let mut head = vec!["k".to_string()];
    head.extend((1..=model.n_z()).map(|i| format!("z{i}")));
    head.extend(["residual", "link_kind", "link_diss", "link_gap"].map(String::from));
    w.write_record(&head)?;
    let c = &b.witness;
    for k in 0..c.len() {
        let mut row = vec![k.to_string()];
        row.extend(c.points[k].iter().map(|&x| fmt_f64(x)));
        if k + 1 < c.len() {
            row.push(fmt_f64(c.point_residual[k]));
            row.push(format!("{:?}", c.link_kind[k]).to_lowercase());
            row.push(fmt_f64(c.link_diss[k]));
            row.push(fmt_f64(c.link_gap[k]));
        } else {
            row.extend(["", "", "", ""].map(String::from));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(Outcome { pass, report: r, files: vec![rep_path, chain_path] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Tau,
    Mu,
    Epsilon,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Tau => "tau",
            Axis::Mu => "mu",
            Axis::Epsilon => "epsilon",
            Axis::K => "k",
        }
    }
}

/// `cfg` with `axis` set to `value`.
pub fn with_axis(cfg: &RunConfig, axis: Axis, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    match axis {
        Axis::Tau => c.scheme.tau = value,
        Axis::Epsilon => {
            if c.scheme.kind != SchemeName::Bv {
                bail!("epsilon sweeps need scheme.kind = \"bv\"");
            }
            c.scheme.epsilon = Some(value);
        }
        Axis::Mu => match &mut c.scheme.correction {
            Some(Correction::Quadratic { mu, .. }) if c.scheme.kind == SchemeName::Ve => *mu = value,
            _ => bail!("mu sweeps need kind = \"ve\" with a quadratic correction"),
        },
        Axis::K => match &mut c.model {
            ModelConfig::Delamination0d(s) => s.interface = Interface::Adhesive { k: value },
            _ => bail!("k sweeps need a delamination0d model"),
        },
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub error: Option<String>,
    pub jump_times: Vec<f64>,
    pub final_z: Vec<f64>,
    pub balance_residual: f64,
    pub violation: f64,
    pub sup_distance_prev: f64,
}

struct SweepRun {
    model: Model,
    traj: DiscreteTrajectory,
}

fn run_one(cfg: &RunConfig) -> Result<(SweepRun, SweepRow)> {
    let model = cfg.build_model()?;
    let traj = solve_incremental(&model, &cfg.scheme_config())?;
    let tol = cfg.tol_config();
    let it = interpolate_transitions(&model, &traj, &tol.jump_detection, &traj.correction, &tol.minimizer)?;
    let bal = balance(&model, &traj, &traj.correction, &tol.jump_search, &tol.jump_detection)?;
    let violation = match &model {
        Model::Delamination0d(d) => traj.states.iter().map(|s| d.constraint_violation(&s.u, s.z[0])).fold(0.0, f64::max),
        _ => f64::NAN,
    };
    let row = SweepRow {
        value: f64::NAN,
        error: None,
        jump_times: jump_starts(&it),
        final_z: traj.states[traj.len() - 1].z.clone(),
        balance_residual: bal.normalized,
        violation,
        sup_distance_prev: f64::NAN,
    };
    Ok((SweepRun { model, traj }, row))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// One run per value, in parallel; rows keep the order of `values`.
pub fn sweep(cfg: &RunConfig, axis: Axis, values: &[f64], out_dir: &Path) -> Result<Outcome> {
    if values.len() < 2 {
        bail!("a sweep needs at least two values");
    }
    let configs = values.iter().map(|&v| with_axis(cfg, axis, v)).collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<(SweepRun, SweepRow)>> = configs.par_iter().map(run_one).collect();
    let mut rows = Vec::with_capacity(values.len());
    let mut runs: Vec<Option<SweepRun>> = Vec::with_capacity(values.len());
    for (v, res) in values.iter().zip(results) {
        match res {
            Ok((run, mut row)) => {
                row.value = *v;
                rows.push(row);
                runs.push(Some(run));
            }
            Err(e) => {
                rows.push(SweepRow {
                    value: *v,
                    error: Some(format!("{e:#}")),
                    jump_times: vec![],
                    final_z: vec![],
                    balance_residual: f64::NAN,
                    violation: f64::NAN,
                    sup_distance_prev: f64::NAN,
                });
                runs.push(None);
            }
        }
    }
    let probes = cfg.verify.probes;
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (&runs[k - 1], &runs[k]) {
            let jd = cfg.tol_config().jump_detection;
            rows[k].sup_distance_prev = sup_distance(&interpolate_with(&a.traj, &jd), &interpolate_with(&b.traj, &jd), probes);
        }
    }
    let all_ok = rows.iter().all(|r| r.error.is_none());

    fs::create_dir_all(out_dir)?;
    let csv_path = out_path(out_dir, &cfg.output.prefix, "sweep.csv");
    {
        let mut f = BufWriter::new(File::create(&csv_path)?);
        use std::io::Write;
        writeln!(f, "# rivolve-sweep v1")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["axis", "value", "status", "jump_times", "final_z", "balance_residual", "violation", "sup_distance_prev"])?;
        for r in &rows {
            let join = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";");
            w.write_record([
                axis.name().to_string(),
                fmt_f64(r.value),
                r.error.clone().unwrap_or_else(|| "ok".into()),
                join(&r.jump_times),
                join(&r.final_z),
                fmt_f64(r.balance_residual),
                fmt_f64(r.violation),
                fmt_f64(r.sup_distance_prev),
            ])?;
        }
        w.flush()?;
    }

    let mut rep = Report::new();
    rep.text("axis", axis.name());
    rep.list("values", values);
    rep.int("failed_runs", rows.iter().filter(|r| r.error.is_some()).count());
    if axis == Axis::Tau && all_ok {
        let res: Vec<f64> = rows.iter().map(|r| r.balance_residual).collect();
        rep.num("balance_slope", loglog_slope(values, &res));
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if decreasing && values.len() >= 3 {
            let first = runs[0].as_ref().expect("all runs ok");
            let trajs: Vec<DiscreteTrajectory> = runs.iter().map(|r| r.as_ref().expect("ok").traj.clone()).collect();
            let study = StudyConfig { probes, with_balance: false, jump_detection: cfg.tol_config().jump_detection, ..Default::default() };
            let conv = convergence_report(&first.model, values, &trajs, &study)?;
            rep.text("sup_cauchy", conv.sup_cauchy.to_string());
            rep.text("jump_cauchy", conv.jump_cauchy.to_string());
            rep.text("non_cauchy", conv.non_cauchy.to_string());
        }
    }
    let rep_path = out_path(out_dir, &cfg.output.prefix, "sweep.txt");
    fs::write(&rep_path, rep.render())?;
    Ok(Outcome { pass: all_ok, report: rep, files: vec![csv_path, rep_path] })
}
