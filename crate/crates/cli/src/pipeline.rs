//! Stage orchestration: end states → profile → spectra → energy report.
//!
//! Every stage writes `<stage>.json` (and a CSV where there is tabular data)
//! into the output directory. JSON documents carry a `verdicts` array; each
//! verdict names the quantity, its threshold, where it was attained and the
//! signed margin (positive when the verdict passes).

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qhd_lab_core::energy_estimates::{energy_csv, energy_report, EnergyReport};
use qhd_lab_core::essential_spectrum::{
    curves_csv, essential_stability_verdict, fredholm_borders, SpectrumCurve, STABLE_TOL,
};
use qhd_lab_core::export::to_sorted_json;
use qhd_lab_core::point_spectrum::{
    assemble_integrated, assemble_original, eigen_csv, eigen_solve, stability_verdict, zero_mode_residual, Closure,
    EigenOptions, VerdictOptions,
};
use qhd_lab_core::profile::{decay_rates, linear_rates, solve_profile_with, SolverOptions, WaveProfile};
use qhd_lab_core::shock_data::{
    check_subsonicity_conditions, critical_point_expansion, critical_point_p0, flux_constant_a_expansion,
    lax_end_states,
};
use qhd_lab_core::EndStates;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

/// Relative Rankine–Hugoniot tolerance for the end-state check.
pub const RH_TOL: f64 = 1e-12;
pub const PROFILE_RESIDUAL_TOL: f64 = 1e-8;
pub const PROFILE_BC_TOL: f64 = 1e-6;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const ZERO_MODE_TOL: f64 = 1e-4;
pub const FORM_DEFECT_TOL: f64 = 1e-12;
pub const G_EXPANDED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Endstates,
    Profile,
    Essential,
    Point,
    Energy,
    All,
    Sweep,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Endstates => "endstates",
            Stage::Profile => "profile",
            Stage::Essential => "essential",
            Stage::Point => "point",
            Stage::Energy => "energy",
            Stage::All => "all",
            Stage::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] qhd_lab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Core(e) => e.kind(),
            PipelineError::Io { .. } => "io",
            PipelineError::Config(_) => "config",
        }
    }

    /// Machine-readable record written as `error.json`.
    pub fn record(&self, stage: Stage) -> Value {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "stage": stage.name(),
        })
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    /// coordinate where `value` is attained; its meaning is given by `at_kind`
    pub at: Option<f64>,
    pub at_kind: &'static str,
    /// signed slack, > 0 when the verdict passes
    pub margin: f64,
}

impl Verdict {
    /// value ≤ threshold
    fn at_most(name: &str, value: f64, threshold: f64, at: Option<f64>, at_kind: &'static str) -> Self {
        let margin = threshold - value;
        Verdict { name: name.into(), pass: value <= threshold, value, threshold, at, at_kind, margin }
    }

    /// value < threshold, strictly
    fn below(name: &str, value: f64, threshold: f64, at: Option<f64>, at_kind: &'static str) -> Self {
        let margin = threshold - value;
        Verdict { name: name.into(), pass: value < threshold, value, threshold, at, at_kind, margin }
    }

    fn flag(name: &str, ok: bool) -> Self {
        let value = if ok { 1.0 } else { 0.0 };
        Verdict { name: name.into(), pass: ok, value, threshold: 1.0, at: None, at_kind: "none", margin: value - 1.0 }
    }

    pub fn describe(&self) -> String {
        let at = match self.at {
            Some(a) => format!(" at {}={a:.6e}", self.at_kind),
            None => String::new(),
        };
        format!(
            "{} {}: value {:.6e}, threshold {:.6e}{at}, margin {:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold,
            self.margin
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub stage: Stage,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| PipelineError::Io { path: path.clone(), source })?;
    Ok(name.to_string())
}

fn write_json(dir: &Path, name: &str, doc: &Value) -> Result<String> {
    write_file(dir, name, &to_sorted_json(doc)?)
}

fn document(stage: Stage, cfg: &RunConfig, verdicts: &[Verdict], body: Value) -> Value {
    let mut doc = json!({
        "stage": stage.name(),
        "params": cfg.shock,
        "pass": verdicts.iter().all(|v| v.pass),
        "verdicts": verdicts,
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    doc
}

// ---------------------------------------------------------------- stages

pub fn endstates_stage(cfg: &RunConfig, es: &EndStates, dir: &Path) -> Result<Outcome> {
    let p = &cfg.shock;
    let (rh_mass, rh_mom) = es.rh_residuals();
    let sub = check_subsonicity_conditions(es, p);
    let p0 = critical_point_p0(es);
    let a_exp = flux_constant_a_expansion(p.p_minus, p.epsilon, p.gamma)?;
    let verdicts = vec![
        Verdict::at_most("rh_mass_residual", rh_mass, RH_TOL, None, "none"),
        Verdict::at_most("rh_momentum_residual", rh_mom, RH_TOL, None, "none"),
        Verdict::flag("lax2", es.lax2),
        Verdict::flag("subsonicity_implications", sub.first_implication_holds && sub.second_implication_holds),
        Verdict::flag("p0_between_end_states", es.p_plus < p0 && p0 < es.p_minus),
    ];
    let body = json!({
        "end_states": es,
        "P0": p0,
        "P0_expansion": critical_point_expansion(p.p_minus, p.epsilon),
        "A_expansion": a_exp,
        "rh_residuals": { "mass": rh_mass, "momentum": rh_mom },
        "subsonicity": sub,
        "linear_rates": linear_rates(p, es),
    });
    let doc = document(Stage::Endstates, cfg, &verdicts, body);
    let artifacts = vec![write_json(dir, "endstates.json", &doc)?];
    Ok(Outcome { stage: Stage::Endstates, verdicts, artifacts })
}

pub fn solve_domain_profile(cfg: &RunConfig, es: &EndStates, half_length: f64, n: usize) -> Result<WaveProfile> {
    let opts = SolverOptions { tol: cfg.profile.tol, max_iter: cfg.profile.max_iter };
    Ok(solve_profile_with(&cfg.shock, es, half_length, n, opts)?)
}

pub fn profile_stage(cfg: &RunConfig, es: &EndStates, prof: &WaveProfile, dir: &Path) -> Result<Outcome> {
    let eps = cfg.shock.epsilon;
    let mono = prof.monotonicity();
    let verdicts = vec![
        Verdict::at_most("residual_inf", prof.residual_inf, PROFILE_RESIDUAL_TOL, Some(prof.residual_y), "y"),
        Verdict::at_most("bc_mismatch", prof.bc_mismatch, PROFILE_BC_TOL, Some(prof.grid[0]), "y"),
        Verdict::below("max_dP", mono.max_dp, 0.0, Some(mono.argmax_y), "y"),
    ];
    let decay = decay_rates(prof, &cfg.shock, es);
    let body = json!({
        "L": prof.half_length,
        "n_points": prof.len(),
        "h": prof.spacing(),
        "newton_iterations": prof.newton_iterations,
        "residual_inf": prof.residual_inf,
        "bc_mismatch": prof.bc_mismatch,
        "monotonicity": mono,
        "max_abs_dP": prof.max_abs_dp(),
        "max_abs_d2P": prof.max_abs_d2p(),
        "dP_over_eps2": prof.max_abs_dp() / (eps * eps),
        "d2P_over_eps_dP": prof.max_abs_d2p() / (eps * prof.max_abs_dp()),
        "flux_identity_defect": prof.flux_identity_defect(es),
        "within_end_states": prof.within_end_states(es, 1e-10),
        "decay": decay,
    });
    let doc = document(Stage::Profile, cfg, &verdicts, body);
    let artifacts = vec![write_file(dir, "profile.csv", &prof.to_csv())?, write_json(dir, "profile.json", &doc)?];
    Ok(Outcome { stage: Stage::Profile, verdicts, artifacts })
}

pub fn borders(cfg: &RunConfig, es: &EndStates) -> [SpectrumCurve; 2] {
    fredholm_borders(es, &cfg.shock, cfg.spectra.xi_max, cfg.spectra.n_xi)
}

pub fn essential_stage(cfg: &RunConfig, curves: &[SpectrumCurve; 2], dir: &Path) -> Result<Outcome> {
    let v = essential_stability_verdict(curves);
    let touches = v.axis_touches as f64;
    let verdicts = vec![
        Verdict::at_most("max_re_lambda", v.max_re, STABLE_TOL, Some(v.argmax_xi), "xi"),
        Verdict::at_most("axis_touches_off_origin", touches, 0.0, Some(v.argmax_xi), "xi"),
    ];
    let body = json!({
        "xi_max": cfg.spectra.xi_max,
        "n_xi": cfg.spectra.n_xi,
        "essential": v,
        "alpha_beta": curves.iter().map(|c| json!({"side": c.end_state_tag, "alpha": c.alpha, "beta": c.beta})).collect::<Vec<_>>(),
        "max_root_residual": curves.iter().map(|c| c.max_root_residual(&cfg.shock)).fold(0.0, f64::max),
        "max_vieta_defect": curves.iter().map(|c| c.max_vieta_defect(&cfg.shock)).fold(0.0, f64::max),
        "max_jump_ratio": curves.iter().map(|c| c.max_jump_ratio()).fold(0.0, f64::max),
    });
    let doc = document(Stage::Essential, cfg, &verdicts, body);
    let artifacts = vec![write_file(dir, "essential.csv", &curves_csv(curves))?, write_json(dir, "essential.json", &doc)?];
    Ok(Outcome { stage: Stage::Essential, verdicts, artifacts })
}

/// Scalars carried into `all.json` and sweep rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSummary {
    pub max_re_point: f64,
    pub spectral_margin: f64,
    pub zero_mode_residual: f64,
}

pub fn point_stage(cfg: &RunConfig, es: &EndStates, curves: &[SpectrumCurve; 2], dir: &Path) -> Result<(Outcome, PointSummary)> {
    let e = &cfg.eigen;
    // the operator's coefficients and the sampled translation mode share one grid
    let prof = solve_domain_profile(cfg, es, e.half_length, e.n)?;
    let op = assemble_integrated(&prof, &cfg.shock, es, Closure::Dirichlet)?;
    let opts = EigenOptions { localization_threshold: e.localization_threshold, max_dense: e.max_dense, ..Default::default() };
    let mut report = eigen_solve(&op, &opts)?;
    let orig = assemble_original(&prof, &cfg.shock, es, Closure::Dirichlet)?;
    let zero = zero_mode_residual(&orig, &prof, &cfg.shock)?;
    report.zero_mode_residual = Some(zero);
    let vopts = VerdictOptions { tol_margin: e.tol_margin, ..Default::default() };
    let verdict = stability_verdict(&report, curves, &vopts);

    let (worst_re, worst_im) = match verdict.offending {
        Some(o) => (o.lambda.re, Some(o.lambda.im)),
        None => (-verdict.spectral_margin, None),
    };
    let verdicts = vec![
        Verdict::at_most("point_spectrum_max_re", worst_re, -e.tol_margin, worst_im, "im_lambda"),
        Verdict::at_most("eigen_residual", report.max_residual, EIGEN_RESIDUAL_TOL, None, "none"),
        Verdict::at_most("zero_mode_residual", zero, ZERO_MODE_TOL, None, "none"),
    ];
    let body = json!({
        "L": e.half_length,
        "n": e.n,
        "matrix_dim": report.matrix_dim,
        "operator": report.kind,
        "max_re_point": report.max_re_point,
        "spectral_margin": verdict.spectral_margin,
        "n_point": verdict.n_point,
        "n_artifacts": verdict.n_artifacts,
        "offending": verdict.offending,
        "max_residual": report.max_residual,
        "conjugate_defect": report.conjugate_defect,
        "matrix_norm": report.matrix_norm,
        "zero_mode_residual": zero,
        "localization_threshold": report.localization_threshold,
        "classification_method": report.classification_method,
        "point_eigenvalues": report
            .point_candidates
            .iter()
            .map(|&q| json!({"re": report.eigenvalues[q].re, "im": report.eigenvalues[q].im, "localization": report.localization[q], "class": verdict.classes[q].label()}))
            .collect::<Vec<_>>(),
    });
    let doc = document(Stage::Point, cfg, &verdicts, body);
    let artifacts =
        vec![write_file(dir, "point.csv", &eigen_csv(&report, &verdict.classes))?, write_json(dir, "point.json", &doc)?];
    let summary =
        PointSummary { max_re_point: report.max_re_point, spectral_margin: verdict.spectral_margin, zero_mode_residual: zero };
    Ok((Outcome { stage: Stage::Point, verdicts, artifacts }, summary))
}

pub fn energy_stage(cfg: &RunConfig, es: &EndStates, prof: &WaveProfile, dir: &Path) -> Result<(Outcome, EnergyReport)> {
    let report = energy_report(prof, es, &cfg.shock)?;
    let mut verdicts: Vec<Verdict> = report
        .checks
        .iter()
        .map(|c| Verdict {
            name: c.name.clone(),
            pass: c.pass,
            value: c.value,
            threshold: c.value - c.margin,
            at: Some(c.worst_y),
            at_kind: "y",
            margin: c.margin,
        })
        .collect();
    verdicts.push(Verdict::at_most("f1_f2_form_defect", report.form_defect, FORM_DEFECT_TOL, None, "none"));
    verdicts.push(Verdict::at_most("g_expanded_defect", report.g_expanded_defect, G_EXPANDED_TOL, None, "none"));
    let body = json!({ "energy": report });
    let doc = document(Stage::Energy, cfg, &verdicts, body);
    let artifacts = vec![write_file(dir, "energy.csv", &energy_csv(prof, &report))?, write_json(dir, "energy.json", &doc)?];
    Ok((Outcome { stage: Stage::Energy, verdicts, artifacts }, report))
}

// ---------------------------------------------------------------- drivers

/// Everything `all` produces, kept for the sweep summary.
#[derive(Debug, Clone)]
pub struct FullRun {
    pub outcomes: Vec<Outcome>,
    pub es: EndStates,
    pub max_abs_dp: f64,
    pub max_abs_d2p: f64,
    pub theta: [f64; 2],
    pub point: PointSummary,
    pub energy: EnergyReport,
}

impl FullRun {
    pub fn pass(&self) -> bool {
        self.outcomes.iter().all(Outcome::pass)
    }
}

pub fn run_all(cfg: &RunConfig, dir: &Path) -> Result<FullRun> {
    let es = lax_end_states(&cfg.shock)?;
    let mut outcomes = vec![endstates_stage(cfg, &es, dir)?];
    let prof = solve_domain_profile(cfg, &es, cfg.domain.half_length, cfg.domain.n_points)?;
    outcomes.push(profile_stage(cfg, &es, &prof, dir)?);
    let curves = borders(cfg, &es);
    outcomes.push(essential_stage(cfg, &curves, dir)?);
    let (point_outcome, point) = point_stage(cfg, &es, &curves, dir)?;
    outcomes.push(point_outcome);
    let (energy_outcome, energy) = energy_stage(cfg, &es, &prof, dir)?;
    outcomes.push(energy_outcome);

    let decay = decay_rates(&prof, &cfg.shock, &es);
    let run = FullRun {
        es,
        max_abs_dp: prof.max_abs_dp(),
        max_abs_d2p: prof.max_abs_d2p(),
        theta: [decay.minus.theta, decay.plus.theta],
        point,
        energy,
        outcomes,
    };
    let doc = json!({
        "stage": "all",
        "params": cfg.shock,
        "pass": run.pass(),
        "stages": run.outcomes.iter().map(|o| json!({"stage": o.stage.name(), "pass": o.pass(), "artifacts": o.artifacts})).collect::<Vec<_>>(),
        "failures": run.outcomes.iter().flat_map(|o| o.failures().map(move |v| json!({"stage": o.stage.name(), "verdict": v}))).collect::<Vec<_>>(),
        "max_re_point": point.max_re_point,
        "c_bar": run.energy.c_bar,
    });
    write_json(dir, "all.json", &doc)?;
    Ok(run)
}

/// Runs one stage (or `all`) and returns the outcomes that decide the exit code.
pub fn run_stage(stage: Stage, cfg: &RunConfig, dir: &Path, jobs: usize) -> Result<Vec<Outcome>> {
    let es = || lax_end_states(&cfg.shock);
    match stage {
        Stage::Endstates => Ok(vec![endstates_stage(cfg, &es()?, dir)?]),
        Stage::Profile => {
            let es = es()?;
            let prof = solve_domain_profile(cfg, &es, cfg.domain.half_length, cfg.domain.n_points)?;
            Ok(vec![profile_stage(cfg, &es, &prof, dir)?])
        }
        // end-state data only, no profile solve
        Stage::Essential => Ok(vec![essential_stage(cfg, &borders(cfg, &es()?), dir)?]),
        Stage::Point => {
            let es = es()?;
            Ok(vec![point_stage(cfg, &es, &borders(cfg, &es), dir)?.0])
        }
        Stage::Energy => {
            let es = es()?;
            let prof = solve_domain_profile(cfg, &es, cfg.domain.half_length, cfg.domain.n_points)?;
            Ok(vec![energy_stage(cfg, &es, &prof, dir)?.0])
        }
        Stage::All => Ok(run_all(cfg, dir)?.outcomes),
        Stage::Sweep => run_sweep(cfg, dir, jobs),
    }
}

// ---------------------------------------------------------------- sweep

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// (max − min) / max|·| over a set of estimates.
pub fn relative_variation(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (hi - lo) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub pass: bool,
    pub max_abs_dp: f64,
    pub d2p_over_dp: f64,
    pub a_expansion_error: f64,
    pub p0_expansion_error: f64,
    pub c_bar: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub max_re_point: f64,
    pub zero_mode_residual: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
}

pub fn sweep_row(cfg: &RunConfig, run: &FullRun) -> Result<SweepRow> {
    let p = &cfg.shock;
    let a_exp = flux_constant_a_expansion(p.p_minus, p.epsilon, p.gamma)?;
    Ok(SweepRow {
        epsilon: p.epsilon,
        pass: run.pass(),
        max_abs_dp: run.max_abs_dp,
        d2p_over_dp: run.max_abs_d2p / run.max_abs_dp,
        a_expansion_error: (run.es.a - a_exp).abs(),
        p0_expansion_error: (critical_point_p0(&run.es) - critical_point_expansion(p.p_minus, p.epsilon)).abs(),
        c_bar: run.energy.c_bar,
        c1: run.energy.c1,
        c2: run.energy.c2,
        c3: run.energy.c3,
        c4: run.energy.c4,
        max_re_point: run.point.max_re_point,
        zero_mode_residual: run.point.zero_mode_residual,
        theta_minus: run.theta[0],
        theta_plus: run.theta[1],
    })
}

fn member_dir(dir: &Path, eps: f64) -> PathBuf {
    dir.join("sweep").join(format!("eps_{eps}"))
}

/// Runs `all` for every ε of the sweep, each member in its own subdirectory.
pub fn run_sweep(cfg: &RunConfig, dir: &Path, jobs: usize) -> Result<Vec<Outcome>> {
    let eps = cfg.sweep.clone().ok_or_else(|| ConfigError {
        line: None,
        message: "`sweep` needs `sweep.epsilon = e1, e2, ...` in the config".into(),
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Io { path: dir.to_path_buf(), source: std::io::Error::other(e) })?;
    let members: Vec<(f64, Result<(RunConfig, FullRun)>)> = pool.install(|| {
        eps.par_iter()
            .map(|&e| {
                let sub = member_dir(dir, e);
                let res = cfg.member(e).map_err(PipelineError::from).and_then(|m| run_all(&m, &sub).map(|r| (m, r)));
                if let Err(err) = &res {
                    // best effort: the member's error is also propagated below
                    let _ = write_json(&sub, "error.json", &err.record(Stage::Sweep));
                }
                (e, res)
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let mut first_err = None;
    for (e, res) in members {
        match res {
            Ok((m, run)) => {
                rows.push(sweep_row(&m, &run)?);
                outcomes.extend(run.outcomes);
            }
            Err(err) => {
                eprintln!("sweep member eps={e}: {err}");
                first_err.get_or_insert(err);
            }
        }
    }

    let mut csv = qhd_lab_core::export::CsvTable::new(&[
        "epsilon",
        "pass",
        "max_abs_dP",
        "d2P_over_dP",
        "A_expansion_error",
        "P0_expansion_error",
        "C_bar",
        "c1",
        "c2",
        "c3",
        "c4",
        "max_re_point",
        "zero_mode_residual",
        "theta_minus",
        "theta_plus",
    ]);
    use qhd_lab_core::export::fmt_f64;
    for r in &rows {
        let mut cells = vec![fmt_f64(r.epsilon), r.pass.to_string()];
        cells.extend(
            [
                r.max_abs_dp,
                r.d2p_over_dp,
                r.a_expansion_error,
                r.p0_expansion_error,
                r.c_bar,
                r.c1,
                r.c2,
                r.c3,
                r.c4,
                r.max_re_point,
                r.zero_mode_residual,
                r.theta_minus,
                r.theta_plus,
            ]
            .iter()
            .map(|v| fmt_f64(*v)),
        );
        csv.row(&cells);
    }
    write_file(dir, "sweep.csv", &csv.finish())?;

    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let e = col(|r| r.epsilon);
    let slopes = if rows.len() >= 2 {
        json!({
            "max_abs_dP": loglog_slope(&e, &col(|r| r.max_abs_dp)),
            "d2P_over_dP": loglog_slope(&e, &col(|r| r.d2p_over_dp)),
            "A_expansion_error": loglog_slope(&e, &col(|r| r.a_expansion_error)),
            "P0_expansion_error": loglog_slope(&e, &col(|r| r.p0_expansion_error)),
            "theta_plus": loglog_slope(&e, &col(|r| r.theta_plus)),
        })
    } else {
        Value::Null
    };
    let doc = json!({
        "stage": "sweep",
        "params": cfg.shock,
        "epsilon": eps,
        "rows": rows,
        "slopes": slopes,
        "variation": {
            "C_bar": relative_variation(&col(|r| r.c_bar)),
            "c1": relative_variation(&col(|r| r.c1)),
            "c2": relative_variation(&col(|r| r.c2)),
            "c3": relative_variation(&col(|r| r.c3)),
            "c4": relative_variation(&col(|r| r.c4)),
        },
        "pass": first_err.is_none() && rows.iter().all(|r| r.pass),
        "observed_pass_range": rows.iter().filter(|r| r.pass).map(|r| r.epsilon).collect::<Vec<_>>(),
    });
    write_json(dir, "sweep.json", &doc)?;
    match first_err {
        Some(err) => Err(err),
        None => Ok(outcomes),
    }
}
