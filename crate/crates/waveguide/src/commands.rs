//! One function per CLI command. Each writes its artifacts into `out` and
//! returns the paths it created.

use std::f64::consts::PI;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use waveguide_core::asymptotics::first_order;
use waveguide_core::designer::{run_design, DesignConfig, DesignError, DesignState, FemOracle};
use waveguide_core::geometry::{validate_spec, Chimney, MeshOptions, WaveguideSpec};
use waveguide_core::obstruction::{default_truncation, obstruction_bound, ObstructionError};
use waveguide_core::oracle_fd::{fd_solve_snapped, richardson, snap_spec, FdError, Richardson, SnappedSpec};
use waveguide_core::pipeline::{solve_spec, PipelineError, SolvedSpec};
use waveguide_core::scattering::{energy_volume_identity, extract_by_flux, ScatteringResult};
use waveguide_core::solver::scattered_field;
use waveguide_core::C64;

use crate::config::{Command, RunConfig, SweepMode};
use crate::io::{self as fmt, OracleRow, Record};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Solver(_) => 3,
            RunError::NonConvergence(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Io(_) => "io",
            RunError::Solver(_) => "solver",
            RunError::NonConvergence(_) => "non_convergence",
        }
    }

    /// `kind=<kind> code=<n> reason="<message>"` on a single line.
    pub fn machine_line(&self) -> String {
        let reason = self.to_string().replace('\n', " ").replace('"', "'");
        format!("kind={} code={} reason=\"{}\"", self.kind(), self.exit_code(), reason)
    }
}

impl From<PipelineError> for RunError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Mesh(m) => RunError::Config(m.to_string()),
            other => RunError::Solver(other.to_string()),
        }
    }
}

impl From<FdError> for RunError {
    fn from(e: FdError) -> Self {
        match e {
            FdError::Modal(_) | FdError::Factor(_) => RunError::Solver(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<ObstructionError> for RunError {
    fn from(e: ObstructionError) -> Self {
        match e {
            ObstructionError::NotConverged { .. } => RunError::NonConvergence(e.to_string()),
            ObstructionError::Mesh(_) | ObstructionError::BadTruncation { .. } | ObstructionError::UntaggedEnds => {
                RunError::Config(e.to_string())
            }
            other => RunError::Solver(other.to_string()),
        }
    }
}

fn checked(spec: &WaveguideSpec) -> Result<(), RunError> {
    validate_spec(spec).map(|_| ()).map_err(|v| {
        RunError::Config(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    })
}

/// Dispatches on `config.command`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    match config.command {
        Command::Solve => solve(config, out),
        Command::Design => design(config, out),
        Command::Predict => predict(config, out),
        Command::Obstruction => obstruction(config, out),
        Command::Sweep => sweep(config, out),
        Command::OracleCompare => oracle_compare(config, out),
    }
}

fn coefficient_record(solved: &SolvedSpec) -> Result<Record, RunError> {
    let field = solved.field();
    let scattered = scattered_field(&field, solved.spec.k);
    let vi = energy_volume_identity(&scattered, &solved.basis, &solved.result)
        .map_err(|e| RunError::Solver(e.to_string()))?;
    let mut result: ScatteringResult = solved.result;
    result.energy_integral_defect = Some(vi.relative_defect());
    let (flux_minus, flux_plus) = extract_by_flux(&field, &solved.basis);

    let mut r = Record::new();
    r.spec(&solved.spec)
        .real("trunc_half_length", solved.spec.trunc_half_length)
        .int("dtn_terms", solved.spec.dtn_terms)
        .int("n_nodes", solved.mesh.n_nodes())
        .real("mesh_h_max", solved.mesh.h_max())
        .real("mesh_h_min", solved.mesh.h_min())
        .complex("s_minus", result.s_minus)
        .complex("s_plus", result.s_plus)
        .complex("R", result.reflection())
        .complex("T", result.transmission())
        .real("energy_defect", result.energy_defect)
        .real("optical_defect", result.optical_defect)
        .real("energy_integral_defect", vi.relative_defect())
        .real("energy_integral_defect_abs", vi.defect)
        .real("volume_integral", vi.volume)
        .real("volume_tail", vi.tail)
        .real("gradient_norm_sq", vi.gradient_norm_sq)
        .complex("flux_s_minus", flux_minus)
        .complex("flux_s_plus", flux_plus)
        .real("residual", solved.residual);
    Ok(r)
}

fn write_solution(solved: &SolvedSpec, out: &Path, hdr: &str) -> Result<Vec<PathBuf>, RunError> {
    let record = coefficient_record(solved)?;
    Ok(vec![
        fmt::write_artifact(out, "coefficients.txt", &record.render(&fmt::header("coefficient record", hdr)))?,
        fmt::write_artifact(
            out,
            "field.txt",
            &fmt::field_text(&solved.mesh, &solved.values, &fmt::header("field export", hdr)),
        )?,
        fmt::write_artifact(out, "mesh.txt", &fmt::mesh_text(&solved.mesh, &fmt::header("mesh export", hdr)))?,
    ])
}

pub fn solve(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let spec = config.waveguide_spec();
    checked(&spec)?;
    let solved = solve_spec(&spec, &config.mesh_options())?;
    write_solution(&solved, out, &config.to_toml())
}

fn design_oracle(config: &RunConfig, design: &DesignConfig) -> FemOracle {
    let template = config.waveguide_spec().with_chimneys(Vec::new());
    let mut oracle = FemOracle::new(template, design.positions, design.eps);
    oracle.options.corner_levels = config.spec.corner_levels;
    oracle.options.transverse_h = config.spec.transverse_h;
    oracle
}

/// Runs the loop; `Ok(Err(state))` carries an unconverged or wrong-branch run.
fn design_run(config: &RunConfig, design: &DesignConfig) -> Result<Result<DesignState, (DesignState, RunError)>, RunError> {
    let mut oracle = design_oracle(config, design);
    match run_design(design, &mut oracle) {
        Ok(state) => Ok(Ok(state)),
        Err(DesignError::NotConverged(state)) => {
            let msg = format!(
                "design did not converge in {} iterations (last step {:e})",
                state.iteration,
                state.last_step()
            );
            Ok(Err((*state, RunError::NonConvergence(msg))))
        }
        Err(DesignError::WrongBranch(state)) => {
            let msg = format!("design converged to |T| = {} (wrong branch)", state.final_transmission().norm());
            Ok(Err((*state, RunError::NonConvergence(msg))))
        }
        Err(e @ (DesignError::Diverged { .. } | DesignError::NearResonant { .. })) => {
            Err(RunError::NonConvergence(e.to_string()))
        }
        Err(e @ (DesignError::DegeneratePlacement { .. } | DesignError::InvalidConfig(_))) => {
            Err(RunError::Config(e.to_string()))
        }
        Err(DesignError::Oracle(e)) => Err(RunError::from(e)),
    }
}

pub fn design(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let hdr = config.to_toml();
    let dc = config.design_config();
    let outcome = design_run(config, &dc)?;
    let state = match &outcome {
        Ok(s) => s,
        Err((s, _)) => s,
    };
    let mut files = vec![fmt::write_artifact(
        out,
        "convergence.csv",
        &fmt::convergence_csv(state, &fmt::header("design convergence log", &hdr)),
    )?];
    if let Err((_, e)) = outcome {
        return Err(e);
    }
    let oracle = design_oracle(config, &dc);
    let final_spec = oracle.spec(&state.heights);
    let solved = solve_spec(&final_spec, &oracle.options)?;
    files.extend(write_solution(&solved, out, &hdr)?);
    let mut spec_text = fmt::header("final spec", &hdr);
    spec_text.push_str(&fmt::spec_toml(&final_spec, &oracle.options));
    files.push(fmt::write_artifact(out, "final_spec.toml", &spec_text)?);
    Ok(files)
}

pub fn predict(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let spec = config.waveguide_spec();
    checked(&spec)?;
    let p = first_order(&spec).map_err(|e| RunError::Config(e.to_string()))?;
    let eps = spec.width().unwrap_or(0.0);
    let mut r = Record::new();
    r.spec(&spec);
    for (m, (c, a)) in spec.chimneys.iter().zip(&p.a).enumerate() {
        r.real(format!("tan_kh_{m}"), (spec.k * c.height).tan());
        r.complex(&format!("a_{m}"), *a);
    }
    r.complex("s1_minus", p.s1_minus)
        .complex("s1_plus", p.s1_plus)
        .complex("eps_s1_minus", p.s1_minus * eps)
        .complex("eps_s1_plus", p.s1_plus * eps);
    let text = r.render(&fmt::header("first-order prediction", &config.to_toml()));
    Ok(vec![fmt::write_artifact(out, "first_order.txt", &text)?])
}

pub fn obstruction(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let spec = config.waveguide_spec();
    let (dl, dr) = default_truncation(&spec.chimneys);
    let xl = config.obstruction.x_minus.unwrap_or(dl);
    let xr = config.obstruction.x_plus.unwrap_or(dr);
    let res = obstruction_bound(&spec, xl, xr, &config.eigen_options())?;
    let mut r = Record::new();
    r.real("mu1", res.mu1)
        .real("lambda1", res.lambda1)
        .real("k_star_bound", res.k_star_bound);
    match res.minmax_upper {
        Some(v) => r.real("minmax_upper", v),
        None => r.text("minmax_upper", "none"),
    };
    r.real("x_minus", res.x_left)
        .real("x_plus", res.x_right)
        .real("mesh_h", res.mesh_h)
        .int("n_nodes", res.n_nodes)
        .real("residual", res.residual)
        .real("rayleigh_quotient", res.rayleigh_quotient)
        .real("end_mean_minus", res.end_means[0])
        .real("end_mean_plus", res.end_means[1]);
    let text = r.render(&fmt::header("obstruction bound", &config.to_toml()));
    Ok(vec![fmt::write_artifact(out, "obstruction.txt", &text)?])
}

pub fn sweep(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let hdr = config.to_toml();
    match config.sweep.mode {
        SweepMode::Design => sweep_design(config, out, &hdr),
        SweepMode::Remainder => sweep_remainder(config, out, &hdr),
    }
}

fn sweep_design(config: &RunConfig, out: &Path, hdr: &str) -> Result<Vec<PathBuf>, RunError> {
    let runs: Vec<Result<(DesignState, bool), RunError>> = config
        .sweep
        .eps
        .par_iter()
        .map(|&eps| {
            let mut dc = config.design_config();
            dc.eps = eps;
            dc.max_iter = config.sweep.max_iter;
            match design_run(config, &dc)? {
                Ok(s) => Ok((s, true)),
                Err((s, _)) => Ok((s, false)),
            }
        })
        .collect();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut status = Record::new();
    for (i, (run, &eps)) in runs.into_iter().zip(&config.sweep.eps).enumerate() {
        let (state, ok) = run?;
        let last = state.last();
        rows.push((eps, last.s_minus, last.s_plus));
        status
            .real(format!("eps_{i}"), eps)
            .int(format!("iterations_{i}"), state.iteration)
            .text(format!("converged_{i}"), if ok { "true" } else { "false" })
            .real(format!("tau_max_{i}"), state.tau_max());
        let title = format!("design convergence log (eps = {eps})");
        files.push(fmt::write_artifact(
            out,
            &format!("convergence_{i}.csv"),
            &fmt::convergence_csv(&state, &fmt::header(&title, hdr)),
        )?);
    }
    files.push(fmt::write_artifact(out, "sweep.csv", &fmt::sweep_csv(&rows, &fmt::header("eps sweep", hdr)))?);
    files.push(fmt::write_artifact(
        out,
        "sweep_status.txt",
        &status.render(&fmt::header("eps sweep status", hdr)),
    )?);
    Ok(files)
}

/// Spec with all design chimneys at one common height.
pub fn uniform_spec(config: &RunConfig, eps: f64, height: f64) -> WaveguideSpec {
    let positions = config.design.positions.expect("resolved config");
    let chimneys = positions.iter().map(|&x| Chimney::new(x, height, eps)).collect();
    config.waveguide_spec().with_chimneys(chimneys)
}

fn sweep_remainder(config: &RunConfig, out: &Path, hdr: &str) -> Result<Vec<PathBuf>, RunError> {
    let height = config.sweep.height.unwrap_or(PI / config.k());
    let results: Vec<Result<(f64, C64, C64), RunError>> = config
        .sweep
        .eps
        .par_iter()
        .map(|&eps| {
            let spec = uniform_spec(config, eps, height);
            checked(&spec)?;
            let s = solve_spec(&spec, &config.mesh_options())?;
            Ok((eps, s.result.s_minus, s.result.s_plus))
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(vec![fmt::write_artifact(
        out,
        "sweep.csv",
        &fmt::sweep_csv(&rows, &fmt::header("eps sweep at fixed heights", hdr)),
    )?])
}

/// Both solvers on the snapped spec at three resolutions each.
pub struct OracleComparison {
    pub snapped: SnappedSpec,
    pub rows: Vec<OracleRow>,
    /// `[fem, fd]` extrapolations of `s-`.
    pub minus: [Richardson; 2],
    /// `[fem, fd]` extrapolations of `s+`.
    pub plus: [Richardson; 2],
}

impl OracleComparison {
    /// Limits agree within the combined error bars, for both coefficients.
    pub fn agrees(&self) -> bool {
        [&self.minus, &self.plus]
            .iter()
            .all(|[a, b]| (a.limit - b.limit).norm() <= a.error_bar + b.error_bar)
    }
}

pub fn compare_oracles(config: &RunConfig) -> Result<OracleComparison, RunError> {
    let o = &config.oracle;
    let spec = config.waveguide_spec();
    checked(&spec)?;
    let snapped = snap_spec(&spec, o.snap_delta, config.tolerances.snap)?;
    checked(&snapped.spec)?;
    let solved: Vec<Result<OracleRow, RunError>> = (0..6)
        .into_par_iter()
        .map(|job| {
            let level = job % 3;
            if job < 3 {
                let mut s = snapped.spec.clone();
                s.mesh_target_h = o.fem_h[level];
                s.min_cells_across_chimney = o.fem_min_cells[level];
                let opts = MeshOptions {
                    corner_levels: o.fem_corner_levels[level],
                    ..MeshOptions::default()
                };
                let r = solve_spec(&s, &opts)?.result;
                Ok(OracleRow {
                    solver: "fem",
                    level,
                    resolution: o.fem_h[level],
                    s_minus: r.s_minus,
                    s_plus: r.s_plus,
                    energy_defect: r.energy_defect,
                })
            } else {
                let grid = SnappedSpec {
                    spec: snapped.spec.clone(),
                    delta: o.fd_deltas[level],
                    max_snap: snapped.max_snap,
                };
                let r = fd_solve_snapped(&grid)?.result;
                Ok(OracleRow {
                    solver: "fd",
                    level,
                    resolution: o.fd_deltas[level],
                    s_minus: r.s_minus,
                    s_plus: r.s_plus,
                    energy_defect: r.energy_defect,
                })
            }
        })
        .collect();
    let rows = solved.into_iter().collect::<Result<Vec<_>, _>>()?;
    let extrap = |range: std::ops::Range<usize>, plus: bool| {
        let v: Vec<C64> = rows[range].iter().map(|r| if plus { r.s_plus } else { r.s_minus }).collect();
        richardson(v[0], v[1], v[2])
    };
    Ok(OracleComparison {
        minus: [extrap(0..3, false), extrap(3..6, false)],
        plus: [extrap(0..3, true), extrap(3..6, true)],
        snapped,
        rows,
    })
}

pub fn oracle_compare(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let hdr = config.to_toml();
    let cmp = compare_oracles(config)?;
    let mut r = Record::new();
    r.spec(&cmp.snapped.spec).real("max_snap", cmp.snapped.max_snap);
    for (name, pair) in [("s_minus", &cmp.minus), ("s_plus", &cmp.plus)] {
        for (solver, x) in ["fem", "fd"].iter().zip(pair.iter()) {
            r.complex(&format!("{solver}_limit_{name}"), x.limit)
                .real(format!("{solver}_order_{name}"), x.order)
                .real(format!("{solver}_error_bar_{name}"), x.error_bar);
        }
        r.real(format!("limit_difference_{name}"), (pair[0].limit - pair[1].limit).norm())
            .real(format!("combined_error_bar_{name}"), pair[0].error_bar + pair[1].error_bar);
    }
    r.text("agree", if cmp.agrees() { "true" } else { "false" });
    Ok(vec![
        fmt::write_artifact(out, "oracle_compare.csv", &fmt::oracle_csv(&cmp.rows, &fmt::header("oracle comparison", &hdr)))?,
        fmt::write_artifact(out, "oracle_limits.txt", &r.render(&fmt::header("oracle extrapolated limits", &hdr)))?,
    ])
}
