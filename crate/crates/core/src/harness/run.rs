//! Executes a [`RunConfig`]: either a named preset or a single forward run
//! with diagnostics, snapshots and optional molecule checks.

use std::path::{Path, PathBuf};

use super::config::{InitialData, RunConfig};
use super::data::{ball_indicator, cosine_bump, random_smooth};
use super::io::{
    format_number, write_csv, write_diagnostics_csv, write_snapshot, DiagnosticsRecord,
};
use super::presets::{run_preset, Preset, PresetOptions, PresetOutcome, LEDGER_COLUMNS};
use crate::analysis::{gradient_energy, sobolev_alpha_energy, NormReport, NormSettings};
use crate::error::{Error, Result};
use crate::evolution::{
    run_forward_recording, SolverState, SteadyVelocity, TimeReversed, VelocityField, VelocitySource,
};
use crate::molecule::{
    iteration_schedule, make_molecule, run_molecule_experiment, transfer_residual, LedgerReport,
};
use crate::spectral::Field;

#[derive(Debug)]
pub enum RunOutcome {
    Preset(PresetOutcome),
    Single(Box<SingleRun>),
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        match self {
            RunOutcome::Preset(p) => p.pass(),
            RunOutcome::Single(s) => s.ledger.as_ref().is_none_or(LedgerReport::pass),
        }
    }
}

#[derive(Debug)]
pub struct SingleRun {
    pub steps: usize,
    pub final_time: f64,
    pub final_norms: NormReport,
    pub transfer_residual: Option<f64>,
    pub ledger: Option<LedgerReport>,
    pub files: Vec<PathBuf>,
}

pub fn initial_field(cfg: &RunConfig) -> Field {
    let g = cfg.grid;
    let mut center = [0.5 * g.box_length(); 2];
    if g.dim() == 1 {
        center[1] = 0.0;
    }
    match cfg.initial {
        InitialData::RandomSmooth => random_smooth(g, cfg.seed, 4, 1.0),
        InitialData::Bump => cosine_bump(g, center, 4),
        InitialData::Disk => ball_indicator(g, center, 0.25 * g.box_length()),
    }
}

/// Runs `cfg`, writing into `out_dir` (or the configured output directory).
pub fn run_config(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let dir = out_dir.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf);
    if let Some(name) = &cfg.preset {
        let preset: Preset = name.parse()?;
        let opts = PresetOptions {
            out_dir: dir,
            n: Some(cfg.grid.points_per_axis()),
            alpha: Some(cfg.equation.alpha),
            dt: Some(cfg.dt),
            seed: cfg.seed,
        };
        return run_preset(preset, &opts).map(RunOutcome::Preset);
    }
    std::fs::create_dir_all(&dir)?;
    single_run(cfg, &dir).map(|s| RunOutcome::Single(Box::new(s)))
}

fn single_run(cfg: &RunConfig, dir: &Path) -> Result<SingleRun> {
    let theta0 = initial_field(cfg);
    let spec = &cfg.equation;
    let shear = match spec.velocity_source {
        VelocitySource::Prescribed => Some(SteadyVelocity::shear(
            cfg.grid,
            cfg.shear_amplitude,
            cfg.shear_wavenumber,
        )?),
        VelocitySource::SqgCoupled => None,
    };
    let velocity = shear.as_ref().map(|v| v as &dyn VelocityField);
    let settings = NormSettings::cheap(spec.alpha);
    let mut files = Vec::new();

    let mut records = Vec::new();
    let mut previous: Option<(f64, f64, f64)> = None;
    let mut failure: Option<Error> = None;
    let mut last_norms = None;
    let every = cfg.output.csv_every;
    let snap_every = cfg.output.snapshot_every;
    let mut observe = |s: &SolverState| {
        let mut step = || -> Result<()> {
            let f = &s.theta;
            let energy = f.inner_spectral(f)?;
            let dissipation = 2.0 * sobolev_alpha_energy(f, spec.alpha)?
                + 2.0 * spec.epsilon_visc * gradient_energy(f);
            let residual = previous.map(|(t0, e0, d0)| {
                ((energy - e0) / (s.time - t0) + 0.5 * (d0 + dissipation)).abs()
            });
            previous = Some((s.time, energy, dissipation));
            if s.step_count.is_multiple_of(every) {
                let norms = NormReport::compute(f, &settings)?;
                last_norms = Some(norms.clone());
                records.push(DiagnosticsRecord {
                    time: s.time,
                    norms,
                    energy_balance_residual: residual,
                });
            }
            if snap_every > 0 && s.step_count.is_multiple_of(snap_every) {
                write_snapshot(f, &dir.join(format!("snapshot_{:06}.fdt", s.step_count)))?;
            }
            Ok(())
        };
        if failure.is_none() {
            if let Err(e) = step() {
                failure = Some(e);
            }
        }
    };
    let (end, history) = run_forward_recording(
        &theta0,
        spec,
        velocity,
        cfg.t_end,
        cfg.dt,
        &mut [&mut observe],
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let final_norms = match last_norms {
        Some(n) if records.last().is_some_and(|r| r.time == end.time) => n,
        _ => NormReport::compute(&end.theta, &settings)?,
    };
    let diag = dir.join("diagnostics.csv");
    write_diagnostics_csv(&records, &diag)?;
    files.push(diag);
    let snap = dir.join("final.fdt");
    write_snapshot(&end.theta, &snap)?;
    files.push(snap);

    let mut transfer = None;
    let mut ledger = None;
    if let Some(ms) = &cfg.molecule {
        let psi0 = make_molecule(ms, cfg.grid)?;
        let rep = transfer_residual(&theta0, &psi0, spec, velocity, cfg.t_end, cfg.dt)?;
        let path = dir.join("transfer.csv");
        write_csv(
            &path,
            &["t", "forward", "backward", "residual", "psi_l1"],
            [vec![
                format_number(Some(cfg.t_end)),
                format_number(Some(rep.forward)),
                format_number(Some(rep.backward)),
                format_number(Some(rep.residual)),
                format_number(Some(rep.psi_l1)),
            ]],
        )?;
        files.push(path);
        transfer = Some(rep.residual);

        if let Some(params) = &cfg.ledger {
            // The dual runs backward from a horizon past the last checkpoint.
            let horizon =
                iteration_schedule(ms, params)?.total() + 2.0 * params.eta * ms.r * ms.r + cfg.dt;
            let rep = match &shear {
                Some(v) => run_molecule_experiment(ms, cfg.grid, v, spec.alpha, cfg.dt, params)?,
                None => {
                    let (_, hist) = if horizon <= cfg.t_end {
                        (end.clone(), history)
                    } else {
                        run_forward_recording(&theta0, spec, None, horizon, cfg.dt, &mut [])?
                    };
                    let t_total = hist.t_end();
                    let reversed = TimeReversed::new(&hist, t_total);
                    run_molecule_experiment(ms, cfg.grid, &reversed, spec.alpha, cfg.dt, params)?
                }
            };
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|row| {
                    [
                        Some(row.step as f64),
                        Some(row.s_k),
                        Some(row.sum_s),
                        Some(row.g_n),
                        Some(row.f),
                        Some(row.conc),
                        Some(row.conc_bound),
                        Some(row.linf),
                        Some(row.linf_bound),
                        Some(row.l1),
                        Some(row.l1_bound),
                        Some(row.k_min),
                        Some(row.c0max),
                    ]
                    .into_iter()
                    .enumerate()
                    .map(|(i, x)| {
                        if i == 0 {
                            row.step.to_string()
                        } else {
                            format_number(x)
                        }
                    })
                    .collect()
                })
                .collect();
            let path = dir.join("ledger.csv");
            write_csv(&path, &LEDGER_COLUMNS, rows)?;
            files.push(path);
            ledger = Some(rep);
        }
    }

    Ok(SingleRun {
        steps: end.step_count,
        final_time: end.time,
        final_norms,
        transfer_residual: transfer,
        ledger,
        files,
    })
}
