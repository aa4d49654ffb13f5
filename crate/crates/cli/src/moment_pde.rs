//! `moment-pde`: distance between the full moment equation and its
//! gaussian approximation over a sweep of `epsilon`.

use std::fs;

use paraxial::moment_pde::{bound_check_linear, bound_check_quadratic, BoundRow, ErrorReport, GridMeasure, MomentSolver};
use paraxial::{CovarianceModel, Error, RegimeScaling, RunConfig};
use rayon::prelude::*;

use crate::report::{f, warn, Outcome};
use crate::Common;

/// Relative increase of the error between successive smaller `epsilon`
/// tolerated by the trend check.
const TREND_SLACK: f64 = 0.1;

fn scaling_for(cfg: &RunConfig, epsilon: f64) -> Result<RegimeScaling, Error> {
    let r = cfg.regime.as_ref().expect("validated configuration has [regime]");
    let s = RegimeScaling::new(r.kind, epsilon, r.beta, r.k0)?;
    match r.eta {
        Some(eta) => s.with_eta(eta),
        None => Ok(s),
    }
}

fn sweep_point(
    psi0: &GridMeasure,
    z: f64,
    scaling: RegimeScaling,
    model: &CovarianceModel,
    dz: Option<f64>,
) -> Result<ErrorReport, Error> {
    let solver = MomentSolver::for_measure(psi0, scaling, model)?;
    let dz = match dz {
        Some(dz) => dz,
        None => solver.suggest_step(psi0, z)?,
    };
    solver.error_norm(psi0, z, dz)
}

fn bound_rows(rows: &[BoundRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                f(r.delta),
                f(r.at_zero),
                f(r.sup),
                f(r.argsup),
                f(r.reference),
                f(r.ratio),
                r.explicit_bound.map(f).unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn run(cfg: &RunConfig, common: &Common) -> Result<Outcome, Error> {
    let sec = cfg.moment_pde.as_ref().expect("validated configuration has [moment_pde]");
    let model = cfg.model()?;
    let psi0 = GridMeasure::gaussian_product(sec.p, sec.q, sec.n_v, sec.h, sec.width, &vec![0.0; sec.p + sec.q])?;
    let scalings = sec.epsilons.iter().map(|&e| scaling_for(cfg, e)).collect::<Result<Vec<_>, _>>()?;
    MomentSolver::for_measure(&psi0, scalings[0], &model)?;
    fs::create_dir_all(&common.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let reports: Vec<ErrorReport> = pool.install(|| {
        scalings.par_iter().map(|&s| sweep_point(&psi0, sec.z, s, &model, sec.dz)).collect::<Result<Vec<_>, _>>()
    })?;

    let mut failures = Vec::new();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .zip(&scalings)
        .map(|(r, s)| {
            vec![
                f(r.z),
                f(r.epsilon),
                f(s.eta()),
                f(r.tv_initial),
                f(r.error),
                f(r.leak_fraction * r.tv_initial),
                r.valid.to_string(),
                f(r.dz),
                r.steps.to_string(),
                f(r.gaussian_bound),
            ]
        })
        .collect();
    paraxial::io::write_csv(
        &common.out.join("error_norm.csv"),
        &["z", "epsilon", "eta", "tv_norm", "error_norm", "leaked_tv", "valid", "dz", "steps", "gaussian_bound"],
        &rows,
    )?;
    for r in reports.iter().filter(|r| !r.valid) {
        warn(
            common.strict,
            &mut failures,
            format!("epsilon = {}: {:.3e} of the mass left the velocity box", r.epsilon, r.leak_fraction),
        );
    }

    let mut valid: Vec<&ErrorReport> = reports.iter().filter(|r| r.valid).collect();
    valid.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    for w in valid.windows(2) {
        if w[1].error > (1.0 + TREND_SLACK) * w[0].error {
            failures.push(format!(
                "error grows from {:.4e} at epsilon = {} to {:.4e} at epsilon = {}",
                w[0].error, w[0].epsilon, w[1].error, w[1].epsilon
            ));
        }
    }

    if !sec.deltas.is_empty() {
        let header = ["delta", "at_zero", "sup", "argsup", "reference", "ratio", "explicit_bound"];
        let linear = bound_check_linear(&model, &sec.deltas)?;
        paraxial::io::write_csv(&common.out.join("bound_linear.csv"), &header, &bound_rows(&linear))?;
        let quadratic = bound_check_quadratic(&model, &sec.deltas)?;
        paraxial::io::write_csv(&common.out.join("bound_quadratic.csv"), &header, &bound_rows(&quadratic))?;
        for r in &quadratic {
            if let Some(b) = r.explicit_bound {
                if r.sup > b {
                    failures.push(format!("quadratic term {:.4e} exceeds its bound {:.4e} at delta = {}", r.sup, b, r.delta));
                }
            }
        }
    }
    for r in &reports {
        println!("epsilon = {:<10} error = {:.6e} valid = {}", r.epsilon, r.error, r.valid);
    }
    Ok(Outcome::from_failures(failures))
}
