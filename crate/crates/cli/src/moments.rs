//! `moments`: tabulate the analytic moment evaluators.

use std::fs;

use paraxial::io::{write_csv, write_real_array, RunManifest};
use paraxial::moments::{
    m11_limit_diffusive, m11_limit_kinetic, mean_field, second_moment, solve_i2, BetaCase, MomentQuery,
};
use paraxial::{Error, Regime, RunConfig};
use serde_json::json;

use crate::report::{f, vec_field, Outcome};
use crate::Common;

pub fn run(cfg: &RunConfig, common: &Common) -> Result<Outcome, Error> {
    let model = cfg.model()?;
    let scaling = cfg.scaling()?;
    let beam = cfg.beam()?;
    let sec = cfg.moments.as_ref().expect("validated configuration has [moments]");
    let regime = match scaling.regime() {
        Regime::Kinetic => "kinetic",
        Regime::Diffusive => "diffusive",
    };
    let case = BetaCase::of(&scaling);
    fs::create_dir_all(&common.out)?;
    let mut manifest = RunManifest::new(cfg.clone(), None);

    let mut rows = Vec::new();
    let mut push = |q: &MomentQuery, y: String, v: num_complex::Complex64, evaluator: &str| {
        rows.push(vec![f(q.z), vec_field(&q.r), vec_field(&q.x), y, f(v.re), f(v.im), evaluator.to_string(), regime.to_string()]);
    };
    for qs in &sec.queries {
        let q = MomentQuery::new(qs.z, qs.r.clone(), qs.x.clone(), qs.y.clone())?;
        push(&q, String::new(), mean_field(&beam, &scaling, &model, q.z, &q.r, &q.x), "mean_field");
        push(&q, vec_field(&q.y), second_moment(&beam, &scaling, &model, &q)?, "second_moment");
        if sec.limits && q.z > 0.0 {
            match scaling.regime() {
                Regime::Kinetic => {
                    let v = m11_limit_kinetic(&beam, &scaling, &model, &q, case)?;
                    push(&q, vec_field(&q.y), v, "kinetic_limit");
                }
                Regime::Diffusive => {
                    let grid = cfg.grid()?;
                    let v = m11_limit_diffusive(&beam, &scaling, &model, &q, case, &grid)?;
                    push(&q, vec_field(&q.y), v.phase_on, "diffusive_limit");
                    push(&q, vec_field(&q.y), v.phase_off, "diffusive_limit_phase_off");
                }
            }
        }
    }
    if !rows.is_empty() {
        write_csv(&common.out.join("moments.csv"), &["z", "r", "x", "y", "re", "im", "evaluator", "regime"], &rows)?;
        manifest.record_file(&common.out, "moments.csv")?;
    }

    if !sec.i2_z.is_empty() {
        let grid = cfg.grid()?;
        let gamma = model.hessian_at_zero()?;
        let field = solve_i2(&beam, &gamma, &sec.i2_z, &grid)?;
        let flat: Vec<f64> = field.values.iter().flatten().copied().collect();
        let mut shape = vec![field.z.len()];
        shape.extend(std::iter::repeat(grid.n()).take(grid.dim()));
        let axes: Vec<&str> = ["z", "r1", "r2"].into_iter().take(1 + grid.dim()).collect();
        let meta = write_real_array(
            &common.out,
            "intensity_density",
            &flat,
            &shape,
            &axes,
            "mean intensity",
            json!({ "z": field.z, "n": grid.n(), "L": grid.length(), "d": grid.dim() }),
        )?;
        manifest.record("intensity_density.bin", meta.sha256);
        let rows: Vec<Vec<String>> = (0..field.z.len())
            .map(|k| vec![f(field.z[k]), f(field.mass(k)), vec_field(&field.mean(k)), vec_field(&field.covariance(k))])
            .collect();
        write_csv(&common.out.join("intensity_moments.csv"), &["z", "mass", "mean", "covariance"], &rows)?;
        manifest.record_file(&common.out, "intensity_moments.csv")?;
    }
    manifest.write(&common.out)?;
    println!("moment tables in {}", common.out.display());
    Ok(Outcome::Success)
}
