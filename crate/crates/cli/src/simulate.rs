//! `simulate` and `replay`: run an ensemble and persist its statistics.

use std::fs;
use std::path::Path;
use std::time::Instant;

use paraxial::io::{write_complex_array, write_csv, write_real_array, RunManifest};
use paraxial::propagator::{run_ensemble, EnsembleStats, Snapshot};
use paraxial::{Error, RunConfig};
use serde_json::json;

use crate::report::{f, warn, Outcome};
use crate::Common;

/// Relative norm drift above which a run is flagged.
const NORM_DRIFT_WARNING: f64 = 1e-9;
/// Share of energy in the outer half of the box above which periodic
/// wrap-around is flagged.
const BOUNDARY_WARNING: f64 = 1e-3;

fn estimate_rows(snap: &Snapshot) -> (Vec<Vec<String>>, Vec<Vec<String>>, Vec<Vec<String>>) {
    let s = &snap.stats;
    let z = f(snap.z);
    let probes = (0..s.probes.len())
        .map(|i| {
            let m = s.mean(i);
            let int = s.mean_intensity(i);
            vec![z.clone(), i.to_string(), s.probes[i].to_string(), f(m.value.re), f(m.value.im), f(m.se_re), f(m.se_im), f(int.value), f(int.se)]
        })
        .collect();
    let pairs = s
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let m = s.pair_moment(k);
            vec![z.clone(), a.to_string(), b.to_string(), f(m.value.re), f(m.value.im), f(m.se_re), f(m.se_im)]
        })
        .collect();
    let tuples = s
        .tuples
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let m = s.tuple_moment(k);
            let idx = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
            vec![z.clone(), idx(&t.xs), idx(&t.ys), f(m.value.re), f(m.value.im), f(m.se_re), f(m.se_im)]
        })
        .collect();
    (probes, pairs, tuples)
}

/// Run the configured ensemble into `out` and return its manifest and
/// warnings.
pub fn execute(cfg: &RunConfig, seed: Option<u64>, workers: Option<usize>, out: &Path) -> Result<(RunManifest, Vec<String>), Error> {
    let setup = cfg.ensemble_setup(seed)?;
    let start = Instant::now();
    let output = run_ensemble(&setup, workers)?;
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new(cfg.clone(), Some(setup.seed));
    let stats: &EnsembleStats = output.final_stats();

    let samples: Vec<_> = stats.samples.iter().flatten().copied().collect();
    let geometry = json!({ "d": setup.grid.dim(), "n": setup.grid.n(), "L": setup.grid.length(), "z": setup.z_final, "probes": setup.probes });
    let meta = write_complex_array(out, "probe_samples", &samples, &[stats.samples.len(), stats.probes.len()], &["realization", "probe"], "field amplitude", geometry.clone())?;
    manifest.record("probe_samples.bin", meta.sha256);
    if let Some(w) = setup.window_half_width {
        let side = 2 * w + 1;
        let cells = side.pow(setup.grid.dim() as u32);
        let flat: Vec<f64> = stats.windows.iter().flatten().copied().collect();
        let mut shape = vec![stats.windows.len()];
        shape.extend(std::iter::repeat(side).take(setup.grid.dim()));
        let axes: Vec<&str> = ["realization", "x1", "x2"].into_iter().take(1 + setup.grid.dim()).collect();
        debug_assert_eq!(flat.len(), stats.windows.len() * cells);
        let meta = write_real_array(out, "intensity_windows", &flat, &shape, &axes, "intensity", json!({ "window_side": side, "center": setup.grid.center() }))?;
        manifest.record("intensity_windows.bin", meta.sha256);
    }
    fs::write(out.join("stats.json"), serde_json::to_string(stats)?)?;
    manifest.record_file(out, "stats.json")?;

    let mut diag = Vec::new();
    let (mut probes, mut pairs, mut tuples) = (Vec::new(), Vec::new(), Vec::new());
    for snap in &output.snapshots {
        let d = &snap.diagnostics;
        diag.push(vec![d.step.to_string(), f(d.z), f(d.mean_norm), f(d.max_norm_drift), f(d.mean_boundary_energy), f(d.max_boundary_energy)]);
        let (a, b, c) = estimate_rows(snap);
        probes.extend(a);
        pairs.extend(b);
        tuples.extend(c);
    }
    let tables: [(&str, &[&str], &Vec<Vec<String>>); 4] = [
        ("diagnostics.csv", &["step", "z", "mean_norm", "max_norm_drift", "mean_boundary_energy", "max_boundary_energy"], &diag),
        ("probe_moments.csv", &["z", "probe", "node", "mean_re", "mean_im", "se_re", "se_im", "intensity", "intensity_se"], &probes),
        ("pair_moments.csv", &["z", "probe_a", "probe_b", "re", "im", "se_re", "se_im"], &pairs),
        ("tuple_moments.csv", &["z", "xs", "ys", "re", "im", "se_re", "se_im"], &tuples),
    ];
    for (name, header, rows) in tables {
        write_csv(&out.join(name), header, rows)?;
        manifest.record_file(out, name)?;
    }

    let mut warnings = Vec::new();
    let fin = output.final_diagnostics();
    if fin.max_norm_drift > NORM_DRIFT_WARNING {
        warnings.push(format!("relative norm drift {:.3e} exceeds {NORM_DRIFT_WARNING:e}", fin.max_norm_drift));
    }
    if fin.max_boundary_energy > BOUNDARY_WARNING {
        warnings.push(format!(
            "{:.3e} of the energy reached the outer half of the box (limit {BOUNDARY_WARNING:e})",
            fin.max_boundary_energy
        ));
    }
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(out)?;
    Ok((manifest, warnings))
}

pub fn run(cfg: &RunConfig, common: &Common) -> Result<Outcome, Error> {
    let (manifest, warnings) = execute(cfg, common.seed, common.workers, &common.out)?;
    let mut failures = Vec::new();
    for w in warnings {
        warn(common.strict, &mut failures, w);
    }
    println!(
        "{} realizations in {:.1} s; artifacts in {}",
        cfg.ensemble.as_ref().map_or(0, |e| e.n_realizations),
        manifest.wall_clock_seconds,
        common.out.display()
    );
    Ok(Outcome::from_failures(failures))
}

pub fn replay(manifest_path: &Path, out: &Path, workers: Option<usize>) -> Result<Outcome, Error> {
    let original = RunManifest::read(manifest_path)?;
    original.config.validate()?;
    let (fresh, _) = execute(&original.config, original.seed, workers, out)?;
    let mut failures = Vec::new();
    for (name, sum) in &original.checksums {
        match fresh.checksums.get(name) {
            Some(s) if s == sum => println!("identical  {name}"),
            Some(_) => failures.push(format!("{name} differs from the manifest checksum")),
            None => failures.push(format!("{name} was not reproduced")),
        }
    }
    Ok(Outcome::from_failures(failures))
}
