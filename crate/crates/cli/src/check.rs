//! `check-covariance`: validate the model hypotheses.

use std::fs;

use paraxial::io::write_csv;
use paraxial::{validate_hypothesis, Error, RunConfig};

use crate::report::Outcome;
use crate::Common;

pub fn run(cfg: &RunConfig, common: &Common) -> Result<Outcome, Error> {
    let model = cfg.model()?;
    let scaling = cfg.scaling_unchecked()?;
    let report = validate_hypothesis(&model, &scaling);
    fs::create_dir_all(&common.out)?;
    let mut text = report.to_text();
    let mut rows: Vec<Vec<String>> = report.to_records().into_iter().map(|(k, v)| vec![k, v]).collect();
    if scaling.eta_overridden() {
        text.push_str(&format!("note: eta = {} set explicitly, replacing the regime default\n", scaling.eta()));
        rows.push(vec!["eta_override".into(), scaling.eta().to_string()]);
    }
    fs::write(common.out.join("covariance_report.txt"), &text)?;
    write_csv(&common.out.join("covariance_report.csv"), &["key", "value"], &rows)?;
    print!("{text}");
    let failures = report
        .entries
        .iter()
        .filter(|e| !e.passed)
        .map(|e| format!("{}: {}", e.id, e.detail))
        .collect();
    Ok(Outcome::from_failures(failures))
}
