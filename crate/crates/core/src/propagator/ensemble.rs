//! Deterministic, parallel Monte Carlo ensembles with mergeable statistics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{eval_beam, BeamSpec, Frame};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::TransverseGrid;
use crate::regime::RegimeScaling;
use crate::stats::{std_error, ComplexSum, KahanSum};

use super::screen::realization_stream;
use super::split::Propagator;

/// Largest total order `p + q` of a mixed moment.
pub const MAX_MOMENT_ORDER: usize = 8;

/// A mixed moment `E[prod_j u(x_j) prod_l conj(u(y_l))]`, with points given
/// as indices into the probe list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentTuple {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
}

impl MomentTuple {
    pub fn new(xs: Vec<usize>, ys: Vec<usize>) -> Self {
        Self { xs, ys }
    }

    pub fn order(&self) -> (usize, usize) {
        (self.xs.len(), self.ys.len())
    }

    /// The product for one realization's probe values.
    pub fn product(&self, probe_values: &[Complex64]) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &i in &self.xs {
            p *= probe_values[i];
        }
        for &i in &self.ys {
            p *= probe_values[i].conj();
        }
        p
    }
}

/// A complex sample-mean estimate with standard errors per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl ComplexEstimate {
    /// Whether `target` lies within `k` standard errors in both components.
    pub fn agrees_with(&self, target: Complex64, k: f64) -> bool {
        let d = self.value - target;
        d.re.abs() <= k * self.se_re && d.im.abs() <= k * self.se_im
    }

    /// Combined standard error `sqrt(se_re^2 + se_im^2)`.
    pub fn se(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

/// A real sample-mean estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealEstimate {
    pub value: f64,
    pub se: f64,
}

/// Running probe statistics of an ensemble.
///
/// Holds compensated partial sums for every configured moment together with
/// the per-realization probe values, from which standard errors and
/// jackknife estimates are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub probes: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub tuples: Vec<MomentTuple>,
    count: usize,
    mean: Vec<ComplexSum>,
    pair_sums: Vec<ComplexSum>,
    intensity: Vec<KahanSum>,
    intensity_sq: Vec<KahanSum>,
    tuple_sums: Vec<ComplexSum>,
    /// Probe values of every realization, in realization order.
    pub samples: Vec<Vec<Complex64>>,
    /// Intensity window of every realization, in realization order.
    pub windows: Vec<Vec<f64>>,
}

impl EnsembleStats {
    pub fn new(probes: Vec<usize>, pairs: Vec<(usize, usize)>, tuples: Vec<MomentTuple>) -> Result<Self> {
        let np = probes.len();
        for &(a, b) in &pairs {
            if a >= np || b >= np {
                return Err(Error::Config(format!("probe pair ({a}, {b}) refers to a missing probe")));
            }
        }
        for t in &tuples {
            if t.xs.iter().chain(&t.ys).any(|&i| i >= np) {
                return Err(Error::Config(format!("moment tuple {t:?} refers to a missing probe")));
            }
            if t.xs.len() + t.ys.len() > MAX_MOMENT_ORDER {
                return Err(Error::Size(format!(
                    "moment tuple of order {} exceeds the limit p + q <= {MAX_MOMENT_ORDER}",
                    t.xs.len() + t.ys.len()
                )));
            }
        }
        Ok(Self {
            count: 0,
            mean: vec![ComplexSum::new(); np],
            pair_sums: vec![ComplexSum::new(); pairs.len()],
            intensity: vec![KahanSum::new(); np],
            intensity_sq: vec![KahanSum::new(); np],
            tuple_sums: vec![ComplexSum::new(); tuples.len()],
            probes,
            pairs,
            tuples,
            samples: Vec::new(),
            windows: Vec::new(),
        })
    }

    /// Rebuild statistics from stored per-realization samples.
    pub fn from_samples(
        probes: Vec<usize>,
        pairs: Vec<(usize, usize)>,
        tuples: Vec<MomentTuple>,
        samples: Vec<Vec<Complex64>>,
        windows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut s = Self::new(probes, pairs, tuples)?;
        let mut windows = windows.into_iter();
        for v in samples {
            s.accumulate(v, windows.next().unwrap_or_default())?;
        }
        Ok(s)
    }

    /// Add one realization.
    pub fn accumulate(&mut self, probe_values: Vec<Complex64>, window: Vec<f64>) -> Result<()> {
        if probe_values.len() != self.probes.len() {
            return Err(Error::Config(format!(
                "realization has {} probe values, expected {}",
                probe_values.len(),
                self.probes.len()
            )));
        }
        for (i, &u) in probe_values.iter().enumerate() {
            self.mean[i].add(u);
            let e = u.norm_sqr();
            self.intensity[i].add(e);
            self.intensity_sq[i].add(e * e);
        }
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            self.pair_sums[k].add(probe_values[a] * probe_values[b].conj());
        }
        for (k, t) in self.tuples.iter().enumerate() {
            self.tuple_sums[k].add(t.product(&probe_values));
        }
        self.count += 1;
        self.samples.push(probe_values);
        if !window.is_empty() {
            self.windows.push(window);
        }
        Ok(())
    }

    /// Fold `other` (later realizations) into `self`.
    pub fn merge(&mut self, other: &EnsembleStats) -> Result<()> {
        if self.probes != other.probes || self.pairs != other.pairs || self.tuples != other.tuples {
            return Err(Error::Config("cannot merge statistics with different probe layouts".into()));
        }
        let merge_c = |a: &mut [ComplexSum], b: &[ComplexSum]| a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        let merge_r = |a: &mut [KahanSum], b: &[KahanSum]| a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        merge_c(&mut self.mean, &other.mean);
        merge_c(&mut self.pair_sums, &other.pair_sums);
        merge_r(&mut self.intensity, &other.intensity);
        merge_r(&mut self.intensity_sq, &other.intensity_sq);
        merge_c(&mut self.tuple_sums, &other.tuple_sums);
        self.count += other.count;
        self.samples.extend(other.samples.iter().cloned());
        self.windows.extend(other.windows.iter().cloned());
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn complex_estimate(&self, sum: &ComplexSum, f: impl Fn(&[Complex64]) -> Complex64) -> ComplexEstimate {
        let vals: Vec<Complex64> = self.samples.iter().map(|s| f(s)).collect();
        let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
        let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
        ComplexEstimate {
            value: sum.value() / self.count as f64,
            se_re: std_error(&re),
            se_im: std_error(&im),
        }
    }

    /// `E[u(x_i)]`.
    pub fn mean(&self, i: usize) -> ComplexEstimate {
        self.complex_estimate(&self.mean[i], |s| s[i])
    }

    /// `E[u(x_a) conj(u(x_b))]` for configured pair `k`.
    pub fn pair_moment(&self, k: usize) -> ComplexEstimate {
        let (a, b) = self.pairs[k];
        self.complex_estimate(&self.pair_sums[k], |s| s[a] * s[b].conj())
    }

    /// Configured mixed moment `k`.
    pub fn tuple_moment(&self, k: usize) -> ComplexEstimate {
        let t = &self.tuples[k];
        self.complex_estimate(&self.tuple_sums[k], |s| t.product(s))
    }

    /// Sample mean of any function of the probe values.
    pub fn moment_of(&self, f: impl Fn(&[Complex64]) -> Complex64) -> ComplexEstimate {
        let mut sum = ComplexSum::new();
        self.samples.iter().for_each(|s| sum.add(f(s)));
        self.complex_estimate(&sum, f)
    }

    /// `E[|u(x_i)|^2]`.
    pub fn mean_intensity(&self, i: usize) -> RealEstimate {
        let v: Vec<f64> = self.samples.iter().map(|s| s[i].norm_sqr()).collect();
        RealEstimate { value: self.intensity[i].value() / self.count as f64, se: std_error(&v) }
    }

    /// `E[|u(x_i)|^4]`.
    pub fn mean_intensity_sq(&self, i: usize) -> RealEstimate {
        let v: Vec<f64> = self.samples.iter().map(|s| s[i].norm_sqr().powi(2)).collect();
        RealEstimate { value: self.intensity_sq[i].value() / self.count as f64, se: std_error(&v) }
    }

    /// Intensity samples at probe `i`, in realization order.
    pub fn intensity_samples(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i].norm_sqr()).collect()
    }
}

/// Everything needed to run an ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleSetup {
    pub grid: TransverseGrid,
    pub scaling: RegimeScaling,
    pub model: CovarianceModel,
    pub beam: BeamSpec,
    pub frame: Frame,
    pub z_final: f64,
    pub n_steps: usize,
    pub n_realizations: usize,
    pub seed: u64,
    /// Index of the first realization; realization `k` uses stream
    /// `first_realization + k`.
    pub first_realization: u64,
    /// Probe nodes as flat grid indices.
    pub probes: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub tuples: Vec<MomentTuple>,
    /// Half width (in nodes per axis) of the stored intensity window
    /// around the grid center; `None` stores no window.
    pub window_half_width: Option<usize>,
    /// Steps after which probe statistics are also recorded.
    pub snapshot_steps: Vec<usize>,
}

impl EnsembleSetup {
    fn validate(&self) -> Result<()> {
        if self.n_realizations < 2 {
            return Err(Error::Config("ensemble.n_realizations must be >= 2".into()));
        }
        if self.probes.is_empty() {
            return Err(Error::Config("at least one probe is required".into()));
        }
        if let Some(&p) = self.probes.iter().find(|&&p| p >= self.grid.len()) {
            return Err(Error::Config(format!("probe index {p} is not a grid node")));
        }
        if let Some(w) = self.window_half_width {
            if 2 * w + 1 > self.grid.n() {
                return Err(Error::Config(format!("intensity window half width {w} exceeds the grid")));
            }
        }
        if self.snapshot_steps.iter().any(|&k| k == 0 || k > self.n_steps) {
            return Err(Error::Config("snapshot steps must lie in 1..=n_steps".into()));
        }
        self.scaling.check()?;
        Ok(())
    }

    fn window_nodes(&self) -> Vec<usize> {
        let Some(w) = self.window_half_width else { return Vec::new() };
        let c = self.grid.n() / 2;
        let range: Vec<usize> = (c - w..=c + w).collect();
        match self.grid.dim() {
            1 => range,
            _ => range
                .iter()
                .flat_map(|&i| range.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.grid.flat(&[i, j]))
                .collect(),
        }
    }
}

/// Norm and boundary diagnostics at one recorded distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub z: f64,
    pub mean_norm: f64,
    pub max_norm_drift: f64,
    pub mean_boundary_energy: f64,
    pub max_boundary_energy: f64,
}

/// Statistics at one recorded distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub z: f64,
    pub stats: EnsembleStats,
    pub diagnostics: StepDiagnostics,
}

/// Result of [`run_ensemble`]. The last snapshot is the final distance.
#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub snapshots: Vec<Snapshot>,
}

impl EnsembleOutput {
    pub fn final_stats(&self) -> &EnsembleStats {
        &self.snapshots.last().expect("at least the final snapshot").stats
    }

    pub fn final_diagnostics(&self) -> &StepDiagnostics {
        &self.snapshots.last().expect("at least the final snapshot").diagnostics
    }
}

struct Record {
    probes: Vec<Vec<Complex64>>,
    norms: Vec<f64>,
    boundary: Vec<f64>,
    window: Vec<f64>,
}

fn run_one(setup: &EnsembleSetup, prop: &Propagator, u0: &WaveField, steps: &[usize], window: &[usize], k: u64) -> Result<Record> {
    let mut rng = realization_stream(setup.seed, setup.first_realization + k);
    let mut rec = Record { probes: Vec::new(), norms: Vec::new(), boundary: Vec::new(), window: Vec::new() };
    let sample = |f: &WaveField, rec: &mut Record| {
        rec.probes.push(setup.probes.iter().map(|&p| f.values[p]).collect());
        rec.norms.push(f.norm_sq());
        rec.boundary.push(f.boundary_energy());
    };
    let fin = prop.propagate_observed(u0, &mut rng, steps, |_, f| sample(f, &mut rec))?;
    sample(&fin, &mut rec);
    rec.window = window.iter().map(|&i| fin.values[i].norm_sqr()).collect();
    Ok(rec)
}

/// Run `n_realizations` independent realizations and collect probe
/// statistics. `workers = None` uses the global thread pool.
///
/// Realizations are computed in parallel, collected in realization order
/// and accumulated sequentially, so the output does not depend on the
/// worker count.
pub fn run_ensemble(setup: &EnsembleSetup, workers: Option<usize>) -> Result<EnsembleOutput> {
    setup.validate()?;
    let prop = Propagator::new(&setup.grid, &setup.scaling, &setup.model, setup.z_final, setup.n_steps)?;
    let u0 = eval_beam(&setup.beam, &setup.grid, &setup.scaling, &setup.frame)?;
    let mut steps: Vec<usize> = setup.snapshot_steps.iter().copied().filter(|&k| k < setup.n_steps).collect();
    steps.sort_unstable();
    steps.dedup();
    let window = setup.window_nodes();
    let work = || -> Result<Vec<Record>> {
        (0..setup.n_realizations as u64)
            .into_par_iter()
            .map(|k| run_one(setup, &prop, &u0, &steps, &window, k))
            .collect()
    };
    let records = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let n0 = u0.norm_sq();
    let mut all_steps = steps.clone();
    all_steps.push(setup.n_steps);
    let mut snapshots = Vec::with_capacity(all_steps.len());
    for (s, &step) in all_steps.iter().enumerate() {
        let mut stats = EnsembleStats::new(setup.probes.clone(), setup.pairs.clone(), setup.tuples.clone())?;
        let (mut norm, mut bnd) = (KahanSum::new(), KahanSum::new());
        let (mut drift, mut bmax) = (0.0f64, 0.0f64);
        let last = s + 1 == all_steps.len();
        for r in &records {
            let win = if last { r.window.clone() } else { Vec::new() };
            stats.accumulate(r.probes[s].clone(), win)?;
            norm.add(r.norms[s]);
            bnd.add(r.boundary[s]);
            if n0 > 0.0 {
                drift = drift.max((r.norms[s] / n0 - 1.0).abs());
            }
            bmax = bmax.max(r.boundary[s]);
        }
        let n = records.len() as f64;
        snapshots.push(Snapshot {
            step,
            z: step as f64 * prop.dz(),
            stats,
            diagnostics: StepDiagnostics {
                step,
                z: step as f64 * prop.dz(),
                mean_norm: norm.value() / n,
                max_norm_drift: drift,
                mean_boundary_energy: bnd.value() / n,
                max_boundary_energy: bmax,
            },
        });
    }
    Ok(EnsembleOutput { snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> EnsembleSetup {
        let grid = TransverseGrid::new(1, 128, 32.0).unwrap();
        let c = grid.center();
        EnsembleSetup {
            scaling: RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap(),
            model: CovarianceModel::gaussian(1.0, 1.0, 1).unwrap(),
            beam: BeamSpec::gaussian(1.0, 1.0, 1).unwrap(),
            frame: Frame::Raw,
            z_final: 0.5,
            n_steps: 4,
            n_realizations: n,
            seed: 42,
            first_realization: 0,
            probes: vec![c, c + 2, c - 3],
            pairs: vec![(0, 1), (1, 1)],
            tuples: vec![MomentTuple::new(vec![0, 1], vec![0, 2])],
            window_half_width: Some(2),
            snapshot_steps: vec![2],
            grid,
        }
    }

    #[test]
    fn two_sample_hand_sum() {
        let mut s = EnsembleStats::new(vec![0, 1], vec![(0, 1)], vec![MomentTuple::new(vec![0], vec![1])]).unwrap();
        let a = vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, 1.0)];
        let b = vec![Complex64::new(-1.0, 0.5), Complex64::new(2.0, 0.0)];
        s.accumulate(a.clone(), vec![]).unwrap();
        s.accumulate(b.clone(), vec![]).unwrap();
        let m0 = (a[0] + b[0]) / 2.0;
        assert_eq!(s.mean(0).value, m0);
        let p = (a[0] * a[1].conj() + b[0] * b[1].conj()) / 2.0;
        assert!((s.pair_moment(0).value - p).norm() < 1e-15);
        assert!((s.tuple_moment(0).value - p).norm() < 1e-15);
        let i2 = (a[1].norm_sqr() + b[1].norm_sqr()) / 2.0;
        assert_eq!(s.mean_intensity(1).value, i2);
    }

    #[test]
    fn merge_equals_concatenated_run() {
        let full = run_ensemble(&setup(10), Some(1)).unwrap();
        let mut a_setup = setup(6);
        let mut b_setup = setup(4);
        a_setup.first_realization = 0;
        b_setup.first_realization = 6;
        let a = run_ensemble(&a_setup, Some(1)).unwrap();
        let b = run_ensemble(&b_setup, Some(1)).unwrap();
        let mut merged = a.final_stats().clone();
        merged.merge(b.final_stats()).unwrap();
        let f = full.final_stats();
        assert_eq!(merged.samples, f.samples);
        assert_eq!(merged.count(), f.count());
        for i in 0..3 {
            assert!((merged.mean(i).value - f.mean(i).value).norm() < 1e-15);
        }
        assert!((merged.tuple_moment(0).value - f.tuple_moment(0).value).norm() < 1e-15);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = run_ensemble(&setup(8), Some(1)).unwrap();
        let b = run_ensemble(&setup(8), Some(3)).unwrap();
        assert_eq!(a.final_stats(), b.final_stats());
        assert_eq!(a.snapshots[0].stats, b.snapshots[0].stats);
    }

    #[test]
    fn rejects_bad_probes() {
        let mut s = setup(4);
        s.probes.push(10_000);
        assert!(matches!(run_ensemble(&s, Some(1)), Err(Error::Config(_))));
        let mut s = setup(4);
        s.pairs.push((0, 7));
        assert!(matches!(run_ensemble(&s, Some(1)), Err(Error::Config(_))));
        let mut s = setup(1);
        s.n_realizations = 1;
        assert!(run_ensemble(&s, Some(1)).is_err());
    }

    #[test]
    fn order_guard() {
        let t = MomentTuple::new(vec![0; 5], vec![0; 4]);
        assert!(matches!(EnsembleStats::new(vec![0], vec![], vec![t]), Err(Error::Size(_))));
    }

    #[test]
    fn snapshots_and_windows_recorded() {
        let out = run_ensemble(&setup(3), Some(1)).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        assert_eq!(out.snapshots[0].step, 2);
        assert!((out.snapshots[1].z - 0.5).abs() < 1e-15);
        assert_eq!(out.final_stats().windows.len(), 3);
        assert_eq!(out.final_stats().windows[0].len(), 5);
        assert!(out.final_diagnostics().max_norm_drift < 1e-12);
    }
}
