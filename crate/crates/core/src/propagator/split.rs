//! Unitary Strang split-step propagation.

use num_complex::Complex64;
use rand::Rng;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::fft::SpectralPlan;
use crate::field::WaveField;
use crate::grid::TransverseGrid;
use crate::regime::RegimeScaling;

use super::screen::{PhaseScreen, ScreenSynthesizer};

/// Fixed-step propagator over `n_steps` steps of length `dz`.
///
/// Each step is `F(dz/2) P F(dz/2)` with the free-space multiplier
/// `F(h) = exp(-i a |xi|^2 h)` and the phase factor `P = exp(i g dB(x))`.
/// Consecutive half steps are fused when propagating over many steps.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: TransverseGrid,
    scaling: RegimeScaling,
    plan: SpectralPlan,
    synth: ScreenSynthesizer,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    gain: f64,
    dz: f64,
    n_steps: usize,
}

impl Propagator {
    pub fn new(
        grid: &TransverseGrid,
        scaling: &RegimeScaling,
        model: &CovarianceModel,
        z_final: f64,
        n_steps: usize,
    ) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("propagation.n_steps must be >= 1".into()));
        }
        if !(z_final.is_finite() && z_final > 0.0) {
            return Err(Error::Config(format!("propagation.z_final = {z_final} must be positive")));
        }
        let dz = z_final / n_steps as f64;
        let a = scaling.laplacian_coeff();
        let k2 = grid.wavenumber_sq();
        let half = k2.iter().map(|&k| Complex64::from_polar(1.0, -a * k * dz / 2.0)).collect();
        let full = k2.iter().map(|&k| Complex64::from_polar(1.0, -a * k * dz)).collect();
        Ok(Self {
            grid: grid.clone(),
            scaling: *scaling,
            plan: SpectralPlan::new(grid),
            synth: ScreenSynthesizer::new(grid, model, dz)?,
            half,
            full,
            gain: scaling.noise_gain(),
            dz,
            n_steps,
        })
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn synthesizer(&self) -> &ScreenSynthesizer {
        &self.synth
    }

    fn check_field(&self, field: &WaveField) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::Config("field grid differs from the propagator grid".into()));
        }
        Ok(())
    }

    fn multiply(data: &mut [Complex64], m: &[Complex64]) {
        for (v, f) in data.iter_mut().zip(m) {
            *v *= f;
        }
    }

    fn apply_phase(&self, data: &mut [Complex64], screen: &PhaseScreen) {
        for (v, b) in data.iter_mut().zip(&screen.values) {
            *v *= Complex64::cis(self.gain * b);
        }
    }

    /// One full Strang step with the given screen.
    pub fn step(&self, field: &mut WaveField, screen: &PhaseScreen) -> Result<()> {
        self.check_field(field)?;
        if (screen.dz - self.dz).abs() > 1e-12 * self.dz {
            return Err(Error::Config(format!(
                "screen step {} does not match propagator step {}",
                screen.dz, self.dz
            )));
        }
        if screen.values.len() != field.values.len() {
            return Err(Error::Config("screen and field sizes differ".into()));
        }
        let v = &mut field.values;
        self.plan.forward(v);
        Self::multiply(v, &self.half);
        self.plan.inverse(v);
        self.apply_phase(v, screen);
        self.plan.forward(v);
        Self::multiply(v, &self.half);
        self.plan.inverse(v);
        field.z += self.dz;
        Ok(())
    }

    /// Propagate over all steps, drawing screens from `rng`.
    ///
    /// `observe(k, field)` is called with the physical field after step
    /// `k` (1-based) for every `k` in `snapshots`; the last step is always
    /// observed through the returned field.
    pub fn propagate_observed<R, F>(
        &self,
        u0: &WaveField,
        rng: &mut R,
        snapshots: &[usize],
        mut observe: F,
    ) -> Result<WaveField>
    where
        R: Rng,
        F: FnMut(usize, &WaveField),
    {
        self.check_field(u0)?;
        let mut spec = u0.values.clone();
        self.plan.forward(&mut spec);
        let mut pending: Option<PhaseScreen> = None;
        let mut snap = WaveField { values: Vec::new(), z: u0.z, grid: self.grid.clone(), scaling: self.scaling };
        for k in 1..=self.n_steps {
            Self::multiply(&mut spec, if k == 1 { &self.half } else { &self.full });
            let screen = match pending.take() {
                Some(s) => s,
                None => {
                    let (a, b) = self.synth.draw_pair(rng);
                    pending = Some(b);
                    a
                }
            };
            if !self.synth.is_zero() {
                self.plan.inverse(&mut spec);
                self.apply_phase(&mut spec, &screen);
                self.plan.forward(&mut spec);
            }
            if k < self.n_steps && snapshots.contains(&k) {
                snap.values.clone_from(&spec);
                Self::multiply(&mut snap.values, &self.half);
                self.plan.inverse(&mut snap.values);
                snap.z = u0.z + k as f64 * self.dz;
                observe(k, &snap);
            }
        }
        Self::multiply(&mut spec, &self.half);
        self.plan.inverse(&mut spec);
        Ok(WaveField {
            values: spec,
            z: u0.z + self.n_steps as f64 * self.dz,
            grid: self.grid.clone(),
            scaling: self.scaling,
        })
    }

    /// Propagate over all steps, drawing screens from `rng`.
    pub fn propagate<R: Rng>(&self, u0: &WaveField, rng: &mut R) -> Result<WaveField> {
        self.propagate_observed(u0, rng, &[], |_, _| {})
    }
}

/// Propagate `u0` over `z_final` in `n_steps` steps. A zero distance
/// returns the input unchanged.
pub fn propagate<R: Rng>(
    u0: &WaveField,
    model: &CovarianceModel,
    z_final: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<WaveField> {
    if z_final == 0.0 {
        return Ok(u0.clone());
    }
    Propagator::new(&u0.grid, &u0.scaling, model, z_final, n_steps)?.propagate(u0, rng)
}

/// Exact free-space propagation on the grid: `u^(xi) exp(-i a |xi|^2 z)`.
pub fn free_space(u0: &WaveField, z: f64) -> WaveField {
    let plan = SpectralPlan::new(&u0.grid);
    let a = u0.scaling.laplacian_coeff();
    let mut v = u0.values.clone();
    plan.forward(&mut v);
    for (c, k) in v.iter_mut().zip(u0.grid.wavenumber_sq()) {
        *c *= Complex64::from_polar(1.0, -a * k * z);
    }
    plan.inverse(&mut v);
    WaveField { values: v, z: u0.z + z, grid: u0.grid.clone(), scaling: u0.scaling }
}
