//! Gaussian phase screens by spectral synthesis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::fft::SpectralPlan;
use crate::grid::TransverseGrid;

/// Random stream consumed by one realization.
pub type RngStream = ChaCha12Rng;

/// The stream of realization `index` under master seed `seed`.
///
/// Streams are independent ChaCha sequences selected by the stream id, so
/// the draw sequence of a realization does not depend on which worker runs
/// it or in which order.
pub fn realization_stream(seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One increment `dB(x)` of the Brownian field over a step `dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub values: Vec<f64>,
    pub dz: f64,
}

impl PhaseScreen {
    pub fn zeros(len: usize, dz: f64) -> Self {
        Self { values: vec![0.0; len], dz }
    }
}

/// Spectral synthesis of screens with covariance `dz R(x - y)` on the
/// periodic grid.
///
/// Independent standard complex normals `Z_k` (real and imaginary parts
/// each of unit variance) are scaled by `s_k = sqrt(dz R^(xi_k) / L^d)`
/// and summed as `b_j = sum_k s_k Z_k e^{i xi_k x_j}`. Then
/// `Cov(Re b_j, Re b_l) = Cov(Im b_j, Im b_l) = dz L^-d sum_k R^(xi_k) cos(xi_k (x_j - x_l))`,
/// which is `dz` times the periodised covariance by Poisson summation,
/// and `Re b` and `Im b` are independent because `s_k = s_{-k}`. Every
/// transform therefore yields two independent screens.
#[derive(Debug, Clone)]
pub struct ScreenSynthesizer {
    plan: SpectralPlan,
    filter: Vec<f64>,
    dz: f64,
    zero: bool,
}

impl ScreenSynthesizer {
    pub fn new(grid: &TransverseGrid, model: &CovarianceModel, dz: f64) -> Result<Self> {
        if !(dz.is_finite() && dz > 0.0) {
            return Err(Error::Domain(format!("screen step dz = {dz} must be positive")));
        }
        if model.dim() != grid.dim() {
            return Err(Error::Config(format!(
                "covariance dimension {} does not match grid dimension {}",
                model.dim(),
                grid.dim()
            )));
        }
        let vol = grid.length().powi(grid.dim() as i32);
        let filter: Vec<f64> = (0..grid.len())
            .map(|f| (dz * model.spectrum(&grid.wavevector(f)) / vol).sqrt())
            .collect();
        let zero = filter.iter().all(|&s| s == 0.0);
        Ok(Self { plan: SpectralPlan::new(grid), filter, dz, zero })
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// Whether the medium is homogeneous, in which case screens vanish.
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Draw two independent screens.
    pub fn draw_pair<R: Rng>(&self, rng: &mut R) -> (PhaseScreen, PhaseScreen) {
        let n = self.filter.len();
        if self.zero {
            return (PhaseScreen::zeros(n, self.dz), PhaseScreen::zeros(n, self.dz));
        }
        let mut buf: Vec<Complex64> = self
            .filter
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.plan.inverse_raw(&mut buf);
        let a = buf.iter().map(|c| c.re).collect();
        let b = buf.iter().map(|c| c.im).collect();
        (PhaseScreen { values: a, dz: self.dz }, PhaseScreen { values: b, dz: self.dz })
    }
}

/// Draw one screen increment over `dz`.
pub fn make_screen<R: Rng>(
    rng: &mut R,
    grid: &TransverseGrid,
    model: &CovarianceModel,
    dz: f64,
) -> Result<PhaseScreen> {
    Ok(ScreenSynthesizer::new(grid, model, dz)?.draw_pair(rng).0)
}
