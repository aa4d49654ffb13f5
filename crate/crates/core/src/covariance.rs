//! Lateral covariance models of the random medium and the coherence kernel.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{fixed_kronrod, integrate, integrate_breaks, QuadOptions};
use crate::regime::{Regime, RegimeScaling};

/// The family a covariance model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Gaussian,
    Tabulated,
}

/// How the line integral of `Q` inside the coherence kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineIntegral {
    /// Adaptive Gauss-Kronrod quadrature on `[0, 1]`.
    Adaptive,
    /// Error-function closed form (gaussian kind only).
    ClosedForm,
    /// Closed form when available, adaptive otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    /// Radial wavenumbers, ascending from 0.
    rho: Vec<f64>,
    spectrum: Vec<f64>,
    /// Radial lags, ascending from 0.
    r: Vec<f64>,
    cov: Vec<f64>,
    curvature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Gaussian { sigma2: f64, ell: f64 },
    Tabulated(Table),
}

/// An isotropic lateral covariance `R(x)` with power spectrum `R^(xi)`.
///
/// Fourier convention: `R^(xi) = int R(x) e^{-i xi.x} dx`, so that
/// `R(x) = (2 pi)^{-d} int R^(xi) e^{i xi.x} dxi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    dim: usize,
    repr: Repr,
}

fn linear_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Bessel function `J0` by the trapezoid rule on its periodic integral
/// representation, which converges geometrically once the node count
/// exceeds the argument.
pub(crate) fn bessel_j0(x: f64) -> f64 {
    let n = (x.abs().ceil() as usize + 40).next_multiple_of(4);
    let mut s = 0.0;
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        s += (x * th.sin()).cos();
    }
    s / n as f64
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Config(format!("covariance dimension {d} not supported (1 to 3)")))
    }
}

fn check_table(name: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Config(format!("{name} table needs at least two (x, value) rows of equal length")));
    }
    if xs[0] != 0.0 {
        return Err(Error::Config(format!("{name} table must start at 0")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name} table abscissae must be strictly increasing")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} table contains non-finite values")));
    }
    Ok(())
}

impl CovarianceModel {
    /// `R(x) = sigma2 exp(-|x|^2 / (2 ell^2))`. A zero variance gives the
    /// homogeneous medium.
    pub fn gaussian(sigma2: f64, ell: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::Config(format!("covariance.sigma2 = {sigma2} must be >= 0")));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::Config(format!("covariance.ell = {ell} must be positive")));
        }
        Ok(Self { dim, repr: Repr::Gaussian { sigma2, ell } })
    }

    /// A homogeneous medium (`R = 0`).
    pub fn zero(dim: usize) -> Result<Self> {
        Self::gaussian(0.0, 1.0, dim)
    }

    /// An isotropic model defined by radial spectrum samples `(rho, R^)`,
    /// linearly interpolated and zero beyond the last sample. The radial
    /// covariance is tabulated by quadrature on `n_r` lags up to `r_max`.
    pub fn tabulated(dim: usize, rho: Vec<f64>, spectrum: Vec<f64>, r_max: f64, n_r: usize) -> Result<Self> {
        check_dim(dim)?;
        check_table("spectrum", &rho, &spectrum)?;
        if spectrum.iter().any(|&s| s < 0.0) {
            return Err(Error::Model("power spectrum samples must be nonnegative".into()));
        }
        if !(r_max > 0.0) || n_r < 2 {
            return Err(Error::Config("covariance table needs r_max > 0 and at least two lags".into()));
        }
        let r: Vec<f64> = (0..n_r).map(|j| r_max * j as f64 / (n_r - 1) as f64).collect();
        let cov = r
            .iter()
            .map(|&rj| radial_inverse_transform(dim, &rho, &spectrum, rj))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            repr: Repr::Tabulated(Table { rho, spectrum, r, cov, curvature: None }),
        })
    }

    /// An isotropic model with both the radial spectrum and the radial
    /// covariance supplied by the user. The two tables are not required to
    /// be Fourier-consistent; [`validate_hypothesis`] reports on that.
    pub fn tabulated_with_covariance(
        dim: usize,
        rho: Vec<f64>,
        spectrum: Vec<f64>,
        r: Vec<f64>,
        cov: Vec<f64>,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_table("spectrum", &rho, &spectrum)?;
        check_table("covariance", &r, &cov)?;
        Ok(Self {
            dim,
            repr: Repr::Tabulated(Table { rho, spectrum, r, cov, curvature: None }),
        })
    }

    /// Attach `Gamma = -c I` to a tabulated model, with `c` computed from
    /// the second spectral moment `(2 pi)^{-d} int xi_1^2 R^(xi) dxi`.
    pub fn with_spectral_curvature(mut self) -> Result<Self> {
        let d = self.dim;
        if let Repr::Tabulated(t) = &mut self.repr {
            let (rho, spec) = (t.rho.clone(), t.spectrum.clone());
            let m2 = integrate_breaks(
                |p: f64| linear_interp(&rho, &spec, p) * p.powi(d as i32 + 1),
                &rho,
                QuadOptions::new(1e-14, 1e-12),
            )?
            .value;
            t.curvature = Some(sphere_area(d) * m2 / ((2.0 * PI).powi(d as i32) * d as f64));
        }
        Ok(self)
    }

    pub fn kind(&self) -> CovarianceKind {
        match self.repr {
            Repr::Gaussian { .. } => CovarianceKind::Gaussian,
            Repr::Tabulated(_) => CovarianceKind::Tabulated,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(sigma2, ell)` for the gaussian kind.
    pub fn gaussian_params(&self) -> Option<(f64, f64)> {
        match self.repr {
            Repr::Gaussian { sigma2, ell } => Some((sigma2, ell)),
            Repr::Tabulated(_) => None,
        }
    }

    /// Largest lag at which the covariance is known.
    pub fn max_lag(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian { .. } => f64::INFINITY,
            Repr::Tabulated(t) => *t.r.last().expect("table is non-empty"),
        }
    }

    /// Largest wavenumber with nonzero spectral weight.
    pub fn max_wavenumber(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian { .. } => f64::INFINITY,
            Repr::Tabulated(t) => *t.rho.last().expect("table is non-empty"),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Config(format!(
                "vector of length {} given to a {}-dimensional model",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Covariance at radial distance `r >= 0`.
    pub fn covariance_radial(&self, r: f64) -> Result<f64> {
        match &self.repr {
            Repr::Gaussian { sigma2, ell } => Ok(sigma2 * (-r * r / (2.0 * ell * ell)).exp()),
            Repr::Tabulated(t) => {
                let max = *t.r.last().expect("table is non-empty");
                if r > max * (1.0 + 1e-12) {
                    return Err(Error::OutOfRange { value: r, max });
                }
                Ok(linear_interp(&t.r, &t.cov, r))
            }
        }
    }

    /// `R(x)`.
    pub fn covariance(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.covariance_radial(norm(x))
    }

    /// `R(0)`.
    pub fn variance(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian { sigma2, .. } => *sigma2,
            Repr::Tabulated(t) => t.cov[0],
        }
    }

    /// Spectrum at radial wavenumber `rho >= 0`.
    pub fn spectrum_radial(&self, rho: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian { sigma2, ell } => {
                sigma2
                    * (2.0 * PI * ell * ell).powf(self.dim as f64 / 2.0)
                    * (-ell * ell * rho * rho / 2.0).exp()
            }
            Repr::Tabulated(t) => {
                if rho > *t.rho.last().expect("table is non-empty") {
                    0.0
                } else {
                    linear_interp(&t.rho, &t.spectrum, rho)
                }
            }
        }
    }

    /// `R^(xi)`.
    pub fn spectrum(&self, xi: &[f64]) -> f64 {
        self.spectrum_radial(norm(xi))
    }

    /// `Q(x) = R(x) - R(0)`.
    pub fn centered(&self, x: &[f64]) -> Result<f64> {
        Ok(self.covariance(x)? - self.variance())
    }

    /// `Gamma = Hess R(0)` as a row-major `d x d` matrix.
    pub fn hessian_at_zero(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        let c = match &self.repr {
            Repr::Gaussian { sigma2, ell } => sigma2 / (ell * ell),
            Repr::Tabulated(t) => t.curvature.ok_or_else(|| {
                Error::Unsupported("tabulated covariance has no second-derivative data".into())
            })?,
        };
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = -c;
        }
        Ok(m)
    }

    /// `int_0^1 Q(tau + v s) ds`.
    pub fn line_integral_q(&self, tau: &[f64], v: &[f64], method: LineIntegral) -> Result<f64> {
        self.check_point(tau)?;
        self.check_point(v)?;
        let closed = matches!(self.repr, Repr::Gaussian { .. });
        match method {
            LineIntegral::ClosedForm if !closed => Err(Error::Unsupported(
                "closed-form line integral exists for the gaussian kind only".into(),
            )),
            LineIntegral::ClosedForm => Ok(self.line_integral_gaussian(tau, v)),
            LineIntegral::Auto if closed => Ok(self.line_integral_gaussian(tau, v)),
            _ => self.line_integral_adaptive(tau, v, 1e-12),
        }
    }

    fn line_integral_adaptive(&self, tau: &[f64], v: &[f64], abs_tol: f64) -> Result<f64> {
        let r0 = self.variance();
        let mut p = vec![0.0; self.dim];
        let mut err = None;
        let q = integrate(
            |s: f64| {
                for i in 0..p.len() {
                    p[i] = tau[i] + v[i] * s;
                }
                match self.covariance_radial(norm(&p)) {
                    Ok(c) => c - r0,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            QuadOptions::new(abs_tol, 0.0),
        )
        .map_err(|e| Error::Numeric(format!("coherence kernel line integral: {e}")))?;
        match err {
            Some(e) => Err(e),
            None => Ok(q.value),
        }
    }

    fn line_integral_gaussian(&self, tau: &[f64], v: &[f64]) -> f64 {
        let Repr::Gaussian { sigma2, ell } = self.repr else {
            unreachable!("caller checked the kind")
        };
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let tv: f64 = tau.iter().zip(v).map(|(a, b)| a * b).sum();
        let tt: f64 = tau.iter().map(|a| a * a).sum();
        let vn = vv.sqrt();
        let c = vn / (ell * 2f64.sqrt());
        if c < 0.05 {
            // The integrand varies slowly: a single Kronrod panel is exact
            // to rounding and avoids cancellation in the erf difference.
            return fixed_kronrod(
                |s| {
                    let r2 = tt + 2.0 * s * tv + s * s * vv;
                    sigma2 * (-r2 / (2.0 * ell * ell)).exp() - sigma2
                },
                0.0,
                1.0,
            );
        }
        let s0 = tv / vv;
        let perp2 = (tt - tv * tv / vv).max(0.0);
        let a = s0 * c;
        let b = (1.0 + s0) * c;
        let diff = if a >= 0.0 {
            libm::erfc(a) - libm::erfc(b)
        } else if b <= 0.0 {
            libm::erfc(-b) - libm::erfc(-a)
        } else {
            libm::erf(b) - libm::erf(a)
        };
        sigma2 * (-perp2 / (2.0 * ell * ell)).exp() * ell * (PI / 2.0).sqrt() / vn * diff - sigma2
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn radial_inverse_transform(dim: usize, rho: &[f64], spectrum: &[f64], r: f64) -> Result<f64> {
    let f = |p: f64| {
        let s = linear_interp(rho, spectrum, p);
        match dim {
            1 => s * (p * r).cos() / PI,
            2 => s * bessel_j0(p * r) * p / (2.0 * PI),
            _ => {
                let x = p * r;
                let sinc = if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
                s * sinc * p * p / (2.0 * PI * PI)
            }
        }
    };
    let scale = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    Ok(integrate_breaks(f, rho, QuadOptions::new(1e-13 * scale, 1e-11))?.value)
}

/// `(2 pi)^{-d} int R^(xi) dxi` by radial quadrature.
pub fn spectral_mass(model: &CovarianceModel) -> Result<f64> {
    let d = model.dim();
    let f = |p: f64| model.spectrum_radial(p) * p.powi(d as i32 - 1);
    let opts = QuadOptions::new(1e-14, 1e-12);
    let integral = match &model.repr {
        Repr::Gaussian { ell, .. } => {
            let top = 40.0 / ell;
            integrate_breaks(f, &[0.0, 2.0 / ell, 6.0 / ell, top], opts)?.value
        }
        Repr::Tabulated(t) => integrate_breaks(f, &t.rho, opts)?.value,
    };
    Ok(sphere_area(d) * integral / (2.0 * PI).powi(d as i32))
}

/// Coherence kernel
/// `Q(tau, alpha) = exp(k0^2 z / (4 eta^2) int_0^1 Q(tau + alpha s z / k0) ds)`
/// evaluated with adaptive quadrature.
pub fn q_kernel(
    model: &CovarianceModel,
    tau: &[f64],
    alpha: &[f64],
    z: f64,
    scaling: &RegimeScaling,
) -> Result<f64> {
    q_kernel_with(model, tau, alpha, z, scaling, LineIntegral::Adaptive)
}

/// [`q_kernel`] with an explicit choice of line-integral method.
pub fn q_kernel_with(
    model: &CovarianceModel,
    tau: &[f64],
    alpha: &[f64],
    z: f64,
    scaling: &RegimeScaling,
    method: LineIntegral,
) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("coherence kernel needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let k0 = scaling.k0();
    let eta = scaling.eta();
    let pref = k0 * k0 * z / (4.0 * eta * eta);
    let v: Vec<f64> = alpha.iter().map(|a| a * z / k0).collect();
    let integral = match method {
        LineIntegral::Adaptive => {
            model.check_point(tau)?;
            model.check_point(&v)?;
            model.line_integral_adaptive(tau, &v, 1e-10 / pref.max(1e-300))?
        }
        m => model.line_integral_q(tau, &v, m)?,
    };
    Ok((pref * integral).exp())
}

/// Outcome of one admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

/// Pass/fail list produced by [`validate_hypothesis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, id: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Human-readable multi-line report.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let status = if e.passed { "PASS" } else { "FAIL" };
            let value = e.value.map(|v| format!(" [{v:.6e}]")).unwrap_or_default();
            s.push_str(&format!("{status} {}{value}: {}\n", e.id, e.detail));
        }
        let verdict = if self.all_passed() { "admissible" } else { "not admissible" };
        s.push_str(&format!("overall: {verdict}\n"));
        s
    }

    /// Flat key-value records, one `check.<id>.<field>` key per datum.
    pub fn to_records(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.push((format!("check.{}.passed", e.id), e.passed.to_string()));
            if let Some(v) = e.value {
                out.push((format!("check.{}.value", e.id), format!("{v:e}")));
            }
            out.push((format!("check.{}.detail", e.id), e.detail.clone()));
        }
        out.push(("overall.passed".into(), self.all_passed().to_string()));
        out
    }
}

fn sample_lags(model: &CovarianceModel) -> Vec<f64> {
    let max = match model.gaussian_params() {
        Some((_, ell)) => 12.0 * ell,
        None => model.max_lag(),
    };
    (0..=400).map(|i| max * i as f64 / 400.0).collect()
}

fn sample_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0]],
        2 => (0..8)
            .map(|k| {
                let t = PI * k as f64 / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0 / 3f64.sqrt(); 3],
        ],
    }
}

fn entry(id: &str, passed: bool, value: Option<f64>, detail: impl Into<String>) -> CheckEntry {
    CheckEntry { id: id.into(), passed, value, detail: detail.into() }
}

/// Numerically check the structural assumptions on the medium and the
/// admissibility of the scaling. Failures are report entries, not errors.
pub fn validate_hypothesis(model: &CovarianceModel, scaling: &RegimeScaling) -> ValidationReport {
    let d = model.dim();
    let lags = sample_lags(model);
    let dirs = sample_directions(d);
    let r0 = model.variance();
    let mut entries = Vec::new();

    // Symmetry R(x) = R(-x) at sampled points.
    let mut sym_err = 0.0f64;
    let mut sym_ok = true;
    for dir in &dirs {
        for &r in lags.iter().step_by(10) {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let mx: Vec<f64> = x.iter().map(|c| -c).collect();
            match (model.covariance(&x), model.covariance(&mx)) {
                (Ok(a), Ok(b)) => sym_err = sym_err.max((a - b).abs()),
                _ => sym_ok = false,
            }
        }
    }
    entries.push(entry(
        "symmetry",
        sym_ok && sym_err <= 1e-14 * r0.abs().max(1.0),
        Some(sym_err),
        "max |R(x) - R(-x)| over sampled points",
    ));

    // Sampled values of R and Q.
    let cov: Vec<f64> = lags.iter().map(|&r| model.covariance_radial(r).unwrap_or(f64::NAN)).collect();
    let q_max = cov.iter().map(|c| c - r0).fold(f64::NEG_INFINITY, f64::max);
    let q_ok = cov.iter().all(|c| c.is_finite()) && q_max <= 1e-12 * r0.abs().max(1e-300);
    entries.push(entry(
        "q_sign",
        q_ok,
        Some(q_max),
        if q_ok {
            "Q(x) = R(x) - R(0) <= 0 at every sampled lag".to_string()
        } else {
            format!("Q(x) > 0 at some sampled lag (max Q = {q_max:.3e})")
        },
    ));

    // Spectrum sign.
    let rho_max = match model.gaussian_params() {
        Some((_, ell)) => 12.0 / ell,
        None => model.max_wavenumber(),
    };
    let spec_min = (0..=400)
        .map(|i| model.spectrum_radial(rho_max * i as f64 / 400.0))
        .fold(f64::INFINITY, f64::min);
    entries.push(entry(
        "spectrum_nonnegative",
        spec_min >= 0.0,
        Some(spec_min),
        "min R^(xi) over sampled wavenumbers",
    ));

    // L1 and Linf membership of R and R^ (radial quadrature on the sampled range).
    let r_l1 = {
        let h = lags[1] - lags[0];
        lags.iter()
            .zip(&cov)
            .map(|(r, c)| c.abs() * r.powi(d as i32 - 1) * h)
            .sum::<f64>()
            * sphere_area(d)
    };
    let r_tail = cov.last().copied().unwrap_or(0.0).abs();
    let l1_ok = r_l1.is_finite()
        && cov.iter().all(|c| c.abs() <= r0.abs() * (1.0 + 1e-12))
        && (model.kind() == CovarianceKind::Tabulated || r_tail <= 1e-12 * r0.abs().max(1e-300));
    entries.push(entry(
        "l1_linf",
        l1_ok,
        Some(r_l1),
        "R bounded by R(0) and integrable on the sampled range; R^ bounded by its value at 0",
    ));

    // Fourier consistency.
    match spectral_mass(model) {
        Ok(mass) => {
            let rel = if r0 == 0.0 { mass.abs() } else { ((mass - r0) / r0).abs() };
            entries.push(entry(
                "fourier_consistency",
                rel <= 1e-8,
                Some(rel),
                "relative gap between (2 pi)^-d int R^ and R(0)",
            ));
        }
        Err(e) => entries.push(entry("fourier_consistency", false, None, e.to_string())),
    }

    // Radial majorant: the model is isotropic so sup over spheres is the
    // radial profile itself; integrability is judged from the tail share.
    let majorant = |p: f64| model.spectrum_radial(p) * p.powi(d as i32 - 1);
    let total = integrate_breaks(majorant, &[0.0, 0.5 * rho_max, rho_max], QuadOptions::new(1e-14, 1e-10));
    let tail = integrate_breaks(majorant, &[0.9 * rho_max, rho_max], QuadOptions::new(1e-14, 1e-10));
    match (total, tail) {
        (Ok(t), Ok(tl)) => {
            let share = if t.value > 0.0 { tl.value / t.value } else { 0.0 };
            entries.push(entry(
                "radial_majorant",
                share <= 1e-6,
                Some(share),
                "share of the radial majorant's mass in the outermost decile of the sampled range",
            ));
        }
        (Err(e), _) | (_, Err(e)) => entries.push(entry("radial_majorant", false, None, e.to_string())),
    }

    // Line integrability of s -> R(tau + s e).
    let s_max = model.max_lag().min(match model.gaussian_params() {
        Some((_, ell)) => 40.0 * ell,
        None => f64::INFINITY,
    });
    let mut line_ok = true;
    let mut line_max = 0.0f64;
    for dir in &dirs {
        for tau_r in [0.0, 0.5, 2.0] {
            let tau: Vec<f64> = (0..d).map(|i| if i == d - 1 { tau_r } else { 0.0 }).collect();
            let reach = (s_max - tau_r).max(0.0);
            let q = integrate(
                |s: f64| {
                    let p: Vec<f64> = tau.iter().zip(dir).map(|(t, e)| t + s * e).collect();
                    model.covariance(&p).map(f64::abs).unwrap_or(f64::NAN)
                },
                -reach,
                reach,
                QuadOptions::new(1e-12, 1e-8),
            );
            match q {
                Ok(v) if v.value.is_finite() => line_max = line_max.max(v.value),
                _ => line_ok = false,
            }
        }
    }
    entries.push(entry(
        "line_integrability",
        line_ok,
        Some(line_max),
        "max over sampled lines of int |R(tau + s e)| ds",
    ));

    // Spectral weight bound for d >= 3.
    if d >= 3 {
        let sup = (0..=400)
            .map(|i| {
                let p = rho_max * i as f64 / 400.0;
                (1.0 + p * p).sqrt().powi(d as i32 - 2) * model.spectrum_radial(p)
            })
            .fold(0.0f64, f64::max);
        entries.push(entry("spectral_weight", sup.is_finite(), Some(sup), "sup <xi>^(d-2) R^(xi)"));
    } else {
        entries.push(entry("spectral_weight", true, None, "not required for d < 3"));
    }

    // Regime admissibility.
    match scaling.check() {
        Ok(()) => entries.push(entry("regime", true, Some(scaling.eta()), "scaling parameters admissible")),
        Err(e) => entries.push(entry("regime", false, Some(scaling.eta()), e.to_string())),
    }

    // Negative definite Hessian for the diffusive regime.
    if scaling.regime() == Regime::Diffusive {
        match model.hessian_at_zero() {
            Ok(g) => {
                let max_diag = (0..d).map(|i| g[i * d + i]).fold(f64::NEG_INFINITY, f64::max);
                entries.push(entry(
                    "gamma_negative_definite",
                    max_diag < 0.0,
                    Some(max_diag),
                    "largest eigenvalue of Gamma = Hess R(0)",
                ));
            }
            Err(e) => entries.push(entry("gamma_negative_definite", false, None, e.to_string())),
        }
    } else {
        entries.push(entry("gamma_negative_definite", true, None, "not required in the kinetic regime"));
    }

    ValidationReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kin() -> RegimeScaling {
        RegimeScaling::kinetic(0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_values() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        assert_eq!(m.covariance(&[0.0]).unwrap(), 1.0);
        assert!((m.covariance(&[1.0]).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((m.spectrum(&[0.0]) - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert_eq!(m.spectrum(&[1.3]), m.spectrum(&[-1.3]));
    }

    #[test]
    fn gaussian_hessian() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 2).unwrap();
        assert_eq!(m.hessian_at_zero().unwrap(), vec![-1.0, 0.0, 0.0, -1.0]);
        let m = CovarianceModel::gaussian(4.0, 2.0, 1).unwrap();
        assert_eq!(m.hessian_at_zero().unwrap(), vec![-1.0]);
    }

    #[test]
    fn spectral_mass_matches_variance() {
        for d in 1..=3 {
            let m = CovarianceModel::gaussian(2.5, 0.7, d).unwrap();
            let mass = spectral_mass(&m).unwrap();
            assert!((mass / 2.5 - 1.0).abs() < 1e-8, "d={d}: {mass}");
        }
    }

    #[test]
    fn closed_form_matches_adaptive_line_integral() {
        let m = CovarianceModel::gaussian(1.3, 0.8, 2).unwrap();
        let cases: [([f64; 2], [f64; 2]); 6] = [
            ([0.3, -0.2], [1.5, 0.4]),
            ([2.0, 1.0], [-3.0, -1.0]),
            ([0.0, 0.0], [0.0, 0.0]),
            ([0.5, 0.5], [1e-3, 0.0]),
            ([-4.0, 0.0], [12.0, 0.1]),
            ([10.0, 0.0], [20.0, 0.0]),
        ];
        for (tau, v) in cases {
            let a = m.line_integral_q(&tau, &v, LineIntegral::Adaptive).unwrap();
            let c = m.line_integral_q(&tau, &v, LineIntegral::ClosedForm).unwrap();
            assert!((a - c).abs() < 1e-11, "{tau:?} {v:?}: {a} vs {c}");
        }
    }

    #[test]
    fn q_kernel_trivial_cases() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let s = kin();
        assert_eq!(q_kernel(&m, &[0.0], &[0.0], 2.0, &s).unwrap(), 1.0);
        let q = q_kernel(&m, &[0.7], &[0.0], 2.0, &s).unwrap();
        let expect = (2.0 * m.centered(&[0.7]).unwrap() / 4.0).exp();
        assert!((q - expect).abs() < 1e-12);
    }

    #[test]
    fn q_kernel_large_alpha_limit() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let s = kin();
        let limit = (-2.0f64 / 4.0).exp();
        let mut prev = f64::INFINITY;
        for alpha in [1e2, 1e3, 1e4, 1e5] {
            let q = q_kernel_with(&m, &[0.3], &[alpha], 2.0, &s, LineIntegral::ClosedForm).unwrap();
            let gap = (q - limit).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn q_kernel_symmetry_and_monotonicity() {
        let m = CovarianceModel::gaussian(1.0, 0.5, 2).unwrap();
        let s = kin();
        let a = q_kernel(&m, &[0.2, 0.1], &[0.4, -0.3], 1.0, &s).unwrap();
        let b = q_kernel(&m, &[-0.2, -0.1], &[-0.4, 0.3], 1.0, &s).unwrap();
        assert!((a - b).abs() < 1e-13);
        let mut prev = 1.0;
        for z in [0.5, 1.0, 2.0, 4.0] {
            let q = q_kernel(&m, &[0.2, 0.1], &[0.4, -0.3], z, &s).unwrap();
            assert!(q <= prev && q > 0.0);
            prev = q;
        }
    }

    #[test]
    fn bessel_j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-14);
    }

    #[test]
    fn tabulated_reproduces_gaussian() {
        for d in [1usize, 2] {
            let g = CovarianceModel::gaussian(1.0, 1.0, d).unwrap();
            let rho: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
            let spec: Vec<f64> = rho.iter().map(|&p| g.spectrum_radial(p)).collect();
            let t = CovarianceModel::tabulated(d, rho, spec, 6.0, 121).unwrap();
            for r in [0.0, 0.5, 1.0, 2.0] {
                let a = t.covariance_radial(r).unwrap();
                let b = g.covariance_radial(r).unwrap();
                assert!((a - b).abs() < 1e-4, "d={d} r={r}: {a} vs {b}");
            }
            assert!(matches!(t.covariance_radial(7.0), Err(Error::OutOfRange { .. })));
            assert!(matches!(t.hessian_at_zero(), Err(Error::Unsupported(_))));
            let tc = t.with_spectral_curvature().unwrap();
            assert!((tc.hessian_at_zero().unwrap()[0] + 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn gaussian_kinetic_passes_validation() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 2).unwrap();
        let rep = validate_hypothesis(&m, &kin());
        assert!(rep.all_passed(), "{}", rep.to_text());
    }

    #[test]
    fn corrupted_table_fails_q_sign() {
        let rho = vec![0.0, 1.0, 2.0];
        let spec = vec![1.0, 0.5, 0.0];
        let r = vec![0.0, 1.0, 2.0];
        let cov = vec![1.0, 1.2, 0.1];
        let m = CovarianceModel::tabulated_with_covariance(1, rho, spec, r, cov).unwrap();
        let rep = validate_hypothesis(&m, &kin());
        assert!(!rep.entry("q_sign").unwrap().passed);
    }

    #[test]
    fn diffusive_half_fails_regime_check() {
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let s = RegimeScaling::diffusive(0.5, 1.0, 1.0).unwrap();
        let rep = validate_hypothesis(&m, &s);
        let e = rep.entry("regime").unwrap();
        assert!(!e.passed);
        assert!(e.detail.contains("e^-e"));
    }
}
