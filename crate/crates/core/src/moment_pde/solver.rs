//! Operators of the phase-compensated moment equation and their evolution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::gaussianity::enumerate_pairings;
use crate::regime::RegimeScaling;

use super::couplings::{build_couplings, Coupling};
use super::measure::GridMeasure;

/// Largest `p + q` the solver accepts.
pub const MAX_SOLVER_ORDER: usize = 4;

/// Relative plane magnitude below which a source plane is skipped.
const SKIP_TOLERANCE: f64 = 1e-15;

/// Relative spectral weight below which a shift is dropped.
const WEIGHT_CUTOFF: f64 = 1e-17;

/// Safety margin on the step size: `(C0 / eta^2) (p + q)^2 dz / 2` must
/// stay below this value.
pub const STIFFNESS_LIMIT: f64 = 0.1;

/// Relative leaked total variation above which a run is flagged invalid.
pub const LEAK_LIMIT: f64 = 1e-6;

/// One term of the moment operator acting on two axes.
#[derive(Debug, Clone, Copy)]
struct PairOperator {
    coupling: Coupling,
    axis_a: usize,
    axis_b: usize,
    rest: usize,
}

/// Solver for the `(p, q)` moment equation in one transverse dimension.
#[derive(Debug, Clone)]
pub struct MomentSolver {
    p: usize,
    q: usize,
    n: usize,
    h: f64,
    scaling: RegimeScaling,
    c0: f64,
    /// `(m, w_m)` with `w_m = k0^2 / (4 eta^2) R^(m h) h / (2 pi)`.
    weights: Vec<(i64, f64)>,
    ops: Vec<PairOperator>,
    rest_offsets: Vec<Vec<usize>>,
}

/// Result of one evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evolution {
    pub psi: GridMeasure,
    pub z: f64,
    pub steps: usize,
    pub dz: f64,
    pub tv_initial: f64,
    /// Total variation after every step.
    pub tv_history: Vec<f64>,
    /// Estimated total variation shifted outside the grid.
    pub leaked: f64,
    pub snapshots: Vec<(f64, GridMeasure)>,
}

impl Evolution {
    pub fn leak_fraction(&self) -> f64 {
        self.leaked / self.tv_initial
    }

    pub fn is_valid(&self) -> bool {
        self.leak_fraction() <= LEAK_LIMIT
    }
}

/// Comparison of the full evolution with the gaussian approximation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub epsilon: f64,
    pub z: f64,
    pub dz: f64,
    pub steps: usize,
    pub tv_initial: f64,
    /// `|U psi0 - N psi0|_TV / |psi0|_TV`.
    pub error: f64,
    pub tv_full: f64,
    pub tv_gaussian: f64,
    /// `(2 p q)^(p min q + 1)`.
    pub gaussian_bound: f64,
    pub leak_fraction: f64,
    pub valid: bool,
}

impl MomentSolver {
    pub fn new(p: usize, q: usize, n: usize, h: f64, scaling: RegimeScaling, model: &CovarianceModel) -> Result<Self> {
        if model.dim() != 1 {
            return Err(Error::Unsupported(format!("moment solver runs in d = 1, model has d = {}", model.dim())));
        }
        if p + q == 0 || p + q > MAX_SOLVER_ORDER {
            return Err(Error::Size(format!("moment solver needs 1 <= p + q <= {MAX_SOLVER_ORDER}, got {}", p + q)));
        }
        let shape = GridMeasure::zeros(p, q, n, h)?;
        let couplings = build_couplings(p, q, 1)?;
        let eta = scaling.eta();
        let k0 = scaling.k0();
        let pref = k0 * k0 / (4.0 * eta * eta);
        let c0 = k0 * k0 * model.variance() / 4.0;
        let w0 = pref * model.spectrum(&[0.0]) * h / (2.0 * std::f64::consts::PI);
        let weights: Vec<(i64, f64)> = (-(n as i64 - 1)..n as i64)
            .map(|m| (m, pref * model.spectrum(&[m as f64 * h]) * h / (2.0 * std::f64::consts::PI)))
            .filter(|&(_, w)| w.abs() > WEIGHT_CUTOFF * w0.abs())
            .collect();
        let axes = p + q;
        let mut ops = Vec::new();
        let mut rest_offsets = Vec::new();
        let mut push = |coupling: Coupling, a: usize, b: usize| {
            let others: Vec<usize> = (0..axes).filter(|&x| x != a && x != b).collect();
            let mut offs = vec![0usize];
            for &ax in &others {
                let s = shape.stride(ax);
                offs = offs.iter().flat_map(|&o| (0..n).map(move |i| o + i * s)).collect();
            }
            ops.push(PairOperator { coupling, axis_a: a, axis_b: b, rest: rest_offsets.len() });
            rest_offsets.push(offs);
        };
        for ((j, l), _) in &couplings.a {
            push(Coupling::Cross(*j, *l), *j, p + *l);
        }
        for (c, _) in &couplings.b {
            match *c {
                Coupling::Direct(j, j2) => push(*c, j, j2),
                Coupling::Conjugate(l, l2) => push(*c, p + l, p + l2),
                Coupling::Cross(..) => unreachable!("B couplings are never cross"),
            }
        }
        Ok(Self { p, q, n, h, scaling, c0, weights, ops, rest_offsets })
    }

    /// Build a solver matching the grid of `psi0`.
    pub fn for_measure(psi0: &GridMeasure, scaling: RegimeScaling, model: &CovarianceModel) -> Result<Self> {
        Self::new(psi0.p, psi0.q, psi0.n, psi0.h, scaling, model)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Damping rate `C0 / eta^2` of the diagonal term.
    pub fn damping(&self) -> f64 {
        self.c0 / (self.scaling.eta() * self.scaling.eta())
    }

    /// Discrete operator norm bound `sum_m |w_m|`.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w.abs()).sum()
    }

    pub fn couplings(&self) -> Vec<Coupling> {
        self.ops.iter().map(|o| o.coupling).collect()
    }

    fn rate(&self, z: f64) -> f64 {
        z * self.scaling.eta() / (self.scaling.k0() * self.scaling.epsilon())
    }

    fn check(&self, rho: &GridMeasure) -> Result<()> {
        if rho.p != self.p || rho.q != self.q || rho.n != self.n || rho.h != self.h {
            return Err(Error::Config("measure does not match the solver grid".into()));
        }
        Ok(())
    }

    fn op_index(&self, c: Coupling) -> Result<usize> {
        self.ops
            .iter()
            .position(|o| o.coupling == c)
            .ok_or_else(|| Error::Config(format!("coupling {c:?} does not exist for p = {}, q = {}", self.p, self.q)))
    }

    /// Maximum modulus over each `(i_a, i_b)` plane.
    fn plane_max(&self, op: &PairOperator, rho: &GridMeasure) -> Vec<f64> {
        let n = self.n;
        let (sa, sb) = (rho.stride(op.axis_a), rho.stride(op.axis_b));
        let rest = &self.rest_offsets[op.rest];
        let mut out = vec![0.0f64; n * n];
        for ia in 0..n {
            for ib in 0..n {
                let base = ia * sa + ib * sb;
                out[ia * n + ib] = rest.iter().map(|&r| rho.values[base + r].norm()).fold(0.0, f64::max);
            }
        }
        out
    }

    fn coefficient_table(&self, op: &PairOperator, z: f64) -> Vec<Complex64> {
        let n = self.n as i64;
        let phi = self.rate(z) * self.h * self.h;
        let width = (2 * n - 1) as usize;
        let mut table = Vec::with_capacity(self.weights.len() * width);
        for &(m, w) in &self.weights {
            for d in -(n - 1)..n {
                let c = match op.coupling {
                    Coupling::Cross(..) => Complex64::from_polar(w, phi * (m * d) as f64),
                    Coupling::Direct(..) => -Complex64::from_polar(w, phi * (m * (d - m)) as f64),
                    Coupling::Conjugate(..) => -Complex64::from_polar(w, -phi * (m * (d - m)) as f64),
                };
                table.push(c);
            }
        }
        table
    }

    fn accumulate(&self, op: &PairOperator, rho: &GridMeasure, z: f64, out: &mut GridMeasure) {
        let n = self.n as i64;
        let (sa, sb) = (rho.stride(op.axis_a), rho.stride(op.axis_b));
        let rest = &self.rest_offsets[op.rest];
        let planes = self.plane_max(op, rho);
        let cut = SKIP_TOLERANCE * planes.iter().cloned().fold(0.0, f64::max);
        if cut == 0.0 {
            return;
        }
        let table = self.coefficient_table(op, z);
        let width = (2 * n - 1) as usize;
        let sign_b = if matches!(op.coupling, Coupling::Cross(..)) { -1 } else { 1 };
        let mut terms: Vec<(usize, usize, Complex64)> = Vec::with_capacity(self.n * self.n * self.weights.len());
        for ia in 0..n {
            for ib in 0..n {
                let out_base = ia as usize * sa + ib as usize * sb;
                let col = (ia - ib + n - 1) as usize;
                for (row, &(m, _)) in self.weights.iter().enumerate() {
                    let (src_a, src_b) = (ia - m, ib + sign_b * m);
                    if src_a < 0 || src_a >= n || src_b < 0 || src_b >= n {
                        continue;
                    }
                    if planes[(src_a * n + src_b) as usize] <= cut {
                        continue;
                    }
                    terms.push((out_base, src_a as usize * sa + src_b as usize * sb, table[row * width + col]));
                }
            }
        }
        let (src, dst) = (&rho.values, &mut out.values);
        if sa == 1 || sb == 1 {
            for &r in rest {
                for &(o, i, c) in &terms {
                    dst[o + r] += c * src[i + r];
                }
            }
        } else {
            for &(o, i, c) in &terms {
                for &r in rest {
                    dst[o + r] += c * src[i + r];
                }
            }
        }
    }

    /// Total variation one application of `op` moves outside the grid.
    fn leak_rate(&self, op: &PairOperator, rho: &GridMeasure) -> f64 {
        let n = self.n as i64;
        let (sa, sb) = (rho.stride(op.axis_a), rho.stride(op.axis_b));
        let rest = &self.rest_offsets[op.rest];
        let sign_b = if matches!(op.coupling, Coupling::Cross(..)) { -1 } else { 1 };
        let mut total = 0.0;
        for ia in 0..n {
            for ib in 0..n {
                let base = ia as usize * sa + ib as usize * sb;
                let mass: f64 = rest.iter().map(|&r| rho.values[base + r].norm()).sum();
                if mass == 0.0 {
                    continue;
                }
                let lost: f64 = self
                    .weights
                    .iter()
                    .filter(|&&(m, _)| {
                        let (ta, tb) = (ia + m, ib - sign_b * m);
                        ta < 0 || ta >= n || tb < 0 || tb >= n
                    })
                    .map(|(_, w)| w.abs())
                    .sum();
                total += lost * mass;
            }
        }
        total * rho.cell_volume()
    }

    /// Apply `L^1_{j,l}(z)` to `rho` (0-based indices).
    pub fn apply_l1(&self, j: usize, l: usize, rho: &GridMeasure, z: f64) -> Result<GridMeasure> {
        self.apply_coupling(Coupling::Cross(j, l), rho, z)
    }

    /// Apply `L^2` for a direct or conjugate pair.
    pub fn apply_l2(&self, c: Coupling, rho: &GridMeasure, z: f64) -> Result<GridMeasure> {
        if matches!(c, Coupling::Cross(..)) {
            return Err(Error::Config("cross couplings belong to L^1".into()));
        }
        self.apply_coupling(c, rho, z)
    }

    /// Apply the term of the moment operator attached to `c`.
    pub fn apply_coupling(&self, c: Coupling, rho: &GridMeasure, z: f64) -> Result<GridMeasure> {
        self.check(rho)?;
        let op = self.ops[self.op_index(c)?];
        let mut out = GridMeasure::zeros(self.p, self.q, self.n, self.h)?;
        self.accumulate(&op, rho, z, &mut out);
        Ok(out)
    }

    /// Apply the full operator `L(z) = (p+q)/2 L_eta + sum L^1 + sum L^2`.
    pub fn apply_full(&self, rho: &GridMeasure, z: f64) -> Result<GridMeasure> {
        self.check(rho)?;
        let mut out = GridMeasure::zeros(self.p, self.q, self.n, self.h)?;
        self.apply_active(&self.all_ops(), true, rho, z, &mut out);
        Ok(out)
    }

    fn all_ops(&self) -> Vec<usize> {
        (0..self.ops.len()).collect()
    }

    fn apply_active(&self, active: &[usize], damped: bool, rho: &GridMeasure, z: f64, out: &mut GridMeasure) {
        out.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        if damped {
            let d = -0.5 * (self.p + self.q) as f64 * self.damping();
            for (o, r) in out.values.iter_mut().zip(&rho.values) {
                *o = r * d;
            }
        }
        for &i in active {
            self.accumulate(&self.ops[i], rho, z, out);
        }
    }

    /// Largest step allowed by the stiffness rule.
    pub fn max_stable_step(&self) -> f64 {
        let pq = (self.p + self.q) as f64;
        2.0 * STIFFNESS_LIMIT / (self.damping() * pq * pq)
    }

    /// Step size resolving the phase oscillation of a measure concentrated
    /// like `psi0`, capped by the stiffness rule.
    pub fn suggest_step(&self, psi0: &GridMeasure, z: f64) -> Result<f64> {
        self.check(psi0)?;
        let mut mass = 0.0;
        let mut second = 0.0;
        for (i, v) in psi0.values.iter().enumerate() {
            let x = psi0.coords(i)[0];
            mass += v.norm();
            second += v.norm() * x * x;
        }
        if mass == 0.0 {
            return Err(Error::Diagnostic("initial measure vanishes".into()));
        }
        let spread_v = (second / mass).sqrt();
        let wsum = self.weight_sum();
        let spread_k = (self.weights.iter().map(|&(m, w)| w.abs() * (m as f64 * self.h).powi(2)).sum::<f64>() / wsum).sqrt();
        let freq = self.scaling.eta() / (self.scaling.k0() * self.scaling.epsilon())
            * 3.0
            * spread_k
            * 3.0
            * std::f64::consts::SQRT_2
            * (spread_v + spread_k);
        let dz = (1.0 / freq).min(self.max_stable_step()).min(z / 4.0);
        Ok(dz)
    }

    /// Integrate `d rho / dz = L rho` from 0 to `z` with classical RK4,
    /// where `L` contains the listed couplings and, if `damped`, the
    /// diagonal term.
    fn evolve_active(
        &self,
        psi0: &GridMeasure,
        active: &[usize],
        damped: bool,
        z: f64,
        dz: f64,
        snapshots: &[f64],
    ) -> Result<Evolution> {
        self.check(psi0)?;
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("evolution needs finite z >= 0, got {z}")));
        }
        if !(dz > 0.0 && dz.is_finite()) {
            return Err(Error::Config(format!("step dz = {dz} must be positive")));
        }
        let dz_cap = self.max_stable_step();
        if damped && dz > dz_cap * (1.0 + 1e-12) {
            return Err(Error::Instability(format!(
                "step dz = {dz} exceeds the stiffness limit {dz_cap:.4e}"
            )));
        }
        let steps = (z / dz).ceil().max(if z > 0.0 { 1.0 } else { 0.0 }) as usize;
        let h = if steps > 0 { z / steps as f64 } else { 0.0 };
        let tv0 = psi0.tv_norm();
        let growth = if damped {
            let pq = (self.p + self.q) as f64;
            self.damping() * pq * pq / 2.0
        } else {
            self.damping() * active.len() as f64
        };
        let mut rho = psi0.clone();
        let mut k = [psi0.clone(), psi0.clone(), psi0.clone(), psi0.clone()];
        let mut stage = psi0.clone();
        let mut tv_history = Vec::with_capacity(steps);
        let mut leaked = 0.0;
        let mut snaps = Vec::new();
        let mut pending: Vec<f64> = snapshots.to_vec();
        pending.sort_by(f64::total_cmp);
        let mut pending = pending.into_iter().peekable();
        while let Some(&s) = pending.peek() {
            if s > 0.0 {
                break;
            }
            snaps.push((s, rho.clone()));
            pending.next();
        }
        for step in 0..steps {
            let z0 = step as f64 * h;
            leaked += h * active.iter().map(|&i| self.leak_rate(&self.ops[i], &rho)).sum::<f64>();
            self.apply_active(active, damped, &rho, z0, &mut k[0]);
            stage.values.copy_from_slice(&rho.values);
            stage.axpy(Complex64::new(0.5 * h, 0.0), &k[0]);
            self.apply_active(active, damped, &stage, z0 + 0.5 * h, &mut k[1]);
            stage.values.copy_from_slice(&rho.values);
            stage.axpy(Complex64::new(0.5 * h, 0.0), &k[1]);
            self.apply_active(active, damped, &stage, z0 + 0.5 * h, &mut k[2]);
            stage.values.copy_from_slice(&rho.values);
            stage.axpy(Complex64::new(h, 0.0), &k[2]);
            self.apply_active(active, damped, &stage, z0 + h, &mut k[3]);
            for i in 0..rho.values.len() {
                rho.values[i] += h / 6.0 * (k[0].values[i] + 2.0 * k[1].values[i] + 2.0 * k[2].values[i] + k[3].values[i]);
            }
            let tv = rho.tv_norm();
            let z1 = z0 + h;
            let bound = tv0 * (growth * z1).exp() * (1.0 + 1e-9);
            if !tv.is_finite() || tv > bound {
                return Err(Error::Instability(format!(
                    "total variation {tv:.6e} exceeds the growth bound {bound:.6e} at z = {z1}"
                )));
            }
            tv_history.push(tv);
            while let Some(&s) = pending.peek() {
                if s > z1 + 1e-12 * z.max(1.0) {
                    break;
                }
                snaps.push((s, rho.clone()));
                pending.next();
            }
        }
        Ok(Evolution { psi: rho, z, steps, dz: h, tv_initial: tv0, tv_history, leaked, snapshots: snaps })
    }

    /// Full solution operator `U(z) psi0`.
    pub fn evolve_full(&self, psi0: &GridMeasure, z: f64, dz: f64, snapshots: &[f64]) -> Result<Evolution> {
        self.evolve_active(psi0, &self.all_ops(), true, z, dz, snapshots)
    }

    /// Solution operator `U_gamma(z) psi0` of `d rho / dz = L^1_gamma rho`.
    pub fn evolve_pair(&self, psi0: &GridMeasure, j: usize, l: usize, z: f64, dz: f64) -> Result<Evolution> {
        let i = self.op_index(Coupling::Cross(j, l))?;
        self.evolve_active(psi0, &[i], false, z, dz, &[])
    }

    /// Gaussian approximation
    /// `N psi0 = U_eta^((p+q)/2) [ sum_kappa prod_{gamma in Lambda_kappa} (U_gamma - I) + I ] psi0`.
    ///
    /// Products over shared sub-pairings are evaluated once. Returns the
    /// result and the largest leaked fraction among the pair evolutions.
    pub fn evolve_gaussian(&self, psi0: &GridMeasure, z: f64, dz: f64) -> Result<(GridMeasure, f64)> {
        self.check(psi0)?;
        let mut memo: BTreeMap<Vec<(usize, usize)>, GridMeasure> = BTreeMap::new();
        memo.insert(Vec::new(), psi0.clone());
        let tv0 = psi0.tv_norm();
        let mut leak: f64 = 0.0;
        let mut sum = psi0.clone();
        let sets: Vec<Vec<(usize, usize)>> = if self.p == 0 || self.q == 0 {
            Vec::new()
        } else {
            enumerate_pairings(self.p, self.q)?.iter().map(|s| s.pairs().to_vec()).collect()
        };
        for set in &sets {
            let mut prefix: Vec<(usize, usize)> = Vec::new();
            for &pair in set {
                let mut next = prefix.clone();
                next.push(pair);
                if !memo.contains_key(&next) {
                    let base = memo[&prefix].clone();
                    let evo = self.evolve_pair(&base, pair.0, pair.1, z, dz)?;
                    leak = leak.max(evo.leaked / tv0);
                    let mut diff = evo.psi;
                    diff.axpy(Complex64::new(-1.0, 0.0), &base);
                    memo.insert(next.clone(), diff);
                }
                prefix = next;
            }
            sum.axpy(Complex64::new(1.0, 0.0), &memo[&prefix]);
        }
        let damp = (-0.5 * (self.p + self.q) as f64 * self.damping() * z).exp();
        sum.values.iter_mut().for_each(|v| *v *= damp);
        Ok((sum, leak))
    }

    /// Relative total-variation distance between `U(z) psi0` and `N(z) psi0`.
    pub fn error_norm(&self, psi0: &GridMeasure, z: f64, dz: f64) -> Result<ErrorReport> {
        let full = self.evolve_full(psi0, z, dz, &[])?;
        let (gauss, leak_n) = self.evolve_gaussian(psi0, z, dz)?;
        let tv0 = full.tv_initial;
        let error = full.psi.tv_distance(&gauss)? / tv0;
        let leak_fraction = full.leak_fraction().max(leak_n);
        let (p, q) = (self.p as f64, self.q as f64);
        Ok(ErrorReport {
            epsilon: self.scaling.epsilon(),
            z,
            dz: full.dz,
            steps: full.steps,
            tv_initial: tv0,
            error,
            tv_full: full.psi.tv_norm() / tv0,
            tv_gaussian: gauss.tv_norm() / tv0,
            gaussian_bound: (2.0 * p * q).powi(self.p.min(self.q) as i32 + 1),
            leak_fraction,
            valid: leak_fraction <= LEAK_LIMIT,
        })
    }

    /// Recover the Fourier moment `mu^ = Pi psi` at distance `z`.
    pub fn moment_from_psi(&self, psi: &GridMeasure, z: f64) -> Result<GridMeasure> {
        self.check(psi)?;
        let mut mu = psi.clone();
        mu.modulate_quadratic(-self.rate(z));
        Ok(mu)
    }
}

/// Integrate the full moment equation for the grid of `psi0`.
pub fn evolve_full(
    psi0: &GridMeasure,
    z: f64,
    scaling: RegimeScaling,
    model: &CovarianceModel,
    dz: f64,
) -> Result<Evolution> {
    MomentSolver::for_measure(psi0, scaling, model)?.evolve_full(psi0, z, dz, &[])
}

/// Gaussian approximation `N(z) psi0` for the grid of `psi0`.
pub fn evolve_gaussian(
    psi0: &GridMeasure,
    z: f64,
    scaling: RegimeScaling,
    model: &CovarianceModel,
    dz: f64,
) -> Result<GridMeasure> {
    Ok(MomentSolver::for_measure(psi0, scaling, model)?.evolve_gaussian(psi0, z, dz)?.0)
}

/// Relative distance between the full and gaussian evolutions.
pub fn error_norm(
    psi0: &GridMeasure,
    z: f64,
    scaling: RegimeScaling,
    model: &CovarianceModel,
    dz: f64,
) -> Result<ErrorReport> {
    MomentSolver::for_measure(psi0, scaling, model)?.error_norm(psi0, z, dz)
}
