//! Gradient descent-ascent over the discretized action, instanton-action
//! extraction, the critical-fraction scan, and power-law exponent fits.
//!
//! The action is minimized along B_x and maximized along B_z on the real
//! slice (it is concave in real B_z), so the update is
//!
//!   B_x ← B_x − η ∂I/∂B_x,   B_z ← B_z + η ∂I/∂B_z,
//!
//! with backtracking (η halving) whenever the proposed B_x step would raise
//! the action at fixed B_z.

use thiserror::Error;

use crate::action::{
    total_action, total_action_with_gradient, ActionBreakdown, ActionError, BoundarySpec,
    FieldConfig, TimeGrid,
};
use crate::model::{
    broken_saddles, delta_param, instanton_seed, trivial_saddle, ModelParams, GAMMA_C,
};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("optimized Z2 configuration has no B_x sign change at gamma/gamma_c = {gamma_ratio}; instanton collapsed")]
    SeparationFailure { gamma_ratio: f64 },
    #[error("action difference does not change sign over the k grid [{k_min}, {k_max}]")]
    NoCrossing { k_min: f64, k_max: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("power-law fit needs strictly positive data")]
    NonPositiveData,
    #[error("power-law fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate abscissa: all x values equal")]
    DegenerateX,
}

/// Step-size schedule and stopping rule for the descent-ascent loop.
#[derive(Debug, Clone, Copy)]
pub struct DescentSettings {
    /// Initial step size η (units J = 1); halved on rejected B_x steps and
    /// regrown by `step_growth` on accepted ones.
    pub step_size: f64,
    /// Stop when |I_n − I_{n−1}| stays below this on two consecutive
    /// accepted iterations.
    pub threshold: f64,
    /// Additional stationarity requirement, sup-norm of the gradient. For a
    /// saddle search the B_x descent and B_z ascent can cancel in the total,
    /// so |ΔI| alone would stop long before the fields settle.
    pub grad_tol: f64,
    pub max_iters: u32,
    pub step_growth: f64,
    /// Upper bound on η. Internally also capped at 1.6/(81·dt), the
    /// stability limit of the concave B_z direction.
    pub max_step: f64,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            step_size: 1e-2,
            threshold: 1e-7,
            grad_tol: 1e-7,
            max_iters: 20_000,
            step_growth: 1.05,
            max_step: 2.0,
        }
    }
}

impl DescentSettings {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_max_iters(mut self, max_iters: u32) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// Result of one descent-ascent run.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub config: FieldConfig,
    pub action: ActionBreakdown,
    pub iterations: u32,
    /// False when `max_iters` was hit before the action change settled.
    pub converged: bool,
    pub final_delta: f64,
    pub grad_sup_norm: f64,
}

/// Minimize over B_x, maximize over B_z, starting from `config0`.
pub fn descend_ascend(
    config0: &FieldConfig,
    spec: BoundarySpec,
    params: &ModelParams,
    settings: &DescentSettings,
) -> Result<DescentOutcome, OptimizerError> {
    let dt = config0.grid().dt();
    let eta_cap = settings.max_step.min(1.6 / (81.0 * dt));
    let mut cfg = config0.clone();
    let mut eta = settings.step_size.min(eta_cap);
    let (mut value, mut grad) = total_action_with_gradient(&cfg, spec, params)?;
    let mut consecutive_small = 0u32;
    let mut iterations = 0u32;
    let mut converged = false;
    let mut final_delta = f64::INFINITY;

    while iterations < settings.max_iters {
        iterations += 1;
        // monotone slack at round-off scale
        let slack = 1e-13 * (1.0 + value.total.abs());

        // B_x trial with backtracking at fixed B_z
        let mut halved = false;
        let mut trial;
        let mut halvings = 0;
        loop {
            trial = cfg.clone();
            for (b, g) in trial.bx_mut().iter_mut().zip(grad.bx.iter()) {
                *b -= eta * g;
            }
            let trial_total = total_action(&trial, spec, params)?.total;
            if trial_total <= value.total + slack || halvings >= 60 {
                break;
            }
            eta *= 0.5;
            halved = true;
            halvings += 1;
        }
        // B_z ascent with the (possibly halved) step
        for (b, g) in trial.bz_mut().iter_mut().zip(grad.bz.iter()) {
            *b += eta * g;
        }
        cfg = trial;
        let (next_value, next_grad) = total_action_with_gradient(&cfg, spec, params)?;
        final_delta = (next_value.total - value.total).abs();
        value = next_value;
        grad = next_grad;

        if !halved && final_delta < settings.threshold && grad.sup_norm() < settings.grad_tol {
            consecutive_small += 1;
            if consecutive_small >= 2 {
                converged = true;
                break;
            }
        } else {
            consecutive_small = 0;
        }
        eta = (eta * settings.step_growth).min(eta_cap);
    }

    Ok(DescentOutcome {
        grad_sup_norm: grad.sup_norm(),
        config: cfg,
        action: value,
        iterations,
        converged,
        final_delta,
    })
}

/// Per-qubit instanton action I*(γ, T): difference between the optimized Z₂
/// and P² totals, in which bulk constants and the t = 0 boundary terms cancel.
#[derive(Debug, Clone)]
pub struct InstantonResult {
    pub i_star: f64,
    /// Signed difference before clamping at zero.
    pub i_star_raw: f64,
    pub config_z2: FieldConfig,
    pub config_p2: FieldConfig,
    pub iterations_z2: u32,
    pub iterations_p2: u32,
    pub converged: bool,
    pub residual_grad_norm: f64,
    /// True when T ≥ 20/√δ (always true for γ ≥ γ_c).
    pub t_adequate: bool,
}

/// Grid used for a given γ: the base grid stretched to
/// T = max(T_base, 300, 20/√|δ|) with |δ| = 2(γ+γ_c)²|γ_c−γ|.
///
/// Below γ_c this is the instanton-width requirement; above it the same
/// scale governs the boundary-response decay rate κ ≈ √(|δ|/2), and the
/// Z₂/P² edge contributions only cancel once e^{−κT} is negligible.
pub fn sweep_grid_for(gamma: f64, base: &TimeGrid) -> Result<TimeGrid, ActionError> {
    let mut t = base.total_time().max(300.0);
    let delta_abs = 2.0 * (gamma + GAMMA_C).powi(2) * (GAMMA_C - gamma).abs();
    if delta_abs > 0.0 {
        t = t.max(20.0 / delta_abs.sqrt());
    }
    TimeGrid::with_duration(base.dt(), t.min(40_000.0))
}

pub fn instanton_action(
    params: &ModelParams,
    grid: &TimeGrid,
    settings: &DescentSettings,
) -> Result<InstantonResult, OptimizerError> {
    let gamma = params.gamma();
    let below = gamma < GAMMA_C;
    let t_total = grid.total_time();
    let center = 0.5 * t_total;

    let (seed_p2, seed_z2, t_adequate) = if below {
        let (plus, _) = broken_saddles(params)?;
        let theory = delta_param(params)?;
        let seed_z2 = instanton_seed(&theory, center, *grid)?;
        let adequate = theory.delta <= 0.0 || t_total >= 20.0 / theory.delta.sqrt();
        (FieldConfig::constant(*grid, plus.bx, plus.bz), seed_z2, adequate)
    } else {
        let s = trivial_saddle(params);
        let flat = FieldConfig::constant(*grid, s.bx, s.bz);
        (flat.clone(), flat, true)
    };

    let p2 = descend_ascend(&seed_p2, BoundarySpec::P2, params, settings)?;
    let z2 = descend_ascend(&seed_z2, BoundarySpec::Z2, params, settings)?;

    if gamma < 0.95 * GAMMA_C {
        let (plus, _) = broken_saddles(params)?;
        if z2.config.bx_sign_changes(0.1 * plus.bx) == 0 {
            return Err(OptimizerError::SeparationFailure { gamma_ratio: gamma / GAMMA_C });
        }
    }

    let raw = z2.action.total - p2.action.total;
    Ok(InstantonResult {
        i_star: raw.max(0.0),
        i_star_raw: raw,
        iterations_z2: z2.iterations,
        iterations_p2: p2.iterations,
        converged: z2.converged && p2.converged,
        residual_grad_norm: z2.grad_sup_norm.max(p2.grad_sup_norm),
        config_z2: z2.config,
        config_p2: p2.config,
        t_adequate,
    })
}

/// One row of a γ sweep; `error` is set and `i_star` is NaN when that row
/// failed.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub gamma: f64,
    pub t_total: f64,
    pub i_star: f64,
    pub grad_norm: f64,
    pub iterations: u32,
    pub converged: bool,
    pub error: Option<String>,
}

/// Instanton action per γ (units J = 1). Rows are independent; failures are
/// recorded per row and the sweep continues.
pub fn sweep_gamma(gammas: &[f64], base: &TimeGrid, settings: &DescentSettings) -> Vec<SweepRow> {
    gammas
        .iter()
        .map(|&gamma| {
            let row = (|| -> Result<SweepRow, OptimizerError> {
                let params = ModelParams::dimensionless(gamma, 1)?;
                let grid = sweep_grid_for(gamma, base)?;
                let res = instanton_action(&params, &grid, settings)?;
                Ok(SweepRow {
                    gamma,
                    t_total: grid.total_time(),
                    i_star: res.i_star,
                    grad_norm: res.residual_grad_norm,
                    iterations: res.iterations_z2.max(res.iterations_p2),
                    converged: res.converged,
                    error: None,
                })
            })();
            row.unwrap_or_else(|e| SweepRow {
                gamma,
                t_total: f64::NAN,
                i_star: f64::NAN,
                grad_norm: f64::NAN,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            })
        })
        .collect()
}

/// Least-squares power-law fit of ln y against ln x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult, FitError> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(FitError::TooFewPoints(xs.len().min(ys.len())));
    }
    if !xs.iter().chain(ys.iter()).all(|&v| v > 0.0 && v.is_finite()) {
        return Err(FitError::NonPositiveData);
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(FitError::DegenerateX);
    }
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok(FitResult { exponent: slope, stderr, window: (lo, hi), r_squared })
}

/// Per-k comparison of the zero-instanton and one-instanton optima.
#[derive(Debug, Clone)]
pub struct KcRow {
    pub k: f64,
    pub total_zero: f64,
    pub total_one: f64,
    /// ΔI_bdy = ΔI⁺_bdy − ΔI⁻_bdy, recovered as I* − (I_one − I_zero).
    pub delta_i_bdy: f64,
    pub i_star: f64,
}

#[derive(Debug, Clone)]
pub struct KcScan {
    pub gamma: f64,
    pub k_c: f64,
    /// Grid-resolution error bar.
    pub k_err: f64,
    pub i_star: f64,
    pub rows: Vec<KcRow>,
}

/// Default k grid from the gradient-descent protocol: {0.500, 0.501, …, 0.510}.
pub fn default_k_grid() -> Vec<f64> {
    (0..=10).map(|i| 0.5 + 1e-3 * i as f64).collect()
}

/// Scan the subsystem fraction for the point where the single-instanton
/// configuration overtakes the zero-instanton one, i.e. ΔI_bdy(k) = I*.
/// `k_c` interpolates the sign change of the optimized action difference.
pub fn critical_fraction(
    params: &ModelParams,
    grid: &TimeGrid,
    settings: &DescentSettings,
    k_grid: &[f64],
) -> Result<KcScan, OptimizerError> {
    assert!(k_grid.len() >= 2, "k grid needs at least two points");
    let gamma = params.gamma();
    let (plus, _) = broken_saddles(params)?;
    let theory = delta_param(params)?;
    let center = 0.5 * grid.total_time();

    let base = instanton_action(params, grid, settings)?;
    let i_star = base.i_star;

    let seed_zero = FieldConfig::constant(*grid, plus.bx, plus.bz);
    let seed_one = instanton_seed(&theory, center, *grid)?;

    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let spec = BoundarySpec::Subsystem(k);
        let zero = descend_ascend(&seed_zero, spec, params, settings)?;
        let one = descend_ascend(&seed_one, spec, params, settings)?;
        let diff = one.action.total - zero.action.total;
        rows.push(KcRow {
            k,
            total_zero: zero.action.total,
            total_one: one.action.total,
            delta_i_bdy: i_star - diff,
            i_star,
        });
    }

    let k_err = rows.windows(2).map(|w| w[1].k - w[0].k).fold(0.0f64, f64::max);
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.k, r.total_one - r.total_zero)).collect();
    let k_c = locate_exchange(&pairs, settings.threshold, i_star).ok_or(
        OptimizerError::NoCrossing {
            k_min: rows.first().unwrap().k,
            k_max: rows.last().unwrap().k,
        },
    )?;
    Ok(KcScan { gamma, k_c, k_err, i_star, rows })
}

/// Locate where the one- and zero-instanton branches exchange, given
/// (k, I_one − I_zero) pairs. A strict sign change is interpolated linearly.
/// When the zero-instanton branch instead terminates at a spinodal, the
/// difference stays positive and vanishes like (k_s − k)^{3/2}; the merge
/// point is then extrapolated from a linear fit of diff^{2/3} against k.
pub fn locate_exchange(pairs: &[(f64, f64)], threshold: f64, i_star: f64) -> Option<f64> {
    for w in pairs.windows(2) {
        let ((k0, d0), (k1, d1)) = (w[0], w[1]);
        if d0 > 0.0 && d1 <= 0.0 {
            return Some(k0 + d0 / (d0 - d1) * (k1 - k0));
        }
    }
    let d_max = pairs.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let floor = (100.0 * threshold).max(1e-4 * i_star);
    let tail: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(_, d)| d > floor && d < 0.5 * d_max)
        .map(|&(k, d)| (k, d.powf(2.0 / 3.0)))
        .collect();
    if tail.len() < 3 {
        return None;
    }
    let n = tail.len() as f64;
    let mk = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let md = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mk) * (p.0 - mk)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mk) * (p.1 - md)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    Some(mk + md / (-slope))
}

/// Build a k grid of the given resolution that brackets the branch-exchange
/// point: probe geometrically outward from k = 1/2 until the action
/// difference has dropped well below I*, bisect the bracket, then cover the
/// approach with evenly spaced points.
pub fn kc_scan_grid(
    params: &ModelParams,
    grid: &TimeGrid,
    settings: &DescentSettings,
    resolution: f64,
) -> Result<Vec<f64>, OptimizerError> {
    let (plus, _) = broken_saddles(params)?;
    let theory = delta_param(params)?;
    let center = 0.5 * grid.total_time();
    let base = instanton_action(params, grid, settings)?;
    let floor = 0.05 * base.i_star;
    let seed_zero = FieldConfig::constant(*grid, plus.bx, plus.bz);
    let seed_one = instanton_seed(&theory, center, *grid)?;
    let diff_at = |k: f64| -> Result<f64, OptimizerError> {
        let spec = BoundarySpec::Subsystem(k);
        let zero = descend_ascend(&seed_zero, spec, params, settings)?;
        let one = descend_ascend(&seed_one, spec, params, settings)?;
        Ok(one.action.total - zero.action.total)
    };
    let mut lo = 0.5 + resolution;
    let mut k = 0.5 + 8.0 * resolution;
    let mut hi = 0.95;
    let mut bracketed = false;
    while k < 0.95 {
        if diff_at(k)? < floor {
            hi = k;
            bracketed = true;
            break;
        }
        lo = k;
        k = 0.5 + (k - 0.5) * 1.7;
    }
    if bracketed {
        while hi - lo > 8.0 * resolution {
            let mid = 0.5 * (lo + hi);
            if diff_at(mid)? < floor {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    // cover the decaying tail below the merge contour plus a short margin
    let start = (hi - 12.0 * resolution).max(0.5 + resolution);
    let end = (hi + 2.0 * resolution).min(0.95);
    let steps = (((end - start) / resolution).ceil() as usize).clamp(6, 40);
    Ok((0..=steps).map(|i| start + (end - start) * i as f64 / steps as f64).collect())
}

#[derive(Debug, Clone, Copy)]
pub struct EntropyPoint {
    pub t: f64,
    pub i_star: f64,
    /// max(0, N·I*(T) − ln(T/T0_eff)), in nats.
    pub entropy: f64,
}

/// Rényi-2 entropy prediction −ln Π_Q(T) = N·I*(T) − ln(T/T0_eff), clamped at
/// zero because the purity of a normalized state cannot exceed one.
pub fn entropy_series_prediction(
    params: &ModelParams,
    n_qubits: u32,
    times: &[f64],
    dt: f64,
    settings: &DescentSettings,
    t0_eff: f64,
) -> Result<Vec<EntropyPoint>, OptimizerError> {
    assert!(times.windows(2).all(|w| w[0] < w[1]), "times must be increasing");
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let grid = TimeGrid::with_duration(dt, t)?;
        let res = instanton_action(params, &grid, settings);
        let i_star = match res {
            Ok(r) => r.i_star,
            // deep below gamma_c a short window may not fit a kink yet
            Err(OptimizerError::SeparationFailure { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        let entropy = (n_qubits as f64 * i_star - (t / t0_eff).ln()).max(0.0);
        out.push(EntropyPoint { t, i_star, entropy });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::BoundarySpec;
    use crate::model::{bulk_action_density, instanton_action_near_critical};
    use approx::assert_relative_eq;

    fn params(ratio: f64) -> ModelParams {
        ModelParams::dimensionless(ratio * GAMMA_C, 6).unwrap()
    }

    fn fast_settings() -> DescentSettings {
        DescentSettings { threshold: 1e-9, ..Default::default() }
    }

    #[test]
    fn descent_stays_on_trivial_plateau_above_critical() {
        let p = params(1.5);
        let s = trivial_saddle(&p);
        // the edge response decays as kappa = sqrt(4a^2 - 2a/27) ~ 1/48 here,
        // so the plateau needs T well beyond 2/kappa
        let grid = TimeGrid::new(0.05, 24_000).unwrap(); // T = 1200
        // small symmetric perturbation away from the saddle
        let bx: Vec<f64> = grid.times().map(|t| 1e-3 * (0.05 * t).sin()).collect();
        let bz: Vec<f64> = vec![s.bz; grid.steps()];
        let seed = FieldConfig::from_parts(grid, bx, bz).unwrap();
        let out = descend_ascend(&seed, BoundarySpec::P2, &p, &fast_settings()).unwrap();
        assert!(out.converged, "descent did not converge");
        assert!(out.final_delta < 1e-9);
        // mid-bulk fields sit on the trivial saddle
        let n = grid.steps();
        assert!(out.config.bx()[n / 2].abs() < 1e-6, "mid bx {}", out.config.bx()[n / 2]);
        assert_relative_eq!(out.config.bz()[n / 2], s.bz, max_relative = 1e-5);
        // boundary bends are present for P2 (both ends pulled toward psi_+)
        assert!(out.config.bx()[0] > 1e-3);
        assert!(out.config.bx()[n - 1] > 1e-3);
    }

    #[test]
    fn descent_stays_on_broken_plateau_below_critical() {
        let p = params(0.5);
        let (s, _) = broken_saddles(&p).unwrap();
        let grid = TimeGrid::new(0.05, 24_000).unwrap(); // T = 1200
        let seed = FieldConfig::constant(grid, s.bx, s.bz);
        let out = descend_ascend(&seed, BoundarySpec::P2, &p, &fast_settings()).unwrap();
        assert!(out.converged);
        let n = grid.steps();
        assert_relative_eq!(out.config.bx()[n / 2], s.bx, max_relative = 1e-4);
        assert_relative_eq!(out.config.bz()[n / 2], s.bz, max_relative = 1e-4);
        // per-unit-time total matches the bulk saddle density away from edges
        let density = bulk_action_density(s.bx, s.bz, &p);
        assert_relative_eq!(
            out.action.total / grid.total_time(),
            density,
            max_relative = 0.01
        );
    }

    #[test]
    fn accepted_steps_never_raise_the_bx_objective() {
        // replicate the inner loop once by hand: a single descent iteration
        // from a deliberately bad point must not be accepted uphill
        let p = params(0.8);
        let grid = TimeGrid::new(0.1, 300).unwrap();
        let (s, _) = broken_saddles(&p).unwrap();
        let seed = FieldConfig::constant(grid, 0.5 * s.bx, s.bz);
        let settings = DescentSettings { max_iters: 200, ..fast_settings() };
        let out = descend_ascend(&seed, BoundarySpec::P2, &p, &settings).unwrap();
        // action decreased overall relative to the seed (descent direction)
        let seed_total = total_action(&seed, BoundarySpec::P2, &p).unwrap().total;
        assert!(out.action.total <= seed_total + 1e-12);
    }

    #[test]
    fn instanton_action_vanishes_above_critical() {
        // the Z2/P2 edge-bend costs only cancel once e^{-kappa T} is dead,
        // which the adaptive grid rule guarantees
        let p = params(1.2);
        let grid = sweep_grid_for(p.gamma(), &TimeGrid::new(0.05, 6000).unwrap()).unwrap();
        let res = instanton_action(&p, &grid, &fast_settings()).unwrap();
        assert!(res.i_star < 1e-6, "i_star = {}", res.i_star);
        assert!(res.i_star_raw.abs() < 1e-6);
    }

    #[test]
    fn instanton_action_near_critical_amplitude() {
        // the refined oracle (phi^4 kink in the restored normalization times
        // the B_z-relaxation factor) matches the solver to about 1% here
        let base = TimeGrid::new(0.1, 3000).unwrap();
        for ratio in [0.9, 0.95] {
            let p = params(ratio);
            let grid = sweep_grid_for(p.gamma(), &base).unwrap();
            let res = instanton_action(&p, &grid, &fast_settings()).unwrap();
            let oracle = instanton_action_near_critical(&delta_param(&p).unwrap());
            assert!(res.t_adequate);
            assert_relative_eq!(res.i_star, oracle, max_relative = 0.03);
        }
    }

    #[test]
    fn instanton_action_is_monotone_below_critical() {
        let base = TimeGrid::new(0.1, 3000).unwrap();
        let settings = fast_settings();
        let mut last = f64::INFINITY;
        for ratio in [0.5, 0.8, 0.95] {
            let p = params(ratio);
            let grid = sweep_grid_for(p.gamma(), &base).unwrap();
            let res = instanton_action(&p, &grid, &settings).unwrap();
            assert!(res.i_star < last, "i_star not decreasing at ratio {ratio}");
            assert!(res.i_star > 0.0);
            last = res.i_star;
        }
    }

    #[test]
    fn instanton_translation_zero_mode() {
        // kink centered at T/3 vs T/2 gives the same action
        let p = params(0.8);
        let theory = delta_param(&p).unwrap();
        // T/3 must stay many kink widths from the boundary
        let grid =
            TimeGrid::with_duration(0.1, 50.0 / theory.delta.sqrt()).unwrap();
        let settings = fast_settings();
        let mut totals = Vec::new();
        for frac in [1.0 / 3.0, 0.5] {
            let seed = instanton_seed(&theory, frac * grid.total_time(), grid).unwrap();
            let out = descend_ascend(&seed, BoundarySpec::Z2, &p, &settings).unwrap();
            totals.push(out.action.total);
        }
        assert!(
            (totals[0] - totals[1]).abs() < 10.0 * settings.threshold.max(1e-8),
            "translation mode not flat: {totals:?}"
        );
    }

    #[test]
    fn optimized_z2_has_single_sign_change() {
        let p = params(0.7);
        let grid = sweep_grid_for(p.gamma(), &TimeGrid::new(0.1, 3000).unwrap()).unwrap();
        let res = instanton_action(&p, &grid, &fast_settings()).unwrap();
        let (plus, _) = broken_saddles(&p).unwrap();
        assert_eq!(res.config_z2.bx_sign_changes(0.2 * plus.bx), 1);
    }

    #[test]
    fn sweep_records_rows_and_errors() {
        let base = TimeGrid::new(0.1, 3000).unwrap();
        assert!(sweep_gamma(&[], &base, &fast_settings()).is_empty());
        let rows = sweep_gamma(&[0.8 * GAMMA_C, 0.8 * GAMMA_C], &base, &fast_settings());
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_none());
        // determinism: identical inputs give identical rows
        assert_eq!(rows[0].i_star.to_bits(), rows[1].i_star.to_bits());
    }

    #[test]
    fn fit_power_law_synthetic() {
        let xs: Vec<f64> = (1..=8).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(1.5)).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        assert_relative_eq!(fit.exponent, 1.5, max_relative = 1e-12);
        assert!(fit.stderr < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.window, (0.1, 0.8));

        let lin: Vec<f64> = xs.iter().map(|x| 3.7 * x).collect();
        let fit = fit_power_law(&xs, &lin).unwrap();
        assert_relative_eq!(fit.exponent, 1.0, max_relative = 1e-12);

        assert_eq!(fit_power_law(&xs[..3], &ys[..3]), Err(FitError::TooFewPoints(3)));
        let bad = vec![-1.0, 1.0, 2.0, 3.0];
        assert_eq!(fit_power_law(&bad, &ys[..4]), Err(FitError::NonPositiveData));
    }

    #[test]
    fn locate_exchange_detects_sign_change_and_merge() {
        // strict crossing
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (0.5 + 1e-3 * i as f64, 2e-3 - 5e-4 * i as f64)).collect();
        let k = locate_exchange(&pairs, 1e-9, 2e-3).unwrap();
        assert_relative_eq!(k, 0.504, max_relative = 1e-10);

        // spinodal merge: diff = A (k_s - k)^{3/2}, zero never crossed
        let ks = 0.595;
        let pairs: Vec<(f64, f64)> = (0..14)
            .map(|i| {
                let k = 0.58 + 1e-3 * i as f64;
                (k, 0.07 * (ks - k).max(0.0).powf(1.5))
            })
            .collect();
        let k = locate_exchange(&pairs, 1e-9, 2e-3).unwrap();
        assert_relative_eq!(k, ks, max_relative = 1e-3);

        // flat data has no exchange
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (0.5 + 1e-3 * i as f64, 1e-3)).collect();
        assert!(locate_exchange(&flat, 1e-9, 1e-3).is_none());
    }

    #[test]
    fn entropy_prediction_limits() {
        let p = params(1.5);
        let settings = fast_settings();
        let pts =
            entropy_series_prediction(&p, 6, &[50.0, 100.0], 0.1, &settings, 1.0).unwrap();
        for pt in pts {
            assert_eq!(pt.entropy, 0.0, "purified phase entropy must clamp to zero");
        }
    }
}
