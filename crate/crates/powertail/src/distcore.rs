//! Density and survival-function evaluation by truncated, oscillation-aware
//! quadrature, plus the small-R exponential approximations and tail
//! diagnostics.
//!
//! The density is the Fourier-cosine inversion
//!
//! ```text
//! W(R) = 1/sqrt(pi T) ∫_0^∞ cos(x sqrt(R)) g(x) dx,
//! g(x) = [phi_nu(x s)]^theta,   s = sqrt((beta-3/2) T / theta)
//! ```
//!
//! `g` decays exponentially, so the integral is truncated where
//! `g < kernel_floor` and evaluated by composite Simpson rule with a step
//! that resolves the cosine period `2 pi / sqrt(R)`. The node count doubles
//! until two successive resolutions agree within `abs_tol`.
//!
//! The survival function F(R) = ∫_R^{r_max} W dR' is computed in the
//! substituted variable y = sqrt(R') (Jacobian 2y). The inner y-integral of
//! `2 y cos(x y)` has a closed antiderivative, so the double integral
//! collapses to a single x-integral sharing the same truncation; the
//! equivalence with the nested form is exercised against a dense nested
//! oracle in the test suite.

use crate::error::{Error, Result};
use crate::specfun::{ln_cf_kernel_raw, KernelOrder};

/// Distribution parameters: effective temperature `T` (impact-factor
/// units), shape `beta > 3/2`, and the exponential-to-power-law transition
/// parameter `theta > 0`. `theta` is a positive real, not an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    t: f64,
    beta: f64,
    theta: f64,
    order: KernelOrder,
    kernel_scale: f64,
}

impl ModelParams {
    pub fn new(t: f64, beta: f64, theta: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::Domain(format!("T must be positive, got {t}")));
        }
        if !theta.is_finite() || theta <= 0.0 {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        let order = KernelOrder::from_beta(beta)?;
        let kernel_scale = ((beta - 1.5) * t / theta).sqrt();
        Ok(Self {
            t,
            beta,
            theta,
            order,
            kernel_scale,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Truncation, resolution and tolerance controls for the inversion
/// integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    kernel_floor: f64,
    nodes_per_period: usize,
    max_nodes: usize,
    survival_r_max: f64,
    abs_tol: f64,
    tail_mass_tol: f64,
}

impl QuadratureSettings {
    /// `kernel_floor`: truncate the x-integral where `g` falls below this
    /// (must lie in (0, 1e-6]). `nodes_per_period >= 8` sets the base
    /// resolution relative to the cosine period. `max_nodes >= 1000` caps
    /// refinement. `survival_r_max` substitutes for infinity in the
    /// survival integral. `abs_tol` is the quadrature tolerance.
    /// `tail_mass_tol` bounds the mass neglected beyond `survival_r_max`
    /// (estimated as `pdf(r_max) * r_max`); it is a separate, looser
    /// threshold because the neglected tail mass of a power-law tail is
    /// orders of magnitude above any achievable quadrature tolerance.
    pub fn new(
        kernel_floor: f64,
        nodes_per_period: usize,
        max_nodes: usize,
        survival_r_max: f64,
        abs_tol: f64,
        tail_mass_tol: f64,
    ) -> Result<Self> {
        if !(kernel_floor > 0.0 && kernel_floor <= 1e-6) {
            return Err(Error::Config(format!(
                "kernel_floor must lie in (0, 1e-6], got {kernel_floor}"
            )));
        }
        if nodes_per_period < 8 {
            return Err(Error::Config(format!(
                "nodes_per_period must be >= 8, got {nodes_per_period}"
            )));
        }
        if max_nodes < 1000 {
            return Err(Error::Config(format!(
                "max_nodes must be >= 1000, got {max_nodes}"
            )));
        }
        if !(survival_r_max.is_finite() && survival_r_max > 0.0) {
            return Err(Error::Config(format!(
                "survival_r_max must be positive, got {survival_r_max}"
            )));
        }
        if !(abs_tol.is_finite() && abs_tol > 0.0) {
            return Err(Error::Config(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if !(tail_mass_tol.is_finite() && tail_mass_tol > 0.0) {
            return Err(Error::Config(format!(
                "tail_mass_tol must be positive, got {tail_mass_tol}"
            )));
        }
        Ok(Self {
            kernel_floor,
            nodes_per_period,
            max_nodes,
            survival_r_max,
            abs_tol,
            tail_mass_tol,
        })
    }

    /// Default profile: tight tolerances for reference-quality evaluation.
    pub fn accurate() -> Self {
        Self {
            kernel_floor: 1e-16,
            nodes_per_period: 16,
            max_nodes: 1 << 21,
            survival_r_max: 1000.0,
            abs_tol: 1e-10,
            tail_mass_tol: 1e-3,
        }
    }

    /// Looser profile for fitting loops and bulk tabulation.
    pub fn fast() -> Self {
        Self {
            kernel_floor: 1e-12,
            nodes_per_period: 8,
            max_nodes: 1 << 19,
            survival_r_max: 1000.0,
            abs_tol: 1e-7,
            tail_mass_tol: 1e-3,
        }
    }

    pub fn kernel_floor(&self) -> f64 {
        self.kernel_floor
    }

    pub fn nodes_per_period(&self) -> usize {
        self.nodes_per_period
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn survival_r_max(&self) -> f64 {
        self.survival_r_max
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn tail_mass_tol(&self) -> f64 {
        self.tail_mass_tol
    }

    pub fn with_survival_r_max(mut self, r_max: f64) -> Result<Self> {
        self.survival_r_max = r_max;
        Self::new(
            self.kernel_floor,
            self.nodes_per_period,
            self.max_nodes,
            self.survival_r_max,
            self.abs_tol,
            self.tail_mass_tol,
        )
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Result<Self> {
        self.abs_tol = abs_tol;
        Self::new(
            self.kernel_floor,
            self.nodes_per_period,
            self.max_nodes,
            self.survival_r_max,
            self.abs_tol,
            self.tail_mass_tol,
        )
    }

    pub fn with_nodes_per_period(mut self, npp: usize) -> Result<Self> {
        self.nodes_per_period = npp;
        Self::new(
            self.kernel_floor,
            self.nodes_per_period,
            self.max_nodes,
            self.survival_r_max,
            self.abs_tol,
            self.tail_mass_tol,
        )
    }
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self::accurate()
    }
}

/// Log-spaced grid with `n >= 2` points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// log g(x) for the general kernel path.
fn ln_g_general(params: &ModelParams, x: f64) -> f64 {
    params.theta * ln_cf_kernel_raw(params.order, x * params.kernel_scale)
}

/// Smallest x with g(x) <= floor, found by doubling plus bisection;
/// ln_g is strictly decreasing from 0.
fn support_cutoff<G: Fn(f64) -> f64>(ln_g: G, ln_floor: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while ln_g(hi) > ln_floor {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return hi;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ln_g(mid) > ln_floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const MIN_BASE_NODES: usize = 512;

fn power_of_two_at_most(n: usize) -> usize {
    let mut p = 1usize;
    while p * 2 <= n {
        p *= 2;
    }
    p
}

/// Base interval count: resolve the oscillation frequency `freq` with
/// `nodes_per_period` nodes, clamped to [MIN_BASE_NODES, max_nodes] and
/// rounded up to a power of two so halved grids stay Simpson-compatible.
fn base_nodes(x_max: f64, freq: f64, quad: &QuadratureSettings) -> usize {
    let from_freq = if freq > 0.0 {
        (x_max * freq * quad.nodes_per_period as f64 / (2.0 * std::f64::consts::PI)).ceil()
            as usize
    } else {
        0
    };
    from_freq
        .max(MIN_BASE_NODES)
        .next_power_of_two()
        .min(power_of_two_at_most(quad.max_nodes))
}

/// Uniform-grid Simpson integrator caching g at the nodes; refinement
/// doubles the grid and reuses previously computed values.
struct CosineIntegrator {
    x_max: f64,
    g: Vec<f64>,
}

impl CosineIntegrator {
    fn new<G: Fn(f64) -> f64>(ln_g: G, x_max: f64, n: usize) -> Self {
        let h = x_max / n as f64;
        let g = (0..=n).map(|i| ln_g(i as f64 * h).exp()).collect();
        Self { x_max, g }
    }

    fn intervals(&self) -> usize {
        self.g.len() - 1
    }

    fn refine<G: Fn(f64) -> f64>(&mut self, ln_g: G) {
        let n = self.intervals();
        let h = self.x_max / (2 * n) as f64;
        let mut g = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            g.push(self.g[i]);
            g.push(ln_g((2 * i + 1) as f64 * h).exp());
        }
        g.push(self.g[n]);
        self.g = g;
    }

    /// Simpson sum of g(x) w(x). `stride = 1` uses the full grid,
    /// `stride = 2` every other node.
    fn simpson<W: Fn(f64) -> f64>(&self, weight: W, stride: usize) -> f64 {
        let n = self.intervals() / stride;
        debug_assert!(n % 2 == 0);
        let h = self.x_max / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let idx = i * stride;
            let x = self.x_max * idx as f64 / self.intervals() as f64;
            let f = self.g[idx] * weight(x);
            let coef = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += coef * f;
        }
        sum * h / 3.0
    }
}

/// Refine until the full- and half-resolution Simpson sums agree within
/// `abs_tol` (after scaling), or the node budget is exhausted.
fn integrate_refining<G, W>(
    integ: &mut CosineIntegrator,
    ln_g: G,
    weight: W,
    scale: f64,
    quad: &QuadratureSettings,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    loop {
        let fine = integ.simpson(&weight, 1) * scale;
        let coarse = integ.simpson(&weight, 2) * scale;
        let achieved = (fine - coarse).abs();
        if achieved <= quad.abs_tol {
            return Ok(fine);
        }
        if integ.intervals() * 2 > quad.max_nodes {
            return Err(Error::Accuracy {
                estimate: fine,
                achieved,
                requested: quad.abs_tol,
            });
        }
        integ.refine(&ln_g);
    }
}

/// Inversion ripple below `tol` is discretization noise and clips to zero;
/// anything more negative is a failure, never silently returned.
fn clip_nonnegative(v: f64, tol: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -tol {
        Ok(0.0)
    } else {
        Err(Error::Accuracy {
            estimate: v,
            achieved: -v,
            requested: tol,
        })
    }
}

fn clip_unit(v: f64, tol: f64) -> Result<f64> {
    let v = clip_nonnegative(v, tol)?;
    if v <= 1.0 {
        Ok(v)
    } else if v <= 1.0 + tol {
        Ok(1.0)
    } else {
        Err(Error::Accuracy {
            estimate: v,
            achieved: v - 1.0,
            requested: tol,
        })
    }
}

fn check_r(r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("R must be >= 0, got {r}")));
    }
    Ok(r)
}

fn pdf_from_ln_g<G: Fn(f64) -> f64 + Copy>(
    ln_g: G,
    t: f64,
    r: f64,
    x_max: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    let sqrt_r = r.sqrt();
    let scale = 1.0 / (std::f64::consts::PI * t).sqrt();
    let n0 = base_nodes(x_max, sqrt_r, quad);
    let mut integ = CosineIntegrator::new(ln_g, x_max, n0);
    let raw = integrate_refining(&mut integ, ln_g, |x| (x * sqrt_r).cos(), scale, quad)?;
    clip_nonnegative(raw, quad.abs_tol)
}

/// Density W(R) of the general model, per impact-factor unit.
pub fn pdf(params: &ModelParams, r: f64, quad: &QuadratureSettings) -> Result<f64> {
    let r = check_r(r)?;
    let p = *params;
    let ln_g = move |x: f64| ln_g_general(&p, x);
    let x_max = support_cutoff(ln_g, quad.kernel_floor.ln());
    pdf_from_ln_g(ln_g, params.t, r, x_max, quad)
}

/// Density for beta = 2, evaluated from the printed closed-form integrand
/// `1/sqrt(pi T) ∫ cos(x sqrt(R)) e^{-x sqrt(theta T / 2)}
/// (1 + x sqrt(T/(2 theta)))^theta dx`. Kept as an independent evaluation
/// path; the general `pdf` at beta = 2 must agree with it.
pub fn pdf_beta2(t: f64, theta: f64, r: f64, quad: &QuadratureSettings) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Domain(format!("T must be positive, got {t}")));
    }
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    let r = check_r(r)?;
    let a = (theta * t / 2.0).sqrt();
    let b = (t / (2.0 * theta)).sqrt();
    let ln_g = move |x: f64| -a * x + theta * (b * x).ln_1p();
    let x_max = support_cutoff(ln_g, quad.kernel_floor.ln());
    pdf_from_ln_g(ln_g, t, r, x_max, quad)
}

/// Small-R approximation of the density: W(R) ≈ (1/T) exp(-R/T), valid up
/// to a few multiples of T.
pub fn pdf_small_r(t: f64, r: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Domain(format!("T must be positive, got {t}")));
    }
    let r = check_r(r)?;
    Ok((-r / t).exp() / t)
}

/// Small-R approximation of the survival function: exp(-R/T).
pub fn survival_small_r(t: f64, r: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Domain(format!("T must be positive, got {t}")));
    }
    let r = check_r(r)?;
    Ok((-r / t).exp())
}

/// ∫_{y0}^{y1} 2 y cos(x y) dy, by the closed antiderivative
/// 2[cos(xy)/x² + y sin(xy)/x]; series in x below x·y1 = 1e-2 where the
/// direct form cancels catastrophically.
fn inner_bracket(x: f64, y0: f64, y1: f64) -> f64 {
    if x * y1 < 1e-2 {
        let y02 = y0 * y0;
        let y12 = y1 * y1;
        let d2 = y12 - y02;
        let d4 = y12 * y12 - y02 * y02;
        let d6 = y12 * y12 * y12 - y02 * y02 * y02;
        let x2 = x * x;
        d2 - x2 * d4 / 4.0 + x2 * x2 * d6 / 72.0
    } else {
        let (s1, c1) = (x * y1).sin_cos();
        let (s0, c0) = (x * y0).sin_cos();
        2.0 * ((c1 - c0) / (x * x) + (y1 * s1 - y0 * s0) / x)
    }
}

/// Shared machinery for survival-type integrals of one parameter set:
/// the kernel support cutoff, the cached integrand nodes and the
/// tail-capture check are computed once and reused across evaluations.
pub(crate) struct SurvivalEvaluator {
    params: ModelParams,
    quad: QuadratureSettings,
    x_max: f64,
    y_max: f64,
    scale: f64,
    integ: CosineIntegrator,
}

impl SurvivalEvaluator {
    pub(crate) fn new(params: &ModelParams, quad: &QuadratureSettings) -> Result<Self> {
        let p = *params;
        let ln_g = move |x: f64| ln_g_general(&p, x);
        let x_max = support_cutoff(ln_g, quad.kernel_floor.ln());
        let r_max = quad.survival_r_max;
        // Truncating at r_max must not discard appreciable tail mass.
        let tail_density = pdf_from_ln_g(ln_g, params.t, r_max, x_max, quad)?;
        if tail_density * r_max > quad.tail_mass_tol {
            return Err(Error::Config(format!(
                "survival_r_max = {r_max} too small to capture the tail: \
                 pdf(r_max) * r_max = {:.3e} exceeds {:.3e}",
                tail_density * r_max,
                quad.tail_mass_tol
            )));
        }
        let y_max = r_max.sqrt();
        let n0 = base_nodes(x_max, y_max, quad);
        let integ = CosineIntegrator::new(ln_g, x_max, n0);
        Ok(Self {
            params: p,
            quad: *quad,
            x_max,
            y_max,
            scale: 1.0 / (std::f64::consts::PI * params.t).sqrt(),
            integ,
        })
    }

    /// F(R) before clipping; may carry O(abs_tol) quadrature ripple.
    pub(crate) fn survival_raw(&mut self, r: f64) -> Result<f64> {
        let r = check_r(r)?;
        if r >= self.quad.survival_r_max {
            return Ok(0.0);
        }
        let y0 = r.sqrt();
        let y1 = self.y_max;
        let p = self.params;
        let ln_g = move |x: f64| ln_g_general(&p, x);
        integrate_refining(
            &mut self.integ,
            ln_g,
            |x| inner_bracket(x, y0, y1),
            self.scale,
            &self.quad,
        )
    }

    pub(crate) fn survival(&mut self, r: f64) -> Result<f64> {
        let raw = self.survival_raw(r)?;
        clip_unit(raw, self.quad.abs_tol)
    }

    #[allow(dead_code)]
    pub(crate) fn x_max(&self) -> f64 {
        self.x_max
    }
}

/// Survival function F(R) = ∫_R^{r_max} W dR', clipped to [0, 1] at the
/// quadrature tolerance. Errors if `survival_r_max` is too small to
/// capture the tail.
pub fn survival(params: &ModelParams, r: f64, quad: &QuadratureSettings) -> Result<f64> {
    let mut eval = SurvivalEvaluator::new(params, quad)?;
    eval.survival(r)
}

/// Survival at many abscissae sharing one truncation search, node cache
/// and tail-capture check. Values are produced in input order.
pub fn survival_grid(
    params: &ModelParams,
    rs: &[f64],
    quad: &QuadratureSettings,
) -> Result<Vec<f64>> {
    let mut eval = SurvivalEvaluator::new(params, quad)?;
    rs.iter().map(|&r| eval.survival(r)).collect()
}

/// Total mass ∫_0^{r_max} W dR, reported unclipped. With the normalized
/// kernel this is close to, but not exactly, one at finite theta; the
/// measured value is the caller's to record.
pub fn normalization(params: &ModelParams, quad: &QuadratureSettings) -> Result<f64> {
    let mut eval = SurvivalEvaluator::new(params, quad)?;
    let v = eval.survival_raw(0.0)?;
    if v <= 0.0 {
        return Err(Error::Range(format!(
            "normalization integral collapsed to {v:e}"
        )));
    }
    Ok(v)
}

const TAIL_SLOPE_POINTS: usize = 25;

/// Least-squares slope of ln F versus ln R over a log-spaced grid in
/// `[r_lo, r_hi]`; the empirical measure of the power-law tail exponent.
pub fn tail_slope(
    params: &ModelParams,
    r_lo: f64,
    r_hi: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::Domain(format!(
            "tail_slope requires 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]"
        )));
    }
    let mut eval = SurvivalEvaluator::new(params, quad)?;
    let grid = log_spaced(r_lo, r_hi, TAIL_SLOPE_POINTS);
    let mut fs = Vec::with_capacity(grid.len());
    for &r in &grid {
        let f = eval.survival_raw(r)?;
        if f <= 0.0 {
            return Err(Error::Range(format!(
                "survival underflows to zero at R = {r}; tail slope undefined"
            )));
        }
        fs.push(f);
    }
    log_log_slope(&grid, &fs)
}

/// Least-squares slope of ln f versus ln r for tabulated positive pairs.
/// Returns the exact exponent for a pure power law, independent of scale.
pub fn log_log_slope(r: &[f64], f: &[f64]) -> Result<f64> {
    if r.len() != f.len() || r.len() < 2 {
        return Err(Error::Domain(
            "log_log_slope requires two equal-length series with >= 2 points".into(),
        ));
    }
    let mut xs = Vec::with_capacity(r.len());
    let mut ys = Vec::with_capacity(r.len());
    for (&ri, &fi) in r.iter().zip(f) {
        if !(ri > 0.0 && fi > 0.0 && ri.is_finite() && fi.is_finite()) {
            return Err(Error::Domain(format!(
                "log_log_slope requires positive finite pairs, got ({ri}, {fi})"
            )));
        }
        xs.push(ri.ln());
        ys.push(fi.ln());
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    if den == 0.0 {
        return Err(Error::Domain("log_log_slope requires distinct abscissae".into()));
    }
    Ok(num / den)
}
