//! Empirical survival functions, log-space least-squares fitting of
//! (T, theta), two-sample Kolmogorov-Smirnov stability statistics, and
//! stratum / quartile assignment.

use crate::distcore::{log_spaced, ModelParams, QuadratureSettings, SurvivalEvaluator};
use crate::error::{Error, Result};

/// Right-continuous empirical survival step function:
/// eval(R) = (# values strictly greater than R) / n.
#[derive(Debug, Clone)]
pub struct EmpiricalSurvival {
    values: Vec<f64>,
}

impl EmpiricalSurvival {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain(
                "empirical survival requires at least one value".into(),
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Data(format!(
                    "value at index {i} is not a finite nonnegative number: {v}"
                )));
            }
        }
        let mut values = values.to_vec();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    /// Fraction of observed values strictly greater than `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.exceed_count(r) as f64 / self.len() as f64
    }

    /// Number of observed values strictly greater than `r`.
    pub fn exceed_count(&self, r: f64) -> usize {
        self.values.len() - self.values.partition_point(|&v| v <= r)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sorted observations backing the step function.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear-interpolation quantile of the sorted sample, q in [0, 1].
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.values[lo] * (1.0 - frac) + self.values[hi] * frac
    }
}

/// Exact two-sample Kolmogorov-Smirnov statistic: the supremum of
/// |F_a - F_b| over the merged jump points of the two step functions.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("ks_distance requires nonempty samples".into()));
    }
    for (label, xs) in [("first", a), ("second", b)] {
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{label} sample contains a non-finite value")));
        }
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] == x {
            i += 1;
        }
        while j < ys.len() && ys[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Number of values strictly greater than `threshold`.
pub fn count_above(values: &[f64], threshold: f64) -> usize {
    values.iter().filter(|&&v| v > threshold).count()
}

/// Counts per stratum [kT, (k+1)T) for k = 0..k_max-1, plus an overflow
/// bin [k_max T, ∞). Counts always sum to the number of values; anything
/// below zero lands in the first bin.
pub fn stratify(values: &[f64], t: f64, k_max: usize) -> Vec<usize> {
    assert!(t > 0.0, "stratify requires T > 0");
    assert!(k_max >= 1, "stratify requires k_max >= 1");
    let mut bins = vec![0usize; k_max + 1];
    for &v in values {
        let k = (v / t).floor().max(0.0) as usize;
        bins[k.min(k_max)] += 1;
    }
    bins
}

/// Quartile label in journal-ranking convention: Q1 holds the largest
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl std::fmt::Display for Quartile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quartile::Q1 => write!(f, "Q1"),
            Quartile::Q2 => write!(f, "Q2"),
            Quartile::Q3 => write!(f, "Q3"),
            Quartile::Q4 => write!(f, "Q4"),
        }
    }
}

/// Ranks values descending and assigns the top ceil(n/4) to Q1, the next
/// ceil(n/4) to Q2, and so on. Ties keep input order (stable sort), so
/// equal values may straddle a quartile boundary. Labels are returned in
/// input order.
pub fn quartile_assign(values: &[f64]) -> Result<Vec<Quartile>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::Domain(format!(
            "quartile assignment requires at least 4 values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("quartile input contains a non-finite value".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let block = n.div_ceil(4);
    let mut out = vec![Quartile::Q4; n];
    for (rank, &orig) in idx.iter().enumerate() {
        out[orig] = match rank / block {
            0 => Quartile::Q1,
            1 => Quartile::Q2,
            2 => Quartile::Q3,
            _ => Quartile::Q4,
        };
    }
    Ok(out)
}

/// Year-pair stability statistics.
#[derive(Debug, Clone)]
pub struct StabilityPair {
    pub label_a: String,
    pub label_b: String,
    pub ks: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub pairs: Vec<StabilityPair>,
}

/// KS distance for every pair of labeled samples, in input-pair order.
pub fn stability_report(samples: &[(String, Vec<f64>)]) -> Result<StabilityReport> {
    if samples.len() < 2 {
        return Err(Error::Domain(
            "stability report requires at least two samples".into(),
        ));
    }
    let mut pairs = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (la, va) = &samples[i];
            let (lb, vb) = &samples[j];
            pairs.push(StabilityPair {
                label_a: la.clone(),
                label_b: lb.clone(),
                ks: ks_distance(va, vb)?,
                n_a: va.len(),
                n_b: vb.len(),
            });
        }
    }
    Ok(StabilityReport { pairs })
}

/// Controls for the survival-curve fit.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Log-spaced evaluation abscissae before tail filtering (>= 10).
    pub grid_points: usize,
    /// Grid range; `None` derives it from the 1% and 99.9% data quantiles.
    pub r_range: Option<(f64, f64)>,
    /// Grid points where the empirical survival has fewer exceedances than
    /// this are excluded; the deep tail of a finite sample carries no
    /// usable shape information.
    pub min_tail_count: usize,
    /// Box bounds for T and theta.
    pub t_bounds: (f64, f64),
    pub theta_bounds: (f64, f64),
    /// Shape parameter held fixed during the fit (default 2).
    pub beta_fixed: f64,
    /// Fit beta jointly with (T, theta). Off by default and not validated
    /// against any reference values.
    pub fit_beta: bool,
    pub beta_bounds: (f64, f64),
    /// Convergence tolerance on the objective spread of the simplex.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting point (T0, theta0); `None` uses (clipped sample mean, 10).
    pub initial: Option<(f64, f64)>,
    /// Quadrature used for model-survival evaluations inside the fit.
    pub quad: QuadratureSettings,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            grid_points: 40,
            r_range: None,
            min_tail_count: 5,
            t_bounds: (1e-3, 20.0),
            theta_bounds: (1e-2, 500.0),
            beta_fixed: 2.0,
            fit_beta: false,
            beta_bounds: (1.6, 6.0),
            tol: 1e-9,
            max_iterations: 400,
            initial: None,
            quad: QuadratureSettings::fast(),
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_points < 10 {
            return Err(Error::Config(format!(
                "grid_points must be >= 10, got {}",
                self.grid_points
            )));
        }
        if self.min_tail_count < 1 {
            return Err(Error::Config("min_tail_count must be >= 1".into()));
        }
        for (name, (lo, hi)) in [
            ("T", self.t_bounds),
            ("theta", self.theta_bounds),
            ("beta", self.beta_bounds),
        ] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(Error::Config(format!(
                    "{name} bounds must satisfy 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        if let Some((lo, hi)) = self.r_range {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "r_range must satisfy 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.tol > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config(
                "minimizer needs tol > 0 and max_iterations >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a survival-curve fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    /// Attained sum of squared log-residuals.
    pub objective: f64,
    /// ln F_model - ln F_data per surviving grid point.
    pub residuals: Vec<f64>,
    /// The surviving grid abscissae.
    pub grid: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits (T, theta) to observed values by minimizing
/// Σ_i (ln F_model(R_i) - ln F_emp(R_i))² over a log-spaced grid, with
/// beta held at `config.beta_fixed` (unless `fit_beta` is set).
pub fn fit(values: &[f64], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let emp = EmpiricalSurvival::new(values)?;
    let n = emp.len();
    let (r_lo, r_hi) = match config.r_range {
        Some(range) => range,
        None => {
            let lo = emp.quantile(0.01).max(1e-6);
            let hi = emp.quantile(0.999);
            if !(lo < hi) {
                return Err(Error::Data(
                    "insufficient data: degenerate value range".into(),
                ));
            }
            (lo, hi)
        }
    };
    let full_grid = log_spaced(r_lo, r_hi, config.grid_points);
    let mut grid = Vec::new();
    let mut ln_f_emp = Vec::new();
    for &r in &full_grid {
        let count = emp.exceed_count(r);
        // Plateau points (all values exceed) carry no shape information;
        // sparse-tail points are excluded per min_tail_count.
        if count >= config.min_tail_count && count < n {
            grid.push(r);
            ln_f_emp.push((count as f64 / n as f64).ln());
        }
    }
    if grid.len() < 10 {
        return Err(Error::Data(format!(
            "insufficient data: only {} usable grid points after tail filtering (need 10)",
            grid.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let initial = config.initial.unwrap_or((
        mean.clamp(config.t_bounds.0, config.t_bounds.1),
        10.0_f64.clamp(config.theta_bounds.0, config.theta_bounds.1),
    ));
    fit_filtered(&grid, &ln_f_emp, config, initial)
}

/// Fits directly to a tabulated survival curve (no sampling noise): the
/// noise-free self-consistency entry point. `survival` holds positive
/// values of the curve at `grid`.
pub fn fit_to_curve(grid: &[f64], survival: &[f64], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if grid.len() != survival.len() || grid.len() < 10 {
        return Err(Error::Data(format!(
            "fit_to_curve requires matching grids with >= 10 points, got {} and {}",
            grid.len(),
            survival.len()
        )));
    }
    let mut ln_f = Vec::with_capacity(grid.len());
    for (&r, &f) in grid.iter().zip(survival) {
        if !(r > 0.0 && f > 0.0 && r.is_finite() && f.is_finite()) {
            return Err(Error::Data(format!(
                "fit_to_curve requires positive finite pairs, got ({r}, {f})"
            )));
        }
        ln_f.push(f.ln());
    }
    let initial = config.initial.unwrap_or_else(|| {
        // T0 from the e-folding point of the curve body.
        let target = ln_f[0] - 1.0;
        let mut t0 = grid[grid.len() / 2];
        for (i, &lf) in ln_f.iter().enumerate() {
            if lf <= target {
                t0 = grid[i];
                break;
            }
        }
        (
            t0.clamp(config.t_bounds.0, config.t_bounds.1),
            10.0_f64.clamp(config.theta_bounds.0, config.theta_bounds.1),
        )
    });
    fit_filtered(grid, &ln_f, config, initial)
}

fn fit_filtered(
    grid: &[f64],
    ln_f_emp: &[f64],
    config: &FitConfig,
    initial: (f64, f64),
) -> Result<FitResult> {
    let beta_fixed = config.beta_fixed;
    let objective = |point: &[f64]| -> f64 {
        let t = point[0];
        let theta = point[1];
        let beta = if config.fit_beta { point[2] } else { beta_fixed };
        let params = match ModelParams::new(t, beta, theta) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let mut eval = match SurvivalEvaluator::new(&params, &config.quad) {
            Ok(e) => e,
            Err(_) => return f64::INFINITY,
        };
        let mut sum = 0.0;
        for (&r, &lfe) in grid.iter().zip(ln_f_emp) {
            match eval.survival_raw(r) {
                Ok(f) if f > 0.0 => {
                    let resid = f.ln() - lfe;
                    sum += resid * resid;
                }
                _ => return f64::INFINITY,
            }
        }
        sum
    };

    let (mut x0, mut lo, mut hi, mut step) = (
        vec![initial.0, initial.1],
        vec![config.t_bounds.0, config.theta_bounds.0],
        vec![config.t_bounds.1, config.theta_bounds.1],
        vec![(0.25 * initial.0).max(0.05), (0.5 * initial.1).max(2.0)],
    );
    if config.fit_beta {
        x0.push(beta_fixed.clamp(config.beta_bounds.0, config.beta_bounds.1));
        lo.push(config.beta_bounds.0);
        hi.push(config.beta_bounds.1);
        step.push(0.25);
    }

    let nm = nelder_mead(
        &objective,
        &x0,
        &step,
        &lo,
        &hi,
        config.tol,
        config.max_iterations,
    );
    if !nm.best_value.is_finite() {
        return Err(Error::Data(
            "fit failed: objective not finite anywhere in the search region".into(),
        ));
    }
    let t = nm.best_point[0];
    let theta = nm.best_point[1];
    let beta = if config.fit_beta {
        nm.best_point[2]
    } else {
        beta_fixed
    };
    let params = ModelParams::new(t, beta, theta)?;
    let mut eval = SurvivalEvaluator::new(&params, &config.quad)?;
    let mut residuals = Vec::with_capacity(grid.len());
    for (&r, &lfe) in grid.iter().zip(ln_f_emp) {
        let f = eval.survival_raw(r)?;
        residuals.push(f.ln() - lfe);
    }
    Ok(FitResult {
        params,
        objective: nm.best_value,
        residuals,
        grid: grid.to_vec(),
        iterations: nm.iterations,
        converged: nm.converged,
    })
}

struct NmOutcome {
    best_point: Vec<f64>,
    best_value: f64,
    iterations: usize,
    converged: bool,
}

/// Nelder-Mead direct search with box projection. Deterministic: a fixed
/// initial simplex and no randomized restarts.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_iterations: usize,
) -> NmOutcome {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    let clamp = |p: &mut Vec<f64>| {
        for k in 0..dim {
            p[k] = p[k].clamp(lo[k], hi[k]);
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut base = x0.to_vec();
    clamp(&mut base);
    simplex.push(base.clone());
    for k in 0..dim {
        let mut v = base.clone();
        v[k] += step[k];
        clamp(&mut v);
        if v[k] == base[k] {
            v[k] = (base[k] - step[k]).clamp(lo[k], hi[k]);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if values[worst].is_finite()
            && (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs())
        {
            converged = true;
            break;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; dim];
        for (i, p) in simplex.iter().enumerate() {
            if i != worst {
                for k in 0..dim {
                    centroid[k] += p[k] / dim as f64;
                }
            }
        }

        let mut reflected: Vec<f64> = (0..dim)
            .map(|k| centroid[k] + ALPHA * (centroid[k] - simplex[worst][k]))
            .collect();
        clamp(&mut reflected);
        let f_r = f(&reflected);

        if f_r < values[best] {
            let mut expanded: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + GAMMA * (reflected[k] - centroid[k]))
                .collect();
            clamp(&mut expanded);
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
        } else if f_r < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_r;
        } else {
            let mut contracted: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + RHO * (simplex[worst][k] - centroid[k]))
                .collect();
            clamp(&mut contracted);
            let f_c = f(&contracted);
            if f_c < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_c;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for i in 0..=dim {
                    if i == best {
                        continue;
                    }
                    for k in 0..dim {
                        simplex[i][k] = best_point[k] + SIGMA * (simplex[i][k] - best_point[k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if values[i] < values[best] {
            best = i;
        }
    }
    NmOutcome {
        best_point: simplex[best].clone(),
        best_value: values[best],
        iterations,
        converged,
    }
}
