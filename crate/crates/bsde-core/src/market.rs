//! Market model with asymmetric funding rates, and path simulation under the
//! lending-account martingale measure.
//!
//! The model holds d lognormal risky assets with dividend yields, an unsecured
//! lending rate `rate_l`, an unsecured borrowing rate `rate_b`, per-asset
//! secured funding rates `rate_ib`, and collateral accrual rates. Simulation
//! works under the measure in which the lending-discounted, dividend-adjusted
//! cumulative asset value is a martingale; that martingale `M` (per-step
//! increments `dm`) is what drives the backward equations downstream, and its
//! quadratic-variation factor `m m*` is supplied here in closed form.
//!
//! All coefficients are constants in time. The driver/solver interfaces take
//! `(t, s, bank_l)` arguments throughout, so time-dependent extensions stay
//! localized to this module.

use crate::error::{ensure_finite, Error, Result};
use crate::exec;
use crate::linalg::{ellipticity_constant, solve_linear, SymMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use std::fmt;
use std::io::{self, Write};

/// Market data for d risky assets plus funding and collateral accounts.
///
/// Rates are continuously compounded per year, volatilities per square-root
/// year, dividend yields per year. The expected ordering is
/// `0 ≤ rate_l ≤ rate_b` and `rate_l ≤ rate_ib[i]`; [`validate`] reports it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    /// Number of risky assets (≥ 1).
    pub d: usize,
    /// Horizon T in years.
    pub horizon: f64,
    /// Initial prices, strictly positive.
    pub s0: Vec<f64>,
    /// Real-world drifts per year (enter only through the market price of risk).
    pub mu: Vec<f64>,
    /// d×d volatility matrix (row i = loadings of asset i on the d Brownian factors).
    pub sigma: Vec<Vec<f64>>,
    /// Dividend yields per year, non-negative.
    pub kappa: Vec<f64>,
    /// Unsecured lending (deposit) rate.
    pub rate_l: f64,
    /// Unsecured borrowing rate.
    pub rate_b: f64,
    /// Per-asset secured (repo-style) funding rates.
    pub rate_ib: Vec<f64>,
    /// Collateral accrual rate on posted (negative-side) collateral.
    pub collateral_rate_l: f64,
    /// Collateral accrual rate on received (positive-side) collateral.
    pub collateral_rate_b: f64,
}

impl MarketModel {
    /// Convenience constructor: diagonal volatility `vol·I`, drift equal to
    /// the lending rate, no dividends, collateral rates equal to `rate_l`.
    /// Intended for tests and examples; tweak fields afterwards as needed.
    pub fn diagonal(
        d: usize,
        horizon: f64,
        s0: f64,
        vol: f64,
        rate_l: f64,
        rate_b: f64,
        rate_ib: f64,
    ) -> Self {
        let mut sigma = vec![vec![0.0; d]; d];
        for (i, row) in sigma.iter_mut().enumerate() {
            row[i] = vol;
        }
        MarketModel {
            d,
            horizon,
            s0: vec![s0; d],
            mu: vec![rate_l; d],
            sigma,
            kappa: vec![0.0; d],
            rate_l,
            rate_b,
            rate_ib: vec![rate_ib; d],
            collateral_rate_l: rate_l,
            collateral_rate_b: rate_l,
        }
    }

    /// True when every funding rate coincides (the nonlinearity of the
    /// funding driver vanishes in that case).
    pub fn is_single_rate(&self) -> bool {
        self.rate_b == self.rate_l && self.rate_ib.iter().all(|&r| r == self.rate_l)
    }

    /// Lending account value `B^l_t = exp(rate_l · t)`.
    pub fn bank_l(&self, t: f64) -> f64 {
        (self.rate_l * t).exp()
    }

    /// Borrowing account value.
    pub fn bank_b(&self, t: f64) -> f64 {
        (self.rate_b * t).exp()
    }

    /// Funding account value for asset `i`.
    pub fn bank_ib(&self, i: usize, t: f64) -> f64 {
        (self.rate_ib[i] * t).exp()
    }

    /// Collateral account values (posted side, received side).
    pub fn bank_collateral_l(&self, t: f64) -> f64 {
        (self.collateral_rate_l * t).exp()
    }

    pub fn bank_collateral_b(&self, t: f64) -> f64 {
        (self.collateral_rate_b * t).exp()
    }

    /// Structural well-formedness: dimensions line up, entries are finite,
    /// prices positive, horizon positive. Used as the simulation precondition.
    fn check_shape(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid_input("asset count d must be at least 1"));
        }
        if self.s0.len() != self.d
            || self.mu.len() != self.d
            || self.kappa.len() != self.d
            || self.rate_ib.len() != self.d
            || self.sigma.len() != self.d
            || self.sigma.iter().any(|row| row.len() != self.d)
        {
            return Err(Error::InvalidInput(format!(
                "model arrays must all have length d = {}",
                self.d
            )));
        }
        ensure_finite(&self.s0, "s0")?;
        ensure_finite(&self.mu, "mu")?;
        ensure_finite(&self.kappa, "kappa")?;
        ensure_finite(&self.rate_ib, "rate_ib")?;
        for row in &self.sigma {
            ensure_finite(row, "sigma row")?;
        }
        ensure_finite(
            &[
                self.rate_l,
                self.rate_b,
                self.collateral_rate_l,
                self.collateral_rate_b,
                self.horizon,
            ],
            "scalar model field",
        )?;
        if self.s0.iter().any(|&s| s <= 0.0) {
            return Err(Error::invalid_input("initial prices must be positive"));
        }
        if self.horizon <= 0.0 {
            return Err(Error::invalid_input("horizon must be positive"));
        }
        Ok(())
    }
}

/// One named validation check with its observed value.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    /// Hard checks gate simulation/pricing; informational ones only report.
    pub hard: bool,
    pub passed: bool,
    /// The quantity the check looked at (NaN when not applicable).
    pub value: f64,
    pub detail: String,
}

/// Outcome of [`validate`]: a list of named pass/fail checks.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// True iff every hard check passed.
    pub fn hard_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.hard)
    }

    /// The first failed hard check, if any.
    pub fn first_hard_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.hard && !c.passed)
    }

    /// The ellipticity constant found during validation (NaN if the
    /// volatility matrix was malformed).
    pub fn ellipticity(&self) -> f64 {
        self.checks
            .iter()
            .find(|c| c.name == "sigma_uniformly_elliptic")
            .map(|c| c.value)
            .unwrap_or(f64::NAN)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match (c.hard, c.passed) {
                (true, true) => "PASS",
                (true, false) => "FAIL",
                (false, true) => "info-pass",
                (false, false) => "info",
            };
            if c.value.is_nan() {
                writeln!(f, "[{tag}] {} — {}", c.name, c.detail)?;
            } else {
                writeln!(f, "[{tag}] {} = {:.6} — {}", c.name, c.value, c.detail)?;
            }
        }
        Ok(())
    }
}

/// Checks the model against its structural requirements: rate ordering,
/// uniform ellipticity of the volatility matrix, positivity and finiteness.
///
/// Hard failures make the model unusable for pricing; informational entries
/// record properties that are reported but deliberately not required — in
/// particular, lognormal prices are never bounded, so the bounded-prices
/// route is always reported as unavailable and the elliptic-volatility route
/// is the one this engine relies on.
pub fn validate(model: &MarketModel) -> ValidationReport {
    let mut checks = Vec::new();
    let shape = model.check_shape();
    checks.push(CheckResult {
        name: "model_shape",
        hard: true,
        passed: shape.is_ok(),
        value: f64::NAN,
        detail: match &shape {
            Ok(()) => "dimensions consistent, entries finite, s0 and horizon positive".into(),
            Err(e) => e.to_string(),
        },
    });

    if shape.is_ok() {
        checks.push(CheckResult {
            name: "rate_l_nonnegative",
            hard: true,
            passed: model.rate_l >= 0.0,
            value: model.rate_l,
            detail: "lending rate must be non-negative".into(),
        });
        checks.push(CheckResult {
            name: "rate_l_le_rate_b",
            hard: true,
            passed: model.rate_l <= model.rate_b,
            value: model.rate_b - model.rate_l,
            detail: format!(
                "borrowing spread rate_b − rate_l = {:.6}",
                model.rate_b - model.rate_l
            ),
        });
        let worst_ib = model
            .rate_ib
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        checks.push(CheckResult {
            name: "rate_l_le_rate_ib",
            hard: true,
            passed: model.rate_l <= worst_ib,
            value: worst_ib - model.rate_l,
            detail: format!(
                "smallest asset-funding spread min_i rate_ib[i] − rate_l = {:.6}",
                worst_ib - model.rate_l
            ),
        });
        checks.push(CheckResult {
            name: "kappa_nonnegative",
            hard: true,
            passed: model.kappa.iter().all(|&k| k >= 0.0),
            value: model.kappa.iter().cloned().fold(f64::INFINITY, f64::min),
            detail: "dividend yields must be non-negative".into(),
        });
        let lam = ellipticity_constant(&model.sigma).unwrap_or(f64::NAN);
        checks.push(CheckResult {
            name: "sigma_uniformly_elliptic",
            hard: true,
            passed: lam > 0.0,
            value: lam,
            detail: "smallest eigenvalue of σσ* must be positive".into(),
        });
    }

    checks.push(CheckResult {
        name: "prices_bounded",
        hard: false,
        passed: false,
        value: f64::NAN,
        detail: "lognormal prices are unbounded; engine relies on elliptic volatility instead"
            .into(),
    });

    ValidationReport { checks }
}

/// The market price of risk `a = σ⁻¹(μ + κ − rate_l·𝟙)`.
pub fn market_price_of_risk(model: &MarketModel) -> Result<Vec<f64>> {
    model.check_shape()?;
    let rhs: Vec<f64> = (0..model.d)
        .map(|i| model.mu[i] + model.kappa[i] - model.rate_l)
        .collect();
    solve_linear(&model.sigma, &rhs)
}

/// Uniform time grid `0 = t_0 < t_1 < … < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    n_steps: usize,
    horizon: f64,
    dt: f64,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let dt = horizon / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps)
            .map(|k| {
                if k == n_steps {
                    horizon // exact endpoint regardless of rounding in k·Δt
                } else {
                    horizon * (k as f64) / (n_steps as f64)
                }
            })
            .collect();
        Ok(TimeGrid {
            n_steps,
            horizon,
            dt,
            times,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Nominal step size T / n_steps.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid time t_k, for k in 0..=n_steps.
    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Simulated asset paths, driving-martingale increments, Brownian increments
/// and lending discount factors on a time grid.
///
/// Storage is flat and row-major over `[path][step][asset]`; every accessor
/// hands out the per-(path, step) asset slice. The defining identity
/// `dm[p][k][i] = disc_l[k] · s[p][k][i] · (σ dw[p][k])_i` holds exactly as
/// computed, which downstream code relies on for exact regression targets.
#[derive(Debug, Clone)]
pub struct PathBundle {
    model: MarketModel,
    grid: TimeGrid,
    n_paths: usize,
    d: usize,
    seed: u64,
    /// Prices, steps 0..=n_steps.
    s: Vec<f64>,
    /// Martingale increments over [t_k, t_{k+1}), steps 0..n_steps.
    dm: Vec<f64>,
    /// Brownian increments, same layout as dm.
    dw: Vec<f64>,
    /// Lending discount factors exp(−rate_l·t_k), steps 0..=n_steps.
    disc_l: Vec<f64>,
}

impl PathBundle {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_assets(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Price vector at (path, step), step in 0..=n_steps.
    #[inline]
    pub fn prices(&self, path: usize, step: usize) -> &[f64] {
        let base = (path * (self.grid.n_steps + 1) + step) * self.d;
        &self.s[base..base + self.d]
    }

    /// Martingale increment vector over [t_k, t_{k+1}), step in 0..n_steps.
    #[inline]
    pub fn dm(&self, path: usize, step: usize) -> &[f64] {
        let base = (path * self.grid.n_steps + step) * self.d;
        &self.dm[base..base + self.d]
    }

    /// Brownian increment vector, same indexing as [`Self::dm`].
    #[inline]
    pub fn dw(&self, path: usize, step: usize) -> &[f64] {
        let base = (path * self.grid.n_steps + step) * self.d;
        &self.dw[base..base + self.d]
    }

    /// Lending discount factor at t_k.
    #[inline]
    pub fn disc_l(&self, step: usize) -> f64 {
        self.disc_l[step]
    }

    pub fn disc_l_all(&self) -> &[f64] {
        &self.disc_l
    }

    /// Raw price array (used by byte-level determinism checks).
    pub fn raw_prices(&self) -> &[f64] {
        &self.s
    }

    pub fn raw_dm(&self) -> &[f64] {
        &self.dm
    }
}

/// Simulates `n_paths` asset paths on `grid` under the lending measure.
///
/// Stepping is exact lognormal (log-Euler):
/// `log S_{k+1} = log S_k + (rate_l − κ − ½·rowsum(σ²))·Δt + (σ ΔW)`,
/// so prices stay strictly positive. The martingale increments use the
/// left-point rule `ΔM_k = disc_l[k] · S_k ⊙ (σ ΔW_k)`, which is exactly
/// conditionally centered given step-k information — the property the
/// regression solver depends on.
///
/// Determinism: path p draws from stream p of a counter-mode generator
/// seeded by `seed`, with a fixed (step-major, asset-minor) draw order, so
/// output is bitwise identical for fixed `(model, grid, n_paths, seed)`
/// regardless of thread count or the `parallel` feature.
///
/// This function checks model shape but deliberately not ellipticity:
/// degenerate σ is allowed here (it gives deterministic paths, useful as a
/// test limit). Run [`validate`] for the full set of requirements.
pub fn simulate_paths(
    model: &MarketModel,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    model.check_shape()?;
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    if (grid.horizon() - model.horizon).abs() > 1e-12 * model.horizon.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "grid horizon {} does not match model horizon {}",
            grid.horizon(),
            model.horizon
        )));
    }

    let d = model.d;
    let n = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();

    // Per-asset drift of log S over one step.
    let drift: Vec<f64> = (0..d)
        .map(|i| {
            let row_sq: f64 = model.sigma[i].iter().map(|v| v * v).sum();
            (model.rate_l - model.kappa[i] - 0.5 * row_sq) * dt
        })
        .collect();
    let disc_l: Vec<f64> = grid.times().iter().map(|&t| (-model.rate_l * t).exp()).collect();
    let log_s0: Vec<f64> = model.s0.iter().map(|&s| s.ln()).collect();

    // Each chunk simulates its paths into private blocks; blocks are
    // concatenated in chunk order, so the layout is independent of scheduling.
    let price_stride = (n + 1) * d;
    let incr_stride = n * d;
    let blocks = exec::map_ranges(n_paths, exec::DEFAULT_CHUNK, |range| {
        let len = range.len();
        let mut s_blk = vec![0.0; len * price_stride];
        let mut dm_blk = vec![0.0; len * incr_stride];
        let mut dw_blk = vec![0.0; len * incr_stride];
        let normal = rand_distr::StandardNormal;
        for (slot, p) in range.enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let s_path = &mut s_blk[slot * price_stride..(slot + 1) * price_stride];
            let dm_path = &mut dm_blk[slot * incr_stride..(slot + 1) * incr_stride];
            let dw_path = &mut dw_blk[slot * incr_stride..(slot + 1) * incr_stride];

            let mut log_s = log_s0.clone();
            for (i, &ls) in log_s.iter().enumerate() {
                s_path[i] = ls.exp();
            }
            for k in 0..n {
                // Fixed draw order: step k, assets 0..d.
                for i in 0..d {
                    let eps: f64 = normal.sample(&mut rng);
                    dw_path[k * d + i] = sqrt_dt * eps;
                }
                for i in 0..d {
                    let mut sig_dw = 0.0;
                    for j in 0..d {
                        sig_dw += model.sigma[i][j] * dw_path[k * d + j];
                    }
                    let s_now = s_path[k * d + i];
                    dm_path[k * d + i] = disc_l[k] * s_now * sig_dw;
                    log_s[i] += drift[i] + sig_dw;
                    s_path[(k + 1) * d + i] = log_s[i].exp();
                }
            }
        }
        (s_blk, dm_blk, dw_blk)
    });

    let mut s = Vec::with_capacity(n_paths * price_stride);
    let mut dm = Vec::with_capacity(n_paths * incr_stride);
    let mut dw = Vec::with_capacity(n_paths * incr_stride);
    for (s_blk, dm_blk, dw_blk) in blocks {
        s.extend_from_slice(&s_blk);
        dm.extend_from_slice(&dm_blk);
        dw.extend_from_slice(&dw_blk);
    }

    Ok(PathBundle {
        grid: grid.clone(),
        n_paths,
        d,
        seed,
        s,
        dm,
        dw,
        disc_l,
    })
}

/// The instantaneous quadratic-variation factor of the driving martingale:
/// `m m* = diag(s) · (σ/bank_l)(σ/bank_l)* · diag(s)`.
///
/// Computed as `(s_i/bank_l)(s_j/bank_l)·(σσ*)_{ij}` so that scaling `s` or
/// `bank_l` by powers of two rescales the result exactly.
pub fn m_times_m_star(model: &MarketModel, bank_l: f64, s: &[f64]) -> Result<SymMatrix> {
    model.check_shape()?;
    if s.len() != model.d {
        return Err(Error::invalid_input("price vector length must equal d"));
    }
    if !(bank_l > 0.0) || !bank_l.is_finite() {
        return Err(Error::invalid_input("bank_l must be positive and finite"));
    }
    if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid_input("prices must be positive and finite"));
    }
    let d = model.d;
    let gg = SymMatrix::from_fn(d, |i, j| {
        let mut acc = 0.0;
        for k in 0..d {
            acc += model.sigma[i][k] * model.sigma[j][k];
        }
        acc
    });
    Ok(SymMatrix::from_fn(d, |i, j| {
        (s[i] / bank_l) * (s[j] / bank_l) * gg.get(i, j)
    }))
}

/// Writes the simulated prices as CSV: one row per (path, step), columns
/// `path,t,S_1..S_d`, 17 significant digits.
pub fn write_paths_csv<W: Write>(paths: &PathBundle, out: &mut W) -> io::Result<()> {
    write!(out, "path,t")?;
    for i in 1..=paths.n_assets() {
        write!(out, ",S_{i}")?;
    }
    writeln!(out)?;
    for p in 0..paths.n_paths() {
        for k in 0..=paths.grid().n_steps() {
            write!(out, "{p},{:.16e}", paths.grid().time(k))?;
            for &s in paths.prices(p, k) {
                write!(out, ",{s:.16e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
