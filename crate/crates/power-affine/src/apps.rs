//! Builders that assemble concrete economic models into power-affine
//! systems, and transforms that recover each model's native object from the
//! solved fixed point.
//!
//! Four models reduce to the same equation:
//!
//! - consumption-savings with state-dependent discounting, whose coefficient
//!   function prices the optimal consumption rate out of wealth;
//! - Epstein-Zin recursive utility over a finite Markov chain;
//! - the equilibrium wealth-consumption ratio under those preferences;
//! - steady-state capital in a multi-sector growth model with CES
//!   production.
//!
//! Each solved model re-verifies its own defining equation in original model
//! coordinates, not just in the canonical coordinates the solver works in:
//! the change of variables can stretch tolerances, and the residual the user
//! cares about is the one in their equation.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, NonnegMatrix, PositiveVector};
use crate::solver::{SolveOptions, SolveReport};
use crate::system::{PowerAffineSystem, SystemError};

/// Slack allowed on Markov row sums. Rows further than this from 1 are
/// rejected rather than renormalized; silently repairing a transition matrix
/// hides data bugs.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> AppError {
    AppError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn check_dim(n: usize, len: usize) -> Result<(), AppError> {
    if n != len {
        return Err(LinalgError::DimensionMismatch { n, len }.into());
    }
    Ok(())
}

/// Row-stochastic irreducible transition matrix of a finite Markov chain.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    q: NonnegMatrix,
}

impl MarkovChain {
    pub fn new(q: NonnegMatrix) -> Result<Self, AppError> {
        for i in 0..q.n() {
            let sum: f64 = q.row(i).iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(AppError::NotStochastic { row: i, sum });
            }
        }
        if !q.is_irreducible() {
            return Err(LinalgError::NotIrreducible.into());
        }
        Ok(Self { q })
    }

    pub fn matrix(&self) -> &NonnegMatrix {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }
}

/// A solved model: the assembled system, the raw solver report, and the
/// model's native output with its name.
#[derive(Debug, Clone, Serialize)]
pub struct AppSolution {
    pub model: &'static str,
    pub output_name: &'static str,
    pub primary_output: PositiveVector,
    /// Relative sup-norm residual of the model's own defining equation,
    /// evaluated independently of the solver's coordinate system.
    pub model_residual: f64,
    pub system: PowerAffineSystem,
    pub report: SolveReport,
}

fn pow_components(v: &[f64], p: f64) -> Vec<f64> {
    v.iter().map(|t| t.powf(p)).collect()
}

fn relative_sup_residual(lhs: &[f64], rhs: &[f64], scale: &[f64]) -> f64 {
    let err = lhs
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let denom = scale.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    err / denom
}

// ---------------------------------------------------------------------------
// Consumption-savings with state-dependent discounting
// ---------------------------------------------------------------------------

/// Assembles the coefficient equation of the optimal consumption problem
/// with state-dependent discount factors `beta` and gross returns `returns`.
///
/// The coefficient function solves, state by state,
///
/// ```text
///     y(z) = (1 + [beta(z) R(z)^{1-gamma} (q y)(z)]^{1/gamma})^gamma,
/// ```
///
/// which is the transformed form of the system with
/// `A = diag(beta * R^{1-gamma}) q`, unit intercept, and exponent `gamma`.
/// The optimal rule consumes the fraction `y(z)^{-1/gamma}` of wealth.
pub fn build_discounted_consumption(
    beta: &PositiveVector,
    returns: &PositiveVector,
    gamma: f64,
    chain: &MarkovChain,
) -> Result<PowerAffineSystem, AppError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid(
            "gamma",
            format!("must be finite and > 0, got {gamma}"),
        ));
    }
    check_dim(chain.n(), beta.len())?;
    check_dim(chain.n(), returns.len())?;
    let mut weights = Vec::with_capacity(chain.n());
    for z in 0..chain.n() {
        let w = beta.get(z) * returns.get(z).powf(1.0 - gamma);
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(
                "returns",
                format!("beta * R^(1-gamma) is not representable at state {z} (got {w})"),
            ));
        }
        weights.push(w);
    }
    let a = chain.matrix().scale_rows(&weights)?;
    let b = PositiveVector::ones(chain.n());
    Ok(PowerAffineSystem::new(a, b, gamma)?)
}

/// Residual of the consumption coefficient equation at `y`, relative sup
/// norm, computed from the raw parameters rather than the built system.
pub fn discounted_consumption_residual(
    beta: &PositiveVector,
    returns: &PositiveVector,
    gamma: f64,
    chain: &MarkovChain,
    y: &PositiveVector,
) -> Result<f64, AppError> {
    check_dim(chain.n(), y.len())?;
    let qy = chain.matrix().apply(y.as_slice())?;
    let rhs: Vec<f64> = (0..chain.n())
        .map(|z| {
            let inner = beta.get(z) * returns.get(z).powf(1.0 - gamma) * qy[z];
            (1.0 + inner.powf(1.0 / gamma)).powf(gamma)
        })
        .collect();
    Ok(relative_sup_residual(y.as_slice(), &rhs, y.as_slice()))
}

/// Solves the consumption model and returns the per-state consumption rates
/// `y(z)^{-1/gamma}`.
pub fn solve_discounted_consumption(
    beta: &PositiveVector,
    returns: &PositiveVector,
    gamma: f64,
    chain: &MarkovChain,
    opts: &SolveOptions,
) -> Result<AppSolution, AppError> {
    let system = build_discounted_consumption(beta, returns, gamma, chain)?;
    let report = system.solve(opts)?;
    let rate = PositiveVector::new(pow_components(report.y_star.as_slice(), -1.0 / gamma))?;
    let model_residual =
        discounted_consumption_residual(beta, returns, gamma, chain, &report.y_star)?;
    Ok(AppSolution {
        model: "discounted_consumption",
        output_name: "consumption_rate",
        primary_output: rate,
        model_residual,
        system,
        report,
    })
}

// ---------------------------------------------------------------------------
// Epstein-Zin recursive utility
// ---------------------------------------------------------------------------

/// Assembles the Epstein-Zin utility recursion
///
/// ```text
///     v = ((1-beta) c^rho + beta (Rv)^rho)^{1/rho},   Rv = (Q v^alpha)^{1/alpha},
/// ```
///
/// in its transformed coordinates `w = v^alpha` with exponent
/// `s = alpha/rho`, operator `beta^s Q`, and intercept `(1-beta) c^rho`.
///
/// `beta >= 1` is rejected here instead of producing an infeasible
/// certificate: the intercept `(1-beta) c^rho` stops being strictly positive
/// at exactly the point where the recursion stops having a solution, so the
/// system cannot even be assembled.
pub fn build_epstein_zin(
    beta: f64,
    rho: f64,
    alpha: f64,
    consumption: &PositiveVector,
    chain: &MarkovChain,
) -> Result<PowerAffineSystem, AppError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(
            "beta",
            format!("must be finite and > 0, got {beta}"),
        ));
    }
    if beta >= 1.0 {
        return Err(invalid(
            "beta",
            format!(
                "must be < 1 so the intercept (1-beta)c^rho stays strictly positive, got {beta}"
            ),
        ));
    }
    if !(rho.is_finite() && rho != 0.0) {
        return Err(invalid(
            "rho",
            format!("must be finite and nonzero, got {rho}"),
        ));
    }
    if !(alpha.is_finite() && alpha != 0.0) {
        return Err(invalid(
            "alpha",
            format!("must be finite and nonzero, got {alpha}"),
        ));
    }
    check_dim(chain.n(), consumption.len())?;
    let s = alpha / rho;
    let factor = beta.powf(s);
    if !(factor.is_finite() && factor > 0.0) {
        return Err(invalid(
            "beta",
            format!("beta^(alpha/rho) is not representable (got {factor})"),
        ));
    }
    let a = chain.matrix().scale(factor);
    let b = PositiveVector::new(
        consumption
            .as_slice()
            .iter()
            .map(|c| (1.0 - beta) * c.powf(rho))
            .collect(),
    )?;
    Ok(PowerAffineSystem::new(a, b, s)?)
}

/// Residual of the utility recursion at `v`, relative sup norm, evaluated in
/// the original coordinates with the certainty-equivalent operator spelled
/// out.
pub fn epstein_zin_residual(
    beta: f64,
    rho: f64,
    alpha: f64,
    consumption: &PositiveVector,
    chain: &MarkovChain,
    v: &PositiveVector,
) -> Result<f64, AppError> {
    check_dim(chain.n(), v.len())?;
    let qva = chain.matrix().apply(&pow_components(v.as_slice(), alpha))?;
    let rhs: Vec<f64> = (0..chain.n())
        .map(|z| {
            let rv = qva[z].powf(1.0 / alpha);
            ((1.0 - beta) * consumption.get(z).powf(rho) + beta * rv.powf(rho)).powf(1.0 / rho)
        })
        .collect();
    Ok(relative_sup_residual(v.as_slice(), &rhs, v.as_slice()))
}

/// Solves the utility recursion and returns lifetime utility `v = w^{1/alpha}`.
pub fn solve_epstein_zin(
    beta: f64,
    rho: f64,
    alpha: f64,
    consumption: &PositiveVector,
    chain: &MarkovChain,
    opts: &SolveOptions,
) -> Result<AppSolution, AppError> {
    let system = build_epstein_zin(beta, rho, alpha, consumption, chain)?;
    let report = system.solve(opts)?;
    let v = PositiveVector::new(pow_components(report.y_star.as_slice(), 1.0 / alpha))?;
    let model_residual = epstein_zin_residual(beta, rho, alpha, consumption, chain, &v)?;
    Ok(AppSolution {
        model: "epstein_zin",
        output_name: "utility",
        primary_output: v,
        model_residual,
        system,
        report,
    })
}

// ---------------------------------------------------------------------------
// Wealth-consumption ratio
// ---------------------------------------------------------------------------

/// Assembles the first-order condition for the equilibrium
/// wealth-consumption ratio,
///
/// ```text
///     beta^s Q w^s = (w - 1)^s,
/// ```
///
/// as the system with `A = beta^s Q`, unit intercept, and exponent `s`. The
/// growth operator `Q` is any irreducible nonnegative matrix; it is not
/// required to be stochastic.
pub fn build_wealth_consumption(
    beta: f64,
    exponent: f64,
    growth: &NonnegMatrix,
) -> Result<PowerAffineSystem, AppError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(
            "beta",
            format!("must be finite and > 0, got {beta}"),
        ));
    }
    if !(exponent.is_finite() && exponent != 0.0) {
        return Err(invalid(
            "exponent",
            format!("must be finite and nonzero, got {exponent}"),
        ));
    }
    let factor = beta.powf(exponent);
    if !(factor.is_finite() && factor > 0.0) {
        return Err(invalid(
            "beta",
            format!("beta^exponent is not representable (got {factor})"),
        ));
    }
    let a = growth.scale(factor);
    let b = PositiveVector::ones(growth.n());
    Ok(PowerAffineSystem::new(a, b, exponent)?)
}

/// Residual of the ratio's first-order condition at `w`, relative sup norm
/// against the right-hand side `(w - 1)^s`. Meaningful only for `w >> 1`,
/// which every genuine solution satisfies because the map adds 1.
pub fn wealth_consumption_residual(
    beta: f64,
    exponent: f64,
    growth: &NonnegMatrix,
    w: &PositiveVector,
) -> Result<f64, AppError> {
    check_dim(growth.n(), w.len())?;
    let factor = beta.powf(exponent);
    let qws = growth.apply(&pow_components(w.as_slice(), exponent))?;
    let lhs: Vec<f64> = qws.iter().map(|t| factor * t).collect();
    let rhs: Vec<f64> = w
        .as_slice()
        .iter()
        .map(|t| (t - 1.0).powf(exponent))
        .collect();
    Ok(relative_sup_residual(&lhs, &rhs, &rhs))
}

/// Solves for the wealth-consumption ratio `w` itself (the untransformed
/// fixed point).
pub fn solve_wealth_consumption(
    beta: f64,
    exponent: f64,
    growth: &NonnegMatrix,
    opts: &SolveOptions,
) -> Result<AppSolution, AppError> {
    let system = build_wealth_consumption(beta, exponent, growth)?;
    let report = system.solve(opts)?;
    let w = report.x_star.clone();
    let model_residual = wealth_consumption_residual(beta, exponent, growth, &w)?;
    Ok(AppSolution {
        model: "wealth_consumption",
        output_name: "wealth_consumption_ratio",
        primary_output: w,
        model_residual,
        system,
        report,
    })
}

// ---------------------------------------------------------------------------
// Multi-sector growth with CES production
// ---------------------------------------------------------------------------

/// Assembles the steady-state condition of the multi-sector growth model
/// with CES production and full depreciation,
///
/// ```text
///     k = savings * (theta + (1-theta) (A k)^rho)^{1/rho},
/// ```
///
/// as the transformed system with operator
/// `savings * (1-theta)^{1/rho} * A`, intercept `savings^rho * theta`, and
/// exponent `1/rho`. The paper's own symbol for the savings rate collides
/// with the exponent symbol used everywhere else in this crate, so the
/// parameter is named `savings` and `rho` keeps its CES meaning.
pub fn build_ces_growth(
    savings: f64,
    theta: f64,
    rho: f64,
    technology: &NonnegMatrix,
) -> Result<PowerAffineSystem, AppError> {
    if !(savings.is_finite() && savings > 0.0) {
        return Err(invalid(
            "savings",
            format!("must be finite and > 0, got {savings}"),
        ));
    }
    if !(theta.is_finite() && theta > 0.0 && theta < 1.0) {
        return Err(invalid(
            "theta",
            format!("must lie strictly in (0,1), got {theta}"),
        ));
    }
    if !(rho.is_finite() && rho != 0.0) {
        return Err(invalid(
            "rho",
            format!("must be finite and nonzero, got {rho}"),
        ));
    }
    let coeff = savings * (1.0 - theta).powf(1.0 / rho);
    if !(coeff.is_finite() && coeff > 0.0) {
        return Err(invalid(
            "theta",
            format!("savings * (1-theta)^(1/rho) is not representable (got {coeff})"),
        ));
    }
    let intercept = savings.powf(rho) * theta;
    if !(intercept.is_finite() && intercept > 0.0) {
        return Err(invalid(
            "savings",
            format!("savings^rho * theta is not representable (got {intercept})"),
        ));
    }
    let a = technology.scale(coeff);
    let b = PositiveVector::new(vec![intercept; technology.n()])?;
    Ok(PowerAffineSystem::new(a, b, 1.0 / rho)?)
}

/// Residual of the steady-state condition at `k`, relative sup norm, from
/// the raw CES form.
pub fn ces_growth_residual(
    savings: f64,
    theta: f64,
    rho: f64,
    technology: &NonnegMatrix,
    k: &PositiveVector,
) -> Result<f64, AppError> {
    check_dim(technology.n(), k.len())?;
    let ak = technology.apply(k.as_slice())?;
    let rhs: Vec<f64> = ak
        .iter()
        .map(|t| savings * (theta + (1.0 - theta) * t.powf(rho)).powf(1.0 / rho))
        .collect();
    Ok(relative_sup_residual(k.as_slice(), &rhs, k.as_slice()))
}

/// Solves for the steady-state capital-labor ratios (the transformed-domain
/// fixed point is the capital vector itself).
pub fn solve_ces_growth(
    savings: f64,
    theta: f64,
    rho: f64,
    technology: &NonnegMatrix,
    opts: &SolveOptions,
) -> Result<AppSolution, AppError> {
    let system = build_ces_growth(savings, theta, rho, technology)?;
    let report = system.solve(opts)?;
    let k = report.y_star.clone();
    let model_residual = ces_growth_residual(savings, theta, rho, technology, &k)?;
    Ok(AppSolution {
        model: "ces_growth",
        output_name: "steady_state_capital",
        primary_output: k,
        model_residual,
        system,
        report,
    })
}
