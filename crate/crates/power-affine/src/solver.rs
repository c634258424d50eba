//! Bracketing and the fixed-point iteration.
//!
//! The solver is deliberately plain: after the spectral test admits the
//! system, it iterates y ↦ G y until the sup-norm step shrinks below `tol`.
//! The convergence theory certifies exactly this iteration, so there is no
//! Anderson mixing or Newton polish layered on top; what the report claims
//! about its residuals is what the loop actually measured. For audit value
//! the solver also produces a sub/supersolution pair around the start: a
//! scalar search along the Perron ray finds p = c_lo e with G p ≫ p and
//! q = c_hi e with G q ≪ q, and order preservation of G then traps the fixed
//! point (and every later iterate) inside [p, q].

use serde::Serialize;

use crate::linalg::{NonnegVector, PerronData, PositiveVector};
use crate::system::{
    certificate_from_root, DomainError, PowerAffineSystem, SolvabilityCertificate, SystemError,
    Verdict,
};

/// Where the iteration begins.
///
/// Every choice is interpreted in y-coordinates. `BracketMid` builds the
/// bracket around the Perron eigenvector and starts from the componentwise
/// geometric midpoint of the pair. `Vector` accepts any nonnegative start;
/// a start touching the cone boundary is lifted into the interior by one map
/// application when s > 0 and rejected when s < 0.
#[derive(Debug, Clone, Default)]
pub enum Start {
    #[default]
    BracketMid,
    Ones,
    Perron,
    Vector(NonnegVector),
}

/// Solver knobs. Defaults: `tol = 1e-10`, `max_iters = 100_000`,
/// `start = Start::BracketMid`.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub start: Start,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 100_000,
            start: Start::BracketMid,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }
}

/// Sub/supersolution pair along the Perron ray.
///
/// Invariants checked at construction time by direct evaluation of G:
/// `G p ≫ p`, `G q ≪ q`, and `p ≤ y0 ≤ q` for the start the bracket was
/// built around, all componentwise.
#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub p: PositiveVector,
    pub q: PositiveVector,
    pub c_lo: f64,
    pub c_hi: f64,
}

/// Everything the iteration measured on its way to the fixed point.
///
/// `y_star` satisfies `‖G y* − y*‖∞ = residual_y <= tol`. `x_star` is its
/// pullback with `‖F x* − x*‖∞ = residual_x <= x_tol`, where `x_tol` scales
/// `tol` by a local Lipschitz factor of t ↦ t^{1/s} over the solution range;
/// a y-space tolerance means nothing in x-space until that factor is priced
/// in. `residual_history[k]` is the sup-norm step after the k-th map
/// application, so `iterations == residual_history.len()`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub certificate: SolvabilityCertificate,
    pub x_star: PositiveVector,
    pub y_star: PositiveVector,
    pub iterations: usize,
    pub residual_y: f64,
    pub residual_x: f64,
    pub x_tol: f64,
    pub bracket: Bracket,
    pub residual_history: Vec<f64>,
}

/// Relative slack demanded of a sub/supersolution. A candidate p only counts
/// once `G p >= (1 + eps) p`, so eigenvector roundoff cannot fake a bracket.
const BRACKET_EPS: f64 = 1e-10;

/// Halving/doubling budget for the scalar bracket search. Exhausting it means
/// the certificate and the map disagree numerically, which is an error, not a
/// warning.
const BRACKET_MAX_STEPS: u32 = 200;

impl PowerAffineSystem {
    /// Builds a bracket around `y0`.
    ///
    /// Requires a solvable system (the search cannot terminate otherwise);
    /// infeasibility surfaces as [`SystemError::NoSolution`].
    pub fn bracket(&self, y0: &PositiveVector) -> Result<Bracket, SystemError> {
        let pd = self.perron_data()?;
        let certificate = certificate_from_root(pd.r, self.exponent());
        if certificate.verdict == Verdict::NoSolution {
            return Err(SystemError::NoSolution { certificate });
        }
        self.bracket_around(&pd, y0)
    }

    fn bracket_around(&self, pd: &PerronData, y0: &PositiveVector) -> Result<Bracket, SystemError> {
        let e = &pd.e;
        let mut ratio_lo = f64::INFINITY;
        let mut ratio_hi = 0.0_f64;
        for i in 0..y0.len() {
            let ratio = y0.get(i) / e.get(i);
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }

        let mut c_lo = 1.0_f64;
        let mut steps = 0u32;
        let p = loop {
            if c_lo <= ratio_lo {
                let p = e.scale(c_lo);
                let gp = self.apply_y(&p)?;
                let ok = (0..p.len()).all(|i| gp.get(i) >= (1.0 + BRACKET_EPS) * p.get(i));
                if ok {
                    break p;
                }
            }
            c_lo *= 0.5;
            steps += 1;
            if steps > BRACKET_MAX_STEPS {
                return Err(SystemError::BracketSearchFailed { steps });
            }
        };

        let mut c_hi = 1.0_f64;
        steps = 0;
        let q = loop {
            if c_hi >= ratio_hi {
                let q = e.scale(c_hi);
                let gq = self.apply_y(&q)?;
                let ok = (0..q.len()).all(|i| gq.get(i) <= (1.0 - BRACKET_EPS) * q.get(i));
                if ok {
                    break q;
                }
            }
            c_hi *= 2.0;
            steps += 1;
            if steps > BRACKET_MAX_STEPS {
                return Err(SystemError::BracketSearchFailed { steps });
            }
        };

        Ok(Bracket { p, q, c_lo, c_hi })
    }

    /// Solves the system by iterating the transformed map.
    ///
    /// Fails fast with [`SystemError::NoSolution`] when the spectral test
    /// says no fixed point exists; no iteration is attempted in that case.
    pub fn solve(&self, opts: &SolveOptions) -> Result<SolveReport, SystemError> {
        assert!(
            opts.tol > 0.0 && opts.tol.is_finite(),
            "tolerance must be finite and > 0"
        );
        let pd = self.perron_data()?;
        let certificate = certificate_from_root(pd.r, self.exponent());
        if certificate.verdict == Verdict::NoSolution {
            return Err(SystemError::NoSolution { certificate });
        }

        let mut residual_history = Vec::new();

        // Resolve the start and build the bracket around it. A boundary
        // start costs one map application, recorded like any other step.
        let (mut y, bracket) = match &opts.start {
            Start::BracketMid => {
                let bracket = self.bracket_around(&pd, &pd.e)?;
                let c_mid = (bracket.c_lo * bracket.c_hi).sqrt();
                (pd.e.scale(c_mid), bracket)
            }
            Start::Ones => {
                let y0 = PositiveVector::ones(self.dim());
                let bracket = self.bracket_around(&pd, &y0)?;
                (y0, bracket)
            }
            Start::Perron => {
                let bracket = self.bracket_around(&pd, &pd.e)?;
                (pd.e.clone(), bracket)
            }
            Start::Vector(v) => {
                if v.len() != self.dim() {
                    return Err(crate::linalg::LinalgError::DimensionMismatch {
                        n: self.dim(),
                        len: v.len(),
                    }
                    .into());
                }
                if v.is_strictly_positive() {
                    let y0 = v.clone().into_positive().expect("checked positive");
                    let bracket = self.bracket_around(&pd, &y0)?;
                    (y0, bracket)
                } else if self.exponent() > 0.0 {
                    let y0 = self.apply_y_nonneg(v)?;
                    residual_history.push(crate::linalg::sup_distance(y0.as_slice(), v.as_slice()));
                    let bracket = self.bracket_around(&pd, &y0)?;
                    (y0, bracket)
                } else {
                    return Err(DomainError::BoundaryStart.into());
                }
            }
        };

        for _ in residual_history.len()..opts.max_iters {
            let gy = self.apply_y(&y)?;
            let res = gy.sup_distance(&y);
            residual_history.push(res);
            if res <= opts.tol {
                return Ok(self.finish_report(opts.tol, certificate, bracket, y, residual_history));
            }
            y = gy;
        }

        Err(SystemError::MaxIterationsExceeded {
            max_iters: opts.max_iters,
            last_residual: residual_history.last().copied().unwrap_or(f64::INFINITY),
        })
    }

    fn finish_report(
        &self,
        tol: f64,
        certificate: SolvabilityCertificate,
        bracket: Bracket,
        y_star: PositiveVector,
        residual_history: Vec<f64>,
    ) -> SolveReport {
        let residual_y = *residual_history.last().expect("at least one step");
        let x_star = self
            .to_x(&y_star)
            .expect("fixed point stays strictly positive");
        let residual_x = self
            .residual_x(&x_star)
            .expect("fixed point stays strictly positive");
        // Mean-value bound plus a rounding allowance for evaluating the
        // x-space residual itself.
        let x_tol = pullback_slope(self.exponent(), &y_star, residual_y) * tol
            + 16.0 * f64::EPSILON * x_star.max().max(1.0);
        SolveReport {
            certificate,
            x_star,
            y_star,
            iterations: residual_history.len(),
            residual_y,
            residual_x,
            x_tol,
            bracket,
            residual_history,
        }
    }
}

/// Largest slope of t ↦ t^{1/s} over the solution range, widened by the
/// final residual so the segment between y* and G y* is covered.
fn pullback_slope(s: f64, y_star: &PositiveVector, residual: f64) -> f64 {
    let lo = (y_star.min() - residual).max(0.5 * y_star.min());
    let hi = y_star.max() + residual;
    let exponent = 1.0 / s - 1.0;
    let slope = lo.powf(exponent).max(hi.powf(exponent)) / s.abs();
    debug_assert!(slope.is_finite() && slope > 0.0);
    slope
}
