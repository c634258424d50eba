//! The system type and its two conjugate fixed-point maps.
//!
//! A system is a triple (A, b, s). The original equation lives in x-space,
//!
//! ```text
//!     F x = (A xˢ)^{1/s} + b,
//! ```
//!
//! but every structural property used by the solver (order preservation,
//! concavity or convexity, the sub/supersolution trap) belongs to the
//! conjugate map in y = xˢ coordinates,
//!
//! ```text
//!     G y = ((A y)^{1/s} + b)ˢ,
//! ```
//!
//! so iteration happens in y-space and solutions are pulled back through
//! x = y^{1/s} at the end. With H x = xˢ the two maps satisfy H ∘ F = G ∘ H
//! exactly, which is also a property test elsewhere in this crate.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{
    perron_default, LinalgError, NonnegMatrix, NonnegVector, PerronData, PositiveVector,
};

/// A point where one of the maps leaves the strictly positive cone.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("linear image has a nonpositive component at index {index}")]
    NonPositiveImage { index: usize },
    #[error("map value underflowed to zero at index {index}")]
    UnderflowToZero { index: usize },
    #[error("map value is not finite at index {index}")]
    NonFiniteValue { index: usize },
    #[error("a start on the cone boundary requires a positive exponent")]
    BoundaryStart,
}

/// Errors from system construction, evaluation, and solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("exponent must be nonzero")]
    ZeroExponent,
    #[error("exponent must be finite, got {value}")]
    NonFiniteExponent { value: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(
        "no strictly positive solution exists: r(A) = {}, s = {}, r^s = {}",
        .certificate.r, .certificate.s, .certificate.r_pow_s
    )]
    NoSolution { certificate: SolvabilityCertificate },
    #[error("bracket search failed after {steps} geometric steps from c = 1")]
    BracketSearchFailed { steps: u32 },
    #[error("no convergence within {max_iters} iterations (last residual {last_residual:e})")]
    MaxIterationsExceeded {
        max_iters: usize,
        last_residual: f64,
    },
}

/// Existence verdict of the spectral test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UniqueSolution,
    NoSolution,
}

/// Outcome of the solvability test, with enough numbers to audit it.
///
/// The test is evaluated in sign form: a unique strictly positive solution
/// exists iff `s * ln r(A) < 0`, which avoids under/overflow of `r^s` for
/// large exponents. `margin` is the absolute value of that criterion. When
/// `r^s` sits within 1e-9 of 1 the verdict is `NoSolution` and
/// `boundary_warning` is set, since roundoff in r cannot support a positive
/// existence claim there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvabilityCertificate {
    pub r: f64,
    pub s: f64,
    pub criterion: f64,
    pub r_pow_s: f64,
    pub verdict: Verdict,
    pub margin: f64,
    pub boundary_warning: bool,
}

/// Half-width of the band around `r^s = 1` that is reported as unsolvable.
pub const BOUNDARY_BAND: f64 = 1e-9;

pub(crate) fn certificate_from_root(r: f64, s: f64) -> SolvabilityCertificate {
    let criterion = s * r.ln();
    let r_pow_s = criterion.exp();
    let boundary = criterion.exp_m1().abs() <= BOUNDARY_BAND;
    let verdict = if !boundary && criterion < 0.0 {
        Verdict::UniqueSolution
    } else {
        Verdict::NoSolution
    };
    SolvabilityCertificate {
        r,
        s,
        criterion,
        r_pow_s,
        verdict,
        margin: criterion.abs(),
        boundary_warning: boundary,
    }
}

/// A power-transformed affine system (A, b, s) with A irreducible and b ≫ 0.
///
/// Immutable after construction; all methods take `&self` and the type is
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAffineSystem {
    a: NonnegMatrix,
    b: PositiveVector,
    s: f64,
}

impl PowerAffineSystem {
    /// Validates and assembles a system.
    ///
    /// `b` is already strictly positive by type; this checks that its length
    /// matches the matrix order, that `s` is a finite nonzero real, and that
    /// `a` is irreducible.
    pub fn new(a: NonnegMatrix, b: PositiveVector, s: f64) -> Result<Self, SystemError> {
        if b.len() != a.n() {
            return Err(LinalgError::DimensionMismatch {
                n: a.n(),
                len: b.len(),
            }
            .into());
        }
        if s == 0.0 {
            return Err(SystemError::ZeroExponent);
        }
        if !s.is_finite() {
            return Err(SystemError::NonFiniteExponent { value: s });
        }
        if !a.is_irreducible() {
            return Err(LinalgError::NotIrreducible.into());
        }
        Ok(Self { a, b, s })
    }

    pub fn matrix(&self) -> &NonnegMatrix {
        &self.a
    }

    /// The additive term b of the affine part.
    pub fn intercept(&self) -> &PositiveVector {
        &self.b
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.a.n()
    }

    fn check_dim(&self, len: usize) -> Result<(), SystemError> {
        if len != self.dim() {
            return Err(LinalgError::DimensionMismatch { n: self.dim(), len }.into());
        }
        Ok(())
    }

    /// One application of the map in original coordinates,
    /// `x ↦ (A xˢ)^{1/s} + b`.
    ///
    /// Computed directly, not through the conjugacy, so that the identity
    /// `to_y(apply_x(x)) = apply_y(to_y(x))` is a genuine two-route check.
    pub fn apply_x(&self, x: &PositiveVector) -> Result<PositiveVector, SystemError> {
        self.check_dim(x.len())?;
        let powered: Vec<f64> = x.as_slice().iter().map(|&v| v.powf(self.s)).collect();
        let w = self.a.apply(&powered)?;
        let inv_s = 1.0 / self.s;
        let mut out = Vec::with_capacity(w.len());
        for (i, &wi) in w.iter().enumerate() {
            if !wi.is_finite() {
                return Err(DomainError::NonFiniteValue { index: i }.into());
            }
            if wi <= 0.0 {
                return Err(DomainError::NonPositiveImage { index: i }.into());
            }
            out.push(wi.powf(inv_s) + self.b.get(i));
        }
        validate_image(out)
    }

    /// One application of the transformed map, `y ↦ ((A y)^{1/s} + b)ˢ`.
    pub fn apply_y(&self, y: &PositiveVector) -> Result<PositiveVector, SystemError> {
        self.check_dim(y.len())?;
        let w = self.a.apply(y.as_slice())?;
        self.finish_y(&w)
    }

    /// [`PowerAffineSystem::apply_y`] for starts that may touch the cone
    /// boundary. For s > 0 the map is well defined on all of the nonnegative
    /// cone and one application lands strictly inside (the image dominates
    /// bˢ ≫ 0); for s < 0 a boundary point is outside the domain.
    pub fn apply_y_nonneg(&self, y: &NonnegVector) -> Result<PositiveVector, SystemError> {
        self.check_dim(y.len())?;
        if self.s < 0.0 && !y.is_strictly_positive() {
            return Err(DomainError::BoundaryStart.into());
        }
        let w = self.a.apply(y.as_slice())?;
        let inv_s = 1.0 / self.s;
        let out = w
            .iter()
            .zip(self.b.as_slice())
            .map(|(&wi, &bi)| (wi.powf(inv_s) + bi).powf(self.s))
            .collect();
        validate_image(out)
    }

    fn finish_y(&self, w: &[f64]) -> Result<PositiveVector, SystemError> {
        let inv_s = 1.0 / self.s;
        let mut out = Vec::with_capacity(w.len());
        for (i, &wi) in w.iter().enumerate() {
            if !wi.is_finite() {
                return Err(DomainError::NonFiniteValue { index: i }.into());
            }
            if wi <= 0.0 {
                return Err(DomainError::NonPositiveImage { index: i }.into());
            }
            out.push((wi.powf(inv_s) + self.b.get(i)).powf(self.s));
        }
        validate_image(out)
    }

    /// Change of variable into the transformed coordinates, y = xˢ.
    pub fn to_y(&self, x: &PositiveVector) -> Result<PositiveVector, SystemError> {
        self.check_dim(x.len())?;
        validate_image(x.as_slice().iter().map(|&v| v.powf(self.s)).collect())
    }

    /// Inverse change of variable, x = y^{1/s}.
    pub fn to_x(&self, y: &PositiveVector) -> Result<PositiveVector, SystemError> {
        self.check_dim(y.len())?;
        let inv_s = 1.0 / self.s;
        validate_image(y.as_slice().iter().map(|&v| v.powf(inv_s)).collect())
    }

    /// Sup-norm fixed-point defect in original coordinates, `‖F x − x‖∞`.
    pub fn residual_x(&self, x: &PositiveVector) -> Result<f64, SystemError> {
        Ok(self.apply_x(x)?.sup_distance(x))
    }

    /// Sup-norm fixed-point defect in transformed coordinates, `‖G y − y‖∞`.
    pub fn residual_y(&self, y: &PositiveVector) -> Result<f64, SystemError> {
        Ok(self.apply_y(y)?.sup_distance(y))
    }

    /// Perron data for the system matrix at the default eigen tolerance.
    pub fn perron_data(&self) -> Result<PerronData, SystemError> {
        Ok(perron_default(&self.a)?)
    }

    /// Runs the spectral existence test.
    pub fn certify(&self) -> Result<SolvabilityCertificate, SystemError> {
        let pd = self.perron_data()?;
        Ok(certificate_from_root(pd.r, self.s))
    }
}

fn validate_image(values: Vec<f64>) -> Result<PositiveVector, SystemError> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(DomainError::NonFiniteValue { index: i }.into());
        }
        if v <= 0.0 {
            return Err(DomainError::UnderflowToZero { index: i }.into());
        }
    }
    Ok(PositiveVector::new(values).expect("validated above"))
}

impl Serialize for PowerAffineSystem {
    /// Serializes in the same shape the CLI accepts as a system file:
    /// `{"n": .., "A": [[..]], "b": [..], "s": ..}`.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PowerAffineSystem", 4)?;
        st.serialize_field("n", &self.dim())?;
        st.serialize_field("A", &self.a)?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("s", &self.s)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn pv(values: &[f64]) -> PositiveVector {
        PositiveVector::new(values.to_vec()).unwrap()
    }

    fn sys(rows: &[&[f64]], b: &[f64], s: f64) -> PowerAffineSystem {
        PowerAffineSystem::new(mat(rows), pv(b), s).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(PowerAffineSystem::new(mat(&[&[0.5]]), pv(&[1.0]), -1.0).is_ok());
        assert!(matches!(
            PowerAffineSystem::new(mat(&[&[1.0, 1.0], &[0.0, 1.0]]), pv(&[1.0, 1.0]), 1.0),
            Err(SystemError::Linalg(LinalgError::NotIrreducible))
        ));
        assert!(matches!(
            PowerAffineSystem::new(mat(&[&[0.5]]), pv(&[1.0]), 0.0),
            Err(SystemError::ZeroExponent)
        ));
        assert!(matches!(
            PowerAffineSystem::new(mat(&[&[0.5]]), pv(&[1.0]), f64::NAN),
            Err(SystemError::NonFiniteExponent { .. })
        ));
        assert!(matches!(
            PowerAffineSystem::new(mat(&[&[0.5]]), pv(&[1.0, 2.0]), 1.0),
            Err(SystemError::Linalg(LinalgError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn apply_x_scalar_value() {
        // (1 * 1²)^{1/2} + 1 = 2.
        let s = sys(&[&[1.0]], &[1.0], 2.0);
        let fx = s.apply_x(&pv(&[1.0])).unwrap();
        assert_eq!(fx.as_slice(), &[2.0]);
    }

    #[test]
    fn apply_y_is_affine_when_s_is_one() {
        let s = sys(&[&[0.0, 1.0], &[1.0, 0.0]], &[1.0, 2.0], 1.0);
        let gy = s.apply_y(&pv(&[3.0, 4.0])).unwrap();
        assert_eq!(gy.as_slice(), &[5.0, 5.0]);
        let fx = s.apply_x(&pv(&[3.0, 4.0])).unwrap();
        assert_eq!(fx.as_slice(), &[5.0, 5.0]);
    }

    #[test]
    fn conjugacy_holds_on_a_spot_check() {
        let s = sys(&[&[0.2, 0.7], &[0.5, 0.1]], &[1.0, 0.5], -1.5);
        let x = pv(&[0.8, 2.5]);
        let route_a = s.to_y(&s.apply_x(&x).unwrap()).unwrap();
        let route_b = s.apply_y(&s.to_y(&x).unwrap()).unwrap();
        let rel = route_a.sup_distance(&route_b) / route_b.sup_norm();
        assert!(rel <= 1e-13, "rel = {rel:e}");
    }

    #[test]
    fn round_trip_through_y_space() {
        let s = sys(&[&[0.3]], &[1.0], -2.0);
        let x = pv(&[1.7]);
        let back = s.to_x(&s.to_y(&x).unwrap()).unwrap();
        assert!(back.sup_distance(&x) <= 1e-15);
    }

    #[test]
    fn certify_scalar_cases() {
        // r = 0.5: solvable for s = 1 (0.5 < 1), unsolvable for s = -1 (2 >= 1).
        let feasible = sys(&[&[0.5]], &[1.0], 1.0);
        let c = feasible.certify().unwrap();
        assert_eq!(c.verdict, Verdict::UniqueSolution);
        assert!((c.criterion - 0.5f64.ln()).abs() <= 1e-12);
        assert!((c.margin - 2.0f64.ln()).abs() <= 1e-12);
        assert!(!c.boundary_warning);

        let infeasible = sys(&[&[0.5]], &[1.0], -1.0);
        let c = infeasible.certify().unwrap();
        assert_eq!(c.verdict, Verdict::NoSolution);
        assert!((c.r_pow_s - 2.0).abs() <= 1e-12);

        // r = 2 with s = -1 flips back to solvable: 2^{-1} < 1.
        let inverted = sys(&[&[2.0]], &[1.0], -1.0);
        assert_eq!(inverted.certify().unwrap().verdict, Verdict::UniqueSolution);
    }

    #[test]
    fn certify_flags_the_boundary() {
        let boundary = sys(&[&[1.0]], &[1.0], 2.0);
        let c = boundary.certify().unwrap();
        assert_eq!(c.verdict, Verdict::NoSolution);
        assert!(c.boundary_warning);
        assert!(c.margin <= 1e-9);

        // A stochastic matrix has r = 1 only up to eigen roundoff; the band
        // must still catch it.
        let rows: &[&[f64]] = &[&[0.3, 0.7], &[0.6, 0.4]];
        let stochastic = sys(rows, &[1.0, 1.0], 1.0);
        let c = stochastic.certify().unwrap();
        assert_eq!(c.verdict, Verdict::NoSolution);
        assert!(c.boundary_warning);
    }

    #[test]
    fn boundary_start_rules() {
        let up = sys(&[&[0.0, 0.5], &[0.5, 0.0]], &[1.0, 1.0], 2.0);
        let edge = NonnegVector::new(vec![0.0, 1.0]).unwrap();
        let lifted = up.apply_y_nonneg(&edge).unwrap();
        assert!(lifted.min() > 0.0);

        let down = sys(&[&[0.0, 0.5], &[0.5, 0.0]], &[1.0, 1.0], -2.0);
        assert!(matches!(
            down.apply_y_nonneg(&edge),
            Err(SystemError::Domain(DomainError::BoundaryStart))
        ));
    }

    #[test]
    fn dimension_mismatch_on_apply() {
        let s = sys(&[&[0.0, 0.5], &[0.5, 0.0]], &[1.0, 1.0], 1.0);
        assert!(matches!(
            s.apply_y(&pv(&[1.0])),
            Err(SystemError::Linalg(LinalgError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn residuals_vanish_at_a_known_fixed_point() {
        // Scalar, s = 1: x* = b / (1 - a) = 2 for a = 0.5, b = 1.
        let s = sys(&[&[0.5]], &[1.0], 1.0);
        assert!(s.residual_x(&pv(&[2.0])).unwrap() <= 1e-15);
        assert!(s.residual_y(&pv(&[2.0])).unwrap() <= 1e-15);
        assert!(s.residual_x(&pv(&[1.0])).unwrap() > 0.4);
    }

    #[test]
    fn serializes_like_a_system_file() {
        let s = sys(&[&[0.0, 0.5], &[0.25, 0.0]], &[1.0, 2.0], -1.0);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"A":[[0.0,0.5],[0.25,0.0]],"b":[1.0,2.0],"s":-1.0}"#
        );
    }
}
