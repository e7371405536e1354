//! Numerical tolerances used by invariant checks and acceptance tests.
//!
//! Each constant documents why its magnitude is appropriate; tests fail
//! loudly rather than silently widening a bound.

/// Algebraic identities evaluated in closed form (brackets, Jacobi,
/// Killing values). Pure floating arithmetic on O(1) entries, so only
/// a few ulps of cancellation are possible.
pub const ALG_IDENTITY: f64 = 1e-12;

/// Anti-Hermiticity and trace residuals of algebra elements.
pub const ALGEBRA_ELEMENT: f64 = 1e-12;

/// Spatial mean magnitude above which a field is rejected as input to
/// the periodic antiderivative. Brackets of the form [q, v] that feed
/// the nonlocal operators are mean-free analytically; discretization
/// leaves O(1e-14) residue on smooth data, so 1e-8 flags genuine misuse
/// without tripping on roundoff.
pub const MEAN_FREE: f64 = 1e-8;

/// Operator identities that route through one spectral derivative or
/// antiderivative (factored recursion forms, structure equations).
pub const OPERATOR_IDENTITY: f64 = 1e-10;

/// Residual of the frame transport equation after fourth-order
/// integration in x with spectral midpoint resampling.
pub const FRAME_RESIDUAL: f64 = 1e-8;

/// Unitarity deviation at which frame integration aborts instead of
/// silently re-projecting a badly drifted factor.
pub const UNITARITY_LIMIT: f64 = 1e-6;

/// Pointwise eigenvalue drift of adjoint-orbit fields (spin and map
/// states) over production runs.
pub const SPECTRUM_DRIFT: f64 = 1e-6;

/// Unit-norm deviation tolerated for direction vectors in map
/// coordinates.
pub const UNIT_DIRECTION: f64 = 1e-10;

/// Cross-representation discrepancies in gauge-invariant diagnostics
/// (curvature, Hamiltonians, spectra) after independent evolutions.
pub const EQUIVALENCE: f64 = 1e-5;

/// Zero-curvature residual for the Lax pair sampled at moderate dt.
pub const LAX_RESIDUAL: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_positive_and_ordered() {
        for t in [
            ALG_IDENTITY,
            ALGEBRA_ELEMENT,
            MEAN_FREE,
            OPERATOR_IDENTITY,
            FRAME_RESIDUAL,
            UNITARITY_LIMIT,
            SPECTRUM_DRIFT,
            UNIT_DIRECTION,
            EQUIVALENCE,
            LAX_RESIDUAL,
        ] {
            assert!(t > 0.0 && t < 1.0);
        }
        // closed-form identities must be held tighter than anything
        // routed through discretized operators
        assert!(ALG_IDENTITY < OPERATOR_IDENTITY);
        assert!(OPERATOR_IDENTITY < FRAME_RESIDUAL);
        assert!(FRAME_RESIDUAL < EQUIVALENCE);
    }
}
