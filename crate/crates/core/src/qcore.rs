//! q-arithmetic primitives: q-numbers and finite/infinite q-Pochhammer symbols.
//!
//! Everything downstream (ladder operators, Jacobi coefficients, weights,
//! transform entries) is assembled from the functions in this module, so the
//! truncation policy for infinite products is fixed here once: a product is
//! cut when the remaining factors are within `tail_eps` of 1 and at least
//! eight factors have been consumed, and the geometric tail bound is returned
//! alongside the value so callers can assert their own accuracy claims.
//!
//! Products whose arguments grow geometrically (they appear in the transform
//! matrix entries) are handled in (log-magnitude, phase) form by
//! [`q_pochhammer_inf_log`]; conversion back to a plain complex number happens
//! only at the final combination step.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Deformation parameter q > 1 together with the derived quantities
/// q̆ = 1/q and τ = ln q used all over the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParameters {
    q: f64,
    qbreve: f64,
    tau: f64,
}

impl QParameters {
    /// Construct parameters for the oscillator regime, rejecting q ≤ 1.
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 1.0 {
            return Err(Error::Domain(format!(
                "q must be a finite real > 1, got {q}"
            )));
        }
        Ok(Self::build(q))
    }

    /// Relaxed constructor admitting 0 < q < 1 in addition to q > 1.
    ///
    /// Only the self-adjointness verdict uses this range; the spectral and
    /// transform machinery requires `new`.
    pub fn relaxed(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 || q == 1.0 {
            return Err(Error::Domain(format!(
                "q must be a finite real in (0,1) or (1,inf), got {q}"
            )));
        }
        Ok(Self::build(q))
    }

    fn build(q: f64) -> Self {
        Self {
            q,
            qbreve: 1.0 / q,
            tau: q.ln(),
        }
    }

    /// The deformation parameter q.
    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// q̆ = q⁻¹.
    #[inline]
    pub fn qbreve(&self) -> f64 {
        self.qbreve
    }

    /// τ = ln q.
    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// True when q > 1 (the range every module except the verdict requires).
    #[inline]
    pub fn is_oscillator_range(&self) -> bool {
        self.q > 1.0
    }
}

/// Truncation control for infinite products and series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    rel_tol: f64,
    tail_eps: f64,
    max_terms: usize,
}

impl Tolerance {
    /// Build a tolerance, validating that all fields are positive and that
    /// at least eight terms may be consumed.
    pub fn new(rel_tol: f64, tail_eps: f64, max_terms: usize) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(rel_tol) || !positive(tail_eps) {
            return Err(Error::Domain(
                "rel_tol and tail_eps must be strictly positive".into(),
            ));
        }
        if max_terms < 8 {
            return Err(Error::Domain(format!(
                "max_terms must be at least 8, got {max_terms}"
            )));
        }
        Ok(Self {
            rel_tol,
            tail_eps,
            max_terms,
        })
    }

    /// Relative tolerance for cross-checks (default 1e-10).
    #[inline]
    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Truncation threshold for product/series tails (default 1e-16).
    #[inline]
    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    /// Hard cap on consumed terms (default 500).
    #[inline]
    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            tail_eps: 1e-16,
            max_terms: 500,
        }
    }
}

/// The q-number {n}_q = (qⁿ - 1)/(q - 1).
///
/// Strictly increasing in n with {0}_q = 0 and {1}_q = 1 for every q.
pub fn q_number(n: u32, params: QParameters) -> Result<f64> {
    let pow = params.q().powi(n as i32);
    if !pow.is_finite() {
        return Err(Error::Overflow(format!(
            "q^n with q = {}, n = {n} exceeds f64 range",
            params.q()
        )));
    }
    Ok((pow - 1.0) / (params.q() - 1.0))
}

/// Finite q-Pochhammer symbol (a; qb)_n = ∏_{s=0}^{n-1} (1 - a·qbˢ).
///
/// The empty product (n = 0) is 1. Total function: no argument can fail.
pub fn q_pochhammer(a: Complex64, qb: f64, n: u32) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qb_pow = 1.0;
    for _ in 0..n {
        prod *= Complex64::new(1.0, 0.0) - a * qb_pow;
        qb_pow *= qb;
    }
    prod
}

/// Value of a truncated infinite q-Pochhammer symbol together with its
/// certified relative tail bound and the number of consumed factors.
#[derive(Debug, Clone, Copy)]
pub struct InfiniteProduct {
    /// Truncated value of (a; qb)_∞.
    pub value: Complex64,
    /// Bound on the relative truncation error: Σ_{s≥S} |a| qbˢ / (1 - qb).
    pub tail_bound: f64,
    /// Number of factors consumed before the tail criterion was met.
    pub factors: usize,
}

/// Infinite q-Pochhammer symbol (a; qb)_∞ = ∏_{s=0}^∞ (1 - a·qbˢ), truncated
/// once |a|·qbˢ < tail_eps and at least eight factors have been consumed.
pub fn q_pochhammer_inf(a: Complex64, qb: f64, tol: &Tolerance) -> Result<InfiniteProduct> {
    check_qb(qb)?;
    let abs_a = a.norm();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qb_pow = 1.0_f64;
    let mut s = 0usize;
    loop {
        if s >= 8 && abs_a * qb_pow < tol.tail_eps() {
            let tail = abs_a * qb_pow / (1.0 - qb);
            return Ok(InfiniteProduct {
                value: prod,
                tail_bound: tail,
                factors: s,
            });
        }
        if s >= tol.max_terms() {
            return Err(Error::NonConvergence(format!(
                "(a;qb)_inf with |a| = {abs_a:.3e}, qb = {qb}: tail bound not met after {s} factors"
            )));
        }
        prod *= Complex64::new(1.0, 0.0) - a * qb_pow;
        if prod == Complex64::new(0.0, 0.0) {
            // A factor vanished exactly; the value is 0 with zero tail error.
            return Ok(InfiniteProduct {
                value: prod,
                tail_bound: 0.0,
                factors: s + 1,
            });
        }
        qb_pow *= qb;
        s += 1;
    }
}

/// A complex number stored as (log-magnitude, phase).
///
/// `log_abs = -inf` encodes zero; the phase is kept wrapped to (-π, π].
#[derive(Debug, Clone, Copy)]
pub struct LogComplex {
    /// ln |z|.
    pub log_abs: f64,
    /// arg z.
    pub arg: f64,
}

impl LogComplex {
    /// The multiplicative identity (log 1 = 0, phase 0).
    pub fn one() -> Self {
        Self {
            log_abs: 0.0,
            arg: 0.0,
        }
    }

    /// Wrap a plain complex number. Not meaningful for z = 0 beyond
    /// `log_abs = -inf`.
    pub fn from_complex(z: Complex64) -> Self {
        Self {
            log_abs: z.norm().ln(),
            arg: z.arg(),
        }
    }

    /// Build from polar data ln|z| and arg z.
    pub fn from_polar(log_abs: f64, arg: f64) -> Self {
        Self { log_abs, arg }
    }

    /// Multiply two log-form numbers (add logs and phases).
    pub fn times(self, other: Self) -> Self {
        Self {
            log_abs: self.log_abs + other.log_abs,
            arg: wrap_angle(self.arg + other.arg),
        }
    }

    /// Convert back to a plain complex number; overflows to ±inf components
    /// when `log_abs` exceeds the representable range.
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2π - eps; map the closed end consistently
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Log-form result of an infinite q-Pochhammer product.
#[derive(Debug, Clone, Copy)]
pub struct LogInfiniteProduct {
    /// (log-magnitude, phase) of the truncated product.
    pub log: LogComplex,
    /// Relative tail bound, as in [`InfiniteProduct`].
    pub tail_bound: f64,
    /// Number of consumed factors.
    pub factors: usize,
}

/// Infinite q-Pochhammer symbol for an argument given in log form.
///
/// Factors with |a·qbˢ| > 1 are accumulated as -z·(1 - 1/z) so that no
/// intermediate quantity leaves the f64 range even when |a| is of order
/// q^{|r|+|r'|}.
pub fn q_pochhammer_inf_log(a: LogComplex, qb: f64, tol: &Tolerance) -> Result<LogInfiniteProduct> {
    check_qb(qb)?;
    let ln_qb = qb.ln();
    let mut log_abs = 0.0_f64;
    let mut arg = 0.0_f64;
    let mut s = 0usize;
    loop {
        let z_log = a.log_abs + s as f64 * ln_qb;
        if s >= 8 && z_log < tol.tail_eps().ln() {
            let tail = z_log.exp() / (1.0 - qb);
            return Ok(LogInfiniteProduct {
                log: LogComplex::from_polar(log_abs, arg),
                tail_bound: tail,
                factors: s,
            });
        }
        if s >= tol.max_terms() {
            return Err(Error::NonConvergence(format!(
                "log-form (a;qb)_inf with ln|a| = {:.3}, qb = {qb}: tail bound not met after {s} factors",
                a.log_abs
            )));
        }
        if z_log <= 0.0 {
            // |z| <= 1: the factor 1 - z is safe to form directly.
            let z = Complex64::from_polar(z_log.exp(), a.arg);
            let f = Complex64::new(1.0, 0.0) - z;
            log_abs += f.norm().ln();
            arg = wrap_angle(arg + f.arg());
        } else {
            // |z| > 1: write 1 - z = -z (1 - 1/z); 1/z is small and safe.
            let inv = Complex64::from_polar((-z_log).exp(), -a.arg);
            let g = Complex64::new(1.0, 0.0) - inv;
            log_abs += z_log + g.norm().ln();
            arg = wrap_angle(arg + a.arg + std::f64::consts::PI + g.arg());
        }
        if log_abs == f64::NEG_INFINITY {
            return Ok(LogInfiniteProduct {
                log: LogComplex::from_polar(log_abs, 0.0),
                tail_bound: 0.0,
                factors: s + 1,
            });
        }
        s += 1;
    }
}

fn check_qb(qb: f64) -> Result<()> {
    if !(qb > 0.0 && qb < 1.0) {
        return Err(Error::Domain(format!(
            "infinite q-Pochhammer base must satisfy 0 < qb < 1, got {qb}"
        )));
    }
    Ok(())
}
