//! Self-adjoint extensions of the position and momentum operators: extremal
//! measures, spectral points and weights, eigenfunction evaluation, the
//! isometries onto weighted ℓ² grids, and moment computations.
//!
//! An extension is labeled by b ∈ [q̆, 1). Its spectrum is the discrete set
//! x_b(r) = (q^r b⁻¹ - b q^{-r})/(q-1)^{1/2} = 2 sinh(τr - σ)/(q-1)^{1/2}
//! with σ = ln b, r ∈ ℤ, and the mass at x_b(r) is
//!   m_r = b^{4r} q̆^{r(2r-1)} (1 + b² q̆^{2r}) /
//!         ((-b²;q̆)_∞ (-q̆/b²;q̆)_∞ (q̆;q̆)_∞).
//! The log of m_r is assembled term by term and exponentiated last, since
//! q̆^{2r²} underflows long before the window caps out; underflow to zero is
//! allowed and flagged.
//!
//! The same point and weight formulas serve both kinds of extension; only the
//! coefficient family differs (P_n on the position side, P̃_n = iⁿ·real on
//! the momentum side). Weights decay like q̆^{2r²}, so modest symmetric
//! windows carry all the mass; window selection auto-widens until the
//! boundary weight, and for moment/orthogonality sums the boundary term,
//! drops below `tail_eps`, with a hard cap at radius 200.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::par::map_indexed;
use crate::qcore::{q_pochhammer_inf, QParameters, Tolerance};
use crate::qhermite::{
    h_poly_rec, half_plane, orthonormal_magnitudes, x_prime, CoefficientFamily, OperatorKind,
};

/// Hard cap on the auto-widened window radius.
pub const MAX_WINDOW_RADIUS: i64 = 200;

/// A finite window r_min..=r_max over the spectral index r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralWindow {
    r_min: i64,
    r_max: i64,
}

impl SpectralWindow {
    /// Build a window, rejecting r_min > r_max.
    pub fn new(r_min: i64, r_max: i64) -> Result<Self> {
        if r_min > r_max {
            return Err(Error::Domain(format!(
                "window requires r_min <= r_max, got [{r_min}, {r_max}]"
            )));
        }
        Ok(Self { r_min, r_max })
    }

    /// The symmetric window [-radius, radius].
    pub fn symmetric(radius: i64) -> Self {
        Self {
            r_min: -radius.abs(),
            r_max: radius.abs(),
        }
    }

    /// Lower index.
    pub fn r_min(&self) -> i64 {
        self.r_min
    }

    /// Upper index.
    pub fn r_max(&self) -> i64 {
        self.r_max
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        (self.r_max - self.r_min + 1) as usize
    }

    /// Windows are never empty.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether r lies inside the window.
    pub fn contains(&self, r: i64) -> bool {
        r >= self.r_min && r <= self.r_max
    }

    /// Position of r within the window.
    pub fn index_of(&self, r: i64) -> Option<usize> {
        self.contains(r).then(|| (r - self.r_min) as usize)
    }

    /// Iterate the grid indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.r_min..=self.r_max
    }
}

/// ln(1 + e^t) without overflow for large |t|.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// A self-adjoint extension label: deformation parameters, b ∈ [q̆, 1), and
/// the observable it extends. Yields spectral points and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalMeasure {
    params: QParameters,
    b: f64,
    sigma: f64,
    kind: OperatorKind,
    /// ln of the r-independent weight denominator
    /// (-b²;q̆)_∞ (-q̆/b²;q̆)_∞ (q̆;q̆)_∞.
    log_norm_denom: f64,
}

impl ExtremalMeasure {
    /// Construct the extension labeled by `b`.
    ///
    /// Requires q > 1 and q̆ ≤ b < 1; the closed end b = q̆ is allowed and
    /// values a few ulps below q̆ (as produced by exp(-τ)) are snapped to it.
    pub fn new(params: QParameters, b: f64, kind: OperatorKind, tol: &Tolerance) -> Result<Self> {
        if !params.is_oscillator_range() {
            return Err(Error::Domain(
                "extremal measures exist only for q > 1".into(),
            ));
        }
        let qb = params.qbreve();
        let b = if b < qb && b > qb * (1.0 - 1e-12) {
            qb
        } else {
            b
        };
        if !(b >= qb && b < 1.0) {
            return Err(Error::Domain(format!(
                "extension label must satisfy {qb} <= b < 1, got {b}"
            )));
        }
        let real = |x: f64| Complex64::new(x, 0.0);
        let d1 = q_pochhammer_inf(real(-b * b), qb, tol)?.value.re;
        let d2 = q_pochhammer_inf(real(-qb / (b * b)), qb, tol)?.value.re;
        let d3 = q_pochhammer_inf(real(qb), qb, tol)?.value.re;
        Ok(Self {
            params,
            b,
            sigma: b.ln(),
            kind,
            log_norm_denom: d1.ln() + d2.ln() + d3.ln(),
        })
    }

    /// Deformation parameters.
    pub fn params(&self) -> QParameters {
        self.params
    }

    /// Extension label b.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// σ = ln b ∈ [-τ, 0).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Which observable this extension belongs to.
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Spectral point x_b(r) = 2 sinh(τr - σ)/(q-1)^{1/2}, strictly
    /// increasing in r.
    pub fn spectrum_point(&self, r: i64) -> f64 {
        2.0 * (self.params.tau() * r as f64 - self.sigma).sinh() / (self.params.q() - 1.0).sqrt()
    }

    /// The h-argument scale of the point: sinh(τr - σ) = ½(q-1)^{1/2} x_b(r).
    pub fn scaled_point(&self, r: i64) -> f64 {
        (self.params.tau() * r as f64 - self.sigma).sinh()
    }

    /// ln m_r, finite for every r even where m_r itself underflows.
    pub fn log_weight(&self, r: i64) -> f64 {
        let rf = r as f64;
        let ln_b = self.sigma;
        let ln_qb = -self.params.tau();
        4.0 * rf * ln_b + rf * (2.0 * rf - 1.0) * ln_qb + softplus(2.0 * ln_b + 2.0 * rf * ln_qb)
            - self.log_norm_denom
    }

    /// Weight m_r > 0 of the measure at x_b(r).
    pub fn weight(&self, r: i64) -> f64 {
        self.log_weight(r).exp()
    }

    /// Weight together with an underflow flag for |r| so large that m_r is
    /// below the smallest positive f64.
    pub fn weight_flagged(&self, r: i64) -> (f64, bool) {
        let lw = self.log_weight(r);
        (lw.exp(), lw < -745.0)
    }

    /// Smallest symmetric window whose boundary weights fall below tail_eps.
    pub fn auto_window(&self, tol: &Tolerance) -> Result<SpectralWindow> {
        self.auto_window_where(tol, |_| f64::NEG_INFINITY)
    }

    /// Smallest symmetric window with boundary weights below tail_eps and
    /// the additional per-boundary log-term below ln(tail_eps).
    fn auto_window_where(
        &self,
        tol: &Tolerance,
        extra_log_term: impl Fn(i64) -> f64,
    ) -> Result<SpectralWindow> {
        let log_eps = tol.tail_eps().ln();
        for radius in 1..=MAX_WINDOW_RADIUS {
            let ok = [-radius, radius].iter().all(|&r| {
                self.log_weight(r) < log_eps && extra_log_term(r) < log_eps
            });
            if ok {
                return Ok(SpectralWindow::symmetric(radius));
            }
        }
        Err(Error::WindowTooSmall(format!(
            "no window up to radius {MAX_WINDOW_RADIUS} meets tail_eps = {:e}",
            tol.tail_eps()
        )))
    }

    /// Auto-window for orthogonality sums through degree `n_max`: the
    /// boundary term max_n m_r P_n(x_r)² must also fall below tail_eps.
    pub fn auto_window_for_orthogonality(
        &self,
        n_max: usize,
        tol: &Tolerance,
    ) -> Result<SpectralWindow> {
        self.auto_window_where(tol, |r| {
            let mags = orthonormal_magnitudes(n_max, self.spectrum_point(r), self.params);
            let max_log = mags
                .iter()
                .map(|m| m.abs().ln())
                .fold(f64::NEG_INFINITY, f64::max);
            self.log_weight(r) + 2.0 * max_log
        })
    }

    /// Auto-window for the n-th moment: boundary term m_r |x_r|ⁿ must fall
    /// below tail_eps.
    pub fn auto_window_for_moment(&self, degree: u32, tol: &Tolerance) -> Result<SpectralWindow> {
        self.auto_window_where(tol, |r| {
            self.log_weight(r) + degree as f64 * self.spectrum_point(r).abs().ln()
        })
    }

    /// Coefficient family (P_n(x_b(r)))_{n≤N} or (P̃_n(p_b(r)))_{n≤N} at the
    /// r-th spectral point.
    pub fn eigenvector_coefficients(&self, r: i64, n_max: usize) -> CoefficientFamily {
        CoefficientFamily::evaluate(self.kind, self.params, self.spectrum_point(r), n_max)
    }

    /// The normalized family m_r^{1/2} · (coefficients), whose weighted norm
    /// tends to 1 as N grows.
    pub fn normalized_eigenvector_coefficients(&self, r: i64, n_max: usize) -> CoefficientFamily {
        self.eigenvector_coefficients(r, n_max)
            .scaled_by((0.5 * self.log_weight(r)).exp())
    }

    /// Mass identity m_r Σ_{n≤N} P_n(x_b(r))² → 1: the Eq.-level weight
    /// against the completeness mass formula, two independent routes to the
    /// same number.
    pub fn mass_identity(&self, r: i64, n_max: usize) -> MassIdentity {
        assert!(n_max >= 1, "the mass identity needs N >= 1");
        let sqrt_w = (0.5 * self.log_weight(r)).exp();
        let mags = orthonormal_magnitudes(n_max, self.spectrum_point(r), self.params);
        let mut partial = Vec::with_capacity(n_max + 1);
        let mut acc = 0.0;
        for m in &mags {
            let u = sqrt_w * m;
            acc += u * u;
            partial.push(acc);
        }
        let total = acc;
        let tail_start = 3 * n_max / 4;
        let tail_fraction = if total > 0.0 {
            (total - partial[tail_start]) / total
        } else {
            0.0
        };
        MassIdentity {
            value: total,
            tail_fraction,
            slow_convergence: tail_fraction > 0.5,
        }
    }

    /// Max deviation of Σ_r m_r P_n P_{n'} from δ_{nn'} over n, n' ≤ n_max.
    ///
    /// Errors when the boundary weights of the window exceed tail_eps.
    pub fn verify_orthogonality(
        &self,
        n_max: usize,
        window: &SpectralWindow,
        tol: &Tolerance,
    ) -> Result<OrthogonalityReport> {
        self.check_boundary_weights(window, tol)?;
        let rs: Vec<i64> = window.iter().collect();
        // weighted coefficient vectors, one recurrence pass per grid point
        let vecs: Vec<Vec<Complex64>> = map_indexed(rs.len(), |i| {
            let r = rs[i];
            let fam = self.eigenvector_coefficients(r, n_max);
            let sqrt_w = (0.5 * self.log_weight(r)).exp();
            (0..=n_max).map(|n| fam.value(n) * sqrt_w).collect()
        });
        let dim = n_max + 1;
        let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
        for v in &vecs {
            for n in 0..dim {
                for np in n..dim {
                    gram[n * dim + np] += v[n] * v[np].conj();
                }
            }
        }
        let mut worst = (0usize, 0usize);
        let mut max_dev = 0.0_f64;
        for n in 0..dim {
            for np in n..dim {
                let target = if n == np { 1.0 } else { 0.0 };
                let dev = (gram[n * dim + np] - target).norm();
                if dev > max_dev {
                    max_dev = dev;
                    worst = (n, np);
                }
            }
        }
        Ok(OrthogonalityReport {
            max_deviation: max_dev,
            worst_pair: worst,
        })
    }

    /// Dual orthogonality (m_r m_{r'})^{1/2} Σ_{n≤N} v_n(r) conj(v_n(r')),
    /// which tends to δ_{rr'}; for the real position family the conjugation
    /// is invisible.
    pub fn dual_orthogonality(&self, r: i64, r_prime: i64, n_max: usize) -> Complex64 {
        let fam_r = self.eigenvector_coefficients(r, n_max);
        let fam_rp = self.eigenvector_coefficients(r_prime, n_max);
        let scale = (0.5 * (self.log_weight(r) + self.log_weight(r_prime))).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..=n_max {
            acc += fam_r.value(n) * fam_rp.value(n).conj();
        }
        acc * scale
    }

    /// Moment c_n = Σ_r m_r x_b(r)ⁿ over the window.
    ///
    /// Errors when the boundary terms m_r |x_r|ⁿ exceed tail_eps.
    pub fn compute_moment(&self, n: u32, window: &SpectralWindow, tol: &Tolerance) -> Result<f64> {
        let log_eps = tol.tail_eps().ln();
        for r in [window.r_min(), window.r_max()] {
            let term = self.log_weight(r) + n as f64 * self.spectrum_point(r).abs().ln();
            if term >= log_eps {
                return Err(Error::WindowTooSmall(format!(
                    "boundary term m_r |x_r|^{n} at r = {r} is e^{term:.2}, above tail_eps"
                )));
            }
        }
        Ok(window
            .iter()
            .map(|r| self.weight(r) * self.spectrum_point(r).powi(n as i32))
            .sum())
    }

    fn check_boundary_weights(&self, window: &SpectralWindow, tol: &Tolerance) -> Result<()> {
        let log_eps = tol.tail_eps().ln();
        for r in [window.r_min(), window.r_max()] {
            if self.log_weight(r) >= log_eps {
                return Err(Error::WindowTooSmall(format!(
                    "boundary weight m_{r} = e^{:.2} exceeds tail_eps = {:e}",
                    self.log_weight(r),
                    tol.tail_eps()
                )));
            }
        }
        Ok(())
    }
}

/// Result of [`ExtremalMeasure::mass_identity`].
#[derive(Debug, Clone, Copy)]
pub struct MassIdentity {
    /// m_r Σ_{n≤N} P_n(x_b(r))², which converges to 1 from below.
    pub value: f64,
    /// Fraction of the sum contributed by the last quarter of the degrees.
    pub tail_fraction: f64,
    /// Set when the tail fraction exceeds one half.
    pub slow_convergence: bool,
}

/// Result of [`ExtremalMeasure::verify_orthogonality`].
#[derive(Debug, Clone, Copy)]
pub struct OrthogonalityReport {
    /// max |Σ_r m_r P_n P_{n'} - δ_{nn'}|.
    pub max_deviation: f64,
    /// The (n, n') attaining it.
    pub worst_pair: (usize, usize),
}

/// A function on the spectral grid of one extremal measure.
#[derive(Debug, Clone)]
pub struct GridFunction {
    measure: ExtremalMeasure,
    window: SpectralWindow,
    values: Vec<Complex64>,
}

impl GridFunction {
    /// Wrap raw values; `values[i]` sits at r = window.r_min() + i.
    pub fn new(
        measure: ExtremalMeasure,
        window: SpectralWindow,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::WindowMismatch(format!(
                "{} values for a window of {} points",
                values.len(),
                window.len()
            )));
        }
        Ok(Self {
            measure,
            window,
            values,
        })
    }

    /// Build by evaluating `f` at every grid index.
    pub fn from_fn(
        measure: ExtremalMeasure,
        window: SpectralWindow,
        f: impl FnMut(i64) -> Complex64,
    ) -> Self {
        let values = window.iter().map(f).collect();
        Self {
            measure,
            window,
            values,
        }
    }

    /// The zero function.
    pub fn zero(measure: ExtremalMeasure, window: SpectralWindow) -> Self {
        Self::from_fn(measure, window, |_| Complex64::new(0.0, 0.0))
    }

    /// The measure the grid belongs to.
    pub fn measure(&self) -> &ExtremalMeasure {
        &self.measure
    }

    /// The index window.
    pub fn window(&self) -> SpectralWindow {
        self.window
    }

    /// Raw values in window order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at grid index r (zero outside the window).
    pub fn value_at(&self, r: i64) -> Complex64 {
        match self.window.index_of(r) {
            Some(i) => self.values[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Weighted norm (Σ_r m_r |F(r)|²)^{1/2}.
    ///
    /// Each term is assembled in log space: far out on a grid the value can
    /// be huge against a weight that underflows, and the plain product would
    /// turn the finite weighted contribution into 0·inf.
    pub fn weighted_norm(&self) -> f64 {
        self.window
            .iter()
            .zip(self.values.iter())
            .map(|(r, v)| {
                let a = v.norm();
                if a == 0.0 {
                    0.0
                } else {
                    (self.measure.log_weight(r) + 2.0 * a.ln()).exp()
                }
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Restriction to a sub-window.
    pub fn restrict(&self, window: &SpectralWindow) -> Result<Self> {
        if !self.window.contains(window.r_min()) || !self.window.contains(window.r_max()) {
            return Err(Error::WindowMismatch(format!(
                "cannot restrict window [{}, {}] to [{}, {}]",
                self.window.r_min(),
                self.window.r_max(),
                window.r_min(),
                window.r_max()
            )));
        }
        let values = window.iter().map(|r| self.value_at(r)).collect();
        Ok(Self {
            measure: self.measure.clone(),
            window: *window,
            values,
        })
    }
}

/// Locate the unique extension containing x0 in its spectrum.
///
/// With θ = asinh(½(q-1)^{1/2} x0), r is the unique integer putting
/// σ = τr - θ into [-τ, 0); returns (b, r) with b = e^σ, so that
/// spectrum_point(r) round-trips to x0.
pub fn locate_extension(x0: f64, params: QParameters, _kind: OperatorKind) -> (f64, i64) {
    let theta = (0.5 * (params.q() - 1.0).sqrt() * x0).asinh();
    let tau = params.tau();
    let mut r = (theta / tau).ceil() as i64 - 1;
    let mut sigma = tau * r as f64 - theta;
    // float jitter at the cell boundary can push sigma out of [-tau, 0), and
    // a sigma within one ulp of 0 makes exp(sigma) round to the excluded
    // label 1; both cases step r so the point lands in the adjacent cell
    if sigma >= 0.0 || sigma.exp() >= 1.0 {
        r -= 1;
        sigma = tau * r as f64 - theta;
    } else if sigma < -tau {
        r += 1;
        sigma = tau * r as f64 - theta;
    }
    (sigma.exp().min(1.0 - f64::EPSILON), r)
}

/// Isometry Ω (or Ω' for a momentum measure): F(r) = Σ_n c_n · fam_n(r),
/// mapping a truncated Fock vector to a grid function of equal weighted norm.
///
/// Errors when the window's boundary weights exceed tail_eps.
pub fn isometry_omega(
    v: &FockVector,
    measure: &ExtremalMeasure,
    window: &SpectralWindow,
    tol: &Tolerance,
) -> Result<GridFunction> {
    measure.check_boundary_weights(window, tol)?;
    let n_max = v.truncation();
    let coeffs = v.coefficients().to_vec();
    let rs: Vec<i64> = window.iter().collect();
    let values = map_indexed(rs.len(), |i| {
        let fam = measure.eigenvector_coefficients(rs[i], n_max);
        coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * fam.value(n))
            .sum()
    });
    GridFunction::new(measure.clone(), *window, values)
}

/// Value of a truncated infinite product together with its tail bound.
#[derive(Debug, Clone, Copy)]
pub struct EigenfunctionValue {
    /// Truncated product value.
    pub value: f64,
    /// Sum of the relative tail bounds of the two underlying products.
    pub tail_bound: f64,
}

/// Complex analogue of [`EigenfunctionValue`] for the momentum side.
#[derive(Debug, Clone, Copy)]
pub struct ComplexEigenfunctionValue {
    /// Truncated product value.
    pub value: Complex64,
    /// Sum of the relative tail bounds of the two underlying products.
    pub tail_bound: f64,
}

/// Position eigenfunction φ_x(y) = ∏_{n≥0} (1 + 2yx'q̆^{n+1} - y²q̆^{2n+2}),
/// evaluated through its factorization into two infinite q-Pochhammer
/// products with arguments ∓yq̆(√(1+x'²) ± x').
pub fn eigenfunction_product(
    x: f64,
    y: f64,
    params: QParameters,
    tol: &Tolerance,
) -> Result<EigenfunctionValue> {
    let xp = x_prime(x, params);
    let qb = params.qbreve();
    let plus = half_plane(xp); // sqrt(1 + x'^2) + x'
    let minus = half_plane(-xp); // sqrt(1 + x'^2) - x'
    let f1 = q_pochhammer_inf(Complex64::new(-y * qb * plus, 0.0), qb, tol)?;
    let f2 = q_pochhammer_inf(Complex64::new(y * qb * minus, 0.0), qb, tol)?;
    Ok(EigenfunctionValue {
        value: (f1.value * f2.value).re,
        tail_bound: f1.tail_bound + f2.tail_bound,
    })
}

/// Partial sum of the eigenfunction series
/// φ_x(y) = Σ_n yⁿ q̆^{n(n+1)/2}/(q̆;q̆)_n · h_n(x'|q̆) through n = N.
pub fn eigenfunction_series(x: f64, y: f64, params: QParameters, n_max: usize) -> f64 {
    let xp = x_prime(x, params);
    let qb = params.qbreve();
    let mut factor = 1.0_f64; // y^n q̆^{n(n+1)/2} / (q̆;q̆)_n
    let mut sum = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            let qb_n = qb.powi(n as i32);
            factor *= y * qb_n / (1.0 - qb_n);
        }
        sum += factor * h_poly_rec(n as u32, xp, params);
    }
    sum
}

/// Momentum eigenfunction ξ_p(y) = ∏_{n≥0} (1 - 2iyp'q̆^{n+1} + y²q̆^{2n+2}),
/// via its factorization (iyq̆(√(1+p'²)+p'); q̆)_∞ (-iyq̆(√(1+p'²)-p'); q̆)_∞.
pub fn momentum_eigenfunction_product(
    p: f64,
    y: f64,
    params: QParameters,
    tol: &Tolerance,
) -> Result<ComplexEigenfunctionValue> {
    let pp = x_prime(p, params);
    let qb = params.qbreve();
    let plus = half_plane(pp);
    let minus = half_plane(-pp);
    let f1 = q_pochhammer_inf(Complex64::new(0.0, y * qb * plus), qb, tol)?;
    let f2 = q_pochhammer_inf(Complex64::new(0.0, -y * qb * minus), qb, tol)?;
    Ok(ComplexEigenfunctionValue {
        value: f1.value * f2.value,
        tail_bound: f1.tail_bound + f2.tail_bound,
    })
}

/// Partial sum of ξ_p(y) = Σ_n (-iy)ⁿ q̆^{n(n+1)/2}/(q̆;q̆)_n · h_n(p'|q̆).
pub fn momentum_eigenfunction_series(
    p: f64,
    y: f64,
    params: QParameters,
    n_max: usize,
) -> Complex64 {
    let pp = x_prime(p, params);
    let qb = params.qbreve();
    let step = Complex64::new(0.0, -y);
    let mut factor = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=n_max {
        if n > 0 {
            let qb_n = qb.powi(n as i32);
            factor *= step * qb_n / (1.0 - qb_n);
        }
        sum += factor * h_poly_rec(n as u32, pp, params);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_position, FockVector};
    use crate::qcore::q_pochhammer_inf;
    use proptest::prelude::*;

    fn params2() -> QParameters {
        QParameters::new(2.0).unwrap()
    }

    fn measure(b: f64) -> ExtremalMeasure {
        ExtremalMeasure::new(params2(), b, OperatorKind::Position, &Tolerance::default()).unwrap()
    }

    #[test]
    fn window_basics() {
        assert!(SpectralWindow::new(3, 2).is_err());
        let w = SpectralWindow::new(-2, 4).unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w.index_of(-2), Some(0));
        assert_eq!(w.index_of(4), Some(6));
        assert_eq!(w.index_of(5), None);
        let s = SpectralWindow::symmetric(3);
        assert_eq!((s.r_min(), s.r_max()), (-3, 3));
    }

    #[test]
    fn measure_label_validation() {
        let tol = Tolerance::default();
        let p = params2();
        assert!(ExtremalMeasure::new(p, 0.49, OperatorKind::Position, &tol).is_err());
        assert!(ExtremalMeasure::new(p, 1.0, OperatorKind::Position, &tol).is_err());
        // b = q̆ exactly is the closed end of the interval
        let m = ExtremalMeasure::new(p, 0.5, OperatorKind::Position, &tol).unwrap();
        assert_eq!(m.b(), 0.5);
        assert!((m.sigma() + p.tau()).abs() < 1e-15);
        // a value one ulp below q̆ snaps to it
        let just_below = 0.5 * (1.0 - 1e-14);
        let m = ExtremalMeasure::new(p, just_below, OperatorKind::Position, &tol).unwrap();
        assert_eq!(m.b(), 0.5);
        // q <= 1 rejected
        let relaxed = QParameters::relaxed(0.5).unwrap();
        assert!(ExtremalMeasure::new(relaxed, 0.6, OperatorKind::Position, &tol).is_err());
    }

    #[test]
    fn spectrum_point_examples() {
        // b = q̆, r = -1 lands exactly on zero for any q
        for q in [1.5, 2.0, 4.0] {
            let p = QParameters::new(q).unwrap();
            let m =
                ExtremalMeasure::new(p, p.qbreve(), OperatorKind::Position, &Tolerance::default())
                    .unwrap();
            assert!(m.spectrum_point(-1).abs() < 1e-14, "q = {q}");
        }
        let m = measure(0.5);
        assert!((m.spectrum_point(0) - 1.5).abs() < 1e-14);
        assert!((m.spectrum_point(1) - 3.75).abs() < 1e-14);
    }

    #[test]
    fn spectrum_point_forms_agree() {
        // sinh form vs both printed power forms, to 1e-14 relative
        for &b in &[0.5, 0.7, 0.93] {
            let m = measure(b);
            let q = m.params().q();
            let qb = m.params().qbreve();
            for r in -12..=12i64 {
                let sinh_form = m.spectrum_point(r);
                let eq16 = (qb.powi(-r as i32) / b - b * qb.powi(r as i32)) / (q - 1.0).sqrt();
                let eq18 = (q.powi(r as i32) / b - b * q.powi(-r as i32)) / (q - 1.0).sqrt();
                let scale = sinh_form.abs().max(1.0);
                assert!((sinh_form - eq16).abs() <= 1e-14 * scale);
                assert!((sinh_form - eq18).abs() <= 1e-14 * scale);
            }
        }
    }

    #[test]
    fn weights_positive_and_ratio_identity() {
        let m = measure(0.5);
        let qb = 0.5_f64;
        let b = 0.5_f64;
        for r in -10..=10i64 {
            let w = m.weight(r);
            assert!(w > 0.0);
            // m_{r+1}/m_r = b^4 q̆^{4r+1} (1 + b² q̆^{2r+2})/(1 + b² q̆^{2r})
            let ratio = m.weight(r + 1) / w;
            let rf = r as f64;
            let expected = b.powi(4)
                * qb.powf(4.0 * rf + 1.0)
                * (1.0 + b * b * qb.powf(2.0 * rf + 2.0))
                / (1.0 + b * b * qb.powf(2.0 * rf));
            assert!(
                (ratio - expected).abs() <= 1e-12 * expected,
                "r = {r}: {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let w = SpectralWindow::symmetric(25);
        for &b in &[0.5, 0.7, 0.9] {
            let m = measure(b);
            let total: f64 = w.iter().map(|r| m.weight(r)).sum();
            assert!((total - 1.0).abs() < 1e-10, "b = {b}: total = {total}");
        }
    }

    #[test]
    fn weight_underflow_is_flagged() {
        let m = measure(0.5);
        let (w, flagged) = m.weight_flagged(40);
        assert_eq!(w, 0.0);
        assert!(flagged);
        let (w, flagged) = m.weight_flagged(0);
        assert!(w > 0.0);
        assert!(!flagged);
    }

    #[test]
    fn locate_extension_examples() {
        let p = params2();
        let (b, r) = locate_extension(0.0, p, OperatorKind::Position);
        assert!((b - 0.5).abs() < 1e-12);
        assert_eq!(r, -1);

        // asinh(0.75) = ln 2, so sigma = -ln 2
        let (b, r) = locate_extension(1.5, p, OperatorKind::Position);
        assert!((b - 0.5).abs() < 1e-12);
        assert_eq!(r, 0);

        // inverse-map oracle
        let m = measure(0.7);
        let x0 = m.spectrum_point(3);
        let (b, r) = locate_extension(x0, p, OperatorKind::Position);
        assert!((b - 0.7).abs() < 1e-12);
        assert_eq!(r, 3);
    }

    #[test]
    fn eigenvector_coefficients_basics() {
        let m = measure(0.5);
        let fam = m.eigenvector_coefficients(0, 10);
        assert_eq!(fam.value(0), Complex64::new(1.0, 0.0));
        // momentum family entries are i^n times a real number
        let tol = Tolerance::default();
        let mm =
            ExtremalMeasure::new(params2(), 0.5, OperatorKind::Momentum, &tol).unwrap();
        let fam = mm.eigenvector_coefficients(2, 9);
        for n in 0..=9usize {
            let rotated = fam.value(n) * crate::qhermite::i_power(n).conj();
            assert!(rotated.im.abs() < 1e-13);
        }
    }

    #[test]
    fn normalized_family_norm_grows_to_one() {
        let m = measure(0.5);
        let short = m.normalized_eigenvector_coefficients(0, 12);
        let long = m.normalized_eigenvector_coefficients(0, 60);
        let norm2 = |f: &CoefficientFamily| -> f64 {
            (0..f.len()).map(|n| f.value(n).norm_sqr()).sum()
        };
        let a = norm2(&short);
        let b = norm2(&long);
        assert!(a <= 1.0 + 1e-12);
        assert!(b <= 1.0 + 1e-12);
        assert!(b > a);
        assert!((b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mass_identity_examples() {
        let m = measure(0.5);
        for r in [-1i64, 0] {
            let mi = m.mass_identity(r, 80);
            assert!((mi.value - 1.0).abs() < 1e-6, "r = {r}: {}", mi.value);
            assert!(!mi.slow_convergence);
        }
        // monotone in N
        let mut prev = 0.0;
        for n in [5usize, 20, 40, 80] {
            let v = m.mass_identity(0, n).value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn orthogonality_report() {
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(30);
        let rep = m.verify_orthogonality(15, &w, &Tolerance::default()).unwrap();
        assert!(rep.max_deviation < 1e-8, "dev = {:e}", rep.max_deviation);

        // row n = n' = 0 is the mass normalization
        let rep0 = m.verify_orthogonality(0, &w, &Tolerance::default()).unwrap();
        assert!(rep0.max_deviation < 1e-10);

        // window too small is refused
        let tiny = SpectralWindow::symmetric(2);
        assert!(matches!(
            m.verify_orthogonality(5, &tiny, &Tolerance::default()),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn orthogonality_odd_even_row() {
        // Σ_r m_r P_1 P_2 vanishes regardless of the global sign convention
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(30);
        let mut acc = 0.0;
        for r in w.iter() {
            let fam = m.eigenvector_coefficients(r, 2);
            acc += m.weight(r) * fam.value(1).re * fam.value(2).re;
        }
        assert!(acc.abs() < 1e-10);
    }

    #[test]
    fn dual_orthogonality_examples() {
        let m = measure(0.5);
        // r = r' coincides with the mass identity
        let diag = m.dual_orthogonality(0, 0, 80);
        let mi = m.mass_identity(0, 80);
        assert!((diag.re - mi.value).abs() < 1e-12);
        assert!(diag.im.abs() < 1e-14);

        let off = m.dual_orthogonality(0, 1, 120);
        assert!(off.norm() < 1e-5, "off = {off}");
        let sym = m.dual_orthogonality(-2, 2, 120);
        assert!(sym.norm() < 1e-5);
    }

    #[test]
    fn isometry_basics() {
        let tol = Tolerance::default();
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(20);
        // |0> maps to the constant function 1
        let f = isometry_omega(&FockVector::basis(0, 12), &m, &w, &tol).unwrap();
        for v in f.values() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!((f.weighted_norm() - 1.0).abs() < 1e-8);
        // images of basis vectors form an orthonormal family in L²_b(m_r)
        for n in 0..6usize {
            let fn_ = isometry_omega(&FockVector::basis(n, 12), &m, &w, &tol).unwrap();
            for k in 0..6usize {
                let fk = isometry_omega(&FockVector::basis(k, 12), &m, &w, &tol).unwrap();
                let dot: f64 = w
                    .iter()
                    .map(|r| m.weight(r) * (fn_.value_at(r) * fk.value_at(r).conj()).re)
                    .sum();
                let want = if n == k { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn isometry_preserves_random_norms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let tol = Tolerance::default();
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(22);
        for _ in 0..4 {
            let coeffs: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let v = FockVector::from_coefficients(coeffs).normalized();
            let f = isometry_omega(&v, &m, &w, &tol).unwrap();
            assert!((f.weighted_norm() - v.norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn multiplication_operator_realization() {
        // Omega(Q v) = x · Omega(v) on the grid for v supported below N-1
        let tol = Tolerance::default();
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(20);
        let p = params2();
        for n in 0..=12usize {
            let v = FockVector::basis(n, 16);
            let (qv, lost) = apply_position(&v, p);
            assert!(!lost);
            let lhs = isometry_omega(&qv, &m, &w, &tol).unwrap();
            let rhs = isometry_omega(&v, &m, &w, &tol).unwrap();
            for r in w.iter() {
                let want = rhs.value_at(r) * m.spectrum_point(r);
                let diff = (lhs.value_at(r) - want).norm() * m.weight(r).sqrt();
                assert!(diff < 1e-8, "n = {n}, r = {r}");
            }
        }
    }

    #[test]
    fn grid_function_plumbing() {
        let m = measure(0.5);
        let w = SpectralWindow::symmetric(3);
        assert!(GridFunction::new(m.clone(), w, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        let g = GridFunction::from_fn(m.clone(), w, |r| Complex64::new(r as f64, 0.0));
        assert_eq!(g.value_at(2), Complex64::new(2.0, 0.0));
        assert_eq!(g.value_at(9), Complex64::new(0.0, 0.0));
        let sub = g.restrict(&SpectralWindow::new(-1, 1).unwrap()).unwrap();
        assert_eq!(sub.values().len(), 3);
        assert!(g.restrict(&SpectralWindow::symmetric(9)).is_err());
        let z = GridFunction::zero(m, w);
        assert_eq!(z.weighted_norm(), 0.0);
    }

    #[test]
    fn eigenfunction_product_examples() {
        let tol = Tolerance::default();
        let p = params2();
        // y = 0 makes every factor 1
        for &x in &[-2.0, 0.0, 3.7] {
            let v = eigenfunction_product(x, 0.0, p, &tol).unwrap();
            assert_eq!(v.value, 1.0);
        }
        // x = 0 collapses to (y² q̆²; q̆²)_∞, evaluated by an oracle product
        // in the modulus q̆²
        for &y in &[-0.4, 0.3] {
            let v = eigenfunction_product(0.0, y, p, &tol).unwrap();
            let oracle = q_pochhammer_inf(Complex64::new(y * y * 0.25, 0.0), 0.25, &tol)
                .unwrap()
                .value
                .re;
            assert!((v.value - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenfunction_product_matches_series() {
        let tol = Tolerance::default();
        for q in [1.5, 2.0] {
            let p = QParameters::new(q).unwrap();
            for &x in &[0.0, 0.5, -0.5, 1.5, -1.5] {
                for &y in &[0.0, 0.3, -0.3] {
                    let prod = eigenfunction_product(x, y, p, &tol).unwrap().value;
                    let series = eigenfunction_series(x, y, p, 40);
                    assert!(
                        (prod - series).abs() <= 1e-10 * prod.abs().max(1.0),
                        "q = {q}, x = {x}, y = {y}: {prod} vs {series}"
                    );
                }
            }
        }
    }

    #[test]
    fn momentum_eigenfunction_product_matches_series() {
        let tol = Tolerance::default();
        let p = params2();
        let prod = momentum_eigenfunction_product(1.5, 0.3, p, &tol).unwrap().value;
        let series = momentum_eigenfunction_series(1.5, 0.3, p, 40);
        assert!((prod - series).norm() <= 1e-10 * prod.norm().max(1.0));
        // series N = 0 is h_0 = 1
        assert_eq!(momentum_eigenfunction_series(0.8, 0.5, p, 0), Complex64::new(1.0, 0.0));
        assert_eq!(eigenfunction_series(0.8, 0.5, p, 0), 1.0);
    }

    #[test]
    fn moments_are_extension_independent() {
        let tol = Tolerance::default();
        let m1 = measure(0.5);
        let m2 = measure(0.7);
        for n in 0..=6u32 {
            let w1 = m1.auto_window_for_moment(n, &tol).unwrap();
            let w2 = m2.auto_window_for_moment(n, &tol).unwrap();
            let c1 = m1.compute_moment(n, &w1, &tol).unwrap();
            let c2 = m2.compute_moment(n, &w2, &tol).unwrap();
            assert!(
                (c1 - c2).abs() <= 1e-8 * c1.abs().max(1.0),
                "n = {n}: {c1} vs {c2}"
            );
        }
        // n = 0 is the mass normalization
        let w = m1.auto_window_for_moment(0, &tol).unwrap();
        assert!((m1.compute_moment(0, &w, &tol).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn moments_match_fock_matrix_elements() {
        // c_n = <0| Q^n |0> computed through the ladder operators is an
        // independent oracle for the moment sums
        let tol = Tolerance::default();
        let p = params2();
        let m = measure(0.5);
        for n in 0..=6u32 {
            let mut v = FockVector::basis(0, 12);
            for _ in 0..n {
                let (next, lost) = apply_position(&v, p);
                assert!(!lost);
                v = next;
            }
            let oracle = v.coefficients()[0].re;
            let w = m.auto_window_for_moment(n, &tol).unwrap();
            let c = m.compute_moment(n, &w, &tol).unwrap();
            assert!(
                (c - oracle).abs() <= 1e-8 * oracle.abs().max(1.0),
                "n = {n}: {c} vs {oracle}"
            );
        }
    }

    #[test]
    fn moment_window_too_small() {
        let m = measure(0.5);
        let tiny = SpectralWindow::symmetric(2);
        assert!(matches!(
            m.compute_moment(4, &tiny, &Tolerance::default()),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn spectra_of_distinct_extensions_interlace() {
        // consecutive points of one extension bracket exactly one point of
        // the other, and no point is shared
        let pairs = [(0.5, 0.6), (0.5, 0.8), (0.6, 0.8)];
        for (b1, b2) in pairs {
            let m1 = measure(b1);
            let m2 = measure(b2);
            let core = SpectralWindow::symmetric(10);
            let pts1: Vec<f64> = core.iter().map(|r| m1.spectrum_point(r)).collect();
            let pts2: Vec<f64> = core.iter().map(|r| m2.spectrum_point(r)).collect();
            for w in pts1.windows(2) {
                let inside = pts2.iter().filter(|&&x| x > w[0] && x < w[1]).count();
                // away from the window edges exactly one point falls between
                if w[0] > pts2[0] && w[1] < pts2[pts2.len() - 1] {
                    assert_eq!(inside, 1, "b1 = {b1}, b2 = {b2}");
                }
            }
            for &x1 in &pts1 {
                for &x2 in &pts2 {
                    assert!((x1 - x2).abs() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn auto_windows() {
        let tol = Tolerance::default();
        let m = measure(0.5);
        let w = m.auto_window(&tol).unwrap();
        assert!(m.weight(w.r_max()) < tol.tail_eps());
        assert!(m.weight(w.r_min()) < tol.tail_eps());
        let wo = m.auto_window_for_orthogonality(15, &tol).unwrap();
        assert!(wo.r_max() >= w.r_max());
        let rep = m.verify_orthogonality(15, &wo, &tol).unwrap();
        assert!(rep.max_deviation < 1e-8);
    }

    proptest! {
        #[test]
        fn locate_round_trips(x0 in -40.0..40.0f64, qi in 0usize..3) {
            let p = QParameters::new([1.5, 2.0, 3.0][qi]).unwrap();
            let (b, r) = locate_extension(x0, p, OperatorKind::Position);
            let m = ExtremalMeasure::new(p, b, OperatorKind::Position, &Tolerance::default()).unwrap();
            let back = m.spectrum_point(r);
            prop_assert!((back - x0).abs() <= 1e-12 * x0.abs().max(1.0));
        }

        #[test]
        fn spectrum_points_strictly_increase(bq in 0.5..0.99f64, r in -50i64..50) {
            let p = QParameters::new(2.0).unwrap();
            let b = bq.max(0.5);
            let m = ExtremalMeasure::new(p, b, OperatorKind::Position, &Tolerance::default()).unwrap();
            prop_assert!(m.spectrum_point(r + 1) > m.spectrum_point(r));
        }
    }
}
