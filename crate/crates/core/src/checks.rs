//! Named invariant checks behind the CLI `verify` command.
//!
//! Each check computes a measured deviation and compares it against its
//! pinned tolerance; the list is data-driven so new invariants register here
//! without CLI changes. Structural checks (interlacing, verdicts) report 0
//! or 1 against a tolerance of 1/2.

use std::cell::OnceCell;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{apply_position, FockVector};
use crate::jacobi::{position_jacobi, JacobiOperator, SelfAdjointness};
use crate::qcore::{QParameters, Tolerance};
use crate::qfourier::{
    transform_entry_product, transform_entry_series, BuildOptions, TransformMatrix,
};
use crate::qhermite::{validate_evaluators, OperatorKind};
use crate::spectra::{
    eigenfunction_product, eigenfunction_series, isometry_omega, locate_extension,
    momentum_eigenfunction_product, momentum_eigenfunction_series, ExtremalMeasure, GridFunction,
    SpectralWindow,
};

/// Everything a check needs: the deformation, two distinct extension labels,
/// and the truncation tolerance. The transform matrix is built lazily and
/// shared by the transform-level checks.
pub struct CheckContext {
    params: QParameters,
    b: f64,
    b_prime: f64,
    tol: Tolerance,
    matrix: OnceCell<TransformMatrix>,
}

impl CheckContext {
    /// Build a context; requires q > 1 and two distinct labels in [q̆, 1).
    pub fn new(params: QParameters, b: f64, b_prime: f64, tol: Tolerance) -> Result<Self> {
        if b == b_prime {
            return Err(Error::Domain(
                "the verification suite needs two distinct extension labels".into(),
            ));
        }
        // validate both labels up front
        ExtremalMeasure::new(params, b, OperatorKind::Position, &tol)?;
        ExtremalMeasure::new(params, b_prime, OperatorKind::Momentum, &tol)?;
        Ok(Self {
            params,
            b,
            b_prime,
            tol,
            matrix: OnceCell::new(),
        })
    }

    fn coord_measure(&self) -> Result<ExtremalMeasure> {
        ExtremalMeasure::new(self.params, self.b, OperatorKind::Position, &self.tol)
    }

    fn second_measure(&self) -> Result<ExtremalMeasure> {
        ExtremalMeasure::new(self.params, self.b_prime, OperatorKind::Position, &self.tol)
    }

    fn matrix(&self) -> Result<&TransformMatrix> {
        if self.matrix.get().is_none() {
            let window = SpectralWindow::symmetric(10);
            let m = TransformMatrix::build(
                self.b_prime,
                self.b,
                self.params,
                &window,
                &self.tol,
                &BuildOptions::default(),
            )?;
            let _ = self.matrix.set(m);
        }
        Ok(self.matrix.get().expect("set above"))
    }
}

/// Measured deviation against the pinned tolerance of one check.
#[derive(Debug, Clone, Copy)]
pub struct CheckOutcome {
    /// The measured deviation.
    pub measured: f64,
    /// The tolerance it must stay below.
    pub tolerance: f64,
}

impl CheckOutcome {
    /// Whether the check passed.
    pub fn passed(&self) -> bool {
        self.measured.is_finite() && self.measured <= self.tolerance
    }
}

/// A named invariant check.
pub struct Check {
    /// Stable name printed in reports.
    pub name: &'static str,
    /// The computation.
    pub run: fn(&CheckContext) -> Result<CheckOutcome>,
}

/// The full registered check list, in execution order. The evaluator gate
/// runs first since everything downstream leans on the h recurrence.
pub fn standard_checks() -> Vec<Check> {
    vec![
        Check { name: "hermite-evaluator-gate", run: check_evaluator_gate },
        Check { name: "weight-normalization", run: check_weight_normalization },
        Check { name: "orthogonality", run: check_orthogonality },
        Check { name: "mass-identity", run: check_mass_identity },
        Check { name: "eigenfunction-product-vs-series", run: check_eigenfunction },
        Check { name: "momentum-eigenfunction-product-vs-series", run: check_momentum_eigenfunction },
        Check { name: "locate-roundtrip", run: check_locate_roundtrip },
        Check { name: "multiplication-operator", run: check_multiplication_operator },
        Check { name: "isometry-norm", run: check_isometry_norm },
        Check { name: "moment-invariance", run: check_moment_invariance },
        Check { name: "spectra-interlacing", run: check_interlacing },
        Check { name: "self-adjointness-verdicts", run: check_verdicts },
        Check { name: "transform-product-vs-series", run: check_transform_entries },
        Check { name: "transform-unitarity", run: check_unitarity },
        Check { name: "plancherel", run: check_plancherel },
        Check { name: "transform-roundtrip", run: check_roundtrip },
    ]
}

/// Run every registered check, pairing names with outcomes or errors.
pub fn run_all(ctx: &CheckContext) -> Vec<(&'static str, Result<CheckOutcome>)> {
    standard_checks()
        .into_iter()
        .map(|c| (c.name, (c.run)(ctx)))
        .collect()
}

fn check_evaluator_gate(ctx: &CheckContext) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        measured: validate_evaluators(ctx.params),
        tolerance: 1e-9,
    })
}

fn check_weight_normalization(ctx: &CheckContext) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    for measure in [ctx.coord_measure()?, ctx.second_measure()?] {
        let w = measure.auto_window(&ctx.tol)?;
        let total: f64 = w.iter().map(|r| measure.weight(r)).sum();
        worst = worst.max((total - 1.0).abs());
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-10,
    })
}

fn check_orthogonality(ctx: &CheckContext) -> Result<CheckOutcome> {
    let measure = ctx.coord_measure()?;
    let window = measure.auto_window_for_orthogonality(15, &ctx.tol)?;
    let report = measure.verify_orthogonality(15, &window, &ctx.tol)?;
    Ok(CheckOutcome {
        measured: report.max_deviation,
        tolerance: 1e-8,
    })
}

fn check_mass_identity(ctx: &CheckContext) -> Result<CheckOutcome> {
    let measure = ctx.coord_measure()?;
    let mut worst = 0.0_f64;
    for r in -5..=5 {
        worst = worst.max((measure.mass_identity(r, 80).value - 1.0).abs());
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-6,
    })
}

fn check_eigenfunction(ctx: &CheckContext) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    for &x in &[0.0, 0.5, -0.5, 1.5, -1.5] {
        for &y in &[0.0, 0.3, -0.3] {
            let product = eigenfunction_product(x, y, ctx.params, &ctx.tol)?.value;
            let series = eigenfunction_series(x, y, ctx.params, 40);
            worst = worst.max((product - series).abs() / product.abs().max(1.0));
        }
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-10,
    })
}

fn check_momentum_eigenfunction(ctx: &CheckContext) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    for &p in &[0.0, 0.5, -0.5, 1.5, -1.5] {
        for &y in &[0.0, 0.3, -0.3] {
            let product = momentum_eigenfunction_product(p, y, ctx.params, &ctx.tol)?.value;
            let series = momentum_eigenfunction_series(p, y, ctx.params, 40);
            worst = worst.max((product - series).norm() / product.norm().max(1.0));
        }
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-10,
    })
}

fn check_locate_roundtrip(ctx: &CheckContext) -> Result<CheckOutcome> {
    let measure = ctx.coord_measure()?;
    let mut points = vec![0.0, 1.5, -2.75, 7.3, -12.9];
    for r in [-3, 1, 4] {
        points.push(measure.spectrum_point(r));
    }
    let mut worst = 0.0_f64;
    for x0 in points {
        let (b, r) = locate_extension(x0, ctx.params, OperatorKind::Position);
        let m = ExtremalMeasure::new(ctx.params, b, OperatorKind::Position, &ctx.tol)?;
        let back = m.spectrum_point(r);
        worst = worst.max((back - x0).abs() / x0.abs().max(1.0));
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-12,
    })
}

fn check_multiplication_operator(ctx: &CheckContext) -> Result<CheckOutcome> {
    let measure = ctx.coord_measure()?;
    let window = measure.auto_window_for_orthogonality(14, &ctx.tol)?;
    let mut worst = 0.0_f64;
    for n in 0..=12usize {
        let v = FockVector::basis(n, 16);
        let (qv, _) = apply_position(&v, ctx.params);
        let lhs = isometry_omega(&qv, &measure, &window, &ctx.tol)?;
        let rhs = isometry_omega(&v, &measure, &window, &ctx.tol)?;
        for r in window.iter() {
            let dev = (lhs.value_at(r) - rhs.value_at(r) * measure.spectrum_point(r)).norm()
                * measure.weight(r).sqrt();
            worst = worst.max(dev);
        }
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-8,
    })
}

fn check_isometry_norm(ctx: &CheckContext) -> Result<CheckOutcome> {
    let measure = ctx.coord_measure()?;
    let window = measure.auto_window_for_orthogonality(15, &ctx.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let coeffs: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let v = FockVector::from_coefficients(coeffs).normalized();
        let image = isometry_omega(&v, &measure, &window, &ctx.tol)?;
        worst = worst.max((image.weighted_norm() - 1.0).abs());
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-8,
    })
}

fn check_moment_invariance(ctx: &CheckContext) -> Result<CheckOutcome> {
    let m1 = ctx.coord_measure()?;
    let m2 = ctx.second_measure()?;
    let mut worst = 0.0_f64;
    for n in 0..=6u32 {
        let w1 = m1.auto_window_for_moment(n, &ctx.tol)?;
        let w2 = m2.auto_window_for_moment(n, &ctx.tol)?;
        let c1 = m1.compute_moment(n, &w1, &ctx.tol)?;
        let c2 = m2.compute_moment(n, &w2, &ctx.tol)?;
        worst = worst.max((c1 - c2).abs() / c1.abs().max(1.0));
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-8,
    })
}

fn check_interlacing(ctx: &CheckContext) -> Result<CheckOutcome> {
    let m1 = ctx.coord_measure()?;
    let m2 = ctx.second_measure()?;
    let core = SpectralWindow::symmetric(10);
    let pts1: Vec<f64> = core.iter().map(|r| m1.spectrum_point(r)).collect();
    let pts2: Vec<f64> = core.iter().map(|r| m2.spectrum_point(r)).collect();
    let mut ok = true;
    for w in pts1.windows(2) {
        if w[0] > pts2[0] && w[1] < pts2[pts2.len() - 1] {
            ok &= pts2.iter().filter(|&&x| x > w[0] && x < w[1]).count() == 1;
        }
    }
    for &x1 in &pts1 {
        for &x2 in &pts2 {
            ok &= (x1 - x2).abs() > 1e-9;
        }
    }
    Ok(CheckOutcome {
        measured: if ok { 0.0 } else { 1.0 },
        tolerance: 0.5,
    })
}

fn check_verdicts(ctx: &CheckContext) -> Result<CheckOutcome> {
    let tol = ctx.tol;
    let deformed = position_jacobi(ctx.params).self_adjointness_verdict(64, &tol);
    let relaxed = QParameters::relaxed(ctx.params.qbreve())?;
    let bounded = position_jacobi(relaxed).self_adjointness_verdict(64, &tol);
    let undeformed = JacobiOperator::new("undeformed", |n| ((n + 1) as f64).sqrt(), |_| 0.0)
        .self_adjointness_verdict(64, &tol);
    let ok = deformed.verdict == SelfAdjointness::NotSelfAdjoint
        && bounded.verdict == SelfAdjointness::SelfAdjointBounded
        && undeformed.verdict == SelfAdjointness::SelfAdjointCarleman;
    Ok(CheckOutcome {
        measured: if ok { 0.0 } else { 1.0 },
        tolerance: 0.5,
    })
}

fn check_transform_entries(ctx: &CheckContext) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0_f64;
    for _ in 0..9 {
        let r_prime = rng.gen_range(-6i64..=6);
        let r = rng.gen_range(-6i64..=6);
        let product = transform_entry_product(r_prime, r, ctx.b_prime, ctx.b, ctx.params, &ctx.tol)?;
        let series = transform_entry_series(r_prime, r, ctx.b_prime, ctx.b, ctx.params, 320)?;
        worst = worst.max((product - series.value).norm() / product.norm());
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-7,
    })
}

fn check_unitarity(ctx: &CheckContext) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        measured: ctx.matrix()?.max_unitarity_deviation(),
        tolerance: 1e-6,
    })
}

fn check_plancherel(ctx: &CheckContext) -> Result<CheckOutcome> {
    let matrix = ctx.matrix()?;
    let window = matrix.user_window();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let fhat = GridFunction::from_fn(matrix.momentum_measure().clone(), window, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let image = matrix.apply_transform(&fhat)?;
        let n_in = fhat.weighted_norm();
        worst = worst.max((image.weighted_norm() - n_in).abs() / n_in);
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-7,
    })
}

fn check_roundtrip(ctx: &CheckContext) -> Result<CheckOutcome> {
    let matrix = ctx.matrix()?;
    let window = matrix.user_window();
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let fhat = GridFunction::from_fn(matrix.momentum_measure().clone(), window, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let back = matrix.apply_inverse(&matrix.apply_transform(&fhat)?)?;
        let mut dev2 = 0.0;
        for r in window.iter() {
            dev2 += matrix.momentum_measure().weight(r)
                * (back.value_at(r) - fhat.value_at(r)).norm_sqr();
        }
        worst = worst.max(dev2.sqrt() / fhat.weighted_norm());
    }
    Ok(CheckOutcome {
        measured: worst,
        tolerance: 1e-6,
    })
}
