//! Probability densities on the pure-state manifold, Monte-Carlo
//! realizations of the dual information metrics, dual expectation formulas,
//! and analytic metric computation for parameterized families.
//!
//! The absolute constants relating the Monte-Carlo integrals to the trace
//! metric `4 tr(d_xi d_xi)` depend on the implicit volume normalizations and
//! are calibrated numerically, never assumed. The measured ratio is constant
//! along unitary orbits (Haar invariance) but varies with the spectrum of
//! the state, so calibration is per dimension *and* per orbit.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{
    derivatives_unitary, hs_inner, random_density_hs, random_pure, unitary_evolve, DensityMatrix,
    HermitianMatrix, PureState, SqrtState,
};
use crate::error::{Error, Result};
use crate::stats::{mean_and_stderr, run_batches, BATCHES};

/// Central finite-difference step relative to the parameter scale.
pub const FD_STEP: f64 = 1e-5;
/// Densities below this are treated as zero for the score rejection rule.
const DENSITY_FLOOR: f64 = 1e-12;
/// Fraction of rejected samples above which an MC run fails loudly.
const REJECT_BUDGET: f64 = 0.01;

/// Density of `rho` on the pure-state manifold relative to the normalized
/// Haar measure: `n <x|rho|x>`. Averages to 1 over Haar samples.
pub fn density_on_pure(x: &PureState, rho: &DensityMatrix) -> Result<f64> {
    let n = rho.dim() as f64;
    Ok((n * x.density_expectation(rho)?).max(0.0))
}

/// A scalar Monte-Carlo estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn require_traceless(a: &HermitianMatrix) -> Result<()> {
    let tr = a.trace().abs();
    if tr > 1e-10 {
        return Err(Error::NotTraceless(tr));
    }
    Ok(())
}

/// Monte-Carlo realization of `tr(A rho)` as an integral over pure states:
/// `(n + 1) * E_Haar[<x|A|x> * density_on_pure(x, rho)]` for traceless A.
///
/// The calibration constant (n + 1) follows from the Haar moment identity
/// `E[<x|A|x><x|B|x>] = (tr A tr B + tr(AB)) / (n (n + 1))`, which the test
/// suite checks independently.
pub fn gibbons_expectation(
    a: &HermitianMatrix,
    rho: &DensityMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    require_traceless(a)?;
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(a.dim(), rho.dim()));
    }
    if n_samples < 1_000 {
        return Err(Error::TooFewSamples(n_samples, 1_000));
    }
    let dim = rho.dim();
    let factor = (dim + 1) as f64;
    let batch_means: Vec<Result<f64>> = run_batches(n_samples, seed, |_, mut rng, size| {
        let mut acc = 0.0;
        for _ in 0..size {
            let x = random_pure(dim, &mut rng)?;
            acc += factor * x.expectation(a)? * density_on_pure(&x, rho)?;
        }
        Ok(acc / size as f64)
    });
    let means = batch_means.into_iter().collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_and_stderr(&means);
    Ok(McEstimate {
        estimate,
        stderr,
        samples: n_samples,
    })
}

/// Per-dimension calibration constant for [`dual_expectation`].
///
/// Obtained by regressing the raw Hilbert-Schmidt-measure integral
/// `E_HS[tr(A rho) <x|rho|x>]` against the target `<x|A|x>` over a
/// validation set of random (A, x) pairs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualCalibration {
    pub dim: usize,
    pub constant: f64,
    pub pairs: usize,
    pub samples_per_pair: usize,
}

impl DualCalibration {
    pub fn calibrate(dim: usize, pairs: usize, samples_per_pair: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if pairs == 0 || samples_per_pair < 1_000 {
            return Err(Error::TooFewSamples(samples_per_pair, 1_000));
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let mut num = 0.0;
        let mut den = 0.0;
        for pair in 0..pairs {
            let mut a = crate::algebra::random_hermitian(dim, &mut rng)?;
            a = a.shift_identity(-a.trace() / dim as f64);
            let x = random_pure(dim, &mut rng)?;
            let raw = raw_dual(&a, &x, samples_per_pair, seed.wrapping_add(pair as u64 + 1))?;
            let target = x.expectation(&a)?;
            num += raw.estimate * target;
            den += raw.estimate * raw.estimate;
        }
        Ok(Self {
            dim,
            constant: num / den,
            pairs,
            samples_per_pair,
        })
    }
}

fn raw_dual(a: &HermitianMatrix, x: &PureState, n_samples: usize, seed: u64) -> Result<McEstimate> {
    let dim = a.dim();
    let batch_means: Vec<Result<f64>> = run_batches(n_samples, seed, |_, mut rng, size| {
        let mut acc = 0.0;
        for _ in 0..size {
            let rho = random_density_hs(dim, &mut rng)?;
            acc += hs_inner(a, rho.as_herm())? * x.density_expectation(&rho)?;
        }
        Ok(acc / size as f64)
    });
    let means = batch_means.into_iter().collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_and_stderr(&means);
    Ok(McEstimate {
        estimate,
        stderr,
        samples: n_samples,
    })
}

/// The dual of [`gibbons_expectation`]: recovers `<x|A|x>` (up to the
/// calibrated constant) from an integral over the Hilbert-Schmidt ensemble
/// of density matrices.
pub fn dual_expectation(
    a: &HermitianMatrix,
    x: &PureState,
    n_samples: usize,
    seed: u64,
    cal: &DualCalibration,
) -> Result<McEstimate> {
    require_traceless(a)?;
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch(a.dim(), x.dim()));
    }
    if a.dim() != cal.dim {
        return Err(Error::DimensionMismatch(a.dim(), cal.dim));
    }
    if n_samples < 1_000 {
        return Err(Error::TooFewSamples(n_samples, 1_000));
    }
    let raw = raw_dual(a, x, n_samples, seed)?;
    Ok(McEstimate {
        estimate: cal.constant * raw.estimate,
        stderr: cal.constant.abs() * raw.stderr,
        samples: n_samples,
    })
}

/// How a [`ParamFamily`] exposes derivatives.
pub enum DerivativeMode {
    /// Central differences with the given step (relative to parameter scale).
    FiniteDifference { step: f64 },
    /// One-parameter unitary curve generated by a Hamiltonian; derivatives
    /// are exact commutators.
    ExactUnitary { hamiltonian: HermitianMatrix },
    /// Closed-form derivative `(theta, direction) -> d xi / d theta_a`.
    ExactClosure(
        #[allow(clippy::type_complexity)]
        Box<dyn Fn(&[f64], usize) -> Result<HermitianMatrix> + Send + Sync>,
    ),
}

/// Differentiable map from a real parameter vector to a square-root state.
pub struct ParamFamily {
    param_dim: usize,
    #[allow(clippy::type_complexity)]
    evaluator: Arc<dyn Fn(&[f64]) -> Result<SqrtState> + Send + Sync>,
    mode: DerivativeMode,
}

impl ParamFamily {
    pub fn new(
        param_dim: usize,
        evaluator: impl Fn(&[f64]) -> Result<SqrtState> + Send + Sync + 'static,
        mode: DerivativeMode,
    ) -> Self {
        Self {
            param_dim,
            evaluator: Arc::new(evaluator),
            mode,
        }
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<SqrtState> {
        if theta.len() != self.param_dim {
            return Err(Error::ParamDimMismatch(theta.len(), self.param_dim));
        }
        (self.evaluator)(theta)
    }

    /// d xi / d theta_a at `theta`.
    pub fn derivative(&self, theta: &[f64], a: usize) -> Result<HermitianMatrix> {
        if theta.len() != self.param_dim {
            return Err(Error::ParamDimMismatch(theta.len(), self.param_dim));
        }
        match &self.mode {
            DerivativeMode::FiniteDifference { step } => {
                let scale = theta[a].abs().max(1.0);
                let h = step * scale;
                if h <= f64::EPSILON * scale {
                    return Err(Error::StepUnderflow(h));
                }
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[a] += h;
                minus[a] -= h;
                let fp = self.evaluate(&plus)?;
                let fm = self.evaluate(&minus)?;
                Ok(fp
                    .as_herm()
                    .sub(fm.as_herm())?
                    .scale(1.0 / (2.0 * h)))
            }
            DerivativeMode::ExactUnitary { hamiltonian } => {
                let xi = self.evaluate(theta)?;
                derivatives_unitary(&xi, hamiltonian, 1)
            }
            DerivativeMode::ExactClosure(f) => f(theta, a),
        }
    }

    /// All partial derivatives at `theta`.
    pub fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        (0..self.param_dim)
            .map(|a| self.derivative(theta, a))
            .collect()
    }

    /// Family constant in theta (zero metric).
    pub fn constant(xi: SqrtState) -> Self {
        Self::new(
            1,
            move |_| Ok(xi.clone()),
            DerivativeMode::FiniteDifference { step: FD_STEP },
        )
    }

    /// One-parameter unitary curve `xi(t) = e^{-iHt} xi0 e^{iHt}` with exact
    /// commutator derivatives.
    pub fn unitary_curve(xi0: SqrtState, h: HermitianMatrix) -> Self {
        let hc = h.clone();
        Self::new(
            1,
            move |theta: &[f64]| unitary_evolve(&xi0, &hc, theta[0]),
            DerivativeMode::ExactUnitary { hamiltonian: h },
        )
    }

    /// Pure qubit family in spherical angles (theta, phi):
    /// t = 1/2, (x, y, z) = (sin t cos p, sin t sin p, cos t) / 2.
    pub fn qubit_pure() -> Self {
        let eval = |th: &[f64]| {
            let (t, p) = (th[0], th[1]);
            let pt = crate::bloch::S3Point::new(
                0.5,
                0.5 * t.sin() * p.cos(),
                0.5 * t.sin() * p.sin(),
                0.5 * t.cos(),
            )?;
            Ok(crate::bloch::xi_from_s3(&pt))
        };
        let deriv = move |th: &[f64], a: usize| {
            let (t, p) = (th[0], th[1]);
            let (dx, dy, dz) = match a {
                0 => (
                    0.5 * t.cos() * p.cos(),
                    0.5 * t.cos() * p.sin(),
                    -0.5 * t.sin(),
                ),
                _ => (-0.5 * t.sin() * p.sin(), 0.5 * t.sin() * p.cos(), 0.0),
            };
            herm_from_tangent(0.0, dx, dy, dz)
        };
        Self::new(
            2,
            eval,
            DerivativeMode::ExactClosure(Box::new(deriv)),
        )
    }

    /// Mixed qubit family (u, theta, phi):
    /// t = sqrt(1/2 - u^2), (x, y, z) = u (sin t cos p, sin t sin p, cos t).
    pub fn qubit_mixed() -> Self {
        let eval = |th: &[f64]| {
            let (u, t, p) = (th[0], th[1], th[2]);
            let tt = (0.5 - u * u).max(0.0).sqrt();
            let pt =
                crate::bloch::S3Point::new(tt, u * t.sin() * p.cos(), u * t.sin() * p.sin(), u * t.cos())?;
            Ok(crate::bloch::xi_from_s3(&pt))
        };
        let deriv = move |th: &[f64], a: usize| {
            let (u, t, p) = (th[0], th[1], th[2]);
            let tt = (0.5 - u * u).max(0.0).sqrt();
            let (dt, dx, dy, dz) = match a {
                0 => (
                    -u / tt,
                    t.sin() * p.cos(),
                    t.sin() * p.sin(),
                    t.cos(),
                ),
                1 => (
                    0.0,
                    u * t.cos() * p.cos(),
                    u * t.cos() * p.sin(),
                    -u * t.sin(),
                ),
                _ => (0.0, -u * t.sin() * p.sin(), u * t.sin() * p.cos(), 0.0),
            };
            herm_from_tangent(dt, dx, dy, dz)
        };
        Self::new(
            3,
            eval,
            DerivativeMode::ExactClosure(Box::new(deriv)),
        )
    }

    /// Pull back a family along a smooth reparameterization; derivatives are
    /// chain-ruled through the supplied Jacobian, so an exact inner family
    /// stays exact.
    pub fn reparameterized(
        inner: ParamFamily,
        new_dim: usize,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        let inner = Arc::new(inner);
        let inner_eval = inner.clone();
        let map = Arc::new(map);
        let map_eval = map.clone();
        let eval = move |th: &[f64]| inner_eval.evaluate(&map_eval(th));
        let deriv = move |th: &[f64], a: usize| {
            let inner_theta = map(th);
            let jac = jacobian(th); // jac[i][a] = d theta_inner_i / d theta_new_a
            let mut acc = HermitianMatrix::zeros(inner.evaluate(&inner_theta)?.dim());
            for (i, row) in jac.iter().enumerate() {
                let di = inner.derivative(&inner_theta, i)?;
                acc = acc.add(&di.scale(row[a]))?;
            }
            Ok(acc)
        };
        Self::new(new_dim, eval, DerivativeMode::ExactClosure(Box::new(deriv)))
    }
}

fn herm_from_tangent(dt: f64, dx: f64, dy: f64, dz: f64) -> Result<HermitianMatrix> {
    use crate::algebra::C64;
    let m = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(dt + dz, 0.0),
            C64::new(dx, -dy),
            C64::new(dx, dy),
            C64::new(dt - dz, 0.0),
        ],
    );
    HermitianMatrix::new(m)
}

/// Symmetric metric estimate with per-component error bars (zero for the
/// analytic route).
#[derive(Debug, Clone, Serialize)]
pub struct MetricEstimate {
    pub components: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub samples: usize,
}

impl MetricEstimate {
    /// Largest asymmetry |G_ab - G_ba|.
    pub fn asymmetry(&self) -> f64 {
        let d = self.components.len();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                worst = worst.max((self.components[a][b] - self.components[b][a]).abs());
            }
        }
        worst
    }
}

/// Analytic Fisher-Rao metric `G_ab = 4 tr(d_a xi d_b xi)`.
pub fn fisher_rao_analytic(family: &ParamFamily, theta: &[f64]) -> Result<MetricEstimate> {
    let derivs = family.derivatives(theta)?;
    let d = family.param_dim();
    let mut components = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in a..d {
            let g = 4.0 * hs_inner(&derivs[a], &derivs[b])?;
            components[a][b] = g;
            components[b][a] = g;
        }
    }
    Ok(MetricEstimate {
        stderr: vec![vec![0.0; d]; d],
        components,
        samples: 0,
    })
}

/// Monte-Carlo information metric of the pure-state likelihood:
/// `G_ab = E_p[d_a log p d_b log p]` with `p(x) = n <x|xi(theta)^2|x>`,
/// scores by central differences in theta.
///
/// Samples with vanishing density but non-vanishing score are rejected and
/// counted; a rejected fraction above 1% fails the run.
pub fn fisher_rao_mc(
    family: &ParamFamily,
    theta: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<MetricEstimate> {
    let d = family.param_dim();
    if theta.len() != d {
        return Err(Error::ParamDimMismatch(theta.len(), d));
    }
    if n_samples < BATCHES * 10 {
        return Err(Error::TooFewSamples(n_samples, BATCHES * 10));
    }
    let rho0 = family.evaluate(theta)?.square();
    let dim = rho0.dim();
    // densities at the shifted parameter points, one +/- pair per direction
    let mut shifted: Vec<(f64, DensityMatrix, DensityMatrix)> = Vec::with_capacity(d);
    for a in 0..d {
        let scale = theta[a].abs().max(1.0);
        let h = FD_STEP * scale;
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[a] += h;
        minus[a] -= h;
        shifted.push((
            h,
            family.evaluate(&plus)?.square(),
            family.evaluate(&minus)?.square(),
        ));
    }

    struct BatchOut {
        sums: Vec<f64>, // upper triangle, row-major
        rejected: usize,
        size: usize,
    }
    let tri = d * (d + 1) / 2;
    let batches: Vec<Result<BatchOut>> = run_batches(n_samples, seed, |_, mut rng, size| {
        let mut sums = vec![0.0; tri];
        let mut rejected = 0usize;
        let mut scores = vec![0.0; d];
        for _ in 0..size {
            let x = random_pure(dim, &mut rng)?;
            let p0 = density_on_pure(&x, &rho0)?;
            for (a, (h, rp, rm)) in shifted.iter().enumerate() {
                scores[a] =
                    (density_on_pure(&x, rp)? - density_on_pure(&x, rm)?) / (2.0 * h);
            }
            if p0 <= DENSITY_FLOOR {
                if scores.iter().any(|s| s.abs() > DENSITY_FLOOR) {
                    rejected += 1;
                }
                continue;
            }
            let mut k = 0;
            for a in 0..d {
                for b in a..d {
                    sums[k] += scores[a] * scores[b] / p0;
                    k += 1;
                }
            }
        }
        Ok(BatchOut {
            sums,
            rejected,
            size,
        })
    });
    let batches = batches.into_iter().collect::<Result<Vec<_>>>()?;

    let rejected: usize = batches.iter().map(|b| b.rejected).sum();
    let fraction = rejected as f64 / n_samples as f64;
    if fraction > REJECT_BUDGET {
        return Err(Error::RejectionRate {
            rejected,
            total: n_samples,
            fraction,
        });
    }

    let mut components = vec![vec![0.0; d]; d];
    let mut stderr = vec![vec![0.0; d]; d];
    let mut k = 0;
    for a in 0..d {
        for b in a..d {
            let means: Vec<f64> = batches.iter().map(|o| o.sums[k] / o.size as f64).collect();
            let (m, s) = mean_and_stderr(&means);
            components[a][b] = m;
            components[b][a] = m;
            stderr[a][b] = s;
            stderr[b][a] = s;
            k += 1;
        }
    }
    Ok(MetricEstimate {
        components,
        stderr,
        samples: n_samples,
    })
}

/// Fitted proportionality constant between the Monte-Carlo and analytic
/// metrics over a set of parameter points.
#[derive(Debug, Clone, Serialize)]
pub struct KappaFit {
    pub kappa: f64,
    pub stderr: f64,
    /// Per-point (ratio, ratio standard error).
    pub per_point: Vec<(f64, f64)>,
    /// Worst |ratio - kappa| / stderr over the points.
    pub max_z: f64,
}

/// Measure the MC/analytic ratio at several parameter points of a
/// one-parameter family and fit a single constant by inverse-variance
/// weighting. Stability of the per-point ratios around the fit (|z| <= 3)
/// is the health check for the proportionality claim on this family.
pub fn calibrate_metric_ratio(
    family: &ParamFamily,
    thetas: &[Vec<f64>],
    n_samples: usize,
    seed: u64,
) -> Result<KappaFit> {
    let mut per_point = Vec::with_capacity(thetas.len());
    for (i, theta) in thetas.iter().enumerate() {
        let mc = fisher_rao_mc(family, theta, n_samples, seed.wrapping_add(i as u64))?;
        let an = fisher_rao_analytic(family, theta)?;
        let g = an.components[0][0];
        if g.abs() < 1e-14 {
            return Err(Error::CrossCheckFailed(format!(
                "analytic metric vanishes at point {i}; ratio undefined"
            )));
        }
        per_point.push((mc.components[0][0] / g, mc.stderr[0][0] / g));
    }
    let mut wsum = 0.0;
    let mut wx = 0.0;
    for &(r, s) in &per_point {
        let w = 1.0 / (s * s);
        wsum += w;
        wx += w * r;
    }
    let kappa = wx / wsum;
    let stderr = (1.0 / wsum).sqrt();
    let max_z = per_point
        .iter()
        .map(|&(r, s)| ((r - kappa) / s).abs())
        .fold(0.0, f64::max);
    Ok(KappaFit {
        kappa,
        stderr,
        per_point,
        max_z,
    })
}
