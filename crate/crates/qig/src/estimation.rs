//! Skew-information quantities, locally unbiased estimators, the mixed-state
//! Cramer-Rao inequality and its comparison bounds, and the higher-order
//! correction machinery built from velocity, acceleration, and curvature of
//! the square-root curve.

use serde::Serialize;

use crate::algebra::{
    derivatives_unitary, hs_inner, principal_sqrt, DensityMatrix, HermitianMatrix, SqrtState,
};
use crate::error::{Error, Result};

/// Slack allowed when checking the inequality theorems; anything beyond this
/// is an implementation bug and fails hard.
pub const THEOREM_SLACK: f64 = 1e-9;
/// Eigenvalue-pair sums below this are excluded from the Lyapunov solve.
const PAIR_FLOOR: f64 = 1e-10;

/// Wigner-Yanase skew information `I_rho(H) = tr(H^2 rho) - tr(H sqrt(rho) H sqrt(rho))`.
pub fn skew_information(rho: &DensityMatrix, h: &HermitianMatrix) -> Result<f64> {
    let (hsq_rho, cross) = skew_traces(rho, h)?;
    Ok(hsq_rho - cross)
}

/// Skew information of the second kind
/// `dH^2 = tr(H sqrt(rho) H sqrt(rho)) - [tr(H rho)]^2`.
pub fn skew_second(rho: &DensityMatrix, h: &HermitianMatrix) -> Result<f64> {
    let (_, cross) = skew_traces(rho, h)?;
    let mean = hs_inner(h, rho.as_herm())?;
    Ok(cross - mean * mean)
}

/// Ordinary variance `tr(H^2 rho) - [tr(H rho)]^2`; always the sum of the
/// two skew informations.
pub fn variance(rho: &DensityMatrix, h: &HermitianMatrix) -> Result<f64> {
    let h2 = h.anticommutator_half(h)?;
    let mean = hs_inner(h, rho.as_herm())?;
    Ok(hs_inner(&h2, rho.as_herm())? - mean * mean)
}

fn skew_traces(rho: &DensityMatrix, h: &HermitianMatrix) -> Result<(f64, f64)> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), h.dim()));
    }
    let root = principal_sqrt(rho)?;
    let h2 = h.anticommutator_half(h)?;
    let hsq_rho = hs_inner(&h2, rho.as_herm())?;
    // tr(H xi H xi) via the Hermitian product (xi H xi)
    let hx = HermitianMatrix::new(root.matrix() * h.matrix() * root.matrix())?;
    let cross = hs_inner(h, &hx)?;
    Ok((hsq_rho, cross))
}

/// Squared velocity `tr(xi' xi')` of the unitary curve, cross-checked
/// against `2 [tr(H^2 xi^2) - tr(H xi H xi)]` (twice the skew information in
/// the square-root variable).
pub fn velocity_sq(xi: &SqrtState, h: &HermitianMatrix) -> Result<f64> {
    if xi.dim() != h.dim() {
        return Err(Error::DimensionMismatch(xi.dim(), h.dim()));
    }
    let d1 = derivatives_unitary(xi, h, 1)?;
    let direct = hs_inner(&d1, &d1)?;
    let alt = 2.0 * skew_form(xi, h)?;
    if (direct - alt).abs() > 1e-10 * direct.abs().max(1.0) {
        return Err(Error::CrossCheckFailed(format!(
            "tr(xi' xi') = {direct} vs 2[tr(H^2 xi^2) - tr(H xi H xi)] = {alt}"
        )));
    }
    Ok(direct)
}

/// tr(H^2 xi^2) - tr(H xi H xi) for a general (possibly non-positive) xi.
fn skew_form(xi: &SqrtState, h: &HermitianMatrix) -> Result<f64> {
    let h2 = h.anticommutator_half(h)?;
    let first = hs_inner(&h2, xi.square().as_herm())?;
    let hx = HermitianMatrix::new(xi.matrix() * h.matrix() * xi.matrix())?;
    Ok(first - hs_inner(h, &hx)?)
}

/// Locally unbiased estimator for the time parameter of a unitary curve:
/// a Hermitian T with `tr[(T~ xi + xi T~) xi'] = 1` at the reference time,
/// where `T~ = T - t 1`.
#[derive(Debug, Clone)]
pub struct EstimatorT {
    pub matrix: HermitianMatrix,
    pub reference_time: f64,
}

impl EstimatorT {
    /// T - t 1, additionally centered so that tr(T~ xi^2) = 0.
    pub fn mean_adjusted(&self, xi: &SqrtState) -> Result<HermitianMatrix> {
        let shifted = self.matrix.shift_identity(-self.reference_time);
        let mean = hs_inner(&shifted, xi.square().as_herm())?;
        Ok(shifted.shift_identity(-mean))
    }

    /// Check the local-unbiasedness invariant against (xi, H).
    pub fn verify(&self, xi: &SqrtState, h: &HermitianMatrix, tol: f64) -> Result<()> {
        let val = unbiasedness_value(&self.mean_adjusted(xi)?, xi, h)?;
        if (val - 1.0).abs() > tol {
            return Err(Error::NotLocallyUnbiased(val));
        }
        Ok(())
    }
}

fn unbiasedness_value(t_adj: &HermitianMatrix, xi: &SqrtState, h: &HermitianMatrix) -> Result<f64> {
    let d1 = derivatives_unitary(xi, h, 1)?;
    let x = t_adj.anticommutator_half(xi.as_herm())?.scale(2.0); // T~ xi + xi T~
    hs_inner(&x, &d1)
}

/// Construct the saturating locally unbiased estimator by solving
/// `T~ xi + xi T~ = c xi'` in the eigenbasis of xi, restricted to index
/// pairs with `lambda_j + lambda_k > 1e-10` (the pure-state limit keeps the
/// support/kernel cross blocks).
pub fn make_locally_unbiased(xi: &SqrtState, h: &HermitianMatrix) -> Result<EstimatorT> {
    if xi.dim() != h.dim() {
        return Err(Error::DimensionMismatch(xi.dim(), h.dim()));
    }
    let v = velocity_sq(xi, h)?;
    if v <= 1e-12 {
        return Err(Error::ZeroVelocity(v));
    }
    let d1 = derivatives_unitary(xi, h, 1)?;
    let (vals, vecs) = xi.as_herm().eigen()?;
    let n = xi.dim();
    // xi' in the eigenbasis of xi
    let d1_basis = vecs.adjoint() * d1.matrix() * &vecs;
    // weight captured by the admissible pairs; equals tr(xi' xi') unless
    // pairs are excluded with nonzero xi' entries (non-PSD xi edge case)
    let mut captured = 0.0;
    for j in 0..n {
        for k in 0..n {
            if vals[j] + vals[k] > PAIR_FLOOR {
                captured += d1_basis[(j, k)].norm_sqr();
            }
        }
    }
    if captured <= 1e-12 {
        return Err(Error::ZeroVelocity(captured));
    }
    let c = 1.0 / captured;
    let mut t_basis = d1_basis.clone();
    for j in 0..n {
        for k in 0..n {
            let s = vals[j] + vals[k];
            t_basis[(j, k)] = if s > PAIR_FLOOR {
                d1_basis[(j, k)] * crate::algebra::C64::new(c / s, 0.0)
            } else {
                crate::algebra::C64::new(0.0, 0.0)
            };
        }
    }
    let t_adj = HermitianMatrix::new(&vecs * t_basis * vecs.adjoint())?;
    let est = EstimatorT {
        matrix: t_adj,
        reference_time: 0.0,
    };
    est.verify(xi, h, THEOREM_SLACK)?;
    Ok(est)
}

/// Shift an estimator by a Hermitian perturbation re-projected onto the
/// local-unbiasedness constraint (and re-centered). Used to explore the
/// theorem suite away from the saturating estimator.
pub fn perturb_estimator(
    est: &EstimatorT,
    perturbation: &HermitianMatrix,
    xi: &SqrtState,
    h: &HermitianMatrix,
) -> Result<EstimatorT> {
    let d1 = derivatives_unitary(xi, h, 1)?;
    // constraint functional P -> tr[(P xi + xi P) xi'] = <P, xi xi' + xi' xi>
    let m = xi.as_herm().anticommutator_half(&d1)?.scale(2.0);
    let overlap = hs_inner(perturbation, &m)?;
    let norm = hs_inner(&m, &m)?;
    let projected = perturbation.sub(&m.scale(overlap / norm))?;
    let shifted = est.matrix.add(&projected)?;
    let out = EstimatorT {
        matrix: shifted,
        reference_time: est.reference_time,
    };
    out.verify(xi, h, THEOREM_SLACK)?;
    Ok(out)
}

/// Every variance/bound quantity for one (state, Hamiltonian, estimator)
/// triple. All inequalities are re-checked at construction.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    #[serde(rename = "var_T")]
    pub var_t: f64,
    #[serde(rename = "delta_T2")]
    pub delta_t2: f64,
    #[serde(rename = "var_H")]
    pub var_h: f64,
    #[serde(rename = "delta_H2")]
    pub delta_h2: f64,
    #[serde(rename = "skew_I")]
    pub skew_i: f64,
    pub velocity_sq: f64,
    pub crb_rhs: f64,
    pub luo_rhs: f64,
    pub symmetric_lhs: f64,
    pub symmetric_rhs: f64,
    pub curvature_gamma2: f64,
    pub third_order_rhs: f64,
}

/// Compute the full bound report and assert the inequality theorems within
/// [`THEOREM_SLACK`]. A violation is an implementation bug and fails with a
/// full dump of the offending scalars.
pub fn bound_report(xi: &SqrtState, h: &HermitianMatrix, est: &EstimatorT) -> Result<BoundReport> {
    est.verify(xi, h, 1e-9)?;
    let t_adj = est.mean_adjusted(xi)?;
    let rho = xi.square();

    let t2 = t_adj.anticommutator_half(&t_adj)?;
    let var_t = hs_inner(&t2, rho.as_herm())?;
    let txi = HermitianMatrix::new(xi.matrix() * t_adj.matrix() * xi.matrix())?;
    let delta_t2 = hs_inner(&t_adj, &txi)?;

    let skew_i = skew_form(xi, h)?;
    let v = velocity_sq(xi, h)?;
    let rho_mean_h = hs_inner(h, rho.as_herm())?;
    let h2 = h.anticommutator_half(h)?;
    let var_h = hs_inner(&h2, rho.as_herm())? - rho_mean_h * rho_mean_h;
    let delta_h2 = var_h - skew_i;

    let crb_rhs = 1.0 / (2.0 * v);
    // equivalent form through the skew decomposition
    let alt = 1.0 / (4.0 * (var_h - delta_h2));
    if (crb_rhs - alt).abs() > 1e-10 * crb_rhs.abs().max(1.0) {
        return Err(Error::CrossCheckFailed(format!(
            "crb_rhs {crb_rhs} vs skew form {alt}"
        )));
    }
    let luo_rhs = 1.0 / (4.0 * v);
    let symmetric_lhs = var_t * var_h;
    let symmetric_rhs = 0.25 + delta_t2 * delta_h2;

    let (_, gamma2) = acceleration_curvature(xi, h)?;
    let higher = higher_order_bound(xi, h, est, 3)?;
    let third_order_rhs = *higher.bounds_by_order.last().expect("order >= 1");

    let report = BoundReport {
        var_t,
        delta_t2,
        var_h,
        delta_h2,
        skew_i,
        velocity_sq: v,
        crb_rhs,
        luo_rhs,
        symmetric_lhs,
        symmetric_rhs,
        curvature_gamma2: gamma2,
        third_order_rhs,
    };
    check_theorems(&report)?;
    Ok(report)
}

fn check_theorems(r: &BoundReport) -> Result<()> {
    let mut failures = Vec::new();
    if r.var_t + r.delta_t2 < r.crb_rhs - THEOREM_SLACK {
        failures.push("Cramer-Rao: var_T + delta_T2 < 1/(2 tr(xi' xi'))");
    }
    if r.var_t < r.luo_rhs - THEOREM_SLACK {
        failures.push("Luo: var_T < 1/(4 tr(xi' xi'))");
    }
    if r.symmetric_lhs < r.symmetric_rhs - THEOREM_SLACK {
        failures.push("symmetric: var_T var_H < 1/4 + delta_T2 delta_H2");
    }
    if r.delta_t2 < -THEOREM_SLACK || r.var_t < r.delta_t2 - THEOREM_SLACK {
        failures.push("ordering: var_T >= delta_T2 >= 0");
    }
    if (r.var_h - r.skew_i - r.delta_h2).abs() > 1e-10 * r.var_h.abs().max(1.0) {
        failures.push("decomposition: var_H != skew_I + delta_H2");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::InequalityViolated(format!(
            "{}; report = {r:?}",
            failures.join(", ")
        )))
    }
}

/// Acceleration `alpha = xi'' - tr(xi'' xi) xi` and the curvature
/// `gamma^2 = 16 tr(alpha alpha) / tr(xi' xi')` of the unitary curve.
pub fn acceleration_curvature(
    xi: &SqrtState,
    h: &HermitianMatrix,
) -> Result<(HermitianMatrix, f64)> {
    let v = velocity_sq(xi, h)?;
    if v <= 1e-12 {
        return Err(Error::ZeroVelocity(v));
    }
    let d2 = derivatives_unitary(xi, h, 2)?;
    let radial = hs_inner(&d2, xi.as_herm())?;
    let alpha = d2.sub(&xi.as_herm().scale(radial))?;
    let gamma2 = 16.0 * hs_inner(&alpha, &alpha)? / v;
    Ok((alpha, gamma2))
}

/// Orthonormalized derivative directions of the curve, plus the paper-style
/// third-order direction (orthogonalized against xi' only) for cross-checks.
#[derive(Debug)]
pub struct DirectionSet {
    /// Orthonormal directions in the HS inner product, lowest order first.
    pub directions: Vec<HermitianMatrix>,
    /// Derivative order of each direction.
    pub orders: Vec<u32>,
    /// Orders dropped because the derivative was linearly dependent.
    pub dropped: Vec<u32>,
    /// `beta = xi''' - (tr(xi''' xi') / tr(xi' xi')) xi'`, not normalized and
    /// orthogonalized against xi' only.
    pub beta_raw: Option<HermitianMatrix>,
}

/// Gram-Schmidt the curve derivatives `{xi', xi'', xi'''}` up to `max_order`
/// in the HS inner product. Directions whose residual norm falls below 1e-12
/// of scale are dropped with notice in `dropped`.
///
/// Unlike the raw third-order direction beta (kept in `beta_raw`), the
/// order-3 element here is orthogonal to both xi' and xi'', so the
/// projection bound is valid term by term without cross terms.
pub fn bhattacharyya_directions(
    xi: &SqrtState,
    h: &HermitianMatrix,
    max_order: u32,
) -> Result<DirectionSet> {
    if !(2..=3).contains(&max_order) {
        return Err(Error::InvalidOrder(max_order));
    }
    let v = velocity_sq(xi, h)?;
    if v <= 1e-12 {
        return Err(Error::ZeroVelocity(v));
    }
    let mut directions: Vec<HermitianMatrix> = Vec::new();
    let mut orders = Vec::new();
    let mut dropped = Vec::new();

    let mut beta_raw = None;
    for order in 1..=max_order {
        let mut d = derivatives_unitary(xi, h, order)?;
        if order == 3 {
            let d1 = derivatives_unitary(xi, h, 1)?;
            let coeff = hs_inner(&d, &d1)? / hs_inner(&d1, &d1)?;
            beta_raw = Some(d.sub(&d1.scale(coeff))?);
        }
        let scale = d.hs_norm();
        for e in &directions {
            let overlap = hs_inner(&d, e)?;
            d = d.sub(&e.scale(overlap))?;
        }
        let norm = d.hs_norm();
        if norm <= 1e-12 * scale.max(1.0) {
            dropped.push(order);
            continue;
        }
        directions.push(d.scale(1.0 / norm));
        orders.push(order);
    }
    Ok(DirectionSet {
        directions,
        orders,
        dropped,
        beta_raw,
    })
}

/// Projection (Bhattacharyya-style) lower bounds on `var_T + delta_T2`.
#[derive(Debug, Clone, Serialize)]
pub struct HigherOrderReport {
    /// |grad t|^2 = 2 (var_T + delta_T2).
    pub grad_norm_sq: f64,
    /// Squared projections of grad t onto the orthonormal directions.
    pub terms: Vec<f64>,
    /// Derivative order behind each term.
    pub orders: Vec<u32>,
    /// Cumulative bound on var_T + delta_T2 after each term; nondecreasing.
    pub bounds_by_order: Vec<f64>,
    /// Orders dropped for linear dependence.
    pub dropped: Vec<u32>,
}

/// Form the gradient of `t(xi) = tr(xi T xi)/tr(xi xi)` at `tr(xi xi) = 1`,
/// check `|grad t|^2 = 2 (var_T + delta_T2)`, and project it onto the
/// orthonormalized derivative directions. Bessel's inequality makes the
/// cumulative bound monotone in the order; the order-1 term alone is the
/// Cramer-Rao bound.
pub fn higher_order_bound(
    xi: &SqrtState,
    h: &HermitianMatrix,
    est: &EstimatorT,
    max_order: u32,
) -> Result<HigherOrderReport> {
    let dirs = bhattacharyya_directions(xi, h, max_order.max(2))?;
    let t_adj = est.mean_adjusted(xi)?;
    let grad = t_adj.anticommutator_half(xi.as_herm())?.scale(2.0); // T~ xi + xi T~
    let grad_norm_sq = hs_inner(&grad, &grad)?;

    // cross-check against the variance pair
    let rho = xi.square();
    let t2 = t_adj.anticommutator_half(&t_adj)?;
    let var_t = hs_inner(&t2, rho.as_herm())?;
    let txi = HermitianMatrix::new(xi.matrix() * t_adj.matrix() * xi.matrix())?;
    let delta_t2 = hs_inner(&t_adj, &txi)?;
    let expect = 2.0 * (var_t + delta_t2);
    if (grad_norm_sq - expect).abs() > 1e-10 * expect.abs().max(1.0) {
        return Err(Error::CrossCheckFailed(format!(
            "|grad t|^2 = {grad_norm_sq} vs 2(var_T + delta_T2) = {expect}"
        )));
    }

    let mut terms = Vec::new();
    let mut orders = Vec::new();
    let mut bounds = Vec::new();
    let mut acc = 0.0;
    for (e, &order) in dirs.directions.iter().zip(&dirs.orders) {
        if order > max_order {
            break;
        }
        let proj = hs_inner(&grad, e)?;
        let term = proj * proj;
        acc += term;
        terms.push(term);
        orders.push(order);
        bounds.push(acc / 2.0);
    }
    if acc > grad_norm_sq + THEOREM_SLACK {
        return Err(Error::InequalityViolated(format!(
            "Bessel: sum of projections {acc} exceeds |grad|^2 {grad_norm_sq}"
        )));
    }
    Ok(HigherOrderReport {
        grad_norm_sq,
        terms,
        orders,
        bounds_by_order: bounds,
        dropped: dirs.dropped,
    })
}

/// Higher-order skew moments: with `H~ = H - tr(H xi^2) 1`,
/// `m_k = tr(H~^k xi^2) - tr(H~^{k-1} xi H~ xi)`.
///
/// `m_2` is the Wigner-Yanase skew information; for pure states the moments
/// reduce to the classical central moments of H in the state.
pub fn quantum_skew_moments(xi: &SqrtState, h: &HermitianMatrix, k: u32) -> Result<f64> {
    if !(2..=4).contains(&k) {
        return Err(Error::InvalidMomentOrder(k));
    }
    if xi.dim() != h.dim() {
        return Err(Error::DimensionMismatch(xi.dim(), h.dim()));
    }
    let mean = hs_inner(h, xi.square().as_herm())?;
    let hc = h.shift_identity(-mean);
    // H~^{k-1}
    let mut power = hc.matrix().clone();
    for _ in 0..(k - 2) {
        power = &power * hc.matrix();
    }
    let hk = &power * hc.matrix();
    let first = (&hk * xi.matrix() * xi.matrix()).trace().re;
    let second = (&power * xi.matrix() * hc.matrix() * xi.matrix()).trace().re;
    Ok(first - second)
}
