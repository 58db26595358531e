//! Closed-form 2x2 machinery: the (t, x, y, z) parameterization of Hermitian
//! square roots, the trace-sphere S^3 of radius 1/sqrt(2), enumeration of all
//! square-root preimages of a qubit density matrix, and the three-case
//! degeneracy classification.

use serde::Serialize;

use crate::algebra::{principal_sqrt, DensityMatrix, HermitianMatrix, SqrtState, C64, CMat};
use crate::error::{Error, Result};

/// Width of the tolerance band separating the three degeneracy cases.
pub const CASE_EPS: f64 = 1e-9;

const S3_TOL: f64 = 1e-12;
const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Point on the trace-sphere t^2 + x^2 + y^2 + z^2 = 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct S3Point {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl S3Point {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = t * t + x * x + y * y + z * z;
        if (norm2 - 0.5).abs() > S3_TOL {
            return Err(Error::InvalidSqrtNorm(2.0 * norm2));
        }
        Ok(Self { t, x, y, z })
    }

    pub fn negated(&self) -> Self {
        Self {
            t: -self.t,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self.t - other.t).abs() <= tol
            && (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && (self.z - other.z).abs() <= tol
    }
}

/// A qubit density matrix [[1/2 + a, b - ic], [b + ic, 1/2 - a]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitDensityParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QubitDensityParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let r2 = a * a + b * b + c * c;
        if r2 > 0.25 + S3_TOL {
            return Err(Error::InvalidBlochRadius(r2.sqrt()));
        }
        Ok(Self { a, b, c })
    }

    /// R = sqrt(a^2 + b^2 + c^2), in [0, 1/2].
    pub fn radius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c).sqrt()
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 + self.a, 0.0),
                C64::new(self.b, -self.c),
                C64::new(self.b, self.c),
                C64::new(0.5 - self.a, 0.0),
            ],
        );
        DensityMatrix::new(HermitianMatrix::new(m)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    FullyMixed,
    Pure,
    Generic,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseTag::FullyMixed => "fully_mixed",
            CaseTag::Pure => "pure",
            CaseTag::Generic => "generic",
        };
        f.write_str(s)
    }
}

/// Symbolic descriptor of the t = 0 continuum {x^2 + y^2 + z^2 = 1/2}:
/// a two-sphere of traceless square roots, never sampled as points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuumDescriptor {
    /// Radius of the two-sphere in (x, y, z); always 1/sqrt(2).
    pub radius: f64,
}

/// All Hermitian square-root preimages of one qubit density matrix.
#[derive(Debug, Clone, Serialize)]
pub struct PreimageSet {
    pub case_tag: CaseTag,
    pub isolated_points: Vec<S3Point>,
    pub continuum: Option<ContinuumDescriptor>,
}

/// Eq-style map: the square root [[t + z, x - iy], [x + iy, t - z]].
pub fn xi_from_s3(p: &S3Point) -> SqrtState {
    let m = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(p.t + p.z, 0.0),
            C64::new(p.x, -p.y),
            C64::new(p.x, p.y),
            C64::new(p.t - p.z, 0.0),
        ],
    );
    SqrtState::new(HermitianMatrix::new(m).expect("real-symmetric construction"))
        .expect("trace condition guarantees tr(xi^2) = 1")
}

/// Squaring map in coordinates: (a, b, c) = (2tz, 2tx, 2ty).
pub fn rho_from_s3(p: &S3Point) -> QubitDensityParams {
    QubitDensityParams::new(2.0 * p.t * p.z, 2.0 * p.t * p.x, 2.0 * p.t * p.y)
        .expect("squares of S3 points stay inside the Bloch ball")
}

/// Three-case classification with a tolerance band of width `CASE_EPS`.
pub fn classify(q: &QubitDensityParams) -> CaseTag {
    let r = q.radius();
    if r < CASE_EPS {
        CaseTag::FullyMixed
    } else if (r - 0.5).abs() < CASE_EPS {
        CaseTag::Pure
    } else {
        CaseTag::Generic
    }
}

/// Solve 4t^4 - 2t^2 + R^2 = 0 and enumerate every preimage on S^3.
///
/// Near-degenerate roots at the case boundaries are merged rather than
/// double-reported; the fully mixed continuum is returned as a descriptor.
pub fn sqrt_preimages(q: &QubitDensityParams) -> Result<PreimageSet> {
    let r = q.radius();
    if r > 0.5 + 1e-12 {
        return Err(Error::InvalidBlochRadius(r));
    }
    let case = classify(q);
    match case {
        CaseTag::FullyMixed => {
            let pole = S3Point::new(SQRT_HALF, 0.0, 0.0, 0.0)?;
            Ok(PreimageSet {
                case_tag: case,
                isolated_points: vec![pole, pole.negated()],
                continuum: Some(ContinuumDescriptor { radius: SQRT_HALF }),
            })
        }
        CaseTag::Pure => {
            // double root t = 1/2; points +-(1/2, b, c, a)
            let p = project_to_s3(0.5, q);
            Ok(PreimageSet {
                case_tag: case,
                isolated_points: vec![p, p.negated()],
                continuum: None,
            })
        }
        CaseTag::Generic => {
            let disc = (1.0 - 4.0 * r * r).max(0.0).sqrt();
            let t_outer = ((1.0 + disc) / 4.0).sqrt();
            let t_inner = ((1.0 - disc) / 4.0).sqrt();
            let mut pts = Vec::with_capacity(4);
            for t in [t_outer, t_inner] {
                let p = project_to_s3(t, q);
                pts.push(p);
                pts.push(p.negated());
            }
            Ok(PreimageSet {
                case_tag: case,
                isolated_points: pts,
                continuum: None,
            })
        }
    }
}

/// (x, y, z) = (b, c, a) / (2t), renormalized onto S^3 to absorb roundoff.
fn project_to_s3(t: f64, q: &QubitDensityParams) -> S3Point {
    let x = q.b / (2.0 * t);
    let y = q.c / (2.0 * t);
    let z = q.a / (2.0 * t);
    // rescale the spatial part so the trace condition holds exactly
    let want = (0.5 - t * t).max(0.0);
    let have = x * x + y * y + z * z;
    let s = if have > 0.0 { (want / have).sqrt() } else { 0.0 };
    S3Point {
        t,
        x: x * s,
        y: y * s,
        z: z * s,
    }
}

impl PreimageSet {
    /// True when `p` coincides with one of the isolated points within `tol`.
    pub fn contains(&self, p: &S3Point, tol: f64) -> bool {
        self.isolated_points.iter().any(|q| q.close_to(p, tol))
    }

    /// The preimage matching the principal (PSD) square root, if any.
    pub fn principal_member(&self, rho: &DensityMatrix, tol: f64) -> Result<Option<S3Point>> {
        let principal = principal_sqrt(rho)?;
        for p in &self.isolated_points {
            let xi = xi_from_s3(p);
            let diff = xi.as_herm().sub(principal.as_herm())?;
            if diff.hs_norm() <= tol {
                return Ok(Some(*p));
            }
        }
        Ok(None)
    }
}

/// One row of the covering-space mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub radius: f64,
    pub case_tag: CaseTag,
    /// Indices of the other mesh rows squaring to the same density matrix.
    pub partners: Vec<usize>,
}

/// Sample the covering sphere S^3 by latitudes and record, for every point,
/// which other sampled points square to the same density matrix.
///
/// The latitude grid is closed under t -> -t and under the partner map
/// t -> sqrt(1/2 - t^2), and the angular grid is closed under the antipodal
/// map, so every preimage of a sampled point is itself a sampled point.
pub fn figure1_mesh(resolution: usize) -> Result<Vec<MeshRow>> {
    if resolution < 8 {
        return Err(Error::ResolutionTooSmall(resolution));
    }
    // round up to a multiple of 4: keeps t = +-1/2 and the antipodal map on-grid
    let res = resolution.div_ceil(4) * 4;

    let mut rows: Vec<MeshRow> = Vec::new();
    // latitudes t = cos(pi i / (2 res)) / sqrt(2), i = 0..=2 res
    for i in 0..=(2 * res) {
        let psi = std::f64::consts::PI * i as f64 / (2.0 * res as f64);
        let t = psi.cos() * SQRT_HALF;
        let r2 = (0.5 - t * t).max(0.0);
        let r = r2.sqrt();
        if r <= 1e-12 {
            push_row(&mut rows, t, 0.0, 0.0, 0.0);
            continue;
        }
        // angular grid closed under (theta, phi) -> (pi - theta, phi + pi)
        for j in 0..=res {
            let theta = std::f64::consts::PI * j as f64 / res as f64;
            let (st, ct) = theta.sin_cos();
            if j == 0 || j == res {
                push_row(&mut rows, t, 0.0, 0.0, r * ct);
                continue;
            }
            for k in 0..res {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / res as f64;
                let (sp, cp) = phi.sin_cos();
                push_row(&mut rows, t, r * st * cp, r * st * sp, r * ct);
            }
        }
    }

    assign_partners(&mut rows);
    Ok(rows)
}

fn push_row(rows: &mut Vec<MeshRow>, t: f64, x: f64, y: f64, z: f64) {
    let q = QubitDensityParams {
        a: 2.0 * t * z,
        b: 2.0 * t * x,
        c: 2.0 * t * y,
    };
    rows.push(MeshRow {
        t,
        x,
        y,
        z,
        radius: q.radius(),
        case_tag: classify(&q),
        partners: Vec::new(),
    });
}

/// Group rows by (a, b, c) rounded to a 1e-9 grid; everything in a group is a
/// preimage of the same density matrix.
fn assign_partners(rows: &mut [MeshRow]) {
    use std::collections::HashMap;
    let key = |v: f64| (v / 1e-9).round() as i64;
    let mut groups: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (idx, row) in rows.iter().enumerate() {
        let k = (
            key(2.0 * row.t * row.z),
            key(2.0 * row.t * row.x),
            key(2.0 * row.t * row.y),
        );
        groups.entry(k).or_default().push(idx);
    }
    for members in groups.values() {
        for &i in members {
            rows[i].partners = members.iter().copied().filter(|&j| j != i).collect();
        }
    }
}

/// CSV with header `t,x,y,z,R,case,partners` (partners semicolon-separated).
pub fn write_mesh_csv<W: std::io::Write>(rows: &[MeshRow], mut w: W) -> Result<()> {
    writeln!(w, "t,x,y,z,R,case,partners")?;
    for row in rows {
        let partners = row
            .partners
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.t, row.x, row.y, row.z, row.radius, row.case_tag, partners
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_s3(rng: &mut ChaCha12Rng) -> S3Point {
        loop {
            let v: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v.iter().map(|a| a * a).sum::<f64>()).sqrt();
            if n > 1e-3 {
                let s = SQRT_HALF / n;
                return S3Point::new(v[0] * s, v[1] * s, v[2] * s, v[3] * s).unwrap();
            }
        }
    }

    #[test]
    fn xi_from_s3_pole_is_scaled_identity() {
        let xi = xi_from_s3(&S3Point::new(SQRT_HALF, 0.0, 0.0, 0.0).unwrap());
        assert_abs_diff_eq!(xi.matrix()[(0, 0)].re, SQRT_HALF, epsilon = 1e-14);
        assert_abs_diff_eq!(xi.matrix()[(1, 1)].re, SQRT_HALF, epsilon = 1e-14);
        assert_abs_diff_eq!(xi.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn xi_from_s3_pure_projector() {
        let xi = xi_from_s3(&S3Point::new(0.5, 0.0, 0.0, 0.5).unwrap());
        assert_abs_diff_eq!(xi.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(xi.matrix()[(1, 1)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn xi_from_s3_equator_member_squares_to_identity() {
        let xi = xi_from_s3(&S3Point::new(0.0, SQRT_HALF, 0.0, 0.0).unwrap());
        let sq = xi.square();
        assert_abs_diff_eq!(sq.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sq.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_from_s3_matches_matrix_square() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..100 {
            let p = random_s3(&mut rng);
            let q = rho_from_s3(&p);
            let direct = xi_from_s3(&p).square();
            let viaq = q.density().unwrap();
            let diff = direct.as_herm().sub(viaq.as_herm()).unwrap();
            assert!(diff.hs_norm() <= 1e-12);
        }
    }

    #[test]
    fn antipodal_pair_same_density() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let p = random_s3(&mut rng);
        let q1 = rho_from_s3(&p);
        let q2 = rho_from_s3(&p.negated());
        assert_abs_diff_eq!(q1.a, q2.a, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.b, q2.b, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.c, q2.c, epsilon = 1e-15);
    }

    #[test]
    fn equator_maps_to_fully_mixed() {
        let p = S3Point::new(0.0, 0.3, 0.4, (0.5f64 - 0.25).sqrt()).unwrap();
        let q = rho_from_s3(&p);
        assert_eq!((q.a, q.b, q.c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rho_from_s3_pure_point() {
        let q = rho_from_s3(&S3Point::new(0.5, 0.0, 0.0, 0.5).unwrap());
        assert_abs_diff_eq!(q.a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.b, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.c, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn classify_cases() {
        assert_eq!(
            classify(&QubitDensityParams::new(0.0, 0.0, 0.0).unwrap()),
            CaseTag::FullyMixed
        );
        assert_eq!(
            classify(&QubitDensityParams::new(0.5, 0.0, 0.0).unwrap()),
            CaseTag::Pure
        );
        assert_eq!(
            classify(&QubitDensityParams::new(0.3, 0.0, 0.0).unwrap()),
            CaseTag::Generic
        );
    }

    #[test]
    fn preimages_fully_mixed() {
        let set = sqrt_preimages(&QubitDensityParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(set.case_tag, CaseTag::FullyMixed);
        assert_eq!(set.isolated_points.len(), 2);
        assert!(set.continuum.is_some());
        assert!(set.contains(&S3Point::new(SQRT_HALF, 0.0, 0.0, 0.0).unwrap(), 1e-12));
        assert!(set.contains(&S3Point::new(-SQRT_HALF, 0.0, 0.0, 0.0).unwrap(), 1e-12));
    }

    #[test]
    fn preimages_pure() {
        let set = sqrt_preimages(&QubitDensityParams::new(0.5, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(set.case_tag, CaseTag::Pure);
        assert_eq!(set.isolated_points.len(), 2);
        assert!(set.continuum.is_none());
        assert!(set.contains(&S3Point::new(0.5, 0.0, 0.0, 0.5).unwrap(), 1e-12));
        assert!(set.contains(&S3Point::new(-0.5, 0.0, 0.0, -0.5).unwrap(), 1e-12));
    }

    #[test]
    fn preimages_generic_quarter() {
        // oracle: substitute the quartic roots and verify xi^2 = rho
        let q = QubitDensityParams::new(0.25, 0.0, 0.0).unwrap();
        let set = sqrt_preimages(&q).unwrap();
        assert_eq!(set.case_tag, CaseTag::Generic);
        assert_eq!(set.isolated_points.len(), 4);
        let disc = (3.0f64).sqrt() / 2.0;
        let expected_ts = [
            ((1.0 + disc) / 4.0).sqrt(),
            ((1.0 - disc) / 4.0).sqrt(),
        ];
        for t in expected_ts {
            assert!(
                set.isolated_points.iter().any(|p| (p.t - t).abs() < 1e-12),
                "missing root t = {t}"
            );
            assert!(
                set.isolated_points.iter().any(|p| (p.t + t).abs() < 1e-12),
                "missing root t = -{t}"
            );
        }
        let rho = q.density().unwrap();
        for p in &set.isolated_points {
            let back = xi_from_s3(p).square();
            let diff = back.as_herm().sub(rho.as_herm()).unwrap();
            assert!(diff.hs_norm() <= 1e-10);
        }
    }

    #[test]
    fn preimages_reject_invalid_radius() {
        let q = QubitDensityParams {
            a: 0.6,
            b: 0.0,
            c: 0.0,
        };
        assert!(matches!(
            sqrt_preimages(&q),
            Err(Error::InvalidBlochRadius(_))
        ));
    }

    #[test]
    fn quartic_residual_bounded() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let p = random_s3(&mut rng);
            let q = rho_from_s3(&p);
            let r2 = q.radius() * q.radius();
            let set = sqrt_preimages(&q).unwrap();
            for pt in &set.isolated_points {
                let t = pt.t;
                let residual = 4.0 * t.powi(4) - 2.0 * t * t + r2;
                assert!(residual.abs() <= 1e-12, "residual {residual}");
            }
        }
    }

    #[test]
    fn cover_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut done = 0;
        while done < 10_000 {
            let p = random_s3(&mut rng);
            if p.t.abs() <= 1e-3 {
                continue;
            }
            done += 1;
            let set = sqrt_preimages(&rho_from_s3(&p)).unwrap();
            assert!(set.contains(&p, 1e-9), "missing preimage {p:?}");
        }
    }

    #[test]
    fn antipodal_closure() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = random_s3(&mut rng);
            let set = sqrt_preimages(&rho_from_s3(&p)).unwrap();
            for pt in &set.isolated_points {
                assert!(set.contains(&pt.negated(), 1e-12));
            }
        }
    }

    #[test]
    fn principal_root_agreement() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = random_s3(&mut rng);
            let q = rho_from_s3(&p);
            if classify(&q) == CaseTag::FullyMixed {
                continue;
            }
            let set = sqrt_preimages(&q).unwrap();
            let rho = q.density().unwrap();
            let matches: Vec<_> = set
                .isolated_points
                .iter()
                .filter(|pt| {
                    let xi = xi_from_s3(pt);
                    let principal = principal_sqrt(&rho).unwrap();
                    xi.as_herm().sub(principal.as_herm()).unwrap().hs_norm() <= 1e-9
                })
                .collect();
            assert_eq!(matches.len(), 1, "expected exactly one PSD preimage");
        }
    }

    #[test]
    fn mesh_partner_sets_are_consistent() {
        let rows = figure1_mesh(8).unwrap();
        for row in &rows {
            let q = (2.0 * row.t * row.z, 2.0 * row.t * row.x, 2.0 * row.t * row.y);
            for &j in &row.partners {
                let other = &rows[j];
                let qo = (
                    2.0 * other.t * other.z,
                    2.0 * other.t * other.x,
                    2.0 * other.t * other.y,
                );
                assert!((q.0 - qo.0).abs() <= 1e-9);
                assert!((q.1 - qo.1).abs() <= 1e-9);
                assert!((q.2 - qo.2).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mesh_pure_latitudes_tagged_pure() {
        let rows = figure1_mesh(8).unwrap();
        let mut seen = 0;
        for row in &rows {
            if (row.t.abs() - 0.5).abs() < 1e-12 {
                let r2 = row.x * row.x + row.y * row.y + row.z * row.z;
                assert_abs_diff_eq!(r2, 0.25, epsilon = 1e-12);
                assert_eq!(row.case_tag, CaseTag::Pure);
                seen += 1;
            }
        }
        assert!(seen > 0, "mesh must include the t = 1/2 latitude");
    }

    #[test]
    fn mesh_equator_partners_with_both_poles() {
        let rows = figure1_mesh(8).unwrap();
        let poles: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| (r.t.abs() - SQRT_HALF).abs() < 1e-12)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(poles.len(), 2);
        for (i, row) in rows.iter().enumerate() {
            if row.t.abs() < 1e-12 {
                for &p in &poles {
                    assert!(row.partners.contains(&p), "equator row {i} misses pole {p}");
                }
            }
        }
    }

    #[test]
    fn mesh_generic_rows_have_three_partners() {
        let rows = figure1_mesh(8).unwrap();
        let mut checked = 0;
        for row in &rows {
            if row.case_tag == CaseTag::Generic && row.radius > 1e-3 && (row.radius - 0.5).abs() > 1e-3
            {
                assert_eq!(row.partners.len(), 3, "row {row:?}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn mesh_rejects_small_resolution() {
        assert!(matches!(
            figure1_mesh(4),
            Err(Error::ResolutionTooSmall(4))
        ));
    }

    #[test]
    fn csv_header_and_shape() {
        let rows = figure1_mesh(8).unwrap();
        let mut buf = Vec::new();
        write_mesh_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x,y,z,R,case,partners");
        assert_eq!(lines.count(), rows.len());
    }
}
