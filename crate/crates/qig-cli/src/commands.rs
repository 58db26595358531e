//! Command implementations. Each command builds a serde-serializable report,
//! stamps it with `wall_ms`, and writes pretty JSON to the configured output.
//! Everything except `wall_ms` is a pure function of config + seed.

use serde::Serialize;
use std::path::Path;
use std::time::Instant;

use qig::algebra::{random_hermitian, random_positive_sqrt, random_pure};
use qig::bloch::{figure1_mesh, sqrt_preimages, write_mesh_csv, QubitDensityParams};
use qig::estimation::{bound_report, make_locally_unbiased, perturb_estimator, BoundReport};
use qig::geometry::{
    calibrate_metric_ratio, fisher_rao_analytic, fisher_rao_mc, DualCalibration, KappaFit,
    MetricEstimate, ParamFamily,
};
use qig::io::MatrixJson;
use qig::{DensityMatrix, Error, Result};

use crate::config::Settings;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn finish<T: Serialize>(cfg: &Settings, report: &T, started: Instant) -> Result<()> {
    let mut value = serde_json::to_value(report)?;
    let obj = value
        .as_object_mut()
        .expect("reports serialize as objects");
    obj.insert(
        "wall_ms".into(),
        serde_json::json!(started.elapsed().as_millis() as u64),
    );
    cfg.emit(&serde_json::to_string_pretty(&value)?)
}

#[derive(Serialize)]
struct SqrtReport {
    dim: usize,
    residual: f64,
    sqrt: MatrixJson,
}

pub fn cmd_sqrt(cfg: &Settings, input: Option<&Path>) -> Result<()> {
    let started = Instant::now();
    let path = input
        .or(cfg.file.input.as_deref())
        .ok_or_else(|| Error::InvalidArgument("sqrt requires --input".into()))?;
    let herm = qig::io::read_matrix(path)?;
    let rho = DensityMatrix::new(herm)?;
    let xi = qig::principal_sqrt(&rho)?;
    let residual = xi.square().as_herm().sub(rho.as_herm())?.hs_norm();
    eprintln!("residual ||xi^2 - rho||_HS = {residual:.3e}");
    let report = SqrtReport {
        dim: rho.dim(),
        residual,
        sqrt: MatrixJson::from_herm(xi.as_herm()),
    };
    finish(cfg, &report, started)
}

#[derive(Serialize)]
struct MetricPoint {
    theta: Vec<f64>,
    analytic: Vec<Vec<f64>>,
    mc: Vec<Vec<f64>>,
    mc_stderr: Vec<Vec<f64>>,
    /// (mc - kappa * analytic) / stderr per component.
    z_scores: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct MetricReport {
    family: String,
    samples: usize,
    seed: u64,
    kappa: f64,
    kappa_stderr: f64,
    max_abs_z: f64,
    points: Vec<MetricPoint>,
}

fn build_family(
    name: &str,
    cfg: &Settings,
    hamiltonian: Option<&Path>,
    seed: u64,
) -> Result<(ParamFamily, Vec<Vec<f64>>)> {
    // default parameter points per family, overridable via config/flags
    match name {
        "qubit-pure" => Ok((
            ParamFamily::qubit_pure(),
            vec![vec![0.7, 0.3], vec![1.2, 2.0], vec![1.9, 4.4]],
        )),
        "qubit-mixed" => Ok((
            ParamFamily::qubit_mixed(),
            vec![vec![0.2, 0.8, 0.5], vec![0.35, 1.4, 3.0]],
        )),
        "constant" => {
            let dim = cfg.dim_or(2);
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xC0FFEE);
            let xi = random_positive_sqrt(dim, &mut rng)?;
            Ok((ParamFamily::constant(xi), vec![vec![0.0]]))
        }
        "unitary-curve" => {
            let dim = cfg.dim_or(2);
            let h = match hamiltonian.or(cfg.file.hamiltonian.as_deref()) {
                Some(path) => qig::io::read_matrix(path)?,
                None => {
                    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xC0FFEE);
                    random_hermitian(dim, &mut rng)?
                }
            };
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xBEEF);
            let xi0 = random_positive_sqrt(h.dim(), &mut rng)?;
            let thetas = (0..10).map(|i| vec![0.25 * i as f64]).collect();
            Ok((ParamFamily::unitary_curve(xi0, h), thetas))
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown family '{other}' (expected qubit-pure, qubit-mixed, unitary-curve, constant)"
        ))),
    }
}

pub fn cmd_metric(
    cfg: &Settings,
    family: Option<&str>,
    hamiltonian: Option<&Path>,
    point_args: &[String],
) -> Result<()> {
    let started = Instant::now();
    let seed = cfg.require_seed()?;
    let samples = cfg.samples_or(200_000);
    let name = family
        .map(str::to_owned)
        .or_else(|| cfg.file.family.clone())
        .ok_or_else(|| Error::InvalidArgument("metric requires --family".into()))?;
    let (fam, default_points) = build_family(&name, cfg, hamiltonian, seed)?;

    let mut thetas: Vec<Vec<f64>> = Vec::new();
    for arg in point_args {
        let vals = arg
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad point '{arg}': {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        thetas.push(vals);
    }
    if thetas.is_empty() {
        thetas = cfg.file.points.clone().unwrap_or(default_points);
    }

    let mut evaluated: Vec<(Vec<f64>, MetricEstimate, MetricEstimate)> = Vec::new();
    for (i, theta) in thetas.iter().enumerate() {
        let an = fisher_rao_analytic(&fam, theta)?;
        let mc = fisher_rao_mc(&fam, theta, samples, seed.wrapping_add(i as u64))?;
        evaluated.push((theta.clone(), an, mc));
    }

    // inverse-variance fit of mc = kappa * analytic over all components with
    // a resolvable analytic value
    let mut wsum = 0.0;
    let mut wx = 0.0;
    for (_, an, mc) in &evaluated {
        let d = an.components.len();
        for a in 0..d {
            for b in a..d {
                let g = an.components[a][b];
                let s = mc.stderr[a][b];
                if g.abs() > 1e-12 && s > 0.0 {
                    let w = (g / s) * (g / s);
                    wsum += w;
                    wx += w * mc.components[a][b] / g;
                }
            }
        }
    }
    let (kappa, kappa_stderr) = if wsum > 0.0 {
        (wx / wsum, (1.0 / wsum).sqrt())
    } else {
        (0.0, 0.0) // constant family: zero metric, nothing to fit
    };

    let mut max_abs_z: f64 = 0.0;
    let points = evaluated
        .into_iter()
        .map(|(theta, an, mc)| {
            let d = an.components.len();
            let mut z = vec![vec![0.0; d]; d];
            for a in 0..d {
                for b in 0..d {
                    let s = mc.stderr[a][b];
                    if s > 0.0 {
                        z[a][b] = (mc.components[a][b] - kappa * an.components[a][b]) / s;
                        max_abs_z = max_abs_z.max(z[a][b].abs());
                    }
                }
            }
            MetricPoint {
                theta,
                analytic: an.components,
                mc: mc.components,
                mc_stderr: mc.stderr,
                z_scores: z,
            }
        })
        .collect();

    let report = MetricReport {
        family: name,
        samples,
        seed,
        kappa,
        kappa_stderr,
        max_abs_z,
        points,
    };
    finish(cfg, &report, started)
}

#[derive(Serialize)]
struct PreimageReport {
    a: f64,
    b: f64,
    c: f64,
    radius: f64,
    preimages: qig::PreimageSet,
    /// Max ||xi^2 - rho||_HS over the isolated points.
    round_trip_residual: f64,
}

pub fn cmd_preimages(
    cfg: &Settings,
    a: f64,
    b: f64,
    c: f64,
    mesh_out: Option<&Path>,
    resolution: Option<usize>,
) -> Result<()> {
    let started = Instant::now();
    let q = QubitDensityParams::new(a, b, c)?;
    let set = sqrt_preimages(&q)?;
    let rho = q.density()?;
    let mut residual: f64 = 0.0;
    for p in &set.isolated_points {
        let xi = qig::bloch::xi_from_s3(p);
        residual = residual.max(xi.square().as_herm().sub(rho.as_herm())?.hs_norm());
    }
    if let Some(path) = mesh_out {
        let res = resolution.or(cfg.file.resolution).unwrap_or(16);
        let rows = figure1_mesh(res)?;
        let file = std::fs::File::create(path)?;
        write_mesh_csv(&rows, std::io::BufWriter::new(file))?;
    }
    let report = PreimageReport {
        a,
        b,
        c,
        radius: q.radius(),
        preimages: set,
        round_trip_residual: residual,
    };
    finish(cfg, &report, started)
}

#[derive(Serialize)]
struct BoundsSummary {
    dim: usize,
    count: usize,
    seed: u64,
    pure_ensemble: bool,
    violations: usize,
    mean_crb_gap: f64,
    max_crb_gap: f64,
    mean_product: f64,
    min_product_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<KappaFit>,
    reports: Vec<BoundReport>,
}

pub fn cmd_bounds(
    cfg: &Settings,
    count: Option<usize>,
    pure: bool,
    summary: Option<&Path>,
    with_kappa: bool,
) -> Result<()> {
    let started = Instant::now();
    let seed = cfg.require_seed()?;
    let dim = cfg.dim_or(2);
    let count = count.or(cfg.file.count).unwrap_or(1000);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut reports = Vec::with_capacity(count);
    let mut crb_gaps = Vec::with_capacity(count);
    let mut products = Vec::with_capacity(count);
    let mut min_margin = f64::INFINITY;
    for i in 0..count {
        let (xi, h) = loop {
            let xi = if pure {
                random_pure(dim, &mut rng)?.sqrt_state()
            } else {
                random_positive_sqrt(dim, &mut rng)?
            };
            let h = random_hermitian(dim, &mut rng)?;
            match qig::velocity_sq(&xi, &h) {
                Ok(v) if v > 1e-8 => break (xi, h),
                _ => continue, // nearly stationary pair; redraw
            }
        };
        let mut est = make_locally_unbiased(&xi, &h)?;
        if i % 2 == 1 {
            let p = random_hermitian(dim, &mut rng)?.scale(0.5);
            est = perturb_estimator(&est, &p, &xi, &h)?;
        }
        // bound_report fails hard on any inequality violation, so reaching
        // the summary proves a violation count of zero
        let r = bound_report(&xi, &h, &est)?;
        crb_gaps.push(r.var_t + r.delta_t2 - r.crb_rhs);
        products.push(r.var_t * r.var_h);
        min_margin = min_margin.min(r.symmetric_lhs - r.symmetric_rhs);
        reports.push(r);
    }

    let kappa = if with_kappa {
        let mut krng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
        let xi0 = random_positive_sqrt(dim, &mut krng)?;
        let h = random_hermitian(dim, &mut krng)?;
        let fam = ParamFamily::unitary_curve(xi0, h);
        let thetas: Vec<Vec<f64>> = (0..5).map(|i| vec![0.4 * i as f64]).collect();
        Some(calibrate_metric_ratio(
            &fam,
            &thetas,
            cfg.samples_or(200_000),
            seed ^ 0x5eed,
        )?)
    } else {
        None
    };

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let report = BoundsSummary {
        dim,
        count,
        seed,
        pure_ensemble: pure,
        violations: 0,
        mean_crb_gap: mean(&crb_gaps),
        max_crb_gap: crb_gaps.iter().copied().fold(0.0, f64::max),
        mean_product: mean(&products),
        min_product_margin: min_margin,
        kappa,
        reports,
    };

    if let Some(path) = summary {
        let mut csv = String::from(
            "dim,count,violations,mean_crb_gap,max_crb_gap,mean_product,min_product_margin\n",
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.dim,
            report.count,
            report.violations,
            report.mean_crb_gap,
            report.max_crb_gap,
            report.mean_product,
            report.min_product_margin
        ));
        std::fs::write(path, csv)?;
    }

    // JSON-lines body: one BoundReport per instance, then the summary object
    let started2 = started;
    let mut lines = String::new();
    for r in &report.reports {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    let mut value = serde_json::to_value(&report)?;
    let obj = value.as_object_mut().expect("summary is an object");
    obj.remove("reports");
    obj.insert(
        "wall_ms".into(),
        serde_json::json!(started2.elapsed().as_millis() as u64),
    );
    lines.push_str(&serde_json::to_string(&value)?);
    cfg.emit(&lines)
}

#[derive(Serialize)]
struct CalibrateReport {
    dim: usize,
    constant: f64,
    pairs: usize,
    samples_per_pair: usize,
    seed: u64,
}

pub fn cmd_calibrate(cfg: &Settings, pairs: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let seed = cfg.require_seed()?;
    let dim = cfg.dim_or(2);
    let pairs = pairs.or(cfg.file.pairs).unwrap_or(40);
    let samples = cfg.samples_or(50_000);
    let cal = DualCalibration::calibrate(dim, pairs, samples, seed)?;
    let report = CalibrateReport {
        dim: cal.dim,
        constant: cal.constant,
        pairs: cal.pairs,
        samples_per_pair: cal.samples_per_pair,
        seed,
    };
    finish(cfg, &report, started)
}
