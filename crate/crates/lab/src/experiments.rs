//! One function per experiment. Each returns its output files and a JSON
//! summary for the manifest.

use std::f64::consts::TAU;

use anosov_core::chart::Domain;
use anosov_core::cone::{
    estimate_splitting_with, lyapunov_exponent_with, scan_uniform_invariance, ConeScan,
    ConeScanConfig,
};
use anosov_core::embedding::mesh::{export_mesh, MeshResolution};
use anosov_core::embedding::{
    convergence_report, embedded_genus, embedded_model, embedded_torus, periodicity_check,
    EmbeddingParams,
};
use anosov_core::flow::{Flow, TangentState};
use anosov_core::metrics::BumpPerturbation;
use anosov_core::model::horizon::finite_horizon_bound;
use anosov_core::model::{
    assemble_with, default_tau, gauss_bonnet_integral, quotient_genus, ModelSurface,
};
use anosov_core::surfaces::flat_torus;
use anosov_core::{Atlas, ChartPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, LabConfig, Surface};
use crate::output::{sci, Outputs, Table};
use crate::LabError;

/// Margins this close to zero count as "on the boundary".
pub const ZERO_MARGIN: f64 = 1e-12;
/// Violations copied into `cone_scan.json`; the CSV has all samples.
const VIOLATION_EXAMPLES: usize = 16;

pub fn run_experiment(cfg: &LabConfig) -> Result<(Outputs, Value), LabError> {
    let mut out = Outputs::default();
    let summary = match cfg.experiment {
        Experiment::Horizon => horizon(cfg, &mut out)?,
        Experiment::ModelScan => model_scan(cfg, &mut out)?,
        Experiment::Splitting => splitting(cfg, &mut out)?,
        Experiment::Lyapunov => lyapunov(cfg, &mut out)?,
        Experiment::Conjugate => conjugate(cfg, &mut out)?,
        Experiment::Convergence => convergence(cfg, &mut out)?,
        Experiment::Periodicity => periodicity(cfg, &mut out)?,
        Experiment::Mesh => mesh(cfg, &mut out)?,
        Experiment::GaussBonnet => gauss_bonnet(cfg, &mut out)?,
        Experiment::PerturbationScan => perturbation_scan(cfg, &mut out)?,
    };
    Ok((out, summary))
}

struct Built {
    atlas: Atlas,
    model: Option<ModelSurface>,
}

fn embedding_params(cfg: &LabConfig) -> Result<EmbeddingParams, LabError> {
    cfg.embedding
        .schedule
        .params(cfg.embedding.s)
        .map_err(LabError::Construction)
}

fn build_surface(cfg: &LabConfig) -> Result<Built, LabError> {
    let lattice = cfg.lattice.lattice();
    match cfg.surface {
        Surface::Model => {
            let model = assemble_with(&lattice, Some(cfg.quotient.spec()), cfg.profile.params())
                .map_err(LabError::Construction)?;
            Ok(Built {
                atlas: model.atlas.clone(),
                model: Some(model),
            })
        }
        Surface::FlatTorus => Ok(Built {
            atlas: flat_torus(1.0, 1.0),
            model: None,
        }),
        Surface::EmbeddedTorus => Ok(Built {
            atlas: embedded_torus(&embedding_params(cfg)?, cfg.embedding.height),
            model: None,
        }),
        Surface::EmbeddedModel => {
            let params = embedding_params(cfg)?;
            let (model, atlas) = embedded_model(&lattice, &params, cfg.profile.params())
                .map_err(LabError::Construction)?;
            Ok(Built {
                atlas,
                model: Some(model),
            })
        }
    }
}

/// The configured scan time, or 1.5 times the horizon bound of the cores.
fn scan_tau(cfg: &LabConfig) -> f64 {
    cfg.scan.tau.unwrap_or_else(|| {
        let sampling = cfg.horizon.sampling(cfg.rng_seed);
        default_tau(&cfg.lattice.lattice(), &cfg.profile.params(), &sampling).1
    })
}

fn scan_config(cfg: &LabConfig, tau: f64) -> ConeScanConfig {
    ConeScanConfig {
        grid: cfg.scan.grid(),
        direction: cfg.scan.direction,
        flow: cfg.flow.options(),
        ..ConeScanConfig::new(tau)
    }
}

/// A uniformly distributed phase point. Sample `index` draws from its own
/// ChaCha stream, so results do not depend on evaluation order.
pub fn sample_state(atlas: &Atlas, seed: u64, index: u64) -> Result<TangentState, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let charts = atlas.charts();
    let chart = &charts[rng.gen_range(0..charts.len())];
    for _ in 0..10_000 {
        let x = match &chart.domain {
            Domain::Planar { lo, hi, .. } => {
                [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])]
            }
            Domain::Revolution { t_lo, t_hi } => {
                [rng.gen_range(*t_lo..*t_hi), rng.gen_range(0.0..TAU)]
            }
        };
        let p = ChartPoint::new(chart.id, x);
        if atlas.contains(&p).map_err(LabError::Numerical)? {
            return TangentState::with_angle(atlas, p, rng.gen_range(0.0..TAU))
                .map_err(LabError::Numerical);
        }
    }
    Err(LabError::Construction(
        anosov_core::Error::InvalidParameter(format!(
            "chart {} has no sampleable points",
            chart.id
        )),
    ))
}

fn horizon(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let lattice = cfg.lattice.lattice();
    let sampling = cfg.horizon.sampling(cfg.rng_seed);
    let report = finite_horizon_bound(&lattice, &sampling);
    let (cores, tau) = default_tau(&lattice, &cfg.profile.params(), &sampling);
    let record = json!({
        "lattice": report,
        "cores": cores,
        "collar": cfg.profile.collar,
        "tau": tau,
    });
    out.add_json("horizon.json", &record);
    Ok(json!({
        "violated": report.violated,
        "bound_t": report.bound_t,
        "cores_violated": cores.violated,
        "cores_bound_t": cores.bound_t,
        "tau": tau,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub surface: Surface,
    pub verdict: &'static str,
    /// Largest angle ratio over the grid.
    pub c_star: f64,
    pub min_edge_margin: f64,
    pub tau: f64,
    pub n_samples: usize,
    pub n_violations: usize,
    pub violation_fraction: f64,
    pub zero_margin_fraction: f64,
    pub example_violations: Vec<anosov_core::cone::Violation>,
}

pub fn summarize_scan(surface: Surface, scan: &ConeScan) -> ScanSummary {
    let r = &scan.report;
    let n = r.n_samples.max(1) as f64;
    let zero = scan
        .samples
        .iter()
        .filter(|s| s.margin.abs() <= ZERO_MARGIN)
        .count();
    ScanSummary {
        surface,
        verdict: r.verdict(),
        c_star: r.max_delta_theta,
        min_edge_margin: r.min_edge_margin,
        tau: r.tau,
        n_samples: r.n_samples,
        n_violations: r.violations.len(),
        violation_fraction: r.violations.len() as f64 / n,
        zero_margin_fraction: zero as f64 / n,
        example_violations: r
            .violations
            .iter()
            .take(VIOLATION_EXAMPLES)
            .cloned()
            .collect(),
    }
}

fn model_scan(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let tau = scan_tau(cfg);
    let scan = scan_uniform_invariance(&built.atlas, &scan_config(cfg, tau))
        .map_err(LabError::Numerical)?;
    let mut table = Table::new(&["chart", "x1", "x2", "angle", "delta_theta", "margin"]);
    for s in &scan.samples {
        table.row([
            s.chart.to_string(),
            sci(s.coords[0]),
            sci(s.coords[1]),
            sci(s.angle),
            sci(s.delta_theta),
            sci(s.margin),
        ]);
    }
    out.add("cone_scan.csv", table.into_bytes());
    let summary = summarize_scan(cfg.surface, &scan);
    out.add_json("cone_scan.json", &summary);
    Ok(json!({
        "verdict": summary.verdict,
        "c_star": summary.c_star,
        "min_edge_margin": summary.min_edge_margin,
        "tau": tau,
        "violation_fraction": summary.violation_fraction,
    }))
}

fn splitting(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let tau = scan_tau(cfg);
    let flow = Flow::with_options(&built.atlas, cfg.flow.options());
    let estimates = (0..cfg.splitting.samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_state(&built.atlas, cfg.rng_seed, i)?;
            estimate_splitting_with(&flow, &x, tau, cfg.splitting.iterations)
                .map_err(LabError::Numerical)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let nested = estimates.iter().filter(|e| e.strictly_nested).count();
    let worst = estimates
        .iter()
        .map(|e| e.residual_angle.max(e.residual_angle_stable))
        .fold(0.0_f64, f64::max);
    out.add_json(
        "splitting.json",
        &json!({ "tau": tau, "estimates": estimates }),
    );
    Ok(json!({
        "tau": tau,
        "samples": estimates.len(),
        "strictly_nested": nested,
        "max_residual_angle": worst,
    }))
}

fn lyapunov(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let flow = Flow::with_options(&built.atlas, cfg.flow.options());
    let l = &cfg.lyapunov;
    let jobs: Vec<(u64, f64)> = (0..l.samples as u64)
        .flat_map(|i| l.times.iter().map(move |&t| (i, t)))
        .collect();
    let estimates = jobs
        .par_iter()
        .map(|&(i, t)| {
            let x = sample_state(&built.atlas, cfg.rng_seed, i)?;
            lyapunov_exponent_with(&flow, &x, t, l.step).map_err(LabError::Numerical)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<Value> = estimates
        .chunks(l.times.len())
        .map(|per_time| {
            let lambdas: Vec<f64> = per_time.iter().map(|e| e.lambda).collect();
            json!({
                "x0": per_time[0].x0,
                "lambda": lambdas,
                "relative_spread": relative_spread(&lambdas),
                "estimates": per_time,
            })
        })
        .collect();
    let all: Vec<f64> = estimates.iter().map(|e| e.lambda).collect();
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.add_json(
        "lyapunov.json",
        &json!({ "surface": cfg.surface, "step": l.step, "times": l.times, "samples": samples }),
    );
    Ok(json!({ "lambda_min": min, "lambda_max": max }))
}

/// `(max − min) / |mean|`.
pub fn relative_spread(xs: &[f64]) -> f64 {
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (max - min) / mean.abs()
}

fn conjugate(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let c = &cfg.conjugate;
    let chart = built.atlas.charts()[0].id;
    let x = TangentState::with_angle(&built.atlas, ChartPoint::new(chart, c.start), c.angle)
        .map_err(LabError::Construction)?;
    let time = Flow::with_options(&built.atlas, cfg.flow.options())
        .conjugate_time(&x, c.duration)
        .map_err(LabError::Numerical)?;
    out.add_json(
        "conjugate.json",
        &json!({ "surface": cfg.surface, "start": x, "duration": c.duration, "conjugate_time": time }),
    );
    Ok(json!({ "conjugate_time": time }))
}

fn convergence(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let e = &cfg.embedding;
    let report =
        convergence_report(e.schedule, &e.s_values, e.grid()).map_err(LabError::Construction)?;
    let mut table = Table::new(&["s", "sup0", "sup1", "sup2"]);
    for r in &report.rows {
        table.row([sci(r.s), sci(r.sup0), sci(r.sup1), sci(r.sup2)]);
    }
    out.add("convergence.csv", table.into_bytes());
    let ratios: Vec<f64> = report
        .rows
        .windows(2)
        .map(|w| w[0].sup0 / w[1].sup0)
        .collect();
    Ok(json!({ "schedule": e.schedule, "sup0_ratios": ratios }))
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicityRow {
    pub s: f64,
    pub radii: [f64; 2],
    pub periods: [f64; 2],
    pub m_n: Option<[u64; 2]>,
    pub genus: Option<u64>,
}

fn periodicity(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let e = &cfg.embedding;
    let disks = cfg.lattice.disks.len() as u64;
    let rows = e
        .s_values
        .iter()
        .map(|&s| {
            let params = e.schedule.params(s).map_err(LabError::Construction)?;
            let m_n = periodicity_check(&params);
            Ok(PeriodicityRow {
                s,
                radii: [params.r1, params.r2],
                periods: params.periods(),
                m_n: m_n.map(|(m, n)| [m, n]),
                genus: m_n.map(|(m, n)| embedded_genus(m, n, disks)),
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let q = cfg.quotient.spec();
    let record = json!({
        "schedule": e.schedule,
        "disks_per_cell": disks,
        "rows": rows,
        "quotient": { "a": q.a, "b": q.b, "genus": quotient_genus(q, disks) },
    });
    out.add_json("periodicity.json", &record);
    Ok(json!({
        "periodic": rows.iter().filter(|r| r.m_n.is_some()).count(),
        "rows": rows.len(),
    }))
}

fn mesh(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let params = embedding_params(cfg)?;
    let (m, n) = periodicity_check(&params).ok_or(LabError::Construction(
        anosov_core::Error::NonPeriodic {
            m: params.periods()[0],
            n: params.periods()[1],
        },
    ))?;
    let res = MeshResolution::per_unit(cfg.mesh.cells_per_unit, m, n, cfg.mesh.tube_rings);
    let mesh = export_mesh(&cfg.lattice.lattice(), cfg.profile.params(), &params, res)
        .map_err(LabError::Construction)?;
    let mut bytes = Vec::new();
    mesh.write_obj(&mut bytes).expect("in-memory write");
    out.add("surface.obj", bytes);
    let chi = mesh.euler_characteristic();
    let summary = json!({
        "m_n": [m, n],
        "vertices": mesh.vertices.len(),
        "faces": mesh.faces.len(),
        "euler_characteristic": chi,
        "genus": (2 - chi) / 2,
        "expected_genus": embedded_genus(m, n, cfg.lattice.disks.len() as u64),
        "closed_oriented": mesh.is_closed_oriented(),
    });
    out.add_json("mesh.json", &summary);
    Ok(summary)
}

fn gauss_bonnet(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let gb = gauss_bonnet_integral(&built.atlas, cfg.gauss_bonnet.grid())
        .map_err(LabError::Numerical)?;
    let record = json!({
        "surface": cfg.surface,
        "integral": gb.integral,
        "genus": gb.genus,
        "expected": gb.expected,
        "relative_error": gb.relative_error(),
    });
    out.add_json("gauss_bonnet.json", &record);
    Ok(record)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationRow {
    pub epsilon: f64,
    pub c2_amplitude: f64,
    pub verdict: &'static str,
    pub c_star: f64,
    pub min_edge_margin: f64,
}

fn perturbation_scan(cfg: &LabConfig, out: &mut Outputs) -> Result<Value, LabError> {
    let built = build_surface(cfg)?;
    let model = built
        .model
        .expect("perturbation scans run on the model surface");
    let tau = scan_tau(cfg);
    let scan_cfg = scan_config(cfg, tau);
    let mut amplitudes = cfg.perturbation.amplitudes.clone();
    amplitudes.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut rows = Vec::new();
    for eps in amplitudes {
        let atlas = model.perturbed(eps);
        let scan = scan_uniform_invariance(&atlas, &scan_cfg).map_err(LabError::Numerical)?;
        rows.push(PerturbationRow {
            epsilon: eps,
            c2_amplitude: eps.abs() * BumpPerturbation::C2_NORM_PER_AMPLITUDE,
            verdict: scan.report.verdict(),
            c_star: scan.report.max_delta_theta,
            min_edge_margin: scan.report.min_edge_margin,
        });
    }
    let mut table = Table::new(&[
        "epsilon",
        "c2_amplitude",
        "verdict",
        "c_star",
        "min_edge_margin",
    ]);
    for r in &rows {
        table.row([
            sci(r.epsilon),
            sci(r.c2_amplitude),
            r.verdict.to_string(),
            sci(r.c_star),
            sci(r.min_edge_margin),
        ]);
    }
    out.add("perturbation.csv", table.into_bytes());
    // Largest |ε| up to which every scanned amplitude passed.
    let epsilon0 = rows
        .iter()
        .take_while(|r| r.verdict == "pass")
        .last()
        .map(|r| r.epsilon.abs());
    let monotone = rows.windows(2).all(|w| w[1].c_star >= w[0].c_star);
    let record =
        json!({ "tau": tau, "rows": rows, "epsilon0": epsilon0, "c_star_monotone": monotone });
    out.add_json("perturbation.json", &record);
    Ok(json!({ "tau": tau, "epsilon0": epsilon0, "c_star_monotone": monotone }))
}
