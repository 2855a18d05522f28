//! Batch driver: runs one experiment kind from a config and writes
//! `{kind}-{hash}.json` and `{kind}-{hash}.csv`.

mod config;
mod verify;

pub use config::{ExperimentConfig, ExperimentKind, KindParams, Tolerances};
pub use verify::{format_table, verify_suite, VerifyRow};

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::eigen::{lowest_eigenpair_with, EigenOptions};
use crate::error::{Error, Result};
use crate::graph::{build_ball, GroupKind, RadialTree};
use crate::ground_state::{ground_state_exhaustion, history_json, write_ground_state_csv};
use crate::heat::{kernel_slice, leakage_radius};
use crate::magnetic::{ball_operator, dirichlet_matrix, harper_multiplier, truncation_dirichlet, Flux};
use crate::oracle::{bessel_zd, green_logdet};
use crate::spectral::{
    logdet_from_density, long_time_decay_check, ns_estimate, record, resolvent_riemann_sum, theta, DecayOutcome,
    DensityEstimate, DensityMethod, TraceSites,
};

/// Outcome of a run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub hash: String,
    pub files: Vec<PathBuf>,
    /// Names of the invariants or numeric steps that failed.
    pub failures: Vec<String>,
    /// Verification table, for the `verify` kind.
    pub table: Option<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Exit status: 0 pass, 1 numeric or invariant failure, 2 usage or config error.
pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(r) if r.passed() => 0,
        Ok(_) => 1,
        Err(Error::Config(_) | Error::Json(_) | Error::Io(_)) => 2,
        Err(_) => 1,
    }
}

/// First 16 hex digits of the SHA-256 of the canonical config JSON.
pub fn config_hash(kind: ExperimentKind, cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.kind = Some(kind);
    canonical.output_dir = None;
    let bytes = serde_json::to_vec(&canonical).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))[..16].to_string()
}

struct Artifacts {
    json: Value,
    csv: String,
    failures: Vec<String>,
    table: Option<String>,
}

impl Artifacts {
    fn new(json: Value, csv: String) -> Self {
        Artifacts {
            json,
            csv,
            failures: Vec::new(),
            table: None,
        }
    }
}

/// Runs `kind` on `cfg` with `workers` threads (all cores when `None`) and
/// writes the artifacts to `out_dir`, the config's `output_dir`, or `.`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, workers: Option<usize>, out_dir: Option<&Path>) -> Result<RunReport> {
    cfg.validate()?;
    cfg.require_for(kind)?;
    if workers == Some(0) {
        return Err(Error::Config("workers: must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    let art = pool.install(|| dispatch(kind, cfg))?;

    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let hash = config_hash(kind, cfg);
    let stem = format!("{kind}-{hash}");
    let json_path = dir.join(format!("{stem}.json"));
    let mut doc = art.json;
    doc["kind"] = json!(kind);
    doc["config_hash"] = json!(hash);
    doc["failures"] = json!(art.failures);
    std::fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, &art.csv)?;
    Ok(RunReport {
        kind,
        hash,
        files: vec![json_path, csv_path],
        failures: art.failures,
        table: art.table,
    })
}

fn dispatch(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Artifacts> {
    match kind {
        ExperimentKind::Eig => eig(cfg),
        ExperimentKind::Heat => heat(cfg),
        ExperimentKind::Theta => theta_kind(cfg),
        ExperimentKind::Ns => ns(cfg),
        ExperimentKind::Density => density(cfg),
        ExperimentKind::Logdet => logdet(cfg),
        ExperimentKind::Groundstate => groundstate(cfg),
        ExperimentKind::Decay => decay(cfg),
        ExperimentKind::Verify => verify(cfg),
    }
}

fn flux_label(f: Option<Flux>) -> String {
    match f {
        None => "0".into(),
        Some(Flux::Rational { num, den }) => format!("{num}/{den}"),
        Some(Flux::Real(x)) => format!("{x}"),
    }
}

/// The trivial multiplier followed by every nonzero configured flux.
fn flux_options(cfg: &ExperimentConfig) -> Vec<Option<Flux>> {
    let mut out = vec![None];
    out.extend(cfg.fluxes.iter().filter(|f| f.value() != 0.0).map(|&f| Some(f)));
    out
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn eig(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let radii = if cfg.radii.is_empty() { vec![10] } else { cfg.radii.clone() };
    let opts = EigenOptions {
        tol: cfg.tolerances.eig_tol,
        ..EigenOptions::default()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &r in &radii {
        let mut plain = None;
        for f in flux_options(cfg) {
            let a = match (cfg.group.kind(), f) {
                (GroupKind::FreeGroup { .. }, None) => truncation_dirichlet(&RadialTree::for_spec(cfg.group, r)?)?,
                _ => {
                    let g = build_ball(cfg.group, r)?;
                    let sigma = f.map(|f| harper_multiplier(&g, f)).transpose()?;
                    dirichlet_matrix(&g, sigma.as_ref())?
                }
            };
            let pair = lowest_eigenpair_with(&a, opts, None)?;
            match plain {
                None => plain = Some(pair.value),
                Some(p) if pair.value < p - cfg.tolerances.invariant => failures.push(format!(
                    "spectral bottom comparison: λ0 at flux {} below the flux-free value at radius {r}",
                    flux_label(f)
                )),
                _ => {}
            }
            rows.push((r, flux_label(f), pair.value, pair.residual));
        }
    }
    let json = json!({
        "operation": "eig",
        "spec": cfg.group,
        "rows": rows.iter().map(|(r, f, l, res)| json!({"radius": r, "flux": f, "lambda": l, "residual": res})).collect::<Vec<_>>(),
    });
    let csv = csv_text(
        &["radius", "flux", "lambda", "residual"],
        rows.iter().map(|(r, f, l, res)| vec![r.to_string(), f.clone(), l.to_string(), res.to_string()]),
    )?;
    let mut art = Artifacts::new(json, csv);
    art.failures = failures;
    Ok(art)
}

fn heat(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let budget = cfg.tolerances.err_budget;
    let m = cfg.group.generator_count();
    let mut csv_rows = Vec::new();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for f in flux_options(cfg) {
        for &t in &cfg.t_grid {
            let r = leakage_radius(m, t, 0.25 * budget).max(cfg.radii.first().copied().unwrap_or(1));
            let g = build_ball(cfg.group, r)?;
            let sigma = f.map(|f| harper_multiplier(&g, f)).transpose()?;
            let slice = match kernel_slice(&g, sigma.as_ref(), 0, t, budget) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("heat budget at t = {t}, flux {}: {e}", flux_label(f)));
                    continue;
                }
            };
            let oracle = match (cfg.group.kind(), f) {
                (GroupKind::FreeAbelian { rank }, None) => Some(bessel_zd(t, &vec![0; rank], &vec![0; rank])?),
                _ => None,
            };
            if let Some(o) = oracle {
                if (slice.get(0).re - o).abs() > slice.certified_error[0] + 1e-12 {
                    failures.push(format!("heat kernel oracle mismatch at t = {t}"));
                }
            }
            for y in g.inner_ball(r / 2) {
                let v = slice.get(y);
                csv_rows.push(vec![
                    flux_label(f),
                    t.to_string(),
                    y.to_string(),
                    format!("{:?}", g.label(y)).replace(' ', ""),
                    v.re.to_string(),
                    v.im.to_string(),
                    slice.certified_error[y].to_string(),
                ]);
            }
            records.push(json!({
                "flux": flux_label(f), "t": t, "radius": r,
                "diagonal": slice.get(0).re, "certified_error": slice.certified_error[0], "oracle": oracle,
            }));
        }
    }
    let json = record("heat", cfg.group, cfg.fluxes.clone(), json!({"err_budget": budget}), json!(records), json!(null), json!(null));
    let csv = csv_text(&["flux", "t", "y", "label", "re", "im", "certified_error"], csv_rows)?;
    let mut art = Artifacts::new(json, csv);
    art.failures = failures;
    Ok(art)
}

fn theta_kind(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let budget = cfg.tolerances.err_budget;
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    let plain = theta(cfg.group, None, &cfg.t_grid, budget)?;
    for f in flux_options(cfg) {
        let s = if f.is_none() { plain.clone() } else { theta(cfg.group, f, &cfg.t_grid, budget)? };
        for (smp, p) in s.samples.iter().zip(&plain.samples) {
            if let Some(msg) = &smp.failure {
                failures.push(format!("theta at t = {}: {msg}", smp.t));
            }
            if smp.value > p.value + 2.0 * (smp.certified_error + p.certified_error) {
                failures.push(format!("theta domination at t = {}, flux {}", smp.t, flux_label(f)));
            }
            csv_rows.push(vec![flux_label(f), smp.t.to_string(), smp.value.to_string(), smp.certified_error.to_string()]);
        }
        records.push(s.to_record(None));
    }
    let csv = csv_text(&["flux", "t", "theta", "certified_error"], csv_rows)?;
    let mut art = Artifacts::new(json!({ "records": records }), csv);
    art.failures = failures;
    Ok(art)
}

fn ns(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let window = cfg
        .window()
        .ok_or_else(|| Error::Config("params.window: ns needs a window or a time grid with two distinct times".into()))?;
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    let growth = cfg.group.polynomial_growth();
    for f in flux_options(cfg) {
        let s = theta(cfg.group, f, &cfg.t_grid, cfg.tolerances.err_budget)?;
        let est = ns_estimate(&s, window)?;
        if !est.ok {
            failures.push(format!("ns fit at flux {}: fewer than 8 samples or errors above 1%", flux_label(f)));
        }
        if let (Some(g), Some(_)) = (growth, f) {
            if est.beta < g / 2.0 - 0.1 {
                failures.push(format!("magnetic decay bound at flux {}: β = {:.3} < growth/2 - 0.1", flux_label(f), est.beta));
            }
        }
        csv_rows.push(vec![
            flux_label(f),
            est.beta.to_string(),
            est.residual.to_string(),
            est.samples_used.to_string(),
            est.ok.to_string(),
        ]);
        records.push(s.to_record(Some(&est)));
    }
    let csv = csv_text(&["flux", "beta", "residual", "samples", "ok"], csv_rows)?;
    let mut art = Artifacts::new(json!({ "records": records, "growth": growth }), csv);
    art.failures = failures;
    Ok(art)
}

fn density_for(cfg: &ExperimentConfig, f: Option<Flux>) -> Result<DensityEstimate> {
    let abelian = matches!(cfg.group.kind(), GroupKind::FreeAbelian { .. });
    let method = cfg
        .params
        .method
        .unwrap_or(if abelian { DensityMethod::Bloch } else { DensityMethod::DirichletCount });
    match method {
        DensityMethod::Bloch => {
            let n = cfg.params.resolution.unwrap_or(match cfg.group.kind() {
                GroupKind::FreeAbelian { rank: 1 } => 200_000,
                GroupKind::FreeAbelian { rank: 2 } => 1024,
                _ => 128,
            });
            DensityEstimate::bloch(cfg.group, f, n)
        }
        DensityMethod::DirichletCount => {
            let r = cfg.params.resolution.or(cfg.radii.first().copied()).unwrap_or(10);
            let g = build_ball(cfg.group, r)?;
            let sigma = f.map(|f| harper_multiplier(&g, f)).transpose()?;
            DensityEstimate::dirichlet_count(cfg.group, sigma.as_ref(), r)
        }
    }
}

fn density(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    for f in flux_options(cfg) {
        let d = density_for(cfg, f)?;
        let constants = d.exponent.map(|g| d.power_law_constants(g, 1e-3, 1e-1, 100));
        for (l, v) in d.curve(201) {
            csv_rows.push(vec![flux_label(f), l.to_string(), v.to_string()]);
        }
        records.push(record(
            "density",
            cfg.group,
            flux_label(f),
            json!({"method": d.method, "resolution": d.resolution, "top": d.top()}),
            json!(d.curve(201)),
            json!(null),
            json!({"exponent": d.exponent, "c1_c2": constants}),
        ));
    }
    let csv = csv_text(&["flux", "lambda", "F"], csv_rows)?;
    Ok(Artifacts::new(json!({ "records": records }), csv))
}

fn logdet(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let eps = cfg.params.eps_floor.unwrap_or(1e-3);
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    for f in flux_options(cfg) {
        let d = density_for(cfg, f)?;
        let est = logdet_from_density(&d, eps)?;
        if let Some(lb) = est.lower_bound {
            if est.normalised() < lb {
                failures.push(format!("determinant lower bound at flux {}", flux_label(f)));
            }
        }
        let oracle = match (cfg.group.kind(), f) {
            (GroupKind::FreeAbelian { rank }, None) if rank <= 3 && d.method == DensityMethod::Bloch => Some(green_logdet(rank)?),
            _ => None,
        };
        if let Some(o) = oracle {
            if (est.value - o).abs() > 0.02 {
                failures.push(format!("log-determinant {:.4} differs from the lattice value {o:.4}", est.value));
            }
        }
        csv_rows.push(vec![flux_label(f), est.value.to_string(), est.boundary_term.to_string(), est.bias_flag.to_string()]);
        records.push(record("logdet", cfg.group, flux_label(f), json!({"eps_floor": eps}), json!(est), json!(null), json!({"oracle": oracle})));
    }

    let mut sums = Vec::new();
    if let Some(ells) = &cfg.params.ells {
        let r = cfg.radii.first().copied().unwrap_or(8);
        let g = build_ball(cfg.group, r)?;
        let scale = 1.0 / (2.0 * cfg.group.generator_count() as f64);
        let mut per_flux = Vec::new();
        for f in flux_options(cfg) {
            let sigma = f.map(|f| harper_multiplier(&g, f)).transpose()?;
            let a = ball_operator(&g, sigma.as_ref())?.scaled(scale);
            let mut vals = Vec::new();
            for &ell in ells {
                let s = resolvent_riemann_sum(&a, ell, TraceSites::Root)?;
                if s.flagged {
                    failures.push(format!("Riemann sum solver failures at ℓ = {ell}, flux {}", flux_label(f)));
                }
                vals.push(s.value);
            }
            if ells.windows(2).all(|w| w[1] > w[0]) && vals.windows(2).any(|w| w[1] < w[0]) {
                failures.push(format!("Riemann sum not increasing in ℓ at flux {}", flux_label(f)));
            }
            per_flux.push((flux_label(f), vals));
        }
        for (label, vals) in &per_flux[1..] {
            if vals.iter().zip(&per_flux[0].1).any(|(m, p)| m > p) {
                failures.push(format!("Riemann sum domination at flux {label}"));
            }
        }
        sums = per_flux;
    }
    let csv = csv_text(&["flux", "logdet", "boundary_term", "bias_flag"], csv_rows)?;
    let riemann: Vec<Value> = sums.iter().map(|(f, v)| json!({"flux": f, "ells": cfg.params.ells, "values": v})).collect();
    let mut art = Artifacts::new(json!({ "records": records, "riemann_sums": riemann }), csv);
    art.failures = failures;
    Ok(art)
}

fn groundstate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let r_min = cfg.radii.iter().copied().min().unwrap_or(2).max(2);
    let r_max = cfg.radii.iter().copied().max().unwrap_or(12).max(r_min);
    let gs = ground_state_exhaustion(cfg.group, r_min, r_max, cfg.tolerances.convergence)?;
    let mut failures = Vec::new();
    if !gs.strictly_decreasing() {
        failures.push("exhaustion: λ sequence not strictly decreasing".to_string());
    }
    let mut buf = Vec::new();
    write_ground_state_csv(&gs, &mut buf)?;
    let json = json!({
        "operation": "groundstate",
        "spec": gs.spec,
        "lambda0_estimate": gs.lambda0_estimate,
        "converged": gs.converged,
        "convergence_gap": gs.convergence_gap,
        "trusted_radius": gs.trusted_radius,
        "history": history_json(&gs),
    });
    let mut art = Artifacts::new(json, String::from_utf8(buf).expect("csv output is utf-8"));
    art.failures = failures;
    Ok(art)
}

fn decay(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let window = cfg
        .window()
        .ok_or_else(|| Error::Config("params.window: decay needs a window".into()))?;
    let start = cfg.radii.first().copied().unwrap_or(14);
    let samples = cfg.params.samples.unwrap_or(36);
    let out = long_time_decay_check(cfg.group, window, start, samples)?;
    let mut failures = Vec::new();
    let csv = match &out {
        DecayOutcome::Amenable { .. } => csv_text(&["t", "shifted_trace", "certified_error"], Vec::new())?,
        DecayOutcome::Checked(r) => {
            if !r.checks.non_increasing {
                failures.push("long-time decay: e^{λ0 t} p_t(x,x) increases".to_string());
            }
            if !r.checks.t_weighted_bounded {
                failures.push("long-time decay: t e^{λ0 t} p_t(x,x) grows".to_string());
            }
            if !r.schrodinger.t_weighted_bounded {
                failures.push("long-time decay: t·trace grows for the critical Schrödinger operator".to_string());
            }
            csv_text(
                &["t", "shifted_trace", "certified_error"],
                r.samples.iter().map(|s| vec![s.t.to_string(), s.value.to_string(), s.certified_error.to_string()]),
            )?
        }
    };
    let mut art = Artifacts::new(json!({ "operation": "decay", "report": out }), csv);
    art.failures = failures;
    Ok(art)
}

fn verify(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let rows = verify_suite(cfg)?;
    let failures = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {}", r.cites, r.check))
        .collect();
    let csv = csv_text(
        &["result", "check", "tolerance", "value", "pass"],
        rows.iter().map(|r| {
            vec![
                r.cites.to_string(),
                r.check.clone(),
                r.tolerance.to_string(),
                r.value.to_string(),
                r.pass.to_string(),
            ]
        }),
    )?;
    let table = format_table(&rows);
    Ok(Artifacts {
        json: json!({ "operation": "verify", "spec": cfg.group, "rows": rows }),
        csv,
        failures,
        table: Some(table),
    })
}
