use serde::Serialize;
use serde_json::json;

use qrm_core::fock::AB_FRAME_MAX_CUTOFF;
use qrm_core::overlaps::{overlap, required_nodes};
use qrm_core::perturbation::{
    calibrate_sigma, first_order, first_order_slopes, loglog_slope, quasimode_form, quasimode_residual_of, quasimode_vectors,
    sqrt10_grid, QuasimodeResidual, DEGENERACY_THRESHOLD, RESIDUAL_MARGIN, SIGMA,
};
use qrm_core::specfun::{laguerre_zeros, nondegenerate_sequence};
use qrm_core::spectral::{braak_intervals, converged_spectrum, parity_split, ConvergenceOptions, Parity, BOUNDARY_TOLERANCE};
use qrm_core::weyl::{empirical_counting_with, smges_gap_check, SamplingMode, SPHERE_POLAR_NODES};
use qrm_core::{Error, Family, ModelSpec, OverlapMethod, RabiParameters};

use crate::cli::*;
use crate::config::Resolver;
use crate::error::CliError;
use crate::output::{int, num, Emitted, Table};

type Run = Result<Emitted, CliError>;

fn parse_family(s: &str) -> Result<Family, CliError> {
    Ok(s.parse::<Family>()?)
}

/// Resolves the shared model flags. γ defaults depend on the family; a
/// single cutoff is broadcast to every mode.
fn model(r: &mut Resolver, a: ModelArgs, family: &str, alpha: Vec<f64>, eps: f64, cutoff: usize) -> Result<ModelSpec, CliError> {
    let name: String = r.value("family", a.family, family.to_string())?;
    let family = parse_family(&name)?;
    let alpha = r.list("alpha", a.alpha, alpha)?;
    let gamma_default = match family {
        Family::QR | Family::ABFrame => vec![1.0, -1.0],
        Family::QRabi => vec![1.0],
        _ => vec![0.0; alpha.len()],
    };
    let gamma = r.list("gamma", a.gamma, gamma_default)?;
    let eps = r.value("eps", a.eps, eps)?;
    let cutoff_default = if family == Family::ABFrame { cutoff.min(AB_FRAME_MAX_CUTOFF) } else { cutoff };
    let mut cutoffs = r.list("cutoff", a.cutoff, vec![cutoff_default])?;
    let modes = if family.is_n_level() { alpha.len() } else { 1 };
    if cutoffs.len() == 1 && modes > 1 {
        cutoffs = vec![cutoffs[0]; modes];
    }
    let spec = ModelSpec { family, alpha, gamma, eps, cutoffs };
    spec.validate()?;
    Ok(spec)
}

fn rabi(r: &mut Resolver, a: RabiArgs) -> Result<RabiParameters, CliError> {
    let alpha: f64 = r.required("alpha", a.alpha)?;
    let gamma = r.list("gamma", a.gamma, vec![1.0, -1.0])?;
    if gamma.len() != 2 {
        return Err(Error::Spec(format!("expected gamma1,gamma2, got {} value(s)", gamma.len())).into());
    }
    if !(alpha.is_finite() && gamma[0].is_finite() && gamma[1].is_finite()) {
        return Err(Error::Spec("parameters must be finite".into()).into());
    }
    if !(gamma[0] > gamma[1]) {
        return Err(Error::Spec(format!("gamma1 = {} must exceed gamma2 = {}", gamma[0], gamma[1])).into());
    }
    Ok(RabiParameters::new(alpha, gamma[0], gamma[1], 0.0))
}

pub fn overlap_cmd(r: &mut Resolver, a: OverlapArgs) -> Run {
    let n: usize = r.required("N", a.n)?;
    let k: usize = r.required("k", a.k)?;
    let alpha: f64 = r.required("alpha", a.alpha)?;
    let method_name: String = r.value("method", a.method, "closed_form".to_string())?;
    let method = match method_name.as_str() {
        "closed_form" | "closed" => OverlapMethod::ClosedForm,
        "quadrature" => OverlapMethod::Quadrature,
        other => return Err(CliError::Usage(format!("unknown overlap method '{other}'"))),
    };
    let nodes = match method {
        OverlapMethod::ClosedForm => r.optional("nodes", a.nodes)?,
        OverlapMethod::Quadrature => Some(r.value("nodes", a.nodes, required_nodes(n, k) + 20)?),
    };
    let res = overlap(n, k, alpha, method, nodes)?;
    let normalized = res.value / res.norm_bound();
    let mut t = Table::new(["N", "k", "alpha", "method", "nodes", "value", "normalized"]);
    t.push(vec![
        int(n),
        int(k),
        num(alpha),
        method_name,
        nodes.map(int).unwrap_or_default(),
        num(res.value),
        num(normalized),
    ]);
    let mut out = serde_json::to_value(res).map_err(|e| CliError::Io(e.to_string()))?;
    out["nodes"] = json!(nodes);
    out["normalized"] = json!(normalized);
    Emitted::new(out, t)
}

pub fn laguerre_cmd(r: &mut Resolver, a: LaguerreArgs) -> Run {
    let degree: usize = r.required("degree", a.degree)?;
    let zeros = laguerre_zeros(degree)?;
    let mut t = Table::new((1..=degree).map(|i| format!("zero_{i}")));
    t.push(zeros.iter().map(|&z| num(z)).collect());
    Emitted::new(json!({ "degree": degree, "zeros": zeros }), t)
}

pub fn avoid_cmd(r: &mut Resolver, a: AvoidArgs) -> Run {
    let x0: f64 = r.required("x0", a.x0)?;
    let jmax = r.value("jmax", a.jmax, 4)?;
    let kcap = r.value("kcap", a.kcap, 20000)?;
    let seq = nondegenerate_sequence(x0, jmax, kcap)?;
    let mut t = Table::new(["j", "k", "delta", "nearest_zero"]);
    for (j, e) in seq.entries.iter().enumerate() {
        t.push(vec![int(j + 1), int(e.k), num(e.delta), num(e.nearest_zero)]);
    }
    Emitted::new(seq, t)
}

fn parity_cell(p: Option<&Vec<Parity>>, i: usize) -> String {
    match p.map(|v| v[i]) {
        Some(Parity::Plus) => "+".into(),
        Some(Parity::Minus) => "-".into(),
        None => String::new(),
    }
}

pub fn spectrum_cmd(r: &mut Resolver, a: SpectrumArgs) -> Run {
    let spec = model(r, a.model, "qr", vec![1.0], 0.0, 40)?;
    let m = r.value("m", a.m, 20)?;
    let tol = r.value("tol", a.tol, 1e-10)?;
    let parity = r.value("parity", a.parity, false)?;
    r.record("convergence", ConvergenceOptions::default());
    let s = if parity { parity_split(&spec, m, tol)? } else { converged_spectrum(&spec, m, tol)? };
    let mut t = Table::new(["index", "eigenvalue", "parity", "converged"]);
    for (i, &v) in s.eigenvalues.iter().enumerate() {
        t.push(vec![int(i), num(v), parity_cell(s.parity.as_ref(), i), (i < s.converged_count).to_string()]);
    }
    Emitted::new(s, t)
}

#[derive(Serialize)]
struct SlopeCheck {
    h: f64,
    cutoff: usize,
    slope_minus: f64,
    slope_plus: f64,
    max_abs_error: f64,
}

pub fn perturb_cmd(r: &mut Resolver, a: PerturbArgs) -> Run {
    let n: usize = r.required("N", a.n)?;
    let p = rabi(r, a.rabi)?;
    let check = r.value("check", a.check, false)?;
    r.record("degeneracy_threshold", DEGENERACY_THRESHOLD);
    let first = first_order(n, &p)?;
    let mut header = vec!["N", "mu_minus", "mu_plus", "overlap_ratio", "degenerate"];
    let mut row = vec![int(n), num(first.mu_minus), num(first.mu_plus), num(first.overlap_ratio), first.degenerate.to_string()];
    let fd = if check {
        let h = r.value("h", a.h, 1e-3)?;
        let cutoff = r.value("cutoff", a.cutoff, (n + 30).min(AB_FRAME_MAX_CUTOFF))?;
        let (slope_minus, slope_plus) = first_order_slopes(n, &p, h, cutoff)?;
        let max_abs_error = (slope_minus - first.mu_minus).abs().max((slope_plus - first.mu_plus).abs());
        header.extend(["slope_minus", "slope_plus", "max_abs_error"]);
        row.extend([num(slope_minus), num(slope_plus), num(max_abs_error)]);
        Some(SlopeCheck { h, cutoff, slope_minus, slope_plus, max_abs_error })
    } else {
        r.optional("h", a.h)?;
        r.optional("cutoff", a.cutoff)?;
        None
    };
    let mut t = Table::new(header);
    t.push(row);
    Emitted::new(json!({ "first_order": first, "finite_difference_check": fd }), t)
}

pub fn quasimode_cmd(r: &mut Resolver, a: QuasimodeArgs) -> Run {
    let n: usize = r.required("N", a.n)?;
    let p = rabi(r, a.rabi)?;
    let k = r.value("K", a.k, (n + 40).min(AB_FRAME_MAX_CUTOFF - 8))?;
    let grid = r.list("eps-grid", a.eps_grid, sqrt10_grid(-3, -1))?;
    let cutoff = r.value("residual-cutoff", a.residual_cutoff, (k + 8).min(AB_FRAME_MAX_CUTOFF))?;
    let force = r.value("force", a.force, false)?;
    let vectors = r.value("vectors", a.vectors, false)?;
    let sigma_h = r.value("sigma-h", None, 1e-3)?;
    let sigma_cutoff = r.value("sigma-cutoff", None, 40)?;
    r.record("degeneracy_threshold", DEGENERACY_THRESHOLD);
    r.record("residual_margin", RESIDUAL_MARGIN);
    let first = first_order(n, &p)?;
    if !first.degenerate && !force {
        return Err(Error::Domain(format!(
            "level N={n} splits at first order (|D_NN| ratio {:e}); pass --force to continue",
            first.overlap_ratio
        ))
        .into());
    }
    let form = quasimode_form(n, &p, k)?;
    let expansion = quasimode_vectors(n, &p, k)?;
    let residuals: Vec<QuasimodeResidual> =
        grid.iter().map(|&eps| quasimode_residual_of(&expansion, &p, eps, cutoff)).collect::<Result<_, _>>()?;
    let positive: Vec<&QuasimodeResidual> = residuals.iter().filter(|q| q.eps > 0.0 && q.residual > 0.0).collect();
    let slope = (positive.len() >= 2).then(|| {
        let xs: Vec<f64> = positive.iter().map(|q| q.eps).collect();
        let ys: Vec<f64> = positive.iter().map(|q| q.residual).collect();
        loglog_slope(&xs, &ys)
    });
    let sigma_cal = calibrate_sigma(0, &p, sigma_h, sigma_cutoff)?;
    let mut t = Table::new(["eps", "residual", "residual_plus", "residual_minus", "lambda_plus", "lambda_minus", "margin_ok"]);
    for q in &residuals {
        t.push(vec![
            num(q.eps),
            num(q.residual),
            num(q.residual_plus),
            num(q.residual_minus),
            num(expansion.eigenvalue(true, q.eps)),
            num(expansion.eigenvalue(false, q.eps)),
            q.margin_ok.to_string(),
        ]);
    }
    let mut out = json!({
        "first_order": first,
        "form": form,
        "sigma": SIGMA,
        "sigma_calibration": sigma_cal,
        "lambda2_plus": expansion.lambda2_plus,
        "lambda2_minus": expansion.lambda2_minus,
        "residuals": residuals,
        "residual_slope": slope,
    });
    if vectors {
        out["expansion"] = serde_json::to_value(&expansion).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Emitted::new(out, t)
}

pub fn braak_cmd(r: &mut Resolver, a: BraakArgs) -> Run {
    let spec = model(r, a.model, "qr", vec![0.8], 0.02, 40)?;
    r.record("boundary_tolerance", BOUNDARY_TOLERANCE);
    r.record("convergence", ConvergenceOptions::default());
    let nmax: i64 = r.value("nmax", a.nmax, 10)?;
    let m = r.value("m", a.m, 2 * (nmax.max(0) as usize + 1) + 10)?;
    let tol = r.value("tol", a.tol, 1e-10)?;
    let shift = r.value("shift", a.shift, spec.alpha[0] * spec.alpha[0] / 2.0)?;
    let s = match spec.family {
        Family::QR | Family::QRabi => parity_split(&spec, m, tol)?,
        _ => converged_spectrum(&spec, m, tol)?,
    };
    let report = braak_intervals(&s, shift, nmax)?;
    let mut t = Table::new(["N", "total_count", "count_plus", "count_minus", "boundary_hits"]);
    let opt = |c: Option<usize>| c.map(int).unwrap_or_default();
    for c in &report.per_interval {
        t.push(vec![int(c.n), int(c.total_count), opt(c.count_plus), opt(c.count_minus), int(c.boundary_hits)]);
    }
    Emitted::new(
        json!({
            "report": report,
            "all_verdicts": report.all_verdicts(),
            "converged_count": s.converged_count,
            "cutoffs_used": s.cutoffs_used,
        }),
        t,
    )
}

pub fn weyl_cmd(r: &mut Resolver, a: WeylArgs) -> Run {
    let spec = model(r, a.model, "qr", vec![1.0], 0.02, 200)?;
    spec.validate_weyl_hypotheses()?;
    let c = spec.min_cutoff() as f64;
    let lambdas = r.list("lambda", a.lambda, vec![0.125 * c, 0.25 * c, 0.375 * c, 0.5 * c])?;
    let reliability = r.value("reliability", a.reliability, 0.5)?;
    let seed = r.value("seed", a.seed, 0)?;
    let samples = r.value("mc-samples", a.mc_samples, 4096)?;
    r.record("sphere_polar_nodes", SPHERE_POLAR_NODES);
    let table = empirical_counting_with(&spec, &lambdas, reliability, seed, samples)?;
    let mut t = Table::new(["lambda", "count", "prediction", "rel_err", "flagged"]);
    for row in &table.rows {
        t.push(vec![num(row.lambda), int(row.count), num(row.prediction), num(row.rel_err), row.flagged.to_string()]);
    }
    let slope = table.trend_slope();
    let mut out = serde_json::to_value(&table).map_err(|e| CliError::Io(e.to_string()))?;
    out["trend_slope"] = json!(slope);
    Emitted::new(out, t)
}

pub fn smges_cmd(r: &mut Resolver, a: SmgesArgs) -> Run {
    let spec = model(r, a.model, "xi", vec![1.0, 1.0], 0.1, 8)?;
    let samples = r.value("samples", a.samples, 1000)?;
    let seed = r.value("seed", a.seed, 0)?;
    let mode_name: String = r.value("mode", a.mode, "seeded".to_string())?;
    let mode = match mode_name.as_str() {
        "seeded" => SamplingMode::Seeded,
        "grid" => SamplingMode::Grid,
        other => return Err(CliError::Usage(format!("unknown sampling mode '{other}'"))),
    };
    let rep = smges_gap_check(&spec, spec.eps, samples, seed, mode)?;
    let mut header: Vec<String> = ["eps", "mode", "samples", "seed", "min_gap", "max_hermiticity_error"].map(String::from).to_vec();
    header.extend((1..=rep.argmin.len()).map(|i| format!("X_{i}")));
    let mut t = Table::new(header);
    let mut row = vec![num(rep.eps), mode_name, int(rep.samples), int(rep.seed), num(rep.min_gap), num(rep.max_hermiticity_error)];
    row.extend(rep.argmin.iter().map(|&x| num(x)));
    t.push(row);
    Emitted::new(rep, t)
}

pub fn run(r: &mut Resolver, command: Command) -> Result<(&'static str, Emitted), CliError> {
    Ok(match command {
        Command::Overlap(a) => ("overlap", overlap_cmd(r, a)?),
        Command::LaguerreZeros(a) => ("laguerre-zeros", laguerre_cmd(r, a)?),
        Command::AvoidSeq(a) => ("avoid-seq", avoid_cmd(r, a)?),
        Command::Spectrum(a) => ("spectrum", spectrum_cmd(r, a)?),
        Command::Perturb(a) => ("perturb", perturb_cmd(r, a)?),
        Command::Quasimode(a) => ("quasimode", quasimode_cmd(r, a)?),
        Command::Braak(a) => ("braak", braak_cmd(r, a)?),
        Command::Weyl(a) => ("weyl", weyl_cmd(r, a)?),
        Command::SmgesCheck(a) => ("smges-check", smges_cmd(r, a)?),
    })
}
