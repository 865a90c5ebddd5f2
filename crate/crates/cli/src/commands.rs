use crate::io::*;
use crate::*;
use relosc_core::experiments::*;
use relosc_core::floquet::{band_edges, critical_kappa, discriminant_scan, monodromy, write_discriminant_csv, BandEdge, BandOptions};
use relosc_core::problem::{SLProblem, TruncationSchedule};
use relosc_core::spectra::{count_below, eigenvalues_in};
use relosc_core::wronskian::{classify_relative_oscillation, flip_count, limit_flip_count_pair, Psi, SolutionSpec};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub wall_time_s: f64,
    pub outputs_written: Vec<String>,
    pub pass: bool,
    pub result: Value,
}

struct Outcome {
    result: Value,
    pass: bool,
    written: Vec<String>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, pass: true, written: vec![] }
    }
}

pub fn run(cli: &Cli, argv: &[String]) -> CliResult<RunReport> {
    let start = Instant::now();
    let g = &cli.global;
    if !(g.tol > 0.0) || !(g.eps_pi > 0.0) {
        return Err(CliError::Usage("--tol and --eps-pi must be positive".into()));
    }
    let out = match &cli.command {
        Command::Count(a) => count(a, g)?,
        Command::Eig(a) => eig(a, g)?,
        Command::Bands(a) => bands(a, g)?,
        Command::Kappa(a) => kappa(a, g)?,
        Command::Shift(a) => theorem_on_pair(a, g, spectral_shift)?,
        Command::Classify(ClassifyCommand::Kneser(a)) => kneser(a, g)?,
        Command::Classify(ClassifyCommand::RofeBeketov(a)) => rofe_beketov(a, g)?,
        Command::Verify(v) => verify(v, g)?,
        Command::Trace(a) => trace(a, g)?,
    };
    Ok(RunReport {
        command: argv.to_vec(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs_written: out.written,
        pass: out.pass,
        result: out.result,
    })
}

fn opts(g: &Global) -> CheckOptions {
    CheckOptions { tol: g.tol, eps_pi: g.eps_pi, ..CheckOptions::default() }
}

fn psi_name(k: Psi) -> &'static str {
    match k {
        Psi::Minus => "minus",
        Psi::Plus => "plus",
    }
}

fn count(a: &CountArgs, g: &Global) -> CliResult<Outcome> {
    let p0 = load_problem(&a.problem0)?;
    let p1 = load_problem(&a.problem1)?;
    let l0 = a.lambda0.or(a.lambda).ok_or_else(|| CliError::Usage("give --lambda or --lambda0".into()))?;
    let l1 = a.lambda1.or(a.lambda).ok_or_else(|| CliError::Usage("give --lambda or --lambda1".into()))?;
    if p0.interval != p1.interval {
        return Err(CliError::Usage("problems must share the interval".into()));
    }
    let pairs = [(Psi::Plus, Psi::Minus), (Psi::Minus, Psi::Plus)];
    let mut rows = Vec::new();
    let mut written = Vec::new();
    if p0.is_regular() && p1.is_regular() {
        let (lo, hi) = p0.interval;
        for (k0, k1) in pairs {
            let t0 = SolutionSpec::new(&p0, l0, k0).trajectory(lo, hi, g.tol)?;
            let t1 = SolutionSpec::new(&p1, l1, k1).trajectory(lo, hi, g.tol)?;
            let fc = flip_count(&t0, &t1, lo, hi, g.eps_pi)?;
            rows.push(json!({ "psi0": psi_name(k0), "psi1": psi_name(k1), "count": fc }));
        }
        return Ok(Outcome::ok(json!({ "lambda0": l0, "lambda1": l1, "regular": true, "counts": rows })));
    }
    let schedule = schedule_for(&p0, a.schedule.schedule.as_deref(), a.schedule.xmax)?;
    for (i, (k0, k1)) in pairs.into_iter().enumerate() {
        let lim = limit_flip_count_pair(
            SolutionSpec::new(&p0, l0, k0),
            SolutionSpec::new(&p1, l1, k1),
            &schedule,
            g.eps_pi,
            g.tol,
        )?;
        if i == 0 {
            if let Some(path) = &g.trace_out {
                written.push(write_csv(path, |w| lim.write_csv(w))?);
            }
        }
        rows.push(json!({ "psi0": psi_name(k0), "psi1": psi_name(k1), "limit": lim }));
    }
    let classification = if l0 == l1 { Some(classify_relative_oscillation(&p0, &p1, l0, &schedule, g.tol)?) } else { None };
    Ok(Outcome {
        result: json!({
            "lambda0": l0, "lambda1": l1, "regular": false, "schedule": schedule,
            "counts": rows, "relative_oscillation": classification,
        }),
        pass: true,
        written,
    })
}

fn eig(a: &EigArgs, g: &Global) -> CliResult<Outcome> {
    let p = load_problem(&a.problem)?;
    if !(a.lambda0 < a.lambda1) {
        return Err(CliError::Usage("need --lambda0 < --lambda1".into()));
    }
    let p = if p.is_regular() {
        p
    } else {
        let x = a.xmax.ok_or_else(|| CliError::Usage("singular problem: give --xmax".into()))?;
        p.truncated(x, PI)?
    };
    let ev = eigenvalues_in(&p, a.lambda0, a.lambda1, g.tol.min(1e-10))?;
    let c0 = count_below(&p, a.lambda0, g.tol)?;
    let c1 = count_below(&p, a.lambda1, g.tol)?;
    Ok(Outcome::ok(json!({
        "interval": [p.a(), p.b()], "eigenvalues": ev, "count_at_lambda0": c0, "count_at_lambda1": c1,
    })))
}

fn bands(a: &BandsArgs, g: &Global) -> CliResult<Outcome> {
    let c = load_coefficients(&a.coeffs)?;
    let bo = BandOptions { scan_points: a.scan_points, ..BandOptions::default() };
    let edges = band_edges(&c, a.period, a.lmin, a.lmax, &bo)?;
    let mut written = Vec::new();
    if let Some(path) = &g.trace_out {
        let recs = discriminant_scan(&c, a.period, a.lmin, a.lmax, a.scan_points, bo.ode_tol)?;
        written.push(write_csv(path, |w| write_discriminant_csv(&recs, w))?);
    }
    Ok(Outcome { result: json!({ "period": a.period, "edges": edges }), pass: true, written })
}

fn kappa(a: &KappaArgs, _g: &Global) -> CliResult<Outcome> {
    let c = load_coefficients(&a.coeffs)?;
    let rec = monodromy(&c, a.period, a.lambda, BandOptions::default().ode_tol)?;
    let kappa = match critical_kappa(&rec, BandOptions::default().collapse_tol) {
        Ok(k) => json!(k),
        Err(relosc_core::error::Error::CollapsedGap { .. }) => json!("infinite"),
        Err(relosc_core::error::Error::Precondition(m)) => json!({ "not_an_edge": m }),
        Err(e) => return Err(e.into()),
    };
    Ok(Outcome::ok(json!({ "monodromy": rec, "in_band": rec.d.abs() <= 2.0, "kappa": kappa })))
}

type PairCheck = fn(&SLProblem, &SLProblem, f64, &TruncationSchedule, &CheckOptions) -> relosc_core::error::Result<TheoremReport>;

fn theorem_on_pair(a: &PairArgs, g: &Global, f: PairCheck) -> CliResult<Outcome> {
    let p0 = load_problem(&a.problem0)?;
    let p1 = load_problem(&a.problem1)?;
    let s = schedule_for(&p0, a.schedule.schedule.as_deref(), a.schedule.xmax)?;
    let p0 = if p0.is_regular() { p0 } else { p0.with_truncation(s.clone())? };
    let p1 = if p1.is_regular() { p1 } else { p1.with_truncation(s.clone())? };
    let r = f(&p0, &p1, a.lambda, &s, &opts(g))?;
    let pass = r.pass;
    Ok(Outcome { result: serde_json::to_value(&r).expect("report serializes"), pass, written: vec![] })
}

fn kneser(a: &KneserArgs, g: &Global) -> CliResult<Outcome> {
    let c = load_coefficients(&a.coeffs)?;
    let grid = geometric_grid(a.x0, 20);
    let v = kneser_classify(&c, &grid)?;
    let mut pass = true;
    let growth = if a.growth {
        let x0 = c.domain_start();
        let s = TruncationSchedule::geometric(x0, 10.0 * x0.max(1.0), 10.0, 11, 3);
        let h = kneser_growth(&c, &s, g.tol)?;
        pass = consistent(v.verdict, &h);
        Some(h)
    } else {
        None
    };
    Ok(Outcome { result: json!({ "verdict": v, "growth": growth }), pass, written: vec![] })
}

/// Classifier verdict and growth history agree (inconclusive verdicts always agree).
fn consistent(v: Verdict, h: &GrowthHistory) -> bool {
    match v {
        Verdict::Accumulation => h.growth_steps >= 3,
        Verdict::NoAccumulation => h.growth_steps < 3,
        Verdict::Inconclusive => true,
    }
}

fn nearest_edge(c: &relosc_core::coefficients::Coefficients, period: f64, e: f64) -> CliResult<BandEdge> {
    let edges = band_edges(c, period, e - 0.5, e + 0.5, &BandOptions::default())?;
    edges
        .into_iter()
        .min_by(|x, y| (x.e - e).abs().total_cmp(&(y.e - e).abs()))
        .ok_or_else(|| CliError::Usage(format!("no band edge within 0.5 of {e}")))
}

fn rofe_beketov(a: &RofeBeketovArgs, _g: &Global) -> CliResult<Outcome> {
    let bg = load_coefficients(&a.coeffs)?;
    let dq = load_coefficients(&a.perturbation)?;
    let edge = nearest_edge(&bg, a.period, a.edge)?;
    let v = rofe_beketov_classify(&bg, &dq, &edge, &geometric_grid(a.x0, 20), a.refined)?;
    let mut pass = true;
    let growth = if a.growth {
        let h = edge_growth(&bg, a.period, &edge, &dq, &StrobeOptions::default())?;
        if v.criterion == Criterion::RofeBeketov {
            pass = consistent(v.verdict, &h);
        }
        Some(h)
    } else {
        None
    };
    Ok(Outcome { result: json!({ "edge": edge, "verdict": v, "growth": growth }), pass, written: vec![] })
}

fn trial_summary<T: Serialize>(
    results: Vec<relosc_core::error::Result<T>>,
    passed: impl Fn(&T) -> bool,
    order: impl Fn(&T) -> Option<ArgumentOrder>,
) -> Outcome {
    let mut reports = Vec::with_capacity(results.len());
    let mut n_pass = 0;
    let mut errors = 0;
    let mut orders = BTreeSet::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => {
                if passed(&rep) {
                    n_pass += 1;
                }
                if let Some(o) = order(&rep) {
                    orders.insert(format!("{o:?}").to_lowercase());
                }
                reports.push(json!({ "trial": i, "report": rep }));
            }
            Err(e) => {
                errors += 1;
                reports.push(json!({ "trial": i, "error": e.to_string() }));
            }
        }
    }
    let n = reports.len();
    let pass = n_pass == n && orders.len() <= 1;
    Outcome {
        result: json!({
            "trials": n, "passed": n_pass, "failed": n - n_pass, "errors": errors,
            "matched_orders": orders, "reports": reports,
        }),
        pass,
        written: vec![],
    }
}

fn verify(v: &VerifyCommand, g: &Global) -> CliResult<Outcome> {
    let o = opts(g);
    let usage = |e: relosc_core::error::Error| CliError::Usage(e.to_string());
    match v {
        VerifyCommand::Regular(t) => {
            let res = run_trials(t.trials, g.jobs, |i| {
                let tr = regular_trial(t.seed, i as u64)?;
                verify_regular_equality(&tr.problem0, &tr.problem1, tr.lambda0, tr.lambda1, &o)
            })
            .map_err(usage)?;
            Ok(trial_summary(res, |r| r.pass, |r| Some(r.matched_order)))
        }
        VerifyCommand::Renormalized(t) => {
            let res = run_trials(t.trials, g.jobs, |i| {
                let tr = renormalized_trial(t.seed, i as u64)?;
                renormalized_count(&tr.problem0, tr.lambda0, tr.lambda1, &o)
            })
            .map_err(usage)?;
            Ok(trial_summary(res, |r| r.pass, |r| Some(r.matched_order)))
        }
        VerifyCommand::Monotone(t) => {
            let res = run_trials(t.trials, g.jobs, |i| {
                let tr = monotone_trial(t.seed, i as u64)?;
                let fam = InterpolationFamily::uniform(tr.problem0, tr.problem1, 11)?;
                interpolation_monotonicity(&fam, fam.problem0.b(), tr.lambda, &o)
            })
            .map_err(usage)?;
            Ok(trial_summary(res, |r| r.pass, |_| None))
        }
        VerifyCommand::Halfline(a) => theorem_on_pair(a, g, halfline_shift_count),
        VerifyCommand::Shift(a) => theorem_on_pair(a, g, spectral_shift),
    }
}

fn trace(a: &TraceArgs, g: &Global) -> CliResult<Outcome> {
    let p = load_problem(&a.problem)?;
    let hi = if p.is_regular() {
        a.xmax.unwrap_or(p.b()).min(p.b())
    } else {
        a.xmax.ok_or_else(|| CliError::Usage("singular problem: give --xmax".into()))?
    };
    let kind = match a.psi {
        PsiArg::Minus => Psi::Minus,
        PsiArg::Plus => Psi::Plus,
    };
    let t = SolutionSpec::new(&p, a.lambda, kind).trajectory(p.a(), hi, g.tol)?;
    let mut written = Vec::new();
    if let Some(path) = &g.trace_out {
        written.push(write_csv(path, |w| t.write_csv(w))?);
    }
    let th = t.theta_samples();
    Ok(Outcome {
        result: json!({
            "psi": psi_name(kind), "lambda": a.lambda, "x_range": t.x_range(), "samples": th.len(),
            "theta_start": th[0].to_radians(), "theta_end": th[th.len() - 1].to_radians(),
            "converged": t.converged,
        }),
        pass: true,
        written,
    })
}
