//! Acceptance suite. Runs as a plain binary so that every criterion prints
//! exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use relosc_core::angle::Angle;
use relosc_core::coefficients::Coefficients;
use relosc_core::experiments::*;
use relosc_core::floquet::{band_edges, monodromy, BandOptions, Kappa};
use relosc_core::problem::{SLProblem, TruncationSchedule};
use relosc_core::wronskian::{count_from_deltas, Psi, SolutionSpec};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

const SEED: u64 = 20_240_611;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opts() -> CheckOptions {
    CheckOptions::default()
}

fn matched(r: &TheoremReport) -> Option<&RhsCandidate> {
    r.rhs_candidates.iter().find(|c| c.order == r.matched_order)
}

fn both_orders_match(r: &TheoremReport) -> bool {
    [ArgumentOrder::First, ArgumentOrder::Second]
        .iter()
        .all(|o| r.rhs_candidates.iter().filter(|c| c.order == *o).all(|c| c.stabilized && c.count == r.lhs))
}

fn orders(reports: &[TheoremReport]) -> BTreeSet<String> {
    reports.iter().map(|r| format!("{:?}", r.matched_order)).collect()
}

/// Every report passes, and all of them use one argument order.
fn all_pass_one_order(reports: &[TheoremReport]) -> Check {
    let bad: Vec<usize> = reports.iter().enumerate().filter(|(_, r)| !r.pass).map(|(i, _)| i).collect();
    ensure(bad.is_empty(), || format!("{} of {} trials failed (first: {:?})", bad.len(), reports.len(), &bad[..bad.len().min(5)]))?;
    let o = orders(reports);
    ensure(o.len() == 1, || format!("matched orders differ across trials: {o:?}"))?;
    let ties = reports.iter().filter(|r| both_orders_match(r)).count();
    Ok(format!("{}/{} equal, order {}, {ties} ties broken by the ledger", reports.len(), reports.len(), o.iter().next().unwrap()))
}

fn c1_regular_equality() -> Check {
    let o = opts();
    let reports = run_trials(200, 0, |i| {
        let t = regular_trial(SEED, i as u64)?;
        verify_regular_equality(&t.problem0, &t.problem1, t.lambda0, t.lambda1, &o)
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    all_pass_one_order(&reports)
}

fn free_pi() -> SLProblem {
    SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap()
}

fn c2_renormalized() -> Check {
    let o = opts();
    for (l0, l1, want) in [(0.5, 4.5, 2), (5.0, 8.0, 0)] {
        let r = renormalized_count(&free_pi(), l0, l1, &o).map_err(|e| e.to_string())?;
        let got = matched(&r).map(|c| c.count);
        ensure(r.pass && r.lhs == want && got == Some(want), || format!("free ({l0}, {l1}): lhs {} count {got:?}, want {want}", r.lhs))?;
    }
    let reports = run_trials(200, 0, |i| {
        let t = renormalized_trial(SEED + 1, i as u64)?;
        renormalized_count(&t.problem0, t.lambda0, t.lambda1, &o)
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    Ok(format!("free counts 2 and 0; {}", all_pass_one_order(&reports)?))
}

fn c3_explicit_well() -> Check {
    let p0 = free_pi();
    let p1 = p0.with_coefficients(Coefficients::constant_potential(-10.0)).unwrap();
    let r = verify_regular_equality(&p0, &p1, 0.0, 0.0, &opts()).map_err(|e| e.to_string())?;
    let pm_first = r
        .rhs_candidates
        .iter()
        .find(|c| c.pair == SolutionPair::PlusMinus && c.order == ArgumentOrder::First)
        .map(|c| c.count);
    ensure(r.pass && r.lhs == 3 && pm_first == Some(3), || format!("lhs {} #(psi0+, psi1-) {pm_first:?}", r.lhs))?;
    Ok(format!("projection difference 3, #(psi0+, psi1-) = 3, order {:?}", r.matched_order))
}

/// Bound states of `−u'' − 10·χ_{[0,π]} u` on the Dirichlet half-line below
/// `λ`, from sign changes of `k cos kπ + κ sin kπ`, `κ = √(10 − k²)`.
fn matching_roots_below(lambda: f64) -> usize {
    let kmax = (10.0 + lambda).max(0.0).sqrt();
    let f = |k: f64| k * (k * PI).cos() + (10.0 - k * k).sqrt() * (k * PI).sin();
    let n = 200_000;
    let mut prev = f(kmax * 1e-6);
    let mut roots = 0;
    for i in 1..=n {
        let k = kmax * i as f64 / n as f64;
        let cur = f(k);
        if prev != 0.0 && cur.signum() != prev.signum() {
            roots += 1;
        }
        prev = cur;
    }
    roots
}

fn halfline_well(schedule: &TruncationSchedule) -> (SLProblem, SLProblem) {
    let p0 = SLProblem::half_line(Coefficients::free(), 0.0, 0.0).unwrap().with_truncation(schedule.clone()).unwrap();
    let p1 = p0.with_coefficients(Coefficients::free().with_well(-10.0, 0.0, PI)).unwrap();
    (p0, p1)
}

fn well_schedule() -> TruncationSchedule {
    // 5, 10, 20, 40, 80: the oracle compares the last two
    TruncationSchedule::geometric(0.0, 5.0, 2.0, 4, 3)
}

fn c4_halfline() -> Check {
    let s = well_schedule();
    let (p0, p1) = halfline_well(&s);
    let mut out = Vec::new();
    for lambda in [-9.0, -5.0, -1.0] {
        let r = halfline_shift_count(&p0, &p1, lambda, &s, &opts()).map_err(|e| format!("lambda {lambda}: {e}"))?;
        let oracle = matching_roots_below(lambda) as i64;
        let c = matched(&r).map(|c| (c.count, c.stabilized));
        ensure(r.pass && r.lhs == oracle && c == Some((oracle, true)), || {
            format!("lambda {lambda}: inertia {} roots {oracle} matched {c:?}", r.lhs)
        })?;
        out.push(format!("{lambda}:{oracle}"));
    }
    Ok(format!("counts {} (inertia at X = 40, 80, roots, limit count agree)", out.join(" ")))
}

fn c5_below_spectrum() -> Check {
    let s = well_schedule();
    let (p0, p1) = halfline_well(&s);
    let r = halfline_shift_count(&p0, &p1, -20.0, &s, &opts()).map_err(|e| e.to_string())?;
    let c = matched(&r).map(|c| c.count);
    ensure(r.pass && r.lhs == 0 && c == Some(0), || format!("half-line: lhs {} count {c:?}", r.lhs))?;
    let q0 = free_pi();
    let q1 = q0.with_coefficients(Coefficients::constant_potential(-10.0)).unwrap();
    let r = verify_regular_equality(&q0, &q1, -20.0, -20.0, &opts()).map_err(|e| e.to_string())?;
    let c = matched(&r).map(|c| c.count);
    ensure(r.pass && r.lhs == 0 && c == Some(0), || format!("interval: lhs {} count {c:?}", r.lhs))?;
    Ok("count 0 on the half-line well and the explicit well".into())
}

fn c6_triangle_comparison() -> Check {
    let o = opts();
    let results = run_trials(500, 0, |i| -> Result<(bool, bool, i64, usize), String> {
        let t = triple_trial(SEED + 6, i as u64).map_err(|e| e.to_string())?;
        let len = t.problems[0].b();
        let traj = |p: &SLProblem, kind| SolutionSpec::new(p, t.lambda, kind).trajectory(0.0, len, o.tol).map_err(|e| e.to_string());
        let u: Vec<_> = t.problems.iter().map(|p| traj(p, Psi::Minus)).collect::<Result<_, _>>()?;
        let v: Vec<_> = t.problems.iter().map(|p| traj(p, Psi::Plus)).collect::<Result<_, _>>()?;
        let cmp = comparison_check(&u[0], &u[1], &u[2], 0.0, len, 1024).map_err(|e| e.to_string())?;
        let (c, d) = t.window;
        let tri = triangle_check(&u[0], &u[1], &u[2], c, d).map_err(|e| e.to_string())?;
        let tri_v = triangle_check(&v[0], &u[1], &v[2], c, d).map_err(|e| e.to_string())?;
        let bound = solution_change_bound(&u[0], &u[1], &v[0], &v[1], c, d).map_err(|e| e.to_string())?;
        Ok((cmp.pass, tri.pass && tri_v.pass, bound, cmp.zeros01.len() + cmp.zeros12.len()))
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let cmp_bad = results.iter().filter(|r| !r.0).count();
    let tri_bad = results.iter().filter(|r| !r.1).count();
    let worst = results.iter().map(|r| r.2).max().unwrap_or(0);
    let zeros: usize = results.iter().map(|r| r.3).sum();
    ensure(cmp_bad == 0 && tri_bad == 0 && worst <= 4, || {
        format!("comparison failures {cmp_bad}, triangle failures {tri_bad}, solution-change bound {worst}")
    })?;

    let mut rng = trial_rng(SEED + 66, 0);
    use rand::Rng;
    let mut anti_bad = 0;
    for i in 0..10_000 {
        let mut angle = |exact: bool| {
            if exact {
                Angle::new(rng.gen_range(-20..20), 0.0)
            } else {
                Angle::from_radians(rng.gen_range(-60.0..60.0))
            }
        };
        let (dc, dd) = (angle(i % 7 == 0), angle(i % 5 == 0));
        let lhs = count_from_deltas(dc, dd) + count_from_deltas(Angle::ZERO - dc, Angle::ZERO - dd);
        let off = |a: Angle| i64::from(a.residual() != 0.0);
        if lhs != off(dd) + off(dc) - 2 {
            anti_bad += 1;
        }
    }
    ensure(anti_bad == 0, || format!("anti-symmetry identity failed on {anti_bad} of 10000 pairs"))?;
    Ok(format!("500 triples ({zeros} Wronskian zeros checked), solution-change bound {worst}, 10000 angle pairs"))
}

fn c7_periodic_free() -> Check {
    let free = Coefficients::free();
    let mut max_d: f64 = 0.0;
    let mut max_det: f64 = 0.0;
    let mut max_dp: f64 = 0.0;
    let n = 540;
    for i in 0..=n {
        let l = -2.0 + 27.0 * i as f64 / n as f64;
        let rec = monodromy(&free, PI, l, 1e-12).map_err(|e| e.to_string())?;
        let exact = if l >= 0.0 { 2.0 * (PI * l.sqrt()).cos() } else { 2.0 * (PI * (-l).sqrt()).cosh() };
        max_d = max_d.max((rec.d - exact).abs());
        max_det = max_det.max((rec.det() - 1.0).abs());
        let h = 1e-5;
        let dp = monodromy(&free, PI, l + h, 1e-12).map_err(|e| e.to_string())?.d;
        let dm = monodromy(&free, PI, l - h, 1e-12).map_err(|e| e.to_string())?.d;
        max_dp = max_dp.max(((dp - dm) / (2.0 * h) - rec.d_prime).abs() / (1.0 + rec.d_prime.abs()));
    }
    ensure(max_d < 1e-8 && max_det < 1e-10 && max_dp < 1e-6, || {
        format!("max |D - 2cos| {max_d:e}, max |det - 1| {max_det:e}, D' mismatch {max_dp:e}")
    })?;
    let edges = band_edges(&free, PI, -0.5, 17.0, &BandOptions::default()).map_err(|e| e.to_string())?;
    let interior: Vec<_> = edges.iter().filter(|e| e.e > 0.5).collect();
    let bottom = edges.iter().find(|e| e.e.abs() < 1e-8);
    ensure(interior.len() == 8 && interior.iter().all(|e| e.collapsed && e.kappa == Kappa::Infinite), || {
        format!("interior edges {:?}", interior.iter().map(|e| (e.e, e.kappa)).collect::<Vec<_>>())
    })?;
    ensure(bottom.is_some_and(|b| matches!(b.kappa, Kappa::Finite(k) if (k + 0.25).abs() < 1e-6)), || format!("bottom edge {bottom:?}"))?;
    Ok(format!("|D - 2cos| {max_d:.1e}, |det - 1| {max_det:.1e}, D' {max_dp:.1e}, 4 collapsed gaps"))
}

fn kp() -> Coefficients {
    Coefficients::Periodic {
        period: PI,
        cell: Box::new(Coefficients::piecewise_potential(vec![PI / 2.0], vec![0.0, 5.0])),
    }
}

/// Transfer matrix of `−u'' + q u = E u` over length `h`, acting on `(u, u')`.
fn piece(e: f64, q: f64, h: f64) -> [[f64; 2]; 2] {
    let z = e - q;
    let (c, s) = if z > 0.0 {
        let k = z.sqrt();
        ((k * h).cos(), (k * h).sin() / k)
    } else if z < 0.0 {
        let k = (-z).sqrt();
        ((k * h).cosh(), (k * h).sinh() / k)
    } else {
        (1.0, h)
    };
    [[c, s], [-z * s, c]]
}

fn kp_discriminant(e: f64) -> f64 {
    let a = piece(e, 0.0, PI / 2.0);
    let b = piece(e, 5.0, PI / 2.0);
    // tr(B·A)
    b[0][0] * a[0][0] + b[0][1] * a[1][0] + b[1][0] * a[0][1] + b[1][1] * a[1][1]
}

/// `(E, κ)` for every solution of `D = ±2` in `[lo, hi]`.
fn kp_oracle(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let n = 100_000;
    for s in [2.0, -2.0] {
        let g = |e: f64| kp_discriminant(e) - s;
        let mut a = lo;
        let mut ga = g(a);
        for i in 1..=n {
            let b = lo + (hi - lo) * i as f64 / n as f64;
            let gb = g(b);
            if ga.signum() != gb.signum() {
                let (mut x0, mut x1, g0) = (a, b, ga);
                for _ in 0..200 {
                    let m = 0.5 * (x0 + x1);
                    if (g(m) < 0.0) == (g0 < 0.0) {
                        x0 = m;
                    } else {
                        x1 = m;
                    }
                }
                let e = 0.5 * (x0 + x1);
                let h = 1e-5;
                let dp = (kp_discriminant(e + h) - kp_discriminant(e - h)) / (2.0 * h);
                out.push((e, PI * PI / (4.0 * s.signum() * dp)));
            }
            a = b;
            ga = gb;
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

fn c8_kronig_penney() -> Check {
    let oracle = kp_oracle(-1.0, 12.0);
    let edges = band_edges(&kp(), PI, -1.0, 12.0, &BandOptions::default()).map_err(|e| e.to_string())?;
    ensure(edges.len() == oracle.len(), || format!("{} edges, oracle has {}", edges.len(), oracle.len()))?;
    let mut de: f64 = 0.0;
    let mut dk: f64 = 0.0;
    for (e, (oe, ok)) in edges.iter().zip(&oracle) {
        de = de.max((e.e - oe).abs());
        let k = e.kappa.value().ok_or_else(|| format!("edge {} has infinite kappa", e.e))?;
        dk = dk.max(((k - ok) / ok).abs());
    }
    ensure(de < 1e-8 && dk < 1e-6, || format!("edge error {de:e}, kappa relative error {dk:e}"))?;
    Ok(format!("{} edges, max edge error {de:.1e}, max kappa error {dk:.1e}", edges.len()))
}

fn c9_monotonicity() -> Check {
    let o = opts();
    let reports = run_trials(50, 0, |i| {
        let t = monotone_trial(SEED + 9, i as u64)?;
        let fam = InterpolationFamily::uniform(t.problem0, t.problem1, 11)?;
        interpolation_monotonicity(&fam, 1.0, t.lambda, &o)
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let bad = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    let tracks: usize = reports.iter().map(|r| r.eigenvalue_tracks.len()).sum();
    ensure(bad == 0 && worst <= 1e-9, || format!("{bad} of 50 trials failed, worst violation {worst:e}"))?;
    Ok(format!("50 trials, {tracks} eigenvalue tracks, worst violation {worst:.1e}"))
}

fn c10_criteria() -> Check {
    let mut notes = Vec::new();
    let grid = geometric_grid(4.0, 20);
    let sched = TruncationSchedule::geometric(1.0, 10.0, 10.0, 11, 3);
    for (gamma, want) in [(0.5, Verdict::NoAccumulation), (2.0, Verdict::Accumulation)] {
        let tail = Coefficients::EulerTail { c: -gamma / 4.0, x0: 1.0 };
        let v = kneser_classify(&tail, &grid).map_err(|e| e.to_string())?;
        ensure(v.verdict == want, || format!("Kneser gamma {gamma}: {:?}", v.verdict))?;
        let g = kneser_growth(&tail, &sched, 1e-10).map_err(|e| e.to_string())?;
        let grows = g.growth_steps >= 3;
        ensure(grows == (want == Verdict::Accumulation), || format!("Kneser gamma {gamma}: history {:?}", g.counts))?;
        notes.push(format!("K{gamma}:{}", g.growth_steps));
    }

    let edges = band_edges(&kp(), PI, -1.0, 8.0, &BandOptions::default()).map_err(|e| e.to_string())?;
    ensure(edges.len() >= 4, || format!("only {} Kronig-Penney edges", edges.len()))?;
    let strobe = StrobeOptions::default();
    for edge in &edges[..4] {
        let kappa = edge.kappa.value().ok_or("collapsed Kronig-Penney gap")?;
        for (c, want) in [(0.5, Verdict::NoAccumulation), (2.0, Verdict::Accumulation)] {
            let dq = Coefficients::EulerTail { c: c * kappa, x0: 1.0 };
            let v = rofe_beketov_classify(&kp(), &dq, edge, &grid, false).map_err(|e| e.to_string())?;
            ensure(v.verdict == want, || format!("edge {:.5} c {c}: {:?}", edge.e, v.verdict))?;
            let g = edge_growth(&kp(), PI, edge, &dq, &strobe).map_err(|e| e.to_string())?;
            let grows = g.growth_steps >= 3;
            ensure(grows == (want == Verdict::Accumulation), || format!("edge {:.5} c {c}: history {:?}", edge.e, g.counts))?;
            notes.push(format!("E{:.2}/{c}:{}", edge.e, g.growth_steps));
        }
        for (s, want) in [(0.5, Verdict::NoAccumulation), (2.0, Verdict::Accumulation)] {
            let dq = Coefficients::LogRefinedTail { c1: kappa, c2: s * kappa, x0: 2.0 };
            let v = rofe_beketov_classify(&kp(), &dq, edge, &grid, true).map_err(|e| e.to_string())?;
            ensure(v.verdict == want && v.criterion == Criterion::RofeBeketovRefined, || {
                format!("edge {:.5} refined s {s}: {:?} via {:?}", edge.e, v.verdict, v.criterion)
            })?;
        }
    }
    Ok(format!("verdicts match; record counts {}", notes.join(" ")))
}

fn c11_spectral_shift() -> Check {
    let s = well_schedule();
    let (p0, p1) = halfline_well(&s);
    let o = opts();
    let reports = run_trials(20, 0, |i| {
        let lambda = -10.0 + 10.0 * (i as f64 + 0.5) / 20.0;
        spectral_shift(&p0, &p1, lambda, &s, &o)
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    for r in &reports {
        let lambda = r.inputs["lambda"].as_f64().unwrap();
        let c = matched(r).map(|c| c.count);
        let roots = matching_roots_below(lambda) as i64;
        ensure(r.pass && Some(r.lhs.abs()) == c.map(i64::abs) && r.lhs.abs() == roots, || {
            format!("lambda {lambda}: xi {} matched {c:?} roots {roots}", r.lhs)
        })?;
    }
    let signs: BTreeSet<i64> = reports.iter().filter(|r| r.lhs != 0).map(|r| r.lhs.signum()).collect();
    let o = orders(&reports);
    ensure(o.len() == 1 && signs.len() <= 1, || format!("orders {o:?}, signs {signs:?}"))?;
    Ok(format!("20 energies, order {}, sign of xi {:?}", o.iter().next().unwrap(), signs))
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 11] = [
        ("regular equality", c1_regular_equality),
        ("renormalized count", c2_renormalized),
        ("explicit well", c3_explicit_well),
        ("half-line singular case", c4_halfline),
        ("below-spectrum vanishing", c5_below_spectrum),
        ("triangle and comparison", c6_triangle_comparison),
        ("periodic free operator", c7_periodic_free),
        ("Kronig-Penney edges", c8_kronig_penney),
        ("interpolation monotonicity", c9_monotonicity),
        ("criteria classifiers", c10_criteria),
        ("spectral shift", c11_spectral_shift),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
