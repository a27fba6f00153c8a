//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use mbvp_core::analysis::{
    check_growth, coercivity_constants, estimate_delta, lambda1_estimate, lambda1_reference, select_case, Case,
    GrowthConstants, GrowthRole, Inequality, Lambda1Method, SampleBox,
};
use mbvp_core::boundary::{
    build_boundary, firm_nonexpansive_violation, BoundaryKind, BoundaryOperator, BoundaryParams, ConvexSet,
};
use mbvp_core::collocation::Grid;
use mbvp_core::geometry::{dot, phi, phi_inverse};
use mbvp_core::linsolve::{
    continuity_gap, manufactured_rhs, solve_s, GridFunction, LinearOptions, LinearProblem, Manufactured,
};
use mbvp_core::matrices::{
    apriori_bound_iv, eigenvalue_test, inverse_i_minus_m, is_convergent_to_zero, neumann_series_test,
    nonnegative_inverse_test, power_test, ConvMatrix,
};
use mbvp_core::nonlinear::{
    apply_q, solve_system, verify_report, ExprForcing, Forcing, SolveOptions, SolveReport, SystemProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn in_ball(rng: &mut ChaCha8Rng, q: usize, radius: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..q).map(|_| StandardNormal.sample(rng)).collect();
    let n = dot(&v, &v).sqrt().max(1e-300);
    let r = radius * rng.random::<f64>().powf(1.0 / q as f64);
    v.into_iter().map(|c| c * r / n).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn ac1_phi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mono, mut coer, mut trip) = (0.0f64, 0.0f64, 0.0f64);
    for q in 1..=3 {
        for _ in 0..100_000 {
            let x = in_ball(&mut rng, q, 0.999);
            let y = in_ball(&mut rng, q, 0.999);
            let (px, py) = (phi(&x).unwrap(), phi(&y).unwrap());
            let d = sub(&x, &y);
            mono = mono.max(dot(&d, &d) - dot(&sub(&px, &py), &d));
            coer = coer.max(dot(&y, &y) - dot(&py, &y));
            let back = phi_inverse(&py);
            trip = trip.max(sub(back.as_slice(), &y).iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }
    ensure(mono <= 1e-12 && coer <= 1e-12 && trip <= 1e-10, || {
        format!("monotonicity {mono:e}, coercivity {coer:e}, round trip {trip:e}")
    })?;
    Ok(format!("3x10^5 samples; worst violations {mono:.1e}, {coer:.1e}; round trip {trip:.1e}"))
}

fn catalog(q: usize) -> Vec<(String, BoundaryOperator)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // non-symmetric PSD matrix: B B^T plus a skew part
    let d = 2 * q;
    let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let bbt: f64 = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum();
            a[i * d + j] = bbt + s[i * d + j] - s[j * d + i];
        }
    }
    let linear = build_boundary(BoundaryKind::LinearPsd, q, BoundaryParams::Matrix(a)).unwrap();
    let boxed = build_boundary(
        BoundaryKind::ProjectionProx,
        q,
        BoundaryParams::Projection(ConvexSet::Box { lower: vec![-1.0; d], upper: vec![0.5; d] }),
    )
    .unwrap();
    vec![
        ("dirichlet".into(), BoundaryOperator::dirichlet(q)),
        ("neumann".into(), BoundaryOperator::neumann(q)),
        ("periodic".into(), BoundaryOperator::periodic(q)),
        ("antiperiodic".into(), BoundaryOperator::antiperiodic(q)),
        ("linear_psd(rotation)".into(), BoundaryOperator::rotation(q)),
        ("linear_psd(random)".into(), linear),
        ("projection(box)".into(), boxed),
    ]
}

fn ac2_resolvents() -> Outcome {
    let q = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10_000)
        .map(|_| {
            let z1: Vec<f64> = (0..2 * q).map(|_| 5.0 * rng.random_range(-1.0..1.0)).collect();
            let z2: Vec<f64> = (0..2 * q).map(|_| 5.0 * rng.random_range(-1.0..1.0)).collect();
            (z1, z2)
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for (name, bop) in catalog(q) {
        for lambda in [0.1, 1.0, 10.0] {
            let v = firm_nonexpansive_violation(&bop, lambda, &pairs);
            ensure(v <= 1e-10, || format!("{name} at lambda={lambda}: violation {v:e}"))?;
            worst = worst.max(v);
            let j0 = bop.resolvent(lambda, &vec![0.0; 2 * q]);
            ensure(j0.iter().all(|v| *v == 0.0), || format!("{name}: J(0) = {j0:?}"))?;
        }
    }
    Ok(format!("7 operators x 3 lambdas x 10^4 pairs; worst violation {worst:.1e}; J(0)=0 exactly"))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ac3_matrices() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut tested, mut convergent) = (0, 0);
    while tested < 1000 {
        let e = [[rng.random::<f64>(), rng.random::<f64>()], [rng.random::<f64>(), rng.random::<f64>()]];
        let m = ConvMatrix::new(e).unwrap();
        let (conv, rho) = is_convergent_to_zero(&m);
        if (rho - 1.0).abs() <= 1e-6 {
            continue;
        }
        tested += 1;
        let votes = [power_test(&m), neumann_series_test(&m), eigenvalue_test(&m), nonnegative_inverse_test(&m)];
        ensure(votes.iter().all(|v| *v == conv), || format!("disagreement on {e:?} (rho={rho}): {votes:?}"))?;
        convergent += usize::from(conv);
    }
    let m = ConvMatrix::new([[0.3, 0.4], [0.4, 0.3]]).unwrap();
    let (c, rho) = is_convergent_to_zero(&m);
    ensure(c && close(rho, 0.7, 1e-9), || format!("example 1: rho={rho}"))?;
    let m2 = ConvMatrix::new([[0.6, 0.5], [0.5, 0.6]]).unwrap();
    let (c2, rho2) = is_convergent_to_zero(&m2);
    ensure(!c2 && close(rho2, 1.1, 1e-9), || format!("example 2: rho={rho2}"))?;
    let inv = inverse_i_minus_m(&m).map_err(|e| e.to_string())?;
    let (d, o) = (0.7 / 0.33, 0.4 / 0.33);
    ensure(
        close(inv[0][0], d, 1e-9) && close(inv[1][1], d, 1e-9) && close(inv[0][1], o, 1e-9) && close(inv[1][0], o, 1e-9),
        || format!("(I-M)^-1 = {inv:?}"),
    )?;
    Ok(format!("1000 matrices ({convergent} convergent), four tests agree; examples rho=0.7, 1.1, inverse {d:.4}/{o:.4}"))
}

fn manufactured_error(n: usize) -> Result<(f64, GridFunction), String> {
    let grid = Grid::new(1.0, n).map_err(|e| e.to_string())?;
    let u_star = Manufactured::sine(0.25, PI);
    let (h, exact) = manufactured_rhs(&u_star, &grid).map_err(|e| e.to_string())?;
    let p = LinearProblem::new(grid, BoundaryOperator::dirichlet(1), h).map_err(|e| e.to_string())?;
    let u = solve_s(&p, &LinearOptions::default()).map_err(|e| e.to_string())?;
    let err = u.u.iter().zip(&exact.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((err, u))
}

fn ac4_order() -> Outcome {
    let (e100, _) = manufactured_error(100)?;
    let (e200, _) = manufactured_error(200)?;
    let ratio = e100 / e200;
    ensure(e200 < 1e-3 && (3.5..=4.5).contains(&ratio), || format!("err(200)={e200:e}, ratio={ratio}"))?;
    Ok(format!("err(N=200) = {e200:.3e}, err(100)/err(200) = {ratio:.3}"))
}

fn ac5_zero_and_constant() -> Outcome {
    let grid = Grid::new(1.0, 200).unwrap();
    let q = 2;
    for (name, bop) in catalog(q) {
        let p = LinearProblem::new(grid, bop, vec![0.0; q * grid.len()]).unwrap();
        let u = solve_s(&p, &LinearOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        let m = u.u.iter().chain(&u.w).fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(m <= 1e-10, || format!("{name}: |S(0)| = {m:e}"))?;
    }
    let c = [0.7, -1.3];
    let p = LinearProblem::from_fn(grid, BoundaryOperator::neumann(2), |_| c.to_vec()).unwrap();
    let u = solve_s(&p, &LinearOptions::default()).map_err(|e| e.to_string())?;
    let err = (0..grid.len()).fold(0.0f64, |m, i| {
        let ui = u.u_at(i);
        m.max((ui[0] - c[0]).abs()).max((ui[1] - c[1]).abs())
    });
    ensure(err <= 1e-10, || format!("Neumann constant error {err:e}"))?;
    Ok(format!("S(0)=0 for 7 operators; Neumann constant error {err:.1e}"))
}

fn ac6_continuity() -> Outcome {
    let n = 200;
    let grid = Grid::new(1.0, n).unwrap();
    let bop = BoundaryOperator::dirichlet(1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let slack = 10.0 / (n * n) as f64;
    let mut tightest = f64::INFINITY;
    for k in 0..20 {
        let mut draw = || {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            grid.nodes()
                .map(|t| c[0] + c[1] * (2.0 * PI * t).sin() + c[2] * (3.0 * PI * t).cos() + c[3] * t * t)
                .collect::<Vec<f64>>()
        };
        let (h1, h2) = (draw(), draw());
        let g = continuity_gap(&h1, &h2, &bop, &grid, &LinearOptions::default()).map_err(|e| e.to_string())?;
        ensure(g.lhs <= g.rhs + slack, || format!("pair {k}: lhs {} > rhs {} + {slack}", g.lhs, g.rhs))?;
        tightest = tightest.min(g.rhs + slack - g.lhs);
    }
    let h1 = vec![0.8; grid.len()];
    let h2 = vec![-0.3; grid.len()];
    let g = continuity_gap(&h1, &h2, &BoundaryOperator::neumann(1), &grid, &LinearOptions::default())
        .map_err(|e| e.to_string())?;
    ensure((g.lhs - g.rhs).abs() <= 1e-9, || format!("Neumann equality: {} vs {}", g.lhs, g.rhs))?;
    Ok(format!("20 Dirichlet pairs, smallest margin {tightest:.3e}; Neumann |lhs-rhs| = {:.1e}", (g.lhs - g.rhs).abs()))
}

fn ac7_lambda1() -> Outcome {
    for bop in [BoundaryOperator::periodic(1), BoundaryOperator::neumann(1)] {
        let e = lambda1_estimate(&bop, 1.0, 400).map_err(|e| e.to_string())?;
        ensure(e.value == 0.0 && e.method == Lambda1Method::Analytic, || format!("{:?}: {e:?}", bop.kind()))?;
    }
    let mut detail = Vec::new();
    for bop in [BoundaryOperator::dirichlet(1), BoundaryOperator::antiperiodic(1)] {
        let exact = lambda1_reference(bop.domain(), 1.0).unwrap();
        let e400 = lambda1_estimate(&bop, 1.0, 400).map_err(|e| e.to_string())?;
        let e200 = lambda1_estimate(&bop, 1.0, 200).map_err(|e| e.to_string())?;
        let rel = (e400.value - exact).abs() / exact;
        let ratio = (e200.value - exact).abs() / (e400.value - exact).abs();
        ensure(e400.method == Lambda1Method::EigFd && rel < 0.01 && (3.5..=4.5).contains(&ratio), || {
            format!("{:?}: value {} rel {rel:e} ratio {ratio}", bop.kind(), e400.value)
        })?;
        detail.push(format!("{} {:.6} (rel {rel:.1e}, ratio {ratio:.3})", bop.kind().name(), e400.value));
    }
    Ok(format!("periodic/neumann 0 (analytic); {}", detail.join("; ")))
}

fn forcing(texts: &[String]) -> Arc<dyn Forcing> {
    Arc::new(ExprForcing::parse(texts).unwrap())
}

/// Worked coupled example with `h = cos(2 pi t)`, `l = sin(2 pi t)`, `n = m = 1`.
fn example_31(a: f64, b: f64, gamma: BoundaryOperator, eta: BoundaryOperator) -> SystemProblem {
    let f1 = format!("({a}-1)*x1 + ({b})/(1+normx^2)*(normy^2*x1 + cos(6.283185307179586*t))");
    let f2 = format!("({b})/(1+normy^2)*(normx^2*y1 + sin(6.283185307179586*t)) + ({a}-1)*y1");
    SystemProblem::new(1.0, forcing(&[f1]), forcing(&[f2]), gamma, eta).unwrap()
}

/// Fixed-point defect `|Q(state) - state|_inf`.
fn q_defect(prob: &SystemProblem, report: &SolveReport) -> Result<f64, String> {
    let q = apply_q(prob, &report.state, &LinearOptions::default()).map_err(|e| e.to_string())?;
    Ok(q.max_abs_diff(&report.state))
}

struct Converged {
    label: String,
    defect: f64,
}

fn ac8_example_first(fixed: &mut Vec<Converged>) -> Outcome {
    let opts = SolveOptions::default();
    let bound = 2.0 * (1.0 + 1.0 / (PI * PI)).sqrt();
    let mut detail = Vec::new();
    for (a, b) in [(2.0, 1.0), (5.0, -3.0), (-1.0, 10.0)] {
        let prob = example_31(a, b, BoundaryOperator::dirichlet(1), BoundaryOperator::antiperiodic(1));
        let tag = format!("(a,b)=({a},{b})");
        let rep = solve_system(&prob, &opts).map_err(|e| format!("{tag}: {e}"))?;
        ensure(rep.ode_res < 1e-8 && rep.bc_res < 1e-8 && rep.max_velocity < 1.0, || {
            format!("{tag}: residuals {:e}/{:e}, velocity {}", rep.ode_res, rep.bc_res, rep.max_velocity)
        })?;
        ensure(rep.norms.total <= bound * 1.05, || format!("{tag}: norm {} > bound {bound}", rep.norms.total))?;
        let check = verify_report(&prob, &rep, None, opts.tol);
        ensure(check.all_ok() && check.case == Case::I, || format!("{tag}: {check:?}"))?;

        let fine = solve_system(&prob, &SolveOptions { intervals: 3200, ..opts }).map_err(|e| format!("{tag} N=3200: {e}"))?;
        let stride = 3200 / opts.intervals;
        let mut gap = 0.0f64;
        for i in 0..rep.grid.len() {
            let j = i * stride;
            gap = gap.max((rep.state.u.u_at(i)[0] - fine.state.u.u_at(j)[0]).abs());
            gap = gap.max((rep.state.v.u_at(i)[0] - fine.state.v.u_at(j)[0]).abs());
        }
        ensure(gap <= 5e-4, || format!("{tag}: distance to N=3200 reference {gap:e}"))?;
        fixed.push(Converged { label: tag.clone(), defect: q_defect(&prob, &rep)? });
        detail.push(format!(
            "{tag}: {} res {:.1e}, |(u,v)| {:.4} <= {bound:.4}, ref gap {gap:.1e}",
            rep.strategy.name(),
            rep.ode_res.max(rep.bc_res),
            rep.norms.total
        ));
    }
    Ok(detail.join("; "))
}

fn ac9_example_second(fixed: &mut Vec<Converged>) -> Outcome {
    let (a, b) = (0.4, 0.4);
    let prob = example_31(a, b, BoundaryOperator::rotation(1), BoundaryOperator::periodic(1));
    let m = ConvMatrix::new([[a, b], [b, a]]).map_err(|e| e.to_string())?;
    let (conv, rho) = is_convergent_to_zero(&m);
    ensure(conv && close(rho, 0.8, 1e-12), || format!("M not certified: rho={rho}"))?;

    let sbox = SampleBox::default();
    let d1 = estimate_delta(prob.f1.as_ref(), GrowthRole::First, a, b, (1, 1), 1.0, &sbox).map_err(|e| e.to_string())?;
    let d2 = estimate_delta(prob.f2.as_ref(), GrowthRole::Second, a, b, (1, 1), 1.0, &sbox).map_err(|e| e.to_string())?;
    let delta = d1.max(d2);
    let ineq = Inequality { own: a, cross: b, delta };
    for (f, role) in [(&prob.f1, GrowthRole::First), (&prob.f2, GrowthRole::Second)] {
        let c = check_growth(f.as_ref(), role, &ineq, (1, 1), 1.0, &sbox).map_err(|e| e.to_string())?;
        ensure(c.pass, || format!("{role:?} growth check failed: {c:?}"))?;
    }
    let beta = apriori_bound_iv(&m, delta, 1.0).map_err(|e| e.to_string())?;

    let opts = SolveOptions::default();
    let rep = solve_system(&prob, &opts).map_err(|e| e.to_string())?;
    ensure(rep.ode_res < 1e-8 && rep.bc_res < 1e-8 && rep.max_velocity < 1.0, || {
        format!("residuals {:e}/{:e}, velocity {}", rep.ode_res, rep.bc_res, rep.max_velocity)
    })?;
    let (u2, v2) = (rep.norms.u_h1.powi(2), rep.norms.v_h1.powi(2));
    ensure(u2 <= beta.beta_u * 1.05 && v2 <= beta.beta_v * 1.05, || {
        format!("squared norms ({u2}, {v2}) exceed beta ({}, {})", beta.beta_u, beta.beta_v)
    })?;
    let constants = GrowthConstants::full(a, b, b, a, delta);
    let check = verify_report(&prob, &rep, Some(&constants), opts.tol);
    ensure(check.all_ok() && check.case == Case::IV, || format!("{check:?}"))?;
    assert_eq!(select_case(0.0, 0.0, Some(&constants), 1.0).case, Case::IV);

    // the homotopy family stays inside the same bound at every stage
    let cont = solve_system(&prob, &SolveOptions { force: Some(mbvp_core::Strategy::Continuation), ..opts })
        .map_err(|e| format!("continuation: {e}"))?;
    for s in &cont.stages {
        ensure(s.u_h1_sq <= beta.beta_u * 1.05 && s.v_h1_sq <= beta.beta_v * 1.05, || {
            format!("stage {}: ({}, {}) exceeds beta", s.homotopy, s.u_h1_sq, s.v_h1_sq)
        })?;
    }
    fixed.push(Converged { label: "variant 2".into(), defect: q_defect(&prob, &rep)? });
    Ok(format!(
        "rho(M)=0.8, delta={delta:.4}, beta=({:.3}, {:.3}), realized ({u2:.4}, {v2:.4}) via {}; {} homotopy stages within beta",
        beta.beta_u,
        beta.beta_v,
        rep.strategy.name(),
        cont.stages.len()
    ))
}

fn ac10_coercive(fixed: &mut Vec<Converged>) -> Outcome {
    let sbox = SampleBox::default();
    let f = ExprForcing::parse(&["-x1^3"]).unwrap();
    let (c, ineq) = coercivity_constants(&f, 1, 1.0, &sbox).map_err(|e| e.to_string())?;
    let within = |v: f64, target: f64| (v - target).abs() <= 0.05 * target.abs().max(1.0);
    ensure(within(c.sigma, 1.0) && within(c.rho, 1.0) && within(c.k, 1.0), || format!("{c:?}"))?;
    ensure(within(ineq.own, 0.0) && within(ineq.delta, 2.0), || format!("{ineq:?}"))?;
    let g = check_growth(&f, GrowthRole::Scalar, &Inequality { own: 0.0, cross: 0.0, delta: 2.0 }, (1, 0), 1.0, &sbox)
        .map_err(|e| e.to_string())?;
    ensure(g.pass, || format!("{g:?}"))?;

    let prob = SystemProblem::new(
        1.0,
        forcing(&["-x1^3".into()]),
        forcing(&["-y1^3".into()]),
        BoundaryOperator::periodic(1),
        BoundaryOperator::periodic(1),
    )
    .unwrap();
    let rep = solve_system(&prob, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let res = rep.ode_res.max(rep.bc_res);
    ensure(res < 1e-8, || format!("residual {res:e}"))?;
    fixed.push(Converged { label: "coercive".into(), defect: q_defect(&prob, &rep)? });
    Ok(format!(
        "(sigma,rho,k)=({}, {}, {:.4}) => (a,delta)=({}, {:.4}); growth check passes; periodic solve residual {res:.1e}",
        c.sigma, c.rho, c.k, ineq.own, ineq.delta
    ))
}

fn ac11_fixed_point(fixed: &[Converged]) -> Outcome {
    let tol = SolveOptions::default().tol;
    ensure(!fixed.is_empty(), || "no converged problems to check".into())?;
    let worst = fixed.iter().fold(0.0f64, |m, c| m.max(c.defect));
    for c in fixed {
        ensure(c.defect <= 10.0 * tol, || format!("{}: |Q(x)-x| = {:e}", c.label, c.defect))?;
    }
    Ok(format!("{} converged problems, worst |Q(x)-x|_inf = {worst:.1e}", fixed.len()))
}

fn main() -> ExitCode {
    let mut fixed = Vec::new();
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS AC-{id:02} {name} [{secs:.2}s]: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL AC-{id:02} {name} [{secs:.2}s]: {why}");
            }
        }
    };
    report(1, "phi monotonicity and round trip", &mut ac1_phi);
    report(2, "resolvent firm nonexpansiveness", &mut ac2_resolvents);
    report(3, "convergent-to-zero matrix toolkit", &mut ac3_matrices);
    report(4, "linear solver second-order accuracy", &mut ac4_order);
    report(5, "S(0)=0 and Neumann constants", &mut ac5_zero_and_constant);
    report(6, "continuity inequality", &mut ac6_continuity);
    report(7, "lambda_1 constants", &mut ac7_lambda1);
    report(8, "Dirichlet/antiperiodic example, case (i)", &mut || ac8_example_first(&mut fixed));
    report(9, "rotation/periodic example, case (iv)", &mut || ac9_example_second(&mut fixed));
    report(10, "coercive scalar pipeline", &mut || ac10_coercive(&mut fixed));
    report(11, "fixed-point equivalence", &mut || ac11_fixed_point(&fixed));
    if failures == 0 {
        println!("acceptance: 11/11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
