//! Acceptance criteria 1-12. Each criterion prints one status line; known,
//! documented deviations print DEVIATION and do not fail the run.

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cmnf::chains::{
    chain_closed_form, integrate_chain, integrate_schwarzian, mv_series, solve_q, turn_counts, ChainState,
};
use cmnf::exec::Exec;
use cmnf::group::{hyperquadric_residue, GroupElement};
use cmnf::isotropy::{injectivity_rank, IsotropyContext};
use cmnf::lemmas::{
    build, c_eigen_product, delta_small, delta_sum_exact, det_dense, det_e_all, eigs_a, eigs_a_formula, eta_table, f1,
    f2, BandMatrixSpec, Family,
};
use cmnf::normal::{
    is_identity, is_normal_form, log_model, normal_form_basis, normalization_group_law, normalize,
    random_normal_form_component, NormalFormType,
};
use cmnf::scalar::{int, liouville_holds, liouville_holds_small, rat, sqrt17_convergents, FloatCtx, QuadExt};
use cmnf::series::{Series, Signature};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;
type C64 = Complex<f64>;

#[derive(Debug, PartialEq)]
enum Status {
    Pass,
    Fail,
    Deviation,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Pass, detail: detail.into() }
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { status: if ok { Status::Pass } else { Status::Fail }, detail: detail.into() }
}

fn sig(n: usize, e: usize) -> Signature {
    Signature::new(n, e).unwrap()
}

fn within(t: Instant, budget: Duration) -> (bool, String) {
    let el = t.elapsed();
    (el <= budget, format!("{:.2}s", el.as_secs_f64()))
}

fn c1_eta_table() -> Outcome {
    let t = Instant::now();
    let rows = eta_table();
    let (fast, el) = within(t, Duration::from_secs(1));
    let worst = rows[1..].iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let ok = rows[1..].iter().all(|r| r.pass);
    let m1 = &rows[0];
    check(
        ok && fast && rows.len() == 30,
        format!(
            "eta(2..30) max |diff| {worst:.4} <= 0.02 in {el}; eta(1) dual-reported: printed {} vs 8/3 = {:.4} and 6 (recurrence reading)",
            m1.printed, m1.value
        ),
    )
}

fn c2_delta_bound() -> Outcome {
    let t = Instant::now();
    let rows = Exec::default().map_range(1..801, |m| {
        let d = det_e_all(m);
        let (den, num) = (&d[m], &d[m + 1]);
        let bound = m < 30 || delta_small(m, den, num);
        let ne4 = num != &(BigInt::from(4) * den);
        let ne_b3 = BigInt::from(3) * num != BigInt::from(-4 * (m as i64 - 3)) * den;
        (m, bound, ne4, ne_b3)
    });
    let (fast, el) = within(t, Duration::from_secs(60));
    let bound_ok = rows.iter().all(|r| r.1);
    let ne4_ok = rows.iter().all(|r| r.2);
    let b3_fail: Vec<usize> = rows.iter().filter(|r| !r.3).map(|r| r.0).collect();
    let detail = format!(
        "|delta_m| <= 0.2 on 30..800: {bound_ok}; Delta^-1 != 4 on 1..800: {ne4_ok}; Delta^-1 = -4/3(m-3) at m in {b3_fail:?}; {el}"
    );
    if bound_ok && ne4_ok && fast && b3_fail.is_empty() {
        pass(detail)
    } else if bound_ok && ne4_ok && fast && b3_fail == [1] {
        Outcome {
            status: Status::Deviation,
            detail: format!("{detail} (Delta(1)^-1 = 8/3 = -4/3(1-3); B_m(3) exists only for m >= 4, holds on 2..800)"),
        }
    } else {
        check(false, detail)
    }
}

fn c3_binomial_sum() -> Outcome {
    let bad: Vec<usize> = Exec::default()
        .map_range(1..101, |m| {
            let d = det_e_all(m);
            let s = delta_sum_exact(m).unwrap();
            let ratio = QuadExt::from_rational(BigRational::new(d[m + 1].clone(), d[m].clone()));
            (m, s.inv().unwrap() == ratio)
        })
        .into_iter()
        .filter(|r| !r.1)
        .map(|r| r.0)
        .collect();
    check(
        bad.is_empty(),
        format!("1/Delta(m) in Q(sqrt17) equals det E_m(m+1)/det E_m(m) for m = 1..100; mismatches {bad:?}"),
    )
}

fn c4_eigen_and_det() -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=100 {
        for (x, y) in eigs_a(m).unwrap().iter().zip(eigs_a_formula(m)) {
            worst = worst.max((x - y).abs() / (1.0 + y.abs()));
        }
    }
    let dets_ok = (1..=30).all(|m| {
        let b = det_dense(&build(BandMatrixSpec::new(Family::B, m)).unwrap());
        let c = det_dense(&build(BandMatrixSpec::new(Family::C, m)).unwrap());
        BigInt::from(4) * b == c && c_eigen_product(m) == QuadExt::from_rational(BigRational::from(c))
    });
    check(
        worst <= 1e-8 && dets_ok,
        format!("eigenvalue rel error {worst:.2e} for m <= 100; det B_m = det C_m/4 = prod eigs(C_m)/4 exactly for m <= 30: {dets_ok}"),
    )
}

fn c5_constants() -> Outcome {
    let rel = |x: astro_float::BigFloat, want: f64| (FloatCtx::to_f64(&x) / want - 1.0).abs();
    let errs = [
        rel(f1(100, 256).unwrap(), 2114.7),
        rel(f1(200, 256).unwrap(), 1.5207),
        rel(f2(400, 256).unwrap(), 0.2247),
        rel(f2(600, 256).unwrap(), 0.1815),
        rel(f2(800, 256).unwrap(), 0.1564),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let ctx = FloatCtx::new(256);
    let cap = ctx.from_f64(5.33e-4);
    let tail: Vec<f64> = Exec::default().map_range(400..1001, |m| FloatCtx::to_f64(&f1(m, 256).unwrap()));
    let tail_ok = (400..=1000).all(|m| FloatCtx::le(&f1(m, 256).unwrap(), &cap));
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    check(
        worst < 1e-3 && tail_ok,
        format!("F1(100), F1(200), F2(400/600/800) max rel error {worst:.1e}; max F1 on 400..1000 = {tail_max:.3e} <= 5.33e-4"),
    )
}

fn c6_liouville() -> Outcome {
    let conv = sqrt17_convergents(&BigInt::from(1_000_000));
    let conv_ok = conv.iter().all(|(p, q)| liouville_holds(p, q));
    let mut scanned = 0u64;
    let mut scan_ok = true;
    for q in 1..=1000i64 {
        for p in -1..=5 * q {
            scanned += 1;
            scan_ok &= liouville_holds_small(p, q);
        }
    }
    // the integer scan agrees with the Q(sqrt17) test on a sample
    let agree =
        (1..=60i64).all(|q| (0..=5 * q).all(|p| liouville_holds_small(p, q) == liouville_holds(&p.into(), &q.into())));
    check(
        conv_ok && scan_ok && agree,
        format!(
            "{} convergents with q <= 1e6; {scanned} pairs with q <= 1000, p in -1..=5q (others trivial)",
            conv.len()
        ),
    )
}

fn c7_chain_oracle() -> Outcome {
    let t = Instant::now();
    let s = sig(1, 1);
    let sup_err = |a: C64, h: f64| -> f64 {
        let s0 = ChainState::new(vec![C64::new(0.0, 0.0)], vec![a], 0.0);
        let traj = integrate_chain(s, &s0, 0.5, h).unwrap();
        if traj.failure.is_some() {
            return f64::INFINITY;
        }
        let aa = a.norm_sqr();
        traj.points
            .iter()
            .map(|p| {
                let ustar = 2.0 * p.u / (1.0 + (1.0 - 4.0 * aa * aa * p.u * p.u).sqrt());
                let (z, w) = chain_closed_form(s, &[a], 1.0, 0.0, ustar).unwrap();
                (z[0] - p.z[0]).norm().max((w - p.w).norm())
            })
            .fold(0.0, f64::max)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples: Vec<C64> = (0..20)
        .map(|_| loop {
            let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if a.norm() <= 1.0 {
                break a;
            }
        })
        .collect();
    let errs: Vec<f64> = samples.iter().map(|&a| sup_err(a, 1e-3)).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let mut orders: Vec<f64> = samples
        .iter()
        .filter_map(|&a| {
            let (e1, e2) = (sup_err(a, 1e-2), sup_err(a, 5e-3));
            (e2 > 1e-13).then(|| (e1 / e2).log2())
        })
        .collect();
    orders.sort_by(|a, b| a.total_cmp(b));
    let median = orders[orders.len() / 2];
    let (fast, el) = within(t, Duration::from_secs(10));
    let max_a = samples.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let edge = (sup_err(C64::new(0.99, 0.0), 1e-3), sup_err(C64::new(1.0, 0.0), 1e-3));
    check(
        worst <= 1e-8 && (median - 4.0).abs() <= 0.3 && fast,
        format!(
            "20 samples |a| <= {max_a:.3}: sup error {worst:.2e}, median order {median:.3} over {} samples, {el}; boundary |a| = 0.99: {:.1e}, |a| = 1: {:.1e} (turning point at u = 1/(2|a|^2))",
            orders.len(),
            edge.0,
            edge.1
        ),
    )
}

fn c8_schwarzian() -> Outcome {
    let params = [(1.0, 2.0, 0.0), (0.7, 0.6, 0.4), (-1.3, 1.2, -0.4), (0.25, 3.0, 0.8)];
    let mut resid = 0.0f64;
    let mut rk = 0.0f64;
    for &(alpha, rho, r) in &params {
        let q = solve_q(alpha, rho, r).unwrap();
        for k in 0..=400 {
            resid = resid.max(q.schwarzian_residual(-2.0 + 0.01 * k as f64).abs());
        }
        let samples = integrate_schwarzian(alpha, rho, r, 1.0, 1e-3).unwrap();
        rk = samples.iter().map(|(u, v)| (v - q.q(*u).unwrap()).abs()).fold(rk, f64::max);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut turns_ok = true;
    let mut pairs = 0;
    for &(alpha, rho, r) in &params {
        let q = solve_q(alpha, rho, r).unwrap();
        let per = std::f64::consts::PI / alpha;
        let near = |x: f64| (x - x.round()).abs() < 1e-3;
        let mut checked = 0;
        while checked < 50 {
            let (u1, u2) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            if near((u2 - u1) / per) || near((q.q(u2).unwrap() - q.q(u1).unwrap()) / per) {
                continue;
            }
            let (tq, tu) = turn_counts(&q, u1, u2).unwrap();
            turns_ok &= tq == tu * q.sign as i64;
            checked += 1;
        }
        pairs += checked;
    }
    check(
        resid <= 1e-8 && rk <= 1e-8 && turns_ok,
        format!("residual {resid:.1e}, RK4 sup error {rk:.1e} (h = 1e-3), turn-count relation on {pairs} interval pairs: {turns_ok}"),
    )
}

fn c9_group_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut exact_ok = true;
    for (n, e) in [(1, 1), (1, 0), (2, 2), (2, 1)] {
        let s = sig(n, e);
        for _ in 0..3 {
            let g1 = GroupElement::<Q>::random(s, &mut rng, true);
            let g2 = GroupElement::<Q>::random(s, &mut rng, true);
            let g3 = GroupElement::<Q>::random(s, &mut rng, true);
            let id = GroupElement::identity(s);
            let g12 = g1.compose(&g2).unwrap();
            exact_ok &= g12.compose(&g3).unwrap() == g1.compose(&g2.compose(&g3).unwrap()).unwrap();
            exact_ok &= g1.compose(&g1.invert()).unwrap() == id;
            exact_ok &= g1.compose(&id).unwrap() == g1;
            // series of the product = composed series
            let lhs = g12.to_holmap(5);
            let rhs = g1.to_holmap(5).compose(&g2.to_holmap(5)).unwrap();
            exact_ok &= lhs == rhs;
            let tau = GroupElement::translation(s, g3.a.clone(), g3.r.clone());
            let conj = tau.compose(&g1).unwrap().compose(&tau.invert()).unwrap();
            let (a_star, r_star) = g1.conjugate_normal_part(&tau.a, &tau.r);
            exact_ok &= conj.a == a_star && conj.r == r_star && conj.u == g1.u && conj.rho == g1.rho;
        }
    }
    let mut worst_resid = 0.0f64;
    let mut worst_comp = 0.0f64;
    for k in 0..10_000 {
        let s = [sig(1, 1), sig(1, 0), sig(2, 2), sig(2, 1)][k % 4];
        let g1 = GroupElement::<f64>::random(s, &mut rng, true);
        let g2 = GroupElement::<f64>::random(s, &mut rng, true);
        let z: Vec<C64> = (0..s.n).map(|_| C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))).collect();
        let w = C64::new(rng.gen_range(-0.3..0.3), s.form(&z, &z).re);
        let (Ok((z1, w1)), Ok((z12, w12))) = (g2.apply(&z, &w), g1.compose(&g2).unwrap().apply(&z, &w)) else {
            continue;
        };
        let Ok((z2, w2)) = g1.apply(&z1, &w1) else { continue };
        let scale = 1.0 + w12.norm() + z12.iter().map(|x| x.norm_sqr()).sum::<f64>();
        worst_resid = worst_resid.max(hyperquadric_residue(s, &z12, w12) / scale);
        let d = (w2 - w12).norm() + z2.iter().zip(&z12).map(|(a, b)| (a - b).norm()).sum::<f64>();
        worst_comp = worst_comp.max(d / scale);
    }
    check(
        exact_ok && worst_resid <= 1e-10 && worst_comp <= 1e-10,
        format!(
            "exact laws for (n,e) in (1,1),(1,0),(2,2),(2,1): {exact_ok}; 1e4 points: residue {worst_resid:.1e}, composition {worst_comp:.1e} (relative to 1+|w|+|z|^2)"
        ),
    )
}

fn c10_normalization() -> Outcome {
    let cm = NormalFormType::chern_moser();
    let s1 = sig(1, 1);
    let q1 = Series::<Q>::hyperquadric(s1, 10);
    let r = normalize(&q1, &GroupElement::identity(s1), &cm).unwrap();
    let mut ok = is_identity(&r.map, 0.0) && r.output == q1;
    let s2 = sig(2, 1);
    let q2 = Series::<f64>::hyperquadric(s2, 10);
    let r2 = normalize(&q2, &GroupElement::identity(s2), &NormalFormType::chern_moser()).unwrap();
    ok &= is_identity(&r2.map, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut normal = Series::<Q>::hyperquadric(s1, 8);
    for mu in 6..=8 {
        normal = normal.add(&random_normal_form_component(s1, mu, 8, &mut rng)).unwrap();
    }
    let rn = normalize(&normal, &GroupElement::identity(s1), &cm).unwrap();
    ok &= is_identity(&rn.map, 0.0) && rn.output == normal;
    let mut exact_law = 0.0f64;
    for (n, e, tr) in [(1, 1, 8), (2, 1, 6)] {
        let s = sig(n, e);
        let g1 = GroupElement::<Q>::random(s, &mut rng, false);
        let g2 = GroupElement::<Q>::random(s, &mut rng, false);
        exact_law = exact_law.max(normalization_group_law(&Series::hyperquadric(s, tr), &g1, &g2, &cm).unwrap());
    }
    let mut float_law = 0.0f64;
    for (n, e, tr) in [(1, 1, 8), (2, 2, 7)] {
        let s = sig(n, e);
        let mut f = Series::<f64>::hyperquadric(s, tr);
        for mu in 6..=tr {
            f = f.add(&random_normal_form_component(s, mu, tr, &mut rng)).unwrap();
        }
        let g1 = GroupElement::<f64>::random(s, &mut rng, false);
        let g2 = GroupElement::<f64>::random(s, &mut rng, false);
        float_law = float_law.max(normalization_group_law(&f, &g1, &g2, &NormalFormType::chern_moser()).unwrap());
    }
    // indefinite n = 2: exact arithmetic (float round-off is amplified by the
    // non-unitary U, see the decision ledger)
    let s = sig(2, 1);
    let mut f = Series::<Q>::hyperquadric(s, 7);
    f = f.add(&random_normal_form_component(s, 6, 7, &mut rng)).unwrap();
    f = f.add(&random_normal_form_component(s, 7, 7, &mut rng)).unwrap();
    let g1 = GroupElement::<Q>::random(s, &mut rng, false);
    let g2 = GroupElement::<Q>::random(s, &mut rng, false);
    exact_law = exact_law.max(normalization_group_law(&f, &g1, &g2, &cm).unwrap());
    check(
        ok && exact_law == 0.0 && float_law <= 1e-9,
        format!(
            "hyperquadric fixpoint through weight 10 (n=1 exact, n=2 float): {ok}; group law defect on hyperquadric and perturbed (2,1) input, exact: {exact_law:e}; perturbed (1,1), (2,2) input, float: {float_law:.1e}"
        ),
    )
}

fn c11_injectivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut report = Vec::new();
    let mut ok = true;
    for n in [1usize, 2] {
        let s = sig(n, n);
        for l in [4u32, 6, 8] {
            if normal_form_basis(s, l).is_empty() {
                report.push(format!("(n={n},l={l}) vacuous: no nonzero normal-form component"));
                continue;
            }
            let mut ranks = Vec::new();
            for _ in 0..50 {
                let f = random_normal_form_component::<f64, _>(s, l, l, &mut rng);
                if f.is_empty() {
                    continue;
                }
                ranks.push(injectivity_rank(&IsotropyContext::new(f, l).unwrap()).unwrap());
            }
            let full = ranks.len() == 50 && ranks.iter().all(|&r| r == 2 * n);
            ok &= full;
            report.push(format!("(n={n},l={l}) {}/50 rank {}", ranks.iter().filter(|&&r| r == 2 * n).count(), 2 * n));
        }
    }
    let zero_rank = [(1usize, 6u32), (2, 4), (2, 6)]
        .iter()
        .map(|&(n, l)| injectivity_rank(&IsotropyContext::new(Series::<f64>::zero(sig(n, n), l), l).unwrap()).unwrap())
        .max()
        .unwrap();
    ok &= zero_rank == 0;
    check(ok, format!("{}; F = 0 gives rank {zero_rank}", report.join("; ")))
}

fn c12_mv_model() -> Outcome {
    let mut ok = true;
    for n in [1usize, 2] {
        let s = sig(n, n);
        for alpha in [rat(1, 4), rat(1, 2), int(1)] {
            let m = mv_series(&Series::<Q>::hyperquadric(s, 8), &alpha).unwrap();
            ok &= is_normal_form(&m, &NormalFormType::new(alpha.clone(), int(0))).unwrap().ok;
            let q = Series::<Q>::hyperquadric(s, 8);
            let w4 = q.mul(&q).unwrap().scale_real(&(int(2) * alpha.clone()));
            ok &= m.weight_part(4) == w4;
            ok &= m == log_model(s, 8, &alpha);
            ok &= !m.weight_part(4).is_empty() && !alpha.is_zero();
        }
    }
    check(ok, "alpha in {1/4, 1/2, 1}, n in {1, 2}: normal form of type (alpha, 0) through weight 8, weight-4 part 2 alpha <z,z>^2")
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, c1_eta_table),
        (2, c2_delta_bound),
        (3, c3_binomial_sum),
        (4, c4_eigen_and_det),
        (5, c5_constants),
        (6, c6_liouville),
        (7, c7_chain_oracle),
        (8, c8_schwarzian),
        (9, c9_group_laws),
        (10, c10_normalization),
        (11, c11_injectivity),
        (12, c12_mv_model),
    ];
    let mut failed = Vec::new();
    let _ = writeln!(std::io::stderr());
    for (k, f) in criteria {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome { status: Status::Fail, detail: format!("panicked: {}", msg.unwrap_or_default()) }
        });
        let tag = match out.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Deviation => "DEVIATION",
        };
        // straight to the handle so the line survives output capture
        let _ = writeln!(std::io::stderr(), "criterion {k:>2}: {tag}: {}", out.detail);
        if out.status == Status::Fail {
            failed.push(k);
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
