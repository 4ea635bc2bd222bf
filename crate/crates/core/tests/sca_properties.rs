use cfres_core::channel::{estimation_quality, PilotConfig};
use cfres_core::ppzf::{partition_users, PowerAllocation};
use cfres_core::sca::{
    eve_signal, eve_sinr_lower_bound, log2_tangent, sinr_lower_bound, tangent, IteratePoint, RateEncoding, ScaOptions,
    SecrecyProblem, ServiceTargets,
};
use cfres_core::scenario::{generate_drop, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(seed: u64, omega: (f64, f64), options: ScaOptions) -> SecrecyProblem {
    let cfg = ScenarioConfig { aps: 8, users: 4, area_side_m: 400.0, ..Default::default() };
    let drop = generate_drop(&cfg, seed).unwrap();
    let stats = estimation_quality(&drop, &PilotConfig::uniform(4, 4, 100.0, 100.0)).unwrap();
    let part = partition_users(&stats, 4, 0.1).unwrap();
    let targets = ServiceTargets::uniform(4, 3.0, 5.0, 0.1, omega);
    SecrecyProblem::new(stats, part, targets, vec![200.0; 8], options).unwrap()
}

/// Uniform in amplitude, then scaled into each AP's budget.
fn random_allocation(rng: &mut ChaCha8Rng, aps: usize, users: usize, p_max: f64) -> PowerAllocation {
    let mut u = PowerAllocation::zeros(aps, users);
    for l in 0..aps {
        for k in 0..users {
            u.u_users[(l, k)] = rng.gen_range(0.0..1.0);
        }
        u.u_an[l] = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 };
        let fill = rng.gen_range(0.01..1.0) * p_max;
        let s = (fill / u.ap_power(l)).sqrt();
        u.u_users.row_mut(l).scale_mut(s);
        u.u_an[l] *= s;
    }
    u
}

#[test]
fn surrogates_bound_the_true_functions() {
    for seed in 0..3 {
        let p = problem(seed, (0.5, 0.5), ScaOptions::default());
        let c = &p.coeffs;
        let (aps, users) = (c.aps(), c.users());
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for _ in 0..20 {
            let n = p.point_at(random_allocation(&mut rng, aps, users, 200.0));
            let v_n = eve_signal(c, &n.u);
            let flat_n = n.u.to_vec();
            // equality at the expansion point
            for k in 0..users {
                let s = c.sinr_user(k, &n.u);
                assert!((sinr_lower_bound(n.x[k], n.phi[k], n.x[k], n.phi[k]) - s).abs() <= 1e-8 * s.max(1.0));
            }
            assert!((tangent(n.f_d, &n.grad_f_d, &flat_n, &flat_n) - n.f_d).abs() <= 1e-8 * n.f_d);
            let g_e = c.sinr_eve(&n.u).unwrap();
            assert!((eve_sinr_lower_bound(&v_n, n.f_d, &v_n, n.f_d) - g_e).abs() <= 1e-8 * g_e.max(1.0));

            for _ in 0..50 {
                let u = random_allocation(&mut rng, aps, users, 200.0);
                let flat = u.to_vec();
                for k in 0..users {
                    let lb = sinr_lower_bound(n.x[k], n.phi[k], c.coherent(k, &u), c.interference(k, &u));
                    let s = c.sinr_user(k, &u);
                    assert!(lb <= s + 1e-9 * s.max(1.0), "user {k}: {lb} > {s}");
                }
                let f_d = c.eve_denominator(&u);
                assert!(tangent(n.f_d, &n.grad_f_d, &flat_n, &flat) <= f_d * (1.0 + 1e-12));
                let g = c.sinr_eve(&u).unwrap();
                let lb = eve_sinr_lower_bound(&v_n, n.f_d, &eve_signal(c, &u), f_d);
                assert!(lb <= g + 1e-9 * g.max(1.0), "eve {lb} > {g}");
                assert!(log2_tangent(g_e, g) >= (1.0 + g).log2() - 1e-12);
            }
        }
    }
}

/// Every quantity the subproblem promises about its solution must hold for
/// the true closed forms at the returned allocation.
fn check_inner_approximation(p: &SecrecyProblem, iterations: usize) -> usize {
    let mut point = p.initial_point();
    let target = p.coeffs.attacked_user;
    let mut relaxed = 0;
    for it in 0..iterations {
        let (next, diag): (IteratePoint, _) = p.step(&point).unwrap();
        relaxed += diag.relaxed_secrecy as usize;
        let r = &next.report;
        for k in 0..p.coeffs.users() {
            assert!(r.se_users[k] >= next.tau[k] - 1e-6, "it {it} user {k}: SE {} < tau {}", r.se_users[k], next.tau[k]);
            assert!(r.se_users[k] >= p.targets.se_min[k] - 1e-6, "it {it} user {k} below SE_min");
        }
        if let Some(se_e) = r.se_eve {
            assert!(se_e <= next.eta1 + 1e-6, "it {it}: SE_e {se_e} > eta {}", next.eta1);
            if !diag.relaxed_secrecy {
                assert!(r.sse_target.unwrap() >= next.zeta1 - 1e-6);
            }
            assert!(r.se_users[target] - se_e >= next.zeta1 - 2e-6);
        }
        next.u.check_budget(&p.p_max, 1e-6 * 200.0).unwrap();
        assert!(diag.max_violation < 1e-5, "it {it}: violation {}", diag.max_violation);
        point = next;
    }
    relaxed
}

#[test]
fn subproblem_solutions_are_feasible_for_the_true_problem() {
    for seed in 0..3 {
        for omega in [(0.5, 0.5), (1.0, 0.0), (0.0, 1.0)] {
            check_inner_approximation(&problem(seed, omega, ScaOptions::default()), 8);
        }
    }
}

#[test]
fn literal_and_piecewise_subproblems_are_also_inner() {
    let literal = ScaOptions { overshoot_guard: false, ..Default::default() };
    check_inner_approximation(&problem(1, (0.5, 0.5), literal), 8);
    let pwl = ScaOptions { rate_encoding: RateEncoding::PiecewiseLinear { segments: 64, g_max: 1e5 }, ..Default::default() };
    check_inner_approximation(&problem(2, (0.5, 0.5), pwl), 8);
}

#[test]
fn without_artificial_noise_the_noise_beam_stays_off() {
    let p = problem(0, (0.5, 0.5), ScaOptions { artificial_noise: false, ..Default::default() });
    let run = p.run_sca(p.initial_point(), 10, false);
    assert!(run.failure.is_none(), "{:?}", run.failure);
    for pt in &run.points {
        assert!(pt.u.u_an.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn true_objective_descends() {
    for seed in 0..3 {
        let p = problem(seed, (0.5, 0.5), ScaOptions::default());
        let run = p.run_sca(p.initial_point(), 20, false);
        assert!(run.failure.is_none(), "seed {seed}: {:?}", run.failure);
        for (n, w) in run.psi.windows(2).enumerate() {
            assert!(w[1] <= w[0] + 1e-6, "seed {seed} iteration {}: {} -> {}", n + 1, w[0], w[1]);
        }
    }
}
