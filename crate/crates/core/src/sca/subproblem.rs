//! Convex inner approximation of the power-allocation problem around an
//! iterate.

use std::f64::consts::LN_2;

use super::conic::{AffineExpr, ConeBlock, ConeKind, ConicSubproblem, VariableLayout};
use super::point::{eve_signal, IteratePoint};
use super::{RateEncoding, SecrecyProblem};
use crate::error::{Error, Result};

/// Collects blocks while building.
struct Builder {
    layout: VariableLayout,
    nonneg: Vec<AffineExpr>,
    zero: Vec<AffineExpr>,
    blocks: Vec<ConeBlock>,
}

impl Builder {
    fn soc(&mut self, label: &'static str, rows: Vec<AffineExpr>) {
        self.blocks.push(ConeBlock { kind: ConeKind::SecondOrder, label, rows });
    }

    /// `e >= (y / d - 1)^2` as `|(2 (y/d - 1), e - 1)| <= e + 1`.
    fn square_epigraph(&mut self, e: usize, y: usize, d: f64) {
        let gap = AffineExpr::constant(-2.0).term(y, 2.0 / d);
        self.soc("objective", vec![AffineExpr::var(e).plus(1.0), AffineExpr::var(e).plus(-1.0), gap]);
    }

    /// Rotated cone `|s|^2 <= w` as `|(2 s, w - 1)| <= w + 1`.
    fn rotated(&mut self, label: &'static str, w: AffineExpr, s: Vec<AffineExpr>) {
        let mut rows = vec![w.clone().plus(1.0), w.plus(-1.0)];
        rows.extend(s.into_iter().map(|r| r.scaled(2.0)));
        self.soc(label, rows);
    }

    /// Product form `|v|^2 <= y z` for `y, z >= 0`.
    fn hyperbolic(&mut self, label: &'static str, y: AffineExpr, z: AffineExpr, v: Vec<AffineExpr>) {
        let mut rows = vec![y.clone().add(&z), y.add(&z.scaled(-1.0))];
        rows.extend(v.into_iter().map(|r| r.scaled(2.0)));
        self.soc(label, rows);
    }

    /// `tau <= log2(1 + g)`, written relative to `g_n` so the cone sits
    /// near `(0, 1, 1)` at the expansion point.
    fn rate(&mut self, encoding: &RateEncoding, tau: usize, g: usize, g_n: f64) {
        match *encoding {
            RateEncoding::ExpCone => {
                let scale = 1.0 + g_n.max(0.0);
                self.blocks.push(ConeBlock {
                    kind: ConeKind::Exponential,
                    label: "rate",
                    rows: vec![
                        AffineExpr::var(tau).scaled(LN_2).plus(-scale.ln()),
                        AffineExpr::constant(1.0),
                        AffineExpr::var(g).plus(1.0).scaled(1.0 / scale),
                    ],
                })
            }
            RateEncoding::PiecewiseLinear { segments, g_max } => {
                self.nonneg.push(AffineExpr::constant(g_max).term(g, -1.0));
                let knots: Vec<f64> =
                    (0..=segments).map(|i| (1.0 + g_max).powf(i as f64 / segments as f64) - 1.0).collect();
                for w in knots.windows(2) {
                    let (g0, g1) = (w[0], w[1]);
                    let (f0, f1) = ((1.0 + g0).log2(), (1.0 + g1).log2());
                    let slope = (f1 - f0) / (g1 - g0);
                    // chord(g) - tau >= 0
                    self.nonneg.push(AffineExpr::constant(f0 - slope * g0).term(g, slope).term(tau, -1.0));
                }
            }
        }
    }

    /// `y - log2(1 + g_n) - (g - g_n) / ((1 + g_n) ln 2) >= 0`.
    fn above_log_tangent(&mut self, y: usize, g: usize, g_n: f64) {
        let slope = 1.0 / ((1.0 + g_n) * LN_2);
        let offset = (1.0 + g_n).log2() - slope * g_n;
        self.nonneg.push(AffineExpr::constant(-offset).term(y, 1.0).term(g, -slope));
    }

    fn finish(mut self, objective: Vec<f64>) -> ConicSubproblem {
        let mut blocks = Vec::with_capacity(self.blocks.len() + 2);
        if !self.zero.is_empty() {
            blocks.push(ConeBlock { kind: ConeKind::Zero, label: "fixed", rows: std::mem::take(&mut self.zero) });
        }
        blocks.push(ConeBlock { kind: ConeKind::Nonnegative, label: "linear", rows: std::mem::take(&mut self.nonneg) });
        blocks.append(&mut self.blocks);
        ConicSubproblem { layout: self.layout, objective, blocks }
    }
}

impl SecrecyProblem {
    /// Largest `x_k` below which the SINR lower bound is considered degenerate.
    pub fn x_floor(&self) -> f64 {
        let p = self.p_max.iter().cloned().fold(0.0, f64::max);
        let g = self.coeffs.gain.iter().map(|a| a * a).fold(0.0, f64::max);
        self.options.x_floor_factor * (p * g).sqrt()
    }

    /// Objective weight of each user's epigraph slot.
    pub fn slot_weights(&self) -> Vec<f64> {
        let users = self.coeffs.users();
        let target = self.coeffs.attacked_user;
        (0..users)
            .map(|k| {
                if k == target {
                    self.targets.omega1
                } else {
                    self.targets.omega2 / (users - 1) as f64
                }
            })
            .collect()
    }

    /// Builds the convex subproblem around `point`.
    ///
    /// With `relax_secrecy` the constraint `zeta_1 >= 0` is dropped, which
    /// keeps the subproblem feasible at `point` when the attacked user is
    /// currently weaker than the eavesdropper.
    pub fn build_subproblem(&self, point: &IteratePoint, relax_secrecy: bool) -> Result<ConicSubproblem> {
        let c = &self.coeffs;
        let (aps, users, target) = (c.aps(), c.users(), c.attacked_user);
        let opts = &self.options;
        let eve = c.eve_active;
        let floor = self.x_floor();
        for (k, &x) in point.x.iter().enumerate() {
            if !(x >= floor) {
                return Err(Error::DegenerateLinearization { user: k, value: x, floor });
            }
        }

        let layout = VariableLayout::new(aps, users, target, opts.artificial_noise, eve, opts.overshoot_guard);
        let lay = layout.clone();
        let mut b = Builder { layout, nonneg: Vec::new(), zero: Vec::new(), blocks: Vec::new() };
        let weights = self.slot_weights();
        let u_flat = point.u.to_vec();

        // |sqrt(leak_l) u_{l,t}| rows over all streams, optionally skipping one user
        let power_rows = |scale: f64, leak: &dyn Fn(usize) -> f64, skip: Option<usize>| -> Vec<AffineExpr> {
            let mut rows = Vec::new();
            for l in 0..aps {
                let s = scale * leak(l).max(0.0).sqrt();
                if s == 0.0 {
                    continue;
                }
                for t in (0..users).filter(|&t| Some(t) != skip) {
                    rows.push(AffineExpr::default().term(lay.u_index(l, t), s));
                }
                if let Some(an) = lay.u_an {
                    rows.push(AffineExpr::default().term(an + l, s));
                }
            }
            rows
        };
        // tangent of a convex function of u, as an affine expression
        let linearize = |value: f64, grad: &[f64]| -> AffineExpr {
            let mut e = AffineExpr::constant(value);
            for (i, (&gi, &ui)) in grad.iter().zip(&u_flat).enumerate() {
                if gi == 0.0 {
                    continue;
                }
                e.constant -= gi * ui;
                if let Some(v) = lay.flat_index(i) {
                    e = e.term(v, gi);
                }
            }
            e
        };

        // allocation domain
        let amps: Vec<usize> = (0..aps * users).map(|i| lay.u + i).chain(lay.u_an.iter().flat_map(|&a| a..a + aps)).collect();
        for &v in &amps {
            b.nonneg.push(AffineExpr::var(v));
        }
        for l in 0..aps {
            let mut rows = vec![AffineExpr::constant(self.p_max[l].sqrt())];
            rows.extend((0..users).map(|t| AffineExpr::var(lay.u_index(l, t))));
            if let Some(an) = lay.u_an {
                rows.push(AffineExpr::var(an + l));
            }
            b.soc("power", rows);
        }

        // user rates: tau_k <= log2(1 + g_k), g_k <= SINR lower bound
        for k in 0..users {
            let (g, tau) = (lay.g + k, lay.tau + k);
            b.nonneg.push(AffineExpr::var(g));
            b.nonneg.push(AffineExpr::var(tau).plus(-self.targets.se_min[k]));
            let r = point.x[k] / point.phi[k];
            let mut w = AffineExpr::constant(-r * r).term(g, -1.0);
            for l in 0..aps {
                w = w.term(lay.u_index(l, k), 2.0 * r * c.gain[(l, k)]);
            }
            let leak = |l: usize| c.leak[(l, k)];
            b.rotated("sinr_lb", w, power_rows(r, &leak, None));
            b.rate(&opts.rate_encoding, tau, g, point.report.sinr_users[k]);
        }

        // eavesdropper: gamma_e f_D^lb >= |v(u)|^2, eta_1 above the tangent of log2(1 + gamma_e)
        let eve_vector = |scale: f64| -> Vec<AffineExpr> {
            let mut rows = vec![{
                let mut e = AffineExpr::default();
                for l in 0..aps {
                    e = e.term(lay.u_index(l, target), scale * c.eve_gain[l]);
                }
                e
            }];
            for l in 0..aps {
                let s = scale * c.eve_leak[l].max(0.0).sqrt();
                if s != 0.0 {
                    rows.push(AffineExpr::default().term(lay.u_index(l, target), s));
                }
            }
            rows
        };
        if let (Some(eta), Some(ge)) = (lay.eta, lay.gamma_e) {
            let f_lb = linearize(point.f_d, &point.grad_f_d);
            b.nonneg.push(f_lb.clone().plus(-opts.denominator_floor));
            b.nonneg.push(AffineExpr::var(ge));
            b.hyperbolic("eve", AffineExpr::var(ge), f_lb, eve_vector(1.0));
            b.above_log_tangent(eta, ge, point.gamma_e);
        }

        // secrecy: tau_1 - eta_1 >= zeta_1 (>= 0)
        if !relax_secrecy {
            b.nonneg.push(AffineExpr::var(lay.zeta));
        }
        let mut margin = AffineExpr::var(lay.tau + target).term(lay.zeta, -1.0);
        if let Some(eta) = lay.eta {
            margin = margin.term(eta, -1.0);
        }
        b.nonneg.push(margin);

        // objective epigraphs
        let mut objective = vec![0.0; lay.len];
        for k in 0..users {
            let e = lay.epi + k;
            if weights[k] <= 0.0 {
                b.zero.push(AffineExpr::var(e));
                continue;
            }
            objective[e] = weights[k];
            let (y, d) = if k == target { (lay.zeta, self.targets.sse_des) } else { (lay.tau + k, self.targets.se_des[k]) };
            b.square_epigraph(e, y, d);
        }

        if let Some(guard) = &lay.guard {
            self.add_guard(&mut b, point, &weights, &power_rows, &linearize, guard);
        }

        let sub = b.finish(objective);
        sub.validate()?;
        Ok(sub)
    }

    /// Upper surrogates `tau_hi >= SE_k` and `zeta_hi >= SSE` so that the
    /// squared gap is bounded on both sides of the target.
    #[allow(clippy::too_many_arguments)]
    fn add_guard(
        &self,
        b: &mut Builder,
        point: &IteratePoint,
        weights: &[f64],
        power_rows: &dyn Fn(f64, &dyn Fn(usize) -> f64, Option<usize>) -> Vec<AffineExpr>,
        linearize: &dyn Fn(f64, &[f64]) -> AffineExpr,
        guard: &super::conic::GuardLayout,
    ) {
        let c = &self.coeffs;
        let lay = b.layout.clone();
        let (aps, users, target) = (c.aps(), c.users(), c.attacked_user);
        let eps = self.options.denominator_floor;
        let active = |k: usize| weights[k] > 0.0;

        for k in 0..users {
            let (hi, ghi) = (guard.tau_hi + k, guard.gamma_hi + k);
            if !active(k) {
                b.zero.push(AffineExpr::var(hi));
                b.zero.push(AffineExpr::var(ghi));
                continue;
            }
            // gamma_hi >= x_k(u)^2 / phi_k^lb(u)
            let phi_lb = linearize(point.phi[k], &c.interference_gradient(k, &point.u));
            b.nonneg.push(phi_lb.clone().plus(-eps));
            let mut x = AffineExpr::default();
            for l in 0..aps {
                x = x.term(lay.u_index(l, k), c.gain[(l, k)]);
            }
            b.hyperbolic("sinr_ub", AffineExpr::var(ghi), phi_lb, vec![x]);
            b.above_log_tangent(hi, ghi, point.report.sinr_users[k]);
            if k != target {
                b.square_epigraph(lay.epi + k, hi, self.targets.se_des[k]);
            }
        }

        let zhi = guard.zeta_hi;
        if !active(target) {
            b.zero.push(AffineExpr::var(zhi));
            if let (Some(lo), Some(ge)) = (guard.eta_lo, guard.g_eve) {
                b.zero.push(AffineExpr::var(lo));
                b.zero.push(AffineExpr::var(ge));
            }
            return;
        }
        b.nonneg.push(AffineExpr::var(zhi));
        let mut over = AffineExpr::var(zhi).term(guard.tau_hi + target, -1.0);
        if let (Some(lo), Some(ge)) = (guard.eta_lo, guard.g_eve) {
            over = over.term(lo, 1.0);
            // g_e <= tangent of |v|^2 / f_D, eta_lo <= log2(1 + g_e)
            let v_n = eve_signal(c, &point.u);
            let c1 = 2.0 / point.f_d;
            let c2 = v_n.norm_squared() / (point.f_d * point.f_d);
            let mut w = AffineExpr::constant(-c2).term(ge, -1.0);
            for l in 0..aps {
                w = w.term(lay.u_index(l, target), c1 * v_n[0] * c.eve_gain[l]);
                w = w.term(lay.u_index(l, target), c1 * v_n[l + 1] * c.eve_leak[l].max(0.0).sqrt());
            }
            let leak = |l: usize| c.eve_leak[l];
            b.rotated("eve_lb", w, power_rows(c2.sqrt(), &leak, Some(target)));
            b.rate(&RateEncoding::ExpCone, lo, ge, point.gamma_e);
        }
        b.nonneg.push(over);
        b.square_epigraph(lay.epi + target, zhi, self.targets.sse_des);
    }
}
