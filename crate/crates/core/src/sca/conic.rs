//! Solver-agnostic container for the convex subproblems, plus the Clarabel
//! backend.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// Interior-point step damping. The default 0.99 stalls on some of the
/// larger exponential-cone subproblems.
const MAX_STEP_FRACTION: f64 = 0.9;

/// Tolerance multiplier for the single retry after a stalled solve.
const RETRY_TOLERANCE_FACTOR: f64 = 100.0;

/// `constant + sum coef * x[index]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineExpr {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    pub fn var(index: usize) -> Self {
        Self { constant: 0.0, terms: vec![(index, 1.0)] }
    }

    pub fn term(mut self, index: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
        self
    }

    pub fn plus(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self
    }

    pub fn add(mut self, other: &AffineExpr) -> Self {
        self.constant += other.constant;
        self.terms.extend(other.terms.iter().copied());
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// Every row equals zero.
    Zero,
    /// Every row is non-negative.
    Nonnegative,
    /// `rows[0] >= |rows[1..]|`.
    SecondOrder,
    /// `(s1, s2, s3)` with `s2 exp(s1 / s2) <= s3`, `s2 > 0`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub label: &'static str,
    pub rows: Vec<AffineExpr>,
}

impl ConeBlock {
    /// Distance-like violation of the cone membership at `x`; zero when
    /// satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let s: Vec<f64> = self.rows.iter().map(|r| r.eval(x)).collect();
        match self.kind {
            ConeKind::Zero => s.iter().map(|v| v.abs()).fold(0.0, f64::max),
            ConeKind::Nonnegative => s.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max),
            ConeKind::SecondOrder => {
                let tail = s[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                (tail - s[0]).max(0.0)
            }
            ConeKind::Exponential => {
                let (a, b, c) = (s[0], s[1], s[2]);
                if b <= 0.0 {
                    if b == 0.0 && a <= 0.0 && c >= 0.0 {
                        0.0
                    } else {
                        (-b).max(0.0) + (-c).max(0.0) + a.max(0.0)
                    }
                } else {
                    (b * (a / b).exp() - c).max(0.0)
                }
            }
        }
    }
}

/// Named offsets into the decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    pub aps: usize,
    pub users: usize,
    pub attacked_user: usize,
    /// `u_{l,k}` at `u + k * aps + l`.
    pub u: usize,
    pub u_an: Option<usize>,
    pub tau: usize,
    pub g: usize,
    pub zeta: usize,
    pub eta: Option<usize>,
    pub gamma_e: Option<usize>,
    /// One epigraph scalar per user; the attacked user's slot holds the
    /// secrecy term.
    pub epi: usize,
    pub guard: Option<GuardLayout>,
    pub len: usize,
}

/// Upper-side surrogates that keep the squared gap from hiding overshoot.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardLayout {
    pub tau_hi: usize,
    pub gamma_hi: usize,
    pub zeta_hi: usize,
    pub eta_lo: Option<usize>,
    pub g_eve: Option<usize>,
}

impl VariableLayout {
    pub fn new(aps: usize, users: usize, attacked_user: usize, with_an: bool, with_eve: bool, guard: bool) -> Self {
        let mut next = 0;
        let mut take = |n: usize| {
            let at = next;
            next += n;
            at
        };
        let u = take(aps * users);
        let u_an = with_an.then(|| take(aps));
        let tau = take(users);
        let g = take(users);
        let zeta = take(1);
        let eta = with_eve.then(|| take(1));
        let gamma_e = with_eve.then(|| take(1));
        let epi = take(users);
        let guard = guard.then(|| GuardLayout {
            tau_hi: take(users),
            gamma_hi: take(users),
            zeta_hi: take(1),
            eta_lo: with_eve.then(|| take(1)),
            g_eve: with_eve.then(|| take(1)),
        });
        let len = next;
        Self { aps, users, attacked_user, u, u_an, tau, g, zeta, eta, gamma_e, epi, guard, len }
    }

    pub fn u_index(&self, ap: usize, user: usize) -> usize {
        self.u + user * self.aps + ap
    }

    /// Variable index of entry `i` of the flattened allocation, or `None`
    /// for AN entries when AN is disabled.
    pub fn flat_index(&self, i: usize) -> Option<usize> {
        let block = self.aps * self.users;
        if i < block {
            Some(self.u + i)
        } else {
            self.u_an.map(|a| a + i - block)
        }
    }
}

/// A conic program `min c^T x` subject to cone membership of affine rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSubproblem {
    pub layout: VariableLayout,
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

/// Raw solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
    pub solve_time_s: f64,
    /// Largest cone violation over all blocks at `x`.
    pub max_violation: f64,
    pub status: String,
}

impl ConicSubproblem {
    pub fn num_vars(&self) -> usize {
        self.layout.len
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.len() != n {
            return Err(Error::Dimension(format!("objective has {} entries for {n} variables", self.objective.len())));
        }
        for b in &self.blocks {
            let ok = match b.kind {
                ConeKind::Zero | ConeKind::Nonnegative => !b.rows.is_empty(),
                ConeKind::SecondOrder => b.rows.len() >= 2,
                ConeKind::Exponential => b.rows.len() == 3,
            };
            if !ok {
                return Err(Error::Dimension(format!("{:?} block '{}' with {} rows", b.kind, b.label, b.rows.len())));
            }
            for r in &b.rows {
                if !r.constant.is_finite() {
                    return Err(Error::Dimension(format!("non-finite constant in '{}'", b.label)));
                }
                for &(i, c) in &r.terms {
                    if i >= n || !c.is_finite() {
                        return Err(Error::Dimension(format!("bad term ({i}, {c}) in '{}'", b.label)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| b.violation(x)).fold(0.0, f64::max)
    }

    /// Largest violation per block label.
    pub fn violations_by_label(&self, x: &[f64]) -> Vec<(&'static str, f64)> {
        let mut out: Vec<(&'static str, f64)> = Vec::new();
        for b in &self.blocks {
            let v = b.violation(x);
            match out.iter_mut().find(|(l, _)| *l == b.label) {
                Some(e) => e.1 = e.1.max(v),
                None => out.push((b.label, v)),
            }
        }
        out
    }

    /// Solves with Clarabel. Rows `s = constant + a^T x` map to
    /// `A x + s = b` with `A = -a`, `b = constant`.
    pub fn solve(&self, tolerance: f64, max_iter: u32) -> Result<ConicSolution> {
        self.validate()?;
        let n = self.num_vars();
        let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0;
        for block in &self.blocks {
            for r in &block.rows {
                for &(i, c) in &r.terms {
                    ri.push(row);
                    ci.push(i);
                    vals.push(-c);
                }
                b.push(r.constant);
                row += 1;
            }
            let d = block.rows.len();
            let cone = match block.kind {
                ConeKind::Zero => SupportedConeT::ZeroConeT(d),
                ConeKind::Nonnegative => SupportedConeT::NonnegativeConeT(d),
                ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(d),
                ConeKind::Exponential => SupportedConeT::ExponentialConeT(),
            };
            push_merged(&mut cones, cone);
        }
        let a = CscMatrix::new_from_triplets(row, n, ri, ci, vals);
        let p = CscMatrix::zeros((n, n));

        let start = Instant::now();
        let mut tol = tolerance;
        let mut solver = run_clarabel(&p, &self.objective, &a, &b, &cones, tol, max_iter)?;
        // exp-cone problems sometimes stall just short of tight tolerances
        if solver.solution.status == SolverStatus::InsufficientProgress {
            tol = tolerance * RETRY_TOLERANCE_FACTOR;
            solver = run_clarabel(&p, &self.objective, &a, &b, &cones, tol, max_iter)?;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let sol = &solver.solution;
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {}
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                return Err(Error::Infeasible(format!("solver reports {:?}", sol.status)));
            }
            other => return Err(Error::SolverFailure(format!("{other:?}"))),
        }
        let x = sol.x.clone();
        let status = if tol == tolerance { format!("{:?}", sol.status) } else { format!("{:?} at tolerance {tol:e}", sol.status) };
        Ok(ConicSolution {
            objective: self.objective_value(&x),
            max_violation: self.max_violation(&x),
            iterations: sol.iterations,
            solve_time_s: elapsed,
            status,
            x,
        })
    }
}

fn run_clarabel(
    p: &CscMatrix<f64>,
    q: &[f64],
    a: &CscMatrix<f64>,
    b: &[f64],
    cones: &[SupportedConeT<f64>],
    tolerance: f64,
    max_iter: u32,
) -> Result<DefaultSolver<f64>> {
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(max_iter)
        .tol_gap_abs(tolerance)
        .tol_gap_rel(tolerance)
        .tol_feas(tolerance)
        .max_step_fraction(MAX_STEP_FRACTION)
        .build()
        .map_err(|e| Error::SolverFailure(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(p, q, a, b, cones, settings)
        .map_err(|e| Error::SolverFailure(format!("setup: {e:?}")))?;
    solver.solve();
    Ok(solver)
}

fn push_merged(cones: &mut Vec<SupportedConeT<f64>>, cone: SupportedConeT<f64>) {
    match (cones.last_mut(), &cone) {
        (Some(SupportedConeT::NonnegativeConeT(a)), SupportedConeT::NonnegativeConeT(d)) => *a += d,
        (Some(SupportedConeT::ZeroConeT(a)), SupportedConeT::ZeroConeT(d)) => *a += d,
        _ => cones.push(cone),
    }
}
