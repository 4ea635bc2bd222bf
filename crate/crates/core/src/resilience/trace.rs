use serde::{Deserialize, Serialize};

use super::metrics::{adaptation, recovery, ResilienceWeights};
use crate::error::Result;

/// One scored iterate. Its position in [`ResilienceTrace::records`] is also
/// the index of its allocation snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub t_ms: f64,
    pub psi: f64,
    pub alpha_ada: f64,
    pub alpha_rec: f64,
    pub alpha_overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceTrace {
    pub t0_ms: f64,
    pub t_d_ms: f64,
    pub alpha_abs: f64,
    pub weights: ResilienceWeights,
    pub records: Vec<TraceRecord>,
    /// Record with the highest overall score, earliest on ties.
    pub best_index: Option<usize>,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
}

impl ResilienceTrace {
    pub fn best(&self) -> Option<&TraceRecord> {
        self.best_index.map(|i| &self.records[i])
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Recomputes every overall score and the best index under other weights.
    pub fn rescore(&self, weights: ResilienceWeights) -> Result<Self> {
        let mut tracker = ScoreTracker::new(weights, self.t0_ms, self.t_d_ms, self.alpha_abs)?;
        for r in &self.records {
            tracker.push(r.iter, r.t_ms, r.psi);
        }
        Ok(tracker.finish(self.failure.clone()))
    }

    /// Copy with absorption and adaptation clamped to `[0, 1]`, for display.
    pub fn clamped(&self) -> Self {
        let w = self.weights;
        let abs = self.alpha_abs.clamp(0.0, 1.0);
        let mut out = self.clone();
        out.alpha_abs = abs;
        for r in &mut out.records {
            r.alpha_ada = r.alpha_ada.clamp(0.0, 1.0);
            r.alpha_overall = w.lambda1 * abs + w.lambda2 * r.alpha_ada + w.lambda3 * r.alpha_rec;
        }
        out.best_index = best_of(&out.records);
        out
    }
}

fn best_of(records: &[TraceRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in records.iter().enumerate() {
        if best.map_or(true, |(_, a)| r.alpha_overall > a) {
            best = Some((i, r.alpha_overall));
        }
    }
    best.map(|(i, _)| i)
}

/// Scores iterates as they arrive and keeps the running best.
#[derive(Debug, Clone)]
pub struct ScoreTracker {
    weights: ResilienceWeights,
    t0_ms: f64,
    t_d_ms: f64,
    alpha_abs: f64,
    records: Vec<TraceRecord>,
    best: Option<(usize, f64)>,
}

impl ScoreTracker {
    pub fn new(weights: ResilienceWeights, t0_ms: f64, t_d_ms: f64, alpha_abs: f64) -> Result<Self> {
        weights.validate()?;
        Ok(Self { weights, t0_ms, t_d_ms, alpha_abs, records: Vec::new(), best: None })
    }

    /// Scores the iterate and reports whether it became the new best.
    pub fn push(&mut self, iter: usize, t_ms: f64, psi: f64) -> bool {
        let w = &self.weights;
        let alpha_ada = adaptation(psi);
        let alpha_rec = recovery(t_ms, self.t0_ms, self.t_d_ms);
        let alpha_overall = w.lambda1 * self.alpha_abs + w.lambda2 * alpha_ada + w.lambda3 * alpha_rec;
        self.records.push(TraceRecord { iter, t_ms, psi, alpha_ada, alpha_rec, alpha_overall });
        let improved = self.best.map_or(true, |(_, a)| alpha_overall > a);
        if improved {
            self.best = Some((self.records.len() - 1, alpha_overall));
        }
        improved
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn finish(self, failure: Option<String>) -> ResilienceTrace {
        ResilienceTrace {
            t0_ms: self.t0_ms,
            t_d_ms: self.t_d_ms,
            alpha_abs: self.alpha_abs,
            weights: self.weights,
            records: self.records,
            best_index: self.best.map(|(i, _)| i),
            failure,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(psi: &[f64], w: ResilienceWeights) -> ResilienceTrace {
        let mut t = ScoreTracker::new(w, 500.0, 500.0, 0.4).unwrap();
        for (n, p) in psi.iter().enumerate() {
            t.push(n + 1, 500.0 + 100.0 * (n + 1) as f64, *p);
        }
        t.finish(None)
    }

    #[test]
    fn ties_go_to_the_earliest() {
        let t = trace(&[0.5, 0.2, 0.2, 0.3], ResilienceWeights::default());
        assert_eq!(t.best_index, Some(1));
    }

    #[test]
    fn recovery_weight_locks_in_early() {
        let psi = [0.6, 0.4, 0.3, 0.25, 0.22, 0.2, 0.19, 0.18];
        let t = trace(&psi, ResilienceWeights::new(0.0, 0.1, 0.9).unwrap());
        assert_eq!(t.best_index, Some(4));
        assert_eq!(t.records[5].alpha_rec, 500.0 / 600.0);
    }

    #[test]
    fn absorption_only_enters_through_lambda1() {
        let t = trace(&[0.5, 0.1], ResilienceWeights::new(0.0, 1.0, 0.0).unwrap());
        assert_eq!(t.records[1].alpha_overall, 0.9);
        let t = trace(&[0.5, 0.1], ResilienceWeights::new(0.5, 0.5, 0.0).unwrap());
        assert!((t.records[1].alpha_overall - 0.65).abs() < 1e-15);
    }

    #[test]
    fn rescore_matches_direct_scoring() {
        let psi = [0.6, 0.4, 0.3, 0.25, 0.22, 0.2, 0.19];
        let w = ResilienceWeights::new(0.1, 0.6, 0.3).unwrap();
        let direct = trace(&psi, w);
        let rescored = trace(&psi, ResilienceWeights::default()).rescore(w).unwrap();
        assert_eq!(direct, rescored);
    }

    #[test]
    fn clamping_is_for_display_only() {
        let t = trace(&[1.5, 0.5], ResilienceWeights::default());
        assert_eq!(t.records[0].alpha_ada, -0.5);
        let c = t.clamped();
        assert_eq!(c.records[0].alpha_ada, 0.0);
        assert_eq!(c.best_index, Some(1));
    }
}
