//! Consistency checks on fitted decay exponents.

use serde::{Deserialize, Serialize};

/// A fitted exponent for one `(metric, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub k: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub k: usize,
    pub alpha: f64,
    pub rule: String,
}

/// Monogamy lower bounds: `α_k^MI ≥ k` and `α_2^GMN > 1/2`.
pub fn exponent_bound_flags(mi: &[Exponent], gmn: &[Exponent]) -> Vec<BoundViolation> {
    let mut out = Vec::new();
    for e in mi {
        if e.alpha < e.k as f64 {
            out.push(BoundViolation { k: e.k, alpha: e.alpha, rule: format!("alpha_{}^MI >= {}", e.k, e.k) });
        }
    }
    for e in gmn.iter().filter(|e| e.k == 2) {
        if e.alpha <= 0.5 {
            out.push(BoundViolation { k: 2, alpha: e.alpha, rule: "alpha_2^GMN > 1/2".into() });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub description: String,
    pub holds: bool,
}

/// Reports `α_k^GMN ≥ α_k^MI`, `α_{k+1} ≥ α_k` per metric and
/// `α_{k+l} ≤ α_k + α_l` per metric; these are reported, not enforced.
pub fn constraint_report(mi: &[Exponent], gmn: &[Exponent]) -> Vec<ConstraintCheck> {
    let find = |set: &[Exponent], k: usize| set.iter().find(|e| e.k == k).map(|e| e.alpha);
    let mut out = Vec::new();
    for e in gmn {
        if let Some(m) = find(mi, e.k) {
            out.push(ConstraintCheck {
                description: format!("alpha_{k}^GMN = {:.4} >= alpha_{k}^MI = {m:.4}", e.alpha, k = e.k),
                holds: e.alpha >= m,
            });
        }
    }
    for (name, set) in [("MI", mi), ("GMN", gmn)] {
        for e in set {
            if let Some(next) = find(set, e.k + 1) {
                out.push(ConstraintCheck {
                    description: format!("alpha_{}^{name} = {next:.4} >= alpha_{}^{name} = {:.4}", e.k + 1, e.k, e.alpha),
                    holds: next >= e.alpha,
                });
            }
        }
        for a in set {
            for b in set.iter().filter(|b| b.k >= a.k) {
                if let Some(sum) = find(set, a.k + b.k) {
                    out.push(ConstraintCheck {
                        description: format!(
                            "alpha_{}^{name} = {sum:.4} <= alpha_{}^{name} + alpha_{}^{name} = {:.4}",
                            a.k + b.k,
                            a.k,
                            b.k,
                            a.alpha + b.alpha
                        ),
                        holds: sum <= a.alpha + b.alpha,
                    });
                }
            }
        }
    }
    out
}
