//! Residual records shared by every verification suite.

use serde::{Deserialize, Serialize};

use crate::exterior::FiberOps;
use crate::form::FormAtPoint;
use crate::ring::C64;

/// Denominator floor in `residual_rel = residual_abs / max(lhs, rhs, floor)`.
pub const NORM_FLOOR: f64 = 1e-14;

/// Sizes of the two sides of one evaluated identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual_abs: f64,
}

impl Comparison {
    /// Both sides measured in the fiber metric at the base point.
    pub fn of(ops: &FiberOps<C64>, lhs: &FormAtPoint, rhs: &FormAtPoint) -> Self {
        Self {
            lhs_norm: ops.norm(lhs),
            rhs_norm: ops.norm(rhs),
            residual_abs: ops.norm(&lhs.sub(rhs)),
        }
    }

    /// Coefficientwise sup norms, used where no metric is in play (oracle
    /// comparisons of operator matrices).
    pub fn sup(lhs: f64, rhs: f64, diff: f64) -> Self {
        Self {
            lhs_norm: lhs,
            rhs_norm: rhs,
            residual_abs: diff,
        }
    }

    /// A quantity that should vanish, measured against the size of the object
    /// it was extracted from.
    pub fn vanishing(scale: f64, residual: f64) -> Self {
        Self {
            lhs_norm: scale,
            rhs_norm: 0.0,
            residual_abs: residual,
        }
    }

    pub fn residual_rel(&self) -> f64 {
        self.residual_abs / self.lhs_norm.max(self.rhs_norm).max(NORM_FLOOR)
    }

    /// Keep the worse of two comparisons.
    pub fn worst(self, other: Self) -> Self {
        if other.residual_rel() > self.residual_rel() || other.residual_abs > self.residual_abs {
            Self {
                lhs_norm: self.lhs_norm.max(other.lhs_norm),
                rhs_norm: self.rhs_norm.max(other.rhs_norm),
                residual_abs: self.residual_abs.max(other.residual_abs),
            }
        } else {
            self
        }
    }
}

/// Acceptance thresholds. A record passes when its relative residual is below
/// `rel`, or when its absolute residual is below `abs` (both sides vanish to
/// rounding, so the relative figure is noise over noise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn accepts(&self, c: &Comparison) -> bool {
        c.residual_rel() < self.rel || c.residual_abs < self.abs
    }
}

/// What a check is expected to show.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expect {
    /// The two sides agree.
    Holds,
    /// The two sides differ by at least this relative amount (a refuted
    /// identity that the verified one replaces).
    Refuted(f64),
}

/// Degree labels of a check; absent when not applicable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indices {
    pub k: Option<usize>,
    pub j: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
}

impl Indices {
    pub fn k(k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::default()
        }
    }
    pub fn kj(k: usize, j: usize) -> Self {
        Self {
            k: Some(k),
            j: Some(j),
            ..Self::default()
        }
    }
    pub fn pq(p: usize, q: usize) -> Self {
        Self {
            k: Some(p + q),
            p: Some(p),
            q: Some(q),
            ..Self::default()
        }
    }
    pub fn with_j(mut self, j: usize) -> Self {
        self.j = Some(j);
        self
    }
}

/// One evaluated identity, before it is stamped with trial metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub identity_id: String,
    pub indices: Indices,
    pub comparison: Comparison,
    pub expect: Expect,
}

impl Check {
    pub fn holds(identity_id: impl Into<String>, indices: Indices, comparison: Comparison) -> Self {
        Self {
            identity_id: identity_id.into(),
            indices,
            comparison,
            expect: Expect::Holds,
        }
    }

    pub fn refuted(
        identity_id: impl Into<String>,
        indices: Indices,
        comparison: Comparison,
        min_rel: f64,
    ) -> Self {
        Self {
            identity_id: identity_id.into(),
            indices,
            comparison,
            expect: Expect::Refuted(min_rel),
        }
    }

    pub fn passes(&self, tol: &Tolerance) -> bool {
        match self.expect {
            Expect::Holds => tol.accepts(&self.comparison),
            Expect::Refuted(min_rel) => self.comparison.residual_rel() >= min_rel,
        }
    }

    pub fn into_record(self, trial: &TrialLabel, tol: &Tolerance) -> IdentityResidual {
        let pass = self.passes(tol);
        let c = self.comparison;
        IdentityResidual {
            identity_id: self.identity_id,
            structure_descr: trial.structure_descr.clone(),
            trial_id: trial.trial_id.clone(),
            seed: trial.seed,
            n: trial.n,
            k: self.indices.k,
            j: self.indices.j,
            p: self.indices.p,
            q: self.indices.q,
            lhs_norm: c.lhs_norm,
            rhs_norm: c.rhs_norm,
            residual_abs: c.residual_abs,
            residual_rel: c.residual_rel(),
            expect: match self.expect {
                Expect::Holds => Expectation::Holds,
                Expect::Refuted(_) => Expectation::Refuted,
            },
            pass,
        }
    }
}

/// Which trial a record came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLabel {
    pub trial_id: String,
    pub structure_descr: String,
    pub seed: u64,
    pub n: usize,
}

/// A single residual record of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity_id: String,
    pub structure_descr: String,
    pub trial_id: String,
    pub seed: u64,
    pub n: usize,
    pub k: Option<usize>,
    pub j: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual_abs: f64,
    pub residual_rel: f64,
    pub expect: Expectation,
    pub pass: bool,
}

/// Serialized form of [`Expect`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Refuted,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_residual_uses_the_larger_side() {
        let c = Comparison::sup(2.0, 4.0, 1e-3);
        assert_eq!(c.residual_rel(), 2.5e-4);
        let z = Comparison::sup(0.0, 0.0, 1e-20);
        assert_eq!(z.residual_rel(), 1e-6);
    }

    #[test]
    fn absolute_floor_accepts_vanishing_sides() {
        let tol = Tolerance::default();
        assert!(tol.accepts(&Comparison::sup(1e-15, 0.0, 1e-15)));
        assert!(!tol.accepts(&Comparison::sup(1.0, 1.0, 1e-7)));
        assert!(tol.accepts(&Comparison::sup(1.0, 1.0, 1e-9)));
    }

    #[test]
    fn refuted_checks_pass_on_large_gaps() {
        let tol = Tolerance::default();
        let gap = Check::refuted(
            "x",
            Indices::default(),
            Comparison::sup(1.0, 1.0, 0.5),
            1e-3,
        );
        assert!(gap.passes(&tol));
        let none = Check::refuted(
            "x",
            Indices::default(),
            Comparison::sup(1.0, 1.0, 1e-9),
            1e-3,
        );
        assert!(!none.passes(&tol));
    }
}
