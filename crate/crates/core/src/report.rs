//! Flat summary rows shared by every check, for CSV aggregation.

use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierScan, GaussianOperatorReport, HopfReport, MaxPrincipleReport};
use crate::harness::{CaccioppoliReport, HarnackReport, LocalBoundReport, OscillationTrace, WeakHarnackReport};

pub const CSV_HEADER: &str = "check,center,R,lhs,rhs,ratio,p_minus,p_plus,mu";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub check: String,
    pub center: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub p_minus: Option<f64>,
    pub p_plus: Option<f64>,
    pub mu: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl SummaryRow {
    pub fn new(check: impl Into<String>) -> Self {
        Self { check: check.into(), ..Default::default() }
    }

    /// One CSV line without the trailing newline. Center coordinates are `;`-separated.
    pub fn to_csv(&self) -> String {
        let center: Vec<String> = self.center.iter().map(|c| format!("{c:e}")).collect();
        [
            self.check.clone(),
            center.join(";"),
            cell(self.radius),
            cell(self.lhs),
            cell(self.rhs),
            cell(self.ratio),
            cell(self.p_minus),
            cell(self.p_plus),
            cell(self.mu),
        ]
        .join(",")
    }
}

pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

impl From<&HarnackReport> for SummaryRow {
    fn from(r: &HarnackReport) -> Self {
        Self {
            check: "harnack".into(),
            center: r.ball.center.clone(),
            radius: Some(r.ball.radius),
            lhs: Some(r.sup_u),
            rhs: Some(r.inf_u + r.ball.radius * (1.0 + r.mu)),
            ratio: Some(r.c_emp),
            p_minus: Some(r.p_minus),
            p_plus: Some(r.p_plus),
            mu: Some(r.mu),
        }
    }
}

impl From<&WeakHarnackReport> for SummaryRow {
    fn from(r: &WeakHarnackReport) -> Self {
        Self {
            check: "weak-harnack".into(),
            center: r.center.clone(),
            radius: Some(r.radius),
            lhs: Some(r.lhs),
            rhs: Some(r.rhs),
            ratio: Some(r.ratio),
            ..Default::default()
        }
    }
}

impl From<&CaccioppoliReport> for SummaryRow {
    fn from(r: &CaccioppoliReport) -> Self {
        Self {
            check: "caccioppoli".into(),
            lhs: Some(r.lhs),
            rhs: Some(r.rhs),
            ratio: Some(r.lhs / r.rhs),
            p_minus: Some(r.p_minus),
            p_plus: Some(r.p_plus),
            ..Default::default()
        }
    }
}

impl From<&LocalBoundReport> for SummaryRow {
    fn from(r: &LocalBoundReport) -> Self {
        Self {
            check: "local-bound".into(),
            lhs: Some(r.sup_inner),
            rhs: Some(r.bound),
            ratio: Some(r.sup_inner / r.bound),
            ..Default::default()
        }
    }
}

impl From<&OscillationTrace> for SummaryRow {
    fn from(r: &OscillationTrace) -> Self {
        Self {
            check: "holder".into(),
            center: r.center.clone(),
            radius: r.radii.first().copied(),
            lhs: r.fitted_exponent,
            rhs: r.fit_residual,
            ..Default::default()
        }
    }
}

impl From<&BarrierScan> for SummaryRow {
    fn from(r: &BarrierScan) -> Self {
        Self {
            check: "barrier".into(),
            center: r.params.x0.clone(),
            radius: Some(r.params.delta),
            lhs: Some(r.min_operator_value),
            mu: Some(r.params.mu),
            ..Default::default()
        }
    }
}

impl From<&GaussianOperatorReport> for SummaryRow {
    fn from(r: &GaussianOperatorReport) -> Self {
        Self {
            check: "gaussian-operator".into(),
            radius: Some(r.r_outer),
            lhs: Some(r.lhs_min),
            mu: Some(r.mu),
            ..Default::default()
        }
    }
}

impl From<&MaxPrincipleReport> for SummaryRow {
    fn from(r: &MaxPrincipleReport) -> Self {
        Self {
            check: "max-principle".into(),
            center: r.argmin_interior.clone(),
            lhs: Some(r.min_interior),
            rhs: Some(r.zero_tol),
            ..Default::default()
        }
    }
}

impl From<&HopfReport> for SummaryRow {
    fn from(r: &HopfReport) -> Self {
        Self { check: "hopf".into(), center: r.y.clone(), lhs: Some(r.c0_estimate), ..Default::default() }
    }
}
