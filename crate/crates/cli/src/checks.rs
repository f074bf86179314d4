use std::path::Path;

use anyhow::{anyhow, bail, Result};
use pxlap_core::barrier::{barrier_sweep, hopf_slope, strong_max_principle_check};
use pxlap_core::exponent::{band, ExponentField};
use pxlap_core::geometry::{Ball, Region};
use pxlap_core::grid::{Grid, GridFunction};
use pxlap_core::harness::{
    bump_cutoff, caccioppoli_check, caccioppoli_sufficient_constant, harnack_check, harnack_mu, harnack_stability,
    holder_estimate, local_bound_check, weak_harnack_check,
};
use pxlap_core::lebesgue::{gradient_norm, luxemburg_norm, sobolev_norm, NormConfig};
use pxlap_core::report::SummaryRow;
use pxlap_core::structure::{
    check_coercivity, check_conditions, exponential_transform, sample_lattice, transformed_alpha, FluxPair,
    SampleOptions, StructureBounds,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CheckSpec, NormTarget};

/// Everything a check may read.
pub struct Context<'a> {
    pub grid: &'a Grid,
    pub field: &'a ExponentField,
    pub rhs: &'a GridFunction,
    pub solution: Option<&'a GridFunction>,
    pub seed: u64,
    pub base: &'a Path,
}

pub struct Outcome {
    pub result: Value,
    pub rows: Vec<SummaryRow>,
}

fn outcome<T: Serialize>(report: &T, rows: Vec<SummaryRow>) -> Result<Outcome> {
    Ok(Outcome { result: serde_json::to_value(report)?, rows })
}

impl Context<'_> {
    fn u(&self) -> Result<&GridFunction> {
        self.solution.ok_or_else(|| anyhow!("no solution available"))
    }
}

pub fn run(check: &CheckSpec, ctx: &Context) -> Result<Outcome> {
    match check {
        CheckSpec::Harnack { center, radius, q0, levels } => {
            let ball = Ball::new(center.clone(), *radius)?;
            if *levels <= 1 {
                let mu = harnack_mu(ctx.rhs, &ball, *q0, ctx.field)?;
                let rep = harnack_check(ctx.u()?, &ball, mu, ctx.field)?;
                outcome(&rep, vec![SummaryRow::from(&rep)])
            } else {
                let rep = harnack_stability(ctx.u()?, ctx.rhs, &ball, *q0, ctx.field, *levels)?;
                let rows = rep.reports.iter().map(SummaryRow::from).collect();
                outcome(&rep, rows)
            }
        }
        CheckSpec::WeakHarnack { center, radius, t, shift } => {
            let rep = weak_harnack_check(ctx.u()?, center, *radius, *t, *shift)?;
            outcome(&rep, vec![SummaryRow::from(&rep)])
        }
        CheckSpec::Caccioppoli { center, radius, gamma, c_probe, h } => {
            let ball = Ball::new(center.clone(), *radius)?;
            let eta = bump_cutoff(ctx.grid, center, *radius)?;
            let h = h.sample(ctx.grid, ctx.base)?;
            let c = match c_probe {
                Some(c) => *c,
                None => {
                    let (lo, hi) = band(ctx.field, &ball, ctx.grid)?;
                    caccioppoli_sufficient_constant(lo, hi, *gamma)
                }
            };
            let rep = caccioppoli_check(ctx.u()?, *gamma, &eta, &h, ctx.field, &ball, c)?;
            let mut row = SummaryRow::from(&rep);
            row.center = center.clone();
            row.radius = Some(*radius);
            outcome(&rep, vec![row])
        }
        CheckSpec::Holder { center, radii } => {
            let rep = holder_estimate(ctx.u()?, center, radii)?;
            // nested balls: a growing oscillation means the sampler is broken
            if rep.oscillations.windows(2).any(|w| w[1] > w[0]) {
                bail!("oscillation increased on a shrinking ball: {:?}", rep.oscillations);
            }
            outcome(&rep, vec![SummaryRow::from(&rep)])
        }
        CheckSpec::LocalBound { center, inner_radius, outer_radius, t, c_probe } => {
            let inner = Region::Ball(Ball::new(center.clone(), *inner_radius)?);
            let outer = Region::Ball(Ball::new(center.clone(), *outer_radius)?);
            let rep = local_bound_check(ctx.u()?, &inner, &outer, *t, *c_probe)?;
            let mut row = SummaryRow::from(&rep);
            row.center = center.clone();
            row.radius = Some(*outer_radius);
            outcome(&rep, vec![row])
        }
        CheckSpec::Barrier { center, delta, mus, a_level, resolution, tol } => {
            let (scans, found) = barrier_sweep(center, *delta, *a_level, mus, ctx.field, *resolution, *tol)?;
            let rows = scans.iter().map(SummaryRow::from).collect();
            Ok(Outcome { result: json!({ "scans": scans, "subsolution_mu": found }), rows })
        }
        CheckSpec::MaxPrinciple { margin, zero_tol } => {
            let rep = strong_max_principle_check(ctx.u()?, *margin, *zero_tol)?;
            outcome(&rep, vec![SummaryRow::from(&rep)])
        }
        CheckSpec::Hopf { point, direction, steps, zero_tol } => {
            let rep = hopf_slope(ctx.u()?, point, direction, steps, *zero_tol)?;
            outcome(&rep, vec![SummaryRow::from(&rep)])
        }
        CheckSpec::Structure { alpha, m0, flux_scale, k1, transform, b, s_levels, radii, directions, node_stride } => {
            let mut bounds = StructureBounds::new(ctx.grid, *alpha, *m0, ctx.field)?;
            bounds.k1 = GridFunction::constant(ctx.grid.clone(), *k1);
            bounds.b = *b;
            let opts = SampleOptions {
                s_levels: *s_levels,
                radii: *radii,
                directions: *directions,
                node_stride: *node_stride,
                seed: ctx.seed,
            };
            let samples = sample_lattice(ctx.grid, *m0, &opts)?;
            let flux = FluxPair::scaled_p_laplacian(ctx.field, *flux_scale);
            let (rep, alpha_used) = match transform {
                None => (check_conditions(&flux, &bounds, ctx.field, &samples)?, *alpha),
                Some(t) => {
                    let moved = exponential_transform(&flux, &bounds, (*t).into())?;
                    let mut damped = bounds.clone();
                    damped.alpha = transformed_alpha(&bounds);
                    (check_coercivity(&moved, &damped, ctx.field, &samples)?, damped.alpha)
                }
            };
            let mut row = SummaryRow::new("structure");
            row.lhs = rep.min_slack.iter().copied().reduce(f64::min);
            row.rhs = Some(rep.violations.len() as f64);
            let result = json!({ "alpha": alpha_used, "report": rep });
            Ok(Outcome { result, rows: vec![row] })
        }
        CheckSpec::Norm { target } => {
            let cfg = NormConfig::default();
            let value = match target {
                NormTarget::Solution => luxemburg_norm(ctx.u()?, ctx.field, &cfg)?,
                NormTarget::Gradient => gradient_norm(ctx.u()?, ctx.field, &cfg)?,
                NormTarget::Sobolev => sobolev_norm(ctx.u()?, ctx.field, &cfg)?,
                NormTarget::Rhs => luxemburg_norm(ctx.rhs, ctx.field, &cfg)?,
            };
            let mut row = SummaryRow::new("norm");
            row.lhs = Some(value);
            row.p_minus = Some(ctx.field.p1());
            row.p_plus = Some(ctx.field.p2());
            Ok(Outcome { result: json!({ "target": target, "value": value }), rows: vec![row] })
        }
    }
}
