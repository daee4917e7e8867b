//! Quantities of interest of a computed extremal: sup-normalization, the
//! embedding constant `C_p`, the multiplier `Λ`, distribution functions of
//! the normalized extremal and their pairwise ordering in `p`.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::space::{Discretization, Domain};

/// Sup-normalized field together with the peak it was divided by.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub field: NodalField,
    /// Maximum of the original field (nodes and element samples).
    pub peak: f64,
}

impl Normalized {
    /// Factor that maps the original field onto the normalized one.
    pub fn factor(&self) -> f64 {
        1.0 / self.peak
    }
}

pub fn normalize_sup(space: &Discretization, u: &[f64]) -> Result<Normalized> {
    space.check_field(u)?;
    let peak = space.peak(u);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "cannot sup-normalize a field with maximum {peak}"
        )));
    }
    Ok(Normalized {
        field: NodalField::from(u.iter().map(|v| v / peak).collect::<Vec<_>>()),
        peak,
    })
}

/// Levels `0.01, 0.02, …, 0.99`.
pub fn default_t_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionCurve {
    pub p: f64,
    pub t_grid: Vec<f64>,
    /// `|{u > t}|` per level.
    pub mu: Vec<f64>,
    pub domain: Domain,
}

impl DistributionCurve {
    /// Measure at level `t`, which must be on the grid.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.t_grid
            .iter()
            .position(|&s| (s - t).abs() < 1e-12)
            .map(|i| self.mu[i])
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(invalid("level grid is empty"));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(invalid("levels must lie in (0, 1)"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("levels must be strictly increasing"));
    }
    Ok(())
}

/// Distribution function `μ(t) = |{u > t}|` of a sup-normalized field.
pub fn distribution(
    space: &Discretization,
    u_normalized: &[f64],
    t_grid: &[f64],
    p: f64,
) -> Result<DistributionCurve> {
    check_grid(t_grid)?;
    let mu = space.superlevel_measures(u_normalized, t_grid)?;
    Ok(DistributionCurve {
        p,
        t_grid: t_grid.to_vec(),
        mu,
        domain: space.domain(),
    })
}

/// `∫|∇u|² / (∫|u|^p)^(2/p)`.
pub fn compute_cp(space: &Discretization, u: &[f64], p: f64) -> Result<f64> {
    space.check_field(u)?;
    let num = space.dirichlet_energy(u);
    let den = space.p_norm_power(u, p)?;
    if !(den > 0.0) {
        return Err(Error::DegenerateInput("∫|u|^p vanishes".into()));
    }
    Ok(num / den.powf(2.0 / p))
}

/// `Λ = C_p (∫ u^p)^((2−p)/p)` for a sup-normalized extremal.
pub fn compute_lambda(space: &Discretization, u_star: &[f64], p: f64) -> Result<f64> {
    let cp = compute_cp(space, u_star, p)?;
    let lp = space.p_norm_power(u_star, p)?;
    Ok(cp * lp.powf((2.0 - p) / p))
}

/// Constants derived from an extremal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsReport {
    pub p: f64,
    pub cp: f64,
    pub lambda: f64,
    /// `P(Ω) = 1 / C_1`, for `p = 1`.
    pub torsional_rigidity: Option<f64>,
    /// `λ(Ω) = C_2`, for `p = 2`.
    pub principal_frequency: Option<f64>,
}

pub fn constants(space: &Discretization, u_star: &[f64], p: f64) -> Result<ConstantsReport> {
    let cp = compute_cp(space, u_star, p)?;
    let lambda = compute_lambda(space, u_star, p)?;
    Ok(ConstantsReport {
        p,
        cp,
        lambda,
        torsional_rigidity: (p == 1.0).then(|| 1.0 / cp),
        principal_frequency: (p == 2.0).then_some(cp),
    })
}

/// Floor on both measures, relative to `|Ω|`, below which a level is not
/// compared.
pub const MEASURE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    /// `μ_p(t) − μ_q(t)` for `p < q`.
    pub difference: f64,
    /// Both measures exceed the floor.
    pub tested: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub p_low: f64,
    pub p_high: f64,
    pub rows: Vec<ComparisonRow>,
}

impl PairComparison {
    pub fn violations(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| !r.ok)
    }

    pub fn tested(&self) -> usize {
        self.rows.iter().filter(|r| r.tested).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    NotConsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "CONSISTENT",
            Verdict::NotConsistent => "NOT-CONSISTENT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub floor: f64,
    pub pairs: Vec<PairComparison>,
    pub verdict: Verdict,
}

impl MonotonicityReport {
    pub fn violation_count(&self) -> usize {
        self.pairs.iter().map(|p| p.violations().count()).sum()
    }
}

/// Compare every pair `p < q`: the ordering holds at `t` when
/// `μ_p(t) > μ_q(t)`, checked wherever both measures exceed the floor.
pub fn monotonicity_report(curves: &[DistributionCurve]) -> Result<MonotonicityReport> {
    if curves.len() < 2 {
        return Err(invalid("at least two curves are needed"));
    }
    let first = &curves[0];
    for c in curves {
        if c.t_grid != first.t_grid || c.mu.len() != c.t_grid.len() {
            return Err(invalid("curves do not share a level grid"));
        }
        if c.domain != first.domain {
            return Err(invalid("curves belong to different domains"));
        }
    }
    let mut sorted: Vec<&DistributionCurve> = curves.iter().collect();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    if sorted.windows(2).any(|w| w[0].p == w[1].p) {
        return Err(invalid("exponents must be distinct"));
    }
    let floor = MEASURE_FLOOR * first.domain.volume();
    let mut pairs = Vec::new();
    for (i, lo) in sorted.iter().enumerate() {
        for hi in &sorted[i + 1..] {
            let rows = lo
                .t_grid
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let difference = lo.mu[k] - hi.mu[k];
                    let tested = lo.mu[k] > floor && hi.mu[k] > floor;
                    ComparisonRow {
                        t,
                        difference,
                        tested,
                        ok: !tested || difference > 0.0,
                    }
                })
                .collect();
            pairs.push(PairComparison {
                p_low: lo.p,
                p_high: hi.p,
                rows,
            });
        }
    }
    let consistent = pairs
        .iter()
        .all(|pc| pc.tested() > 0 && pc.violations().count() == 0);
    Ok(MonotonicityReport {
        floor,
        pairs,
        verdict: if consistent {
            Verdict::Consistent
        } else {
            Verdict::NotConsistent
        },
    })
}
