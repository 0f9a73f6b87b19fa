//! Closed-form repair-cost bounds and optimization gains for the tandem and
//! star topologies, and the cross-check of the LP against them.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{optimize, LpStatus};
use crate::netmodel::{baseline_cost, NetworkSpec, NodeId, TopologyKind};
use crate::ratio::{int, serde_rational, serde_rational_opt, Rational};

fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        int(0)
    } else {
        x
    }
}

/// Per-helper download at the minimum-storage point, `M / (k (d-k+1))`.
pub fn msr_beta(file_size: &Rational, k: usize, d: usize) -> Result<Rational> {
    if d < k || k == 0 {
        return Err(Error::InvalidSpec(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    Ok(file_size / int((k * (d - k + 1)) as i64))
}

/// `[k (M - (k-1) alpha)]+`: cheapest repair in a unit-cost line.
pub fn tandem_lower_bound(k: usize, file_size: &Rational, alpha: &Rational) -> Rational {
    positive_part(int(k as i64) * (file_size - alpha * int(k as i64 - 1)))
}

/// `((n-2)/(n-k) + 1) [M - (k-1) alpha]+` for a non-central star failure.
pub fn star_lower_bound(n: usize, k: usize, file_size: &Rational, alpha: &Rational) -> Result<Rational> {
    if k >= n {
        return Err(Error::InvalidSpec(format!("star bound needs k < n, got k={k}, n={n}")));
    }
    let factor = Rational::new((n as i64 - 2).into(), (n as i64 - k as i64).into()) + int(1);
    Ok(factor * positive_part(file_size - alpha * int(k as i64 - 1)))
}

/// Gain `n(n+1) / (2k(n-k))` claimed for an end-node failure in a line with
/// `M = k(n-k)`, `alpha = n-k`, `d = n-1`.
pub fn gain_tandem_endnode(n: usize, k: usize) -> Result<Rational> {
    if k == 0 || k >= n {
        return Err(Error::InvalidSpec(format!("need 0 < k < n, got k={k}, n={n}")));
    }
    let (n, k) = (n as i64, k as i64);
    Ok(Rational::new((n * (n + 1)).into(), (2 * k * (n - k)).into()))
}

/// Gain `(2n-3) / (2n-k-2)` for a non-central star failure with the same
/// parameter choice.
pub fn gain_star_noncentral(n: usize, k: usize) -> Result<Rational> {
    let (n, k) = (n as i64, k as i64);
    if 2 * n - k - 2 <= 0 {
        return Err(Error::InvalidSpec(format!("degenerate star gain for n={n}, k={k}")));
    }
    Ok(Rational::new((2 * n - 3).into(), (2 * n - k - 2).into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GainReport {
    #[serde(with = "serde_rational")]
    pub sigma_non_opt: Rational,
    #[serde(with = "serde_rational")]
    pub sigma_opt: Rational,
    /// `sigma_non_opt / sigma_opt` from the shortest-path baseline.
    #[serde(with = "serde_rational_opt")]
    pub g_c: Option<Rational>,
    #[serde(with = "serde_rational_opt")]
    pub closed_form_value: Option<Rational>,
    pub matches_closed_form: Option<bool>,
    /// Published closed-form gain, when the spec has the matching parameter shape.
    #[serde(with = "serde_rational_opt")]
    pub gain_published: Option<Rational>,
}

impl GainReport {
    /// LP within `[0, baseline]` and equal to the closed form where one applies.
    pub fn consistent(&self) -> bool {
        !self.sigma_opt.is_negative()
            && self.sigma_opt <= self.sigma_non_opt
            && self.matches_closed_form != Some(false)
    }
}

fn is_end(spec: &NetworkSpec) -> bool {
    spec.failed == NodeId(1) || spec.failed == NodeId(spec.n)
}

/// Closed-form optimum for the spec's topology, when one is known.
pub fn closed_form(spec: &NetworkSpec) -> Option<Rational> {
    match spec.topology.as_ref()? {
        TopologyKind::Tandem if spec.d == spec.n - 1 => {
            Some(tandem_lower_bound(spec.k, &spec.file_size, &spec.alpha))
        }
        TopologyKind::Star { center } if *center != spec.failed && spec.d == spec.n - 1 => {
            star_lower_bound(spec.n, spec.k, &spec.file_size, &spec.alpha).ok()
        }
        _ => None,
    }
}

fn published_gain(spec: &NetworkSpec) -> Option<Rational> {
    let (n, k) = (spec.n, spec.k);
    let shaped = k < n
        && spec.d == n - 1
        && spec.file_size == int((k * (n - k)) as i64)
        && spec.alpha == int((n - k) as i64);
    if !shaped {
        return None;
    }
    match spec.topology.as_ref()? {
        TopologyKind::Tandem if is_end(spec) => gain_tandem_endnode(n, k).ok(),
        TopologyKind::Star { center } if *center != spec.failed => gain_star_noncentral(n, k).ok(),
        _ => None,
    }
}

/// Solves the LP, computes the shortest-path baseline, and compares both
/// with the closed form for the spec's topology.
pub fn compare_lp_to_bounds(spec: &NetworkSpec) -> Result<GainReport> {
    let sigma_non_opt = baseline_cost(spec)?;
    let opt = optimize(spec)?;
    if opt.solution.status != LpStatus::Optimal {
        return Err(Error::LpStatus(if opt.solution.status == LpStatus::Infeasible {
            "infeasible"
        } else {
            "unbounded"
        }));
    }
    let sigma_opt = opt.solution.value;
    let closed_form_value = closed_form(spec);
    let matches_closed_form = closed_form_value.as_ref().map(|c| *c == sigma_opt);
    let g_c = (!sigma_opt.is_zero()).then(|| &sigma_non_opt / &sigma_opt);
    Ok(GainReport {
        sigma_non_opt,
        sigma_opt,
        g_c,
        closed_form_value,
        matches_closed_form,
        gain_published: published_gain(spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ratio::frac;

    #[test]
    fn beta_values() {
        assert_eq!(msr_beta(&int(4), 2, 3).unwrap(), int(1));
        assert_eq!(msr_beta(&int(8), 4, 5).unwrap(), int(1));
        assert_eq!(msr_beta(&int(6), 3, 4).unwrap(), int(1));
        assert!(msr_beta(&int(6), 3, 2).is_err());
    }

    #[test]
    fn tandem_bound_values() {
        assert_eq!(tandem_lower_bound(2, &int(4), &int(2)), int(4));
        assert_eq!(tandem_lower_bound(3, &int(4), &int(2)), int(0));
        assert_eq!(tandem_lower_bound(3, &int(9), &int(3)), int(9));
    }

    #[test]
    fn star_bound_values() {
        assert_eq!(star_lower_bound(6, 3, &int(9), &int(3)).unwrap(), int(7));
        assert_eq!(star_lower_bound(6, 3, &int(6), &int(2)).unwrap(), frac(14, 3));
        assert_eq!(star_lower_bound(6, 3, &int(4), &int(2)).unwrap(), int(0));
    }

    #[test]
    fn gain_formulas() {
        assert_eq!(gain_star_noncentral(6, 3).unwrap(), frac(9, 7));
        assert_eq!(gain_tandem_endnode(4, 2).unwrap(), frac(5, 2));
        let big = gain_tandem_endnode(100, 50).unwrap();
        assert_eq!(big, frac(101, 50));
        let gap = (big - int(2)).abs() / int(2);
        assert!(gap < frac(3, 100));
    }

    #[test]
    fn reports() {
        let grid = compare_lp_to_bounds(&fixtures::grid23()).unwrap();
        assert_eq!(grid.g_c, Some(frac(27, 20)));
        assert_eq!(grid.closed_form_value, None);
        assert!(grid.consistent());

        let complete = compare_lp_to_bounds(&fixtures::complete5(Some(int(3)))).unwrap();
        assert_eq!(complete.g_c, Some(frac(4, 3)));

        let tandem = compare_lp_to_bounds(&fixtures::tandem4()).unwrap();
        assert_eq!(tandem.g_c, Some(frac(6, 4)));
        assert_eq!(tandem.matches_closed_form, Some(true));

        let star = compare_lp_to_bounds(&fixtures::star6(3, int(9), int(3))).unwrap();
        assert_eq!(star.sigma_opt, int(7));
        assert_eq!(star.sigma_non_opt, int(9));
        assert_eq!(star.gain_published, Some(frac(9, 7)));
        assert_eq!(star.matches_closed_form, Some(true));
    }
}
