use serde::Serialize;

use super::BusemannError;
use crate::causal::ConeEstimate;
use crate::lines::{find_periodic_line_with, gcd, LineOptions, PeriodicLine};
use crate::maxdist::reachable;
use crate::metric::Metric;
use crate::{cross, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Future,
    Past,
}

/// Open region at `pole` between two periodic lines, on one side in time.
#[derive(Clone, Debug, Serialize)]
pub struct AngularDomain {
    pub pole: Vec2,
    /// Boundary line on the `m⁻` side of the direction.
    pub line_minus: PeriodicLine,
    pub line_plus: PeriodicLine,
    pub side: Side,
}

/// Primitive deck vectors with `|k|∞ ≤ 4` and cone margin at least 0.2
/// (relaxed by halves if needed), the farthest from `alpha` on each side.
pub fn boundary_decks(cone: &ConeEstimate, alpha: &Vec2) -> Option<([i64; 2], [i64; 2])> {
    let alpha = alpha.normalize();
    let mut margin = 0.2;
    while margin > 1e-3 {
        let mut best_minus: Option<([i64; 2], f64)> = None;
        let mut best_plus: Option<([i64; 2], f64)> = None;
        for ky in 1..=4i64 {
            for kx in -4..=4i64 {
                if gcd(kx, ky) != 1 {
                    continue;
                }
                let k = Vec2::new(kx as f64, ky as f64).normalize();
                if cone.margin(&k) < margin {
                    continue;
                }
                let c = cross(&k, &alpha);
                let angle = c.atan2(k.dot(&alpha));
                if angle > 0.0 && best_minus.is_none_or(|(_, a)| angle > a) {
                    best_minus = Some(([kx, ky], angle));
                }
                if angle < 0.0 && best_plus.is_none_or(|(_, a)| angle < a) {
                    best_plus = Some(([kx, ky], angle));
                }
            }
        }
        if let (Some((m, _)), Some((p, _))) = (best_minus, best_plus) {
            return Some((m, p));
        }
        margin *= 0.5;
    }
    None
}

impl AngularDomain {
    pub fn new<M: Metric + ?Sized>(
        metric: &M,
        pole: Vec2,
        alpha: &Vec2,
        side: Side,
        cone: &ConeEstimate,
        opts: &LineOptions,
    ) -> Result<Self, BusemannError> {
        let (km, kp) = boundary_decks(cone, alpha).ok_or_else(|| {
            BusemannError::InvalidInput(format!("no boundary deck vectors around {alpha:?}"))
        })?;
        let opts = LineOptions {
            cone: Some(*cone),
            ..opts.clone()
        };
        Ok(AngularDomain {
            pole,
            line_minus: find_periodic_line_with(metric, pole, km, &opts)?,
            line_plus: find_periodic_line_with(metric, pole, kp, &opts)?,
            side,
        })
    }
}

/// Strictly between the boundary lines and chronologically related to the
/// pole on the domain's side.
pub fn domain_membership<M: Metric + ?Sized>(
    metric: &M,
    domain: &AngularDomain,
    x: &Vec2,
) -> Result<bool, BusemannError> {
    if !x.iter().all(|c| c.is_finite()) {
        return Err(BusemannError::OutOfChart { x: x.x, y: x.y });
    }
    let sm = domain.line_minus.side(x);
    let sp = domain.line_plus.side(x);
    let between = match domain.side {
        Side::Future => sm > 0.0 && sp < 0.0,
        Side::Past => sm < 0.0 && sp > 0.0,
    };
    if !between {
        return Ok(false);
    }
    Ok(match domain.side {
        Side::Future => reachable(metric, domain.pole, *x),
        Side::Past => reachable(metric, *x, domain.pole),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    #[test]
    fn flat_boundary_decks() {
        let (m, p) = boundary_decks(&ConeEstimate::flat(), &Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!(m, [1, 2]);
        assert_eq!(p, [-1, 2]);
    }

    #[test]
    fn flat_membership() {
        let m = MetricSpec::flat();
        let cone = ConeEstimate::flat();
        let a = Vec2::new(0.0, 1.0);
        let opts = LineOptions::default();
        let f = AngularDomain::new(&m, Vec2::zeros(), &a, Side::Future, &cone, &opts).unwrap();
        assert!(domain_membership(&m, &f, &Vec2::new(0.0, 1.0)).unwrap());
        assert!(!domain_membership(&m, &f, &Vec2::zeros()).unwrap());
        assert!(!domain_membership(&m, &f, &Vec2::new(5.0, 0.0)).unwrap());
        assert!(!domain_membership(&m, &f, &Vec2::new(0.0, -1.0)).unwrap());
        let p = AngularDomain::new(&m, Vec2::zeros(), &a, Side::Past, &cone, &opts).unwrap();
        assert!(domain_membership(&m, &p, &Vec2::new(0.1, -3.0)).unwrap());
        assert!(!domain_membership(&m, &p, &Vec2::new(2.0, -3.0)).unwrap());
    }
}
