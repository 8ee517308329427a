//! Broken-path maximization of the discrete g-arclength.
//!
//! Interior nodes sit at uniform stations along the chord and move only
//! along its Euclidean normal, so the path stays a graph over the chord and
//! the midpoint-rule error has an expansion in `1/M²` (M segments).

use nalgebra::{DMatrix, DVector};

use crate::metric::{inner_with, Metric};
use crate::Vec2;

struct Broken<'a, M: ?Sized> {
    metric: &'a M,
    x: Vec2,
    chord: Vec2,
    normal: Vec2,
    nodes: usize,
}

impl<M: Metric + ?Sized> Broken<'_, M> {
    fn points(&self, s: &[f64]) -> Vec<Vec2> {
        let m = self.nodes + 1;
        let mut pts = Vec::with_capacity(m + 1);
        pts.push(self.x);
        for (i, si) in s.iter().enumerate() {
            pts.push(self.x + self.chord * ((i + 1) as f64 / m as f64) + self.normal * *si);
        }
        pts.push(self.x + self.chord);
        pts
    }

    fn segment(&self, a: &Vec2, b: &Vec2) -> Option<f64> {
        let d = b - a;
        let mid = (a + b) * 0.5;
        let g = self.metric.matrix(&mid);
        let q = inner_with(&g, &d, &d);
        let future = inner_with(&g, &d, &Vec2::new(0.0, 1.0)) < 0.0;
        (q < 0.0 && future).then(|| (-q).sqrt())
    }

    fn length(&self, s: &[f64]) -> Option<f64> {
        let pts = self.points(s);
        pts.windows(2).map(|w| self.segment(&w[0], &w[1])).sum()
    }

    /// Derivatives of one segment length with respect to its two endpoints.
    fn segment_grad(&self, a: &Vec2, b: &Vec2) -> (Vec2, Vec2) {
        let d = b - a;
        let mid = (a + b) * 0.5;
        let [e, f, g] = self.metric.components(&mid);
        let gm = nalgebra::Matrix2::new(e.v, f.v, f.v, g.v);
        let q = inner_with(&gm, &d, &d);
        let l = (-q).sqrt();
        let dq = |k: usize| e.d(k) * d.x * d.x + 2.0 * f.d(k) * d.x * d.y + g.d(k) * d.y * d.y;
        let grad_mid = Vec2::new(dq(0), dq(1)) * 0.5;
        let gd = gm * d * 2.0;
        let db = -(gd + grad_mid) / (2.0 * l);
        let da = -(-gd + grad_mid) / (2.0 * l);
        (da, db)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let pts = self.points(s);
        let mut out = vec![0.0; self.nodes];
        for (k, w) in pts.windows(2).enumerate() {
            let (da, db) = self.segment_grad(&w[0], &w[1]);
            if k >= 1 {
                out[k - 1] += da.dot(&self.normal);
            }
            if k < self.nodes {
                out[k] += db.dot(&self.normal);
            }
        }
        out
    }

    /// Tridiagonal Hessian from central differences of the gradient, three
    /// colours of nodes perturbed at once.
    fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let n = self.nodes;
        let eps = 1e-6;
        let mut h = DMatrix::zeros(n, n);
        for colour in 0..3 {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            for i in (colour..n).step_by(3) {
                sp[i] += eps;
                sm[i] -= eps;
            }
            let (gp, gm) = (self.gradient(&sp), self.gradient(&sm));
            for i in (colour..n).step_by(3) {
                for r in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                    h[(r, i)] = (gp[r] - gm[r]) / (2.0 * eps);
                }
            }
        }
        (h.clone() + h.transpose()) * 0.5
    }
}

/// Maximal discrete g-length over broken paths with `nodes` interior nodes,
/// or `None` if the straight chord is not future timelike.
pub fn maximize_broken_path<M: Metric + ?Sized>(
    metric: &M,
    x: Vec2,
    y: Vec2,
    nodes: usize,
) -> Option<f64> {
    let chord = y - x;
    let len = chord.norm();
    if len == 0.0 || nodes == 0 {
        return None;
    }
    let b = Broken {
        metric,
        x,
        chord,
        normal: Vec2::new(-chord.y, chord.x) / len,
        nodes,
    };
    let mut s = vec![0.0; nodes];
    let mut value = b.length(&s)?;
    for _ in 0..200 {
        let grad = b.gradient(&s);
        let neg_h = -b.hessian(&s);
        let g = DVector::from_vec(grad.clone());
        let dir = match neg_h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone() * (len / (nodes as f64 + 1.0)),
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = s.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Some(v) = b.length(&trial) {
                if v >= value - 1e-15 * value.abs() {
                    accepted = Some((trial, v));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, v)) = accepted else { break };
        let step = dir.amax() * alpha;
        s = trial;
        value = v;
        if step < 1e-10 {
            break;
        }
    }
    Some(value)
}

/// Richardson extrapolation of the broken-path maximum at `nodes` and
/// `nodes/2` interior nodes.
pub fn variational_distance<M: Metric + ?Sized>(
    metric: &M,
    x: Vec2,
    y: Vec2,
    nodes: usize,
) -> Option<f64> {
    let fine = maximize_broken_path(metric, x, y, nodes)?;
    let half = nodes / 2;
    if half == 0 {
        return Some(fine);
    }
    let coarse = maximize_broken_path(metric, x, y, half)?;
    let (mf, mc) = ((nodes + 1) as f64, (half + 1) as f64);
    Some((mf * mf * fine - mc * mc * coarse) / (mf * mf - mc * mc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxdist::lorentz_distance;
    use crate::metric::MetricSpec;

    #[test]
    fn flat_chord_is_the_maximizer() {
        let v = variational_distance(&MetricSpec::flat(), Vec2::zeros(), Vec2::new(1.0, 2.0), 64)
            .unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_shooting_on_conformal_metric() {
        let m = MetricSpec::conformal(0.1);
        let (x, y) = (Vec2::new(0.1, 0.2), Vec2::new(0.6, 2.3));
        let v = variational_distance(&m, x, y, 64).unwrap();
        let d = lorentz_distance(&m, x, y).value;
        assert!((v - d).abs() < 1e-4, "{v} vs {d}");
    }

    #[test]
    fn spacelike_chord_has_no_path() {
        assert!(maximize_broken_path(&MetricSpec::flat(), Vec2::zeros(), Vec2::new(2.0, 1.0), 8)
            .is_none());
    }
}
