//! Z²-periodic Lorentzian metrics on the plane.
//!
//! Components are finite Fourier series, so every derivative is exact and
//! integer translations are isometries. Timelike vectors have `g(v,v) < 0`;
//! the coordinate vector (0,1) is declared future-pointing.

mod fourier;
mod hook;
mod jet;
mod spec;

use nalgebra::Matrix2;
use serde::Serialize;
use thiserror::Error;

pub use fourier::{FourierSeries, FourierTerm};
pub use hook::ConstantCurvatureMetric;
pub use jet::Jet;
pub use spec::{
    Family, MetricSpec, MetricSpecFile, DEFAULT_CONFORMAL_AMPLITUDE, DEFAULT_SHEAR_AMPLITUDE,
    METRIC_SCHEMA_VERSION,
};

use crate::Vec2;

/// Tolerance band around the light cone used by [`classify_vector`].
pub const NULL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric is not Lorentzian at ({x}, {y}): det g = {det}")]
    Signature { x: f64, y: f64, det: f64 },
    #[error("invalid metric spec: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A smooth Lorentzian metric on the plane given by component jets.
pub trait Metric: Sync {
    /// `[g11, g12, g22]` with derivatives up to second order.
    fn components(&self, p: &Vec2) -> [Jet; 3];

    /// True when every component is constant (Christoffel symbols vanish).
    fn is_constant(&self) -> bool {
        false
    }

    fn matrix(&self, p: &Vec2) -> Matrix2<f64> {
        let [a, b, c] = self.components(p);
        Matrix2::new(a.v, b.v, b.v, c.v)
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn components(&self, p: &Vec2) -> [Jet; 3] {
        (**self).components(p)
    }
    fn is_constant(&self) -> bool {
        (**self).is_constant()
    }
}

/// Christoffel symbols of the second kind, `gamma[k][i][j] = Γ^k_ij`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

/// Everything known about the metric at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricEval {
    pub g: Matrix2<f64>,
    pub g_inv: Matrix2<f64>,
    pub christoffel: Christoffel,
    pub gauss_curvature: f64,
}

#[inline]
fn component(jets: &[Jet; 3], i: usize, j: usize) -> &Jet {
    match (i, j) {
        (0, 0) => &jets[0],
        (1, 1) => &jets[2],
        _ => &jets[1],
    }
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_lj + ∂_j g_li − ∂_l g_ij)`.
pub fn christoffel(jets: &[Jet; 3]) -> Christoffel {
    let (e, f, g) = (jets[0].v, jets[1].v, jets[2].v);
    let det = e * g - f * f;
    let inv = [[g / det, -f / det], [-f / det, e / det]];
    let mut first = [[[0.0; 2]; 2]; 2];
    for (l, fl) in first.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                fl[i][j] = 0.5
                    * (component(jets, l, j).d(i) + component(jets, l, i).d(j)
                        - component(jets, i, j).d(l));
            }
        }
    }
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in i..2 {
                let v = inv[k][0] * first[0][i][j] + inv[k][1] * first[1][i][j];
                out[k][i][j] = v;
                out[k][j][i] = v;
            }
        }
    }
    out
}

/// Gauss curvature from the Brioschi formula, valid for either signature.
pub fn gauss_curvature(jets: &[Jet; 3]) -> f64 {
    let [e, f, g] = jets;
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = [
        [
            -0.5 * e.dyy + f.dxy - 0.5 * g.dxx,
            0.5 * e.dx,
            f.dx - 0.5 * e.dy,
        ],
        [f.dy - 0.5 * g.dx, e.v, f.v],
        [0.5 * g.dy, f.v, g.v],
    ];
    let b = [
        [0.0, 0.5 * e.dy, 0.5 * g.dx],
        [0.5 * e.dy, e.v, f.v],
        [0.5 * g.dx, f.v, g.v],
    ];
    let d = e.v * g.v - f.v * f.v;
    (det3(a) - det3(b)) / (d * d)
}

pub fn eval_metric<M: Metric + ?Sized>(metric: &M, p: &Vec2) -> Result<MetricEval, MetricError> {
    let jets = metric.components(p);
    let g = Matrix2::new(jets[0].v, jets[1].v, jets[1].v, jets[2].v);
    let det = g.determinant();
    if det >= 0.0 || !det.is_finite() {
        return Err(MetricError::Signature {
            x: p.x,
            y: p.y,
            det,
        });
    }
    let g_inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det;
    Ok(MetricEval {
        g,
        g_inv,
        christoffel: christoffel(&jets),
        gauss_curvature: gauss_curvature(&jets),
    })
}

#[inline]
pub fn inner_with(g: &Matrix2<f64>, u: &Vec2, w: &Vec2) -> f64 {
    u.dot(&(g * w))
}

/// `g_p(u, w)`.
pub fn inner<M: Metric + ?Sized>(metric: &M, p: &Vec2, u: &Vec2, w: &Vec2) -> f64 {
    inner_with(&metric.matrix(p), u, w)
}

/// `g_p(v, v)`.
pub fn lorentz_norm<M: Metric + ?Sized>(metric: &M, p: &Vec2, v: &Vec2) -> f64 {
    inner(metric, p, v, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalCharacter {
    FutureTimelike,
    PastTimelike,
    FutureNull,
    PastNull,
    Spacelike,
    Zero,
}

impl CausalCharacter {
    pub fn is_future_causal(self) -> bool {
        matches!(
            self,
            CausalCharacter::FutureTimelike | CausalCharacter::FutureNull
        )
    }
}

pub fn classify_vector<M: Metric + ?Sized>(metric: &M, p: &Vec2, v: &Vec2) -> CausalCharacter {
    let scale = v.norm_squared();
    if scale == 0.0 {
        return CausalCharacter::Zero;
    }
    let g = metric.matrix(p);
    let q = inner_with(&g, v, v);
    if q > NULL_TOLERANCE * scale {
        return CausalCharacter::Spacelike;
    }
    let future = inner_with(&g, v, &Vec2::new(0.0, 1.0)) < 0.0;
    let null = q.abs() <= NULL_TOLERANCE * scale;
    match (null, future) {
        (true, true) => CausalCharacter::FutureNull,
        (true, false) => CausalCharacter::PastNull,
        (false, true) => CausalCharacter::FutureTimelike,
        (false, false) => CausalCharacter::PastTimelike,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureReport {
    pub resolution: usize,
    pub min_abs_det: f64,
    /// Minimum of `−g22`; positive iff (0,1) is timelike everywhere sampled.
    pub min_neg_g22: f64,
    /// Minimum of `g11`; positive iff horizontal lines are spacelike.
    pub min_g11: f64,
    pub pass: bool,
}

/// Samples `[0,1)²` on a `resolution × resolution` grid.
pub fn signature_check<M: Metric + ?Sized>(
    metric: &M,
    resolution: usize,
) -> Result<SignatureReport, MetricError> {
    if resolution < 8 {
        return Err(MetricError::InvalidParameter(format!(
            "signature_check resolution must be >= 8, got {resolution}"
        )));
    }
    let mut min_abs_det = f64::INFINITY;
    let mut min_neg_g22 = f64::INFINITY;
    let mut min_g11 = f64::INFINITY;
    let mut pass = true;
    for i in 0..resolution {
        for j in 0..resolution {
            let p = Vec2::new(i as f64, j as f64) / resolution as f64;
            let g = metric.matrix(&p);
            let det = g.determinant();
            pass &= det < 0.0 && g[(1, 1)] < 0.0;
            min_abs_det = min_abs_det.min(det.abs());
            min_neg_g22 = min_neg_g22.min(-g[(1, 1)]);
            min_g11 = min_g11.min(g[(0, 0)]);
        }
    }
    Ok(SignatureReport {
        resolution,
        min_abs_det,
        min_neg_g22,
        min_g11,
        pass,
    })
}

/// g-orthonormal frame: `e0` future unit timelike along (0,1), `e1` unit
/// spacelike pointing to increasing x.
#[derive(Clone, Copy, Debug)]
pub struct BoostFrame {
    pub e0: Vec2,
    pub e1: Vec2,
}

impl BoostFrame {
    pub fn at<M: Metric + ?Sized>(metric: &M, p: &Vec2) -> Self {
        Self::from_matrix(&metric.matrix(p))
    }

    pub fn from_matrix(g: &Matrix2<f64>) -> Self {
        let (g12, g22) = (g[(0, 1)], g[(1, 1)]);
        let det = g.determinant();
        let e0 = Vec2::new(0.0, 1.0) / (-g22).sqrt();
        let e1 = Vec2::new(-g22, g12) / (g22 * det).sqrt();
        BoostFrame { e0, e1 }
    }

    /// Unit future-timelike vector with rapidity `theta`.
    pub fn velocity(&self, theta: f64) -> Vec2 {
        self.e0 * theta.cosh() + self.e1 * theta.sinh()
    }

    /// Frame components `(a, b)` with `v = a·e0 + b·e1`.
    pub fn components(&self, g: &Matrix2<f64>, v: &Vec2) -> (f64, f64) {
        (-inner_with(g, v, &self.e0), inner_with(g, v, &self.e1))
    }

    /// Rapidity of a future-timelike vector, `None` otherwise.
    pub fn rapidity(&self, g: &Matrix2<f64>, v: &Vec2) -> Option<f64> {
        let (a, b) = self.components(g, v);
        (a > 0.0 && b.abs() < a).then(|| (b / a).atanh())
    }

    /// Future null direction leaning right (`e0 + e1`) and left (`e0 − e1`).
    pub fn null_directions(&self) -> (Vec2, Vec2) {
        (self.e0 + self.e1, self.e0 - self.e1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jets<M: Metric>(m: &M, p: &Vec2, h: f64) -> [Jet; 3] {
        let at = |dx: f64, dy: f64| m.matrix(&(p + Vec2::new(dx, dy)));
        let c = at(0.0, 0.0);
        let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let (pp, pm, mp, mm) = (at(h, h), at(h, -h), at(-h, h), at(-h, -h));
        let jet = |r: usize, s: usize| Jet {
            v: c[(r, s)],
            dx: (xp[(r, s)] - xm[(r, s)]) / (2.0 * h),
            dy: (yp[(r, s)] - ym[(r, s)]) / (2.0 * h),
            dxx: (xp[(r, s)] - 2.0 * c[(r, s)] + xm[(r, s)]) / (h * h),
            dxy: (pp[(r, s)] - pm[(r, s)] - mp[(r, s)] + mm[(r, s)]) / (4.0 * h * h),
            dyy: (yp[(r, s)] - 2.0 * c[(r, s)] + ym[(r, s)]) / (h * h),
        };
        [jet(0, 0), jet(0, 1), jet(1, 1)]
    }

    #[test]
    fn flat_eval_is_minkowski() {
        let e = eval_metric(&MetricSpec::flat(), &Vec2::new(0.3, -2.0)).unwrap();
        assert_eq!(e.g, Matrix2::new(1.0, 0.0, 0.0, -1.0));
        assert_eq!(e.christoffel, [[[0.0; 2]; 2]; 2]);
        assert_eq!(e.gauss_curvature, 0.0);
        assert!((e.g * e.g_inv - Matrix2::identity()).norm() < 1e-12);
    }

    #[test]
    fn conformal_curvature_matches_finite_difference_oracle() {
        let m = MetricSpec::conformal(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let exact = eval_metric(&m, &p).unwrap().gauss_curvature;
            let oracle = gauss_curvature(&fd_jets(&m, &p, 1e-4));
            assert!((exact - oracle).abs() < 1e-6, "{exact} vs {oracle}");
        }
    }

    #[test]
    fn christoffel_matches_finite_differences_at_second_order() {
        let m = MetricSpec::sheared(0.2);
        let p = Vec2::new(0.17, 0.61);
        let exact = christoffel(&m.components(&p));
        let err = |h: f64| {
            let approx = christoffel(&fd_jets(&m, &p, h));
            let mut e: f64 = 0.0;
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        e = e.max((approx[k][i][j] - exact[k][i][j]).abs());
                    }
                }
            }
            e
        };
        let (e3, e4) = (err(1e-3), err(1e-4));
        let ratio = e3 / e4;
        assert!(ratio > 80.0 && ratio < 120.0, "ratio {ratio} ({e3}, {e4})");
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let m = MetricSpec::conformal(0.1);
        let c = christoffel(&m.components(&Vec2::new(0.3, 0.9)));
        for k in 0..2 {
            assert_eq!(c[k][0][1], c[k][1][0]);
        }
    }

    #[test]
    fn evaluation_is_lattice_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [MetricSpec::conformal(0.1), MetricSpec::sheared(0.2)] {
            for _ in 0..100 {
                let p = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let k = Vec2::new(rng.gen_range(-50..50) as f64, rng.gen_range(-50..50) as f64);
                let a = eval_metric(&m, &p).unwrap();
                let b = eval_metric(&m, &(p + k)).unwrap();
                assert!((a.g - b.g).norm() < 1e-12);
                assert!((a.gauss_curvature - b.gauss_curvature).abs() < 1e-10);
                for kk in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let d = a.christoffel[kk][i][j] - b.christoffel[kk][i][j];
                            assert!(d.abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lorentz_norm_and_classification() {
        let m = MetricSpec::flat();
        let o = Vec2::zeros();
        assert_eq!(lorentz_norm(&m, &o, &Vec2::new(0.0, 1.0)), -1.0);
        assert_eq!(lorentz_norm(&m, &o, &Vec2::new(1.0, 1.0)), 0.0);
        assert_eq!(lorentz_norm(&m, &o, &Vec2::new(1.0, 2.0)), -3.0);
        use CausalCharacter::*;
        assert_eq!(classify_vector(&m, &o, &Vec2::new(0.0, 1.0)), FutureTimelike);
        assert_eq!(classify_vector(&m, &o, &Vec2::new(1.0, 1.0)), FutureNull);
        assert_eq!(classify_vector(&m, &o, &Vec2::new(0.0, -1.0)), PastTimelike);
        assert_eq!(classify_vector(&m, &o, &Vec2::new(-1.0, -1.0)), PastNull);
        assert_eq!(classify_vector(&m, &o, &Vec2::new(2.0, 1.0)), Spacelike);
        assert_eq!(classify_vector(&m, &o, &Vec2::zeros()), Zero);
    }

    #[test]
    fn signature_reports() {
        let flat = signature_check(&MetricSpec::flat(), 64).unwrap();
        assert!(flat.pass);
        assert_eq!(flat.min_abs_det, 1.0);
        let sheared = signature_check(&MetricSpec::sheared(0.2), 64).unwrap();
        assert!(sheared.pass);
        assert!((sheared.min_abs_det - 1.0).abs() < 1e-15);
        let broken = MetricSpec::raw(
            FourierSeries::constant(1.0),
            FourierSeries::zero(),
            FourierSeries::constant(1.0),
            None,
        );
        assert!(!signature_check(&broken, 64).unwrap().pass);
        assert!(eval_metric(&broken, &Vec2::zeros()).is_err());
        assert!(signature_check(&MetricSpec::flat(), 4).is_err());
    }

    #[test]
    fn boost_frame_is_orthonormal() {
        let m = MetricSpec::sheared(0.2);
        let p = Vec2::new(0.2, 0.0);
        let g = m.matrix(&p);
        let f = BoostFrame::from_matrix(&g);
        assert!((inner_with(&g, &f.e0, &f.e0) + 1.0).abs() < 1e-14);
        assert!((inner_with(&g, &f.e1, &f.e1) - 1.0).abs() < 1e-14);
        assert!(inner_with(&g, &f.e0, &f.e1).abs() < 1e-14);
        let v = f.velocity(0.7);
        assert!((f.rapidity(&g, &v).unwrap() - 0.7).abs() < 1e-12);
        let (r, l) = f.null_directions();
        assert!(inner_with(&g, &r, &r).abs() < 1e-14 && inner_with(&g, &l, &l).abs() < 1e-14);
        assert!(r.x > 0.0 && l.x < 0.0);
    }
}
