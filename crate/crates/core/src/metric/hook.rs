use super::{Jet, Metric};
use crate::Vec2;

/// Non-periodic metric of constant Gauss curvature, used only to validate the
/// Jacobi-equation sign convention.
///
/// `focusing > 0` gives `dx² − cosh²(√k x) dy²`, whose timelike geodesics
/// refocus after proper time `π/√k`. `focusing < 0` gives
/// `cosh²(√|k| y) dx² − dy²`, whose timelike geodesics never refocus.
#[derive(Clone, Copy, Debug)]
pub struct ConstantCurvatureMetric {
    focusing: f64,
}

impl ConstantCurvatureMetric {
    pub fn new(focusing: f64) -> Self {
        ConstantCurvatureMetric { focusing }
    }

    pub fn focusing(&self) -> f64 {
        self.focusing
    }
}

/// Jet of `cosh²(a s)` in the variable `s`: value, first and second derivative.
fn cosh_sq(a: f64, s: f64) -> (f64, f64, f64) {
    let c = (2.0 * a * s).cosh();
    let sh = (2.0 * a * s).sinh();
    (0.5 * (1.0 + c), a * sh, 2.0 * a * a * c)
}

impl Metric for ConstantCurvatureMetric {
    fn components(&self, p: &Vec2) -> [Jet; 3] {
        let a = self.focusing.abs().sqrt();
        if self.focusing > 0.0 {
            let (v, d, dd) = cosh_sq(a, p.x);
            let g22 = Jet {
                v: -v,
                dx: -d,
                dxx: -dd,
                ..Jet::default()
            };
            [Jet::constant(1.0), Jet::constant(0.0), g22]
        } else {
            let (v, d, dd) = cosh_sq(a, p.y);
            let g11 = Jet {
                v,
                dy: d,
                dyy: dd,
                ..Jet::default()
            };
            [g11, Jet::constant(0.0), Jet::constant(-1.0)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::gauss_curvature;

    #[test]
    fn curvature_is_constant_and_opposite_to_focusing() {
        for k in [1.0, 4.0, 9.0, -1.0] {
            let m = ConstantCurvatureMetric::new(k);
            for p in [Vec2::new(0.0, 0.0), Vec2::new(0.3, -0.4), Vec2::new(-0.2, 0.5)] {
                let kk = gauss_curvature(&m.components(&p));
                assert!((kk + k).abs() < 1e-9, "k={k} K={kk}");
            }
        }
    }
}
