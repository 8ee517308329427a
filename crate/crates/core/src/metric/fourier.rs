use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::jet::Jet;
use crate::Vec2;

/// One term `a·cos(2π(mx+ny)) + b·sin(2π(mx+ny))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub m: i32,
    pub n: i32,
    pub a: f64,
    pub b: f64,
}

impl FourierTerm {
    pub const fn new(m: i32, n: i32, a: f64, b: f64) -> Self {
        FourierTerm { m, n, a, b }
    }

    fn is_constant(&self) -> bool {
        self.m == 0 && self.n == 0
    }

    /// Reduced phase in [0, 2π). Reducing before scaling keeps lattice
    /// translates bit-identical for moderate coordinates.
    #[inline]
    fn phase(&self, p: &Vec2) -> f64 {
        let turns = self.m as f64 * p.x + self.n as f64 * p.y;
        TAU * turns.rem_euclid(1.0)
    }
}

/// A finite trigonometric polynomial on the unit torus, lifted to the plane.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierSeries {
    terms: Vec<FourierTerm>,
}

impl FourierSeries {
    pub fn new(terms: Vec<FourierTerm>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|t| t.a != 0.0 || (t.b != 0.0 && !t.is_constant()))
            .collect();
        FourierSeries { terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![FourierTerm::new(0, 0, c, 0.0)])
    }

    pub fn zero() -> Self {
        FourierSeries { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(FourierTerm::is_constant)
    }

    pub fn eval(&self, p: &Vec2) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                if t.is_constant() {
                    t.a
                } else {
                    let (s, c) = t.phase(p).sin_cos();
                    t.a * c + t.b * s
                }
            })
            .sum()
    }

    /// Term-by-term partial derivative of order (`ox`, `oy`).
    pub fn derivative(&self, ox: u32, oy: u32) -> FourierSeries {
        let mut terms = self.terms.clone();
        for _ in 0..ox {
            terms = terms.iter().map(|t| Self::d_term(t, t.m)).collect();
        }
        for _ in 0..oy {
            terms = terms.iter().map(|t| Self::d_term(t, t.n)).collect();
        }
        Self::new(terms)
    }

    fn d_term(t: &FourierTerm, k: i32) -> FourierTerm {
        // d/dφ (a cos φ + b sin φ) = b cos φ − a sin φ
        let w = TAU * k as f64;
        FourierTerm::new(t.m, t.n, w * t.b, -w * t.a)
    }

    /// Value with first and second partials, sharing one `sin_cos` per term.
    pub fn jet(&self, p: &Vec2) -> Jet {
        let mut j = Jet::default();
        for t in &self.terms {
            if t.is_constant() {
                j.v += t.a;
                continue;
            }
            let (s, c) = t.phase(p).sin_cos();
            let f = t.a * c + t.b * s;
            let fp = t.b * c - t.a * s;
            let (wm, wn) = (TAU * t.m as f64, TAU * t.n as f64);
            j.v += f;
            j.dx += wm * fp;
            j.dy += wn * fp;
            j.dxx -= wm * wm * f;
            j.dxy -= wm * wn * f;
            j.dyy -= wn * wn * f;
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FourierSeries {
        FourierSeries::new(vec![
            FourierTerm::new(0, 0, 0.7, 0.0),
            FourierTerm::new(1, -2, 0.3, -0.1),
            FourierTerm::new(3, 1, 0.0, 0.25),
        ])
    }

    #[test]
    fn jet_agrees_with_derivative_series() {
        let f = sample();
        let p = Vec2::new(0.37, -1.21);
        let j = f.jet(&p);
        assert!((j.v - f.eval(&p)).abs() < 1e-14);
        assert!((j.dx - f.derivative(1, 0).eval(&p)).abs() < 1e-12);
        assert!((j.dy - f.derivative(0, 1).eval(&p)).abs() < 1e-12);
        assert!((j.dxx - f.derivative(2, 0).eval(&p)).abs() < 1e-11);
        assert!((j.dxy - f.derivative(1, 1).eval(&p)).abs() < 1e-11);
        assert!((j.dyy - f.derivative(0, 2).eval(&p)).abs() < 1e-11);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let f = sample();
        let p = Vec2::new(0.11, 0.52);
        let h = 1e-5;
        let fd = (f.eval(&(p + Vec2::new(h, 0.0))) - f.eval(&(p - Vec2::new(h, 0.0)))) / (2.0 * h);
        assert!((fd - f.derivative(1, 0).eval(&p)).abs() < 1e-7);
    }

    #[test]
    fn constant_series_has_no_derivative_terms() {
        let f = FourierSeries::constant(-1.0);
        assert!(f.is_constant());
        assert!(f.derivative(1, 0).terms().is_empty());
        assert_eq!(f.jet(&Vec2::new(3.0, 4.0)), Jet::constant(-1.0));
    }

    #[test]
    fn lattice_translates_evaluate_identically() {
        let f = sample();
        let p = Vec2::new(0.123, 0.456);
        for (j, k) in [(1, 0), (0, 1), (-7, 3), (40, -25)] {
            let q = p + Vec2::new(j as f64, k as f64);
            assert!((f.eval(&p) - f.eval(&q)).abs() < 1e-12);
        }
    }
}
