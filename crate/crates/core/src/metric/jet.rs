//! Second-order jets of scalar functions on the plane.

/// Value and partial derivatives up to second order at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet {
            v,
            dx: 0.0,
            dy: 0.0,
            dxx: 0.0,
            dxy: 0.0,
            dyy: 0.0,
        }
    }

    /// First derivative along coordinate `i` (0 = x, 1 = y).
    #[inline]
    pub fn d(&self, i: usize) -> f64 {
        if i == 0 {
            self.dx
        } else {
            self.dy
        }
    }

    /// Second derivative along coordinates `i`, `j`.
    #[inline]
    pub fn dd(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.dxx,
            (1, 1) => self.dyy,
            _ => self.dxy,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Jet {
            v: self.v * s,
            dx: self.dx * s,
            dy: self.dy * s,
            dxx: self.dxx * s,
            dxy: self.dxy * s,
            dyy: self.dyy * s,
        }
    }

    pub fn add(self, o: Jet) -> Self {
        Jet {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }

    /// Leibniz rule.
    pub fn mul(self, o: Jet) -> Self {
        Jet {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }

    /// Chain rule for `exp(self)`.
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Jet {
            v: e,
            dx: e * self.dx,
            dy: e * self.dy,
            dxx: e * (self.dxx + self.dx * self.dx),
            dxy: e * (self.dxy + self.dx * self.dy),
            dyy: e * (self.dyy + self.dy * self.dy),
        }
    }
}
