use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::MaxDistError;
use crate::metric::Metric;
use crate::Vec2;

/// Axis-aligned rectangle `[x0,x1]×[y0,y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, MaxDistError> {
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(MaxDistError::InvalidInput(format!(
                "window [{x0},{x1}]x[{y0},{y1}] is empty"
            )));
        }
        Ok(Window { x0, x1, y0, y1 })
    }

    pub fn unit() -> Self {
        Window {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.x0, self.y0),
            Vec2::new(self.x1, self.y0),
            Vec2::new(self.x0, self.y1),
            Vec2::new(self.x1, self.y1),
        ]
    }

    pub fn shifted(&self, by: &Vec2) -> Self {
        Window {
            x0: self.x0 + by.x,
            x1: self.x1 + by.x,
            y0: self.y0 + by.y,
            y1: self.y1 + by.y,
        }
    }
}

/// Grid nodes per axis, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

impl Resolution {
    pub fn new(nx: usize, ny: usize) -> Result<Self, MaxDistError> {
        if nx < 3 || ny < 3 {
            return Err(MaxDistError::InvalidInput(format!(
                "resolution must be at least 3x3, got {nx}x{ny}"
            )));
        }
        Ok(Resolution { nx, ny })
    }

    pub fn square(n: usize) -> Self {
        Resolution { nx: n, ny: n }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The resolution with each grid spacing halved.
    pub fn refined(&self) -> Self {
        Resolution {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
        }
    }
}

/// What the stored values are. Distance fields `d_p` grow toward the
/// future; potentials `u` decrease along future curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Distance,
    Potential,
}

/// Values on a regular grid with their future-directed g-gradient.
///
/// For a potential `u` the gradient is `g⁻¹du`; for a distance field it is
/// `−g⁻¹d(d_p)`. Either way a solution of the eikonal equation has a
/// future unit timelike gradient. Storage is row-major, `j·nx + i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarField {
    pub window: Window,
    pub resolution: Resolution,
    pub kind: FieldKind,
    pub values: Vec<f64>,
    /// Coordinate differential `(∂x, ∂y)` of the values.
    pub differential: Vec<Vec2>,
    pub gradient: Vec<Vec2>,
    pub valid: Vec<bool>,
    /// Nodes whose derivatives used a one-sided stencil.
    pub one_sided: Vec<bool>,
}

impl ScalarField {
    pub fn from_values(
        window: Window,
        resolution: Resolution,
        kind: FieldKind,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Self {
        let n = resolution.len();
        assert_eq!(values.len(), n);
        assert_eq!(valid.len(), n);
        ScalarField {
            window,
            resolution,
            kind,
            values,
            differential: vec![Vec2::zeros(); n],
            gradient: vec![Vec2::zeros(); n],
            valid,
            one_sided: vec![false; n],
        }
    }

    pub fn hx(&self) -> f64 {
        self.window.width() / (self.resolution.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.window.height() / (self.resolution.ny - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        node_of(&self.window, &self.resolution, i, j)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Vec2)> + '_ {
        (0..self.resolution.ny).flat_map(move |j| {
            (0..self.resolution.nx).map(move |i| (i, j, self.node(i, j)))
        })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Valid nodes away from the window edge whose stencils were central.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        let k = self.index(i, j);
        self.valid[k]
            && !self.one_sided[k]
            && i > 0
            && j > 0
            && i + 1 < self.resolution.nx
            && j + 1 < self.resolution.ny
    }

    /// Whether every node within `margin` steps of `(i, j)` is valid.
    pub fn has_margin(&self, i: usize, j: usize, margin: usize) -> bool {
        let (nx, ny) = (self.resolution.nx, self.resolution.ny);
        if i < margin || j < margin || i + margin >= nx || j + margin >= ny {
            return false;
        }
        for jj in j - margin..=j + margin {
            for ii in i - margin..=i + margin {
                if !self.valid[self.index(ii, jj)] {
                    return false;
                }
            }
        }
        true
    }

    /// Recomputes differentials and gradients from the values.
    ///
    /// Central differences where both neighbours are valid, second-order
    /// one-sided ones otherwise (flagged); nodes with no usable stencil along
    /// an axis are invalidated.
    pub fn compute_gradients<M: Metric + ?Sized>(&mut self, metric: &M) {
        let (nx, ny) = (self.resolution.nx, self.resolution.ny);
        let (hx, hy) = (self.hx(), self.hy());
        let mut invalidate = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = self.index(i, j);
                self.one_sided[k] = false;
                if !self.valid[k] {
                    self.differential[k] = Vec2::zeros();
                    self.gradient[k] = Vec2::zeros();
                    continue;
                }
                let ok = |ii: isize, jj: isize| {
                    ii >= 0
                        && jj >= 0
                        && (ii as usize) < nx
                        && (jj as usize) < ny
                        && self.valid[jj as usize * nx + ii as usize]
                };
                let val = |ii: isize, jj: isize| self.values[jj as usize * nx + ii as usize];
                let (ii, jj) = (i as isize, j as isize);
                let dx = axis_derivative(ii, jj, 1, 0, hx, &ok, &val);
                let dy = axis_derivative(ii, jj, 0, 1, hy, &ok, &val);
                match (dx, dy) {
                    (Some((dx, ox)), Some((dy, oy))) => {
                        self.differential[k] = Vec2::new(dx, dy);
                        self.one_sided[k] = ox || oy;
                    }
                    _ => invalidate.push(k),
                }
            }
        }
        for k in invalidate {
            self.valid[k] = false;
            self.differential[k] = Vec2::zeros();
        }
        let sign = match self.kind {
            FieldKind::Potential => 1.0,
            FieldKind::Distance => -1.0,
        };
        for j in 0..ny {
            for i in 0..nx {
                let k = self.index(i, j);
                self.gradient[k] = if self.valid[k] {
                    let g = metric.matrix(&self.node(i, j));
                    raise(&g, &self.differential[k]) * sign
                } else {
                    Vec2::zeros()
                };
            }
        }
    }

    /// Cell containing `p` and local coordinates in `[0,1]²`.
    fn locate(&self, p: &Vec2) -> Option<(usize, usize, f64, f64)> {
        let (nx, ny) = (self.resolution.nx, self.resolution.ny);
        let fx = (p.x - self.window.x0) / self.hx();
        let fy = (p.y - self.window.y0) / self.hy();
        let eps = 1e-9;
        if !(fx >= -eps && fy >= -eps && fx <= (nx - 1) as f64 + eps && fy <= (ny - 1) as f64 + eps)
        {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(nx - 2);
        let j = (fy.floor().max(0.0) as usize).min(ny - 2);
        Some((i, j, (fx - i as f64).clamp(0.0, 1.0), (fy - j as f64).clamp(0.0, 1.0)))
    }

    fn cell_valid(&self, i: usize, j: usize) -> bool {
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            .iter()
            .all(|&(a, b)| self.valid[self.index(a, b)])
    }

    fn bilinear<T>(&self, p: &Vec2, data: &[T]) -> Option<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (i, j, u, v) = self.locate(p)?;
        if !self.cell_valid(i, j) {
            return None;
        }
        let at = |a: usize, b: usize| data[self.index(a, b)];
        Some(
            at(i, j) * ((1.0 - u) * (1.0 - v))
                + at(i + 1, j) * (u * (1.0 - v))
                + at(i, j + 1) * ((1.0 - u) * v)
                + at(i + 1, j + 1) * (u * v),
        )
    }

    /// Bilinear gradient; `None` outside the valid region.
    pub fn gradient_at(&self, p: &Vec2) -> Option<Vec2> {
        self.bilinear(p, &self.gradient)
    }

    /// Bicubic Catmull–Rom interpolation of the values where a valid 4×4
    /// stencil exists, bilinear otherwise.
    pub fn value_at(&self, p: &Vec2) -> Option<f64> {
        let (i, j, u, v) = self.locate(p)?;
        if !self.cell_valid(i, j) {
            return None;
        }
        let (nx, ny) = (self.resolution.nx, self.resolution.ny);
        if i >= 1 && j >= 1 && i + 2 < nx && j + 2 < ny {
            let mut ok = true;
            for b in j - 1..=j + 2 {
                for a in i - 1..=i + 2 {
                    ok &= self.valid[self.index(a, b)];
                }
            }
            if ok {
                let wu = catmull_rom(u);
                let wv = catmull_rom(v);
                let mut s = 0.0;
                for (bb, wb) in wv.iter().enumerate() {
                    for (aa, wa) in wu.iter().enumerate() {
                        s += wa * wb * self.values[self.index(i + aa - 1, j + bb - 1)];
                    }
                }
                return Some(s);
            }
        }
        self.bilinear(p, &self.values)
    }

    /// Value at the nearest node, if `p` is within 1e−9 of one.
    pub fn node_value(&self, p: &Vec2) -> Option<f64> {
        let fx = (p.x - self.window.x0) / self.hx();
        let fy = (p.y - self.window.y0) / self.hy();
        let (i, j) = (fx.round(), fy.round());
        if (fx - i).abs() > 1e-9 || (fy - j).abs() > 1e-9 || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.resolution.nx || j >= self.resolution.ny {
            return None;
        }
        let k = self.index(i, j);
        self.valid[k].then(|| self.values[k])
    }

    /// Sup of `|a − b|` over nodes valid in both fields of equal shape.
    pub fn sup_gap(&self, other: &ScalarField) -> (f64, f64) {
        let mut gv: f64 = 0.0;
        let mut gg: f64 = 0.0;
        for k in 0..self.values.len() {
            if self.valid[k] && other.valid[k] {
                gv = gv.max((self.values[k] - other.values[k]).abs());
                gg = gg.max((self.gradient[k] - other.gradient[k]).norm());
            }
        }
        (gv, gg)
    }
}

pub(crate) fn node_of(w: &Window, r: &Resolution, i: usize, j: usize) -> Vec2 {
    let fx = i as f64 / (r.nx - 1) as f64;
    let fy = j as f64 / (r.ny - 1) as f64;
    Vec2::new(w.x0 + fx * (w.x1 - w.x0), w.y0 + fy * (w.y1 - w.y0))
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// `g⁻¹ω` for a covector `ω`.
pub fn raise(g: &Matrix2<f64>, w: &Vec2) -> Vec2 {
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    Vec2::new(
        (g[(1, 1)] * w.x - g[(0, 1)] * w.y) / det,
        (-g[(1, 0)] * w.x + g[(0, 0)] * w.y) / det,
    )
}

/// Derivative along `(di, dj)` with its one-sided flag.
fn axis_derivative(
    i: isize,
    j: isize,
    di: isize,
    dj: isize,
    h: f64,
    ok: &dyn Fn(isize, isize) -> bool,
    val: &dyn Fn(isize, isize) -> f64,
) -> Option<(f64, bool)> {
    let at = |s: isize| (i + s * di, j + s * dj);
    let (p1, m1, p2, m2) = (at(1), at(-1), at(2), at(-2));
    let f0 = val(i, j);
    if ok(p1.0, p1.1) && ok(m1.0, m1.1) {
        return Some(((val(p1.0, p1.1) - val(m1.0, m1.1)) / (2.0 * h), false));
    }
    if ok(p1.0, p1.1) && ok(p2.0, p2.1) {
        return Some(((-3.0 * f0 + 4.0 * val(p1.0, p1.1) - val(p2.0, p2.1)) / (2.0 * h), true));
    }
    if ok(m1.0, m1.1) && ok(m2.0, m2.1) {
        return Some(((3.0 * f0 - 4.0 * val(m1.0, m1.1) + val(m2.0, m2.1)) / (2.0 * h), true));
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EikonalReport {
    /// Over interior nodes (central stencils).
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst_node: Option<[f64; 2]>,
    pub n_nodes: usize,
    /// Over every valid node, one-sided stencils included.
    pub max_residual_all: f64,
    /// Whether every valid gradient is future timelike.
    pub future_timelike: bool,
}

/// `|g(∇u, ∇u) + 1|` per valid node.
pub fn verify_eikonal<M: Metric + ?Sized>(field: &ScalarField, metric: &M) -> EikonalReport {
    let mut max: f64 = 0.0;
    let mut all: f64 = 0.0;
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut worst = None;
    let mut future = true;
    for (i, j, p) in field.nodes() {
        let k = field.index(i, j);
        if !field.valid[k] {
            continue;
        }
        let g = metric.matrix(&p);
        let v = field.gradient[k];
        let q = v.dot(&(g * v));
        let r = (q + 1.0).abs();
        future &= q < 0.0 && v.dot(&(g * Vec2::new(0.0, 1.0))) < 0.0;
        all = all.max(r);
        if field.is_interior(i, j) {
            sum += r;
            n += 1;
            if r >= max {
                max = r;
                worst = Some([p.x, p.y]);
            }
        }
    }
    EikonalReport {
        max_residual: max,
        mean_residual: if n > 0 { sum / n as f64 } else { 0.0 },
        worst_node: worst,
        n_nodes: n,
        max_residual_all: all,
        future_timelike: future,
    }
}

/// Hessian of the potential (`u`, or `−d_p` for distance fields) by central
/// second differences, bilinearly blended from the surrounding nodes.
pub fn hessian_probe(field: &ScalarField, p: &Vec2) -> Result<Matrix2<f64>, MaxDistError> {
    let (i, j, u, v) = field.locate(p).ok_or(MaxDistError::MaskMargin {
        x: p.x,
        y: p.y,
    })?;
    let mut corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
    if u < 1e-9 && v < 1e-9 {
        corners = [(i, j); 4];
    }
    let (hx, hy) = (field.hx(), field.hy());
    let sign = match field.kind {
        FieldKind::Potential => 1.0,
        FieldKind::Distance => -1.0,
    };
    let at = |a: usize, b: usize| field.values[field.index(a, b)];
    let mut hs = [Matrix2::zeros(); 4];
    for (n, &(a, b)) in corners.iter().enumerate() {
        if !field.has_margin(a, b, 2) {
            return Err(MaxDistError::MaskMargin { x: p.x, y: p.y });
        }
        let f0 = at(a, b);
        let fxx = (at(a + 1, b) - 2.0 * f0 + at(a - 1, b)) / (hx * hx);
        let fyy = (at(a, b + 1) - 2.0 * f0 + at(a, b - 1)) / (hy * hy);
        let fxy = (at(a + 1, b + 1) - at(a + 1, b - 1) - at(a - 1, b + 1) + at(a - 1, b - 1))
            / (4.0 * hx * hy);
        hs[n] = Matrix2::new(fxx, fxy, fxy, fyy) * sign;
    }
    Ok(hs[0] * ((1.0 - u) * (1.0 - v))
        + hs[1] * (u * (1.0 - v))
        + hs[2] * ((1.0 - u) * v)
        + hs[3] * (u * v))
}
