//! Sampled estimates of the compactness and Lipschitz constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::MaxDistError;
use crate::causal::{estimate_b, estimate_cone, ConeEstimate};
use crate::geodesic::{shoot_with, ShootOptions};
use crate::metric::{inner_with, BoostFrame, Metric};
use crate::{cross, Vec2};

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsOptions {
    pub seed: u64,
    /// Shortest sampled chord, the `K(ε)` threshold.
    pub min_chord: f64,
    pub max_chord: f64,
    /// Step of the finite-difference slopes of `d`.
    pub fd_step: f64,
    /// Euclidean integration step of the sampled maximizers.
    pub step: f64,
    /// Rapidities scanned for `K` and `K/δ`, in `[-r, r]`.
    pub rapidity_range: f64,
    pub rapidity_count: usize,
    pub cone: Option<ConeEstimate>,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        ConstantsOptions {
            seed: 7,
            min_chord: 5.0,
            max_chord: 10.0,
            fd_step: 1e-3,
            step: 1e-2,
            rapidity_range: 8.0,
            rapidity_count: 801,
            cone: None,
        }
    }
}

/// Where an extremal value was attained.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Witness {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub vector: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalConstants {
    pub epsilon: f64,
    pub n_samples: usize,
    pub b: f64,
    /// `sup |v|·margin(v)` over unit timelike vectors.
    pub k: f64,
    pub k_over_delta: f64,
    pub l_eps: f64,
    pub delta_eps: f64,
    pub q: Option<f64>,
    pub h: Option<f64>,
    pub delta_witness: Witness,
    pub l_witness: Witness,
    pub k_over_delta_witness: Witness,
    /// Largest `|v|·δ(ε)/K` seen on a sampled maximizer; at most 1 when the
    /// compactness bound holds.
    pub velocity_bound_ratio: f64,
    pub options: ConstantsOptions,
}

/// `dist(v, Light_p) / |v|` for a future vector, negative if `v` is not
/// future timelike.
pub fn local_margin(g: &nalgebra::Matrix2<f64>, v: &Vec2) -> f64 {
    let (right, left) = BoostFrame::from_matrix(g).null_directions();
    let (r, l) = (right.normalize(), left.normalize());
    let n = v.norm();
    let timelike = inner_with(g, v, v) < 0.0 && inner_with(g, v, &Vec2::new(0.0, 1.0)) < 0.0;
    let d = cross(&r, v).abs().min(cross(&l, v).abs()) / n;
    if timelike {
        d
    } else {
        -d
    }
}

/// Angular interval of unit chords with cone margin at least `eps`.
fn admissible_arc(cone: &ConeEstimate, eps: f64) -> Option<(f64, f64)> {
    let a0 = cone.m_minus.y.atan2(cone.m_minus.x);
    let a1 = cone.m_plus.y.atan2(cone.m_plus.x);
    let n = 4000;
    let ok: Vec<f64> = (0..=n)
        .map(|k| a0 + (a1 - a0) * k as f64 / n as f64)
        .filter(|a| cone.margin(&Vec2::new(a.cos(), a.sin())) >= eps)
        .collect();
    Some((*ok.first()?, *ok.last()?))
}

pub fn estimate_constants<M: Metric + ?Sized>(
    metric: &M,
    epsilon: f64,
    n_samples: usize,
) -> Result<EmpiricalConstants, MaxDistError> {
    estimate_constants_with(metric, epsilon, n_samples, &ConstantsOptions::default())
}

pub fn estimate_constants_with<M: Metric + ?Sized>(
    metric: &M,
    epsilon: f64,
    n_samples: usize,
    opts: &ConstantsOptions,
) -> Result<EmpiricalConstants, MaxDistError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(MaxDistError::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n_samples < 100 {
        return Err(MaxDistError::InvalidInput(format!("need at least 100 samples, got {n_samples}")));
    }
    let num = |e: String| MaxDistError::Numerical(e);
    let cone = match opts.cone {
        Some(c) => c,
        None => estimate_cone(metric, 100.0).map_err(|e| num(e.to_string()))?,
    };
    let (lo, hi) = admissible_arc(&cone, epsilon)
        .ok_or_else(|| MaxDistError::InvalidInput(format!("no chord direction has margin {epsilon}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Directions are stratified so both edges of the arc are always hit.
    let pairs: Vec<(Vec2, Vec2)> = (0..n_samples)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
            let x = Vec2::new(rng.gen::<f64>(), rng.gen::<f64>());
            let len = rng.gen_range(opts.min_chord..=opts.max_chord);
            (x, x + Vec2::new(a.cos(), a.sin()) * len)
        })
        .collect();

    let shoot = ShootOptions {
        step: opts.step,
        ..ShootOptions::default()
    };
    let h = opts.fd_step;
    let dirs = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let per_pair: Vec<Result<(f64, Witness, f64), MaxDistError>> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let shot = shoot_with(metric, x, y, &shoot).map_err(|e| num(e.to_string()))?;
            let mut worst = (f64::INFINITY, Witness::default());
            for s in &shot.geodesic.samples {
                let v = s.velocity();
                let m = local_margin(&metric.matrix(&s.point()), &v);
                if m < worst.0 {
                    worst = (
                        m,
                        Witness {
                            x: [x.x, x.y],
                            y: [y.x, y.y],
                            vector: s.v,
                        },
                    );
                }
            }
            let d0 = shot.arrival;
            let mut grad = [0.0; 4];
            for (k, e) in dirs.iter().enumerate() {
                let dy = shoot_with(metric, x, y + e * h, &shoot).map_err(|e| num(e.to_string()))?;
                let dx = shoot_with(metric, x + e * h, y, &shoot).map_err(|e| num(e.to_string()))?;
                grad[k] = (dy.arrival - d0) / h;
                grad[2 + k] = (dx.arrival - d0) / h;
            }
            let slope = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            Ok((worst.0, worst.1, slope))
        })
        .collect();
    let per_pair = per_pair.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut delta = (f64::INFINITY, Witness::default());
    let mut l = (0.0, Witness::default());
    for ((m, w, slope), (x, y)) in per_pair.iter().zip(&pairs) {
        if *m < delta.0 {
            delta = (*m, w.clone());
        }
        if *slope > l.0 {
            l = (
                *slope,
                Witness {
                    x: [x.x, x.y],
                    y: [y.x, y.y],
                    vector: [0.0, 0.0],
                },
            );
        }
    }

    // Unit timelike vectors at the sampled base points.
    let r = opts.rapidity_range;
    let nr = opts.rapidity_count.max(3);
    let mut k = 0.0f64;
    let mut kd = (0.0, Witness::default());
    for (x, _) in &pairs {
        let g = metric.matrix(x);
        let frame = BoostFrame::from_matrix(&g);
        for j in 0..nr {
            let v = frame.velocity(-r + 2.0 * r * j as f64 / (nr - 1) as f64);
            let m = local_margin(&g, &v);
            k = k.max(v.norm() * m);
            if m >= delta.0 && v.norm() > kd.0 {
                kd = (
                    v.norm(),
                    Witness {
                        x: [x.x, x.y],
                        y: [x.x, x.y],
                        vector: [v.x, v.y],
                    },
                );
            }
        }
    }

    let ratio = per_pair
        .iter()
        .zip(&pairs)
        .map(|(_, (x, y))| {
            shoot_with(metric, *x, *y, &shoot)
                .map(|s| {
                    s.geodesic
                        .samples
                        .iter()
                        .map(|q| q.velocity().norm())
                        .fold(0.0, f64::max)
                })
                .unwrap_or(0.0)
        })
        .fold(0.0, f64::max)
        * delta.0
        / k;

    let b = estimate_b(metric, n_samples, opts.seed).map_err(|e| num(e.to_string()))?;
    Ok(EmpiricalConstants {
        epsilon,
        n_samples,
        b: b.b,
        k,
        k_over_delta: kd.0,
        l_eps: l.0,
        delta_eps: delta.0,
        q: None,
        h: None,
        delta_witness: delta.1,
        l_witness: l.1,
        k_over_delta_witness: kd.1,
        velocity_bound_ratio: ratio,
        options: opts.clone(),
    })
}
