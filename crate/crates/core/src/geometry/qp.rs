//! Small dense quadratic minimization used for Euclidean projections.
//!
//! Two solvers share the work:
//! - Wolfe's minimum-norm-point method for projecting onto the convex hull of
//!   a finite point set;
//! - a dual active-set method (Goldfarb–Idnani with identity Hessian) for
//!   projecting onto a polyhedron `{z : a_k·z ≤ b_k}`.
//!
//! Both terminate finitely in exact arithmetic; the iteration cap only
//! guards against floating-point stalling.

use itertools::Itertools;

use super::Point;
use crate::error::{Error, Result};

pub const PROJECTION_TOLERANCE: f64 = 1e-9;
pub const ITERATION_CAP: usize = 10_000;

/// Solves the dense square system `m · x = rhs` (row-major `m`) by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
pub(crate) fn solve_dense(n: usize, m: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut b = rhs.to_vec();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for col in 0..n {
        let (pivot, pivot_abs) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / d;
            if factor != 0.0 {
                for k in col..n {
                    a[r * n + k] -= factor * a[col * n + k];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

/// Nearest point to `x` in `conv(points)` together with its convex weights.
pub fn project_onto_hull(points: &[Point], x: &Point) -> Result<(Point, Vec<f64>)> {
    if points.is_empty() {
        return Err(Error::EmptyBody("hull of no points"));
    }
    let n = x.dim();
    for p in points {
        p.expect_dim(n)?;
    }
    let q: Vec<Point> = points.iter().map(|p| p - x).collect();
    let max_sq = q.iter().map(Point::norm_sq).fold(0.0, f64::max).max(1e-300);

    let start = (0..q.len())
        .min_by(|&a, &b| q[a].norm_sq().total_cmp(&q[b].norm_sq()))
        .expect("nonempty");
    let mut support = vec![start];
    let mut weights = vec![1.0];
    let mut z = q[start].clone();

    let combine = |support: &[usize], w: &[f64]| {
        let mut acc = Point::zeros(n);
        for (&k, &wk) in support.iter().zip(w) {
            acc.axpy(wk, &q[k]);
        }
        acc
    };

    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > ITERATION_CAP {
            return Err(Error::NotConverged {
                iterations,
                best: &z + x,
                residual: z.norm(),
            });
        }
        if z.norm_sq() <= 1e-28 * max_sq {
            break;
        }
        let (j, zj) = q
            .iter()
            .enumerate()
            .map(|(k, qk)| (k, z.dot(qk)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if z.norm_sq() - zj <= 1e-14 * max_sq || support.contains(&j) {
            break;
        }
        support.push(j);
        weights.push(0.0);

        // Minor cycle: move to the affine minimizer, dropping points whose
        // weight would turn negative.
        loop {
            iterations += 1;
            if iterations > ITERATION_CAP {
                return Err(Error::NotConverged {
                    iterations,
                    best: &z + x,
                    residual: z.norm(),
                });
            }
            let v = affine_min_norm(&q, &support);
            if v.iter().all(|&vk| vk > 1e-14) {
                weights = v;
                z = combine(&support, &weights);
                break;
            }
            let mut theta = 1.0f64;
            for (wk, vk) in weights.iter().zip(&v) {
                if *vk <= 1e-14 {
                    let denom = wk - vk;
                    if denom > 0.0 {
                        theta = theta.min(wk / denom);
                    }
                }
            }
            for (wk, vk) in weights.iter_mut().zip(&v) {
                *wk = (1.0 - theta) * *wk + theta * vk;
            }
            // Drop at least the weakest point so the cycle makes progress.
            let weakest = (0..weights.len())
                .min_by(|&a, &b| weights[a].total_cmp(&weights[b]))
                .expect("nonempty");
            let keep: Vec<bool> = (0..weights.len())
                .map(|k| k != weakest && weights[k] > 1e-14)
                .collect();
            let mut k = 0;
            support.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let mut k = 0;
            weights.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            if support.is_empty() {
                support.push(j);
                weights.push(1.0);
            }
            let total: f64 = weights.iter().sum();
            for wk in weights.iter_mut() {
                *wk /= total;
            }
            z = combine(&support, &weights);
            if support.len() == 1 {
                break;
            }
        }
    }

    let mut full = vec![0.0; points.len()];
    for (&k, &wk) in support.iter().zip(&weights) {
        full[k] += wk;
    }
    Ok((&z + x, full))
}

/// Weights (summing to one) of the minimum-norm point in the affine hull of
/// the selected points.
fn affine_min_norm(q: &[Point], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    if k == 1 {
        return vec![1.0];
    }
    let size = k + 1;
    let mut m = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for a in 0..k {
        for b in 0..k {
            m[a * size + b] = q[support[a]].dot(&q[support[b]]);
        }
        m[a * size + k] = 1.0;
        m[k * size + a] = 1.0;
    }
    rhs[k] = 1.0;
    if let Some(sol) = solve_dense(size, &m, &rhs) {
        return sol[..k].to_vec();
    }
    // Affinely dependent support: regularize the Gram block.
    let trace: f64 = (0..k).map(|a| m[a * size + a]).sum::<f64>().max(1e-300);
    for a in 0..k {
        m[a * size + a] += 1e-12 * trace;
    }
    solve_dense(size, &m, &rhs)
        .map(|sol| sol[..k].to_vec())
        .unwrap_or_else(|| vec![1.0 / k as f64; k])
}

/// Nearest point to `x` in the polyhedron `{z : normals[k]·z ≤ offsets[k]}`.
pub fn project_onto_polyhedron(normals: &[Point], offsets: &[f64], x: &Point) -> Result<Point> {
    let n = x.dim();
    for a in normals {
        a.expect_dim(n)?;
    }
    // Constraints in ≥ form: c_k·z ≥ d_k with c = −a, d = −b.
    let slack = |k: usize, z: &Point| offsets[k] - normals[k].dot(z);
    let scale = 1.0 + x.norm() + offsets.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let tol = PROJECTION_TOLERANCE * 1e-3 * scale;

    let mut z = x.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        let violated = (0..normals.len())
            .filter(|k| !active.contains(k))
            .map(|k| (k, slack(k, &z) / normals[k].norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let p = match violated {
            Some((k, s)) if s < -tol => k,
            _ => return Ok(z),
        };
        let c_p = normals[p].scaled(-1.0);
        let mut u_plus = mult.clone();
        u_plus.push(0.0);

        loop {
            iterations += 1;
            if iterations > ITERATION_CAP {
                let residual = (0..normals.len())
                    .map(|k| (-slack(k, &z)).max(0.0))
                    .fold(0.0, f64::max);
                return Err(Error::NotConverged {
                    iterations,
                    best: z,
                    residual,
                });
            }
            let q = active.len();
            // r = (NᵀN)⁻¹ Nᵀ c_p ; step = c_p − N r
            let r = if q == 0 {
                Vec::new()
            } else {
                let mut gram = vec![0.0; q * q];
                let mut rhs = vec![0.0; q];
                for a in 0..q {
                    for b in 0..q {
                        gram[a * q + b] = normals[active[a]].dot(&normals[active[b]]);
                    }
                    rhs[a] = -normals[active[a]].dot(&c_p);
                }
                solve_dense(q, &gram, &rhs).ok_or(Error::Infeasible)?
            };
            let mut step = c_p.clone();
            for (a, ra) in r.iter().enumerate() {
                // N columns are c_i = −a_i
                step.axpy(*ra, &normals[active[a]]);
            }
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (a, ra) in r.iter().enumerate() {
                if *ra > 1e-15 {
                    let t = u_plus[a] / ra;
                    if t < t1 {
                        t1 = t;
                        drop = Some(a);
                    }
                }
            }
            let step_sq = step.norm_sq();
            let s_p = slack(p, &z); // c_p·z − d_p
            let t2 = if step_sq > 1e-24 * c_p.norm_sq() {
                -s_p / step_sq
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::Infeasible);
            }
            for (a, ra) in r.iter().enumerate() {
                u_plus[a] -= t * ra;
            }
            u_plus[q] += t;
            if t2.is_finite() {
                z.axpy(t, &step);
            }
            if t2 <= t1 {
                active.push(p);
                mult = u_plus;
                break;
            }
            let d = drop.expect("partial step has a blocking constraint");
            active.remove(d);
            u_plus.remove(d);
        }
    }
}

/// Vertices of the bounded polyhedron `{z : normals[k]·z ≤ offsets[k]}`,
/// by enumerating all n-subsets of constraints. Suitable for n ≤ 4.
pub fn polytope_vertices(normals: &[Point], offsets: &[f64], dim: usize) -> Result<Vec<Point>> {
    for a in normals {
        a.expect_dim(dim)?;
    }
    if recession_cone_nontrivial(normals, dim) {
        return Err(Error::Unbounded);
    }
    let vertices = enumerate_vertices(normals, offsets, dim);
    if vertices.is_empty() {
        return Err(Error::EmptyBody("polytope with no feasible vertex"));
    }
    Ok(vertices)
}

fn enumerate_vertices(normals: &[Point], offsets: &[f64], dim: usize) -> Vec<Point> {
    let mut vertices: Vec<Point> = Vec::new();
    let scale = 1.0 + offsets.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    for combo in (0..normals.len()).combinations(dim) {
        let mut m = Vec::with_capacity(dim * dim);
        let mut rhs = Vec::with_capacity(dim);
        for &k in &combo {
            m.extend_from_slice(normals[k].coords());
            rhs.push(offsets[k]);
        }
        let Some(sol) = solve_dense(dim, &m, &rhs) else {
            continue;
        };
        let v = Point::from(sol);
        let feasible = normals
            .iter()
            .zip(offsets)
            .all(|(a, b)| a.dot(&v) <= b + 1e-9 * scale * a.norm().max(1.0));
        if feasible && !vertices.iter().any(|w| w.distance(&v) <= 1e-9 * scale) {
            vertices.push(v);
        }
    }
    vertices
}

fn recession_cone_nontrivial(normals: &[Point], dim: usize) -> bool {
    // {d : A d ≤ 0, −1 ≤ d_i ≤ 1} has a vertex other than 0 iff the cone is
    // nontrivial.
    let mut cone_normals: Vec<Point> = normals.to_vec();
    let mut cone_offsets = vec![0.0; normals.len()];
    for axis in 0..dim {
        cone_normals.push(Point::unit(dim, axis));
        cone_offsets.push(1.0);
        cone_normals.push(Point::unit(dim, axis).scaled(-1.0));
        cone_offsets.push(1.0);
    }
    enumerate_vertices(&cone_normals, &cone_offsets, dim)
        .iter()
        .any(|v| v.norm() > 1e-7)
}
