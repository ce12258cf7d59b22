#![allow(dead_code)]

use elygov_core::governor::{lp_max, AdmissibleSet, LtiModel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Brute-force LP: best objective over all vertices of `{z : G z <= g}`,
/// `None` when there is no feasible vertex.
pub fn vertex_max(c: &DVector<f64>, g_mat: &DMatrix<f64>, g: &DVector<f64>) -> Option<f64> {
    let n = c.len();
    let rows = g_mat.nrows();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| g_mat[(idx[i], j)]);
        let b = DVector::from_fn(n, |i, _| g[idx[i]]);
        if let Some(z) = a.lu().solve(&b) {
            let slack = g_mat * &z - g;
            if z.iter().all(|v| v.is_finite()) && slack.max() <= 1e-9 {
                let val = c.dot(&z);
                best = Some(best.map_or(val, |b| b.max(val)));
            }
        }
        // next combination in lexicographic order
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < rows - n + k {
                break;
            }
        }
        idx[k] += 1;
        for j in k + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Random bounded 4-variable LP: 8 general rows plus a box.
pub fn random_lp(rng: &mut impl Rng) -> (DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let n = 4;
    let general = 8;
    let rows = general + 2 * n;
    let mut g_mat = DMatrix::zeros(rows, n);
    let mut g = DVector::zeros(rows);
    for i in 0..general {
        for j in 0..n {
            g_mat[(i, j)] = rng.random_range(-1.0..1.0);
        }
        g[i] = rng.random_range(-0.5..2.0);
    }
    for j in 0..n {
        let bound = rng.random_range(1.0..5.0);
        g_mat[(general + 2 * j, j)] = 1.0;
        g[general + 2 * j] = bound;
        g_mat[(general + 2 * j + 1, j)] = -1.0;
        g[general + 2 * j + 1] = bound;
    }
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (c, g_mat, g)
}

/// Bounding box of the set intersected with `v_lo <= v <= v_hi`. The set
/// itself is unbounded along its equilibrium line when the steady-state gain
/// vanishes, so the command range has to be capped.
pub fn bounding_box(set: &AdmissibleSet, v_lo: f64, v_hi: f64) -> Vec<(f64, f64)> {
    let n = set.n();
    let rows = set.rows();
    let g_mat = DMatrix::from_fn(rows + 2, n + 1, |i, j| match (i, j) {
        (i, j) if i < rows && j < n => set.hx[(i, j)],
        (i, _) if i < rows => set.hv[i],
        (i, j) if j == n => if i == rows { 1.0 } else { -1.0 },
        _ => 0.0,
    });
    let g = DVector::from_fn(rows + 2, |i, _| match i {
        i if i < rows => set.h[i],
        i if i == rows => v_hi,
        _ => -v_lo,
    });
    (0..=n)
        .map(|k| {
            let mut c = DVector::zeros(n + 1);
            c[k] = 1.0;
            let hi = lp_max(&c, &g_mat, &g).expect("bounded slice").value;
            c[k] = -1.0;
            let lo = -lp_max(&c, &g_mat, &g).expect("bounded slice").value;
            (lo, hi)
        })
        .collect()
}

/// Uniform samples of the set with `v` in `[v_lo, v_hi]`, by rejection from
/// the bounding box. Also returns the number of draws.
pub fn sample_set(set: &AdmissibleSet, v_lo: f64, v_hi: f64, count: usize, rng: &mut impl Rng) -> (Vec<(DVector<f64>, f64)>, usize) {
    let bbox = bounding_box(set, v_lo, v_hi);
    let n = set.n();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        let p: Vec<f64> = bbox.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
        let x = DVector::from_column_slice(&p[..n]);
        if set.contains(&x, p[n], 0.0) {
            out.push((x, p[n]));
        }
    }
    (out, tries)
}

/// Simulates `steps` steps of the discrete model with constant `v` and
/// reports the worst output excursion beyond `[lower, upper]` (<= 0 if none).
pub fn worst_excursion(model: &LtiModel, x0: &DVector<f64>, v: f64, steps: usize, upper: f64, lower: f64) -> f64 {
    let mut x = x0.clone();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..=steps {
        let y = &model.c * &x + &model.d * v;
        for &yi in y.iter() {
            worst = worst.max(yi - upper).max(lower - yi);
        }
        x = &model.a * &x + &model.b * v;
    }
    worst
}
