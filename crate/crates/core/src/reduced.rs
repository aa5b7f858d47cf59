//! Reduced energy and global minimization of the corrected incremental functional.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::problem::{in_box, Correction, Interval, RisProblem};

/// Search backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    /// Exhaustive grid with local refinement; certified for `n_z ≤ 2`.
    #[default]
    Grid,
    MultistartDescent,
    /// Model-supplied exact step, falling back to the grid.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MinimizerConfig {
    pub method: Method,
    /// Grid points per dimension for one-dimensional searches.
    pub grid_resolution: usize,
    /// Grid points per dimension for two-dimensional searches.
    pub grid_resolution_2d: usize,
    pub multistart_count: usize,
    pub descent_tol: f64,
    /// Candidates within this (relative) band of the best value count as ties.
    pub near_optimal_band: f64,
    /// Number of grid local minima passed to local refinement.
    pub refine_candidates: usize,
    pub seed: u64,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            method: Method::Grid,
            grid_resolution: 2001,
            grid_resolution_2d: 201,
            multistart_count: 16,
            descent_tol: 1e-12,
            near_optimal_band: 1e-10,
            refine_candidates: 8,
            seed: 0,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 || self.grid_resolution_2d < 2 {
            return Err(Error::InvalidConfig("grid_resolution must be >= 2".into()));
        }
        if !(self.descent_tol > 0.0 && self.near_optimal_band > 0.0) {
            return Err(Error::InvalidConfig("minimizer tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinResult {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub value: f64,
    pub method: Method,
    pub certified_global: bool,
    pub tolerance: f64,
    /// All distinct candidates found, sorted by value.
    pub candidates: Vec<(Vec<f64>, f64)>,
}

pub(crate) struct Outcome {
    pub candidates: Vec<(Vec<f64>, f64)>,
    pub certified: bool,
}

fn grid_coord(iv: &Interval, i: usize, m: usize) -> f64 {
    if m == 1 {
        iv.lo
    } else if i + 1 == m {
        iv.hi
    } else {
        iv.lo + (iv.hi - iv.lo) * (i as f64) / ((m - 1) as f64)
    }
}

fn points_for(iv: &Interval, m: usize) -> usize {
    if iv.width() > 0.0 {
        m
    } else {
        1
    }
}

fn golden(f: &mut dyn FnMut(&[f64]) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const G: f64 = 0.618_033_988_749_894_9;
    let mut best = (a, f(&[a]));
    let fb = f(&[b]);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - G * (b - a);
    let mut d = a + G * (b - a);
    let mut fc = f(&[c]);
    let mut fd = f(&[d]);
    for _ in 0..200 {
        if (b - a) <= 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - G * (b - a);
            fc = f(&[c]);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + G * (b - a);
            fd = f(&[d]);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Three-point parabolic steps around a golden-section result; golden
/// section alone resolves smooth minimizers only to about `√ε`.
fn parabolic_polish(f: &mut dyn FnMut(&[f64]) -> f64, mut x: f64, mut fx: f64, a: f64, b: f64) -> (f64, f64) {
    let mut h = 1e-5 * (1.0 + x.abs());
    for _ in 0..3 {
        let (xm, xp) = (x - h, x + h);
        if xm < a || xp > b {
            break;
        }
        let (fm, fp) = (f(&[xm]), f(&[xp]));
        let curv = fp - 2.0 * fx + fm;
        if !(curv > 0.0) {
            break;
        }
        let step = h * (fm - fp) / (2.0 * curv);
        if step.abs() > h {
            break;
        }
        let y = x + step;
        let fy = f(&[y]);
        // near a smooth minimum the values agree to rounding; trust the fit
        if fy <= fx + 4.0 * f64::EPSILON * (1.0 + fx.abs()) {
            x = y;
            fx = fx.min(fy);
        } else {
            break;
        }
        h *= 0.1;
    }
    (x, fx)
}

fn project(bx: &[Interval], x: &mut [f64]) {
    for (xi, iv) in x.iter_mut().zip(bx) {
        *xi = iv.clamp(*xi);
    }
}

/// Pattern search over the coordinate and diagonal directions.
fn compass(f: &mut dyn FnMut(&[f64]) -> f64, bx: &[Interval], x: &mut Vec<f64>, fx: &mut f64, step0: f64) {
    let n = x.len();
    let scale = bx.iter().map(|iv| iv.width()).fold(0.0, f64::max).max(1e-300);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    if n == 2 {
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            dirs.push(vec![a, b]);
        }
    }
    let mut step = step0;
    let mut y = vec![0.0; n];
    let mut iters = 0;
    while step > 1e-13 * (1.0 + scale) && iters < 20_000 {
        iters += 1;
        let mut improved = false;
        for d in &dirs {
            for k in 0..n {
                y[k] = x[k] + step * d[k];
            }
            project(bx, &mut y);
            let fy = f(&y);
            if fy < *fx {
                x.copy_from_slice(&y);
                *fx = fy;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
}

fn local_descent(
    f: &mut dyn FnMut(&[f64]) -> f64,
    bx: &[Interval],
    x0: &[f64],
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(bx, &mut x);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let scale = bx.iter().map(|iv| iv.width()).fold(0.0, f64::max);
    let mut g = vec![0.0; n];
    let mut y = x.clone();
    let mut alpha = 1.0;
    for _ in 0..500 {
        for i in 0..n {
            let h = 1e-7 * (1.0 + x[i].abs());
            let iv = bx[i];
            let xp = (x[i] + h).min(iv.hi);
            let xm = (x[i] - h).max(iv.lo);
            if xp <= xm {
                g[i] = 0.0;
                continue;
            }
            y.copy_from_slice(&x);
            y[i] = xp;
            let fp = f(&y);
            y[i] = xm;
            let fm = f(&y);
            g[i] = if fp.is_finite() && fm.is_finite() { (fp - fm) / (xp - xm) } else { 0.0 };
        }
        let gnorm = libm::sqrt(g.iter().map(|v| v * v).sum());
        if gnorm == 0.0 {
            break;
        }
        alpha = f64::min(alpha * 2.0, scale.max(1.0) / gnorm);
        let mut accepted = false;
        while alpha > 1e-18 {
            for i in 0..n {
                y[i] = x[i] - alpha * g[i];
            }
            project(bx, &mut y);
            let dec: f64 = (0..n).map(|i| g[i] * (x[i] - y[i])).sum();
            let fy = f(&y);
            if fy <= fx - 1e-4 * dec && fy < fx {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        let moved = libm::sqrt((0..n).map(|i| (x[i] - y[i]) * (x[i] - y[i])).sum());
        x.copy_from_slice(&y);
        fx = f(&x);
        if moved < tol * (1.0 + scale) {
            break;
        }
    }
    compass(f, bx, &mut x, &mut fx, 0.01 * scale.max(1e-12));
    (x, fx)
}

fn push_candidate(cands: &mut Vec<(Vec<f64>, f64)>, z: Vec<f64>, v: f64) {
    if v.is_finite() {
        cands.push((z, v));
    }
}

fn finish(mut cands: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    cands.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal)));
    let mut out: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cands.len());
    for c in cands {
        let dup = out.iter().any(|o| dist2(&o.0, &c.0) < 1e-24);
        if !dup {
            out.push(c);
        }
    }
    out
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn grid_1d(f: &mut dyn FnMut(&[f64]) -> f64, iv: &Interval, cfg: &MinimizerConfig, cands: &mut Vec<(Vec<f64>, f64)>) {
    let m = points_for(iv, cfg.grid_resolution);
    let xs: Vec<f64> = (0..m).map(|i| grid_coord(iv, i, m)).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(&[x])).collect();
    let mut minima: Vec<usize> = (0..m)
        .filter(|&i| {
            vals[i].is_finite()
                && (i == 0 || vals[i] < vals[i - 1])
                && (i + 1 == m || vals[i] <= vals[i + 1])
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    minima.truncate(cfg.refine_candidates.max(1));
    for i in minima {
        // raw nodes would bias the tie-break toward the anchor; keep the refined point
        if m > 1 {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(m - 1)];
            let (x, fx) = golden(f, a, b);
            let (x, fx) = parabolic_polish(f, x, fx, a, b);
            if fx <= vals[i] {
                push_candidate(cands, vec![x], fx);
                continue;
            }
        }
        push_candidate(cands, vec![xs[i]], vals[i]);
    }
}

fn grid_2d(f: &mut dyn FnMut(&[f64]) -> f64, bx: &[Interval], cfg: &MinimizerConfig, cands: &mut Vec<(Vec<f64>, f64)>) {
    let m0 = points_for(&bx[0], cfg.grid_resolution_2d);
    let m1 = points_for(&bx[1], cfg.grid_resolution_2d);
    let xs: Vec<f64> = (0..m0).map(|i| grid_coord(&bx[0], i, m0)).collect();
    let ys: Vec<f64> = (0..m1).map(|j| grid_coord(&bx[1], j, m1)).collect();
    let mut vals = vec![f64::INFINITY; m0 * m1];
    let mut p = [0.0; 2];
    for i in 0..m0 {
        for j in 0..m1 {
            p[0] = xs[i];
            p[1] = ys[j];
            vals[i * m1 + j] = f(&p);
        }
    }
    let mut minima: Vec<(usize, usize)> = Vec::new();
    for i in 0..m0 {
        for j in 0..m1 {
            let v = vals[i * m1 + j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= m0 as i64 || jj >= m1 as i64 {
                        continue;
                    }
                    let w = vals[ii as usize * m1 + jj as usize];
                    // strict against earlier neighbours so plateaus yield one point
                    let earlier = di < 0 || (di == 0 && dj < 0);
                    if w < v || (earlier && w == v) {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                minima.push((i, j));
            }
        }
    }
    minima.sort_by(|a, b| vals[a.0 * m1 + a.1].total_cmp(&vals[b.0 * m1 + b.1]));
    minima.truncate(cfg.refine_candidates.max(1));
    let h0 = if m0 > 1 { bx[0].width() / (m0 - 1) as f64 } else { 0.0 };
    let h1 = if m1 > 1 { bx[1].width() / (m1 - 1) as f64 } else { 0.0 };
    let step = h0.max(h1);
    for (i, j) in minima {
        let mut x = vec![xs[i], ys[j]];
        let mut fx = vals[i * m1 + j];
        if step > 0.0 {
            compass(f, bx, &mut x, &mut fx, step);
        }
        push_candidate(cands, x, fx);
    }
}

fn descent_search(
    f: &mut dyn FnMut(&[f64]) -> f64,
    bx: &[Interval],
    anchor: Option<&[f64]>,
    cfg: &MinimizerConfig,
    cands: &mut Vec<(Vec<f64>, f64)>,
) {
    let n = bx.len();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(a) = anchor {
        starts.push(a.to_vec());
    }
    starts.push(bx.iter().map(|iv| 0.5 * (iv.lo + iv.hi)).collect());
    starts.push(bx.iter().map(|iv| iv.lo).collect());
    starts.push(bx.iter().map(|iv| iv.hi).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.multistart_count {
        let s: Vec<f64> = (0..n)
            .map(|i| bx[i].lo + bx[i].width() * rng.random::<f64>())
            .collect();
        starts.push(s);
    }
    for s in starts {
        let (x, fx) = local_descent(f, bx, &s, cfg.descent_tol);
        push_candidate(cands, x, fx);
    }
}

/// Minimizes `f` over `bx`, always including `anchor` among the candidates.
pub(crate) fn search(
    f: &mut dyn FnMut(&[f64]) -> f64,
    bx: &[Interval],
    anchor: Option<&[f64]>,
    cfg: &MinimizerConfig,
) -> Outcome {
    let mut cands = Vec::new();
    if let Some(a) = anchor {
        if in_box(bx, a) {
            let v = f(a);
            push_candidate(&mut cands, a.to_vec(), v);
        }
    }
    let grid = cfg.method != Method::MultistartDescent && bx.len() <= 2;
    if grid {
        if bx.len() == 1 {
            grid_1d(f, &bx[0], cfg, &mut cands);
        } else {
            grid_2d(f, bx, cfg, &mut cands);
        }
    } else {
        descent_search(f, bx, anchor, cfg, &mut cands);
    }
    Outcome { candidates: finish(cands), certified: grid }
}

/// Picks the candidate closest to `anchor` among those within the band of the best.
pub(crate) fn select(cands: &[(Vec<f64>, f64)], anchor: &[f64], band: f64) -> Option<usize> {
    let best = cands.first()?.1;
    let width = band * (1.0 + best.abs());
    let mut pick = 0;
    let mut pick_d = f64::INFINITY;
    for (k, (z, v)) in cands.iter().enumerate() {
        if *v > best + width {
            break;
        }
        let d = dist2(z, anchor);
        if d < pick_d {
            pick = k;
            pick_d = d;
        }
    }
    Some(pick)
}

/// Generic `u`-elimination by multistart descent over [`RisProblem::u_box`].
pub fn descend_u<P: RisProblem + ?Sized>(p: &P, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
    if p.n_u() == 0 {
        return p.energy(t, &[], z);
    }
    let bx = p.u_box();
    let cfg = MinimizerConfig { method: Method::MultistartDescent, multistart_count: 4, ..Default::default() };
    let mut f = |v: &[f64]| p.energy(t, v, z).to_f64();
    let zero = vec![0.0; p.n_u()];
    let out = search(&mut f, &bx, Some(&zero), &cfg);
    match out.candidates.first() {
        Some((best, v)) => {
            u.copy_from_slice(best);
            ExtReal::new(*v)
        }
        None => ExtReal::Infinity,
    }
}

/// `I(t, z)` with its minimizing `u`.
pub fn reduce_energy<P: RisProblem + ?Sized>(p: &P, t: f64, z: &[f64]) -> Result<MinResult> {
    check_dim(p.n_z(), z.len())?;
    let mut u = vec![0.0; p.n_u()];
    let v = p.reduce(t, z, &mut u);
    let value = v.to_f64();
    if v.is_infinite() {
        u.clear();
    }
    Ok(MinResult {
        z: z.to_vec(),
        u,
        value,
        method: Method::ClosedForm,
        certified_global: v.is_finite(),
        tolerance: 0.0,
        candidates: Vec::new(),
    })
}

/// Value of `I(t, z') + d(z, z') + δ(z, z')`, with `+∞` as `f64::INFINITY`.
pub fn corrected_objective<P: RisProblem + ?Sized>(
    p: &P,
    t: f64,
    z_prev: &[f64],
    corr: &Correction,
    z: &[f64],
    u: &mut [f64],
) -> f64 {
    let d = p.dissipation(z_prev, z);
    if d.is_infinite() {
        return f64::INFINITY;
    }
    (p.reduce(t, z, u) + d + corr.eval(p, z_prev, z)).to_f64()
}

/// Minimizes `z ↦ I(t, z) + d(z_prev, z) + δ(z_prev, z)` over the reachable box.
pub fn global_min_corrected<P: RisProblem + ?Sized>(
    p: &P,
    t: f64,
    z_prev: &[f64],
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<MinResult> {
    check_dim(p.n_z(), z_prev.len())?;
    let bx = p.reachable_box(z_prev);
    let mut u = vec![0.0; p.n_u()];
    let mut f = |z: &[f64]| corrected_objective(p, t, z_prev, corr, z, &mut u);

    if cfg.method == Method::ClosedForm {
        if let Some(z) = p.closed_form_step(t, z_prev, corr) {
            let value = f(&z);
            if value.is_finite() {
                let mut u = vec![0.0; p.n_u()];
                p.reduce(t, &z, &mut u);
                return Ok(MinResult {
                    candidates: vec![(z.clone(), value)],
                    z,
                    u,
                    value,
                    method: Method::ClosedForm,
                    certified_global: false,
                    tolerance: cfg.near_optimal_band * (1.0 + value.abs()),
                });
            }
        }
    }

    let out = search(&mut f, &bx, Some(z_prev), cfg);
    let k = select(&out.candidates, z_prev, cfg.near_optimal_band).ok_or(Error::InfeasibleStep { t })?;
    let (z, value) = out.candidates[k].clone();
    let mut u = vec![0.0; p.n_u()];
    p.reduce(t, &z, &mut u);
    Ok(MinResult {
        z,
        u,
        value,
        method: if out.certified { Method::Grid } else { Method::MultistartDescent },
        certified_global: out.certified,
        tolerance: cfg.near_optimal_band * (1.0 + value.abs()),
        candidates: out.candidates,
    })
}

/// Exhaustive grid minimization, the independent oracle.
///
/// `resolution[i]` points are placed on dimension `i` (endpoints included).
pub fn oracle_grid_min(
    f: &mut dyn FnMut(&[f64]) -> f64,
    bx: &[Interval],
    resolution: &[usize],
) -> Result<MinResult> {
    check_dim(bx.len(), resolution.len())?;
    if resolution.iter().any(|&m| m < 2) {
        return Err(Error::InvalidConfig("oracle resolution must be >= 2".into()));
    }
    if bx.iter().any(|iv| !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi)) {
        return Err(Error::InvalidConfig("oracle box must be bounded".into()));
    }
    let total: f64 = resolution.iter().map(|&m| m as f64).product();
    if total > 1e7 {
        return Err(Error::BudgetExceeded { points: total, limit: 1e7 });
    }
    let n = bx.len();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        for k in 0..n {
            x[k] = grid_coord(&bx[k], idx[k], resolution[k]);
        }
        let v = f(&x);
        if !v.is_nan() && best.as_ref().map_or(true, |b| v < b.1) {
            best = Some((x.clone(), v));
        }
        let mut k = n;
        loop {
            if k == 0 {
                let (z, value) = best.unwrap_or((Vec::new(), f64::INFINITY));
                return Ok(MinResult {
                    candidates: vec![(z.clone(), value)],
                    z,
                    u: Vec::new(),
                    value,
                    method: Method::Grid,
                    certified_global: true,
                    tolerance: 0.0,
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < resolution[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}
