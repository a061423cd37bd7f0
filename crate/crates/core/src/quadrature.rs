//! Shared numerical integration machinery: an adaptive Gauss–Kronrod rule for
//! 1-D integrals, a Gauss–Hermite rule for Gaussian expectations, and the
//! log-gamma function used to normalize proper prior densities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae on [-1, 1] (positive half; QUADPACK values).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Embedded 7-point Gauss weights (for XGK indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel {
        a,
        b,
        value,
        error,
    }
}

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Adaptively integrate `f` on [a, b] by bisecting the panel with the largest
/// Gauss–Kronrod error estimate until
/// `sum |err| <= max(abs_tol, rel_tol * |value|)`.
pub fn adaptive_quadrature<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    adaptive_quadrature_seeded(f, a, b, rel_tol, abs_tol, 8)
}

/// `adaptive_quadrature` with an explicit number of seed panels. The seeding
/// guards against features that slip between the nodes of one wide panel;
/// deeply nested quadratures of known-smooth integrands use fewer seeds.
pub fn adaptive_quadrature_seeded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    seeds: usize,
) -> Result<Quadrature> {
    const MAX_PANELS: usize = 4000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(
            "adaptive_quadrature requires finite endpoints".into(),
        ));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let seeds = seeds.max(1);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_l1 = 0.0;
    let mut total_err = 0.0;
    for i in 0..seeds {
        let lo = a + (b - a) * (i as f64) / (seeds as f64);
        let hi = a + (b - a) * ((i + 1) as f64) / (seeds as f64);
        let p = gk15(&mut f, lo, hi);
        total += p.value;
        total_l1 += p.value.abs();
        total_err += p.error;
        heap.push(p);
    }
    let mut panels = seeds;
    loop {
        // For sign-changing integrands the net value can cancel to nothing;
        // a small fraction of the L1 mass keeps the relative demand sane.
        let tol = abs_tol.max(rel_tol * total.abs().max(0.01 * total_l1));
        if total_err <= tol || heap.is_empty() {
            return Ok(Quadrature {
                value: total,
                error: total_err,
                panels,
            });
        }
        if panels >= MAX_PANELS {
            if total_err <= 1e3 * tol {
                // Roundoff-limited refinement; the achieved error is
                // reported and tiny on the caller's scale.
                return Ok(Quadrature {
                    value: total,
                    error: total_err,
                    panels,
                });
            }
            return Err(Error::Numeric(format!(
                "quadrature did not converge: error {total_err:.3e} vs tolerance {tol:.3e} after {panels} panels"
            )));
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept its estimate.
            total_err -= worst.error;
            continue;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_l1 += left.value.abs() + right.value.abs() - worst.value.abs();
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        panels += 1;
    }
}

/// One hyper-rectangle of the adaptive cubature, with its embedded-rule
/// estimates and preferred split axis.
#[derive(Debug, Clone)]
struct Region {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Degree-7 Genz–Malik rule with its embedded degree-5 error rule on a
/// centered hyper-rectangle. Returns the region with value, error estimate
/// and the axis of largest fourth difference (the split direction).
fn genz_malik<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    center: &[f64],
    half: &[f64],
    point: &mut Vec<f64>,
) -> Region {
    let d = center.len();
    let lambda2 = (9.0f64 / 70.0).sqrt();
    let lambda4 = (9.0f64 / 10.0).sqrt();
    let lambda5 = (9.0f64 / 19.0).sqrt();
    let df = d as f64;
    let w1 = (12824.0 - 9120.0 * df + 400.0 * df * df) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * df) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / (1u64 << d) as f64;
    let we1 = (729.0 - 950.0 * df + 50.0 * df * df) / 729.0;
    let we2 = 245.0 / 486.0;
    let we3 = (265.0 - 100.0 * df) / 1458.0;
    let we4 = 25.0 / 729.0;

    point.clear();
    point.extend_from_slice(center);
    let f_center = f(point);
    let mut sum2 = 0.0;
    let mut sum3 = 0.0;
    let mut max_diff = f64::NEG_INFINITY;
    let mut split_axis = 0;
    // λ2 and λ4 axis points double as the fourth-difference probe.
    let ratio = (lambda2 * lambda2) / (lambda4 * lambda4);
    for i in 0..d {
        let base = center[i];
        point[i] = base + lambda2 * half[i];
        let f2p = f(point);
        point[i] = base - lambda2 * half[i];
        let f2m = f(point);
        point[i] = base + lambda4 * half[i];
        let f4p = f(point);
        point[i] = base - lambda4 * half[i];
        let f4m = f(point);
        point[i] = base;
        sum2 += f2p + f2m;
        sum3 += f4p + f4m;
        let diff = ((f2p + f2m - 2.0 * f_center) - ratio * (f4p + f4m - 2.0 * f_center)).abs();
        if diff > max_diff || (diff == max_diff && half[i] > half[split_axis]) {
            max_diff = diff;
            split_axis = i;
        }
    }
    let mut sum4 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            for signs in 0..4u32 {
                point[i] = center[i]
                    + if signs & 1 == 0 { lambda4 } else { -lambda4 } * half[i];
                point[j] = center[j]
                    + if signs & 2 == 0 { lambda4 } else { -lambda4 } * half[j];
                sum4 += f(point);
            }
            point[i] = center[i];
            point[j] = center[j];
        }
    }
    let mut sum5 = 0.0;
    for mask in 0..(1u64 << d) {
        for i in 0..d {
            point[i] = center[i]
                + if mask >> i & 1 == 0 { lambda5 } else { -lambda5 } * half[i];
        }
        sum5 += f(point);
    }
    let volume: f64 = half.iter().map(|&h| 2.0 * h).product();
    let value7 = volume * (w1 * f_center + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
    let value5 = volume * (we1 * f_center + we2 * sum2 + we3 * sum3 + we4 * sum4);
    Region {
        center: center.to_vec(),
        half: half.to_vec(),
        value: value7,
        error: (value7 - value5).abs(),
        split_axis,
    }
}

/// Adaptive multidimensional cubature over the box [lo, hi]^d (2 <= d) using
/// the Genz–Malik 7(5) rule with error-driven bisection of the worst region
/// along its most-varying axis. The initial grid of `seeds_per_axis`^d
/// regions guards against mass that one wide rule would miss entirely.
pub fn adaptive_cubature<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    seeds_per_axis: usize,
    max_regions: usize,
) -> Result<Quadrature> {
    let d = lo.len();
    if d < 2 || hi.len() != d {
        return Err(Error::InvalidInput(format!(
            "adaptive_cubature expects matching bounds with dimension >= 2, got {d} and {}",
            hi.len()
        )));
    }
    if lo
        .iter()
        .zip(hi)
        .any(|(&a, &b)| !(a.is_finite() && b.is_finite() && a < b))
    {
        return Err(Error::InvalidInput(
            "adaptive_cubature requires finite lo < hi in every dimension".into(),
        ));
    }
    let seeds = seeds_per_axis.max(1);
    let mut heap: BinaryHeap<Region> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_l1 = 0.0;
    let mut total_err = 0.0;
    let mut point = Vec::with_capacity(d);
    let mut center = vec![0.0; d];
    let mut half = vec![0.0; d];
    for i in 0..d {
        half[i] = (hi[i] - lo[i]) / (2.0 * seeds as f64);
    }
    let mut idx = vec![0usize; d];
    loop {
        for i in 0..d {
            center[i] = lo[i] + (2 * idx[i] + 1) as f64 * half[i];
        }
        let r = genz_malik(&mut f, &center, &half, &mut point);
        total += r.value;
        total_l1 += r.value.abs();
        total_err += r.error;
        heap.push(r);
        // Odometer over the seed grid.
        let mut dim = 0;
        loop {
            if dim == d {
                break;
            }
            idx[dim] += 1;
            if idx[dim] < seeds {
                break;
            }
            idx[dim] = 0;
            dim += 1;
        }
        if dim == d {
            break;
        }
    }
    let mut regions = heap.len();
    loop {
        let tol = abs_tol.max(rel_tol * total.abs().max(0.01 * total_l1));
        if total_err <= tol || heap.is_empty() {
            return Ok(Quadrature {
                value: total,
                error: total_err,
                panels: regions,
            });
        }
        if regions >= max_regions {
            if total_err <= 1e3 * tol {
                return Ok(Quadrature {
                    value: total,
                    error: total_err,
                    panels: regions,
                });
            }
            return Err(Error::Numeric(format!(
                "cubature did not converge: error {total_err:.3e} vs tolerance {tol:.3e} after {regions} regions"
            )));
        }
        let worst = heap.pop().unwrap();
        let axis = worst.split_axis;
        let mut half = worst.half.clone();
        half[axis] *= 0.5;
        if half[axis] <= 0.0 || half[axis] < worst.center[axis].abs() * f64::EPSILON {
            total_err -= worst.error;
            continue;
        }
        let mut left_center = worst.center.clone();
        left_center[axis] -= half[axis];
        let mut right_center = worst.center;
        right_center[axis] += half[axis];
        let left = genz_malik(&mut f, &left_center, &half, &mut point);
        let right = genz_malik(&mut f, &right_center, &half, &mut point);
        total += left.value + right.value - worst.value;
        total_l1 += left.value.abs() + right.value.abs() - worst.value.abs();
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        regions += 1;
    }
}

/// A fixed Gauss–Hermite rule: nodes x_i and weights w_i for
/// ∫ e^{-x²} g(x) dx ≈ Σ w_i g(x_i).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Compute the rule by the Golub–Welsch algorithm: eigenvalues of the
    /// Jacobi matrix of the Hermite recurrence are the nodes, weights come
    /// from the first eigenvector components scaled by μ₀ = √π.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut jac = DMatrix::zeros(order, order);
        for i in 1..order {
            let off = ((i as f64) / 2.0).sqrt();
            jac[(i - 1, i)] = off;
            jac[(i, i - 1)] = off;
        }
        let eig = nalgebra::SymmetricEigen::new(jac);
        let mu0 = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Expectation E[g(Z)] for Z ~ N(mean, sd²).
    pub fn gaussian_expectation<F: Fn(f64) -> f64>(&self, mean: f64, sd: f64, g: F) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let norm = 1.0 / std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(mean + scale * x))
            .sum::<f64>()
            * norm
    }
}

/// The shared 32-point rule used by classifier prediction.
pub fn gauss_hermite_32() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(32))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos approximation, ~1e-13 relative).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
