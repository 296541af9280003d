//! Multi-well potentials, their structural constants, and the surface-tension
//! matrix induced by the well positions, including l2-embeddability and
//! regime classification.

use crate::error::{Error, Result};

/// The zero set of the potential: m >= 2 distinct points in R^d.
///
/// The shipped potential is the prototypical product form
/// `W(z) = prod_j |z - a_j|^2`, with growth exponent p = 2m.
#[derive(Debug, Clone, PartialEq)]
pub struct Wells {
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    /// growth exponent of the product potential
    pub p: f64,
}

impl Wells {
    pub fn new(d: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParam("need m >= 2 wells".into()));
        }
        for a in &points {
            if a.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "well has dimension {}, expected {d}",
                    a.len()
                )));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let gap: f64 = dist(&points[i], &points[j]);
                if gap == 0.0 {
                    return Err(Error::Degenerate(format!("wells {i} and {j} coincide")));
                }
            }
        }
        let p = 2.0 * points.len() as f64;
        Ok(Wells { d, points, p })
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.m() {
            for j in (i + 1)..self.m() {
                g = g.min(dist(&self.points[i], &self.points[j]));
            }
        }
        g
    }

    pub fn dist_to_wells(&self, z: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|a| dist(a, z))
            .fold(f64::INFINITY, f64::min)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// W(z) = prod_j |z - a_j|^2.
pub fn eval_w(wells: &Wells, z: &[f64]) -> Result<f64> {
    if z.len() != wells.d {
        return Err(Error::DimensionMismatch("eval_w argument".into()));
    }
    let mut w = 1.0;
    for a in &wells.points {
        let d2: f64 = z.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
        w *= d2;
    }
    Ok(w)
}

/// Analytic gradient of the product form:
/// grad W = sum_j 2 (z - a_j) prod_{k != j} |z - a_k|^2.
pub fn grad_w(wells: &Wells, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != wells.d {
        return Err(Error::DimensionMismatch("grad_w argument".into()));
    }
    let m = wells.m();
    let d2: Vec<f64> = wells
        .points
        .iter()
        .map(|a| z.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum())
        .collect();
    let mut g = vec![0.0; wells.d];
    for j in 0..m {
        let mut prod = 1.0;
        for (k, v) in d2.iter().enumerate() {
            if k != j {
                prod *= v;
            }
        }
        for c in 0..wells.d {
            g[c] += 2.0 * (z[c] - wells.points[j][c]) * prod;
        }
    }
    Ok(g)
}

/// Hessian of the product form by central differences of the analytic
/// gradient; accurate enough for the structural-constant estimation.
fn hess_w(wells: &Wells, z: &[f64]) -> Vec<f64> {
    let d = wells.d;
    let h = 1e-5 * (1.0 + z.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut hess = vec![0.0; d * d];
    let mut zp = z.to_vec();
    for c in 0..d {
        zp[c] = z[c] + h;
        let gp = grad_w(wells, &zp).unwrap();
        zp[c] = z[c] - h;
        let gm = grad_w(wells, &zp).unwrap();
        zp[c] = z[c];
        for r in 0..d {
            hess[r * d + c] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    // symmetrize
    for r in 0..d {
        for c in (r + 1)..d {
            let v = 0.5 * (hess[r * d + c] + hess[c * d + r]);
            hess[r * d + c] = v;
            hess[c * d + r] = v;
        }
    }
    hess
}

/// Smallest eigenvalue of a small symmetric matrix (Jacobi iteration).
fn min_eigenvalue_sym(mat: &[f64], d: usize) -> f64 {
    jacobi_eigenvalues(mat, d)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of a small symmetric matrix via cyclic Jacobi rotations.
pub(crate) fn jacobi_eigenvalues(mat: &[f64], d: usize) -> Vec<f64> {
    let (vals, _) = jacobi_eigen(mat, d);
    vals
}

/// Eigen-decomposition (values, row-major eigenvector matrix columns) of a
/// small symmetric matrix.
pub(crate) fn jacobi_eigen(mat: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = mat.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for r in 0..d {
            for c in (r + 1)..d {
                off += a[r * d + c] * a[r * d + c];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a, d)) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i * d + i]).collect(), v)
}

fn frobenius(a: &[f64], d: usize) -> f64 {
    a.iter().take(d * d).map(|x| x * x).sum::<f64>().sqrt()
}

/// Structural constants of the potential near its wells and along rays.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConstants {
    /// convexity modulus: D^2 W >= kappa_w Id within rho_w of the wells
    pub kappa_w: f64,
    /// radius of the convexity neighborhoods, in (0, 1]
    pub rho_w: f64,
    /// radial growth constants: c1 (t^{p-1} - c2) <= dW/dt(t nu) <= c3 (t^{p-1} + 1)
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Estimate kappa_w, rho_w by Hessian sampling and fit the radial growth
/// constants along rays.
///
/// Sampling uses 64 directions x 64 radii around each well; rho_w is found
/// by bisection as the largest radius <= min_gap/4 on which the sampled
/// minimal Hessian eigenvalue stays above kappa_w := half the minimal
/// well Hessian eigenvalue.
pub fn estimate_constants(wells: &Wells) -> Result<PotentialConstants> {
    let d = wells.d;
    // kappa from the well Hessians
    let mut kappa_well = f64::INFINITY;
    for a in &wells.points {
        let hess = hess_w(wells, a);
        let lam = min_eigenvalue_sym(&hess, d);
        if lam <= 1e-10 {
            return Err(Error::Degenerate(format!(
                "degenerate Hessian at a well (min eigenvalue {lam})"
            )));
        }
        kappa_well = kappa_well.min(lam);
    }
    let kappa_w = 0.5 * kappa_well;

    let dirs = sample_directions(d, 64);
    let min_eig_on_sphere = |r: f64| -> f64 {
        let mut lam = f64::INFINITY;
        for a in &wells.points {
            for dir in &dirs {
                let z: Vec<f64> = a.iter().zip(dir).map(|(x, u)| x + r * u).collect();
                lam = lam.min(min_eigenvalue_sym(&hess_w(wells, &z), d));
            }
        }
        lam
    };
    let r_cap = (wells.min_gap() / 4.0).min(1.0);
    let mut lo = 0.0;
    let mut hi = r_cap;
    if min_eig_on_sphere(r_cap) >= kappa_w {
        lo = r_cap;
    } else {
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mid <= 0.0 {
                break;
            }
            // check a few radii in (0, mid]
            let ok = (1..=8).all(|k| min_eig_on_sphere(mid * k as f64 / 8.0) >= kappa_w);
            if ok {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 * r_cap {
                break;
            }
        }
    }
    let rho_w = lo.min(1.0);
    if rho_w <= 0.0 {
        return Err(Error::Degenerate("no convexity neighborhood found".into()));
    }

    // radial growth constants along rays
    let p = wells.p;
    let t_max = 4.0_f64.max(4.0 * wells.points.iter().map(|a| a.iter().map(|x| x.abs()).fold(0.0, f64::max)).fold(0.0, f64::max));
    let ts: Vec<f64> = (1..=96).map(|k| t_max * k as f64 / 96.0).collect();
    let mut c3: f64 = 0.0;
    let mut slope_at_tmax = f64::INFINITY;
    for dir in &dirs {
        for &t in &ts {
            let z: Vec<f64> = dir.iter().map(|u| t * u).collect();
            let g = grad_w(wells, &z)?;
            let dwdt: f64 = g.iter().zip(dir).map(|(a, b)| a * b).sum();
            c3 = c3.max(dwdt / (t.powf(p - 1.0) + 1.0));
        }
        let z: Vec<f64> = dir.iter().map(|u| t_max * u).collect();
        let g = grad_w(wells, &z)?;
        let dwdt: f64 = g.iter().zip(dir).map(|(a, b)| a * b).sum();
        slope_at_tmax = slope_at_tmax.min(dwdt / t_max.powf(p - 1.0));
    }
    // lower envelope: c1 fixed by the large-t slope, c2 absorbs the mid range
    let c1 = 0.5 * slope_at_tmax.max(1e-12);
    let mut c2: f64 = 0.0;
    for dir in &dirs {
        for &t in &ts {
            let z: Vec<f64> = dir.iter().map(|u| t * u).collect();
            let g = grad_w(wells, &z)?;
            let dwdt: f64 = g.iter().zip(dir).map(|(a, b)| a * b).sum();
            c2 = c2.max(t.powf(p - 1.0) - dwdt / c1);
        }
    }
    Ok(PotentialConstants { kappa_w, rho_w, c1, c2, c3 })
}

fn sample_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // deterministic low-discrepancy directions on S^{d-1}
            let mut dirs = Vec::with_capacity(count);
            let mut state = 0x9e3779b97f4a7c15u64;
            for _ in 0..count {
                let mut v: Vec<f64> = (0..d)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let u = ((state >> 11) as f64) / ((1u64 << 53) as f64);
                        2.0 * u - 1.0
                    })
                    .collect();
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    for x in &mut v {
                        *x /= norm;
                    }
                    dirs.push(v);
                }
            }
            dirs
        }
    }
}

/// Classification of the surface-tension matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    NearlyHomogeneous,
    Sti3,
    Siti3,
    General,
}

/// Symmetric m x m surface tensions with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    pub m: usize,
    /// row-major m x m entries
    pub entries: Vec<f64>,
    /// all regime labels that apply (several can hold at once)
    pub regimes: Vec<Regime>,
    /// near-homogeneity ratio q = (m-2) sigma_max / ((m-1) sigma_min)
    pub q: f64,
    /// additive decomposition for m = 3 under the strict triangle inequality
    pub alpha: Option<[f64; 3]>,
    /// the violating pair (i0, j0) (1-based) under the strict inverse triangle inequality
    pub siti_pair: Option<(usize, usize)>,
}

impl SigmaMatrix {
    pub fn from_entries(m: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch("sigma matrix size".into()));
        }
        for i in 0..m {
            if entries[i * m + i] != 0.0 {
                return Err(Error::InvalidParam("sigma diagonal must vanish".into()));
            }
            for j in 0..m {
                if i != j {
                    if entries[i * m + j] <= 0.0 {
                        return Err(Error::InvalidParam("off-diagonal sigma must be positive".into()));
                    }
                    if (entries[i * m + j] - entries[j * m + i]).abs()
                        > 1e-12 * entries[i * m + j].abs()
                    {
                        return Err(Error::InvalidParam("sigma must be symmetric".into()));
                    }
                }
            }
        }
        let mut sm = SigmaMatrix {
            m,
            entries,
            regimes: Vec::new(),
            q: 0.0,
            alpha: None,
            siti_pair: None,
        };
        classify_regime(&mut sm);
        Ok(sm)
    }

    /// Build a 3x3 matrix from the upper triangle (s12, s13, s23).
    pub fn from_triple(s12: f64, s13: f64, s23: f64) -> Result<Self> {
        Self::from_entries(
            3,
            vec![0.0, s12, s13, s12, 0.0, s23, s13, s23, 0.0],
        )
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn max_off(&self) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                if i != j {
                    v = v.max(self.get(i, j));
                }
            }
        }
        v
    }

    pub fn min_off(&self) -> f64 {
        let mut v = f64::INFINITY;
        for i in 0..self.m {
            for j in 0..self.m {
                if i != j {
                    v = v.min(self.get(i, j));
                }
            }
        }
        v
    }

    pub fn has_regime(&self, r: &Regime) -> bool {
        self.regimes.contains(r)
    }
}

/// sigma_ij = |a_i - a_j|^2, as the plain sum of squares so the entries match
/// the squared differences the energy quadrature forms bit for bit.
pub fn sigma_from_wells(wells: &Wells) -> SigmaMatrix {
    let m = wells.m();
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let d2: f64 = wells.points[i]
                    .iter()
                    .zip(&wells.points[j])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                entries[i * m + j] = d2;
            }
        }
    }
    SigmaMatrix::from_entries(m, entries).expect("wells always induce an admissible sigma")
}

/// Fill in regime labels, q, the additive alpha decomposition, and the
/// inverse-triangle violating pair.
pub fn classify_regime(sigma: &mut SigmaMatrix) {
    let m = sigma.m;
    sigma.regimes.clear();
    sigma.q = if m == 2 {
        0.0
    } else {
        (m as f64 - 2.0) * sigma.max_off() / ((m as f64 - 1.0) * sigma.min_off())
    };
    if sigma.q < 1.0 {
        sigma.regimes.push(Regime::NearlyHomogeneous);
    }
    if m == 3 {
        let s12 = sigma.get(0, 1);
        let s13 = sigma.get(0, 2);
        let s23 = sigma.get(1, 2);
        let strict_triangle = s12 < s13 + s23 && s13 < s12 + s23 && s23 < s12 + s13;
        if strict_triangle {
            sigma.regimes.push(Regime::Sti3);
            sigma.alpha = Some([
                0.5 * (s12 + s13 - s23),
                0.5 * (s12 + s23 - s13),
                0.5 * (s13 + s23 - s12),
            ]);
        } else {
            // look for a strict violation
            let trips = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
            for &(i, j, k) in &trips {
                if sigma.get(i, j) > sigma.get(i, k) + sigma.get(k, j) {
                    sigma.regimes.push(Regime::Siti3);
                    sigma.siti_pair = Some((i + 1, j + 1));
                    break;
                }
            }
        }
    }
    if sigma.regimes.is_empty() {
        sigma.regimes.push(Regime::General);
    }
}

/// Outcome of the l2-embedding test.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    Embeddable(Wells),
    NotEmbeddable,
}

/// Classical-scaling test: double-center the squared-distance matrix and
/// read well points off the eigen-decomposition when it is PSD.
pub fn embed_sigma(sigma: &SigmaMatrix) -> Embedding {
    let m = sigma.m;
    // G = -1/2 C D2 C with C = I - J/m
    let mut g = vec![0.0; m * m];
    let row_mean: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| sigma.get(i, j)).sum::<f64>() / m as f64)
        .collect();
    let grand: f64 = row_mean.iter().sum::<f64>() / m as f64;
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = -0.5 * (sigma.get(i, j) - row_mean[i] - row_mean[j] + grand);
        }
    }
    let (vals, vecs) = jacobi_eigen(&g, m);
    let trace: f64 = vals.iter().sum::<f64>();
    let tol = 1e-9 * trace.abs().max(1e-12);
    if vals.iter().any(|&l| l < -tol) {
        return Embedding::NotEmbeddable;
    }
    // keep the significant positive directions
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| vals[k] > tol.max(1e-12))
        .collect();
    let d = kept.len().max(1);
    let mut points = vec![vec![0.0; d]; m];
    for (c, &k) in kept.iter().enumerate() {
        let scale = vals[k].max(0.0).sqrt();
        for (i, point) in points.iter_mut().enumerate() {
            point[c] = vecs[i * m + k] * scale;
        }
    }
    match Wells::new(d, points) {
        Ok(w) => Embedding::Embeddable(w),
        Err(_) => Embedding::NotEmbeddable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn wells_pm1() -> Wells {
        Wells::new(1, vec![vec![-1.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn w_values_two_wells() {
        let w = wells_pm1();
        assert_eq!(eval_w(&w, &[-1.0]).unwrap(), 0.0);
        assert_eq!(eval_w(&w, &[0.0]).unwrap(), 1.0);
        assert_eq!(eval_w(&w, &[2.0]).unwrap(), 9.0);
    }

    #[test]
    fn w_nonnegative_and_zero_only_on_wells() {
        let w = Wells::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.5]]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for a in &w.points {
            assert_eq!(eval_w(&w, a).unwrap(), 0.0);
        }
        for _ in 0..1000 {
            let z = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let v = eval_w(&w, &z).unwrap();
            assert!(v >= 0.0);
            if w.dist_to_wells(&z) > 1e-3 {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        let w = Wells::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..100 {
            let z = vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let g = grad_w(&w, &z).unwrap();
            for c in 0..2 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[c] += h;
                zm[c] -= h;
                let fd = (eval_w(&w, &zp).unwrap() - eval_w(&w, &zm).unwrap()) / (2.0 * h);
                let scale = g[c].abs().max(1.0);
                assert!((g[c] - fd).abs() / scale < 1e-6, "{} vs {}", g[c], fd);
            }
        }
    }

    #[test]
    fn grad_zero_at_wells_and_symmetry_point() {
        let w = wells_pm1();
        assert!(grad_w(&w, &[1.0]).unwrap()[0].abs() < 1e-14);
        assert!(grad_w(&w, &[0.0]).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn constants_for_two_wells() {
        // W = (z^2-1)^2 has W''(+-1) = 8, so kappa = 4
        let w = wells_pm1();
        let c = estimate_constants(&w).unwrap();
        assert!((c.kappa_w - 4.0).abs() < 1e-3, "kappa {}", c.kappa_w);
        assert!(c.rho_w > 0.0 && c.rho_w <= 1.0);
        assert!(c.c1 > 0.0 && c.c2 >= 0.0 && c.c3 > 0.0);
        // the fitted envelope really is a lower bound along the sampled rays
        for &t in &[0.5, 1.3, 2.0, 3.5] {
            let dwdt = grad_w(&w, &[t]).unwrap()[0];
            assert!(c.c1 * (t.powf(w.p - 1.0) - c.c2) <= dwdt + 1e-9);
        }
    }

    #[test]
    fn constants_2d_pair() {
        let w = Wells::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let c = estimate_constants(&w).unwrap();
        assert!(c.kappa_w > 0.0);
    }

    #[test]
    fn repeated_wells_rejected() {
        assert!(Wells::new(1, vec![vec![0.5], vec![0.5]]).is_err());
    }

    #[test]
    fn sigma_from_collinear_wells() {
        let w = Wells::new(1, vec![vec![0.0], vec![2.0], vec![1.0]]).unwrap();
        let s = sigma_from_wells(&w);
        assert_eq!(s.get(0, 1), 4.0);
        assert_eq!(s.get(0, 2), 1.0);
        assert_eq!(s.get(1, 2), 1.0);
        assert!(s.has_regime(&Regime::Siti3));
        assert_eq!(s.siti_pair, Some((1, 2)));
    }

    #[test]
    fn homogeneous_triangle_classification() {
        let s = SigmaMatrix::from_triple(1.0, 1.0, 1.0).unwrap();
        assert!((s.q - 0.5).abs() < 1e-15);
        assert!(s.has_regime(&Regime::NearlyHomogeneous));
        assert!(s.has_regime(&Regime::Sti3));
        let a = s.alpha.unwrap();
        for v in a {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn m2_is_nearly_homogeneous() {
        let s = SigmaMatrix::from_entries(2, vec![0.0, 3.0, 3.0, 0.0]).unwrap();
        assert_eq!(s.q, 0.0);
        assert!(s.has_regime(&Regime::NearlyHomogeneous));
    }

    #[test]
    fn sti_alpha_values() {
        let s = SigmaMatrix::from_triple(2.0, 1.5, 1.2).unwrap();
        let a = s.alpha.unwrap();
        assert!((a[0] - 1.15).abs() < 1e-12);
        assert!((a[1] - 0.85).abs() < 1e-12);
        assert!((a[2] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn sti_and_siti_are_disjoint() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let s = SigmaMatrix::from_triple(
                rng.gen_range(0.2..4.0),
                rng.gen_range(0.2..4.0),
                rng.gen_range(0.2..4.0),
            )
            .unwrap();
            assert!(!(s.has_regime(&Regime::Sti3) && s.has_regime(&Regime::Siti3)));
        }
    }

    #[test]
    fn embed_collinear_triple() {
        let s = SigmaMatrix::from_triple(4.0, 1.0, 1.0).unwrap();
        match embed_sigma(&s) {
            Embedding::Embeddable(w) => {
                let back = sigma_from_wells(&w);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((back.get(i, j) - s.get(i, j)).abs() < 1e-8);
                    }
                }
            }
            Embedding::NotEmbeddable => panic!("collinear triple must embed"),
        }
    }

    #[test]
    fn non_embeddable_triple() {
        // sqrt sigma: 10 > 1 + 1 violates the metric triangle inequality
        let s = SigmaMatrix::from_triple(100.0, 1.0, 1.0).unwrap();
        assert_eq!(embed_sigma(&s), Embedding::NotEmbeddable);
    }

    #[test]
    fn embedding_round_trip_random_wells() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let m = rng.gen_range(2..=5);
            let d = rng.gen_range(1..=3);
            let pts: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let w = match Wells::new(d, pts) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let s = sigma_from_wells(&w);
            match embed_sigma(&s) {
                Embedding::Embeddable(w2) => {
                    let s2 = sigma_from_wells(&w2);
                    for i in 0..m {
                        for j in 0..m {
                            assert!(
                                (s2.get(i, j) - s.get(i, j)).abs() < 1e-8 * (1.0 + s.get(i, j)),
                                "distance mismatch"
                            );
                        }
                    }
                }
                Embedding::NotEmbeddable => panic!("well-induced sigma must embed"),
            }
        }
    }
}
