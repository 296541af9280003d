//! Planar geometry used by the singular pair quadrature and the cut-cell
//! perimeter engine: convex polygon clipping, areas, and the polar-form
//! integral of the fractional kernel against a polygon cross-covariogram.

use crate::quad::gauss_legendre;

pub type Point = [f64; 2];

/// Clip a polygon by the half-plane { p : n.p <= c }, Sutherland-Hodgman.
pub fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    if poly.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(poly.len() + 2);
    let len = poly.len();
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let dp = n[0] * p[0] + n[1] * p[1] - c;
        let dq = n[0] * q[0] + n[1] * q[1] - c;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dq < 0.0 && dp > 0.0) {
            let t = dp / (dp - dq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Unsigned polygon area (shoelace).
pub fn poly_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..poly.len() {
        let [x1, y1] = poly[i];
        let [x2, y2] = poly[(i + 1) % poly.len()];
        a += x1 * y2 - x2 * y1;
    }
    0.5 * a.abs()
}

fn signed_area(poly: &[Point]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let [x1, y1] = poly[i];
        let [x2, y2] = poly[(i + 1) % poly.len()];
        a += x1 * y2 - x2 * y1;
    }
    0.5 * a
}

/// Area of the intersection of two convex polygons.
pub fn convex_intersection_area(p: &[Point], q: &[Point]) -> f64 {
    if p.len() < 3 || q.len() < 3 {
        return 0.0;
    }
    let qv: Vec<Point> = if signed_area(q) >= 0.0 {
        q.to_vec()
    } else {
        q.iter().rev().copied().collect()
    };
    let mut r = p.to_vec();
    for i in 0..qv.len() {
        let [x1, y1] = qv[i];
        let [x2, y2] = qv[(i + 1) % qv.len()];
        // interior of a ccw polygon lies where (y2-y1, x1-x2).p <= c
        let n = [y2 - y1, x1 - x2];
        let c = n[0] * x1 + n[1] * y1;
        r = clip_halfplane(&r, n, c);
        if r.is_empty() {
            return 0.0;
        }
    }
    poly_area(&r)
}

/// Axis-aligned square cell centered at (cx, cy) with side h.
pub fn cell_polygon(cx: f64, cy: f64, h: f64) -> Vec<Point> {
    let r = 0.5 * h;
    vec![
        [cx - r, cy - r],
        [cx + r, cy - r],
        [cx + r, cy + r],
        [cx - r, cy + r],
    ]
}

fn translate(poly: &[Point], ux: f64, uy: f64, out: &mut Vec<Point>) {
    out.clear();
    out.extend(poly.iter().map(|p| [p[0] + ux, p[1] + uy]));
}

/// Cross-covariogram value: |A ∩ (B + u)|.
fn kappa(a: &[Point], b: &[Point], ux: f64, uy: f64, scratch: &mut Vec<Point>) -> f64 {
    translate(b, ux, uy, scratch);
    convex_intersection_area(a, scratch)
}

/// The pair integral  ∬_{A×B} |x-y|^{-2-2s} dx dy  for two convex polygons
/// with disjoint interiors that may touch (share boundary).
///
/// Uses the identity  ∬_{A×B} K(x-y) = ∫ K(u) |A ∩ (B+u)| du  and integrates
/// u in polar coordinates around the origin. The covariogram vanishes at
/// u = 0 and grows linearly there, so the radial integral splits into an
/// analytic linear part and a smooth remainder handled by a graded rule.
pub fn pair_integral_touching(a: &[Point], b: &[Point], s: f64, n_theta: usize, n_rho: usize) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 0.0;
    }
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in a.iter().chain(b.iter()) {
        lo_x = lo_x.min(p[0]);
        hi_x = hi_x.max(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_y = hi_y.max(p[1]);
    }
    let rho_m = ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt() * 1.000_000_1;
    let (gx, gw) = gauss_legendre(n_theta);
    let (rx, rw) = gauss_legendre(n_rho);
    let mut scratch = Vec::with_capacity(16);
    let rho1 = 1e-3 * rho_m;
    let mut total = 0.0;
    for (&tx, &tw) in gx.iter().zip(gw) {
        let theta = std::f64::consts::PI * (tx + 1.0);
        let w_theta = std::f64::consts::PI * tw;
        let (st, ct) = theta.sin_cos();
        // slope of the covariogram at the origin along this direction
        let a_lin = kappa(a, b, rho1 * ct, rho1 * st, &mut scratch) / rho1;
        let mut radial = a_lin * rho_m.powf(1.0 - 2.0 * s) / (1.0 - 2.0 * s);
        if a_lin != 0.0 || {
            // directions with zero slope can still carry quadratic mass
            true
        } {
            for (&qx, &qw) in rx.iter().zip(rw) {
                let q = 0.5 * (qx + 1.0);
                let rho = rho_m * q * q;
                if rho <= 0.0 {
                    continue;
                }
                let drho = 2.0 * rho_m * q;
                let rem = kappa(a, b, rho * ct, rho * st, &mut scratch) - a_lin * rho;
                radial += rem * rho.powf(-1.0 - 2.0 * s) * drho * (0.5 * qw);
            }
        }
        total += w_theta * radial;
    }
    total
}

/// Cell-pair integral  ∬_{C0 × Co} |x-y|^{-n-2s}  for two full lattice cells
/// at offset D = (dx, dy) (lengths), side h, in 2D.
///
/// Uses the convolution form ∫ Λ(u) K(u + D) du with the separable triangle
/// weight Λ(u) = (h-|u1|)(h-|u2|). Along each ray from the singular point
/// u* = -D the weight is piecewise quadratic in the radius, so the radial
/// integral is evaluated in closed form; the angular integral is a Gauss rule
/// split at the kink directions.
pub fn cell_pair_weight_2d(dx: f64, dy: f64, h: f64, s: f64, n_theta: usize) -> f64 {
    let u1s = -dx;
    let u2s = -dy;
    // angular breakpoints: directions toward box corners and axis crossings
    let mut angles: Vec<f64> = Vec::new();
    for &cx in &[-h, h] {
        for &cy in &[-h, h] {
            angles.push((cy - u2s).atan2(cx - u1s));
        }
    }
    // rays on which u1 or u2 crosses zero
    for &(p, along_x) in &[(u1s, true), (u2s, false)] {
        let _ = p;
        let _ = along_x;
    }
    angles.push((0.0 - u2s).atan2(-h - u1s));
    angles.push((0.0 - u2s).atan2(h - u1s));
    angles.push((-h - u2s).atan2(0.0 - u1s));
    angles.push((h - u2s).atan2(0.0 - u1s));
    let tau = 2.0 * std::f64::consts::PI;
    let mut bps: Vec<f64> = angles.iter().map(|a| a.rem_euclid(tau)).collect();
    bps.push(0.0);
    bps.push(tau);
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let (gx, gw) = gauss_legendre(n_theta);
    let mut total = 0.0;
    for win in bps.windows(2) {
        let (t0, t1) = (win[0], win[1]);
        if t1 - t0 < 1e-14 {
            continue;
        }
        for (&x, &w) in gx.iter().zip(gw) {
            let theta = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x;
            let wt = 0.5 * (t1 - t0) * w;
            total += wt * ray_integral(u1s, u2s, theta, h, s);
        }
    }
    total / (h * h * h * h)
}

/// Closed-form radial integral of Λ(u* + ρ e(θ)) ρ^{-1-2s} over the part of
/// the ray inside [-h,h]^2, with sub-splits where |u1| or |u2| kink.
fn ray_integral(u1s: f64, u2s: f64, theta: f64, h: f64, s: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    // ray-box intersection
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for &(p, d) in &[(u1s, cs), (u2s, sn)] {
        if d.abs() < 1e-15 {
            if p.abs() > h {
                return 0.0;
            }
        } else {
            let t1 = (-h - p) / d;
            let t2 = (h - p) / d;
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    if hi <= lo {
        return 0.0;
    }
    // kinks where a coordinate crosses zero
    let mut bps = vec![lo, hi];
    for &(p, d) in &[(u1s, cs), (u2s, sn)] {
        if d.abs() > 1e-15 {
            let t0 = -p / d;
            if t0 > lo && t0 < hi {
                bps.push(t0);
            }
        }
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for win in bps.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b - a < 1e-15 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let x1 = u1s + mid * cs;
        let x2 = u2s + mid * sn;
        let s1 = if x1 >= 0.0 { 1.0 } else { -1.0 };
        let s2 = if x2 >= 0.0 { 1.0 } else { -1.0 };
        // Λ = (h - s1 (u1s + ρ cs)) (h - s2 (u2s + ρ sn)) = (A1 + B1 ρ)(A2 + B2 ρ)
        let a1 = h - s1 * u1s;
        let b1 = -s1 * cs;
        let a2 = h - s2 * u2s;
        let b2 = -s2 * sn;
        let c0 = a1 * a2;
        let c1 = a1 * b2 + a2 * b1;
        let c2 = b1 * b2;
        // ∫ ρ^{p-1-2s} dρ
        let ip = |p: f64, x: f64| -> f64 {
            if x == 0.0 {
                return 0.0;
            }
            let e = p - 2.0 * s;
            x.powf(e) / e
        };
        for (coef, p) in [(c0, 0.0), (c1, 1.0), (c2, 2.0)] {
            if coef.abs() > 1e-300 {
                acc += coef * (ip(p, b) - ip(p, a));
            }
        }
    }
    acc
}

/// Exact 1D cell-pair weight: cell-averaged kernel between cells at offset
/// k*h (k >= 1), from the second antiderivative of t^{-1-2s}.
pub fn cell_pair_weight_1d(k: usize, h: f64, s: f64) -> f64 {
    debug_assert!(k >= 1);
    let f2 = |t: f64| -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -t.powf(1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s))
        }
    };
    let d = k as f64 * h;
    (f2(d + h) - 2.0 * f2(d) + f2(d - h)) / (h * h)
}
