//! Precomputed kernel weights on the lattice offset grid.
//!
//! Near offsets (|o| <= 4h) carry the exact cell-pair average of the
//! singular kernel; far offsets the midpoint value; everything beyond the
//! tail radius is summarized by the analytic radial tail
//! `int_{|y|>R} |y|^{-n-2s} dy = n omega_n R^{-2s} / (2s)`.

use crate::constants::omega_k;
use crate::error::{Error, Result};
use crate::geom::{cell_pair_weight_1d, cell_pair_weight_2d};
use crate::lattice::Lattice;

#[derive(Debug, Clone)]
pub struct KernelTable {
    pub n: usize,
    pub s: f64,
    pub h: f64,
    /// largest offset magnitude in cells per axis
    pub k_cells: i64,
    /// dense (2K+1) x (2K+1) offset weights (axis 1 collapsed in 1D);
    /// average kernel values, zero at the origin and beyond the tail radius
    pub weights: Vec<f64>,
    pub side: usize,
    /// sum of all offset weights
    pub row_sum: f64,
    /// analytic radial tail mass beyond tail_radius
    pub tail: f64,
    pub tail_radius: f64,
}

impl KernelTable {
    #[inline]
    pub fn weight(&self, o0: i64, o1: i64) -> f64 {
        if o0.abs() > self.k_cells || o1.abs() > self.k_cells {
            return 0.0;
        }
        let r = (o0 + self.k_cells) as usize;
        let c = (o1 + self.k_cells) as usize;
        self.weights[r * self.side + c]
    }

    /// Iterate nonzero offsets as (o0, o1, w).
    pub fn for_each_offset<F: FnMut(i64, i64, f64)>(&self, mut f: F) {
        let k = self.k_cells;
        for o0 in -k..=k {
            for o1 in -k..=k {
                let w = self.weight(o0, o1);
                if w != 0.0 {
                    f(o0, o1, w);
                }
            }
        }
    }
}

/// Build the kernel table for a lattice and exponent s in (0, 1/2).
pub fn build_kernel(lattice: &Lattice, s: f64) -> Result<KernelTable> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::InvalidParam(format!("s must lie in (0, 1/2), got {s}")));
    }
    let n = lattice.n;
    let h = lattice.h;
    let retail = lattice.tail_radius;
    if retail < 6.0 * h {
        return Err(Error::InvalidParam("tail radius must be at least 6h".into()));
    }
    let k = (retail / h + 1e-9).floor() as i64;
    let side = (2 * k + 1) as usize;
    let mut weights = vec![0.0; side * side];
    // compute on the canonical octant 0 <= o1 <= o0 and mirror, so the
    // symmetries w(o) = w(-o) (and axis swaps in 2D) hold bit-exactly
    for o0 in 0..=k {
        for o1 in 0..=if n == 1 { 0 } else { o0 } {
            if o0 == 0 && o1 == 0 {
                continue;
            }
            let dist2 = (o0 * o0 + o1 * o1) as f64;
            let dist = dist2.sqrt() * h;
            if dist > retail + 1e-12 {
                continue;
            }
            let w = if dist2 <= 16.0 {
                // exact cell-pair averages near the singularity
                if n == 1 {
                    cell_pair_weight_1d(o0 as usize, h, s)
                } else {
                    cell_pair_weight_2d(o0 as f64 * h, o1 as f64 * h, h, s, 24)
                }
            } else {
                dist.powf(-(n as f64) - 2.0 * s)
            };
            let mut put = |a: i64, b: i64| {
                let idx = ((a + k) as usize) * side + (b + k) as usize;
                weights[idx] = w;
            };
            if n == 1 {
                put(o0, 0);
                put(-o0, 0);
            } else {
                for (a, b) in [(o0, o1), (o1, o0)] {
                    put(a, b);
                    put(-a, b);
                    put(a, -b);
                    put(-a, -b);
                }
            }
        }
    }
    let mut row_sum = 0.0;
    for &w in &weights {
        row_sum += w;
    }
    let nf = n as f64;
    let tail = nf * omega_k(nf) * retail.powf(-2.0 * s) / (2.0 * s);
    Ok(KernelTable {
        n,
        s,
        h,
        k_cells: k,
        weights,
        side,
        row_sum,
        tail,
        tail_radius: retail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::quad::adaptive_simpson;

    #[test]
    fn rejects_bad_s() {
        let lat = build_lattice(1, 1.0 / 64.0, [-1.0, 0.0], [1.0, 0.0], 0.5, 1.0).unwrap();
        assert!(build_kernel(&lat, 0.5).is_err());
        assert!(build_kernel(&lat, 0.0).is_err());
    }

    #[test]
    fn one_d_adjacent_weight_matches_quadrature_oracle() {
        // oracle: adaptive quadrature of the pair integral over [0,1/2] x [1/2,1],
        // with the endpoint singularity removed by x = 1/2 - t^2
        let lat = build_lattice(1, 0.5, [-2.0, 0.0], [2.0, 0.0], 1.0, 20.0).unwrap();
        let s = 0.25;
        let kt = build_kernel(&lat, s).unwrap();
        let inner = |t: f64| {
            // (int_{1/2}^{1} (y-x)^{-3/2} dy) * dx/dt at x = 1/2 - t^2,
            // written so the t = 0 endpoint is regular
            4.0 * t.powf(1.0 - 4.0 * s) - 4.0 * t * (0.5 + t * t).powf(-2.0 * s)
        };
        let oracle = adaptive_simpson(&inner, 0.0, (0.5f64).sqrt(), 1e-12) / (0.5 * 0.5);
        let w = kt.weight(1, 0);
        assert!((w - oracle).abs() / oracle < 1e-6, "{w} vs {oracle}");
    }

    #[test]
    fn weights_symmetric_and_midpoint_far() {
        let lat = build_lattice(2, 1.0 / 16.0, [0.0, 0.0], [1.0, 1.0], 0.25, 0.75).unwrap();
        let kt = build_kernel(&lat, 0.3).unwrap();
        kt.for_each_offset(|o0, o1, w| {
            assert_eq!(w, kt.weight(-o0, -o1));
        });
        // far offsets: w |o|^{n+2s} -> 1
        let o = 10i64;
        let d = o as f64 * lat.h;
        let w = kt.weight(o, 0);
        assert!((w * d.powf(2.0 + 0.6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_mass_matches_averaged_radial_oracle_1d() {
        // the table mass row_sum*h + tail equals the cell-averaged total
        // (1/h) * int_{cell} int_{R \ cell} |x-y|^{-1-2s}, which has the
        // closed form 2 h^{-2s} / (2s (1-2s)); midpoint far offsets and the
        // tail keep the match within 1%
        let h = 1.0 / 128.0;
        let lat = build_lattice(1, h, [0.0, 0.0], [1.0, 0.0], 8.0 * h, 1.5).unwrap();
        let s = 0.27;
        let kt = build_kernel(&lat, s).unwrap();
        let discrete = kt.row_sum * h + kt.tail;
        let exact = 2.0 * h.powf(-2.0 * s) / (2.0 * s * (1.0 - 2.0 * s));
        assert!(
            (discrete - exact).abs() / exact < 0.01,
            "{discrete} vs {exact}"
        );
    }

    #[test]
    fn total_mass_matches_averaged_radial_oracle_2d() {
        // 2D oracle: (1/h^2) int K(u) (h^2 - cov(u)) du with the cell
        // covariogram cov(u) = (h-|u1|)+ (h-|u2|)+ , evaluated by nested
        // adaptive quadrature in polar form
        let h = 1.0 / 32.0;
        let lat = build_lattice(2, h, [0.0, 0.0], [1.0, 1.0], 8.0 * h, 0.9).unwrap();
        let s = 0.27;
        let kt = build_kernel(&lat, s).unwrap();
        let discrete = kt.row_sum * h * h + kt.tail;
        // inside the box [-h,h]^2: integrand rho^{-1-2s} (h^2 - cov) / h^2
        let inner_box = |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            let rho_box = (h / cs.abs().max(1e-300)).min(h / sn.abs().max(1e-300));
            adaptive_simpson(
                &|rho: f64| {
                    let u1 = (rho * cs).abs();
                    let u2 = (rho * sn).abs();
                    let cov = (h - u1).max(0.0) * (h - u2).max(0.0);
                    rho.powf(-1.0 - 2.0 * s) * (h * h - cov)
                },
                1e-9 * h,
                rho_box,
                1e-10,
            ) / (h * h)
        };
        let part1 = adaptive_simpson(&inner_box, 1e-9, std::f64::consts::FRAC_PI_4, 1e-9) * 8.0;
        // outside the box: full kernel mass beyond the box boundary per ray
        let outer = |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            let rho_box = (h / cs.abs().max(1e-300)).min(h / sn.abs().max(1e-300));
            rho_box.powf(-2.0 * s) / (2.0 * s)
        };
        let part2 = adaptive_simpson(&outer, 1e-9, std::f64::consts::FRAC_PI_4, 1e-9) * 8.0;
        let exact = part1 + part2;
        assert!(
            (discrete - exact).abs() / exact < 0.01,
            "{discrete} vs {exact}"
        );
    }
}
