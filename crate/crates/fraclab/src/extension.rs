//! Fractional Poisson extension to the upper half space and the scaled
//! energy density on half balls.
//!
//! The extension is a convolution with the fractional Poisson kernel,
//! discretized as a per-level weighted average over lattice cells plus an
//! analytic far-field closure; weights are renormalized to sum to one at
//! every height, so the discrete extension inherits the maximum principle
//! exactly.

use crate::constants::{delta_s, sigma_ns, FracParams};
use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::lattice::{Lattice, VectorField};
use crate::nonlocal::{FarVector, NonlocalOps};
use crate::quad::{adaptive_simpson, KahanSum};
use crate::wells::{eval_w, Wells};

/// Samples of the extension u^e on a stack of heights above the lattice.
#[derive(Debug, Clone)]
pub struct ExtensionSlab {
    pub n: usize,
    pub d: usize,
    pub h: f64,
    pub s: f64,
    /// strictly increasing positive heights
    pub z_levels: Vec<f64>,
    /// trace at z = 0: the boundary field itself
    pub trace: VectorField,
    /// per level, a VectorField of samples
    pub values: Vec<VectorField>,
    pub shape: [usize; 2],
    pub collar_cells: usize,
    pub box_lo: [f64; 2],
}

impl ExtensionSlab {
    pub fn level_count(&self) -> usize {
        self.z_levels.len()
    }
}

/// Geometric ladder of heights z_k = z1 rho^k covering [z1, z_max].
pub fn geometric_levels(z1: f64, rho: f64, z_max: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut z = z1;
    while z < z_max {
        levels.push(z);
        z *= rho;
    }
    levels.push(z);
    levels
}

/// Build the extension slab of a lattice field.
///
/// Per level the lattice part is a convolution with the sampled Poisson
/// kernel; because the kernel is a probability density, the far mass is
/// exactly one minus the lattice weight sum. The far mass carries the
/// prescribed far data (split per side for step data in 1D; by angular
/// measure in 2D) and the combined system is a convex combination, so the
/// maximum principle holds exactly.
pub fn poisson_extend(
    ops: &NonlocalOps,
    u: &VectorField,
    far: &FarVector,
    z_levels: &[f64],
) -> Result<ExtensionSlab> {
    let lattice = ops.lattice;
    let cells = lattice.cell_count();
    if u.cells != cells {
        return Err(Error::DimensionMismatch("field length".into()));
    }
    if z_levels.is_empty() || z_levels[0] <= 0.0 || z_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam("z levels must be positive increasing".into()));
    }
    let n = lattice.n;
    let s = ops.kt.s;
    let p = FracParams::new(n, s)?;
    let sig = sigma_ns(p);
    let h = lattice.h;
    let hn = lattice.cell_measure();
    let d = u.d;
    let kmax = lattice.shape[0].max(lattice.shape[1]) - 1;

    let mut values = Vec::with_capacity(z_levels.len());
    for &z in z_levels {
        let kernel = |r2: f64| -> f64 {
            sig * z.powf(2.0 * s) / (r2 + z * z).powf((n as f64 + 2.0 * s) / 2.0) * hn
        };
        // per-level offset weights covering the whole lattice span
        let mut offsets = Vec::new();
        let k1 = if n == 2 { kmax as i64 } else { 0 };
        for o0 in -(kmax as i64)..=kmax as i64 {
            for o1 in -k1..=k1 {
                let r2 = ((o0 * o0 + o1 * o1) as f64) * h * h;
                offsets.push((o0, o1, kernel(r2)));
            }
        }
        let plan = crate::conv::ConvPlan::from_offsets(lattice, kmax, &offsets);
        let ones = vec![1.0; cells];
        let wlat = plan.apply(&ones);
        let mut comps = Vec::with_capacity(d);
        for c in 0..d {
            let f: Vec<f64> = (0..cells).map(|i| u.values[i * d + c]).collect();
            comps.push(plan.apply(&f));
        }
        let mut level = VectorField::zeros(lattice, d);
        for idx in 0..cells {
            let far_mass = (1.0 - wlat[idx]).max(0.0);
            let x = lattice.center(idx);
            let gfar = far_average(ops, far, x, z, sig, far_mass);
            let total = wlat[idx] + far_mass;
            let mut v = vec![0.0; d];
            for c in 0..d {
                v[c] = (comps[c][idx] + gfar[c]) / total;
            }
            level.set(idx, &v);
        }
        values.push(level);
    }
    Ok(ExtensionSlab {
        n,
        d,
        h,
        s,
        z_levels: z_levels.to_vec(),
        trace: u.clone(),
        values,
        shape: lattice.shape,
        collar_cells: lattice.collar_cells,
        box_lo: lattice.box_lo,
    })
}

/// Far-field contribution (mass-weighted data vector) for a cell at x and
/// height z, normalized so its total weight is `far_mass`.
fn far_average(
    ops: &NonlocalOps,
    far: &FarVector,
    x: [f64; 2],
    z: f64,
    sig: f64,
    far_mass: f64,
) -> Vec<f64> {
    match far {
        FarVector::Uniform(v) => v.iter().map(|a| a * far_mass).collect(),
        FarVector::AxisStep { axis, threshold, neg, pos } => {
            let lattice = ops.lattice;
            let s = ops.kt.s;
            match lattice.n {
                1 => {
                    // exact ray masses beyond the lattice edges
                    let lo = lattice.box_lo[0] - lattice.collar_cells as f64 * lattice.h;
                    let hi = lo + lattice.shape[0] as f64 * lattice.h;
                    let ray = |dist: f64| -> f64 {
                        // int_dist^inf sig z^{2s} (t^2+z^2)^{-(1+2s)/2} dt
                        let sub = |w: f64| -> f64 {
                            if w <= 0.0 {
                                return 0.0;
                            }
                            let t = dist / w;
                            sig * z.powf(2.0 * s) / (t * t + z * z).powf((1.0 + 2.0 * s) / 2.0)
                                * dist
                                / (w * w)
                        };
                        adaptive_simpson(&sub, 1e-9, 1.0, 1e-13)
                    };
                    let m_left = ray((x[0] - lo).max(lattice.h));
                    let m_right = ray((hi - x[0]).max(lattice.h));
                    let msum = (m_left + m_right).max(1e-300);
                    let (wl, wr) = (far_mass * m_left / msum, far_mass * m_right / msum);
                    // the step threshold sits inside the lattice, so the left
                    // ray carries the negative data and the right the positive
                    let (vl, vr) = if *threshold >= lo && *threshold <= hi {
                        (neg, pos)
                    } else if *threshold < lo {
                        (pos, pos)
                    } else {
                        (neg, neg)
                    };
                    vl.iter().zip(vr).map(|(a, b)| wl * a + wr * b).collect()
                }
                _ => {
                    // rough angular split of the far mass across the step
                    // plane; exact enough for the 2D slabs, which only feed
                    // qualitative probes
                    let dxp = x[*axis] - threshold;
                    let frac_pos = 0.5 + (dxp / (dxp.abs() + z)).asin() / std::f64::consts::PI;
                    let frac_pos = frac_pos.clamp(0.0, 1.0);
                    neg.iter()
                        .zip(pos)
                        .map(|(a, b)| far_mass * ((1.0 - frac_pos) * a + frac_pos * b))
                        .collect()
                }
            }
        }
    }
}

/// The scaled energy density
/// `Theta_{s,eps}(v, x0, r) = r^{-(n-2s)} [ (delta_s/2) int_{B_r^+} z^a |grad v|^2
///  + eps^{-2s} int_{D_r} W(v) ]`,
/// with the potential term included only when `eps` is given.
///
/// The slab integral uses divided differences in z (the trace acts as level
/// zero), central differences in x, exact integrals of z^a across each level
/// interval, and cell-center inclusion for the half-ball membership.
pub fn density_theta(
    slab: &ExtensionSlab,
    eps: Option<f64>,
    wells: Option<&Wells>,
    x0: [f64; 2],
    r: f64,
) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::InvalidParam("radius must be positive".into()));
    }
    let n = slab.n;
    let h = slab.h;
    let a = 1.0 - 2.0 * slab.s;
    // the half ball must stay inside the sampled region
    let zmax = *slab.z_levels.last().unwrap();
    if r > zmax {
        return Err(Error::InvalidParam(format!(
            "radius {r} exceeds slab height {zmax}"
        )));
    }
    let span = extent(slab);
    for ax in 0..n {
        if x0[ax] - r < span.0[ax] || x0[ax] + r > span.1[ax] {
            return Err(Error::InvalidParam("half ball exits the sampled region".into()));
        }
    }
    let hn = h.powi(n as i32);
    let mut energy = KahanSum::new();
    // iterate z intervals [z_k, z_{k+1}] with level 0 = trace at z = 0
    let mut zs = Vec::with_capacity(slab.z_levels.len() + 1);
    zs.push(0.0);
    zs.extend_from_slice(&slab.z_levels);
    let level_field = |k: usize| -> &VectorField {
        if k == 0 {
            &slab.trace
        } else {
            &slab.values[k - 1]
        }
    };
    let d = slab.d;
    for k in 0..zs.len() - 1 {
        let z_lo = zs[k];
        let z_hi = zs[k + 1];
        let zm = 0.5 * (z_lo + z_hi);
        // weight: int_{z_lo}^{z_hi} z^a dz
        let zw = (z_hi.powf(1.0 + a) - z_lo.powf(1.0 + a)) / (1.0 + a);
        let f_lo = level_field(k);
        let f_hi = level_field(k + 1);
        let dz = z_hi - z_lo;
        for i0 in 0..slab.shape[0] {
            for i1 in 0..slab.shape[1] {
                let idx = i0 * slab.shape[1] + i1;
                let x = cell_center(slab, i0, i1);
                let dx0 = x[0] - x0[0];
                let dx1 = if n == 2 { x[1] - x0[1] } else { 0.0 };
                if dx0 * dx0 + dx1 * dx1 + zm * zm > r * r {
                    continue;
                }
                let mut grad2 = 0.0;
                for c in 0..d {
                    // z derivative across the interval
                    let gz = (f_hi.values[idx * d + c] - f_lo.values[idx * d + c]) / dz;
                    grad2 += gz * gz;
                    // x derivatives: central differences averaged over the interval
                    let gx0 = central_diff(slab, f_lo, f_hi, i0, i1, 0, c);
                    grad2 += gx0 * gx0;
                    if n == 2 {
                        let gx1 = central_diff(slab, f_lo, f_hi, i0, i1, 1, c);
                        grad2 += gx1 * gx1;
                    }
                }
                energy.add(zw * grad2 * hn);
            }
        }
    }
    let mut total = 0.5 * delta_s(slab.s) * energy.value();
    if let Some(eps) = eps {
        let wells = wells.ok_or_else(|| Error::InvalidParam("potential term needs wells".into()))?;
        let mut pot = KahanSum::new();
        for i0 in 0..slab.shape[0] {
            for i1 in 0..slab.shape[1] {
                let idx = i0 * slab.shape[1] + i1;
                let x = cell_center(slab, i0, i1);
                let dx0 = x[0] - x0[0];
                let dx1 = if n == 2 { x[1] - x0[1] } else { 0.0 };
                if dx0 * dx0 + dx1 * dx1 > r * r {
                    continue;
                }
                pot.add(eval_w(wells, slab.trace.get(idx))?);
            }
        }
        total += eps.powf(-2.0 * slab.s) * hn * pot.value();
    }
    Ok(total / r.powf(n as f64 - 2.0 * slab.s))
}

fn extent(slab: &ExtensionSlab) -> ([f64; 2], [f64; 2]) {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for ax in 0..slab.n {
        lo[ax] = slab.box_lo[ax] - slab.collar_cells as f64 * slab.h;
        hi[ax] = lo[ax] + slab.shape[ax] as f64 * slab.h;
    }
    (lo, hi)
}

fn cell_center(slab: &ExtensionSlab, i0: usize, i1: usize) -> [f64; 2] {
    let x0 = slab.box_lo[0] + slab.h * (i0 as f64 + 0.5 - slab.collar_cells as f64);
    let x1 = if slab.n == 2 {
        slab.box_lo[1] + slab.h * (i1 as f64 + 0.5 - slab.collar_cells as f64)
    } else {
        0.0
    };
    [x0, x1]
}

fn central_diff(
    slab: &ExtensionSlab,
    f_lo: &VectorField,
    f_hi: &VectorField,
    i0: usize,
    i1: usize,
    axis: usize,
    c: usize,
) -> f64 {
    let d = slab.d;
    let (s0, s1) = (slab.shape[0], slab.shape[1]);
    let (ip, im) = match axis {
        0 => {
            if i0 == 0 || i0 + 1 >= s0 {
                return 0.0;
            }
            ((i0 + 1) * s1 + i1, (i0 - 1) * s1 + i1)
        }
        _ => {
            if i1 == 0 || i1 + 1 >= s1 {
                return 0.0;
            }
            (i0 * s1 + i1 + 1, i0 * s1 + i1 - 1)
        }
    };
    let g_lo = (f_lo.values[ip * d + c] - f_lo.values[im * d + c]) / (2.0 * slab.h);
    let g_hi = (f_hi.values[ip * d + c] - f_hi.values[im * d + c]) / (2.0 * slab.h);
    0.5 * (g_lo + g_hi)
}
