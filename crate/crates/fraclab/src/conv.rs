//! Kernel application over the lattice: out_i = sum_j w(x_i - x_j) f_j.
//!
//! The bulk path runs a zero-padded FFT convolution; a direct offset-sum path
//! serves as the order-independent reference for small grids and tests.

use crate::kernel::KernelTable;
use crate::lattice::Lattice;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct ConvPlan {
    shape: [usize; 2],
    pad: [usize; 2],
    kfft: Vec<Complex<f64>>,
    fwd0: Arc<dyn Fft<f64>>,
    inv0: Arc<dyn Fft<f64>>,
    fwd1: Option<Arc<dyn Fft<f64>>>,
    inv1: Option<Arc<dyn Fft<f64>>>,
}

fn good_size(mut n: usize) -> usize {
    // next size with only factors 2 and 3 keeps rustfft fast
    loop {
        let mut m = n;
        while m % 2 == 0 {
            m /= 2;
        }
        while m % 3 == 0 {
            m /= 3;
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

impl ConvPlan {
    pub fn new(lattice: &Lattice, kt: &KernelTable) -> Self {
        let k = kt.k_cells as usize;
        let mut offsets = Vec::new();
        kt.for_each_offset(|o0, o1, w| offsets.push((o0, o1, w)));
        Self::from_offsets(lattice, k, &offsets)
    }

    /// Plan a convolution with arbitrary offset weights (|o| <= k cells).
    pub fn from_offsets(lattice: &Lattice, k: usize, offsets: &[(i64, i64, f64)]) -> Self {
        let shape = lattice.shape;
        let pad0 = good_size(shape[0] + 2 * k);
        let pad1 = if lattice.n == 2 {
            good_size(shape[1] + 2 * k)
        } else {
            1
        };
        let mut planner = FftPlanner::new();
        let fwd0 = planner.plan_fft_forward(pad0);
        let inv0 = planner.plan_fft_inverse(pad0);
        let (fwd1, inv1) = if lattice.n == 2 {
            (
                Some(planner.plan_fft_forward(pad1)),
                Some(planner.plan_fft_inverse(pad1)),
            )
        } else {
            (None, None)
        };
        // kernel embedded with wrapped negative offsets
        let mut kpad = vec![Complex::new(0.0, 0.0); pad0 * pad1];
        for &(o0, o1, w) in offsets {
            let r = o0.rem_euclid(pad0 as i64) as usize;
            let c = o1.rem_euclid(pad1 as i64) as usize;
            kpad[r * pad1 + c] = Complex::new(w, 0.0);
        }
        let mut plan = ConvPlan {
            shape,
            pad: [pad0, pad1],
            kfft: kpad,
            fwd0,
            inv0,
            fwd1,
            inv1,
        };
        let mut buf = std::mem::take(&mut plan.kfft);
        plan.fft2(&mut buf, true);
        plan.kfft = buf;
        plan
    }

    fn fft2(&self, data: &mut [Complex<f64>], forward: bool) {
        let [p0, p1] = self.pad;
        if p1 > 1 {
            let f1 = if forward {
                self.fwd1.as_ref().unwrap()
            } else {
                self.inv1.as_ref().unwrap()
            };
            for r in 0..p0 {
                f1.process(&mut data[r * p1..(r + 1) * p1]);
            }
            // columns via transpose
            let mut col = vec![Complex::new(0.0, 0.0); p0];
            let f0 = if forward { &self.fwd0 } else { &self.inv0 };
            for c in 0..p1 {
                for r in 0..p0 {
                    col[r] = data[r * p1 + c];
                }
                f0.process(&mut col);
                for r in 0..p0 {
                    data[r * p1 + c] = col[r];
                }
            }
        } else {
            let f0 = if forward { &self.fwd0 } else { &self.inv0 };
            f0.process(data);
        }
    }

    /// Convolve a scalar per-cell array with the kernel weights.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let [s0, s1] = self.shape;
        let [p0, p1] = self.pad;
        debug_assert_eq!(field.len(), s0 * s1);
        let mut data = vec![Complex::new(0.0, 0.0); p0 * p1];
        for r in 0..s0 {
            for c in 0..s1 {
                data[r * p1 + c] = Complex::new(field[r * s1 + c], 0.0);
            }
        }
        let mut buf = data;
        self.fft2(&mut buf, true);
        for (v, k) in buf.iter_mut().zip(&self.kfft) {
            *v *= *k;
        }
        self.fft2(&mut buf, false);
        let scale = 1.0 / (p0 * p1) as f64;
        let mut out = vec![0.0; s0 * s1];
        for r in 0..s0 {
            for c in 0..s1 {
                out[r * s1 + c] = buf[r * p1 + c].re * scale;
            }
        }
        out
    }
}

/// Direct offset-sum reference: exact, order-fixed summation.
pub fn direct_apply(lattice: &Lattice, kt: &KernelTable, field: &[f64]) -> Vec<f64> {
    let [s0, s1] = lattice.shape;
    let mut out = vec![0.0; s0 * s1];
    let k = kt.k_cells;
    for i0 in 0..s0 as i64 {
        for i1 in 0..s1 as i64 {
            let mut acc = 0.0;
            for o0 in -k..=k {
                let j0 = i0 + o0;
                if j0 < 0 || j0 >= s0 as i64 {
                    continue;
                }
                for o1 in -k..=k {
                    let j1 = i1 + o1;
                    if j1 < 0 || j1 >= s1 as i64 {
                        continue;
                    }
                    let w = kt.weight(o0, o1);
                    if w != 0.0 {
                        acc += w * field[(j0 as usize) * s1 + j1 as usize];
                    }
                }
            }
            out[(i0 as usize) * s1 + i1 as usize] = acc;
        }
    }
    out
}
