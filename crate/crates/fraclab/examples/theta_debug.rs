use fraclab::extension::*;
use fraclab::kernel::build_kernel;
use fraclab::lattice::{build_lattice, VectorField};
use fraclab::nonlocal::{FarVector, NonlocalOps};

fn main() {
    let h = 1.0 / 128.0;
    let lat = build_lattice(1, h, [-1.0, 0.0], [1.0, 0.0], 2.0, 2.0).unwrap();
    let kt = build_kernel(&lat, 0.25).unwrap();
    let ops = NonlocalOps::new(&lat, &kt);
    let mut u = VectorField::zeros(&lat, 1);
    for i in 0..lat.cell_count() {
        let x = lat.center(i)[0];
        u.values[i] = if x < 0.0 { -1.0 } else { 1.0 };
    }
    let far = FarVector::AxisStep { axis: 0, threshold: 0.0, neg: vec![-1.0], pos: vec![1.0] };
    let levels = geometric_levels(h / 4.0, 1.15, 1.5);
    println!("levels: {} zmax {}", levels.len(), levels.last().unwrap());
    let slab = poisson_extend(&ops, &u, &far, &levels).unwrap();
    // profile at a few heights
    for (k, &z) in slab.z_levels.iter().enumerate().step_by(8) {
        let mid = lat.cell_count() / 2;
        let v0 = slab.values[k].values[mid];
        let v1 = slab.values[k].values[mid + 32];
        let v_far = slab.values[k].values[mid + 256];
        println!("z={z:.4}: v(0)={v0:.4} v(0.25)={v1:.4} v(2.0)={v_far:.4}");
    }
    for r in [0.15, 0.3, 0.6, 1.2] {
        let th = density_theta(&slab, None, None, [0.0, 0.0], r).unwrap();
        println!("r={r}: theta={th:.5} E={:.5}", th * r.powf(0.5));
    }
}
