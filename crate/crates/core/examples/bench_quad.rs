use singlab_core::data::{sample_dataset, SeedSpec};
use singlab_core::evidence::quad::{posterior_region_masses, QuadConfig};
use singlab_core::evidence::dp;
use singlab_core::model::*;
use singlab_core::posterior::RegionSet;
use std::time::Instant;

fn main() {
    let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();
    for eta in [0.25, 2.0] {
        let spec = MixtureSpec::new(
            Family::Binomial { trials: 3 }, 2,
            PriorHyper { eta1: eta, component: ComponentPrior::Beta { alpha: 1.0, beta: 1.0 } },
        ).unwrap();
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for n in [100usize, 400, 1000, 1600] {
            let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(1009), 0);
            let t0 = Instant::now();
            let m = posterior_region_masses(&ds, &spec, &regions, &QuadConfig::default()).unwrap();
            let dt = t0.elapsed();
            let exact_w2 = if n <= 400 {
                let b = regions.boxes();
                dp::region_mass_exact(&ds, &spec, (0.0,1.0), (b.w2.b1_lo, b.w2.b1_hi), (b.w2.b2_lo, b.w2.b2_hi)).unwrap()
            } else { f64::NAN };
            println!("eta={eta} n={n}: {dt:?} w1={:.4} w2={:.4} (exact {exact_w2:.4}) w3={:.4} rest={:.4} w13x={:.4} w2x={:.4} err={:.2e} logz={:.3}",
                m.w1, m.w2, m.w3, m.rest, m.w13_exclusive(), m.w2_exclusive(), m.err_est, m.log_z);
        }
    }
}
