use rayon::prelude::*;
use singlab_core::data::{sample_dataset, SeedSpec};
use singlab_core::evidence::quad::{posterior_region_masses, QuadConfig};
use singlab_core::model::*;
use singlab_core::posterior::RegionSet;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m_trials: u32 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(8);
    let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();
    for eta in [0.25f64, 2.0] {
        let spec = MixtureSpec::new(
            Family::Binomial { trials: m_trials }, 2,
            PriorHyper { eta1: eta, component: ComponentPrior::Beta { alpha: 1.0, beta: 1.0 } },
        ).unwrap();
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for n in [100usize, 200, 400, 800, 1000, 1600] {
            let stats: Vec<_> = (0..12u64).into_par_iter().map(|task| {
                let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(1009), 2000 + task);
                posterior_region_masses(&ds, &spec, &regions, &QuadConfig::default()).unwrap()
            }).collect();
            let k = stats.len() as f64;
            let u13: f64 = stats.iter().map(|m| m.w1 + m.w3 - m.w13).sum::<f64>() / k;
            let w2: f64 = stats.iter().map(|m| m.w2).sum::<f64>() / k;
            let w2x: f64 = stats.iter().map(|m| m.w2_exclusive()).sum::<f64>() / k;
            let w13x: f64 = stats.iter().map(|m| m.w13_exclusive()).sum::<f64>() / k;
            let rest: f64 = stats.iter().map(|m| m.rest).sum::<f64>() / k;
            let w2min: f64 = stats.iter().map(|m| m.w2).fold(f64::INFINITY, f64::min);
            println!("M={m_trials} eta={eta} n={n}: union13={u13:.4} w2={w2:.4} (min {w2min:.4}) w2x={w2x:.4} w13x={w13x:.4} rest={rest:.4}");
        }
    }
}
