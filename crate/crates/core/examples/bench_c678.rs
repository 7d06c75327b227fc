use rayon::prelude::*;
use singlab_core::data::{sample_dataset, SeedSpec};
use singlab_core::evidence::quad::{posterior_region_masses, QuadConfig};
use singlab_core::latent::{peak_assignment, PeakMethod};
use singlab_core::model::*;
use singlab_core::posterior::RegionSet;
use singlab_core::sampler::*;

fn spec(m: u32, eta: f64, a: f64) -> MixtureSpec {
    MixtureSpec::new(
        Family::Binomial { trials: m }, 2,
        PriorHyper { eta1: eta, component: ComponentPrior::Beta { alpha: a, beta: a } },
    ).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: u32 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(16);
    let ca: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.25);
    let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();

    // Criterion 6 shape: mean masses at n=1600, both etas, 20 reps.
    for eta in [0.25, 2.0] {
        let sp = spec(m, eta, ca);
        let tm = TrueModel::new(&sp.family, vec![1.0], vec![0.5]).unwrap();
        let ms: Vec<_> = (0..20u64).into_par_iter().map(|t| {
            let ds = sample_dataset(&tm, &sp, 1600, SeedSpec::new(1009), 3000 + t);
            posterior_region_masses(&ds, &sp, &regions, &QuadConfig::default()).unwrap()
        }).collect();
        let u13 = ms.iter().map(|x| x.w1 + x.w3 - x.w13).sum::<f64>() / 20.0;
        let w2 = ms.iter().map(|x| x.w2).sum::<f64>() / 20.0;
        println!("C6 M={m} a={ca} eta={eta} n=1600: mean union13={u13:.4} mean w2={w2:.4}");
    }

    // Criterion 7: eta=2, n=1000, 20 replicates: per-dataset gibbs occ13 and mass w2.
    for eta in [2.0, 0.25] {
        let sp = spec(m, eta, ca);
        let tm = TrueModel::new(&sp.family, vec![1.0], vec![0.5]).unwrap();
        let res: Vec<(f64, f64, f64)> = (0..20u64).into_par_iter().map(|t| {
            let ds = sample_dataset(&tm, &sp, 1000, SeedSpec::new(1009), 4000 + t);
            let mass = posterior_region_masses(&ds, &sp, &regions, &QuadConfig::default()).unwrap();
            let trace = gibbs_run(&ds, &sp, 50_000, 5_000, 10, SeedSpec::new(500 + t), Some(&regions), false).unwrap();
            let occ = occupancy_stats(&trace, &regions).unwrap();
            (occ.w13(), mass.w2, mass.w1 + mass.w3 - mass.w13)
        }).collect();
        let ok2 = res.iter().filter(|(o, w2, _)| *o >= 0.9 && *w2 >= 0.9).count();
        let ok025 = res.iter().filter(|(o, _, u)| *o >= 0.9 && *u >= 0.9).count();
        let mean_occ: f64 = res.iter().map(|r| r.0).sum::<f64>() / 20.0;
        println!("C7 M={m} a={ca} eta={eta} n=1000: mean occ13={mean_occ:.4} joint(eta2-style) {ok2}/20 joint(eta.25-style) {ok025}/20");
    }

    // Criterion 8: eta=2, n=500: MH samples, peak query.
    let sp = spec(m, 2.0, ca);
    let tm = TrueModel::new(&sp.family, vec![1.0], vec![0.5]).unwrap();
    let res: Vec<(f64, f64)> = (0..20u64).into_par_iter().map(|t| {
        let ds = sample_dataset(&tm, &sp, 500, SeedSpec::new(1009), 5000 + t);
        let peak = peak_assignment(&ds, &sp, PeakMethod::IcmRestarts { restarts: 10, seed: 60 + t }).unwrap();
        let chain = posterior_param_chain(&ds, &sp, 20_000, 4_000, 5, SeedSpec::new(700 + t)).unwrap();
        let cmp = compare_py_estimates(&ds, &peak.labels, &chain, &sp).unwrap();
        (cmp.log_mc, cmp.log_exact)
    }).collect();
    let wins = res.iter().filter(|(mc, ex)| mc < ex).count();
    println!("C8 M={m} a={ca} eta=2 n=500: log_mc<log_exact in {wins}/20");
    for (i, (mc, ex)) in res.iter().enumerate().take(6) {
        println!("   rep{i}: mc={mc:.3} exact={ex:.3}");
    }
}
