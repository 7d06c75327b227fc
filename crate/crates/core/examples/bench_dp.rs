use singlab_core::data::{sample_dataset, SeedSpec};
use singlab_core::evidence::dp;
use singlab_core::evidence::CompleteConsts;
use singlab_core::model::*;
use std::time::Instant;

fn main() {
    let spec = MixtureSpec::new(
        Family::Binomial { trials: 3 }, 2,
        PriorHyper { eta1: 0.25, component: ComponentPrior::Beta { alpha: 1.0, beta: 1.0 } },
    ).unwrap();
    let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
    for n in [100usize, 400, 800, 1600] {
        let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(1009), 0);
        let t0 = Instant::now();
        let table = dp::CountTable::ways(ds.histogram().unwrap());
        let build = t0.elapsed();
        let consts = CompleteConsts::for_dataset(&ds, &spec);
        let t1 = Instant::now();
        let lz = dp::log_evidence_from_table(&table, &spec, consts.ln_const).unwrap();
        let eval = t1.elapsed();
        println!("M=3 n={n}: build {build:?} eval {eval:?} logz {lz:.3}");
    }
    // Regular control: M=8 separated
    let spec8 = MixtureSpec::new(
        Family::Binomial { trials: 8 }, 2,
        PriorHyper { eta1: 1.0, component: ComponentPrior::Beta { alpha: 1.0, beta: 1.0 } },
    ).unwrap();
    let tm8 = TrueModel::new(&spec8.family, vec![0.3, 0.7], vec![0.2, 0.8]).unwrap();
    for n in [200usize, 400, 800] {
        let ds = sample_dataset(&tm8, &spec8, n, SeedSpec::new(1009), 0);
        let t0 = Instant::now();
        let table = dp::CountTable::ways(ds.histogram().unwrap());
        let build = t0.elapsed();
        let t1 = Instant::now();
        let hist = ds.histogram().unwrap();
        let r: Vec<f64> = (0..hist.len()).map(|m| tm8.label_posterior(&spec8.family, m as f64)[0]).collect();
        let cond = dp::CountTable::conditional(hist, &r);
        let cbuild = t1.elapsed();
        let consts = CompleteConsts::for_dataset(&ds, &spec8);
        let lz = dp::log_evidence_from_table(&table, &spec8, consts.ln_const).unwrap();
        let e = dp::expected_log_evidence(&cond, &spec8, consts.ln_const).unwrap();
        println!("M=8 n={n}: ways {build:?} cond {cbuild:?} logz {lz:.3} E[lnZxy] {e:.3}");
    }
}
