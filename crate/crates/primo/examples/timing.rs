use primo::bench::load_benchmark;
use primo::harness::ensure_prior;
use primo::optimize::*;
use primo::prior::{PriorQuality, PriorSet};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["bisphere-2d", "bisphere-2d-bias", "bisphere-4d", "bisphere-4d-bias"] {
        let bench = load_benchmark(name).unwrap();
        let good = PriorSet::new((0..2).map(|i| ensure_prior(bench.as_ref(), i, PriorQuality::Good, dir.path(), 20_240_817).unwrap()).collect()).unwrap();
        let bad = PriorSet::new((0..2).map(|i| ensure_prior(bench.as_ref(), i, PriorQuality::Bad, dir.path(), 20_240_817).unwrap()).collect()).unwrap();
        let cfg = PrimoConfig { budget: 20.0, ..Default::default() };
        let seeds: Vec<u64> = (0..25).collect();
        let collect = |f: &dyn Fn(u64) -> RunResult| -> (Vec<f64>, Vec<f64>) {
            let finals: Vec<RunResult> = seeds.iter().map(|&s| f(s)).collect();
            (finals.iter().map(|r| r.final_hv()).collect(),
             finals.iter().map(|r| r.hv_at(5).unwrap_or(0.0)).collect())
        };
        let (primo_good, primo_good5) = collect(&|s| primo_run(bench.as_ref(), Some(&good), &cfg, s).unwrap());
        let (primo_bad, _) = collect(&|s| primo_run(bench.as_ref(), Some(&bad), &cfg, s).unwrap());
        let (rs, rs5) = collect(&|s| rs_run(bench.as_ref(), 20.0, s).unwrap());
        let (moasha, moasha5) = collect(&|s| moasha_run(bench.as_ref(), 20.0, s).unwrap());
        let (borw, borw5) = collect(&|s| bo_rw_run(bench.as_ref(), 20.0, s).unwrap());
        let (mp100_bad, _) = collect(&|s| moasha_prior_run(bench.as_ref(), &bad, 1.0, 20.0, s).unwrap());
        println!("=== {name} (best known hv {:.4})", bench.best_known_hv().unwrap());
        for (label, xs) in [("primo/good", &primo_good), ("primo/bad", &primo_bad), ("rs", &rs), ("moasha", &moasha), ("bo-rw", &borw), ("mp100/bad", &mp100_bad)] {
            let (m, se) = mean_se(xs);
            println!("  {label:12} final {m:.4} +- {se:.4}");
        }
        for (label, xs) in [("primo/good@5", &primo_good5), ("rs@5", &rs5), ("moasha@5", &moasha5), ("bo-rw@5", &borw5)] {
            let (m, se) = mean_se(xs);
            println!("  {label:12} k=5   {m:.4} +- {se:.4}");
        }
    }
}
