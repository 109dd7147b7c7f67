//! Temporary exploration harness (deleted before release).

use streampart_core::engine::{run, EngineConfig};
use streampart_core::metrics::edge_cut;
use streampart_core::order::StreamOrder;
use streampart_core::score::ScoreKind;
use streampart_core::synth::{planted_partition, PlantedConfig};

fn corpus(seed: u64, hubs: bool) -> streampart_core::StreamGraph {
    let mut cfg = PlantedConfig::new(10_000, 16, 80_000, 10.0 / 11.0, seed);
    if hubs {
        cfg = cfg.with_hubs(8, 300);
    }
    planted_partition(&cfg).0
}

fn run_one(
    g: &streampart_core::StreamGraph,
    order: &StreamOrder,
    k: u32,
    q_max: usize,
    delta: usize,
    kind: ScoreKind,
    d_max: u32,
) -> (f64, f64) {
    let mut cfg: EngineConfig<f64> = EngineConfig::new(k);
    cfg.q_max = q_max;
    cfg.delta = delta;
    cfg.d_max = d_max;
    cfg.scoring = cfg.scoring.with_kind(kind);
    cfg.stop_size = Some(64);
    let result = run(g, order, &cfg).unwrap();
    let (_, ratio) = edge_cut::<f64>(g, &result.state).unwrap();
    (ratio, result.ier_mean().unwrap_or(0.0))
}

#[test]
#[ignore]
fn explore_buffer_trend() {
    let t0 = std::time::Instant::now();
    for q_max in [1usize, 1024, 8192] {
        let mut cuts = Vec::new();
        let mut iers = Vec::new();
        for seed in 0..5u64 {
            let g = corpus(seed, false);
            let order = StreamOrder::random(g.n(), seed + 100);
            let (cut, ier) = run_one(&g, &order, 16, q_max, 512, ScoreKind::Haa, 10_000);
            cuts.push(cut);
            iers.push(ier);
        }
        let cut = cuts.iter().sum::<f64>() / 5.0;
        let ier = iers.iter().sum::<f64>() / 5.0;
        println!("q_max={q_max:6} mean_cut={cut:.4} mean_ier={ier:.4} elapsed={:?}", t0.elapsed());
    }
}

#[test]
#[ignore]
fn explore_batch_trend() {
    let t0 = std::time::Instant::now();
    for delta in [256usize, 512, 1024, 4096] {
        let mut cuts = Vec::new();
        for seed in 0..5u64 {
            let g = corpus(seed, false);
            let order = StreamOrder::random(g.n(), seed + 100);
            let (cut, _) = run_one(&g, &order, 16, 8192, delta, ScoreKind::Haa, 10_000);
            cuts.push(cut);
        }
        let cut = cuts.iter().sum::<f64>() / 5.0;
        println!("delta={delta:6} mean_cut={cut:.4} elapsed={:?}", t0.elapsed());
    }
}

#[test]
#[ignore]
fn explore_scores2() {
    // hubs below the bypass threshold: degree ~190 vs d_max 256
    for (extra, d_max) in [(180usize, 256u32), (180, 512), (120, 256)] {
        for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Cbs] {
            let mut logsum = 0.0;
            for seed in 0..5u64 {
                let h = 8 * 16 * extra;
                let base = 80_000 - h;
                let frac = (80_000.0 * 10.0 / 11.0 - h as f64) / base as f64;
                let cfg_g = PlantedConfig::new(10_000, 16, base, frac, seed).with_hubs(8, extra);
                let (g, _) = planted_partition(&cfg_g);
                let order = StreamOrder::random(g.n(), seed + 100);
                let (cut, _) = run_one(&g, &order, 16, 8192, 512, kind, d_max);
                logsum += cut.max(1e-9).ln();
            }
            let geo = (logsum / 5.0).exp();
            println!("extra={extra} d_max={d_max:5} kind={kind:?} geo_cut={geo:.4}");
        }
    }
}

#[test]
#[ignore]
fn explore_scores() {
    for (hubs, d_max) in [(false, 10_000u32), (true, 256), (true, 64)] {
        for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Cbs, ScoreKind::Nss, ScoreKind::Cms] {
            let mut logsum = 0.0;
            for seed in 0..5u64 {
                let g = corpus(seed, hubs);
                let order = StreamOrder::random(g.n(), seed + 100);
                let (cut, _) = run_one(&g, &order, 16, 8192, 512, kind, d_max);
                logsum += cut.max(1e-9).ln();
            }
            let geo = (logsum / 5.0).exp();
            println!("hubs={hubs} d_max={d_max:5} kind={kind:?} geo_cut={geo:.4}");
        }
    }
}

#[test]
#[ignore]
fn explore_restream_and_parallel() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
    let mut log1 = 0.0;
    let mut log2 = 0.0;
    let mut logp = 0.0;
    let count = 50;
    for i in 0..count {
        let n = rng.random_range(200..=2000);
        let m = rng.random_range(2 * n..6 * n);
        let g = streampart_core::synth::random_graph(n, m, 9000 + i);
        let order = StreamOrder::random(n, i);
        for (passes, parallel, acc) in
            [(1u32, false, &mut log1), (2, false, &mut log2), (1, true, &mut logp)]
        {
            let mut cfg: EngineConfig<f64> = EngineConfig::new(8);
            cfg.q_max = 256;
            cfg.delta = 64;
            cfg.passes = passes;
            cfg.parallel = parallel;
            let result = run(&g, &order, &cfg).unwrap();
            let (cut, _) = edge_cut::<f64>(&g, &result.state).unwrap();
            *acc += (cut as f64).max(1e-9).ln();
        }
    }
    let g1 = (log1 / count as f64).exp();
    let g2 = (log2 / count as f64).exp();
    let gp = (logp / count as f64).exp();
    println!("geo cut 1-pass={g1:.2} 2-pass={g2:.2} parallel={gp:.2}");
    println!("2-pass improvement: {:.2}%", 100.0 * (1.0 - g2 / g1));
    println!("parallel vs sequential: {:.2}%", 100.0 * (gp / g1 - 1.0));
}

#[test]
#[ignore]
fn explore_debug_one_run() {
    let g = corpus(0, false);
    let (_, community) = planted_partition(&PlantedConfig::new(10_000, 16, 80_000, 10.0 / 11.0, 0));
    let order = StreamOrder::random(g.n(), 100);
    for q_max in [1024usize, 8192] {
        let mut cfg: EngineConfig<f64> = EngineConfig::new(16);
        cfg.q_max = q_max;
        cfg.delta = 512;
        let result = run(&g, &order, &cfg).unwrap();
        let (cut, ratio) = edge_cut::<f64>(&g, &result.state).unwrap();
        println!("=== q_max={q_max} cut={cut} ratio={ratio:.4} batches={}", result.batch_stats.len());
        for b in result.batch_stats.iter() {
            println!("  pass={} idx={} size={} ier={:.3} cut_after={}", b.pass, b.index, b.size, b.ier, b.cut_after);
        }
        // community -> block purity
        let mut major = vec![std::collections::HashMap::<u32, usize>::new(); 16];
        for v in 0..g.n() {
            *major[community[v] as usize].entry(result.state.block_of(v as u32).unwrap()).or_insert(0) += 1;
        }
        for (c, m) in major.iter().enumerate() {
            let mut counts: Vec<(u32, usize)> = m.iter().map(|(a, b)| (*a, *b)).collect();
            counts.sort_by_key(|x| std::cmp::Reverse(x.1));
            println!("  community {c}: {:?}", &counts[..counts.len().min(4)]);
        }
        println!("  block weights: {:?}", result.state.block_weights());
    }
}
