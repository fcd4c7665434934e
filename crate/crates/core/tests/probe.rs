// Temporary calibration probe; removed once settings are pinned.
use lvbench::bits::Configuration;
use lvbench::embedding::{qubo_to_ising, rbm_to_qubo};
use lvbench::inference::{classification_error, Engine};
use lvbench::lv::{p_gs, scan_lvs_from_samples, scan_lvs_from_seeds, spearman};
use lvbench::model::RbmModel;
use lvbench::rng::derive_rng;
use lvbench::samplers::{relax_to_minimum, sqa_sample, AnnealSchedule};
use lvbench::training::{load_optdigits, train, TrainingConfig};
use std::time::Instant;

#[test]
#[ignore]
fn probe_desk_scale() {
    let t0 = Instant::now();
    let ds = load_optdigits(std::path::Path::new("../../data/optdigits.csv"), 8, None, 10).unwrap();
    let n_train: usize = std::env::var("PROBE_NTRAIN").ok().and_then(|s| s.parse().ok()).unwrap_or(100);
    let n_h: usize = std::env::var("PROBE_NH").ok().and_then(|s| s.parse().ok()).unwrap_or(48);
    let epochs: usize = std::env::var("PROBE_EPOCHS").ok().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let decay: f64 = std::env::var("PROBE_DECAY").ok().and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let (train_set, test_set) = ds.split(n_train, 150, 1).unwrap();
    println!("[{:?}] dataset loaded: {} train / {} test, n_h={n_h}, decay={decay}", t0.elapsed(), train_set.len(), test_set.len());

    let mut rng = derive_rng(7, 0);
    let m0 = RbmModel::<f64>::random_init(train_set.pattern_len(), n_h, 0.01, &mut rng);
    let config = TrainingConfig {
        k_g: 5,
        learning_rate: 0.05,
        epochs,
        batch_size: 10,
        weight_decay: decay,
        weight_cap: Some(1.0),
        rng_seed: 11,
        checkpoint_epochs: vec![5, 20, 90, 300, 600, 1000, 1400, 2000],
    };
    let mut eval = |model: &RbmModel<f64>, epoch: usize| {
        let engine = Engine::Mcmc { burn_in: 400, votes: 100 };
        let err = classification_error(model, &test_set, &engine, 1000 + epoch as u64).unwrap();
        println!("[{:?}] epoch {epoch}: classif_error {err}", t0.elapsed());
        err
    };
    let out = train(&m0, &train_set, &config, Some(&mut eval)).unwrap();
    println!("[{:?}] training done, max|w| = {}", t0.elapsed(), out.model.max_abs_weight());

    // criterion 9 probe: N_LV at kG=1 vs kG=100, N_smp = 1000 (n_rpt 10)
    let seeds: Vec<Configuration> = train_set
        .patterns
        .iter()
        .map(|p| Configuration::from_visible(p.clone(), n_h))
        .collect();
    for (epoch, model) in &out.checkpoints {
        if *epoch < 300 {
            continue;
        }
        let c1 = scan_lvs_from_seeds(model, &seeds, 1, 1.0, 10, 21, format!("e{epoch}")).unwrap();
        let c100 = scan_lvs_from_seeds(model, &seeds, 100, 1.0, 10, 21, format!("e{epoch}")).unwrap();
        println!(
            "[{:?}] epoch {epoch}: N_LV(kG=1) = {}, N_LV(kG=100) = {}, rel diff {:.3}",
            t0.elapsed(),
            c1.n_lv(),
            c100.n_lv(),
            (c100.n_lv() as f64 - c1.n_lv() as f64) / c1.n_lv() as f64
        );
    }
}

#[test]
#[ignore]
fn probe_nine_tp_sqa() {
    let t0 = Instant::now();
    let ds = load_optdigits(std::path::Path::new("../../data/optdigits.csv"), 8, None, 10).unwrap();
    let (nine, _) = ds.split(9, 0, 1).unwrap();
    let mut rng = derive_rng(7, 1);
    let n_h = 16;
    let m0 = RbmModel::<f64>::random_init(nine.pattern_len(), n_h, 0.01, &mut rng);
    let config = TrainingConfig {
        k_g: 5,
        learning_rate: 0.05,
        epochs: 300,
        batch_size: 3,
        weight_decay: 1e-4,
        weight_cap: Some(1.0),
        rng_seed: 13,
        checkpoint_epochs: vec![],
    };
    let out = train(&m0, &nine, &config, None).unwrap();
    println!("[{:?}] 9-TP model trained, max|w| = {}", t0.elapsed(), out.model.max_abs_weight());

    let ising = qubo_to_ising(&rbm_to_qubo(&out.model));
    let grid = [10usize, 100, 1000, 10000];
    let n_reads = 20;
    let n_dw = 5;
    let mut best = f64::INFINITY;
    let mut all_sets = Vec::new();
    for &sweeps in &grid {
        for call in 0..n_dw {
            let sched = AnnealSchedule::sqa(sweeps, 0.1, 3.0, 0.05, 8);
            let set = sqa_sample(&ising, &sched, n_reads, 900 + call).unwrap();
            for (state, _) in set.entries() {
                let e = ising.energy(state).unwrap();
                if e < best {
                    best = e;
                }
                // also relax in model space for a better GS bound
                let cfg = Configuration::from_flat(state, out.model.n_v()).unwrap();
                let lm = relax_to_minimum(&out.model, &cfg).unwrap();
                let elm = ising.energy(&lm.flat()).unwrap();
                if elm < best {
                    best = elm;
                }
            }
            all_sets.push((sweeps, call, set));
        }
        println!("[{:?}] sweeps {sweeps} sampled", t0.elapsed());
    }
    println!("best-known GS energy: {best}");
    let mut pgs_curve = Vec::new();
    let mut nlv_curve = Vec::new();
    for &sweeps in &grid {
        let mut pgs_acc = 0.0;
        let mut nlv_acc = 0.0;
        let mut n = 0.0;
        for (s, _call, set) in all_sets.iter().filter(|(s, _, _)| *s == sweeps) {
            assert_eq!(*s, sweeps);
            let pg = p_gs(set, |st| ising.energy(st).unwrap(), best, 1e-6).unwrap();
            let cat = scan_lvs_from_samples(&out.model, set, "nine", 9).unwrap();
            pgs_acc += pg;
            nlv_acc += cat.n_lv() as f64;
            n += 1.0;
        }
        pgs_curve.push(pgs_acc / n);
        nlv_curve.push(nlv_acc / n);
        println!(
            "sweeps {sweeps}: P_GS = {:.4}, N_LV = {:.2}",
            pgs_acc / n,
            nlv_acc / n
        );
    }
    let xs: Vec<f64> = grid.iter().map(|&s| (s as f64).ln()).collect();
    println!(
        "spearman(P_GS) = {:.3}, spearman(N_LV) = {:.3}  [{:?}]",
        spearman(&xs, &pgs_curve),
        spearman(&xs, &nlv_curve),
        t0.elapsed()
    );
}

#[test]
#[ignore]
fn probe_bipartite_embedding() {
    use lvbench::embedding::{find_embedding, HardwareGraph};
    let t0 = Instant::now();
    for (n_v, n_h, nodes) in [(26usize, 8usize, 240usize), (26, 12, 320), (16, 8, 160)] {
        let mut edges = Vec::new();
        for j in 0..n_v {
            for i in 0..n_h {
                edges.push((j, n_v + i));
            }
        }
        let mut ok = 0;
        let mut max_chain = Vec::new();
        let mut phys = Vec::new();
        for seed in 0..5u64 {
            let mut rng = derive_rng(seed, 9);
            let hw = HardwareGraph::synthetic(nodes, 15, &mut rng);
            match find_embedding(&edges, n_v + n_h, &hw, 16, &mut rng) {
                Ok(emb) => {
                    ok += 1;
                    max_chain.push(emb.max_chain_len());
                    phys.push(emb.total_nodes());
                }
                Err(_) => {}
            }
        }
        println!(
            "K_{{{n_v},{n_h}}} into {nodes} nodes: {ok}/5 ok, max_chain {max_chain:?}, phys {phys:?} [{:?}]",
            t0.elapsed()
        );
    }
}
