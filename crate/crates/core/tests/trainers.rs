use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruleshift_core::policy::{
    featurize, make_sft_records, ppo_update, sft_update, ActMode, Adam, Differentiable, FeatureConfig, PpoSample,
    SftMode, SoftmaxBandit, TinyParams, TrainConfig, NUM_PARAMS,
};
use ruleshift_core::EnvSpec;

/// Updates until the better arm reaches probability 0.95, or `None` after 500.
fn bandit_updates_to_solve(seed: u64) -> Option<usize> {
    let cfg = TrainConfig { lr: 0.05, epochs: 4, batch_size: 16, ..TrainConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SoftmaxBandit::new(2);
    let mut opt = Adam::new(b.params.len(), cfg.lr);
    for update in 1..=500 {
        let mut batch: Vec<PpoSample<(), usize>> = (0..16)
            .map(|_| {
                let arm = b.sample(&mut rng);
                let reward = if arm == 1 { 1.0 } else { -1.0 };
                let e = b.evaluate(&(), &arm, None);
                PpoSample { input: (), choice: arm, old_log_prob: e.log_prob, advantage: reward - e.value, ret: reward }
            })
            .collect();
        let stats = ppo_update(&mut b, &mut opt, &mut batch, &cfg, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&stats.clip_fraction));
        if b.probs()[1] >= 0.95 {
            return Some(update);
        }
    }
    None
}

#[test]
fn ppo_solves_two_armed_bandit() {
    let solved: Vec<Option<usize>> = (0..10).map(bandit_updates_to_solve).collect();
    println!("updates to solve: {solved:?}");
    assert!(solved.iter().filter(|s| s.is_some()).count() >= 8, "{solved:?}");
}

#[test]
fn bandit_entropy_falls_from_uniform() {
    let mut b = SoftmaxBandit::new(2);
    let start = b.evaluate(&(), &0, None).entropy;
    assert!((start - 2f64.ln()).abs() < 1e-12);
    let cfg = TrainConfig { lr: 0.05, ..TrainConfig::default() };
    let mut opt = Adam::new(b.params.len(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..50 {
        let mut batch: Vec<_> = (0..16)
            .map(|_| {
                let arm = b.sample(&mut rng);
                let r = if arm == 0 { 1.0 } else { -1.0 };
                let e = b.evaluate(&(), &arm, None);
                PpoSample { input: (), choice: arm, old_log_prob: e.log_prob, advantage: r - e.value, ret: r }
            })
            .collect();
        ppo_update(&mut b, &mut opt, &mut batch, &cfg, &mut rng).unwrap();
    }
    assert!(b.evaluate(&(), &0, None).entropy < start - 0.1);
}

#[test]
fn sft_fits_a_fixed_dataset() {
    let fc = FeatureConfig::default();
    let mut data = Vec::new();
    for spec in [EnvSpec::gp_in_distribution(), EnvSpec::nav_in_distribution()] {
        for r in make_sft_records(&spec, 50, SftMode::ExpertSingleTurn, 21).unwrap() {
            data.push((featurize(&r.snapshot, &fc), r.choice));
        }
    }
    assert_eq!(data.len(), 100);
    // decisions per record: nine heads for GP, one for Nav
    let decisions: usize = data.iter().map(|(x, _)| if x.cards.is_some() { 9 } else { 1 }).sum();
    let mut model = TinyParams::init(0);
    let mut opt = Adam::new(NUM_PARAMS, 1e-2);
    let first = sft_update(&mut model, &mut opt, &data).unwrap();
    let mut last = first;
    for _ in 0..2000 {
        last = sft_update(&mut model, &mut opt, &data).unwrap();
        if last * data.len() as f64 / (decisions as f64) < 0.01 {
            break;
        }
    }
    let per_decision = last * data.len() as f64 / decisions as f64;
    assert!(per_decision < 0.01, "{per_decision}");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (x, c) in &data {
        assert_eq!(model.choose(x, ActMode::Greedy, &mut rng).unwrap(), *c);
    }
}
