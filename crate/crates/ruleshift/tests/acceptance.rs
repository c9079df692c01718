//! Acceptance gate: runs every primary criterion at its stated tolerance and
//! prints one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use ruleshift_core::evalkit::{
    flops_rl, flops_rl_exact, flops_sft, flops_sft_exact, per_step_accuracy, success_rate, EnvKind, FlopsConfig,
    Lambda, SavGol,
};
use ruleshift_core::gp::{
    numbers_of, sample_quadruple, solve, Card, ColorFilter, FaceRule, GpEnv, Modality, Rank, RuleConfig, Sampling,
    Suit, FAILURE_TEXT,
};
use ruleshift_core::nav::{ActionSpace, NavConfig, NavEnv, Route};
use ruleshift_core::policy::{
    featurize, make_sft_records, matches_expert, ppo_update, sft_update, ActMode, Adam, Choice, Differentiable,
    ExpertPolicy, FeatureConfig, PpoSample, RandomPolicy, SftMode, SoftmaxBandit, TinyParams, TinyPolicy,
    TrainConfig, Weights, NUM_PARAMS,
};
use ruleshift_core::revision::{
    build_prompt, prompt_hash, run_episode, Act, Environment, Observation, Policy, PolicyError, Transcript, Turn,
};
use ruleshift_core::seed::{derive_seed, rng_from_seed};
use ruleshift_core::{EnvSpec, VerdictClass};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Solver vs. an exhaustive pairwise-reduction oracle over exact fractions.

#[derive(Clone, Copy, PartialEq)]
struct Frac(i128, i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn frac(n: i128, d: i128) -> Frac {
    let g = gcd(n, d).max(1);
    let s = if d < 0 { -1 } else { 1 };
    Frac(s * n / g, s * d / g)
}

/// Every value reachable by repeatedly combining two of the numbers.
fn oracle_reaches(nums: &[Frac], target: Frac) -> bool {
    if nums.len() == 1 {
        return nums[0] == target;
    }
    for i in 0..nums.len() {
        for j in 0..nums.len() {
            if i == j {
                continue;
            }
            let (a, b) = (nums[i], nums[j]);
            let rest: Vec<Frac> = (0..nums.len()).filter(|&k| k != i && k != j).map(|k| nums[k]).collect();
            let mut cands = vec![
                frac(a.0 * b.1 + b.0 * a.1, a.1 * b.1),
                frac(a.0 * b.1 - b.0 * a.1, a.1 * b.1),
                frac(a.0 * b.0, a.1 * b.1),
            ];
            if b.0 != 0 {
                cands.push(frac(a.0 * b.1, a.1 * b.0));
            }
            for c in cands {
                let mut next = rest.clone();
                next.push(c);
                if oracle_reaches(&next, target) {
                    return true;
                }
            }
        }
    }
    false
}

fn multisets() -> Vec<[u64; 4]> {
    let mut out = Vec::new();
    for a in 1..=13 {
        for b in a..=13 {
            for c in b..=13 {
                for d in c..=13 {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let sets = multisets();
    ensure(sets.len() == 1820, || format!("{} multisets", sets.len()))?;
    let mut solvable = 0;
    for target in [24u64, 10] {
        let mismatches: Vec<[u64; 4]> = sets
            .par_iter()
            .filter(|s| {
                let nums: Vec<Frac> = s.iter().map(|&v| Frac(v as i128, 1)).collect();
                let oracle = oracle_reaches(&nums, Frac(target as i128, 1));
                let ours = solve(s, target);
                if let Some(sol) = &ours {
                    let v = sol.expr.evaluate().ok();
                    if v != Some(ruleshift_core::Rational::from_int(target as i64)) {
                        return true;
                    }
                }
                oracle != ours.is_some()
            })
            .copied()
            .collect();
        ensure(mismatches.is_empty(), || format!("target {target}: {} disagreements, e.g. {:?}", mismatches.len(), mismatches.first()))?;
        if target == 24 {
            solvable = sets.iter().filter(|s| solve(s, 24).is_some()).count();
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(300), || format!("took {t:?}"))?;
    Ok(format!("1820 multisets x targets {{24,10}} agree; {solvable} solvable at 24; {:.1}s", t.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// Reward table.

fn hand(cards: [(Rank, Suit); 4]) -> [Card; 4] {
    cards.map(|(r, s)| Card::new(r, s))
}

fn answer(cards: &str, formula: &str) -> String {
    format!("{{\n\"cards\": [{cards}],\n\"number\": [1, 3, 10, 6],\n\"formula\": \"{formula}\",\n}}")
}

fn verdict_table() -> Outcome {
    let fig = hand([(Rank::Ace, Suit::Spade), (Rank::Three, Suit::Heart), (Rank::King, Suit::Club), (Rank::Six, Suit::Diamond)]);
    let cards = "'A', '3', 'K', '6'";
    let rule = RuleConfig::in_distribution();
    let mut checked = 0;
    let mut first_step = |rule: RuleConfig, hand: [Card; 4], text: &str, reward: f64, class: VerdictClass| {
        let mut env = GpEnv::from_cards(rule, hand).unwrap();
        let out = env.step(text).unwrap();
        checked += 1;
        ensure(out.reward == reward && out.verdict == class.name() && out.penalty == 0.0, || {
            format!("{text:?}: got {} {} (penalty {}), want {reward} {}", out.reward, out.verdict, out.penalty, class.name())
        })
    };
    // legal equation equal to the target
    for f in ["10*3-6*1", "10*3-6*1=24", "(10*3)-(6/1)", " 3 * 10 - 6 / 1 "] {
        first_step(rule, fig, &answer(cards, f), 5.0, VerdictClass::Success)?;
    }
    // legal, each card once, wrong value
    for f in ["1+3+10+6", "(10-6)*(3+1)", "(10-6)*(3+1)=16", "6*(10-3-1)", "10*6/3/1=24", "(1-3)*(10-6)"] {
        first_step(rule, fig, &answer(cards, f), -1.0, VerdictClass::WrongValue)?;
    }
    // numbers not among the choices, or cards not used exactly once
    for f in ["(1+6)*3+13=24", "2*12", "(10+6+3)", "1*3*10*6*1", "(10-6)*(3+1)+0"] {
        first_step(rule, fig, &answer(cards, f), -2.0, VerdictClass::IllegalNumbers)?;
    }
    // every other illegal equation
    let twos_fives = hand([(Rank::Two, Suit::Spade), (Rank::Two, Suit::Heart), (Rank::Five, Suit::Club), (Rank::Five, Suit::Diamond)]);
    first_step(rule, twos_fives, &answer("'2', '2', '5', '5'", "(2+2)/(5-5)"), -3.0, VerdictClass::Malformed)?;
    for text in [
        String::new(),
        "The answer is 24.".to_string(),
        answer(cards, "(10-6)*(3+1"),
        answer(cards, "10-6)*(3+1)"),
        answer(cards, "1++3+10+6"),
        answer(cards, "10^2"),
        answer(cards, "-1+3+10+6"),
        "{\"cards\": ['A', '3', 'K', '6'], \"number\": [1, 3, 10, 6]}".to_string(),
    ] {
        first_step(rule, fig, &text, -3.0, VerdictClass::Malformed)?;
    }
    // recognition penalty is additive on top of the formula reward
    let vl = RuleConfig { recognition_channel: true, modality: Modality::VisionLanguage, ..rule };
    first_step(vl, fig, &answer(cards, "10*3-6*1"), 5.0, VerdictClass::Success)?;
    first_step(vl, fig, &answer("'A', '3', 'Q', '6'", "1+3+10+6"), -1.0 - 1.5, VerdictClass::WrongValue)?;
    first_step(vl, fig, &answer("'A', '3', 'K'", "(1+6)*3+13"), -2.0 - 1.5, VerdictClass::IllegalNumbers)?;
    ensure(VerdictClass::RecognitionMismatch.reward() == -1.5, || "recognition row".into())?;
    // exceeding the verification budget
    let mut env = GpEnv::from_cards(rule, fig).unwrap();
    let mut rewards = Vec::new();
    while !env.is_done() {
        let out = env.step(&answer(cards, "1+3+10+6")).unwrap();
        rewards.push((out.reward, out.penalty));
    }
    checked += 1;
    let mut want = vec![(-1.0, 0.0); 4];
    want.push((-1.0, -1.0));
    ensure(rewards == want, || format!("step limit rewards {rewards:?}"))?;
    let rows = [
        VerdictClass::Success,
        VerdictClass::WrongValue,
        VerdictClass::StepLimit,
        VerdictClass::IllegalNumbers,
        VerdictClass::Malformed,
        VerdictClass::RecognitionMismatch,
    ]
    .map(VerdictClass::reward);
    ensure(rows == [5.0, -1.0, -1.0, -2.0, -3.0, -1.5], || format!("table {rows:?}"))?;
    Ok(format!("{checked} crafted answers across all 6 reward rows, exact"))
}

// ---------------------------------------------------------------------------
// Sampling guarantee.

fn sampling_guarantee() -> Outcome {
    let mut configs = Vec::new();
    for face_rule in [FaceRule::AllTen, FaceRule::Ordinal] {
        for sampling in [Sampling::Uniform, Sampling::AtLeastOneFace] {
            for colors in [ColorFilter::All, ColorFilter::Black, ColorFilter::Red] {
                configs.push(RuleConfig { face_rule, sampling, colors, ..RuleConfig::default() });
            }
        }
    }
    for target in [10, 36] {
        configs.push(RuleConfig { target, ..RuleConfig::out_of_distribution() });
    }
    let n = configs.len();
    for rule in configs {
        let bad = (0..10_000u64)
            .into_par_iter()
            .filter(|&i| match sample_quadruple(derive_seed(77, i), &rule) {
                Ok(cards) => {
                    let admitted = cards.iter().all(|c| rule.colors.admits(c));
                    let face = rule.sampling == Sampling::Uniform || cards.iter().any(|c| c.rank.is_face());
                    !(admitted && face && solve(&numbers_of(&cards, &rule), rule.target).is_some())
                }
                Err(_) => true,
            })
            .count();
        ensure(bad == 0, || format!("{rule:?}: {bad} failures"))?;
    }
    Ok(format!("{n} configurations x 10000 quadruples, all solvable and within the rule"))
}

// ---------------------------------------------------------------------------
// Golden prompts.

fn fig_hand() -> [Card; 4] {
    hand([(Rank::Ace, Suit::Spade), (Rank::Three, Suit::Heart), (Rank::King, Suit::Club), (Rank::Six, Suit::Diamond)])
}

fn chinatown() -> Route {
    ruleshift::formats::parse_route(include_str!("../../core/tests/fixtures/chinatown.json"), "chinatown").unwrap()
}

fn golden_prompts() -> Outcome {
    let gp = |face_rule, modality| {
        let rule = RuleConfig { face_rule, modality, ..RuleConfig::default() };
        GpEnv::from_cards(rule, fig_hand()).unwrap().context().to_string()
    };
    let cases = [
        ("GP-L faces=10", gp(FaceRule::AllTen, Modality::Language), include_str!("../../core/tests/golden/gp_l_all_ten.txt")),
        ("GP-L faces=11/12/13", gp(FaceRule::Ordinal, Modality::Language), include_str!("../../core/tests/golden/gp_l_ordinal.txt")),
        ("GP-VL faces=10", gp(FaceRule::AllTen, Modality::VisionLanguage), include_str!("../../core/tests/golden/gp_vl_all_ten.txt")),
    ];
    let mut n = 0;
    for (name, got, want) in cases {
        ensure(got == want, || format!("{name} differs"))?;
        n += 1;
    }
    let mut env = GpEnv::from_cards(RuleConfig::default(), fig_hand()).unwrap();
    let out = include_str!("../../core/tests/golden/gp_response_failure.txt");
    let system = env.context().to_string();
    let step = env.step(out).unwrap();
    let mut t = Transcript::new(system.clone());
    t.turns.push(Turn {
        output: out.into(),
        verifier: step.verifier,
        reward: step.reward,
        penalty: step.penalty,
        correct: step.correct,
        verdict: step.verdict,
        next_context: step.next_context,
        prompt_hash: prompt_hash(&system),
    });
    ensure(build_prompt(&t, 1) == format!("{system}\n{out}\n{FAILURE_TEXT}"), || "GP revision prompt differs".into())?;
    n += 1;
    for (space, want) in [
        (ActionSpace::Absolute, include_str!("../../core/tests/golden/nav_l_absolute_o4.txt")),
        (ActionSpace::Relative, include_str!("../../core/tests/golden/nav_l_relative_o4.txt")),
    ] {
        let mut env = NavEnv::new(Arc::new(chinatown()), NavConfig { action_space: space, ..NavConfig::default() }).unwrap();
        for _ in 0..3 {
            let r = env.expert_response();
            env.step(&r).unwrap();
        }
        ensure(env.context() == want, || format!("nav {space:?} prompt differs"))?;
        if space == ActionSpace::Absolute {
            ensure(env.expert_response() == include_str!("../../core/tests/golden/nav_response_o4.txt"), || "nav response differs".into())?;
        }
        n += 1;
    }
    Ok(format!("{n} prompts byte-identical (both rule texts, both action lists, revision concat)"))
}

// ---------------------------------------------------------------------------
// Sequential revision: recorded prompts vs. stored hashes vs. reconstruction.

struct Recording<P> {
    inner: P,
    prompts: Vec<String>,
}

impl<P: Policy> Policy for Recording<P> {
    fn act(&mut self, obs: &Observation<'_>) -> Result<Act, PolicyError> {
        self.prompts.push(obs.prompt.to_string());
        self.inner.act(obs)
    }
}

fn revision_contract() -> Outcome {
    let specs = [
        EnvSpec::gp_in_distribution(),
        EnvSpec::gp_out_of_distribution(),
        EnvSpec::nav_in_distribution(),
        EnvSpec::nav_out_of_distribution(),
    ];
    let tiny = TinyParams::init(3);
    let results: Vec<Result<usize, String>> = (0..1000u64)
        .into_par_iter()
        .map(|e| {
            let mut rng = rng_from_seed(derive_seed(2024, e));
            let viter = rng.random_range(1..=10);
            let spec = specs[rng.random_range(0..specs.len())].clone().with_verification(viter);
            let mut env = spec.make(derive_seed(4048, e)).map_err(|x| x.to_string())?;
            let transcript = if rng.random_bool(0.5) {
                let mut p = Recording { inner: RandomPolicy::new(e), prompts: vec![] };
                let t = run_episode(&mut env, &mut p);
                (t, p.prompts)
            } else {
                let inner = TinyPolicy::new(tiny.clone(), FeatureConfig::default(), ActMode::Sample, e);
                let mut p = Recording { inner, prompts: vec![] };
                let t = run_episode(&mut env, &mut p);
                (t, p.prompts)
            };
            let (t, prompts) = transcript;
            ensure(prompts.len() == t.turns.len(), || format!("episode {e}: turn count"))?;
            for (k, turn) in t.turns.iter().enumerate() {
                let rebuilt = build_prompt(&t, k);
                ensure(rebuilt == prompts[k], || format!("episode {e} turn {k}: reconstruction differs"))?;
                ensure(prompt_hash(&rebuilt) == turn.prompt_hash, || format!("episode {e} turn {k}: hash mismatch"))?;
            }
            ensure(t.verify_hashes().is_ok(), || format!("episode {e}: verify_hashes"))?;
            Ok(t.turns.len())
        })
        .collect();
    let mut turns = 0;
    for r in results {
        turns += r?;
    }
    Ok(format!("1000 episodes, {turns} turns, 0 mismatches"))
}

// ---------------------------------------------------------------------------
// Baselines.

fn rollouts<P: Policy>(spec: &EnvSpec, n: u64, seed: u64, mk: impl Fn(u64) -> P + Sync) -> Vec<Transcript> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut env = spec.make(derive_seed(seed, i)).unwrap();
            run_episode(&mut env, &mut mk(i))
        })
        .collect()
}

fn expert_baselines() -> Outcome {
    let mut parts = Vec::new();
    for (name, spec, kind) in [
        ("GP-ID", EnvSpec::gp_in_distribution(), EnvKind::Gp),
        ("GP-OOD", EnvSpec::gp_out_of_distribution(), EnvKind::Gp),
        ("Nav-ID", EnvSpec::nav_in_distribution(), EnvKind::Nav),
        ("Nav-OOD", EnvSpec::nav_out_of_distribution(), EnvKind::Nav),
    ] {
        let ts = rollouts(&spec, 1000, 31, |_| ExpertPolicy);
        let s = success_rate(&ts, kind).unwrap();
        let a = per_step_accuracy(&ts).unwrap();
        ensure(s.value == 1.0 && a.value == 1.0, || format!("{name}: success {} per-step {}", s.value, a.value))?;
        parts.push(format!("{name} {}ep/{}dec", s.n, a.n));
    }
    Ok(format!("success 1.0 and per-step 1.0: {}", parts.join(", ")))
}

fn random_relative_nav() -> Outcome {
    let spec = EnvSpec::Nav {
        nav: NavConfig { action_space: ActionSpace::Relative, ..NavConfig::out_of_distribution() },
        routes: Default::default(),
    };
    let mut episodes = 0;
    let mut ts = Vec::new();
    while ts.iter().map(|t: &Transcript| t.turns.len()).sum::<usize>() < 10_000 {
        ts.extend(rollouts(&spec, 500, derive_seed(8, episodes), |i| RandomPolicy::new(derive_seed(9, episodes + i))));
        episodes += 500;
    }
    let a = per_step_accuracy(&ts).unwrap();
    let p = 1.0 / 6.0;
    let half = 2.5758293035489 * (p * (1.0 - p) / a.n as f64).sqrt();
    ensure((a.value - p).abs() <= half, || format!("accuracy {:.5} outside [{:.5}, {:.5}] (n={})", a.value, p - half, p + half, a.n))?;
    Ok(format!("per-step {:.5} over {} decisions; 99% interval [{:.5}, {:.5}]", a.value, a.n, p - half, p + half))
}

// ---------------------------------------------------------------------------
// Trainer sanity.

const FD_H: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;

fn objective<D: Differentiable>(m: &D, x: &D::Input, c: &D::Choice, w: Weights) -> f64 {
    let e = m.evaluate(x, c, None);
    w.log_prob * e.log_prob + w.entropy * e.entropy + w.value * e.value
}

fn fd_worst<D: Differentiable>(m: &mut D, x: &D::Input, c: &D::Choice, w: Weights, probe: &[usize]) -> f64 {
    let mut g = vec![0.0; m.params().len()];
    m.evaluate(x, c, Some((&mut g, w)));
    let mut worst: f64 = 0.0;
    for &i in probe {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + FD_H;
        let up = objective(m, x, c, w);
        m.params_mut()[i] = orig - FD_H;
        let down = objective(m, x, c, w);
        m.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * FD_H);
        let scale = g[i].abs().max(numeric.abs());
        worst = worst.max(if scale < 1e-7 { (g[i] - numeric).abs() } else { (g[i] - numeric).abs() / scale });
    }
    worst
}

fn gradient_checks() -> Result<(usize, f64), String> {
    let mut rng = rng_from_seed(123);
    let mut m = TinyParams::from_values((0..NUM_PARAMS).map(|_| rng.random_range(-0.3..0.3)).collect()).unwrap();
    let fc = FeatureConfig::default();
    let weights = [
        Weights { log_prob: 1.0, entropy: 0.0, value: 0.0 },
        Weights { log_prob: 0.0, entropy: 1.0, value: 0.0 },
        Weights { log_prob: 0.0, entropy: 0.0, value: 1.0 },
        Weights { log_prob: -0.7, entropy: 0.05, value: 0.3 },
    ];
    let mut inputs = Vec::new();
    for (k, spec) in [
        EnvSpec::gp_in_distribution(),
        EnvSpec::gp_out_of_distribution(),
        EnvSpec::nav_in_distribution(),
        EnvSpec::nav_out_of_distribution(),
    ]
    .iter()
    .enumerate()
    {
        let mut env = spec.make(k as u64 + 40).unwrap();
        if k == 1 {
            env.step("wrong").unwrap();
        }
        let x = featurize(&env.snapshot(), &fc);
        let c = m.choose(&x, ActMode::Sample, &mut rng).map_err(|e| e.to_string())?;
        inputs.push((x, c));
    }
    let mut checks = 0;
    let mut worst: f64 = 0.0;
    for (x, c) in &inputs {
        for &w in &weights {
            let mut g = vec![0.0; NUM_PARAMS];
            m.evaluate(x, c, Some((&mut g, w)));
            let mut idx: Vec<usize> = (0..NUM_PARAMS).filter(|&i| g[i] != 0.0).collect();
            idx.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
            let mut probe: Vec<usize> = idx.iter().take(12).copied().collect();
            for _ in 0..12 {
                probe.push(idx[rng.random_range(0..idx.len())]);
                probe.push(rng.random_range(0..NUM_PARAMS));
            }
            worst = worst.max(fd_worst(&mut m, x, c, w, &probe));
            checks += probe.len();
        }
    }
    let mut b = SoftmaxBandit::new(3);
    b.params = vec![0.4, -0.1, 0.2, 0.05];
    for arm in 0..3 {
        for &w in &weights {
            worst = worst.max(fd_worst(&mut b, &(), &arm, w, &[0, 1, 2, 3]));
            checks += 4;
        }
    }
    ensure(worst < FD_TOL, || format!("worst relative error {worst:e}"))?;
    Ok((checks, worst))
}

fn bandit_updates(seed: u64) -> Option<usize> {
    let cfg = TrainConfig { lr: 0.05, epochs: 4, batch_size: 16, ..TrainConfig::default() };
    let mut rng = rng_from_seed(derive_seed(500, seed));
    let mut b = SoftmaxBandit::new(2);
    let mut opt = Adam::new(b.params.len(), cfg.lr);
    for update in 1..=500 {
        let mut batch: Vec<PpoSample<(), usize>> = (0..16)
            .map(|_| {
                let arm = b.sample(&mut rng);
                let reward = if arm == 1 { 1.0 } else { 0.0 };
                let e = b.evaluate(&(), &arm, None);
                PpoSample { input: (), choice: arm, old_log_prob: e.log_prob, advantage: reward - e.value, ret: reward }
            })
            .collect();
        ppo_update(&mut b, &mut opt, &mut batch, &cfg, &mut rng).ok()?;
        if b.probs()[1] >= 0.95 {
            return Some(update);
        }
    }
    None
}

/// Trains on fresh expert records and measures greedy expert-match on a frozen ID set.
fn sft_fit(spec: &EnvSpec, records: usize, epochs: usize) -> Result<(f64, usize), String> {
    let fc = FeatureConfig::default();
    let train = make_sft_records(spec, records, SftMode::ExpertSingleTurn, 1).map_err(|e| e.to_string())?;
    let test = make_sft_records(spec, 2000, SftMode::ExpertSingleTurn, 0xe7a1).map_err(|e| e.to_string())?;
    let mut data: Vec<(_, Choice)> = train.iter().map(|r| (featurize(&r.snapshot, &fc), r.choice)).collect();
    let cfg = TrainConfig::default();
    let mut m = TinyParams::init(0);
    let mut opt = Adam::new(NUM_PARAMS, cfg.lr);
    let mut rng = rng_from_seed(5);
    for _ in 0..epochs {
        data.shuffle(&mut rng);
        for chunk in data.chunks(cfg.batch_size) {
            sft_update(&mut m, &mut opt, chunk).map_err(|e| e.to_string())?;
        }
    }
    let hits = test
        .iter()
        .filter(|r| {
            let c = m.choose(&featurize(&r.snapshot, &fc), ActMode::Greedy, &mut rng).unwrap();
            matches_expert(&r.snapshot, &c)
        })
        .count();
    Ok((hits as f64 / test.len() as f64, test.len()))
}

fn trainer_sanity() -> Outcome {
    let (checks, worst) = gradient_checks()?;
    let solved: Vec<Option<usize>> = (0..10).into_par_iter().map(bandit_updates).collect();
    let ok = solved.iter().filter(|s| s.is_some()).count();
    ensure(ok >= 8, || format!("bandit solved on {ok}/10 seeds: {solved:?}"))?;
    let start = Instant::now();
    let (gp, n_gp) = sft_fit(&EnvSpec::gp_in_distribution(), 40_000, 1)?;
    let (nav, n_nav) = sft_fit(&EnvSpec::nav_in_distribution(), 10_000, 1)?;
    let t = start.elapsed();
    ensure(gp >= 0.99 && nav >= 0.99, || format!("SFT expert-match GP {gp:.4}, Nav {nav:.4}"))?;
    ensure(t < Duration::from_secs(600), || format!("SFT took {t:?}"))?;
    let max_updates = solved.iter().flatten().max().copied().unwrap_or(0);
    Ok(format!(
        "FD worst rel err {worst:.1e} over {checks} partials; bandit solved {ok}/10 (max {max_updates} updates); \
         SFT ID expert-match GP {gp:.4} (n={n_gp}), Nav {nav:.4} (n={n_nav}) in {:.1}s",
        t.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// Experiment harness through the binary.

const HARNESS_CONFIG: &str = "version = 1
seed = 21
[experiment]
init_records = 300
init_epochs = 1
sft_chunk = 150
sft_checkpoints = 3
rl_episodes = 16
rl_iterations = 4
rl_checkpoint_every = 2
eval_episodes = 40
viters = [1, 3, 5, 10]
";

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ruleshift"))
        .args(args)
        .env_remove("RULESHIFT_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn harness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("config.toml");
    std::fs::write(&cfg_path, HARNESS_CONFIG).map_err(|e| e.to_string())?;
    let cfg = cfg_path.to_str().unwrap();
    let runs = dir.path().join("runs");
    for env in ["gp", "nav"] {
        let run = runs.join(env);
        let run = run.to_str().unwrap();
        run_cli(&["--config", cfg, "train", "sft", "--env", env, "--out", run])?;
        run_cli(&["--config", cfg, "train", "rl", "--env", env, "--out", run])?;
        run_cli(&["--config", cfg, "eval", "--in", run])?;
    }
    let csv_path = dir.path().join("report.csv");
    run_cli(&["report", "--in", runs.to_str().unwrap(), "--out", csv_path.to_str().unwrap()])?;

    let mut reader = csv::Reader::from_path(&csv_path).map_err(|e| e.to_string())?;
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    ensure(header == ruleshift::report::CSV_HEADER, || format!("header {header:?}"))?;
    let mut cells = BTreeSet::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let value: f64 = rec[2].parse().map_err(|_| "value".to_string())?;
        let stderr: f64 = rec[3].parse().map_err(|_| "stderr".to_string())?;
        let n: usize = rec[7].parse().map_err(|_| "n".to_string())?;
        let expect = (value * (1.0 - value) / n as f64).sqrt();
        ensure((stderr - expect).abs() < 1e-12, || format!("row {rows}: stderr {stderr} vs {expect}"))?;
        ensure((value * n as f64 - (value * n as f64).round()).abs() < 1e-6, || format!("row {rows}: {value} is not k/{n}"))?;
        if &rec[1] == "success_rate" {
            ensure(n == 40, || format!("row {rows}: success n={n}"))?;
        }
        cells.insert((rec[5].to_string(), rec[4].to_string(), rec[6].to_string()));
        rows += 1;
    }
    for env in ["gp", "nav"] {
        for cond in ["SFT-ID", "SFT-OOD", "RL-ID", "RL-OOD"] {
            for v in ["1", "3", "5", "10"] {
                ensure(cells.contains(&(env.into(), cond.into(), v.into())), || format!("missing {env} {cond} viter {v}"))?;
            }
        }
    }
    let summary = std::fs::read_to_string(dir.path().join("report.directions.tsv")).map_err(|e| e.to_string())?;
    ensure(summary.lines().count() == 1 + 2 * 2 * 4, || "direction summary rows".into())?;
    Ok(format!("{rows} csv rows covering GP/Nav x SFT/RL x ID/OOD x viter {{1,3,5,10}}; stderr and counts consistent"))
}

// ---------------------------------------------------------------------------
// FLOPs accounting, hand-computed.

fn flops() -> Outcome {
    let gp = Lambda { num: 6, den: 1 };
    let nav = Lambda { num: 51, den: 10 };
    ensure(Lambda::GENERAL_POINTS == gp && Lambda::NAVIGATION == nav, || "lambda defaults".into())?;
    // (config, sft, rl), by hand: sft = 6N(Di+Ds); rl = 6N(Di+Dr) + 2N*lambda*Dr
    let cases: [(FlopsConfig, u128, (u128, u128)); 5] = [
        (FlopsConfig { n: 1_000_000_000, d_init: 0, d_sft: 1_000_000, d_rl: 0, lambda: gp }, 6_000_000_000_000_000, (0, 1)),
        (FlopsConfig { n: 1000, d_init: 10, d_sft: 20, d_rl: 30, lambda: gp }, 180_000, (600_000, 1)),
        (FlopsConfig { n: 1000, d_init: 10, d_sft: 0, d_rl: 30, lambda: nav }, 60_000, (546_000, 1)),
        (FlopsConfig { n: 7, d_init: 3, d_sft: 5, d_rl: 1, lambda: nav }, 336, (1197, 5)),
        (FlopsConfig { n: 11_000_000_000, d_init: 2_000_000, d_sft: 0, d_rl: 0, lambda: gp }, 132_000_000_000_000_000, (132_000_000_000_000_000, 1)),
    ];
    for (c, sft, (rl_num, rl_den)) in cases {
        let s = flops_sft_exact(&c);
        let r = flops_rl_exact(&c);
        ensure(s.num == sft * s.den, || format!("{c:?}: sft {}/{} != {sft}", s.num, s.den))?;
        ensure(r.num * rl_den == rl_num * r.den, || format!("{c:?}: rl {}/{} != {rl_num}/{rl_den}", r.num, r.den))?;
        ensure(flops_sft(&c) == sft as f64, || "sft f64 rounding".into())?;
        ensure(flops_rl(&c) == (rl_num as f64 / rl_den as f64), || "rl f64 rounding".into())?;
    }
    Ok("5 configurations exact (lambda 6 and 5.1, degenerate D_RL=0, 6e15 substitution)".into())
}

// ---------------------------------------------------------------------------
// Smoothing.

fn lstsq_smooth(x: &[f64], window: usize, order: usize) -> Vec<f64> {
    let n = x.len();
    let k = window / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(k).min(n - window);
            let a = DMatrix::from_fn(window, order + 1, |r, c| ((lo + r) as f64 - i as f64).powi(c as i32));
            let b = DVector::from_iterator(window, x[lo..lo + window].iter().copied());
            let coef = a.svd(true, true).solve(&b, 1e-14).unwrap();
            coef[0]
        })
        .collect()
}

fn smoothing() -> Outcome {
    let mut worst_cubic: f64 = 0.0;
    for window in [5, 7, 9, 11] {
        let xs: Vec<f64> = (0..40).map(|i| {
            let t = i as f64 / 7.0 - 2.0;
            0.3 * t * t * t - 1.2 * t * t + 0.5 * t - 2.0
        }).collect();
        let y = SavGol { window, ..SavGol::default() }.apply(&xs).map_err(|e| e.to_string())?;
        worst_cubic = worst_cubic.max(xs.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    ensure(worst_cubic <= 1e-10, || format!("cubic error {worst_cubic:e}"))?;
    let mut rng = rng_from_seed(404);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let len = rng.random_range(11..60);
        let window = [5, 7, 9, 11][trial % 4];
        let xs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ours = SavGol { window, ..SavGol::default() }.apply(&xs).map_err(|e| e.to_string())?;
        let oracle = lstsq_smooth(&xs, window, 3);
        worst = worst.max(ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    ensure(worst <= 1e-10, || format!("oracle error {worst:e}"))?;
    Ok(format!("cubic max error {worst_cubic:.1e}; 200 random series vs SVD least squares, max error {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("solver/oracle equivalence", solver_oracle),
        ("verdict table", verdict_table),
        ("sampling guarantee", sampling_guarantee),
        ("golden prompts", golden_prompts),
        ("sequential-revision contract", revision_contract),
        ("expert baselines", expert_baselines),
        ("random relative-nav baseline", random_relative_nav),
        ("trainer sanity", trainer_sanity),
        ("desk-scale experiment harness", harness),
        ("FLOPs calculator", flops),
        ("smoothing", smoothing),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
