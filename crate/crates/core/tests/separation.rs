use proptest::prelude::*;
use rand::Rng;
use schatten_core::analysis::{experts_envelope, run_regret, Comparator};
use schatten_core::learners::{BinaryIndexOperator, ExpertsConfig, ExpertsLearner, OnlineLearner};
use schatten_core::rng::seeded;
use schatten_core::streams::{separation_stream, Example, InstanceMode, InstanceSpace, Stream};
use schatten_core::HVector;

/// Every expert `(i, j)` kept explicitly, with Hedge weights `exp(-η L)`.
struct ExplicitExperts {
    horizon: usize,
    d: usize,
    eta: f64,
    threshold: f64,
    sorted_sets: Vec<Vec<usize>>,
    losses: Vec<f64>,
    rounds: usize,
}

impl ExplicitExperts {
    fn new(horizon: usize, d: usize) -> Self {
        let n = 4.0 * (horizon * horizon) as f64;
        ExplicitExperts {
            horizon,
            d,
            eta: 0.25 * (8.0 * n.ln() / horizon as f64).sqrt(),
            threshold: 0.5 / (horizon as f64).sqrt(),
            sorted_sets: Vec::new(),
            losses: vec![0.0; 4 * horizon * horizon],
            rounds: 0,
        }
    }

    fn expert_k(&self, i: usize, j: usize) -> usize {
        self.sorted_sets.get(i - 1).and_then(|s| s.get(j - 1)).copied().unwrap_or(0)
    }

    /// Expert `(i, j)` at round `t` (all 1-based).
    fn predict_one(&self, i: usize, j: usize, t: usize, x: &HVector) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        if t > i && i <= self.sorted_sets.len() {
            let k = self.expert_k(i, j);
            if k > 0 {
                let a: f64 = (0..self.d).filter(|n| (k >> n) & 1 == 1).map(|n| x.get(n)).sum();
                out[k - 1] = a;
            }
        }
        out
    }

    fn id(&self, i: usize, j: usize) -> usize {
        (i - 1) * 4 * self.horizon + (j - 1)
    }

    fn predict(&self, x: &HVector) -> Vec<f64> {
        let t = self.rounds + 1;
        let min = self.losses.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        let mut out = vec![0.0; self.d];
        for i in 1..=self.horizon {
            for j in 1..=4 * self.horizon {
                let w = (-self.eta * (self.losses[self.id(i, j)] - min)).exp();
                total += w;
                for (o, p) in out.iter_mut().zip(self.predict_one(i, j, t, x)) {
                    *o += w * p;
                }
            }
        }
        out.iter().map(|o| o / total).collect()
    }

    fn update(&mut self, x: &HVector, y: &HVector) {
        let t = self.rounds + 1;
        for i in 1..=self.horizon {
            for j in 1..=4 * self.horizon {
                let p = self.predict_one(i, j, t, x);
                let loss: f64 = p.iter().zip(y.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
                let id = self.id(i, j);
                self.losses[id] += loss;
            }
        }
        let mut set: Vec<usize> = (0..self.d).filter(|&n| y.get(n).abs() >= self.threshold).map(|n| n + 1).collect();
        set.sort_by(|a, b| b.cmp(a));
        self.sorted_sets.push(set);
        self.rounds += 1;
    }
}

fn noisy_stream(horizon: usize, d: usize, seed: u64) -> Stream {
    let mut rng = seeded(seed);
    let k = rng.gen_range(1..=d);
    let f = BinaryIndexOperator::new(k, d).unwrap();
    let rounds = (0..horizon)
        .map(|_| {
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l1: f64 = raw.iter().map(|a| a.abs()).sum();
            let x = HVector::new(raw.iter().map(|a| a / l1).collect()).unwrap();
            let mut y = f.apply(&x).unwrap().into_vec();
            for v in y.iter_mut() {
                *v += 0.3 * rng.gen_range(-1.0..1.0);
            }
            let n = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1.0 {
                y.iter_mut().for_each(|a| *a /= n);
            }
            Example::new(x, HVector::new(y).unwrap())
        })
        .collect();
    Stream::new(d, InstanceSpace::L1Unit, 1.0, rounds).unwrap()
}

#[test]
fn virtual_experts_match_explicit_hedge() {
    for seed in 0..6 {
        let (horizon, d) = (5, 6);
        let stream = if seed % 2 == 0 {
            noisy_stream(horizon, d, seed)
        } else {
            separation_stream(horizon, d, 5, seed, InstanceMode::Dense).unwrap()
        };
        let mut oracle = ExplicitExperts::new(horizon, d);
        let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, d)).unwrap();
        for ex in &stream.rounds {
            let expected = oracle.predict(&ex.x);
            let got = learner.predict(&ex.x).unwrap();
            for n in 0..d {
                assert!((got.get(n) - expected[n]).abs() < 1e-10, "seed {seed}: {:?} vs {:?}", got, expected);
            }
            oracle.update(&ex.x, &ex.y);
            learner.update(&ex.x, &ex.y).unwrap();
        }
        let best = oracle.losses.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((learner.best_expert_loss() - best).abs() < 1e-10);
        for i in 1..=horizon {
            for j in 1..=4 * horizon {
                let l = learner.expert_loss(i, j).unwrap();
                assert!((l - oracle.losses[oracle.id(i, j)]).abs() < 1e-10, "expert ({i}, {j})");
            }
        }
    }
}

fn brute_force_best(stream: &Stream) -> (usize, f64) {
    let d = stream.dim();
    (0..=d)
        .map(|k| {
            let f = BinaryIndexOperator::new(k, d).unwrap();
            let loss: f64 = stream
                .rounds
                .iter()
                .map(|ex| f.apply(&ex.x).unwrap().sub(&ex.y).unwrap().norm2_sq())
                .sum();
            (k, loss)
        })
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

#[test]
fn switch_identity_and_case_bound() {
    let horizon = 32;
    let d = 48;
    for seed in 0..50u64 {
        let stream = match seed % 3 {
            0 => noisy_stream(horizon, d, seed),
            1 => separation_stream(horizon, d, 1 + (seed as usize * 7) % d, seed, InstanceMode::Dense).unwrap(),
            _ => separation_stream(horizon, d, 1 + (seed as usize * 5) % d, seed, InstanceMode::Basis).unwrap(),
        };
        let (k_star, _) = brute_force_best(&stream);
        let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, d)).unwrap();
        for ex in &stream.rounds {
            learner.update(&ex.x, &ex.y).unwrap();
        }
        let first = (1..=horizon).find(|&t| learner.index_set(t).unwrap().contains(&k_star));
        let f_star = BinaryIndexOperator::new(k_star, d).unwrap();
        let threshold = 0.5 / (horizon as f64).sqrt();
        if let Some(t_star) = first {
            let set = learner.index_set(t_star).unwrap();
            let r_star = set.iter().position(|&k| k == k_star).unwrap() + 1;
            assert_eq!(learner.sorted_index(t_star, r_star), Some(k_star));
            for (t, ex) in stream.rounds.iter().enumerate().map(|(t, ex)| (t + 1, ex)) {
                let expert = learner.expert_prediction(t_star, r_star, t, &ex.x).unwrap();
                if t > t_star {
                    assert_eq!(expert, f_star.apply(&ex.x).unwrap(), "seed {seed}, round {t}");
                } else {
                    assert_eq!(expert, HVector::zeros(d));
                }
            }
        }
        let cutoff = first.unwrap_or(horizon + 1);
        for ex in stream.rounds.iter().take(cutoff - 1) {
            if k_star == 0 {
                break;
            }
            let a = f_star.coefficient(&ex.x);
            let c = ex.y.get(k_star - 1);
            assert!(c.abs() < threshold);
            assert!(2.0 * a * c - a * a <= 1.0 / horizon as f64 + 1e-15, "seed {seed}");
        }
    }
}

#[test]
fn experts_regret_within_envelope() {
    for horizon in [16usize, 64] {
        for seed in 0..10u64 {
            let d = 40;
            let stream = separation_stream(horizon, d, 1 + (seed as usize * 11) % d, seed, InstanceMode::Dense).unwrap();
            let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, d)).unwrap();
            let report = run_regret(&mut learner, &stream, &Comparator::ClosedForm(0.0)).unwrap();
            assert!(report.regret <= experts_envelope(horizon), "T={horizon} seed={seed}: {}", report.regret);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn index_sets_fit_in_4t(horizon in 1..40usize, raw in prop::collection::vec(-1.0..1.0f64, 1..200)) {
        let d = raw.len();
        let n = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        let y: Vec<f64> = if n > 1.0 { raw.iter().map(|a| a / n).collect() } else { raw };
        let mut learner = ExpertsLearner::new(ExpertsConfig::new(horizon, d)).unwrap();
        learner.update(&HVector::zeros(d), &HVector::new(y).unwrap()).unwrap();
        let set = learner.index_set(1).unwrap();
        prop_assert!(set.len() <= 4 * horizon);
        prop_assert!(set.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn binary_index_outputs_stay_in_unit_ball(k in 0..=65_536usize, raw in prop::collection::vec(-1.0..1.0f64, 17)) {
        let l1: f64 = raw.iter().map(|a| a.abs()).sum();
        prop_assume!(l1 > 0.0);
        let x = HVector::new(raw.iter().map(|a| a / l1).collect()).unwrap();
        let f = BinaryIndexOperator::new(k.min(17), 17).unwrap();
        prop_assert!(f.apply(&x).unwrap().norm2() <= 1.0 + 1e-12);
        // large indices read more bits than fit in 17 coordinates; check the coefficient directly
        let a: f64 = (0..17).filter(|n| (k >> n) & 1 == 1).map(|n| x.get(n)).sum();
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }
}
