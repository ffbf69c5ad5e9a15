use cfgu::audit::{ccm, metric_stats};
use cfgu::discovery::{boss_search, GaussianBic, ScoreParams, SearchParams};
use cfgu::graphs::{variables, Dag};
use cfgu::knowledge::Knowledge;
use cfgu::linalg::Matrix;
use cfgu::models::{predict, train_logreg, LogRegParams};
use cfgu::rng::stream_rng;
use cfgu::scm::{Equation, LinearScm};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// A random linear SCM over a random DAG on `n` nodes.
fn random_scm(n: usize, seed: u64) -> LinearScm<f64> {
    let mut rng = stream_rng(seed, 70, 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                edges.push((order[i], order[j]));
            }
        }
    }
    let dag = Dag::new(variables(&NAMES[..n]), edges).unwrap();
    let equations = (0..n)
        .map(|v| Equation {
            intercept: rng.random_range(-1.0..1.0),
            coefficients: dag.parents(v).into_iter().map(|p| (p, rng.random_range(-2.0..2.0))).collect(),
            residual_sd: 1.0,
            ridge: false,
        })
        .collect();
    LinearScm::new(dag, equations, None).unwrap()
}

fn random_row(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 71, 0);
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn counterfactuals_follow_the_graph(n in 2usize..=5, seed in any::<u64>(), a in 0usize..5, v in -2.0f64..2.0) {
        let a = a % n;
        let m = random_scm(n, seed);
        let x = random_row(n, seed ^ 1);
        let name = NAMES[a];

        let same = m.counterfactual(&x, name, x[a]).unwrap();
        for (p, q) in x.iter().zip(&same.row) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
        let round = m.predict(&m.abduct(&x).unwrap()).unwrap();
        for (p, q) in x.iter().zip(&round) {
            prop_assert!((p - q).abs() <= 1e-9);
        }

        let cf = m.counterfactual(&x, name, v).unwrap();
        prop_assert_eq!(cf.row[a], v);
        let desc = m.dag().descendants(a);
        for (j, (c, o)) in cf.row.iter().zip(&x).enumerate() {
            if j != a && !desc.contains(&j) {
                prop_assert_eq!(c.to_bits(), o.to_bits());
            }
        }

        let y = random_row(n, seed ^ 2);
        let delta = |r: &[f64]| {
            let one = m.counterfactual(r, name, 1.0).unwrap().row;
            let zero = m.counterfactual(r, name, 0.0).unwrap().row;
            one.iter().zip(&zero).map(|(p, q)| p - q).collect::<Vec<_>>()
        };
        for (p, q) in delta(&x).iter().zip(&delta(&y)) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn prediction_is_monotone_in_score(mut s in prop::collection::vec(0.0f64..=1.0, 1..50), tau in 0.01f64..0.99) {
        s.sort_by(f64::total_cmp);
        let p = predict(&s, tau);
        for w in p.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for (v, y) in s.iter().zip(&p) {
            prop_assert_eq!(*y, *v > tau);
        }
    }

    #[test]
    fn logistic_fit_ignores_row_order(n in 20usize..80, d in 1usize..4, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 72, 0);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let mut y: Vec<f64> = rows.iter().map(|r| f64::from(r[0] + rng.random_range(-1.5..1.5) > 0.0)).collect();
        y[0] = 0.0;
        y[1] = 1.0;
        let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        let params = LogRegParams::default();
        let m = train_logreg(&Matrix::from_rows(&rows).unwrap(), &y, &names, &params).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let rows2: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let m2 = train_logreg(&Matrix::from_rows(&rows2).unwrap(), &y2, &names, &params).unwrap();
        prop_assert!((m.bias - m2.bias).abs() <= 1e-9);
        for (p, q) in m.weights.iter().zip(&m2.weights) {
            prop_assert!(p.is_finite());
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn switch_rates_are_proportions(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let (y, ycf): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let c = ccm(&y, &ycf).unwrap();
        prop_assert_eq!(c.total(), y.len());
        for r in [c.psr(), c.nsr()].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&r));
        }
        prop_assert_eq!(c.psr().is_none(), y.iter().all(|&v| v));
        prop_assert_eq!(c.nsr().is_none(), y.iter().all(|&v| !v));
    }

    #[test]
    fn metric_stats_stay_within_observed_range(values in prop::collection::vec(0.0f64..=1.0, 1..120), alpha in 0.01f64..0.5) {
        let s = metric_stats(&values, alpha).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s.variance >= 0.0);
        prop_assert!(lo <= s.ci_lower && s.ci_lower <= s.ci_upper && s.ci_upper <= hi);
        prop_assert!(lo - 1e-12 <= s.mean && s.mean <= hi + 1e-12);
        if values.len() == 1 {
            prop_assert_eq!(s.variance, 0.0);
        }
    }
}

fn sample(n: usize, d: usize, seed: u64) -> Matrix<f64> {
    let mut rng = stream_rng(seed, 73, 0);
    let w: Vec<Vec<f64>> = (0..d).map(|j| (0..j).map(|_| if rng.random_bool(0.5) { rng.random_range(0.5..1.5) } else { 0.0 }).collect()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut x = vec![0.0; d];
            for j in 0..d {
                let e: f64 = StandardNormal.sample(&mut rng);
                x[j] = w[j].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + e;
            }
            x
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_beats_empty_graph_and_obeys_knowledge(d in 2usize..=5, seed in any::<u64>(), cut in 1usize..5) {
        let data = sample(300, d, seed);
        let vars = variables(&NAMES[..d]);
        let cut = cut.min(d - 1);
        let early: Vec<&str> = NAMES[cut..d].to_vec();
        let late: Vec<&str> = NAMES[..cut].to_vec();
        let mut k = Knowledge::with_tiers(&[early.as_slice(), late.as_slice()]);
        if d > 2 {
            k = k.forbid(NAMES[0], NAMES[1]).forbid(NAMES[1], NAMES[0]);
        }
        let compiled = k.compile(&vars).unwrap();
        let sp = SearchParams::for_variables(d, seed);
        let scp = ScoreParams::default();
        let out = boss_search(&vars, &data, &compiled, &sp, &scp).unwrap();
        let again = boss_search(&vars, &data, &compiled, &sp, &scp).unwrap();
        prop_assert_eq!(&out.dag, &again.dag);

        let bic = GaussianBic::new(&data, &scp);
        let parents = out.dag.parent_lists();
        let total = bic.total(&parents);
        let sum: f64 = (0..d).map(|v| bic.score(v, &parents[v])).sum();
        prop_assert!((total - sum).abs() <= 1e-9 * total.abs().max(1.0));
        prop_assert!(total >= bic.total(&vec![Vec::new(); d]) - 1e-9);
        prop_assert!((out.score - total).abs() <= 1e-6 * total.abs().max(1.0));

        let names: Vec<String> = vars.to_vec();
        for &(a, b) in out.dag.edges() {
            prop_assert!(!k.is_forbidden(NAMES[a], NAMES[b], &names).unwrap());
        }
    }
}
