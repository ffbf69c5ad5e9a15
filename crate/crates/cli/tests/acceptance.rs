//! Acceptance criteria. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cfgu::audit::{ccm, run_audit, Audit, AuditParams, ScorerSpec};
use cfgu::data::split_indices;
use cfgu::ensemble::{edge_entropy, entropy_summary, GraphBag};
use cfgu::graphs::{dag_to_cpdag, enumerate_mec, variables, Cpdag, Dag};
use cfgu::knowledge::Knowledge;
use cfgu::linalg::Matrix;
use cfgu::models::{penalized_gradient, penalized_log_likelihood, train_logreg, LogRegParams};
use cfgu::rng::stream_rng;
use cfgu::scm::{fit_linear_scm, Equation, LinearScm};
use cfgu::synth::{generate, Scenario, SynthSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < budget, format!("took {took:.2?}, budget {budget:?}"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

// 1. Exact counterfactual oracle.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dag = Dag::from_names(&["N", "I"], &[("N", "I")]).map_err(e)?;
    let root = Equation {
        intercept: 0.0,
        coefficients: vec![],
        residual_sd: 0.0,
        ridge: false,
    };
    let income = Equation {
        intercept: 0.5,
        coefficients: vec![(0, 0.2)],
        residual_sd: 0.0,
        ridge: false,
    };
    let m: LinearScm<f64> = LinearScm::new(dag, vec![root, income], None).map_err(e)?;
    let cf = m.counterfactual(&[1.0, 0.9], "N", 0.0).map_err(e)?;
    check((cf.row[1] - 0.7).abs() <= 1e-9, format!("I_cf = {}", cf.row[1]))?;
    check(cf.row[0] == 0.0, "intervened value not set")?;
    let same = m.counterfactual(&[1.0, 0.9], "N", 1.0).map_err(e)?;
    check(
        (same.row[0] - 1.0).abs() <= 1e-9 && (same.row[1] - 0.9).abs() <= 1e-9,
        format!("identity intervention gave {:?}", same.row),
    )?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("I_cf = {:.12}, identity row {:?}", cf.row[1], same.row))
}

fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &(a, b) in edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
    }
    seen == n
}

fn skeleton(edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

fn colliders(edges: &[(usize, usize)]) -> BTreeSet<(usize, usize, usize)> {
    let sk = skeleton(edges);
    let mut out = BTreeSet::new();
    for &(a, c) in edges {
        for &(b, c2) in edges {
            if c == c2 && a < b && !sk.contains(&(a, b)) {
                out.insert((a, c, b));
            }
        }
    }
    out
}

/// Every DAG over `n` nodes sharing the skeleton and v-structures of `edges`.
fn brute_force_mec(n: usize, edges: &[(usize, usize)]) -> BTreeSet<Vec<(usize, usize)>> {
    let sk: Vec<(usize, usize)> = skeleton(edges).into_iter().collect();
    let target = colliders(edges);
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << sk.len()) {
        let mut cand: Vec<(usize, usize)> = sk
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
            .collect();
        if is_acyclic(n, &cand) && colliders(&cand) == target {
            cand.sort();
            out.insert(cand);
        }
    }
    out
}

fn edge_sets(dags: &[Dag]) -> BTreeSet<Vec<(usize, usize)>> {
    dags.iter().map(|g| g.edges().iter().copied().collect()).collect()
}

// 2. MEC enumeration against brute force.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let none = Knowledge::empty();
    let chain = Cpdag::from_names(&["A", "B", "C"], &[], &[("A", "B"), ("B", "C")]).map_err(e)?;
    let got = edge_sets(&enumerate_mec(&chain, &none, 1000).map_err(e)?);
    let expected: BTreeSet<Vec<(usize, usize)>> = [
        vec![(0, 1), (1, 2)],
        vec![(1, 0), (2, 1)],
        vec![(1, 0), (1, 2)],
    ]
    .into_iter()
    .collect();
    check(got == expected, format!("A-B-C gave {got:?}"))?;

    let names = ["V0", "V1", "V2", "V3"];
    let mut rng = stream_rng(2024, 100, 0);
    for case in 0..200 {
        let n = rng.random_range(1..=4);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let p: f64 = rng.random_range(0.2..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((order[i], order[j]));
                }
            }
        }
        let g = Dag::new(variables(&names[..n]), edges.iter().copied()).map_err(e)?;
        let c = dag_to_cpdag(&g, &none).map_err(e)?;
        let got = edge_sets(&enumerate_mec(&c, &none, 1000).map_err(e)?);
        let want = brute_force_mec(n, &edges);
        check(got == want, format!("case {case}: {g:?} gave {got:?}, oracle {want:?}"))?;
    }
    within_budget(start, Duration::from_secs(30))?;
    Ok("A-B-C yields 3 DAGs; 200 random DAGs match the brute-force oracle".into())
}

// 3. Entropy properties.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    check(edge_entropy(1.0f64) == 0.0, "H(1) != 0")?;
    check(edge_entropy(0.0f64) == 0.0, "H(0) != 0")?;
    let half = edge_entropy(0.5f64);
    check((half - std::f64::consts::LN_2).abs() < 1e-15, format!("H(0.5) = {half}"))?;

    let ab = Dag::from_names(&["A", "B"], &[("A", "B")]).map_err(e)?;
    let ba = Dag::from_names(&["A", "B"], &[("B", "A")]).map_err(e)?;
    let bag = GraphBag::from_dags(vec![ab.clone(), ba]).map_err(e)?;
    let s = entropy_summary(&bag, "A").map_err(e)?;
    check((s.h_g() - 1.0).abs() <= 1e-12, format!("flip bag H_G = {}", s.h_g()))?;

    let g = Dag::from_names(&["A", "X1", "X2"], &[("A", "X1"), ("X1", "X2"), ("A", "X2")]).map_err(e)?;
    for bag in [vec![g.clone(); 7], vec![ab; 3]] {
        let s = entropy_summary(&GraphBag::from_dags(bag).map_err(e)?, "A").map_err(e)?;
        check(s.h_g() == 0.0 && s.h_ga() == 0.0, format!("identical bag gave {} / {}", s.h_g(), s.h_ga()))?;
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("H(0.5) = {half:.15}, flip bag H_G = {:.15}", s.h_g()))
}

struct ScenarioRun {
    scenario: Scenario,
    audit: Audit<f64>,
}

impl ScenarioRun {
    fn h_g(&self) -> f64 {
        self.audit.report.entropy.h_g()
    }

    /// PSR statistics when intervening from A = 0 to A = 1.
    fn psr(&self) -> Result<cfgu::audit::MetricStats<f64>, String> {
        let d = &self.audit.report.scorers[0].directions[0];
        check(d.from == "0", format!("first direction starts at {}", d.from))?;
        d.psr.clone().ok_or_else(|| format!("{}: PSR undefined", self.scenario))
    }
}

// 4. Qualitative reproduction on the three-variable synthetic scenarios.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let seed = 42;
    let ds = generate(&SynthSpec::three_node(1000, seed)).map_err(e)?;
    let sp = split_indices(&ds, 0.2, seed).map_err(e)?;
    let (train, test) = (ds.select_rows(&sp.train), ds.select_rows(&sp.test));
    let params = AuditParams::default();
    check(params.bag.bootstrap == 100, "default bootstrap is not 100")?;
    let scorers = [ScorerSpec::builtin("lr")];
    let mut runs = Vec::new();
    for scenario in Scenario::ALL {
        let audit = run_audit::<f64>(
            &train,
            &test,
            &sp.test,
            &scenario.knowledge(),
            &scorers,
            &params,
            seed,
            serde_json::Value::Null,
        )
        .map_err(|err| format!("{scenario}: {err}"))?;
        runs.push(ScenarioRun { scenario, audit });
    }
    let get = |s: Scenario| runs.iter().find(|r| r.scenario == s).unwrap();
    let (low, medium, high, fx1) = (
        get(Scenario::Low),
        get(Scenario::Medium),
        get(Scenario::High),
        get(Scenario::ForbidX1),
    );

    check(
        high.h_g() < medium.h_g() && medium.h_g() < low.h_g(),
        format!("H_G low {} medium {} high {}", low.h_g(), medium.h_g(), high.h_g()),
    )?;

    let vars = &fx1.audit.report.variables;
    let x1 = vars.iter().position(|v| v == "X1").ok_or("X1 missing")?;
    let mut individuals = 0;
    for dir in &fx1.audit.individuals[0] {
        for ind in dir {
            check(
                ind.feature_variance[x1] == 0.0,
                format!("row {}: Var(X1) = {}", ind.row_id, ind.feature_variance[x1]),
            )?;
            individuals += 1;
        }
    }
    check(individuals == test.n(), format!("{individuals} individuals of {}", test.n()))?;

    let m_psr = medium.psr()?;
    check(
        (0.35..=0.75).contains(&m_psr.mean),
        format!("Medium PSR mean {}", m_psr.mean),
    )?;
    let f_psr = fx1.psr()?;
    check(f_psr.mean < 0.10, format!("Forbid-X1 PSR mean {}", f_psr.mean))?;
    let (lw, hw) = (low.psr()?.ci_width(), high.psr()?.ci_width());
    check(lw > hw, format!("CI width low {lw} high {hw}"))?;
    within_budget(start, Duration::from_secs(600))?;
    Ok(format!(
        "H_G low {:.4} > medium {:.4} > high {:.4}; Var(X1) = 0 on {individuals} rows; \
         PSR medium {:.3}, forbid-x1 {:.3}; CI width low {lw:.3} > high {hw:.3}",
        low.h_g(),
        medium.h_g(),
        high.h_g(),
        m_psr.mean,
        f_psr.mean
    ))
}

// 5. Linear SCM fit and abduction round trip.
fn criterion_5() -> Outcome {
    let start = Instant::now();
    let dag = Dag::from_names(
        &["X0", "X1", "X2", "X3"],
        &[("X0", "X1"), ("X0", "X2"), ("X1", "X2"), ("X2", "X3")],
    )
    .map_err(e)?;
    // (intercept, [(parent, coefficient)]) per node.
    let truth: [(f64, &[(usize, f64)]); 4] = [
        (0.0, &[]),
        (1.0, &[(0, 0.8)]),
        (-0.5, &[(0, -0.5), (1, 1.5)]),
        (0.2, &[(2, 0.3)]),
    ];
    let mut rng = stream_rng(5, 200, 0);
    let mut rows = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let mut x = [0.0f64; 4];
        for (v, (c, pa)) in truth.iter().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let sd = if v == 0 { 1.0 } else { 0.1 };
            x[v] = c + pa.iter().map(|&(p, w)| w * x[p]).sum::<f64>() + sd * noise;
        }
        rows.push(x.to_vec());
    }
    let data = Matrix::from_rows(&rows).map_err(e)?;
    let m = fit_linear_scm(&dag, &data, None).map_err(e)?;
    let mut worst: f64 = 0.0;
    for (v, (c, pa)) in truth.iter().enumerate() {
        let eq = &m.equations()[v];
        worst = worst.max((eq.intercept - c).abs());
        for &(p, w) in *pa {
            let fit = eq.coefficients.iter().find(|(q, _)| *q == p).ok_or("missing parent")?.1;
            worst = worst.max((fit - w).abs());
        }
        check(eq.coefficients.len() == pa.len(), "extra coefficients")?;
    }
    check(worst <= 0.05, format!("largest coefficient error {worst}"))?;
    let mut round = 0.0f64;
    for r in data.rows_iter() {
        let back = m.predict(&m.abduct(r).map_err(e)?).map_err(e)?;
        for (a, b) in r.iter().zip(&back) {
            round = round.max((a - b).abs());
        }
    }
    check(round <= 1e-9, format!("round trip error {round}"))?;
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!("largest coefficient error {worst:.4}, round trip error {round:.1e}"))
}

// 6. Logistic-regression gradient check.
fn criterion_6() -> Outcome {
    let mut rng = stream_rng(6, 300, 0);
    let mut worst_rel: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for case in 0..20 {
        let n = rng.random_range(10..40);
        let d = rng.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let x = Matrix::from_rows(&rows).map_err(e)?;
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random::<bool>())).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let lambda: f64 = rng.random_range(0.1..3.0);

        let g = penalized_gradient(&x, &y, &w, b, lambda);
        let h = 1e-6;
        let f = |w: &[f64], b: f64| penalized_log_likelihood(&x, &y, w, b, lambda);
        for j in 0..=d {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < d {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fd = (f(&wp, bp) - f(&wm, bm)) / (2.0 * h);
            let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0);
            worst_rel = worst_rel.max(rel);
            check(rel <= 1e-5, format!("case {case}, coordinate {j}: {} vs {fd}", g[j]))?;
        }

        let params = LogRegParams {
            lambda,
            ..LogRegParams::default()
        };
        let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        let m = train_logreg(&x, &y, &names, &params).map_err(e)?;
        let g = penalized_gradient(&x, &y, &m.weights, m.bias, lambda);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_norm = worst_norm.max(norm);
        check(norm <= params.tol, format!("case {case}: converged gradient norm {norm}"))?;
    }
    Ok(format!(
        "worst relative gradient error {worst_rel:.1e}, worst converged gradient norm {worst_norm:.1e}"
    ))
}

// 7. PSR and NSR against direct counting.
fn criterion_7() -> Outcome {
    let mut rng = stream_rng(7, 400, 0);
    let mut undefined = 0;
    for case in 0..100 {
        let p1: f64 = match case % 10 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        let flip: f64 = rng.random_range(0.0..1.0);
        let y: Vec<bool> = (0..50).map(|_| rng.random_bool(p1)).collect();
        let ycf: Vec<bool> = y.iter().map(|&v| if rng.random_bool(flip) { !v } else { v }).collect();
        let c = ccm(&y, &ycf).map_err(e)?;

        let neg = y.iter().filter(|&&v| !v).count();
        let neg_flip = y.iter().zip(&ycf).filter(|(&a, &b)| !a && b).count();
        let pos = y.iter().filter(|&&v| v).count();
        let pos_flip = y.iter().zip(&ycf).filter(|(&a, &b)| a && !b).count();
        let want_psr = (neg > 0).then(|| neg_flip as f64 / neg as f64);
        let want_nsr = (pos > 0).then(|| pos_flip as f64 / pos as f64);
        check(c.psr() == want_psr, format!("case {case}: PSR {:?} vs {want_psr:?}", c.psr()))?;
        check(c.nsr() == want_nsr, format!("case {case}: NSR {:?} vs {want_nsr:?}", c.nsr()))?;
        undefined += usize::from(want_psr.is_none()) + usize::from(want_nsr.is_none());
    }
    check(undefined > 0, "no undefined case exercised")?;
    Ok(format!("100 cases agree; {undefined} undefined denominators reported as None"))
}

fn cfgu(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cfgu"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(e)?;
    check(
        out.status.success(),
        format!("cfgu {args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

// 8. Two audits with the same configuration produce identical reports.
fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let d = dir.path();
    cfgu(&["synth", "--preset", "medium", "--seed", "42", "--out", "data"], d)?;
    cfgu(&["audit", "-c", "data/config.toml", "--out", "run1"], d)?;
    cfgu(&["audit", "-c", "data/config.toml", "--out", "run2"], d)?;
    let a = fs::read(d.join("run1/report.json")).map_err(e)?;
    let b = fs::read(d.join("run2/report.json")).map_err(e)?;
    check(!a.is_empty() && a == b, "report.json differs between runs")?;
    Ok(format!("report.json identical ({} bytes)", a.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact counterfactual oracle", criterion_1),
        ("MEC enumeration oracle", criterion_2),
        ("entropy properties", criterion_3),
        ("synthetic trend reproduction", criterion_4),
        ("SCM fit oracle", criterion_5),
        ("logistic-regression gradient check", criterion_6),
        ("PSR/NSR brute force", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({took:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
