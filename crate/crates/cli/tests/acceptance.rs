//! Acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion, then exits non-zero if any failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use common::{central_differences, close, exhaustive_scan, minimax_order, AxisTree, Targets};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slm::dataset::synth::{friedman, moons, BoundaryNoise, FriedmanConfig, FriedmanVariant};
use slm::dft::{dft_cost, LossKind, NodeTargets, ProjectedColumn, SplitEvaluation};
use slm::ensemble::{fit_boost, fit_forest, softmax, softmax_gradient, BoostLoss, BoostParams, ForestParams};
use slm::projection::{
    coefficient_bounds, cosine, generate_directions, select_decorrelated, unit_vector, ProjectionParams,
    ProjectionVector, RankedBasis, Round, SplitRecord,
};
use slm::tree::{build_tree, param_count, Child, Leaf, LeafValue, Node, TreeParams};
use slm::{Dataset, Model, ModelFile, SlmError, SlmTree, Task};
use slm_cli::bench::{self, BenchOutput, Suite};
use slm_cli::config::{HyperOverrides, ModelKind, RunConfig};
use slm_cli::run;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn suite_path() -> PathBuf {
    repo_root().join("benchmarks/synthetic.toml")
}

fn test_score(out: &BenchOutput, dataset: &str, model: &str) -> Result<f64, String> {
    out.results
        .iter()
        .find(|r| r.dataset == dataset && r.model == model)
        .and_then(|r| r.metrics.as_ref())
        .map(|m| m.test)
        .ok_or_else(|| format!("no result for {dataset}/{model}"))
}

fn within(name: &str, got: f64, target: f64, tol: f64) -> Outcome {
    let s = format!("{name} {got:.2} (target {target} +/- {tol:.2})");
    ensure((got - target).abs() <= tol, || s.clone())?;
    Ok(s)
}

// Quantitative rows --------------------------------------------------------

fn two_moons(out: &BenchOutput) -> Outcome {
    let tree = test_score(out, "moons2", "slm-tree")? * 100.0;
    let mut parts = vec![within("tree", tree, 91.50, 3.0)?];
    for model in ["slm-forest", "slm-boost"] {
        let v = test_score(out, "moons2", model)? * 100.0;
        ensure(v >= tree - 0.5, || format!("{model} {v:.2} below tree {tree:.2} - 0.5"))?;
        parts.push(within(model, v, 91.50, 3.0)?);
    }
    Ok(parts.join(", "))
}

fn circle_ring(out: &BenchOutput) -> Outcome {
    within("tree", test_score(out, "circle-ring", "slm-tree")? * 100.0, 88.25, 3.5)
}

fn four_moons(out: &BenchOutput) -> Outcome {
    Ok([
        within("tree", test_score(out, "moons4", "slm-tree")? * 100.0, 95.63, 3.0)?,
        within("slm-forest", test_score(out, "moons4", "slm-forest")? * 100.0, 96.00, 3.0)?,
        within("slm-boost", test_score(out, "moons4", "slm-boost")? * 100.0, 96.00, 3.0)?,
    ]
    .join(", "))
}

fn friedman_rmse(out: &BenchOutput) -> Outcome {
    let f3 = test_score(out, "friedman3", "slr-boost")?;
    let parts = [
        within("friedman1 tree rmse", test_score(out, "friedman1", "slr-tree")?, 2.89, 0.25 * 2.89)?,
        within("friedman1 boost rmse", test_score(out, "friedman1", "slr-boost")?, 1.07, 0.25 * 1.07)?,
    ];
    ensure(f3 <= 0.10, || format!("friedman3 boost rmse {f3:.4} > 0.10"))?;
    Ok(format!("{}, friedman3 boost rmse {f3:.4} <= 0.10", parts.join(", ")))
}

// Model size ---------------------------------------------------------------

fn leaf(depth: usize) -> Node {
    Node::Leaf(Leaf { value: LeafValue::Histogram(vec![1, 0]), n_samples: 1, depth, loss: 0.0 })
}

/// Internal node with `q` hyperplanes over `d0` dimensions.
fn internal(q: usize, d0: usize, depth: usize, children: Vec<Node>) -> Node {
    let splits = (0..q)
        .map(|j| {
            let coeffs: Vec<i64> = (0..d0).map(|i| i64::from(i == j % d0)).collect();
            SplitRecord { direction: coeffs.iter().map(|&c| c as f64).collect(), coeffs, threshold: j as f64, loss: 0.0 }
        })
        .collect();
    let n_samples = children.iter().map(Node::n_samples).sum();
    let children = children.into_iter().enumerate().map(|(k, node)| Child { key: k as u64, node }).collect();
    Node::Internal { splits, children, n_samples, depth, loss: 0.0 }
}

fn chain(m: usize, d0: usize) -> Node {
    let mut node = leaf(m);
    for depth in (0..m).rev() {
        node = internal(1, d0, depth, vec![leaf(depth + 1), node]);
    }
    node
}

fn model_size() -> Outcome {
    let a = param_count(&chain(13, 2), 2);
    let b = param_count(&chain(4, 4), 4);
    ensure(a == 39 && b == 20, || format!("chain fixtures gave {a} and {b}"))?;
    // The same 13 partitions spread over multi-hyperplane nodes: 1 + 3 + 2 + 7.
    let fan = |q: usize, depth| internal(q, 2, depth, (0..1 << q.min(3)).map(|_| leaf(depth + 1)).collect());
    let mixed = internal(1, 2, 0, vec![fan(3, 1), internal(2, 2, 1, vec![fan(7, 2), leaf(2)])]);
    let c = param_count(&mixed, 2);
    ensure(c == 39, || format!("mixed 13-partition fixture gave {c}"))?;
    let tree = SlmTree {
        root: chain(4, 4),
        dims: (0..4).collect(),
        task: Task::Classification,
        n_classes: Some(2),
        n_features: 4,
        params: TreeParams::default(),
    };
    let s = tree.stats();
    ensure(tree.param_count() == 20 && s.partitions == 4, || format!("tree reports {} params, {} partitions", tree.param_count(), s.partitions))?;
    Ok("13 partitions at D0=2 -> 39 (chain and mixed), 4 partitions at D0=4 -> 20".into())
}

// Convergence ---------------------------------------------------------------

fn moons2_config(suite: &Suite, model: ModelKind) -> Result<RunConfig, String> {
    bench::cells(suite, &HyperOverrides::default())
        .into_iter()
        .find(|c| c.dataset == "moons2" && c.model == model)
        .and_then(|c| c.config.ok())
        .ok_or_else(|| format!("no moons2 config for {}", model.name()))
}

fn convergence(suite: &Suite) -> Outcome {
    let boost_cfg = moons2_config(suite, ModelKind::SlmBoost)?;
    ensure(boost_cfg.hyper.rounds == 100, || format!("boost runs {} rounds", boost_cfg.hyper.rounds))?;
    let curve = run::run(&boost_cfg).map_err(|e| e.to_string())?.curve.ok_or("boost gave no curve")?;
    ensure(curve.metric == "logloss" && curve.points.len() == 100, || format!("{} points of {}", curve.points.len(), curve.metric))?;
    for w in curve.points.windows(2) {
        ensure(w[1].train <= w[0].train + 1e-9, || format!("logloss rose at round {}: {} -> {}", w[1].index, w[0].train, w[1].train))?;
    }
    let (first, last) = (curve.points[0].train, curve.points[99].train);

    let forest_cfg = moons2_config(suite, ModelKind::SlmForest)?;
    let curve = run::run(&forest_cfg).map_err(|e| e.to_string())?.curve.ok_or("forest gave no curve")?;
    let at = |m: usize| curve.points.iter().find(|p| p.index == m).and_then(|p| p.holdout).ok_or(format!("no point {m}"));
    let (one, twenty) = (at(1)?, at(20)?);
    ensure(twenty >= one, || format!("forest accuracy fell from {one:.4} to {twenty:.4}"))?;
    Ok(format!("boost logloss {first:.4} -> {last:.4} non-increasing; forest test accuracy {one:.4} at 1 tree, {twenty:.4} at 20"))
}

// DFT oracle ------------------------------------------------------------------

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random_range(-50.0..50.0)).collect()
    } else {
        (0..n).map(|_| f64::from(rng.random_range(-8i32..8)) * 0.5).collect()
    }
}

fn dft_matches_scan() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let below = |v: &[f64], t: f64| v.iter().map(|&x| x < t).collect::<Vec<_>>();
    for case in 0..200 {
        let n = rng.random_range(2..40);
        let bins = rng.random_range(2..33);
        let v = random_values(&mut rng, n);
        let col = ProjectedColumn::new(v.clone());

        let k = rng.random_range(2..5);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let got = dft_cost(&col, &NodeTargets::Classes { labels: &labels, n_classes: k }, bins).map_err(|e| e.to_string())?;
        match exhaustive_scan(&v, &Targets::Classes(&labels, k), bins) {
            None => ensure(got.loss.is_infinite(), || format!("case {case}: entropy split found on a constant column"))?,
            Some(want) => ensure(
                got.loss == want.loss && got.threshold == want.threshold && below(&v, got.threshold) == want.left,
                || format!("case {case}: entropy {} at {} vs oracle {} at {}", got.loss, got.threshold, want.loss, want.threshold),
            )?,
        }

        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let lambda = rng.random_range(0.0..2.0);
        let pairs = [
            (NodeTargets::Values(&y), Targets::Values(&y), "mse"),
            (NodeTargets::Gradients { grad: &y, hess: &h, lambda }, Targets::Gradients(&y, &h, lambda), "gain"),
        ];
        for (targets, oracle, name) in pairs {
            let got = dft_cost(&col, &targets, bins).map_err(|e| e.to_string())?;
            match exhaustive_scan(&v, &oracle, bins) {
                None => ensure(got.loss.is_infinite(), || format!("case {case}: {name} split on a constant column"))?,
                Some(want) => ensure(
                    below(&v, got.threshold) == want.left && (got.loss - want.loss).abs() <= 1e-9 * want.loss.abs().max(1e-9),
                    || format!("case {case}: {name} {} vs oracle {}", got.loss, want.loss),
                )?,
            }
        }
    }
    Ok("200 instances: entropy loss, threshold and partition exact; mse/gain partitions exact, losses within 1e-9".into())
}

// CART degeneration -----------------------------------------------------------

fn leaf_groups(tree: &SlmTree, ds: &Dataset) -> BTreeSet<Vec<usize>> {
    let mut groups: Vec<(*const Leaf, Vec<usize>)> = Vec::new();
    for i in 0..ds.n_samples() {
        let l = tree.leaf(ds.row(i)) as *const Leaf;
        match groups.iter_mut().find(|(p, _)| *p == l) {
            Some((_, g)) => g.push(i),
            None => groups.push((l, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

fn cart_degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..50u64 {
        let n = rng.random_range(4..=64);
        let d = rng.random_range(1..=4);
        let k = rng.random_range(2..=3);
        let grid = rng.random_bool(0.3);
        let x: Vec<f64> = (0..n * d)
            .map(|_| if grid { f64::from(rng.random_range(-4i32..=4)) } else { rng.random_range(-10.0..10.0) })
            .collect();
        let labels: Vec<usize> = (0..n)
            .map(|i| if rng.random_bool(0.25) { rng.random_range(0..k) } else { ((x[i * d] + 10.0) as usize * k / 21).min(k - 1) })
            .collect();
        let ds = Dataset::classification(x, d, labels, k).map_err(|e| e.to_string())?;
        let max_depth = rng.random_range(1..=6);
        let min_samples = rng.random_range(2..=8);
        let params = TreeParams {
            projection: ProjectionParams { d0: None, active: 1, envelope_scale: 1.5, alpha: 1e-9, q_max: 1, ..ProjectionParams::default() },
            max_depth,
            min_samples,
            min_loss: 0.0,
            bins: 16,
            loss: LossKind::Entropy,
        };
        let tree = build_tree(&ds, &params, &mut ChaCha8Rng::seed_from_u64(case)).map_err(|e| e.to_string())?;
        let want: BTreeSet<Vec<usize>> = AxisTree { bins: 16, max_depth, min_samples }
            .leaves(ds.features(), d, ds.labels().unwrap(), k)
            .into_iter()
            .collect();
        ensure(leaf_groups(&tree, &ds) == want, || format!("case {case} (L={n}, D={d}): leaf memberships differ"))?;
    }
    Ok("50 instances with L <= 64, D <= 4: identical leaf memberships".into())
}

// Projection invariants -------------------------------------------------------

fn random_projection_params(rng: &mut ChaCha8Rng) -> ProjectionParams {
    let mut p = ProjectionParams {
        n_candidates: rng.random_range(1..60),
        active: rng.random_range(1..5),
        alpha: rng.random_range(0.05..1.0),
        envelope_scale: rng.random_range(1.0..12.0),
        beta: rng.random_range(0.0..2.0),
        exhaustive_limit: if rng.random_bool(0.5) { 0 } else { 512 },
        ..ProjectionParams::default()
    };
    if rng.random_bool(0.3) {
        p.rounds = (0..rng.random_range(1..4))
            .map(|_| Round { alpha: rng.random_range(0.05..1.0), beta: rng.random_range(0.0..2.0), active: rng.random_range(1..5) })
            .collect();
    }
    p
}

fn random_pool(rng: &mut ChaCha8Rng, size: usize) -> Vec<ProjectionVector> {
    let d = rng.random_range(2..5);
    (0..size)
        .map(|_| {
            let coeffs: Vec<i64> = loop {
                let c: Vec<i64> = (0..d).map(|_| rng.random_range(-3..=3)).collect();
                if c.iter().any(|&v| v != 0) {
                    break c;
                }
            };
            let loss = if rng.random_bool(0.1) { f64::INFINITY } else { f64::from(rng.random_range(0..6)) * 0.1 };
            ProjectionVector {
                unit: unit_vector(&coeffs),
                coeffs,
                eval: SplitEvaluation { threshold: rng.random_range(-1.0..1.0), loss, n_left: 1, n_right: 1 },
            }
        })
        .collect()
}

fn projection_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 10_000 {
        let d0 = rng.random_range(1..8);
        let params = random_projection_params(&mut rng);
        let mut order: Vec<usize> = (0..d0).collect();
        order.shuffle(&mut rng);
        let dirs = match generate_directions(&RankedBasis { order: order.clone() }, &params, &mut rng) {
            Ok(d) => d,
            Err(SlmError::CollapsedEnvelope) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let bound: Vec<i64> = (0..d0)
            .map(|r| params.effective_rounds().iter().map(|round| coefficient_bounds(params.envelope_scale, round.alpha, d0)[r]).max().unwrap())
            .collect();
        for c in dirs {
            let first = c.iter().copied().find(|&v| v != 0).unwrap_or(0);
            ensure(first > 0, || format!("{c:?} is not sign-canonical"))?;
            for (r, &dim) in order.iter().enumerate() {
                ensure(c[dim].abs() <= bound[r], || format!("{c:?} exceeds the envelope at rank {}", r + 1))?;
            }
            let norm = unit_vector(&c).iter().map(|x| x * x).sum::<f64>().sqrt();
            ensure((norm - 1.0).abs() <= 1e-12, || format!("{c:?} has norm {norm}"))?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut brute = 0;
    for pool_id in 0..500 {
        let size = rng.random_range(1..20);
        let pool = random_pool(&mut rng, size);
        let q_max = rng.random_range(1..6);
        let theta = rng.random_range(0.2..1.0);
        let picked = select_decorrelated(&pool, q_max, theta);
        for i in 0..picked.len() {
            for j in 0..i {
                let cos = cosine(&picked[i].direction, &picked[j].direction).abs();
                ensure(cos <= theta, || format!("pool {pool_id}: |cos| {cos} > {theta}"))?;
            }
        }
        if size <= 8 {
            brute += 1;
            let want: Vec<_> = minimax_order(&pool, q_max, theta).into_iter().map(|i| (pool[i].coeffs.clone(), pool[i].eval.threshold)).collect();
            let got: Vec<_> = picked.iter().map(|s| (s.coeffs.clone(), s.threshold)).collect();
            ensure(got == want, || format!("pool {pool_id}: selection differs from brute-force minimax"))?;
        }
    }
    Ok(format!("{checked} vectors unit-norm, bounded, canonical; 500 pools within theta, {brute} matched brute force"))
}

// Gradient check ----------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let s: f64 = rng.random_range(-5.0..5.0);
        let y: f64 = rng.random_range(-5.0..5.0);
        let (g, h) = BoostLoss::Squared.gradient(s, y);
        let (fg, fh) = central_differences(|z| BoostLoss::Squared.value(z, y), s);
        ensure(close(g, fg, 1e-6) && close(h, fh, 1e-6), || format!("squared at ({s}, {y}): ({g}, {h}) vs ({fg}, {fh})"))?;

        let label = f64::from(u8::from(rng.random_bool(0.5)));
        let (g, h) = BoostLoss::Logistic.gradient(s, label);
        let (fg, fh) = central_differences(|z| BoostLoss::Logistic.value(z, label), s);
        ensure(close(g, fg, 1e-6) && close(h, fh, 1e-6), || format!("logistic at ({s}, {label}): ({g}, {h}) vs ({fg}, {fh})"))?;

        let k = rng.random_range(3..6);
        let scores: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let label = rng.random_range(0..k);
        let c = rng.random_range(0..k);
        let (g, h) = softmax_gradient(&scores, label, c);
        let loss = |z: f64| {
            let mut s = scores.clone();
            s[c] = z;
            -softmax(&s)[label].ln()
        };
        let (fg, fh) = central_differences(loss, scores[c]);
        ensure(close(g, fg, 1e-6) && close(h, fh, 1e-6), || format!("softmax class {c}: ({g}, {h}) vs ({fg}, {fh})"))?;
    }
    Ok("100 points each for squared, logistic and softmax losses within 1e-6".into())
}

// Determinism ---------------------------------------------------------------------

fn files_under(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for sub in ["models", "curves"] {
        let mut entries: Vec<_> = std::fs::read_dir(dir.join(sub)).map_err(|e| e.to_string())?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
        entries.sort();
        for p in entries {
            let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
            out.push((p.strip_prefix(dir).unwrap().to_path_buf(), bytes));
        }
    }
    for name in ["report.txt", "results.csv"] {
        out.push((PathBuf::from(name), std::fs::read(dir.join(name)).map_err(|e| e.to_string())?));
    }
    Ok(out)
}

fn determinism(scratch: &Path) -> Outcome {
    let runs: Vec<PathBuf> = (0..2).map(|i| scratch.join(format!("run{i}"))).collect();
    for out in &runs {
        let status = Command::new(env!("CARGO_BIN_EXE_slm"))
            .arg("benchmark")
            .arg(suite_path())
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || format!("benchmark exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)))?;
    }
    let a = files_under(&runs[0])?;
    let b = files_under(&runs[1])?;
    ensure(a.len() == b.len(), || "different file sets".into())?;
    for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
        ensure(pa == pb && ba == bb, || format!("{} differs between runs", pa.display()))?;
    }
    Ok(format!("{} model, curve and report files byte-identical across two benchmark runs", a.len()))
}

// Serialization -------------------------------------------------------------------

fn round_trip(scratch: &Path) -> Outcome {
    let tree_params = TreeParams {
        projection: ProjectionParams { exhaustive_limit: 0, n_candidates: 20, ..ProjectionParams::default() },
        max_depth: 4,
        ..TreeParams::default()
    };
    let reg_params = TreeParams { loss: LossKind::Mse, ..tree_params.clone() };
    let cls = moons(4, 60, BoundaryNoise::new(0.2, 0.3), 1).map_err(|e| e.to_string())?;
    let bin = moons(2, 60, BoundaryNoise::new(0.3, 0.7), 2).map_err(|e| e.to_string())?;
    let reg = friedman(&FriedmanConfig { noise: 1.0, ..FriedmanConfig::new(FriedmanVariant::One, 200) }, 3).map_err(|e| e.to_string())?;
    let forest = |ds: &Dataset| fit_forest(ds, &ForestParams { n_trees: 4, tree: tree_params.clone(), ..ForestParams::default() });
    let boost = |ds: &Dataset| fit_boost(ds, &BoostParams { n_rounds: 5, tree: tree_params.clone(), ..BoostParams::default() }, None).map(|r| r.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let models: Vec<(Model, &Dataset)> = vec![
        (Model::Tree(build_tree(&cls, &tree_params, &mut rng).map_err(|e| e.to_string())?), &cls),
        (Model::Ensemble(forest(&cls).map_err(|e| e.to_string())?), &cls),
        (Model::Ensemble(boost(&cls).map_err(|e| e.to_string())?), &cls),
        (Model::Ensemble(boost(&bin).map_err(|e| e.to_string())?), &bin),
        (Model::Tree(build_tree(&reg, &reg_params, &mut rng).map_err(|e| e.to_string())?), &reg),
        (Model::Ensemble(forest(&reg).map_err(|e| e.to_string())?), &reg),
        (Model::Ensemble(boost(&reg).map_err(|e| e.to_string())?), &reg),
    ];
    let mut kinds = BTreeSet::new();
    for (i, (model, ds)) in models.into_iter().enumerate() {
        let kind = model.kind_name();
        kinds.insert(kind);
        let file = ModelFile::new(model, serde_json::json!({ "case": i }));
        let path = scratch.join(format!("model{i}.json"));
        file.save(&path).map_err(|e| e.to_string())?;
        let loaded = ModelFile::load(&path).map_err(|e| e.to_string())?;
        let lo = ds.features().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ds.features().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..ds.n_features()).map(|_| rng.random_range(lo - span..hi + span)).collect();
            let (a, b) = (file.model.predict(&x), loaded.model.predict(&x));
            ensure(matches!((&a, &b), (Ok(p), Ok(q)) if p == q), || format!("{kind}: predictions differ at {x:?}"))?;
        }
    }
    ensure(kinds.len() == 6, || format!("only {} model kinds covered", kinds.len()))?;
    Ok(format!("{} kinds, 1000 random inputs each: identical predictions after reload", kinds.len()))
}

// Command-line behaviour ------------------------------------------------------------

fn slm(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_slm")).args(args).output().map_err(|e| e.to_string())
}

fn cli_behaviour(scratch: &Path) -> Outcome {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let data = scratch.join("moons.csv");
    let model = scratch.join("tree.json");
    let out = slm(&["gen-data", "--kind", "moons2", "--n", "200", "-o", &s(&data)])?;
    ensure(out.status.success(), || format!("gen-data failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    ensure(String::from_utf8_lossy(&out.stdout).contains("L=400 D=2 K=2"), || "gen-data did not report L, D, K".into())?;

    let out = slm(&["train", "--model", "slm-tree", "--data", &s(&data), "-o", &s(&model)])?;
    ensure(out.status.success(), || format!("train failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let report = std::fs::read_to_string(scratch.join("tree.report.txt")).map_err(|e| e.to_string())?;
    let json = report.split_once("[json]").map(|(_, j)| j).ok_or("report has no json block")?;
    let v: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let m = &v["metrics"];
    let (train, test) = (m["train"].as_f64().unwrap_or(-1.0), m["test"].as_f64().unwrap_or(-1.0));
    let (nt, ns) = (m["n_train"].as_f64().unwrap_or(0.0), m["n_test"].as_f64().unwrap_or(0.0));

    let preds = scratch.join("preds.csv");
    let out = slm(&["predict", "--model", &s(&model), "--data", &s(&data), "-o", &s(&preds)])?;
    ensure(out.status.success(), || format!("predict failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let body = std::fs::read_to_string(&preds).map_err(|e| e.to_string())?;
    let truth = std::fs::read_to_string(&data).map_err(|e| e.to_string())?;
    let correct = body
        .lines()
        .skip(1)
        .zip(truth.lines().skip(1))
        .filter(|(p, t)| p.split(',').nth(1) == t.rsplit(',').next())
        .count();
    let expected = (train * nt + test * ns).round() as usize;
    ensure(correct == expected, || format!("predict found {correct} correct, report implies {expected}"))?;

    let out = slm(&["train", "--model", "slm-tree", "--data", &s(&scratch.join("missing.csv")), "-o", &s(&model)])?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && err.contains("input not found"), || format!("missing input gave {:?}: {err}", out.status.code()))?;

    let wide = scratch.join("wide.csv");
    let out = slm(&["gen-data", "--kind", "friedman1", "--n", "50", "-o", &s(&wide)])?;
    ensure(out.status.success(), || "friedman1 gen-data failed".into())?;
    let out = slm(&["predict", "--model", &s(&model), "--data", &s(&wide)])?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && err.contains("invalid target"), || format!("regression data on a classifier gave {:?}: {err}", out.status.code()))?;
    let out = slm(&["predict", "--model", &s(&model), "--data", &s(&data), "--task", "regression"])?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && err.contains("task mismatch"), || format!("--task regression on a classifier gave {:?}: {err}", out.status.code()))?;
    let out = slm(&["predict", "--model", &s(&model), "--data", &s(&wide), "--no-target"])?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && err.contains("dimension mismatch") && err.contains('2') && err.contains("11"), || format!("wrong width gave {:?}: {err}", out.status.code()))?;
    Ok("gen-data/train/predict agree with the report; bad input exits 2 with a reason".into())
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let suite = Suite::load(&suite_path()).expect("suite file");
    let bench_dir = scratch.path().join("bench");
    let started = std::time::Instant::now();
    let bench = bench::run_suite(&suite, &HyperOverrides::default(), &bench_dir);
    let bench_secs = started.elapsed().as_secs_f64();
    let bench = &bench;
    let with_bench = |f: fn(&BenchOutput) -> Outcome| -> Box<dyn FnOnce() -> Outcome + '_> {
        Box::new(move || match bench {
            Ok(b) => f(b),
            Err(e) => Err(format!("benchmark failed: {e}")),
        })
    };
    let dir = |name: &str| {
        let p = scratch.path().join(name);
        std::fs::create_dir_all(&p).expect("scratch dir");
        p
    };
    let (det_dir, ser_dir, cli_dir) = (dir("determinism"), dir("serialization"), dir("cli"));

    let checks: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("criterion 1  two moons accuracy", with_bench(two_moons)),
        ("criterion 2  circle-and-ring accuracy", with_bench(circle_ring)),
        ("criterion 3  four moons accuracy", with_bench(four_moons)),
        ("criterion 4  Friedman RMSE", with_bench(friedman_rmse)),
        ("criterion 5  parameter count", Box::new(model_size)),
        ("criterion 6  convergence shape", Box::new(|| convergence(&suite))),
        ("criterion 7  DFT vs exhaustive scan", Box::new(dft_matches_scan)),
        ("criterion 8  CART degeneration", Box::new(cart_degeneration)),
        ("criterion 9  projection invariants", Box::new(projection_invariants)),
        ("criterion 10 boost gradient check", Box::new(gradient_check)),
        ("criterion 11 determinism", Box::new(|| determinism(&det_dir))),
        ("criterion 12 serialization round trip", Box::new(|| round_trip(&ser_dir))),
        ("cli          commands and exit codes", Box::new(|| cli_behaviour(&cli_dir))),
    ];
    println!("acceptance: benchmark suite trained in {bench_secs:.1} s");
    let mut failed = 0;
    for (name, check) in checks {
        let started = std::time::Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS  {name}  ({secs:.1} s)  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}  ({secs:.1} s)  {msg}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} check(s) failed");
        ExitCode::FAILURE
    }
}
