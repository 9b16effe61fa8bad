//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use protolearn::baselines::{
    lvq_update, relaxed_lvq_gradient_step, train_standard_prototype, LvqStepConfig,
};
use protolearn::classifier::{class_posterior, dataset_objective};
use protolearn::data::{
    generate_figure1_toy, group_records_to_soft_labels, load_dataset, load_model, model_from_str,
    model_to_string, random_problem, save_dataset, save_model, stratified_split, ProblemShape,
    Record, RecordTable, SyntheticConfig,
};
use protolearn::encoding::{encode_instance, hard_assign, soft_assign};
use protolearn::gradients::gradient;
use protolearn::metrics::mean_kl_bits;
use protolearn::optimize::{coordinate_ascent_train, initial_model, optimize_theta_block};
use protolearn::{
    evaluate, Codebook, Dataset, EncodeMode, FeatureSet, Instance, Model, OptimizerConfig,
    SoftLabel, TrainConfig, Weights,
};

type Check = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn simplex_error(p: &[f64]) -> f64 {
    (p.iter().sum::<f64>() - 1.0).abs()
}

fn with_centers(m: &Model, centers: Vec<Vec<f64>>, beta: f64) -> Model {
    Model {
        codebook: Codebook::new(centers, beta).unwrap(),
        ..m.clone()
    }
}

fn with_theta(m: &Model, theta: Vec<Vec<f64>>) -> Model {
    Model {
        weights: Weights::new(theta, m.weights.lambda()).unwrap(),
        ..m.clone()
    }
}

/// Central difference of the objective along one coordinate, independent of
/// the library's own checker.
fn central(data: &Dataset, plus: Model, minus: Model, h: f64) -> f64 {
    (dataset_objective(data, &plus).unwrap() - dataset_objective(data, &minus).unwrap()) / (2.0 * h)
}

fn agrees(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= 1e-8 || diff <= 1e-6 * analytic.abs().max(numeric.abs())
}

fn gradient_correctness() -> Check {
    let start = Instant::now();
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for i in 0..50usize {
        let shape = ProblemShape {
            instances: rng.random_range(1..=5),
            max_vectors: rng.random_range(1..=4),
            dim: [1, 2, 3][i % 3],
            k: [1, 2, 4][(i / 3) % 3],
            classes: [2, 3][(i / 9) % 2],
            lambda: [0.0, 0.1][(i / 18) % 2],
        };
        let (data, m) = random_problem(&shape, 1000 + i as u64).unwrap();
        let g = gradient(&data, &m).unwrap();
        let centers = m.codebook.centers().to_vec();
        let beta = m.codebook.beta();
        let mut compare = |a: f64, n: f64, what: String| -> Result<(), String> {
            checked += 1;
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1.0));
            ensure(agrees(a, n), || {
                format!("problem {i} {what}: analytic {a:e} numeric {n:e}")
            })
        };
        for l in 0..shape.k {
            for d in 0..shape.dim {
                let (mut up, mut down) = (centers.clone(), centers.clone());
                up[l][d] += h;
                down[l][d] -= h;
                let n = central(
                    &data,
                    with_centers(&m, up, beta),
                    with_centers(&m, down, beta),
                    h,
                );
                compare(g.d_centers[l][d], n, format!("center {l},{d}"))?;
            }
        }
        let n = central(
            &data,
            with_centers(&m, centers.clone(), beta + h),
            with_centers(&m, centers.clone(), beta - h),
            h,
        );
        compare(g.d_beta, n, "beta".into())?;
        let theta = m.weights.theta().to_vec();
        for c in 0..shape.classes {
            for k in 0..shape.k {
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[c][k] += h;
                down[c][k] -= h;
                let n = central(&data, with_theta(&m, up), with_theta(&m, down), h);
                compare(g.d_theta[c][k], n, format!("theta {c},{k}"))?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("50 problems, {checked} derivatives, worst gap {worst:.2e} relative to max(1, |a|, |b|), {elapsed:.2?}"))
}

fn simplex_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let cases = 10_000;
    for case in 0..cases {
        let dim = rng.random_range(1..=4);
        let k = rng.random_range(1..=6);
        let classes = rng.random_range(2..=4);
        let beta = 10f64.powf(rng.random_range(-3.0..4.0));
        let scale = 10f64.powf(rng.random_range(-1.0..1.5));
        let centers = (0..k).map(|_| normals(&mut rng, dim, scale)).collect();
        let cb = Codebook::new(centers, beta).unwrap();
        let vectors: Vec<Vec<f64>> = (0..rng.random_range(1..=5))
            .map(|_| normals(&mut rng, dim, scale))
            .collect();
        let theta = (0..classes).map(|_| normals(&mut rng, k, 5.0)).collect();
        let w = Weights::new(theta, 0.0).unwrap();
        let set = FeatureSet::new(vectors.clone()).unwrap();
        let mut errors = vec![simplex_error(&soft_assign(&vectors[0], &cb).unwrap())];
        for mode in [EncodeMode::Soft, EncodeMode::Hard] {
            let z = encode_instance(&set, &cb, mode).unwrap();
            errors.push(simplex_error(z.as_slice()));
            errors.push(simplex_error(&class_posterior(&z, &w).unwrap().0));
        }
        let e = errors.into_iter().fold(0.0, f64::max);
        ensure(e <= 1e-12, || format!("case {case}: sum off by {e:e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("{cases} cases, worst deviation {worst:.2e}"))
}

/// Random point whose nearest center beats the runner-up by at least 0.1 in
/// squared distance, together with the winning index. Gives up when the
/// centers nearly coincide.
fn separated_point(rng: &mut ChaCha8Rng, cb: &Codebook) -> Option<(Vec<f64>, usize)> {
    for _ in 0..1000 {
        let x = normals(rng, cb.dim(), 2.0);
        let mut d2: Vec<(f64, usize)> = cb
            .centers()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        d2.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d2.len() == 1 || d2[1].0 - d2[0].0 >= 0.1 {
            return Some((x, d2[0].1));
        }
    }
    None
}

fn separated_codebook(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Codebook {
    loop {
        let centers = (0..k).map(|_| normals(rng, dim, 2.0)).collect();
        let cb = Codebook::new(centers, 1e4).unwrap();
        if separated_point(rng, &cb).is_some() {
            return cb;
        }
    }
}

fn hard_limit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..2_000 {
        let dim = rng.random_range(1..=3);
        let k = rng.random_range(1..=5);
        let cb = separated_codebook(&mut rng, dim, k);
        let vectors: Vec<Vec<f64>> = (0..rng.random_range(1..=4))
            .filter_map(|_| separated_point(&mut rng, &cb).map(|p| p.0))
            .collect();
        if vectors.is_empty() {
            continue;
        }
        for x in &vectors {
            let soft = soft_assign(x, &cb).unwrap();
            let hard = hard_assign(x, &cb).unwrap();
            worst = soft
                .iter()
                .zip(&hard)
                .map(|(a, b)| (a - b).abs())
                .fold(worst, f64::max);
        }
        let set = FeatureSet::new(vectors).unwrap();
        let soft = encode_instance(&set, &cb, EncodeMode::Soft).unwrap();
        let hard = encode_instance(&set, &cb, EncodeMode::Hard).unwrap();
        worst = soft
            .as_slice()
            .iter()
            .zip(hard.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }
    ensure(worst <= 1e-6, || {
        format!("soft and hard differ by {worst:e}")
    })?;
    Ok(format!("2000 instances, worst component gap {worst:.2e}"))
}

fn lvq_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut worst_winner, mut worst_other, mut smallest_move): (f64, f64, f64) =
        (0.0, 0.0, f64::INFINITY);
    for case in 0..500 {
        let dim = rng.random_range(1..=3);
        let k = rng.random_range(2..=5);
        let classes = rng.random_range(2..=4);
        let cb = separated_codebook(&mut rng, dim, k);
        let centers = cb.centers().to_vec();
        let theta = (0..classes).map(|_| normals(&mut rng, k, 1.0)).collect();
        let m = Model::new(cb, Weights::new(theta, 0.0).unwrap()).unwrap();
        let Some((x, winner)) = separated_point(&mut rng, &m.codebook) else {
            continue;
        };
        let label = SoftLabel::one_hot(rng.random_range(0..classes), classes).unwrap();
        let inst = Instance::new(format!("c{case}"), FeatureSet::new(vec![x]).unwrap(), label);
        let eta = 0.05;
        let relaxed = relaxed_lvq_gradient_step(&m, &inst, eta).unwrap();
        let lvq = lvq_update(
            &m,
            &inst.features,
            &inst.label,
            winner,
            &LvqStepConfig::new(eta).unwrap(),
        )
        .unwrap();
        for l in 0..k {
            for d in 0..dim {
                if l == winner {
                    worst_winner = worst_winner.max((relaxed[l][d] - lvq[d]).abs());
                    smallest_move = smallest_move.min((lvq[d] - centers[l][d]).abs());
                } else {
                    worst_other = worst_other.max((relaxed[l][d] - centers[l][d]).abs());
                }
            }
        }
    }
    ensure(worst_winner <= 1e-6, || {
        format!("winner differs from LVQ by {worst_winner:e}")
    })?;
    ensure(worst_other < 1e-6, || {
        format!("a non-winning center moved {worst_other:e}")
    })?;
    Ok(format!(
        "500 instances, winner gap {worst_winner:.2e}, non-winner motion {worst_other:.2e}, smallest LVQ move {smallest_move:.2e}"
    ))
}

fn convex_theta_block() -> Check {
    let data = generate_figure1_toy(&SyntheticConfig::soft_benchmark(0)).unwrap();
    let tc = TrainConfig {
        k: 4,
        lambda: 0.1,
        ..TrainConfig::default()
    };
    let (base, _) = initial_model(&data, &tc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut finals = Vec::new();
    for _ in 0..3 {
        let theta = (0..base.classes())
            .map(|_| normals(&mut rng, base.k(), 3.0))
            .collect();
        let (_, outcome) = optimize_theta_block(
            &data,
            &with_theta(&base, theta),
            &OptimizerConfig::default(),
        )
        .unwrap();
        finals.push(outcome.objective);
    }
    let spread = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - finals.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(spread <= 1e-6, || format!("restarts ended at {finals:?}"))?;
    Ok(format!(
        "3 restarts reach {:.9}, spread {spread:.2e}",
        finals[0]
    ))
}

fn figure1_runs() -> Vec<(Vec<f64>, Model, Model)> {
    (0..5)
        .map(|seed| {
            let data = generate_figure1_toy(&SyntheticConfig::figure1(seed)).unwrap();
            let tc = TrainConfig {
                k: 2,
                seed,
                ..TrainConfig::default()
            };
            let (init, _) = initial_model(&data, &tc).unwrap();
            let (learned, report) =
                coordinate_ascent_train(&data, &tc, &OptimizerConfig::default()).unwrap();
            (report.objective_trace, init, learned)
        })
        .collect()
}

fn monotone_ascent(runs: &[(Vec<f64>, Model, Model)]) -> Check {
    let mut gains = Vec::new();
    for (seed, (trace, _, _)) in runs.iter().enumerate() {
        for (i, w) in trace.windows(2).enumerate() {
            ensure(w[1] >= w[0] - 1e-9, || {
                format!(
                    "seed {seed}: trace drops at {}: {} -> {}",
                    i + 1,
                    w[0],
                    w[1]
                )
            })?;
        }
        let (first, last) = (trace[0], *trace.last().unwrap());
        ensure(last > first, || {
            format!("seed {seed}: final {last} does not exceed initial {first}")
        })?;
        gains.push(format!("{first:.3}->{last:.3}"));
    }
    Ok(format!("seeds 0-4: {}", gains.join(", ")))
}

fn centers_move(runs: &[(Vec<f64>, Model, Model)]) -> Check {
    let mut moves = Vec::new();
    for (seed, (_, init, learned)) in runs.iter().enumerate() {
        let shift = init
            .codebook
            .centers()
            .iter()
            .zip(learned.codebook.centers())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        ensure(shift > 0.1, || {
            format!("seed {seed}: a center moved only {shift}")
        })?;
        moves.push(format!("{shift:.3}"));
    }
    Ok(format!(
        "smallest center displacement per seed: {}",
        moves.join(", ")
    ))
}

fn baseline_dominance() -> Check {
    let (mut prob, mut base) = (0.0, 0.0);
    let mut pairs = Vec::new();
    for seed in 0..5 {
        let data = generate_figure1_toy(&SyntheticConfig::soft_benchmark(seed)).unwrap();
        let split = stratified_split(&data, 0.5, seed).unwrap();
        ensure(split.train.len() == 200 && split.test.len() == 200, || {
            format!(
                "seed {seed}: split {}/{}",
                split.train.len(),
                split.test.len()
            )
        })?;
        let tc = TrainConfig {
            k: 4,
            seed,
            ..TrainConfig::default()
        };
        let oc = OptimizerConfig::default();
        let (model, _) = coordinate_ascent_train(&split.train, &tc, &oc).unwrap();
        let baseline = train_standard_prototype(&split.train, &tc, &oc, EncodeMode::Hard).unwrap();
        let p = evaluate(&split.test, &model).unwrap().mean_test_loglik;
        let b = evaluate(&split.test, &baseline).unwrap().mean_test_loglik;
        pairs.push(format!("{p:.3}/{b:.3}"));
        prob += p / 5.0;
        base += b / 5.0;
    }
    ensure(prob > base, || {
        format!("probabilistic {prob} vs baseline {base}")
    })?;
    Ok(format!(
        "mean test loglik {prob:.4} vs {base:.4} (per seed {})",
        pairs.join(", ")
    ))
}

/// Correctly rounded value of a ratio of integers below 2^53.
fn to_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn record_table(rng: &mut ChaCha8Rng, arities: &[u32], classes: usize, rows: usize) -> RecordTable {
    let rows = (0..rows)
        .map(|_| Record {
            attributes: arities.iter().map(|&a| rng.random_range(0..a)).collect(),
            class: rng.random_range(1..=classes),
        })
        .collect();
    RecordTable::new(arities.to_vec(), classes, rows).unwrap()
}

fn grouping() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tables = vec![
        RecordTable::new(
            vec![2, 2],
            3,
            vec![
                Record {
                    attributes: vec![0, 1],
                    class: 1,
                },
                Record {
                    attributes: vec![1, 1],
                    class: 3,
                },
                Record {
                    attributes: vec![0, 1],
                    class: 2,
                },
                Record {
                    attributes: vec![0, 1],
                    class: 1,
                },
                Record {
                    attributes: vec![1, 0],
                    class: 2,
                },
            ],
        )
        .unwrap(),
        RecordTable::new(
            vec![4],
            2,
            vec![
                Record {
                    attributes: vec![3],
                    class: 2
                };
                7
            ],
        )
        .unwrap(),
    ];
    for _ in 0..20 {
        tables.push(record_table(&mut rng, &[2, 3, 2], 4, 300));
    }
    let mut groups = 0;
    for (t, table) in tables.iter().enumerate() {
        // exact oracle: counts per distinct tuple in first-appearance order
        let mut order: Vec<&[u32]> = Vec::new();
        let mut counts: HashMap<&[u32], Vec<i64>> = HashMap::new();
        for row in table.rows() {
            let entry = counts.entry(&row.attributes).or_insert_with(|| {
                order.push(&row.attributes);
                vec![0; table.classes()]
            });
            entry[row.class - 1] += 1;
        }
        let data = group_records_to_soft_labels(table).unwrap();
        ensure(data.len() == order.len(), || {
            format!("table {t}: {} groups, expected {}", data.len(), order.len())
        })?;
        for (inst, key) in data.instances().iter().zip(&order) {
            let c = &counts[key];
            let size: i64 = c.iter().sum();
            let exact: Vec<Ratio<i64>> = c.iter().map(|&n| Ratio::new(n, size)).collect();
            ensure(
                exact.iter().sum::<Ratio<i64>>() == Ratio::from_integer(1),
                || "exact frequencies do not sum to 1".into(),
            )?;
            for (j, r) in exact.iter().enumerate() {
                let got = inst.label.probs()[j];
                ensure(got == to_f64(r), || {
                    format!("table {t} group {key:?} class {j}: {got} vs {r}")
                })?;
                ensure(
                    Ratio::<i64>::approximate_float(got).is_some_and(|a| a == *r),
                    || format!("table {t} group {key:?} class {j}: {got} is not {r}"),
                )?;
            }
            ensure(inst.features.len() as i64 == size, || {
                format!("table {t}: group size mismatch")
            })?;
            let expected: Vec<f64> = key.iter().map(|&a| f64::from(a)).collect();
            ensure(
                inst.features.vectors().iter().all(|v| *v == expected),
                || format!("table {t}: wrong vectors"),
            )?;
        }
        let labels: Vec<SoftLabel> = data.instances().iter().map(|i| i.label.clone()).collect();
        let perfect: Vec<Vec<f64>> = labels.iter().map(|l| l.probs().to_vec()).collect();
        let kl = mean_kl_bits(&labels, &perfect).unwrap();
        ensure(kl == 0.0, || {
            format!("table {t}: perfect predictor KL {kl}")
        })?;
        groups += data.len();
    }
    Ok(format!(
        "{} tables, {groups} groups exact, perfect-predictor KL 0",
        tables.len()
    ))
}

fn same_bits(a: &Model, b: &Model) -> bool {
    let flat = |m: &Model| -> Vec<u64> {
        m.codebook
            .centers()
            .iter()
            .flatten()
            .chain(m.weights.theta().iter().flatten())
            .chain([m.codebook.beta(), m.weights.lambda()].iter())
            .map(|v| v.to_bits())
            .collect()
    };
    flat(a) == flat(b) && a.mode == b.mode
}

fn serialization() -> Check {
    let dir = tempfile::TempDir::new().unwrap();
    let mut models = Vec::new();
    for seed in 0..20 {
        let shape = ProblemShape {
            dim: 1 + (seed as usize) % 3,
            k: 1 + (seed as usize) % 4,
            classes: 2 + (seed as usize) % 2,
            lambda: 0.1 * seed as f64,
            ..ProblemShape::default()
        };
        let (data, m) = random_problem(&shape, seed).unwrap();
        models.push((data.clone(), m.clone().with_mode(EncodeMode::Hard)));
        models.push((data, m));
    }
    let fig = generate_figure1_toy(&SyntheticConfig::figure1(0)).unwrap();
    let tc = TrainConfig {
        k: 2,
        ..TrainConfig::default()
    };
    models.push((
        fig.clone(),
        coordinate_ascent_train(&fig, &tc, &OptimizerConfig::default())
            .unwrap()
            .0,
    ));

    for (i, (data, m)) in models.iter().enumerate() {
        let text = model_to_string(m);
        let back = model_from_str(&text, Path::new("memory")).unwrap();
        ensure(same_bits(m, &back), || {
            format!("model {i}: string round trip changed bits")
        })?;
        ensure(model_to_string(&back) == text, || {
            format!("model {i}: re-serialization differs")
        })?;
        let path = dir.path().join(format!("m{i}.json"));
        save_model(m, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        ensure(same_bits(m, &loaded), || {
            format!("model {i}: file round trip changed bits")
        })?;
        let (before, after) = (
            dataset_objective(data, m).unwrap(),
            dataset_objective(data, &loaded).unwrap(),
        );
        ensure(before.to_bits() == after.to_bits(), || {
            format!("model {i}: objective {before} vs {after}")
        })?;

        let dpath = dir.path().join(format!("d{i}.jsonl"));
        save_dataset(data, &dpath).unwrap();
        let reread = load_dataset(&dpath).unwrap();
        ensure(reread == *data, || {
            format!("dataset {i}: round trip differs")
        })?;
        for inst in reread.instances() {
            ensure(simplex_error(inst.label.probs()) <= 1e-9, || {
                format!("dataset {i}: label off the simplex")
            })?;
            ensure(
                inst.features.dim() == reread.dim() && !inst.features.is_empty(),
                || format!("dataset {i}: feature shape broken"),
            )?;
        }
    }
    Ok(format!(
        "{} models and datasets round-trip bit-identically",
        models.len()
    ))
}

fn cli_session(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let script: &[&[&str]] = &[
        &[
            "synth",
            "--preset",
            "figure1",
            "--seed",
            "2",
            "--out",
            "train.jsonl",
            "--test",
            "test.jsonl",
        ],
        &[
            "synth",
            "--preset",
            "soft-benchmark",
            "--seed",
            "1",
            "--out",
            "bench.jsonl",
        ],
        &[
            "train",
            "--data",
            "train.jsonl",
            "--test",
            "test.jsonl",
            "--k",
            "2",
            "--out",
            "prob.json",
        ],
        &[
            "train",
            "--data",
            "train.jsonl",
            "--k",
            "2",
            "--mode",
            "standard",
            "--out",
            "std.json",
        ],
        &["eval", "--data", "test.jsonl", "--model", "prob.json"],
        &[
            "predict",
            "--data",
            "test.jsonl",
            "--model",
            "prob.json",
            "--out",
            "pred.jsonl",
        ],
        &["predict", "--data", "test.jsonl", "--model", "std.json"],
        &["gradcheck", "--seed", "0"],
        &[
            "baseline",
            "--data",
            "train.jsonl",
            "--k",
            "2",
            "--encoding",
            "soft",
            "--out",
            "base.json",
        ],
        &[
            "baseline",
            "--method",
            "lvq",
            "--data",
            "train.jsonl",
            "--model",
            "base.json",
            "--out",
            "lvq.json",
        ],
    ];
    let mut outputs = Vec::new();
    for args in script {
        let out = Command::new(env!("CARGO_BIN_EXE_protolearn"))
            .args(*args)
            .current_dir(dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push((format!("stdout of {}", args.join(" ")), out.stdout));
    }
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        outputs.push((
            f.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&f).unwrap(),
        ));
    }
    outputs
}

fn cli_determinism() -> Check {
    let (a, b) = (
        tempfile::TempDir::new().unwrap(),
        tempfile::TempDir::new().unwrap(),
    );
    let (first, second) = (cli_session(a.path()), cli_session(b.path()));
    ensure(first.len() == second.len(), || {
        "sessions produced different file sets".into()
    })?;
    for ((name, x), (other, y)) in first.iter().zip(&second) {
        ensure(name == other && x == y, || {
            format!("{name} differs between runs")
        })?;
    }
    Ok(format!(
        "{} outputs byte-identical across two sessions",
        first.len()
    ))
}

fn main() {
    let runs = once(figure1_runs);
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("gradient correctness", Box::new(gradient_correctness)),
        ("simplex invariants", Box::new(simplex_invariants)),
        ("hard limit", Box::new(hard_limit)),
        ("LVQ reduction", Box::new(lvq_reduction)),
        ("convex weight subproblem", Box::new(convex_theta_block)),
        (
            "monotone coordinate ascent",
            Box::new({
                let runs = runs.clone();
                move || monotone_ascent(&runs())
            }),
        ),
        (
            "discriminative centers move",
            Box::new(move || centers_move(&runs())),
        ),
        (
            "baseline dominance in likelihood",
            Box::new(baseline_dominance),
        ),
        ("soft labels from grouped records", Box::new(grouping)),
        ("serialization round trip", Box::new(serialization)),
        ("CLI determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Lazily computed, shared result.
fn once<T: Clone + 'static>(f: fn() -> T) -> std::rc::Rc<dyn Fn() -> T> {
    let cell = std::rc::Rc::new(std::cell::OnceCell::new());
    std::rc::Rc::new(move || cell.get_or_init(f).clone())
}
