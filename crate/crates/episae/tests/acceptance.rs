//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::fixtures::{self, qc_fixture, sample_key, variant_id};
use common::gradcheck::{max_rel_error, random_case, richardson_gradient};
use common::oracles::{brute_force_logistic, chi2_tail, exhaustive_f1_threshold, ks_distance, pairwise_auc};
use episae::report::{self, TABLE_HEADER};
use episae_core::assoc::{fit_logistic, AssocTest};
use episae_core::genotype::*;
use episae_core::matrix::Matrix;
use episae_core::metrics;
use episae_core::nn::{average_activation, batch_gradient, cost, sparse_cost, Activation, TrainConfig};
use episae_core::pipeline::{encode, train_autoencoder, ExperimentConfig, ModelSpec, ThresholdMode};
use episae_core::qc::{run_qc, Axis, QcThresholds, StageReport};
use episae_core::rng::{indexed_substream, substream};
use episae_core::simulate::{epistasis_spec, simulate, MainEffect, SimSpec};
use episae_core::stats::chi2_survival;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, budget_s: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(budget_s) {
        Err(format!("took {:.1} s, budget {budget_s} s", elapsed.as_secs_f64()))
    } else {
        Ok(())
    }
}

fn gradient_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut nets = 0;
    for k in 0..30u64 {
        let mut rng = indexed_substream(1, "acceptance-fd", k);
        let mode = k % 3;
        let hidden = if mode == 2 || k % 2 == 0 { Activation::Sigmoid } else { Activation::Tanh };
        let output = if k % 4 < 2 { Activation::Sigmoid } else { Activation::Linear };
        let case = random_case(&mut rng, hidden, output, 5);
        let rows: Vec<usize> = (0..5).collect();
        let err = match mode {
            0 | 1 => {
                let decay = if mode == 0 { 0.0 } else { 0.01 };
                let cfg = TrainConfig { weight_decay: decay, ..TrainConfig::plain(0.1, 1) };
                let a = batch_gradient(&case.net, &case.inputs, &case.targets, &rows, &cfg, None, None).unwrap();
                let n = richardson_gradient(&case.net, |net| cost(net, &case.inputs, &case.targets, decay).unwrap());
                max_rel_error(&a, &n)
            }
            _ => {
                let cfg = TrainConfig { sparsity_beta: 3.0, sparsity_p: 0.05, ..TrainConfig::plain(0.1, 1) };
                let p_hat = average_activation(&case.net, &case.inputs).unwrap();
                let a =
                    batch_gradient(&case.net, &case.inputs, &case.targets, &rows, &cfg, Some(&p_hat), None).unwrap();
                let n =
                    richardson_gradient(&case.net, |net| sparse_cost(net, &case.inputs, &case.targets, &cfg).unwrap());
                max_rel_error(&a, &n)
            }
        };
        worst = worst.max(err);
        nets += 1;
    }
    within(t0.elapsed(), 30)?;
    check(worst < 1e-6, format!("{nets} networks (plain, decay 0.01, sparse beta 3), max relative error {worst:.2e}"))
}

fn auc_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut gini_exact = true;
    for k in 0..100u64 {
        let mut rng = indexed_substream(2, "acceptance-auc", k);
        let n = rng.gen_range(2..=200);
        let mut y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        y[0] = 0;
        y[1] = 1;
        let levels = rng.gen_range(2..30);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let a = metrics::auc(&s, &y).unwrap();
        worst = worst.max((a - pairwise_auc(&s, &y)).abs());
        gini_exact &= metrics::gini(a) == 2.0 * a - 1.0;
    }
    within(t0.elapsed(), 5)?;
    check(
        worst <= 1e-12 && gini_exact,
        format!("100 tied fixtures, max |auc - pairwise| {worst:.1e}, gini exact {gini_exact}"),
    )
}

fn genomic_control_null() -> Outcome {
    let t0 = Instant::now();
    let spec = SimSpec { n_cases: 1000, n_controls: 1000, n_variants: 10_000, seed: 3, ..SimSpec::default() };
    let sim = simulate(&spec).map_err(|e| e.to_string())?;
    let ds = &sim.dataset;
    let y: Vec<u8> = ds.samples.iter().map(|s| s.phenotype.label().unwrap()).collect();
    let scan = episae::par::scan(&ds.genotypes, &ds.variants, &y, AssocTest::Logistic).map_err(|e| e.to_string())?;
    let p: Vec<f64> = scan.results.iter().map(|r| r.p_raw).collect();
    let ks = ks_distance(&p);
    within(t0.elapsed(), 120)?;
    let lam = scan.gc.raw_lambda;
    check(
        (0.95..=1.05).contains(&lam) && (0.95..=1.05).contains(&scan.gc.lambda) && ks < 0.05,
        format!("lambda {lam:.4} (applied {:.4}), KS distance {ks:.4}", scan.gc.lambda),
    )
}

fn expand(cases: [u32; 3], controls: [u32; 3]) -> (Vec<f64>, Vec<u8>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for g in 0..3 {
        x.extend(std::iter::repeat_n(g as f64, (cases[g] + controls[g]) as usize));
        y.extend(std::iter::repeat_n(1, cases[g] as usize));
        y.extend(std::iter::repeat_n(0, controls[g] as usize));
    }
    (x, y)
}

fn logistic_oracle() -> Outcome {
    let t0 = Instant::now();
    let fixtures: [([u32; 3], [u32; 3]); 10] = [
        ([30, 40, 30], [50, 35, 15]),
        ([10, 25, 40], [40, 30, 5]),
        ([100, 80, 20], [110, 75, 15]),
        ([5, 9, 3], [7, 4, 1]),
        ([200, 150, 50], [260, 120, 20]),
        ([12, 12, 12], [12, 12, 12]),
        ([60, 30, 10], [40, 45, 15]),
        ([3, 20, 30], [25, 15, 2]),
        ([400, 100, 6], [380, 118, 4]),
        ([8, 2, 1], [1, 4, 9]),
    ];
    let mut worst = 0.0f64;
    for (cases, controls) in fixtures {
        let (x, y) = expand(cases, controls);
        let fit = fit_logistic(&x, &y).map_err(|e| e.to_string())?;
        let (b0, b1) = brute_force_logistic(cases, controls);
        worst = worst.max((fit.beta0 - b0).abs()).max((fit.beta1 - b1).abs());
    }
    within(t0.elapsed(), 10)?;
    check(worst < 1e-6, format!("10 fixtures, max coefficient difference {worst:.2e}"))
}

fn chi2_tails() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (x, target) in [(3.841, 0.05), (6.635, 0.01)] {
        let got = chi2_survival(x, 1).map_err(|e| e.to_string())?;
        let oracle = chi2_tail(x, 1);
        ok &= (got - target).abs() <= 1e-4 && (got - oracle).abs() <= 1e-10;
        lines.push(format!("Q({x}, 1) = {got:.6} (oracle {oracle:.6})"));
    }
    check(ok, lines.join(", "))
}

fn random_dataset(k: u64) -> Dataset {
    let mut rng = indexed_substream(6, "acceptance-io", k);
    let n = rng.gen_range(0..40);
    let m = rng.gen_range(0..25);
    let codes = (0..n * m).map(|_| Genotype::from_dosage(rng.gen_range(0..4))).collect();
    let samples = (0..n)
        .map(|i| {
            let sex = [Sex::Unknown, Sex::Male, Sex::Female][rng.gen_range(0..3)];
            let ph = [Phenotype::Control, Phenotype::Case, Phenotype::Missing][rng.gen_range(0..3)];
            SampleRecord::new(&format!("F{}", i / 3), &format!("I{i}"), sex, ph)
        })
        .collect();
    let alleles = [("A", "G"), ("C", "T"), ("AT", "A"), ("0", "0")];
    let variants = (0..m)
        .map(|j| {
            let (a1, a2) = alleles[rng.gen_range(0..4)];
            VariantRecord {
                chromosome: rng.gen_range(1..=26),
                variant_id: format!("rs{k}_{j}"),
                genetic_distance: rng.gen_range(-5.0..5.0),
                bp_position: rng.gen_range(0..250_000_000),
                allele1: a1.into(),
                allele2: a2.into(),
            }
        })
        .collect();
    Dataset::new(samples, variants, GenotypeMatrix::new(n, m, codes)).unwrap()
}

fn bit_exact_io() -> Outcome {
    let mut diffs = 0;
    for k in 0..1000 {
        let ds = random_dataset(k);
        let bed = write_bed(&ds.genotypes);
        let fam = write_fam(&ds.samples);
        let bim = write_bim(&ds.variants);
        let samples = parse_fam(&fam).map_err(|e| e.to_string())?;
        let variants = parse_bim(&bim).map_err(|e| e.to_string())?;
        let g = parse_bed(&bed, samples.len(), variants.len()).map_err(|e| e.to_string())?;
        let back = Dataset::new(samples, variants, g).map_err(|e| e.to_string())?;
        let rewritten = (write_bed(&back.genotypes), write_fam(&back.samples), write_bim(&back.variants));
        if back != ds || rewritten != (bed, fam, bim) {
            diffs += 1;
        }
    }
    check(diffs == 0, format!("1000 datasets, {diffs} with differences"))
}

fn qc_fixture_suite() -> Outcome {
    let thr = QcThresholds { pc2_cutoff: 0.5, ..QcThresholds::default() };
    let data = qc_fixture(0);
    let (out, rep) = run_qc(&data, &thr).map_err(|e| e.to_string())?;
    let expected: [(&str, Vec<String>); 9] = [
        ("sex_check", vec![sample_key(fixtures::SEX_MISMATCH)]),
        ("sample_missingness", vec![sample_key(fixtures::HIGH_MISSING)]),
        ("heterozygosity", vec![sample_key(fixtures::HET_OUTLIER)]),
        ("ancestry", vec![sample_key(fixtures::ANCESTRY_OUTLIER)]),
        ("ibd", vec![sample_key(fixtures::DUPLICATE)]),
        ("sample_call_rate", vec![]),
        ("variant_missingness", vec![variant_id(fixtures::MISSING_VARIANT)]),
        ("maf", vec![variant_id(fixtures::MONOMORPHIC_VARIANT)]),
        ("hwe", vec![variant_id(fixtures::HWE_VARIANT)]),
    ];
    let mut wrong = Vec::new();
    for (name, removed) in &expected {
        let got = rep.stage(name).map(|s| s.removed.clone()).unwrap_or_default();
        if &got != removed {
            wrong.push(format!("{name}: {got:?}"));
        }
    }
    let (again, second) = run_qc(&out, &thr).map_err(|e| e.to_string())?;
    let idempotent = again == out && second.removed_total(Axis::Sample) + second.removed_total(Axis::Variant) == 0;
    let counts: Vec<usize> = rep.stages.iter().map(StageReport::removed_count).collect();
    check(
        wrong.is_empty() && idempotent,
        format!("per-stage removals {counts:?}, idempotent {idempotent} {}", wrong.join("; ")),
    )
}

fn mean_activation(beta: f64) -> Result<f64, String> {
    let mut rng = substream(8, "acceptance-sparsity");
    let x = Matrix::from_vec(200, 20, (0..200 * 20).map(|_| rng.gen_range(0.0..1.0)).collect());
    let cfg = TrainConfig { sparsity_beta: beta, sparsity_p: 0.05, batch_size: 0, ..TrainConfig::plain(0.1, 500) };
    let ae = train_autoencoder(&x, 10, (Activation::Sigmoid, Activation::Sigmoid), &cfg, &mut rng)
        .map_err(|e| e.to_string())?;
    let h = encode(&ae.encoder, &x).map_err(|e| e.to_string())?;
    Ok(h.as_slice().iter().sum::<f64>() / h.as_slice().len() as f64)
}

fn sparsity_behavior() -> Outcome {
    let t0 = Instant::now();
    let sparse = mean_activation(3.0)?;
    let control = mean_activation(0.0)?;
    within(t0.elapsed(), 60)?;
    check(
        (sparse - 0.05).abs() <= 0.05 && (control - 0.05).abs() > 0.1,
        format!("mean hidden activation beta=3: {sparse:.4}, beta=0: {control:.4} (target 0.05)"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn epistasis_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::logistic("Logistic"),
        ModelSpec::mlp("DL", &[10, 10, 10, 10]),
        ModelSpec::sae("SAE", &[50, 30, 14], &[20, 20]),
    ]
}

fn epistasis_experiment() -> Outcome {
    let t0 = Instant::now();
    let mut auc: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut notes = Vec::new();
    for seed in 1..=5u64 {
        let spec = epistasis_spec(3000, 500, 5, 0.15, 1.2, seed);
        let sim = simulate(&spec).map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig {
            models: epistasis_models(),
            p_threshold: Some(0.05),
            threshold_mode: ThresholdMode::Holdout,
            assoc_test: AssocTest::Logistic,
            split_seed: seed,
            seed,
        };
        let exp = episae::par::run_experiment(&sim.dataset, &cfg).map_err(|e| e.to_string())?;
        let causal = exp.prepared.features.columns.iter().filter(|&&j| j < 10).count();
        let mut line = format!("seed {seed}: {} selected ({causal}/10 causal)", exp.prepared.features.width());
        for o in &exp.outcomes {
            auc.entry(["Logistic", "DL", "SAE"].into_iter().find(|n| *n == o.name).unwrap())
                .or_default()
                .push(o.test.auc);
            line.push_str(&format!(" {} {:.3}", o.name, o.test.auc));
        }
        notes.push(line);
    }
    for n in &notes {
        println!("    {n}");
    }
    let elapsed = t0.elapsed();
    let (sae, base, dl) = (median(auc["SAE"].clone()), median(auc["Logistic"].clone()), median(auc["DL"].clone()));
    within(elapsed, 900)?;
    check(
        sae >= base + 0.05 && sae >= 0.70,
        format!(
            "median test AUC SAE {sae:.3}, logistic {base:.3}, MLP {dl:.3}; need SAE >= {:.3} and >= 0.70 ({:.0} s)",
            base + 0.05,
            elapsed.as_secs_f64()
        ),
    )
}

fn quick(m: ModelSpec) -> ModelSpec {
    ModelSpec {
        pretrain: TrainConfig { epochs: 3, batch_size: 16, ..m.pretrain.clone() },
        finetune: TrainConfig { epochs: 8, batch_size: 16, ..m.finetune.clone() },
        ..m
    }
}

fn protocol_fidelity() -> Outcome {
    let spec = SimSpec {
        n_cases: 200,
        n_controls: 200,
        n_variants: 60,
        main_effects: (0..6).map(|j| MainEffect { variant: j, odds_ratio: 2.5 }).collect(),
        seed: 10,
        ..SimSpec::default()
    };
    let ds = simulate(&spec).map_err(|e| e.to_string())?.dataset;
    let cfg = ExperimentConfig {
        models: vec![
            ModelSpec::logistic("Logistic"),
            quick(ModelSpec::mlp("DL", &[8, 8])),
            quick(ModelSpec::sae("SAE1", &[6], &[4])),
            quick(ModelSpec::sae("SAE2", &[8, 4], &[4])),
        ],
        threshold_mode: ThresholdMode::Paper,
        ..ExperimentConfig::default()
    };
    let exp = episae::par::run_experiment(&ds, &cfg).map_err(|e| e.to_string())?;
    let p = &exp.prepared;
    let mut problems = Vec::new();
    for (split, table) in [
        ("validation", report::model_table(exp.outcomes.iter().map(|o| (o.name.as_str(), &o.validation)))),
        ("test", report::model_table(exp.outcomes.iter().map(|o| (o.name.as_str(), &o.test)))),
    ] {
        let bytes = table.map_err(|e| e.to_string())?;
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        let header: Vec<String> = rd.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        if header != TABLE_HEADER {
            problems.push(format!("{split} header {header:?}"));
        }
        let names: Vec<String> = rd.records().map(|r| r.unwrap()[0].to_string()).collect();
        if names != ["Logistic", "DL", "SAE1", "SAE2"] {
            problems.push(format!("{split} rows {names:?}"));
        }
    }
    for o in &exp.outcomes {
        if o.validation.threshold != exhaustive_f1_threshold(&o.validation_scores, &p.y[1]) {
            problems.push(format!("{} validation threshold", o.name));
        }
        if o.test.threshold != exhaustive_f1_threshold(&o.test_scores, &p.y[2]) {
            problems.push(format!("{} test threshold", o.name));
        }
    }
    check(
        problems.is_empty(),
        format!(
            "columns {}; {} models; paper-mode thresholds F1-optimal {}",
            TABLE_HEADER.join(","),
            exp.outcomes.len(),
            problems.join("; ")
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_episae")).args(args).arg("--quiet").output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("episae {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let config = root.join("run.toml");
    fs::write(
        &config,
        r#"seed = 5
[simulate]
n_cases = 250
n_controls = 250
n_variants = 120
main_effects = [{ variant = 0, odds_ratio = 2.0 }, { variant = 1, odds_ratio = 1.8 }]
epistatic_pairs = [{ first = 2, second = 3, model = "xor", effect = 1.2 }]
"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = config.to_str().unwrap();
    let sim = root.join("sim");
    run_cli(&["simulate", "--config", cfg, "--out", sim.to_str().unwrap()])?;
    let prefix = sim.join("cohort");
    let mut runs = Vec::new();
    for (k, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = root.join(format!("train{k}"));
        run_cli(&[
            "train",
            "--config",
            cfg,
            "--input",
            prefix.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "--p-threshold",
            "0.2",
        ])?;
        runs.push(dir_contents(&out));
    }
    let csv = runs[0].keys().filter(|k| k.ends_with(".csv")).count();
    let ckpt = runs[0].keys().filter(|k| k.ends_with(".ckpt")).count();
    let same_rerun = runs[0] == runs[1];
    let same_threads = runs[0] == runs[2];
    check(
        same_rerun && same_threads && csv > 0 && ckpt == 5,
        format!(
            "{} files ({csv} CSV, {ckpt} checkpoints); rerun identical {same_rerun}, --threads 1 vs 4 identical {same_threads}",
            runs[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("gradient oracle", gradient_oracle),
        ("AUC oracle", auc_oracle),
        ("genomic control null", genomic_control_null),
        ("logistic oracle", logistic_oracle),
        ("chi-square tail oracle", chi2_tails),
        ("bit-exact IO", bit_exact_io),
        ("QC fixture suite", qc_fixture_suite),
        ("sparsity behavior", sparsity_behavior),
        ("epistasis experiment", epistasis_experiment),
        ("protocol fidelity", protocol_fidelity),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2} {name}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|p| label.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("PASS {label}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {label}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
