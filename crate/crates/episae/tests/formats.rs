use std::path::Path;

use episae::config::{parse_arch, Overrides, PipelineConfig};
use episae::error::{EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE};
use episae::plink::{drop_missing_phenotypes, read_dataset, with_ext, write_dataset};
use episae::report::{self, TABLE_HEADER};
use episae::{svg, Error};
use episae_core::assoc::{AssocTest, Scan};
use episae_core::metrics::evaluate;
use episae_core::nn::NnError;
use episae_core::pipeline::{ModelKind, PipelineError, ThresholdMode};
use episae_core::qc::QcError;
use episae_core::simulate::{simulate, MainEffect, SimSpec};
use episae_core::Phenotype;

fn small_cohort(seed: u64) -> episae_core::Dataset {
    let spec = SimSpec {
        n_cases: 40,
        n_controls: 50,
        n_variants: 30,
        main_effects: vec![MainEffect { variant: 3, odds_ratio: 2.0 }],
        missing_rate: 0.05,
        seed,
        ..SimSpec::default()
    };
    simulate(&spec).unwrap().dataset
}

#[test]
fn fileset_roundtrips_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sub/run.v1");
    let ds = small_cohort(5);
    write_dataset(&prefix, &ds).unwrap();
    assert!(with_ext(&prefix, "bed").ends_with("run.v1.bed"));
    assert_eq!(read_dataset(&prefix).unwrap(), ds);
}

#[test]
fn missing_files_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let err = read_dataset(&dir.path().join("nothing")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), EXIT_DATA);
    assert!(err.to_string().contains("nothing.fam"));
}

#[test]
fn truncated_bed_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("c");
    write_dataset(&prefix, &small_cohort(1)).unwrap();
    let bed = with_ext(&prefix, "bed");
    let bytes = std::fs::read(&bed).unwrap();
    std::fs::write(&bed, &bytes[..bytes.len() - 1]).unwrap();
    let err = read_dataset(&prefix).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "{err}");
    assert!(err.to_string().contains("c.bed"));
}

#[test]
fn drops_only_unlabelled_samples() {
    let mut ds = small_cohort(2);
    ds.samples[4].phenotype = Phenotype::Missing;
    ds.samples[9].phenotype = Phenotype::Missing;
    let (kept, dropped) = drop_missing_phenotypes(&ds);
    assert_eq!(dropped, 2);
    assert_eq!(kept.n_samples(), ds.n_samples() - 2);
    assert!(kept.samples.iter().all(|s| s.phenotype.label().is_some()));
    assert_eq!(kept.genotypes.row(4), ds.genotypes.row(5));
}

#[test]
fn default_config_roundtrips_through_toml() {
    let cfg = PipelineConfig::default();
    let text = cfg.to_toml();
    assert_eq!(PipelineConfig::from_toml(&text, Path::new("x.toml")).unwrap(), cfg);
    assert_eq!(cfg.assoc.p_threshold, 0.01);
    assert_eq!(cfg.train.threshold_mode, ThresholdMode::Holdout);
}

#[test]
fn partial_config_keeps_defaults() {
    let text = r#"
seed = 9
[qc]
maf_min = 0.02
[assoc]
test = "allelic"
[[train.models]]
name = "S"
kind = "sae"
hidden = [8, 4]
head = [4]
hidden_activation = "sigmoid"
"#;
    let cfg = PipelineConfig::from_toml(text, Path::new("p.toml")).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.qc.maf_min, 0.02);
    assert_eq!(cfg.qc.hwe_p_min, 0.001);
    assert_eq!(cfg.assoc.test, AssocTest::Allelic);
    assert_eq!(cfg.train.models.len(), 1);
    assert_eq!(cfg.train.models[0].kind, ModelKind::Sae);
    cfg.validate().unwrap();
    let e = cfg.experiment();
    assert_eq!((e.seed, e.p_threshold, e.assoc_test), (9, Some(0.01), AssocTest::Allelic));
    assert_eq!(cfg.sim_spec().seed, 9);
}

#[test]
fn config_errors_are_usage_errors() {
    let unknown = PipelineConfig::from_toml("sede = 1\n", Path::new("u.toml")).unwrap_err();
    assert_eq!(unknown.exit_code(), EXIT_USAGE);
    assert!(unknown.to_string().contains("sede"), "{unknown}");
    let mut cfg = PipelineConfig::default();
    cfg.assoc.p_threshold = 0.0;
    assert_eq!(cfg.validate().unwrap_err().exit_code(), EXIT_USAGE);
    let mut dup = PipelineConfig::default();
    dup.train.models[1].name = "Logistic".into();
    assert!(dup.validate().unwrap_err().to_string().contains("twice"));
    let mut sparse_relu = PipelineConfig::default();
    sparse_relu.train.models[2].pretrain.sparsity_beta = 3.0;
    sparse_relu.train.models[2].hidden_activation = episae_core::nn::Activation::Relu;
    assert_eq!(sparse_relu.validate().unwrap_err().exit_code(), EXIT_USAGE);
}

#[test]
fn flags_override_config() {
    let mut cfg = PipelineConfig::default();
    cfg.apply(&Overrides {
        seed: Some(5),
        p_threshold: Some(0.2),
        threshold_mode: Some(ThresholdMode::Paper),
        arch: Some(vec![40, 20]),
        ..Overrides::default()
    });
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.assoc.p_threshold, 0.2);
    assert_eq!(cfg.train.threshold_mode, ThresholdMode::Paper);
    let names: Vec<&str> = cfg.train.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["Logistic", "DL", "SAE"]);
    let sae = &cfg.train.models[2];
    assert_eq!(sae.hidden, [40, 20]);
    assert_eq!(sae.head, [10, 10]);
    cfg.validate().unwrap();
}

#[test]
fn arch_parsing() {
    assert_eq!(parse_arch("2500,1500,700").unwrap(), [2500, 1500, 700]);
    assert_eq!(parse_arch(" 5 , 3").unwrap(), [5, 3]);
    assert!(parse_arch("5,,3").is_err());
    assert!(parse_arch("5,0").is_err());
}

#[test]
fn exit_codes_by_failure_kind() {
    let numeric = Error::Pipeline(PipelineError::Nn(NnError::NonFinite));
    assert_eq!(numeric.exit_code(), EXIT_NUMERIC);
    assert_eq!(Error::Qc(QcError::ConvergenceFailure { component: 2, iterations: 9 }).exit_code(), EXIT_NUMERIC);
    assert_eq!(Error::Qc(QcError::AllMissing).exit_code(), EXIT_DATA);
    assert_eq!(Error::Qc(QcError::InvalidThreshold("x".into())).exit_code(), EXIT_USAGE);
    assert_eq!(Error::Pipeline(PipelineError::MissingLabels(3)).exit_code(), EXIT_DATA);
    assert_eq!(
        Error::Pipeline(PipelineError::Nn(NnError::ShapeMismatch { expected: 3, found: 2 })).exit_code(),
        EXIT_DATA
    );
    assert_eq!(Error::Pipeline(PipelineError::Nn(NnError::InvalidConfig("lr".into()))).exit_code(), EXIT_USAGE);
}

#[test]
fn model_table_schema() {
    let r = evaluate(&[0.1, 0.9, 0.4, 0.6], &[0, 1, 0, 1], 0.5).unwrap();
    let bytes = report::model_table([("A", &r), ("B,x", &r)]).unwrap();
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, TABLE_HEADER);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][0], "B,x");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[0][7].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn assoc_report_has_lambda_header_and_one_row_per_variant() {
    let ds = small_cohort(3);
    let y: Vec<u8> = ds.samples.iter().map(|s| s.phenotype.label().unwrap()).collect();
    let scan: Scan = episae::par::scan(&ds.genotypes, &ds.variants, &y, AssocTest::Logistic).unwrap();
    assert_eq!(scan, episae_core::assoc::scan(&ds.genotypes, &ds.variants, &y).unwrap());
    let text = String::from_utf8(report::assoc_csv(&scan, &ds.variants, AssocTest::Logistic).unwrap()).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# test=logistic genomic_control_lambda="), "{first}");
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rd.headers().unwrap().len(), report::ASSOC_HEADER.len());
    assert_eq!(rd.records().count(), ds.n_variants());

    let qq = report::qq_csv(&scan).unwrap();
    let mut rd = csv::Reader::from_reader(qq.as_slice());
    let obs: Vec<f64> = rd.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(obs.len(), ds.n_variants());
    assert!(obs.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn allelic_test_drives_gc_when_selected() {
    let ds = small_cohort(4);
    let y: Vec<u8> = ds.samples.iter().map(|s| s.phenotype.label().unwrap()).collect();
    let a = episae::par::scan(&ds.genotypes, &ds.variants, &y, AssocTest::Allelic).unwrap();
    let l = episae::par::scan(&ds.genotypes, &ds.variants, &y, AssocTest::Logistic).unwrap();
    let mut chi: Vec<f64> = a.results.iter().map(|r| r.allelic_chi2).collect();
    chi.sort_by(f64::total_cmp);
    let lambda = episae_core::assoc::genomic_control_lambda(&chi).unwrap();
    assert_eq!(a.gc, lambda);
    assert_eq!(a.results[0].beta1, l.results[0].beta1);
}

#[test]
fn roc_svg_is_standalone() {
    let s = svg::roc_svg("M <1>", 0.75, &[(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]);
    assert!(s.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(s.trim_end().ends_with("</svg>"));
    assert!(s.contains("M &lt;1&gt; test") || s.contains("M &lt;1&gt;"));
    assert!(s.contains("AUC = 0.7500"));
    assert!(s.contains("50.00,450.00 250.00,50.00 450.00,50.00"));
}

#[test]
fn truth_and_history_csv() {
    let truth = vec![episae_core::simulate::TruthRow {
        kind: "xor".into(),
        first: "snp1".into(),
        second: Some("snp2".into()),
        effect: 1.2,
    }];
    assert_eq!(
        String::from_utf8(report::truth_csv(&truth).unwrap()).unwrap(),
        "kind,first,second,effect\nxor,snp1,snp2,1.2\n"
    );
    let h = [episae_core::pipeline::EpochRecord {
        epoch: 1,
        train_logloss: 0.5,
        validation_logloss: 0.25,
        validation_auc: 0.75,
    }];
    assert_eq!(
        String::from_utf8(report::history_csv(&h).unwrap()).unwrap(),
        "epoch,train_logloss,validation_logloss,validation_auc\n1,0.5,0.25,0.75\n"
    );
}
