use std::path::Path;

use depth_stip::classify::read_model;
use depth_stip::pipeline::*;

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.set("scales", "3").unwrap();
    cfg.k1 = 16;
    cfg.k2 = 8;
    cfg
}

fn dataset(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    let spec = BenchmarkSpec {
        subjects: 4,
        repetitions: 2,
        ..BenchmarkSpec::default()
    };
    write_benchmark(&data, &spec, 3).unwrap();
    data
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn fitting_reads_only_training_descriptors_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let cfg = small_config();
    let split = SplitSpec::new([1, 2], [3, 4]).unwrap();
    let a = run_pipeline(&cfg, &data, &split, &dir.path().join("a")).unwrap();
    assert!(a.accuracy >= 0.9, "accuracy {}", a.accuracy);
    assert_eq!(a.representation_len, 16 + 8);

    let fit: Vec<&String> = a.cache_reads.iter().filter(|(s, _)| s == "fit").map(|(_, p)| p).collect();
    assert!(!fit.is_empty());
    for p in &fit {
        assert!(p.contains("_s01_") || p.contains("_s02_"), "fit stage read {p}");
    }
    assert!(a.cache_reads.iter().any(|(s, p)| s == "encode" && p.contains("_s03_")));

    let b = run_pipeline(&cfg, &data, &split, &dir.path().join("b")).unwrap();
    assert_eq!(a.evaluation, b.evaluation);
    for f in ["model.modl", "representations_train.csv", "representations_test.csv", "confusion.csv", "manifest.txt"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f} differs");
    }
    let model = read_model(&dir.path().join("a/model.modl")).unwrap();
    assert_eq!(model.z_bar0, a.z_bar0);
    assert_eq!(model.codebooks.len(), 2);
}

#[test]
fn every_encoding_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let split = SplitSpec::new([1, 2], [3, 4]).unwrap();
    for (enc, len) in [("motion", 16), ("shape", 8), ("stp", 16 * 23), ("stw", 16)] {
        let mut cfg = small_config();
        cfg.set("encoding", enc).unwrap();
        let r = run_pipeline(&cfg, &data, &split, &dir.path().join(enc)).unwrap();
        assert_eq!(r.representation_len, len, "{enc}");
    }
}

#[test]
fn single_class_training_fails_in_the_train_stage() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let only = dir.path().join("only");
    std::fs::create_dir_all(&only).unwrap();
    for e in list_dataset(&data).unwrap() {
        if e.name.action == 1 {
            std::fs::copy(&e.path, only.join(e.path.file_name().unwrap())).unwrap();
        }
    }
    let split = SplitSpec::new([1, 2], [3, 4]).unwrap();
    let err = run_pipeline(&small_config(), &only, &split, &dir.path().join("out")).unwrap_err();
    assert!(matches!(err, PipelineError::Stage { stage: Stage::Train, .. }), "{err}");
}

#[test]
fn missing_subject_is_a_dataset_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let split = SplitSpec::new([1], [9]).unwrap();
    assert!(matches!(
        run_pipeline(&small_config(), &data, &split, &dir.path().join("out")),
        Err(PipelineError::Dataset(_))
    ));
}

#[test]
fn zero_pepper_matches_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let mut cfg = small_config();
    cfg.pepper_levels = vec![0.0, 10.0];
    let split = SplitSpec::new([1, 2], [3, 4]).unwrap();
    let r = run_robustness(&cfg, &data, &split, &dir.path().join("out"), RobustnessMode::Pepper).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.rows[0].1, r.baseline);
    let csv = std::fs::read_to_string(dir.path().join("out/robustness_pepper.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn gridsearch_writes_every_point_and_a_loadable_best_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let mut cfg = small_config();
    cfg.folds = 2;
    cfg.grid_scales = vec![vec![2], vec![3]];
    cfg.grid_k1 = vec![8];
    cfg.grid_k2 = vec![4, 8];
    cfg.grid_c = vec![1.0];
    let out = dir.path().join("grid");
    let r = run_gridsearch(&cfg, &data, &[1, 2, 3].into(), &out).unwrap();
    assert_eq!(r.points.len(), 4);
    assert_eq!(r.mean_accuracy.len(), 4);
    let best = PipelineConfig::load(&out.join("best.conf")).unwrap();
    assert_eq!(best, r.best);
    let csv = std::fs::read_to_string(out.join("gridsearch.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn inspect_writes_each_stage() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let seq = data.join("a02_s01_e01.dseq");
    let cfg = small_config();
    let bg = inspect(&seq, InspectStage::Background, &cfg, &dir.path().join("bg"), None).unwrap();
    assert_eq!(bg.len(), 3);
    let st = inspect(&seq, InspectStage::Stips, &cfg, &dir.path().join("st"), None).unwrap();
    let text = std::fs::read_to_string(&st[0]).unwrap();
    assert!(text.lines().all(|l| l.split(' ').count() == 5));
    assert!(text.contains(" motion"));
    let de = inspect(&seq, InspectStage::Descriptors, &cfg, &dir.path().join("de"), Some(2500.0)).unwrap();
    assert_eq!(de.len(), 2);
    assert!("foo".parse::<InspectStage>().is_err());
}
