use ptso::harness::config::{ExperimentConfig, SyntheticSource};
use ptso::harness::{self, ProtocolPoint, RunReport};
use ptso::model::{self, TransferProfile, WeightVector};

fn quick(seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        seeds,
        synthetic: Some(SyntheticSource {
            rows: 120,
            ..SyntheticSource::default()
        }),
        ..ExperimentConfig::default()
    };
    c.fusion.epochs = 30;
    c.ptso.max_evaluations = 600;
    c.classifier.profile = "linear".into();
    c
}

#[test]
fn same_config_same_report() {
    let c = quick(vec![4]);
    let a = harness::run_pipeline(&c).unwrap();
    let b = harness::run_pipeline(&c).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn k_values_give_one_point_each() {
    let mut c = quick(vec![1, 2]);
    c.protocol.learning_sets = vec![];
    c.protocol.k_values = vec![3, 9];
    let r = harness::run_pipeline(&c).unwrap();
    let protocols: Vec<ProtocolPoint> = r.points.iter().map(|p| p.protocol).collect();
    assert_eq!(protocols, vec![ProtocolPoint::KFold { k: 3 }, ProtocolPoint::KFold { k: 9 }]);
    for p in &r.points {
        assert_eq!(p.seeds.len(), 2);
        // pooled k-fold predictions cover every record once
        for s in &p.seeds {
            assert_eq!(s.counts.total(), 120);
        }
    }
}

#[test]
fn report_files_round_trip() {
    let mut c = quick(vec![1, 2, 3]);
    c.protocol.k_values = vec![3];
    let r = harness::run_pipeline(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    harness::emit_report(&r, &json, Some(&csv)).unwrap();

    let back = RunReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(back.to_json(), r.to_json());
    let lines = std::fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(lines, 1 + 3 * 2);
}

#[test]
fn report_rejects_other_schema_versions() {
    let r = harness::run_pipeline(&quick(vec![1])).unwrap();
    let text = r.to_json().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(RunReport::from_json(&text).is_err());
}

#[test]
fn weight_file_round_trip() {
    let net = model::build_classifier(&TransferProfile::desk(), 5, 2).unwrap();
    let w = WeightVector {
        values: (0..net.trainable_count()).map(|i| i as f64 * 0.125 - 1.0).collect(),
        profile_hash: net.profile_hash().to_owned(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.txt");
    w.save(&path).unwrap();
    assert_eq!(WeightVector::load(&path).unwrap(), w);
}

#[test]
fn bundled_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let c = ExperimentConfig::load(dir.join("quick.toml")).unwrap();
    assert_eq!(c.protocol.points().len(), 2);
    let p = TransferProfile::load(dir.join("wide.profile.toml")).unwrap();
    let net = model::build_classifier(&p, 8, 2).unwrap();
    assert!(net.frozen_count() > 0 && net.trainable_count() > 0);
}
