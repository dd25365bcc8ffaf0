use std::path::Path;

use guided_es::experiment::{ExperimentConfig, ExperimentKind};

fn kind_of(file: &str) -> ExperimentKind {
    match file {
        f if f.starts_with("train_") => ExperimentKind::Train,
        "gradient_alignment.toml" => ExperimentKind::GradientAlignment,
        "noise.toml" => ExperimentKind::Noise,
        "theory_drift.toml" => ExperimentKind::TheoryDrift,
        f if f.starts_with("theory_hitting") => ExperimentKind::TheoryHitting,
        "theory_theorem2.toml" => ExperimentKind::TheoryTheorem2,
        "theory_prop1.toml" => ExperimentKind::TheoryProp1,
        "theory_prop2.toml" => ExperimentKind::TheoryProp2,
        "full_scale.toml" => ExperimentKind::Train,
        other => panic!("no experiment known for {other}"),
    }
}

#[test]
fn shipped_configs_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let cfg = ExperimentConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.validate(kind_of(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn comparative_configs_share_budget() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["train_adam.toml", "train_sgd.toml", "noise.toml"] {
        let cfg = ExperimentConfig::load(&dir.join(name), &[]).unwrap();
        assert_eq!(cfg.budget_directions(), 10, "{name}");
    }
    let align = ExperimentConfig::load(&dir.join("gradient_alignment.toml"), &[]).unwrap();
    assert_eq!(align.budget_directions(), 127);
}

#[test]
fn overrides_win_over_file_values() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let cfg = ExperimentConfig::load(
        &dir.join("train_sgd.toml"),
        &["run.steps=7".into(), "optimizer.lr_grid=[0.5]".into(), "data.source=\"blobs\"".into()],
    )
    .unwrap();
    assert_eq!(cfg.run.steps, 7);
    assert_eq!(cfg.optimizer.lr_grid, vec![0.5]);
}
