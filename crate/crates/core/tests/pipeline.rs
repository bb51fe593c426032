use geoinr::config::KvDocument;
use geoinr::encodings::{Encoder, EncodingSpec};
use geoinr::fairness::{binned_error_grid, stratify};
use geoinr::geodata::{
    generate_archipelago, generate_checkerboard, read_grid, sample_points, write_grid, ArchipelagoParams, GridFormat, SampleSet,
    SamplingMode, Subgroup,
};
use geoinr::inr::{evaluate, load_checkpoint, save_checkpoint, train, ModelConfig, TrainConfig};

fn small_archipelago() -> geoinr::geodata::GridDataset {
    generate_archipelago(&ArchipelagoParams { n_islands: 8, resolution_deg: 3.0, seed: 5, ..Default::default() }).unwrap()
}

#[test]
fn train_evaluate_and_stratify_end_to_end() {
    let grid = small_archipelago();
    let train_set = sample_points(&grid, 1200, SamplingMode::AreaWeighted, 3).unwrap();
    let validation = sample_points(&grid, 240, SamplingMode::AreaWeighted, 4).unwrap();
    let encoder = Encoder::new(&"sw:N=30,M=2,Q=4,k=6".parse().unwrap()).unwrap();
    let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 128, max_epochs: 15, weight_decay: 1e-4, ..Default::default() };
    let (model, history) = train(&train_set, &validation, &encoder, &ModelConfig { hidden_dim: 24, ..Default::default() }, &cfg).unwrap();
    assert!(model.all_finite());
    assert_eq!(history.train_loss.len(), 15);

    let full = SampleSet::full_grid(&grid);
    let eval = evaluate(&model, &encoder, &full).unwrap();
    let report = stratify(&eval.losses, full.subgroups.as_ref().unwrap()).unwrap();
    let counted: usize = report.groups.iter().map(|(_, s)| s.count).sum();
    assert_eq!(counted, grid.n_cells());
    assert!(report.get(Subgroup::Sea).unwrap().mean.is_finite());
    assert!((report.total.mean - eval.mean_loss()).abs() < 1e-12);

    let bins = binned_error_grid(&eval.losses, &full.points, 30.0).unwrap();
    assert_eq!(bins.total_count(), grid.n_cells());
}

#[test]
fn training_is_reproducible_and_checkpoints_round_trip() {
    let grid = generate_checkerboard(45.0, 5.0, 1).unwrap();
    let train_set = sample_points(&grid, 600, SamplingMode::GridUniform, 0).unwrap();
    let validation = sample_points(&grid, 120, SamplingMode::GridUniform, 9).unwrap();
    let encoder = Encoder::new(&"sh:L=6".parse().unwrap()).unwrap();
    let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 64, max_epochs: 6, seed: 2, ..Default::default() };
    let mc = ModelConfig { hidden_dim: 16, ..Default::default() };
    let (a, ha) = train(&train_set, &validation, &encoder, &mc, &cfg).unwrap();
    let (b, hb) = train(&train_set, &validation, &encoder, &mc, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha.train_loss, hb.train_loss);
    assert_eq!(ha.params_fingerprint, hb.params_fingerprint);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_checkpoint(&a, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, a);
    let full = SampleSet::full_grid(&grid);
    assert_eq!(evaluate(&back, &encoder, &full).unwrap(), evaluate(&a, &encoder, &full).unwrap());
}

#[test]
fn grids_round_trip_through_both_formats() {
    let grid = small_archipelago();
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("g.fgrid", GridFormat::Fairgrid), ("g.csv", GridFormat::Csv)] {
        let path = dir.path().join(name);
        write_grid(&grid, &path, format).unwrap();
        let back = read_grid(&path, GridFormat::from_path(&path)).unwrap();
        assert_eq!(back.values, grid.values);
        assert_eq!(back.subgroup, grid.subgroup);
        assert_eq!(back.fingerprint(), grid.fingerprint());
    }
}

#[test]
fn spec_strings_and_config_documents_round_trip() {
    for s in ["sh:L=20", "sw:N=130,M=4,Q=6,k=6", "sw:N=8,M=3,Q=2,k=5,w=0.5,filter=mexican_hat,mode=real_imag,norm=true"] {
        let spec: EncodingSpec = s.parse().unwrap();
        let again: EncodingSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, again);
        assert_eq!(Encoder::new(&spec).unwrap().len(), spec.output_len());
    }
    let mut doc = KvDocument::new();
    doc.set("", "tool_version", "0.1.0");
    doc.set("train", "learning_rate", 1e-4);
    doc.set("encoding", "spec", "sw:N=130,M=4,Q=6,k=6");
    let back: KvDocument = doc.to_string().parse().unwrap();
    assert_eq!(back, doc);
    let cfg = TrainConfig::from_kv(&back, "train").unwrap();
    assert_eq!(cfg.learning_rate, 1e-4);
}
