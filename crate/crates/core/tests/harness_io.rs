use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqrtnuc::completion::{sample_design, synthesize};
use sqrtnuc::harness::{run_experiment, ExperimentConfig, LambdaMode, Mode, Summary, SCHEMA_LINE};
use sqrtnuc::io::{read_matrix, read_observations, write_matrix, write_observations};
use sqrtnuc::{Error, GroundTruth, Matrix, NoiseLaw, NoiseSpec};

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = GroundTruth::generate(6, 9, 2, 1.0, &mut rng).unwrap();
    let path = dir.path().join("a0.csv");
    write_matrix(&path, &truth.a0).unwrap();
    let back = read_matrix(&path).unwrap();
    for (a, b) in back.as_slice().iter().zip(truth.a0.as_slice()) {
        assert!((a - b).abs() <= 1e-15 * b.abs());
    }

    let design = sample_design(6, 9, 40, &mut rng);
    let noise = NoiseSpec::new(0.5, NoiseLaw::Uniform).unwrap();
    let data = synthesize(&truth, &noise, &design, &mut rng).unwrap();
    let obs = dir.path().join("obs.csv");
    write_observations(&obs, &data).unwrap();
    let again = read_observations(&obs, 6, 9).unwrap();
    assert_eq!(again.design.cells(), data.design.cells());
    assert_eq!(again.y, data.y);
}

#[test]
fn missing_file_reports_path() {
    let err = read_matrix(std::path::Path::new("/nonexistent/v.csv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/v.csv"));
}

#[test]
fn emitted_csv_summary_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let mut cfg = ExperimentConfig::new(Mode::SimulateCompletion);
    cfg.m1 = 30;
    cfg.m2 = 25;
    cfg.n = 300;
    cfg.trials = 9;
    cfg.seed = 4;
    cfg.lambda = LambdaMode::Oracle;
    cfg.out = Some(out.clone());
    let output = run_experiment(&cfg).unwrap();
    output.write(&cfg).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(SCHEMA_LINE));
    assert_eq!(text.lines().count(), 1 + 1 + 9 + 1);
    assert_eq!(Summary::from_csv(&text).unwrap(), output.summary);
    assert_eq!(Summary::parse_line(&text).unwrap(), output.summary);
}

#[test]
fn estimation_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = GroundTruth::generate(20, 15, 1, 1.0, &mut rng).unwrap();
    let design = sample_design(20, 15, 250, &mut rng);
    let noise = NoiseSpec::new(0.1, NoiseLaw::Gaussian).unwrap();
    let data = synthesize(&truth, &noise, &design, &mut rng).unwrap();
    let (obs, a0, est) = (dir.path().join("obs.csv"), dir.path().join("a0.csv"), dir.path().join("est.csv"));
    write_observations(&obs, &data).unwrap();
    write_matrix(&a0, &truth.a0).unwrap();

    let mut cfg = ExperimentConfig::new(Mode::EstimateCompletion);
    cfg.m1 = 20;
    cfg.m2 = 15;
    cfg.obs = Some(obs);
    cfg.truth = Some(a0);
    cfg.estimate = Some(est.clone());
    cfg.lambda = LambdaMode::Manual(0.4);
    let output = run_experiment(&cfg).unwrap();
    output.write(&cfg).unwrap();
    let record = &output.records[0];
    assert_eq!(record.lambda, 0.4);
    assert!(record.error.is_some());
    let a_hat: Matrix = read_matrix(&est).unwrap();
    assert_eq!(a_hat.shape(), (20, 15));
    assert!(record.rank_hat <= 6);

    cfg.lambda = LambdaMode::Oracle;
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}
