use super::*;

fn toy(losses: &[&str]) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("sp3x3", losses, &[1]);
    c.gen = GenSpec {
        n_train: 30,
        n_val: 10,
        n_test: 10,
        ..GenSpec::default()
    };
    c.train.epochs = 3;
    c.train.batch_size = 8;
    c
}

#[test]
fn self_normalization_is_exactly_one() {
    let out = run_experiment(&toy(&["mse"])).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert_eq!(out.reports[0].regret_norm, 1.0);
    assert!(out.succeeded());
}

#[test]
fn solve_accounting_per_loss() {
    let out = run_experiment(&toy(&["mse", "mae", "mse+c", "mse+o", "mse+o_s", "spo+"])).unwrap();
    assert!(out.succeeded(), "{:?}", out.failures);
    let (n, n_star, epochs) = (30, 40, 3);
    let s = |loss: &str| out.report(loss, 1).unwrap().solves;
    let zero = SolveBreakdown::default();
    assert_eq!(s("mse"), zero);
    assert_eq!(s("mae"), zero);
    assert_eq!(
        s("mse+c"),
        SolveBreakdown {
            precompute_n_star: n_star,
            instance_cost_solves: n,
            ..zero
        }
    );
    assert_eq!(
        s("mse+o"),
        SolveBreakdown {
            precompute_n_star: n_star,
            ..zero
        }
    );
    assert_eq!(
        s("mse+o_s"),
        SolveBreakdown {
            precompute_n_star: n_star,
            precompute_ranges: n_star,
            ..zero
        }
    );
    // SPO+ trains on training and validation data together.
    assert_eq!(
        s("spo+"),
        SolveBreakdown {
            precompute_n_star: n_star,
            training_solves: epochs * n_star,
            ..zero
        }
    );
}

#[test]
fn iterative_and_lawless_accounting() {
    let out = run_experiment(&toy(&["mse", "mse+ic:3", "mse+eic:3", "lawless:0.5"])).unwrap();
    assert!(out.succeeded(), "{:?}", out.failures);
    let s = |loss: &str| out.report(loss, 1).unwrap().solves;
    assert_eq!(s("mse+ic:3").instance_cost_solves, 90);
    assert_eq!(s("mse+eic:3").instance_cost_solves, 60);
    assert_eq!(s("lawless:0.5").instance_cost_solves, 30);
    assert_eq!(s("lawless:0.5").precompute_n_star, 40);
}

#[test]
fn results_are_deterministic_across_pool_sizes() {
    let mut cfg = toy(&["mse", "mse+cos", "spo+"]);
    cfg.seeds = vec![1, 2];
    cfg.threads = Some(1);
    let a = results_csv(&run_experiment(&cfg).unwrap().reports, false).unwrap();
    cfg.threads = Some(4);
    let b = results_csv(&run_experiment(&cfg).unwrap().reports, false).unwrap();
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[0],
        "problem,loss,seed,regret_abs,regret_norm,time_s,solves_pre,solves_train,exact"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("sp3x3,mse,1,"));
    assert!(lines[3].starts_with("sp3x3,mse+c+o+s,1,"));
}

#[test]
fn failed_cells_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.json");
    // A knapsack dataset cannot feed a 3x3 grid.
    let ks = ProblemOracle::new(ProblemSpec::from_name("ks5", 0).unwrap());
    let gen = GenSpec {
        n_train: 5,
        n_val: 2,
        n_test: 2,
        ..GenSpec::default()
    };
    generate(&gen, &ks).unwrap().save_json(&path).unwrap();
    let mut cfg = toy(&["mse", "mse+o"]);
    cfg.dataset = Some(path);
    let out = run_experiment(&cfg).unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(out.failures.len(), 2);
    assert!(!out.succeeded());
}

#[test]
fn config_validation() {
    let mut cfg = toy(&["mse+c"]);
    assert!(cfg.validate().is_err(), "normalization loss missing");
    cfg.normalize_against = "mse+c".into();
    cfg.validate().unwrap();
    assert!(toy(&[]).validate().is_err());
    assert!(toy(&["mse", "mse", "mae"]).validate().is_err());
    assert!(toy(&["mse", "nope"]).validate().is_err());
    let mut cfg = toy(&["mse"]);
    cfg.seeds = vec![];
    assert!(cfg.validate().is_err());
}

#[test]
fn config_json_uses_defaults() {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{"problem": "ks16", "losses": ["mse", "mse+cos"], "seeds": [0, 1],
            "gen": {"n_train": 200}, "train": {"epochs": 20}}"#,
    )
    .unwrap();
    assert_eq!(cfg.gen.n_train, 200);
    assert_eq!(cfg.gen.deg, 6);
    assert_eq!(cfg.train.epochs, 20);
    assert_eq!(cfg.train.batch_size, 32);
    assert_eq!(cfg.normalize_against, "mse");
    assert_eq!(cfg.timeout_seconds, Some(600.0));
    assert!(!cfg.timing);
    cfg.validate().unwrap();
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(&["mse", "mse+o+s"]);
    cfg.output_dir = Some(dir.path().to_path_buf());
    let out = run_experiment(&cfg).unwrap();
    for f in ["results.csv", "aggregate.csv", "pareto.csv", "reports.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv, results_csv(&out.reports, false).unwrap());
    let back: ExperimentOutput =
        serde_json::from_reader(std::fs::File::open(dir.path().join("reports.json")).unwrap())
            .unwrap();
    assert_eq!(back.reports.len(), 2);
}
