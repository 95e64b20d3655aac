use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use graphinv::data::{load_dataset, load_model, read_report_csv, ExperimentConfig, SweepConfig};
use graphinv_cli::{
    config_hash, grid, resolve_config, run, sweep, CliError, Command, GridPoint, Manifest,
    Overrides,
};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn into(dir: &Path) -> Overrides {
    Overrides {
        output: Some(dir.to_path_buf()),
        ..Overrides::default()
    }
}

fn pipeline(cfg: &Path, dir: &Path, commands: &[Command]) {
    for c in commands {
        run(*c, cfg, &into(dir)).unwrap_or_else(|e| panic!("{}: {e}", c.as_str()));
    }
}

fn with_sweep(dir: &Path, base: &str, sweep: &str) -> PathBuf {
    let text = fs::read_to_string(config(base)).unwrap();
    let head = text.split("[sweep]").next().unwrap();
    let path = dir.join("sweep.toml");
    fs::write(&path, format!("{head}\n[sweep]\n{sweep}\n")).unwrap();
    path
}

#[test]
fn train_attack_eval_on_sbm() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(
        &config("sbm.toml"),
        tmp.path(),
        &[Command::Train, Command::AttackHomo, Command::Eval],
    );
    let rows = read_report_csv(&tmp.path().join("report.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].auc > 0.75, "auc {}", rows[0].auc);
}

#[test]
fn ablate_emits_full_and_four_variants() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(
        &config("sbm.toml"),
        tmp.path(),
        &[Command::Train, Command::Ablate],
    );
    let rows = read_report_csv(&tmp.path().join("ablation.csv")).unwrap();
    let variants: Vec<_> = rows.iter().map(|r| r.variant.as_str()).collect();
    assert_eq!(variants, ["full", "-tar", "-1st", "-2nd", "-norm"]);
}

#[test]
fn hetero_ablate_emits_every_mode_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(
        &config("acm.toml"),
        tmp.path(),
        &[Command::Train, Command::Ablate],
    );
    let rows = read_report_csv(&tmp.path().join("ablation.csv")).unwrap();
    assert_eq!(rows.len(), 5 * 4);
}

#[test]
fn noise_sweep_emits_one_row_per_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("noise.toml");
    run(Command::Train, &cfg, &into(tmp.path())).unwrap();
    let sigmas: Vec<f64> = (1..=7).map(|i| i as f64 * 0.5).collect();
    let o = Overrides {
        sigmas: Some(sigmas.clone()),
        ..into(tmp.path())
    };
    run(Command::NoiseSweep, &cfg, &o).unwrap();
    let rows = read_report_csv(&tmp.path().join("noise_sweep.csv")).unwrap();
    assert_eq!(rows.len(), 7);
    let got: Vec<f64> = rows.iter().map(|r| r.sigma.unwrap()).collect();
    assert_eq!(got, sigmas);
    let acc = fs::read_to_string(tmp.path().join("noise_accuracy.csv")).unwrap();
    assert_eq!(acc.lines().count(), 8);
}

#[test]
fn two_by_two_grid_emits_four_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_sweep(
        tmp.path(),
        "sbm.toml",
        "alpha = [0.005, 0.01]\ngamma = [0.01, 0.02]\nworkers = 2",
    );
    pipeline(&cfg, tmp.path(), &[Command::Train, Command::Sweep]);
    let rows = read_report_csv(&tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1].variant, "alpha=0.005;beta=1;gamma=0.02;epsilon=0.1");
}

#[test]
fn one_point_grid_equals_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_sweep(tmp.path(), "sbm.toml", "alpha = [0.01]");
    pipeline(
        &cfg,
        tmp.path(),
        &[
            Command::Train,
            Command::Sweep,
            Command::AttackHomo,
            Command::Eval,
        ],
    );
    let swept = read_report_csv(&tmp.path().join("sweep.csv")).unwrap();
    let single = read_report_csv(&tmp.path().join("report.csv")).unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0].auc, single[0].auc);
    assert_eq!(swept[0].ap, single[0].ap);
}

#[test]
fn failed_grid_point_is_marked_and_others_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = config("sbm.toml");
    run(Command::Train, &cfg_path, &into(tmp.path())).unwrap();
    let cfg = resolve_config(&cfg_path, &Overrides::default()).unwrap();
    let ds = load_dataset(&cfg.dataset, cfg.seed).unwrap();
    let victim = load_model(&tmp.path().join("model.gmic")).unwrap();
    let good = GridPoint {
        alpha: 0.01,
        beta: 1.0,
        gamma: 0.01,
        epsilon: 0.1,
    };
    let bad = GridPoint {
        alpha: f64::NAN,
        ..good
    };
    let rows = sweep(&cfg, &ds, &victim, &[bad, good]);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].variant.ends_with(";failed"));
    assert!(rows[0].auc.is_nan() && rows[0].edges == 0);
    assert!(rows[1].auc > 0.75);
}

#[test]
fn default_grid_scales_three_weights() {
    let base = graphinv::attack::AttackConfig::default();
    let g = grid(&base, &SweepConfig::default());
    assert_eq!(g.len(), 27);
    assert!(g.iter().all(|p| p.epsilon == base.epsilon));
    assert_eq!(g[0].alpha, 0.005);
    assert_eq!(g[26].gamma, 0.02);
}

#[test]
fn default_grid_spread_on_sbm() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(
        &config("sbm.toml"),
        tmp.path(),
        &[Command::Train, Command::Sweep],
    );
    let rows = read_report_csv(&tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 27);
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.auc), hi.max(r.auc))
        });
    assert!(hi - lo <= 0.10, "spread {:.4} ({lo:.4}..{hi:.4})", hi - lo);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cmds = [
        Command::GenData,
        Command::Train,
        Command::AttackHomo,
        Command::Eval,
        Command::Baseline,
        Command::Ablate,
    ];
    pipeline(&config("sbm.toml"), a.path(), &cmds);
    pipeline(&config("sbm.toml"), b.path(), &cmds);
    for name in [
        "report.csv",
        "baseline.csv",
        "ablation.csv",
        "trajectory.csv",
        "model.gmic",
        "reconstruction.gmir",
        "eval.manifest.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn manifest_lists_exactly_the_files_written() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("acm.toml");
    let mut seen = Vec::new();
    for c in [
        Command::GenData,
        Command::Train,
        Command::AttackHete,
        Command::Eval,
        Command::Baseline,
    ] {
        let out = run(c, &cfg, &into(tmp.path())).unwrap();
        let text =
            fs::read_to_string(tmp.path().join(format!("{}.manifest.json", c.as_str()))).unwrap();
        let m: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m, out.manifest);
        assert_eq!(m.command, c.as_str());
        for f in &m.files {
            assert!(tmp.path().join(f).is_file(), "{f}");
        }
        seen.extend(m.files);
    }
    let mut on_disk = Vec::new();
    let mut stack = vec![tmp.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with(".manifest.json") {
                on_disk.push(
                    p.strip_prefix(tmp.path())
                        .unwrap()
                        .to_string_lossy()
                        .into_owned(),
                );
            }
        }
    }
    seen.sort();
    on_disk.sort();
    assert_eq!(seen, on_disk);
}

#[test]
fn manifest_hash_tracks_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sbm.toml");
    let a = resolve_config(&cfg, &into(tmp.path())).unwrap();
    let b = resolve_config(
        &cfg,
        &Overrides {
            alpha: Some(0.02),
            ..into(tmp.path())
        },
    )
    .unwrap();
    assert_ne!(config_hash(&a), config_hash(&b));
    assert_eq!(b.attack.alpha, 0.02);
}

#[test]
fn flags_override_file_values() {
    let cfg = config("acm.toml");
    let o = Overrides {
        seed: Some(9),
        metapaths: Some(vec!["PAP".into()]),
        epochs: Some(5),
        eval_seeds: Some(vec![1, 2]),
        ..Overrides::default()
    };
    let c: ExperimentConfig = resolve_config(&cfg, &o).unwrap();
    assert_eq!((c.seed, c.attack.seed), (9, 9));
    assert_eq!(c.attack.metapaths, ["PAP"]);
    assert_eq!(c.victim.epochs, 5);
    assert_eq!(c.eval_seeds, [1, 2]);
    let file = resolve_config(&cfg, &Overrides::default()).unwrap();
    assert_eq!(file.attack.metapaths, ["PAP", "PSP"]);
}

#[test]
fn invalid_config_is_rejected_before_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let o = Overrides {
        alpha: Some(-1.0),
        output: Some(out.clone()),
        ..Overrides::default()
    };
    let err = run(Command::Train, &config("sbm.toml"), &o).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn wrong_dataset_kind_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run(Command::NoiseSweep, &config("acm.toml"), &into(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = run(Command::AttackHete, &config("sbm.toml"), &into(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run(Command::AttackHomo, &config("sbm.toml"), &into(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().starts_with("gnn: "), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_graphinv");
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "name = 3\n").unwrap();
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(
        status(&["train", "--config", bad.to_str().unwrap()]),
        Some(2)
    );
    assert_eq!(status(&["nonsense"]), Some(2));
    let sbm = config("sbm.toml");
    let sbm = sbm.to_str().unwrap();
    assert_eq!(status(&["eval", "--config", sbm, "--output", dir]), Some(1));
    assert_eq!(
        status(&["train", "--config", sbm, "--output", dir]),
        Some(0)
    );
}

#[test]
fn output_root_from_environment() {
    let bin = env!("CARGO_BIN_EXE_graphinv");
    let tmp = tempfile::tempdir().unwrap();
    let flag = tmp.path().join("flag");
    let cfg = config("sbm.toml");
    let run = |extra: &[&str]| {
        let st = Process::new(bin)
            .args(["train", "--config", cfg.to_str().unwrap()])
            .args(extra)
            .env(graphinv_cli::OUTPUT_ROOT_ENV, tmp.path().join("env"))
            .status()
            .unwrap();
        assert!(st.success());
    };
    run(&[]);
    assert!(tmp.path().join("env/model.gmic").is_file());
    run(&["--output", flag.to_str().unwrap()]);
    assert!(flag.join("model.gmic").is_file());
}
