use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
seed = 7

[training]
samples = 60
test_samples = 200
epochs = 5
oracle_draws = 2000

[market]
buyers = [2, 5]
replicas = 20

[truthfulness]
instances = 6
buyers = 5
grid_points = 12

[verify]
spa_profiles = 100
transform_cases = 200
gradient_points = 5
market_instances = 50
truthfulness_instances = 4
"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("small.toml"), SMALL).unwrap();
        fs::write(
            dir.path().join("ref.txt"),
            "the cat sat on the mat\nthirdly it criticises the shortcomings of the proposal\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("cand.txt"),
            "the cat sat on the mat\nthirdly it have the shortcomings of the proposal\n",
        )
        .unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str], out: &str) -> Output {
        Command::new(env!("CARGO_BIN_EXE_semtrade"))
            .args(args)
            .arg("--out")
            .arg(self.path(out))
            .output()
            .unwrap()
    }

    fn run_small(&self, subcommand: &str, extra: &[&str], out: &str) -> Output {
        let cfg = self.path("small.toml");
        let mut args = vec![subcommand, "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        self.run(&args, out)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv_bodies(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn every_command_is_deterministic_and_schema_tagged() {
    let sb = Sandbox::new();
    let (r, c) = (sb.path("ref.txt"), sb.path("cand.txt"));
    let metrics = ["--reference", r.to_str().unwrap(), "--candidate", c.to_str().unwrap()];
    let commands: [(&str, &[&str]); 5] = [
        ("train-dla", &[]),
        ("market-sweep", &[]),
        ("truthfulness-sweep", &[]),
        ("eval-metrics", &metrics),
        ("verify", &[]),
    ];
    for (cmd, extra) in commands {
        let a = sb.run_small(cmd, extra, &format!("{cmd}-a"));
        let b = sb.run_small(cmd, extra, &format!("{cmd}-b"));
        assert_eq!(code(&a), 0, "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(code(&b), 0);
        let (da, db) = (csv_bodies(&sb.path(&format!("{cmd}-a"))), csv_bodies(&sb.path(&format!("{cmd}-b"))));
        assert!(!da.is_empty(), "{cmd} wrote no CSV");
        assert_eq!(da, db, "{cmd} output differs between runs");
        for (name, body) in &da {
            assert!(body.starts_with("# schema: "), "{cmd}/{name} lacks a schema line");
        }
        let manifest = fs::read_to_string(sb.path(&format!("{cmd}-a")).join("manifest.txt")).unwrap();
        assert!(manifest.contains(&format!("command = {cmd}")));
        assert!(manifest.contains("config_sha256 = "));
        assert!(manifest.contains("master_seed = 7"));
        assert!(manifest.contains("timestamp_unix = "));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let sb = Sandbox::new();
    assert_eq!(code(&sb.run_small("market-sweep", &[], "s7")), 0);
    assert_eq!(code(&sb.run_small("market-sweep", &["--seed", "8"], "s8")), 0);
    let m = fs::read_to_string(sb.path("s8").join("manifest.txt")).unwrap();
    assert!(m.contains("master_seed = 8"));
    assert_ne!(csv_bodies(&sb.path("s7")), csv_bodies(&sb.path("s8")));
}

#[test]
fn trained_params_feed_the_market_and_verify() {
    let sb = Sandbox::new();
    assert_eq!(code(&sb.run_small("train-dla", &[], "train")), 0);
    let params = sb.path("train").join("dla_params.txt");
    let p = params.to_str().unwrap();
    let o = sb.run_small("market-sweep", &["--params", p], "sweep");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = sb.run_small("verify", &["--params", p], "verify");
    assert_eq!(code(&o), 0);
    let report = fs::read_to_string(sb.path("verify").join("verify_report.csv")).unwrap();
    assert!(report.contains("market-budget-balance/loaded-dla"));
    assert!(!report.contains("FAIL"));
}

#[test]
fn tampered_params_are_rejected_at_load() {
    let sb = Sandbox::new();
    assert_eq!(code(&sb.run_small("train-dla", &[], "train")), 0);
    let text = fs::read_to_string(sb.path("train").join("dla_params.txt")).unwrap();
    // swap the log-weight section for realized weights with one negated
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let at = lines.iter().position(|l| l == "log_weights").unwrap();
    lines[at] = "weights".into();
    for line in &mut lines[at + 1..] {
        if line == "biases" {
            break;
        }
        *line = line.split(' ').map(|_| "1").collect::<Vec<_>>().join(" ");
    }
    lines[at + 1] = lines[at + 1].replacen('1', "-1", 1);
    let bad = sb.write("tampered.txt", &(lines.join("\n") + "\n"));
    let o = sb.run_small("verify", &["--params", bad.to_str().unwrap()], "v");
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tampered.txt"));
}

#[test]
fn input_and_config_errors_exit_two() {
    let sb = Sandbox::new();
    let r = sb.path("ref.txt");
    let empty = sb.write("empty.txt", "the cat sat on the mat\n\n");
    let o = sb.run(
        &["eval-metrics", "--reference", r.to_str().unwrap(), "--candidate", empty.to_str().unwrap()],
        "m",
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));

    let unknown = sb.write("unknown.toml", "[market]\nsellerz = 3\n");
    assert_eq!(code(&sb.run(&["verify", "--config", unknown.to_str().unwrap()], "u")), 2);

    let out_of_range = sb.write("range.toml", "[truthfulness]\nseller = 20\n");
    let o = sb.run(&["truthfulness-sweep", "--config", out_of_range.to_str().unwrap()], "r");
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));

    assert_eq!(code(&sb.run(&["verify", "--config", "/nonexistent.toml"], "n")), 2);
}

#[test]
fn empty_check_fails_verify_with_exit_one() {
    let sb = Sandbox::new();
    let cfg = sb.write("nogradient.toml", &SMALL.replace("gradient_points = 5", "gradient_points = 0"));
    let o = sb.run(&["verify", "--config", cfg.to_str().unwrap()], "v");
    assert_eq!(code(&o), 1);
    let report = fs::read_to_string(sb.path("v").join("verify_report.csv")).unwrap();
    assert!(report.contains("gradient-central-difference,0,0,0"));
    assert!(report.contains("FAIL"));
    assert!(sb.path("v").join("manifest.txt").exists());
}

#[test]
fn eval_metrics_scores_the_sample_pair() {
    let sb = Sandbox::new();
    let (r, c) = (sb.path("ref.txt"), sb.path("cand.txt"));
    let o = sb.run(
        &["eval-metrics", "--reference", r.to_str().unwrap(), "--candidate", c.to_str().unwrap()],
        "m",
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(sb.path("m").join("metrics.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows[0][3..], ["1", "1", "1"]);
    let bleu: f64 = rows[1][3].parse().unwrap();
    assert!(bleu > 0.0 && bleu < 1.0);
}

#[test]
fn readme_config_block_is_the_default_config() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let start = readme.find("```toml\n").unwrap() + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    let parsed = semtrade_cli::config::Config::parse(block).unwrap();
    assert_eq!(parsed, semtrade_cli::config::Config::default());
}
