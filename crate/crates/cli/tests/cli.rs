use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8(o.stdout).unwrap(),
            stderr: String::from_utf8(o.stderr).unwrap(),
        }
    }
}

impl Run {
    fn json(&self) -> Value {
        assert_eq!(self.code, 0, "stderr: {}", self.stderr);
        serde_json::from_str(&self.stdout).unwrap()
    }
}

fn lpstake(args: &[&str]) -> Run {
    Command::new(env!("CARGO_BIN_EXE_lpstake"))
        .args(args)
        .output()
        .unwrap()
        .into()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: TempDir::new().unwrap(),
        }
    }

    fn params(&self, name: &str, v: Value) -> String {
        let path = self.dir.path().join(name);
        fs::write(&path, v.to_string()).unwrap();
        path.to_str().unwrap().to_string()
    }

    fn rebasing(&self, r: f64, sigma_sq: f64, m: f64, rho: f64, k: f64) -> String {
        self.params(
            &format!("rebasing-{r}-{sigma_sq}-{m}-{rho}-{k}.json"),
            json!({
                "g": 0.0, "sigma": f64::sqrt(sigma_sq), "r": r, "m": m, "rho": rho,
                "p0": 1.0, "fee_cap_k": k, "token_kind": "rebasing"
            }),
        )
    }

    fn table1(&self) -> String {
        self.rebasing(0.14, 0.8, 0.08, 0.03, 2.0)
    }

    fn table2(&self) -> String {
        self.params(
            "reward.json",
            json!({
                "g": 0.13, "sigma": f64::sqrt(0.8), "r": 0.0, "m": 0.08, "rho": 0.03,
                "p0": 1.0, "fee_cap_k": 2.0, "token_kind": "reward_bearing"
            }),
        )
    }
}

fn csv_rows(text: &str) -> (String, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_reports() {
    let fx = Fixture::new();
    let ok = lpstake(&["validate", "--params", &fx.table1()]).json();
    assert_eq!(ok["staking_incentive"], json!(true));
    assert_eq!(ok["exit_assumption_violations"], json!([]));
    assert!((ok["derived"]["d"].as_f64().unwrap() - 0.4472).abs() < 1e-4);

    let low_vol = lpstake(&[
        "validate",
        "--params",
        &fx.rebasing(0.14, 0.2, 0.08, 0.03, 2.0),
    ])
    .json();
    let ids = low_vol["exit_assumption_violations"].as_array().unwrap();
    assert!(ids.contains(&json!("sigma_sq_quarter_gt_m")), "{ids:?}");

    let idle = lpstake(&[
        "validate",
        "--params",
        &fx.rebasing(0.0, 0.8, 0.08, 0.03, 2.0),
    ])
    .json();
    assert_eq!(idle["staking_incentive"], json!(false));
}

#[test]
fn config_errors_exit_with_2() {
    let fx = Fixture::new();
    let unknown = fx.params(
        "extra.json",
        json!({
            "g": 0.0, "sigma": 0.9, "r": 0.14, "m": 0.08, "rho": 0.03,
            "p0": 1.0, "fee_cap_k": 2.0, "token_kind": "rebasing", "beta": 1
        }),
    );
    let broken = fx.params("broken.json", json!({"g": "high"}));
    let negative = fx.params(
        "negative.json",
        json!({
            "g": 0.0, "sigma": -0.9, "r": 0.14, "m": 0.08, "rho": 0.03,
            "p0": 1.0, "fee_cap_k": 2.0, "token_kind": "rebasing"
        }),
    );
    for path in [&unknown, &broken, &negative] {
        let run = lpstake(&["validate", "--params", path]);
        assert_eq!(run.code, 2, "{path}: {}", run.stderr);
        assert!(!run.stderr.is_empty());
    }
    assert_eq!(
        lpstake(&["validate", "--params", "/nonexistent/p.json"]).code,
        2
    );
    assert_eq!(lpstake(&["validate"]).code, 2);
    assert_eq!(
        lpstake(&["exit", "--params", &fx.table1(), "--bogus"]).code,
        2
    );
}

#[test]
fn exit_reproduces_table_rows() {
    let fx = Fixture::new();
    let t1 = lpstake(&["exit", "--params", &fx.table1(), "--no-fees"]).json();
    assert!((t1["c_star"].as_f64().unwrap() + 1.298).abs() < 0.005);
    assert!((t1["l_star"].as_f64().unwrap() - 0.313).abs() < 0.002);
    assert!((t1["v_star"].as_f64().unwrap() - 0.176).abs() < 0.002);
    assert_eq!(t1["regime"], json!("no_fees"));
    assert!(t1["foc_residual"].as_f64().unwrap().abs() < 1e-6);

    let t2 = lpstake(&["exit", "--params", &fx.table2()]).json();
    assert!((t2["c_star"].as_f64().unwrap() + 1.160).abs() < 0.005);
    assert!((t2["v_star"].as_f64().unwrap() - 0.220).abs() < 0.002);

    let k3 = lpstake(&[
        "exit",
        "--params",
        &fx.rebasing(0.14, 0.8, 0.08, 0.03, 3.0),
        "--fees",
    ])
    .json();
    assert!((k3["v_star"].as_f64().unwrap() - 3.0).abs() < 0.005);
    assert_eq!(k3["regime"], json!("with_fees"));
    assert_eq!(k3["foc_residual"], Value::Null);
}

#[test]
fn assumption_violation_exits_with_3() {
    let fx = Fixture::new();
    let run = lpstake(&["exit", "--params", &fx.rebasing(0.14, 0.2, 0.08, 0.03, 2.0)]);
    assert_eq!(run.code, 3);
    assert!(
        run.stderr.contains("sigma_sq_quarter_gt_m"),
        "{}",
        run.stderr
    );

    let idle = fx.rebasing(0.0, 0.8, 0.08, 0.03, 2.0);
    let run = lpstake(&["allocate", "--params", &idle, "--t", "1"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("staking incentive"), "{}", run.stderr);
}

#[test]
fn decompose_sweeps() {
    let fx = Fixture::new();
    let p = fx.table1();
    let down = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-3",
        "--c-to",
        "-0.05",
        "--steps",
        "60",
    ]);
    assert_eq!(down.code, 0, "{}", down.stderr);
    let (header, rows) = csv_rows(&down.stdout);
    assert_eq!(
        header,
        "c,l_over_p0,fee,impermanent_loss,opportunity,no_fee_total,with_fee_total"
    );
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r[4] > 0.0 && r[3] < 0.0));
    assert!(rows.iter().all(|r| r[2] == 0.0 && r[6] == r[5]));

    let up = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "0.05",
        "--c-to",
        "3",
        "--steps",
        "30",
    ]);
    let (_, rows) = csv_rows(&up.stdout);
    assert!(rows.iter().all(|r| r[5] < 0.0));

    let at = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-1.298",
        "--c-to",
        "-1.298",
        "--steps",
        "1",
    ]);
    let (_, rows) = csv_rows(&at.stdout);
    assert!((rows[0][5] - 0.176).abs() < 5e-4);

    let fees = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-3",
        "--c-to",
        "-1",
        "--steps",
        "3",
        "--fees",
    ]);
    let (_, rows) = csv_rows(&fees.stdout);
    assert!(rows
        .iter()
        .all(|r| r[2] > 0.0 && r[2] <= 2.0 && (r[6] - r[5] - r[2]).abs() < 1e-12));
}

#[test]
fn decompose_needs_split_across_zero() {
    let fx = Fixture::new();
    let p = fx.table1();
    let run = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-1",
        "--c-to",
        "1",
        "--steps",
        "5",
    ]);
    assert_eq!(run.code, 2);
    let run = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-1",
        "--c-to",
        "0",
        "--steps",
        "5",
    ]);
    assert_eq!(run.code, 2);
    let split = lpstake(&[
        "decompose",
        "--params",
        &p,
        "--c-from",
        "-1",
        "--c-to",
        "1",
        "--steps",
        "5",
        "--split",
    ]);
    assert_eq!(split.code, 0);
    let (_, rows) = csv_rows(&split.stdout);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[0] != 0.0));
}

fn golden_path(id: u8) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(format!("table{id}.csv"))
}

/// Set `LPSTAKE_UPDATE_GOLDEN=1` to rewrite the golden files.
#[test]
fn tables_match_golden_files() {
    let update = std::env::var("LPSTAKE_UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    for id in 1..=6u8 {
        let run = lpstake(&["table", "--table", &id.to_string()]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let path = golden_path(id);
        if update {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, &run.stdout).unwrap();
        }
        let golden =
            fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            run.stdout,
            golden,
            "table {id} drifted from {}",
            path.display()
        );
    }
}

#[test]
fn table_rows_and_errors() {
    let run = lpstake(&["table", "--table", "1"]);
    let no_fee_c: Vec<f64> = run
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for (got, want) in no_fee_c
        .iter()
        .zip([-1.291, -1.298, -1.301, -1.292, -1.236])
    {
        assert!((got - want).abs() < 0.005, "{got} vs {want}");
    }
    let t2 = lpstake(&["table", "--table", "2"]);
    for (line, want) in t2
        .stdout
        .lines()
        .skip(1)
        .zip([0.221, 0.221, 0.220, 0.220, 0.219])
    {
        let v: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!((v - want).abs() < 0.002);
    }
    let t3 = lpstake(&["table", "--table", "3"]);
    for line in t3.stdout.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let k: f64 = cells[2].parse().unwrap();
        let v: f64 = cells[8].parse().unwrap();
        assert!((v - k).abs() < 0.005, "{line}");
    }
    assert_eq!(lpstake(&["table", "--table", "7"]).code, 2);

    let json_rows: Value = lpstake(&["table", "--table", "4", "--format", "json"]).json();
    assert_eq!(json_rows.as_array().unwrap().len(), 5);
    assert_eq!(json_rows[0]["parameter"], json!("m"));
}

#[test]
fn allocate_decisions() {
    let fx = Fixture::new();
    let p = fx.table1();
    let above = lpstake(&[
        "allocate",
        "--params",
        &p,
        "--t",
        "1",
        "--fee-override",
        "0.3",
    ])
    .json();
    assert_eq!(above["decision"]["a_hold"], json!(0.5));
    assert_eq!(above["decision"]["x_lp_lst"], json!(0.5));
    assert!(above["indifference_gap"].as_f64().unwrap() > 0.0);

    // the minimal schedule sits exactly on the threshold, so the tie rule applies
    let tie = lpstake(&["allocate", "--params", &p, "--t", "1"]).json();
    assert_eq!(tie["decision"]["x_lp_lst"], json!(0.0));
    assert_eq!(tie["indifference_gap"], json!(0.0));
    let obj = &tie["objective"];
    let gap = obj["equal_risk"].as_f64().unwrap() - obj["stake_all"].as_f64().unwrap();
    assert!(gap.abs() < 1e-12);
}

#[test]
fn pool_and_fee_curve() {
    let fx = Fixture::new();
    let p = fx.table1();
    let pool = lpstake(&[
        "pool",
        "--params",
        &p,
        "--invariant-l",
        "4",
        "--price",
        "0.25",
    ])
    .json();
    assert!((pool["u_star"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!((pool["v_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((pool["pool_value"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let pos = lpstake(&[
        "pool",
        "--params",
        &p,
        "--invariant-l",
        "1",
        "--price",
        "0.5",
        "--lst-deposit",
        "2",
        "--eth-deposit",
        "3",
    ])
    .json();
    assert_eq!(pos["position"]["provision_condition"], json!(false));
    assert!(pos["position"]["position_value"].as_f64() < pos["position"]["hold_value"].as_f64());

    let curve = lpstake(&["fee-curve", "--params", &p, "--t-max", "5", "--steps", "10"]);
    let mut lines = curve.stdout.lines();
    assert_eq!(lines.next().unwrap(), "t,fee_rate,fee_threshold,capped");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[2], "0.0");
    assert_eq!(curve.stdout.lines().count(), 12);
}

#[test]
fn simulate_matches_closed_forms() {
    let fx = Fixture::new();
    let p = fx.table1();
    let run = lpstake(&[
        "simulate", "--params", &p, "--c", "-1.298", "--paths", "500000", "--seed", "7",
    ])
    .json();
    let total = &run["quantities"]["no_fee_total"];
    let z = (total["estimate"].as_f64().unwrap() - 0.176) / total["std_error"].as_f64().unwrap();
    assert!(z.abs() <= 3.0, "{total}");
    assert!(total["z_score"].as_f64().unwrap().abs() <= 3.0);

    let up = lpstake(&[
        "simulate", "--params", &p, "--c", "1.0", "--paths", "100000", "--fees",
    ])
    .json();
    let hit = &up["quantities"]["hit_fraction"];
    let want = (-2.0 * 0.4472f64).exp();
    assert!((hit["closed_form"].as_f64().unwrap() - want).abs() < 1e-4);
    assert!(hit["z_score"].as_f64().unwrap().abs() <= 3.0, "{hit}");
    assert!(up["quantities"]["with_fee_total"].is_object());
}

#[test]
fn runs_are_deterministic_and_out_writes_files() {
    let fx = Fixture::new();
    let p = fx.table1();
    let args = [
        "simulate", "--params", &p, "--c", "-0.5", "--paths", "2000", "--seed", "3",
    ];
    assert_eq!(lpstake(&args).stdout, lpstake(&args).stdout);

    let out = fx.dir.path().join("v.csv");
    let run = lpstake(&[
        "validate",
        "--params",
        &p,
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.is_empty());
    let text = fs::read_to_string(out).unwrap();
    assert!(text.starts_with("staking_incentive,staking_margin,parity_boundary"));
}
