use std::path::{Path, PathBuf};

use cocycle_kam::cli::{run, Artifact, CfOutput, Command, LambdaSummary, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE};
use cocycle_kam::experiments::{read_csv, SCAN_HEADER};
use cocycle_kam::kam::{verify_result, KamResult, KamStatus, FORMAT_VERSION};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cocycle-kam-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read<T: serde::de::DeserializeOwned>(path: &PathBuf) -> T {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn path_arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn kam_reduce_artifact_round_trips() {
    let (out, state) = (scratch("reduce.json"), scratch("state.json"));
    let code = run([
        "cocycle-kam",
        "kam-reduce",
        "--lambda",
        "1e-3",
        "--energy",
        "-0.5",
        "--out",
        &path_arg(&out),
        "--dump-state",
        &path_arg(&state),
    ]);
    assert_eq!(code, EXIT_OK);
    let art: Artifact<KamResult> = read(&out);
    assert_eq!(art.format_version, FORMAT_VERSION);
    let kam = art.run_config.kam.as_ref().expect("config recorded");
    assert!(kam.adaptive);
    match &art.run_config.command {
        Command::KamReduce(a) => {
            assert_eq!(a.energy, -0.5);
            assert_eq!(a.potential.lambda, 1e-3);
        }
        other => panic!("wrong command {other:?}"),
    }
    let r = art.result;
    assert_eq!(r.status, KamStatus::Converged);
    let v = verify_result(&r);
    assert!(v.grid_residual <= r.config.tol_residual, "{v:?}");
    assert!(v.rho_gap.unwrap() <= 1e-4);

    let bare: KamResult = read(&state);
    assert_eq!(serde_json::to_value(&bare).unwrap(), serde_json::to_value(&r).unwrap());
}

#[test]
fn cf_output_lists_convergents_and_selection() {
    let out = scratch("cf.json");
    let code = run(["cocycle-kam", "cf", "--quotients", "1,20,1,2000", "--max-q", "1e6", "--select-q", "--out", &path_arg(&out)]);
    assert_eq!(code, EXIT_OK);
    let art: Artifact<CfOutput> = read(&out);
    let r = art.result;
    assert_eq!(&r.quotients[..4], &[1, 20, 1, 2000]);
    assert!(r.exact);
    let q: Vec<&str> = r.convergents.iter().map(|(_, q)| q.as_str()).collect();
    assert_eq!(&q[..5], &["1", "1", "21", "22", "44021"]);
    let s = r.selected.expect("selection requested");
    assert_eq!(s.q[0], "1");
    assert_eq!(s.indices.len(), s.q.len());
}

#[test]
fn scan_writes_csv_and_summary() {
    let (csv, summary) = (scratch("scan.csv"), scratch("scan.json"));
    let code = run([
        "cocycle-kam",
        "scan",
        "--e-steps",
        "4",
        "--e-min",
        "-1",
        "--e-max",
        "1",
        "--lambda-list",
        "1e-3",
        "--jobs",
        "1",
        "--out",
        &path_arg(&csv),
        "--summary",
        &path_arg(&summary),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), SCAN_HEADER);
    let recs = read_csv(text.as_bytes()).unwrap();
    assert_eq!(recs.len(), 4);
    let art: Artifact<Vec<LambdaSummary>> = read(&summary);
    assert_eq!(art.result.len(), 1);
    assert_eq!(art.result[0].summary.n, 4);
    assert!(art.run_config.kam.is_some());
}

#[test]
fn exit_codes() {
    assert_eq!(run(["cocycle-kam", "--help"]), EXIT_OK);
    assert_eq!(run(["cocycle-kam", "scan", "--lambda-list", "1e-3,1e-2"]), EXIT_USAGE);
    assert_eq!(run(["cocycle-kam", "kam-reduce", "--potential", "cosh"]), EXIT_USAGE);
    let out = scratch("hyperbolic.json");
    // E = 3 lies outside the spectrum: the mean matrix is hyperbolic
    let code = run(["cocycle-kam", "kam-reduce", "--lambda", "1e-3", "--energy", "3", "--out", &path_arg(&out)]);
    assert_eq!(code, EXIT_PRECONDITION);
    let art: Artifact<KamResult> = read(&out);
    assert_eq!(art.result.status, KamStatus::PreconditionFailed);
}
