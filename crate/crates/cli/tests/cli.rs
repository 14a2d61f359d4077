use std::path::Path;
use std::process::{Command, Output};

fn dadal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dadal"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(record: &str, idx: usize) -> String {
    record.trim().split(',').nth(idx).unwrap().to_string()
}

#[test]
fn theta_from_edge_list_converges() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c5.edges"),
        "# five-cycle\n1 2\n2 3\n3 4\n4 5\n5 1\n",
    )
    .unwrap();
    let out = dadal(
        &[
            "solve", "--gen", "theta", "--graph", "c5.edges", "--solver", "dadal", "--log",
            "h.csv", "--out", "sol.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let record = stdout(&out);
    assert_eq!(record.lines().count(), 1);
    assert_eq!(field(&record, 11), "converged");
    let theta: f64 = field(&record, 9).parse().unwrap();
    assert!((theta - 5f64.sqrt()).abs() < 1e-4);

    let iterations: usize = field(&record, 4).parse().unwrap();
    let history = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    let rows: Vec<&str> = history.lines().skip(1).collect();
    assert_eq!(rows.len(), iterations + 1);
    let wall: Vec<f64> = rows.iter().map(|r| field(r, 8).parse().unwrap()).collect();
    assert!(wall.windows(2).all(|w| w[0] <= w[1]));

    let sol = std::fs::read_to_string(dir.path().join("sol.txt")).unwrap();
    let lines: Vec<&str> = sol.lines().collect();
    assert_eq!(&lines[..4], &["# dadal solution", "n 5", "m 6", "X"]);
    assert_eq!(lines.len(), 4 + 5 + 1 + 6 + 1 + 5);
}

#[test]
fn iteration_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dadal(
        &[
            "solve",
            "--gen",
            "theta",
            "--family",
            "petersen",
            "--solver",
            "adal",
            "--max-iter",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(field(&stdout(&out), 11), "iteration_limit");
}

#[test]
fn malformed_input_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.dat-s"),
        "\"comment\n2\n1\n3\n1 1\n1 1 1 1 1.0\n2 1 4 1 1.0\n",
    )
    .unwrap();
    let out = dadal(&["solve", "--input", "bad.dat-s"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));

    let out = dadal(&["solve", "--input", "missing.dat-s"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = dadal(&["solve", "--gen", "lop"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = dadal(&["solve", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn overflowing_data_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("huge.dat-s"),
        "1\n1\n2\n1.0\n0 1 1 1 1e308\n0 1 1 2 1e308\n0 1 2 2 -1e308\n1 1 1 1 1.0\n1 1 2 2 1.0\n",
    )
    .unwrap();
    for solver in ["adal", "dadal"] {
        let out = dadal(
            &["solve", "--input", "huge.dat-s", "--solver", solver],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
        assert_eq!(field(&stdout(&out), 11), "numeric_failure");
    }
}

#[test]
fn export_then_solve_matches_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dadal(
        &[
            "export",
            "--gen",
            "random",
            "--n",
            "8",
            "--m",
            "10",
            "--density",
            "0.3",
            "--seed",
            "4",
            "--output",
            "r.dat-s",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let a = dadal(&["solve", "--input", "r.dat-s", "--seed", "4"], dir.path());
    let b = dadal(
        &[
            "solve",
            "--gen",
            "random",
            "--n",
            "8",
            "--m",
            "10",
            "--density",
            "0.3",
            "--seed",
            "4",
        ],
        dir.path(),
    );
    assert_eq!(a.status.code(), Some(0));
    // same problem, same solver seed: identical numbers after the name column
    let tail = |o: &Output| {
        let s = stdout(o);
        let cols: Vec<String> = s.trim().split(',').map(str::to_string).collect();
        (cols[2..5].to_vec(), cols[6..].to_vec())
    };
    assert_eq!(tail(&a), tail(&b));

    let out = dadal(
        &[
            "export",
            "--gen",
            "theta",
            "--family",
            "cycle:7",
            "--format-out",
            "edges",
            "--output",
            "c7.edges",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = dadal(&["solve", "--input", "c7.edges"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let theta: f64 = field(&stdout(&out), 9).parse().unwrap();
    assert!((theta - 3.317_667_207).abs() < 1e-4);
}

#[test]
fn bench_contract() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.toml"),
        "methods = [\"adal\", \"dadal\"]\n",
    )
    .unwrap();
    let out = dadal(&["bench", "empty.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(
        dir.path().join("adal.toml"),
        "methods = [\"adal\"]\n[[instance]]\nkind = \"theta\"\ngraph = \"cycle:5\"\n[[instance]]\nkind = \"sdpa\"\npath = \"nope.dat-s\"\n",
    )
    .unwrap();
    let out = dadal(&["bench", "adal.toml", "--threads", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("instance,n,m,adal_iter"));
    let c5: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(c5[0], "theta-cycle5");
    assert!(!c5[3].is_empty());
    assert!(c5[5].is_empty() && c5[6].is_empty() && c5[8].is_empty());
    let failed: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(failed[0], "nope");
    assert!(!failed[11].is_empty());
    assert!(lines[3].starts_with("# median"));

    std::fs::write(
        dir.path().join("pair.toml"),
        "[[instance]]\nkind = \"theta\"\ngraph = \"gnp:20:0.3\"\nseeds = [1, 2, 3]\n",
    )
    .unwrap();
    let out = dadal(&["bench", "pair.toml", "--out", "table.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(stdout(&out).contains("over 3 paired instances"));
}
