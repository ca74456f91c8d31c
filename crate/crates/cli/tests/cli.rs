use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aldiag"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.scn"))
}

fn with_stdin(mut cmd: Command, input: &str) -> Output {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_prints_each_answer_set() {
    let mut cmd = bin();
    cmd.arg("solve");
    let o = with_stdin(cmd, "{p(X) : q(X)}. q(a).\n");
    assert!(o.status.success());
    assert_eq!(stdout(&o), "{p(a), q(a)}\n{q(a)}\n");
}

#[test]
fn solve_empty_input() {
    let mut cmd = bin();
    cmd.args(["solve", "-"]);
    let o = with_stdin(cmd, "");
    assert_eq!(stdout(&o), "{}\n");
}

#[test]
fn conf_of_the_symptom_is_unsat() {
    let t = bin()
        .args(["translate", "--program", "conf"])
        .arg(scenario("ac_basic"))
        .output()
        .unwrap();
    assert!(t.status.success());
    let mut cmd = bin();
    cmd.arg("solve");
    let o = with_stdin(cmd, &stdout(&t));
    assert_eq!(stdout(&o), "UNSAT\n");
}

#[test]
fn parse_errors_exit_one() {
    let mut cmd = bin();
    cmd.arg("solve");
    let o = with_stdin(cmd, "p :- q(.\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:"));
}

#[test]
fn missing_scenario_exits_one() {
    let o = bin().args(["run", "no/such/file.scn"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_lists_candidates_and_resolves() {
    let o = bin().args(["run", "--all-candidates"]).arg(scenario("ac_basic")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("candidates count=3"), "{out}");
    for c in ["{brk@0} suspects={b}", "{brk@0,srg@0} suspects={b,r}", "{srg@0} suspects={r}"] {
        assert!(out.contains(&format!("candidate explanation={c}")), "{out}");
    }
    assert!(out.contains("summary status=resolved exit=0"), "{out}");
}

#[test]
fn repair_trace_has_two_rounds() {
    let o = bin().args(["run", "--trace"]).arg(scenario("ac_repair")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let repairs: Vec<&str> = out.lines().filter(|l| l.starts_with("repair ")).collect();
    assert_eq!(repairs, ["repair components={b} time=1", "repair components={r} time=2"]);
    assert!(out.contains("observe literal=on(b) time=3"));
    assert!(out.contains("\nresolved\n"));
}

#[test]
fn false_reading_exits_two() {
    let o = bin().arg("run").arg(scenario("ac_false_reading")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn batch_exit_code_is_the_worst() {
    let o = bin()
        .arg("run")
        .arg(scenario("ac_basic"))
        .arg(scenario("ac_false_reading"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("summary")).count(), 2);
}

#[test]
fn seeded_traces_are_identical() {
    let go = || {
        bin()
            .args(["--seed", "11", "run", "--trace", "--selection", "seeded:0"])
            .arg(scenario("ac_surge_first"))
            .output()
            .unwrap()
            .stdout
    };
    let first = go();
    assert!(!first.is_empty());
    assert_eq!(first, go());
    assert!(String::from_utf8(first).unwrap().contains("selection=seeded:11"));
}

#[test]
fn module_flags() {
    let o = bin()
        .args(["run", "--all-candidates", "--module", "d0"])
        .arg(scenario("ext_sa"))
        .output()
        .unwrap();
    assert!(stdout(&o).contains("candidates count=6"));
    let o = bin()
        .args(["run", "--window", "1"])
        .arg(scenario("ext_sa"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin()
        .args(["run", "--all-candidates", "--max-actions", "2"])
        .arg(scenario("ac_basic"))
        .output()
        .unwrap();
    assert!(stdout(&o).contains("candidates count=2"));
}

#[test]
fn models_of_the_history() {
    let o = bin().arg("models").arg(scenario("ac_basic")).output().unwrap();
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(out.contains("-{close(s1)}->"));
    let o = bin().args(["models", "--all-records"]).arg(scenario("ac_basic")).output().unwrap();
    assert_eq!(stdout(&o), "no models\n");
}

#[test]
fn transform_reports_equivalence() {
    let dir = std::env::temp_dir().join(format!("aldiag-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("p.lp");
    std::fs::write(&p, "a :- b, not c. b :- d. b :- e. d. c :- not a.\n").unwrap();
    let o = bin().arg("transform").arg(&p).args(["--op", "eval", "--literal", "b"]).output().unwrap();
    let out = stdout(&o);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.contains("equivalent: true"), "{out}");
    let o = bin().arg("transform").arg(&p).args(["--op", "split", "--literal", "d", "e"]).output().unwrap();
    assert!(stdout(&o).contains("equivalent: true"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn errors_are_not_repeated() {
    let dir = std::env::temp_dir().join(format!("aldiag-err-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("stuck.scn");
    let text = "%% system\ncomp(b). fluent(on(b)). a_act(flip). x_act(brk).\n\
                causes(flip, on(b), []). causes(brk, ab(b), []). caused(-on(b), [ab(b)]).\n\
                %% history\nobs(-on(b), 0). obs(-ab(b), 0). hpd(flip, 0).\n\
                %% world\nactual_occurs(brk, 0).\n";
    std::fs::write(&p, text).unwrap();
    let o = bin().arg("run").arg(&p).output().unwrap();
    std::fs::remove_dir_all(dir).ok();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("no successor state").count(), 1, "{err}");
}
