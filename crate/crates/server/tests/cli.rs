use std::path::Path;
use std::process::{Command, Output};

fn ideaspan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ideaspan"))
        .current_dir(dir)
        .args(["--mock", "--seed", "7", "--session", "s.json"])
        .args(args)
        .env_remove("IDEASPAN_CONFIG")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ideaspan(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn tree_marks_removed_nodes_and_nests_children() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["new", "A scientist character doing an experiment"]);
    ok(dir.path(), &["expand", "0", "--span", "2:11", "--mode", "alt"]);
    ok(dir.path(), &["reject", "2"]);
    ok(dir.path(), &["branch", "3"]);
    ok(dir.path(), &["expand", "3", "--span", "0:1", "--mode", "detail", "--novelty", "0.25"]);
    let tree = ok(dir.path(), &["show", "--tree"]);
    let lines: Vec<&str> = tree.lines().collect();
    assert_eq!(lines.len(), 10, "{tree}");
    assert!(lines[0].starts_with("#0 [root] A scientist"));
    assert!(lines[2].starts_with("  #2 [suggestion, removed]"), "{tree}");
    assert!(lines[3].starts_with("  #3 [branch]"), "{tree}");
    assert!(lines[4].starts_with("    #6 [suggestion]"), "{tree}");
}

#[test]
fn expanding_a_missing_node_fails_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["new", "a red kite"]);
    let out = ideaspan(dir.path(), &["expand", "42", "--span", "0:1"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not_found"), "{err}");
}

#[test]
fn commands_without_a_session_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = ideaspan(dir.path(), &["show"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ideaspan new"));
}

#[test]
fn new_refuses_to_clobber_without_force() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["new", "first"]);
    assert!(!ideaspan(dir.path(), &["new", "second"]).status.success());
    ok(dir.path(), &["new", "second", "--force"]);
    assert!(ok(dir.path(), &["show"]).contains("\"prompt_text\": \"second\""));
}

#[test]
fn replay_of_ten_steps_is_byte_identical() {
    let script = "\
# ten steps
new \"A mascot character for a bakery\"
expand 0 --span 2:8 --mode detail --novelty 0.25
images 1
reject 2
branch 3
expand 3 --span 0:1 --mode alt --novelty 0.75
images 6
reject 7
show --tree
metrics --json
";
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("script.txt"), script).unwrap();
        let stdout = ok(dir.path(), &["replay", "script.txt"]);
        (std::fs::read(dir.path().join("s.json")).unwrap(), stdout)
    };
    let (a, out_a) = run();
    let (b, out_b) = run();
    assert_eq!(a, b);
    assert_eq!(out_a, out_b);
    assert!(out_a.contains("> metrics --json"));
}

#[test]
fn replay_stops_at_the_first_failing_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "new \"a quiet harbor\"\nreject 0\nbranch 0\n").unwrap();
    let out = ideaspan(dir.path(), &["replay", "bad.txt"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("invalid_state"), "{err}");
}
