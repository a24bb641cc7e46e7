use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stylo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stylo")).args(args).env("STYLO_THREADS", "2").output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn small_corpus(dir: &Path) -> String {
    let out = stylo(&[
        "synth",
        "--seed",
        "3",
        "--authors",
        "3",
        "--docs-per-author",
        "3",
        "--separation",
        "1.5",
        "--min-doc-tokens",
        "600",
        "--max-doc-tokens",
        "800",
        "--out",
        dir.to_str().unwrap(),
    ]);
    ok(&out);
    dir.join("manifest.csv").display().to_string()
}

const TOY_MATRIX: &str =
    "doc_id,a,b,c\nd1,0.1,0.2,0.3\nd2,0.12,0.21,0.28\nd3,0.3,0.1,0.05\nd4,0.31,0.09,0.06\nd5,0.2,0.2,0.2\n";
const TOY_MANIFEST: &str = "id,title,author,genre,form,acts,year,path\n\
    d1,T1,X,comedie,verse,5,1650,t/d1.tsv\nd2,T2,X,comedie,verse,5,1651,t/d2.tsv\n\
    d3,T3,Y,comedie,verse,5,1652,t/d3.tsv\nd4,T4,Y,comedie,verse,5,1653,t/d4.tsv\n\
    d5,T5,Y,comedie,verse,5,1654,t/d5.tsv\n";

fn toy(dir: &Path) -> (String, String) {
    let (m, t) = (dir.join("toy.csv"), dir.join("toy_manifest.csv"));
    fs::write(&m, TOY_MATRIX).unwrap();
    fs::write(&t, TOY_MANIFEST).unwrap();
    (m.display().to_string(), t.display().to_string())
}

#[test]
fn missing_manifest_exits_with_code_2() {
    let out = stylo(&["extract", "--manifest", "/nonexistent/manifest.csv", "--out", "/tmp/unused-stylo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/manifest.csv"));
}

#[test]
fn extract_reports_counts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_corpus(&tmp.path().join("corpus"));
    let words = tmp.path().join("words.txt");
    fs::write(&words, "# short list\net\nde\nla\nle\n").unwrap();
    let run = |out: &str| {
        let out_dir = tmp.path().join(out);
        let stdout = ok(&stylo(&[
            "extract",
            "--manifest",
            &manifest,
            "--features",
            "fw",
            "--fw-list",
            words.to_str().unwrap(),
            "--min-tokens",
            "100",
            "--out",
            out_dir.to_str().unwrap(),
        ]));
        (stdout, fs::read(out_dir.join("matrix.csv")).unwrap(), out_dir)
    };
    let (stdout, first, dir) = run("a");
    assert_eq!(stdout.trim(), "9 docs, 4 features");
    assert!(dir.join("run.json").exists());
    let record: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["command"], "extract");
    assert_eq!(record["config"]["features"]["features"], "fw");
    let (_, second, _) = run("a");
    assert_eq!(first, second);
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(&tmp.path().join("a"));
    small_corpus(&tmp.path().join("b"));
    for f in ["manifest.csv", "tokens/A01_01.tsv", "tokens/A03_03.tsv", "function_words.txt"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn synth_rejects_single_author() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stylo(&["synth", "--authors", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cluster_toy_matrix_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (matrix, manifest) = toy(tmp.path());
    let out = tmp.path().join("cl");
    ok(&stylo(&[
        "cluster",
        "--matrix",
        &matrix,
        "--manifest",
        &manifest,
        "--select",
        "all",
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]));
    let newick = fs::read_to_string(out.join("dendrogram.nwk")).unwrap();
    assert_eq!(newick.matches('(').count(), 4);
    assert!(newick.ends_with(";\n"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    for key in ["n_features", "ac", "purity"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["n_features"], 3);
    let svg = fs::read_to_string(out.join("dendrogram.svg")).unwrap();
    assert!(svg.contains("d1 (X)") && svg.contains("d5 (Y)"));
    assert!(svg.contains("features: 3"));
    assert!(fs::read_to_string(out.join("dendrogram.dot")).unwrap().starts_with("digraph"));
    let assignment = fs::read_to_string(out.join("assignment.csv")).unwrap();
    assert!(assignment.starts_with("doc_id,cluster\nd1,1\nd2,1\n"));
    assert!(out.join("run.json").exists() && out.join("distances.csv").exists());
}

#[test]
fn reliable_selection_on_matrix_needs_min_doc_len() {
    let tmp = tempfile::tempdir().unwrap();
    let (matrix, _) = toy(tmp.path());
    let out = tmp.path().join("x");
    let run = stylo(&["cluster", "--matrix", &matrix, "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    // one token cannot support any feature estimate
    let run =
        stylo(&["cluster", "--matrix", &matrix, "--k", "2", "--min-doc-len", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("selection eliminated all features"));
}

#[test]
fn malformed_matrix_is_a_format_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "doc_id,a\nd1,zero\nd2,1\n").unwrap();
    let run = stylo(&[
        "cluster",
        "--matrix",
        bad.to_str().unwrap(),
        "--select",
        "all",
        "--k",
        "2",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn eta_rows_sorted_by_strength() {
    let tmp = tempfile::tempdir().unwrap();
    let (matrix, manifest) = toy(tmp.path());
    let out = tmp.path().join("eta");
    ok(&stylo(&[
        "eta",
        "--matrix",
        &matrix,
        "--manifest",
        &manifest,
        "--select",
        "all",
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(out.join("eta.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("feature,eta_squared,p_value"));
    let etas: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(etas.len(), 3);
    assert!(etas.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn select_and_sweep_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_corpus(&tmp.path().join("corpus"));
    let sel = tmp.path().join("sel");
    ok(&stylo(&["select", "--manifest", &manifest, "--min-tokens", "100", "--out", sel.to_str().unwrap()]));
    let text = fs::read_to_string(sel.join("selection.csv")).unwrap();
    assert!(text.starts_with("feature,p_bar,sigma,required_n,retained,degenerate\n"));
    assert_eq!(text.lines().count(), 111);
    assert!(text.contains(",true,") && text.contains(",false,"));

    let sw = tmp.path().join("sw");
    ok(&stylo(&["sweep", "--manifest", &manifest, "--min-tokens", "100", "--out", sw.to_str().unwrap()]));
    let text = fs::read_to_string(sw.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0], "cutoff,n_features,purity_authors,purity_reference");
    assert!(rows[1].starts_with("0.01,2,"));
    assert!(rows[7].starts_with("RS,"));
}
