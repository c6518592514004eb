use pivotmt_core::config::PipelineConfig;
use pivotmt_core::experiment::{control_config, run_experiment, Manifest};
use pivotmt_core::io;
use pivotmt_core::pivot::Registry;
use pivotmt_core::Error;

fn small() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for (k, v) in [
        ("vocab_size", "80"),
        ("direct_size", "100"),
        ("src_pivot_size", "400"),
        ("pivot_tgt_size", "600"),
        ("test_size", "60"),
        ("num_merges", "300"),
        ("em_iterations", "4"),
        ("beam", "8"),
        ("cascade_n", "2"),
        ("cascade_m", "2"),
        ("systems", "direct,transfer,transfer-nbest,transfer-bt,triangulation,synth-src,synth-tgt"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&cfg, &Registry::builtin(), Some(a.path())).unwrap();
    let rb = run_experiment(&cfg, &Registry::builtin(), Some(b.path())).unwrap();
    assert_eq!(ra.to_text(), rb.to_text());
    for file in ["report.txt", "config.txt", "manifest.txt", "hyp/transfer.en", "data/test.ne"] {
        let (x, y) = (a.path().join(file), b.path().join(file));
        assert_eq!(io::read_string(&x).unwrap(), io::read_string(&y).unwrap(), "{file}");
    }
    assert_eq!(ra.results.len(), 7);
    assert!(ra.results.values().all(|r| (0.0..=100.0).contains(&r.score)));
}

#[test]
fn config_snapshot_reproduces_the_run() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&cfg, &Registry::builtin(), Some(dir.path())).unwrap();
    let snapshot = PipelineConfig::load(&dir.path().join("config.txt")).unwrap();
    assert_eq!(snapshot, cfg);
    let again = run_experiment(&snapshot, &Registry::builtin(), None).unwrap();
    assert_eq!(first.to_text(), again.to_text());
}

#[test]
fn manifest_lists_every_artifact() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, &Registry::builtin(), Some(dir.path())).unwrap();
    let manifest = Manifest::load(dir.path()).unwrap();
    let listed: std::collections::BTreeSet<_> = manifest.entries().iter().map(|(p, _)| p.clone()).collect();
    for entry in walk(dir.path()) {
        if entry.file_name().is_some_and(|n| n == "manifest.txt") {
            continue;
        }
        assert!(listed.contains(&entry), "{} missing from manifest", entry.display());
    }
    assert!(listed.iter().all(|p| p.exists()));
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn different_seeds_give_different_data() {
    let a = run_experiment(&small(), &Registry::builtin(), None).unwrap();
    let mut cfg = small();
    cfg.seed = 8;
    let b = run_experiment(&cfg, &Registry::builtin(), None).unwrap();
    assert_ne!(a.to_text(), b.to_text());
}

#[test]
fn control_equalises_sizes_and_lexicons() {
    let c = control_config(&small());
    assert_eq!(c.direct_size, c.src_pivot_size);
    assert_eq!(c.pivot_tgt_size, c.src_pivot_size);
    assert_eq!(c.lexical_overlap, 1.0);
}

#[test]
fn unknown_system_is_a_config_error() {
    let mut cfg = small();
    cfg.systems = vec!["direct".into(), "telepathy".into()];
    let err = run_experiment(&cfg, &Registry::builtin(), None).unwrap_err();
    assert!(matches!(err, Error::Config(ref m) if m.contains("telepathy") && m.contains("transfer")));
}
