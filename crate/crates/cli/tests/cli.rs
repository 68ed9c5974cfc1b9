mod common;

use std::collections::HashSet;
use std::fs;

use common::*;
use csigan_core::metrics::{dataset_delay_spreads, jsd_matrix, summarize_dataset};
use csigan_core::load_dataset;

#[test]
fn synth_grid_loads_back_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_grid(dir.path(), "a.csit", "grid:0,9,10,0,9,10");
    let b = synth_grid(dir.path(), "b.csit", "grid:0,9,10,0,9,10");
    let ds = load_dataset(&a).unwrap();
    assert_eq!(ds.len(), 100);
    assert_eq!(ds.points[10].position, [9.0, 1.0]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(dir.path().join("a.resolved.toml").exists());
}

#[test]
fn malformed_scenario_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "preset = \"demo\"\nnoise_powr = 1.0\n[geometry]\nnum_arrays = 1\nrows_per_array = 1\ncols_per_array = 2\nnum_taps = 4\ncarrier_hz = 1e9\nbandwidth_hz = 5e7\n").unwrap();
    let out = csigan(&["synth", "--scenario", s(&cfg), "--positions", "grid:0,1,2,0,1,2", "--out", s(&dir.path().join("x.csit"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("noise_powr"), "{}", stderr(&out));
}

#[test]
fn split_counts_and_disjointness() {
    let dir = tempfile::tempdir().unwrap();
    let all = synth_grid(dir.path(), "line.csit", "grid:0,110,12,0,0,1");
    let (train, test) = (dir.path().join("train.csit"), dir.path().join("test.csit"));
    let out = ok(csigan(&["split", "--dataset", s(&all), "--out-train", s(&train), "--out-test", s(&test)]));
    assert!(stdout(&out).contains("train: 3\ntest: 3"), "{}", stdout(&out));

    let key = |p: [f64; 2]| (p[0].to_bits(), p[1].to_bits());
    let tr: HashSet<_> = load_dataset(&train).unwrap().positions().into_iter().map(key).collect();
    let te: HashSet<_> = load_dataset(&test).unwrap().positions().into_iter().map(key).collect();
    assert_eq!(tr.len(), 3);
    assert!(tr.is_disjoint(&te));
}

#[test]
fn hole_covering_everything_warns_with_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let all = synth_grid(dir.path(), "g.csit", "grid:0,3,4,0,2,3");
    let train = dir.path().join("train.csit");
    let out = csigan(&[
        "split", "--dataset", s(&all), "--hole-center", "1.5,1", "--hole-diameter", "100",
        "--out-train", s(&train), "--out-test", s(&dir.path().join("test.csit")),
    ]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).starts_with("warning"), "{}", stderr(&out));
    assert!(load_dataset(&train).unwrap().is_empty());
}

#[test]
fn training_log_resume_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_grid(dir.path(), "g.csit", "grid:0,9,6,0,9,6");
    let cfg = train_config(dir.path(), "t.toml", 100, 50);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for run in [&a, &b] {
        ok(csigan(&["train", "--train", s(&data), "--config", s(&cfg), "--out", s(run), "--quiet"]));
    }
    let log = fs::read_to_string(a.join("log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "step,critic_loss,gen_loss,real_score,fake_score");
    assert_eq!(lines.len(), 101);
    assert!(lines[100].starts_with("100,"));
    assert_eq!(fs::read(a.join("final.wgck")).unwrap(), fs::read(b.join("final.wgck")).unwrap());
    assert_eq!(log, fs::read_to_string(b.join("log.csv")).unwrap());
    assert!(a.join("step-00000050.wgck").exists() && a.join("resolved.toml").exists());

    // Resuming in a fresh directory continues the counter and lands on the
    // same final state.
    let c = dir.path().join("c");
    let mid = a.join("step-00000050.wgck");
    ok(csigan(&["train", "--train", s(&data), "--resume", s(&mid), "--out", s(&c), "--quiet"]));
    assert_eq!(fs::read(a.join("final.wgck")).unwrap(), fs::read(c.join("final.wgck")).unwrap());
    let resumed = fs::read_to_string(c.join("log.csv")).unwrap();
    assert_eq!(resumed.lines().nth(1).unwrap().split(',').next(), Some("51"));
    assert_eq!(resumed.lines().count(), 51);

    // Resuming in place keeps the earlier rows and reproduces the log.
    ok(csigan(&["train", "--train", s(&data), "--resume", s(&mid), "--out", s(&a), "--quiet"]));
    assert_eq!(fs::read_to_string(a.join("log.csv")).unwrap(), log);

    // Extending the run through a config is allowed; changing the seed is not.
    let longer = train_config(dir.path(), "t2.toml", 120, 50);
    ok(csigan(&["train", "--train", s(&data), "--resume", s(&a.join("final.wgck")), "--config", s(&longer), "--out", s(&c), "--quiet"]));
    assert_eq!(fs::read_to_string(c.join("log.csv")).unwrap().lines().last().unwrap().split(',').next(), Some("120"));
    let reseeded = dir.path().join("t3.toml");
    fs::write(&reseeded, fs::read_to_string(&longer).unwrap().replace("seed = 7", "seed = 8")).unwrap();
    let out = csigan(&["train", "--train", s(&data), "--resume", s(&a.join("final.wgck")), "--config", s(&reseeded), "--out", s(&c)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn numerical_abort_writes_a_diagnostic_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_grid(dir.path(), "g.csit", "grid:0,9,5,0,9,5");
    let cfg = dir.path().join("blowup.toml");
    fs::write(&cfg, "total_steps = 50\nbatch_size = 8\nn_critic = 1\nnoise_dim = 4\nwidth_scale = 0.02\nlearning_rate = 1e300\n").unwrap();
    let run = dir.path().join("run");
    let out = csigan(&["train", "--train", s(&data), "--config", s(&cfg), "--out", s(&run), "--quiet"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"), "{}", stderr(&out));
    assert!(run.join("diagnostic.wgck").exists());
    assert!(!run.join("final.wgck").exists());
}

#[test]
fn generate_modes_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_grid(dir.path(), "g.csit", "grid:0,9,5,0,9,5");
    let cfg = train_config(dir.path(), "t.toml", 5, 0);
    let run = dir.path().join("run");
    ok(csigan(&["train", "--train", s(&data), "--config", s(&cfg), "--out", s(&run), "--quiet"]));
    let ck = run.join("final.wgck");
    let positions = dir.path().join("p.csv");
    fs::write(&positions, "x,y\n1.5,2.5\n3,4\n0.25,8\n").unwrap();
    let gen = |mode: &str, seed: &str, name: &str| {
        let out = dir.path().join(name);
        ok(csigan(&["generate", "--checkpoint", s(&ck), "--positions", s(&positions), "--mode", mode, "--seed", seed, "--out", s(&out)]));
        fs::read(out).unwrap()
    };
    assert_eq!(gen("fixed", "1", "f1.csit"), gen("fixed", "1", "f2.csit"));
    assert_ne!(gen("fixed", "1", "f1.csit"), gen("fixed", "2", "f3.csit"));
    assert_eq!(gen("variable", "3", "v1.csit"), gen("variable", "3", "v2.csit"));
    let ds = load_dataset(dir.path().join("v1.csit")).unwrap();
    assert_eq!(ds.positions(), vec![[1.5, 2.5], [3.0, 4.0], [0.25, 8.0]]);
    assert_eq!(ds.provenance["generator"], "wgan-variable");
}

#[test]
fn interpolate_policies() {
    let dir = tempfile::tempdir().unwrap();
    let train = synth_grid(dir.path(), "g.csit", "grid:0,4,5,0,4,5");
    let out = dir.path().join("i.csit");
    ok(csigan(&["interpolate", "--train", s(&train), "--positions", "grid:-1,5,4,0,4,2", "--out", s(&out)]));
    assert_eq!(load_dataset(&out).unwrap().len(), 8);
    let strict = csigan(&["interpolate", "--train", s(&train), "--positions", "grid:-1,5,4,0,4,2", "--fallback", "error", "--out", s(&out)]);
    assert_eq!(code(&strict), 3);
    assert!(stderr(&strict).contains("convex hull"));

    // Training positions come back unchanged.
    ok(csigan(&["interpolate", "--train", s(&train), "--positions", &format!("dataset:{}", s(&train)), "--out", s(&out)]));
    assert_eq!(load_dataset(&out).unwrap().points, load_dataset(&train).unwrap().points);
}

#[test]
fn evaluate_reports_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_grid(dir.path(), "a.csit", "grid:0,9,8,0,9,8");
    let b = synth_grid(dir.path(), "b.csit", "grid:0.5,9.5,7,0,9,7");
    let copy = dir.path().join("copy.csit");
    fs::copy(&a, &copy).unwrap();
    let rep = dir.path().join("rep");
    let out = ok(csigan(&[
        "evaluate", "--reference", s(&a), "--candidates", s(&b), &format!("twin={}", s(&copy)),
        "--gaussian-baseline", "--bins", "40", "--out", s(&rep),
    ]));
    assert!(stdout(&out).contains("AoA deg"));

    let da = load_dataset(&a).unwrap();
    let db = load_dataset(&b).unwrap();
    let mut r = csv::Reader::from_path(rep.join("jsd.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["set", "a", "b", "twin", "gaussian"]);
    let rows: Vec<Vec<String>> = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    let value = |i: usize, j: usize| rows[i][j + 1].parse::<f64>().unwrap();
    for i in 0..4 {
        assert_eq!(value(i, i), 0.0);
    }
    assert_eq!(value(0, 2), 0.0);
    assert!(value(0, 1) > 0.0);

    // Without the random baseline the matrix is recomputable exactly.
    let sets = vec![("a".to_string(), dataset_delay_spreads(&da)), ("b".to_string(), dataset_delay_spreads(&db))];
    let m = jsd_matrix(&sets, 40).unwrap();
    let hist = csv::Reader::from_path(rep.join("histograms.csv")).unwrap().records().count();
    assert_eq!(hist, 40);
    let rep2 = dir.path().join("rep2");
    ok(csigan(&["evaluate", "--reference", s(&a), "--candidates", s(&b), "--bins", "40", "--out", s(&rep2)]));
    let mut r = csv::Reader::from_path(rep2.join("jsd.csv")).unwrap();
    let rec = r.records().next().unwrap().unwrap();
    assert_eq!(rec[2].parse::<f64>().unwrap(), m.values[0][1]);

    let summary = summarize_dataset(&db);
    let mut r = csv::Reader::from_path(rep.join("datapoints_b.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "y", "power_db_0", "delay_spread_ns_0", "azimuth_rad_0"]);
    for (rec, s) in r.records().zip(&summary) {
        let v: Vec<f64> = rec.unwrap().iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!([v[0], v[1]], s.position);
        assert_eq!(v[2], db.power_db(s.power[0]));
        assert_eq!(v[3], s.mean_delay_spread[0] * 1e9);
        match s.azimuth[0] {
            Some(az) => assert_eq!(v[4], az),
            None => assert!(v[4].is_nan()),
        }
    }
}

#[test]
fn evaluate_argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_grid(dir.path(), "a.csit", "grid:0,9,4,0,9,4");
    let rep = dir.path().join("rep");
    assert_eq!(code(&csigan(&["evaluate", "--reference", s(&a), "--out", s(&rep)])), 2);
    assert_eq!(code(&csigan(&["evaluate", "--reference", s(&a), "--candidates", s(&a), "--bins", "1", "--out", s(&rep)])), 2);
    assert_eq!(code(&csigan(&["evaluate", "--reference", s(&a), "--candidates", s(&a), "--out", s(&rep)])), 2);
}

#[test]
fn corrupt_inputs_report_format_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_grid(dir.path(), "a.csit", "grid:0,9,4,0,9,4");
    let bytes = fs::read(&a).unwrap();
    let cases: [(&str, Vec<u8>, &str); 3] = [
        ("magic.csit", [b"XSIT".as_slice(), &bytes[4..]].concat(), "format error 1"),
        ("short.csit", bytes[..bytes.len() - 1].to_vec(), "format error 3"),
        ("long.csit", [bytes.as_slice(), &[0]].concat(), "format error 4"),
    ];
    for (name, content, expected) in cases {
        let path = dir.path().join(name);
        fs::write(&path, content).unwrap();
        let out = csigan(&["split", "--dataset", s(&path), "--out-train", s(&dir.path().join("t")), "--out-test", s(&dir.path().join("u"))]);
        assert_eq!(code(&out), 3);
        assert!(stderr(&out).contains(expected), "{}", stderr(&out));
    }
    let missing = csigan(&["generate", "--checkpoint", s(&dir.path().join("none.wgck")), "--positions", "grid:0,1,2,0,1,2", "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn unknown_training_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_grid(dir.path(), "g.csit", "grid:0,9,4,0,9,4");
    let cfg = dir.path().join("t.toml");
    fs::write(&cfg, "total_steps = 3\nn_critics = 2\n").unwrap();
    let out = csigan(&["train", "--train", s(&data), "--config", s(&cfg), "--out", s(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("n_critics"));
}
