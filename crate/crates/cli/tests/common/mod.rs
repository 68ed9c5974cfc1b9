#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn csigan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csigan")).args(args).output().expect("spawn csigan")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Fails with the captured streams when the command did not succeed.
pub fn ok(out: Output) -> Output {
    assert!(out.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", out.status.code(), stdout(&out), stderr(&out));
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Line-of-sight scenario with one small array and wide bounds.
pub fn los_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("los.toml");
    fs::write(
        &path,
        "seed = 0\nnoise_power = 0.0\n\n\
         [geometry]\nnum_arrays = 1\nrows_per_array = 1\ncols_per_array = 2\nnum_taps = 4\ncarrier_hz = 1.272e9\nbandwidth_hz = 50e6\n\n\
         [[arrays]]\nposition = [-5.0, 3.0]\norientation = 0.0\n\n\
         [[reflectors]]\nposition = [20.0, -10.0]\ngain = [0.5, 0.2]\n\n\
         [bounds]\nmin = [-1.0, -1.0]\nmax = [200.0, 200.0]\n",
    )
    .unwrap();
    path
}

/// Small, fast training configuration.
pub fn train_config(dir: &Path, name: &str, total_steps: u64, checkpoint_every: u64) -> PathBuf {
    let path = dir.join(name);
    fs::write(
        &path,
        format!(
            "total_steps = {total_steps}\nseed = 7\nbatch_size = 8\nn_critic = 2\nnoise_dim = 4\n\
             width_scale = 0.02\ncheckpoint_every = {checkpoint_every}\n"
        ),
    )
    .unwrap();
    path
}

/// Synthesizes a `nx × ny` grid dataset and returns its path.
pub fn synth_grid(dir: &Path, name: &str, grid: &str) -> PathBuf {
    let scenario = los_scenario(dir);
    let out = dir.join(name);
    ok(csigan(&["synth", "--scenario", s(&scenario), "--positions", grid, "--out", s(&out)]));
    out
}
