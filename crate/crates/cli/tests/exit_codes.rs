use std::path::Path;
use std::process::Command;

use scatsynth::io::{save_wav, WavFormat};
use scatsynth::textures;

fn scatsynth(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_scatsynth")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_wav(path: &Path, n: usize, seed: u64) {
    save_wav(path, &textures::white_noise(n, seed, 0.2), 16_000, WavFormat::Float32).unwrap();
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(scatsynth(&["analyze", "--bogus"]).0, 2);
    assert_eq!(scatsynth(&[]).0, 2);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(scatsynth(&["--help"]).0, 0);
    assert_eq!(scatsynth(&["--version"]).0, 0);
}

#[test]
fn garbage_input_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.wav");
    std::fs::write(&bad, b"not a riff file").unwrap();
    assert_eq!(scatsynth(&["analyze", bad.to_str().unwrap()]).0, 3);
    let missing = dir.path().join("missing.json");
    assert_eq!(scatsynth(&["synthesize", missing.to_str().unwrap(), "-o", "x.wav"]).0, 3);
}

#[test]
fn self_comparison_is_zero_and_mismatched_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    write_wav(Path::new(&p("a.wav")), 1024, 1);
    write_wav(Path::new(&p("b.wav")), 2048, 2);
    assert_eq!(scatsynth(&["analyze", &p("a.wav"), "-o", &p("a.json")]).0, 0);
    assert_eq!(scatsynth(&["analyze", &p("b.wav"), "-o", &p("b.json")]).0, 0);

    let (code, stdout) = scatsynth(&["compare", &p("a.json"), &p("a.json"), "--max-distance", "0"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("distance 0.000000e0"), "{stdout}");
    assert_eq!(scatsynth(&["compare", &p("a.json"), &p("b.json")]).0, 3);
}

#[test]
fn exceeded_distance_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    write_wav(Path::new(&p("a.wav")), 1024, 1);
    write_wav(Path::new(&p("b.wav")), 1024, 2);
    scatsynth(&["analyze", &p("a.wav"), &p("b.wav"), "-o", &p("out")]);
    let (code, _) = scatsynth(&["compare", &p("out/a.json"), &p("out/b.json"), "--max-distance", "1e-9"]);
    assert_eq!(code, 4);
}

#[test]
fn short_synthesis_writes_every_artifact_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    write_wav(Path::new(&p("t.wav")), 1024, 3);
    assert_eq!(scatsynth(&["analyze", &p("t.wav"), "-o", &p("t.json")]).0, 0);
    let (code, _) = scatsynth(&["synthesize", &p("t.json"), "-o", &p("s.wav"), "--max-iter", "3", "--seed", "9"]);
    assert_eq!(code, 0);
    for name in ["s.wav", "s.log.jsonl", "s.errors.csv", "s.before.png", "s.after.png", "s.manifest.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let log = std::fs::read_to_string(p("s.log.jsonl")).unwrap();
    assert!(log.lines().count() >= 2);
    assert_eq!(scatsynth(&["replay", &p("s.manifest.json")]).0, 0);
}
