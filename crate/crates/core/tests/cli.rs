mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use etc_scramble::keys::KeyFile;
use etc_scramble::pixel::{pnm, COLOR_ROUNDTRIP_BOUND};

fn etc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = etc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(i: usize) -> String {
    common::corpus_dir().join(format!("img{i:02}.ppm")).display().to_string()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn csv_field(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == name).unwrap()].to_string()
}

#[test]
fn seeded_keygen_reproduces_the_fixture_key() {
    let dir = tempfile::tempdir().unwrap();
    let k = path(dir.path(), "k.json");
    ok(&["keygen", "--scheme", "grayscale", "--seed", "01", "--out", &k]);
    let kf = KeyFile::read(&k).unwrap();
    // SHA-256 of the seed keys a ChaCha20 stream; values from an independent implementation
    assert_eq!(kf.master_b64, "4fvsv7TCXlUbklamLtS7zf2B7+8nVMB4FpmKk/pwbF0=");
    assert_eq!(kf.nonce_b64, "zMPd36jPK1MJtTyf");
    assert_eq!(kf.block, [8, 8]);
    assert!(PathBuf::from(format!("{k}.manifest.json")).is_file());
}

#[test]
fn unseeded_keys_differ_and_are_owner_read_only() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    ok(&["keygen", "--scheme", "conventional", "--layout", "v", "--out", &a]);
    ok(&["keygen", "--scheme", "conventional", "--layout", "v", "--out", &b]);
    let (ka, kb) = (KeyFile::read(&a).unwrap(), KeyFile::read(&b).unwrap());
    assert_ne!(ka.nonce_b64, kb.nonce_b64);
    assert_eq!(ka.block, [16, 16]);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        assert_eq!(std::fs::metadata(&a).unwrap().permissions().mode() & 0o777, 0o400);
    }
}

#[test]
fn keygen_rejects_misaligned_blocks_unless_asked() {
    let dir = tempfile::tempdir().unwrap();
    let k = path(dir.path(), "k.json");
    let out = etc(&["keygen", "--scheme", "conventional", "--block", "12", "--out", &k]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E-CONFIG]"));
    ok(&["keygen", "--scheme", "conventional", "--block", "12", "--nonstandard", "--out", &k]);
}

#[test]
fn encrypt_decrypt_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let original = pnm::read(fixture(3)).unwrap();
    for scheme in ["conventional", "grayscale"] {
        let k = path(dir.path(), &format!("{scheme}.json"));
        let (e, d) = (path(dir.path(), &format!("{scheme}.enc.pnm")), path(dir.path(), &format!("{scheme}.ppm")));
        ok(&["keygen", "--scheme", scheme, "--seed", "abcd", "--size", "256x192", "--out", &k]);
        ok(&["encrypt", &fixture(3), "--key", &k, "--out", &e]);
        ok(&["decrypt", &e, "--key", &k, "--out", &d]);
        let enc = pnm::read(&e).unwrap();
        let dec = pnm::read(&d).unwrap();
        assert_ne!(enc, original);
        if scheme == "conventional" {
            assert_eq!(dec, original);
        } else {
            assert_eq!(enc.dims(), (768, 192));
            let worst = dec.samples().iter().zip(original.samples()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
            assert!(worst <= COLOR_ROUNDTRIP_BOUND, "{worst}");
        }
    }
}

#[test]
fn mismatched_key_fails_with_a_layout_error() {
    let dir = tempfile::tempdir().unwrap();
    let (kc, kg) = (path(dir.path(), "c.json"), path(dir.path(), "g.json"));
    let e = path(dir.path(), "e.ppm");
    ok(&["keygen", "--scheme", "conventional", "--seed", "01", "--out", &kc]);
    ok(&["keygen", "--scheme", "grayscale", "--seed", "02", "--size", "256x192", "--out", &kg]);
    ok(&["encrypt", &fixture(0), "--key", &kc, "--out", &e]);
    let out = etc(&["decrypt", &e, "--key", &kg, "--out", &path(dir.path(), "d.ppm")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E-LAYOUT]"));

    let ks = path(dir.path(), "small.json");
    ok(&["keygen", "--scheme", "grayscale", "--size", "64x64", "--out", &ks]);
    let out = etc(&["encrypt", &fixture(0), "--key", &ks, "--out", &path(dir.path(), "x.pgm")]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E-DIMENSION]"));
}

#[test]
fn facebook_hurts_the_conventional_scheme_more() {
    let dir = tempfile::tempdir().unwrap();
    let (kc, kg) = (path(dir.path(), "c.json"), path(dir.path(), "g.json"));
    ok(&["keygen", "--scheme", "conventional", "--seed", "01", "--out", &kc]);
    ok(&["keygen", "--scheme", "grayscale", "--seed", "01", "--out", &kg]);
    let (mut conv, mut prop) = (0.0, 0.0);
    for i in 0..3 {
        let run = |key: &str, sub: &str| -> f64 {
            let csv = ok(&[
                "roundtrip",
                &fixture(i),
                "--key",
                key,
                "--qf",
                "95",
                "--subsampling",
                sub,
                "--sns",
                "facebook_hq",
            ]);
            assert_eq!(csv_field(&csv, "received_qf"), "85");
            csv_field(&csv, "psnr_db").parse().unwrap()
        };
        conv += run(&kc, "420");
        prop += run(&kg, "gray");
    }
    assert!(prop > conv, "{prop} vs {conv}");
}

#[test]
fn roundtrip_without_sns_keeps_the_quality() {
    let csv = ok(&["roundtrip", &fixture(1), "--qf", "70", "--subsampling", "420"]);
    assert_eq!(csv_field(&csv, "pipeline"), "plain-420");
    assert_eq!(csv_field(&csv, "received_subsampling"), "420");
    assert_eq!(csv_field(&csv, "received_qf"), "70");
}

#[test]
fn keyspace_reports_block_counts() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["keyspace", "384", "512", "16", "16"])).unwrap();
    assert_eq!(v["blocks"], 768);
    assert!(v["report"]["log2_n_a"].as_f64().unwrap() > 7000.0);
    let v: serde_json::Value = serde_json::from_str(&ok(&["keyspace", "384", "512", "8", "8"])).unwrap();
    assert_eq!(v["packed_blocks"], 9216);
    let v: serde_json::Value = serde_json::from_str(&ok(&["keyspace", "16", "16", "16", "16"])).unwrap();
    assert_eq!(v["report"]["n_a"], "96");
}

#[test]
fn config_file_fills_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"qf": 55, "subsampling": "420"}"#).unwrap();
    let csv = ok(&["roundtrip", &fixture(2), "--config", &cfg]);
    assert_eq!(csv_field(&csv, "qf"), "55");
    assert_eq!(csv_field(&csv, "received_subsampling"), "420");
    let csv = ok(&["roundtrip", &fixture(2), "--config", &cfg, "--qf", "65"]);
    assert_eq!(csv_field(&csv, "qf"), "65");
}

#[test]
fn attack_scores_against_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let (k, e, r) = (path(dir.path(), "k.json"), path(dir.path(), "e.ppm"), path(dir.path(), "r.json"));
    let (p, csv) = (path(dir.path(), "p.ppm"), path(dir.path(), "s.csv"));
    ok(&["keygen", "--scheme", "conventional", "--block", "32", "--seed", "07", "--out", &k]);
    ok(&["encrypt", &fixture(5), "--key", &k, "--out", &e, "--record", &r]);
    ok(&["attack", &e, "--block", "32", "--truth", &r, "--out", &p, "--csv", &csv]);
    let report = std::fs::read_to_string(&csv).unwrap();
    let nc: f64 = csv_field(&report, "Nc").parse().unwrap();
    assert!((0.0..=1.0).contains(&nc));
    assert_eq!(pnm::read(&p).unwrap().dims(), (256, 192));

    let out = ok(&["attack", &fixture(5), "--trials", "2", "--scheme", "grayscale", "--block", "32", "--out", &p]);
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn sns_command_passes_small_files_through() {
    let dir = tempfile::tempdir().unwrap();
    let (j, o) = (path(dir.path(), "a.jpg"), path(dir.path(), "b.jpg"));
    let k = path(dir.path(), "k.json");
    ok(&["keygen", "--scheme", "grayscale", "--seed", "01", "--out", &k]);
    ok(&["encrypt", &fixture(0), "--key", &k, "--out", &j, "--qf", "90"]);
    let report = ok(&["sns", &j, "--sns", "tumblr", "--out", &o]);
    assert_eq!(csv_field(&report, "pass_through"), "true");
    assert_eq!(std::fs::read(&j).unwrap(), std::fs::read(&o).unwrap());
    let report = ok(&["sns", &j, "--sns", "facebook_lq", "--qfd", "75", "--out", &o]);
    assert_eq!(csv_field(&report, "out_qf"), "75");
    assert_eq!(csv_field(&report, "out_subsampling"), "gray");
}

#[test]
fn usage_and_unknown_profiles_report_codes() {
    let out = etc(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E-USAGE]"));
    let out = etc(&["roundtrip", &fixture(0), "--sns", "myspace"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E-CONFIG]"));
}

#[test]
fn profile_directory_overrides_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let profile = r#"{"name": "tumblr", "max_w": null, "max_h": null, "rules": [
        {"inputs": ["444", "420"], "qf_min": 1, "qf_max": 100, "action": {"kind": "recompress", "subsampling": "420", "quality": 60}},
        {"inputs": ["gray"], "qf_min": 1, "qf_max": 100, "action": {"kind": "recompress", "subsampling": "gray", "quality": 60}}]}"#;
    std::fs::write(dir.path().join("tumblr.json"), profile).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_etc"))
        .args(["roundtrip", &fixture(0), "--qf", "90", "--sns", "tumblr"])
        .env("ETC_PROFILE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv_field(&csv, "received_qf"), "60");
    assert_eq!(csv_field(&csv, "received_subsampling"), "420");
}
