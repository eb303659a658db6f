mod common;

use etc_scramble::jpeg::{detect, encode, sns_emulate, JpegParams, SnsProfile, Subsampling, TableChoice};
use etc_scramble::Error;

fn upload(sub: Subsampling, qf: u8, w: usize, h: usize) -> Vec<u8> {
    let mut r = common::rng(40);
    let channels = if sub == Subsampling::Gray { 1 } else { 3 };
    let img = common::random_image(&mut r, w, h, channels);
    let params = match sub {
        Subsampling::Gray => JpegParams::gray(qf, TableChoice::Luminance),
        s => JpegParams::color(qf, s),
    };
    encode(&img, &params).unwrap()
}

enum Expect {
    Pass,
    Recompress(Subsampling, u8),
}

fn check(profile: &SnsProfile, sub: Subsampling, qfs: &[u8], expect: &Expect) {
    for &qf in qfs {
        let up = upload(sub, qf, 48, 32);
        let down = sns_emulate(&up, profile).unwrap();
        match expect {
            Expect::Pass => assert_eq!(down, up, "{} {sub} {qf}", profile.name),
            Expect::Recompress(s, q) => {
                let (_, got, est) = detect(&down).unwrap();
                assert_eq!((got.subsampling, got.quality), (*s, *q), "{} {sub} {qf}", profile.name);
                assert!(est.exact);
                if *s == Subsampling::Gray {
                    assert_eq!(est.table, TableChoice::Luminance);
                }
            }
        }
    }
}

const LOW: [u8; 5] = [1, 30, 50, 75, 84];
const HIGH: [u8; 5] = [85, 86, 90, 95, 100];
const ANY: [u8; 6] = [1, 40, 71, 84, 85, 100];

#[test]
fn twitter_rows() {
    let p = SnsProfile::builtin("twitter").unwrap();
    for sub in [Subsampling::S444, Subsampling::S420, Subsampling::Gray] {
        check(&p, sub, &LOW, &Expect::Pass);
        let out = if sub == Subsampling::Gray { Subsampling::Gray } else { Subsampling::S420 };
        check(&p, sub, &HIGH, &Expect::Recompress(out, 85));
    }
}

#[test]
fn facebook_rows() {
    for name in ["facebook_hq", "facebook_lq"] {
        let p = SnsProfile::builtin(name).unwrap();
        check(&p, Subsampling::S444, &ANY, &Expect::Recompress(Subsampling::S420, 85));
        check(&p, Subsampling::S420, &ANY, &Expect::Recompress(Subsampling::S420, 85));
        check(&p, Subsampling::Gray, &ANY, &Expect::Recompress(Subsampling::Gray, 85));
    }
    for qfd in [71, 78, 85] {
        let p = SnsProfile::facebook("facebook_hq", 2048, qfd).unwrap();
        check(&p, Subsampling::Gray, &[90], &Expect::Recompress(Subsampling::Gray, qfd));
        check(&p, Subsampling::S444, &[60], &Expect::Recompress(Subsampling::S420, qfd));
    }
    assert!(matches!(SnsProfile::facebook("facebook_hq", 2048, 70), Err(Error::Config(_))));
    assert!(matches!(SnsProfile::facebook("facebook_hq", 2048, 86), Err(Error::Config(_))));
}

#[test]
fn pass_through_rows() {
    for name in ["tumblr", "googleplus", "flickr"] {
        let p = SnsProfile::builtin(name).unwrap();
        for sub in [Subsampling::S444, Subsampling::S420, Subsampling::Gray] {
            check(&p, sub, &ANY, &Expect::Pass);
        }
    }
}

#[test]
fn resolution_limits() {
    for (name, max) in [("twitter", 4096), ("facebook_hq", 2048), ("facebook_lq", 960), ("tumblr", 1280)] {
        let p = SnsProfile::builtin(name).unwrap();
        let fits = upload(Subsampling::Gray, 90, max, 8);
        assert!(sns_emulate(&fits, &p).is_ok(), "{name}");
        let wide = upload(Subsampling::Gray, 90, max + 8, 8);
        match sns_emulate(&wide, &p) {
            Err(e @ Error::Resolution { .. }) => assert!(e.to_string().contains(&format!("{max}x{max}"))),
            other => panic!("{name}: {other:?}"),
        }
    }
    let flickr = SnsProfile::builtin("flickr").unwrap();
    assert!(sns_emulate(&upload(Subsampling::Gray, 90, 5000, 8), &flickr).is_ok());
}

#[test]
fn builtins_validate_and_survive_json() {
    for name in SnsProfile::BUILTIN {
        let p = SnsProfile::builtin(name).unwrap();
        p.validate().unwrap();
        let back: SnsProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}

#[test]
fn gray_recompression_keeps_the_proposed_scheme_decodable() {
    let img = &common::corpus()[4];
    let up = encode(&img.channel(0), &JpegParams::gray(95, TableChoice::Luminance)).unwrap();
    let down = sns_emulate(&up, &SnsProfile::builtin("twitter").unwrap()).unwrap();
    let (header, params, _) = detect(&down).unwrap();
    assert_eq!((header.width, header.height), (img.width(), img.height()));
    assert_eq!(params.quality, 85);
}
