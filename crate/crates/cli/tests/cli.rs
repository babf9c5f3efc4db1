use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hexz_core::coder::CodeStream;
use hexz_core::formats::{read_netpbm, HexImage};
use hexz_core::metrics::psnr;
use hexz_core::pipeline::read_sweep_csv;
use hexz_core::wavelet::{dhwt_forward, FilterBank};
use hexz_core::IndexMap;

fn hexz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexz")).args(args).output().expect("spawn hexz")
}

fn ok(args: &[&str]) -> String {
    let out = hexz(args);
    assert!(out.status.success(), "hexz {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    hexz(args).status.code().expect("exit code")
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

fn write_pgm(path: &Path, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) {
    let mut b = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            b.push(f(r, c));
        }
    }
    std::fs::write(path, b).unwrap();
}

/// A small hexagonal image with integer samples.
fn integer_hexi(d: &Dir, name: &str) -> String {
    ok(&["import", "synthetic:chirp", "--hex", "--size", "64x128", "--out", &d.s("raw.hexi")]);
    let mut h = HexImage::load(d.path("raw.hexi")).unwrap();
    h.map = IndexMap::from_fn(h.map.width(), h.map.rows(), |r, c| h.map.get(r, c).round()).unwrap();
    h.save(d.path(name)).unwrap();
    d.s(name)
}

#[test]
fn pgm_imports_to_the_standard_hex_grid() {
    let d = Dir::new();
    write_pgm(&d.path("in.pgm"), 300, 280, |r, c| ((r * 3 + c) % 256) as u8);
    ok(&["import", &d.s("in.pgm"), "--hex", "--out", &d.s("out.hexi")]);
    let h = HexImage::load(d.path("out.hexi")).unwrap();
    assert_eq!((h.map.width(), h.map.rows()), (256, 512));
    assert_eq!(h.map.sample_count(), 131072);
    assert_eq!(std::fs::metadata(d.path("out.hexi")).unwrap().len(), 18 + 8 * 131072);
}

#[test]
fn white_ppm_imports_as_studio_white() {
    let d = Dir::new();
    let mut b = b"P6\n40 40\n255\n".to_vec();
    b.extend(std::iter::repeat_n(255u8, 40 * 40 * 3));
    std::fs::write(d.path("white.ppm"), b).unwrap();
    ok(&["import", &d.s("white.ppm"), "--hex", "--size", "16x32", "--out", &d.s("w.hexi")]);
    let h = HexImage::load(d.path("w.hexi")).unwrap();
    assert!(h.map.valid_samples().all(|v| (v - 235.0).abs() < 1e-9));
    ok(&["import", &d.s("white.ppm"), "--cart", "--size", "20", "--out", &d.s("w.pgm")]);
    let g = read_netpbm(&std::fs::read(d.path("w.pgm")).unwrap()).unwrap().luma();
    assert_eq!(g.dims(), (20, 20));
    assert!(g.as_slice().iter().all(|&v| v == 235.0));
}

#[test]
fn hex_native_import_and_export_are_byte_identical() {
    let d = Dir::new();
    ok(&["import", "synthetic:checkerboard", "--hex", "--size", "32x64", "--out", &d.s("a.hexi")]);
    ok(&["import", &d.s("a.hexi"), "--hex", "--out", &d.s("b.hexi")]);
    ok(&["export", &d.s("b.hexi"), "--out", &d.s("c.hexi")]);
    let a = std::fs::read(d.path("a.hexi")).unwrap();
    assert_eq!(a, std::fs::read(d.path("b.hexi")).unwrap());
    assert_eq!(a, std::fs::read(d.path("c.hexi")).unwrap());
    ok(&["export", &d.s("a.hexi"), "--size", "45", "--out", &d.s("a.pgm")]);
    let g = read_netpbm(&std::fs::read(d.path("a.pgm")).unwrap()).unwrap().luma();
    assert_eq!(g.dims(), (45, 45));
}

#[test]
fn encode_respects_the_rate_and_defaults_to_six_levels() {
    let d = Dir::new();
    ok(&["import", "synthetic:chirp", "--hex", "--out", &d.s("c.hexi")]);
    for scheme in ["sbhex", "bbhex"] {
        ok(&["encode", &d.s("c.hexi"), "--scheme", scheme, "--bpp", "1.0", "--out", &d.s("c.hxc")]);
        let s = CodeStream::from_bytes(&std::fs::read(d.path("c.hxc")).unwrap()).unwrap();
        assert!(s.bit_len <= 131072);
        assert!(s.bit_len > 131000);
        assert_eq!(s.levels, 6);
    }
}

#[test]
fn lossless_round_trip_bounds_coefficient_error() {
    let d = Dir::new();
    let src = integer_hexi(&d, "int.hexi");
    let original = HexImage::load(&src).unwrap().map;
    let bank = FilterBank::builtin();
    let want = dhwt_forward(&original, 4, &bank).unwrap();
    for scheme in ["sbhex", "bbhex"] {
        ok(&["encode", &src, "--scheme", scheme, "--levels", "4", "--lossless", "--out", &d.s("l.hxc")]);
        ok(&["decode", &d.s("l.hxc"), "--out", &d.s("l.hexi")]);
        let back = HexImage::load(d.path("l.hexi")).unwrap().map;
        let got = dhwt_forward(&back, 4, &bank).unwrap();
        let err = want
            .bands()
            .iter()
            .zip(got.bands())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        assert!(err <= 0.5 + 1e-9, "{scheme}: coefficient error {err}");
        let p = psnr(original.grid(), back.grid()).unwrap();
        assert!(p >= 60.0, "{scheme}: {p} dB");
    }
    let img = d.path("int.pgm");
    write_pgm(&img, 64, 64, |r, c| ((r * c) % 256) as u8);
    ok(&["encode", img.to_str().unwrap(), "--scheme", "ezw", "--levels", "4", "--lossless", "--out", &d.s("e.hxc")]);
    ok(&["decode", &d.s("e.hxc"), "--out", &d.s("e.pgm")]);
    let load = |p: &Path| read_netpbm(&std::fs::read(p).unwrap()).unwrap().luma();
    let p = psnr(&load(&img), &load(&d.path("e.pgm"))).unwrap();
    assert!(p >= 60.0, "ezw: {p} dB");
}

#[test]
fn truncated_decode_matches_a_lower_rate_encode() {
    let d = Dir::new();
    let src = integer_hexi(&d, "int.hexi");
    ok(&["encode", &src, "--scheme", "sbhex", "--lossless", "--out", &d.s("full.hxc")]);
    for bpp in ["0.1", "0.37"] {
        ok(&["encode", &src, "--scheme", "sbhex", "--bpp", bpp, "--out", &d.s("part.hxc")]);
        ok(&["decode", &d.s("full.hxc"), "--bpp", bpp, "--out", &d.s("a.hexi")]);
        ok(&["decode", &d.s("part.hxc"), "--out", &d.s("b.hexi")]);
        assert_eq!(std::fs::read(d.path("a.hexi")).unwrap(), std::fs::read(d.path("b.hexi")).unwrap());
    }
}

#[test]
fn exit_codes() {
    let d = Dir::new();
    assert_eq!(code(&["encode"]), 2);
    assert_eq!(code(&["import", "synthetic:nope", "--hex", "--out", &d.s("x")]), 2);
    assert_eq!(code(&["import", "synthetic:chirp", "--hex", "--size", "0x4", "--out", &d.s("x")]), 2);
    write_pgm(&d.path("g.pgm"), 8, 8, |_, _| 0);
    assert_eq!(code(&["encode", &d.s("g.pgm"), "--scheme", "bbhex", "--bpp", "1", "--out", &d.s("x")]), 2);

    ok(&["import", "synthetic:chirp", "--hex", "--size", "16x32", "--out", &d.s("c.hexi")]);
    ok(&["encode", &d.s("c.hexi"), "--scheme", "sbhex", "--levels", "2", "--bpp", "1", "--out", &d.s("c.hxc")]);
    let mut bytes = std::fs::read(d.path("c.hxc")).unwrap();
    bytes[0] = b'Z';
    std::fs::write(d.path("bad.hxc"), &bytes).unwrap();
    assert_eq!(code(&["decode", &d.s("bad.hxc"), "--out", &d.s("x")]), 3);
    assert_eq!(code(&["decode", &d.s("missing.hxc"), "--out", &d.s("x")]), 3);
    std::fs::write(d.path("junk.pgm"), b"P9 what").unwrap();
    assert_eq!(code(&["import", &d.s("junk.pgm"), "--hex", "--out", &d.s("x")]), 3);
}

#[test]
fn sweep_writes_every_row_and_records_failures() {
    let d = Dir::new();
    write_pgm(&d.path("ramp.pgm"), 120, 100, |r, c| (r + c) as u8);
    let csv = d.s("rd.csv");
    let ramp = d.s("ramp.pgm");
    let missing = d.s("missing.pgm");
    let out = ok(&[
        "sweep", "synthetic:chirp", &ramp, &missing, "--schemes", "sbhex,ezw", "--bpps", "0.1,0.25", "--levels", "5", "--csv", &csv,
    ]);
    assert_eq!(out.lines().count(), 12);
    let rows = read_sweep_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(rows[..8].iter().all(|r| r.error.is_none() && r.psnr.unwrap() > 10.0));
    assert!(rows[8..].iter().all(|r| r.image == missing && r.error.is_some() && r.psnr.is_none()));
    assert!(rows.iter().all(|r| r.bpp.is_none_or(|b| b <= r.target_bpp)));
}

#[test]
fn dump_lists_scan_and_slots() {
    let d = Dir::new();
    ok(&["dump", "scan", "--rows", "8", "--cols", "6", "--csv", &d.s("scan.csv")]);
    let text = std::fs::read_to_string(d.path("scan.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 48);
    assert_eq!(text.lines().nth(1).unwrap(), "0,3,2");
    ok(&["dump", "slots", "--rows", "16", "--cols", "16", "--levels", "2", "--csv", &d.s("slots.csv")]);
    let text = std::fs::read_to_string(d.path("slots.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 + 2 * 12);
}
