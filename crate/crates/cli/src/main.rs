//! `hexz`: import images onto hexagonal or Cartesian grids, code them with
//! SBHex, BBHex or EZW, decode, and run rate-distortion sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexz_core::coder::{decode_bbhex, decode_ezw_cart, decode_sbhex, encode_bbhex, encode_ezw_cart, encode_sbhex, CodeStream, Scheme};
use hexz_core::metrics::merge_by_threshold;
use hexz_core::formats::{load_luma, save_pgm, HexImage};
use hexz_core::pipeline::{read_sweep_csv, sweep, write_sweep_csv, Source, SweepRow, CART_SIZE, HEX_ROWS, HEX_WIDTH};
use hexz_core::resample::{fit_hex_spacing, SharedGeometry, Synthetic};
use hexz_core::sot::{hex_scan_order, slot_table, SlotBand};
use hexz_core::wavelet::{Db2Bank, FilterBank, DEFAULT_LEVELS};
use hexz_core::{Error, Grid};

#[derive(Parser)]
#[command(name = "hexz", version, about = "Embedded zerotree coding of hexagonally sampled images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resample a PGM/PPM (or `synthetic:chirp|checkerboard`) onto a grid.
    Import(ImportArgs),
    /// Code an image into an embedded `.hxc` stream.
    Encode(EncodeArgs),
    /// Decode a `.hxc` stream, optionally truncated first.
    Decode(DecodeArgs),
    /// Convert a `.hexi` to PGM on a Cartesian grid, or copy a container.
    Export(ExportArgs),
    /// Rate-distortion matrix over images, schemes and rates.
    Sweep(SweepArgs),
    /// Write the spiral-tree scan order or slot table as CSV.
    Dump(DumpArgs),
}

#[derive(Args)]
struct ImportArgs {
    source: String,
    #[arg(long, conflicts_with = "cart", required_unless_present = "cart")]
    hex: bool,
    #[arg(long)]
    cart: bool,
    /// `WIDTHxROWS` for hex, `N` or `WIDTHxHEIGHT` for Cartesian.
    #[arg(long)]
    size: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(long)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long, conflicts_with = "lossless", required_unless_present = "lossless")]
    bpp: Option<f64>,
    /// Code every pass down to the finest threshold.
    #[arg(long)]
    lossless: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Truncate the payload to this rate before decoding.
    #[arg(long)]
    bpp: Option<f64>,
}

#[derive(Args)]
struct ExportArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cartesian output size, `N` or `WIDTHxHEIGHT`.
    #[arg(long)]
    size: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(required = true)]
    images: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "sbhex,bbhex,ezw")]
    schemes: Vec<SchemeArg>,
    #[arg(long, value_delimiter = ',', required = true)]
    bpps: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    what: DumpKind,
    #[arg(long, default_value_t = 512)]
    rows: usize,
    #[arg(long, default_value_t = 512)]
    cols: usize,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpKind {
    Scan,
    Slots,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sbhex,
    Bbhex,
    Ezw,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Sbhex => Scheme::SbHex,
            SchemeArg::Bbhex => Scheme::BbHex,
            SchemeArg::Ezw => Scheme::Ezw,
        }
    }
}

/// A failure with its process exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Format(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Format(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Format(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Format(_) | Error::Unsupported(_) | Error::Io(_) => Failure::Format(msg),
            Error::Dimensions(_) | Error::TooManyLevels { .. } => Failure::Usage(msg),
            _ => Failure::Internal(msg),
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Format(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Import(a) => import(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Export(a) => export(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Dump(a) => dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hexz: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("bad size {s:?}; expected N or AxB"));
    let (a, b) = match s.split_once(['x', 'X']) {
        Some((a, b)) => (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
        None => {
            let n = s.parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

enum Input {
    Hex(HexImage),
    Cart(Grid),
}

fn sniff(path: &Path) -> Result<Input, Failure> {
    let bytes = std::fs::read(path).map_err(io_at(path))?;
    if bytes.starts_with(b"HEXI") {
        Ok(Input::Hex(HexImage::from_bytes(&bytes)?))
    } else {
        Ok(Input::Cart(hexz_core::formats::read_netpbm(&bytes)?.luma()))
    }
}

fn source(arg: &str) -> Result<Source, Failure> {
    match arg.strip_prefix("synthetic:") {
        Some(name) => Synthetic::from_name(name)
            .map(Source::Synthetic)
            .ok_or_else(|| Failure::Usage(format!("unknown synthetic image {name:?}"))),
        None => Ok(Source::Image(load_luma(arg).map_err(|e| match e {
            Error::Io(io) => Failure::Format(format!("{arg}: {io}")),
            e => e.into(),
        })?)),
    }
}

fn geometry(src: &Source, hex: (usize, usize), cart: (usize, usize)) -> SharedGeometry {
    match src {
        Source::Synthetic(_) => SharedGeometry::for_synthetic(hex.0, hex.1, cart.1, cart.0),
        Source::Image(img) => SharedGeometry::for_image(img, hex.0, hex.1, cart.1, cart.0),
    }
}

fn import(a: ImportArgs) -> Outcome {
    let size = a.size.as_deref().map(parse_size).transpose()?;
    if !a.source.starts_with("synthetic:") {
        if let Input::Hex(h) = sniff(Path::new(&a.source))? {
            return if a.hex {
                h.save(&a.out).map_err(Failure::from)
            } else {
                export_hex(&h, size.unwrap_or((CART_SIZE, CART_SIZE)), &a.out)
            };
        }
    }
    let src = source(&a.source)?;
    if a.hex {
        let dims = size.unwrap_or((HEX_WIDTH, HEX_ROWS));
        let g = geometry(&src, dims, (CART_SIZE, CART_SIZE));
        let map = match &src {
            Source::Synthetic(s) => g.hex(s)?,
            Source::Image(img) => g.hex(img)?,
        };
        println!("{} hexagonal samples, h = {}", map.sample_count(), g.h);
        HexImage { map, h: g.h }.save(&a.out)?;
    } else {
        let dims = size.unwrap_or((CART_SIZE, CART_SIZE));
        let g = geometry(&src, (HEX_WIDTH, HEX_ROWS), dims);
        let img = match &src {
            Source::Synthetic(s) => g.cart(s)?,
            Source::Image(img) => g.cart(img)?,
        };
        save_pgm(&img, &a.out)?;
    }
    Ok(())
}

fn encode(a: EncodeArgs) -> Outcome {
    let scheme = Scheme::from(a.scheme);
    let input = sniff(&a.input)?;
    let samples = match (&input, scheme.is_hex()) {
        (Input::Hex(h), true) => h.map.sample_count(),
        (Input::Cart(g), false) => g.rows() * g.cols(),
        (Input::Hex(_), false) => return Err(Failure::Usage("ezw needs a Cartesian (PGM/PPM) input".into())),
        (Input::Cart(_), true) => return Err(Failure::Usage(format!("{scheme} needs a hexagonal (.hexi) input"))),
    };
    let budget = match (a.lossless, a.bpp) {
        (true, _) => 0,
        (false, Some(b)) if b > 0.0 && b.is_finite() => ((b * samples as f64).floor() as usize).max(1),
        (false, b) => return Err(Failure::Usage(format!("--bpp must be positive, got {b:?}"))),
    };
    let bank = FilterBank::from_env()?;
    let enc = match (&input, scheme) {
        (Input::Hex(h), Scheme::SbHex) => encode_sbhex(&h.map, a.levels, budget, &bank)?,
        (Input::Hex(h), Scheme::BbHex) => encode_bbhex(&h.map, a.levels, budget, &bank)?,
        (Input::Cart(g), Scheme::Ezw) => encode_ezw_cart(g, a.levels, budget, &Db2Bank::new())?,
        _ => unreachable!("grid type checked above"),
    };
    std::fs::write(&a.out, enc.stream.to_bytes()?).map_err(io_at(&a.out))?;
    println!(
        "{scheme}: {} payload bits, {:.4} bpp, {} passes",
        enc.stream.bit_len,
        enc.stream.bpp(),
        merge_by_threshold(&enc.stats).len()
    );
    Ok(())
}

fn decode(a: DecodeArgs) -> Outcome {
    let bytes = std::fs::read(&a.input).map_err(io_at(&a.input))?;
    let stream = CodeStream::from_bytes(&bytes)?;
    let budget = match a.bpp {
        None => 0,
        Some(b) if b > 0.0 && b.is_finite() => ((b * stream.sample_count() as f64).floor() as usize).max(1),
        Some(b) => return Err(Failure::Usage(format!("--bpp must be positive, got {b}"))),
    };
    let bank = FilterBank::from_env()?;
    match stream.scheme {
        Scheme::SbHex | Scheme::BbHex => {
            let map = if stream.scheme == Scheme::SbHex {
                decode_sbhex(&stream, budget, &bank)?
            } else {
                decode_bbhex(&stream, budget, &bank)?
            };
            // The stream does not record the spacing; use the one fitting [-1, 1]^2.
            let h = fit_hex_spacing(map.width(), map.rows(), 1.0, 1.0);
            HexImage { map, h }.save(&a.out)?;
        }
        Scheme::Ezw => save_pgm(&decode_ezw_cart(&stream, budget, &Db2Bank::new())?, &a.out)?,
    }
    Ok(())
}

fn export_hex(h: &HexImage, (w, hgt): (usize, usize), out: &Path) -> Outcome {
    let g = SharedGeometry::for_hex(h.map.width(), h.map.rows(), h.h, hgt, w);
    save_pgm(&g.hex_to_cart(&h.map)?, out)?;
    Ok(())
}

fn export(a: ExportArgs) -> Outcome {
    let size = a.size.as_deref().map(parse_size).transpose()?;
    let to_hexi = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("hexi"));
    match sniff(&a.input)? {
        Input::Hex(h) if to_hexi => h.save(&a.out)?,
        Input::Hex(h) => export_hex(&h, size.unwrap_or((CART_SIZE, CART_SIZE)), &a.out)?,
        Input::Cart(_) if to_hexi => return Err(Failure::Usage("use `import --hex` to put a Cartesian image on the hexagonal grid".into())),
        Input::Cart(g) => save_pgm(&g, &a.out)?,
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Outcome {
    if a.bpps.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Failure::Usage("rates must be non-negative (0 means unlimited)".into()));
    }
    let schemes: Vec<Scheme> = a.schemes.iter().map(|&s| s.into()).collect();
    let bank = FilterBank::from_env()?;
    let loaded: Vec<Result<Source, Failure>> = a.images.iter().map(|s| source(s)).collect();
    let ok: Vec<(String, Source)> = a
        .images
        .iter()
        .zip(&loaded)
        .filter_map(|(name, s)| s.as_ref().ok().map(|s| (name.clone(), s.clone())))
        .collect();
    let mut computed = sweep(&ok, &schemes, &a.bpps, a.levels, &bank).into_iter();
    let mut rows: Vec<SweepRow> = vec![];
    for (name, s) in a.images.iter().zip(&loaded) {
        match s {
            Ok(_) => rows.extend(computed.by_ref().take(schemes.len() * a.bpps.len())),
            Err(e) => {
                for scheme in &schemes {
                    for &b in &a.bpps {
                        rows.push(SweepRow {
                            image: name.clone(),
                            scheme: scheme.name().into(),
                            target_bpp: b,
                            bpp: None,
                            psnr: None,
                            ssim: None,
                            error: Some(e.to_string()),
                        });
                    }
                }
            }
        }
    }
    let file = std::fs::File::create(&a.csv).map_err(io_at(&a.csv))?;
    write_sweep_csv(&rows, std::io::BufWriter::new(file))?;
    let written = read_sweep_csv(std::fs::File::open(&a.csv).map_err(io_at(&a.csv))?)?;
    if written != rows {
        return Err(Failure::Internal("sweep CSV does not read back identically".into()));
    }
    for r in &rows {
        match (&r.error, r.bpp, r.psnr, r.ssim) {
            (None, Some(bpp), Some(p), Some(s)) => println!("{:<28} {:<6} {:>6.3} bpp  {:>7.3} dB  ssim {:.4}", r.image, r.scheme, bpp, p, s),
            (err, ..) => println!("{:<28} {:<6} error: {}", r.image, r.scheme, err.as_deref().unwrap_or("?")),
        }
    }
    Ok(())
}

fn dump(a: DumpArgs) -> Outcome {
    let (header, records): (&[&str], Vec<Vec<String>>) = match a.what {
        DumpKind::Scan => (
            &["index", "row", "col"],
            hex_scan_order(a.rows, a.cols)
                .into_iter()
                .enumerate()
                .map(|(i, (r, c))| vec![i.to_string(), r.to_string(), c.to_string()])
                .collect(),
        ),
        DumpKind::Slots => (
            &["band", "level", "quadrant", "row0", "col0", "rows", "cols"],
            slot_table(a.rows, a.cols, a.levels)?
                .into_iter()
                .map(|s| {
                    let (band, level) = match s.band {
                        SlotBand::Coarse => ("C".to_string(), a.levels),
                        SlotBand::Detail { level, band } => (format!("D{band}"), level),
                    };
                    let nums = [level, s.row0, s.col0, s.rows, s.cols].map(|n| n.to_string());
                    vec![band, nums[0].clone(), s.quadrant.name().to_string(), nums[1].clone(), nums[2].clone(), nums[3].clone(), nums[4].clone()]
                })
                .collect(),
        ),
    };
    let csv_err = |e: csv::Error| Failure::Format(format!("{}: {e}", a.csv.display()));
    let mut w = csv::Writer::from_path(&a.csv).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_at(&a.csv))
}
