//! `etc`: command-line front end for the block-scrambling ciphers and their evaluation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use etc_scramble::analysis::{block_count, format_db, psnr, score, KeySpaceReport, ReportRow};
use etc_scramble::attack::{render_assembly, solve, Compatibility, SolverConfig};
use etc_scramble::cipher::{decrypt, encrypt, unscramble, CipherConfig, Scheme};
use etc_scramble::jpeg::{self, rd_curve, sns_emulate, JpegParams, RdPipeline, SnsProfile, Subsampling, TableChoice};
use etc_scramble::keys::{derive_step_keys, KeyFile, SecretKey, TransformRecord};
use etc_scramble::pixel::{pnm, split_blocks, Image, LayoutKind};

#[derive(Parser, Debug)]
#[command(name = "etc", version, about = "Block-scrambling image encryption for encryption-then-compression")]
struct Cli {
    /// JSON file of default flag values, e.g. {"qf": 85, "sns": "facebook_hq"}.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Create a key file.
    Keygen(KeygenArgs),
    /// Encrypt an image with a key file.
    Encrypt(EncryptArgs),
    /// Decrypt an image with a key file.
    Decrypt(DecryptArgs),
    /// Encrypt, JPEG-compress, optionally pass through an SNS, decode, decrypt, and report PSNR.
    Roundtrip(RoundtripArgs),
    /// Key-space sizes for an image and block size.
    Keyspace(KeyspaceArgs),
    /// Run the jigsaw-puzzle attack on an encrypted image.
    Attack(AttackArgs),
    /// Rate-distortion curve over a corpus.
    Rd(RdArgs),
    /// Pass a JPEG file through an SNS emulator.
    Sns(SnsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Conventional,
    Grayscale,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Conventional => Scheme::Conventional,
            SchemeArg::Grayscale => Scheme::Grayscale,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LayoutArg {
    H,
    V,
}

impl From<LayoutArg> for LayoutKind {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::H => LayoutKind::Horizontal,
            LayoutArg::V => LayoutKind::Vertical,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct KeygenArgs {
    #[arg(long, value_enum, default_value = "grayscale")]
    scheme: SchemeArg,
    /// Block edge in pixels; defaults to 16 (conventional) or 8 (grayscale).
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, value_enum, default_value = "h")]
    layout: LayoutArg,
    /// Original image size WxH recorded in the key; 0x0 accepts any size.
    #[arg(long, default_value = "0x0", value_parser = parse_size)]
    size: [usize; 2],
    /// Derive the key from this hex seed instead of the system entropy source.
    #[arg(long, value_parser = parse_hex)]
    seed: Option<HexSeed>,
    /// Accept block sizes that are not a multiple of the scheme's minimum.
    #[arg(long)]
    nonstandard: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct JpegOut {
    /// JPEG quality when the output path ends in .jpg or .jpeg.
    #[arg(long, default_value_t = 95, value_parser = clap::value_parser!(u8).range(1..=100))]
    qf: u8,
    #[arg(long)]
    subsampling: Option<Subsampling>,
    #[arg(long)]
    table: Option<TableChoice>,
}

#[derive(Args, Debug, Serialize)]
struct EncryptArgs {
    input: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the transform record (attack ground truth) as JSON.
    #[arg(long)]
    record: Option<PathBuf>,
    #[command(flatten)]
    jpeg: JpegOut,
}

#[derive(Args, Debug, Serialize)]
struct DecryptArgs {
    input: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jpeg: JpegOut,
}

#[derive(Args, Debug, Serialize)]
struct RoundtripArgs {
    input: PathBuf,
    /// Key file; without one the image is compressed unencrypted.
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, default_value_t = 85, value_parser = clap::value_parser!(u8).range(1..=100))]
    qf: u8,
    /// Defaults to gray for the grayscale scheme and 444 otherwise.
    #[arg(long)]
    subsampling: Option<Subsampling>,
    /// Quantization table of grayscale streams.
    #[arg(long, default_value = "lum")]
    table: TableChoice,
    /// twitter, facebook_hq, facebook_lq, tumblr, googleplus, flickr, none,
    /// or the name of a policy file in $ETC_PROFILE_DIR.
    #[arg(long, default_value = "none")]
    sns: String,
    /// Facebook re-encoding quality (71..=85).
    #[arg(long)]
    qfd: Option<u8>,
    /// CSV report path; printed to standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the decrypted image.
    #[arg(long)]
    decoded: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct KeyspaceArgs {
    width: usize,
    height: usize,
    block_w: usize,
    block_h: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct AttackArgs {
    /// Encrypted image, or the plain image when --trials is given.
    input: PathBuf,
    #[arg(long, default_value_t = 16)]
    block: usize,
    /// Transform record of the encryption, used for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Encrypt the input this many times with keys derived from --seed and
    /// attack each ciphertext, keeping the best. Requires --scheme.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_enum, default_value = "h")]
    layout: LayoutArg,
    #[arg(long, value_parser = parse_hex, default_value = "00")]
    seed: HexSeed,
    /// Solver settings as JSON; flags below override it.
    #[arg(long)]
    solver: Option<PathBuf>,
    #[arg(long)]
    metric: Option<Compatibility>,
    /// Only permute pieces; no turning, mirroring, complementing or channel reordering.
    #[arg(long)]
    plain_solver: bool,
    /// Time budget per solve, in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Preview of the assembled image.
    #[arg(long)]
    out: PathBuf,
    /// CSV report path; printed to standard output otherwise.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PipelineArg {
    Plain,
    Conventional,
    Proposed,
}

#[derive(Args, Debug, Serialize)]
struct RdArgs {
    /// Image files or directories of .ppm/.pgm/.jpg files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "proposed")]
    pipeline: PipelineArg,
    #[arg(long, value_delimiter = ',', default_value = "75,85,95")]
    qf: Vec<u8>,
    #[arg(long)]
    subsampling: Option<Subsampling>,
    #[arg(long, default_value = "lum")]
    table: TableChoice,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, value_enum, default_value = "h")]
    layout: LayoutArg,
    #[arg(long, value_parser = parse_hex, default_value = "00")]
    seed: HexSeed,
    #[arg(long, default_value = "none")]
    sns: String,
    #[arg(long)]
    qfd: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SnsArgs {
    input: PathBuf,
    #[arg(long)]
    sns: String,
    #[arg(long)]
    qfd: Option<u8>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct HexSeed(Vec<u8>);

impl Serialize for HexSeed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl HexSeed {
    fn key(&self) -> SecretKey {
        SecretKey::from_seed(&self.0)
    }

    fn solver_seed(&self) -> u64 {
        let d = Sha256::digest(&self.0);
        u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

fn parse_hex(s: &str) -> Result<HexSeed, String> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    hex::decode(s).map(HexSeed).map_err(|e| format!("not a hex string: {e}"))
}

fn parse_size(s: &str) -> Result<[usize; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    Ok([w.parse().map_err(|_| "bad width")?, h.parse().map_err(|_| "bad height")?])
}

/// Record of one invocation, written next to its main output.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    parameters: &'a Command,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    tool_version: &'static str,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    timestamp: u64,
}

struct Run {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new() -> Self {
        Self { inputs: vec![], outputs: vec![] }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn write(&mut self, p: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.outputs.push(p.to_path_buf());
        Ok(())
    }

    /// Writes `text` to `path`, or prints it when there is no path.
    fn emit(&mut self, path: Option<&Path>, text: &str) -> anyhow::Result<()> {
        match path {
            Some(p) => self.write(p, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn manifest(self, cmd: &Command, primary: Option<&Path>) -> anyhow::Result<()> {
        let Some(primary) = primary else { return Ok(()) };
        let hashes = |paths: &[PathBuf]| -> anyhow::Result<BTreeMap<String, String>> {
            paths.iter().map(|p| Ok((p.display().to_string(), sha256_file(p)?))).collect()
        };
        let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
            Ok(v) => v.parse().context("SOURCE_DATE_EPOCH")?,
            Err(_) => SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO).as_secs(),
        };
        let m = RunManifest {
            command: cmd.name(),
            parameters: cmd,
            inputs: hashes(&self.inputs)?,
            outputs: hashes(&self.outputs)?,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp,
        };
        let mut path = primary.as_os_str().to_owned();
        path.push(".manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Keygen(_) => "keygen",
            Command::Encrypt(_) => "encrypt",
            Command::Decrypt(_) => "decrypt",
            Command::Roundtrip(_) => "roundtrip",
            Command::Keyspace(_) => "keyspace",
            Command::Attack(_) => "attack",
            Command::Rd(_) => "rd",
            Command::Sns(_) => "sns",
        }
    }
}

fn sha256_file(p: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn extension(p: &Path) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn read_image(p: &Path, run: &mut Run) -> anyhow::Result<Image> {
    run.input(p);
    match extension(p).as_str() {
        "ppm" | "pgm" | "pnm" => Ok(pnm::read(p)?),
        "jpg" | "jpeg" => Ok(jpeg::decode(&std::fs::read(p)?)?.0),
        other => Err(etc_scramble::Error::Format(format!("unsupported image extension {other:?}")).into()),
    }
}

fn write_image(p: &Path, img: &Image, params: &JpegOut, scheme: Option<Scheme>, run: &mut Run) -> anyhow::Result<()> {
    let bytes = match extension(p).as_str() {
        "ppm" | "pgm" | "pnm" => pnm::encode(img),
        "jpg" | "jpeg" => {
            let gray = img.channels() == 1;
            let subsampling = params.subsampling.unwrap_or(if gray { Subsampling::Gray } else { Subsampling::S444 });
            let table = params.table.or((gray || scheme == Some(Scheme::Grayscale)).then_some(TableChoice::Luminance));
            jpeg::encode(img, &JpegParams { quality: params.qf, subsampling, table })?
        }
        other => return Err(etc_scramble::Error::Format(format!("unsupported image extension {other:?}")).into()),
    };
    run.write(p, &bytes)
}

fn profile(name: &str, qfd: Option<u8>) -> anyhow::Result<Option<SnsProfile>> {
    if name == "none" {
        return Ok(None);
    }
    let dir = std::env::var_os("ETC_PROFILE_DIR").map(PathBuf::from);
    let p = match (qfd, name) {
        (Some(q), "facebook_hq") => SnsProfile::facebook(name, 2048, q)?,
        (Some(q), "facebook_lq") => SnsProfile::facebook(name, 960, q)?,
        (Some(_), _) => bail!(etc_scramble::Error::Config(format!("--qfd applies to facebook profiles, not {name}"))),
        (None, _) => SnsProfile::resolve(name, dir.as_deref())?,
    };
    Ok(Some(p))
}

fn keygen(a: &KeygenArgs, run: &mut Run) -> anyhow::Result<()> {
    let scheme = Scheme::from(a.scheme);
    let block = a.block.unwrap_or(scheme.min_block());
    let mut cfg = CipherConfig::new(scheme, block, block, a.layout.into());
    if a.nonstandard {
        cfg = cfg.allow_nonstandard();
    }
    cfg.validate()?;
    let sk = match &a.seed {
        Some(s) => s.key(),
        None => SecretKey::generate()?,
    };
    KeyFile::new(&sk, &cfg, a.size).write(&a.out)?;
    run.outputs.push(a.out.clone());
    Ok(())
}

fn load_key(p: &Path, run: &mut Run) -> anyhow::Result<(KeyFile, CipherConfig, SecretKey)> {
    run.input(p);
    let kf = KeyFile::read(p).with_context(|| format!("key file {}", p.display()))?;
    let cfg = kf.config()?;
    let sk = kf.secret()?;
    Ok((kf, cfg, sk))
}

fn encrypt_cmd(a: &EncryptArgs, run: &mut Run) -> anyhow::Result<()> {
    let (kf, cfg, sk) = load_key(&a.key, run)?;
    let img = read_image(&a.input, run)?;
    if kf.original_size != [0, 0] && kf.original_size != [img.width(), img.height()] {
        bail!(etc_scramble::Error::Dimension(format!(
            "key is for {}x{} images, input is {}x{}",
            kf.original_size[0],
            kf.original_size[1],
            img.width(),
            img.height()
        )));
    }
    let (enc, record) = encrypt(&img, &derive_step_keys(&sk), &cfg)?;
    write_image(&a.out, &enc, &a.jpeg, Some(cfg.scheme), run)?;
    if let Some(p) = &a.record {
        run.write(p, (serde_json::to_string_pretty(&record)? + "\n").as_bytes())?;
    }
    Ok(())
}

fn decrypt_cmd(a: &DecryptArgs, run: &mut Run) -> anyhow::Result<()> {
    let (kf, cfg, sk) = load_key(&a.key, run)?;
    let enc = read_image(&a.input, run)?;
    let channels = match cfg.scheme {
        Scheme::Conventional => 3,
        Scheme::Grayscale => 1,
    };
    if enc.channels() != channels {
        bail!(etc_scramble::Error::Layout(format!(
            "a {} key decrypts {channels}-channel images, input has {}",
            cfg.scheme,
            enc.channels()
        )));
    }
    if kf.original_size != [0, 0] {
        let [w, h] = kf.original_size;
        let expected = match cfg.scheme {
            Scheme::Conventional => (w, h, 3),
            Scheme::Grayscale => {
                let (pw, ph) = cfg.layout.packed_dims(w, h);
                (pw, ph, 1)
            }
        };
        if (enc.width(), enc.height(), enc.channels()) != expected {
            bail!(etc_scramble::Error::Layout(format!(
                "key expects a {}x{}x{} ciphertext, input is {}x{}x{}",
                expected.0,
                expected.1,
                expected.2,
                enc.width(),
                enc.height(),
                enc.channels()
            )));
        }
    }
    let dec = decrypt(&enc, &derive_step_keys(&sk), &cfg)?;
    write_image(&a.out, &dec, &a.jpeg, None, run)
}

fn pipeline(
    cipher: Option<CipherConfig>,
    subsampling: Option<Subsampling>,
    table: TableChoice,
) -> anyhow::Result<RdPipeline> {
    Ok(match cipher {
        None => RdPipeline::plain(subsampling.unwrap_or(Subsampling::S444)),
        Some(c) if c.scheme == Scheme::Grayscale => {
            if subsampling.is_some_and(|s| s != Subsampling::Gray) {
                bail!(etc_scramble::Error::Config("the grayscale scheme is compressed as a gray image".into()));
            }
            RdPipeline::proposed(c, table)
        }
        Some(c) => RdPipeline::conventional(c, subsampling.unwrap_or(Subsampling::S444)),
    })
}

fn roundtrip_cmd(a: &RoundtripArgs, run: &mut Run) -> anyhow::Result<()> {
    let (cipher, sk) = match &a.key {
        Some(k) => {
            let (_, cfg, sk) = load_key(k, run)?;
            (Some(cfg), sk)
        }
        None => (None, SecretKey::new([0; 32], [0; 12])),
    };
    let img = read_image(&a.input, run)?;
    let p = pipeline(cipher, a.subsampling, a.table)?;
    let sns = profile(&a.sns, a.qfd)?;
    let r = jpeg::roundtrip(&img, &p, a.qf, &sk, sns.as_ref())?;
    let csv = format!(
        "image,pipeline,qf,sns,bytes,bpp,psnr_db,received_subsampling,received_qf\n{},{},{},{},{},{:.4},{},{},{}\n",
        a.input.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default(),
        p.label(),
        a.qf,
        a.sns,
        r.bytes,
        r.bpp,
        format_db(r.psnr),
        r.detected.subsampling,
        r.detected.quality
    );
    if let Some(d) = &a.decoded {
        let out = JpegOut { qf: 95, subsampling: None, table: None };
        write_image(d, &r.decoded, &out, None, run)?;
    }
    run.emit(a.out.as_deref(), &csv)
}

#[derive(Serialize)]
struct KeyspaceOut {
    width: usize,
    height: usize,
    block: [usize; 2],
    /// Blocks of the color image.
    blocks: usize,
    /// Blocks of the packed single-channel image.
    packed_blocks: usize,
    report: KeySpaceReport,
}

fn keyspace_cmd(a: &KeyspaceArgs, run: &mut Run) -> anyhow::Result<()> {
    if a.block_w == 0 || a.block_h == 0 {
        bail!(etc_scramble::Error::Config("block size must be at least 1x1".into()));
    }
    let n = block_count(a.width, a.height, a.block_w, a.block_h);
    let out = KeyspaceOut {
        width: a.width,
        height: a.height,
        block: [a.block_w, a.block_h],
        blocks: n,
        packed_blocks: block_count(3 * a.width, a.height, a.block_w, a.block_h),
        report: KeySpaceReport::new(n as u64),
    };
    run.emit(a.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn solver_config(a: &AttackArgs, run: &mut Run) -> anyhow::Result<SolverConfig> {
    let mut cfg = match &a.solver {
        Some(p) => {
            run.input(p);
            serde_json::from_str(&std::fs::read_to_string(p)?).map_err(etc_scramble::Error::from)?
        }
        None => SolverConfig { seed: a.seed.solver_seed(), ..SolverConfig::default() },
    };
    if let Some(m) = a.metric {
        cfg.compatibility = m;
    }
    if a.plain_solver {
        cfg.variant_search = false;
        cfg.channel_search = false;
    }
    if let Some(t) = a.time_budget {
        cfg.time_budget = Duration::try_from_secs_f64(t)
            .map_err(|e| anyhow!(etc_scramble::Error::Config(format!("time budget: {e}"))))?;
    }
    Ok(cfg)
}

fn attack_cmd(a: &AttackArgs, run: &mut Run) -> anyhow::Result<()> {
    let solver = solver_config(a, run)?;
    let img = read_image(&a.input, run)?;
    let image_id = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    // (ciphertext, truth, label) per trial
    let cases: Vec<(Image, Option<TransformRecord>, String)> = match a.trials {
        Some(trials) => {
            let Some(scheme) = a.scheme else {
                bail!(etc_scramble::Error::Config("--trials needs --scheme".into()));
            };
            if trials == 0 {
                bail!(etc_scramble::Error::Config("at least one trial is needed".into()));
            }
            if a.truth.is_some() {
                bail!(etc_scramble::Error::Config("--truth and --trials are exclusive".into()));
            }
            let cfg = CipherConfig::new(scheme.into(), a.block, a.block, a.layout.into()).allow_nonstandard();
            let key = a.seed.key();
            (0..trials)
                .map(|t| {
                    let (enc, rec) = encrypt(&img, &derive_step_keys(&key.for_image(t as u64)), &cfg)?;
                    Ok((enc, Some(rec), cfg.scheme.to_string()))
                })
                .collect::<anyhow::Result<_>>()?
        }
        None => {
            let truth = match &a.truth {
                Some(p) => {
                    run.input(p);
                    let rec: TransformRecord =
                        serde_json::from_str(&std::fs::read_to_string(p)?).map_err(etc_scramble::Error::from)?;
                    rec.validate()?;
                    Some(rec)
                }
                None => None,
            };
            let label = if img.channels() == 1 { "grayscale" } else { "conventional" };
            vec![(img, truth, label.to_string())]
        }
    };
    let mut rows = vec![];
    let mut best: Option<(f64, Image)> = None;
    for (enc, truth, label) in &cases {
        let grid = split_blocks(enc, a.block, a.block)?;
        let asm = solve(&grid.blocks, grid.cols, grid.rows, &solver)?;
        let preview = render_assembly(&grid.blocks, &asm)?;
        let (scores, db) = match truth {
            Some(t) => {
                if (t.cols, t.rows) != (grid.cols, grid.rows) {
                    bail!(etc_scramble::Error::Grid(format!(
                        "truth is for a {}x{} grid, image has {}x{}",
                        t.cols, t.rows, grid.cols, grid.rows
                    )));
                }
                let original = unscramble(&grid, t)?;
                (Some(score(&asm, t)?), Some(format_db(psnr(&original, &preview)?)))
            }
            None => (None, None),
        };
        let rank = scores.map_or(0.0, |s| s.sum());
        if best.as_ref().is_none_or(|(b, _)| rank > *b) {
            best = Some((rank, preview));
        }
        rows.push(ReportRow {
            image_id: image_id.clone(),
            scheme: label.clone(),
            block: a.block,
            dc: scores.map(|s| s.dc),
            nc: scores.map(|s| s.nc),
            lc: scores.map(|s| s.lc),
            psnr_db: db,
        });
    }
    let (_, preview) = best.expect("at least one case");
    write_image(&a.out, &preview, &JpegOut { qf: 95, subsampling: None, table: None }, None, run)?;
    let mut csv = String::from(ReportRow::CSV_HEADER) + "\n";
    for r in &rows {
        csv += &(r.to_csv() + "\n");
    }
    run.emit(a.csv.as_deref(), &csv)
}

fn collect_images(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = vec![];
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> =
                std::fs::read_dir(p)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            files.retain(|f| matches!(extension(f).as_str(), "ppm" | "pgm" | "pnm" | "jpg" | "jpeg"));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn rd_cmd(a: &RdArgs, run: &mut Run) -> anyhow::Result<()> {
    let files = collect_images(&a.inputs)?;
    let corpus = files.iter().map(|f| read_image(f, run)).collect::<anyhow::Result<Vec<_>>>()?;
    let cipher = match a.pipeline {
        PipelineArg::Plain => None,
        PipelineArg::Conventional => Some(CipherConfig::conventional()),
        PipelineArg::Proposed => Some(CipherConfig::grayscale()),
    }
    .map(|c| {
        let c = c.with_layout(a.layout.into());
        a.block.map_or(c, |b| c.with_block(b))
    });
    if let Some(c) = &cipher {
        c.validate()?;
    }
    if let Some(q) = a.qf.iter().find(|q| !(1..=100).contains(*q)) {
        bail!(etc_scramble::Error::Config(format!("quality {q} outside 1..=100")));
    }
    let p = pipeline(cipher, a.subsampling, a.table)?;
    let sns = profile(&a.sns, a.qfd)?;
    let points = rd_curve(&corpus, &p, &a.qf, &a.seed.key(), sns.as_ref())?;
    let mut csv = String::from("pipeline,") + jpeg::RdPoint::CSV_HEADER + "\n";
    for pt in points {
        csv += &format!("{},{}\n", p.label(), pt.to_csv());
    }
    run.emit(a.out.as_deref(), &csv)
}

fn sns_cmd(a: &SnsArgs, run: &mut Run) -> anyhow::Result<()> {
    run.input(&a.input);
    let bytes = std::fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let Some(profile) = profile(&a.sns, a.qfd)? else {
        return run.write(&a.out, &bytes);
    };
    let out = sns_emulate(&bytes, &profile)?;
    let (_, before, _) = jpeg::detect(&bytes)?;
    let (_, after, _) = jpeg::detect(&out)?;
    run.write(&a.out, &out)?;
    println!("profile,in_subsampling,in_qf,out_subsampling,out_qf,pass_through");
    println!(
        "{},{},{},{},{},{}",
        profile.name,
        before.subsampling,
        before.quality,
        after.subsampling,
        after.quality,
        out == bytes
    );
    Ok(())
}

fn execute(cmd: &Command) -> anyhow::Result<()> {
    let mut run = Run::new();
    let primary: Option<&Path> = match cmd {
        Command::Keygen(a) => {
            keygen(a, &mut run)?;
            Some(&a.out)
        }
        Command::Encrypt(a) => {
            encrypt_cmd(a, &mut run)?;
            Some(&a.out)
        }
        Command::Decrypt(a) => {
            decrypt_cmd(a, &mut run)?;
            Some(&a.out)
        }
        Command::Roundtrip(a) => {
            roundtrip_cmd(a, &mut run)?;
            a.out.as_deref().or(a.decoded.as_deref())
        }
        Command::Keyspace(a) => {
            keyspace_cmd(a, &mut run)?;
            a.out.as_deref()
        }
        Command::Attack(a) => {
            attack_cmd(a, &mut run)?;
            Some(&a.out)
        }
        Command::Rd(a) => {
            rd_cmd(a, &mut run)?;
            a.out.as_deref()
        }
        Command::Sns(a) => {
            sns_cmd(a, &mut run)?;
            Some(&a.out)
        }
    };
    run.manifest(cmd, primary)
}

/// Turns a config file object into flags placed before the user's own, so
/// that the user's win.
fn config_args(path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("config {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(etc_scramble::Error::from)?;
    let serde_json::Value::Object(map) = value else {
        bail!(etc_scramble::Error::Config("config file must hold a JSON object".into()));
    };
    let mut out = vec![];
    for (k, v) in map {
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => out.extend([flag.into(), s.into()]),
            serde_json::Value::Array(items) => {
                let joined: Vec<String> =
                    items.iter().map(|i| i.as_str().map_or(i.to_string(), str::to_string)).collect();
                out.extend([flag.into(), joined.join(",").into()]);
            }
            other => out.extend([flag.into(), other.to_string().into()]),
        }
    }
    Ok(out)
}

fn parse_cli() -> anyhow::Result<Cli> {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let first = Cli::command().args_override_self(true).try_get_matches_from(&argv)?;
    let cli = Cli::from_arg_matches(&first)?;
    let Some(path) = &cli.config else { return Ok(cli) };
    let Some((sub, _)) = first.subcommand() else { return Ok(cli) };
    let at = argv.iter().position(|a| a == sub).expect("subcommand is in argv") + 1;
    let mut merged = argv[..at].to_vec();
    merged.extend(config_args(path)?);
    merged.extend_from_slice(&argv[at..]);
    let m = Cli::command().args_override_self(true).try_get_matches_from(&merged)?;
    Ok(Cli::from_arg_matches(&m)?)
}

fn error_code(e: &anyhow::Error) -> &'static str {
    if let Some(e) = e.downcast_ref::<etc_scramble::Error>() {
        return e.code();
    }
    if e.downcast_ref::<clap::Error>().is_some() {
        return "E-USAGE";
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "E-IO";
    }
    e.chain().find_map(|c| c.downcast_ref::<etc_scramble::Error>().map(|e| e.code())).unwrap_or("E-OTHER")
}

fn main() -> ExitCode {
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<clap::Error>() {
                if !ce.use_stderr() {
                    let _ = ce.print();
                    return ExitCode::SUCCESS;
                }
                eprint!("error[E-USAGE]: {}", ce.render());
                return ExitCode::from(2);
            }
            eprintln!("error[{}]: {e:#}", error_code(&e));
            return ExitCode::FAILURE;
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e:#}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}
