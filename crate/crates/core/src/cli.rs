//! Command-line driver.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::charspec::{bounds, verify_trace_criterion, Character, SpectrumEngine, SpectrumResult};
use crate::error::{Error, Result};
use crate::fields::{construct_theta, prime_power, Elem, FieldSpec, ThetaSetup, TowerCtx};
use crate::geometry::{
    build_unital, find_thetas, read_design, verify_design, verify_ovals, verify_plane, verify_transitivity,
    verify_unital_in_plane, write_design, Instance, PairCheck, PlaneCheck, UnitalDesign,
};
use crate::gf2rank::{rank2_of_unital, verify_dual_ovals};
use crate::kloosterman::{kloosterman_atlas, thm_membership_criterion, write_atlas_csv, KloostermanCtx};
use crate::planar::{register_do_table, Family, PlanarFn};

#[derive(Parser, Debug)]
#[command(name = "unital", version, about = "Unitals in shift planes and their 2-ranks")]
pub struct Cli {
    /// `key=value` defaults, overridden by flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads [env: UNITAL_THREADS].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Design cache root [env: UNITAL_CACHE_DIR].
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write wall_ms as null so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check planarity, plane axioms, the unital and its symmetries.
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Sample the plane axioms instead of checking them exhaustively.
        #[arg(long)]
        sample: bool,
    },
    /// List every θ satisfying the fiber condition.
    FindTheta {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Build U_θ and write its design file.
    Build {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// 2-rank by the GF(2) engine, the spectrum engine, or both.
    Rank {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Character spectrum with per-character witnesses.
    Spectrum {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Also write every S(β).
        #[arg(long)]
        witness_all: bool,
    },
    /// Kloosterman atlas over GF(p^m).
    Kloosterman {
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Ranks and bounds for f(x) = x² over a list of q.
    Report {
        /// Comma-separated prime powers.
        #[arg(long, value_delimiter = ',')]
        q: Vec<u32>,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct InstanceArgs {
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    /// square | cm:K | pow:D | user:PATH (Dembowski–Ostrom table).
    #[arg(long)]
    pub f: Option<String>,
    /// auto | element index of θ in GF(q²).
    #[arg(long)]
    pub theta: Option<String>,
    /// GF(q) modulus, comma-separated coefficients, constant term first.
    #[arg(long)]
    pub modulus: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct EngineArgs {
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// Run the GF(2) engine even where the default is spectrum only.
    #[arg(long)]
    pub full: bool,
    #[arg(long, value_enum)]
    pub early_stop: Option<Toggle>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Gf2,
    Spectrum,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FSelector {
    Square,
    CoulterMatthews(u32),
    Power(u64),
    User(PathBuf),
}

impl FSelector {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown function selector {s:?}"));
        if s == "square" {
            return Ok(FSelector::Square);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "cm" => Ok(FSelector::CoulterMatthews(arg.parse().map_err(|_| bad())?)),
            "pow" => Ok(FSelector::Power(arg.parse().map_err(|_| bad())?)),
            "user" => Ok(FSelector::User(arg.into())),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaSel {
    Auto,
    Index(u32),
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u32,
    pub m: u32,
    pub modulus: Option<Vec<u32>>,
    pub f: FSelector,
    pub theta: ThetaSel,
    pub engine: Engine,
    pub early_stop: bool,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub threads: Option<usize>,
    pub timing: bool,
}

/// `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: "expected key=value".into(),
        })?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

/// Flag values, then config file, then environment.
pub struct Layers {
    config: HashMap<String, String>,
    env: HashMap<String, String>,
}

impl Layers {
    pub fn new(config: HashMap<String, String>, env: HashMap<String, String>) -> Self {
        Layers { config, env }
    }

    pub fn from_process(config_path: Option<&Path>) -> Result<Self> {
        let config = match config_path {
            Some(p) => parse_config(&fs::read_to_string(p)?)?,
            None => HashMap::new(),
        };
        let env = ["UNITAL_CACHE_DIR", "UNITAL_THREADS"]
            .into_iter()
            .filter_map(|k| std::env::var(k).ok().map(|v| (k.to_string(), v)))
            .collect();
        Ok(Layers { config, env })
    }

    fn get(&self, flag: Option<String>, key: &str, env: Option<&str>) -> Option<String> {
        flag.or_else(|| self.config.get(key).cloned())
            .or_else(|| env.and_then(|e| self.env.get(e).cloned()))
    }

    fn parse<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, env: Option<&str>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(None, key, env)
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad value {s:?} for {key}")))
            })
            .transpose()
    }

    pub fn resolve(&self, cli: &Cli, inst: &InstanceArgs, engine: &EngineArgs) -> Result<RunConfig> {
        let p = self
            .parse(inst.p, "p", None)?
            .ok_or_else(|| Error::InvalidArgument("--p is required".into()))?;
        let m = self.parse(inst.m, "m", None)?.unwrap_or(1);
        let modulus = self
            .get(inst.modulus.clone(), "modulus", None)
            .map(|s| {
                s.split(',')
                    .map(|c| c.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidArgument(format!("bad modulus {s:?}")))
            })
            .transpose()?;
        let f = FSelector::parse(&self.get(inst.f.clone(), "f", None).unwrap_or_else(|| "square".into()))?;
        let theta = match self.get(inst.theta.clone(), "theta", None).as_deref() {
            None | Some("auto") => ThetaSel::Auto,
            Some(s) => ThetaSel::Index(
                s.parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad theta {s:?}")))?,
            ),
        };
        let q = (p as u64).pow(m);
        let large = q >= 27;
        let engine_sel = match engine.engine {
            Some(e) => Some(e),
            None => self
                .get(None, "engine", None)
                .map(|s| Engine::from_str(&s, true).map_err(Error::InvalidArgument))
                .transpose()?,
        };
        let full = engine.full
            || self
                .get(None, "full", None)
                .is_some_and(|v| v == "true" || v == "1");
        let engine_sel = engine_sel.unwrap_or(if large && !full {
            Engine::Spectrum
        } else {
            Engine::Both
        });
        let early_stop = match engine.early_stop {
            Some(t) => t == Toggle::On,
            None => match self.get(None, "early_stop", None).as_deref() {
                Some("on" | "true" | "1") => true,
                Some("off" | "false" | "0") => false,
                Some(v) => return Err(Error::InvalidArgument(format!("bad early_stop {v:?}"))),
                None => large,
            },
        };
        Ok(RunConfig {
            p,
            m,
            modulus,
            f,
            theta,
            engine: engine_sel,
            early_stop,
            out_dir: self.paths(cli)?.0,
            cache_dir: self.paths(cli)?.1,
            threads: self.parse(cli.threads, "threads", Some("UNITAL_THREADS"))?,
            timing: !cli.no_timing,
        })
    }

    fn paths(&self, cli: &Cli) -> Result<(PathBuf, PathBuf)> {
        let out = self
            .get(cli.out.as_ref().map(|p| p.display().to_string()), "out", None)
            .unwrap_or_else(|| "out".into());
        let cache = self
            .get(
                cli.cache_dir.as_ref().map(|p| p.display().to_string()),
                "cache_dir",
                Some("UNITAL_CACHE_DIR"),
            )
            .unwrap_or_else(|| "cache".into());
        Ok((out.into(), cache.into()))
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// The instance and θ named by a configuration.
pub struct Resolved {
    pub inst: Instance,
    pub setup: ThetaSetup,
}

pub fn build_instance(cfg: &RunConfig) -> Result<Instance> {
    instance_for(cfg.p, cfg.m, cfg.modulus.clone(), &cfg.f)
}

/// Tower over GF(p^m) with the selected planar function.
pub fn instance_for(p: u32, m: u32, modulus: Option<Vec<u32>>, sel: &FSelector) -> Result<Instance> {
    let spec = match modulus {
        Some(c) => FieldSpec::with_modulus(p, m, c),
        None => FieldSpec::new(p, m),
    };
    let tower = TowerCtx::new(&spec, None)?;
    let ext = tower.ext();
    let f = match sel {
        FSelector::Square => PlanarFn::new(ext, Family::Square)?,
        FSelector::CoulterMatthews(k) => PlanarFn::new(ext, Family::CoulterMatthews { k: *k })?,
        FSelector::Power(d) => PlanarFn::new(ext, Family::Power { d: *d })?,
        FSelector::User(path) => {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "user".into());
            register_do_table(ext, &name, &fs::read_to_string(path)?)?
        }
    };
    Instance::new(tower, f)
}

pub fn resolve_theta(inst: &Instance, sel: ThetaSel) -> Result<ThetaSetup> {
    match sel {
        ThetaSel::Index(i) => {
            if i == 0 || i >= inst.tower().ext().order() {
                return Err(Error::InvalidArgument(format!("theta index {i} out of range")));
            }
            Ok(ThetaSetup::from_theta(inst.tower(), Elem(i)))
        }
        ThetaSel::Auto if inst.is_square() => construct_theta(inst.tower()),
        ThetaSel::Auto => find_thetas(inst)
            .into_iter()
            .next()
            .ok_or_else(|| Error::violation("fiber condition", format!("no admissible theta for {}", inst.f().id()))),
    }
}

pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    let inst = build_instance(cfg)?;
    let setup = resolve_theta(&inst, cfg.theta)?;
    Ok(Resolved { inst, setup })
}

/// One line echoing everything needed to reproduce a run.
pub fn header_line(inst: &Instance, setup: &ThetaSetup) -> String {
    let t = inst.tower();
    format!(
        "# p={} m={} q={} f={} modulus={} base_modulus={} xi={} alpha={} theta={} theta0={} theta1={}",
        t.p(),
        t.m(),
        t.q(),
        inst.f().id(),
        t.ext().modulus_string(),
        t.base().modulus_string(),
        setup.xi,
        setup.alpha,
        setup.theta,
        setup.theta0,
        setup.theta1
    )
}

fn cache_path(root: &Path, inst: &Instance, setup: &ThetaSetup) -> PathBuf {
    let t = inst.tower();
    root.join(format!("p{}m{}f{}t{}", t.p(), t.m(), inst.f().id(), setup.theta_index()))
        .join("design.txt")
}

const CACHE_SPOT_PAIRS: usize = 20_000;

/// Loads U_θ from the cache when a valid entry exists, otherwise builds and
/// stores it. Cached entries must pass a design spot check.
pub fn cached_design(cfg: &RunConfig, inst: &Instance, setup: &ThetaSetup) -> Result<(UnitalDesign, bool)> {
    let path = cache_path(&cfg.cache_dir, inst, setup);
    if let Ok(file) = fs::File::open(&path) {
        let loaded = read_design(BufReader::new(file), inst).and_then(|(_, d)| {
            verify_design(
                &d,
                PairCheck::Sampled {
                    pairs: CACHE_SPOT_PAIRS,
                    seed: 1,
                },
            )?;
            if d.theta.theta != setup.theta {
                return Err(Error::violation("cache", "theta mismatch"));
            }
            Ok(d)
        });
        if let Ok(d) = loaded {
            return Ok((d, true));
        }
    }
    let d = build_unital(inst, setup, PairCheck::Auto)?;
    write_atomic(&path, |w| write_design(w, inst, &d))?;
    Ok((d, false))
}

/// One row of a rank report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub q: u32,
    pub p: u32,
    pub m: u32,
    pub modulus: String,
    pub f: String,
    pub theta_index: u32,
    pub rank_gf2: Option<usize>,
    pub rank_spectrum: Option<usize>,
    pub upper_bound: u64,
    pub lx_bound: u64,
    pub corollary_bound: Option<u64>,
    pub conjecture_match: Option<bool>,
    pub wall_ms: Option<u64>,
}

/// Runs the configured engines and checks them against each other and the bounds.
pub fn rank_report(cfg: &RunConfig, r: &Resolved) -> Result<(Report, Option<SpectrumResult>)> {
    let start = Instant::now();
    let t = r.inst.tower();
    let rank_gf2 = if matches!(cfg.engine, Engine::Gf2 | Engine::Both) {
        let (d, _) = cached_design(cfg, &r.inst, &r.setup)?;
        Some(rank2_of_unital(&d, true, cfg.early_stop)?.rank)
    } else {
        None
    };
    let spectrum = if matches!(cfg.engine, Engine::Spectrum | Engine::Both) {
        let eng = SpectrumEngine::new(&r.inst, &r.setup)?;
        Some(if r.inst.is_normal() {
            eng.spectrum()?
        } else {
            let (d, _) = cached_design(cfg, &r.inst, &r.setup)?;
            eng.spectrum_by_blocks(&d)
        })
    } else {
        None
    };
    let rank_spectrum = spectrum.as_ref().map(|s| s.size);
    if let (Some(g), Some(s)) = (rank_gf2, rank_spectrum)
        && g != s {
            return Err(Error::EngineMismatch { gf2: g, spectrum: s });
        }
    let b = bounds(t.q() as u64, t.p() as u64, t.m())?;
    let rank = rank_spectrum.or(rank_gf2);
    if let Some(rk) = rank
        && rk as u64 > b.upper && r.inst.is_normal() {
            return Err(Error::UpperBoundExceeded {
                rank: rk,
                bound: b.upper as usize,
            });
        }
    let report = Report {
        q: t.q(),
        p: t.p(),
        m: t.m(),
        modulus: t.base().modulus_string(),
        f: r.inst.f().id(),
        theta_index: r.setup.theta_index(),
        rank_gf2,
        rank_spectrum,
        upper_bound: b.upper,
        lx_bound: b.leung_xiang,
        corollary_bound: b.corollary,
        conjecture_match: rank.map(|rk| rk as u64 == b.upper),
        wall_ms: cfg.timing.then(|| start.elapsed().as_millis() as u64),
    };
    Ok((report, spectrum))
}

fn stem(inst: &Instance, setup: &ThetaSetup) -> String {
    let t = inst.tower();
    format!("p{}m{}f{}t{}", t.p(), t.m(), inst.f().id(), setup.theta_index())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn check_line(name: &str, res: Result<String>) -> bool {
    match res {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(e) => {
            println!("FAIL {name}: {e}");
            false
        }
    }
}

fn cmd_verify(cfg: &RunConfig, sample: bool) -> Result<bool> {
    let inst = match build_instance(cfg) {
        Ok(i) => i,
        Err(e) => {
            println!("FAIL planarity: {e}");
            return Ok(false);
        }
    };
    let q = inst.q();
    println!("PASS planarity: {} is planar on GF({})", inst.f().id(), q * q);
    println!("INFO normal: {}", inst.is_normal());
    let mut ok = true;
    let plane_mode = if sample || q > 5 {
        PlaneCheck::Sampled {
            pairs: 100_000,
            shifts: 10_000,
            seed: 1,
        }
    } else {
        PlaneCheck::Exhaustive
    };
    ok &= check_line(
        "plane axioms",
        verify_plane(&inst, plane_mode).map(|r| {
            format!(
                "order {}, {} points, {} point pairs, {} line pairs, {} shift images",
                r.order, r.points, r.point_pairs_checked, r.line_pairs_checked, r.shift_images_checked
            )
        }),
    );
    let setup = match resolve_theta(&inst, cfg.theta) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL theta: {e}");
            return Ok(false);
        }
    };
    println!("{}", header_line(&inst, &setup));
    let design = match build_unital(&inst, &setup, PairCheck::Auto) {
        Ok(d) => d,
        Err(e) => {
            println!("FAIL design: {e}");
            return Ok(false);
        }
    };
    println!(
        "PASS design: 2-({}, {}, 1) with {} blocks",
        design.num_points(),
        q + 1,
        design.num_blocks()
    );
    ok &= check_line(
        "unital in plane",
        verify_unital_in_plane(&inst, &design)
            .map(|r| format!("{} lines, {} tangents, {} secants", r.lines, r.tangents, r.secants)),
    );
    if inst.is_normal() {
        ok &= check_line(
            "ovals",
            verify_ovals(&inst, &design).map(|r| format!("{} ovals of size {}", r.ovals, r.oval_size)),
        );
        ok &= check_line(
            "dual ovals",
            verify_dual_ovals(&design).map(|r| format!("oval rank {}, rank <= {}", r.oval_rank, r.implied_upper_bound)),
        );
    }
    let sample_group = (q > 5).then_some((16, 1));
    ok &= check_line(
        "transitivity",
        verify_transitivity(&inst, &design, sample_group)
            .map(|r| format!("|T| = {}, {} block images", r.group_order, r.block_images_checked)),
    );
    Ok(ok)
}

#[derive(Serialize)]
struct ThetaList {
    q: u32,
    f: String,
    modulus: String,
    theta_indices: Vec<u32>,
}

#[derive(Serialize)]
struct SpectrumOut<'a> {
    #[serde(flatten)]
    report: &'a Report,
    spectrum_bitmap: String,
}

#[derive(Serialize, Default)]
struct CriterionSummary {
    q: u32,
    qualifying: usize,
    met: usize,
    counterexamples: usize,
}

#[derive(Serialize)]
struct TraceSummary {
    q: u32,
    qualifying: usize,
    counterexamples: usize,
    trace_zero_recount: usize,
    certified_lower_bound: usize,
}

#[derive(Serialize)]
struct FullReport {
    rows: Vec<Report>,
    trace_criterion: Vec<TraceSummary>,
    kloosterman_criterion: Vec<CriterionSummary>,
    kloosterman_classes: Vec<crate::kloosterman::ClassCounts>,
}

/// Checks "criterion met ⇒ member" over all triples with exactly one of u, v zero.
pub fn criterion_cross_check(inst: &Instance, setup: &ThetaSetup, spectrum: &SpectrumResult) -> Result<(usize, usize, Vec<Character>)> {
    let t = inst.tower();
    let b = t.base();
    let ctx = KloostermanCtx::new(b);
    let (mut qualifying, mut met, mut bad) = (0, 0, Vec::new());
    for w in b.nonzero() {
        for x in b.nonzero() {
            for ch in [Character::new(x, Elem::ZERO, w), Character::new(Elem::ZERO, x, w)] {
                qualifying += 1;
                let o = thm_membership_criterion(&ctx, t, setup, ch.u, ch.v, ch.w)?;
                if o.criterion_met {
                    met += 1;
                    if !spectrum.is_member(&ch) {
                        bad.push(ch);
                    }
                }
            }
        }
    }
    Ok((qualifying, met, bad))
}

fn print_table(rows: &[Report]) {
    println!(
        "{:>4} {:>8} {:>6} {:>10} {:>10} {:>8} {:>8} {:>9} {:>6}",
        "q", "f", "theta", "rank_gf2", "rank_spec", "upper", "lx", "corollary", "match"
    );
    let opt = |o: Option<usize>| o.map_or("-".to_string(), |x| x.to_string());
    for r in rows {
        println!(
            "{:>4} {:>8} {:>6} {:>10} {:>10} {:>8} {:>8} {:>9} {:>6}",
            r.q,
            r.f,
            r.theta_index,
            opt(r.rank_gf2),
            opt(r.rank_spectrum),
            r.upper_bound,
            r.lx_bound,
            r.corollary_bound.map_or("-".into(), |c| c.to_string()),
            r.conjecture_match.map_or("-".into(), |c| c.to_string())
        );
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let layers = Layers::from_process(cli.config.as_deref())?;
    let none = EngineArgs::default();
    let cfg_for = |inst: &InstanceArgs, eng: &EngineArgs| layers.resolve(cli, inst, eng);
    let init_threads = |cfg: &RunConfig| {
        if let Some(n) = cfg.threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    };
    match &cli.command {
        Command::Verify { inst, sample } => {
            let cfg = cfg_for(inst, &none)?;
            init_threads(&cfg);
            cmd_verify(&cfg, *sample)
        }
        Command::FindTheta { inst } => {
            let cfg = cfg_for(inst, &none)?;
            init_threads(&cfg);
            let i = build_instance(&cfg)?;
            let thetas = find_thetas(&i);
            println!("{} admissible theta for {} at q = {}", thetas.len(), i.f().id(), i.q());
            let list = ThetaList {
                q: i.q(),
                f: i.f().id(),
                modulus: i.tower().base().modulus_string(),
                theta_indices: thetas.iter().map(|s| s.theta_index()).collect(),
            };
            let t = i.tower();
            write_json(&cfg.out_dir.join(format!("thetas_p{}m{}f{}.json", t.p(), t.m(), i.f().id())), &list)?;
            Ok(true)
        }
        Command::Build { inst } => {
            let cfg = cfg_for(inst, &none)?;
            init_threads(&cfg);
            let r = resolve(&cfg)?;
            println!("{}", header_line(&r.inst, &r.setup));
            let (d, hit) = cached_design(&cfg, &r.inst, &r.setup)?;
            let path = cfg.out_dir.join(format!("design_{}.txt", stem(&r.inst, &r.setup)));
            write_atomic(&path, |w| write_design(w, &r.inst, &d))?;
            println!(
                "{} points, {} blocks{} -> {}",
                d.num_points(),
                d.num_blocks(),
                if hit { " (cached)" } else { "" },
                path.display()
            );
            Ok(true)
        }
        Command::Rank { inst, engine } => {
            let cfg = cfg_for(inst, engine)?;
            init_threads(&cfg);
            let r = resolve(&cfg)?;
            println!("{}", header_line(&r.inst, &r.setup));
            let (rep, _) = rank_report(&cfg, &r)?;
            print_table(std::slice::from_ref(&rep));
            write_json(&cfg.out_dir.join(format!("rank_{}.json", stem(&r.inst, &r.setup))), &rep)?;
            Ok(true)
        }
        Command::Spectrum { inst, witness_all } => {
            let mut cfg = cfg_for(inst, &none)?;
            cfg.engine = Engine::Spectrum;
            init_threads(&cfg);
            let r = resolve(&cfg)?;
            println!("{}", header_line(&r.inst, &r.setup));
            let (rep, spec) = rank_report(&cfg, &r)?;
            let spec = spec.expect("spectrum engine ran");
            let s = stem(&r.inst, &r.setup);
            write_json(
                &cfg.out_dir.join(format!("spectrum_{s}.json")),
                &SpectrumOut {
                    report: &rep,
                    spectrum_bitmap: spec.bitmap_hex(),
                },
            )?;
            write_atomic(&cfg.out_dir.join(format!("spectrum_{s}.csv")), |w| spec.write_csv(w))?;
            if *witness_all {
                let eng = SpectrumEngine::new(&r.inst, &r.setup)?;
                write_atomic(&cfg.out_dir.join(format!("sbeta_{s}.csv")), |w| {
                    writeln!(w, "u,v,w,beta,s_beta")?;
                    for k in 0..spec.witnesses.len() {
                        let ch = Character::from_index(rep.q, k);
                        for (beta, val) in eng.s_beta_table(&ch) {
                            writeln!(w, "{},{},{},{},{}", ch.u, ch.v, ch.w, beta, val)?;
                        }
                    }
                    Ok(())
                })?;
            }
            println!("spectrum size {}", spec.size);
            Ok(true)
        }
        Command::Kloosterman { p, m } => {
            let ia = InstanceArgs {
                p: *p,
                m: *m,
                ..Default::default()
            };
            let cfg = cfg_for(&ia, &none)?;
            init_threads(&cfg);
            let field = crate::fields::FieldCtx::new(&FieldSpec::new(cfg.p, cfg.m))?;
            let (records, counts) = kloosterman_atlas(&field)?;
            let path = cfg.out_dir.join(format!("kloosterman_p{}m{}.csv", cfg.p, cfg.m));
            write_atomic(&path, |w| write_atlas_csv(w, &field, &records))?;
            println!("{} rows -> {}", records.len(), path.display());
            if let Some(c) = counts {
                println!(
                    "case counts over GF(q)*: a {}, b {} (expected {}), c {} (expected {})",
                    c.count_a, c.count_b, c.expected_b, c.count_c, c.expected_c
                );
                return Ok(c.count_b == c.expected_b && c.count_c == c.expected_c);
            }
            Ok(true)
        }
        Command::Report { q, engine } => {
            if q.is_empty() {
                return Err(Error::InvalidArgument("--q needs at least one prime power".into()));
            }
            let mut full = FullReport {
                rows: Vec::new(),
                trace_criterion: Vec::new(),
                kloosterman_criterion: Vec::new(),
                kloosterman_classes: Vec::new(),
            };
            let mut ok = true;
            for &qq in q {
                let (p, m) = prime_power(qq)
                    .ok_or_else(|| Error::InvalidArgument(format!("{qq} is not an odd prime power")))?;
                let ia = InstanceArgs {
                    p: Some(p),
                    m: Some(m),
                    f: Some("square".into()),
                    theta: Some("auto".into()),
                    modulus: None,
                };
                let cfg = cfg_for(&ia, engine)?;
                init_threads(&cfg);
                let r = resolve(&cfg)?;
                let (mut rep, spec) = rank_report(&cfg, &r)?;
                if let Some(spec) = &spec {
                    let eng = SpectrumEngine::new(&r.inst, &r.setup)?;
                    let tr = verify_trace_criterion(&eng)?;
                    full.trace_criterion.push(TraceSummary {
                        q: qq,
                        qualifying: tr.qualifying,
                        counterexamples: tr.counterexamples.len(),
                        trace_zero_recount: tr.trace_zero_recount,
                        certified_lower_bound: tr.certified_lower_bound,
                    });
                    let (qualifying, met, bad) = criterion_cross_check(&r.inst, &r.setup, spec)?;
                    ok &= bad.is_empty();
                    full.kloosterman_criterion.push(CriterionSummary {
                        q: qq,
                        qualifying,
                        met,
                        counterexamples: bad.len(),
                    });
                }
                if p == 3 {
                    let (_, c) = kloosterman_atlas(r.inst.tower().base())?;
                    full.kloosterman_classes.extend(c);
                }
                if !cfg.timing {
                    rep.wall_ms = None;
                }
                full.rows.push(rep);
            }
            print_table(&full.rows);
            let cfg = cfg_for(
                &InstanceArgs {
                    p: Some(3),
                    ..Default::default()
                },
                engine,
            )?;
            write_json(&cfg.out_dir.join("report.json"), &full)?;
            Ok(ok)
        }
    }
}

/// Parses arguments and runs; the exit status is nonzero on any failure.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("unital").chain(args.iter().copied())).unwrap()
    }

    fn inst_args(c: &Cli) -> (InstanceArgs, EngineArgs) {
        match &c.command {
            Command::Rank { inst, engine } => (inst.clone(), engine.clone()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn selectors() {
        assert_eq!(FSelector::parse("square").unwrap(), FSelector::Square);
        assert_eq!(FSelector::parse("cm:3").unwrap(), FSelector::CoulterMatthews(3));
        assert_eq!(FSelector::parse("user:a.do").unwrap(), FSelector::User("a.do".into()));
        assert!(FSelector::parse("cube").is_err());
    }

    #[test]
    fn precedence() {
        let config = parse_config("p=5\nengine=gf2\ncache_dir=/from/config\n# comment\n").unwrap();
        let env: HashMap<String, String> = [
            ("UNITAL_CACHE_DIR".to_string(), "/from/env".to_string()),
            ("UNITAL_THREADS".to_string(), "3".to_string()),
        ]
        .into();
        let layers = Layers::new(config, env.clone());
        let c = cli(&["rank", "--engine", "spectrum"]);
        let (i, e) = inst_args(&c);
        let cfg = layers.resolve(&c, &i, &e).unwrap();
        assert_eq!((cfg.p, cfg.engine), (5, Engine::Spectrum));
        assert_eq!(cfg.cache_dir, PathBuf::from("/from/config"));
        assert_eq!(cfg.threads, Some(3));

        let c = cli(&["--cache-dir", "/from/flag", "--threads", "2", "rank", "--p", "3"]);
        let (i, e) = inst_args(&c);
        let cfg = layers.resolve(&c, &i, &e).unwrap();
        assert_eq!((cfg.p, cfg.engine), (3, Engine::Gf2));
        assert_eq!(cfg.cache_dir, PathBuf::from("/from/flag"));
        assert_eq!(cfg.threads, Some(2));

        let layers = Layers::new(HashMap::new(), env);
        let c = cli(&["rank", "--p", "3", "--m", "3"]);
        let (i, e) = inst_args(&c);
        let cfg = layers.resolve(&c, &i, &e).unwrap();
        assert_eq!(cfg.cache_dir, PathBuf::from("/from/env"));
        assert_eq!((cfg.engine, cfg.early_stop), (Engine::Spectrum, true));
    }

    #[test]
    fn bad_config_line() {
        assert!(matches!(parse_config("p=3\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
    }
}
