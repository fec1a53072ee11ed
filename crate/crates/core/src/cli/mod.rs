//! Batch driver. Each subcommand writes its tables into the output
//! directory followed by `manifest.json`, which lists every file with its
//! SHA-256 digest.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use config::{resolve, ExperimentConfig};

use crate::analysis::{self, modulus, necessity};
use crate::cantor::{IntervalAddress, RowAddress, SpaceParams};
use crate::pencils::{FamilySpec, PolylinePath};
use crate::space::{self, Cube, Point, Rect, SpaceApprox};
use crate::{fit_slope, metric, qcmap, svg, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BuildSpace,
    Render,
    Ahlfors,
    Quasiconvexity,
    ThresholdScan,
    Kp,
    Modulus,
    Necessity,
    Pointwise,
    QcMap,
    ParamsFor,
}

#[derive(Parser, Debug)]
#[command(name = "cantorlab", version, about = "Experiments on Cantor-product spaces")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config overrides as `key=value`.
    overrides: Vec<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    nu: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Truncation generation `G`.
    #[arg(short = 'G', long)]
    generations: Option<u32>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    space_cache: Option<PathBuf>,
    #[arg(long)]
    overlay: Option<String>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    gens: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    qs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    nus: Option<Vec<u32>>,
}

impl Cli {
    fn flag_overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        macro_rules! put {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    m.insert(stringify!($f).to_string(), json!(v));
                }
            )*};
        }
        put!(lambda, nu, p, eps, generations, h, samples, seed, out, threads, space_cache, overlay, paths, k_max, depth, gens, qs, ps, lambdas, nus);
        m
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time_s: f64,
}

struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Output {
    fn new(dir: &Path) -> Result<Output> {
        std::fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), data)?;
        self.files.push(FileEntry { name: name.into(), sha256: hex(&Sha256::digest(data)), bytes: data.len() });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Domain(_) | Error::AddressRange(_) | Error::Json(_) => 2,
        Error::Resource { .. } | Error::Capacity(_) => 3,
        _ => 1,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let text = match cli.config.as_ref().map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config: {e}");
            return 2;
        }
    };
    let result = resolve(text.as_deref(), &cli.overrides, cli.flag_overrides()).and_then(|cfg| {
        if let Some(n) = cfg.threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        execute(cli.command, &cfg)
    });
    match result {
        Ok(m) => {
            eprintln!("wrote {} files to {}", m.files.len() + 1, m.config.out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one subcommand and writes its outputs and manifest.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Manifest> {
    let start = Instant::now();
    let mut out = Output::new(&cfg.out)?;
    match command {
        Command::BuildSpace => build_space(cfg, &mut out)?,
        Command::Render => render(cfg, &mut out)?,
        Command::Ahlfors => ahlfors(cfg, &mut out)?,
        Command::Quasiconvexity => quasiconvexity(cfg, &mut out)?,
        Command::ThresholdScan => threshold_scan(cfg, &mut out)?,
        Command::Kp => kp(cfg, &mut out)?,
        Command::Modulus => modulus_cmd(cfg, &mut out)?,
        Command::Necessity => necessity_cmd(cfg, &mut out)?,
        Command::Pointwise => pointwise(cfg, &mut out)?,
        Command::QcMap => qc_map(cfg, &mut out)?,
        Command::ParamsFor => params_for(cfg, &mut out)?,
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        files: out.files.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn params(cfg: &ExperimentConfig) -> Result<SpaceParams> {
    SpaceParams::new(cfg.lambda, cfg.nu)
}

fn load_space(cfg: &ExperimentConfig) -> Result<SpaceApprox> {
    let params = params(cfg)?;
    match &cfg.space_cache {
        Some(path) => {
            let s = SpaceApprox::from_json(&std::fs::read_to_string(path)?)?;
            if s.params != params || s.max_generation != cfg.generations {
                return Err(Error::Usage(format!(
                    "cached space {} was built for lambda = {}, nu = {}, G = {}",
                    path.display(),
                    s.params.lambda,
                    s.params.nu,
                    s.max_generation
                )));
            }
            Ok(s)
        }
        None => space::enumerate_cubes_with_budget(params, cfg.generations, cfg.cube_budget),
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn unit_cube(params: SpaceParams) -> Result<Cube> {
    Cube::new(params, RowAddress::new(0, 1)?, IntervalAddress::root())
}

fn build_space(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let s = load_space(cfg)?;
    out.write("space.json", s.to_json()?.as_bytes())?;
    let rows = s.cubes.iter().map(|c| {
        let r = c.rect;
        format!(
            "{},{},{},{},{},{},{},{}",
            c.row.generation, c.row.index, c.col.level, c.col.index, r.x_lo, r.x_hi, r.y_lo, r.y_hi
        )
    });
    out.write("cubes.csv", csv("generation,row,level,column,x_lo,x_hi,y_lo,y_hi", rows).as_bytes())?;
    out.json(
        "summary.json",
        &json!({
            "cube_count": s.cubes.len(),
            "total_measure": space::total_measure(s.params, s.max_generation),
            "measure_tail": space::measure_tail(s.params, s.max_generation),
            "measure_limit": space::measure_limit(s.params),
        }),
    )
}

fn overlay_family(params: SpaceParams, cfg: &ExperimentConfig) -> Result<Option<FamilySpec>> {
    let g = cfg.generations;
    let need = |min: u32| {
        if g < min {
            Err(Error::Usage(format!("overlay `{}` needs G >= {min}", cfg.overlay)))
        } else {
            Ok(())
        }
    };
    let cube = |gen: u32, row: u64, col: u64| -> Result<Cube> {
        Cube::new(params, RowAddress::new(gen, row)?, IntervalAddress::new(params.nu * gen, col)?)
    };
    Ok(Some(match cfg.overlay.as_str() {
        "none" => return Ok(None),
        "gamma-i" => FamilySpec::GammaI { interval: IntervalAddress::root(), inverted: false },
        "gamma-q" => FamilySpec::GammaQ { cube: unit_cube(params)? },
        "gamma-q1q2" => {
            need(1)?;
            let (q1, q2) = modulus::scaling_configuration(params, 1)?;
            FamilySpec::GammaQ1Q2 { q1, q2 }
        }
        "cone" => {
            need(2)?;
            FamilySpec::Cone { q0: cube(g, 2, 1)?, qm: cube(g - 1, 1, 1)? }
        }
        "double-cone" => {
            need(1)?;
            let qx = cube(1, 1, 1)?;
            let qy = cube(1, 2, 1u64 << params.nu)?;
            FamilySpec::DoubleCone { qx, x: qx.rect.center(), qy, y: qy.rect.center() }
        }
        other => return Err(Error::Usage(format!("unknown overlay `{other}`"))),
    }))
}

/// `n` paths at the shifted midpoints of the index interval; exceptional
/// parameters are dropped.
fn sample_family(params: SpaceParams, spec: &FamilySpec, n: usize, depth: u32) -> Result<Vec<PolylinePath>> {
    let (a, b) = spec.index_interval(params);
    let mut paths = Vec::with_capacity(n);
    for k in 0..n {
        let t = a + (b - a) * (k as f64 + 0.381966) / n as f64;
        match spec.path(params, t, depth) {
            Ok(p) => paths.push(p),
            Err(Error::ExceptionalParameter { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(paths)
}

fn render(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let s = load_space(cfg)?;
    let paths = match overlay_family(s.params, cfg)? {
        Some(spec) => sample_family(s.params, &spec, cfg.paths, cfg.depth.unwrap_or(12))?,
        None => Vec::new(),
    };
    out.write("space.svg", svg::render(&s, &paths, cfg.width_px).as_bytes())
}

fn ahlfors(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let s = load_space(cfg)?;
    let r_min = cfg.r_min.unwrap_or_else(|| s.params.side(s.max_generation));
    let r_max = cfg.r_max.unwrap_or(1.0);
    if !(r_min > 0.0 && r_min <= r_max) {
        return Err(Error::Usage(format!("need 0 < r_min <= r_max, got {r_min}, {r_max}")));
    }
    let rep = space::ahlfors_probe(&s, cfg.samples.unwrap_or(1000), cfg.seed, r_min, r_max);
    let rows = rep
        .samples
        .iter()
        .map(|a| format!("{},{},{},{},{},{}", a.center.x, a.center.y, a.r, a.measure, a.ratio, a.singular_center));
    out.write("ahlfors.csv", csv("center_x,center_y,r,measure,ratio,singular_center", rows).as_bytes())?;
    out.json(
        "ahlfors.json",
        &json!({ "c_low": rep.c_low, "c_high": rep.c_high, "tail_bound": rep.tail_bound, "r_min": r_min, "r_max": r_max }),
    )
}

fn quasiconvexity(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let s = load_space(cfg)?;
    let graph = metric::build_graph_with_budget(&s, cfg.h, cfg.vertex_budget)?;
    let rep = metric::quasiconvexity_ratio(&s, &graph, cfg.samples.unwrap_or(1000), cfg.seed)?;
    let rows = rep
        .pairs
        .iter()
        .map(|r| format!("{},{},{},{},{},{},{}", r.p.x, r.p.y, r.q.x, r.q.y, r.intrinsic, r.euclidean, r.ratio));
    out.write("pairs.csv", csv("px,py,qx,qy,intrinsic,euclidean,ratio", rows).as_bytes())?;
    out.json(
        "quasiconvexity.json",
        &json!({
            "max_ratio": rep.max_ratio,
            "argmax": rep.argmax,
            "h": cfg.h,
            "vertices": graph.vertex_count(),
            "edges": graph.edges.len(),
        }),
    )
}

fn threshold_scan(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let lambdas = if cfg.lambdas.is_empty() { (2..=9).map(|i| i as f64 * 0.05).collect() } else { cfg.lambdas.clone() };
    let nus = if cfg.nus.is_empty() { vec![2, 3, 4, 10] } else { cfg.nus.clone() };
    let (mut main, mut ratios) = (Vec::new(), Vec::new());
    for &l in &lambdas {
        for &nu in &nus {
            let params = SpaceParams::new(l, nu)?;
            let p0 = analysis::p0(params);
            let r0 = analysis::kp_convergence_ratio(params, p0)?;
            main.push(format!("{l},{nu},{},{},{},{p0},{r0}", params.dim_c(), params.dim_d(), 2.0 - params.dim_c()));
            for &p in &cfg.ps {
                let r = analysis::kp_convergence_ratio(params, p)?;
                ratios.push(format!("{l},{nu},{p},{r},{}", r < 1.0));
            }
        }
    }
    out.write("threshold.csv", csv("lambda,nu,dim_c,dim_d,two_minus_dim_c,p0,ratio_at_p0", main).as_bytes())?;
    if !cfg.ps.is_empty() {
        out.write("ratios.csv", csv("lambda,nu,p,ratio,convergent", ratios).as_bytes())?;
    }
    Ok(())
}

fn kp(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let params = params(cfg)?;
    let p = cfg.p.unwrap_or(1.8);
    let g = cfg.gens.first().copied().unwrap_or(1);
    let (q1, q2) = modulus::scaling_configuration(params, g)?;
    let rep = analysis::kp_exact(params, p, &q1, &q2, cfg.k_max.max(2))?;
    let rows = rep.increments.iter().zip(&rep.partial).enumerate().map(|(i, (inc, s))| format!("{},{inc},{s}", i + 1));
    out.write("kp.csv", csv("k,increment,partial_sum", rows).as_bytes())?;
    out.json(
        "kp.json",
        &json!({
            "p": p,
            "p0": analysis::p0(params),
            "ratio": analysis::kp_convergence_ratio(params, p)?,
            "q1": q1,
            "q2": q2,
            "report": rep,
        }),
    )
}

fn modulus_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let params = params(cfg)?;
    let p = cfg.p.unwrap_or(1.8);
    let gens = if cfg.gens.is_empty() { vec![1, 2] } else { cfg.gens.clone() };
    let opts = modulus::ScalingOptions {
        n_paths: cfg.paths,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    let rep = modulus::modulus_scaling_check(params, p, &gens, &opts)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| format!("{},{},{},{},{},{}", r.generation, r.side, r.modulus, r.dual, r.iterations, r.vertices));
    out.write("modulus.csv", csv("generation,side,modulus,dual,iterations,vertices", rows).as_bytes())?;
    out.json("modulus.json", &json!({ "options": opts, "report": rep }))
}

fn necessity_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let params = params(cfg)?;
    let p0 = analysis::p0(params);
    let qs = if cfg.qs.is_empty() { vec![1.2, 1.5, p0] } else { cfg.qs.clone() };
    let g_max = cfg.generations.max(cfg.k_max);
    let mut witnesses = Vec::new();
    for k in 1..=cfg.k_max {
        match necessity::necessity_witness(params, k, g_max) {
            Ok(w) => witnesses.push(w),
            Err(Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let nu = params.nu as f64;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &q in &qs {
        let (mut ks, mut raw, mut corrected) = (Vec::new(), Vec::new(), Vec::new());
        for w in &witnesses {
            let e = necessity::necessity_energy(w, q);
            let pr = necessity::poincare_probe(params, g_max, &|y| w.u(y), &|y| w.g(y), q, 64)?;
            rows.push(format!("{},{},{q},{e},{},{},{}", w.k, w.n_k, pr.lhs, pr.rhs, pr.ratio));
            ks.push(w.k as f64);
            raw.push(e.log2());
            corrected.push(e.log2() - (1.0 - q) * ((w.n_k as f64).log2() - w.k as f64));
        }
        let slope = |ys: &[f64]| if ks.len() >= 2 { fit_slope(&ks, ys) } else { f64::NAN };
        fits.push(json!({
            "q": q,
            "slope": slope(&raw),
            "slope_n_corrected": slope(&corrected),
            "expected": 1.0 + nu - q + nu * (2.0 - q) * params.lambda.log2(),
        }));
    }
    out.write("necessity.csv", csv("k,n_k,q,energy,poincare_lhs,poincare_rhs,poincare_ratio", rows).as_bytes())?;
    out.json("necessity.json", &json!({ "p0": p0, "g_max": g_max, "fits": fits }))
}

fn pointwise(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    use rand::Rng;
    let s = load_space(cfg)?;
    let p = cfg.p.unwrap_or(2.0);
    let depth = cfg.depth.unwrap_or(12);
    let g = |q: Point| 1.0 + q.x;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..cfg.samples.unwrap_or(8) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let (x, _) = space::sample_point(&s, &mut rng);
        let (y, _) = space::sample_point(&s, &mut rng);
        let sub_seed: u64 = rng.gen();
        let rep = analysis::pointwise_estimate_check(&s, None, x, y, &g, p, cfg.paths, 4.0, depth, cfg.h, sub_seed)?;
        worst = worst.max(rep.ratio);
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            x.x, x.y, y.x, y.y, rep.distance, rep.lhs, rep.rhs, rep.ratio, rep.maximal_x, rep.maximal_y
        ));
    }
    out.write("pointwise.csv", csv("x_x,x_y,y_x,y_y,distance,lhs,rhs,ratio,maximal_x,maximal_y", rows).as_bytes())?;
    out.json("pointwise.json", &json!({ "p": p, "density": "1 + x", "max_ratio": worst }))
}

fn qc_map(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let s = load_space(cfg)?;
    let params = s.params;
    let depth = cfg.depth.unwrap_or(40);
    let h = cfg.h;
    let graph = metric::build_graph_with_budget(&s, h, cfg.vertex_budget)?;
    let image = qcmap::image_graph(&graph, params, depth);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (x, delta) in qcmap::interior_points(&s, cfg.samples.unwrap_or(20), 8.0 * h, cfg.seed) {
        let radii = qcmap::ladder_radii(delta, h);
        let rep = qcmap::dilatation(&graph, &image, x, &radii)?;
        worst = worst.max(rep.rungs.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max));
        for r in &rep.rungs {
            rows.push(format!("{},{},{},{},{},{},{}", x.x, x.y, delta, r.r, r.big, r.small, r.ratio));
        }
    }
    out.write("dilatation.csv", csv("x,y,delta,r,big,small,ratio", rows).as_bytes())?;
    let isometry = qcmap::same_cube_isometry(&s, cfg.samples.unwrap_or(1000), cfg.seed, depth)?;
    let ac = match modulus::scaling_configuration(params, 1) {
        Ok((q1, q2)) => {
            let t = q1.rect.x_lo + 0.381966 * q1.side();
            Some(qcmap::ac_diagnostic(params, &q1, &q2, t, 6, params.nu * 4)?)
        }
        Err(_) => None,
    };
    let bd = qcmap::box_dimension_e(params, 1, cfg.generations.max(2))?;
    out.json(
        "qcmap.json",
        &json!({
            "isometry_max_deviation": isometry,
            "dilatation_max_deviation": worst,
            "ac_diagnostic": ac,
            "box_dimension": bd,
            "dim_c_plus_dim_d": params.dim_c() + params.dim_d(),
        }),
    )?;
    let src: Vec<Rect> = s.cubes.iter().map(|c| c.rect).collect();
    let moved = s
        .cubes
        .iter()
        .map(|c| {
            let shift = qcmap::apply_f(params, c.rect.center(), depth)?.x - c.rect.center().x;
            Ok(Rect::new(c.rect.x_lo + shift, c.rect.x_hi + shift, c.rect.y_lo, c.rect.y_hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let ambient = Rect::new(0.0, 2.0, 0.0, params.scale_d());
    let layers = [svg::Layer { rects: &src, fill: "#bbbbbb" }, svg::Layer { rects: &moved, fill: "#6baed6" }];
    out.write("overlay.svg", svg::render_layers(ambient, &layers, &[], cfg.width_px).as_bytes())
}

fn params_for(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = cfg.p.ok_or_else(|| Error::Usage("params-for needs p".into()))?;
    let eps = cfg.eps.ok_or_else(|| Error::Usage("params-for needs eps".into()))?;
    let cert = qcmap::solve_params(p, eps, cfg.nu_cap)?;
    out.json("certificate.json", &cert)
}
