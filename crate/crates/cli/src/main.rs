use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use fbindex::acceptance::{self, CriterionOutcome, CRITERIA, TRACE_SEED};
use fbindex::meshgen::{self, write_atomic};
use fbindex::report::{self, ExperimentReport};
use fbindex::spectra::{self, DEFAULT_ZERO_TOL};
use fbindex::{disk_oracle, fem, Error, SolutionKind, TriMesh};

const EXIT_FAILED: u8 = 1;
const EXIT_ARGUMENT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Morse index laboratory for global solutions of the one-phase free boundary problem.
///
/// Exit status: 0 when every requested experiment passes, 1 when one fails,
/// 2 on argument errors, 3 on numerical errors. FBINDEX_THREADS caps the
/// number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "fbindex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discrete Morse index of one truncation; prints `index=N`.
    Index(GeometryArgs),
    /// Exact spectrum of the disk form from the Bessel secular equations.
    Oracle {
        /// Negative eigenvalues and the lowest positive ones of Q0 on the unit disk.
        #[arg(long)]
        disk: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run acceptance criteria and write their reports.
    Verify {
        /// Run all nine criteria.
        #[arg(long)]
        all: bool,
        /// Run only the given criterion (repeatable).
        #[arg(long, value_name = "N")]
        criterion: Vec<u8>,
        /// Seed of the random trace-inequality fields.
        #[arg(long, default_value_t = TRACE_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Write a truncation mesh in the `fbmesh` text format.
    Mesh(GeometryArgs),
    /// Write the stiffness, mass, boundary and index matrices of a truncation.
    DumpMatrices(GeometryArgs),
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Output path (report file, mesh file or matrix directory).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print JSON instead of the human summary.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Args)]
struct GeometryArgs {
    /// Solution: plane, disk-complement or hairpin.
    #[arg(long, value_name = "KIND")]
    solution: Option<SolutionKind>,
    /// Use the unit disk of the reduced form instead of a solution.
    #[arg(long)]
    disk: bool,
    /// Outer radius R (disk complement) or half side L (plane).
    #[arg(long, value_name = "R")]
    radius: Option<f64>,
    /// Strip cut S of the hairpin, |Re w| ≤ S.
    #[arg(long, value_name = "S")]
    strip_cut: Option<f64>,
    /// Radial cells (disk complement) or cells along the half side (plane).
    #[arg(long)]
    nr: Option<usize>,
    /// Angular vertices (disk complement).
    #[arg(long)]
    ntheta: Option<usize>,
    /// Cells along the hairpin strip.
    #[arg(long)]
    ns: Option<usize>,
    /// Cells across the hairpin strip.
    #[arg(long)]
    nt: Option<usize>,
    /// Rings of the disk mesh.
    #[arg(long)]
    nrings: Option<usize>,
    /// Eigenvalues with |λ| below this count as zero.
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Validated geometry, fixed before any computation starts.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Geometry {
    Disk { n_rings: usize },
    Annulus { radius: f64, n_r: usize, n_theta: usize },
    Hairpin { cut: f64, n_s: usize, n_t: usize },
    Plane { side: f64, n: usize },
}

impl Geometry {
    fn label(&self) -> String {
        match self {
            Geometry::Disk { n_rings } => format!("disk/n_rings={n_rings}"),
            Geometry::Annulus { radius, n_r, n_theta } => format!("disk-complement/R={radius}/n_r={n_r}/n_theta={n_theta}"),
            Geometry::Hairpin { cut, n_s, n_t } => format!("hairpin/S={cut}/n_s={n_s}/n_t={n_t}"),
            Geometry::Plane { side, n } => format!("plane/L={side}/n={n}"),
        }
    }

    fn mesh(&self) -> fbindex::Result<TriMesh> {
        match *self {
            Geometry::Disk { n_rings } => meshgen::disk_mesh(n_rings),
            Geometry::Annulus { radius, n_r, n_theta } => meshgen::annulus_mesh(radius, n_r, n_theta),
            Geometry::Hairpin { cut, n_s, n_t } => meshgen::hairpin_mesh(cut, n_s, n_t),
            Geometry::Plane { side, n } => meshgen::plane_mesh(side, n),
        }
    }
}

fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn positive(name: &str, v: f64) -> fbindex::Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(argument(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn cells(length: f64, step: f64) -> usize {
    (length / step - 1e-9).ceil().max(1.0) as usize
}

impl GeometryArgs {
    fn geometry(&self) -> fbindex::Result<Geometry> {
        if !(self.zero_tol.is_finite() && self.zero_tol >= 0.0) {
            return Err(argument(format!("--zero-tol must be finite and non-negative, got {}", self.zero_tol)));
        }
        let unused = |flags: &[(&str, bool)]| -> fbindex::Result<()> {
            match flags.iter().find(|f| f.1) {
                Some((name, _)) => Err(argument(format!("--{name} does not apply to this geometry"))),
                None => Ok(()),
            }
        };
        match (self.disk, self.solution) {
            (true, Some(_)) => Err(argument("give either --disk or --solution, not both")),
            (false, None) => Err(argument("one of --solution or --disk is required")),
            (true, None) => {
                unused(&[
                    ("radius", self.radius.is_some()),
                    ("strip-cut", self.strip_cut.is_some()),
                    ("nr", self.nr.is_some()),
                    ("ntheta", self.ntheta.is_some()),
                    ("ns", self.ns.is_some()),
                    ("nt", self.nt.is_some()),
                ])?;
                Ok(Geometry::Disk { n_rings: self.nrings.unwrap_or(16) })
            }
            (false, Some(SolutionKind::DiskComplement)) => {
                unused(&[("strip-cut", self.strip_cut.is_some()), ("ns", self.ns.is_some()), ("nt", self.nt.is_some()), ("nrings", self.nrings.is_some())])?;
                let radius = positive("radius", self.radius.ok_or_else(|| argument("--radius is required for disk-complement"))?)?;
                if radius <= 1.0 {
                    return Err(argument(format!("--radius must exceed 1 for disk-complement, got {radius}")));
                }
                let n_r = self.nr.unwrap_or_else(|| cells(radius - 1.0, 1.0 / 16.0).max(2));
                Ok(Geometry::Annulus { radius, n_r, n_theta: self.ntheta.unwrap_or(64) })
            }
            (false, Some(SolutionKind::Hairpin)) => {
                unused(&[("radius", self.radius.is_some()), ("nr", self.nr.is_some()), ("ntheta", self.ntheta.is_some()), ("nrings", self.nrings.is_some())])?;
                let cut = positive("strip-cut", self.strip_cut.ok_or_else(|| argument("--strip-cut is required for hairpin"))?)?;
                let n_s = self.ns.unwrap_or_else(|| cells(2.0 * cut, 1.0 / 8.0));
                Ok(Geometry::Hairpin { cut, n_s, n_t: self.nt.unwrap_or(16) })
            }
            (false, Some(SolutionKind::Plane)) => {
                unused(&[("strip-cut", self.strip_cut.is_some()), ("ntheta", self.ntheta.is_some()), ("ns", self.ns.is_some()), ("nt", self.nt.is_some()), ("nrings", self.nrings.is_some())])?;
                let side = positive("radius", self.radius.ok_or_else(|| argument("--radius (half side L) is required for plane"))?)?;
                Ok(Geometry::Plane { side, n: self.nr.unwrap_or_else(|| cells(side, 1.0 / 8.0)) })
            }
        }
    }
}

/// Create the parent directory of an output file.
fn prepare(path: &Path) -> fbindex::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(std::fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn run_index(args: &GeometryArgs) -> fbindex::Result<u8> {
    let geometry = args.geometry()?;
    let started = Instant::now();
    let mesh = geometry.mesh()?;
    let forms = fem::assemble(&mesh)?;
    let inertia = spectra::morse_index(&forms, args.zero_tol)?;
    let first = spectra::first_eigenpair(&forms)?;
    let mut r = ExperimentReport::new(&format!("index/{}", geometry.label()), args.zero_tol);
    r.input("geometry", geometry.label());
    r.input("zero_tol", args.zero_tol);
    r.value("index", inertia.n_neg as f64);
    r.value("n_zero", inertia.n_zero as f64);
    r.value("n_pos", inertia.n_pos as f64);
    r.value("dofs", forms.n_free() as f64);
    r.value("lambda1", first.lambda);
    r.count("index_consistent_with_lambda1", inertia.n_neg.min(1), usize::from(first.lambda < -args.zero_tol), "invariant");
    let r = r.finish(started);
    if let Some(path) = &args.out.out {
        prepare(path)?;
        r.write(path)?;
    }
    if args.out.json {
        println!("{}", r.to_json()?);
    } else {
        println!("index={}", inertia.n_neg);
        println!("n_zero={}", inertia.n_zero);
        println!("lambda1={:e}", first.lambda);
        println!("dofs={}", forms.n_free());
    }
    Ok(if r.pass { 0 } else { EXIT_FAILED })
}

fn run_oracle(disk: bool, out: &OutputArgs) -> fbindex::Result<u8> {
    if !disk {
        return Err(argument("oracle needs --disk (the disk form is the only exact spectrum)"));
    }
    let started = Instant::now();
    let neg = disk_oracle::negative_eigenvalues_q0()?;
    let pos = disk_oracle::positive_eigenvalues_q0(4, 2)?;
    let mut r = ExperimentReport::new("oracle/disk", disk_oracle::ROOT_TOL);
    for (i, e) in neg.iter().enumerate() {
        r.value(&format!("negative[{i}].lambda"), e.lambda);
        r.value(&format!("negative[{i}].k"), e.k as f64);
    }
    let mut pos = pos;
    pos.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    for (i, e) in pos.iter().take(6).enumerate() {
        r.value(&format!("nonnegative[{i}].lambda"), e.lambda);
        r.value(&format!("nonnegative[{i}].k"), e.k as f64);
    }
    let index: usize = neg.iter().map(|e| e.multiplicity).sum();
    r.count("index", index, 1, "exact-count");
    let r = r.finish(started);
    if let Some(path) = &out.out {
        prepare(path)?;
        r.write(path)?;
    }
    if out.json {
        println!("{}", r.to_json()?);
    } else {
        for e in &neg {
            println!("negative eigenvalue: lambda={:.14} (k={}, x={:.14})", e.lambda, e.k, e.x);
        }
        for e in pos.iter().take(6) {
            println!("nonnegative eigenvalue: lambda={:.14} (k={}, multiplicity {})", e.lambda, e.k, e.multiplicity);
        }
        println!("index={index}");
    }
    Ok(if r.pass { 0 } else { EXIT_FAILED })
}

fn run_verify(all: bool, criteria: &[u8], seed: u64, out: &OutputArgs) -> fbindex::Result<u8> {
    let ids: Vec<u8> = match (all, criteria.is_empty()) {
        (true, true) => CRITERIA.iter().map(|c| c.0).collect(),
        (false, false) => criteria.to_vec(),
        (true, false) => return Err(argument("give either --all or --criterion, not both")),
        (false, true) => return Err(argument("verify needs --all or at least one --criterion")),
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(argument(format!("no acceptance criterion {bad}; valid ids are 1 to {}", CRITERIA.len())));
    }
    let outcomes: Vec<CriterionOutcome> =
        ids.par_iter().map(|&id| acceptance::run_criterion_seeded(id, seed)).collect::<fbindex::Result<_>>()?;
    if let Some(path) = &out.out {
        let reports: Vec<ExperimentReport> = outcomes.iter().flat_map(|o| o.reports.iter().cloned()).collect();
        prepare(path)?;
        report::write_all(&reports, path)?;
    }
    if out.json {
        println!("{}", serde_json::to_string_pretty(&outcomes)?);
    } else {
        for o in &outcomes {
            println!("{}", o.line());
        }
        let passed = outcomes.iter().filter(|o| o.pass).count();
        println!("{passed}/{} criteria passed", outcomes.len());
    }
    Ok(if outcomes.iter().all(|o| o.pass) { 0 } else { EXIT_FAILED })
}

fn run_mesh(args: &GeometryArgs) -> fbindex::Result<u8> {
    let geometry = args.geometry()?;
    let path = args.out.out.as_ref().ok_or_else(|| argument("mesh needs --out PATH"))?;
    let mesh = geometry.mesh()?;
    prepare(path)?;
    meshgen::store(&mesh, path)?;
    println!(
        "{}: {} vertices, {} triangles, {} boundary edges, min angle {:.2} deg -> {}",
        geometry.label(),
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len(),
        mesh.min_angle_deg(),
        path.display()
    );
    Ok(0)
}

fn run_dump(args: &GeometryArgs) -> fbindex::Result<u8> {
    let geometry = args.geometry()?;
    let dir = args.out.out.as_ref().ok_or_else(|| argument("dump-matrices needs --out DIR"))?;
    std::fs::create_dir_all(dir)?;
    let mesh = geometry.mesh()?;
    let forms = fem::assemble(&mesh)?;
    let write = |name: &str, text: String| -> fbindex::Result<()> { write_atomic(&dir.join(name), text.as_bytes()) };
    write("stiffness.txt", forms.a.to_coordinate_text())?;
    write("mass.txt", forms.m.to_coordinate_text())?;
    write("boundary.txt", forms.b.to_coordinate_text())?;
    write("index_matrix.txt", forms.k.to_coordinate_text())?;
    write("free_mass.txt", forms.m_free.to_coordinate_text())?;
    let dofs: Vec<String> = forms.free_dofs.iter().map(|d| d.to_string()).collect();
    write("free_dofs.txt", dofs.join("\n") + "\n")?;
    meshgen::store(&mesh, &dir.join("mesh.fbmesh"))?;
    println!("{}: {} vertices, {} free dofs -> {}", geometry.label(), forms.n_vertices(), forms.n_free(), Path::new(dir).display());
    Ok(0)
}

fn configure_threads() -> fbindex::Result<()> {
    let Ok(value) = std::env::var("FBINDEX_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| argument(format!("FBINDEX_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Numerical(e.to_string()))
}

fn run(cli: Cli) -> fbindex::Result<u8> {
    configure_threads()?;
    match &cli.command {
        Command::Index(args) => run_index(args),
        Command::Oracle { disk, out } => run_oracle(*disk, out),
        Command::Verify { all, criterion, seed, out } => run_verify(*all, criterion, *seed, out),
        Command::Mesh(args) => run_mesh(args),
        Command::DumpMatrices(args) => run_dump(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fbindex: {e}");
            ExitCode::from(if e.is_argument_error() { EXIT_ARGUMENT } else { EXIT_NUMERICAL })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(args: &[&str]) -> fbindex::Result<Geometry> {
        let mut argv = vec!["fbindex", "index"];
        argv.extend_from_slice(args);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Index(g) => g.geometry(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_follow_the_truncation_families() {
        assert_eq!(
            geometry(&["--solution", "disk-complement", "--radius", "3"]).unwrap(),
            Geometry::Annulus { radius: 3.0, n_r: 32, n_theta: 64 }
        );
        assert_eq!(geometry(&["--solution", "hairpin", "--strip-cut", "2"]).unwrap(), Geometry::Hairpin { cut: 2.0, n_s: 32, n_t: 16 });
        assert_eq!(geometry(&["--solution", "plane", "--radius", "2"]).unwrap(), Geometry::Plane { side: 2.0, n: 16 });
        assert_eq!(geometry(&["--disk"]).unwrap(), Geometry::Disk { n_rings: 16 });
    }

    #[test]
    fn conflicting_flags_are_rejected() {
        assert!(geometry(&["--disk", "--solution", "plane"]).unwrap_err().is_argument_error());
        assert!(geometry(&["--disk", "--radius", "2"]).unwrap_err().is_argument_error());
        assert!(geometry(&[]).unwrap_err().is_argument_error());
        assert!(geometry(&["--solution", "hairpin", "--strip-cut", "nan"]).unwrap_err().is_argument_error());
    }
}
