use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use super::generators::{
    generate_spherical_3_4, generate_spherical_5_12, generate_torus, TorusParams, SPHERICAL_5_12_RING_HEIGHT,
    TORUS_DEFAULT,
};
use super::norms::{eoc, prolong, ErrorNorms, NormMatrices};
use super::output::write_vtk;
use super::problem::{Discretization, Problem, Rhs};
use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::quadrature::RuleSpec;
use crate::solve::{consistency_error, DEFAULT_TOL};
use crate::topology::{ensure_isolated_evs, read_obj, ControlMesh, MAX_SUBDIVISION_LEVELS};

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Torus(TorusParams),
    Spherical34,
    Spherical512,
    File(PathBuf),
}

impl Geometry {
    /// The control mesh as given, before any automatic subdivision.
    pub fn control_mesh(&self) -> Result<ControlMesh> {
        match self {
            Geometry::Torus(p) => generate_torus(*p),
            Geometry::Spherical34 => Ok(generate_spherical_3_4()),
            Geometry::Spherical512 => Ok(generate_spherical_5_12()),
            Geometry::File(path) => read_obj(BufReader::new(File::open(path)?)),
        }
    }

    pub fn default_rhs(&self) -> Rhs {
        match self {
            Geometry::Torus(_) => Rhs::Torus,
            _ => Rhs::Sphere,
        }
    }

    fn describe(&self) -> String {
        match self {
            Geometry::Torus(p) => format!("torus n={} m={} major={} minor={}", p.n, p.m, p.major, p.minor),
            Geometry::Spherical34 => "spherical-3-4".into(),
            Geometry::Spherical512 => format!("spherical-5-12 ring_height={SPHERICAL_5_12_RING_HEIGHT}"),
            Geometry::File(p) => format!("file {}", p.display()),
        }
    }
}

/// A convergence study; see [`StudyConfig::parse`] for the file format.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub geometry: Geometry,
    pub problem: Problem,
    pub rules: Vec<RuleSpec>,
    pub rhs: Rhs,
    /// Refinement levels of the simulation mesh, i.e. after the automatic
    /// subdivision that separates adjacent extraordinary vertices.
    pub levels: Vec<usize>,
    pub reference_extra_levels: usize,
    pub tolerance: f64,
    /// Extra refinements applied to VTK output.
    pub vtk_levels: usize,
}

impl StudyConfig {
    pub fn new(geometry: Geometry, problem: Problem, rules: Vec<RuleSpec>, levels: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            rhs: geometry.default_rhs(),
            geometry,
            problem,
            rules,
            levels,
            reference_extra_levels: 1,
            tolerance: DEFAULT_TOL,
            vtk_levels: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys:
    /// `geometry` (torus, spherical-3-4, spherical-5-12, file), `mesh` (OBJ
    /// path for `file`), `torus_n`, `torus_m`, `torus_major`, `torus_minor`,
    /// `problem`, `quadrature` (comma-separated rules), `rhs`, `levels`
    /// (comma-separated), `reference_extra_levels`, `tolerance`, `vtk_levels`.
    /// Relative mesh paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut geometry = None;
        let mut mesh = None;
        let mut torus = TORUS_DEFAULT;
        let mut problem = None;
        let mut rules = None;
        let mut rhs = None;
        let mut levels = None;
        let mut extra = 1;
        let mut tolerance = DEFAULT_TOL;
        let mut vtk_levels = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected key = value, got '{content}'") })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| Error::Parse { line, message: format!("{key}: {e}") };
            match key {
                "geometry" => geometry = Some(value.to_ascii_lowercase()),
                "mesh" => mesh = Some(base_dir.join(value)),
                "torus_n" => torus.n = value.parse().map_err(|e| bad(&e))?,
                "torus_m" => torus.m = value.parse().map_err(|e| bad(&e))?,
                "torus_major" => torus.major = value.parse().map_err(|e| bad(&e))?,
                "torus_minor" => torus.minor = value.parse().map_err(|e| bad(&e))?,
                "problem" => {
                    if value.eq_ignore_ascii_case("eigen") {
                        return Err(Error::Config(
                            "eigenvalue runs have no error norms; use the eigen command".into(),
                        ));
                    }
                    problem = Some(value.parse().map_err(|e: Error| bad(&e))?)
                }
                "quadrature" => {
                    rules = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().parse::<RuleSpec>())
                            .collect::<Result<Vec<_>>>()
                            .map_err(|e| bad(&e))?,
                    )
                }
                "rhs" => rhs = Some(value.parse().map_err(|e: Error| bad(&e))?),
                "levels" => {
                    levels = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| bad(&e))?,
                    )
                }
                "reference_extra_levels" => extra = value.parse().map_err(|e| bad(&e))?,
                "tolerance" => tolerance = value.parse().map_err(|e| bad(&e))?,
                "vtk_levels" => vtk_levels = value.parse().map_err(|e| bad(&e))?,
                _ => return Err(Error::Parse { line, message: format!("unknown key '{key}'") }),
            }
        }
        let geometry = match geometry.as_deref() {
            Some("torus") => Geometry::Torus(torus),
            Some("spherical-3-4" | "sph34") => Geometry::Spherical34,
            Some("spherical-5-12" | "sph512") => Geometry::Spherical512,
            Some("file") => Geometry::File(mesh.ok_or_else(|| Error::Config("geometry = file needs mesh = <path>".into()))?),
            Some(other) => return Err(Error::Config(format!("unknown geometry '{other}'"))),
            None => return Err(Error::Config("missing key 'geometry'".into())),
        };
        let cfg = Self {
            rhs: rhs.unwrap_or_else(|| geometry.default_rhs()),
            geometry,
            problem: problem.ok_or_else(|| Error::Config("missing key 'problem'".into()))?,
            rules: rules.ok_or_else(|| Error::Config("missing key 'quadrature'".into()))?,
            levels: levels.ok_or_else(|| Error::Config("missing key 'levels'".into()))?,
            reference_extra_levels: extra,
            tolerance,
            vtk_levels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::Config("no quadrature rule given".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::Config("a study needs at least two levels".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("levels must be strictly increasing, got {:?}", self.levels)));
        }
        if self.reference_extra_levels == 0 {
            return Err(Error::Config("the reference level must exceed the finest study level".into()));
        }
        let reference = self.reference_level();
        if reference > MAX_SUBDIVISION_LEVELS {
            return Err(Error::Config(format!(
                "reference level {reference} exceeds the limit of {MAX_SUBDIVISION_LEVELS}"
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Config(format!("tolerance {} outside (0, 1)", self.tolerance)));
        }
        Ok(())
    }

    pub fn reference_level(&self) -> usize {
        self.levels.last().copied().unwrap_or(0) + self.reference_extra_levels
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub vertices: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    pub iterations: usize,
}

/// Errors of one quadrature rule across the study levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rule: RuleSpec,
    pub rows: Vec<LevelResult>,
    /// `[L², H¹-semi, H²-semi]` rates per consecutive pair of levels.
    pub eoc: Vec<[f64; 3]>,
}

impl ErrorReport {
    pub fn new(rule: RuleSpec, rows: Vec<LevelResult>) -> Result<Self> {
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let rates = [
            eoc(&rows.iter().map(|r| r.errors.l2).collect::<Vec<_>>(), &h)?,
            eoc(&rows.iter().map(|r| r.errors.h1_semi).collect::<Vec<_>>(), &h)?,
            eoc(&rows.iter().map(|r| r.errors.h2_semi).collect::<Vec<_>>(), &h)?,
        ];
        let eoc = (0..h.len() - 1).map(|k| [rates[0][k], rates[1][k], rates[2][k]]).collect();
        Ok(Self { rule, rows, eoc })
    }

    /// Rates of the finest pair of levels.
    pub fn final_eoc(&self) -> [f64; 3] {
        *self.eoc.last().expect("at least two levels")
    }
}

pub struct StudyOutcome {
    pub config: StudyConfig,
    /// Whether the input mesh was refined once to separate extraordinary vertices.
    pub auto_subdivided: bool,
    pub reference_vertices: usize,
    pub reference_iterations: usize,
    pub reports: Vec<ErrorReport>,
    /// Finest study mesh and the solution of every rule on it.
    pub finest_mesh: ControlMesh,
    pub finest_solutions: Vec<Vec<f64>>,
}

/// Runs the study: per level and rule assemble and solve, prolong to the
/// reference mesh, and measure the error against the reference solution.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    let input = cfg.geometry.control_mesh()?;
    let base = ensure_isolated_evs(&input, true)?;
    let auto_subdivided = base.num_vertices() != input.num_vertices();
    let reference_level = cfg.reference_level();
    let mut chain = vec![base];
    for _ in 0..reference_level {
        let next = chain.last().expect("non-empty").subdivide();
        chain.push(next);
    }
    let reference_mesh = &chain[reference_level];
    let reference = {
        let asm = Assembler::new(reference_mesh)?;
        Discretization::new(&asm, cfg.problem, cfg.problem.reference_rule(), cfg.rhs)?.solve(cfg.tolerance)?
    };
    let norms = NormMatrices::new(reference_mesh)?;
    let finest = *cfg.levels.last().expect("validated");
    let mut reports = Vec::with_capacity(cfg.rules.len());
    let mut finest_solutions = Vec::with_capacity(cfg.rules.len());
    for &rule in &cfg.rules {
        let mut rows = Vec::with_capacity(cfg.levels.len());
        for &level in &cfg.levels {
            let mesh = &chain[level];
            let asm = Assembler::new(mesh)?;
            let solution = Discretization::new(&asm, cfg.problem, rule, cfg.rhs)?.solve(cfg.tolerance)?;
            let fine = prolong(&solution.u, &chain, level, reference_level)?;
            rows.push(LevelResult {
                level,
                vertices: mesh.num_vertices(),
                h: mesh.mesh_size(),
                errors: norms.error_norms(&fine, &reference.u)?,
                iterations: solution.iterations,
            });
            if level == finest {
                finest_solutions.push(solution.u);
            }
        }
        reports.push(ErrorReport::new(rule, rows)?);
    }
    Ok(StudyOutcome {
        config: cfg.clone(),
        auto_subdivided,
        reference_vertices: reference_mesh.num_vertices(),
        reference_iterations: reference.iterations,
        reports,
        finest_mesh: chain.swap_remove(finest),
        finest_solutions,
    })
}

impl StudyOutcome {
    /// Error table with one row per level and rule followed by the eoc rows
    /// of that rule (rates in the error columns).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "rule,kind,level,vertices,h,l2,h1_semi,h2_semi,log10_h,log10_l2,log10_h1_semi,log10_h2_semi,iterations"
        )?;
        for report in &self.reports {
            for r in &report.rows {
                let e = r.errors;
                writeln!(
                    out,
                    "{},error,{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    report.rule,
                    r.level,
                    r.vertices,
                    r.h,
                    e.l2,
                    e.h1_semi,
                    e.h2_semi,
                    r.h.log10(),
                    e.l2.log10(),
                    e.h1_semi.log10(),
                    e.h2_semi.log10(),
                    r.iterations
                )?;
            }
            for (pair, rates) in report.rows.windows(2).zip(&report.eoc) {
                writeln!(
                    out,
                    "{},eoc,{}-{},,,{:e},{:e},{:e},,,,,",
                    report.rule, pair[0].level, pair[1].level, rates[0], rates[1], rates[2]
                )?;
            }
        }
        Ok(())
    }

    /// Plain-text record of everything that determines the CSV.
    pub fn write_manifest<W: Write>(&self, mut out: W) -> Result<()> {
        let cfg = &self.config;
        let rules: Vec<String> = cfg.rules.iter().map(ToString::to_string).collect();
        let levels: Vec<String> = cfg.levels.iter().map(ToString::to_string).collect();
        writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "geometry = {}", cfg.geometry.describe())?;
        writeln!(out, "auto_subdivided = {}", self.auto_subdivided)?;
        writeln!(out, "problem = {}", cfg.problem)?;
        writeln!(out, "rhs = {}", cfg.rhs)?;
        writeln!(out, "quadrature = {}", rules.join(","))?;
        writeln!(out, "gauss_degree = {}", cfg.problem.gauss_degree())?;
        writeln!(out, "levels = {}", levels.join(","))?;
        writeln!(out, "reference_level = {}", cfg.reference_level())?;
        writeln!(out, "reference_rule = {}", cfg.problem.reference_rule())?;
        writeln!(out, "reference_vertices = {}", self.reference_vertices)?;
        writeln!(out, "reference_iterations = {}", self.reference_iterations)?;
        writeln!(out, "error_rules = ga(6) regular, ag(6,3) extraordinary")?;
        writeln!(out, "mean_constraint_rule = ga(6) regular, ag(6,3) extraordinary")?;
        writeln!(out, "tolerance = {:e}", cfg.tolerance)?;
        writeln!(out, "preconditioner = jacobi")?;
        Ok(())
    }

    /// Writes the CSV to `csv_path`, the manifest next to it and one VTK file
    /// per rule with the finest-level solution. Returns the written paths.
    pub fn write_artifacts(&self, csv_path: &Path) -> Result<Vec<PathBuf>> {
        let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
        let dir = csv_path.parent().unwrap_or(Path::new(""));
        let mut written = vec![csv_path.to_path_buf()];
        self.write_csv(std::io::BufWriter::new(File::create(csv_path)?))?;
        let manifest = dir.join(format!("{stem}.manifest"));
        self.write_manifest(std::io::BufWriter::new(File::create(&manifest)?))?;
        written.push(manifest);
        for (report, u) in self.reports.iter().zip(&self.finest_solutions) {
            let tag = report.rule.to_string().replace(':', "");
            let path = dir.join(format!("{stem}_{tag}.vtk"));
            let title = format!("{} {} level {}", self.config.problem, report.rule, self.finest_mesh.level());
            write_vtk(
                &self.finest_mesh,
                &[("u", u)],
                self.config.vtk_levels,
                &title,
                std::io::BufWriter::new(File::create(&path)?),
            )?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Consistency errors of approximate rules along a refinement sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub problem: Problem,
    pub rules: Vec<RuleSpec>,
    pub h: Vec<f64>,
    /// `errors[r][k]` for rule `r` on level `k`.
    pub errors: Vec<Vec<f64>>,
}

impl ConsistencyReport {
    pub fn eoc(&self, rule: usize) -> Result<Vec<f64>> {
        eoc(&self.errors[rule], &self.h)
    }
}

/// For each level, solves with the problem's reference rule to get `u_h` and
/// measures `sup_w |a(u_h, w) − ã(u_h, w)| / ‖w‖_a` for every rule in `rules`.
pub fn consistency_study(
    base: &ControlMesh,
    problem: Problem,
    rules: &[RuleSpec],
    levels: &[usize],
    rhs: Rhs,
    tol: f64,
) -> Result<ConsistencyReport> {
    let mut report = ConsistencyReport {
        problem,
        rules: rules.to_vec(),
        h: Vec::new(),
        errors: vec![Vec::new(); rules.len()],
    };
    let mut mesh = ensure_isolated_evs(base, true)?;
    let mut current = 0;
    for &level in levels {
        while current < level {
            mesh = mesh.subdivide();
            current += 1;
        }
        let asm = Assembler::new(&mesh)?;
        let exact = Discretization::new(&asm, problem, problem.reference_rule(), rhs)?;
        let u = exact.solve(tol)?.u;
        for (r, &rule) in rules.iter().enumerate() {
            let approx = if rule == RuleSpec::MidEdge {
                asm.midedge_matrix(problem.operator())?
            } else {
                asm.matrix(problem.operator(), &problem.cell_rules(rule)?)?
            };
            report.errors[r].push(consistency_error(&exact.stiffness, &approx, &u, &exact.mean, tol)?);
        }
        report.h.push(mesh.mesh_size());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# torus study
geometry = torus
torus_n = 6
problem = laplace   # second order
quadrature = ga, me
levels = 0, 1
";

    #[test]
    fn parse_sample() {
        let cfg = StudyConfig::parse(SAMPLE, Path::new(".")).unwrap();
        assert_eq!(cfg.geometry, Geometry::Torus(TorusParams { n: 6, ..TORUS_DEFAULT }));
        assert_eq!(cfg.problem, Problem::Laplace);
        assert_eq!(cfg.rules, vec![RuleSpec::Gauss, RuleSpec::MidEdge]);
        assert_eq!(cfg.rhs, Rhs::Torus);
        assert_eq!(cfg.levels, vec![0, 1]);
        assert_eq!(cfg.reference_level(), 2);
    }

    #[test]
    fn parse_errors() {
        let parse = |s: &str| StudyConfig::parse(s, Path::new("."));
        assert!(matches!(parse("geometry torus"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("color = red"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("geometry = torus\nlevels = 1, x"), Err(Error::Parse { line: 2, .. })));
        let base = "geometry = torus\nproblem = laplace\nquadrature = ga\n";
        assert!(matches!(parse(&format!("{base}levels = 2, 1")), Err(Error::Config(_))));
        assert!(matches!(parse(&format!("{base}levels = 1")), Err(Error::Config(_))));
        assert!(matches!(parse(&format!("{base}levels = 1, 2\nreference_extra_levels = 0")), Err(Error::Config(_))));
        assert!(matches!(parse(&format!("{base}levels = 8, 10")), Err(Error::Config(_))));
        assert!(matches!(parse("geometry = torus\nproblem = eigen"), Err(Error::Config(_))));
        assert!(matches!(parse("geometry = file\nproblem = laplace\nquadrature = ga\nlevels = 0,1"), Err(Error::Config(_))));
    }

    #[test]
    fn small_study_shape() {
        let cfg = StudyConfig::new(
            Geometry::Torus(TorusParams { n: 6, m: 6, ..TORUS_DEFAULT }),
            Problem::Laplace,
            vec![RuleSpec::Gauss],
            vec![0, 1],
        )
        .unwrap();
        let outcome = run_study(&cfg).unwrap();
        assert!(!outcome.auto_subdivided);
        assert_eq!(outcome.reference_vertices, 36 * 16);
        let mut csv = Vec::new();
        outcome.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 + 1);
        assert!(text.lines().nth(3).unwrap().starts_with("ga,eoc,0-1,"));
    }
}
