use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use subdiv_iga::assembly::{Assembler, Operator};
use subdiv_iga::basis::midedge_table;
use subdiv_iga::harness::{
    generate_spherical_3_4, generate_spherical_5_12, generate_torus, run_study, write_vtk, Discretization,
    Problem, Rhs, StudyConfig, TorusParams, TORUS_DEFAULT,
};
use subdiv_iga::quadrature::RuleSpec;
use subdiv_iga::solve::{eigen_solve, DEFAULT_EIGEN_TOL, DEFAULT_TOL};
use subdiv_iga::topology::{ensure_isolated_evs, read_obj, write_obj, SubdivisionConfig};
use subdiv_iga::{ControlMesh, Error};

#[derive(Parser)]
#[command(name = "subdiv-iga", version, about = "Isogeometric analysis on Loop subdivision surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Torus,
    Sph34,
    Sph512,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    Mass,
    Laplace,
    Bilaplace,
}

#[derive(Subcommand)]
enum Command {
    /// Write one of the built-in control meshes as OBJ.
    GenerateMesh {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long)]
        out: PathBuf,
        /// Torus samples around the central axis.
        #[arg(long, default_value_t = TORUS_DEFAULT.n)]
        torus_n: usize,
        /// Torus samples around the tube.
        #[arg(long, default_value_t = TORUS_DEFAULT.m)]
        torus_m: usize,
        #[arg(long, default_value_t = TORUS_DEFAULT.major)]
        major: f64,
        #[arg(long, default_value_t = TORUS_DEFAULT.minor)]
        minor: f64,
    },
    /// Apply Loop subdivision to an OBJ mesh.
    Subdivide {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        levels: usize,
        /// Output OBJ; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the Laplace-Beltrami or bi-Laplace problem and write the solution as VTK.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        problem: Problem,
        #[arg(long, default_value = "ga")]
        quadrature: RuleSpec,
        #[arg(long, default_value = "torus")]
        rhs: Rhs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Refinements of the visualization mesh.
        #[arg(long, default_value_t = 1)]
        viz_levels: usize,
        /// Residual history as CSV.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Compute the smallest non-zero Laplace-Beltrami eigenpairs.
    Eigen {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "ga")]
        quadrature: RuleSpec,
        #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        viz_levels: usize,
    },
    /// Run a convergence study described by a key=value config file.
    ConvergenceStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the mid-edge lookup table of one valence as CSV.
    MidedgeTable {
        #[arg(long)]
        valence: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a matrix and write it in MatrixMarket format.
    Assemble {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        operator: OperatorArg,
        #[arg(long, default_value = "ga")]
        quadrature: RuleSpec,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load_mesh(path: &Path) -> Result<ControlMesh, Error> {
    read_obj(BufReader::new(File::open(path)?))
}

/// Refines once when extraordinary vertices are adjacent.
fn simulation_mesh(path: &Path) -> Result<ControlMesh, Error> {
    let input = load_mesh(path)?;
    let mesh = ensure_isolated_evs(&input, true)?;
    if mesh.num_vertices() != input.num_vertices() {
        eprintln!("note: subdivided once to separate adjacent extraordinary vertices");
    }
    Ok(mesh)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::GenerateMesh { shape, out, torus_n, torus_m, major, minor } => {
            let mesh = match shape {
                Shape::Torus => generate_torus(TorusParams { n: torus_n, m: torus_m, major, minor })?,
                Shape::Sph34 => generate_spherical_3_4(),
                Shape::Sph512 => generate_spherical_5_12(),
            };
            write_obj(&mesh, create(&out)?)
        }
        Command::Subdivide { input, levels, out } => {
            let mesh = SubdivisionConfig::new(levels, false)?.apply(&load_mesh(&input)?)?;
            match out {
                Some(path) => write_obj(&mesh, create(&path)?),
                None => write_obj(&mesh, io::stdout().lock()),
            }
        }
        Command::Solve { input, problem, quadrature, rhs, out, tol, viz_levels, telemetry } => {
            let mesh = simulation_mesh(&input)?;
            let asm = Assembler::new(&mesh)?;
            let outcome = Discretization::new(&asm, problem, quadrature, rhs)?.solve(tol)?;
            if let Some(path) = telemetry {
                outcome.write_telemetry(create(&path)?)?;
            }
            let (lo, hi) = outcome.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            println!(
                "vertices {} iterations {} coefficient range [{lo:e}, {hi:e}]",
                mesh.num_vertices(),
                outcome.iterations
            );
            let title = format!("{problem} {quadrature} rhs {rhs}");
            write_vtk(&mesh, &[("u", &outcome.u)], viz_levels, &title, create(&out)?)
        }
        Command::Eigen { input, count, out, quadrature, tol, viz_levels } => {
            let mesh = simulation_mesh(&input)?;
            let asm = Assembler::new(&mesh)?;
            let rules = quadrature.cell_rules(Problem::Laplace.gauss_degree())?;
            let s = asm.matrix(Operator::Laplace, &rules)?;
            let m = asm.matrix(Operator::Mass, &rules)?;
            let result = eigen_solve(&s, &m, count, tol)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "index,eigenvalue,residual")?;
            for (k, (value, residual)) in result.values.iter().zip(&result.residuals).enumerate() {
                writeln!(stdout, "{},{value:e},{residual:e}", k + 1)?;
            }
            for c in &result.clusters {
                eprintln!("note: eigenvalues {}..{} form a cluster", c.start + 1, c.end);
            }
            let names: Vec<String> = (1..=count).map(|k| format!("mode_{k}")).collect();
            let fields: Vec<(&str, &[f64])> =
                names.iter().zip(&result.vectors).map(|(n, v)| (n.as_str(), v.as_slice())).collect();
            write_vtk(&mesh, &fields, viz_levels, "laplace-beltrami eigenmodes", create(&out)?)
        }
        Command::ConvergenceStudy { config, out } => {
            let cfg = StudyConfig::from_file(&config)?;
            let outcome = run_study(&cfg)?;
            for report in &outcome.reports {
                let [l2, h1, h2] = report.final_eoc();
                println!("{} final eoc: L2 {l2:.2}  H1 {h1:.2}  H2 {h2:.2}", report.rule);
            }
            for path in outcome.write_artifacts(&out)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::MidedgeTable { valence, out } => {
            let table = midedge_table(valence)?;
            match out {
                Some(path) => table.write_csv(create(&path)?),
                None => table.write_csv(io::stdout().lock()),
            }
        }
        Command::Assemble { input, operator, quadrature, out } => {
            let mesh = simulation_mesh(&input)?;
            let asm = Assembler::new(&mesh)?;
            let (op, problem) = match operator {
                OperatorArg::Mass => (Operator::Mass, Problem::Laplace),
                OperatorArg::Laplace => (Operator::Laplace, Problem::Laplace),
                OperatorArg::Bilaplace => (Operator::BiLaplace, Problem::BiLaplace),
            };
            let matrix = if quadrature == RuleSpec::MidEdge {
                asm.midedge_matrix(op)?
            } else {
                asm.matrix(op, &problem.cell_rules(quadrature)?)?
            };
            matrix.write_matrix_market(create(&out)?)
        }
    }
}
