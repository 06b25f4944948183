use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::norms::error_rules;
use crate::assembly::{Assembler, Operator, SparseSymMatrix};
use crate::error::{Error, Result};
use crate::quadrature::{CellRules, RuleSpec};
use crate::solve::{default_max_iter, solve_zero_mean, ConstrainedSystem, SolveOutcome};
use crate::topology::Point3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    /// `-Δ_M u = f`
    Laplace,
    /// `Δ_M² u = f`
    BiLaplace,
}

impl Problem {
    pub fn operator(self) -> Operator {
        match self {
            Problem::Laplace => Operator::Laplace,
            Problem::BiLaplace => Operator::BiLaplace,
        }
    }

    /// Gaussian degree that preserves the optimal order for the problem.
    pub fn gauss_degree(self) -> usize {
        match self {
            Problem::Laplace => 6,
            Problem::BiLaplace => 4,
        }
    }

    /// Rule used for reference solutions.
    pub fn reference_rule(self) -> RuleSpec {
        match self {
            Problem::Laplace => RuleSpec::Adaptive(3),
            Problem::BiLaplace => RuleSpec::Adaptive(6),
        }
    }

    pub fn cell_rules(self, rule: RuleSpec) -> Result<CellRules> {
        rule.cell_rules(self.gauss_degree())
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Laplace => "laplace",
            Problem::BiLaplace => "bilaplace",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "laplace" => Ok(Problem::Laplace),
            "bilaplace" => Ok(Problem::BiLaplace),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// Right-hand sides of the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    /// `sin(πy₁) sin(πy₂) sin(πy₃)`
    Torus,
    /// `sin(3πy₁) sin(3πy₂) sin(3πy₃)`
    Sphere,
}

impl Rhs {
    pub fn eval(self, y: &Point3) -> f64 {
        let k = match self {
            Rhs::Torus => PI,
            Rhs::Sphere => 3.0 * PI,
        };
        (k * y.x).sin() * (k * y.y).sin() * (k * y.z).sin()
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rhs::Torus => "torus",
            Rhs::Sphere => "sphere",
        })
    }
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "torus" => Ok(Rhs::Torus),
            "sphere" => Ok(Rhs::Sphere),
            other => Err(Error::Config(format!("unknown right-hand side '{other}'"))),
        }
    }
}

/// Quadrature-modified stiffness matrix and load vector of one problem.
pub struct Discretization {
    pub stiffness: SparseSymMatrix,
    pub load: Vec<f64>,
    /// `∫ φ_j da`, always integrated with the error rules so that the
    /// zero-mean constraint does not depend on the rule under study.
    pub mean: Vec<f64>,
}

impl Discretization {
    /// Assembles with the given rule; the mid-edge rule uses the edge
    /// iterator, which produces the same matrix as the cell loop.
    pub fn new(asm: &Assembler<'_>, problem: Problem, rule: RuleSpec, rhs: Rhs) -> Result<Self> {
        let f = move |y: &Point3| rhs.eval(y);
        let (stiffness, load) = if rule == RuleSpec::MidEdge {
            (asm.midedge_matrix(problem.operator())?, asm.midedge_rhs(&f)?)
        } else {
            let rules = problem.cell_rules(rule)?;
            (asm.matrix(problem.operator(), &rules)?, asm.rhs(&rules, &f)?)
        };
        let mean = asm.rhs(&error_rules(), &|_| 1.0)?;
        Ok(Self { stiffness, load, mean })
    }

    pub fn solve(&self, tol: f64) -> Result<SolveOutcome> {
        let sys = ConstrainedSystem { s: &self.stiffness, b: &self.load, m: &self.mean };
        solve_zero_mean(sys, tol, default_max_iter(self.load.len()))
    }
}
