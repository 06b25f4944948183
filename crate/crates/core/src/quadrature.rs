//! Quadrature rules on the unit triangle `{ξ1, ξ2 ≥ 0, ξ1 + ξ2 ≤ 1}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    exact_degree: usize,
}

impl QuadratureRule {
    pub fn new(points: Vec<[f64; 2]>, weights: Vec<f64>, exact_degree: usize) -> Self {
        assert_eq!(points.len(), weights.len());
        Self { points, weights, exact_degree }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest total degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }

    /// Maps the rule affinely onto the triangle `corners`, scaling weights by
    /// the area ratio.
    fn mapped(&self, corners: [[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let [p0, p1, p2] = corners;
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
        let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        self.points.iter().zip(&self.weights).map(move |(q, w)| {
            let x = [p0[0] + q[0] * e1[0] + q[1] * e2[0], p0[1] + q[0] * e1[1] + q[1] * e2[1]];
            (x, w * det)
        })
    }
}

/// Symmetric Gaussian rule: 6 points for degree 4, 12 points for degree 6.
pub fn gauss_rule(degree: usize) -> Result<QuadratureRule> {
    let mut rule = RuleBuilder::default();
    match degree {
        4 => {
            rule.s21(0.108_103_018_168_070_227_36, 0.111_690_794_839_005_732_85);
            rule.s21(0.816_847_572_980_458_513_08, 0.054_975_871_827_660_933_819);
        }
        6 => {
            rule.s21(0.501_426_509_658_178_741_61, 0.058_393_137_863_189_514_098);
            rule.s21(0.873_821_971_016_995_695_95, 0.025_422_453_185_103_356_385);
            rule.s111(
                0.053_145_049_844_817_087_953,
                0.310_352_451_033_784_188_11,
                0.041_425_537_809_186_898_092,
            );
        }
        _ => return Err(Error::UnsupportedDegree(degree)),
    }
    Ok(QuadratureRule::new(rule.points, rule.weights, degree))
}

/// Gaussian rule of the given degree on a ring decomposition that refines
/// towards the corner `(0,0)`: three triangles per level `l = 1..=levels` at
/// scale `2^{1-l}` and a closing corner triangle at scale `2^{-levels}`.
pub fn adaptive_rule(degree: usize, levels: usize) -> Result<QuadratureRule> {
    let base = gauss_rule(degree)?;
    if levels == 0 {
        return Err(Error::InvalidLevel(levels));
    }
    let ring = [
        [[0.0, 0.5], [0.0, 1.0], [0.5, 0.5]],
        [[0.0, 0.5], [0.5, 0.0], [0.5, 0.5]],
        [[0.5, 0.0], [0.5, 0.5], [1.0, 0.0]],
    ];
    let mut points = Vec::with_capacity((3 * levels + 1) * base.len());
    let mut weights = Vec::with_capacity(points.capacity());
    let mut scale = 1.0;
    for _ in 0..levels {
        for tri in &ring {
            let scaled = tri.map(|p| [scale * p[0], scale * p[1]]);
            for (x, w) in base.mapped(scaled) {
                points.push(x);
                weights.push(w);
            }
        }
        scale *= 0.5;
    }
    for (x, w) in base.mapped([[0.0, 0.0], [scale, 0.0], [0.0, scale]]) {
        points.push(x);
        weights.push(w);
    }
    Ok(QuadratureRule::new(points, weights, degree))
}

/// One point at the barycenter; exact for affine functions.
pub fn barycenter_rule() -> QuadratureRule {
    QuadratureRule::new(vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5], 1)
}

/// Edge midpoints with equal weights; exact for quadratics.
pub fn midedge_rule() -> QuadratureRule {
    QuadratureRule::new(vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]], vec![1.0 / 6.0; 3], 2)
}

#[derive(Default)]
struct RuleBuilder {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl RuleBuilder {
    /// Orbit of `(a, b, b)` with `b = (1 - a) / 2`.
    fn s21(&mut self, a: f64, w: f64) {
        let b = 0.5 * (1.0 - a);
        for bary in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push([bary[1], bary[2]]);
            self.weights.push(w);
        }
    }

    /// Orbit of `(a, b, c)` under all six permutations.
    fn s111(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for bary in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push([bary[1], bary[2]]);
            self.weights.push(w);
        }
    }
}

/// Exact integral of `ξ1^a ξ2^b` over the unit triangle: `a! b! / (a + b + 2)!`.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    fact(a) * fact(b) / fact(a + b + 2)
}

/// Quadrature choice for a whole mesh, as selected by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleSpec {
    /// Gaussian rule on every cell.
    Gauss,
    /// Adaptive rule with `L` levels on cells with an extraordinary corner,
    /// Gaussian elsewhere.
    Adaptive(usize),
    Barycenter,
    MidEdge,
}

impl RuleSpec {
    /// Rules for regular and extraordinary cells, using `degree` for the
    /// Gaussian variants.
    pub fn cell_rules(&self, degree: usize) -> Result<CellRules> {
        let (regular, irregular) = match *self {
            RuleSpec::Gauss => (gauss_rule(degree)?, gauss_rule(degree)?),
            RuleSpec::Adaptive(l) => (gauss_rule(degree)?, adaptive_rule(degree, l)?),
            RuleSpec::Barycenter => (barycenter_rule(), barycenter_rule()),
            RuleSpec::MidEdge => (midedge_rule(), midedge_rule()),
        };
        Ok(CellRules { regular, irregular })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Gauss => write!(f, "ga"),
            RuleSpec::Adaptive(l) => write!(f, "ag:{l}"),
            RuleSpec::Barycenter => write!(f, "bc"),
            RuleSpec::MidEdge => write!(f, "me"),
        }
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "ga" => Ok(RuleSpec::Gauss),
            "bc" => Ok(RuleSpec::Barycenter),
            "me" => Ok(RuleSpec::MidEdge),
            _ => {
                let levels = s
                    .strip_prefix("ag:")
                    .ok_or_else(|| Error::Config(format!("unknown quadrature rule '{s}'")))?;
                let l: usize = levels
                    .parse()
                    .map_err(|_| Error::Config(format!("bad adaptive level in '{s}'")))?;
                if l == 0 {
                    return Err(Error::InvalidLevel(l));
                }
                Ok(RuleSpec::Adaptive(l))
            }
        }
    }
}

/// The rules applied to regular cells and to cells with an extraordinary corner.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRules {
    pub regular: QuadratureRule,
    pub irregular: QuadratureRule,
}

impl CellRules {
    pub fn uniform(rule: QuadratureRule) -> Self {
        Self { regular: rule.clone(), irregular: rule }
    }

    pub fn for_cell(&self, irregular: bool) -> &QuadratureRule {
        if irregular {
            &self.irregular
        } else {
            &self.regular
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_rules() -> Vec<(String, QuadratureRule)> {
        let mut rules = vec![
            ("bc".to_string(), barycenter_rule()),
            ("me".to_string(), midedge_rule()),
        ];
        for p in [4, 6] {
            rules.push((format!("ga({p})"), gauss_rule(p).unwrap()));
            for l in 1..=4 {
                rules.push((format!("ag({p},{l})"), adaptive_rule(p, l).unwrap()));
            }
        }
        rules
    }

    #[test]
    fn examples() {
        let g6 = gauss_rule(6).unwrap();
        let g4 = gauss_rule(4).unwrap();
        assert_eq!((g4.len(), g6.len()), (6, 12));
        assert!((g6.integrate(|x, _| x.powi(6)) - 1.0 / 56.0).abs() < 1e-15);
        assert!((g4.integrate(|x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-15);
        let bc = barycenter_rule();
        assert!((bc.integrate(|x, _| x) - 1.0 / 6.0).abs() < 1e-16);
        assert!((bc.integrate(|x, _| x * x) - 1.0 / 18.0).abs() < 1e-16);
        let me = midedge_rule();
        assert!((me.integrate(|x, y| x * y) - 1.0 / 24.0).abs() < 1e-16);
        assert!((me.integrate(|x, _| x * x) - 1.0 / 12.0).abs() < 1e-16);
        // (1/6)(1/8 + 1/8 + 0) = 1/24, while the exact value is 1/20.
        assert!((me.integrate(|x, _| x.powi(3)) - 1.0 / 24.0).abs() < 1e-16);
        let ag = adaptive_rule(6, 2).unwrap();
        assert!((ag.integrate(|x, _| x.powi(6)) - 1.0 / 56.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_sweep() {
        for (name, rule) in all_rules() {
            let p = rule.exact_degree() as u32;
            for d in 0..=p {
                for a in 0..=d {
                    let q = rule.integrate(|x, y| x.powi(a as i32) * y.powi((d - a) as i32));
                    let exact = monomial_integral(a, d - a);
                    assert!((q - exact).abs() < 1e-13, "{name}: x^{a} y^{} off by {:e}", d - a, q - exact);
                }
            }
            let worst = (0..=p + 1)
                .map(|a| {
                    let b = p + 1 - a;
                    (rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32)) - monomial_integral(a, b)).abs()
                })
                .fold(0.0, f64::max);
            // Adaptive rules integrate each piece on triangles of size at most
            // 1/2, which shrinks the leading error term by 2^-(p+3).
            let threshold = if name.starts_with("ag") { 1e-6 * 0.5f64.powi(p as i32 + 3) } else { 1e-6 };
            assert!(worst > threshold, "{name}: degree {} error only {worst:e}", p + 1);
        }
    }

    #[test]
    fn adaptive_point_counts_and_positivity() {
        for l in 1..=6 {
            assert_eq!(adaptive_rule(6, l).unwrap().len(), (3 * l + 1) * 12);
            assert_eq!(adaptive_rule(4, l).unwrap().len(), (3 * l + 1) * 6);
        }
        for (_, rule) in all_rules() {
            assert!((rule.weights().iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for (p, w) in rule.points().iter().zip(rule.weights()) {
                assert!(*w > 0.0);
                assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-15);
                assert!(p[0] + p[1] > 0.0, "corner (0,0) must not be a node");
            }
        }
    }

    #[test]
    fn errors_and_parsing() {
        assert!(matches!(gauss_rule(5), Err(Error::UnsupportedDegree(5))));
        assert!(matches!(adaptive_rule(6, 0), Err(Error::InvalidLevel(0))));
        for s in ["ga", "ag:3", "bc", "me"] {
            assert_eq!(s.parse::<RuleSpec>().unwrap().to_string(), s);
        }
        assert_eq!("AG:6".parse::<RuleSpec>().unwrap(), RuleSpec::Adaptive(6));
        assert!("ag".parse::<RuleSpec>().is_err());
        assert!("ag:0".parse::<RuleSpec>().is_err());
        assert!("gauss".parse::<RuleSpec>().is_err());
    }
}
