//! Exact decision-region geometry on the 2-simplex for three classes: mode
//! cells, Bayes cells, and the disagreement region where a unique mode label
//! is not Bayes-optimal.
//!
//! Every region is an intersection of half-planes with the simplex triangle,
//! computed by successive Sutherland-Hodgman clipping in barycentric
//! coordinates with exact rationals. Floats appear only at SVG emission.

mod svg;

pub use svg::{render_svg, RenderOptions};

use num_traits::Zero;
use serde_json::Value;
use thiserror::Error;

use crate::cost_matrix::CanonicalCostMatrix;
use crate::decision::ProbVector;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("expected k={expected}, got k={found}")]
    WrongArity { expected: usize, found: usize },
    #[error("no region sets to render")]
    EmptyInput,
}

/// Which decision rule a region set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Mode,
    Bayes,
    Disagreement,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Mode => "mode",
            Rule::Bayes => "bayes",
            Rule::Disagreement => "disagreement",
        }
    }
}

/// What a single polygon stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// `{p : label is a mode of p}`.
    Mode(usize),
    /// `{p : label is Bayes-optimal at p}`.
    Bayes(usize),
    /// Closure of `{p : mode is uniquely `mode` and `better` is strictly
    /// cheaper}`; the meaningful set is the interior.
    Disagreement { mode: usize, better: usize },
}

type Bary = [Rational; 3];

/// A convex polygon on the simplex, vertices in counterclockwise order in the
/// projected plane. `degenerate` marks zero-area polygons (boundary-only
/// ties), which are kept rather than dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexPolygon {
    vertices: Vec<ProbVector>,
    label: RegionLabel,
    degenerate: bool,
}

impl SimplexPolygon {
    pub fn vertices(&self) -> &[ProbVector] {
        &self.vertices
    }

    pub fn label(&self) -> RegionLabel {
        self.label
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Shoelace area in the projected plane `(p2 + p3/2, p3)`, where the full
    /// simplex triangle has area exactly 1/2.
    pub fn area(&self) -> Rational {
        shoelace(&self.projected())
    }

    /// Closed membership: `p` lies on the polygon or its boundary.
    pub fn contains(&self, p: &ProbVector) -> bool {
        assert_eq!(p.k(), 3, "simplex polygons live on the 2-simplex");
        let pt = project_probs(p);
        let proj = self.projected();
        if !self.degenerate {
            return (0..proj.len())
                .all(|i| cross(&proj[i], &proj[(i + 1) % proj.len()], &pt) >= Rational::zero());
        }
        // Zero-area polygon: every vertex is collinear; test the segment
        // spanned by the lexicographic extremes.
        let mut lo = proj[0].clone();
        let mut hi = proj[0].clone();
        for v in &proj[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        cross(&lo, &hi, &pt).is_zero() && lo <= pt && pt <= hi
    }

    /// Strict membership: `p` lies in the polygon's planar interior. Always
    /// false for degenerate polygons.
    pub fn contains_interior(&self, p: &ProbVector) -> bool {
        assert_eq!(p.k(), 3, "simplex polygons live on the 2-simplex");
        if self.degenerate {
            return false;
        }
        let pt = project_probs(p);
        let proj = self.projected();
        (0..proj.len())
            .all(|i| cross(&proj[i], &proj[(i + 1) % proj.len()], &pt) > Rational::zero())
    }

    fn projected(&self) -> Vec<(Rational, Rational)> {
        self.vertices.iter().map(project_probs).collect()
    }

    pub fn to_json(&self) -> Value {
        let vertices: Vec<Value> = self
            .vertices
            .iter()
            .map(|v| {
                Value::Array(
                    v.probs()
                        .iter()
                        .map(|q| Value::String(format_rational(q)))
                        .collect(),
                )
            })
            .collect();
        let mut obj = serde_json::json!({
            "degenerate": self.degenerate,
            "vertices": vertices,
        });
        match self.label {
            RegionLabel::Mode(t) | RegionLabel::Bayes(t) => {
                obj["label"] = t.into();
            }
            RegionLabel::Disagreement { mode, better } => {
                obj["label"] = mode.into();
                obj["witness"] = better.into();
            }
        }
        obj
    }
}

/// The polygons of one rule for one matrix. Mode and Bayes polygons cover the
/// simplex with disjoint interiors; disagreement polygons are the closures of
/// the open cells where the mode rule provably loses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    rule: Rule,
    polygons: Vec<SimplexPolygon>,
    matrix: Option<CanonicalCostMatrix>,
}

impl RegionSet {
    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn polygons(&self) -> &[SimplexPolygon] {
        &self.polygons
    }

    pub fn matrix(&self) -> Option<&CanonicalCostMatrix> {
        self.matrix.as_ref()
    }

    /// Sum of polygon areas in the projected measure.
    pub fn total_area(&self) -> Rational {
        self.polygons.iter().map(|p| p.area()).sum()
    }

    pub fn to_json(&self) -> Value {
        let polygons: Vec<Value> = self.polygons.iter().map(|p| p.to_json()).collect();
        serde_json::json!({
            "rule": self.rule.as_str(),
            "polygons": polygons,
        })
    }
}

/// The three mode cells `{p : p_t >= p_j for all j}`. Matrix-independent.
pub fn mode_regions_ternary() -> RegionSet {
    let polygons = (1..=3)
        .map(|t| {
            let constraints = mode_constraints(t);
            clip_polygon(&constraints, RegionLabel::Mode(t))
                .expect("mode cells are nonempty")
        })
        .collect();
    RegionSet {
        rule: Rule::Mode,
        polygons,
        matrix: None,
    }
}

/// For each label `t`, the cell `{p : t is Bayes-optimal}`, clipped from the
/// expected-loss half-planes `E_t <= E_j`.
pub fn bayes_regions_ternary(canonical: &CanonicalCostMatrix) -> Result<RegionSet, RegionError> {
    require_ternary(canonical)?;
    let polygons = (1..=3)
        .map(|t| {
            let constraints = bayes_constraints(canonical, t);
            clip_polygon(&constraints, RegionLabel::Bayes(t))
                .expect("each label is Bayes-optimal at its own vertex")
        })
        .collect();
    Ok(RegionSet {
        rule: Rule::Bayes,
        polygons,
        matrix: Some(canonical.clone()),
    })
}

/// The closed cells whose interiors make up `{p : the mode is unique and not
/// Bayes-optimal}`, one per ordered pair `(m, w)` with a nonempty interior.
/// Empty exactly when the matrix is zero-one.
pub fn disagreement_region(canonical: &CanonicalCostMatrix) -> Result<RegionSet, RegionError> {
    require_ternary(canonical)?;
    let mut polygons = Vec::new();
    for m in 1..=3 {
        for w in 1..=3 {
            if w == m {
                continue;
            }
            let mut constraints = mode_constraints(m);
            constraints.push(loss_gap(canonical, m, w));
            if let Some(poly) =
                clip_polygon(&constraints, RegionLabel::Disagreement { mode: m, better: w })
            {
                // A zero-area intersection has an empty interior: no
                // disagreement there.
                if !poly.is_degenerate() {
                    polygons.push(poly);
                }
            }
        }
    }
    Ok(RegionSet {
        rule: Rule::Disagreement,
        polygons,
        matrix: Some(canonical.clone()),
    })
}

fn require_ternary(canonical: &CanonicalCostMatrix) -> Result<(), RegionError> {
    if canonical.k() != 3 {
        return Err(RegionError::WrongArity {
            expected: 3,
            found: canonical.k(),
        });
    }
    Ok(())
}

/// Half-planes `p_t - p_j >= 0` for `j != t`.
fn mode_constraints(t: usize) -> Vec<Bary> {
    (1..=3)
        .filter(|&j| j != t)
        .map(|j| {
            let mut c = [Rational::zero(), Rational::zero(), Rational::zero()];
            c[t - 1] = Rational::from_integer(1.into());
            c[j - 1] = -Rational::from_integer(1.into());
            c
        })
        .collect()
}

/// Half-planes `(row_j - row_t) . p >= 0`, i.e. `E_t <= E_j`, for `j != t`.
fn bayes_constraints(canonical: &CanonicalCostMatrix, t: usize) -> Vec<Bary> {
    (1..=3)
        .filter(|&j| j != t)
        .map(|j| loss_gap(canonical, j, t))
        .collect()
}

/// Coefficients of `(row_hi - row_lo) . p`, nonnegative where `E_lo <= E_hi`.
fn loss_gap(canonical: &CanonicalCostMatrix, hi: usize, lo: usize) -> Bary {
    let hi_row = &canonical.inner().entries()[hi - 1];
    let lo_row = &canonical.inner().entries()[lo - 1];
    [
        &hi_row[0] - &lo_row[0],
        &hi_row[1] - &lo_row[1],
        &hi_row[2] - &lo_row[2],
    ]
}

/// Clip the simplex triangle by each homogeneous half-plane `c . p >= 0` in
/// turn; `None` when the intersection is empty.
fn clip_polygon(constraints: &[Bary], label: RegionLabel) -> Option<SimplexPolygon> {
    let one = || Rational::from_integer(1.into());
    let zero = Rational::zero;
    let mut poly: Vec<Bary> = vec![
        [one(), zero(), zero()],
        [zero(), one(), zero()],
        [zero(), zero(), one()],
    ];
    for c in constraints {
        poly = clip_half_plane(&poly, c);
        if poly.is_empty() {
            return None;
        }
    }
    dedupe(&mut poly);
    if poly.is_empty() {
        return None;
    }
    let vertices: Vec<ProbVector> = poly
        .into_iter()
        .map(|v| ProbVector::new(v.to_vec()).expect("clip output stays on the simplex"))
        .collect();
    let projected: Vec<(Rational, Rational)> = vertices.iter().map(project_probs).collect();
    let area = shoelace(&projected);
    debug_assert!(area >= Rational::zero(), "clipping must preserve orientation");
    Some(SimplexPolygon {
        vertices,
        label,
        degenerate: area.is_zero(),
    })
}

fn clip_half_plane(poly: &[Bary], c: &Bary) -> Vec<Bary> {
    if poly.is_empty() {
        return Vec::new();
    }
    let eval = |p: &Bary| -> Rational { &c[0] * &p[0] + &c[1] * &p[1] + &c[2] * &p[2] };
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let u = &poly[i];
        let v = &poly[(i + 1) % poly.len()];
        let fu = eval(u);
        let fv = eval(v);
        let u_in = fu >= Rational::zero();
        let v_in = fv >= Rational::zero();
        if u_in != v_in {
            // The crossing point u + t (v - u) with t = fu / (fu - fv) is a
            // convex combination, so it stays on the simplex.
            let t = &fu / (&fu - &fv);
            let w = [
                &u[0] + &t * (&v[0] - &u[0]),
                &u[1] + &t * (&v[1] - &u[1]),
                &u[2] + &t * (&v[2] - &u[2]),
            ];
            out.push(w);
        }
        if v_in {
            out.push(v.clone());
        }
    }
    out
}

fn dedupe(poly: &mut Vec<Bary>) {
    poly.dedup();
    if poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
}

fn project_probs(p: &ProbVector) -> (Rational, Rational) {
    let half = Rational::new(1.into(), 2.into());
    (p.prob(2) + p.prob(3) * half, p.prob(3).clone())
}

fn cross(
    u: &(Rational, Rational),
    v: &(Rational, Rational),
    p: &(Rational, Rational),
) -> Rational {
    (&v.0 - &u.0) * (&p.1 - &u.1) - (&v.1 - &u.1) * (&p.0 - &u.0)
}

fn shoelace(proj: &[(Rational, Rational)]) -> Rational {
    if proj.len() < 3 {
        return Rational::zero();
    }
    let mut twice = Rational::zero();
    for i in 0..proj.len() {
        let (x0, y0) = &proj[i];
        let (x1, y1) = &proj[(i + 1) % proj.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice / Rational::from_integer(2.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_matrix::CostMatrix;
    use crate::decision::{bayes_set, mode_set};
    use crate::rational::parse_rational;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn pv(parts: &[&str]) -> ProbVector {
        ProbVector::new(parts.iter().map(|s| rat(s)).collect()).unwrap()
    }

    fn half() -> Rational {
        rat("1/2")
    }

    #[test]
    fn mode_regions_are_three_quadrilaterals() {
        let set = mode_regions_ternary();
        assert_eq!(set.rule(), Rule::Mode);
        assert_eq!(set.polygons().len(), 3);
        for poly in set.polygons() {
            assert_eq!(poly.vertices().len(), 4);
            assert!(!poly.is_degenerate());
            assert_eq!(poly.area(), rat("1/6"));
        }
        // Region 1 exact vertices: (1,0,0), (1/2,1/2,0), (1/3,1/3,1/3), (1/2,0,1/2).
        let reg1 = &set.polygons()[0];
        let verts: Vec<&ProbVector> = reg1.vertices().iter().collect();
        let expect = [
            pv(&["1", "0", "0"]),
            pv(&["1/2", "1/2", "0"]),
            pv(&["1/3", "1/3", "1/3"]),
            pv(&["1/2", "0", "1/2"]),
        ];
        // Same cyclic order, any starting vertex.
        let start = verts.iter().position(|v| **v == expect[0]).unwrap();
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(verts[(start + i) % 4], e);
        }
    }

    #[test]
    fn mode_region_membership_examples() {
        let set = mode_regions_ternary();
        assert!(set.polygons()[0].contains(&pv(&["1/2", "1/4", "1/4"])));

        let barycenter = pv(&["1/3", "1/3", "1/3"]);
        for poly in set.polygons() {
            assert!(poly.contains(&barycenter));
        }

        let edge_tie = pv(&["0", "1/2", "1/2"]);
        assert!(!set.polygons()[0].contains(&edge_tie));
        assert!(set.polygons()[1].contains(&edge_tie));
        assert!(set.polygons()[2].contains(&edge_tie));
    }

    #[test]
    fn mode_areas_cover_the_simplex() {
        let set = mode_regions_ternary();
        assert_eq!(set.total_area(), half());
    }

    #[test]
    fn bayes_regions_match_mode_for_zero_one() {
        let zo = CostMatrix::zero_one(3).canonicalize().unwrap();
        let bayes = bayes_regions_ternary(&zo).unwrap();
        let mode = mode_regions_ternary();
        assert_eq!(bayes.polygons().len(), 3);
        for (b, m) in bayes.polygons().iter().zip(mode.polygons()) {
            assert_eq!(b.vertices(), m.vertices());
        }
        assert_eq!(bayes.total_area(), half());
    }

    #[test]
    fn bayes_regions_match_unit_cost_ternary() {
        let eq3 = CostMatrix::symmetric_ternary(rat("1"), rat("1"))
            .canonicalize()
            .unwrap();
        let bayes = bayes_regions_ternary(&eq3).unwrap();
        let mode = mode_regions_ternary();
        for (b, m) in bayes.polygons().iter().zip(mode.polygons()) {
            assert_eq!(b.vertices(), m.vertices());
        }
    }

    #[test]
    fn bayes_region_excludes_a_non_optimal_point() {
        let canonical = CostMatrix::symmetric_ternary(rat("2"), rat("1"))
            .canonicalize()
            .unwrap();
        let set = bayes_regions_ternary(&canonical).unwrap();
        let p = pv(&["2/5", "7/20", "1/4"]);
        let reg1 = set
            .polygons()
            .iter()
            .find(|poly| poly.label() == RegionLabel::Bayes(1))
            .unwrap();
        assert!(!reg1.contains(&p));
        // Consistency with the decision module at the same point.
        assert!(!bayes_set(canonical.inner(), &p).unwrap().labels().contains(&1));
        assert_eq!(set.total_area(), half());
    }

    #[test]
    fn disagreement_empty_iff_zero_one() {
        let zo = CostMatrix::zero_one(3).canonicalize().unwrap();
        let set = disagreement_region(&zo).unwrap();
        assert!(set.polygons().is_empty());
        assert!(set.total_area().is_zero());

        let eq3 = CostMatrix::symmetric_ternary(rat("1"), rat("1"))
            .canonicalize()
            .unwrap();
        assert!(disagreement_region(&eq3).unwrap().polygons().is_empty());

        let skew = CostMatrix::symmetric_ternary(rat("2"), rat("1"))
            .canonicalize()
            .unwrap();
        let set = disagreement_region(&skew).unwrap();
        assert!(!set.polygons().is_empty());
        assert!(set.total_area() > Rational::zero());
    }

    #[test]
    fn disagreement_contains_the_known_witness() {
        let canonical = CostMatrix::symmetric_ternary(rat("2"), rat("1"))
            .canonicalize()
            .unwrap();
        let set = disagreement_region(&canonical).unwrap();
        let p = pv(&["2/5", "7/20", "1/4"]);
        assert!(
            set.polygons().iter().any(|poly| poly.contains_interior(&p)),
            "witness point must sit in some disagreement interior"
        );
        // And the decision module agrees it is a disagreement point.
        let mode = mode_set(&p);
        let bayes = bayes_set(canonical.inner(), &p).unwrap();
        let m = mode.unique_label().unwrap();
        assert!(!bayes.labels().contains(&m));
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let zo2 = CostMatrix::zero_one(2).canonicalize().unwrap();
        assert!(matches!(
            bayes_regions_ternary(&zo2),
            Err(RegionError::WrongArity { expected: 3, found: 2 })
        ));
        assert!(matches!(
            disagreement_region(&zo2),
            Err(RegionError::WrongArity { .. })
        ));
    }

    #[test]
    fn region_sets_export_as_json() {
        let canonical = CostMatrix::symmetric_ternary(rat("2"), rat("1"))
            .canonicalize()
            .unwrap();
        let json = bayes_regions_ternary(&canonical).unwrap().to_json();
        assert_eq!(json["rule"], "bayes");
        let polygons = json["polygons"].as_array().unwrap();
        assert_eq!(polygons.len(), 3);
        assert_eq!(polygons[0]["label"], 1);
        let vertex = polygons[0]["vertices"][0].as_array().unwrap();
        assert_eq!(vertex.len(), 3);
        assert!(vertex.iter().all(|c| c.is_string()));

        let json = disagreement_region(&canonical).unwrap().to_json();
        assert_eq!(json["rule"], "disagreement");
        for poly in json["polygons"].as_array().unwrap() {
            assert!(poly["label"].is_u64());
            assert!(poly["witness"].is_u64());
            assert_eq!(poly["degenerate"], false);
        }
    }

    #[test]
    fn degenerate_bayes_cells_are_kept_and_flagged() {
        // a = 2, b = 1 makes decision 2 optimal only on the p1 = 0 edge.
        let canonical = CostMatrix::symmetric_ternary(rat("2"), rat("1"))
            .canonicalize()
            .unwrap();
        let set = bayes_regions_ternary(&canonical).unwrap();
        let reg2 = set
            .polygons()
            .iter()
            .find(|poly| poly.label() == RegionLabel::Bayes(2))
            .unwrap();
        assert!(reg2.is_degenerate());
        assert!(reg2.area().is_zero());
        // Closed membership on the degenerate segment still works.
        assert!(reg2.contains(&pv(&["0", "1/2", "1/2"])));
        assert!(!reg2.contains(&pv(&["1/3", "1/3", "1/3"])));
        assert!(!reg2.contains_interior(&pv(&["0", "1/2", "1/2"])));
    }
}
