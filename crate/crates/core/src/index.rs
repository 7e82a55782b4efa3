//! Half-integer indices of the characteristic line field.
//!
//! The line direction is defined mod pi, so its winding around a loop is a
//! half integer: the continuous lift of the direction angle changes by a
//! multiple of pi. Interior loop indices come straight from that lift.
//! Boundary tangency points carry half the index of the *doubled*
//! configuration: reflect a neighborhood of the tangency across the
//! boundary, carry the line field along (reflecting directions in the
//! boundary tangent), smooth the seam by rotating the field onto the
//! boundary normal inside a thin collar, and wind the glued field around
//! the tangency. The Euler identity then reads
//!
//! ```text
//! chi(domain) = #components(singular set) + sum over boundary loops of
//!               (sum of tangency indices)
//! ```
//!
//! for a compactly contained singular set and generically tangent
//! boundaries.

use crate::error::{Error, Result};
use crate::fields::{Point, SurfaceProblem};
use crate::gallery::DeclaredIndexTruth;
use crate::singular::{ParamCurve, SingularReport};

const PI: f64 = std::f64::consts::PI;

/// A computed index with its distance from the nearest half integer.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LoopIndex {
    /// Rounded to the nearest half integer.
    pub index: f64,
    /// Raw winding before rounding.
    pub raw: f64,
    /// |raw - index|.
    pub defect: f64,
}

fn round_half(raw: f64) -> LoopIndex {
    let index = (raw * 2.0).round() / 2.0;
    LoopIndex {
        index,
        raw,
        defect: (raw - index).abs(),
    }
}

fn wrap_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Nearest representative of `a` modulo pi in (-pi/2, pi/2].
fn wrap_half_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(PI);
    if r > PI / 2.0 {
        r -= PI;
    }
    r
}

/// Continuous lift of a sequence of line directions (angles mod pi).
/// Fails with the jump size if two consecutive directions differ by >= pi/2.
fn lift_directions(angles: &[f64]) -> std::result::Result<f64, f64> {
    let mut lifted = angles[0];
    let first = lifted;
    for &a in &angles[1..] {
        let step = wrap_half_pi(a - lifted);
        if step.abs() >= PI / 2.0 - 1e-9 {
            return Err(step.abs());
        }
        lifted += step;
    }
    Ok(lifted - first)
}

fn direction_angles(problem: &SurfaceProblem, pts: &[Point]) -> Result<Vec<f64>> {
    pts.iter()
        .map(|&p| {
            let hv = problem.horizontal_vector(p);
            let d = hv.norm();
            if d <= 2.0 * problem.eps_d {
                return Err(Error::SingularOnLoop);
            }
            Ok(hv.y.atan2(hv.x) + PI / 2.0) // direction of Nperp's line
        })
        .collect()
}

fn densify(pts: &[Point]) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * pts.len());
    for w in pts.windows(2) {
        out.push(w[0]);
        out.push(Point::new(0.5 * (w[0].x + w[1].x), 0.5 * (w[0].y + w[1].y)));
    }
    out.push(*pts.last().unwrap());
    out
}

/// Winding of the characteristic line field around a closed polyline.
///
/// The loop must be closed (first point equals last within tolerance) and
/// stay clear of the singular set. A direction jump of pi/2 or more per
/// step triggers one automatic refinement, then fails.
pub fn loop_index(problem: &SurfaceProblem, loop_pts: &[Point]) -> Result<LoopIndex> {
    if loop_pts.len() < 4 {
        return Err(Error::ConfigInvalid("loop needs at least 4 points".into()));
    }
    let mut pts: Vec<Point> = loop_pts.to_vec();
    let closure = pts[0].dist(*pts.last().unwrap());
    if closure > 1e-6 * problem.window().diagonal() {
        return Err(Error::ConfigInvalid(format!(
            "loop is not closed (gap {closure:e})"
        )));
    }
    for _attempt in 0..2 {
        let angles = direction_angles(problem, &pts)?;
        match lift_directions(&angles) {
            Ok(total) => return Ok(round_half(total / (2.0 * PI))),
            Err(_) => pts = densify(&pts),
        }
    }
    Err(Error::LiftJump)
}

/// Sample a circle as a closed polyline.
pub fn circle_loop(center: Point, r: f64, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            center + Point::new(r * phi.cos(), r * phi.sin())
        })
        .collect()
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Nearest point on `curve` to `q`, searched inside [s_lo, s_hi].
fn project_onto(curve: &ParamCurve, q: Point, s_lo: f64, s_hi: f64) -> f64 {
    let n = 64;
    let mut best_s = s_lo;
    let mut best_d = f64::INFINITY;
    for k in 0..=n {
        let s = s_lo + (s_hi - s_lo) * k as f64 / n as f64;
        let d = curve.eval(s).dist(q);
        if d < best_d {
            best_d = d;
            best_s = s;
        }
    }
    // golden-section refinement around the best sample
    let h = (s_hi - s_lo) / n as f64;
    let (mut a, mut b) = (best_s - h, best_s + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..48 {
        if curve.eval(c).dist(q) < curve.eval(d).dist(q) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    0.5 * (a + b)
}

/// Index of an isolated tangency of the characteristic line field with a
/// boundary arc, via the doubled-neighborhood construction.
///
/// `boundary` must be parametrized with the domain on the LEFT of
/// increasing parameter; `p` is the tangency point; `radius` the size of
/// the probing loop (it must stay inside the window and clear of other
/// tangencies). Returns half the winding of the glued field.
pub fn boundary_tangency_index(
    problem: &SurfaceProblem,
    boundary: &ParamCurve,
    p: Point,
    radius: f64,
) -> Result<LoopIndex> {
    // Validate the tangency itself.
    let s_p = project_onto(boundary, p, boundary.t0, boundary.t1);
    let b_p = boundary.eval(s_p);
    if b_p.dist(p) > 0.25 * radius {
        return Err(Error::NotATangency(p.x, p.y));
    }
    let frame_p = problem.eval_frame(b_p)?;
    if frame_p.singular {
        return Err(Error::SingularOnLoop);
    }
    let t_hat = boundary.tangent(s_p);
    if frame_p.nperp.cross(t_hat).abs() > 0.05 {
        return Err(Error::NotATangency(p.x, p.y));
    }
    // Isolation: the tangency function may only vanish near s_p inside the
    // probed parameter range.
    let s_range = param_window(boundary, s_p, 4.0 * radius);
    let samples = 256;
    for k in 0..=samples {
        let s = s_range.0 + (s_range.1 - s_range.0) * k as f64 / samples as f64;
        let q = boundary.eval(s);
        if q.dist(b_p) < 2.5 * radius {
            continue;
        }
        let fr = match problem.eval_frame(q) {
            Ok(f) if !f.singular => f,
            _ => continue,
        };
        if fr.nperp.cross(boundary.tangent(s)).abs() < 1e-4 {
            return Err(Error::NonIsolated(q.x, q.y));
        }
    }

    let collar = 0.5 * radius;
    // Adaptive sampling of the probing circle.
    let mut n = 512usize;
    loop {
        let mut angles = Vec::with_capacity(n + 1);
        let mut n_lift: Option<f64> = None;
        let mut ok = true;
        for k in 0..=n {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let q = b_p + Point::new(radius * phi.cos(), radius * phi.sin());
            let s_b = project_onto(boundary, q, s_range.0, s_range.1);
            let b = boundary.eval(s_b);
            let tb = boundary.tangent(s_b);
            // outward normal with the domain on the left of the tangent
            let nu = Point::new(tb.y, -tb.x);
            let d_signed = (q - b).dot(nu);
            let inside = d_signed < 0.0;
            let raw = if inside {
                let hv = problem.horizontal_vector(q);
                if hv.norm() <= 2.0 * problem.eps_d {
                    return Err(Error::SingularOnLoop);
                }
                hv.y.atan2(hv.x) + PI / 2.0
            } else {
                let q_mirror = q - nu.scale(2.0 * d_signed);
                let hv = problem.horizontal_vector(q_mirror);
                if hv.norm() <= 2.0 * problem.eps_d {
                    return Err(Error::SingularOnLoop);
                }
                let dir = hv.y.atan2(hv.x) + PI / 2.0;
                // reflect the direction across the boundary tangent
                2.0 * tb.y.atan2(tb.x) - dir
            };
            let angle = if d_signed.abs() >= collar {
                raw
            } else {
                // Rotate the field onto the outward normal across the
                // collar so the two copies glue continuously.
                let n_raw = nu.y.atan2(nu.x);
                let n_cont = match n_lift {
                    Some(prev) => prev + wrap_pi(n_raw - prev),
                    None => n_raw,
                };
                n_lift = Some(n_cont);
                let rho = wrap_half_pi(raw - n_cont);
                n_cont + smoothstep(d_signed.abs() / collar) * rho
            };
            if d_signed.abs() >= collar {
                n_lift = None;
            }
            angles.push(angle);
        }
        match lift_directions(&angles) {
            Ok(total) => {
                let double_index = round_half(total / (2.0 * PI));
                let raw_half = double_index.raw / 2.0;
                let mut result = round_half(raw_half);
                result.defect = result.defect.max(double_index.defect / 2.0);
                return Ok(result);
            }
            Err(_) if ok => {
                ok = false;
                n *= 2;
                if n > 16384 {
                    return Err(Error::LiftJump);
                }
            }
            Err(_) => return Err(Error::LiftJump),
        }
    }
}

/// Widen a parameter interval around `s` until the curve leaves a disk of
/// the given radius (clamped to the curve's domain).
fn param_window(curve: &ParamCurve, s: f64, radius: f64) -> (f64, f64) {
    let p = curve.eval(s);
    let span = curve.span();
    let mut lo = s;
    let mut hi = s;
    let step = span / 512.0;
    while lo > curve.t0 && curve.eval(lo).dist(p) < radius {
        lo -= step;
    }
    while hi < curve.t1 && curve.eval(hi).dist(p) < radius {
        hi += step;
    }
    (lo.max(curve.t0), hi.min(curve.t1))
}

/// One located boundary tangency.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TangencyInfo {
    pub param: f64,
    pub x: f64,
    pub y: f64,
    pub index: f64,
    pub defect: f64,
}

/// Per-boundary-loop tangency data.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundaryIndexReport {
    pub tangencies: Vec<TangencyInfo>,
    pub index_sum: f64,
}

/// The Euler-characteristic identity assembled from grid components and
/// boundary tangency indices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IndexReport {
    pub boundary: Vec<BoundaryIndexReport>,
    pub component_count: usize,
    /// chi of the (genus-zero) domain: 2 - number of boundary loops.
    pub euler_lhs: i64,
    /// #components + sum of boundary indices.
    pub euler_rhs: f64,
    pub identity_residual: f64,
    /// Set when |curl F| vanishes somewhere on the domain; the identity may
    /// still hold but its hypotheses do not.
    pub curl_hypothesis_violated: bool,
    /// True when the report was assembled from declared rather than
    /// computed data.
    pub declared_truth: bool,
}

/// Locate tangency parameters on one boundary loop by sign changes of
/// cross(Nperp, tangent), refined by bisection.
fn locate_tangencies(
    problem: &SurfaceProblem,
    boundary: &ParamCurve,
    loop_id: usize,
) -> Result<Vec<f64>> {
    let n = 2048;
    let t_fn = |s: f64| -> Result<f64> {
        let q = boundary.eval(s);
        let fr = problem.eval_frame(q)?;
        if fr.singular {
            return Err(Error::SingularTouchesBoundary);
        }
        Ok(fr.nperp.cross(boundary.tangent(s)))
    };
    let mut zeros = Vec::new();
    let span = boundary.span();
    let mut prev = t_fn(boundary.t0)?;
    for k in 1..=n {
        let s = boundary.t0 + span * k as f64 / n as f64;
        let cur = t_fn(s)?;
        if prev == 0.0 {
            zeros.push(boundary.t0 + span * (k - 1) as f64 / n as f64);
        } else if prev * cur < 0.0 {
            let mut lo = boundary.t0 + span * (k - 1) as f64 / n as f64;
            let mut hi = s;
            let f_lo = prev;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let f_mid = t_fn(mid)?;
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (f_mid > 0.0) == (f_lo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo) / span < 1e-6 {
                    break;
                }
            }
            if (hi - lo) / span > 2e-6 {
                return Err(Error::UnresolvedTangency(loop_id));
            }
            zeros.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    Ok(zeros)
}

/// Check the Euler identity on a domain bounded by the given loops (each
/// parametrized with the domain on its left), using a singular-set report
/// for the component count.
pub fn euler_identity_check(
    problem: &SurfaceProblem,
    boundaries: &[ParamCurve],
    singular: &SingularReport,
) -> Result<IndexReport> {
    // the singular set must stay clear of the boundary
    for b in boundaries {
        let n = 512;
        for k in 0..n {
            let s = b.t0 + b.span() * k as f64 / n as f64;
            if problem.d(b.eval(s)) <= 10.0 * problem.eps_d {
                return Err(Error::SingularTouchesBoundary);
            }
        }
    }
    // curl hypothesis scan
    let w = problem.window();
    let mut curl_violated = false;
    for j in 0..9 {
        for i in 0..9 {
            let p = Point::new(
                w.x0 + (w.x1 - w.x0) * (i as f64 + 0.5) / 9.0,
                w.y0 + (w.y1 - w.y0) * (j as f64 + 0.5) / 9.0,
            );
            if let Ok(c) = problem.curl(p) {
                if c.abs() < 1e-6 {
                    curl_violated = true;
                }
            }
        }
    }

    let mut reports = Vec::new();
    for (loop_id, b) in boundaries.iter().enumerate() {
        let zeros = locate_tangencies(problem, b, loop_id)?;
        // probing radius: a fraction of the minimum spacing between
        // tangencies (and of the window)
        let mut infos = Vec::new();
        let pts: Vec<Point> = zeros.iter().map(|&s| b.eval(s)).collect();
        for (i, &s) in zeros.iter().enumerate() {
            let p = pts[i];
            let mut spacing = f64::INFINITY;
            for (j, q) in pts.iter().enumerate() {
                if i != j {
                    spacing = spacing.min(p.dist(*q));
                }
            }
            let radius = (0.02 * w.diagonal()).min(0.25 * spacing);
            let li = boundary_tangency_index(problem, b, p, radius)?;
            infos.push(TangencyInfo {
                param: s,
                x: p.x,
                y: p.y,
                index: li.index,
                defect: li.defect,
            });
        }
        let index_sum = infos.iter().map(|t| t.index).sum();
        reports.push(BoundaryIndexReport {
            tangencies: infos,
            index_sum,
        });
    }

    let chi = 2 - boundaries.len() as i64;
    let rhs = singular.component_count as f64
        + reports.iter().map(|r| r.index_sum).sum::<f64>();
    Ok(IndexReport {
        boundary: reports,
        component_count: singular.component_count,
        euler_lhs: chi,
        euler_rhs: rhs,
        identity_residual: (chi as f64 - rhs).abs(),
        curl_hypothesis_violated: curl_violated,
        declared_truth: false,
    })
}

/// Assemble the identity report from a declared index table (for the
/// three-boundary fixture whose graph has no closed form).
pub fn declared_euler_check(truth: &DeclaredIndexTruth) -> IndexReport {
    let boundary = truth
        .boundary_indices
        .iter()
        .map(|&s| BoundaryIndexReport {
            tangencies: Vec::new(),
            index_sum: s,
        })
        .collect::<Vec<_>>();
    let rhs = truth.component_count as f64 + truth.boundary_indices.iter().sum::<f64>();
    IndexReport {
        boundary,
        component_count: truth.component_count,
        euler_lhs: truth.chi,
        euler_rhs: rhs,
        identity_residual: (truth.chi as f64 - rhs).abs(),
        curl_hypothesis_violated: false,
        declared_truth: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{PlanarVectorField, ScalarField, SurfaceProblem, Window};
    use crate::gallery::{build, GalleryId};

    fn radial() -> SurfaceProblem {
        build(GalleryId::RadialPlane).problem.unwrap()
    }

    fn constant() -> SurfaceProblem {
        build(GalleryId::ConstantField).problem.unwrap()
    }

    #[test]
    fn radial_unit_circle_has_index_one() {
        let p = radial();
        let li = loop_index(&p, &circle_loop(Point::new(0.0, 0.0), 1.0, 256)).unwrap();
        assert_eq!(li.index, 1.0);
        assert!(li.defect < 1e-2, "defect {}", li.defect);
    }

    #[test]
    fn constant_field_loop_has_index_zero() {
        let p = constant();
        let li = loop_index(&p, &circle_loop(Point::new(3.0, 0.0), 0.8, 256)).unwrap();
        assert_eq!(li.index, 0.0);
        assert!(li.defect < 1e-2);
    }

    #[test]
    fn small_loop_around_isolated_singular_point() {
        let p = radial();
        let li = loop_index(&p, &circle_loop(Point::new(0.0, 0.0), 0.05, 256)).unwrap();
        assert_eq!(li.index, 1.0);
    }

    #[test]
    fn loop_through_singular_set_errors() {
        let p = radial();
        // circle through the origin
        let li = loop_index(&p, &circle_loop(Point::new(0.5, 0.0), 0.5, 64));
        assert!(matches!(li, Err(Error::SingularOnLoop)));
    }

    #[test]
    fn index_is_resolution_independent() {
        let p = radial();
        let a = loop_index(&p, &circle_loop(Point::new(0.0, 0.0), 1.3, 128)).unwrap();
        let b = loop_index(&p, &circle_loop(Point::new(0.0, 0.0), 1.3, 256)).unwrap();
        assert_eq!(a.index, b.index);
        assert!(a.defect < 1e-2 && b.defect < 1e-2);
    }

    /// Two zeros of winding +1 each: individual small loops see +1, an
    /// enclosing loop sees the sum.
    #[test]
    fn index_additivity_on_synthetic_field() {
        let w = Window::new(-3.0, 3.0, -3.0, 3.0).unwrap();
        let fx = crate::expr::parse("x*x - y*y - 1", &["x", "y"]).unwrap();
        let fy = crate::expr::parse("2*x*y", &["x", "y"]).unwrap();
        let problem = SurfaceProblem::new(
            ScalarField::constant(0.0, w),
            PlanarVectorField::new(
                ScalarField::from_expr(fx, w),
                ScalarField::from_expr(fy, w),
            )
            .unwrap(),
            ScalarField::constant(0.0, w),
        )
        .unwrap();
        let left = loop_index(&problem, &circle_loop(Point::new(-1.0, 0.0), 0.3, 256))
            .unwrap();
        let right = loop_index(&problem, &circle_loop(Point::new(1.0, 0.0), 0.3, 256))
            .unwrap();
        let both = loop_index(&problem, &circle_loop(Point::new(0.0, 0.0), 2.0, 512))
            .unwrap();
        assert_eq!(left.index, 1.0);
        assert_eq!(right.index, 1.0);
        assert_eq!(both.index, left.index + right.index);
    }

    #[test]
    fn convex_tangency_carries_plus_half() {
        // vertical characteristic field, circular boundary with the domain
        // inside: each of the two tangencies contributes +1/2
        let p = constant();
        let boundary = ParamCurve::circle_arc(
            Point::new(3.0, 0.0),
            1.0,
            0.0,
            2.0 * PI,
        );
        for tangency in [Point::new(4.0, 0.0), Point::new(2.0, 0.0)] {
            let li = boundary_tangency_index(&p, &boundary, tangency, 0.05).unwrap();
            assert_eq!(li.index, 0.5, "at {tangency:?}: raw {}", li.raw);
            assert!(li.defect < 1e-2, "defect {}", li.defect);
        }
    }

    #[test]
    fn concave_tangency_carries_minus_half() {
        // same circle, domain outside: clockwise parametrization
        let p = constant();
        let center = Point::new(3.0, 0.0);
        let boundary = ParamCurve::new(0.0, 2.0 * PI, move |t| {
            center + Point::new((-t).cos(), (-t).sin())
        });
        let li =
            boundary_tangency_index(&p, &boundary, Point::new(4.0, 0.0), 0.05).unwrap();
        assert_eq!(li.index, -0.5, "raw {}", li.raw);
        assert!(li.defect < 1e-2);
    }

    #[test]
    fn inflection_tangencies_carry_zero() {
        let p = constant();
        for sign in [1.0f64, -1.0] {
            let boundary = ParamCurve::new(-0.5, 0.5, move |t| {
                Point::new(3.0 + sign * t * t * t, t)
            });
            let li =
                boundary_tangency_index(&p, &boundary, Point::new(3.0, 0.0), 0.04).unwrap();
            assert_eq!(li.index, 0.0, "sign {sign}: raw {}", li.raw);
            assert!(li.defect < 1e-2);
        }
    }

    #[test]
    fn non_tangency_is_rejected() {
        let p = radial();
        // radial field is transversal to this circle everywhere
        let boundary =
            ParamCurve::circle_arc(Point::new(0.0, 0.0), 1.0, 0.0, 2.0 * PI);
        assert!(matches!(
            boundary_tangency_index(&p, &boundary, Point::new(1.0, 0.0), 0.05),
            Err(Error::NotATangency(_, _))
        ));
    }

    #[test]
    fn tangency_index_is_rotation_invariant() {
        // rotate the whole configuration rigidly; the index must not move.
        // u_gamma = ((cos g) x + (sin g) y)^2 / 2 gives the constant frame
        // at angle g.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as f64 / (1u64 << 31) as f64 * PI
        };
        for _ in 0..3 {
            let g = next();
            let (cg, sg) = (g.cos(), g.sin());
            let w = Window::new(-8.0, 8.0, -8.0, 8.0).unwrap();
            let problem = SurfaceProblem::new(
                ScalarField::from_fn_with_grad(
                    w,
                    move |x, y| (cg * x + sg * y).powi(2) / 2.0,
                    move |x, y| {
                        let v = cg * x + sg * y;
                        (cg * v, sg * v)
                    },
                ),
                PlanarVectorField::zero(w),
                ScalarField::constant(0.0, w),
            )
            .unwrap();
            // rotate the circle boundary and the tangency point by g
            let rot = move |p: Point| {
                Point::new(cg * p.x - sg * p.y, sg * p.x + cg * p.y)
            };
            let center = rot(Point::new(3.0, 0.0));
            let boundary = ParamCurve::new(0.0, 2.0 * PI, move |t| {
                center + Point::new(t.cos(), t.sin())
            });
            let tangency = rot(Point::new(4.0, 0.0));
            let li = boundary_tangency_index(&problem, &boundary, tangency, 0.05).unwrap();
            assert_eq!(li.index, 0.5, "angle {g}: raw {}", li.raw);
        }
    }

    #[test]
    fn euler_identity_on_radial_disk() {
        let p = radial();
        let report = crate::singular::detect_singular(&p, 64).unwrap();
        let boundary =
            ParamCurve::circle_arc(Point::new(0.0, 0.0), 1.5, 0.0, 2.0 * PI);
        let idx = euler_identity_check(&p, &[boundary], &report).unwrap();
        assert_eq!(idx.component_count, 1);
        assert_eq!(idx.euler_lhs, 1);
        assert_eq!(idx.identity_residual, 0.0);
        assert!(!idx.curl_hypothesis_violated);
        assert!(idx.boundary[0].tangencies.is_empty());
    }

    #[test]
    fn euler_identity_on_constant_disk() {
        // no singular set; two tangencies of +1/2 each; curl F = 0 is a
        // hypothesis violation but the identity still reads 1 = 0 + 1.
        let p = constant();
        let report = crate::singular::detect_singular(&p, 32).unwrap();
        let boundary =
            ParamCurve::circle_arc(Point::new(3.0, 0.0), 1.0, 0.0, 2.0 * PI);
        let idx = euler_identity_check(&p, &[boundary], &report).unwrap();
        assert_eq!(idx.component_count, 0);
        assert_eq!(idx.boundary[0].tangencies.len(), 2);
        assert_eq!(idx.boundary[0].index_sum, 1.0);
        assert_eq!(idx.identity_residual, 0.0);
        assert!(idx.curl_hypothesis_violated);
    }

    #[test]
    fn declared_truth_identity() {
        let truth = build(GalleryId::Ex7_2Domain).truth.declared_index.unwrap();
        let idx = declared_euler_check(&truth);
        assert_eq!(idx.euler_lhs, -1);
        assert_eq!(idx.euler_rhs, -1.0);
        assert_eq!(idx.identity_residual, 0.0);
        assert!(idx.declared_truth);
    }
}
