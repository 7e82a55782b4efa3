//! Built-in surfaces with known ground truth.
//!
//! Each member carries a `SurfaceProblem` with exact gradients and a record
//! of what is true about it: the singular set, rays known to approach it
//! with a known limit of D', the internal seams where the gluing is C1, and
//! (for the index fixture) a declared index table.
//!
//! The constructions go through characteristic parametrizations: a family of
//! rays (straight, since H = 0 everywhere here) leaving a seed curve, with
//! the graph height obtained by integrating the contact form along each ray.
//! Evaluating u at (x, y) therefore inverts the ray parametrization, a
//! monotone one-dimensional root problem per region.

use std::sync::OnceLock;

use crate::codazzi::LimitKind;
use crate::error::{Error, Result};
use crate::fields::{PlanarVectorField, Point, ScalarField, SurfaceProblem, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GalleryId {
    /// u = 0, F = (-y, x): rays through the origin, one singular point.
    RadialPlane,
    /// One characteristic ray from the tip of a singular half-line.
    Ex4_1,
    /// Two singular half-lines from one singular point.
    Ex4_2,
    /// Three singular half-lines from one singular point.
    Ex4_3,
    /// A singular segment; C1 but not C2 across it.
    Ex4_4,
    /// u = x^2/2, F = 0: no singular set, constant frame (plumbing control).
    ConstantField,
    /// Three-boundary domain with a declared index table; carries no graph.
    Ex7_2Domain,
}

impl GalleryId {
    pub const ALL: [GalleryId; 7] = [
        GalleryId::RadialPlane,
        GalleryId::Ex4_1,
        GalleryId::Ex4_2,
        GalleryId::Ex4_3,
        GalleryId::Ex4_4,
        GalleryId::ConstantField,
        GalleryId::Ex7_2Domain,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "RadialPlane" | "radial-plane" | "radial" => Ok(GalleryId::RadialPlane),
            "Ex4_1" | "ex4.1" | "ex4_1" => Ok(GalleryId::Ex4_1),
            "Ex4_2" | "ex4.2" | "ex4_2" => Ok(GalleryId::Ex4_2),
            "Ex4_3" | "ex4.3" | "ex4_3" => Ok(GalleryId::Ex4_3),
            "Ex4_4" | "ex4.4" | "ex4_4" => Ok(GalleryId::Ex4_4),
            "ConstantField" | "constant-field" | "constant" => Ok(GalleryId::ConstantField),
            "Ex7_2Domain" | "ex7.2" | "ex7_2" => Ok(GalleryId::Ex7_2Domain),
            other => Err(Error::ConfigInvalid(format!("unknown gallery id `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GalleryId::RadialPlane => "RadialPlane",
            GalleryId::Ex4_1 => "Ex4_1",
            GalleryId::Ex4_2 => "Ex4_2",
            GalleryId::Ex4_3 => "Ex4_3",
            GalleryId::Ex4_4 => "Ex4_4",
            GalleryId::ConstantField => "ConstantField",
            GalleryId::Ex7_2Domain => "Ex7_2Domain",
        }
    }
}

/// A ray start known to approach the singular set, with the expected branch
/// of the D' limit.
#[derive(Debug, Clone, Copy)]
pub struct LimitProbe {
    pub start: Point,
    pub direction: i8,
    pub expected: LimitKind,
}

/// A straight internal seam of the piecewise construction; `normal` points
/// across it.
#[derive(Debug, Clone, Copy)]
pub struct Seam {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
}

/// Index data asserted rather than computed (the construction exists but no
/// closed form is available).
#[derive(Debug, Clone)]
pub struct DeclaredIndexTruth {
    pub component_count: usize,
    pub boundary_indices: Vec<f64>,
    pub chi: i64,
}

#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub singular_points: Vec<Point>,
    pub singular_segments: Vec<(Point, Point)>,
    pub limit_probes: Vec<LimitProbe>,
    pub seams: Vec<Seam>,
    pub declared_index: Option<DeclaredIndexTruth>,
}

impl GroundTruth {
    pub fn singular_is_empty(&self) -> bool {
        self.singular_points.is_empty() && self.singular_segments.is_empty()
    }

    /// Euclidean distance from p to the declared singular set.
    pub fn singular_distance(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        for q in &self.singular_points {
            best = best.min(p.dist(*q));
        }
        for (a, b) in &self.singular_segments {
            best = best.min(dist_to_segment(p, *a, *b));
        }
        best
    }
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.dist(a + ab.scale(t))
}

#[derive(Debug)]
pub struct GalleryMember {
    pub id: GalleryId,
    /// Absent only for the declared-truth domain member.
    pub problem: Option<SurfaceProblem>,
    pub truth: GroundTruth,
}

impl GalleryMember {
    pub fn problem(&self) -> &SurfaceProblem {
        self.problem
            .as_ref()
            .expect("gallery member carries a surface problem")
    }

    /// Recover the member's intrinsic parameters at p.
    ///
    /// The meaning of the pair depends on the member: `(x0, s)` for Ex4_1,
    /// `(s, t)` for Ex4_2/Ex4_3/Ex4_4 (with the region inferred from p),
    /// polar `(r, phi)` for the radial plane and Cartesian for the constant
    /// field.
    pub fn invert_parametrization(&self, p: Point) -> Result<(f64, f64)> {
        match self.id {
            GalleryId::RadialPlane => {
                let r = p.norm();
                if r == 0.0 {
                    return Err(Error::OutsideRegion(p.x, p.y));
                }
                Ok((r, p.y.atan2(p.x)))
            }
            GalleryId::ConstantField => Ok((p.x, p.y)),
            GalleryId::Ex4_1 => {
                if p.y == 0.0 {
                    return Err(Error::OutsideRegion(p.x, p.y));
                }
                let (x0, s) = maps::ex41_invert(p)?;
                Ok((x0, s))
            }
            GalleryId::Ex4_2 => {
                let (region, s, t) = maps::ex42_region_invert(p)?;
                let _ = region;
                Ok((s, t))
            }
            GalleryId::Ex4_3 => {
                if p.y < 0.0 {
                    let (_, s, t) = maps::ex43_lower_invert(p)?;
                    Ok((s, t))
                } else {
                    let (_, s, t) = maps::ex42_region_invert(p)?;
                    Ok((s, t))
                }
            }
            GalleryId::Ex4_4 => {
                let (s, t) = maps::ex44_invert(p)?;
                Ok((s, t))
            }
            GalleryId::Ex7_2Domain => Err(Error::OutsideRegion(p.x, p.y)),
        }
    }
}

/// Build a gallery member.
pub fn build(id: GalleryId) -> GalleryMember {
    match id {
        GalleryId::RadialPlane => radial_plane(),
        GalleryId::Ex4_1 => ex41(),
        GalleryId::Ex4_2 => ex42(),
        GalleryId::Ex4_3 => ex43(),
        GalleryId::Ex4_4 => ex44(),
        GalleryId::ConstantField => constant_field(),
        GalleryId::Ex7_2Domain => ex72_domain(),
    }
}

// ---------------------------------------------------------------------------
// root finding shared by the parametrization inversions

/// Safeguarded Newton on a monotone increasing function over [lo, hi].
fn newton_bisect(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NewtonDiverged(lo, hi));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() < tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = if d != 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 * (1.0 + hi.abs()) {
            return Ok(x);
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// closed-form maps

pub mod maps {
    use super::*;

    // ---- Example 4.1 ------------------------------------------------------
    //
    // Angle profile: theta(x0) = pi/2 - atan(x0) on the upper half plane and
    // pi/2 + atan(x0) on the lower one, for x0 <= 0. Both satisfy the
    // required monotonicity, ranges and endpoint slopes; the ray from
    // (x0, 0) is x = x0 + s sin(theta), y = -s cos(theta).

    pub fn ex41_theta(x0: f64, upper: bool) -> (f64, f64) {
        let a = x0.atan();
        let da = 1.0 / (1.0 + x0 * x0);
        if upper {
            (std::f64::consts::FRAC_PI_2 - a, -da)
        } else {
            (std::f64::consts::FRAC_PI_2 + a, da)
        }
    }

    pub fn ex41_forward(x0: f64, s: f64, upper: bool) -> Point {
        let (theta, _) = ex41_theta(x0, upper);
        Point::new(x0 + s * theta.sin(), -s * theta.cos())
    }

    /// Invert (x, y) -> (x0, s) off the x-axis.
    ///
    /// This angle profile satisfies tan(theta(x0)) = 1/x0 above the axis
    /// and -1/x0 below it, so the ray relation x = x0 - y tan(theta)
    /// collapses to a quadratic in x0 and the inversion is closed-form.
    pub fn ex41_invert(p: Point) -> Result<(f64, f64)> {
        if p.y == 0.0 {
            return Err(Error::OutsideRegion(p.x, p.y));
        }
        let upper = p.y > 0.0;
        let disc = if upper {
            p.x * p.x + 4.0 * p.y
        } else {
            p.x * p.x - 4.0 * p.y
        };
        let root = disc.sqrt();
        // rationalized branch avoids cancellation when x > 0
        let x0 = if p.x > 0.0 {
            if upper {
                -2.0 * p.y / (p.x + root)
            } else {
                2.0 * p.y / (p.x + root)
            }
        } else {
            0.5 * (p.x - root)
        };
        let (theta, _) = ex41_theta(x0, upper);
        let s = -p.y / theta.cos();
        Ok((x0, s))
    }

    pub fn ex41_u_grad(p: Point) -> (f64, (f64, f64)) {
        if p.y == 0.0 {
            // u = 0 on the axis; u_y has the one-sided-consistent value
            // -x for x < 0 and 0 for x >= 0.
            let uy = if p.x < 0.0 { -p.x } else { 0.0 };
            return (0.0, (0.0, uy));
        }
        let (x0, _s) = match ex41_invert(p) {
            Ok(v) => v,
            Err(_) => return (f64::NAN, (f64::NAN, f64::NAN)),
        };
        // Pole-free forms of the ray-family derivatives: with
        // s cos(theta) = -y the quotient q = cos/(s theta' + cos) reduces to
        // x0^2/(y + x0^2) above the axis and x0^2/(x0^2 - y) below it.
        let u = -x0 * p.y;
        if p.y > 0.0 {
            let denom = p.y + x0 * x0;
            let ux = -p.y * x0 * x0 / denom;
            let uy = -x0 * p.y / denom - x0;
            (u, (ux, uy))
        } else {
            let denom = p.y - x0 * x0;
            let ux = p.y * x0 * x0 / denom;
            let uy = -x0 * p.y / denom - x0;
            (u, (ux, uy))
        }
    }

    // ---- Examples 4.2 / 4.3 ------------------------------------------------
    //
    // alpha(t) = (pi/4) tanh(4t/pi): alpha(0) = 0, alpha'(0) = 1, increasing,
    // range [0, pi/4). beta(t) = t^2/(1+t): beta(0) = beta'(0) = 0,
    // increasing, unbounded.

    pub fn ex42_alpha(t: f64) -> (f64, f64) {
        let c = 4.0 / std::f64::consts::PI;
        let th = (c * t).tanh();
        (std::f64::consts::FRAC_PI_4 * th, 1.0 - th * th)
    }

    pub fn ex42_beta(t: f64) -> (f64, f64) {
        let b = t * t / (1.0 + t);
        let db = (t * t + 2.0 * t) / (1.0 + t).powi(2);
        (b, db)
    }

    /// Forward map of regions I..IV (1..4). Returns (x, y, u).
    pub fn ex42_forward(region: u8, s: f64, t: f64) -> (Point, f64) {
        let (al, _) = ex42_alpha(t);
        let (be, _) = ex42_beta(t);
        let (sa, ca) = (al.sin(), al.cos());
        match region {
            1 => (
                Point::new(s * ca + be, s * sa + be),
                s * be * (ca - sa),
            ),
            2 => (
                Point::new(s * sa + be, s * ca + be),
                s * be * (sa - ca),
            ),
            3 => (
                Point::new(-s * sa - be, s * ca + be),
                s * be * (ca - sa),
            ),
            4 => (
                Point::new(-s * ca - be, s * sa + be),
                s * be * (sa - ca),
            ),
            _ => unreachable!("region 1..4"),
        }
    }

    fn ex42_region(p: Point) -> Option<u8> {
        if p.y <= 0.0 {
            return None; // region V or the x-axis: u = 0
        }
        if p.x >= p.y {
            Some(1)
        } else if p.x > 0.0 {
            Some(2)
        } else if -p.x < p.y {
            Some(3) // includes the positive y-axis x = 0
        } else {
            Some(4) // includes the seam -x = y
        }
    }

    /// Invert within the region containing p (upper half plane).
    pub fn ex42_region_invert(p: Point) -> Result<(u8, f64, f64)> {
        let region = ex42_region(p).ok_or(Error::OutsideRegion(p.x, p.y))?;
        // each region reduces to a monotone root in t with s = s(t) linear
        let (span, target) = match region {
            1 => (p.x - p.y, p.y),
            2 => (p.y - p.x, p.x),
            3 => (p.x + p.y, -p.x),
            4 => (-p.x - p.y, p.y),
            _ => unreachable!(),
        };
        // span = s (cos alpha - sin alpha) >= 0; h(t) = s sin(alpha) + beta - target
        let s_of_t = |t: f64| {
            let (al, _) = ex42_alpha(t);
            span / (al.cos() - al.sin())
        };
        let h = |t: f64| {
            let (al, _) = ex42_alpha(t);
            let (be, _) = ex42_beta(t);
            s_of_t(t) * al.sin() + be - target
        };
        let dh = |t: f64| {
            let (al, dal) = ex42_alpha(t);
            let (_, dbe) = ex42_beta(t);
            let (sa, ca) = (al.sin(), al.cos());
            let s = s_of_t(t);
            let ds = span * (sa + ca) * dal / (ca - sa).powi(2);
            ds * sa + s * ca * dal + dbe
        };
        if target <= 0.0 {
            // on the bounding ray of the region: t = 0
            return Ok((region, span, 0.0));
        }
        let mut hi = 1.0;
        let mut grow = 0;
        while h(hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Err(Error::NewtonDiverged(p.x, p.y));
            }
        }
        let t = newton_bisect(h, dh, 0.0, hi, 1e-13)?;
        Ok((region, s_of_t(t), t))
    }

    /// u and its exact gradient for Ex4_2 (upper half; zero below).
    pub fn ex42_u_grad(p: Point) -> (f64, (f64, f64)) {
        let Some(region) = ex42_region(p) else {
            return (0.0, (0.0, 0.0));
        };
        let (_, s, t) = match ex42_region_invert(p) {
            Ok(v) => v,
            Err(_) => return (f64::NAN, (f64::NAN, f64::NAN)),
        };
        let (al, dal) = ex42_alpha(t);
        let (be, dbe) = ex42_beta(t);
        let (sa, ca) = (al.sin(), al.cos());
        // forward partials per region
        let (x_s, x_t, y_s, y_t, u, u_s, u_t) = match region {
            1 => (
                ca,
                -s * dal * sa + dbe,
                sa,
                s * dal * ca + dbe,
                s * be * (ca - sa),
                be * (ca - sa),
                s * dbe * (ca - sa) + s * be * (-sa - ca) * dal,
            ),
            2 => (
                sa,
                s * dal * ca + dbe,
                ca,
                -s * dal * sa + dbe,
                s * be * (sa - ca),
                be * (sa - ca),
                s * dbe * (sa - ca) + s * be * (ca + sa) * dal,
            ),
            3 => (
                -sa,
                -s * dal * ca - dbe,
                ca,
                -s * dal * sa + dbe,
                s * be * (ca - sa),
                be * (ca - sa),
                s * dbe * (ca - sa) + s * be * (-sa - ca) * dal,
            ),
            4 => (
                -ca,
                s * dal * sa - dbe,
                sa,
                s * dal * ca + dbe,
                s * be * (sa - ca),
                be * (sa - ca),
                s * dbe * (sa - ca) + s * be * (ca + sa) * dal,
            ),
            _ => unreachable!(),
        };
        let det = x_s * y_t - x_t * y_s;
        let s_x = y_t / det;
        let s_y = -x_t / det;
        let t_x = -y_s / det;
        let t_y = x_s / det;
        (u, (u_s * s_x + u_t * t_x, u_s * s_y + u_t * t_y))
    }

    // ---- Example 4.3 (lower half) ------------------------------------------

    /// Region A is {x > 0, y < 0}, region B is {x < 0, y < 0}; the negative
    /// y-axis is the third singular half-line.
    pub fn ex43_lower_forward(region_a: bool, s: f64, t: f64) -> (Point, f64) {
        let (al, _) = ex42_alpha(t);
        let (be, _) = ex42_beta(t);
        let (sa, ca) = (al.sin(), al.cos());
        if region_a {
            (
                Point::new(s * ca, -s * sa - be),
                -s * be * ca,
            )
        } else {
            (
                Point::new(-s * ca, -s * sa - be),
                s * be * ca,
            )
        }
    }

    pub fn ex43_lower_invert(p: Point) -> Result<(bool, f64, f64)> {
        if p.y >= 0.0 {
            return Err(Error::OutsideRegion(p.x, p.y));
        }
        let region_a = p.x >= 0.0;
        let ax = p.x.abs();
        if ax == 0.0 {
            // negative y-axis: t with beta(t) = -y and s = 0
            let target = -p.y;
            let h = |t: f64| ex42_beta(t).0 - target;
            let dh = |t: f64| ex42_beta(t).1;
            let mut hi = 1.0;
            while h(hi) < 0.0 {
                hi *= 2.0;
                if hi > 1e18 {
                    return Err(Error::NewtonDiverged(p.x, p.y));
                }
            }
            let t = newton_bisect(h, dh, 0.0, hi, 1e-13)?;
            return Ok((region_a, 0.0, t));
        }
        // s = |x| / cos(alpha); h(t) = |x| tan(alpha) + beta + y
        let h = |t: f64| {
            let (al, _) = ex42_alpha(t);
            let (be, _) = ex42_beta(t);
            ax * al.tan() + be + p.y
        };
        let dh = |t: f64| {
            let (al, dal) = ex42_alpha(t);
            let (_, dbe) = ex42_beta(t);
            ax * dal / al.cos().powi(2) + dbe
        };
        let mut hi = 1.0;
        let mut grow = 0;
        while h(hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Err(Error::NewtonDiverged(p.x, p.y));
            }
        }
        let t = newton_bisect(h, dh, 0.0, hi, 1e-13)?;
        let (al, _) = ex42_alpha(t);
        Ok((region_a, ax / al.cos(), t))
    }

    pub fn ex43_u_grad(p: Point) -> (f64, (f64, f64)) {
        if p.y >= 0.0 {
            return ex42_u_grad(p);
        }
        let (region_a, s, t) = match ex43_lower_invert(p) {
            Ok(v) => v,
            Err(_) => return (f64::NAN, (f64::NAN, f64::NAN)),
        };
        let (al, dal) = ex42_alpha(t);
        let (be, dbe) = ex42_beta(t);
        let (sa, ca) = (al.sin(), al.cos());
        let sign = if region_a { 1.0 } else { -1.0 };
        // forward: x = sign * s cos(al), y = -s sin(al) - be,
        //          u = -sign * s be cos(al)
        let x_s = sign * ca;
        let x_t = -sign * s * dal * sa;
        let y_s = -sa;
        let y_t = -s * dal * ca - dbe;
        let u = -sign * s * be * ca;
        let u_s = -sign * be * ca;
        let u_t = -sign * (s * dbe * ca - s * be * sa * dal);
        let det = x_s * y_t - x_t * y_s;
        let s_x = y_t / det;
        let s_y = -x_t / det;
        let t_x = -y_s / det;
        let t_y = x_s / det;
        (u, (u_s * s_x + u_t * t_x, u_s * s_y + u_t * t_y))
    }

    // ---- Example 4.4 --------------------------------------------------------
    //
    // alpha(t) = t (1-t)(1-2t); beta is the normalized bump integral, flat to
    // all orders at 0 and 1. The singular segment is L = {0} x [0, 1].

    pub fn ex44_alpha(t: f64) -> (f64, f64) {
        let a = t * (1.0 - t) * (1.0 - 2.0 * t);
        let da = 1.0 - 6.0 * t + 6.0 * t * t;
        (a, da)
    }

    fn bump(s: f64) -> f64 {
        if s <= 0.0 || s >= 1.0 {
            0.0
        } else {
            (-1.0 / (s * (1.0 - s))).exp()
        }
    }

    const BETA_TABLE_N: usize = 8192;

    fn beta_table() -> &'static (Vec<f64>, f64) {
        static TABLE: OnceLock<(Vec<f64>, f64)> = OnceLock::new();
        TABLE.get_or_init(|| {
            // cumulative Simpson over a uniform grid
            let n = BETA_TABLE_N;
            let h = 1.0 / n as f64;
            let mut cum = Vec::with_capacity(n + 1);
            cum.push(0.0);
            let mut acc = 0.0;
            for k in 0..n {
                let a = k as f64 * h;
                let b = a + h;
                acc += h / 6.0 * (bump(a) + 4.0 * bump(0.5 * (a + b)) + bump(b));
                cum.push(acc);
            }
            let total = acc;
            (cum, total)
        })
    }

    /// beta(t) and beta'(t): the normalized bump integral.
    pub fn ex44_beta(t: f64) -> (f64, f64) {
        let (cum, total) = beta_table();
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0);
        }
        let x = t * BETA_TABLE_N as f64;
        let k = (x as usize).min(BETA_TABLE_N - 1);
        let frac = x - k as f64;
        let h = 1.0 / BETA_TABLE_N as f64;
        // integrate the remainder of the cell with Simpson for smoothness
        let a = k as f64 * h;
        let b = a + frac * h;
        let part = (b - a) / 6.0 * (bump(a) + 4.0 * bump(0.5 * (a + b)) + bump(b));
        ((cum[k] + part) / total, bump(t) / total)
    }

    /// Forward map of the strip: s >= 0 uses the plus side, s < 0 the minus
    /// side.
    pub fn ex44_forward(s: f64, t: f64) -> (Point, f64) {
        if s >= 0.0 {
            ex44_forward_plus(s, t)
        } else {
            ex44_forward_minus(s, t)
        }
    }

    /// Plus side: x = s cos(a), y = s sin(a) + beta, s >= 0.
    pub fn ex44_forward_plus(s: f64, t: f64) -> (Point, f64) {
        let (al, _) = ex44_alpha(t);
        let (be, _) = ex44_beta(t);
        (
            Point::new(s * al.cos(), s * al.sin() + be),
            s * be * al.cos(),
        )
    }

    /// Minus side: x = s cos(a), y = -s sin(a) + beta, s <= 0.
    pub fn ex44_forward_minus(s: f64, t: f64) -> (Point, f64) {
        let (al, _) = ex44_alpha(t);
        let (be, _) = ex44_beta(t);
        (
            Point::new(s * al.cos(), -s * al.sin() + be),
            s * be * al.cos(),
        )
    }

    /// Invert the strip map for 0 < y < 1; returns (s, t) with the sign
    /// convention of the forward maps.
    pub fn ex44_invert(p: Point) -> Result<(f64, f64)> {
        if !(p.y > 0.0 && p.y < 1.0) {
            return Err(Error::OutsideRegion(p.x, p.y));
        }
        let ax = p.x.abs();
        // h(t) = |x| tan(alpha) + beta - y, monotone increasing for |x|
        // within the strip width.
        let h = |t: f64| {
            let (al, _) = ex44_alpha(t);
            let (be, _) = ex44_beta(t);
            ax * al.tan() + be - p.y
        };
        let dh = |t: f64| {
            let (al, dal) = ex44_alpha(t);
            let (_, dbe) = ex44_beta(t);
            ax * dal / al.cos().powi(2) + dbe
        };
        let t = newton_bisect(h, dh, 0.0, 1.0, 1e-14)?;
        let (al, _) = ex44_alpha(t);
        let s = p.x / al.cos();
        Ok((s, t))
    }

    pub fn ex44_u_grad(p: Point) -> (f64, (f64, f64)) {
        if p.y <= 0.0 {
            return (0.0, (0.0, 0.0));
        }
        if p.y >= 1.0 {
            return (p.x, (1.0, 0.0));
        }
        let (_, t) = match ex44_invert(p) {
            Ok(v) => v,
            Err(_) => return (f64::NAN, (f64::NAN, f64::NAN)),
        };
        let (al, dal) = ex44_alpha(t);
        let (be, dbe) = ex44_beta(t);
        let tana = al.tan();
        let sec2 = 1.0 / al.cos().powi(2);
        // u = x * beta(t(x, y)); on the plus side h_t = x sec^2 a' + beta',
        // t_x = -tan(a)/h_t, t_y = 1/h_t; mirrored signs on the minus side.
        let (t_x, t_y) = if p.x >= 0.0 {
            let ht = p.x * sec2 * dal + dbe;
            (-tana / ht, 1.0 / ht)
        } else {
            let ht = -p.x * sec2 * dal + dbe;
            (tana / ht, 1.0 / ht)
        };
        let u = p.x * be;
        let ux = be + p.x * dbe * t_x;
        let uy = p.x * dbe * t_y;
        (u, (ux, uy))
    }

    /// One-sided second derivative of u in x on the singular segment, at
    /// height y = beta(t): equals -2 tan(alpha) from the plus side and
    /// +2 tan(alpha) from the minus side.
    pub fn ex44_second_derivative_gap(t: f64) -> f64 {
        let (al, _) = ex44_alpha(t);
        4.0 * al.tan().abs()
    }
}

// ---------------------------------------------------------------------------
// member builders

fn radial_plane() -> GalleryMember {
    let w = Window::new(-2.5, 2.5, -2.5, 2.5).unwrap();
    let problem = SurfaceProblem::new(
        ScalarField::constant(0.0, w),
        PlanarVectorField::heisenberg(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    let probes = [
        Point::new(1.2, 0.0),
        Point::new(0.0, 1.2),
        Point::new(-1.2, 0.0),
        Point::new(-0.8, -0.9),
    ]
    .iter()
    .map(|&start| LimitProbe {
        start,
        direction: -1,
        expected: LimitKind::HalfCurl,
    })
    .collect();
    GalleryMember {
        id: GalleryId::RadialPlane,
        problem: Some(problem),
        truth: GroundTruth {
            singular_points: vec![Point::new(0.0, 0.0)],
            limit_probes: probes,
            ..Default::default()
        },
    }
}

fn constant_field() -> GalleryMember {
    let w = Window::new(0.25, 6.0, -3.0, 3.0).unwrap();
    let problem = SurfaceProblem::new(
        ScalarField::from_expr(
            crate::expr::parse("x*x/2", &["x", "y"]).unwrap(),
            w,
        ),
        PlanarVectorField::zero(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    GalleryMember {
        id: GalleryId::ConstantField,
        problem: Some(problem),
        truth: GroundTruth::default(),
    }
}

fn ex41() -> GalleryMember {
    let w = Window::new(-3.0, 3.0, -2.5, 2.5).unwrap();
    let u = ScalarField::from_fn_with_grad(
        w,
        |x, y| maps::ex41_u_grad(Point::new(x, y)).0,
        |x, y| maps::ex41_u_grad(Point::new(x, y)).1,
    );
    let problem = SurfaceProblem::new(
        u,
        PlanarVectorField::heisenberg(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    let mut probes: Vec<LimitProbe> = [-0.5f64, -1.0, -1.5, -2.0]
        .iter()
        .map(|&x0| LimitProbe {
            start: maps::ex41_forward(x0, 0.8, true),
            direction: -1,
            expected: LimitKind::FullCurl,
        })
        .collect();
    probes.push(LimitProbe {
        start: maps::ex41_forward(-1.0, 0.8, false),
        direction: -1,
        expected: LimitKind::FullCurl,
    });
    // the positive x-axis is itself a characteristic with D' = 1
    probes.push(LimitProbe {
        start: Point::new(1.5, 0.0),
        direction: -1,
        expected: LimitKind::HalfCurl,
    });
    GalleryMember {
        id: GalleryId::Ex4_1,
        problem: Some(problem),
        truth: GroundTruth {
            singular_segments: vec![(Point::new(-3.0, 0.0), Point::new(0.0, 0.0))],
            limit_probes: probes,
            seams: vec![Seam {
                a: Point::new(-2.9, 0.0),
                b: Point::new(2.9, 0.0),
                normal: Point::new(0.0, 1.0),
            }],
            ..Default::default()
        },
    }
}

fn ex42() -> GalleryMember {
    let w = Window::new(-3.0, 3.0, -3.0, 3.0).unwrap();
    let u = ScalarField::from_fn_with_grad(
        w,
        |x, y| maps::ex42_u_grad(Point::new(x, y)).0,
        |x, y| maps::ex42_u_grad(Point::new(x, y)).1,
    );
    let problem = SurfaceProblem::new(
        u,
        PlanarVectorField::heisenberg(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    let diag_len = 3.0f64;
    let mut probes = Vec::new();
    for region in 1..=4u8 {
        let (start, _) = maps::ex42_forward(region, 0.9, 1.0);
        probes.push(LimitProbe {
            start,
            direction: -1,
            expected: LimitKind::FullCurl,
        });
    }
    probes.push(LimitProbe {
        start: Point::new(0.0, -1.5),
        direction: -1,
        expected: LimitKind::HalfCurl,
    });
    GalleryMember {
        id: GalleryId::Ex4_2,
        problem: Some(problem),
        truth: GroundTruth {
            singular_points: vec![Point::new(0.0, 0.0)],
            singular_segments: vec![
                (Point::new(0.0, 0.0), Point::new(diag_len, diag_len)),
                (Point::new(0.0, 0.0), Point::new(-diag_len, diag_len)),
            ],
            limit_probes: probes,
            seams: vec![
                Seam {
                    a: Point::new(0.1, 0.1),
                    b: Point::new(1.9, 1.9),
                    normal: Point::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
                },
                Seam {
                    a: Point::new(-0.1, 0.1),
                    b: Point::new(-1.9, 1.9),
                    normal: Point::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
                },
                Seam {
                    a: Point::new(0.0, 0.1),
                    b: Point::new(0.0, 2.4),
                    normal: Point::new(1.0, 0.0),
                },
                Seam {
                    a: Point::new(-2.4, 0.0),
                    b: Point::new(2.4, 0.0),
                    normal: Point::new(0.0, 1.0),
                },
            ],
            ..Default::default()
        },
    }
}

fn ex43() -> GalleryMember {
    let w = Window::new(-3.0, 3.0, -3.0, 3.0).unwrap();
    let u = ScalarField::from_fn_with_grad(
        w,
        |x, y| maps::ex43_u_grad(Point::new(x, y)).0,
        |x, y| maps::ex43_u_grad(Point::new(x, y)).1,
    );
    let problem = SurfaceProblem::new(
        u,
        PlanarVectorField::heisenberg(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    let mut probes = Vec::new();
    for region in 1..=4u8 {
        let (start, _) = maps::ex42_forward(region, 0.9, 1.0);
        probes.push(LimitProbe {
            start,
            direction: -1,
            expected: LimitKind::FullCurl,
        });
    }
    for &region_a in &[true, false] {
        let (start, _) = maps::ex43_lower_forward(region_a, 0.9, 1.0);
        probes.push(LimitProbe {
            start,
            direction: -1,
            expected: LimitKind::FullCurl,
        });
    }
    GalleryMember {
        id: GalleryId::Ex4_3,
        problem: Some(problem),
        truth: GroundTruth {
            singular_points: vec![Point::new(0.0, 0.0)],
            singular_segments: vec![
                (Point::new(0.0, 0.0), Point::new(3.0, 3.0)),
                (Point::new(0.0, 0.0), Point::new(-3.0, 3.0)),
                (Point::new(0.0, 0.0), Point::new(0.0, -3.0)),
            ],
            limit_probes: probes,
            seams: vec![
                Seam {
                    a: Point::new(0.1, 0.1),
                    b: Point::new(1.9, 1.9),
                    normal: Point::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
                },
                Seam {
                    a: Point::new(0.0, -0.1),
                    b: Point::new(0.0, -2.4),
                    normal: Point::new(1.0, 0.0),
                },
                Seam {
                    a: Point::new(-2.4, 0.0),
                    b: Point::new(2.4, 0.0),
                    normal: Point::new(0.0, 1.0),
                },
            ],
            ..Default::default()
        },
    }
}

fn ex44() -> GalleryMember {
    let w = Window::new(-0.8, 0.8, -0.5, 1.5).unwrap();
    let u = ScalarField::from_fn_with_grad(
        w,
        |x, y| maps::ex44_u_grad(Point::new(x, y)).0,
        |x, y| maps::ex44_u_grad(Point::new(x, y)).1,
    );
    let problem = SurfaceProblem::new(
        u,
        PlanarVectorField::heisenberg(w),
        ScalarField::constant(0.0, w),
    )
    .unwrap();
    let mut probes = Vec::new();
    for &t in &[0.3f64, 0.5, 0.7] {
        let (start, _) = maps::ex44_forward_plus(0.4, t);
        probes.push(LimitProbe {
            start,
            direction: -1,
            expected: LimitKind::FullCurl,
        });
    }
    let (start_minus, _) = maps::ex44_forward_minus(-0.4, 0.5);
    probes.push(LimitProbe {
        start: start_minus,
        direction: -1,
        expected: LimitKind::FullCurl,
    });
    GalleryMember {
        id: GalleryId::Ex4_4,
        problem: Some(problem),
        truth: GroundTruth {
            singular_segments: vec![(Point::new(0.0, 0.0), Point::new(0.0, 1.0))],
            limit_probes: probes,
            seams: vec![
                Seam {
                    a: Point::new(0.0, 0.05),
                    b: Point::new(0.0, 0.95),
                    normal: Point::new(1.0, 0.0),
                },
                Seam {
                    a: Point::new(-0.7, 0.0),
                    b: Point::new(0.7, 0.0),
                    normal: Point::new(0.0, 1.0),
                },
                Seam {
                    a: Point::new(-0.7, 1.0),
                    b: Point::new(0.7, 1.0),
                    normal: Point::new(0.0, 1.0),
                },
            ],
            ..Default::default()
        },
    }
}

fn ex72_domain() -> GalleryMember {
    GalleryMember {
        id: GalleryId::Ex7_2Domain,
        problem: None,
        truth: GroundTruth {
            declared_index: Some(DeclaredIndexTruth {
                component_count: 3,
                boundary_indices: vec![-2.0, -2.0, 0.0],
                chi: -1,
            }),
            ..Default::default()
        },
    }
}
