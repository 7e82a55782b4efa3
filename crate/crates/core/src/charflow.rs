//! Characteristic and seed curve tracing.
//!
//! Characteristic curves are integral curves of `Nperp`; along them the state
//! `(x, y, theta, u)` obeys
//!
//! ```text
//! dx/ds = sin(theta)      dtheta/ds = -H
//! dy/ds = -cos(theta)     du/ds     = -F1 sin(theta) + F2 cos(theta)
//! ```
//!
//! with `s` the unit-speed parameter. `theta` is carried by the ODE rather
//! than re-read from the field, which keeps the angle well defined while a
//! curve runs into a singular point; a drift monitor compares against the
//! field angle where the field is healthy. Seed curves are integral curves
//! of `N` and re-read `theta` from the field at every node.

use crate::error::{Error, Result};
use crate::fields::{Point, SurfaceProblem, Window};

/// One node of a traced curve.
#[derive(Debug, Clone, Copy)]
pub struct CharState {
    /// Arc length from the start of the trace (strictly increasing).
    pub sigma: f64,
    pub x: f64,
    pub y: f64,
    /// Continuously unwrapped angle.
    pub theta: f64,
    pub u: f64,
    /// D sampled from the field at this node.
    pub d: f64,
}

impl CharState {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StopReason {
    HitSingular,
    HitBoundary,
    MaxLength,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Characteristic,
    Seed,
}

/// Stopping rules for a trace.
#[derive(Debug, Clone, Copy)]
pub struct StopPolicy {
    pub max_length: f64,
    pub eps_d: f64,
    pub boundary: Window,
    pub closure_tol: f64,
    /// Fixed RK4 step; `None` picks the default
    /// `min(1e-3 * diagonal, 0.1 / max |H|)`.
    pub step: Option<f64>,
    /// When false, the trace rides through the singular set (the state ODE
    /// is smooth there); used to evaluate the characteristic flow map at a
    /// fixed arc length.
    pub stop_at_singular: bool,
}

impl StopPolicy {
    pub fn for_problem(problem: &SurfaceProblem) -> Self {
        let w = problem.window();
        StopPolicy {
            max_length: 4.0 * w.diagonal(),
            eps_d: problem.eps_d,
            boundary: w,
            closure_tol: 1e-3 * w.diagonal(),
            step: None,
            stop_at_singular: true,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_max_length(mut self, len: f64) -> Self {
        self.max_length = len;
        self
    }

    pub fn through_singular(mut self) -> Self {
        self.stop_at_singular = false;
        self
    }

    fn resolve_step(&self, problem: &SurfaceProblem) -> f64 {
        if let Some(s) = self.step {
            return s;
        }
        // Sample |H| coarsely for the curvature-limited bound.
        let w = problem.window();
        let mut max_h: f64 = 0.0;
        for j in 0..9 {
            for i in 0..9 {
                let p = Point::new(
                    w.x0 + (w.x1 - w.x0) * (i as f64 + 0.5) / 9.0,
                    w.y0 + (w.y1 - w.y0) * (j as f64 + 0.5) / 9.0,
                );
                max_h = max_h.max(problem.h.eval(p).abs());
            }
        }
        let base = 1e-3 * w.diagonal();
        if max_h > 0.0 {
            base.min(0.1 / max_h)
        } else {
            base
        }
    }
}

/// A traced curve with its stop classification.
#[derive(Debug, Clone)]
pub struct CharCurve {
    pub nodes: Vec<CharState>,
    pub stop_reason: StopReason,
    pub kind: CurveKind,
    /// +1 traces along the field direction, -1 against it.
    pub direction: i8,
    /// Worst |theta_ode - theta_field| observed where D > 10 eps_D
    /// (characteristic traces only).
    pub max_theta_drift: f64,
    pub drift_flagged: bool,
}

impl CharCurve {
    pub fn start(&self) -> &CharState {
        &self.nodes[0]
    }

    pub fn end(&self) -> &CharState {
        self.nodes.last().expect("curve has nodes")
    }

    pub fn length(&self) -> f64 {
        self.end().sigma
    }

    /// Interpolate the position at arc length `s` (linear between nodes).
    pub fn point_at(&self, s: f64) -> Point {
        let nodes = &self.nodes;
        if s <= nodes[0].sigma {
            return nodes[0].point();
        }
        for w in nodes.windows(2) {
            if s <= w[1].sigma {
                let t = (s - w[0].sigma) / (w[1].sigma - w[0].sigma);
                return Point::new(
                    w[0].x + t * (w[1].x - w[0].x),
                    w[0].y + t * (w[1].y - w[0].y),
                );
            }
        }
        self.end().point()
    }
}

fn wrap_to_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * std::f64::consts::PI);
    if r > std::f64::consts::PI {
        r -= 2.0 * std::f64::consts::PI;
    }
    r
}

#[derive(Clone, Copy)]
struct OdeState {
    x: f64,
    y: f64,
    theta: f64,
    u: f64,
}

/// Trace the characteristic curve through `start`.
///
/// `direction = +1` follows `Nperp`, `-1` follows `-Nperp`. Stops are
/// refined by bisection on the triggering condition to within
/// `1e-3 x step`; a singular stop additionally extrapolates the endpoint
/// linearly to the D = 0 crossing.
pub fn trace_characteristic(
    problem: &SurfaceProblem,
    start: Point,
    direction: i8,
    policy: &StopPolicy,
) -> Result<CharCurve> {
    let frame = problem.eval_frame(start)?;
    if frame.d <= policy.eps_d {
        return Err(Error::SingularStart(start.x, start.y));
    }
    let sgn = if direction >= 0 { 1.0 } else { -1.0 };
    let rhs = |s: &OdeState| {
        let p = Point::new(s.x, s.y);
        let f = problem.f.eval(p);
        let h = problem.h.eval(p);
        let (sin_t, cos_t) = s.theta.sin_cos();
        OdeState {
            x: sgn * sin_t,
            y: sgn * -cos_t,
            theta: sgn * -h,
            u: sgn * (-f.x * sin_t + f.y * cos_t),
        }
    };
    let init = OdeState {
        x: start.x,
        y: start.y,
        theta: frame.theta,
        u: problem.u.eval(start),
    };
    trace_ode(
        problem,
        init,
        rhs,
        policy,
        CurveKind::Characteristic,
        direction,
    )
}

/// Trace the seed curve (integral curve of `N`) through `start`.
///
/// The angle is re-read from the field at every stage evaluation; there is
/// no ODE for `theta` along seeds.
pub fn trace_seed(
    problem: &SurfaceProblem,
    start: Point,
    direction: i8,
    policy: &StopPolicy,
) -> Result<CharCurve> {
    let frame = problem.eval_frame(start)?;
    if frame.d <= policy.eps_d {
        return Err(Error::SingularStart(start.x, start.y));
    }
    let sgn = if direction >= 0 { 1.0 } else { -1.0 };
    let rhs = |s: &OdeState| {
        let p = Point::new(s.x, s.y);
        let hv = problem.horizontal_vector(p);
        let d = hv.norm();
        let n = if d > 0.0 {
            hv.scale(1.0 / d)
        } else {
            Point::new(0.0, 0.0)
        };
        OdeState {
            x: sgn * n.x,
            y: sgn * n.y,
            theta: 0.0, // re-read below, not integrated
            u: 0.0,
        }
    };
    let init = OdeState {
        x: start.x,
        y: start.y,
        theta: frame.theta,
        u: problem.u.eval(start),
    };
    trace_ode(problem, init, rhs, policy, CurveKind::Seed, direction)
}

fn rk4_step(rhs: &impl Fn(&OdeState) -> OdeState, s: &OdeState, h: f64) -> OdeState {
    let k1 = rhs(s);
    let at = |base: &OdeState, k: &OdeState, c: f64| OdeState {
        x: base.x + c * k.x,
        y: base.y + c * k.y,
        theta: base.theta + c * k.theta,
        u: base.u + c * k.u,
    };
    let k2 = rhs(&at(s, &k1, 0.5 * h));
    let k3 = rhs(&at(s, &k2, 0.5 * h));
    let k4 = rhs(&at(s, &k3, h));
    OdeState {
        x: s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        y: s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        theta: s.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        u: s.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
    }
}

fn trace_ode(
    problem: &SurfaceProblem,
    init: OdeState,
    rhs: impl Fn(&OdeState) -> OdeState,
    policy: &StopPolicy,
    kind: CurveKind,
    direction: i8,
) -> Result<CharCurve> {
    let step = policy.resolve_step(problem);
    let stall_floor = 1e-12 * problem.window().diagonal();
    if step < stall_floor {
        return Err(Error::IntegratorStall(step));
    }
    let d_at = |p: Point| problem.d(p);
    let field_theta = |p: Point, prev: f64| -> f64 {
        let hv = problem.horizontal_vector(p);
        let raw = hv.y.atan2(hv.x);
        // unwrap to the 2*pi representative nearest prev
        prev + wrap_to_pi(raw - prev)
    };

    let mut nodes: Vec<CharState> = Vec::new();
    let mut max_drift: f64 = 0.0;
    let start_pt = Point::new(init.x, init.y);
    nodes.push(CharState {
        sigma: 0.0,
        x: init.x,
        y: init.y,
        theta: init.theta,
        u: init.u,
        d: d_at(start_pt),
    });

    let mut state = init;
    let mut sigma = 0.0;
    let singular =
        |p: Point| policy.stop_at_singular && d_at(p) <= policy.eps_d;
    let outside = |p: Point| !policy.boundary.contains(p);

    // Shrinking steps near the singular set add a logarithmic number of
    // extra iterations; budget generously.
    let max_steps = (policy.max_length / step).ceil() as usize + 8192;
    let mut stop = None;

    for _ in 0..max_steps {
        if sigma >= policy.max_length * (1.0 - 1e-12) {
            stop = Some(StopReason::MaxLength);
            break;
        }
        let mut h = step.min(policy.max_length - sigma);
        // A fixed step can hop straight over the thin D <= eps_D set; once
        // D is comparable to the step, resolve the approach by never
        // advancing more than a quarter of the current D.
        if policy.stop_at_singular {
            let d_here = nodes.last().map(|n| n.d).unwrap_or(f64::INFINITY);
            if d_here < 4.0 * h {
                h = (d_here / 4.0).max(0.5 * policy.eps_d).min(h);
            }
        }
        if h < stall_floor {
            if policy.max_length - sigma < stall_floor {
                stop = Some(StopReason::MaxLength);
                break;
            }
            return Err(Error::IntegratorStall(h));
        }
        let next = rk4_step(&rhs, &state, h);
        let next_pt = Point::new(next.x, next.y);
        if next.x.is_nan() || next.y.is_nan() {
            return Err(Error::IntegratorStall(h));
        }

        if outside(next_pt) || singular(next_pt) {
            // Refine the event location by bisection on the step fraction.
            let is_event = |frac: f64| {
                let s = rk4_step(&rhs, &state, frac * h);
                let p = Point::new(s.x, s.y);
                outside(p) || singular(p)
            };
            let mut lo = 0.0;
            let mut hi = 1.0;
            while (hi - lo) * h > 1e-3 * step {
                let mid = 0.5 * (lo + hi);
                if is_event(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut hit = rk4_step(&rhs, &state, hi * h);
            let hit_pt = Point::new(hit.x, hit.y);
            let reason = if outside(hit_pt) {
                StopReason::HitBoundary
            } else {
                StopReason::HitSingular
            };
            sigma += hi * h;
            if kind == CurveKind::Seed {
                hit.theta = field_theta(hit_pt, state.theta);
                hit.u = problem.u.eval(clamp_to(hit_pt, &problem.window()));
            }
            let mut d_end = d_at(clamp_to(hit_pt, &problem.window()));
            let mut end_state = CharState {
                sigma,
                x: hit.x,
                y: hit.y,
                theta: hit.theta,
                u: hit.u,
                d: d_end,
            };
            if reason == StopReason::HitSingular {
                // Extrapolate linearly onto the D = 0 crossing using the
                // D-slope over the last full node.
                if let Some(prev) = nodes.last() {
                    let dd = prev.d - d_end;
                    let ds = sigma - prev.sigma;
                    if dd > 0.0 && ds > 0.0 {
                        let extra = d_end * ds / dd;
                        let dirv =
                            Point::new(hit.x - prev.x, hit.y - prev.y).scale(1.0 / ds);
                        end_state.x += dirv.x * extra;
                        end_state.y += dirv.y * extra;
                        end_state.sigma += extra;
                        d_end = d_at(clamp_to(end_state.point(), &problem.window()));
                        end_state.d = d_end.min(policy.eps_d);
                    }
                }
            }
            nodes.push(end_state);
            return Ok(finish(
                nodes,
                reason,
                kind,
                direction,
                max_drift,
            ));
        }

        sigma += h;
        state = next;
        let mut theta = state.theta;
        let u_val;
        if kind == CurveKind::Seed {
            theta = field_theta(next_pt, nodes.last().unwrap().theta);
            state.theta = theta;
            u_val = problem.u.eval(next_pt);
            state.u = u_val;
        } else {
            u_val = state.u;
            // Drift monitor against the field angle.
            let d_here = d_at(next_pt);
            if d_here > 10.0 * policy.eps_d {
                let drift = wrap_to_pi(field_theta(next_pt, theta) - theta).abs();
                max_drift = max_drift.max(drift);
            }
        }
        nodes.push(CharState {
            sigma,
            x: state.x,
            y: state.y,
            theta,
            u: u_val,
            d: d_at(next_pt),
        });

        // Closure test for closed curves (seed circles and the like). The
        // guard keeps a curve that is merely leaving the start from
        // triggering it.
        if sigma > (4.0 * policy.closure_tol).max(10.0 * step)
            && next_pt.dist(start_pt) < policy.closure_tol
        {
            return Ok(finish(
                nodes,
                StopReason::Closed,
                kind,
                direction,
                max_drift,
            ));
        }
    }

    let reason = stop.unwrap_or(StopReason::MaxLength);
    Ok(finish(nodes, reason, kind, direction, max_drift))
}

fn clamp_to(p: Point, w: &Window) -> Point {
    Point::new(p.x.clamp(w.x0, w.x1), p.y.clamp(w.y0, w.y1))
}

fn finish(
    nodes: Vec<CharState>,
    stop_reason: StopReason,
    kind: CurveKind,
    direction: i8,
    max_theta_drift: f64,
) -> CharCurve {
    CharCurve {
        nodes,
        stop_reason,
        kind,
        direction,
        max_theta_drift,
        drift_flagged: max_theta_drift > 1e-3,
    }
}

/// Maximum deviation of the curve from the contact condition
/// `du + F1 dx + F2 dy = 0`.
///
/// Recomputes `u` by integrating `-F1 dx - F2 dy` along the polyline from
/// the first node (midpoint rule per segment) and returns the worst
/// disagreement with the stored `u` values.
pub fn contact_defect(curve: &CharCurve, problem: &SurfaceProblem) -> f64 {
    let nodes = &curve.nodes;
    if nodes.len() < 2 {
        return 0.0;
    }
    let mut u = nodes[0].u;
    let mut worst: f64 = 0.0;
    for w in nodes.windows(2) {
        let a = w[0].point();
        let b = w[1].point();
        let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        let f = problem.f.eval(mid);
        u += -f.x * (b.x - a.x) - f.y * (b.y - a.y);
        worst = worst.max((u - w[1].u).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fields::{PlanarVectorField, ScalarField};

    fn radial() -> SurfaceProblem {
        let w = Window::new(-4.0, 4.0, -4.0, 4.0).unwrap();
        SurfaceProblem::new(
            ScalarField::constant(0.0, w),
            PlanarVectorField::heisenberg(w),
            ScalarField::constant(0.0, w),
        )
        .unwrap()
    }

    /// u = x, F = 0 gives theta = 0 everywhere; with prescribed H = 1 the
    /// characteristic is a unit circle: theta = -s, x = cos s - 1,
    /// y = -sin s.
    #[test]
    fn constant_curvature_traces_a_circle() {
        let w = Window::new(-6.0, 6.0, -6.0, 6.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::from_expr(parse("x", &["x", "y"]).unwrap(), w),
            PlanarVectorField::zero(w),
            ScalarField::constant(1.0, w),
        )
        .unwrap();
        let policy = StopPolicy::for_problem(&p)
            .with_max_length(std::f64::consts::PI)
            .with_step(1e-3);
        let c = trace_characteristic(&p, Point::new(0.0, 0.0), 1, &policy).unwrap();
        assert_eq!(c.stop_reason, StopReason::MaxLength);
        let end = c.end();
        assert!((end.x - (-2.0)).abs() < 1e-8, "x end {}", end.x);
        assert!(end.y.abs() < 1e-8, "y end {}", end.y);
        assert!((end.theta - (-std::f64::consts::PI)).abs() < 1e-8);
    }

    #[test]
    fn zero_curvature_is_a_straight_line() {
        let p = radial();
        let policy = StopPolicy::for_problem(&p).with_max_length(1.5);
        let c = trace_characteristic(&p, Point::new(1.0, 0.0), 1, &policy).unwrap();
        let th0 = c.start().theta;
        for n in &c.nodes {
            assert!((n.theta - th0).abs() < 1e-12);
        }
        // straight: endpoints and midpoints collinear
        let a = c.start().point();
        let b = c.end().point();
        let m = c.point_at(0.5 * c.length());
        assert!((b - a).cross(m - a).abs() < 1e-8);
    }

    #[test]
    fn radial_ray_hits_singular_origin() {
        let p = radial();
        let policy = StopPolicy::for_problem(&p);
        // At (1, 0): N = (0, 1), Nperp = (1, 0): direction -1 walks toward
        // the origin.
        let c = trace_characteristic(&p, Point::new(1.0, 0.0), -1, &policy).unwrap();
        assert_eq!(c.stop_reason, StopReason::HitSingular);
        let end = c.end();
        assert!(end.point().norm() < 1e-6, "end {:?}", end.point());
        assert!((c.length() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_speed_between_nodes() {
        let p = radial();
        let policy = StopPolicy::for_problem(&p).with_max_length(2.0);
        let c = trace_characteristic(&p, Point::new(0.5, 0.8), 1, &policy).unwrap();
        for w in c.nodes.windows(2) {
            let ds = w[1].sigma - w[0].sigma;
            let dist = w[1].point().dist(w[0].point());
            assert!((dist / ds - 1.0).abs() < 1e-6, "speed {}", dist / ds);
        }
    }

    #[test]
    fn seed_curves_of_radial_field_close_up() {
        // N is the circular field, so seed curves are circles.
        let p = radial();
        let policy = StopPolicy::for_problem(&p).with_max_length(10.0);
        let c = trace_seed(&p, Point::new(1.0, 0.0), 1, &policy).unwrap();
        assert_eq!(c.stop_reason, StopReason::Closed);
        assert!((c.length() - 2.0 * std::f64::consts::PI).abs() < 0.02);
        for n in &c.nodes {
            assert!((n.point().norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn seed_of_constant_field_is_horizontal() {
        let w = Window::new(0.5, 4.0, -2.0, 2.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::from_expr(parse("x*x/2", &["x", "y"]).unwrap(), w),
            PlanarVectorField::zero(w),
            ScalarField::constant(0.0, w),
        )
        .unwrap();
        let policy = StopPolicy::for_problem(&p).with_max_length(1.0);
        let c = trace_seed(&p, Point::new(1.0, 0.3), 1, &policy).unwrap();
        for n in &c.nodes {
            assert!((n.y - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_start_is_rejected() {
        let p = radial();
        let policy = StopPolicy::for_problem(&p);
        assert!(matches!(
            trace_characteristic(&p, Point::new(0.0, 0.0), 1, &policy),
            Err(Error::SingularStart(_, _))
        ));
    }

    #[test]
    fn contact_defect_single_node_is_zero() {
        let p = radial();
        let c = CharCurve {
            nodes: vec![CharState {
                sigma: 0.0,
                x: 1.0,
                y: 0.0,
                theta: 0.0,
                u: 0.0,
                d: 1.0,
            }],
            stop_reason: StopReason::MaxLength,
            kind: CurveKind::Characteristic,
            direction: 1,
            max_theta_drift: 0.0,
            drift_flagged: false,
        };
        assert_eq!(contact_defect(&c, &p), 0.0);
    }

    #[test]
    fn contact_defect_vanishes_on_radial_rays() {
        // u = 0 exactly along rays of the radial example.
        let p = radial();
        let policy = StopPolicy::for_problem(&p).with_max_length(2.0);
        let c = trace_characteristic(&p, Point::new(1.0, 0.0), 1, &policy).unwrap();
        let defect = contact_defect(&c, &p);
        assert!(defect < 1e-7, "defect {defect}");
        for n in &c.nodes {
            assert!(n.u.abs() < 1e-9);
        }
    }

    #[test]
    fn contact_defect_shrinks_with_step() {
        // On a curved characteristic the defect drops rapidly as the step
        // is refined.
        let w = Window::new(-6.0, 6.0, -6.0, 6.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::from_expr(parse("x", &["x", "y"]).unwrap(), w),
            PlanarVectorField::heisenberg(w),
            ScalarField::constant(1.0, w),
        )
        .unwrap();
        let defect = |step: f64| {
            let policy = StopPolicy::for_problem(&p)
                .with_max_length(2.0)
                .with_step(step);
            let c = trace_characteristic(&p, Point::new(0.2, 0.1), 1, &policy).unwrap();
            contact_defect(&c, &p)
        };
        let d1 = defect(4e-2);
        let d2 = defect(2e-2);
        assert!(d1 / d2 > 3.0, "d1 {d1} d2 {d2}");
    }

    #[test]
    fn discrete_curvature_matches_minus_h() {
        let w = Window::new(-6.0, 6.0, -6.0, 6.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::from_expr(parse("x", &["x", "y"]).unwrap(), w),
            PlanarVectorField::zero(w),
            ScalarField::constant(0.7, w),
        )
        .unwrap();
        let policy = StopPolicy::for_problem(&p)
            .with_max_length(1.0)
            .with_step(1e-3);
        let c = trace_characteristic(&p, Point::new(0.0, 0.0), 1, &policy).unwrap();
        for w in c.nodes.windows(3) {
            let dtheta = (w[2].theta - w[0].theta) / (w[2].sigma - w[0].sigma);
            assert!((dtheta - (-0.7)).abs() < 1e-8);
        }
    }
}
