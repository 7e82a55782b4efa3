//! Field data over a planar window and the derived frame quantities.
//!
//! A surface problem is the triple `(u, F, H)`: the graph function, the
//! offset vector field and the prescribed curvature. Everything downstream
//! is built from the derived quantities
//!
//! ```text
//! D     = |grad u + F|
//! N     = (grad u + F) / D = (cos theta, sin theta)
//! Nperp = (sin theta, -cos theta)
//! curl F = d(F2)/dx - d(F1)/dy
//! ```
//!
//! Points where `D` vanishes are singular: the frame is undefined there and
//! the rest of the library is largely about what happens as curves run into
//! such points.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridData;

/// Axis-aligned evaluation window `[x0,x1] x [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::ConfigInvalid(format!(
                "degenerate window [{x0},{x1}]x[{y0},{y1}]"
            )));
        }
        Ok(Window { x0, x1, y0, y1 })
    }

    pub fn diagonal(&self) -> f64 {
        ((self.x1 - self.x0).powi(2) + (self.y1 - self.y0).powi(2)).sqrt()
    }

    pub fn min_side(&self) -> f64 {
        (self.x1 - self.x0).min(self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn contains_with_margin(&self, p: Point, margin: f64) -> bool {
        p.x >= self.x0 + margin
            && p.x <= self.x1 - margin
            && p.y >= self.y0 + margin
            && p.y <= self.y1 - margin
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// A point (or free vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(k * self.x, k * self.y)
    }

    pub fn normalize(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotate by 90 degrees clockwise: (a, b) -> (b, -a).
    pub fn perp(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

enum Backing {
    /// Closed-form expression in (x, y) with exact partials.
    Expr {
        f: Expr,
        fx: Expr,
        fy: Expr,
    },
    /// Sampled grid with bilinear interpolation; derivatives by central
    /// differences of the interpolant.
    Grid(GridData),
    /// Arbitrary evaluator, optionally with an exact gradient. Used by the
    /// gallery surfaces, whose closed forms go through parametrization
    /// inversion rather than an expression tree.
    Func {
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        grad: Option<Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>>,
    },
}

/// Scalar field over a window.
pub struct ScalarField {
    backing: Backing,
    window: Window,
}

impl ScalarField {
    pub fn from_expr(e: Expr, window: Window) -> Self {
        let fx = e.diff(0);
        let fy = e.diff(1);
        ScalarField {
            backing: Backing::Expr { f: e, fx, fy },
            window,
        }
    }

    pub fn from_grid(g: GridData) -> Self {
        let window = g.window;
        ScalarField {
            backing: Backing::Grid(g),
            window,
        }
    }

    pub fn from_fn(window: Window, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            backing: Backing::Func {
                f: Arc::new(f),
                grad: None,
            },
            window,
        }
    }

    pub fn from_fn_with_grad(
        window: Window,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            backing: Backing::Func {
                f: Arc::new(f),
                grad: Some(Arc::new(grad)),
            },
            window,
        }
    }

    pub fn constant(c: f64, window: Window) -> Self {
        ScalarField::from_expr(Expr::Const(c), window)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn eval(&self, p: Point) -> f64 {
        match &self.backing {
            Backing::Expr { f, .. } => f.eval(&[p.x, p.y]),
            Backing::Grid(g) => g.eval(p.x, p.y),
            Backing::Func { f, .. } => f(p.x, p.y),
        }
    }

    /// True when the field carries exact derivatives (expression tree or an
    /// explicit gradient callback).
    pub fn has_exact_gradient(&self) -> bool {
        match &self.backing {
            Backing::Expr { .. } => true,
            Backing::Grid(_) => false,
            Backing::Func { grad, .. } => grad.is_some(),
        }
    }

    /// Gradient: exact where available, otherwise central differences of
    /// step `h`.
    pub fn grad(&self, p: Point, h: f64) -> Point {
        match &self.backing {
            Backing::Expr { fx, fy, .. } => {
                Point::new(fx.eval(&[p.x, p.y]), fy.eval(&[p.x, p.y]))
            }
            Backing::Func {
                grad: Some(g), ..
            } => {
                let (gx, gy) = g(p.x, p.y);
                Point::new(gx, gy)
            }
            _ => Point::new(
                (self.eval(Point::new(p.x + h, p.y)) - self.eval(Point::new(p.x - h, p.y)))
                    / (2.0 * h),
                (self.eval(Point::new(p.x, p.y + h)) - self.eval(Point::new(p.x, p.y - h)))
                    / (2.0 * h),
            ),
        }
    }
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        let backing = match &self.backing {
            Backing::Expr { f, fx, fy } => Backing::Expr {
                f: f.clone(),
                fx: fx.clone(),
                fy: fy.clone(),
            },
            Backing::Grid(g) => Backing::Grid(g.clone()),
            Backing::Func { f, grad } => Backing::Func {
                f: f.clone(),
                grad: grad.clone(),
            },
        };
        ScalarField {
            backing,
            window: self.window,
        }
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.backing {
            Backing::Expr { .. } => "expr",
            Backing::Grid(_) => "grid",
            Backing::Func { .. } => "func",
        };
        write!(f, "ScalarField({kind}, {:?})", self.window)
    }
}

/// Planar vector field F = (F1, F2); both components share a window.
#[derive(Debug, Clone)]
pub struct PlanarVectorField {
    pub fx: ScalarField,
    pub fy: ScalarField,
}

impl PlanarVectorField {
    pub fn new(fx: ScalarField, fy: ScalarField) -> Result<Self> {
        if fx.window() != fy.window() {
            return Err(Error::ConfigInvalid(
                "vector field components have different windows".into(),
            ));
        }
        Ok(PlanarVectorField { fx, fy })
    }

    /// The standard Heisenberg field F = (-y, x).
    pub fn heisenberg(window: Window) -> Self {
        PlanarVectorField {
            fx: ScalarField::from_expr(
                Expr::Neg(Arc::new(Expr::Var(1))),
                window,
            ),
            fy: ScalarField::from_expr(Expr::Var(0), window),
        }
    }

    pub fn zero(window: Window) -> Self {
        PlanarVectorField {
            fx: ScalarField::constant(0.0, window),
            fy: ScalarField::constant(0.0, window),
        }
    }

    pub fn window(&self) -> Window {
        self.fx.window()
    }

    pub fn eval(&self, p: Point) -> Point {
        Point::new(self.fx.eval(p), self.fy.eval(p))
    }
}

/// The triple (u, F, H) with evaluation parameters.
#[derive(Debug, Clone)]
pub struct SurfaceProblem {
    pub u: ScalarField,
    pub f: PlanarVectorField,
    pub h: ScalarField,
    /// Finite-difference step for gradients of grid/function-backed fields.
    pub fd_step: f64,
    /// Singularity threshold: a point is treated as singular when
    /// `D <= eps_d`.
    pub eps_d: f64,
}

impl SurfaceProblem {
    pub fn new(u: ScalarField, f: PlanarVectorField, h: ScalarField) -> Result<Self> {
        let w = u.window();
        if f.window() != w || h.window() != w {
            return Err(Error::ConfigInvalid(
                "u, F, H must share the same window".into(),
            ));
        }
        let diag = w.diagonal();
        Ok(SurfaceProblem {
            u,
            f,
            h,
            fd_step: 1e-4 * diag,
            eps_d: 1e-8 * diag,
        })
    }

    pub fn with_fd_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1e-2 * self.window().min_side()) {
            return Err(Error::ConfigInvalid(format!(
                "fd_step {h} must be positive and < 1e-2 x min window side"
            )));
        }
        self.fd_step = h;
        Ok(self)
    }

    pub fn with_eps_d(mut self, e: f64) -> Result<Self> {
        if e <= 0.0 {
            return Err(Error::ConfigInvalid("eps_D must be positive".into()));
        }
        self.eps_d = e;
        Ok(self)
    }

    pub fn window(&self) -> Window {
        self.u.window()
    }

    fn require_inside(&self, p: Point) -> Result<()> {
        if !self
            .window()
            .contains_with_margin(p, self.fd_step)
        {
            return Err(Error::OutOfWindow(p.x, p.y));
        }
        Ok(())
    }

    /// grad u + F at p.
    pub fn horizontal_vector(&self, p: Point) -> Point {
        self.u.grad(p, self.fd_step) + self.f.eval(p)
    }

    /// D = |grad u + F| at p (no window margin check beyond containment).
    pub fn d(&self, p: Point) -> f64 {
        self.horizontal_vector(p).norm()
    }

    /// Evaluate the full frame at a point strictly inside the window.
    pub fn eval_frame(&self, p: Point) -> Result<FrameSample> {
        self.require_inside(p)?;
        let hv = self.horizontal_vector(p);
        let d = hv.norm();
        let curl_f = self.curl(p)?;
        if d <= self.eps_d {
            // theta is genuinely undefined at a singular point; report a
            // quiet sentinel in pointwise contexts.
            return Ok(FrameSample {
                point: p,
                d,
                theta: f64::NAN,
                n: Point::new(f64::NAN, f64::NAN),
                nperp: Point::new(f64::NAN, f64::NAN),
                curl_f,
                singular: true,
            });
        }
        let theta = hv.y.atan2(hv.x);
        Ok(FrameSample {
            point: p,
            d,
            theta,
            n: Point::new(theta.cos(), theta.sin()),
            nperp: Point::new(theta.sin(), -theta.cos()),
            curl_f,
            singular: false,
        })
    }

    /// curl F = (F2)_x - (F1)_y at p.
    pub fn curl(&self, p: Point) -> Result<f64> {
        self.require_inside(p)?;
        let h = self.fd_step;
        let d_fy_dx = if self.f.fy.has_exact_gradient() {
            self.f.fy.grad(p, h).x
        } else {
            (self.f.fy.eval(Point::new(p.x + h, p.y)) - self.f.fy.eval(Point::new(p.x - h, p.y)))
                / (2.0 * h)
        };
        let d_fx_dy = if self.f.fx.has_exact_gradient() {
            self.f.fx.grad(p, h).y
        } else {
            (self.f.fx.eval(Point::new(p.x, p.y + h)) - self.f.fx.eval(Point::new(p.x, p.y - h)))
                / (2.0 * h)
        };
        Ok(d_fy_dx - d_fx_dy)
    }

    /// div N - H at a nonsingular point, by central differences of the unit
    /// normal. Validates that the triple (u, F, H) is consistent.
    pub fn pde_residual(&self, p: Point) -> Result<f64> {
        let h = self.fd_step;
        if !self.window().contains_with_margin(p, 2.0 * h) {
            return Err(Error::OutOfWindow(p.x, p.y));
        }
        let center = self.eval_frame(p)?;
        if center.singular {
            return Err(Error::SingularPoint(p.x, p.y));
        }
        let n_at = |q: Point| -> Result<Point> {
            let hv = self.horizontal_vector(q);
            let d = hv.norm();
            if d <= self.eps_d {
                return Err(Error::SingularPoint(q.x, q.y));
            }
            Ok(hv.scale(1.0 / d))
        };
        let nxp = n_at(Point::new(p.x + h, p.y))?;
        let nxm = n_at(Point::new(p.x - h, p.y))?;
        let nyp = n_at(Point::new(p.x, p.y + h))?;
        let nym = n_at(Point::new(p.x, p.y - h))?;
        let div_n = (nxp.x - nxm.x) / (2.0 * h) + (nyp.y - nym.y) / (2.0 * h);
        Ok(div_n - self.h.eval(p))
    }

    /// Directional derivative of a scalar quantity along a unit direction,
    /// by central differences.
    pub fn directional_fd(
        &self,
        p: Point,
        dir: Point,
        h: f64,
        f: impl Fn(Point) -> f64,
    ) -> f64 {
        (f(p + dir.scale(h)) - f(p - dir.scale(h))) / (2.0 * h)
    }
}

/// Frame data at a single point.
#[derive(Debug, Clone, Copy)]
pub struct FrameSample {
    pub point: Point,
    /// D = |grad u + F|, always nonnegative.
    pub d: f64,
    /// Principal value in (-pi, pi]; NaN at singular points.
    pub theta: f64,
    pub n: Point,
    pub nperp: Point,
    pub curl_f: f64,
    /// Set when D <= eps_D.
    pub singular: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn radial_problem() -> SurfaceProblem {
        let w = Window::new(-6.0, 6.0, -6.0, 6.0).unwrap();
        SurfaceProblem::new(
            ScalarField::constant(0.0, w),
            PlanarVectorField::heisenberg(w),
            ScalarField::constant(0.0, w),
        )
        .unwrap()
    }

    #[test]
    fn frame_of_radial_field() {
        let p = radial_problem();
        let f = p.eval_frame(Point::new(3.0, 4.0)).unwrap();
        assert!((f.d - 5.0).abs() < 1e-12);
        assert!((f.n.x - (-4.0 / 5.0)).abs() < 1e-12);
        assert!((f.n.y - 3.0 / 5.0).abs() < 1e-12);
        assert!((f.curl_f - 2.0).abs() < 1e-10);
        assert!(!f.singular);
    }

    #[test]
    fn origin_is_singular() {
        let p = radial_problem();
        let f = p.eval_frame(Point::new(0.0, 0.0)).unwrap();
        assert!(f.singular);
        assert_eq!(f.d, 0.0);
        assert!(f.theta.is_nan());
    }

    #[test]
    fn radial_d_is_distance() {
        // u = 0, F = (-y, x): D = sqrt(x^2 + y^2).
        let p = radial_problem();
        for &(x, y) in &[(1.0, 0.0), (0.5, -2.0), (-3.0, 1.0)] {
            let f = p.eval_frame(Point::new(x, y)).unwrap();
            assert!((f.d - (x * x + y * y as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn curl_of_zero_field_is_zero() {
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::constant(0.0, w),
            PlanarVectorField::zero(w),
            ScalarField::constant(0.0, w),
        )
        .unwrap();
        assert_eq!(p.curl(Point::new(0.3, 0.3)).unwrap(), 0.0);
    }

    #[test]
    fn curl_by_hand_differentiation() {
        // F = (0, x*y): curl = d(xy)/dx - 0 = y; at (1,2) the curl is 2.
        let w = Window::new(-4.0, 4.0, -4.0, 4.0).unwrap();
        let f = PlanarVectorField::new(
            ScalarField::constant(0.0, w),
            ScalarField::from_expr(parse("x*y", &["x", "y"]).unwrap(), w),
        )
        .unwrap();
        let p = SurfaceProblem::new(ScalarField::constant(0.0, w), f, ScalarField::constant(0.0, w))
            .unwrap();
        let exact = p.curl(Point::new(1.0, 2.0)).unwrap();
        assert!((exact - 2.0).abs() < 1e-10);
        // FD oracle at shrinking h agrees.
        let fd_curl = |h: f64| {
            let q = Point::new(1.0, 2.0);
            ((q.x + h) * q.y - (q.x - h) * q.y) / (2.0 * h)
        };
        assert!((fd_curl(1e-4) - exact).abs() < 1e-8);
    }

    #[test]
    fn curl_is_exact_for_affine_fields() {
        let p = radial_problem();
        for &(x, y) in &[(0.0, 0.0), (1.5, -2.5), (-3.0, 3.0)] {
            assert_eq!(p.curl(Point::new(x, y)).unwrap(), 2.0);
        }
    }

    #[test]
    fn pde_residual_vanishes_for_radial_plane() {
        let p = radial_problem();
        let r = p.pde_residual(Point::new(1.0, 1.0)).unwrap();
        assert!(r.abs() < 1e-8, "residual {r}");
    }

    #[test]
    fn pde_residual_constant_field() {
        // u = x^2/2, F = 0, N = (1, 0) for x > 0: div N = 0 = H.
        let w = Window::new(0.5, 4.0, -2.0, 2.0).unwrap();
        let p = SurfaceProblem::new(
            ScalarField::from_expr(parse("x*x/2", &["x", "y"]).unwrap(), w),
            PlanarVectorField::zero(w),
            ScalarField::constant(0.0, w),
        )
        .unwrap();
        let r = p.pde_residual(Point::new(2.0, 0.5)).unwrap();
        assert!(r.abs() < 1e-10);
    }

    #[test]
    fn pde_residual_rejects_singular_point() {
        let p = radial_problem();
        match p.pde_residual(Point::new(0.0, 0.0)) {
            Err(Error::SingularPoint(_, _)) => {}
            other => panic!("expected SingularPoint, got {other:?}"),
        }
    }

    #[test]
    fn out_of_window_is_reported() {
        let p = radial_problem();
        assert!(matches!(
            p.eval_frame(Point::new(100.0, 0.0)),
            Err(Error::OutOfWindow(_, _))
        ));
    }

    #[test]
    fn fd_gradient_second_order() {
        // Grid-backed field: residual of the gradient drops ~4x when the
        // step halves.
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let f = |x: f64, y: f64| (2.0 * x).sin() * (3.0 * y).cos();
        let sf = ScalarField::from_fn(w, f);
        let p = Point::new(0.2, -0.1);
        let exact = Point::new(
            2.0 * (2.0 * p.x).cos() * (3.0 * p.y).cos(),
            -3.0 * (2.0 * p.x).sin() * (3.0 * p.y).sin(),
        );
        let err = |h: f64| (sf.grad(p, h) - exact).norm();
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "ratio {}", e1 / e2);
    }
}
