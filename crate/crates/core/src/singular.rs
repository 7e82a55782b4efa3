//! Detection and characterization of the singular set `{D = 0}`.
//!
//! Grid detection flags cells whose sampled D dips below `eps_D`, labels
//! components by flood fill, and tracks how the flagged area shrinks with
//! resolution — a measure-zero singular set shows a negative decay exponent.
//! Characteristic sweeps from a transverse curve locate the singular set as
//! the family of hit points, from which the module estimates tangents,
//! one-sided normals, the expanding rates `lambda` of the characteristic
//! hit map, the equal-angle condition at nondegenerate points, the arc
//! length balance across a singular curve, and the holonomy/area comparison
//! for the contact form.

use rayon::prelude::*;

use crate::charflow::{trace_characteristic, StopPolicy, StopReason};
use crate::error::{Error, Result};
use crate::fields::{Point, SurfaceProblem, Window};

/// A parametrized curve on [t0, t1]; transverse curves for sweeps and seed
/// curves for the hit map arrive through this.
pub struct ParamCurve {
    f: Box<dyn Fn(f64) -> Point + Send + Sync>,
    pub t0: f64,
    pub t1: f64,
}

impl ParamCurve {
    pub fn new(
        t0: f64,
        t1: f64,
        f: impl Fn(f64) -> Point + Send + Sync + 'static,
    ) -> Self {
        ParamCurve {
            f: Box::new(f),
            t0,
            t1,
        }
    }

    pub fn segment(a: Point, b: Point) -> Self {
        ParamCurve::new(0.0, 1.0, move |t| a + (b - a).scale(t))
    }

    pub fn circle_arc(center: Point, r: f64, phi0: f64, phi1: f64) -> Self {
        ParamCurve::new(phi0, phi1, move |t| {
            center + Point::new(r * t.cos(), r * t.sin())
        })
    }

    /// Arc-length parametrization of a polyline (e.g. a traced seed curve).
    pub fn from_polyline(pts: Vec<Point>) -> Self {
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in pts.windows(2) {
            acc += w[1].dist(w[0]);
            cum.push(acc);
        }
        let total = acc;
        ParamCurve::new(0.0, total, move |t| {
            if t <= 0.0 {
                return pts[0];
            }
            for (i, w) in pts.windows(2).enumerate() {
                if t <= cum[i + 1] {
                    let seg = cum[i + 1] - cum[i];
                    let frac = if seg > 0.0 { (t - cum[i]) / seg } else { 0.0 };
                    return w[0] + (w[1] - w[0]).scale(frac);
                }
            }
            *pts.last().unwrap()
        })
    }

    pub fn eval(&self, t: f64) -> Point {
        (self.f)(t)
    }

    pub fn tangent(&self, t: f64) -> Point {
        let h = 1e-6 * (self.t1 - self.t0).abs().max(1e-12);
        let a = self.eval((t - h).max(self.t0));
        let b = self.eval((t + h).min(self.t1));
        (b - a).scale(1.0 / (b - a).norm().max(1e-300))
    }

    pub fn span(&self) -> f64 {
        self.t1 - self.t0
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ComponentInfo {
    pub label: u32,
    pub cell_count: usize,
    /// (i0, j0, i1, j1) cell-index bounding box, inclusive.
    pub bbox: (usize, usize, usize, usize),
}

/// Grid scan of the singular set.
#[derive(Debug, Clone)]
pub struct SingularReport {
    pub resolution: usize,
    pub window: Window,
    /// Row-major cell flags at `resolution`.
    pub mask: Vec<bool>,
    /// Component label per cell; 0 is background.
    pub labels: Vec<u32>,
    pub component_count: usize,
    pub components: Vec<ComponentInfo>,
    /// (resolution, flagged-area fraction) at 1x, 2x, 4x.
    pub area_series: Vec<(usize, f64)>,
}

fn flag_cells(problem: &SurfaceProblem, n: usize) -> Vec<bool> {
    let w = problem.window();
    let dx = (w.x1 - w.x0) / n as f64;
    let dy = (w.y1 - w.y0) / n as f64;
    // corner samples (n+1)^2, evaluated by rows in parallel
    let corners: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let y = w.y0 + dy * j as f64;
            (0..=n)
                .map(|i| problem.d(Point::new(w.x0 + dx * i as f64, y)))
                .collect()
        })
        .collect();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let corners = &corners;
            (0..n).map(move |i| {
                let min_corner = corners[j][i]
                    .min(corners[j][i + 1])
                    .min(corners[j + 1][i])
                    .min(corners[j + 1][i + 1]);
                if min_corner <= problem.eps_d {
                    return true;
                }
                let center = Point::new(
                    w.x0 + dx * (i as f64 + 0.5),
                    w.y0 + dy * (j as f64 + 0.5),
                );
                problem.d(center) <= problem.eps_d
            })
        })
        .collect()
}

fn label_components(mask: &[bool], n: usize) -> (Vec<u32>, Vec<ComponentInfo>) {
    let mut labels = vec![0u32; n * n];
    let mut comps = Vec::new();
    let mut next = 1u32;
    let mut queue = Vec::new();
    for start in 0..n * n {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        let label = next;
        next += 1;
        labels[start] = label;
        queue.push(start);
        let mut count = 0usize;
        let mut bbox = (usize::MAX, usize::MAX, 0usize, 0usize);
        while let Some(idx) = queue.pop() {
            count += 1;
            let (i, j) = (idx % n, idx / n);
            bbox.0 = bbox.0.min(i);
            bbox.1 = bbox.1.min(j);
            bbox.2 = bbox.2.max(i);
            bbox.3 = bbox.3.max(j);
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                        continue;
                    }
                    let nidx = nj as usize * n + ni as usize;
                    if mask[nidx] && labels[nidx] == 0 {
                        labels[nidx] = label;
                        queue.push(nidx);
                    }
                }
            }
        }
        comps.push(ComponentInfo {
            label,
            cell_count: count,
            bbox,
        });
    }
    (labels, comps)
}

/// Scan the window at `resolution` (and 2x, 4x for the area series), flag
/// cells meeting the singular set, and label connected components with
/// 8-connectivity.
pub fn detect_singular(problem: &SurfaceProblem, resolution: usize) -> Result<SingularReport> {
    if resolution < 16 {
        return Err(Error::ConfigInvalid(
            "singular-set detection needs resolution >= 16".into(),
        ));
    }
    let base = flag_cells(problem, resolution);
    let (labels, components) = label_components(&base, resolution);
    let mut area_series = Vec::with_capacity(3);
    let frac =
        base.iter().filter(|&&b| b).count() as f64 / (resolution * resolution) as f64;
    area_series.push((resolution, frac));
    for factor in [2usize, 4] {
        let n = resolution * factor;
        let mask = flag_cells(problem, n);
        let frac = mask.iter().filter(|&&b| b).count() as f64 / (n * n) as f64;
        area_series.push((n, frac));
    }
    Ok(SingularReport {
        resolution,
        window: problem.window(),
        mask: base,
        labels,
        component_count: components.len(),
        components,
        area_series,
    })
}

/// Least-squares slope of log(area fraction) against log(resolution).
///
/// An exponent around -2 indicates a point-like singular set, around -1 a
/// curve; near 0 the set has positive measure at the working scale, which
/// violates the nonvanishing-curl hypothesis behind the measure-zero
/// statement.
pub fn measure_decay_check(report: &SingularReport) -> Result<f64> {
    if report.area_series.len() < 3 {
        return Err(Error::ConfigInvalid(
            "area series needs at least 3 entries".into(),
        ));
    }
    if report.area_series.iter().any(|&(_, a)| a == 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let pts: Vec<(f64, f64)> = report
        .area_series
        .iter()
        .map(|&(n, a)| ((n as f64).ln(), a.ln()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

/// One successful ray of a characteristic sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRay {
    pub tau: f64,
    pub start: Point,
    /// Arc length from the start to the singular hit.
    pub sigma: f64,
    /// The singular endpoint.
    pub hit: Point,
    /// One-sided unit normal, read at the last node with healthy D.
    pub n_side: Point,
    pub theta_side: f64,
}

/// Result of sweeping characteristics from a transverse curve into the
/// singular set.
#[derive(Debug)]
pub struct SingularSweep {
    pub rays: Vec<SweepRay>,
    /// Ray indices that left the window before hitting the singular set.
    pub escaped: Vec<usize>,
}

/// Point-wise singular-curve data assembled from sweeps.
#[derive(Debug, Clone, Copy)]
pub struct SingularCurvePoint {
    pub location: Point,
    pub tangent_estimate: Option<Point>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub n_plus: Option<Point>,
    pub n_minus: Option<Point>,
}

/// Nondegeneracy scale for the expanding rates.
pub const EPS_LAMBDA: f64 = 1e-3;

impl SingularCurvePoint {
    pub fn nondegenerate(&self) -> bool {
        matches!(
            (self.lambda_plus, self.lambda_minus),
            (Some(lp), Some(lm)) if lp.abs() > EPS_LAMBDA && lm.abs() > EPS_LAMBDA
        )
    }
}

fn one_sided_normal(curve: &crate::charflow::CharCurve, eps_d: f64) -> Option<(Point, f64)> {
    curve
        .nodes
        .iter()
        .rev()
        .find(|n| n.d > 10.0 * eps_d)
        .map(|n| (Point::new(n.theta.cos(), n.theta.sin()), n.theta))
}

/// Trace the characteristic from each sample of `beta` into the singular
/// set. Rays that exit the window are recorded in `escaped` rather than
/// failing the sweep.
pub fn trace_singular_curve(
    problem: &SurfaceProblem,
    beta: &ParamCurve,
    n_rays: usize,
) -> Result<SingularSweep> {
    let policy = StopPolicy::for_problem(problem);
    let taus: Vec<f64> = (0..n_rays)
        .map(|i| beta.t0 + beta.span() * (i as f64 + 0.5) / n_rays as f64)
        .collect();
    let traced: Vec<Result<Option<SweepRay>>> = taus
        .par_iter()
        .map(|&tau| {
            let start = beta.eval(tau);
            let frame = problem.eval_frame(start)?;
            if frame.singular {
                return Err(Error::SingularStart(start.x, start.y));
            }
            // With positive curl, Nperp points away from the singular set;
            // walk against it (and conversely).
            let direction = if frame.curl_f >= 0.0 { -1 } else { 1 };
            let curve = trace_characteristic(problem, start, direction, &policy)?;
            if curve.stop_reason != StopReason::HitSingular {
                return Ok(None);
            }
            let (n_side, theta_side) =
                one_sided_normal(&curve, problem.eps_d).ok_or(Error::NotSingularApproach)?;
            Ok(Some(SweepRay {
                tau,
                start,
                sigma: curve.length(),
                hit: curve.end().point(),
                n_side,
                theta_side,
            }))
        })
        .collect();
    let mut rays = Vec::new();
    let mut escaped = Vec::new();
    for (i, r) in traced.into_iter().enumerate() {
        match r? {
            Some(ray) => rays.push(ray),
            None => escaped.push(i),
        }
    }
    Ok(SingularSweep { rays, escaped })
}

/// Assemble per-point singular-curve data from a one-sided sweep; tangents
/// come from symmetric secants of neighboring hits.
pub fn sweep_points(sweep: &SingularSweep) -> Vec<SingularCurvePoint> {
    let rays = &sweep.rays;
    rays.iter()
        .enumerate()
        .map(|(i, ray)| {
            let tangent = if rays.len() >= 3 && i > 0 && i + 1 < rays.len() {
                let d = rays[i + 1].hit - rays[i - 1].hit;
                let n = d.norm();
                if n > 0.0 {
                    Some(d.scale(1.0 / n))
                } else {
                    None
                }
            } else {
                None
            };
            SingularCurvePoint {
                location: ray.hit,
                tangent_estimate: tangent,
                lambda_plus: None,
                lambda_minus: None,
                n_plus: Some(ray.n_side),
                n_minus: None,
            }
        })
        .collect()
}

/// Merge sweeps from the two sides of a singular curve: for each plus-side
/// hit the nearest minus-side hit supplies the other one-sided normal.
pub fn merge_sweeps(
    plus: &SingularSweep,
    minus: &SingularSweep,
    match_tol: f64,
) -> Vec<SingularCurvePoint> {
    let mut points = sweep_points(plus);
    for p in &mut points {
        let nearest = minus
            .rays
            .iter()
            .min_by(|a, b| {
                a.hit
                    .dist(p.location)
                    .partial_cmp(&b.hit.dist(p.location))
                    .unwrap()
            })
            .filter(|r| r.hit.dist(p.location) < match_tol);
        if let Some(r) = nearest {
            p.n_minus = Some(r.n_side);
        }
    }
    points
}

fn hit_from(problem: &SurfaceProblem, start: Point) -> Result<(Point, f64)> {
    let policy = StopPolicy::for_problem(problem);
    let frame = problem.eval_frame(start)?;
    if frame.singular {
        return Err(Error::SingularStart(start.x, start.y));
    }
    let direction = if frame.curl_f >= 0.0 { -1 } else { 1 };
    let curve = trace_characteristic(problem, start, direction, &policy)?;
    if curve.stop_reason != StopReason::HitSingular {
        return Err(Error::NotSingularApproach);
    }
    Ok((curve.end().point(), curve.length()))
}

/// Evaluate the characteristic flow map at fixed arc length from a seed
/// point (riding through the singular set if needed).
fn flow_at(problem: &SurfaceProblem, start: Point, sigma: f64) -> Result<Point> {
    let policy = StopPolicy::for_problem(problem)
        .with_max_length(sigma)
        .through_singular();
    let frame = problem.eval_frame(start)?;
    if frame.singular {
        return Err(Error::SingularStart(start.x, start.y));
    }
    let direction = if frame.curl_f >= 0.0 { -1 } else { 1 };
    let curve = trace_characteristic(problem, start, direction, &policy)?;
    Ok(curve.end().point())
}

fn lambda_one_side(
    problem: &SurfaceProblem,
    p0: Point,
    seed: &ParamCurve,
    side: &'static str,
) -> Result<f64> {
    // Locate the seed parameter whose characteristic hits nearest p0.
    let scan = 64;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=scan {
        let tau = seed.t0 + seed.span() * k as f64 / scan as f64;
        if let Ok((hit, _)) = hit_from(problem, seed.eval(tau)) {
            let dist = hit.dist(p0);
            if best.map(|(_, d)| dist < d).unwrap_or(true) {
                best = Some((tau, dist));
            }
        }
    }
    let (mut tau0, mut best_dist) = best.ok_or(Error::DegenerateSide(side))?;
    let mut width = seed.span() / scan as f64;
    for _ in 0..12 {
        for &cand in &[tau0 - 0.5 * width, tau0 + 0.5 * width] {
            if cand < seed.t0 || cand > seed.t1 {
                continue;
            }
            if let Ok((hit, _)) = hit_from(problem, seed.eval(cand)) {
                let dist = hit.dist(p0);
                if dist < best_dist {
                    best_dist = dist;
                    tau0 = cand;
                }
            }
        }
        width *= 0.5;
    }

    let start0 = seed.eval(tau0);
    let frame0 = problem.eval_frame(start0)?;
    if frame0.singular {
        return Err(Error::DegenerateSide(side));
    }
    // The seed must be transversal to the characteristics.
    let tangent = seed.tangent(tau0);
    if tangent.cross(frame0.n).abs() > 0.95 {
        return Err(Error::DegenerateSide(side));
    }
    let (_, sigma0) = hit_from(problem, start0)?;
    // One-sided normal at the approach gives the projection direction.
    let policy = StopPolicy::for_problem(problem);
    let dir = if frame0.curl_f >= 0.0 { -1 } else { 1 };
    let approach = trace_characteristic(problem, start0, dir, &policy)?;
    let (n_side, _) =
        one_sided_normal(&approach, problem.eps_d).ok_or(Error::DegenerateSide(side))?;

    let delta = 1e-3 * seed.span();
    let qp = flow_at(problem, seed.eval(tau0 + delta), sigma0)?;
    let qm = flow_at(problem, seed.eval(tau0 - delta), sigma0)?;
    let diff = (qp - qm).scale(1.0 / (2.0 * delta));
    Ok(diff.dot(n_side))
}

/// Expanding rates of the characteristic hit map on both sides of a
/// singular curve point, by symmetric differences of the flow map along the
/// seed curves.
pub fn lambda_rates(
    problem: &SurfaceProblem,
    p0: Point,
    seed_plus: &ParamCurve,
    seed_minus: &ParamCurve,
) -> Result<(f64, f64)> {
    let lp = lambda_one_side(problem, p0, seed_plus, "plus")?;
    let lm = lambda_one_side(problem, p0, seed_minus, "minus")?;
    Ok((lp, lm))
}

/// Rate of change of the field angle along a seed curve (for the p-minimal
/// cross-check lambda = 1 + sigma * theta').
pub fn theta_prime_along(problem: &SurfaceProblem, seed: &ParamCurve, tau: f64) -> Result<f64> {
    let h = 1e-5 * seed.span();
    let a = problem.eval_frame(seed.eval(tau - h))?;
    let b = problem.eval_frame(seed.eval(tau + h))?;
    if a.singular || b.singular {
        return Err(Error::SingularPoint(seed.eval(tau).x, seed.eval(tau).y));
    }
    let mut dth = b.theta - a.theta;
    while dth > std::f64::consts::PI {
        dth -= 2.0 * std::f64::consts::PI;
    }
    while dth < -std::f64::consts::PI {
        dth += 2.0 * std::f64::consts::PI;
    }
    Ok(dth / (2.0 * h))
}

/// Angle gap between the two one-sided ray directions and the singular
/// curve's tangent line, both measured in [0, pi/2].
pub fn equal_angle_check(p0: &SingularCurvePoint) -> Result<f64> {
    let tangent = p0
        .tangent_estimate
        .ok_or(Error::MissingSideData("tangent"))?;
    let np = p0.n_plus.ok_or(Error::MissingSideData("plus normal"))?;
    let nm = p0.n_minus.ok_or(Error::MissingSideData("minus normal"))?;
    let angle = |n: Point| -> f64 {
        // ray direction is the characteristic line through n's frame
        let nperp = Point::new(n.y, -n.x);
        nperp.dot(tangent).abs().clamp(0.0, 1.0).acos()
    };
    Ok((angle(np) - angle(nm)).abs())
}

/// Matched-pair arc-length balance across a singular curve: characteristics
/// landing at the same singular point from the two sides advance their arc
/// lengths by the same increments. Returns the worst defect over the pairs.
pub fn sigma_balance_check(plus: &SingularSweep, minus: &SingularSweep) -> Result<f64> {
    if plus.rays.len() < 2 || minus.rays.len() < 2 {
        return Err(Error::NoMatchedPairs);
    }
    // Interpolate the minus-side sigma at each plus hit by projecting onto
    // the minus hit polyline.
    let sigma_minus_at = |p: Point| -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for w in minus.rays.windows(2) {
            let (a, b) = (w[0].hit, w[1].hit);
            let ab = b - a;
            let len2 = ab.dot(ab);
            if len2 == 0.0 {
                continue;
            }
            let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
            let proj = a + ab.scale(t);
            let dist = p.dist(proj);
            let sig = w[0].sigma * (1.0 - t) + w[1].sigma * t;
            if best.map(|(d, _)| dist < d).unwrap_or(true) {
                best = Some((dist, sig));
            }
        }
        best.map(|(_, s)| s)
    };
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for ray in &plus.rays {
        if let Some(sm) = sigma_minus_at(ray.hit) {
            pairs.push((ray.sigma, sm));
        }
    }
    if pairs.len() < 2 {
        return Err(Error::NoMatchedPairs);
    }
    let (sp0, sm0) = pairs[0];
    let mut worst: f64 = 0.0;
    for &(sp, sm) in &pairs[1..] {
        worst = worst.max(((sp - sp0) - (sm - sm0)).abs());
    }
    Ok(worst)
}

/// Holonomy/area comparison for the contact form along a transverse curve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HolonomyReport {
    /// Line integral of du + F1 dx + F2 dy along beta.
    pub integral: f64,
    /// Area of the region swept between beta and the singular set.
    pub area: f64,
    /// min |curl F| over the region.
    pub c1: f64,
    /// max |curl F| over the region.
    pub c2: f64,
    pub bounds_hold: bool,
}

fn shoelace(poly: &[Point]) -> f64 {
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.cross(b);
    }
    0.5 * acc
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut winding = 0i32;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if a.y <= p.y {
            if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Integrate the contact form along `beta`, sweep the characteristics into
/// the singular set, and compare |integral| against the swept area scaled
/// by the curl bounds.
pub fn holonomy_area_check(
    problem: &SurfaceProblem,
    beta: &ParamCurve,
    n_rays: usize,
) -> Result<HolonomyReport> {
    let sweep = trace_singular_curve(problem, beta, n_rays)?;
    if !sweep.escaped.is_empty() || sweep.rays.len() < 2 {
        return Err(Error::OpenRegion);
    }

    // line integral of (grad u + F) . d beta by the midpoint rule
    let m = 512usize;
    let mut integral = 0.0;
    let (t_first, t_last) = (sweep.rays[0].tau, sweep.rays.last().unwrap().tau);
    for k in 0..m {
        let ta = t_first + (t_last - t_first) * k as f64 / m as f64;
        let tb = t_first + (t_last - t_first) * (k + 1) as f64 / m as f64;
        let pa = beta.eval(ta);
        let pb = beta.eval(tb);
        let mid = Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y));
        let hv = problem.horizontal_vector(mid);
        integral += hv.dot(pb - pa);
    }

    // swept polygon: beta forward, last ray in, singular hits backward,
    // first ray out
    let first = &sweep.rays[0];
    let last = sweep.rays.last().unwrap();
    let mut poly: Vec<Point> = Vec::new();
    let mcurve = 128usize;
    for k in 0..=mcurve {
        let t = t_first + (t_last - t_first) * k as f64 / mcurve as f64;
        poly.push(beta.eval(t));
    }
    let policy = StopPolicy::for_problem(problem);
    let frame_last = problem.eval_frame(last.start)?;
    let dir_last = if frame_last.curl_f >= 0.0 { -1 } else { 1 };
    let curve_last = trace_characteristic(problem, last.start, dir_last, &policy)?;
    for node in curve_last.nodes.iter().skip(1) {
        poly.push(node.point());
    }
    for ray in sweep.rays.iter().rev().skip(1) {
        poly.push(ray.hit);
    }
    let frame_first = problem.eval_frame(first.start)?;
    let dir_first = if frame_first.curl_f >= 0.0 { -1 } else { 1 };
    let curve_first = trace_characteristic(problem, first.start, dir_first, &policy)?;
    for node in curve_first.nodes.iter().rev().skip(1) {
        poly.push(node.point());
    }

    let area = shoelace(&poly).abs();

    // curl bounds over the region
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    let mut consider = |p: Point| {
        if let Ok(c) = problem.curl(p) {
            c1 = c1.min(c.abs());
            c2 = c2.max(c.abs());
        }
    };
    for p in &poly {
        consider(*p);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in &poly {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    for j in 0..16 {
        for i in 0..16 {
            let p = Point::new(
                xmin + (xmax - xmin) * (i as f64 + 0.5) / 16.0,
                ymin + (ymax - ymin) * (j as f64 + 0.5) / 16.0,
            );
            if point_in_polygon(p, &poly) {
                consider(p);
            }
        }
    }
    if !c1.is_finite() {
        return Err(Error::OpenRegion);
    }

    // modest slack for discretization of the swept boundary
    let slack = 0.05 * c2 * area + 1e-12;
    let bounds_hold =
        c1 * area <= integral.abs() + slack && integral.abs() <= c2 * area + slack;
    Ok(HolonomyReport {
        integral,
        area,
        c1,
        c2,
        bounds_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{build, GalleryId};

    #[test]
    fn radial_detection_single_component() {
        let m = build(GalleryId::RadialPlane);
        let report = detect_singular(m.problem(), 64).unwrap();
        assert_eq!(report.component_count, 1);
        let n = report.resolution;
        let w = report.window;
        for (idx, &flag) in report.mask.iter().enumerate() {
            if flag {
                let (i, j) = (idx % n, idx / n);
                let cx = w.x0 + (w.x1 - w.x0) * (i as f64 + 0.5) / n as f64;
                let cy = w.y0 + (w.y1 - w.y0) * (j as f64 + 0.5) / n as f64;
                assert!(
                    Point::new(cx, cy).norm() < 2.0 * (w.x1 - w.x0) / n as f64,
                    "flagged cell far from origin"
                );
            }
        }
        let exp = measure_decay_check(&report).unwrap();
        assert!((exp + 2.0).abs() < 0.3, "exponent {exp}");
    }

    #[test]
    fn ex44_detection_is_a_curve() {
        let m = build(GalleryId::Ex4_4);
        let report = detect_singular(m.problem(), 64).unwrap();
        assert_eq!(report.component_count, 1);
        let exp = measure_decay_check(&report).unwrap();
        assert!((exp + 1.0).abs() < 0.3, "exponent {exp}");
    }

    #[test]
    fn ex43_three_half_lines_are_one_component() {
        let m = build(GalleryId::Ex4_3);
        let report = detect_singular(m.problem(), 64).unwrap();
        assert_eq!(report.component_count, 1);
    }

    #[test]
    fn flagged_area_nonincreasing() {
        for id in [GalleryId::RadialPlane, GalleryId::Ex4_4, GalleryId::Ex4_2] {
            let m = build(id);
            let report = detect_singular(m.problem(), 32).unwrap();
            let fracs: Vec<f64> = report.area_series.iter().map(|&(_, a)| a).collect();
            assert!(fracs[0] >= fracs[1] && fracs[1] >= fracs[2], "{fracs:?}");
        }
    }

    #[test]
    fn full_measure_singular_set_has_flat_decay() {
        // u = 0, F = 0: everything is singular and curl F = 0; the decay
        // exponent sits near zero, flagging the hypothesis violation.
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let p = SurfaceProblem::new(
            crate::fields::ScalarField::constant(0.0, w),
            crate::fields::PlanarVectorField::zero(w),
            crate::fields::ScalarField::constant(0.0, w),
        )
        .unwrap();
        let report = detect_singular(&p, 16).unwrap();
        let exp = measure_decay_check(&report).unwrap();
        assert!(exp.abs() < 0.05, "exponent {exp}");
    }

    #[test]
    fn components_meet_ground_truth() {
        for id in [
            GalleryId::RadialPlane,
            GalleryId::Ex4_1,
            GalleryId::Ex4_2,
            GalleryId::Ex4_3,
            GalleryId::Ex4_4,
        ] {
            let m = build(id);
            let report = detect_singular(m.problem(), 64).unwrap();
            let n = report.resolution;
            let w = report.window;
            let cell_diag =
                ((w.x1 - w.x0).powi(2) + (w.y1 - w.y0).powi(2)).sqrt() / n as f64;
            for (idx, &flag) in report.mask.iter().enumerate() {
                if flag {
                    let (i, j) = (idx % n, idx / n);
                    let cx = w.x0 + (w.x1 - w.x0) * (i as f64 + 0.5) / n as f64;
                    let cy = w.y0 + (w.y1 - w.y0) * (j as f64 + 0.5) / n as f64;
                    let dist = m.truth.singular_distance(Point::new(cx, cy));
                    assert!(
                        dist < 2.0 * cell_diag,
                        "{}: flagged cell at ({cx}, {cy}) is {dist} from truth",
                        id.name()
                    );
                }
            }
        }
    }

    #[test]
    fn ex41_sweep_lands_on_negative_axis() {
        let m = build(GalleryId::Ex4_1);
        let beta = ParamCurve::circle_arc(
            Point::new(-1.0, 0.0),
            1.0,
            0.3,
            std::f64::consts::PI - 0.3,
        );
        let sweep = trace_singular_curve(m.problem(), &beta, 24).unwrap();
        assert!(sweep.rays.len() >= 20, "only {} rays hit", sweep.rays.len());
        for ray in &sweep.rays {
            assert!(ray.hit.y.abs() < 1e-3, "hit {:?}", ray.hit);
            assert!(ray.hit.x < 1e-3, "hit {:?}", ray.hit);
        }
    }

    #[test]
    fn ex44_sweep_lands_on_segment() {
        let m = build(GalleryId::Ex4_4);
        let beta = ParamCurve::segment(Point::new(0.35, 0.25), Point::new(0.35, 0.75));
        let sweep = trace_singular_curve(m.problem(), &beta, 16).unwrap();
        assert!(sweep.escaped.is_empty());
        for ray in &sweep.rays {
            assert!(ray.hit.x.abs() < 1e-3, "hit {:?}", ray.hit);
            assert!(ray.hit.y > -0.05 && ray.hit.y < 1.05);
        }
    }

    #[test]
    fn ex42_sweep_region_one_lands_on_diagonal() {
        let m = build(GalleryId::Ex4_2);
        let beta = ParamCurve::segment(Point::new(1.2, 0.3), Point::new(2.0, 0.9));
        let sweep = trace_singular_curve(m.problem(), &beta, 12).unwrap();
        for ray in &sweep.rays {
            assert!(
                (ray.hit.x - ray.hit.y).abs() < 1e-3 && ray.hit.x > 0.0,
                "hit {:?}",
                ray.hit
            );
        }
    }

    #[test]
    fn s_continuity_gap_shrinks_with_refinement() {
        let m = build(GalleryId::Ex4_1);
        let beta = ParamCurve::circle_arc(
            Point::new(-1.0, 0.0),
            0.8,
            0.4,
            std::f64::consts::PI - 0.4,
        );
        let gap = |n: usize| -> f64 {
            let sweep = trace_singular_curve(m.problem(), &beta, n).unwrap();
            sweep
                .rays
                .windows(2)
                .map(|w| w[1].hit.dist(w[0].hit))
                .fold(0.0f64, f64::max)
        };
        let g1 = gap(16);
        let g2 = gap(64);
        assert!(g2 < 0.5 * g1, "g1 {g1} g2 {g2}");
    }

    #[test]
    fn equal_angle_on_ex44() {
        let m = build(GalleryId::Ex4_4);
        let problem = m.problem();
        let plus = trace_singular_curve(
            problem,
            &ParamCurve::segment(Point::new(0.3, 0.25), Point::new(0.3, 0.75)),
            12,
        )
        .unwrap();
        let minus = trace_singular_curve(
            problem,
            &ParamCurve::segment(Point::new(-0.3, 0.25), Point::new(-0.3, 0.75)),
            12,
        )
        .unwrap();
        let points = merge_sweeps(&plus, &minus, 0.1);
        let mut checked = 0;
        for p in &points {
            if p.tangent_estimate.is_some() && p.n_minus.is_some() {
                let gap = equal_angle_check(p).unwrap();
                assert!(gap < 1e-2, "gap {gap} at {:?}", p.location);
                checked += 1;
            }
        }
        assert!(checked >= 5, "only {checked} points checked");
    }

    #[test]
    fn equal_angle_missing_side_errors() {
        let p = SingularCurvePoint {
            location: Point::new(0.0, 0.0),
            tangent_estimate: Some(Point::new(0.0, 1.0)),
            lambda_plus: None,
            lambda_minus: None,
            n_plus: Some(Point::new(1.0, 0.0)),
            n_minus: None,
        };
        assert!(matches!(
            equal_angle_check(&p),
            Err(Error::MissingSideData(_))
        ));
    }

    #[test]
    fn sigma_balance_on_ex44() {
        let m = build(GalleryId::Ex4_4);
        let problem = m.problem();
        let plus = trace_singular_curve(
            problem,
            &ParamCurve::segment(Point::new(0.3, 0.25), Point::new(0.3, 0.75)),
            12,
        )
        .unwrap();
        let minus = trace_singular_curve(
            problem,
            &ParamCurve::segment(Point::new(-0.3, 0.25), Point::new(-0.3, 0.75)),
            12,
        )
        .unwrap();
        let defect = sigma_balance_check(&plus, &minus).unwrap();
        let diag = problem.window().diagonal();
        assert!(defect < 1e-3 * diag, "defect {defect}");
    }

    #[test]
    fn lambda_rates_on_ex44() {
        let m = build(GalleryId::Ex4_4);
        let problem = m.problem();
        let seed_plus = ParamCurve::segment(Point::new(0.3, 0.3), Point::new(0.3, 0.7));
        let seed_minus = ParamCurve::segment(Point::new(-0.3, 0.3), Point::new(-0.3, 0.7));
        let p0 = Point::new(0.0, 0.5);
        let (lp, lm) = lambda_rates(problem, p0, &seed_plus, &seed_minus).unwrap();
        assert!(lp.abs() > EPS_LAMBDA, "lambda+ {lp}");
        assert!(lm.abs() > EPS_LAMBDA, "lambda- {lm}");
    }

    #[test]
    fn lambda_degenerate_seed_errors() {
        let m = build(GalleryId::Ex4_4);
        let problem = m.problem();
        // a seed running along the (nearly horizontal) characteristics is
        // not transversal
        let bad = ParamCurve::segment(Point::new(0.2, 0.5), Point::new(0.6, 0.52));
        let good = ParamCurve::segment(Point::new(-0.3, 0.3), Point::new(-0.3, 0.7));
        let r = lambda_rates(problem, Point::new(0.0, 0.5), &bad, &good);
        assert!(matches!(r, Err(Error::DegenerateSide("plus"))), "{r:?}");
    }

    #[test]
    fn holonomy_area_radial() {
        // curl F = 2 everywhere: |integral| = 2 * area in the limit.
        let m = build(GalleryId::RadialPlane);
        let beta = ParamCurve::circle_arc(Point::new(0.0, 0.0), 1.0, 0.3, 1.2);
        let report = holonomy_area_check(m.problem(), &beta, 64).unwrap();
        assert!(report.bounds_hold, "{report:?}");
        assert!(
            (report.integral.abs() - 2.0 * report.area).abs()
                < 0.02 * report.area.max(1e-9),
            "{report:?}"
        );
    }

    #[test]
    fn holonomy_area_ex41() {
        let m = build(GalleryId::Ex4_1);
        let beta = ParamCurve::circle_arc(
            Point::new(-1.0, 0.0),
            0.8,
            0.5,
            std::f64::consts::PI - 0.5,
        );
        let report = holonomy_area_check(m.problem(), &beta, 96).unwrap();
        assert!(report.bounds_hold, "{report:?}");
        let ratio = report.integral.abs() / report.area;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn no_characteristic_joins_two_singular_points() {
        // bidirectional traces across the gallery: at most one endpoint is
        // singular
        for id in [
            GalleryId::Ex4_1,
            GalleryId::Ex4_2,
            GalleryId::Ex4_3,
            GalleryId::Ex4_4,
        ] {
            let m = build(id);
            let problem = m.problem();
            let policy = StopPolicy::for_problem(problem);
            for probe in &m.truth.limit_probes {
                let fwd = trace_characteristic(problem, probe.start, 1, &policy).unwrap();
                let bwd = trace_characteristic(problem, probe.start, -1, &policy).unwrap();
                let singular_ends = [fwd, bwd]
                    .iter()
                    .filter(|c| c.stop_reason == StopReason::HitSingular)
                    .count();
                assert!(
                    singular_ends <= 1,
                    "{}: both directions from ({}, {}) hit the singular set",
                    id.name(),
                    probe.start.x,
                    probe.start.y
                );
            }
        }
    }
}
