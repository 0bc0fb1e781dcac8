//! Unit-speed billiard flow with specular reflection in radial domains.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, FourierRadius, Shape, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BilliardState {
    /// Intrinsic coordinates (shape center at the origin).
    pub pos: Vec2,
    pub vel: Vec2,
}

impl BilliardState {
    pub fn new(pos: Vec2, angle: f64) -> Self {
        BilliardState { pos, vel: Vec2::new(angle.cos(), angle.sin()) }
    }

    pub fn reversed(&self) -> Self {
        BilliardState { pos: self.pos, vel: -self.vel }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bounce {
    pub time: f64,
    pub pos: Vec2,
    /// Outward unit normal at the bounce point.
    pub normal: Vec2,
    /// Velocity after reflection.
    pub vel: Vec2,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub start: BilliardState,
    pub bounces: Vec<Bounce>,
    pub duration: f64,
    /// Observation origin in intrinsic coordinates.
    pub origin: Vec2,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> BilliardState {
        let i = self.bounces.partition_point(|b| b.time <= t);
        let (t0, p0, v) = if i == 0 {
            (0.0, self.start.pos, self.start.vel)
        } else {
            let b = &self.bounces[i - 1];
            (b.time, b.pos, b.vel)
        };
        BilliardState { pos: p0 + v * (t - t0), vel: v }
    }

    pub fn end(&self) -> BilliardState {
        self.state_at(self.duration)
    }

    /// Exact `(1/T) ∫ |x(t) - origin|² dt`; each leg contributes a quadratic.
    pub fn time_average_r2(&self) -> f64 {
        let leg = |p: Vec2, v: Vec2, a: f64, b: f64| {
            let d = p - self.origin;
            let (c0, c1, c2) = (d.norm_squared(), 2.0 * d.dot(&v), v.norm_squared());
            let s = b - a;
            c0 * s + 0.5 * c1 * s * s + c2 * s * s * s / 3.0
        };
        let mut total = 0.0;
        let (mut t0, mut p0, mut v) = (0.0, self.start.pos, self.start.vel);
        for b in &self.bounces {
            total += leg(p0, v, t0, b.time);
            (t0, p0, v) = (b.time, b.pos, b.vel);
        }
        total += leg(p0, v, t0, self.duration);
        total / self.duration
    }

    /// Largest `| |v| - 1 |` over all legs.
    pub fn speed_error(&self) -> f64 {
        std::iter::once(self.start.vel)
            .chain(self.bounces.iter().map(|b| b.vel))
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Level-set view `g(p) = |p| - rho(theta(p))` of a radial boundary.
#[derive(Clone, Debug)]
pub struct RadialBoundary {
    pub radius: FourierRadius,
    /// Bound on `|grad g|` inside the domain, used for sphere tracing.
    lipschitz: f64,
}

const BISECTION_TOL: f64 = 1e-15;
const MAX_TRACE_STEPS: usize = 1_000_000;
const WALL_NOISE: f64 = 1e-13;

impl RadialBoundary {
    pub fn new(domain: &Domain) -> Result<Self> {
        let Shape::Radial(f) = &domain.shape else {
            return Err(Error::Unsupported("billiard dynamics are implemented for radial domains".into()));
        };
        let n = 4096;
        let (mut rmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let (r, d, _) = f.eval(2.0 * PI * i as f64 / n as f64);
            rmin = rmin.min(r);
            dmax = dmax.max(d.abs());
        }
        // |grad g|² = 1 + (rho'/|p|)², and |p| >= rmin near the boundary; the
        // margin covers sampling and interior points closer to the center.
        let lipschitz = 1.25 * (1.0 + (dmax / (0.5 * rmin)).powi(2)).sqrt();
        Ok(RadialBoundary { radius: f.clone(), lipschitz })
    }

    pub fn level(&self, p: Vec2) -> f64 {
        p.norm() - self.radius.eval(p.y.atan2(p.x)).0
    }

    /// Outward unit normal of the level set through `p`.
    pub fn normal(&self, p: Vec2) -> Vec2 {
        let r = p.norm();
        let th = p.y.atan2(p.x);
        let (_, d, _) = self.radius.eval(th);
        let rhat = p / r;
        let that = Vec2::new(-rhat.y, rhat.x);
        let g = rhat - that * (d / r);
        g / g.norm()
    }

    /// Smallest `s > 0` where `p + s v` leaves the domain, and the last
    /// interior point before it.
    pub fn next_hit(&self, p: Vec2, v: Vec2) -> Result<(f64, Vec2)> {
        let at = |s: f64| self.level(p + v * s);
        let mut s = 0.0;
        let mut g = at(s);
        if g > -WALL_NOISE {
            // On the wall the level is roundoff; step off until it is reliably
            // negative. A sign change on the way is a glancing chord.
            let mut prev = 0.0;
            s = 1e-12;
            loop {
                g = at(s);
                if g < -WALL_NOISE {
                    break;
                }
                if g >= 0.0 && prev > 0.0 {
                    let a = bisect(&at, prev, s);
                    return Ok((a, p + v * a));
                }
                if s > 1e-6 {
                    return Err(Error::Trajectory(format!("velocity {v:?} at {p:?} does not point into the domain")));
                }
                if g < 0.0 {
                    prev = s;
                }
                s *= 2.0;
            }
        }
        for _ in 0..MAX_TRACE_STEPS {
            // Newton guess for the crossing, accepted only if it brackets.
            let slope = v.dot(&self.normal(p + v * s));
            if slope > 0.0 {
                let b = s - g / slope * (1.0 + 1e-6) + 1e-13;
                if at(b) >= 0.0 {
                    let a = bisect(&at, s, b);
                    return Ok((a, p + v * a));
                }
            }
            // Sphere tracing: no crossing within -g / L of the current point.
            let next = s + (-g / self.lipschitz).max(1e-15);
            let gn = at(next);
            if gn >= 0.0 {
                let a = bisect(&at, s, next);
                return Ok((a, p + v * a));
            }
            s = next;
            g = gn;
        }
        Err(Error::Trajectory(format!("no wall crossing found from {p:?} along {v:?}")))
    }
}

/// Shrink `[a, b]` with `f(a) < 0 <= f(b)` to roundoff; returns `a`.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    while b - a > BISECTION_TOL * (1.0 + b) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Flow `state` for time `duration`, recording every reflection.
pub fn evolve(state: BilliardState, domain: &Domain, duration: f64) -> Result<Trajectory> {
    let wall = RadialBoundary::new(domain)?;
    evolve_in(&wall, state, domain.origin_offset, duration)
}

pub fn evolve_in(wall: &RadialBoundary, state: BilliardState, origin: Vec2, duration: f64) -> Result<Trajectory> {
    if wall.level(state.pos) >= 0.0 {
        return Err(Error::Trajectory(format!("initial position {:?} is not inside the domain", state.pos)));
    }
    if ((state.vel.norm() - 1.0).abs()) > 1e-12 {
        return Err(Error::Trajectory(format!("initial speed {} is not 1", state.vel.norm())));
    }
    let mut bounces = Vec::new();
    let (mut t, mut p, mut v) = (0.0, state.pos, state.vel);
    loop {
        let (s, hit) = wall.next_hit(p, v)?;
        if t + s > duration {
            break;
        }
        t += s;
        let n = wall.normal(hit);
        v -= 2.0 * v.dot(&n) * n;
        p = hit;
        bounces.push(Bounce { time: t, pos: hit, normal: n, vel: v });
    }
    Ok(Trajectory { start: state, bounces, duration, origin })
}

/// Uniform position and direction (Liouville measure).
pub fn random_state(domain: &Domain, rng: &mut impl Rng) -> BilliardState {
    let (lo, hi) = domain.bounding_box();
    loop {
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if domain.contains(p) {
            return BilliardState::new(p, rng.gen_range(0.0..2.0 * PI));
        }
    }
}

/// `|x(t) - origin|²` at `t = 0, dt, 2 dt, ...` up to the duration.
pub fn observable_series(traj: &Trajectory, dt: f64) -> Vec<f64> {
    let n = (traj.duration / dt).floor() as usize;
    let mut out = Vec::with_capacity(n);
    let mut b = 0;
    let (mut t0, mut p0, mut v) = (0.0, traj.start.pos, traj.start.vel);
    for i in 0..n {
        let t = i as f64 * dt;
        while b < traj.bounces.len() && traj.bounces[b].time <= t {
            let bb = &traj.bounces[b];
            (t0, p0, v) = (bb.time, bb.pos, bb.vel);
            b += 1;
        }
        out.push((p0 + v * (t - t0) - traj.origin).norm_squared());
    }
    out
}
