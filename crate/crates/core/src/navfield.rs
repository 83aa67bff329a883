//! Decentralized navigation functions and the switching transition law.
//!
//! For agent `i` heading from region `k` to region `k'`:
//!
//! ```text
//! phi = (gamma + f(G)) / (gamma^lambda + G * alpha)^(1/lambda)
//! ```
//!
//! with `gamma = |p_i - p_k'|^2`, `G` the product of pairwise agent
//! distances and `alpha` the product of the workspace and undesired region
//! barriers.

use thiserror::Error;

use crate::workspace::{AgentSpec, Point, Region, Workspace};

/// Below this the denominator of `phi` is treated as zero.
pub const DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NavError {
    #[error("degenerate navigation field for agent {agent}: gamma^lambda + G*alpha = {denom:e}")]
    Degenerate { agent: usize, denom: f64 },
}

/// Per-agent constants of the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavParams {
    pub radius: f64,
    pub sensing: f64,
    pub kg: f64,
    pub lambda: f64,
    pub eps0: f64,
    pub x: f64,
    pub f_enabled: bool,
}

impl NavParams {
    /// Resolves the defaults of `spec` against the whole team: the f-term
    /// cutoff defaults to `0.1 (d_s^2 - (2 max r)^2)^(N-1)`.
    pub fn for_agent(spec: &AgentSpec, team: &[AgentSpec]) -> Self {
        let max_r = team.iter().map(|a| a.radius).fold(spec.radius, f64::max);
        let n = team.len().max(1);
        let plateau = spec.sensing * spec.sensing - 4.0 * max_r * max_r;
        let x = spec.fterm.x.unwrap_or_else(|| 0.1 * plateau.powi(n as i32 - 1));
        Self {
            radius: spec.radius,
            sensing: spec.sensing,
            kg: spec.gains.kg,
            lambda: spec.gains.lambda,
            eps0: spec.fterm.eps0,
            x,
            f_enabled: spec.fterm.enabled,
        }
    }
}

/// Everything one agent needs to evaluate one of its fields.
#[derive(Debug, Clone, Copy)]
pub struct NavContext<'a> {
    pub workspace: &'a Workspace,
    pub regions: &'a [Region],
    pub params: &'a NavParams,
    /// Radii of all agents, indexed like `positions`.
    pub radii: &'a [f64],
    pub positions: &'a [Point],
    pub agent: usize,
    /// Source region index, or `None` for the field that also avoids it.
    pub source: Option<usize>,
    pub target: usize,
}

impl NavContext<'_> {
    pub fn position(&self) -> Point {
        self.positions[self.agent]
    }

    /// The same field with the source region turned into an obstacle.
    pub fn without_source(&self) -> Self {
        Self { source: None, ..*self }
    }

    fn undesired(&self) -> impl Iterator<Item = &Region> {
        self.regions
            .iter()
            .enumerate()
            .filter(move |(m, _)| *m != self.target && Some(*m) != self.source)
            .map(|(_, r)| r)
    }
}

pub fn gamma(p: &Point, target: &Point) -> f64 {
    (p - target).norm_squared()
}

/// Inter-agent distance term. Neighbours beyond the sensing range sit on a
/// constant plateau; the range itself is closed.
pub fn beta_ij(pi: &Point, pj: &Point, ri: f64, rj: f64, ds: f64) -> f64 {
    let d2 = (pi - pj).norm_squared();
    let rr = (ri + rj) * (ri + rj);
    if d2 <= ds * ds {
        d2 - rr
    } else {
        ds * ds - rr
    }
}

fn beta_with_grad(pi: &Point, pj: &Point, ri: f64, rj: f64, ds: f64) -> (f64, Point) {
    let d = pi - pj;
    let d2 = d.norm_squared();
    let rr = (ri + rj) * (ri + rj);
    if d2 <= ds * ds {
        (d2 - rr, 2.0 * d)
    } else {
        (ds * ds - rr, Point::zeros())
    }
}

// Value and gradient of a product, robust to zero factors.
fn product_with_grad(factors: &[(f64, Point)]) -> (f64, Point) {
    let mut value = 1.0;
    let mut grad = Point::zeros();
    for (v, g) in factors {
        grad = grad * *v + g * value;
        value *= v;
    }
    (value, grad)
}

pub fn big_g(ctx: &NavContext) -> f64 {
    big_g_with_grad(ctx).0
}

pub fn big_g_with_grad(ctx: &NavContext) -> (f64, Point) {
    let pi = ctx.position();
    let ri = ctx.params.radius;
    let factors: Vec<(f64, Point)> = ctx
        .positions
        .iter()
        .zip(ctx.radii)
        .enumerate()
        .filter(|(j, _)| *j != ctx.agent)
        .map(|(_, (pj, rj))| beta_with_grad(&pi, pj, ri, *rj, ctx.params.sensing))
        .collect();
    product_with_grad(&factors)
}

/// `f(G) = eps0 (1 - G/X)^3` below the cutoff `X`, zero above it.
pub fn fterm(g: f64, eps0: f64, x: f64) -> f64 {
    fterm_with_deriv(g, eps0, x).0
}

pub fn fterm_with_deriv(g: f64, eps0: f64, x: f64) -> (f64, f64) {
    if g >= x {
        return (0.0, 0.0);
    }
    let u = 1.0 - g / x;
    (eps0 * u * u * u, -3.0 * eps0 * u * u / x)
}

pub fn alpha_avoid(ctx: &NavContext) -> f64 {
    alpha_with_grad(ctx).0
}

pub fn alpha_with_grad(ctx: &NavContext) -> (f64, Point) {
    let p = ctx.position();
    let ri = ctx.params.radius;
    let w = ctx.workspace;
    let d0 = p - w.center;
    let mut factors = vec![((w.radius - ri).powi(2) - d0.norm_squared(), -2.0 * d0)];
    for m in ctx.undesired() {
        let d = p - m.center;
        factors.push((d.norm_squared() - (ri + m.radius).powi(2), 2.0 * d));
    }
    product_with_grad(&factors)
}

struct Terms {
    gamma: f64,
    grad_gamma: Point,
    g: f64,
    grad_g: Point,
    alpha: f64,
    grad_alpha: Point,
    f: f64,
    df: f64,
    denom: f64,
}

fn terms(ctx: &NavContext) -> Result<Terms, NavError> {
    let p = ctx.position();
    let target = ctx.regions[ctx.target].center;
    let lambda = ctx.params.lambda;
    let (g, grad_g) = big_g_with_grad(ctx);
    let (alpha, grad_alpha) = alpha_with_grad(ctx);
    let gamma = gamma(&p, &target);
    let (f, df) = if ctx.params.f_enabled {
        fterm_with_deriv(g, ctx.params.eps0, ctx.params.x)
    } else {
        (0.0, 0.0)
    };
    let denom = gamma.powf(lambda) + g * alpha;
    if !(denom > DENOM_FLOOR) {
        return Err(NavError::Degenerate { agent: ctx.agent, denom });
    }
    Ok(Terms {
        gamma,
        grad_gamma: 2.0 * (p - target),
        g,
        grad_g,
        alpha,
        grad_alpha,
        f,
        df,
        denom,
    })
}

pub fn phi(ctx: &NavContext) -> Result<f64, NavError> {
    let t = terms(ctx)?;
    Ok((t.gamma + t.f) / t.denom.powf(1.0 / ctx.params.lambda))
}

/// Analytic gradient of [`phi`] with respect to the agent's own position.
pub fn grad_phi(ctx: &NavContext) -> Result<Point, NavError> {
    let t = terms(ctx)?;
    let lambda = ctx.params.lambda;
    let ga = t.g * t.alpha;
    let grad_ga = t.grad_g * t.alpha + t.grad_alpha * t.g;
    // gamma^(lambda-1) grad(gamma); the product vanishes at the goal even when
    // the power alone would not be finite.
    let lead = if t.gamma > 0.0 { t.grad_gamma * t.gamma.powf(lambda - 1.0) } else { Point::zeros() };
    let grad_denom = lead * lambda + grad_ga;
    // D (grad gamma) - (gamma/lambda) grad D, with the gamma^lambda parts cancelled.
    let mut num = t.grad_gamma * ga - grad_ga * (t.gamma / lambda);
    if t.f != 0.0 || t.df != 0.0 {
        num += t.grad_g * (t.df * t.denom) - grad_denom * (t.f / lambda);
    }
    Ok(num * t.denom.powf(-1.0 / lambda - 1.0))
}

/// `s(x) = (sat(2x - 1) + 1) / 2`.
pub fn switch_s(x: f64) -> f64 {
    0.5 * ((2.0 * x - 1.0).clamp(-1.0, 1.0) + 1.0)
}

/// Timing of one transition: its start, and once the agent has left the
/// source region, the exit time and the blend duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchClock {
    pub t0: f64,
    pub exit: Option<(f64, f64)>,
}

impl SwitchClock {
    pub fn start(t0: f64) -> Self {
        Self { t0, exit: None }
    }

    /// Records the exit time `t'` and sets `nu = max(0.1 (t' - t0), min_nu)`.
    pub fn mark_exit(&mut self, t_exit: f64, min_nu: f64) {
        let nu = (0.1 * (t_exit - self.t0)).max(min_nu);
        self.exit = Some((t_exit, nu));
    }

    pub fn t_exit(&self) -> Option<f64> {
        self.exit.map(|e| e.0)
    }

    pub fn nu(&self) -> Option<f64> {
        self.exit.map(|e| e.1)
    }

    /// Weight of the source-avoiding field at time `t`.
    pub fn blend(&self, t: f64) -> f64 {
        match self.exit {
            None => 0.0,
            Some((t_exit, nu)) => switch_s((t - t_exit) / nu),
        }
    }
}

/// `-k_g grad(phi)` of the given field, or zero when the agent stays put.
pub fn field_control(ctx: &NavContext) -> Result<Point, NavError> {
    if ctx.source == Some(ctx.target) {
        return Ok(Point::zeros());
    }
    Ok(grad_phi(ctx)? * -ctx.params.kg)
}

/// The switching law: the `(k, k')` field until the agent leaves `k`, then a
/// linear blend into the `(∅, k')` field over `nu` seconds.
pub fn control(t: f64, ctx: &NavContext, clock: &SwitchClock) -> Result<Point, NavError> {
    if ctx.source == Some(ctx.target) {
        return Ok(Point::zeros());
    }
    let s = clock.blend(t);
    if s <= 0.0 {
        return field_control(ctx);
    }
    let free = field_control(&ctx.without_source())?;
    if s >= 1.0 {
        return Ok(free);
    }
    Ok(field_control(ctx)? * (1.0 - s) + free * s)
}
