//! Drag and displacement labels: Prohaska form factor, laminar friction
//! line and the thin-ship (Michell) wave-resistance integral.
//!
//! Wave resistance is evaluated fully nondimensionally: `x`, `z` and the
//! half-breadth `f` are divided by `L`, so the wave number is
//! `K₀L = gL/U² = 1/Fn²`. Inside each grid cell the hull is the bilinear
//! interpolant of the offsets, and the `x` and `z` integrals of the
//! amplitude functions are evaluated exactly for that interpolant. Only the
//! slope of the surface between stations acts as a source; offsets left at
//! the end stations of an unclosed hull do not add a step.

use crate::error::{Error, Result};
use crate::geometry::{coefficients_from_grid, displacement_volume, HullGrid};
use crate::scalar::Real;

/// Metres per second in one knot.
pub const KNOT: f64 = 0.514444;

/// Physical constants of the fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroEnv<T> {
    /// Gravitational acceleration [m/s²].
    pub g: T,
    /// Water density [kg/m³].
    pub rho: T,
    /// Kinematic viscosity [m²/s].
    pub nu: T,
}

impl<T: Real> Default for HydroEnv<T> {
    /// Sea water at 15 °C.
    fn default() -> Self {
        Self { g: T::lit(9.80665), rho: T::lit(1025.0), nu: T::lit(1.19e-6) }
    }
}

impl<T: Real> HydroEnv<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("rho", self.rho), ("nu", self.nu)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Quadrature over the wave propagation angle `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    /// Number of composite-Simpson panels on `[0, theta_max]` (even).
    pub n_theta: usize,
    /// Upper cutoff, strictly below `π/2`.
    pub theta_max: T,
    /// Panel multiplier used by the refined oracle and the convergence check.
    pub refinement_factor: usize,
    /// When set, [`wave_cdw`] also evaluates with doubled panels and fails if
    /// the relative change exceeds this tolerance.
    pub convergence_tol: Option<T>,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self {
            n_theta: 1024,
            theta_max: T::FRAC_PI_2() - T::lit(1e-3),
            refinement_factor: 8,
            convergence_tol: None,
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 16 || self.n_theta % 2 != 0 {
            return Err(Error::Config(format!("n_theta must be even and >= 16, got {}", self.n_theta)));
        }
        if !(self.theta_max > T::zero() && self.theta_max < T::FRAC_PI_2()) {
            return Err(Error::Config(format!("theta_max must lie in (0, pi/2), got {}", self.theta_max)));
        }
        if self.refinement_factor < 2 {
            return Err(Error::Config("refinement_factor must be >= 2".into()));
        }
        Ok(())
    }

    /// The same scheme with `refinement_factor` times more panels.
    pub fn refined(&self) -> Self {
        Self { n_theta: self.n_theta * self.refinement_factor, convergence_tol: None, ..*self }
    }
}

/// Components of the drag coefficient for one hull at one speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragBreakdown<T> {
    pub k: T,
    pub cdf: T,
    pub cdw: T,
    pub cd: T,
    pub fn_: T,
    pub rn: T,
}

/// Performance label `(Cd, W, U)`; `u` is in knots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullLabel<T> {
    pub cd: T,
    pub w: T,
    pub u: T,
}

pub fn knots_to_ms<T: Real>(knots: T) -> T {
    knots * T::lit(KNOT)
}

pub fn froude<T: Real>(u: T, length: T, env: &HydroEnv<T>) -> T {
    u / (env.g * length).sqrt()
}

pub fn reynolds<T: Real>(u: T, length: T, env: &HydroEnv<T>) -> T {
    u * length / env.nu
}

/// Prohaska's regression for the form factor `K`.
pub fn prohaska_k<T: Real>(beam: T, draft: T, cb: T, length: T) -> T {
    let bd = beam / draft;
    let cbl = cb * beam / length;
    T::lit(0.11) + T::lit(0.128) * bd - T::lit(0.0157) * bd * bd - T::lit(3.1) * cbl
        + T::lit(28.8) * cbl * cbl
}

/// Laminar (Blasius) friction line `1.328 / √Rn`.
pub fn friction_cdf<T: Real>(rn: T) -> T {
    T::lit(1.328) / rn.sqrt()
}

/// `∫₀¹ s e^{-v s} ds` for `v ≥ 0`.
fn lower_node_weight<T: Real>(v: T) -> T {
    if v < T::lit(1e-3) {
        T::lit(0.5) - v / T::lit(3.0) + v * v / T::lit(8.0) - v * v * v / T::lit(30.0)
    } else {
        (-(-v).exp_m1() - v * (-v).exp()) / (v * v)
    }
}

/// `∫₀¹ (1 - s) e^{-v s} ds` for `v ≥ 0`.
fn upper_node_weight<T: Real>(v: T) -> T {
    if v < T::lit(1e-3) {
        T::lit(0.5) - v / T::lit(6.0) + v * v / T::lit(24.0) - v * v * v / T::lit(120.0)
    } else {
        (v + (-v).exp_m1()) / (v * v)
    }
}

/// Precomputed full-length centerplane of one hull, nondimensionalized by `L`.
struct Centerplane<T> {
    /// Station abscissae, aft end to bow, length `2 nx - 1`.
    x: Vec<T>,
    /// Node depths `z_j ≤ 0` (waterline first).
    z: Vec<T>,
    /// `f[i * nz + j]` on the full-length stations.
    f: Vec<T>,
}

impl<T: Real> Centerplane<T> {
    fn new(h: &HullGrid<T>) -> Result<Self> {
        let (nx, nz) = (h.grid.nx(), h.grid.nz());
        if h.y.len() != nx * nz {
            return Err(Error::Shape(format!("offset table has {} values, grid needs {}", h.y.len(), nx * nz)));
        }
        if !(h.length > T::zero()) || !(h.draft_nominal > T::zero()) || h.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateHull(format!(
                "length {}, draft {} or non-finite offsets",
                h.length, h.draft_nominal
            )));
        }
        let half = T::lit(0.5);
        let xs = h.grid.x_stations();
        let mut x = Vec::with_capacity(2 * nx - 1);
        let mut rows: Vec<usize> = Vec::with_capacity(2 * nx - 1);
        for i in (1..nx).rev() {
            x.push(-xs[i] * half);
            rows.push(i);
        }
        for (i, &xi) in xs.iter().enumerate() {
            x.push(xi * half);
            rows.push(i);
        }
        let inv_l = T::one() / h.length;
        let mut f = Vec::with_capacity(rows.len() * nz);
        for &i in &rows {
            f.extend(h.y[i * nz..(i + 1) * nz].iter().map(|&v| v * inv_l));
        }
        let depth = h.draft_nominal * inv_l;
        let z = h.grid.z_stations().iter().map(|&zeta| -zeta * depth).collect();
        Ok(Self { x, z, f })
    }

    /// Amplitude functions `(P, Q)` at wave number `k0` (nondimensional).
    fn amplitudes(&self, k0: T, theta: T) -> (T, T) {
        let sec = T::one() / theta.cos();
        let k = k0 * sec;
        let a = k0 * sec * sec;
        let nx = self.x.len();
        let nz = self.z.len();
        let two = T::lit(2.0);

        // ∫ sin(kx), ∫ cos(kx) over each x panel, divided by the panel width
        let mut ws = Vec::with_capacity(nx - 1);
        let mut wc = Vec::with_capacity(nx - 1);
        for w in self.x.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = k * (lo + hi) / two;
            let half_span = k * (hi - lo) / two;
            let s = two * half_span.sin() / (k * (hi - lo));
            // ∫ sin = (cos lo - cos hi)/k = 2 sin(mid) sin(half)/k
            ws.push(mid.sin() * s);
            wc.push(mid.cos() * s);
        }

        // per-row x integrals of ∂f/∂x · (sin, cos)
        let mut gp = vec![T::zero(); nz];
        let mut gq = vec![T::zero(); nz];
        for i in 0..nx - 1 {
            let (row0, row1) = (&self.f[i * nz..(i + 1) * nz], &self.f[(i + 1) * nz..(i + 2) * nz]);
            // slope * ∫trig = (f1 - f0) * (∫trig / width)
            for j in 0..nz {
                let df = row1[j] - row0[j];
                gp[j] = gp[j] + df * ws[i];
                gq[j] = gq[j] + df * wc[i];
            }
        }

        // exact z integration of the linear interpolant against e^{a z}
        let mut p = T::zero();
        let mut q = T::zero();
        for j in 0..nz - 1 {
            let (zu, zl) = (self.z[j], self.z[j + 1]);
            let h = zu - zl;
            let v = a * h;
            let scale = (a * zu).exp() * h;
            let w_upper = scale * upper_node_weight(v);
            let w_lower = scale * lower_node_weight(v);
            p = p + gp[j] * w_upper + gp[j + 1] * w_lower;
            q = q + gq[j] * w_upper + gq[j + 1] * w_lower;
        }
        (p, q)
    }
}

/// Amplitude functions `P(θ)`, `Q(θ)` of the hull at speed `u` [m/s].
pub fn amplitude_pq<T: Real>(h: &HullGrid<T>, u: T, env: &HydroEnv<T>, theta: T) -> Result<(T, T)> {
    if !(u > T::zero()) {
        return Err(Error::Config(format!("speed must be positive, got {u}")));
    }
    if !(theta >= T::zero() && theta < T::FRAC_PI_2()) {
        return Err(Error::Config(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    let cp = Centerplane::new(h)?;
    let fr = froude(u, h.length, env);
    Ok(cp.amplitudes(T::one() / (fr * fr), theta))
}

fn simpson_cdw<T: Real>(cp: &Centerplane<T>, fr: T, n: usize, theta_max: T) -> T {
    let k0 = T::one() / (fr * fr);
    let step = theta_max / T::lit(n as f64);
    let mut acc = T::zero();
    for m in 0..=n {
        let theta = step * T::lit(m as f64);
        let (p, q) = cp.amplitudes(k0, theta);
        let sec = T::one() / theta.cos();
        let v = (p * p + q * q) * sec * sec * sec;
        let w = if m == 0 || m == n {
            T::one()
        } else if m % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        acc = acc + w * v;
    }
    let integral = acc * step / T::lit(3.0);
    T::lit(8.0) / (T::PI() * fr.powi(4)) * integral
}

/// Wave drag coefficient `8/(π Fn⁴) ∫₀^{π/2} (P² + Q²) sec³θ dθ`.
pub fn wave_cdw<T: Real>(h: &HullGrid<T>, u: T, env: &HydroEnv<T>, q: &QuadratureSpec<T>) -> Result<T> {
    q.validate()?;
    if !(u > T::zero()) {
        return Err(Error::Config(format!("speed must be positive, got {u}")));
    }
    let cp = Centerplane::new(h)?;
    let fr = froude(u, h.length, env);
    let cdw = simpson_cdw(&cp, fr, q.n_theta, q.theta_max);
    if let Some(tol) = q.convergence_tol {
        let fine = simpson_cdw(&cp, fr, 2 * q.n_theta, q.theta_max);
        let scale = fine.abs().max(T::min_positive_value());
        if (fine - cdw).abs() / scale > tol {
            return Err(Error::QuadratureNonConverged {
                n_theta: q.n_theta,
                fine_panels: 2 * q.n_theta,
                coarse: cdw.to_f64().unwrap_or(f64::NAN),
                fine: fine.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(cdw)
}

/// Full drag breakdown, with `K` taken from the measured beam, draft and
/// block coefficient of the offsets.
pub fn total_cd<T: Real>(h: &HullGrid<T>, u: T, env: &HydroEnv<T>, q: &QuadratureSpec<T>) -> Result<DragBreakdown<T>> {
    let (cb, _, _) = coefficients_from_grid(h)?;
    let beam = T::lit(2.0) * h.max_half_breadth();
    let k = prohaska_k(beam, h.draft_nominal, cb, h.length);
    let rn = reynolds(u, h.length, env);
    let cdf = friction_cdf(rn);
    let cdw = wave_cdw(h, u, env, q)?;
    let cd = (T::one() + k) * cdf + cdw;
    Ok(DragBreakdown { k, cdf, cdw, cd, fn_: froude(u, h.length, env), rn })
}

/// Displacement tonnage `ρ∇ / 1000` [t].
pub fn displacement_tonnage<T: Real>(h: &HullGrid<T>, env: &HydroEnv<T>) -> Result<T> {
    Ok(env.rho * displacement_volume(h)? / T::lit(1000.0))
}

/// Recomputes the performance label of a hull at `u_knots`.
pub fn label_hull<T: Real>(h: &HullGrid<T>, u_knots: T, env: &HydroEnv<T>, q: &QuadratureSpec<T>) -> Result<HullLabel<T>> {
    let drag = total_cd(h, knots_to_ms(u_knots), env, q)?;
    let w = displacement_tonnage(h, env)?;
    Ok(HullLabel { cd: drag.cd, w, u: u_knots })
}

#[cfg(test)]
mod tests;
