//! Generalized Wigley hull form, the fixed offset grid and the flat
//! point-cloud representation consumed by the networks.
//!
//! Normalized coordinates: `ξ ∈ [0, 1]` runs from midship (`ξ = 0`) to the
//! end of the ship (`ξ = 1`), `ζ ∈ [0, 1]` runs from the waterline down to
//! the keel, and `η(ξ, ζ)` is the half-breadth divided by `B/2`. The hull is
//! symmetric fore-aft and port-starboard, so the stations only cover one
//! quarter of the hull surface.

mod gamma;
mod offsets;

pub use gamma::{ln_gamma, section_fullness};
pub use offsets::{read_offsets_csv, write_offsets_csv};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Longitudinal stations of the offset table, midship to end.
pub const STANDARD_X_STATIONS: [f64; 20] = [
    0.0, 0.2, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.925, 0.9375, 0.95,
    0.9625, 0.975, 0.9875, 1.0,
];

/// Number of depth stations in the standard grid.
pub const STANDARD_Z_COUNT: usize = 40;

const DENOMINATOR_EPS: f64 = 1e-12;
const ETA_UPPER_SLACK: f64 = 1e-9;

/// Principal dimensions and coefficients of fineness of one hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WigleyParams<T> {
    /// Length `L` [m].
    pub length: T,
    /// Beam `B` [m].
    pub beam: T,
    /// Draft `d` [m].
    pub draft: T,
    /// Block coefficient `Cb`.
    pub cb: T,
    /// Midship area coefficient `Cm`.
    pub cm: T,
    /// Waterplane area coefficient `Cw`.
    pub cw: T,
}

/// Exponents of the generalized Wigley surface derived from the
/// coefficients of fineness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WigleyExponents<T> {
    pub cp: T,
    pub x1: T,
    pub x2: T,
    pub x3: T,
    pub z1: T,
    pub z2: T,
    pub s: T,
}

/// Normalized station positions of the offset table.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    x_stations: Vec<T>,
    z_stations: Vec<T>,
}

/// Half-breadth offsets on a [`GridSpec`] plus the dimensional scales.
///
/// `y` is stored station-major: `y[i * nz + j]` is the offset at `ξ_i`, `ζ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullGrid<T> {
    pub grid: GridSpec<T>,
    pub y: Vec<T>,
    pub length: T,
    pub beam_nominal: T,
    pub draft_nominal: T,
}

/// The network-facing representation: one `(y, z)` pair per grid point.
///
/// Points are ordered station-major (`i` outer, `j` inner). Flattening
/// interleaves the pair, so the flat vector reads
/// `[y(0,0), z(0,0), y(0,1), z(0,1), ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPointCloud<T> {
    pub points: Vec<(T, T)>,
    pub length: T,
}

impl<T: Real> WigleyParams<T> {
    pub fn new(length: T, beam: T, draft: T, cb: T, cm: T, cw: T) -> Self {
        Self { length, beam, draft, cb, cm, cw }
    }

    /// Prismatic coefficient `Cb / Cm`.
    pub fn cp(&self) -> T {
        self.cb / self.cm
    }

    /// See [`validate_params`].
    pub fn is_valid(&self) -> bool {
        validate_params(self)
    }
}

/// Computes the surface exponents of the generalized Wigley form.
pub fn compute_exponents<T: Real>(p: &WigleyParams<T>) -> Result<WigleyExponents<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let eps = T::lit(DENOMINATOR_EPS);
    let check = |name: &str, v: T| -> Result<()> {
        if !(v.abs() >= eps) {
            return Err(Error::DegenerateParams(format!("{name} = {v} is (near) zero")));
        }
        Ok(())
    };

    check("Cm", p.cm)?;
    check("1 - Cw", one - p.cw)?;
    check("1 - Cm", one - p.cm)?;
    let cp = p.cb / p.cm;
    check("Cp", cp)?;
    check("1 - Cp", one - cp)?;

    let x1 = p.cw / (one - p.cw);
    let x2 = (cp / (one - cp)).max(two);
    let x3 = one / (cp * cp);
    let s = section_fullness(x2, x3);

    let denom = p.cw - p.cb - s * (one - p.cm);
    check("Cw - Cb - S(1 - Cm)", denom)?;
    let z1 = (p.cb - s * p.cm) / denom;
    let z2 = p.cm / (one - p.cm) * (p.cw - cp) / denom;

    Ok(WigleyExponents { cp, x1, x2, x3, z1, z2, s })
}

/// Normalized half-breadth of the generalized Wigley surface.
#[inline]
pub fn eta<T: Real>(e: &WigleyExponents<T>, xi: T, zeta: T) -> T {
    let one = T::one();
    let zp = zeta.powf(e.z1);
    let outer = (one - zp) * (one - xi.powf(e.x1));
    let inner = zp * (one - zeta.powf(e.z2)) * (one - xi.powf(e.x2)).powf(e.x3);
    outer + inner
}

/// Whether `p` describes a well-formed generalized Wigley hull.
///
/// Requires positive dimensions, `0 < Cb < Cm < 1`, `0 < Cw < 1`, positive
/// exponents `X1, X3, Z1, Z2`, a positive `Cw - Cb - S(1 - Cm)` and
/// `η ∈ [0, 1]` on every point of the standard grid.
pub fn validate_params<T: Real>(p: &WigleyParams<T>) -> bool {
    let zero = T::zero();
    let one = T::one();
    let finite = [p.length, p.beam, p.draft, p.cb, p.cm, p.cw].iter().all(|v| v.is_finite());
    if !finite || p.length <= zero || p.beam <= zero || p.draft <= zero {
        return false;
    }
    if !(zero < p.cb && p.cb < p.cm && p.cm < one && zero < p.cw && p.cw < one) {
        return false;
    }
    let e = match compute_exponents(p) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let denom = p.cw - p.cb - e.s * (one - p.cm);
    let exps = [e.x1, e.x3, e.z1, e.z2];
    if denom <= zero || exps.iter().any(|&v| !(v > zero) || !v.is_finite()) {
        return false;
    }
    let grid = GridSpec::<T>::standard();
    let upper = one + T::lit(ETA_UPPER_SLACK);
    for &xi in grid.x_stations() {
        for &zeta in grid.z_stations() {
            let v = eta(&e, xi, zeta);
            if !(v >= zero && v <= upper) {
                return false;
            }
        }
    }
    true
}

/// Samples the hull on `grid`: `y[i][j] = (B/2) η(ξ_i, ζ_j)`.
pub fn sample_hull<T: Real>(p: &WigleyParams<T>, grid: &GridSpec<T>) -> Result<HullGrid<T>> {
    if !validate_params(p) {
        // surface the specific reason when there is one
        compute_exponents(p)?;
        return Err(Error::DegenerateParams(format!("invalid hull parameters {p:?}")));
    }
    let e = compute_exponents(p)?;
    let half_beam = p.beam / T::lit(2.0);
    let mut y = Vec::with_capacity(grid.len());
    for &xi in grid.x_stations() {
        for &zeta in grid.z_stations() {
            y.push(half_beam * eta(&e, xi, zeta));
        }
    }
    Ok(HullGrid {
        grid: grid.clone(),
        y,
        length: p.length,
        beam_nominal: p.beam,
        draft_nominal: p.draft,
    })
}

impl<T: Real> GridSpec<T> {
    /// Builds a grid from explicit stations. Both lists must be strictly
    /// increasing, start at 0, end at 1 and hold at least two values.
    pub fn new(x_stations: Vec<T>, z_stations: Vec<T>) -> Result<Self> {
        for (name, st) in [("x", &x_stations), ("z", &z_stations)] {
            if st.len() < 2 {
                return Err(Error::Shape(format!("{name} stations: need at least 2, got {}", st.len())));
            }
            if st[0] != T::zero() || st[st.len() - 1] != T::one() {
                return Err(Error::Shape(format!("{name} stations must span [0, 1]")));
            }
            if st.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Shape(format!("{name} stations must be strictly increasing")));
            }
        }
        Ok(Self { x_stations, z_stations })
    }

    /// The 20 x 40 offset grid: fixed longitudinal stations refined toward
    /// the ends and uniform depth stations `ζ_j = j / 39`.
    pub fn standard() -> Self {
        let x = STANDARD_X_STATIONS.iter().map(|&v| T::lit(v)).collect();
        Self { x_stations: x, z_stations: uniform_stations(STANDARD_Z_COUNT) }
    }

    pub fn x_stations(&self) -> &[T] {
        &self.x_stations
    }

    pub fn z_stations(&self) -> &[T] {
        &self.z_stations
    }

    pub fn nx(&self) -> usize {
        self.x_stations.len()
    }

    pub fn nz(&self) -> usize {
        self.z_stations.len()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.nx() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the flattened `(y, z)` vector.
    pub fn flat_len(&self) -> usize {
        2 * self.len()
    }

    /// Trapezoid weights over the longitudinal stations.
    pub fn x_weights(&self) -> Vec<T> {
        trapezoid_weights(&self.x_stations)
    }

    /// Trapezoid weights over the depth stations.
    pub fn z_weights(&self) -> Vec<T> {
        trapezoid_weights(&self.z_stations)
    }
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self::standard()
    }
}

/// `n` evenly spaced stations on `[0, 1]`, endpoints exact.
pub fn uniform_stations<T: Real>(n: usize) -> Vec<T> {
    assert!(n >= 2);
    let last = T::lit((n - 1) as f64);
    (0..n)
        .map(|j| if j == n - 1 { T::one() } else { T::lit(j as f64) / last })
        .collect()
}

/// Composite trapezoid weights for arbitrary (sorted) abscissae.
pub fn trapezoid_weights<T: Real>(x: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut w = vec![T::zero(); x.len()];
    for k in 0..x.len().saturating_sub(1) {
        let h = (x[k + 1] - x[k]) * half;
        w[k] = w[k] + h;
        w[k + 1] = w[k + 1] + h;
    }
    w
}

impl<T: Real> HullGrid<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.y[i * self.grid.nz() + j]
    }

    /// Largest half-breadth on the grid.
    pub fn max_half_breadth(&self) -> T {
        self.y.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    fn check(&self) -> Result<()> {
        if self.y.len() != self.grid.len() {
            return Err(Error::Shape(format!(
                "offset table has {} values, grid needs {}",
                self.y.len(),
                self.grid.len()
            )));
        }
        let zero = T::zero();
        if !(self.length > zero) || !(self.draft_nominal > zero) {
            return Err(Error::DegenerateHull(format!(
                "non-positive length {} or draft {}",
                self.length, self.draft_nominal
            )));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateHull("non-finite offset".into()));
        }
        Ok(())
    }

    /// `∫∫ y dξ dζ` over the quarter hull with trapezoid weights.
    fn offset_integral(&self) -> T {
        let wx = self.grid.x_weights();
        let wz = self.grid.z_weights();
        let nz = self.grid.nz();
        let mut acc = T::zero();
        for (i, &wi) in wx.iter().enumerate() {
            let row = &self.y[i * nz..(i + 1) * nz];
            let s: T = row.iter().zip(&wz).map(|(&y, &w)| y * w).sum();
            acc = acc + wi * s;
        }
        acc
    }
}

/// Converts a gridded hull to its `(y, z)` point cloud with `z = -d ζ_j`.
pub fn to_point_cloud<T: Real>(h: &HullGrid<T>) -> HullPointCloud<T> {
    let nz = h.grid.nz();
    let points = h
        .y
        .iter()
        .enumerate()
        .map(|(k, &y)| (y, -h.draft_nominal * h.grid.z_stations()[k % nz]))
        .collect();
    HullPointCloud { points, length: h.length }
}

/// Rebuilds a gridded hull from a point cloud.
///
/// The draft is the deepest point (`-min z`). Within each station column the
/// points are ranked by depth and assigned to `ζ_1..ζ_n` in that order; the
/// `y` values are kept as emitted (no re-interpolation). Negative half
/// breadths are clipped to zero since the surface cannot cross the
/// centerplane.
pub fn from_point_cloud<T: Real>(c: &HullPointCloud<T>, grid: &GridSpec<T>) -> Result<HullGrid<T>> {
    if c.points.len() != grid.len() {
        return Err(Error::Shape(format!(
            "point cloud has {} points, grid needs {}",
            c.points.len(),
            grid.len()
        )));
    }
    let (beam, draft) = measured_dimensions(c)?;
    let nz = grid.nz();
    let mut y = Vec::with_capacity(grid.len());
    let mut column: Vec<(T, T)> = Vec::with_capacity(nz);
    for chunk in c.points.chunks(nz) {
        column.clear();
        column.extend_from_slice(chunk);
        // shallowest first; stable so ties keep emission order
        column.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        y.extend(column.iter().map(|&(v, _)| v.max(T::zero())));
    }
    Ok(HullGrid {
        grid: grid.clone(),
        y,
        length: c.length,
        beam_nominal: beam,
        draft_nominal: draft,
    })
}

impl<T: Real> HullPointCloud<T> {
    /// Flattens to `[y0, z0, y1, z1, ...]`.
    pub fn to_flat(&self) -> Vec<T> {
        self.points.iter().flat_map(|&(y, z)| [y, z]).collect()
    }

    /// Inverse of [`to_flat`](Self::to_flat); the length must match the grid.
    pub fn from_flat(flat: &[T], length: T, grid: &GridSpec<T>) -> Result<Self> {
        if flat.len() != grid.flat_len() {
            return Err(Error::Shape(format!(
                "flat hull vector has length {}, expected {}",
                flat.len(),
                grid.flat_len()
            )));
        }
        let points = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        Ok(Self { points, length })
    }
}

/// Beam and draft measured from the cloud: `(2 max y, -min z)`.
pub fn measured_dimensions<T: Real>(c: &HullPointCloud<T>) -> Result<(T, T)> {
    if c.points.is_empty() {
        return Err(Error::DegenerateHull("empty point cloud".into()));
    }
    if c.points.iter().any(|&(y, z)| !y.is_finite() || !z.is_finite()) {
        return Err(Error::DegenerateHull("non-finite coordinate".into()));
    }
    let max_y = c.points.iter().fold(T::neg_infinity(), |m, &(y, _)| m.max(y));
    let min_z = c.points.iter().fold(T::infinity(), |m, &(_, z)| m.min(z));
    let beam = T::lit(2.0) * max_y;
    let draft = -min_z;
    if !(beam > T::zero()) || !(draft > T::zero()) {
        return Err(Error::DegenerateHull(format!("beam {beam}, draft {draft}")));
    }
    Ok((beam, draft))
}

/// Displaced volume `∇ = 2 · 2 · ∫₀^{L/2} ∫_{-d}^{0} y dx dz` [m³].
pub fn displacement_volume<T: Real>(h: &HullGrid<T>) -> Result<T> {
    h.check()?;
    // x = ξ L/2, z = ζ d; four mirrored quarters.
    Ok(T::lit(2.0) * h.length * h.draft_nominal * h.offset_integral())
}

/// Coefficients of fineness recovered from offsets: `(Cb, Cm, Cw)`.
pub fn coefficients_from_grid<T: Real>(h: &HullGrid<T>) -> Result<(T, T, T)> {
    h.check()?;
    let half_beam = h.max_half_breadth();
    if !(half_beam > T::zero()) {
        return Err(Error::DegenerateHull("zero beam".into()));
    }
    let nz = h.grid.nz();
    let wx = h.grid.x_weights();
    let wz = h.grid.z_weights();
    // midship station is ξ = 0, the waterline is ζ = 0
    let waterline: T = wx.iter().enumerate().map(|(i, &w)| w * h.y[i * nz]).sum();
    let midship: T = wz.iter().enumerate().map(|(j, &w)| w * h.y[j]).sum();
    let cw = waterline / half_beam;
    let cm = midship / half_beam;
    let volume = displacement_volume(h)?;
    let cb = volume / (h.length * T::lit(2.0) * half_beam * h.draft_nominal);
    Ok((cb, cm, cw))
}
