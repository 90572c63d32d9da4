//! Validated coordinates on the open triangle `D2`, the open tetrahedron `D3`,
//! the closed triangle and the open probability simplex, plus deterministic
//! lattices over them.
//!
//! Every constructor rejects exactly the complement of its domain. The lattice
//! generators never touch the boundary: they work on the region shrunk by a
//! margin `h`, since the weights `(1 - x)^alpha` diverge there for negative
//! `alpha`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(p) - 1` accepted by [`SimplexPoint::new`].
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-12;

/// Default standoff from the boundary used by sweeps.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// The exponent of the equation. Any finite real except 1.
///
/// Operations that embody the hyperstability statement additionally need
/// `alpha < 0`; they call [`Alpha::require_negative`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain(format!("alpha must be finite, got {value}")));
        }
        if value == 1.0 {
            return Err(Error::domain("alpha must differ from 1"));
        }
        Ok(Alpha(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0.0
    }

    pub fn require_negative(self) -> Result<Self> {
        if self.0 < 0.0 {
            Ok(self)
        } else {
            Err(Error::domain(format!("this operation needs alpha < 0, got {}", self.0)))
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::domain(format!("{name} must exceed 0, got {v}")));
    }
    if v >= 1.0 {
        return Err(Error::domain(format!("{name} must be < 1, got {v}")));
    }
    Ok(())
}

/// A point of `D2 = {(x, y) : x, y, x + y in (0, 1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct D2Point {
    x: f64,
    y: f64,
}

impl D2Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        check_open_unit("x", x)?;
        check_open_unit("y", y)?;
        if x + y >= 1.0 {
            return Err(Error::domain(format!("x+y must be < 1, got {}", x + y)));
        }
        Ok(D2Point { x, y })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    /// The same point with coordinates exchanged; `D2` is symmetric.
    pub fn swapped(&self) -> D2Point {
        D2Point { x: self.y, y: self.x }
    }

    /// Smallest distance to the three boundary lines.
    pub fn margin(&self) -> f64 {
        self.x.min(self.y).min(1.0 - (self.x + self.y))
    }
}

/// A point of `D3 = {(x, y, z) : x, y, z, x + y + z in (0, 1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct D3Point {
    x: f64,
    y: f64,
    z: f64,
}

impl D3Point {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        check_open_unit("x", x)?;
        check_open_unit("y", y)?;
        check_open_unit("z", z)?;
        if x + y + z >= 1.0 {
            return Err(Error::domain(format!("x+y+z must be < 1, got {}", x + y + z)));
        }
        Ok(D3Point { x, y, z })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }
}

/// A point of the closed triangle `{(x, y) : x, y in [0, 1), x + y <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedD2Point {
    x: f64,
    y: f64,
}

impl ClosedD2Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y)] {
            check_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
            if v >= 1.0 {
                return Err(Error::domain(format!("{name} must be < 1, got {v}")));
            }
        }
        if x + y > 1.0 {
            return Err(Error::domain(format!("x+y must be <= 1, got {}", x + y)));
        }
        Ok(ClosedD2Point { x, y })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
}

impl From<D2Point> for ClosedD2Point {
    fn from(p: D2Point) -> Self {
        ClosedD2Point { x: p.x, y: p.y }
    }
}

/// A point of the open probability simplex with `n >= 2` coordinates.
///
/// The input sum is checked against 1 to within [`SIMPLEX_SUM_TOLERANCE`] and
/// the stored coordinates are renormalized by it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    p: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::domain(format!(
                "a distribution needs at least 2 entries, got {}",
                p.len()
            )));
        }
        for (i, &v) in p.iter().enumerate() {
            check_open_unit(&format!("p[{}]", i + 1), v)?;
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            return Err(Error::domain(format!("probabilities must sum to 1, got {sum}")));
        }
        let p = p.into_iter().map(|v| v / sum).collect();
        Ok(SimplexPoint { p })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!(
                "a distribution needs at least 2 entries, got {n}"
            )));
        }
        Ok(SimplexPoint {
            p: vec![1.0 / n as f64; n],
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }
}

/// Resolution `m` and boundary margin `h` of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    resolution: usize,
    margin: f64,
}

impl GridSpec {
    pub fn new(resolution: usize, margin: f64) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::invalid("grid resolution must be positive"));
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::invalid(format!(
                "grid margin must lie in (0, 0.5), got {margin}"
            )));
        }
        Ok(GridSpec { resolution, margin })
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn margin(&self) -> f64 {
        self.margin
    }
}

/// Lattice over the triangle `{x >= h, y >= h, 1 - (x + y) >= h}`.
///
/// Nodes are `(h + a*s, h + b*s)` for `a, b >= 0`, `a + b <= m - 2`, with
/// `s = (1 - 3h) / (m - 2)`; so the three corners of the shrunk triangle are
/// always nodes and there are `m(m - 1)/2` of them. Points are emitted with
/// `a` as the outer loop.
pub fn grid_d2(spec: &GridSpec) -> Result<Vec<D2Point>> {
    let m = spec.resolution();
    let h = spec.margin();
    let side = 1.0 - 3.0 * h;
    if m < 2 || side < 0.0 {
        return Err(Error::EmptyGrid(format!(
            "no lattice point with margin {h} at resolution {m}"
        )));
    }
    let steps = m - 2;
    let step = if steps == 0 || side == 0.0 {
        0.0
    } else {
        side / steps as f64
    };
    let steps = if step == 0.0 { 0 } else { steps };

    let mut out = Vec::with_capacity((steps + 1) * (steps + 2) / 2);
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            let mut c = [h + step * a as f64, h + step * b as f64];
            while 1.0 - (c[0] + c[1]) < h {
                shrink_largest(&mut c);
            }
            out.push(D2Point::new(c[0], c[1])?);
        }
    }
    Ok(out)
}

/// Lattice over `{x, y, z >= h, 1 - (x + y + z) >= h}`; same rule as [`grid_d2`]
/// with `s = (1 - 4h) / (m - 2)` and `a + b + c <= m - 2`.
pub fn grid_d3(spec: &GridSpec) -> Result<Vec<D3Point>> {
    let m = spec.resolution();
    let h = spec.margin();
    let side = 1.0 - 4.0 * h;
    if m < 2 || side < 0.0 {
        return Err(Error::EmptyGrid(format!(
            "no lattice point with margin {h} at resolution {m}"
        )));
    }
    let steps = m - 2;
    let step = if steps == 0 || side == 0.0 {
        0.0
    } else {
        side / steps as f64
    };
    let steps = if step == 0.0 { 0 } else { steps };

    let mut out = Vec::new();
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            for c in 0..=(steps - a - b) {
                let mut q = [h + step * a as f64, h + step * b as f64, h + step * c as f64];
                while 1.0 - (q[0] + q[1] + q[2]) < h {
                    shrink_largest(&mut q);
                }
                out.push(D3Point::new(q[0], q[1], q[2])?);
            }
        }
    }
    Ok(out)
}

/// Rounding can put a node on the far face a few ulps outside the margin;
/// pulling in the largest coordinate never violates the other margins.
fn shrink_largest(c: &mut [f64]) {
    let i = (0..c.len()).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap_or(0);
    c[i] = c[i].next_down();
}

/// `m` equally spaced abscissae on `[h, 1 - h]`, used as sample sites for fits.
pub fn grid_1d(spec: &GridSpec) -> Result<Vec<f64>> {
    let m = spec.resolution();
    let h = spec.margin();
    if m < 2 {
        return Err(Error::EmptyGrid(format!(
            "a 1-d sample grid needs at least 2 nodes, got {m}"
        )));
    }
    let width = 1.0 - 2.0 * h;
    Ok((0..m).map(|i| h + width * i as f64 / (m - 1) as f64).collect())
}

/// All lattice points `(k1/m, ..., kn/m)` with every `ki >= 1` and `sum ki = m`,
/// in lexicographic order of `(k1, ..., kn)`.
pub fn grid_simplex(n: usize, m: usize) -> Result<Vec<SimplexPoint>> {
    if n < 2 {
        return Err(Error::invalid(format!("simplex dimension must be at least 2, got {n}")));
    }
    if m < n {
        return Err(Error::EmptyGrid(format!(
            "no positive composition of {m} into {n} parts"
        )));
    }
    let mut out = Vec::new();
    let mut parts = vec![0usize; n];
    compositions(&mut parts, 0, m, &mut |k| {
        let p = k.iter().map(|&ki| ki as f64 / m as f64).collect();
        out.push(SimplexPoint::new(p).expect("lattice compositions are interior"));
    });
    Ok(out)
}

fn compositions(parts: &mut [usize], idx: usize, remaining: usize, emit: &mut impl FnMut(&[usize])) {
    let n = parts.len();
    if idx == n - 1 {
        parts[idx] = remaining;
        emit(parts);
        return;
    }
    let slots_after = n - idx - 1;
    for k in 1..=(remaining - slots_after) {
        parts[idx] = k;
        compositions(parts, idx + 1, remaining - k, emit);
    }
}

/// Both sides of `z / (1 - (x + y)) = (z / (1 - x)) / (1 - y / (1 - x))`,
/// each computed along its own route.
///
/// The subtractions from 1 cancel badly near the far face, so each side is
/// evaluated in double-double and rounded once at the end.
pub fn nested_coords(q: &D3Point) -> (f64, f64) {
    let one = Dd::from(1.0);
    let direct = Dd::from(q.z).div(one.sub(Dd::from(q.x).add(Dd::from(q.y))));
    let rest_x = one.sub(Dd::from(q.x));
    let inner_y = Dd::from(q.y).div(rest_x);
    let inner_z = Dd::from(q.z).div(rest_x);
    let nested = inner_z.div(one.sub(inner_y));
    (direct.hi, nested.hi)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Dd {
    fn norm((hi, lo): (f64, f64)) -> Self {
        Dd { hi, lo }
    }

    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::norm(quick_two_sum(s1, s2 + t2))
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        Dd::norm(quick_two_sum(p, e))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        Dd::norm(quick_two_sum(q1, q2)).add(Dd::from(q3))
    }
}

/// Uniform sample from `D2` with every boundary distance at least `margin`.
pub fn sample_d2<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> D2Point {
    loop {
        let x: f64 = rng.gen_range(margin..1.0 - margin);
        let y: f64 = rng.gen_range(margin..1.0 - margin);
        if 1.0 - (x + y) >= margin {
            if let Ok(p) = D2Point::new(x, y) {
                return p;
            }
        }
    }
}

/// Uniform sample from `D3` with every boundary distance at least `margin`.
pub fn sample_d3<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> D3Point {
    loop {
        let x: f64 = rng.gen_range(margin..1.0 - margin);
        let y: f64 = rng.gen_range(margin..1.0 - margin);
        let z: f64 = rng.gen_range(margin..1.0 - margin);
        if 1.0 - (x + y + z) >= margin {
            if let Ok(q) = D3Point::new(x, y, z) {
                return q;
            }
        }
    }
}
