//! 1-periodic input currents.
//!
//! Three families are supported: trigonometric polynomials, piecewise-constant
//! step functions and uniformly sampled values with linear interpolation. The
//! first two have closed-form plain and exponentially weighted integrals; the
//! sampled family integrates its interpolant exactly and uses composite
//! Simpson quadrature for the weighted integral.
//!
//! Time arguments are absolute. Phases are obtained by subtracting the floor,
//! which is exact in floating point, so evaluation does not degrade along long
//! orbits.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const BOUNDS_GRID: usize = 4096;
const BOUNDS_TOL: f64 = 1e-10;
const SIMPSON_PANELS: usize = 4;

/// Splits `t` into `(floor, phase)` with `phase` in `[0, 1)`.
pub(crate) fn split(t: f64) -> (f64, f64) {
    let k = t.floor();
    let x = t - k;
    if x >= 1.0 {
        (k + 1.0, 0.0)
    } else {
        (k, x)
    }
}

#[inline]
fn phase(t: f64) -> f64 {
    split(t).1
}

/// One term `cos * cos(2 pi k t) + sin * sin(2 pi k t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

impl Harmonic {
    pub fn new(k: u32, cos: f64, sin: f64) -> Self {
        Harmonic { k, cos, sin }
    }

    fn omega(&self) -> f64 {
        TAU * f64::from(self.k)
    }

    /// `(cos(w t), sin(w t))` evaluated on the phase of `t`.
    fn trig_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = (self.omega() * phase(t)).sin_cos();
        (c, s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    a0: f64,
    harmonics: Vec<Harmonic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `prefix[i]` is the integral over `[0, breakpoints[i])`; one extra entry
    /// holds the full-period integral.
    prefix: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    values: Vec<f64>,
    prefix: Vec<f64>,
}

/// A 1-periodic input current.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicSignal {
    Trig(TrigPolynomial),
    Piecewise(PiecewiseConstant),
    Sampled(Sampled),
}

/// Essential bounds over one period: `lower = ess inf f - sigma` and
/// `upper = ess sup f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialBounds {
    pub lower: f64,
    pub upper: f64,
}

impl PeriodicSignal {
    pub fn constant(c: f64) -> Self {
        PeriodicSignal::Trig(TrigPolynomial {
            a0: c,
            harmonics: Vec::new(),
        })
    }

    pub fn trig(a0: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !a0.is_finite() {
            return Err(Error::InvalidSignal("non-finite constant term".into()));
        }
        for (i, h) in harmonics.iter().enumerate() {
            if h.k == 0 {
                return Err(Error::InvalidSignal("harmonic index must be >= 1".into()));
            }
            if !h.cos.is_finite() || !h.sin.is_finite() {
                return Err(Error::InvalidSignal(format!("non-finite coefficient for k={}", h.k)));
            }
            if harmonics[..i].iter().any(|o| o.k == h.k) {
                return Err(Error::InvalidSignal(format!("duplicate harmonic k={}", h.k)));
            }
        }
        Ok(PeriodicSignal::Trig(TrigPolynomial { a0, harmonics }))
    }

    /// Step function taking `values[i]` on `[breakpoints[i], breakpoints[i+1])`.
    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidSignal(
                "breakpoints and values must be non-empty and of equal length".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidSignal("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSignal("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.iter().any(|&b| !(0.0..1.0).contains(&b)) {
            return Err(Error::InvalidSignal("breakpoints must lie in [0, 1)".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite value".into()));
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for i in 0..values.len() {
            let end = breakpoints.get(i + 1).copied().unwrap_or(1.0);
            acc += values[i] * (end - breakpoints[i]);
            prefix.push(acc);
        }
        Ok(PeriodicSignal::Piecewise(PiecewiseConstant {
            breakpoints,
            values,
            prefix,
        }))
    }

    /// Values on the grid `j / m`, `j = 0..m`, linearly interpolated and
    /// wrapped periodically.
    pub fn sampled(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSignal("sampled signal needs at least 2 values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite sample".into()));
        }
        let m = values.len();
        let h = 1.0 / m as f64;
        let mut prefix = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for j in 0..m {
            acc += 0.5 * h * (values[j] + values[(j + 1) % m]);
            prefix.push(acc);
        }
        Ok(PeriodicSignal::Sampled(Sampled { values, prefix }))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PeriodicSignal::Trig(p) => p.eval(t),
            PeriodicSignal::Piecewise(p) => p.values[p.segment_of(phase(t))],
            PeriodicSignal::Sampled(s) => s.eval(t),
        }
    }

    /// Integral over one period.
    pub fn mean(&self) -> f64 {
        match self {
            PeriodicSignal::Trig(p) => p.a0,
            PeriodicSignal::Piecewise(p) => p.prefix[p.values.len()],
            PeriodicSignal::Sampled(s) => s.prefix[s.values.len()],
        }
    }

    /// `∫_a^b f(u) du`. Requires `a <= b`; reversed bounds give the negated value.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        match self {
            PeriodicSignal::Trig(p) => {
                let osc = |t: f64| {
                    p.harmonics
                        .iter()
                        .map(|h| {
                            let (c, s) = h.trig_at(t);
                            (h.cos * s - h.sin * c) / h.omega()
                        })
                        .sum::<f64>()
                };
                p.a0 * (b - a) + (osc(b) - osc(a))
            }
            _ => {
                // cumulative integral in the frame shifted by floor(a)
                let (base, xa) = split(a);
                let xb = b - base;
                let (kb, fb) = split(xb);
                let full = self.mean();
                kb * full + self.cumulative_in_period(fb) - self.cumulative_in_period(xa)
            }
        }
    }

    /// `∫_a^b [f(u) - sigma] e^{sigma u} du`.
    ///
    /// Overflows for `sigma * b` beyond ~709; the firing map works with
    /// [`PeriodicSignal::weighted_integral_rel`] instead.
    pub fn weighted_integral(&self, sigma: f64, a: f64, b: f64) -> f64 {
        if sigma == 0.0 {
            return self.integral(a, b);
        }
        (sigma * a).exp() * self.weighted_integral_rel(sigma, a, b)
    }

    /// `∫_a^b [f(u) - sigma] e^{sigma (u - a)} du`, the weighted integral
    /// normalized by `e^{sigma a}`.
    pub fn weighted_integral_rel(&self, sigma: f64, a: f64, b: f64) -> f64 {
        if sigma == 0.0 {
            return self.integral(a, b);
        }
        if a == b {
            return 0.0;
        }
        match self {
            PeriodicSignal::Trig(p) => p.weighted_rel(sigma, a, b),
            PeriodicSignal::Piecewise(p) => {
                let mut acc = 0.0;
                for (x0, x1, v) in p.segments(a).take_while(|s| s.0 < b) {
                    let x1 = x1.min(b);
                    acc += (v - sigma) * weight_rel(sigma, a, x0, x1);
                }
                acc
            }
            PeriodicSignal::Sampled(s) => s.weighted_rel(sigma, a, b),
        }
    }

    /// Derivative of a smooth signal; `None` for step functions.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            PeriodicSignal::Trig(p) => Some(p.derivative(t)),
            PeriodicSignal::Piecewise(_) => None,
            PeriodicSignal::Sampled(s) => Some(s.slope(t)),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            PeriodicSignal::Piecewise(p) => p.values.windows(2).all(|w| w[0] == w[1]),
            _ => true,
        }
    }

    /// True when `t` lies within `tol` (in phase) of a jump of a step function.
    pub fn jump_near(&self, t: f64, tol: f64) -> bool {
        let PeriodicSignal::Piecewise(p) = self else {
            return false;
        };
        let x = phase(t);
        let n = p.values.len();
        (0..n).any(|i| {
            let prev = p.values[(i + n - 1) % n];
            if prev == p.values[i] {
                return false;
            }
            let b = p.breakpoints[i];
            let d = (x - b).abs();
            d <= tol || (1.0 - d) <= tol
        })
    }

    /// Step-function segments starting at `t`, as `(start, end, value)` in
    /// absolute time. Empty for the other families.
    pub(crate) fn step_segments(&self, t: f64) -> Option<impl Iterator<Item = (f64, f64, f64)> + '_> {
        match self {
            PeriodicSignal::Piecewise(p) => Some(p.segments(t)),
            _ => None,
        }
    }

    pub fn essential_bounds(&self, sigma: f64) -> EssentialBounds {
        let (lo, hi) = match self {
            PeriodicSignal::Trig(p) => p.extrema(),
            PeriodicSignal::Piecewise(p) => min_max(&p.values),
            PeriodicSignal::Sampled(s) => min_max(&s.values),
        };
        EssentialBounds {
            lower: lo - sigma,
            upper: hi,
        }
    }

    fn cumulative_in_period(&self, x: f64) -> f64 {
        match self {
            PeriodicSignal::Trig(_) => self.integral(0.0, x),
            PeriodicSignal::Piecewise(p) => {
                let i = p.segment_of(x);
                p.prefix[i] + p.values[i] * (x - p.breakpoints[i])
            }
            PeriodicSignal::Sampled(s) => {
                let m = s.values.len();
                let h = 1.0 / m as f64;
                let (j, w) = s.cell(x);
                let v0 = s.values[j];
                let v1 = s.values[(j + 1) % m];
                s.prefix[j] + h * (v0 * w + 0.5 * (v1 - v0) * w * w)
            }
        }
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// `∫_{x0}^{x1} e^{sigma (u - a)} du` for `sigma > 0`.
fn weight_rel(sigma: f64, a: f64, x0: f64, x1: f64) -> f64 {
    (sigma * (x0 - a)).exp() * (sigma * (x1 - x0)).exp_m1() / sigma
}

impl TrigPolynomial {
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    fn eval(&self, t: f64) -> f64 {
        self.a0
            + self
                .harmonics
                .iter()
                .map(|h| {
                    let (c, s) = h.trig_at(t);
                    h.cos * c + h.sin * s
                })
                .sum::<f64>()
    }

    fn derivative(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| {
                let (c, s) = h.trig_at(t);
                h.omega() * (h.sin * c - h.cos * s)
            })
            .sum()
    }

    fn second_derivative(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| {
                let (c, s) = h.trig_at(t);
                -h.omega() * h.omega() * (h.cos * c + h.sin * s)
            })
            .sum()
    }

    fn weighted_rel(&self, sigma: f64, a: f64, b: f64) -> f64 {
        let growth = (sigma * (b - a)).exp();
        let mut acc = (self.a0 - sigma) * (sigma * (b - a)).exp_m1() / sigma;
        for h in &self.harmonics {
            let w = h.omega();
            let denom = sigma * sigma + w * w;
            let (ca, sa) = h.trig_at(a);
            let (cb, sb) = h.trig_at(b);
            // antiderivatives of e^{s u} cos(w u) and e^{s u} sin(w u)
            let cos_part = growth * (sigma * cb + w * sb) - (sigma * ca + w * sa);
            let sin_part = growth * (sigma * sb - w * cb) - (sigma * sa - w * ca);
            acc += (h.cos * cos_part + h.sin * sin_part) / denom;
        }
        acc
    }

    /// Global min and max over a period: grid scan, then Newton on `f'` from
    /// every local grid extremum.
    fn extrema(&self) -> (f64, f64) {
        if self.harmonics.is_empty() {
            return (self.a0, self.a0);
        }
        let n = BOUNDS_GRID;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| self.eval(i as f64 * h)).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            let v = vals[i];
            lo = lo.min(v);
            hi = hi.max(v);
            let is_min = v <= prev && v <= next;
            let is_max = v >= prev && v >= next;
            if is_min || is_max {
                let x = self.refine_critical(i as f64 * h, h);
                let fx = self.eval(x);
                if is_min {
                    lo = lo.min(fx);
                } else {
                    hi = hi.max(fx);
                }
            }
        }
        (lo, hi)
    }

    fn refine_critical(&self, x0: f64, h: f64) -> f64 {
        let mut x = x0;
        for _ in 0..50 {
            let d2 = self.second_derivative(x);
            if d2 == 0.0 {
                break;
            }
            let step = self.derivative(x) / d2;
            let next = x - step;
            if !next.is_finite() || (next - x0).abs() > h {
                return x0;
            }
            x = next;
            if step.abs() < BOUNDS_TOL * 1e-3 {
                break;
            }
        }
        x
    }
}

impl PiecewiseConstant {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment_of(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x) - 1
    }

    /// Infinite walk over segments from `t` onwards; the first segment is
    /// clipped to start at `t`.
    fn segments(&self, t: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (base, x) = split(t);
        let n = self.values.len();
        let first = self.segment_of(x);
        (0u64..).map(move |j| {
            let idx = first as u64 + j;
            let period = (idx / n as u64) as f64;
            let i = (idx % n as u64) as usize;
            let start = base + period + self.breakpoints[i];
            let end = base + period + self.breakpoints.get(i + 1).copied().unwrap_or(1.0);
            let start = if j == 0 { t } else { start };
            (start, end, self.values[i])
        })
    }
}

impl Sampled {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell index and fractional position within it.
    fn cell(&self, x: f64) -> (usize, f64) {
        let m = self.values.len();
        let y = x * m as f64;
        let j = (y.floor() as usize).min(m - 1);
        (j, y - j as f64)
    }

    fn eval(&self, t: f64) -> f64 {
        let m = self.values.len();
        let (j, w) = self.cell(phase(t));
        (1.0 - w) * self.values[j] + w * self.values[(j + 1) % m]
    }

    fn slope(&self, t: f64) -> f64 {
        let m = self.values.len();
        let (j, _) = self.cell(phase(t));
        (self.values[(j + 1) % m] - self.values[j]) * m as f64
    }

    fn weighted_rel(&self, sigma: f64, a: f64, b: f64) -> f64 {
        let m = self.values.len() as f64;
        let g = |u: f64| (self.eval(u) - sigma) * (sigma * (u - a)).exp();
        let mut acc = 0.0;
        let mut x0 = a;
        while x0 < b {
            // next grid node strictly after x0
            let next = ((x0 * m).floor() + 1.0) / m;
            let x1 = if next <= x0 { x0 + 1.0 / m } else { next }.min(b);
            acc += simpson(&g, x0, x1, SIMPSON_PANELS);
            x0 = x1;
        }
        acc
    }
}

fn simpson(g: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let x0 = a + i as f64 * h;
            let x1 = if i + 1 == panels { b } else { x0 + h };
            (x1 - x0) / 6.0 * (g(x0) + 4.0 * g(0.5 * (x0 + x1)) + g(x1))
        })
        .sum()
}

/// Textual signal description, as accepted by the CLI and config files:
///
/// - `const:<a0>`
/// - `trig:<a0>;<k>,<c>,<s>;...`
/// - `pwc:<b0>,<v0>;<b1>,<v1>;...`
/// - `sampled:<path-to-csv>` (single column of values)
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    Const(f64),
    Trig { a0: f64, harmonics: Vec<Harmonic> },
    Pwc(Vec<(f64, f64)>),
    Sampled(PathBuf),
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {:?}", s.trim())))
}

impl std::str::FromStr for SignalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing signal kind in {s:?}")))?;
        let parts = || body.split(';').map(str::trim).filter(|p| !p.is_empty());
        match kind.trim() {
            "const" => Ok(SignalSpec::Const(parse_f64(body)?)),
            "trig" => {
                let mut it = parts();
                let a0 = parse_f64(
                    it.next()
                        .ok_or_else(|| Error::Parse("trig signal needs a constant term".into()))?,
                )?;
                let harmonics = it
                    .map(|p| {
                        let f: Vec<&str> = p.split(',').collect();
                        if f.len() != 3 {
                            return Err(Error::Parse(format!("harmonic must be k,c,s: {p:?}")));
                        }
                        let k = f[0]
                            .trim()
                            .parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad harmonic index {:?}", f[0])))?;
                        Ok(Harmonic::new(k, parse_f64(f[1])?, parse_f64(f[2])?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SignalSpec::Trig { a0, harmonics })
            }
            "pwc" => {
                let pairs = parts()
                    .map(|p| {
                        let (b, v) = p
                            .split_once(',')
                            .ok_or_else(|| Error::Parse(format!("segment must be b,v: {p:?}")))?;
                        Ok((parse_f64(b)?, parse_f64(v)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if pairs.is_empty() {
                    return Err(Error::Parse("pwc signal needs at least one segment".into()));
                }
                Ok(SignalSpec::Pwc(pairs))
            }
            "sampled" => {
                let path = body.trim();
                if path.is_empty() {
                    return Err(Error::Parse("sampled signal needs a path".into()));
                }
                Ok(SignalSpec::Sampled(PathBuf::from(path)))
            }
            other => Err(Error::Parse(format!("unknown signal kind {other:?}"))),
        }
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::Const(c) => write!(f, "const:{c}"),
            SignalSpec::Trig { a0, harmonics } => {
                write!(f, "trig:{a0}")?;
                for h in harmonics {
                    write!(f, ";{},{},{}", h.k, h.cos, h.sin)?;
                }
                Ok(())
            }
            SignalSpec::Pwc(pairs) => {
                write!(f, "pwc:")?;
                for (i, (b, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{b},{v}")?;
                }
                Ok(())
            }
            SignalSpec::Sampled(p) => write!(f, "sampled:{}", p.display()),
        }
    }
}

impl SignalSpec {
    /// Builds the signal, reading the CSV file for sampled signals.
    pub fn build(&self) -> Result<PeriodicSignal> {
        match self {
            SignalSpec::Const(c) => PeriodicSignal::trig(*c, Vec::new()),
            SignalSpec::Trig { a0, harmonics } => PeriodicSignal::trig(*a0, harmonics.clone()),
            SignalSpec::Pwc(pairs) => {
                PeriodicSignal::piecewise(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
            }
            SignalSpec::Sampled(path) => PeriodicSignal::sampled(read_column(path)?),
        }
    }
}

/// Reads a single-column CSV of numbers. A non-numeric first line is treated
/// as a header.
pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "{}:{}: not a number: {cell:?}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}
