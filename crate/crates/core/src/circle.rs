//! Functions on the unit circle sampled on a uniform grid.
//!
//! Nodes are `t_k = 2πk/n − π` for `k = 0..n`, so node 0 sits at `−π`
//! (identified with `π`) and the grid covers the circle exactly once.
//! All norms and measures are taken with respect to the normalized
//! measure `dt/2π`, which on the grid is the plain node average.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest imaginary residue (relative to the sample scale) that
/// [`synthesize`] silently drops.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// A uniform grid of `n` nodes on the circle; `n` is a power of two, `n >= 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleGrid {
    n: usize,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid { n });
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `2π/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n as f64 - PI
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.node(k))
    }

    /// Index of the node at angle `t` (taken modulo 2π), if `t` is a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let pos = (t + PI) / self.spacing();
        let k = pos.round();
        if (pos - k).abs() > 1e-9 {
            return None;
        }
        Some((k as i64).rem_euclid(self.n as i64) as usize)
    }

    /// Circular distance between node `k` and angle `t`.
    pub fn distance_to(&self, k: usize, t: f64) -> f64 {
        angular_distance(self.node(k), t)
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Signed offset `a − b` reduced to `(−π, π]`.
pub fn angular_offset(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Real samples of a function on a [`CircleGrid`]. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl CircleFunction {
    pub fn new(grid: CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(t_k)` on every node.
    pub fn from_fn(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: CircleGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `a·self + b·other`; both functions must share a grid.
    pub fn linear_combination(&self, a: f64, other: &CircleFunction, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                actual: other.grid.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.grid, values)
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `self − mean(self)`.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }
}

/// Discrete Fourier coefficients `c_m`, `−n/2 < m ≤ n/2`, stored in FFT order
/// (index `m` for `m ≥ 0`, index `n + m` for `m < 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn from_fft_order(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn slot(&self, m: i64) -> Option<usize> {
        let n = self.coeffs.len() as i64;
        if m <= -n / 2 || m > n / 2 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    /// Coefficient at frequency `m`; zero outside the represented band.
    pub fn get(&self, m: i64) -> Complex64 {
        self.slot(m)
            .map(|i| self.coeffs[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set(&mut self, m: i64, value: Complex64) -> Result<()> {
        let i = self
            .slot(m)
            .ok_or_else(|| domain(format!("frequency {m} outside band of {}", self.len())))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Signed frequency of FFT slot `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        let n = self.coeffs.len();
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn as_fft_order(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Equal-weight discrete Fourier coefficients
/// `c_m = (1/n) Σ_k f(t_k) e^{−i m t_k}`.
pub fn analyze(f: &CircleFunction) -> SpectralCoeffs {
    let n = f.grid.len();
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // e^{−i m t_k} = (−1)^m e^{−2πi mk/n}
    let scale = 1.0 / n as f64;
    for (i, c) in buf.iter_mut().enumerate() {
        let sign = if i % 2 == 0 { scale } else { -scale };
        *c *= sign;
    }
    SpectralCoeffs { coeffs: buf }
}

/// Inverse of [`analyze`]. Fails with [`Error::NonRealResult`] if the
/// reconstruction carries an imaginary part above [`IMAG_RESIDUE_TOL`].
pub fn synthesize(s: &SpectralCoeffs, grid: CircleGrid) -> Result<CircleFunction> {
    let n = grid.len();
    if s.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: s.len(),
        });
    }
    let mut buf: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = buf.iter().fold(1.0_f64, |m, c| m.max(c.re.abs()));
    let residue = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::NonRealResult { residue });
    }
    CircleFunction::new(grid, buf.into_iter().map(|c| c.re).collect())
}

/// Conjugate function via the multiplier `c_m ↦ −i·sgn(m)·c_m`.
///
/// The Nyquist mode `m = n/2` is sent to zero: `sin(n t/2)` vanishes on
/// every node, so the grid cannot carry its conjugate.
pub fn hilbert_multiplier(f: &CircleFunction) -> CircleFunction {
    let mut s = analyze(f);
    let n = s.len();
    for i in 0..n {
        let m = s.frequency(i);
        s.coeffs[i] = if m == 0 || i == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            let sgn = m.signum() as f64;
            s.coeffs[i] * Complex64::new(0.0, -sgn)
        };
    }
    synthesize(&s, f.grid).expect("conjugate multiplier preserves real symmetry")
}

/// Principal-value sum of `(1/2π) p.v.∫ f(s) cot((t−s)/2) ds` at the node `t`.
///
/// The singular node is omitted and the remaining nodes are paired
/// symmetrically about `t`, `(f(t−mh) − f(t+mh))·cot(mh/2)`. Only odd
/// offsets `m` enter, with weight `2/n`: this is the midpoint rule for the
/// smooth even integrand on the doubled grid, exact for trigonometric
/// polynomials of degree `< n/2`. Including even offsets leaves an `O(1/n)`
/// error `−h f′(t)/π` from the dropped diagonal term.
pub fn hilbert_pv_direct(f: &CircleFunction, t: f64) -> Result<f64> {
    let grid = f.grid;
    let j = grid
        .node_index(t)
        .ok_or_else(|| domain(format!("angle {t} is not a grid node")))?;
    Ok(pv_sum_at(f, j))
}

/// Same sum as [`hilbert_pv_direct`] addressed by node index.
pub fn pv_sum_at(f: &CircleFunction, j: usize) -> f64 {
    let n = f.grid.len();
    let h = f.grid.spacing();
    let v = &f.values;
    let mut acc = 0.0;
    for m in (1..n / 2).step_by(2) {
        let left = v[(j + n - m) % n];
        let right = v[(j + m) % n];
        acc += (left - right) / (0.5 * m as f64 * h).tan();
    }
    2.0 * acc / n as f64
}

/// `((1/n) Σ |f(t_k)|^p)^{1/p}` for `p ∈ [1, 2]`.
pub fn norm_p(f: &CircleFunction, p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(domain(format!("norm exponent {p} outside [1, 2]")));
    }
    let n = f.values.len() as f64;
    let mean = if p == 1.0 {
        f.values.iter().map(|v| v.abs()).sum::<f64>() / n
    } else if p == 2.0 {
        f.values.iter().map(|v| v * v).sum::<f64>() / n
    } else {
        f.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n
    };
    Ok(mean.powf(1.0 / p))
}

/// Fraction of nodes with `f(t_k) ≥ level`.
pub fn superlevel_measure(f: &CircleFunction, level: f64) -> f64 {
    let count = f.values.iter().filter(|&&v| v >= level).count();
    count as f64 / f.values.len() as f64
}

#[derive(Serialize, Deserialize)]
struct JsonCircleFunction {
    n: usize,
    values: Vec<f64>,
}

/// Writes `t,value` CSV, one row per node.
pub fn write_csv<W: Write>(f: &CircleFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for (k, v) in f.values.iter().enumerate() {
        w.write_record([f.grid.node(k).to_string(), v.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t,value` CSV. Row `k` must carry node `t_k`; the row count must be
/// a valid grid size.
pub fn read_csv<R: Read>(input: R) -> Result<CircleFunction> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || headers[0].trim() != "t" || headers[1].trim() != "value" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `t,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("bad {name} `{field}`: {e}"),
            })
        };
        ts.push((line, parse(&record[0], "t")?));
        values.push(parse(&record[1], "value")?);
    }
    let grid = CircleGrid::new(values.len()).map_err(|_| Error::Parse {
        line: ts.last().map(|(l, _)| *l).unwrap_or(1),
        message: format!("row count {} is not a power of two >= 8", values.len()),
    })?;
    for (k, &(line, t)) in ts.iter().enumerate() {
        if angular_distance(grid.node(k), t) > 1e-9 * grid.spacing().max(1.0) {
            return Err(Error::Parse {
                line,
                message: format!("t = {t} does not match grid node {}", grid.node(k)),
            });
        }
    }
    CircleFunction::new(grid, values).map_err(|e| match e {
        Error::NonFinite { index, value } => Error::Parse {
            line: ts[index].0,
            message: format!("non-finite value {value}"),
        },
        other => other,
    })
}

pub fn write_json<W: Write>(f: &CircleFunction, out: W) -> Result<()> {
    let doc = JsonCircleFunction {
        n: f.grid.len(),
        values: f.values.clone(),
    };
    serde_json::to_writer(out, &doc)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<CircleFunction> {
    let doc: JsonCircleFunction = serde_json::from_reader(input)?;
    let grid = CircleGrid::new(doc.n)?;
    CircleFunction::new(grid, doc.values)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> CircleGrid {
        CircleGrid::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(CircleGrid::new(4).is_err());
        assert!(CircleGrid::new(12).is_err());
        assert!(CircleGrid::new(0).is_err());
        assert!(CircleGrid::new(8).is_ok());
    }

    #[test]
    fn grid_covers_circle_once() {
        let g = grid(16);
        assert_abs_diff_eq!(g.node(0), -PI);
        assert!(g.node(15) < PI);
        assert_eq!(g.node_index(PI), Some(0));
        assert_eq!(g.node_index(PI / 2.0), Some(12));
        assert_eq!(g.node_index(0.1), None);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = grid(8);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(CircleFunction::new(g, v), Err(Error::NonFinite { index: 3, .. })));
        assert!(matches!(
            CircleFunction::new(g, vec![0.0; 7]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn analyze_constant() {
        let f = CircleFunction::constant(grid(16), 1.0).unwrap();
        let s = analyze(&f);
        assert_abs_diff_eq!(s.get(0).re, 1.0, epsilon = 1e-15);
        for m in -7..=8 {
            if m != 0 {
                assert!(s.get(m).norm() < 1e-15, "m = {m}");
            }
        }
    }

    #[test]
    fn analyze_cos3() {
        let f = CircleFunction::from_fn(grid(64), |t| (3.0 * t).cos()).unwrap();
        let s = analyze(&f);
        for m in -31..=32 {
            let expect = if m == 3 || m == -3 { 0.5 } else { 0.0 };
            assert!((s.get(m) - Complex64::new(expect, 0.0)).norm() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn synthesize_basis() {
        let g = grid(32);
        let mut s = SpectralCoeffs::zeros(32);
        s.set(0, Complex64::new(1.0, 0.0)).unwrap();
        let f = synthesize(&s, g).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-15));

        let mut s = SpectralCoeffs::zeros(32);
        s.set(1, Complex64::new(0.5, 0.0)).unwrap();
        s.set(-1, Complex64::new(0.5, 0.0)).unwrap();
        let f = synthesize(&s, g).unwrap();
        for (k, v) in f.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, g.node(k).cos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn synthesize_flags_broken_symmetry() {
        let mut s = SpectralCoeffs::zeros(16);
        s.set(2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(synthesize(&s, grid(16)), Err(Error::NonRealResult { .. })));
        assert!(matches!(synthesize(&s, grid(32)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn multiplier_basic_identities() {
        let g = grid(128);
        let f = CircleFunction::from_fn(g, f64::cos).unwrap();
        let h = hilbert_multiplier(&f);
        for (k, v) in h.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, g.node(k).sin(), epsilon = 1e-13);
        }
        let f = CircleFunction::from_fn(g, |t| (5.0 * t).sin()).unwrap();
        let h = hilbert_multiplier(&f);
        for (k, v) in h.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, -(5.0 * g.node(k)).cos(), epsilon = 1e-13);
        }
        let c = CircleFunction::constant(g, 3.5).unwrap();
        assert!(hilbert_multiplier(&c).max_abs() < 1e-15);
    }

    #[test]
    fn pv_sum_constant_is_exactly_zero() {
        let g = grid(256);
        let f = CircleFunction::constant(g, 2.75).unwrap();
        for k in [0, 17, 128, 255] {
            assert_eq!(hilbert_pv_direct(&f, g.node(k)).unwrap(), 0.0);
        }
    }

    #[test]
    fn pv_sum_rejects_off_grid_angle() {
        let f = CircleFunction::constant(grid(16), 1.0).unwrap();
        assert!(hilbert_pv_direct(&f, 0.123).is_err());
    }

    #[test]
    fn norms() {
        let g = grid(4096);
        let one = CircleFunction::constant(g, 1.0).unwrap();
        assert_abs_diff_eq!(norm_p(&one, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let c = CircleFunction::from_fn(g, f64::cos).unwrap();
        assert_abs_diff_eq!(norm_p(&c, 2.0).unwrap(), 0.5_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(norm_p(&c, 1.0).unwrap(), 2.0 / PI, epsilon = 1e-6);
        assert!(norm_p(&c, 0.5).is_err());
        assert!(norm_p(&c, 3.0).is_err());
    }

    #[test]
    fn superlevel_measures() {
        let g = grid(64);
        let two = CircleFunction::constant(g, 2.0).unwrap();
        assert_eq!(superlevel_measure(&two, 1.0), 1.0);
        let zero = CircleFunction::constant(g, 0.0).unwrap();
        assert_eq!(superlevel_measure(&zero, 1.0), 0.0);
        // closed comparison: exactly-equal samples count
        assert_eq!(superlevel_measure(&zero, 0.0), 1.0);
        let s = CircleFunction::from_fn(g, f64::sin).unwrap();
        assert!((superlevel_measure(&s, 0.0) - 0.5).abs() <= 1.0 / 64.0);
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let g = grid(16);
        let f = CircleFunction::from_fn(g, |t| (t * 1.7).exp().sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let g = grid(32);
        let f = CircleFunction::from_fn(g, |t| (t * 0.3).tan() * 1e-7 + 1.0 / 3.0).unwrap();
        let mut buf = Vec::new();
        write_json(&f, &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_parse_error_names_row() {
        let g = grid(8);
        let f = CircleFunction::constant(g, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let broken: Vec<String> = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 4 { format!("{},abc", g.node(3)) } else { l.to_string() })
            .collect();
        let err = read_csv(broken.join("\n").as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_row_count() {
        assert!(matches!(read_csv("x,y\n0,1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let rows: String = (0..5).map(|k| format!("{},1\n", k)).collect();
        assert!(matches!(read_csv(format!("t,value\n{rows}").as_bytes()), Err(Error::Parse { .. })));
    }
}
