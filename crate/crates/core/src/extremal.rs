//! Boundary-function pairs `(f, g)` with `g` the conjugate of `f`, obtained as
//! the real part and `1 −` imaginary part of a conformal map from the disk
//! onto the slit half-plane (`L¹` case) or onto the strip (`L²` case).
//!
//! In both cases `{g = 1}` is the image of the positive half-line `(0, ∞)`
//! of an intermediate half-plane, so the arc endpoints are the circle
//! preimages of `0` and `∞`, which are also where `f` blows up.
//!
//! Boundary values are taken at the reflected point `r·e^{−it}`: with that
//! orientation `g` is the conjugate of `f` under the multiplier `−i·sgn(m)`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{
    angular_offset, hilbert_multiplier, norm_p, superlevel_measure, CircleFunction, CircleGrid,
};
use crate::conformal::{disk_to_slitdomain, disk_to_strip, halfplane_to_disk, SlitDomainSpec, StripSpec};
use crate::error::{domain, Result};
use crate::special::{e_closed, p_closed};

/// Smallest and largest admissible evaluation radius for the public builders.
pub const MIN_EVAL_RADIUS: f64 = 1.0 - 1e-3;
pub const MAX_EVAL_RADIUS: f64 = 1.0 - 1e-8;
pub const DEFAULT_EVAL_RADIUS: f64 = 1.0 - 1e-6;
/// Default level offset: `{g ≥ 1 − δ}` stands in for `{g ≥ 1}`.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Nodes within this many spacings of a singular angle are left out of the
/// refined norm and of pointwise comparisons.
pub const SINGULAR_EXCLUSION_NODES: usize = 16;
const FIT_NODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExtremalKind {
    P1Slit,
    P2Strip,
}

impl ExtremalKind {
    /// The `p` of the norm the pair is extremal for.
    pub fn exponent(&self) -> f64 {
        match self {
            ExtremalKind::P1Slit => 1.0,
            ExtremalKind::P2Strip => 2.0,
        }
    }
}

/// How the radial limit `r → 1⁻` is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadialLimit {
    /// The value at `r` itself.
    Direct,
    /// `2v(r) − v(2r − 1)`, cancelling the first-order term in `1 − r`.
    #[default]
    Richardson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalPair {
    f: CircleFunction,
    g: CircleFunction,
    c: f64,
    kind: ExtremalKind,
    eval_radius: f64,
    radial: RadialLimit,
    predicted_measure: f64,
    predicted_norm: f64,
    singular_angles: Vec<f64>,
}

/// Metadata written next to an exported pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSidecar {
    pub kind: ExtremalKind,
    pub c: f64,
    pub n: usize,
    pub eval_radius: f64,
    pub radial_limit: RadialLimit,
    pub predicted_measure: f64,
    pub predicted_norm: f64,
    pub singular_angles: Vec<f64>,
}

impl ExtremalPair {
    pub fn f(&self) -> &CircleFunction {
        &self.f
    }

    pub fn g(&self) -> &CircleFunction {
        &self.g
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kind(&self) -> ExtremalKind {
        self.kind
    }

    pub fn grid(&self) -> CircleGrid {
        self.f.grid()
    }

    pub fn eval_radius(&self) -> f64 {
        self.eval_radius
    }

    pub fn radial_limit(&self) -> RadialLimit {
        self.radial
    }

    /// Limit of `|{g ≥ 1}|/2π`.
    pub fn predicted_measure(&self) -> f64 {
        self.predicted_measure
    }

    /// Limit of `‖f‖_p`, `p` = [`ExtremalKind::exponent`].
    pub fn predicted_norm(&self) -> f64 {
        self.predicted_norm
    }

    /// Angles in `[−π, π)` where `f` is unbounded, sorted.
    pub fn singular_angles(&self) -> &[f64] {
        &self.singular_angles
    }

    pub fn sidecar(&self) -> PairSidecar {
        PairSidecar {
            kind: self.kind,
            c: self.c,
            n: self.grid().len(),
            eval_radius: self.eval_radius,
            radial_limit: self.radial,
            predicted_measure: self.predicted_measure,
            predicted_norm: self.predicted_norm,
            singular_angles: self.singular_angles.clone(),
        }
    }

    pub fn write_sidecar<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.sidecar())?;
        Ok(())
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(domain(format!("c = {c} outside (0, 1)")));
    }
    Ok(())
}

fn check_public_radius(r: f64) -> Result<()> {
    if !(MIN_EVAL_RADIUS..=MAX_EVAL_RADIUS).contains(&r) {
        return Err(domain(format!(
            "eval_radius {r} outside [1 − 1e−3, 1 − 1e−8]"
        )));
    }
    Ok(())
}

/// The slit-domain pair at `r = eval_radius`, Richardson radial limit.
pub fn build_p1(c: f64, grid: CircleGrid, eval_radius: f64) -> Result<ExtremalPair> {
    check_public_radius(eval_radius)?;
    build_at_radius(ExtremalKind::P1Slit, c, grid, eval_radius, RadialLimit::default())
}

/// The strip pair at `r = eval_radius`, Richardson radial limit.
pub fn build_p2(c: f64, grid: CircleGrid, eval_radius: f64) -> Result<ExtremalPair> {
    check_public_radius(eval_radius)?;
    build_at_radius(ExtremalKind::P2Strip, c, grid, eval_radius, RadialLimit::default())
}

fn boundary_map(kind: ExtremalKind, c: f64) -> Result<impl Fn(Complex64) -> Result<Complex64> + Sync> {
    check_c(c)?;
    let slit = SlitDomainSpec::new(c)?;
    let strip = StripSpec::new(c)?;
    Ok(move |zeta: Complex64| match kind {
        ExtremalKind::P1Slit => disk_to_slitdomain(zeta, slit),
        ExtremalKind::P2Strip => disk_to_strip(zeta, strip),
    })
}

/// Samples the pair on the circle of radius `r ∈ (0, 1 − 1e−8]`. For
/// Richardson extrapolation the second radius `2r − 1` must stay positive.
pub fn build_at_radius(
    kind: ExtremalKind,
    c: f64,
    grid: CircleGrid,
    r: f64,
    radial: RadialLimit,
) -> Result<ExtremalPair> {
    if !(r > 0.0 && r <= MAX_EVAL_RADIUS) {
        return Err(domain(format!("radius {r} outside (0, 1 − 1e−8]")));
    }
    let inner = 2.0 * r - 1.0;
    if radial == RadialLimit::Richardson && inner <= 0.0 {
        return Err(domain(format!("Richardson needs r > 1/2, got {r}")));
    }
    let map = boundary_map(kind, c)?;
    let sample = |t: f64, rho: f64| -> Result<(f64, f64)> {
        let w = map(Complex64::from_polar(rho, -t))?;
        Ok((w.re, 1.0 - w.im))
    };
    let values: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let t = grid.node(k);
            let outer = sample(t, r)?;
            match radial {
                RadialLimit::Direct => Ok(outer),
                RadialLimit::Richardson => {
                    let inner = sample(t, inner)?;
                    Ok((2.0 * outer.0 - inner.0, 2.0 * outer.1 - inner.1))
                }
            }
        })
        .collect::<Result<_>>()?;
    let (fv, gv): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let (predicted_measure, predicted_norm) = predictions(kind, c)?;
    Ok(ExtremalPair {
        f: CircleFunction::new(grid, fv)?,
        g: CircleFunction::new(grid, gv)?,
        c,
        kind,
        eval_radius: r,
        radial,
        predicted_measure,
        predicted_norm,
        singular_angles: singular_angles(kind, c)?,
    })
}

/// `(measure, norm)` limits: `(P(c), E(c))` for the slit, `(1 − c, √((1 − c)/c))`
/// for the strip.
pub fn predictions(kind: ExtremalKind, c: f64) -> Result<(f64, f64)> {
    check_c(c)?;
    Ok(match kind {
        ExtremalKind::P1Slit => (p_closed(c)?, e_closed(c)?),
        ExtremalKind::P2Strip => (1.0 - c, ((1.0 - c) / c).sqrt()),
    })
}

/// Circle points `ζ` over the intermediate half-plane points `0`, `∞` and `1`.
fn halfplane_preimages(kind: ExtremalKind, c: f64) -> Result<[Complex64; 3]> {
    check_c(c)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(match kind {
        ExtremalKind::P1Slit => [
            halfplane_to_disk(zero, c)?,
            Complex64::new(0.0, -1.0),
            halfplane_to_disk(one, c)?,
        ],
        ExtremalKind::P2Strip => {
            let a = Complex64::from_polar(1.0, PI * c);
            [a / a.conj(), one, (one - a) / (one - a.conj())]
        }
    })
}

fn boundary_angle(zeta: Complex64) -> f64 {
    // boundary values are read at e^{−it}
    (-zeta.arg() + PI).rem_euclid(TAU) - PI
}

/// The two angles where `f` is unbounded, sorted, in `[−π, π)`.
pub fn singular_angles(kind: ExtremalKind, c: f64) -> Result<Vec<f64>> {
    let [zero, inf, _] = halfplane_preimages(kind, c)?;
    let mut v = vec![boundary_angle(zero), boundary_angle(inf)];
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// The singular angles of a pair.
pub fn locate_singularities(pair: &ExtremalPair) -> Vec<f64> {
    pair.singular_angles.clone()
}

/// Centres of the runs of consecutive nodes (cyclically) where `|f| > cap`;
/// each centre is the node of largest `|f|` in its run.
pub fn cap_clusters(f: &CircleFunction, cap: f64) -> Vec<f64> {
    let v = f.values();
    let n = v.len();
    let over: Vec<bool> = v.iter().map(|x| x.abs() > cap).collect();
    if !over.iter().any(|&b| b) {
        return Vec::new();
    }
    if over.iter().all(|&b| b) {
        let k = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
        return vec![f.grid().node(k)];
    }
    // start scanning right after a node that is below the cap
    let start = (0..n).find(|&k| !over[k]).unwrap();
    let mut centres = Vec::new();
    let mut best: Option<usize> = None;
    for step in 1..=n {
        let k = (start + step) % n;
        if over[k] {
            best = match best {
                Some(b) if v[b].abs() >= v[k].abs() => Some(b),
                _ => Some(k),
            };
        } else if let Some(b) = best.take() {
            centres.push(f.grid().node(b));
        }
    }
    centres.sort_by(f64::total_cmp);
    centres
}

/// Exact `|{g = 1}|/2π` of the limiting pair: the length of the arc between
/// the preimages of `0` and `∞` that contains the preimage of `1`.
pub fn exact_arc_measure(kind: ExtremalKind, c: f64) -> Result<f64> {
    let [zero, inf, one] = halfplane_preimages(kind, c)?;
    let (a, b, m) = (boundary_angle(zero), boundary_angle(inf), boundary_angle(one));
    let len = (b - a).rem_euclid(TAU);
    let inside = (m - a).rem_euclid(TAU) < len;
    Ok(if inside { len / TAU } else { 1.0 - len / TAU })
}

/// `|{g ≥ 1 − δ}|/2π` on the grid.
pub fn sampled_measure(pair: &ExtremalPair, delta: f64) -> f64 {
    superlevel_measure(&pair.g, 1.0 - delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub p: f64,
    /// Plain node average `‖f‖_p`.
    pub plain: f64,
    /// Node average with the nodes next to each singular angle replaced by
    /// the integral of a fitted local model.
    pub refined: f64,
}

/// Least-squares fit of `y ≈ a·φ + b`.
fn fit_line(phi: &[f64], y: &[f64]) -> (f64, f64) {
    let n = phi.len() as f64;
    let (sx, sy) = (phi.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = phi.iter().map(|x| x * x).sum();
    let sxy: f64 = phi.iter().zip(y).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (0.0, sy / n);
    }
    let a = (n * sxy - sx * sy) / det;
    (a, (sy - a * sx) / n)
}

/// `‖f‖_p` for the pair's own `p`, plain and refined.
///
/// Near each singular angle `|f| ≈ a·δ^{−1/2} + b` (slit) or
/// `f ≈ a·ln δ + b` (strip) in the distance `δ`, separately on either side.
/// The model is fitted on the 32 nodes beyond the 16 excluded ones and its
/// exact integral over the excluded cells replaces their node values.
pub fn norm_estimate(pair: &ExtremalPair) -> Result<NormEstimate> {
    let p = pair.kind.exponent();
    let plain = norm_p(&pair.f, p)?;
    let grid = pair.grid();
    let h = grid.spacing();
    let v = pair.f.values();
    let n = v.len();
    let inner = (SINGULAR_EXCLUSION_NODES as f64 + 0.5) * h;
    let outer = ((SINGULAR_EXCLUSION_NODES + FIT_NODES) as f64 + 0.5) * h;

    let mut excluded = vec![false; n];
    let mut tails = 0.0;
    for &theta in &pair.singular_angles {
        for side in [-1.0, 1.0] {
            let mut phi = Vec::new();
            let mut y = Vec::new();
            let mut nearest = f64::INFINITY;
            for k in 0..n {
                let o = angular_offset(grid.node(k), theta) * side;
                if o <= 0.0 && !(o == 0.0 && side > 0.0) {
                    continue;
                }
                if o <= inner {
                    excluded[k] = true;
                } else if o < outer {
                    nearest = nearest.min(o);
                    match pair.kind {
                        ExtremalKind::P1Slit => {
                            phi.push(o.powf(-0.5));
                            y.push(v[k].abs());
                        }
                        ExtremalKind::P2Strip => {
                            phi.push(o.ln());
                            y.push(v[k]);
                        }
                    }
                }
            }
            if phi.is_empty() {
                return Err(domain("grid too coarse for the singular-node fit"));
            }
            let (a, b) = fit_line(&phi, &y);
            let d = nearest - 0.5 * h;
            tails += match pair.kind {
                ExtremalKind::P1Slit => 2.0 * a * d.sqrt() + b * d,
                ExtremalKind::P2Strip => {
                    let l = d.ln();
                    a * a * d * (l * l - 2.0 * l + 2.0) + 2.0 * a * b * d * (l - 1.0) + b * b * d
                }
            };
        }
    }
    let kept: f64 = v
        .iter()
        .zip(&excluded)
        .filter(|(_, &e)| !e)
        .map(|(x, _)| if p == 1.0 { x.abs() } else { x * x })
        .sum();
    let integral = (kept * h + tails) / TAU;
    Ok(NormEstimate {
        p,
        plain,
        refined: integral.powf(1.0 / p),
    })
}

/// `max` and median of `|𝓗f − (g − mean g)|` over nodes farther than
/// `exclusion_nodes` spacings from every singular angle.
pub fn conjugacy_residual(pair: &ExtremalPair, exclusion_nodes: usize) -> (f64, f64) {
    let hf = hilbert_multiplier(&pair.f);
    let gc = pair.g.centered();
    let grid = pair.grid();
    let radius = exclusion_nodes as f64 * grid.spacing();
    let mut diffs: Vec<f64> = (0..grid.len())
        .filter(|&k| {
            pair.singular_angles
                .iter()
                .all(|&s| grid.distance_to(k, s) > radius)
        })
        .map(|k| (hf.values()[k] - gc.values()[k]).abs())
        .collect();
    if diffs.is_empty() {
        return (0.0, 0.0);
    }
    diffs.sort_by(f64::total_cmp);
    (diffs[diffs.len() - 1], diffs[diffs.len() / 2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub eval_radius: f64,
    pub radial_limit: RadialLimit,
    pub delta: f64,
    pub measure: f64,
    pub measure_error: f64,
    pub norm_plain: f64,
    pub norm_refined: f64,
    pub norm_error: f64,
}

/// Measured-vs-predicted rows for every `(n, r, radial limit)` combination.
/// `norm_error` refers to the refined norm.
pub fn convergence_table(
    kind: ExtremalKind,
    c: f64,
    sizes: &[usize],
    radii: &[f64],
    delta: f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        let grid = CircleGrid::new(n)?;
        for &r in radii {
            for radial in [RadialLimit::Direct, RadialLimit::Richardson] {
                let pair = build_at_radius(kind, c, grid, r, radial)?;
                let measure = sampled_measure(&pair, delta);
                let norm = norm_estimate(&pair)?;
                rows.push(ConvergenceRow {
                    n,
                    eval_radius: r,
                    radial_limit: radial,
                    delta,
                    measure,
                    measure_error: measure - pair.predicted_measure,
                    norm_plain: norm.plain,
                    norm_refined: norm.refined,
                    norm_error: norm.refined - pair.predicted_norm,
                });
            }
        }
    }
    Ok(rows)
}
