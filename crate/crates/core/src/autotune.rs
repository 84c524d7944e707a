//! Exhaustive search over the sample block edge `ell` and the CSoA group size
//! `alpha`, minimising the measured mean wall time per step.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Simulation;

/// Steps run and discarded before timing each candidate.
pub const DEFAULT_WARMUP: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneSpec {
    pub ell: Vec<usize>,
    pub alpha: Vec<usize>,
    pub n_steps: usize,
    pub warmup: usize,
}

impl TuneSpec {
    /// `ell` in `1..=l_m`, `alpha` in `2^1..=2^floor(log2 n_fluid)`.
    pub fn new(l_m: usize, n_fluid: usize, n_steps: usize) -> Self {
        TuneSpec {
            ell: (1..=l_m.max(1)).collect(),
            alpha: alpha_range(n_fluid),
            n_steps,
            warmup: DEFAULT_WARMUP,
        }
    }

    /// Spec for a simulation's own grid and solids. `L_m` is the smallest
    /// bounding-box edge over all solids, in cells.
    pub fn for_simulation(sim: &Simulation, n_steps: usize) -> Self {
        Self::new(l_m(sim), sim.dims().len(), n_steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell.is_empty() || self.alpha.is_empty() {
            return Err(Error::Tune("empty candidate range".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Tune("n_steps must be >= 1".into()));
        }
        if self.ell.contains(&0) || self.alpha.contains(&0) {
            return Err(Error::Tune("ell and alpha must be >= 1".into()));
        }
        Ok(())
    }

    pub fn candidates(&self) -> usize {
        self.ell.len() * self.alpha.len()
    }
}

/// Powers of two from 2 up to the largest not exceeding `n` (just `[1]` for
/// `n < 2`).
pub fn alpha_range(n: usize) -> Vec<usize> {
    if n < 2 {
        return vec![1];
    }
    let top = usize::BITS - 1 - n.leading_zeros();
    (1..=top).map(|e| 1usize << e).collect()
}

pub fn l_m(sim: &Simulation) -> usize {
    sim.solids.iter().map(|s| s.samples.min_edge_cells()).min().unwrap_or(1)
}

/// One measured grid point. `seconds` is `None` when the run diverged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub ell: usize,
    pub alpha: usize,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub spec: TuneSpec,
    pub table: Vec<Candidate>,
    pub best_ell: usize,
    pub best_alpha: usize,
    pub best_seconds: f64,
}

impl TuneReport {
    pub fn cost(&self, ell: usize, alpha: usize) -> Option<f64> {
        self.table
            .iter()
            .find(|c| c.ell == ell && c.alpha == alpha)
            .and_then(|c| c.seconds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

/// Visits every `(ell, alpha)` of `spec` in order and keeps the cheapest,
/// ties going to smaller `ell`, then smaller `alpha`.
pub fn search_with<F>(spec: &TuneSpec, mut cost: F) -> Result<TuneReport>
where
    F: FnMut(usize, usize) -> Option<f64>,
{
    spec.validate()?;
    let mut table = Vec::with_capacity(spec.candidates());
    for &ell in &spec.ell {
        for &alpha in &spec.alpha {
            let seconds = cost(ell, alpha).filter(|s| s.is_finite() && *s >= 0.0);
            table.push(Candidate { ell, alpha, seconds });
        }
    }
    let best = table
        .iter()
        .filter_map(|c| c.seconds.map(|s| (s, c.ell, c.alpha)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .ok_or_else(|| Error::Tune("every candidate diverged".into()))?;
    Ok(TuneReport {
        spec: spec.clone(),
        table,
        best_ell: best.1,
        best_alpha: best.2,
        best_seconds: best.0,
    })
}

/// Mean wall time per step for `(ell, alpha)`, measured on a copy of `scene`
/// after `spec.warmup` discarded steps. A divergence yields `Ok(None)`.
pub fn measure_cost(scene: &Simulation, ell: usize, alpha: usize, spec: &TuneSpec) -> Result<Option<f64>> {
    let mut sim = scene.clone();
    sim.timing = None;
    sim.state.set_alpha(alpha)?;
    sim.set_ell(ell);
    match sim.run(spec.warmup as u64) {
        Ok(()) => {}
        Err(e) if e.is_divergence() => return Ok(None),
        Err(e) => return Err(e),
    }
    let t0 = Instant::now();
    match sim.run(spec.n_steps as u64) {
        Ok(()) => Ok(Some(t0.elapsed().as_secs_f64() / spec.n_steps as f64)),
        Err(e) if e.is_divergence() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Measures every candidate of `spec` on copies of `scene`.
pub fn search(scene: &Simulation, spec: &TuneSpec) -> Result<TuneReport> {
    let mut failure = None;
    let report = search_with(spec, |ell, alpha| match measure_cost(scene, ell, alpha, spec) {
        Ok(c) => c,
        Err(e) => {
            failure.get_or_insert(e);
            None
        }
    });
    match failure {
        Some(e) => Err(e),
        None => report,
    }
}

/// Cost surface as text: one row per `ell`, one column per `alpha`, in
/// milliseconds, the chosen cell starred.
pub fn ascii_table(report: &TuneReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:>6}", "ell");
    for a in &report.spec.alpha {
        let _ = write!(s, " {:>9}", format!("a={a}"));
    }
    s.push('\n');
    for &ell in &report.spec.ell {
        let _ = write!(s, "{ell:>6}");
        for &alpha in &report.spec.alpha {
            let mark = if (ell, alpha) == (report.best_ell, report.best_alpha) { "*" } else { " " };
            match report.cost(ell, alpha) {
                Some(c) => {
                    let _ = write!(s, " {:>8.3}{mark}", c * 1e3);
                }
                None => {
                    let _ = write!(s, " {:>8}{mark}", "--");
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Cost surface as an SVG heatmap, darker for cheaper.
pub fn svg_heatmap(report: &TuneReport) -> String {
    let (cw, ch, left, top) = (44.0, 22.0, 60.0, 40.0);
    let cols = report.spec.alpha.len();
    let rows = report.spec.ell.len();
    let costs: Vec<f64> = report.table.iter().filter_map(|c| c.seconds).collect();
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = left + cw * cols as f64 + 20.0;
    let height = top + ch * rows as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="16">mean step time, ms ({:.3} .. {:.3}); best ell={} alpha={}</text>"#,
        lo * 1e3,
        hi * 1e3,
        report.best_ell,
        report.best_alpha
    );
    for (j, a) in report.spec.alpha.iter().enumerate() {
        let x = left + cw * j as f64 + cw / 2.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{a}</text>"#, top - 6.0);
    }
    for (i, &ell) in report.spec.ell.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{ell}</text>"#, left - 6.0, y + ch * 0.65);
        for (j, &alpha) in report.spec.alpha.iter().enumerate() {
            let x = left + cw * j as f64;
            let fill = match report.cost(ell, alpha) {
                Some(c) => {
                    let t = if hi > lo { (c - lo) / (hi - lo) } else { 0.0 };
                    let v = (40.0 + 200.0 * t).round() as u8;
                    format!("rgb({v},{v},255)")
                }
                None => "rgb(200,60,60)".to_string(),
            };
            let stroke = if (ell, alpha) == (report.best_ell, report.best_alpha) { "black" } else { "white" };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{fill}" stroke="{stroke}"/>"#
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="{}">rows: ell, columns: alpha</text>"#,
        top + ch * rows as f64 + 20.0
    );
    s.push_str("</svg>\n");
    s
}
