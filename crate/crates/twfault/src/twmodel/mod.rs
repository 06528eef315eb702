//! Wave synthesis at an observation node.
//!
//! Each path contributes the physical model (junction-coefficient product
//! and propagation delay) composed with the behavioral FIR cascade of the
//! traversed edges. Synthesis runs in the frequency domain on a shared FFT
//! grid: the per-path impulse content is assembled bin by bin, brought back
//! to the time domain, integrated into a step response, and masked before
//! its arrival index. Summation over paths is an ordered reduction, so the
//! result is bit-stable regardless of the execution mode.

pub mod steps;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{FaultParams, FaultedGraph, NodeId, NodeKind, SegmentKind};
use crate::junctions::{fault_coefficient_derivative, fault_coefficients, junction_coefficients};
use crate::lineparams::{
    lossless_surge_impedance, mmc_impedance, surge_impedance, ApproximationMode, DistributedParams,
    MmcEquivalent,
};
use crate::parallel::{map_indexed, Execution};
use crate::paths::{enumerate_paths, Path, PathBudget};
use steps::{normalized_taps, StepResponseTable, StepTableCatalog};

/// Shared DFT grid. Bin `k` carries the signed angular frequency
/// `ω_k = 2π·k'·fs/N` with `k' = k` for `k ≤ N/2` and `k' = k − N` above,
/// so Hermitian symmetry holds by construction for spectra evaluated from
/// real-coefficient transfer functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub n: usize,
    pub fs_hz: f64,
}

impl FrequencyGrid {
    pub fn new(n: usize, fs_hz: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Config(format!(
                "FFT length must be a power of two >= 2, got {n}"
            )));
        }
        if !(fs_hz > 0.0) {
            return Err(Error::Config(format!("sampling rate must be > 0, got {fs_hz}")));
        }
        Ok(Self { n, fs_hz })
    }

    /// Signed angular frequency of bin `k` (rad/s).
    pub fn omega(&self, k: usize) -> f64 {
        let half = self.n / 2;
        let signed = if k <= half {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        2.0 * std::f64::consts::PI * signed * self.fs_hz / self.n as f64
    }
}

/// Characteristic admittance of a line class at a signed frequency.
/// Overhead lines are lossless; cables keep the low-loss correction with a
/// real `1/sqrt(L/C)` DC limit.
pub fn line_admittance(params: &DistributedParams, kind: SegmentKind, omega: f64) -> Complex64 {
    let y0 = Complex64::new(1.0 / lossless_surge_impedance(params), 0.0);
    match kind {
        SegmentKind::Overhead => y0,
        SegmentKind::Cable => {
            if omega == 0.0 {
                y0
            } else {
                let s = Complex64::new(0.0, omega);
                surge_impedance(params, ApproximationMode::LowLoss, s)
                    .expect("s != 0 cannot hit the DC pole")
                    .inv()
            }
        }
    }
}

/// Terminal admittance of a converter station at a signed frequency; the DC
/// limit is an open circuit.
pub fn station_admittance(m: &MmcEquivalent, omega: f64) -> Complex64 {
    if omega == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        mmc_impedance(m, Complex64::new(0.0, omega))
            .expect("s != 0 cannot hit the DC pole")
            .inv()
    }
}

/// DC junction-coefficient product along a path, fault factors included,
/// final transmission into the observation node included. Used for
/// amplitude ranking and truncation: at DC every coefficient is real.
pub fn dc_coefficient_product(fg: &FaultedGraph, path: &Path, r_f_ohm: f64) -> Result<f64> {
    let zs_fault = fg.edge_zs_lossless(fg.edges.len() - 1);
    let fc = fault_coefficients(zs_fault, r_f_ohm);
    let mut product = fc.k.re;
    let nodes = &path.nodes;
    let hops = &path.hops;
    for i in 1..nodes.len() {
        let q = nodes[i];
        let e_in = hops[i - 1];
        let reflect = i + 1 < nodes.len() && hops[i] == e_in;
        if q == fg.fault_node {
            product *= if reflect { fc.k.re } else { fc.t.re };
            continue;
        }
        let y_in = Complex64::new(1.0 / fg.edge_zs_lossless(e_in), 0.0);
        let mut others = Vec::new();
        for &(_, e) in fg.neighbors(q) {
            if e != e_in {
                others.push(Complex64::new(1.0 / fg.edge_zs_lossless(e), 0.0));
            }
        }
        // Stations are open at DC and contribute no admittance.
        let c = junction_coefficients(y_in, &others)?;
        product *= if reflect { c.k.re } else { c.t.re };
    }
    Ok(product)
}

/// Per-path frequency-domain content that does not depend on
/// `(d_f, R_f, t_f)`: the junction-coefficient product over non-fault nodes
/// and the behavioral filters of the fixed (non-split) hops.
struct PreparedPath {
    path: Path,
    /// Fault reflections along the path beyond the initial surge release.
    m_kf: u32,
    /// Fault transmissions along the path.
    m_tf: u32,
    /// Product including the final transmission into the observation node.
    fixed_v: Vec<Complex64>,
    /// Product excluding the final transmission, times `−Y` of the arrival
    /// edge: positive current flows from the bus into the line.
    fixed_i: Vec<Complex64>,
    /// Total FIR support of the path's filter cascade (samples).
    taps_len: usize,
}

/// Time-domain model output over the full FFT record.
#[derive(Debug, Clone)]
pub struct ModelEval {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

/// Model output with partial derivatives with respect to `d_f` and `R_f`.
#[derive(Debug, Clone)]
pub struct ModelJacobian {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub dv_dd: Vec<f64>,
    pub di_dd: Vec<f64>,
    pub dv_dr: Vec<f64>,
    pub di_dr: Vec<f64>,
}

/// Synthesis context for a fixed faulted graph, observation node, and path
/// set. Immutable after construction; evaluations at different
/// `(d_f, R_f, t_f)` share all cached spectra and may run concurrently.
pub struct WaveModel {
    pub grid: FrequencyGrid,
    exec: Execution,
    /// Lossless surge impedance of the faulty edge's class (Ω).
    zs_fault_ohm: f64,
    /// Propagation speed on the faulty edge (km/s).
    fault_speed_km_s: f64,
    /// Full length of the faulty edge (km).
    faulty_len_km: f64,
    /// Step table and resistivity of the faulty edge's class.
    fault_table: StepResponseTable,
    fault_rho: Option<f64>,
    prepared: Vec<PreparedPath>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl WaveModel {
    /// Prepares the synthesis context for `paths` from the fault node to an
    /// observation node. Paths must all start at the fault node and end at
    /// the same node.
    pub fn new(
        fg: &FaultedGraph,
        obs: NodeId,
        paths: Vec<Path>,
        tables: &StepTableCatalog,
        grid: FrequencyGrid,
        exec: Execution,
    ) -> Result<Self> {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);

        let faulty_class = fg.base.class(fg.edges[fg.edges.len() - 1].class);
        let fault_table = tables.get(&faulty_class.step_table)?.clone();
        for class in &fg.base.classes {
            let t = tables.get(&class.step_table)?;
            if t.fs_hz != grid.fs_hz {
                return Err(Error::Config(format!(
                    "step table `{}` sampled at {} Hz, synthesis grid at {} Hz",
                    t.class, t.fs_hz, grid.fs_hz
                )));
            }
        }

        // Admittance spectra per segment class and per station node.
        let class_adm: Vec<Vec<Complex64>> = fg
            .base
            .classes
            .iter()
            .map(|c| {
                (0..n)
                    .map(|k| line_admittance(&c.params, c.kind, grid.omega(k)))
                    .collect()
            })
            .collect();
        let station_adm: Vec<Option<Vec<Complex64>>> = fg
            .base
            .nodes
            .iter()
            .map(|node| match &node.kind {
                NodeKind::Station(m) => {
                    Some((0..n).map(|k| station_admittance(m, grid.omega(k))).collect())
                }
                _ => None,
            })
            .collect();

        // Junction-coefficient spectra keyed by (node, incoming edge).
        struct CoeffSpectra {
            k: Vec<Complex64>,
            t: Vec<Complex64>,
        }
        let mut coeff_cache: HashMap<(u32, usize), CoeffSpectra> = HashMap::new();
        let compute_coeff = |q: NodeId, e_in: usize| -> Result<CoeffSpectra> {
            let mut ks = Vec::with_capacity(n);
            let mut ts = Vec::with_capacity(n);
            let mut others = Vec::new();
            for bin in 0..n {
                let y_in = class_adm[fg.edges[e_in].class.0 as usize][bin];
                others.clear();
                for &(_, e) in fg.neighbors(q) {
                    if e != e_in {
                        others.push(class_adm[fg.edges[e].class.0 as usize][bin]);
                    }
                }
                if let Some(sa) = station_adm.get(q.0 as usize).and_then(|s| s.as_ref()) {
                    others.push(sa[bin]);
                }
                let c = junction_coefficients(y_in, &others)?;
                ks.push(c.k);
                ts.push(c.t);
            }
            Ok(CoeffSpectra { k: ks, t: ts })
        };

        // Behavioral filter spectra of the fixed edges, keyed by edge index.
        let mut filter_cache: HashMap<usize, (Vec<Complex64>, usize)> = HashMap::new();
        let spectrum_of_taps = |taps: &[f64], fft: &Arc<dyn Fft<f64>>| -> Vec<Complex64> {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (b, &t) in buf.iter_mut().zip(taps) {
                b.re = t;
            }
            fft.process(&mut buf);
            buf
        };

        let mut prepared = Vec::with_capacity(paths.len());
        for path in paths {
            if path.nodes.first() != Some(&fg.fault_node) || path.nodes.last() != Some(&obs) {
                return Err(Error::Config(
                    "every synthesized path must run from the fault node to the observation node"
                        .into(),
                ));
            }
            let mut m_kf = 0u32;
            let mut m_tf = 0u32;
            let mut fixed_v = vec![Complex64::new(1.0, 0.0); n];
            let mut taps_len = 0usize;

            for (i, &hop) in path.hops.iter().enumerate() {
                // Filter of this traversal (split hops are applied per
                // evaluation, once `d_f` is known).
                if matches!(fg.edges[hop].kind, crate::grid::FEdgeKind::Fixed) {
                    if let Some((spec, support)) = filter_cache.get(&hop) {
                        for (f, s) in fixed_v.iter_mut().zip(spec) {
                            *f *= s;
                        }
                        taps_len += support;
                    } else {
                        let class = fg.base.class(fg.edges[hop].class);
                        let table = tables.get(&class.step_table)?;
                        let u = table
                            .interpolate_step(fg.edge_length(hop, 0.0), class.soil_resistivity)?;
                        let taps = normalized_taps(&u);
                        let spec = spectrum_of_taps(&taps, &fft_fwd);
                        let support = taps.len();
                        for (f, s) in fixed_v.iter_mut().zip(&spec) {
                            *f *= s;
                        }
                        taps_len += support;
                        filter_cache.insert(hop, (spec, support));
                    }
                } else {
                    taps_len += fault_table.response_len() - 1;
                }

                // Junction factor at the node this hop arrives at.
                let q = path.nodes[i + 1];
                let e_in = hop;
                let is_last = i + 1 == path.hops.len();
                let reflect = !is_last && path.hops[i + 1] == e_in;
                if q == fg.fault_node {
                    if reflect {
                        m_kf += 1;
                    } else {
                        m_tf += 1;
                    }
                    continue;
                }
                if is_last {
                    // The final transmission is applied to the voltage only;
                    // the current branch is split off below.
                    continue;
                }
                let spec = match coeff_cache.entry((q.0, e_in)) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(compute_coeff(q, e_in)?)
                    }
                };
                let src = if reflect { &spec.k } else { &spec.t };
                for (f, s) in fixed_v.iter_mut().zip(src) {
                    *f *= s;
                }
            }

            let last_hop = *path.hops.last().expect("paths have at least one hop");
            let arrival_class = fg.edges[last_hop].class.0 as usize;
            let mut fixed_i = Vec::with_capacity(n);
            for (bin, f) in fixed_v.iter().enumerate() {
                fixed_i.push(-class_adm[arrival_class][bin] * f);
            }
            let spec = match coeff_cache.entry((obs.0, last_hop)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(compute_coeff(obs, last_hop)?)
                }
            };
            for (f, t) in fixed_v.iter_mut().zip(&spec.t) {
                *f *= t;
            }

            prepared.push(PreparedPath {
                path,
                m_kf,
                m_tf,
                fixed_v,
                fixed_i,
                taps_len,
            });
        }

        Ok(Self {
            grid,
            exec,
            zs_fault_ohm: fg.edge_zs_lossless(fg.edges.len() - 1),
            fault_speed_km_s: fg.edge_speed(fg.edges.len() - 1),
            faulty_len_km: fg.faulty_edge_length_km,
            fault_table,
            fault_rho: faulty_class.soil_resistivity,
            prepared,
            fft_fwd,
            fft_inv,
        })
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.prepared.iter().map(|p| &p.path)
    }

    pub fn path_count(&self) -> usize {
        self.prepared.len()
    }

    /// Arrival delay of a path for a given fault distance (s).
    pub fn path_delay(&self, idx: usize, d_f_km: f64) -> f64 {
        let p = &self.prepared[idx].path;
        p.fixed_delay_s
            + (p.m_low as f64 * d_f_km + p.m_high as f64 * (self.faulty_len_km - d_f_km))
                / self.fault_speed_km_s
    }

    /// `∂τ_π/∂d_f` of a path (s/km).
    pub fn path_delay_slope(&self, idx: usize) -> f64 {
        let p = &self.prepared[idx].path;
        (p.m_low as f64 - p.m_high as f64) / self.fault_speed_km_s
    }

    /// DC amplitude of each path's contribution (junction product including
    /// fault factors and final transmission, times `V_bf`).
    pub fn dc_amplitudes(&self, r_f_ohm: f64, v_bf_v: f64) -> Vec<f64> {
        let fc = fault_coefficients(self.zs_fault_ohm, r_f_ohm);
        self.prepared
            .iter()
            .map(|p| {
                let cf = fc.k.re.powi(1 + p.m_kf as i32) * fc.t.re.powi(p.m_tf as i32);
                cf * p.fixed_v[0].re * v_bf_v
            })
            .collect()
    }

    /// First active sample of each path: `round(fs·(t_f + τ_π))`, clamped
    /// to the record. Samples before it are exact zeros of the model.
    pub fn causal_masks(&self, d_f_km: f64, t_f_s: f64) -> Vec<usize> {
        (0..self.prepared.len())
            .map(|i| {
                let t = t_f_s + self.path_delay(i, d_f_km);
                ((t * self.grid.fs_hz).round().max(0.0) as usize).min(self.grid.n)
            })
            .collect()
    }

    fn check_window(&self, d_f_km: f64, t_f_s: f64) -> Result<()> {
        for (i, p) in self.prepared.iter().enumerate() {
            let arrival = ((t_f_s + self.path_delay(i, d_f_km)) * self.grid.fs_hz).round();
            if arrival as usize + p.taps_len >= self.grid.n {
                return Err(Error::WindowOverflow);
            }
        }
        Ok(())
    }

    /// Smallest admissible FFT length for this path set at `(d_f, t_f)`,
    /// also guaranteeing headroom of four observation windows.
    pub fn required_fft_len(
        fg: &FaultedGraph,
        paths: &[Path],
        tables: &StepTableCatalog,
        d_f_km: f64,
        t_f_s: f64,
        fs_hz: f64,
        window_end_sample: usize,
    ) -> Result<usize> {
        let mut need = 4 * window_end_sample.max(1);
        for p in paths {
            let mut taps = 0usize;
            for &hop in &p.hops {
                let class = fg.base.class(fg.edges[hop].class);
                taps += tables.get(&class.step_table)?.response_len() - 1;
            }
            let arrival = ((t_f_s + p.delay(fg, d_f_km)) * fs_hz).round() as usize;
            need = need.max(arrival + taps + 2);
        }
        Ok(need.next_power_of_two())
    }

    /// Spectra of the split-edge filters and their distance derivatives at
    /// the current fault distance: `(g_low, g_high, dg_low, dg_high)` where
    /// the derivative of the high side is taken with respect to its own
    /// length `D − d_f`.
    fn split_spectra(
        &self,
        d_f_km: f64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
        let spectrum = |taps: &[f64]| -> Vec<Complex64> {
            let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.n];
            for (b, &t) in buf.iter_mut().zip(taps) {
                b.re = t;
            }
            self.fft_fwd.process(&mut buf);
            buf
        };
        let d_high = self.faulty_len_km - d_f_km;
        let u_low = self.fault_table.interpolate_step(d_f_km, self.fault_rho)?;
        let u_high = self.fault_table.interpolate_step(d_high, self.fault_rho)?;
        let du_low = self.fault_table.step_distance_derivative(d_f_km, self.fault_rho)?;
        let du_high = self.fault_table.step_distance_derivative(d_high, self.fault_rho)?;
        Ok((
            spectrum(&normalized_taps(&u_low)),
            spectrum(&normalized_taps(&u_high)),
            spectrum(&normalized_taps(&du_low)),
            spectrum(&normalized_taps(&du_high)),
        ))
    }

    fn to_time(&self, mut spec: Vec<Complex64>, mask: usize) -> Vec<f64> {
        self.fft_inv.process(&mut spec);
        let scale = 1.0 / self.grid.n as f64;
        // Integrate the impulse content into the step response, then zero
        // everything before the arrival index.
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.grid.n);
        for c in &spec {
            acc += c.re * scale;
            out.push(acc);
        }
        for o in out.iter_mut().take(mask) {
            *o = 0.0;
        }
        out
    }

    /// Evaluates the node voltage and current over the full record.
    /// `masks` fixes the per-path causal cut, usually
    /// [`Self::causal_masks`] at the same `(d_f, t_f)`; passing masks from
    /// a different point keeps the output differentiable across sample
    /// boundaries for finite-difference probes.
    pub fn eval(
        &self,
        d_f_km: f64,
        r_f_ohm: f64,
        t_f_s: f64,
        v_bf_v: f64,
        masks: &[usize],
    ) -> Result<ModelEval> {
        self.check_window(d_f_km, t_f_s)?;
        let (g_low, g_high, _, _) = self.split_spectra(d_f_km)?;
        let fc = fault_coefficients(self.zs_fault_ohm, r_f_ohm);
        let n = self.grid.n;

        let per_path = map_indexed(self.exec, self.prepared.len(), |idx| {
            let p = &self.prepared[idx];
            let cf = fc.k.re.powi(1 + p.m_kf as i32) * fc.t.re.powi(p.m_tf as i32);
            let amp = cf * v_bf_v;
            let delay = t_f_s + self.path_delay(idx, d_f_km);
            let mut spec_v = Vec::with_capacity(n);
            let mut spec_i = Vec::with_capacity(n);
            for k in 0..n {
                let w = self.grid.omega(k);
                let phase = Complex64::from_polar(amp, -w * delay);
                let split = pow_u(g_low[k], p.path.m_low) * pow_u(g_high[k], p.path.m_high);
                spec_v.push(p.fixed_v[k] * phase * split);
                spec_i.push(p.fixed_i[k] * phase * split);
            }
            (
                self.to_time(spec_v, masks[idx]),
                self.to_time(spec_i, masks[idx]),
            )
        });

        let mut v = vec![0.0; n];
        let mut i = vec![0.0; n];
        for (pv, pi) in &per_path {
            add_assign(&mut v, pv);
            add_assign(&mut i, pi);
        }
        Ok(ModelEval { v, i })
    }

    /// Evaluates the model together with its analytic partial derivatives.
    ///
    /// `dtf_dd` carries the chain-rule term of an eliminated inception
    /// time: when `t_f` is deduced from a fixed detection sample via
    /// `t_f = t_d − τ_first(d_f)`, pass `−∂τ_first/∂d_f`; for an
    /// independent `t_f`, pass 0.
    pub fn jacobian(
        &self,
        d_f_km: f64,
        r_f_ohm: f64,
        t_f_s: f64,
        v_bf_v: f64,
        dtf_dd: f64,
        masks: &[usize],
    ) -> Result<ModelJacobian> {
        if r_f_ohm <= 0.0 {
            return Err(Error::GradientSingularity);
        }
        self.check_window(d_f_km, t_f_s)?;
        let (g_low, g_high, dg_low, dg_high) = self.split_spectra(d_f_km)?;
        let fc = fault_coefficients(self.zs_fault_ohm, r_f_ohm);
        let dfc = fault_coefficient_derivative(self.zs_fault_ohm, r_f_ohm);
        let n = self.grid.n;

        let per_path = map_indexed(self.exec, self.prepared.len(), |idx| {
            let p = &self.prepared[idx];
            let cf = fc.k.re.powi(1 + p.m_kf as i32) * fc.t.re.powi(p.m_tf as i32);
            let amp = cf * v_bf_v;
            // Logarithmic derivative of the fault-factor product in R_f.
            let rho = (1.0 + p.m_kf as f64) * dfc / fc.k.re + p.m_tf as f64 * dfc / fc.t.re;
            let delay = t_f_s + self.path_delay(idx, d_f_km);
            let ddelay = self.path_delay_slope(idx) + dtf_dd;
            let (m_low, m_high) = (p.path.m_low, p.path.m_high);

            let mut spec_v = Vec::with_capacity(n);
            let mut spec_i = Vec::with_capacity(n);
            let mut spec_dv = Vec::with_capacity(n);
            let mut spec_di = Vec::with_capacity(n);
            for k in 0..n {
                let w = self.grid.omega(k);
                let phase = Complex64::from_polar(amp, -w * delay);
                let split = pow_u(g_low[k], m_low) * pow_u(g_high[k], m_high);
                let bv = p.fixed_v[k] * phase;
                let bi = p.fixed_i[k] * phase;
                spec_v.push(bv * split);
                spec_i.push(bi * split);

                // d(split)/dd_f: low side grows with d_f, high side shrinks.
                let mut dsplit = Complex64::new(0.0, 0.0);
                if m_low > 0 {
                    dsplit += pow_u(g_low[k], m_low - 1)
                        * pow_u(g_high[k], m_high)
                        * (m_low as f64)
                        * dg_low[k];
                }
                if m_high > 0 {
                    dsplit -= pow_u(g_low[k], m_low)
                        * pow_u(g_high[k], m_high - 1)
                        * (m_high as f64)
                        * dg_high[k];
                }
                let jw = Complex64::new(0.0, -w * ddelay);
                spec_dv.push(bv * split * jw + bv * dsplit);
                spec_di.push(bi * split * jw + bi * dsplit);
            }
            let v = self.to_time(spec_v, masks[idx]);
            let i = self.to_time(spec_i, masks[idx]);
            let dv_dr: Vec<f64> = v.iter().map(|x| x * rho).collect();
            let di_dr: Vec<f64> = i.iter().map(|x| x * rho).collect();
            (
                v,
                i,
                self.to_time(spec_dv, masks[idx]),
                self.to_time(spec_di, masks[idx]),
                dv_dr,
                di_dr,
            )
        });

        let mut out = ModelJacobian {
            v: vec![0.0; n],
            i: vec![0.0; n],
            dv_dd: vec![0.0; n],
            di_dd: vec![0.0; n],
            dv_dr: vec![0.0; n],
            di_dr: vec![0.0; n],
        };
        for (v, i, dv_dd, di_dd, dv_dr, di_dr) in &per_path {
            add_assign(&mut out.v, v);
            add_assign(&mut out.i, i);
            add_assign(&mut out.dv_dd, dv_dd);
            add_assign(&mut out.di_dd, di_dd);
            add_assign(&mut out.dv_dr, dv_dr);
            add_assign(&mut out.di_dr, di_dr);
        }
        Ok(out)
    }
}

fn pow_u(base: Complex64, exp: u32) -> Complex64 {
    match exp {
        0 => Complex64::new(1.0, 0.0),
        1 => base,
        _ => base.powu(exp),
    }
}

fn add_assign(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Sampled waveforms at an observation node over a window starting at
/// `t0_s` on the global clock.
#[derive(Debug, Clone)]
pub struct NodeWaveforms {
    pub fs_hz: f64,
    pub t0_s: f64,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

/// Output of a node simulation: waveforms plus the budget-admitted path set
/// that survived amplitude truncation, with DC amplitudes for reporting.
#[derive(Debug)]
pub struct SimulationResult {
    pub waveforms: NodeWaveforms,
    pub paths: Vec<Path>,
    pub dc_amplitudes_v: Vec<f64>,
}

/// Enumerates paths under the budget, drops paths whose DC coefficient
/// product is below `truncation_rel` of the largest, and synthesizes the
/// waveforms at `obs` over `[t0, t0 + duration)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_node(
    fg: &FaultedGraph,
    fault: &FaultParams,
    obs: NodeId,
    tables: &StepTableCatalog,
    fs_hz: f64,
    t0_s: f64,
    duration_s: f64,
    budget: PathBudget,
    truncation_rel: f64,
    exec: Execution,
) -> Result<SimulationResult> {
    let samples = (duration_s * fs_hz).round() as usize;
    let k0 = (t0_s * fs_hz).round().max(0.0) as usize;
    if samples == 0 {
        return Err(Error::Config("observation window must span at least one sample".into()));
    }

    let all = enumerate_paths(fg, fg.fault_node, obs, budget, fault.d_f_km)?;
    let mut paths = Vec::new();
    let mut dc = Vec::new();
    if !all.is_empty() {
        let products: Vec<f64> = all
            .iter()
            .map(|p| dc_coefficient_product(fg, p, fault.r_f_ohm))
            .collect::<Result<_>>()?;
        let max = products.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        for (p, c) in all.into_iter().zip(products) {
            if max == 0.0 || c.abs() >= truncation_rel * max {
                dc.push(c * fault.v_bf_v);
                paths.push(p);
            }
        }
    }
    if paths.is_empty() {
        return Ok(SimulationResult {
            waveforms: NodeWaveforms {
                fs_hz,
                t0_s,
                v: vec![0.0; samples],
                i: vec![0.0; samples],
            },
            paths,
            dc_amplitudes_v: dc,
        });
    }

    let mut n = WaveModel::required_fft_len(
        fg,
        &paths,
        tables,
        fault.d_f_km,
        fault.t_f_s,
        fs_hz,
        k0 + samples,
    )?;
    // The length is sized from the content, but honor the wrap-around guard
    // by retrying once with doubled padding before giving up.
    for attempt in 0..2 {
        let model = WaveModel::new(
            fg,
            obs,
            paths.clone(),
            tables,
            FrequencyGrid::new(n, fs_hz)?,
            exec,
        )?;
        let masks = model.causal_masks(fault.d_f_km, fault.t_f_s);
        match model.eval(fault.d_f_km, fault.r_f_ohm, fault.t_f_s, fault.v_bf_v, &masks) {
            Ok(eval) => {
                let v = eval.v[k0..k0 + samples].to_vec();
                let i = eval.i[k0..k0 + samples].to_vec();
                return Ok(SimulationResult {
                    waveforms: NodeWaveforms { fs_hz, t0_s, v, i },
                    paths,
                    dc_amplitudes_v: dc,
                });
            }
            Err(Error::WindowOverflow) if attempt == 0 => n *= 2,
            Err(e) => return Err(e),
        }
    }
    Err(Error::WindowOverflow)
}
