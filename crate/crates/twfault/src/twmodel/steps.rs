//! Step-response tables backing the behavioral FIR filters.
//!
//! A table holds sampled unit-step responses of one segment class at a set
//! of distance knots (and optionally several soil resistivities), with the
//! propagation delay already removed. Responses between knots come from
//! piecewise-linear interpolation, resistivity first, then distance.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StepResponseTable {
    /// Segment-class id this table serves.
    pub class: String,
    pub fs_hz: f64,
    /// Strictly increasing resistivity axis (Ω·m); a single entry means the
    /// axis is degenerate and any requested ρ maps to it.
    pub rho_axis: Vec<f64>,
    /// Strictly increasing distance knots (km).
    pub distance_knots_km: Vec<f64>,
    /// Row-major responses: index `rho_idx * n_distances + d_idx`.
    responses: Vec<Vec<f64>>,
}

impl StepResponseTable {
    pub fn new(
        class: String,
        fs_hz: f64,
        rho_axis: Vec<f64>,
        distance_knots_km: Vec<f64>,
        responses: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rho_axis.is_empty() || distance_knots_km.is_empty() {
            return Err(Error::Config("step table needs at least one knot on each axis".into()));
        }
        for axis in [&rho_axis, &distance_knots_km] {
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("step-table knots must be strictly increasing".into()));
            }
        }
        if responses.len() != rho_axis.len() * distance_knots_km.len() {
            return Err(Error::Config(format!(
                "step table has {} responses for {} (ρ, d) pairs",
                responses.len(),
                rho_axis.len() * distance_knots_km.len()
            )));
        }
        let len = responses[0].len();
        if len < 2 || responses.iter().any(|r| r.len() != len) {
            return Err(Error::Config("step-table responses must share a length >= 2".into()));
        }
        Ok(Self {
            class,
            fs_hz,
            rho_axis,
            distance_knots_km,
            responses,
        })
    }

    pub fn response_len(&self) -> usize {
        self.responses[0].len()
    }

    pub fn knot_response(&self, rho_idx: usize, d_idx: usize) -> &[f64] {
        &self.responses[rho_idx * self.distance_knots_km.len() + d_idx]
    }

    fn bracket(axis: &[f64], value: f64, name: &'static str) -> Result<(usize, f64)> {
        let (min, max) = (axis[0], *axis.last().unwrap());
        if value < min || value > max {
            return Err(Error::ExtrapolationRefused {
                axis: name,
                value,
                min,
                max,
            });
        }
        // Right-closed upper knot so the last knot stays in range.
        let hi = axis.partition_point(|&k| k < value).min(axis.len() - 1).max(1);
        let lo = hi - 1;
        let w = (value - axis[lo]) / (axis[hi] - axis[lo]);
        Ok((lo, w))
    }

    fn rho_slice(&self, rho: Option<f64>) -> Result<Vec<Vec<f64>>> {
        let n_d = self.distance_knots_km.len();
        if self.rho_axis.len() == 1 {
            return Ok((0..n_d).map(|i| self.knot_response(0, i).to_vec()).collect());
        }
        let rho = rho.ok_or(Error::Config(
            "table has a resistivity axis; a ρ value is required".into(),
        ))?;
        let (lo, w) = Self::bracket(&self.rho_axis, rho, "rho")?;
        Ok((0..n_d)
            .map(|i| {
                let a = self.knot_response(lo, i);
                let b = self.knot_response(lo + 1, i);
                a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
            })
            .collect())
    }

    /// Interpolated unit-step response at distance `d` (resistivity applied
    /// first when the table has a ρ axis).
    pub fn interpolate_step(&self, d_km: f64, rho: Option<f64>) -> Result<Vec<f64>> {
        let rows = self.rho_slice(rho)?;
        let (lo, w) = Self::bracket(&self.distance_knots_km, d_km, "distance")?;
        Ok(rows[lo]
            .iter()
            .zip(&rows[lo + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect())
    }

    /// Elementwise distance derivative `(u_{d2} - u_{d1})/(d2 - d1)` of the
    /// interpolation on the interval containing `d`.
    pub fn step_distance_derivative(&self, d_km: f64, rho: Option<f64>) -> Result<Vec<f64>> {
        let rows = self.rho_slice(rho)?;
        let (lo, _) = Self::bracket(&self.distance_knots_km, d_km, "distance")?;
        let dd = self.distance_knots_km[lo + 1] - self.distance_knots_km[lo];
        Ok(rows[lo]
            .iter()
            .zip(&rows[lo + 1])
            .map(|(a, b)| (b - a) / dd)
            .collect())
    }
}

/// Differentiates a sampled step response into FIR taps:
/// `h(k) = (u(k+1) - u(k)) * fs`, length `len(u) - 1`.
pub fn impulse_response(u: &[f64], fs_hz: f64) -> Vec<f64> {
    u.windows(2).map(|w| (w[1] - w[0]) * fs_hz).collect()
}

/// Unit-DC-gain filter taps `g(k) = u(k+1) - u(k)`; the form the synthesis
/// pipeline convolves with (the `1/fs` of the convolution step absorbed).
pub fn normalized_taps(u: &[f64]) -> Vec<f64> {
    u.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Parameters of the shipped surrogate generator:
/// `u_d(k) = 1 - exp(-k / (fs * T(d)))` with `T(d) = a * d^b`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SurrogateParams {
    pub a: f64,
    pub b: f64,
}

/// Generates a surrogate step-response table for one segment class.
pub fn surrogate_table(
    class: &str,
    fs_hz: f64,
    params: SurrogateParams,
    distance_knots_km: &[f64],
    response_len: usize,
) -> Result<StepResponseTable> {
    let responses = distance_knots_km
        .iter()
        .map(|&d| {
            let tau = params.a * d.powf(params.b);
            (0..response_len)
                .map(|k| {
                    if tau <= 0.0 {
                        if k == 0 { 0.0 } else { 1.0 }
                    } else {
                        1.0 - (-(k as f64) / (fs_hz * tau)).exp()
                    }
                })
                .collect()
        })
        .collect();
    StepResponseTable::new(
        class.to_string(),
        fs_hz,
        vec![100.0],
        distance_knots_km.to_vec(),
        responses,
    )
}

/// Ideal pass-through table: one-sample-rise step at every knot, so the
/// filter is a delta at any interpolated distance.
pub fn delta_table(class: &str, fs_hz: f64, distance_knots_km: &[f64], response_len: usize) -> StepResponseTable {
    let u: Vec<f64> = (0..response_len).map(|k| if k == 0 { 0.0 } else { 1.0 }).collect();
    StepResponseTable::new(
        class.to_string(),
        fs_hz,
        vec![100.0],
        distance_knots_km.to_vec(),
        vec![u; distance_knots_km.len()],
    )
    .expect("delta table construction cannot fail")
}

/// Catalog of step tables keyed by class id.
#[derive(Debug, Clone, Default)]
pub struct StepTableCatalog {
    tables: HashMap<String, StepResponseTable>,
}

impl StepTableCatalog {
    pub fn insert(&mut self, table: StepResponseTable) {
        self.tables.insert(table.class.clone(), table);
    }

    pub fn get(&self, class: &str) -> Result<&StepResponseTable> {
        self.tables
            .get(class)
            .ok_or_else(|| Error::Config(format!("no step table for class `{class}`")))
    }
}

/// Writes tables as CSV rows `class,rho_ohm_m,distance_km,k0,k1,...`.
pub fn write_step_csv<W: Write>(mut w: W, tables: &[&StepResponseTable]) -> Result<()> {
    let len = tables.first().map(|t| t.response_len()).unwrap_or(0);
    write!(w, "class,rho_ohm_m,distance_km")?;
    for k in 0..len {
        write!(w, ",k{k}")?;
    }
    writeln!(w)?;
    for t in tables {
        for (ri, &rho) in t.rho_axis.iter().enumerate() {
            for (di, &d) in t.distance_knots_km.iter().enumerate() {
                write!(w, "{},{:.16e},{:.16e}", t.class, rho, d)?;
                for v in t.knot_response(ri, di) {
                    write!(w, ",{v:.16e}")?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Loads a step-table CSV produced by [`write_step_csv`] (or external
/// tooling following the same schema) into a catalog.
pub fn read_step_csv<R: BufRead>(r: R, fs_hz: f64) -> Result<StepTableCatalog> {
    let mut rows: Vec<(String, f64, f64, Vec<f64>)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |s: Option<&str>, what: &str| -> Result<f64> {
            s.ok_or_else(|| Error::Csv {
                line: i + 1,
                msg: format!("missing {what}"),
            })?
            .trim()
            .parse()
            .map_err(|e| Error::Csv {
                line: i + 1,
                msg: format!("bad {what}: {e}"),
            })
        };
        let class = fields
            .next()
            .ok_or_else(|| Error::Csv {
                line: i + 1,
                msg: "missing class".into(),
            })?
            .trim()
            .to_string();
        let rho = parse(fields.next(), "rho_ohm_m")?;
        let d = parse(fields.next(), "distance_km")?;
        let samples: Vec<f64> = fields
            .enumerate()
            .map(|(j, s)| {
                s.trim().parse().map_err(|e| Error::Csv {
                    line: i + 1,
                    msg: format!("bad sample k{j}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        rows.push((class, rho, d, samples));
    }

    let mut catalog = StepTableCatalog::default();
    let mut by_class: HashMap<String, Vec<(f64, f64, Vec<f64>)>> = HashMap::new();
    for (class, rho, d, samples) in rows {
        by_class.entry(class).or_default().push((rho, d, samples));
    }
    for (class, mut rows) in by_class {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut rho_axis: Vec<f64> = rows.iter().map(|r| r.0).collect();
        rho_axis.dedup();
        let mut d_axis: Vec<f64> = rows.iter().map(|r| r.1).collect();
        d_axis.sort_by(f64::total_cmp);
        d_axis.dedup();
        let responses: Vec<Vec<f64>> = rows.into_iter().map(|r| r.2).collect();
        catalog.insert(StepResponseTable::new(class, fs_hz, rho_axis, d_axis, responses)?);
    }
    Ok(catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_table() -> StepResponseTable {
        surrogate_table(
            "ohl",
            1e6,
            SurrogateParams { a: 8e-8, b: 1.2 },
            &[10.0, 20.0, 30.0, 40.0],
            64,
        )
        .unwrap()
    }

    #[test]
    fn interpolation_is_exact_at_knots() {
        let t = toy_table();
        let u = t.interpolate_step(20.0, None).unwrap();
        assert_eq!(u, t.knot_response(0, 1));
    }

    #[test]
    fn midpoint_is_the_elementwise_average() {
        let t = toy_table();
        let u = t.interpolate_step(25.0, None).unwrap();
        for (k, v) in u.iter().enumerate() {
            let avg = 0.5 * (t.knot_response(0, 1)[k] + t.knot_response(0, 2)[k]);
            assert_relative_eq!(*v, avg, max_relative = 1e-14);
        }
    }

    #[test]
    fn affine_in_distance_table_interpolates_exactly() {
        // u_d(k) affine in d by construction: interpolation must be exact
        // everywhere, not only at knots.
        let knots = [5.0, 10.0, 15.0, 20.0];
        let gen = |d: f64| -> Vec<f64> { (0..16).map(|k| 0.1 * d + 0.01 * (k as f64) * d).collect() };
        let t = StepResponseTable::new(
            "affine".into(),
            1e6,
            vec![100.0],
            knots.to_vec(),
            knots.iter().map(|&d| gen(d)).collect(),
        )
        .unwrap();
        for d in [6.3, 11.11, 19.99] {
            let u = t.interpolate_step(d, None).unwrap();
            for (a, b) in u.iter().zip(gen(d)) {
                assert_relative_eq!(*a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_distance_is_refused() {
        let t = toy_table();
        assert!(matches!(
            t.interpolate_step(9.0, None),
            Err(Error::ExtrapolationRefused { axis: "distance", .. })
        ));
        assert!(matches!(
            t.interpolate_step(41.0, None),
            Err(Error::ExtrapolationRefused { .. })
        ));
    }

    #[test]
    fn impulse_of_ideal_step_is_a_single_tap() {
        let mut u = vec![0.0; 8];
        for v in &mut u[1..] {
            *v = 1.0;
        }
        let h = impulse_response(&u, 1e6);
        assert_eq!(h[0], 1e6);
        assert!(h[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn impulse_of_constant_is_zero() {
        let h = impulse_response(&[0.7; 16], 1e6);
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn first_order_surrogate_taps_telescope() {
        // Σ h(k)/fs telescopes to u(end-1) - u(0) = 1 - exp(-(len-1)/(fs·T)).
        let fs = 1e6;
        let tau = 10e-6;
        let len = 64usize;
        let u: Vec<f64> = (0..len).map(|k| 1.0 - (-(k as f64) / (fs * tau)).exp()).collect();
        let h = impulse_response(&u, fs);
        let total: f64 = h.iter().map(|x| x / fs).sum();
        let expected = 1.0 - (-((len as f64 - 1.0) / (fs * tau))).exp();
        assert_relative_eq!(total, expected, max_relative = 1e-12);
    }

    #[test]
    fn rho_axis_interpolates_before_distance() {
        let knots = vec![10.0, 20.0];
        let flat = |v: f64| vec![v; 4];
        let t = StepResponseTable::new(
            "c".into(),
            1e6,
            vec![50.0, 150.0],
            knots,
            vec![flat(0.0), flat(1.0), flat(10.0), flat(11.0)],
        )
        .unwrap();
        // ρ midway blends the two ρ planes, then d midway blends knots.
        let u = t.interpolate_step(15.0, Some(100.0)).unwrap();
        assert_relative_eq!(u[0], 0.5 * (5.0 + 6.0), max_relative = 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let t = toy_table();
        let mut buf = Vec::new();
        write_step_csv(&mut buf, &[&t]).unwrap();
        let catalog = read_step_csv(std::io::BufReader::new(buf.as_slice()), 1e6).unwrap();
        let back = catalog.get("ohl").unwrap();
        assert_eq!(back.distance_knots_km, t.distance_knots_km);
        for d in [10.0, 17.3, 40.0] {
            let a = t.interpolate_step(d, None).unwrap();
            let b = back.interpolate_step(d, None).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(*x, *y, max_relative = 1e-12);
            }
        }
    }
}
