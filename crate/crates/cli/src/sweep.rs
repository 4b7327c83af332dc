//! Parameter sweeps over the two-qubit gate families, written as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use nscost::channel::{
    choi_from_unitary, depolarize_global, partial_swap_unitary, swap_alpha_unitary,
    BipartiteChannel, ChannelDims,
};
use nscost::costs::{CostReport, Estimator};
use nscost::{Error, Result};
use rayon::prelude::*;

/// Gate family swept over its interaction parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `SWAP^α`, parameter `α`.
    SwapAlpha,
    /// Partial swap `√a·1 + i√(1−a)·SWAP`, parameter `a ∈ [0, 1]`.
    PartialSwap,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::SwapAlpha => "swap_alpha",
            Family::PartialSwap => "partial_swap",
        }
    }

    /// The depolarized gate channel at parameter `param` and noise `p`.
    pub fn channel(&self, param: f64, p: f64) -> Result<BipartiteChannel> {
        let u = match self {
            Family::SwapAlpha => swap_alpha_unitary(param),
            Family::PartialSwap => partial_swap_unitary(param)?,
        };
        depolarize_global(&choi_from_unitary(&u, ChannelDims::uniform(2))?, p)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "swap_alpha" => Ok(Family::SwapAlpha),
            "partial_swap" => Ok(Family::PartialSwap),
            _ => Err(format!(
                "unknown family `{s}` (expected swap_alpha or partial_swap)"
            )),
        }
    }
}

/// Quantity computed at every grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepQuantity {
    OneShotCost,
    LowerBound,
    Dmax,
}

impl SweepQuantity {
    pub const ALL: [SweepQuantity; 3] = [
        SweepQuantity::OneShotCost,
        SweepQuantity::LowerBound,
        SweepQuantity::Dmax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepQuantity::OneShotCost => "one_shot_cost",
            SweepQuantity::LowerBound => "lower_bound",
            SweepQuantity::Dmax => "dmax",
        }
    }

    fn compute(&self, est: &Estimator, ch: &BipartiteChannel) -> Result<CostReport> {
        match self {
            SweepQuantity::OneShotCost => est.one_shot_cost(ch),
            SweepQuantity::LowerBound => est.asymptotic_lower_bound(ch),
            SweepQuantity::Dmax => est.dmax(ch),
        }
    }
}

impl FromStr for SweepQuantity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown sweep quantity `{s}` (expected one_shot_cost, lower_bound or dmax)"
                )
            })
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    /// Parses `start,stop,count`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` must be `start,stop,count`"));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| format!("grid bound `{t}` is not a number"))
        };
        let count = parts[2]
            .parse::<usize>()
            .map_err(|_| format!("grid count `{}` is not a nonnegative integer", parts[2]))?;
        Ok(Grid {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count,
        })
    }
}

/// A full sweep: every quantity at every `(p, param)` grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    pub grid: Grid,
    pub ps: Vec<f64>,
    pub quantities: Vec<SweepQuantity>,
}

impl SweepSpec {
    /// The default panel: 21 parameter points on `[0, 1]` at
    /// `p ∈ {0, 0.2, 0.4}` with all quantities.
    pub fn default_for(family: Family) -> Self {
        Self {
            family,
            grid: Grid {
                start: 0.0,
                stop: 1.0,
                count: 21,
            },
            ps: vec![0.0, 0.2, 0.4],
            quantities: SweepQuantity::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.count < 2 {
            return Err(Error::ParameterOutOfRange {
                name: "grid count",
                value: self.grid.count as f64,
                range: "count >= 2",
            });
        }
        if !(self.grid.start.is_finite() && self.grid.stop.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "grid bound",
                value: if self.grid.start.is_finite() {
                    self.grid.stop
                } else {
                    self.grid.start
                },
                range: "finite values",
            });
        }
        if let Some(&p) = self.ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ParameterOutOfRange {
                name: "p",
                value: p,
                range: "[0, 1]",
            });
        }
        if self.ps.is_empty() || self.quantities.is_empty() {
            return Err(Error::MalformedProblem(
                "a sweep needs at least one p and one quantity".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in output order: `p` outer, parameter inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let params = self.grid.points();
        self.ps
            .iter()
            .flat_map(|&p| params.iter().map(move |&x| (p, x)))
            .collect()
    }
}

/// One CSV row. Failed computations keep `NaN` values and record the error
/// in `status`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub param: f64,
    pub p: f64,
    pub quantity: SweepQuantity,
    pub value_bits: f64,
    /// Unclamped, unceiled value in bits (`log2 m*` for the one-shot cost).
    pub raw_bits: f64,
    pub raw_scalar: f64,
    pub status: String,
    pub elapsed: Duration,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "optimal" || self.status == "near_optimal"
    }
}

fn status_of(err: &Error) -> String {
    match err {
        Error::Solver { status, .. } => format!("solver_{status}"),
        _ => "error".to_string(),
    }
}

fn row(
    spec: &SweepSpec,
    p: f64,
    param: f64,
    quantity: SweepQuantity,
    result: Result<CostReport>,
) -> SweepRow {
    let base = SweepRow {
        family: spec.family,
        param,
        p,
        quantity,
        value_bits: f64::NAN,
        raw_bits: f64::NAN,
        raw_scalar: f64::NAN,
        status: String::new(),
        elapsed: Duration::ZERO,
    };
    match result {
        Ok(r) => SweepRow {
            value_bits: r.value,
            raw_bits: r.raw_value,
            raw_scalar: r.raw_scalar,
            status: r.status.to_string(),
            elapsed: r.elapsed,
            ..base
        },
        Err(e) => SweepRow {
            status: status_of(&e),
            ..base
        },
    }
}

/// Runs the sweep on the current rayon pool. Rows come back in grid order
/// (`p`, then parameter, then quantity in spec order) regardless of which
/// point finished first; per-point failures are recorded, not raised.
pub fn run_sweep(spec: &SweepSpec, est: &Estimator) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let per_point: Vec<Vec<SweepRow>> = spec
        .points()
        .into_par_iter()
        .map(|(p, param)| match spec.family.channel(param, p) {
            Ok(ch) => spec
                .quantities
                .iter()
                .map(|&q| row(spec, p, param, q, q.compute(est, &ch)))
                .collect(),
            Err(e) => spec
                .quantities
                .iter()
                .map(|&q| {
                    row(
                        spec,
                        p,
                        param,
                        q,
                        Err(Error::MalformedProblem(e.to_string())),
                    )
                })
                .collect(),
        })
        .collect();
    Ok(per_point.into_iter().flatten().collect())
}

pub const CSV_HEADER: [&str; 8] = [
    "family",
    "param",
    "p",
    "quantity",
    "value_bits",
    "raw_scalar",
    "status",
    "solve_ms",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.9}")
    }
}

/// Writes rows with the fixed header; identical inputs give identical bytes
/// apart from the `solve_ms` column.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.family.as_str().to_string(),
            format!("{}", r.param),
            format!("{}", r.p),
            r.quantity.as_str().to_string(),
            num(r.value_bits),
            num(r.raw_scalar),
            r.status.clone(),
            r.elapsed.as_millis().to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_and_points() {
        let g: Grid = "0,1,5".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!("0,1".parse::<Grid>().is_err());
        assert!("0,x,3".parse::<Grid>().is_err());
        assert!("0,1,-2".parse::<Grid>().is_err());
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = SweepSpec::default_for(Family::SwapAlpha);
        assert!(s.validate().is_ok());
        s.grid.count = 1;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default_for(Family::SwapAlpha);
        s.ps = vec![0.0, 1.5];
        assert!(matches!(
            s.validate(),
            Err(Error::ParameterOutOfRange { name: "p", .. })
        ));
    }

    #[test]
    fn points_are_p_major() {
        let s = SweepSpec {
            family: Family::PartialSwap,
            grid: Grid {
                start: 0.0,
                stop: 1.0,
                count: 2,
            },
            ps: vec![0.0, 0.5],
            quantities: vec![SweepQuantity::Dmax],
        };
        assert_eq!(
            s.points(),
            vec![(0.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 1.0)]
        );
    }

    #[test]
    fn names_round_trip() {
        for q in SweepQuantity::ALL {
            assert_eq!(q.as_str().parse::<SweepQuantity>().unwrap(), q);
        }
        for f in [Family::SwapAlpha, Family::PartialSwap] {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
        assert!("swap".parse::<Family>().is_err());
    }
}
