//! On-disk formats: JSON instance and plan files, CSV traces and reports.

use anyhow::{bail, ensure, Context};
use expot::{Instance, IterationTrace, Matrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real that serializes without a fractional part when it is integral,
/// so integral inputs round-trip byte-for-byte.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Real(pub f64);

const EXACT_INT: f64 = 9_007_199_254_740_992.0;

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() < EXACT_INT {
            s.serialize_i64(v as i64)
        } else {
            s.serialize_f64(v)
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Real)
    }
}

fn reals(values: &[f64]) -> Vec<Real> {
    values.iter().copied().map(Real).collect()
}

fn unreal(values: &[Real]) -> Vec<f64> {
    values.iter().map(|r| r.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    /// Row-major `n * m` costs.
    #[serde(rename = "Q")]
    pub q: Vec<Real>,
    pub r: Vec<Real>,
    pub c: Vec<Real>,
}

fn integral_marginal(values: &[Real], side: &str) -> anyhow::Result<Vec<u64>> {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            ensure!(
                v.0.fract() == 0.0 && v.0 >= 0.0 && v.0 < EXACT_INT,
                "{side}[{k}] = {} is not a nonnegative integer (see --rationalize)",
                v.0
            );
            Ok(v.0 as u64)
        })
        .collect()
}

impl InstanceFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("malformed instance file")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            n: inst.n(),
            m: inst.m(),
            q: reals(inst.cost().as_slice()),
            r: inst.demand().iter().map(|&v| Real(v as f64)).collect(),
            c: inst.supply().iter().map(|&v| Real(v as f64)).collect(),
        }
    }

    /// Validated instance; marginals must be integral.
    pub fn to_instance(&self) -> anyhow::Result<Instance> {
        let r = integral_marginal(&self.r, "r")?;
        let c = integral_marginal(&self.c, "c")?;
        Ok(expot::validate_instance(self.n, self.m, unreal(&self.q), r, c)?)
    }

    /// Scales marginals by `denominator`, rounds, and moves any rounding
    /// imbalance onto the last column.
    pub fn rationalize(&self, denominator: u64) -> anyhow::Result<Instance> {
        ensure!(denominator > 0, "--rationalize needs a positive denominator");
        let d = denominator as f64;
        let scale = |v: &[Real]| -> Vec<i64> { v.iter().map(|x| (x.0 * d).round() as i64).collect() };
        let r = scale(&self.r);
        let mut c = scale(&self.c);
        let imbalance: i64 = r.iter().sum::<i64>() - c.iter().sum::<i64>();
        if let Some(last) = c.last_mut() {
            *last += imbalance;
        }
        let to_u64 = |v: Vec<i64>, side: &str| -> anyhow::Result<Vec<u64>> {
            v.into_iter()
                .enumerate()
                .map(|(k, x)| {
                    if x <= 0 {
                        bail!("{side}[{k}] rounds to {x} at denominator {denominator}");
                    }
                    Ok(x as u64)
                })
                .collect()
        };
        let (r, c) = (to_u64(r, "r")?, to_u64(c, "c")?);
        Ok(expot::validate_instance(self.n, self.m, unreal(&self.q), r, c)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "X")]
    pub x: Vec<Real>,
    pub cost: Real,
}

impl PlanFile {
    pub fn new(x: &Matrix, cost: f64) -> Self {
        Self {
            n: x.rows(),
            m: x.cols(),
            x: reals(x.as_slice()),
            cost: Real(cost),
        }
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("malformed plan file")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn matrix(&self) -> anyhow::Result<Matrix> {
        Matrix::from_vec(self.n, self.m, unreal(&self.x))
            .with_context(|| format!("plan has {} entries, expected {} x {}", self.x.len(), self.n, self.m))
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub eta: f64,
    pub op: String,
    pub l1_row: f64,
    pub l1_col: f64,
    pub dual: f64,
    pub gap_bound: f64,
}

pub fn trace_csv(trace: &IterationTrace<f64>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in &trace.records {
        w.serialize(TraceRow {
            step: rec.step,
            eta: rec.eta,
            op: rec.outcome.kind.as_str().to_string(),
            l1_row: rec.outcome.l1_row,
            l1_col: rec.outcome.l1_col,
            dual: rec.dual,
            gap_bound: rec.gap_bound,
        })?;
    }
    if trace.records.is_empty() {
        w.write_record(["step", "eta", "op", "l1_row", "l1_col", "dual", "gap_bound"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BenchRow {
    pub mode: String,
    pub epsilon: f64,
    pub runs: usize,
    pub failures: usize,
    pub median_iterations: Option<f64>,
    pub median_cost_gap: Option<f64>,
}

pub fn bench_csv(rows: &[BenchRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "mode",
            "epsilon",
            "runs",
            "failures",
            "median_iterations",
            "median_cost_gap",
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = "{\n  \"n\": 2,\n  \"m\": 2,\n  \"Q\": [\n    1,\n    2,\n    3,\n    1\n  ],\n  \"r\": [\n    2,\n    1\n  ],\n  \"c\": [\n    1,\n    2\n  ]\n}\n";

    #[test]
    fn instance_round_trip_is_byte_exact() {
        let file = InstanceFile::parse(A).unwrap();
        assert_eq!(file.to_json(), A);
        let inst = file.to_instance().unwrap();
        assert_eq!(InstanceFile::from_instance(&inst), file);
    }

    #[test]
    fn fractional_costs_keep_full_precision() {
        let file = InstanceFile {
            n: 1,
            m: 1,
            q: vec![Real(0.1 + 0.2)],
            r: vec![Real(1.0)],
            c: vec![Real(1.0)],
        };
        let back = InstanceFile::parse(&file.to_json()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn fractional_marginals_need_rationalize() {
        let text = r#"{"n":1,"m":2,"Q":[1,1],"r":[1.5],"c":[0.75,0.75]}"#;
        let file = InstanceFile::parse(text).unwrap();
        assert!(file.to_instance().is_err());
        let inst = file.rationalize(4).unwrap();
        assert_eq!((inst.demand(), inst.supply()), (&[6u64][..], &[3u64, 3][..]));
        let text = r#"{"n":1,"m":2,"Q":[1,1],"r":[1.0],"c":[0.33,0.67]}"#;
        let inst = InstanceFile::parse(text).unwrap().rationalize(10).unwrap();
        assert_eq!(inst.supply(), &[3, 7]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(InstanceFile::parse(r#"{"n":1,"m":1,"Q":[1],"r":[1],"c":[1],"x":0}"#).is_err());
    }

    #[test]
    fn trace_header_is_fixed() {
        let trace = IterationTrace::new(1, 1.0, 0.0);
        let text = trace_csv(&trace).unwrap();
        assert_eq!(text, "step,eta,op,l1_row,l1_col,dual,gap_bound\n");
    }
}
