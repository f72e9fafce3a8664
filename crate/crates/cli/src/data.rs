//! CSV data and plug-in probability estimates.
//!
//! A data file has a header of variable names and one row per unit, or per
//! cell when an optional `count` column holds frequencies.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;

use coe_lab::bounds::{Margins, MediatorData, StratifiedData};
use coe_lab::iv::IvData;
use coe_lab::synth::Dataset;
use coe_lab::Error;

use crate::model::Loaded;

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<(Vec<String>, f64)>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let count_col = header.iter().position(|h| h.eq_ignore_ascii_case("count"));
        let columns: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != count_col)
            .map(|(_, h)| h.clone())
            .collect();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.with_context(|| format!("{}: row {}", path.display(), line + 2))?;
            let weight = match count_col {
                Some(c) => {
                    let raw = rec.get(c).unwrap_or("");
                    let w: f64 = raw.parse().map_err(|_| {
                        Error::InvalidInput(format!("row {}: count {raw:?} is not a number", line + 2))
                    })?;
                    if w < 0.0 || w.fract() != 0.0 || !w.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "row {}: count {raw} is not a nonnegative integer",
                            line + 2
                        ))
                        .into());
                    }
                    w
                }
                None => 1.0,
            };
            let values = rec
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != count_col)
                .map(|(_, v)| v.to_string())
                .collect();
            rows.push((values, weight));
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> coe_lab::Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownVariable(format!("column {name}")))
    }

    /// First of `names` that is a column.
    pub fn find_column(&self, names: &[&str]) -> coe_lab::Result<usize> {
        names
            .iter()
            .find_map(|n| self.columns.iter().position(|c| c == n))
            .ok_or_else(|| Error::UnknownVariable(format!("column {}", names.join(" or "))))
    }

    /// Total weight of rows whose binary columns take the given values.
    /// Returns counts indexed by the binary pattern (first column most
    /// significant).
    fn binary_counts(&self, cols: &[usize]) -> coe_lab::Result<Vec<f64>> {
        let mut n = vec![0.0; 1 << cols.len()];
        for (vals, w) in &self.rows {
            let mut k = 0;
            for &c in cols {
                k = 2 * k + binary_value(&self.columns[c], &vals[c])?;
            }
            n[k] += w;
        }
        Ok(n)
    }
}

/// Binary labels: `0/1`, `false/true`, `no/yes`.
pub fn binary_value(column: &str, v: &str) -> coe_lab::Result<usize> {
    match v.to_ascii_lowercase().as_str() {
        "0" | "false" | "no" => Ok(0),
        "1" | "true" | "yes" => Ok(1),
        _ => Err(Error::InvalidInput(format!(
            "column {column}: {v:?} is not a binary value (0/1, false/true, no/yes)"
        ))),
    }
}

/// `(k + α) / (n + m α)`; a zero denominator means the conditioning event
/// was never observed.
fn ratio(k: f64, n: f64, alpha: f64, levels: f64, what: &str) -> coe_lab::Result<f64> {
    let den = n + levels * alpha;
    if den <= 0.0 {
        return Err(Error::PositivityViolation(format!("no observations with {what}")));
    }
    Ok((k + alpha) / den)
}

/// P(Y=1 | X=x) and P(X=1) from counts.
pub fn margins(t: &Table, x: &str, y: &str, alpha: f64) -> coe_lab::Result<Margins> {
    let n = t.binary_counts(&[t.column(x)?, t.column(y)?])?;
    let n0 = n[0] + n[1];
    let n1 = n[2] + n[3];
    Ok(Margins {
        p_y1_given_x1: ratio(n[3], n1, alpha, 2.0, &format!("{x}=1"))?,
        p_y1_given_x0: ratio(n[1], n0, alpha, 2.0, &format!("{x}=0"))?,
        p_x1: Some(ratio(n1, n0 + n1, alpha, 2.0, "any row")?),
        p_y1_do_x0: None,
    })
}

/// The joint over a covariate (any labels) and binary exposure/outcome.
pub fn stratified(t: &Table, s: &str, x: &str, y: &str, alpha: f64) -> coe_lab::Result<StratifiedData> {
    let (cs, cx, cy) = (t.column(s)?, t.column(x)?, t.column(y)?);
    let mut n: BTreeMap<String, [[f64; 2]; 2]> = BTreeMap::new();
    for (vals, w) in &t.rows {
        let xv = binary_value(x, &vals[cx])?;
        let yv = binary_value(y, &vals[cy])?;
        n.entry(vals[cs].clone()).or_default()[xv][yv] += w;
    }
    let total: f64 = n.values().flatten().flatten().sum();
    let k = n.len() as f64;
    let mut rows = Vec::new();
    for (label, c) in &n {
        let ns = c[0][0] + c[0][1] + c[1][0] + c[1][1];
        let (n0, n1) = (c[0][0] + c[0][1], c[1][0] + c[1][1]);
        let what = |xv| format!("{s}={label}, {x}={xv}");
        rows.push((
            label.as_str(),
            ratio(ns, total, alpha, k, "any row")?,
            ratio(n1, ns, alpha, 2.0, &format!("{s}={label}"))?,
            ratio(c[1][1], n1, alpha, 2.0, &what(1))?,
            ratio(c[0][1], n0, alpha, 2.0, &what(0))?,
        ));
    }
    StratifiedData::from_joint(rows)
}

/// P(M=1 | X=x) and P(Y=1 | M=m), plus the observed P(Y=1 | X=x) as a
/// diagnostic.
pub fn mediator(t: &Table, x: &str, m: &str, y: &str, alpha: f64) -> coe_lab::Result<(MediatorData, Margins)> {
    let n = t.binary_counts(&[t.column(x)?, t.column(m)?, t.column(y)?])?;
    let cell = |xv: usize, mv: usize, yv: usize| n[4 * xv + 2 * mv + yv];
    let nx = |xv| (0..2).flat_map(|mv| (0..2).map(move |yv| (mv, yv))).map(|(mv, yv)| cell(xv, mv, yv)).sum::<f64>();
    let nxm1 = |xv| cell(xv, 1, 0) + cell(xv, 1, 1);
    let nm = |mv| (0..2).flat_map(|xv| (0..2).map(move |yv| (xv, yv))).map(|(xv, yv)| cell(xv, mv, yv)).sum::<f64>();
    let nmy1 = |mv| cell(0, mv, 1) + cell(1, mv, 1);
    let d = MediatorData {
        p_m1_given_x0: ratio(nxm1(0), nx(0), alpha, 2.0, &format!("{x}=0"))?,
        p_m1_given_x1: ratio(nxm1(1), nx(1), alpha, 2.0, &format!("{x}=1"))?,
        p_y1_given_m0: ratio(nmy1(0), nm(0), alpha, 2.0, &format!("{m}=0"))?,
        p_y1_given_m1: ratio(nmy1(1), nm(1), alpha, 2.0, &format!("{m}=1"))?,
        observed: None,
    };
    Ok((d, margins(t, x, y, alpha)?))
}

/// Counts over binary (z, x, y).
pub fn iv_data(t: &Table, z: &str, x: &str, y: &str) -> coe_lab::Result<IvData> {
    let cz = t.find_column(&[z, &z.to_ascii_uppercase()])?;
    let cx = t.find_column(&[x, &x.to_ascii_uppercase()])?;
    let cy = t.find_column(&[y, &y.to_ascii_uppercase()])?;
    let n = t.binary_counts(&[cz, cx, cy])?;
    let mut c = [[[0.0; 2]; 2]; 2];
    for (k, v) in n.iter().enumerate() {
        c[k >> 2][(k >> 1) & 1][k & 1] = *v;
    }
    IvData::from_counts(c)
}

/// Writes a dataset with state labels from the model.
pub fn write_dataset(path: &Path, d: &Dataset, model: &Loaded) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(&d.columns)?;
    for r in &d.rows {
        w.write_record(d.columns.iter().zip(r).map(|(c, &v)| model.label(c, v)))?;
    }
    w.flush()?;
    Ok(())
}
