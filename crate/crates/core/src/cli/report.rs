//! Reports, the field sample file, and the audits run on stored samples.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base::lipschitz::pairwise_max;
use crate::base::{Constants, Norm};
use crate::error::{Error, Result};
use crate::taylor::Restriction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

/// One certificate: its numeric evidence, the bound it is held to and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Row {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Row {
            name: name.into(),
            value,
            bound,
            relation: Relation::Le,
            pass: value <= bound,
        }
    }

    pub fn lt(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Row {
            name: name.into(),
            value,
            bound,
            relation: Relation::Lt,
            pass: value < bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_sha256: String,
    pub constants: Constants,
    /// Number of stages summed (0 for modes without a series).
    pub depth: usize,
    pub net_points: usize,
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub lip_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub passed: bool,
    pub rows: Vec<Row>,
    pub ledger: serde_json::Value,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Object,
    Columns,
}

impl Report {
    pub fn new(
        mode: &str,
        rows: Vec<Row>,
        ledger: serde_json::Value,
        provenance: Provenance,
    ) -> Self {
        Report {
            mode: mode.to_string(),
            passed: rows.iter().all(|r| r.pass),
            rows,
            ledger,
            provenance,
        }
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// `report.json` or `report.csv`.
    pub fn file_name(format: ReportFormat) -> &'static str {
        match format {
            ReportFormat::Object => "report.json",
            ReportFormat::Columns => "report.csv",
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Object => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Columns => {
                let mut s = String::from("section,name,value,bound,pass\n");
                for r in &self.rows {
                    let rel = match r.relation {
                        Relation::Le => "<=",
                        Relation::Lt => "<",
                    };
                    let _ = writeln!(
                        s,
                        "certificate,{},{},{rel} {},{}",
                        r.name, r.value, r.bound, r.pass
                    );
                }
                let p = &self.provenance;
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(s, "verdict,mode,{},,{}", self.mode, self.passed);
                let _ = writeln!(s, "provenance,spec_sha256,{},,", p.spec_sha256);
                let _ = writeln!(s, "provenance,c0,{},,", p.constants.c0);
                let _ = writeln!(s, "provenance,depth,{},,", p.depth);
                let _ = writeln!(s, "provenance,net_points,{},,", p.net_points);
                let _ = writeln!(s, "provenance,tol,{},,", opt(p.tol));
                let _ = writeln!(s, "provenance,eps,{},,", opt(p.eps));
                let _ = writeln!(s, "provenance,lip_bound,{},,", opt(p.lip_bound));
                s
            }
        }
    }

    pub fn write(&self, dir: &Path, format: ReportFormat) -> Result<()> {
        write_file(&dir.join(Self::file_name(format)), &self.render(format))
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Values and gradients of a field at the net points, in net order.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec<f64>>,
}

impl StoredField {
    /// Columns `x1..xd, value, d1..dd`; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        header.extend((1..=d).map(|i| format!("d{i}")));
        let mut s = header.join(",");
        s.push('\n');
        for ((p, v), g) in self.points.iter().zip(&self.values).zip(&self.gradients) {
            let cells: Vec<String> = p.iter().chain([v]).chain(g).map(f64::to_string).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn read(path: &Path, dim: usize) -> Result<Self> {
        let bad = |msg: String| Error::InvalidInput(format!("{}: {msg}", path.display()));
        let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.len() != 2 * dim + 1 {
            return Err(bad(format!(
                "{} columns, expected {}",
                header.len(),
                2 * dim + 1
            )));
        }
        let mut out = StoredField {
            points: Vec::new(),
            values: Vec::new(),
            gradients: Vec::new(),
        };
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row: Vec<f64> = rec
                .iter()
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", line + 2)))?;
            if row.len() != 2 * dim + 1 {
                return Err(bad(format!("line {}: {} cells", line + 2, row.len())));
            }
            out.points.push(row[..dim].to_vec());
            out.values.push(row[dim]);
            out.gradients.push(row[dim + 1..].to_vec());
        }
        Ok(out)
    }

    /// The stored points must be the net, in order.
    pub fn check_net(&self, net: &[Vec<f64>]) -> Result<()> {
        if self.points.len() != net.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} points, the net has {}",
                self.points.len(),
                net.len()
            )));
        }
        for (i, (p, q)) in self.points.iter().zip(net).enumerate() {
            if p.iter()
                .zip(q)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
            {
                return Err(Error::InvalidInput(format!(
                    "field point {i} is {p:?}, the net has {q:?}"
                )));
            }
        }
        Ok(())
    }
}

/// What a stored field is checked against.
#[derive(Clone, Debug)]
pub enum AuditTarget {
    Extension {
        /// `(sample index, net index)` of the samples that are net points.
        on_net: Vec<(usize, usize)>,
        values: Vec<f64>,
        covectors: Vec<Vec<f64>>,
        restriction: Restriction,
        tol: f64,
        lip_bound: Option<f64>,
        /// Allowed `||H' - D||` on the samples.
        deriv_bound: f64,
    },
    Separate {
        /// Net indices in `A` and at distance `>= 1` from it.
        inside: Vec<usize>,
        far: Vec<usize>,
        lip_bound: f64,
    },
    Smooth {
        target: Vec<f64>,
        eps: f64,
        lip_bound: Option<f64>,
    },
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Audits on stored samples only; shared by a run and by a later audit.
pub fn stored_rows(field: &StoredField, target: &AuditTarget, norm: Norm) -> Vec<Row> {
    let v = &field.values;
    let grad_sup = || max_of(field.gradients.iter().map(|g| norm.dual_of(g)));
    let lip = || pairwise_max(&field.points, v, norm);
    let mut rows = Vec::new();
    match target {
        AuditTarget::Extension {
            on_net,
            values,
            covectors,
            restriction,
            tol,
            lip_bound,
            deriv_bound,
        } => {
            rows.push(Row::le(
                "stored-agreement",
                max_of(on_net.iter().map(|&(i, j)| (v[j] - values[i]).abs())),
                *tol,
            ));
            let gap = on_net.iter().map(|&(i, j)| {
                let e: Vec<f64> = field.gradients[j]
                    .iter()
                    .zip(&covectors[i])
                    .map(|(a, b)| a - b)
                    .collect();
                restriction.norm_of(&e)
            });
            rows.push(Row::le("stored-gradient-on-y", max_of(gap), *deriv_bound));
            if let Some(l) = lip_bound {
                rows.push(Row::le("stored-lipschitz", lip(), *l));
                rows.push(Row::le("stored-gradient-sup", grad_sup(), *l));
            }
        }
        AuditTarget::Separate {
            inside,
            far,
            lip_bound,
        } => {
            rows.push(Row::le(
                "stored-zero-on-a",
                max_of(inside.iter().map(|&j| v[j].abs())),
                0.0,
            ));
            rows.push(Row::le(
                "stored-one-far-from-a",
                max_of(far.iter().map(|&j| (1.0 - v[j]).abs())),
                0.0,
            ));
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            rows.push(Row::le("stored-range-below", -lo, 0.0));
            rows.push(Row::le("stored-range-above", hi, 1.0));
            rows.push(Row::le("stored-lipschitz", lip(), *lip_bound));
        }
        AuditTarget::Smooth {
            target,
            eps,
            lip_bound,
        } => {
            rows.push(Row::lt(
                "stored-agreement",
                max_of(v.iter().zip(target).map(|(a, b)| (a - b).abs())),
                *eps,
            ));
            if let Some(l) = lip_bound {
                rows.push(Row::le("stored-gradient-sup", grad_sup(), *l));
            }
        }
    }
    rows
}
