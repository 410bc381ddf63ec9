//! Output rows and their CSV/JSON encodings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::LoadRegime;

/// Where a row's numbers came from. Rows with any stochastic column are
/// tagged with the stochastic source and carry the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Simulation,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub regime: LoadRegime,
    pub t: f64,
    pub expected_weight: f64,
    pub sim_mean: Option<f64>,
    pub sim_se: Option<f64>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub provenance: Provenance,
    pub spec_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipRow {
    pub regime: LoadRegime,
    pub t: f64,
    pub tips_mean: f64,
    pub tips_se: f64,
    pub replications: u64,
    pub seed: u64,
    pub provenance: Provenance,
    pub spec_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub regime: LoadRegime,
    pub m: u32,
    pub lambda: f64,
    pub delay_analytic: Option<f64>,
    pub delay_sim_mean: Option<f64>,
    pub delay_sim_se: Option<f64>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub spec_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub regime: LoadRegime,
    pub m: u32,
    pub lambda: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub prob_formula: f64,
    pub prob_mc: Option<f64>,
    pub mc_se: Option<f64>,
    pub method: String,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub spec_hash: String,
}

/// One point of a race sweep over `α` or `β` at fixed odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceRow {
    pub alpha: u64,
    pub beta: u64,
    pub p: f64,
    pub q: f64,
    pub prob_formula: f64,
    pub prob_mc: Option<f64>,
    pub mc_se: Option<f64>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub spec_hash: String,
}

/// `α` as a function of when the parasite chain starts relative to the
/// honest payment. `offset` counts honest transactions from T1 to T2
/// (negative when T2 comes first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub offset: i64,
    pub m0: u64,
    pub alpha: u64,
    pub p: f64,
    pub q: f64,
    pub prob_formula: f64,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub spec_hash: String,
}

pub const WEIGHT_COLUMNS: &[&str] = &[
    "regime", "t", "expected_weight", "sim_mean", "sim_se", "replications", "seed", "provenance", "spec_hash",
];
pub const TIP_COLUMNS: &[&str] =
    &["regime", "t", "tips_mean", "tips_se", "replications", "seed", "provenance", "spec_hash"];
pub const DELAY_COLUMNS: &[&str] = &[
    "regime", "m", "lambda", "delay_analytic", "delay_sim_mean", "delay_sim_se", "provenance", "seed", "spec_hash",
];
pub const ATTACK_COLUMNS: &[&str] = &[
    "regime", "m", "lambda", "mu", "p", "q", "prob_formula", "prob_mc", "mc_se", "method", "provenance", "seed",
    "spec_hash",
];
pub const RACE_COLUMNS: &[&str] = &[
    "alpha", "beta", "p", "q", "prob_formula", "prob_mc", "mc_se", "provenance", "seed", "spec_hash",
];
pub const OFFSET_COLUMNS: &[&str] =
    &["offset", "m0", "alpha", "p", "q", "prob_formula", "provenance", "seed", "spec_hash"];

/// The rows produced by one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResultTable {
    Weight(Vec<WeightRow>),
    Tips(Vec<TipRow>),
    Delay(Vec<DelayRow>),
    Attack(Vec<AttackRow>),
    Race(Vec<RaceRow>),
    Offset(Vec<OffsetRow>),
}

impl ResultTable {
    pub fn schema(&self) -> &'static str {
        match self {
            Self::Weight(_) => "weight",
            Self::Tips(_) => "tips",
            Self::Delay(_) => "delay",
            Self::Attack(_) => "attack",
            Self::Race(_) => "race",
            Self::Offset(_) => "offset",
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Self::Weight(_) => WEIGHT_COLUMNS,
            Self::Tips(_) => TIP_COLUMNS,
            Self::Delay(_) => DELAY_COLUMNS,
            Self::Attack(_) => ATTACK_COLUMNS,
            Self::Race(_) => RACE_COLUMNS,
            Self::Offset(_) => OFFSET_COLUMNS,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Weight(r) => r.len(),
            Self::Tips(r) => r.len(),
            Self::Delay(r) => r.len(),
            Self::Attack(r) => r.len(),
            Self::Race(r) => r.len(),
            Self::Offset(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_bytes(&self, format: OutputFormat) -> Result<Vec<u8>> {
        match format {
            OutputFormat::Csv => match self {
                Self::Weight(r) => to_csv(r, WEIGHT_COLUMNS),
                Self::Tips(r) => to_csv(r, TIP_COLUMNS),
                Self::Delay(r) => to_csv(r, DELAY_COLUMNS),
                Self::Attack(r) => to_csv(r, ATTACK_COLUMNS),
                Self::Race(r) => to_csv(r, RACE_COLUMNS),
                Self::Offset(r) => to_csv(r, OFFSET_COLUMNS),
            },
            OutputFormat::Json => {
                let mut out = serde_json::to_vec_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn to_csv<T: Serialize>(rows: &[T], columns: &[&str]) -> Result<Vec<u8>> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(columns).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(table: &ResultTable) -> String {
        let bytes = table.to_bytes(OutputFormat::Csv).unwrap();
        String::from_utf8(bytes).unwrap().lines().next().unwrap().to_owned()
    }

    #[test]
    fn headers_present_when_empty() {
        assert_eq!(
            header(&ResultTable::Attack(vec![])),
            "regime,m,lambda,mu,p,q,prob_formula,prob_mc,mc_se,method,provenance,seed,spec_hash"
        );
        assert_eq!(
            header(&ResultTable::Weight(vec![])),
            "regime,t,expected_weight,sim_mean,sim_se,replications,seed,provenance,spec_hash"
        );
        assert_eq!(
            header(&ResultTable::Delay(vec![])),
            "regime,m,lambda,delay_analytic,delay_sim_mean,delay_sim_se,provenance,seed,spec_hash"
        );
    }

    #[test]
    fn columns_match_field_order() {
        let row = DelayRow {
            regime: LoadRegime::Lr,
            m: 50,
            lambda: 0.5,
            delay_analytic: Some(98.0),
            delay_sim_mean: None,
            delay_sim_se: None,
            provenance: Provenance::Analytic,
            seed: None,
            spec_hash: "abc".into(),
        };
        let text = String::from_utf8(ResultTable::Delay(vec![row.clone()]).to_bytes(OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "lr,50,0.5,98.0,,,analytic,,abc");
        let json: serde_json::Value =
            serde_json::from_slice(&ResultTable::Delay(vec![row]).to_bytes(OutputFormat::Json).unwrap()).unwrap();
        let obj = json[0].as_object().unwrap();
        for c in DELAY_COLUMNS {
            assert!(obj.contains_key(*c), "{c}");
        }
        assert_eq!(obj["delay_sim_mean"], serde_json::Value::Null);
    }
}
