//! Demand series, demand-pattern categorization and magnitude pooling.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;

use super::ForecastError;

/// ADI cutoff between regular and intermittent occurrence.
pub const ADI_CUTOFF: f64 = 1.32;
/// CV² cutoff between stable and variable sizes.
pub const CV2_CUTOFF: f64 = 0.49;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    pub product_id: String,
    periods: Vec<i64>,
    quantities: Vec<f64>,
    pub pool_id: Option<usize>,
}

impl DemandSeries {
    pub fn new(
        product_id: impl Into<String>,
        periods: Vec<i64>,
        quantities: Vec<f64>,
    ) -> Result<Self, ForecastError> {
        if periods.len() != quantities.len() {
            return Err(ForecastError::InvalidInput(format!(
                "{} periods but {} quantities",
                periods.len(),
                quantities.len()
            )));
        }
        if periods.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ForecastError::InvalidInput(
                "periods must be strictly increasing".into(),
            ));
        }
        if let Some(q) = quantities.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(ForecastError::InvalidInput(format!(
                "negative or non-finite quantity {q}"
            )));
        }
        Ok(Self {
            product_id: product_id.into(),
            periods,
            quantities,
            pool_id: None,
        })
    }

    /// Consecutive periods `0..n`.
    pub fn from_quantities(
        product_id: impl Into<String>,
        quantities: Vec<f64>,
    ) -> Result<Self, ForecastError> {
        let periods = (0..quantities.len() as i64).collect();
        Self::new(product_id, periods, quantities)
    }

    pub fn periods(&self) -> &[i64] {
        &self.periods
    }

    pub fn quantities(&self) -> &[f64] {
        &self.quantities
    }

    pub fn len(&self) -> usize {
        self.quantities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantities.is_empty()
    }

    pub fn mean_nonzero(&self) -> Option<f64> {
        let nz: Vec<f64> = self
            .quantities
            .iter()
            .copied()
            .filter(|&q| q > 0.0)
            .collect();
        (!nz.is_empty()).then(|| nz.iter().sum::<f64>() / nz.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandCategory {
    Smooth,
    Erratic,
    Lumpy,
    Intermittent,
    /// No demand observed at all.
    IntermittentDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandClass {
    pub adi: f64,
    pub cv2: f64,
    pub category: DemandCategory,
}

/// ADI = periods / nonzero periods; CV² = (std / mean)² of nonzero sizes.
pub fn classify_demand(quantities: &[f64]) -> Result<DemandClass, ForecastError> {
    if quantities.is_empty() {
        return Err(ForecastError::InvalidInput("empty series".into()));
    }
    let nz: Vec<f64> = quantities.iter().copied().filter(|&q| q > 0.0).collect();
    if nz.is_empty() {
        return Ok(DemandClass {
            adi: f64::INFINITY,
            cv2: 0.0,
            category: DemandCategory::IntermittentDegenerate,
        });
    }
    let adi = quantities.len() as f64 / nz.len() as f64;
    let mean = nz.iter().sum::<f64>() / nz.len() as f64;
    let var = nz.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / nz.len() as f64;
    let cv2 = var / (mean * mean);
    let category = match (adi < ADI_CUTOFF, cv2 < CV2_CUTOFF) {
        (true, true) => DemandCategory::Smooth,
        (true, false) => DemandCategory::Erratic,
        (false, true) => DemandCategory::Intermittent,
        (false, false) => DemandCategory::Lumpy,
    };
    Ok(DemandClass { adi, cv2, category })
}

/// Equal-frequency pools by mean nonzero demand. Returns one entry per
/// input series; all-zero series get `None` and are excluded from pooling.
pub fn pool_by_magnitude(
    series: &[DemandSeries],
    n_pools: usize,
) -> Result<Vec<Option<usize>>, ForecastError> {
    if n_pools == 0 {
        return Err(ForecastError::InvalidConfig(
            "need at least one pool".into(),
        ));
    }
    let mut ranked: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.mean_nonzero().map(|m| (i, m)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let n = ranked.len();
    let mut pools = vec![None; series.len()];
    for (rank, (i, _)) in ranked.into_iter().enumerate() {
        pools[i] = Some(rank * n_pools / n);
    }
    Ok(pools)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub product_id: String,
    pub period: i64,
    pub quantity: f64,
}

/// Reads `{product_id, period, quantity}` lines into one series per product,
/// ordered by product id.
pub fn read_demand_jsonl<R: BufRead>(reader: R) -> Result<Vec<DemandSeries>, ForecastError> {
    let mut grouped: BTreeMap<String, Vec<(i64, f64)>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ForecastError::InvalidInput(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DemandRecord = serde_json::from_str(&line)
            .map_err(|e| ForecastError::InvalidInput(format!("line {}: {e}", i + 1)))?;
        grouped
            .entry(rec.product_id)
            .or_default()
            .push((rec.period, rec.quantity));
    }
    grouped
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let (periods, quantities) = rows.into_iter().unzip();
            DemandSeries::new(id, periods, quantities)
        })
        .collect()
}

pub fn write_demand_jsonl<W: std::io::Write>(
    mut out: W,
    series: &[DemandSeries],
) -> std::io::Result<()> {
    for s in series {
        for (&period, &quantity) in s.periods.iter().zip(&s.quantities) {
            let rec = DemandRecord {
                product_id: s.product_id.clone(),
                period,
                quantity,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_demand_is_smooth() {
        let c = classify_demand(&[4.0; 12]).unwrap();
        assert_eq!(
            (c.adi, c.cv2, c.category),
            (1.0, 0.0, DemandCategory::Smooth)
        );
    }

    #[test]
    fn every_third_period_is_intermittent() {
        let c = classify_demand(&[0.0, 0.0, 6.0, 0.0, 0.0, 6.0, 0.0, 0.0, 6.0]).unwrap();
        assert_eq!(
            (c.adi, c.cv2, c.category),
            (3.0, 0.0, DemandCategory::Intermittent)
        );
    }

    #[test]
    fn variable_sizes() {
        let erratic = classify_demand(&[1.0, 10.0, 1.0, 10.0]).unwrap();
        assert_eq!(erratic.category, DemandCategory::Erratic);
        let lumpy = classify_demand(&[0.0, 1.0, 0.0, 0.0, 10.0, 0.0]).unwrap();
        assert_eq!(lumpy.category, DemandCategory::Lumpy);
        let zero = classify_demand(&[0.0; 5]).unwrap();
        assert_eq!(zero.category, DemandCategory::IntermittentDegenerate);
    }

    #[test]
    fn magnitude_pools_split_by_quantile() {
        let series: Vec<DemandSeries> = [1.0, 1000.0, 10.0, 100.0]
            .iter()
            .enumerate()
            .map(|(i, &m)| DemandSeries::from_quantities(format!("p{i}"), vec![m, 0.0, m]).unwrap())
            .collect();
        let pools = pool_by_magnitude(&series, 2).unwrap();
        assert_eq!(pools, vec![Some(0), Some(1), Some(0), Some(1)]);
        let with_zero = vec![
            series[0].clone(),
            DemandSeries::from_quantities("z", vec![0.0; 3]).unwrap(),
        ];
        assert_eq!(
            pool_by_magnitude(&with_zero, 2).unwrap(),
            vec![Some(0), None]
        );
    }

    #[test]
    fn series_invariants() {
        assert!(DemandSeries::new("a", vec![1, 1], vec![0.0, 1.0]).is_err());
        assert!(DemandSeries::new("a", vec![1, 2], vec![0.0, -1.0]).is_err());
        assert!(DemandSeries::new("a", vec![1], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let s = vec![
            DemandSeries::new("a", vec![1, 2], vec![0.0, 3.0]).unwrap(),
            DemandSeries::new("b", vec![5], vec![1.5]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_demand_jsonl(&mut buf, &s).unwrap();
        assert_eq!(read_demand_jsonl(buf.as_slice()).unwrap(), s);
        assert!(read_demand_jsonl("{bad".as_bytes()).is_err());
    }
}
