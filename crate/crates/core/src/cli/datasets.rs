//! CSV ingestion and the synthetic logistic dataset.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::TargetError;
use crate::targets::{DesignMatrix, ObservationSet};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}, row {row}, column `{column}`: {reason}")]
    Value {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("{path}: {source}")]
    Shape {
        path: String,
        #[source]
        source: TargetError,
    },
}

struct Table {
    path: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, DatasetError> {
        let name = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => DatasetError::Io {
                    path: name.clone(),
                    source,
                },
                other => DatasetError::Csv {
                    path: name.clone(),
                    message: format!("{other:?}"),
                },
            })?;
        let csv_err = |e: csv::Error| DatasetError::Csv {
            path: name.clone(),
            message: e.to_string(),
        };
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(csv_err)?;
        Ok(Self {
            path: name,
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize, DatasetError> {
        self.headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| DatasetError::MissingColumn {
                path: self.path.clone(),
                column: name.to_string(),
            })
    }

    fn value_error(&self, row: usize, col: usize, reason: String) -> DatasetError {
        DatasetError::Value {
            path: self.path.clone(),
            // 1-based data row after the header
            row: row + 1,
            column: self.headers[col].clone(),
            reason,
        }
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, DatasetError> {
        let s = &self.rows[row][col];
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.value_error(row, col, format!("`{s}` is not a finite number"))),
        }
    }
}

/// A design matrix with its binary responses.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticDataset {
    pub design: DesignMatrix,
    pub y: Vec<u8>,
    /// Names of the design columns, intercept first.
    pub column_names: Vec<String>,
}

impl LogisticDataset {
    pub fn n_zeros(&self) -> usize {
        self.y.iter().filter(|&&v| v == 0).count()
    }
}

fn parse_response(s: &str) -> Option<u8> {
    match s.to_ascii_lowercase().as_str() {
        "0" | "no" | "false" => Some(0),
        "1" | "yes" | "true" => Some(1),
        _ => None,
    }
}

/// Reads a binary response and predictors. Categorical columns are dummy
/// coded against their lexicographically first level; an intercept column
/// comes first, then categorical dummies, then numeric columns as given.
pub fn load_logistic_csv(
    path: &Path,
    response: &str,
    categorical: &[String],
    numeric: &[String],
) -> Result<LogisticDataset, DatasetError> {
    let table = Table::read(path)?;
    let y_col = table.column(response)?;
    let cat_cols = categorical
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let num_cols = numeric
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut y = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let v = parse_response(&row[y_col]).ok_or_else(|| {
            table.value_error(
                i,
                y_col,
                format!("`{}` is not a binary response", row[y_col]),
            )
        })?;
        y.push(v);
    }

    let mut column_names = vec!["intercept".to_string()];
    // per categorical column: level -> dummy offset (None for the reference level)
    let mut codings: Vec<BTreeMap<&str, Option<usize>>> = Vec::new();
    let mut width = 1;
    for (name, &c) in categorical.iter().zip(&cat_cols) {
        let mut levels: BTreeMap<&str, Option<usize>> =
            table.rows.iter().map(|r| (r[c].as_str(), None)).collect();
        for (level, slot) in levels.iter_mut().skip(1) {
            *slot = Some(width);
            width += 1;
            column_names.push(format!("{name}={level}"));
        }
        codings.push(levels);
    }
    for name in numeric {
        column_names.push(name.clone());
    }
    let n_cols = width + num_cols.len();

    let mut data = Vec::with_capacity(table.rows.len() * n_cols);
    for (i, row) in table.rows.iter().enumerate() {
        let start = data.len();
        data.resize(start + n_cols, 0.0);
        data[start] = 1.0;
        for (coding, &c) in codings.iter().zip(&cat_cols) {
            if let Some(offset) = coding[row[c].as_str()] {
                data[start + offset] = 1.0;
            }
        }
        for (k, &c) in num_cols.iter().enumerate() {
            data[start + width + k] = table.number(i, c)?;
        }
    }
    let design = DesignMatrix::new(table.rows.len(), n_cols, data).map_err(|source| {
        DatasetError::Shape {
            path: table.path.clone(),
            source,
        }
    })?;
    Ok(LogisticDataset {
        design,
        y,
        column_names,
    })
}

/// Reads `(year, hare, lynx)` rows; hare is the prey species.
pub fn load_lv_csv(path: &Path) -> Result<ObservationSet, DatasetError> {
    let table = Table::read(path)?;
    let cols = [
        table.column("year")?,
        table.column("hare")?,
        table.column("lynx")?,
    ];
    let mut values = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..table.rows.len() {
        for (k, &c) in cols.iter().enumerate() {
            let v = table.number(i, c)?;
            if k > 0 && v <= 0.0 {
                return Err(table.value_error(i, c, format!("count {v} must be positive")));
            }
            values[k].push(v);
        }
    }
    let [times, hare, lynx] = values;
    ObservationSet::new(times, hare, lynx).map_err(|source| DatasetError::Shape {
        path: table.path.clone(),
        source,
    })
}

/// Level counts of the synthetic categorical predictors.
pub const SYNTHETIC_LEVELS: [usize; 5] = [4, 3, 2, 3, 3];

/// Intercept plus one dummy per non-reference level.
pub const SYNTHETIC_COLUMNS: usize = 11;

/// Coefficients used when none are configured, intercept first.
pub const DEFAULT_BETA: [f64; SYNTHETIC_COLUMNS] =
    [0.0, 0.6, -0.4, 1.1, 0.8, -0.5, 1.3, -0.7, 0.3, 0.9, -1.2];

/// Synthetic imbalanced binary-response dataset with categorical predictors.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLogistic {
    /// Level index of each predictor, per row.
    pub levels: Vec<[u8; 5]>,
    pub y: Vec<u8>,
    /// Coefficients that generated `y`, intercept recalibrated.
    pub beta: Vec<f64>,
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn design_row(levels: &[u8; 5], out: &mut [f64]) {
    out.fill(0.0);
    out[0] = 1.0;
    let mut offset = 1;
    for (j, &n) in SYNTHETIC_LEVELS.iter().enumerate() {
        if levels[j] > 0 {
            out[offset + levels[j] as usize - 1] = 1.0;
        }
        offset += n - 1;
    }
}

/// Draws `n` rows of categorical predictors uniformly over their levels and
/// Bernoulli responses from the logistic model with `beta_true`. When
/// `zero_fraction` is given, the intercept is shifted so that the expected
/// share of zero responses equals it.
pub fn generate_synthetic_logistic(
    n: usize,
    zero_fraction: Option<f64>,
    beta_true: &[f64],
    seed: u64,
) -> SyntheticLogistic {
    assert_eq!(
        beta_true.len(),
        SYNTHETIC_COLUMNS,
        "beta_true needs one entry per design column"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<[u8; 5]> = (0..n)
        .map(|_| std::array::from_fn(|j| rng.random_range(0..SYNTHETIC_LEVELS[j] as u8)))
        .collect();
    let mut row = [0.0; SYNTHETIC_COLUMNS];
    let eta: Vec<f64> = levels
        .iter()
        .map(|l| {
            design_row(l, &mut row);
            crate::linalg::dot(&row, beta_true)
        })
        .collect();
    let mut beta = beta_true.to_vec();
    if let Some(q) = zero_fraction {
        assert!(q > 0.0 && q < 1.0, "zero_fraction must lie in (0, 1)");
        let mean_p = |shift: f64| eta.iter().map(|e| sigmoid(e + shift)).sum::<f64>() / n as f64;
        let target = 1.0 - q;
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_p(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        beta[0] += 0.5 * (lo + hi);
    }
    let shift = beta[0] - beta_true[0];
    let y = eta
        .iter()
        .map(|e| (rng.random::<f64>() < sigmoid(e + shift)) as u8)
        .collect();
    SyntheticLogistic { levels, y, beta }
}

impl SyntheticLogistic {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_zeros(&self) -> usize {
        self.y.iter().filter(|&&v| v == 0).count()
    }

    pub fn design(&self) -> DesignMatrix {
        let mut data = vec![0.0; self.len() * SYNTHETIC_COLUMNS];
        for (l, chunk) in self
            .levels
            .iter()
            .zip(data.chunks_exact_mut(SYNTHETIC_COLUMNS))
        {
            design_row(l, chunk);
        }
        DesignMatrix::new(self.len(), SYNTHETIC_COLUMNS, data).expect("shape is consistent")
    }

    pub fn dataset(&self) -> LogisticDataset {
        let mut column_names = vec!["intercept".to_string()];
        for (j, &n) in SYNTHETIC_LEVELS.iter().enumerate() {
            for l in 1..n {
                column_names.push(format!("x{}=L{l}", j + 1));
            }
        }
        LogisticDataset {
            design: self.design(),
            y: self.y.clone(),
            column_names,
        }
    }

    /// Columns `y, x1..x5` with levels written as `L0, L1, …`; reading the
    /// file back with [`load_logistic_csv`] reproduces [`design`](Self::design).
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["y", "x1", "x2", "x3", "x4", "x5"])?;
        for (l, y) in self.levels.iter().zip(&self.y) {
            let mut rec = vec![y.to_string()];
            rec.extend(l.iter().map(|v| format!("L{v}")));
            w.write_record(&rec)?;
        }
        w.flush()
    }

    pub fn predictor_names() -> Vec<String> {
        (1..=5).map(|j| format!("x{j}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn toy_dummy_coding() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "toy.csv",
            "y,color,size\n1,red,big\n0,blue,big\n1,red,small\n",
        );
        let ds = load_logistic_csv(&p, "y", &["color".into(), "size".into()], &[]).unwrap();
        assert_eq!(ds.column_names, ["intercept", "color=red", "size=small"]);
        assert_eq!(ds.design.row(0), [1.0, 1.0, 0.0]);
        assert_eq!(ds.design.row(1), [1.0, 0.0, 0.0]);
        assert_eq!(ds.design.row(2), [1.0, 1.0, 1.0]);
        assert_eq!(ds.y, [1, 0, 1]);
        assert!(ds.design.has_full_column_rank());
    }

    #[test]
    fn schema_and_value_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "y,color\n1,red\n");
        assert!(matches!(
            load_logistic_csv(&p, "y", &["size".into()], &[]),
            Err(DatasetError::MissingColumn { .. })
        ));
        let p = write(&dir, "b.csv", "y,age\n1,30\n0,abc\n");
        assert!(matches!(
            load_logistic_csv(&p, "y", &[], &["age".into()]),
            Err(DatasetError::Value { row: 2, .. })
        ));
        let p = write(&dir, "c.csv", "y\n2\n");
        assert!(matches!(
            load_logistic_csv(&p, "y", &[], &[]),
            Err(DatasetError::Value { .. })
        ));
        let p = write(&dir, "lv.csv", "year,hare,lynx\n1900,30,4\n1901,-1,6\n");
        assert!(matches!(
            load_lv_csv(&p),
            Err(DatasetError::Value { row: 2, .. })
        ));
        let p = write(&dir, "lv2.csv", "year,hare\n1900,30\n");
        assert!(matches!(
            load_lv_csv(&p),
            Err(DatasetError::MissingColumn { .. })
        ));
        assert!(matches!(
            load_lv_csv(&dir.path().join("missing.csv")),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn synthetic_round_trips_through_csv() {
        let s = generate_synthetic_logistic(500, Some(0.8), &DEFAULT_BETA, 3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        s.write_csv(&p).unwrap();
        let ds = load_logistic_csv(&p, "y", &SyntheticLogistic::predictor_names(), &[]).unwrap();
        assert_eq!(ds, s.dataset());
    }

    #[test]
    fn null_model_is_a_fair_coin() {
        let s = generate_synthetic_logistic(20_000, None, &[0.0; SYNTHETIC_COLUMNS], 9);
        let ones = s.len() - s.n_zeros();
        // 4 sd of Binomial(20000, 1/2) is about 283
        assert!((ones as f64 - 10_000.0).abs() < 283.0);
    }
}
