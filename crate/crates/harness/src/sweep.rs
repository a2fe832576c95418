//! Cartesian sweeps over dotted config keys.

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// One resolved grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    /// Axis values in axis order, formatted for CSV.
    pub labels: Vec<String>,
    pub config: ExperimentConfig,
}

/// Expands the sweep axes, first axis outermost. No axes gives one point;
/// an axis with no values gives none.
pub fn expand(base: &ExperimentConfig) -> Result<Vec<SweepPoint>, HarnessError> {
    let mut root = base.to_toml_value();
    if let Some(t) = root.as_table_mut() {
        t.insert("sweep".into(), toml::Value::Array(vec![]));
    }
    let axes = &base.sweep;

    let mut errs = Vec::new();
    for a in axes {
        let probe = a
            .values
            .first()
            .cloned()
            .or_else(|| lookup(&root, &a.key).cloned());
        match probe {
            None => errs.push(format!("sweep: unknown key {}", a.key)),
            Some(v) => {
                let mut trial = root.clone();
                if let Err(e) = set(&mut trial, &a.key, v).and_then(|()| deserialize(trial)) {
                    errs.push(format!("sweep: axis {}: {e}", a.key));
                }
            }
        }
    }
    if !errs.is_empty() {
        return Err(HarnessError::Config(errs));
    }

    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut picks = vec![0; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            picks[k] = rem % a.values.len();
            rem /= a.values.len();
        }
        let mut value = root.clone();
        let mut labels = Vec::with_capacity(axes.len());
        for (a, &i) in axes.iter().zip(&picks) {
            let v = a.values[i].clone();
            labels.push(label(&v));
            set(&mut value, &a.key, v).map_err(|e| HarnessError::Config(vec![e]))?;
        }
        let mut config = deserialize(value).map_err(|e| HarnessError::Config(vec![e]))?;
        config.sweep = base.sweep.clone();
        let errs = config.validate();
        if !errs.is_empty() {
            let at = axes
                .iter()
                .zip(&labels)
                .map(|(a, l)| format!("{}={l}", a.key))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(HarnessError::Config(
                errs.into_iter().map(|e| format!("[{at}] {e}")).collect(),
            ));
        }
        points.push(SweepPoint {
            index,
            labels,
            config,
        });
    }
    Ok(points)
}

fn deserialize(v: toml::Value) -> Result<ExperimentConfig, String> {
    v.try_into()
        .map_err(|e: toml::de::Error| e.message().to_string())
}

fn lookup<'a>(root: &'a toml::Value, key: &str) -> Option<&'a toml::Value> {
    key.split('.')
        .try_fold(root, |v, part| v.as_table()?.get(part))
}

/// Sets a dotted key. A scalar assigned to an array-valued key becomes a
/// one-element array.
fn set(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().ok_or_else(|| "empty key".to_string())?;
    let mut cur = root;
    for p in parents {
        cur = cur
            .as_table_mut()
            .and_then(|t| t.get_mut(*p))
            .ok_or_else(|| format!("unknown key {key}"))?;
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| format!("unknown key {key}"))?;
    let value = match (table.get(*last), value) {
        (Some(toml::Value::Array(_)), v) if !v.is_array() => toml::Value::Array(vec![v]),
        (_, v) => v,
    };
    table.insert(last.to_string(), value);
    Ok(())
}

fn label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Array(a) => a.iter().map(label).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}
