//! File writers. Floats in CSV use `{:.16e}` (17 significant digits).

use std::fs;
use std::path::Path;

use serde::Serialize;

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summaries serialize");
    s.push('\n');
    s
}

pub fn write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|v| v.map(fmt_f64).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `t,x,y,z` trace file.
pub fn trace_csv(samples: &[[f64; 4]]) -> String {
    csv(&["t", "x", "y", "z"], samples.iter().map(|s| s.iter().map(|&v| Some(v)).collect()))
}

/// Directory name for one ε of a sweep; `Display` gives the shortest round-tripping form.
pub fn eps_dir(eps: f64) -> String {
    format!("{eps}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_values_round_trip() {
        let v = [std::f64::consts::PI, -1.0 / 3.0, 1e-300, 0.1 + 0.2];
        let text = trace_csv(&[v]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y,z"));
        let back: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(back, v.to_vec());
    }

    #[test]
    fn blank_cells_for_missing_values() {
        assert_eq!(csv(&["a", "b"], [vec![Some(1.0), None]]), "a,b\n1.0000000000000000e0,\n");
    }

    #[test]
    fn eps_directory_names() {
        assert_eq!(eps_dir(0.1), "0.1");
        assert_eq!(eps_dir(0.0125), "0.0125");
    }
}
