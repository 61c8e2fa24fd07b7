//! Output helpers: atomic file writes and plain tables rendered as CSV or
//! JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// 64-bit FNV-1a digest, used to fingerprint output files in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Text(s) => write!(f, "{s}"),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Non-finite numbers become the strings `inf`, `-inf` and `NaN`.
fn cell_json(c: &Cell) -> serde_json::Value {
    match c {
        Cell::Num(x) if !x.is_finite() => serde_json::Value::String(x.to_string()),
        c => serde_json::to_value(c).expect("cell"),
    }
}

/// A rectangular table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Array of records keyed by column name.
    pub fn to_json(&self) -> String {
        let records: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| (k.clone(), cell_json(v)))
                    .collect()
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).expect("table json");
        s.push('\n');
        s
    }
}

/// Serde for interval bounds that may be infinite: finite values are JSON
/// numbers, infinities the strings `"inf"` and `"-inf"`.
pub mod bound {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        if x == f64::INFINITY {
            Repr::Text("inf".into())
        } else if x == f64::NEG_INFINITY {
            Repr::Text("-inf".into())
        } else {
            Repr::Num(x)
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("invalid bound {s:?}"))),
            },
        }
    }

    /// `(lo, hi)` as a two-element array.
    pub mod pair {
        use super::*;

        pub fn serialize<S: Serializer>(w: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
            [to_repr(w.0), to_repr(w.1)].serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
            let [a, b] = <[Repr; 2]>::deserialize(d)?;
            Ok((from_repr(a)?, from_repr(b)?))
        }
    }

    /// A list of `(lo, hi)` pairs.
    pub mod pairs {
        use super::*;

        pub fn serialize<S: Serializer>(ws: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
            let v: Vec<[Repr; 2]> = ws.iter().map(|w| [to_repr(w.0), to_repr(w.1)]).collect();
            v.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
            Vec::<[Repr; 2]>::deserialize(d)?
                .into_iter()
                .map(|[a, b]| Ok((from_repr(a)?, from_repr(b)?)))
                .collect::<Result<_, D::Error>>()
                .map_err(D::Error::custom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_rendering() {
        let mut t = Table::new(&["t", "N", "ok"]);
        t.push(vec![0.5.into(), 3usize.into(), true.into()]);
        t.push(vec![1e-3.into(), 0usize.into(), false.into()]);
        t.push(vec![f64::NEG_INFINITY.into(), 1usize.into(), true.into()]);
        assert_eq!(t.to_csv(), "t,N,ok\n0.5,3,true\n0.001,0,false\n-inf,1,true\n");
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v[2]["t"], "-inf");
        assert_eq!(v[1]["t"], 0.001);
        assert_eq!(v[0]["N"], 3);
    }

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct W {
        #[serde(with = "bound::pair")]
        w: (f64, f64),
        #[serde(with = "bound::pairs")]
        ws: Vec<(f64, f64)>,
    }

    #[test]
    fn infinite_bounds_round_trip() {
        let x = W {
            w: (f64::NEG_INFINITY, 2.5),
            ws: vec![(0.0, f64::INFINITY)],
        };
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"w":["-inf",2.5],"ws":[[0.0,"inf"]]}"#);
        assert_eq!(serde_json::from_str::<W>(&s).unwrap(), x);
        assert!(serde_json::from_str::<W>(r#"{"w":["x",1],"ws":[]}"#).is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("cbmlab-io-{}", std::process::id()));
        let p = dir.join("x.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
