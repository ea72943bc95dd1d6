//! Seed derivation and dataset files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tasks::{BitSeries, LorenzDataset};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `master` along a path of labels.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, p| splitmix64(acc ^ splitmix64(*p)))
}

/// Labels separating independent random streams.
pub mod stream {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const RESERVOIR: u64 = 3;
    pub const OPTIMIZER: u64 = 4;
}

fn parse_meta(line: &str, key: &str) -> Result<String> {
    line.trim_start_matches('#')
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .map(str::to_string)
        .ok_or_else(|| Error::Config(format!("dataset header lacks `{key}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} from `{s}`")))
}

/// Tab-separated `index`, `bit` columns under a metadata comment.
pub fn bits_to_tsv(series: &BitSeries) -> String {
    let mut out = format!("# bit_period={}\nindex\tbit\n", series.bit_period);
    for (i, b) in series.bits.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{b}");
    }
    out
}

pub fn bits_from_tsv(text: &str) -> Result<BitSeries> {
    let mut lines = text.lines();
    let meta = lines.next().unwrap_or_default();
    let period: f64 = parse_num(&parse_meta(meta, "bit_period")?, "bit_period")?;
    if lines.next().map(str::trim) != Some("index\tbit") {
        return Err(Error::Config("expected header `index<TAB>bit`".into()));
    }
    let bits = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let col = l.split('\t').nth(1).unwrap_or_default();
            parse_num::<i8>(col, "bit")
        })
        .collect::<Result<Vec<_>>>()?;
    BitSeries::new(bits, period)
}

/// Tab-separated `time`, `x`, `y`, `z` columns under a metadata comment.
/// Inputs and targets are rebuilt from the trajectory on reading.
pub fn lorenz_to_tsv(data: &LorenzDataset) -> String {
    let mut out = format!(
        "# sample_dt={} square_input={}\ntime\tx\ty\tz\n",
        data.sample_dt, data.square_input
    );
    for (t, p) in data.times.iter().zip(&data.xyz) {
        let _ = writeln!(out, "{t}\t{}\t{}\t{}", p[0], p[1], p[2]);
    }
    out
}

pub fn lorenz_from_tsv(text: &str) -> Result<LorenzDataset> {
    let mut lines = text.lines();
    let meta = lines.next().unwrap_or_default();
    let dt: f64 = parse_num(&parse_meta(meta, "sample_dt")?, "sample_dt")?;
    let square: bool = parse_num(&parse_meta(meta, "square_input")?, "square_input")?;
    if lines.next().map(str::trim) != Some("time\tx\ty\tz") {
        return Err(Error::Config("expected header `time<TAB>x<TAB>y<TAB>z`".into()));
    }
    let xyz = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Config(format!("expected 4 columns in `{l}`")));
            }
            Ok([
                parse_num(cols[1], "x")?,
                parse_num(cols[2], "y")?,
                parse_num(cols[3], "z")?,
            ])
        })
        .collect::<Result<Vec<[f64; 3]>>>()?;
    if xyz.is_empty() {
        return Err(Error::Config("dataset has no samples".into()));
    }
    Ok(LorenzDataset::from_xyz(xyz, dt, square))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{make_inference_dataset, random_bits};

    #[test]
    fn seeds_differ_by_path() {
        let a = derive_seed(7, &[1, 0]);
        assert_eq!(a, derive_seed(7, &[1, 0]));
        assert_ne!(a, derive_seed(7, &[0, 1]));
        assert_ne!(a, derive_seed(8, &[1, 0]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }

    #[test]
    fn bits_round_trip() {
        let s = random_bits(50, 3);
        assert_eq!(bits_from_tsv(&bits_to_tsv(&s)).unwrap(), s);
        assert!(bits_from_tsv("index\tbit\n0\t1\n").is_err());
    }

    #[test]
    fn lorenz_round_trip_is_exact() {
        let d = make_inference_dataset(2.0, 0.005, true, 4).unwrap();
        let back = lorenz_from_tsv(&lorenz_to_tsv(&d)).unwrap();
        assert_eq!(back.xyz, d.xyz);
        assert_eq!(back.input, d.input);
        assert_eq!(back.target, d.target);
        assert!(back.square_input);
    }
}
