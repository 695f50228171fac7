//! Binary observation series `xi_1..xi_N` and its on-disk text form.
//!
//! The text form is a small `#`-prefixed header followed by one bit per line:
//!
//! ```text
//! # rpurn-series v1
//! # source_count=4
//! # discarded_count=1
//! # removed_by_subset=0
//! # subset=entire
//! # threshold=0.35
//! 1
//! 0
//! 1
//! ```
//!
//! Writing a parsed file reproduces it byte for byte.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &str = "# rpurn-series v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    #[default]
    Entire,
    BotsOnly,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::Entire => "entire",
            Subset::BotsOnly => "bots_only",
        })
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "entire" => Ok(Subset::Entire),
            "bots_only" | "bots" => Ok(Subset::BotsOnly),
            other => Err(Error::Config(format!("unknown subset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySeries {
    bits: Vec<u8>,
    source_count: usize,
    discarded_count: usize,
    removed_by_subset: usize,
    subset: Subset,
    threshold: Option<f64>,
}

impl BinarySeries {
    /// A series with no ingest provenance (simulated or hand-built).
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Format {
                line: pos + 1,
                message: format!("observation {} is not a bit", bits[pos]),
            });
        }
        Ok(Self {
            source_count: bits.len(),
            bits,
            discarded_count: 0,
            removed_by_subset: 0,
            subset: Subset::Entire,
            threshold: None,
        })
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<u8> = bits.into_iter().map(u8::from).collect();
        Self::from_bits(bits).expect("bools are bits")
    }

    pub(crate) fn with_provenance(
        bits: Vec<u8>,
        discarded_count: usize,
        removed_by_subset: usize,
        subset: Subset,
        threshold: Option<f64>,
    ) -> Self {
        Self {
            source_count: bits.len() + discarded_count + removed_by_subset,
            bits,
            discarded_count,
            removed_by_subset,
            subset,
            threshold,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `xi_n` with 1-based indexing.
    pub fn xi(&self, n: usize) -> u8 {
        self.bits[n - 1]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn discarded_count(&self) -> usize {
        self.discarded_count
    }

    pub fn removed_by_subset(&self) -> usize {
        self.removed_by_subset
    }

    pub fn subset(&self) -> Subset {
        self.subset
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "# source_count={}", self.source_count)?;
        writeln!(out, "# discarded_count={}", self.discarded_count)?;
        writeln!(out, "# removed_by_subset={}", self.removed_by_subset)?;
        writeln!(out, "# subset={}", self.subset)?;
        match self.threshold {
            Some(t) => writeln!(out, "# threshold={t}")?,
            None => writeln!(out, "# threshold=none")?,
        }
        let mut body = Vec::with_capacity(self.bits.len() * 2);
        for &b in &self.bits {
            body.push(b'0' + b);
            body.push(b'\n');
        }
        out.write_all(&body)?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        match lines.next().map(|(_, l)| l).transpose()? {
            Some(line) if line.trim_end() == MAGIC => {}
            Some(_) => {
                return Err(Error::Format {
                    line: 1,
                    message: format!("expected `{MAGIC}` header"),
                })
            }
            None => return Err(Error::EmptyInput),
        }

        let mut source_count = None;
        let mut discarded = None;
        let mut removed = None;
        let mut subset = None;
        let mut threshold = None;
        let mut bits = Vec::new();

        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let bad = |message: String| Error::Format {
                line: lineno,
                message,
            };
            if let Some(header) = line.strip_prefix("# ") {
                let (key, value) = header
                    .split_once('=')
                    .ok_or_else(|| bad(format!("malformed header `{line}`")))?;
                let count = || {
                    value
                        .parse::<usize>()
                        .map_err(|_| bad(format!("`{key}` must be a count")))
                };
                match key {
                    "source_count" => source_count = Some(count()?),
                    "discarded_count" => discarded = Some(count()?),
                    "removed_by_subset" => removed = Some(count()?),
                    "subset" => subset = Some(value.parse::<Subset>().map_err(|e| bad(e.to_string()))?),
                    "threshold" => {
                        threshold = Some(match value {
                            "none" => None,
                            v => Some(v.parse::<f64>().map_err(|_| bad("bad threshold".into()))?),
                        })
                    }
                    other => return Err(bad(format!("unknown header key `{other}`"))),
                }
                continue;
            }
            match line.trim() {
                "0" => bits.push(0),
                "1" => bits.push(1),
                other => return Err(bad(format!("expected 0 or 1, found `{other}`"))),
            }
        }

        let missing = |k: &str| Error::Format {
            line: 1,
            message: format!("missing header `{k}`"),
        };
        let series = Self {
            source_count: source_count.ok_or_else(|| missing("source_count"))?,
            discarded_count: discarded.ok_or_else(|| missing("discarded_count"))?,
            removed_by_subset: removed.ok_or_else(|| missing("removed_by_subset"))?,
            subset: subset.ok_or_else(|| missing("subset"))?,
            threshold: threshold.ok_or_else(|| missing("threshold"))?,
            bits,
        };
        if series.source_count != series.len() + series.discarded_count + series.removed_by_subset {
            return Err(Error::Format {
                line: 1,
                message: "counters do not add up to source_count".into(),
            });
        }
        Ok(series)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let s = BinarySeries::with_provenance(vec![1, 0, 1], 1, 0, Subset::Entire, Some(0.35));
        let text = s.to_text();
        assert_eq!(
            text,
            "# rpurn-series v1\n# source_count=4\n# discarded_count=1\n# removed_by_subset=0\n\
             # subset=entire\n# threshold=0.35\n1\n0\n1\n"
        );
        assert_eq!(BinarySeries::parse(&text).unwrap(), s);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(BinarySeries::parse(""), Err(Error::EmptyInput)));
        assert!(BinarySeries::parse("0\n1\n").is_err());
        let mut text = BinarySeries::from_bits(vec![0, 1]).unwrap().to_text();
        text.push_str("2\n");
        assert!(matches!(BinarySeries::parse(&text), Err(Error::Format { line: 9, .. })));
        assert!(BinarySeries::from_bits(vec![0, 3]).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            bits in proptest::collection::vec(0u8..2, 0..200),
            discarded in 0usize..50,
            removed in 0usize..50,
            bots in any::<bool>(),
            threshold in proptest::option::of(0.0001f64..10.0),
        ) {
            let subset = if bots { Subset::BotsOnly } else { Subset::Entire };
            let s = BinarySeries::with_provenance(bits, discarded, removed, subset, threshold);
            let text = s.to_text();
            let back = BinarySeries::parse(&text).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
