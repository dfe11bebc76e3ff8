use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::HashWidth;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub digest: u128,
    pub text: String,
    pub score: f64,
}

/// A finalized tuple: one sentence per member language.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTuple {
    pub row: u64,
    pub members: BTreeMap<String, Member>,
}

#[derive(Serialize)]
struct MemberOut<'a> {
    text: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct TupleOut<'a> {
    row: u64,
    size: usize,
    members: BTreeMap<&'a str, MemberOut<'a>>,
}

#[derive(Deserialize)]
struct MemberIn {
    text: String,
    score: f64,
}

#[derive(Deserialize)]
struct TupleIn {
    row: u64,
    size: usize,
    members: BTreeMap<String, MemberIn>,
}

impl TranslationTuple {
    /// Parallelism: the number of member languages.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Append `{"row":..,"size":..,"members":{lang:{"text":..,"score":..}}}\n`.
    pub fn write_json_line(&self, out: &mut Vec<u8>) -> Result<()> {
        let view = TupleOut {
            row: self.row,
            size: self.members.len(),
            members: self
                .members
                .iter()
                .map(|(l, m)| {
                    (
                        l.as_str(),
                        MemberOut {
                            text: &m.text,
                            score: m.score,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_writer(&mut *out, &view)?;
        out.push(b'\n');
        Ok(())
    }

    /// Parse one corpus line, recomputing member digests at `width`.
    pub fn from_json_line(line: &str, width: HashWidth) -> Result<Self> {
        let raw: TupleIn = serde_json::from_str(line)?;
        if raw.size != raw.members.len() {
            return Err(Error::data(format!(
                "row {}: size {} does not match {} members",
                raw.row,
                raw.size,
                raw.members.len()
            )));
        }
        if raw.members.len() < 2 {
            return Err(Error::data(format!("row {}: fewer than two members", raw.row)));
        }
        Ok(TranslationTuple {
            row: raw.row,
            members: raw
                .members
                .into_iter()
                .map(|(lang, m)| {
                    let digest = width.digest(&m.text);
                    (
                        lang,
                        Member {
                            digest,
                            text: m.text,
                            score: m.score,
                        },
                    )
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(text: &str, score: f64) -> Member {
        Member {
            digest: HashWidth::Bits64.digest(text),
            text: text.into(),
            score,
        }
    }

    #[test]
    fn json_line_layout() {
        let t = TranslationTuple {
            row: 4,
            members: [
                ("es".to_string(), member("hola", 1.2)),
                ("en".to_string(), member("say \"hi\"", 1.25)),
            ]
            .into_iter()
            .collect(),
        };
        let mut out = Vec::new();
        t.write_json_line(&mut out).unwrap();
        let line = String::from_utf8(out).unwrap();
        assert_eq!(
            line,
            "{\"row\":4,\"size\":2,\"members\":{\"en\":{\"text\":\"say \\\"hi\\\"\",\"score\":1.25},\"es\":{\"text\":\"hola\",\"score\":1.2}}}\n"
        );
        assert_eq!(TranslationTuple::from_json_line(line.trim_end(), HashWidth::Bits64).unwrap(), t);
    }

    #[test]
    fn rejects_inconsistent_lines() {
        let w = HashWidth::Bits64;
        assert!(TranslationTuple::from_json_line(r#"{"row":0,"size":3,"members":{"en":{"text":"a","score":1},"de":{"text":"b","score":1}}}"#, w).is_err());
        assert!(TranslationTuple::from_json_line(r#"{"row":0,"size":1,"members":{"en":{"text":"a","score":1}}}"#, w).is_err());
        assert!(TranslationTuple::from_json_line("not json", w).is_err());
    }
}
