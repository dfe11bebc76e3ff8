use std::fmt;
use std::io::{self, Write};

/// One scored sentence pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BitextRecord {
    pub src_lang: String,
    pub tgt_lang: String,
    pub src_text: String,
    pub tgt_text: String,
    pub margin: f64,
}

impl BitextRecord {
    pub fn new(
        src_lang: impl Into<String>,
        tgt_lang: impl Into<String>,
        src_text: impl Into<String>,
        tgt_text: impl Into<String>,
        margin: f64,
    ) -> Self {
        BitextRecord {
            src_lang: src_lang.into(),
            tgt_lang: tgt_lang.into(),
            src_text: src_text.into(),
            tgt_text: tgt_text.into(),
            margin,
        }
    }

    /// Check the record invariants; records fed programmatically go through
    /// the same gate as parsed lines.
    pub fn validate(&self) -> Result<(), RejectReason> {
        check_lang(&self.src_lang)?;
        check_lang(&self.tgt_lang)?;
        if self.src_lang == self.tgt_lang {
            return Err(RejectReason::SameLanguage);
        }
        if self.src_text.trim().is_empty() {
            return Err(RejectReason::EmptyText("source"));
        }
        if self.tgt_text.trim().is_empty() {
            return Err(RejectReason::EmptyText("target"));
        }
        if !self.margin.is_finite() {
            return Err(RejectReason::NonFiniteMargin);
        }
        for t in [&self.src_text, &self.tgt_text] {
            if t.contains(['\t', '\n']) {
                return Err(RejectReason::ControlInText);
            }
        }
        Ok(())
    }

    pub fn write_tsv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            self.src_lang, self.tgt_lang, self.src_text, self.tgt_text, self.margin
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    InvalidUtf8,
    FieldCount(usize),
    EmptyLanguage,
    BadLanguage,
    SameLanguage,
    EmptyText(&'static str),
    ControlInText,
    BadMargin,
    NonFiniteMargin,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::InvalidUtf8 => write!(f, "invalid utf-8"),
            RejectReason::FieldCount(n) => write!(f, "expected 5 fields, found {n}"),
            RejectReason::EmptyLanguage => write!(f, "empty language code"),
            RejectReason::BadLanguage => write!(f, "language code contains whitespace"),
            RejectReason::SameLanguage => write!(f, "identical source and target language"),
            RejectReason::EmptyText(side) => write!(f, "empty {side} text"),
            RejectReason::ControlInText => write!(f, "text contains tab or newline"),
            RejectReason::BadMargin => write!(f, "margin is not a number"),
            RejectReason::NonFiniteMargin => write!(f, "margin is not finite"),
        }
    }
}

/// A line that failed to parse, destined for the rejects sink.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectRecord {
    /// 1-based, counted across all inputs of a run in order.
    pub line_no: u64,
    pub reason: RejectReason,
    pub raw: String,
}

impl RejectRecord {
    pub fn write_tsv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}\t{}\t{}", self.line_no, self.reason, self.raw)
    }
}

fn check_lang(lang: &str) -> Result<(), RejectReason> {
    if lang.is_empty() {
        Err(RejectReason::EmptyLanguage)
    } else if lang.chars().any(char::is_whitespace) {
        Err(RejectReason::BadLanguage)
    } else {
        Ok(())
    }
}

/// Parse `src_lang\ttgt_lang\tsrc_text\ttgt_text\tmargin`. Text fields and
/// language codes are trimmed of surrounding whitespace; nothing else is
/// normalized.
pub fn parse_line(line: &str) -> Result<BitextRecord, RejectReason> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(RejectReason::FieldCount(fields.len()));
    }
    let margin: f64 = fields[4]
        .trim()
        .parse()
        .map_err(|_| RejectReason::BadMargin)?;
    let rec = BitextRecord {
        src_lang: fields[0].trim().to_string(),
        tgt_lang: fields[1].trim().to_string(),
        src_text: fields[2].trim().to_string(),
        tgt_text: fields[3].trim().to_string(),
        margin,
    };
    rec.validate()?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direct_field_mapping() {
        let r = parse_line("en\tes\thello\thola\t1.25").unwrap();
        assert_eq!(r, BitextRecord::new("en", "es", "hello", "hola", 1.25));
    }

    #[test]
    fn identical_languages_rejected() {
        assert_eq!(parse_line("en\ten\ta\tb\t1.1"), Err(RejectReason::SameLanguage));
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(parse_line("en\tes\thello\t1.2"), Err(RejectReason::FieldCount(4)));
        assert_eq!(parse_line(""), Err(RejectReason::FieldCount(1)));
        assert_eq!(parse_line("en\tes\thello\thola\tabc"), Err(RejectReason::BadMargin));
        assert_eq!(parse_line("en\tes\thello\thola\tNaN"), Err(RejectReason::NonFiniteMargin));
        assert_eq!(parse_line("en\tes\thello\thola\tinf"), Err(RejectReason::NonFiniteMargin));
        assert_eq!(parse_line("en\tes\t  \thola\t1"), Err(RejectReason::EmptyText("source")));
        assert_eq!(parse_line("en\tes\tx\t\t1"), Err(RejectReason::EmptyText("target")));
        assert_eq!(parse_line("\tes\tx\ty\t1"), Err(RejectReason::EmptyLanguage));
    }

    #[test]
    fn trims_text_only_at_the_edges() {
        let r = parse_line("en\tfr\t  Hello,  world \t bonjour\t1.3").unwrap();
        assert_eq!(r.src_text, "Hello,  world");
        assert_eq!(r.tgt_text, "bonjour");
    }

    fn text() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9éü日本,.!?]([a-zA-Z0-9éü日本,.!? ]{0,20}[a-zA-Z0-9éü日本,.!?])?"
    }

    proptest! {
        #[test]
        fn reserialize_is_identity(
            src in text(), tgt in text(),
            margin in -10.0f64..10.0,
            langs in prop::sample::subsequence(vec!["en", "de", "fr", "zh", "sw"], 2),
        ) {
            let rec = BitextRecord::new(langs[0], langs[1], src, tgt, margin);
            let mut line = Vec::new();
            rec.write_tsv(&mut line).unwrap();
            let line = String::from_utf8(line).unwrap();
            let parsed = parse_line(line.trim_end_matches('\n')).unwrap();
            prop_assert_eq!(&parsed, &rec);
            let mut again = Vec::new();
            parsed.write_tsv(&mut again).unwrap();
            prop_assert_eq!(again, line.into_bytes());
        }
    }
}
