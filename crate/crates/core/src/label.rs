// SPDX-License-Identifier: Apache-2.0

//! Keyword labels and their injective identity encoding.
//!
//! A label is an unordered set of keywords. Each keyword is NFC-normalized,
//! case-folded, trimmed, and has internal whitespace runs collapsed to one
//! space; the set is then byte-sorted and deduplicated so both parties derive
//! the same identity regardless of entry order. Labels are atomic: a query
//! for {temp} does not match a report labelled {temp, irvine, ca}.
//!
//! Identity encoding (wire-stable, protocol v1): for each keyword in order, a
//! u16 big-endian byte length followed by its UTF-8 bytes.

use std::fmt;

use caseless::default_case_fold_str;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Protocol cap on keywords per label.
pub const MAX_KEYWORDS: usize = 8;
/// Protocol cap on a single keyword, in bytes after normalization.
pub const MAX_KEYWORD_LEN: usize = 128;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    keywords: Vec<String>,
}

/// Normalized form of one keyword; empty if nothing but whitespace remains.
pub fn normalize_keyword(raw: &str) -> String {
    let folded: String = default_case_fold_str(&raw.nfc().collect::<String>())
        .nfc()
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Builds a canonical label from raw keywords.
pub fn canonicalize<I, S>(raw_keywords: I) -> Result<Label>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut keywords = Vec::new();
    for raw in raw_keywords {
        let kw = normalize_keyword(raw.as_ref());
        if kw.is_empty() {
            continue;
        }
        if kw.len() > MAX_KEYWORD_LEN {
            return Err(Error::KeywordTooLong(kw.len()));
        }
        keywords.push(kw);
    }
    keywords.sort_unstable_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
    keywords.dedup();
    match keywords.len() {
        0 => Err(Error::EmptyLabel),
        n if n > MAX_KEYWORDS => Err(Error::TooManyKeywords(n)),
        _ => Ok(Label { keywords }),
    }
}

impl Label {
    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn encode_identity(&self) -> IdentityBytes {
        encode_identity(self)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.keywords).finish()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keywords.join(" | "))
    }
}

/// Length-prefixed keyword concatenation; the byte string hashed to the groups.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IdentityBytes(Vec<u8>);

impl IdentityBytes {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    /// Parses and checks that the bytes are exactly the encoding of a
    /// canonical label; anything else is rejected.
    pub fn decode(bytes: &[u8]) -> Result<Label> {
        let mut keywords = Vec::new();
        let mut rest = bytes;
        while !rest.is_empty() {
            let Some((len, tail)) = rest.split_first_chunk::<2>() else {
                return Err(Error::MalformedIdentity("truncated length prefix"));
            };
            let len = u16::from_be_bytes(*len) as usize;
            if len == 0 || len > MAX_KEYWORD_LEN {
                return Err(Error::MalformedIdentity("keyword length out of range"));
            }
            if tail.len() < len {
                return Err(Error::MalformedIdentity("truncated keyword"));
            }
            let (kw, tail) = tail.split_at(len);
            let kw = std::str::from_utf8(kw)
                .map_err(|_| Error::MalformedIdentity("keyword is not UTF-8"))?;
            if normalize_keyword(kw) != kw {
                return Err(Error::MalformedIdentity("keyword is not normalized"));
            }
            keywords.push(kw.to_owned());
            rest = tail;
        }
        if keywords.is_empty() {
            return Err(Error::MalformedIdentity("no keywords"));
        }
        if keywords.len() > MAX_KEYWORDS {
            return Err(Error::MalformedIdentity("too many keywords"));
        }
        if !keywords.windows(2).all(|w| w[0].as_bytes() < w[1].as_bytes()) {
            return Err(Error::MalformedIdentity("keywords not strictly sorted"));
        }
        Ok(Label { keywords })
    }
}

impl AsRef<[u8]> for IdentityBytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for IdentityBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IdentityBytes({})", hex::encode(&self.0))
    }
}

pub fn encode_identity(label: &Label) -> IdentityBytes {
    let len: usize = label.keywords.iter().map(|k| 2 + k.len()).sum();
    let mut out = Vec::with_capacity(len);
    for kw in &label.keywords {
        out.extend_from_slice(&(kw.len() as u16).to_be_bytes());
        out.extend_from_slice(kw.as_bytes());
    }
    IdentityBytes(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn kws(label: &Label) -> Vec<&str> {
        label.keywords().iter().map(String::as_str).collect()
    }

    #[test]
    fn casefold_and_sort() {
        let l = canonicalize(["Temp", "Irvine, CA"]).unwrap();
        assert_eq!(kws(&l), ["irvine, ca", "temp"]);
        assert_eq!(l, canonicalize(["Irvine, CA", "Temp"]).unwrap());
    }

    #[test]
    fn dedup_after_casefold() {
        assert_eq!(kws(&canonicalize(["temp", "TEMP"]).unwrap()), ["temp"]);
    }

    #[test]
    fn whitespace_collapse() {
        assert_eq!(kws(&canonicalize(["  a  b "]).unwrap()), ["a b"]);
        assert_eq!(kws(&canonicalize(["a\t\nb"]).unwrap()), ["a b"]);
    }

    #[test]
    fn unicode_forms_agree() {
        // Precomposed vs combining acute accent, and full case folding.
        assert_eq!(
            canonicalize(["Caf\u{e9}"]).unwrap(),
            canonicalize(["CAFE\u{301}"]).unwrap()
        );
        assert_eq!(kws(&canonicalize(["Stra\u{df}e"]).unwrap()), ["strasse"]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(canonicalize(Vec::<&str>::new()), Err(Error::EmptyLabel)));
        assert!(matches!(canonicalize(["  ", "\t"]), Err(Error::EmptyLabel)));
        assert!(matches!(
            canonicalize(["x".repeat(129)]),
            Err(Error::KeywordTooLong(129))
        ));
        assert!(canonicalize(["x".repeat(128)]).is_ok());
        let nine: Vec<String> = (0..9).map(|i| format!("k{i}")).collect();
        assert!(matches!(canonicalize(&nine), Err(Error::TooManyKeywords(9))));
        assert!(canonicalize(&nine[..8]).is_ok());
    }

    #[test]
    fn identity_encoding_format() {
        let l = canonicalize(["temp"]).unwrap();
        assert_eq!(encode_identity(&l).as_bytes(), b"\x00\x04temp");
        let ab = encode_identity(&canonicalize(["a", "b"]).unwrap());
        let joined = encode_identity(&canonicalize(["ab"]).unwrap());
        assert_eq!(ab.as_bytes(), b"\x00\x01a\x00\x01b");
        assert_ne!(ab, joined);
    }

    #[test]
    fn decode_rejects_non_canonical() {
        for bad in [
            &b""[..],
            b"\x00",
            b"\x00\x05temp",
            b"\x00\x00",
            b"\x00\x04TEMP",
            b"\x00\x01b\x00\x01a",
            b"\x00\x01a\x00\x01a",
            b"\x00\x02\xff\xfe",
        ] {
            assert!(IdentityBytes::decode(bad).is_err(), "{bad:?}");
        }
    }

    fn arb_keyword() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-zA-Z0-9 ,]{1,24}",
            "\\PC{1,12}",
        ]
    }

    fn arb_label() -> impl Strategy<Value = Label> {
        proptest::collection::vec(arb_keyword(), 1..=MAX_KEYWORDS)
            .prop_filter_map("normalizes to empty", |raw| canonicalize(&raw).ok())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn identity_round_trips(label in arb_label()) {
            let id = encode_identity(&label);
            prop_assert_eq!(IdentityBytes::decode(id.as_bytes()).unwrap(), label);
        }

        #[test]
        fn normalization_is_idempotent(raw in "\\PC{0,32}") {
            let once = normalize_keyword(&raw);
            prop_assert_eq!(normalize_keyword(&once), once);
        }

        #[test]
        fn canonicalize_ignores_order(mut raw in proptest::collection::vec(arb_keyword(), 1..=MAX_KEYWORDS)) {
            let forward = canonicalize(&raw).ok();
            raw.reverse();
            prop_assert_eq!(canonicalize(&raw).ok(), forward);
        }

        #[test]
        fn canonical_labels_are_fixed_points(label in arb_label()) {
            prop_assert_eq!(canonicalize(label.keywords()).unwrap(), label);
        }
    }

    #[test]
    fn encoding_injective_over_10k_labels() {
        let mut labels = HashSet::new();
        let mut encodings = HashSet::new();
        // Vary keyword count and split points so prefix ambiguity would show up.
        for i in 0..10_000u32 {
            let raw: Vec<String> = match i % 3 {
                0 => vec![format!("k{i}")],
                1 => vec![format!("k{}", i / 10), format!("{}", i % 10)],
                _ => vec![format!("k{i}"), "x".into(), format!("y{}", i % 7)],
            };
            let label = canonicalize(&raw).unwrap();
            if labels.insert(label.clone()) {
                encodings.insert(encode_identity(&label));
            }
        }
        assert_eq!(labels.len(), encodings.len());
        assert!(labels.len() > 9_000);
    }
}
