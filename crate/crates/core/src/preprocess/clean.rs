use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Document, PreprocessError, RawDocument, Source};

static PRE_CODE_OPEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<pre\b[^>]*>\s*<code\b[^>]*>").unwrap());
static PRE_CODE_CLOSE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)</code>\s*</pre\s*>").unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[A-Za-z/!?][^<>]*>").unwrap());
static HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*#+[ \t]*").unwrap());
static HORIZONTAL_RULE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r":?-{3,}:?").unwrap());
static BADGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"!\[[^\]]*\]\([^)]*\)").unwrap());
static LINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\]]*)\]\([^)]*\)").unwrap());
static NUMERIC_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"&#[0-9]+;").unwrap());

/// Cleaning passes are repeated until the text stops changing; every rule
/// only shortens the text, so this terminates quickly.
const MAX_PASSES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    UnclosedCodeBlock,
    UnclosedFence,
    UnclosedComment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanWarning {
    pub document: String,
    pub kind: WarningKind,
    /// Byte offset of the unmatched opener in the text seen by the pass.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cleaned {
    pub document: Document,
    pub warnings: Vec<CleanWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    TooShort,
    NonAscii,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::TooShort => "too_short",
            Rejection::NonAscii => "non_ascii",
        }
    }
}

/// README inclusion filter: at least 100 characters, all ASCII.
pub fn filter_readme(candidate: &str) -> Result<(), Rejection> {
    if candidate.chars().count() < 100 {
        Err(Rejection::TooShort)
    } else if !candidate.is_ascii() {
        Err(Rejection::NonAscii)
    } else {
        Ok(())
    }
}

pub fn clean_stackoverflow(raw: &RawDocument) -> Result<Cleaned, PreprocessError> {
    expect_source(raw, Source::StackOverflow)?;
    Ok(run_to_fixpoint(raw.id(), raw.payload(), stackoverflow_pass))
}

pub fn clean_github_readme(raw: &RawDocument) -> Result<Cleaned, PreprocessError> {
    expect_source(raw, Source::GitHub)?;
    Ok(run_to_fixpoint(raw.id(), raw.payload(), github_pass))
}

/// Dispatch on the document's source.
pub fn clean(raw: &RawDocument) -> Cleaned {
    match raw.source() {
        Source::StackOverflow => run_to_fixpoint(raw.id(), raw.payload(), stackoverflow_pass),
        Source::GitHub => run_to_fixpoint(raw.id(), raw.payload(), github_pass),
    }
}

fn expect_source(raw: &RawDocument, expected: Source) -> Result<(), PreprocessError> {
    if raw.source() != expected {
        return Err(PreprocessError::WrongSource { id: raw.id().to_string(), expected, actual: raw.source() });
    }
    Ok(())
}

type Pass = fn(&str, &mut Vec<(WarningKind, usize)>) -> String;

fn run_to_fixpoint(id: &str, payload: &str, pass: Pass) -> Cleaned {
    let mut raw_warnings = Vec::new();
    let mut text = pass(payload, &mut raw_warnings);
    for _ in 1..MAX_PASSES {
        let next = pass(&text, &mut raw_warnings);
        if next == text {
            break;
        }
        text = next;
    }
    let warnings = raw_warnings
        .into_iter()
        .map(|(kind, offset)| CleanWarning { document: id.to_string(), kind, offset })
        .collect();
    Cleaned { document: Document::new(id, text), warnings }
}

fn stackoverflow_pass(input: &str, warnings: &mut Vec<(WarningKind, usize)>) -> String {
    let s = remove_line_breaks(input);
    let s = remove_pre_code_blocks(&s, warnings);
    let s = TAG.replace_all(&s, "");
    let s = decode_entities(&s);
    collapse_whitespace(&s)
}

fn github_pass(input: &str, warnings: &mut Vec<(WarningKind, usize)>) -> String {
    // Header markers are only recognisable while line starts still exist.
    let s = HEADER.replace_all(input, "");
    let s = remove_line_breaks(&s);
    let s = remove_fences(&s, warnings);
    let s = remove_comments(&s, warnings);
    let s = TAG.replace_all(&s, "");
    let s = s.replace('`', "");
    let s = s.replace('|', " ");
    let s = HORIZONTAL_RULE.replace_all(&s, " ");
    // Badges first, or the link rule would leave a stray `!alt`.
    let s = BADGE.replace_all(&s, "");
    let s = LINK.replace_all(&s, "$1");
    let s = s.replace(['*', '_'], "");
    let s = decode_entities(&s);
    collapse_whitespace(&s)
}

fn remove_line_breaks(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn remove_pre_code_blocks(s: &str, warnings: &mut Vec<(WarningKind, usize)>) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = 0;
    while let Some(open) = PRE_CODE_OPEN.find_at(s, rest) {
        out.push_str(&s[rest..open.start()]);
        match PRE_CODE_CLOSE.find_at(s, open.end()) {
            Some(close) => rest = close.end(),
            None => {
                warnings.push((WarningKind::UnclosedCodeBlock, open.start()));
                return out;
            }
        }
    }
    out.push_str(&s[rest..]);
    out
}

/// Removes fenced blocks: a run of at least three backticks up to the next
/// run at least as long.
fn remove_fences(s: &str, warnings: &mut Vec<(WarningKind, usize)>) -> String {
    let bytes = s.as_bytes();
    let runs = backtick_runs(bytes);
    let mut out = String::with_capacity(s.len());
    let mut cursor = 0;
    let mut i = 0;
    while i < runs.len() {
        let (start, len) = runs[i];
        if len < 3 || start < cursor {
            i += 1;
            continue;
        }
        out.push_str(&s[cursor..start]);
        match runs[i + 1..].iter().position(|&(_, l)| l >= len) {
            Some(offset) => {
                let (close_start, close_len) = runs[i + 1 + offset];
                cursor = close_start + close_len;
                i += offset + 2;
            }
            None => {
                warnings.push((WarningKind::UnclosedFence, start));
                return out;
            }
        }
    }
    out.push_str(&s[cursor..]);
    out
}

fn backtick_runs(bytes: &[u8]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'`' {
            let start = i;
            while i < bytes.len() && bytes[i] == b'`' {
                i += 1;
            }
            runs.push((start, i - start));
        } else {
            i += 1;
        }
    }
    runs
}

fn remove_comments(s: &str, warnings: &mut Vec<(WarningKind, usize)>) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = 0;
    while let Some(open) = s[rest..].find("<!--").map(|p| p + rest) {
        out.push_str(&s[rest..open]);
        match s[open + 4..].find("-->") {
            Some(close) => rest = open + 4 + close + 3,
            None => {
                warnings.push((WarningKind::UnclosedComment, open));
                return out;
            }
        }
    }
    out.push_str(&s[rest..]);
    out
}

fn decode_entities(s: &str) -> String {
    let s = NUMERIC_REF.replace_all(s, "\"");
    // `&amp;` last so `&amp;lt;` yields the literal text `&lt;` within a pass.
    s.replace("&quot;", "\"").replace("&gt;", ">").replace("&lt;", "<").replace("&amp;", "&")
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn so(payload: &str) -> Cleaned {
        clean_stackoverflow(&RawDocument::new("so", Source::StackOverflow, payload).unwrap()).unwrap()
    }

    fn gh(payload: &str) -> Cleaned {
        clean_github_readme(&RawDocument::new("gh", Source::GitHub, payload).unwrap()).unwrap()
    }

    #[test]
    fn stackoverflow_examples() {
        assert_eq!(so("<pre><code>int x;</code></pre><p>Hello</p>").document.text, "Hello");
        assert_eq!(so("a &amp; b").document.text, "a & b");
        assert_eq!(so("x\r\n\ny").document.text, "x y");
    }

    #[test]
    fn stackoverflow_entities_and_numeric_refs() {
        assert_eq!(so("&quot;q&quot; 1 &gt; 0").document.text, "\"q\" 1 > 0");
        assert_eq!(so("don&#39;t").document.text, "don\"t");
    }

    #[test]
    fn stackoverflow_code_block_with_attributes() {
        let c = so("Try <pre class=\"lang-js\"><code>f();\n</code></pre> then <code>g</code> works");
        assert_eq!(c.document.text, "Try then g works");
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn unbalanced_code_block_strips_to_end() {
        let c = so("keep <pre><code>lost forever");
        assert_eq!(c.document.text, "keep");
        assert_eq!(c.warnings.len(), 1);
        assert_eq!(c.warnings[0].kind, WarningKind::UnclosedCodeBlock);
    }

    #[test]
    fn wrong_source_is_an_error() {
        let raw = RawDocument::new("x", Source::GitHub, "text").unwrap();
        assert!(matches!(clean_stackoverflow(&raw), Err(PreprocessError::WrongSource { .. })));
    }

    #[test]
    fn github_examples() {
        assert_eq!(gh("# Title\nBody *bold*").document.text, "Title Body bold");
        assert_eq!(gh("![build](http://x/badge.svg) docs").document.text, "docs");
        assert_eq!(gh("see [the docs](http://d) now").document.text, "see the docs now");
    }

    #[test]
    fn github_fences_tables_comments() {
        let readme = "Intro\n```rust\nfn main() {}\n```\n| a | b |\n|---|:---:|\n<!-- hidden -->`inline` __x__";
        assert_eq!(gh(readme).document.text, "Intro a b inline x");
        assert_eq!(gh("a ```` x ``` y ```` b").document.text, "a b");
    }

    #[test]
    fn github_nested_badge_link() {
        assert_eq!(gh("[![ci](http://b.svg)](http://ci) Project").document.text, "Project");
    }

    #[test]
    fn github_unbalanced_markup_warns() {
        let c = gh("before ``` code never closed");
        assert_eq!(c.document.text, "before");
        assert_eq!(c.warnings[0].kind, WarningKind::UnclosedFence);
        let c = gh("before <!-- open comment");
        assert_eq!(c.document.text, "before");
        assert_eq!(c.warnings[0].kind, WarningKind::UnclosedComment);
    }

    #[test]
    fn decoded_markup_is_removed_on_later_passes() {
        assert_eq!(so("List&lt;b&gt; end").document.text, "List end");
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_readme(&"a".repeat(99)), Err(Rejection::TooShort));
        assert_eq!(filter_readme(&"a".repeat(100)), Ok(()));
        let mut s = "a".repeat(199);
        s.push('é');
        assert_eq!(filter_readme(&s), Err(Rejection::NonAscii));
    }

    fn markupish() -> impl Strategy<Value = String> {
        let atoms = prop::sample::select(vec![
            "<p>", "</p>", "<pre><code>", "</code></pre>", "```", "`", "#", "## ", "*", "_", "|", "---", "<!--",
            "-->", "[", "]", "(", ")", "!", "&amp;", "&lt;", "&gt;", "&quot;", "&#39;", "&", ";", "\n", "\r",
            " ", "  ", "\t", "word", "x", "<", ">", "a_b", "[t](u)", "![b](u)",
        ]);
        prop::collection::vec(atoms, 1..40).prop_map(|v| v.concat())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn cleaning_is_idempotent(payload in markupish()) {
            let once = so(&payload).document.text;
            if !once.is_empty() {
                prop_assert_eq!(&so(&once).document.text, &once);
            }
            let once = gh(&payload).document.text;
            if !once.is_empty() {
                prop_assert_eq!(&gh(&once).document.text, &once);
            }
        }

        #[test]
        fn output_has_no_tags_backticks_or_double_spaces(payload in markupish()) {
            for text in [so(&payload).document.text, gh(&payload).document.text] {
                prop_assert!(!TAG.is_match(&text), "tag in {:?}", text);
                prop_assert!(!text.contains("  "));
                prop_assert!(!text.contains('\n') && !text.contains('\r'));
                prop_assert_eq!(text.trim(), text.as_str());
            }
            prop_assert!(!gh(&payload).document.text.contains('`'));
        }

        #[test]
        fn accepted_readmes_are_long_ascii(s in "[ -~é]{0,150}") {
            if filter_readme(&s).is_ok() {
                prop_assert!(s.chars().count() >= 100);
                prop_assert!(s.chars().all(|c| (c as u32) <= 127));
            }
        }
    }
}
