use std::sync::LazyLock;

use regex::Regex;

// Scheme-prefixed URLs and bare `www.` hosts. Bare domains are left alone.
static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\b[a-z][a-z0-9+.\-]*://|\bwww\.)\S*").expect("url pattern")
});

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").expect("tag pattern"));

// Extended_Pictographic plus the joiners, selectors, skin tones, keycaps,
// regional indicators and tag characters that glue emoji sequences together.
static EMOJI: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"[\p{Extended_Pictographic}\x{FE0E}\x{FE0F}\x{200D}\x{20E3}\x{1F1E6}-\x{1F1FF}\x{1F3FB}-\x{1F3FF}\x{E0020}-\x{E007F}]",
    )
    .expect("emoji pattern")
});

static WEB_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)\bhttps?://[^\s<>"']+"#).expect("web url pattern"));

/// Removes URLs, emoji, and HTML tags, then collapses whitespace.
///
/// The passes repeat until the text stops changing, so the result is a
/// fixed point: `clean_text(clean_text(x)) == clean_text(x)`.
pub fn clean_text(raw: &str) -> String {
    let mut current = collapse_whitespace(raw);
    loop {
        let next = clean_pass(&current);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn clean_pass(text: &str) -> String {
    let text = EMOJI.replace_all(text, "");
    let text = strip_tags(&text);
    let text = URL.replace_all(&text, " ");
    collapse_whitespace(&text)
}

/// Removes `<...>` spans, repeating until none remain (`<<b>>` leaves `<>`
/// after one pass).
pub fn strip_tags(text: &str) -> String {
    let mut current = text.to_owned();
    while TAG.is_match(&current) {
        current = TAG.replace_all(&current, " ").into_owned();
    }
    current
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits an article body into paragraphs at every newline or tab.
pub fn segment_article(body: &str) -> Vec<String> {
    body.split(['\n', '\t'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Messages with fewer than four whitespace-delimited words are discarded.
pub fn admit_message(text: &str) -> bool {
    text.split_whitespace().nth(3).is_some()
}

/// Absolute http(s) URLs in raw (uncleaned) text, in order of appearance.
pub fn extract_urls(raw: &str) -> Vec<String> {
    WEB_URL
        .find_iter(raw)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ':', ')', '!', '?']).to_owned())
        .collect()
}
