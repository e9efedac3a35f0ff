//! Tokenization shared by the mock embedder and the evaluation metrics.

/// Ideographic and syllabic scripts written without spaces between words.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F   // CJK symbols and punctuation
        | 0x3040..=0x30FF // hiragana, katakana
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xAC00..=0xD7AF // hangul syllables
        | 0xF900..=0xFAFF
        | 0xFF00..=0xFFEF // half/full-width forms
        | 0x20000..=0x2A6DF)
}

/// Splits on whitespace, then breaks every CJK character out as its own
/// token. Runs of non-CJK characters inside a word stay together, so
/// space-delimited text tokenizes by word and Chinese text by character.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut start = None;
        for (i, c) in word.char_indices() {
            if is_cjk(c) {
                if let Some(s) = start.take() {
                    tokens.push(&word[s..i]);
                }
                tokens.push(&word[i..i + c.len_utf8()]);
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push(&word[s..]);
        }
    }
    tokens
}
