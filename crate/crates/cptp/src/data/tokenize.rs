/// Pluggable tokenization. The default splitter below handles
/// whitespace-delimited text; a segmenter for unsegmented scripts can be
/// swapped in without touching the rest of the pipeline.
pub trait Tokenize: Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Whitespace splitting with lowercasing; punctuation is peeled off into
/// separate single-character tokens.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceTokenizer;

impl Tokenize for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            let mut word = String::new();
            for c in chunk.chars() {
                if c.is_alphanumeric() {
                    word.extend(c.to_lowercase());
                } else {
                    if !word.is_empty() {
                        out.push(std::mem::take(&mut word));
                    }
                    out.push(c.to_string());
                }
            }
            if !word.is_empty() {
                out.push(word);
            }
        }
        out
    }
}
