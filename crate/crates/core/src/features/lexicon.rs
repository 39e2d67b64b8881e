use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::FeatureError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub synset: String,
    pub hypernym_path: String,
}

/// Static replacement for a WordNet lookup: `(stem, coarse POS)` to the
/// first synset and its hypernym path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypernymLexicon {
    entries: HashMap<(String, char), LexiconEntry>,
}

impl HypernymLexicon {
    /// Parses `stem<TAB>pos<TAB>synset<TAB>hyp1>hyp2>...` lines. Blank lines
    /// are skipped; when a key repeats, the first line wins.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| FeatureError::Lexicon {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            if fields.iter().any(|f| f.trim().is_empty()) {
                return Err(bad("empty field".into()));
            }
            let pos = match fields[1] {
                "n" | "v" | "a" | "r" => fields[1].chars().next().unwrap_or('n'),
                other => {
                    return Err(bad(format!(
                        "unknown part of speech `{other}` (expected n, v, a or r)"
                    )))
                }
            };
            entries
                .entry((fields[0].to_string(), pos))
                .or_insert(LexiconEntry {
                    synset: fields[2].to_string(),
                    hypernym_path: fields[3].to_string(),
                });
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn lookup(&self, stem: &str, pos: char) -> Option<&LexiconEntry> {
        self.entries.get(&(stem.to_string(), pos))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Maps a Penn Treebank tag to the lexicon's coarse classes.
pub fn coarse_pos(tag: &str) -> Option<char> {
    if tag.starts_with("NN") {
        Some('n')
    } else if tag.starts_with("VB") {
        Some('v')
    } else if tag.starts_with("JJ") {
        Some('a')
    } else if tag.starts_with("RB") {
        Some('r')
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_lookup() {
        let lex = HypernymLexicon::parse("apple\tn\tapple.n.01\tfruit>food>entity\n").unwrap();
        let e = lex.lookup("apple", 'n').unwrap();
        assert_eq!(e.synset, "apple.n.01");
        assert_eq!(e.hypernym_path, "fruit>food>entity");
        assert!(lex.lookup("apple", 'v').is_none());
        assert!(lex.lookup("pear", 'n').is_none());
    }

    #[test]
    fn empty_file_is_empty_lexicon() {
        assert!(HypernymLexicon::parse("").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = HypernymLexicon::parse("apple\tn\tapple.n.01\tfruit\nbroken line\n").unwrap_err();
        assert!(
            matches!(err, FeatureError::Lexicon { line: 2, .. }),
            "{err}"
        );
        let err = HypernymLexicon::parse("apple\tq\tx\ty\n").unwrap_err();
        assert!(matches!(err, FeatureError::Lexicon { line: 1, .. }));
    }

    #[test]
    fn first_entry_wins() {
        let lex = HypernymLexicon::parse("case\tn\tcase.n.01\ta\ncase\tn\tcase.n.02\tb\n").unwrap();
        assert_eq!(lex.lookup("case", 'n').unwrap().synset, "case.n.01");
    }
}
