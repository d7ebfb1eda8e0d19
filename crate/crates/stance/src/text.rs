//! Tokenization, stopwords and the pluggable tagger and lemmatizer.

use std::collections::HashSet;

/// Default Italian stopwords, plus the retweet marker.
pub const ITALIAN_STOPWORDS: &[&str] = &[
    "a", "abbia", "abbiamo", "abbiano", "abbiate", "ad", "agl", "agli", "ai", "al", "all", "alla", "alle", "allo",
    "anche", "avemmo", "avendo", "avesse", "avessero", "avessi", "avessimo", "aveste", "avesti", "avete", "aveva",
    "avevamo", "avevano", "avevate", "avevi", "avevo", "avrai", "avranno", "avrebbe", "avrebbero", "avrei", "avremmo",
    "avremo", "avreste", "avresti", "avrete", "avrà", "avrò", "avuta", "avute", "avuti", "avuto", "c", "che", "chi",
    "ci", "coi", "col", "come", "con", "contro", "cui", "da", "dagl", "dagli", "dai", "dal", "dall", "dalla", "dalle",
    "dallo", "degl", "degli", "dei", "del", "dell", "della", "delle", "dello", "di", "dov", "dove", "e", "ebbe",
    "ebbero", "ebbi", "ed", "era", "erano", "eravamo", "eravate", "eri", "ero", "essendo", "faccia", "facciamo",
    "facciano", "facciate", "faccio", "facemmo", "facendo", "facesse", "facessero", "facessi", "facessimo",
    "faceste", "facesti", "faceva", "facevamo", "facevano", "facevate", "facevi", "facevo", "fai", "fanno", "farai",
    "faranno", "farebbe", "farebbero", "farei", "faremmo", "faremo", "fareste", "faresti", "farete", "farà", "farò",
    "fece", "fecero", "feci", "fosse", "fossero", "fossi", "fossimo", "foste", "fosti", "fu", "fui", "fummo", "furono",
    "gli", "ha", "hai", "hanno", "ho", "i", "il", "in", "io", "l", "la", "le", "lei", "li", "lo", "loro", "lui", "ma",
    "mi", "mia", "mie", "miei", "mio", "ne", "negl", "negli", "nei", "nel", "nell", "nella", "nelle", "nello", "noi",
    "non", "nostra", "nostre", "nostri", "nostro", "o", "per", "perché", "più", "quale", "quanta", "quante", "quanti",
    "quanto", "quella", "quelle", "quelli", "quello", "questa", "queste", "questi", "questo", "sarai", "saranno",
    "sarebbe", "sarebbero", "sarei", "saremmo", "saremo", "sareste", "saresti", "sarete", "sarà", "sarò", "se", "sei",
    "si", "sia", "siamo", "siano", "siate", "siete", "sono", "sta", "stai", "stanno", "stava", "stavano", "stavo",
    "stesse", "stessero", "stessi", "stette", "sto", "su", "sua", "sue", "sugl", "sugli", "sui", "sul", "sull",
    "sulla", "sulle", "sullo", "suo", "suoi", "ti", "tra", "tu", "tua", "tue", "tuo", "tuoi", "tutti", "tutto", "un",
    "una", "uno", "vi", "voi", "vostra", "vostre", "vostri", "vostro", "è", "rt",
];

pub fn default_stopwords() -> HashSet<String> {
    ITALIAN_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Removes URLs and @-mentions from tweet text.
pub fn strip_urls_and_mentions(text: &str) -> String {
    text.split_whitespace()
        .filter(|w| {
            let l = w.to_lowercase();
            !(l.starts_with("http://") || l.starts_with("https://") || l.starts_with("www.") || w.starts_with('@'))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased runs of letters.
pub fn letter_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, token: &str) -> String;
}

/// Leaves tokens unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemma(&self, token: &str) -> String {
        token.to_string()
    }
}

/// Bag-of-words preprocessing: strip URLs and mentions, lowercase, split on
/// non-letters, drop stopwords, lemmatize.
pub struct TextPipeline {
    pub stopwords: HashSet<String>,
    pub lemmatizer: Box<dyn Lemmatizer>,
}

impl Default for TextPipeline {
    fn default() -> Self {
        Self {
            stopwords: default_stopwords(),
            lemmatizer: Box::new(IdentityLemmatizer),
        }
    }
}

impl TextPipeline {
    pub fn tokens(&self, text: &str) -> Vec<String> {
        letter_tokens(&strip_urls_and_mentions(text))
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .map(|t| self.lemmatizer.lemma(&t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PosCounts {
    pub verbs: usize,
    pub nouns: usize,
    pub articles: usize,
}

pub trait Tagger: Send + Sync {
    fn count(&self, text: &str) -> PosCounts;
}

const ARTICLES: &[&str] = &["il", "lo", "la", "i", "gli", "le", "un", "uno", "una", "l'", "un'"];

const VERB_SUFFIXES: &[&str] = &[
    "are", "ere", "ire", "ando", "endo", "ato", "ata", "ati", "ate", "uto", "uta", "uti", "ito", "ita", "iti", "ano",
    "ono", "iamo", "ete", "ava", "eva", "iva", "erà", "irà", "arà",
];

const COMMON_VERBS: &[&str] = &[
    "è", "sono", "ha", "hanno", "ho", "fa", "fanno", "può", "possono", "deve", "devono", "sia", "era", "sta", "va",
];

const NOUN_SUFFIXES: &[&str] = &["zione", "zioni", "tà", "mento", "menti", "ismo", "ista", "ore", "ori", "ezza"];

/// Closed-list articles and suffix rules for verbs and nouns.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicTagger;

impl HeuristicTagger {
    fn words(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in strip_urls_and_mentions(text).split_whitespace() {
            let lower = raw.to_lowercase();
            let word: String = lower
                .trim_matches(|c: char| !c.is_alphabetic() && c != '\'' && c != '’')
                .replace('’', "'");
            if word.starts_with('#') || word.is_empty() {
                continue;
            }
            // elided article: "l'amico" -> "l'", "amico"
            if let Some(pos) = word.find('\'') {
                let (head, tail) = word.split_at(pos + 1);
                out.push(head.to_string());
                if !tail.is_empty() {
                    out.push(tail.to_string());
                }
            } else {
                out.push(word);
            }
        }
        out
    }
}

impl Tagger for HeuristicTagger {
    fn count(&self, text: &str) -> PosCounts {
        let mut c = PosCounts::default();
        for w in Self::words(text) {
            if ARTICLES.contains(&w.as_str()) {
                c.articles += 1;
            } else if COMMON_VERBS.contains(&w.as_str())
                || (w.chars().count() > 4 && VERB_SUFFIXES.iter().any(|s| w.ends_with(s)))
            {
                c.verbs += 1;
            } else if w.chars().count() > 3
                && w.chars().all(char::is_alphabetic)
                && (NOUN_SUFFIXES.iter().any(|s| w.ends_with(s)) || w.ends_with(['a', 'e', 'i', 'o']))
                && !ITALIAN_STOPWORDS.contains(&w.as_str())
            {
                c.nouns += 1;
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_strips_noise() {
        let p = TextPipeline::default();
        let t = p.tokens("RT @mario: Il VACCINO funziona! https://t.co/x #Vaccini www.x.it");
        assert_eq!(t, vec!["vaccino", "funziona", "vaccini"]);
    }

    #[test]
    fn tokens_split_on_non_letters() {
        assert_eq!(letter_tokens("l'amico,del-cuore 42x"), vec!["l", "amico", "del", "cuore", "x"]);
    }

    #[test]
    fn tagger_counts() {
        let c = HeuristicTagger.count("Il governo deve vaccinare l'intera popolazione");
        assert_eq!(c.articles, 2);
        assert_eq!(c.verbs, 2);
        assert_eq!(c.nouns, 3);
    }

    struct Upper;
    impl Lemmatizer for Upper {
        fn lemma(&self, t: &str) -> String {
            t.to_uppercase()
        }
    }

    #[test]
    fn lemmatizer_is_pluggable() {
        let p = TextPipeline {
            lemmatizer: Box::new(Upper),
            ..Default::default()
        };
        assert_eq!(p.tokens("ciao mondo"), vec!["CIAO", "MONDO"]);
    }
}
