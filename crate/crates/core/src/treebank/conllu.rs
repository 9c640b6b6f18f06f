//! CoNLL-U reading and writing.
//!
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped on
//! read, so the resulting trees are over syntactic words only.

use std::fmt::Write as _;

use thiserror::Error;

use super::{check_tree, Features, Misc, Sentence, Token, TreeError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("line {line} (sentence {sent_id}): expected 10 tab-separated columns, found {found}")]
    ColumnCount { sent_id: String, line: usize, found: usize },
    #[error("line {line} (sentence {sent_id}): token id `{value}` is not an integer")]
    BadIndex {
        sent_id: String,
        line: usize,
        value: String,
    },
    #[error("line {line} (sentence {sent_id}): head `{value}` is not an integer")]
    BadHead {
        sent_id: String,
        line: usize,
        value: String,
    },
    #[error("line {line} (sentence {sent_id}): {message}")]
    BadFeatures {
        sent_id: String,
        line: usize,
        message: String,
    },
    #[error("line {line} (sentence {sent_id}): {source}")]
    Tree {
        sent_id: String,
        line: usize,
        source: TreeError,
    },
}

#[derive(Default)]
struct Block {
    comments: Vec<String>,
    tokens: Vec<Token>,
    token_lines: Vec<usize>,
    sent_id: Option<String>,
    first_line: usize,
}

impl Block {
    fn label(&self, ordinal: usize) -> String {
        self.sent_id.clone().unwrap_or_else(|| format!("s{ordinal}"))
    }
}

/// Parses a whole CoNLL-U document.
pub fn parse_conllu(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut block = Block::default();

    for (offset, raw) in text.lines().enumerate() {
        let line_no = offset + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish_block(std::mem::take(&mut block), &mut sentences)?;
            continue;
        }
        if block.comments.is_empty() && block.tokens.is_empty() {
            block.first_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    block.sent_id = Some(value.trim().to_string());
                }
            }
            block.comments.push(comment.to_string());
            continue;
        }
        let label = block.label(sentences.len() + 1);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::ColumnCount {
                sent_id: label,
                line: line_no,
                found: cols.len(),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index = cols[0].parse().map_err(|_| ConlluError::BadIndex {
            sent_id: label.clone(),
            line: line_no,
            value: cols[0].to_string(),
        })?;
        let head = cols[6].parse().map_err(|_| ConlluError::BadHead {
            sent_id: label.clone(),
            line: line_no,
            value: cols[6].to_string(),
        })?;
        let feats = Features::parse(cols[5]).map_err(|message| ConlluError::BadFeatures {
            sent_id: label.clone(),
            line: line_no,
            message,
        })?;
        block.tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats,
            head,
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: Misc::parse(cols[9]),
        });
        block.token_lines.push(line_no);
    }
    finish_block(block, &mut sentences)?;
    Ok(sentences)
}

fn finish_block(block: Block, sentences: &mut Vec<Sentence>) -> Result<(), ConlluError> {
    if block.tokens.is_empty() {
        return Ok(());
    }
    let label = block.label(sentences.len() + 1);
    if let Err(source) = check_tree(&block.tokens) {
        let line = match &source {
            TreeError::IndexOutOfOrder { position, .. } => block.token_lines[position - 1],
            TreeError::HeadOutOfRange { token, .. } | TreeError::SelfLoop { token } | TreeError::Cycle { token } => {
                block
                    .tokens
                    .iter()
                    .position(|t| t.index == *token)
                    .map_or(block.first_line, |p| block.token_lines[p])
            }
            TreeError::Empty | TreeError::RootCount(_) => block.first_line,
        };
        return Err(ConlluError::Tree {
            sent_id: label,
            line,
            source,
        });
    }
    sentences.push(Sentence {
        sent_id: label,
        comments: block.comments,
        tokens: block.tokens,
    });
    Ok(())
}

/// Serializes sentences, each followed by a blank line.
pub fn write_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for comment in &sentence.comments {
            out.push('#');
            out.push_str(comment);
            out.push('\n');
        }
        for t in &sentence.tokens {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.index, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENJOYED: &str = "# sent_id = enjoyed\n\
# text = I enjoyed your presentations very much\n\
1\tI\tI\tPRON\tPRP\tCase=Nom|Number=Sing|Person=1|PronType=Prs\t2\tnsubj\t2:nsubj\t_\n\
2\tenjoyed\tenjoy\tVERB\tVBD\tMood=Ind|Tense=Past|VerbForm=Fin\t0\troot\t0:root\t_\n\
3\tyour\tyou\tPRON\tPRP$\tPerson=2|Poss=Yes|PronType=Prs\t4\tnmod:poss\t4:nmod:poss\t_\n\
4\tpresentations\tpresentation\tNOUN\tNNS\tNumber=Plur\t2\tobj\t2:obj\t_\n\
5\tvery\tvery\tADV\tRB\t_\t6\tadvmod\t6:advmod\t_\n\
6\tmuch\tmuch\tADV\tRB\t_\t2\tadvmod\t2:advmod\t_\n\n";

    #[test]
    fn parses_enjoyed_sentence() {
        let sentences = parse_conllu(ENJOYED).unwrap();
        assert_eq!(sentences.len(), 1);
        let s = &sentences[0];
        assert_eq!(s.sent_id(), "enjoyed");
        assert_eq!(s.len(), 6);
        let root: Vec<_> = s.tokens().iter().filter(|t| t.head == 0).collect();
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].index, 2);
        assert_eq!(root[0].form, "enjoyed");
        assert_eq!(
            s.tokens().iter().map(|t| t.head).collect::<Vec<_>>(),
            vec![2, 0, 4, 2, 6, 2]
        );
    }

    #[test]
    fn round_trips_text() {
        let sentences = parse_conllu(ENJOYED).unwrap();
        assert_eq!(write_conllu(&sentences), ENJOYED);
    }

    #[test]
    fn empty_document() {
        assert!(parse_conllu("").unwrap().is_empty());
        assert!(parse_conllu("\n\n").unwrap().is_empty());
    }

    #[test]
    fn skips_multiword_and_empty_nodes() {
        let text = "# sent_id = mw\n\
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\tVBP\t_\t3\taux\t_\t_\n\
2\tn't\tnot\tPART\tRB\t_\t3\tadvmod\t_\t_\n\
3\tgo\tgo\tVERB\tVB\tVerbForm=Inf\t0\troot\t_\t_\n\
3.1\tgone\tgo\tVERB\t_\t_\t_\t_\t3:x\t_\n\n";
        let s = &parse_conllu(text).unwrap()[0];
        assert_eq!(s.len(), 3);
        assert_eq!(s.tokens()[0].form, "do");
    }

    #[test]
    fn self_headed_token_is_an_error() {
        let text = "# sent_id = bad\n1\ta\ta\tX\t_\t_\t1\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        match parse_conllu(text).unwrap_err() {
            ConlluError::Tree { sent_id, line, source } => {
                assert_eq!(sent_id, "bad");
                assert_eq!(line, 2);
                assert_eq!(source, TreeError::SelfLoop { token: 1 });
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        let text = "# sent_id = x\n1\ta\ta\tX\n";
        assert!(matches!(
            parse_conllu(text),
            Err(ConlluError::ColumnCount { line: 2, found: 4, .. })
        ));
        let text = "# sent_id = x\n1\ta\ta\tX\t_\t_\tnope\tdep\t_\t_\n";
        assert!(matches!(parse_conllu(text), Err(ConlluError::BadHead { line: 2, .. })));
        let text = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(matches!(
            parse_conllu(text),
            Err(ConlluError::Tree {
                source: TreeError::RootCount(0),
                ..
            })
        ));
    }
}
