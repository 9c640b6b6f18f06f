//! The file contract an embedding extractor has to meet.

pub const CONTRACT: &str = r#"jabberprobe extractor contract
==============================

Layout, per model id under `embeddings_dir`:

  {model}/{split}.layer{L}.jemb     subword-level hidden states of layer L
  {model}/{split}.align.jsonl       one alignment record per sentence

  split is one of: train, dev, test, jabberwocky
  L runs over 0, 4, ..., 24 for a 24-layer model (7 files per split);
  layer 0 is always required.

The model ids `fastpos`, `path` and `majority` are reserved.

JEMB (all integers little-endian)
---------------------------------
  4 bytes   magic "JEMB"
  u32       version = 1
  u32       metadata length M
  M bytes   UTF-8 JSON {"model": str, "layer": int, "dim": int, "split": str}
  u32       sentence count S
  S times:
    u16     sent_id length I
    I bytes UTF-8 sent_id (matches `# sent_id` in the CoNLL-U corpus)
    u32     row count R (subwords, specials excluded)
    R*dim   f32 IEEE-754, row-major

  No trailing bytes. Every value must be finite. Removed sentences are
  absent from every JEMB file.

Alignment JSONL
---------------
One JSON object per line:

  {"sent_id": "...", "status": "ok",
   "merges": [[3, 4]],
   "token_map": [[0, 1], [1, 3], ...]}
  {"sent_id": "...", "status": "removed", "reason": "..."}

  merges     groups of contiguous 1-based UD token ids that the tokenizer
             keeps together; each group becomes one token, attached where
             its first externally attached member was
  token_map  one half-open [start, end) span of JEMB rows per token of the
             merged sentence, in order, disjoint, covering all R rows
  The first row of each span is used as the token's vector.

Position table
--------------
A JEMB file holding exactly one pseudo-sentence whose rows are the absolute
position embeddings of the base checkpoint (dim 768). Row i is used for the
i-th word of a sentence, counting from 0. Sentences longer than the table
are skipped by the Fast+Pos baseline.

Word vectors for Fast+Pos use the text format: a "count dim" header line,
then "word v1 ... v300" per line.
"#;

pub fn run() {
    print!("{CONTRACT}");
}
