// Walks one tweet through every preprocessing stage, then runs the whole
// corpus through the chain: cleaning, tokenization, stopword removal,
// bigram phrase promotion and stemming.

use std::fs;
use std::path::Path;

use topiclab::ingest::{parse_record, ParsedRecord};
use topiclab::preprocess::{
    apply_phrases, clean_text, learn_phrases, porter_stem, preprocess_corpus, remove_stopwords,
    tokenize, StopwordSet,
};

fn main() -> anyhow::Result<()> {
    let data = Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/sample_tweets.jsonl"
    ));
    let mut docs = Vec::new();
    for line in fs::read_to_string(data)?.lines() {
        if let ParsedRecord::Tweet(doc) = parse_record(line)? {
            docs.push(doc);
        }
    }
    println!("parsed {} tweets (skips dropped)", docs.len());

    let stops = StopwordSet::standard();
    let sample = &docs[4];
    println!("\nraw:      {}", sample.text);
    let cleaned = clean_text(&sample.text);
    println!("cleaned:  {cleaned}");
    let tokens = tokenize(&cleaned);
    println!("tokens:   {tokens:?}");
    let kept = remove_stopwords(tokens, &stops);
    println!("stopped:  {kept:?}");
    let stemmed: Vec<String> = kept.iter().map(|t| porter_stem(t)).collect();
    println!("stemmed:  {stemmed:?}");

    // Phrase promotion needs corpus-level bigram counts; a lower min_count
    // suits this small corpus.
    let stopped: Vec<Vec<String>> = docs
        .iter()
        .map(|d| remove_stopwords(tokenize(&clean_text(&d.text)), &stops))
        .collect();
    let phrases = learn_phrases(&stopped, 2, 1.0);
    let mut promoted: Vec<String> = stopped
        .iter()
        .flat_map(|doc| apply_phrases(doc, &phrases))
        .filter(|t| t.contains('_'))
        .collect();
    promoted.sort();
    promoted.dedup();
    println!(
        "\npromoted {} distinct bigram phrases over {} unigram types, e.g.:",
        promoted.len(),
        phrases.vocab_size()
    );
    for token in promoted.iter().take(8) {
        println!("  {token}");
    }

    let (tokenized, _) = preprocess_corpus(&docs, &stops, 2, 1.0);
    println!("\nfull chain over the corpus:");
    for doc in tokenized.iter().take(3) {
        println!("  [{}] {:?}", doc.doc_id, doc.tokens);
    }
    Ok(())
}
