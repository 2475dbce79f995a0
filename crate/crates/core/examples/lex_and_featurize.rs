//! Tokenize a C snippet and turn it into a hashed, L2-normalized feature vector.
//!
//! Run with `cargo run --example lex_and_featurize`.

use codeclean::corpus::{featurize, stable_hash, tokenize_with_diagnostics};

const SOURCE: &str = r#"
int main() {
    int n, s = 0;
    scanf("%d", &n);
    for (int i = 0; i < n; i++) s += i; /* sum */
    printf("%d\n", s >= 10 ? s : -1);
    return 0;
}
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let lexed = tokenize_with_diagnostics(SOURCE);
    println!("{} tokens, unterminated literal: {}", lexed.tokens.len(), lexed.unterminated);
    println!("{}", lexed.tokens.join(" "));

    // Multi-character operators survive as one token, literals collapse.
    assert!(lexed.tokens.iter().any(|t| t == "++"));
    assert!(lexed.tokens.iter().any(|t| t == ">="));
    assert!(lexed.tokens.iter().any(|t| t == "<STR>"));
    assert!(!lexed.tokens.iter().any(|t| t.contains("sum")));

    let dim = 1 << 10;
    let fv = featurize(&lexed.tokens, dim);
    println!("{} non-zero buckets of {dim}, norm {:.6}", fv.nnz(), fv.norm());
    assert!((fv.norm() - 1.0).abs() < 1e-12);

    // The hash is FNV-1a 64, so bucket assignment never depends on the platform.
    let h = stable_hash("for");
    println!("bucket of `for`: {} (hash {h:#018x})", h % dim as u64);
    assert_eq!(stable_hash("a"), 0xaf63dc4c8601ec8c);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
