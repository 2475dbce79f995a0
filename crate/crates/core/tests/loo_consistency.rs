mod common;

#[test]
fn influence_ranks_agree_with_leave_one_out_on_five_corpora() {
    for seed in 0..5 {
        let c = common::if_vs_loo(seed);
        assert!(c.grad_norm < 1e-5, "corpus {seed}: gradient norm {:e}", c.grad_norm);
        assert!(c.spearman >= 0.8, "corpus {seed}: Spearman {}", c.spearman);
    }
}
