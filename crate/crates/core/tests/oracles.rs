mod common;

use common::oracles;

#[test]
fn ible_and_cible_match_naive_scorer() {
    oracles::ible_and_cible_match_naive_scorer(120);
}

#[test]
fn evaluate_matches_brute_force_ranking() {
    oracles::evaluate_matches_brute_force_ranking(120);
}

#[test]
fn rule_stats_match_nested_loop_grounding() {
    oracles::rule_stats_match_nested_loop_grounding(120);
}

#[test]
fn exhaustive_mining_matches_per_rule_grounding() {
    oracles::exhaustive_mining_matches_per_rule_grounding(20);
}

#[test]
fn kb_indexes_match_linear_scan() {
    oracles::kb_indexes_match_linear_scan(120);
}
