use pgakv_core::cypher::{execute, parse_cypher, print_cypher};
use pgakv_testkit::cypher_gen::generate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_scripts_parse_and_decode_as_declared() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..500 {
        let g = generate(&mut rng);
        let script = parse_cypher(&g.text).unwrap_or_else(|e| panic!("script {i}: {e}\n{}", g.text));
        assert_eq!(
            script.relationship_count(),
            g.relationships.len(),
            "script {i}:\n{}",
            g.text
        );
        let graph = execute(&script).unwrap_or_else(|e| panic!("script {i}: {e}\n{}", g.text));
        assert_eq!(graph, g.expected_graph(), "script {i}:\n{}", g.text);
        let printed = print_cypher(&script);
        assert_eq!(
            parse_cypher(&printed).unwrap(),
            script,
            "script {i}:\n{}\n---\n{printed}",
            g.text
        );
    }
}
