use ideaspan_core::engine::template::{ADD_DETAILS_TEMPLATE, GENERATE_ALTERNATIVES_TEMPLATE};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/templates/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn embedded_templates_match_fixture_copies() {
    assert_eq!(ADD_DETAILS_TEMPLATE, fixture("add_details.txt"));
    assert_eq!(GENERATE_ALTERNATIVES_TEMPLATE, fixture("generate_alternatives.txt"));
}
