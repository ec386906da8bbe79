use cknet_core::acceptance;

#[test]
fn acceptance() {
    let outcomes = acceptance::run_all();
    assert_eq!(outcomes.len(), 11);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.ok).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
