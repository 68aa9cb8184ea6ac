use prodyadic::conditions::doubling_constant;
use prodyadic::dyadic::GridConfig;
use prodyadic::measures::gen_cascade;
use prodyadic::Weight64;

const GOLDEN: &str = include_str!("data/cascade_d1x1_k3_seed7.json");

#[test]
fn cascade_generator_reproduces_golden_file() {
    let cfg = GridConfig::new(vec![1, 1], 3).unwrap();
    let w: Weight64 = gen_cascade(&cfg, 2.0, 7).unwrap();
    let text = serde_json::to_string_pretty(&w.to_file()).unwrap() + "\n";
    assert_eq!(text, GOLDEN);
}

#[test]
fn golden_file_round_trips_bit_exactly() {
    let file = serde_json::from_str(GOLDEN).unwrap();
    let w = Weight64::from_file(&file).unwrap();
    assert_eq!(w.config().dims(), &[1, 1]);
    assert_eq!(w.meta().seed, Some(7));
    let again = serde_json::to_string_pretty(&w.to_file()).unwrap() + "\n";
    assert_eq!(again, GOLDEN);
    assert!(doubling_constant(&w).value <= 3.0);
}
