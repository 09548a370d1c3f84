use rand::SeedableRng;
use std::collections::BTreeMap;

fn main() {
    let text = std::fs::read_to_string("data/alarm.bif").unwrap();
    let net = multicause::io::parse_bif(&text).unwrap();
    let truth = net.dag().pattern();
    let reps = 20;
    let mut missed: BTreeMap<String, usize> = BTreeMap::new();
    let mut spurious: BTreeMap<String, usize> = BTreeMap::new();
    for rep in 0..reps {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + rep);
        let data = net.sample(5000, &mut rng);
        let out = multicause::pc::pc_learn(&data, 0.01, 5).unwrap();
        for e in truth.skeleton().difference(out.pattern.skeleton()) {
            *missed.entry(format!("{}--{}", net.dag().name_of(e.0), net.dag().name_of(e.1))).or_default() += 1;
        }
        for e in out.pattern.skeleton().difference(truth.skeleton()) {
            *spurious.entry(format!("{}--{}", net.dag().name_of(e.0), net.dag().name_of(e.1))).or_default() += 1;
        }
    }
    println!("missed (of {reps}): {missed:?}");
    println!("spurious (of {reps}): {spurious:?}");
}
