use prodyadic::dyadic::{minimal_cube, DyadicCube, GeoBox, GridConfig, Point, Shift};
use prodyadic::measures::{gen_cascade, gen_power, keyed_rng, GridFunction};
use prodyadic::operators::{apply_frac_dyadic, apply_perez, mlinear_form, Kernel};
use prodyadic::oracle::{
    frac_dyadic_direct, mass_direct, minimal_cube_exhaustive, mlinear_direct, perez_direct,
};
use prodyadic::scalar::rel_diff;
use prodyadic::Weight64;
use rand::Rng;

fn random_fn(cfg: &GridConfig, seed: u64) -> GridFunction<f64> {
    let mut rng = keyed_rng(seed, &[77]);
    GridFunction::new(
        cfg,
        (0..cfg.cell_count()).map(|_| rng.random::<f64>()).collect(),
    )
    .unwrap()
}

#[test]
fn minimal_cube_matches_exhaustive_on_every_pair_1d() {
    let scale = 4;
    let top = 3i64 << scale;
    for u in 0..top {
        for v in 0..top {
            if u == v {
                continue;
            }
            let (pu, pv) = (Point::new(vec![u], scale), Point::new(vec![v], scale));
            assert_eq!(
                minimal_cube(&pu, &pv).unwrap(),
                minimal_cube_exhaustive(&pu, &pv).unwrap(),
                "u={u} v={v}"
            );
        }
    }
}

#[test]
fn triple_predicate_is_monotone_along_the_ancestor_chain() {
    for d in 1..=2usize {
        let scale = if d == 1 { 6 } else { 3 };
        let top = 3i64 << scale;
        let step = if d == 1 { 1 } else { 2 };
        let pts: Vec<Vec<i64>> = match d {
            1 => (0..top).map(|a| vec![a]).collect(),
            _ => (0..top)
                .step_by(step)
                .flat_map(|a| (0..top).step_by(step).map(move |b| vec![a, b]))
                .collect(),
        };
        for u in &pts {
            let pu = Point::new(u.clone(), scale);
            for v in pts.iter().step_by(3) {
                if u == v {
                    continue;
                }
                let pv = Point::new(v.clone(), scale);
                let inside: Vec<bool> = (0..=scale + 3)
                    .map(|k| {
                        DyadicCube::standard_containing(&pu, k)
                            .triple()
                            .contains(&pv)
                    })
                    .collect();
                // true on a prefix (coarse levels), false afterwards
                let first_false = inside.iter().position(|&b| !b).unwrap_or(inside.len());
                assert!(inside[first_false..].iter().all(|&b| !b), "u={u:?} v={v:?}");
                assert_eq!(
                    minimal_cube(&pu, &pv).unwrap().level(),
                    first_false as i32 - 1
                );
            }
        }
    }
}

#[test]
fn masses_agree_with_direct_overlap_on_power_weights() {
    let cfg = GridConfig::new(vec![2], 3).unwrap();
    let w: Weight64 = gen_power(&cfg, &[-0.5, 0.5], &[0.3, 0.7]).unwrap();
    let s = cfg.unit_scale();
    let top = cfg.extent();
    let mut rng = keyed_rng(3, &[1]);
    for _ in 0..300 {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..2 {
            let a = rng.random_range(-2..top);
            lo.push(a);
            hi.push(a + rng.random_range(1..top / 2));
        }
        let b = GeoBox::new(lo, hi, s);
        assert!(rel_diff(w.mass_box(&b).unwrap(), mass_direct(&w, &b)) < 1e-12);
    }
}

#[test]
fn operators_agree_with_direct_sums() {
    for dims in [vec![1], vec![2], vec![1, 1]] {
        let cfg = GridConfig::new(dims.clone(), 3).unwrap();
        let mu: Weight64 = gen_cascade(&cfg, 2.5, 4).unwrap();
        let f = random_fn(&cfg, 5);
        for alpha in [0.3, 0.9] {
            let shift = vec![Shift::Zero; cfg.total_dim()];
            let fast = apply_frac_dyadic(&mu, alpha, &f, &shift).unwrap().output;
            let slow = frac_dyadic_direct(&mu, alpha, &f).unwrap();
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!(rel_diff(*a, *b) < 1e-12, "dyadic {dims:?}");
            }
            let fast = apply_perez(&mu, alpha, &f).unwrap().output;
            let slow = perez_direct(&mu, alpha, &f).unwrap();
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!(rel_diff(*a, *b) < 1e-12, "perez {dims:?}");
            }
        }
    }
}

#[test]
fn trilinear_form_agrees_with_direct_sum() {
    let cfg = GridConfig::new(vec![1, 2], 2).unwrap();
    let ws: Vec<Weight64> = (0..3).map(|i| gen_cascade(&cfg, 3.0, i).unwrap()).collect();
    let refs: Vec<&Weight64> = ws.iter().collect();
    let fs: Vec<GridFunction<f64>> = (0..3).map(|i| random_fn(&cfg, 10 + i)).collect();
    let frefs: Vec<&GridFunction<f64>> = fs.iter().collect();
    let k = Kernel::random(ws[0].layout(), 9);
    let fast = mlinear_form(&k, &refs, &frefs).unwrap();
    let slow = mlinear_direct(&k, &refs, &frefs).unwrap();
    assert!(rel_diff(fast, slow) < 1e-12);
}
