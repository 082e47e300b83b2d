fn main() {
    use rcreach_core::polytope::{HPolytope, LinearConstraint, Sense};
    let p: HPolytope<f64> = HPolytope::from_rows(
        2,
        vec![
            LinearConstraint::new(vec![1.0, 0.0], 1.0),
            LinearConstraint::new(vec![-1.0, 0.0], 0.0),
            LinearConstraint::new(vec![0.0, 1.0], 2.0),
            LinearConstraint::new(vec![0.0, -1.0], 0.0),
        ],
    )
    .unwrap();
    println!("built: {:?}", p.constraints().len());
    let r = p.lp_optimize(&[1.0, 1.0], Sense::Max);
    println!("{r:?}");
}
