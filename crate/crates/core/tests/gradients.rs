mod common;

use common::numeric_checks::{self as nc, Recorder, TOL};

fn check(family: fn(&mut Recorder)) {
    let mut rec = Recorder::default();
    family(&mut rec);
    rec.assert_within(TOL);
}

#[test]
fn message_passing_layer_gradients() {
    check(nc::message_passing_layer_gradients);
}

#[test]
fn discriminator_gradients() {
    check(nc::discriminator_gradients);
}

#[test]
fn generator_gradients_reach_the_layer_only() {
    check(nc::generator_gradients_reach_the_layer_only);
}

#[test]
fn mlp_alignment_gradients() {
    check(nc::mlp_alignment_gradients);
}

#[test]
fn classifier_gradients() {
    check(nc::classifier_gradients);
}

#[test]
fn sparse_product_matches_dense() {
    let worst = nc::sparse_product_deviation(100);
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}
