//! Scenario parsing and magnetic-field properties, exercised through
//! the public API.

use hlab_core::model::{
    magnetic_field, parse_scenario, preset, preset_text, preset_with_lambda, PRESET_NAMES,
};
use proptest::prelude::*;

fn two_d_magnetic(c1: f64, c2: f64, c3: f64) -> String {
    format!(
        "[scenario]\n\
         dimension = 2\n\
         lambda = 1\n\
         epsilon = 0.1\n\
         [fields]\n\
         b = \"{c1}*x2/(1+r^2) + {c3}*x1\", \"{c2}*x1/(1+r^2) + {c3}*x2\"\n"
    )
}

proptest! {
    /// B_jk = ∂_j b_k − ∂_k b_j is antisymmetric whatever b is.
    #[test]
    fn b_matrix_is_antisymmetric(
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        c3 in -1.0f64..1.0,
        px in 0.2f64..6.0,
        py in -6.0f64..6.0,
    ) {
        let sc = parse_scenario(&two_d_magnetic(c1, c2, c3)).unwrap();
        let bf = magnetic_field(&sc, &[px, py]).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let sum = bf.b_matrix[j][k] + bf.b_matrix[k][j];
                prop_assert!(
                    sum.abs() < 1e-6 * (1.0 + bf.max_entry()),
                    "B[{j}][{k}] + B[{k}][{j}] = {sum}"
                );
            }
        }
    }

    /// A pure gauge b = ∇χ has vanishing field strength.
    #[test]
    fn gradient_fields_carry_no_field_strength(
        c in -3.0f64..3.0,
        px in 0.3f64..5.0,
        py in -5.0f64..5.0,
    ) {
        // χ = c·x₁x₂ → b = (c·x₂, c·x₁)
        let text = format!(
            "[scenario]\n\
             dimension = 2\n\
             lambda = 1\n\
             epsilon = 0.1\n\
             [fields]\n\
             b = \"{c}*x2\", \"{c}*x1\"\n"
        );
        let sc = parse_scenario(&text).unwrap();
        let bf = magnetic_field(&sc, &[px, py]).unwrap();
        prop_assert!(
            bf.max_entry() < 1e-5 * (1.0 + c.abs()),
            "pure gauge left |B| = {}",
            bf.max_entry()
        );
    }
}

#[test]
fn every_preset_parses_and_round_trips() {
    for name in PRESET_NAMES {
        let rc = preset(name).unwrap_or_else(|e| panic!("preset {name}: {e}"));
        // the rendered text re-parses to the same scenario parameters
        let text = preset_text(name, None).unwrap();
        let sc2 = parse_scenario(&text).unwrap();
        assert_eq!(rc.scenario.dimension, sc2.dimension, "{name}");
        assert_eq!(rc.scenario.lambda, sc2.lambda, "{name}");
        assert_eq!(rc.scenario.epsilon, sc2.epsilon, "{name}");
        assert_eq!(
            rc.scenario.collar.map(|c| c.strength),
            sc2.collar.map(|c| c.strength),
            "{name}"
        );
    }
}

#[test]
fn lambda_override_rescales_dependent_quantities() {
    let base = preset("saito").unwrap();
    let scaled = preset_with_lambda("saito", 8.0).unwrap();
    assert_eq!(scaled.scenario.lambda, 8.0);
    // the collar strength tracks 1.25·√λ
    let strength = |rc: &hlab_core::model::RunConfig| rc.scenario.collar.unwrap().strength;
    let expected = strength(&base) * (8.0f64 / base.scenario.lambda).sqrt();
    assert!((strength(&scaled) - expected).abs() < 1e-12);
}

#[test]
fn unknown_preset_is_a_config_error() {
    let err = preset("plutonium").unwrap_err();
    assert!(matches!(err, hlab_core::Error::Config(_)));
    assert!(err.to_string().contains("free"), "error should list the catalog: {err}");
}

#[test]
fn parse_errors_carry_position() {
    // malformed scalar key: config error naming the line
    let err = parse_scenario("[scenario]\ndimension = banana\n").unwrap_err();
    assert!(matches!(err, hlab_core::Error::Config(_)), "got {err:?}");
    assert!(err.to_string().contains("line 2"), "got {err}");
    // malformed expression inside a field: wrapped with both the config
    // line and the in-expression position
    let err = parse_scenario(
        "[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0.1\n[fields]\nn = \"1 + * 2\"\n",
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 6") && msg.contains("1:5"), "got {msg}");
    // the expression parser itself reports a positioned error
    let err = hlab_core::model::FieldExpr::parse("1 + * 2").unwrap_err();
    assert!(matches!(err, hlab_core::Error::Parse { col: 5, .. }), "got {err:?}");
}

#[test]
fn collar_raises_epsilon_only_near_the_boundary() {
    let sc = parse_scenario(
        "[scenario]\n\
         dimension = 2\n\
         lambda = 1\n\
         epsilon = 0.1\n\
         [solver]\n\
         collar_strength = 1.25\n",
    )
    .unwrap();
    let l = 16.0;
    assert!((sc.epsilon_at(&[0.0, 0.0], l) - 0.1).abs() < 1e-15);
    assert!((sc.epsilon_at(&[4.0, 4.0], l) - 0.1).abs() < 1e-15);
    // full strength on the boundary sup-norm shell
    assert!((sc.epsilon_at(&[16.0, 0.0], l) - 1.35).abs() < 1e-12);
    // strictly between at 75% of the way out
    let mid = sc.epsilon_at(&[12.0, 0.0], l);
    assert!(mid > 0.1 && mid < 1.35, "collar mid value {mid}");
}

#[test]
fn magnetic_field_rejects_the_origin() {
    let sc = parse_scenario(&two_d_magnetic(0.2, -0.2, 0.0)).unwrap();
    assert!(magnetic_field(&sc, &[0.0, 0.0]).is_err());
}
