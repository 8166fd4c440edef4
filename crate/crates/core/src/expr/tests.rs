use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(src: &str, dim: usize) -> Expression {
    Expression::parse(src, dim).expect("parse")
}

#[test]
fn parse_and_eval_basics() {
    let e = p("0.5*(x1^2+x2^2)", 2);
    assert_eq!(e.eval(&[0.0, 1.0]).unwrap(), 0.5);
    assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 12.5);

    let e = p("x1*x2", 2);
    assert_eq!(e.eval(&[2.0, 3.0]).unwrap(), 6.0);

    let e = p("exp(x1)", 2);
    assert_eq!(e.eval(&[0.0, 7.0]).unwrap(), 1.0);
}

#[test]
fn unknown_identifier_is_rejected() {
    let err = Expression::parse("x3", 2).unwrap_err();
    assert!(err.message.contains("unknown identifier"), "{err}");
    assert_eq!(err.offset, 0);

    let err = Expression::parse("x0", 2).unwrap_err();
    assert!(err.message.contains("unknown identifier"), "{err}");

    let err = Expression::parse("foo(x1)", 2).unwrap_err();
    assert!(err.message.contains("unknown identifier"), "{err}");
}

#[test]
fn syntax_errors_carry_offsets() {
    let err = Expression::parse("x1 + ", 2).unwrap_err();
    assert_eq!(err.offset, 5);

    let err = Expression::parse("x1 + )", 2).unwrap_err();
    assert_eq!(err.offset, 5);

    let err = Expression::parse("exp(x1, x2)", 2).unwrap_err();
    assert!(err.message.contains("exactly one argument"), "{err}");
}

#[test]
fn eval_faults() {
    let e = p("1/x1", 1);
    match e.eval(&[0.0]) {
        Err(EvalError::DivisionByZero { point }) => assert_eq!(point, vec![0.0]),
        other => panic!("expected division fault, got {other:?}"),
    }
    let e = p("ln(x1)", 1);
    assert!(matches!(e.eval(&[-1.0]), Err(EvalError::LogNonPositive { .. })));
    assert!(matches!(e.eval(&[0.0]), Err(EvalError::LogNonPositive { .. })));
    let e = p("sqrt(x1)", 1);
    assert!(matches!(e.eval(&[-1.0]), Err(EvalError::SqrtNegative { .. })));
}

#[test]
fn nan_is_reported_not_propagated() {
    // exp(x1) - exp(x1) is fine, but inf - inf is NaN: build it via overflow.
    let e = p("exp(x1) - exp(x1 + 1/x2)", 2);
    let r = e.eval(&[1000.0, 1e-9]);
    assert!(matches!(r, Err(EvalError::NonFinite { .. })), "{r:?}");
}

#[test]
fn unary_minus_and_power_convention() {
    // -2^2 = -(2^2)
    assert_eq!(p("-2^2", 1).eval(&[0.0]).unwrap(), -4.0);
    assert_eq!(p("(-2)^2", 1).eval(&[0.0]).unwrap(), 4.0);
    assert_eq!(p("-x1^2", 1).eval(&[3.0]).unwrap(), -9.0);
    // Non-integer exponents desugar through exp/ln.
    let e = p("x1^0.5", 1);
    assert!((e.eval(&[4.0]).unwrap() - 2.0).abs() < 1e-15);
    assert!(matches!(e.eval(&[-4.0]), Err(EvalError::LogNonPositive { .. })));
    // Negative integer exponent.
    assert_eq!(p("x1^-2", 1).eval(&[2.0]).unwrap(), 0.25);
}

#[test]
fn derivative_matches_hand_results() {
    let e = p("0.5*(x1^2+x2^2)", 2);
    let d1 = e.differentiate(0);
    for &x in &[[0.3, -1.2], [2.0, 5.0], [-0.7, 0.1]] {
        assert!((d1.eval(&x).unwrap() - x[0]).abs() < 1e-15);
    }
    let e = p("x1*x2", 2);
    let d2 = e.differentiate(1);
    assert_eq!(d2, p("x1", 2));
}

#[test]
fn divergence_examples() {
    // ell_+ = (x1*x2, -x1^2) has divergence x2.
    let v = VectorExpression::new(vec![p("x1*x2", 2), p("-(x1^2)", 2)]).unwrap();
    let div = v.divergence();
    for &x in &[[0.0, 1.0], [2.0, -3.0], [0.5, 0.25]] {
        assert_eq!(div.eval(&x).unwrap(), x[1]);
    }

    let zero = VectorExpression::zero(2);
    assert!(zero.divergence().is_zero());

    let id = VectorExpression::new(vec![p("x1", 2), p("x2", 2)]).unwrap();
    assert_eq!(id.divergence().as_constant(), Some(2.0));
}

#[test]
fn vector_expression_validates_arity() {
    assert!(matches!(
        VectorExpression::new(vec![p("x1", 2)]),
        Err(VectorError::ComponentDim { .. })
    ));
    assert!(VectorExpression::new(vec![p("x1", 2), p("x2", 2)]).is_ok());
}

/// Central finite difference, the independent oracle for symbolic
/// differentiation (step 1e-5).
fn fd_partial(e: &Expression, x: &[f64], i: usize) -> f64 {
    let h = 1e-5;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h)
}

/// Random polynomial in `dim` variables: a sum of monomials with small
/// integer powers and uniform coefficients.
fn random_polynomial(rng: &mut ChaCha8Rng, dim: usize) -> Expression {
    let terms = rng.random_range(1..=5);
    let mut acc = Expression::constant(dim, rng.random_range(-2.0..2.0));
    for _ in 0..terms {
        let mut mono = Expression::constant(dim, rng.random_range(-3.0..3.0));
        for v in 0..dim {
            let pw = rng.random_range(0..=3);
            if pw > 0 {
                mono = Expression::mul(mono, Expression::pow(Expression::var(dim, v), pw));
            }
        }
        acc = Expression::add(acc, mono);
    }
    acc
}

#[test]
fn derivative_vs_finite_difference_on_random_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let dim = rng.random_range(1..=3);
        let e = random_polynomial(&mut rng, dim);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        for i in 0..dim {
            let sym = e.differentiate(i).eval(&x).unwrap();
            let fd = fd_partial(&e, &x, i);
            let rel = (sym - fd).abs() / sym.abs().max(1.0);
            assert!(rel < 1e-6, "dim={dim} i={i} sym={sym} fd={fd} rel={rel} e={e}");
        }
    }
}

#[test]
fn gradient_vs_finite_difference_smooth_functions() {
    // 100 random points in [-2,2]^d for a mix of function kinds.
    let d = 2;
    let funcs = [
        p("0.5*(x1^2+x2^2)", d),
        p("exp(x1*x2) + sin(x1) * cos(x2)", d),
        p("tanh(x1) + x2^3 / (4 + x1^2)", d),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        for e in &funcs {
            for i in 0..d {
                let sym = e.differentiate(i).eval(&x).unwrap();
                let fd = fd_partial(e, &x, i);
                let rel = (sym - fd).abs() / sym.abs().max(1.0);
                assert!(rel < 1e-6, "f={e} x={x:?} i={i} sym={sym} fd={fd}");
            }
        }
    }
}

#[test]
fn derivative_is_linear() {
    let d = 2;
    let e1 = p("exp(x1*x2)", d);
    let e2 = p("sin(x1) + x2^2", d);
    let a = 3.5;
    let combo = Expression::add(
        Expression::mul(Expression::constant(d, a), e1.clone()),
        e2.clone(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        for i in 0..d {
            let lhs = combo.differentiate(i).eval(&x).unwrap();
            let rhs = a * e1.differentiate(i).eval(&x).unwrap() + e2.differentiate(i).eval(&x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn hessian_is_symmetric_when_evaluated() {
    let d = 3;
    let e = p("exp(x1*x2) + sin(x2*x3) + x1^3*x3", d);
    let hess = e.hessian();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..d {
            for j in 0..d {
                let hij = hess[i][j].eval(&x).unwrap();
                let hji = hess[j][i].eval(&x).unwrap();
                assert!((hij - hji).abs() < 1e-12 * hij.abs().max(1.0));
            }
        }
    }
}

#[test]
fn substitute_composes() {
    // f(x1,x2) = x1^2 + x2, substitute x1 -> sin(t), x2 -> t^2 (t = 1-d var).
    let f = p("x1^2 + x2", 2);
    let g = f.substitute(&[p("sin(x1)", 1), p("x1^2", 1)]);
    let t = 0.7;
    let expected = (t.sin()).powi(2) + t * t;
    assert!((g.eval(&[t]).unwrap() - expected).abs() < 1e-15);
    assert_eq!(g.dim(), 1);
}

#[test]
fn compiled_program_agrees_with_tree_eval() {
    let exprs = [
        p("0.5*(x1^2+x2^2)", 2),
        p("exp(x1*x2) - sin(x1)/cos(x2 + 4)", 2),
        p("tanh(x1^3) * sqrt(4 + x2^2)", 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut stack = Vec::new();
    for e in &exprs {
        let prog = e.compile();
        for _ in 0..50 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            assert_eq!(prog.eval(&x, &mut stack).unwrap(), e.eval(&x).unwrap());
        }
    }
}

#[test]
fn compiled_program_reports_faults() {
    let e = p("1/x1", 1);
    let prog = e.compile();
    let mut stack = Vec::new();
    assert!(matches!(
        prog.eval(&[0.0], &mut stack),
        Err(EvalError::DivisionByZero { .. })
    ));
}

// ---------------------------------------------------------------------------
// property tests
// ---------------------------------------------------------------------------

const PROP_DIM: usize = 3;

fn arb_expression() -> impl Strategy<Value = Expression> {
    let leaf = prop_oneof![
        (-8i32..8).prop_map(|k| Expression::constant(PROP_DIM, f64::from(k) / 2.0)),
        (0..PROP_DIM).prop_map(|i| Expression::var(PROP_DIM, i)),
    ];
    leaf.prop_recursive(5, 64, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::div(a, b)),
            (inner.clone(), -3i32..5).prop_map(|(a, n)| Expression::pow(a, n)),
            inner.clone().prop_map(|a| Expression::neg(a)),
            (
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Ln),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Sqrt),
                    Just(Func::Tanh)
                ],
                inner
            )
                .prop_map(|(f, a)| Expression::fun(f, a)),
        ]
    })
}

proptest! {
    /// Printing then re-parsing yields a structurally identical tree.
    #[test]
    fn print_parse_round_trip(e in arb_expression()) {
        let printed = e.to_string();
        let reparsed = Expression::parse(&printed, PROP_DIM)
            .unwrap_or_else(|err| panic!("re-parse of '{printed}' failed: {err}"));
        prop_assert_eq!(&reparsed, &e, "printed form: {}", printed);
    }

    /// Differentiation never panics and yields an expression of the same dimension.
    #[test]
    fn differentiate_total_on_grammar(e in arb_expression(), var in 0..PROP_DIM) {
        let d = e.differentiate(var);
        prop_assert_eq!(d.dim(), PROP_DIM);
    }
}
