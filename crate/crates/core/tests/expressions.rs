use lfdecouple::funcspec::{parse, parse_constant};
use lfdecouple::{Complex64, Error};

const VARS: [&str; 6] = ["s", "t", "x", "y", "z", "w"];

const CORPUS: &[&str] = &[
    "x*y + x*z + y*z",
    "x*y+x*z+y*z",
    "(t^2+s-2)/(t^2+2*s+1)",
    "x^2 + s*x*z + t*z^2 + 1",
    "5",
    "-x^2",
    "(-x)^2",
    "--x",
    "-(s + t)*-(x - y)",
    "s - (t - x)",
    "s - t - x",
    "s/(t*x)",
    "s/t/x",
    "s*(t/x)",
    "(s*t)/x",
    "1/(s+1)",
    "2.5e-3*s + 1i",
    "3i*x - 0.125*y^3",
    "((s))",
    "(s + 1)^3/(t^2 + 2*s + 1)",
    "x^0 + y^1 + z^10",
    "1e10*w - 1E-10",
    "(s - t)*(s + t) - s^2 + t^2",
    "w/(w^2 + 1/(w + 2))",
    "-1 - -1",
];

#[test]
fn printed_expressions_reparse_identically() {
    assert!(CORPUS.len() >= 20);
    for src in CORPUS {
        let f = parse(src, &VARS).unwrap();
        let printed = f.to_string();
        let again = parse(&printed, &VARS).unwrap_or_else(|e| panic!("{src} -> {printed}: {e}"));
        assert_eq!(f.expr(), again.expr(), "{src} -> {printed}");
        assert_eq!(again.to_string(), printed);
    }
}

#[test]
fn printed_expressions_evaluate_identically() {
    let point: Vec<Complex64> = (0..VARS.len())
        .map(|i| Complex64::new(0.3 + 0.17 * i as f64, 0.05 * i as f64))
        .collect();
    for src in CORPUS {
        let f = parse(src, &VARS).unwrap();
        let g = parse(&f.to_string(), &VARS).unwrap();
        assert_eq!(
            f.evaluate(&point).unwrap(),
            g.evaluate(&point).unwrap(),
            "{src}"
        );
    }
}

#[test]
fn constants_for_node_lists() {
    assert_eq!(parse_constant("1/4").unwrap(), Complex64::new(0.25, 0.0));
    assert_eq!(parse_constant("-2").unwrap(), Complex64::new(-2.0, 0.0));
    assert!(matches!(
        parse_constant("x"),
        Err(Error::UnknownVariable(_))
    ));
}
