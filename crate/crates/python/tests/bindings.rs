use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "bn_ergodic").unwrap();
        bn_ergodic_py::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("bn", m).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn rows_and_tables() {
    run(r#"
row = bn.bn_row(4.0, 10)
assert abs(sum(row) - 1) < 1e-12
assert bn.bn_row_exact("4", 2) == ["2/5", "1/3", "4/15"]
t = bn.CoefficientTable.cesaro(5)
assert t.row(5) == [1 / 6] * 6
assert len(t) == 6
"#);
}

#[test]
fn domain_errors_raise_value_error() {
    run(r#"
for f in (lambda: bn.bn_row(2.0, 3), lambda: bn.beta_binomial_row(1.0, 3), lambda: bn.Operator.dense([[2.0]])):
    try:
        f()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#);
}

#[test]
fn operators_and_iteration() {
    run(r#"
op = bn.Operator.composite([(0.5, bn.Operator.rotation(0.3, 3)), (0.5, bn.Operator.identity(3))])
assert op.dim == 3
assert len(op.fixed_point_basis()) == 1
back = bn.Operator.from_json(op.to_json())
assert back.apply([1.0, 2.0, 3.0]) == op.apply([1.0, 2.0, 3.0])
tr = bn.bn_iterate(bn.Operator.identity(2), [1.0, 2.0], 3.0, 50, every_step=True)
assert tr["n"] == list(range(1, 51))
assert all(v == 0.0 for v in tr["res_sq"])
ces = bn.cesaro_iterate(bn.Operator.shift(40), [1.0] + [0.0] * 39, 30, every_step=True)
assert all(abs(n * v - 1) < 1e-12 for n, v in zip(ces["n"], ces["norm_sq"]))
"#);
}
