from fractions import Fraction

from hypothesis import strategies as st

from gradstable.poly import Polynomial

GALLERY = {
    "x3_minus_y2": ("x^3 - y^2", "xy"),
    "xyz_minus_z4": ("x*y*z - z^4", "xyz"),
    "annulus": ("z*x^2 + z*y^2 + x^2*y^2*z - z^4", "xyz"),
    "cusp_family": ("x^3 + x^2*z - y^2", "xyz"),
    "xyz_quartic": ("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4", "xyz"),
    "four_points": ("-x^2*y^2 - z^4 + x^5", "xyz"),
    "monkey": ("x^3 + 3*x*y^2 + x^2*y^2", "xy"),
}

coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def polynomials(n: int, max_degree: int = 3, max_terms: int = 4):
    exps = st.tuples(*[st.integers(0, max_degree)] * n).filter(lambda e: sum(e) <= max_degree)
    return st.dictionaries(exps, coefficients, max_size=max_terms).map(lambda t: Polynomial(n, t))


def homogeneous_polynomials(n: int, d: int, max_terms: int = 5):
    exps = st.tuples(*[st.integers(0, d)] * n).filter(lambda e: sum(e) == d)
    return st.dictionaries(exps, coefficients, max_size=max_terms).map(lambda t: Polynomial(n, t))


def rational_matrices(n: int):
    entry = st.fractions(min_value=-3, max_value=3, max_denominator=4)
    return st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n)


ONE = Fraction(1)


# -- acceptance reporting --------------------------------------------------

PROPERTY_MIN_CASES = 1000
_property_runs: dict[str, tuple[str, int]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        fn = getattr(item, "obj", None)
        if getattr(fn, "is_hypothesis_test", False):
            item.add_marker("property")


def pytest_runtest_logreport(report):
    if report.when != "call" or "property" not in report.keywords:
        return
    cases = dict(report.user_properties).get("max_examples", 0)
    _property_runs[report.nodeid] = (report.outcome, cases)


def pytest_runtest_setup(item):
    fn = getattr(item, "obj", None)
    if getattr(fn, "is_hypothesis_test", False):
        item.user_properties.append(("max_examples", fn._hypothesis_internal_use_settings.max_examples))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    lines = [f"{'PASS' if ok else 'FAIL'}  {cid}  {detail}" for cid, ok, detail in test_acceptance.RESULTS]
    if _property_runs:
        failed = sorted(k for k, (o, _) in _property_runs.items() if o != "passed")
        few = sorted(k for k, (_, c) in _property_runs.items() if c < PROPERTY_MIN_CASES)
        ok = not failed and not few
        detail = f"{len(_property_runs)} property suites at >= {PROPERTY_MIN_CASES} cases each"
        if failed:
            detail += f"; failed: {failed}"
        if few:
            detail += f"; under {PROPERTY_MIN_CASES} cases: {few}"
        lines.append(f"{'PASS' if ok else 'FAIL'}  AC4.properties  {detail}")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
