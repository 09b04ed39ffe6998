"""Collects one verdict per acceptance criterion and prints them at the end
of the session."""

ACCEPTANCE = {}

CRITERIA = {
    1: "oracle identity suite",
    2: "time-averaged local stationarity on n=6 chains",
    3: "score machinery",
    4: "independent sets vs exact enumeration",
    5: "independent sets at desk scale",
    6: "spiked Wigner at desk scale",
    7: "RGD structure",
    8: "SBM at desk scale",
    9: "byte-identical reruns",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in CRITERIA.items():
        if k in ACCEPTANCE:
            ok, detail = ACCEPTANCE[k]
            tr.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
        else:
            tr.write_line(f"criterion {k}: NOT RUN  {title}")
