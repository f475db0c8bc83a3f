from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    rows = getattr(mod, "RESULTS", None)
    if not rows:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, label, status, dt, budget, detail in sorted(rows):
        tr.write_line(f"criterion {num:>2}  {status}  {dt:8.2f}s / {budget:g}s  {label} {detail}".rstrip())
