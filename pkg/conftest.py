import re

CRITERIA = {
    1: "fixture exactness",
    2: "registry idempotence and CSV round trip",
    3: "metric oracle equivalence",
    4: "TPE dominance over random search",
    5: "end-to-end study with kill/resume",
    6: "stats oracle equivalence",
    7: "report structure",
    8: "adapter conformance",
}

_PATTERN = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[int, str] = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            match = _PATTERN.search(getattr(report, "nodeid", ""))
            if match:
                number = int(match.group(1))
                if outcomes.get(number) != "FAIL":
                    outcomes[number] = label
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(outcomes):
        name = CRITERIA.get(number, "unknown criterion")
        terminalreporter.write_line(f"[criterion {number}] {name}: {outcomes[number]}")
