import contextlib
import time

# criterion number -> (title, passed, detail, seconds)
ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title, extra_seconds=0.0):
    """Record one acceptance criterion; the block's assertions decide pass/fail."""
    start = time.perf_counter()
    info = {}
    try:
        yield info
    except BaseException as exc:
        secs = time.perf_counter() - start + extra_seconds
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        ACCEPTANCE[number] = (title, False, msg[:160], secs)
        raise
    secs = time.perf_counter() - start + extra_seconds
    ACCEPTANCE[number] = (title, True, info.get("detail", ""), secs)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail, secs = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'} [{secs:6.1f}s] {title}: {detail}")
