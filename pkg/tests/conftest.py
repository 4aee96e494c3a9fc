import pytest

from bsnlab import assemble_operators, build_named_domain, build_space, parse_domain


def make_ops(domain: str, p: int, n: int, scheme: str | None = None, penalty: float | None = None):
    name = parse_domain(domain)
    mesh = build_named_domain(name, n)
    scheme = scheme or ("Hermite3" if name.dim == 1 else "P2")
    space = build_space(mesh, p, scheme)
    return assemble_operators(space) if penalty is None else assemble_operators(space, penalty)


@pytest.fixture(scope="session")
def ops_factory():
    cache = {}

    def get(domain, p, n, scheme=None):
        key = (domain, p, n, scheme)
        if key not in cache:
            cache[key] = make_ops(domain, p, n, scheme)
        return cache[key]
    return get


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns the pass flag for asserting."""
    lines = request.config.stash[_CRITERIA]

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
