import functools

from egstokes.assembly import DiscretizationParams, assemble_system
from egstokes.mesh import generate_unit_square, import_mesh
from egstokes.harness import fixture_mesh_path
from egstokes.problems import boundary_for, builtin_problem


@functools.lru_cache(maxsize=None)
def square(level, example="ex1"):
    return generate_unit_square(level, boundary_for(example))


@functools.lru_cache(maxsize=None)
def system(level, example="ex1", theta=0, alpha=1.0, penalty="mu"):
    mesh = square(level, example)
    return assemble_system(mesh, builtin_problem(example),
                           DiscretizationParams(theta, alpha, penalty))


@functools.lru_cache(maxsize=None)
def obstacle():
    return import_mesh(fixture_mesh_path())


ACCEPTANCE_LINES = []


def record_acceptance(cid: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} {cid}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
