"""Shared fixtures: the three reference models and standard parameters.

bm : Brownian motion with variance 2 and drift 0.5 (no jumps)
cl : Cramer-Lundberg, premium 2, claims Exp(1) at rate 1
jd : jump diffusion, sigma 1, drift 1, claims Exp(2) at rate 0.5
"""

import math

import pytest

from snlevy import (JumpComponent, ProblemParams, ScaleContext, candidate,
                    make_model)

BM = make_model(0.5, math.sqrt(2.0), ())
CL = make_model(2.0, 0.0, (JumpComponent(rate=1.0, phase=1.0, weight=1.0),))
JD = make_model(1.0, 1.0, (JumpComponent(rate=0.5, phase=2.0, weight=1.0),))

MODELS = {"bm": BM, "cl": CL, "jd": JD}

STD_PARAMS = ProblemParams(q=0.1, r=1.0, alpha=0.3, beta=1.5)
# bounded variation with beta close to 1 puts the lower barrier at zero
BOUNDARY_PARAMS = ProblemParams(q=0.1, r=1.0, alpha=0.3, beta=1.2)


@pytest.fixture(params=sorted(MODELS), scope="session")
def model_name(request):
    return request.param


@pytest.fixture(scope="session")
def model(model_name):
    return MODELS[model_name]


@pytest.fixture(scope="session")
def params():
    return STD_PARAMS


_CTX_CACHE = {}


def get_ctx(name, q=0.1):
    key = (name, q)
    if key not in _CTX_CACHE:
        _CTX_CACHE[key] = ScaleContext(MODELS[name], q)
    return _CTX_CACHE[key]


@pytest.fixture(scope="session")
def ctx(model_name):
    return get_ctx(model_name)


_CAND_CACHE = {}


def get_candidate(name, prm=STD_PARAMS):
    key = (name, prm)
    if key not in _CAND_CACHE:
        _CAND_CACHE[key] = candidate(get_ctx(name, prm.q), prm)
    return _CAND_CACHE[key]


@pytest.fixture(scope="session")
def cand(model_name, params):
    return get_candidate(model_name, params)


# -- acceptance reporting: one PASS/FAIL line per criterion ------------------

_ACCEPTANCE: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    if "criterion_" not in name:
        return
    key = name.split("[")[0].replace("test_", "")
    _ACCEPTANCE[key] = _ACCEPTANCE.get(key, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        status = "PASS" if _ACCEPTANCE[key] else "FAIL"
        terminalreporter.write_line(f"{status} {key}")
