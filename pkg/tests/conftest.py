import json

import pytest

from nicholson.model import load_model


def cf(expr, **kw):
    d = {"expr": expr if isinstance(expr, str) else repr(float(expr)),
         "class": "constant"}
    d.update(kw)
    return d


def pf(expr, period=1.0, **kw):
    d = {"expr": expr, "class": "periodic", "period": period}
    d.update(kw)
    return d


def gf(expr, scan, **kw):
    d = {"expr": expr, "class": "generic", "scan": list(scan)}
    d.update(kw)
    return d


def simple_model(p="e", a="1", tau="1", sigma="1", delta="1", **extra):
    doc = {
        "t0": 0.0,
        "delta": cf(delta) if isinstance(delta, str) else delta,
        "terms": [{
            "p": cf(p) if isinstance(p, str) else p,
            "a": cf(a) if isinstance(a, str) else a,
            "tau": cf(tau) if isinstance(tau, str) else tau,
            "sigma": cf(sigma) if isinstance(sigma, str) else sigma,
        }],
    }
    doc.update(extra)
    return load_model(doc)


@pytest.fixture
def classic():
    return simple_model()


@pytest.fixture
def tmp_model_file(tmp_path):
    def write(doc, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return write
